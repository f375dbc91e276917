//! Run configuration: precision parameters, the frame, and the cache of
//! measured constants. Consistency (one p everywhere, theta headroom) is
//! enforced at load time.

use phigamma::charp::PrecisionWindow;
use phigamma::error::{Error, Result};
use phigamma::io::FrameDto;
use phigamma::rat::{self, Rat};
use phigamma::wittperiod;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub p: u64,
    #[serde(default = "one")]
    pub q_exp: u32,
    pub witt_length: usize,
    pub mden: u32,
    pub pibar_lo: String,
    pub pibar_hi: String,
    #[serde(default = "toric_bound_default")]
    pub toric_bound: i64,
    /// Cyclotomic level m (the ring contains zeta_{p^m}).
    pub cyclo_level: u32,
    /// p-adic target precision N.
    pub precision: u32,
    pub frame: FrameDto,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> u32 {
    1
}

fn toric_bound_default() -> i64 {
    64
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 2,
            q_exp: 1,
            witt_length: 3,
            mden: 2,
            pibar_lo: "-8".into(),
            pibar_hi: "24".into(),
            toric_bound: 64,
            cyclo_level: 5,
            precision: 2,
            frame: FrameDto {
                rank: 1,
                generators: vec![],
                weight: vec!["0".into()],
                coordinate_names: vec![],
            },
            seed: 17,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame.weight.len() != self.frame.rank {
            return Err(Error::DimensionMismatch {
                expected: self.frame.rank,
                got: self.frame.weight.len(),
            });
        }
        // theta headroom: m >= N - 1 + mden
        if self.cyclo_level < self.precision - 1 + self.mden {
            return Err(Error::InvalidInput(format!(
                "cyclotomic level {} below the theta headroom {} (N-1+mden)",
                self.cyclo_level,
                self.precision - 1 + self.mden
            )));
        }
        Ok(())
    }

    pub fn window(&self) -> Result<PrecisionWindow> {
        let weight = self
            .frame
            .weight
            .iter()
            .map(|s| {
                rat::parse_rat(s).ok_or_else(|| Error::InvalidInput(format!("bad rational {s:?}")))
            })
            .collect::<Result<Vec<Rat>>>()?;
        PrecisionWindow::new(
            self.p,
            self.q_exp,
            self.mden,
            rat::parse_rat(&self.pibar_lo)
                .ok_or_else(|| Error::InvalidInput("bad pibar_lo".into()))?,
            rat::parse_rat(&self.pibar_hi)
                .ok_or_else(|| Error::InvalidInput("bad pibar_hi".into()))?,
            self.toric_bound,
            weight,
        )
    }
}

/// Constants measured once per configuration and echoed in every output so
/// property thresholds are reproducible across runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasuredConstants {
    /// Largest grid radius satisfying the controlled-lift inequality.
    pub lift_r0: String,
    /// Measured analyticity gain at n = 2 over the standard samples.
    pub gamma_gain_n2: String,
    /// log_p(c) calibrated so that gain(n) >= p^(n+1)/(p-1) - log_p(c).
    pub log_c: String,
}

pub fn measure_constants(cfg: &RunConfig) -> Result<MeasuredConstants> {
    let window = cfg.window()?;
    let r0 = wittperiod::measure_lift_r0(&window, cfg.witt_length)?;
    let samples = phigamma::charp::standard_samples(&window);
    let gain2 = phigamma::charp::gamma_bound(&window, 2, &samples)?;
    let (gain_str, log_c) = match gain2 {
        phigamma::rat::Val::Finite(g) => {
            let ideal = rat::p_pow(cfg.p, 3) / Rat::from_integer(cfg.p as i64 - 1);
            (rat::format_rat(g), rat::format_rat(ideal - g))
        }
        phigamma::rat::Val::Infinite => ("inf".into(), "0".into()),
    };
    Ok(MeasuredConstants {
        lift_r0: rat::format_rat(r0),
        gamma_gain_n2: gain_str,
        log_c,
    })
}
