//! JSON descriptions of the domain objects: rationals as "a/b" strings,
//! residues as decimal strings, no floats anywhere.

use crate::charp::{CharPElem, FracExp, PrecisionWindow};
use crate::cones::{Cone, Frame, Lattice, ToricMap};
use crate::cyclo::{CycloElem, CycloExp};
use crate::error::{Error, Result};
use crate::gamma::GammaElem;
use crate::rat::{self, Rat, Val};
use crate::wittperiod::WittElem;
use serde::{Deserialize, Serialize};

fn rat_to_string(r: Rat) -> String {
    rat::format_rat(r)
}

fn rat_from_string(s: &str) -> Result<Rat> {
    rat::parse_rat(s).ok_or_else(|| Error::InvalidInput(format!("bad rational: {s:?}")))
}

fn val_to_string(v: Val) -> String {
    v.to_string()
}

fn val_from_string(s: &str) -> Result<Val> {
    if s == "inf" {
        Ok(Val::Infinite)
    } else {
        Ok(Val::Finite(rat_from_string(s)?))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeDto {
    pub rank: usize,
    pub generators: Vec<Vec<i64>>,
}

impl ConeDto {
    pub fn to_cone(&self) -> Result<Cone> {
        Cone::new(Lattice::new(self.rank), self.generators.clone())
    }

    pub fn from_cone(c: &Cone) -> Self {
        ConeDto {
            rank: c.lattice.rank,
            generators: c.generators.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameDto {
    pub rank: usize,
    /// Generators of sigma (the frame cone); the monoid is the Hilbert basis
    /// of its dual.
    pub generators: Vec<Vec<i64>>,
    pub weight: Vec<String>,
    #[serde(default)]
    pub coordinate_names: Vec<String>,
}

impl FrameDto {
    pub fn to_frame(&self) -> Result<Frame> {
        let sigma = Cone::new(Lattice::new(self.rank), self.generators.clone())?;
        let monoid = crate::cones::hilbert_basis(&crate::cones::dual_cone(&sigma))?;
        let weight = self
            .weight
            .iter()
            .map(|s| rat_from_string(s))
            .collect::<Result<Vec<_>>>()?;
        let names = if self.coordinate_names.is_empty() {
            (0..self.rank).map(|i| format!("T{}", i + 1)).collect()
        } else {
            self.coordinate_names.clone()
        };
        Frame::new(monoid, weight, names)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToricMapDto {
    pub source_rank: usize,
    pub target_rank: usize,
    pub matrix: Vec<Vec<i64>>,
}

impl ToricMapDto {
    pub fn to_map(&self) -> Result<ToricMap> {
        ToricMap::new(
            Lattice::new(self.source_rank),
            Lattice::new(self.target_rank),
            self.matrix.clone(),
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindowDto {
    pub p: u64,
    #[serde(default = "one_u32")]
    pub f: u32,
    pub mden: u32,
    pub pibar_lo: String,
    pub pibar_hi: String,
    #[serde(default = "default_toric_bound")]
    pub toric_bound: i64,
    pub weight: Vec<String>,
}

fn one_u32() -> u32 {
    1
}

fn default_toric_bound() -> i64 {
    64
}

impl WindowDto {
    pub fn to_window(&self) -> Result<PrecisionWindow> {
        PrecisionWindow::new(
            self.p,
            self.f,
            self.mden,
            rat_from_string(&self.pibar_lo)?,
            rat_from_string(&self.pibar_hi)?,
            self.toric_bound,
            self.weight
                .iter()
                .map(|s| rat_from_string(s))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn from_window(w: &PrecisionWindow) -> Self {
        WindowDto {
            p: w.p,
            f: w.f,
            mden: w.mden,
            pibar_lo: rat_to_string(w.pibar_lo),
            pibar_hi: rat_to_string(w.pibar_hi),
            toric_bound: w.toric_bound,
            weight: w.weight.iter().map(|r| rat_to_string(*r)).collect(),
        }
    }
}

/// Coefficient of a term: a decimal string over F_p, a coefficient vector
/// over proper extensions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffDto {
    Prime(String),
    Extension(Vec<String>),
}

impl CoeffDto {
    fn to_fq(&self) -> Result<Vec<u64>> {
        let parse = |s: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| Error::InvalidInput(format!("bad residue: {s:?}")))
        };
        match self {
            CoeffDto::Prime(s) => Ok(vec![parse(s)?]),
            CoeffDto::Extension(v) => v.iter().map(|s| parse(s)).collect(),
        }
    }

    fn from_fq(c: &[u64], f: u32) -> Self {
        if f == 1 {
            CoeffDto::Prime(c.first().copied().unwrap_or(0).to_string())
        } else {
            CoeffDto::Extension(c.iter().map(|x| x.to_string()).collect())
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CharPTermDto {
    pub pibar: String,
    pub toric: Vec<String>,
    pub coeff: CoeffDto,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CharPElemDto {
    pub window: WindowDto,
    pub terms: Vec<CharPTermDto>,
    pub floor: String,
}

impl CharPElemDto {
    pub fn to_elem(&self) -> Result<CharPElem> {
        let w = self.window.to_window()?;
        let mut terms = Vec::new();
        for t in &self.terms {
            let e = FracExp {
                pibar: rat_from_string(&t.pibar)?,
                toric: t
                    .toric
                    .iter()
                    .map(|s| rat_from_string(s))
                    .collect::<Result<Vec<_>>>()?,
            };
            terms.push((e, t.coeff.to_fq()?));
        }
        CharPElem::from_terms(&w, terms, val_from_string(&self.floor)?)
    }

    pub fn from_elem(x: &CharPElem) -> Self {
        CharPElemDto {
            window: WindowDto::from_window(&x.window),
            terms: x
                .terms()
                .map(|(e, c)| CharPTermDto {
                    pibar: rat_to_string(e.pibar),
                    toric: e.toric.iter().map(|t| rat_to_string(*t)).collect(),
                    coeff: CoeffDto::from_fq(c, x.window.f),
                })
                .collect(),
            floor: val_to_string(x.error_floor),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WittElemDto {
    pub components: Vec<CharPElemDto>,
}

impl WittElemDto {
    pub fn to_elem(&self) -> Result<WittElem> {
        if self.components.is_empty() {
            return Err(Error::InvalidInput("empty Witt vector".into()));
        }
        Ok(WittElem {
            components: self
                .components
                .iter()
                .map(|c| c.to_elem())
                .collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn from_elem(x: &WittElem) -> Self {
        WittElemDto {
            components: x
                .components
                .iter()
                .map(CharPElemDto::from_elem)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycloTermDto {
    pub zeta_exp: u64,
    pub toric: Vec<String>,
    pub coeff: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycloElemDto {
    pub p: u64,
    pub level: u32,
    pub mden: u32,
    pub prec: u32,
    pub rank: usize,
    pub terms: Vec<CycloTermDto>,
}

impl CycloElemDto {
    pub fn to_elem(&self) -> Result<CycloElem> {
        let mut terms = Vec::new();
        for t in &self.terms {
            terms.push((
                CycloExp {
                    zeta: t.zeta_exp,
                    toric: t
                        .toric
                        .iter()
                        .map(|s| rat_from_string(s))
                        .collect::<Result<Vec<_>>>()?,
                },
                t.coeff
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidInput(format!("bad residue: {:?}", t.coeff)))?,
            ));
        }
        CycloElem::from_terms(self.p, self.level, self.mden, self.prec, self.rank, terms)
    }

    pub fn from_elem(x: &CycloElem) -> Self {
        CycloElemDto {
            p: x.p,
            level: x.level,
            mden: x.mden,
            prec: x.prec,
            rank: x.rank,
            terms: x
                .terms()
                .map(|(e, c)| CycloTermDto {
                    zeta_exp: e.zeta,
                    toric: e.toric.iter().map(|t| rat_to_string(*t)).collect(),
                    coeff: c.to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaDto {
    pub gamma0: String,
    pub nu: Vec<String>,
    #[serde(rename = "A")]
    pub prec: u32,
}

impl GammaDto {
    pub fn to_elem(&self, p: u64) -> Result<GammaElem> {
        let parse = |s: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| Error::InvalidInput(format!("bad residue: {s:?}")))
        };
        GammaElem::new(
            p,
            self.prec,
            parse(&self.gamma0)?,
            self.nu.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn from_elem(g: &GammaElem) -> Self {
        GammaDto {
            gamma0: g.gamma0.to_string(),
            nu: g.nu.iter().map(|x| x.to_string()).collect(),
            prec: g.prec,
        }
    }
}
