//! Input/output shapes and handlers for every subcommand. All rationals are
//! "a/b" strings and all residues decimal strings; outputs are deterministic
//! given the configuration and seed.

use crate::config::RunConfig;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use phigamma::charp::{self, CharPElem};
use phigamma::cones;
use phigamma::descent::{self, DescentConfig};
use phigamma::error::{Error, Result};
use phigamma::gamma::{self, GammaElem, SeriesElem};
use phigamma::io::{
    CharPElemDto, ConeDto, CycloElemDto, FrameDto, GammaDto, ToricMapDto, WittElemDto,
};
use phigamma::phimod::{self, GammaLabel, PhiMatrix, PhiModule, RatMat, WittMat};
use phigamma::rat::{self, Rat, Val};
use phigamma::witt::WittScalar;
use phigamma::wittperiod::{self, PeriodUnit, WittElem};
use serde::{Deserialize, Serialize};
use serde_json::Value;

fn check_p(cfg: &RunConfig, p: u64) -> Result<()> {
    if p != cfg.p {
        return Err(Error::InvalidInput(format!(
            "input prime {p} disagrees with the configured p = {}",
            cfg.p
        )));
    }
    Ok(())
}

pub fn parse_input<T: serde::de::DeserializeOwned>(input: &Value) -> Result<T> {
    let de = serde_path_to_error::deserialize(input.clone());
    de.map_err(|e: serde_path_to_error::Error<serde_json::Error>| {
        Error::InvalidInput(format!(
            "at /{}: {}",
            e.path().to_string().replace('.', "/"),
            e.inner()
        ))
    })
}

fn parse_rat_str(s: &str) -> Result<Rat> {
    rat::parse_rat(s).ok_or_else(|| Error::InvalidInput(format!("bad rational {s:?}")))
}

fn parse_bigrat(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        None => (s, "1"),
        Some((a, b)) => (a, b),
    };
    let n: BigInt = num
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad rational {s:?}")))?;
    let d: BigInt = den
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad rational {s:?}")))?;
    if d == BigInt::from(0) {
        return Err(Error::InvalidInput("zero denominator".into()));
    }
    Ok(BigRational::new(n, d))
}

fn format_bigrat(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

// ---------------------------------------------------------------- cone ----

#[derive(Deserialize)]
pub struct RefineInput {
    pub map: ToricMapDto,
    pub source: FrameDto,
    pub target: FrameDto,
}

#[derive(Deserialize)]
pub struct GraphInput {
    pub f1: FrameDto,
    pub f2: FrameDto,
}

#[derive(Deserialize)]
pub struct TropInput {
    pub frame: FrameDto,
    pub s: Vec<i64>,
}

#[derive(Deserialize)]
pub struct GaussInput {
    pub support: Vec<Vec<i64>>,
    pub weight: Vec<String>,
}

pub fn cone_dual(input: &Value) -> Result<Value> {
    let dto: ConeDto = parse_input(input)?;
    let c = dto.to_cone()?;
    Ok(serde_json::to_value(ConeDto::from_cone(&cones::dual_cone(&c))).unwrap())
}

pub fn cone_hilbert(input: &Value) -> Result<Value> {
    let dto: ConeDto = parse_input(input)?;
    let m = cones::hilbert_basis(&dto.to_cone()?)?;
    Ok(serde_json::json!({ "hilbert_basis": m.hilbert_basis }))
}

pub fn cone_refine(input: &Value) -> Result<Value> {
    let dto: RefineInput = parse_input(input)?;
    let witness = cones::is_toric_refinement(
        &dto.map.to_map()?,
        &dto.source.to_frame()?,
        &dto.target.to_frame()?,
    )?;
    Ok(match witness {
        Some(t) => serde_json::json!({ "refinement": true, "complement_generators": t }),
        None => serde_json::json!({ "refinement": false }),
    })
}

pub fn cone_graph(input: &Value) -> Result<Value> {
    let dto: GraphInput = parse_input(input)?;
    let (frame, p1, p2) = cones::framed_graph(&dto.f1.to_frame()?, &dto.f2.to_frame()?)?;
    Ok(serde_json::json!({
        "rank": frame.monoid.lattice.rank,
        "hilbert_basis": frame.monoid.hilbert_basis,
        "weight": frame.weight.iter().map(|r| rat::format_rat(*r)).collect::<Vec<_>>(),
        "boundary_free": frame.boundary_free,
        "projection1": p1.matrix,
        "projection2": p2.matrix,
    }))
}

pub fn cone_trop(input: &Value) -> Result<Value> {
    let dto: TropInput = parse_input(input)?;
    let v = cones::tropicalize(&dto.frame.to_frame()?, &dto.s)?;
    Ok(serde_json::json!({ "value": rat::format_rat(v) }))
}

pub fn cone_gauss(input: &Value) -> Result<Value> {
    let dto: GaussInput = parse_input(input)?;
    let weight = dto
        .weight
        .iter()
        .map(|s| parse_rat_str(s))
        .collect::<Result<Vec<_>>>()?;
    let v = cones::gauss_valuation(&dto.support, &weight)?;
    Ok(serde_json::json!({ "valuation": v.to_string() }))
}

// --------------------------------------------------------------- charp ----

#[derive(Deserialize)]
pub struct CharpOpsInput {
    pub op: String,
    pub x: CharPElemDto,
    #[serde(default)]
    pub y: Option<CharPElemDto>,
    /// Residue-field scalar for op = "scale".
    #[serde(default)]
    pub scalar: Option<Vec<u64>>,
}

pub fn charp_ops(input: &Value) -> Result<Value> {
    let dto: CharpOpsInput = parse_input(input)?;
    let x = dto.x.to_elem()?;
    let need_y = || -> Result<CharPElem> {
        dto.y
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("operation needs a second operand".into()))?
            .to_elem()
    };
    let out = match dto.op.as_str() {
        "add" => x.add(&need_y()?)?,
        "sub" => x.sub(&need_y()?)?,
        "mul" => x.mul(&need_y()?)?,
        "neg" => x.neg(),
        "invert" => x.invert()?,
        "scale" => {
            let c = dto
                .scalar
                .clone()
                .ok_or_else(|| Error::InvalidInput("scale needs a scalar".into()))?;
            x.scalar_mul(&c)
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown charp op {other:?} (add|sub|mul|neg|invert|scale)"
            )))
        }
    };
    Ok(serde_json::to_value(CharPElemDto::from_elem(&out)).unwrap())
}

#[derive(Deserialize)]
pub struct CharpFrobInput {
    pub x: CharPElemDto,
    #[serde(default)]
    pub inverse: bool,
}

pub fn charp_frob(input: &Value) -> Result<Value> {
    let dto: CharpFrobInput = parse_input(input)?;
    let out = charp::frobenius(&dto.x.to_elem()?, dto.inverse)?;
    Ok(serde_json::to_value(CharPElemDto::from_elem(&out)).unwrap())
}

#[derive(Deserialize)]
pub struct CharpMuInput {
    pub x: CharPElemDto,
}

pub fn charp_mu(input: &Value) -> Result<Value> {
    let dto: CharpMuInput = parse_input(input)?;
    let comps = charp::mu_decompose(&dto.x.to_elem()?)?;
    let items: Vec<Value> = comps
        .into_iter()
        .map(|(class, comp)| {
            serde_json::json!({
                "class": {
                    "e": rat::format_rat(class.e_class),
                    "toric": class.toric_class.iter().map(|t| rat::format_rat(*t)).collect::<Vec<_>>(),
                },
                "component": CharPElemDto::from_elem(&comp),
            })
        })
        .collect();
    Ok(serde_json::json!({ "components": items }))
}

#[derive(Deserialize)]
pub struct CharpBoundInput {
    pub n: u32,
    #[serde(default)]
    pub samples: Vec<CharPElemDto>,
}

pub fn charp_bound(cfg: &RunConfig, input: &Value) -> Result<Value> {
    let dto: CharpBoundInput = parse_input(input)?;
    let window = cfg.window()?;
    let samples = if dto.samples.is_empty() {
        charp::standard_samples(&window)
    } else {
        dto.samples
            .iter()
            .map(|d| d.to_elem())
            .collect::<Result<Vec<_>>>()?
    };
    let bound = charp::gamma_bound(&window, dto.n, &samples)?;
    Ok(serde_json::json!({ "n": dto.n, "bound": bound.to_string() }))
}

// ---------------------------------------------------------------- witt ----

#[derive(Deserialize)]
pub struct WittOpsInput {
    pub op: String,
    pub x: WittElemDto,
    #[serde(default)]
    pub y: Option<WittElemDto>,
}

pub fn witt_ops(input: &Value) -> Result<Value> {
    let dto: WittOpsInput = parse_input(input)?;
    let x = dto.x.to_elem()?;
    let need_y = || -> Result<WittElem> {
        dto.y
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("operation needs a second operand".into()))?
            .to_elem()
    };
    let out = match dto.op.as_str() {
        "add" => x.add(&need_y()?)?,
        "sub" => x.sub(&need_y()?)?,
        "mul" => x.mul(&need_y()?)?,
        "neg" => x.neg()?,
        "frobenius" => x.frobenius(false)?,
        "frobenius_inverse" => x.frobenius(true)?,
        "verschiebung" => x.verschiebung(),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown witt op {other:?}"
            )))
        }
    };
    Ok(serde_json::to_value(WittElemDto::from_elem(&out)).unwrap())
}

#[derive(Deserialize)]
pub struct WittTeichInput {
    pub x: CharPElemDto,
    pub length: usize,
}

pub fn witt_teich(input: &Value) -> Result<Value> {
    let dto: WittTeichInput = parse_input(input)?;
    let out = WittElem::teichmuller(&dto.x.to_elem()?, dto.length);
    Ok(serde_json::to_value(WittElemDto::from_elem(&out)).unwrap())
}

#[derive(Deserialize)]
pub struct WittThetaInput {
    #[serde(default)]
    pub x: Option<WittElemDto>,
    /// "pi" or "z": evaluate theta on a special element of the configured ring.
    #[serde(default)]
    pub special: Option<String>,
    #[serde(default)]
    pub precision: Option<u32>,
}

pub fn witt_theta(cfg: &RunConfig, input: &Value) -> Result<Value> {
    let dto: WittThetaInput = parse_input(input)?;
    let n = dto.precision.unwrap_or(cfg.precision);
    let x = match (&dto.x, dto.special.as_deref()) {
        (Some(xd), None) => {
            let x = xd.to_elem()?;
            check_p(cfg, x.window().p)?;
            x
        }
        (None, Some("z")) => wittperiod::special_z(&cfg.window()?, cfg.witt_length)?,
        (None, Some("pi")) => wittperiod::special_pi(&cfg.window()?, cfg.witt_length)?,
        _ => {
            return Err(Error::InvalidInput(
                "provide exactly one of x or special in {pi, z}".into(),
            ))
        }
    };
    let out = wittperiod::theta_eval(&x, n)?;
    Ok(serde_json::to_value(CycloElemDto::from_elem(&out)).unwrap())
}

#[derive(Deserialize)]
pub struct WittSpecialInput {
    pub which: String,
    #[serde(default)]
    pub order: Option<u32>,
    #[serde(default)]
    pub d: Option<u32>,
}

pub fn witt_special(cfg: &RunConfig, input: &Value) -> Result<Value> {
    let dto: WittSpecialInput = parse_input(input)?;
    let w = cfg.window()?;
    let n = cfg.witt_length;
    Ok(match dto.which.as_str() {
        "pi" => serde_json::json!({
            "pi": WittElemDto::from_elem(&wittperiod::special_pi(&w, n)?)
        }),
        "z" => serde_json::json!({
            "z": WittElemDto::from_elem(&wittperiod::special_z(&w, n)?)
        }),
        "t" => {
            let t = wittperiod::special_t(&w, n, dto.order.unwrap_or(8))?;
            let PeriodUnit::Witt(u) = &t.unit_part else {
                unreachable!()
            };
            serde_json::json!({
                "p_power": t.p_power,
                "unit_part": WittElemDto::from_elem(u),
            })
        }
        "t_d" => {
            let td = wittperiod::special_td(
                &w,
                n,
                dto.d
                    .ok_or_else(|| Error::InvalidInput("t_d needs d".into()))?,
                dto.order.unwrap_or(2),
            )?;
            serde_json::json!({
                "d": td.d,
                "order": td.order,
                "numerator": WittElemDto::from_elem(&td.numerator),
                "denominator": WittElemDto::from_elem(&td.denominator),
            })
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown special element {other:?} (pi|z|t|t_d)"
            )))
        }
    })
}

#[derive(Deserialize)]
pub struct WittLiftInput {
    pub x: CharPElemDto,
    pub r: String,
}

pub fn witt_lift(cfg: &RunConfig, input: &Value) -> Result<Value> {
    let dto: WittLiftInput = parse_input(input)?;
    let x = dto.x.to_elem()?;
    check_p(cfg, x.window.p)?;
    let r = parse_rat_str(&dto.r)?;
    let r0 = wittperiod::measure_lift_r0(&x.window, cfg.witt_length)?;
    let res = wittperiod::imperfect_lift(&x, cfg.witt_length, r, r0)?;
    Ok(serde_json::json!({
        "r0": rat::format_rat(r0),
        "lift": WittElemDto::from_elem(&res.lift),
        "difference": WittElemDto::from_elem(&res.difference),
        "vr_lift": res.vr_lift.to_string(),
        "vr_difference": res.vr_difference.to_string(),
    }))
}

#[derive(Deserialize)]
pub struct WittRootInput {
    pub y: CycloElemDto,
}

pub fn witt_root(cfg: &RunConfig, input: &Value) -> Result<Value> {
    let dto: WittRootInput = parse_input(input)?;
    let y = dto.y.to_elem()?;
    check_p(cfg, y.p)?;
    let out = wittperiod::approx_pth_root(&y, cfg.cyclo_level, cfg.cyclo_level)?;
    let defect = out.pow(cfg.p)?.sub(&y.raise(out.level, out.mden)?)?;
    Ok(serde_json::json!({
        "root": CycloElemDto::from_elem(&out),
        "defect_valuation": defect.p_valuation().to_string(),
    }))
}

// --------------------------------------------------------------- gamma ----

#[derive(Deserialize)]
pub struct GammaComposeInput {
    pub g: GammaDto,
    pub h: GammaDto,
}

pub fn gamma_compose(cfg: &RunConfig, input: &Value) -> Result<Value> {
    let dto: GammaComposeInput = parse_input(input)?;
    let out = dto.g.to_elem(cfg.p)?.compose(&dto.h.to_elem(cfg.p)?)?;
    Ok(serde_json::to_value(GammaDto::from_elem(&out)).unwrap())
}

#[derive(Deserialize)]
pub struct GammaActInput {
    pub g: GammaDto,
    pub carrier: String,
    pub x: Value,
}

pub fn gamma_act(cfg: &RunConfig, input: &Value) -> Result<Value> {
    let dto: GammaActInput = parse_input(input)?;
    let g = dto.g.to_elem(cfg.p)?;
    Ok(match dto.carrier.as_str() {
        "charp" => {
            let x: CharPElemDto = parse_input(&dto.x)?;
            let out = charp::gamma_act_charp(&g, &x.to_elem()?)?;
            serde_json::to_value(CharPElemDto::from_elem(&out)).unwrap()
        }
        "witt" => {
            let x: WittElemDto = parse_input(&dto.x)?;
            let out = x.to_elem()?.gamma_act(&g)?;
            serde_json::to_value(WittElemDto::from_elem(&out)).unwrap()
        }
        "cyclo" => {
            let x: CycloElemDto = parse_input(&dto.x)?;
            let out = x.to_elem()?.gamma_act(&g)?;
            serde_json::to_value(CycloElemDto::from_elem(&out)).unwrap()
        }
        "series" => {
            let x: SeriesDto = parse_input(&dto.x)?;
            let out = gamma::gamma_act_series(&g, &x.to_elem(cfg.p)?)?;
            serde_json::to_value(SeriesDto::from_elem(&out)).unwrap()
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown carrier {other:?} (charp|witt|cyclo|series)"
            )))
        }
    })
}

#[derive(Serialize, Deserialize)]
pub struct SeriesTermDto {
    pub pi: u32,
    pub toric: Vec<i64>,
    pub coeff: String,
}

#[derive(Serialize, Deserialize)]
pub struct SeriesDto {
    pub degree_bound: u32,
    pub rank: usize,
    pub terms: Vec<SeriesTermDto>,
}

impl SeriesDto {
    pub fn to_elem(&self, p: u64) -> Result<SeriesElem> {
        let mut terms = Vec::new();
        for t in &self.terms {
            terms.push((
                gamma::SeriesExp {
                    pi_deg: t.pi,
                    toric: t.toric.clone(),
                },
                parse_bigrat(&t.coeff)?,
            ));
        }
        Ok(SeriesElem::from_terms(p, self.degree_bound, self.rank, terms))
    }

    pub fn from_elem(x: &SeriesElem) -> Self {
        SeriesDto {
            degree_bound: x.degree_bound,
            rank: x.rank,
            terms: x
                .terms()
                .map(|(e, c)| SeriesTermDto {
                    pi: e.pi_deg,
                    toric: e.toric.clone(),
                    coeff: format_bigrat(c),
                })
                .collect(),
        }
    }
}

#[derive(Deserialize)]
pub struct DgammaInput {
    pub g: GammaDto,
    pub x: SeriesDto,
    pub order: u32,
}

pub fn gamma_dgamma(cfg: &RunConfig, input: &Value) -> Result<Value> {
    let dto: DgammaInput = parse_input(input)?;
    let g = dto.g.to_elem(cfg.p)?;
    let x = dto.x.to_elem(cfg.p)?;
    let (series, tail) = gamma::dgamma(&g, &x, dto.order)?;
    let closed = gamma::dgamma_closed_form(&g, &x, dto.order).ok();
    let comparison = closed.as_ref().map(|c| {
        let diff = series.sub(c).unwrap();
        diff.min_p_valuation().to_string()
    });
    Ok(serde_json::json!({
        "log_series": SeriesDto::from_elem(&series),
        "last_term_valuation": tail.to_string(),
        "closed_form": closed.as_ref().map(SeriesDto::from_elem),
        "difference_valuation": comparison,
    }))
}

#[derive(Deserialize)]
pub struct EquivarianceInput {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

fn default_pairs() -> usize {
    20
}

pub fn gamma_equivariance<R: rand::Rng>(
    cfg: &RunConfig,
    rng: &mut R,
    input: &Value,
) -> Result<Value> {
    let dto: EquivarianceInput = parse_input(input)?;
    let window = cfg.window()?;
    let prec = cfg.mden + 8;
    let mut charp_pairs = Vec::new();
    let mut theta_pairs = Vec::new();
    for _ in 0..dto.pairs {
        let g = GammaElem::new(
            cfg.p,
            prec,
            1 + cfg.p * cfg.p * rng.gen_range(0..cfg.p),
            (0..window.rank)
                .map(|_| cfg.p * cfg.p * rng.gen_range(0..cfg.p))
                .collect(),
        )?;
        let x = charp::random_element(&window, rng, 3, true);
        charp_pairs.push((g.clone(), x.clone()));
        if cfg.q_exp == 1 {
            theta_pairs.push((g, WittElem::teichmuller(&x, cfg.precision as usize), cfg.precision));
        }
    }
    let report = gamma::check_equivariance(&charp_pairs, &theta_pairs)?;
    Ok(serde_json::json!({
        "lines": report.lines.iter().map(|l| serde_json::json!({
            "label": l.label,
            "deviation": l.deviation.to_string(),
        })).collect::<Vec<_>>(),
        "min_deviation": report.min_deviation.to_string(),
    }))
}

// ---------------------------------------------------------------- phim ----

#[derive(Serialize, Deserialize, Clone)]
#[serde(untagged)]
pub enum EntryDto {
    Rational(String),
    WittComponents(Vec<Vec<String>>),
}

#[derive(Serialize, Deserialize, Clone)]
pub struct GammaMatDto {
    pub label: Value,
    pub matrix: Vec<Vec<EntryDto>>,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct PhiModuleDto {
    /// "witt" or "valuation".
    pub base: String,
    pub p: u64,
    #[serde(default = "one_u32")]
    pub q_exp: u32,
    #[serde(default = "one_usize")]
    pub n: usize,
    #[serde(default = "one_u32")]
    pub a: u32,
    pub matrix: Vec<Vec<EntryDto>>,
    #[serde(default)]
    pub gamma: Vec<GammaMatDto>,
}

fn one_u32() -> u32 {
    1
}

fn one_usize() -> usize {
    1
}

impl PhiModuleDto {
    pub fn to_module(&self) -> Result<PhiModule> {
        let parse_matrix = |rows: &Vec<Vec<EntryDto>>| -> Result<PhiMatrix> {
            match self.base.as_str() {
                "valuation" => {
                    let mut out = Vec::new();
                    for row in rows {
                        let mut r = Vec::new();
                        for e in row {
                            let EntryDto::Rational(s) = e else {
                                return Err(Error::InvalidInput(
                                    "valuation base expects rational entries".into(),
                                ));
                            };
                            r.push(parse_bigrat(s)?);
                        }
                        out.push(r);
                    }
                    Ok(PhiMatrix::Rat {
                        p: self.p,
                        mat: RatMat::from_rationals(out)?,
                    })
                }
                "witt" => {
                    let mut out = Vec::new();
                    for row in rows {
                        let mut r = Vec::new();
                        for e in row {
                            let EntryDto::WittComponents(comps) = e else {
                                return Err(Error::InvalidInput(
                                    "witt base expects component-list entries".into(),
                                ));
                            };
                            let mut parsed = Vec::new();
                            for c in comps {
                                parsed.push(
                                    c.iter()
                                        .map(|s| {
                                            s.parse::<u64>().map_err(|_| {
                                                Error::InvalidInput(format!("bad residue {s:?}"))
                                            })
                                        })
                                        .collect::<Result<Vec<u64>>>()?,
                                );
                            }
                            if parsed.len() != self.n {
                                return Err(Error::LengthMismatch);
                            }
                            r.push(WittScalar {
                                p: self.p,
                                deg: self.q_exp as usize,
                                comps: parsed,
                            });
                        }
                        out.push(r);
                    }
                    Ok(PhiMatrix::Witt(WittMat {
                        p: self.p,
                        deg: self.q_exp as usize,
                        n: self.n,
                        rows: out,
                    }))
                }
                other => Err(Error::InvalidInput(format!(
                    "unknown base {other:?} (witt|valuation)"
                ))),
            }
        };
        let matrix = parse_matrix(&self.matrix)?;
        let mut gammas = Vec::new();
        for g in &self.gamma {
            let label = if let Some(v) = g.label.get("gamma0") {
                GammaLabel::Gamma0 {
                    value: v
                        .as_str()
                        .and_then(|s| s.parse().ok())
                        .or_else(|| v.as_u64())
                        .ok_or_else(|| Error::InvalidInput("bad gamma0 label".into()))?,
                }
            } else if let Some(v) = g.label.get("nu") {
                GammaLabel::Nu {
                    index: v
                        .as_u64()
                        .ok_or_else(|| Error::InvalidInput("bad nu label".into()))?
                        as usize,
                }
            } else {
                return Err(Error::InvalidInput(
                    "gamma label must be {\"gamma0\": ...} or {\"nu\": ...}".into(),
                ));
            };
            gammas.push((label, parse_matrix(&g.matrix)?));
        }
        Ok(PhiModule {
            a: self.a,
            matrix,
            gamma: gammas,
        })
    }

    pub fn from_module(m: &PhiModule) -> Self {
        let encode = |mat: &PhiMatrix| -> (String, u64, u32, usize, Vec<Vec<EntryDto>>) {
            match mat {
                PhiMatrix::Rat { p, mat } => (
                    "valuation".into(),
                    *p,
                    1,
                    1,
                    mat.rows
                        .iter()
                        .map(|row| row.iter().map(|x| EntryDto::Rational(format_bigrat(x))).collect())
                        .collect(),
                ),
                PhiMatrix::Witt(wm) => (
                    "witt".into(),
                    wm.p,
                    wm.deg as u32,
                    wm.n,
                    wm.rows
                        .iter()
                        .map(|row| {
                            row.iter()
                                .map(|x| {
                                    EntryDto::WittComponents(
                                        x.comps
                                            .iter()
                                            .map(|c| c.iter().map(|d| d.to_string()).collect())
                                            .collect(),
                                    )
                                })
                                .collect()
                        })
                        .collect(),
                ),
            }
        };
        let (base, p, q_exp, n, matrix) = encode(&m.matrix);
        PhiModuleDto {
            base,
            p,
            q_exp,
            n,
            a: m.a,
            matrix,
            gamma: m
                .gamma
                .iter()
                .map(|(label, g)| GammaMatDto {
                    label: match label {
                        GammaLabel::Gamma0 { value } => {
                            serde_json::json!({ "gamma0": value.to_string() })
                        }
                        GammaLabel::Nu { index } => serde_json::json!({ "nu": index }),
                    },
                    matrix: encode(g).4,
                })
                .collect(),
        }
    }
}

#[derive(Deserialize)]
pub struct PhimInput {
    pub module: PhiModuleDto,
    #[serde(default)]
    pub m: Option<i64>,
    #[serde(default)]
    pub cap: Option<u32>,
    #[serde(default)]
    pub c: Option<i64>,
    #[serde(default)]
    pub d: Option<u32>,
}

pub fn phim_slopes(input: &Value) -> Result<Value> {
    let dto: PhimInput = parse_input(input)?;
    let s = phimod::newton_slopes(&dto.module.to_module()?)?;
    Ok(serde_json::json!({
        "slopes": s.slopes.iter().map(|r| rat::format_rat(*r)).collect::<Vec<_>>(),
    }))
}

pub fn phim_twist(input: &Value) -> Result<Value> {
    let dto: PhimInput = parse_input(input)?;
    let m = dto
        .m
        .ok_or_else(|| Error::InvalidInput("twist needs m".into()))?;
    let out = phimod::twist(&dto.module.to_module()?, m)?;
    Ok(serde_json::to_value(PhiModuleDto::from_module(&out)).unwrap())
}

pub fn phim_trivialize(input: &Value) -> Result<Value> {
    let dto: PhimInput = parse_input(input)?;
    let t = phimod::trivialize(&dto.module.to_module()?, dto.cap.unwrap_or(8))?;
    let basis = PhiMatrix::Witt(t.basis);
    let module_like = PhiModule {
        a: 1,
        matrix: basis,
        gamma: vec![],
    };
    Ok(serde_json::json!({
        "extension_degree": t.extension_degree,
        "basis": PhiModuleDto::from_module(&module_like).matrix,
    }))
}

pub fn phim_cohomology(input: &Value) -> Result<Value> {
    let dto: PhimInput = parse_input(input)?;
    let h = phimod::koszul_cohomology(&dto.module.to_module()?)?;
    Ok(serde_json::json!({
        "invariant_factors": h.iter().map(|inv| {
            inv.iter().map(|d| d.to_string()).collect::<Vec<_>>()
        }).collect::<Vec<_>>(),
    }))
}

pub fn phim_pure(input: &Value) -> Result<Value> {
    let dto: PhimInput = parse_input(input)?;
    let module = dto.module.to_module()?;
    let c = dto.c.unwrap_or(0);
    let d = dto.d.unwrap_or(module.a);
    let pure = phimod::is_pure(&module, c, d)?;
    Ok(serde_json::json!({ "pure": pure, "c": c, "d": d }))
}

// ------------------------------------------------------------- descend ----

#[derive(Deserialize)]
pub struct DescendSplitInput {
    pub i: i64,
    pub h: u32,
    pub x: CharPElemDto,
}

fn descent_cfg() -> DescentConfig {
    DescentConfig::laurent_default()
}

pub fn descend_split(input: &Value) -> Result<Value> {
    let dto: DescendSplitInput = parse_input(input)?;
    let (y, z) = descent::split_element(&descent_cfg(), dto.i, dto.h, &dto.x.to_elem()?)?;
    Ok(serde_json::json!({
        "lower": CharPElemDto::from_elem(&y),
        "preimage": CharPElemDto::from_elem(&z),
    }))
}

#[derive(Deserialize)]
pub struct DescendMatrixInput {
    pub matrix: Vec<Vec<CharPElemDto>>,
    pub i: i64,
    pub h: u32,
    #[serde(default)]
    pub tolerance: Option<String>,
}

fn parse_cmat(rows: &[Vec<CharPElemDto>]) -> Result<descent::CMat> {
    rows.iter()
        .map(|row| row.iter().map(|d| d.to_elem()).collect())
        .collect()
}

fn cmat_dto(m: &descent::CMat) -> Vec<Vec<CharPElemDto>> {
    m.iter()
        .map(|row| row.iter().map(CharPElemDto::from_elem).collect())
        .collect()
}

pub fn descend_matrix(input: &Value) -> Result<Value> {
    let dto: DescendMatrixInput = parse_input(input)?;
    let tol = match &dto.tolerance {
        None => Val::Infinite,
        Some(s) if s == "inf" => Val::Infinite,
        Some(s) => Val::Finite(parse_rat_str(s)?),
    };
    let state = descent::descend_matrix(&descent_cfg(), &parse_cmat(&dto.matrix)?, dto.i, dto.h, tol)?;
    Ok(serde_json::json!({
        "U": cmat_dto(&state.u),
        "residual": cmat_dto(&state.residual),
        "log": state.iteration_log.iter().map(|(l, v)| {
            serde_json::json!({ "iteration": l, "valuation": v.to_string() })
        }).collect::<Vec<_>>(),
        "certified": state.certified,
    }))
}

#[derive(Deserialize)]
pub struct DescendModuleInput {
    pub f: Vec<Vec<CharPElemDto>>,
    pub gs: Vec<Vec<Vec<CharPElemDto>>>,
    #[serde(default)]
    pub tolerance: Option<String>,
}

pub fn descend_module(input: &Value) -> Result<Value> {
    let dto: DescendModuleInput = parse_input(input)?;
    let tol = match &dto.tolerance {
        None => Val::Infinite,
        Some(s) if s == "inf" => Val::Infinite,
        Some(s) => Val::Finite(parse_rat_str(s)?),
    };
    let gs = dto
        .gs
        .iter()
        .map(|g| parse_cmat(g))
        .collect::<Result<Vec<_>>>()?;
    let out = descent::deperfect_module(&descent_cfg(), &parse_cmat(&dto.f)?, &gs, tol)?;
    Ok(serde_json::json!({
        "U": cmat_dto(&out.u),
        "phi_matrix": cmat_dto(&out.phi_matrix),
        "gamma_matrices": out.gamma_matrices.iter().map(|g| cmat_dto(g)).collect::<Vec<_>>(),
        "h_used": out.h_used,
        "certified": out.certified,
    }))
}

#[derive(Deserialize)]
pub struct FourierInput {
    pub x: CycloElemDto,
    pub m: u32,
}

pub fn descend_fourier(input: &Value) -> Result<Value> {
    let dto: FourierInput = parse_input(input)?;
    let comps = descent::fourier_decompose(&dto.x.to_elem()?, dto.m)?;
    Ok(serde_json::json!({
        "components": comps.iter().map(|c| serde_json::json!({
            "nu": c.nu,
            "value": CycloElemDto::from_elem(&c.value),
        })).collect::<Vec<_>>(),
    }))
}

#[derive(Deserialize)]
pub struct SplitRefInput {
    pub x: CycloElemDto,
    pub adjoined: usize,
}

pub fn descend_splitref(input: &Value) -> Result<Value> {
    let dto: SplitRefInput = parse_input(input)?;
    let out = descent::split_refinement(&dto.x.to_elem()?, dto.adjoined)?;
    Ok(serde_json::to_value(CycloElemDto::from_elem(&out)).unwrap())
}

// --------------------------------------------------------------- suite ----

pub fn run_suite<R: rand::Rng>(module: &str, rng: &mut R) -> Result<(Value, bool)> {
    let results = phigamma::suite::module_checks(module, rng)?;
    let all_pass = results.iter().all(|r| r.pass);
    let value = serde_json::json!({
        "module": module,
        "results": results.iter().map(|r| serde_json::json!({
            "name": r.name,
            "pass": r.pass,
            "detail": r.detail,
        })).collect::<Vec<_>>(),
        "all_pass": all_pass,
    });
    Ok((value, all_pass))
}
