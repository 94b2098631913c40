//! Exponent algebra for `-Δu = |x|^(-ℓ) u^q` and the classifier of the (ℓ, q) plane.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::config::ties;

pub const TIE_REL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("dimension must be at least 3 (got {0})")]
    Dimension(u32),
    #[error("exponent q must be positive and finite (got {0})")]
    Exponent(f64),
    #[error("ell must be finite (got {0})")]
    Ell(f64),
    #[error("{0} is undefined for q = 1")]
    LinearCase(&'static str),
    #[error("{0}")]
    Window(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub n: u32,
    pub ell: f64,
    pub q: f64,
}

impl ProblemParams {
    pub fn new(n: u32, ell: f64, q: f64) -> Result<Self, ParamError> {
        if n < 3 {
            return Err(ParamError::Dimension(n));
        }
        if !(q.is_finite() && q > 0.0) {
            return Err(ParamError::Exponent(q));
        }
        if !ell.is_finite() {
            return Err(ParamError::Ell(ell));
        }
        Ok(Self { n, ell, q })
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// γ = (2-ℓ)/(q-1).
    pub fn gamma(&self) -> Result<f64, ParamError> {
        if self.q == 1.0 {
            return Err(ParamError::LinearCase("gamma"));
        }
        Ok((2.0 - self.ell) / (self.q - 1.0))
    }

    /// γ(N-2-γ), the coefficient of the linear term in Emden–Fowler variables.
    pub fn a_sphere(&self) -> Result<f64, ParamError> {
        let g = self.gamma()?;
        Ok(g * (self.nf() - 2.0 - g))
    }

    /// L = [γ(N-2-γ)]^(1/(q-1)), when the base is positive.
    pub fn l(&self) -> Result<f64, ParamError> {
        let a = self.a_sphere()?;
        if a <= 0.0 {
            return Err(ParamError::LinearCase("L (non-positive base)"));
        }
        Ok(a.powf(1.0 / (self.q - 1.0)))
    }
}

/// A real number or +∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn value(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "+inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => s.serialize_f64(*x),
            ExtReal::PosInf => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(ExtReal::Finite(x)),
            Raw::Str(s) if s == "+inf" || s == "inf" => Ok(ExtReal::PosInf),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad extended real {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub q1: f64,
    pub q2: f64,
    #[serde(rename = "qS")]
    pub q_s: ExtReal,
    pub gamma: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub a_sphere: Option<f64>,
}

pub fn q1(n: u32, ell: f64) -> f64 {
    let n = n as f64;
    (n - ell) / (n - 2.0)
}

pub fn q2(n: u32, ell: f64) -> f64 {
    let n = n as f64;
    (n + 2.0 - 2.0 * ell) / (n - 2.0)
}

pub fn q_sobolev(n: u32) -> ExtReal {
    if n == 3 {
        ExtReal::PosInf
    } else {
        let n = n as f64;
        ExtReal::Finite((n + 1.0) / (n - 3.0))
    }
}

pub fn derive_constants(p: &ProblemParams) -> Result<DerivedConstants, ParamError> {
    let p = ProblemParams::new(p.n, p.ell, p.q)?;
    Ok(DerivedConstants {
        q1: q1(p.n, p.ell),
        q2: q2(p.n, p.ell),
        q_s: q_sobolev(p.n),
        gamma: p.gamma().ok(),
        l: p.l().ok(),
        a_sphere: p.a_sphere().ok(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    #[serde(rename = "Case_i")]
    CaseI,
    #[serde(rename = "Case_ii")]
    CaseII,
    #[serde(rename = "Case_iii")]
    CaseIII,
    #[serde(rename = "Case_iv")]
    CaseIV,
    #[serde(rename = "Case_v")]
    CaseV,
    #[serde(rename = "Case_vi")]
    CaseVI,
    #[serde(rename = "Nonexistence_vii")]
    NonexistenceVII,
    #[serde(rename = "Nonexistence_viii")]
    NonexistenceVIII,
    #[serde(rename = "Borderline_q2")]
    BorderlineQ2,
    #[serde(rename = "Supercritical_qS")]
    SupercriticalQS,
    Unclassified,
}

impl RegimeTag {
    pub const ALL: [RegimeTag; 11] = [
        RegimeTag::CaseI,
        RegimeTag::CaseII,
        RegimeTag::CaseIII,
        RegimeTag::CaseIV,
        RegimeTag::CaseV,
        RegimeTag::CaseVI,
        RegimeTag::NonexistenceVII,
        RegimeTag::NonexistenceVIII,
        RegimeTag::BorderlineQ2,
        RegimeTag::SupercriticalQS,
        RegimeTag::Unclassified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeTag::CaseI => "Case_i",
            RegimeTag::CaseII => "Case_ii",
            RegimeTag::CaseIII => "Case_iii",
            RegimeTag::CaseIV => "Case_iv",
            RegimeTag::CaseV => "Case_v",
            RegimeTag::CaseVI => "Case_vi",
            RegimeTag::NonexistenceVII => "Nonexistence_vii",
            RegimeTag::NonexistenceVIII => "Nonexistence_viii",
            RegimeTag::BorderlineQ2 => "Borderline_q2",
            RegimeTag::SupercriticalQS => "Supercritical_qS",
            RegimeTag::Unclassified => "Unclassified",
        }
    }

    pub fn is_nonexistence(self) -> bool {
        matches!(self, RegimeTag::NonexistenceVII | RegimeTag::NonexistenceVIII)
    }

    /// Regimes in which positive solutions are known to be radial.
    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            RegimeTag::CaseI
                | RegimeTag::CaseII
                | RegimeTag::CaseIII
                | RegimeTag::CaseIV
                | RegimeTag::CaseV
                | RegimeTag::CaseVI
        )
    }
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    /// The solution must additionally satisfy u ≤ c|x|^(-γ).
    NeedsDecayBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryCenter {
    Origin,
    SomePoint,
}

/// Whether the solution is sought on all of ℝ^N (continuous at 0) or is
/// allowed to blow up at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[default]
    Whole,
    Punctured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub tag: RegimeTag,
    pub requirements: Vec<Requirement>,
    pub symmetry_center: SymmetryCenter,
}

pub fn classify(p: &ProblemParams) -> RegimeLabel {
    classify_on(p, Domain::Whole)
}

pub fn classify_on(p: &ProblemParams, domain: Domain) -> RegimeLabel {
    let tag = classify_tag(p);
    let mut requirements = Vec::new();
    if tag == RegimeTag::CaseI {
        let crit = (p.nf() + 2.0) / (p.nf() - 2.0);
        if p.q > crit || ties(p.q, crit, TIE_REL) {
            requirements.push(Requirement::NeedsDecayBound);
        }
    }
    let symmetry_center = if p.ell > 0.0 || domain == Domain::Punctured {
        SymmetryCenter::Origin
    } else {
        SymmetryCenter::SomePoint
    };
    RegimeLabel {
        tag,
        requirements,
        symmetry_center,
    }
}

fn classify_tag(p: &ProblemParams) -> RegimeTag {
    let (n, ell, q) = (p.nf(), p.ell, p.q);
    let eq = |a: f64, b: f64| ties(a, b, TIE_REL);
    let ell_zero = ell.abs() <= TIE_REL;
    if ell < 0.0 && !ell_zero {
        return RegimeTag::Unclassified;
    }
    if eq(ell, 2.0) {
        return if eq(q, 1.0) {
            RegimeTag::Unclassified
        } else if q > 1.0 {
            RegimeTag::CaseIII
        } else {
            RegimeTag::NonexistenceVIII
        };
    }
    let q1 = q1(p.n, ell);
    if ell < 2.0 {
        if q < q1 || eq(q, q1) {
            return RegimeTag::NonexistenceVII;
        }
        if eq(q, q2(p.n, ell)) {
            return RegimeTag::BorderlineQ2;
        }
        if let ExtReal::Finite(qs) = q_sobolev(p.n) {
            let admissible = if ell_zero {
                q < qs && !eq(q, qs)
            } else {
                q < qs || eq(q, qs)
            };
            if !admissible {
                return RegimeTag::SupercriticalQS;
            }
        }
        return RegimeTag::CaseI;
    }
    if ell > n || eq(ell, n) {
        return RegimeTag::CaseVI;
    }
    if eq(q, q1) {
        RegimeTag::CaseIV
    } else if q < q1 {
        RegimeTag::CaseII
    } else {
        RegimeTag::CaseV
    }
}

/// Open interval `(lo, hi)`; empty when `hi <= lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: ExtReal,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        self.hi.value() <= self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi.value()
    }

    pub fn midpoint(&self) -> Option<f64> {
        match self.hi {
            ExtReal::Finite(h) if h > self.lo => Some(0.5 * (self.lo + h)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonradialWindow {
    /// q-window for the pure power `u^q`.
    pub lane_emden_q_range: Interval,
    /// ℓ-window for the given q and ε₀; `None` when the radicand is negative.
    pub henon_ell_range: Option<Interval>,
    pub epsilon0: f64,
    /// Bifurcation value (N-1)/(q-1) of the sphere problem.
    pub a_star: f64,
}

pub const DEFAULT_EPSILON0: f64 = 0.05;

pub fn lane_emden_window(n: u32) -> Result<Interval, ParamError> {
    if n < 4 {
        return Err(ParamError::Window(format!(
            "non-radial windows need N >= 4 (got {n})"
        )));
    }
    let lo = q_sobolev(n).value();
    let hi = if n <= 11 {
        ExtReal::PosInf
    } else {
        let nf = n as f64;
        let num = (nf - 3.0).powi(2) - 4.0 * nf + 4.0 + 8.0 * (nf - 2.0).sqrt();
        ExtReal::Finite(num / ((nf - 3.0) * (nf - 11.0)))
    };
    Ok(Interval { lo, hi })
}

/// ℓ corresponding to the sphere coefficient `a` through a = γ(N-2-γ)
/// on the branch γ ≤ (N-2)/2. `None` when a > ((N-2)/2)².
pub fn ell_for_sphere_coefficient(n: u32, q: f64, a: f64) -> Option<f64> {
    let h = (n as f64 - 2.0) / 2.0;
    let rad = h * h - a;
    if rad < 0.0 {
        return None;
    }
    Some(2.0 - (q - 1.0) * h + (q - 1.0) * rad.sqrt())
}

pub fn nonradial_windows(p: &ProblemParams, epsilon0: f64) -> Result<NonradialWindow, ParamError> {
    let p = ProblemParams::new(p.n, p.ell, p.q)?;
    let lane = lane_emden_window(p.n)?;
    if p.q <= 1.0 {
        return Err(ParamError::Window(format!("q must exceed 1 (got {})", p.q)));
    }
    let a_star = (p.nf() - 1.0) / (p.q - 1.0);
    if !(0.0..a_star).contains(&epsilon0) {
        return Err(ParamError::Window(format!(
            "epsilon0 must lie in [0, {a_star}) (got {epsilon0})"
        )));
    }
    let henon = match (
        ell_for_sphere_coefficient(p.n, p.q, a_star),
        ell_for_sphere_coefficient(p.n, p.q, a_star - epsilon0),
    ) {
        (Some(lo), Some(hi)) => Some(Interval {
            lo,
            hi: ExtReal::Finite(hi),
        }),
        _ => None,
    };
    Ok(NonradialWindow {
        lane_emden_q_range: lane,
        henon_ell_range: henon,
        epsilon0,
        a_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pp(n: u32, ell: f64, q: f64) -> ProblemParams {
        ProblemParams::new(n, ell, q).unwrap()
    }

    #[test]
    fn three_dimensions_have_no_sobolev_threshold() {
        let c = derive_constants(&pp(3, 0.0, 2.0)).unwrap();
        assert_eq!(c.q_s, ExtReal::PosInf);
    }

    #[test]
    fn four_dimensional_lane_emden_thresholds() {
        let c = derive_constants(&pp(4, 0.0, 3.0)).unwrap();
        assert_relative_eq!(c.q1, 2.0, max_relative = 1e-12);
        assert_relative_eq!(c.q2, 3.0, max_relative = 1e-12);
        assert_eq!(c.q_s, ExtReal::Finite(5.0));
    }

    #[test]
    fn sublinear_constants_and_basic_residual() {
        let p = pp(5, 3.0, 0.5);
        let c = derive_constants(&p).unwrap();
        assert_relative_eq!(c.gamma.unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(c.l.unwrap(), 0.25, max_relative = 1e-12);
        // L r^(-γ) in u'' + (N-1)u'/r + r^(-ℓ)u^q
        let (l, g) = (0.25f64, 2.0f64);
        for r in [0.3f64, 1.0, 7.0] {
            let u = l * r.powf(-g);
            let du = -g * l * r.powf(-g - 1.0);
            let ddu = g * (g + 1.0) * l * r.powf(-g - 2.0);
            let res = ddu + 4.0 * du / r + r.powf(-3.0) * u.powf(0.5);
            assert!(res.abs() <= 1e-13 * ddu.abs());
        }
    }

    #[test]
    fn linear_case_has_no_gamma() {
        let c = derive_constants(&pp(4, 1.0, 1.0)).unwrap();
        assert!(c.gamma.is_none() && c.l.is_none());
    }

    #[test]
    fn rejects_low_dimension() {
        assert_eq!(ProblemParams::new(2, 0.0, 3.0), Err(ParamError::Dimension(2)));
    }

    #[test]
    fn documented_labels() {
        assert_eq!(classify(&pp(3, 0.0, 1.0)).tag, RegimeTag::NonexistenceVII);
        assert_eq!(classify(&pp(4, 0.0, 3.0)).tag, RegimeTag::BorderlineQ2);
        assert_eq!(classify(&pp(5, 2.5, 0.5)).tag, RegimeTag::CaseII);
        assert_eq!(classify(&pp(5, 3.0, 2.0 / 3.0)).tag, RegimeTag::CaseIV);
        assert_eq!(classify(&pp(5, 2.0, 0.5)).tag, RegimeTag::NonexistenceVIII);
        assert_eq!(classify(&pp(5, 2.0, 3.0)).tag, RegimeTag::CaseIII);
        assert_eq!(classify(&pp(5, 3.0, 2.0)).tag, RegimeTag::CaseV);
        assert_eq!(classify(&pp(5, 5.0, 2.0)).tag, RegimeTag::CaseVI);
        assert_eq!(classify(&pp(4, 0.0, 6.0)).tag, RegimeTag::SupercriticalQS);
    }

    #[test]
    fn sobolev_strictness_depends_on_ell() {
        // qS = 5 for N = 4
        assert_eq!(classify(&pp(4, 0.0, 5.0)).tag, RegimeTag::SupercriticalQS);
        assert_eq!(classify(&pp(4, 0.5, 5.0)).tag, RegimeTag::CaseI);
        assert_eq!(classify(&pp(4, 0.5, 5.1)).tag, RegimeTag::SupercriticalQS);
        assert_eq!(classify(&pp(3, 0.0, 50.0)).tag, RegimeTag::CaseI);
    }

    #[test]
    fn decay_bound_flag_and_center() {
        let l = classify(&pp(3, 0.0, 7.0));
        assert_eq!(l.requirements, vec![Requirement::NeedsDecayBound]);
        assert_eq!(l.symmetry_center, SymmetryCenter::SomePoint);
        let l = classify_on(&pp(3, 0.0, 7.0), Domain::Punctured);
        assert_eq!(l.symmetry_center, SymmetryCenter::Origin);
        let l = classify(&pp(5, 0.0, 2.0));
        assert!(l.requirements.is_empty());
        assert_eq!(classify(&pp(5, 0.5, 2.0)).symmetry_center, SymmetryCenter::Origin);
    }

    #[test]
    fn lane_emden_window_shapes() {
        let w = lane_emden_window(4).unwrap();
        assert_eq!(w.lo, 5.0);
        assert_eq!(w.hi, ExtReal::PosInf);
        assert!(w.contains(6.0));
        let w = lane_emden_window(12).unwrap();
        let expected = (81.0 - 48.0 + 4.0 + 8.0 * 10f64.sqrt()) / 9.0;
        assert_relative_eq!(w.hi.value(), expected, max_relative = 1e-14);
        assert_relative_eq!(w.lo, 13.0 / 9.0, max_relative = 1e-14);
        assert!(lane_emden_window(3).is_err());
    }

    #[test]
    fn henon_window_collapses_without_epsilon() {
        let w = nonradial_windows(&pp(4, 0.0, 6.0), 0.0).unwrap();
        assert!(w.henon_ell_range.unwrap().is_empty());
        assert!(nonradial_windows(&pp(3, 0.0, 6.0), 0.05).is_err());
        assert!(nonradial_windows(&pp(4, 0.0, 6.0), 0.6).is_err());
    }

    #[test]
    fn henon_window_maps_to_sphere_coefficients() {
        // the endpoints correspond to a = a* and a = a* - ε0 through a = γ(N-2-γ)
        let w = nonradial_windows(&pp(4, 0.0, 6.0), 0.05).unwrap();
        let iv = w.henon_ell_range.unwrap();
        for (ell, a) in [(iv.lo, 0.6), (iv.hi.value(), 0.55)] {
            let g = (2.0 - ell) / 5.0;
            assert_relative_eq!(g * (2.0 - g), a, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn q1_below_q2_below_ell_two(n in 3u32..20, ell in 0.0f64..1.999) {
            let (a, b) = (q1(n, ell), q2(n, ell));
            prop_assert!(a < b);
            prop_assert!(((b - a) - (2.0 - ell) / (n as f64 - 2.0)).abs() < 1e-12);
        }

        #[test]
        fn gamma_identity(n in 3u32..20, ell in -1.0f64..10.0, q in 0.01f64..20.0) {
            prop_assume!((q - 1.0).abs() > 1e-6);
            let c = derive_constants(&pp(n, ell, q)).unwrap();
            let g = c.gamma.unwrap();
            prop_assert!((g * (q - 1.0) - (2.0 - ell)).abs() <= 1e-10 * (1.0 + (2.0 - ell).abs()));
            if let (Some(l), Some(a)) = (c.l, c.a_sphere) {
                prop_assert!((l.powf(q - 1.0) - a).abs() <= 1e-9 * a.abs().max(1e-300));
            }
        }

        #[test]
        fn symmetric_cases_have_real_l(n in 3u32..13, ell in 0.0f64..12.0, q in 0.01f64..15.0) {
            let p = pp(n, ell, q);
            let tag = classify(&p).tag;
            if matches!(tag, RegimeTag::CaseI | RegimeTag::CaseII) {
                prop_assert!(p.a_sphere().unwrap() > 0.0);
                prop_assert!(p.l().is_ok());
            }
        }

        #[test]
        fn henon_window_inside_zero_two(n in 4u32..16, qx in 0.01f64..10.0, frac in 0.0f64..0.999) {
            let qs = q_sobolev(n).value();
            let q = qs + qx;
            let a_star = (n as f64 - 1.0) / (q - 1.0);
            let w = nonradial_windows(&pp(n, 1.0, q), frac * a_star).unwrap();
            let iv = w.henon_ell_range.expect("radicand is positive above qS");
            prop_assert!(iv.lo > 0.0 && iv.hi.value() < 2.0);
            prop_assert!(iv.lo <= iv.hi.value());
        }
    }

    fn reference_tag(n: u32, ell: f64, q: f64) -> RegimeTag {
        // independent transcription of the condition lists, applied on grid
        // points that avoid all thresholds
        let nf = n as f64;
        let q1 = (nf - ell) / (nf - 2.0);
        let q2 = (nf + 2.0 - 2.0 * ell) / (nf - 2.0);
        let qs = if n == 3 { f64::INFINITY } else { (nf + 1.0) / (nf - 3.0) };
        if ell < 0.0 {
            RegimeTag::Unclassified
        } else if ell < 2.0 && q <= q1 {
            RegimeTag::NonexistenceVII
        } else if ell < 2.0 && q != q2 && (n == 3 || (ell > 0.0 && q <= qs) || (ell == 0.0 && q < qs)) {
            RegimeTag::CaseI
        } else if ell < 2.0 && q == q2 {
            RegimeTag::BorderlineQ2
        } else if ell < 2.0 {
            RegimeTag::SupercriticalQS
        } else if ell > 2.0 && ell < nf && q < q1 {
            RegimeTag::CaseII
        } else if ell > 2.0 && ell < nf && q > q1 {
            RegimeTag::CaseV
        } else if ell >= nf {
            RegimeTag::CaseVI
        } else {
            RegimeTag::Unclassified
        }
    }

    #[test]
    fn grid_partition_matches_condition_lists() {
        for n in [3u32, 4, 5, 12] {
            let mut counts = std::collections::HashMap::new();
            for i in 0..200 {
                // offsets keep grid points off every threshold line
                let ell = -0.5 + (n as f64 + 1.0) * (i as f64 + 0.37) / 200.0;
                for j in 0..200 {
                    let q = 0.05 + 12.0 * (j as f64 + 0.41) / 200.0;
                    let p = pp(n, ell, q);
                    let tag = classify(&p).tag;
                    assert_eq!(tag, classify(&p).tag);
                    assert_eq!(tag, reference_tag(n, ell, q), "N={n} ell={ell} q={q}");
                    *counts.entry(tag).or_insert(0usize) += 1;
                }
            }
            assert_eq!(counts.values().sum::<usize>(), 200 * 200);
            assert!(counts.contains_key(&RegimeTag::CaseI));
            assert!(counts.contains_key(&RegimeTag::CaseII));
            assert!(counts.contains_key(&RegimeTag::NonexistenceVII));
        }
    }

    #[test]
    fn ties_count_as_equality() {
        let q = q1(5, 3.0) * (1.0 + 1e-14);
        assert_eq!(classify(&pp(5, 3.0, q)).tag, RegimeTag::CaseIV);
        let q = q2(5, 0.5) * (1.0 - 1e-14);
        assert_eq!(classify(&pp(5, 0.5, q)).tag, RegimeTag::BorderlineQ2);
        assert_eq!(classify(&pp(5, 2.0 + 1e-14, 3.0)).tag, RegimeTag::CaseIII);
        assert_eq!(classify(&pp(5, 5.0 - 1e-14, 0.3)).tag, RegimeTag::CaseVI);
        assert_eq!(classify(&pp(5, 2.0, 1.0)).tag, RegimeTag::Unclassified);
    }
}
