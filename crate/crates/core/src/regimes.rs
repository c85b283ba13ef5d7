//! Regime classification of neck families `delta(eps)`, `eta(eps)` and the
//! limit constants predicted for each regime.
//!
//! Families are power-log laws `c * eps^p * |ln eps|^r`. All limits as
//! `eps -> 0` are decided symbolically: powers are compared first, then log
//! powers (a larger log power means a larger quantity), then prefactors.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::NeckParams;

/// `prefactor * eps^power * |ln eps|^log_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLogLaw {
    pub prefactor: f64,
    pub power: f64,
    pub log_power: f64,
}

impl PowerLogLaw {
    pub const fn new(prefactor: f64, power: f64, log_power: f64) -> Self {
        Self {
            prefactor,
            power,
            log_power,
        }
    }

    pub const fn power(prefactor: f64, power: f64) -> Self {
        Self::new(prefactor, power, 0.0)
    }

    /// The identity law `eps`.
    pub const fn eps() -> Self {
        Self::new(1.0, 1.0, 0.0)
    }

    pub fn eval(&self, eps: f64) -> f64 {
        self.prefactor * eps.powf(self.power) * eps.ln().abs().powf(self.log_power)
    }

    pub fn div(&self, other: &Self) -> Self {
        Self::new(
            self.prefactor / other.prefactor,
            self.power - other.power,
            self.log_power - other.log_power,
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            self.prefactor * other.prefactor,
            self.power + other.power,
            self.log_power + other.log_power,
        )
    }

    /// Limit as `eps -> 0`.
    pub fn limit(&self) -> Limit {
        match self.power.partial_cmp(&0.0).expect("finite power") {
            Ordering::Greater => Limit::Zero,
            Ordering::Less => Limit::Infinite,
            Ordering::Equal => match self.log_power.partial_cmp(&0.0).expect("finite log power") {
                Ordering::Less => Limit::Zero,
                Ordering::Greater => Limit::Infinite,
                Ordering::Equal => Limit::Finite(self.prefactor),
            },
        }
    }

    fn validate(&self, which: &'static str) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidLaw {
                which,
                reason: reason.to_string(),
            })
        };
        if !(self.prefactor.is_finite() && self.prefactor > 0.0) {
            return bad("prefactor must be positive and finite");
        }
        if !self.power.is_finite() || !self.log_power.is_finite() {
            return bad("exponents must be finite");
        }
        if self.power <= 0.0 {
            return bad("power must be positive so that the length vanishes as eps -> 0");
        }
        Ok(())
    }
}

/// Limit of a positive quantity as `eps -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Limit {
    Zero,
    Finite(f64),
    Infinite,
}

impl Limit {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Limit::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFamily {
    pub delta_law: PowerLogLaw,
    pub eta_law: PowerLogLaw,
}

impl ScalingFamily {
    pub fn new(delta_law: PowerLogLaw, eta_law: PowerLogLaw) -> Result<Self> {
        delta_law.validate("delta")?;
        eta_law.validate("eta")?;
        let family = Self { delta_law, eta_law };
        match family.eta_law.div(&family.delta_law).limit() {
            Limit::Infinite => Err(Error::InvalidLaw {
                which: "eta",
                reason: "eta must not exceed delta as eps -> 0".into(),
            }),
            Limit::Finite(c) if c > 1.0 => Err(Error::InvalidLaw {
                which: "eta",
                reason: format!("eta/delta tends to {c} > 1"),
            }),
            _ => Ok(family),
        }
    }

    /// Concrete neck at a given `eps`.
    pub fn neck(&self, eps: f64) -> Result<NeckParams> {
        NeckParams::new(eps, self.delta_law.eval(eps), self.eta_law.eval(eps))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    SuperThin,
    FlatThin,
    WindowThick,
    NarrowThick,
    LetterBoxSub,
    LetterBoxCritical,
    LetterBoxSuper,
    OutOfScopeKS,
}

impl RegimeTag {
    pub const ALL: [RegimeTag; 8] = [
        RegimeTag::SuperThin,
        RegimeTag::FlatThin,
        RegimeTag::WindowThick,
        RegimeTag::NarrowThick,
        RegimeTag::LetterBoxSub,
        RegimeTag::LetterBoxCritical,
        RegimeTag::LetterBoxSuper,
        RegimeTag::OutOfScopeKS,
    ];

    /// True when the whole transition is predicted inside the neck.
    pub fn wall_in_neck(self) -> bool {
        matches!(
            self,
            RegimeTag::SuperThin | RegimeTag::FlatThin | RegimeTag::LetterBoxSub
        )
    }

    /// True when the whole transition is predicted outside the neck.
    pub fn wall_outside(self) -> bool {
        matches!(
            self,
            RegimeTag::WindowThick | RegimeTag::NarrowThick | RegimeTag::LetterBoxSuper
        )
    }
}

/// Divergent factor that makes the scaled energy converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rate {
    #[serde(rename = "eps/(delta*eta)")]
    EpsOverDeltaEta,
    #[serde(rename = "1/eta")]
    InverseEta,
    #[serde(rename = "|ln(eta/delta)|/delta")]
    LogRatioOverDelta,
}

impl Rate {
    pub fn symbol(self) -> &'static str {
        match self {
            Rate::EpsOverDeltaEta => "eps/(delta*eta)",
            Rate::InverseEta => "1/eta",
            Rate::LogRatioOverDelta => "|ln(eta/delta)|/delta",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        [Rate::EpsOverDeltaEta, Rate::InverseEta, Rate::LogRatioOverDelta]
            .into_iter()
            .find(|r| r.symbol() == s)
    }

    pub fn eval(self, neck: &NeckParams) -> f64 {
        match self {
            Rate::EpsOverDeltaEta => neck.eps / (neck.delta * neck.eta),
            Rate::InverseEta => 1.0 / neck.eta,
            Rate::LogRatioOverDelta => (neck.eta / neck.delta).ln().abs() / neck.delta,
        }
    }
}

/// Classification of a family with the limit constants in units of
/// `(beta - alpha)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub tag: RegimeTag,
    /// `lim (eta/eps) |ln(eta/delta)|`.
    pub ell: Limit,
    /// `lim delta/eps` when finite.
    pub m_flat: Option<f64>,
    /// `lim eta/eps` when finite.
    pub l_narrow: Option<f64>,
    /// Rate for the total and neck energies.
    pub rate: Option<Rate>,
    /// Rate for the energy outside the neck.
    pub outside_rate: Option<Rate>,
    pub kappa_total: Option<f64>,
    pub kappa_neck: Option<f64>,
    pub kappa_outside: Option<f64>,
    pub notes: Vec<String>,
}

/// Limit constants in absolute units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub total: f64,
    pub neck: f64,
    pub outside: f64,
}

/// `lim (eta/eps) |ln(eta/delta)|` for a family with `eta << delta`.
fn ell_limit(family: &ScalingFamily) -> Limit {
    let eta_over_eps = family.eta_law.div(&PowerLogLaw::eps());
    let gap = family.eta_law.power - family.delta_law.power;
    if gap > 0.0 {
        // |ln(eta/delta)| ~ gap * |ln eps|
        eta_over_eps
            .mul(&PowerLogLaw::new(gap, 0.0, 1.0))
            .limit()
    } else {
        // equal powers: |ln(eta/delta)| grows like ln|ln eps|, slower than any
        // power of |ln eps|, so only a vanishing eta/eps keeps the product small
        match eta_over_eps.limit() {
            Limit::Zero => Limit::Zero,
            _ => Limit::Infinite,
        }
    }
}

fn constants(tag: RegimeTag, ell: Limit) -> (Option<Rate>, Option<Rate>, [Option<f64>; 3]) {
    use RegimeTag::*;
    match tag {
        SuperThin | LetterBoxSub => (
            Some(Rate::EpsOverDeltaEta),
            Some(Rate::EpsOverDeltaEta),
            [Some(1.0), Some(1.0), Some(0.0)],
        ),
        FlatThin => (
            Some(Rate::InverseEta),
            Some(Rate::InverseEta),
            [Some(1.0), Some(1.0), Some(0.0)],
        ),
        WindowThick | NarrowThick | LetterBoxSuper => (
            Some(Rate::LogRatioOverDelta),
            Some(Rate::LogRatioOverDelta),
            [Some(PI), Some(0.0), Some(PI)],
        ),
        LetterBoxCritical => {
            let l = ell.finite().expect("critical regime has finite ell");
            let d = PI + l;
            (
                Some(Rate::EpsOverDeltaEta),
                Some(Rate::LogRatioOverDelta),
                [Some(PI / d), Some(PI * PI / (d * d)), Some(PI * l * l / (d * d))],
            )
        }
        OutOfScopeKS => (None, None, [None, None, None]),
    }
}

pub fn classify(family: &ScalingFamily) -> Result<RegimeReport> {
    // re-run the invariants in case the struct was built by hand
    let family = ScalingFamily::new(family.delta_law, family.eta_law)?;
    let eps = PowerLogLaw::eps();
    let delta_over_eps = family.delta_law.div(&eps).limit();
    let eta_over_eps = family.eta_law.div(&eps).limit();
    let eta_over_delta = family.eta_law.div(&family.delta_law).limit();

    let mut notes = Vec::new();
    let mut m_flat = None;
    let mut l_narrow = None;
    let mut ell = Limit::Zero;

    let tag = if let Limit::Finite(_) = eta_over_delta {
        RegimeTag::OutOfScopeKS
    } else {
        ell = ell_limit(&family);
        match delta_over_eps {
            Limit::Zero => RegimeTag::SuperThin,
            Limit::Finite(m) => {
                m_flat = Some(m);
                if m != 1.0 {
                    notes.push(format!(
                        "delta/eps tends to {m}; the limit constants are stated for the value 1"
                    ));
                }
                RegimeTag::FlatThin
            }
            Limit::Infinite => match eta_over_eps {
                Limit::Infinite => RegimeTag::WindowThick,
                Limit::Finite(l) => {
                    l_narrow = Some(l);
                    RegimeTag::NarrowThick
                }
                Limit::Zero => match ell {
                    Limit::Zero => RegimeTag::LetterBoxSub,
                    Limit::Finite(_) => RegimeTag::LetterBoxCritical,
                    Limit::Infinite => RegimeTag::LetterBoxSuper,
                },
            },
        }
    };
    if tag == RegimeTag::OutOfScopeKS {
        notes.push("delta and eta are comparable; no predictions in this setting".into());
    }

    let (rate, outside_rate, [kappa_total, kappa_neck, kappa_outside]) = constants(tag, ell);
    Ok(RegimeReport {
        tag,
        ell,
        m_flat,
        l_narrow,
        rate,
        outside_rate,
        kappa_total,
        kappa_neck,
        kappa_outside,
        notes,
    })
}

/// Limit constants `(total, neck, outside)` for wells `alpha`, `beta`.
pub fn predicted_limits(report: &RegimeReport, alpha: f64, beta: f64) -> Result<Prediction> {
    let scale = (beta - alpha).powi(2);
    let (total, neck, outside) = match report.tag {
        RegimeTag::OutOfScopeKS => return Err(Error::OutOfScope),
        RegimeTag::LetterBoxCritical => {
            let l = report.ell.finite().ok_or(Error::MissingEll)?;
            let d = PI + l;
            (PI / d, PI * PI / (d * d), PI * l * l / (d * d))
        }
        tag => {
            let (_, _, k) = constants(tag, report.ell);
            (k[0].unwrap(), k[1].unwrap(), k[2].unwrap())
        }
    };
    Ok(Prediction {
        total: total * scale,
        neck: neck * scale,
        outside: outside * scale,
    })
}

/// Finite-eps discriminant `(eta/eps) |ln(eta/delta)|`.
pub fn finite_ratio(neck: &NeckParams) -> Result<f64> {
    if !(neck.eta < neck.delta) {
        return Err(Error::LogSingularity {
            delta: neck.delta,
            eta: neck.eta,
        });
    }
    Ok(neck.eta / neck.eps * (neck.eta / neck.delta).ln().abs())
}

/// Symbolic form of a limit constant, e.g. `pi*(beta-alpha)^2`.
pub fn kappa_symbol(value: Option<f64>, tag: RegimeTag, which: KappaPart) -> Option<String> {
    let v = value?;
    Some(match (tag, which) {
        (RegimeTag::LetterBoxCritical, KappaPart::Total) => "pi*(beta-alpha)^2/(pi+ell)".into(),
        (RegimeTag::LetterBoxCritical, KappaPart::Neck) => "pi^2*(beta-alpha)^2/(pi+ell)^2".into(),
        (RegimeTag::LetterBoxCritical, KappaPart::Outside) => {
            "pi*ell^2*(beta-alpha)^2/(pi+ell)^2".into()
        }
        _ if v == 0.0 => "0".into(),
        _ if v == 1.0 => "(beta-alpha)^2".into(),
        _ if v == PI => "pi*(beta-alpha)^2".into(),
        _ => format!("{v}*(beta-alpha)^2"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaPart {
    Total,
    Neck,
    Outside,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(d: PowerLogLaw, e: PowerLogLaw) -> ScalingFamily {
        ScalingFamily::new(d, e).unwrap()
    }

    #[test]
    fn basic_tags() {
        let p = PowerLogLaw::power;
        assert_eq!(classify(&fam(p(1.0, 2.0), p(1.0, 3.0))).unwrap().tag, RegimeTag::SuperThin);
        assert_eq!(classify(&fam(p(1.0, 0.5), p(1.0, 0.5))).unwrap().tag, RegimeTag::OutOfScopeKS);
        assert_eq!(classify(&fam(p(1.0, 0.5), p(1.0, 0.75))).unwrap().tag, RegimeTag::WindowThick);
    }

    #[test]
    fn critical_ell() {
        let l0 = 3.0;
        let r = classify(&fam(
            PowerLogLaw::power(1.0, 0.5),
            PowerLogLaw::new(l0, 1.0, -1.0),
        ))
        .unwrap();
        assert_eq!(r.tag, RegimeTag::LetterBoxCritical);
        assert_eq!(r.ell, Limit::Finite(l0 / 2.0));
    }

    #[test]
    fn rejects_bad_laws() {
        let p = PowerLogLaw::power;
        assert!(ScalingFamily::new(p(1.0, 0.0), p(1.0, 1.0)).is_err());
        assert!(ScalingFamily::new(p(1.0, 2.0), p(1.0, 1.0)).is_err());
        assert!(ScalingFamily::new(p(1.0, 1.0), p(2.0, 1.0)).is_err());
        assert!(ScalingFamily::new(p(-1.0, 1.0), p(1.0, 2.0)).is_err());
    }

    #[test]
    fn critical_constants_at_pi() {
        let r = RegimeReport {
            tag: RegimeTag::LetterBoxCritical,
            ell: Limit::Finite(PI),
            m_flat: None,
            l_narrow: None,
            rate: None,
            outside_rate: None,
            kappa_total: None,
            kappa_neck: None,
            kappa_outside: None,
            notes: vec![],
        };
        let p = predicted_limits(&r, 0.0, 1.0).unwrap();
        assert!((p.total - 0.5).abs() < 1e-15);
        assert!((p.neck - 0.25).abs() < 1e-15);
        assert!((p.outside - PI / 4.0).abs() < 1e-15);
        let missing = RegimeReport { ell: Limit::Infinite, ..r };
        assert_eq!(predicted_limits(&missing, 0.0, 1.0), Err(Error::MissingEll));
    }

    #[test]
    fn finite_ratio_values() {
        let v = finite_ratio(&NeckParams::new(0.01, 0.1, 0.001).unwrap()).unwrap();
        assert!((v - 0.1 * 100f64.ln()).abs() < 1e-12);
        assert!(finite_ratio(&NeckParams::new(0.01, 0.1, 0.1).unwrap()).is_err());
    }
}
