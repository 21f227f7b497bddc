//! Reconstruction laws: CAPM (deterministic dense weights), MECAPM
//! (geometric weights, strength-constrained maximum entropy) and ECAPM
//! (fitness-induced Bernoulli topology with degree-corrected weights).
//!
//! Nothing here stores an N×M matrix; every per-pair quantity is computed on
//! demand from (z, V, C).

use std::fmt;
use std::str::FromStr;

use crate::calibration::{CalibrationResult, ZSolver};
use crate::error::{Error, Result};
use crate::network::{BipartiteNetwork, StrengthSequences};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Capm,
    Mecapm,
    Ecapm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Capm => "capm",
            ModelKind::Mecapm => "mecapm",
            ModelKind::Ecapm => "ecapm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "capm" => Ok(ModelKind::Capm),
            "mecapm" => Ok(ModelKind::Mecapm),
            "ecapm" => Ok(ModelKind::Ecapm),
            other => Err(Error::InvalidParameter(format!("unknown model kind '{other}'"))),
        }
    }
}

/// CAPM weight ω_iα = V_i C_α / W.
pub fn capm_weight(strengths: &StrengthSequences, i: usize, a: usize) -> Result<f64> {
    let w = strengths.total();
    if !(w > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(strengths.holder()[i] * strengths.issuer()[a] / w)
}

/// Row i of the expected weight matrix. The three laws share it.
pub fn expected_weight_row(_kind: ModelKind, strengths: &StrengthSequences, i: usize) -> Vec<f64> {
    let w = strengths.total();
    let v = strengths.holder()[i];
    if !(w > 0.0) || v == 0.0 {
        return vec![0.0; strengths.n_issuers()];
    }
    strengths.issuer().iter().map(|c| v * c / w).collect()
}

/// Distribution summary of a single pair weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightLaw {
    pub mean: f64,
    pub variance: f64,
    pub link_probability: f64,
    /// Weight of an existing link (ECAPM only).
    pub conditional_weight: Option<f64>,
}

/// Moments of one pair weight w, enough for second-order statistics of the
/// overlap Σ_jα w_jα w_iα.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMoments {
    pub mean: f64,
    /// E[w²]
    pub second: f64,
    pub variance: f64,
    /// Cov(w², w) = E[w³] − E[w]E[w²]
    pub cov_square: f64,
    /// Var(w²) = E[w⁴] − E[w²]²
    pub var_square: f64,
}

impl PairMoments {
    pub const ZERO: PairMoments = PairMoments {
        mean: 0.0,
        second: 0.0,
        variance: 0.0,
        cov_square: 0.0,
        var_square: 0.0,
    };
}

/// An ensemble of networks whose pair weights are independent.
pub trait PairEnsemble: Sync + Send {
    fn kind(&self) -> ModelKind;

    fn strengths(&self) -> &StrengthSequences;

    fn link_probability(&self, i: usize, a: usize) -> f64;

    fn moments(&self, i: usize, a: usize) -> PairMoments;

    fn weight_law(&self, i: usize, a: usize) -> WeightLaw;

    /// Weight drawn by inverse transform from a uniform `u` in (0, 1).
    /// Zero means no link.
    fn draw_weight(&self, i: usize, a: usize, u: f64) -> f64;

    fn mean_weight(&self, i: usize, a: usize) -> f64 {
        let s = self.strengths();
        s.holder()[i] * s.issuer()[a] / s.total()
    }

    fn n_holders(&self) -> usize {
        self.strengths().n_holders()
    }

    fn n_issuers(&self) -> usize {
        self.strengths().n_issuers()
    }
}

fn check_total(strengths: &StrengthSequences) -> Result<()> {
    if strengths.total() > 0.0 {
        Ok(())
    } else {
        Err(Error::ZeroTotalWeight)
    }
}

/// Fitness-induced topology p_iα = zV_iC_α/(1+zV_iC_α) with conditional
/// weights (z⁻¹ + V_iC_α)/W.
///
/// `z = +∞` is accepted as the saturated limit: every pair with
/// V_iC_α > 0 is linked with its CAPM weight.
#[derive(Clone, Debug, PartialEq)]
pub struct EcapmModel {
    z: f64,
    strengths: StrengthSequences,
}

impl EcapmModel {
    pub fn new(z: f64, strengths: StrengthSequences) -> Result<Self> {
        if !(z > 0.0) {
            return Err(Error::InvalidParameter(format!("z must be positive, got {z}")));
        }
        check_total(&strengths)?;
        Ok(Self { z, strengths })
    }

    /// Calibrates z so that ⟨L⟩ equals `target_links`.
    pub fn calibrate(
        strengths: StrengthSequences,
        target_links: f64,
        solver: &ZSolver,
    ) -> Result<(Self, CalibrationResult)> {
        check_total(&strengths)?;
        let result = solver.solve(strengths.holder(), strengths.issuer(), target_links)?;
        Ok((Self::new(result.z, strengths)?, result))
    }

    /// Calibrates on the observed strengths and link count of `net`.
    pub fn from_network(net: &BipartiteNetwork, solver: &ZSolver) -> Result<(Self, CalibrationResult)> {
        Self::calibrate(net.strengths(), net.n_links() as f64, solver)
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    fn product(&self, i: usize, a: usize) -> f64 {
        self.strengths.holder()[i] * self.strengths.issuer()[a]
    }

    fn probability_of(&self, product: f64) -> f64 {
        if product <= 0.0 {
            0.0
        } else if self.z.is_infinite() {
            1.0
        } else {
            let x = self.z * product;
            x / (1.0 + x)
        }
    }

    fn conditional_of(&self, product: f64) -> f64 {
        (self.z.recip() + product) / self.strengths.total()
    }

    /// (z⁻¹ + V_iC_α)/W; an error when V_iC_α = 0 since the link cannot exist.
    pub fn conditional_weight(&self, i: usize, a: usize) -> Result<f64> {
        let x = self.product(i, a);
        if x <= 0.0 {
            return Err(Error::ImpossibleLink { holder: i, issuer: a });
        }
        Ok(self.conditional_of(x))
    }

    /// Expected holder degrees Σ_α p_iα.
    pub fn expected_holder_degree(&self, i: usize) -> f64 {
        (0..self.n_issuers()).map(|a| self.link_probability(i, a)).sum()
    }
}

impl PairEnsemble for EcapmModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Ecapm
    }

    fn strengths(&self) -> &StrengthSequences {
        &self.strengths
    }

    fn link_probability(&self, i: usize, a: usize) -> f64 {
        self.probability_of(self.product(i, a))
    }

    fn moments(&self, i: usize, a: usize) -> PairMoments {
        let x = self.product(i, a);
        if x <= 0.0 {
            return PairMoments::ZERO;
        }
        let p = self.probability_of(x);
        let c = self.conditional_of(x);
        let q = 1.0 - p;
        PairMoments {
            mean: x / self.strengths.total(),
            second: c * c * p,
            variance: c * c * p * q,
            cov_square: c * c * c * p * q,
            var_square: c * c * c * c * p * q,
        }
    }

    fn weight_law(&self, i: usize, a: usize) -> WeightLaw {
        let x = self.product(i, a);
        let mean = x / self.strengths.total();
        if x <= 0.0 {
            return WeightLaw {
                mean: 0.0,
                variance: 0.0,
                link_probability: 0.0,
                conditional_weight: None,
            };
        }
        let p = self.probability_of(x);
        WeightLaw {
            mean,
            variance: mean * mean * (1.0 / p - 1.0),
            link_probability: p,
            conditional_weight: Some(self.conditional_of(x)),
        }
    }

    fn draw_weight(&self, i: usize, a: usize, u: f64) -> f64 {
        let x = self.product(i, a);
        if x > 0.0 && u < self.probability_of(x) {
            self.conditional_of(x)
        } else {
            0.0
        }
    }
}

/// Strength-constrained maximum-entropy weights: each pair weight is
/// geometric on {0, 1, 2, ...} with mean ω_iα, so a link exists with
/// probability q_iα = ω/(1+ω). Weights are in the units of the strengths.
#[derive(Clone, Debug, PartialEq)]
pub struct MecapmModel {
    strengths: StrengthSequences,
}

impl MecapmModel {
    pub fn new(strengths: StrengthSequences) -> Result<Self> {
        check_total(&strengths)?;
        Ok(Self { strengths })
    }

    pub fn from_network(net: &BipartiteNetwork) -> Result<Self> {
        Self::new(net.strengths())
    }
}

impl PairEnsemble for MecapmModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Mecapm
    }

    fn strengths(&self) -> &StrengthSequences {
        &self.strengths
    }

    fn link_probability(&self, i: usize, a: usize) -> f64 {
        let w = self.mean_weight(i, a);
        w / (1.0 + w)
    }

    fn moments(&self, i: usize, a: usize) -> PairMoments {
        let m = self.mean_weight(i, a);
        PairMoments {
            mean: m,
            second: m * (1.0 + 2.0 * m),
            variance: m * (1.0 + m),
            cov_square: m * (1.0 + m) * (1.0 + 4.0 * m),
            var_square: m * (1.0 + m * (13.0 + m * (32.0 + 20.0 * m))),
        }
    }

    fn weight_law(&self, i: usize, a: usize) -> WeightLaw {
        let m = self.mean_weight(i, a);
        WeightLaw {
            mean: m,
            variance: m * (1.0 + m),
            link_probability: m / (1.0 + m),
            conditional_weight: None,
        }
    }

    fn draw_weight(&self, i: usize, a: usize, u: f64) -> f64 {
        let m = self.mean_weight(i, a);
        if m <= 0.0 {
            return 0.0;
        }
        // P(w ≥ k) = q^k, so w = ⌊ln u / ln q⌋ with ln q = −ln(1 + 1/ω).
        let log_q = -(1.0 / m).ln_1p();
        (u.ln() / log_q).floor()
    }
}

/// The CAPM baseline as a (degenerate) ensemble: every pair with
/// V_iC_α > 0 is linked with weight ω_iα.
#[derive(Clone, Debug, PartialEq)]
pub struct CapmModel {
    strengths: StrengthSequences,
}

impl CapmModel {
    pub fn new(strengths: StrengthSequences) -> Result<Self> {
        check_total(&strengths)?;
        Ok(Self { strengths })
    }

    pub fn from_network(net: &BipartiteNetwork) -> Result<Self> {
        Self::new(net.strengths())
    }
}

impl PairEnsemble for CapmModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Capm
    }

    fn strengths(&self) -> &StrengthSequences {
        &self.strengths
    }

    fn link_probability(&self, i: usize, a: usize) -> f64 {
        if self.mean_weight(i, a) > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn moments(&self, i: usize, a: usize) -> PairMoments {
        let m = self.mean_weight(i, a);
        PairMoments {
            mean: m,
            second: m * m,
            ..PairMoments::ZERO
        }
    }

    fn weight_law(&self, i: usize, a: usize) -> WeightLaw {
        let m = self.mean_weight(i, a);
        WeightLaw {
            mean: m,
            variance: 0.0,
            link_probability: self.link_probability(i, a),
            conditional_weight: (m > 0.0).then_some(m),
        }
    }

    fn draw_weight(&self, i: usize, a: usize, _u: f64) -> f64 {
        self.mean_weight(i, a)
    }
}

/// σ_ECAPM / σ_MECAPM for one pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaRatio {
    /// Ratio of the two standard deviations.
    pub exact: f64,
    /// √(1/p − 1), which drops the ω/(1+ω) prefactor.
    pub approximate: f64,
    /// Set when p ∈ {0, 1}, where the ratio degenerates to zero.
    pub degenerate: bool,
}

pub fn weight_sigma_ratio(model: &EcapmModel, i: usize, a: usize) -> SigmaRatio {
    let law = model.weight_law(i, a);
    let p = law.link_probability;
    if law.mean <= 0.0 || p <= 0.0 || p >= 1.0 {
        return SigmaRatio {
            exact: 0.0,
            approximate: 0.0,
            degenerate: true,
        };
    }
    let omega = law.mean;
    let mecapm_var = omega * (1.0 + omega);
    SigmaRatio {
        exact: (law.variance / mecapm_var).sqrt(),
        approximate: (1.0 / p - 1.0).sqrt(),
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn strengths(v: &[f64], c: &[f64]) -> StrengthSequences {
        StrengthSequences::new(v.to_vec(), c.to_vec()).unwrap()
    }

    #[test]
    fn capm_weight_examples() {
        let s = strengths(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(capm_weight(&s, 0, 1).unwrap(), 0.5);
        let s = strengths(&[0.0, 2.0], &[1.0, 1.0]);
        assert_eq!(capm_weight(&s, 0, 0).unwrap(), 0.0);
        let s = strengths(&[1.5, 3.5], &[2.5, 0.0, 2.5]);
        assert_relative_eq!(capm_weight(&s, 1, 2).unwrap(), 1.75);
        let s = strengths(&[0.0], &[0.0]);
        assert!(matches!(capm_weight(&s, 0, 0), Err(Error::ZeroTotalWeight)));
    }

    #[test]
    fn ecapm_probability_and_weight() {
        let m = EcapmModel::new(1.0, strengths(&[1.0, 1.0], &[1.0, 1.0])).unwrap();
        assert_eq!(m.link_probability(0, 0), 0.5);
        assert_eq!(m.conditional_weight(0, 0).unwrap(), 1.0);

        let m = EcapmModel::new(1.0, strengths(&[0.0, 2.0], &[1.0, 1.0])).unwrap();
        assert_eq!(m.link_probability(0, 1), 0.0);
        assert!(matches!(m.conditional_weight(0, 1), Err(Error::ImpossibleLink { .. })));

        let z = 1.0 / 18f64.sqrt();
        let m = EcapmModel::new(z, strengths(&[1.0, 2.0], &[3.0])).unwrap();
        let p = m.link_probability(1, 0);
        assert_relative_eq!(p, 2f64.sqrt() / (1.0 + 2f64.sqrt()), max_relative = 1e-14);
        assert_relative_eq!(p, 0.585786, epsilon = 1e-6);
        let w = m.conditional_weight(1, 0).unwrap();
        assert_relative_eq!(w, (18f64.sqrt() + 6.0) / 3.0, max_relative = 1e-14);
        assert_relative_eq!(w, 3.414214, epsilon = 1e-6);
        assert_relative_eq!(p * w, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn ecapm_mean_identity() {
        let s = strengths(&[1.0, 4.0, 0.5], &[2.0, 3.0, 0.5]);
        let m = EcapmModel::new(0.3, s.clone()).unwrap();
        for i in 0..3 {
            for a in 0..3 {
                let p = m.link_probability(i, a);
                let w = m.conditional_weight(i, a).unwrap();
                assert_relative_eq!(p * w, capm_weight(&s, i, a).unwrap(), max_relative = 1e-14);
                assert_eq!(m.weight_law(i, a).mean, capm_weight(&s, i, a).unwrap());
            }
        }
    }

    #[test]
    fn mecapm_probability() {
        let s = strengths(&[1.0, 1.0], &[1.0, 1.0]);
        let m = MecapmModel::new(s.clone()).unwrap();
        // ω = 0.5
        assert_relative_eq!(m.link_probability(0, 0), 0.5 / 1.5);
        let s2 = strengths(&[2.0, 0.0], &[1.0, 1.0]);
        let m2 = MecapmModel::new(s2).unwrap();
        assert_eq!(m2.link_probability(1, 0), 0.0);
        // ω = 1
        let m3 = MecapmModel::new(strengths(&[1.0], &[1.0])).unwrap();
        assert_eq!(m3.link_probability(0, 0), 0.5);
        // MECAPM is ECAPM at z = 1/W.
        let e = EcapmModel::new(1.0 / s.total(), s).unwrap();
        assert!((e.link_probability(0, 0) - m.link_probability(0, 0)).abs() <= 1e-15);
    }

    #[test]
    fn weight_law_examples() {
        let s = strengths(&[1.0], &[1.0]);
        let sat = EcapmModel::new(f64::INFINITY, s.clone()).unwrap();
        let law = sat.weight_law(0, 0);
        assert_eq!((law.link_probability, law.variance), (1.0, 0.0));
        assert_eq!(law.conditional_weight, Some(1.0));

        let m = MecapmModel::new(strengths(&[1.0], &[1.0])).unwrap();
        let law = m.weight_law(0, 0);
        assert_eq!((law.mean, law.variance), (1.0, 2.0));
        assert_eq!(law.conditional_weight, None);

        // ω = 2, p = √2/(1+√2)
        let z = 1.0 / 18f64.sqrt();
        let e = EcapmModel::new(z, strengths(&[1.0, 2.0], &[3.0])).unwrap();
        let law = e.weight_law(1, 0);
        assert_relative_eq!(law.mean, 2.0, max_relative = 1e-15);
        assert_relative_eq!(law.variance, 4.0 * (1.0 / law.link_probability - 1.0));
        assert_relative_eq!(law.variance, 2.828427, epsilon = 1e-6);
    }

    #[test]
    fn moments_are_consistent() {
        let e = EcapmModel::new(0.2, strengths(&[1.0, 3.0], &[2.0, 2.0])).unwrap();
        let m = MecapmModel::new(strengths(&[1.0, 3.0], &[2.0, 2.0])).unwrap();
        for model in [&e as &dyn PairEnsemble, &m] {
            for (i, a) in [(0, 0), (1, 1)] {
                let pm = model.moments(i, a);
                let law = model.weight_law(i, a);
                assert_relative_eq!(pm.mean, law.mean, max_relative = 1e-14);
                assert_relative_eq!(pm.variance, law.variance, max_relative = 1e-12);
                assert_relative_eq!(pm.second, pm.variance + pm.mean * pm.mean, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn sigma_ratio_examples() {
        // p = 0.8 and ω = 4: pick z with zVC/(1+zVC) = 0.8 for V = C = 4, W = 4.
        let s = strengths(&[4.0], &[4.0]);
        let e = EcapmModel::new(4.0 / 16.0, s).unwrap();
        let law = e.weight_law(0, 0);
        assert_relative_eq!(law.link_probability, 0.8, max_relative = 1e-14);
        assert_relative_eq!(law.mean, 4.0);
        let r = weight_sigma_ratio(&e, 0, 0);
        assert_relative_eq!(r.exact, 0.4472135955, epsilon = 1e-9);
        assert_relative_eq!(r.approximate, 0.5, max_relative = 1e-14);
        assert!(!r.degenerate);

        // p = 1/2: approximation is exactly 1 and the exact ratio is below it.
        let e = EcapmModel::new(1.0 / 16.0, strengths(&[4.0], &[4.0])).unwrap();
        let r = weight_sigma_ratio(&e, 0, 0);
        assert_relative_eq!(r.approximate, 1.0, max_relative = 1e-14);
        assert!(r.exact < 1.0);

        let e = EcapmModel::new(1.0, strengths(&[0.0, 1.0], &[1.0])).unwrap();
        let r = weight_sigma_ratio(&e, 0, 0);
        assert_eq!((r.exact, r.degenerate), (0.0, true));
    }

    #[test]
    fn expected_row_examples() {
        let s = strengths(&[1.0, 2.0], &[3.0]);
        assert_eq!(expected_weight_row(ModelKind::Ecapm, &s, 1), vec![2.0]);
        let s = strengths(&[0.0, 2.0, 3.0], &[1.0, 4.0]);
        assert_eq!(expected_weight_row(ModelKind::Mecapm, &s, 0), vec![0.0, 0.0]);
        let row = expected_weight_row(ModelKind::Capm, &s, 2);
        assert_relative_eq!(row.iter().sum::<f64>(), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn geometric_draw_inverse_cdf() {
        let m = MecapmModel::new(strengths(&[1.0], &[1.0])).unwrap(); // q = 1/2
        assert_eq!(m.draw_weight(0, 0, 0.75), 0.0);
        assert_eq!(m.draw_weight(0, 0, 0.5), 1.0);
        assert_eq!(m.draw_weight(0, 0, 0.3), 1.0);
        assert_eq!(m.draw_weight(0, 0, 0.2), 2.0);
    }

    #[test]
    fn capm_is_saturated_ecapm() {
        let s = strengths(&[1.0, 0.0, 3.0], &[2.0, 2.0]);
        let capm = CapmModel::new(s.clone()).unwrap();
        let sat = EcapmModel::new(f64::INFINITY, s).unwrap();
        for i in 0..3 {
            for a in 0..2 {
                assert_eq!(capm.link_probability(i, a), sat.link_probability(i, a));
                assert_eq!(capm.draw_weight(i, a, 0.9), sat.draw_weight(i, a, 0.9));
                assert_eq!(capm.moments(i, a), sat.moments(i, a));
            }
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("ECAPM".parse::<ModelKind>().unwrap(), ModelKind::Ecapm);
        assert!("gravity".parse::<ModelKind>().is_err());
    }
}
