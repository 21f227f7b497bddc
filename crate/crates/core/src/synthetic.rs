//! Synthetic ground truths drawn from the ECAPM law itself.
//!
//! Fitnesses come from a heavy-tailed (or uniform) distribution, z is
//! calibrated to the requested density, and one network is sampled. The
//! realized strengths of that sample, not the input fitnesses, are what a
//! reconstruction should consume.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Pareto, Uniform};

use crate::calibration::{CalibrationResult, ZSolver};
use crate::error::{Error, Result};
use crate::models::EcapmModel;
use crate::network::{BipartiteNetwork, StrengthSequences};
use crate::sampling::sample;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitnessDistribution {
    /// Density ∝ x^−(exponent+1) on [minimum, ∞); mean exponent·minimum/(exponent − 1).
    Pareto { exponent: f64, minimum: f64 },
    /// exp of a normal with the given location and scale.
    LogNormal { location: f64, scale: f64 },
    /// Uniform on [lo, hi], lo > 0.
    Uniform { lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitnessSpec {
    pub distribution: FitnessDistribution,
    pub count: usize,
    pub seed: u64,
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

/// Strictly positive fitness values, deterministic in `spec.seed`.
pub fn generate_fitness(spec: &FitnessSpec) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.count;
    let values: Vec<f64> = match spec.distribution {
        FitnessDistribution::Pareto { exponent, minimum } => {
            if !(exponent > 1.0 && exponent.is_finite()) {
                return Err(invalid(format!("Pareto exponent must exceed 1, got {exponent}")));
            }
            if !(minimum > 0.0 && minimum.is_finite()) {
                return Err(invalid(format!("Pareto minimum must be positive, got {minimum}")));
            }
            let d = Pareto::new(minimum, exponent).map_err(|e| invalid(e.to_string()))?;
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
        FitnessDistribution::LogNormal { location, scale } => {
            if !(scale >= 0.0 && scale.is_finite() && location.is_finite()) {
                return Err(invalid(format!(
                    "log-normal needs finite location and scale >= 0, got ({location}, {scale})"
                )));
            }
            let d = LogNormal::new(location, scale).map_err(|e| invalid(e.to_string()))?;
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
        FitnessDistribution::Uniform { lo, hi } => {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(invalid(format!(
                    "uniform bounds must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
                )));
            }
            let d = Uniform::new_inclusive(lo, hi).map_err(|e| invalid(e.to_string()))?;
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
    };
    if let Some(x) = values.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(invalid(format!("generated non-positive fitness {x}")));
    }
    Ok(values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub network: BipartiteNetwork,
    /// Calibration of the generating model.
    pub calibration: CalibrationResult,
    pub target_links: usize,
    pub realized_links: usize,
    /// Input fitnesses (issuer side rescaled so that ΣC = ΣV).
    pub holder_fitness: Vec<f64>,
    pub issuer_fitness: Vec<f64>,
    /// Marginals of `network`.
    pub realized: StrengthSequences,
}

impl GroundTruth {
    pub fn z(&self) -> f64 {
        self.calibration.z
    }
}

/// L = round(density·N·M), at least 1.
pub fn target_link_count(n_holders: usize, n_issuers: usize, density: f64) -> usize {
    ((density * (n_holders * n_issuers) as f64).round() as usize).max(1)
}

/// Calibrates z on (V, C) to the target density and samples one network.
pub fn generate_ground_truth(holder: Vec<f64>, issuer: Vec<f64>, density: f64, seed: u64) -> Result<GroundTruth> {
    generate_ground_truth_with(holder, issuer, density, seed, &ZSolver::default())
}

pub fn generate_ground_truth_with(
    holder: Vec<f64>,
    issuer: Vec<f64>,
    density: f64,
    seed: u64,
    solver: &ZSolver,
) -> Result<GroundTruth> {
    if !(density > 0.0 && density < 1.0) {
        return Err(invalid(format!("target density must lie in (0, 1), got {density}")));
    }
    if holder.is_empty() || issuer.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let holder_total: f64 = holder.iter().sum();
    let issuer_total: f64 = issuer.iter().sum();
    if !(holder_total > 0.0 && issuer_total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let issuer: Vec<f64> = issuer.iter().map(|c| c * holder_total / issuer_total).collect();
    let strengths = StrengthSequences::with_tolerance(holder.clone(), issuer.clone(), 1e-9)?;
    let target_links = target_link_count(holder.len(), issuer.len(), density);
    let (model, calibration) = EcapmModel::calibrate(strengths, target_links as f64, solver)?;
    let network = sample(&model, seed);
    Ok(GroundTruth {
        realized_links: network.n_links(),
        realized: network.strengths(),
        network,
        calibration,
        target_links,
        holder_fitness: holder,
        issuer_fitness: issuer,
    })
}

/// Fitnesses for both layers from their specs, then [`generate_ground_truth`].
pub fn generate_from_specs(
    holders: &FitnessSpec,
    issuers: &FitnessSpec,
    density: f64,
    seed: u64,
) -> Result<GroundTruth> {
    generate_ground_truth(generate_fitness(holders)?, generate_fitness(issuers)?, density, seed)
}

/// Mis-specification hook: multiplies every weight by an independent
/// log-normal factor exp(σZ − σ²/2), which has mean 1. Topology is kept.
pub fn perturb_weights(net: &BipartiteNetwork, sigma: f64, seed: u64) -> Result<BipartiteNetwork> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("noise scale must be non-negative, got {sigma}")));
    }
    let normal = Normal::new(0.0, 1.0).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    net.map_weights(|e| e.weight * (sigma * normal.sample(&mut rng) - 0.5 * sigma * sigma).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::expected_link_count;

    fn spec(distribution: FitnessDistribution, count: usize, seed: u64) -> FitnessSpec {
        FitnessSpec {
            distribution,
            count,
            seed,
        }
    }

    #[test]
    fn degenerate_uniform() {
        let v = generate_fitness(&spec(FitnessDistribution::Uniform { lo: 1.0, hi: 1.0 }, 5, 0)).unwrap();
        assert_eq!(v, vec![1.0; 5]);
    }

    #[test]
    fn pareto_mean() {
        let n = 10_000;
        let v = generate_fitness(&spec(
            FitnessDistribution::Pareto {
                exponent: 2.5,
                minimum: 1.0,
            },
            n,
            11,
        ))
        .unwrap();
        // Analytic moments: mean a/(a−1), variance a/((a−1)²(a−2)).
        let (a, nf) = (2.5f64, n as f64);
        let mean = a / (a - 1.0);
        let se = (a / ((a - 1.0).powi(2) * (a - 2.0)) / nf).sqrt();
        let got = v.iter().sum::<f64>() / nf;
        assert!((got - mean).abs() <= 3.0 * se, "mean {got} vs {mean} ± {se}");
        assert!(v.iter().all(|&x| x >= 1.0));
    }

    #[test]
    fn deterministic_per_seed() {
        let s = spec(
            FitnessDistribution::LogNormal {
                location: 0.0,
                scale: 1.0,
            },
            50,
            3,
        );
        assert_eq!(generate_fitness(&s).unwrap(), generate_fitness(&s).unwrap());
        let other = FitnessSpec { seed: 4, ..s };
        assert_ne!(generate_fitness(&s).unwrap(), generate_fitness(&other).unwrap());
    }

    #[test]
    fn invalid_specs() {
        for d in [
            FitnessDistribution::Pareto {
                exponent: 1.0,
                minimum: 1.0,
            },
            FitnessDistribution::Pareto {
                exponent: 2.0,
                minimum: 0.0,
            },
            FitnessDistribution::Uniform { lo: 0.0, hi: 1.0 },
            FitnessDistribution::Uniform { lo: 2.0, hi: 1.0 },
            FitnessDistribution::LogNormal {
                location: 0.0,
                scale: -1.0,
            },
        ] {
            assert!(generate_fitness(&spec(d, 3, 0)).is_err(), "{d:?}");
        }
    }

    #[test]
    fn link_count_concentrates() {
        let (n, m) = (20, 20);
        let gt = generate_ground_truth(vec![1.0; n], vec![1.0; m], 0.25, 5).unwrap();
        assert_eq!(gt.target_links, 100);
        // Uniform fitnesses: every pair has p = 1/4.
        let p = expected_link_count(gt.z(), &gt.holder_fitness, &gt.issuer_fitness) / (n * m) as f64;
        assert!((p - 0.25).abs() < 1e-10);
        let sd = ((n * m) as f64 * p * (1.0 - p)).sqrt();
        assert!((gt.realized_links as f64 - 100.0).abs() <= 3.0 * sd);
        assert_eq!(gt.realized, gt.network.strengths());
    }

    #[test]
    fn dense_limit_strengths() {
        let (n, m) = (30, 30);
        let gt = generate_ground_truth(vec![1.0; n], vec![1.0; m], 0.99, 1).unwrap();
        assert!(gt.realized_links as f64 >= 0.97 * (n * m) as f64);
        // Each linked pair carries (z⁻¹ + VC)/W; the row sum is k_i times that.
        let w_cond = (1.0 / gt.z() + 1.0) / n as f64;
        for (i, v) in gt.realized.holder().iter().enumerate() {
            let k = gt.network.row(i).len() as f64;
            assert!((v - k * w_cond).abs() < 1e-12 * v.max(1.0));
        }
    }

    #[test]
    fn rejects_bad_density() {
        assert!(generate_ground_truth(vec![1.0; 2], vec![1.0; 2], 0.0, 0).is_err());
        assert!(generate_ground_truth(vec![1.0; 2], vec![1.0; 2], 1.0, 0).is_err());
        // round(0.9·4) = 4 pairs: every pair would need p = 1.
        assert!(matches!(
            generate_ground_truth(vec![1.0; 2], vec![1.0; 2], 0.9, 0),
            Err(Error::InfeasibleLinkTarget { .. })
        ));
    }

    #[test]
    fn issuer_side_is_rescaled() {
        let gt = generate_ground_truth(vec![1.0, 3.0], vec![1.0, 1.0, 2.0], 0.5, 0).unwrap();
        assert_eq!(gt.issuer_fitness, vec![1.0, 1.0, 2.0]);
        let gt = generate_ground_truth(vec![2.0, 6.0], vec![1.0, 1.0, 2.0], 0.5, 0).unwrap();
        assert_eq!(gt.issuer_fitness, vec![2.0, 2.0, 4.0]);
    }

    #[test]
    fn perturbation_keeps_topology() {
        let gt = generate_ground_truth(vec![1.0; 8], vec![1.0; 8], 0.3, 2).unwrap();
        let noisy = perturb_weights(&gt.network, 0.5, 9).unwrap();
        assert_eq!(noisy.n_links(), gt.network.n_links());
        assert!(noisy
            .edges()
            .iter()
            .zip(gt.network.edges())
            .all(|(a, b)| (a.holder, a.issuer) == (b.holder, b.issuer)));
        assert_eq!(perturb_weights(&gt.network, 0.0, 9).unwrap(), gt.network);
        assert_eq!(noisy, perturb_weights(&gt.network, 0.5, 9).unwrap());
    }
}
