//! Ensemble parameters: the density parameter z of the fitness-induced
//! model, the full bipartite configuration model multipliers, and the
//! sparse / continuous approximations of the link-count equation.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::network::DegreeSequences;

/// Expected number of links Σ_iα zV_iC_α / (1 + zV_iC_α).
///
/// Non-decreasing in `z`, bounded by the number of pairs with V_iC_α > 0.
/// Rows are summed independently and then reduced in holder order.
pub fn expected_link_count(z: f64, holder: &[f64], issuer: &[f64]) -> f64 {
    expected_link_count_with(Execution::default(), z, holder, issuer)
}

pub fn expected_link_count_with(exec: Execution, z: f64, holder: &[f64], issuer: &[f64]) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    exec.sum(holder.len(), |i| {
        let zv = z * holder[i];
        issuer
            .iter()
            .map(|&c| {
                let x = zv * c;
                x / (1.0 + x)
            })
            .sum()
    })
}

/// ⟨L⟩(z) and its derivative Σ V_iC_α / (1 + zV_iC_α)².
fn link_count_and_slope(exec: Execution, z: f64, holder: &[f64], issuer: &[f64]) -> (f64, f64) {
    exec.sum_pairs(holder.len(), |i| {
        let v = holder[i];
        let zv = z * v;
        issuer.iter().fold((0.0, 0.0), |(l, s), &c| {
            let den = 1.0 + zv * c;
            (l + zv * c / den, s + v * c / (den * den))
        })
    })
}

/// Number of pairs that can carry a link (V_i·C_α > 0).
pub fn positive_pairs(holder: &[f64], issuer: &[f64]) -> usize {
    let rows = holder.iter().filter(|&&v| v > 0.0).count();
    let cols = issuer.iter().filter(|&&c| c > 0.0).count();
    rows * cols
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CalibrationMethod {
    BracketedRoot,
    SparseClosedForm,
}

impl CalibrationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CalibrationMethod::BracketedRoot => "bracketed_root",
            CalibrationMethod::SparseClosedForm => "sparse_closed_form",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationResult {
    pub z: f64,
    /// |⟨L⟩(z) − L_target|
    pub residual: f64,
    pub iterations: usize,
    pub method: CalibrationMethod,
}

/// First-order estimate z = L / W², valid while max zV_iC_α ≪ 1.
pub fn sparse_z(target_links: f64, total_weight: f64) -> Result<f64> {
    if !(total_weight > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(target_links / (total_weight * total_weight))
}

/// Solves ⟨L⟩(z) = L for z.
///
/// The root is bracketed by doubling or halving from z₀ = L/W², then refined
/// with Newton steps that fall back to bisection in log z whenever a step
/// leaves the bracket.
#[derive(Clone, Copy, Debug)]
pub struct ZSolver {
    /// Absolute tolerance on |⟨L⟩ − L|; `None` means 1e-10·max(1, L).
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
    pub exec: Execution,
}

impl Default for ZSolver {
    fn default() -> Self {
        Self {
            tolerance: None,
            max_iterations: 500,
            exec: Execution::default(),
        }
    }
}

impl ZSolver {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn solve(&self, holder: &[f64], issuer: &[f64], target_links: f64) -> Result<CalibrationResult> {
        if let Some((index, &value)) = holder
            .iter()
            .chain(issuer.iter())
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidStrength { index, value });
        }
        if !(target_links > 0.0) {
            return Err(Error::DegenerateLinkTarget { target: target_links });
        }
        let max_links = positive_pairs(holder, issuer);
        if target_links >= max_links as f64 {
            return Err(Error::InfeasibleLinkTarget {
                target: target_links,
                max_links,
            });
        }
        let tol = self.tolerance.unwrap_or(1e-10 * target_links.max(1.0));
        let total: f64 = holder.iter().sum();
        let f = |z: f64| link_count_and_slope(self.exec, z, holder, issuer);

        let mut iterations = 0usize;
        let mut z = target_links / (total * total);
        if !(z.is_finite() && z > 0.0) {
            z = 1.0;
        }
        let mut fz = f(z).0 - target_links;
        let mut slope;
        iterations += 1;
        if fz.abs() <= tol {
            return Ok(self.done(z, fz, iterations));
        }

        // Bracket [lo, hi] with f(lo) < 0 < f(hi).
        let (mut lo, mut hi);
        if fz < 0.0 {
            lo = z;
            hi = z;
            loop {
                hi *= 2.0;
                let (l, s) = f(hi);
                iterations += 1;
                if l - target_links >= 0.0 {
                    z = hi;
                    fz = l - target_links;
                    slope = s;
                    break;
                }
                lo = hi;
                if iterations > 4096 || !hi.is_finite() {
                    return Err(Error::NoConvergence {
                        iterations,
                        residual: (l - target_links).abs(),
                    });
                }
            }
        } else {
            hi = z;
            lo = z;
            loop {
                lo *= 0.5;
                let (l, s) = f(lo);
                iterations += 1;
                if l - target_links <= 0.0 {
                    z = lo;
                    fz = l - target_links;
                    slope = s;
                    break;
                }
                hi = lo;
                if iterations > 4096 || lo == 0.0 {
                    return Err(Error::NoConvergence {
                        iterations,
                        residual: (l - target_links).abs(),
                    });
                }
            }
        }
        if fz.abs() <= tol {
            return Ok(self.done(z, fz, iterations));
        }

        while iterations < self.max_iterations {
            let newton = z - fz / slope;
            let next = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                (lo * hi).sqrt()
            };
            let (l, s) = f(next);
            iterations += 1;
            let fn_ = l - target_links;
            if fn_ < 0.0 {
                lo = next;
            } else {
                hi = next;
            }
            z = next;
            fz = fn_;
            slope = s;
            if fz.abs() <= tol {
                return Ok(self.done(z, fz, iterations));
            }
            if hi <= lo * (1.0 + 4.0 * f64::EPSILON) {
                break;
            }
        }
        Err(Error::NoConvergence {
            iterations,
            residual: fz.abs(),
        })
    }

    fn done(&self, z: f64, fz: f64, iterations: usize) -> CalibrationResult {
        CalibrationResult {
            z,
            residual: fz.abs(),
            iterations,
            method: CalibrationMethod::BracketedRoot,
        }
    }
}

/// Solves for z with the default solver settings. `tolerance = None` uses
/// 1e-10·max(1, L).
pub fn solve_z(holder: &[f64], issuer: &[f64], target_links: f64, tolerance: Option<f64>) -> Result<CalibrationResult> {
    ZSolver {
        tolerance,
        ..ZSolver::default()
    }
    .solve(holder, issuer, target_links)
}

/// Closed-form calibration z = L/W², reported with its exact residual.
pub fn sparse_calibration(holder: &[f64], issuer: &[f64], target_links: f64) -> Result<CalibrationResult> {
    let total: f64 = holder.iter().sum();
    let z = sparse_z(target_links, total)?;
    Ok(CalibrationResult {
        z,
        residual: (expected_link_count(z, holder, issuer) - target_links).abs(),
        iterations: 0,
        method: CalibrationMethod::SparseClosedForm,
    })
}

/// Lagrange multipliers of the bipartite configuration model,
/// p_iα = x_i y_α / (1 + x_i y_α).
#[derive(Clone, Debug, PartialEq)]
pub struct BicmMultipliers {
    pub holder: Vec<f64>,
    pub issuer: Vec<f64>,
    pub max_degree_residual: f64,
    pub iterations: usize,
}

impl BicmMultipliers {
    pub fn link_probability(&self, i: usize, a: usize) -> f64 {
        let x = self.holder[i] * self.issuer[a];
        x / (1.0 + x)
    }

    /// Expected degrees (⟨k_i⟩, ⟨d_α⟩) under these multipliers.
    pub fn expected_degrees(&self) -> (Vec<f64>, Vec<f64>) {
        let mut k = vec![0.0; self.holder.len()];
        let mut d = vec![0.0; self.issuer.len()];
        for (i, &x) in self.holder.iter().enumerate() {
            for (a, &y) in self.issuer.iter().enumerate() {
                let p = x * y / (1.0 + x * y);
                k[i] += p;
                d[a] += p;
            }
        }
        (k, d)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BicmSolver {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Weight of the previous iterate in each update.
    pub damping: f64,
}

impl Default for BicmSolver {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200_000,
            damping: 0.5,
        }
    }
}

impl BicmSolver {
    /// Damped fixed point x_i ← k_i / Σ_α y_α/(1 + x_i y_α), alternating
    /// with the symmetric update for y. Zero-degree nodes keep a zero
    /// multiplier; saturated nodes (k_i = M or d_α = N) are rejected.
    pub fn solve(&self, degrees: &DegreeSequences) -> Result<BicmMultipliers> {
        let k = &degrees.holder;
        let d = &degrees.issuer;
        let (n, m) = (k.len(), d.len());
        let sum_k: usize = k.iter().sum();
        let sum_d: usize = d.iter().sum();
        if sum_k != sum_d {
            return Err(Error::InvalidDegrees(format!(
                "holder degrees sum to {sum_k}, issuer degrees to {sum_d}"
            )));
        }
        for (i, &ki) in k.iter().enumerate() {
            if ki > m {
                return Err(Error::InvalidDegrees(format!("holder {i} has degree {ki} > {m}")));
            }
            if ki == m && ki > 0 {
                return Err(Error::SaturatedNode {
                    layer: "holder",
                    index: i,
                    degree: ki,
                    max: m,
                });
            }
        }
        for (a, &da) in d.iter().enumerate() {
            if da > n {
                return Err(Error::InvalidDegrees(format!("issuer {a} has degree {da} > {n}")));
            }
            if da == n && da > 0 {
                return Err(Error::SaturatedNode {
                    layer: "issuer",
                    index: a,
                    degree: da,
                    max: n,
                });
            }
        }
        if sum_k == 0 {
            return Ok(BicmMultipliers {
                holder: vec![0.0; n],
                issuer: vec![0.0; m],
                max_degree_residual: 0.0,
                iterations: 0,
            });
        }

        let scale = (sum_k as f64).sqrt();
        let mut x: Vec<f64> = k.iter().map(|&v| v as f64 / scale).collect();
        let mut y: Vec<f64> = d.iter().map(|&v| v as f64 / scale).collect();
        let keep = self.damping;
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        while iterations < self.max_iterations {
            iterations += 1;
            for i in 0..n {
                if k[i] == 0 {
                    continue;
                }
                let xi = x[i];
                let denom: f64 = y.iter().map(|&ya| ya / (1.0 + xi * ya)).sum();
                x[i] = keep * xi + (1.0 - keep) * (k[i] as f64 / denom);
            }
            for a in 0..m {
                if d[a] == 0 {
                    continue;
                }
                let ya = y[a];
                let denom: f64 = x.iter().map(|&xi| xi / (1.0 + xi * ya)).sum();
                y[a] = keep * ya + (1.0 - keep) * (d[a] as f64 / denom);
            }
            residual = degree_residual(&x, &y, k, d);
            if residual <= self.tolerance {
                return Ok(BicmMultipliers {
                    holder: x,
                    issuer: y,
                    max_degree_residual: residual,
                    iterations,
                });
            }
            if !residual.is_finite() {
                break;
            }
        }
        Err(Error::NoConvergence { iterations, residual })
    }
}

fn degree_residual(x: &[f64], y: &[f64], k: &[usize], d: &[usize]) -> f64 {
    let mut kk = vec![0.0; x.len()];
    let mut dd = vec![0.0; y.len()];
    for (i, &xi) in x.iter().enumerate() {
        for (a, &ya) in y.iter().enumerate() {
            let p = xi * ya / (1.0 + xi * ya);
            kk[i] += p;
            dd[a] += p;
        }
    }
    let rk = kk.iter().zip(k).map(|(e, &o)| (e - o as f64).abs()).fold(0.0, f64::max);
    let rd = dd.iter().zip(d).map(|(e, &o)| (e - o as f64).abs()).fold(0.0, f64::max);
    rk.max(rd)
}

pub fn solve_bicm(degrees: &DegreeSequences, tolerance: f64) -> Result<BicmMultipliers> {
    BicmSolver {
        tolerance,
        ..BicmSolver::default()
    }
    .solve(degrees)
}

/// Raw moments of the strength distributions, index t−1 holding the t-th
/// moment.
#[derive(Clone, Debug, PartialEq)]
pub struct FitnessMoments {
    /// μ_t of the issuer strengths.
    pub issuer: Vec<f64>,
    /// λ_t of the holder strengths.
    pub holder: Vec<f64>,
}

impl FitnessMoments {
    /// Empirical raw moments up to `order`. μ_1 = W/M and λ_1 = W/N.
    pub fn empirical(holder: &[f64], issuer: &[f64], order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("moment order must be at least 1".into()));
        }
        if holder.is_empty() || issuer.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let raw = |xs: &[f64]| {
            (1..=order)
                .map(|t| xs.iter().map(|x| x.powi(t as i32)).sum::<f64>() / xs.len() as f64)
                .collect()
        };
        Ok(Self {
            issuer: raw(issuer),
            holder: raw(holder),
        })
    }

    pub fn order(&self) -> usize {
        self.issuer.len().min(self.holder.len())
    }
}

/// Truncated alternating series for an expected degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesEstimate {
    pub value: f64,
    /// Magnitude of the last retained term; bounds the truncation error
    /// while the terms decrease.
    pub last_term: f64,
    /// False when the term ratio at the tail is ≥ 1 (series diverging).
    pub reliable: bool,
}

pub const DEFAULT_SERIES_ORDER: usize = 5;

/// ⟨k_i⟩ ≈ M Σ_{t=1..K} (−1)^{t+1} (zV_i)^t μ_t.
pub fn expected_degree_continuous(
    z: f64,
    strength: f64,
    moments: &[f64],
    layer_size: usize,
    order: usize,
) -> Result<SeriesEstimate> {
    if order == 0 || order > moments.len() {
        return Err(Error::InvalidParameter(format!(
            "series order {order} needs 1..={} moments",
            moments.len()
        )));
    }
    let x = z * strength;
    let terms: Vec<f64> = (1..=order)
        .map(|t| layer_size as f64 * x.powi(t as i32) * moments[t - 1])
        .collect();
    let value = terms
        .iter()
        .enumerate()
        .map(|(t, term)| if t % 2 == 0 { *term } else { -term })
        .sum();
    let last_term = terms[order - 1];
    // Divergence shows up as a term ratio ≥ 1 at the tail, using one extra
    // moment when available.
    let mut reliable = order < 2 || terms[order - 1] < terms[order - 2] || last_term == 0.0;
    if order < moments.len() && last_term > 0.0 {
        let next = layer_size as f64 * x.powi(order as i32 + 1) * moments[order];
        reliable &= next < last_term;
    }
    Ok(SeriesEstimate {
        value,
        last_term,
        reliable,
    })
}
