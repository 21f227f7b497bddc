//! Systemicness of holders through portfolio overlap.
//!
//! The full index is S_i = Γ_i V_i B_i r_i / E with the illiquidity-weighted
//! overlap Γ_i = Σ_jα w_jα l_α w_iα = Σ_α w_iα l_α C_α. Without leverage,
//! returns and illiquidity data the comparison between a reconstruction and
//! the observed network reduces to the ratio of the plain overlaps
//! Σ_α w̃_iα C̃_α / Σ_α w_iα C_α, which is what the ensemble statistics here
//! describe.
//!
//! Two variance routes are provided. [`systemicness_variance`] is the exact
//! ensemble variance of the overlap Σ_α w_iα Ĉ_α, where the sampled column
//! sum Ĉ_α contains w_iα itself. [`systemicness_variance_decoupled`] is the
//! standard closed form, which equals the variance obtained when w_iα and
//! Ĉ_α are treated as independent. The two agree when every holder is a
//! small part of each issuer it holds and drift apart otherwise.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::models::{ModelKind, PairEnsemble};
use crate::network::BipartiteNetwork;

#[derive(Clone, Debug, PartialEq)]
pub struct SystemicnessInputs {
    /// l_α, one per issuer.
    pub illiquidity: Vec<f64>,
    /// B_i, one per holder.
    pub leverage: Vec<f64>,
    /// r_i, one per holder.
    pub returns: Vec<f64>,
    /// E, total equity of the system.
    pub total_equity: f64,
}

impl SystemicnessInputs {
    pub fn new(illiquidity: Vec<f64>, leverage: Vec<f64>, returns: Vec<f64>, total_equity: f64) -> Result<Self> {
        if !(total_equity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "total equity must be positive, got {total_equity}"
            )));
        }
        if let Some(l) = illiquidity.iter().find(|l| !(**l >= 0.0)) {
            return Err(Error::InvalidParameter(format!("negative illiquidity {l}")));
        }
        if leverage.len() != returns.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} returns", leverage.len()),
                found: format!("{} returns", returns.len()),
            });
        }
        Ok(Self {
            illiquidity,
            leverage,
            returns,
            total_equity,
        })
    }

    /// l = B = r = 1 and E = 1.
    pub fn homogeneous(n_holders: usize, n_issuers: usize) -> Self {
        Self {
            illiquidity: vec![1.0; n_issuers],
            leverage: vec![1.0; n_holders],
            returns: vec![1.0; n_holders],
            total_equity: 1.0,
        }
    }

    fn check(&self, net: &BipartiteNetwork) -> Result<()> {
        if self.illiquidity.len() != net.n_issuers() || self.leverage.len() != net.n_holders() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} holders, {} issuers", net.n_holders(), net.n_issuers()),
                found: format!("{} holders, {} issuers", self.leverage.len(), self.illiquidity.len()),
            });
        }
        Ok(())
    }
}

/// Γ_i = Σ_jα w_jα l_α w_iα; with `illiquidity = None`, l ≡ 1.
pub fn overlap_term(net: &BipartiteNetwork, i: usize, illiquidity: Option<&[f64]>) -> f64 {
    overlap_against(net, net, i, illiquidity)
}

/// Σ_α w_iα l_α Ĉ_α with holder i's portfolio taken from `portfolio` and the
/// column sums Ĉ from `system`. Bilinear in the two networks.
pub fn overlap_against(
    portfolio: &BipartiteNetwork,
    system: &BipartiteNetwork,
    i: usize,
    illiquidity: Option<&[f64]>,
) -> f64 {
    let columns = system.strengths();
    let c = columns.issuer();
    portfolio
        .row(i)
        .iter()
        .map(|e| {
            let l = illiquidity.map_or(1.0, |l| l[e.issuer]);
            e.weight * l * c[e.issuer]
        })
        .sum()
}

fn overlaps(net: &BipartiteNetwork) -> Vec<f64> {
    let s = net.strengths();
    let c = s.issuer();
    (0..net.n_holders())
        .map(|i| net.row(i).iter().map(|e| e.weight * c[e.issuer]).sum())
        .collect()
}

/// S_i = Γ_i V_i B_i r_i / E.
pub fn systemicness(net: &BipartiteNetwork, inputs: &SystemicnessInputs, i: usize) -> Result<f64> {
    inputs.check(net)?;
    let gamma = overlap_term(net, i, Some(&inputs.illiquidity));
    let v: f64 = net.row(i).iter().map(|e| e.weight).sum();
    Ok(gamma * v / inputs.total_equity * inputs.leverage[i] * inputs.returns[i])
}

/// S̃_i / S_i for every holder under homogeneous shocks and illiquidity.
/// `None` where the observed overlap is zero.
pub fn relative_systemicness(truth: &BipartiteNetwork, reconstructed: &BipartiteNetwork) -> Result<Vec<Option<f64>>> {
    if truth.n_holders() != reconstructed.n_holders() || truth.n_issuers() != reconstructed.n_issuers() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", truth.n_holders(), truth.n_issuers()),
            found: format!("{}x{}", reconstructed.n_holders(), reconstructed.n_issuers()),
        });
    }
    let den = overlaps(truth);
    let num = overlaps(reconstructed);
    Ok(num.iter().zip(&den).map(|(n, d)| (*d > 0.0).then(|| n / d)).collect())
}

/// Per-issuer sums over holders of the pair moments.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMoments {
    /// Σ_j ⟨w_jα⟩
    pub mean: Vec<f64>,
    /// Σ_j Var(w_jα)
    pub variance: Vec<f64>,
    /// Σ_j ⟨w_jα²⟩
    pub second: Vec<f64>,
    /// Σ_j ⟨w_jα⟩²
    pub mean_square: Vec<f64>,
}

impl ColumnMoments {
    pub fn of<M: PairEnsemble + ?Sized>(model: &M) -> Self {
        Self::with(Execution::default(), model)
    }

    pub fn with<M: PairEnsemble + ?Sized>(exec: Execution, model: &M) -> Self {
        let n = model.n_holders();
        let cols: Vec<[f64; 4]> = exec.map(model.n_issuers(), |a| {
            (0..n).fold([0.0; 4], |acc, j| {
                let pm = model.moments(j, a);
                [
                    acc[0] + pm.mean,
                    acc[1] + pm.variance,
                    acc[2] + pm.second,
                    acc[3] + pm.mean * pm.mean,
                ]
            })
        });
        Self {
            mean: cols.iter().map(|c| c[0]).collect(),
            variance: cols.iter().map(|c| c[1]).collect(),
            second: cols.iter().map(|c| c[2]).collect(),
            mean_square: cols.iter().map(|c| c[3]).collect(),
        }
    }
}

/// ⟨Σ_jα w_jα w_iα⟩ = Σ_α ⟨w_iα²⟩ + ⟨w_iα⟩ Σ_{j≠i} ⟨w_jα⟩.
pub fn expected_overlap<M: PairEnsemble + ?Sized>(model: &M, columns: &ColumnMoments, i: usize) -> f64 {
    (0..model.n_issuers())
        .map(|a| {
            let pm = model.moments(i, a);
            pm.second + pm.mean * (columns.mean[a] - pm.mean)
        })
        .sum()
}

/// ⟨S_i⟩ / S_i against the observed overlap of `truth`.
pub fn expected_systemicness_ratio<M: PairEnsemble + ?Sized>(
    truth: &BipartiteNetwork,
    model: &M,
    i: usize,
) -> Result<Option<f64>> {
    check_dims(truth, model)?;
    let den = overlap_term(truth, i, None);
    if den <= 0.0 {
        return Ok(None);
    }
    Ok(Some(expected_overlap(model, &ColumnMoments::of(model), i) / den))
}

fn check_dims<M: PairEnsemble + ?Sized>(truth: &BipartiteNetwork, model: &M) -> Result<()> {
    if truth.n_holders() != model.n_holders() || truth.n_issuers() != model.n_issuers() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", truth.n_holders(), truth.n_issuers()),
            found: format!("{}x{}", model.n_holders(), model.n_issuers()),
        });
    }
    Ok(())
}

/// Exact Var(Σ_α w_iα Ĉ_α), Ĉ_α = Σ_j w_jα, for independent pair weights.
///
/// Per issuer, with R = Ĉ_α − w_iα independent of w = w_iα and r = ⟨R⟩:
/// Var(w² + wR) = Var(w²) + 2r Cov(w², w) + r² Var(w) + ⟨w²⟩ Var(R).
pub fn overlap_variance<M: PairEnsemble + ?Sized>(model: &M, columns: &ColumnMoments, i: usize) -> f64 {
    (0..model.n_issuers())
        .map(|a| {
            let pm = model.moments(i, a);
            if pm.second == 0.0 {
                return 0.0;
            }
            let r = columns.mean[a] - pm.mean;
            let var_rest = (columns.variance[a] - pm.variance).max(0.0);
            pm.var_square + 2.0 * r * pm.cov_square + r * r * pm.variance + pm.second * var_rest
        })
        .sum()
}

/// Closed forms for σ²_{S_i} that treat w_iα and Ĉ_α as independent:
///
/// ECAPM: Σ_α (ω_iα²/p_iα) [Σ_j ω_jα²/p_jα + C_α²(1 − p_iα) − Σ_j ω_jα²]
///
/// MECAPM: Σ_α ω_iα [(1 + 2ω_iα) Σ_j ω_jα² + C_α(1 + C_α) + C_α ω_iα (2 + C_α)]
pub fn overlap_variance_decoupled<M: PairEnsemble + ?Sized>(model: &M, columns: &ColumnMoments, i: usize) -> f64 {
    let c = model.strengths().issuer();
    (0..model.n_issuers())
        .map(|a| {
            let law = model.weight_law(i, a);
            let w = law.mean;
            if w == 0.0 {
                return 0.0;
            }
            let sum_sq = columns.mean_square[a];
            match model.kind() {
                ModelKind::Ecapm => {
                    let p = law.link_probability;
                    // Σ_j ω_jα²/p_jα is Σ_j ⟨w_jα²⟩ for this law.
                    w * w / p * (columns.second[a] + c[a] * c[a] * (1.0 - p) - sum_sq)
                }
                ModelKind::Mecapm => w * ((1.0 + 2.0 * w) * sum_sq + c[a] * (1.0 + c[a]) + c[a] * w * (2.0 + c[a])),
                // Deterministic weights.
                ModelKind::Capm => 0.0,
            }
        })
        .sum()
}

/// Exact ensemble variance of holder i's overlap (homogeneous reduction).
pub fn systemicness_variance<M: PairEnsemble + ?Sized>(model: &M, i: usize) -> f64 {
    overlap_variance(model, &ColumnMoments::of(model), i)
}

/// The decoupled closed form; see the module docs for how it relates to
/// [`systemicness_variance`].
pub fn systemicness_variance_decoupled<M: PairEnsemble + ?Sized>(model: &M, i: usize) -> f64 {
    overlap_variance_decoupled(model, &ColumnMoments::of(model), i)
}

/// r_{S_i} = σ^ECAPM_{S_i} / σ^MECAPM_{S_i}; `None` when the MECAPM σ is zero.
pub fn systemicness_sigma_ratio<E, M>(ecapm: &E, mecapm: &M, i: usize) -> Option<f64>
where
    E: PairEnsemble + ?Sized,
    M: PairEnsemble + ?Sized,
{
    sigma_ratio(systemicness_variance(ecapm, i), systemicness_variance(mecapm, i))
}

fn sigma_ratio(var_num: f64, var_den: f64) -> Option<f64> {
    (var_den > 0.0).then(|| (var_num.max(0.0) / var_den).sqrt())
}

/// Ensemble systemicness statistics of one model, per holder.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSystemicness {
    pub kind: ModelKind,
    /// ⟨S_i⟩ / S_i
    pub expected_ratio: Vec<Option<f64>>,
    /// Exact σ of the overlap.
    pub sigma: Vec<f64>,
    /// σ from the decoupled closed form.
    pub sigma_decoupled: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemicnessReport {
    pub holder_strength: Vec<f64>,
    /// Σ_α w_iα C_α of the observed network.
    pub observed_overlap: Vec<f64>,
    pub ecapm: ModelSystemicness,
    pub mecapm: ModelSystemicness,
    /// r_{S_i} from the exact variances.
    pub sigma_ratio: Vec<Option<f64>>,
    /// r_{S_i} from the decoupled closed forms.
    pub sigma_ratio_decoupled: Vec<Option<f64>>,
}

pub fn model_systemicness<M: PairEnsemble + ?Sized>(
    exec: Execution,
    truth: &BipartiteNetwork,
    model: &M,
) -> Result<ModelSystemicness> {
    check_dims(truth, model)?;
    let columns = ColumnMoments::with(exec, model);
    let den = overlaps(truth);
    let per_holder: Vec<(Option<f64>, f64, f64)> = exec.map(model.n_holders(), |i| {
        let ratio = (den[i] > 0.0).then(|| expected_overlap(model, &columns, i) / den[i]);
        let var = overlap_variance(model, &columns, i);
        let var_dec = overlap_variance_decoupled(model, &columns, i);
        (ratio, var.max(0.0).sqrt(), var_dec.max(0.0).sqrt())
    });
    Ok(ModelSystemicness {
        kind: model.kind(),
        expected_ratio: per_holder.iter().map(|x| x.0).collect(),
        sigma: per_holder.iter().map(|x| x.1).collect(),
        sigma_decoupled: per_holder.iter().map(|x| x.2).collect(),
    })
}

/// Expected ratios, σ's and r_{S_i} for every holder, paired with V_i so the
/// dependence of r_{S_i} on holder size can be inspected.
pub fn systemicness_report<E, M>(truth: &BipartiteNetwork, ecapm: &E, mecapm: &M) -> Result<SystemicnessReport>
where
    E: PairEnsemble + ?Sized,
    M: PairEnsemble + ?Sized,
{
    let exec = Execution::default();
    let e = model_systemicness(exec, truth, ecapm)?;
    let m = model_systemicness(exec, truth, mecapm)?;
    let ratio = |a: &[f64], b: &[f64]| -> Vec<Option<f64>> {
        a.iter().zip(b).map(|(x, y)| sigma_ratio(x * x, y * y)).collect()
    };
    Ok(SystemicnessReport {
        holder_strength: truth.strengths().holder().to_vec(),
        observed_overlap: overlaps(truth),
        sigma_ratio: ratio(&e.sigma, &m.sigma),
        sigma_ratio_decoupled: ratio(&e.sigma_decoupled, &m.sigma_decoupled),
        ecapm: e,
        mecapm: m,
    })
}
