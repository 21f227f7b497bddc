//! Average nearest-neighbour degrees and strengths, observed and expected.
//!
//! Entries for nodes without neighbours (or with zero expected degree) are
//! `None`.

use crate::exec::Execution;
use crate::models::PairEnsemble;
use crate::network::BipartiteNetwork;

/// Per-node neighbour averages of one layer pair.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnReport {
    /// Holder degree (observed count or expected value).
    pub holder_degree: Vec<f64>,
    pub holder_strength: Vec<f64>,
    /// d_i^nn: mean degree of the issuers held by i.
    pub holder_neighbor_degree: Vec<Option<f64>>,
    /// C_i^nn: mean strength of the issuers held by i.
    pub holder_neighbor_strength: Vec<Option<f64>>,
    pub issuer_degree: Vec<f64>,
    pub issuer_strength: Vec<f64>,
    /// k_α^nn: mean degree of the holders of α.
    pub issuer_neighbor_degree: Vec<Option<f64>>,
    /// V_α^nn: mean strength of the holders of α.
    pub issuer_neighbor_strength: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeighborAverages {
    pub holder: Vec<Option<f64>>,
    pub issuer: Vec<Option<f64>>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn neighbor_means(net: &BipartiteNetwork, holder_value: &[f64], issuer_value: &[f64]) -> NeighborAverages {
    let deg = net.degrees();
    let mut holder_sum = vec![0.0; net.n_holders()];
    let mut issuer_sum = vec![0.0; net.n_issuers()];
    for e in net.edges() {
        holder_sum[e.holder] += issuer_value[e.issuer];
        issuer_sum[e.issuer] += holder_value[e.holder];
    }
    NeighborAverages {
        holder: holder_sum
            .iter()
            .zip(&deg.holder)
            .map(|(s, &k)| ratio(*s, k as f64))
            .collect(),
        issuer: issuer_sum
            .iter()
            .zip(&deg.issuer)
            .map(|(s, &d)| ratio(*s, d as f64))
            .collect(),
    }
}

/// d_i^nn = Σ_α a_iα d_α / k_i and k_α^nn = Σ_i a_iα k_i / d_α.
pub fn ann_degrees(net: &BipartiteNetwork) -> NeighborAverages {
    let deg = net.degrees();
    let k: Vec<f64> = deg.holder.iter().map(|&x| x as f64).collect();
    let d: Vec<f64> = deg.issuer.iter().map(|&x| x as f64).collect();
    neighbor_means(net, &k, &d)
}

/// C_i^nn = Σ_α a_iα C_α / k_i and V_α^nn = Σ_i a_iα V_i / d_α.
pub fn ann_strengths(net: &BipartiteNetwork) -> NeighborAverages {
    let s = net.strengths();
    neighbor_means(net, s.holder(), s.issuer())
}

/// Observed degrees, strengths and neighbour averages of `net`.
pub fn observed_ann(net: &BipartiteNetwork) -> AnnReport {
    let deg = net.degrees();
    let s = net.strengths();
    let degrees = ann_degrees(net);
    let strengths = ann_strengths(net);
    AnnReport {
        holder_degree: deg.holder.iter().map(|&x| x as f64).collect(),
        holder_strength: s.holder().to_vec(),
        holder_neighbor_degree: degrees.holder,
        holder_neighbor_strength: strengths.holder,
        issuer_degree: deg.issuer.iter().map(|&x| x as f64).collect(),
        issuer_strength: s.issuer().to_vec(),
        issuer_neighbor_degree: degrees.issuer,
        issuer_neighbor_strength: strengths.issuer,
    }
}

/// Expected counterparts: ⟨d_i^nn⟩ = Σ_α ⟨a_iα⟩⟨d_α⟩ / ⟨k_i⟩ and so on,
/// with ⟨a_iα⟩ the model's link probability.
pub fn expected_ann<M: PairEnsemble + ?Sized>(model: &M) -> AnnReport {
    expected_ann_with(Execution::default(), model)
}

pub fn expected_ann_with<M: PairEnsemble + ?Sized>(exec: Execution, model: &M) -> AnnReport {
    let (n, m) = (model.n_holders(), model.n_issuers());
    let s = model.strengths();
    let p = |i: usize, a: usize| model.link_probability(i, a);
    // Rows and columns are swept separately so no N×M buffer is held.
    let k: Vec<f64> = exec.map(n, |i| (0..m).map(|a| p(i, a)).sum());
    let d: Vec<f64> = exec.map(m, |a| (0..n).map(|i| p(i, a)).sum());
    let holder_stats: Vec<(Option<f64>, Option<f64>)> = exec.map(n, |i| {
        let (num_d, num_c) = (0..m).fold((0.0, 0.0), |(x, y), a| {
            let pa = p(i, a);
            (x + pa * d[a], y + pa * s.issuer()[a])
        });
        (ratio(num_d, k[i]), ratio(num_c, k[i]))
    });
    let issuer_stats: Vec<(Option<f64>, Option<f64>)> = exec.map(m, |a| {
        let (num_k, num_v) = (0..n).fold((0.0, 0.0), |(x, y), i| {
            let pi = p(i, a);
            (x + pi * k[i], y + pi * s.holder()[i])
        });
        (ratio(num_k, d[a]), ratio(num_v, d[a]))
    });
    AnnReport {
        holder_degree: k,
        holder_strength: s.holder().to_vec(),
        holder_neighbor_degree: holder_stats.iter().map(|x| x.0).collect(),
        holder_neighbor_strength: holder_stats.iter().map(|x| x.1).collect(),
        issuer_degree: d,
        issuer_strength: s.issuer().to_vec(),
        issuer_neighbor_degree: issuer_stats.iter().map(|x| x.0).collect(),
        issuer_neighbor_strength: issuer_stats.iter().map(|x| x.1).collect(),
    }
}

/// Conventional dense-network constants for MECAPM (q → 1), with the usual
/// layer labels. The exact fully connected values are M, N, W/M and
/// W/N; these carry a −1 offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenseLimitAnn {
    pub issuer_neighbor_degree: f64,
    pub holder_neighbor_degree: f64,
    pub issuer_neighbor_strength: f64,
    pub holder_neighbor_strength: f64,
}

pub fn mecapm_dense_limits(n_holders: usize, n_issuers: usize, total_weight: f64) -> DenseLimitAnn {
    let n = n_holders as f64;
    let m = n_issuers as f64;
    DenseLimitAnn {
        issuer_neighbor_degree: m - 1.0,
        holder_neighbor_degree: n - 1.0,
        issuer_neighbor_strength: total_weight / (n - 1.0),
        holder_neighbor_strength: total_weight / (m - 1.0),
    }
}
