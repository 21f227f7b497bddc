//! Seeded ensemble sampling.
//!
//! Randomness is counter-based: the uniform deciding pair (i, α) is the
//! α-th 64-bit output of a ChaCha8 generator seeded with `seed` on stream
//! `i`. A pair's draw is therefore a pure function of (seed, i, α), which
//! makes row-parallel sampling reproducible and order-independent.
//! Independent ensemble draws get their own seeds from [`draw_seed`].

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::Execution;
use crate::models::{EcapmModel, MecapmModel, PairEnsemble};
use crate::network::{BipartiteNetwork, Edge};

const SCALE: f64 = 1.0 / (1u64 << 52) as f64;

fn to_open_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * SCALE
}

fn row_stream(seed: u64, holder: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(holder as u64);
    rng
}

/// The uniform in (0, 1) assigned to pair (i, α) under `seed`.
pub fn pair_uniform(seed: u64, holder: usize, issuer: usize) -> f64 {
    let mut rng = row_stream(seed, holder);
    rng.set_word_pos(2 * issuer as u128);
    to_open_unit(rng.next_u64())
}

/// Seed of the `draw`-th member of an ensemble rooted at `base`.
pub fn draw_seed(base: u64, draw: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(draw);
    rng.next_u64()
}

/// Weight of pair (i, α) in the network `sample(model, seed)` would return.
pub fn sample_pair_weight<M: PairEnsemble + ?Sized>(model: &M, seed: u64, holder: usize, issuer: usize) -> f64 {
    model.draw_weight(holder, issuer, pair_uniform(seed, holder, issuer))
}

fn sample_row<M: PairEnsemble + ?Sized>(model: &M, seed: u64, holder: usize) -> Vec<Edge> {
    let mut rng = row_stream(seed, holder);
    let mut row = Vec::new();
    for issuer in 0..model.n_issuers() {
        let u = to_open_unit(rng.next_u64());
        let weight = model.draw_weight(holder, issuer, u);
        if weight > 0.0 {
            row.push(Edge { holder, issuer, weight });
        }
    }
    row
}

/// One network drawn from `model`.
pub fn sample<M: PairEnsemble + ?Sized>(model: &M, seed: u64) -> BipartiteNetwork {
    sample_with(Execution::default(), model, seed)
}

pub fn sample_with<M: PairEnsemble + ?Sized>(exec: Execution, model: &M, seed: u64) -> BipartiteNetwork {
    let rows = exec.map(model.n_holders(), |i| sample_row(model, seed, i));
    let edges = rows.into_iter().flatten().collect();
    BipartiteNetwork::from_sorted(model.n_holders(), model.n_issuers(), edges)
}

pub fn sample_ecapm(model: &EcapmModel, seed: u64) -> BipartiteNetwork {
    sample(model, seed)
}

pub fn sample_mecapm(model: &MecapmModel, seed: u64) -> BipartiteNetwork {
    sample(model, seed)
}

/// Repeated independent draws from one model.
pub struct EnsembleSampler<'a, M: PairEnsemble + ?Sized> {
    model: &'a M,
    seed: u64,
    exec: Execution,
}

impl<'a, M: PairEnsemble + ?Sized> EnsembleSampler<'a, M> {
    pub fn new(model: &'a M, seed: u64) -> Self {
        Self {
            model,
            seed,
            exec: Execution::default(),
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn draw(&self, index: u64) -> BipartiteNetwork {
        sample_with(Execution::Sequential, self.model, draw_seed(self.seed, index))
    }

    /// Applies `f` to draws `0..n` and returns the results in draw order.
    /// Draws are distributed over threads; each draw is sampled serially.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&BipartiteNetwork) -> T + Sync + Send,
    {
        self.exec.map(n, |k| f(&self.draw(k as u64)))
    }
}
