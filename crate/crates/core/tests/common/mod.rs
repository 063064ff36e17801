#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use wta_core::geometry::{build_snapshot, initial_agents};
use wta_core::{surrogate_cost_matrix, CostMatrix, CostOptions, Matrix, Scenario, SceneSnapshot};

#[derive(Debug, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub raw: String,
    pub n_agents: usize,
    pub n_targets: usize,
    #[serde(default)]
    pub ids: Option<Vec<usize>>,
    #[serde(default)]
    pub clipped: Option<Vec<usize>>,
    #[serde(default)]
    pub failure: Option<String>,
    pub outcome: String,
}

pub fn fixtures() -> Vec<Fixture> {
    let text = include_str!("../fixtures/llm_responses.json");
    serde_json::from_str(text).expect("fixture file parses")
}

/// Baseline scene restricted to the first `n` interceptors and `m` targets.
pub fn baseline_scene(n: usize, m: usize) -> (SceneSnapshot<f64>, CostMatrix<f64>) {
    let s = Scenario::<f64>::baseline();
    let (a, t) = initial_agents(&s);
    let snap = build_snapshot(&s, &a[..n], &t[..m], 1, 2.0, &vec![None; n]).unwrap();
    let cm = surrogate_cost_matrix(&snap, &s.cost_weights, CostOptions::default());
    (snap, cm)
}

pub fn random_square(rng: &mut ChaCha8Rng, n: usize) -> CostMatrix<f64> {
    CostMatrix::from_values(Matrix::from_fn(n, n, |_, _| rng.gen_range(-5.0..20.0)))
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimum over all permutations by Heap's algorithm.
pub fn permutation_minimum(c: &Matrix<f64>) -> f64 {
    let n = c.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let cost = |p: &[usize]| p.iter().enumerate().map(|(i, &k)| c[(i, k)]).sum::<f64>();
    let mut best = cost(&perm);
    let mut counter = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if counter[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counter[i], i);
            }
            best = best.min(cost(&perm));
            counter[i] += 1;
            i = 0;
        } else {
            counter[i] = 0;
            i += 1;
        }
    }
    best
}
