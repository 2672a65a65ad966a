//! Straight-loop reference network used as an oracle. Shares no code with
//! the library beyond reading its matrices.

#![allow(dead_code)]

use grwc_core::{Dataset, Matrix, NetworkTopology, Sample, WeightSet};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn oracle_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect()).collect()
}

fn layer(w: &[Vec<f64>], input: &[f64], bias: bool) -> Vec<f64> {
    let mut out = Vec::new();
    for row in w {
        let mut s = 0.0;
        for j in 0..input.len() {
            s += row[j] * input[j];
        }
        if bias {
            s += row[input.len()];
        }
        out.push(logistic(s));
    }
    out
}

/// `(z2, z3, h)` for one input.
pub fn reference_forward(t: &NetworkTopology, w: &WeightSet, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let z2 = layer(&to_rows(&w.theta1), x, t.bias);
    let z3 = layer(&to_rows(&w.theta2), &z2, t.bias);
    let total: f64 = z3.iter().sum();
    let h = z3.iter().map(|v| v / total).collect();
    (z2, z3, h)
}

pub fn reference_sample_cost(h: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..h.len() {
        s += (h[k] - y[k]) * (h[k] - y[k]);
    }
    0.5 * s
}

pub fn reference_dataset_cost(t: &NetworkTopology, w: &WeightSet, data: &Dataset) -> f64 {
    let mut total = 0.0;
    for s in data.samples() {
        let (_, _, h) = reference_forward(t, w, s.x());
        total += reference_sample_cost(&h, s.y());
    }
    total / data.len() as f64
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Matrix {
    let data: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-scale..=scale)).collect())
        .collect();
    Matrix::from_rows(&data).unwrap()
}

pub fn random_weights(t: &NetworkTopology, scale: f64, rng: &mut impl Rng) -> WeightSet {
    let (r1, c1) = t.theta1_shape();
    let (r2, c2) = t.theta2_shape();
    WeightSet::new(t, random_matrix(r1, c1, scale, rng), random_matrix(r2, c2, scale, rng)).unwrap()
}

/// Random dataset with a mix of dense and mostly-zero inputs.
pub fn random_dataset(t: &NetworkTopology, n: usize, rng: &mut impl Rng) -> Dataset {
    let samples = (0..n)
        .map(|_| {
            let sparse = rng.random_bool(0.5);
            let x = (0..t.input_size)
                .map(|_| {
                    if sparse && rng.random_bool(0.7) {
                        0.0
                    } else {
                        rng.random_range(0.0..=1.0)
                    }
                })
                .collect();
            Sample::with_label(x, rng.random_range(0..t.output_size), t.output_size).unwrap()
        })
        .collect();
    Dataset::new(samples).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Prints the acceptance line and fails the test when `ok` is false.
pub fn report(id: &str, ok: bool, detail: &str) {
    println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{id} failed: {detail}");
}
