//! Shared fixtures for the criterion benchmarks.

use nalgebra::{DMatrix, DVector};

use hyperest::hybrid_sim::LinearHybridSystem;
use hyperest::scenarios::build_benchmark_regressor;

/// The standard two-parameter benchmark pair at gamma = 1.
pub fn benchmark_system(periods: u32, dt: f64) -> LinearHybridSystem {
    let theta = DVector::from_vec(vec![1.0, -2.0]);
    let (_, sys) = build_benchmark_regressor(1.0, periods, dt, &theta).expect("valid benchmark");
    sys
}

/// A dense symmetric matrix with a known spectrum-free construction, for
/// eigensolver benchmarks.
pub fn symmetric_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.4;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m[(i, i)] += n as f64 * 0.5;
    }
    m
}
