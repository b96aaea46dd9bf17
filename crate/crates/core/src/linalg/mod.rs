//! Linear algebra kernels: small fixed-size dense helpers for element maps and a
//! sparse symmetric envelope Cholesky factorization for the Newton systems.

mod envelope;
pub mod small;

pub use envelope::{EnvelopeCholesky, EnvelopeStructure};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(a: &[f64]) -> f64 {
    #[allow(unused_imports)]
    use num_traits::Float;
    dot(a, a).sqrt()
}
