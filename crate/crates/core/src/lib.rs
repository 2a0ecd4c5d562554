//! Genus-q balayage of finite atomic charges onto ray systems.
//!
//! The crate is `no_std` with `alloc`. It covers closed-form kernels
//! (harmonic measure, genus-q Poisson kernels and harmonic charges, the
//! Weierstrass-Hadamard kernel), sweeping out of half-planes, angles and
//! ray systems, growth-condition functionals on charges and log-modulus
//! oracles, and a principal-value criterion for completely regular growth
//! along rays. All numerics run through the adaptive quadrature engine in
//! [`quadrature`].
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod balayage;
pub mod crg;
pub mod growth;
pub mod kernels;
pub mod measures;
pub mod quadrature;
mod stats;

pub use num_complex::Complex64;

/// Runs independent per-point evaluations, sequentially or in parallel.
pub trait GridExecutor {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> alloc::vec::Vec<T>;
}

/// In-order evaluation on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl GridExecutor for Sequential {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> alloc::vec::Vec<T> {
        (0..n).map(f).collect()
    }
}
