#![allow(dead_code)]

use vgfit_core::GridSpec;

/// Wide lattice for Variance-Gamma work: the cf decays only like
/// `|t|^(-2 alpha)`, so the frequency window must be broad. `x_k` steps by
/// 1/512, which puts every multiple of 1/512 (including -2) on the lattice.
pub fn wide_grid() -> GridSpec {
    GridSpec::with_gamma(200.0, 16384, 1.0 / 512.0).unwrap()
}
