//! Cosine-transform diagonalization of the Neumann Laplacian.
//!
//! The cell-centered five-point Laplacian with mirror ghosts has the
//! eigenvectors `cos(π j (i+½)/nx) · cos(π k (l+½)/ny)`. Coefficients are
//! stored as amplitudes in that basis, so a constant field `c` maps to the
//! single mode `(0, 0)` with amplitude `c`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use super::{GridSpec, ScalarField};
use crate::error::{Error, Result};

thread_local! {
    static PLANS: RefCell<(DctPlanner<f64>, HashMap<usize, Arc<dyn TransformType2And3<f64>>>)> =
        RefCell::new((DctPlanner::new(), HashMap::new()));
}

fn plan(n: usize) -> Arc<dyn TransformType2And3<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry(n)
            .or_insert_with(|| planner.plan_dct2(n))
            .clone()
    })
}

/// Eigenvalue of the Neumann five-point Laplacian for cosine mode `(j, k)`.
pub fn laplacian_eigenvalue(grid: &GridSpec, j: usize, k: usize) -> f64 {
    let (hx, hy) = (grid.hx(), grid.hy());
    let sx = (2.0 - 2.0 * (std::f64::consts::PI * j as f64 / grid.nx as f64).cos()) / (hx * hx);
    let sy = (2.0 - 2.0 * (std::f64::consts::PI * k as f64 / grid.ny as f64).cos()) / (hy * hy);
    -(sx + sy)
}

/// Amplitudes in the cosine eigenbasis; mode `(j, k)` is at `k*nx + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    grid: GridSpec,
    coeffs: Vec<f64>,
}

impl SpectralCoeffs {
    pub fn from_values(grid: GridSpec, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "{} cosine coefficients for a {}x{} grid",
                coeffs.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mode(&self, j: usize, k: usize) -> f64 {
        self.coeffs[k * self.grid.nx + j]
    }

    /// Laplacian eigenvalue of every stored mode, same layout as the values.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(g.n_cells());
        for k in 0..g.ny {
            for j in 0..g.nx {
                out.push(laplacian_eigenvalue(g, j, k));
            }
        }
        out
    }
}

fn transform_rows(data: &mut [f64], nx: usize, ny: usize, inverse: bool) {
    let p = plan(nx);
    for row in data.chunks_exact_mut(nx).take(ny) {
        if inverse {
            p.process_dct3(row);
        } else {
            p.process_dct2(row);
        }
    }
}

fn transform_columns(data: &mut [f64], nx: usize, ny: usize, inverse: bool) {
    let p = plan(ny);
    let mut col = vec![0.0; ny];
    for i in 0..nx {
        for (l, c) in col.iter_mut().enumerate() {
            *c = data[l * nx + i];
        }
        if inverse {
            p.process_dct3(&mut col);
        } else {
            p.process_dct2(&mut col);
        }
        for (l, c) in col.iter().enumerate() {
            data[l * nx + i] = *c;
        }
    }
}

/// Forward transform: cell values to cosine amplitudes.
pub fn cosine_transform(f: &ScalarField) -> SpectralCoeffs {
    let g = *f.grid();
    let (nx, ny) = (g.nx, g.ny);
    let mut data = f.values().to_vec();
    transform_rows(&mut data, nx, ny, false);
    transform_columns(&mut data, nx, ny, false);
    for k in 0..ny {
        let wk = if k == 0 { 1.0 } else { 2.0 } / ny as f64;
        for j in 0..nx {
            let wj = if j == 0 { 1.0 } else { 2.0 } / nx as f64;
            data[k * nx + j] *= wj * wk;
        }
    }
    SpectralCoeffs { grid: g, coeffs: data }
}

/// Inverse transform: cosine amplitudes to cell values.
pub fn inverse_cosine_transform(c: &SpectralCoeffs) -> ScalarField {
    let g = c.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut data = c.coeffs.clone();
    // DCT-III halves the zeroth input.
    for k in 0..ny {
        data[k * nx] *= 2.0;
    }
    for j in 0..nx {
        data[j] *= 2.0;
    }
    transform_rows(&mut data, nx, ny, true);
    transform_columns(&mut data, nx, ny, true);
    ScalarField::from_values(g, data).expect("sized by grid")
}

/// Solves `(a0 I + a1 (−Δ) + a2 Δ² + a3 (−Δ)³) x = rhs` with the Neumann
/// five-point Laplacian. A singular `(0, 0)` symbol is admissible when the
/// right-hand side has zero mean; the zero-mean solution is returned.
pub fn helmholtz_poly_solve(a: [f64; 4], rhs: &ScalarField) -> Result<ScalarField> {
    if !rhs.is_finite() {
        return Err(Error::NonFinite("elliptic right-hand side"));
    }
    let g = *rhs.grid();
    let [a0, a1, a2, a3] = a;
    let mut c = cosine_transform(rhs);
    for k in 0..g.ny {
        for j in 0..g.nx {
            let lam = laplacian_eigenvalue(&g, j, k);
            let m = -lam;
            let symbol = a0 + a1 * m + a2 * m * m + a3 * m * m * m;
            let scale = a0.abs() + a1.abs() * m + a2.abs() * m * m + a3.abs() * m * m * m;
            let idx = k * g.nx + j;
            if symbol.abs() <= 1e-14 * scale || symbol == 0.0 {
                if j == 0 && k == 0 {
                    let mean = rhs.mean();
                    let rms = rhs.rms();
                    if mean.abs() > 1e-10 * rms {
                        return Err(Error::IncompatibleMean { mean, rms });
                    }
                    c.coeffs[idx] = 0.0;
                } else {
                    return Err(Error::SingularSymbol { j, k });
                }
            } else {
                c.coeffs[idx] /= symbol;
            }
        }
    }
    Ok(inverse_cosine_transform(&c))
}

/// Zero-mean solution of `−Δp = rhs` under homogeneous Neumann conditions.
pub fn poisson_neumann(rhs: &ScalarField) -> Result<ScalarField> {
    let mut p = helmholtz_poly_solve([0.0, 1.0, 0.0, 0.0], rhs)?;
    p.remove_mean();
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::laplacian;

    fn grid() -> GridSpec {
        GridSpec::new(8, 6, 2.0, 1.5).unwrap()
    }

    fn pseudo_random(g: GridSpec, seed: u64) -> ScalarField {
        let mut s = seed;
        ScalarField::from_fn(g, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn constant_maps_to_zero_mode() {
        let g = grid();
        let c = cosine_transform(&ScalarField::constant(g, 3.5));
        assert!((c.mode(0, 0) - 3.5).abs() < 1e-14);
        for (idx, v) in c.values().iter().enumerate().skip(1) {
            assert!(v.abs() < 1e-14, "mode {idx} = {v}");
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let g = grid();
        let f = pseudo_random(g, 7);
        let back = inverse_cosine_transform(&cosine_transform(&f));
        let err = back.zip_map(&f, |a, b| a - b).max_abs();
        assert!(err <= 1e-12 * f.max_abs(), "round trip error {err}");
    }

    #[test]
    fn sampled_cosine_is_single_mode() {
        let g = grid();
        let f = ScalarField::from_fn(g, |x, _| (std::f64::consts::PI * x / g.lx).cos());
        // Oracle: brute-force projection onto the sampled basis vectors.
        for k in 0..g.ny {
            for j in 0..g.nx {
                let mut num = 0.0;
                let mut den = 0.0;
                for l in 0..g.ny {
                    for i in 0..g.nx {
                        let b = (std::f64::consts::PI * j as f64 * (i as f64 + 0.5) / g.nx as f64)
                            .cos()
                            * (std::f64::consts::PI * k as f64 * (l as f64 + 0.5) / g.ny as f64)
                                .cos();
                        num += b * f.at(i, l);
                        den += b * b;
                    }
                }
                let expected = num / den;
                let got = cosine_transform(&f).mode(j, k);
                assert!((got - expected).abs() < 1e-13, "mode ({j},{k})");
                if (j, k) == (1, 0) {
                    assert!((expected - 1.0).abs() < 1e-13);
                } else {
                    assert!(expected.abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn eigenvalues_match_stencil() {
        let g = grid();
        for (j, k) in [(0, 0), (1, 0), (2, 3), (7, 5)] {
            let f = ScalarField::from_fn(g, |x, y| {
                (std::f64::consts::PI * j as f64 * x / g.lx).cos()
                    * (std::f64::consts::PI * k as f64 * y / g.ly).cos()
            });
            let lf = laplacian(&f);
            let lam = laplacian_eigenvalue(&g, j, k);
            let err = lf.zip_map(&f, |a, b| a - lam * b).max_abs();
            assert!(err < 1e-10 * (1.0 + lam.abs()), "mode ({j},{k}) err {err}");
        }
        assert_eq!(laplacian_eigenvalue(&g, 0, 0), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = grid();
        assert!(matches!(
            SpectralCoeffs::from_values(g, vec![0.0; 5]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn identity_symbol_returns_rhs() {
        let g = grid();
        let f = pseudo_random(g, 3);
        let x = helmholtz_poly_solve([1.0, 0.0, 0.0, 0.0], &f).unwrap();
        assert!(x.zip_map(&f, |a, b| a - b).max_abs() < 1e-13);
    }

    #[test]
    fn shifted_laplacian_recovers_field() {
        let g = grid();
        let f = pseudo_random(g, 11);
        let rhs = f.zip_map(&laplacian(&f), |a, l| a - l);
        let x = helmholtz_poly_solve([1.0, 1.0, 0.0, 0.0], &rhs).unwrap();
        assert!(x.zip_map(&f, |a, b| a - b).max_abs() < 1e-10);
    }

    #[test]
    fn sixth_order_residual() {
        let g = grid();
        let rhs = pseudo_random(g, 5);
        let a = [1.0, 0.3, 0.02, 1e-3];
        let x = helmholtz_poly_solve(a, &rhs).unwrap();
        let l1 = laplacian(&x);
        let l2 = laplacian(&l1);
        let l3 = laplacian(&l2);
        let mut r = x.scaled(a[0]);
        r.axpy(-a[1], &l1);
        r.axpy(a[2], &l2);
        r.axpy(-a[3], &l3);
        r.axpy(-1.0, &rhs);
        assert!(r.norm_l2() <= 1e-10 * rhs.norm_l2());
    }

    #[test]
    fn singular_modes_are_rejected() {
        let g = grid();
        let mut f = pseudo_random(g, 9);
        assert!(matches!(
            helmholtz_poly_solve([0.0, 1.0, 0.0, 0.0], &f),
            Err(Error::IncompatibleMean { .. })
        ));
        f.remove_mean();
        let p = poisson_neumann(&f).unwrap();
        assert!(p.mean().abs() < 1e-14);
        // Symbol 1 − (−λ) vanishes where −λ = 1 exactly for some mode.
        let m = -laplacian_eigenvalue(&g, 1, 0);
        assert!(matches!(
            helmholtz_poly_solve([m, -1.0, 0.0, 0.0], &f),
            Err(Error::SingularSymbol { j: 1, k: 0 })
        ));
    }
}
