//! Operators acting on staggered velocities: face Laplacian, strain and
//! viscous stress, momentum transport, capillary forcing.
//!
//! Tangential no-slip is imposed with antisymmetric ghost values beyond the
//! walls. Every operator returns zero on boundary-normal faces.

use super::{face_average, gradient_to_faces, FaceField, GridSpec, ScalarField};
use crate::error::{Error, Result};

/// Relative residual target of the face Helmholtz solve.
pub const CG_TOL: f64 = 1e-13;
/// Iteration cap of the face Helmholtz solve.
pub const CG_MAX_ITER: usize = 500;

/// Component-wise Laplacian of a no-slip face field.
pub fn face_laplacian(v: &FaceField) -> FaceField {
    let g = *v.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (ihx2, ihy2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let mut out = FaceField::zeros(g);
    let u = v.x();
    {
        let ox = out.x_mut();
        for j in 0..ny {
            for i in 1..nx {
                let c = u[g.xface(i, j)];
                let w = if i > 1 { u[g.xface(i - 1, j)] } else { 0.0 };
                let e = if i + 1 < nx { u[g.xface(i + 1, j)] } else { 0.0 };
                let s = if j > 0 { u[g.xface(i, j - 1)] } else { -c };
                let n = if j + 1 < ny { u[g.xface(i, j + 1)] } else { -c };
                ox[g.xface(i, j)] = (e - 2.0 * c + w) * ihx2 + (n - 2.0 * c + s) * ihy2;
            }
        }
    }
    let w = v.y();
    {
        let oy = out.y_mut();
        for j in 1..ny {
            for i in 0..nx {
                let c = w[g.yface(i, j)];
                let s = if j > 1 { w[g.yface(i, j - 1)] } else { 0.0 };
                let n = if j + 1 < ny { w[g.yface(i, j + 1)] } else { 0.0 };
                let we = if i > 0 { w[g.yface(i - 1, j)] } else { -c };
                let e = if i + 1 < nx { w[g.yface(i + 1, j)] } else { -c };
                oy[g.yface(i, j)] = (e - 2.0 * c + we) * ihx2 + (n - 2.0 * c + s) * ihy2;
            }
        }
    }
    out
}

/// Solves `(I − c Δ) x = rhs` on interior faces by conjugate gradients.
pub fn helmholtz_faces(rhs: &FaceField, c: f64) -> Result<FaceField> {
    if !rhs.is_finite() {
        return Err(Error::NonFinite("face helmholtz right-hand side"));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParams(format!("helmholtz coefficient {c}")));
    }
    let mut b = rhs.clone();
    b.zero_boundary();
    let apply = |x: &FaceField| {
        let mut ax = x.clone();
        ax.axpy(-c, &face_laplacian(x));
        ax
    };
    let dot = |a: &FaceField, b: &FaceField| a.iter().zip(b.iter()).map(|(p, q)| p * q).sum::<f64>();
    let bnorm = dot(&b, &b).sqrt();
    if bnorm == 0.0 {
        return Ok(b);
    }
    let mut x = b.clone();
    let mut r = b.clone();
    r.axpy(-1.0, &apply(&x));
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..CG_MAX_ITER {
        if rr.sqrt() <= CG_TOL * bnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p = r.zip_map(&p, |ri, pi| ri + beta * pi);
    }
    if rr.sqrt() <= CG_TOL * bnorm {
        return Ok(x);
    }
    Err(Error::SolverNonConvergence {
        iterations: CG_MAX_ITER,
        residual: rr.sqrt() / bnorm,
    })
}

/// Symmetric velocity gradient: diagonal entries at cells, the off-diagonal
/// entry at corners.
struct Strain {
    dxx: Vec<f64>,
    dyy: Vec<f64>,
    dxy: Vec<f64>,
}

fn strain(v: &FaceField) -> Strain {
    let g = *v.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (ihx, ihy) = (1.0 / g.hx(), 1.0 / g.hy());
    let (u, w) = (v.x(), v.y());
    let mut dxx = vec![0.0; g.n_cells()];
    let mut dyy = vec![0.0; g.n_cells()];
    for j in 0..ny {
        for i in 0..nx {
            dxx[g.cell(i, j)] = (u[g.xface(i + 1, j)] - u[g.xface(i, j)]) * ihx;
            dyy[g.cell(i, j)] = (w[g.yface(i, j + 1)] - w[g.yface(i, j)]) * ihy;
        }
    }
    let mut dxy = vec![0.0; g.n_corners()];
    for j in 0..=ny {
        for i in 0..=nx {
            let dudy = if i == 0 || i == nx {
                0.0
            } else if j == 0 {
                2.0 * u[g.xface(i, 0)] * ihy
            } else if j == ny {
                -2.0 * u[g.xface(i, ny - 1)] * ihy
            } else {
                (u[g.xface(i, j)] - u[g.xface(i, j - 1)]) * ihy
            };
            let dvdx = if j == 0 || j == ny {
                0.0
            } else if i == 0 {
                2.0 * w[g.yface(0, j)] * ihx
            } else if i == nx {
                -2.0 * w[g.yface(nx - 1, j)] * ihx
            } else {
                (w[g.yface(i, j)] - w[g.yface(i - 1, j)]) * ihx
            };
            dxy[g.corner(i, j)] = 0.5 * (dudy + dvdx);
        }
    }
    Strain { dxx, dyy, dxy }
}

/// Quadrature weight of a corner in the strain pairing.
#[inline]
fn corner_weight(g: &GridSpec, i: usize, j: usize) -> f64 {
    if i == 0 || i == g.nx || j == 0 || j == g.ny {
        0.5
    } else {
        1.0
    }
}

/// Cells adjacent to corner `(i, j)`.
fn corner_cells(g: &GridSpec, i: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
    let is = [i.checked_sub(1), (i < g.nx).then_some(i)];
    let js = [j.checked_sub(1), (j < g.ny).then_some(j)];
    js.into_iter()
        .flatten()
        .flat_map(move |jj| is.into_iter().flatten().map(move |ii| g.cell(ii, jj)))
}

/// Viscosity at corners: mean over the adjacent cells.
pub fn corner_viscosity(nu: &ScalarField) -> Vec<f64> {
    let g = *nu.grid();
    let v = nu.values();
    let mut out = vec![0.0; g.n_corners()];
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let (s, n) = corner_cells(&g, i, j).fold((0.0, 0usize), |(s, n), c| (s + v[c], n + 1));
            out[g.corner(i, j)] = s / n as f64;
        }
    }
    out
}

/// `div(2 ν D(v))` with cell viscosity `nu`.
pub fn viscous_force(nu: &ScalarField, v: &FaceField) -> FaceField {
    let g = *v.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (ihx, ihy) = (1.0 / g.hx(), 1.0 / g.hy());
    let d = strain(v);
    let nv = nu.values();
    let nc = corner_viscosity(nu);
    let sxx: Vec<f64> = d.dxx.iter().zip(nv).map(|(a, n)| 2.0 * n * a).collect();
    let syy: Vec<f64> = d.dyy.iter().zip(nv).map(|(a, n)| 2.0 * n * a).collect();
    let sxy: Vec<f64> = d.dxy.iter().zip(&nc).map(|(a, n)| 2.0 * n * a).collect();
    let mut out = FaceField::zeros(g);
    {
        let ox = out.x_mut();
        for j in 0..ny {
            for i in 1..nx {
                ox[g.xface(i, j)] = (sxx[g.cell(i, j)] - sxx[g.cell(i - 1, j)]) * ihx
                    + (sxy[g.corner(i, j + 1)] - sxy[g.corner(i, j)]) * ihy;
            }
        }
    }
    {
        let oy = out.y_mut();
        for j in 1..ny {
            for i in 0..nx {
                oy[g.yface(i, j)] = (sxy[g.corner(i + 1, j)] - sxy[g.corner(i, j)]) * ihx
                    + (syy[g.cell(i, j)] - syy[g.cell(i, j - 1)]) * ihy;
            }
        }
    }
    out
}

/// Bilinear form `−⟨viscous_force(ν, v), w⟩` written through strains.
pub fn strain_pairing(nu: &ScalarField, v: &FaceField, w: &FaceField) -> f64 {
    let g = *v.grid();
    let (a, b) = (strain(v), strain(w));
    let nv = nu.values();
    let nc = corner_viscosity(nu);
    let mut cells = 0.0;
    for c in 0..g.n_cells() {
        cells += 2.0 * nv[c] * (a.dxx[c] * b.dxx[c] + a.dyy[c] * b.dyy[c]);
    }
    let mut corners = 0.0;
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let k = g.corner(i, j);
            corners += corner_weight(&g, i, j) * 4.0 * nc[k] * a.dxy[k] * b.dxy[k];
        }
    }
    (cells + corners) * g.cell_volume()
}

/// Viscous dissipation rate `2 ∫ ν |D v|²`.
pub fn dissipation(nu: &ScalarField, v: &FaceField) -> f64 {
    strain_pairing(nu, v, v)
}

/// Transpose of `ψ ↦ viscous_force(dnu·ψ, v)` applied to `z`.
pub fn viscous_force_phi_transpose(dnu: &ScalarField, v: &FaceField, z: &FaceField) -> ScalarField {
    let g = *v.grid();
    let (a, b) = (strain(v), strain(z));
    let mut acc: Vec<f64> = (0..g.n_cells())
        .map(|c| 2.0 * (a.dxx[c] * b.dxx[c] + a.dyy[c] * b.dyy[c]))
        .collect();
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let k = g.corner(i, j);
            let q = corner_weight(&g, i, j) * 4.0 * a.dxy[k] * b.dxy[k];
            if q == 0.0 {
                continue;
            }
            let cells: Vec<usize> = corner_cells(&g, i, j).collect();
            let share = q / cells.len() as f64;
            for c in cells {
                acc[c] += share;
            }
        }
    }
    let out = acc
        .iter()
        .zip(dnu.values())
        .map(|(s, d)| -d * s)
        .collect();
    ScalarField::from_values(g, out).expect("sized by grid")
}

/// Which argument of `momentum_advection(a, b)` is being transposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvectionSlot {
    /// The transporting velocity `a`.
    Transport,
    /// The transported velocity `b`.
    Transported,
}

struct Fluxes {
    fxx: Vec<f64>,
    fyy: Vec<f64>,
    fyx: Vec<f64>,
    fxy: Vec<f64>,
}

fn fluxes(a: &FaceField, b: &FaceField) -> Fluxes {
    let g = *a.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (ax, ay, bx, by) = (a.x(), a.y(), b.x(), b.y());
    let mut fxx = vec![0.0; g.n_cells()];
    let mut fyy = vec![0.0; g.n_cells()];
    for j in 0..ny {
        for i in 0..nx {
            let (w, e) = (g.xface(i, j), g.xface(i + 1, j));
            let (s, n) = (g.yface(i, j), g.yface(i, j + 1));
            fxx[g.cell(i, j)] = 0.25 * (ax[w] + ax[e]) * (bx[w] + bx[e]);
            fyy[g.cell(i, j)] = 0.25 * (ay[s] + ay[n]) * (by[s] + by[n]);
        }
    }
    let mut fyx = vec![0.0; g.n_corners()];
    let mut fxy = vec![0.0; g.n_corners()];
    for j in 1..ny {
        for i in 1..nx {
            let k = g.corner(i, j);
            fyx[k] = 0.25
                * (ay[g.yface(i - 1, j)] + ay[g.yface(i, j)])
                * (bx[g.xface(i, j - 1)] + bx[g.xface(i, j)]);
            fxy[k] = 0.25
                * (ax[g.xface(i, j - 1)] + ax[g.xface(i, j)])
                * (by[g.yface(i - 1, j)] + by[g.yface(i, j)]);
        }
    }
    Fluxes { fxx, fyy, fyx, fxy }
}

/// Conservative momentum transport `div(b ⊗ a)`: the flux of `b`
/// carried by `a`.
pub fn momentum_advection(a: &FaceField, b: &FaceField) -> FaceField {
    let g = *a.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (ihx, ihy) = (1.0 / g.hx(), 1.0 / g.hy());
    let f = fluxes(a, b);
    let mut out = FaceField::zeros(g);
    {
        let ox = out.x_mut();
        for j in 0..ny {
            for i in 1..nx {
                ox[g.xface(i, j)] = (f.fxx[g.cell(i, j)] - f.fxx[g.cell(i - 1, j)]) * ihx
                    + (f.fyx[g.corner(i, j + 1)] - f.fyx[g.corner(i, j)]) * ihy;
            }
        }
    }
    {
        let oy = out.y_mut();
        for j in 1..ny {
            for i in 0..nx {
                oy[g.yface(i, j)] = (f.fxy[g.corner(i + 1, j)] - f.fxy[g.corner(i, j)]) * ihx
                    + (f.fyy[g.cell(i, j)] - f.fyy[g.cell(i, j - 1)]) * ihy;
            }
        }
    }
    out
}

/// Transpose of the linear map obtained by freezing one argument of
/// [`momentum_advection`] to `other`, applied to `z`. The result lives on
/// interior faces.
pub fn momentum_advection_transpose(slot: AdvectionSlot, other: &FaceField, z: &FaceField) -> FaceField {
    let g = *z.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (ihx, ihy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut zz = z.clone();
    zz.zero_boundary();
    let (zx, zy) = (zz.x(), zz.y());
    let (ox, oy) = (other.x(), other.y());
    let mut out = FaceField::zeros(g);
    let (mut rx, mut ry) = (vec![0.0; g.n_xfaces()], vec![0.0; g.n_yfaces()]);
    // ⟨B(a, b), z⟩ = −Σ flux · (difference of z), each flux a product of
    // two face averages.
    for j in 0..ny {
        for i in 0..nx {
            let (w, e) = (g.xface(i, j), g.xface(i + 1, j));
            let (s, n) = (g.yface(i, j), g.yface(i, j + 1));
            let gxx = (zx[e] - zx[w]) * ihx;
            let gyy = (zy[n] - zy[s]) * ihy;
            let cx = -0.25 * (ox[w] + ox[e]) * gxx;
            rx[w] += cx;
            rx[e] += cx;
            let cy = -0.25 * (oy[s] + oy[n]) * gyy;
            ry[s] += cy;
            ry[n] += cy;
        }
    }
    for j in 1..ny {
        for i in 1..nx {
            let gyx = (zx[g.xface(i, j)] - zx[g.xface(i, j - 1)]) * ihy;
            let gxy = (zy[g.yface(i, j)] - zy[g.yface(i - 1, j)]) * ihx;
            let (ay0, ay1) = (g.yface(i - 1, j), g.yface(i, j));
            let (bx0, bx1) = (g.xface(i, j - 1), g.xface(i, j));
            match slot {
                AdvectionSlot::Transport => {
                    // fyx = avg(a.y) avg(b.x); fxy = avg(a.x) avg(b.y)
                    let c = -0.25 * (ox[bx0] + ox[bx1]) * gyx;
                    ry[ay0] += c;
                    ry[ay1] += c;
                    let c = -0.25 * (oy[ay0] + oy[ay1]) * gxy;
                    rx[bx0] += c;
                    rx[bx1] += c;
                }
                AdvectionSlot::Transported => {
                    let c = -0.25 * (oy[ay0] + oy[ay1]) * gyx;
                    rx[bx0] += c;
                    rx[bx1] += c;
                    let c = -0.25 * (ox[bx0] + ox[bx1]) * gxy;
                    ry[ay0] += c;
                    ry[ay1] += c;
                }
            }
        }
    }
    out.x_mut().copy_from_slice(&rx);
    out.y_mut().copy_from_slice(&ry);
    out.zero_boundary();
    out
}

/// Capillary force `μ ∇φ` on faces.
pub fn korteweg_force(mu: &ScalarField, phi: &ScalarField) -> FaceField {
    face_average(mu).zip_map(&gradient_to_faces(phi), |m, d| m * d)
}
