//! Stencil operators between cells and faces.

use super::{poisson_neumann, FaceField, ScalarField};
use crate::error::{Error, Result};

/// Five-point Laplacian with mirror ghost cells (homogeneous Neumann).
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (ihx2, ihy2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let v = f.values();
    let mut out = vec![0.0; g.n_cells()];
    for j in 0..ny {
        for i in 0..nx {
            let c = v[g.cell(i, j)];
            let w = if i > 0 { v[g.cell(i - 1, j)] } else { c };
            let e = if i + 1 < nx { v[g.cell(i + 1, j)] } else { c };
            let s = if j > 0 { v[g.cell(i, j - 1)] } else { c };
            let n = if j + 1 < ny { v[g.cell(i, j + 1)] } else { c };
            out[g.cell(i, j)] = (e - 2.0 * c + w) * ihx2 + (n - 2.0 * c + s) * ihy2;
        }
    }
    ScalarField::from_values(g, out).expect("sized by grid")
}

/// Face differences of a cell field. Boundary faces are zero, consistent
/// with a vanishing normal derivative.
pub fn gradient_to_faces(f: &ScalarField) -> FaceField {
    let g = *f.grid();
    let (ihx, ihy) = (1.0 / g.hx(), 1.0 / g.hy());
    let v = f.values();
    let mut out = FaceField::zeros(g);
    {
        let x = out.x_mut();
        for j in 0..g.ny {
            for i in 1..g.nx {
                x[g.xface(i, j)] = (v[g.cell(i, j)] - v[g.cell(i - 1, j)]) * ihx;
            }
        }
    }
    {
        let y = out.y_mut();
        for j in 1..g.ny {
            for i in 0..g.nx {
                y[g.yface(i, j)] = (v[g.cell(i, j)] - v[g.cell(i, j - 1)]) * ihy;
            }
        }
    }
    out
}

/// Net outward flux of each cell divided by its volume.
pub fn divergence_of_faces(w: &FaceField) -> ScalarField {
    let g = *w.grid();
    let (ihx, ihy) = (1.0 / g.hx(), 1.0 / g.hy());
    let (x, y) = (w.x(), w.y());
    let mut out = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            out[g.cell(i, j)] = (x[g.xface(i + 1, j)] - x[g.xface(i, j)]) * ihx
                + (y[g.yface(i, j + 1)] - y[g.yface(i, j)]) * ihy;
        }
    }
    ScalarField::from_values(g, out).expect("sized by grid")
}

/// Transpose of [`divergence_of_faces`] under the uniform cell/face weights.
/// On interior faces this is `-gradient_to_faces`; boundary faces see a
/// zero ghost beyond the wall.
pub(crate) fn divergence_transpose(r: &ScalarField) -> FaceField {
    let g = *r.grid();
    let mut out = gradient_to_faces(r);
    out.x_mut().iter_mut().for_each(|a| *a = -*a);
    out.y_mut().iter_mut().for_each(|a| *a = -*a);
    let (ihx, ihy) = (1.0 / g.hx(), 1.0 / g.hy());
    for j in 0..g.ny {
        out.x_mut()[g.xface(0, j)] = -r.at(0, j) * ihx;
        out.x_mut()[g.xface(g.nx, j)] = r.at(g.nx - 1, j) * ihx;
    }
    for i in 0..g.nx {
        out.y_mut()[g.yface(i, 0)] = -r.at(i, 0) * ihy;
        out.y_mut()[g.yface(i, g.ny)] = r.at(i, g.ny - 1) * ihy;
    }
    out
}

/// Arithmetic two-cell average onto faces; boundary faces take the value of
/// the adjacent cell (mirror ghost).
pub fn face_average(f: &ScalarField) -> FaceField {
    let g = *f.grid();
    let v = f.values();
    let mut out = FaceField::zeros(g);
    {
        let x = out.x_mut();
        for j in 0..g.ny {
            x[g.xface(0, j)] = v[g.cell(0, j)];
            x[g.xface(g.nx, j)] = v[g.cell(g.nx - 1, j)];
            for i in 1..g.nx {
                x[g.xface(i, j)] = 0.5 * (v[g.cell(i, j)] + v[g.cell(i - 1, j)]);
            }
        }
    }
    {
        let y = out.y_mut();
        for i in 0..g.nx {
            y[g.yface(i, 0)] = v[g.cell(i, 0)];
            y[g.yface(i, g.ny)] = v[g.cell(i, g.ny - 1)];
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                y[g.yface(i, j)] = 0.5 * (v[g.cell(i, j)] + v[g.cell(i, j - 1)]);
            }
        }
    }
    out
}

/// Transpose of [`face_average`].
pub fn face_average_transpose(q: &FaceField) -> ScalarField {
    let g = *q.grid();
    let mut out = vec![0.0; g.n_cells()];
    let (x, y) = (q.x(), q.y());
    for j in 0..g.ny {
        out[g.cell(0, j)] += x[g.xface(0, j)];
        out[g.cell(g.nx - 1, j)] += x[g.xface(g.nx, j)];
        for i in 1..g.nx {
            let h = 0.5 * x[g.xface(i, j)];
            out[g.cell(i, j)] += h;
            out[g.cell(i - 1, j)] += h;
        }
    }
    for i in 0..g.nx {
        out[g.cell(i, 0)] += y[g.yface(i, 0)];
        out[g.cell(i, g.ny - 1)] += y[g.yface(i, g.ny)];
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let h = 0.5 * y[g.yface(i, j)];
            out[g.cell(i, j)] += h;
            out[g.cell(i, j - 1)] += h;
        }
    }
    ScalarField::from_values(g, out).expect("sized by grid")
}

/// Cell-centered value of `a·b` for two face fields: each component's
/// product is averaged over the two faces bounding the cell.
pub fn face_dot_to_cells(a: &FaceField, b: &FaceField) -> ScalarField {
    let g = *a.grid();
    let mut out = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (w, e) = (g.xface(i, j), g.xface(i + 1, j));
            let (s, n) = (g.yface(i, j), g.yface(i, j + 1));
            out[g.cell(i, j)] = 0.5 * (a.x()[w] * b.x()[w] + a.x()[e] * b.x()[e])
                + 0.5 * (a.y()[s] * b.y()[s] + a.y()[n] * b.y()[n]);
        }
    }
    ScalarField::from_values(g, out).expect("sized by grid")
}

/// Conservative transport `div(v f)` with centered face interpolation of `f`.
pub fn advect_scalar(v: &FaceField, f: &ScalarField) -> ScalarField {
    let flux = v.zip_map(&face_average(f), |a, b| a * b);
    divergence_of_faces(&flux)
}

/// Transpose of `f ↦ advect_scalar(v, f)` applied to `r`.
pub fn advect_scalar_transpose_field(v: &FaceField, r: &ScalarField) -> ScalarField {
    let dt_r = divergence_transpose(r);
    face_average_transpose(&v.zip_map(&dt_r, |a, b| a * b))
}

/// Transpose of `v ↦ advect_scalar(v, f)` applied to `r`.
pub fn advect_scalar_transpose_velocity(f: &ScalarField, r: &ScalarField) -> FaceField {
    face_average(f).zip_map(&divergence_transpose(r), |a, b| a * b)
}

/// Potential `π` (zero mean) such that `v − ∇π` is discretely
/// divergence-free. Requires zero normal boundary components.
pub fn projection_pressure(v: &FaceField) -> Result<ScalarField> {
    let scale = v.max_abs().max(1.0);
    let bmax = v.boundary_max();
    if bmax > 1e-12 * scale {
        return Err(Error::BoundaryFlux(bmax));
    }
    if !v.is_finite() {
        return Err(Error::NonFinite("projection input"));
    }
    let mut div = divergence_of_faces(v);
    // Exactly zero-mean for no-slip fields; strip the roundoff.
    div.remove_mean();
    let rhs = div.scaled(-1.0);
    poisson_neumann(&rhs)
}

/// Pressure projection: returns `(v − dt ∇p, p)` with the result discretely
/// divergence-free and `p` zero-mean.
pub fn project_divergence_free(v: &FaceField, dt: f64) -> Result<(FaceField, ScalarField)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("projection step must be positive, got {dt}")));
    }
    let pi = projection_pressure(v)?;
    let mut out = v.clone();
    out.axpy(-1.0, &gradient_to_faces(&pi));
    Ok((out, pi.scaled(1.0 / dt)))
}
