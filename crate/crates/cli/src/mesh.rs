//! Mesh export (CSV, OBJ) and mesh-mode verification.
//!
//! The CSV layout is row-major `u`-then-`v` with header `u,v,t,x1,x2,x3,x4`
//! and 17-significant-digit floats; `x4` stays empty for `c = 0`. Mesh-mode
//! verification rebuilds second-order jets at interior nodes with 4th-order
//! stencils over the grid spacing itself, so its tolerances are
//! grid-resolution bound rather than analytic.

use std::path::Path;

use anyhow::{bail, Context, Result};

use rwsurf_core::ambient::{AmbientPoint, AmbientVector, WarpingFunction};
use rwsurf_core::space_forms::{FiberPoint, SpaceForm, Vec4};
use rwsurf_core::surface::{
    adapted_frame, forms_from_jet, relative_nullity_dim, SurfaceJet2,
};
use rwsurf_core::verify::CheckReport;

/// Default residual / rank tolerance of mesh-mode checks (limited by the
/// grid spacing, not by the analytic stencils).
pub const MESH_PRN_TOL: f64 = 1e-3;
pub const MESH_RANK_TOL: f64 = 1e-3;

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Row-major sampled mesh.
pub struct MeshGrid {
    pub us: Vec<f64>,
    pub vs: Vec<f64>,
    pub form: SpaceForm,
    /// `points[i * vs.len() + j]` at `(us[i], vs[j])`.
    pub points: Vec<AmbientPoint>,
}

impl MeshGrid {
    pub fn point(&self, i: usize, j: usize) -> &AmbientPoint {
        &self.points[i * self.vs.len() + j]
    }
}

/// Writes the CSV mesh; rows ordered `u` outer, `v` inner.
pub fn write_csv(path: &Path, grid: &MeshGrid) -> Result<()> {
    let mut out = String::with_capacity(grid.points.len() * 96);
    out.push_str("u,v,t,x1,x2,x3,x4\n");
    for (i, &u) in grid.us.iter().enumerate() {
        for (j, &v) in grid.vs.iter().enumerate() {
            let p = grid.point(i, j);
            let c = p.fiber.coords;
            let x4 = if grid.form == SpaceForm::Euclidean {
                String::new()
            } else {
                fmt(c[3])
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt(u),
                fmt(v),
                fmt(p.t),
                fmt(c[0]),
                fmt(c[1]),
                fmt(c[2]),
                x4
            ));
        }
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes an OBJ mesh with quad faces split into triangles.
///
/// Vertices are the fiber coordinates for `c = 0` (with `t` recorded after a
/// trailing `#`); for `c = ±1` a fixed orthographic 3D projection is used
/// and recorded in the header.
pub fn write_obj(path: &Path, grid: &MeshGrid) -> Result<()> {
    let mut out = String::new();
    out.push_str("# rwsurf surface mesh\n");
    match grid.form {
        SpaceForm::Euclidean => {
            out.push_str("# vertices: fiber coordinates (x1, x2, x3); t after '#'\n")
        }
        SpaceForm::Sphere => {
            out.push_str("# vertices: orthographic projection dropping x4\n")
        }
        SpaceForm::Hyperbolic => {
            out.push_str("# vertices: orthographic projection dropping x1 (embedding time axis)\n")
        }
    }
    for i in 0..grid.us.len() {
        for j in 0..grid.vs.len() {
            let p = grid.point(i, j);
            let c = p.fiber.coords;
            match grid.form {
                SpaceForm::Euclidean => {
                    out.push_str(&format!("v {} {} {} # t={}\n", c[0], c[1], c[2], p.t))
                }
                SpaceForm::Sphere => out.push_str(&format!("v {} {} {}\n", c[0], c[1], c[2])),
                SpaceForm::Hyperbolic => out.push_str(&format!("v {} {} {}\n", c[1], c[2], c[3])),
            }
        }
    }
    let nv = grid.vs.len();
    for i in 0..grid.us.len() - 1 {
        for j in 0..nv - 1 {
            let a = i * nv + j + 1;
            let b = i * nv + j + 2;
            let c = (i + 1) * nv + j + 1;
            let d = (i + 1) * nv + j + 2;
            out.push_str(&format!("f {a} {b} {d}\n"));
            out.push_str(&format!("f {a} {d} {c}\n"));
        }
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Reads a mesh CSV produced by `construct`.
pub fn read_csv(path: &Path, form: SpaceForm) -> Result<MeshGrid> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read mesh {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty mesh file")?;
    if header.trim() != "u,v,t,x1,x2,x3,x4" {
        bail!("unexpected mesh header: {header}");
    }
    let mut rows: Vec<(f64, f64, AmbientPoint)> = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            bail!("row {} has {} cells, expected 7", n + 2, cells.len());
        }
        let num = |k: usize| -> Result<f64> {
            cells[k]
                .trim()
                .parse::<f64>()
                .with_context(|| format!("bad number in row {} column {}", n + 2, k + 1))
        };
        let x4 = if cells[6].trim().is_empty() {
            0.0
        } else {
            num(6)?
        };
        let coords = Vec4::new(num(3)?, num(4)?, num(5)?, x4);
        let coords = form.project_to_model(coords)?;
        rows.push((
            num(0)?,
            num(1)?,
            AmbientPoint {
                t: num(2)?,
                fiber: FiberPoint { form, coords },
            },
        ));
    }
    let mut us: Vec<f64> = Vec::new();
    let mut vs: Vec<f64> = Vec::new();
    for (u, v, _) in &rows {
        if !us.iter().any(|x| (x - u).abs() < 1e-12) {
            us.push(*u);
        }
        if !vs.iter().any(|x| (x - v).abs() < 1e-12) {
            vs.push(*v);
        }
    }
    us.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if rows.len() != us.len() * vs.len() {
        bail!(
            "mesh is not a full grid: {} rows for {}x{} parameters",
            rows.len(),
            us.len(),
            vs.len()
        );
    }
    let mut points = vec![rows[0].2; rows.len()];
    for (u, v, p) in rows {
        let i = us.iter().position(|x| (x - u).abs() < 1e-12).unwrap();
        let j = vs.iter().position(|x| (x - v).abs() < 1e-12).unwrap();
        points[i * vs.len() + j] = p;
    }
    Ok(MeshGrid {
        us,
        vs,
        form,
        points,
    })
}

fn uniform_spacing(xs: &[f64]) -> Result<f64> {
    if xs.len() < 5 {
        bail!("mesh needs at least 5 nodes per direction for stencils");
    }
    let h = xs[1] - xs[0];
    for w in xs.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0) {
            bail!("mesh nodes are not uniformly spaced");
        }
    }
    Ok(h)
}

/// Second-order jet at an interior node from 4th-order mesh stencils.
pub fn mesh_jet(grid: &MeshGrid, i: usize, j: usize) -> Result<SurfaceJet2> {
    let hu = uniform_spacing(&grid.us)?;
    let hv = uniform_spacing(&grid.vs)?;
    if i < 2 || j < 2 || i + 2 >= grid.us.len() || j + 2 >= grid.vs.len() {
        bail!("node ({i}, {j}) is not interior to the mesh");
    }
    let coords = |p: &AmbientPoint| -> [f64; 5] {
        [p.t, p.fiber.coords[0], p.fiber.coords[1], p.fiber.coords[2], p.fiber.coords[3]]
    };
    let at = |di: isize, dj: isize| -> [f64; 5] {
        coords(grid.point((i as isize + di) as usize, (j as isize + dj) as usize))
    };
    let combine = |weights: &[(isize, f64)], along_u: bool, scale: f64| -> AmbientVector {
        let mut acc = [0.0; 5];
        for (o, w) in weights {
            let c = if along_u { at(*o, 0) } else { at(0, *o) };
            for (a, x) in acc.iter_mut().zip(c.iter()) {
                *a += w * x;
            }
        }
        AmbientVector::from_coords(acc) * scale
    };
    let d1w: [(isize, f64); 4] = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
    let d2w: [(isize, f64); 5] = [(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)];

    let du = combine(&d1w, true, 1.0 / (12.0 * hu));
    let dv = combine(&d1w, false, 1.0 / (12.0 * hv));
    let duu = combine(&d2w, true, 1.0 / (12.0 * hu * hu));
    let dvv = combine(&d2w, false, 1.0 / (12.0 * hv * hv));
    // Mixed derivative: tensor product of the two first-derivative stencils.
    let mut acc = [0.0; 5];
    for (oi, wi) in d1w {
        for (oj, wj) in d1w {
            let c = at(oi, oj);
            for (a, x) in acc.iter_mut().zip(c.iter()) {
                *a += wi * wj * x;
            }
        }
    }
    let duv = AmbientVector::from_coords(acc) * (1.0 / (144.0 * hu * hv));

    let p = *grid.point(i, j);
    let project = |w: AmbientVector| {
        AmbientVector::new(
            w.t0,
            rwsurf_core::space_forms::fiber_tangent_project(&p.fiber, w.bar),
        )
    };
    Ok(SurfaceJet2 {
        u: grid.us[i],
        v: grid.vs[j],
        point: p,
        du: project(du),
        dv: project(dv),
        duu,
        duv,
        dvv,
    })
}

/// PRN check over the interior mesh nodes (Hessian-route second fundamental
/// form, grid-resolution tolerances). Returns the report and the nullity
/// classification per interior node.
pub fn mesh_prn_check(
    warp: &WarpingFunction,
    grid: &MeshGrid,
    tol: f64,
) -> Result<(CheckReport, Vec<(usize, usize, usize)>)> {
    let mut report = CheckReport {
        name: "prn-mesh".into(),
        grid: (grid.us.len(), grid.vs.len()),
        points_total: 0,
        points_skipped: 0,
        max_residual: 0.0,
        argmax: None,
        tolerance: tol,
        pass: false,
        extras: Default::default(),
        notes: vec!["mesh mode: grid-spacing stencils".into()],
    };
    let mut dims: Vec<(usize, usize, usize)> = Vec::new();
    let mut hist = [0usize; 3];
    for i in 2..grid.us.len().saturating_sub(2) {
        for j in 2..grid.vs.len().saturating_sub(2) {
            report.points_total += 1;
            let jet = mesh_jet(grid, i, j)?;
            let frame = match adapted_frame(warp, &jet) {
                Ok(f) => f,
                Err(e) if e.is_pointwise() => {
                    report.points_skipped += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let forms = match forms_from_jet(warp, &jet, &frame) {
                Ok(f) => f,
                Err(e) if e.is_pointwise() => {
                    report.points_skipped += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let h_norm = |a: usize, b: usize| {
                (forms.h[0][a][b].powi(2) + forms.h[1][a][b].powi(2)).sqrt()
            };
            let residual = (h_norm(0, 0) + h_norm(0, 1)) / (h_norm(1, 1) + 1e-3);
            let dim = relative_nullity_dim(&forms, MESH_RANK_TOL, 1e-10);
            hist[dim] += 1;
            dims.push((i, j, dim));
            if residual > report.max_residual {
                report.max_residual = residual;
                report.argmax = Some((grid.us[i], grid.vs[j]));
            }
        }
    }
    report.extras.insert("nullity_dim0".into(), hist[0] as f64);
    report.extras.insert("nullity_dim1".into(), hist[1] as f64);
    report.extras.insert("nullity_dim2".into(), hist[2] as f64);
    report.pass = report.max_residual <= tol;
    Ok((report, dims))
}
