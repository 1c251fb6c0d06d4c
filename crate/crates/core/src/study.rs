//! Mesh-refinement studies on the unit square.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::field::ValueField;
use crate::mesh::{structured_grid_mesh, MeshError, TriMesh};
use crate::model::SpeedCostModel;
use crate::solver::{solve, SolveError, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub max_error: f64,
    pub mean_error: f64,
    /// Previous row's `max_error` over this row's; `NaN` on the first row.
    pub ratio_vs_previous: f64,
}

/// What the discrete solutions are compared against.
pub enum Reference<'a> {
    /// Closed-form value at every point.
    Exact(&'a (dyn Fn(&TriMesh, crate::mesh::Point) -> f64 + Sync)),
    /// Interpolation of a solve on an `n x n` grid.
    FineGrid(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("a convergence study needs at least two grid sizes")]
    TooFewSizes,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

/// Value of the constant isotropic exit problem: `(l / f) d(x) + q`.
pub fn isotropic_exact(model: &SpeedCostModel) -> impl Fn(&TriMesh, crate::mesh::Point) -> f64 + Sync {
    let b = model.bounds();
    let (slope, q) = (b.l_max / b.f_min, b.q_min);
    move |mesh: &TriMesh, p| slope * mesh.distance_to_boundary(p) + q
}

/// Solves on `n x n` grids of the unit square (concurrently) and tabulates
/// the vertex-wise error against `reference`, coarsest grid first.
pub fn convergence_study(
    sizes: &[usize],
    model: &SpeedCostModel,
    opts: &SolveOptions,
    reference: Reference<'_>,
) -> Result<Vec<ConvergenceRow>, StudyError> {
    if sizes.len() < 2 {
        return Err(StudyError::TooFewSizes);
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(StudyError::TooFewSizes);
    }

    let fine = match reference {
        Reference::FineGrid(n) => {
            let mesh = Arc::new(structured_grid_mesh(n, n, (0.0, 1.0), (0.0, 1.0))?);
            Some(solve(&mesh, model, opts)?)
        }
        Reference::Exact(_) => None,
    };

    let fields: Vec<Result<ValueField, StudyError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sizes
            .iter()
            .map(|&n| {
                scope.spawn(move || -> Result<ValueField, StudyError> {
                    let mesh = Arc::new(structured_grid_mesh(n, n, (0.0, 1.0), (0.0, 1.0))?);
                    Ok(solve(&mesh, model, opts)?)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(sizes.len());
    for (&n, field) in sizes.iter().zip(fields) {
        let field = field?;
        let mesh = field.mesh().clone();
        let mut max_error: f64 = 0.0;
        let mut sum = 0.0;
        for (v, &u) in field.values().iter().enumerate() {
            let p = mesh.vertex(v);
            let truth = match (&reference, &fine) {
                (Reference::Exact(g), _) => g(&mesh, p),
                (_, Some(fine)) => fine.interpolate(p)?,
                _ => unreachable!(),
            };
            let e = (u - truth).abs();
            max_error = max_error.max(e);
            sum += e;
        }
        let ratio = rows.last().map_or(f64::NAN, |prev| prev.max_error / max_error);
        rows.push(ConvergenceRow {
            n,
            h: mesh.h(),
            max_error,
            mean_error: sum / field.values().len() as f64,
            ratio_vs_previous: ratio,
        });
    }
    Ok(rows)
}

/// `h,max_error,mean_error,ratio_vs_previous` rows.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("h,max_error,mean_error,ratio_vs_previous\n");
    for r in rows {
        writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", r.h, r.max_error, r.mean_error, r.ratio_vs_previous)
            .expect("string write");
    }
    s
}
