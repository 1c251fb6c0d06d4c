//! Approximately optimal trajectories recovered from a value field by greedy
//! one-step Bellman descent.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use thiserror::Error;

use crate::field::ValueField;
use crate::mesh::Point;
use crate::minimize::golden_section;
use crate::model::{Direction, SpeedCostModel};

const N_DIRECTIONS: usize = 64;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("descent stalled at ({x}, {y}): no direction lowers the value")]
    Stalled { x: f64, y: f64 },
    #[error("no exit after {0} steps")]
    MaxIterations(usize),
    #[error("start point ({x}, {y}) is outside the domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("step {0} must be positive and finite")]
    InvalidStep(f64),
}

/// Time-stamped polyline from the start point to its exit on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Point>,
    pub times: Vec<f64>,
    /// Running cost accumulated up to each point.
    pub cumulative_cost: Vec<f64>,
    pub running_cost: f64,
    pub terminal_cost: f64,
    pub total_cost: f64,
}

impl Trajectory {
    pub fn exit_point(&self) -> Point {
        *self.points.last().expect("trajectory has a start point")
    }

    /// CSV rows `t,x,y,cumulative_cost`. The last row includes the terminal
    /// cost, so it equals the total cost.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y,cumulative_cost\n");
        let last = self.points.len() - 1;
        for (i, (p, (&t, &c))) in self.points.iter().zip(self.times.iter().zip(&self.cumulative_cost)).enumerate() {
            let c = if i == last { c + self.terminal_cost } else { c };
            writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", t, p.x, p.y, c).expect("string write");
        }
        s
    }
}

/// Follows the field downhill from `x0`. Each step picks the direction `a`
/// minimising `step l(y, a) / f(y, a) + U(y + step a)` over 64 sampled
/// angles plus golden-section refinement, and moves `step` along it. Once
/// `y` is closer than `step` to the boundary, it is snapped to the nearest
/// boundary point and `q` is charged there.
pub fn extract_trajectory(
    field: &ValueField,
    model: &SpeedCostModel,
    x0: Point,
    step: f64,
) -> Result<Trajectory, TrajectoryError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(TrajectoryError::InvalidStep(step));
    }
    let mesh = field.mesh();
    let here = |p: Point| field.interpolate(p).map_err(|_| TrajectoryError::OutsideDomain { x: p.x, y: p.y });
    here(x0)?;
    let (lo, hi) = mesh.bounding_box();
    let max_steps = (10.0 * lo.dist(hi) / step).ceil() as usize;

    let mut y = x0;
    let mut t = 0.0;
    let mut running = 0.0;
    let mut points = vec![y];
    let mut times = vec![0.0];
    let mut cumulative = vec![0.0];

    let mut steps = 0;
    while mesh.distance_to_boundary(y) >= step {
        if steps >= max_steps {
            return Err(TrajectoryError::MaxIterations(steps));
        }
        steps += 1;
        let u_here = here(y)?;
        let probe_value = |theta: f64| field.interpolate(y + Direction::from_angle(theta).as_point() * step).ok();
        let objective = |theta: f64| {
            let a = Direction::from_angle(theta);
            match probe_value(theta) {
                Some(u) => step * model.cost_per_length(y, a) + u,
                None => f64::INFINITY,
            }
        };
        let dtheta = TAU / N_DIRECTIONS as f64;
        let mut best = (0.0, objective(0.0));
        let mut descent = probe_value(0.0).map_or(f64::INFINITY, |u| u - u_here);
        for k in 1..N_DIRECTIONS {
            let theta = k as f64 * dtheta;
            let g = objective(theta);
            if g < best.1 {
                best = (theta, g);
            }
            if let Some(u) = probe_value(theta) {
                descent = descent.min(u - u_here);
            }
        }
        if !(descent < -1e-12) || !best.1.is_finite() {
            return Err(TrajectoryError::Stalled { x: y.x, y: y.y });
        }
        let (theta, g) = golden_section(objective, best.0 - dtheta, best.0 + dtheta, 1e-10);
        if g < best.1 {
            best = (theta, g);
        }
        let a = Direction::from_angle(best.0);
        t += step / model.speed(y, a);
        running += step * model.cost_per_length(y, a);
        y = y + a.as_point() * step;
        points.push(y);
        times.push(t);
        cumulative.push(running);
    }

    let (exit, gap) = mesh.nearest_boundary_point(y);
    if gap > 0.0 {
        let a = Direction::new(exit - y).expect("non-zero gap");
        t += gap / model.speed(y, a);
        running += gap * model.cost_per_length(y, a);
        points.push(exit);
        times.push(t);
        cumulative.push(running);
    }
    let terminal = model.terminal_cost(exit);
    Ok(Trajectory {
        points,
        times,
        cumulative_cost: cumulative,
        running_cost: running,
        terminal_cost: terminal,
        total_cost: running + terminal,
    })
}

/// Re-integrates the running cost along the polyline with the trapezoid rule
/// in time (direction of each segment held fixed) and adds `q` at the end.
pub fn evaluate_cost(traj: &Trajectory, model: &SpeedCostModel) -> f64 {
    let mut j = 0.0;
    for (w, dt) in traj.points.windows(2).zip(traj.times.windows(2).map(|t| t[1] - t[0])) {
        let Some(a) = Direction::new(w[1] - w[0]) else { continue };
        j += 0.5 * dt * (model.running_cost(w[0], a) + model.running_cost(w[1], a));
    }
    j + model.terminal_cost(traj.exit_point())
}
