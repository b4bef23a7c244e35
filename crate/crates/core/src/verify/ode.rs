//! Dormand–Prince 5(4) for linear 2x2 systems `Φ' = M(z) Φ` along complex paths.

use thiserror::Error;

use crate::expr::{ExprError, Path, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size collapsed near z = {at}")]
    StepCollapse { at: C64 },
    #[error("step budget exhausted near z = {at}")]
    TooManySteps { at: C64 },
    #[error(transparent)]
    Eval(#[from] ExprError),
}

pub type State = [C64; 2];
pub type Mat = [[C64; 2]; 2];

const MAX_STEPS: usize = 200_000;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Accepted steps of a solution, with the indices of the path waypoints.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub points: Vec<C64>,
    pub states: Vec<State>,
    pub waypoints: Vec<usize>,
}

impl Trace {
    pub fn at_waypoints(&self) -> Vec<State> {
        self.waypoints.iter().map(|&i| self.states[i]).collect()
    }

    pub fn last(&self) -> State {
        *self.states.last().expect("trace is never empty")
    }
}

fn apply(m: &Mat, y: &State, scale: C64) -> State {
    [
        scale * (m[0][0] * y[0] + m[0][1] * y[1]),
        scale * (m[1][0] * y[0] + m[1][1] * y[1]),
    ]
}

fn norm(y: &State) -> f64 {
    y[0].norm().max(y[1].norm())
}

/// Solves `Φ' = M(z) Φ` along `path` starting from `init`; `tol` bounds the
/// local error relative to `1 + |Φ|`.
pub fn solve_along(
    mut m: impl FnMut(C64) -> Result<Mat, ExprError>,
    path: &Path,
    init: State,
    tol: f64,
) -> Result<Trace, OdeError> {
    let mut trace = Trace {
        points: vec![path.start()],
        states: vec![init],
        waypoints: vec![0],
    };
    let mut y = init;
    let mut steps = 0usize;
    let mut h = 0.05_f64;
    for w in path.points().windows(2) {
        let (za, zb) = (w[0], w[1]);
        let dz = zb - za;
        let mut f = |s: f64, y: &State| -> Result<State, ExprError> { Ok(apply(&m(za + dz * s)?, y, dz)) };
        let mut s = 0.0_f64;
        let mut k0 = f(0.0, &y)?;
        while s < 1.0 {
            if steps >= MAX_STEPS {
                return Err(OdeError::TooManySteps { at: za + dz * s });
            }
            steps += 1;
            let last = s + h >= 1.0;
            let step = if last { 1.0 - s } else { h };
            let mut k = [[C64::new(0.0, 0.0); 2]; 7];
            k[0] = k0;
            for i in 1..7 {
                let mut yi = y;
                for (j, kj) in k.iter().enumerate().take(i) {
                    let a = A[i][j] * step;
                    if a != 0.0 {
                        yi[0] += kj[0] * a;
                        yi[1] += kj[1] * a;
                    }
                }
                k[i] = f(s + C[i] * step, &yi)?;
            }
            let mut y_new = y;
            let mut err = [C64::new(0.0, 0.0); 2];
            for (i, ki) in k.iter().enumerate() {
                for c in 0..2 {
                    if i < 6 {
                        y_new[c] += ki[c] * (A[6][i] * step);
                    }
                    err[c] += ki[c] * (E[i] * step);
                }
            }
            let scale = tol * (1.0 + norm(&y).max(norm(&y_new)));
            let ratio = norm(&err) / scale;
            if ratio <= 1.0 {
                s = if last { 1.0 } else { s + step };
                y = y_new;
                k0 = k[6];
                trace.points.push(za + dz * s);
                trace.states.push(y);
            }
            let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
            if ratio <= 1.0 && last {
                h = h.max(step * factor).min(0.5);
            } else {
                h = (step * factor).min(0.5);
            }
            if h < 1e-14 {
                return Err(OdeError::StepCollapse { at: za + dz * s });
            }
        }
        trace.waypoints.push(trace.states.len() - 1);
    }
    Ok(trace)
}
