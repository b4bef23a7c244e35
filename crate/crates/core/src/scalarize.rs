//! Zero-curvature check and reduction of a Lax pair to a scalar pair
//!
//! ```text
//! φ'' + p1 φ' + q1 φ = 0,      φ' = p2 ∂φ/∂t + q2 φ
//! ```
//!
//! for one component φ of Φ.

use rayon::prelude::*;
use thiserror::Error;

use crate::catalog::{Component, LaxPair, Matrix2};
use crate::expr::{numerically_zero, Binding, Expr, ExprError, Path, Var, C64};
use crate::verify::ode::{solve_along, OdeError, State};

#[derive(Debug, Error)]
pub enum ScalarizeError {
    #[error("off-diagonal entry {0} vanishes identically on the probe box")]
    VanishingOffDiagonal(&'static str),
    #[error(transparent)]
    Eval(#[from] ExprError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Clone, Debug)]
pub struct ScalarPair {
    pub p1: Expr,
    pub q1: Expr,
    pub p2: Expr,
    pub q2: Expr,
    pub component: Component,
    /// Off-diagonal entries of A and B the pair was built from.
    pub off_a: Option<Expr>,
    pub off_b: Option<Expr>,
    /// Diagonal entries of A and B in the selected component's row.
    pub diag_a: Option<Expr>,
    pub diag_b: Option<Expr>,
}

impl ScalarPair {
    /// A pair given directly rather than derived from matrices.
    pub fn direct(p1: Expr, q1: Expr, p2: Expr, q2: Expr) -> Self {
        ScalarPair {
            p1,
            q1,
            p2,
            q2,
            component: Component::First,
            off_a: None,
            off_b: None,
            diag_a: None,
            diag_b: None,
        }
    }
}

/// `∂A/∂t − ∂B/∂x + AB − BA` as a matrix of expressions.
pub fn zero_curvature(lp: &LaxPair) -> Matrix2 {
    lp.a
        .diff(Var::T)
        .sub(&lp.b.diff(Var::X))
        .add(&lp.a.matmul(&lp.b))
        .sub(&lp.b.matmul(&lp.a))
}

fn max_entry(m: &Matrix2, b: &Binding) -> Result<f64, ExprError> {
    let v = m.eval(b)?;
    Ok(v.iter().flatten().fold(0.0_f64, |acc, z| acc.max(z.norm())))
}

/// Largest entry of the zero-curvature matrix at `(x, t)`.
pub fn frobenius_residual(lp: &LaxPair, x: C64, t: C64) -> Result<f64, ExprError> {
    max_entry(&zero_curvature(lp), &Binding::at(x, t))
}

/// Largest zero-curvature entry over a set of points.
pub fn frobenius_max(lp: &LaxPair, points: &[(C64, C64)]) -> Result<f64, ExprError> {
    let zc = zero_curvature(lp);
    let vals = points
        .par_iter()
        .map(|&(x, t)| max_entry(&zc, &Binding::at(x, t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Scalar pair satisfied by the selected component of Φ.
///
/// With `k` the component index and `l = 1 - k`, the formulas use `a_kl`,
/// `b_kl` and the diagonal entries `a_kk`, `b_kk`; for the second component
/// this is the index swap, with `a22 = -a11`.
pub fn scalar_coefficients(
    lp: &LaxPair,
    component: Component,
    probes: &[Binding],
) -> Result<ScalarPair, ScalarizeError> {
    let k = component.index();
    let l = 1 - k;
    let (name_a, name_b) = match component {
        Component::First => ("a12", "b12"),
        Component::Second => ("a21", "b21"),
    };
    let a_off = lp.a.get(k, l).clone();
    let b_off = lp.b.get(k, l).clone();
    if a_off.is_zero() || numerically_zero(&a_off, probes, 1e-10, None)? {
        return Err(ScalarizeError::VanishingOffDiagonal(name_a));
    }
    if b_off.is_zero() || numerically_zero(&b_off, probes, 1e-10, None)? {
        return Err(ScalarizeError::VanishingOffDiagonal(name_b));
    }
    let a_kk = lp.a.get(k, k).clone();
    let b_kk = lp.b.get(k, k).clone();
    let dlog = a_off.diff(Var::X).div(&a_off);
    let p1 = dlog.neg();
    let q1 = lp.a.det().sub(&a_kk.diff(Var::X)).add(&a_kk.mul(&dlog));
    let p2 = a_off.div(&b_off);
    let q2 = a_kk.sub(&b_kk.mul(&p2));
    Ok(ScalarPair {
        p1,
        q1,
        p2,
        q2,
        component,
        off_a: Some(a_off),
        off_b: Some(b_off),
        diag_a: Some(a_kk),
        diag_b: Some(b_kk),
    })
}

/// The alternative form `(∂x log b_off − ∂t a_off / b_off) / 2` of q2,
/// valid for traceless compatible systems.
pub fn q2_from_compatibility(sp: &ScalarPair) -> Option<Expr> {
    let (a, b) = (sp.off_a.as_ref()?, sp.off_b.as_ref()?);
    Some(
        b.diff(Var::X)
            .div(b)
            .sub(&a.diff(Var::T).div(b))
            .mul(&Expr::real(0.5)),
    )
}

const FD_STEP: f64 = 1e-3;
const ODE_TOL: f64 = 1e-13;

fn solve_from(
    m: &Matrix2,
    var: Var,
    fixed: Binding,
    from: C64,
    to: C64,
    init: State,
) -> Result<State, ScalarizeError> {
    let mut b = fixed;
    let trace = solve_along(
        |z| {
            b.set_var(var, z);
            m.eval(&b)
        },
        &Path::segment(from, to),
        init,
        ODE_TOL,
    )?;
    Ok(trace.last())
}

/// Residuals of the two scalar equations on a numerical solution of the
/// first-order system near `(x, t)`.
///
/// `system` is the system whose state component `sp.component.index()` is
/// φ (the Lax pair itself, or the induced system of a direct pair). The
/// solution starts from a fixed generic vector at `(x, t)`; derivatives are
/// five-point differences of solutions integrated out along x and along t.
/// Returns `(|φ'' + p1 φ' + q1 φ|, |φ' − p2 φ_t − q2 φ|)`.
pub fn scalar_residual(
    sp: &ScalarPair,
    system: &LaxPair,
    x: C64,
    t: C64,
) -> Result<(f64, f64), ScalarizeError> {
    let k = sp.component.index();
    let init: State = [C64::new(1.0, 0.0), C64::new(0.6, 0.3)];
    let h = FD_STEP;
    let mut along_x = [C64::new(0.0, 0.0); 5];
    let mut along_t = [C64::new(0.0, 0.0); 5];
    for (i, off) in [-2.0, -1.0, 0.0, 1.0, 2.0].into_iter().enumerate() {
        if off == 0.0 {
            along_x[i] = init[k];
            along_t[i] = init[k];
            continue;
        }
        along_x[i] = solve_from(&system.a, Var::X, Binding::at_t(t), x, x + h * off, init)?[k];
        along_t[i] = solve_from(&system.b, Var::T, Binding::at_x(x), t, t + h * off, init)?[k];
    }
    let d1 = |f: &[C64; 5]| (f[0] - f[1] * 8.0 + f[3] * 8.0 - f[4]) / (12.0 * h);
    let d2 = |f: &[C64; 5]| (-f[0] + f[1] * 16.0 - f[2] * 30.0 + f[3] * 16.0 - f[4]) / (12.0 * h * h);
    let phi = init[k];
    let (phi_x, phi_xx, phi_t) = (d1(&along_x), d2(&along_x), d1(&along_t));
    let b = Binding::at(x, t);
    let r1 = phi_xx + sp.p1.eval(&b)? * phi_x + sp.q1.eval(&b)? * phi;
    let r2 = phi_x - sp.p2.eval(&b)? * phi_t - sp.q2.eval(&b)? * phi;
    Ok((r1.norm(), r2.norm()))
}
