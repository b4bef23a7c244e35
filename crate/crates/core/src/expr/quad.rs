//! Adaptive Gauss–Kronrod (7, 15) quadrature along piecewise-linear complex paths.

use super::{Binding, Expr, ExprError, Var, C64};

/// Relative target used by [`integrate_along_path`]: the estimated absolute
/// error is driven below `QUAD_REL_TOL * (1 + |value|)`.
pub const QUAD_REL_TOL: f64 = 1e-12;

const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Piecewise-linear contour through complex waypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    points: Vec<C64>,
}

impl Path {
    pub fn new(points: Vec<C64>) -> Result<Self, ExprError> {
        if points.len() < 2 {
            return Err(ExprError::InvalidPath("a path needs at least two waypoints".into()));
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(ExprError::InvalidPath("non-finite waypoint".into()));
        }
        Ok(Self { points })
    }

    pub fn segment(a: C64, b: C64) -> Self {
        Self { points: vec![a, b] }
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn start(&self) -> C64 {
        self.points[0]
    }

    pub fn end(&self) -> C64 {
        *self.points.last().expect("path has waypoints")
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }

    /// Joins `self` with `other`; `other` must start where `self` ends.
    pub fn then(&self, other: &Path) -> Self {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points[1..]);
        Self { points }
    }
}

struct Piece {
    a: C64,
    b: C64,
    value: C64,
    err: f64,
}

fn kronrod<E>(
    f: &mut impl FnMut(C64) -> Result<C64, E>,
    a: C64,
    b: C64,
) -> Result<(C64, f64), E> {
    let center = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let fc = f(center)?;
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    let mut abs_sum = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        kron += (f1 + f2) * WGK[j];
        abs_sum += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let value = kron * half;
    let mut err = ((kron - gauss) * half).norm();
    let floor = 50.0 * f64::EPSILON * abs_sum * half.norm();
    if err < floor {
        err = floor;
    }
    Ok((value, err))
}

/// Integrates a closure along `path`, globally adaptive across all segments.
///
/// Returns the value and the error estimate. Fails with
/// [`ExprError::QuadratureNonconvergence`] when the interval budget is
/// exhausted before the estimate drops below `rel_tol * (1 + |value|)`.
pub fn integrate_path_with(
    mut f: impl FnMut(C64) -> Result<C64, ExprError>,
    path: &Path,
    rel_tol: f64,
) -> Result<(C64, f64), ExprError> {
    let mut pieces = Vec::with_capacity(64);
    for w in path.points.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (value, err) = kronrod(&mut f, w[0], w[1])?;
        pieces.push(Piece {
            a: w[0],
            b: w[1],
            value,
            err,
        });
    }
    loop {
        let total: C64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.err).sum();
        if err <= rel_tol * (1.0 + total.norm()) {
            return Ok((total, err));
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(ExprError::QuadratureNonconvergence { estimate: err });
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| p.err.total_cmp(&q.err))
            .expect("non-empty");
        let Piece { a, b, .. } = pieces.swap_remove(worst);
        let mid = (a + b) * 0.5;
        if mid == a || mid == b {
            return Err(ExprError::QuadratureNonconvergence { estimate: err });
        }
        for (lo, hi) in [(a, mid), (mid, b)] {
            let (value, err) = kronrod(&mut f, lo, hi)?;
            pieces.push(Piece {
                a: lo,
                b: hi,
                value,
                err,
            });
        }
    }
}

/// Integrates `e` with respect to `var` along `path`; the other variable and
/// all parameters come from `b`.
pub fn integrate_along_path(
    e: &Expr,
    var: Var,
    path: &Path,
    b: &Binding,
) -> Result<C64, ExprError> {
    let mut point = b.clone();
    integrate_path_with(
        |z| {
            point.set_var(var, z);
            e.eval(&point)
        },
        path,
        QUAD_REL_TOL,
    )
    .map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn reciprocal_to_e() {
        let e = Expr::parse("1/x").unwrap();
        let v = integrate_along_path(&e, Var::X, &Path::segment(r(1.0), r(std::f64::consts::E)), &Binding::new()).unwrap();
        assert!((v - r(1.0)).norm() < 1e-12);
    }

    #[test]
    fn shifted_reciprocal() {
        let e = Expr::parse("1/(x - 1)").unwrap();
        let v = integrate_along_path(&e, Var::X, &Path::segment(r(2.0), r(5.0)), &Binding::new()).unwrap();
        assert!((v - r(4f64.ln())).norm() < 1e-12);
    }

    #[test]
    fn linear_integrand() {
        let e = Expr::parse("2*x").unwrap();
        let v = integrate_along_path(&e, Var::X, &Path::segment(r(0.0), r(3.0)), &Binding::new()).unwrap();
        assert!((v - r(9.0)).norm() < 1e-12);
    }

    #[test]
    fn integrates_in_t_with_bound_x() {
        let e = Expr::parse("x*t").unwrap();
        let v = integrate_along_path(&e, Var::T, &Path::segment(r(0.0), r(2.0)), &Binding::at_x(r(3.0))).unwrap();
        assert!((v - r(6.0)).norm() < 1e-12);
    }

    #[test]
    fn contour_around_pole_picks_up_residue() {
        let e = Expr::parse("1/x").unwrap();
        let square = Path::new(vec![r(1.0), C64::new(0.0, 1.0), r(-1.0), C64::new(0.0, -1.0), r(1.0)]).unwrap();
        let v = integrate_along_path(&e, Var::X, &square, &Binding::new()).unwrap();
        assert!((v - C64::new(0.0, 2.0 * std::f64::consts::PI)).norm() < 1e-11);
    }

    #[test]
    fn singular_integrand_reports_error() {
        let e = Expr::parse("1/x").unwrap();
        let res = integrate_along_path(&e, Var::X, &Path::segment(r(-1.0), r(1.0)), &Binding::new());
        assert!(res.is_err());
    }

    #[test]
    fn path_needs_two_points() {
        assert!(Path::new(vec![r(0.0)]).is_err());
    }
}
