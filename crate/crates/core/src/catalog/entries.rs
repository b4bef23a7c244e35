//! Static definitions of the shipped catalog entries.
//!
//! Every template below is written in the expression grammar. Names of
//! closed forms (`y`, `z`, `u`, ...) appear as parameters inside the
//! templates and are replaced by their closed forms at instantiation; inside
//! flow templates `d_<name>` and `dd_<name>` stand for first and second
//! derivatives of a closed form with respect to the deformation variable.

use super::{Component, Family};

pub(crate) enum SystemDef {
    /// Row-major `[a11, a12, a21, a22]` and `[b11, b12, b21, b22]`.
    Lax { a: [&'static str; 4], b: [&'static str; 4] },
    /// `[p1, q1, p2, q2]`.
    Scalar([&'static str; 4]),
}

pub(crate) enum TargetDef {
    Airy { scale_cubed: &'static str },
    Whittaker { kappa: &'static str, mu2: &'static str },
    Constant { c: &'static str },
    None,
}

pub(crate) struct ExpectedDef {
    pub f: &'static str,
    pub h: &'static str,
    pub r: &'static str,
    pub m: &'static str,
    pub exponent_a: Option<&'static str>,
    pub case: &'static str,
}

pub(crate) struct EntryDef {
    pub id: &'static str,
    pub family: Family,
    pub description: &'static str,
    pub component: Component,
    /// `(name, default, overridable)`; defaults are exact rationals `p/q`.
    pub params: &'static [(&'static str, &'static str, bool)],
    /// Parameters fixed as expressions of the free ones.
    pub derived: &'static [(&'static str, &'static str)],
    /// Closed forms in `t`, substituted in order.
    pub forms: &'static [(&'static str, &'static str)],
    pub pre_substitution: Option<&'static str>,
    pub system: SystemDef,
    pub flow: &'static [&'static str],
    pub basepoint_x: f64,
    pub singular_x: &'static [&'static str],
    pub singular_t: &'static [&'static str],
    pub tau_closed: Option<&'static str>,
    pub gauge_closed: Option<&'static str>,
    pub expected: Option<ExpectedDef>,
    pub target: TargetDef,
    pub notes: &'static [&'static str],
    pub negative: bool,
}

const PII_LAX: SystemDef = SystemDef::Lax {
    a: [
        "x^2 + z + t/2",
        "u*x - u*y",
        "-2*z*x/u - 2*(theta + y*z)/u",
        "-x^2 - z - t/2",
    ],
    b: ["x/2", "u/2", "-z/u", "-x/2"],
};

const PII_FLOW: &[&str] = &["d_y - z - y^2 - t/2", "d_z + 2*y*z + theta", "d_u/u + y"];

const PIII_LAX: SystemDef = SystemDef::Lax {
    a: [
        "t/2 - theta_inf/(2*x) + (z - t/2)/x^2",
        "-y*w*z/x - w*z/x^2",
        "-((z - t)*y + (theta_inf + theta0)/2*(z - t)/z + (theta_inf - theta0)/2)/(w*x) + (z - t)/(w*x^2)",
        "-t/2 + theta_inf/(2*x) - (z - t/2)/x^2",
    ],
    b: [
        "x/2 + (t/2 - z)/(x*t)",
        "-y*w*z/t + w*z/(x*t)",
        "-((z - t)*y + (theta_inf + theta0)/2*(z - t)/z + (theta_inf - theta0)/2)/(w*t) - (z - t)/(w*x*t)",
        "-x/2 - (t/2 - z)/(x*t)",
    ],
};

const PIII_FLOW: &[&str] = &[
    "t*d_y - (4*z*y^2 - 2*t*y^2 + (2*theta_inf - 1)*y + 2*t)",
    "t*d_z - (-4*y*z^2 + (4*t*y - 2*theta_inf + 1)*z + (theta0 + theta_inf)*t)",
    "t*d_w/w - (-(theta0 + theta_inf)*t/z - 2*t*y + theta_inf)",
];

const PIV_LAX: SystemDef = SystemDef::Lax {
    a: [
        "x + t + (theta0 - z)/x",
        "u - u*y/(2*x)",
        "2*(z - theta0 - theta_inf)/u + 2*z*(z - 2*theta0)/(u*y*x)",
        "-x - t - (theta0 - z)/x",
    ],
    b: ["x", "u", "2*(z - theta0 - theta_inf)/u", "-x"],
};

const PIV_FLOW: &[&str] = &[
    "d_y - (-4*z + y^2 + 2*t*y + 4*theta0)",
    "d_z - (-2*z^2/y + (-y + 4*theta0/y)*z + (theta0 + theta_inf)*y)",
    "d_u/u + y + 2*t",
];

const PV_LAX: SystemDef = SystemDef::Lax {
    a: [
        "t/2 + (z + theta0/2)/x - (z + (theta0 + theta_inf)/2)/(x - 1)",
        "-u*(z + theta0)/x + u*y*(z + (theta0 - theta1 + theta_inf)/2)/(x - 1)",
        "z/(u*x) - (z + (theta0 + theta1 + theta_inf)/2)/(u*y*(x - 1))",
        "-t/2 - (z + theta0/2)/x + (z + (theta0 + theta_inf)/2)/(x - 1)",
    ],
    b: [
        "x/2",
        "-u*(z + theta0 - y*(z + (theta0 - theta1 + theta_inf)/2))/t",
        "(z - (z + (theta0 + theta1 + theta_inf)/2)/y)/(u*t)",
        "-x/2",
    ],
};

const PV_FLOW: &[&str] = &[
    "t*d_y - (t*y - 2*z*(y - 1)^2 - (y - 1)*((theta0 - theta1 + theta_inf)/2*y - (3*theta0 + theta1 + theta_inf)/2))",
    "t*d_z - (y*z*(z + (theta0 - theta1 + theta_inf)/2) - (z + theta0)/y*(z + (theta0 + theta1 + theta_inf)/2))",
    "t*d_u/u - (-2*z - theta0 + y*(z + (theta0 - theta1 + theta_inf)/2) + (z + (theta0 + theta1 + theta_inf)/2)/y)",
];

const KITAEV_SCALAR: SystemDef = SystemDef::Scalar([
    "1/x + 1/(x - 1) - kappa*t/(kappa*t*x + 1)",
    "mu/(2*x^2) - 1/(16*(x - 1)^2) + (4*mu*kappa*t + 2*mu - 1)/(4*x) + kappa^2*t^2/(4*(kappa*t + 1)*(1 + kappa*t*x)) - (2*mu*kappa^3*t^3 + 6*mu*kappa^2*t^2 + 6*mu*kappa*t + 2*mu - 1)/(4*(kappa*t + 1)*(x - 1))",
    "1/(2*kappa*x*(x - 1)) + t/(2*(x - 1))",
    "-1/(4*(x - 1)) + (1/(2*kappa*x*(x - 1)) + t/(2*(x - 1)))/(2*t)",
]);

// Deformation variable here is s with t = s^2; d/dt = (1/(2 s)) d/ds.
const KITAEV_FLOW: &[&str] = &[
    "dd_y/(4*t^2) - d_y/(4*t^3) - ((1/(2*y) + 1/(y - 1))*(d_y/(2*t))^2 - d_y/(2*t)/t^2 + (y - 1)^2/t^4*(alpha*y + beta/y) + gamma*y/t^2)",
    "d_a2/(2*t)/a2 + t^2*((dd_a2/(4*t^2) - d_a2/(4*t^3))*a2 - (d_a2/(2*t))^2)/a2^2 - (theta_inf*d_ra/(2*t) + 2*a2 + theta_inf)",
];

const PII_EXPECTED: ExpectedDef = ExpectedDef {
    f: "2*x",
    h: "0",
    r: "0",
    m: "0",
    exponent_a: Some("0"),
    case: "EQ3",
};

pub(crate) fn definitions() -> Vec<EntryDef> {
    vec![
        EntryDef {
            id: "PII.y0",
            family: Family::PII,
            description: "P_II, y = 0 at theta = 1/2 (alpha = 0)",
            component: Component::First,
            params: &[("theta", "1/2", false)],
            derived: &[],
            forms: &[("y", "0"), ("z", "-t/2"), ("u", "1")],
            pre_substitution: None,
            system: PII_LAX,
            flow: PII_FLOW,
            basepoint_x: 1.0,
            singular_x: &["0"],
            singular_t: &[],
            tau_closed: Some("x^2 + t"),
            gauge_closed: Some("1"),
            expected: Some(PII_EXPECTED),
            target: TargetDef::Airy { scale_cubed: "4" },
            notes: &[],
            negative: false,
        },
        EntryDef {
            id: "PII.y_inv_t",
            family: Family::PII,
            description: "P_II, y = -1/t at theta = -1/2 (alpha = 1), second component",
            component: Component::Second,
            params: &[("theta", "-1/2", false)],
            derived: &[],
            forms: &[("y", "-1/t"), ("z", "-t/2"), ("u", "t")],
            pre_substitution: None,
            system: PII_LAX,
            flow: PII_FLOW,
            basepoint_x: 1.0,
            singular_x: &["0"],
            singular_t: &["0"],
            tau_closed: Some("x^2 + t"),
            gauge_closed: Some("1"),
            expected: Some(PII_EXPECTED),
            target: TargetDef::Airy { scale_cubed: "4" },
            notes: &["the second-component scalar pair coincides with the first-component pair of PII.y0"],
            negative: false,
        },
        EntryDef {
            id: "PIII.y1",
            family: Family::PIII,
            description: "P_III, y = 1 with theta0 = theta_inf - 1 (alpha + beta = 0)",
            component: Component::First,
            params: &[("theta_inf", "5/2", true)],
            derived: &[("theta0", "theta_inf - 1")],
            forms: &[
                ("y", "1"),
                ("z", "(1 - 2*theta_inf)/4"),
                ("w", "exp(2*t + theta_inf*log(t))"),
            ],
            pre_substitution: None,
            system: PIII_LAX,
            flow: PIII_FLOW,
            basepoint_x: 2.0,
            singular_x: &["0", "1", "-1"],
            singular_t: &["0"],
            tau_closed: Some("(x - 1)^2*t/x"),
            gauge_closed: Some("exp((theta_inf - 1)/2*log(x) + (1 - 2*theta_inf)/2*log(x - 1))"),
            expected: Some(ExpectedDef {
                f: "0",
                h: "(x + 1)/(x*(x - 1))",
                r: "(theta_inf - 1)/(2*x) - (2*theta_inf - 1)/(2*(x - 1))",
                m: "-1",
                exponent_a: Some("theta_inf - 1"),
                case: "EQ2",
            }),
            target: TargetDef::Whittaker {
                kappa: "(theta_inf - 1)/2",
                mu2: "1/16",
            },
            notes: &[],
            negative: false,
        },
        EntryDef {
            id: "PIV.y_m2t",
            family: Family::PIV,
            description: "P_IV, y = -2t at theta0 = theta_inf = 1/2",
            component: Component::First,
            params: &[("theta0", "1/2", false), ("theta_inf", "1/2", false)],
            derived: &[],
            forms: &[("y", "-2*t"), ("z", "1"), ("u", "1")],
            pre_substitution: None,
            system: PIV_LAX,
            flow: PIV_FLOW,
            basepoint_x: 1.0,
            singular_x: &["0"],
            singular_t: &[],
            tau_closed: Some("t*x + x^2/2"),
            gauge_closed: Some("x^(-1/2)"),
            expected: Some(ExpectedDef {
                f: "1",
                h: "1/x",
                r: "-1/(2*x)",
                m: "0",
                exponent_a: Some("0"),
                case: "mixed",
            }),
            target: TargetDef::Constant { c: "1" },
            notes: &[
                "variant theta0 = -1/2, theta_inf = 1/2 with z = 0 gives the same scalar pair",
                "a12 vanishes on x = -t, outside the probe boxes",
            ],
            negative: false,
        },
        EntryDef {
            id: "PIV.y_m2t3",
            family: Family::PIV,
            description: "P_IV, y = -2t/3 at theta_inf = 1/2, theta0 = -1/6",
            component: Component::First,
            params: &[("theta0", "-1/6", false), ("theta_inf", "1/2", false)],
            derived: &[],
            forms: &[("y", "-2*t/3"), ("z", "-2*t^2/9"), ("u", "exp(-2*t^2/3)")],
            pre_substitution: None,
            system: PIV_LAX,
            flow: PIV_FLOW,
            basepoint_x: 1.0,
            singular_x: &["0"],
            singular_t: &[],
            tau_closed: Some("t*x^(1/3) + 3/4*x^(4/3)"),
            gauge_closed: Some("x^(-1/6)"),
            expected: Some(ExpectedDef {
                f: "1",
                h: "1/(3*x)",
                r: "-1/(6*x)",
                m: "2*t/3",
                exponent_a: None,
                case: "generic_EQ",
            }),
            target: TargetDef::Airy { scale_cubed: "3/4" },
            notes: &["variant theta0 = 1/6 with z = -2t^2/9 + 1/3 gives the same scalar pair"],
            negative: false,
        },
        EntryDef {
            id: "PV.y_lin",
            family: Family::PV,
            description: "P_V, y = 1 - t/(theta1 - 1) at theta0 = 0, theta1 + theta_inf = 2",
            component: Component::First,
            params: &[("theta1", "3", true), ("theta0", "0", false)],
            derived: &[("theta_inf", "2 - theta1")],
            forms: &[
                ("y", "1 - t/(theta1 - 1)"),
                ("z", "0"),
                ("u", "exp((2 - theta1)*log(t) + t)/(theta1 - 1 - t)"),
            ],
            pre_substitution: None,
            system: PV_LAX,
            flow: PV_FLOW,
            basepoint_x: 2.0,
            singular_x: &["0", "1"],
            singular_t: &["0", "theta1 - 1"],
            tau_closed: Some("t*(x - 1)"),
            gauge_closed: Some("exp((theta1 - 2)/2*log(x - 1))"),
            expected: Some(ExpectedDef {
                f: "0",
                h: "1/(x - 1)",
                r: "(theta1 - 2)/(2*(x - 1))",
                m: "-1/2",
                exponent_a: Some("1 - theta1"),
                case: "EQ2",
            }),
            target: TargetDef::Whittaker {
                kappa: "(1 - theta1)/2",
                mu2: "theta1^2/4",
            },
            notes: &["u carries exp(+t); this is what the u-flow and the zero-curvature condition require"],
            negative: false,
        },
        EntryDef {
            id: "PV.y_m1",
            family: Family::PV,
            description: "P_V, y = -1 at theta0 = theta1 = 1/2, arbitrary theta_inf",
            component: Component::First,
            params: &[
                ("theta_inf", "1/2", true),
                ("theta0", "1/2", false),
                ("theta1", "1/2", false),
            ],
            derived: &[],
            forms: &[
                ("y", "-1"),
                ("z", "-(t + 2 + 2*theta_inf)/8"),
                ("u", "exp(t/2)"),
            ],
            pre_substitution: None,
            system: PV_LAX,
            flow: PV_FLOW,
            basepoint_x: 2.0,
            singular_x: &["0", "1"],
            singular_t: &["0"],
            tau_closed: Some(
                "t*sqrt(x*(x - 1)) - (1 - theta_inf)*log((sqrt(x) - sqrt(x - 1))/(sqrt(x) + sqrt(x - 1)))",
            ),
            gauge_closed: Some("(x*(x - 1))^(-1/4)"),
            expected: Some(ExpectedDef {
                f: "(1 - theta_inf)/(x*(x - 1))",
                h: "(1/x + 1/(x - 1))/2",
                r: "-1/(4*x) - 1/(4*(x - 1))",
                m: "-1/4",
                exponent_a: Some("0"),
                case: "generic_EQ",
            }),
            target: TargetDef::Constant { c: "1/4" },
            notes: &[],
            negative: false,
        },
        EntryDef {
            id: "PVdeg.kitaev_sqrt",
            family: Family::PVKitaev,
            description: "degenerate P_V (delta = 0), y = 1 + kappa*sqrt(t), scalar pair in s = sqrt(t)",
            component: Component::First,
            params: &[("kappa", "1", true), ("mu", "1/2", true)],
            derived: &[
                ("alpha", "mu"),
                ("beta", "-1/8"),
                ("gamma", "-mu*kappa^2"),
                ("theta_inf", "-mu*kappa^2"),
            ],
            forms: &[
                ("y", "1 + kappa*t"),
                ("a2", "theta_inf/(2*(y - 1))"),
                ("ra", "-2*t/kappa - t^2"),
                ("a1", "ra*a2"),
            ],
            pre_substitution: Some("t -> s^2; the deformation variable of this entry is s"),
            system: KITAEV_SCALAR,
            flow: KITAEV_FLOW,
            basepoint_x: 2.0,
            singular_x: &["0", "1"],
            singular_t: &["0", "-1/kappa"],
            tau_closed: Some(
                "t*sqrt(x - 1) - 1i/(2*kappa)*log((sqrt(x - 1) - 1i)/(sqrt(x - 1) + 1i))",
            ),
            gauge_closed: Some("(x - 1)^(-1/4)"),
            expected: Some(ExpectedDef {
                f: "1/(2*kappa*x*(x - 1))",
                h: "1/(2*(x - 1))",
                r: "-1/(4*(x - 1))",
                m: "1/(2*t)",
                exponent_a: None,
                case: "generic_EQ",
            }),
            target: TargetDef::Constant { c: "2*mu*kappa^2" },
            notes: &[
                "integration constant in a1 = (-2s/kappa - s^2 + B) a2 fixed to B = 0",
                "p1 has a pole at x = -1/(kappa*s), outside the probe boxes",
            ],
            negative: false,
        },
        EntryDef {
            id: "negative.PII_bad_y1",
            family: Family::PII,
            description: "negative control: P_II matrices with y = 1, which is not a solution at theta = 1/2",
            component: Component::First,
            params: &[("theta", "1/2", false)],
            derived: &[],
            forms: &[("y", "1"), ("z", "-t/2"), ("u", "1")],
            pre_substitution: None,
            system: PII_LAX,
            flow: PII_FLOW,
            basepoint_x: 1.0,
            singular_x: &["0"],
            singular_t: &[],
            tau_closed: None,
            gauge_closed: None,
            expected: None,
            target: TargetDef::None,
            notes: &["must fail the zero-curvature check"],
            negative: true,
        },
    ]
}
