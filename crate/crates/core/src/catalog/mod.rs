//! Registry of Lax pairs specialized at algebraic Painlevé solutions.
//!
//! Entries are described by expression templates (see `entries.rs`) and
//! assembled on demand by [`instantiate`], which binds parameter values and
//! substitutes the closed forms of the solution and its auxiliary functions.

mod entries;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::expr::{numerically_zero, Binding, Expr, ExprError, ParseError, Var, C64};
use crate::reduction::CaseTag;
use crate::report::cx;
use crate::scalarize::ScalarPair;
use crate::verify::ClassicalTarget;

use entries::{EntryDef, SystemDef, TargetDef};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("no catalog entry `{0}`")]
    NotFound(String),
    #[error("entry `{entry}` has no parameter `{name}`")]
    UnknownParameter { entry: String, name: String },
    #[error("parameter `{name}` of `{entry}` is fixed by the solution and cannot be overridden")]
    FixedParameter { entry: String, name: String },
    #[error("bad parameter value `{0}` (expected an exact rational p/q)")]
    BadRational(String),
    #[error("template `{src}`: {err}")]
    Template { src: String, err: ParseError },
    #[error("entry `{entry}` is degenerate at these parameters: {reason}")]
    Degenerate { entry: String, reason: String },
    #[error(transparent)]
    Eval(#[from] ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    PII,
    PIII,
    PIV,
    PV,
    #[serde(rename = "PV_Kitaev")]
    PVKitaev,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::PII => "PII",
            Family::PIII => "PIII",
            Family::PIV => "PIV",
            Family::PV => "PV",
            Family::PVKitaev => "PV_Kitaev",
        }
    }

    /// Whether the family belongs to the group selected by `filter`; the
    /// degenerate fifth equation counts as `PV`.
    pub fn matches(self, filter: &str) -> bool {
        let f = filter.to_ascii_uppercase();
        self.name().eq_ignore_ascii_case(&f) || (f == "PV" && self == Family::PVKitaev)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which component of Φ is scalarized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    First,
    Second,
}

impl Component {
    pub fn index(self) -> usize {
        match self {
            Component::First => 0,
            Component::Second => 1,
        }
    }

    /// `+1` for the first component, `-1` for the second.
    pub fn sign(self) -> f64 {
        match self {
            Component::First => 1.0,
            Component::Second => -1.0,
        }
    }
}

/// A 2x2 grid of expressions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix2(pub [[Expr; 2]; 2]);

impl Matrix2 {
    pub fn zero() -> Self {
        Matrix2([[Expr::zero(), Expr::zero()], [Expr::zero(), Expr::zero()]])
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.0[i][j]
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        let m = &self.0;
        Matrix2([[f(&m[0][0]), f(&m[0][1])], [f(&m[1][0]), f(&m[1][1])]])
    }

    pub fn diff(&self, var: Var) -> Self {
        self.map(|e| e.diff(var))
    }

    pub fn trace(&self) -> Expr {
        self.0[0][0].add(&self.0[1][1])
    }

    pub fn det(&self) -> Expr {
        let m = &self.0;
        m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0]))
    }

    pub fn matmul(&self, rhs: &Matrix2) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let cell = |i: usize, j: usize| a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]));
        Matrix2([[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]])
    }

    pub fn add(&self, rhs: &Matrix2) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Matrix2([
            [a[0][0].add(&b[0][0]), a[0][1].add(&b[0][1])],
            [a[1][0].add(&b[1][0]), a[1][1].add(&b[1][1])],
        ])
    }

    pub fn sub(&self, rhs: &Matrix2) -> Self {
        self.add(&rhs.map(|e| e.neg()))
    }

    pub fn eval(&self, b: &Binding) -> Result<[[C64; 2]; 2], ExprError> {
        let m = &self.0;
        Ok([
            [m[0][0].eval(b)?, m[0][1].eval(b)?],
            [m[1][0].eval(b)?, m[1][1].eval(b)?],
        ])
    }
}

/// The x- and t-systems `Φ_x = A Φ`, `Φ_t = B Φ`.
#[derive(Clone, Debug)]
pub struct LaxPair {
    pub a: Matrix2,
    pub b: Matrix2,
    pub parameters: BTreeMap<String, C64>,
    pub singular_x: Vec<C64>,
    pub singular_t: Vec<C64>,
}

impl LaxPair {
    pub fn new(a: Matrix2, b: Matrix2) -> Self {
        LaxPair {
            a,
            b,
            parameters: BTreeMap::new(),
            singular_x: Vec::new(),
            singular_t: Vec::new(),
        }
    }

    /// The first-order system satisfied by `(φ, φ_x)` when `φ` solves a
    /// scalar pair. It is not traceless.
    pub fn from_scalar_pair(sp: &ScalarPair) -> Self {
        let p2x = sp.p2.diff(Var::X);
        let q2x = sp.q2.diff(Var::X);
        let p2sq = sp.p2.powi(2);
        let a = Matrix2([[Expr::zero(), Expr::one()], [sp.q1.neg(), sp.p1.neg()]]);
        let b = Matrix2([
            [sp.q2.neg().div(&sp.p2), Expr::one().div(&sp.p2)],
            [
                q2x.add(&sp.q1).neg().div(&sp.p2).add(&p2x.mul(&sp.q2).div(&p2sq)),
                sp.p1.add(&sp.q2).neg().div(&sp.p2).sub(&p2x.div(&p2sq)),
            ],
        ]);
        LaxPair::new(a, b)
    }
}

/// Either a Lax pair or a scalar pair given directly.
#[derive(Clone, Debug)]
pub enum System {
    Lax(LaxPair),
    Scalar(ScalarPair),
}

/// Rectangles in the complex x- and t-planes used for probing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeBox {
    pub x_re: [f64; 2],
    pub x_im: [f64; 2],
    pub t_re: [f64; 2],
    pub t_im: [f64; 2],
}

impl Default for ProbeBox {
    fn default() -> Self {
        ProbeBox {
            x_re: [1.1, 2.5],
            x_im: [-0.2, 0.2],
            t_re: [0.5, 1.5],
            t_im: [-0.2, 0.2],
        }
    }
}

fn lerp(r: [f64; 2], s: f64) -> f64 {
    r[0] + (r[1] - r[0]) * s
}

fn within(r: [f64; 2], v: f64, margin: f64) -> bool {
    v >= r[0] - margin && v <= r[1] + margin
}

impl ProbeBox {
    pub fn contains_x(&self, x: C64) -> bool {
        within(self.x_re, x.re, 0.0) && within(self.x_im, x.im, 0.0)
    }

    pub fn contains_t(&self, t: C64) -> bool {
        within(self.t_re, t.re, 0.0) && within(self.t_im, t.im, 0.0)
    }

    pub fn center_x(&self) -> C64 {
        C64::new(lerp(self.x_re, 0.5), lerp(self.x_im, 0.5))
    }

    pub fn center_t(&self) -> C64 {
        C64::new(lerp(self.t_re, 0.5), lerp(self.t_im, 0.5))
    }

    /// Point of the x-box at fractional coordinates `(u, v)` in `[0,1]^2`.
    pub fn x_at(&self, u: f64, v: f64) -> C64 {
        C64::new(lerp(self.x_re, u), lerp(self.x_im, v))
    }

    pub fn t_at(&self, u: f64, v: f64) -> C64 {
        C64::new(lerp(self.t_re, u), lerp(self.t_im, v))
    }

    /// `n x n` grid of `(x, t)`: x runs along the diagonal of its box, t
    /// along the anti-diagonal of its box.
    pub fn grid(&self, n: usize) -> Vec<(C64, C64)> {
        let s = |k: usize| if n <= 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push((self.x_at(s(i), s(i)), self.t_at(s(j), 1.0 - s(j))));
            }
        }
        out
    }

    pub fn random_x(&self, rng: &mut impl Rng) -> C64 {
        self.x_at(rng.gen(), rng.gen())
    }

    pub fn random_t(&self, rng: &mut impl Rng) -> C64 {
        self.t_at(rng.gen(), rng.gen())
    }

    /// Distance from the closed x-box (or t-box) to a point.
    fn distance(re: [f64; 2], im: [f64; 2], p: C64) -> f64 {
        let dx = (re[0] - p.re).max(0.0).max(p.re - re[1]);
        let dy = (im[0] - p.im).max(0.0).max(p.im - im[1]);
        dx.hypot(dy)
    }

    pub fn distance_x(&self, p: C64) -> f64 {
        Self::distance(self.x_re, self.x_im, p)
    }

    pub fn distance_t(&self, p: C64) -> f64 {
        Self::distance(self.t_re, self.t_im, p)
    }
}

/// Published decomposition data for an entry, used as test oracles.
#[derive(Clone, Debug)]
pub struct Expected {
    pub f: Expr,
    pub h: Expr,
    pub r: Expr,
    pub m: Expr,
    pub exponent_a: Option<C64>,
    pub case: CaseTag,
    /// The templates as written, before parameter binding.
    pub source: BTreeMap<&'static str, &'static str>,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: String,
    pub family: Family,
    pub description: String,
    pub component: Component,
    /// Free and fixed parameters with their (possibly overridden) values.
    pub parameters: BTreeMap<String, Rational64>,
    /// Every parameter value, including derived ones.
    pub values: BTreeMap<String, C64>,
    /// Closed forms after binding and substitution, in definition order.
    pub closed_forms: Vec<(String, Expr)>,
    pub pre_substitution: Option<String>,
    pub system: System,
    /// Residual expressions in `t` of the nonlinear flow.
    pub flow: Vec<Expr>,
    pub basepoint_x: C64,
    pub probe: ProbeBox,
    pub singular_x: Vec<C64>,
    pub singular_t: Vec<C64>,
    /// The published τ and gauge factor, when the entry has them.
    pub tau_closed: Option<Expr>,
    pub gauge_closed: Option<Expr>,
    pub expected: Option<Expected>,
    pub expected_target: ClassicalTarget,
    pub notes: Vec<String>,
    pub negative: bool,
}

impl CatalogEntry {
    pub fn lax(&self) -> Option<&LaxPair> {
        match &self.system {
            System::Lax(lp) => Some(lp),
            System::Scalar(_) => None,
        }
    }

    /// The first-order system used for numerical solutions, and the index
    /// of the state component that plays the role of φ.
    pub fn numeric_system(&self) -> (LaxPair, usize) {
        match &self.system {
            System::Lax(lp) => (lp.clone(), self.component.index()),
            System::Scalar(sp) => (LaxPair::from_scalar_pair(sp), 0),
        }
    }

    pub fn closed_form(&self, name: &str) -> Option<&Expr> {
        self.closed_forms.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }
}

fn parse(src: &str) -> Result<Expr, CatalogError> {
    Expr::parse(src).map_err(|err| CatalogError::Template {
        src: src.to_string(),
        err,
    })
}

pub fn parse_rational(s: &str) -> Result<Rational64, CatalogError> {
    let trimmed: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    Rational64::from_str(&trimmed).map_err(|_| CatalogError::BadRational(s.to_string()))
}

fn rational_to_c(r: Rational64) -> C64 {
    C64::new(*r.numer() as f64 / *r.denom() as f64, 0.0)
}

/// Ids of the shipped positive entries, in catalog order.
pub fn list_entries() -> Vec<&'static str> {
    entries::definitions()
        .into_iter()
        .filter(|d| !d.negative)
        .map(|d| d.id)
        .collect()
}

/// Ids of the negative controls.
pub fn negative_entries() -> Vec<&'static str> {
    entries::definitions()
        .into_iter()
        .filter(|d| d.negative)
        .map(|d| d.id)
        .collect()
}

/// All ids, positive entries first.
pub fn all_entries() -> Vec<&'static str> {
    let mut ids = list_entries();
    ids.extend(negative_entries());
    ids
}

fn definition(id: &str) -> Result<EntryDef, CatalogError> {
    entries::definitions()
        .into_iter()
        .find(|d| d.id == id)
        .ok_or_else(|| CatalogError::NotFound(id.to_string()))
}

/// The entry at its default parameters.
pub fn lookup(id: &str) -> Result<CatalogEntry, CatalogError> {
    instantiate_with(id, &BTreeMap::new())
}

/// The entry with every closed form substituted.
pub fn instantiate(id: &str) -> Result<(System, CatalogEntry), CatalogError> {
    let entry = lookup(id)?;
    Ok((entry.system.clone(), entry))
}

/// Like [`lookup`], with exact overrides for the free parameters.
pub fn instantiate_with(
    id: &str,
    overrides: &BTreeMap<String, Rational64>,
) -> Result<CatalogEntry, CatalogError> {
    let def = definition(id)?;

    let mut parameters = BTreeMap::new();
    for (name, default, _) in def.params {
        parameters.insert(name.to_string(), parse_rational(default)?);
    }
    for (name, value) in overrides {
        match def.params.iter().find(|(n, _, _)| n == name) {
            None => {
                return Err(CatalogError::UnknownParameter {
                    entry: id.into(),
                    name: name.clone(),
                })
            }
            Some((_, _, false)) => {
                return Err(CatalogError::FixedParameter {
                    entry: id.into(),
                    name: name.clone(),
                })
            }
            Some(_) => {
                parameters.insert(name.clone(), *value);
            }
        }
    }

    let mut values: BTreeMap<String, C64> = parameters
        .iter()
        .map(|(k, v)| (k.clone(), rational_to_c(*v)))
        .collect();
    for (name, src) in def.derived {
        let v = parse(src)?.bind_params(&values).eval(&Binding::new())?;
        values.insert(name.to_string(), v);
    }

    let bind = |src: &str| -> Result<Expr, CatalogError> { Ok(parse(src)?.bind_params(&values)) };

    let mut closed_forms: Vec<(String, Expr)> = Vec::new();
    for (name, src) in def.forms {
        let mut e = bind(src)?;
        for (prev, pe) in &closed_forms {
            e = e.subs_param(prev, pe);
        }
        closed_forms.push((name.to_string(), e));
    }
    let substitute = |src: &str| -> Result<Expr, CatalogError> {
        let mut e = bind(src)?;
        for (name, form) in closed_forms.iter().rev() {
            let d1 = form.diff(Var::T);
            let d2 = d1.diff(Var::T);
            e = e
                .subs_param(&format!("dd_{name}"), &d2)
                .subs_param(&format!("d_{name}"), &d1)
                .subs_param(name, form);
        }
        Ok(e)
    };

    let singular_x = def
        .singular_x
        .iter()
        .map(|s| Ok(bind(s)?.eval(&Binding::new())?))
        .collect::<Result<Vec<_>, CatalogError>>()?;
    let singular_t = def
        .singular_t
        .iter()
        .map(|s| Ok(bind(s)?.eval(&Binding::new())?))
        .collect::<Result<Vec<_>, CatalogError>>()?;

    let system = match &def.system {
        SystemDef::Lax { a, b } => {
            let grid = |s: &[&str; 4]| -> Result<Matrix2, CatalogError> {
                Ok(Matrix2([
                    [substitute(s[0])?, substitute(s[1])?],
                    [substitute(s[2])?, substitute(s[3])?],
                ]))
            };
            System::Lax(LaxPair {
                a: grid(a)?,
                b: grid(b)?,
                parameters: values.clone(),
                singular_x: singular_x.clone(),
                singular_t: singular_t.clone(),
            })
        }
        SystemDef::Scalar(s) => System::Scalar(ScalarPair::direct(
            substitute(s[0])?,
            substitute(s[1])?,
            substitute(s[2])?,
            substitute(s[3])?,
        )),
    };

    let flow = def
        .flow
        .iter()
        .map(|s| substitute(s))
        .collect::<Result<Vec<_>, _>>()?;

    let expected = match &def.expected {
        None => None,
        Some(e) => {
            let mut source = BTreeMap::new();
            source.insert("f", e.f);
            source.insert("h", e.h);
            source.insert("R", e.r);
            source.insert("M", e.m);
            Some(Expected {
                f: bind(e.f)?,
                h: bind(e.h)?,
                r: bind(e.r)?,
                m: bind(e.m)?,
                exponent_a: match e.exponent_a {
                    Some(s) => Some(bind(s)?.eval(&Binding::new())?),
                    None => None,
                },
                case: e.case.parse().expect("case tags in the catalog are valid"),
                source,
            })
        }
    };

    let expected_target = match &def.target {
        TargetDef::Airy { scale_cubed } => {
            let s3 = bind(scale_cubed)?.eval(&Binding::new())?;
            ClassicalTarget::Airy { scale: s3.powf(1.0 / 3.0) }
        }
        TargetDef::Whittaker { kappa, mu2 } => ClassicalTarget::Whittaker {
            kappa: bind(kappa)?.eval(&Binding::new())?,
            mu2: bind(mu2)?.eval(&Binding::new())?,
            scale: C64::new(1.0, 0.0),
        },
        TargetDef::Constant { c } => ClassicalTarget::Constant {
            c: bind(c)?.eval(&Binding::new())?,
        },
        TargetDef::None => ClassicalTarget::None,
    };

    let entry = CatalogEntry {
        id: def.id.to_string(),
        family: def.family,
        description: def.description.to_string(),
        component: def.component,
        parameters,
        values: values.clone(),
        closed_forms,
        pre_substitution: def.pre_substitution.map(str::to_string),
        system,
        flow,
        basepoint_x: C64::new(def.basepoint_x, 0.0),
        probe: ProbeBox::default(),
        singular_x,
        singular_t,
        tau_closed: def.tau_closed.map(bind).transpose()?,
        gauge_closed: def.gauge_closed.map(bind).transpose()?,
        expected,
        expected_target,
        notes: def.notes.iter().map(|s| s.to_string()).collect(),
        negative: def.negative,
    };
    validate(&entry)?;
    Ok(entry)
}

const SINGULAR_MARGIN: f64 = 0.05;

fn validate(entry: &CatalogEntry) -> Result<(), CatalogError> {
    let degenerate = |reason: String| CatalogError::Degenerate {
        entry: entry.id.clone(),
        reason,
    };
    for s in &entry.singular_x {
        if entry.probe.distance_x(*s) < SINGULAR_MARGIN || (entry.basepoint_x - s).norm() < SINGULAR_MARGIN {
            return Err(degenerate(format!("singular x = {s} meets the probe box or basepoint")));
        }
    }
    for s in &entry.singular_t {
        if entry.probe.distance_t(*s) < SINGULAR_MARGIN {
            return Err(degenerate(format!("singular t = {s} meets the probe box")));
        }
    }
    let probes: Vec<Binding> = entry
        .probe
        .grid(4)
        .into_iter()
        .map(|(x, t)| Binding::at(x, t))
        .collect();
    if let System::Lax(lp) = &entry.system {
        for (name, m) in [("A", &lp.a), ("B", &lp.b)] {
            let tr = m.trace();
            let zero = numerically_zero(&tr, &probes, 1e-12, Some(m.get(0, 0)))
                .map_err(|e| degenerate(format!("{name} does not evaluate on the probe box: {e}")))?;
            if !zero {
                return Err(degenerate(format!("trace of {name} does not vanish")));
            }
        }
    }
    Ok(())
}

/// Max over the flow residuals of `|residual(t)|`.
pub fn flow_residual(entry: &CatalogEntry, t: C64) -> Result<f64, ExprError> {
    let b = Binding::at_t(t);
    let mut worst = 0.0_f64;
    for r in &entry.flow {
        worst = worst.max(r.eval(&b)?.norm());
    }
    Ok(worst)
}

/// Human-readable manifest of an entry at its default parameters.
pub fn manifest(id: &str) -> Result<Value, CatalogError> {
    let def = definition(id)?;
    let entry = lookup(id)?;
    let system = match &def.system {
        SystemDef::Lax { a, b } => json!({ "kind": "lax", "A": a, "B": b }),
        SystemDef::Scalar(s) => json!({
            "kind": "scalar", "p1": s[0], "q1": s[1], "p2": s[2], "q2": s[3]
        }),
    };
    let params: serde_json::Map<String, Value> = def
        .params
        .iter()
        .map(|(n, v, o)| (n.to_string(), json!({ "value": v, "overridable": o })))
        .collect();
    let derived: serde_json::Map<String, Value> = def
        .derived
        .iter()
        .map(|(n, s)| (n.to_string(), json!(s)))
        .collect();
    let forms: Vec<Value> = def
        .forms
        .iter()
        .map(|(n, s)| json!({ "name": n, "expr": s }))
        .collect();
    let expected = def.expected.as_ref().map(|e| {
        json!({
            "f": e.f, "h": e.h, "R": e.r, "M": e.m,
            "exponent_A": e.exponent_a, "case": e.case,
        })
    });
    let target = match &def.target {
        TargetDef::Airy { scale_cubed } => {
            let base = if scale_cubed.chars().all(|c| c.is_ascii_digit()) {
                scale_cubed.to_string()
            } else {
                format!("({scale_cubed})")
            };
            json!({ "kind": "airy", "scale": format!("{base}^(1/3)") })
        }
        TargetDef::Whittaker { kappa, mu2 } => json!({ "kind": "whittaker", "kappa": kappa, "mu2": mu2 }),
        TargetDef::Constant { c } => json!({ "kind": "constant", "c": c }),
        TargetDef::None => json!({ "kind": "none" }),
    };
    Ok(json!({
        "schema": crate::report::SCHEMA,
        "id": def.id,
        "family": def.family,
        "description": def.description,
        "component": def.component,
        "negative": def.negative,
        "parameters": params,
        "derived_parameters": derived,
        "closed_forms": forms,
        "pre_substitution": def.pre_substitution,
        "system": system,
        "flow": def.flow,
        "basepoint_x": cx(entry.basepoint_x),
        "probe_box": entry.probe,
        "singular_x": def.singular_x,
        "singular_t": def.singular_t,
        "tau_closed_form": def.tau_closed,
        "gauge_closed_form": def.gauge_closed,
        "expected_decomposition": expected,
        "expected_target": target,
        "notes": def.notes,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn shipped_ids_in_order() {
        assert_eq!(
            list_entries(),
            [
                "PII.y0",
                "PII.y_inv_t",
                "PIII.y1",
                "PIV.y_m2t",
                "PIV.y_m2t3",
                "PV.y_lin",
                "PV.y_m1",
                "PVdeg.kitaev_sqrt"
            ]
        );
        assert_eq!(negative_entries(), ["negative.PII_bad_y1"]);
    }

    #[test]
    fn lookup_pii_theta() {
        let e = lookup("PII.y0").unwrap();
        assert_eq!(e.parameters["theta"], Rational64::new(1, 2));
        assert!(matches!(lookup("nope"), Err(CatalogError::NotFound(_))));
    }

    #[test]
    fn pii_y0_matrix() {
        let e = lookup("PII.y0").unwrap();
        let lp = e.lax().unwrap();
        let (x, t) = (c(1.5), c(0.7));
        let b = Binding::at(x, t);
        let a = lp.a.eval(&b).unwrap();
        assert!((a[0][0] - x * x).norm() < 1e-14);
        assert!((a[0][1] - x).norm() < 1e-14);
        assert!((a[1][0] - (t * x - 1.0)).norm() < 1e-14);
        assert!((a[1][1] + x * x).norm() < 1e-14);
    }

    #[test]
    fn closed_form_values() {
        let e = lookup("PIII.y1").unwrap();
        assert_eq!(e.closed_form("z").unwrap().as_const(), Some(c(-1.0)));
        let e = lookup("PIV.y_m2t").unwrap();
        assert_eq!(e.closed_form("z").unwrap().as_const(), Some(c(1.0)));
    }

    #[test]
    fn flow_examples() {
        assert_eq!(flow_residual(&lookup("PII.y0").unwrap(), c(0.7)).unwrap(), 0.0);
        assert!(flow_residual(&lookup("PIII.y1").unwrap(), c(0.9)).unwrap() <= 1e-10);
        assert!(flow_residual(&lookup("PIV.y_m2t3").unwrap(), c(1.1)).unwrap() <= 1e-10);
    }

    #[test]
    fn every_entry_flow_vanishes() {
        for id in list_entries() {
            let e = lookup(id).unwrap();
            for (_, t) in e.probe.grid(4) {
                let r = flow_residual(&e, t).unwrap();
                assert!(r <= 1e-10, "{id} at t={t}: {r}");
            }
        }
    }

    #[test]
    fn overrides() {
        let mut o = BTreeMap::new();
        o.insert("theta_inf".to_string(), Rational64::new(7, 2));
        let e = instantiate_with("PIII.y1", &o).unwrap();
        assert_eq!(e.values["theta0"], c(2.5));
        o.clear();
        o.insert("theta".to_string(), Rational64::new(1, 3));
        assert!(matches!(
            instantiate_with("PII.y0", &o),
            Err(CatalogError::FixedParameter { .. })
        ));
        o.clear();
        o.insert("nu".to_string(), Rational64::new(1, 3));
        assert!(matches!(
            instantiate_with("PII.y0", &o),
            Err(CatalogError::UnknownParameter { .. })
        ));
    }

    #[test]
    fn degenerate_parameters_rejected() {
        let mut o = BTreeMap::new();
        o.insert("theta1".to_string(), Rational64::new(2, 1));
        assert!(instantiate_with("PV.y_lin", &o).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("5/2").unwrap(), Rational64::new(5, 2));
        assert_eq!(parse_rational("-1/6").unwrap(), Rational64::new(-1, 6));
        assert_eq!(parse_rational("3").unwrap(), Rational64::new(3, 1));
        assert!(parse_rational("0.5").is_err());
    }

    #[test]
    fn family_filter() {
        let pv: Vec<_> = list_entries()
            .into_iter()
            .filter(|id| lookup(id).unwrap().family.matches("PV"))
            .collect();
        assert_eq!(pv, ["PV.y_lin", "PV.y_m1", "PVdeg.kitaev_sqrt"]);
    }
}
