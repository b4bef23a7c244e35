//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;

use fuchs_core::catalog::{self, flow_residual, list_entries};
use fuchs_core::scalarize::frobenius_max;
use fuchs_core::verify::{
    check_t_independence, cross_validate, default_crossval_path, expected_deviation, full_report,
    match_classical, prepare, rng_for, Config, Pipeline,
};
use fuchs_core::expr::integrate_along_path;
use fuchs_core::{Binding, Expr, Path, Var, C64};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn pipeline(id: &str) -> Result<Pipeline, String> {
    prepare(id, &Config::default()).map_err(|e| format!("{id}: {e}"))
}

fn worst(label: &str, vals: impl IntoIterator<Item = (String, f64)>, tol: f64) -> Outcome {
    let mut max = 0.0_f64;
    let mut arg = String::new();
    let mut ok = true;
    for (id, v) in vals {
        // NaN counts as a failure and as the new worst value.
        if v.is_nan() || v > tol {
            ok = false;
        }
        if v.is_nan() || v > max {
            max = v;
            arg = id;
        }
    }
    (ok, format!("{label} max {max:.2e} ({arg}) vs tol {tol:.0e}"))
}

fn integrability() -> Outcome {
    let mut rows = Vec::new();
    for id in list_entries() {
        let entry = catalog::lookup(id).unwrap();
        let (system, _) = entry.numeric_system();
        let tag = if entry.lax().is_some() { id.to_string() } else { format!("{id} (induced)") };
        match frobenius_max(&system, &entry.probe.grid(5)) {
            Ok(v) => rows.push((tag, v)),
            Err(e) => rows.push((format!("{tag}: {e}"), f64::INFINITY)),
        }
    }
    worst("frobenius over 5x5 grid", rows, 1e-10)
}

fn flow() -> Outcome {
    let mut rows = Vec::new();
    for id in list_entries() {
        let entry = catalog::lookup(id).unwrap();
        let mut rng = rng_for(42, id, 1);
        let v = (0..16)
            .map(|_| flow_residual(&entry, entry.probe.random_t(&mut rng)).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        rows.push((id.to_string(), v));
    }
    worst("flow residual at 16 t", rows, 1e-10)
}

fn decomposition() -> Outcome {
    let mut rows = Vec::new();
    for id in list_entries() {
        let v = pipeline(id)
            .and_then(|pl| expected_deviation(&pl).map_err(|e| e.to_string()))
            .ok()
            .flatten()
            .unwrap_or(f64::INFINITY);
        rows.push((id.to_string(), v));
    }
    let (a, b) = (pipeline("PII.y0").unwrap(), pipeline("PII.y_inv_t").unwrap());
    let mut same = 0.0_f64;
    for (x, t) in a.entry.probe.grid(4) {
        let bind = Binding::at(x, t);
        for (p, q) in [
            (&a.scalar.p1, &b.scalar.p1),
            (&a.scalar.q1, &b.scalar.q1),
            (&a.scalar.p2, &b.scalar.p2),
            (&a.scalar.q2, &b.scalar.q2),
        ] {
            let (u, v) = (p.eval(&bind).unwrap(), q.eval(&bind).unwrap());
            same = same.max((u - v).norm() / (1.0 + u.norm()));
        }
    }
    rows.push(("PII.y_inv_t vs PII.y0 scalar pair".into(), same));
    worst("relative deviation at 16 probes", rows, 1e-9)
}

fn fuchs_property() -> Outcome {
    let mut rows = Vec::new();
    for id in list_entries() {
        let v = pipeline(id)
            .and_then(|pl| check_t_independence(&pl, 32, 42).map_err(|e| e.to_string()))
            .map_or(f64::INFINITY, |(v, _)| v);
        rows.push((id.to_string(), v));
    }
    let (ok, mut msg) = worst("t-independence over 32 pairs", rows, 1e-8);
    let neg = full_report("negative.PII_bad_y1", &Config::default()).unwrap();
    let frob = neg.frobenius_max.unwrap_or(0.0);
    let dev = neg.t_independence_max.unwrap_or(0.0);
    let caught = !neg.passed && (frob >= 1e-3 || dev >= 1e-3);
    msg.push_str(&format!("; negative control frobenius {frob:.2e}, deviation {dev:.2e}"));
    (ok && caught, msg)
}

fn targets() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut max_res = 0.0_f64;
    for id in list_entries() {
        let pl = pipeline(id).unwrap();
        let res = check_t_independence(&pl, 32, 42)
            .map_err(|e| e.to_string())
            .and_then(|(_, s)| match_classical(&s).map_err(|e| e.to_string()));
        match res {
            Ok((target, residual, _)) => {
                let dist = target.distance(&pl.entry.expected_target);
                max_res = max_res.max(residual);
                if !(residual <= 1e-8 && dist <= 1e-8) {
                    ok = false;
                    parts.push(format!("{id} got {target:?} (residual {residual:.1e}, off by {dist:.1e})"));
                }
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{id}: {e}"));
            }
        }
    }
    let mut msg = format!("8 targets, match residual max {max_res:.2e} vs tol 1e-8, parameters within 1e-8");
    if !parts.is_empty() {
        msg = format!("{msg}; {}", parts.join("; "));
    }
    (ok, msg)
}

fn cross_validation() -> Outcome {
    let mut rows = Vec::new();
    for id in list_entries() {
        let v = (|| -> Result<f64, String> {
            let pl = pipeline(id)?;
            let (_, s) = check_t_independence(&pl, 32, 42).map_err(|e| e.to_string())?;
            let (_, _, model) = match_classical(&s).map_err(|e| e.to_string())?;
            let (t, path) = default_crossval_path(&pl.entry.probe);
            cross_validate(&pl, &model, t, &path, 256).map_err(|e| e.to_string())
        })()
        .unwrap_or(f64::INFINITY);
        rows.push((id.to_string(), v));
    }
    worst("reduced-ODE residual on 256-point trace", rows, 1e-6)
}

fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..3) {
            0 => Expr::x(),
            1 => Expr::t(),
            _ => Expr::real(rng.gen_range(-3..=3) as f64 / 2.0),
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..8) {
        0 => a.add(&random_expr(rng, depth - 1)),
        1 => a.sub(&random_expr(rng, depth - 1)),
        2 => a.mul(&random_expr(rng, depth - 1)),
        3 => {
            let b = random_expr(rng, depth - 1);
            a.div(&b.mul(&b).add(&Expr::real(3.0)))
        }
        4 => a.powi(rng.gen_range(2..4)),
        5 => a.mul(&Expr::real(0.3)).exp(),
        6 => a.mul(&a).add(&Expr::real(4.0)).sqrt(),
        _ => a.mul(&a).add(&Expr::real(4.0)).ln(),
    }
}

fn fd4(f: impl Fn(C64) -> Option<C64>, z: C64, h: f64) -> Option<C64> {
    let v = [f(z - 2.0 * h)?, f(z - h)?, f(z + h)?, f(z + 2.0 * h)?];
    Some((v[0] - v[1] * 8.0 + v[2] * 8.0 - v[3]) / (12.0 * h))
}

fn derivative_suite() -> (bool, String) {
    let mut rng = rng_for(42, "derivative", 0);
    let (mut checked, mut skipped, mut max) = (0, 0, 0.0_f64);
    while checked < 100 {
        let e = random_expr(&mut rng, 4);
        let x = C64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.3..0.3));
        let t = C64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.3..0.3));
        if !matches!(e.at(x, t), Ok(v) if v.norm() < 1e4) {
            skipped += 1;
            continue;
        }
        let mut err = 0.0_f64;
        let mut settled = true;
        for var in [Var::X, Var::T] {
            let f = |z: C64| match var {
                Var::X => e.at(z, t).ok(),
                Var::T => e.at(x, z).ok(),
            };
            let z = if var == Var::X { x } else { t };
            let (Some(a), Some(b)) = (fd4(f, z, 1e-3), fd4(f, z, 5e-4)) else {
                settled = false;
                break;
            };
            if (a - b).norm() > 1e-8 * (1.0 + a.norm()) {
                settled = false;
                break;
            }
            let d = e.diff(var).at(x, t).unwrap_or(C64::new(f64::NAN, 0.0));
            err = err.max((d - b).norm() / (1.0 + d.norm()));
        }
        if !settled {
            skipped += 1;
            continue;
        }
        max = max.max(err);
        checked += 1;
    }
    (max <= 1e-6, format!("derivative vs FD: 100 expressions, max rel {max:.2e} ({skipped} unsettled draws redrawn)"))
}

fn reversal_suite() -> (bool, f64) {
    let mut rng = rng_for(42, "reversal", 0);
    let mut max = 0.0_f64;
    for _ in 0..50 {
        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let e = Expr::parse(&format!("{} + {}*x + {}*x^2 + exp({}*x)", c[0], c[1], c[2], c[3])).unwrap();
        let pts: Vec<C64> = (0..3).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let p = Path::new(pts).unwrap();
        let f = integrate_along_path(&e, Var::X, &p, &Binding::new()).unwrap();
        let b = integrate_along_path(&e, Var::X, &p.reversed(), &Binding::new()).unwrap();
        max = max.max((f + b).norm() / (1.0 + f.norm()));
    }
    let inv = Expr::parse("1/x").unwrap();
    let (one, two) = (C64::new(1.0, 0.0), C64::new(2.0, 0.0));
    let s = integrate_along_path(&inv, Var::X, &Path::segment(one, two), &Binding::new()).unwrap();
    let bent = Path::new(vec![one, C64::new(1.5, 0.7), two]).unwrap();
    let v = integrate_along_path(&inv, Var::X, &bent, &Binding::new()).unwrap();
    max = max.max((s - v).norm());
    (max <= 1e-11, max)
}

fn first_integral_suite() -> (bool, f64) {
    let mut max = 0.0_f64;
    for id in list_entries() {
        let Ok(pl) = pipeline(id) else { return (false, f64::INFINITY) };
        let d = pl.decomposition();
        let mut rng = rng_for(42, id, 7);
        for _ in 0..16 {
            let x = pl.entry.probe.random_x(&mut rng);
            let t = pl.entry.probe.random_t(&mut rng);
            let tau = |x: C64, t: C64| pl.reduced.tau_at(x, t).ok();
            let (Some(tx), Some(tt)) = (fd4(|z| tau(z, t), x, 1e-3), fd4(|z| tau(x, z), t, 1e-3)) else {
                return (false, f64::INFINITY);
            };
            let b = Binding::at(x, t);
            let speed = d.f.eval(&b).unwrap() + t * d.h.eval(&b).unwrap();
            max = max.max((tx - speed * tt).norm());
        }
    }
    (max <= 1e-7, max)
}

fn covariance_suite() -> (bool, f64) {
    let mut max = 0.0_f64;
    for id in list_entries() {
        let base = pipeline(id).unwrap();
        let pb = base.entry.probe;
        let cfg = Config { basepoint: Some(pb.x_at(0.7, 0.6)), ..Config::default() };
        let Ok(moved) = prepare(id, &cfg) else { return (false, f64::INFINITY) };
        let pts = [(0.1, 0.2), (0.9, 0.4), (0.5, 0.9), (0.3, 0.6)].map(|(u, v)| (pb.x_at(u, v), pb.t_at(v, u)));
        let a: Vec<C64> = pts.iter().map(|&(x, t)| base.reduced.tau_at(x, t).unwrap()).collect();
        let b: Vec<C64> = pts.iter().map(|&(x, t)| moved.reduced.tau_at(x, t).unwrap()).collect();
        let n = 3.0;
        let (sa, sb) = (a[..3].iter().sum::<C64>(), b[..3].iter().sum::<C64>());
        let saa: C64 = a[..3].iter().map(|z| z * z).sum();
        let sab: C64 = a[..3].iter().zip(&b[..3]).map(|(p, q)| p * q).sum();
        let c = (sab * n - sa * sb) / (saa * n - sa * sa);
        let d = (sb - c * sa) / n;
        for k in 0..4 {
            max = max.max((c * a[k] + d - b[k]).norm() / (1.0 + b[k].norm()));
        }
        let (r0, r1) = (full_report(id, &Config::default()).unwrap(), full_report(id, &cfg).unwrap());
        if r0.passed != r1.passed || r0.matched.kind() != r1.matched.kind() {
            return (false, max);
        }
    }
    (max <= 1e-9, max)
}

fn cli_determinism() -> (bool, String) {
    let bin = env!("CARGO_BIN_EXE_fuchs-reduce");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut stdouts = Vec::new();
    for d in &dirs {
        let out = d.path().to_str().unwrap();
        let v = Command::new(bin).args(["verify", "--all", "--seed", "42", "--out-dir", out]).output().unwrap();
        let csv = d.path().join("PV.y_lin.csv");
        let s = Command::new(bin)
            .args(["sample", "PV.y_lin", "--seed", "42", "--out", csv.to_str().unwrap()])
            .output()
            .unwrap();
        let r = Command::new(bin).args(["reduce", "PIII.y1", "--seed", "42"]).output().unwrap();
        if v.status.code() != Some(0) || s.status.code() != Some(0) || r.status.code() != Some(0) {
            return (false, "CLI run did not exit 0".into());
        }
        stdouts.push((v.stdout, r.stdout));
    }
    let mut files = 0;
    for entry in std::fs::read_dir(dirs[0].path()).unwrap() {
        let name = entry.unwrap().file_name();
        let (a, b) = (std::fs::read(dirs[0].path().join(&name)), std::fs::read(dirs[1].path().join(&name)));
        match (a, b) {
            (Ok(a), Ok(b)) if a == b => files += 1,
            _ => return (false, format!("{} differs", name.to_string_lossy())),
        }
    }
    let same = stdouts[0] == stdouts[1];
    (same && files == 9, format!("{files} files and stdout byte-identical across two seed-42 runs"))
}

fn properties() -> Outcome {
    let (d_ok, d_msg) = derivative_suite();
    let (r_ok, r_max) = reversal_suite();
    let (f_ok, f_max) = first_integral_suite();
    let (c_ok, c_max) = covariance_suite();
    let (x_ok, x_msg) = cli_determinism();
    let msg = format!(
        "{d_msg}; path reversal/independence {r_max:.2e} vs 1e-11; first integral {f_max:.2e} vs 1e-7 (16 points/entry); \
         basepoint covariance {c_max:.2e} vs 1e-9; {x_msg}"
    );
    (d_ok && r_ok && f_ok && c_ok && x_ok, msg)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("integrability", integrability),
        ("flow consistency", flow),
        ("decomposition reproduction", decomposition),
        ("t-independence", fuchs_property),
        ("classical targets", targets),
        ("cross-validation", cross_validation),
        ("property suites", properties),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (ok, msg) = run();
        failed += usize::from(!ok);
        println!("acceptance {} {:<27} {}  {}", k + 1, name, if ok { "PASS" } else { "FAIL" }, msg);
    }
    println!("acceptance: {}/7 passed in {:.1}s", 7 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
