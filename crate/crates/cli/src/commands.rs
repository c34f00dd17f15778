use std::path::{Path, PathBuf};

use cechlab_core::connection::{chern_number, gauge_residual, SampledBundle};
use cechlab_core::lifting::{obstruction, strict_cocycle_failure, trivialize};
use cechlab_core::schwinger::{
    cocycle_identity_defect, defect_curvature, dirac_defect, jacobi_defect, scale, schwinger_residue, schwinger_trace,
};
use cechlab_core::selfcheck::{self, VerifyOptions};
use cechlab_core::{
    CentralElement, Cochain, CoefficientKind, Error, Involution, LiftChoice, LoopPolynomial, Nerve, Trivialization, TwistedLocalSystem,
};
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::input::{self, CochainSpec, ProblemFile};
use crate::report::{complex, num, Report};
use crate::{Failure, Globals};

fn rows<I: IntoIterator<Item = String>>(it: I) -> Value {
    Value::Array(it.into_iter().map(Value::from).collect())
}

fn simplex_rows<T: Copy + Default>(nerve: &Nerve, c: &Cochain<T>, show: impl Fn(&T) -> String) -> Value {
    rows(nerve.simplices(c.degree()).iter().zip(c.values()).map(|(s, v)| format!("{s:?} {}", show(v))))
}

fn order_text(order: Option<u64>) -> String {
    match order {
        Some(n) => format!("order {n}"),
        None => "infinite order".into(),
    }
}

pub fn cohomology(g: &Globals, path: &Path, degree: Option<usize>, report: &mut Report) -> Result<(), Failure> {
    let file = ProblemFile::load(path, &mut report.inputs)?;
    let problem = input::load_system(&file, &mut report.inputs)?;
    let sys = &problem.system;
    let nerve = sys.nerve();
    let counts: Vec<String> = (0..=nerve.dimension()).map(|k| nerve.count(k).to_string()).collect();
    report.put("nerve", format!("{} vertices, simplex counts [{}]", nerve.vertex_count(), counts.join(", ")));
    let involution = match sys.coeff().involution {
        Involution::Identity => "identity",
        Involution::Negation => "negation",
    };
    report.put("coefficients", format!("{} ({involution})", sys.coeff().kind));
    report.put("twisted edges", sys.twist().iter().filter(|&&e| e < 0).count().to_string());
    if sys.coeff().kind != CoefficientKind::CircleRmodZ {
        let degrees: Vec<usize> = match degree {
            Some(k) => vec![k],
            None => (0..=nerve.dimension()).collect(),
        };
        for k in degrees {
            report.put(format!("H^{k}"), sys.cohomology(k)?.to_string());
        }
    } else if degree.is_some() {
        return Err(Failure::Input("R/Z coefficients: cohomology groups are not computed, supply a cocycle".into()));
    }
    if let Some(spec) = problem.cocycle {
        analyse_cocycle(g, sys, spec, report)?;
    }
    Ok(())
}

fn integral_values(spec: &CochainSpec) -> Result<Vec<i64>, Failure> {
    spec.values
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && v.abs() < 1e15 {
                Ok(v as i64)
            } else {
                Err(Failure::Input(format!("cocycle value {v} is not an integer")))
            }
        })
        .collect()
}

fn analyse_cocycle(g: &Globals, sys: &TwistedLocalSystem, spec: CochainSpec, report: &mut Report) -> Result<(), Failure> {
    let nerve = sys.nerve();
    report.put("cocycle degree", spec.degree.to_string());
    match sys.coeff().kind {
        CoefficientKind::Integers | CoefficientKind::IntegersMod(_) => {
            let z = Cochain::new(nerve, spec.degree, integral_values(&spec)?)?;
            let z = sys.reduce(&z);
            match sys.is_coboundary_int(&z)? {
                cechlab_core::CoboundaryOutcome::Coboundary(b) => {
                    report.put("class", "TRIVIAL");
                    report.put("primitive", simplex_rows(nerve, &b, |v| v.to_string()));
                    let ok = sys.coboundary_int(&b)? == z;
                    report.verdict("primitive reproduces the cocycle", ok, "exact");
                }
                cechlab_core::CoboundaryOutcome::NonTrivial(cert) => {
                    report.put("class", format!("NONTRIVIAL ({})", order_text(sys.class_order(&z)?)));
                    report.put("certificate", cert.to_string());
                    let ok = cert.verify(sys, &z.map(|v| v as f64))?;
                    report.verdict("certificate annihilates coboundaries", ok, "exact");
                }
            }
        }
        CoefficientKind::Reals => {
            let z = Cochain::new(nerve, spec.degree, spec.values)?;
            let tol = g.tolerance.unwrap_or(sys.coeff().tolerance);
            match sys.is_coboundary_real(&z)? {
                cechlab_core::CoboundaryOutcome::Coboundary(b) => {
                    report.put("class", "TRIVIAL");
                    report.put("primitive", simplex_rows(nerve, &b, |v| num(*v)));
                    let db = sys.coboundary_real(&b)?;
                    let dev = db.values().iter().zip(z.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    report.verdict("primitive reproduces the cocycle", dev <= tol, format!("max deviation {}", num(dev)));
                }
                cechlab_core::CoboundaryOutcome::NonTrivial(cert) => {
                    report.put("class", "NONTRIVIAL");
                    report.put("certificate", cert.to_string());
                    let ok = cert.verify(sys, &z)?;
                    report.verdict("certificate annihilates coboundaries", ok, format!("tolerance {}", num(tol)));
                }
            }
        }
        CoefficientKind::CircleRmodZ => {
            let a = Cochain::new(nerve, spec.degree, spec.values)?;
            let dd = sys.bockstein_dd(&a)?;
            report.put("bockstein cocycle", simplex_rows(nerve, &dd.cocycle, |v| v.to_string()));
            let verdict = if dd.is_trivial() { "TRIVIAL".to_string() } else { format!("NONTRIVIAL ({})", order_text(dd.order)) };
            report.put("bockstein class", verdict);
            if let Some(cert) = dd.outcome.certificate() {
                report.put("bockstein certificate", cert.to_string());
            }
            match sys.u1_primitive(&a)? {
                Some(beta) => {
                    report.put("class", "TRIVIAL");
                    report.put("primitive", simplex_rows(nerve, &beta, |v| num(*v)));
                }
                None => report.put("class", "NONTRIVIAL"),
            }
        }
    }
    Ok(())
}

pub fn obstruction_cmd(
    transition: &Path,
    extension: &Path,
    lifts: Option<&PathBuf>,
    report: &mut Report,
) -> Result<(), Failure> {
    let tfile = ProblemFile::load(transition, &mut report.inputs)?;
    let td = input::load_transition(&tfile, &mut report.inputs)?;
    let efile = ProblemFile::load(extension, &mut report.inputs)?;
    let ext = input::load_extension(&efile)?;
    if td.group().table() != ext.base.table() || td.sigma() != &ext.base_sigma {
        return Err(Error::GroupMismatch("transition data and extension quotient differ".into()).into());
    }
    let lifts = match lifts {
        Some(p) => {
            let lf = ProblemFile::load(p, &mut report.inputs)?;
            let v = input::load_lifts(&lf)?;
            if v.len() != td.nerve().count(1) {
                return Err(Failure::Input(format!("{}: {} lifts for {} edges", p.display(), v.len(), td.nerve().count(1))));
            }
            report.put("lifts", "from file");
            LiftChoice::new(v)
        }
        None => {
            report.put("lifts", "section");
            LiftChoice::via_section(&td, &ext)
        }
    };
    let check = td.check_twisted_cocycle();
    report.put("twisted cocycle triangles", check.triangles.to_string());
    if let Some(f) = &check.failure {
        report.verdict("twisted cocycle condition", false, format!("fails on {:?}", f.simplex));
        return Err(Error::NotTwistedCocycle(f.simplex.clone()).into());
    }
    let a = obstruction(&td, &ext, &lifts)?;
    let nerve = td.nerve();
    report.put("obstruction", simplex_rows(nerve, &a.cochain, |v| v.to_string()));
    report.put("alternate ordering identity", if a.alternate_form_holds { "holds" } else { "fails" });
    report.verdict("twisted 2-cocycle identity", true, format!("checked on {} tetrahedra", nerve.count(3)));
    match trivialize(&td, &ext, &lifts, &a)? {
        Trivialization::Lifts { lifts: fixed, correction } => {
            report.put("class", "TRIVIAL");
            report.put("correction", simplex_rows(nerve, &correction, |v| v.to_string()));
            report.put("lifted cocycle", rows(nerve.simplices(1).iter().zip(&fixed.lifts).map(|(e, h)| format!("{e:?} {h}"))));
            let failure = strict_cocycle_failure(&td, &ext, &fixed);
            let detail = match &failure {
                None => format!("{} triangles", nerve.count(2)),
                Some(f) => format!("fails on {:?}", f.simplex),
            };
            report.verdict("lifted cocycle is strict", failure.is_none(), detail);
        }
        Trivialization::NonTrivial(cert) => {
            report.put("class", format!("NONTRIVIAL ({})", order_text(a.system.class_order(&a.cochain)?)));
            report.put("certificate", cert.to_string());
            let ok = cert.verify(&a.system, &a.cochain.map(|v| v as f64))?;
            report.verdict("certificate annihilates coboundaries", ok, "exact");
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Trace,
    Residue,
    Identity,
    Jacobi,
    Defect,
    Curvature,
}

impl Mode {
    fn arity(self) -> usize {
        match self {
            Mode::Defect => 1,
            Mode::Trace | Mode::Residue | Mode::Curvature => 2,
            Mode::Identity | Mode::Jacobi => 3,
        }
    }
}

fn max_abs(m: &cechlab_core::CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn schwinger(
    g: &Globals,
    files: &[PathBuf],
    mode: Mode,
    allow_under_truncated: bool,
    report: &mut Report,
) -> Result<(), Failure> {
    if files.len() != mode.arity() {
        return Err(Failure::Input(format!("{mode:?} mode takes {} loop files, got {}", mode.arity(), files.len()).to_lowercase()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut loops = Vec::new();
    for p in files {
        let f = ProblemFile::load(p, &mut report.inputs)?;
        loops.push(input::load_loop(&f, &mut rng)?);
    }
    if loops.iter().any(|l| l.lp.size() != loops[0].lp.size()) {
        return Err(Failure::Input("loops have different matrix sizes".into()));
    }
    let lps: Vec<&LoopPolynomial> = loops.iter().map(|l| &l.lp).collect();
    let band = lps.iter().map(|l| l.band()).max().unwrap_or(0);
    report.put("matrix size", lps[0].size().to_string());
    report.put("bands", lps.iter().map(|l| l.band().to_string()).collect::<Vec<_>>().join(", "));
    let s = scale(&lps);
    let tol = g.tolerance.unwrap_or(if mode == Mode::Defect { 1e-12 } else { 1e-10 });
    let required = match mode {
        Mode::Trace | Mode::Residue | Mode::Identity | Mode::Jacobi => band.max(1),
        Mode::Defect => band + 1,
        Mode::Curvature => 2 * band + 1,
    };
    let k = g.truncation.unwrap_or(required);
    match mode {
        Mode::Trace | Mode::Residue => {
            let (x, y) = (lps[0], lps[1]);
            let residue = schwinger_residue(x, y);
            report.put("residue", complex(residue));
            if mode == Mode::Trace {
                let mut table = Vec::new();
                let mut worst: f64 = 0.0;
                for kk in [k, k + 1, k + 5] {
                    let t = schwinger_trace(x, y, kk, allow_under_truncated)?;
                    let dev = (t - residue).norm();
                    if kk >= required {
                        worst = worst.max(dev);
                    }
                    table.push(format!("K={kk} trace={} |trace-residue|={}", complex(t), num(dev)));
                }
                report.put("truncation", k.to_string());
                report.put("convergence", rows(table));
                if k < required {
                    report.put("note", format!("K={k} is below the exactness threshold {required}"));
                }
                report.verdict("trace equals residue", worst <= tol * s, format!("max deviation {}, threshold {}", num(worst), num(tol * s)));
            }
        }
        Mode::Identity => {
            let d = cocycle_identity_defect(lps[0], lps[1], lps[2])?;
            report.put("cyclic defect", num(d));
            report.verdict("cocycle identity", d <= tol * s, format!("defect {}, threshold {}", num(d), num(tol * s)));
        }
        Mode::Jacobi => {
            let e: Vec<CentralElement> = loops.iter().map(|l| CentralElement::new(l.lp.clone(), l.central)).collect();
            let d = jacobi_defect(&e[0], &e[1], &e[2])?;
            report.put("jacobi defect", num(d));
            report.verdict("Jacobi identity", d <= tol * s, format!("defect {}, threshold {}", num(d), num(tol * s)));
        }
        Mode::Defect => {
            let mut table = Vec::new();
            let mut worst: f64 = 0.0;
            for kk in [k, k + 1, k + 5] {
                let d = dirac_defect(lps[0], kk)?;
                worst = worst.max(d.interior_deviation);
                table.push(format!(
                    "K={kk} window=[{}, {}] |[D,M_X]|={} interior deviation={}",
                    d.window.lo,
                    d.window.hi,
                    num(max_abs(&d.computed)),
                    num(d.interior_deviation)
                ));
            }
            report.put("truncation", k.to_string());
            report.put("convergence", rows(table));
            report.verdict("[D, M_X] = -i M_X'", worst <= tol, format!("max interior deviation {}", num(worst)));
        }
        Mode::Curvature => {
            let (x, y) = (lps[0], lps[1]);
            let mut table = Vec::new();
            let mut asym: f64 = 0.0;
            for kk in [k, k + 1, k + 5] {
                let f = defect_curvature(x, y, kk)?;
                let r = defect_curvature(y, x, kk)?;
                asym = asym.max(max_abs(&(f.full.clone() + r.full)));
                table.push(format!(
                    "K={kk} window=[{}, {}] |F| interior={}",
                    f.window.lo,
                    f.window.hi,
                    num(f.interior().norm())
                ));
            }
            report.put("truncation", k.to_string());
            report.put("convergence", rows(table));
            report.verdict("curvature is alternating", asym <= tol * s, format!("max |F(X,Y) + F(Y,X)| {}", num(asym)));
        }
    }
    Ok(())
}

fn residual_rows(bundle: &SampledBundle, label: &str, out: &mut Vec<String>) -> Result<(f64, Option<[f64; 2]>, usize), Failure> {
    let mut worst = (0.0, None, 0);
    let charts = bundle.model.chart_count();
    for k in 0..charts {
        for l in 0..charts {
            if k == l {
                continue;
            }
            let r = gauge_residual(bundle, k, l)?;
            out.push(format!(
                "{label} {k}->{l} points={} connection={} curvature={}",
                r.points,
                num(r.connection),
                num(r.curvature)
            ));
            if r.max() > worst.0 {
                worst = (r.max(), r.worst, l);
            }
        }
    }
    Ok(worst)
}

pub fn chern(g: &Globals, path: &Path, report: &mut Report) -> Result<(), Failure> {
    let file = ProblemFile::load(path, &mut report.inputs)?;
    let problem = input::load_bundle(&file)?;
    let mut model = problem.model;
    if let Some(n) = g.grid {
        model = model.with_resolution(n)?;
    }
    let threshold = g.tolerance.unwrap_or(0.1);
    report.put("base", format!("{:?}", model.base).to_lowercase());
    report.put("transition", format!("{:?}", model.transition));
    report.put("profile", format!("{} {}", model.profile.inner, model.profile.outer));
    report.put("resolution", model.resolution.to_string());
    let sample = |m: &cechlab_core::connection::BundleModel| -> Result<SampledBundle, Failure> {
        let mut b = m.sample()?;
        for c in &problem.corrupt {
            let p = b.nearest_sample(c.chart, c.point);
            b.corrupt_transition(c.chart, c.from, p, c.angle);
        }
        Ok(b)
    };
    let coarse = sample(&model)?;
    if model.chart_count() > 1 {
        let fine_model = model.with_resolution(2 * model.resolution - 1)?;
        let fine = sample(&fine_model)?;
        let mut table = Vec::new();
        let (r1, worst, chart) = residual_rows(&coarse, &format!("n={}", model.resolution), &mut table)?;
        let (r2, _, _) = residual_rows(&fine, &format!("n={}", fine_model.resolution), &mut table)?;
        report.put("gauge residuals", rows(table));
        report.put("refinement ratio", if r2 > 0.0 { num(r1 / r2) } else { "exact".into() });
        let location = match worst {
            Some([x, y]) => format!(", worst at ({:.4}, {:.4}) on chart {chart}", x, y),
            None => String::new(),
        };
        report.verdict("gauge residual", r1 <= threshold, format!("max {}, threshold {}{location}", num(r1), num(threshold)));
    }
    if model.dimension() == 2 {
        let c = chern_number(&coarse)?;
        let nearest = c.round();
        report.put("chern", format!("{c:.6}"));
        report.put("chern estimate", num(c));
        report.put("nearest", format!("{}", nearest as i64));
        report.verdict("integrality", (c - nearest).abs() <= 1e-2, format!("distance to {} is {}", nearest as i64, num((c - nearest).abs())));
    } else {
        report.put("chern", "not defined on a one-dimensional base");
    }
    Ok(())
}

pub fn verify(g: &Globals, suites: &[String], report: &mut Report) -> Result<(), Failure> {
    let mut opts = VerifyOptions { seed: g.seed, ..VerifyOptions::default() };
    if let Some(t) = g.tolerance {
        opts.tolerance = t;
    }
    if let Some(n) = g.grid {
        opts.grid = n;
    }
    for s in suites {
        if !selfcheck::SUITES.contains(&s.as_str()) {
            return Err(Failure::Input(format!("unknown suite {s:?}; expected one of {}", selfcheck::SUITES.join(", "))));
        }
    }
    let names: Vec<&str> = suites.iter().map(String::as_str).collect();
    report.put("seed", g.seed.to_string());
    report.put("tolerance", num(opts.tolerance));
    report.put("grid", opts.grid.to_string());
    for c in selfcheck::run(&opts, &names)? {
        report.verdict(format!("{}/{}", c.suite, c.name), c.passed, c.detail);
    }
    Ok(())
}
