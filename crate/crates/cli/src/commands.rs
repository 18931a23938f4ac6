use crate::output::{params_hash, Output, RunManifest, Versions};
use crate::*;
use num_complex::Complex64 as C64;
use serde_json::{json, Value};
use std::path::Path;
use wedge_rbm::bvp::{check_boundary_condition, fredholm_solve_at, g_matrix, nystrom_solve_at, phi_at_infinity, scan_cut, FredholmSolution};
use wedge_rbm::estimate::{estimate_density, DensityGrid, LRegion, LaplaceEstimate};
use wedge_rbm::feq::{check_feq_s1, check_feq_s2, check_feq_sum, s1_check_points, sum_check_points, summarize, Estimates, ResidualReport};
use wedge_rbm::kernel::{check_automorphy, hyperbola, BranchFamily, KernelId, Variable};
use wedge_rbm::simulate::{simulate_ensemble, simulate_path, PathRecord, SimConfig};
use wedge_rbm::symmetric::{analytic_bar_residual, classify, hp_plus_points, scalar_bvp_condition, search_remarkable_r, verify_remarkable, RemarkableDensity, FAMILY_TOL};
use wedge_rbm::{Error, ModelParams};

pub enum Fail {
    /// Bad input or a domain error from the library.
    Domain(String),
    /// The run finished but a statistical check failed.
    Stats,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Domain(e.to_string())
    }
}

impl From<String> for Fail {
    fn from(e: String) -> Self {
        Fail::Domain(e)
    }
}

type R<T> = Result<T, Fail>;

struct Ctx {
    g: Global,
    pr: ModelParams,
    raw: Value,
    out: Output,
}

pub fn run(cli: Cli, argv: Vec<String>) -> u8 {
    #[cfg(feature = "parallel")]
    if cli.global.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build_global();
    }
    let out = Output::new(cli.global.out_dir.clone(), cli.global.json);
    let loaded = match load_params(&cli.global, &cli.command) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let mut ctx = Ctx {
        g: cli.global.clone(),
        pr: loaded.0,
        raw: loaded.1,
        out,
    };
    let res = dispatch(&mut ctx, &cli.command);
    if !ctx.out.files.is_empty() {
        if let Err(msg) = write_manifest(&mut ctx, argv) {
            eprintln!("error: {msg}");
            return 2;
        }
    }
    match res {
        Ok(()) => 0,
        Err(Fail::Stats) => {
            eprintln!("statistical check failed: some |z| > 3");
            3
        }
        Err(Fail::Domain(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn write_manifest(ctx: &mut Ctx, argv: Vec<String>) -> Result<(), String> {
    let m = RunManifest {
        command_line: argv,
        params_hash: params_hash(&ctx.raw),
        params: ctx.raw.clone(),
        seed: ctx.g.seed,
        versions: Versions {
            wedge_cli: env!("CARGO_PKG_VERSION"),
            wedge_rbm: env!("CARGO_PKG_VERSION"),
        },
        wall_time_s: ctx.out.elapsed(),
        outputs: ctx.out.files.iter().map(|p| p.display().to_string()).collect(),
    };
    let s = serde_json::to_string_pretty(&m).map_err(|e| e.to_string())?;
    let path = ctx.out.out_dir.join("manifest.json");
    crate::output::write_atomic(&path, s.as_bytes()).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// The symmetric commands default to a symmetric configuration, and the
/// closed-form density to its reflection parameter.
fn default_params(cmd: &Command) -> Result<ModelParams, String> {
    let remarkable = || -> Result<ModelParams, String> {
        let r = search_remarkable_r(1.0, 0.0, -1.0).map_err(|e| e.to_string())?.r;
        ModelParams::symmetric(1.0, 0.0, -1.0, r).map_err(|e| e.to_string())
    };
    match cmd {
        Command::Symmetric {
            cmd: SymmetricCmd::Density { .. } | SymmetricCmd::VerifyRemarkable { .. },
        } => remarkable(),
        Command::Figure(f) if f.id == FigureId::RemarkableDensity => remarkable(),
        Command::Symmetric { .. }
        | Command::Kernel {
            cmd: KernelCmd::Automorphy { .. },
        } => ModelParams::symmetric(1.0, 0.0, -1.0, 2.0).map_err(|e| e.to_string()),
        _ => Ok(ModelParams::default()),
    }
}

fn load_params(g: &Global, cmd: &Command) -> Result<(ModelParams, Value), String> {
    match &g.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let raw: Value = serde_json::from_str(&text).map_err(|e| format!("parameter file: {e}"))?;
            let pr = ModelParams::from_json(&text).map_err(|e| e.to_string())?;
            Ok((pr, raw))
        }
        None => {
            let pr = default_params(cmd)?;
            Ok((pr, serde_json::to_value(pr).expect("params serialize")))
        }
    }
}

fn dispatch(ctx: &mut Ctx, cmd: &Command) -> R<()> {
    match cmd {
        Command::Params { cmd: ParamsCmd::Check } => params_check(ctx),
        Command::Kernel { cmd } => kernel(ctx, cmd),
        Command::Simulate(a) => simulate(ctx, a),
        Command::Estimate { cmd } => estimate(ctx, cmd),
        Command::Check {
            cmd: CheckCmd::Feq {
                points,
                sum,
                equation,
                out,
                mc,
            },
        } => check_feq(ctx, points, if *sum { Equation::Sum } else { *equation }, out.as_deref(), mc),
        Command::Bvp { cmd } => bvp(ctx, cmd),
        Command::Symmetric { cmd } => symmetric(ctx, cmd),
        Command::Figure(f) => figure(ctx, f),
    }
}

fn parse_c(s: &str) -> R<C64> {
    s.trim()
        .parse::<C64>()
        .map_err(|_| Fail::Domain(format!("not a complex number: {s:?}")))
}

fn parse_list(s: &str) -> R<Vec<C64>> {
    s.split(',').map(parse_c).collect()
}

fn parse_reals(s: &str, n: usize) -> R<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Fail::Domain(format!("expected {n} comma-separated numbers: {s:?}")))?;
    if v.len() != n {
        return Err(Fail::Domain(format!("expected {n} comma-separated numbers: {s:?}")));
    }
    Ok(v)
}

fn kernel_id(k: KernelArg) -> KernelId {
    match k {
        KernelArg::U => KernelId::U,
        KernelArg::V => KernelId::V,
        KernelArg::Sym => KernelId::Sym,
    }
}

fn variable(v: VariableArg) -> Variable {
    match v {
        VariableArg::P => Variable::POverQ,
        VariableArg::Q => Variable::QOverP,
    }
}

fn sim_config(g: &Global, mc: &Mc) -> SimConfig {
    SimConfig {
        step: mc.step,
        horizon: mc.horizon,
        burn_in: mc.burn_in,
        seed: g.seed,
        replicas: mc.replicas,
        record_every: ((1e-2 / mc.step).round() as usize).max(1),
        ..SimConfig::default()
    }
}

fn ensemble(ctx: &Ctx, mc: &Mc) -> R<Vec<PathRecord>> {
    Ok(simulate_ensemble(&ctx.pr, &sim_config(&ctx.g, mc))?)
}

fn params_check(ctx: &mut Ctx) -> R<()> {
    let pr = ctx.pr;
    let rec = pr.recurrence();
    let report = json!({
        "params": pr,
        "params_hash": params_hash(&ctx.raw),
        "theta": pr.theta(),
        "det": pr.det(),
        "recurrence": rec,
        "symmetric": pr.is_symmetric(),
        "wedge_angles": pr.wedge_angles().ok(),
    });
    ctx.out.emit(&report);
    if rec.recurrent {
        Ok(())
    } else {
        Err(Error::NonRecurrent.into())
    }
}

fn kernel(ctx: &mut Ctx, cmd: &KernelCmd) -> R<()> {
    let pr = ctx.pr;
    match cmd {
        KernelCmd::BranchPoints { kernel, variable: v } => {
            let fam = BranchFamily::new(&pr, kernel_id(*kernel), variable(*v))?;
            ctx.out.emit(&fam);
        }
        KernelCmd::Eval {
            kernel,
            variable: v,
            grid,
            out,
        } => {
            let g = parse_reals(grid, 5)?;
            let n = g[4] as usize;
            if n < 2 || g[4].fract() != 0.0 {
                return Err(Fail::Domain("grid size must be an integer >= 2".into()));
            }
            let fam = BranchFamily::new(&pr, kernel_id(*kernel), variable(*v))?;
            let at = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let mut rows = Vec::with_capacity(n * n);
            let mut skipped = 0;
            for i in 0..n {
                for j in 0..n {
                    let w = C64::new(at(g[0], g[1], i), at(g[2], g[3], j));
                    match fam.eval_both(w) {
                        Ok([p1, p2]) => rows.push(vec![w.re, w.im, p1.re, p1.im, p2.re, p2.im]),
                        Err(Error::OnCut) => skipped += 1,
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            let path = ctx
                .out
                .write_csv(out, &["arg_re", "arg_im", "p1_re", "p1_im", "p2_re", "p2_im"], &rows)?;
            ctx.out.emit(&json!({"file": path, "rows": rows.len(), "skipped_on_cut": skipped}));
        }
        KernelCmd::Hyperbola { kernel } => {
            let h = hyperbola(&pr, kernel_id(*kernel), Variable::POverQ)?;
            ctx.out.emit(&json!({
                "hyperbola": h,
                "center_x": h.center_x(),
                "canonical": h.canonical().ok(),
                "vertices": h.vertices().ok(),
            }));
        }
        KernelCmd::Automorphy { point } => {
            let rep = check_automorphy(&pr, parse_c(point)?)?;
            ctx.out.emit(&json!({"report": rep, "consistent": rep.consistent()}));
        }
    }
    Ok(())
}

fn simulate(ctx: &mut Ctx, a: &SimulateArgs) -> R<()> {
    let start = parse_reals(&a.start, 2)?;
    if a.steps == 0 {
        return Err(Fail::Domain("steps must be positive".into()));
    }
    let cfg = SimConfig {
        step: a.step,
        horizon: a.steps as f64 * a.step,
        burn_in: 0.0,
        seed: ctx.g.seed,
        replicas: 1,
        start: [start[0], start[1]],
        record_every: 1,
        ..SimConfig::default()
    };
    let path = simulate_path(&ctx.pr, &cfg, 0)?;
    let mut dl = vec![[0.0; 2]; path.states.len()];
    for e in &path.events {
        dl[e.step as usize] = e.dl;
    }
    let rows: Vec<[f64; 5]> = path
        .states
        .iter()
        .zip(&dl)
        .enumerate()
        .map(|(k, (z, d))| [k as f64 * a.step, z[0], z[1], d[0], d[1]])
        .collect();
    let file = match a.format {
        TrajFormat::Csv => {
            let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
            ctx.out.write_csv(&a.out, &["t", "z1", "z2", "dL1", "dL2"], &rows)?
        }
        TrajFormat::Raw => {
            let bytes: Vec<u8> = rows.iter().flatten().flat_map(|v| v.to_le_bytes()).collect();
            ctx.out.write(&a.out, &bytes)?
        }
    };
    ctx.out.emit(&json!({
        "file": file,
        "steps": path.n_steps,
        "rows": rows.len(),
        "local_time": path.lt_total,
        "final_state": path.final_state(),
    }));
    Ok(())
}

fn estimate_json(target: &str, at: &[C64], e: &LaplaceEstimate) -> Value {
    json!({
        "target": target,
        "at": at.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        "value_re": e.value.re,
        "value_im": e.value.im,
        "se_re": e.se[0],
        "se_im": e.se[1],
    })
}

fn density_rows(grid: &DensityGrid) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(grid.n * grid.n);
    for i in 0..grid.n {
        for j in 0..grid.n {
            let k = i * grid.n + j;
            rows.push(vec![grid.center(i), grid.center(j), grid.values[k], grid.se[k]]);
        }
    }
    rows
}

fn mc_density(ctx: &Ctx, mc: &Mc, lo: f64, hi: f64, cells: usize) -> R<DensityGrid> {
    if !(hi > lo) || cells == 0 {
        return Err(Fail::Domain("need lo < hi and a positive cell count".into()));
    }
    let paths = ensemble(ctx, mc)?;
    let est = Estimates::new(&ctx.pr, &paths);
    Ok(estimate_density(&ctx.pr, &paths, &est.cfg, lo, hi, cells)?)
}

fn estimate(ctx: &mut Ctx, cmd: &EstimateCmd) -> R<()> {
    match cmd {
        EstimateCmd::Laplace { target, at, mc } => {
            let pts = parse_list(at)?;
            let two = matches!(target, Target::L1 | Target::L2);
            if pts.len() != if two { 2 } else { 1 } {
                return Err(Fail::Domain(format!(
                    "--at takes {} for this target",
                    if two { "\"x,y\"" } else { "one value" }
                )));
            }
            let paths = ensemble(ctx, mc)?;
            let est = Estimates::new(&ctx.pr, &paths);
            let (name, e) = match target {
                Target::L1 => ("L1", est.l(LRegion::S1, pts[0], pts[1])?),
                Target::L2 => ("L2", est.l(LRegion::S2, pts[0], pts[1])?),
                Target::M => ("m", est.m(pts[0])?),
                Target::N => ("n", est.n(pts[0])?),
                Target::Ell1 => ("ell1", est.ell(1, pts[0])?),
                Target::Ell2 => ("ell2", est.ell(2, pts[0])?),
            };
            ctx.out.emit(&estimate_json(name, &pts, &e));
        }
        EstimateCmd::Density { out, lo, hi, cells, mc } => {
            let grid = mc_density(ctx, mc, *lo, *hi, *cells)?;
            let file = ctx.out.write_csv(out, &["z1", "z2", "density", "se"], &density_rows(&grid))?;
            ctx.out.emit(&json!({
                "file": file,
                "mass_in_window": grid.total_mass(),
                "mass_outside": grid.outside,
                "corner_densities": grid.corner,
            }));
        }
    }
    Ok(())
}

fn read_points(path: &Path) -> R<Vec<(C64, C64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("points file: {e}"))?;
    let bad = || Fail::Domain("points file must be an array of [x, y] pairs".into());
    let one = |c: &Value| -> R<C64> {
        match c {
            Value::Number(n) => Ok(C64::new(n.as_f64().ok_or_else(bad)?, 0.0)),
            Value::String(s) => parse_c(s),
            Value::Array(a) if a.len() == 2 => Ok(C64::new(
                a[0].as_f64().ok_or_else(bad)?,
                a[1].as_f64().ok_or_else(bad)?,
            )),
            _ => Err(bad()),
        }
    };
    v.as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|p| match p.as_array() {
            Some(a) if a.len() == 2 => Ok((one(&a[0])?, one(&a[1])?)),
            _ => Err(bad()),
        })
        .collect()
}

/// Emits the reports and fails with `Stats` if any is above threshold.
fn finish_checks(ctx: &mut Ctx, reports: &[ResidualReport], out: Option<&Path>, extra: Value) -> R<()> {
    let summary = summarize(reports);
    let mut body = json!({"summary": summary});
    if let Some(p) = out {
        let file = ctx.out.write_json(p, &reports)?;
        body["file"] = json!(file);
    } else {
        body["reports"] = json!(reports);
    }
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    ctx.out.emit(&body);
    if summary.passed == summary.n {
        Ok(())
    } else {
        Err(Fail::Stats)
    }
}

fn check_feq(ctx: &mut Ctx, points: &str, eq: Equation, out: Option<&Path>, mc: &Mc) -> R<()> {
    let seed = ctx.g.seed;
    let pts = match points.parse::<usize>() {
        Ok(n) => match eq {
            Equation::Sum => sum_check_points(n, seed, 2.0),
            Equation::S1 => s1_check_points(n, seed, 1.0),
            Equation::S2 => s1_check_points(n, seed, 1.0).into_iter().map(|(x, y)| (y, x)).collect(),
        },
        Err(_) => read_points(Path::new(points))?,
    };
    let paths = ensemble(ctx, mc)?;
    let est = Estimates::new(&ctx.pr, &paths);
    let pr = ctx.pr;
    let reports = pts
        .iter()
        .map(|&(x, y)| match eq {
            Equation::Sum => check_feq_sum(&pr, &est, x, y),
            Equation::S1 => check_feq_s1(&pr, &est, x, y),
            Equation::S2 => check_feq_s2(&pr, &est, x, y),
        })
        .collect::<Result<Vec<_>, _>>()?;
    drop(est);
    drop(paths);
    finish_checks(ctx, &reports, out, json!({}))
}

fn fredholm_csv(ctx: &mut Ctx, out: &Path, sol: &FredholmSolution) -> R<Value> {
    let rows: Vec<Vec<f64>> = sol
        .angles
        .iter()
        .zip(&sol.phi_minus)
        .map(|(a, v)| vec![*a, v[0].re, v[0].im, v[1].re, v[1].im])
        .collect();
    let file = ctx
        .out
        .write_csv(out, &["angle", "phi1_re", "phi1_im", "phi2_re", "phi2_im"], &rows)?;
    Ok(json!({
        "file": file,
        "nodes": sol.n(),
        "phi_inf": sol.phi_inf.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        "residual": sol.residual,
        "analyticity_defect": sol.analyticity_defect,
        "condition": sol.condition,
        "interior_mismatch": sol.interior_mismatch,
    }))
}

fn bvp(ctx: &mut Ctx, cmd: &BvpCmd) -> R<()> {
    let pr = ctx.pr;
    match cmd {
        BvpCmd::Gmatrix { q } => {
            let g = g_matrix(&pr, *q)?;
            let det = g.det();
            ctx.out.emit(&json!({
                "g": g,
                "det": [det.re, det.im],
                "det_closed_form": [g.det_closed_form().re, g.det_closed_form().im],
                "det_modulus": det.norm(),
            }));
            Ok(())
        }
        BvpCmd::Check { cut_points, spacing, mc } => {
            let paths = ensemble(ctx, mc)?;
            let est = Estimates::new(&pr, &paths);
            let (ok, bad) = scan_cut(&pr, &est, *cut_points, *spacing)?;
            if ok.is_empty() {
                ctx.out.emit(&json!({"admissible": ok, "outside_estimable_region": bad}));
                return Err(Fail::Domain("no cut point lies inside the estimable region".into()));
            }
            let mut reports = Vec::new();
            for &q in &ok {
                reports.extend(check_boundary_condition(&pr, &est, q)?);
            }
            drop(est);
            finish_checks(ctx, &reports, None, json!({"outside_estimable_region": bad}))
        }
        BvpCmd::Fredholm {
            nodes,
            out,
            phi_inf,
            allow_poles,
            mc,
        } => {
            let inf = match phi_inf {
                Some(s) => {
                    let v = parse_list(s)?;
                    if v.len() != 2 {
                        return Err(Fail::Domain("--phi-inf takes two values".into()));
                    }
                    [v[0], v[1]]
                }
                None => {
                    let paths = ensemble(ctx, mc)?;
                    let est = Estimates::new(&pr, &paths);
                    let e = phi_at_infinity(&pr, &est)?;
                    [e[0].value, e[1].value]
                }
            };
            let sol = if *allow_poles {
                nystrom_solve_at(&pr, *nodes, inf)?
            } else {
                fredholm_solve_at(&pr, *nodes, inf)?
            };
            let body = fredholm_csv(ctx, out, &sol)?;
            ctx.out.emit(&body);
            Ok(())
        }
    }
}

fn symmetric(ctx: &mut Ctx, cmd: &SymmetricCmd) -> R<()> {
    let pr = ctx.pr;
    pr.require_symmetric()?;
    match cmd {
        SymmetricCmd::Classify => {
            let rep = classify(&pr)?;
            ctx.out.emit(&json!({"classification": rep, "wedge_angles": pr.wedge_angles()?}));
            Ok(())
        }
        SymmetricCmd::BvpCheck { points, mc } => {
            let paths = ensemble(ctx, mc)?;
            let est = Estimates::new(&pr, &paths);
            let pts = hp_plus_points(&pr, &est.cfg, *points)?;
            let reports = pts
                .iter()
                .map(|&p| scalar_bvp_condition(&pr, &est, p))
                .collect::<Result<Vec<_>, _>>()?;
            drop(est);
            finish_checks(ctx, &reports, None, json!({}))
        }
        SymmetricCmd::Density { grid, lo, hi, cells } => {
            if !(hi > lo) || *cells < 2 {
                return Err(Fail::Domain("need lo < hi and at least two cells".into()));
            }
            let d = RemarkableDensity::for_params(&pr)?;
            let at = |k: usize| lo + (hi - lo) * k as f64 / (*cells - 1) as f64;
            let mut rows = Vec::with_capacity(cells * cells);
            for i in 0..*cells {
                for j in 0..*cells {
                    let z = [at(i), at(j)];
                    let v = match d.density_at(z) {
                        Ok(v) => v,
                        Err(Error::OutsideWedge) => 0.0,
                        Err(e) => return Err(e.into()),
                    };
                    rows.push(vec![z[0], z[1], v]);
                }
            }
            let file = ctx.out.write_csv(grid, &["z1", "z2", "density"], &rows)?;
            let bar = analytic_bar_residual(&pr)?;
            ctx.out.emit(&json!({
                "file": file,
                "C": d.c,
                "bar_residual": bar,
                "in_family": bar <= FAMILY_TOL,
            }));
            Ok(())
        }
        SymmetricCmd::VerifyRemarkable { mc_check, mc } => {
            let grid = if *mc_check {
                Some(mc_density(ctx, mc, -20.0, 5.0, 200)?)
            } else {
                None
            };
            let rep = verify_remarkable(&pr, grid.as_ref())?;
            ctx.out.emit(&rep);
            if rep.bar_pass && rep.tv_pass != Some(false) {
                Ok(())
            } else {
                Err(Fail::Stats)
            }
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| a + (b - a) * k as f64 / (n - 1) as f64)
}

fn figure(ctx: &mut Ctx, f: &FigureArgs) -> R<()> {
    let pr = ctx.pr;
    let mut files = Vec::new();
    match f.id {
        FigureId::BranchCurves => {
            for (id, tag) in [(KernelId::U, "u"), (KernelId::V, "v")] {
                let fam = BranchFamily::new(&pr, id, Variable::POverQ)?;
                for i in 1..=2 {
                    let rows = linspace(-10.0, 10.0, 801)
                        .map(|x| fam.eval(i, C64::new(0.0, x)).map(|p| vec![x, p.re, p.im]))
                        .collect::<Result<Vec<_>, _>>()?;
                    let name = format!("branch-curve-p{i}{tag}.csv");
                    files.push(ctx.out.write_csv(Path::new(&name), &["x", "re", "im"], &rows)?);
                }
            }
        }
        FigureId::Hyperbolas => {
            for (id, tag) in [(KernelId::U, "u"), (KernelId::V, "v")] {
                let h = hyperbola(&pr, id, Variable::POverQ)?;
                // a x² + c x + (b y² + d) = 0 for each height y
                let rows: Vec<Vec<f64>> = linspace(-10.0, 10.0, 801)
                    .map(|y| {
                        let k = h.b * y * y + h.d;
                        let disc = h.c * h.c - 4.0 * h.a * k;
                        let (lo, hi) = if disc < 0.0 {
                            (f64::NAN, f64::NAN)
                        } else {
                            let r = [(-h.c - disc.sqrt()) / (2.0 * h.a), (-h.c + disc.sqrt()) / (2.0 * h.a)];
                            (r[0].min(r[1]), r[0].max(r[1]))
                        };
                        vec![y, lo, hi]
                    })
                    .collect();
                let name = format!("hyperbola-{tag}.csv");
                files.push(ctx.out.write_csv(Path::new(&name), &["y", "x_left", "x_right"], &rows)?);
            }
        }
        FigureId::DensityGrid => {
            let grid = mc_density(ctx, &f.mc, -8.0, 4.0, 60)?;
            files.push(ctx.out.write_csv(
                Path::new("density-grid.csv"),
                &["z1", "z2", "density", "se"],
                &density_rows(&grid),
            )?);
        }
        FigureId::RemarkableDensity => {
            pr.require_symmetric()?;
            let d = RemarkableDensity::for_params(&pr)?;
            let phi = d.half_angle();
            let rmax = 10.0 / d.mu_norm;
            let mut rows = Vec::new();
            for r in linspace(rmax / 200.0, rmax, 200) {
                for t in linspace(-phi, phi, 121) {
                    let z = d.point(r, t);
                    rows.push(vec![r, t, z[0], z[1], d.density(r, t)?]);
                }
            }
            files.push(ctx.out.write_csv(
                Path::new("remarkable-density.csv"),
                &["r", "t", "z1", "z2", "density"],
                &rows,
            )?);
        }
    }
    ctx.out.emit(&json!({"files": files}));
    Ok(())
}
