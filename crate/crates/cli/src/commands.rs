use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use scalespace::{
    build_tree, canonicalize, classify_component, eval_kernel_wide, extract_level_set, forward_transform,
    genericity_check, geometric_sigma_ladder, invariant_table, morse_report, orient_all, scan, scan_report_json,
    synth_checked, transfer, tree_equal, Contours, Field, FieldStack, KernelParams, ParamScan, Params, ScaleSpace,
    ScanAxis, Signal, SmoothnessBudget, TreeSignature,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::CliError;
use crate::ingest::{ingest, read_field, sidecar, FieldMeta, Ingested};

type Result<T> = std::result::Result<T, CliError>;

/// Exit status of a successful run: `0`, or `1` when `compare` finds a difference.
pub type Status = i32;

fn params(k: &KernelOpts) -> Result<Params> {
    Ok(KernelParams::new(k.alpha, k.beta, k.p)?)
}

fn ladder(opts: &LadderOpts, dx: f64) -> Result<Vec<f64>> {
    Ok(geometric_sigma_ladder(opts.sigma_min.unwrap_or(dx), opts.sigma_ratio, opts.sigma_count)?)
}

fn stack(sig: &Signal, params: &Params, k: u32, grid: &[f64]) -> Result<FieldStack<f64>> {
    let budget = SmoothnessBudget::estimate_for(&forward_transform(sig), k + 1, 1);
    Ok(FieldStack::build(sig, params, k, grid, &budget)?)
}

fn echo(command: &str, args: &impl Serialize, lattice: Option<&Ingested>, grid: Option<&[f64]>) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "args": args,
        "lattice": lattice,
        "sigma_grid": grid.map(|g| json!({"rows": g.len(), "min": g.get(1), "max": g.last()})),
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    write(dir, name, &text)
}

fn announce(summary: Value) {
    println!("{}", serde_json::to_string(&summary).expect("JSON values serialize"));
}

pub fn field_csv(field: &Field) -> String {
    let mut out = String::from("sigma,x,value\n");
    for i in 0..field.rows() {
        let s = field.sigma_grid[i];
        for j in 0..field.cols() {
            let _ = writeln!(out, "{s:.16e},{:.16e},{:.16e}", field.x(j), field.at(i, j));
        }
    }
    out
}

pub fn kernel(cmd: &KernelCmd) -> Result<Status> {
    let params = params(&cmd.kernel)?;
    if !(cmd.rho > 0.0) || cmd.samples < 2 || !(cmd.x_max > 0.0) || !(cmd.omega_max > 0.0) {
        return Err(CliError::Config("rho, x_max and omega_max must be positive and samples >= 2".into()));
    }
    let step = |top: f64, i: usize| -top + 2.0 * top * i as f64 / (cmd.samples - 1) as f64;
    let mut ker = String::from("x,value\n");
    let mut tf = String::from("omega,re,im\n");
    for i in 0..cmd.samples {
        let x = step(cmd.x_max, i);
        let _ = writeln!(ker, "{x:.16e},{:.16e}", eval_kernel_wide(&params, x, cmd.rho));
        let w = step(cmd.omega_max, i);
        let t = transfer(&params, w, 1.0 / cmd.rho);
        let _ = writeln!(tf, "{w:.16e},{:.16e},{:.16e}", t.re, t.im);
    }
    let a = write(&cmd.out.out, "kernel.csv", &ker)?;
    let b = write(&cmd.out.out, "transfer.csv", &tf)?;
    let report = json!({"config": echo("kernel", cmd, None, None), "outputs": [a, b]});
    let c = write_json(&cmd.out.out, "kernel.json", &report)?;
    announce(json!({"outputs": [a, b, c]}));
    Ok(0)
}

pub fn field(cmd: &FieldCmd) -> Result<Status> {
    let s = &cmd.signal;
    let (sig, info) = ingest(&s.signal, s.format, s.pad, s.n)?;
    let params = params(&cmd.kernel)?;
    let grid = ladder(&cmd.ladder, sig.dx)?;
    let space = ScaleSpace::new(&sig, params)?;
    let budget = SmoothnessBudget::estimate_for(&space.spectrum, cmd.k, 0);
    let field = synth_checked(&space, cmd.k, 0, &grid, &budget)?;
    let csv = write(&cmd.out.out, "field.csv", &field_csv(&field))?;
    let meta = serde_json::to_value(FieldMeta::of(&field)).expect("meta serializes");
    let mut meta = meta.as_object().cloned().unwrap_or_default();
    meta.insert("config".into(), echo("field", cmd, Some(&info), Some(&grid)));
    let side = write_json(&cmd.out.out, "field.json", &Value::Object(meta))?;
    debug_assert_eq!(side, sidecar(&csv));
    announce(json!({"outputs": [csv, side], "rows": field.rows(), "cols": field.cols(), "scale": field.scale()}));
    Ok(0)
}

fn contours_json(set: &Contours, traces: Option<&[Option<scalespace::contours::EnergyTrace<f64>>]>) -> Vec<Value> {
    set.curves
        .iter()
        .enumerate()
        .map(|(id, c)| {
            let classification = match classify_component(c, set.requested_level) {
                Ok(r) => json!(r),
                Err(e) => json!({"error": e.to_string()}),
            };
            let energy = traces.and_then(|t| t[id].as_ref()).map(|t| {
                json!({"orientation": t.orientation, "worst_violation": t.worst_violation(), "disagreement": t.disagreement})
            });
            json!({
                "id": id,
                "kind": c.kind.as_str(),
                "significant": set.is_significant(c),
                "axis_crossings": c.axis_crossings,
                "peak": c.peak,
                "top_sigma": c.top_sigma(),
                "orientation": c.orientation,
                "classification": classification,
                "energy": energy,
            })
        })
        .collect()
}

fn energy_csv(traces: &[Option<scalespace::contours::EnergyTrace<f64>>]) -> String {
    let mut out = String::from("component_id,t,x,sigma,l\n");
    for (id, t) in traces.iter().enumerate() {
        for s in t.iter().flat_map(|t| &t.samples) {
            let _ = writeln!(out, "{id},{:.16e},{:.16e},{:.16e},{:.16e}", s.t, s.x, s.sigma, s.l);
        }
    }
    out
}

pub fn contours(cmd: &ContoursCmd) -> Result<Status> {
    let dir = &cmd.out.out;
    let mut outputs = Vec::new();
    let (mut set, traces, flags, info, grid) = if let Some(path) = &cmd.field {
        if cmd.analyze {
            return Err(CliError::Config("--analyze needs the signal, not a stored field".into()));
        }
        let field = read_field(path)?;
        let set = extract_level_set(&field, cmd.level)?;
        let grid = field.sigma_grid.clone();
        (set, None, None, None, grid)
    } else {
        let path = cmd.signal.as_ref().expect("clap requires --signal or --field");
        let (sig, info) = ingest(path, cmd.format, cmd.pad, cmd.n)?;
        let grid = ladder(&cmd.ladder, sig.dx)?;
        let params = params(&cmd.kernel)?;
        if cmd.analyze {
            let stack = stack(&sig, &params, cmd.k, &grid)?;
            let mut set = extract_level_set(&stack.level, cmd.level)?;
            let traces = orient_all(&mut set, &stack)?;
            let flags = genericity_check(&stack, set.level);
            (set, Some(traces), Some(flags), Some(info), grid)
        } else {
            let space = ScaleSpace::new(&sig, params)?;
            let budget = SmoothnessBudget::estimate_for(&space.spectrum, cmd.k, 0);
            let field = synth_checked(&space, cmd.k, 0, &grid, &budget)?;
            (extract_level_set(&field, cmd.level)?, None, None, Some(info), grid)
        }
    };
    if let Some(flags) = &flags {
        set.degeneracy_flags.clone_from(flags);
    }
    outputs.push(write(dir, "contours.csv", &set.to_csv())?);
    if let Some(t) = &traces {
        outputs.push(write(dir, "energy.csv", &energy_csv(t))?);
    }
    let components = contours_json(&set, traces.as_deref());
    let report = json!({
        "config": echo("contours", cmd, info.as_ref(), Some(&grid)),
        "level": set.level,
        "requested_level": set.requested_level,
        "k": set.k,
        "scale": set.scale,
        "window": [set.window.0, set.window.1],
        "degeneracy_flags": set.degeneracy_flags,
        "components": components,
    });
    outputs.push(write_json(dir, "contours.json", &report)?);
    let closed = set.resolved().filter(|c| c.kind == scalespace::CurveKind::Closed).count();
    let lines = set.resolved().filter(|c| c.kind == scalespace::CurveKind::Line).count();
    announce(json!({"outputs": outputs, "components": set.curves.len(), "closed": closed, "lines": lines}));
    Ok(0)
}

struct TreeRun {
    tree: Value,
    tw: TreeSignature,
    tt: TreeSignature,
}

fn tree_of(sig: &Signal, params: &Params, k: u32, level: f64, grid: &[f64], tolerate: bool) -> Result<TreeRun> {
    let space = ScaleSpace::new(sig, *params)?;
    let budget = SmoothnessBudget::estimate_for(&space.spectrum, k, 0);
    let field = synth_checked(&space, k, 0, grid, &budget)?;
    let set = extract_level_set(&field, level)?;
    let tree = build_tree(&set, tolerate)?;
    Ok(TreeRun { tree: tree.to_json(), tw: canonicalize(&tree, true), tt: canonicalize(&tree, false) })
}

pub fn tree(cmd: &TreeCmd) -> Result<Status> {
    let s = &cmd.signal;
    let (sig, info) = ingest(&s.signal, s.format, s.pad, s.n)?;
    let grid = ladder(&cmd.ladder, sig.dx)?;
    let run = tree_of(&sig, &params(&cmd.kernel)?, cmd.k, cmd.level, &grid, cmd.tolerate_truncated)?;
    let report = json!({
        "config": echo("tree", cmd, Some(&info), Some(&grid)),
        "tree": run.tree,
        "signatures": {"tw": run.tw.canonical_form, "tt": run.tt.canonical_form},
    });
    let path = write_json(&cmd.out.out, "tree.json", &report)?;
    announce(json!({"outputs": [path], "tw": run.tw.canonical_form, "tt": run.tt.canonical_form}));
    Ok(0)
}

fn p_scan(sig: &Signal, base: &Params, sc: &ParamScan<f64>, grid: &[f64]) -> Result<Value> {
    let result = scan(sig, base, sc, grid)?;
    let table = invariant_table(&result.graph, &result.events)?;
    let morse = morse_report(&table, &result.events);
    Ok(scan_report_json(sc, &result, &table, &morse))
}

pub fn scan_cmd(cmd: &ScanCmd) -> Result<Status> {
    let s = &cmd.signal;
    let (sig, info) = ingest(&s.signal, s.format, s.pad, s.n)?;
    let grid = ladder(&cmd.ladder, sig.dx)?;
    let o = &cmd.scan;
    let axis = match o.axis {
        Axis::P => ScanAxis::P,
        Axis::C => ScanAxis::C,
    };
    let sc = ParamScan { axis, k: cmd.k, level: cmd.level, lo: o.lo, hi: o.hi, n_slices: o.slices, tol_param: o.tol_param };
    let mut report = p_scan(&sig, &params(&cmd.kernel)?, &sc, &grid)?;
    report["config"] = echo("scan", cmd, Some(&info), Some(&grid));
    let path = write_json(&cmd.out.out, "scan.json", &report)?;
    announce(json!({"outputs": [path], "events": report["events"].as_array().map_or(0, Vec::len), "morse_pass": report["morse"]["pass"]}));
    Ok(0)
}

/// `(j, k, l, μ)` rows: region `j` along p, component `k` within it, level `l`.
fn mu_rows(tables: &[Value]) -> Vec<Value> {
    let mut rows = Vec::new();
    for (l, t) in tables.iter().enumerate() {
        for (j, region) in t["regions"].as_array().into_iter().flatten().enumerate() {
            for (k, comp) in region["components"].as_array().into_iter().flatten().enumerate() {
                rows.push(json!({"j": j, "k": k, "l": l, "mu": comp["mu"]}));
            }
        }
    }
    rows
}

pub fn invariants(cmd: &InvariantsCmd) -> Result<Status> {
    let s = &cmd.signal;
    let (sig, info) = ingest(&s.signal, s.format, s.pad, s.n)?;
    let grid = ladder(&cmd.ladder, sig.dx)?;
    let base = params(&cmd.kernel)?;
    let mut tables = Vec::with_capacity(cmd.levels.len());
    for &level in &cmd.levels {
        let sc = ParamScan {
            axis: ScanAxis::P,
            k: cmd.k,
            level,
            lo: cmd.lo,
            hi: cmd.hi,
            n_slices: cmd.slices,
            tol_param: cmd.tol_param,
        };
        let mut t = p_scan(&sig, &base, &sc, &grid)?;
        t["level"] = json!(level);
        tables.push(t);
    }
    let mu = mu_rows(&tables);
    let pass = tables.iter().all(|t| t["morse"]["pass"] == true);
    let report = json!({
        "config": echo("invariants", cmd, Some(&info), Some(&grid)),
        "indices": if cmd.levels.len() > 1 { "jkl" } else { "jk" },
        "levels": cmd.levels,
        "mu": mu,
        "tables": tables,
        "morse_pass": pass,
    });
    let path = write_json(&cmd.out.out, "invariants.json", &report)?;
    announce(json!({"outputs": [path], "entries": mu.len(), "morse_pass": pass}));
    Ok(0)
}

/// Per-region handle counts with component order ignored.
fn mu_shape(report: &Value) -> Vec<Vec<u64>> {
    report["regions"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|r| {
            let mut mus: Vec<u64> =
                r["components"].as_array().into_iter().flatten().filter_map(|c| c["mu"].as_u64()).collect();
            mus.sort_unstable();
            mus
        })
        .collect()
}

pub fn compare(cmd: &CompareCmd) -> Result<Status> {
    let s = &cmd.signal;
    let (a, info_a) = ingest(&s.signal, s.format, s.pad, s.n)?;
    let (b, info_b) = ingest(&cmd.other, s.format, s.pad, s.n)?;
    let base = params(&cmd.kernel)?;
    let (grid_a, grid_b) = (ladder(&cmd.ladder, a.dx)?, ladder(&cmd.ladder, b.dx)?);
    let ta = tree_of(&a, &base, cmd.k, cmd.level, &grid_a, false)?;
    let tb = tree_of(&b, &base, cmd.k, cmd.level, &grid_b, false)?;
    let trees_equal = tree_equal(&ta.tt, &tb.tt);
    let mut report = json!({
        "config": echo("compare", cmd, Some(&info_a), Some(&grid_a)),
        "other_lattice": info_b,
        "tt": [ta.tt.canonical_form, tb.tt.canonical_form],
        "tw": [ta.tw.canonical_form, tb.tw.canonical_form],
        "trees_equal": trees_equal,
    });
    let mut equal = trees_equal;
    if cmd.invariants {
        let (lo, hi) = (cmd.lo.expect("clap requires lo"), cmd.hi.expect("clap requires hi"));
        let sc = ParamScan { axis: ScanAxis::P, k: 0, level: cmd.scan_level, lo, hi, n_slices: cmd.slices, tol_param: 1e-3 };
        let ra = p_scan(&a, &base, &sc, &grid_a)?;
        let rb = p_scan(&b, &base, &sc, &grid_b)?;
        let same = mu_shape(&ra) == mu_shape(&rb);
        report["invariants_equal"] = json!(same);
        report["mu"] = json!([mu_shape(&ra), mu_shape(&rb)]);
        equal &= same;
    }
    report["equal"] = json!(equal);
    let path = write_json(&cmd.out.out, "compare.json", &report)?;
    announce(json!({"outputs": [path], "equal": equal, "tt": report["tt"]}));
    Ok(if equal { 0 } else { 1 })
}
