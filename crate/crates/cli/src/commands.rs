//! Command implementations. Each returns a status and a results payload; `run`
//! wraps them in a report and maps the status to an exit code.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::Instant;

use netoperad_core::algebra::{Catalog, FailureAlgebra, Scenario};
use netoperad_core::template::{InducedOperad, NetworkTemplate, TaskingTemplate};
use netoperad_core::wiring::{
    chained_soundness_check, diagrams_equal, joint_validity, project_outer, soundness_check, RequirementsBundle,
    WiringLibrary, WiringOp,
};
use netoperad_planner::{Level, PlanScenario, SolveOutcome, SolverConfig};
use netoperad_synthesis::{Algorithm, Explorer, SearchConfig};
use serde_json::{json, Value};

use crate::report::{sha256_hex, tool, Echo, Inputs, RunReport, Timing, SCHEMA_VERSION};
use crate::{AlgorithmArg, Analysis, Cli, Command, Kind, LevelArg, PlanArgs, SynthArgs};

/// Listed counterexamples are capped; the total is always reported.
const MAX_COUNTEREXAMPLES: usize = 20;

pub enum Status {
    Ok,
    Infeasible,
    Undecided,
}

pub struct Failure {
    message: String,
    details: Value,
}

fn fail(e: impl Display) -> Failure {
    Failure {
        message: e.to_string(),
        details: Value::Null,
    }
}

type Outcome = Result<(Status, Value), Failure>;

struct Ctx<'a> {
    cli: &'a Cli,
    inputs: Inputs,
    /// Human-readable lines for standard error.
    table: Vec<String>,
}

impl Ctx<'_> {
    fn read(&mut self, role: &str, path: &Path) -> Result<Vec<u8>, Failure> {
        self.inputs.read(role, path).map_err(fail)
    }

    fn say(&mut self, line: impl Into<String>) {
        self.table.push(line.into());
    }
}

pub fn run(cli: &Cli, argv: &[String]) -> u8 {
    let start = Instant::now();
    let mut cx = Ctx {
        cli,
        inputs: Inputs(Vec::new()),
        table: Vec::new(),
    };
    let name = match &cli.command {
        Command::Validate { .. } => "validate",
        Command::Compose { .. } => "compose",
        Command::Analyze { .. } => "analyze",
        Command::Plan(_) => "plan",
        Command::Synthesize(_) => "synthesize",
    };
    let outcome = if cli.threads == 0 {
        Err(fail("--threads must be at least 1"))
    } else {
        match &cli.command {
            Command::Validate { path, kind } => validate(&mut cx, path, *kind),
            Command::Compose { template, script } => compose(&mut cx, template, script),
            Command::Analyze { what } => analyze(&mut cx, what),
            Command::Plan(args) => plan(&mut cx, args),
            Command::Synthesize(args) => synthesize(&mut cx, args),
        }
    };
    let (status, code, results, ok) = match outcome {
        Ok((Status::Ok, v)) => ("ok", 0, v, true),
        Ok((Status::Infeasible, v)) => ("infeasible", 2, v, true),
        Ok((Status::Undecided, v)) => ("undecided", 2, v, true),
        Err(f) => {
            eprintln!("error: {}", f.message);
            let v = json!({ "error": f.message, "details": f.details });
            ("invalid", 1, v, false)
        }
    };
    if !cli.json {
        for line in &cx.table {
            eprintln!("{line}");
        }
    }
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool: tool(),
        command: Echo {
            name: name.to_string(),
            argv: argv.iter().skip(1).cloned().collect(),
        },
        inputs: cx.inputs.0,
        status,
        exit_code: code,
        results,
        timing: Timing {
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    };
    if ok || cli.json {
        let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
        match &cli.report {
            Some(p) => {
                if let Err(e) = std::fs::write(p, text) {
                    eprintln!("error: cannot write report {}: {e}", p.display());
                    return 1;
                }
            }
            None => print!("{text}"),
        }
    }
    code
}

fn detect(v: &Value) -> Option<Kind> {
    let has = |k: &str| v.get(k).is_some();
    Some(if has("places") || has("transitions") {
        Kind::Tasking
    } else if has("colors") {
        Kind::Network
    } else if has("boundaries") {
        Kind::Wiring
    } else if has("assignments") {
        Kind::Failure
    } else if has("component_requirements") || has("outer_requirements") || has("grid") {
        Kind::Requirements
    } else if has("assets") {
        Kind::Catalog
    } else if has("agents") {
        Kind::PlanScenario
    } else if has("bases") {
        Kind::Scenario
    } else if has("algorithm") || has("max_nodes") || has("budget") {
        Kind::SearchConfig
    } else {
        return None;
    })
}

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Network => "network_template",
        Kind::Tasking => "tasking_template",
        Kind::Wiring => "wiring_library",
        Kind::Failure => "failure_assignments",
        Kind::Requirements => "requirements",
        Kind::Catalog => "catalog",
        Kind::Scenario => "scenario",
        Kind::PlanScenario => "plan_scenario",
        Kind::SearchConfig => "search_config",
    }
}

fn validate(cx: &mut Ctx, path: &Path, kind: Option<Kind>) -> Outcome {
    let bytes = cx.read("input", path)?;
    let value: Value = serde_json::from_slice(&bytes).map_err(|e| Failure {
        message: format!("{}: invalid JSON: {e}", path.display()),
        details: json!({ "line": e.line(), "column": e.column() }),
    })?;
    let kind = match kind.or_else(|| detect(&value)) {
        Some(k) => k,
        None => return Err(fail(format!("{}: cannot tell what kind of input this is; pass --kind", path.display()))),
    };
    let located = |e: String| Failure {
        message: format!("{}: {e}", path.display()),
        details: json!({ "kind": kind_name(kind) }),
    };
    let summary = match kind {
        Kind::Network => {
            let t = NetworkTemplate::parse(&bytes).map_err(|e| located(e.to_string()))?;
            json!({ "colors": t.colors().len(), "interactions": t.interactions().len() })
        }
        Kind::Tasking => {
            let t = TaskingTemplate::parse(&bytes).map_err(|e| located(e.to_string()))?;
            json!({ "colors": t.colors().len(), "places": t.places().len(), "transitions": t.transitions().len() })
        }
        Kind::Wiring => {
            let l = WiringLibrary::parse(&bytes).map_err(|e| located(e.to_string()))?;
            let lints: BTreeMap<&String, Vec<String>> = l
                .operations()
                .iter()
                .map(|(n, o)| (n, o.lint()))
                .filter(|(_, w)| !w.is_empty())
                .collect();
            for (op, ws) in &lints {
                for w in ws {
                    cx.say(format!("warning: {op}: {w}"));
                }
            }
            json!({ "operations": l.operations().len(), "composites": l.composites().len(), "warnings": lints })
        }
        Kind::Failure => {
            let a = FailureAlgebra::parse(&bytes).map_err(|e| located(e.to_string()))?;
            json!({ "operations": a.assignments().len() })
        }
        Kind::Requirements => {
            let r = RequirementsBundle::parse(&bytes).map_err(|e| located(e.to_string()))?;
            json!({ "component_requirements": r.component_requirements.len(), "outer_requirements": r.outer_requirements.len() })
        }
        Kind::Catalog => {
            let c = Catalog::parse(&bytes).map_err(|e| located(e.to_string()))?;
            json!({ "assets": c.assets.len() })
        }
        Kind::Scenario => {
            let s = Scenario::parse(&bytes).map_err(|e| located(e.to_string()))?;
            json!({ "bases": s.bases.len() })
        }
        Kind::PlanScenario => {
            let s = PlanScenario::parse(&bytes).map_err(|e| located(e.to_string()))?;
            json!({ "agents": s.agents.len(), "horizon": s.horizon })
        }
        Kind::SearchConfig => {
            let c: SearchConfig = serde_json::from_slice(&bytes).map_err(|e| located(e.to_string()))?;
            c.validate().map_err(|e| located(e.to_string()))?;
            json!({ "algorithm": c.algorithm })
        }
    };
    cx.say(format!("{}: valid {}", path.display(), kind_name(kind)));
    Ok((Status::Ok, json!({ "valid": true, "kind": kind_name(kind), "summary": summary })))
}

fn compose(cx: &mut Ctx, template: &Path, script: &Path) -> Outcome {
    let t = NetworkTemplate::parse(&cx.read("template", template)?).map_err(fail)?;
    let src = String::from_utf8(cx.read("script", script)?).map_err(|_| fail("script is not UTF-8"))?;
    let operad = InducedOperad::new(t);
    let op = crate::script::run(&operad, &src).map_err(|e| Failure {
        message: format!("{}: {e}", script.display()),
        details: json!({ "line": e.line() }),
    })?;
    let canon = op.canonical_form();
    cx.say(format!(
        "{} nodes, {} edges, arity {}",
        canon.node_count(),
        canon.edge_count(),
        canon.arity()
    ));
    Ok((
        Status::Ok,
        json!({
            "operation": canon.to_json_value(),
            "nodes": canon.node_count(),
            "edges": canon.edge_count(),
            "sha256": sha256_hex(&canon.canonical_bytes()),
        }),
    ))
}

/// The root operation of a composite and its flattened children.
fn stages(lib: &WiringLibrary, name: &str) -> Result<(WiringOp, Vec<WiringOp>), Failure> {
    let tree = lib.composite(name).map_err(fail)?;
    let root = lib.operation(&tree.op).map_err(fail)?.clone();
    let gs = root
        .inner()
        .iter()
        .map(|b| match tree.children.get(&b.name) {
            Some(child) => lib.flatten(child).map_err(fail),
            None => Ok(WiringOp::identity(b)),
        })
        .collect::<Result<_, _>>()?;
    Ok((root, gs))
}

fn analyze(cx: &mut Ctx, what: &Analysis) -> Outcome {
    match what {
        Analysis::Failure {
            wiring,
            failure,
            composite,
        } => {
            let lib = WiringLibrary::parse(&cx.read("wiring", wiring)?).map_err(fail)?;
            let alg = FailureAlgebra::parse(&cx.read("failure", failure)?).map_err(fail)?;
            lib.check_failure_labels(&alg).map_err(fail)?;
            let names: Vec<String> = if composite.is_empty() {
                lib.composites().keys().cloned().collect()
            } else {
                composite.clone()
            };
            let mut dists = BTreeMap::new();
            for n in &names {
                let d = alg.composite_distribution(lib.composite(n).map_err(fail)?).map_err(fail)?;
                cx.say(format!("{n}:"));
                for (leaf, p) in d.outcomes() {
                    cx.say(format!("  {leaf:<12} {p:.4}"));
                }
                dists.insert(n.clone(), d);
            }
            let mut worst = 0.0f64;
            let list: Vec<_> = dists.values().collect();
            for (i, a) in list.iter().enumerate() {
                for b in &list[i + 1..] {
                    worst = worst.max(a.max_abs_diff(b));
                }
            }
            let out: BTreeMap<&String, &BTreeMap<String, f64>> = dists.iter().map(|(k, d)| (k, d.outcomes())).collect();
            Ok((Status::Ok, json!({ "distributions": out, "max_pairwise_difference": worst })))
        }
        Analysis::Equal { wiring, left, right } => {
            let lib = WiringLibrary::parse(&cx.read("wiring", wiring)?).map_err(fail)?;
            let a = lib.flatten(lib.composite(left).map_err(fail)?).map_err(fail)?;
            let b = lib.flatten(lib.composite(right).map_err(fail)?).map_err(fail)?;
            let eq = diagrams_equal(&a, &b);
            cx.say(format!("{left} = {right}: {}", eq.equal));
            if let Some(w) = &eq.witness {
                cx.say(format!("  {w}"));
            }
            Ok((
                Status::Ok,
                json!({ "equal": eq.equal, "witness": eq.witness, "wires": [a.wires().len(), b.wires().len()] }),
            ))
        }
        Analysis::Soundness {
            wiring,
            composite,
            requirements,
            chained,
        } => {
            let lib = WiringLibrary::parse(&cx.read("wiring", wiring)?).map_err(fail)?;
            let bundle = RequirementsBundle::parse(&cx.read("requirements", requirements)?).map_err(fail)?;
            let flat = lib.flatten(lib.composite(composite).map_err(fail)?).map_err(fail)?;
            let rep = soundness_check(&flat, &bundle.component_requirements, &bundle.outer_requirements, &bundle.grid)
                .map_err(fail)?;
            cx.say(format!("{composite}: sound = {} over {} valid states", rep.sound, rep.checked));
            let mut out = json!({
                "sound": rep.sound,
                "checked": rep.checked,
                "total_counterexamples": rep.counterexamples.len(),
                "counterexamples": rep.counterexamples.iter().take(MAX_COUNTEREXAMPLES).collect::<Vec<_>>(),
            });
            if *chained {
                let (root, gs) = stages(&lib, composite)?;
                let (crep, rel) = chained_soundness_check(
                    &root,
                    &gs,
                    &bundle.component_requirements,
                    &bundle.outer_requirements,
                    &bundle.grid,
                )
                .map_err(fail)?;
                let direct = project_outer(
                    &flat,
                    &joint_validity(&flat, &bundle.component_requirements, &bundle.grid).map_err(fail)?,
                );
                let agrees = crep.sound == rep.sound && rel.same_relation(&direct);
                cx.say(format!("  chained: sound = {}, agrees = {agrees}", crep.sound));
                out["chained"] = json!({ "sound": crep.sound, "checked": crep.checked, "agrees": agrees });
            }
            Ok((Status::Ok, out))
        }
    }
}

fn plan(cx: &mut Ctx, args: &PlanArgs) -> Outcome {
    let t = TaskingTemplate::parse(&cx.read("template", &args.template)?).map_err(fail)?;
    let sc = PlanScenario::parse(&cx.read("scenario", &args.scenario)?).map_err(fail)?;
    let level = match args.level {
        LevelArg::Timed => Level::Timed,
        LevelArg::Plan => Level::Plan,
        LevelArg::Counts => Level::Counts,
    };
    let model = sc.build(&t, level).map_err(fail)?;
    let mut out = json!({
        "level": level,
        "objective": sc.objective,
        "horizon": sc.horizon,
        "variables": model.system().vars().len(),
        "constraints": model.system().constraints().len(),
    });
    if let Some(path) = &args.export_lp {
        let text = model.system().to_lp();
        std::fs::write(path, &text).map_err(|e| fail(format!("cannot write {}: {e}", path.display())))?;
        cx.say(format!("wrote {} ({} variables, {} rows)", path.display(), out["variables"], out["constraints"]));
        out["lp"] = json!({ "path": path.display().to_string(), "sha256": sha256_hex(text.as_bytes()) });
        return Ok((Status::Ok, out));
    }
    let cfg = SolverConfig {
        node_limit: args.node_limit,
    };
    match model.solve(&cfg) {
        SolveOutcome::Optimal(sol) => {
            let s = model.decode(&sol);
            out["status"] = json!("optimal");
            out["objective_value"] = json!(sol.objective);
            out["makespan"] = json!(s.makespan);
            timeline_table(cx, &s);
            out["schedule"] = serde_json::to_value(&s).map_err(fail)?;
            Ok((Status::Ok, out))
        }
        SolveOutcome::Infeasible(conflict) => {
            cx.say("infeasible; conflicting constraints:");
            for c in &conflict.constraints {
                cx.say(format!("  {c}"));
            }
            out["status"] = json!("infeasible");
            out["conflict"] = serde_json::to_value(&conflict).map_err(fail)?;
            Ok((Status::Infeasible, out))
        }
        SolveOutcome::Undecided { nodes, incumbent } => {
            cx.say(format!("undecided after {nodes} nodes"));
            out["status"] = json!("undecided");
            out["nodes"] = json!(nodes);
            out["incumbent_objective"] = json!(incumbent.map(|s| s.objective));
            Ok((Status::Undecided, out))
        }
    }
}

fn timeline_table(cx: &mut Ctx, s: &netoperad_planner::Schedule) {
    if s.timeline.is_empty() {
        return;
    }
    let steps = s.timeline.values().map(Vec::len).max().unwrap_or(0);
    let mut header = format!("{:<10}", "agent");
    for t in 0..steps {
        header.push_str(&format!("{t:>8}"));
    }
    cx.say(header);
    for (agent, places) in &s.timeline {
        let mut row = format!("{agent:<10}");
        for p in places {
            row.push_str(&format!("{:>8}", p.as_deref().unwrap_or("->")));
        }
        cx.say(row);
    }
    if let Some(m) = s.makespan {
        cx.say(format!("makespan {m}"));
    }
}

fn synthesize(cx: &mut Ctx, args: &SynthArgs) -> Outcome {
    let t = NetworkTemplate::parse(&cx.read("template", &args.template)?).map_err(fail)?;
    let catalog = Catalog::parse(&cx.read("catalog", &args.catalog)?).map_err(fail)?;
    let scenario = Scenario::parse(&cx.read("scenario", &args.scenario)?).map_err(fail)?;
    let mut cfg: SearchConfig = match &args.config {
        Some(p) => serde_json::from_slice(&cx.read("config", p)?).map_err(|e| fail(format!("{}: {e}", p.display())))?,
        None => SearchConfig::default(),
    };
    if let Some(a) = args.algorithm {
        cfg.algorithm = match a {
            AlgorithmArg::Exhaustive => Algorithm::Exhaustive,
            AlgorithmArg::Anneal => Algorithm::Anneal,
            AlgorithmArg::Genetic => Algorithm::Genetic,
        };
    }
    cfg.budget = args.budget.or(cfg.budget);
    cfg.max_nodes = args.max_nodes.unwrap_or(cfg.max_nodes);
    cfg.iterations = args.iterations.unwrap_or(cfg.iterations);
    cfg.generations = args.generations.unwrap_or(cfg.generations);
    cfg.population = args.population.unwrap_or(cfg.population);
    cfg.seed = cx.cli.seed.unwrap_or(cfg.seed);
    cfg.threads = cx.cli.threads;
    let operad = InducedOperad::new(t);
    let ex = Explorer::new(&operad, &catalog, &scenario, cfg.clone()).map_err(fail)?;
    let out = ex.search().map_err(fail)?;
    let audit_path = audit_path(args.audit.as_deref(), cx.cli.report.as_deref());
    let log = out.audit_jsonl();
    std::fs::write(&audit_path, &log).map_err(|e| fail(format!("cannot write {}: {e}", audit_path.display())))?;
    cx.say(format!(
        "best: {:?} cost {:.0} expected detections {:.4} ({} candidates)",
        out.summary.counts,
        out.summary.cost,
        out.summary.expected_detections,
        out.audit.len()
    ));
    Ok((
        Status::Ok,
        json!({
            "config": cfg,
            "budget": ex.budget(),
            "best": out.summary,
            "kpi": out.score,
            "evaluated": out.audit.len(),
            "audit": { "path": audit_path.display().to_string(), "sha256": sha256_hex(log.as_bytes()) },
        }),
    ))
}

fn audit_path(explicit: Option<&Path>, report: Option<&Path>) -> PathBuf {
    match (explicit, report) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(r)) => r.with_extension("audit.jsonl"),
        (None, None) => PathBuf::from("netoperad-audit.jsonl"),
    }
}
