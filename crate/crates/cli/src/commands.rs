use std::path::Path;

use endwalk::chains::{
    exact_green_birthdeath, expected_sign_flips, first_moment_series, mc_green_birthdeath, transience_series,
    uniform_irreducibility, BirthDeathChain, ChainParams, CounterexampleChain, IrreducibilityOutcome, ResistanceTable,
    Verdict,
};
use endwalk::schreier::savchuk::{verify_embedding, EmbedDirection};
use endwalk::schreier::{export_csv, export_dot, EdgeStyle, SchreierGraph};
use endwalk::simulate::{
    classify_end, comb_end_kind, component_change_stats, exit_measure, green_from_returns, revisit_fractions,
    run_walks, sign_flip_profile, thompson_exit_measure, write_records_csv, CutSpec, Target, TrajectoryRecord,
    WalkConfig,
};
use endwalk::{Action, ActionPoint};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::manifest::{OutputDir, RunManifest};
use crate::CliError;

pub fn simulate(cfg: &RunConfig, seed: Option<u64>, out: &Path) -> Result<RunManifest, CliError> {
    let resolved = cfg.resolve(seed)?;
    let walk = resolved.walk_config()?;
    let records = run_walks(&walk)?;
    let summary = summarize(&walk, &records)?;

    let mut dir = OutputDir::create(out)?;
    let mut csv = Vec::new();
    write_records_csv(&records, &mut csv)?;
    dir.write("records.csv", &csv)?;
    dir.write_json("summary.json", &summary)?;
    if let (Some(radius), Target::Induced { start, .. }) = (resolved.output.graph_radius, &walk.target) {
        let g = SchreierGraph::new(start.clone());
        dir.write(
            "graph.dot",
            export_dot(&g, start, radius, &edge_style(start.action()))?.as_bytes(),
        )?;
    }
    print_summary(&summary);
    let config = serde_json::to_value(&resolved).expect("serializable config");
    dir.finish("simulate", config, walk.seed)
}

fn cut_size(walk: &WalkConfig, cut: &CutSpec) -> Result<usize, CliError> {
    Ok(match (cut, &walk.target) {
        (CutSpec::Points { points }, _) => points.len(),
        (CutSpec::Ball { radius }, Target::Induced { start, .. }) => {
            SchreierGraph::new(start.clone()).ball(start, *radius)?.len()
        }
        (CutSpec::Ball { radius }, Target::Chain { .. }) => 2 * *radius as usize + 1,
    })
}

fn median(mut xs: Vec<u64>) -> f64 {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2] as f64
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) as f64 / 2.0
    }
}

fn summarize(walk: &WalkConfig, records: &[TrajectoryRecord]) -> Result<Value, CliError> {
    let induced = match &walk.target {
        Target::Induced { measure, start } => Some((measure, start.action())),
        Target::Chain { .. } => None,
    };
    // The component-change bound wants the Green function of the reversed
    // walk; for symmetric measures that is the walk itself.
    let green = match induced {
        Some((m, _)) if !m.is_symmetric() => Some(green_from_returns(&run_walks(&walk.inverted())?)?),
        Some(_) => Some(green_from_returns(records)?),
        None => None,
    };

    let mut cuts = Vec::new();
    for (level, cut) in walk.cuts.iter().enumerate() {
        let size = cut_size(walk, cut)?;
        let stabilized = records.iter().filter(|r| r.cuts[level].stabilized).count();
        let anchors = exit_measure(records, |r| classify_end(r, level).map(String::from));
        let mut entry = json!({
            "cut": records[0].cuts[level].cut,
            "size": size,
            "stabilized": stabilized,
            "exit_measure": anchors,
        });
        if let Some((measure, action)) = induced {
            if action == Action::Psi {
                entry["end_kinds"] = json!(exit_measure(records, |r| {
                    classify_end(r, level).and_then(comb_end_kind).map(String::from)
                }));
            }
            let green = green.as_ref().expect("induced walks have a Green estimate");
            entry["component_changes"] =
                match component_change_stats(records, level, green, size, measure.first_moment()) {
                    Ok(s) => json!(s),
                    Err(endwalk::Error::NoExit) => Value::Null,
                    Err(e) => return Err(e.into()),
                };
        }
        cuts.push(entry);
    }

    let mut summary = json!({
        "target": match &walk.target {
            Target::Induced { start, .. } => start.action().name(),
            Target::Chain { .. } => "chain",
        },
        "start": walk.target.start_name(),
        "steps": walk.steps,
        "trajectories": walk.trajectories,
        "seed": walk.seed,
        "median_final_distance": median(records.iter().map(|r| r.final_distance).collect()),
        "revisits_after": walk.checkpoints.iter().zip(revisit_fractions(records, &walk.checkpoints))
            .map(|(t, f)| json!({"step": t, "fraction": f}))
            .collect::<Vec<_>>(),
        "cuts": cuts,
    });
    if records.iter().any(|r| r.end_class.is_some()) {
        summary["savchuk_exit_measure"] = json!(thompson_exit_measure(records));
    }
    if let Some(g) = green {
        summary["green"] = json!(g);
    }
    if let Target::Chain { .. } = walk.target {
        summary["sign_flips"] = json!(sign_flip_profile(records)?);
    }
    Ok(summary)
}

fn print_summary(summary: &Value) {
    println!(
        "{} walks of {} steps on {} from {}: median final distance {}",
        summary["trajectories"],
        summary["steps"],
        summary["target"],
        summary["start"],
        summary["median_final_distance"]
    );
    if let Some(classes) = summary["savchuk_exit_measure"]["classes"].as_array() {
        for c in classes {
            println!(
                "  {:<15} {:>6}  [{:.3}, {:.3}]",
                c["name"].as_str().unwrap_or_default(),
                c["count"].as_u64().unwrap_or(0),
                c["lo"].as_f64().unwrap_or(0.0),
                c["hi"].as_f64().unwrap_or(0.0)
            );
        }
    }
    for (level, cut) in summary["cuts"].as_array().into_iter().flatten().enumerate() {
        println!(
            "  cut {level} ({} vertices): {} stabilized",
            cut["size"], cut["stabilized"]
        );
        for c in cut["end_kinds"]["classes"].as_array().into_iter().flatten() {
            println!(
                "    {:<10} {:>6}",
                c["name"].as_str().unwrap_or_default(),
                c["count"].as_u64().unwrap_or(0)
            );
        }
    }
    if let Some(m) = summary["sign_flips"]["median"].as_array() {
        println!("  median sign flips at {}: {:?}", summary["sign_flips"]["steps"], m);
    }
}

fn edge_style(action: Action) -> EdgeStyle {
    let styles = ["style=dashed", "style=solid", "style=dotted"];
    action
        .alphabet()
        .iter()
        .zip(styles)
        .map(|(&c, s)| (c, s.to_string()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleArgs {
    /// Truncation point of the series and of the resistance table.
    pub n: u64,
    pub trials: u64,
    /// Steps per walk on Z; zero skips the walks.
    pub horizon: u64,
    pub walks: u64,
    pub seed: u64,
}

const GREEN_ROWS: u64 = 10;

/// Certificates for the counterexample chain, the exact-versus-Monte-Carlo
/// Green table and an irreducibility witness. Fails with an assertion error
/// when the verdicts are not (converges, converges, diverges).
pub fn counterexample(args: &CounterexampleArgs, out: &Path) -> Result<RunManifest, CliError> {
    if args.n < 2 {
        return Err(CliError::Config(format!("N must be at least 2, got {}", args.n)));
    }
    let params = ChainParams::Counterexample;
    let first = first_moment_series(params, args.n)?;
    let table = ResistanceTable::build(&BirthDeathChain::reflected(params)?, args.n)?;
    let transience = transience_series(&table);
    let (flips, kappa) = expected_sign_flips(&table)?;

    let mut green = Vec::new();
    for k in (1..=GREEN_ROWS).take_while(|k| 2 * k + 8 < args.n) {
        let exact = exact_green_birthdeath(&table, k)?;
        let mut row = json!({"n": k, "exact_lo": exact.lo, "exact_hi": exact.hi});
        if args.trials > 0 {
            let mc = mc_green_birthdeath(&table, k, args.trials, args.seed.wrapping_add(k))?;
            row["mc"] = json!(mc);
            row["relative_error"] = json!((mc.mean - exact.mid()).abs() / exact.mid());
        }
        green.push(row);
    }

    let m = args.n.min(1000) as i64;
    let xs: Vec<i64> = (-m..=m).collect();
    let witness = uniform_irreducibility(&CounterexampleChain::standard(), &xs, 1)?;

    let mut report = json!({
        "n": args.n,
        "first_moment": first.to_json(),
        "transience": transience.to_json(),
        "sign_flips": flips.to_json(),
        "sign_flip_kappa": kappa,
        "green": green,
        "irreducibility": witness,
    });
    if args.trials > 0 && args.horizon > 0 && args.walks > 0 {
        let target = Target::Chain { params, start: 0 };
        let checkpoints: Vec<u64> = std::iter::successors(Some(10u64), |c| c.checked_mul(10))
            .take_while(|&c| c < args.horizon)
            .chain([args.horizon])
            .collect();
        let walk = WalkConfig::new(target, args.horizon, args.walks, args.seed).with_checkpoints(checkpoints);
        let records = run_walks(&walk)?;
        report["walks"] = json!({
            "trajectories": args.walks,
            "steps": args.horizon,
            "median_final_distance": median(records.iter().map(|r| r.final_distance).collect()),
            "sign_flips": sign_flip_profile(&records)?,
        });
    }

    let mut dir = OutputDir::create(out)?;
    dir.write_json("certificates.json", &report)?;
    let manifest = dir.finish("counterexample", json!(args), args.seed)?;

    println!("first moment  {:?}  S(N) = {}", first.verdict, first.last());
    println!("transience    {:?}  R(N) = {}", transience.verdict, transience.last());
    println!(
        "sign flips    {:?}  J(N) = {}, kappa = {kappa}",
        flips.verdict,
        flips.last()
    );
    for row in &green {
        match row.get("mc") {
            Some(mc) => println!(
                "  G({}) in [{}, {}], mc {}",
                row["n"], row["exact_lo"], row["exact_hi"], mc["mean"]
            ),
            None => println!("  G({}) in [{}, {}]", row["n"], row["exact_lo"], row["exact_hi"]),
        }
    }
    match &witness {
        IrreducibilityOutcome::Witness { c, k, .. } => println!("irreducible   c = {c}, K = {k}"),
        IrreducibilityOutcome::Failure { edges } => println!("irreducibility fails on {} edges", edges.len()),
    }

    let verdicts = [first.verdict, transience.verdict, flips.verdict];
    if verdicts != [Verdict::Converges, Verdict::Converges, Verdict::Diverges] {
        return Err(CliError::Check(format!("unexpected verdicts {verdicts:?}")));
    }
    if let IrreducibilityOutcome::Failure { edges } = witness {
        return Err(CliError::Check(format!(
            "{} edges never reached in one step",
            edges.len()
        )));
    }
    Ok(manifest)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFormat {
    Dot,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphArgs {
    pub action: Action,
    pub center: String,
    pub radius: u64,
    pub format: GraphFormat,
}

pub fn render_graph(args: &GraphArgs) -> Result<String, CliError> {
    let center: ActionPoint = args.action.parse_point(&args.center)?;
    let g = SchreierGraph::new(center.clone());
    Ok(match args.format {
        GraphFormat::Dot => export_dot(&g, &center, args.radius, &edge_style(args.action))?,
        GraphFormat::Csv => export_csv(&g, &center, args.radius)?,
    })
}

pub fn graph(args: &GraphArgs, out: &Path) -> Result<RunManifest, CliError> {
    let text = render_graph(args)?;
    let name = match args.format {
        GraphFormat::Dot => "graph.dot",
        GraphFormat::Csv => "graph.csv",
    };
    let mut dir = OutputDir::create(out)?;
    dir.write(name, text.as_bytes())?;
    dir.finish("graph", json!(args), 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedArgs {
    pub radius: u64,
    pub direction: EmbedDirection,
}

/// Exhaustive embedding check; an assertion error when anything is violated.
pub fn embed_check(args: &EmbedArgs, out: Option<&Path>) -> Result<Option<RunManifest>, CliError> {
    let report = verify_embedding(args.radius, args.direction);
    println!(
        "{:?} within radius {}: {} vertices checked, {} violations",
        args.direction,
        args.radius,
        report.checked,
        report.violations.len()
    );
    for v in report.violations.iter().take(10) {
        println!(
            "  {}.{}: expected {}, found {}",
            v.vertex, v.letter, v.expected, v.found
        );
    }
    let manifest = match out {
        Some(out) => {
            let mut dir = OutputDir::create(out)?;
            dir.write_json("report.json", &report)?;
            Some(dir.finish("embed-check", json!(args), 0)?)
        }
        None => None,
    };
    if !report.violations.is_empty() {
        return Err(CliError::Check(format!(
            "{} embedding violations",
            report.violations.len()
        )));
    }
    Ok(manifest)
}

/// Runs the command recorded in `manifest` again into `out` and compares
/// the output digests.
pub fn rerun(manifest: &RunManifest, out: &Path) -> Result<RunManifest, CliError> {
    let bad = |e: serde_json::Error| CliError::Config(format!("manifest config: {e}"));
    let again = match manifest.command.as_str() {
        "simulate" => {
            let cfg: RunConfig = serde_json::from_value(manifest.config.clone()).map_err(bad)?;
            simulate(&cfg, Some(manifest.seed), out)?
        }
        "counterexample" => {
            let args: CounterexampleArgs = serde_json::from_value(manifest.config.clone()).map_err(bad)?;
            counterexample(&args, out)?
        }
        "graph" => {
            let args: GraphArgs = serde_json::from_value(manifest.config.clone()).map_err(bad)?;
            graph(&args, out)?
        }
        "embed-check" => {
            let args: EmbedArgs = serde_json::from_value(manifest.config.clone()).map_err(bad)?;
            embed_check(&args, Some(out))?.expect("output directory given")
        }
        other => return Err(CliError::Config(format!("unknown command `{other}` in manifest"))),
    };
    let diff = manifest.mismatches(&again);
    if !diff.is_empty() {
        return Err(CliError::Check(format!("outputs differ: {}", diff.join(", "))));
    }
    println!("reproduced {} outputs", again.outputs.len());
    Ok(again)
}
