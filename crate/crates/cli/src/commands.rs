use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use focal_core::analysis::{
    bucket_criteria, headroom_quintiles, outcome_transition_matrix, weight_cosine, Bucket,
    TransitionMatrix, EASY_THRESHOLD, HARD_THRESHOLD,
};
use focal_core::format::fmt_sig;
use focal_core::instances::random_group;
use focal_core::sim::{run_experiment, Mode, TrajectoryRecord};
use focal_core::tensor_file::{load_score_tensor, write_score_tensor, LoadOptions, LoadedGroup};
use focal_core::verify::verify_theory;
use focal_core::{pair_outcomes, synthesize, SynthesisResult};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    AnalyzeArgs, Command, FixtureArgs, SimulateArgs, SynthesisArgs, SynthesizeArgs, VerifyArgs,
};
use crate::config::ExperimentConfig;
use crate::plot::{heatmap, line_chart, Series};

/// What a successful run produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Names of failed verification checks.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run(command: &Command) -> Result<Outcome> {
    match command {
        Command::Synthesize(a) => run_synthesize(a),
        Command::Simulate(a) => run_simulate(a),
        Command::VerifyTheory(a) => run_verify(a),
        Command::Analyze(a) => run_analyze(a),
        Command::GenerateFixture(a) => run_generate_fixture(a),
    }
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

struct Writer<'a> {
    dir: &'a Path,
    outcome: Outcome,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        prepare_out_dir(dir)?;
        Ok(Self {
            dir,
            outcome: Outcome::default(),
        })
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.dir.join(name);
        let file = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn finish(self) -> Outcome {
        self.outcome
    }
}

fn load_group(path: &Path, average_duplicates: bool) -> Result<LoadedGroup> {
    load_score_tensor(path, LoadOptions { average_duplicates })
        .with_context(|| format!("loading tensor {}", path.display()))
}

fn warn_rubric_ignored(cfg: &ExperimentConfig) {
    if cfg.rubric.is_some() {
        log::warn!("tensor files carry their own rubric; the configured rubric is ignored");
    }
}

#[derive(Serialize)]
struct SynthesisReport<'a> {
    group_id: &'a str,
    config: &'a focal_core::SynthesisConfig,
    result: &'a SynthesisResult,
}

fn run_synthesize(args: &SynthesizeArgs) -> Result<Outcome> {
    let cfg = ExperimentConfig::resolve(&args.common, &args.synthesis)?;
    warn_rubric_ignored(&cfg);
    let group = load_group(&args.tensor, args.average_duplicates)?;
    let res = synthesize(&group.tensor, &group.rubric, &cfg.synthesis)?;
    for warning in &res.warnings {
        log::warn!("{}: {warning}", group.group_id);
    }

    let mut w = Writer::new(&cfg.out)?;
    w.csv(
        "rollouts.csv",
        &["rollout", "base_reward", "gibbs_weight", "focal_reward", "base_advantage", "focal_advantage"],
        (0..group.tensor.group_size()).map(|i| {
            vec![
                (i + 1).to_string(),
                fmt_sig(res.base_rewards[i]),
                fmt_sig(res.gibbs.values()[i]),
                fmt_sig(res.focal_rewards[i]),
                fmt_sig(res.base_advantages[i]),
                fmt_sig(res.focal_advantages[i]),
            ]
        }),
    )?;
    w.csv(
        "criteria.csv",
        &["criterion_id", "kind", "base_weight", "saturation", "focal_weight"],
        group.rubric.criteria().iter().enumerate().map(|(k, c)| {
            vec![
                c.id.clone(),
                kind_name(c.kind).to_string(),
                fmt_sig(c.base_weight),
                fmt_sig(res.saturation.values()[k]),
                fmt_sig(res.focal_weights.values()[k]),
            ]
        }),
    )?;
    let ids: Vec<&str> = group.rubric.criteria().iter().map(|c| c.id.as_str()).collect();
    w.csv(
        "criterion_means.csv",
        &["rollout", "criterion_id", "mean_score"],
        (0..group.tensor.group_size()).flat_map(|i| {
            let row = res.criterion_means.row(i).to_vec();
            ids.iter()
                .zip(row)
                .map(move |(id, m)| vec![(i + 1).to_string(), id.to_string(), fmt_sig(m)])
                .collect::<Vec<_>>()
        }),
    )?;
    if cfg.json_report {
        w.json(
            "synthesis.json",
            &SynthesisReport {
                group_id: &group.group_id,
                config: &cfg.synthesis,
                result: &res,
            },
        )?;
    }
    Ok(w.finish())
}

fn kind_name(kind: focal_core::CriterionKind) -> &'static str {
    match kind {
        focal_core::CriterionKind::HardRule => "hard_rule",
        focal_core::CriterionKind::Principle => "principle",
    }
}

#[derive(Serialize)]
struct ModeSummary {
    mode: Mode,
    criterion_id: String,
    bucket: Bucket,
    mean_final_ability: f64,
    min_final_ability: f64,
    max_final_ability: f64,
}

fn run_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::resolve(&args.common, &args.synthesis)?;
    if !args.modes.is_empty() {
        cfg.modes = args.modes.clone();
    }
    let mut modes = Vec::new();
    for m in &cfg.modes {
        if !modes.contains(m) {
            modes.push(*m);
        }
    }
    if let Some(seeds) = &args.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(steps) = args.steps {
        cfg.sim.steps = steps;
    }
    if let Some(g) = args.group_size {
        cfg.sim.group_size = g;
    }
    cfg.sim.validate().context("invalid simulator settings")?;
    let rubric = cfg.sim_rubric()?;

    let jobs: Vec<(Mode, u64)> = modes
        .iter()
        .flat_map(|&m| cfg.seeds.as_slice().iter().map(move |&s| (m, s)))
        .collect();
    log::info!("running {} trajectories", jobs.len());
    let runs: Vec<TrajectoryRecord> = jobs
        .par_iter()
        .map(|&(mode, seed)| {
            let mut spec = cfg.sim.clone();
            spec.seed = seed;
            run_experiment(&spec, &rubric, &cfg.synthesis, mode)
        })
        .collect::<focal_core::Result<_>>()?;

    let mut w = Writer::new(&cfg.out)?;
    for run in &runs {
        let name = format!("trajectory_{}_seed{}.csv", run.mode, run.seed);
        let mut buf = Vec::new();
        run.write_csv(&mut buf)?;
        w.text(&name, std::str::from_utf8(&buf)?)?;
    }

    let ids = &runs[0].criterion_ids;
    let buckets = &runs[0].buckets;
    w.csv(
        "final.csv",
        &["mode", "seed", "criterion_id", "bucket", "ability", "P", "weight"],
        runs.iter().flat_map(|run| {
            let last = run.steps.last().expect("nonempty trajectory");
            (0..ids.len())
                .map(|k| {
                    vec![
                        run.mode.to_string(),
                        run.seed.to_string(),
                        ids[k].clone(),
                        buckets[k].to_string(),
                        fmt_sig(last.abilities[k]),
                        fmt_sig(last.saturation[k]),
                        fmt_sig(last.weights[k]),
                    ]
                })
                .collect::<Vec<_>>()
        }),
    )?;

    let mut summary = Vec::new();
    for &mode in &modes {
        let of_mode: Vec<&TrajectoryRecord> = runs.iter().filter(|r| r.mode == mode).collect();
        for k in 0..ids.len() {
            let finals: Vec<f64> = of_mode.iter().map(|r| r.final_abilities()[k]).collect();
            summary.push(ModeSummary {
                mode,
                criterion_id: ids[k].clone(),
                bucket: buckets[k],
                mean_final_ability: finals.iter().sum::<f64>() / finals.len() as f64,
                min_final_ability: finals.iter().copied().fold(f64::INFINITY, f64::min),
                max_final_ability: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    w.csv(
        "summary.csv",
        &["mode", "criterion_id", "bucket", "mean_final_ability", "min_final_ability", "max_final_ability"],
        summary.iter().map(|s| {
            vec![
                s.mode.to_string(),
                s.criterion_id.clone(),
                s.bucket.to_string(),
                fmt_sig(s.mean_final_ability),
                fmt_sig(s.min_final_ability),
                fmt_sig(s.max_final_ability),
            ]
        }),
    )?;

    if modes.contains(&Mode::Static) && modes.len() > 1 {
        let mut rows = Vec::new();
        for run in runs.iter().filter(|r| r.mode != Mode::Static) {
            let reference = runs
                .iter()
                .find(|r| r.mode == Mode::Static && r.seed == run.seed)
                .expect("static run for every seed");
            for (k, id) in ids.iter().enumerate() {
                let a = run.final_abilities()[k];
                let b = reference.final_abilities()[k];
                rows.push(vec![
                    run.mode.to_string(),
                    run.seed.to_string(),
                    id.clone(),
                    fmt_sig(a),
                    fmt_sig(b),
                    fmt_sig(a - b),
                ]);
            }
        }
        w.csv(
            "paired_vs_static.csv",
            &["mode", "seed", "criterion_id", "ability", "static_ability", "difference"],
            rows,
        )?;
    }

    let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
    w.csv(
        "pass_rates.csv",
        &["mode", "seed", "step", "hard", "medium", "easy"],
        runs.iter().flat_map(|run| {
            run.steps
                .iter()
                .map(|s| {
                    vec![
                        run.mode.to_string(),
                        run.seed.to_string(),
                        s.step.to_string(),
                        opt(s.pass_rates.hard),
                        opt(s.pass_rates.medium),
                        opt(s.pass_rates.easy),
                    ]
                })
                .collect::<Vec<_>>()
        }),
    )?;

    for &mode in &modes {
        let of_mode: Vec<&TrajectoryRecord> = runs.iter().filter(|r| r.mode == mode).collect();
        let n = of_mode.len() as f64;
        let series: Vec<Series> = (0..ids.len())
            .map(|k| Series {
                name: ids[k].clone(),
                points: (0..of_mode[0].steps.len())
                    .map(|t| {
                        let p = of_mode.iter().map(|r| r.steps[t].saturation[k]).sum::<f64>() / n;
                        (t as f64, p)
                    })
                    .collect(),
            })
            .collect();
        let svg = line_chart(
            &format!("Saturation per criterion ({mode}, mean over {} seeds)", of_mode.len()),
            "step",
            "saturation P",
            (0.0, 1.0),
            &series,
        );
        w.text(&format!("saturation_{mode}.svg"), &svg)?;
    }

    if cfg.json_report {
        #[derive(Serialize)]
        struct SimReport<'a> {
            modes: &'a [Mode],
            seeds: &'a [u64],
            sim: &'a focal_core::sim::SimSpec,
            synthesis: &'a focal_core::SynthesisConfig,
            summary: &'a [ModeSummary],
        }
        w.json(
            "simulate.json",
            &SimReport {
                modes: &modes,
                seeds: cfg.seeds.as_slice(),
                sim: &cfg.sim,
                synthesis: &cfg.synthesis,
                summary: &summary,
            },
        )?;
    }
    Ok(w.finish())
}

fn run_verify(args: &VerifyArgs) -> Result<Outcome> {
    let cfg = ExperimentConfig::resolve(&args.common, &SynthesisArgs::default())?;
    let mut opts = cfg.verify;
    let overrides = [
        (&mut opts.mc_instances, args.mc_instances),
        (&mut opts.gap_models, args.gap_models),
        (&mut opts.sphere_directions, args.sphere_dirs),
        (&mut opts.gibbs_instances, args.gibbs_instances),
        (&mut opts.shift_tensors, args.shift_tensors),
        (&mut opts.random_draws, args.draws),
    ];
    for (slot, value) in overrides {
        if let Some(v) = value {
            *slot = v;
        }
    }
    if let Some(n) = args.mc_samples {
        opts.mc_samples = n;
    }
    if opts.mc_samples == 0 {
        bail!("--mc-samples must be at least 1");
    }
    let seed = args.seed.unwrap_or(cfg.verify_seed);
    log::info!("running theory checks with seed {seed}");
    let report = verify_theory(seed, &opts)?;

    let mut w = Writer::new(&cfg.out)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    w.text("verification.csv", std::str::from_utf8(&buf)?)?;
    if cfg.json_report {
        w.text("verification.json", &(report.to_json()? + "\n"))?;
    }
    let mut outcome = w.finish();
    for c in report.failures() {
        eprintln!(
            "FAIL {}: value {} {} target {} (tolerance {})",
            c.name,
            fmt_sig(c.value),
            c.relation.as_str(),
            fmt_sig(c.target),
            fmt_sig(c.tolerance)
        );
        outcome.failures.push(c.name.clone());
    }
    println!(
        "{}/{} checks passed",
        report.checks.len() - outcome.failures.len(),
        report.checks.len()
    );
    Ok(outcome)
}

fn run_analyze(args: &AnalyzeArgs) -> Result<Outcome> {
    let cfg = ExperimentConfig::resolve(&args.common, &args.synthesis)?;
    warn_rubric_ignored(&cfg);
    let tau = cfg.synthesis.tau;

    let mut total = TransitionMatrix::default();
    let mut group_rows = Vec::new();
    let mut quintile_rows = Vec::new();
    let mut criterion_rows = Vec::new();
    let mut heat_labels = Vec::new();
    let mut heat_values = Vec::new();

    for path in &args.tensors {
        let g = load_group(path, args.average_duplicates)?;
        let res = synthesize(&g.tensor, &g.rubric, &cfg.synthesis)?;
        let base = g.rubric.base_weights();
        let focal = res.focal_weights.values();
        let before = pair_outcomes(&base, &g.tensor, tau)?;
        let after = pair_outcomes(focal, &g.tensor, tau)?;
        let m = outcome_transition_matrix(&before, &after)?;
        total.accumulate(&m);
        group_rows.push(vec![
            g.group_id.clone(),
            g.tensor.group_size().to_string(),
            g.tensor.num_criteria().to_string(),
            fmt_sig(weight_cosine(&base, focal)?),
            fmt_sig(m.diagonal() as f64 / m.total() as f64),
        ]);

        let q_static = headroom_quintiles(&res.saturation, &base)?;
        let q_focal = headroom_quintiles(&res.saturation, focal)?;
        for (n, size) in q_static.sizes.iter().enumerate() {
            quintile_rows.push(vec![
                g.group_id.clone(),
                (n + 1).to_string(),
                size.to_string(),
                fmt_sig(q_static.shares[n]),
                fmt_sig(q_focal.shares[n]),
            ]);
        }
        let mut row = q_focal.shares.clone();
        row.resize(5, f64::NAN);
        heat_labels.push(g.group_id.clone());
        heat_values.push(row);

        let means: Vec<f64> = (0..g.rubric.len())
            .map(|k| {
                let col = res.criterion_means.column(k);
                col.iter().sum::<f64>() / col.len() as f64
            })
            .collect();
        let buckets = bucket_criteria(&means, HARD_THRESHOLD, EASY_THRESHOLD)?;
        for (k, c) in g.rubric.criteria().iter().enumerate() {
            criterion_rows.push(vec![
                g.group_id.clone(),
                c.id.clone(),
                fmt_sig(means[k]),
                buckets[k].to_string(),
                fmt_sig(res.saturation.values()[k]),
                fmt_sig(base[k]),
                fmt_sig(focal[k]),
            ]);
        }
    }

    let mut w = Writer::new(&cfg.out)?;
    w.csv(
        "groups.csv",
        &["group_id", "G", "K", "weight_cosine", "diagonal_fraction"],
        group_rows,
    )?;
    let outcomes = TransitionMatrix::OUTCOMES;
    w.csv(
        "transitions.csv",
        &["static_outcome", "focal_outcome", "count"],
        outcomes.iter().flat_map(|&a| {
            outcomes
                .iter()
                .map(|&b| vec![a.to_string(), b.to_string(), total.get(a, b).to_string()])
                .collect::<Vec<_>>()
        }),
    )?;
    w.csv(
        "quintiles.csv",
        &["group_id", "quintile", "size", "static_share", "focal_share"],
        quintile_rows,
    )?;
    w.csv(
        "criteria.csv",
        &["group_id", "criterion_id", "mean_score", "bucket", "saturation", "base_weight", "focal_weight"],
        criterion_rows,
    )?;

    let labels: Vec<String> = outcomes.iter().map(|o| format!("{o:+}")).collect();
    let n = total.total().max(1) as f64;
    let values: Vec<Vec<f64>> = outcomes
        .iter()
        .map(|&a| outcomes.iter().map(|&b| total.get(a, b) as f64 / n).collect())
        .collect();
    let notes: Vec<Vec<String>> = values
        .iter()
        .map(|r| r.iter().map(|v| format!("{:.1}%", 100.0 * v)).collect())
        .collect();
    w.text(
        "transitions.svg",
        &heatmap(
            "Pair outcome transitions (static to focal)",
            "static outcome",
            "focal outcome",
            &labels,
            &labels,
            &values,
            &notes,
        ),
    )?;
    let q_labels: Vec<String> = (1..=5).map(|q| format!("Q{q}")).collect();
    let q_notes: Vec<Vec<String>> = heat_values
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| if v.is_nan() { "-".into() } else { format!("{v:.2}") })
                .collect()
        })
        .collect();
    let q_values: Vec<Vec<f64>> = heat_values
        .iter()
        .map(|r| r.iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect())
        .collect();
    w.text(
        "quintiles.svg",
        &heatmap(
            "Focal weight share by headroom quintile (Q1 least headroom)",
            "group",
            "quintile",
            &heat_labels,
            &q_labels,
            &q_values,
            &q_notes,
        ),
    )?;
    if cfg.json_report {
        #[derive(Serialize)]
        struct AnalyzeReport<'a> {
            groups: usize,
            transitions: &'a TransitionMatrix,
        }
        w.json(
            "analysis.json",
            &AnalyzeReport {
                groups: args.tensors.len(),
                transitions: &total,
            },
        )?;
    }
    Ok(w.finish())
}

fn run_generate_fixture(args: &FixtureArgs) -> Result<Outcome> {
    if args.hard_rules > args.criteria {
        bail!(
            "--hard-rules ({}) exceeds --criteria ({})",
            args.hard_rules,
            args.criteria
        );
    }
    let (tensor, rubric) = random_group(
        args.seed,
        args.group_size,
        args.criteria,
        args.hard_rules,
        args.s_max,
    )?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        prepare_out_dir(dir)?;
    }
    write_score_tensor(&args.out, &args.group_id, &tensor, &rubric)?;
    Ok(Outcome {
        files: vec![args.out.clone()],
        failures: Vec::new(),
    })
}
