use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use railsched::checkpoint::Checkpoint;
use railsched::formats::{self, ScenarioFile};
use railsched::inputs::Inputs;
use railsched::runs::{self, MetricsLine, TimingLine};
use railsched::svg::{render_time_space_svg, SvgStyle};
use railsched::training::{self, InputPaths, TrainFile};
use railsched_core::harness::{compare, Controller, RunRecord, Scenario};

#[derive(Parser)]
#[command(
    name = "railsched",
    version,
    about = "Railway disruption rescheduling: simulate, train, evaluate, render, compare"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario under one controller.
    Simulate(SimulateArgs),
    /// Train a rescheduling policy.
    Train(TrainArgs),
    /// Compare a policy with timetable-only control over several seeds.
    Evaluate(EvaluateArgs),
    /// Draw a time-space diagram of a saved run record.
    Render(RenderArgs),
    /// Side-by-side metrics and diagrams of two saved run records.
    Compare(CompareArgs),
}

/// Route, timetable and OD files. With none given the built-in desk line
/// is used.
#[derive(Args, Clone, Default)]
struct InputArgs {
    #[arg(long)]
    route: Option<PathBuf>,
    #[arg(long)]
    timetable: Option<PathBuf>,
    #[arg(long)]
    od: Option<PathBuf>,
}

impl InputArgs {
    fn load(&self, fallback: Option<&InputPaths>) -> Result<Inputs> {
        let pick = |flag: &Option<PathBuf>, f: fn(&InputPaths) -> &PathBuf| {
            flag.clone().or_else(|| fallback.map(|p| f(p).clone()))
        };
        let route = pick(&self.route, |p| &p.route);
        let timetable = pick(&self.timetable, |p| &p.timetable);
        let od = pick(&self.od, |p| &p.od);
        match (route, timetable, od) {
            (None, None, None) => Ok(Inputs::desk()),
            (Some(r), Some(t), Some(o)) => Inputs::load(&r, &t, &o).context("loading inputs"),
            _ => bail!("--route, --timetable and --od must be given together"),
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ControllerArg {
    TimetableOnly,
    AllProceed,
    Policy,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// Scenario TOML; no disruption from service start when absent.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "timetable-only")]
    controller: ControllerArg,
    /// Policy checkpoint, required with `--controller policy`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run length; until every train leaves service when absent.
    #[arg(long)]
    horizon_s: Option<u32>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Diagram path; defaults to `<out-dir>/<controller>.svg`.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training configuration TOML.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    inputs: InputArgs,
    /// Overrides the configured training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured iteration count.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    checkpoint: PathBuf,
    /// First evaluation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of evaluation seeds.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long)]
    horizon_s: Option<u32>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Write diagrams of the first seed into this directory instead of the
    /// output directory.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// Run record JSON written by `simulate`.
    record: PathBuf,
    /// Output path; defaults to the record path with an `.svg` extension.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    baseline: PathBuf,
    candidate: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn load_scenario(path: Option<&Path>, inputs: &Inputs) -> Result<(Scenario, Option<u32>)> {
    match path {
        Some(p) => {
            let f = ScenarioFile::parse(&formats::read_text(p)?).with_context(|| format!("parsing {}", p.display()))?;
            Ok((f.resolve(&inputs.model)?, f.horizon_s))
        }
        None => Ok((Scenario { name: "clear".into(), ..Scenario::default() }, None)),
    }
}

fn load_policy(path: &Path) -> Result<Controller> {
    let ck = Checkpoint::parse(&formats::read_text(path)?).with_context(|| format!("reading {}", path.display()))?;
    Ok(Controller::Policy(Arc::new(ck.to_params()?)))
}

fn write(path: &Path, text: &str) -> Result<()> {
    formats::write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let inputs = a.inputs.load(None)?;
    let ctx = inputs.context()?;
    let (scenario, file_horizon) = load_scenario(a.scenario.as_deref(), &inputs)?;
    let controller = match (a.controller, &a.checkpoint) {
        (ControllerArg::TimetableOnly, _) => Controller::TimetableOnly,
        (ControllerArg::AllProceed, _) => Controller::AllProceed,
        (ControllerArg::Policy, Some(p)) => load_policy(p)?,
        (ControllerArg::Policy, None) => bail!("--controller policy needs --checkpoint"),
    };
    let rec = runs::run(&inputs, &ctx, &scenario, &controller, a.horizon_s.or(file_horizon), a.seed)?;
    let line = MetricsLine::new(&rec);
    let out = &a.out_dir;
    write(&out.join("record.json"), &serde_json::to_string(&rec)?)?;
    write(&out.join("events.jsonl"), &formats::to_jsonl(&runs::named_events(&rec, &inputs.model))?)?;
    write(&out.join("metrics.jsonl"), &formats::to_jsonl([&line])?)?;
    write(&out.join("timing.jsonl"), &formats::to_jsonl([&TimingLine::new(&rec)])?)?;
    let table = runs::summary_table(std::slice::from_ref(&line));
    write(&out.join("summary.txt"), &table)?;
    let svg = a.svg.unwrap_or_else(|| out.join(format!("{}.svg", rec.controller)));
    write(&svg, &render_time_space_svg(&rec, &SvgStyle::default()))?;
    print!("{table}");
    println!("simulated {} s in {:.2} s wall clock", rec.end_s - rec.start_s, rec.wall_clock_s);
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut file =
        TrainFile::parse(&formats::read_text(&a.config)?).with_context(|| format!("parsing {}", a.config.display()))?;
    file.rebase(a.config.parent().unwrap_or(Path::new(".")));
    if let Some(s) = a.seed {
        file.train.seed = s;
    }
    if let Some(n) = a.iterations {
        file.train.iterations = n;
    }
    let inputs = a.inputs.load(file.inputs.as_ref())?;
    let ctx = inputs.context()?;
    let total = file.train.iterations;
    let trained = training::train(&inputs, &ctx, &file, |r, _| {
        eprintln!(
            "iter {:>4}/{total}  steps {:>8}  mean return {:>12.3}  entropy {:.3}",
            r.iteration + 1,
            r.steps,
            r.mean_return,
            r.loss.entropy
        );
    })?;
    write(&a.out_dir.join("checkpoint.json"), &trained.checkpoint.to_json()?)?;
    write(&a.out_dir.join("learning_curve.jsonl"), &formats::to_jsonl(&trained.curve)?)?;
    println!("wrote {}", a.out_dir.join("checkpoint.json").display());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let inputs = a.inputs.load(None)?;
    let ctx = inputs.context()?;
    let (scenario, file_horizon) = load_scenario(a.scenario.as_deref(), &inputs)?;
    let horizon = a.horizon_s.or(file_horizon);
    let policy = load_policy(&a.checkpoint)?;
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds.max(1)).collect();
    let base = runs::run_seeds(&inputs, &ctx, &scenario, &Controller::TimetableOnly, horizon, &seeds)?;
    let cand = runs::run_seeds(&inputs, &ctx, &scenario, &policy, horizon, &seeds)?;
    let lines: Vec<MetricsLine> = base.iter().chain(&cand).map(MetricsLine::new).collect();
    let timing: Vec<TimingLine> = base.iter().chain(&cand).map(TimingLine::new).collect();
    let (mb, mc) = (runs::mean_metrics(&lines[..base.len()]), runs::mean_metrics(&lines[base.len()..]));
    let reduction = if mb.stop_time_s > 0.0 { 100.0 * (1.0 - mc.stop_time_s / mb.stop_time_s) } else { 0.0 };
    let mut report = runs::summary_table(&lines);
    report.push_str(&format!(
        "\nmeans over {} seeds\n  timetable-only: arrived {:.1}, stop time {:.1} s, stop events {:.2}\n  policy:         arrived {:.1}, stop time {:.1} s, stop events {:.2}\n",
        seeds.len(),
        mb.arrived,
        mb.stop_time_s,
        mb.stop_events,
        mc.arrived,
        mc.stop_time_s,
        mc.stop_events
    ));
    let stop_ok = mb.stop_time_s > 0.0 && reduction >= 50.0;
    let arrived_ok = mc.arrived >= mb.arrived;
    report.push_str(&format!(
        "thresholds\n  stop-time reduction {reduction:.1}% (target >= 50%): {}\n  arrived {:.1} vs baseline {:.1} (target >= baseline): {}\n",
        if stop_ok { "met" } else { "not met" },
        mc.arrived,
        mb.arrived,
        if arrived_ok { "met" } else { "not met" }
    ));
    let out = &a.out_dir;
    write(&out.join("metrics.jsonl"), &formats::to_jsonl(&lines)?)?;
    write(&out.join("timing.jsonl"), &formats::to_jsonl(&timing)?)?;
    write(&out.join("summary.txt"), &report)?;
    let cmp = compare(&base[0], &cand[0])?;
    write(&out.join("comparison.json"), &serde_json::to_string_pretty(&cmp)?)?;
    let svg_dir = a.svg.unwrap_or_else(|| out.clone());
    for rec in [&base[0], &cand[0]] {
        write(&svg_dir.join(format!("{}.svg", rec.controller)), &render_time_space_svg(rec, &SvgStyle::default()))?;
    }
    print!("{report}");
    Ok(())
}

fn read_record(path: &Path) -> Result<RunRecord> {
    serde_json::from_str(&formats::read_text(path)?).with_context(|| format!("reading run record {}", path.display()))
}

fn render(a: RenderArgs) -> Result<()> {
    let rec = read_record(&a.record)?;
    if rec.traces.is_empty() && rec.disruptions.is_empty() {
        bail!("{} holds no trains and no disruptions to draw", a.record.display());
    }
    let svg = a.svg.unwrap_or_else(|| a.record.with_extension("svg"));
    write(&svg, &render_time_space_svg(&rec, &SvgStyle::default()))?;
    println!("wrote {}", svg.display());
    Ok(())
}

fn compare_cmd(a: CompareArgs) -> Result<()> {
    let base = read_record(&a.baseline)?;
    let cand = read_record(&a.candidate)?;
    let cmp = compare(&base, &cand)?;
    let table = runs::comparison_table(&cmp);
    let out = &a.out_dir;
    write(&out.join("comparison.json"), &serde_json::to_string_pretty(&cmp)?)?;
    write(&out.join("comparison.txt"), &table)?;
    for (tag, rec) in [("baseline", &base), ("candidate", &cand)] {
        let style =
            SvgStyle { title: Some(format!("{tag}: {} / {}", rec.scenario, rec.controller)), ..SvgStyle::default() };
        write(&out.join(format!("{tag}.svg")), &render_time_space_svg(rec, &style))?;
    }
    print!("{table}");
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Simulate(a) => simulate(a),
        Cmd::Train(a) => train(a),
        Cmd::Evaluate(a) => evaluate(a),
        Cmd::Render(a) => render(a),
        Cmd::Compare(a) => compare_cmd(a),
    }
}
