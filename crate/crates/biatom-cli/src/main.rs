mod config;
mod output;

use anyhow::{anyhow, bail, Result};
use biatom::linear::{self, Mode};
use biatom::optimize::Axis;
use biatom::sweep::{self, Objective};
use biatom::twophoton::{ChannelTag, Geometry};
use biatom::{make_pulse, PulseShape, SystemParams, TimeGrid};
use clap::{Args, Parser, Subcommand};
use config::{load_config, parse_sweep, RunConfig, SweepAxis};
use output::{emit, render_json, CsvTable};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "biatom",
    about = "One- and two-photon scattering off two interacting two-level systems in a waveguide",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonOpts {
    /// coupling rate g² (inverse time)
    #[arg(long)]
    g2: Option<f64>,
    /// carrier-atom detuning δ
    #[arg(long)]
    delta: Option<f64>,
    /// exchange interaction Δ
    #[arg(long = "Delta", allow_hyphen_values = true)]
    exchange: Option<f64>,
    /// doubly-excited-state shift β
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// separation phase φ = k_F·a in radians
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// propagation delay a/c (0 = Markov limit)
    #[arg(long)]
    delay: Option<f64>,
    /// pulse shape
    #[arg(long, value_parser = ["square", "gaussian"])]
    pulse: Option<String>,
    /// pulse duration T
    #[arg(long = "T")]
    duration: Option<f64>,
    /// samples on the time grid
    #[arg(long)]
    grid_n: Option<usize>,
    /// sweep axis param:lo:hi:n (repeatable)
    #[arg(long)]
    sweep: Vec<String>,
    /// JSON config file; explicit flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// output format
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// keep the ω-dependence of the separation phase (linear module only)
    #[arg(long)]
    non_markov: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single-photon transmission/reflection spectra
    Spectrum {
        #[command(flatten)]
        common: CommonOpts,
        /// which amplitude ratio to tabulate
        #[arg(long, value_parser = ["traveling", "c", "d"], default_value = "traveling")]
        mode: String,
    },
    /// Square-pulse transmission landscape over (φ, g²T)
    Map {
        #[command(flatten)]
        common: CommonOpts,
        /// panel preset: a (δT=ΔT=0), b (δT=10), c (ΔT=10), d (δT=ΔT=10)
        #[arg(long, value_parser = ["a", "b", "c", "d"])]
        panel: Option<String>,
        /// δ·T for the map (overrides the panel preset)
        #[arg(long)]
        delta_t: Option<f64>,
        /// Δ·T for the map (overrides the panel preset)
        #[arg(long, allow_hyphen_values = true)]
        exchange_t: Option<f64>,
    },
    /// Two-photon channel probabilities and wavefunctions
    TwoPhoton {
        #[command(flatten)]
        common: CommonOpts,
        /// input geometry
        #[arg(long, value_parser = ["standing", "coprop", "counter"], default_value = "standing")]
        geometry: String,
        /// tie Δ = g²|sin φ| while sweeping φ (the two-photon figure family)
        #[arg(long)]
        exchange_tracks_phi: bool,
        /// dump |f(t1,t2)|² per channel to <out-stem>.<channel>.csv, downsampled
        /// to this many samples per axis
        #[arg(long)]
        dump_n: Option<usize>,
    },
    /// Operating-point search
    Optimize {
        #[command(flatten)]
        common: CommonOpts,
        /// objective function
        #[arg(long, value_parser = ["sorter", "linearity", "counterprop-leakage"])]
        objective: String,
        /// optimizer evaluation budget
        #[arg(long, default_value_t = 400)]
        max_evals: usize,
    },
    /// Run the invariant and oracle-equivalence suites
    Validate {
        #[command(flatten)]
        common: CommonOpts,
        /// RNG seed for the randomized suites
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn merge(common: &CommonOpts, command: &str) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    cfg.command = command.to_string();
    if let Some(v) = common.g2 {
        cfg.g2 = v;
    }
    if let Some(v) = common.delta {
        cfg.delta = v;
    }
    if let Some(v) = common.exchange {
        cfg.exchange = v;
    }
    if let Some(v) = common.beta {
        cfg.beta = v;
    }
    if let Some(v) = common.phi {
        cfg.phi = v;
    }
    if let Some(v) = common.delay {
        cfg.delay = v;
    }
    if let Some(v) = &common.pulse {
        cfg.pulse = v.clone();
    }
    if let Some(v) = common.duration {
        cfg.duration = v;
    }
    if let Some(v) = common.grid_n {
        cfg.grid_n = v;
    }
    if !common.sweep.is_empty() {
        cfg.sweep = common.sweep.clone();
    }
    if common.non_markov {
        cfg.non_markov = true;
    }
    if cfg.g2 < 0.0 {
        bail!("g2 must be non-negative");
    }
    if cfg.duration <= 0.0 {
        bail!("T must be positive");
    }
    Ok(cfg)
}

fn params(cfg: &RunConfig) -> SystemParams {
    SystemParams::new(cfg.g2, cfg.delta, cfg.exchange, cfg.beta, cfg.phi, cfg.delay)
}

fn sweep_axes(cfg: &RunConfig) -> Result<Vec<SweepAxis>> {
    cfg.sweep.iter().map(|s| parse_sweep(s)).collect()
}

fn find_axis<'a>(axes: &'a [SweepAxis], name: &str) -> Option<&'a SweepAxis> {
    axes.iter().find(|a| a.param == name)
}

fn pulse_shape(cfg: &RunConfig) -> Result<PulseShape> {
    match cfg.pulse.as_str() {
        "square" => Ok(PulseShape::Square),
        "gaussian" => Ok(PulseShape::Gaussian),
        other => bail!("unknown pulse shape {other:?}"),
    }
}

fn wants_json(_cfg: &RunConfig, common: &CommonOpts, default_json: bool) -> bool {
    match common.format.as_deref() {
        Some("json") => true,
        Some(_) => false,
        None => default_json,
    }
}

fn cmd_spectrum(common: &CommonOpts, mode: &str) -> Result<()> {
    let mut cfg = merge(common, "spectrum")?;
    cfg.options.insert("mode".into(), serde_json::json!(mode));
    let p = params(&cfg);
    let axes = sweep_axes(&cfg)?;
    let (lo, hi, n) = match find_axis(&axes, "omega") {
        Some(a) => (a.lo, a.hi, a.n),
        None => (-10.0 * p.g2.max(1e-12), 10.0 * p.g2.max(1e-12), 401),
    };
    let markov = !cfg.non_markov;
    let rows: Vec<Vec<f64>> = match mode {
        "traveling" => sweep::spectrum_table(&p, lo, hi, n, markov)
            .into_iter()
            .map(|r| vec![r.omega, r.transmission, r.arg_t, r.arg_r])
            .collect(),
        m => {
            let tf = linear::standing_wave_transfer(&p, if m == "c" { Mode::C } else { Mode::D }, markov);
            (0..n)
                .map(|j| {
                    let w = if n == 1 { lo } else { lo + (hi - lo) * j as f64 / (n - 1) as f64 };
                    let v = tf.eval(w);
                    vec![w, v.norm_sqr(), v.arg(), 0.0]
                })
                .collect()
        }
    };
    let table = CsvTable {
        header: ["omega(1/time)", "transmission", "arg_t(rad)", "arg_r(rad)"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
    };
    if wants_json(&cfg, common, false) {
        let payload = serde_json::json!({"rows": table.rows, "columns": table.header});
        emit(&render_json(&cfg, payload), common.out.as_deref())
    } else {
        emit(&table.render(&cfg), common.out.as_deref())
    }
}

fn cmd_map(
    common: &CommonOpts,
    panel: Option<&str>,
    delta_t: Option<f64>,
    exchange_t: Option<f64>,
) -> Result<()> {
    let mut cfg = merge(common, "map")?;
    let (panel_dt, panel_ex) = match panel {
        Some("a") | None => (0.0, 0.0),
        Some("b") => (10.0, 0.0),
        Some("c") => (0.0, 10.0),
        Some("d") => (10.0, 10.0),
        Some(other) => bail!("unknown panel {other:?}"),
    };
    let dt = delta_t.unwrap_or(panel_dt);
    let ex = exchange_t.unwrap_or(panel_ex);
    cfg.options.insert("deltaT".into(), serde_json::json!(dt));
    cfg.options.insert("DeltaT".into(), serde_json::json!(ex));
    if let Some(p) = panel {
        cfg.options.insert("panel".into(), serde_json::json!(p));
    }
    let axes = sweep_axes(&cfg)?;
    let phis = match find_axis(&axes, "phi") {
        Some(a) => sweep::linspace(a.lo, a.hi, a.n),
        None => sweep::linspace(0.0, 2.0 * std::f64::consts::PI, 100),
    };
    let g2_ts = match find_axis(&axes, "g2T") {
        Some(a) => sweep::linspace(a.lo, a.hi, a.n),
        None => sweep::logspace(0.1, 20.0, 100),
    };
    let pts = sweep::transmission_map(dt, ex, &phis, &g2_ts);
    let table = CsvTable {
        header: ["phi(rad)", "g2T", "transmission"].iter().map(|s| s.to_string()).collect(),
        rows: pts.iter().map(|p| vec![p.phi, p.g2_t, p.transmission]).collect(),
    };
    if wants_json(&cfg, common, false) {
        let payload = serde_json::json!({"rows": table.rows, "columns": table.header});
        emit(&render_json(&cfg, payload), common.out.as_deref())
    } else {
        emit(&table.render(&cfg), common.out.as_deref())
    }
}

fn parse_geometry(s: &str) -> Result<Geometry> {
    Ok(match s {
        "standing" => Geometry::Standing,
        "coprop" => Geometry::Copropagating,
        "counter" => Geometry::Counterpropagating,
        other => bail!("unknown geometry {other:?}"),
    })
}

fn channel_columns(geometry: Geometry) -> Vec<ChannelTag> {
    match geometry {
        Geometry::Standing => vec![ChannelTag::Cc, ChannelTag::Dd],
        _ => vec![ChannelTag::Aa, ChannelTag::Bb, ChannelTag::Ab],
    }
}

fn cmd_two_photon(
    common: &CommonOpts,
    geometry: &str,
    exchange_tracks_phi: bool,
    dump_n: Option<usize>,
) -> Result<()> {
    let mut cfg = merge(common, "two-photon")?;
    cfg.options.insert("geometry".into(), serde_json::json!(geometry));
    cfg.options
        .insert("exchange_tracks_phi".into(), serde_json::json!(exchange_tracks_phi));
    let geom = parse_geometry(geometry)?;
    if pulse_shape(&cfg)? != PulseShape::Square {
        bail!("two-photon channels are implemented for square pulses");
    }
    let axes = sweep_axes(&cfg)?;
    let tags = channel_columns(geom);

    if let Some(phi_axis) = find_axis(&axes, "phi") {
        // sweep φ, optionally with Δ = g²|sin φ| (the figure family)
        let mut rows = Vec::with_capacity(phi_axis.n);
        for phi in sweep::linspace(phi_axis.lo, phi_axis.hi, phi_axis.n) {
            let mut p = params(&cfg);
            p.phi = phi;
            if exchange_tracks_phi {
                p.exchange = p.g2 * phi.sin().abs();
            }
            let report = sweep::two_photon_report(&p, cfg.g2 * cfg.duration, cfg.grid_n, geom)?;
            let mut row = vec![phi];
            for &t in &tags {
                row.push(report.probability(t).unwrap_or(f64::NAN));
            }
            for &t in &tags {
                let lin = report
                    .channels
                    .iter()
                    .find(|c| c.channel == t)
                    .map(|c| c.linear_only)
                    .unwrap_or(f64::NAN);
                row.push(lin);
            }
            row.push(report.conservation_residual);
            rows.push(row);
        }
        let mut header = vec!["phi(rad)".to_string()];
        header.extend(tags.iter().map(|t| format!("P_{}", t.as_str())));
        header.extend(tags.iter().map(|t| format!("P_{}_linear", t.as_str())));
        header.push("conservation_residual".into());
        let table = CsvTable { header, rows };
        if wants_json(&cfg, common, false) {
            let payload = serde_json::json!({"rows": table.rows, "columns": table.header});
            return emit(&render_json(&cfg, payload), common.out.as_deref());
        }
        return emit(&table.render(&cfg), common.out.as_deref());
    }

    // single configuration: JSON report (+ optional wavefunction dumps)
    let p = params(&cfg);
    let report = sweep::two_photon_report(&p, p.g2 * cfg.duration, cfg.grid_n, geom)?;
    if let Some(dn) = dump_n {
        let stem = common
            .out
            .as_ref()
            .ok_or_else(|| anyhow!("--dump-n requires --out to name the dump files"))?;
        let dur = cfg.duration;
        let grid = TimeGrid::for_pulse(p.g2, dur, dn)?;
        let pulse = make_pulse(PulseShape::Square, dur, grid)?;
        for ch in biatom::scattering_channels(&p, &pulse, geom)? {
            let n = ch.grid().n();
            let dense = ch.materialize();
            let mut rows = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    rows.push(vec![ch.grid().t(i), ch.grid().t(j), dense[i * n + j].norm_sqr()]);
                }
            }
            let table = CsvTable {
                header: ["t1", "t2", "abs2"].iter().map(|s| s.to_string()).collect(),
                rows,
            };
            let path = stem.with_extension(format!("{}.csv", ch.channel().as_str()));
            emit(&table.render(&cfg), Some(&path))?;
        }
    }
    let payload = serde_json::to_value(&report)?;
    emit(&render_json(&cfg, payload), common.out.as_deref())
}

fn cmd_optimize(common: &CommonOpts, objective: &str, max_evals: usize) -> Result<()> {
    let mut cfg = merge(common, "optimize")?;
    cfg.options.insert("objective".into(), serde_json::json!(objective));
    cfg.options.insert("max_evals".into(), serde_json::json!(max_evals));
    let obj = Objective::parse(objective).ok_or_else(|| anyhow!("unknown objective"))?;
    let axes = sweep_axes(&cfg)?;
    if axes.is_empty() {
        bail!("optimize needs at least one --sweep axis (e.g. --sweep g2T:0.5:1.5:11)");
    }
    let opt_axes: Vec<Axis> = axes
        .iter()
        .map(|a| Axis { name: a.param.clone(), lo: a.lo, hi: a.hi, scan_points: a.n.max(2) })
        .collect();
    let result = sweep::optimize_objective(obj, &opt_axes, cfg.grid_n, max_evals);
    let trace: Vec<serde_json::Value> = result
        .trace
        .iter()
        .map(|t| serde_json::json!({"x": t.x, "value": t.value}))
        .collect();
    let payload = serde_json::json!({
        "objective": objective,
        "axes": opt_axes.iter().map(|a| &a.name).collect::<Vec<_>>(),
        "optimum": result.x,
        "value": result.value,
        "evaluations": result.evaluations,
        "converged": result.converged,
        "trace": trace,
    });
    if !result.converged {
        eprintln!(
            "warning: optimizer did not converge within {} evaluations; reporting best found",
            max_evals
        );
    }
    emit(&render_json(&cfg, payload), common.out.as_deref())
}

fn cmd_validate(common: &CommonOpts, seed: u64) -> Result<bool> {
    let mut cfg = merge(common, "validate")?;
    cfg.options.insert("seed".into(), serde_json::json!(seed));
    let summary = biatom::validate::run_all(seed);
    let payload = serde_json::to_value(&summary)?;
    emit(&render_json(&cfg, payload), common.out.as_deref())?;
    for s in &summary.suites {
        eprintln!(
            "{}: {} (observed {:.3e}, threshold {:.1e})",
            s.name,
            if s.passed { "pass" } else { "FAIL" },
            s.observed,
            s.threshold
        );
    }
    Ok(summary.all_passed)
}

fn run(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::Spectrum { common, mode } => {
            cmd_spectrum(common, mode)?;
            Ok(0)
        }
        Command::Map { common, panel, delta_t, exchange_t } => {
            cmd_map(common, panel.as_deref(), *delta_t, *exchange_t)?;
            Ok(0)
        }
        Command::TwoPhoton { common, geometry, exchange_tracks_phi, dump_n } => {
            cmd_two_photon(common, geometry, *exchange_tracks_phi, *dump_n)?;
            Ok(0)
        }
        Command::Optimize { common, objective, max_evals } => {
            cmd_optimize(common, objective, *max_evals)?;
            Ok(0)
        }
        Command::Validate { common, seed } => {
            if cmd_validate(common, *seed)? {
                Ok(0)
            } else {
                eprintln!("validation FAILED");
                Ok(3)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code conventions differ; usage errors are 1 here
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            // numerical precondition violations exit 2; anything else is usage
            let code = if err.downcast_ref::<biatom::Error>().is_some() { 2 } else { 1 };
            ExitCode::from(code)
        }
    }
}
