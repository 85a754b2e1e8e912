//! Experiment execution and output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use homodyne_lhv::analysis::{
    class_curve, coincidence_curve, default_theta_grid, phase_averaged_histogram, scatter_vs_phase, singles_rate,
    ScatterMode,
};
use homodyne_lhv::belltest::{
    correlation_conventional, correlation_fair, simulate_setting_pair, CoincidenceCounts, visibility, ChshRun, OutcomeClass,
    Registration,
};
use homodyne_lhv::tomography::{calibrate_negativity_epsilon, min_density, radon_reconstruct, simulated_quadratures};
use homodyne_lhv::{Apparatus64, ChshSettings64, Executor, Stream};
use serde_json::{json, Map, Value};

use crate::config::{Experiment, RunConfig, ScatterKind, SweepUnit};
use crate::error::CliError;
use crate::format::{float, Csv};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Everything an experiment produces before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub csv: String,
    /// Extra JSON-lines record written next to the CSV (tomography only).
    pub meta: Option<String>,
    /// Headline numbers, copied into the manifest.
    pub summary: Value,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.jsonl")
}

pub fn meta_path(out: &Path) -> PathBuf {
    out.with_extension("meta.jsonl")
}

fn apparatus(cfg: &RunConfig) -> Result<Apparatus64, CliError> {
    Ok(Apparatus64::new(cfg.source.clone(), cfg.arm_a.clone(), cfg.arm_b.clone())?)
}

fn opt(v: Option<f64>) -> String {
    float(v.unwrap_or(f64::NAN))
}

/// Splits `trials` over the four setting pairs, remainder to the first pairs.
fn chsh_run(
    app: &Apparatus64,
    settings: &ChshSettings64,
    trials: u64,
    stream: Stream,
    exec: &Executor,
) -> ChshRun<f64> {
    let mut counts = [CoincidenceCounts::default(); 4];
    for (i, (ta, tb)) in settings.pairs().into_iter().enumerate() {
        let n = trials / 4 + u64::from((i as u64) < trials % 4);
        counts[i] = simulate_setting_pair(app, ta, tb, n, Registration::Discriminated, stream.child(i as u64), exec);
    }
    ChshRun {
        settings: *settings,
        counts,
    }
}

fn bell_test(cfg: &RunConfig, stream: Stream, exec: &Executor) -> Result<Artifacts, CliError> {
    let app = apparatus(cfg)?;
    let run = chsh_run(&app, &cfg.settings, cfg.trials, stream, exec);
    let fair = run.s_fair()?;
    let conv = run.s_conventional().ok();
    let mut csv = Csv::new(&[
        "setting_pair",
        "n_pp",
        "n_pm",
        "n_mp",
        "n_mm",
        "n_ab",
        "e_fair",
        "e_conventional",
        "s_fair",
        "s_conventional",
        "sigma_s",
        "sigma_s_conventional",
    ]);
    for (label, c) in ChshSettings64::PAIR_LABELS.iter().zip(&run.counts) {
        csv.row([
            label.to_string(),
            c.n_pp.to_string(),
            c.n_pm.to_string(),
            c.n_mp.to_string(),
            c.n_mm.to_string(),
            c.n_ab.to_string(),
            float(correlation_fair(c)?),
            opt(correlation_conventional(c).ok()),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    let total = run.counts.iter().fold(CoincidenceCounts::default(), |a, &c| a + c);
    csv.row([
        "summary".to_string(),
        total.n_pp.to_string(),
        total.n_pm.to_string(),
        total.n_mp.to_string(),
        total.n_mm.to_string(),
        total.n_ab.to_string(),
        String::new(),
        String::new(),
        float(fair.value),
        opt(conv.map(|e| e.value)),
        float(fair.sigma),
        opt(conv.map(|e| e.sigma)),
    ]);
    Ok(Artifacts {
        csv: csv.into_string(),
        meta: None,
        summary: json!({
            "s_fair": fair.value,
            "sigma_s": fair.sigma,
            "s_conventional": conv.map(|e| e.value),
            "sigma_s_conventional": conv.map(|e| e.sigma),
            "kept_fraction": run.kept_fraction(),
        }),
    })
}

fn loophole_sweep(cfg: &RunConfig, stream: Stream, exec: &Executor) -> Result<Artifacts, CliError> {
    let scale = match cfg.sweep.unit {
        SweepUnit::Absolute => 1.0,
        SweepUnit::XMax => apparatus(cfg)?.x_max_a(),
    };
    let first = if cfg.sweep.param.ends_with("discriminator_threshold") {
        "threshold"
    } else {
        cfg.sweep.param.as_str()
    };
    let mut csv = Csv::new(&[
        first,
        "kept_fraction",
        "s_conventional",
        "s_fair",
        "sigma_conventional",
        "sigma_fair",
    ]);
    let mut max_conv = f64::NEG_INFINITY;
    let mut max_fair = f64::NEG_INFINITY;
    for (k, v) in cfg.sweep.values().into_iter().enumerate() {
        let value = v * scale;
        let mut point = cfg.clone();
        point.set(&cfg.sweep.param, &float(value))?;
        let app = apparatus(&point)?;
        let run = chsh_run(&app, &point.settings, point.trials, stream.child(k as u64), exec);
        let fair = run.s_fair()?;
        let conv = run.s_conventional().ok();
        if let Some(c) = conv {
            max_conv = max_conv.max(c.value);
        }
        max_fair = max_fair.max(fair.value);
        csv.row([
            float(value),
            float(run.kept_fraction()),
            opt(conv.map(|e| e.value)),
            float(fair.value),
            opt(conv.map(|e| e.sigma)),
            float(fair.sigma),
        ]);
    }
    Ok(Artifacts {
        csv: csv.into_string(),
        meta: None,
        summary: json!({ "max_s_conventional": max_conv, "max_s_fair": max_fair }),
    })
}

fn histogram(cfg: &RunConfig, stream: Stream, exec: &Executor) -> Result<Artifacts, CliError> {
    let app = apparatus(cfg)?;
    let h = phase_averaged_histogram(&app, cfg.trials, cfg.histogram_bins, cfg.histogram_half_width, stream, exec)?;
    let mut csv = Csv::new(&["bin_lo", "bin_hi", "count", "density"]);
    let edges = h.edges();
    let half = app.x_max_a() / 2.0;
    let mut tail = 0;
    for (i, &c) in h.counts().iter().enumerate() {
        if h.bin_center(i).abs() > half {
            tail += c;
        }
        csv.row([float(edges[i]), float(edges[i + 1]), c.to_string(), float(h.density(i))]);
    }
    Ok(Artifacts {
        csv: csv.into_string(),
        meta: None,
        summary: json!({
            "n_total": h.n_total(),
            "underflow": h.underflow(),
            "overflow": h.overflow(),
            "x_max": app.x_max_a(),
            "fraction_beyond_half_x_max": tail as f64 / h.n_total().max(1) as f64,
        }),
    })
}

fn curve(cfg: &RunConfig, stream: Stream, exec: &Executor) -> Result<Artifacts, CliError> {
    let app = apparatus(cfg)?;
    let grid = default_theta_grid(cfg.curve_points);
    let pts = coincidence_curve(&app, cfg.curve_theta_a, &grid, cfg.trials, stream, exec)?;
    let mut csv = Csv::new(&[
        "theta_b",
        "n",
        "p_pp",
        "p_pm",
        "p_mp",
        "p_mm",
        "stderr_pp",
        "stderr_pm",
        "stderr_mp",
        "stderr_mm",
    ]);
    for p in &pts {
        let cls = OutcomeClass::ALL.map(|c| p.point(c));
        let mut row = vec![float(p.theta_b), p.counts.n_ab.to_string()];
        row.extend(cls.iter().map(|c| float(c.rate)));
        row.extend(cls.iter().map(|c| float(c.stderr)));
        csv.row(row);
    }
    let vis = visibility(&class_curve(&pts, OutcomeClass::PlusPlus)).ok();
    Ok(Artifacts {
        csv: csv.into_string(),
        meta: None,
        summary: json!({ "theta_a": cfg.curve_theta_a, "visibility_pp": vis }),
    })
}

fn scatter(cfg: &RunConfig, stream: Stream, exec: &Executor) -> Result<Artifacts, CliError> {
    let app = apparatus(cfg)?;
    let mode = match &cfg.scatter {
        ScatterKind::Ramp => ScatterMode::Ramp,
        ScatterKind::Random => ScatterMode::Random,
        ScatterKind::Columns(c) => ScatterMode::Columns(c.clone()),
    };
    let pts = scatter_vs_phase(&app, cfg.trials, &mode, stream, exec)?;
    let mut csv = Csv::new(&["theta", "x"]);
    for (t, x) in &pts {
        csv.row([float(*t), float(*x)]);
    }
    Ok(Artifacts {
        csv: csv.into_string(),
        meta: None,
        summary: json!({ "points": pts.len(), "x_max": app.x_max_a() }),
    })
}

fn singles(cfg: &RunConfig, stream: Stream, exec: &Executor) -> Result<Artifacts, CliError> {
    let app = apparatus(cfg)?;
    let grid = default_theta_grid(cfg.singles_points);
    let pts = singles_rate(&app, &grid, cfg.trials, stream, exec)?;
    let mut csv = Csv::new(&["theta", "rate", "stderr", "n"]);
    for p in &pts {
        csv.row([float(p.theta), float(p.rate), float(p.stderr), p.n.to_string()]);
    }
    Ok(Artifacts {
        csv: csv.into_string(),
        meta: None,
        summary: json!({ "points": pts.len() }),
    })
}

fn tomography(cfg: &RunConfig, stream: Stream, exec: &Executor) -> Result<Artifacts, CliError> {
    let app = apparatus(cfg)?;
    let t = &cfg.tomography;
    let norm = t.normalization.unwrap_or(2.0 * cfg.arm_a.noise_sigma);
    if !(norm > 0.0) {
        return Err(CliError::Config(
            "tomography needs tomography.normalization or a positive arm_a.noise_sigma".into(),
        ));
    }
    let samples = simulated_quadratures(&app, cfg.trials, norm, stream.child(0), exec)?;
    let grid = radon_reconstruct(&samples, &t.grid, t.filter_cutoff)?;
    let epsilon = if t.calibrate {
        Some(calibrate_negativity_epsilon(
            samples.len(),
            &t.grid,
            t.filter_cutoff,
            &mut stream.child(1).rng(),
        )?)
    } else {
        None
    };
    let spec = &grid.spec;
    let p_cols: Vec<String> = (0..spec.n_p).map(|j| float(spec.cell_p(j))).collect();
    let mut header = vec!["x"];
    header.extend(p_cols.iter().map(String::as_str));
    let mut csv = Csv::new(&header);
    for i in 0..spec.n_x {
        let mut row = vec![float(spec.cell_x(i))];
        row.extend((0..spec.n_p).map(|j| float(grid.value(i, j))));
        csv.row(row);
    }
    let m = min_density(&grid);
    let report = json!({
        "n_x": spec.n_x,
        "n_p": spec.n_p,
        "x_range": [-spec.x_extent, spec.x_extent],
        "p_range": [-spec.p_extent, spec.p_extent],
        "cell_area": grid.cell_area,
        "phase_bins": spec.phase_bins,
        "quadrature_bins": spec.quadrature_bins,
        "quadrature_extent": spec.quadrature_extent,
        "filter_cutoff": grid.filter_cutoff,
        "normalization": norm,
        "n_samples": grid.n_samples,
        "populated_phase_bins": grid.populated_phase_bins,
        "empty_phase_bins": grid.empty_phase_bins,
        "integral": grid.integral(),
        "min_density": { "value": m.value, "x": m.x, "p": m.p },
        "negativity_epsilon": epsilon,
        "negative": epsilon.map(|e| m.is_negative(e)),
    });
    Ok(Artifacts {
        csv: csv.into_string(),
        meta: Some(format!("{report}\n")),
        summary: report,
    })
}

/// Runs the configured experiment in memory.
pub fn execute(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    cfg.validate()?;
    let experiment = cfg.experiment.expect("validated");
    let exec = Executor::with_workers(cfg.workers)?;
    let stream = Stream::root(cfg.seed).child(experiment.tag());
    match experiment {
        Experiment::BellTest => bell_test(cfg, stream, &exec),
        Experiment::LoopholeSweep => loophole_sweep(cfg, stream, &exec),
        Experiment::Histogram => histogram(cfg, stream, &exec),
        Experiment::Curve => curve(cfg, stream, &exec),
        Experiment::Scatter => scatter(cfg, stream, &exec),
        Experiment::Singles => singles(cfg, stream, &exec),
        Experiment::Tomography => tomography(cfg, stream, &exec),
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the experiment and writes the CSV, any metadata and the manifest.
pub fn run(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let started = Instant::now();
    cfg.validate()?;
    let experiment = cfg.experiment.expect("validated");
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{experiment}.csv")));
    let artifacts = execute(cfg)?;
    write(&out, &artifacts.csv)?;
    let mut outputs = vec![out.display().to_string()];
    if let Some(meta) = &artifacts.meta {
        let p = meta_path(&out);
        write(&p, meta)?;
        outputs.push(p.display().to_string());
    }
    let mut resolved = cfg.clone();
    resolved.out = Some(out.clone());
    let config: Map<String, Value> = resolved
        .pairs()
        .into_iter()
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    let manifest = json!({
        "version": VERSION,
        "experiment": experiment.name(),
        "seed": cfg.seed,
        "workers": cfg.workers,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "outputs": outputs,
        "summary": artifacts.summary,
        "config": config,
    });
    write(&manifest_path(&out), &format!("{manifest}\n"))?;
    Ok(artifacts)
}
