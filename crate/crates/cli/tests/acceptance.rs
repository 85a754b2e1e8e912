//! Acceptance criteria, run in order with a wall-clock limit on each.
//!
//! Prints one `PASS`/`FAIL` line per criterion, then fails if any did.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::process::Command;
use std::time::{Duration, Instant};

use homodyne_lhv::analysis::{
    class_curve, coincidence_curve, default_theta_grid, phase_averaged_histogram, scatter_vs_phase, ScatterMode,
};
use homodyne_lhv::belltest::{analytic_coincidence, simulate_chsh, visibility, OutcomeClass, Registration};
use homodyne_lhv::detector::{SettingMode, SPEED_OF_LIGHT};
use homodyne_lhv::source::PhaseMode;
use homodyne_lhv::tomography::{
    calibrate_negativity_epsilon, min_density, radon_reconstruct, simulated_quadratures, vacuum_density,
    vacuum_samples, GridSpec, DEFAULT_FILTER_CUTOFF,
};
use homodyne_lhv::wavefield::{beamsplitter_intensities, homodyne_difference, oracle_difference_real};
use homodyne_lhv::{Apparatus64, ArmSettings64, ChshSettings64, Executor, FieldPair64, SourceConfig64, Stream};
use rand::Rng;

/// End-to-end checks of the binary, kept in this target so they run even when a criterion fails.
#[path = "acceptance/cli.rs"]
mod cli;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn exec() -> Executor {
    Executor::with_workers(std::thread::available_parallelism().map_or(1, |n| n.get())).unwrap()
}

fn apparatus(mode: PhaseMode, p: f64, noise_rel: f64, threshold_rel: f64) -> Apparatus64 {
    let src = SourceConfig64 {
        phase_mode: mode,
        p_alpha_zero: p,
        ..Default::default()
    };
    let x_max = 2.0 * src.nominal_transmitted_amplitude();
    let arm = ArmSettings64 {
        noise_sigma: noise_rel * x_max,
        discriminator_threshold: threshold_rel * x_max,
        ..Default::default()
    };
    Apparatus64::new(src, arm.clone(), arm).unwrap()
}

fn triples() -> Vec<(f64, f64, f64)> {
    let mut rng = Stream::root(SEED).child(100).rng();
    (0..1000)
        .map(|_| {
            (
                rng.random_range(0.01..10.0),
                rng.random_range(0.01..10.0),
                rng.random_range(-PI..PI),
            )
        })
        .collect()
}

fn c1_closed_form() -> Outcome {
    let mut rng = Stream::root(SEED).child(101).rng();
    let gain = 1.7;
    let (mut worst_x, mut worst_e) = (0.0f64, 0.0f64);
    for (e, el, theta) in triples() {
        let f = FieldPair64::new(e, el, theta).unwrap();
        let r = homodyne_difference(&f, gain, 0.0, &mut rng);
        worst_x = worst_x.max((r.x - gain * 2.0 * e * el * theta.sin()).abs());
        let (i_r, i_t) = beamsplitter_intensities(&f);
        worst_e = worst_e.max((i_r + i_t - (e * e + el * el)).abs());
    }
    outcome(
        worst_x <= 1e-9 && worst_e <= 1e-12,
        format!("max |x − 2gEE_L sinθ| = {worst_x:.2e}, max energy error = {worst_e:.2e}"),
    )
}

fn c2_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for (e, el, theta) in triples() {
        let d = oracle_difference_real(e, el, theta, 4096).unwrap();
        worst = worst.max((d - 2.0 * e * el * theta.sin()).abs());
    }
    outcome(worst <= 1e-6, format!("max |oracle − 2EE_L sinθ| = {worst:.2e}"))
}

/// Counts curve points whose P++ lies outside 3σ of the closed form.
fn step_misses(theta_a: f64, stream: Stream) -> (usize, usize) {
    let app = apparatus(PhaseMode::TwoClass, 0.5, 0.0, 0.0);
    let grid = default_theta_grid(41);
    let pts = coincidence_curve(&app, theta_a, &grid, 100_000, stream, &exec()).unwrap();
    let mut misses = 0;
    for pt in &pts {
        let expect = analytic_coincidence(theta_a, pt.theta_b, 0.5).unwrap()[0];
        let got = pt.point(OutcomeClass::PlusPlus);
        let sd = (expect * (1.0 - expect) / got.n as f64).sqrt();
        if (got.rate - expect).abs() > 3.0 * sd {
            misses += 1;
        }
    }
    (misses, pts.len())
}

fn c3_step_functions() -> Outcome {
    let (m1, n1) = step_misses(FRAC_PI_2, Stream::root(SEED).child(3).child(0));
    let (m2, n2) = step_misses(-FRAC_PI_2, Stream::root(SEED).child(3).child(1));
    outcome(
        m1 == 0 && m2 == 0,
        format!("θ_A = π/2: {m1}/{n1} points outside 3σ; θ_A = −π/2: {m2}/{n2}"),
    )
}

fn pp_at(app: &Apparatus64, theta_a: f64, theta_b: f64, stream: Stream) -> (f64, f64) {
    let pts = coincidence_curve(app, theta_a, &[theta_b], 100_000, stream, &exec()).unwrap();
    let p = pts[0].point(OutcomeClass::PlusPlus);
    (p.rate, p.stderr)
}

fn c4_binary_invariance() -> Outcome {
    let app = apparatus(PhaseMode::TwoClass, 0.5, 0.0, 0.0);
    let grid = default_theta_grid(41);
    let s = Stream::root(SEED).child(4);
    let c1 = coincidence_curve(&app, FRAC_PI_4, &grid, 100_000, s.child(0), &exec()).unwrap();
    let c2 = coincidence_curve(&app, FRAC_PI_2, &grid, 100_000, s.child(1), &exec()).unwrap();
    let disagree = c1
        .iter()
        .zip(&c2)
        .filter(|(a, b)| {
            let (a, b) = (a.point(OutcomeClass::PlusPlus), b.point(OutcomeClass::PlusPlus));
            (a.rate - b.rate).abs() > 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
        })
        .count();
    let (p1, _) = pp_at(&app, FRAC_PI_2, FRAC_PI_4, s.child(2));
    let (p2, _) = pp_at(&app, -FRAC_PI_2, -3.0 * FRAC_PI_4, s.child(3));
    // Same θ_B − θ_A = −π/4 with the settings on opposite sides of zero.
    let (q2, _) = pp_at(&app, PI / 8.0, -PI / 8.0, s.child(4));
    let pass = disagree == 0 && (p1 - p2).abs() >= 0.4;
    outcome(
        pass,
        format!(
            "curves π/4 vs π/2: {disagree}/41 points outside 3σ; P++(π/2, π/4) = {p1:.4}, P++(−π/2, −3π/4) = {p2:.4}, \
             |Δ| = {:.4} (need ≥ 0.4; a common shift by π only swaps the classes, analytic ½ vs ½); \
             diagnostic P++(π/8, −π/8) = {q2:.4}, |Δ| = {:.4}",
            (p1 - p2).abs(),
            (p1 - q2).abs()
        ),
    )
}

fn c5_fair_bound() -> Outcome {
    let settings = ChshSettings64::default();
    let mut configs = Vec::new();
    let thresholds = [0.0, 0.3, 0.6, 0.9];
    for mode in [PhaseMode::TwoClass, PhaseMode::Uniform] {
        for noise in [0.0, 0.1, 0.3] {
            for p in [0.5, 0.75] {
                configs.push((mode, noise, p, thresholds[configs.len() % 4]));
            }
        }
        for p in [0.5, 0.75] {
            for thr in [0.5, 0.95] {
                configs.push((mode, 0.1, p, thr));
            }
        }
    }
    assert_eq!(configs.len(), 20);
    let mut worst = f64::NEG_INFINITY;
    let mut failed = Vec::new();
    for (k, &(mode, noise, p, thr)) in configs.iter().enumerate() {
        let app = apparatus(mode, p, noise, thr);
        let run = simulate_chsh(
            &app,
            &settings,
            100_000,
            Registration::Discriminated,
            Stream::root(SEED).child(5).child(k as u64),
            &exec(),
        );
        let s = run.s_fair().unwrap();
        let z = (s.value - 2.0) / s.sigma.max(f64::MIN_POSITIVE);
        worst = worst.max(s.value - 2.0 - 3.0 * s.sigma);
        if s.value > 2.0 + 3.0 * s.sigma {
            failed.push(format!("{mode}/σ{noise}/p{p}/τ{thr}: S={:.4} z={z:.1}", s.value));
        }
    }
    outcome(
        failed.is_empty(),
        format!(
            "20 configurations, max (S_fair − 2 − 3σ) = {worst:.4}{}",
            if failed.is_empty() { String::new() } else { format!("; violations: {}", failed.join(", ")) }
        ),
    )
}

fn c6_loophole() -> Outcome {
    let settings = ChshSettings64::default();
    let steps = 20;
    let mut rows = Vec::new();
    let mut undefined = Vec::new();
    let mut fair_ok = true;
    for k in 0..steps {
        let tau = 0.95 * k as f64 / (steps - 1) as f64;
        let app = apparatus(PhaseMode::Uniform, 0.5, 0.0, tau);
        let run = simulate_chsh(
            &app,
            &settings,
            100_000,
            Registration::Discriminated,
            Stream::root(SEED).child(6).child(k as u64),
            &exec(),
        );
        let fair = run.s_fair().unwrap();
        fair_ok &= fair.value <= 2.0 + 3.0 * fair.sigma;
        // Settings π/4 apart cannot both reach |sin| ≥ cos(π/8), so the
        // conventional estimator has no coincidences to work with there.
        match run.s_conventional() {
            Ok(c) => rows.push((tau, c)),
            Err(_) => undefined.push(tau),
        }
    }
    let (_, s0) = rows[0];
    let start_ok = (s0.value - 2.0).abs() <= 3.0 * s0.sigma;
    let monotone = rows
        .windows(2)
        .all(|w| w[1].1.value >= w[0].1.value - 3.0 * (w[0].1.sigma.powi(2) + w[1].1.sigma.powi(2)).sqrt());
    let exceed = rows.iter().find(|(_, c)| c.value >= 2.0 + 5.0 * c.sigma).map(|r| r.0);
    let best = rows
        .iter()
        .max_by(|a, b| a.1.value.partial_cmp(&b.1.value).unwrap())
        .unwrap();
    outcome(
        start_ok && monotone && exceed.is_some() && fair_ok,
        format!(
            "S_conv(0) = {:.4} ± {:.4}; nondecreasing over {} defined thresholds: {monotone}; first ≥ 2 + 5σ at \
             τ = {} X_max; max S_conv = {:.4} ± {:.4} at τ = {:.3} X_max; undefined (no coincidences) at {} \
             thresholds ≥ {}; S_fair ≤ 2 + 3σ throughout: {fair_ok}",
            s0.value,
            s0.sigma,
            rows.len(),
            exceed.map_or("none".into(), |t| format!("{t:.3}")),
            best.1.value,
            best.1.sigma,
            best.0,
            undefined.len(),
            undefined.first().map_or("-".into(), |t| format!("{t:.3}")),
        ),
    )
}

fn c7_arcsine() -> Outcome {
    let app = apparatus(PhaseMode::TwoClass, 0.5, 0.0, 0.0);
    let h = phase_averaged_histogram(&app, 1_000_000, 40, None, Stream::root(SEED).child(7), &exec()).unwrap();
    let half = app.x_max_a() / 2.0;
    let mut tail = h.underflow() + h.overflow();
    for (i, &c) in h.counts().iter().enumerate() {
        if h.bin_center(i).abs() > half {
            tail += c;
        }
    }
    let frac = tail as f64 / h.n_total() as f64;
    let c = h.counts();
    let n = c.len();
    let (outer, central) = (c[0].min(c[n - 1]), c[n / 2 - 1].max(c[n / 2]));
    outcome(
        (frac - 2.0 / 3.0).abs() <= 0.005 && outer > central,
        format!(
            "fraction |x| > X_max/2 = {frac:.4} of {} samples; outer bins {} / {} vs central {} / {}",
            h.n_total(),
            c[0],
            c[n - 1],
            c[n / 2 - 1],
            c[n / 2]
        ),
    )
}

fn c8_scatter() -> Outcome {
    let exec = exec();
    let app = apparatus(PhaseMode::TwoClass, 0.5, 0.0, 0.0);
    let x_max = app.x_max_a();
    let pts = scatter_vs_phase(
        &app,
        100_000,
        &ScatterMode::Columns(vec![FRAC_PI_2]),
        Stream::root(SEED).child(8).child(0),
        &exec,
    )
    .unwrap();
    let mut distinct: Vec<f64> = pts.iter().map(|p| p.1).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let up = pts.iter().filter(|p| p.1 == x_max).count() as f64 / pts.len() as f64;
    let p = app.source.config().p_alpha_zero;
    let ratio_ok = (up - p).abs() <= 3.0 * (p * (1.0 - p) / pts.len() as f64).sqrt();
    let branches_ok = distinct == vec![-x_max, x_max];

    let sigma = 0.3;
    let mut noisy = app.clone();
    noisy.arm_a.noise_sigma = sigma;
    let pts = scatter_vs_phase(&noisy, 100_000, &ScatterMode::Ramp, Stream::root(SEED).child(8).child(1), &exec).unwrap();
    let band = 4.0 * sigma * 2f64.sqrt();
    let near = pts
        .iter()
        .filter(|(t, x)| (x - x_max * t.sin()).abs() <= band || (x + x_max * t.sin()).abs() <= band)
        .count() as f64
        / pts.len() as f64;
    outcome(
        branches_ok && ratio_ok && near >= 0.99,
        format!(
            "distinct x at π/2: {}; +X_max fraction {up:.4} vs p = {p}; with σ = 0.3, {:.3}% within 4σ√2 of a branch",
            distinct.len(),
            100.0 * near
        ),
    )
}

/// Path-mode arms with a 1 mm offset on arm B, so a frequency offset δω
/// shifts arm B's phase by δω·L/(2c); `drift` is that shift's standard
/// deviation in units of π.
fn detuned(drift: f64) -> Apparatus64 {
    let offset = 1e-3;
    let src = SourceConfig64 {
        delta_omega_sigma: drift * PI * 2.0 * SPEED_OF_LIGHT / offset,
        ..Default::default()
    };
    let arm = ArmSettings64 {
        mode: SettingMode::Path,
        omega_ref: src.omega_mean,
        ..Default::default()
    };
    let arm_b = ArmSettings64 {
        path_offset: offset,
        ..arm.clone()
    };
    Apparatus64::new(src, arm, arm_b).unwrap()
}

fn c9_detuning() -> Outcome {
    let grid = default_theta_grid(41);
    let vis: Vec<f64> = [0.0, 0.25, 0.5, 1.0]
        .into_iter()
        .enumerate()
        .map(|(k, d)| {
            let pts = coincidence_curve(
                &detuned(d),
                FRAC_PI_2,
                &grid,
                50_000,
                Stream::root(SEED).child(9).child(k as u64),
                &exec(),
            )
            .unwrap();
            visibility(&class_curve(&pts, OutcomeClass::PlusPlus)).unwrap()
        })
        .collect();
    let monotone = vis.windows(2).all(|w| w[1] < w[0]);
    outcome(
        vis[3] <= 0.5 * vis[0] && monotone,
        format!(
            "visibility at phase drift 0, π/4, π/2, π: {:.4}, {:.4}, {:.4}, {:.4}",
            vis[0], vis[1], vis[2], vis[3]
        ),
    )
}

fn c10_tomography() -> Outcome {
    let spec = GridSpec::default();
    let s = Stream::root(SEED).child(10);
    let samples = vacuum_samples(100_000, &mut s.child(0).rng());
    let g = radon_reconstruct(&samples, &spec, DEFAULT_FILTER_CUTOFF).unwrap();
    let mut err = 0.0f64;
    for i in 0..spec.n_x {
        for j in 0..spec.n_p {
            err = err.max((g.value(i, j) - vacuum_density(spec.cell_x(i), spec.cell_p(j))).abs());
        }
    }
    let peak = 1.0 / PI;
    let integral = g.integral();

    let app = apparatus(PhaseMode::TwoClass, 0.5, 0.3, 0.0);
    let norm = 2.0 * app.arm_a.noise_sigma;
    let data = simulated_quadratures(&app, 100_000, norm, s.child(1), &exec()).unwrap();
    let gc = radon_reconstruct(&data, &spec, DEFAULT_FILTER_CUTOFF).unwrap();
    let eps = calibrate_negativity_epsilon(data.len(), &spec, DEFAULT_FILTER_CUTOFF, &mut s.child(2).rng()).unwrap();
    let m = min_density(&gc);
    outcome(
        err <= 0.05 * peak && (0.98..=1.02).contains(&integral) && !m.is_negative(eps),
        format!(
            "Gaussian max error {:.4}·peak, integral {integral:.4}; two_class min {:.5} at ({:.2}, {:.2}) vs −ε = {:.5}",
            err / peak,
            m.value,
            m.x,
            m.p,
            -eps
        ),
    )
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bell.cfg");
    std::fs::write(
        &cfg,
        "experiment = bell-test\nseed = 11\ntrials = 400000\nsource.amplitude_sigma = 0.2\narms.noise_sigma = 0.3\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (run, workers) in [1, 1, 4, 4].into_iter().enumerate() {
        let out = dir.path().join(format!("run{run}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_homodyne-lhv"))
            .arg("--config")
            .arg(&cfg)
            .arg("--workers")
            .arg(workers.to_string())
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        if !status.success() {
            return outcome(false, format!("run {run} exited with {status}"));
        }
        outputs.push(std::fs::read(&out).unwrap());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same,
        format!("4 runs (workers 1, 1, 4, 4), {} bytes each, identical: {same}", outputs[0].len()),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, Duration, fn() -> Outcome); 11] = [
        ("homodyne closed form", Duration::from_secs(1), c1_closed_form),
        ("real-field oracle", Duration::from_secs(5), c2_oracle),
        ("step-function coincidences", Duration::from_secs(30), c3_step_functions),
        ("binary rotational invariance", Duration::from_secs(30), c4_binary_invariance),
        ("fair CHSH bound", Duration::from_secs(300), c5_fair_bound),
        ("detection loophole", Duration::from_secs(120), c6_loophole),
        ("arcsine double peak", Duration::from_secs(30), c7_arcsine),
        ("two-branch scatter", Duration::from_secs(10), c8_scatter),
        ("detuning visibility", Duration::from_secs(60), c9_detuning),
        ("tomography calibration", Duration::from_secs(60), c10_tomography),
        ("determinism", Duration::from_secs(60), c11_determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, limit, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = o.pass && in_time;
        println!(
            "{} [{:>2}] {name} ({:.2} s, limit {} s): {}{}",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            o.detail,
            if in_time { "" } else { " [over time limit]" }
        );
        if !pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
