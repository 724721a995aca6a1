//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pathread_core::budget::{self, ErrorModelParams};
use pathread_core::calibration::{
    estimate_theta_rt, fit_chain_gains, loss_factors, measured_ratios, synthetic_chain_spectra,
    synthetic_line_amplitudes, CalibrationRecord, SyntheticProbe,
};
use pathread_core::cavity::{
    linspace, pointer_distance, pointer_pair, reflection, relaxed_diameter, transmission,
    CavityParams, DriveTone, Path, QubitState, RelaxationWindow,
};
use pathread_core::interference::{combine, enhancement_factor, normalize_phase, InterferenceSetting};
use pathread_core::presets::PresetTable;
use pathread_core::readout::{
    analyze, assignment_errors, optimal_threshold, pointer_means, simulate_shots, ChainNoise,
    OutputPath, ShotConfig,
};
use pathread_core::special::{erf, lambert_w0};

type Criterion = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_cavity(rng: &mut ChaCha8Rng) -> CavityParams {
    let f = rng.random_range(4e9..9e9);
    let kc = rng.random_range(0.2e6..5e6);
    let ki = rng.random_range(0.0..5e6);
    let chi = rng.random_range(0.05e6..3e6) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    CavityParams::new(TAU * f, TAU * kc, TAU * ki, TAU * chi).unwrap()
}

fn random_lossy_cavity(rng: &mut ChaCha8Rng) -> CavityParams {
    let f = rng.random_range(4e9..9e9);
    let kc = rng.random_range(0.2e6..3e6);
    let ki = kc * rng.random_range(0.2..2.0);
    let chi = rng.random_range(0.05e6..1.5e6) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    CavityParams::new(TAU * f, TAU * kc, TAU * ki, TAU * chi).unwrap()
}

fn q2() -> CavityParams {
    PresetTable::builtin().get("Q2").unwrap().cavity().unwrap()
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// End-to-end enhancement factor from the maxima of the full responses.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let c = q2();
    let grid = linspace(-3.0 * c.kappa(), 3.0 * c.kappa(), 241);
    let pairs: Vec<_> = grid
        .iter()
        .map(|&det| {
            let d = DriveTone::at_detuning(&c, det, one()).unwrap();
            (pointer_pair(&c, &d, Path::Transmission), pointer_pair(&c, &d, Path::Reflection))
        })
        .collect();
    let d_t = pairs.iter().map(|p| p.0.distance).fold(0.0, f64::max);
    let d_r = pairs.iter().map(|p| p.1.distance).fold(0.0, f64::max);
    let beta_at = |theta: f64| {
        let d_plus = pairs
            .iter()
            .map(|(t, r)| {
                let g = combine(t.alpha_g, r.alpha_g, theta).unwrap().plus;
                let e = combine(t.alpha_e, r.alpha_e, theta).unwrap().plus;
                (e - g).norm()
            })
            .fold(0.0, f64::max);
        2.0 * d_plus / (d_t + d_r)
    };
    let max_dev = linspace(-PI, PI, 181)
        .into_iter()
        .map(|th| (beta_at(th) - SQRT_2 * (th / 2.0).cos()).abs())
        .fold(0.0, f64::max);
    let b011 = beta_at(0.11);
    let elapsed = start.elapsed();
    check(
        max_dev < 1e-9 && (b011 - 1.4121).abs() <= 1e-4 && within(elapsed, 1.0),
        format!("max |beta - sqrt2 cos(theta/2)| = {max_dev:.2e}, beta(0.11) = {b011:.6}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_sym, mut worst_num) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let c = random_cavity(&mut rng);
        let det = rng.random_range(-5.0..5.0) * c.kappa();
        let a = Complex64::from_polar(rng.random_range(0.05..2.0), rng.random_range(-PI..PI));
        let d = DriveTone::at_detuning(&c, det, a).unwrap();
        let closed_t = pointer_distance(&c, &d, Path::Transmission).unwrap();
        let closed_r = pointer_distance(&c, &d, Path::Reflection).unwrap();
        let num_t = pointer_pair(&c, &d, Path::Transmission).distance;
        let num_r = pointer_pair(&c, &d, Path::Reflection).distance;
        worst_sym = worst_sym.max((closed_t - closed_r).abs() / closed_t).max((num_t - num_r).abs() / num_t);
        worst_num = worst_num.max((num_t - closed_t).abs() / closed_t).max((num_r - closed_r).abs() / closed_r);
    }
    let elapsed = start.elapsed();
    check(
        worst_sym <= 1e-12 && worst_num <= 1e-12 && within(elapsed, 1.0),
        format!("worst |D_T - D_R|/D = {worst_sym:.2e}, worst numeric vs closed = {worst_num:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let c = random_cavity(&mut rng);
        let a = Complex64::from_polar(rng.random_range(0.05..2.0), rng.random_range(-PI..PI));
        let d = DriveTone::new(c.omega_r() - c.chi(), a).unwrap();
        let l = loss_factors(&c);
        for (q, r) in [(QubitState::Ground, l.r_g), (QubitState::Excited, l.r_e)] {
            let e = transmission(&c, q, &d).norm_sqr() + reflection(&c, q, &d).norm_sqr();
            worst = worst.max((e - r * a.norm_sqr()).abs() / (r * a.norm_sqr()));
        }
    }
    let l = loss_factors(&q2());
    let elapsed = start.elapsed();
    check(
        worst <= 1e-10
            && (l.r_g - 0.5438).abs() <= 1e-3
            && (l.r_e - 0.6245).abs() <= 1e-3
            && within(elapsed, 1.0),
        format!("worst energy mismatch {worst:.2e}, Q2 r_g = {:.4}, r_e = {:.4}, {elapsed:.2?}", l.r_g, l.r_e),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let c = random_lossy_cavity(&mut rng);
        let theta = rng.random_range(-PI..PI);
        let a = Complex64::from_polar(rng.random_range(0.05..2.0), rng.random_range(-PI..PI));
        let est = estimate_theta_rt(&measured_ratios(&c, a, theta).unwrap()).unwrap();
        worst = worst.max(normalize_phase(est.theta_rt - theta).abs());
    }
    let table = PresetTable::builtin();
    let mut worst_table = 0.0f64;
    for dev in &table.device {
        let c = dev.cavity().unwrap();
        let est = estimate_theta_rt(&measured_ratios(&c, one(), dev.theta_rt).unwrap()).unwrap();
        worst_table = worst_table.max(normalize_phase(est.theta_rt - dev.theta_rt).abs());
    }

    // 1 % complex noise on every amplitude, 40 repetitions averaged per trial
    let c = q2();
    let theta = 0.11;
    let lines = synthetic_line_amplitudes(&c, one(), &SyntheticProbe::new(theta)).unwrap();
    let trials = 200;
    let errs: Vec<f64> = (0..trials)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(40);
            rng.set_stream(k);
            let noisy = lines.averaged_noisy(0.01, 40, &mut rng);
            let rec = CalibrationRecord::from_lines(&noisy, 1.0, loss_factors(&c)).unwrap();
            normalize_phase(estimate_theta_rt(&rec).unwrap().theta_rt - theta)
        })
        .collect();
    let n = trials as f64;
    let mean = errs.iter().sum::<f64>() / n;
    let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = sd / n.sqrt();
    let elapsed = start.elapsed();
    check(
        worst <= 1e-8 && worst_table <= 1e-8 && mean.abs() <= 3.0 * se && within(elapsed, 30.0),
        format!(
            "random worst {worst:.2e} rad, table worst {worst_table:.2e} rad, noisy bias {mean:.2e} +- {se:.2e} rad, {elapsed:.2?}"
        ),
    )
}

/// Threshold-counting error with relaxation and thermal flips disabled
/// against `1 - erf(sqrt(eta t_m) D / sqrt 2)`.
fn criterion_5() -> Outcome {
    let start = Instant::now();
    let c = q2();
    let shots = 1_000_000;
    // (eta, t_m, photons, path)
    let sets = [
        (0.25, 300e-9, 1.0, OutputPath::Transmission),
        (0.25, 900e-9, 0.3, OutputPath::Transmission),
        (0.5, 200e-9, 0.8, OutputPath::Reflection),
        (0.1, 1.5e-6, 0.5, OutputPath::Interference(InterferenceSetting::plus(0.11))),
        (0.8, 100e-9, 0.2, OutputPath::Interference(InterferenceSetting::plus(0.7))),
    ];
    let mut all = true;
    let mut worst_z = 0.0f64;
    for (k, &(eta, t_m, n_c, path)) in sets.iter().enumerate() {
        let d_rate = budget::pointer_rate_from_photons(&c, n_c, &path).unwrap();
        let p_m = budget::p_measure(eta, t_m, d_rate).unwrap();
        let drive = DriveTone::at_detuning(&c, c.optimal_detuning(), one()).unwrap();
        let means = pointer_means(&c, &drive, &path);
        // sqrt(eta t_m) D = D_eff / (2 sigma_m) with sigma_m = c0 / sqrt(t_m)
        let c0 = means.distance / (2.0 * eta.sqrt() * d_rate);
        let noise = ChainNoise::from_efficiency(eta, c0).unwrap();
        let t1 = 1e12;
        let g = simulate_shots(&means, &noise, &ShotConfig::new(t_m, shots, QubitState::Ground, 500 + k as u64), t1).unwrap();
        let e = simulate_shots(&means, &noise, &ShotConfig::new(t_m, shots, QubitState::Excited, 600 + k as u64), t1).unwrap();
        let v = optimal_threshold(&means, g.sigma).unwrap();
        let (a, b) = assignment_errors(&g, &e, v).unwrap();
        let half = 0.5 * p_m;
        let sd = (2.0 * half * (1.0 - half) / shots as f64).sqrt();
        let z = (a + b - p_m).abs() / sd;
        worst_z = worst_z.max(z);
        all &= z <= 3.0 && g.summary.jumps + e.summary.jumps == 0;
    }
    let elapsed = start.elapsed();
    check(
        all && within(elapsed, 60.0),
        format!("5 sets at 1e6 shots, worst deviation {worst_z:.2} binomial sd, {elapsed:.2?}"),
    )
}

fn local_golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..300 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn budget_params(t1: f64, path: OutputPath) -> ErrorModelParams {
    ErrorModelParams {
        eta: 0.25,
        n_c: 20.0,
        t1,
        omega_q: TAU * 6e9,
        t_e: 0.02,
        cavity: q2(),
        path,
        include_thermal: true,
    }
}

fn t1_grid() -> Vec<f64> {
    (0..=40).map(|k| 1e-6 * 100f64.powf(k as f64 / 40.0)).collect()
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut worst_w = 0.0f64;
    for k in 0..=240 {
        let x = 10f64.powf(-9.0 + k as f64 * 0.1);
        let w = lambert_w0(x).unwrap();
        worst_w = worst_w.max((w * w.exp() - x).abs() / x);
    }
    let mut worst_t = 0.0f64;
    for path in [OutputPath::Transmission, OutputPath::Interference(InterferenceSetting::plus(0.11))] {
        for &t1 in &t1_grid() {
            let p = ErrorModelParams { include_thermal: false, ..budget_params(t1, path) };
            let (t, _) = budget::optimal_time(&p).unwrap();
            // bracket on a log scan, then refine
            let total = |t: f64| budget::total_error(&p, t).unwrap().total;
            let scan: Vec<f64> = (0..=400).map(|j| 1e-9 * 1e5f64.powf(j as f64 / 400.0)).collect();
            let j = (0..scan.len()).min_by(|&a, &b| total(scan[a]).total_cmp(&total(scan[b]))).unwrap();
            let g = local_golden(total, scan[j.saturating_sub(1)], scan[(j + 1).min(400)]);
            worst_t = worst_t.max((t - g).abs() / g);
        }
    }
    let elapsed = start.elapsed();
    check(
        worst_w <= 1e-10 && worst_t <= 1e-3 && within(elapsed, 5.0),
        format!("W identity worst {worst_w:.2e}, closed vs golden worst {worst_t:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let plus = OutputPath::Interference(InterferenceSetting::plus(0.0));
    let mut dominated = true;
    for &t1 in &t1_grid() {
        let (_, bt) = budget::optimal_time(&budget_params(t1, OutputPath::Transmission)).unwrap();
        let (_, bp) = budget::optimal_time(&budget_params(t1, plus)).unwrap();
        dominated &= bp.total < bt.total;
    }
    let (_, bt) = budget::optimal_time(&budget_params(30e-6, OutputPath::Transmission)).unwrap();
    let (_, bp) = budget::optimal_time(&budget_params(30e-6, plus)).unwrap();
    let excess = bt.total / bp.total - 1.0;
    let elapsed = start.elapsed();
    check(
        dominated && bp.total < 0.01 && (0.3..=1.0).contains(&excess) && within(elapsed, 5.0),
        format!(
            "T+R below T on the whole grid: {dominated}; at T1 = 30 us error(T+R) = {:.2}% (need < 1%), error(T) = {:.2}%, excess {:.0}%, {elapsed:.2?}",
            100.0 * bp.total,
            100.0 * bt.total,
            100.0 * excess
        ),
    )
}

struct OverlapRun {
    overlap_t: f64,
    overlap_plus: f64,
}

fn overlap_run(t_m: f64, shots: usize, seed: u64) -> OverlapRun {
    let table = PresetTable::builtin();
    let pm = &table.matched_readout;
    let dev = table.get(&pm.device).unwrap();
    let c = dev.cavity().unwrap();
    let drive = DriveTone::at_detuning(&c, TAU * pm.detuning_hz, Complex64::new(pm.probe_amplitude, 0.0)).unwrap();
    let run = |path: OutputPath, c0: f64, offset: u64| {
        let means = pointer_means(&c, &drive, &path);
        let noise = ChainNoise::from_efficiency(pm.eta, c0).unwrap();
        let mut cfg = ShotConfig::new(t_m, shots, QubitState::Ground, seed.wrapping_mul(4) + offset);
        cfg.p_thermal = pm.p_thermal;
        let g = simulate_shots(&means, &noise, &cfg, dev.t1_s).unwrap();
        cfg.prepared = QubitState::Excited;
        cfg.seed += 2;
        let e = simulate_shots(&means, &noise, &cfg, dev.t1_s).unwrap();
        let v = optimal_threshold(&means, g.sigma).unwrap();
        analyze(&g, &e, v).unwrap().gaussian_overlap_error
    };
    OverlapRun {
        overlap_t: run(OutputPath::Transmission, pm.c0_t, 0),
        overlap_plus: run(OutputPath::Interference(InterferenceSetting::plus(dev.theta_rt)), pm.c0_plus, 1),
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let table = PresetTable::builtin();
    let pm = &table.matched_readout;
    let shots = 100_000;
    let primary = overlap_run(pm.t_m_s, shots, 8);
    // Monte Carlo spread from independent replicates
    let reps: Vec<OverlapRun> = (100..120).map(|s| overlap_run(pm.t_m_s, shots, s)).collect();
    let stats = |f: fn(&OverlapRun) -> f64| {
        let n = reps.len() as f64;
        let m = reps.iter().map(f).sum::<f64>() / n;
        (m, (reps.iter().map(|r| (f(r) - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    };
    let (mean_t, sd_t) = stats(|r| r.overlap_t);
    let (mean_p, sd_p) = stats(|r| r.overlap_plus);
    let ok_i = (primary.overlap_t - pm.target_overlap_t).abs() <= 3.0 * sd_t
        && (primary.overlap_plus - pm.target_overlap_plus).abs() <= 3.0 * sd_p;

    let grid = [200e-9, 300e-9, 500e-9, 700e-9, 900e-9, 1.1e-6, 1.5e-6, 2e-6];
    let curve: Vec<OverlapRun> = grid.iter().map(|&t| overlap_run(t, shots, 9)).collect();
    let below = curve.iter().all(|r| r.overlap_plus < r.overlap_t);
    let ratios: Vec<f64> = curve.iter().map(|r| r.overlap_plus / r.overlap_t).collect();
    let non_increasing = ratios.windows(2).all(|w| w[1] <= w[0]);
    let elapsed = start.elapsed();
    check(
        ok_i && below && non_increasing && within(elapsed, 120.0),
        format!(
            "900 ns overlap T = {:.2}% (+-{:.2}, replicate mean {:.2}), T+R = {:.2}% (+-{:.2}, replicate mean {:.2}); T+R below T on grid: {below}; ratio non-increasing: {non_increasing} ({:.3} -> {:.3}), {elapsed:.2?}",
            100.0 * primary.overlap_t,
            100.0 * sd_t,
            100.0 * mean_t,
            100.0 * primary.overlap_plus,
            100.0 * sd_p,
            100.0 * mean_p,
            ratios[0],
            ratios[ratios.len() - 1]
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let table = PresetTable::builtin();
    let mut shrinks = true;
    let mut worst_limit = 0.0f64;
    for dev in &table.device {
        let c = dev.cavity().unwrap();
        for frac in [1e-3, 0.1, 0.5, 1.0, 3.0, 10.0] {
            for delta in [None, Some(0.05), Some(-0.4), Some(1.0), Some(3.0)] {
                let mut w = RelaxationWindow::new(frac * dev.t1_s, dev.t1_s);
                w.delta = delta;
                let d = relaxed_diameter(&c, &w).unwrap();
                shrinks &= d.excited < d.ground;
            }
        }
        for t_m in [0.0, 1e-20 * dev.t1_s, 100.0 * dev.t1_s] {
            let d = relaxed_diameter(&c, &RelaxationWindow::new(t_m, dev.t1_s)).unwrap();
            worst_limit = worst_limit.max((d.excited - d.ground).abs());
        }
    }
    let elapsed = start.elapsed();
    check(
        shrinks && worst_limit <= 1e-10 && within(elapsed, 1.0),
        format!("d_e < d_g everywhere: {shrinks}, worst limit deviation {worst_limit:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let c = q2();
    let f0 = c.omega_r() / TAU;
    let k_hz = c.kappa() / TAU;
    let grid = linspace(f0 - 5.0 * k_hz, f0 + 5.0 * k_hz, 401);
    let rt = Complex64::new(2.0, 0.0);
    let rr = Complex64::new(3.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let [t, r, p] = synthetic_chain_spectra(&c, QubitState::Ground, one(), 0.11, &grid, rt, rr, 0.0, &mut rng).unwrap();
    let exact = fit_chain_gains(&t, &r, &p).unwrap();
    let exact_err = (exact.ratio_plus_t - rt).norm().max((exact.ratio_plus_r - rr).norm());
    let mut worst = 0.0f64;
    for k in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000);
        rng.set_stream(k);
        let [t, r, p] = synthetic_chain_spectra(&c, QubitState::Ground, one(), 0.11, &grid, rt, rr, 1e-3, &mut rng).unwrap();
        let g = fit_chain_gains(&t, &r, &p).unwrap();
        worst = worst.max((g.ratio_plus_t - rt).norm()).max((g.ratio_plus_r - rr).norm());
    }
    let elapsed = start.elapsed();
    check(
        exact_err <= 1e-10 && exact.residual < 1e-10 && worst <= 1e-2 && within(elapsed, 10.0),
        format!("noiseless error {exact_err:.2e}, noisy worst {worst:.2e} over 100 trials, {elapsed:.2?}"),
    )
}

fn main() {
    // sanity: the overlap convention used throughout
    debug_assert!((1.0 - erf(1.0) - 0.157_299_207_050_285_13).abs() < 1e-15);
    debug_assert!((enhancement_factor(0.0) - SQRT_2).abs() < 1e-15);

    let criteria: [(&str, Criterion); 10] = [
        ("interference enhancement", criterion_1),
        ("symmetric-cavity distances", criterion_2),
        ("energy and loss closed forms", criterion_3),
        ("theta_rt round trip", criterion_4),
        ("Monte Carlo vs analytic error", criterion_5),
        ("Lambert-W optimum", criterion_6),
        ("optimal error vs T1", criterion_7),
        ("single-shot histograms", criterion_8),
        ("relaxed IQ circle", criterion_9),
        ("chain-gain fit", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("acceptance {:>2} {tag} {name}: {}", k + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
