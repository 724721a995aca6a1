//! The seven experiments. Each returns in-memory tables; nothing here
//! touches the filesystem.

use std::f64::consts::TAU;

use num_complex::Complex64;
use pathread_core::budget::{optimal_time, ErrorModelParams};
use pathread_core::calibration::{
    estimate_theta_rt, fit_chain_gains, loss_factors, synthetic_chain_spectra,
    synthetic_line_amplitudes, CalibrationRecord, SyntheticProbe,
};
use pathread_core::cavity::{linspace, pointer_distance, pointer_pair, reflection, transmission};
use pathread_core::interference::{combine, enhancement_factor, minus_enhancement_factor, normalize_phase};
use pathread_core::presets::{DevicePreset, PresetTable};
use pathread_core::readout::{
    analyze, histogram, optimal_threshold, overlap_error, pointer_means, simulate_shots, ShotBatch,
};
use pathread_core::{
    CavityParams, ChainNoise, DriveTone, InterferenceSetting, OutputPath, Path, QubitState, ShotConfig,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{
    BetaCurve, CalibrateTheta, Chain, DistanceSweep, IqSweep, OptimalError, Resolved, Section,
};
use crate::output::{Artifact, Cell, Table};
use crate::CliError;

/// Independent seed number `index` derived from the run seed.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

pub fn run(r: &Resolved) -> Result<Vec<Artifact>, CliError> {
    let c = r.device.cavity()?;
    match &r.section {
        Section::IqSweep(s) => iq_sweep(&c, &r.device, s),
        Section::DistanceSweep(s) => distance_sweep(&c, &r.device, s),
        Section::BetaCurve(s) => beta_curve(&c, s),
        Section::CalibrateTheta(s) => calibrate_theta(&r.device, s, r.seed),
        Section::SingleShot { t_m_s, shots, bins, export_shots, chain } => {
            single_shot(&c, chain, *t_m_s, *shots, *bins, *export_shots, r.seed)
        }
        Section::ErrorVsTime { t_min_s, t_max_s, points, shots, chain } => {
            error_vs_time(&c, chain, *t_min_s, *t_max_s, *points, *shots, r.seed)
        }
        Section::OptimalError(s) => optimal_error(&c, s),
    }
}

fn unit() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn detuning_grid(c: &CavityParams, span_kappa: f64, points: usize) -> Vec<f64> {
    linspace(-span_kappa * c.kappa(), span_kappa * c.kappa(), points)
}

fn iq_sweep(c: &CavityParams, dev: &DevicePreset, s: &IqSweep) -> Result<Vec<Artifact>, CliError> {
    let theta = s.theta_rt.unwrap_or(dev.theta_rt);
    let a = Complex64::new(s.probe_amplitude, 0.0);
    let mut t = Table::new(vec![
        "frequency_hz", "detuning_over_kappa",
        "t_g_re", "t_g_im", "t_e_re", "t_e_im",
        "r_g_re", "r_g_im", "r_e_re", "r_e_im",
        "plus_g_re", "plus_g_im", "plus_e_re", "plus_e_im",
    ]);
    for det in detuning_grid(c, s.span_kappa, s.points) {
        let d = DriveTone::at_detuning(c, det, a)?;
        let mut row: Vec<Cell> = vec![(d.omega_d / TAU).into(), (det / c.kappa()).into()];
        let mut fields = Vec::new();
        for q in [QubitState::Ground, QubitState::Excited] {
            fields.push((q, transmission(c, q, &d), reflection(c, q, &d)));
        }
        for (_, at, _) in &fields {
            row.extend([at.re.into(), at.im.into()]);
        }
        for (_, _, ar) in &fields {
            row.extend([ar.re.into(), ar.im.into()]);
        }
        for (_, at, ar) in &fields {
            let p = combine(*at, *ar, theta)?.plus;
            row.extend([p.re.into(), p.im.into()]);
        }
        t.push(row);
    }
    Ok(vec![Artifact::main(t)])
}

fn distance_sweep(c: &CavityParams, dev: &DevicePreset, s: &DistanceSweep) -> Result<Vec<Artifact>, CliError> {
    let theta = s.theta_rt.unwrap_or(dev.theta_rt);
    let a = Complex64::new(s.probe_amplitude, 0.0);
    let mut t = Table::new(vec![
        "frequency_hz", "detuning_over_kappa", "d_t", "d_r", "d_plus", "d_minus", "d_closed_form",
    ]);
    for det in detuning_grid(c, s.span_kappa, s.points) {
        let d = DriveTone::at_detuning(c, det, a)?;
        let pt = pointer_pair(c, &d, Path::Transmission);
        let pr = pointer_pair(c, &d, Path::Reflection);
        let g = combine(pt.alpha_g, pr.alpha_g, theta)?;
        let e = combine(pt.alpha_e, pr.alpha_e, theta)?;
        t.push(vec![
            (d.omega_d / TAU).into(),
            (det / c.kappa()).into(),
            pt.distance.into(),
            pr.distance.into(),
            (e.plus - g.plus).norm().into(),
            (e.minus - g.minus).norm().into(),
            pointer_distance(c, &d, Path::Transmission)?.into(),
        ]);
    }
    Ok(vec![Artifact::main(t)])
}

/// Enhancement of the plus and minus ports, taken from the maxima of the
/// full responses over the probe grid and compared with the closed forms.
fn beta_curve(c: &CavityParams, s: &BetaCurve) -> Result<Vec<Artifact>, CliError> {
    let pairs = detuning_grid(c, s.span_kappa, s.frequency_points)
        .into_iter()
        .map(|det| {
            let d = DriveTone::at_detuning(c, det, unit())?;
            Ok((pointer_pair(c, &d, Path::Transmission), pointer_pair(c, &d, Path::Reflection)))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let d_t = pairs.iter().map(|p| p.0.distance).fold(0.0, f64::max);
    let d_r = pairs.iter().map(|p| p.1.distance).fold(0.0, f64::max);
    let mut t = Table::new(vec![
        "theta_rt", "beta_plus", "beta_plus_closed_form", "beta_minus", "beta_minus_closed_form",
    ]);
    for theta in linspace(s.theta_min, s.theta_max, s.points) {
        let mut best = (0.0f64, 0.0f64);
        for (pt, pr) in &pairs {
            let g = combine(pt.alpha_g, pr.alpha_g, theta)?;
            let e = combine(pt.alpha_e, pr.alpha_e, theta)?;
            best.0 = best.0.max((e.plus - g.plus).norm());
            best.1 = best.1.max((e.minus - g.minus).norm());
        }
        let scale = 2.0 / (d_t + d_r);
        t.push(vec![
            theta.into(),
            (best.0 * scale).into(),
            enhancement_factor(theta).into(),
            (best.1 * scale).into(),
            minus_enhancement_factor(theta).into(),
        ]);
    }
    Ok(vec![Artifact::main(t)])
}

fn calibrate_theta(dev: &DevicePreset, s: &CalibrateTheta, seed: u64) -> Result<Vec<Artifact>, CliError> {
    let table = PresetTable::builtin();
    let devices = s
        .devices
        .iter()
        .map(|n| if n == &dev.name { Ok(dev.clone()) } else { Ok(table.get(n)?.clone()) })
        .collect::<Result<Vec<_>, CliError>>()?;
    let a = Complex64::new(s.probe_amplitude, 0.0);
    let mut t = Table::new(vec![
        "device", "trial", "theta_true", "theta_estimate", "theta_error", "consistency", "warning",
        "ratio_plus_t_re", "ratio_plus_t_im", "ratio_plus_r_re", "ratio_plus_r_im", "gain_residual",
    ]);
    for (k, d) in devices.iter().enumerate() {
        let c = d.cavity()?;
        let lines = synthetic_line_amplitudes(&c, a, &SyntheticProbe::new(d.theta_rt))?;
        for trial in 0..s.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, k as u64));
            rng.set_stream(trial as u64);
            let measured = if s.noise_rel > 0.0 {
                lines.averaged_noisy(s.noise_rel, s.repetitions, &mut rng)
            } else {
                lines
            };
            let rec = CalibrationRecord::from_lines(&measured, a.norm_sqr(), loss_factors(&c))?;
            let est = estimate_theta_rt(&rec)?;
            let mut row: Vec<Cell> = vec![
                d.name.as_str().into(),
                trial.into(),
                d.theta_rt.into(),
                est.theta_rt.into(),
                normalize_phase(est.theta_rt - d.theta_rt).into(),
                est.consistency.into(),
                est.warning.into(),
            ];
            if s.chain_fit {
                let grid: Vec<f64> = detuning_grid(&c, s.chain_span_kappa, s.chain_points)
                    .into_iter()
                    .map(|det| (c.omega_r() + det) / TAU)
                    .collect();
                let to_c = |v: [f64; 2]| Complex64::new(v[0], v[1]);
                let [st, sr, sp] = synthetic_chain_spectra(
                    &c,
                    QubitState::Ground,
                    a,
                    d.theta_rt,
                    &grid,
                    to_c(s.ratio_plus_t),
                    to_c(s.ratio_plus_r),
                    s.chain_noise * a.norm(),
                    &mut rng,
                )?;
                let g = fit_chain_gains(&st, &sr, &sp)?;
                row.extend([
                    g.ratio_plus_t.re.into(),
                    g.ratio_plus_t.im.into(),
                    g.ratio_plus_r.re.into(),
                    g.ratio_plus_r.im.into(),
                    g.residual.into(),
                ]);
            } else {
                row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 5));
            }
            t.push(row);
        }
    }
    Ok(vec![Artifact::main(t)])
}

struct PathRun {
    label: &'static str,
    c0: f64,
    g: ShotBatch,
    e: ShotBatch,
}

fn paths(chain: &Chain) -> [(OutputPath, f64); 2] {
    [
        (OutputPath::Transmission, chain.c0_t),
        (OutputPath::Interference(InterferenceSetting::plus(chain.theta_rt)), chain.c0_plus),
    ]
}

fn simulate_pair(
    c: &CavityParams,
    chain: &Chain,
    path: OutputPath,
    c0: f64,
    t_m: f64,
    shots: usize,
    seed: u64,
) -> Result<PathRun, CliError> {
    let d = DriveTone::at_detuning(c, TAU * chain.detuning_hz, Complex64::new(chain.probe_amplitude, 0.0))?;
    let means = pointer_means(c, &d, &path);
    let noise = ChainNoise::from_efficiency(chain.eta, c0)?;
    let mut cfg = ShotConfig::new(t_m, shots, QubitState::Ground, seed);
    cfg.p_thermal = chain.p_thermal;
    cfg.relaxation = chain.relaxation;
    let g = simulate_shots(&means, &noise, &cfg, chain.t1_s)?;
    cfg.prepared = QubitState::Excited;
    cfg.seed = seed.wrapping_add(1);
    let e = simulate_shots(&means, &noise, &cfg, chain.t1_s)?;
    Ok(PathRun { label: path.label(), c0, g, e })
}

fn shot_table(b: &ShotBatch) -> Table {
    let mut t = Table::new(vec!["shot_index", "true_state", "jump_time_s", "i_volts", "q_volts", "assigned"]);
    for (k, r) in b.records.iter().enumerate() {
        t.push(vec![
            k.into(),
            r.true_state.label().into(),
            r.jump_time.map_or(Cell::Text(String::new()), Cell::Num),
            r.i.into(),
            r.q.into(),
            r.assigned.label().into(),
        ]);
    }
    t
}

fn file_label(label: &str) -> &'static str {
    if label == "T" { "t" } else { "plus" }
}

fn single_shot(
    c: &CavityParams,
    chain: &Chain,
    t_m: f64,
    shots: usize,
    bins: usize,
    export: bool,
    seed: u64,
) -> Result<Vec<Artifact>, CliError> {
    let runs = paths(chain)
        .into_iter()
        .enumerate()
        .map(|(k, (path, c0))| simulate_pair(c, chain, path, c0, t_m, shots, sub_seed(seed, 2 * k as u64)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut summary = Table::new(vec![
        "path", "t_m_s", "c0", "sigma", "distance", "v_th", "p_e_given_g", "p_g_given_e", "epsilon",
        "gaussian_overlap_error", "analytic_overlap_error", "jumps", "thermal_flips",
    ]);
    let mut out = Vec::new();
    for run in &runs {
        let means = run.g.means;
        let v = optimal_threshold(&means, run.g.sigma)?;
        let a = analyze(&run.g, &run.e, v)?;
        summary.push(vec![
            run.label.into(),
            t_m.into(),
            run.c0.into(),
            run.g.sigma.into(),
            means.distance.into(),
            v.into(),
            a.p_e_given_g.into(),
            a.p_g_given_e.into(),
            a.epsilon.into(),
            a.gaussian_overlap_error.into(),
            overlap_error(means.distance, run.g.sigma).into(),
            (run.g.summary.jumps + run.e.summary.jumps).into(),
            (run.g.summary.thermal_flips + run.e.summary.thermal_flips).into(),
        ]);
        let mut h = Table::new(vec!["bin_center", "count_g_prepared", "count_e_prepared"]);
        for b in histogram(&run.g, &run.e, bins)? {
            h.push(vec![b.bin_center.into(), b.count_g_prepared.into(), b.count_e_prepared.into()]);
        }
        let tag = file_label(run.label);
        out.push(Artifact::named(format!("histogram-{tag}"), h));
        if export {
            out.push(Artifact::named(format!("shots-{tag}-g"), shot_table(&run.g)));
            out.push(Artifact::named(format!("shots-{tag}-e"), shot_table(&run.e)));
        }
    }
    out.insert(0, Artifact::main(summary));
    Ok(out)
}

fn error_vs_time(
    c: &CavityParams,
    chain: &Chain,
    t_min: f64,
    t_max: f64,
    points: usize,
    shots: usize,
    seed: u64,
) -> Result<Vec<Artifact>, CliError> {
    let grid = linspace(t_min, t_max, points);
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(i, &t_m)| {
            let mut row: Vec<Cell> = vec![t_m.into()];
            let mut overlaps = [0.0; 2];
            for (k, (path, c0)) in paths(chain).into_iter().enumerate() {
                let run = simulate_pair(c, chain, path, c0, t_m, shots, sub_seed(seed, (2 * i + k) as u64 * 2))?;
                let v = optimal_threshold(&run.g.means, run.g.sigma)?;
                let a = analyze(&run.g, &run.e, v)?;
                overlaps[k] = a.gaussian_overlap_error;
                row.extend([
                    a.gaussian_overlap_error.into(),
                    overlap_error(run.g.means.distance, run.g.sigma).into(),
                    a.epsilon.into(),
                ]);
            }
            row.push((overlaps[1] / overlaps[0]).into());
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut t = Table::new(vec![
        "t_m_s",
        "overlap_t", "analytic_overlap_t", "epsilon_t",
        "overlap_plus", "analytic_overlap_plus", "epsilon_plus",
        "overlap_ratio",
    ]);
    for r in rows {
        t.push(r);
    }
    Ok(vec![Artifact::main(t)])
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .enumerate()
        .map(|(k, x)| match k {
            0 => lo,
            k if k == n - 1 => hi,
            _ => x.exp(),
        })
        .collect()
}

fn optimal_error(c: &CavityParams, s: &OptimalError) -> Result<Vec<Artifact>, CliError> {
    let base = ErrorModelParams {
        eta: s.eta,
        n_c: s.n_c,
        t1: s.t1_min_s,
        omega_q: TAU * s.qubit_frequency_hz,
        t_e: s.t_e_k,
        cavity: *c,
        path: OutputPath::Transmission,
        include_thermal: s.include_thermal,
    };
    let plus = OutputPath::Interference(InterferenceSetting::plus(s.theta_rt));
    let mut t = Table::new(vec![
        "t1_s",
        "t_opt_t", "p_m_t", "p_t1_t", "total_t", "fidelity_t",
        "t_opt_plus", "p_m_plus", "p_t1_plus", "total_plus", "fidelity_plus",
        "p_th", "pointer_rate_t", "pointer_rate_plus",
    ]);
    for t1 in log_grid(s.t1_min_s, s.t1_max_s, s.points) {
        let pt = base.with_t1(t1);
        let pp = pt.with_path(plus);
        let (topt_t, bt) = optimal_time(&pt)?;
        let (topt_p, bp) = optimal_time(&pp)?;
        t.push(vec![
            t1.into(),
            topt_t.into(), bt.p_m.into(), bt.p_t1.into(), bt.total.into(), bt.fidelity().into(),
            topt_p.into(), bp.p_m.into(), bp.p_t1.into(), bp.total.into(), bp.fidelity().into(),
            bt.p_th.into(),
            pt.pointer_rate()?.into(),
            pp.pointer_rate()?.into(),
        ]);
    }
    Ok(vec![Artifact::main(t)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..8).map(|k| sub_seed(1729, k)).collect();
        let b: Vec<u64> = (0..8).map(|k| sub_seed(1729, k)).collect();
        assert_eq!(a, b);
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), a.len());
        assert_ne!(sub_seed(1, 0), sub_seed(2, 0));
    }

    #[test]
    fn log_grid_hits_endpoints() {
        let g = log_grid(1e-6, 1e-4, 3);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[2], 1e-4);
        assert!((g[1] - 1e-5).abs() < 1e-18);
    }
}
