//! Monte Carlo single-shot readout.
//!
//! Each shot integrates the output field for `t_m` and lands at the pointer
//! state of the qubit (or a mixture of both when it relaxes during the
//! window), blurred by isotropic Gaussian amplifier noise with per-quadrature
//! deviation `sigma_m = c0 / sqrt(t_m)`. Shots are discriminated along the
//! line joining the two pointer states.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{pointer_pair, Amplitude, CavityParams, DriveTone, Path, PointerPair, QubitState};
use crate::error::{Error, Result};
use crate::interference::{combine_pairs, InterferenceSetting};
use crate::special::{erfc, normal_cdf, normal_sf};

/// Where the readout signal is collected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "path")]
pub enum OutputPath {
    #[serde(rename = "T")]
    Transmission,
    #[serde(rename = "R")]
    Reflection,
    #[serde(rename = "T+R")]
    Interference(InterferenceSetting),
}

impl OutputPath {
    /// Pointer separation relative to a single output.
    pub fn distance_factor(&self) -> f64 {
        match self {
            OutputPath::Transmission | OutputPath::Reflection => 1.0,
            OutputPath::Interference(s) => s.distance_factor(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OutputPath::Transmission => "T",
            OutputPath::Reflection => "R",
            OutputPath::Interference(_) => "T+R",
        }
    }
}

/// Noiseless cloud centers for the two qubit states on `path`.
pub fn pointer_means(c: &CavityParams, d: &DriveTone, path: &OutputPath) -> PointerPair {
    match path {
        OutputPath::Transmission => pointer_pair(c, d, Path::Transmission),
        OutputPath::Reflection => pointer_pair(c, d, Path::Reflection),
        OutputPath::Interference(s) => combine_pairs(
            &pointer_pair(c, d, Path::Transmission),
            &pointer_pair(c, d, Path::Reflection),
            s,
        ),
    }
}

/// Amplification-chain noise: efficiency `eta = 1 / (1 + N0)` and the
/// coefficient of `sigma_m = c0 / sqrt(t_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainNoise {
    eta: f64,
    c0: f64,
}

impl ChainNoise {
    pub fn from_efficiency(eta: f64, c0: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::param("eta", format!("must lie in (0, 1], got {eta}")));
        }
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(Error::param("c0", format!("must be positive, got {c0}")));
        }
        Ok(Self { eta, c0 })
    }

    pub fn from_added_noise(n0: f64, c0: f64) -> Result<Self> {
        if !(n0 >= 0.0) || !n0.is_finite() {
            return Err(Error::param("n0", format!("must be non-negative, got {n0}")));
        }
        Self::from_efficiency(1.0 / (1.0 + n0), c0)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n0(&self) -> f64 {
        1.0 / self.eta - 1.0
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn sigma(&self, t_m: f64) -> f64 {
        self.c0 / t_m.sqrt()
    }
}

/// How relaxation during the window moves an excited shot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxationModel {
    /// A decay in the first half of the window puts the shot on the ground
    /// cloud; later decays leave it on the excited cloud. Reproduces the
    /// `1 - exp(-t_m / 2 T1)` relaxation error.
    #[default]
    HalfWindow,
    /// A decay at `tau < t_m` lands at the time-weighted average of the two
    /// pointer states.
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub t_m: f64,
    pub n_shots: usize,
    pub prepared: QubitState,
    pub p_thermal: f64,
    pub seed: u64,
    pub relaxation: RelaxationModel,
}

impl ShotConfig {
    pub fn new(t_m: f64, n_shots: usize, prepared: QubitState, seed: u64) -> Self {
        Self {
            t_m,
            n_shots,
            prepared,
            p_thermal: 0.0,
            seed,
            relaxation: RelaxationModel::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_m > 0.0) || !self.t_m.is_finite() {
            return Err(Error::InvalidConfig(format!("t_m must be positive, got {}", self.t_m)));
        }
        if self.n_shots == 0 {
            return Err(Error::InvalidConfig("n_shots must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.p_thermal) {
            return Err(Error::InvalidConfig(format!(
                "p_thermal must lie in [0, 1), got {}",
                self.p_thermal
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// State after thermal initialization.
    pub true_state: QubitState,
    pub jump_time: Option<f64>,
    pub i: f64,
    pub q: f64,
    pub assigned: QubitState,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSummary {
    pub n_shots: usize,
    pub thermal_flips: usize,
    pub jumps: usize,
    pub assigned_excited: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotBatch {
    pub prepared: QubitState,
    pub t_m: f64,
    pub sigma: f64,
    pub means: PointerPair,
    pub records: Vec<ShotRecord>,
    pub summary: ShotSummary,
}

/// Projection onto the line through the two pointer states, increasing
/// towards the excited state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminationAxis {
    unit: Amplitude,
}

impl DiscriminationAxis {
    pub fn new(means: &PointerPair) -> Result<Self> {
        let diff = means.alpha_e - means.alpha_g;
        let norm = diff.norm();
        if !(norm > 0.0) {
            return Err(Error::ZeroDistance);
        }
        Ok(Self { unit: diff / norm })
    }

    pub fn project(&self, z: Amplitude) -> f64 {
        (self.unit.conj() * z).re
    }
}

/// Midpoint threshold along the discrimination axis; the minimum-error
/// threshold for two equal-variance Gaussian clouds.
pub fn optimal_threshold(means: &PointerPair, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    let axis = DiscriminationAxis::new(means)?;
    Ok(0.5 * (axis.project(means.alpha_g) + axis.project(means.alpha_e)))
}

pub fn simulate_shots(
    means: &PointerPair,
    noise: &ChainNoise,
    cfg: &ShotConfig,
    t1: f64,
) -> Result<ShotBatch> {
    cfg.validate()?;
    if !(t1 > 0.0) {
        return Err(Error::param("t1", format!("must be positive, got {t1}")));
    }
    let sigma = noise.sigma(cfg.t_m);
    let axis = DiscriminationAxis::new(means)?;
    let v_th = optimal_threshold(means, sigma)?;

    let records: Vec<ShotRecord> = (0..cfg.n_shots)
        .into_par_iter()
        .map(|k| one_shot(means, sigma, cfg, t1, &axis, v_th, k as u64))
        .collect();

    let mut summary = ShotSummary {
        n_shots: records.len(),
        ..Default::default()
    };
    for r in &records {
        summary.thermal_flips += usize::from(r.true_state != cfg.prepared);
        summary.jumps += usize::from(r.jump_time.is_some());
        summary.assigned_excited += usize::from(r.assigned == QubitState::Excited);
    }
    Ok(ShotBatch {
        prepared: cfg.prepared,
        t_m: cfg.t_m,
        sigma,
        means: *means,
        records,
        summary,
    })
}

fn one_shot(
    means: &PointerPair,
    sigma: f64,
    cfg: &ShotConfig,
    t1: f64,
    axis: &DiscriminationAxis,
    v_th: f64,
    index: u64,
) -> ShotRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);

    let flip = rng.random::<f64>() < cfg.p_thermal;
    let true_state = if flip { cfg.prepared.flipped() } else { cfg.prepared };
    let tau: f64 = t1 * rng.sample::<f64, _>(Exp1);

    let (center, jump_time) = match true_state {
        QubitState::Ground => (means.alpha_g, None),
        QubitState::Excited => match cfg.relaxation {
            RelaxationModel::HalfWindow if tau < 0.5 * cfg.t_m => (means.alpha_g, Some(tau)),
            RelaxationModel::Physical if tau < cfg.t_m => {
                let w = tau / cfg.t_m;
                (means.alpha_e * w + means.alpha_g * (1.0 - w), Some(tau))
            }
            _ => (means.alpha_e, None),
        },
    };
    let i = center.re + sigma * rng.sample::<f64, _>(StandardNormal);
    let q = center.im + sigma * rng.sample::<f64, _>(StandardNormal);
    let assigned = if axis.project(Amplitude::new(i, q)) > v_th {
        QubitState::Excited
    } else {
        QubitState::Ground
    };
    ShotRecord {
        true_state,
        jump_time,
        i,
        q,
        assigned,
    }
}

impl ShotBatch {
    pub fn projections(&self) -> Result<Vec<f64>> {
        let axis = DiscriminationAxis::new(&self.means)?;
        Ok(self
            .records
            .iter()
            .map(|r| axis.project(Amplitude::new(r.i, r.q)))
            .collect())
    }
}

/// One-dimensional two-component Gaussian mixture; index 0 is the
/// ground-state component, index 1 the excited-state component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub sigmas: [f64; 2],
    pub iterations: usize,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the mean log-likelihood per sample.
    pub tolerance: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-8,
        }
    }
}

/// Expectation-maximization for a two-component mixture started from the
/// given component means and a common width.
pub fn fit_two_gaussians(
    xs: &[f64],
    init_means: [f64; 2],
    init_sigma: f64,
    init_weight_excited: f64,
    opts: EmOptions,
) -> Result<MixtureFit> {
    let [fit] = fit_tied_gaussians([(xs, init_weight_excited)], init_means, init_sigma, opts)?;
    Ok(fit)
}

/// EM for several samples drawn from the same two components with
/// sample-specific weights. Component means and widths are shared; each
/// sample gets its own mixture weights. The log-likelihood reported in every
/// fit is the joint one, per sample point.
pub fn fit_tied_gaussians<const N: usize>(
    samples: [(&[f64], f64); N],
    init_means: [f64; 2],
    init_sigma: f64,
    opts: EmOptions,
) -> Result<[MixtureFit; N]> {
    let n: usize = samples.iter().map(|(xs, _)| xs.len()).sum();
    if samples.iter().any(|(xs, _)| xs.is_empty()) {
        return Err(Error::InvalidConfig("cannot fit an empty sample".into()));
    }
    let all = || samples.iter().flat_map(|(xs, _)| xs.iter());
    let mean = all().sum::<f64>() / n as f64;
    let var = all().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let spread = (init_means[1] - init_means[0]).abs();
    let var_floor = 1e-12 * var.max(spread * spread).max(f64::MIN_POSITIVE);

    let mut weights = samples.map(|(_, w)| {
        let w1 = w.clamp(1e-3, 1.0 - 1e-3);
        [1.0 - w1, w1]
    });
    let mut means = init_means;
    let mut vars = [init_sigma.powi(2).max(var_floor); 2];
    let mut resp: Vec<Vec<f64>> = samples.iter().map(|(xs, _)| vec![0.0; xs.len()]).collect();
    let mut last_ll = f64::NEG_INFINITY;

    for iter in 1..=opts.max_iterations {
        // E step: responsibility of the excited component
        let mut ll = 0.0;
        for (((xs, _), w), r) in samples.iter().zip(&weights).zip(resp.iter_mut()) {
            let lw = [w[0].ln(), w[1].ln()];
            for (x, r) in xs.iter().zip(r.iter_mut()) {
                let l0 = lw[0] + log_normal_pdf(*x, means[0], vars[0]);
                let l1 = lw[1] + log_normal_pdf(*x, means[1], vars[1]);
                let m = l0.max(l1);
                let lse = m + ((l0 - m).exp() + (l1 - m).exp()).ln();
                ll += lse;
                *r = (l1 - lse).exp();
            }
        }
        ll /= n as f64;

        // M step
        let mut s = [0.0; 2];
        let mut sx = [0.0; 2];
        for (((xs, _), w), r) in samples.iter().zip(weights.iter_mut()).zip(&resp) {
            let mut s_here = 0.0;
            for (x, r) in xs.iter().zip(r) {
                s_here += r;
                sx[0] += (1.0 - r) * x;
                sx[1] += r * x;
            }
            s[0] += xs.len() as f64 - s_here;
            s[1] += s_here;
            // an emptied component keeps a finite log-weight
            let w1 = s_here / xs.len() as f64;
            *w = [(1.0 - w1).max(1e-300), w1.max(1e-300)];
        }
        let mu = [sx[0] / s[0], sx[1] / s[1]];
        let mut sv = [0.0; 2];
        for ((xs, _), r) in samples.iter().zip(&resp) {
            for (x, r) in xs.iter().zip(r) {
                sv[0] += (1.0 - r) * (x - mu[0]).powi(2);
                sv[1] += r * (x - mu[1]).powi(2);
            }
        }
        for k in 0..2 {
            if s[k] > 1e-300 {
                means[k] = mu[k];
                vars[k] = (sv[k] / s[k]).max(var_floor);
            }
        }

        if !ll.is_finite() {
            return Err(Error::FitFailure { iterations: iter });
        }
        if (ll - last_ll).abs() < opts.tolerance {
            let sigmas = [vars[0].sqrt(), vars[1].sqrt()];
            return Ok(weights.map(|weights| MixtureFit {
                weights,
                means,
                sigmas,
                iterations: iter,
                log_likelihood: ll,
            }));
        }
        last_ll = ll;
    }
    Err(Error::FitFailure {
        iterations: opts.max_iterations,
    })
}

fn log_normal_pdf(x: f64, mu: f64, var: f64) -> f64 {
    -0.5 * ((x - mu).powi(2) / var + (2.0 * PI * var).ln())
}

/// `\int min(N(mu_a, sigma_a), N(mu_b, sigma_b)) dx`.
pub fn gaussian_overlap(mu_a: f64, sigma_a: f64, mu_b: f64, sigma_b: f64) -> f64 {
    let (mu_a, sigma_a, mu_b, sigma_b) = if mu_a <= mu_b {
        (mu_a, sigma_a, mu_b, sigma_b)
    } else {
        (mu_b, sigma_b, mu_a, sigma_a)
    };
    let rel = (sigma_a - sigma_b).abs() / sigma_a.max(sigma_b);
    if rel < 1e-12 {
        let sigma = 0.5 * (sigma_a + sigma_b);
        return erfc((mu_b - mu_a) / (2.0 * std::f64::consts::SQRT_2 * sigma));
    }
    // crossing points of the two densities
    let (va, vb) = (sigma_a * sigma_a, sigma_b * sigma_b);
    let a = 1.0 / va - 1.0 / vb;
    let b = -2.0 * (mu_a / va - mu_b / vb);
    let c = mu_a * mu_a / va - mu_b * mu_b / vb + 2.0 * (sigma_a / sigma_b).ln();
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let q = -0.5 * (b + b.signum() * disc);
    let mut roots = [q / a, if q != 0.0 { c / q } else { q / a }];
    roots.sort_by(f64::total_cmp);

    let cdf = |x: f64, mu: f64, s: f64| normal_cdf((x - mu) / s);
    let sf = |x: f64, mu: f64, s: f64| normal_sf((x - mu) / s);
    let mass = |lo: f64, hi: f64, mu: f64, s: f64| -> f64 {
        match (lo.is_finite(), hi.is_finite()) {
            (false, true) => cdf(hi, mu, s),
            (true, false) => sf(lo, mu, s),
            (true, true) => {
                // use the tail that is numerically smaller
                if lo > mu {
                    sf(lo, mu, s) - sf(hi, mu, s)
                } else {
                    cdf(hi, mu, s) - cdf(lo, mu, s)
                }
            }
            (false, false) => 1.0,
        }
    };
    // log densities: the far crossing can sit where both densities underflow
    let log_pdf = |x: f64, mu: f64, s: f64| -(x - mu).powi(2) / (2.0 * s * s) - s.ln();
    let edges = [f64::NEG_INFINITY, roots[0], roots[1], f64::INFINITY];
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if !(hi > lo) {
            continue;
        }
        let probe = match (lo.is_finite(), hi.is_finite()) {
            (false, true) => hi - 1.0 - sigma_a.max(sigma_b),
            (true, false) => lo + 1.0 + sigma_a.max(sigma_b),
            _ => 0.5 * (lo + hi),
        };
        total += if log_pdf(probe, mu_a, sigma_a) < log_pdf(probe, mu_b, sigma_b) {
            mass(lo, hi, mu_a, sigma_a)
        } else {
            mass(lo, hi, mu_b, sigma_b)
        };
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotAnalysis {
    pub v_th: f64,
    pub p_e_given_g: f64,
    pub p_g_given_e: f64,
    pub epsilon: f64,
    /// Overlap of the ground component of the ground-prepared histogram with
    /// the excited component of the excited-prepared histogram.
    pub gaussian_overlap_error: f64,
    pub fit_g: MixtureFit,
    pub fit_e: MixtureFit,
}

/// Threshold-counting error rates `(P(e|g), P(g|e))`.
pub fn assignment_errors(batch_g: &ShotBatch, batch_e: &ShotBatch, v_th: f64) -> Result<(f64, f64)> {
    check_batches(batch_g, batch_e)?;
    let xg = batch_g.projections()?;
    let xe = batch_e.projections()?;
    let p_eg = xg.iter().filter(|&&x| x > v_th).count() as f64 / xg.len() as f64;
    let p_ge = xe.iter().filter(|&&x| x <= v_th).count() as f64 / xe.len() as f64;
    Ok((p_eg, p_ge))
}

fn check_batches(batch_g: &ShotBatch, batch_e: &ShotBatch) -> Result<()> {
    if batch_g.records.is_empty() || batch_e.records.is_empty() {
        return Err(Error::InvalidConfig("batches must be nonempty".into()));
    }
    let scale = batch_g.means.distance.max(f64::MIN_POSITIVE);
    let dg = (batch_g.means.alpha_g - batch_e.means.alpha_g).norm();
    let de = (batch_g.means.alpha_e - batch_e.means.alpha_e).norm();
    if dg > 1e-9 * scale || de > 1e-9 * scale {
        return Err(Error::InvalidConfig(
            "batches were simulated with different pointer states".into(),
        ));
    }
    Ok(())
}

/// Threshold counting plus a two-component fit along the discrimination
/// axis. Both prepared batches are fitted together: they share the two
/// component shapes and differ only in their weights, which keeps the fit
/// identifiable when the clouds overlap heavily.
pub fn analyze(batch_g: &ShotBatch, batch_e: &ShotBatch, v_th: f64) -> Result<ShotAnalysis> {
    analyze_with(batch_g, batch_e, v_th, EmOptions::default())
}

pub fn analyze_with(
    batch_g: &ShotBatch,
    batch_e: &ShotBatch,
    v_th: f64,
    opts: EmOptions,
) -> Result<ShotAnalysis> {
    let (p_e_given_g, p_g_given_e) = assignment_errors(batch_g, batch_e, v_th)?;
    let axis = DiscriminationAxis::new(&batch_g.means)?;
    let centers = [
        axis.project(batch_g.means.alpha_g),
        axis.project(batch_g.means.alpha_e),
    ];
    let sigma = if batch_g.sigma > 0.0 {
        batch_g.sigma
    } else {
        0.25 * (centers[1] - centers[0]).abs()
    };
    let xg = batch_g.projections()?;
    let xe = batch_e.projections()?;
    let [fit_g, fit_e] = fit_tied_gaussians(
        [(&xg[..], p_e_given_g), (&xe[..], 1.0 - p_g_given_e)],
        centers,
        sigma,
        opts,
    )?;
    let gaussian_overlap_error =
        gaussian_overlap(fit_g.means[0], fit_g.sigmas[0], fit_e.means[1], fit_e.sigmas[1]);
    Ok(ShotAnalysis {
        v_th,
        p_e_given_g,
        p_g_given_e,
        epsilon: p_e_given_g + p_g_given_e,
        gaussian_overlap_error,
        fit_g,
        fit_e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_center: f64,
    pub count_g_prepared: u64,
    pub count_e_prepared: u64,
}

/// Histogram of both batches along the discrimination axis on a common
/// binning spanning all shots.
pub fn histogram(batch_g: &ShotBatch, batch_e: &ShotBatch, bins: usize) -> Result<Vec<HistogramBin>> {
    check_batches(batch_g, batch_e)?;
    if bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
    }
    let xg = batch_g.projections()?;
    let xe = batch_e.projections()?;
    let (lo, hi) = xg
        .iter()
        .chain(&xe)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|k| HistogramBin {
            bin_center: lo + (k as f64 + 0.5) * width,
            count_g_prepared: 0,
            count_e_prepared: 0,
        })
        .collect();
    let idx = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    for &x in &xg {
        out[idx(x)].count_g_prepared += 1;
    }
    for &x in &xe {
        out[idx(x)].count_e_prepared += 1;
    }
    Ok(out)
}

/// `sigma * c0_num / c0_den`, e.g. to remove the efficiency difference
/// between two output chains.
pub fn rescale_variance(sigma: f64, c0_num: f64, c0_den: f64) -> Result<f64> {
    for (name, v) in [("sigma", sigma), ("c0_num", c0_num), ("c0_den", c0_den)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    Ok(sigma * c0_num / c0_den)
}

/// Overlap error of two equal-width clouds separated by `distance`.
pub fn overlap_error(distance: f64, sigma: f64) -> f64 {
    erfc(distance / (2.0 * sigma) * FRAC_1_SQRT_2)
}
