//! Figure-level drivers: time series of the measures, Δ-sweeps of the
//! transfer maximum, and pairwise fidelities along a chain.
//!
//! Work items (time samples, sweep points) are independent; they run on the
//! global rayon pool and results are collected in input order, so output is
//! deterministic regardless of parallelism.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::reduced_propagator_numeric;
use crate::dynamics::{decompose, SpectralPropagator};
use crate::hamiltonians::{
    build_full_space, build_single_excitation, site_basis_index, ChainSpec, Model,
};
use crate::measures::{fidelity, interference, interference_unitary, reduced_interference_closed};
use crate::{Error, Result};

/// One output row of a time-series run.
#[derive(Clone, Debug, Serialize)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub fidelity: f64,
    pub i_reduced: f64,
    pub i_full_normalized: f64,
    pub p11: f64,
    pub p1n: f64,
    /// F_1j for j = 2..N when produced by [`run_pairwise_fidelities`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairwise: Option<Vec<f64>>,
}

/// One point of a parameter sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepPoint {
    pub param: f64,
    /// Time of the global maximum of |f_1N| within the search window.
    pub t_star: f64,
    pub max_f1n: f64,
    /// Reduced interference (numeric channel) at `t_star`.
    pub i_r_at_max: f64,
}

/// Result of a sweep over one named parameter.
#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub parameter: String,
    pub points: Vec<SweepPoint>,
}

/// Options for time-series runs.
#[derive(Clone, Copy, Debug)]
pub struct TimeSeriesOptions {
    /// Use the phase-aligned fidelity (cos γ_1N = 1), the plotting
    /// convention; `false` keeps the raw computed phase.
    pub align_phase: bool,
}

impl Default for TimeSeriesOptions {
    fn default() -> Self {
        TimeSeriesOptions { align_phase: true }
    }
}

fn uniform_grid(t_max: f64, n_steps: usize) -> Vec<f64> {
    let dt = t_max / (n_steps - 1) as f64;
    (0..n_steps).map(|k| k as f64 * dt).collect()
}

/// Time series of fidelity, reduced interference, and normalized full
/// interference on a uniform grid over [0, t_max].
///
/// Conserving chains run in the single-excitation space: I_r from the
/// closed form, I_full as I_U/(D−1) of the (N+1)-dimensional restriction.
/// The flux-qubit chain with Δ > 0 runs in the full 2^N space: I_r from the
/// numeric d = 4 channel, I_full as I_U/(2^N − 1) of the full unitary, and
/// the amplitudes read at the single-excitation site indices.
pub fn run_time_series(
    spec: &ChainSpec,
    t_max: f64,
    n_steps: usize,
    options: TimeSeriesOptions,
) -> Result<Vec<TimeSeriesRecord>> {
    spec.validate()?;
    if n_steps < 2 {
        return Err(Error::Usage(format!("n_steps = {n_steps}; need at least 2")));
    }
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(Error::Usage(format!("t_max = {t_max}; need a positive time")));
    }
    let ts = uniform_grid(t_max, n_steps);

    if spec.conserves_excitations() {
        let sp = decompose(&build_single_excitation(spec)?)?;
        ts.par_iter()
            .map(|&t| {
                let amps = sp.amplitudes(t);
                let u = sp.evolve(t);
                Ok(TimeSeriesRecord {
                    t,
                    fidelity: fidelity(&amps, options.align_phase),
                    i_reduced: reduced_interference_closed(&amps, false),
                    i_full_normalized: interference_unitary(&u)?,
                    p11: amps.p11(),
                    p1n: amps.p1n(),
                    pairwise: None,
                })
            })
            .collect()
    } else {
        let n = spec.n_sites;
        let sp = decompose(&build_full_space(spec)?)?;
        let (i1, i_n) = (site_basis_index(n, 1), site_basis_index(n, n));
        ts.par_iter()
            .map(|&t| {
                let amps = sp.amplitudes_between(t, i1, i_n)?;
                let u = sp.evolve(t);
                let p = reduced_propagator_numeric(&sp, n, t)?;
                Ok(TimeSeriesRecord {
                    t,
                    fidelity: fidelity(&amps, options.align_phase),
                    i_reduced: interference(&p),
                    i_full_normalized: interference_unitary(&u)?,
                    p11: amps.p11(),
                    p1n: amps.p1n(),
                    pairwise: None,
                })
            })
            .collect()
    }
}

/// Golden-section search for the maximum of a unimodal function on [lo, hi],
/// to absolute tolerance `tol` in the argument. Deterministic; on plateaus
/// the bracket contracts toward the earlier time.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

/// Global maximum of `f` on [lo, hi]: coarse scan on `n_coarse` points
/// (ties resolved toward the earliest time) refined by golden-section search
/// between the neighbors of the best coarse point, to 1e−8 relative time
/// tolerance.
pub fn global_max_scan(
    f: impl Fn(f64) -> f64 + Sync,
    lo: f64,
    hi: f64,
    n_coarse: usize,
) -> (f64, f64) {
    let n = n_coarse.max(2);
    let dt = (hi - lo) / (n - 1) as f64;
    let mut best_k = 0usize;
    let mut best = f64::NEG_INFINITY;
    for k in 0..n {
        let v = f(lo + k as f64 * dt);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let a = lo + dt * best_k.saturating_sub(1) as f64;
    let b = (lo + dt * (best_k + 1) as f64).min(hi);
    let tol = 1e-8 * hi.abs().max(1.0);
    let (t_star, v_star) = golden_section_max(&f, a, b, tol);
    // The refined bracket maximum can only improve on the coarse point, but
    // guard against a pathological plateau edge.
    if v_star >= best {
        (t_star, v_star)
    } else {
        (lo + dt * best_k as f64, best)
    }
}

/// Minimum number of coarse scan points per search window.
pub const SWEEP_COARSE_POINTS: usize = 2000;

/// Sweep the tunneling amplitude Δ of the flux-qubit chain: for each grid
/// value, locate the global maximum of |f_1N| inside `window` (coarse scan
/// plus golden-section refinement) and record the reduced interference of
/// the numeric channel at that time.
pub fn run_delta_sweep(
    base: &ChainSpec,
    delta_grid: &[f64],
    window: (f64, f64),
) -> Result<SweepResult> {
    if base.model != Model::FluxQubit {
        return Err(Error::InvalidSpec(
            "the delta sweep is defined for the flux-qubit model".into(),
        ));
    }
    base.validate()?;
    if delta_grid.is_empty() {
        return Err(Error::Usage("empty delta grid".into()));
    }
    if delta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("delta grid must be strictly increasing".into()));
    }
    if delta_grid[0] < 0.0 {
        return Err(Error::Usage("delta must be ≥ 0".into()));
    }
    let (lo, hi) = window;
    if !lo.is_finite() || !hi.is_finite() || hi <= lo || lo < 0.0 {
        return Err(Error::Usage(format!(
            "search window [{lo}, {hi}] must be a positive time interval"
        )));
    }

    let n = base.n_sites;
    let (i1, i_n) = (site_basis_index(n, 1), site_basis_index(n, n));
    let points = delta_grid
        .par_iter()
        .map(|&delta| {
            let spec = ChainSpec {
                delta,
                ..base.clone()
            };
            let sp = decompose(&build_full_space(&spec)?)?;
            let f1n = |t: f64| sp.matrix_element(t, i_n, i1).norm();
            let (t_star, max_f1n) = global_max_scan(f1n, lo, hi, SWEEP_COARSE_POINTS);
            let p = reduced_propagator_numeric(&sp, n, t_star)?;
            Ok(SweepPoint {
                param: delta,
                t_star,
                max_f1n,
                i_r_at_max: interference(&p),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        parameter: "delta".into(),
        points,
    })
}

/// Pairwise fidelities F_1j = |f_j1|/3 + |f_j1|²/6 + 1/2 for j = 2..N along
/// a conserving chain, together with the usual measure columns.
pub fn run_pairwise_fidelities(
    spec: &ChainSpec,
    t_max: f64,
    n_steps: usize,
) -> Result<Vec<TimeSeriesRecord>> {
    spec.validate()?;
    if !spec.conserves_excitations() {
        return Err(Error::InvalidSpec(
            "pairwise fidelities are defined for conserving chains".into(),
        ));
    }
    if n_steps < 2 {
        return Err(Error::Usage(format!("n_steps = {n_steps}; need at least 2")));
    }
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(Error::Usage(format!("t_max = {t_max}; need a positive time")));
    }
    let n = spec.n_sites;
    let sp = decompose(&build_single_excitation(spec)?)?;
    let ts = uniform_grid(t_max, n_steps);
    ts.par_iter()
        .map(|&t| {
            let amps = sp.amplitudes(t);
            let u = sp.evolve(t);
            let col1 = u.column(1);
            let pairwise = (2..=n)
                .map(|j| {
                    let m = col1[j].norm();
                    m / 3.0 + m * m / 6.0 + 0.5
                })
                .collect();
            Ok(TimeSeriesRecord {
                t,
                fidelity: fidelity(&amps, true),
                i_reduced: reduced_interference_closed(&amps, false),
                i_full_normalized: interference_unitary(&u)?,
                p11: amps.p11(),
                p1n: amps.p1n(),
                pairwise: Some(pairwise),
            })
        })
        .collect()
}

/// Period of the fastest oscillation of a propagator, 2π over the spectral
/// width (the largest eigenvalue gap). Used to size envelope windows.
pub fn fast_period(sp: &SpectralPropagator) -> f64 {
    let width = sp.eigenvalues[sp.dim - 1] - sp.eigenvalues[0];
    std::f64::consts::TAU / width.max(f64::MIN_POSITIVE)
}

/// Upper envelope of a sampled signal: maxima over consecutive windows of
/// `width`, reported at the window centers. Returns (centers, maxima).
pub fn upper_envelope(ts: &[f64], ys: &[f64], width: f64) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(ts.len(), ys.len());
    let mut centers = Vec::new();
    let mut maxima = Vec::new();
    if ts.is_empty() || width.is_nan() || width <= 0.0 {
        return (centers, maxima);
    }
    let t0 = ts[0];
    let mut w = 0usize;
    let mut idx = 0usize;
    while idx < ts.len() {
        let hi = t0 + (w + 1) as f64 * width;
        let mut best = f64::NEG_INFINITY;
        let mut seen = false;
        while idx < ts.len() && ts[idx] < hi {
            best = best.max(ys[idx]);
            seen = true;
            idx += 1;
        }
        if seen {
            centers.push(hi - 0.5 * width);
            maxima.push(best);
        }
        w += 1;
    }
    (centers, maxima)
}

/// Pearson correlation coefficient of two equal-length samples.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}
