//! Interference and fidelity measures.
//!
//! The interference of a propagator tensor is
//! I = Σ_{i,k,l} |P_{ii,kl}|² − Σ_{i,k} |P_{ii,kk}|²: it vanishes iff the
//! final populations are insensitive to initial coherences, and for a
//! unitary U it reduces to I_U = D − Σ|U_ik|⁴, normalized by D−1 so that an
//! equipartitioned unitary scores exactly 1.
//!
//! The reduced interference I_r of a conserving chain has a closed form in
//! the transfer amplitudes; the general expression derives from the channel
//! tensor with the interior cross-sum eliminated through completeness
//! (Σ_j f_j1 f*_jN = 0), and under mirror symmetry it collapses to
//! 4|f_11|²|f_1N|²(1 + 2cos²(γ_11 − γ_1N)).
//!
//! The average transfer fidelity over the Bloch sphere of input states is
//! F = |f_1N|cos γ_1N/3 + |f_1N|²/6 + 1/2; [`fidelity_numeric`] recomputes it
//! by Monte Carlo through an extracted channel as an independent oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::PropagatorTensor;
use crate::dynamics::TransferAmplitudes;
use crate::{Error, Result};

/// One row of measure values at a time point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeasureSample {
    pub t: f64,
    pub fidelity: f64,
    pub i_reduced: f64,
    pub i_full_normalized: f64,
    pub p11: f64,
    pub p1n: f64,
}

/// Interference of a channel tensor (exact evaluation of the defining sum;
/// tiny negative round-off is clamped to 0).
pub fn interference(p: &PropagatorTensor) -> f64 {
    let d = p.d;
    let mut total = 0.0f64;
    let mut diagonal = 0.0f64;
    for i in 0..d {
        for k in 0..d {
            for l in 0..d {
                let w = p.get(i, i, k, l).norm_sqr();
                total += w;
                if k == l {
                    diagonal += w;
                }
            }
        }
    }
    (total - diagonal).max(0.0)
}

/// Max-entry residual of U†U against the identity.
pub fn unitarity_residual(u: &DMatrix<Complex64>) -> f64 {
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..u.nrows() {
        for j in 0..u.ncols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(expect, 0.0)).norm());
        }
    }
    worst
}

/// Un-normalized unitary interference I_U = D − Σ_{ik} |U_ik|⁴.
pub fn interference_unitary_unnormalized(u: &DMatrix<Complex64>) -> Result<f64> {
    if u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            got: u.ncols(),
        });
    }
    let residual = unitarity_residual(u);
    if residual > 1e-8 {
        return Err(Error::NotUnitary { residual });
    }
    let d = u.nrows() as f64;
    let quartic: f64 = u.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum();
    Ok((d - quartic).max(0.0))
}

/// Normalized unitary interference I_U/(D−1) ∈ [0, 1].
pub fn interference_unitary(u: &DMatrix<Complex64>) -> Result<f64> {
    let raw = interference_unitary_unnormalized(u)?;
    Ok(raw / (u.nrows() as f64 - 1.0))
}

/// Closed-form reduced interference from the transfer amplitudes.
///
/// `symmetric = true` evaluates the mirror-symmetric form
/// 4|f_11|²|f_1N|²(1 + 2cos²(γ_11 − γ_1N)); otherwise the general form
/// 2|S_X|² + 2|f_11 f*_1N|² + 2|f_N1 f*_NN|² with
/// S_X = −(f_11 f*_1N + f_N1 f*_NN) from completeness.
pub fn reduced_interference_closed(amps: &TransferAmplitudes, symmetric: bool) -> f64 {
    if symmetric {
        let cos = (amps.gamma11 - amps.gamma1n).cos();
        4.0 * amps.p11() * amps.p1n() * (1.0 + 2.0 * cos * cos)
    } else {
        let sx = -(amps.f11 * amps.f1n.conj() + amps.fn1 * amps.fnn.conj());
        2.0 * sx.norm_sqr()
            + 2.0 * (amps.f11 * amps.f1n.conj()).norm_sqr()
            + 2.0 * (amps.fn1 * amps.fnn.conj()).norm_sqr()
    }
}

/// Bloch-sphere-averaged transfer fidelity.
///
/// `align_phase = true` assumes the transfer phase has been compensated
/// (cos γ_1N = 1), the convention used for fidelity plots; `false` keeps the
/// computed phase, which is what the Monte Carlo oracle reproduces.
pub fn fidelity(amps: &TransferAmplitudes, align_phase: bool) -> f64 {
    let m = amps.f1n.norm();
    let cos = if align_phase { 1.0 } else { amps.gamma1n.cos() };
    m * cos / 3.0 + m * m / 6.0 + 0.5
}

/// Monte Carlo estimate of the average fidelity with its standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Trace over spin 1 of a reduced density matrix, leaving the 2×2 state of
/// spin N in the basis (|0⟩_N, |1⟩_N).
fn trace_out_spin1(rho: &DMatrix<Complex64>, d: usize) -> [[Complex64; 2]; 2] {
    let z = Complex64::new(0.0, 0.0);
    let mut out = [[z; 2]; 2];
    match d {
        3 => {
            // Basis (|0⟩_r, |1⟩, |N⟩): the vacuum and |1⟩ both leave spin N
            // down; only |0⟩_r–|N⟩ coherence survives the trace.
            out[0][0] = rho[(0, 0)] + rho[(1, 1)];
            out[1][1] = rho[(2, 2)];
            out[0][1] = rho[(0, 2)];
            out[1][0] = rho[(2, 0)];
        }
        4 => {
            // Basis |s_1 s_N⟩ spin-1-major: sum the two s_1 blocks.
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] = rho[(i, j)] + rho[(2 + i, 2 + j)];
                }
            }
        }
        _ => unreachable!("reduced tensors are d = 3 or d = 4"),
    }
    out
}

/// Monte Carlo average of ⟨ψ_in|ρ_out|ψ_in⟩ over uniform Bloch-sphere inputs
/// on spin 1 (interior and spin N start down), with ρ_out = Tr_1 ρ′.
///
/// Deterministic for a fixed `seed`.
pub fn fidelity_numeric(
    p: &PropagatorTensor,
    n_samples: usize,
    seed: u64,
) -> Result<FidelityEstimate> {
    if n_samples < 100 {
        return Err(Error::Usage(format!(
            "n_samples = {n_samples}; at least 100 needed for a meaningful standard error"
        )));
    }
    if p.d != 3 && p.d != 4 {
        return Err(Error::DimensionMismatch { expected: 3, got: p.d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let d = p.d;
    // Input index of the spin-1 excitation in each reduced basis.
    let exc_index = if d == 3 { 1 } else { 2 };
    for _ in 0..n_samples {
        let cos_theta: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let half = (cos_theta.acos()) / 2.0;
        let a0 = Complex64::new(half.cos(), 0.0);
        let a1 = Complex64::from_polar(half.sin(), phi);

        let mut psi = vec![Complex64::new(0.0, 0.0); d];
        psi[0] = a0;
        psi[exc_index] = a1;
        let rho_in = DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj());
        let rho_prime = p.apply(&rho_in)?;
        let rho_out = trace_out_spin1(&rho_prime, d);

        // ⟨ψ_in|ρ_out|ψ_in⟩ with ψ_in = (a0, a1) on spin N.
        let amp = [a0, a1];
        let mut f = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                f += amp[i].conj() * rho_out[i][j] * amp[j];
            }
        }
        let f = f.re;
        sum += f;
        sum_sq += f * f;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n) - mean * mean).max(0.0);
    Ok(FidelityEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_samples,
    })
}
