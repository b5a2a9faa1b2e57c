//! Chain Hamiltonians as dense Hermitian matrices.
//!
//! Four models are supported, all with open boundaries and nearest-neighbor
//! bonds between sites i−1 and i (i = 2..N):
//!
//! * `HeisenbergUniform` — isotropic exchange −J σ_i·σ_{i−1} plus per-site
//!   fields −Σ B_i σ_i^z.
//! * `XYWeakEnds` — XY exchange −J_i (σ^x σ^x + σ^y σ^y) with weakened end
//!   bonds J_2 = J_N = aJ.
//! * `FluxQubit` — XY + Ising exchange plus a transverse tunneling term
//!   −Σ (Δ σ_i^x + B σ_i^z); Δ > 0 breaks excitation-number conservation,
//!   so this model lives in the full 2^N space.
//! * `XYIsing` — the Δ = 0 specialization of `FluxQubit`; conserving.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * σ^z|0⟩ = +|0⟩ and σ^z|1⟩ = −|1⟩, so the field term −B Σ σ^z penalizes
//!   excitations ("up" spins) by +2B each.
//! * Single-excitation basis: {|vac⟩, |1⟩, …, |N⟩}, vacuum first. |j⟩ is the
//!   excitation on site j; matrix row/column j is site j.
//! * Full space: computational product basis with site 1 as the most
//!   significant bit, so |j⟩ embeds at index 2^(N−j) and the vacuum at 0.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest chain accepted by [`build_full_space`]; a dense 2^N eigenproblem
/// beyond this takes minutes and defeats the point of the dense pipeline.
pub const FULL_SPACE_CAP: usize = 12;

/// Hermiticity tolerance for constructed operators (absolute, entrywise).
pub const HERMITICITY_TOL: f64 = 1e-12;

/// The four chain families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    HeisenbergUniform,
    XYWeakEnds,
    FluxQubit,
    XYIsing,
}

/// Per-site longitudinal field; a plain number means the same field on every
/// site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Uniform(f64),
    PerSite(Vec<f64>),
}

impl FieldSpec {
    /// Field on site `site` (1-based).
    pub fn at(&self, site: usize) -> f64 {
        match self {
            FieldSpec::Uniform(b) => *b,
            FieldSpec::PerSite(v) => v[site - 1],
        }
    }

    /// Sum of the field over all `n` sites.
    pub fn total(&self, n: usize) -> f64 {
        match self {
            FieldSpec::Uniform(b) => b * n as f64,
            FieldSpec::PerSite(v) => v.iter().sum(),
        }
    }

    pub fn is_uniform(&self) -> bool {
        match self {
            FieldSpec::Uniform(_) => true,
            FieldSpec::PerSite(v) => v.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Uniform(0.0)
    }
}

/// Declarative description of a chain: model, size, couplings, fields.
///
/// Only the couplings relevant to `model` are read by the builders; the rest
/// keep their defaults so a spec can be round-tripped through serialization
/// without surprises.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub model: Model,
    pub n_sites: usize,
    /// Exchange J for `HeisenbergUniform` and the bulk bond of `XYWeakEnds`.
    pub j: f64,
    /// End-bond ratio a ∈ (0, 1] for `XYWeakEnds` (J_2 = J_N = aJ).
    pub a: f64,
    /// XY coupling for `FluxQubit`/`XYIsing`.
    pub j_xy: f64,
    /// Ising (σ^z σ^z) coupling for `FluxQubit`/`XYIsing`.
    pub j_z: f64,
    /// Transverse tunneling amplitude Δ ≥ 0 (`FluxQubit` only).
    pub delta: f64,
    pub b_fields: FieldSpec,
}

impl ChainSpec {
    pub fn heisenberg(n_sites: usize, j: f64) -> Self {
        ChainSpec {
            model: Model::HeisenbergUniform,
            n_sites,
            j,
            a: 1.0,
            j_xy: 0.0,
            j_z: 0.0,
            delta: 0.0,
            b_fields: FieldSpec::default(),
        }
    }

    pub fn xy_weak_ends(n_sites: usize, j: f64, a: f64) -> Self {
        ChainSpec {
            model: Model::XYWeakEnds,
            n_sites,
            j,
            a,
            j_xy: 0.0,
            j_z: 0.0,
            delta: 0.0,
            b_fields: FieldSpec::default(),
        }
    }

    pub fn flux_qubit(n_sites: usize, j_xy: f64, j_z: f64, delta: f64) -> Self {
        ChainSpec {
            model: Model::FluxQubit,
            n_sites,
            j: 0.0,
            a: 1.0,
            j_xy,
            j_z,
            delta,
            b_fields: FieldSpec::default(),
        }
    }

    pub fn xy_ising(n_sites: usize, j_xy: f64, j_z: f64) -> Self {
        ChainSpec {
            model: Model::XYIsing,
            n_sites,
            j: 0.0,
            a: 1.0,
            j_xy,
            j_z,
            delta: 0.0,
            b_fields: FieldSpec::default(),
        }
    }

    /// Replace the field with a uniform value.
    pub fn with_uniform_field(mut self, b: f64) -> Self {
        self.b_fields = FieldSpec::Uniform(b);
        self
    }

    /// Replace the field with per-site values (length must be `n_sites`).
    pub fn with_fields(mut self, b: Vec<f64>) -> Self {
        self.b_fields = FieldSpec::PerSite(b);
        self
    }

    /// Whether the model commutes with total σ^z. Only `FluxQubit` with
    /// Δ > 0 breaks the conservation.
    pub fn conserves_excitations(&self) -> bool {
        self.model != Model::FluxQubit || self.delta == 0.0
    }

    /// XY hopping coupling on bond `i` (connecting sites i−1 and i, i ≥ 2).
    fn bond_xy(&self, i: usize) -> f64 {
        match self.model {
            Model::HeisenbergUniform => self.j,
            Model::XYWeakEnds => {
                if i == 2 || i == self.n_sites {
                    self.a * self.j
                } else {
                    self.j
                }
            }
            Model::FluxQubit | Model::XYIsing => self.j_xy,
        }
    }

    /// σ^z σ^z coupling on every bond (uniform per model).
    fn bond_zz(&self) -> f64 {
        match self.model {
            Model::HeisenbergUniform => self.j,
            Model::XYWeakEnds => 0.0,
            Model::FluxQubit | Model::XYIsing => self.j_z,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidSpec(format!(
                "n_sites = {} but a chain needs at least 2 sites",
                self.n_sites
            )));
        }
        let couplings = [self.j, self.a, self.j_xy, self.j_z, self.delta];
        if couplings.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec("non-finite coupling".into()));
        }
        if self.model == Model::XYWeakEnds && !(self.a > 0.0 && self.a <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "end-coupling ratio a = {} must lie in (0, 1]",
                self.a
            )));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "tunneling amplitude delta = {} must be ≥ 0",
                self.delta
            )));
        }
        if self.model != Model::FluxQubit && self.delta != 0.0 {
            return Err(Error::InvalidSpec(
                "delta is a FluxQubit parameter; other models must keep delta = 0".into(),
            ));
        }
        match &self.b_fields {
            FieldSpec::Uniform(b) if !b.is_finite() => {
                return Err(Error::InvalidSpec("non-finite field".into()));
            }
            FieldSpec::PerSite(v) => {
                if v.len() != self.n_sites {
                    return Err(Error::InvalidSpec(format!(
                        "b_fields has {} entries for {} sites",
                        v.len(),
                        self.n_sites
                    )));
                }
                if v.iter().any(|b| !b.is_finite()) {
                    return Err(Error::InvalidSpec("non-finite field".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// A dense Hermitian matrix with its dimension, validated on construction.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    pub dim: usize,
    pub entries: DMatrix<Complex64>,
}

impl HermitianOperator {
    /// Wrap a matrix, enforcing squareness and Hermiticity to
    /// [`HERMITICITY_TOL`].
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let dim = entries.nrows();
        let mut residual = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let d = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if d > residual {
                    residual = d;
                }
            }
        }
        if residual > HERMITICITY_TOL {
            return Err(Error::NotHermitian { residual });
        }
        Ok(HermitianOperator { dim, entries })
    }
}

/// Product of σ^z eigenvalues over a bond when the excitation sits at
/// `exc` (`None` = vacuum): +1 if the bond spins are aligned, −1 otherwise.
fn zz_sign(bond: usize, exc: Option<usize>) -> f64 {
    match exc {
        Some(j) if j == bond - 1 || j == bond => -1.0,
        _ => 1.0,
    }
}

/// Diagonal energy of a single-excitation basis state: σ^zσ^z part over all
/// bonds plus the field part −Σ B_i s_i.
fn diagonal_energy(spec: &ChainSpec, exc: Option<usize>) -> f64 {
    let zz = spec.bond_zz();
    let n = spec.n_sites;
    let mut e = 0.0;
    for bond in 2..=n {
        e -= zz * zz_sign(bond, exc);
    }
    e -= spec.b_fields.total(n);
    if let Some(j) = exc {
        e += 2.0 * spec.b_fields.at(j);
    }
    e
}

/// Hamiltonian restricted to the single-excitation subspace, basis
/// {|vac⟩, |1⟩, …, |N⟩}.
///
/// The vacuum row/column stays diagonal (conservation), diagonal entries
/// carry the σ^zσ^z and field energies of each basis state, and neighboring
/// site states couple through −2J_i (the factor 2 comes from
/// σ^xσ^x + σ^yσ^y acting on spin-½).
pub fn build_single_excitation(spec: &ChainSpec) -> Result<HermitianOperator> {
    spec.validate()?;
    if !spec.conserves_excitations() {
        return Err(Error::InvalidSpec(
            "FluxQubit with delta > 0 does not conserve excitations; \
             use build_full_space"
                .into(),
        ));
    }
    let n = spec.n_sites;
    let dim = n + 1;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    h[(0, 0)] = Complex64::new(diagonal_energy(spec, None), 0.0);
    for j in 1..=n {
        h[(j, j)] = Complex64::new(diagonal_energy(spec, Some(j)), 0.0);
    }
    for bond in 2..=n {
        let hop = Complex64::new(-2.0 * spec.bond_xy(bond), 0.0);
        h[(bond - 1, bond)] = hop;
        h[(bond, bond - 1)] = hop;
    }
    HermitianOperator::new(h)
}

/// Index of site `site` (1-based) in the full-space basis: site 1 is the
/// most significant bit, so the single excitation |site⟩ lives at 2^(N−site).
pub fn site_basis_index(n_sites: usize, site: usize) -> usize {
    1 << (n_sites - site)
}

/// Occupation (0 or 1) of `site` in the product-basis state `state`.
#[inline]
fn occupation(state: usize, n_sites: usize, site: usize) -> usize {
    (state >> (n_sites - site)) & 1
}

/// σ^z eigenvalue of `site` in `state` under the σ^z|0⟩ = +|0⟩ convention.
#[inline]
fn z_sign(state: usize, n_sites: usize, site: usize) -> f64 {
    1.0 - 2.0 * occupation(state, n_sites, site) as f64
}

/// Hamiltonian in the full 2^N product space (any model; the only route for
/// `FluxQubit` with Δ > 0). Capped at [`FULL_SPACE_CAP`] sites.
pub fn build_full_space(spec: &ChainSpec) -> Result<HermitianOperator> {
    spec.validate()?;
    let n = spec.n_sites;
    if n > FULL_SPACE_CAP {
        return Err(Error::SizeCap {
            n,
            dim: 1usize << n,
            cap: FULL_SPACE_CAP,
        });
    }
    let dim = 1usize << n;
    let zz = spec.bond_zz();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for s in 0..dim {
        let mut diag = 0.0;
        for bond in 2..=n {
            diag -= zz * z_sign(s, n, bond - 1) * z_sign(s, n, bond);
        }
        for site in 1..=n {
            diag -= spec.b_fields.at(site) * z_sign(s, n, site);
        }
        h[(s, s)] += Complex64::new(diag, 0.0);

        // XY flip-flop: σ^xσ^x + σ^yσ^y moves one excitation across a bond.
        for bond in 2..=n {
            if occupation(s, n, bond - 1) != occupation(s, n, bond) {
                let s2 = s ^ site_basis_index(n, bond - 1) ^ site_basis_index(n, bond);
                h[(s2, s)] += Complex64::new(-2.0 * spec.bond_xy(bond), 0.0);
            }
        }

        // Transverse tunneling −Δ σ^x flips any single spin.
        if spec.model == Model::FluxQubit && spec.delta != 0.0 {
            for site in 1..=n {
                let s2 = s ^ site_basis_index(n, site);
                h[(s2, s)] += Complex64::new(-spec.delta, 0.0);
            }
        }
    }
    HermitianOperator::new(h)
}
