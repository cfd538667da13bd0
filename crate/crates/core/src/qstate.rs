//! Two-qubit density matrices, convex decompositions into pure states, and the
//! named state families used throughout the crate.
//!
//! Basis order is |00⟩, |01⟩, |10⟩, |11⟩; matrices are 4×4 complex, row-major
//! when serialized. Three families appear repeatedly:
//!
//! - ϱm(γ): maximally entangled mixed states with g(γ) = γ/2 for γ ≥ 2/3 and
//!   g = 1/3 below, entries g at |00⟩⟨00| and |11⟩⟨11|, 1 − 2g at |01⟩⟨01|,
//!   and γ/2 on the outer anti-diagonal corners.
//! - ϱw(γ, ξ): (1 − γ)/4 · 𝟙 + γ |Ψnon⟩⟨Ψnon| with |Ψnon⟩ = cos ξ|00⟩ + sin ξ|11⟩.
//! - ϱs(x): diagonal 1/4 with x on the full anti-diagonal, |x| ≤ 1/4. Separable
//!   for every admissible x, yet it admits a decomposition into Bell states.
//!
//! Construction validates; a [`QubitPairState`] or [`Decomposition`] that
//! exists satisfies its invariants, and downstream code relies on that.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

type C64 = Complex<f64>;
type M4 = Matrix4<C64>;

/// Largest tolerated |m − m†| entry.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Largest tolerated |tr ϱ − 1|.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative tolerated eigenvalue.
pub const EIGENVALUE_TOL: f64 = 1e-10;
/// Largest tolerated |‖ψ‖² − 1| for a pure state.
pub const NORM_TOL: f64 = 1e-12;
/// Largest tolerated |Σᵢ pᵢ − 1| for decomposition weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Largest tolerated Frobenius distance between a state and its decomposition.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

fn require_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NotFinite { name, value })
    }
}

/// Max |m[(i,j)] − conj(m[(j,i)])| over all entries.
fn hermiticity_error(m: &M4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in i..4 {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn symmetrized(m: &M4) -> M4 {
    (m + m.adjoint()) * cr(0.5)
}

/// Eigenvalues of a (numerically) Hermitian matrix, ascending.
fn hermitian_eigenvalues(m: &M4) -> [f64; 4] {
    let es = SymmetricEigen::new(symmetrized(m));
    let mut out = [0.0; 4];
    for (slot, ev) in out.iter_mut().zip(es.eigenvalues.iter()) {
        *slot = *ev;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// A factor L with m = L L†, from the eigensystem. Eigenvalues below a
/// small multiple of the largest are truncated to exactly zero: a true zero
/// eigenvalue comes back from the solver as ~1e−15 noise, and keeping it
/// would add a spurious column of norm ~3e−8 to L.
fn psd_factor(m: &M4) -> M4 {
    let es = SymmetricEigen::new(symmetrized(m));
    let floor = es.eigenvalues.iter().fold(0.0f64, |acc, &ev| acc.max(ev)) * 1e-13;
    let mut l = es.eigenvectors;
    for j in 0..4 {
        let ev = es.eigenvalues[j];
        let root = cr(if ev <= floor { 0.0 } else { ev.sqrt() });
        for i in 0..4 {
            l[(i, j)] *= root;
        }
    }
    l
}

/// A validated two-qubit density matrix: Hermitian, unit trace, positive
/// semidefinite (within the module tolerances).
#[derive(Debug, Clone, PartialEq)]
pub struct QubitPairState {
    matrix: M4,
}

impl QubitPairState {
    /// Validates and wraps a density matrix.
    pub fn new(matrix: M4) -> Result<Self> {
        let herm = hermiticity_error(&matrix);
        if herm.is_nan() || herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = matrix.trace();
        if !((tr.re - 1.0).abs() <= TRACE_TOL && tr.im.abs() <= TRACE_TOL) {
            return Err(Error::BadTrace(tr));
        }
        let min_eig = hermitian_eigenvalues(&matrix)[0];
        if min_eig.is_nan() || min_eig < -EIGENVALUE_TOL {
            return Err(Error::NotPositive(min_eig));
        }
        Ok(Self { matrix })
    }

    /// Projector onto a pure state. Valid by construction.
    pub fn from_pure(pure: &PureState) -> Self {
        Self {
            matrix: pure.projector(),
        }
    }

    pub fn matrix(&self) -> &M4 {
        &self.matrix
    }
}

/// A normalized two-qubit state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vector4<C64>,
}

impl PureState {
    /// Validates ‖ψ‖² = 1 and wraps the amplitudes.
    pub fn new(amplitudes: Vector4<C64>) -> Result<Self> {
        let norm2 = amplitudes.norm_squared();
        let err = (norm2 - 1.0).abs();
        if err.is_nan() || err > NORM_TOL {
            return Err(Error::NotNormalized(norm2));
        }
        Ok(Self { amplitudes })
    }

    /// (|00⟩ + |11⟩)/√2
    pub fn phi_plus() -> Self {
        Self::bell(1.0, 0)
    }

    /// (|00⟩ − |11⟩)/√2
    pub fn phi_minus() -> Self {
        Self::bell(-1.0, 0)
    }

    /// (|01⟩ + |10⟩)/√2
    pub fn psi_plus() -> Self {
        Self::bell(1.0, 1)
    }

    /// (|01⟩ − |10⟩)/√2
    pub fn psi_minus() -> Self {
        Self::bell(-1.0, 1)
    }

    fn bell(sign: f64, kind: usize) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = Vector4::zeros();
        if kind == 0 {
            v[0] = cr(h);
            v[3] = cr(sign * h);
        } else {
            v[1] = cr(h);
            v[2] = cr(sign * h);
        }
        Self { amplitudes: v }
    }

    /// Computational basis state |first, second⟩ with first, second ∈ {0, 1}.
    pub fn basis(first: usize, second: usize) -> Self {
        assert!(first < 2 && second < 2, "basis labels must be 0 or 1");
        let mut v = Vector4::zeros();
        v[2 * first + second] = cr(1.0);
        Self { amplitudes: v }
    }

    /// cos ξ |00⟩ + sin ξ |11⟩
    pub fn nonmax_entangled(xi: f64) -> Self {
        let mut v = Vector4::zeros();
        v[0] = cr(xi.cos());
        v[3] = cr(xi.sin());
        Self { amplitudes: v }
    }

    /// Product state first ⊗ second of two normalized single-qubit vectors.
    pub fn product(first: &Vector2<C64>, second: &Vector2<C64>) -> Result<Self> {
        Self::new(first.kronecker(second))
    }

    pub fn amplitudes(&self) -> &Vector4<C64> {
        &self.amplitudes
    }

    /// |ψ⟩⟨ψ|
    pub fn projector(&self) -> M4 {
        let mut m = M4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        m
    }
}

/// A convex decomposition ϱ = Σᵢ pᵢ |ψᵢ⟩⟨ψᵢ| of a specific state.
///
/// Zero-weight terms are dropped on construction, so every stored term
/// contributes. The weighted projectors reproduce the source state to
/// [`RECONSTRUCTION_TOL`] in Frobenius norm.
#[derive(Debug, Clone)]
pub struct Decomposition {
    source: QubitPairState,
    terms: Vec<(f64, PureState)>,
}

impl Decomposition {
    /// Validates weights and reconstruction against an explicitly given source.
    pub fn new(source: QubitPairState, terms: Vec<(f64, PureState)>) -> Result<Self> {
        let kept = checked_terms(terms)?;
        let err = (source.matrix() - mixture_matrix(&kept)).norm();
        if err.is_nan() || err > RECONSTRUCTION_TOL {
            return Err(Error::BadReconstruction(err));
        }
        Ok(Self {
            source,
            terms: kept,
        })
    }

    /// Builds the source state from the terms themselves.
    pub fn from_terms(terms: Vec<(f64, PureState)>) -> Result<Self> {
        let kept = checked_terms(terms)?;
        let source = QubitPairState::new(mixture_matrix(&kept))?;
        Ok(Self {
            source,
            terms: kept,
        })
    }

    pub fn source(&self) -> &QubitPairState {
        &self.source
    }

    /// The (weight, pure state) terms, zero weights already removed.
    pub fn terms(&self) -> &[(f64, PureState)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Re-checks the construction tolerances and reports the residuals.
    pub fn validate(&self) -> DecompositionReport {
        validate_decomposition(&self.raw())
    }

    /// Plain-data view, e.g. for serialization or external validation.
    pub fn raw(&self) -> RawDecomposition {
        RawDecomposition {
            matrix: Some(matrix_to_pairs(self.source.matrix())),
            terms: self
                .terms
                .iter()
                .map(|(w, psi)| RawTerm {
                    weight: *w,
                    amplitudes: psi.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
                })
                .collect(),
        }
    }
}

fn checked_terms(terms: Vec<(f64, PureState)>) -> Result<Vec<(f64, PureState)>> {
    let mut kept = Vec::with_capacity(terms.len());
    for (index, (weight, psi)) in terms.into_iter().enumerate() {
        if weight.is_nan() || weight < 0.0 {
            return Err(Error::NegativeWeight { index, weight });
        }
        if weight == 0.0 {
            continue;
        }
        kept.push((weight, psi));
    }
    if kept.is_empty() {
        return Err(Error::EmptyDecomposition);
    }
    let sum: f64 = kept.iter().map(|t| t.0).sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::BadWeightSum(sum));
    }
    Ok(kept)
}

fn mixture_matrix(terms: &[(f64, PureState)]) -> M4 {
    let mut m = M4::zeros();
    for (w, psi) in terms {
        m += psi.projector() * cr(*w);
    }
    m
}

/// Decomposition data as plain numbers, before any validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDecomposition {
    /// Row-major source matrix as [re, im] pairs; omitted if unknown.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
    pub terms: Vec<RawTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawTerm {
    pub weight: f64,
    pub amplitudes: Vec<[f64; 2]>,
}

impl RawDecomposition {
    /// Validates the data and builds a [`Decomposition`].
    ///
    /// With a `matrix` present the terms must reconstruct it; otherwise the
    /// source is derived from the terms.
    pub fn into_decomposition(self) -> Result<Decomposition> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            terms.push((t.weight, PureState::new(parse_amplitudes(&t.amplitudes)?)?));
        }
        match &self.matrix {
            Some(pairs) => {
                let state = QubitPairState::new(parse_matrix(pairs)?)?;
                Decomposition::new(state, terms)
            }
            None => Decomposition::from_terms(terms),
        }
    }
}

/// Residuals of the decomposition invariants, plus an overall verdict.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    /// Every term has four amplitudes and the matrix, if given, sixteen entries.
    pub shape_ok: bool,
    /// |Σᵢ pᵢ − 1| over nonzero weights.
    pub weight_sum_error: f64,
    /// Smallest weight, including zeros that construction would drop.
    pub min_weight: f64,
    /// |‖ψᵢ‖² − 1| per term, in input order.
    pub term_norm_errors: Vec<f64>,
    /// Frobenius distance between the stated (or derived) matrix and Σᵢ pᵢ |ψᵢ⟩⟨ψᵢ|.
    pub reconstruction_error: f64,
    pub pass: bool,
}

/// Checks raw decomposition data against the construction tolerances without
/// constructing anything, so that failures are reported rather than raised.
pub fn validate_decomposition(raw: &RawDecomposition) -> DecompositionReport {
    let shape_ok = raw.terms.iter().all(|t| t.amplitudes.len() == 4)
        && raw.matrix.as_ref().is_none_or(|m| m.len() == 16)
        && !raw.terms.is_empty();

    let term_norm_errors: Vec<f64> = raw
        .terms
        .iter()
        .map(|t| {
            let norm2: f64 = t.amplitudes.iter().map(|[re, im]| re * re + im * im).sum();
            (norm2 - 1.0).abs()
        })
        .collect();

    let min_weight = raw
        .terms
        .iter()
        .map(|t| t.weight)
        .fold(f64::INFINITY, f64::min);
    let weight_sum: f64 = raw.terms.iter().map(|t| t.weight).sum();
    let weight_sum_error = (weight_sum - 1.0).abs();

    let reconstruction_error = if shape_ok {
        let mix: M4 = raw
            .terms
            .iter()
            .map(|t| {
                let v = parse_amplitudes(&t.amplitudes).expect("shape checked");
                PureState { amplitudes: v }.projector() * cr(t.weight)
            })
            .sum();
        match &raw.matrix {
            Some(pairs) => (parse_matrix(pairs).expect("shape checked") - mix).norm(),
            None => 0.0,
        }
    } else {
        0.0
    };

    let norms_ok = raw
        .terms
        .iter()
        .zip(&term_norm_errors)
        .all(|(t, err)| t.weight == 0.0 || *err <= NORM_TOL);

    let pass = shape_ok
        && weight_sum_error <= WEIGHT_SUM_TOL
        && min_weight >= 0.0
        && norms_ok
        && reconstruction_error <= RECONSTRUCTION_TOL
        && weight_sum.is_finite()
        && reconstruction_error.is_finite();

    DecompositionReport {
        shape_ok,
        weight_sum_error,
        min_weight: if min_weight.is_finite() {
            min_weight
        } else {
            0.0
        },
        term_norm_errors,
        reconstruction_error,
        pass,
    }
}

fn parse_amplitudes(pairs: &[[f64; 2]]) -> Result<Vector4<C64>> {
    if pairs.len() != 4 {
        return Err(Error::BadShape {
            what: "amplitude vector",
            expected: 4,
            got: pairs.len(),
        });
    }
    Ok(Vector4::from_iterator(
        pairs.iter().map(|[re, im]| c(*re, *im)),
    ))
}

fn parse_matrix(pairs: &[[f64; 2]]) -> Result<M4> {
    if pairs.len() != 16 {
        return Err(Error::BadShape {
            what: "matrix",
            expected: 16,
            got: pairs.len(),
        });
    }
    let entries: Vec<C64> = pairs.iter().map(|[re, im]| c(*re, *im)).collect();
    Ok(M4::from_row_slice(&entries))
}

fn matrix_to_pairs(m: &M4) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

/// ϱm(γ), entangled for every γ ∈ (0, 1] and of maximal entanglement among
/// states with its purity.
pub fn mems_state(gamma: f64) -> Result<QubitPairState> {
    check_unit_interval("gamma", gamma)?;
    let g = mems_g(gamma);
    let mut m = M4::zeros();
    m[(0, 0)] = cr(g);
    m[(1, 1)] = cr(1.0 - 2.0 * g);
    m[(3, 3)] = cr(g);
    m[(0, 3)] = cr(gamma / 2.0);
    m[(3, 0)] = cr(gamma / 2.0);
    QubitPairState::new(m)
}

/// The three-term mixture (g + γ/2)Φ⁺ + (g − γ/2)Φ⁻ + (1 − 2g)|01⟩⟨01| of ϱm(γ).
pub fn mems_decomposition(gamma: f64) -> Result<Decomposition> {
    let state = mems_state(gamma)?;
    let g = mems_g(gamma);
    Decomposition::new(
        state,
        vec![
            (g + gamma / 2.0, PureState::phi_plus()),
            (g - gamma / 2.0, PureState::phi_minus()),
            (1.0 - 2.0 * g, PureState::basis(0, 1)),
        ],
    )
}

fn mems_g(gamma: f64) -> f64 {
    if gamma >= 2.0 / 3.0 {
        gamma / 2.0
    } else {
        1.0 / 3.0
    }
}

/// ϱw(γ, ξ) = (1 − γ)/4 · 𝟙 + γ |Ψnon⟩⟨Ψnon|.
pub fn werner_state(gamma: f64, xi: f64) -> Result<QubitPairState> {
    check_unit_interval("gamma", gamma)?;
    require_finite("xi", xi)?;
    let mut m = PureState::nonmax_entangled(xi).projector() * cr(gamma);
    for i in 0..4 {
        m[(i, i)] += cr((1.0 - gamma) / 4.0);
    }
    QubitPairState::new(m)
}

/// The five-term mixture of ϱw(γ, ξ): (1 − γ)/4 on each Bell state plus γ on |Ψnon⟩.
pub fn werner_decomposition(gamma: f64, xi: f64) -> Result<Decomposition> {
    let state = werner_state(gamma, xi)?;
    let q = (1.0 - gamma) / 4.0;
    Decomposition::new(
        state,
        vec![
            (q, PureState::phi_plus()),
            (q, PureState::phi_minus()),
            (q, PureState::psi_plus()),
            (q, PureState::psi_minus()),
            (gamma, PureState::nonmax_entangled(xi)),
        ],
    )
}

/// ϱs(x): separable for every |x| ≤ 1/4.
pub fn separable_state(x: f64) -> Result<QubitPairState> {
    if x.is_nan() || x.abs() > 0.25 {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            min: -0.25,
            max: 0.25,
        });
    }
    let mut m = M4::zeros();
    for i in 0..4 {
        m[(i, i)] = cr(0.25);
    }
    m[(0, 3)] = cr(x);
    m[(3, 0)] = cr(x);
    m[(1, 2)] = cr(x);
    m[(2, 1)] = cr(x);
    QubitPairState::new(m)
}

/// Product-state decomposition of ϱs(x) over (|0⟩ ± |1⟩)/√2 pairs.
pub fn product_decomposition(x: f64) -> Result<Decomposition> {
    let state = separable_state(x)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = Vector2::new(cr(h), cr(h));
    let minus = Vector2::new(cr(h), cr(-h));
    Decomposition::new(
        state,
        vec![
            (0.25 + x, PureState::product(&plus, &plus)?),
            (0.25 - x, PureState::product(&plus, &minus)?),
            (0.25 - x, PureState::product(&minus, &plus)?),
            (0.25 + x, PureState::product(&minus, &minus)?),
        ],
    )
}

/// Bell-state decomposition of the same ϱs(x): weights 1/4 + x on Φ⁺, Ψ⁺ and
/// 1/4 − x on Φ⁻, Ψ⁻.
pub fn bell_decomposition(x: f64) -> Result<Decomposition> {
    let state = separable_state(x)?;
    Decomposition::new(
        state,
        vec![
            (0.25 + x, PureState::phi_plus()),
            (0.25 + x, PureState::psi_plus()),
            (0.25 - x, PureState::phi_minus()),
            (0.25 - x, PureState::psi_minus()),
        ],
    )
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(())
}

/// Wootters concurrence C(ϱ) = max(0, λ₁ − λ₂ − λ₃ − λ₄).
///
/// The λᵢ are the decreasing square roots of the eigenvalues of ϱϱ̃ with
/// ϱ̃ = (σy ⊗ σy) ϱ* (σy ⊗ σy). Writing ϱ = L L†, the λᵢ equal the
/// singular values of the complex symmetric matrix τ = Lᵀ (σy ⊗ σy) L,
/// since τ̄τ is similar to ϱϱ̃. Taking singular values of τ directly
/// avoids squaring, so λᵢ near zero keep full precision.
pub fn concurrence(state: &QubitPairState) -> f64 {
    let rho = state.matrix();
    let sy = Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0));
    let flip = sy.kronecker(&sy);
    let l = psd_factor(rho);
    let tau = l.transpose() * flip * l;
    let svd = tau.svd(false, false);
    let mut lam = [
        svd.singular_values[0],
        svd.singular_values[1],
        svd.singular_values[2],
        svd.singular_values[3],
    ];
    lam.sort_unstable_by(|x, y| y.total_cmp(x));
    (lam[0] - lam[1] - lam[2] - lam[3]).max(0.0)
}

impl Serialize for QubitPairState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Dto {
            matrix: Vec<[f64; 2]>,
        }
        Dto {
            matrix: matrix_to_pairs(&self.matrix),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QubitPairState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Dto {
            matrix: Vec<[f64; 2]>,
        }
        let dto = Dto::deserialize(deserializer)?;
        let m = parse_matrix(&dto.matrix).map_err(D::Error::custom)?;
        Self::new(m).map_err(D::Error::custom)
    }
}

impl Serialize for Decomposition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.raw().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Decomposition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        RawDecomposition::deserialize(deserializer)?
            .into_decomposition()
            .map_err(D::Error::custom)
    }
}
