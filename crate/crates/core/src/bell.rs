//! Observables, correlations, and the Bell-type inequality with a
//! decomposition-dependent tail.
//!
//! Four ±1-valued observables enter: a and d act on the first qubit, b and c
//! on the second. For a decomposition ϱ = Σᵢ pᵢ |ψᵢ⟩⟨ψᵢ| the evaluated
//! quantity is
//!
//! ⟨B⟩ = |⟨ab⟩ − ⟨ac⟩| + Σᵢ pᵢ |⟨db⟩ᵢ + ⟨dc⟩ᵢ| ≤ 2,
//!
//! with ⟨··⟩ the full-state correlation and ⟨··⟩ᵢ the correlation in term i.
//! The left block never depends on the decomposition; the tail does, which is
//! what makes the bound decomposition-sensitive. CHSH helpers are included for
//! comparison: `chsh_value` for one setting choice and `chsh_max` for the
//! closed-form maximum 2√(m₁ + m₂) over all settings.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{Matrix2, Matrix3, Matrix4, Vector4};
use num_complex::Complex;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qstate::{Decomposition, PureState, QubitPairState};

type C64 = Complex<f64>;
type M4 = Matrix4<C64>;

/// Local realistic bound on ⟨B⟩, independent of the decomposition.
pub const CLASSICAL_BOUND: f64 = 2.0;
/// Slack added to the bound before declaring a violation.
pub const VIOLATION_SLACK: f64 = 1e-12;
/// Largest tolerated gap between full-state and summed per-term correlations.
pub const CONSISTENCY_TOL: f64 = 1e-10;

/// A ±1-valued single-qubit observable.
///
/// Plane observables cos θ σz + sin θ σx live in the x–z plane and are what
/// the sweeps and the default optimizer use; Bloch observables n⃗ · σ⃗ cover
/// the whole sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable {
    repr: Repr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Repr {
    Plane { theta: f64 },
    Bloch { n: [f64; 3] },
}

impl Observable {
    /// cos θ σz + sin θ σx
    pub fn plane(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::NotFinite {
                name: "theta",
                value: theta,
            });
        }
        Ok(Self {
            repr: Repr::Plane { theta },
        })
    }

    /// n⃗ · σ⃗ for a unit vector n⃗ = (nx, ny, nz).
    pub fn bloch(n: [f64; 3]) -> Result<Self> {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let err = (norm - 1.0).abs();
        if err.is_nan() || err > 1e-12 {
            return Err(Error::NotUnitBloch(norm));
        }
        Ok(Self {
            repr: Repr::Bloch { n },
        })
    }

    /// Bloch observable from polar angle (from +z) and azimuth (from +x).
    pub fn bloch_angles(polar: f64, azimuth: f64) -> Result<Self> {
        if !(polar.is_finite() && azimuth.is_finite()) {
            return Err(Error::NotFinite {
                name: "bloch angle",
                value: if polar.is_finite() { azimuth } else { polar },
            });
        }
        Self::bloch([
            polar.sin() * azimuth.cos(),
            polar.sin() * azimuth.sin(),
            polar.cos(),
        ])
    }

    pub fn is_plane(&self) -> bool {
        matches!(self.repr, Repr::Plane { .. })
    }

    /// The plane angle, if this is a plane observable.
    pub fn theta(&self) -> Option<f64> {
        match self.repr {
            Repr::Plane { theta } => Some(theta),
            Repr::Bloch { .. } => None,
        }
    }

    /// The Bloch vector; plane observables map to (sin θ, 0, cos θ).
    pub fn bloch_vector(&self) -> [f64; 3] {
        match self.repr {
            Repr::Plane { theta } => [theta.sin(), 0.0, theta.cos()],
            Repr::Bloch { n } => n,
        }
    }

    /// 2×2 matrix representation; Hermitian with eigenvalues ±1.
    pub fn matrix(&self) -> Matrix2<C64> {
        let [nx, ny, nz] = self.bloch_vector();
        Matrix2::new(
            Complex::new(nz, 0.0),
            Complex::new(nx, -ny),
            Complex::new(nx, ny),
            Complex::new(-nz, 0.0),
        )
    }
}

impl Serialize for Observable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.repr {
            Repr::Plane { theta } => {
                let mut s = serializer.serialize_struct("Observable", 2)?;
                s.serialize_field("mode", "plane")?;
                s.serialize_field("theta", &theta)?;
                s.end()
            }
            Repr::Bloch { n } => {
                let mut s = serializer.serialize_struct("Observable", 2)?;
                s.serialize_field("mode", "bloch")?;
                s.serialize_field("n", &n)?;
                s.end()
            }
        }
    }
}

/// The four settings of one inequality evaluation: a, d on the first qubit,
/// b, c on the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementSettings {
    pub a: Observable,
    pub b: Observable,
    pub c: Observable,
    pub d: Observable,
}

impl MeasurementSettings {
    pub fn new(a: Observable, b: Observable, c: Observable, d: Observable) -> Self {
        Self { a, b, c, d }
    }

    /// All four observables in the x–z plane, given as angles in radians.
    pub fn plane_angles(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Ok(Self {
            a: Observable::plane(a)?,
            b: Observable::plane(b)?,
            c: Observable::plane(c)?,
            d: Observable::plane(d)?,
        })
    }
}

fn joint(first: &Observable, second: &Observable) -> M4 {
    first.matrix().kronecker(&second.matrix())
}

fn real_trace_product(rho: &M4, m: &M4) -> f64 {
    let mut z = Complex::new(0.0, 0.0);
    for i in 0..4 {
        for k in 0..4 {
            z += rho[(i, k)] * m[(k, i)];
        }
    }
    debug_assert!(
        z.im.abs() <= 1e-9,
        "correlation has imaginary part {}",
        z.im
    );
    z.re
}

fn real_expectation(v: &Vector4<C64>, m: &M4) -> f64 {
    v.dotc(&(m * v)).re
}

/// ⟨A ⊗ B⟩ = tr[ϱ (A ⊗ B)], first observable on the first qubit.
pub fn correlation(state: &QubitPairState, first: &Observable, second: &Observable) -> f64 {
    real_trace_product(state.matrix(), &joint(first, second))
}

/// ⟨ψ| A ⊗ B |ψ⟩ for a pure state.
pub fn correlation_pure(state: &PureState, first: &Observable, second: &Observable) -> f64 {
    real_expectation(state.amplitudes(), &joint(first, second))
}

/// One tail term: pᵢ and |⟨db⟩ᵢ + ⟨dc⟩ᵢ|.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PerTerm {
    pub weight: f64,
    pub magnitude: f64,
}

/// Outcome of one inequality evaluation.
///
/// `b_value = lhs + Σᵢ weightᵢ · magnitudeᵢ` holds to 1e−12 by construction,
/// and `violated` means `b_value > bound + 1e−12`.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    /// |⟨ab⟩ − ⟨ac⟩|, computed from the full state.
    pub lhs: f64,
    pub bound: f64,
    pub b_value: f64,
    pub violated: bool,
    pub per_term: Vec<PerTerm>,
    pub settings: MeasurementSettings,
}

/// Evaluates ⟨B⟩ for one decomposition and one choice of settings.
///
/// The |⟨ab⟩ − ⟨ac⟩| block is computed twice, once from the source density
/// matrix and once as the weighted sum over terms; the two routes must agree
/// to [`CONSISTENCY_TOL`] or this panics, since a disagreement means the
/// decomposition does not describe the state it claims to.
pub fn evaluate(decomposition: &Decomposition, settings: &MeasurementSettings) -> InequalityReport {
    let jab = joint(&settings.a, &settings.b);
    let jac = joint(&settings.a, &settings.c);
    let jdb = joint(&settings.d, &settings.b);
    let jdc = joint(&settings.d, &settings.c);

    let rho = decomposition.source().matrix();
    let ab = real_trace_product(rho, &jab);
    let ac = real_trace_product(rho, &jac);

    let mut ab_summed = 0.0;
    let mut ac_summed = 0.0;
    let mut tail = 0.0;
    let mut per_term = Vec::with_capacity(decomposition.len());
    for (weight, psi) in decomposition.terms() {
        let v = psi.amplitudes();
        ab_summed += weight * real_expectation(v, &jab);
        ac_summed += weight * real_expectation(v, &jac);
        let magnitude = (real_expectation(v, &jdb) + real_expectation(v, &jdc)).abs();
        tail += weight * magnitude;
        per_term.push(PerTerm {
            weight: *weight,
            magnitude,
        });
    }

    assert!(
        (ab - ab_summed).abs() <= CONSISTENCY_TOL && (ac - ac_summed).abs() <= CONSISTENCY_TOL,
        "full-state and per-term correlations disagree (ab: {ab} vs {ab_summed}, ac: {ac} vs {ac_summed})"
    );

    let lhs = (ab - ac).abs();
    let b_value = lhs + tail;
    InequalityReport {
        lhs,
        bound: CLASSICAL_BOUND,
        b_value,
        violated: b_value > CLASSICAL_BOUND + VIOLATION_SLACK,
        per_term,
        settings: *settings,
    }
}

/// A term of the perfectly-correlated group in the split form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorrelatedTerm {
    /// Index into the decomposition's term list.
    pub index: usize,
    pub weight: f64,
    /// ⟨bb⟩ⱼ, the same-setting correlation; ±1 signals perfect (anti)correlation.
    pub bb: f64,
    /// ⟨bc⟩ⱼ
    pub bc: f64,
    /// ⟨bb⟩ⱼ − ⟨bc⟩ⱼ
    pub bracket: f64,
    /// +1 if the bracket is positive, −1 otherwise.
    pub sign: i32,
}

/// A term of the remainder group in the split form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RemainderTerm {
    pub index: usize,
    pub weight: f64,
    pub ab: f64,
    pub ac: f64,
}

/// Outcome of the specialized d = c evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct SplitReport {
    /// Marks the rearranged form, whose usefulness is still being explored.
    pub experimental: bool,
    /// |⟨ab⟩ − ⟨ac⟩| from the full state.
    pub lhs: f64,
    /// |Σ_remainder pᵢ(⟨ab⟩ᵢ − ⟨ac⟩ᵢ)| + Σ_correlated pⱼ · signⱼ · (⟨bb⟩ⱼ − ⟨bc⟩ⱼ).
    pub rhs: f64,
    pub violated: bool,
    pub correlated: Vec<CorrelatedTerm>,
    pub remainder: Vec<RemainderTerm>,
    pub split_index: usize,
    pub settings: MeasurementSettings,
}

/// Evaluates the rearranged inequality that applies when d = c.
///
/// The first `split_index` entries of `ordering` pick the terms treated as the
/// perfectly-correlated group; the rest are absorbed into the right-hand side
/// as a correlation difference. With a single term this reduces to the
/// original two-setting inequality |⟨ab⟩ − ⟨ac⟩| ≤ 1 + ⟨bc⟩ for the singlet.
pub fn evaluate_split(
    decomposition: &Decomposition,
    settings: &MeasurementSettings,
    split_index: usize,
    ordering: &[usize],
) -> Result<SplitReport> {
    if settings.d != settings.c {
        return Err(Error::SplitNeedsEqualSettings);
    }
    let n = decomposition.len();
    if !(1..=n).contains(&split_index) {
        return Err(Error::BadSplitIndex {
            index: split_index,
            terms: n,
        });
    }
    let mut seen = vec![false; n];
    for &i in ordering {
        if i >= n || seen[i] {
            return Err(Error::BadOrdering(n));
        }
        seen[i] = true;
    }
    if ordering.len() != n {
        return Err(Error::BadOrdering(n));
    }

    let jab = joint(&settings.a, &settings.b);
    let jac = joint(&settings.a, &settings.c);
    let jbb = joint(&settings.b, &settings.b);
    let jbc = joint(&settings.b, &settings.c);

    let rho = decomposition.source().matrix();
    let lhs = (real_trace_product(rho, &jab) - real_trace_product(rho, &jac)).abs();

    let terms = decomposition.terms();
    let mut correlated = Vec::with_capacity(split_index);
    let mut rhs_correlated = 0.0;
    for &index in &ordering[..split_index] {
        let (weight, psi) = &terms[index];
        let v = psi.amplitudes();
        let bb = real_expectation(v, &jbb);
        let bc = real_expectation(v, &jbc);
        let bracket = bb - bc;
        let sign = if bracket > 0.0 { 1 } else { -1 };
        rhs_correlated += weight * f64::from(sign) * bracket;
        correlated.push(CorrelatedTerm {
            index,
            weight: *weight,
            bb,
            bc,
            bracket,
            sign,
        });
    }

    let mut remainder = Vec::with_capacity(n - split_index);
    let mut rhs_remainder = 0.0;
    for &index in &ordering[split_index..] {
        let (weight, psi) = &terms[index];
        let v = psi.amplitudes();
        let ab = real_expectation(v, &jab);
        let ac = real_expectation(v, &jac);
        rhs_remainder += weight * (ab - ac);
        remainder.push(RemainderTerm {
            index,
            weight: *weight,
            ab,
            ac,
        });
    }

    let rhs = rhs_remainder.abs() + rhs_correlated;
    Ok(SplitReport {
        experimental: true,
        lhs,
        rhs,
        violated: lhs > rhs + VIOLATION_SLACK,
        correlated,
        remainder,
        split_index,
        settings: *settings,
    })
}

/// ⟨ab⟩ + ⟨ac⟩ + ⟨db⟩ − ⟨dc⟩, the CHSH combination for these settings.
pub fn chsh_value(state: &QubitPairState, settings: &MeasurementSettings) -> f64 {
    correlation(state, &settings.a, &settings.b)
        + correlation(state, &settings.a, &settings.c)
        + correlation(state, &settings.d, &settings.b)
        - correlation(state, &settings.d, &settings.c)
}

/// The 3×3 correlation matrix T with T(u, v) = tr[ϱ σᵤ ⊗ σᵥ], u, v ∈ {x, y, z}.
pub fn correlation_matrix(state: &QubitPairState) -> Matrix3<f64> {
    let paulis = [
        Matrix2::new(
            Complex::new(0.0, 0.0),
            Complex::new(1.0, 0.0),
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 0.0),
        ),
        Matrix2::new(
            Complex::new(0.0, 0.0),
            Complex::new(0.0, -1.0),
            Complex::new(0.0, 1.0),
            Complex::new(0.0, 0.0),
        ),
        Matrix2::new(
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(-1.0, 0.0),
        ),
    ];
    let rho = state.matrix();
    Matrix3::from_fn(|u, v| real_trace_product(rho, &paulis[u].kronecker(&paulis[v])))
}

/// The maximum CHSH value 2√(m₁ + m₂) over all observables, where m₁, m₂ are
/// the two largest eigenvalues of TᵀT.
///
/// Any state with chsh_max ≤ 2 admits a local model for the CHSH combination,
/// yet may still push ⟨B⟩ past 2 for a suitable decomposition. Restricting
/// both parties to the x–z plane can raise the threshold further; for ϱm(γ)
/// the in-plane CHSH maximum 2√(γ² + (2γ − 1)²) exceeds 2 only for γ > 0.8,
/// while ⟨B⟩ > 2 for every γ > 0. For ϱw(γ, π/4) the closed form is 2√2·γ,
/// a violation only past γ = 1/√2 (concurrence (3/√2 − 1)/2 ≈ 0.56, in the
/// same ballpark as the often-quoted concurrence cutoff √(1/3) ≈ 0.58),
/// while again ⟨B⟩ > 2 for every γ > 0.
pub fn chsh_max(state: &QubitPairState) -> f64 {
    let t = correlation_matrix(state);
    let es = SymmetricEigen::new(t.transpose() * t);
    let mut eigs = [es.eigenvalues[0], es.eigenvalues[1], es.eigenvalues[2]];
    eigs.sort_by(f64::total_cmp);
    2.0 * (eigs[1].max(0.0) + eigs[2].max(0.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    const TOL: f64 = 1e-12;

    fn plane(theta: f64) -> Observable {
        Observable::plane(theta).unwrap()
    }

    fn pure(psi: &PureState) -> QubitPairState {
        QubitPairState::from_pure(psi)
    }

    #[test]
    fn bell_state_correlations_match_closed_forms() {
        for i in 0..12 {
            for j in 0..12 {
                let t1 = i as f64 * PI / 6.0;
                let t2 = j as f64 * PI / 6.0 + 0.1;
                let (o1, o2) = (plane(t1), plane(t2));
                let cases = [
                    (PureState::phi_plus(), (t1 - t2).cos()),
                    (PureState::phi_minus(), (t1 + t2).cos()),
                    (PureState::psi_plus(), -(t1 + t2).cos()),
                    (PureState::psi_minus(), -(t1 - t2).cos()),
                    (PureState::basis(0, 1), -t1.cos() * t2.cos()),
                ];
                for (psi, expect) in cases {
                    assert_abs_diff_eq!(correlation_pure(&psi, &o1, &o2), expect, epsilon = TOL);
                    assert_abs_diff_eq!(correlation(&pure(&psi), &o1, &o2), expect, epsilon = TOL);
                }
            }
        }
    }

    #[test]
    fn werner_and_separable_correlations_match_closed_forms() {
        let w = qstate::werner_state(0.7, FRAC_PI_4).unwrap();
        let s = qstate::separable_state(0.2).unwrap();
        for i in 0..10 {
            let t1 = i as f64 * 0.63;
            let t2 = 1.9 - i as f64 * 0.21;
            let (o1, o2) = (plane(t1), plane(t2));
            assert_abs_diff_eq!(
                correlation(&w, &o1, &o2),
                0.7 * (t1 - t2).cos(),
                epsilon = TOL
            );
            assert_abs_diff_eq!(
                correlation(&s, &o1, &o2),
                4.0 * 0.2 * t1.sin() * t2.sin(),
                epsilon = TOL
            );
        }
    }

    #[test]
    fn plane_and_bloch_representations_agree() {
        let state = qstate::mems_state(0.8).unwrap();
        for i in 0..8 {
            let t1 = i as f64 * 0.79;
            let t2 = 2.3 - i as f64 * 0.41;
            let b1 = Observable::bloch_angles(t1, 0.0).unwrap();
            let b2 = Observable::bloch_angles(t2, 0.0).unwrap();
            assert_abs_diff_eq!(
                correlation(&state, &plane(t1), &plane(t2)),
                correlation(&state, &b1, &b2),
                epsilon = TOL
            );
        }
    }

    #[test]
    fn bloch_vectors_must_be_unit() {
        assert!(Observable::bloch([0.0, 0.0, 0.9]).is_err());
        assert!(Observable::bloch([1.0, 1.0, 1.0]).is_err());
        assert!(Observable::plane(f64::NAN).is_err());
        assert!(Observable::bloch_angles(0.3, 0.7).is_ok());
    }

    #[test]
    fn maximally_entangled_term_reaches_two_sqrt_two() {
        let d = Decomposition::from_terms(vec![(1.0, PureState::phi_plus())]).unwrap();
        let settings =
            MeasurementSettings::plane_angles(FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4, 0.0).unwrap();
        let report = evaluate(&d, &settings);
        assert_abs_diff_eq!(report.lhs, SQRT_2, epsilon = TOL);
        assert_abs_diff_eq!(report.b_value, 2.0 * SQRT_2, epsilon = TOL);
        assert!(report.violated);
    }

    #[test]
    fn mems_witness_settings_give_closed_form_value() {
        // a = π/2, d = 0, b = ε, c = −ε: ⟨B⟩ = 2γ sin ε + 2 cos ε, maximal
        // at tan ε = γ with value 2√(1 + γ²).
        for k in 1..=10 {
            let gamma = k as f64 / 10.0;
            let d = qstate::mems_decomposition(gamma).unwrap();
            let eps = gamma.atan();
            let settings = MeasurementSettings::plane_angles(FRAC_PI_2, eps, -eps, 0.0).unwrap();
            let report = evaluate(&d, &settings);
            let expect = 2.0 * (1.0 + gamma * gamma).sqrt();
            assert_abs_diff_eq!(report.b_value, expect, epsilon = 1e-12);
            assert!(report.violated);

            let w = qstate::werner_decomposition(gamma, FRAC_PI_4).unwrap();
            let report = evaluate(&w, &settings);
            assert_abs_diff_eq!(report.b_value, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn bell_decomposition_witness_settings_give_closed_form_value() {
        // a = π/2, b = π/2 − ε, c = −π/2 + ε, d = 0: ⟨B⟩ = 8|x| cos ε + 2 sin ε,
        // maximal at √(4 + 64x²).
        for k in 0..=10 {
            let x = -0.25 + k as f64 * 0.05;
            let d = qstate::bell_decomposition(x).unwrap();
            let eps = if x == 0.0 {
                FRAC_PI_2
            } else {
                (1.0 / (4.0 * x.abs())).atan()
            };
            let settings =
                MeasurementSettings::plane_angles(FRAC_PI_2, FRAC_PI_2 - eps, eps - FRAC_PI_2, 0.0)
                    .unwrap();
            let report = evaluate(&d, &settings);
            let expect = (4.0 + 64.0 * x * x).sqrt();
            assert_abs_diff_eq!(report.b_value, expect, epsilon = 1e-12);
            assert_eq!(report.violated, x != 0.0);
        }
    }

    #[test]
    fn report_is_internally_consistent() {
        let d = qstate::mems_decomposition(0.45).unwrap();
        let settings = MeasurementSettings::plane_angles(1.3, 0.4, -0.9, 5.2).unwrap();
        let report = evaluate(&d, &settings);
        let tail: f64 = report.per_term.iter().map(|t| t.weight * t.magnitude).sum();
        assert_abs_diff_eq!(report.b_value, report.lhs + tail, epsilon = TOL);
        assert_eq!(report.bound, CLASSICAL_BOUND);
        assert_eq!(report.per_term.len(), d.len());
    }

    #[test]
    fn product_decomposition_never_violates() {
        for k in 0..=10 {
            let x = -0.25 + k as f64 * 0.05;
            let d = qstate::product_decomposition(x).unwrap();
            for i in 0..40 {
                let s = MeasurementSettings::plane_angles(
                    i as f64 * 0.7,
                    1.3 + i as f64 * 0.3,
                    2.6 - i as f64 * 0.5,
                    0.9 + i as f64 * 0.11,
                )
                .unwrap();
                let report = evaluate(&d, &s);
                assert!(report.b_value <= CLASSICAL_BOUND + 1e-12);
                assert!(!report.violated);
            }
        }
    }

    #[test]
    fn split_form_reduces_to_two_setting_inequality_for_singlet() {
        let d = Decomposition::from_terms(vec![(1.0, PureState::psi_minus())]).unwrap();
        // classic violating triple: a = 0, b = π/3, c = 2π/3
        let (b, c) = (PI / 3.0, 2.0 * PI / 3.0);
        let settings = MeasurementSettings::plane_angles(0.0, b, c, c).unwrap();
        let report = evaluate_split(&d, &settings, 1, &[0]).unwrap();
        assert_abs_diff_eq!(report.lhs, 1.0, epsilon = TOL);
        assert_abs_diff_eq!(report.rhs, 1.0 - (b - c).cos(), epsilon = TOL);
        assert!(report.violated);
        assert_abs_diff_eq!(report.correlated[0].bb, -1.0, epsilon = TOL);
        assert_eq!(report.correlated[0].sign, -1);
        assert!(report.experimental);

        // non-violating triple: b and c symmetric about a gives lhs = 0
        let settings = MeasurementSettings::plane_angles(FRAC_PI_2, 0.0, PI, PI).unwrap();
        let report = evaluate_split(&d, &settings, 1, &[0]).unwrap();
        assert_abs_diff_eq!(report.lhs, 0.0, epsilon = TOL);
        assert_abs_diff_eq!(report.rhs, 2.0, epsilon = TOL);
        assert!(!report.violated);
    }

    #[test]
    fn split_form_groups_terms_as_ordered() {
        let d = qstate::mems_decomposition(0.5).unwrap();
        let settings = MeasurementSettings::plane_angles(0.3, 1.1, 2.0, 2.0).unwrap();
        let report = evaluate_split(&d, &settings, 2, &[2, 0, 1]).unwrap();
        assert_eq!(report.correlated.len(), 2);
        assert_eq!(report.remainder.len(), 1);
        assert_eq!(report.correlated[0].index, 2);
        assert_eq!(report.remainder[0].index, 1);
        let rc: f64 = report
            .correlated
            .iter()
            .map(|t| t.weight * f64::from(t.sign) * t.bracket)
            .sum();
        let rr: f64 = report
            .remainder
            .iter()
            .map(|t| t.weight * (t.ab - t.ac))
            .sum();
        assert_abs_diff_eq!(report.rhs, rr.abs() + rc, epsilon = TOL);
    }

    #[test]
    fn split_form_rejects_bad_arguments() {
        let d = qstate::mems_decomposition(0.5).unwrap();
        let unequal = MeasurementSettings::plane_angles(0.3, 1.1, 2.0, 1.9).unwrap();
        assert!(matches!(
            evaluate_split(&d, &unequal, 1, &[0, 1, 2]),
            Err(Error::SplitNeedsEqualSettings)
        ));
        let settings = MeasurementSettings::plane_angles(0.3, 1.1, 2.0, 2.0).unwrap();
        assert!(matches!(
            evaluate_split(&d, &settings, 0, &[0, 1, 2]),
            Err(Error::BadSplitIndex { .. })
        ));
        assert!(matches!(
            evaluate_split(&d, &settings, 4, &[0, 1, 2]),
            Err(Error::BadSplitIndex { .. })
        ));
        assert!(matches!(
            evaluate_split(&d, &settings, 2, &[0, 0, 1]),
            Err(Error::BadOrdering(3))
        ));
        assert!(matches!(
            evaluate_split(&d, &settings, 2, &[0, 1]),
            Err(Error::BadOrdering(3))
        ));
    }

    #[test]
    fn chsh_value_reaches_tsirelson_on_phi_plus() {
        let state = pure(&PureState::phi_plus());
        let settings =
            MeasurementSettings::plane_angles(0.0, FRAC_PI_4, -FRAC_PI_4, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(chsh_value(&state, &settings), 2.0 * SQRT_2, epsilon = TOL);
    }

    #[test]
    fn chsh_max_matches_known_values() {
        assert_abs_diff_eq!(
            chsh_max(&pure(&PureState::phi_plus())),
            2.0 * SQRT_2,
            epsilon = 1e-9
        );
        for k in 0..=10 {
            let gamma = k as f64 / 10.0;
            let w = qstate::werner_state(gamma, FRAC_PI_4).unwrap();
            assert_abs_diff_eq!(chsh_max(&w), 2.0 * SQRT_2 * gamma, epsilon = 1e-9);
        }
        for k in 0..=10 {
            let x = -0.25 + k as f64 * 0.05;
            let s = qstate::separable_state(x).unwrap();
            assert_abs_diff_eq!(chsh_max(&s), 8.0 * x.abs(), epsilon = 1e-9);
            assert!(chsh_max(&s) <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn chsh_max_dominates_chsh_value_on_sampled_settings() {
        let state = qstate::mems_state(0.77).unwrap();
        let bound = chsh_max(&state);
        for i in 0..200 {
            let t = i as f64;
            let settings = MeasurementSettings::new(
                Observable::bloch_angles(t * 0.17, t * 0.83).unwrap(),
                Observable::bloch_angles(1.1 + t * 0.29, t * 0.41).unwrap(),
                plane(t * 0.53),
                plane(2.9 - t * 0.37),
            );
            assert!(chsh_value(&state, &settings) <= bound + 1e-9);
        }
    }

    #[test]
    fn observables_serialize_with_mode_tags() {
        let text = serde_json::to_string(&plane(0.5)).unwrap();
        assert!(text.contains("\"mode\":\"plane\"") && text.contains("\"theta\":0.5"));
        let text = serde_json::to_string(&Observable::bloch([0.0, 1.0, 0.0]).unwrap()).unwrap();
        assert!(text.contains("\"mode\":\"bloch\"") && text.contains("\"n\":[0.0,1.0,0.0]"));
    }

    proptest! {
        #[test]
        fn correlations_stay_in_physical_range(
            gamma in 0.0f64..=1.0,
            xi in 0.0f64..6.3,
            t1 in -10.0f64..10.0,
            t2 in -10.0f64..10.0,
            polar in 0.0f64..PI,
            azimuth in 0.0f64..(2.0 * PI),
        ) {
            let state = qstate::werner_state(gamma, xi).unwrap();
            let o1 = plane(t1);
            let o2 = Observable::bloch_angles(polar, azimuth).unwrap();
            let o3 = plane(t2);
            for (x, y) in [(&o1, &o2), (&o2, &o1), (&o1, &o3), (&o3, &o1), (&o2, &o2)] {
                let v = correlation(&state, x, y);
                prop_assert!(v.abs() <= 1.0 + 1e-12);
            }
            let psi = PureState::nonmax_entangled(xi);
            prop_assert!(correlation_pure(&psi, &o1, &o2).abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn product_terms_respect_the_classical_bound(
            x in -0.25f64..=0.25,
            a in 0.0f64..(2.0 * PI),
            b in 0.0f64..(2.0 * PI),
            c in 0.0f64..(2.0 * PI),
            d in 0.0f64..(2.0 * PI),
        ) {
            let decomposition = qstate::product_decomposition(x).unwrap();
            let settings = MeasurementSettings::plane_angles(a, b, c, d).unwrap();
            let report = evaluate(&decomposition, &settings);
            prop_assert!(report.b_value <= CLASSICAL_BOUND + 1e-9);
        }

        #[test]
        fn weighted_term_correlations_reproduce_state_correlations(
            gamma in 0.0f64..=1.0,
            xi in 0.0f64..6.3,
            t1 in -10.0f64..10.0,
            t2 in -10.0f64..10.0,
        ) {
            let decomposition = qstate::werner_decomposition(gamma, xi).unwrap();
            let o1 = plane(t1);
            let o2 = plane(t2);
            let summed: f64 = decomposition
                .terms()
                .iter()
                .map(|(w, psi)| w * correlation_pure(psi, &o1, &o2))
                .sum();
            let full = correlation(decomposition.source(), &o1, &o2);
            prop_assert!((summed - full).abs() <= CONSISTENCY_TOL);
        }
    }
}
