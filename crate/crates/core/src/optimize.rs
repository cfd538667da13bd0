//! Deterministic maximization of ⟨B⟩ over measurement settings.
//!
//! Two stages: an exhaustive coarse grid over all settings, then Nelder–Mead
//! refinement started from the best grid points. Initial simplex jitter comes
//! from a counter-seeded stream cipher, chunked scans merge in fixed order,
//! and ties break toward lexicographically smaller angle vectors, so a given
//! configuration always produces the same result regardless of thread count.
//! The best coarse point stays in the candidate set, which guarantees the
//! reported maximum is never below any grid value examined.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bell::{self, InequalityReport, MeasurementSettings, Observable};
use crate::error::{Error, Result};
use crate::qstate::Decomposition;

/// Which observable family the search runs over.
///
/// Plane mode searches 4 angles; bloch mode searches 8 (polar and azimuth per
/// observable) and subsumes plane mode at higher cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableMode {
    Plane,
    Bloch,
}

/// Search parameters; [`OptimizerConfig::plane`] and [`OptimizerConfig::bloch`]
/// give the defaults for each mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Points per axis of the exhaustive stage (4 axes in plane mode, 8 in bloch).
    pub coarse_grid_points_per_axis: usize,
    /// How many of the best grid points start a refinement.
    pub refine_seeds: usize,
    /// Simplex iteration budget per refinement; 0 skips refinement entirely.
    pub max_refine_iterations: usize,
    /// Simplex value spread at which a refinement counts as converged.
    pub convergence_tolerance: f64,
    pub observable_mode: ObservableMode,
    /// Seed for the simplex jitter; same seed, same result.
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::plane()
    }
}

impl OptimizerConfig {
    pub fn plane() -> Self {
        Self {
            coarse_grid_points_per_axis: 9,
            refine_seeds: 16,
            max_refine_iterations: 400,
            convergence_tolerance: 1e-9,
            observable_mode: ObservableMode::Plane,
            rng_seed: 0,
        }
    }

    /// Bloch-mode defaults: a coarser 7-point axis keeps 7⁸ grid evaluations
    /// tractable.
    pub fn bloch() -> Self {
        Self {
            coarse_grid_points_per_axis: 7,
            observable_mode: ObservableMode::Bloch,
            ..Self::plane()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coarse_grid_points_per_axis < 2 {
            return Err(Error::BadConfig(
                "coarse_grid_points_per_axis must be at least 2".into(),
            ));
        }
        if self.refine_seeds == 0 {
            return Err(Error::BadConfig("refine_seeds must be at least 1".into()));
        }
        if !(self.convergence_tolerance > 0.0 && self.convergence_tolerance.is_finite()) {
            return Err(Error::BadConfig(
                "convergence_tolerance must be positive and finite".into(),
            ));
        }
        match self.grid_size() {
            Some(total) if total <= 500_000_000 => Ok(()),
            _ => Err(Error::BadConfig(format!(
                "coarse grid of {}^{} points is too large",
                self.coarse_grid_points_per_axis,
                self.dimension()
            ))),
        }
    }

    fn dimension(&self) -> usize {
        match self.observable_mode {
            ObservableMode::Plane => 4,
            ObservableMode::Bloch => 8,
        }
    }

    fn grid_size(&self) -> Option<usize> {
        self.coarse_grid_points_per_axis
            .checked_pow(self.dimension() as u32)
    }
}

/// Outcome of a violation search.
#[derive(Debug, Clone, Serialize)]
pub struct ViolationResult {
    /// Largest ⟨B⟩ found; equals `report.b_value` at `optimal_settings`.
    pub b_max: f64,
    pub optimal_settings: MeasurementSettings,
    pub report: InequalityReport,
    /// Inequality evaluations spent across both stages.
    pub evaluations: u64,
    /// Whether the winning refinement met the convergence tolerance.
    pub converged: bool,
}

struct Candidate {
    value: f64,
    x: Vec<f64>,
    converged: bool,
    report: InequalityReport,
}

/// Searches for the settings that maximize ⟨B⟩ for this decomposition.
pub fn maximize_violation(
    decomposition: &Decomposition,
    config: &OptimizerConfig,
) -> Result<ViolationResult> {
    config.validate()?;
    let mode = config.observable_mode;
    let dim = config.dimension();
    let g = config.coarse_grid_points_per_axis;
    let tables: Vec<Vec<f64>> = (0..dim).map(|axis| axis_values(mode, axis, g)).collect();
    let total = config.grid_size().expect("validated");
    let keep = config.refine_seeds.min(total);

    // stage one: exhaustive scan, chunked for parallelism, merged in chunk order
    const CHUNK: usize = 8192;
    let chunk_tops: Vec<Vec<(f64, usize)>> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut top: Vec<(f64, usize)> = Vec::with_capacity(keep + 1);
            let mut x = vec![0.0; dim];
            for idx in start..end {
                decode(idx, g, &tables, &mut x);
                let value = bell::evaluate(decomposition, &settings_from(mode, &x)).b_value;
                push_top(&mut top, keep, (value, idx));
            }
            top
        })
        .collect();
    let mut seeds: Vec<(f64, usize)> = chunk_tops.concat();
    seeds.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    seeds.truncate(keep);
    let mut evaluations = total as u64;

    // stage two: seeded simplex refinement from each kept grid point
    let steps = base_steps(mode, g);
    let mut candidates: Vec<Candidate> = Vec::with_capacity(keep + 1);
    for (rank, &(coarse_value, idx)) in seeds.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(rank as u64 + 1);
        let mut x0 = vec![0.0; dim];
        decode(idx, g, &tables, &mut x0);

        let mut local_evals = 0u64;
        let mut objective = |x: &[f64]| {
            local_evals += 1;
            bell::evaluate(decomposition, &settings_from(mode, x)).b_value
        };
        let refined = refine(&mut objective, &x0, coarse_value, &steps, config, &mut rng);

        let mut x = refined.x;
        canonicalize(mode, &mut x);
        let report = bell::evaluate(decomposition, &settings_from(mode, &x));
        evaluations += local_evals + 1;
        candidates.push(Candidate {
            value: report.b_value,
            x,
            converged: refined.converged,
            report,
        });
        if rank == 0 {
            // the raw best grid point stays in the running, so no refinement
            // or canonicalization rounding can drag the result below it
            let report = bell::evaluate(decomposition, &settings_from(mode, &x0));
            evaluations += 1;
            candidates.push(Candidate {
                value: report.b_value,
                x: x0,
                converged: refined.converged,
                report,
            });
        }
    }

    let winner = candidates
        .into_iter()
        .min_by(|a, b| {
            b.value
                .total_cmp(&a.value)
                .then_with(|| lex_cmp(&a.x, &b.x))
        })
        .expect("at least one candidate");

    Ok(ViolationResult {
        b_max: winner.value,
        optimal_settings: winner.report.settings,
        report: winner.report,
        evaluations,
        converged: winner.converged,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.total_cmp(y);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Grid values for one axis. Plane axes and azimuths cover [0, 2π) half-open;
/// polar axes cover [0, π] inclusive.
fn axis_values(mode: ObservableMode, axis: usize, g: usize) -> Vec<f64> {
    let full_turn = |j: usize| j as f64 * 2.0 * PI / g as f64;
    match mode {
        ObservableMode::Plane => (0..g).map(full_turn).collect(),
        ObservableMode::Bloch if axis.is_multiple_of(2) => {
            (0..g).map(|j| j as f64 * PI / (g - 1) as f64).collect()
        }
        ObservableMode::Bloch => (0..g).map(full_turn).collect(),
    }
}

fn base_steps(mode: ObservableMode, g: usize) -> Vec<f64> {
    match mode {
        ObservableMode::Plane => vec![PI / g as f64; 4],
        ObservableMode::Bloch => (0..8usize)
            .map(|axis| {
                if axis.is_multiple_of(2) {
                    PI / (2.0 * (g - 1) as f64)
                } else {
                    PI / g as f64
                }
            })
            .collect(),
    }
}

fn decode(mut idx: usize, g: usize, tables: &[Vec<f64>], out: &mut [f64]) {
    for axis in (0..tables.len()).rev() {
        out[axis] = tables[axis][idx % g];
        idx /= g;
    }
}

fn settings_from(mode: ObservableMode, x: &[f64]) -> MeasurementSettings {
    match mode {
        ObservableMode::Plane => {
            MeasurementSettings::plane_angles(x[0], x[1], x[2], x[3]).expect("finite angles")
        }
        ObservableMode::Bloch => {
            let o = |i: usize| Observable::bloch_angles(x[2 * i], x[2 * i + 1]).expect("finite");
            MeasurementSettings::new(o(0), o(1), o(2), o(3))
        }
    }
}

/// Keeps `top` sorted best-first under (value desc, index asc), capped at `keep`.
fn push_top(top: &mut Vec<(f64, usize)>, keep: usize, entry: (f64, usize)) {
    let pos = top.partition_point(|t| t.0.total_cmp(&entry.0).then(entry.1.cmp(&t.1)).is_gt());
    if pos < keep {
        top.insert(pos, entry);
        top.truncate(keep);
    }
}

fn wrap_full_turn(v: f64) -> f64 {
    let w = v.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Maps a point to equivalent canonical angles: plane angles in [0, 2π),
/// polar in [0, π] with azimuth in [0, 2π) and pinned to 0 at the poles.
fn canonicalize(mode: ObservableMode, x: &mut [f64]) {
    match mode {
        ObservableMode::Plane => {
            for v in x {
                *v = wrap_full_turn(*v);
            }
        }
        ObservableMode::Bloch => {
            for i in 0..4 {
                let (polar, azimuth) = (x[2 * i], x[2 * i + 1]);
                let (nx, ny) = (polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin());
                let nz = polar.cos();
                x[2 * i] = nz.clamp(-1.0, 1.0).acos();
                x[2 * i + 1] = if nx == 0.0 && ny == 0.0 {
                    0.0
                } else {
                    wrap_full_turn(ny.atan2(nx))
                };
            }
        }
    }
}

struct Refined {
    x: Vec<f64>,
    converged: bool,
}

/// Nelder–Mead with up to three restarts on shrinking, sign-jittered initial
/// steps. The iteration budget is shared across restarts.
fn refine(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    value0: f64,
    base_steps: &[f64],
    config: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Refined {
    let mut best_x = x0.to_vec();
    let mut best_value = value0;
    let mut budget = config.max_refine_iterations;
    let mut converged = false;
    for round in 0..3 {
        if budget == 0 {
            break;
        }
        let scale = 0.25f64.powi(round);
        let steps: Vec<f64> = base_steps
            .iter()
            .map(|h| {
                let s = h * scale;
                if rng.random::<bool>() {
                    s
                } else {
                    -s
                }
            })
            .collect();
        let out = nelder_mead(
            objective,
            &best_x,
            &steps,
            budget,
            config.convergence_tolerance,
        );
        budget -= out.iterations;
        converged = out.converged;
        let gained = out.value - best_value;
        if out.value > best_value {
            best_x = out.x;
            best_value = out.value;
        }
        if out.converged && gained <= config.convergence_tolerance {
            break;
        }
    }
    Refined {
        x: best_x,
        converged,
    }
}

struct NmOutcome {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Standard simplex maximization (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). The best vertex is never replaced by a worse one.
fn nelder_mead(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    max_iterations: usize,
    tolerance: f64,
) -> NmOutcome {
    let dim = x0.len();
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim + 1);
    simplex.push((objective(x0), x0.to_vec()));
    for i in 0..dim {
        let mut xi = x0.to_vec();
        xi[i] += steps[i];
        simplex.push((objective(&xi), xi));
    }
    sort_desc(&mut simplex);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        if simplex[0].0 - simplex[dim].0 <= tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for (_, x) in &simplex[..dim] {
            for k in 0..dim {
                centroid[k] += x[k];
            }
        }
        for v in &mut centroid {
            *v /= dim as f64;
        }

        let worst = simplex[dim].0;
        let reflect: Vec<f64> = (0..dim)
            .map(|k| 2.0 * centroid[k] - simplex[dim].1[k])
            .collect();
        let fr = objective(&reflect);

        if fr > simplex[0].0 {
            let expand: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + 2.0 * (reflect[k] - centroid[k]))
                .collect();
            let fe = objective(&expand);
            simplex[dim] = if fe > fr { (fe, expand) } else { (fr, reflect) };
        } else if fr > simplex[dim - 1].0 {
            simplex[dim] = (fr, reflect);
        } else {
            let toward = if fr > worst {
                &reflect
            } else {
                &simplex[dim].1
            };
            let contract: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + 0.5 * (toward[k] - centroid[k]))
                .collect();
            let fc = objective(&contract);
            if fc > fr.max(worst) {
                simplex[dim] = (fc, contract);
            } else {
                let best = simplex[0].1.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (slot, anchor) in entry.1.iter_mut().zip(&best) {
                        *slot = anchor + 0.5 * (*slot - anchor);
                    }
                    entry.0 = objective(&entry.1);
                }
            }
        }
        sort_desc(&mut simplex);
    }

    NmOutcome {
        x: simplex[0].1.clone(),
        value: simplex[0].0,
        iterations,
        converged,
    }
}

fn sort_desc(simplex: &mut [(f64, Vec<f64>)]) {
    simplex.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| lex_cmp(&a.1, &b.1)));
}
