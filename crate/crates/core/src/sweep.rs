//! Parameter sweeps: maximize ⟨B⟩ across a family grid and tabulate the
//! results, optionally as CSV.
//!
//! Four presets cover the standard pictures: `fig1a` (ϱm over γ), `fig1b`
//! (ϱw at ξ = π/4 over γ), `fig2` (ϱw over the γ × ξ grid), and `fig3` (both
//! decompositions of ϱs over x). Custom grids go through [`SweepFamily`]
//! directly. Sweeps record plane angles in fixed CSV columns, so the
//! optimizer must run in plane mode.

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;

use crate::error::{Error, Result};
use crate::optimize::{maximize_violation, ObservableMode, OptimizerConfig, ViolationResult};
use crate::qstate::{self, Decomposition};

/// The predefined sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1a,
    Fig1b,
    Fig2,
    Fig3,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1a => "fig1a",
            Preset::Fig1b => "fig1b",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1a" => Ok(Preset::Fig1a),
            "fig1b" => Ok(Preset::Fig1b),
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            other => Err(Error::BadSweep(format!(
                "unknown preset {other:?}; expected fig1a, fig1b, fig2, or fig3"
            ))),
        }
    }
}

/// An inclusive linear grid; `steps == 1` pins the parameter at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl GridRange {
    pub fn new(start: f64, stop: f64, steps: usize) -> Self {
        Self { start, stop, steps }
    }

    pub fn fixed(value: f64) -> Self {
        Self::new(value, value, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::BadSweep("grid endpoints must be finite".into()));
        }
        match self.steps {
            0 => Err(Error::BadSweep("grid needs at least one step".into())),
            1 if self.start != self.stop => Err(Error::BadSweep(
                "single-step grid needs start == stop".into(),
            )),
            _ if self.steps > 1 && self.stop <= self.start => {
                Err(Error::BadSweep("swept grid needs stop > start".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        (0..self.steps)
            .map(|i| {
                if i == self.steps - 1 {
                    self.stop
                } else {
                    self.start + i as f64 * span / (self.steps - 1) as f64
                }
            })
            .collect()
    }
}

/// Which decompositions a separable sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionChoice {
    Product,
    Bell,
    Both,
}

/// The family and grid a sweep runs over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepFamily {
    Mems {
        gamma: GridRange,
    },
    Werner {
        gamma: GridRange,
        xi: GridRange,
    },
    Separable {
        x: GridRange,
        decompositions: DecompositionChoice,
    },
}

/// A full sweep description: label, grid, optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Preset name or "custom"; lands in the first CSV column.
    pub label: String,
    pub family: SweepFamily,
    pub optimizer: OptimizerConfig,
}

impl SweepSpec {
    pub fn preset(preset: Preset) -> Self {
        let family = match preset {
            Preset::Fig1a => SweepFamily::Mems {
                gamma: GridRange::new(0.05, 1.0, 20),
            },
            Preset::Fig1b => SweepFamily::Werner {
                gamma: GridRange::new(0.05, 1.0, 20),
                xi: GridRange::fixed(FRAC_PI_4),
            },
            Preset::Fig2 => SweepFamily::Werner {
                gamma: GridRange::new(0.05, 1.0, 20),
                // half-open [0, 2π): 24 points, so ξ and ξ + π both appear
                xi: GridRange::new(0.0, 2.0 * PI * 23.0 / 24.0, 24),
            },
            Preset::Fig3 => SweepFamily::Separable {
                x: GridRange::new(-0.25, 0.25, 21),
                decompositions: DecompositionChoice::Both,
            },
        };
        Self {
            label: preset.name().to_string(),
            family,
            optimizer: OptimizerConfig::plane(),
        }
    }

    pub fn custom(family: SweepFamily) -> Self {
        Self {
            label: "custom".to_string(),
            family,
            optimizer: OptimizerConfig::plane(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.optimizer.observable_mode != ObservableMode::Plane {
            return Err(Error::BadSweep(
                "sweeps record plane angles; the optimizer must run in plane mode".into(),
            ));
        }
        match &self.family {
            SweepFamily::Mems { gamma } => gamma.validate(),
            SweepFamily::Werner { gamma, xi } => {
                gamma.validate()?;
                xi.validate()
            }
            SweepFamily::Separable { x, .. } => x.validate(),
        }
    }
}

/// One line of sweep output.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub preset: String,
    /// Swept parameter names and values, in column order.
    pub params: Vec<(&'static str, f64)>,
    /// Which decomposition was used, when the family offers more than one.
    pub decomposition: Option<&'static str>,
    pub b_max: f64,
    pub bound: f64,
    pub violated: bool,
    pub theta_a: f64,
    pub theta_b: f64,
    pub theta_c: f64,
    pub theta_d: f64,
    pub evaluations: u64,
}

impl Serialize for SweepRow {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let extra = usize::from(self.decomposition.is_some());
        let mut map = serializer.serialize_map(Some(9 + self.params.len() + extra))?;
        map.serialize_entry("preset", &self.preset)?;
        for (name, value) in &self.params {
            map.serialize_entry(name, value)?;
        }
        if let Some(d) = self.decomposition {
            map.serialize_entry("decomposition", d)?;
        }
        map.serialize_entry("b_max", &self.b_max)?;
        map.serialize_entry("bound", &self.bound)?;
        map.serialize_entry("violated", &self.violated)?;
        map.serialize_entry("theta_a", &self.theta_a)?;
        map.serialize_entry("theta_b", &self.theta_b)?;
        map.serialize_entry("theta_c", &self.theta_c)?;
        map.serialize_entry("theta_d", &self.theta_d)?;
        map.serialize_entry("evaluations", &self.evaluations)?;
        map.end()
    }
}

/// Rows plus the full per-row optimizer results, in the same order.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub details: Vec<ViolationResult>,
}

struct Job {
    params: Vec<(&'static str, f64)>,
    decomposition_label: Option<&'static str>,
    decomposition: Decomposition,
}

/// Runs every grid point (in declaration order: first parameter outermost)
/// and returns the table.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let jobs = build_jobs(&spec.family)?;
    let outcomes: Vec<(SweepRow, ViolationResult)> = jobs
        .into_par_iter()
        .map(|job| {
            let result = maximize_violation(&job.decomposition, &spec.optimizer)
                .expect("optimizer config validated");
            let s = &result.optimal_settings;
            let theta = |o: &crate::bell::Observable| o.theta().expect("plane mode");
            let row = SweepRow {
                preset: spec.label.clone(),
                params: job.params,
                decomposition: job.decomposition_label,
                b_max: result.b_max,
                bound: result.report.bound,
                violated: result.report.violated,
                theta_a: theta(&s.a),
                theta_b: theta(&s.b),
                theta_c: theta(&s.c),
                theta_d: theta(&s.d),
                evaluations: result.evaluations,
            };
            (row, result)
        })
        .collect();
    let (rows, details) = outcomes.into_iter().unzip();
    Ok(SweepResult { rows, details })
}

fn build_jobs(family: &SweepFamily) -> Result<Vec<Job>> {
    let mut jobs = Vec::new();
    match family {
        SweepFamily::Mems { gamma } => {
            for g in gamma.values() {
                jobs.push(Job {
                    params: vec![("gamma", g)],
                    decomposition_label: None,
                    decomposition: qstate::mems_decomposition(g)?,
                });
            }
        }
        SweepFamily::Werner { gamma, xi } => {
            for g in gamma.values() {
                for x in xi.values() {
                    jobs.push(Job {
                        params: vec![("gamma", g), ("xi", x)],
                        decomposition_label: None,
                        decomposition: qstate::werner_decomposition(g, x)?,
                    });
                }
            }
        }
        SweepFamily::Separable { x, decompositions } => {
            for v in x.values() {
                if *decompositions != DecompositionChoice::Product {
                    jobs.push(Job {
                        params: vec![("x", v)],
                        decomposition_label: Some("bell"),
                        decomposition: qstate::bell_decomposition(v)?,
                    });
                }
                if *decompositions != DecompositionChoice::Bell {
                    jobs.push(Job {
                        params: vec![("x", v)],
                        decomposition_label: Some("product"),
                        decomposition: qstate::product_decomposition(v)?,
                    });
                }
            }
        }
    }
    Ok(jobs)
}

/// Formats with 12 significant digits, which round-trips the discriminating
/// part of every tabulated quantity.
fn sig12(value: f64) -> String {
    format!("{value:.11e}")
}

/// Writes rows as CSV: `preset`, the parameter columns, `decomposition` when
/// present, then `b_max`, `bound`, `violated`, `theta_a`..`theta_d`,
/// `evaluations`. Numeric columns carry 12 significant digits.
pub fn write_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let Some(first) = rows.first() else {
        return Ok(());
    };

    let mut header: Vec<&str> = vec!["preset"];
    header.extend(first.params.iter().map(|(name, _)| *name));
    if first.decomposition.is_some() {
        header.push("decomposition");
    }
    header.extend([
        "b_max",
        "bound",
        "violated",
        "theta_a",
        "theta_b",
        "theta_c",
        "theta_d",
        "evaluations",
    ]);
    out.write_record(&header)?;

    for row in rows {
        let mut record: Vec<String> = vec![row.preset.clone()];
        record.extend(row.params.iter().map(|(_, v)| sig12(*v)));
        if let Some(d) = row.decomposition {
            record.push(d.to_string());
        }
        record.extend([
            sig12(row.b_max),
            sig12(row.bound),
            row.violated.to_string(),
            sig12(row.theta_a),
            sig12(row.theta_b),
            sig12(row.theta_c),
            sig12(row.theta_d),
            row.evaluations.to_string(),
        ]);
        out.write_record(&record)?;
    }
    out.flush().map_err(|e| Error::Io {
        path: "<csv>".into(),
        source: e,
    })?;
    Ok(())
}

/// [`write_csv`] to a file path.
pub fn write_csv_path(rows: &[SweepRow], path: &str) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.to_string(),
        source: e,
    })?;
    write_csv(rows, std::io::BufWriter::new(file))
}
