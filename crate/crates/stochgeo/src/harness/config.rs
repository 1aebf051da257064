//! Experiment documents: schema, parsing and hypothesis lints.
//!
//! `validate_config` either resolves a document into a runnable plan or
//! returns the list of violations. Some model hypotheses cannot be checked
//! mechanically (supercriticality of a percolation parameter, continuum
//! subcriticality of an interaction range); those produce warnings or
//! outside-proved-regime flags instead of errors.

use serde::{Deserialize, Serialize};

use crate::cltlab::ExactPmf;
use crate::continuum::Integrator;
use crate::error::{Error, Result};
use crate::geograph::{DensitySpec, MotifSpec, RadiusSchedule};
use crate::lattice_perc::LatticeBox;

pub const SCHEMA_VERSION: u32 = 1;

/// Default budget for site-or-point operations in one run.
pub const DEFAULT_RESOURCE_CAP: u128 = 1_000_000_000;

/// Smallest replicate count accepted for distributional claims.
pub const MIN_REPLICATES: u64 = 1_000;

/// Floor for the min/max side ratio of a cube-like box ladder.
pub const CUBE_LIKE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub ladder: Ladder,
    pub replicates: u64,
    pub master_seed: u64,
    /// Interval width rule for the discrepancy statistic; defaults to 1
    /// for integer-valued functionals and sigma-hat/4 for continuous ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_policy: Option<BinPolicy>,
    /// Relative change allowed in the variance/scale series at the last
    /// ladder step; defaults depend on the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stabilization_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ladder {
    /// Point-process sample sizes.
    Sizes(Vec<u64>),
    /// Lattice boxes, one side-length vector per rung.
    Boxes(Vec<Vec<i64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "value", rename_all = "kebab-case")]
pub enum BinPolicy {
    Fixed(f64),
    /// `b = sigma_hat / value`, with sigma-hat taken from the first ladder
    /// size so the width is one fixed number along the ladder.
    SigmaFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    PercolationClusters {
        d: usize,
        p: f64,
    },
    PercolationLargest {
        d: usize,
        p: f64,
        /// User-declared critical probability; runs with `p` at or below
        /// it are flagged, not refused.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        critical_threshold: Option<f64>,
    },
    RggSubgraph {
        d: usize,
        motif: MotifConfig,
        schedule: RadiusSchedule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<DensitySpec>,
    },
    RggComponents {
        d: usize,
        schedule: RadiusSchedule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<DensitySpec>,
    },
    RggIndependence {
        d: usize,
        schedule: RadiusSchedule,
        #[serde(default = "default_component_cap")]
        component_cap: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<DensitySpec>,
    },
    GermGrainVolume {
        d: usize,
        schedule: RadiusSchedule,
        radius_lo: f64,
        radius_hi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        integrator: Option<Integrator>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<DensitySpec>,
    },
    Rsa {
        d: usize,
        schedule: RadiusSchedule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<DensitySpec>,
    },
    KnnSum {
        d: usize,
        kappa: usize,
        alpha: f64,
        schedule: RadiusSchedule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<DensitySpec>,
    },
    Decomposition {
        summand: PmfConfig,
        component: ComponentLawConfig,
        defect: DefectRule,
        b: f64,
    },
}

fn default_component_cap() -> usize {
    24
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotifConfig {
    Named(String),
    Explicit { kappa: usize, edges: Vec<(usize, usize)> },
}

impl MotifConfig {
    pub fn build(&self) -> Result<MotifSpec> {
        match self {
            MotifConfig::Named(name) => match name.as_str() {
                "vertex" => Ok(MotifSpec::single_vertex()),
                "edge" => Ok(MotifSpec::edge()),
                "triangle" => Ok(MotifSpec::triangle()),
                "path-3" => MotifSpec::path(3),
                "path-4" => MotifSpec::path(4),
                "cycle-4" => MotifSpec::cycle(4),
                other => Err(Error::Configuration(format!(
                    "unknown motif name '{other}' (use vertex, edge, triangle, path-3, path-4, cycle-4 or an explicit edge list)"
                ))),
            },
            MotifConfig::Explicit { kappa, edges } => MotifSpec::new(*kappa, edges),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PmfConfig {
    Bernoulli(f64),
    Atoms(Vec<(i64, f64)>),
}

impl PmfConfig {
    pub fn build(&self) -> Result<ExactPmf> {
        match self {
            PmfConfig::Bernoulli(p) => ExactPmf::bernoulli(*p),
            PmfConfig::Atoms(atoms) => ExactPmf::from_atoms(atoms.iter().copied()),
        }
    }
}

/// The independent component law `Y_n` per ladder size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentLawConfig {
    Zero,
    /// `Y_n = Binomial(n, p)`.
    BinomialP(f64),
}

/// Coupling-defect probability per ladder size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefectRule {
    Zero,
    InverseN,
}

impl DefectRule {
    pub fn eps(&self, n: u64) -> f64 {
        match self {
            DefectRule::Zero => 0.0,
            DefectRule::InverseN => 1.0 / n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Error,
    Warning,
    OutsideProvedRegime,
}

/// One lint finding, naming the hypothesis it enforces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    pub hypothesis: String,
    pub message: String,
}

/// A resolved, runnable plan.
#[derive(Debug, Clone)]
pub struct ValidatedSpec {
    pub config: ExperimentConfig,
    /// Non-fatal findings, echoed into the run report.
    pub notes: Vec<Violation>,
    pub sizes: Vec<SizePlan>,
}

/// Per-ladder-rung execution plan.
#[derive(Debug, Clone)]
pub struct SizePlan {
    pub label: String,
    /// points for continuum models, sites for lattice models
    pub scale_units: u64,
    pub n_points: u64,
    pub bbox: Option<LatticeBox>,
    pub r_n: Option<f64>,
    pub m_n: f64,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text)?;
    Ok(config)
}

/// Lint an experiment document against the hypotheses of the limit
/// statements it is meant to probe.
pub fn validate_config(config: &ExperimentConfig) -> std::result::Result<ValidatedSpec, Vec<Violation>> {
    let mut errors: Vec<Violation> = Vec::new();
    let mut notes: Vec<Violation> = Vec::new();
    let err = |hypothesis: &str, message: String| Violation {
        severity: Severity::Error,
        hypothesis: hypothesis.to_string(),
        message,
    };

    if config.schema_version != SCHEMA_VERSION {
        errors.push(err(
            "schema-version",
            format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            ),
        ));
    }

    let is_decomposition = matches!(config.model, ModelConfig::Decomposition { .. });
    if !is_decomposition && config.replicates < MIN_REPLICATES {
        errors.push(err(
            "replicate-floor",
            format!(
                "distributional claims need >= {MIN_REPLICATES} replicates per size, got {}",
                config.replicates
            ),
        ));
    }

    // ladder shape and monotonicity
    let mut sizes: Vec<SizePlan> = Vec::new();
    match (&config.model, &config.ladder) {
        (ModelConfig::PercolationClusters { d, .. } | ModelConfig::PercolationLargest { d, .. }, Ladder::Boxes(boxes)) => {
            if boxes.is_empty() {
                errors.push(err("ladder-shape", "ladder must not be empty".into()));
            }
            let mut prev_sites = 0u64;
            for sides in boxes {
                if sides.len() != *d {
                    errors.push(err(
                        "ladder-shape",
                        format!("box {sides:?} does not match model dimension {d}"),
                    ));
                    continue;
                }
                match LatticeBox::anchored(sides) {
                    Ok(bbox) => {
                        let sites = bbox.site_count();
                        if sites <= prev_sites {
                            errors.push(err(
                                "ladder-monotone",
                                format!("ladder site counts must strictly increase ({sites} after {prev_sites})"),
                            ));
                        }
                        prev_sites = sites;
                        sizes.push(SizePlan {
                            label: sides
                                .iter()
                                .map(|s| s.to_string())
                                .collect::<Vec<_>>()
                                .join("x"),
                            scale_units: sites,
                            n_points: sites,
                            bbox: Some(bbox),
                            r_n: None,
                            m_n: (sites as f64).sqrt(),
                        });
                    }
                    Err(e) => errors.push(err("ladder-shape", format!("bad box {sides:?}: {e}"))),
                }
            }
        }
        (ModelConfig::PercolationClusters { .. } | ModelConfig::PercolationLargest { .. }, Ladder::Sizes(_)) => {
            errors.push(err(
                "ladder-shape",
                "lattice models take a ladder of boxes, not point counts".into(),
            ));
        }
        (ModelConfig::Decomposition { .. }, Ladder::Sizes(ns)) => {
            if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
                errors.push(err("ladder-monotone", "ladder must be strictly increasing".into()));
            }
            for &n in ns {
                sizes.push(SizePlan {
                    label: format!("n{n}"),
                    scale_units: n,
                    n_points: n,
                    bbox: None,
                    r_n: None,
                    m_n: (n as f64).sqrt(),
                });
            }
        }
        (ModelConfig::Decomposition { .. }, Ladder::Boxes(_)) => {
            errors.push(err("ladder-shape", "decomposition takes a ladder of sizes n".into()));
        }
        (model, Ladder::Sizes(ns)) => {
            if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
                errors.push(err("ladder-monotone", "ladder must be strictly increasing".into()));
            }
            let (d, schedule) = point_model_geometry(model).expect("point models have a schedule");
            for &n in ns {
                let r_n = schedule.radius(n, d);
                let m_n = match model {
                    ModelConfig::RggSubgraph { motif, .. } => {
                        let kappa = motif.build().map(|m| m.kappa).unwrap_or(2);
                        crate::geograph::tau_n(n, schedule, d, kappa)
                    }
                    _ => (n as f64).sqrt(),
                };
                sizes.push(SizePlan {
                    label: format!("n{n}"),
                    scale_units: n,
                    n_points: n,
                    bbox: None,
                    r_n: Some(r_n),
                    m_n,
                });
            }
        }
        (_, Ladder::Boxes(_)) => {
            errors.push(err("ladder-shape", "point-process models take a ladder of sizes n".into()));
        }
    }

    // model-specific hypothesis lints
    match &config.model {
        ModelConfig::PercolationClusters { d, p } => {
            if *d == 0 {
                errors.push(err("dimension", "dimension must be >= 1".into()));
            }
            if !(0.0..=1.0).contains(p) {
                errors.push(err("probability-domain", format!("p = {p} outside [0, 1]")));
            }
            // vanishing relative boundary along the ladder is checked on
            // the configured boxes
            if sizes.len() >= 2 {
                let rel: Vec<f64> = sizes
                    .iter()
                    .filter_map(|s| s.bbox.as_ref())
                    .map(|b| b.boundary_count() as f64 / b.site_count() as f64)
                    .collect();
                if rel.windows(2).any(|w| w[1] >= w[0]) {
                    notes.push(Violation {
                        severity: Severity::Warning,
                        hypothesis: "vanishing-relative-boundary".into(),
                        message: format!("boundary/site ratio does not shrink along the ladder: {rel:?}"),
                    });
                }
            }
        }
        ModelConfig::PercolationLargest { d, p, critical_threshold } => {
            if *d < 2 {
                errors.push(err(
                    "dimension",
                    "the largest-cluster limit needs d >= 2 (no supercritical phase in d = 1)".into(),
                ));
            }
            if !(0.0..=1.0).contains(p) {
                errors.push(err("probability-domain", format!("p = {p} outside [0, 1]")));
            }
            let ratios: Vec<f64> = sizes
                .iter()
                .filter_map(|s| s.bbox.as_ref())
                .map(|b| b.cube_like_ratio())
                .collect();
            if ratios.iter().any(|&r| r < CUBE_LIKE_FLOOR) {
                errors.push(err(
                    "cube-like-ladder",
                    format!("min/max side ratio falls below {CUBE_LIKE_FLOOR}: {ratios:?}"),
                ));
            } else if ratios.windows(2).any(|w| w[1] < w[0]) {
                notes.push(Violation {
                    severity: Severity::Warning,
                    hypothesis: "cube-like-ladder".into(),
                    message: format!(
                        "side ratios shrink along the ladder ({ratios:?}); confirm they stay bounded away from zero"
                    ),
                });
            }
            match critical_threshold {
                Some(tc) if p > tc => {}
                Some(tc) => notes.push(Violation {
                    severity: Severity::OutsideProvedRegime,
                    hypothesis: "supercritical-phase".into(),
                    message: format!("p = {p} is at or below the declared critical threshold {tc}"),
                }),
                None => notes.push(Violation {
                    severity: Severity::Warning,
                    hypothesis: "supercritical-phase".into(),
                    message: "no critical threshold declared; the largest-cluster limit assumes a supercritical p".into(),
                }),
            }
        }
        ModelConfig::RggSubgraph { d, motif, schedule, density } => {
            check_point_geometry(*d, schedule, density.as_ref(), &mut errors);
            match motif.build() {
                Ok(m) => {
                    if m.kappa < 2 {
                        errors.push(err("motif-order", "subgraph counting needs a motif on >= 2 vertices".into()));
                    }
                    // diverging count scale: tau_n^2 must grow along the ladder
                    if let RadiusSchedule::Sparse { gamma, .. } = schedule {
                        let exponent = m.kappa as f64 - *d as f64 * gamma * (m.kappa as f64 - 1.0);
                        if exponent <= 0.0 {
                            errors.push(err(
                                "diverging-count-scale",
                                format!(
                                    "tau^2 ~ n^{exponent:.3} does not diverge for kappa = {} under this sparse schedule",
                                    m.kappa
                                ),
                            ));
                        }
                    }
                    if *d == 1 && m.kappa > 2 && m.edges.len() + 1 > m.kappa {
                        notes.push(Violation {
                            severity: Severity::Warning,
                            hypothesis: "motif-feasibility".into(),
                            message: "dense motifs may be infeasible for interval graphs in d = 1".into(),
                        });
                    }
                }
                Err(e) => errors.push(err("motif-order", e.to_string())),
            }
        }
        ModelConfig::RggComponents { d, schedule, density } => {
            check_point_geometry(*d, schedule, density.as_ref(), &mut errors);
            if !matches!(schedule, RadiusSchedule::RhoThermodynamic { .. } | RadiusSchedule::Strong) {
                notes.push(Violation {
                    severity: Severity::OutsideProvedRegime,
                    hypothesis: "thermodynamic-limit".into(),
                    message: "component counts are analysed in the thermodynamic limit; sparse schedules are outside it".into(),
                });
            }
        }
        ModelConfig::RggIndependence { d, schedule, component_cap, density } => {
            check_point_geometry(*d, schedule, density.as_ref(), &mut errors);
            if *component_cap == 0 || *component_cap > 64 {
                errors.push(err("component-cap", "component cap must lie in 1..=64".into()));
            }
            notes.push(Violation {
                severity: Severity::Warning,
                hypothesis: "subcritical-range".into(),
                message: format!(
                    "exact independence search assumes a subcritical interaction range; components above {component_cap} vertices abort the run"
                ),
            });
        }
        ModelConfig::GermGrainVolume { d, schedule, radius_lo, radius_hi, integrator, density } => {
            check_point_geometry(*d, schedule, density.as_ref(), &mut errors);
            if !(radius_lo > &0.0) || radius_hi < radius_lo {
                errors.push(err(
                    "bounded-grains",
                    format!("radius marks need 0 < lo <= hi, got [{radius_lo}, {radius_hi}]"),
                ));
            }
            if let Some(Integrator::Grid { h }) = integrator {
                if !(*h > 0.0) {
                    errors.push(err("integrator", format!("grid spacing {h} must be positive")));
                }
            }
            strong_schedule_note(schedule, "covered-volume limit", &mut notes);
        }
        ModelConfig::Rsa { d, schedule, density } => {
            check_point_geometry(*d, schedule, density.as_ref(), &mut errors);
            strong_schedule_note(schedule, "accepted-count limit", &mut notes);
        }
        ModelConfig::KnnSum { d, kappa, alpha, schedule, density } => {
            check_point_geometry(*d, schedule, density.as_ref(), &mut errors);
            if *kappa == 0 {
                errors.push(err("neighbour-order", "kappa must be >= 1".into()));
            }
            if !(alpha > &0.0) {
                errors.push(err("power-weight", format!("alpha = {alpha} must be positive")));
            }
            if let Ladder::Sizes(ns) = &config.ladder {
                if ns.iter().any(|&n| n <= *kappa as u64) {
                    errors.push(err(
                        "neighbour-order",
                        "every ladder size must exceed kappa (distances are infinite otherwise)".into(),
                    ));
                }
            }
            strong_schedule_note(schedule, "neighbour-sum limit", &mut notes);
        }
        ModelConfig::Decomposition { summand, b, .. } => {
            match summand.build() {
                Ok(v) => {
                    if v.span().is_infinite() {
                        errors.push(err(
                            "non-degenerate-summand",
                            "summand law must not be degenerate (its span is infinite)".into(),
                        ));
                    } else if !crate::cltlab::divides(v.span(), *b) {
                        errors.push(err(
                            "span-divides-interval",
                            format!("interval width {b} is not a multiple of the summand span {}", v.span()),
                        ));
                    }
                }
                Err(e) => errors.push(err("summand-law", e.to_string())),
            }
        }
    }

    // resource budget
    let cap = config.resource_cap.map(|c| c as u128).unwrap_or(DEFAULT_RESOURCE_CAP);
    let required: u128 = if is_decomposition {
        0
    } else {
        sizes
            .iter()
            .map(|s| s.scale_units as u128 * config.replicates as u128)
            .sum()
    };
    if required > cap {
        errors.push(err(
            "resource-cap",
            format!("run needs ~{required} site-or-point operations, cap is {cap}"),
        ));
    }

    if errors.is_empty() {
        Ok(ValidatedSpec {
            config: config.clone(),
            notes,
            sizes,
        })
    } else {
        errors.extend(notes);
        Err(errors)
    }
}

fn point_model_geometry(model: &ModelConfig) -> Option<(usize, &RadiusSchedule)> {
    match model {
        ModelConfig::RggSubgraph { d, schedule, .. }
        | ModelConfig::RggComponents { d, schedule, .. }
        | ModelConfig::RggIndependence { d, schedule, .. }
        | ModelConfig::GermGrainVolume { d, schedule, .. }
        | ModelConfig::Rsa { d, schedule, .. }
        | ModelConfig::KnnSum { d, schedule, .. } => Some((*d, schedule)),
        _ => None,
    }
}

fn check_point_geometry(
    d: usize,
    schedule: &RadiusSchedule,
    density: Option<&DensitySpec>,
    errors: &mut Vec<Violation>,
) {
    if d == 0 {
        errors.push(Violation {
            severity: Severity::Error,
            hypothesis: "dimension".into(),
            message: "dimension must be >= 1".into(),
        });
    }
    if let Err(e) = schedule.validate(d.max(1)) {
        errors.push(Violation {
            severity: Severity::Error,
            hypothesis: "bounded-intensity".into(),
            message: e.to_string(),
        });
    }
    if let Some(density) = density {
        if let Err(e) = density.validate() {
            errors.push(Violation {
                severity: Severity::Error,
                hypothesis: "bounded-density".into(),
                message: e.to_string(),
            });
        } else if density.dim() != d {
            errors.push(Violation {
                severity: Severity::Error,
                hypothesis: "dimension".into(),
                message: format!("density dimension {} does not match model dimension {d}", density.dim()),
            });
        }
    }
}

fn strong_schedule_note(schedule: &RadiusSchedule, what: &str, notes: &mut Vec<Violation>) {
    // rho-thermodynamic with rho = 1 gives the same radii as the strong rule
    let strong = matches!(schedule, RadiusSchedule::Strong)
        || matches!(schedule, RadiusSchedule::RhoThermodynamic { rho } if *rho == 1.0);
    if !strong {
        notes.push(Violation {
            severity: Severity::OutsideProvedRegime,
            hypothesis: "strong-radius-schedule".into(),
            message: format!(
                "the {what} is stated for the schedule r_n = n^(-1/d); other schedules run but are flagged"
            ),
        });
    }
}
