//! Scenario description and validation.

use crate::error::CliError;
use crate::schema::{parse_json, Ctx};
use layerlab_core::cross_section::{CrossSectionDomain, CrossSectionShape};
use layerlab_core::geometry::Profile1d;
use layerlab_core::weyl::WeylThresholds;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Threshold,
    Scan,
    CounterexampleBend,
    CounterexampleTwist,
    MatrixHarness,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Threshold => "threshold",
            Experiment::Scan => "scan",
            Experiment::CounterexampleBend => "counterexample_bend",
            Experiment::CounterexampleTwist => "counterexample_twist",
            Experiment::MatrixHarness => "matrix_harness",
        }
    }
}

#[derive(Debug, Clone)]
pub enum SurfaceSpec {
    Flat,
    /// `amplitude * exp(-|x|^2 / (2 width^2))`: a cap that is
    /// paraboloid-like near the origin and flattens at infinity.
    GaussianCap { amplitude: f64, width: f64 },
}

#[derive(Debug, Clone)]
pub enum BaseSpec {
    Curve {
        codim: usize,
        length: f64,
        curvature: Vec<Profile1d>,
        torsion: Option<Profile1d>,
    },
    Graph {
        half_extent: f64,
        surface: SurfaceSpec,
    },
}

impl BaseSpec {
    pub fn dim(&self) -> usize {
        match self {
            BaseSpec::Curve { .. } => 1,
            BaseSpec::Graph { .. } => 2,
        }
    }

    pub fn codim(&self) -> usize {
        match self {
            BaseSpec::Curve { codim, .. } => *codim,
            BaseSpec::Graph { .. } => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanSpec {
    /// Lambda grid relative to the computed fiber ground energy.
    pub lambda_rel_min: f64,
    pub lambda_rel_max: f64,
    pub lambda_step: f64,
    pub thresholds: WeylThresholds,
    /// Optionally verify bound states stay put when the box is scaled.
    pub bound_state: Option<BoundStateSpec>,
}

#[derive(Debug, Clone)]
pub struct BoundStateSpec {
    pub length_factors: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct HarnessSpec {
    pub seeds: usize,
    pub samples: usize,
    pub max_size: usize,
}

#[derive(Debug, Clone)]
pub struct EigenSpec {
    pub count: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenSpec {
    fn default() -> Self {
        Self { count: 6, tol: 1e-6, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    pub base: BaseSpec,
    pub cross_section: CrossSectionDomain,
    pub base_cells: Vec<usize>,
    pub eigen: EigenSpec,
    pub scan: Option<ScanSpec>,
    pub lengths: Option<Vec<f64>>,
    pub scan_reject_rel: Option<Vec<f64>>,
    pub harness: Option<HarnessSpec>,
    pub count_thresholds: Vec<f64>,
    pub export_metric: bool,
    /// Raw JSON for hashing and provenance.
    pub raw: Value,
}

fn parse_profile(c: &Ctx) -> Result<Profile1d, CliError> {
    let ty = c.get("type")?.str()?;
    Ok(match ty {
        "zero" => Profile1d::Zero,
        "constant" => Profile1d::Constant { value: c.get("value")?.f64()? },
        "sine_wave" => Profile1d::SineWave {
            amplitude: c.get("amplitude")?.f64()?,
            period: c.get("period")?.positive_f64()?,
        },
        "compact_bump" => Profile1d::CompactBump {
            amplitude: c.get("amplitude")?.f64()?,
            center: c.get("center")?.f64()?,
            half_width: c.get("half_width")?.positive_f64()?,
        },
        "gaussian_decay" => Profile1d::GaussianDecay {
            amplitude: c.get("amplitude")?.f64()?,
            center: c.get("center")?.f64()?,
            width: c.get("width")?.positive_f64()?,
        },
        other => return Err(c.bad(format!("unknown profile type `{other}`"))),
    })
}

fn parse_shape(c: &Ctx) -> Result<CrossSectionShape, CliError> {
    let ty = c.get("type")?.str()?;
    Ok(match ty {
        "interval" => CrossSectionShape::Interval { length: c.get("length")?.positive_f64()? },
        "rectangle" => CrossSectionShape::Rectangle {
            width: c.get("width")?.positive_f64()?,
            height: c.get("height")?.positive_f64()?,
        },
        "disk" => CrossSectionShape::Disk { radius: c.get("radius")?.positive_f64()? },
        "mask" => {
            let shape: Vec<usize> = c
                .get("shape")?
                .array()?
                .iter()
                .map(|x| x.usize())
                .collect::<Result<_, _>>()?;
            let inside: Vec<bool> = c
                .get("inside")?
                .array()?
                .iter()
                .map(|x| x.bool())
                .collect::<Result<_, _>>()?;
            CrossSectionShape::Mask {
                shape,
                spacing: c.get("spacing")?.positive_f64()?,
                inside,
            }
        }
        other => return Err(c.bad(format!("unknown cross-section shape `{other}`"))),
    })
}

fn parse_base(c: &Ctx) -> Result<BaseSpec, CliError> {
    let kind = c.get("kind")?.str()?;
    match kind {
        "curve" => {
            let codim = c.get("codim")?.usize()?;
            if codim == 0 || codim > 2 {
                return Err(c.get("codim")?.bad("curve codim must be 1 or 2"));
            }
            let length = c.get("length")?.positive_f64()?;
            let curvature: Vec<Profile1d> = c
                .get("curvature")?
                .array()?
                .iter()
                .map(parse_profile)
                .collect::<Result<_, _>>()?;
            if curvature.len() != codim {
                return Err(c
                    .get("curvature")?
                    .bad(format!("need {codim} curvature profiles, got {}", curvature.len())));
            }
            let torsion = match c.opt("torsion") {
                Some(t) => Some(parse_profile(&t)?),
                None => None,
            };
            if torsion.is_some() && codim != 2 {
                return Err(c.get("torsion")?.bad("torsion requires codim = 2"));
            }
            Ok(BaseSpec::Curve { codim, length, curvature, torsion })
        }
        "graph" => {
            let half_extent = c.get("half_extent")?.positive_f64()?;
            let s = c.get("surface")?;
            let ty = s.get("type")?.str()?;
            let surface = match ty {
                "flat" => SurfaceSpec::Flat,
                "gaussian_cap" => SurfaceSpec::GaussianCap {
                    amplitude: s.get("amplitude")?.f64()?,
                    width: s.get("width")?.positive_f64()?,
                },
                other => return Err(s.bad(format!("unknown surface type `{other}`"))),
            };
            Ok(BaseSpec::Graph { half_extent, surface })
        }
        other => Err(c.get("kind")?.bad(format!("unknown base kind `{other}`"))),
    }
}

fn parse_thresholds(c: Option<Ctx>) -> Result<WeylThresholds, CliError> {
    let mut t = WeylThresholds::default();
    let Some(c) = c else { return Ok(t) };
    if let Some(v) = c.opt("slope_max") {
        t.slope_max = v.f64()?;
    }
    if let Some(v) = c.opt("c_disc") {
        t.c_disc = v.positive_f64()?;
    }
    if let Some(v) = c.opt("floor_slack") {
        t.floor_slack = v.positive_f64()?;
    }
    if let Some(v) = c.opt("r0_fiber_widths") {
        t.r0_fiber_widths = v.positive_f64()?;
    }
    if let Some(v) = c.opt("n_members") {
        t.n_members = v.usize()?;
    }
    if let Some(v) = c.opt("cg_tol") {
        t.cg_tol = v.positive_f64()?;
    }
    if let Some(v) = c.opt("eig_margin") {
        t.eig_margin = v.positive_f64()?;
    }
    if let Some(v) = c.opt("eig_cap") {
        t.eig_cap = v.usize()?;
    }
    if let Some(v) = c.opt("eig_tol") {
        t.eig_tol = v.positive_f64()?;
    }
    Ok(t)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw = parse_json(text)?;
        let root = Ctx::root(&raw);
        let name = root.get("name")?.str()?.to_string();
        let experiment = match root.get("experiment")?.str()? {
            "threshold" => Experiment::Threshold,
            "scan" => Experiment::Scan,
            "counterexample_bend" => Experiment::CounterexampleBend,
            "counterexample_twist" => Experiment::CounterexampleTwist,
            "matrix_harness" => Experiment::MatrixHarness,
            other => {
                return Err(root.get("experiment")?.bad(format!("unknown experiment `{other}`")))
            }
        };

        // matrix harness needs no geometry; give it a token layer
        let (base, cross_section, base_cells) = if experiment == Experiment::MatrixHarness {
            (
                BaseSpec::Curve {
                    codim: 1,
                    length: 1.0,
                    curvature: vec![Profile1d::Zero],
                    torsion: None,
                },
                CrossSectionDomain::new(CrossSectionShape::Interval { length: 1.0 }, 0.1),
                vec![10],
            )
        } else {
            let base = parse_base(&root.get("base")?)?;
            let cs = root.get("cross_section")?;
            let domain = CrossSectionDomain::new(
                parse_shape(&cs.get("shape")?)?,
                cs.get("h_fiber")?.positive_f64()?,
            );
            let cells: Vec<usize> = root
                .get("grid")?
                .get("base_cells")?
                .array()?
                .iter()
                .map(|x| x.usize())
                .collect::<Result<_, _>>()?;
            if cells.len() != base.dim() {
                return Err(root.get("grid")?.get("base_cells")?.bad(format!(
                    "need {} cell counts for this base, got {}",
                    base.dim(),
                    cells.len()
                )));
            }
            if cells.iter().any(|&c| c < 2) {
                return Err(root
                    .get("grid")?
                    .get("base_cells")?
                    .bad("each axis needs at least 2 cells"));
            }
            (base, domain, cells)
        };

        let mut eigen = EigenSpec::default();
        if let Some(e) = root.opt("eigen") {
            if let Some(v) = e.opt("count") {
                eigen.count = v.usize()?;
            }
            if let Some(v) = e.opt("tol") {
                eigen.tol = v.positive_f64()?;
            }
            if let Some(v) = e.opt("max_iter") {
                eigen.max_iter = v.usize()?;
            }
        }

        let scan = match root.opt("scan") {
            Some(s) => {
                let bound_state = match s.opt("bound_state") {
                    Some(b) => Some(BoundStateSpec {
                        length_factors: b
                            .get("length_factors")?
                            .array()?
                            .iter()
                            .map(|x| x.positive_f64())
                            .collect::<Result<_, _>>()?,
                        count: b.get("count")?.usize()?,
                    }),
                    None => None,
                };
                Some(ScanSpec {
                    lambda_rel_min: s.get("lambda_rel_min")?.f64()?,
                    lambda_rel_max: s.get("lambda_rel_max")?.f64()?,
                    lambda_step: s.get("lambda_step")?.positive_f64()?,
                    thresholds: parse_thresholds(s.opt("thresholds"))?,
                    bound_state,
                })
            }
            None => None,
        };

        let lengths = match root.opt("lengths") {
            Some(l) => Some(
                l.array()?
                    .iter()
                    .map(|x| x.positive_f64())
                    .collect::<Result<Vec<f64>, _>>()?,
            ),
            None => None,
        };

        let scan_reject_rel = match root.opt("scan_reject_rel") {
            Some(l) => Some(
                l.array()?
                    .iter()
                    .map(|x| x.f64())
                    .collect::<Result<Vec<f64>, _>>()?,
            ),
            None => None,
        };

        let harness = match root.opt("harness") {
            Some(h) => Some(HarnessSpec {
                seeds: h.get("seeds")?.usize()?,
                samples: h.get("samples")?.usize()?,
                max_size: h.get("max_size")?.usize()?,
            }),
            None => None,
        };

        let count_thresholds = match root.opt("count_thresholds") {
            Some(l) => l
                .array()?
                .iter()
                .map(|x| x.positive_f64())
                .collect::<Result<_, _>>()?,
            None => Vec::new(),
        };

        let export_metric = match root.opt("output").and_then(|o| o.opt("export_metric")) {
            Some(v) => v.bool()?,
            None => false,
        };

        // experiment-specific requirements
        match experiment {
            Experiment::Scan => {
                if scan.is_none() {
                    return Err(CliError::Schema {
                        pointer: "/scan".into(),
                        message: "scan experiments require the `scan` section".into(),
                    });
                }
            }
            Experiment::CounterexampleBend | Experiment::CounterexampleTwist => {
                if lengths.as_ref().is_none_or(|l| l.len() < 3) {
                    return Err(CliError::Schema {
                        pointer: "/lengths".into(),
                        message: "counterexample experiments need at least 3 truncation lengths"
                            .into(),
                    });
                }
            }
            Experiment::MatrixHarness => {
                if harness.is_none() {
                    return Err(CliError::Schema {
                        pointer: "/harness".into(),
                        message: "matrix_harness experiments require the `harness` section".into(),
                    });
                }
            }
            Experiment::Threshold => {}
        }

        Ok(Scenario {
            name,
            experiment,
            base,
            cross_section,
            base_cells,
            eigen,
            scan,
            lengths,
            scan_reject_rel,
            harness,
            count_thresholds,
            export_metric,
            raw,
        })
    }

    /// Truncation length along the first base axis.
    pub fn length(&self) -> f64 {
        match &self.base {
            BaseSpec::Curve { length, .. } => *length,
            BaseSpec::Graph { half_extent, .. } => 2.0 * half_extent,
        }
    }
}
