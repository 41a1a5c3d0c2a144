//! Study configuration files and the resolved run plan.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{MeshSource, Norm, StudyOptions};
use crate::assembly::Execution;
use crate::error::{Error, Result};
use crate::linalg::DEFAULT_TOL;
use crate::problems::{builtin_with_omega, default_omega, Problem, BUILTIN_NAMES};
use crate::spaces::ElementPair;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub refinements: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Degree for assembling the system; default `2 max(k, m) + 2`.
    pub assembly: Option<usize>,
    /// Degree for error integrals and projections; default `2 order + 8`.
    pub error: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub csv: bool,
    pub markdown: bool,
    pub vtk: bool,
    pub gnuplot: bool,
    pub matrix_market: bool,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            csv: true,
            markdown: true,
            vtk: false,
            gnuplot: false,
            matrix_market: false,
            json: false,
        }
    }
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn yes() -> bool {
    true
}

/// A study or solve request as stored on disk.
///
/// `flux`/`scalar` name one pair; `pairs` lists several (`"RT1/P2"`).
/// `omega` and `omegas` work the same way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omegas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshConfig>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default = "yes")]
    pub gate: bool,
    #[serde(default)]
    pub postprocess: bool,
    #[serde(default)]
    pub sequential: bool,
    /// Replaces predicted rates, keyed by norm (`"div_pi_q"`, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expected_overrides: BTreeMap<Norm, f64>,
    /// Norm shown side by side across runs in the markdown output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<Norm>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            problem: "smooth1".into(),
            flux: None,
            scalar: None,
            pairs: Vec::new(),
            omega: None,
            omegas: Vec::new(),
            levels: None,
            mesh: None,
            quadrature: QuadratureConfig::default(),
            tol: DEFAULT_TOL,
            outputs: OutputConfig::default(),
            gate: true,
            postprocess: false,
            sequential: false,
            expected_overrides: BTreeMap::new(),
            compare: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub problem: Option<String>,
    pub flux: Option<String>,
    pub scalar: Option<String>,
    pub omega: Option<f64>,
    pub levels: Option<Vec<usize>>,
    pub mesh: Option<PathBuf>,
    pub refinements: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub no_gate: bool,
    pub sequential: bool,
    pub postprocess: bool,
    pub vtk: bool,
    pub gnuplot: bool,
    pub matrix_market: bool,
}

pub const DEFAULT_LEVELS: [usize; 5] = [4, 8, 16, 32, 64];

pub fn parse_levels(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad level `{t}` in `{s}`")))
        })
        .collect()
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<StudyConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<StudyConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.problem {
            self.problem = p.clone();
        }
        if o.flux.is_some() || o.scalar.is_some() {
            let (f0, s0) = self.single_pair_parts();
            self.flux = o.flux.clone().or(f0);
            self.scalar = o.scalar.clone().or(s0);
            self.pairs.clear();
        }
        if let Some(w) = o.omega {
            self.omega = Some(w);
            self.omegas.clear();
        }
        if let Some(l) = &o.levels {
            self.levels = Some(l.clone());
            self.mesh = None;
        }
        if let Some(m) = &o.mesh {
            self.mesh = Some(MeshConfig {
                path: m.clone(),
                refinements: o
                    .refinements
                    .unwrap_or(self.mesh.as_ref().map_or(0, |m| m.refinements)),
            });
            self.levels = None;
        } else if let (Some(r), Some(m)) = (o.refinements, self.mesh.as_mut()) {
            m.refinements = r;
        }
        if let Some(t) = o.tol {
            self.tol = t;
        }
        if let Some(d) = &o.out {
            self.outputs.dir = Some(d.clone());
        }
        self.gate &= !o.no_gate;
        self.sequential |= o.sequential;
        self.postprocess |= o.postprocess;
        self.outputs.vtk |= o.vtk;
        self.outputs.gnuplot |= o.gnuplot;
        self.outputs.matrix_market |= o.matrix_market;
    }

    /// Flux and scalar of the only pair in the file, if there is one.
    fn single_pair_parts(&self) -> (Option<String>, Option<String>) {
        if let [p] = self.pairs.as_slice() {
            if let Some((f, s)) = p.split_once('/') {
                return (Some(f.to_string()), Some(s.to_string()));
            }
        }
        (self.flux.clone(), self.scalar.clone())
    }

    /// Validates the configuration and expands it into concrete runs.
    pub fn plan(&self) -> Result<RunPlan> {
        if !BUILTIN_NAMES.contains(&self.problem.as_str()) {
            return Err(Error::UnknownProblem(self.problem.clone()));
        }
        let mut pairs = Vec::new();
        match (&self.flux, &self.scalar) {
            (Some(f), Some(s)) => pairs.push(ElementPair::from_descriptors(f, s)?),
            (None, None) => {}
            _ => {
                return Err(Error::Config(
                    "`flux` and `scalar` must be given together".into(),
                ))
            }
        }
        for p in &self.pairs {
            pairs.push(p.parse()?);
        }
        if pairs.is_empty() {
            return Err(Error::Config(
                "no element pair given (flux + scalar, or pairs)".into(),
            ));
        }
        let mut omegas: Vec<f64> = self
            .omega
            .into_iter()
            .chain(self.omegas.iter().copied())
            .collect();
        if omegas.is_empty() {
            omegas.push(default_omega(&self.problem)?);
        }
        if let Some(w) = omegas.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Config(format!(
                "omega must be finite and non-negative, got {w}"
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        let meshes = match (&self.levels, &self.mesh) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `levels` or `mesh`, not both".into(),
                ))
            }
            (None, Some(m)) => MeshSource::File {
                path: m.path.clone(),
                refinements: m.refinements,
            },
            (levels, None) => {
                let levels = levels.clone().unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
                if levels.is_empty() || levels.contains(&0) {
                    return Err(Error::Config("levels must be positive".into()));
                }
                if levels.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config(format!(
                        "levels must be strictly increasing, got {levels:?}"
                    )));
                }
                MeshSource::Structured(levels)
            }
        };
        let options = StudyOptions {
            solver_tol: self.tol,
            gate: self.gate,
            postprocess: self.postprocess,
            execution: if self.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
            assembly_degree: self.quadrature.assembly,
            error_degree: self.quadrature.error,
            expected_overrides: self.expected_overrides.clone(),
            ..Default::default()
        };
        let runs = pairs
            .iter()
            .flat_map(|&pair| omegas.iter().map(move |&omega| Run { pair, omega }))
            .collect();
        Ok(RunPlan {
            problem: self.problem.clone(),
            runs,
            meshes,
            options,
            outputs: self.outputs.clone(),
            compare: self.compare,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Run {
    pub pair: ElementPair,
    pub omega: f64,
}

/// Fully resolved work description; two configs describing the same work
/// have the same plan hash.
#[derive(Clone, Debug, Serialize)]
pub struct RunPlan {
    pub problem: String,
    pub runs: Vec<Run>,
    pub meshes: MeshSource,
    pub options: StudyOptions,
    pub outputs: OutputConfig,
    pub compare: Option<Norm>,
}

impl RunPlan {
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("plan serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn problem_for(&self, run: &Run) -> Result<Problem> {
        builtin_with_omega(&self.problem, run.omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table4() -> StudyConfig {
        StudyConfig {
            flux: Some("BDM1".into()),
            scalar: Some("P2".into()),
            omegas: vec![0.0, 1.0],
            levels: Some(vec![4, 8, 16]),
            compare: Some(Norm::SuperDivQ),
            ..Default::default()
        }
    }

    #[test]
    fn round_trip_preserves_plan() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let mut cfg = table4();
        cfg.expected_overrides.insert(Norm::U, 2.5);
        cfg.quadrature.error = Some(12);
        cfg.save(&path).unwrap();
        let back = StudyConfig::load(&path).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.plan().unwrap().hash(), cfg.plan().unwrap().hash());
        let mut other = cfg.clone();
        other.tol = 1e-12;
        assert_ne!(other.plan().unwrap().hash(), cfg.plan().unwrap().hash());
    }

    #[test]
    fn expands_pairs_and_omegas() {
        let plan = table4().plan().unwrap();
        assert_eq!(plan.runs.len(), 2);
        assert_eq!(plan.runs[0].omega, 0.0);
        let cfg = StudyConfig {
            problem: "singular".into(),
            pairs: vec!["RT0/P1".into(), "BDM2/P2".into()],
            ..Default::default()
        };
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.runs.len(), 2);
        assert_eq!(plan.runs[1].omega, 0.0);
        assert_eq!(plan.meshes, MeshSource::Structured(DEFAULT_LEVELS.to_vec()));
    }

    #[test]
    fn validation() {
        let bad = |f: &dyn Fn(&mut StudyConfig)| {
            let mut c = table4();
            f(&mut c);
            c.plan().unwrap_err()
        };
        assert!(matches!(
            bad(&|c| c.levels = Some(vec![8, 4, 16])),
            Error::Config(_)
        ));
        assert!(matches!(
            bad(&|c| c.flux = Some("RT9x".into())),
            Error::UnknownSpace(_)
        ));
        assert!(matches!(
            bad(&|c| c.problem = "nope".into()),
            Error::UnknownProblem(_)
        ));
        assert!(matches!(
            bad(&|c| c.omegas = vec![f64::NAN]),
            Error::Config(_)
        ));
        assert!(matches!(bad(&|c| c.scalar = None), Error::Config(_)));
        assert!(matches!(bad(&|c| c.tol = 0.0), Error::Config(_)));
        assert!(StudyConfig::from_json(r#"{"problem": "smooth1", "bogus": 1}"#).is_err());
    }

    #[test]
    fn flags_win() {
        let mut c = table4();
        c.apply(&Overrides {
            scalar: Some("P1".into()),
            omega: Some(2.0),
            levels: Some(vec![2, 4, 8]),
            no_gate: true,
            ..Default::default()
        });
        let plan = c.plan().unwrap();
        assert_eq!(plan.runs.len(), 1);
        assert_eq!(plan.runs[0].pair.to_string(), "BDM1/P1");
        assert_eq!(plan.runs[0].omega, 2.0);
        assert!(!plan.options.gate);
        assert_eq!(parse_levels("4, 8,16").unwrap(), vec![4, 8, 16]);
        assert!(parse_levels("4,x").is_err());
    }

    #[test]
    fn overrides_parse_by_norm_key() {
        let c = StudyConfig::from_json(
            r#"{"problem": "smooth1", "pairs": ["RT0/P1"], "expected_overrides": {"div_pi_q": 5.0}}"#,
        )
        .unwrap();
        assert_eq!(c.expected_overrides.get(&Norm::SuperDivQ), Some(&5.0));
    }
}
