//! The TOML run file: `[action]`, `[measure]`, `[walk]` and `[output]`.
//! Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use endwalk::chains::ChainParams;
use endwalk::measures::{
    example1_measure, example2_measure, heavy_tail_z2, AtomDoc, FamilyDoc, GroupMeasure, MeasureDoc, DEFAULT_TRUNCATION,
};
use endwalk::simulate::{default_checkpoints, CutSpec, Target, WalkConfig};
use endwalk::Action;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub action: ActionSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSection>,
    pub walk: WalkSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionKind {
    Thompson,
    Psi,
    PsiPrime,
    /// The chain on Z; takes `chain` parameters instead of a measure.
    Chain,
}

impl ActionKind {
    fn group_action(self) -> Option<Action> {
        match self {
            ActionKind::Thompson => Some(Action::Thompson),
            ActionKind::Psi => Some(Action::Psi),
            ActionKind::PsiPrime => Some(Action::PsiPrime),
            ActionKind::Chain => None,
        }
    }

    fn default_start(self) -> &'static str {
        match self {
            ActionKind::Thompson => "5/8",
            ActionKind::Psi => "(0,0)",
            ActionKind::PsiPrime => "(0,0,0)",
            ActionKind::Chain => "0",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSection {
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSection>,
}

/// [`ChainParams`] with strict keys.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChainSection {
    Counterexample {},
    Constant { p: f64, eps: f64 },
}

impl From<ChainSection> for ChainParams {
    fn from(c: ChainSection) -> Self {
        match c {
            ChainSection::Counterexample {} => ChainParams::Counterexample,
            ChainSection::Constant { p, eps } => ChainParams::Constant { p, eps },
        }
    }
}

fn default_alpha() -> f64 {
    1.5
}

fn default_radius() -> u64 {
    DEFAULT_TRUNCATION
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSection {
    // Empty braces rather than unit variants: serde lets unit variants of a
    // tagged enum ignore stray keys.
    /// Equal mass on every generator and inverse.
    Uniform {},
    Example1 {},
    Example2 {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_radius")]
        radius: u64,
    },
    HeavyTail {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_radius")]
        radius: u64,
    },
    /// A measure JSON document; relative paths start at the config file.
    File {
        path: PathBuf,
    },
    Inline {
        #[serde(default)]
        atoms: Vec<AtomDoc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        family: Option<FamilyDoc>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    pub steps: u64,
    pub trajectories: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default)]
    pub cuts: Vec<CutSpec>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also write `graph.dot`, the ball of this radius around the start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_radius: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(MeasureSection::File { path: p }) = &mut cfg.measure {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Fills every default and inlines measure files, so the result alone
    /// reproduces the run. The output directory is dropped: it does not
    /// affect any output.
    pub fn resolve(&self, seed: Option<u64>) -> Result<RunConfig, CliError> {
        let mut out = self.clone();
        out.output.dir = None;
        if let Some(s) = seed {
            out.walk.seed = s;
        }
        out.action.start = Some(self.start().to_string());
        out.walk.checkpoints = Some(
            self.walk
                .checkpoints
                .clone()
                .unwrap_or_else(|| default_checkpoints(self.walk.steps)),
        );
        match self.action.kind {
            ActionKind::Chain => {
                if self.measure.is_some() {
                    return Err(CliError::Config(
                        "the chain action takes [action].chain, not [measure]".into(),
                    ));
                }
                out.action.chain = Some(self.action.chain.unwrap_or(ChainSection::Counterexample {}));
            }
            _ => {
                if self.action.chain.is_some() {
                    return Err(CliError::Config(
                        "[action].chain only applies to kind = \"chain\"".into(),
                    ));
                }
                if let Some(MeasureSection::File { path }) = &self.measure {
                    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                    let doc = GroupMeasure::from_json(&text)?.to_doc();
                    out.measure = Some(MeasureSection::Inline {
                        atoms: doc.atoms,
                        family: doc.family,
                    });
                }
            }
        }
        Ok(out)
    }

    fn start(&self) -> &str {
        self.action.start.as_deref().unwrap_or(self.action.kind.default_start())
    }

    fn measure(&self, action: Action) -> Result<GroupMeasure, CliError> {
        let section = self
            .measure
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [measure] table".into()))?;
        let m = match section {
            MeasureSection::Uniform {} => GroupMeasure::uniform(action),
            MeasureSection::Example1 {} => example1_measure(),
            MeasureSection::Example2 { alpha, radius } => example2_measure(*alpha, *radius)?,
            MeasureSection::HeavyTail { alpha, radius } => heavy_tail_z2(*alpha, *radius)?,
            MeasureSection::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                GroupMeasure::from_json(&text)?
            }
            MeasureSection::Inline { atoms, family } => GroupMeasure::from_doc(&MeasureDoc {
                atoms: atoms.clone(),
                family: family.clone(),
            })?,
        };
        Ok(m)
    }

    /// The library configuration; call on a resolved config.
    pub fn walk_config(&self) -> Result<WalkConfig, CliError> {
        let target = match self.action.kind.group_action() {
            Some(action) => Target::Induced {
                measure: self.measure(action)?,
                start: action.parse_point(self.start())?,
            },
            None => Target::Chain {
                params: self.action.chain.map_or(ChainParams::Counterexample, ChainParams::from),
                start: self
                    .start()
                    .parse()
                    .map_err(|_| CliError::Config(format!("chain start `{}` is not an integer", self.start())))?,
            },
        };
        let mut cfg = WalkConfig::new(target, self.walk.steps, self.walk.trajectories, self.walk.seed)
            .with_cuts(self.walk.cuts.clone());
        if let Some(c) = &self.walk.checkpoints {
            cfg = cfg.with_checkpoints(c.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
