//! JSON files written by `search` and `post`.

use serde::{Deserialize, Serialize};
use trisub::geometry::{LatticePoint, RigidMotion};
use trisub::postprocess::{least_orientation, Postprocessed};
use trisub::problem::Problem;
use trisub::search::{RawResult, ResultTile};
use trisub::{Error, Result};

use crate::config::CampaignConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    Complete,
    Truncated,
    /// The substitution matrix was inadmissible and the search was forced anyway.
    NoResults,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchivedTile {
    pub proto: u32,
    pub rot: u32,
    pub flip: bool,
    pub shift: LatticePoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchivedResult {
    pub starter_class: u32,
    pub tiles: Vec<ArchivedTile>,
    /// Least edge orientation under which the result's own edges match.
    pub orientation: Option<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrototileResults {
    pub angles: [u32; 3],
    pub results: Vec<ArchivedResult>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultArchive {
    pub schema: u32,
    pub config: CampaignConfig,
    pub status: SearchStatus,
    pub prototiles: Vec<PrototileResults>,
}

impl ResultArchive {
    pub fn new(
        problem: &Problem,
        config: &CampaignConfig,
        status: SearchStatus,
        results: &[RawResult],
    ) -> Result<Self> {
        let mut prototiles: Vec<PrototileResults> = config
            .prototiles
            .iter()
            .map(|&angles| PrototileResults {
                angles,
                results: Vec::new(),
            })
            .collect();
        for r in results {
            let slot = prototiles
                .get_mut(r.t0 as usize)
                .ok_or_else(|| Error::Archive(format!("result for unknown prototile {}", r.t0)))?;
            slot.results.push(ArchivedResult {
                starter_class: r.starter_class,
                tiles: r
                    .tiles
                    .iter()
                    .map(|t| ArchivedTile {
                        proto: t.proto,
                        rot: t.motion.rot,
                        flip: t.motion.flip,
                        shift: t.motion.shift,
                    })
                    .collect(),
                orientation: least_orientation(problem, r)?,
            });
        }
        Ok(ResultArchive {
            schema: SCHEMA_VERSION,
            config: config.clone(),
            status,
            prototiles,
        })
    }

    pub fn results(&self) -> Vec<RawResult> {
        let mut out = Vec::new();
        for (t0, p) in self.prototiles.iter().enumerate() {
            for r in &p.results {
                out.push(RawResult {
                    t0: t0 as u32,
                    starter_class: r.starter_class,
                    tiles: r
                        .tiles
                        .iter()
                        .map(|t| ResultTile {
                            proto: t.proto,
                            motion: RigidMotion {
                                rot: t.rot,
                                flip: t.flip,
                                shift: t.shift,
                            },
                        })
                        .collect(),
                });
            }
        }
        out
    }

    pub fn emit(&self) -> String {
        to_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let a: ResultArchive = from_json(text)?;
        check_schema(a.schema)?;
        if a.prototiles.len() != a.config.prototiles.len()
            || a.prototiles
                .iter()
                .zip(&a.config.prototiles)
                .any(|(p, c)| p.angles != *c)
        {
            return Err(Error::Archive(
                "prototile lists of config and results differ".into(),
            ));
        }
        let count = a.prototiles.len() as u32;
        if a.prototiles
            .iter()
            .flat_map(|p| &p.results)
            .flat_map(|r| &r.tiles)
            .any(|t| t.proto >= count)
        {
            return Err(Error::Archive("tile of unknown prototile".into()));
        }
        Ok(a)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamiliesFile {
    pub schema: u32,
    pub config: CampaignConfig,
    /// Copied from the archive; families of a truncated search may be incomplete.
    pub status: SearchStatus,
    pub post: Postprocessed,
}

impl FamiliesFile {
    pub fn emit(&self) -> String {
        to_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let f: FamiliesFile = from_json(text)?;
        check_schema(f.schema)?;
        Ok(f)
    }
}

/// Either kind of file, told apart by its fields.
#[derive(Clone, Debug)]
pub enum Input {
    Archive(ResultArchive),
    Families(FamiliesFile),
}

impl Input {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Archive(format!("{}: {e}", path.display())))?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Archive(e.to_string()))?;
        if v.get("post").is_some() {
            FamiliesFile::parse(&text).map(Input::Families)
        } else {
            ResultArchive::parse(&text).map(Input::Archive)
        }
    }

    pub fn config(&self) -> &CampaignConfig {
        match self {
            Input::Archive(a) => &a.config,
            Input::Families(f) => &f.config,
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("archive types serialize");
    s.push('\n');
    s
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Archive(e.to_string()))
}

fn check_schema(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Archive(format!(
            "schema version {v}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}
