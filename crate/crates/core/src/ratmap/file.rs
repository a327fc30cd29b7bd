use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BirationalPair, RationalMap};
use crate::error::{Error, Result};
use crate::projalg::{HomoPoly, TermJson};

/// On-disk map description.
///
/// ```json
/// { "k": 2, "name": "henon", "forward": [[["1","1",[2,0,0]]], ...],
///   "inverse": [...], "metadata": {} }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub k: usize,
    pub name: String,
    pub forward: Vec<Vec<TermJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<Vec<Vec<TermJson>>>,
    #[serde(default)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

fn components(k: usize, polys: &[Vec<TermJson>]) -> Result<Vec<HomoPoly>> {
    if polys.len() != k + 1 {
        return Err(Error::Parse(format!("expected {} components, found {}", k + 1, polys.len())));
    }
    let degree = polys
        .iter()
        .find_map(|p| p.first().map(|t| t.2.iter().sum::<u32>()))
        .ok_or_else(|| Error::Parse("all components are empty".into()))?;
    polys.iter().map(|p| HomoPoly::from_json_terms(k, p, Some(degree))).collect()
}

fn serialize(m: &RationalMap) -> Vec<Vec<TermJson>> {
    m.components().iter().map(HomoPoly::to_json_terms).collect()
}

impl MapFile {
    pub fn from_map(m: &RationalMap) -> Self {
        MapFile {
            k: m.ambient(),
            name: m.name().to_string(),
            forward: serialize(m),
            inverse: None,
            metadata: Default::default(),
        }
    }

    pub fn from_pair(p: &BirationalPair) -> Self {
        let mut f = Self::from_map(&p.forward);
        f.inverse = Some(serialize(&p.inverse));
        f
    }

    pub fn forward(&self) -> Result<RationalMap> {
        RationalMap::new(self.name.clone(), components(self.k, &self.forward)?)
    }

    pub fn inverse(&self) -> Result<Option<RationalMap>> {
        self.inverse
            .as_ref()
            .map(|inv| RationalMap::new(format!("{}^-1", self.name), components(self.k, inv)?))
            .transpose()
    }

    /// The forward map and, when present, the verified pair.
    pub fn pair(&self) -> Result<Option<BirationalPair>> {
        match self.inverse()? {
            None => Ok(None),
            Some(inv) => Ok(Some(BirationalPair::new(self.forward()?, inv)?)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
