//! Run configuration: built-in defaults, an optional JSON file and flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use birat::currents::{ChartBox, DEFAULT_SMOOTHING};
use birat::indeterminacy::RegionsConfig;
use birat::ratmap::{BirationalPair, MapFile, RationalMap, DEFAULT_EPS_IND};
use birat::zoo::{self, ZooParams};
use birat::{Error, Result};

use crate::Common;

/// Contents of a `--config` file. Every field is optional.
///
/// ```json
/// { "seed": 7, "depth": 20, "res": 64, "box": [-3, 3], "samples": 10000,
///   "smoothing": 2, "eps_ind": 1e-12, "out": "runs/henon" }
/// ```
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub depth: Option<u32>,
    pub res: Option<usize>,
    #[serde(rename = "box")]
    pub bbox: Option<[f64; 2]>,
    pub samples: Option<usize>,
    pub smoothing: Option<usize>,
    pub eps_ind: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Resolved settings, recorded in the manifest of every run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub depth: u32,
    pub res: usize,
    #[serde(rename = "box")]
    pub bbox: [f64; 2],
    /// `None` means the command's own default.
    pub samples: Option<usize>,
    pub smoothing: usize,
    pub eps_ind: f64,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

pub const DEFAULT_DEPTH: u32 = 20;
pub const DEFAULT_RES: usize = 64;
pub const DEFAULT_BOX: [f64; 2] = [-3.0, 3.0];

fn parse_box(s: &str) -> Result<[f64; 2]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Usage(format!("bad box bound {t:?}"))))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [lo, hi] => Ok([*lo, *hi]),
        _ => Err(Error::Usage("box must be given as lo,hi".into())),
    }
}

impl RunConfig {
    pub fn resolve(common: &Common, command: &str) -> Result<Self> {
        let file = match &common.config {
            Some(p) => serde_json::from_str::<ConfigFile>(&std::fs::read_to_string(p)?)?,
            None => ConfigFile::default(),
        };
        let env_seed = match std::env::var("BIRAT_SEED") {
            Ok(s) => Some(s.trim().parse::<u64>().map_err(|_| Error::Usage(format!("BIRAT_SEED={s:?} is not an integer")))?),
            Err(_) => None,
        };
        let bbox = match &common.bbox {
            Some(s) => parse_box(s)?,
            None => file.bbox.unwrap_or(DEFAULT_BOX),
        };
        let cfg = RunConfig {
            seed: common.seed.or(file.seed).or(env_seed).unwrap_or(0),
            depth: common.depth.or(file.depth).unwrap_or(DEFAULT_DEPTH),
            res: common.res.or(file.res).unwrap_or(DEFAULT_RES),
            bbox,
            samples: common.samples.or(file.samples),
            smoothing: file.smoothing.unwrap_or(DEFAULT_SMOOTHING),
            eps_ind: common.eps_ind.or(file.eps_ind).unwrap_or(DEFAULT_EPS_IND),
            out: common.out.clone().or(file.out).unwrap_or_else(|| Path::new("birat-out").join(command)),
            threads: common.threads.or(file.threads),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let [lo, hi] = self.bbox;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Usage("box needs lo < hi".into()));
        }
        if self.depth == 0 || self.res == 0 || self.samples == Some(0) || self.threads == Some(0) {
            return Err(Error::Usage("depth, res, samples and threads must be positive".into()));
        }
        if !(self.eps_ind > 0.0) {
            return Err(Error::Usage("eps-ind must be positive".into()));
        }
        Ok(())
    }

    pub fn chart_box(&self) -> ChartBox {
        ChartBox::cube(self.bbox[0], self.bbox[1])
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }
}

/// The map a command works on.
pub struct Loaded {
    pub name: String,
    /// Zoo parameters or the map file path.
    pub source: serde_json::Value,
    pub map: RationalMap,
    pub pair: Option<BirationalPair>,
    pub regions: Option<RegionsConfig>,
}

impl Loaded {
    pub fn pair(&self) -> Result<&BirationalPair> {
        self.pair
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("{} has no inverse; this command needs a birational pair", self.name)))
    }

    pub fn regions(&self) -> Result<&RegionsConfig> {
        self.regions
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("no region configuration for {}; pass --regions", self.name)))
    }
}

fn zoo_params(common: &Common) -> Result<ZooParams> {
    let mut p = ZooParams::default();
    if let Some(d) = common.d {
        p = p.with_d(d);
    }
    if let Some(a) = &common.a {
        p = p.with_a(a)?;
    }
    if let Some(s) = &common.poly {
        let coeffs: Vec<&str> = s.split(',').map(str::trim).collect();
        p = p.with_p(&coeffs)?;
    }
    if let Some(s) = &common.matrix {
        let rows = s
            .split(';')
            .map(|r| r.split(',').map(|c| birat::projalg::parse_rational(c.trim())).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        p.matrix = Some(rows);
    }
    Ok(p)
}

pub fn load(common: &Common) -> Result<Loaded> {
    let (name, source, map, pair, bundled) = match (&common.zoo, &common.map) {
        (Some(z), None) => {
            let params = zoo_params(common)?;
            let e = zoo::zoo(z, &params)?;
            // the bundled regions are only valid for the default quadratic family
            let default_family = params.d == 2 && params.p.is_none() && {
                let a = params.a.clone();
                let bound = birat::projalg::parse_rational("3/10").expect("constant");
                a <= bound && -a <= bound
            };
            let bundled = if default_family { zoo::bundled_regions(z) } else { None };
            let source = serde_json::json!({ "zoo": z, "params": e.params });
            (e.name, source, e.map, e.pair, bundled)
        }
        (None, Some(path)) => {
            let f = MapFile::read(path)?;
            let pair = f.pair()?;
            if let Some(p) = &pair {
                if !p.verified {
                    return Err(Error::InvalidMap(format!("the inverse in {} does not invert the map", path.display())));
                }
            }
            let source = serde_json::json!({ "file": path.display().to_string() });
            (f.name.clone(), source, f.forward()?, pair, None)
        }
        _ => return Err(Error::Usage("give exactly one of --zoo NAME or --map FILE".into())),
    };
    let regions = match &common.regions {
        Some(p) => Some(RegionsConfig::from_json(&std::fs::read_to_string(p)?)?),
        None => bundled,
    };
    Ok(Loaded { name, source, map, pair, regions })
}
