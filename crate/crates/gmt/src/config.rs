//! Run configuration: a JSON file plus command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gmt_core::field::{Aabb, AnalyticMap};
use gmt_core::gallery;
use gmt_core::verify::interior_figure;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Core(#[from] gmt_core::Error),
    #[error("unknown check id `{0}` (see --list)")]
    UnknownCheck(String),
    #[error("bad region `{0}`")]
    Region(String),
    #[error("bad resolutions {0:?}: need an increasing list of 2^a 3^b values >= 2")]
    Resolutions(Vec<usize>),
    #[error("entry ({0}, {1}) out of range 1..=3")]
    Entry(usize, usize),
    #[error("no map given")]
    NoMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    Inverse,
    AdjugateDegree,
    GradientDegree,
    AcPart,
    Hypothesis,
}

impl CheckId {
    pub const ALL: [CheckId; 5] =
        [CheckId::Inverse, CheckId::AdjugateDegree, CheckId::GradientDegree, CheckId::AcPart, CheckId::Hypothesis];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::Inverse => "inverse",
            CheckId::AdjugateDegree => "adjugate-degree",
            CheckId::GradientDegree => "gradient-degree",
            CheckId::AcPart => "ac-part",
            CheckId::Hypothesis => "hypothesis",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            CheckId::Inverse => "Adj Df(U) against the degree-weighted derivative of the inverse on f(U)",
            CheckId::AdjugateDegree => "Adj_ij Df(Q) against the integral of the degree of (f_j', f_j'', x_i)",
            CheckId::GradientDegree => "D_3 u(U) against the integral of the degree of (x1, x2, u) with u = f_3",
            CheckId::AcPart => "a.c. density of Adj Df against adj(Df); singular mass reported",
            CheckId::Hypothesis => "exponent, smoothness and finite-area antecedents",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        CheckId::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| ConfigError::UnknownCheck(s.into()))
    }
}

/// The configuration file as written by users.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub map: Option<String>,
    /// `auto`, `unit`, `interior:<m>` or `box:<lo1>,<lo2>,<lo3>,<hi1>,<hi2>,<hi3>`;
    /// several regions joined by `;` form a figure.
    #[serde(default)]
    pub region: Option<String>,
    /// Base resolution; the schedule is `[n, 2n]` unless `resolutions` is set.
    #[serde(default, alias = "N")]
    pub n: Option<usize>,
    #[serde(default)]
    pub resolutions: Option<Vec<usize>>,
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    /// One-based matrix entries; all nine by default.
    #[serde(default)]
    pub entries: Option<Vec<[usize; 2]>>,
    /// Relative tolerance per check id.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Slice layers per axis for the finite-area evidence.
    #[serde(default)]
    pub layers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Flag overrides; `None` keeps the file's value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub map: Option<String>,
    pub checks: Vec<String>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn apply(&mut self, o: Overrides) {
        if o.map.is_some() {
            self.map = o.map;
        }
        if !o.checks.is_empty() {
            self.checks = Some(o.checks);
        }
        if o.n.is_some() {
            self.n = o.n;
            self.resolutions = None;
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.out.is_some() {
            self.out = o.out;
        }
    }

    pub fn resolve(&self) -> Result<Plan, ConfigError> {
        let id = self.map.as_deref().ok_or(ConfigError::NoMap)?;
        let map = gallery::map3(id)?;
        let singular = !map.support.is_empty();
        let resolutions = match (&self.resolutions, self.n) {
            (Some(r), _) => r.clone(),
            (None, Some(n)) => vec![n, 2 * n],
            (None, None) if singular => vec![243, 486],
            (None, None) => vec![32, 64],
        };
        if resolutions.is_empty() || !resolutions.iter().all(|&r| r >= 2 && smooth_number(r)) || resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::Resolutions(resolutions));
        }
        let checks = match &self.checks {
            Some(c) => c.iter().map(|s| s.parse()).collect::<Result<Vec<CheckId>, _>>()?,
            None => vec![CheckId::Inverse],
        };
        let entries = match &self.entries {
            Some(e) => e
                .iter()
                .map(|&[i, j]| if (1..=3).contains(&i) && (1..=3).contains(&j) { Ok((i - 1, j - 1)) } else { Err(ConfigError::Entry(i, j)) })
                .collect::<Result<Vec<_>, _>>()?,
            None => (0..9).map(|k| (k / 3, k % 3)).collect(),
        };
        for key in self.tolerances.keys() {
            key.parse::<CheckId>()?;
        }
        let spec = self.region.clone().unwrap_or_else(|| "auto".into());
        let (figure, whole) = parse_region(&spec, &map)?;
        Ok(Plan {
            map,
            region: spec,
            figure,
            whole,
            resolutions,
            checks,
            entries,
            tolerances: self.tolerances.clone(),
            layers: self.layers.unwrap_or(4),
            seed: self.seed.unwrap_or(0),
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("gmt-out")),
        })
    }
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Plan {
    pub map: AnalyticMap,
    pub region: String,
    /// Boxes for the figure-based checks.
    pub figure: Vec<Aabb<3>>,
    /// Box for the a.c.-part and hypothesis checks.
    pub whole: Aabb<3>,
    pub resolutions: Vec<usize>,
    pub checks: Vec<CheckId>,
    /// Zero-based.
    pub entries: Vec<(usize, usize)>,
    pub tolerances: BTreeMap<String, f64>,
    pub layers: usize,
    pub seed: u64,
    pub out: PathBuf,
}

fn smooth_number(mut n: usize) -> bool {
    for p in [2, 3] {
        while n % p == 0 {
            n /= p;
        }
    }
    n == 1
}

/// `auto` is the unit cube, except that maps with singular support use the
/// interior figure at `m = 2` for the figure-based checks.
pub fn parse_region(spec: &str, map: &AnalyticMap) -> Result<(Vec<Aabb<3>>, Aabb<3>), ConfigError> {
    let bad = || ConfigError::Region(spec.into());
    if spec == "auto" {
        let fig = if map.support.is_empty() { vec![Aabb::unit()] } else { interior_figure(2) };
        return Ok((fig, Aabb::unit()));
    }
    let mut figure = Vec::new();
    for part in spec.split(';').map(str::trim) {
        match part.split_once(':') {
            None if part == "unit" => figure.push(Aabb::unit()),
            Some(("interior", m)) => {
                let m: u32 = m.parse().map_err(|_| bad())?;
                if !(1..=8).contains(&m) {
                    return Err(bad());
                }
                figure.extend(interior_figure(m));
            }
            Some(("box", v)) => {
                let v: Vec<f64> = v.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
                if v.len() != 6 {
                    return Err(bad());
                }
                figure.push(Aabb::new([v[0], v[1], v[2]], [v[3], v[4], v[5]]).map_err(|_| bad())?);
            }
            _ => return Err(bad()),
        }
    }
    let whole = gmt_core::verify::figure_bounds(&figure);
    Ok((figure, whole))
}

/// Gallery ids accepted by `map`.
pub fn map_ids() -> Vec<&'static str> {
    gallery::ids().into_iter().filter(|id| gallery::map3(id).is_ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_map() {
        let c = RunConfig { map: Some("cantor_shear".into()), ..Default::default() };
        let p = c.resolve().unwrap();
        assert_eq!(p.resolutions, vec![243, 486]);
        assert_eq!(p.figure.len(), 2);
        assert_eq!(p.whole, Aabb::unit());
        let c: RunConfig = serde_json::from_str(r#"{"map": "identity", "N": 32, "checks": ["inverse"]}"#).unwrap();
        let p = c.resolve().unwrap();
        assert_eq!(p.resolutions, vec![32, 64]);
        assert_eq!(p.entries.len(), 9);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |json: &str| serde_json::from_str::<RunConfig>(json).map_err(ConfigError::from).and_then(|c| c.resolve());
        assert!(matches!(bad(r#"{"map": "nope"}"#), Err(ConfigError::Core(gmt_core::Error::UnknownId(_)))));
        assert!(matches!(bad(r#"{"map": "identity", "n": 10}"#), Err(ConfigError::Resolutions(_))));
        assert!(matches!(bad(r#"{"map": "identity", "checks": ["thm9"]}"#), Err(ConfigError::UnknownCheck(_))));
        assert!(matches!(bad(r#"{"map": "identity", "region": "ball"}"#), Err(ConfigError::Region(_))));
        assert!(matches!(bad(r#"{"map": "identity", "entries": [[0, 1]]}"#), Err(ConfigError::Entry(0, 1))));
        assert!(bad(r#"{"map": "identity", "colour": 1}"#).is_err());
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut c = RunConfig { map: Some("identity".into()), resolutions: Some(vec![8, 16]), ..Default::default() };
        c.apply(Overrides { n: Some(4), checks: vec!["ac-part".into()], ..Default::default() });
        let p = c.resolve().unwrap();
        assert_eq!(p.resolutions, vec![4, 8]);
        assert_eq!(p.checks, vec![CheckId::AcPart]);
        let (fig, whole) = parse_region("box:0,0,0,0.5,1,1; box:0.5,0,0,1,1,1", &p.map).unwrap();
        assert_eq!(fig.len(), 2);
        assert_eq!(whole, Aabb::unit());
    }
}
