//! Run configuration and its TOML form.
//!
//! ```toml
//! [run]
//! method = "both"        # bubbles | spectral | both
//! d = 2
//! dt = 1e-3
//! t_final = 1.0
//! mu = 1.0
//! lambda = 1.0
//! testcase = 2           # 1 | 2 | 3 | "custom"
//! nx = 128
//! ny = 129
//! halfwidth = 15.0
//! svd_rtol = 1e-10
//! output = "out"
//! stride = 1
//!
//! [[bubbles]]            # read only when testcase = "custom"
//! A = 1.0
//! L = 1.0
//! B = 0.0
//! X = [0.0, 0.0]
//! beta = [0.0, 0.0]
//! gamma = 0.0
//! hermite = [[0, 0, 1.7724538509055159, 0.0]]   # optional, [n.., re, im]
//! ```
//!
//! Every key of `[run]` is optional; unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bubble::{BubbleEnsemble, BubbleRecord};
use crate::dfmp::DEFAULT_SVD_RTOL;
use crate::error::{Error, Result};

/// Which solver(s) a run advances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bubbles,
    Spectral,
    Both,
}

impl Method {
    pub fn uses_bubbles(self) -> bool {
        matches!(self, Method::Bubbles | Method::Both)
    }

    pub fn uses_spectral(self) -> bool {
        matches!(self, Method::Spectral | Method::Both)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bubbles" => Ok(Method::Bubbles),
            "spectral" => Ok(Method::Spectral),
            "both" => Ok(Method::Both),
            other => Err(Error::Config {
                field: "method",
                reason: format!("expected bubbles, spectral or both, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bubbles => "bubbles",
            Method::Spectral => "spectral",
            Method::Both => "both",
        })
    }
}

/// Initial data: one of the three presets or the `[[bubbles]]` list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TestCaseRepr", into = "TestCaseRepr")]
pub enum TestCase {
    Preset(u8),
    Custom,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TestCaseRepr {
    Id(i64),
    Name(String),
}

impl TryFrom<TestCaseRepr> for TestCase {
    type Error = String;

    fn try_from(r: TestCaseRepr) -> std::result::Result<Self, String> {
        match r {
            TestCaseRepr::Id(id @ 1..=3) => Ok(TestCase::Preset(id as u8)),
            TestCaseRepr::Name(s) if s == "custom" => Ok(TestCase::Custom),
            TestCaseRepr::Name(s) => s
                .parse::<i64>()
                .map_err(|_| format!("unknown test case `{s}`"))
                .and_then(|id| TestCase::try_from(TestCaseRepr::Id(id))),
            TestCaseRepr::Id(id) => Err(format!("unknown test case {id}")),
        }
    }
}

impl From<TestCase> for TestCaseRepr {
    fn from(t: TestCase) -> Self {
        match t {
            TestCase::Preset(id) => TestCaseRepr::Id(id as i64),
            TestCase::Custom => TestCaseRepr::Name("custom".into()),
        }
    }
}

impl FromStr for TestCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestCase::try_from(TestCaseRepr::Name(s.to_string())).map_err(Error::UnknownTestCase)
    }
}

/// Scalars of the `[run]` section plus the explicit ensemble, if any.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub d: usize,
    pub dt: f64,
    pub t_final: f64,
    pub mu: f64,
    pub lambda: f64,
    pub testcase: TestCase,
    pub nx: usize,
    pub ny: usize,
    pub halfwidth: f64,
    pub svd_rtol: f64,
    pub output: PathBuf,
    pub stride: usize,
    #[serde(skip)]
    pub bubbles: Vec<BubbleRecord>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Both,
            d: 2,
            dt: 1e-3,
            t_final: 1.0,
            mu: 1.0,
            lambda: 1.0,
            testcase: TestCase::Preset(1),
            nx: 128,
            ny: 129,
            halfwidth: 15.0,
            svd_rtol: DEFAULT_SVD_RTOL,
            output: PathBuf::from("out"),
            stride: 1,
            bubbles: Vec::new(),
        }
    }
}

/// On-disk layout: a `[run]` table and a `[[bubbles]]` array.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bubbles: Vec<BubbleRecord>,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Config {
        field,
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(s)?;
        let mut cfg = file.run;
        cfg.bubbles = file.bubbles;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let file = ConfigFile {
            run: self.clone(),
            bubbles: self.bubbles.clone(),
        };
        Ok(toml::to_string(&file)?)
    }

    /// Number of steps of size `dt`; `T/dt` within 1e-9 of an integer
    /// rounds to it, otherwise the remainder is dropped.
    pub fn step_count(&self) -> usize {
        let q = self.t_final / self.dt;
        let r = q.round();
        if (q - r).abs() <= 1e-9 * r.max(1.0) {
            r as usize
        } else {
            q.floor() as usize
        }
    }

    /// Rows written to each observables file.
    pub fn row_count(&self) -> usize {
        1 + self.step_count() / self.stride
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(invalid("t_final", format!("must be non-negative, got {}", self.t_final)));
        }
        if self.stride < 1 {
            return Err(invalid("stride", "must be at least 1"));
        }
        if !self.mu.is_finite() {
            return Err(invalid("mu", "must be finite"));
        }
        if !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be finite"));
        }
        if !(self.svd_rtol.is_finite() && self.svd_rtol > 0.0 && self.svd_rtol < 1.0) {
            return Err(invalid("svd_rtol", format!("must lie in (0, 1), got {}", self.svd_rtol)));
        }
        if self.d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        match self.testcase {
            TestCase::Preset(_) if self.d != 2 => {
                return Err(invalid("d", format!("test cases 1-3 live in d = 2, got {}", self.d)));
            }
            TestCase::Custom => {
                if self.bubbles.is_empty() {
                    return Err(invalid("bubbles", "testcase = \"custom\" needs at least one bubble"));
                }
                if let Some(r) = self.bubbles.iter().find(|r| r.center.len() != self.d) {
                    return Err(invalid(
                        "bubbles",
                        format!("bubble with {} coordinates in a d = {} run", r.center.len(), self.d),
                    ));
                }
            }
            _ => {}
        }
        if self.method.uses_spectral() && self.d > 2 {
            return Err(invalid("d", "the spectral reference supports d = 1 or 2"));
        }
        // the grid also receives the final bubble field when d <= 2
        if self.d <= 2 {
            if self.nx < 8 {
                return Err(invalid("nx", format!("need at least 8 points, got {}", self.nx)));
            }
            if self.d == 2 && self.ny < 8 {
                return Err(invalid("ny", format!("need at least 8 points, got {}", self.ny)));
            }
            if !(self.halfwidth.is_finite() && self.halfwidth > 0.0) {
                return Err(invalid("halfwidth", format!("must be positive, got {}", self.halfwidth)));
            }
        }
        Ok(())
    }

    /// Ensemble listed under `[[bubbles]]`.
    pub fn custom_ensemble(&self) -> Result<BubbleEnsemble> {
        let bubbles = self
            .bubbles
            .iter()
            .map(BubbleRecord::to_bubble)
            .collect::<Result<Vec<_>>>()?;
        BubbleEnsemble::new(self.d, bubbles)
    }
}
