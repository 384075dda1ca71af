//! Run configuration: a plain `key = value` file overridden by command line
//! flags.

use std::path::{Path, PathBuf};

use qpdg_core::problem::MANUFACTURED;

use crate::error::{Error, Result};
use crate::verify::SUITES;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtSetting {
    /// `Δt ≤ h^{p+1}`
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub preset: String,
    pub degrees: Vec<usize>,
    /// Number of mesh levels in a study.
    pub levels: usize,
    /// Mesh level of a single solve.
    pub level: usize,
    /// Cells per side of the level 0 mesh.
    pub base: usize,
    pub theta: i32,
    pub c_sigma: f64,
    pub dt: DtSetting,
    /// Final time; the preset's own value when absent.
    pub t_final: Option<f64>,
    pub out: PathBuf,
    pub seed: u64,
    /// Oswald constant; measured when absent.
    pub c3: Option<f64>,
    pub newton_tol: f64,
    /// Write one CSV per time step in `solve`.
    pub snapshots: bool,
    /// Verification suites to run; all of them when empty.
    pub suites: Vec<String>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            preset: "heat_decay".into(),
            degrees: vec![1, 2],
            levels: 3,
            level: 0,
            base: 4,
            theta: 0,
            c_sigma: 10.0,
            dt: DtSetting::Auto,
            t_final: None,
            out: PathBuf::from("out"),
            seed: 20_240_229,
            c3: None,
            newton_tol: 1e-10,
            snapshots: false,
            suites: Vec::new(),
        }
    }
}

fn parse_f64(field: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::config(field, format!("`{v}` is not a number")))
}

fn parse_usize(field: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::config(field, format!("`{v}` is not a nonnegative integer")))
}

fn parse_bool(field: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::config(field, format!("`{other}` is not a boolean"))),
    }
}

pub fn parse_degrees(v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_usize("p", s))
        .collect()
}

pub fn parse_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

pub fn parse_dt(v: &str) -> Result<DtSetting> {
    if v.trim() == "auto" {
        Ok(DtSetting::Auto)
    } else {
        parse_f64("dt", v).map(DtSetting::Fixed)
    }
}

pub fn parse_c3(v: &str) -> Result<Option<f64>> {
    if v.trim() == "auto" {
        Ok(None)
    } else {
        parse_f64("c3", v).map(Some)
    }
}

impl StudyConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "preset" => self.preset = value.to_string(),
            "p" | "degrees" => self.degrees = parse_degrees(value)?,
            "levels" => self.levels = parse_usize("levels", value)?,
            "level" => self.level = parse_usize("level", value)?,
            "base" => self.base = parse_usize("base", value)?,
            "theta" => {
                self.theta = value
                    .parse::<i32>()
                    .map_err(|_| Error::config("theta", format!("`{value}` is not an integer")))?
            }
            "c_sigma" | "c-sigma" => self.c_sigma = parse_f64("c_sigma", value)?,
            "dt" => self.dt = parse_dt(value)?,
            "t_final" | "t-final" => self.t_final = Some(parse_f64("t_final", value)?),
            "out" => self.out = PathBuf::from(value),
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::config("seed", format!("`{value}` is not a nonnegative integer")))?
            }
            "c3" => self.c3 = parse_c3(value)?,
            "newton_tol" | "newton-tol" => self.newton_tol = parse_f64("newton_tol", value)?,
            "snapshots" => self.snapshots = parse_bool("snapshots", value)?,
            "suites" => self.suites = parse_list(value),
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", n + 1), "expected `key = value`"))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::default();
        cfg.parse_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !MANUFACTURED.contains(&self.preset.as_str()) {
            return Err(Error::config(
                "preset",
                format!(
                    "unknown preset `{}` (expected one of {})",
                    self.preset,
                    MANUFACTURED.join(", ")
                ),
            ));
        }
        if self.degrees.is_empty() || self.degrees.iter().any(|&p| p == 0 || p > 8) {
            return Err(Error::config("p", "degrees must be between 1 and 8"));
        }
        if self.levels == 0 {
            return Err(Error::config("levels", "must be at least 1"));
        }
        if self.base == 0 {
            return Err(Error::config("base", "must be at least 1"));
        }
        if !(-1..=1).contains(&self.theta) {
            return Err(Error::config("theta", "must be -1, 0 or 1"));
        }
        if !(self.c_sigma > 1.0) || !self.c_sigma.is_finite() {
            return Err(Error::config("c_sigma", "must be greater than 1"));
        }
        if let DtSetting::Fixed(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::config("dt", "must be positive"));
            }
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::config("t_final", "must be positive"));
            }
        }
        if let Some(c3) = self.c3 {
            if !(c3 > 0.0) || !c3.is_finite() {
                return Err(Error::config("c3", "must be positive"));
            }
        }
        if let Some(bad) = self.suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
            return Err(Error::config(
                "suites",
                format!("unknown suite `{bad}` (expected some of {})", SUITES.join(", ")),
            ));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::config("newton_tol", "must be positive"));
        }
        Ok(())
    }

    /// Canonical `key = value` rendering (round-trips through [`Self::parse_str`]).
    pub fn render(&self) -> String {
        let degrees: Vec<String> = self.degrees.iter().map(|p| p.to_string()).collect();
        let mut s = String::new();
        s += &format!("preset = {}\n", self.preset);
        s += &format!("p = {}\n", degrees.join(","));
        s += &format!(
            "levels = {}\nlevel = {}\nbase = {}\n",
            self.levels, self.level, self.base
        );
        s += &format!("theta = {}\nc_sigma = {}\n", self.theta, self.c_sigma);
        match self.dt {
            DtSetting::Auto => s += "dt = auto\n",
            DtSetting::Fixed(v) => s += &format!("dt = {v}\n"),
        }
        if let Some(t) = self.t_final {
            s += &format!("t_final = {t}\n");
        }
        s += &format!("out = {}\nseed = {}\n", self.out.display(), self.seed);
        match self.c3 {
            None => s += "c3 = auto\n",
            Some(v) => s += &format!("c3 = {v}\n"),
        }
        s += &format!("newton_tol = {}\nsnapshots = {}\n", self.newton_tol, self.snapshots);
        s += &format!("suites = {}\n", self.suites.join(","));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        StudyConfig::default().validate().unwrap();
    }

    #[test]
    fn parse_and_render_round_trip() {
        let mut c = StudyConfig::default();
        c.parse_str("# study\npreset = quasilinear_smooth\np = 1, 2,3\nlevels=2\ndt = 0.001 # fixed\nc3 = 4.5\nsnapshots = yes\nsuites = oswald, coercivity\n")
            .unwrap();
        assert_eq!(c.preset, "quasilinear_smooth");
        assert_eq!(c.degrees, vec![1, 2, 3]);
        assert_eq!(c.dt, DtSetting::Fixed(0.001));
        assert_eq!(c.c3, Some(4.5));
        assert!(c.snapshots);
        assert_eq!(c.suites, vec!["oswald", "coercivity"]);
        let mut d = StudyConfig::default();
        d.parse_str(&c.render()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = StudyConfig::default();
        let e = c.parse_str("c_sigma = abc").unwrap_err();
        assert!(e.to_string().contains("c_sigma"));
        let e = c.parse_str("bogus = 1").unwrap_err();
        assert!(e.to_string().contains("bogus"));
        let e = c.parse_str("just text").unwrap_err();
        assert!(e.to_string().contains("line 1"));
        c.c_sigma = 0.5;
        assert!(c.validate().unwrap_err().to_string().contains("c_sigma"));
        let c = StudyConfig {
            preset: "nope".into(),
            ..StudyConfig::default()
        };
        assert!(c.validate().unwrap_err().to_string().contains("preset"));
        let c = StudyConfig {
            degrees: vec![0],
            ..StudyConfig::default()
        };
        assert!(c.validate().is_err());
        let c = StudyConfig {
            theta: 2,
            ..StudyConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
