//! Experiment configuration: a TOML document with the sections `grid`,
//! `operator`, `source`, `weight`, `initial`, `solver`, `sweep`. Every key is
//! optional at parse time; each subcommand asks for the keys it needs and the
//! error names the missing one. Environment variables
//! `MIXFUJITA_<SECTION>_<KEY>` override file values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datum::{InitialDatum, Shape};
use crate::error::{Error, Result};
use crate::nonlinearity::{Family, SourceTerm, TimeWeight};
use crate::solver::{SolverConfig, DEFAULT_BLOW_THRESHOLD};
use crate::spectral::{operator_symbol, Grid, OperatorSpec};

pub const ENV_PREFIX: &str = "MIXFUJITA_";

/// Known `(section, key)` pairs.
pub const KEYS: &[(&str, &str)] = &[
    ("grid", "dim"),
    ("grid", "half_width"),
    ("grid", "points"),
    ("operator", "s"),
    ("source", "family"),
    ("source", "p"),
    ("weight", "family"),
    ("weight", "c"),
    ("weight", "rho"),
    ("initial", "shape"),
    ("initial", "amplitude"),
    ("initial", "width"),
    ("solver", "dt_initial"),
    ("solver", "dt_min"),
    ("solver", "t_max"),
    ("solver", "blow_threshold"),
    ("solver", "picard_sweeps"),
    ("solver", "dealias"),
    ("sweep", "p_min"),
    ("sweep", "p_max"),
    ("sweep", "p_steps"),
    ("sweep", "amplitudes"),
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_initial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blow_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard_sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dealias: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn missing(key: &str) -> Error {
    Error::InvalidConfig(format!("missing required key {key}"))
}

fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T> {
    v.clone().ok_or_else(|| missing(key))
}

/// Parses a raw override the way TOML would read it, falling back to a string.
fn override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies `MIXFUJITA_<SECTION>_<KEY>` overrides to a parsed document.
pub fn apply_overrides<I>(table: &mut toml::Table, env: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (name, raw) in vars {
        let rest = name[ENV_PREFIX.len()..].to_ascii_lowercase();
        let (section, key) = KEYS
            .iter()
            .find(|(s, k)| rest == format!("{s}_{k}"))
            .ok_or_else(|| Error::InvalidConfig(format!("environment override {name} names no known key")))?;
        let entry = table
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(sec) = entry else {
            return Err(Error::InvalidConfig(format!("{section} is not a section")));
        };
        sec.insert(key.to_string(), override_value(&raw));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_env(text, std::iter::empty())
    }

    pub fn from_toml_with_env<I>(text: &str, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        apply_overrides(&mut table, env)?;
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))
    }

    /// Reads a file and applies overrides from the process environment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_with_env(&text, std::env::vars())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn dim(&self) -> Result<usize> {
        let dim = need(&self.grid.as_ref().and_then(|g| g.dim), "grid.dim")?;
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidConfig(format!("grid.dim must be 1 or 2, got {dim}")));
        }
        Ok(dim)
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = self.grid.clone().unwrap_or_default();
        Grid::new(
            self.dim()?,
            need(&g.half_width, "grid.half_width")?,
            need(&g.points, "grid.points")?,
        )
    }

    /// `operator.s`, required in `(0, 1)` (the value 1 is the test-only Gaussian mode).
    pub fn s(&self) -> Result<f64> {
        let s = need(&self.operator.as_ref().and_then(|o| o.s), "operator.s")?;
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidConfig(format!("operator.s must lie in (0, 1), got {s}")));
        }
        Ok(s)
    }

    pub fn operator(&self, grid: &Grid) -> Result<OperatorSpec> {
        operator_symbol(grid, self.s()?)
    }

    pub fn family(&self) -> Result<Family> {
        Family::parse(&need(&self.source.as_ref().and_then(|s| s.family.clone()), "source.family")?)
    }

    pub fn source_term(&self) -> Result<SourceTerm> {
        self.source_term_with(need(&self.source.as_ref().and_then(|s| s.p), "source.p")?)
    }

    pub fn source_term_with(&self, p: f64) -> Result<SourceTerm> {
        SourceTerm::new(self.family()?, p)
    }

    pub fn weight(&self) -> Result<TimeWeight> {
        let w = self.weight.clone().unwrap_or_default();
        let family = need(&w.family, "weight.family")?;
        let c = need(&w.c, "weight.c")?;
        match family.as_str() {
            "const" => TimeWeight::constant(c),
            "power_law" => TimeWeight::power_law(c, need(&w.rho, "weight.rho")?),
            other => Err(Error::InvalidConfig(format!("weight.family must be const or power_law, got {other:?}"))),
        }
    }

    pub fn initial(&self) -> Result<InitialDatum> {
        self.initial_with(need(&self.initial.as_ref().and_then(|i| i.amplitude), "initial.amplitude")?)
    }

    pub fn initial_with(&self, amplitude: f64) -> Result<InitialDatum> {
        let i = self.initial.clone().unwrap_or_default();
        let shape = Shape::parse(&need(&i.shape, "initial.shape")?)?;
        InitialDatum::new(shape, amplitude, need(&i.width, "initial.width")?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        self.solver_config_with(self.source_term()?, self.initial()?)
    }

    pub fn solver_config_with(&self, term: SourceTerm, initial: InitialDatum) -> Result<SolverConfig> {
        let grid = self.grid()?;
        let sv = self.solver.clone().unwrap_or_default();
        let mut cfg = SolverConfig::new(
            self.operator(&grid)?,
            term,
            self.weight()?,
            initial,
            need(&sv.dt_initial, "solver.dt_initial")?,
            need(&sv.dt_min, "solver.dt_min")?,
            need(&sv.t_max, "solver.t_max")?,
        );
        cfg.blow_threshold = sv.blow_threshold.unwrap_or(DEFAULT_BLOW_THRESHOLD);
        cfg.picard_sweeps = sv.picard_sweeps.unwrap_or(2);
        cfg.dealias = sv.dealias.unwrap_or(true);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let sw = self
            .sweep
            .clone()
            .ok_or_else(|| Error::InvalidConfig("missing required section [sweep]".into()))?;
        let p_min = need(&sw.p_min, "sweep.p_min")?;
        let p_max = need(&sw.p_max, "sweep.p_max")?;
        let steps = need(&sw.p_steps, "sweep.p_steps")?;
        let mut amplitudes = need(&sw.amplitudes, "sweep.amplitudes")?;
        if !(p_min > 1.0 && p_max >= p_min) || steps == 0 || (steps == 1 && p_max != p_min) {
            return Err(Error::InvalidConfig(format!(
                "sweep needs 1 < p_min <= p_max and p_steps >= 1, got {p_min}, {p_max}, {steps}"
            )));
        }
        if amplitudes.is_empty() || amplitudes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidConfig("sweep.amplitudes must be a nonempty list of positive numbers".into()));
        }
        amplitudes.sort_by(f64::total_cmp);
        let ps = if steps == 1 {
            vec![p_min]
        } else {
            (0..steps)
                .map(|k| p_min + (p_max - p_min) * k as f64 / (steps - 1) as f64)
                .collect()
        };
        Ok(SweepPlan { ps, amplitudes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub ps: Vec<f64>,
    /// Ascending.
    pub amplitudes: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const FULL: &str = r#"
[grid]
dim = 1
half_width = 64.0
points = 512

[operator]
s = 0.5

[source]
family = "power"
p = 1.5

[weight]
family = "const"
c = 1.0

[initial]
shape = "gaussian"
amplitude = 0.5
width = 1.0

[solver]
dt_initial = 0.1
dt_min = 1e-6
t_max = 20.0

[sweep]
p_min = 1.25
p_max = 3.0
p_steps = 8
amplitudes = [0.5, 0.05]
"#;

    #[test]
    fn full_document_builds_everything() {
        let c = ExperimentConfig::from_toml_str(FULL).unwrap();
        let s = c.solver_config().unwrap();
        assert_eq!(s.picard_sweeps, 2);
        assert!(s.dealias);
        assert_eq!(s.blow_threshold, 1e8);
        let plan = c.sweep_plan().unwrap();
        assert_eq!(plan.ps.len(), 8);
        assert!((plan.ps[2] - 1.75).abs() < 1e-12);
        assert_eq!(plan.amplitudes, vec![0.05, 0.5]);
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        let bad = FULL.replace("s = 0.5", "s = 0.5\nalpha = 2");
        assert!(matches!(ExperimentConfig::from_toml_str(&bad), Err(Error::InvalidConfig(_))));
        let bad = format!("{FULL}\n[extra]\nx = 1\n");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn missing_key_is_named() {
        let c = ExperimentConfig::from_toml_str(&FULL.replace("s = 0.5", "")).unwrap();
        let err = c.solver_config().unwrap_err();
        assert!(err.to_string().contains("operator.s"), "{err}");
    }

    #[test]
    fn dt_order_is_validated() {
        let c = ExperimentConfig::from_toml_str(&FULL.replace("dt_min = 1e-6", "dt_min = 0.5")).unwrap();
        assert!(matches!(c.solver_config(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn env_overrides() {
        let env = vec![
            ("MIXFUJITA_OPERATOR_S".to_string(), "0.75".to_string()),
            ("MIXFUJITA_SOURCE_FAMILY".to_string(), "log_convex".to_string()),
            ("MIXFUJITA_SWEEP_AMPLITUDES".to_string(), "[1.0, 2.0]".to_string()),
            ("MIXFUJITA_SOLVER_DEALIAS".to_string(), "false".to_string()),
            ("OTHER_VAR".to_string(), "x".to_string()),
        ];
        let c = ExperimentConfig::from_toml_with_env(FULL, env).unwrap();
        assert_eq!(c.s().unwrap(), 0.75);
        assert_eq!(c.family().unwrap(), Family::LogConvex);
        assert_eq!(c.sweep.unwrap().amplitudes.unwrap(), vec![1.0, 2.0]);
        assert_eq!(c.solver.unwrap().dealias, Some(false));
        let bad = vec![("MIXFUJITA_OPERATOR_T".to_string(), "1".to_string())];
        assert!(ExperimentConfig::from_toml_with_env(FULL, bad).is_err());
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::from_toml_str(FULL).unwrap();
        let again = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn operator_range() {
        let c = ExperimentConfig::from_toml_str(&FULL.replace("s = 0.5", "s = 1.5")).unwrap();
        assert!(matches!(c.s(), Err(Error::InvalidConfig(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn parse_serialize_parse_is_idempotent(
                s in 0.01f64..0.99,
                p in 1.01f64..6.0,
                amps in prop::collection::vec(1e-3f64..10.0, 1..4),
                points in 6u32..12,
                dealias in any::<bool>(),
                drop_weight in any::<bool>(),
            ) {
                let mut doc = FULL
                    .replace("s = 0.5", &format!("s = {s:?}"))
                    .replace("p = 1.5", &format!("p = {p:?}"))
                    .replace("points = 512", &format!("points = {}", 1u32 << points))
                    .replace("amplitudes = [0.5, 0.05]", &format!("amplitudes = {amps:?}"))
                    .replace("t_max = 20.0", &format!("t_max = 20.0\ndealias = {dealias}"));
                if drop_weight {
                    doc = doc.replace("[weight]\nfamily = \"const\"\nc = 1.0\n", "");
                }
                let a = ExperimentConfig::from_toml_str(&doc).unwrap();
                let b = ExperimentConfig::from_toml_str(&a.to_toml_string().unwrap()).unwrap();
                prop_assert_eq!(&a, &b);
                let c = ExperimentConfig::from_toml_str(&b.to_toml_string().unwrap()).unwrap();
                prop_assert_eq!(b, c);
            }
        }
    }
}
