use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::growth_rates::{GrowthRate, RateSpec};

/// One experiment: a growth rate, a forcing amplitude, the Sobolev orders
/// to track and the numerical tolerances.
///
/// Read from a flat `key = value` file (TOML syntax) or the equivalent
/// JSON object:
///
/// ```text
/// name = "mono-linear"
/// rate = "power_log"
/// params = [1.0, 1.0, 0.0]
/// s = [1.0, 2.0]
/// a = 0.0
/// duration = 200.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Catalog name of the growth rate.
    pub rate: String,
    #[serde(default)]
    pub params: Vec<f64>,
    /// Start time; the catalog default when absent.
    #[serde(default)]
    pub t0: Option<f64>,
    /// Sobolev orders.
    #[serde(default = "default_orders")]
    pub s: Vec<f64>,
    /// Amplitude of the forcing `a sin t`.
    #[serde(default)]
    pub a: f64,
    /// End time. Exactly one of `horizon` and `duration` is given.
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Length of the run after `t0`.
    #[serde(default)]
    pub duration: Option<f64>,
    /// Band statistics start at `t0 + window_offset`.
    #[serde(default = "default_window_offset")]
    pub window_offset: f64,
    #[serde(default = "default_tol")]
    pub ode_tol: f64,
    #[serde(default = "default_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Initial Hermite truncation.
    #[serde(default = "default_truncation")]
    pub n0: usize,
    #[serde(default = "default_sample_step")]
    pub sample_step: f64,
    /// Prefix of the output files; the scenario name when absent.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_orders() -> Vec<f64> {
    vec![1.0]
}

fn default_window_offset() -> f64 {
    10.0
}

fn default_tol() -> f64 {
    1e-10
}

fn default_dt() -> f64 {
    1e-3
}

fn default_truncation() -> usize {
    256
}

fn default_sample_step() -> f64 {
    0.1
}

/// Every key with its default, for usage text.
pub const SCENARIO_KEYS: &str = "\
  name           string, required
  rate           catalog name, required (see check-rate)
  params         list of reals, default []
  t0             real, default: the catalog start of the rate
  s              list of Sobolev orders, default [1.0]
  a              forcing amplitude, default 0.0
  horizon        end time; give this or duration
  duration       run length after t0; give this or horizon
  window_offset  bands start at t0 + window_offset, default 10.0
  ode_tol        classical integrator tolerance, default 1e-10
  quad_tol       quadrature tolerance, default 1e-10
  dt             quantum time step, default 1e-3
  n0             initial Hermite truncation, default 256
  sample_step    sampling interval of both sides, default 0.1
  output         output file prefix, default: name";

impl Scenario {
    /// A scenario with every optional key at its default.
    pub fn new(name: &str, rate: &str, params: &[f64], s: &[f64], a: f64, duration: f64) -> Self {
        Scenario {
            name: name.to_string(),
            rate: rate.to_string(),
            params: params.to_vec(),
            t0: None,
            s: s.to_vec(),
            a,
            horizon: None,
            duration: Some(duration),
            window_offset: default_window_offset(),
            ode_tol: default_tol(),
            quad_tol: default_tol(),
            dt: default_dt(),
            n0: default_truncation(),
            sample_step: default_sample_step(),
            output: None,
        }
    }

    /// Parses JSON when the text starts with `{`, the flat format otherwise.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let scenario: Scenario = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn rate_spec(&self) -> RateSpec {
        RateSpec { name: self.rate.clone(), params: self.params.clone(), t0: self.t0 }
    }

    pub fn resolve_rate(&self) -> Result<GrowthRate, ExperimentError> {
        Ok(self.rate_spec().resolve()?)
    }

    pub fn start(&self) -> Result<f64, ExperimentError> {
        Ok(self.resolve_rate()?.t0())
    }

    pub fn end(&self) -> Result<f64, ExperimentError> {
        let t0 = self.start()?;
        match (self.horizon, self.duration) {
            (Some(h), None) => Ok(h),
            (None, Some(d)) => Ok(t0 + d),
            _ => Err(ExperimentError::Config("give exactly one of horizon and duration".into())),
        }
    }

    pub fn window_start(&self) -> Result<f64, ExperimentError> {
        Ok(self.start()? + self.window_offset)
    }

    pub fn output_prefix(&self) -> &str {
        self.output.as_deref().unwrap_or(&self.name)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("invalid scenario name {:?}", self.name));
        }
        let t0 = self.start()?;
        let end = self.end()?;
        if !(end > t0) {
            return bad(format!("horizon {end} must exceed t0 = {t0}"));
        }
        if self.s.is_empty() || self.s.iter().any(|&s| !(s > 0.0)) {
            return bad(format!("Sobolev orders must be positive, got {:?}", self.s));
        }
        if !(self.window_offset >= 0.0) || !(t0 + self.window_offset < end) {
            return bad(format!("window start t0 + {} lies past the horizon {end}", self.window_offset));
        }
        for (key, value) in [("ode_tol", self.ode_tol), ("quad_tol", self.quad_tol), ("dt", self.dt), ("sample_step", self.sample_step)] {
            if !(value > 0.0) || !value.is_finite() {
                return bad(format!("{key} must be positive, got {value}"));
            }
        }
        if !self.a.is_finite() {
            return bad(format!("a must be finite, got {}", self.a));
        }
        let per_sample = self.sample_step / self.dt;
        if (per_sample - per_sample.round()).abs() > 1e-9 * per_sample {
            return bad(format!("sample_step {} is not a multiple of dt {}", self.sample_step, self.dt));
        }
        if self.n0 < 2 {
            return bad(format!("n0 must be at least 2, got {}", self.n0));
        }
        Ok(())
    }
}

/// Names of the shipped scenarios, in catalog order.
pub const SCENARIO_NAMES: [&str; 6] =
    ["qho-baseline", "mono-linear", "mono-powerlog", "oscillatory", "forced-linear", "exponential-remark"];

/// The shipped scenario catalog.
pub fn shipped_scenarios() -> Vec<Scenario> {
    vec![
        Scenario::new("qho-baseline", "constant", &[], &[1.0], 0.0, 50.0),
        Scenario::new("mono-linear", "power_log", &[1.0, 1.0, 0.0], &[1.0, 2.0], 0.0, 200.0),
        Scenario::new("mono-powerlog", "power_log", &[1.0, 0.5, 1.0], &[1.0, 2.0], 0.0, 200.0),
        Scenario::new("oscillatory", "oscillatory", &[], &[1.0, 2.0], 0.0, 300.0),
        Scenario::new("forced-linear", "power_log", &[1.0, 1.0, 0.0], &[1.0], 1.0, 200.0),
        Scenario::new("exponential-remark", "exponential", &[0.1], &[1.0, 2.0], 0.0, 60.0),
    ]
}

pub fn shipped_scenario(name: &str) -> Option<Scenario> {
    shipped_scenarios().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_json_forms_agree() {
        let flat = "name = \"x\"\nrate = \"power_log\"\nparams = [1.0, 1.0, 0.0]\ns = [1.0, 2.0]\nduration = 20.0\n";
        let json = r#"{"name": "x", "rate": "power_log", "params": [1, 1, 0], "s": [1, 2], "duration": 20}"#;
        let a = Scenario::parse(flat).unwrap();
        assert_eq!(a, Scenario::parse(json).unwrap());
        assert_eq!(a.dt, 1e-3);
        assert_eq!(a.n0, 256);
        assert!((a.end().unwrap() - (std::f64::consts::FRAC_PI_2 + 20.0)).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cases = [
            "name = \"x\"\nrate = \"power_log\"\n",
            "name = \"x\"\nrate = \"power_log\"\nduration = 5.0\nhorizon = 9.0\n",
            "name = \"x\"\nrate = \"nope\"\nduration = 20.0\n",
            "name = \"x\"\nrate = \"constant\"\nduration = 20.0\ns = [0.0]\n",
            "name = \"x\"\nrate = \"constant\"\nduration = 20.0\nsample_step = 0.15\ndt = 0.1\n",
            "name = \"x\"\nrate = \"constant\"\nduration = 5.0\n",
            "name = \"x\"\nrate = \"constant\"\nduration = 20.0\ncolour = 1\n",
            "not a config",
        ];
        for text in cases {
            assert!(Scenario::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn shipped_catalog_is_valid() {
        let all = shipped_scenarios();
        assert_eq!(all.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(), SCENARIO_NAMES);
        for s in &all {
            s.validate().unwrap();
        }
        assert!(shipped_scenario("forced-linear").unwrap().a == 1.0);
        assert!(shipped_scenario("nope").is_none());
    }
}
