//! Run configuration: one TOML section per concern, validated into the
//! domain types with errors that name the offending key.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kernels::{SpaceKernel, TimeKernel};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub time_kernel: TimeKernelSpec,
    pub space_kernel: SpaceKernelSpec,
    pub grid: Option<GridSpec>,
    pub ibvp: Option<IbvpSpec>,
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub times: Vec<f64>,
    pub mc: Option<McSpec>,
    /// Run the estimate suite and gate the exit code on it (default true).
    #[serde(default = "default_true")]
    pub checks: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeKernelSpec {
    pub variant: String,
    pub alpha: Option<f64>,
    pub b: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
    pub orders: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceKernelSpec {
    pub variant: String,
    pub beta: Option<f64>,
    pub q: Option<f64>,
    pub h: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
    pub orders: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IbvpSpec {
    pub half_width: f64,
    pub m: usize,
    pub theta: Option<f64>,
    /// Truncation order for (C7); defaults to the space kernel's order.
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub kind: String,
    pub center: Option<f64>,
    pub sigma: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub j: Option<usize>,
    pub path: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub particles: usize,
    pub seed: u64,
    pub hist_range: Option<[f64; 2]>,
    pub hist_bins: Option<usize>,
    pub xis: Option<Vec<f64>>,
    /// Solve the matching Cauchy problem from a near-delta initial and
    /// report L¹ histogram distances.
    #[serde(default)]
    pub compare_pde: bool,
}

fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(key, "missing required key"))
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
    }

    pub fn build_time_kernel(&self) -> Result<TimeKernel> {
        let s = &self.time_kernel;
        match s.variant.as_str() {
            "caputo" => TimeKernel::caputo(require(s.alpha, "time_kernel.alpha")?)
                .map_err(|e| Error::config("time_kernel.alpha", e.to_string())),
            "multi_term_caputo" => TimeKernel::multi_term_caputo(
                s.coefficients
                    .clone()
                    .ok_or_else(|| Error::config("time_kernel.coefficients", "missing required key"))?,
                s.orders
                    .clone()
                    .ok_or_else(|| Error::config("time_kernel.orders", "missing required key"))?,
            )
            .map_err(|e| Error::config("time_kernel", e.to_string())),
            "tempered_caputo" => TimeKernel::tempered_caputo(
                require(s.alpha, "time_kernel.alpha")?,
                require(s.b, "time_kernel.b")?,
            )
            .map_err(|e| Error::config("time_kernel", e.to_string())),
            other => Err(Error::config(
                "time_kernel.variant",
                format!("unknown variant '{other}' (caputo | multi_term_caputo | tempered_caputo)"),
            )),
        }
    }

    pub fn build_space_kernel(&self) -> Result<SpaceKernel> {
        let s = &self.space_kernel;
        match s.variant.as_str() {
            "riesz" => SpaceKernel::riesz(require(s.beta, "space_kernel.beta")?)
                .map_err(|e| Error::config("space_kernel.beta", e.to_string())),
            "multi_term_riesz" => SpaceKernel::multi_term_riesz(
                s.coefficients
                    .clone()
                    .ok_or_else(|| Error::config("space_kernel.coefficients", "missing required key"))?,
                s.orders
                    .clone()
                    .ok_or_else(|| Error::config("space_kernel.orders", "missing required key"))?,
            )
            .map_err(|e| Error::config("space_kernel", e.to_string())),
            "tempered_riesz" => SpaceKernel::tempered_riesz(
                require(s.q, "space_kernel.q")?,
                require(s.beta, "space_kernel.beta")?,
                require(s.h, "space_kernel.h")?,
            )
            .map_err(|e| Error::config("space_kernel", e.to_string())),
            other => Err(Error::config(
                "space_kernel.variant",
                format!("unknown variant '{other}' (riesz | multi_term_riesz | tempered_riesz)"),
            )),
        }
    }

    /// Truncation order for the IBVP kernel: explicit, else the kernel's own.
    pub fn truncation_beta(&self) -> Result<f64> {
        if let Some(spec) = &self.ibvp {
            if let Some(b) = spec.beta {
                return Ok(b);
            }
        }
        let s = &self.space_kernel;
        match s.variant.as_str() {
            "riesz" | "tempered_riesz" => require(s.beta, "space_kernel.beta"),
            "multi_term_riesz" => s
                .orders
                .as_ref()
                .and_then(|o| o.iter().cloned().reduce(f64::max))
                .ok_or_else(|| Error::config("space_kernel.orders", "missing required key")),
            _ => Err(Error::config("ibvp.beta", "missing required key")),
        }
    }

    pub fn validated_times(&self) -> Result<&[f64]> {
        if self.times.is_empty() {
            return Err(Error::config("times", "at least one observation time is required"));
        }
        if self.times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::config("times", "times must be >= 0"));
        }
        if self.times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::config("times", "times must be ascending"));
        }
        Ok(&self.times)
    }

    pub fn grid_spec(&self) -> Result<&GridSpec> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::config("grid", "missing [grid] section"))
    }

    pub fn ibvp_spec(&self) -> Result<&IbvpSpec> {
        self.ibvp
            .as_ref()
            .ok_or_else(|| Error::config("ibvp", "missing [ibvp] section"))
    }

    pub fn initial_spec(&self) -> Result<&InitialSpec> {
        self.initial
            .as_ref()
            .ok_or_else(|| Error::config("initial", "missing [initial] section"))
    }

    pub fn mc_spec(&self) -> Result<&McSpec> {
        self.mc
            .as_ref()
            .ok_or_else(|| Error::config("mc", "missing [mc] section"))
    }
}

impl InitialSpec {
    /// Initial profile sampled at grid points; eigenmode kinds are resolved
    /// by the caller (they need the eigensystem).
    pub fn sample(&self, points: &[f64]) -> Result<Vec<f64>> {
        match self.kind.as_str() {
            "gaussian" => {
                let c = self.center.unwrap_or(0.0);
                let sigma = require(self.sigma, "initial.sigma")?;
                if !(sigma > 0.0) {
                    return Err(Error::config("initial.sigma", "must be > 0"));
                }
                let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                Ok(points
                    .iter()
                    .map(|&x| norm * (-0.5 * ((x - c) / sigma).powi(2)).exp())
                    .collect())
            }
            "box" => {
                let a = require(self.a, "initial.a")?;
                let b = require(self.b, "initial.b")?;
                if !(b > a) {
                    return Err(Error::config("initial.b", "box needs b > a"));
                }
                Ok(points
                    .iter()
                    .map(|&x| if x >= a && x <= b { 1.0 / (b - a) } else { 0.0 })
                    .collect())
            }
            "file" => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::config("initial.path", "missing required key"))?;
                let text = std::fs::read_to_string(path)?;
                let values: Vec<f64> = text
                    .lines()
                    .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
                    .map(|l| {
                        let field = l.split(',').last().unwrap_or("").trim();
                        field
                            .parse::<f64>()
                            .map_err(|_| Error::config("initial.path", format!("bad value '{field}'")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if values.len() != points.len() {
                    return Err(Error::config(
                        "initial.path",
                        format!("{} values for a {}-point grid", values.len(), points.len()),
                    ));
                }
                Ok(values)
            }
            "eigenmode" => Err(Error::config(
                "initial.kind",
                "eigenmode initial data is only valid for solve-ibvp",
            )),
            other => Err(Error::config(
                "initial.kind",
                format!("unknown kind '{other}' (gaussian | box | eigenmode | file)"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RunConfig {
        toml::from_str(text).unwrap()
    }

    const MINIMAL: &str = r#"
        times = [0.1, 1.0]

        [time_kernel]
        variant = "caputo"
        alpha = 0.5

        [space_kernel]
        variant = "riesz"
        beta = 0.75

        [grid]
        half_width = 40.0
        n = 2048

        [initial]
        kind = "gaussian"
        sigma = 1.0
    "#;

    #[test]
    fn minimal_config_builds() {
        let cfg = parse(MINIMAL);
        cfg.build_time_kernel().unwrap();
        cfg.build_space_kernel().unwrap();
        assert_eq!(cfg.validated_times().unwrap(), &[0.1, 1.0]);
        assert!(cfg.checks);
        let f = cfg.initial_spec().unwrap().sample(&[0.0, 1.0]).unwrap();
        assert!(f[0] > f[1]);
    }

    #[test]
    fn out_of_range_alpha_names_the_key() {
        let cfg = parse(&MINIMAL.replace("alpha = 0.5", "alpha = 1.2"));
        match cfg.build_time_kernel() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "time_kernel.alpha"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unsorted_times_rejected() {
        let cfg = parse(&MINIMAL.replace("[0.1, 1.0]", "[1.0, 0.1]"));
        match cfg.validated_times() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "times"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: std::result::Result<RunConfig, _> =
            toml::from_str(&format!("{MINIMAL}\nbogus = 1"));
        assert!(r.is_err());
    }

    #[test]
    fn truncation_beta_falls_back_to_kernel() {
        let mut cfg = parse(MINIMAL);
        assert_eq!(cfg.truncation_beta().unwrap(), 0.75);
        cfg.ibvp = Some(IbvpSpec { half_width: 1.0, m: 128, theta: None, beta: Some(0.4) });
        assert_eq!(cfg.truncation_beta().unwrap(), 0.4);
    }

    #[test]
    fn box_initial_is_normalized() {
        let spec = InitialSpec {
            kind: "box".into(),
            center: None,
            sigma: None,
            a: Some(-1.0),
            b: Some(1.0),
            j: None,
            path: None,
        };
        let v = spec.sample(&[-2.0, 0.0, 2.0]).unwrap();
        assert_eq!(v, vec![0.0, 0.5, 0.0]);
    }
}
