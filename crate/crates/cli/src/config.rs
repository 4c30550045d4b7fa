//! Run configuration: TOML files, or the JSON sidecars written next to outputs.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use hopf_core::bifurcate::ParamSystem;
use hopf_core::exprdsl::{DemoSystem, DEMO_PARAMS};
use hopf_core::TolerancePolicy;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const BUILTIN: &str = "hopfield3";
const DEMO_ALPHA: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub command: CommandSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: Option<TolerancePolicy>,
}

/// Either `builtin = "hopfield3"` with optional `alpha` and `[system.k]`, or
/// `degree`, `params` and coefficient keys `a1..an`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub k: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    #[serde(flatten)]
    pub coefficients: BTreeMap<String, Coefficient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Number(f64),
    Expr(String),
}

impl Coefficient {
    fn source(&self) -> String {
        match self {
            Coefficient::Number(v) => format!("{v:?}"),
            Coefficient::Expr(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guess: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

/// What the sidecar of an output file holds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub config_hash: String,
    pub tolerances: TolerancePolicy,
    pub version: String,
    pub command: RunConfig,
}

impl RunConfig {
    pub fn builtin_default() -> Self {
        RunConfig {
            system: SystemSection {
                builtin: Some(BUILTIN.into()),
                ..Default::default()
            },
            command: CommandSection::default(),
            output: OutputSection::default(),
            tolerances: None,
        }
    }

    /// Reads TOML, or JSON when the text starts with `{`. A sidecar yields its
    /// embedded configuration after the hash is checked.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing JSON config {}", path.display()))?;
            if value.get("config_hash").is_some() {
                let sidecar: Sidecar = serde_json::from_value(value)?;
                let actual = sidecar.command.hash()?;
                ensure!(
                    actual == sidecar.config_hash,
                    "sidecar hash {} does not match its configuration ({actual})",
                    sidecar.config_hash
                );
                return Ok(sidecar.command);
            }
            return Ok(serde_json::from_value(value)?);
        }
        toml::from_str(&text).with_context(|| format!("parsing TOML config {}", path.display()))
    }

    pub fn tolerances(&self) -> TolerancePolicy {
        self.tolerances.unwrap_or_default()
    }

    pub fn is_builtin(&self) -> bool {
        self.system.builtin.is_some()
    }

    /// SHA-256 of the compact JSON form; object keys are sorted.
    pub fn hash(&self) -> Result<String> {
        let canonical = serde_json::to_string(&serde_json::to_value(self)?)?;
        let digest = Sha256::digest(canonical.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn sidecar(&self) -> Result<Sidecar> {
        Ok(Sidecar {
            config_hash: self.hash()?,
            tolerances: self.tolerances(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.clone(),
        })
    }

    /// Fills every default so the configuration alone determines the run.
    pub fn resolve(mut self) -> Result<Self> {
        let sys = &mut self.system;
        match sys.builtin.as_deref() {
            Some(BUILTIN) => {
                ensure!(
                    sys.degree.is_none() && sys.coefficients.is_empty() && sys.constants.is_empty(),
                    "builtin system takes no degree, coefficients or constants"
                );
                if let Some(params) = &sys.params {
                    ensure!(
                        params.iter().map(String::as_str).eq(DEMO_PARAMS),
                        "builtin system parameters are mu1, mu2"
                    );
                }
                sys.alpha.get_or_insert(DEMO_ALPHA);
                sys.params = Some(DEMO_PARAMS.iter().map(|s| s.to_string()).collect());
            }
            Some(other) => bail!("unknown builtin system `{other}` (available: {BUILTIN})"),
            None => {
                ensure!(sys.k.is_empty(), "[system.k] applies only to the builtin system");
                let n = sys.degree.context("expression system needs `degree`")?;
                ensure!(n >= 1, "degree must be at least 1");
                ensure!(sys.alpha.is_some(), "expression system needs `alpha`");
                for key in sys.coefficients.keys() {
                    let j = key
                        .strip_prefix('a')
                        .and_then(|d| d.parse::<usize>().ok())
                        .filter(|j| (1..=n).contains(j) && key == &format!("a{j}"));
                    ensure!(j.is_some(), "unexpected key `{key}` in [system]");
                }
                ensure!(
                    sys.coefficients.len() == n,
                    "degree {n} needs coefficients a1..a{n}, got {}",
                    sys.coefficients.len()
                );
                sys.params.get_or_insert_with(Vec::new);
            }
        }
        self.tolerances.get_or_insert_with(TolerancePolicy::default);
        self.param_system()?;
        self.complete_command()?;
        Ok(self)
    }

    fn complete_command(&mut self) -> Result<()> {
        let params = self.param_names();
        let builtin = self.is_builtin();
        let cmd = &mut self.command;
        match cmd.name.as_deref() {
            Some("classify") => {
                let mu = cmd.mu.get_or_insert_with(Vec::new);
                ensure!(
                    mu.len() == params.len(),
                    "classify needs {} parameter values (--mu), got {}",
                    params.len(),
                    mu.len()
                );
            }
            Some("scan") => {
                ensure!(params.len() >= 2, "scan needs at least two parameters");
                let axes = cmd.axes.get_or_insert_with(|| params[..2].to_vec());
                ensure!(axes.len() == 2, "scan needs exactly two axes, got {}", axes.len());
                let window = cmd.window.as_ref().context("scan needs --window x0,x1,y0,y1")?;
                ensure!(window.len() == 4, "window has four values x0,x1,y0,y1");
                let res = cmd.resolution.get_or_insert_with(|| vec![200, 200]);
                ensure!(res.len() == 2, "resolution has two values m1,m2");
                if params.len() == 2 {
                    cmd.mu.get_or_insert_with(|| vec![0.0, 0.0]);
                }
                let base = cmd
                    .mu
                    .as_ref()
                    .context("scan with more than two parameters needs --mu for the fixed ones")?;
                ensure!(base.len() == params.len(), "--mu needs {} values", params.len());
            }
            Some("degenerate") => {
                let guess = cmd.guess.as_ref().context("degenerate needs --guess v1,v2")?;
                ensure!(guess.len() == params.len(), "--guess needs {} values", params.len());
            }
            Some("simulate") => {
                ensure!(builtin, "simulate needs the builtin system; expression systems have no vector field");
                let mu = cmd.mu.as_ref().context("simulate needs --mu mu1,mu2")?;
                ensure!(mu.len() == 2, "--mu needs 2 values");
                cmd.x0.get_or_insert_with(|| vec![0.1; 3]);
                cmd.horizon.get_or_insert(200.0);
                cmd.step.get_or_insert(0.05);
            }
            Some(other) => bail!("unknown command `{other}`"),
            None => {}
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.system.alpha.unwrap_or(DEMO_ALPHA)
    }

    pub fn param_names(&self) -> Vec<String> {
        self.system.params.clone().unwrap_or_default()
    }

    pub fn demo(&self) -> Result<DemoSystem> {
        ensure!(self.is_builtin(), "only the builtin system defines a vector field");
        let k: HashMap<String, f64> = self.system.k.clone().into_iter().collect();
        Ok(DemoSystem::with_overrides(&k, self.alpha())?)
    }

    pub fn param_system(&self) -> Result<ParamSystem> {
        if self.is_builtin() {
            return Ok(ParamSystem::demo(&self.demo()?));
        }
        let n = self.system.degree.unwrap_or(0);
        let sources: Vec<String> = (1..=n)
            .map(|j| {
                self.system
                    .coefficients
                    .get(&format!("a{j}"))
                    .map(Coefficient::source)
                    .with_context(|| format!("missing coefficient a{j}"))
            })
            .collect::<Result<_>>()?;
        let constants: HashMap<String, f64> = self.system.constants.clone().into_iter().collect();
        Ok(ParamSystem::from_expressions(
            self.alpha(),
            self.param_names(),
            &sources,
            &constants,
        )?)
    }
}
