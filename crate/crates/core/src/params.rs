//! Physical and numerical parameters with their scenario presets. Reads and
//! writes the `key = value` configuration format.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::physics::{Elasticity, SplitMode, DIM};
use crate::thermal::{LambdaThetaMode, ThermalModel};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Plane-strain Lamé constants and the 2D bulk modulus from Young's modulus
/// and Poisson's ratio.
pub fn derive_lame(youngs: f64, nu: f64) -> Result<(f64, f64, f64)> {
    if !(youngs > 0.0) {
        return Err(Error::ParameterDomain(format!("Young's modulus must be positive, got {youngs}")));
    }
    if !(0.0..0.5).contains(&nu) {
        return Err(Error::ParameterDomain(format!("Poisson ratio must lie in [0, 0.5), got {nu}")));
    }
    let mu = youngs / (2.0 * (1.0 + nu));
    let lambda = youngs * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let bulk = 2.0 / DIM as f64 * mu + lambda;
    Ok((mu, lambda, bulk))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub youngs: f64,
    pub nu: f64,
    pub gc: f64,
    pub beta: f64,
    pub kappa_theta: f64,
    pub alpha_biot: f64,
    pub alpha_theta: f64,
}

impl MaterialParams {
    pub fn lame(&self) -> Result<(f64, f64, f64)> {
        derive_lame(self.youngs, self.nu)
    }

    pub fn elasticity(&self) -> Result<Elasticity<f64>> {
        let (mu, lambda, _) = self.lame()?;
        Ok(Elasticity::from_lame(mu, lambda))
    }
}

/// Approximate inverse used for each diagonal block of the Newton system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecondKind {
    /// Zero-fill incomplete LU per block.
    Ilu0,
    /// Sparse direct LU factorization per block.
    #[default]
    Direct,
    /// Diagonal scaling per block.
    Jacobi,
}

impl PrecondKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrecondKind::Ilu0 => "ilu0",
            PrecondKind::Direct => "direct",
            PrecondKind::Jacobi => "jacobi",
        }
    }
}

impl FromStr for PrecondKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ilu0" => Ok(Self::Ilu0),
            "direct" => Ok(Self::Direct),
            "jacobi" => Ok(Self::Jacobi),
            other => Err(format!("expected ilu0|direct|jacobi, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Phase-field regularization length (m).
    pub eps: f64,
    pub kappa_reg: f64,
    pub tol_phi: f64,
    pub tol_newton: f64,
    /// Active-set constant; `None` means `100 G_c / eps`.
    pub active_set_c: Option<f64>,
    pub dt: f64,
    pub n_steps: usize,
    pub gamma_t: f64,
    pub split: SplitMode,
    pub max_level: u32,
    pub initial_level: u32,
    pub max_newton: usize,
    pub precond: PrecondKind,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
}

impl ModelParams {
    pub fn active_set_c(&self, gc: f64) -> f64 {
        self.active_set_c.unwrap_or(100.0 * gc / self.eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureRamp {
    Constant,
    /// `p(n) = alpha (n + 1) p_bar` with `n` the step number.
    Linear { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLoads {
    pub p_bar: f64,
    pub p0: f64,
    pub theta: f64,
    pub theta0: f64,
    pub lambda_theta_mode: LambdaThetaMode,
    pub lambda_theta_const: f64,
    pub ramp: PressureRamp,
}

impl ScenarioLoads {
    /// Fracture pressure at time step `n`.
    pub fn pressure_at_step(&self, n: usize) -> f64 {
        match self.ramp {
            PressureRamp::Constant => self.p_bar,
            PressureRamp::Linear { alpha } => alpha * (n as f64 + 1.0) * self.p_bar,
        }
    }
}

/// Square domain `(0, 2a)^2` with a horizontal crack of half length `l0`
/// centred at `(a, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub a: f64,
    pub l0: f64,
}

impl Geometry {
    pub fn domain_size(&self) -> f64 {
        2.0 * self.a
    }

    pub fn crack_center(&self) -> [f64; 2] {
        [self.a, self.a]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scenario: Option<String>,
    pub material: MaterialParams,
    pub model: ModelParams,
    pub loads: ScenarioLoads,
    pub geometry: Geometry,
}

pub const SCENARIOS: [&str; 5] = ["case_a", "case_b", "case_c", "case_d", "case_e"];

impl Default for Config {
    fn default() -> Self {
        let material = MaterialParams {
            youngs: 1.5e10,
            nu: 0.15,
            gc: 1e10,
            beta: 1e-5,
            kappa_theta: 1e-6,
            alpha_biot: 0.0,
            alpha_theta: 0.0,
        };
        let model = ModelParams {
            eps: 2.0 * 200.0 / 256.0,
            kappa_reg: 1e-10,
            tol_phi: 0.9,
            tol_newton: 1e-10,
            active_set_c: None,
            dt: 1.0,
            n_steps: 3,
            gamma_t: std::f64::consts::FRAC_2_PI,
            split: SplitMode::VolDev,
            max_level: 8,
            initial_level: 5,
            max_newton: 50,
            precond: PrecondKind::Direct,
            gmres_tol: 1e-8,
            gmres_restart: 100,
            gmres_max_iter: 2000,
        };
        let loads = ScenarioLoads {
            p_bar: 1.0,
            p0: 0.0,
            theta: 100.0,
            theta0: 100.0,
            lambda_theta_mode: LambdaThetaMode::Off,
            lambda_theta_const: 0.0,
            ramp: PressureRamp::Constant,
        };
        Config { scenario: None, material, model, loads, geometry: Geometry { a: 100.0, l0: 10.0 } }
    }
}

impl Config {
    /// Parameter set of one of the named scenarios.
    pub fn preset(name: &str) -> Result<Config> {
        let mut c = Config { scenario: Some(name.to_string()), ..Config::default() };
        match name {
            "case_a" => {}
            "case_b" => {
                c.loads.p_bar = 15_834e3;
                c.loads.p0 = 12_130e3;
                c.loads.theta = 70.0;
                c.loads.theta0 = 100.0;
                c.loads.lambda_theta_mode = LambdaThetaMode::Constant;
                c.loads.lambda_theta_const = 1e-4;
                c.model.n_steps = 3;
            }
            "case_c" => {
                c.loads.p_bar = 15_834e3;
                c.loads.p0 = 12_130e3;
                c.loads.theta = 70.0;
                c.loads.theta0 = 100.0;
                c.loads.lambda_theta_mode = LambdaThetaMode::Hagoort;
                c.model.dt = SECONDS_PER_DAY;
                c.model.n_steps = 365;
            }
            "case_d" => {
                c.material.gc = 5.5e5;
                c.loads.p_bar = 15_834e3;
                c.loads.p0 = 12_130e3;
                c.loads.theta = 80.0;
                c.loads.theta0 = 300.0;
                c.loads.lambda_theta_mode = LambdaThetaMode::Hagoort;
                c.model.dt = SECONDS_PER_DAY;
                c.model.n_steps = 140;
            }
            "case_e" => {
                c.loads.p_bar = 15_834e3;
                c.loads.p0 = 12_130e3;
                c.loads.theta = 70.0;
                c.loads.theta0 = 100.0;
                c.loads.lambda_theta_mode = LambdaThetaMode::Hagoort;
                c.loads.ramp = PressureRamp::Linear { alpha: 0.5 };
                c.model.dt = 60.0;
                c.model.n_steps = 270;
            }
            other => {
                return Err(Error::Config {
                    line: 0,
                    key: "scenario".into(),
                    msg: format!("unknown scenario `{other}` (expected one of {SCENARIOS:?})"),
                })
            }
        }
        Ok(c)
    }

    pub fn elasticity(&self) -> Result<Elasticity<f64>> {
        self.material.elasticity()
    }

    pub fn thermal_model(&self) -> ThermalModel<f64> {
        ThermalModel {
            mode: self.loads.lambda_theta_mode,
            lambda_const: self.loads.lambda_theta_const,
            kappa_theta: self.material.kappa_theta,
            l0: self.geometry.l0,
            gamma_t: self.model.gamma_t,
            youngs: self.material.youngs,
            beta: self.material.beta,
            nu: self.material.nu,
        }
    }

    /// Check every parameter invariant, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        self.validate_with_lines(&HashMap::new())
    }

    fn validate_with_lines(&self, lines: &HashMap<String, usize>) -> Result<()> {
        let fail = |key: &str, msg: String| {
            let line = lines.get(key).copied().unwrap_or(0);
            Err(Error::ParameterDomain(format!("{key} (line {line}): {msg}")))
        };
        let m = &self.material;
        if !(m.youngs > 0.0) {
            return fail("material.E", format!("must be positive, got {}", m.youngs));
        }
        if !(0.0..0.5).contains(&m.nu) {
            return fail("material.nu", format!("must lie in [0, 0.5), got {}", m.nu));
        }
        if !(m.gc > 0.0) {
            return fail("material.Gc", format!("must be positive, got {}", m.gc));
        }
        if !(m.kappa_theta > 0.0) {
            return fail("material.kappa_theta", format!("must be positive, got {}", m.kappa_theta));
        }
        let md = &self.model;
        if !(md.eps > 0.0) {
            return fail("model.eps", format!("must be positive, got {}", md.eps));
        }
        if !(md.kappa_reg > 0.0 && md.kappa_reg < 1.0) {
            return fail("model.kappa_reg", format!("must lie in (0, 1), got {}", md.kappa_reg));
        }
        if !(md.tol_phi > 0.0 && md.tol_phi < 1.0) {
            return fail("model.tol_phi", format!("must lie in (0, 1), got {}", md.tol_phi));
        }
        if !(md.tol_newton > 0.0) {
            return fail("model.tol_newton", format!("must be positive, got {}", md.tol_newton));
        }
        if let Some(c) = md.active_set_c {
            if !(c > 0.0) {
                return fail("model.active_set_c", format!("must be positive, got {c}"));
            }
        }
        if !(md.dt > 0.0) {
            return fail("model.dt", format!("must be positive, got {}", md.dt));
        }
        if !(md.gamma_t > 0.0) {
            return fail("model.gamma_T", format!("must be positive, got {}", md.gamma_t));
        }
        if md.initial_level > md.max_level {
            return fail("model.initial_level", format!("exceeds max_level {}", md.max_level));
        }
        if md.max_level > 20 {
            return fail("model.max_level", format!("at most 20 supported, got {}", md.max_level));
        }
        let h_min = self.geometry.domain_size() / f64::from(1u32 << md.max_level);
        if md.eps <= h_min {
            return fail("model.eps", format!("must exceed the finest cell size {h_min}"));
        }
        if md.max_newton == 0 {
            return fail("model.max_newton", "must be at least one".into());
        }
        if !(md.gmres_tol > 0.0 && md.gmres_tol < 1.0) {
            return fail("model.gmres_tol", format!("must lie in (0, 1), got {}", md.gmres_tol));
        }
        if md.gmres_restart == 0 {
            return fail("model.gmres_restart", "must be at least one".into());
        }
        let g = &self.geometry;
        if !(g.a > 0.0) {
            return fail("geometry.a", format!("must be positive, got {}", g.a));
        }
        if !(g.l0 > 0.0 && g.l0 < g.a) {
            return fail("geometry.l0", format!("must lie in (0, a), got {}", g.l0));
        }
        let l = &self.loads;
        if l.lambda_theta_mode == LambdaThetaMode::Constant && l.lambda_theta_const < 0.0 {
            return fail("loads.lambda_theta_const", "must be non-negative".into());
        }
        if let PressureRamp::Linear { alpha } = l.ramp {
            if !(alpha > 0.0) {
                return fail("loads.ramp_alpha", format!("must be positive, got {alpha}"));
            }
        }
        Ok(())
    }

    /// Serialize to the configuration format; parsing the result yields an
    /// identical configuration.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let m = &self.material;
        let md = &self.model;
        let l = &self.loads;
        if let Some(name) = &self.scenario {
            let _ = writeln!(s, "scenario = {name}");
        }
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("material.E", format!("{:e}", m.youngs));
        kv("material.nu", format!("{:e}", m.nu));
        kv("material.Gc", format!("{:e}", m.gc));
        kv("material.beta", format!("{:e}", m.beta));
        kv("material.kappa_theta", format!("{:e}", m.kappa_theta));
        kv("material.alpha_B", format!("{:e}", m.alpha_biot));
        kv("material.alpha_theta", format!("{:e}", m.alpha_theta));
        kv("model.eps", format!("{:e}", md.eps));
        kv("model.kappa_reg", format!("{:e}", md.kappa_reg));
        kv("model.tol_phi", format!("{:e}", md.tol_phi));
        kv("model.tol_newton", format!("{:e}", md.tol_newton));
        kv(
            "model.active_set_c",
            md.active_set_c.map_or_else(|| "auto".to_string(), |c| format!("{c:e}")),
        );
        kv("model.dt", format!("{:e}", md.dt));
        kv("model.n_steps", md.n_steps.to_string());
        kv("model.gamma_T", format!("{:e}", md.gamma_t));
        kv("model.split", md.split.as_str().to_string());
        kv("model.max_level", md.max_level.to_string());
        kv("model.initial_level", md.initial_level.to_string());
        kv("model.max_newton", md.max_newton.to_string());
        kv("model.precond", md.precond.as_str().to_string());
        kv("model.gmres_tol", format!("{:e}", md.gmres_tol));
        kv("model.gmres_restart", md.gmres_restart.to_string());
        kv("model.gmres_max_iter", md.gmres_max_iter.to_string());
        kv("loads.p_bar", format!("{:e}", l.p_bar));
        kv("loads.p0", format!("{:e}", l.p0));
        kv("loads.theta", format!("{:e}", l.theta));
        kv("loads.theta0", format!("{:e}", l.theta0));
        kv("loads.lambda_theta_mode", l.lambda_theta_mode.as_str().to_string());
        kv("loads.lambda_theta_const", format!("{:e}", l.lambda_theta_const));
        kv(
            "loads.ramp_alpha",
            match l.ramp {
                PressureRamp::Constant => "none".to_string(),
                PressureRamp::Linear { alpha } => format!("{alpha:e}"),
            },
        );
        kv("geometry.a", format!("{:e}", self.geometry.a));
        kv("geometry.l0", format!("{:e}", self.geometry.l0));
        s
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parse a configuration document. A `scenario` line, wherever it appears,
/// selects the base preset; all other keys override it in order.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut entries = Vec::new();
    let mut scenario: Option<(usize, String)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config { line: lineno, key: line.to_string(), msg: "expected `key = value`".into() });
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k == "scenario" {
            scenario = Some((lineno, v));
        } else {
            entries.push((lineno, k, v));
        }
    }
    let mut cfg = match &scenario {
        Some((line, name)) => Config::preset(name).map_err(|e| match e {
            Error::Config { key, msg, .. } => Error::Config { line: *line, key, msg },
            other => other,
        })?,
        None => Config::default(),
    };
    let mut lines = HashMap::new();
    for (line, key, value) in entries {
        apply_key(&mut cfg, &key, &value).map_err(|msg| Error::Config { line, key: key.clone(), msg })?;
        lines.insert(key, line);
    }
    cfg.validate_with_lines(&lines)?;
    Ok(cfg)
}

fn num(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().map_err(|e| format!("cannot parse `{v}` as a number: {e}"))
}

fn count<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("cannot parse `{v}` as a count: {e}"))
}

fn apply_key(cfg: &mut Config, key: &str, v: &str) -> std::result::Result<(), String> {
    let m = &mut cfg.material;
    let md = &mut cfg.model;
    let l = &mut cfg.loads;
    let g = &mut cfg.geometry;
    match key {
        "material.E" => m.youngs = num(v)?,
        "material.nu" => m.nu = num(v)?,
        "material.Gc" => m.gc = num(v)?,
        "material.beta" => m.beta = num(v)?,
        "material.kappa_theta" => m.kappa_theta = num(v)?,
        "material.alpha_B" => m.alpha_biot = num(v)?,
        "material.alpha_theta" => m.alpha_theta = num(v)?,
        "model.eps" => md.eps = num(v)?,
        "model.kappa_reg" => md.kappa_reg = num(v)?,
        "model.tol_phi" => md.tol_phi = num(v)?,
        "model.tol_newton" => md.tol_newton = num(v)?,
        "model.active_set_c" => md.active_set_c = if v == "auto" { None } else { Some(num(v)?) },
        "model.dt" => md.dt = num(v)?,
        "model.n_steps" => md.n_steps = count(v)?,
        "model.gamma_T" => md.gamma_t = num(v)?,
        "model.split" => md.split = v.parse()?,
        "model.max_level" => md.max_level = count(v)?,
        "model.initial_level" => md.initial_level = count(v)?,
        "model.max_newton" => md.max_newton = count(v)?,
        "model.precond" => md.precond = v.parse()?,
        "model.gmres_tol" => md.gmres_tol = num(v)?,
        "model.gmres_restart" => md.gmres_restart = count(v)?,
        "model.gmres_max_iter" => md.gmres_max_iter = count(v)?,
        "loads.p_bar" => l.p_bar = num(v)?,
        "loads.p0" => l.p0 = num(v)?,
        "loads.theta" => l.theta = num(v)?,
        "loads.theta0" => l.theta0 = num(v)?,
        "loads.lambda_theta_mode" => l.lambda_theta_mode = v.parse()?,
        "loads.lambda_theta_const" => l.lambda_theta_const = num(v)?,
        "loads.ramp_alpha" => {
            l.ramp = if v == "none" { PressureRamp::Constant } else { PressureRamp::Linear { alpha: num(v)? } }
        }
        "geometry.a" => g.a = num(v)?,
        "geometry.l0" => g.l0 = num(v)?,
        _ => return Err("unknown key".into()),
    }
    Ok(())
}
