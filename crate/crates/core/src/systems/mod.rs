//! Benchmark signal generators.
//!
//! Flows are integrated with adaptive RK23 onto a fixed output grid, SDEs are
//! stepped with Euler–Maruyama and maps are iterated directly. Only the first
//! state component is kept. Deterministic kinds can be corrupted with white
//! noise at a given SNR; stochastic kinds take their diffusion coefficient
//! from `σ = 1/R`.

mod rk23;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{parse_f64, parse_f64_list, KvFile};
use crate::error::{Error, Result};
use crate::trajectory::{Label, Trajectory};

pub use rk23::{integrate as integrate_rk23, Tolerances, DIVERGENCE_BOUND};

/// Largest Euler–Maruyama step as a fraction of the kind's characteristic time.
pub const MAX_SDE_STEP: f64 = 1e-3;

/// Time discarded before recording the Chen and Lü attractors.
pub const ATTRACTOR_TRANSIENT: f64 = 10.0;

const LCG_MODULUS: f64 = 4_294_967_296.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Shm,
    Duffing,
    RayleighDuffing,
    Chen,
    Lu,
    Logistic,
    Henon,
    Lcg,
    Brownian,
    Ou,
    Cir,
    StochasticDuffing,
}

impl SystemKind {
    pub const ALL: [SystemKind; 12] = [
        SystemKind::Shm,
        SystemKind::Duffing,
        SystemKind::RayleighDuffing,
        SystemKind::Chen,
        SystemKind::Lu,
        SystemKind::Logistic,
        SystemKind::Henon,
        SystemKind::Lcg,
        SystemKind::Brownian,
        SystemKind::Ou,
        SystemKind::Cir,
        SystemKind::StochasticDuffing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Shm => "shm",
            SystemKind::Duffing => "duffing",
            SystemKind::RayleighDuffing => "rayleigh-duffing",
            SystemKind::Chen => "chen",
            SystemKind::Lu => "lu",
            SystemKind::Logistic => "logistic",
            SystemKind::Henon => "henon",
            SystemKind::Lcg => "lcg",
            SystemKind::Brownian => "brownian",
            SystemKind::Ou => "ou",
            SystemKind::Cir => "cir",
            SystemKind::StochasticDuffing => "stochastic-duffing",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            SystemKind::Brownian | SystemKind::Ou | SystemKind::Cir | SystemKind::StochasticDuffing
        )
    }

    pub fn is_map(self) -> bool {
        matches!(self, SystemKind::Logistic | SystemKind::Henon | SystemKind::Lcg)
    }

    pub fn ground_truth(self) -> Label {
        if self.is_stochastic() {
            Label::Diffusive
        } else {
            Label::Deterministic
        }
    }

    pub fn state_dim(self) -> usize {
        match self {
            SystemKind::Logistic | SystemKind::Lcg => 1,
            SystemKind::Brownian | SystemKind::Ou | SystemKind::Cir => 1,
            SystemKind::Chen | SystemKind::Lu => 3,
            _ => 2,
        }
    }

    /// Named parameters and their default values.
    pub fn default_params(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            SystemKind::Shm => &[("omega", 1.0)],
            SystemKind::Duffing => &[
                ("delta", 0.2),
                ("alpha", -1.0),
                ("beta", 1.0),
                ("gamma", 0.3),
                ("omega", 1.2),
            ],
            SystemKind::RayleighDuffing => &[
                ("delta", 0.2),
                ("alpha", -1.0),
                ("beta", 1.0),
                ("gamma", 0.3),
                ("omega", 1.2),
                ("epsilon", 0.1),
            ],
            SystemKind::Chen => &[("a", 35.0), ("b", 3.0), ("c", 28.0)],
            SystemKind::Lu => &[("a", 36.0), ("b", 3.0), ("c", 20.0)],
            SystemKind::Logistic => &[("r", 4.0)],
            SystemKind::Henon => &[("a", 1.4), ("b", 0.3)],
            SystemKind::Lcg => &[("a", 1_664_525.0), ("c", 1_013_904_223.0), ("m", LCG_MODULUS)],
            SystemKind::Brownian => &[],
            SystemKind::Ou => &[("theta", 1.0), ("mu", 0.0)],
            SystemKind::Cir => &[("kappa", 1.0), ("theta", 1.0)],
            // drift -delta V - alpha X - beta X^3 + gamma cos(omega t);
            // beta = -1 reproduces the literal "+X + X^3", which blows up
            SystemKind::StochasticDuffing => &[
                ("delta", 0.2),
                ("alpha", -1.0),
                ("beta", 1.0),
                ("gamma", 0.3),
                ("omega", 1.2),
            ],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    /// Time scale setting the internal Euler–Maruyama step.
    ///
    /// The cubic restoring force of the stochastic Duffing oscillator stiffens
    /// at large amplitude; explicit steps of 1e-3 gain energy there and blow up
    /// under strong forcing.
    pub fn characteristic_time(self) -> f64 {
        match self {
            SystemKind::StochasticDuffing => 0.1,
            _ => 1.0,
        }
    }

    /// Initial state used when the spec gives none. The LCG seed comes from
    /// the spec seed instead.
    pub fn default_initial_state(self, params: &BTreeMap<String, f64>) -> Vec<f64> {
        match self {
            SystemKind::Shm => vec![1.0, 0.0],
            SystemKind::Duffing | SystemKind::RayleighDuffing => vec![0.1, 0.0],
            SystemKind::Chen | SystemKind::Lu => vec![1.0, 1.0, 1.0],
            SystemKind::Logistic => vec![0.2],
            SystemKind::Henon => vec![0.1, 0.1],
            SystemKind::Lcg => vec![0.0],
            SystemKind::Brownian | SystemKind::Ou => vec![0.0],
            SystemKind::Cir => vec![params.get("theta").copied().unwrap_or(1.0)],
            SystemKind::StochasticDuffing => vec![0.0, 0.0],
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        SystemKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                let names: Vec<&str> = SystemKind::ALL.iter().map(|k| k.name()).collect();
                Error::invalid(format!(
                    "unknown system kind '{s}'; expected one of: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Noise setting of a benchmark run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    /// Clean deterministic signal; for stochastic kinds this means `R = 1`.
    None,
    /// Additive white noise at this SNR (dB). `+inf` is noiseless.
    SnrDb(f64),
    /// Diffusion scale `σ = 1/R`.
    R(f64),
}

impl Noise {
    pub fn value(self) -> Option<f64> {
        match self {
            Noise::None => None,
            Noise::SnrDb(v) | Noise::R(v) => Some(v),
        }
    }
}

/// `σ = 1/R`.
pub fn noise_scale_from_r(r: f64) -> Result<f64> {
    if r.is_finite() && r > 0.0 {
        Ok(1.0 / r)
    } else {
        Err(Error::invalid(format!("R must be positive, got {r}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub params: BTreeMap<String, f64>,
    pub dt: f64,
    /// Total duration.
    pub t_total: f64,
    pub seed: u64,
    pub noise: Noise,
    pub initial_state: Option<Vec<f64>>,
}

impl SystemSpec {
    /// Spec with default parameters and no noise.
    pub fn new(kind: SystemKind, dt: f64, t_total: f64, seed: u64) -> Self {
        Self {
            kind,
            params: kind.default_params(),
            dt,
            t_total,
            seed,
            noise: Noise::None,
            initial_state: None,
        }
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_initial_state(mut self, state: Vec<f64>) -> Self {
        self.initial_state = Some(state);
        self
    }

    /// Number of output samples, `floor(T/dt) + 1`.
    pub fn n_samples(&self) -> usize {
        // tolerate T/dt landing a hair below an integer
        (self.t_total / self.dt * (1.0 + 1e-12)).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_total.is_finite() && self.t_total >= 2.0 * self.dt) {
            return Err(Error::invalid(format!(
                "T must be at least 2*dt, got T={} dt={}",
                self.t_total, self.dt
            )));
        }
        let allowed = self.kind.default_params();
        for (name, value) in &self.params {
            if !allowed.contains_key(name) {
                let names: Vec<&str> = allowed.keys().map(String::as_str).collect();
                return Err(Error::invalid(format!(
                    "unknown parameter '{name}' for {}; allowed: {}",
                    self.kind,
                    if names.is_empty() { "(none)".to_string() } else { names.join(", ") }
                )));
            }
            if !value.is_finite() {
                return Err(Error::invalid(format!("parameter {name} is not finite")));
            }
        }
        match (self.kind.is_stochastic(), self.noise) {
            (true, Noise::SnrDb(_)) => {
                return Err(Error::invalid(format!(
                    "{} is stochastic; use R, not an SNR",
                    self.kind
                )))
            }
            (false, Noise::R(_)) => {
                return Err(Error::invalid(format!(
                    "{} is deterministic; use an SNR, not R",
                    self.kind
                )))
            }
            (true, Noise::R(r)) => {
                noise_scale_from_r(r)?;
            }
            (false, Noise::SnrDb(s)) if s.is_nan() => {
                return Err(Error::invalid("SNR is NaN"));
            }
            _ => {}
        }
        if let Some(x0) = &self.initial_state {
            let want = self.kind.state_dim();
            if x0.len() != want {
                return Err(Error::invalid(format!(
                    "{} needs an initial state of dimension {want}, got {}",
                    self.kind,
                    x0.len()
                )));
            }
            if x0.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("initial state is not finite"));
            }
            if self.kind == SystemKind::Lcg {
                let m = self.param("m");
                if x0[0] < 0.0 || x0[0] >= m || x0[0].fract() != 0.0 {
                    return Err(Error::invalid(format!(
                        "LCG state must be an integer in [0, {m})"
                    )));
                }
            }
        }
        if self.kind == SystemKind::Lcg {
            for name in ["a", "c", "m"] {
                let v = self.param(name);
                if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
                    return Err(Error::invalid(format!("LCG {name} must be a nonnegative integer")));
                }
            }
            if self.param("m") < 1.0 {
                return Err(Error::invalid("LCG modulus must be at least 1"));
            }
        }
        Ok(())
    }

    /// Parameter value, falling back to the kind's default.
    pub fn param(&self, name: &str) -> f64 {
        self.params
            .get(name)
            .copied()
            .or_else(|| self.kind.default_params().get(name).copied())
            .unwrap_or(f64::NAN)
    }

    /// Diffusion scale of a stochastic kind.
    pub fn sigma(&self) -> Result<f64> {
        match self.noise {
            Noise::R(r) => noise_scale_from_r(r),
            _ => Ok(1.0),
        }
    }

    /// Flat `key = value` form, readable by [`SystemSpec::from_config`].
    pub fn to_config_string(&self) -> String {
        let mut s = format!(
            "kind = {}\ndt = {}\nT = {}\nseed = {}\n",
            self.kind, self.dt, self.t_total, self.seed
        );
        match self.noise {
            Noise::None => {}
            Noise::SnrDb(v) => s.push_str(&format!("snr_db = {v}\n")),
            Noise::R(v) => s.push_str(&format!("R = {v}\n")),
        }
        if let Some(x0) = &self.initial_state {
            let parts: Vec<String> = x0.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("x0 = {}\n", parts.join(",")));
        }
        for (k, v) in &self.params {
            s.push_str(&format!("param.{k} = {v}\n"));
        }
        s
    }

    pub fn from_config(text: &str) -> Result<Self> {
        let kv = KvFile::parse(text)?;
        let spec = Self::from_kv(&kv)?;
        kv.reject_unused()?;
        Ok(spec)
    }

    /// Build from parsed config entries, marking the keys it consumes.
    pub(crate) fn from_kv(kv: &KvFile) -> Result<Self> {
        let (kind_line, kind) = kv.require("kind")?;
        let kind: SystemKind = kind.parse().map_err(|e: Error| Error::parse(kind_line, e.to_string()))?;
        let num = |key: &str| -> Result<Option<f64>> {
            kv.get(key)
                .map(|(line, v)| parse_f64(v).map_err(|m| Error::parse(line, format!("{key}: {m}"))))
                .transpose()
        };
        let dt = num("dt")?.ok_or_else(|| Error::parse(0, "missing key 'dt'"))?;
        let t_total = num("T")?.ok_or_else(|| Error::parse(0, "missing key 'T'"))?;
        let seed = match kv.get("seed") {
            Some((line, v)) => v
                .parse::<u64>()
                .map_err(|_| Error::parse(line, format!("seed: '{v}' is not an unsigned integer")))?,
            None => 0,
        };
        let snr = num("snr_db")?;
        let r = num("R")?;
        let noise = match (snr, r) {
            (Some(_), Some(_)) => {
                return Err(Error::parse(kv.line_of("R"), "give either snr_db or R, not both"))
            }
            (Some(s), None) => Noise::SnrDb(s),
            (None, Some(r)) => Noise::R(r),
            (None, None) => Noise::None,
        };
        let mut spec = SystemSpec::new(kind, dt, t_total, seed).with_noise(noise);
        if let Some((line, v)) = kv.get("x0") {
            let x0 = parse_f64_list(v).map_err(|m| Error::parse(line, format!("x0: {m}")))?;
            spec.initial_state = Some(x0);
        }
        for (line, key, value) in kv.with_prefix("param.") {
            if !spec.params.contains_key(key) {
                let allowed: Vec<String> = spec.params.keys().cloned().collect();
                return Err(Error::parse(
                    line,
                    format!(
                        "unknown parameter 'param.{key}' for {kind}; allowed: {}",
                        allowed.join(", ")
                    ),
                ));
            }
            let v = parse_f64(value).map_err(|m| Error::parse(line, format!("param.{key}: {m}")))?;
            spec.params.insert(key.to_string(), v);
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// A simulated benchmark series with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSeries {
    pub trajectory: Trajectory,
    pub spec: SystemSpec,
    pub ground_truth: Label,
}

/// Right-hand side of a flow, or the drift of a stochastic kind.
///
/// Maps have no vector field; see [`map_step`].
pub fn system_rhs(kind: SystemKind, params: &BTreeMap<String, f64>, state: &[f64], t: f64) -> Result<Vec<f64>> {
    if state.len() != kind.state_dim() {
        return Err(Error::invalid(format!(
            "{kind} has state dimension {}, got {}",
            kind.state_dim(),
            state.len()
        )));
    }
    if kind.is_map() {
        return Err(Error::invalid(format!("{kind} is a map; use map_step")));
    }
    let p = Params::resolve(kind, params);
    let mut out = vec![0.0; state.len()];
    p.rhs(t, state, &mut out);
    Ok(out)
}

/// One iteration of a map kind. LCG states are the raw integers.
pub fn map_step(kind: SystemKind, params: &BTreeMap<String, f64>, state: &[f64]) -> Result<Vec<f64>> {
    if state.len() != kind.state_dim() {
        return Err(Error::invalid(format!(
            "{kind} has state dimension {}, got {}",
            kind.state_dim(),
            state.len()
        )));
    }
    let p = Params::resolve(kind, params);
    match p {
        Params::Logistic { r } => Ok(vec![r * state[0] * (1.0 - state[0])]),
        Params::Henon { a, b } => Ok(vec![1.0 - a * state[0] * state[0] + state[1], b * state[0]]),
        Params::Lcg { a, c, m } => Ok(vec![lcg_next(state[0] as u64, a, c, m) as f64]),
        _ => Err(Error::invalid(format!("{kind} is not a map"))),
    }
}

fn lcg_next(x: u64, a: u64, c: u64, m: u64) -> u64 {
    ((a as u128 * x as u128 + c as u128) % m as u128) as u64
}

/// Parameters unpacked into plain fields.
#[derive(Debug, Clone, Copy)]
enum Params {
    Shm { omega: f64 },
    Duffing { delta: f64, alpha: f64, beta: f64, gamma: f64, omega: f64, epsilon: f64 },
    Chen { a: f64, b: f64, c: f64 },
    Lu { a: f64, b: f64, c: f64 },
    Logistic { r: f64 },
    Henon { a: f64, b: f64 },
    Lcg { a: u64, c: u64, m: u64 },
    Brownian,
    Ou { theta: f64, mu: f64 },
    Cir { kappa: f64, theta: f64 },
}

impl Params {
    fn resolve(kind: SystemKind, given: &BTreeMap<String, f64>) -> Self {
        let defaults = kind.default_params();
        let g = |k: &str| given.get(k).or_else(|| defaults.get(k)).copied().unwrap_or(0.0);
        match kind {
            SystemKind::Shm => Params::Shm { omega: g("omega") },
            SystemKind::Duffing | SystemKind::RayleighDuffing | SystemKind::StochasticDuffing => {
                Params::Duffing {
                    delta: g("delta"),
                    alpha: g("alpha"),
                    beta: g("beta"),
                    gamma: g("gamma"),
                    omega: g("omega"),
                    epsilon: g("epsilon"),
                }
            }
            SystemKind::Chen => Params::Chen { a: g("a"), b: g("b"), c: g("c") },
            SystemKind::Lu => Params::Lu { a: g("a"), b: g("b"), c: g("c") },
            SystemKind::Logistic => Params::Logistic { r: g("r") },
            SystemKind::Henon => Params::Henon { a: g("a"), b: g("b") },
            SystemKind::Lcg => Params::Lcg {
                a: g("a") as u64,
                c: g("c") as u64,
                m: g("m") as u64,
            },
            SystemKind::Brownian => Params::Brownian,
            SystemKind::Ou => Params::Ou { theta: g("theta"), mu: g("mu") },
            SystemKind::Cir => Params::Cir { kappa: g("kappa"), theta: g("theta") },
        }
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        match *self {
            Params::Shm { omega } => {
                dy[0] = y[1];
                dy[1] = -omega * omega * y[0];
            }
            Params::Duffing { delta, alpha, beta, gamma, omega, epsilon } => {
                let (x, v) = (y[0], y[1]);
                dy[0] = v;
                dy[1] = -delta * v - epsilon * (v - v * v * v) - alpha * x - beta * x * x * x
                    + gamma * (omega * t).cos();
            }
            Params::Chen { a, b, c } => {
                let (x, yy, z) = (y[0], y[1], y[2]);
                dy[0] = a * (yy - x);
                dy[1] = (c - a) * x - x * z + c * yy;
                dy[2] = x * yy - b * z;
            }
            Params::Lu { a, b, c } => {
                let (x, yy, z) = (y[0], y[1], y[2]);
                dy[0] = a * (yy - x);
                dy[1] = -x * z + c * yy;
                dy[2] = x * yy - b * z;
            }
            Params::Brownian => dy[0] = 0.0,
            Params::Ou { theta, mu } => dy[0] = theta * (mu - y[0]),
            // full truncation: drift sees the positive part
            Params::Cir { kappa, theta } => dy[0] = kappa * (theta - y[0].max(0.0)),
            Params::Logistic { .. } | Params::Henon { .. } | Params::Lcg { .. } => {
                dy.iter_mut().for_each(|d| *d = 0.0)
            }
        }
    }
}

/// Golden-ratio / splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_DYNAMICS: u64 = 0;
const STREAM_OBSERVATION: u64 = 1;

fn rng_for(spec: &SystemSpec, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(spec.seed ^ mix64(spec.kind as u64 + 1)));
    rng.set_stream(stream);
    rng
}

/// Generate the benchmark series described by `spec`.
pub fn simulate(spec: &SystemSpec) -> Result<GeneratedSeries> {
    spec.validate()?;
    let n = spec.n_samples();
    let x0 = match &spec.initial_state {
        Some(x) => x.clone(),
        None if spec.kind == SystemKind::Lcg => vec![(spec.seed % spec.param("m") as u64) as f64],
        None => spec.kind.default_initial_state(&spec.params),
    };
    let params = Params::resolve(spec.kind, &spec.params);

    let mut values = if spec.kind.is_map() {
        iterate_map(params, &x0, n)
    } else if spec.kind.is_stochastic() {
        euler_maruyama(spec, params, &x0, n)?
    } else {
        integrate_flow(spec, params, &x0, n)?
    };

    if let Noise::SnrDb(snr) = spec.noise {
        let clean = Trajectory::new(values, spec.dt)?;
        let seed = mix64(spec.seed ^ mix64(spec.kind as u64 + 1));
        values = add_noise_snr_with(&clean, snr, rng_from(seed, STREAM_OBSERVATION))?.into_values();
    }

    let ground_truth = spec.kind.ground_truth();
    let trajectory = Trajectory::with_label(values, spec.dt, ground_truth)?;
    Ok(GeneratedSeries {
        trajectory,
        spec: spec.clone(),
        ground_truth,
    })
}

fn rng_from(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn iterate_map(params: Params, x0: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    match params {
        Params::Logistic { r } => {
            let mut x = x0[0];
            for _ in 0..n {
                out.push(x);
                x = r * x * (1.0 - x);
            }
        }
        Params::Henon { a, b } => {
            let (mut x, mut y) = (x0[0], x0[1]);
            for _ in 0..n {
                out.push(x);
                (x, y) = (1.0 - a * x * x + y, b * x);
            }
        }
        Params::Lcg { a, c, m } => {
            let mut x = x0[0] as u64;
            for _ in 0..n {
                out.push(x as f64 / m as f64);
                x = lcg_next(x, a, c, m);
            }
        }
        _ => unreachable!("not a map"),
    }
    out
}

fn integrate_flow(spec: &SystemSpec, params: Params, x0: &[f64], n: usize) -> Result<Vec<f64>> {
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| params.rhs(t, y, dy);
    let tol = Tolerances::default();
    let mut start = x0.to_vec();
    let mut t0 = 0.0;
    if matches!(spec.kind, SystemKind::Chen | SystemKind::Lu) {
        let burn = integrate_rk23(rhs, 0.0, x0, ATTRACTOR_TRANSIENT, 2, tol)?;
        start = burn[1].clone();
        t0 = ATTRACTOR_TRANSIENT;
    }
    let states = integrate_rk23(rhs, t0, &start, spec.dt, n, tol)?;
    Ok(states.into_iter().map(|s| s[0]).collect())
}

fn euler_maruyama(spec: &SystemSpec, params: Params, x0: &[f64], n: usize) -> Result<Vec<f64>> {
    let sigma = spec.sigma()?;
    let max_step = MAX_SDE_STEP * spec.kind.characteristic_time();
    let substeps = (spec.dt / max_step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = spec.dt / substeps as f64;
    let sqrt_h = h.sqrt();
    let mut rng = rng_for(spec, STREAM_DYNAMICS);
    let mut state = x0.to_vec();
    let mut drift = vec![0.0; state.len()];
    let mut out = Vec::with_capacity(n);
    let observe = |s: &[f64]| match params {
        Params::Cir { .. } => s[0].max(0.0),
        _ => s[0],
    };
    out.push(observe(&state));
    for k in 1..n {
        for j in 0..substeps {
            let t = ((k - 1) * substeps + j) as f64 * h;
            params.rhs(t, &state, &mut drift);
            let z: f64 = StandardNormal.sample(&mut rng);
            let dw = sqrt_h * z;
            match params {
                Params::Cir { .. } => {
                    state[0] += drift[0] * h + sigma * state[0].max(0.0).sqrt() * dw;
                }
                // rank-1 diffusion: one increment drives both components
                Params::Duffing { .. } => {
                    state[0] += drift[0] * h + sigma * dw;
                    state[1] += drift[1] * h + sigma * dw;
                }
                _ => state[0] += drift[0] * h + sigma * dw,
            }
        }
        if state.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND) {
            return Err(Error::SimulationDiverged {
                t: k as f64 * spec.dt,
                detail: format!("{} state left the bound {DIVERGENCE_BOUND:e}", spec.kind),
            });
        }
        out.push(observe(&state));
    }
    Ok(out)
}

/// Add white Gaussian noise at the given SNR (dB) using the sample variance
/// of the clean series as signal power. `+inf` returns the input unchanged.
pub fn add_noise_snr(traj: &Trajectory, snr_db: f64, seed: u64) -> Result<Trajectory> {
    add_noise_snr_with(traj, snr_db, rng_from(seed, STREAM_OBSERVATION))
}

fn add_noise_snr_with(traj: &Trajectory, snr_db: f64, mut rng: ChaCha8Rng) -> Result<Trajectory> {
    if snr_db.is_nan() {
        return Err(Error::invalid("SNR is NaN"));
    }
    let v = traj.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let power = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if power <= 0.0 {
        return Err(Error::degenerate("clean signal has zero variance; SNR undefined"));
    }
    if snr_db == f64::INFINITY {
        return Ok(traj.clone());
    }
    let sd = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let noisy = v
        .iter()
        .map(|x| {
            let z: f64 = StandardNormal.sample(&mut rng);
            x + sd * z
        })
        .collect();
    Trajectory::with_label(noisy, traj.dt(), traj.label())
}
