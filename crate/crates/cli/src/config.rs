//! Run configuration: INI files, command-line flags and presets merged into
//! typed per-curve settings.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use magnon_echo::channels::coherent;
use magnon_echo::{
    ChainSpec, CoherentGate, EchoAxis, Error, HarperParams, InitialState, KrausChannel, QdpKind, C64,
};

use crate::presets::Preset;

/// Every key accepted in a config file; each is also a `--key` flag.
pub const KEYS: &[&str] = &[
    "scenario",
    "N",
    "delta",
    "gap",
    "g",
    "tau",
    "tau2",
    "eta",
    "state",
    "alpha-re",
    "alpha-im",
    "beta-re",
    "beta-im",
    "beta2",
    "r",
    "channel",
    "p",
    "qdp",
    "gamma-re",
    "gamma-im",
    "gate-delta-re",
    "gate-delta-im",
    "m",
    "sites",
    "t0",
    "t",
    "n",
    "order",
    "quantity",
    "model",
    "averaged",
    "output",
];

pub type Entries = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Runtime(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Library errors raised while validating a configuration.
pub(crate) fn usage_from(err: Error) -> CliError {
    CliError::Usage(err.to_string())
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_ini(text: &str) -> Result<Entries, CliError> {
    let mut out = Entries::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected `key = value`", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(usage(format!("config line {}: unknown key `{key}`", lineno + 1)));
        }
        if value.is_empty() {
            return Err(usage(format!("config line {}: empty value for `{key}`", lineno + 1)));
        }
        out.insert(key.to_string(), value.to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    EchoSingle,
    EchoCoherent,
    EchoMulti,
    HarperGreen,
    HarperEcho,
    HarperEchoQdp,
    HarperReverse,
    Oracle,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::EchoSingle,
        Scenario::EchoCoherent,
        Scenario::EchoMulti,
        Scenario::HarperGreen,
        Scenario::HarperEcho,
        Scenario::HarperEchoQdp,
        Scenario::HarperReverse,
        Scenario::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::EchoSingle => "echo-single",
            Scenario::EchoCoherent => "echo-coherent",
            Scenario::EchoMulti => "echo-multi",
            Scenario::HarperGreen => "harper-green",
            Scenario::HarperEcho => "harper-echo",
            Scenario::HarperEchoQdp => "harper-echo-qdp",
            Scenario::HarperReverse => "harper-reverse",
            Scenario::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| usage(format!("unknown scenario `{s}`")))
    }

    fn is_harper(&self) -> bool {
        matches!(
            self,
            Scenario::HarperGreen | Scenario::HarperEcho | Scenario::HarperEchoQdp | Scenario::HarperReverse
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Echo,
    /// real part of a σ^z string amplitude
    String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleModel {
    Chain,
    Harper,
}

/// `start:stop:step`, inclusive of `stop` within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub axis: EchoAxis,
    pub values: Vec<f64>,
}

pub const GRID_TOL: f64 = 1e-12;

pub fn parse_grid(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("`{key}`: grid must be start:stop:step, got `{text}`")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| number(key, p))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) {
        return Err(usage(format!("`{key}`: grid step must be positive, got {step}")));
    }
    if stop < start {
        return Err(usage(format!("`{key}`: grid stop {stop} is below start {start}")));
    }
    let count = ((stop - start) / step + GRID_TOL).floor() as usize;
    let mut values: Vec<f64> = (0..=count).map(|k| start + k as f64 * step).collect();
    if let Some(last) = values.last_mut() {
        if (*last - stop).abs() <= GRID_TOL * stop.abs().max(1.0) {
            *last = stop;
        }
    }
    Ok(values)
}

fn number(key: &str, text: &str) -> Result<f64, CliError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| usage(format!("`{key}`: expected a number, got `{text}`")))?;
    if !v.is_finite() {
        return Err(usage(format!("`{key}`: value must be finite, got `{text}`")));
    }
    Ok(v)
}

fn integer(key: &str, text: &str) -> Result<i64, CliError> {
    text.trim()
        .parse()
        .map_err(|_| usage(format!("`{key}`: expected an integer, got `{text}`")))
}

fn is_grid(text: &str) -> bool {
    text.contains(':')
}

/// Typed settings of one output series.
#[derive(Debug, Clone)]
pub struct CurveConfig {
    pub label: String,
    pub entries: Entries,
    pub scenario: Scenario,
    /// `None` is the infinite chain
    pub sites: Option<usize>,
    pub delta: f64,
    pub gap: Option<f64>,
    pub g: f64,
    pub tau: f64,
    pub tau2: Option<f64>,
    pub eta: i64,
    pub state: InitialState,
    pub channel: KrausChannel,
    pub gate: CoherentGate,
    pub use_gate: bool,
    pub m: i64,
    pub site_list: Vec<i64>,
    pub t0: f64,
    pub t: f64,
    pub n: usize,
    pub order: Option<usize>,
    pub quantity: Quantity,
    pub model: OracleModel,
    pub averaged: bool,
    pub sweep: Option<Grid>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub preset: Option<String>,
    /// Values set by the config file or flags, echoed into the CSV header.
    pub explicit: Entries,
    pub curves: Vec<CurveConfig>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Merge order, later wins: preset base, preset curve, config file, flags.
    pub fn resolve(preset: Option<&Preset>, file: &Entries, flags: &Entries) -> Result<Self, CliError> {
        let mut explicit = file.clone();
        explicit.extend(flags.iter().map(|(k, v)| (k.clone(), v.clone())));
        let layers: Vec<(String, Entries)> = match preset {
            Some(p) => p.curves(),
            None => vec![(String::new(), Entries::new())],
        };
        let curves = layers
            .into_iter()
            .map(|(label, mut merged)| {
                merged.extend(explicit.iter().map(|(k, v)| (k.clone(), v.clone())));
                CurveConfig::from_entries(label, merged)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let output = explicit.get("output").map(PathBuf::from);
        Ok(Self {
            preset: preset.map(|p| p.name.to_string()),
            explicit,
            curves,
            output,
        })
    }

    /// One line listing the preset and every explicitly set key.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(p) = &self.preset {
            parts.push(format!("preset={p}"));
        }
        parts.extend(self.explicit.iter().map(|(k, v)| format!("{k}={v}")));
        parts.join(" ")
    }
}

struct Lookup<'a> {
    entries: &'a Entries,
    swept: Option<&'static str>,
}

impl Lookup<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn scalar(&self, key: &str) -> Result<Option<&str>, CliError> {
        if self.swept == Some(key) {
            return Ok(None);
        }
        match self.raw(key) {
            Some(v) if is_grid(v) => Err(usage(format!("`{key}` does not take a grid in this scenario"))),
            other => Ok(other),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        self.scalar(key)?.map_or(Ok(default), |v| number(key, v))
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.scalar(key)?.map(|v| number(key, v)).transpose()
    }

    fn i64_or(&self, key: &str, default: i64) -> Result<i64, CliError> {
        self.scalar(key)?.map_or(Ok(default), |v| integer(key, v))
    }
}

fn axis_key(axis: EchoAxis) -> &'static str {
    match axis {
        EchoAxis::T0 => "t0",
        EchoAxis::T => "t",
        EchoAxis::N => "n",
        EchoAxis::M => "m",
    }
}

fn allowed_axes(scenario: Scenario, quantity: Quantity) -> &'static [EchoAxis] {
    match scenario {
        Scenario::EchoSingle | Scenario::EchoCoherent => &[EchoAxis::T0, EchoAxis::M],
        Scenario::EchoMulti if quantity == Quantity::String => &[EchoAxis::T0],
        Scenario::EchoMulti => &[EchoAxis::N, EchoAxis::T0],
        Scenario::HarperGreen | Scenario::HarperReverse => &[],
        Scenario::HarperEcho => &[EchoAxis::N],
        Scenario::HarperEchoQdp => &[EchoAxis::N, EchoAxis::M],
        Scenario::Oracle => &[EchoAxis::T0, EchoAxis::M, EchoAxis::N],
    }
}

fn parse_sweep(entries: &Entries, scenario: Scenario, quantity: Quantity) -> Result<Option<Grid>, CliError> {
    let mut found = Vec::new();
    for axis in [EchoAxis::T0, EchoAxis::T, EchoAxis::N, EchoAxis::M] {
        let key = axis_key(axis);
        if let Some(v) = entries.get(key).filter(|v| is_grid(v)) {
            if !allowed_axes(scenario, quantity).contains(&axis) {
                return Err(usage(format!("`{key}` cannot be swept in scenario {}", scenario.name())));
            }
            found.push(Grid {
                axis,
                values: parse_grid(key, v)?,
            });
        }
    }
    if found.len() > 1 {
        return Err(usage("exactly one sweep axis may be given as a grid"));
    }
    let grid = found.pop();
    if grid.is_none() && !allowed_axes(scenario, quantity).is_empty() {
        let names: Vec<&str> = allowed_axes(scenario, quantity).iter().map(|a| axis_key(*a)).collect();
        return Err(usage(format!(
            "scenario {} needs a sweep grid on one of: {}",
            scenario.name(),
            names.join(", ")
        )));
    }
    if let Some(g) = &grid {
        if matches!(g.axis, EchoAxis::N | EchoAxis::M) && g.values.iter().any(|v| v.fract() != 0.0) {
            return Err(usage(format!("`{}` grid must contain integers", axis_key(g.axis))));
        }
    }
    Ok(grid)
}

fn parse_channel(name: &str, p: f64) -> Result<KrausChannel, CliError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(usage(format!("`p` must lie in [0, 1], got {p}")));
    }
    match name {
        "phase-flip" => KrausChannel::phase_flip(p).map_err(usage_from),
        "bit-flip" => KrausChannel::bit_flip(p).map_err(usage_from),
        "project-z" => Ok(KrausChannel::project_z()),
        "project-x" => Ok(KrausChannel::project_x()),
        other => Err(usage(format!(
            "unknown channel `{other}` (phase-flip, bit-flip, project-z, project-x)"
        ))),
    }
}

fn parse_state(l: &Lookup) -> Result<InitialState, CliError> {
    let component_keys = ["alpha-re", "alpha-im", "beta-re", "beta-im"];
    let has_components = component_keys.iter().any(|k| l.raw(k).is_some());
    let beta2 = l.opt_f64("beta2")?;
    if has_components && beta2.is_some() {
        return Err(usage("give either `beta2` or the alpha/beta components, not both"));
    }
    let (alpha, beta) = if let Some(b2) = beta2 {
        if !(0.0..=1.0).contains(&b2) {
            return Err(usage(format!("`beta2` must lie in [0, 1], got {b2}")));
        }
        (C64::from((1.0 - b2).sqrt()), C64::from(b2.sqrt()))
    } else if has_components {
        (
            C64::new(l.f64_or("alpha-re", 0.0)?, l.f64_or("alpha-im", 0.0)?),
            C64::new(l.f64_or("beta-re", 0.0)?, l.f64_or("beta-im", 0.0)?),
        )
    } else {
        let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        (h, h)
    };
    match l.raw("state").unwrap_or("unentangled") {
        "unentangled" => InitialState::unentangled(alpha, beta).map_err(usage_from),
        "entangled" => InitialState::entangled(alpha, beta, l.i64_or("r", 5)?).map_err(usage_from),
        other => Err(usage(format!("unknown state `{other}` (unentangled, entangled)"))),
    }
}

fn parse_sites(text: &str) -> Result<Vec<i64>, CliError> {
    text.split(',').map(|s| integer("sites", s)).collect()
}

fn parse_bool(key: &str, text: &str) -> Result<bool, CliError> {
    match text {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(usage(format!("`{key}`: expected true or false, got `{other}`"))),
    }
}

pub const DEFAULT_SITES: usize = 1000;

impl CurveConfig {
    pub fn from_entries(label: String, entries: Entries) -> Result<Self, CliError> {
        for key in entries.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(usage(format!("unknown key `{key}`")));
            }
        }
        let mut l = Lookup {
            entries: &entries,
            swept: None,
        };
        let scenario = Scenario::parse(l.raw("scenario").ok_or_else(|| usage("missing `scenario`"))?)?;
        let quantity = match l.raw("quantity").unwrap_or("echo") {
            "echo" => Quantity::Echo,
            "string" => Quantity::String,
            other => return Err(usage(format!("unknown quantity `{other}` (echo, string)"))),
        };
        let model = match l.raw("model").unwrap_or("chain") {
            "chain" => OracleModel::Chain,
            "harper" => OracleModel::Harper,
            other => return Err(usage(format!("unknown model `{other}` (chain, harper)"))),
        };
        let sweep = parse_sweep(&entries, scenario, quantity)?;
        l.swept = sweep.as_ref().map(|g| axis_key(g.axis));
        let sites = match l.scalar("N")? {
            Some("inf") => None,
            Some(v) => Some(
                usize::try_from(integer("N", v)?).map_err(|_| usage(format!("`N` must be positive, got {v}")))?,
            ),
            None => Some(DEFAULT_SITES),
        };
        let p = l.f64_or("p", 0.5)?;
        let channel = parse_channel(l.raw("channel").unwrap_or("project-z"), p)?;
        let s3 = 3f64.sqrt();
        let gate = coherent(
            C64::new(l.f64_or("gamma-re", 1.0 / s3)?, l.f64_or("gamma-im", 1.0 / s3)?),
            C64::new(l.f64_or("gate-delta-re", 1.0 / s3)?, l.f64_or("gate-delta-im", 0.0)?),
        )
        .map_err(usage_from)?;
        let use_gate = match l.raw("qdp").unwrap_or(if scenario == Scenario::EchoCoherent { "gate" } else { "channel" }) {
            "channel" => false,
            "gate" => true,
            other => return Err(usage(format!("unknown qdp `{other}` (channel, gate)"))),
        };
        let site_list = l.raw("sites").map(parse_sites).transpose()?.unwrap_or_default();
        let order = l
            .scalar("order")?
            .map(|v| integer("order", v))
            .transpose()?
            .map(|o| usize::try_from(o).map_err(|_| usage(format!("`order` must be positive, got {o}"))))
            .transpose()?;
        let n = l.i64_or("n", 10)?;
        let cfg = CurveConfig {
            label,
            scenario,
            sites,
            delta: l.f64_or("delta", 1.0)?,
            gap: l.opt_f64("gap")?,
            g: l.f64_or("g", 1.0)?,
            tau: l.f64_or("tau", 0.1)?,
            tau2: l.opt_f64("tau2")?,
            eta: l.i64_or("eta", 1)?,
            state: parse_state(&l)?,
            channel,
            gate,
            use_gate,
            m: l.i64_or("m", 1)?,
            site_list,
            t0: l.f64_or("t0", 1.0)?,
            t: l.f64_or("t", 100.0)?,
            n: usize::try_from(n).map_err(|_| usage(format!("`n` must be non-negative, got {n}")))?,
            order,
            quantity,
            model,
            averaged: l.raw("averaged").map(|v| parse_bool("averaged", v)).transpose()?.unwrap_or(false),
            sweep,
            entries,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let needs_finite = self.scenario.is_harper() || self.scenario == Scenario::Oracle;
        if needs_finite && self.sites.is_none() {
            return Err(usage(format!("scenario {} needs a finite `N`", self.scenario.name())));
        }
        let chain = self.chain()?;
        let swept_m = self.sweep.as_ref().filter(|g| g.axis == EchoAxis::M);
        let mut sites: Vec<i64> = self.site_list.clone();
        match swept_m {
            Some(g) => sites.extend(g.values.iter().map(|v| *v as i64)),
            None => sites.push(self.m),
        }
        if let InitialState::Entangled { partner, .. } = self.state {
            sites.push(partner);
        }
        for s in sites {
            chain.check_site(s).map_err(usage_from)?;
        }
        if self.scenario.is_harper() || (self.scenario == Scenario::Oracle && self.model == OracleModel::Harper) {
            self.harper(self.tau)?;
            if let Some(t2) = self.tau2 {
                self.harper(t2)?;
            }
        }
        if self.scenario == Scenario::HarperReverse && self.tau2.is_none() {
            return Err(usage("harper-reverse needs the backward period `tau2`"));
        }
        if self.scenario == Scenario::EchoMulti && self.site_list.is_empty() {
            return Err(usage("echo-multi needs a `sites` list"));
        }
        if let Some(o) = self.order {
            if o < 2 {
                return Err(usage(format!("`order` must be at least 2, got {o}")));
            }
        }
        Ok(())
    }

    pub fn chain(&self) -> Result<ChainSpec, CliError> {
        let chain = match self.sites {
            Some(n) => ChainSpec::finite(n, self.delta),
            None => ChainSpec::infinite(self.delta),
        }
        .map_err(usage_from)?;
        match self.gap {
            Some(gap) => chain.with_magnon_gap(gap).map_err(usage_from),
            None => Ok(chain),
        }
    }

    pub fn harper(&self, tau: f64) -> Result<HarperParams, CliError> {
        let n = self.sites.ok_or_else(|| usage("Harper scenarios need a finite `N`"))?;
        HarperParams::new(self.g, tau, self.eta, n).map_err(usage_from)
    }

    pub fn qdp_kind(&self) -> QdpKind {
        if self.use_gate {
            QdpKind::Coherent(self.gate)
        } else {
            QdpKind::Incoherent(self.channel.clone())
        }
    }

    /// `key=value` pairs of this curve, for the series comment line.
    pub fn describe(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(pairs: &[(&str, &str)]) -> Entries {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn grid_endpoints() {
        let g = parse_grid("t0", "0:5:0.25").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(*g.last().unwrap(), 5.0);
        assert_eq!(parse_grid("t0", "0:1:0.1").unwrap().len(), 11);
        assert!(parse_grid("t0", "1:0:0.1").is_err());
        assert!(parse_grid("t0", "0:1:0").is_err());
        assert!(parse_grid("t0", "0:1").is_err());
    }

    #[test]
    fn ini_parsing() {
        let e = parse_ini("# comment\nscenario = echo-single\n\nN = inf # trailing\n").unwrap();
        assert_eq!(e["scenario"], "echo-single");
        assert_eq!(e["N"], "inf");
        assert!(matches!(parse_ini("bogus = 1"), Err(CliError::Usage(m)) if m.contains("bogus")));
        assert!(parse_ini("scenario").is_err());
    }

    #[test]
    fn example_configuration() {
        let e = entries(&[
            ("scenario", "echo-single"),
            ("N", "inf"),
            ("channel", "project-z"),
            ("m", "1"),
            ("beta2", "0.5"),
            ("t0", "0:5:0.25"),
        ]);
        let c = CurveConfig::from_entries(String::new(), e).unwrap();
        assert_eq!(c.sites, None);
        assert_eq!(c.sweep.unwrap().values.len(), 21);
    }

    #[test]
    fn range_errors_name_the_field() {
        let e = entries(&[("scenario", "echo-single"), ("channel", "phase-flip"), ("p", "1.5"), ("t0", "0:1:0.5")]);
        match CurveConfig::from_entries(String::new(), e) {
            Err(CliError::Usage(msg)) => assert!(msg.contains("`p`"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_rules() {
        let two = entries(&[("scenario", "echo-single"), ("t0", "0:1:0.5"), ("m", "1:3:1")]);
        assert!(CurveConfig::from_entries(String::new(), two).is_err());
        let none = entries(&[("scenario", "echo-single")]);
        assert!(CurveConfig::from_entries(String::new(), none).is_err());
        let far = entries(&[("scenario", "echo-single"), ("N", "10"), ("m", "11"), ("t0", "0:1:0.5")]);
        assert!(CurveConfig::from_entries(String::new(), far).is_err());
        let missing = entries(&[("t0", "0:1:0.5")]);
        assert_eq!(
            CurveConfig::from_entries(String::new(), missing).unwrap_err(),
            CliError::Usage("missing `scenario`".into())
        );
    }
}
