//! Run configuration: flat `key = value` lines, `#` comments, dotted section
//! prefixes. Units are part of the key name and converted to SI on parse.
//! Every length, time and wavelength also has an SI-named key (`_m`, `_s`),
//! which is what [`RunConfig::to_text`] writes so that a parsed config
//! survives a round trip unchanged.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use eraser_core::geometry::{linspace, ExperimentGeometry};
use eraser_core::mc::McConfig;
use eraser_core::pdc::{PhaseConvention, PumpParams, DEFAULT_IDLER_TIME, DEFAULT_SIGNAL_TIME};
use eraser_core::ti::DetectorChannel;
use eraser_core::wavepacket::{ArmLengths, WavePacketParams, SPEED_OF_LIGHT};
use eraser_core::Detector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ti,
    Oracle,
    Wavepacket,
    Mc,
    Crosscheck,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Ti => "ti",
            Mode::Oracle => "oracle",
            Mode::Wavepacket => "wavepacket",
            Mode::Mc => "mc",
            Mode::Crosscheck => "crosscheck",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ti" => Ok(Mode::Ti),
            "oracle" => Ok(Mode::Oracle),
            "wavepacket" => Ok(Mode::Wavepacket),
            "mc" => Ok(Mode::Mc),
            "crosscheck" => Ok(Mode::Crosscheck),
            _ => Err(format!(
                "unknown mode '{s}' (expected ti, oracle, wavepacket, mc or crosscheck)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Grid {
    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub pump: PumpParams,
    pub t0: f64,
    pub ti: f64,
    pub convention: PhaseConvention,
    /// Time-average over the coincidence window; otherwise evaluate at
    /// `(t0, ti)`.
    pub average: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketSettings {
    /// Defaults to `2πc/λ` from the geometry.
    pub omega: Option<f64>,
    pub gamma: f64,
    pub eps0: f64,
    pub dipole_angle: f64,
    pub l1a: f64,
    pub l1b: f64,
    /// Defaults to `L/c`.
    pub t: Option<f64>,
    pub suppress_advanced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub trials: u64,
    pub bins: usize,
    pub seed: u64,
    pub efficiency: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub path: PathBuf,
    pub wide: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub geometry: ExperimentGeometry,
    pub channels: Vec<Detector>,
    pub grid: Grid,
    pub eta: [f64; 4],
    pub phi: f64,
    pub delta_lambda: f64,
    pub oracle: OracleSettings,
    pub wavepacket: WavepacketSettings,
    pub mc: McSettings,
    pub output: Output,
}

impl RunConfig {
    pub fn defaults(mode: Mode) -> Self {
        Self {
            mode,
            geometry: ExperimentGeometry::default(),
            channels: Detector::ALL.to_vec(),
            grid: Grid {
                x_min: -3e-3,
                x_max: 3e-3,
                points: 1001,
            },
            eta: [1.0; 4],
            phi: 0.0,
            delta_lambda: 0.0,
            oracle: OracleSettings {
                pump: PumpParams::default(),
                t0: DEFAULT_SIGNAL_TIME,
                ti: DEFAULT_IDLER_TIME,
                convention: PhaseConvention::Appendix,
                average: true,
            },
            wavepacket: WavepacketSettings {
                omega: None,
                gamma: 1e8,
                eps0: 1.0,
                dipole_angle: std::f64::consts::FRAC_PI_2,
                l1a: 1.0,
                l1b: 1.0,
                t: None,
                suppress_advanced: false,
            },
            mc: McSettings {
                trials: 1_000_000,
                bins: 200,
                seed: 1,
                efficiency: [1.0; 4],
            },
            output: Output {
                path: PathBuf::from("pattern.csv"),
                wide: false,
            },
        }
    }

    pub fn channel(&self, d: Detector) -> DetectorChannel {
        DetectorChannel::new(d, self.eta[d.index()], self.phi).expect("validated on parse")
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            trials: self.mc.trials,
            x_min: self.grid.x_min,
            x_max: self.grid.x_max,
            bins: self.mc.bins,
            seed: self.mc.seed,
            efficiency: self.mc.efficiency,
            visibility: self.eta,
            phi: self.phi,
            delta_lambda: self.delta_lambda,
            geometry: self.geometry,
        }
    }

    pub fn wavepacket_params(&self) -> WavePacketParams {
        let w = &self.wavepacket;
        let omega = w
            .omega
            .unwrap_or(2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.geometry.wavelength());
        WavePacketParams::new(omega, w.gamma, w.eps0, w.dipole_angle).expect("validated on parse")
    }

    pub fn arms(&self) -> ArmLengths {
        ArmLengths::new(self.wavepacket.l1a, self.wavepacket.l1b).expect("validated on parse")
    }

    pub fn wavepacket_time(&self) -> f64 {
        self.wavepacket.t.unwrap_or(self.arms().common() / SPEED_OF_LIGHT)
    }

    /// Config text in SI keys. Re-parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut lines = vec![format!("mode = {}", self.mode.name())];
        let mut put = |k: &str, v: String| lines.push(format!("{k} = {v}"));
        let g = &self.geometry;
        put("geometry.a_m", format!("{:e}", g.slit_width()));
        put("geometry.d_m", format!("{:e}", g.separation()));
        put("geometry.lambda_m", format!("{:e}", g.wavelength()));
        put("geometry.f_m", format!("{:e}", g.focal_length()));
        put(
            "channels",
            self.channels.iter().map(|d| d.name()).collect::<Vec<_>>().join(", "),
        );
        put("grid.x_min_m", format!("{:e}", self.grid.x_min));
        put("grid.x_max_m", format!("{:e}", self.grid.x_max));
        put("grid.points", self.grid.points.to_string());
        for d in Detector::ALL {
            put(&format!("eta_{}", d.name()), format!("{:e}", self.eta[d.index()]));
        }
        put("phi_rad", format!("{:e}", self.phi));
        put("delta_lambda_m", format!("{:e}", self.delta_lambda));
        let o = &self.oracle;
        put("pump.omega_p_per_s", format!("{:e}", o.pump.omega_p()));
        put("pump.theta_rad", format!("{:e}", o.pump.theta()));
        put("pump.window_s", format!("{:e}", o.pump.window()));
        put("pump.t0_s", format!("{:e}", o.t0));
        put("pump.ti_s", format!("{:e}", o.ti));
        put("oracle.phase_convention", o.convention.name().to_string());
        put("oracle.average", o.average.to_string());
        let w = &self.wavepacket;
        if let Some(omega) = w.omega {
            put("wavepacket.omega_rad_per_s", format!("{omega:e}"));
        }
        put("wavepacket.gamma_per_s", format!("{:e}", w.gamma));
        put("wavepacket.eps0", format!("{:e}", w.eps0));
        put("wavepacket.dipole_angle_rad", format!("{:e}", w.dipole_angle));
        put("wavepacket.l1a_m", format!("{:e}", w.l1a));
        put("wavepacket.l1b_m", format!("{:e}", w.l1b));
        if let Some(t) = w.t {
            put("wavepacket.t_s", format!("{t:e}"));
        }
        put("wavepacket.suppress_advanced", w.suppress_advanced.to_string());
        put("mc.trials", self.mc.trials.to_string());
        put("mc.bins", self.mc.bins.to_string());
        put("mc.seed", self.mc.seed.to_string());
        for d in Detector::ALL {
            put(
                &format!("mc.efficiency_{}", d.name()),
                format!("{:e}", self.mc.efficiency[d.index()]),
            );
        }
        put("output.path", self.output.path.display().to_string());
        put("output.wide", self.output.wide.to_string());
        lines.push(String::new());
        lines.join("\n")
    }
}

/// Unit-suffixed keys, their SI twin and the factor to SI.
const UNIT_KEYS: &[(&str, &str, f64)] = &[
    ("geometry.a_mm", "geometry.a_m", 1e-3),
    ("geometry.d_mm", "geometry.d_m", 1e-3),
    ("geometry.lambda_nm", "geometry.lambda_m", 1e-9),
    ("grid.x_min_mm", "grid.x_min_m", 1e-3),
    ("grid.x_max_mm", "grid.x_max_m", 1e-3),
    ("delta_lambda_nm", "delta_lambda_m", 1e-9),
    ("pump.window_ns", "pump.window_s", 1e-9),
    ("pump.t0_ns", "pump.t0_s", 1e-9),
    ("pump.ti_ns", "pump.ti_s", 1e-9),
    ("wavepacket.t_ns", "wavepacket.t_s", 1e-9),
];

const PLAIN_KEYS: &[&str] = &[
    "mode",
    "geometry.f_m",
    "channels",
    "grid.points",
    "eta_d1",
    "eta_d2",
    "eta_d3",
    "eta_d4",
    "phi_rad",
    "pump.omega_p_per_s",
    "pump.theta_rad",
    "oracle.phase_convention",
    "oracle.average",
    "wavepacket.omega_rad_per_s",
    "wavepacket.gamma_per_s",
    "wavepacket.eps0",
    "wavepacket.dipole_angle_rad",
    "wavepacket.l1a_m",
    "wavepacket.l1b_m",
    "wavepacket.suppress_advanced",
    "mc.trials",
    "mc.bins",
    "mc.seed",
    "mc.efficiency_d1",
    "mc.efficiency_d2",
    "mc.efficiency_d3",
    "mc.efficiency_d4",
    "output.path",
    "output.wide",
];

fn known(key: &str) -> bool {
    PLAIN_KEYS.contains(&key) || UNIT_KEYS.iter().any(|(u, si, _)| *u == key || *si == key)
}

struct Entries {
    map: HashMap<String, (usize, String)>,
}

impl Entries {
    fn read(text: &str) -> Result<Self, ConfigError> {
        let mut map: HashMap<String, (usize, String)> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line),
                    key: None,
                    message: "expected `key = value`".into(),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if !known(k) {
                return Err(ConfigError {
                    line: Some(line),
                    key: Some(k.into()),
                    message: "unknown key".into(),
                });
            }
            if let Some((first, _)) = map.get(k) {
                return Err(ConfigError {
                    line: Some(line),
                    key: Some(k.into()),
                    message: format!("already set on line {first}"),
                });
            }
            map.insert(k.to_string(), (line, v.to_string()));
        }
        for (unit, si, _) in UNIT_KEYS {
            if let (Some(_), Some((line, _))) = (map.get(*unit), map.get(*si)) {
                return Err(ConfigError {
                    line: Some(*line),
                    key: Some((*si).into()),
                    message: format!("conflicts with `{unit}`; give one or the other"),
                });
            }
        }
        Ok(Self { map })
    }

    fn err(&self, key: &str, message: String) -> ConfigError {
        ConfigError {
            line: self.map.get(key).map(|(l, _)| *l),
            key: Some(key.into()),
            message,
        }
    }

    fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some((_, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| self.err(key, format!("expected {what}, got '{v}'"))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.parsed::<f64>(key, "a number")? {
            Some(v) if !v.is_finite() => Err(self.err(key, format!("must be finite (got {v})"))),
            other => Ok(other),
        }
    }

    /// A quantity given either in its unit key or its SI key, in SI, with
    /// the key that supplied it.
    fn length(&self, si: &str) -> Result<Option<(f64, String)>, ConfigError> {
        let (unit, _, scale) = UNIT_KEYS.iter().find(|(_, s, _)| *s == si).expect("registered SI key");
        if let Some(v) = self.real(unit)? {
            return Ok(Some((v * scale, unit.to_string())));
        }
        Ok(self.real(si)?.map(|v| (v, si.to_string())))
    }

    fn key_for(&self, si: &str) -> String {
        let (unit, _, _) = UNIT_KEYS.iter().find(|(_, s, _)| *s == si).expect("registered SI key");
        if self.map.contains_key(*unit) {
            unit.to_string()
        } else {
            si.to_string()
        }
    }
}

fn check(cond: bool, e: &Entries, key: &str, message: String) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(e.err(key, message))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with_mode(text, None)
}

/// As [`parse_config`], with `mode` taking precedence over the `mode` key.
pub fn parse_config_with_mode(text: &str, mode: Option<Mode>) -> Result<RunConfig, ConfigError> {
    let e = Entries::read(text)?;
    let file_mode = match e.map.get("mode") {
        Some((_, v)) => Some(v.parse::<Mode>().map_err(|m| e.err("mode", m))?),
        None => None,
    };
    let Some(mode) = mode.or(file_mode) else {
        return Err(ConfigError {
            line: None,
            key: Some("mode".into()),
            message: "missing required key".into(),
        });
    };
    let mut cfg = RunConfig::defaults(mode);

    // Geometry.
    let g = cfg.geometry;
    let a = e.length("geometry.a_m")?;
    let d = e.length("geometry.d_m")?;
    let lambda = e.length("geometry.lambda_m")?;
    let f = e.real("geometry.f_m")?;
    for (v, allow_zero) in [(&a, false), (&d, true), (&lambda, false)] {
        if let Some((v, key)) = v {
            let ok = if allow_zero { *v >= 0.0 } else { *v > 0.0 };
            let bound = if allow_zero { "non-negative" } else { "positive" };
            check(ok, &e, key, format!("must be {bound} (got {v})"))?;
        }
    }
    if let Some(f) = f {
        check(f > 0.0, &e, "geometry.f_m", format!("must be positive (got {f})"))?;
    }
    cfg.geometry = ExperimentGeometry::new(
        a.map_or(g.slit_width(), |v| v.0),
        d.map_or(g.separation(), |v| v.0),
        lambda.map_or(g.wavelength(), |v| v.0),
        f.unwrap_or(g.focal_length()),
    )
    .map_err(|err| e.err("geometry", err.to_string()))?;

    // Channels.
    if let Some((_, v)) = e.map.get("channels") {
        let mut chans = Vec::new();
        for name in v.split(',') {
            let d = Detector::parse(name)
                .ok_or_else(|| e.err("channels", format!("unknown detector '{}'", name.trim())))?;
            check(
                !chans.contains(&d),
                &e,
                "channels",
                format!("{} listed twice", d.name()),
            )?;
            chans.push(d);
        }
        cfg.channels = chans;
    }

    // Grid.
    if let Some((v, _)) = e.length("grid.x_min_m")? {
        cfg.grid.x_min = v;
    }
    if let Some((v, _)) = e.length("grid.x_max_m")? {
        cfg.grid.x_max = v;
    }
    if let Some(n) = e.parsed::<usize>("grid.points", "a whole number")? {
        check(n >= 2, &e, "grid.points", format!("must be at least 2 (got {n})"))?;
        cfg.grid.points = n;
    }
    check(
        cfg.grid.x_min < cfg.grid.x_max,
        &e,
        &e.key_for("grid.x_max_m"),
        format!(
            "x_max must exceed x_min (got [{}, {}] m)",
            cfg.grid.x_min, cfg.grid.x_max
        ),
    )?;

    // Channel parameters.
    for det in Detector::ALL {
        let key = format!("eta_{}", det.name());
        if let Some(v) = e.real(&key)? {
            check(
                (0.0..=1.0).contains(&v),
                &e,
                &key,
                format!("must lie in [0, 1] (got {v})"),
            )?;
            cfg.eta[det.index()] = v;
        }
    }
    if let Some(v) = e.real("phi_rad")? {
        cfg.phi = v;
    }
    if let Some((v, key)) = e.length("delta_lambda_m")? {
        let lambda = cfg.geometry.wavelength();
        check(
            v >= 0.0 && v < lambda,
            &e,
            &key,
            format!("must satisfy 0 <= Δλ < λ (got {v} m, λ = {lambda} m)"),
        )?;
        cfg.delta_lambda = v;
    }

    // Pump and oracle.
    let p = cfg.oracle.pump;
    let omega_p = e.real("pump.omega_p_per_s")?.unwrap_or(p.omega_p());
    check(
        omega_p >= 0.0,
        &e,
        "pump.omega_p_per_s",
        format!("must be non-negative (got {omega_p})"),
    )?;
    let theta = e.real("pump.theta_rad")?.unwrap_or(p.theta());
    let window = e.length("pump.window_s")?;
    if let Some((w, key)) = &window {
        check(*w > 0.0, &e, key, format!("must be positive (got {w} s)"))?;
    }
    cfg.oracle.pump = PumpParams::new(omega_p, theta, window.map_or(p.window(), |w| w.0))
        .map_err(|err| e.err("pump", err.to_string()))?;
    for (si, slot) in [("pump.t0_s", &mut cfg.oracle.t0), ("pump.ti_s", &mut cfg.oracle.ti)] {
        if let Some((v, key)) = e.length(si)? {
            check(v >= 0.0, &e, &key, format!("must be non-negative (got {v} s)"))?;
            *slot = v;
        }
    }
    if let Some((_, v)) = e.map.get("oracle.phase_convention") {
        cfg.oracle.convention = v.parse().map_err(|m| e.err("oracle.phase_convention", m))?;
    }
    if let Some(v) = e.parsed::<bool>("oracle.average", "true or false")? {
        cfg.oracle.average = v;
    }

    // Wave packet.
    let w = &mut cfg.wavepacket;
    if let Some(v) = e.real("wavepacket.omega_rad_per_s")? {
        check(
            v > 0.0,
            &e,
            "wavepacket.omega_rad_per_s",
            format!("must be positive (got {v})"),
        )?;
        w.omega = Some(v);
    }
    if let Some(v) = e.real("wavepacket.gamma_per_s")? {
        check(
            v >= 0.0,
            &e,
            "wavepacket.gamma_per_s",
            format!("must be non-negative (got {v})"),
        )?;
        w.gamma = v;
    }
    if let Some(v) = e.real("wavepacket.eps0")? {
        w.eps0 = v;
    }
    if let Some(v) = e.real("wavepacket.dipole_angle_rad")? {
        w.dipole_angle = v;
    }
    for (key, slot) in [("wavepacket.l1a_m", &mut w.l1a), ("wavepacket.l1b_m", &mut w.l1b)] {
        if let Some(v) = e.real(key)? {
            check(v > 0.0, &e, key, format!("must be positive (got {v})"))?;
            *slot = v;
        }
    }
    if let Some((v, _)) = e.length("wavepacket.t_s")? {
        w.t = Some(v);
    }
    if let Some(v) = e.parsed::<bool>("wavepacket.suppress_advanced", "true or false")? {
        w.suppress_advanced = v;
    }

    // Monte Carlo.
    if let Some(n) = e.parsed::<u64>("mc.trials", "a whole number")? {
        check(n >= 1, &e, "mc.trials", "must be at least 1".into())?;
        cfg.mc.trials = n;
    }
    if let Some(n) = e.parsed::<usize>("mc.bins", "a whole number")? {
        check(n >= 2, &e, "mc.bins", format!("must be at least 2 (got {n})"))?;
        cfg.mc.bins = n;
    }
    if let Some(s) = e.parsed::<u64>("mc.seed", "a 64-bit unsigned integer")? {
        cfg.mc.seed = s;
    }
    for det in Detector::ALL {
        let key = format!("mc.efficiency_{}", det.name());
        if let Some(v) = e.real(&key)? {
            check(
                (0.0..=1.0).contains(&v),
                &e,
                &key,
                format!("must lie in [0, 1] (got {v})"),
            )?;
            cfg.mc.efficiency[det.index()] = v;
        }
    }

    // Output.
    if let Some((_, v)) = e.map.get("output.path") {
        check(!v.is_empty(), &e, "output.path", "must not be empty".into())?;
        cfg.output.path = PathBuf::from(v);
    }
    if let Some(v) = e.parsed::<bool>("output.wide", "true or false")? {
        cfg.output.wide = v;
    }

    Ok(cfg)
}
