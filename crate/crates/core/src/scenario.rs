//! Scenario configuration, the key-value config file format, and the
//! deployment geometry (antenna array, metasurface grids, user positions).
//!
//! All quantities are stored in SI units. Powers appear in dBm only in the
//! config file; they are converted once at load time.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// A per-user parameter list. Shorter lists are reused cyclically, so a
/// single entry applies to every user.
#[derive(Debug, Clone, PartialEq)]
pub struct PerUser<T>(pub Vec<T>);

impl<T: Copy> PerUser<T> {
    pub fn uniform(v: T) -> Self {
        PerUser(vec![v])
    }

    pub fn get(&self, i: usize) -> T {
        self.0[i % self.0.len()]
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_antennas: usize,
    pub num_layers: usize,
    pub atoms_x: usize,
    pub atoms_z: usize,
    /// Total SIM thickness in meters; `None` means five wavelengths.
    pub sim_thickness: Option<f64>,
    /// Meta-atom area in square meters; `None` means the half-wavelength cell.
    pub atom_area: Option<f64>,
    pub carrier_freq: f64,
    pub num_rbs: usize,
    pub rb_bandwidth: f64,
    pub num_slots: usize,
    pub minislots_per_slot: usize,
    pub num_embb: usize,
    pub num_urllc: usize,
    pub noise_power: f64,
    pub pathloss_exponent: f64,
    pub bs_height: f64,
    pub min_user_distance: f64,
    pub max_user_distance: f64,
    pub p_max: f64,
    pub r_min: PerUser<f64>,
    pub packet_size: PerUser<f64>,
    pub decode_err: f64,
    pub reliability: f64,
    pub arrival_rate: PerUser<f64>,
    pub t_max: PerUser<f64>,
    pub t_comp_max: f64,
    pub transmission_duration: f64,
    /// Blocklength in symbols; `None` derives it from the transmission duration.
    pub blocklength: Option<u32>,
    pub aoi_max: PerUser<u32>,
    pub beampattern_threshold: f64,
    pub lyapunov_v: f64,
    pub penalty: f64,
    pub pga_step: f64,
    pub pga_iters: usize,
    pub j_max: usize,
    pub n_max: usize,
    pub tol_ao: f64,
    pub tol_dinkelbach: f64,
    /// Fraction of `p_max` kept free for mini-slot transmissions when the
    /// slot-level eMBB problem is solved.
    pub power_reserve: f64,
    /// Relative headroom added to eMBB rate floors at slot level so that
    /// later puncturing can stay within the floor.
    pub puncture_margin: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            num_antennas: 4,
            num_layers: 3,
            atoms_x: 6,
            atoms_z: 6,
            sim_thickness: None,
            atom_area: None,
            carrier_freq: 5e9,
            num_rbs: 25,
            rb_bandwidth: 180e3,
            num_slots: 6,
            minislots_per_slot: 7,
            num_embb: 4,
            num_urllc: 4,
            noise_power: dbm_to_watts(-95.0),
            pathloss_exponent: 3.5,
            bs_height: 10.0,
            min_user_distance: 5.0,
            max_user_distance: 50.0,
            p_max: 5.0,
            r_min: PerUser::uniform(1e6),
            packet_size: PerUser::uniform(256.0),
            decode_err: 1e-5,
            reliability: 0.99999,
            arrival_rate: PerUser::uniform(0.5),
            t_max: PerUser::uniform(1.5e-3),
            t_comp_max: 1e-4,
            transmission_duration: 5e-4,
            blocklength: None,
            aoi_max: PerUser(vec![1, 2, 3, 4]),
            beampattern_threshold: dbm_to_watts(-25.0),
            lyapunov_v: 1e-3,
            penalty: 10.0,
            pga_step: 0.5,
            pga_iters: 20,
            j_max: 15,
            n_max: 5,
            tol_ao: 1e-4,
            tol_dinkelbach: 1e-4,
            power_reserve: 0.3,
            puncture_margin: 0.25,
            rng_seed: 0,
        }
    }
}

/// One failed invariant, reported by [`validate_config`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub reason: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

impl ScenarioConfig {
    /// Reduced scale used by the test suites: 16 atoms, 6 RBs, two users per
    /// service, two slots of three mini-slots.
    pub fn desk_scale() -> Self {
        ScenarioConfig {
            atoms_x: 4,
            atoms_z: 4,
            num_rbs: 6,
            num_embb: 2,
            num_urllc: 2,
            num_slots: 2,
            minislots_per_slot: 3,
            ..ScenarioConfig::default()
        }
    }

    pub fn atoms_per_layer(&self) -> usize {
        self.atoms_x * self.atoms_z
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn sim_thickness(&self) -> f64 {
        self.sim_thickness.unwrap_or(5.0 * self.wavelength())
    }

    pub fn atom_area(&self) -> f64 {
        self.atom_area.unwrap_or_else(|| (self.wavelength() / 2.0).powi(2))
    }

    pub fn layer_spacing(&self) -> f64 {
        self.sim_thickness() / self.num_layers as f64
    }

    /// Blocklength in symbols, `floor(B * T_d / (2 I))` unless set explicitly.
    pub fn blocklength(&self) -> u32 {
        self.blocklength.unwrap_or_else(|| {
            (self.rb_bandwidth * self.transmission_duration / (2.0 * self.minislots_per_slot as f64))
                .floor() as u32
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_embb + self.num_urllc
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses the `key = value` format on top of the defaults. Unknown keys
    /// are an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|msg| Error::Parse { line: idx + 1, msg })?;
        }
        Ok(cfg)
    }

    /// Sets one field from its textual config-file representation.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse::<T>()
                .map_err(|_| format!("invalid value `{v}` for `{key}`"))
        }
        fn list<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<PerUser<T>, String> {
            let items = v
                .split(',')
                .map(|s| num::<T>(key, s.trim()))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(PerUser(items))
        }
        fn auto<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<Option<T>, String> {
            if v.eq_ignore_ascii_case("auto") {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        match key {
            "num_antennas" => self.num_antennas = num(key, value)?,
            "num_layers" => self.num_layers = num(key, value)?,
            "atoms_x" => self.atoms_x = num(key, value)?,
            "atoms_z" => self.atoms_z = num(key, value)?,
            "atoms_per_layer" => {
                let m: usize = num(key, value)?;
                let side = (m as f64).sqrt().round() as usize;
                if side * side != m {
                    return Err(format!("atoms_per_layer = {m} is not a square; set atoms_x and atoms_z"));
                }
                self.atoms_x = side;
                self.atoms_z = side;
            }
            "sim_thickness" => self.sim_thickness = auto(key, value)?,
            "atom_area" => self.atom_area = auto(key, value)?,
            "carrier_freq" => self.carrier_freq = num(key, value)?,
            "num_rbs" => self.num_rbs = num(key, value)?,
            "rb_bandwidth" => self.rb_bandwidth = num(key, value)?,
            "num_slots" => self.num_slots = num(key, value)?,
            "minislots_per_slot" => self.minislots_per_slot = num(key, value)?,
            "num_embb" => self.num_embb = num(key, value)?,
            "num_urllc" => self.num_urllc = num(key, value)?,
            "num_users" => {
                let u: usize = num(key, value)?;
                self.num_embb = u;
                self.num_urllc = u;
            }
            "noise_power" => self.noise_power = dbm_to_watts(num(key, value)?),
            "pathloss_exponent" => self.pathloss_exponent = num(key, value)?,
            "bs_height" => self.bs_height = num(key, value)?,
            "min_user_distance" => self.min_user_distance = num(key, value)?,
            "max_user_distance" => self.max_user_distance = num(key, value)?,
            "p_max" => self.p_max = dbm_to_watts(num(key, value)?),
            "r_min" => self.r_min = list(key, value)?,
            "packet_size" => self.packet_size = list(key, value)?,
            "decode_err" => self.decode_err = num(key, value)?,
            "reliability" => self.reliability = num(key, value)?,
            "arrival_rate" => self.arrival_rate = list(key, value)?,
            "t_max" => self.t_max = list(key, value)?,
            "t_comp_max" => self.t_comp_max = num(key, value)?,
            "transmission_duration" => self.transmission_duration = num(key, value)?,
            "blocklength" => self.blocklength = auto(key, value)?,
            "aoi_max" => self.aoi_max = list(key, value)?,
            "beampattern_threshold" => self.beampattern_threshold = dbm_to_watts(num(key, value)?),
            "lyapunov_v" => self.lyapunov_v = num(key, value)?,
            "penalty" => self.penalty = num(key, value)?,
            "pga_step" => self.pga_step = num(key, value)?,
            "pga_iters" => self.pga_iters = num(key, value)?,
            "j_max" => self.j_max = num(key, value)?,
            "n_max" => self.n_max = num(key, value)?,
            "tol_ao" => self.tol_ao = num(key, value)?,
            "tol_dinkelbach" => self.tol_dinkelbach = num(key, value)?,
            "power_reserve" => self.power_reserve = num(key, value)?,
            "puncture_margin" => self.puncture_margin = num(key, value)?,
            "rng_seed" => self.rng_seed = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Canonical config-file text. Parsing it yields an equivalent config.
    pub fn to_config_string(&self) -> String {
        fn join<T: std::fmt::Display>(v: &PerUser<T>) -> String {
            v.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "auto".to_string(), |x| x.to_string())
        }
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("num_antennas", self.num_antennas.to_string());
        kv("num_layers", self.num_layers.to_string());
        kv("atoms_x", self.atoms_x.to_string());
        kv("atoms_z", self.atoms_z.to_string());
        kv("sim_thickness", opt(&self.sim_thickness));
        kv("atom_area", opt(&self.atom_area));
        kv("carrier_freq", self.carrier_freq.to_string());
        kv("num_rbs", self.num_rbs.to_string());
        kv("rb_bandwidth", self.rb_bandwidth.to_string());
        kv("num_slots", self.num_slots.to_string());
        kv("minislots_per_slot", self.minislots_per_slot.to_string());
        kv("num_embb", self.num_embb.to_string());
        kv("num_urllc", self.num_urllc.to_string());
        kv("noise_power", watts_to_dbm(self.noise_power).to_string());
        kv("pathloss_exponent", self.pathloss_exponent.to_string());
        kv("bs_height", self.bs_height.to_string());
        kv("min_user_distance", self.min_user_distance.to_string());
        kv("max_user_distance", self.max_user_distance.to_string());
        kv("p_max", watts_to_dbm(self.p_max).to_string());
        kv("r_min", join(&self.r_min));
        kv("packet_size", join(&self.packet_size));
        kv("decode_err", self.decode_err.to_string());
        kv("reliability", self.reliability.to_string());
        kv("arrival_rate", join(&self.arrival_rate));
        kv("t_max", join(&self.t_max));
        kv("t_comp_max", self.t_comp_max.to_string());
        kv("transmission_duration", self.transmission_duration.to_string());
        kv("blocklength", opt(&self.blocklength));
        kv("aoi_max", join(&self.aoi_max));
        kv("beampattern_threshold", watts_to_dbm(self.beampattern_threshold).to_string());
        kv("lyapunov_v", self.lyapunov_v.to_string());
        kv("penalty", self.penalty.to_string());
        kv("pga_step", self.pga_step.to_string());
        kv("pga_iters", self.pga_iters.to_string());
        kv("j_max", self.j_max.to_string());
        kv("n_max", self.n_max.to_string());
        kv("tol_ao", self.tol_ao.to_string());
        kv("tol_dinkelbach", self.tol_dinkelbach.to_string());
        kv("power_reserve", self.power_reserve.to_string());
        kv("puncture_margin", self.puncture_margin.to_string());
        kv("rng_seed", self.rng_seed.to_string());
        s
    }
}

/// Returns every invariant violation; an empty list means the config is usable.
pub fn validate_config(cfg: &ScenarioConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |field: &'static str, reason: String| out.push(Violation { field, reason });

    for (field, v) in [
        ("num_antennas", cfg.num_antennas),
        ("num_layers", cfg.num_layers),
        ("atoms_x", cfg.atoms_x),
        ("atoms_z", cfg.atoms_z),
        ("num_rbs", cfg.num_rbs),
        ("num_slots", cfg.num_slots),
        ("minislots_per_slot", cfg.minislots_per_slot),
        ("num_embb", cfg.num_embb),
        ("num_urllc", cfg.num_urllc),
        ("j_max", cfg.j_max),
        ("n_max", cfg.n_max),
    ] {
        if v == 0 {
            bad(field, "must be a positive integer".into());
        }
    }
    if cfg.atoms_per_layer() < cfg.num_antennas {
        bad(
            "atoms_per_layer",
            format!(
                "M ≥ N required (M = {}, N = {})",
                cfg.atoms_per_layer(),
                cfg.num_antennas
            ),
        );
    }

    let positive = [
        ("carrier_freq", cfg.carrier_freq),
        ("rb_bandwidth", cfg.rb_bandwidth),
        ("noise_power", cfg.noise_power),
        ("pathloss_exponent", cfg.pathloss_exponent),
        ("bs_height", cfg.bs_height),
        ("min_user_distance", cfg.min_user_distance),
        ("max_user_distance", cfg.max_user_distance),
        ("p_max", cfg.p_max),
        ("t_comp_max", cfg.t_comp_max),
        ("transmission_duration", cfg.transmission_duration),
        ("beampattern_threshold", cfg.beampattern_threshold),
        ("pga_step", cfg.pga_step),
        ("tol_ao", cfg.tol_ao),
        ("tol_dinkelbach", cfg.tol_dinkelbach),
    ];
    for (field, v) in positive {
        if !(v.is_finite() && v > 0.0) {
            bad(field, format!("must be strictly positive, got {v}"));
        }
    }
    for (field, v) in [("sim_thickness", cfg.sim_thickness), ("atom_area", cfg.atom_area)] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                bad(field, format!("must be strictly positive, got {v}"));
            }
        }
    }
    if cfg.min_user_distance > cfg.max_user_distance {
        bad("min_user_distance", "must not exceed max_user_distance".into());
    }
    for (field, p) in [("decode_err", cfg.decode_err), ("reliability", cfg.reliability)] {
        if !(p > 0.0 && p < 1.0) {
            bad(field, format!("{field} must lie in (0,1), got {p}"));
        }
    }
    for (field, v) in [("lyapunov_v", cfg.lyapunov_v), ("penalty", cfg.penalty)] {
        if !(v.is_finite() && v >= 0.0) {
            bad(field, format!("must be non-negative, got {v}"));
        }
    }
    if !(0.0..1.0).contains(&cfg.power_reserve) {
        bad("power_reserve", format!("must lie in [0,1), got {}", cfg.power_reserve));
    }
    if !(cfg.puncture_margin.is_finite() && cfg.puncture_margin >= 0.0) {
        bad("puncture_margin", format!("must be non-negative, got {}", cfg.puncture_margin));
    }
    if cfg.blocklength() == 0 {
        bad("blocklength", "blocklength must be at least one symbol".into());
    }

    let lists: [(&'static str, &PerUser<f64>, bool); 4] = [
        ("r_min", &cfg.r_min, false),
        ("packet_size", &cfg.packet_size, true),
        ("arrival_rate", &cfg.arrival_rate, true),
        ("t_max", &cfg.t_max, true),
    ];
    for (field, list, strict) in lists {
        if list.is_empty() {
            bad(field, "needs at least one value".into());
            continue;
        }
        for &v in list.iter() {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if !ok {
                bad(field, format!("invalid entry {v}"));
            }
        }
    }
    if cfg.aoi_max.is_empty() {
        bad("aoi_max", "needs at least one value".into());
    }
    for &t in cfg.t_max.iter() {
        if t <= cfg.t_comp_max {
            bad("t_max", format!("t_max {t} s must exceed t_comp_max {} s", cfg.t_comp_max));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceClass {
    Embb,
    Urllc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub class: ServiceClass,
    /// Index within the user's service class.
    pub index: usize,
    /// Ground distance drawn uniformly between the configured bounds.
    pub horizontal_distance: f64,
    /// Line-of-sight propagation distance including the BS height.
    pub distance: f64,
    /// Azimuth in (-π/2, π/2).
    pub azimuth: f64,
    /// Elevation in (0, π), measured from the array's vertical axis.
    pub elevation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub wavelength: f64,
    pub layer_spacing: f64,
    pub atoms_x: usize,
    pub atoms_z: usize,
    /// BS antennas: uniform linear array along x at the origin.
    pub antenna_positions: Vec<[f64; 3]>,
    /// `atom_positions[l][m]`, layer `l` in the plane `y = (l + 1) d`.
    /// Atom `m = kx * atoms_z + kz`.
    pub atom_positions: Vec<Vec<[f64; 3]>>,
    /// eMBB users first, then URLLC users.
    pub users: Vec<UserRecord>,
}

impl Geometry {
    pub fn embb(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.iter().filter(|u| u.class == ServiceClass::Embb)
    }

    pub fn urllc(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.iter().filter(|u| u.class == ServiceClass::Urllc)
    }

    pub fn output_layer(&self) -> &[[f64; 3]] {
        self.atom_positions.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Builds the array/metasurface layout and draws user positions.
pub fn build_geometry<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Geometry {
    let lambda = cfg.wavelength();
    let pitch = lambda / 2.0;
    let d = cfg.layer_spacing();
    let centered = |k: usize, n: usize| (k as f64 - (n as f64 - 1.0) / 2.0) * pitch;

    let antenna_positions = (0..cfg.num_antennas)
        .map(|n| [centered(n, cfg.num_antennas), 0.0, 0.0])
        .collect();
    let atom_positions = (0..cfg.num_layers)
        .map(|l| {
            let y = (l + 1) as f64 * d;
            let mut layer = Vec::with_capacity(cfg.atoms_per_layer());
            for kx in 0..cfg.atoms_x {
                for kz in 0..cfg.atoms_z {
                    layer.push([centered(kx, cfg.atoms_x), y, centered(kz, cfg.atoms_z)]);
                }
            }
            layer
        })
        .collect();

    let classes = std::iter::repeat_n(ServiceClass::Embb, cfg.num_embb)
        .enumerate()
        .chain(std::iter::repeat_n(ServiceClass::Urllc, cfg.num_urllc).enumerate());
    let users = classes
        .map(|(index, class)| {
            let horizontal_distance = rng.gen_range(cfg.min_user_distance..=cfg.max_user_distance);
            let azimuth = loop {
                let a = rng.gen_range(-PI / 2.0..PI / 2.0);
                if a > -PI / 2.0 {
                    break a;
                }
            };
            let elevation = PI / 2.0 + (cfg.bs_height / horizontal_distance).atan();
            UserRecord {
                class,
                index,
                horizontal_distance,
                distance: horizontal_distance.hypot(cfg.bs_height),
                azimuth,
                elevation,
            }
        })
        .collect();

    Geometry {
        wavelength: lambda,
        layer_spacing: d,
        atoms_x: cfg.atoms_x,
        atoms_z: cfg.atoms_z,
        antenna_positions,
        atom_positions,
        users,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_config_is_valid() {
        let cfg = ScenarioConfig::default();
        assert!(validate_config(&cfg).is_empty(), "{:?}", validate_config(&cfg));
        assert_eq!(cfg.atoms_per_layer(), 36);
        assert_eq!(cfg.num_rbs, 25);
        assert_eq!(cfg.aoi_max.0, vec![1, 2, 3, 4]);
        assert!((watts_to_dbm(cfg.noise_power) + 95.0).abs() < 1e-9);
        assert!((watts_to_dbm(cfg.beampattern_threshold) + 25.0).abs() < 1e-9);
        // floor(180e3 * 5e-4 / 14)
        assert_eq!(cfg.blocklength(), 6);
        assert!(validate_config(&ScenarioConfig::desk_scale()).is_empty());
    }

    #[test]
    fn too_few_atoms_is_reported() {
        let cfg = ScenarioConfig {
            atoms_x: 1,
            atoms_z: 2,
            num_antennas: 4,
            ..ScenarioConfig::default()
        };
        let v = validate_config(&cfg);
        assert!(v.iter().any(|v| v.reason.contains("M ≥ N required")), "{v:?}");
    }

    #[test]
    fn zero_decode_error_is_reported() {
        let cfg = ScenarioConfig {
            decode_err: 0.0,
            ..ScenarioConfig::default()
        };
        let v = validate_config(&cfg);
        assert!(v.iter().any(|v| v.reason.contains("decode_err must lie in (0,1)")));
    }

    #[test]
    fn config_text_round_trips() {
        let mut cfg = ScenarioConfig::desk_scale();
        cfg.aoi_max = PerUser(vec![3, 1]);
        cfg.blocklength = Some(64);
        let text = cfg.to_config_string();
        let back = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(back.to_config_string(), text);
        assert_eq!(back.aoi_max, cfg.aoi_max);
        assert!((back.p_max - cfg.p_max).abs() < 1e-12);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = ScenarioConfig::parse("# header\nnum_rbs = 4\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let cfg = ScenarioConfig::parse("p_max = 30 # dBm\natoms_per_layer = 16").unwrap();
        assert!((cfg.p_max - 1.0).abs() < 1e-12);
        assert_eq!((cfg.atoms_x, cfg.atoms_z), (4, 4));
    }

    #[test]
    fn geometry_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = build_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        let b = build_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        for u in &a.users {
            assert!((5.0..=50.0).contains(&u.horizontal_distance));
            assert!(u.azimuth > -PI / 2.0 && u.azimuth < PI / 2.0);
            assert!(u.elevation > 0.0 && u.elevation < PI);
        }
    }

    #[test]
    fn grid_spacing_matches_layout() {
        let cfg = ScenarioConfig::default();
        let g = build_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let lambda = cfg.wavelength();
        // Opposite corners of a 6x6 grid at half-wavelength pitch.
        let layer = &g.atom_positions[0];
        let mut max_d: f64 = 0.0;
        for a in layer {
            for b in layer {
                max_d = max_d.max(distance(a, b));
            }
        }
        assert!((max_d - lambda / 2.0 * (2.0f64 * 25.0).sqrt()).abs() < 1e-12);
        // Three layers across five wavelengths.
        assert!((g.layer_spacing - 5.0 * lambda / 3.0).abs() < 1e-15);
        let dy = g.atom_positions[1][0][1] - g.atom_positions[0][0][1];
        assert!((dy - 5.0 * lambda / 3.0).abs() < 1e-12);
        // Layers and the array share the boresight axis.
        let cx: f64 = layer.iter().map(|p| p[0]).sum::<f64>() / layer.len() as f64;
        let ax: f64 = g.antenna_positions.iter().map(|p| p[0]).sum::<f64>() / 4.0;
        assert!(cx.abs() < 1e-15 && ax.abs() < 1e-15);
    }
}
