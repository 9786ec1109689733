//! Sectioned key = value configuration files.
//!
//! Three sections: `[network]` (geometry), `[channel]` (angular model and
//! covariance structure), `[sim]` (grids, trials, seed, methods). Every key
//! has a documented default except `sim.antennas`; unknown sections, unknown
//! keys and duplicate keys are rejected with the offending path in the
//! message.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::channel_model::{ClusterProfile, CovarianceMode, NetworkGeometry};
use crate::error::{Error, Result};
use crate::montecarlo::{DropMode, Method, Metric, SweepSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSection {
    /// Only the symmetric 3-site layout is supported.
    pub cells: usize,
    pub cell_diameter_m: f64,
    pub user_disc_radius_m: f64,
    pub users_per_cell: usize,
    pub pathloss_exponent: f64,
    pub reference_distance_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSection {
    pub clusters: usize,
    pub angular_spread_deg: f64,
    pub covariance_mode: CovarianceMode,
    pub quadrature_nodes: usize,
    pub shared_group_density: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSection {
    pub antennas: Vec<usize>,
    pub snr_db: Vec<f64>,
    /// `None` ("equal-to-data") matches the training SNR to the per-user
    /// transmit power, making the effective training SNR of the reference
    /// probe equal to the data SNR.
    pub rho_tr: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub metrics: Vec<Metric>,
    pub drop_mode: DropMode,
    pub pilots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub network: NetworkSection,
    pub channel: ChannelSection,
    pub sim: SimSection,
}

fn bad(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

fn parse_f64(path: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| bad(path, format!("expected a number, got '{v}'")))
}

fn parse_usize(path: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| bad(path, format!("expected a nonnegative integer, got '{v}'")))
}

fn parse_u64(path: &str, v: &str) -> Result<u64> {
    v.parse::<u64>()
        .map_err(|_| bad(path, format!("expected a nonnegative integer, got '{v}'")))
}

fn parse_bool(path: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(path, format!("expected true or false, got '{v}'"))),
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl Config {
    /// Parse configuration text. Missing keys take their defaults;
    /// `sim.antennas` is required.
    pub fn parse_str(text: &str) -> Result<Config> {
        // Raw pass: (section, key, value) with duplicate detection.
        let mut seen: HashSet<(String, String)> = HashSet::new();
        let mut entries: Vec<(String, String, String)> = Vec::new();
        let mut section: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        Error::Config(format!("line {}: malformed section header", lineno + 1))
                    })?
                    .trim()
                    .to_string();
                if !matches!(name.as_str(), "network" | "channel" | "sim") {
                    return Err(Error::Config(format!("unknown section '[{name}]'")));
                }
                section = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let sec = section.clone().ok_or_else(|| {
                Error::Config(format!("line {}: key before any [section]", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if !seen.insert((sec.clone(), key.clone())) {
                return Err(Error::Config(format!("duplicate key '{sec}.{key}'")));
            }
            entries.push((sec, key, value.trim().to_string()));
        }

        // Defaults.
        let mut cells = 3usize;
        let mut cell_diameter_m = 500.0;
        let mut user_disc_radius_m: Option<f64> = None;
        let mut users_per_cell = 5usize;
        let mut pathloss_exponent = 3.7;
        let mut reference_distance_m = 50.0;
        let mut clusters = 3usize;
        let mut angular_spread_deg = 10.0;
        let mut covariance_mode = CovarianceMode::Toeplitz;
        let mut quadrature_nodes = 2048usize;
        let mut shared_group_density = false;
        let mut antennas: Option<Vec<usize>> = None;
        let mut snr_db = vec![-6.0];
        let mut rho_tr: Option<f64> = None;
        let mut trials = 500usize;
        let mut seed = 1u64;
        let mut methods = Method::ALL.to_vec();
        let mut metrics = vec![Metric::MinUserRate];
        let mut drop_mode = DropMode::Fixed;
        let mut pilots: Option<usize> = None;

        for (sec, key, v) in &entries {
            let path = format!("{sec}.{key}");
            let p = path.as_str();
            match (sec.as_str(), key.as_str()) {
                ("network", "cells") => cells = parse_usize(p, v)?,
                ("network", "cell_diameter_m") => cell_diameter_m = parse_f64(p, v)?,
                ("network", "user_disc_radius_m") => user_disc_radius_m = Some(parse_f64(p, v)?),
                ("network", "users_per_cell") => users_per_cell = parse_usize(p, v)?,
                ("network", "pathloss_exponent") => pathloss_exponent = parse_f64(p, v)?,
                ("network", "reference_distance_m") => reference_distance_m = parse_f64(p, v)?,
                ("channel", "clusters") => clusters = parse_usize(p, v)?,
                ("channel", "angular_spread_deg") => angular_spread_deg = parse_f64(p, v)?,
                ("channel", "covariance_mode") => {
                    covariance_mode = match v.as_str() {
                        "toeplitz" => CovarianceMode::Toeplitz,
                        "circulant" => CovarianceMode::Circulant,
                        "diagonal" => CovarianceMode::Diagonal,
                        _ => {
                            return Err(bad(
                                p,
                                format!("expected toeplitz, circulant or diagonal, got '{v}'"),
                            ))
                        }
                    }
                }
                ("channel", "quadrature_nodes") => quadrature_nodes = parse_usize(p, v)?,
                ("channel", "shared_group_density") => shared_group_density = parse_bool(p, v)?,
                ("sim", "antennas") => {
                    antennas = Some(
                        split_list(v)
                            .map(|s| parse_usize(p, s))
                            .collect::<Result<_>>()?,
                    )
                }
                ("sim", "snr_db") => {
                    snr_db = split_list(v)
                        .map(|s| parse_f64(p, s))
                        .collect::<Result<_>>()?
                }
                ("sim", "rho_tr") => {
                    rho_tr = match v.as_str() {
                        "equal-to-data" => None,
                        _ => Some(parse_f64(p, v)?),
                    }
                }
                ("sim", "trials") => trials = parse_usize(p, v)?,
                ("sim", "seed") => seed = parse_u64(p, v)?,
                ("sim", "methods") => {
                    methods = split_list(v).map(Method::parse).collect::<Result<_>>()?
                }
                ("sim", "metrics") => {
                    metrics = split_list(v).map(Metric::parse).collect::<Result<_>>()?
                }
                ("sim", "drop_mode") => drop_mode = DropMode::parse(v)?,
                ("sim", "pilots") => pilots = Some(parse_usize(p, v)?),
                _ => return Err(Error::Config(format!("unknown key '{path}'"))),
            }
        }

        let antennas =
            antennas.ok_or_else(|| Error::Config("missing required key 'sim.antennas'".into()))?;
        let cfg = Config {
            network: NetworkSection {
                cells,
                cell_diameter_m,
                user_disc_radius_m: user_disc_radius_m.unwrap_or(cell_diameter_m / 4.0),
                users_per_cell,
                pathloss_exponent,
                reference_distance_m,
            },
            channel: ChannelSection {
                clusters,
                angular_spread_deg,
                covariance_mode,
                quadrature_nodes,
                shared_group_density,
            },
            sim: SimSection {
                antennas,
                snr_db,
                rho_tr,
                trials,
                seed,
                methods,
                metrics,
                drop_mode,
                pilots: pilots.unwrap_or(users_per_cell),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read '{}': {e}", path.display())))?;
        Self::parse_str(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.network.cells != 3 {
            return Err(bad("network.cells", "only the 3-site layout is supported"));
        }
        if self.network.users_per_cell == 0 {
            return Err(bad("network.users_per_cell", "must be >= 1"));
        }
        if self.sim.pilots < self.network.users_per_cell {
            return Err(bad(
                "sim.pilots",
                format!(
                    "users_per_cell ({}) exceeds the pilot count ({}): full reuse \
                     needs one pilot per user in a cell",
                    self.network.users_per_cell, self.sim.pilots
                ),
            ));
        }
        if self.channel.clusters == 0 {
            return Err(bad("channel.clusters", "must be >= 1"));
        }
        if !(self.channel.angular_spread_deg > 0.0) {
            return Err(bad("channel.angular_spread_deg", "must be positive"));
        }
        if self.channel.quadrature_nodes < 8 {
            return Err(bad("channel.quadrature_nodes", "must be at least 8"));
        }
        if self.sim.antennas.is_empty() {
            return Err(bad("sim.antennas", "list must be nonempty"));
        }
        if self.sim.snr_db.is_empty() {
            return Err(bad("sim.snr_db", "list must be nonempty"));
        }
        if let Some(r) = self.sim.rho_tr {
            if !(r.is_finite() && r > 0.0) {
                return Err(bad("sim.rho_tr", "must be positive"));
            }
        }
        if self.sim.trials == 0 {
            return Err(bad("sim.trials", "must be >= 1"));
        }
        if self.sim.methods.is_empty() {
            return Err(bad("sim.methods", "list must be nonempty"));
        }
        if self.sim.metrics.is_empty() {
            return Err(bad("sim.metrics", "list must be nonempty"));
        }
        // Geometry invariants surface with their own messages.
        self.geometry()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<NetworkGeometry> {
        NetworkGeometry::new(
            self.network.cell_diameter_m,
            self.network.user_disc_radius_m,
            self.network.pathloss_exponent,
            self.network.reference_distance_m,
        )
    }

    pub fn profile(&self) -> ClusterProfile {
        ClusterProfile {
            clusters: self.channel.clusters,
            spread: self.channel.angular_spread_deg.to_radians(),
            shared_group_density: self.channel.shared_group_density,
        }
    }

    pub fn to_spec(&self) -> Result<SweepSpec> {
        Ok(SweepSpec {
            geometry: self.geometry()?,
            profile: self.profile(),
            users_per_cell: self.network.users_per_cell,
            n_pilots: self.sim.pilots,
            mode: self.channel.covariance_mode,
            quadrature_nodes: self.channel.quadrature_nodes,
            antennas: self.sim.antennas.clone(),
            snr_db: self.sim.snr_db.clone(),
            rho_tr: self.sim.rho_tr,
            trials: self.sim.trials,
            seed: self.sim.seed,
            methods: self.sim.methods.clone(),
            metrics: self.sim.metrics.clone(),
            drop_mode: self.sim.drop_mode,
        })
    }

    /// Canonical text form; `parse_str` of the output reproduces the config.
    pub fn serialize(&self) -> String {
        let mode = match self.channel.covariance_mode {
            CovarianceMode::Toeplitz => "toeplitz",
            CovarianceMode::Circulant => "circulant",
            CovarianceMode::Diagonal => "diagonal",
        };
        let join_usize = |xs: &[usize]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let join_f64 = |xs: &[f64]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut s = String::new();
        let _ = writeln!(s, "[network]");
        let _ = writeln!(s, "cells = {}", self.network.cells);
        let _ = writeln!(s, "cell_diameter_m = {}", self.network.cell_diameter_m);
        let _ = writeln!(
            s,
            "user_disc_radius_m = {}",
            self.network.user_disc_radius_m
        );
        let _ = writeln!(s, "users_per_cell = {}", self.network.users_per_cell);
        let _ = writeln!(s, "pathloss_exponent = {}", self.network.pathloss_exponent);
        let _ = writeln!(
            s,
            "reference_distance_m = {}",
            self.network.reference_distance_m
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "[channel]");
        let _ = writeln!(s, "clusters = {}", self.channel.clusters);
        let _ = writeln!(
            s,
            "angular_spread_deg = {}",
            self.channel.angular_spread_deg
        );
        let _ = writeln!(s, "covariance_mode = {mode}");
        let _ = writeln!(s, "quadrature_nodes = {}", self.channel.quadrature_nodes);
        let _ = writeln!(
            s,
            "shared_group_density = {}",
            self.channel.shared_group_density
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "[sim]");
        let _ = writeln!(s, "antennas = {}", join_usize(&self.sim.antennas));
        let _ = writeln!(s, "snr_db = {}", join_f64(&self.sim.snr_db));
        let _ = writeln!(
            s,
            "rho_tr = {}",
            self.sim
                .rho_tr
                .map_or("equal-to-data".to_string(), |r| r.to_string())
        );
        let _ = writeln!(s, "trials = {}", self.sim.trials);
        let _ = writeln!(s, "seed = {}", self.sim.seed);
        let _ = writeln!(
            s,
            "methods = {}",
            self.sim
                .methods
                .iter()
                .map(|m| m.tag())
                .collect::<Vec<_>>()
                .join(", ")
        );
        let _ = writeln!(
            s,
            "metrics = {}",
            self.sim
                .metrics
                .iter()
                .map(|m| m.tag())
                .collect::<Vec<_>>()
                .join(", ")
        );
        let _ = writeln!(s, "drop_mode = {}", self.sim.drop_mode.tag());
        let _ = writeln!(s, "pilots = {}", self.sim.pilots);
        s
    }
}
