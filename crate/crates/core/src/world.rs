//! Geometry, deployment sampling, the power law and its inversion, broadcast
//! radius, and timer arithmetic.
//!
//! Everything here is a pure numerical relation; no protocol state. The
//! deployment sampler owns its RNG (ChaCha12, seeded from a `u64`), so a
//! [`Deployment`] is a pure function of its [`WorldConfig`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Sites closer to the sink than this fraction of the disc radius are
/// redrawn, which keeps perceived power bounded. The rejection probability
/// per draw is 1e-12.
pub const MIN_RADIUS_FRACTION: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Scenario parameters: geometry, power, population, and the RNG seed.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    /// Disc radius R; the sink sits at the center.
    pub disc_radius: f64,
    /// Power level of the sink's broadcast.
    pub sink_power: f64,
    /// Wave propagation speed (length per time unit).
    pub wave_speed: f64,
    /// Number of sensors.
    pub n_sensors: usize,
    /// Number of sources among the sensors.
    pub n_sources: usize,
    /// Gap factor f in [0, 1] gating rebroadcasts.
    pub gap_factor: f64,
    /// Expected number of sensors within one broadcast radius.
    pub expected_neighbors: f64,
    /// Seed for the deployment sampler.
    pub seed: u64,
}

impl WorldConfig {
    /// Canonical units: unit disc, unit sink power, unit wave speed. All
    /// indicators are invariant under rescaling, so these defaults lose
    /// nothing.
    pub fn canonical(
        n_sensors: usize,
        n_sources: usize,
        gap_factor: f64,
        expected_neighbors: f64,
        seed: u64,
    ) -> Self {
        Self {
            disc_radius: 1.0,
            sink_power: 1.0,
            wave_speed: 1.0,
            n_sensors,
            n_sources,
            gap_factor,
            expected_neighbors,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let err = |m: String| Err(WorldError::Config(m));
        if !(self.disc_radius > 0.0 && self.disc_radius.is_finite()) {
            return err(format!("disc_radius must be positive, got {}", self.disc_radius));
        }
        if !(self.sink_power > 0.0 && self.sink_power.is_finite()) {
            return err(format!("sink_power must be positive, got {}", self.sink_power));
        }
        if !(self.wave_speed > 0.0 && self.wave_speed.is_finite()) {
            return err(format!("wave_speed must be positive, got {}", self.wave_speed));
        }
        if self.n_sensors == 0 {
            return err("n_sensors must be at least 1".into());
        }
        if self.n_sources == 0 || self.n_sources > self.n_sensors {
            return err(format!(
                "n_sources must be in 1..={}, got {}",
                self.n_sensors, self.n_sources
            ));
        }
        if !(0.0..=1.0).contains(&self.gap_factor) {
            return err(format!("gap_factor must be in [0, 1], got {}", self.gap_factor));
        }
        if !(self.expected_neighbors > 0.0
            && self.expected_neighbors <= self.n_sensors as f64)
        {
            return err(format!(
                "expected_neighbors must be in (0, {}], got {}",
                self.n_sensors, self.expected_neighbors
            ));
        }
        Ok(())
    }
}

/// Number of sources for a source ratio: `round(ratio * n)` clamped to
/// `[1, n]`.
pub fn sources_from_ratio(ratio: f64, n_sensors: usize) -> Result<usize, WorldError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(WorldError::Config(format!(
            "source ratio must be in (0, 1], got {ratio}"
        )));
    }
    Ok(((ratio * n_sensors as f64).round() as usize).clamp(1, n_sensors))
}

/// One sampled sensor. The `id` is simulation instrumentation only; the
/// protocol never sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSite {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Distance to the sink (the sampled radius).
    pub sink_distance: f64,
    /// Power level this sensor perceives in the sink's broadcast.
    pub perceived_power: f64,
    pub is_source: bool,
}

impl SensorSite {
    pub fn distance_to(&self, other: &SensorSite) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// A sampled world: configuration, sensor sites, and the derived broadcast
/// radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub config: WorldConfig,
    pub sites: Vec<SensorSite>,
    /// Radius every sensor broadcast reaches.
    pub broadcast_radius: f64,
}

impl Deployment {
    /// Ids of the source sites in ascending order.
    pub fn source_ids(&self) -> Vec<usize> {
        self.sites.iter().filter(|s| s.is_source).map(|s| s.id).collect()
    }
}

/// Sensor broadcast radius chosen so the expected population inside it
/// matches the global density: `sqrt(n_r / n) * R`.
pub fn broadcast_radius(
    expected_neighbors: f64,
    n_sensors: usize,
    disc_radius: f64,
) -> Result<f64, WorldError> {
    if n_sensors == 0 {
        return Err(WorldError::Domain("n_sensors must be at least 1".into()));
    }
    if !(expected_neighbors > 0.0) {
        return Err(WorldError::Domain(format!(
            "expected_neighbors must be positive, got {expected_neighbors}"
        )));
    }
    if !(disc_radius > 0.0) {
        return Err(WorldError::Domain(format!(
            "disc_radius must be positive, got {disc_radius}"
        )));
    }
    Ok((expected_neighbors / n_sensors as f64).sqrt() * disc_radius)
}

/// Power perceived at distance `d` from a broadcast at level `b0`:
/// `b0 / d^2`, with unit proportionality constant.
pub fn perceived_power(b0: f64, d: f64) -> Result<f64, WorldError> {
    if !(d > 0.0) {
        return Err(WorldError::Domain(format!("distance must be positive, got {d}")));
    }
    if !(b0 > 0.0) {
        return Err(WorldError::Domain(format!("broadcast power must be positive, got {b0}")));
    }
    Ok(b0 / (d * d))
}

/// Distance recovered from a perceived power level: `sqrt(b0 / p)`. Exact
/// inverse of [`perceived_power`].
pub fn distance_from_power(b0: f64, p: f64) -> Result<f64, WorldError> {
    if !(p > 0.0) {
        return Err(WorldError::Domain(format!("power must be positive, got {p}")));
    }
    if !(b0 > 0.0) {
        return Err(WorldError::Domain(format!("broadcast power must be positive, got {b0}")));
    }
    Ok((b0 / p).sqrt())
}

/// Timer delay for a sensor at radial distance `sink_distance`: twice the
/// propagation time over the remaining distance to the rim,
/// `2 (R - R_i) / v`. Sensors nearer the rim wait less.
pub fn timer_duration(
    disc_radius: f64,
    sink_distance: f64,
    wave_speed: f64,
) -> Result<f64, WorldError> {
    if !(sink_distance > 0.0 && sink_distance <= disc_radius) {
        return Err(WorldError::Domain(format!(
            "sink_distance must be in (0, {disc_radius}], got {sink_distance}"
        )));
    }
    if !(wave_speed > 0.0) {
        return Err(WorldError::Domain(format!("wave_speed must be positive, got {wave_speed}")));
    }
    Ok(2.0 * (disc_radius - sink_distance) / wave_speed)
}

/// The sink's own collection deadline, `2 R / v`: the round-trip time to the
/// rim.
pub fn sink_deadline(disc_radius: f64, wave_speed: f64) -> f64 {
    2.0 * disc_radius / wave_speed
}

/// Sample a deployment: `n` positions i.i.d. uniform on the disc (radius
/// `R * sqrt(u)`, angle `2 pi * u'`; draws landing within
/// [`MIN_RADIUS_FRACTION`] of the sink are redrawn), then `n_sources`
/// distinct source indices by partial Fisher-Yates. Fully determined by
/// `config.seed`.
pub fn sample_deployment(config: &WorldConfig) -> Result<Deployment, WorldError> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let r_min = MIN_RADIUS_FRACTION * config.disc_radius;

    let mut sites = Vec::with_capacity(config.n_sensors);
    for id in 0..config.n_sensors {
        let (radius, angle) = loop {
            let u: f64 = rng.gen();
            let u_angle: f64 = rng.gen();
            let radius = config.disc_radius * u.sqrt();
            if radius >= r_min {
                break (radius, std::f64::consts::TAU * u_angle);
            }
        };
        sites.push(SensorSite {
            id,
            x: radius * angle.cos(),
            y: radius * angle.sin(),
            sink_distance: radius,
            perceived_power: perceived_power(config.sink_power, radius)?,
            is_source: false,
        });
    }

    // Partial Fisher-Yates: the first n_sources entries of `order` end up as
    // a uniform sample without replacement.
    let mut order: Vec<usize> = (0..config.n_sensors).collect();
    for k in 0..config.n_sources {
        let j = rng.gen_range(k..config.n_sensors);
        order.swap(k, j);
    }
    for &idx in &order[..config.n_sources] {
        sites[idx].is_source = true;
    }

    Ok(Deployment {
        broadcast_radius: broadcast_radius(
            config.expected_neighbors,
            config.n_sensors,
            config.disc_radius,
        )?,
        config: config.clone(),
        sites,
    })
}
