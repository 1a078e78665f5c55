//! Seeded instance generators.
//!
//! Every step `t = 1..=T+κ` draws a Poisson number of arrivals; each arrival
//! gets an integer weight uniform on `1..=w_max` and a time-to-expire `τ`
//! from the configured model, with `d = t + τ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::model::{Instance, InstanceMeta, Packet, Time};

/// Distribution of the time-to-expire `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArrivalModel {
    /// `τ` uniform on `0..=d_max`.
    Model1,
    /// Bimodal: with probability `p`, `τ ~ N(2, 0.5²)`, else `τ ~ N(8, 0.75²)`,
    /// rounded half away from zero and clamped at 0.
    Model2,
}

pub const MODEL2_SHORT: (f64, f64) = (2.0, 0.5);
pub const MODEL2_LONG: (f64, f64) = (8.0, 0.75);

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    /// Measured arrival steps `T`.
    pub steps: u32,
    pub lambda: f64,
    pub w_max: u32,
    pub d_max: u32,
    pub model: ArrivalModel,
    /// Probability of the short mode under [`ArrivalModel::Model2`].
    pub bimodal_p: f64,
    /// Warm-up steps `κ` generated ahead of the measured ones.
    pub kappa: u32,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            steps: 200,
            lambda: 5.0,
            w_max: 20,
            d_max: 20,
            model: ArrivalModel::Model1,
            bimodal_p: 0.85,
            kappa: 0,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::config("T must be >= 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if self.w_max < 1 {
            return Err(Error::config("w_max must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.bimodal_p) {
            return Err(Error::config(format!("bimodal p must lie in [0, 1], got {}", self.bimodal_p)));
        }
        Ok(())
    }

    /// Last step with arrivals, `T + κ`.
    pub fn horizon(&self) -> Time {
        self.steps as Time + self.kappa as Time
    }
}

/// Warm-up length for a run with `T` measured steps: `max(40, ⌈0.4·T⌉)`.
pub fn warmup_for(steps: u32) -> u32 {
    let scaled = (steps as u64 * 2).div_ceil(5) as u32;
    scaled.max(40)
}

/// Mixes a master seed with two stream coordinates (splitmix64 finalizer),
/// so that every `(combination, repetition)` owns an independent stream.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ a.wrapping_mul(0xd6e8_feb8_6659_fd93)) ^ b)
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Samples `τ` under `model`.
pub(crate) struct SlackSampler {
    model: ArrivalModel,
    d_max: u32,
    p: f64,
    short: Normal<f64>,
    long: Normal<f64>,
}

impl SlackSampler {
    pub(crate) fn new(cfg: &GenConfig) -> Self {
        SlackSampler {
            model: cfg.model,
            d_max: cfg.d_max,
            p: cfg.bimodal_p,
            short: Normal::new(MODEL2_SHORT.0, MODEL2_SHORT.1).expect("valid normal"),
            long: Normal::new(MODEL2_LONG.0, MODEL2_LONG.1).expect("valid normal"),
        }
    }

    pub(crate) fn sample<R: Rng>(&self, rng: &mut R) -> Time {
        match self.model {
            ArrivalModel::Model1 => rng.random_range(0..=self.d_max) as Time,
            ArrivalModel::Model2 => {
                let x = if rng.random::<f64>() < self.p { self.short.sample(rng) } else { self.long.sample(rng) };
                // f64::round rounds half away from zero.
                (x.round() as Time).max(0)
            }
        }
    }
}

/// Draws one instance over `1..=T+κ`. A pure function of `config`.
pub fn generate(config: &GenConfig) -> Result<Instance> {
    config.validate()?;
    let mut rng = rng_for(config.seed);
    let arrivals = Poisson::new(config.lambda).map_err(|e| Error::config(format!("poisson: {e}")))?;
    let slack = SlackSampler::new(config);
    let horizon = config.horizon();
    let mut packets = Vec::with_capacity((config.lambda * horizon as f64) as usize + 16);
    for t in 1..=horizon {
        let k = arrivals.sample(&mut rng) as u64;
        for _ in 0..k {
            let weight = rng.random_range(1..=config.w_max) as f64;
            let tau = slack.sample(&mut rng);
            packets.push(Packet { id: packets.len(), release: t, deadline: t + tau, weight });
        }
    }
    Ok(Instance { horizon, packets, meta: InstanceMeta::Generated(config.clone()) })
}

/// Multiplies every weight by the packet's absolute deadline, favouring late
/// deadlines.
pub fn scenario1(instance: &Instance) -> Instance {
    let packets = instance.packets.iter().map(|p| Packet { weight: p.weight * p.deadline as f64, ..*p }).collect();
    Instance { horizon: instance.horizon, packets, meta: instance.meta.clone() }
}

/// Model-1 instance whose deadlines are weakly increasing in arrival order.
///
/// The drawn deadline multiset is sorted and handed out in `(r, id)` order,
/// then each deadline is raised to at least its release.
pub fn generate_agreeable(config: &GenConfig) -> Result<Instance> {
    let cfg = GenConfig { model: ArrivalModel::Model1, ..config.clone() };
    let mut inst = generate(&cfg)?;
    make_agreeable(&mut inst.packets);
    Ok(inst)
}

pub(crate) fn make_agreeable(packets: &mut [Packet]) {
    let mut deadlines: Vec<Time> = packets.iter().map(|p| p.deadline).collect();
    deadlines.sort_unstable();
    for (p, d) in packets.iter_mut().zip(deadlines) {
        p.deadline = d.max(p.release);
    }
}

/// Whether deadlines are weakly increasing over packets in `(r, id)` order.
pub fn is_agreeable(instance: &Instance) -> bool {
    instance.packets.windows(2).all(|w| w[0].deadline <= w[1].deadline)
}
