//! Particle-based stochastic reaction–diffusion engine.
//!
//! Each step applies, in order: Brownian displacement of every molecule,
//! the enzyme-box boundary rules, first-order reactions of the complex
//! (unbinding or degradation), then binding of free A to free E. The
//! receiver is sampled passively at step boundaries.
//!
//! Binding uses a per-step capture volume: a free A that ends a step within
//! `r_B = (3·k1·dt / 4π)^(1/3)` of a free enzyme binds to it. For randomly
//! placed enzymes the capture probability per step is then
//! `1 - exp(-k1·C_E·dt)`, the mass-action rate.

mod grid;
mod rng;

pub use rng::StreamKey;

use crate::error::{config, Error, Result};
use crate::physchem::{nondim, Quantity, Receiver, ReferenceSet, SpeciesTag, SystemParams};
use grid::BindingGrid;
use rand::Rng;
use rand_distr::{StandardNormal, UnitSphere};
use rng::Purpose;
use std::f64::consts::PI;

const NO_CARGO: u32 = u32::MAX;

/// Where an A molecule released by unbinding is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnbindingPlacement {
    /// Uniformly on the capture sphere of radius `r_B` around the enzyme.
    #[default]
    Sphere,
    /// At the enzyme position.
    Colocated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: SystemParams,
    pub refs: ReferenceSet,
    /// Time step, seconds.
    pub dt: f64,
    /// Requested sample times, seconds, strictly increasing.
    pub sample_times: Vec<f64>,
    pub seed: u64,
    pub unbinding: UnbindingPlacement,
}

impl SimConfig {
    pub fn new(
        params: SystemParams,
        refs: ReferenceSet,
        dt: f64,
        sample_times: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            params,
            refs,
            dt,
            sample_times,
            seed,
            unbinding: UnbindingPlacement::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.refs.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return config(format!("time step must be > 0, got {}", self.dt));
        }
        if self.sample_times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return config("sample times must be positive");
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return config("sample times must be strictly increasing");
        }
        let rms = (2.0 * self.params.a.diffusion_coeff * self.dt).sqrt();
        if self.binding_radius() >= rms {
            return config(format!(
                "binding radius {:e} m is not below the per-step rms displacement {:e} m of A",
                self.binding_radius(),
                rms
            ));
        }
        Ok(())
    }

    /// Capture radius r_B = (3·k1·dt / 4π)^(1/3).
    pub fn binding_radius(&self) -> f64 {
        (3.0 * self.params.rates.k1 * self.dt / (4.0 * PI)).cbrt()
    }

    /// Step index at which each sample is taken (nearest step, at least 1).
    pub fn sample_steps(&self) -> Vec<u64> {
        self.sample_times
            .iter()
            .map(|t| ((t / self.dt).round() as u64).max(1))
            .collect()
    }

    /// Realised sample times, seconds.
    pub fn realized_times(&self) -> Vec<f64> {
        self.sample_steps()
            .iter()
            .map(|&k| k as f64 * self.dt)
            .collect()
    }

    /// Realised sample times in units of L²/D_A.
    pub fn realized_t_star(&self) -> Result<Vec<f64>> {
        self.realized_times()
            .iter()
            .map(|&t| nondim(Quantity::Time, SpeciesTag::A, t, &self.refs, &self.params))
            .collect()
    }

    /// Sample times given in units of L²/D_A, converted to seconds.
    pub fn t_star_to_seconds(params: &SystemParams, refs: &ReferenceSet, t_star: &[f64]) -> Vec<f64> {
        let scale = refs.time_scale(params, SpeciesTag::A);
        t_star.iter().map(|t| t * scale).collect()
    }
}

/// A molecule as seen from outside the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub species: SpeciesTag,
    pub position: [f64; 3],
}

/// State of one A slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AState {
    Free,
    /// Bound to the enzyme in this E slot.
    Bound(u32),
    /// Degraded to product; no longer tracked spatially.
    Degraded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tallies {
    pub a_free: u64,
    pub e_free: u64,
    pub ea: u64,
    pub a_degraded: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    a_pos: Vec<[f64; 3]>,
    a_state: Vec<AState>,
    e_pos: Vec<[f64; 3]>,
    /// A slot bound to each enzyme, or `NO_CARGO`.
    e_cargo: Vec<u32>,
    /// A slots released by unbinding during the current step.
    released: Vec<u32>,
    step_index: u64,
    key: StreamKey,
    tallies: Tallies,
    initial_a: u64,
    initial_e: u64,
}

impl SimState {
    /// All-free state with the given positions.
    pub fn from_positions(key: StreamKey, a_pos: Vec<[f64; 3]>, e_pos: Vec<[f64; 3]>) -> Self {
        let (na, ne) = (a_pos.len(), e_pos.len());
        Self {
            a_state: vec![AState::Free; na],
            e_cargo: vec![NO_CARGO; ne],
            a_pos,
            e_pos,
            released: Vec::new(),
            step_index: 0,
            key,
            tallies: Tallies {
                a_free: na as u64,
                e_free: ne as u64,
                ea: 0,
                a_degraded: 0,
            },
            initial_a: na as u64,
            initial_e: ne as u64,
        }
    }

    /// Binds A slot `a` to E slot `e` regardless of distance.
    pub fn force_bind(&mut self, a: usize, e: usize) {
        assert_eq!(self.a_state[a], AState::Free, "A slot {a} is not free");
        assert_eq!(self.e_cargo[e], NO_CARGO, "E slot {e} is occupied");
        self.bind(a, e);
    }

    fn bind(&mut self, a: usize, e: usize) {
        self.a_state[a] = AState::Bound(e as u32);
        self.e_cargo[e] = a as u32;
        self.tallies.a_free -= 1;
        self.tallies.e_free -= 1;
        self.tallies.ea += 1;
    }

    /// Splits the complex in E slot `e`, leaving A at `a_at`.
    fn release(&mut self, e: usize, a_at: [f64; 3]) -> usize {
        let a = self.e_cargo[e] as usize;
        self.e_cargo[e] = NO_CARGO;
        self.a_state[a] = AState::Free;
        self.a_pos[a] = a_at;
        self.tallies.ea -= 1;
        self.tallies.e_free += 1;
        self.tallies.a_free += 1;
        a
    }

    fn degrade(&mut self, e: usize) {
        let a = self.e_cargo[e] as usize;
        self.e_cargo[e] = NO_CARGO;
        self.a_state[a] = AState::Degraded;
        self.tallies.ea -= 1;
        self.tallies.e_free += 1;
        self.tallies.a_degraded += 1;
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn tallies(&self) -> Tallies {
        self.tallies
    }

    pub fn initial_counts(&self) -> (u64, u64) {
        (self.initial_a, self.initial_e)
    }

    pub fn a_positions(&self) -> &[[f64; 3]] {
        &self.a_pos
    }

    pub fn a_states(&self) -> &[AState] {
        &self.a_state
    }

    pub fn e_positions(&self) -> &[[f64; 3]] {
        &self.e_pos
    }

    /// Whether E slot `e` currently carries an A.
    pub fn is_complex(&self, e: usize) -> bool {
        self.e_cargo[e] != NO_CARGO
    }

    /// Free A, free E and EA complexes with their positions.
    pub fn particles(&self) -> impl Iterator<Item = Particle> + '_ {
        let a = self
            .a_pos
            .iter()
            .zip(&self.a_state)
            .filter(|(_, s)| **s == AState::Free)
            .map(|(p, _)| Particle {
                species: SpeciesTag::A,
                position: *p,
            });
        let e = self.e_pos.iter().zip(&self.e_cargo).map(|(p, c)| Particle {
            species: if *c == NO_CARGO {
                SpeciesTag::E
            } else {
                SpeciesTag::EA
            },
            position: *p,
        });
        a.chain(e)
    }

    /// Tallies recomputed from the slot arrays.
    pub fn recount(&self) -> Tallies {
        let mut t = Tallies::default();
        for s in &self.a_state {
            match s {
                AState::Free => t.a_free += 1,
                AState::Degraded => t.a_degraded += 1,
                AState::Bound(_) => {}
            }
        }
        for c in &self.e_cargo {
            if *c == NO_CARGO {
                t.e_free += 1;
            } else {
                t.ea += 1;
            }
        }
        t
    }

    /// Checks integer conservation and cross-links between slots.
    pub fn check_conservation(&self) -> Result<()> {
        let t = self.tallies;
        if t != self.recount() {
            return Err(Error::Data(format!(
                "tallies {t:?} disagree with slots {:?}",
                self.recount()
            )));
        }
        if t.a_free + t.ea + t.a_degraded != self.initial_a {
            return Err(Error::Data(format!("A not conserved: {t:?}")));
        }
        if t.e_free + t.ea != self.initial_e {
            return Err(Error::Data(format!("E not conserved: {t:?}")));
        }
        for (e, &c) in self.e_cargo.iter().enumerate() {
            if c != NO_CARGO && self.a_state[c as usize] != AState::Bound(e as u32) {
                return Err(Error::Data(format!("E slot {e} cargo mismatch")));
            }
        }
        Ok(())
    }
}

/// Initial state of trial `trial`: all A at the transmitter, enzymes uniform
/// in the box.
pub fn init_sim(config: &SimConfig, trial: u64) -> Result<SimState> {
    config.validate()?;
    let p = &config.params;
    let key = StreamKey::new(config.seed, trial);
    let half = 0.5 * p.enz_box_side;
    let mut rng = key.rng(Purpose::Init, 0, 0);
    let e_pos = (0..p.n_e)
        .map(|_| [0; 3].map(|_: u8| rng.gen_range(-half..half)))
        .collect();
    Ok(SimState::from_positions(
        key,
        vec![[0.0; 3]; p.n_a as usize],
        e_pos,
    ))
}

/// Mirror `x` back into `[-half, half]`, repeating for overshoots larger than
/// the box.
#[inline]
fn reflect(mut x: f64, half: f64) -> f64 {
    loop {
        if x > half {
            x = 2.0 * half - x;
        } else if x < -half {
            x = -2.0 * half - x;
        } else {
            return x;
        }
    }
}

#[inline]
fn outside(p: [f64; 3], half: f64) -> bool {
    p.iter().any(|x| x.abs() > half)
}

#[inline]
fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Stepper for one configuration. Holds derived constants and scratch
/// buffers; a single instance can run many trials in sequence.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    half: f64,
    r_b: f64,
    grid: BindingGrid,
    pairs: Vec<(u32, u32, f64)>,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let half = 0.5 * config.params.enz_box_side;
        let r_b = config.binding_radius();
        Ok(Self {
            grid: BindingGrid::new(half, r_b),
            half,
            r_b,
            config,
            pairs: Vec::new(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn binding_radius(&self) -> f64 {
        self.r_b
    }

    pub fn init(&self, trial: u64) -> Result<SimState> {
        init_sim(&self.config, trial)
    }

    /// Gaussian displacement with per-axis variance 2·D·dt for every
    /// molecule. Every A and E slot consumes three normals each step whatever
    /// its state, so diffusion streams stay aligned across runs that share a
    /// key.
    pub fn diffuse(&self, state: &mut SimState, dt: f64) {
        let p = &self.config.params;
        let sa = (2.0 * p.a.diffusion_coeff * dt).sqrt();
        let se = (2.0 * p.e.diffusion_coeff * dt).sqrt();
        let sea = (2.0 * p.ea.diffusion_coeff * dt).sqrt();
        let mut rng = state.key.rng(Purpose::Diffusion, state.step_index, 0);
        for (pos, st) in state.a_pos.iter_mut().zip(&state.a_state) {
            let step: [f64; 3] = [0; 3].map(|_: u8| rng.sample(StandardNormal));
            if *st == AState::Free {
                for i in 0..3 {
                    pos[i] += sa * step[i];
                }
            }
        }
        for (pos, &cargo) in state.e_pos.iter_mut().zip(&state.e_cargo) {
            let step: [f64; 3] = [0; 3].map(|_: u8| rng.sample(StandardNormal));
            let s = if cargo == NO_CARGO { se } else { sea };
            for i in 0..3 {
                pos[i] += s * step[i];
            }
        }
    }

    /// Enzyme-box rules: free E reflect specularly; a complex that leaves the
    /// box splits, its E reflected inside and its A freed at the exit point.
    /// A molecules cross the box freely.
    pub fn apply_boundaries(&self, state: &mut SimState) {
        let half = self.half;
        for e in 0..state.e_pos.len() {
            let p = state.e_pos[e];
            if !outside(p, half) {
                continue;
            }
            if state.e_cargo[e] != NO_CARGO {
                state.release(e, p);
            }
            state.e_pos[e] = p.map(|x| reflect(x, half));
        }
    }

    /// First-order reactions of each complex: with probability
    /// `1 - exp(-(k₋₁+k₂)·dt)` it reacts, unbinding with conditional
    /// probability `k₋₁/(k₋₁+k₂)` and degrading its A otherwise.
    pub fn react_unimolecular(&self, state: &mut SimState, dt: f64) {
        let rates = &self.config.params.rates;
        let decay = rates.complex_decay();
        if decay <= 0.0 {
            return;
        }
        let p_react = -(-decay * dt).exp_m1();
        let p_unbind = p_react * rates.k_minus1 / decay;
        let step = state.step_index;
        let mut rng = state.key.rng(Purpose::Reaction, step, 0);
        for e in 0..state.e_pos.len() {
            // One draw per slot keeps the stream aligned.
            let u: f64 = rng.gen();
            if state.e_cargo[e] == NO_CARGO || u >= p_react {
                continue;
            }
            if u < p_unbind {
                let at = match self.config.unbinding {
                    UnbindingPlacement::Colocated => state.e_pos[e],
                    UnbindingPlacement::Sphere => {
                        let dir: [f64; 3] = state
                            .key
                            .rng(Purpose::Placement, step, e as u64)
                            .sample(UnitSphere);
                        let c = state.e_pos[e];
                        [0, 1, 2].map(|i| c[i] + self.r_b * dir[i])
                    }
                };
                let a = state.release(e, at);
                state.released.push(a as u32);
            } else {
                state.degrade(e);
            }
        }
    }

    /// Binds every free A lying strictly within `r_B` of a free enzyme. A
    /// molecules are visited in slot order and take the nearest enzyme not
    /// already claimed this step. Molecules released earlier in the same step
    /// are not eligible.
    pub fn react_bimolecular(&mut self, state: &mut SimState) {
        let r = self.r_b;
        if r <= 0.0 || state.tallies.a_free == 0 || state.tallies.e_free == 0 {
            return;
        }
        let reach = self.half + r;
        self.grid.clear();
        let mut any = false;
        for &a in &state.released {
            // Temporarily hide fresh releases from the search.
            state.a_state[a as usize] = AState::Degraded;
        }
        for (a, (p, s)) in state.a_pos.iter().zip(&state.a_state).enumerate() {
            if *s == AState::Free && p.iter().all(|x| x.abs() <= reach) {
                self.grid.insert(a as u32, *p, r);
                any = true;
            }
        }
        for &a in &state.released {
            state.a_state[a as usize] = AState::Free;
        }
        if !any {
            return;
        }
        let r2 = r * r;
        self.pairs.clear();
        for (e, q) in state.e_pos.iter().enumerate() {
            if state.e_cargo[e] != NO_CARGO {
                continue;
            }
            for a in self.grid.candidates(*q) {
                let d2 = dist2(state.a_pos[a as usize], *q);
                if d2 < r2 {
                    self.pairs.push((a, e as u32, d2));
                }
            }
        }
        if self.pairs.is_empty() {
            return;
        }
        self.pairs.sort_unstable_by(|x, y| {
            (x.0, x.2, x.1)
                .partial_cmp(&(y.0, y.2, y.1))
                .expect("finite distances")
        });
        for i in 0..self.pairs.len() {
            let (a, e, _) = self.pairs[i];
            let (a, e) = (a as usize, e as usize);
            if state.a_state[a] == AState::Free && state.e_cargo[e] == NO_CARGO {
                state.bind(a, e);
            }
        }
    }

    /// Advances one full step.
    pub fn step(&mut self, state: &mut SimState) {
        let dt = self.config.dt;
        state.released.clear();
        self.diffuse(state, dt);
        self.apply_boundaries(state);
        self.react_unimolecular(state, dt);
        self.react_bimolecular(state);
        state.released.clear();
        state.step_index += 1;
    }

    /// Receiver counts of one trial at every configured sample time.
    pub fn run_trial(&mut self, trial: u64) -> Result<Vec<u32>> {
        let steps = self.config.sample_steps();
        let mut out = Vec::with_capacity(steps.len());
        if steps.is_empty() {
            return Ok(out);
        }
        let mut state = self.init(trial)?;
        let receiver = self.config.params.receiver;
        for &target in &steps {
            while state.step_index < target {
                self.step(&mut state);
            }
            out.push(observe(&state, &receiver));
        }
        Ok(out)
    }
}

/// Number of free A molecules inside the receiver (boundary inclusive).
pub fn observe(state: &SimState, receiver: &Receiver) -> u32 {
    state
        .a_pos
        .iter()
        .zip(&state.a_state)
        .filter(|(p, s)| **s == AState::Free && receiver.contains(**p))
        .count() as u32
}

/// Convenience wrapper: one trial of `config`.
pub fn run_trial(config: &SimConfig, trial: u64) -> Result<Vec<u32>> {
    Simulator::new(config.clone())?.run_trial(trial)
}
