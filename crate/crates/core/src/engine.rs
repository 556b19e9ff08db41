//! Per-frame game round: slot selection, collision resolution, unicast
//! ACK, LRI update, and device state transitions.
//!
//! Within a frame the order is fixed: (1) every device holding a packet
//! transmits in a slot drawn from its strategy, (2) the base station
//! resolves collisions and acknowledges lone transmissions, (3) rewarded
//! devices apply the LRI update, (4) end-of-frame packet arrivals are
//! applied to the attempt counters. Transmission of a packet generated at
//! the end of frame `t` starts in frame `t+1`.

use rand::Rng;

use crate::config::{BufferPolicy, SimConfig};
use crate::strategy::StrategyMatrix;
use crate::traffic::{activations_from_events, sample_events, sample_frame_active, Arena};

/// Everything observed in one frame. `states` are the start-of-frame
/// attempt counters; `actions` use 0 for "no transmission".
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame: u64,
    pub activations: Vec<bool>,
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<bool>,
    pub slot_occupancy: Vec<usize>,
}

/// Traffic side of one frame, for optional trace dumps.
#[derive(Debug, Clone, Copy)]
pub struct TrafficFrame {
    pub active: bool,
    pub event_count: usize,
}

/// Transmissions of the current frame, resolved but with arrivals not yet
/// applied. Episodic runs peek at this to decide whether the frame ends an
/// episode before sampling arrivals.
#[derive(Debug, Clone)]
pub struct PendingFrame {
    states: Vec<usize>,
    actions: Vec<usize>,
    rewards: Vec<bool>,
    slot_occupancy: Vec<usize>,
}

/// Erasure collision model: a device succeeds iff it transmitted alone in
/// its slot. Returns per-device rewards and per-slot transmitter counts.
pub fn resolve_slots(actions: &[usize], k: usize) -> (Vec<bool>, Vec<usize>) {
    let mut occupancy = vec![0usize; k];
    for &a in actions {
        if a > 0 {
            assert!(a <= k, "action {a} exceeds slot count {k}");
            occupancy[a - 1] += 1;
        }
    }
    let rewards = actions
        .iter()
        .map(|&a| a > 0 && occupancy[a - 1] == 1)
        .collect();
    (rewards, occupancy)
}

/// Next attempt counter given this frame's outcome and the end-of-frame
/// arrival. States are 0 (idle) through `beta` (last permitted attempt).
pub fn transition(
    x: usize,
    reward: bool,
    new_arrival: bool,
    beta: usize,
    policy: BufferPolicy,
) -> usize {
    assert!(x <= beta, "attempt counter {x} exceeds beta {beta}");
    let fresh = usize::from(new_arrival);
    match x {
        0 => fresh,
        _ if x == beta => fresh, // delivered or discarded either way
        _ if reward => fresh,
        // failed mid-ladder transmission
        _ => match policy {
            BufferPolicy::DropOldRestart if new_arrival => 1,
            _ => x + 1,
        },
    }
}

/// Mutable simulation state: devices, strategies and learning switches.
#[derive(Debug, Clone)]
pub struct Engine {
    pub k: usize,
    pub beta: usize,
    pub alpha: f64,
    pub policy: BufferPolicy,
    pub learning: bool,
    pub states: Vec<usize>,
    pub strategies: Vec<StrategyMatrix>,
}

impl Engine {
    pub fn new(
        k: usize,
        beta: usize,
        alpha: f64,
        policy: BufferPolicy,
        learning: bool,
        strategies: Vec<StrategyMatrix>,
    ) -> Self {
        for s in &strategies {
            assert_eq!(s.n_slots(), k);
            assert_eq!(s.n_attempts(), beta);
        }
        let n = strategies.len();
        Self {
            k,
            beta,
            alpha,
            policy,
            learning,
            states: vec![0; n],
            strategies,
        }
    }

    pub fn n_devices(&self) -> usize {
        self.states.len()
    }

    pub fn all_idle(&self) -> bool {
        self.states.iter().all(|&x| x == 0)
    }

    /// Clears attempt counters; strategies are kept.
    pub fn reset_states(&mut self) {
        self.states.iter_mut().for_each(|x| *x = 0);
    }

    pub fn all_pure(&self, purity_epsilon: f64) -> bool {
        self.strategies.iter().all(|s| s.is_pure(purity_epsilon))
    }

    /// Transmissions, collision resolution and (if learning) LRI updates
    /// for the current frame. Arrivals are applied by [`finish_frame`].
    ///
    /// [`finish_frame`]: Engine::finish_frame
    pub fn begin_frame(&mut self, rng: &mut impl Rng) -> PendingFrame {
        let states = self.states.clone();
        let actions: Vec<usize> = states
            .iter()
            .enumerate()
            .map(|(n, &x)| {
                if x > 0 {
                    self.strategies[n].sample_slot(x, rng)
                } else {
                    0
                }
            })
            .collect();
        let (rewards, slot_occupancy) = resolve_slots(&actions, self.k);
        if self.learning {
            for n in 0..states.len() {
                if rewards[n] {
                    self.strategies[n].lri_update(states[n], actions[n], true, self.alpha);
                }
            }
        }
        PendingFrame {
            states,
            actions,
            rewards,
            slot_occupancy,
        }
    }

    /// True iff every device ends idle if no packet arrives this frame.
    pub fn would_be_idle(&self, pending: &PendingFrame) -> bool {
        pending
            .states
            .iter()
            .zip(&pending.rewards)
            .all(|(&x, &z)| transition(x, z, false, self.beta, self.policy) == 0)
    }

    /// Applies end-of-frame arrivals and completes the frame record.
    pub fn finish_frame(
        &mut self,
        frame: u64,
        pending: PendingFrame,
        activation: &[bool],
    ) -> FrameRecord {
        assert_eq!(activation.len(), self.n_devices());
        for n in 0..self.n_devices() {
            self.states[n] = transition(
                pending.states[n],
                pending.rewards[n],
                activation[n],
                self.beta,
                self.policy,
            );
        }
        FrameRecord {
            frame,
            activations: activation.to_vec(),
            states: pending.states,
            actions: pending.actions,
            rewards: pending.rewards,
            slot_occupancy: pending.slot_occupancy,
        }
    }

    /// One full round with an exogenous activation vector.
    pub fn step_frame(
        &mut self,
        frame: u64,
        activation: &[bool],
        rng: &mut impl Rng,
    ) -> FrameRecord {
        let pending = self.begin_frame(rng);
        self.finish_frame(frame, pending, activation)
    }
}

/// Closed-form probability that device `n` succeeds when transmitting in
/// slot `k`: the product over every other device of one minus its
/// probability of transmitting in that slot. `transmit_probs[m]` is
/// P(x_m > 0) and `attempts[m]` the strategy row device `m` would use.
/// Analytic oracle for tests; the simulation never calls this.
pub fn success_probability(
    slot: usize,
    device: usize,
    transmit_probs: &[f64],
    attempts: &[usize],
    strategies: &[StrategyMatrix],
) -> f64 {
    assert_eq!(transmit_probs.len(), strategies.len());
    let mut q = 1.0;
    for m in 0..strategies.len() {
        if m == device || transmit_probs[m] == 0.0 {
            continue;
        }
        q *= 1.0 - transmit_probs[m] * strategies[m].row(attempts[m])[slot - 1];
    }
    q
}

/// How long a phase runs: a fixed frame count (μ > 0) or a number of
/// episodes (μ = 0, where a new activation is triggered whenever all
/// devices fall idle).
#[derive(Debug, Clone, Copy)]
pub enum RunLength {
    Frames(u64),
    Episodes(u64),
}

/// Strategy state captured at a point of the learning run. `time` counts
/// frames in `Frames` mode and completed episodes in `Episodes` mode.
#[derive(Debug, Clone)]
pub struct StrategySnapshot {
    pub time: u64,
    pub frame: u64,
    pub strategies: Vec<StrategyMatrix>,
}

/// Optional knobs for [`run_phase`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseOptions {
    /// Stop early once every strategy is pure at this epsilon.
    pub purity_stop: Option<f64>,
    /// Capture strategy snapshots every this many time units (frames or
    /// episodes, matching the run length; 0 = never). A final snapshot is
    /// always appended when snapshots are enabled.
    pub snapshot_every: u64,
}

/// Output of one simulated phase.
#[derive(Debug, Clone)]
pub struct PhaseOutput {
    pub records: Vec<FrameRecord>,
    pub traffic: Vec<TrafficFrame>,
    pub snapshots: Vec<StrategySnapshot>,
    /// Frame at which the purity stop triggered, if it did.
    pub stopped_pure_at: Option<u64>,
}

const PURITY_CHECK_INTERVAL: u64 = 256;

/// Drives traffic generation and frame rounds for one phase.
///
/// Frame 0 is always active. With `RunLength::Frames`, later frames are
/// active with probability `1 - exp(-mu)`. With `RunLength::Episodes`, an
/// activation is generated whenever the frame leaves all devices idle,
/// until the requested number of episodes has been played out.
pub fn run_phase(
    engine: &mut Engine,
    arena: &Arena,
    lambda: f64,
    mu: f64,
    length: RunLength,
    options: PhaseOptions,
    traffic_rng: &mut impl Rng,
    policy_rng: &mut impl Rng,
) -> PhaseOutput {
    let n = engine.n_devices();
    assert_eq!(arena.n_devices(), n);
    let mut out = PhaseOutput {
        records: Vec::new(),
        traffic: Vec::new(),
        snapshots: Vec::new(),
        stopped_pure_at: None,
    };
    let mut frame: u64 = 0;
    let mut episodes_done: u64 = 0;
    let mut last_snapshot: Option<u64> = None;
    loop {
        match length {
            RunLength::Frames(f) if frame >= f => break,
            RunLength::Episodes(e) if episodes_done >= e && engine.all_idle() => break,
            RunLength::Episodes(0) => break,
            _ => {}
        }
        if options.snapshot_every > 0 {
            let time = match length {
                RunLength::Frames(_) => frame,
                RunLength::Episodes(_) => episodes_done,
            };
            if time % options.snapshot_every == 0 && last_snapshot != Some(time) {
                last_snapshot = Some(time);
                out.snapshots.push(StrategySnapshot {
                    time,
                    frame,
                    strategies: engine.strategies.clone(),
                });
            }
        }
        let pending = engine.begin_frame(policy_rng);
        let active = match length {
            RunLength::Frames(_) => frame == 0 || sample_frame_active(mu, traffic_rng),
            RunLength::Episodes(e) => {
                let boundary = engine.would_be_idle(&pending) && episodes_done < e;
                if boundary {
                    episodes_done += 1;
                }
                boundary
            }
        };
        let (activation, event_count) = if active {
            let events = sample_events(lambda, arena, traffic_rng);
            (activations_from_events(arena, &events), events.len())
        } else {
            (vec![false; n], 0)
        };
        out.records
            .push(engine.finish_frame(frame, pending, &activation));
        out.traffic.push(TrafficFrame {
            active,
            event_count,
        });
        frame += 1;
        if let Some(eps) = options.purity_stop {
            if frame % PURITY_CHECK_INTERVAL == 0 && engine.all_pure(eps) {
                out.stopped_pure_at = Some(frame);
                break;
            }
        }
    }
    if options.snapshot_every > 0 {
        out.snapshots.push(StrategySnapshot {
            time: match length {
                RunLength::Frames(_) => frame,
                RunLength::Episodes(_) => episodes_done,
            },
            frame,
            strategies: engine.strategies.clone(),
        });
    }
    out
}

/// Runs one continuous simulation as configured: traffic wired into frame
/// rounds, learning enabled iff the engine says so, frame 0 always active.
/// μ = 0 configs run `config.episodes` episodes, μ > 0 configs run
/// `config.frames` frames.
pub fn run_simulation(
    config: &SimConfig,
    engine: &mut Engine,
    arena: &Arena,
    traffic_rng: &mut impl Rng,
    policy_rng: &mut impl Rng,
) -> PhaseOutput {
    let length = if config.mu == 0.0 {
        RunLength::Episodes(config.episodes)
    } else {
        RunLength::Frames(config.frames)
    };
    run_phase(
        engine,
        arena,
        config.lambda,
        config.mu,
        length,
        PhaseOptions {
            purity_stop: None,
            snapshot_every: config.snapshot_every,
        },
        traffic_rng,
        policy_rng,
    )
}
