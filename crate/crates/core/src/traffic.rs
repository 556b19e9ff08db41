//! Correlated packet generation from a space-time Poisson event process.
//!
//! Active frames arrive with probability `1 - exp(-mu)` per frame (unit
//! frame duration, multiple arrivals within a frame collapse into one
//! active frame). In an active frame, events land uniformly in the square
//! arena with spatial intensity `lambda`, and every device within the
//! activation radius of at least one event generates a packet. Nearby
//! devices therefore activate together, which is the whole correlation
//! mechanism.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// A point in the arena, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Square deployment area with static device positions.
#[derive(Debug, Clone)]
pub struct Arena {
    pub side: f64,
    pub activation_radius: f64,
    pub positions: Vec<Point>,
}

impl Arena {
    pub fn n_devices(&self) -> usize {
        self.positions.len()
    }
}

/// Binary packet-generation indicator per device for one frame.
pub type ActivationVector = Vec<bool>;

/// Places `n` devices i.i.d. uniformly in a `side`×`side` square.
pub fn place_devices(side: f64, activation_radius: f64, n: usize, rng: &mut impl Rng) -> Arena {
    assert!(n >= 1, "device count must be >= 1");
    assert!(side > 0.0, "side length must be positive");
    assert!(activation_radius > 0.0, "activation radius must be positive");
    let positions = (0..n)
        .map(|_| Point {
            x: rng.random::<f64>() * side,
            y: rng.random::<f64>() * side,
        })
        .collect();
    Arena {
        side,
        activation_radius,
        positions,
    }
}

/// Whether a unit-length frame contains at least one temporal Poisson
/// arrival of intensity `mu`, i.e. true with probability `1 - exp(-mu)`.
pub fn sample_frame_active(mu: f64, rng: &mut impl Rng) -> bool {
    assert!(mu >= 0.0, "mu must be nonnegative");
    if mu == 0.0 {
        return false;
    }
    rng.random::<f64>() < 1.0 - (-mu).exp()
}

/// Samples event positions for one active frame: the count is
/// Poisson(`lambda` × side²) and positions are uniform in the square.
pub fn sample_events(lambda: f64, arena: &Arena, rng: &mut impl Rng) -> Vec<Point> {
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    let mean = lambda * arena.side * arena.side;
    if mean == 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    (0..count)
        .map(|_| Point {
            x: rng.random::<f64>() * arena.side,
            y: rng.random::<f64>() * arena.side,
        })
        .collect()
}

/// A device generates a packet iff some event lies within its activation
/// radius.
pub fn activations_from_events(arena: &Arena, events: &[Point]) -> ActivationVector {
    arena
        .positions
        .iter()
        .map(|pos| {
            events
                .iter()
                .any(|ev| pos.dist(ev) <= arena.activation_radius)
        })
        .collect()
}

/// Marginal per-active-frame packet-generation probability of a device:
/// `1 - exp(-lambda * A)` with `A` the activation disc clipped to the
/// square (events only occur inside the arena).
pub fn marginal_activation_prob(position: Point, lambda: f64, arena: &Arena) -> f64 {
    1.0 - (-lambda * clipped_disc_area(position, arena.activation_radius, arena.side)).exp()
}

/// Area of the radius-`r` disc around `center` intersected with the
/// `[0, side]²` square, by midpoint counting on a 1000×1000 grid of the
/// disc bounding box (relative error < 1e-4).
fn clipped_disc_area(center: Point, r: f64, side: f64) -> f64 {
    const GRID: usize = 1000;
    let step = 2.0 * r / GRID as f64;
    let r2 = r * r;
    let mut inside = 0u64;
    for i in 0..GRID {
        let x = center.x - r + (i as f64 + 0.5) * step;
        if x < 0.0 || x > side {
            continue;
        }
        let dx2 = (x - center.x) * (x - center.x);
        for j in 0..GRID {
            let y = center.y - r + (j as f64 + 0.5) * step;
            if y < 0.0 || y > side {
                continue;
            }
            let dy = y - center.y;
            if dx2 + dy * dy <= r2 {
                inside += 1;
            }
        }
    }
    inside as f64 * step * step
}
