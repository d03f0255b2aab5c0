//! Particle state, velocity geometry and the target-model contract shared by
//! every sampler in the crate.
//!
//! The samplers simulate a piecewise-deterministic Markov process: a particle
//! flies in a straight line at constant velocity and changes direction only at
//! random bounce or refresh events. [`ParticleState`] carries the flight
//! state, [`TrajectorySegment`] records one completed flight, and
//! [`TargetModel`] is the contract a posterior must satisfy to be sampled.

mod rng;
mod target;

pub use rng::RngStream;
pub use target::{DirectionalSample, Minibatch, TargetModel};

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{dot, norm};

/// Gradients with norm below this are treated as degenerate for reflection;
/// callers refresh the velocity instead.
pub const ZERO_GRADIENT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// The reflection formula divides by the squared gradient norm and is
    /// singular at zero gradient.
    #[error("gradient norm below tolerance; refresh the velocity instead of reflecting")]
    ZeroGradient,
}

/// What terminated a trajectory segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Accepted bounce: the velocity was reflected off the (noisy) gradient.
    Bounce,
    /// Velocity resampled uniformly on the sphere.
    Refresh,
    /// A thinning proposal landed here and was rejected; the flight continues
    /// in the same direction.
    ProposalRejected,
    /// Auxiliary gradient observation taken to repair a coasting envelope.
    AuxObservation,
    /// Budget exhausted.
    RunEnd,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::Bounce => "bounce",
            EventKind::Refresh => "refresh",
            EventKind::ProposalRejected => "reject",
            EventKind::AuxObservation => "aux",
            EventKind::RunEnd => "end",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "bounce" => EventKind::Bounce,
            "refresh" => EventKind::Refresh,
            "reject" => EventKind::ProposalRejected,
            "aux" => EventKind::AuxObservation,
            "end" => EventKind::RunEnd,
            _ => return None,
        })
    }
}

/// Position, velocity and accumulated travel time of the particle.
///
/// The velocity stays on the unit sphere; travel time is nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub time: f64,
}

impl ParticleState {
    pub fn new(position: Vec<f64>, velocity: Vec<f64>) -> Self {
        assert_eq!(position.len(), velocity.len());
        ParticleState {
            position,
            velocity,
            time: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    /// Moves the particle along its velocity for `tau` time units.
    pub fn advance(&mut self, tau: f64) {
        debug_assert!(tau >= 0.0);
        for (w, v) in self.position.iter_mut().zip(&self.velocity) {
            *w += v * tau;
        }
        self.time += tau;
    }
}

/// One linear flight of the particle: the sampler's output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySegment {
    pub start: Vec<f64>,
    /// Displacement per unit time over this segment. Unit-norm except under
    /// preconditioning, where the recorded velocity is the preconditioned one
    /// so that `start + velocity * duration` is the next segment's start.
    pub velocity: Vec<f64>,
    pub duration: f64,
    pub event: EventKind,
    /// Data-point gradient evaluations consumed during this segment.
    pub minibatch_evals: u64,
}

impl TrajectorySegment {
    pub fn end(&self) -> Vec<f64> {
        self.start
            .iter()
            .zip(&self.velocity)
            .map(|(w, v)| w + v * self.duration)
            .collect()
    }
}

/// Reflects `v` off the plane perpendicular to the gradient `g`:
///
/// `v_r = v - 2 (v.g) g / |g|^2`
///
/// The result satisfies `v_r . g = -(v . g)` and reflecting twice restores
/// `v`. The output is rescaled to the input norm to absorb floating-point
/// drift.
pub fn reflect(v: &[f64], g: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let g2 = dot(g, g);
    if g2.sqrt() <= ZERO_GRADIENT_TOL {
        return Err(GeometryError::ZeroGradient);
    }
    let coef = 2.0 * dot(v, g) / g2;
    let mut out: Vec<f64> = v.iter().zip(g).map(|(vi, gi)| vi - coef * gi).collect();
    let scale = norm(v) / norm(&out);
    for x in &mut out {
        *x *= scale;
    }
    Ok(out)
}

/// Preconditioned reflection `v - 2 (v.Ag) Ag / |Ag|^2` with `A` diagonal.
pub fn reflect_preconditioned(
    v: &[f64],
    g: &[f64],
    a_diag: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    debug_assert_eq!(g.len(), a_diag.len());
    let ag: Vec<f64> = g.iter().zip(a_diag).map(|(gi, ai)| gi * ai).collect();
    reflect(v, &ag)
}

/// Samples a velocity uniformly on the unit sphere: `dim` independent
/// standard normals, normalized.
pub fn refresh_velocity<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    assert!(dim >= 1);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-30 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reflect_orthogonal_gradient_is_identity() {
        let v = reflect(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((v[0] - 0.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reflect_head_on_reverses() {
        let v = reflect(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
    }

    #[test]
    fn reflect_flips_directional_derivative() {
        let v = [0.6, 0.8];
        let g = [1.0, 1.0];
        let vr = reflect(&v, &g).unwrap();
        // v.g = 1.4, so vr.g must be -1.4
        assert!((dot(&vr, &g) + 1.4).abs() < 1e-9);
        let back = reflect(&vr, &g).unwrap();
        assert!((back[0] - v[0]).abs() < 1e-9 && (back[1] - v[1]).abs() < 1e-9);
    }

    #[test]
    fn reflect_zero_gradient_errors() {
        assert_eq!(
            reflect(&[1.0, 0.0], &[0.0, 0.0]),
            Err(GeometryError::ZeroGradient)
        );
    }

    #[test]
    fn preconditioned_identity_matches_plain() {
        let v = [0.6, 0.8];
        let g = [0.3, -1.1];
        let plain = reflect(&v, &g).unwrap();
        let pre = reflect_preconditioned(&v, &g, &[1.0, 1.0]).unwrap();
        for (a, b) in plain.iter().zip(&pre) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn preconditioned_axis_aligned_reversal() {
        let v = reflect_preconditioned(&[1.0, 0.0], &[1.0, 0.0], &[2.0, 1.0]).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
    }

    #[test]
    fn preconditioned_flips_preconditioned_derivative() {
        let v = [1.0, 0.0];
        let g = [1.0, 1.0];
        let a = [2.0, 1.0];
        let vr = reflect_preconditioned(&v, &g, &a).unwrap();
        let ag = [2.0, 1.0];
        // (v_r . Ag) = -(v . Ag) = -2
        assert!((dot(&vr, &ag) + dot(&v, &ag)).abs() < 1e-9);
    }

    #[test]
    fn refresh_one_dimension_is_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pos = 0usize;
        for _ in 0..2000 {
            let v = refresh_velocity(1, &mut rng);
            assert!((v[0].abs() - 1.0).abs() < 1e-12);
            if v[0] > 0.0 {
                pos += 1;
            }
        }
        assert!(pos > 850 && pos < 1150);
    }

    #[test]
    fn refresh_is_isotropic_in_three_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sums = [0.0f64; 3];
        let draws = 100_000;
        for _ in 0..draws {
            let v = refresh_velocity(3, &mut rng);
            assert!((norm(&v) - 1.0).abs() < 1e-9);
            for (s, x) in sums.iter_mut().zip(&v) {
                *s += x;
            }
        }
        for s in sums {
            assert!((s / draws as f64).abs() < 0.02);
        }
    }

    #[test]
    fn refresh_replays_with_fixed_seed() {
        let a = refresh_velocity(7, &mut ChaCha8Rng::seed_from_u64(42));
        let b = refresh_velocity(7, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn advance_moves_linearly() {
        let mut s = ParticleState::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        s.advance(2.0);
        assert_eq!(s.position, vec![2.0, 0.0]);
        assert_eq!(s.time, 2.0);
        let before = s.clone();
        s.advance(0.0);
        assert_eq!(s, before);
    }

    #[test]
    fn advance_composes() {
        let mut a = ParticleState::new(vec![1.0, -1.0, 0.5], vec![0.3, 0.4, -0.2]);
        let mut b = a.clone();
        a.advance(1.7);
        b.advance(0.85);
        b.advance(0.85);
        for (x, y) in a.position.iter().zip(&b.position) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn reflection_is_norm_preserving_involution(
            vx in -3.0f64..3.0, vy in -3.0f64..3.0, vz in -3.0f64..3.0,
            gx in -3.0f64..3.0, gy in -3.0f64..3.0, gz in -3.0f64..3.0,
        ) {
            let v = [vx, vy, vz];
            let g = [gx, gy, gz];
            prop_assume!(norm(&v) > 1e-3 && norm(&g) > 1e-3);
            let vr = reflect(&v, &g).unwrap();
            prop_assert!((norm(&vr) - norm(&v)).abs() < 1e-9);
            prop_assert!((dot(&vr, &g) + dot(&v, &g)).abs() < 1e-9);
            let back = reflect(&vr, &g).unwrap();
            for (a, b) in back.iter().zip(&v) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
