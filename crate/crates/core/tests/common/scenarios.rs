//! Seeded random inputs.

use nalgebra::Vector3;
use rand::Rng;
use sim3_align::geometry::{Rotation3, Sim3Transform, UnitQuaternion};
use sim3_align::synth::{PathKind, ScenarioConfig};

/// Uniformly distributed rotation (normalized Gaussian quaternion).
pub fn random_rotation(rng: &mut impl Rng) -> Rotation3 {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2: f64 = q.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            return Rotation3::from_quaternion(UnitQuaternion::normalize(q[0], q[1], q[2], q[3]).unwrap());
        }
    }
}

/// Scale log-uniform in `[lo, hi]`, rotation uniform, translation in a ball of `max_t`.
pub fn random_sim3(rng: &mut impl Rng, lo: f64, hi: f64, max_t: f64) -> Sim3Transform {
    let s = (rng.random_range(lo.ln()..=hi.ln())).exp();
    let t = loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm() <= 1.0 {
            break v * max_t;
        }
    };
    Sim3Transform::new(s, random_rotation(rng), t).unwrap()
}

pub fn random_points(rng: &mut impl Rng, n: usize, extent: f64) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|_| Vector3::new(rng.random_range(-extent..extent), rng.random_range(-extent..extent), rng.random_range(-extent..extent)))
        .collect()
}

/// Noise-free, transient-free scenario on a random curved path.
pub fn clean_scenario(rng: &mut impl Rng, truth: Sim3Transform) -> ScenarioConfig {
    let kinds = [PathKind::Circle, PathKind::Lissajous, PathKind::WaypointSpline];
    ScenarioConfig {
        seed: rng.random(),
        n_frames: rng.random_range(50..600),
        n_keyframes: 0,
        path_kind: kinds[rng.random_range(0..kinds.len())],
        path_scale: rng.random_range(0.5..20.0),
        path_length: rng.random_range(5.0..200.0),
        path_height: rng.random_range(-5.0..5.0),
        look_at: Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-20.0..-10.0)),
        true_transform: truth,
        transient_len: 0,
        transient_scale_drift: 1.0,
        noise_sigma_t: 0.0,
        noise_sigma_r: 0.0,
        ..ScenarioConfig::benchmark_scene()
    }
}
