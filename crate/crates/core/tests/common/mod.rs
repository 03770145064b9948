#![allow(dead_code)]

use std::path::PathBuf;

use craft::chzono::CHZonotope;
use craft::model_io::load_model;
use craft::mondeq::MonDeq;
use craft::numerics::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn toy() -> MonDeq {
    MonDeq::new(load_model(&fixture("toy2.json")).unwrap()).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..=scale))
}

/// Random improper element; half of the draws have a zero box part.
pub fn random_chz(rng: &mut ChaCha8Rng, p: usize, k: usize) -> CHZonotope {
    let center = (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let gens = random_matrix(rng, p, k, 1.0);
    let radii = if rng.gen_bool(0.5) { vec![0.0; p] } else { (0..p).map(|_| rng.gen_range(0.0..0.5)).collect() };
    CHZonotope::new(center, gens, radii).unwrap()
}

/// A point of `γ(z)`: error terms at vertices with probability 1/2, uniform otherwise.
pub fn sample_point(rng: &mut ChaCha8Rng, z: &CHZonotope) -> Vec<f64> {
    let vertex = rng.gen_bool(0.5);
    let draw = |rng: &mut ChaCha8Rng| if vertex { if rng.gen_bool(0.5) { 1.0 } else { -1.0 } } else { rng.gen_range(-1.0..=1.0) };
    let nu: Vec<f64> = (0..z.num_gens()).map(|_| draw(rng)).collect();
    let eta: Vec<f64> = (0..z.dim()).map(|_| draw(rng)).collect();
    z.eval(&nu, &eta)
}

/// Uniform point of the box `x ± radius`.
pub fn sample_box(rng: &mut ChaCha8Rng, x: &[f64], radius: &[f64]) -> Vec<f64> {
    x.iter().zip(radius).map(|(c, r)| if *r > 0.0 { c + rng.gen_range(-r..=*r) } else { *c }).collect()
}
