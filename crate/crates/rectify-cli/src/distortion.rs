//! Sampled bi-ω constants of a discrete bijection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rectify::moduli::Modulus;
use rectify::{Error, Result};

use crate::matching::Matching;

pub const DISTORTION_SCHEMA: &str = "rectify.distortion/1";

/// Ratios `‖F(x) − F(y)‖ / (R ω(‖x − y‖/R))` maximised over sampled pairs.
///
/// The values bound the true constants from below only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionReport {
    pub schema: String,
    pub label: String,
    pub modulus: String,
    pub forward: f64,
    pub backward: f64,
    /// Worst ratio per radius, `(R, forward, backward)`.
    pub per_radius: Vec<(f64, f64, f64)>,
    pub radii: Vec<f64>,
    pub pairs: usize,
    pub seed: u64,
}

fn dist<T: Copy + Into<f64>>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(&p, &q)| (p.into() - q.into()).powi(2)).sum::<f64>().sqrt()
}

fn lattice_dist(a: &[i64], b: &[i64]) -> f64 {
    a.iter().zip(b).map(|(&p, &q)| ((p - q) as f64).powi(2)).sum::<f64>().sqrt()
}

/// `(t/R)·1/ω(s/R)` written so that the identity under a linear modulus
/// gives exactly one.
fn ratio(omega: &Modulus, num: f64, den: f64, r: f64) -> Result<f64> {
    Ok((num / r) / omega.eval_ext(den / r)?)
}

/// Samples `n_pairs` pairs per radius, both points inside a ball of radius
/// `R` around a random matched point.
pub fn bi_omega_distortion(m: &Matching, omega: &Modulus, radii: &[f64], n_pairs: usize, seed: u64) -> Result<DistortionReport> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParam("radii must be positive".into()));
    }
    if m.pairs.len() < 2 {
        return Err(Error::InvalidParam("matching needs at least two pairs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forward: f64 = 0.0;
    let mut backward: f64 = 0.0;
    let mut per_radius = Vec::with_capacity(radii.len());
    let mut used = 0;
    for &r in radii {
        let (mut f_r, mut b_r): (f64, f64) = (0.0, 0.0);
        let mut tries = 0;
        let mut done = 0;
        while done < n_pairs && tries < 50 * n_pairs.max(1) {
            tries += 1;
            let c = &m.pairs[rng.gen_range(0..m.pairs.len())].0;
            let a = rng.gen_range(0..m.pairs.len());
            let b = rng.gen_range(0..m.pairs.len());
            let (xa, za) = &m.pairs[a];
            let (xb, zb) = &m.pairs[b];
            if a == b || dist::<f64>(xa, c) > r || dist::<f64>(xb, c) > r {
                continue;
            }
            let dx = dist::<f64>(xa, xb);
            let dz = lattice_dist(za, zb);
            if dx == 0.0 || dz == 0.0 {
                continue;
            }
            f_r = f_r.max(ratio(omega, dz, dx, r)?);
            b_r = b_r.max(ratio(omega, dx, dz, r)?);
            done += 1;
        }
        used += done;
        forward = forward.max(f_r);
        backward = backward.max(b_r);
        per_radius.push((r, f_r, b_r));
    }
    Ok(DistortionReport {
        schema: DISTORTION_SCHEMA.into(),
        label: "empirical_lower_bound".into(),
        modulus: omega.to_string(),
        forward,
        backward,
        per_radius,
        radii: radii.to_vec(),
        pairs: used,
        seed,
    })
}

/// Same ratios over every pair inside each ball `B_R(x)` of a small
/// matching, without sampling.
pub fn exhaustive_distortion(m: &Matching, omega: &Modulus, radii: &[f64]) -> Result<(f64, f64)> {
    let mut f: f64 = 0.0;
    let mut b: f64 = 0.0;
    for &r in radii {
        for (c, _) in &m.pairs {
            let ball: Vec<&(Vec<f64>, Vec<i64>)> = m.pairs.iter().filter(|p| dist::<f64>(&p.0, c) <= r).collect();
            for (i, p) in ball.iter().enumerate() {
                for q in &ball[i + 1..] {
                    let dx = dist::<f64>(&p.0, &q.0);
                    let dz = lattice_dist(&p.1, &q.1);
                    if dx > 0.0 && dz > 0.0 {
                        f = f.max(ratio(omega, dz, dx, r)?);
                        b = b.max(ratio(omega, dx, dz, r)?);
                    }
                }
            }
        }
    }
    Ok((f, b))
}
