use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tol;

/// Increasing piecewise-linear map with fixed endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval1DMap {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl Interval1DMap {
    /// `breakpoints` and `values` strictly increasing with equal endpoints.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = breakpoints.len();
        if n < 2 || values.len() != n {
            return invalid("need at least two knots with matching values");
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || values.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("knots and values must be strictly increasing");
        }
        if breakpoints[0] != values[0] || breakpoints[n - 1] != values[n - 1] {
            return invalid("endpoints must be fixed");
        }
        Ok(Self { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
            .collect()
    }

    fn locate(knots: &[f64], x: f64) -> Result<usize> {
        let n = knots.len();
        if !(x >= knots[0] - tol::EXACT && x <= knots[n - 1] + tol::EXACT) {
            return Err(Error::OutOfWindow(vec![x]));
        }
        let k = knots.partition_point(|&t| t <= x);
        Ok(k.clamp(1, n - 1) - 1)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let k = Self::locate(&self.breakpoints, x)?;
        let (t0, t1) = (self.breakpoints[k], self.breakpoints[k + 1]);
        let (v0, v1) = (self.values[k], self.values[k + 1]);
        Ok(v0 + (x - t0) * (v1 - v0) / (t1 - t0))
    }

    pub fn eval_inv(&self, y: f64) -> Result<f64> {
        let k = Self::locate(&self.values, y)?;
        let (t0, t1) = (self.breakpoints[k], self.breakpoints[k + 1]);
        let (v0, v1) = (self.values[k], self.values[k + 1]);
        Ok(t0 + (y - v0) * (t1 - t0) / (v1 - v0))
    }

    /// The same map conjugated onto `[a, b]`.
    pub fn conjugate(&self, a: f64, b: f64) -> Result<Self> {
        let (lo, hi) = (self.breakpoints[0], *self.breakpoints.last().expect("two knots"));
        let f = |t: f64| a + (t - lo) / (hi - lo) * (b - a);
        let mut bp: Vec<f64> = self.breakpoints.iter().map(|&t| f(t)).collect();
        let mut vs: Vec<f64> = self.values.iter().map(|&t| f(t)).collect();
        let n = bp.len();
        bp[0] = a;
        vs[0] = a;
        bp[n - 1] = b;
        vs[n - 1] = b;
        Self::new(bp, vs)
    }
}

/// Map of `[0,1]` with slope `M·α_j` on `[(j−1)/M, j/M]`.
pub fn box_map_1d(alphas: &[f64]) -> Result<Interval1DMap> {
    let m = alphas.len();
    if m == 0 || alphas.iter().any(|a| !(*a > 0.0)) {
        return invalid("box map needs positive ratios");
    }
    let sum: f64 = alphas.iter().sum();
    if (sum - 1.0).abs() > tol::RATIO_SUM {
        return invalid(format!("ratios sum to {sum}, not one"));
    }
    let breakpoints: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    let mut values = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for a in &alphas[..m - 1] {
        acc += a;
        values.push(acc);
    }
    values.push(1.0);
    Interval1DMap::new(breakpoints, values)
}
