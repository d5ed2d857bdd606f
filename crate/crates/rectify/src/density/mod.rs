//! Piecewise-constant densities on dyadic grids.
//!
//! A [`DyadicField`] covers an axis-aligned box split into `base[a]` root
//! cells per axis, each refined `depth` times by halving. Values are stored
//! with axis 0 slowest.

mod bk;
mod phi;

pub use bk::{BkField, BkLevel, BkParams};
pub use phi::{phi_tilde, OscillationBound, Phi};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pointset::{advance, flat, DeviationProfile, IntegerCube, PointSet};
use crate::tol;

/// Box geometry of a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldWindow {
    pub origin: Vec<f64>,
    pub extent: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicField {
    d: usize,
    window: FieldWindow,
    base: Vec<usize>,
    depth: u32,
    values: Vec<f64>,
    inf_bound: f64,
    sup_bound: f64,
}

/// A cell of the level-`level` grid, in that grid's integer coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicCube {
    pub level: u32,
    pub index: Vec<usize>,
}

/// Bookkeeping from [`DyadicField::from_delone`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeloneFieldReport {
    pub empty_cells: usize,
    pub floor_value: f64,
    /// Mass added by the floor, `empty_cells · floor_value`.
    pub added_mass: f64,
}

impl DyadicField {
    /// Builds a field; `values.len()` must equal `∏ base[a]·2^depth`.
    ///
    /// A cubical window whose root grid is `2^k` cells per axis is rewritten
    /// with a single root cell and `k` more levels.
    pub fn new(origin: Vec<f64>, extent: Vec<f64>, base: Vec<usize>, depth: u32, values: Vec<f64>) -> Result<Self> {
        let d = origin.len();
        if !(1..=3).contains(&d) || extent.len() != d || base.len() != d {
            return invalid("field dimension must be 1, 2 or 3 with matching extents");
        }
        if extent.iter().any(|e| !(*e > 0.0)) || base.iter().any(|&b| b == 0) {
            return invalid("extents and root grid must be positive");
        }
        if depth > 30 {
            return Err(Error::DepthOverflow { needed: depth, max: 30 });
        }
        let n: usize = base.iter().map(|b| b << depth).product();
        if values.len() != n {
            return invalid(format!("expected {n} values, got {}", values.len()));
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return invalid("density values must be positive and finite");
        }
        let inf_bound = values.iter().copied().fold(f64::INFINITY, f64::min);
        let sup_bound = values.iter().copied().fold(0.0, f64::max);
        let (mut base, mut depth) = (base, depth);
        let b0 = base[0];
        let cubical = extent.iter().all(|e| (e - extent[0]).abs() <= tol::EXACT * extent[0]);
        if b0 > 1 && b0.is_power_of_two() && cubical && base.iter().all(|&b| b == b0) {
            depth += b0.trailing_zeros();
            base = vec![1; d];
        }
        Ok(Self { d, window: FieldWindow { origin, extent }, base, depth, values, inf_bound, sup_bound })
    }

    /// Constant field on `[0, 1]^d`.
    pub fn constant(d: usize, value: f64, depth: u32) -> Result<Self> {
        let n = 1usize << (depth as usize * d);
        Self::new(vec![0.0; d], vec![1.0; d], vec![1; d], depth, vec![value; n])
    }

    /// Independent uniform cell values in `[lo, hi]` on `[0, 1]^d`.
    pub fn random(d: usize, depth: u32, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo) {
            return invalid("value range must be positive and ordered");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1usize << (depth as usize * d);
        let values = (0..n).map(|_| if hi > lo { rng.gen_range(lo..=hi) } else { lo }).collect();
        Self::new(vec![0.0; d], vec![1.0; d], vec![1; d], depth, values)
    }

    /// Multiplicative cascade on `[0, 2^m]^d` with unit cells whose
    /// deviation profile at `ρ = 1` passes the gate
    /// `(i + 2)(E(2^i) − 1) ≤ k` for every `i`.
    ///
    /// Sibling multipliers come in pairs `1 ± δ`, so every parent keeps its
    /// mean; the amplitude at child side `2^j` is `a/((j + 2)(j + 3))`, and
    /// `a` starts at `k/2` and shrinks until the gate holds.
    pub fn cascade(d: usize, m: u32, k: f64, seed: u64) -> Result<Self> {
        if !(k > 0.0) || !(1..=3).contains(&d) || m == 0 || m > 12 {
            return invalid("cascade needs k > 0, d in 1..=3 and 1 ≤ m ≤ 12");
        }
        let mut amp = k / 2.0;
        for _ in 0..40 {
            let f = Self::cascade_raw(d, m, amp, seed)?;
            let prof = f.density_deviation_profile(1.0)?;
            if prof.fit_inverse_linear() <= k {
                return Ok(f);
            }
            amp *= 0.8;
        }
        Err(Error::Infeasible(format!("no cascade amplitude meets the gate k = {k}")))
    }

    fn cascade_raw(d: usize, m: u32, amp: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kids = 1usize << d;
        let mut values = vec![1.0f64];
        for level in 0..m {
            let j = f64::from(m - level - 1);
            let a = amp / ((j + 2.0) * (j + 3.0));
            let n = 1usize << level;
            let dims = vec![n; d];
            let child_dims = vec![2 * n; d];
            let mut next = vec![0.0; values.len() * kids];
            for (k, &v) in values.iter().enumerate() {
                let idx = unflatten_dims(k, &dims);
                let mut mult = Vec::with_capacity(kids);
                for _ in 0..kids / 2 {
                    let delta = rng.gen_range(-a..=a);
                    mult.push(1.0 + delta);
                    mult.push(1.0 - delta);
                }
                for i in (1..kids).rev() {
                    mult.swap(i, rng.gen_range(0..=i));
                }
                for (b, mu) in mult.into_iter().enumerate() {
                    let child: Vec<usize> = (0..d).map(|q| 2 * idx[q] + ((b >> (d - 1 - q)) & 1)).collect();
                    next[flat(&child, &child_dims)] = v * mu;
                }
            }
            values = next;
        }
        let side = f64::from(1u32 << m);
        Self::new(vec![0.0; d], vec![side; d], vec![1; d], m, values)
    }

    /// The strip `[0,1] × [0,1/N]` cut into `N` squares, valued `1` on odd
    /// squares and `1 + c` on even ones (counting from one).
    pub fn checkerboard(c: f64, n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return invalid(format!("checkerboard needs an even square count, got {n}"));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return invalid("contrast must be non-negative");
        }
        let values = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { 1.0 + c }).collect();
        Self::new(vec![0.0, 0.0], vec![1.0, 1.0 / n as f64], vec![n, 1], 0, values)
    }

    /// Unit-cell counts of `X` with half-open cells; empty cells get
    /// `floor_value`.
    pub fn from_delone(x: &PointSet, floor_value: f64) -> Result<(Self, DeloneFieldReport)> {
        if !(floor_value > 0.0) {
            return invalid("empty-cell floor must be positive");
        }
        let w = x.window();
        let d = w.dim();
        let dims: Vec<usize> = (0..d).map(|a| w.extent(a) as usize).collect();
        let mut counts = vec![0.0f64; dims.iter().product()];
        for p in x.points() {
            let mut idx = Vec::with_capacity(d);
            for a in 0..d {
                let c = (p[a] - w.lo[a] as f64).floor() as i64;
                if c < 0 || c >= dims[a] as i64 {
                    break;
                }
                idx.push(c as usize);
            }
            if idx.len() == d {
                counts[flat(&idx, &dims)] += 1.0;
            }
        }
        let empty = counts.iter().filter(|&&c| c == 0.0).count();
        for c in counts.iter_mut().filter(|c| **c == 0.0) {
            *c = floor_value;
        }
        let origin = w.lo.iter().map(|&v| v as f64).collect();
        let extent = dims.iter().map(|&v| v as f64).collect();
        let field = Self::new(origin, extent, dims, 0, counts)?;
        let report = DeloneFieldReport { empty_cells: empty, floor_value, added_mass: empty as f64 * floor_value };
        Ok((field, report))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn origin(&self) -> &[f64] {
        &self.window.origin
    }

    pub fn extent(&self) -> &[f64] {
        &self.window.extent
    }

    pub fn base(&self) -> &[usize] {
        &self.base
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn inf_bound(&self) -> f64 {
        self.inf_bound
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Finest-grid cell counts per axis.
    pub fn dims(&self) -> Vec<usize> {
        self.dims_at(self.depth)
    }

    pub fn dims_at(&self, level: u32) -> Vec<usize> {
        self.base.iter().map(|b| b << level).collect()
    }

    pub fn cell_size(&self) -> Vec<f64> {
        self.cell_size_at(self.depth)
    }

    pub fn cell_size_at(&self, level: u32) -> Vec<f64> {
        self.dims_at(level).iter().zip(&self.window.extent).map(|(&n, e)| e / n as f64).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size().iter().product()
    }

    pub fn window_volume(&self) -> f64 {
        self.window.extent.iter().product()
    }

    /// True when the window is one root cube, the shape transport works on.
    pub fn is_root_cube(&self) -> bool {
        self.base.iter().all(|&b| b == 1)
            && self.window.extent.iter().all(|e| (e - self.window.extent[0]).abs() <= tol::EXACT * e)
    }

    pub fn unflatten(&self, mut k: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut idx = vec![0; self.d];
        for a in (0..self.d).rev() {
            idx[a] = k % dims[a];
            k /= dims[a];
        }
        idx
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        self.values[flat(idx, &self.dims())]
    }

    /// Value of the cell containing `x`; the upper faces belong to the last cells.
    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        let dims = self.dims();
        let h = self.cell_size();
        let mut idx = Vec::with_capacity(self.d);
        for a in 0..self.d {
            let t = (x[a] - self.window.origin[a]) / h[a];
            if !(t >= 0.0 && t <= dims[a] as f64) {
                return Err(Error::OutOfWindow(x.to_vec()));
            }
            idx.push((t.floor() as usize).min(dims[a] - 1));
        }
        Ok(self.value(&idx))
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// `⨍_window f`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Mass of the finest-grid cell box `[lo, hi)`.
    pub fn mass_box(&self, lo: &[usize], hi: &[usize]) -> f64 {
        self.sum_box(lo, hi) * self.cell_volume()
    }

    fn sum_box(&self, lo: &[usize], hi: &[usize]) -> f64 {
        let dims = self.dims();
        let lo_i: Vec<i64> = lo.iter().map(|&v| v as i64).collect();
        let hi_i: Vec<i64> = hi.iter().map(|&v| v as i64 - 1).collect();
        if lo_i.iter().zip(&hi_i).any(|(l, h)| l > h) {
            return 0.0;
        }
        let mut k = lo_i.clone();
        let mut s = 0.0;
        loop {
            let idx: Vec<usize> = k.iter().map(|&v| v as usize).collect();
            s += self.values[flat(&idx, &dims)];
            if !advance(&mut k, &lo_i, &hi_i) {
                break;
            }
        }
        s
    }

    /// Finest-grid index box `[lo, hi)` of a dyadic cube.
    pub fn cube_box(&self, c: &DyadicCube) -> Result<(Vec<usize>, Vec<usize>)> {
        if c.level > self.depth || c.index.len() != self.d {
            return invalid(format!("cube level {} not resolvable at depth {}", c.level, self.depth));
        }
        let dims = self.dims_at(c.level);
        if c.index.iter().zip(&dims).any(|(i, n)| i >= n) {
            return invalid("cube index outside the grid");
        }
        let s = 1usize << (self.depth - c.level);
        let lo: Vec<usize> = c.index.iter().map(|i| i * s).collect();
        let hi = lo.iter().map(|l| l + s).collect();
        Ok((lo, hi))
    }

    /// Field at depth `i` whose cells carry the means of this field's cells.
    pub fn average(&self, i: u32) -> Result<Self> {
        if i > self.depth {
            return invalid(format!("cannot average to depth {i} above {}", self.depth));
        }
        let dims = self.dims_at(i);
        let s = 1usize << (self.depth - i);
        let per = s.pow(self.d as u32) as f64;
        let mut values = vec![0.0; dims.iter().product()];
        for (k, v) in values.iter_mut().enumerate() {
            let idx = unflatten_dims(k, &dims);
            let lo: Vec<usize> = idx.iter().map(|v| v * s).collect();
            let hi: Vec<usize> = lo.iter().map(|l| l + s).collect();
            *v = self.sum_box(&lo, &hi) / per;
        }
        let mut out = self.clone();
        out.depth = i;
        out.values = values;
        Ok(out)
    }

    /// Every cell split into `2^k` per axis with its value copied.
    pub fn refine(&self, k: u32) -> Result<Self> {
        let dims = self.dims_at(self.depth + k);
        let s = 1usize << k;
        let coarse = self.dims();
        let values = (0..dims.iter().product())
            .map(|j| {
                let idx: Vec<usize> = unflatten_dims(j, &dims).iter().map(|v| v / s).collect();
                self.values[flat(&idx, &coarse)]
            })
            .collect();
        Self::new(self.window.origin.clone(), self.window.extent.clone(), self.base.clone(), self.depth + k, values)
    }

    /// `⨍_C |f − ⨍_C f|` over a finest-grid box.
    pub fn mean_osc_box(&self, lo: &[usize], hi: &[usize]) -> f64 {
        let n: usize = lo.iter().zip(hi).map(|(l, h)| h - l).product();
        if n == 0 {
            return 0.0;
        }
        let mean = self.sum_box(lo, hi) / n as f64;
        let dims = self.dims();
        let lo_i: Vec<i64> = lo.iter().map(|&v| v as i64).collect();
        let hi_i: Vec<i64> = hi.iter().map(|&v| v as i64 - 1).collect();
        let mut k = lo_i.clone();
        let mut s = 0.0;
        loop {
            let idx: Vec<usize> = k.iter().map(|&v| v as usize).collect();
            s += (self.values[flat(&idx, &dims)] - mean).abs();
            if !advance(&mut k, &lo_i, &hi_i) {
                break;
            }
        }
        s / n as f64
    }

    pub fn mean_osc(&self, c: &DyadicCube) -> Result<f64> {
        let (lo, hi) = self.cube_box(c)?;
        Ok(self.mean_osc_box(&lo, &hi))
    }

    /// `(i, max mean_osc over level-i cells)` for every level.
    pub fn oscillation_profile(&self) -> Vec<(u32, f64)> {
        (0..=self.depth)
            .map(|level| {
                let dims = self.dims_at(level);
                let worst = (0..dims.iter().product())
                    .map(|k| {
                        let c = DyadicCube { level, index: unflatten_dims(k, &dims) };
                        self.mean_osc(&c).unwrap_or(0.0)
                    })
                    .fold(0.0, f64::max);
                (level, worst)
            })
            .collect()
    }

    /// `(α, β)` for the box `[lo, hi)` cut in half across `axis`; `α` is the
    /// mass share of the lower half and `β = 1 − α`.
    pub fn split_ratios(&self, lo: &[usize], hi: &[usize], axis: usize) -> Result<(f64, f64)> {
        if axis >= self.d || lo.len() != self.d || hi.len() != self.d {
            return invalid("split axis or box dimension out of range");
        }
        let dims = self.dims();
        if (0..self.d).any(|a| lo[a] >= hi[a] || hi[a] > dims[a]) {
            return invalid("split block outside the field");
        }
        let len = hi[axis] - lo[axis];
        if len % 2 != 0 {
            return invalid("split axis needs an even number of cells");
        }
        let mut mid = hi.to_vec();
        mid[axis] = lo[axis] + len / 2;
        let a = self.sum_box(lo, &mid);
        let total = self.sum_box(lo, hi);
        if !(total > 0.0) {
            return invalid("block carries no mass");
        }
        let alpha = a / total;
        Ok((alpha, 1.0 - alpha))
    }

    /// `E_ρ(2^i)` over integer-corner cubes in the window; cells must tile
    /// unit cubes.
    pub fn density_deviation_profile(&self, rho: f64) -> Result<DeviationProfile> {
        if !(rho > 0.0) {
            return invalid("reference density must be positive");
        }
        let h = self.cell_size();
        let mut per_unit = Vec::with_capacity(self.d);
        for a in 0..self.d {
            let q = 1.0 / h[a];
            let o = self.window.origin[a];
            let e = self.window.extent[a];
            if (q - q.round()).abs() > 1e-9 || q.round() < 1.0 || (o - o.round()).abs() > 1e-12 || (e - e.round()).abs() > 1e-12 {
                return invalid("deviation profile needs integer corners and cells tiling unit cubes");
            }
            per_unit.push(q.round() as usize);
        }
        let side = self.window.extent.iter().map(|e| e.round() as i64).min().unwrap_or(0);
        if side < 1 {
            return invalid("window smaller than a unit cube");
        }
        let unit_dims: Vec<usize> = (0..self.d).map(|a| self.window.extent[a].round() as usize).collect();
        // Inclusive prefix sums of unit-cube masses.
        let pdims: Vec<usize> = unit_dims.iter().map(|n| n + 1).collect();
        let mut p = vec![0.0f64; pdims.iter().product()];
        for k in 0..unit_dims.iter().product::<usize>() {
            let u = unflatten_dims(k, &unit_dims);
            let lo: Vec<usize> = (0..self.d).map(|a| u[a] * per_unit[a]).collect();
            let hi: Vec<usize> = (0..self.d).map(|a| lo[a] + per_unit[a]).collect();
            let idx: Vec<usize> = u.iter().map(|v| v + 1).collect();
            p[flat(&idx, &pdims)] = self.mass_box(&lo, &hi);
        }
        for a in 0..self.d {
            let stride: usize = pdims[a + 1..].iter().product();
            for k in 0..p.len() {
                if (k / stride) % pdims[a] != 0 {
                    p[k] += p[k - stride];
                }
            }
        }
        let mut entries = Vec::new();
        let mut i = 0u32;
        while (1i64 << i) <= side {
            let k = 1usize << i;
            let lo0 = vec![0i64; self.d];
            let span: Vec<i64> = unit_dims.iter().map(|&n| (n - k) as i64).collect();
            let mut off = lo0.clone();
            let mut worst: f64 = 1.0;
            loop {
                let lo: Vec<usize> = off.iter().map(|&v| v as usize).collect();
                let hi: Vec<usize> = lo.iter().map(|v| v + k).collect();
                let mass = prefix_box(&p, &pdims, &lo, &hi);
                let avg = mass / (k as f64).powi(self.d as i32);
                worst = worst.max((rho / avg).max(avg / rho));
                if !advance(&mut off, &lo0, &span) {
                    break;
                }
            }
            entries.push((i, worst));
            i += 1;
        }
        let corner = self.window.origin.iter().map(|o| o.round() as i64).collect();
        Ok(DeviationProfile { rho, entries, window: IntegerCube::new(corner, side) })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("field serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.d != raw.window.origin.len() {
            return Err(Error::Parse("`d` disagrees with the window".into()));
        }
        Self::new(raw.window.origin, raw.window.extent, raw.base, raw.depth, raw.values)
    }
}

pub(crate) fn unflatten_dims(mut k: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for a in (0..dims.len()).rev() {
        idx[a] = k % dims[a];
        k /= dims[a];
    }
    idx
}

fn prefix_box(p: &[f64], dims: &[usize], lo: &[usize], hi: &[usize]) -> f64 {
    let d = dims.len();
    let mut total = 0.0;
    for mask in 0..(1usize << d) {
        let mut idx = Vec::with_capacity(d);
        let mut sign = 1.0;
        for a in 0..d {
            if mask >> a & 1 == 1 {
                idx.push(lo[a]);
                sign = -sign;
            } else {
                idx.push(hi[a]);
            }
        }
        total += sign * p[flat(&idx, dims)];
    }
    total
}

/// CSV `i,osc` of an oscillation profile.
pub fn oscillation_csv(profile: &[(u32, f64)]) -> String {
    let mut s = String::from("i,osc\n");
    for (i, v) in profile {
        s.push_str(&format!("{i},{v:.17e}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::Generator;

    #[test]
    fn checkerboard_examples() {
        let f = DyadicField::checkerboard(1.0, 4).unwrap();
        assert_eq!(f.values(), &[1.0, 2.0, 1.0, 2.0]);
        assert!((f.total_mass() - 0.375).abs() < 1e-15);
        let g = DyadicField::checkerboard(0.0, 4).unwrap();
        assert!(g.values().iter().all(|&v| v == 1.0));
        assert!(DyadicField::checkerboard(1.0, 3).is_err());
        // Whole strip: half the cells at each value.
        assert!((f.mean_osc_box(&[0, 0], &[4, 1]) - 0.5).abs() < 1e-15);
        // Two neighbouring cells.
        assert!((f.mean_osc_box(&[0, 0], &[2, 1]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn averaging() {
        let f = DyadicField::new(vec![0.0; 2], vec![1.0; 2], vec![1, 1], 1, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(f.average(1).unwrap(), f);
        let a = f.average(0).unwrap();
        assert_eq!(a.values(), &[1.5]);
        assert_eq!(a.total_mass(), f.total_mass());
        assert!(f.average(2).is_err());
    }

    #[test]
    fn split_ratio_examples() {
        let c = DyadicField::constant(2, 1.0, 2).unwrap();
        assert_eq!(c.split_ratios(&[0, 0], &[4, 4], 1).unwrap(), (0.5, 0.5));
        let f = DyadicField::new(vec![0.0; 2], vec![1.0; 2], vec![1, 1], 1, vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        assert_eq!(f.split_ratios(&[0, 0], &[2, 2], 0).unwrap(), (0.25, 0.75));
    }

    #[test]
    fn deviation_profile_examples() {
        let f = DyadicField::new(vec![0.0; 2], vec![2.0; 2], vec![2, 2], 0, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        let p = f.density_deviation_profile(1.5).unwrap();
        assert_eq!(p.e(0), Some(1.5));
        assert_eq!(p.e(1), Some(1.0));
        let c = DyadicField::new(vec![0.0; 2], vec![4.0; 2], vec![4, 4], 0, vec![3.0; 16]).unwrap();
        assert!(c.density_deviation_profile(3.0).unwrap().entries.iter().all(|e| e.1 == 1.0));
    }

    #[test]
    fn from_delone_counts() {
        let z = PointSet::generate(Generator::Lattice { d: 2, spacing: 1.0, side: 8 }).unwrap();
        let (f, rep) = DyadicField::from_delone(&z, 0.5).unwrap();
        assert_eq!(rep.empty_cells, 0);
        assert!(f.values().iter().all(|&v| v == 1.0));
        assert!(f.is_root_cube());
        assert_eq!(f.depth(), 3);
        let p = f.density_deviation_profile(1.0).unwrap();
        assert!(p.entries.iter().all(|e| e.1 == 1.0));

        let fib = PointSet::generate(Generator::Fibonacci { n: 10 }).unwrap();
        let (g, rep) = DyadicField::from_delone(&fib, 0.5).unwrap();
        assert!(rep.empty_cells > 0);
        assert!(g.values().iter().all(|&v| v == 0.5 || v == 1.0 || v == 2.0));
    }

    #[test]
    fn json_round_trip() {
        let f = DyadicField::checkerboard(1.0, 4).unwrap();
        assert_eq!(DyadicField::from_json(&f.to_json()).unwrap(), f);
    }
}
