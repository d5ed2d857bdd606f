//! Recursive checkerboard implantation on the strip `[0,1] × [0,1/N]`.
//!
//! Level 0 is the checkerboard of `N` squares. Each square of level `ℓ`
//! carries, along its bottom edge, a row of squares of level `ℓ + 1` whose
//! side is the implantation height; the row alternates `1, 1+c, 1, …` from
//! the left and the rest of the parent keeps the parent's value. All sides
//! are powers of two, so every feature is a dyadic square.

use serde::{Deserialize, Serialize};

use super::phi::{phi_tilde, OscillationBound};
use super::DyadicField;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BkParams {
    /// Contrast; the field takes the values `1` and `1 + c`.
    pub c: f64,
    /// Squares in the base strip, a power of two.
    pub n: usize,
    pub m: usize,
    /// Number of levels, the base checkerboard included.
    pub levels: u32,
    pub phi: OscillationBound,
    /// `C` in the height cap `C·l_S·φ(l_S)`.
    pub height_constant: f64,
}

/// Height bookkeeping for one implantation round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BkLevel {
    /// Side `l_S` of the squares receiving the implant.
    pub host_side: f64,
    /// Height from the `φ̃` recursion.
    pub nominal: f64,
    /// `C·l_S·φ(l_S)`.
    pub cap: f64,
    /// `l_S·2^{-k}` for the smallest `k ≥ 1` not above `min(nominal, cap)`.
    pub height: f64,
}

#[derive(Clone, Debug)]
pub struct BkField {
    params: BkParams,
    /// Square side per level; `sides[0] = 1/N`.
    sides: Vec<f64>,
    heights: Vec<BkLevel>,
    /// Area at value `1` inside a full square of level `ℓ` whose own value
    /// has index `v` (`0` for `1`, `1` for `1 + c`).
    full_low: Vec<[f64; 2]>,
}

const MAX_HALVINGS: u32 = 60;

impl BkField {
    pub fn new(params: BkParams) -> Result<Self> {
        if !(params.c > 0.0 && params.c.is_finite()) {
            return invalid("contrast must be positive");
        }
        if params.n < 2 || !params.n.is_power_of_two() {
            return invalid(format!("square count {} must be a power of two", params.n));
        }
        if params.m < 2 {
            return invalid("M must be at least 2");
        }
        if !(1..=8).contains(&params.levels) {
            return invalid(format!("levels {} outside 1..=8", params.levels));
        }
        if !(params.height_constant > 0.0) {
            return invalid("height constant must be positive");
        }
        let n = params.n as f64;
        let mut sides = vec![1.0 / n];
        let mut heights = Vec::new();
        for l in 1..params.levels as usize {
            let host = sides[l - 1];
            let nominal = if l == 1 {
                phi_tilde(&params.phi, 1.0 / n)? / (params.m as f64 * n)
            } else {
                host * phi_tilde(&params.phi, host)?
            };
            let cap = params.height_constant * host * params.phi.eval(host)?;
            let target = nominal.min(cap);
            let mut k = 1u32;
            while host * 0.5f64.powi(k as i32) > target {
                k += 1;
                if k > MAX_HALVINGS {
                    return Err(Error::DepthOverflow { needed: k, max: MAX_HALVINGS });
                }
            }
            let height = host * 0.5f64.powi(k as i32);
            heights.push(BkLevel { host_side: host, nominal, cap, height });
            sides.push(height);
        }
        let depth = sides.len();
        let mut full_low = vec![[0.0; 2]; depth];
        full_low[depth - 1] = [sides[depth - 1].powi(2), 0.0];
        for l in (0..depth - 1).rev() {
            let (s, h) = (sides[l], sides[l + 1]);
            let count = (s / h).round();
            let lows = (count / 2.0).ceil();
            let highs = (count / 2.0).floor();
            let kids = lows * full_low[l + 1][0] + highs * full_low[l + 1][1];
            full_low[l] = [s * s - s * h + kids, kids];
        }
        Ok(Self { params, sides, heights, full_low })
    }

    pub fn params(&self) -> &BkParams {
        &self.params
    }

    pub fn heights(&self) -> &[BkLevel] {
        &self.heights
    }

    /// Square side at each level.
    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    /// Side of the finest feature.
    pub fn finest(&self) -> f64 {
        *self.sides.last().expect("at least one level")
    }

    pub fn strip_height(&self) -> f64 {
        self.sides[0]
    }

    fn value_of(&self, v: usize) -> f64 {
        if v == 0 {
            1.0
        } else {
            1.0 + self.params.c
        }
    }

    /// Field value at `(x, y)`; cells are half-open on the upper sides.
    pub fn value_at(&self, x: f64, y: f64) -> Result<f64> {
        let top = self.sides[0];
        if !(0.0..=1.0).contains(&x) || !(0.0..=top).contains(&y) {
            return Err(Error::OutOfWindow(vec![x, y]));
        }
        let j = ((x / top).floor() as usize).min(self.params.n - 1);
        let (mut x0, y0) = (j as f64 * top, 0.0);
        let mut v = j % 2;
        for l in 0..self.sides.len() - 1 {
            let h = self.sides[l + 1];
            if y - y0 >= h {
                break;
            }
            let count = (self.sides[l] / h).round() as usize;
            let k = (((x - x0) / h).floor() as usize).min(count - 1);
            x0 += k as f64 * h;
            v = k % 2;
        }
        Ok(self.value_of(v))
    }

    /// Area of the value-`1` region inside the rectangle `[x0,x1] × [y0,y1]`.
    pub fn area_low(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let top = self.sides[0];
        let r = Rect { x0, x1, y0, y1 };
        let j0 = ((x0 / top).floor().max(0.0)) as usize;
        let j1 = ((x1 / top).ceil() as usize).min(self.params.n);
        (j0..j1).map(|j| self.area_in(0, j as f64 * top, 0.0, j % 2, &r)).sum()
    }

    fn area_in(&self, l: usize, x: f64, y: f64, v: usize, r: &Rect) -> f64 {
        let s = self.sides[l];
        let cx0 = r.x0.max(x);
        let cx1 = r.x1.min(x + s);
        let cy0 = r.y0.max(y);
        let cy1 = r.y1.min(y + s);
        if cx1 <= cx0 || cy1 <= cy0 {
            return 0.0;
        }
        if cx0 == x && cx1 == x + s && cy0 == y && cy1 == y + s {
            return self.full_low[l][v];
        }
        let low = if v == 0 { 1.0 } else { 0.0 };
        if l + 1 == self.sides.len() {
            return low * (cx1 - cx0) * (cy1 - cy0);
        }
        let h = self.sides[l + 1];
        let upper = (cy1 - cy0.max(y + h)).max(0.0) * (cx1 - cx0);
        let mut total = low * upper;
        if cy0 >= y + h {
            return total;
        }
        let k0 = ((cx0 - x) / h).floor() as usize;
        let k1 = ((cx1 - x) / h).ceil() as usize;
        if cy0 == y && cy1 >= y + h {
            let f0 = (((cx0 - x) / h).ceil() as usize).min(k1);
            let f1 = (((cx1 - x) / h).floor() as usize).max(f0);
            let evens = f1.div_ceil(2) - f0.div_ceil(2);
            let odds = (f1 - f0) - evens;
            total += evens as f64 * self.full_low[l + 1][0] + odds as f64 * self.full_low[l + 1][1];
            for k in (k0..f0).chain(f1..k1) {
                total += self.area_in(l + 1, x + k as f64 * h, y, k % 2, r);
            }
        } else {
            for k in k0..k1 {
                total += self.area_in(l + 1, x + k as f64 * h, y, k % 2, r);
            }
        }
        total
    }

    /// `2c·|R_1|·|R_{1+c}| / |S|²` for the square with lower-left corner
    /// `(x, y)` and side `s`, which is the exact mean oscillation of a
    /// two-valued function.
    pub fn mean_osc_square(&self, x: f64, y: f64, s: f64) -> f64 {
        let area = s * s;
        let low = self.area_low(x, x + s, y, y + s);
        let high = area - low;
        2.0 * self.params.c * low * high / (area * area)
    }

    /// Samples the field at cell centres of a `2^depth`-per-side grid on the
    /// square with lower-left corner `(x, y)` and side `s`. Exact whenever
    /// the grid is at least as fine as every feature inside the square.
    pub fn raster(&self, x: f64, y: f64, s: f64, depth: u32) -> Result<DyadicField> {
        if depth > 12 {
            return Err(Error::DepthOverflow { needed: depth, max: 12 });
        }
        let n = 1usize << depth;
        let h = s / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(self.value_at(x + (i as f64 + 0.5) * h, y + (j as f64 + 0.5) * h)?);
            }
        }
        DyadicField::new(vec![x, y], vec![s, s], vec![1, 1], depth, values)
    }

    /// The whole strip as a dyadic field at the finest feature scale.
    pub fn to_dyadic(&self, max_depth: u32) -> Result<DyadicField> {
        let ratio = self.sides[0] / self.finest();
        let needed = ratio.log2().round() as u32;
        if needed > max_depth {
            return Err(Error::DepthOverflow { needed, max: max_depth });
        }
        let n = self.params.n;
        let cols = n << needed;
        let rows = 1usize << needed;
        let h = self.finest();
        let mut values = Vec::with_capacity(cols * rows);
        for i in 0..cols {
            for j in 0..rows {
                values.push(self.value_at((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)?);
            }
        }
        DyadicField::new(vec![0.0, 0.0], vec![1.0, self.sides[0]], vec![n, 1], needed, values)
    }
}

struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(levels: u32) -> BkParams {
        BkParams {
            c: 1.0,
            n: 4,
            m: 2,
            levels,
            phi: OscillationBound::power(1.0, 2.0).unwrap(),
            height_constant: 1.0,
        }
    }

    #[test]
    fn one_level_is_the_checkerboard() {
        let f = BkField::new(params(1)).unwrap();
        assert_eq!(f.to_dyadic(0).unwrap(), DyadicField::checkerboard(1.0, 4).unwrap());
    }

    #[test]
    fn heights_follow_the_recursion() {
        let f = BkField::new(params(3)).unwrap();
        let h = f.heights();
        assert_eq!(h[0].nominal, 1.0 / 128.0);
        assert_eq!(h[0].height, 1.0 / 128.0);
        assert_eq!(h[1].height, 0.5f64.powi(21));
        for lvl in h {
            assert!(lvl.height <= lvl.cap && lvl.height <= lvl.nominal);
        }
        assert!(matches!(f.to_dyadic(10), Err(Error::DepthOverflow { .. })));
    }

    #[test]
    fn area_matches_raster() {
        let f = BkField::new(params(2)).unwrap();
        let g = f.to_dyadic(8).unwrap();
        let low = g.values().iter().filter(|&&v| v == 1.0).count() as f64 * g.cell_volume();
        assert!((f.area_low(0.0, 1.0, 0.0, 0.25) - low).abs() < 1e-15);
        assert!(g.values().iter().all(|&v| v == 1.0 || v == 2.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = params(2);
        p.n = 6;
        assert!(BkField::new(p).is_err());
    }
}
