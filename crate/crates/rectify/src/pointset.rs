//! Finite windows of Delone sets.
//!
//! Points are stored flat with stride `d` and bucketed into unit cells of
//! the integer window. Cube counts are half-open, `∏[n_l, n_l + k)`, so the
//! counts of any partition of the window into integer cubes add up.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::DyadicField;
use crate::error::{invalid, Error, Result};
use crate::tol;

/// Closed axis-aligned box with integer corners.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl Window {
    pub fn cube(d: usize, side: i64) -> Self {
        Self { lo: vec![0; d], hi: vec![side; d] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, axis: usize) -> i64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.extent(a) as f64).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(a, &c)| c >= self.lo[a] as f64 && c <= self.hi[a] as f64)
    }

    /// The largest cube anchored at `lo` that fits.
    pub fn as_cube(&self) -> IntegerCube {
        let side = (0..self.dim()).map(|a| self.extent(a)).min().unwrap_or(0);
        IntegerCube { corner: self.lo.clone(), side }
    }
}

/// `∏ [corner_l, corner_l + side]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerCube {
    pub corner: Vec<i64>,
    pub side: i64,
}

impl IntegerCube {
    pub fn new(corner: Vec<i64>, side: i64) -> Self {
        Self { corner, side }
    }

    pub fn volume(&self) -> f64 {
        (self.side as f64).powi(self.corner.len() as i32)
    }

    pub fn inside(&self, w: &Window) -> bool {
        self.corner.len() == w.dim()
            && (0..w.dim()).all(|a| self.corner[a] >= w.lo[a] && self.corner[a] + self.side <= w.hi[a])
    }
}

/// Supremum of the density deviation over cubes of side `2^i`, for each `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationProfile {
    pub rho: f64,
    /// `(i, E(2^i))`, sorted by `i`, every `E ≥ 1`.
    pub entries: Vec<(u32, f64)>,
    pub window: IntegerCube,
}

impl DeviationProfile {
    /// `E(2^i)` if present.
    pub fn e(&self, i: u32) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == i).map(|e| e.1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,E\n");
        for (i, e) in &self.entries {
            s.push_str(&format!("{i},{e:.17e}\n"));
        }
        s
    }

    /// Reads `i,E` rows; `rho` and the window are not part of the format.
    pub fn from_csv(text: &str, rho: f64) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some(h) if h.replace(' ', "") == "i,E" => {}
            other => return Err(Error::Parse(format!("expected header `i,E`, got {other:?}"))),
        }
        let mut entries = Vec::new();
        for line in lines {
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad row {line:?}")))?;
            let i: u32 = a.trim().parse().map_err(|_| Error::Parse(format!("bad index {a:?}")))?;
            let e: f64 = b.trim().parse().map_err(|_| Error::Parse(format!("bad value {b:?}")))?;
            if !(e >= 1.0) {
                return Err(Error::Parse(format!("deviation below one: {e}")));
            }
            entries.push((i, e));
        }
        entries.sort_by_key(|e| e.0);
        let side = entries.last().map_or(1, |e| 1i64 << e.0);
        Ok(Self { rho, entries, window: IntegerCube::new(vec![0], side) })
    }

    /// `K̂ = max_i (1+i)(E(2^{i-1}) − 1)`, i.e. `(i+2)(E(2^i) − 1)` per entry.
    pub fn fit_inverse_linear(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, e)| (f64::from(i) + 2.0) * (e - 1.0))
            .fold(0.0, f64::max)
    }
}

/// Unit-cell bucket index over the window. Cells run `0..=extent` per axis so
/// that points on the upper face have a home.
#[derive(Clone, Debug)]
struct Grid {
    dims: Vec<usize>,
    start: Vec<u32>,
    ids: Vec<u32>,
}

/// Finite Delone window with its packing and covering constants.
#[derive(Clone, Debug)]
pub struct PointSet {
    d: usize,
    coords: Vec<f64>,
    window: Window,
    packing: f64,
    covering: f64,
    grid: Grid,
    /// Inclusive prefix sums of half-open unit-cell counts, `extent + 1` per axis.
    prefix: Vec<u64>,
}

/// Point-set generators.
#[derive(Clone, Debug)]
pub enum Generator<'a> {
    /// `spacing·Z^d ∩ [0, side]^d`.
    Lattice { d: usize, spacing: f64, side: i64 },
    /// Lattice points displaced uniformly in a ball of radius `amplitude`,
    /// then clamped to the window.
    Perturbed { d: usize, spacing: f64, side: i64, amplitude: f64, seed: u64 },
    /// Interior breakpoints of the Fibonacci word after `n` substitutions
    /// `a → ab`, `b → a`, with tile lengths `1` and the golden ratio.
    Fibonacci { n: u32 },
    /// `round(value·cellVolume)` points per cell on a centred subgrid.
    FromDensity(&'a DyadicField),
}

pub const GOLDEN: f64 = 1.618_033_988_749_895;

impl PointSet {
    pub fn generate(kind: Generator<'_>) -> Result<Self> {
        match kind {
            Generator::Lattice { d, spacing, side } => {
                check_dim(d)?;
                if !(spacing > 0.0) || side < 1 {
                    return invalid("lattice needs positive spacing and side");
                }
                Self::new(d, lattice_points(d, spacing, side), Window::cube(d, side))
            }
            Generator::Perturbed { d, spacing, side, amplitude, seed } => {
                check_dim(d)?;
                if !(spacing > 0.0) || side < 1 {
                    return invalid("lattice needs positive spacing and side");
                }
                if !(amplitude >= 0.0 && amplitude < spacing / 2.0 - 1e-9) {
                    return invalid(format!("amplitude {amplitude} must stay below spacing/2"));
                }
                let mut pts = lattice_points(d, spacing, side);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut v = vec![0.0; d];
                for p in pts.chunks_mut(d) {
                    loop {
                        for c in v.iter_mut() {
                            *c = rng.gen_range(-1.0..1.0);
                        }
                        if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
                            break;
                        }
                    }
                    for (c, dv) in p.iter_mut().zip(&v) {
                        *c = (*c + amplitude * dv).clamp(0.0, side as f64);
                    }
                }
                Self::new(d, pts, Window::cube(d, side))
            }
            Generator::Fibonacci { n } => {
                if !(1..=32).contains(&n) {
                    return invalid(format!("substitution count {n} outside 1..=32"));
                }
                let word = fibonacci_word(n);
                let mut x = 0.0;
                let mut pts = Vec::with_capacity(word.len());
                for (k, &a) in word.iter().enumerate() {
                    x += if a { 1.0 } else { GOLDEN };
                    if k + 1 < word.len() {
                        pts.push(x);
                    }
                }
                let hi = x.ceil() as i64;
                Self::new(1, pts, Window { lo: vec![0], hi: vec![hi] })
            }
            Generator::FromDensity(field) => from_density(field),
        }
    }

    /// Builds the index and measures `ϱ` and `ϑ`.
    pub fn new(d: usize, coords: Vec<f64>, window: Window) -> Result<Self> {
        check_dim(d)?;
        if window.dim() != d || coords.len() % d != 0 {
            return invalid("coordinate stride does not match the window dimension");
        }
        if (0..d).any(|a| window.extent(a) < 1) {
            return invalid("window must have positive integer extent");
        }
        if coords.is_empty() {
            return invalid("a Delone window needs at least one point");
        }
        for p in coords.chunks(d) {
            if !window.contains(p) {
                return Err(Error::OutOfWindow(p.to_vec()));
            }
        }
        let grid = Grid::build(d, &coords, &window);
        let prefix = prefix_counts(d, &coords, &window);
        let mut ps = Self { d, coords, window, packing: 0.0, covering: 0.0, grid, prefix };
        ps.packing = ps.measure_packing();
        ps.covering = ps.measure_covering();
        Ok(ps)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.d..(k + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.d)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Minimum pairwise distance `ϱ`.
    pub fn packing(&self) -> f64 {
        self.packing
    }

    /// Covering radius `ϑ`, verified on a grid of pitch `ϑ/2`.
    pub fn covering(&self) -> f64 {
        self.covering
    }

    /// Nearest point to `x` other than `exclude`, with its distance.
    pub fn nearest(&self, x: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        let home = self.grid.cell_of(x, &self.window);
        let max_ring = self.grid.dims.iter().copied().max().unwrap_or(1);
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=max_ring {
            self.grid.for_ring(&home, ring, |cell| {
                for &id in self.grid.bucket(cell) {
                    let id = id as usize;
                    if Some(id) == exclude {
                        continue;
                    }
                    let dist = dist(self.point(id), x);
                    if best.map_or(true, |b| dist < b.1) {
                        best = Some((id, dist));
                    }
                }
            });
            if let Some(b) = best {
                if b.1 <= ring as f64 {
                    break;
                }
            }
        }
        best
    }

    /// Indices of points with `‖y − x‖ ≤ r`.
    pub fn ball(&self, x: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let lo: Vec<i64> = (0..self.d)
            .map(|a| ((x[a] - r - self.window.lo[a] as f64).floor() as i64).max(0))
            .collect();
        let hi: Vec<i64> = (0..self.d)
            .map(|a| ((x[a] + r - self.window.lo[a] as f64).floor() as i64).min(self.grid.dims[a] as i64 - 1))
            .collect();
        if (0..self.d).any(|a| lo[a] > hi[a]) {
            return out;
        }
        let mut cell = lo.clone();
        loop {
            let c: Vec<usize> = cell.iter().map(|&v| v as usize).collect();
            for &id in self.grid.bucket(&c) {
                if dist(self.point(id as usize), x) <= r {
                    out.push(id as usize);
                }
            }
            if !advance(&mut cell, &lo, &hi) {
                break;
            }
        }
        out
    }

    fn measure_packing(&self) -> f64 {
        (0..self.len())
            .filter_map(|k| self.nearest(self.point(k), Some(k)).map(|b| b.1))
            .fold(f64::INFINITY, f64::min)
    }

    fn max_gap(&self, pitch: f64) -> f64 {
        let steps: Vec<i64> = (0..self.d)
            .map(|a| (self.window.extent(a) as f64 / pitch).ceil() as i64)
            .collect();
        let lo = vec![0i64; self.d];
        let mut k = lo.clone();
        let mut worst: f64 = 0.0;
        let mut x = vec![0.0; self.d];
        loop {
            for a in 0..self.d {
                let t = (k[a] as f64 * pitch).min(self.window.extent(a) as f64);
                x[a] = self.window.lo[a] as f64 + t;
            }
            if let Some((_, dd)) = self.nearest(&x, None) {
                worst = worst.max(dd);
            }
            if !advance(&mut k, &lo, &steps) {
                break;
            }
        }
        worst
    }

    fn measure_covering(&self) -> f64 {
        let vol = self.window.volume();
        let pitch = (vol / 2.0e6).powf(1.0 / self.d as f64).max(0.125);
        let mut theta = self.max_gap(pitch);
        for _ in 0..8 {
            let check = self.max_gap((theta / 2.0).max(1e-3));
            if check <= theta + tol::DELONE {
                break;
            }
            theta = check;
        }
        theta
    }

    /// `|X ∩ C|` with half-open counting.
    pub fn count(&self, c: &IntegerCube) -> Result<u64> {
        if !c.inside(&self.window) {
            return invalid(format!("cube {:?}+{} leaves the window", c.corner, c.side));
        }
        let lo: Vec<usize> = (0..self.d).map(|a| (c.corner[a] - self.window.lo[a]) as usize).collect();
        let hi: Vec<usize> = lo.iter().map(|&l| l + c.side as usize).collect();
        Ok(box_sum(&self.prefix, &self.prefix_dims(), &lo, &hi))
    }

    fn prefix_dims(&self) -> Vec<usize> {
        (0..self.d).map(|a| self.window.extent(a) as usize + 1).collect()
    }

    /// `|X ∩ W| / Vol(W)` over the half-open window.
    pub fn empirical_density(&self, w: &IntegerCube) -> Result<f64> {
        Ok(self.count(w)? as f64 / w.volume())
    }

    /// `max(ρ·Vol/count, count/(ρ·Vol))`.
    pub fn deviation(&self, rho: f64, c: &IntegerCube) -> Result<f64> {
        if !(rho > 0.0) {
            return invalid("reference density must be positive");
        }
        let n = self.count(c)?;
        if n == 0 {
            return Err(Error::EmptyCube { corner: c.corner.clone(), side: c.side });
        }
        let ratio = n as f64 / (rho * c.volume());
        Ok(ratio.max(1.0 / ratio))
    }

    /// Exhaustive scan of integer-corner cubes of side `2^i`, `0 ≤ i ≤ i_max`,
    /// inside `w`.
    pub fn deviation_profile(&self, rho: f64, w: &IntegerCube, i_max: u32) -> Result<DeviationProfile> {
        self.deviation_profile_from(rho, w, 0, i_max)
    }

    /// As [`Self::deviation_profile`] for `i_min ≤ i ≤ i_max`; small cubes of
    /// a sparse set can be empty.
    pub fn deviation_profile_from(&self, rho: f64, w: &IntegerCube, i_min: u32, i_max: u32) -> Result<DeviationProfile> {
        if i_min > i_max {
            return invalid("empty scale range");
        }
        if !w.inside(&self.window) {
            return invalid("profile window leaves the point-set window");
        }
        if i_max >= 62 || (1i64 << i_max) > w.side {
            return invalid(format!("2^{i_max} exceeds the window side {}", w.side));
        }
        let mut entries = Vec::new();
        for i in i_min..=i_max {
            let k = 1i64 << i;
            let span = vec![w.side - k; self.d];
            let zero = vec![0i64; self.d];
            let mut off = zero.clone();
            let mut worst: f64 = 1.0;
            loop {
                let corner: Vec<i64> = (0..self.d).map(|a| w.corner[a] + off[a]).collect();
                worst = worst.max(self.deviation(rho, &IntegerCube::new(corner, k))?);
                if !advance(&mut off, &zero, &span) {
                    break;
                }
            }
            entries.push((i, worst));
        }
        Ok(DeviationProfile { rho, entries, window: w.clone() })
    }

    /// Deviation bound for cubes of side `k` implied by `ϱ` and `ϑ` alone.
    ///
    /// Disjoint balls of radius `ϱ/2` bound the count from above; balls of
    /// radius `ϑ` around the points cover the cube shrunk by `ϑ`. `None` when
    /// the shrunk cube is empty.
    pub fn delone_deviation_bound(&self, rho: f64, k: f64) -> Option<f64> {
        let d = self.d as i32;
        let vd = unit_ball_volume(self.d);
        let upper = (k + self.packing).powi(d) / (vd * (self.packing / 2.0).powi(d));
        let inner = k - 2.0 * self.covering;
        if inner <= 0.0 {
            return None;
        }
        let lower = inner.powi(d) / (vd * self.covering.powi(d));
        let vol = k.powi(d);
        Some((upper / (rho * vol)).max(rho * vol / lower).max(1.0))
    }

    /// Smallest `R ∈ {r, 2r, 4r, …}` such that every `R`-patch centred at an
    /// X-point contains the centre of a copy of every `r`-patch.
    ///
    /// Patches are compared after snapping relative coordinates to multiples
    /// of `snap`; only patches whose balls lie in `w` take part.
    pub fn repetitivity_radius(&self, r: f64, w: &IntegerCube, snap: f64) -> Result<f64> {
        if !(snap > 0.0) {
            return invalid("snap pitch must be positive");
        }
        if !(r > 0.0) || r >= w.side as f64 / 4.0 {
            return invalid(format!("radius {r} must lie in (0, side/4)"));
        }
        if !w.inside(&self.window) {
            return invalid("repetitivity window leaves the point-set window");
        }
        let fits = |x: &[f64], rad: f64| {
            (0..self.d).all(|a| {
                x[a] - rad >= w.corner[a] as f64 && x[a] + rad <= (w.corner[a] + w.side) as f64
            })
        };
        let reach = r + snap / 2.0;
        let mut ids: HashMap<Vec<i64>, u32> = HashMap::new();
        let mut patch_of = vec![u32::MAX; self.len()];
        for k in 0..self.len() {
            let x = self.point(k);
            if !fits(x, reach) {
                continue;
            }
            let key = self.patch_key(x, reach, snap);
            let next = ids.len() as u32;
            patch_of[k] = *ids.entry(key).or_insert(next);
        }
        let distinct = ids.len();
        if distinct == 0 {
            return Err(Error::NotFound);
        }
        let mut stamp = vec![usize::MAX; distinct];
        let mut big = r;
        loop {
            let mut any_center = false;
            let mut ok = true;
            for y in 0..self.len() {
                let yc = self.point(y);
                if !fits(yc, big) {
                    continue;
                }
                any_center = true;
                let mut seen = 0;
                for z in self.ball(yc, big) {
                    let p = patch_of[z];
                    if p != u32::MAX && stamp[p as usize] != y {
                        stamp[p as usize] = y;
                        seen += 1;
                    }
                }
                if seen < distinct {
                    ok = false;
                    break;
                }
            }
            if !any_center {
                return Err(Error::NotFound);
            }
            if ok {
                return Ok(big);
            }
            big *= 2.0;
            stamp.iter_mut().for_each(|s| *s = usize::MAX);
        }
    }

    fn patch_key(&self, x: &[f64], reach: f64, snap: f64) -> Vec<i64> {
        let mut rel: Vec<Vec<i64>> = self
            .ball(x, reach)
            .into_iter()
            .map(|k| {
                self.point(k)
                    .iter()
                    .zip(x)
                    .map(|(c, o)| ((c - o) / snap).round() as i64)
                    .collect()
            })
            .collect();
        rel.sort();
        rel.concat()
    }

    /// Point-file text: `d rho_pack theta_cover count`, then one point per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {} {}\n", self.d, self.packing, self.covering, self.len());
        for p in self.points() {
            let row: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses a point file; the window is the integer hull of the points and
    /// the Delone constants are re-measured.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let head: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty point file".into()))?
            .split_whitespace()
            .collect();
        if head.len() != 4 {
            return Err(Error::Parse("header must be `d rho_pack theta_cover count`".into()));
        }
        let d: usize = head[0].parse().map_err(|_| Error::Parse("bad dimension".into()))?;
        let count: usize = head[3].parse().map_err(|_| Error::Parse("bad count".into()))?;
        check_dim(d)?;
        let mut coords = Vec::with_capacity(count * d);
        for line in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad coordinate {t:?}"))))
                .collect::<Result<_>>()?;
            if row.len() != d {
                return Err(Error::Parse(format!("expected {d} coordinates, got {}", row.len())));
            }
            coords.extend(row);
        }
        if coords.len() != count * d {
            return Err(Error::Parse(format!("header announces {count} points, found {}", coords.len() / d)));
        }
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for p in coords.chunks(d) {
            for a in 0..d {
                lo[a] = lo[a].min(p[a].floor() as i64);
                hi[a] = hi[a].max(p[a].ceil() as i64);
            }
        }
        for a in 0..d {
            if hi[a] == lo[a] {
                hi[a] += 1;
            }
        }
        Self::new(d, coords, Window { lo, hi })
    }
}

impl Grid {
    fn build(d: usize, coords: &[f64], w: &Window) -> Self {
        let dims: Vec<usize> = (0..d).map(|a| w.extent(a) as usize + 1).collect();
        let ncell: usize = dims.iter().product();
        let mut count = vec![0u32; ncell + 1];
        let cells: Vec<usize> = coords
            .chunks(d)
            .map(|p| flat(&Self::cell_raw(&dims, p, w), &dims))
            .collect();
        for &c in &cells {
            count[c + 1] += 1;
        }
        for k in 0..ncell {
            count[k + 1] += count[k];
        }
        let start = count.clone();
        let mut fill = count;
        let mut ids = vec![0u32; cells.len()];
        for (id, &c) in cells.iter().enumerate() {
            ids[fill[c] as usize] = id as u32;
            fill[c] += 1;
        }
        Self { dims, start, ids }
    }

    fn cell_raw(dims: &[usize], x: &[f64], w: &Window) -> Vec<usize> {
        (0..dims.len())
            .map(|a| ((x[a] - w.lo[a] as f64).floor().max(0.0) as usize).min(dims[a] - 1))
            .collect()
    }

    fn cell_of(&self, x: &[f64], w: &Window) -> Vec<usize> {
        Self::cell_raw(&self.dims, x, w)
    }

    fn bucket(&self, cell: &[usize]) -> &[u32] {
        let k = flat(cell, &self.dims);
        &self.ids[self.start[k] as usize..self.start[k + 1] as usize]
    }

    /// Visits the cells at Chebyshev distance exactly `ring` from `home`.
    fn for_ring(&self, home: &[usize], ring: usize, mut f: impl FnMut(&[usize])) {
        let d = self.dims.len();
        let r = ring as i64;
        let lo = vec![-r; d];
        let hi = vec![r; d];
        let mut off = lo.clone();
        let mut cell = vec![0usize; d];
        loop {
            if off.iter().any(|o| o.abs() == r) {
                let mut ok = true;
                for a in 0..d {
                    let c = home[a] as i64 + off[a];
                    if c < 0 || c >= self.dims[a] as i64 {
                        ok = false;
                        break;
                    }
                    cell[a] = c as usize;
                }
                if ok {
                    f(&cell);
                }
            }
            if !advance(&mut off, &lo, &hi) {
                break;
            }
        }
    }
}

fn check_dim(d: usize) -> Result<()> {
    if !(1..=3).contains(&d) {
        return invalid(format!("dimension {d} outside 1..=3"));
    }
    Ok(())
}

fn lattice_points(d: usize, spacing: f64, side: i64) -> Vec<f64> {
    let n = (side as f64 / spacing + 1e-9).floor() as i64;
    let lo = vec![0i64; d];
    let hi = vec![n; d];
    let mut k = lo.clone();
    let mut out = Vec::with_capacity(((n + 1) as usize).pow(d as u32) * d);
    loop {
        out.extend(k.iter().map(|&v| v as f64 * spacing));
        if !advance(&mut k, &lo, &hi) {
            break;
        }
    }
    out
}

/// Letters of the Fibonacci word after `n` substitutions from `a`; `true` is `a`.
pub fn fibonacci_word(n: u32) -> Vec<bool> {
    let mut w = vec![true];
    for _ in 0..n {
        let mut next = Vec::with_capacity(w.len() * 2);
        for &a in &w {
            if a {
                next.push(true);
                next.push(false);
            } else {
                next.push(true);
            }
        }
        w = next;
    }
    w
}

fn from_density(f: &DyadicField) -> Result<PointSet> {
    let d = f.dim();
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for a in 0..d {
        let (o, e) = (f.origin()[a], f.origin()[a] + f.extent()[a]);
        if (o - o.round()).abs() > 1e-12 || (e - e.round()).abs() > 1e-12 {
            return invalid("field window must have integer corners");
        }
        lo.push(o.round() as i64);
        hi.push(e.round() as i64);
    }
    let cell = f.cell_size();
    let vol: f64 = cell.iter().product();
    let mut coords = Vec::new();
    for (flat_idx, &v) in f.values().iter().enumerate() {
        let idx = f.unflatten(flat_idx);
        let k = (v * vol).round() as usize;
        if k == 0 {
            continue;
        }
        let mut q = 1usize;
        while q.pow(d as u32) < k {
            q += 1;
        }
        let zero = vec![0i64; d];
        let top = vec![q as i64 - 1; d];
        let mut sub = zero.clone();
        for _ in 0..k {
            for a in 0..d {
                let base = f.origin()[a] + idx[a] as f64 * cell[a];
                coords.push(base + (sub[a] as f64 + 0.5) * cell[a] / q as f64);
            }
            advance(&mut sub, &zero, &top);
        }
    }
    PointSet::new(d, coords, Window { lo, hi })
}

fn prefix_counts(d: usize, coords: &[f64], w: &Window) -> Vec<u64> {
    let dims: Vec<usize> = (0..d).map(|a| w.extent(a) as usize + 1).collect();
    let mut p = vec![0u64; dims.iter().product()];
    for x in coords.chunks(d) {
        let mut idx = Vec::with_capacity(d);
        let mut inside = true;
        for a in 0..d {
            let c = (x[a] - w.lo[a] as f64).floor() as i64;
            if c < 0 || c >= w.extent(a) {
                inside = false;
                break;
            }
            idx.push(c as usize + 1);
        }
        if inside {
            p[flat(&idx, &dims)] += 1;
        }
    }
    for a in 0..d {
        let stride: usize = dims[a + 1..].iter().product();
        for k in 0..p.len() {
            if (k / stride) % dims[a] != 0 {
                p[k] += p[k - stride];
            }
        }
    }
    p
}

/// Sum over the half-open cell box `[lo, hi)` from inclusive prefix sums.
fn box_sum(p: &[u64], dims: &[usize], lo: &[usize], hi: &[usize]) -> u64 {
    let d = dims.len();
    let mut total: i64 = 0;
    for mask in 0..(1usize << d) {
        let mut idx = Vec::with_capacity(d);
        let mut sign = 1i64;
        for a in 0..d {
            if mask >> a & 1 == 1 {
                idx.push(lo[a]);
                sign = -sign;
            } else {
                idx.push(hi[a]);
            }
        }
        total += sign * p[flat(&idx, dims)] as i64;
    }
    total as u64
}

pub(crate) fn flat(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// Odometer over `lo..=hi`, last axis fastest. Returns false after the last tuple.
pub(crate) fn advance(k: &mut [i64], lo: &[i64], hi: &[i64]) -> bool {
    for a in (0..k.len()).rev() {
        if k[a] < hi[a] {
            k[a] += 1;
            return true;
        }
        k[a] = lo[a];
    }
    false
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => 4.0 / 3.0 * std::f64::consts::PI,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2(side: i64) -> PointSet {
        PointSet::generate(Generator::Lattice { d: 2, spacing: 1.0, side }).unwrap()
    }

    #[test]
    fn lattice_constants() {
        let x = z2(8);
        assert_eq!(x.len(), 81);
        assert!((x.packing() - 1.0).abs() < 1e-12);
        assert!((x.covering() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn perturbed_packing_bound() {
        let x = PointSet::generate(Generator::Perturbed { d: 2, spacing: 1.0, side: 16, amplitude: 0.3, seed: 7 })
            .unwrap();
        assert!(x.packing() >= 0.4 - 1e-12);
        assert!(PointSet::generate(Generator::Perturbed { d: 2, spacing: 1.0, side: 4, amplitude: 0.5, seed: 7 })
            .is_err());
    }

    #[test]
    fn lattice_deviation_examples() {
        let x = z2(8);
        assert_eq!(x.deviation(1.0, &IntegerCube::new(vec![2, 3], 4)).unwrap(), 1.0);
        assert_eq!(x.deviation(2.0, &IntegerCube::new(vec![0, 0], 2)).unwrap(), 2.0);
        let p = x.deviation_profile(1.0, &IntegerCube::new(vec![0, 0], 8), 3).unwrap();
        assert!(p.entries.iter().all(|e| e.1 == 1.0));
    }

    #[test]
    fn empty_cube_is_an_error() {
        let x = PointSet::new(1, vec![0.5, 3.5], Window { lo: vec![0], hi: vec![4] }).unwrap();
        assert!(matches!(x.deviation(1.0, &IntegerCube::new(vec![1], 1)), Err(Error::EmptyCube { .. })));
    }

    #[test]
    fn fit_inverse_linear_examples() {
        let mk = |f: &dyn Fn(u32) -> f64| DeviationProfile {
            rho: 1.0,
            entries: (0..20).map(|i| (i, f(i))).collect(),
            window: IntegerCube::new(vec![0], 1 << 19),
        };
        assert_eq!(mk(&|_| 1.0).fit_inverse_linear(), 0.0);
        // E(2^{i-1}) = 1 + 1/(1+i) means E(2^j) = 1 + 1/(j+2).
        let k = mk(&|j| 1.0 + 1.0 / (f64::from(j) + 2.0)).fit_inverse_linear();
        assert!((k - 1.0).abs() < 1e-12);
        let g = mk(&|j| 1.0 + 0.5f64.powi(j as i32 + 1)).fit_inverse_linear();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_repetitivity() {
        let x = z2(32);
        let r = x.repetitivity_radius(3.0, &IntegerCube::new(vec![0, 0], 32), 1e-6).unwrap();
        assert!(r <= 3.0 + 2f64.sqrt());
    }

    #[test]
    fn generic_perturbation_is_not_repetitive() {
        let x = PointSet::generate(Generator::Perturbed { d: 2, spacing: 1.0, side: 16, amplitude: 0.3, seed: 3 })
            .unwrap();
        let r = x.repetitivity_radius(2.0, &IntegerCube::new(vec![0, 0], 16), 1e-6);
        assert_eq!(r, Err(Error::NotFound));
    }

    #[test]
    fn text_round_trip() {
        let x = z2(4);
        let y = PointSet::from_text(&x.to_text()).unwrap();
        assert_eq!(y.len(), x.len());
        assert_eq!(y.window(), x.window());
    }
}
