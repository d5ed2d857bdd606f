//! Dyadic transport maps.
//!
//! For a density `f` on a root cube, the stage at a parent cube `P` of level
//! `k` is a product of `d` box maps. Step `p` splits across axis `p` every
//! block obtained from `P` by halving the axes after `p`, with the ratio
//! measured by the mass of `f`. The Jacobian of the stage on a child `c` is
//! then `2^d·mass(c)/mass(P)` and the stage fixes `∂P`.
//!
//! The composed map applies the finest stage first. Its image of a dyadic
//! cube `C` has volume `∫_C f / ⨍ f`.

mod box1d;
mod box2d;
mod clip;

pub use box1d::{box_map_1d, Interval1DMap};
pub use box2d::{
    box_map_2d, box_map_2d_on, distance_to_identity, signed_area, singular_values, split_alpha, Affine, BoxMapCheck,
    TriangulatedMap2D, P2,
};
pub use clip::{clip_to_triangle, polygon_area};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{unflatten_dims, DyadicCube, DyadicField};
use crate::error::{invalid, Error, Result};
use crate::moduli::Modulus;
use crate::pointset::flat;
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact1D,
    Exact2D,
    /// Ratios only; no pointwise evaluation.
    VolumeOnly,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact1d" => Ok(Mode::Exact1D),
            "exact2d" => Ok(Mode::Exact2D),
            "volume" => Ok(Mode::VolumeOnly),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact1D => "exact1d",
            Mode::Exact2D => "exact2d",
            Mode::VolumeOnly => "volume",
        })
    }
}

/// The three box maps of a planar stage: bottom and top strips split across
/// the first axis, then the whole cube across the second.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanarStage {
    pub lower: TriangulatedMap2D,
    pub upper: TriangulatedMap2D,
    pub whole: TriangulatedMap2D,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "maps", rename_all = "snake_case")]
enum StageMaps {
    Line(Vec<Interval1DMap>),
    Plane(Vec<PlanarStage>),
    Ratios,
}

/// All parent cubes of one level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Stage {
    pub level: u32,
    /// Per parent (row-major at `level`), the split ratios in application
    /// order: step `p` lists its `2^{d−1−p}` blocks.
    pub alphas: Vec<Vec<f64>>,
    maps: StageMaps,
}

/// `u_m` for a density on a root cube.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComposedMap {
    mode: Mode,
    d: usize,
    origin: Vec<f64>,
    side: f64,
    depth: u32,
    field: DyadicField,
    mean: f64,
    /// `stages[k]` acts on parents of level `k`.
    stages: Vec<Stage>,
    scale: f64,
}

/// Worst pushforward error over dyadic cubes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PushforwardReport {
    pub cubes: usize,
    pub max_error: f64,
    pub worst: Option<(u32, Vec<usize>)>,
}

/// Per-stage Lipschitz bounds of a composed map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageGrad {
    pub level: u32,
    /// `k` such that the children of this stage have side `2^k` cells of the
    /// finest depth `m` grid, i.e. side `2^{k}` in unit cells for unit-cell fields.
    pub child_exponent: u32,
    pub forward: f64,
    pub inverse: f64,
    pub max_alpha_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradProfile {
    pub stages: Vec<StageGrad>,
    pub forward_product: f64,
    pub inverse_product: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalModulus {
    pub forward: f64,
    pub inverse: f64,
    pub pairs: usize,
    pub seed: u64,
}

/// Measured `C_η` of the planar box maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CEtaCalibration {
    pub c_eta: f64,
    /// Largest `|α − 1/2|` on the grid.
    pub max_deviation: f64,
    pub worst_alpha: f64,
    pub grid: usize,
}

impl ComposedMap {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn field(&self) -> &DyadicField {
        &self.field
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Multiplies the output by `rho` about the window origin.
    pub fn rescaled(mut self, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return invalid("rescaling factor must be positive");
        }
        self.scale = rho;
        Ok(self)
    }

    fn parent_index(&self, level: u32, x: &[f64]) -> Vec<usize> {
        let n = 1usize << level;
        let s = self.side / n as f64;
        (0..self.d)
            .map(|a| (((x[a] - self.origin[a]) / s).floor().max(0.0) as usize).min(n - 1))
            .collect()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return invalid("point dimension mismatch");
        }
        let slack = tol::EXACT * self.side;
        for a in 0..self.d {
            if !(x[a] >= self.origin[a] - slack && x[a] <= self.origin[a] + self.side + slack) {
                return Err(Error::OutOfWindow(x.to_vec()));
            }
        }
        Ok(())
    }

    fn stage_apply(&self, k: usize, y: &mut [f64], inverse: bool) -> Result<()> {
        let st = &self.stages[k];
        let idx = self.parent_index(st.level, y);
        let n = 1usize << st.level;
        let flat_idx = flat(&idx, &vec![n; self.d]);
        match &st.maps {
            StageMaps::Line(maps) => {
                let m = &maps[flat_idx];
                y[0] = if inverse { m.eval_inv(y[0])? } else { m.eval(y[0])? };
            }
            StageMaps::Plane(maps) => {
                let ps = &maps[flat_idx];
                let mid = ps.whole.rect()[1] + 0.5 * (ps.whole.rect()[3] - ps.whole.rect()[1]);
                let mut p = [y[0], y[1]];
                if inverse {
                    p = ps.whole.apply_inv(p)?;
                    let strip = if p[1] < mid { &ps.lower } else { &ps.upper };
                    p = strip.apply_inv(p)?;
                } else {
                    let strip = if p[1] < mid { &ps.lower } else { &ps.upper };
                    p = strip.apply(p)?;
                    p = ps.whole.apply(p)?;
                }
                y[0] = p[0];
                y[1] = p[1];
            }
            StageMaps::Ratios => return invalid("pointwise evaluation needs an exact mode"),
        }
        Ok(())
    }

    /// `u_m(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        if self.mode == Mode::VolumeOnly {
            return invalid("pointwise evaluation needs an exact mode");
        }
        let mut y = x.to_vec();
        for k in (0..self.stages.len()).rev() {
            self.stage_apply(k, &mut y, false)?;
        }
        for a in 0..self.d {
            y[a] = self.origin[a] + self.scale * (y[a] - self.origin[a]);
        }
        Ok(y)
    }

    /// `u_m^{-1}(y)`.
    pub fn eval_inv(&self, y: &[f64]) -> Result<Vec<f64>> {
        if self.mode == Mode::VolumeOnly {
            return invalid("pointwise evaluation needs an exact mode");
        }
        let mut x: Vec<f64> = (0..self.d).map(|a| self.origin[a] + (y[a] - self.origin[a]) / self.scale).collect();
        self.check_point(&x)?;
        for k in 0..self.stages.len() {
            self.stage_apply(k, &mut x, true)?;
        }
        Ok(x)
    }

    /// `∫_C f / ⨍ f`, read from the field.
    pub fn normalized_mass(&self, c: &DyadicCube) -> Result<f64> {
        let (lo, hi) = self.field.cube_box(c)?;
        Ok(self.field.mass_box(&lo, &hi) / self.mean * self.scale.powi(self.d as i32))
    }

    fn cube_corner(&self, c: &DyadicCube) -> (Vec<f64>, f64) {
        let s = self.side / (1u64 << c.level) as f64;
        ((0..self.d).map(|a| self.origin[a] + c.index[a] as f64 * s).collect(), s)
    }

    /// `Vol(u_m(C))`, computed without consulting the masses in exact modes.
    ///
    /// Stages at levels `≥ level(C)` map `C` onto itself and are skipped.
    pub fn image_volume(&self, c: &DyadicCube) -> Result<f64> {
        if c.level > self.depth || c.index.len() != self.d || c.index.iter().any(|&i| i >= 1usize << c.level) {
            return invalid("cube not resolvable at the map depth");
        }
        let (corner, s) = self.cube_corner(c);
        let vol = match self.mode {
            Mode::Exact1D => {
                let a = self.eval(&[corner[0]])?[0];
                let b = self.eval(&[corner[0] + s])?[0];
                return Ok(b - a);
            }
            Mode::VolumeOnly => {
                let mut v = s.powi(self.d as i32);
                for k in 0..c.level {
                    let parent: Vec<usize> = c.index.iter().map(|i| i >> (c.level - k)).collect();
                    let bits: Vec<usize> = c.index.iter().map(|i| (i >> (c.level - k - 1)) & 1).collect();
                    let n = 1usize << k;
                    let alphas = &self.stages[k as usize].alphas[flat(&parent, &vec![n; self.d])];
                    v *= stage_jacobian(self.d, alphas, &bits);
                }
                v
            }
            Mode::Exact2D => {
                let (x0, y0) = (corner[0], corner[1]);
                let mut pieces: Vec<Vec<P2>> = vec![vec![[x0, y0], [x0 + s, y0], [x0 + s, y0 + s], [x0, y0 + s]]];
                for k in (0..c.level as usize).rev() {
                    let parent: Vec<usize> = c.index.iter().map(|i| i >> (c.level as usize - k)).collect();
                    let n = 1usize << k;
                    let StageMaps::Plane(maps) = &self.stages[k].maps else { unreachable!("planar stages") };
                    let ps = &maps[flat(&parent, &[n, n])];
                    pieces = push_pieces(&pieces, &[&ps.lower, &ps.upper]);
                    pieces = push_pieces(&pieces, &[&ps.whole]);
                }
                pieces.iter().map(|p| polygon_area(p)).sum()
            }
        };
        Ok(vol * self.scale.powi(self.d as i32))
    }

    /// `max |image_volume − normalized_mass|` over every dyadic cube of
    /// level at most `max_level`.
    pub fn pushforward_check(&self, max_level: u32) -> Result<PushforwardReport> {
        let mut rep = PushforwardReport { cubes: 0, max_error: 0.0, worst: None };
        for level in 0..=max_level.min(self.depth) {
            let dims = vec![1usize << level; self.d];
            for k in 0..dims.iter().product() {
                let c = DyadicCube { level, index: unflatten_dims(k, &dims) };
                let err = (self.image_volume(&c)? - self.normalized_mass(&c)?).abs();
                rep.cubes += 1;
                if err > rep.max_error || rep.worst.is_none() {
                    rep.max_error = rep.max_error.max(err);
                    rep.worst = Some((level, c.index.clone()));
                }
            }
        }
        Ok(rep)
    }

    /// Per-stage maxima of `σ_max` of the forward and inverse pieces.
    pub fn grad_profile(&self) -> Result<GradProfile> {
        let mut stages = Vec::with_capacity(self.stages.len());
        for st in &self.stages {
            let (fwd, inv) = match &st.maps {
                StageMaps::Line(maps) => maps.iter().fold((1.0f64, 1.0f64), |acc, m| {
                    let sl = m.slopes();
                    let hi = sl.iter().copied().fold(0.0, f64::max);
                    let lo = sl.iter().copied().fold(f64::INFINITY, f64::min);
                    (acc.0.max(hi), acc.1.max(1.0 / lo))
                }),
                StageMaps::Plane(maps) => maps.iter().fold((1.0f64, 1.0f64), |acc, ps| {
                    let (lf, li) = ps.lower.max_stretch();
                    let (uf, ui) = ps.upper.max_stretch();
                    let (wf, wi) = ps.whole.max_stretch();
                    (acc.0.max(lf.max(uf) * wf), acc.1.max(li.max(ui) * wi))
                }),
                StageMaps::Ratios => return invalid("gradient profile needs an exact mode"),
            };
            let dev = st.alphas.iter().flatten().map(|a| (a - 0.5).abs()).fold(0.0, f64::max);
            stages.push(StageGrad {
                level: st.level,
                child_exponent: self.depth - st.level - 1,
                forward: fwd,
                inverse: inv,
                max_alpha_deviation: dev,
            });
        }
        let forward_product = stages.iter().map(|s| s.forward).product();
        let inverse_product = stages.iter().map(|s| s.inverse).product();
        Ok(GradProfile { stages, forward_product, inverse_product })
    }

    /// `Ĉ = max ‖u(x) − u(y)‖ / (L·ω(‖x − y‖/L))` over sampled pairs, `L`
    /// the window side, for `u` and for `u^{-1}`. Half the pairs are close
    /// pairs at random dyadic scales.
    pub fn empirical_modulus(&self, omega: &Modulus, n_pairs: usize, seed: u64) -> Result<EmpiricalModulus> {
        if n_pairs == 0 {
            return invalid("need at least one pair");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = self.side;
        let mut fwd: f64 = 0.0;
        let mut inv: f64 = 0.0;
        let mut done = 0;
        while done < n_pairs {
            let x: Vec<f64> = (0..self.d).map(|a| self.origin[a] + rng.gen::<f64>() * l).collect();
            let y: Vec<f64> = if done % 2 == 0 {
                (0..self.d).map(|a| self.origin[a] + rng.gen::<f64>() * l).collect()
            } else {
                let scale = l * 0.5f64.powi(rng.gen_range(0..(self.depth as i32 + 8)));
                (0..self.d)
                    .map(|a| (x[a] + scale * rng.gen_range(-1.0..1.0)).clamp(self.origin[a], self.origin[a] + l))
                    .collect()
            };
            let dist = crate::pointset::dist(&x, &y);
            if dist == 0.0 {
                continue;
            }
            let denom = l * omega.eval_ext(dist / l)?;
            let (ux, uy) = (self.eval(&x)?, self.eval(&y)?);
            fwd = fwd.max(crate::pointset::dist(&ux, &uy) / denom);
            let (vx, vy) = (self.eval_inv(&x)?, self.eval_inv(&y)?);
            inv = inv.max(crate::pointset::dist(&vx, &vy) / denom);
            done += 1;
        }
        Ok(EmpiricalModulus { forward: fwd, inverse: inv, pairs: n_pairs, seed })
    }

    /// `max ‖eval_inv(eval(x)) − x‖` over `n` seeded uniform points.
    pub fn round_trip_error(&self, n: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let x: Vec<f64> = (0..self.d).map(|a| self.origin[a] + rng.gen::<f64>() * self.side).collect();
            let back = self.eval_inv(&self.eval(&x)?)?;
            worst = worst.max(crate::pointset::dist(&x, &back));
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            schema: &'static str,
            #[serde(flatten)]
            map: &'a ComposedMap,
        }
        serde_json::to_string(&Dump { schema: "rectify.composed_map/1", map: self }).expect("map serializes")
    }

    /// Deformed image of the level-`grid_level` grid, planar maps only.
    pub fn to_svg(&self, grid_level: u32, samples: usize) -> Result<String> {
        if self.mode != Mode::Exact2D {
            return invalid("SVG output needs an exact planar map");
        }
        let px = 512.0;
        let n = 1usize << grid_level;
        let samples = samples.max(2);
        let to_px = |p: &[f64]| {
            (
                (p[0] - self.origin[0]) / (self.side * self.scale) * px,
                px - (p[1] - self.origin[1]) / (self.side * self.scale) * px,
            )
        };
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-4 -4 {w} {w}\" width=\"{w}\" height=\"{w}\">\n\
             <metadata>stages={} depth={} grid_level={grid_level}</metadata>\n",
            self.stages.len(),
            self.depth,
            w = px + 8.0
        );
        for axis in 0..2 {
            for i in 0..=n {
                let c = self.origin[axis] + self.side * i as f64 / n as f64;
                let mut pts = Vec::with_capacity(samples + 1);
                for j in 0..=samples {
                    let t = self.origin[1 - axis] + self.side * j as f64 / samples as f64;
                    let p = if axis == 0 { [c, t] } else { [t, c] };
                    let q = self.eval(&p)?;
                    let (a, b) = to_px(&q);
                    pts.push(format!("{a:.3},{b:.3}"));
                }
                s.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.6\" points=\"{}\"/>\n",
                    pts.join(" ")
                ));
            }
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn push_pieces(pieces: &[Vec<P2>], maps: &[&TriangulatedMap2D]) -> Vec<Vec<P2>> {
    let mut out = Vec::new();
    for piece in pieces {
        for map in maps {
            for k in 0..map.len() {
                let tri = map.source_triangle(k);
                if !clip::boxes_overlap(piece, &tri) {
                    continue;
                }
                let cut = clip_to_triangle(piece, &tri);
                if cut.len() < 3 || polygon_area(&cut) <= 0.0 {
                    continue;
                }
                let a = map.piece(k);
                out.push(cut.into_iter().map(|p| a.apply(p)).collect());
            }
        }
    }
    out
}

/// `∏_p 2α` or `2(1 − α)` along the blocks containing the child with the
/// given per-axis bits.
fn stage_jacobian(d: usize, alphas: &[f64], bits: &[usize]) -> f64 {
    let mut j = 1.0;
    let mut offset = 0;
    for p in 0..d {
        let blocks = 1usize << (d - 1 - p);
        let block: usize = (p + 1..d).fold(0, |acc, q| acc * 2 + bits[q]);
        let a = alphas[offset + block];
        j *= if bits[p] == 0 { 2.0 * a } else { 2.0 * (1.0 - a) };
        offset += blocks;
    }
    j
}

/// Split ratios of the stage at parent `index` of `level`, in application order.
pub fn stage_ratios(f: &DyadicField, level: u32, index: &[usize]) -> Result<Vec<f64>> {
    let d = f.dim();
    let (lo, hi) = f.cube_box(&DyadicCube { level, index: index.to_vec() })?;
    if hi[0] - lo[0] < 2 {
        return invalid("stage needs the field resolved one level below the parent");
    }
    let mut out = Vec::new();
    for p in 0..d {
        for block in 0..1usize << (d - 1 - p) {
            let mut blo = lo.clone();
            let mut bhi = hi.clone();
            // Block bits for axes p+1..d, most significant first.
            for (rank, q) in (p + 1..d).enumerate() {
                let bit = (block >> (d - 2 - p - rank)) & 1;
                let half = (hi[q] - lo[q]) / 2;
                if bit == 0 {
                    bhi[q] = lo[q] + half;
                } else {
                    blo[q] = lo[q] + half;
                }
            }
            out.push(f.split_ratios(&blo, &bhi, p)?.0);
        }
    }
    Ok(out)
}

/// Builds `u_m` for `f` at depth `m`.
pub fn compose(f: &DyadicField, m: u32, mode: Mode) -> Result<ComposedMap> {
    if !f.is_root_cube() {
        return invalid("transport needs a field on a single root cube");
    }
    if m > f.depth() {
        return invalid(format!("depth {m} exceeds the field depth {}", f.depth()));
    }
    let d = f.dim();
    match (mode, d) {
        (Mode::Exact1D, 1) | (Mode::Exact2D, 2) | (Mode::VolumeOnly, _) => {}
        _ => return invalid(format!("mode {mode} does not apply in dimension {d}")),
    }
    let fm = f.average(m)?;
    let side = fm.extent()[0];
    let origin = fm.origin().to_vec();
    let mut stages = Vec::with_capacity(m as usize);
    for level in 0..m {
        let n = 1usize << level;
        let dims = vec![n; d];
        let s = side / n as f64;
        let count = n.pow(d as u32);
        let mut alphas = Vec::with_capacity(count);
        let mut line = Vec::new();
        let mut plane = Vec::new();
        for k in 0..count {
            let idx = unflatten_dims(k, &dims);
            let a = stage_ratios(&fm, level, &idx)?;
            let corner: Vec<f64> = (0..d).map(|q| origin[q] + idx[q] as f64 * s).collect();
            match mode {
                Mode::Exact1D => {
                    line.push(box_map_1d(&[a[0], 1.0 - a[0]])?.conjugate(corner[0], corner[0] + s)?);
                }
                Mode::Exact2D => {
                    let (x0, y0) = (corner[0], corner[1]);
                    let (x1, y1, ym) = (x0 + s, y0 + s, y0 + s / 2.0);
                    plane.push(PlanarStage {
                        lower: box_map_2d_on(a[0], 0, [x0, y0, x1, ym])?,
                        upper: box_map_2d_on(a[1], 0, [x0, ym, x1, y1])?,
                        whole: box_map_2d_on(a[2], 1, [x0, y0, x1, y1])?,
                    });
                }
                Mode::VolumeOnly => {}
            }
            alphas.push(a);
        }
        let maps = match mode {
            Mode::Exact1D => StageMaps::Line(line),
            Mode::Exact2D => StageMaps::Plane(plane),
            Mode::VolumeOnly => StageMaps::Ratios,
        };
        stages.push(Stage { level, alphas, maps });
    }
    let mean = fm.mean();
    Ok(ComposedMap { mode, d, origin, side, depth: m, field: fm, mean, stages, scale: 1.0 })
}

/// Largest `max(‖∇Φ − I‖₂, ‖∇Φ⁻¹ − I‖₂)/|α − 1/2|` over `n_grid` ratios
/// on each side of `1/2`, for the square and for the 2:1 strip split along
/// its long side.
pub fn calibrate_c_eta(max_deviation: f64, n_grid: usize) -> Result<CEtaCalibration> {
    if !(max_deviation > 0.0 && max_deviation < 0.5) || n_grid == 0 {
        return invalid("calibration range must lie in (0, 1/2) with a positive grid");
    }
    let mut best = CEtaCalibration { c_eta: 0.0, max_deviation, worst_alpha: 0.5, grid: n_grid };
    for j in 1..=n_grid {
        let dev = max_deviation * j as f64 / n_grid as f64;
        for alpha in [0.5 - dev, 0.5 + dev] {
            for (axis, rect) in [(1, [0.0, 0.0, 1.0, 1.0]), (0, [0.0, 0.0, 1.0, 0.5])] {
                let f = box_map_2d_on(alpha, axis, rect)?;
                let (a, b) = f.max_deviation_from_identity();
                let r = a.max(b) / dev;
                if r > best.c_eta {
                    best.c_eta = r;
                    best.worst_alpha = alpha;
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_field(depth: u32, seed: u64) -> DyadicField {
        DyadicField::random(2, depth, 1.0, 2.0, seed).unwrap()
    }

    #[test]
    fn constant_density_gives_identity() {
        let f = DyadicField::constant(2, 3.0, 3).unwrap();
        let u = compose(&f, 3, Mode::Exact2D).unwrap();
        for p in [[0.1, 0.7], [0.5, 0.5], [0.99, 0.01]] {
            let q = u.eval(&p).unwrap();
            assert!((q[0] - p[0]).abs() < 1e-14 && (q[1] - p[1]).abs() < 1e-14);
        }
        let g = u.grad_profile().unwrap();
        assert!((g.forward_product - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_example() {
        let f = DyadicField::new(vec![0.0], vec![1.0], vec![1], 1, vec![1.0, 3.0]).unwrap();
        let u = compose(&f, 1, Mode::Exact1D).unwrap();
        assert_eq!(u.eval(&[0.5]).unwrap(), vec![0.25]);
        let c = DyadicCube { level: 1, index: vec![0] };
        assert_eq!(u.image_volume(&c).unwrap(), 0.25);
    }

    #[test]
    fn planar_pushforward_and_round_trip() {
        let f = random_field(3, 11);
        let u = compose(&f, 3, Mode::Exact2D).unwrap();
        let rep = u.pushforward_check(3).unwrap();
        assert!(rep.max_error < 1e-12, "{rep:?}");
        assert!(u.round_trip_error(500, 1).unwrap() < 1e-12);
        for p in [[0.0, 0.0], [1.0, 0.3], [0.25, 1.0]] {
            let q = u.eval(&p).unwrap();
            assert!((q[0] - p[0]).abs() <= tol::EXACT && (q[1] - p[1]).abs() <= tol::EXACT);
        }
    }

    #[test]
    fn volume_only_ledger_agrees() {
        let f = random_field(3, 5);
        let exact = compose(&f, 3, Mode::Exact2D).unwrap();
        let ledger = compose(&f, 3, Mode::VolumeOnly).unwrap();
        let c = DyadicCube { level: 2, index: vec![1, 3] };
        assert!((exact.image_volume(&c).unwrap() - ledger.image_volume(&c).unwrap()).abs() < 1e-12);
        assert!(ledger.eval(&[0.5, 0.5]).is_err());
        let g = DyadicField::random(3, 2, 1.0, 2.0, 9).unwrap();
        let v = compose(&g, 2, Mode::VolumeOnly).unwrap();
        assert!(v.pushforward_check(2).unwrap().max_error < 1e-12);
    }

    #[test]
    fn checkerboard_pair_ratio() {
        let f = DyadicField::new(vec![0.0; 2], vec![1.0; 2], vec![1, 1], 1, vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        let a = stage_ratios(&f, 0, &[0, 0]).unwrap();
        assert_eq!(a[0], 0.25);
        assert_eq!(a[1], 0.25);
    }

    #[test]
    fn c_eta_bounds_stretch() {
        let cal = calibrate_c_eta(0.2, 40).unwrap();
        let f = box_map_2d(0.62, 1).unwrap();
        assert!(f.max_stretch().0 <= 1.0 + cal.c_eta * 0.12 + 1e-12);
    }
}
