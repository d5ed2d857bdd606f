//! Piecewise-affine box maps of rectangles with two prescribed Jacobians.
//!
//! In the unit square split across the second axis, the interface
//! `y = 1/2` is bent into the polyline through `(s, α)` and
//! `(1/2, (α − s)/(1 − 2s))` with `s = min(α, 1 − α)/2`, mirrored in
//! `x = 1/2`. Each quarter of the square is fanned from one interior point,
//! ten triangles per half, and every triangle below the interface scales
//! area by `2α`, every triangle above by `2(1 − α)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tol;

pub type P2 = [f64; 2];

/// `y = M·x + t` with `M` row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub m: [[f64; 2]; 2],
    pub t: P2,
}

impl Affine {
    /// Unique affine map sending `src[k]` to `dst[k]`.
    fn through(src: [P2; 3], dst: [P2; 3]) -> Self {
        let (a, b, c) = (src[0], src[1], src[2]);
        let (aa, bb, cc) = (dst[0], dst[1], dst[2]);
        let s = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let d = [[bb[0] - aa[0], cc[0] - aa[0]], [bb[1] - aa[1], cc[1] - aa[1]]];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
        let m = mul(d, inv);
        let t = [aa[0] - m[0][0] * a[0] - m[0][1] * a[1], aa[1] - m[1][0] * a[0] - m[1][1] * a[1]];
        Self { m, t }
    }

    pub fn apply(&self, p: P2) -> P2 {
        [
            self.m[0][0] * p[0] + self.m[0][1] * p[1] + self.t[0],
            self.m[1][0] * p[0] + self.m[1][1] * p[1] + self.t[1],
        ]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Largest and smallest singular values of a 2×2 matrix.
pub fn singular_values(m: [[f64; 2]; 2]) -> (f64, f64) {
    let fro = m.iter().flatten().map(|v| v * v).sum::<f64>();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
    let hi = ((fro + disc) / 2.0).sqrt();
    let lo = if hi > 0.0 { det / hi } else { 0.0 };
    (hi, lo)
}

/// `‖M − I‖₂`.
pub fn distance_to_identity(m: [[f64; 2]; 2]) -> f64 {
    singular_values([[m[0][0] - 1.0, m[0][1]], [m[1][0], m[1][1] - 1.0]]).0
}

pub fn signed_area(a: P2, b: P2, c: P2) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Triangulated self-map of a rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangulatedMap2D {
    /// `[x0, y0, x1, y1]`.
    rect: [f64; 4],
    src: Vec<P2>,
    dst: Vec<P2>,
    /// Positively oriented in the source.
    triangles: Vec<[usize; 3]>,
    /// `true` for triangles in the first half.
    in_a: Vec<bool>,
    #[serde(skip)]
    fwd: Vec<Affine>,
    #[serde(skip)]
    inv: Vec<Affine>,
    alpha: f64,
    axis: usize,
}

/// Exactness report of one box map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxMapCheck {
    pub max_det_error: f64,
    pub max_boundary_error: f64,
    pub min_image_area: f64,
    /// `|Σ image areas − block area|`.
    pub area_defect: f64,
}

impl BoxMapCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_det_error <= tol && self.max_boundary_error <= tol && self.min_image_area > 0.0 && self.area_defect <= tol
    }
}

impl TriangulatedMap2D {
    fn assemble(rect: [f64; 4], src: Vec<P2>, dst: Vec<P2>, mut triangles: Vec<[usize; 3]>, in_a: Vec<bool>, alpha: f64, axis: usize) -> Result<Self> {
        for t in triangles.iter_mut() {
            if signed_area(src[t[0]], src[t[1]], src[t[2]]) < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut fwd = Vec::with_capacity(triangles.len());
        let mut inv = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let s = [src[t[0]], src[t[1]], src[t[2]]];
            let d = [dst[t[0]], dst[t[1]], dst[t[2]]];
            if !(signed_area(d[0], d[1], d[2]) > 0.0) {
                return Err(Error::DegenerateFan { alpha });
            }
            fwd.push(Affine::through(s, d));
            inv.push(Affine::through(d, s));
        }
        Ok(Self { rect, src, dst, triangles, in_a, fwd, inv, alpha, axis })
    }

    /// Rebuilds the affine pieces after deserialization.
    pub fn rebuild(self) -> Result<Self> {
        Self::assemble(self.rect, self.src, self.dst, self.triangles, self.in_a, self.alpha, self.axis)
    }

    pub fn rect(&self) -> [f64; 4] {
        self.rect
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn source_triangle(&self, k: usize) -> [P2; 3] {
        let t = self.triangles[k];
        [self.src[t[0]], self.src[t[1]], self.src[t[2]]]
    }

    pub fn image_triangle(&self, k: usize) -> [P2; 3] {
        let t = self.triangles[k];
        [self.dst[t[0]], self.dst[t[1]], self.dst[t[2]]]
    }

    pub fn piece(&self, k: usize) -> &Affine {
        &self.fwd[k]
    }

    pub fn inverse_piece(&self, k: usize) -> &Affine {
        &self.inv[k]
    }

    pub fn in_first_half(&self, k: usize) -> bool {
        self.in_a[k]
    }

    fn locate(&self, p: P2, image: bool) -> Result<usize> {
        let verts = if image { &self.dst } else { &self.src };
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (k, t) in self.triangles.iter().enumerate() {
            let (a, b, c) = (verts[t[0]], verts[t[1]], verts[t[2]]);
            let area = signed_area(a, b, c);
            let w = signed_area(p, b, c).min(signed_area(a, p, c)).min(signed_area(a, b, p)) / area;
            if w >= 0.0 {
                return Ok(k);
            }
            if w > best.0 {
                best = (w, k);
            }
        }
        if best.0 > -1e-9 {
            Ok(best.1)
        } else {
            Err(Error::OutOfWindow(p.to_vec()))
        }
    }

    pub fn apply(&self, p: P2) -> Result<P2> {
        Ok(self.fwd[self.locate(p, false)?].apply(p))
    }

    pub fn apply_inv(&self, p: P2) -> Result<P2> {
        Ok(self.inv[self.locate(p, true)?].apply(p))
    }

    /// Largest `σ_max` of the forward and of the inverse pieces.
    pub fn max_stretch(&self) -> (f64, f64) {
        self.fwd.iter().fold((0.0f64, 0.0f64), |acc, a| {
            let (hi, lo) = singular_values(a.m);
            (acc.0.max(hi), acc.1.max(1.0 / lo))
        })
    }

    /// Largest `‖∇Φ − I‖₂` and `‖∇Φ⁻¹ − I‖₂` over the pieces.
    pub fn max_deviation_from_identity(&self) -> (f64, f64) {
        self.fwd.iter().zip(&self.inv).fold((0.0f64, 0.0f64), |acc, (f, g)| {
            (acc.0.max(distance_to_identity(f.m)), acc.1.max(distance_to_identity(g.m)))
        })
    }

    /// Determinants, boundary identity, orientation and area balance.
    pub fn check(&self) -> BoxMapCheck {
        let [x0, y0, x1, y1] = self.rect;
        let mut det_err: f64 = 0.0;
        for (k, a) in self.fwd.iter().enumerate() {
            let want = if self.in_a[k] { 2.0 * self.alpha } else { 2.0 * (1.0 - self.alpha) };
            det_err = det_err.max((a.det() - want).abs());
        }
        let on_boundary = |p: P2| p[0] == x0 || p[0] == x1 || p[1] == y0 || p[1] == y1;
        let mut bnd: f64 = 0.0;
        for (k, t) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let (i, j) = (t[e], t[(e + 1) % 3]);
                let (p, q) = (self.src[i], self.src[j]);
                let same_side = (p[0] == q[0] && (p[0] == x0 || p[0] == x1)) || (p[1] == q[1] && (p[1] == y0 || p[1] == y1));
                if same_side {
                    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
                        let z = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
                        let w = self.fwd[k].apply(z);
                        bnd = bnd.max((w[0] - z[0]).abs().max((w[1] - z[1]).abs()));
                    }
                }
            }
        }
        for (p, q) in self.src.iter().zip(&self.dst) {
            if on_boundary(*p) {
                bnd = bnd.max((p[0] - q[0]).abs().max((p[1] - q[1]).abs()));
            }
        }
        let areas: Vec<f64> = (0..self.len()).map(|k| {
            let [a, b, c] = self.image_triangle(k);
            signed_area(a, b, c)
        }).collect();
        let min_area = areas.iter().copied().fold(f64::INFINITY, f64::min);
        let total: f64 = areas.iter().sum();
        let block = (x1 - x0) * (y1 - y0);
        BoxMapCheck { max_det_error: det_err, max_boundary_error: bnd, min_image_area: min_area, area_defect: (total - block).abs() / block }
    }
}

/// Box map of `rect` split across `axis` into halves `A` (lower) and `B`
/// with `det = 2α` on `A` and `2(1 − α)` on `B`.
pub fn box_map_2d_on(alpha: f64, axis: usize, rect: [f64; 4]) -> Result<TriangulatedMap2D> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::SplitRequired { alpha });
    }
    if axis > 1 {
        return invalid(format!("axis {axis} is not 0 or 1"));
    }
    let [x0, y0, x1, y1] = rect;
    if !(x1 > x0 && y1 > y0) {
        return invalid("rectangle must have positive extent");
    }
    let (src, dst, tris, in_a) = canonical(alpha);
    let place = |p: P2| {
        let (u, v) = if axis == 1 { (p[0], p[1]) } else { (p[1], p[0]) };
        [x0 + u * (x1 - x0), y0 + v * (y1 - y0)]
    };
    let mut src: Vec<P2> = src.into_iter().map(place).collect();
    let mut dst: Vec<P2> = dst.into_iter().map(place).collect();
    // Canonical boundary coordinates are exact; keep them exact after scaling.
    for p in src.iter_mut().chain(dst.iter_mut()) {
        for (c, (lo, hi)) in p.iter_mut().zip([(x0, x1), (y0, y1)]) {
            if (*c - lo).abs() <= tol::EXACT * (hi - lo) {
                *c = lo;
            } else if (*c - hi).abs() <= tol::EXACT * (hi - lo) {
                *c = hi;
            }
        }
    }
    TriangulatedMap2D::assemble(rect, src, dst, tris, in_a, alpha, axis)
}

/// Box map of the unit square.
pub fn box_map_2d(alpha: f64, axis: usize) -> Result<TriangulatedMap2D> {
    box_map_2d_on(alpha, axis, [0.0, 0.0, 1.0, 1.0])
}

type Canonical = (Vec<P2>, Vec<P2>, Vec<[usize; 3]>, Vec<bool>);

/// Unit square, interface `y = 1/2`, `A` below.
fn canonical(alpha: f64) -> Canonical {
    let s = alpha.min(1.0 - alpha) / 2.0;
    let left_src: [P2; 9] = [
        [0.0, 0.0],                               // b0
        [0.5, 0.0],                               // b1
        [0.5, 0.5],                               // m
        [s, 0.5],                                 // p
        [0.0, 0.5],                               // P0
        [0.0, 1.0],                               // c
        [0.5, 1.0],                               // t
        [s / (2.0 * alpha), 0.25],                // q
        [s / (2.0 * (1.0 - alpha)), 0.75],        // qb
    ];
    let left_dst: [P2; 9] = [
        [0.0, 0.0],
        [0.5, 0.0],
        [0.5, (alpha - s) / (1.0 - 2.0 * s)],
        [s, alpha],
        [0.0, 0.5],
        [0.0, 1.0],
        [0.5, 1.0],
        [s, alpha / 2.0],
        [s, (1.0 + alpha) / 2.0],
    ];
    const B0: usize = 0;
    const B1: usize = 1;
    const M: usize = 2;
    const P: usize = 3;
    const P0: usize = 4;
    const C: usize = 5;
    const T: usize = 6;
    const Q: usize = 7;
    const QB: usize = 8;
    let left_a = [[Q, B0, B1], [Q, B1, M], [Q, M, P], [Q, P, P0], [Q, P0, B0]];
    let left_b = [[QB, P0, P], [QB, P, M], [QB, M, T], [QB, T, C], [QB, C, P0]];

    let mut src: Vec<P2> = left_src.to_vec();
    let mut dst: Vec<P2> = left_dst.to_vec();
    // Right half: mirror image, sharing the vertices on x = 1/2.
    let mut mirror = [0usize; 9];
    for k in 0..9 {
        if left_src[k][0] == 0.5 {
            mirror[k] = k;
        } else {
            mirror[k] = src.len();
            src.push([1.0 - left_src[k][0], left_src[k][1]]);
            dst.push([1.0 - left_dst[k][0], left_dst[k][1]]);
        }
    }
    let mut tris = Vec::with_capacity(20);
    let mut in_a = Vec::with_capacity(20);
    for (group, is_a) in [(&left_a, true), (&left_b, false)] {
        for t in group.iter() {
            tris.push(*t);
            in_a.push(is_a);
            tris.push([mirror[t[0]], mirror[t[2]], mirror[t[1]]]);
            in_a.push(is_a);
        }
    }
    (src, dst, tris, in_a)
}

/// Factors `α` into ratios within a quarter of `1/2` whose doubled values
/// multiply to `2α`. Arithmetic only: composing box maps does not multiply
/// region-wise Jacobians, so stage assembly never uses this.
pub fn split_alpha(alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("ratio {alpha} outside (0, 1)"));
    }
    let mut k = 1u32;
    loop {
        let a = (2.0 * alpha).powf(1.0 / f64::from(k)) / 2.0;
        if (a - 0.5).abs() < 0.25 {
            return Ok(vec![a; k as usize]);
        }
        k += 1;
    }
}
