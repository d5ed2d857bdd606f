//! Convex polygon clipping against triangles.

use super::box2d::{signed_area, P2};

/// Shoelace area, positive for counter-clockwise polygons.
pub fn polygon_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

/// Intersection of a convex polygon with a positively oriented triangle.
pub fn clip_to_triangle(poly: &[P2], tri: &[P2; 3]) -> Vec<P2> {
    let mut out = poly.to_vec();
    for e in 0..3 {
        if out.is_empty() {
            break;
        }
        let (a, b) = (tri[e], tri[(e + 1) % 3]);
        let input = std::mem::take(&mut out);
        let n = input.len();
        for k in 0..n {
            let p = input[k];
            let q = input[(k + 1) % n];
            let sp = signed_area(a, b, p);
            let sq = signed_area(a, b, q);
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    out
}

/// Axis-aligned bounding boxes overlap.
pub fn boxes_overlap(poly: &[P2], tri: &[P2; 3]) -> bool {
    let bb = |pts: &mut dyn Iterator<Item = P2>| {
        pts.fold([f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY], |b, p| {
            [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])]
        })
    };
    let a = bb(&mut poly.iter().copied());
    let b = bb(&mut tri.iter().copied());
    a[0] < b[2] && b[0] < a[2] && a[1] < b[3] && b[1] < a[3]
}
