//! Bijections between a Delone window and the integer lattice.
//!
//! Edges join a point `x` to lattice points `z` of the window widened by a
//! halo. The halo absorbs the boundary mismatch between `|X ∩ W|` and
//! `|Z^d ∩ W|`; only the `X` side is required to be saturated.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use rectify::pointset::{PointSet, Window};
use rectify::transport::ComposedMap;
use rectify::{Error, Result};

pub const MATCHING_SCHEMA: &str = "rectify.matching/1";

/// Injective assignment `x_k ↦ z_k` over the points of `X` in the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub schema: String,
    pub d: usize,
    /// `(x, z)` with `x` a point of `X` and `z` a lattice point.
    pub pairs: Vec<(Vec<f64>, Vec<i64>)>,
    /// `max ‖x − z‖`.
    pub radius: f64,
    pub window: Window,
    pub halo: i64,
}

/// A set `S` of points whose lattice neighbourhood is smaller than `S`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeficiencyWitness {
    pub radius: f64,
    pub points: Vec<Vec<f64>>,
    pub neighbours: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum HallOutcome {
    Perfect(Matching),
    Deficient(DeficiencyWitness),
}

impl Matching {
    /// CSV rows `x1,…,xd,z1,…,zd`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let head: Vec<String> = (1..=self.d).map(|a| format!("x{a}")).chain((1..=self.d).map(|a| format!("z{a}"))).collect();
        s.push_str(&head.join(","));
        s.push('\n');
        for (x, z) in &self.pairs {
            let row: Vec<String> = x.iter().map(|v| format!("{v:?}")).chain(z.iter().map(|v| v.to_string())).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// Reads the CSV written by [`Self::to_csv`]; the window is the integer
    /// hull of both endpoint sets.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let head = lines.next().ok_or_else(|| Error::Parse("empty matching file".into()))?;
        let cols = head.split(',').count();
        if cols == 0 || cols % 2 != 0 {
            return Err(Error::Parse("header must list x1..xd,z1..zd".into()));
        }
        let d = cols / 2;
        let mut pairs = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != cols {
                return Err(Error::Parse(format!("row {line:?} has {} fields, expected {cols}", f.len())));
            }
            let x = f[..d]
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad coordinate {v:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let z = f[d..]
                .iter()
                .map(|v| v.parse::<i64>().map_err(|_| Error::Parse(format!("bad lattice coordinate {v:?}"))))
                .collect::<Result<Vec<_>>>()?;
            pairs.push((x, z));
        }
        if pairs.is_empty() {
            return Err(Error::Parse("matching has no rows".into()));
        }
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for (x, z) in &pairs {
            for a in 0..d {
                lo[a] = lo[a].min(x[a].floor() as i64).min(z[a]);
                hi[a] = hi[a].max(x[a].ceil() as i64).max(z[a]);
            }
        }
        let radius = pairs.iter().map(|(x, z)| dist_xz(x, z)).fold(0.0, f64::max);
        Ok(Self { schema: MATCHING_SCHEMA.into(), d, pairs, radius, window: Window { lo, hi }, halo: 0 })
    }

    /// No lattice point is used twice.
    pub fn is_injective(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.pairs.iter().all(|(_, z)| seen.insert(z.clone()))
    }
}

pub(crate) fn dist_xz(x: &[f64], z: &[i64]) -> f64 {
    x.iter().zip(z).map(|(a, &b)| (a - b as f64).powi(2)).sum::<f64>().sqrt()
}

/// Points of `X` in the closed window `w`.
fn points_in(x: &PointSet, w: &Window) -> Vec<Vec<f64>> {
    x.points()
        .filter(|p| (0..w.dim()).all(|a| p[a] >= w.lo[a] as f64 && p[a] <= w.hi[a] as f64))
        .map(<[f64]>::to_vec)
        .collect()
}

/// Bipartite graph with left vertices `0..n_left` and dense right ids.
struct Graph {
    adj: Vec<Vec<usize>>,
    n_right: usize,
}

const NIL: usize = usize::MAX;

/// Hopcroft–Karp from an optional partial matching.
fn hopcroft_karp(g: &Graph, mut ml: Vec<usize>, mut mr: Vec<usize>) -> (Vec<usize>, Vec<usize>) {
    let n = g.adj.len();
    let mut dist = vec![0usize; n];
    loop {
        // Layered BFS from free left vertices.
        let mut q = VecDeque::new();
        for u in 0..n {
            if ml[u] == NIL {
                dist[u] = 0;
                q.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = q.pop_front() {
            for &v in &g.adj[u] {
                let w = mr[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        if !found {
            return (ml, mr);
        }
        // Iterative DFS along the layers.
        let mut it = vec![0usize; n];
        for root in 0..n {
            if ml[root] != NIL {
                continue;
            }
            let mut stack = vec![root];
            while let Some(&u) = stack.last() {
                if it[u] == g.adj[u].len() {
                    dist[u] = usize::MAX;
                    stack.pop();
                    continue;
                }
                let v = g.adj[u][it[u]];
                it[u] += 1;
                let w = mr[v];
                if w == NIL {
                    // Flip the path root → … → u → v.
                    let mut v = v;
                    while let Some(u) = stack.pop() {
                        let prev = ml[u];
                        ml[u] = v;
                        mr[v] = u;
                        v = prev;
                    }
                    break;
                } else if dist[w] == dist[u] + 1 {
                    stack.push(w);
                }
            }
        }
    }
}

/// Left vertices reachable from free ones by alternating paths.
fn alternating_reach(g: &Graph, ml: &[usize], mr: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = g.adj.len();
    let mut seen_l = vec![false; n];
    let mut seen_r = vec![false; g.n_right];
    let mut q: VecDeque<usize> = (0..n).filter(|&u| ml[u] == NIL).collect();
    for &u in &q {
        seen_l[u] = true;
    }
    while let Some(u) = q.pop_front() {
        for &v in &g.adj[u] {
            if !seen_r[v] {
                seen_r[v] = true;
                let w = mr[v];
                if w != NIL && !seen_l[w] {
                    seen_l[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    let s = (0..n).filter(|&u| seen_l[u]).collect();
    let nb = (0..g.n_right).filter(|&v| seen_r[v]).collect();
    (s, nb)
}

/// Lattice points of `w` widened by `halo` within distance `r` of `x`.
fn lattice_near(x: &[f64], r: f64, w: &Window, halo: i64, mut f: impl FnMut(Vec<i64>, f64)) {
    let d = x.len();
    let lo: Vec<i64> = (0..d).map(|a| ((x[a] - r).ceil() as i64).max(w.lo[a] - halo)).collect();
    let hi: Vec<i64> = (0..d).map(|a| ((x[a] + r).floor() as i64).min(w.hi[a] + halo)).collect();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return;
    }
    let mut z = lo.clone();
    loop {
        let dd = dist_xz(x, &z);
        if dd <= r {
            f(z.clone(), dd);
        }
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            if z[a] < hi[a] {
                z[a] += 1;
                break;
            }
            z[a] = lo[a];
        }
    }
}

struct Instance {
    pts: Vec<Vec<f64>>,
    right: Vec<Vec<i64>>,
    graph: Graph,
}

fn build(pts: Vec<Vec<f64>>, r: f64, w: &Window, halo: i64) -> Instance {
    let mut ids: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut right = Vec::new();
    let mut adj = Vec::with_capacity(pts.len());
    for p in &pts {
        let mut row = Vec::new();
        lattice_near(p, r, w, halo, |z, _| {
            let id = *ids.entry(z.clone()).or_insert_with(|| {
                right.push(z);
                right.len() - 1
            });
            row.push(id);
        });
        adj.push(row);
    }
    let n_right = right.len();
    Instance { pts, right, graph: Graph { adj, n_right } }
}

fn finish(inst: &Instance, ml: &[usize], mr: &[usize], w: &Window, halo: i64, r: f64) -> HallOutcome {
    if ml.iter().all(|&v| v != NIL) {
        let pairs: Vec<(Vec<f64>, Vec<i64>)> = inst.pts.iter().zip(ml).map(|(p, &v)| (p.clone(), inst.right[v].clone())).collect();
        let radius = pairs.iter().map(|(x, z)| dist_xz(x, z)).fold(0.0, f64::max);
        HallOutcome::Perfect(Matching {
            schema: MATCHING_SCHEMA.into(),
            d: w.dim(),
            pairs,
            radius,
            window: w.clone(),
            halo,
        })
    } else {
        let (s, nb) = alternating_reach(&inst.graph, ml, mr);
        HallOutcome::Deficient(DeficiencyWitness {
            radius: r,
            points: s.iter().map(|&u| inst.pts[u].clone()).collect(),
            neighbours: nb.iter().map(|&v| inst.right[v].clone()).collect(),
        })
    }
}

fn check_window(x: &PointSet, w: &Window) -> Result<()> {
    if w.dim() != x.dim() || (0..w.dim()).any(|a| w.lo[a] >= w.hi[a]) {
        return Err(Error::InvalidParam("window must match the point dimension and be non-empty".into()));
    }
    Ok(())
}

/// Default halo `⌈ϑ⌉ + 1`.
pub fn default_halo(x: &PointSet) -> i64 {
    x.covering().ceil() as i64 + 1
}

/// Maximum matching with edges `‖x − z‖ ≤ r`.
pub fn hall_match(x: &PointSet, w: &Window, r: f64, halo: i64) -> Result<HallOutcome> {
    check_window(x, w)?;
    if !(r >= 0.0 && r.is_finite()) || halo < 0 {
        return Err(Error::InvalidParam("radius and halo must be non-negative".into()));
    }
    let inst = build(points_in(x, w), r, w, halo);
    let n = inst.pts.len();
    let (ml, mr) = hopcroft_karp(&inst.graph, vec![NIL; n], vec![NIL; inst.graph.n_right]);
    Ok(finish(&inst, &ml, &mr, w, halo, r))
}

/// Smallest candidate distance admitting a perfect matching.
///
/// Candidates are the distinct point-to-lattice distances up to a cap that
/// doubles until feasible, so the answer is exact for the finite instance.
pub fn min_radius(x: &PointSet, w: &Window, halo: i64) -> Result<(f64, Matching)> {
    check_window(x, w)?;
    let pts = points_in(x, w);
    if pts.is_empty() {
        return Err(Error::InvalidParam("window contains no point".into()));
    }
    let diam = (0..w.dim()).map(|a| ((w.hi[a] - w.lo[a] + 2 * halo) as f64).powi(2)).sum::<f64>().sqrt();
    let mut cap = x.covering() + 1.0 + (w.dim() as f64).sqrt();
    loop {
        let mut cand = Vec::new();
        for p in &pts {
            lattice_near(p, cap, w, halo, |_, dd| cand.push(dd));
        }
        cand.sort_by(f64::total_cmp);
        cand.dedup();
        let top = *cand.last().ok_or_else(|| Error::Infeasible("no lattice point in reach".into()))?;
        if let HallOutcome::Perfect(top_match) = hall_match(x, w, top, halo)? {
            // Feasible at `hi`, infeasible below `lo`.
            let (mut lo, mut hi) = (0usize, cand.len() - 1);
            let mut best = top_match;
            while lo < hi {
                let mid = (lo + hi) / 2;
                match hall_match(x, w, cand[mid], halo)? {
                    HallOutcome::Perfect(m) => {
                        hi = mid;
                        best = m;
                    }
                    HallOutcome::Deficient(_) => lo = mid + 1,
                }
            }
            // Minimality: the next smaller candidate must fail.
            if hi > 0 {
                if let HallOutcome::Perfect(_) = hall_match(x, w, cand[hi - 1], halo)? {
                    return Err(Error::Infeasible("feasibility is not monotone in the radius".into()));
                }
            }
            return Ok((cand[hi], best));
        }
        if cap >= diam {
            return Err(Error::Infeasible(format!("no perfect matching even at radius {top}")));
        }
        cap = (2.0 * cap).min(diam);
    }
}

/// Matching guided by a transport map: each point proposes the lattice
/// point nearest to its image, and edges run to lattice points within `2√d`
/// of the proposal. Among those edges the largest matched distance is
/// minimised by bisection. Falls back to [`min_radius`] when no perfect
/// matching exists in the guided graph; the flag reports it.
pub fn transport_match(x: &PointSet, u: &ComposedMap, halo: i64) -> Result<(Matching, bool)> {
    let d = x.dim();
    if u.dim() != d {
        return Err(Error::InvalidParam("map dimension differs from the point set".into()));
    }
    let w = x.window().clone();
    let pts = points_in(x, &w);
    let reach = 2.0 * (d as f64).sqrt();
    let mut ids: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut right: Vec<Vec<i64>> = Vec::new();
    // Per point: (lattice id, ‖x − z‖), and the proposal id.
    let mut edges: Vec<Vec<(usize, f64)>> = Vec::with_capacity(pts.len());
    let mut proposal = Vec::with_capacity(pts.len());
    for p in &pts {
        let y = u.eval(p)?;
        let z0: Vec<f64> = y.iter().map(|v| v.round()).collect();
        let mut row = Vec::new();
        let mut first = NIL;
        lattice_near(&z0, reach, &w, halo, |z, dd| {
            let xz = dist_xz(p, &z);
            let id = *ids.entry(z.clone()).or_insert_with(|| {
                right.push(z);
                right.len() - 1
            });
            if dd == 0.0 {
                first = id;
            }
            row.push((id, xz));
        });
        proposal.push(first);
        edges.push(row);
    }
    let n_right = right.len();
    let solve = |cap: f64| {
        let adj: Vec<Vec<usize>> = edges.iter().map(|row| row.iter().filter(|e| e.1 <= cap).map(|e| e.0).collect()).collect();
        let g = Graph { adj, n_right };
        let mut ml = vec![NIL; pts.len()];
        let mut mr = vec![NIL; n_right];
        for (k, &v) in proposal.iter().enumerate() {
            if v != NIL && mr[v] == NIL && g.adj[k].contains(&v) {
                ml[k] = v;
                mr[v] = k;
            }
        }
        let (ml, mr) = hopcroft_karp(&g, ml, mr);
        (g, ml, mr)
    };
    let mut cand: Vec<f64> = edges.iter().flatten().map(|e| e.1).collect();
    cand.sort_by(f64::total_cmp);
    cand.dedup();
    let Some(&top) = cand.last() else {
        return Ok((min_radius(x, &w, halo)?.1, true));
    };
    let (g, ml, mr) = solve(top);
    if ml.iter().any(|&v| v == NIL) {
        return Ok((min_radius(x, &w, halo)?.1, true));
    }
    let mut best = (g, ml, mr);
    let (mut lo, mut hi) = (0usize, cand.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let trial = solve(cand[mid]);
        if trial.1.iter().all(|&v| v != NIL) {
            hi = mid;
            best = trial;
        } else {
            lo = mid + 1;
        }
    }
    let (graph, ml, mr) = best;
    let inst = Instance { pts, right, graph };
    match finish(&inst, &ml, &mr, &w, halo, cand[hi]) {
        HallOutcome::Perfect(m) => Ok((m, false)),
        HallOutcome::Deficient(_) => unreachable!("bisection keeps a perfect matching"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rectify::pointset::Generator;

    fn lattice(side: i64) -> PointSet {
        PointSet::generate(Generator::Lattice { d: 2, spacing: 1.0, side }).unwrap()
    }

    #[test]
    fn identity_on_the_lattice() {
        let x = lattice(6);
        let w = x.window().clone();
        match hall_match(&x, &w, 0.0, 1).unwrap() {
            HallOutcome::Perfect(m) => {
                assert_eq!(m.radius, 0.0);
                assert!(m.pairs.iter().all(|(p, z)| p[0] == z[0] as f64 && p[1] == z[1] as f64));
            }
            HallOutcome::Deficient(_) => panic!("lattice must match itself"),
        }
    }

    #[test]
    fn shifted_lattice_has_a_witness() {
        let coords: Vec<f64> = (0..6).flat_map(|i| (0..6).flat_map(move |j| [i as f64 + 0.5, j as f64])).collect();
        let x = PointSet::new(2, coords, Window { lo: vec![0, 0], hi: vec![6, 6] }).unwrap();
        match hall_match(&x, x.window(), 0.4, 1).unwrap() {
            HallOutcome::Deficient(wit) => assert!(wit.neighbours.len() < wit.points.len()),
            HallOutcome::Perfect(_) => panic!("no lattice point lies within 0.4"),
        }
        let (r, m) = min_radius(&x, x.window(), 1).unwrap();
        assert_eq!(r, 0.5);
        assert!(m.is_injective());
    }

    #[test]
    fn witness_violates_hall_on_a_crowded_cell() {
        // Five points crammed around one lattice site with a tiny radius.
        let coords = vec![2.0, 2.0, 2.1, 2.0, 1.9, 2.0, 2.0, 2.1, 2.0, 1.9];
        let x = PointSet::new(2, coords, Window { lo: vec![0, 0], hi: vec![4, 4] }).unwrap();
        match hall_match(&x, x.window(), 0.5, 0).unwrap() {
            HallOutcome::Deficient(wit) => {
                assert_eq!(wit.points.len(), 5);
                assert_eq!(wit.neighbours, vec![vec![2, 2]]);
            }
            HallOutcome::Perfect(_) => panic!("one site cannot serve five points"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let x = lattice(3);
        let HallOutcome::Perfect(m) = hall_match(&x, x.window(), 0.0, 0).unwrap() else { panic!() };
        let back = Matching::from_csv(&m.to_csv()).unwrap();
        assert_eq!(back.pairs, m.pairs);
    }
}
