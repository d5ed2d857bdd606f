//! Constant chains, series criteria and inequality checks.
//!
//! Every certificate records the constants it derived, the partial sums it
//! evaluated and a SHA-256 hash of its canonicalised inputs. Certificates are
//! window-relative: the deviation profile only covers cubes inside a finite
//! window, and the behaviour beyond it is supplied by a [`TailModel`].
//!
//! ```
//! use rectify::certify::{grad_bound, alpha_bounds};
//!
//! assert_eq!(alpha_bounds(2.0)?, (0.125, 2.0));
//! let g = grad_bound(&[1.1], 2, 1.0, 1, 1)?;
//! assert!((g - 1.4204).abs() < 1e-4);
//! # Ok::<(), rectify::Error>(())
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::density::{OscillationBound, Phi};
use crate::error::{invalid, Error, Result};
use crate::moduli::{Family, Modulus, Status};
use crate::pointset::DeviationProfile;
use crate::tol;

pub const SCHEMA: &str = "rectify.certificate/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Diverges,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Diverges => "diverges",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Behaviour of `E(2^i) − 1` past the last window index `J`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    /// `E(2^i) − 1 ≤ K̂/(i+2)`, the gate itself.
    InverseLinear,
    /// `E(2^i) − 1 ≤ (E(2^J) − 1)·ratio^{i−J}`, `ratio ∈ (0,1)`.
    Geometric { ratio: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyParams {
    /// Series exponent, `0 < α ≤ 1`.
    pub alpha_exp: f64,
    /// Box-map constant, measured rather than assumed.
    pub c_eta: f64,
    /// Base scale index; `None` selects the smallest admissible one.
    pub i0: Option<u32>,
    /// Gate constant; `None` accepts the fitted `K̂`.
    pub k_max: Option<f64>,
    pub tail: TailModel,
}

impl CertifyParams {
    /// Defaults with `α = min(1, 1/(2d²))`.
    pub fn for_dim(d: u32, c_eta: f64) -> Self {
        let df = f64::from(d.max(1));
        Self { alpha_exp: (1.0 / (2.0 * df * df)).min(1.0), c_eta, i0: None, k_max: None, tail: TailModel::InverseLinear }
    }

    fn check(&self) -> Result<()> {
        if !(self.alpha_exp > 0.0 && self.alpha_exp <= 1.0) {
            return invalid(format!("series exponent must lie in (0,1], got {}", self.alpha_exp));
        }
        if !(self.c_eta > 0.0 && self.c_eta.is_finite()) {
            return invalid(format!("C_eta must be positive, got {}", self.c_eta));
        }
        if self.i0 == Some(0) {
            return invalid("i0 starts at 1");
        }
        if let TailModel::Geometric { ratio } = self.tail {
            if !(ratio > 0.0 && ratio < 1.0) {
                return invalid(format!("geometric tail ratio must lie in (0,1), got {ratio}"));
            }
        }
        Ok(())
    }
}

/// Where a hypothesis gate failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateFailure {
    pub index: usize,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: String,
    pub kind: String,
    pub verdict: Verdict,
    /// `(i, Σ_{k≤i} term_k)`.
    pub partial_sums: Vec<(u32, f64)>,
    pub tail_bound: Option<f64>,
    pub constants: BTreeMap<String, f64>,
    pub gate: Option<GateFailure>,
    pub notes: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub inputs_hash: String,
}

impl Certificate {
    fn new(kind: &str, inputs: &serde_json::Value) -> Self {
        let mut tolerances = BTreeMap::new();
        tolerances.insert("exact".into(), tol::EXACT);
        tolerances.insert("pushforward".into(), tol::PUSHFORWARD);
        tolerances.insert("t_floor".into(), tol::T_FLOOR);
        Self {
            schema: SCHEMA.into(),
            kind: kind.into(),
            verdict: Verdict::Inconclusive,
            partial_sums: Vec::new(),
            tail_bound: None,
            constants: BTreeMap::new(),
            gate: None,
            notes: Vec::new(),
            tolerances,
            inputs_hash: hash_inputs(inputs),
        }
    }

    fn set(&mut self, name: &str, v: f64) {
        self.constants.insert(name.into(), v);
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }

    /// Final partial sum, zero when no term was evaluated.
    pub fn sum(&self) -> f64 {
        self.partial_sums.last().map_or(0.0, |p| p.1)
    }

    /// The gate failure as an error, for callers that treat it as fatal.
    pub fn check_gate(&self) -> Result<()> {
        match &self.gate {
            Some(g) => Err(Error::GateFailed { index: g.index, detail: g.detail.clone() }),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialises")
    }

    pub fn partial_sums_csv(&self) -> String {
        let mut s = String::from("i,partial_sum\n");
        for (i, v) in &self.partial_sums {
            s.push_str(&format!("{i},{v:.17e}\n"));
        }
        s
    }
}

fn hash_inputs(v: &serde_json::Value) -> String {
    // serde_json maps are ordered, so this serialisation is canonical.
    let bytes = serde_json::to_vec(v).expect("json value serialises");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn check_e(e: f64) -> Result<()> {
    if !(e >= 1.0 && e.is_finite()) {
        return invalid(format!("deviation must be finite and at least one, got {e}"));
    }
    Ok(())
}

/// `[1/(2E²), E²/2]`.
pub fn alpha_bounds(e: f64) -> Result<(f64, f64)> {
    check_e(e)?;
    Ok((0.5 / (e * e), e * e / 2.0))
}

/// `[1/(1+E²), E²/(1+E²)]`, the range of a ratio of two cube masses whose
/// densities deviate from a common mean by at most `E`.
pub fn alpha_bounds_sharp(e: f64) -> Result<(f64, f64)> {
    check_e(e)?;
    let e2 = e * e;
    Ok((1.0 / (1.0 + e2), e2 / (1.0 + e2)))
}

/// `∏_{i=i0}^{m} (1 + (C_η/2)(E_{i−1}² − E_{i−1}^{−2}))^d` with
/// `es[j] = E(2^j)`.
pub fn grad_bound(es: &[f64], d: u32, c_eta: f64, i0: u32, m: u32) -> Result<f64> {
    if d == 0 || i0 == 0 {
        return invalid("dimension and i0 must be positive");
    }
    if !(c_eta > 0.0 && c_eta.is_finite()) {
        return invalid(format!("C_eta must be positive, got {c_eta}"));
    }
    if (m as usize) > es.len() {
        return invalid(format!("profile covers {} scales, stage {m} needs {m}", es.len()));
    }
    let mut g = 1.0;
    for i in i0..=m {
        let e = es[i as usize - 1];
        check_e(e)?;
        g *= stage_factor(e, c_eta).powi(d as i32);
    }
    Ok(g)
}

fn stage_factor(e: f64, c_eta: f64) -> f64 {
    1.0 + c_eta / 2.0 * (e * e - 1.0 / (e * e))
}

/// `max_{m' ≤ m} (m'/2) / Σ_{i≤m'} (1+i)^{α−1}`.
///
/// Every gated sequence of length at most `m` satisfies the product-to-sum
/// inequality with this constant. The ratio grows without bound in `m` when
/// `α < 1`, so the constant is horizon dependent.
pub fn c_alpha(alpha: f64, m: usize) -> f64 {
    let mut s = 0.0;
    let mut best: f64 = 0.0;
    for i in 1..=m {
        s += (1.0 + i as f64).powf(alpha - 1.0);
        best = best.max(i as f64 / 2.0 / s);
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedProduct {
    pub lhs: f64,
    /// `Σ (1+i)^α a_i`.
    pub rhs: f64,
    pub c_needed: f64,
}

/// Product against weighted sum for `0 < a_i ≤ 1/(i+1)`.
pub fn weighted_product_check(a: &[f64], alpha: f64) -> Result<WeightedProduct> {
    if a.is_empty() {
        return invalid("empty sequence");
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("series exponent must lie in (0,1], got {alpha}"));
    }
    let mut lhs = 1.0;
    let mut rhs = 0.0;
    for (k, &x) in a.iter().enumerate() {
        let i = k as f64 + 1.0;
        if !(x > 0.0 && x <= 1.0 / (i + 1.0) * (1.0 + tol::EXACT)) {
            return invalid(format!("a_{} = {x} violates 0 < a_i <= 1/(i+1)", k + 1));
        }
        lhs *= 1.0 + x;
        rhs += (1.0 + i).powf(alpha) * x;
    }
    Ok(WeightedProduct { lhs, rhs, c_needed: (lhs - 1.0) / rhs })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearProduct {
    /// `Σ a_k` over the whole list.
    pub l: f64,
    /// `2e^L/L`.
    pub c: f64,
    /// First `n` with `S_n ≥ L/2`, where the inequality is guaranteed.
    pub threshold: usize,
    /// First `n` where the inequality holds.
    pub first_holding: Option<usize>,
    /// Indices at or past the threshold where it fails.
    pub violations: Vec<usize>,
    /// `(lhs_n, C·S_n)` for every `n`.
    pub rows: Vec<(f64, f64)>,
}

/// `∏_{k≤n}(1+a_k) ≤ C Σ_{k≤n} a_k` for a finite positive sequence.
pub fn linear_product_check(a: &[f64]) -> Result<LinearProduct> {
    if a.is_empty() || a.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return invalid("need a non-empty positive sequence");
    }
    let l: f64 = a.iter().sum();
    let c = 2.0 * l.exp() / l;
    let mut rows = Vec::with_capacity(a.len());
    let (mut p, mut s) = (1.0, 0.0);
    let mut threshold = a.len();
    for (k, &x) in a.iter().enumerate() {
        p *= 1.0 + x;
        s += x;
        if threshold == a.len() && s >= l / 2.0 {
            threshold = k + 1;
        }
        rows.push((p, c * s));
    }
    let holds = |r: &(f64, f64)| r.0 <= r.1 * (1.0 + tol::EXACT);
    let first_holding = rows.iter().position(holds).map(|k| k + 1);
    let violations = rows
        .iter()
        .enumerate()
        .filter(|(k, r)| k + 1 >= threshold && !holds(r))
        .map(|(k, _)| k + 1)
        .collect();
    Ok(LinearProduct { l, c, threshold, first_holding, violations, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagariasParams {
    pub p: f64,
    pub d: u32,
    pub c1: f64,
    pub c5: f64,
    pub u2: f64,
}

impl Default for LagariasParams {
    fn default() -> Self {
        Self { p: 1.0, d: 1, c1: 0.5, c5: 3.0, u2: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lagarias {
    pub params: LagariasParams,
    /// `(k, U_k)` from `k = 2`.
    pub u: Vec<(u32, f64)>,
    /// `(j, m_j, B_j)`; `m_j = 1` when `U_2 > 2^j` and the product is empty.
    pub rows: Vec<(u32, u32, f64)>,
    /// `j` where `m_j − 1 = m_{j−1}` fails, past the first `j` with `m_j ≥ 2`.
    pub step_violations: Vec<u32>,
    pub step_holds: Vec<u32>,
}

impl Lagarias {
    pub fn b(&self) -> Vec<(u32, f64)> {
        self.rows.iter().map(|r| (r.0, r.2)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,m_j,B_j\n");
        for (j, m, b) in &self.rows {
            s.push_str(&format!("{j},{m},{b:.17e}\n"));
        }
        s
    }
}

/// Runs `U_{k+1} = C₅ U_k (log U_k)^p` and the block products up to `j_max`.
pub fn lagarias_sequence(params: LagariasParams, j_max: u32) -> Result<Lagarias> {
    let LagariasParams { p, d, c1, c5, u2 } = params;
    if !(p >= 0.0 && p.is_finite()) || d == 0 {
        return invalid("need p >= 0 and d >= 1");
    }
    if !(c1 > 0.0 && c1 < 1.0) || !(c5 > 2.0) || !(u2 > std::f64::consts::E) {
        return invalid("need 0 < c1 < 1, C5 > 2 and U2 > e");
    }
    if j_max == 0 || j_max > 1000 {
        return invalid("j_max must lie in 1..=1000");
    }
    let top = 2f64.powi(j_max as i32);
    let mut u = vec![(2u32, u2)];
    while u.last().expect("seeded").1 <= top {
        let (k, uk) = *u.last().expect("seeded");
        let next = c5 * uk * uk.ln().powf(p);
        if !(next > uk) {
            return invalid("recursion stopped increasing");
        }
        u.push((k + 1, next));
    }
    let pd = p * f64::from(d);
    let factors: Vec<f64> = u.iter().map(|&(_, uk)| 1.0 - c1 / uk.ln().powf(pd)).collect();
    let mut rows = Vec::with_capacity(j_max as usize);
    for j in 1..=j_max {
        let bound = 2f64.powi(j as i32);
        let count = u.iter().take_while(|x| x.1 <= bound).count() as u32;
        let m = count + 1;
        let b: f64 = factors[..count as usize].iter().product();
        rows.push((j, m, b));
    }
    let mut step_violations = Vec::new();
    let mut step_holds = Vec::new();
    if let Some(start) = rows.iter().position(|r| r.1 >= 2) {
        for w in rows[start..].windows(2) {
            if w[1].1 == w[0].1 + 1 {
                step_holds.push(w[1].0);
            } else {
                step_violations.push(w[1].0);
            }
        }
    }
    Ok(Lagarias { params, u, rows, step_violations, step_holds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// Regressor `−log(j−1)`.
    InverseLinear,
    /// Regressor `−(j−1)^{1−pd}/(1−pd)`.
    StretchedExponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares of `log B_j` against the model regressor.
pub fn decay_fit(b: &[(u32, f64)], p: f64, d: u32) -> Result<DecayFit> {
    if b.len() < 3 {
        return invalid("need at least three points");
    }
    if b.iter().any(|x| x.0 < 2 || !(x.1 > 0.0)) {
        return invalid("need j >= 2 and positive values");
    }
    let pd = p * f64::from(d);
    let model = if (pd - 1.0).abs() < 1e-12 { DecayModel::InverseLinear } else { DecayModel::StretchedExponential };
    let reg = |j: u32| {
        let t = f64::from(j - 1);
        match model {
            DecayModel::InverseLinear => -t.ln(),
            DecayModel::StretchedExponential => -t.powf(1.0 - pd) / (1.0 - pd),
        }
    };
    let xs: Vec<f64> = b.iter().map(|x| reg(x.0)).collect();
    let ys: Vec<f64> = b.iter().map(|x| x.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("degenerate regressor");
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit { model, slope, intercept: my - slope * mx, r2 })
}

/// Contiguous `E(2^s), …, E(2^{s+J})` from a profile, re-indexed from zero,
/// with the shift `s`. Deviations are scale free, so the shifted profile is
/// the profile of the set shrunk by `2^s` at density `2^{ds}ρ`.
fn profile_values(profile: &DeviationProfile) -> Result<(Vec<f64>, u32)> {
    let Some(&(shift, _)) = profile.entries.first() else {
        return invalid("empty deviation profile");
    };
    let mut es = Vec::with_capacity(profile.entries.len());
    for (k, &(i, e)) in profile.entries.iter().enumerate() {
        if i as usize != shift as usize + k {
            return invalid(format!("profile indices must be consecutive; found {i} at position {k}"));
        }
        check_e(e)?;
        es.push(e);
    }
    Ok((es, shift))
}

fn k_hat_of(es: &[f64]) -> f64 {
    es.iter().enumerate().map(|(i, &e)| (i as f64 + 2.0) * (e - 1.0)).fold(0.0, f64::max)
}

fn record_shift(cert: &mut Certificate, shift: u32) {
    if shift > 0 {
        cert.set("scale_shift", f64::from(shift));
        cert.notes.push(format!("profile starts at scale 2^{shift}; certified for the set shrunk by that factor"));
    }
}

/// Membership certificate: gate constant `K̂` plus summability of the
/// modulus series.
pub fn membership_certificate(profile: &DeviationProfile, omega: &Modulus, d: u32, i_max: u32) -> Result<Certificate> {
    let (es, shift) = profile_values(profile)?;
    let inputs = serde_json::json!({ "entries": profile.entries, "omega": omega, "d": d, "i_max": i_max });
    let mut cert = Certificate::new("membership", &inputs);
    record_shift(&mut cert, shift);
    let k_hat = k_hat_of(&es);
    cert.set("K_hat", k_hat);
    cert.set("E_max", es.iter().copied().fold(1.0, f64::max));
    let v = omega.md_membership(d, i_max);
    let mut s = 0.0;
    for i in omega.first_index()..=i_max.max(8) {
        if let Ok(x) = omega.md_term(d, i) {
            s += x;
            cert.partial_sums.push((i, s));
        }
    }
    cert.tail_bound = v.tail_bound;
    cert.set("md_partial_sum", v.partial_sum);
    cert.verdict = match v.status {
        Status::Converges => Verdict::Pass,
        Status::Diverges => Verdict::Diverges,
        Status::Inconclusive => Verdict::Inconclusive,
    };
    cert.notes.push("deviation profile is window-relative".into());
    Ok(cert)
}

/// Series criterion with its constant chain.
///
/// The certified modulus constant is `G·√d/ω(√d)`, where `G` is the full
/// stage product from [`grad_bound`]: a map with Lipschitz constant `G` on a
/// window of side `L` satisfies `|u(x) − u(y)| ≤ C·L·ω(|x−y|/L)` because
/// `ω(t)/t` is non-increasing. The constants of the displayed product-form
/// chain are recorded next to it for comparison.
pub fn weighted_series(profile: &DeviationProfile, omega: &Modulus, params: &CertifyParams, d: u32) -> Result<Certificate> {
    params.check()?;
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let (es, shift) = profile_values(profile)?;
    let inputs = serde_json::json!({ "entries": profile.entries, "omega": omega, "params": params, "d": d });
    let mut cert = Certificate::new("weighted_series", &inputs);
    record_shift(&mut cert, shift);
    let j_last = (es.len() - 1) as u32;
    let alpha = params.alpha_exp;
    let k_hat = k_hat_of(&es);
    cert.set("K_hat", k_hat);
    cert.set("alpha", alpha);
    cert.set("C_eta", params.c_eta);

    let mut s = 0.0;
    for i in 1..=j_last {
        let term = (1.0 + f64::from(i)).powf(alpha) * (es[i as usize] - 1.0) * omega.md_term_ext(d, i);
        s += term;
        cert.partial_sums.push((i, s));
    }

    // Tail past the window, under the chosen model.
    let (tail, status) = match params.tail {
        _ if k_hat == 0.0 && matches!(params.tail, TailModel::InverseLinear) => (Some(0.0), Status::Converges),
        TailModel::InverseLinear => {
            // (1+i)^α/(i+2) ≤ 1, so each tail term is at most K̂·md_term.
            let i_max = j_last.max(8);
            let v = omega.md_membership(d, i_max);
            // md_membership's tail starts after max(i_max, first_index − 1).
            let n = i_max.max(omega.first_index() - 1);
            let head: f64 = (j_last + 1..=n).map(|i| omega.md_term_ext(d, i)).sum();
            (v.tail_bound.map(|t| k_hat * (head + t)), v.status)
        }
        TailModel::Geometric { ratio } => {
            let e_last = es[j_last as usize] - 1.0;
            let md = omega.md_term_ext(d, j_last + 1);
            let jf = f64::from(j_last) + 1.0;
            let weight = jf * ratio / (1.0 - ratio) + ratio / (1.0 - ratio).powi(2);
            (Some(e_last * md * weight), Status::Converges)
        }
    };
    cert.tail_bound = tail;
    cert.set("series_partial_sum", s);
    if let Some(t) = tail {
        cert.set("series_tail_bound", t);
    }

    // Constant chain over the stages i = 1..=J, which use E(2^{i-1}).
    let c_eta = params.c_eta;
    let auto_i0 = {
        let mut i0 = j_last + 1;
        let mut sup: f64 = 0.0;
        for i in (1..=j_last).rev() {
            sup = sup.max((1.0 + f64::from(i)) * c_eta / 2.0 * (es[i as usize - 1] - 1.0));
            if sup <= 1.0 {
                i0 = i;
            } else {
                break;
            }
        }
        i0
    };
    let i0 = params.i0.unwrap_or(auto_i0);
    cert.set("i0", f64::from(i0));
    let b = es.iter().copied().fold(1.0, f64::max);
    cert.set("B", b);
    cert.set("comparison_4B", 4.0 * b);
    let g = grad_bound(&es, d, c_eta, 1, j_last)?;
    let c1 = if i0 >= 2 { grad_bound(&es, d, c_eta, 1, (i0 - 1).min(j_last))? } else { 1.0 };
    let c2 = c1 * c_eta / 2.0;
    let chain_sum: f64 = (i0..=j_last)
        .map(|i| (1.0 + f64::from(i)).powf(alpha) * (es[i as usize - 1] - 1.0))
        .fold(0.0, |s, t| s + t);
    let ca = c_alpha(alpha, j_last.max(1) as usize);
    cert.set("C1", c1);
    cert.set("C2", c2);
    cert.set("C_alpha", ca);
    cert.set("chain_sum", chain_sum);
    cert.set("chain_bound", c2 * chain_sum.powi(d as i32));
    cert.set("grad_bound", g);

    // Product-form bound, valid when every a_i stays under the gate.
    let mut gated = true;
    let mut weighted = 0.0;
    for i in i0..=j_last {
        let a = 2.0 * c_eta * b * (es[i as usize - 1] - 1.0);
        gated &= a <= 1.0 / (1.0 + f64::from(i));
        weighted += (1.0 + f64::from(i)).powf(alpha) * a;
    }
    if gated {
        cert.set("product_form_bound", c1 * (1.0 + ca * weighted).powi(d as i32));
    } else {
        cert.notes.push("product-form bound skipped: a_i above 1/(1+i) past i0".into());
    }

    let root_d = f64::from(d).sqrt();
    let c_omega = g * root_d / omega.eval_ext(root_d)?;
    cert.set("C_omega", c_omega);

    if let Some(k) = params.k_max {
        cert.set("K_max", k);
        if let Some((pos, &(i, e))) = profile
            .entries
            .iter()
            .enumerate()
            .find(|(_, &(i, e))| (f64::from(i) + 2.0) * (e - 1.0) > k * (1.0 + tol::EXACT))
        {
            cert.gate = Some(GateFailure {
                index: pos,
                detail: format!("(i+2)(E(2^{i}) - 1) = {} exceeds K = {k}", (f64::from(i) + 2.0) * (e - 1.0)),
            });
        }
    }
    cert.verdict = if cert.gate.is_some() || !c_omega.is_finite() {
        Verdict::Inconclusive
    } else {
        match status {
            Status::Converges => Verdict::Pass,
            Status::Diverges => Verdict::Diverges,
            Status::Inconclusive => Verdict::Inconclusive,
        }
    };
    cert.notes.push("deviation profile is window-relative".into());
    Ok(cert)
}

/// Inputs of the oscillation constant chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscParams {
    pub c_eta: f64,
    /// Lower bound of the density.
    pub a: f64,
}

impl Default for OscParams {
    fn default() -> Self {
        Self { c_eta: 1.0, a: 1.0 }
    }
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `eps`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> Result<f64> {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        if !flm.is_finite() || !frm.is_finite() {
            return Err(Error::QuadratureFailure(format!("integrand not finite near {lm}")));
        }
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return Ok(left + right + delta / 15.0);
        }
        Ok(rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)? + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)?)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    if !fa.is_finite() || !fb.is_finite() || !fm.is_finite() {
        return Err(Error::QuadratureFailure("integrand not finite at the endpoints".into()));
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, eps, 48)
}

fn is_closed_form(phi: &OscillationBound, omega: &Modulus) -> bool {
    let tab = |m: &Modulus| matches!(m.family(), Family::Tabulated { .. });
    !tab(omega) && !matches!(&phi.phi, Phi::Modulus(m) if tab(m))
}

/// Oscillation criterion `∫_0^{1/2} φ/ω < ∞`, `Σ φ(2^{−k}) < ∞` and the
/// modulus constant of the resulting map.
pub fn osc_certificate(phi: &OscillationBound, omega: &Modulus, params: OscParams) -> Result<Certificate> {
    if !(params.c_eta > 0.0 && params.a > 0.0) {
        return invalid("C_eta and a must be positive");
    }
    let inputs = serde_json::json!({ "phi": phi.phi, "omega": omega, "params": params });
    let mut cert = Certificate::new("oscillation", &inputs);
    let closed = is_closed_form(phi, omega);
    let ratio = |t: f64| -> f64 {
        match (phi.eval(t), omega.eval_ext(t)) {
            (Ok(p), Ok(w)) if w > 0.0 => p / w,
            _ => f64::NAN,
        }
    };

    // Integral on [ε, 1/2] in the variable s = log t.
    let eps = tol::T_FLOOR;
    let g = |s: f64| {
        let t = s.exp();
        ratio(t) * t
    };
    let body = adaptive_simpson(&g, eps.ln(), 0.5f64.ln(), 1e-13)?;
    let r0 = ratio(eps);
    let r1 = ratio(eps / 1024.0);
    if !r0.is_finite() || !r1.is_finite() {
        return Err(Error::QuadratureFailure("integrand not finite below the floor".into()));
    }
    let mut integral_ok = true;
    let head = if r1 <= r0 * (1.0 + tol::EXACT) {
        eps * r0
    } else {
        let beta = (r0 / r1).log2() / 10.0;
        if beta <= -1.0 {
            integral_ok = false;
            f64::INFINITY
        } else {
            cert.notes.push(format!("integral head estimated from power law t^{beta:.4}"));
            eps * r0 / (1.0 + beta)
        }
    };
    let integral = body + head;
    cert.set("integral_body", body);
    cert.set("integral", integral);

    // Σ φ(2^{-k}).
    let terms: Vec<f64> = (1..=60).map(|k| phi.eval(0.5f64.powi(k))).collect::<Result<_>>()?;
    let mut s = 0.0;
    for (k, t) in terms.iter().enumerate() {
        s += t;
        cert.partial_sums.push((k as u32 + 1, s));
    }
    let (sum_ok, sum_tail) = match &phi.phi {
        Phi::InverseLog => (false, None),
        _ => {
            let q = (49..59).map(|k| terms[k + 1] / terms[k]).fold(0.0, f64::max);
            if q < 0.99 {
                (true, Some(terms[59] * q / (1.0 - q)))
            } else {
                (false, None)
            }
        }
    };
    cert.tail_bound = sum_tail;
    let l = s + sum_tail.unwrap_or(f64::INFINITY);
    cert.set("phi_sum", l);

    if !(integral_ok && sum_ok) {
        cert.verdict = Verdict::Fail;
        if !sum_ok {
            cert.notes.push("sum of phi(2^-k) diverges".into());
        }
        if !integral_ok {
            cert.notes.push("integral of phi/omega diverges at 0".into());
        }
        return Ok(cert);
    }

    // Constant chain.
    let c1 = 2.0 * params.c_eta / params.a;
    let c = c1;
    cert.set("C1", c1);
    let cphi = |k: i32| c * phi.eval(0.5f64.powi(k)).unwrap_or(f64::NAN);
    let Some(i0) = (1..=400).find(|&i| cphi(i) < 1.0) else {
        cert.verdict = Verdict::Fail;
        cert.notes.push("no base scale with C phi(2^-i) < 1".into());
        return Ok(cert);
    };
    let q = (1.0 + cphi(i0)) / 2.0;
    let c2 = 1.0 / (1.0 - q);
    let g0: f64 = (1..i0).map(|k| 1.0 + cphi(k)).product();
    let half: f64 = (1..i0).map(|k| (1.0 + cphi(k)) / 2.0).product();
    let c3 = g0 / 2f64.powi(i0) / half * c2;
    let c4 = (2.0 * c3).max(c2 * c3);
    let lc = c * l;
    let c_exp = 2.0 * lc.exp() / lc;
    let c5 = c4 * c_exp * c;
    let c_omega = 2.0 * c5 * integral;
    cert.set("i0", f64::from(i0));
    cert.set("q", q);
    cert.set("C2", c2);
    cert.set("C3", c3);
    cert.set("C4", c4);
    cert.set("C_exp", c_exp);
    cert.set("C5", c5);
    cert.set("C_omega", c_omega);
    let finite = [c1, c2, c3, c4, c5, c_omega].iter().all(|x| x.is_finite());
    cert.verdict = if !finite {
        Verdict::Fail
    } else if closed {
        Verdict::Pass
    } else {
        cert.notes.push("tabulated input: tails are numeric only".into());
        Verdict::Inconclusive
    };
    Ok(cert)
}
