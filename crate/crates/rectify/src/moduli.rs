//! Moduli of continuity and their summability classification.
//!
//! A modulus is an increasing concave function `ω` with `ω(t) → 0` as
//! `t → 0`. The closed-form families below are restricted to an interval
//! `(0, domain_hi]` on which they are increasing and concave; outside that
//! interval [`Modulus::eval`] refuses, while [`Modulus::eval_ext`] continues
//! the function by its tangent at `domain_hi`, which keeps it concave and
//! non-decreasing on `(0, ∞)`.
//!
//! ```
//! use rectify::moduli::{Modulus, Status};
//!
//! let w = Modulus::log_power(2.0)?;
//! assert_eq!(w.md_membership(1, 64).status, Status::Converges);
//! assert_eq!(w.md_membership(2, 64).status, Status::Diverges);
//! # Ok::<(), rectify::Error>(())
//! ```

use std::f64::consts::{E, LN_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tol;

/// Closed-form family or monotone table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `c·t`.
    Lipschitz { c: f64 },
    /// `c·t^alpha`, `alpha ∈ (0,1)`.
    Hoelder { alpha: f64, c: f64 },
    /// `t·(log 1/t)^p`.
    LogPower { p: f64 },
    /// `t·(log log 1/t)^gamma`.
    LogLogPower { gamma: f64 },
    /// `t·log(1/t)·(log log 1/t)^p`.
    IteratedLog { p: f64 },
    /// Piecewise-linear interpolation of `(t_j, v_j)`.
    Tabulated { knots: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    family: Family,
    domain_hi: f64,
}

/// Outcome of a series test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converges,
    Diverges,
    Inconclusive,
}

/// Partial sum of a positive series with an optional certified tail.
///
/// `status == Converges` implies `tail_bound` is finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub status: Status,
    pub partial_sum: f64,
    pub tail_bound: Option<f64>,
    pub terms_used: usize,
}

/// Sampled shape violations of a modulus.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Pairs `t1 < t2` with `ω(t1) ≥ ω(t2)`.
    pub monotonicity: Vec<(f64, f64)>,
    /// Pairs whose midpoint lies below the chord by more than the tolerance.
    pub concavity: Vec<(f64, f64)>,
    /// `ω` at the smallest sampled abscissa.
    pub value_at_floor: f64,
    pub vanishes: bool,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.monotonicity.is_empty() && self.concavity.is_empty()
    }
}

impl Modulus {
    pub fn lipschitz(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("lipschitz scale must be positive, got {c}"));
        }
        Ok(Self { family: Family::Lipschitz { c }, domain_hi: 1.0 })
    }

    pub fn hoelder(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("hoelder exponent must lie in (0,1), got {alpha}"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("hoelder scale must be positive, got {c}"));
        }
        Ok(Self { family: Family::Hoelder { alpha, c }, domain_hi: 1.0 })
    }

    pub fn log_power(p: f64) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return invalid(format!("log power must be non-negative, got {p}"));
        }
        Ok(Self { family: Family::LogPower { p }, domain_hi: (-p).exp().min(0.5) })
    }

    pub fn log_log_power(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return invalid(format!("log-log power must be non-negative, got {gamma}"));
        }
        let l0 = E * gamma.max(1.0);
        Ok(Self { family: Family::LogLogPower { gamma }, domain_hi: (-l0).exp().min(0.5) })
    }

    pub fn iterated_log(p: f64) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return invalid(format!("iterated-log power must be non-negative, got {p}"));
        }
        let l0 = E * (p + 1.0).max(1.0);
        Ok(Self { family: Family::IteratedLog { p }, domain_hi: (-l0).exp().min(0.5) })
    }

    /// Knots must have strictly increasing abscissae in `(0,1)` and positive
    /// values; monotonicity of the values is reported by [`Self::validate`].
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return invalid("a tabulated modulus needs at least two knots");
        }
        for w in knots.windows(2) {
            if !(w[0].0 < w[1].0) {
                return invalid(format!("knot abscissae not increasing at {}", w[1].0));
            }
        }
        for &(t, v) in &knots {
            if !(t > 0.0 && t < 1.0) || !(v > 0.0 && v.is_finite()) {
                return invalid(format!("bad knot ({t}, {v})"));
            }
        }
        let hi = knots[knots.len() - 1].0;
        Ok(Self { family: Family::Tabulated { knots }, domain_hi: hi })
    }

    /// Reads a table with header `t,omega`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some(h) if h.replace(' ', "") == "t,omega" => {}
            other => return Err(Error::Parse(format!("expected header `t,omega`, got {other:?}"))),
        }
        let mut knots = Vec::new();
        for line in lines {
            let mut it = line.split(',');
            let t = parse_f64(it.next())?;
            let v = parse_f64(it.next())?;
            knots.push((t, v));
        }
        Self::tabulated(knots)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn domain_hi(&self) -> f64 {
        self.domain_hi
    }

    pub fn domain_lo(&self) -> f64 {
        match &self.family {
            Family::Tabulated { knots } => knots[0].0,
            _ => 0.0,
        }
    }

    fn in_domain(&self, t: f64) -> bool {
        match &self.family {
            Family::Tabulated { knots } => t >= knots[0].0 && t <= self.domain_hi,
            _ => t > 0.0 && t <= self.domain_hi,
        }
    }

    fn domain_error(&self, t: f64) -> Error {
        let lo = self.domain_lo();
        let domain = if lo > 0.0 {
            format!("[{lo}, {}]", self.domain_hi)
        } else {
            format!("(0, {}]", self.domain_hi)
        };
        Error::Domain { arg: "t", value: t, domain }
    }

    /// `ω(t)` for `t` in the validity interval.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !self.in_domain(t) {
            return Err(self.domain_error(t));
        }
        Ok(self.raw(t))
    }

    fn raw(&self, t: f64) -> f64 {
        match &self.family {
            Family::Lipschitz { c } => c * t,
            Family::Hoelder { alpha, c } => c * t.powf(*alpha),
            Family::LogPower { p } => t * (-t.ln()).powf(*p),
            Family::LogLogPower { gamma } => t * (-t.ln()).ln().powf(*gamma),
            Family::IteratedLog { p } => {
                let l = -t.ln();
                t * l * l.ln().powf(*p)
            }
            Family::Tabulated { knots } => interpolate(knots, t),
        }
    }

    /// One-sided derivative from the left, clamped at zero.
    fn slope(&self, t: f64) -> f64 {
        let s = match &self.family {
            Family::Lipschitz { c } => *c,
            Family::Hoelder { alpha, c } => c * alpha * t.powf(alpha - 1.0),
            Family::LogPower { p } => {
                let l = -t.ln();
                if *p == 0.0 {
                    1.0
                } else {
                    l.powf(p - 1.0) * (l - p)
                }
            }
            Family::LogLogPower { gamma } => {
                let l = -t.ln();
                let ll = l.ln();
                if *gamma == 0.0 {
                    1.0
                } else {
                    ll.powf(*gamma) - gamma * ll.powf(gamma - 1.0) / l
                }
            }
            Family::IteratedLog { p } => {
                let l = -t.ln();
                let ll = l.ln();
                let lower = if *p == 0.0 { 0.0 } else { p * ll.powf(p - 1.0) };
                l * ll.powf(*p) - ll.powf(*p) - lower
            }
            Family::Tabulated { knots } => {
                let n = knots.len();
                (knots[n - 1].1 - knots[n - 2].1) / (knots[n - 1].0 - knots[n - 2].0)
            }
        };
        s.max(0.0)
    }

    /// `ω` continued past `domain_hi` by its tangent line.
    ///
    /// Below the domain of a table the chord to the origin is used, so the
    /// continuation is concave whenever the table is.
    pub fn eval_ext(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain { arg: "t", value: t, domain: "(0, inf)".into() });
        }
        if t > self.domain_hi {
            let h = self.domain_hi;
            return Ok(self.raw(h) + self.slope(h) * (t - h));
        }
        if let Family::Tabulated { knots } = &self.family {
            if t < knots[0].0 {
                return Ok(knots[0].1 * t / knots[0].0);
            }
        }
        Ok(self.raw(t))
    }

    /// `(1 / (2^{i-1} ω(2^{-(i-1)})))^{1/d}`.
    pub fn md_term(&self, d: u32, i: u32) -> Result<f64> {
        if i < 2 {
            return invalid(format!("series index starts at 2, got {i}"));
        }
        if d == 0 {
            return invalid("dimension must be positive");
        }
        let t = 0.5f64.powi(i as i32 - 1);
        let w = self.eval(t)?;
        Ok((1.0 / (w / t)).powf(1.0 / f64::from(d)))
    }

    /// Same term as [`Self::md_term`] for any `i ≥ 1`, using the tangent
    /// continuation where `2^{-(i-1)}` leaves the domain.
    pub fn md_term_ext(&self, d: u32, i: u32) -> f64 {
        let t = 0.5f64.powi(i.max(1) as i32 - 1);
        let w = self.eval_ext(t).unwrap_or(f64::NAN);
        (t / w).powf(1.0 / f64::from(d.max(1)))
    }

    /// First index `i ≥ 2` whose abscissa `2^{-(i-1)}` lies in the domain.
    pub fn first_index(&self) -> u32 {
        let mut i = 2;
        while !self.in_domain(0.5f64.powi(i as i32 - 1)) && i < 1100 {
            i += 1;
        }
        i
    }

    /// Summability of `Σ_{i≥2} md_term(d, i)`.
    ///
    /// Closed forms are classified exactly and carry an integral or geometric
    /// tail bound; tables only report their partial sum. `i_max` below 8 is
    /// raised to 8.
    pub fn md_membership(&self, d: u32, i_max: u32) -> SeriesVerdict {
        let d = d.max(1);
        let i_max = i_max.max(8);
        let start = self.first_index();
        let mut partial_sum = 0.0;
        let mut terms_used = 0;
        for i in start..=i_max {
            if let Ok(x) = self.md_term(d, i) {
                partial_sum += x;
                terms_used += 1;
            }
        }
        // Tail starts after the last index that was (or could have been) summed.
        let n = i_max.max(start - 1);
        let df = f64::from(d);
        let (status, tail_bound) = match &self.family {
            Family::Lipschitz { .. } | Family::LogLogPower { .. } => (Status::Diverges, None),
            Family::Hoelder { alpha, c } => {
                let r = 2f64.powf(-(1.0 - alpha) / df);
                let next = c.powf(-1.0 / df) * r.powi(n as i32);
                (Status::Converges, Some(next / (1.0 - r)))
            }
            Family::LogPower { p } => {
                let s = p / df;
                if s > 1.0 {
                    let tail = LN_2.powf(-s) * f64::from(n - 1).powf(1.0 - s) / (s - 1.0);
                    (Status::Converges, Some(tail))
                } else {
                    (Status::Diverges, None)
                }
            }
            Family::IteratedLog { p } => {
                if d == 1 && *p > 1.0 {
                    let u0 = (f64::from(n - 1) * LN_2).ln();
                    (Status::Converges, Some(u0.powf(1.0 - p) / ((p - 1.0) * LN_2)))
                } else {
                    (Status::Diverges, None)
                }
            }
            Family::Tabulated { .. } => (Status::Inconclusive, None),
        };
        SeriesVerdict { status, partial_sum, tail_bound, terms_used }
    }

    /// `r²·ω(1/r)`; exactly `c·r` for the Lipschitz family.
    pub fn repetitivity_function(&self, r: f64) -> Result<f64> {
        if !(r > 1.0) {
            return Err(Error::Domain { arg: "r", value: r, domain: "(1, inf)".into() });
        }
        if let Family::Lipschitz { c } = self.family {
            return Ok(c * r);
        }
        Ok(r * r * self.eval(1.0 / r)?)
    }

    /// Sampled monotonicity and midpoint-concavity check.
    pub fn validate(&self, n_samples: usize) -> ValidationReport {
        let ts: Vec<f64> = match &self.family {
            Family::Tabulated { knots } => knots.iter().map(|k| k.0).collect(),
            _ => {
                let n = n_samples.max(3);
                let (lo, hi) = (tol::T_FLOOR.ln(), self.domain_hi.ln());
                (0..n).map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp()).collect()
            }
        };
        let vs: Vec<f64> = ts.iter().map(|&t| self.raw(t)).collect();
        let mut report = ValidationReport { value_at_floor: vs[0], ..Default::default() };
        report.vanishes = vs[0] < 1e-3;
        for k in 0..ts.len() - 1 {
            if !(vs[k] < vs[k + 1]) {
                report.monotonicity.push((ts[k], ts[k + 1]));
            }
            for gap in [1usize, 2] {
                if k + gap < ts.len() {
                    let (t1, t2) = (ts[k], ts[k + gap]);
                    let mid = self.raw(0.5 * (t1 + t2));
                    if mid < 0.5 * (vs[k] + vs[k + gap]) - tol::CONCAVITY {
                        report.concavity.push((t1, t2));
                    }
                }
            }
        }
        report
    }
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let k = knots.partition_point(|&(x, _)| x <= t);
    if k == 0 {
        return knots[0].1;
    }
    if k >= knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (t0, v0) = knots[k - 1];
    let (t1, v1) = knots[k];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

fn parse_f64(s: Option<&str>) -> Result<f64> {
    let s = s.ok_or_else(|| Error::Parse("missing field".into()))?.trim();
    s.parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Lipschitz { c } => write!(f, "lipschitz:{c}"),
            Family::Hoelder { alpha, c } => write!(f, "holder:{alpha}:{c}"),
            Family::LogPower { p } => write!(f, "logpow:{p}"),
            Family::LogLogPower { gamma } => write!(f, "loglog:{gamma}"),
            Family::IteratedLog { p } => write!(f, "iterlog:{p}"),
            Family::Tabulated { knots } => write!(f, "table[{}]", knots.len()),
        }
    }
}

/// Parses `lipschitz[:c]`, `holder:alpha[:c]`, `logpow:p`, `loglog:gamma`
/// and `iterlog:p`.
impl FromStr for Modulus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |k: usize, default: Option<f64>| -> Result<f64> {
            match parts.get(k) {
                Some(x) => x.parse().map_err(|_| Error::Parse(format!("bad number {x:?} in {s:?}"))),
                None => default.ok_or_else(|| Error::Parse(format!("missing parameter in {s:?}"))),
            }
        };
        match parts[0] {
            "lipschitz" | "lip" => Self::lipschitz(num(1, Some(1.0))?),
            "holder" | "hoelder" => Self::hoelder(num(1, None)?, num(2, Some(1.0))?),
            "logpow" => Self::log_power(num(1, None)?),
            "loglog" => Self::log_log_power(num(1, None)?),
            "iterlog" => Self::iterated_log(num(1, None)?),
            other => Err(Error::Parse(format!("unknown modulus family {other:?}"))),
        }
    }
}
