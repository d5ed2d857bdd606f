use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::moduli::Modulus;
use crate::tol;

/// Increasing positive functions bounding mean oscillation at scale `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi {
    /// `c·t^k`.
    Power { c: f64, k: f64 },
    /// `1 / log(1/t)`.
    InverseLog,
    /// A modulus of continuity used as `φ`.
    Modulus(Modulus),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationBound {
    pub phi: Phi,
    /// `φ(t) ≤ t` on every sample.
    pub sub_linear: bool,
}

impl OscillationBound {
    /// Checks monotonicity on geometric samples of `(2^-40, 1/2]`.
    pub fn new(phi: Phi) -> Result<Self> {
        match &phi {
            Phi::Power { c, k } if !(*c > 0.0 && *k > 0.0) => return invalid("power law needs c > 0 and k > 0"),
            _ => {}
        }
        let mut b = Self { phi, sub_linear: true };
        let mut prev = 0.0;
        for t in samples() {
            let v = b.eval(t)?;
            if !(v > prev) {
                return invalid(format!("oscillation bound not increasing at t = {t}"));
            }
            prev = v;
            if v > t {
                b.sub_linear = false;
            }
        }
        Ok(b)
    }

    pub fn power(c: f64, k: f64) -> Result<Self> {
        Self::new(Phi::Power { c, k })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain { arg: "t", value: t, domain: "(0, 1)".into() });
        }
        match &self.phi {
            Phi::Power { c, k } => Ok(c * t.powf(*k)),
            Phi::InverseLog => Ok(1.0 / (-t.ln())),
            Phi::Modulus(m) => m.eval_ext(t),
        }
    }
}

fn samples() -> impl Iterator<Item = f64> {
    let lo = tol::T_FLOOR.ln();
    let hi = 0.5f64.ln();
    (0..=200).map(move |k| (lo + (hi - lo) * f64::from(k) / 200.0).exp())
}

/// `1 / ⌊1/φ(t)⌋`, always a unit fraction not above `φ(t)`.
pub fn phi_tilde(phi: &OscillationBound, t: f64) -> Result<f64> {
    let v = phi.eval(t)?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Domain { arg: "phi(t)", value: v, domain: "(0, 1]".into() });
    }
    // Guard against 1/(1/n) landing just below n.
    let n = (1.0 / v * (1.0 + 1e-12)).floor();
    Ok(1.0 / n)
}

impl fmt::Display for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phi::Power { c, k } if *c == 1.0 => write!(f, "pow:{k}"),
            Phi::Power { c, k } => write!(f, "pow:{k}:{c}"),
            Phi::InverseLog => write!(f, "invlog"),
            Phi::Modulus(m) => write!(f, "omega:{m}"),
        }
    }
}

impl FromStr for OscillationBound {
    type Err = Error;

    /// `pow:k[:c]`, `invlog` or `omega:<modulus>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "invlog" {
            return Self::new(Phi::InverseLog);
        }
        if let Some(rest) = s.strip_prefix("omega:") {
            return Self::new(Phi::Modulus(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix("pow:") {
            let mut it = rest.split(':');
            let num = |t: Option<&str>, default: Option<f64>| -> Result<f64> {
                match (t, default) {
                    (Some(t), _) => t.parse().map_err(|_| Error::Parse(format!("bad number {t:?}"))),
                    (None, Some(d)) => Ok(d),
                    (None, None) => Err(Error::Parse("missing exponent".into())),
                }
            };
            let k = num(it.next(), None)?;
            let c = num(it.next(), Some(1.0))?;
            return Self::new(Phi::Power { c, k });
        }
        Err(Error::Parse(format!("unknown oscillation bound {s:?}")))
    }
}
