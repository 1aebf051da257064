//! Concentration bounds used to size replicate counts and sanity-check
//! rare-event frequencies.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    Upper,
    Lower,
}

/// Chernoff-type binomial/Poisson tail bound `exp(-mu * g(x / mu))` with
/// `g(a) = 1 - a + a log a`; valid for the upper tail when `x >= mu` and
/// the lower tail when `0 < x <= mu`.
pub fn chernoff_bound(mu: f64, x: f64, tail: Tail) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() || !x.is_finite() {
        return Err(Error::Parameter(format!("need finite mu > 0 and x; got mu={mu}, x={x}")));
    }
    match tail {
        Tail::Upper if x < mu => {
            return Err(Error::Parameter(format!("upper tail needs x >= mu; {x} < {mu}")))
        }
        Tail::Lower if !(x > 0.0 && x <= mu) => {
            return Err(Error::Parameter(format!("lower tail needs 0 < x <= mu; got {x}")))
        }
        _ => {}
    }
    let a = x / mu;
    let g = 1.0 - a + a * a.ln();
    Ok((-mu * g).exp())
}

/// Bounded-difference (Azuma) deviation bound `2 exp(-t^2 / (2 m k^2))`
/// for a function of `m` independent inputs, each of influence at most `k`.
pub fn bounded_difference_bound(m: u64, k: f64, t: f64) -> Result<f64> {
    if m == 0 || !(k > 0.0) || !(t >= 0.0) {
        return Err(Error::Parameter("need m >= 1, k > 0, t >= 0".into()));
    }
    Ok(2.0 * (-t * t / (2.0 * m as f64 * k * k)).exp())
}
