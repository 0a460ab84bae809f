//! Stability constant `K = 3^d C sum_n (n+1)^(d+l-1) phi(n)` and the constants of the
//! local polynomial reproduction under an interior cone condition.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::weights::{Method, Profile};

/// Summation stops once the tail bound falls below this fraction of the partial sum.
pub const SERIES_TOLERANCE: f64 = 1e-12;
const MAX_TERMS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBound {
    pub k: f64,
    /// `sum_n (n+1)^(d+l-1) phi(n)` without the `3^d C` factor.
    pub series: f64,
    /// Terms summed explicitly.
    pub terms: usize,
}

/// Profile value without the clamp used for weights, so series terms can underflow to zero.
fn profile_unclamped(profile: &Profile, t: f64) -> f64 {
    match *profile {
        Profile::Gaussian { nu } => (-nu * t * t).exp(),
        Profile::Exponential { nu } => (-nu * t).exp(),
        Profile::Algebraic { k } => t.powf(-k),
    }
}

/// `K = 3^d C sum_{n>=0} (n+1)^(d+l-1) phi(n)`.
///
/// Gaussian and exponential profiles pass the ratio test; their term ratio decreases
/// monotonically, so after term `n` the tail is at most `t_{n+1} / (1 - t_{n+2}/t_{n+1})`.
///
/// Algebraic profiles `phi(n) = n^-k` are accepted when `d + l - k < -1` and summed in
/// closed form through Hurwitz zeta values. The `n = 0` shell uses `phi(0) = 1`, the value
/// at the first shell, since `n^-k` is unbounded there.
pub fn stability_bound(c: f64, profile: &Profile, d: usize, ell: usize) -> Result<StabilityBound> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let p = (d + ell - 1) as i32;
    let scale = 3f64.powi(d as i32) * c;
    if let Profile::Algebraic { k } = *profile {
        let exponent = (d + ell) as f64 - k;
        if exponent >= -1.0 {
            return Err(Error::DivergentSeries(format!(
                "algebraic exponent k={k} is inadmissible for d={d}, l={ell} (requires d + l - k < -1)"
            )));
        }
        let series = algebraic_series(k, p as u32);
        return Ok(StabilityBound {
            k: scale * series,
            series,
            terms: EULER_MACLAURIN_TERMS,
        });
    }
    let term = |n: usize| ((n + 1) as f64).powi(p) * profile_unclamped(profile, n as f64);
    let mut partial = 0.0;
    let mut n = 0;
    loop {
        let t = term(n);
        partial += t;
        let next = term(n + 1);
        if next == 0.0 {
            break;
        }
        let ratio = term(n + 2) / next;
        if ratio < 1.0 && next / (1.0 - ratio) < SERIES_TOLERANCE * partial {
            break;
        }
        n += 1;
        if n > MAX_TERMS {
            return Err(Error::DivergentSeries(format!(
                "no convergence after {MAX_TERMS} terms"
            )));
        }
    }
    Ok(StabilityBound {
        k: scale * partial,
        series: partial,
        terms: n + 1,
    })
}

const EULER_MACLAURIN_TERMS: usize = 20;

/// `1 + sum_{n>=1} (n+1)^p n^-k = 1 + sum_i binom(p, i) zeta(k - i)`.
fn algebraic_series(k: f64, p: u32) -> f64 {
    let mut sum = 1.0;
    let mut binom = 1.0;
    for i in 0..=p {
        sum += binom * hurwitz_zeta(k - i as f64, 1.0);
        binom = binom * (p - i) as f64 / (i + 1) as f64;
    }
    sum
}

/// `zeta(s, a) = sum_{n>=0} (n + a)^-s` for `s > 1`, by Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const B2J: [f64; 6] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
    ];
    let m = EULER_MACLAURIN_TERMS;
    let mut sum: f64 = (0..m).map(|n| (a + n as f64).powf(-s)).sum();
    let b = a + m as f64;
    sum += b.powf(1.0 - s) / (s - 1.0) + 0.5 * b.powf(-s);
    // Rising factorial s (s+1) ... (s+2j-2) over (2j)!.
    let mut rising = s;
    let mut fact = 2.0;
    let mut power = b.powf(-s - 1.0);
    for (j, bj) in B2J.iter().enumerate() {
        sum += bj / fact * rising * power;
        let j2 = 2.0 * (j + 1) as f64;
        rising *= (s + j2 - 1.0) * (s + j2);
        fact *= (j2 + 1.0) * (j2 + 2.0);
        power /= b * b;
    }
    sum
}

/// Constants of the local polynomial reproduction for a cone angle `theta <= pi/5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub theta: f64,
    pub r: f64,
    pub m: usize,
    pub c1: f64,
    pub c2: f64,
    pub h0: f64,
}

impl TheoryConstants {
    pub fn new(theta: f64, r: f64, m: usize) -> Result<Self> {
        if !(theta > 0.0 && theta < PI / 2.0) {
            return Err(Error::InvalidArgument(format!(
                "cone angle must lie in (0, pi/2), got {theta}"
            )));
        }
        if theta > PI / 5.0 * (1.0 + 1e-15) {
            return Err(Error::UnsupportedAngle(theta));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("cone radius must be positive, got {r}")));
        }
        let s = theta.sin();
        let c2 = 16.0 * (1.0 + s).powi(2) * (m * m) as f64 / (3.0 * s * s);
        Ok(Self {
            theta,
            r,
            m,
            c1: 2.0,
            c2,
            h0: r / c2,
        })
    }
}

/// `|a_j(x)| <= C phi_tilde(|x - x_j| / q_X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastDecay {
    pub c: f64,
    /// `ln C`, finite even when `C` overflows.
    pub ln_c: f64,
    pub phi: Profile,
}

/// Budgets tying `delta` to the node spacing: `gamma c_gamma q <= delta <= c_gamma c_qu q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgets {
    pub c_qu: f64,
    pub gamma: f64,
    pub c_gamma: f64,
}

pub fn theory_constants(
    theta: f64,
    r: f64,
    m: usize,
    budgets: Budgets,
    profile: &Profile,
    method: Method,
) -> Result<(TheoryConstants, FastDecay)> {
    let tc = TheoryConstants::new(theta, r, m)?;
    let Budgets { c_qu, gamma, c_gamma } = budgets;
    for (name, v) in [("c_qu", c_qu), ("gamma", gamma), ("c_gamma", c_gamma)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    let (c1, c2) = (tc.c1, tc.c2);
    let ratio = c2 / (gamma * c_gamma);
    let spread = c_gamma * c_qu;
    let (ln_c, phi) = match (*profile, method) {
        (Profile::Gaussian { nu }, Method::Mls) => (
            1.0 + c1.ln() + 0.5 * nu * ratio * ratio,
            Profile::Exponential {
                nu: (nu / 2.0).sqrt() / spread,
            },
        ),
        (Profile::Exponential { nu }, Method::Mls) => (
            c1.ln() + 0.5 * nu * ratio,
            Profile::Exponential { nu: 0.5 * nu / spread },
        ),
        (Profile::Gaussian { nu }, Method::OneNorm) => (
            1.0 + c1.ln() + nu * ratio * ratio,
            Profile::Exponential { nu: nu.sqrt() / spread },
        ),
        (Profile::Exponential { nu }, Method::OneNorm) => {
            (c1.ln() + nu * ratio, Profile::Exponential { nu: nu / spread })
        }
        (Profile::Algebraic { k }, Method::Mls) => {
            // C = sqrt(C1^2 / phi(C2 c_qu)) with phi(t) = t^-k; phi_tilde = sqrt(phi).
            (c1.ln() + 0.5 * k * (c2 * c_qu).ln(), Profile::Algebraic { k: 0.5 * k })
        }
        (Profile::Algebraic { k }, Method::OneNorm) => (c1.ln() + k * (c2 * c_qu).ln(), Profile::Algebraic { k }),
    };
    Ok((
        tc,
        FastDecay {
            c: ln_c.exp(),
            ln_c,
            phi,
        },
    ))
}

/// Theoretical Lebesgue bound `3^d C sum_n (n+1)^(d-1) phi_tilde(n)`.
pub fn lebesgue_bound(decay: &FastDecay, d: usize) -> Result<StabilityBound> {
    stability_bound(decay.c, &decay.phi, d, 0)
}
