//! Parameter algebra for `i u_t + Δu + μ |x|^{-b} |u|^α u = 0`.
//!
//! Exponents are carried as exact rationals whenever the inputs are rational,
//! so identities such as `s_c = 1` and Strichartz admissibility are decided
//! without rounding drift. Anything that leaves `i64` range falls back to
//! floating point and is compared with [`FLOAT_TOL`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{InlsError, Result};
use crate::field::FieldState;

/// Comparison tolerance used once exact arithmetic is no longer available.
pub const FLOAT_TOL: f64 = 1e-12;

/// A real number that stays rational as long as it can.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Number {
    Exact(Ratio<i64>),
    Float(f64),
}

impl Number {
    pub fn int(value: i64) -> Self {
        Number::Exact(Ratio::from_integer(value))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Number::Exact(Ratio::new(numer, denom))
    }

    pub fn float(value: f64) -> Self {
        Number::Float(value)
    }

    pub fn value(&self) -> f64 {
        match self {
            Number::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Number::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_zero(),
            Number::Float(x) => *x == 0.0,
        }
    }

    fn combine(
        self,
        rhs: Number,
        exact: impl Fn(&Ratio<i64>, &Ratio<i64>) -> Option<Ratio<i64>>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Number {
        if let (Number::Exact(a), Number::Exact(b)) = (self, rhs) {
            if let Some(r) = exact(&a, &b) {
                return Number::Exact(r);
            }
        }
        Number::Float(float(self.value(), rhs.value()))
    }

    pub fn add(self, rhs: Number) -> Number {
        self.combine(rhs, |a, b| a.checked_add(b), |a, b| a + b)
    }

    pub fn sub(self, rhs: Number) -> Number {
        self.combine(rhs, |a, b| a.checked_sub(b), |a, b| a - b)
    }

    pub fn mul(self, rhs: Number) -> Number {
        self.combine(rhs, |a, b| a.checked_mul(b), |a, b| a * b)
    }

    /// Division; `None` when the divisor is zero.
    pub fn div(self, rhs: Number) -> Option<Number> {
        if rhs.is_zero() {
            return None;
        }
        Some(self.combine(rhs, |a, b| a.checked_div(b), |a, b| a / b))
    }

    /// Equality: exact when both sides are rational, else within [`FLOAT_TOL`].
    pub fn approx_eq(&self, other: &Number) -> bool {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a == b,
            _ => (self.value() - other.value()).abs() <= FLOAT_TOL,
        }
    }

    pub fn compare(&self, other: &Number) -> Ordering {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a.cmp(b),
            _ => self.value().partial_cmp(&other.value()).unwrap_or(Ordering::Equal),
        }
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::Float(x)
    }
}

impl From<i64> for Number {
    fn from(x: i64) -> Self {
        Number::int(x)
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

/// Terminating decimal expansion of `r` when its denominator is `2^a 5^b`.
fn decimal_repr(r: &Ratio<i64>) -> Option<String> {
    let mut d = *r.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return None;
    }
    let digits = twos.max(fives);
    let scale = 10i128.checked_pow(digits)?;
    let scaled = (*r.numer() as i128).checked_mul(scale)? / (*r.denom() as i128);
    let sign = if scaled < 0 { "-" } else { "" };
    let mag = scaled.unsigned_abs();
    if digits == 0 {
        return Some(format!("{sign}{mag}"));
    }
    let s = format!("{:0width$}", mag, width = digits as usize + 1);
    let (int, frac) = s.split_at(s.len() - digits as usize);
    Some(format!("{sign}{int}.{frac}"))
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Number::Exact(r) => match decimal_repr(r) {
                Some(s) => f.write_str(&s),
                None => write!(f, "{}/{}", r.numer(), r.denom()),
            },
            Number::Float(x) => write!(f, "{x:e}"),
        }
    }
}

/// Parses `7`, `-4/3`, `0.25` or `1.5e-3` as exact rationals; anything else
/// that `f64` accepts becomes a float.
fn parse_exact_decimal(s: &str) -> Option<Ratio<i64>> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: i64 = format!("{int}{frac}").parse().ok()?;
    let shift = exponent - frac.len() as i32;
    let pow = 10i64.checked_pow(shift.unsigned_abs())?;
    let r = if shift >= 0 {
        Ratio::from_integer(digits.checked_mul(pow)?)
    } else {
        Ratio::new(digits, pow)
    };
    Some(if neg { -r } else { r })
}

impl FromStr for Number {
    type Err = InlsError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| bad_number(s))?;
            let q: i64 = q.trim().parse().map_err(|_| bad_number(s))?;
            if q == 0 {
                return Err(bad_number(s));
            }
            return Ok(Number::ratio(p, q));
        }
        if let Some(r) = parse_exact_decimal(s) {
            return Ok(Number::Exact(r));
        }
        s.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Number::Float)
            .ok_or_else(|| bad_number(s))
    }
}

fn bad_number(s: &str) -> InlsError {
    InlsError::Format(format!("not a number: {s:?}"))
}

impl From<Number> for String {
    fn from(n: Number) -> String {
        n.to_string()
    }
}

impl TryFrom<String> for Number {
    type Error = InlsError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Sign of the nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Focusing,
    Defocusing,
}

impl Sign {
    /// μ = +1 for focusing, −1 for defocusing.
    pub fn mu(self) -> f64 {
        match self {
            Sign::Focusing => 1.0,
            Sign::Defocusing => -1.0,
        }
    }
}

impl FromStr for Sign {
    type Err = InlsError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "focusing" | "+1" | "1" => Ok(Sign::Focusing),
            "defocusing" | "-1" => Ok(Sign::Defocusing),
            other => Err(InlsError::Format(format!("unknown sign {other:?}"))),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Focusing => "focusing",
            Sign::Defocusing => "defocusing",
        })
    }
}

/// Parameter range of a particular result, checked on request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Global well-posedness and scattering: N ∈ {3,4,5}, 0 < b ≤ min{(6−N)/2, 4/N}.
    Scattering,
    /// Blow-up / grow-up above the ground state: N ≥ 3, 0 < b ≤ 4/N.
    BlowUp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    dimension: u32,
    b: Number,
    alpha: Number,
    sign: Sign,
    energy_critical: bool,
}

impl ModelParams {
    /// Energy-critical model: α = (4 − 2b)/(N − 2).
    pub fn critical(dimension: u32, b: impl Into<Number>, sign: Sign) -> Result<Self> {
        let b = b.into();
        check_dimension(dimension)?;
        if b.value() < 0.0 || b.value() >= 2.0 {
            return Err(InlsError::range("model", format!("b = {b} outside [0, 2)")));
        }
        let alpha = derive_alpha_exact(dimension, b)?;
        Ok(Self {
            dimension,
            b,
            alpha,
            sign,
            energy_critical: true,
        })
    }

    /// Arbitrary α > 0, e.g. to probe the grow-up rate away from criticality.
    pub fn exploratory(dimension: u32, b: impl Into<Number>, alpha: impl Into<Number>, sign: Sign) -> Result<Self> {
        let (b, alpha) = (b.into(), alpha.into());
        check_dimension(dimension)?;
        if b.value() < 0.0 {
            return Err(InlsError::range("model", format!("b = {b} is negative")));
        }
        if alpha.value() <= 0.0 {
            return Err(InlsError::range("model", format!("alpha = {alpha} must be positive")));
        }
        Ok(Self {
            dimension,
            b,
            alpha,
            sign,
            energy_critical: false,
        })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn b(&self) -> f64 {
        self.b.value()
    }

    pub fn b_number(&self) -> Number {
        self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.value()
    }

    pub fn alpha_number(&self) -> Number {
        self.alpha
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn mu(&self) -> f64 {
        self.sign.mu()
    }

    pub fn is_energy_critical(&self) -> bool {
        self.energy_critical
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    /// s_c = N/2 − (2 − b)/α.
    pub fn critical_index(&self) -> f64 {
        self.critical_index_exact().value()
    }

    pub fn critical_index_exact(&self) -> Number {
        let half_n = Number::ratio(self.dimension as i64, 2);
        let num = Number::int(2).sub(self.b);
        // alpha > 0 is a constructor invariant
        half_n.sub(num.div(self.alpha).expect("alpha > 0"))
    }

    /// Exponent p in the scaling symmetry u ↦ λ^p u(λ²t, λx): p = (2 − b)/α.
    pub fn scaling_exponent(&self) -> f64 {
        (2.0 - self.b()) / self.alpha()
    }

    /// Validates the parameter range of one result; the model itself may be
    /// used outside it.
    pub fn validate(&self, regime: Regime) -> Result<()> {
        if !self.energy_critical {
            return Err(InlsError::range(
                "model",
                format!("alpha = {} is not energy-critical", self.alpha),
            ));
        }
        if self.b.value() <= 0.0 {
            return Err(InlsError::range("model", "b must be positive"));
        }
        let ceiling = match regime {
            Regime::Scattering => b_ceiling_exact(self.dimension)?,
            Regime::BlowUp => {
                if self.dimension < 3 {
                    return Err(InlsError::DimensionUnsupported(self.dimension, "blow-up needs N >= 3"));
                }
                Number::ratio(4, self.dimension as i64)
            }
        };
        if self.b.compare(&ceiling) == Ordering::Greater {
            return Err(InlsError::range(
                "model",
                format!(
                    "b = {} exceeds the ceiling {} for N = {}",
                    self.b, ceiling, self.dimension
                ),
            ));
        }
        Ok(())
    }
}

fn check_dimension(dimension: u32) -> Result<()> {
    if (1..=5).contains(&dimension) {
        Ok(())
    } else {
        Err(InlsError::range("model", format!("N = {dimension} outside 1..=5")))
    }
}

/// α = (4 − 2b)/(N − 2).
pub fn derive_alpha(dimension: u32, b: f64) -> Result<f64> {
    derive_alpha_exact(dimension, Number::float(b)).map(|a| a.value())
}

pub fn derive_alpha_exact(dimension: u32, b: Number) -> Result<Number> {
    if dimension < 3 {
        return Err(InlsError::DimensionUnsupported(
            dimension,
            "energy-critical exponent needs N >= 3",
        ));
    }
    if b.value() < 0.0 {
        return Err(InlsError::Domain(format!("b = {b} is negative")));
    }
    let num = Number::int(4).sub(Number::int(2).mul(b));
    Ok(num.div(Number::int(dimension as i64 - 2)).expect("N - 2 > 0"))
}

/// min{(6 − N)/2, 4/N} for N ∈ {3, 4, 5}.
pub fn b_ceiling(dimension: u32) -> Result<f64> {
    b_ceiling_exact(dimension).map(|n| n.value())
}

pub fn b_ceiling_exact(dimension: u32) -> Result<Number> {
    if !(3..=5).contains(&dimension) {
        return Err(InlsError::range(
            "model",
            format!("N = {dimension} outside {{3, 4, 5}}"),
        ));
    }
    let n = dimension as i64;
    let a = Number::ratio(6 - n, 2);
    let b = Number::ratio(4, n);
    Ok(if a.compare(&b) == Ordering::Less { a } else { b })
}

/// Lebesgue exponent that may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lebesgue {
    Finite(Number),
    Infinite,
}

impl Lebesgue {
    /// 1/q, with 1/∞ = 0.
    fn reciprocal(&self) -> Option<Number> {
        match self {
            Lebesgue::Finite(q) => Number::int(1).div(*q),
            Lebesgue::Infinite => Some(Number::int(0)),
        }
    }
}

impl From<f64> for Lebesgue {
    fn from(q: f64) -> Self {
        if q.is_infinite() {
            Lebesgue::Infinite
        } else {
            Lebesgue::Finite(Number::float(q))
        }
    }
}

impl From<Number> for Lebesgue {
    fn from(q: Number) -> Self {
        Lebesgue::Finite(q)
    }
}

/// Strichartz admissibility: 2/q + N/r = N/2 with r in its dimensional range.
pub fn is_admissible_pair(q: impl Into<Lebesgue>, r: impl Into<Number>, dimension: u32) -> bool {
    let (q, r) = (q.into(), r.into());
    if let Lebesgue::Finite(qv) = q {
        if qv.value() <= 0.0 {
            return false;
        }
    }
    if r.value() <= 0.0 || dimension == 0 {
        return false;
    }
    let n = Number::int(dimension as i64);
    let (Some(inv_q), Some(inv_r)) = (q.reciprocal(), Number::int(1).div(r)) else {
        return false;
    };
    let lhs = Number::int(2).mul(inv_q).add(n.mul(inv_r));
    let rhs = Number::ratio(dimension as i64, 2);
    if !lhs.approx_eq(&rhs) {
        return false;
    }
    let two = Number::int(2);
    if r.compare(&two) == Ordering::Less && !r.approx_eq(&two) {
        return false;
    }
    if dimension >= 3 {
        let upper = Number::ratio(2 * dimension as i64, dimension as i64 - 2);
        r.compare(&upper) != Ordering::Greater || r.approx_eq(&upper)
    } else {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentSet {
    pub q0: Number,
    pub r0: Number,
    pub rbar: Number,
}

/// q₀ = 2(N+2)(b+1)/(bN+N−2), r₀ = 2N(N+2)(b+1)/(N²+bN²+4), r̄ = 2(N+2)/(N−2).
pub fn exponent_set(params: &ModelParams) -> Result<ExponentSet> {
    let n_raw = params.dimension as i64;
    if n_raw < 3 {
        return Err(InlsError::DimensionUnsupported(
            params.dimension,
            "exponent set needs N >= 3",
        ));
    }
    let n = Number::int(n_raw);
    let b = params.b;
    let one = Number::int(1);
    let two = Number::int(2);
    let n_plus_2 = n.add(two);
    let b_plus_1 = b.add(one);
    let degenerate = || InlsError::Parameter("vanishing denominator in exponent set".into());

    let q0 = two
        .mul(n_plus_2)
        .mul(b_plus_1)
        .div(b.mul(n).add(n).sub(two))
        .ok_or_else(degenerate)?;
    let n_sq = n.mul(n);
    let r0 = two
        .mul(n)
        .mul(n_plus_2)
        .mul(b_plus_1)
        .div(n_sq.add(b.mul(n_sq)).add(Number::int(4)))
        .ok_or_else(degenerate)?;
    let rbar = two.mul(n_plus_2).div(n.sub(two)).ok_or_else(degenerate)?;
    Ok(ExponentSet { q0, r0, rbar })
}

/// Rescales a field by the equation's symmetry,
/// `u(t, x) ↦ λ^{(2−b)/α} u(λ²t, λx)`, resampling by trigonometric
/// interpolation. The returned field carries time `t/λ²`.
///
/// Fails with [`InlsError::Truncation`] when the rescaled field would need
/// data from outside the box (or would push data out of it).
pub fn scaling_transform(u: &FieldState, lambda: f64, params: &ModelParams) -> Result<FieldState> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(InlsError::Domain(format!("lambda = {lambda} must be positive")));
    }
    let amplitude = lambda.powf(params.scaling_exponent());
    let mut out = crate::field::resample_dilated(u, lambda)?;
    out.scale(amplitude);
    out.set_time(u.time() / (lambda * lambda));
    Ok(out)
}
