//! Exact multiplicative scalars.
//!
//! Every value is a monomial `q^a * z^b` where `q` is a fixed generator of
//! infinite order and `z` is a fixed primitive `N`-th root of unity. This is
//! the subgroup of `k*` the bicharacters in this crate live in; equality and
//! order questions reduce to integer arithmetic.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use thiserror::Error;

/// Default order of the torsion subgroup: lcm(1..10).
pub const DEFAULT_TORSION: u32 = 2520;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("scalars live in different torsion groups (mu_{left} vs mu_{right})")]
    TorsionMismatch { left: u32, right: u32 },
    #[error("torsion order {0} must be positive and even")]
    InvalidTorsion(u32),
    #[error("root of unity of order {order} does not exist in mu_{torsion}")]
    OrderNotDividing { order: u32, torsion: u32 },
    #[error("cannot parse scalar near `{token}`: {message}")]
    Parse { token: String, message: String },
}

/// The order `N` of the torsion part `mu_N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorsionConfig {
    order: u32,
}

impl TorsionConfig {
    pub fn new(order: u32) -> Result<Self, ScalarError> {
        if order == 0 || order % 2 != 0 {
            return Err(ScalarError::InvalidTorsion(order));
        }
        Ok(TorsionConfig { order })
    }

    pub fn order(self) -> u32 {
        self.order
    }

    /// True if `mu_k` is a subgroup of `mu_N`.
    pub fn contains_roots_of_order(self, k: u32) -> bool {
        k != 0 && self.order % k == 0
    }

    pub fn one(self) -> Scalar {
        Scalar { free: 0, tor: 0, n: self.order }
    }

    pub fn minus_one(self) -> Scalar {
        Scalar { free: 0, tor: self.order / 2, n: self.order }
    }

    /// The generic generator `q`.
    pub fn generic(self) -> Scalar {
        Scalar { free: 1, tor: 0, n: self.order }
    }

    /// The fixed primitive `k`-th root of unity `z_k = z_N^(N/k)`.
    pub fn root_of_unity(self, k: u32) -> Result<Scalar, ScalarError> {
        if !self.contains_roots_of_order(k) {
            return Err(ScalarError::OrderNotDividing { order: k, torsion: self.order });
        }
        Ok(Scalar { free: 0, tor: self.order / k, n: self.order })
    }

    pub fn scalar(self, free: i64, tor: i64) -> Scalar {
        Scalar { free, tor: reduce(tor, self.order), n: self.order }
    }

    /// All elements of `mu_m` as scalars, `z_m^0, ..., z_m^(m-1)`.
    pub fn roots_of_unity(self, m: u32) -> Result<Vec<Scalar>, ScalarError> {
        let z = self.root_of_unity(m)?;
        Ok((0..m as i64).map(|e| z.pow(e)).collect())
    }

    pub fn parse(self, text: &str) -> Result<Scalar, ScalarError> {
        parse_scalar(text, self)
    }
}

impl Default for TorsionConfig {
    fn default() -> Self {
        TorsionConfig { order: DEFAULT_TORSION }
    }
}

/// Multiplicative order of a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    Finite(u32),
    Infinite,
}

/// `q^free * z_N^tor` with `tor` reduced into `[0, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scalar {
    free: i64,
    tor: u32,
    n: u32,
}

pub(crate) fn reduce(value: i64, n: u32) -> u32 {
    value.rem_euclid(n as i64) as u32
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Scalar {
    pub fn free_exp(self) -> i64 {
        self.free
    }

    pub fn tor_exp(self) -> u32 {
        self.tor
    }

    pub fn torsion(self) -> TorsionConfig {
        TorsionConfig { order: self.n }
    }

    pub fn is_one(self) -> bool {
        self.free == 0 && self.tor == 0
    }

    pub fn is_minus_one(self) -> bool {
        self.free == 0 && 2 * self.tor == self.n
    }

    pub fn checked_mul(self, rhs: Scalar) -> Result<Scalar, ScalarError> {
        if self.n != rhs.n {
            return Err(ScalarError::TorsionMismatch { left: self.n, right: rhs.n });
        }
        Ok(Scalar {
            free: self.free + rhs.free,
            tor: ((self.tor as u64 + rhs.tor as u64) % self.n as u64) as u32,
            n: self.n,
        })
    }

    pub fn inv(self) -> Scalar {
        Scalar { free: -self.free, tor: reduce(-(self.tor as i64), self.n), n: self.n }
    }

    pub fn pow(self, e: i64) -> Scalar {
        let tor = (self.tor as i128 * e as i128).rem_euclid(self.n as i128) as u32;
        Scalar { free: self.free * e, tor, n: self.n }
    }

    pub fn neg(self) -> Scalar {
        self * self.torsion().minus_one()
    }

    pub fn order(self) -> Order {
        if self.free != 0 {
            return Order::Infinite;
        }
        let n = self.n as u64;
        Order::Finite((n / gcd(n, self.tor as u64)) as u32)
    }

    /// `self` lies in `R_n`, the primitive `n`-th roots of unity.
    pub fn is_primitive_root(self, n: u32) -> bool {
        self.order() == Order::Finite(n)
    }

    /// Substitutes `q := param`, i.e. maps `q^a z^b` to `param^a z^b`.
    pub fn substitute(self, param: Scalar) -> Result<Scalar, ScalarError> {
        let torsion_part = Scalar { free: 0, tor: self.tor, n: self.n };
        param.pow(self.free).checked_mul(torsion_part)
    }

    fn sort_key(self) -> (u32, i64, u32) {
        (self.n, self.free, self.tor)
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl Mul for Scalar {
    type Output = Scalar;

    /// Panics if the operands live in different torsion groups; use
    /// [`Scalar::checked_mul`] when that can happen.
    fn mul(self, rhs: Scalar) -> Scalar {
        self.checked_mul(rhs).expect("scalar torsion mismatch")
    }
}

/// Canonical form: `-`? (`q^e`)? (`zK^e`)? joined by `*`; the torsion part
/// is written as a primitive root of smallest order, pulling out a sign when
/// that root is minus a root of odd order.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n as u64;
        let mut tor = self.tor as u64;
        let mut negative = false;
        let mut order = n / gcd(n, tor);
        if order % 4 == 2 {
            negative = true;
            tor = (tor + n / 2) % n;
            order = n / gcd(n, tor);
        }
        let mut terms = Vec::new();
        match self.free {
            0 => {}
            1 => terms.push("q".to_string()),
            e => terms.push(format!("q^{e}")),
        }
        if order > 1 {
            let e = tor / (n / order);
            if e == 1 {
                terms.push(format!("z{order}"));
            } else {
                terms.push(format!("z{order}^{e}"));
            }
        }
        let sign = if negative { "-" } else { "" };
        if terms.is_empty() {
            write!(f, "{sign}1")
        } else {
            write!(f, "{sign}{}", terms.join("*"))
        }
    }
}

fn parse_error(token: &str, message: &str) -> ScalarError {
    ScalarError::Parse { token: token.to_string(), message: message.to_string() }
}

fn parse_exponent(rest: &str, token: &str) -> Result<i64, ScalarError> {
    if rest.is_empty() {
        return Ok(1);
    }
    let digits = rest
        .strip_prefix('^')
        .ok_or_else(|| parse_error(token, "expected `^` before the exponent"))?;
    digits.parse::<i64>().map_err(|_| parse_error(token, "exponent is not an integer"))
}

/// Parses the scalar literal grammar: optional leading `-`, then `*`-separated
/// terms `1`, `q[^e]` or `zK[^e]`.
pub fn parse_scalar(text: &str, torsion: TorsionConfig) -> Result<Scalar, ScalarError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(parse_error(text, "empty literal"));
    }
    let (negative, body) = match trimmed.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, trimmed),
    };
    let mut value = if negative { torsion.minus_one() } else { torsion.one() };
    for token in body.split('*') {
        let token = token.trim();
        if token == "1" {
            continue;
        }
        if let Some(rest) = token.strip_prefix('q') {
            let e = parse_exponent(rest, token)?;
            value = value * torsion.generic().pow(e);
        } else if let Some(rest) = token.strip_prefix('z') {
            let split = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
            let (order, tail) = rest.split_at(split);
            let order: u32 = order
                .parse()
                .map_err(|_| parse_error(token, "expected root order after `z`"))?;
            let root = torsion.root_of_unity(order).map_err(|_| {
                parse_error(
                    token,
                    &format!("order {order} does not divide torsion order {}", torsion.order()),
                )
            })?;
            let e = parse_exponent(tail, token)?;
            value = value * root.pow(e);
        } else {
            return Err(parse_error(token, "expected `1`, `q` or `zK`"));
        }
    }
    Ok(value)
}

impl FromStr for Scalar {
    type Err = ScalarError;

    /// Parses with the default torsion order.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_scalar(s, TorsionConfig::default())
    }
}
