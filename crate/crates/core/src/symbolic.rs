//! Exact base-m digit streams for circle points and the m-fold map.
//!
//! The map T: θ ↦ mθ mod 1 discards one base-m digit per application, so a
//! floating-point orbit loses one digit of precision per step and collapses
//! onto exact 0 within ~53 steps (base 2). Everything here therefore works
//! on the symbolic side: a circle point is a digit stream ω, the coding map
//!
//!   D(ω) = Σ_{n≥1} ω_n m^{−n}
//!
//! recovers the point, and T is realized as the left shift S, which is exact.
//! Only [`circle_map_float`] iterates T in floating point, and it exists
//! solely to demonstrate the precision collapse; no estimator uses it.
//!
//! Digit streams come in two flavors: an explicit prefix + periodic cycle
//! (eventually periodic expansions, i.e. rationals) and a seeded counter-based
//! stream (fair Bernoulli digits with random access). Both are immutable and
//! give digit n as a pure function of the stored data, so concurrent reads
//! need no synchronization.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Hard cap on prefix + cycle length accepted by [`DigitSequence::encode`].
/// Long division must close its remainder cycle within this many digits.
pub const ENCODE_CYCLE_CAP: usize = 1 << 16;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; the keyed counter stream below is built on it.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic sub-seed for batch element `index`: used wherever a run
/// fans out into independent sample streams so that sample i depends only
/// on (seed, i), never on execution order.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Bijection ℤ → ℕ used to key signed digit indices:
/// 0, 1, −1, 2, −2, … ↦ 0, 1, 2, 3, 4, …
///
/// The single value i64::MIN would need counter 2⁶⁴ and is excluded from
/// the index domain.
fn counter_for_index(index: i64) -> u64 {
    debug_assert!(index != i64::MIN, "digit index out of domain");
    let i = index as i128;
    let c = if i > 0 { 2 * i - 1 } else { -2 * i };
    c as u64
}

/// Uniform digit in [0, base) as a pure function of (seed, index).
///
/// The 64-bit hash word is mapped to a digit by widening multiply; the
/// resulting bias is below base·2⁻⁶⁴, invisible at any tested resolution.
fn bernoulli_digit(seed: u64, base: u32, index: i64) -> u32 {
    let counter = counter_for_index(index);
    let word = splitmix64(seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA)));
    ((u128::from(word) * u128::from(base)) >> 64) as u32
}

/// Smallest depth k with base^k ≥ 2⁶⁴: the default truncation depth for
/// floating evaluation of D, past double-precision resolution.
pub fn float_depth(base: u32) -> u32 {
    debug_assert!(base >= 2);
    let target = 1u128 << 64;
    let mut acc = 1u128;
    let mut k = 0u32;
    while acc < target {
        acc = acc.saturating_mul(u128::from(base));
        k += 1;
    }
    k
}

fn check_base(base: u32) -> Result<()> {
    if base < 2 {
        return Err(Error::invalid("base", format!("must be ≥ 2, got {base}")));
    }
    Ok(())
}

fn check_digits(digits: &[u32], base: u32) -> Result<()> {
    if let Some(&d) = digits.iter().find(|&&d| d >= base) {
        return Err(Error::invalid(
            "digit",
            format!("digit {d} out of range for base {base}"),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Two-sided sequences
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum WholeRepr {
    /// Fair Bernoulli digits keyed on (seed, index).
    Seeded { seed: u64 },
    /// Purely periodic: digit(n) = cycle[n mod p].
    Periodic { cycle: Vec<u32> },
}

/// A two-sided digit stream ω ∈ {0,…,m−1}^ℤ with random access.
///
/// Shifts are represented by an index offset and finitely many explicit digit
/// overrides may be installed with [`with_digit`](Self::with_digit) (used to
/// build pairs of sample points sharing a half-line potential).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedDigitSequence {
    base: u32,
    repr: WholeRepr,
    offset: i64,
    /// Sorted (index, digit) replacements, keyed on the public index.
    overrides: Vec<(i64, u32)>,
}

impl TwoSidedDigitSequence {
    /// Fair Bernoulli stream: digit(n) uniform on {0,…,base−1}, independent
    /// across n, and a pure function of (seed, n).
    pub fn bernoulli(seed: u64, base: u32) -> Result<Self> {
        check_base(base)?;
        Ok(Self {
            base,
            repr: WholeRepr::Seeded { seed },
            offset: 0,
            overrides: Vec::new(),
        })
    }

    /// Purely periodic two-sided stream: digit(n) = cycle[n mod p].
    pub fn periodic(base: u32, cycle: Vec<u32>) -> Result<Self> {
        check_base(base)?;
        if cycle.is_empty() {
            return Err(Error::invalid("cycle", "must be non-empty"));
        }
        check_digits(&cycle, base)?;
        Ok(Self {
            base,
            repr: WholeRepr::Periodic { cycle },
            offset: 0,
            overrides: Vec::new(),
        })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Digit at index n ∈ ℤ. Pure: repeated queries return identical values.
    pub fn digit(&self, n: i64) -> u32 {
        if let Ok(i) = self.overrides.binary_search_by_key(&n, |&(k, _)| k) {
            return self.overrides[i].1;
        }
        let raw = n.checked_add(self.offset).expect("digit index overflow");
        match &self.repr {
            WholeRepr::Seeded { seed } => bernoulli_digit(*seed, self.base, raw),
            WholeRepr::Periodic { cycle } => {
                let p = cycle.len() as i64;
                cycle[raw.rem_euclid(p) as usize]
            }
        }
    }

    /// Shifted stream: result.digit(n) = self.digit(n + steps).
    pub fn shifted(&self, steps: i64) -> Self {
        let overrides = self
            .overrides
            .iter()
            .map(|&(i, d)| (i - steps, d))
            .collect();
        Self {
            base: self.base,
            repr: self.repr.clone(),
            offset: self.offset + steps,
            overrides,
        }
    }

    /// Copy with the digit at `index` replaced.
    pub fn with_digit(&self, index: i64, digit: u32) -> Result<Self> {
        if digit >= self.base {
            return Err(Error::invalid(
                "digit",
                format!("digit {digit} out of range for base {}", self.base),
            ));
        }
        let mut out = self.clone();
        match out.overrides.binary_search_by_key(&index, |&(k, _)| k) {
            Ok(i) => out.overrides[i].1 = digit,
            Err(i) => out.overrides.insert(i, (index, digit)),
        }
        Ok(out)
    }

    /// One-sided tail {ω_n}_{n≥1}: result.digit(n) = self.digit(n) for n ≥ 1.
    pub fn restrict_to_halfline(&self) -> DigitSequence {
        if self.overrides.is_empty() {
            if let WholeRepr::Periodic { cycle } = &self.repr {
                let p = cycle.len() as i64;
                let rotated: Vec<u32> = (0..cycle.len() as i64)
                    .map(|j| cycle[(j + 1 + self.offset).rem_euclid(p) as usize])
                    .collect();
                return DigitSequence {
                    base: self.base,
                    repr: HalfRepr::Periodic {
                        prefix: Vec::new(),
                        cycle: rotated,
                    },
                };
            }
        }
        DigitSequence {
            base: self.base,
            repr: HalfRepr::Stream(Box::new(self.clone())),
        }
    }

    /// D(S^offset ω) truncated at `depth`: Σ_{k=1}^{depth} digit(offset+k)·m^{−k},
    /// evaluated by Horner recursion in double precision.
    pub fn tail_float(&self, offset: i64, depth: u32) -> f64 {
        let base = f64::from(self.base);
        let mut acc = 0.0;
        for k in (1..=i64::from(depth)).rev() {
            acc = (acc + f64::from(self.digit(offset + k))) / base;
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// One-sided sequences
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum HalfRepr {
    /// Explicit prefix then repeating cycle (index 1 is prefix[0]).
    Periodic { prefix: Vec<u32>, cycle: Vec<u32> },
    /// View of a two-sided stream at indices n ≥ 1.
    Stream(Box<TwoSidedDigitSequence>),
}

/// A one-sided digit stream ω ∈ {0,…,m−1}^{ℤ₊}, indexed from n = 1.
///
/// This is the symbolic encoding of θ = D(ω); the m-fold map acts on it as
/// [`shifted`](Self::shifted). Rationals get the eventually-periodic
/// representation from [`encode`](Self::encode); sampled points are
/// restrictions of two-sided Bernoulli streams.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitSequence {
    base: u32,
    repr: HalfRepr,
}

impl DigitSequence {
    /// Explicit eventually-periodic sequence: digits 1..=len(prefix) from
    /// `prefix`, then `cycle` repeating forever.
    pub fn periodic(base: u32, prefix: Vec<u32>, cycle: Vec<u32>) -> Result<Self> {
        check_base(base)?;
        if cycle.is_empty() {
            return Err(Error::invalid("cycle", "must be non-empty"));
        }
        check_digits(&prefix, base)?;
        check_digits(&cycle, base)?;
        Ok(Self {
            base,
            repr: HalfRepr::Periodic { prefix, cycle },
        })
    }

    /// Seeded Bernoulli stream restricted to n ≥ 1.
    pub fn seeded(base: u32, seed: u64) -> Result<Self> {
        Ok(TwoSidedDigitSequence::bernoulli(seed, base)?.restrict_to_halfline())
    }

    /// Base-m expansion of the rational p/q ∈ [0,1) by long division.
    ///
    /// The remainder sequence of the division is tracked until it repeats,
    /// which yields the exact prefix + cycle. Expansions that terminate are
    /// returned in the terminating form (trailing zero cycle), so ambiguous
    /// representations like 0.0111… / 0.1000… resolve to the latter and this
    /// is a function of the value. Fails if prefix + cycle would exceed
    /// `max_depth` (itself capped at [`ENCODE_CYCLE_CAP`]).
    pub fn encode(numer: u64, denom: u64, base: u32, max_depth: usize) -> Result<Self> {
        check_base(base)?;
        if denom == 0 {
            return Err(Error::invalid("value", "denominator must be nonzero"));
        }
        if numer >= denom {
            return Err(Error::invalid(
                "value",
                format!("{numer}/{denom} must lie in [0, 1)"),
            ));
        }
        if max_depth == 0 {
            return Err(Error::invalid("depth", "must be ≥ 1"));
        }
        let cap = max_depth.min(ENCODE_CYCLE_CAP);

        let mut seen: HashMap<u64, usize> = HashMap::new();
        let mut digits: Vec<u32> = Vec::new();
        let mut r = numer;
        loop {
            if r == 0 {
                // Terminating expansion.
                return Self::periodic(base, digits, vec![0]);
            }
            if let Some(&start) = seen.get(&r) {
                let cycle = digits.split_off(start);
                return Self::periodic(base, digits, cycle);
            }
            if digits.len() >= cap {
                return Err(Error::invalid(
                    "depth",
                    format!("no repeating cycle within {cap} digits of {numer}/{denom}"),
                ));
            }
            seen.insert(r, digits.len());
            let scaled = u128::from(r) * u128::from(base);
            digits.push((scaled / u128::from(denom)) as u32);
            r = (scaled % u128::from(denom)) as u64;
        }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Digit at index n ≥ 1. Pure: repeated queries return identical values.
    pub fn digit(&self, n: u64) -> u32 {
        assert!(n >= 1, "one-sided digit index starts at 1");
        match &self.repr {
            HalfRepr::Periodic { prefix, cycle } => {
                let idx = (n - 1) as usize;
                if idx < prefix.len() {
                    prefix[idx]
                } else {
                    cycle[(idx - prefix.len()) % cycle.len()]
                }
            }
            HalfRepr::Stream(inner) => {
                inner.digit(i64::try_from(n).expect("digit index overflow"))
            }
        }
    }

    /// Left shift: result.digit(n) = self.digit(n + steps). Periodic
    /// representations stay periodic with the same cycle length.
    pub fn shifted(&self, steps: u64) -> Self {
        match &self.repr {
            HalfRepr::Periodic { prefix, cycle } => {
                let s = steps as usize;
                let (prefix, cycle) = if s <= prefix.len() {
                    (prefix[s..].to_vec(), cycle.clone())
                } else {
                    let r = (s - prefix.len()) % cycle.len();
                    let mut rotated = cycle[r..].to_vec();
                    rotated.extend_from_slice(&cycle[..r]);
                    (Vec::new(), rotated)
                };
                Self {
                    base: self.base,
                    repr: HalfRepr::Periodic { prefix, cycle },
                }
            }
            HalfRepr::Stream(inner) => Self {
                base: self.base,
                repr: HalfRepr::Stream(Box::new(
                    inner.shifted(i64::try_from(steps).expect("shift overflow")),
                )),
            },
        }
    }

    /// (prefix length, cycle length) for periodic representations.
    pub fn period(&self) -> Option<(usize, usize)> {
        match &self.repr {
            HalfRepr::Periodic { prefix, cycle } => Some((prefix.len(), cycle.len())),
            HalfRepr::Stream(_) => None,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.repr, HalfRepr::Periodic { .. })
    }

    /// D(Sⁿω) truncated at `depth`, in double precision.
    ///
    /// Identical floating operations to `self.shifted(n).eval_float(depth)`,
    /// without building the shifted sequence.
    pub fn tail_float(&self, n: u64, depth: u32) -> f64 {
        let base = f64::from(self.base);
        let mut acc = 0.0;
        for k in (1..=u64::from(depth)).rev() {
            acc = (acc + f64::from(self.digit(n + k))) / base;
        }
        acc
    }

    /// D(ω) truncated at `depth`, in double precision.
    pub fn eval_float(&self, depth: u32) -> f64 {
        self.tail_float(0, depth)
    }

    /// D(ω) truncated at `depth` as the exact m-adic rational
    /// (Σ_{n=1}^{depth} ω_n m^{depth−n}) / m^{depth}.
    pub fn eval_madic(&self, depth: u32) -> MadicPoint {
        let base = BigUint::from(self.base);
        let mut num = BigUint::zero();
        for n in 1..=u64::from(depth) {
            num = num * &base + BigUint::from(self.digit(n));
        }
        MadicPoint {
            base: self.base,
            numerator: num,
            depth,
        }
    }

    /// Exact value Σ ω_n m^{−n} as an unreduced rational (numerator,
    /// denominator), for periodic representations: the prefix contributes
    /// A/m^ℓ and the cycle a geometric series C/(m^ℓ(m^p − 1)).
    pub fn to_rational(&self) -> Option<(BigUint, BigUint)> {
        let HalfRepr::Periodic { prefix, cycle } = &self.repr else {
            return None;
        };
        let base = BigUint::from(self.base);
        let digits_value = |ds: &[u32]| {
            ds.iter()
                .fold(BigUint::zero(), |acc, &d| acc * &base + BigUint::from(d))
        };
        let a = digits_value(prefix);
        let c = digits_value(cycle);
        let m_l = base.pow(prefix.len() as u32);
        let m_p_minus_1 = base.pow(cycle.len() as u32) - BigUint::one();
        let numerator = a * &m_p_minus_1 + c;
        let denominator = m_l * m_p_minus_1;
        Some((numerator, denominator))
    }
}

// ---------------------------------------------------------------------------
// Circle points and the m-fold map
// ---------------------------------------------------------------------------

/// Exact m-adic rational numerator·base^{−depth} ∈ [0, 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MadicPoint {
    base: u32,
    numerator: BigUint,
    depth: u32,
}

impl MadicPoint {
    pub fn new(base: u32, numerator: BigUint, depth: u32) -> Result<Self> {
        check_base(base)?;
        if numerator >= BigUint::from(base).pow(depth) {
            return Err(Error::invalid(
                "numerator",
                format!("must be < {base}^{depth}"),
            ));
        }
        Ok(Self {
            base,
            numerator,
            depth,
        })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Value as a double, truncated toward zero (error below 2⁻⁶⁴).
    pub fn to_f64(&self) -> f64 {
        if self.numerator.is_zero() {
            return 0.0;
        }
        let denom = BigUint::from(self.base).pow(self.depth);
        let scaled = (&self.numerator << 64u32) / denom;
        scaled.to_u64().expect("madic value < 1 scales into u64") as f64 / 2f64.powi(64)
    }

    /// Exact m-fold map: T(n·m^{−k}) = (n mod m^{k−1})·m^{−(k−1)}.
    /// One digit of depth is consumed per application.
    pub fn apply_map(&self) -> MadicPoint {
        if self.depth == 0 {
            return self.clone();
        }
        let modulus = BigUint::from(self.base).pow(self.depth - 1);
        MadicPoint {
            base: self.base,
            numerator: &self.numerator % modulus,
            depth: self.depth - 1,
        }
    }
}

/// A point on the circle [0, 1): exact m-adic rational or floating
/// approximation with its truncation depth.
#[derive(Debug, Clone, PartialEq)]
pub enum CirclePoint {
    Exact(MadicPoint),
    Float { value: f64, depth: u32 },
}

impl CirclePoint {
    pub fn value(&self) -> f64 {
        match self {
            CirclePoint::Exact(p) => p.to_f64(),
            CirclePoint::Float { value, .. } => *value,
        }
    }
}

/// One floating-point application of θ ↦ mθ mod 1.
///
/// Demonstration path only: each application discards one base-m digit of
/// the mantissa, so iterated orbits of doubles collapse onto exact 0. The
/// estimator pipeline derives every θ-value by digit shifts instead.
pub fn circle_map_float(theta: f64, base: u32) -> f64 {
    (theta * f64::from(base)).fract()
}

/// The m-fold map on a [`CirclePoint`]: exact on the m-adic variant,
/// floating (see [`circle_map_float`]) on the float variant.
pub fn circle_map(point: &CirclePoint, base: u32) -> CirclePoint {
    match point {
        CirclePoint::Exact(p) => {
            debug_assert_eq!(p.base(), base);
            CirclePoint::Exact(p.apply_map())
        }
        CirclePoint::Float { value, depth } => CirclePoint::Float {
            value: circle_map_float(*value, base),
            depth: depth.saturating_sub(1),
        },
    }
}
