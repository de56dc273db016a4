//! Sampling functions on the circle and the ergodic potentials they generate.
//!
//! A potential site value is V(n) = λ·f(θ_n) where θ_n is obtained by digit
//! shifts, never by floating multiplication: on the half-line θ_n = D(Sⁿω),
//! and on the whole line site n reads the digit tail starting at index n+1,
//! so that restricting to ℤ₊ reproduces the half-line family bit-exactly.

use crate::error::{Error, Result};
use crate::symbolic::{float_depth, CirclePoint, DigitSequence, TwoSidedDigitSequence};

/// Bounded sampling function f on [0, 1).
///
/// Step and table kinds evaluate by half-open interval membership [a, b);
/// table cells are [i/K, (i+1)/K) with a clamp at K−1 guarding θ → 1⁻
/// rounding. The `step` and `table` constructors insist on a non-constant
/// function (at least two distinct values); [`constant`](Self::constant) is
/// the explicit escape hatch for free-potential calibration runs.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplingFunction {
    /// f(θ) = cos(2πθ)
    Cosine,
    /// f(θ) = 1 for θ < threshold, else 0
    Step { threshold: f64 },
    /// Piecewise constant on a uniform partition of [0, 1).
    Table { values: Vec<f64> },
}

impl SamplingFunction {
    pub fn cosine() -> Self {
        SamplingFunction::Cosine
    }

    pub fn step(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::invalid(
                "threshold",
                format!("must lie in (0, 1), got {threshold}"),
            ));
        }
        Ok(SamplingFunction::Step { threshold })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("table", "must be non-empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("table", "values must be finite"));
        }
        if values.iter().all(|&v| v == values[0]) {
            return Err(Error::invalid(
                "table",
                "must attain at least two distinct values; use constant() if a flat table is wanted",
            ));
        }
        Ok(SamplingFunction::Table { values })
    }

    /// Constant table. Deliberately bypasses the non-constancy validation:
    /// the free potential (f ≡ 0) is the calibration case for every
    /// closed-form oracle in this crate.
    pub fn constant(value: f64) -> Self {
        SamplingFunction::Table {
            values: vec![value],
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            SamplingFunction::Cosine => (std::f64::consts::TAU * theta).cos(),
            SamplingFunction::Step { threshold } => {
                if theta < *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            SamplingFunction::Table { values } => {
                let k = values.len();
                let cell = ((theta * k as f64) as usize).min(k - 1);
                values[cell]
            }
        }
    }

    pub fn eval_point(&self, theta: &CirclePoint) -> f64 {
        self.eval(theta.value())
    }

    /// sup |f|, exact for every kind.
    pub fn sup_abs(&self) -> f64 {
        match self {
            SamplingFunction::Cosine => 1.0,
            SamplingFunction::Step { .. } => 1.0,
            SamplingFunction::Table { values } => {
                values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
        }
    }

    pub fn is_non_constant(&self) -> bool {
        match self {
            SamplingFunction::Cosine | SamplingFunction::Step { .. } => true,
            SamplingFunction::Table { values } => values.iter().any(|&v| v != values[0]),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SamplingFunction::Cosine => "cosine",
            SamplingFunction::Step { .. } => "step",
            SamplingFunction::Table { .. } => "table",
        }
    }
}

/// Coupling, sampling function, and digit base: everything that defines the
/// potential family.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    lambda: f64,
    f: SamplingFunction,
    base: u32,
    eval_depth: u32,
}

impl PotentialSpec {
    pub fn new(lambda: f64, f: SamplingFunction, base: u32) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("coupling must be positive and finite, got {lambda}"),
            ));
        }
        if base < 2 {
            return Err(Error::invalid("base", format!("must be ≥ 2, got {base}")));
        }
        Ok(Self {
            lambda,
            f,
            base,
            eval_depth: float_depth(base),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sampling_function(&self) -> &SamplingFunction {
        &self.f
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Truncation depth used for floating evaluation of D.
    pub fn eval_depth(&self) -> u32 {
        self.eval_depth
    }

    /// λ·sup|f|: bound on |V(n)| over all sites.
    pub fn sup_bound(&self) -> f64 {
        self.lambda * self.f.sup_abs()
    }

    /// Gershgorin enclosure [−2 − λ·sup|f|, 2 + λ·sup|f|] of every finite box.
    pub fn enclosure(&self) -> (f64, f64) {
        let b = self.sup_bound();
        (-2.0 - b, 2.0 + b)
    }

    /// Half-line potential V(n) = λ·f(D(Sⁿω)) at site n ≥ 1.
    pub fn halfline_potential(&self, omega: &DigitSequence, n: u64) -> f64 {
        assert!(n >= 1, "half-line sites start at 1");
        debug_assert_eq!(omega.base(), self.base);
        self.lambda * self.f.eval(omega.tail_float(n, self.eval_depth))
    }

    /// Whole-line potential at site n ∈ ℤ; reads digits from index n+1 on,
    /// so the restriction to sites n ≥ 1 equals the half-line potential of
    /// the restricted digit stream, floating-point bit for bit.
    pub fn wholeline_potential(&self, omega: &TwoSidedDigitSequence, n: i64) -> f64 {
        debug_assert_eq!(omega.base(), self.base);
        self.lambda * self.f.eval(omega.tail_float(n, self.eval_depth))
    }

    /// V(n_lo), …, V(n_hi) on the half-line, materialized once for hot loops.
    pub fn halfline_window(&self, omega: &DigitSequence, n_lo: u64, n_hi: u64) -> Vec<f64> {
        assert!(n_lo >= 1 && n_lo <= n_hi);
        (n_lo..=n_hi)
            .map(|n| self.halfline_potential(omega, n))
            .collect()
    }

    /// V(n_lo), …, V(n_hi) on the whole line.
    pub fn wholeline_window(
        &self,
        omega: &TwoSidedDigitSequence,
        n_lo: i64,
        n_hi: i64,
    ) -> Vec<f64> {
        assert!(n_lo <= n_hi);
        (n_lo..=n_hi)
            .map(|n| self.wholeline_potential(omega, n))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_values() {
        let f = SamplingFunction::cosine();
        assert_eq!(f.eval(0.0), 1.0);
        assert!((f.eval(1.0 / 3.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_half_open() {
        let f = SamplingFunction::step(0.5).unwrap();
        assert_eq!(f.eval(0.4999), 1.0);
        assert_eq!(f.eval(0.5), 0.0);
    }

    #[test]
    fn table_cells_and_clamp() {
        let f = SamplingFunction::table(vec![-1.0, 1.0]).unwrap();
        assert_eq!(f.eval(0.0), -1.0);
        assert_eq!(f.eval(0.499999), -1.0);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(0.999_999_999_999_999_9), 1.0);
    }

    #[test]
    fn constructors_validate() {
        assert!(SamplingFunction::step(0.0).is_err());
        assert!(SamplingFunction::step(1.0).is_err());
        assert!(SamplingFunction::table(vec![]).is_err());
        assert!(SamplingFunction::table(vec![2.0, 2.0]).is_err());
        assert!(SamplingFunction::table(vec![f64::NAN]).is_err());
        assert!(!SamplingFunction::constant(0.0).is_non_constant());
        assert!(PotentialSpec::new(0.0, SamplingFunction::cosine(), 2).is_err());
        assert!(PotentialSpec::new(-1.0, SamplingFunction::cosine(), 2).is_err());
        assert!(PotentialSpec::new(1.0, SamplingFunction::cosine(), 1).is_err());
    }

    #[test]
    fn halfline_orbit_of_one_third() {
        // θ = 1/3 has orbit {2/3, 1/3, 2/3, …}; cos(2π·2/3) = cos(2π/3) = −1/2.
        let spec = PotentialSpec::new(1.0, SamplingFunction::cosine(), 2).unwrap();
        let omega = DigitSequence::encode(1, 3, 2, 64).unwrap();
        assert!((spec.halfline_potential(&omega, 1) + 0.5).abs() < 1e-12);
        assert!((spec.halfline_potential(&omega, 2) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_table_gives_flat_potential() {
        let spec = PotentialSpec::new(2.0, SamplingFunction::constant(0.0), 2).unwrap();
        let omega = DigitSequence::seeded(2, 3).unwrap();
        for n in 1..=100 {
            assert_eq!(spec.halfline_potential(&omega, n), 0.0);
        }
    }

    #[test]
    fn boundedness() {
        let spec = PotentialSpec::new(1.7, SamplingFunction::cosine(), 2).unwrap();
        let omega = TwoSidedDigitSequence::bernoulli(9, 2).unwrap();
        for n in -200..=200 {
            assert!(spec.wholeline_potential(&omega, n).abs() <= spec.sup_bound() + 1e-15);
        }
    }

    #[test]
    fn stationarity_under_shift() {
        let spec = PotentialSpec::new(1.3, SamplingFunction::cosine(), 2).unwrap();
        let omega = TwoSidedDigitSequence::bernoulli(21, 2).unwrap();
        let shifted = omega.shifted(1);
        for n in -50..=50 {
            assert_eq!(
                spec.wholeline_potential(&omega, n + 1).to_bits(),
                spec.wholeline_potential(&shifted, n).to_bits()
            );
        }
    }

    #[test]
    fn restriction_consistency_bit_exact() {
        let spec = PotentialSpec::new(2.0, SamplingFunction::cosine(), 2).unwrap();
        let omega = TwoSidedDigitSequence::bernoulli(4711, 2).unwrap();
        let half = omega.restrict_to_halfline();
        for n in 1..=500u64 {
            assert_eq!(
                spec.wholeline_potential(&omega, n as i64).to_bits(),
                spec.halfline_potential(&half, n).to_bits()
            );
        }
    }

    #[test]
    fn halfline_site_value_is_shift_then_evaluate() {
        let spec = PotentialSpec::new(1.0, SamplingFunction::cosine(), 2).unwrap();
        let omega = DigitSequence::seeded(2, 8).unwrap();
        let n = 17u64;
        let via_shift = spec.lambda()
            * spec
                .sampling_function()
                .eval(omega.shifted(n).eval_float(spec.eval_depth()));
        assert_eq!(
            spec.halfline_potential(&omega, n).to_bits(),
            via_shift.to_bits()
        );
    }

    #[test]
    fn nondeterminism_witness() {
        // Two whole-line streams that agree except at digit index 1 share the
        // potential on every site n ≥ 1 but differ at site 0: site 0 reads
        // digits 1, 2, …, while sites n ≥ 1 read digits from n+1 on. This is
        // the two-to-one collapse of the circle map seen at the potential level.
        for f in [
            SamplingFunction::cosine(),
            SamplingFunction::step(0.5).unwrap(),
        ] {
            let spec = PotentialSpec::new(1.0, f, 2).unwrap();
            let omega = TwoSidedDigitSequence::periodic(2, vec![0]).unwrap();
            let other = omega.with_digit(1, 1).unwrap();
            for n in 1..=200 {
                assert_eq!(
                    spec.wholeline_potential(&omega, n).to_bits(),
                    spec.wholeline_potential(&other, n).to_bits()
                );
            }
            let v0 = spec.wholeline_potential(&omega, 0);
            let v0_other = spec.wholeline_potential(&other, 0);
            assert!(
                (v0 - v0_other).abs() >= 1e-3,
                "site-0 values {v0} vs {v0_other}"
            );
        }
    }
}
