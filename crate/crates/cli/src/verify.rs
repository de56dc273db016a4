//! The `verify` subcommand: structural identity checks, one pass/fail line
//! each. These are the load-bearing identities of the whole pipeline — the
//! shift/map conjugacy, encode/evaluate round trips, restriction of the
//! whole-line family, cocycle multiplicativity, determinant preservation —
//! plus spot checks against closed forms.

use doubling_core::cocycle::{
    cocycle_property_check, free_gamma, propagate, TransferMatrix,
};
use doubling_core::operator::{
    build_halfline_box, build_wholeline_box, restrict, BoundaryCondition,
};
use doubling_core::potential::{PotentialSpec, SamplingFunction};
use doubling_core::spectral::{eigenvalues, periodic_bands};
use doubling_core::symbolic::{
    circle_map_float, derive_seed, DigitSequence, TwoSidedDigitSequence, ENCODE_CYCLE_CAP,
};

use crate::config::ExperimentConfig;
use crate::CliError;

type Check = (&'static str, fn(&ExperimentConfig) -> Result<(), String>);

fn cosine_spec(lambda: f64, base: u32) -> PotentialSpec {
    PotentialSpec::new(lambda, SamplingFunction::cosine(), base).expect("valid spec")
}

fn conjugacy_exact(cfg: &ExperimentConfig) -> Result<(), String> {
    for i in 0..300u64 {
        let seed = derive_seed(cfg.seed, i);
        let omega = DigitSequence::seeded(cfg.base, seed).map_err(|e| e.to_string())?;
        let depth = 2 + (seed % 120) as u32;
        let lhs = omega.eval_madic(depth).apply_map();
        let rhs = omega.shifted(1).eval_madic(depth - 1);
        if lhs != rhs {
            return Err(format!("T∘D ≠ D∘S at seed {seed}, depth {depth}"));
        }
    }
    Ok(())
}

fn encode_round_trip(cfg: &ExperimentConfig) -> Result<(), String> {
    for i in 0..200u64 {
        let r = derive_seed(cfg.seed, 1_000 + i);
        let q = 2 + r % 60_000;
        let p = (r >> 32) % q;
        let s = DigitSequence::encode(p, q, cfg.base, ENCODE_CYCLE_CAP)
            .map_err(|e| e.to_string())?;
        let (num, den) = s.to_rational().ok_or("expected periodic representation")?;
        if num_bigint_eq(p, q, &num, &den) {
            continue;
        }
        return Err(format!("round trip failed for {p}/{q}"));
    }
    Ok(())
}

fn num_bigint_eq(
    p: u64,
    q: u64,
    num: &num_bigint::BigUint,
    den: &num_bigint::BigUint,
) -> bool {
    num_bigint::BigUint::from(p) * den == num_bigint::BigUint::from(q) * num
}

fn shift_composition(cfg: &ExperimentConfig) -> Result<(), String> {
    let omega = DigitSequence::seeded(cfg.base, cfg.seed).map_err(|e| e.to_string())?;
    for (a, b, n) in [(1u64, 1u64, 1u64), (5, 7, 3), (100, 23, 40), (0, 9, 2)] {
        if omega.shifted(a).shifted(b).digit(n) != omega.digit(n + a + b) {
            return Err(format!("shift composition failed at a={a}, b={b}, n={n}"));
        }
    }
    Ok(())
}

fn bernoulli_determinism(cfg: &ExperimentConfig) -> Result<(), String> {
    let w1 = TwoSidedDigitSequence::bernoulli(cfg.seed, cfg.base).map_err(|e| e.to_string())?;
    let w2 = TwoSidedDigitSequence::bernoulli(cfg.seed, cfg.base).map_err(|e| e.to_string())?;
    for n in -2000i64..=2000 {
        if w1.digit(n) != w2.digit(n) {
            return Err(format!("digit({n}) not reproducible"));
        }
    }
    let ones: u64 = (1..=100_000i64)
        .map(|n| u64::from(w1.digit(n) == cfg.base - 1))
        .sum();
    let freq = ones as f64 / 1e5;
    let expected = 1.0 / f64::from(cfg.base);
    if (freq - expected).abs() > 0.01 {
        return Err(format!("top-digit frequency {freq} vs expected {expected}"));
    }
    Ok(())
}

fn restriction_identity(cfg: &ExperimentConfig) -> Result<(), String> {
    let spec = cosine_spec(cfg.lambda, cfg.base);
    for i in 0..5u64 {
        let omega = TwoSidedDigitSequence::bernoulli(derive_seed(cfg.seed, i), cfg.base)
            .map_err(|e| e.to_string())?;
        let whole = build_wholeline_box(&spec, &omega, 2000);
        let restricted = restrict(&whole).map_err(|e| e.to_string())?;
        let half = build_halfline_box(
            &spec,
            &omega.restrict_to_halfline(),
            2000,
            BoundaryCondition::dirichlet(),
        );
        for (a, b) in restricted.diagonal().iter().zip(half.diagonal()) {
            if a.to_bits() != b.to_bits() {
                return Err(format!("diagonal mismatch: {a} vs {b}"));
            }
        }
    }
    Ok(())
}

fn potential_stationarity(cfg: &ExperimentConfig) -> Result<(), String> {
    let spec = cosine_spec(cfg.lambda, cfg.base);
    let omega = TwoSidedDigitSequence::bernoulli(cfg.seed, cfg.base).map_err(|e| e.to_string())?;
    let shifted = omega.shifted(1);
    for n in -100i64..=100 {
        let a = spec.wholeline_potential(&omega, n + 1);
        let b = spec.wholeline_potential(&shifted, n);
        if a.to_bits() != b.to_bits() {
            return Err(format!("stationarity broken at n = {n}"));
        }
    }
    Ok(())
}

fn nondeterminism_witness(cfg: &ExperimentConfig) -> Result<(), String> {
    let spec = cosine_spec(1.0, cfg.base);
    let omega = TwoSidedDigitSequence::periodic(cfg.base, vec![0]).map_err(|e| e.to_string())?;
    let other = omega.with_digit(1, 1).map_err(|e| e.to_string())?;
    for n in 1..=500i64 {
        if spec.wholeline_potential(&omega, n).to_bits()
            != spec.wholeline_potential(&other, n).to_bits()
        {
            return Err(format!("half-line potentials differ at site {n}"));
        }
    }
    let gap = (spec.wholeline_potential(&omega, 0) - spec.wholeline_potential(&other, 0)).abs();
    if gap < 1e-3 {
        return Err(format!("site-0 values too close: |ΔV(0)| = {gap}"));
    }
    Ok(())
}

fn cocycle_identity(cfg: &ExperimentConfig) -> Result<(), String> {
    let spec = cosine_spec(cfg.lambda, cfg.base);
    for i in 0..20u64 {
        let r = derive_seed(cfg.seed, 2_000 + i);
        let n = 1 + r % 400;
        let m = 1 + (r >> 16) % 400;
        let e = ((r >> 32) & 0xffff) as f64 / 65_535.0 * 8.0 - 4.0;
        let omega =
            DigitSequence::seeded(cfg.base, derive_seed(r, 1)).map_err(|e| e.to_string())?;
        match cocycle_property_check(&spec, &omega, e, n, m) {
            Ok(true) => {}
            Ok(false) => return Err(format!("identity failed at n={n}, m={m}, E={e}")),
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(())
}

fn determinant_drift(cfg: &ExperimentConfig) -> Result<(), String> {
    // Weak coupling keeps the product numerically far from rank one, where
    // the det-1 reconstruction is meaningful.
    let spec = PotentialSpec::new(0.05, SamplingFunction::cosine(), cfg.base)
        .map_err(|e| e.to_string())?;
    let omega = DigitSequence::seeded(cfg.base, cfg.seed).map_err(|e| e.to_string())?;
    let coc = propagate(&spec, &omega, 0.4, 10_000).map_err(|e| e.to_string())?;
    let drift = coc.log_det_deviation().abs();
    if drift > 1e-6 {
        return Err(format!("det drift {drift:.3e} exceeds 1e-6"));
    }
    Ok(())
}

fn free_rate_spot(cfg: &ExperimentConfig) -> Result<(), String> {
    let spec =
        PotentialSpec::new(1.0, SamplingFunction::constant(0.0), cfg.base).map_err(|e| e.to_string())?;
    let omega = DigitSequence::seeded(cfg.base, cfg.seed).map_err(|e| e.to_string())?;
    for (e, expect) in [(3.0, free_gamma(3.0)), (0.0, 0.0)] {
        let coc = propagate(&spec, &omega, e, 20_000).map_err(|e| e.to_string())?;
        let gamma = coc.per_step_exponent();
        if (gamma - expect).abs() > 5e-3 {
            return Err(format!("free γ({e}) = {gamma}, expected {expect}"));
        }
    }
    Ok(())
}

fn one_step_determinant(_cfg: &ExperimentConfig) -> Result<(), String> {
    for (e, v) in [(0.0, 0.0), (3.0, 1.0), (-2.7, 0.4), (11.0, -5.0)] {
        if TransferMatrix::one_step(e, v).det() != 1.0 {
            return Err(format!("det ≠ 1 at E={e}, v={v}"));
        }
    }
    Ok(())
}

fn boundary_correction(_cfg: &ExperimentConfig) -> Result<(), String> {
    let spec = PotentialSpec::new(1.0, SamplingFunction::constant(0.0), 2)
        .map_err(|e| e.to_string())?;
    let omega = DigitSequence::seeded(2, 0).map_err(|e| e.to_string())?;
    let bc = BoundaryCondition::new(std::f64::consts::FRAC_PI_4).map_err(|e| e.to_string())?;
    let op = build_halfline_box(&spec, &omega, 3, bc);
    if (op.diagonal()[0] + 1.0).abs() > 1e-15 {
        return Err(format!("site-1 correction {}, expected −tan(π/4)", op.diagonal()[0]));
    }
    if BoundaryCondition::new(std::f64::consts::FRAC_PI_2).is_ok() {
        return Err("α = π/2 must be rejected".into());
    }
    Ok(())
}

fn precision_collapse(cfg: &ExperimentConfig) -> Result<(), String> {
    let mut theta = 1.0 / 3.0;
    let mut collapse = None;
    for step in 1..=80u32 {
        theta = circle_map_float(theta, 2);
        if theta == 0.0 {
            collapse = Some(step);
            break;
        }
    }
    let Some(step) = collapse else {
        return Err("float orbit of 1/3 did not collapse within 80 steps".into());
    };
    if step > 64 {
        return Err(format!("collapse at step {step} > 64"));
    }
    // The symbolic orbit tracks the exact long-division orbit.
    let omega = DigitSequence::encode(1, 3, cfg.base, ENCODE_CYCLE_CAP)
        .map_err(|e| e.to_string())?;
    let depth = doubling_core::symbolic::float_depth(cfg.base);
    let mut p = 1u64;
    let q = 3u64;
    for n in 0..10_000u64 {
        let exact = p as f64 / q as f64;
        let symbolic = omega.shifted(n).eval_float(depth);
        if (symbolic - exact).abs() > 1e-12 {
            return Err(format!("symbolic orbit off at step {n}"));
        }
        p = (p * u64::from(cfg.base)) % q;
    }
    Ok(())
}

fn free_box_eigenvalues(_cfg: &ExperimentConfig) -> Result<(), String> {
    let spec = PotentialSpec::new(1.0, SamplingFunction::constant(0.0), 2)
        .map_err(|e| e.to_string())?;
    let omega = DigitSequence::seeded(2, 0).map_err(|e| e.to_string())?;
    let op = build_halfline_box(&spec, &omega, 5, BoundaryCondition::dirichlet());
    let vals = eigenvalues(&op).map_err(|e| e.to_string())?;
    for (k, v) in (1..=5).rev().zip(&vals) {
        let exact = 2.0 * (k as f64 * std::f64::consts::PI / 6.0).cos();
        if (v - exact).abs() > 1e-10 {
            return Err(format!("free 5-box eigenvalue {v} vs {exact}"));
        }
    }
    Ok(())
}

fn free_band(_cfg: &ExperimentConfig) -> Result<(), String> {
    let spec = PotentialSpec::new(1.0, SamplingFunction::constant(0.0), 2)
        .map_err(|e| e.to_string())?;
    let omega = DigitSequence::periodic(2, vec![], vec![0]).map_err(|e| e.to_string())?;
    let set = periodic_bands(&spec, &omega).map_err(|e| e.to_string())?;
    if set.bands().len() != 1 {
        return Err(format!("expected one band, got {}", set.bands().len()));
    }
    let band = set.bands()[0];
    if (band.lo + 2.0).abs() > 1e-8 || (band.hi - 2.0).abs() > 1e-8 {
        return Err(format!("free band [{}, {}]", band.lo, band.hi));
    }
    Ok(())
}

const CHECKS: &[Check] = &[
    ("conjugacy: map ∘ code = code ∘ shift (exact)", conjugacy_exact),
    ("encode/evaluate round trip on rationals", encode_round_trip),
    ("shift composition", shift_composition),
    ("bernoulli stream determinism and frequency", bernoulli_determinism),
    ("restriction identity (bit-exact diagonals)", restriction_identity),
    ("potential stationarity under shift", potential_stationarity),
    ("non-determinism witness at site 0", nondeterminism_witness),
    ("cocycle multiplicativity", cocycle_identity),
    ("one-step determinant = 1", one_step_determinant),
    ("determinant reconstruction (weak coupling)", determinant_drift),
    ("free Lyapunov closed form", free_rate_spot),
    ("boundary condition correction", boundary_correction),
    ("float precision collapse vs symbolic orbit", precision_collapse),
    ("free-box eigenvalues", free_box_eigenvalues),
    ("free band [−2, 2]", free_band),
];

pub fn run(config: &ExperimentConfig) -> Result<(), CliError> {
    let mut failures = 0usize;
    for (name, check) in CHECKS {
        match check(config) {
            Ok(()) => println!("PASS  {name}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failures > 0 {
        return Err(CliError::Validation(format!(
            "{failures} of {} checks failed",
            CHECKS.len()
        )));
    }
    println!("all {} checks passed", CHECKS.len());
    Ok(())
}
