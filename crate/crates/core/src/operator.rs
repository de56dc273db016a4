//! Finite tridiagonal boxes for the half-line and whole-line operators.
//!
//! All boxes have unit hopping; the potential sits on the diagonal. A
//! boundary condition cos(α)φ(0) + sin(α)φ(1) = 0 at the left end of the
//! half-line is eliminated into a diagonal correction −tan(α) at site 1
//! (α = 0 is Dirichlet). Artificial edges are truncated with Dirichlet
//! conditions; box size is carried alongside so downstream reports can state
//! it with every spectral output.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::symbolic::{DigitSequence, TwoSidedDigitSequence};

/// Boundary condition cos(α)φ(0) + sin(α)φ(1) = 0, α ∈ [0, π) \ {π/2}.
///
/// α = π/2 forces φ(1) = 0, which is a re-indexed Dirichlet problem rather
/// than a diagonal correction, so it is rejected; re-pose it on sites ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition {
    alpha: f64,
}

impl BoundaryCondition {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::PI).contains(&alpha) {
            return Err(Error::invalid(
                "alpha",
                format!("must lie in [0, π), got {alpha}"),
            ));
        }
        if alpha == std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid(
                "alpha",
                "α = π/2 forces φ(1) = 0; re-pose as a Dirichlet problem on sites ≥ 2",
            ));
        }
        Ok(Self { alpha })
    }

    pub fn dirichlet() -> Self {
        Self { alpha: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Diagonal correction at site 1 after eliminating φ(0): −tan(α).
    pub fn diagonal_correction(&self) -> f64 {
        -self.alpha.tan()
    }
}

/// Symmetric tridiagonal operator with unit off-diagonals on a contiguous
/// site range; immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    diagonal: Vec<f64>,
    site_lo: i64,
    boundary_alpha: Option<f64>,
}

impl TridiagonalOperator {
    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Inclusive site range [n_lo, n_hi].
    pub fn site_range(&self) -> (i64, i64) {
        (self.site_lo, self.site_lo + self.diagonal.len() as i64 - 1)
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// α of the eliminated left boundary condition, when one was applied.
    pub fn boundary_alpha(&self) -> Option<f64> {
        self.boundary_alpha
    }

    /// out = H·psi with Dirichlet truncation at both ends.
    pub fn apply(&self, psi: &[f64], out: &mut [f64]) {
        let n = self.diagonal.len();
        assert_eq!(psi.len(), n);
        assert_eq!(out.len(), n);
        for i in 0..n {
            let mut v = self.diagonal[i] * psi[i];
            if i > 0 {
                v += psi[i - 1];
            }
            if i + 1 < n {
                v += psi[i + 1];
            }
            out[i] = v;
        }
    }

    /// Two-column text export: site index and diagonal entry.
    pub fn export_diagonal<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, d) in self.diagonal.iter().enumerate() {
            writeln!(w, "{} {}", self.site_lo + i as i64, d)?;
        }
        Ok(())
    }
}

/// Half-line box on sites 1..=n_sites: d(n) = V(n) except d(1), which picks
/// up the boundary correction −tan(α); Dirichlet truncation on the right.
pub fn build_halfline_box(
    spec: &PotentialSpec,
    omega: &DigitSequence,
    n_sites: usize,
    bc: BoundaryCondition,
) -> TridiagonalOperator {
    assert!(n_sites >= 1, "box needs at least one site");
    let mut diagonal = spec.halfline_window(omega, 1, n_sites as u64);
    diagonal[0] += bc.diagonal_correction();
    TridiagonalOperator {
        diagonal,
        site_lo: 1,
        boundary_alpha: Some(bc.alpha()),
    }
}

/// Whole-line box on sites −half_width..=half_width with Dirichlet
/// truncation at both edges.
pub fn build_wholeline_box(
    spec: &PotentialSpec,
    omega: &TwoSidedDigitSequence,
    half_width: usize,
) -> TridiagonalOperator {
    assert!(half_width >= 1, "box needs at least one site");
    let n = half_width as i64;
    TridiagonalOperator {
        diagonal: spec.wholeline_window(omega, -n, n),
        site_lo: -n,
        boundary_alpha: None,
    }
}

/// Compression to sites 1..=n_hi: the hopping to site 0 is dropped, a
/// rank-one cut that leaves a Dirichlet condition at the left end. The
/// retained diagonal entries are untouched.
pub fn restrict(op: &TridiagonalOperator) -> Result<TridiagonalOperator> {
    let (lo, hi) = op.site_range();
    if lo > 1 || hi < 1 {
        return Err(Error::invalid(
            "site_range",
            format!("[{lo}, {hi}] does not contain site 1"),
        ));
    }
    let start = (1 - lo) as usize;
    Ok(TridiagonalOperator {
        diagonal: op.diagonal[start..].to_vec(),
        site_lo: 1,
        boundary_alpha: Some(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::SamplingFunction;

    fn free_spec() -> PotentialSpec {
        PotentialSpec::new(1.0, SamplingFunction::constant(0.0), 2).unwrap()
    }

    #[test]
    fn free_two_site_box() {
        let omega = DigitSequence::seeded(2, 0).unwrap();
        let op = build_halfline_box(&free_spec(), &omega, 2, BoundaryCondition::dirichlet());
        assert_eq!(op.diagonal(), &[0.0, 0.0]);
        assert_eq!(op.site_range(), (1, 2));
    }

    #[test]
    fn boundary_correction_quarter_pi() {
        let omega = DigitSequence::seeded(2, 0).unwrap();
        let bc = BoundaryCondition::new(std::f64::consts::FRAC_PI_4).unwrap();
        let op = build_halfline_box(&free_spec(), &omega, 3, bc);
        assert!((op.diagonal()[0] + 1.0).abs() < 1e-15);
        assert_eq!(op.diagonal()[1], 0.0);
        assert_eq!(op.diagonal()[2], 0.0);
    }

    #[test]
    fn alpha_validation() {
        assert!(BoundaryCondition::new(-0.1).is_err());
        assert!(BoundaryCondition::new(std::f64::consts::PI).is_err());
        assert!(BoundaryCondition::new(std::f64::consts::FRAC_PI_2).is_err());
        assert!(BoundaryCondition::new(1.2).is_ok());
    }

    #[test]
    fn wholeline_box_and_bounds() {
        let spec = PotentialSpec::new(1.5, SamplingFunction::cosine(), 2).unwrap();
        let omega = TwoSidedDigitSequence::bernoulli(17, 2).unwrap();
        let op = build_wholeline_box(&spec, &omega, 50);
        assert_eq!(op.site_range(), (-50, 50));
        assert_eq!(op.len(), 101);
        for &d in op.diagonal() {
            assert!(d.abs() <= spec.sup_bound() + 1e-15);
        }
    }

    #[test]
    fn restriction_identity_bit_exact() {
        let spec = PotentialSpec::new(2.0, SamplingFunction::cosine(), 2).unwrap();
        for seed in 0..10u64 {
            let omega = TwoSidedDigitSequence::bernoulli(seed, 2).unwrap();
            let whole = build_wholeline_box(&spec, &omega, 200);
            let restricted = restrict(&whole).unwrap();
            let half = build_halfline_box(
                &spec,
                &omega.restrict_to_halfline(),
                200,
                BoundaryCondition::dirichlet(),
            );
            assert_eq!(restricted.site_range(), half.site_range());
            for (a, b) in restricted.diagonal().iter().zip(half.diagonal()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn restrict_one_site() {
        let omega = TwoSidedDigitSequence::bernoulli(1, 2).unwrap();
        let spec = PotentialSpec::new(1.0, SamplingFunction::cosine(), 2).unwrap();
        let whole = build_wholeline_box(&spec, &omega, 1);
        let r = restrict(&whole).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.site_range(), (1, 1));
        assert_eq!(
            r.diagonal()[0].to_bits(),
            spec.wholeline_potential(&omega, 1).to_bits()
        );
    }

    #[test]
    fn restrict_requires_site_one() {
        let op = TridiagonalOperator {
            diagonal: vec![0.0; 5],
            site_lo: 2,
            boundary_alpha: None,
        };
        assert!(restrict(&op).is_err());
        let op = TridiagonalOperator {
            diagonal: vec![0.0; 5],
            site_lo: -10,
            boundary_alpha: None,
        };
        assert!(restrict(&op).is_err());
    }

    #[test]
    fn apply_matches_symmetry() {
        // ⟨e_i, H e_j⟩ = ⟨e_j, H e_i⟩ on a small box.
        let spec = PotentialSpec::new(1.0, SamplingFunction::cosine(), 2).unwrap();
        let omega = DigitSequence::seeded(2, 5).unwrap();
        let op = build_halfline_box(&spec, &omega, 6, BoundaryCondition::dirichlet());
        let n = op.len();
        let mut col = vec![0.0; n];
        let mut mat = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            op.apply(&e, &mut col);
            for (row, &v) in mat.iter_mut().zip(&col) {
                row[j] = v;
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_eq!(mat[i][j], mat[j][i]);
            }
        }
    }

    #[test]
    fn export_two_columns() {
        let omega = DigitSequence::seeded(2, 0).unwrap();
        let op = build_halfline_box(&free_spec(), &omega, 3, BoundaryCondition::dirichlet());
        let mut buf = Vec::new();
        op.export_diagonal(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "1 0\n2 0\n3 0\n");
    }
}
