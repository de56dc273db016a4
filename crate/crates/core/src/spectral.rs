//! Finite-volume spectral computations: a symmetric tridiagonal eigensolver
//! (Sturm bisection for eigenvalues, inverse iteration for eigenvectors),
//! eigenfunction decay and participation diagnostics, and Floquet band
//! computation for periodic digit streams.
//!
//! For a potential of period p the discriminant Δ(E) is the trace of the
//! period-p transfer product; the spectrum is {E : |Δ(E)| ≤ 2}, on which the
//! Lyapunov exponent vanishes. Band edges are located by bisection on
//! |Δ(E)| − 2 between sign changes of a fine scan.

use rayon::prelude::*;

use crate::cocycle::{propagate_with_initial, TransferMatrix};
use crate::error::{Error, Result};
use crate::operator::TridiagonalOperator;
use crate::potential::PotentialSpec;
use crate::symbolic::{splitmix64, DigitSequence};

/// Resource bound on eigensolve box sizes; the solver is O(N²).
pub const MAX_EIGENSOLVE_SITES: usize = 100_000;

/// Default number of scan points for the band-edge search.
pub const DEFAULT_BAND_SCAN_POINTS: usize = 10_000;

/// Default growth constant C in the in-band bound γ̂ ≤ C/n: Floquet products
/// at in-band energies have norms bounded up to algebraic growth at edges.
pub const DEFAULT_GROWTH_CONSTANT: f64 = 20.0;

// ---------------------------------------------------------------------------
// Symmetric tridiagonal eigensolver
// ---------------------------------------------------------------------------

/// Eigenvalue with unit-norm eigenvector over the operator's sites.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub eigenvalue: f64,
    pub eigenvector: Vec<f64>,
}

/// Number of eigenvalues strictly below `x`, via the Sturm sequence of
/// LDLᵀ pivots.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < 1e-300 {
            if q >= 0.0 {
                1e-300
            } else {
                -1e-300
            }
        } else {
            q
        };
        q = (diag[i] - x) - off[i - 1] * off[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin_bounds(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo - 1.0, hi + 1.0)
}

/// All eigenvalues of the symmetric tridiagonal matrix (diag, off),
/// ascending, by per-index Sturm bisection to machine precision.
pub fn symmetric_tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    assert_eq!(off.len(), n - 1, "off-diagonal length mismatch");
    if n == 1 {
        return vec![diag[0]];
    }
    let (lo, hi) = gershgorin_bounds(diag, off);
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut a = lo;
            let mut b = hi;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if (b - a) < 2.0 * f64::EPSILON * mid.abs().max(1.0) {
                    break;
                }
                if sturm_count(diag, off, mid) <= k {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// LU factorization of (T − λI) with partial pivoting, band storage:
/// one sub-diagonal of multipliers and two super-diagonals of U.
struct TridiagLu {
    mult: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    piv: Vec<bool>,
}

impl TridiagLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64, pivmin: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|&x| x - shift).collect();
        let mut mult = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut piv = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= mult[i].abs() {
                if d[i].abs() < pivmin {
                    d[i] = if d[i] < 0.0 { -pivmin } else { pivmin };
                }
                let m = mult[i] / d[i];
                d[i + 1] -= m * du[i];
                mult[i] = m;
            } else {
                // interchange rows i, i+1
                let m = d[i] / mult[i];
                d[i] = mult[i];
                let old_super = du[i];
                let old_diag_next = d[i + 1];
                d[i + 1] = old_super - m * old_diag_next;
                du[i] = old_diag_next;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -m * du2[i];
                }
                mult[i] = m;
                piv[i] = true;
            }
        }
        if d[n - 1].abs() < pivmin {
            d[n - 1] = if d[n - 1] < 0.0 { -pivmin } else { pivmin };
        }
        Self {
            mult,
            d,
            du,
            du2,
            piv,
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.piv[i] {
                x.swap(i, i + 1);
            }
            let xi = x[i];
            x[i + 1] -= self.mult[i] * xi;
        }
        x[n - 1] /= self.d[n - 1];
        if n >= 2 {
            x[n - 2] = (x[n - 2] - self.du[n - 2] * x[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
        x
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn tridiag_residual(diag: &[f64], off: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let n = diag.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut r = (diag[i] - lambda) * x[i];
        if i > 0 {
            r += off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            r += off[i] * x[i + 1];
        }
        acc += r * r;
    }
    acc.sqrt()
}

fn seeded_start_vector(n: usize, key: u64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let w = splitmix64(key.wrapping_add(splitmix64(i as u64 + 1)));
            (w >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let norm = norm2(&v);
    for x in &mut v {
        *x /= norm;
    }
    v
}

/// Inverse iteration for the eigenvector at `lambda`, orthogonalized against
/// the previously computed vectors of the same eigenvalue cluster.
fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    cluster_prev: &[Vec<f64>],
    key: u64,
    scale: f64,
) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let pivmin = scale * f64::EPSILON;
    let lu = TridiagLu::factor(diag, off, lambda, pivmin);
    let accept = scale * 1e-11;
    let limit = scale * 1e-8;
    let mut x = seeded_start_vector(n, key);
    let mut best = x.clone();
    let mut best_res = f64::MAX;
    for attempt in 0..6 {
        x = lu.solve(&x);
        for prev in cluster_prev {
            let proj: f64 = x.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (xi, pi) in x.iter_mut().zip(prev) {
                *xi -= proj * pi;
            }
        }
        let norm = norm2(&x);
        if !norm.is_finite() || norm == 0.0 {
            x = seeded_start_vector(n, key.wrapping_add(attempt + 1));
            continue;
        }
        for xi in &mut x {
            *xi /= norm;
        }
        let res = tridiag_residual(diag, off, lambda, &x);
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&x);
        }
        if res <= accept {
            break;
        }
    }
    if best_res > limit {
        return Err(Error::numerical(
            "eigenvector",
            format!("inverse iteration stalled at residual {best_res:.3e} for λ = {lambda}"),
        ));
    }
    // Deterministic sign: largest-magnitude entry positive.
    let mut peak = 0usize;
    for (i, v) in best.iter().enumerate() {
        if v.abs() > best[peak].abs() {
            peak = i;
        }
    }
    if best[peak] < 0.0 {
        for v in &mut best {
            *v = -*v;
        }
    }
    Ok(best)
}

/// All eigenpairs of the symmetric tridiagonal matrix (diag, off),
/// eigenvalues ascending. Eigenvalues within 10⁻⁵·‖T‖ of each other are
/// treated as one cluster and their vectors mutually orthogonalized.
pub fn symmetric_tridiagonal_eigenpairs(diag: &[f64], off: &[f64]) -> Result<Vec<EigenPair>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let values = symmetric_tridiagonal_eigenvalues(diag, off);
    let scale = diag
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = if i < n - 1 { off[i].abs() } else { 0.0 };
            d.abs() + left + right
        })
        .fold(1.0f64, f64::max);
    let ortol = 1e-5 * scale;

    let mut clusters: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || values[k] - values[k - 1] > ortol {
            clusters.push(start..k);
            start = k;
        }
    }

    let groups: Vec<Vec<EigenPair>> = clusters
        .into_par_iter()
        .map(|range| {
            let mut done: Vec<Vec<f64>> = Vec::new();
            let mut pairs = Vec::with_capacity(range.len());
            for k in range {
                let vec = inverse_iteration(diag, off, values[k], &done, k as u64, scale)?;
                done.push(vec.clone());
                pairs.push(EigenPair {
                    eigenvalue: values[k],
                    eigenvector: vec,
                });
            }
            Ok(pairs)
        })
        .collect::<Result<_>>()?;
    Ok(groups.into_iter().flatten().collect())
}

fn check_eigensolve_size(op: &TridiagonalOperator) -> Result<()> {
    if op.len() > MAX_EIGENSOLVE_SITES {
        return Err(Error::invalid(
            "box_size",
            format!("{} sites exceeds the {MAX_EIGENSOLVE_SITES}-site bound", op.len()),
        ));
    }
    Ok(())
}

/// All eigenvalues of a unit-hopping box, ascending.
pub fn eigenvalues(op: &TridiagonalOperator) -> Result<Vec<f64>> {
    check_eigensolve_size(op)?;
    let off = vec![1.0; op.len().saturating_sub(1)];
    Ok(symmetric_tridiagonal_eigenvalues(op.diagonal(), &off))
}

/// All eigenpairs of a unit-hopping box, eigenvalues ascending.
pub fn eigensolve(op: &TridiagonalOperator) -> Result<Vec<EigenPair>> {
    check_eigensolve_size(op)?;
    let off = vec![1.0; op.len().saturating_sub(1)];
    symmetric_tridiagonal_eigenpairs(op.diagonal(), &off)
}

/// ‖Hψ − Eψ‖₂ for a computed pair against its box.
pub fn residual_norm(op: &TridiagonalOperator, pair: &EigenPair) -> f64 {
    let n = op.len();
    let mut out = vec![0.0; n];
    op.apply(&pair.eigenvector, &mut out);
    out.iter()
        .zip(&pair.eigenvector)
        .map(|(h, psi)| {
            let r = h - pair.eigenvalue * psi;
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Decay and participation diagnostics
// ---------------------------------------------------------------------------

/// Exponential-decay fit and participation ratio for one eigenvector.
///
/// The rate is the least-squares slope of log|ψ| over the tail right of the
/// amplitude peak, skipping the nearest ⌈N/10⌉ sites (the localization
/// center would contaminate the fit) and entries below the 10⁻¹⁴ noise
/// floor. Fewer than 8 usable points marks the report unreliable and leaves
/// rate/residual as NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    pub eigenvalue: f64,
    /// Per-site log-slope of the |ψ| envelope (positive = decay).
    pub rate: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    /// 1/Σψ⁴ ∈ [1, N] for a unit vector.
    pub participation_ratio: f64,
    pub reliable: bool,
    pub fit_points: usize,
}

const DECAY_NOISE_FLOOR: f64 = 1e-14;
const DECAY_MIN_FIT_POINTS: usize = 8;

pub fn decay_report(pair: &EigenPair) -> DecayReport {
    let psi = &pair.eigenvector;
    let n = psi.len();
    assert!(n >= 16, "decay fit needs at least 16 sites");

    let norm = norm2(psi);
    let inv_pr: f64 = psi.iter().map(|v| (v / norm).powi(4)).sum();
    let participation_ratio = 1.0 / inv_pr;

    let mut peak = 0usize;
    for (i, v) in psi.iter().enumerate() {
        if v.abs() > psi[peak].abs() {
            peak = i;
        }
    }
    let start = peak + n.div_ceil(10);
    let points: Vec<(f64, f64)> = (start..n)
        .filter(|&i| psi[i].abs() >= DECAY_NOISE_FLOOR)
        .map(|i| (i as f64, psi[i].abs().ln()))
        .collect();

    if points.len() < DECAY_MIN_FIT_POINTS {
        return DecayReport {
            eigenvalue: pair.eigenvalue,
            rate: f64::NAN,
            residual: f64::NAN,
            participation_ratio,
            reliable: false,
            fit_points: points.len(),
        };
    }

    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let mut cov = 0.0;
    let mut var = 0.0;
    for &(x, y) in &points {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    let slope = cov / var;
    let intercept = mean_y - slope * mean_x;
    let ss: f64 = points
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).powi(2))
        .sum();

    DecayReport {
        eigenvalue: pair.eigenvalue,
        rate: -slope,
        residual: (ss / m).sqrt(),
        participation_ratio,
        reliable: true,
        fit_points: points.len(),
    }
}

// ---------------------------------------------------------------------------
// Floquet bands for periodic digit streams
// ---------------------------------------------------------------------------

/// Closed band [lo, hi] of the periodic spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn contains(&self, e: f64) -> bool {
        e >= self.lo && e <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bands {E : |Δ(E)| ≤ 2} of a period-p potential, with the data needed to
/// re-evaluate the discriminant Δ(E) = tr of the period-p transfer product.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    bands: Vec<Band>,
    period: usize,
    cycle_potential: Vec<f64>,
    /// Energies where |Δ| grazes 2 without crossing (closed gaps /
    /// tangencies), detected to 10⁻⁸ by extremum refinement.
    closed_gaps: Vec<f64>,
    scan_resolution: f64,
}

impl BandSet {
    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn closed_gaps(&self) -> &[f64] {
        &self.closed_gaps
    }

    pub fn scan_resolution(&self) -> f64 {
        self.scan_resolution
    }

    /// One period of the potential behind this band set.
    pub fn cycle_potential(&self) -> &[f64] {
        &self.cycle_potential
    }

    /// Δ(E): trace of the period-p transfer product, saturated at ±10³⁰⁰
    /// when the product overflows the log window (deep outside the bands).
    pub fn discriminant(&self, energy: f64) -> f64 {
        discriminant(&self.cycle_potential, energy)
    }

    pub fn contains(&self, e: f64) -> bool {
        self.bands.iter().any(|b| b.contains(e))
    }
}

fn discriminant(cycle: &[f64], energy: f64) -> f64 {
    let coc = propagate_with_initial(
        TransferMatrix::identity(),
        energy,
        cycle.iter().copied(),
    )
    .expect("finite cycle potentials cannot overflow a rescaled product");
    let tr = coc.current.a + coc.current.d;
    if tr == 0.0 {
        return 0.0;
    }
    let log_mag = tr.abs().ln() + coc.log_scale;
    if log_mag > 690.0 {
        return 1e300 * tr.signum();
    }
    tr.signum() * log_mag.exp()
}

const BAND_EDGE_TOL: f64 = 1e-10;
const TANGENCY_TOL: f64 = 1e-8;

/// Root of g between a (g > 0) and b (g ≤ 0), orientation-agnostic.
fn bisect_edge(g: &impl Fn(f64) -> f64, mut outside: f64, mut inside: f64) -> f64 {
    for _ in 0..80 {
        if (outside - inside).abs() <= BAND_EDGE_TOL {
            break;
        }
        let mid = 0.5 * (outside + inside);
        if g(mid) > 0.0 {
            outside = mid;
        } else {
            inside = mid;
        }
    }
    0.5 * (outside + inside)
}

/// Golden-section refinement of an interior extremum of g on [a, b].
fn refine_extremum(g: &impl Fn(f64) -> f64, a: f64, b: f64, maximize: bool) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let better = |x: f64, y: f64| if maximize { x > y } else { x < y };
    let mut lo = a;
    let mut hi = b;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    for _ in 0..100 {
        if (hi - lo).abs() <= BAND_EDGE_TOL {
            break;
        }
        if better(g1, g2) {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - INV_PHI * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + INV_PHI * (hi - lo);
            g2 = g(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, g(x))
}

/// Bands of the periodic potential carried by ω, scanned over the spectral
/// enclosure with [`DEFAULT_BAND_SCAN_POINTS`] points.
///
/// ω must be eventually periodic; the prefix only shifts finitely many
/// potential values, so bands are computed from the purely periodic tail
/// (burn-in past the prefix).
pub fn periodic_bands(spec: &PotentialSpec, omega: &DigitSequence) -> Result<BandSet> {
    periodic_bands_with_scan(spec, omega, DEFAULT_BAND_SCAN_POINTS)
}

pub fn periodic_bands_with_scan(
    spec: &PotentialSpec,
    omega: &DigitSequence,
    scan_points: usize,
) -> Result<BandSet> {
    let Some((prefix_len, period)) = omega.period() else {
        return Err(Error::invalid(
            "omega",
            "band computation needs an eventually periodic digit stream",
        ));
    };
    if scan_points < 16 {
        return Err(Error::invalid("scan_points", "must be ≥ 16"));
    }
    // First site whose digit tail lies entirely in the periodic cycle.
    let burn_in = (prefix_len as u64).max(1);
    let cycle_potential: Vec<f64> = (0..period as u64)
        .map(|j| spec.halfline_potential(omega, burn_in + j))
        .collect();

    let (enc_lo, enc_hi) = spec.enclosure();
    let scan_lo = enc_lo - 1.0;
    let scan_hi = enc_hi + 1.0;
    let resolution = (scan_hi - scan_lo) / (scan_points - 1) as f64;

    let g = |e: f64| discriminant(&cycle_potential, e).abs() - 2.0;
    let scan: Vec<(f64, f64)> = (0..scan_points)
        .map(|i| {
            let e = scan_lo + i as f64 * resolution;
            (e, g(e))
        })
        .collect();

    // Walk the scan: a band starts where g crosses into ≤ 0 and ends where
    // it leaves.
    let mut bands: Vec<Band> = Vec::new();
    let mut open: Option<f64> = None;
    for i in 0..scan.len() {
        let (e, gi) = scan[i];
        let inside = gi <= 0.0;
        match (open, inside) {
            (None, true) => {
                let lo = if i == 0 {
                    e
                } else {
                    bisect_edge(&g, scan[i - 1].0, e)
                };
                open = Some(lo);
            }
            (Some(lo), false) => {
                let hi = bisect_edge(&g, e, scan[i - 1].0);
                bands.push(Band { lo, hi });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(lo) = open {
        bands.push(Band {
            lo,
            hi: scan[scan.len() - 1].0,
        });
    }

    // Sub-resolution features: refine interior extrema of g. A local maximum
    // inside a band that reaches above 0 is a gap the scan stepped over; one
    // that grazes 0 within tolerance is a closed gap. Mirrored handling for
    // local minima outside the bands (thin or measure-zero bands).
    let mut closed_gaps: Vec<f64> = Vec::new();
    let mut splits: Vec<(f64, f64)> = Vec::new();
    let mut inserts: Vec<Band> = Vec::new();
    for i in 1..scan.len() - 1 {
        let (_, g_prev) = scan[i - 1];
        let (_, g_i) = scan[i];
        let (_, g_next) = scan[i + 1];
        if g_i <= 0.0 && g_i >= g_prev && g_i >= g_next && (g_prev < g_i || g_next < g_i) {
            let (x, gx) = refine_extremum(&g, scan[i - 1].0, scan[i + 1].0, true);
            if gx > TANGENCY_TOL {
                let lo = bisect_edge(&g, x, scan[i - 1].0);
                let hi = bisect_edge(&g, x, scan[i + 1].0);
                splits.push((lo, hi));
            } else if gx >= -TANGENCY_TOL {
                closed_gaps.push(x);
            }
        } else if g_i > 0.0 && g_i <= g_prev && g_i <= g_next && (g_prev > g_i || g_next > g_i) {
            let (x, gx) = refine_extremum(&g, scan[i - 1].0, scan[i + 1].0, false);
            if gx < -TANGENCY_TOL {
                let lo = bisect_edge(&g, scan[i - 1].0, x);
                let hi = bisect_edge(&g, scan[i + 1].0, x);
                inserts.push(Band { lo, hi });
            } else if gx <= TANGENCY_TOL {
                closed_gaps.push(x);
            }
        }
    }
    for (gap_lo, gap_hi) in splits {
        if let Some(idx) = bands
            .iter()
            .position(|b| b.lo < gap_lo && b.hi > gap_hi)
        {
            let original = bands[idx];
            bands[idx] = Band {
                lo: original.lo,
                hi: gap_lo,
            };
            bands.insert(
                idx + 1,
                Band {
                    lo: gap_hi,
                    hi: original.hi,
                },
            );
        }
    }
    bands.extend(inserts);
    bands.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    closed_gaps.sort_by(f64::total_cmp);
    closed_gaps.dedup_by(|a, b| (*a - *b).abs() < 10.0 * BAND_EDGE_TOL);

    Ok(BandSet {
        bands,
        period,
        cycle_potential,
        closed_gaps,
        scan_resolution: resolution,
    })
}

// ---------------------------------------------------------------------------
// Band / Lyapunov consistency
// ---------------------------------------------------------------------------

/// One probed energy of [`band_gamma_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandGammaPoint {
    pub energy: f64,
    /// Full-orbit per-step exponent along the periodic stream.
    pub gamma: f64,
    /// Standard error over 16 orbit blocks.
    pub stderr: f64,
    pub inside: bool,
    /// The bound tested: γ̂ ≤ threshold inside, γ̂ > threshold outside.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandGammaReport {
    pub points: Vec<BandGammaPoint>,
    pub n_steps: u64,
    pub growth_constant: f64,
}

impl BandGammaReport {
    pub fn all_pass(&self) -> bool {
        self.points.iter().all(|p| p.pass)
    }
}

const ORBIT_BLOCKS: u32 = 16;

fn orbit_point(
    spec: &PotentialSpec,
    omega: &DigitSequence,
    energy: f64,
    n: u64,
) -> Result<(f64, f64)> {
    crate::cocycle::orbit_exponent_with_blocks(spec, omega, energy, n, ORBIT_BLOCKS)
}

/// Probe γ̂ along the periodic orbit: at band midpoints assert the Floquet
/// bound γ̂ ≤ C/n; at points outside the bands (half a unit beyond each edge
/// and in the middle of every gap wider than the scan resolution) assert
/// γ̂ > 3·stderr.
pub fn band_gamma_check(
    spec: &PotentialSpec,
    omega: &DigitSequence,
    bands: &BandSet,
    n: u64,
    growth_constant: f64,
) -> Result<BandGammaReport> {
    if n < u64::from(ORBIT_BLOCKS) {
        return Err(Error::invalid("n_steps", "need at least 16 steps"));
    }
    if bands.bands().is_empty() {
        return Err(Error::invalid("bands", "band set is empty"));
    }
    let mut points = Vec::new();

    let in_bound = growth_constant / n as f64;
    for band in bands.bands() {
        let e = band.midpoint();
        let (gamma, stderr) = orbit_point(spec, omega, e, n)?;
        points.push(BandGammaPoint {
            energy: e,
            gamma,
            stderr,
            inside: true,
            threshold: in_bound,
            pass: gamma <= in_bound,
        });
    }

    let mut outside: Vec<f64> = Vec::new();
    for band in bands.bands() {
        outside.push(band.lo - 0.5);
        outside.push(band.hi + 0.5);
    }
    for pair in bands.bands().windows(2) {
        let gap = pair[1].lo - pair[0].hi;
        if gap > bands.scan_resolution() {
            outside.push(pair[0].hi + 0.5 * gap);
        }
    }
    outside.sort_by(f64::total_cmp);
    outside.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    outside.retain(|&e| !bands.contains(e));

    for e in outside {
        let (gamma, stderr) = orbit_point(spec, omega, e, n)?;
        points.push(BandGammaPoint {
            energy: e,
            gamma,
            stderr,
            inside: false,
            threshold: 3.0 * stderr,
            pass: gamma > 3.0 * stderr,
        });
    }

    Ok(BandGammaReport {
        points,
        n_steps: n,
        growth_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_halfline_box, BoundaryCondition};
    use crate::potential::SamplingFunction;

    fn free_spec() -> PotentialSpec {
        PotentialSpec::new(1.0, SamplingFunction::constant(0.0), 2).unwrap()
    }

    fn free_box(n: usize) -> TridiagonalOperator {
        let omega = DigitSequence::seeded(2, 0).unwrap();
        build_halfline_box(&free_spec(), &omega, n, BoundaryCondition::dirichlet())
    }

    #[test]
    fn free_two_box_eigenvalues() {
        let vals = eigenvalues(&free_box(2)).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_five_box_closed_form() {
        // 2cos(kπ/6), k = 1..5
        let vals = eigenvalues(&free_box(5)).unwrap();
        for (k, v) in (1..=5).rev().zip(&vals) {
            let exact = 2.0 * (k as f64 * std::f64::consts::PI / 6.0).cos();
            assert!((v - exact).abs() < 1e-10, "k = {k}: {v} vs {exact}");
        }
    }

    #[test]
    fn free_three_site_wholeline_box() {
        // Sites −1..1 with V ≡ 0: eigenvalues {−√2, 0, √2}.
        let spec = free_spec();
        let omega = crate::symbolic::TwoSidedDigitSequence::bernoulli(4, 2).unwrap();
        let op = crate::operator::build_wholeline_box(&spec, &omega, 1);
        let vals = eigenvalues(&op).unwrap();
        let sqrt2 = std::f64::consts::SQRT_2;
        for (v, x) in vals.iter().zip([-sqrt2, 0.0, sqrt2]) {
            assert!((v - x).abs() < 1e-12, "{v} vs {x}");
        }
    }

    #[test]
    fn diagonal_only_eigenvalues() {
        // Hopping suppressed: eigenvalues are the sorted diagonal.
        let d = vec![3.0, -1.0, 2.0, 0.5];
        let e = vec![0.0; 3];
        let vals = symmetric_tridiagonal_eigenvalues(&d, &e);
        assert_eq!(vals.len(), 4);
        let mut expected = d.clone();
        expected.sort_by(f64::total_cmp);
        for (v, x) in vals.iter().zip(&expected) {
            assert!((v - x).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenpairs_residuals_and_count() {
        let spec = PotentialSpec::new(2.0, SamplingFunction::cosine(), 2).unwrap();
        let omega = DigitSequence::seeded(2, 31).unwrap();
        let op = build_halfline_box(&spec, &omega, 300, BoundaryCondition::dirichlet());
        let pairs = eigensolve(&op).unwrap();
        assert_eq!(pairs.len(), 300);
        let bound = 1e-8 * (2.0 + spec.sup_bound());
        let (lo, hi) = spec.enclosure();
        for pair in &pairs {
            assert!(residual_norm(&op, pair) <= bound);
            let norm: f64 = pair.eigenvector.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(pair.eigenvalue >= lo && pair.eigenvalue <= hi);
        }
        for w in pairs.windows(2) {
            assert!(w[1].eigenvalue >= w[0].eigenvalue - 1e-12);
        }
    }

    #[test]
    fn dense_oracle_agreement() {
        let spec = PotentialSpec::new(2.0, SamplingFunction::cosine(), 2).unwrap();
        let omega = DigitSequence::seeded(2, 7).unwrap();
        let op = build_halfline_box(&spec, &omega, 120, BoundaryCondition::dirichlet());
        let mine = eigenvalues(&op).unwrap();

        let n = op.len();
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = op.diagonal()[i];
            if i + 1 < n {
                dense[(i, i + 1)] = 1.0;
                dense[(i + 1, i)] = 1.0;
            }
        }
        let mut oracle: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for (a, b) in mine.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn decay_fit_synthetic_exponential() {
        let n = 128;
        let psi: Vec<f64> = (0..n).map(|i| (-0.5 * i as f64).exp()).collect();
        let norm = norm2(&psi);
        let pair = EigenPair {
            eigenvalue: 0.0,
            eigenvector: psi.iter().map(|v| v / norm).collect(),
        };
        let report = decay_report(&pair);
        assert!(report.reliable);
        assert!((report.rate - 0.5).abs() < 1e-6, "rate {}", report.rate);
        assert!(report.residual < 1e-6);
    }

    #[test]
    fn participation_ratio_extremes() {
        let n = 64;
        let mut delta = vec![0.0; n];
        delta[10] = 1.0;
        let report = decay_report(&EigenPair {
            eigenvalue: 0.0,
            eigenvector: delta,
        });
        assert!((report.participation_ratio - 1.0).abs() < 1e-12);
        assert!(!report.reliable); // tail is all zeros

        let uniform = vec![(n as f64).powf(-0.5); n];
        let report = decay_report(&EigenPair {
            eigenvalue: 0.0,
            eigenvector: uniform,
        });
        assert!((report.participation_ratio - n as f64).abs() < 1e-9);
    }

    #[test]
    fn constant_potential_band() {
        // Period-1 cycle with value v₀: Δ(E) = E − v₀, band [v₀−2, v₀+2].
        let spec = PotentialSpec::new(1.0, SamplingFunction::constant(0.7), 2).unwrap();
        let omega = DigitSequence::periodic(2, vec![], vec![0]).unwrap();
        let set = periodic_bands(&spec, &omega).unwrap();
        assert_eq!(set.period(), 1);
        assert_eq!(set.bands().len(), 1);
        let band = set.bands()[0];
        assert!((band.lo - (0.7 - 2.0)).abs() < 1e-8);
        assert!((band.hi - (0.7 + 2.0)).abs() < 1e-8);
        assert!((set.discriminant(0.7) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn one_third_cosine_band_with_closed_gap() {
        // θ = 1/3, f = cosine, λ = 1: the orbit {2/3, 1/3} gives V ≡ −1/2,
        // so the period-2 discriminant is (E + 1/2)² − 2 and the band is
        // [−5/2, 3/2] with a tangency (closed gap) at E = −1/2.
        let spec = PotentialSpec::new(1.0, SamplingFunction::cosine(), 2).unwrap();
        let omega = DigitSequence::encode(1, 3, 2, 64).unwrap();
        let set = periodic_bands(&spec, &omega).unwrap();
        assert_eq!(set.period(), 2);
        assert_eq!(set.bands().len(), 1, "bands: {:?}", set.bands());
        let band = set.bands()[0];
        assert!((band.lo + 2.5).abs() < 1e-8, "lo {}", band.lo);
        assert!((band.hi - 1.5).abs() < 1e-8, "hi {}", band.hi);
        assert_eq!(set.closed_gaps().len(), 1, "{:?}", set.closed_gaps());
        assert!((set.closed_gaps()[0] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn alternating_potential_two_bands() {
        // ±λ alternation: Δ(E) = E² − λ² − 2, bands
        // [−√(λ²+4), −λ] ∪ [λ, √(λ²+4)].
        let lambda = 1.5f64;
        let spec =
            PotentialSpec::new(lambda, SamplingFunction::table(vec![-1.0, 1.0]).unwrap(), 2)
                .unwrap();
        let omega = DigitSequence::periodic(2, vec![], vec![0, 1]).unwrap();
        let set = periodic_bands(&spec, &omega).unwrap();
        assert_eq!(set.period(), 2);
        assert_eq!(set.bands().len(), 2, "bands: {:?}", set.bands());
        let outer = (lambda * lambda + 4.0).sqrt();
        let expect = [(-outer, -lambda), (lambda, outer)];
        for (band, (lo, hi)) in set.bands().iter().zip(expect) {
            assert!((band.lo - lo).abs() < 1e-8, "{} vs {lo}", band.lo);
            assert!((band.hi - hi).abs() < 1e-8, "{} vs {hi}", band.hi);
        }
        // Brute-force trace cross-check at a few energies.
        for e in [-2.0, -1.0, 0.0, 0.3, 1.7, 2.4] {
            let closed_form = e * e - lambda * lambda - 2.0;
            assert!(
                (set.discriminant(e) - closed_form).abs() < 1e-10,
                "Δ({e})"
            );
        }
    }

    #[test]
    fn nonperiodic_rejected() {
        let spec = PotentialSpec::new(1.0, SamplingFunction::cosine(), 2).unwrap();
        let omega = DigitSequence::seeded(2, 1).unwrap();
        assert!(periodic_bands(&spec, &omega).is_err());
    }

    #[test]
    fn band_gamma_free_case() {
        let spec = free_spec();
        let omega = DigitSequence::periodic(2, vec![], vec![0]).unwrap();
        let set = periodic_bands(&spec, &omega).unwrap();
        let report = band_gamma_check(&spec, &omega, &set, 100_000, DEFAULT_GROWTH_CONSTANT).unwrap();
        assert!(report.all_pass(), "{:#?}", report.points);
        // E = 3 sits 1.0 outside the free band; γ there is ≈ 0.9624.
        let (gamma, _) = orbit_point(&spec, &omega, 3.0, 100_000).unwrap();
        assert!((gamma - 0.962_423_650_119_2).abs() < 1e-3);
    }

    #[test]
    fn band_box_consistency() {
        // Eigenvalue counting measure of a finite box concentrates on the
        // bands: ≥ 99% of eigenvalues inside the set inflated by 10⁻².
        let lambda = 1.5f64;
        let spec =
            PotentialSpec::new(lambda, SamplingFunction::table(vec![-1.0, 1.0]).unwrap(), 2)
                .unwrap();
        let omega = DigitSequence::periodic(2, vec![], vec![0, 1]).unwrap();
        let set = periodic_bands(&spec, &omega).unwrap();
        let op = build_halfline_box(&spec, &omega, 2000, BoundaryCondition::dirichlet());
        let vals = eigenvalues(&op).unwrap();
        let inside = vals
            .iter()
            .filter(|&&e| {
                set.bands()
                    .iter()
                    .any(|b| e >= b.lo - 1e-2 && e <= b.hi + 1e-2)
            })
            .count();
        assert!(
            inside as f64 >= 0.99 * vals.len() as f64,
            "{inside} of {} inside",
            vals.len()
        );
    }

    #[test]
    fn localization_trend() {
        // Strong coupling localizes mid-spectrum states; the free box does not.
        let n = 400;
        let spec = PotentialSpec::new(2.0, SamplingFunction::cosine(), 2).unwrap();
        let omega = DigitSequence::seeded(2, 13).unwrap();
        let op = build_halfline_box(&spec, &omega, n, BoundaryCondition::dirichlet());
        let pairs = eigensolve(&op).unwrap();
        let mut prs: Vec<f64> = pairs[n / 4..3 * n / 4]
            .iter()
            .map(|p| decay_report(p).participation_ratio)
            .collect();
        prs.sort_by(f64::total_cmp);
        let median_loc = prs[prs.len() / 2];
        assert!(median_loc <= n as f64 / 20.0, "localized median {median_loc}");

        let free_pairs = eigensolve(&free_box(n)).unwrap();
        let mut free_prs: Vec<f64> = free_pairs[n / 4..3 * n / 4]
            .iter()
            .map(|p| decay_report(p).participation_ratio)
            .collect();
        free_prs.sort_by(f64::total_cmp);
        let median_free = free_prs[free_prs.len() / 2];
        assert!(median_free >= n as f64 / 4.0, "free median {median_free}");
    }

    #[test]
    fn eigensolve_size_bound() {
        assert!(eigenvalues(&free_box(4)).is_ok());
        let too_big = free_box(MAX_EIGENSOLVE_SITES + 1);
        assert!(matches!(
            eigenvalues(&too_big),
            Err(crate::error::Error::Invalid { .. })
        ));
    }
}
