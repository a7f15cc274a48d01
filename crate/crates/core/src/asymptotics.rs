//! Closed-form spike algebra for the large-advection limit.
//!
//! With advection strength χ and ε = 1/√χ, a steady spike sitting on a signal
//! maximum with curvatures h⁽ⁱ⁾ has the leading-order profile
//!
//! ```text
//! u(x) ≈ c₀ · exp(−½ χ Σᵢ h⁽ⁱ⁾ (x⁽ⁱ⁾ − x_m⁽ⁱ⁾)²),
//! ```
//!
//! where the height c₀ solves the quadratic
//!
//! ```text
//! 2^{n/2} c² − 3^{n/2} (ā + θ) c + 6^{n/2} θ ā = 0,
//! ```
//!
//! ā being the local carrying-capacity plateau and θ the Allee threshold.
//! Two roots c01 ≥ c02 exist exactly when θ stays below an explicit bound
//! ā·θ₁(n); [`spike_heights`] evaluates them cancellation-safely and
//! [`build_pattern`] assembles multi-spike ansätze from signal maxima.
//!
//! For two species with advection speeds χ and cχ sharing one site, the
//! spike amplitudes (S₁, S₂) must balance both species' far-field plateaus,
//! giving the polynomial system I₁(S₁,S₂) = I₂(S₁,S₂) = 0 implemented in
//! [`balancing_residuals`]. Each equation is quadratic in S₁, so its solution
//! branches g₁..g₄ reduce root finding to one-dimensional sign scans over S₂
//! ([`solve_coexistence`]). Ideal-free-distribution thresholds for the
//! resource-following pair are computed by [`ifd_threshold`] and
//! [`resource_beta`].

use crate::domain::Domain;
use crate::potential::{CriticalKind, CriticalPoint};
use rayon::prelude::*;
use thiserror::Error;

/// Scan resolution for branch-crossing detection over (0, S2_max].
const SCAN_POINTS: usize = 4096;
/// Bisection stops when the bracket is this small (relative to max(1, S2)).
const BISECTION_TOL: f64 = 1e-12;
/// A root must satisfy |I1|, |I2| below this to be reported.
const ROOT_RESIDUAL_TOL: f64 = 1e-10;
/// Branch difference below this at every scan point ⇒ one-parameter family.
const FAMILY_TOL: f64 = 1e-10;
/// Number of representatives sampled from a degenerate root family.
const FAMILY_SAMPLES: usize = 33;
/// Gauss-Legendre panel count and order: 640 × 16 = 10240 nodes per axis.
const QUAD_PANELS: usize = 640;
const QUAD_ORDER: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum AsymptoticsError {
    #[error("Allee threshold {theta} is not below the admissibility bound {bound}")]
    InadmissibleTheta { theta: f64, bound: f64 },
    #[error("{maxima} maxima but {branches} branch tags")]
    MismatchedBranches { maxima: usize, branches: usize },
    #[error("every site is off; a pattern needs at least one active spike")]
    NoActiveSite,
    #[error("site {index} is not a non-degenerate maximum")]
    NotAMaximum { index: usize },
    #[error("resource is not positive at {location:?}: r = {value}")]
    NonPositiveResource { location: Vec<f64>, value: f64 },
}

/// x^{n/2} for n ∈ {1, 2}, exact when n = 2.
pub(crate) fn half_pow(x: f64, n: usize) -> f64 {
    match n {
        1 => x.sqrt(),
        2 => x,
        _ => panic!("dimension {n} not in {{1,2}}"),
    }
}

/// Largest admissible Allee threshold for a plateau ā in dimension n:
/// `ā·(2^{n+1} − 2√(4ⁿ − 2ⁿ·3^{n/2}) − 3^{n/2})/3^{n/2}`, always in (0, ā).
pub fn theta_max(n: usize, a_bar: f64) -> f64 {
    assert!(n == 1 || n == 2, "dimension {n} not in {{1,2}}");
    assert!(a_bar > 0.0, "plateau must be positive");
    let four_n = (4.0f64).powi(n as i32);
    let two_n = (2.0f64).powi(n as i32);
    let three_h = half_pow(3.0, n);
    a_bar * (2.0 * two_n - 2.0 * (four_n - two_n * three_h).sqrt() - three_h) / three_h
}

/// The two leading-order spike heights at one site.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightPair {
    /// Larger root (tall spike).
    pub c01: f64,
    /// Smaller root (short spike); exactly 0 at θ = 0.
    pub c02: f64,
    /// Discriminant δ = 3ⁿ(ā+θ)² − 4·12^{n/2}θā of the height quadratic.
    pub discriminant: f64,
    /// δ > 0 and both roots strictly positive.
    pub admissible: bool,
    /// Carrying-capacity plateau ā at the site.
    pub plateau: f64,
}

/// Solve the height quadratic `2^{n/2}c² − 3^{n/2}(ā+θ)c + 6^{n/2}θā = 0`.
///
/// The larger root is computed from the quadratic formula and the smaller one
/// from the product of roots, so no digits cancel as c02 → 0 with θ → 0.
/// An over-threshold θ yields NaN roots with `admissible = false`, never a
/// panic: inadmissibility is data.
pub fn spike_heights(n: usize, theta: f64, a_bar: f64) -> HeightPair {
    assert!(n == 1 || n == 2, "dimension {n} not in {{1,2}}");
    assert!(theta >= 0.0, "Allee threshold must be nonnegative");
    assert!(a_bar > 0.0, "plateau must be positive");
    let a = half_pow(2.0, n);
    let minus_b = half_pow(3.0, n) * (a_bar + theta);
    let c = half_pow(6.0, n) * theta * a_bar;
    let discriminant = minus_b * minus_b - 4.0 * a * c;
    if discriminant < 0.0 {
        return HeightPair {
            c01: f64::NAN,
            c02: f64::NAN,
            discriminant,
            admissible: false,
            plateau: a_bar,
        };
    }
    let c01 = (minus_b + discriminant.sqrt()) / (2.0 * a);
    let c02 = c / (a * c01);
    HeightPair {
        c01,
        c02,
        discriminant,
        admissible: discriminant > 0.0 && c02 > 0.0 && c01 > 0.0,
        plateau: a_bar,
    }
}

/// Which height a site carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpikeBranch {
    /// Height c01.
    Tall,
    /// Height c02.
    Short,
    /// No spike: height exactly 0 at leading order.
    Off,
}

/// One site of a multi-spike ansatz.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeSite {
    pub center: Vec<f64>,
    /// Signal curvatures h⁽ⁱ⁾ > 0 at the site (negated Hessian eigenvalues).
    pub curvatures: Vec<f64>,
    pub branch: SpikeBranch,
    /// Leading-order height coefficient (c01, c02, or 0).
    pub height: f64,
    /// Carrying-capacity plateau ā at the site.
    pub plateau: f64,
}

/// A leading-order multi-spike ansatz `Σ_m c_m exp(−½ s χ Σᵢ hᵢ(x−x_m)²)`,
/// where s is the speed multiplier (1 for the reference species, c for a
/// species advecting at cχ).
#[derive(Debug, Clone, PartialEq)]
pub struct SpikePattern {
    pub dim: usize,
    pub theta: f64,
    pub chi: f64,
    pub speed_multiplier: f64,
    pub sites: Vec<SpikeSite>,
}

/// Assemble a spike pattern on unit plateaus (ā = 1 at every site).
pub fn build_pattern(
    maxima: &[CriticalPoint],
    branches: &[SpikeBranch],
    chi: f64,
    theta: f64,
    n: usize,
) -> Result<SpikePattern, AsymptoticsError> {
    build_pattern_scaled(maxima, &vec![1.0; maxima.len()], branches, chi, theta, n)
}

/// Assemble a spike pattern with a carrying-capacity plateau per site.
///
/// Every site must be a non-degenerate maximum; every active (non-off) site
/// must satisfy θ < ā_m·θ₁(n), otherwise the error names the violated bound.
pub fn build_pattern_scaled(
    maxima: &[CriticalPoint],
    plateaus: &[f64],
    branches: &[SpikeBranch],
    chi: f64,
    theta: f64,
    n: usize,
) -> Result<SpikePattern, AsymptoticsError> {
    assert!(n == 1 || n == 2, "dimension {n} not in {{1,2}}");
    assert!(chi > 0.0, "advection strength must be positive");
    assert_eq!(maxima.len(), plateaus.len(), "one plateau per site");
    if maxima.len() != branches.len() {
        return Err(AsymptoticsError::MismatchedBranches {
            maxima: maxima.len(),
            branches: branches.len(),
        });
    }
    if branches.iter().all(|b| *b == SpikeBranch::Off) {
        return Err(AsymptoticsError::NoActiveSite);
    }
    let mut sites = Vec::with_capacity(maxima.len());
    for (index, ((point, &plateau), &branch)) in
        maxima.iter().zip(plateaus).zip(branches).enumerate()
    {
        if point.kind != CriticalKind::Maximum
            || point.degenerate
            || point.location.len() != n
            || point.curvatures.iter().any(|&h| h <= 0.0)
        {
            return Err(AsymptoticsError::NotAMaximum { index });
        }
        let height = if branch == SpikeBranch::Off {
            0.0
        } else {
            let bound = theta_max(n, plateau);
            if theta >= bound {
                return Err(AsymptoticsError::InadmissibleTheta { theta, bound });
            }
            let pair = spike_heights(n, theta, plateau);
            match branch {
                SpikeBranch::Tall => pair.c01,
                SpikeBranch::Short => pair.c02,
                SpikeBranch::Off => unreachable!(),
            }
        };
        sites.push(SpikeSite {
            center: point.location.clone(),
            curvatures: point.curvatures.clone(),
            branch,
            height,
            plateau,
        });
    }
    Ok(SpikePattern { dim: n, theta, chi, speed_multiplier: 1.0, sites })
}

/// Evaluate the ansatz at a point.
pub fn evaluate_pattern(pattern: &SpikePattern, x: &[f64]) -> f64 {
    assert_eq!(x.len(), pattern.dim, "point dimension mismatch");
    let s = pattern.speed_multiplier * pattern.chi;
    pattern
        .sites
        .iter()
        .map(|site| {
            let q: f64 = site
                .curvatures
                .iter()
                .zip(x.iter().zip(&site.center))
                .map(|(h, (xi, ci))| h * (xi - ci) * (xi - ci))
                .sum();
            site.height * (-0.5 * s * q).exp()
        })
        .sum()
}

/// The two balancing residuals for a shared site occupied by amplitudes
/// S₁ (species at speed χ) and S₂ (species at speed cχ):
///
/// ```text
/// I₁ = −3^{−n/2}S₁² − 2(c+2)^{−n/2}S₁S₂ − (2c+1)^{−n/2}S₂²
///      + 2^{−n/2}(1+θ)S₁ + (c+1)^{−n/2}(1+θ)S₂ − θ,
/// I₂ = −(c+2)^{−n/2}S₁² − 2(2c+1)^{−n/2}S₁S₂ − (3c)^{−n/2}S₂²
///      + (c+1)^{−n/2}(1+θ)S₁ + (2c)^{−n/2}(1+θ)S₂ − c^{−n/2}θ.
/// ```
pub fn balancing_residuals(n: usize, c: f64, theta: f64, s1: f64, s2: f64) -> (f64, f64) {
    assert!(n == 1 || n == 2, "dimension {n} not in {{1,2}}");
    let p = |base: f64| 1.0 / half_pow(base, n);
    let i1 = -p(3.0) * s1 * s1 - 2.0 * p(c + 2.0) * s1 * s2 - p(2.0 * c + 1.0) * s2 * s2
        + p(2.0) * (1.0 + theta) * s1
        + p(c + 1.0) * (1.0 + theta) * s2
        - theta;
    let i2 = -p(c + 2.0) * s1 * s1 - 2.0 * p(2.0 * c + 1.0) * s1 * s2 - p(3.0 * c) * s2 * s2
        + p(c + 1.0) * (1.0 + theta) * s1
        + p(2.0 * c) * (1.0 + theta) * s2
        - p(c) * theta;
    (i1, i2)
}

/// Jacobian of (I₁, I₂) with respect to (S₁, S₂); row-major 2×2.
/// ∂I₁/∂S₂ and ∂I₂/∂S₁ are the same polynomial, so the matrix is symmetric.
pub fn balancing_jacobian(n: usize, c: f64, theta: f64, s1: f64, s2: f64) -> [[f64; 2]; 2] {
    assert!(n == 1 || n == 2, "dimension {n} not in {{1,2}}");
    let p = |base: f64| 1.0 / half_pow(base, n);
    let d11 = -2.0 * p(3.0) * s1 - 2.0 * p(c + 2.0) * s2 + p(2.0) * (1.0 + theta);
    let d12 = -2.0 * p(c + 2.0) * s1 - 2.0 * p(2.0 * c + 1.0) * s2 + p(c + 1.0) * (1.0 + theta);
    let d22 = -2.0 * p(2.0 * c + 1.0) * s1 - 2.0 * p(3.0 * c) * s2 + p(2.0 * c) * (1.0 + theta);
    [[d11, d12], [d12, d22]]
}

/// Solution branches of each balancing equation, viewed as quadratics in S₁.
///
/// g₁/g₂ solve I₁ = 0 (+/− discriminant root), g₃/g₄ solve I₂ = 0. A branch is
/// `None` where its discriminant is negative; undefined branches are data.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchValues {
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub g3: Option<f64>,
    pub g4: Option<f64>,
    pub delta1: f64,
    pub delta2: f64,
}

/// Evaluate g₁..g₄ and the two discriminants at one S₂.
pub fn coexistence_branches(n: usize, c: f64, theta: f64, s2: f64) -> BranchValues {
    assert!(n == 1 || n == 2, "dimension {n} not in {{1,2}}");
    let p = |base: f64| 1.0 / half_pow(base, n);
    let q = |base: f64| half_pow(base, n);
    let one_theta = 1.0 + theta;

    let lin1 = p(2.0) * one_theta - 2.0 * p(c + 2.0) * s2;
    let const1 = p(2.0 * c + 1.0) * s2 * s2 - p(c + 1.0) * one_theta * s2 + theta;
    let delta1 = lin1 * lin1 - 4.0 * p(3.0) * const1;

    let lin2 = p(c + 1.0) * one_theta - 2.0 * p(2.0 * c + 1.0) * s2;
    let const2 = p(3.0 * c) * s2 * s2 - p(2.0 * c) * one_theta * s2 + p(c) * theta;
    let delta2 = lin2 * lin2 - 4.0 * p(c + 2.0) * const2;

    let (g1, g2) = if delta1 >= 0.0 {
        let base = q(1.5) * one_theta - 2.0 * q(3.0 / (c + 2.0)) * s2;
        let root = q(3.0) * delta1.sqrt();
        (Some(0.5 * (base + root)), Some(0.5 * (base - root)))
    } else {
        (None, None)
    };
    let (g3, g4) = if delta2 >= 0.0 {
        let base = q((c + 2.0) / (c + 1.0)) * one_theta - 2.0 * q((c + 2.0) / (2.0 * c + 1.0)) * s2;
        let root = q(c + 2.0) * delta2.sqrt();
        (Some(0.5 * (base + root)), Some(0.5 * (base - root)))
    } else {
        (None, None)
    };
    BranchValues { g1, g2, g3, g4, delta1, delta2 }
}

/// Which branch pairing a coexistence root satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchedCase {
    /// (i): g₁ = g₃.
    G1G3,
    /// (ii): g₁ = g₄.
    G1G4,
    /// (iii): g₂ = g₃.
    G2G3,
    /// (iv): g₂ = g₄.
    G2G4,
}

impl MatchedCase {
    /// Roman-numeral label of the case.
    pub fn label(self) -> &'static str {
        match self {
            MatchedCase::G1G3 => "i",
            MatchedCase::G1G4 => "ii",
            MatchedCase::G2G3 => "iii",
            MatchedCase::G2G4 => "iv",
        }
    }

    fn all() -> [MatchedCase; 4] {
        [MatchedCase::G1G3, MatchedCase::G1G4, MatchedCase::G2G3, MatchedCase::G2G4]
    }

    fn pick(self, b: &BranchValues) -> (Option<f64>, Option<f64>) {
        match self {
            MatchedCase::G1G3 => (b.g1, b.g3),
            MatchedCase::G1G4 => (b.g1, b.g4),
            MatchedCase::G2G3 => (b.g2, b.g3),
            MatchedCase::G2G4 => (b.g2, b.g4),
        }
    }
}

impl std::fmt::Display for MatchedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A positive solution of the balancing system.
#[derive(Debug, Clone, PartialEq)]
pub struct CoexistenceRoot {
    pub s1: f64,
    pub s2: f64,
    pub case: MatchedCase,
    pub residual_i1: f64,
    pub residual_i2: f64,
    /// True when the root was sampled from an identically-matched branch pair
    /// (a one-parameter family, which occurs at the degenerate speed c = 1)
    /// rather than an isolated crossing.
    pub degenerate_family: bool,
}

/// Find all positive roots of the balancing system I₁ = I₂ = 0.
///
/// For each of the four branch pairings the difference g_a − g_b is scanned
/// over S₂ ∈ (0, 2·c01] at 4096 points; sign changes are refined by bisection
/// to 1e−12 and accepted when S₁, S₂ > 0 and both residuals are ≤ 1e−10.
/// A pairing whose difference vanishes at every defined scan point is a
/// one-parameter family (the degenerate speed c = 1); a deterministic
/// 33-point sample of the family is returned, flagged. An empty result is a
/// valid outcome: isolated positive roots exist only in a narrow parameter
/// window near the degenerate speed.
pub fn solve_coexistence(n: usize, c: f64, theta: f64) -> Vec<CoexistenceRoot> {
    assert!(n == 1 || n == 2, "dimension {n} not in {{1,2}}");
    assert!(c >= 1.0, "speed ratio must be at least 1");
    assert!(
        theta > 0.0 && theta < theta_max(n, 1.0),
        "threshold must lie in (0, theta_max)"
    );
    let s2_max = 2.0 * spike_heights(n, theta, 1.0).c01;
    let grid: Vec<f64> =
        (1..=SCAN_POINTS).map(|k| s2_max * k as f64 / SCAN_POINTS as f64).collect();
    let values: Vec<BranchValues> =
        grid.iter().map(|&s2| coexistence_branches(n, c, theta, s2)).collect();

    let mut roots = Vec::new();
    for case in MatchedCase::all() {
        let diffs: Vec<Option<(f64, f64)>> = values
            .iter()
            .map(|b| match case.pick(b) {
                (Some(ga), Some(gb)) => Some((ga, ga - gb)),
                _ => None,
            })
            .collect();

        let defined = diffs.iter().flatten().count();
        let family = defined > 0
            && diffs
                .iter()
                .flatten()
                .all(|(ga, d)| d.abs() <= FAMILY_TOL * (1.0 + ga.abs()));
        if family {
            roots.extend(sample_family(n, c, theta, case, &grid, &diffs));
            continue;
        }

        let mut previous: Option<(f64, f64)> = None;
        for (k, entry) in diffs.iter().enumerate() {
            let Some((_, d)) = entry else {
                previous = None;
                continue;
            };
            if let Some((s2_prev, d_prev)) = previous {
                if d_prev == 0.0 || d_prev.signum() != d.signum() {
                    if let Some(root) =
                        refine_crossing(n, c, theta, case, s2_prev, grid[k], d_prev)
                    {
                        roots.push(root);
                    }
                }
            }
            previous = Some((grid[k], *d));
        }
    }
    roots
}

/// Bisect a bracketed sign change of g_a − g_b down to 1e−12 in S₂.
fn refine_crossing(
    n: usize,
    c: f64,
    theta: f64,
    case: MatchedCase,
    mut lo: f64,
    mut hi: f64,
    d_lo: f64,
) -> Option<CoexistenceRoot> {
    let low_negative = d_lo < 0.0;
    for _ in 0..200 {
        if hi - lo <= BISECTION_TOL * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (ga, gb) = case.pick(&coexistence_branches(n, c, theta, mid));
        let (Some(ga), Some(gb)) = (ga, gb) else { return None };
        if ((ga - gb) < 0.0) == low_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s2 = 0.5 * (lo + hi);
    let (ga, _) = case.pick(&coexistence_branches(n, c, theta, s2));
    let s1 = ga?;
    let (i1, i2) = balancing_residuals(n, c, theta, s1, s2);
    (s1 > 0.0 && s2 > 0.0 && i1.abs() <= ROOT_RESIDUAL_TOL && i2.abs() <= ROOT_RESIDUAL_TOL)
        .then_some(CoexistenceRoot {
            s1,
            s2,
            case,
            residual_i1: i1,
            residual_i2: i2,
            degenerate_family: false,
        })
}

/// Deterministically sample a branch pairing that matches identically.
fn sample_family(
    n: usize,
    c: f64,
    theta: f64,
    case: MatchedCase,
    grid: &[f64],
    diffs: &[Option<(f64, f64)>],
) -> Vec<CoexistenceRoot> {
    let positive: Vec<f64> = grid
        .iter()
        .zip(diffs)
        .filter_map(|(&s2, entry)| entry.and_then(|(ga, _)| (ga > 0.0).then_some(s2)))
        .collect();
    if positive.is_empty() {
        return Vec::new();
    }
    let count = FAMILY_SAMPLES.min(positive.len());
    (0..count)
        .filter_map(|j| {
            let idx = if count == 1 { 0 } else { j * (positive.len() - 1) / (count - 1) };
            let s2 = positive[idx];
            let (ga, _) = case.pick(&coexistence_branches(n, c, theta, s2));
            let s1 = ga?;
            let (i1, i2) = balancing_residuals(n, c, theta, s1, s2);
            (s1 > 0.0 && i1.abs() <= ROOT_RESIDUAL_TOL && i2.abs() <= ROOT_RESIDUAL_TOL)
                .then_some(CoexistenceRoot {
                    s1,
                    s2,
                    case,
                    residual_i1: i1,
                    residual_i2: i2,
                    degenerate_family: true,
                })
        })
        .collect()
}

/// Nodes and weights of k-point Gauss-Legendre quadrature on [−1, 1],
/// computed by Newton iteration on the Legendre recurrence.
fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 1..k {
                let jf = j as f64;
                let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Per-axis composite quadrature nodes: (coordinate, weight) pairs.
fn axis_nodes(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let (nodes, weights) = gauss_legendre(QUAD_ORDER);
    let panel = (hi - lo) / QUAD_PANELS as f64;
    let mut out = Vec::with_capacity(QUAD_PANELS * QUAD_ORDER);
    for p in 0..QUAD_PANELS {
        let mid = lo + (p as f64 + 0.5) * panel;
        for (x, w) in nodes.iter().zip(&weights) {
            out.push((mid + 0.5 * panel * x, 0.5 * panel * w));
        }
    }
    out
}

/// Integrate ∫r^p for each requested power p over the domain.
/// Errors on the first non-positive sample when `require_positive`.
pub(crate) fn integrate_powers<F>(
    r: &F,
    domain: &Domain,
    powers: &[i32],
    require_positive: bool,
) -> Result<Vec<f64>, AsymptoticsError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let check = |x: &[f64], v: f64| -> Result<(), AsymptoticsError> {
        if require_positive && v <= 0.0 {
            Err(AsymptoticsError::NonPositiveResource { location: x.to_vec(), value: v })
        } else {
            Ok(())
        }
    };
    match domain.dim() {
        1 => {
            let xs = axis_nodes(domain.lo[0], domain.hi[0]);
            let mut acc = vec![0.0; powers.len()];
            for &(x, w) in &xs {
                let v = r(&[x]);
                check(&[x], v)?;
                for (a, &p) in acc.iter_mut().zip(powers) {
                    *a += w * v.powi(p);
                }
            }
            Ok(acc)
        }
        2 => {
            let xs = axis_nodes(domain.lo[0], domain.hi[0]);
            let ys = axis_nodes(domain.lo[1], domain.hi[1]);
            ys.par_iter()
                .map(|&(y, wy)| {
                    let mut acc = vec![0.0; powers.len()];
                    for &(x, wx) in &xs {
                        let v = r(&[x, y]);
                        check(&[x, y], v)?;
                        for (a, &p) in acc.iter_mut().zip(powers) {
                            *a += wx * wy * v.powi(p);
                        }
                    }
                    Ok(acc)
                })
                .try_reduce(
                    || vec![0.0; powers.len()],
                    |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
                )
        }
        d => panic!("unsupported dimension {d}"),
    }
}

/// The resource shape ratio β = ∫r²/∫r³ over the domain.
///
/// Composite 16-point Gauss-Legendre on 640 panels per axis (10240 nodes per
/// axis), exact to machine precision for smooth r. Errors on any non-positive
/// sample: β compares densities, so r must be a positive resource.
pub fn resource_beta<F>(r: F, domain: &Domain) -> Result<f64, AsymptoticsError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(domain.is_nondegenerate(), "domain must be non-degenerate");
    let moments = integrate_powers(&r, domain, &[2, 3], true)?;
    Ok(moments[0] / moments[1])
}

/// Ideal-free-distribution threshold data for l active sites.
///
/// Returns (α₁, C₄, ε₁*) with
/// α₁ = Σ_{m≤l} ā_m³/√(Πᵢ h_i⁽ᵐ⁾),  C₄ = ∫r²/(α₁ π^{n/2}),
/// ε₁* = [2^{n/2}·4ⁿ − 2^{n/2}(2·3^{n/2} − 2ⁿ)²]/(4·4ⁿ·C₄).
pub fn ifd_threshold<F>(
    n: usize,
    maxima: &[(f64, Vec<f64>)],
    l: usize,
    r: F,
    domain: &Domain,
) -> (f64, f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(n == 1 || n == 2, "dimension {n} not in {{1,2}}");
    assert!(l >= 1 && l <= maxima.len(), "active-site count out of range");
    let alpha1: f64 = maxima[..l]
        .iter()
        .map(|(a_bar, curvatures)| {
            assert!(*a_bar > 0.0, "plateau must be positive");
            assert_eq!(curvatures.len(), n, "one curvature per axis");
            assert!(curvatures.iter().all(|&h| h > 0.0), "curvatures must be positive");
            a_bar.powi(3) / curvatures.iter().product::<f64>().sqrt()
        })
        .sum();
    let r2 = integrate_powers(&r, domain, &[2], false)
        .expect("no positivity requirement on this path")[0];
    let c4 = r2 / (alpha1 * half_pow(std::f64::consts::PI, n));
    let two_h = half_pow(2.0, n);
    let four_n = (4.0f64).powi(n as i32);
    let two_n = (2.0f64).powi(n as i32);
    let three_h = half_pow(3.0, n);
    let gap = 2.0 * three_h - two_n;
    let eps1_star = (two_h * four_n - two_h * gap * gap) / (4.0 * four_n * c4);
    (alpha1, c4, eps1_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::CriticalKind;

    fn maximum_at(x: Vec<f64>, value: f64, curvatures: Vec<f64>) -> CriticalPoint {
        CriticalPoint {
            location: x,
            value,
            curvatures,
            gradient_norm: 0.0,
            kind: CriticalKind::Maximum,
            degenerate: false,
        }
    }

    #[test]
    fn theta_max_closed_forms() {
        assert!((theta_max(1, 1.0) - (2.0 * 3.0f64.sqrt() - 3.0)).abs() < 1e-15);
        assert!((theta_max(1, 1.0) - 0.46410161513775459).abs() < 1e-15);
        assert!((theta_max(2, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        // Linear scaling in the plateau.
        assert!((theta_max(2, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        for (n, ab) in [(1, 1.0), (2, 1.0), (1, 7.35), (2, 0.2)] {
            let t = theta_max(n, ab);
            assert!(t > 0.0 && t < ab);
        }
    }

    #[test]
    fn heights_match_reference_values() {
        let pair = spike_heights(1, 0.3, 1.0);
        assert!(pair.admissible);
        assert!((pair.c01 - 1.1339225267624662).abs() < 1e-12);
        assert!((pair.c02 - 0.45824580604659956).abs() < 1e-12);
        assert!((pair.discriminant - 0.91307806183469450).abs() < 1e-13);
        // Published 4-digit values.
        assert!((pair.c01 - 1.1339).abs() < 5e-5);
        assert!((pair.c02 - 0.4582).abs() < 5e-5);

        let pair2 = spike_heights(2, 0.3, 1.0);
        assert!((pair2.c01 - 1.2).abs() < 1e-13);
        assert!((pair2.c02 - 0.75).abs() < 1e-13);
    }

    #[test]
    fn heights_residuals_are_tiny() {
        for (n, theta, ab) in [
            (1, 0.3, 1.0),
            (2, 0.3, 1.0),
            (1, 0.05, 1.0),
            (1, 0.3, 7.3500815030026566),
            (2, 0.1, 0.5),
        ] {
            let pair = spike_heights(n, theta, ab);
            assert!(pair.admissible, "({n}, {theta}, {ab}) should be admissible");
            for c in [pair.c01, pair.c02] {
                let residual = half_pow(2.0, n) * c * c - half_pow(3.0, n) * (ab + theta) * c
                    + half_pow(6.0, n) * theta * ab;
                assert!(
                    residual.abs() <= 1e-12 * (c * c).max(1.0),
                    "root {c} residual {residual}"
                );
            }
            assert!(0.0 < pair.c02 && pair.c02 <= pair.c01);
        }
    }

    #[test]
    fn zero_threshold_factors_the_quadratic() {
        for n in [1, 2] {
            let pair = spike_heights(n, 0.0, 1.0);
            assert_eq!(pair.c02, 0.0);
            assert!((pair.c01 - half_pow(1.5, n)).abs() < 1e-15);
            // Zero is not a positive height: the pair is inadmissible.
            assert!(!pair.admissible);
        }
    }

    #[test]
    fn threshold_consistency() {
        for n in [1, 2] {
            for ab in [1.0, 2.0, 7.35] {
                let bound = theta_max(n, ab);
                assert!(spike_heights(n, 0.999 * bound, ab).admissible);
                assert!(!spike_heights(n, 1.001 * bound, ab).admissible);
            }
        }
    }

    #[test]
    fn balancing_constant_terms() {
        let (i1, i2) = balancing_residuals(1, 2.5, 0.3, 0.0, 0.0);
        assert_eq!(i1, -0.3);
        assert!((i2 - (-0.3 / 2.5f64.sqrt())).abs() < 1e-15);
        assert!((i2 - (-0.18973665961010276)).abs() < 1e-15);
    }

    #[test]
    fn balancing_degenerates_at_unit_speed() {
        // At c = 1 the two residuals are the same polynomial.
        let mut state = 0x243f6a8885a308d3u64;
        let mut unit = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let (s1, s2) = (3.0 * unit(), 3.0 * unit());
            for n in [1, 2] {
                let (i1, i2) = balancing_residuals(n, 1.0, 0.3, s1, s2);
                assert!((i1 - i2).abs() <= 1e-12 * (1.0 + i1.abs()));
            }
        }
    }

    #[test]
    fn single_species_root_zeroes_first_residual() {
        for n in [1, 2] {
            let c01 = spike_heights(n, 0.3, 1.0).c01;
            let (i1, _) = balancing_residuals(n, 1.7, 0.3, c01, 0.0);
            assert!(i1.abs() < 1e-14, "I1 at (c01, 0) is {i1}");
        }
    }

    #[test]
    fn jacobian_is_symmetric_and_matches_differences() {
        let (n, c, theta) = (1, 1.3, 0.2);
        for (s1, s2) in [(0.3, 0.7), (1.1, 0.2), (0.01, 1.9)] {
            let j = balancing_jacobian(n, c, theta, s1, s2);
            assert_eq!(j[0][1].to_bits(), j[1][0].to_bits());
            let step = 1e-6;
            let (i1p, i2p) = balancing_residuals(n, c, theta, s1 + step, s2);
            let (i1m, i2m) = balancing_residuals(n, c, theta, s1 - step, s2);
            assert!(((i1p - i1m) / (2.0 * step) - j[0][0]).abs() < 1e-8);
            assert!(((i2p - i2m) / (2.0 * step) - j[1][0]).abs() < 1e-8);
            let (i1p, i2p) = balancing_residuals(n, c, theta, s1, s2 + step);
            let (i1m, i2m) = balancing_residuals(n, c, theta, s1, s2 - step);
            assert!(((i1p - i1m) / (2.0 * step) - j[0][1]).abs() < 1e-8);
            assert!(((i2p - i2m) / (2.0 * step) - j[1][1]).abs() < 1e-8);
        }
    }

    #[test]
    fn branch_discriminant_constant_term() {
        for n in [1, 2] {
            for theta in [0.05, 0.3] {
                let b = coexistence_branches(n, 1.4, theta, 0.0);
                let two_n = (2.0f64).powi(n as i32);
                let expected = theta * theta / two_n
                    - (4.0 / half_pow(3.0, n) - 2.0 / two_n) * theta
                    + 1.0 / two_n;
                assert!((b.delta1 - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn branches_invert_their_residuals() {
        let (n, c, theta) = (1, 1.3, 0.2);
        for k in 0..200 {
            let s2 = 2.0 * (k as f64 + 0.5) / 200.0;
            let b = coexistence_branches(n, c, theta, s2);
            for g in [b.g1, b.g2] {
                if let Some(s1) = g {
                    let (i1, _) = balancing_residuals(n, c, theta, s1, s2);
                    assert!(i1.abs() <= 1e-10, "I1(g, {s2}) = {i1}");
                }
            }
            for g in [b.g3, b.g4] {
                if let Some(s1) = g {
                    let (_, i2) = balancing_residuals(n, c, theta, s1, s2);
                    assert!(i2.abs() <= 1e-10, "I2(g, {s2}) = {i2}");
                }
            }
        }
    }

    #[test]
    fn plus_branches_start_ordered_and_decrease() {
        // g1(0) > g3(0) for small thresholds, and both decrease in S2.
        let (n, c, theta) = (1, 1.05, 0.05);
        let at0 = coexistence_branches(n, c, theta, 0.0);
        assert!(at0.g1.unwrap() > at0.g3.unwrap());
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..1000 {
            let s2 = 1.5 * (k as f64) / 999.0;
            let b = coexistence_branches(n, c, theta, s2);
            if let (Some(g1), Some(g3)) = (b.g1, b.g3) {
                if let Some((p1, p3)) = prev {
                    assert!(g1 < p1, "g1 not decreasing at S2 = {s2}");
                    assert!(g3 < p3, "g3 not decreasing at S2 = {s2}");
                }
                prev = Some((g1, g3));
            } else {
                prev = None;
            }
        }
    }

    #[test]
    fn unit_speed_collapses_to_single_species_heights() {
        // At c = 1, S1 = g1(S2) satisfies S1 + S2 = c01 identically.
        let pair = spike_heights(1, 0.3, 1.0);
        for k in 0..100 {
            let s2 = 1.0 * k as f64 / 99.0;
            let b = coexistence_branches(1, 1.0, 0.3, s2);
            if let Some(g1) = b.g1 {
                assert!((g1 + s2 - pair.c01).abs() < 1e-12);
            }
            if let Some(g2) = b.g2 {
                assert!((g2 + s2 - pair.c02).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_family_is_sampled() {
        let roots = solve_coexistence(1, 1.0, 0.3);
        assert!(!roots.is_empty());
        let pair = spike_heights(1, 0.3, 1.0);
        let mut saw_tall_family = false;
        let mut saw_short_family = false;
        for root in &roots {
            assert!(root.degenerate_family);
            assert!(root.s1 > 0.0 && root.s2 > 0.0);
            let sum = root.s1 + root.s2;
            let near_tall = (sum - pair.c01).abs() < 1e-9;
            let near_short = (sum - pair.c02).abs() < 1e-9;
            assert!(near_tall || near_short, "family sum {sum} matches neither height");
            saw_tall_family |= near_tall;
            saw_short_family |= near_short;
            assert!(root.residual_i1.abs() <= 1e-10 && root.residual_i2.abs() <= 1e-10);
        }
        assert!(saw_tall_family && saw_short_family);
    }

    #[test]
    fn away_from_the_window_no_roots_exist() {
        // The isolated-root window hugs the bifurcation threshold; at a small
        // threshold every pairing keeps one sign across the scan.
        assert!(solve_coexistence(1, 1.02, 0.05).is_empty());
    }

    #[test]
    fn tuned_threshold_yields_one_unstable_case_i_root() {
        let roots = solve_coexistence(1, 1.02, 0.255);
        assert_eq!(roots.len(), 1);
        let root = &roots[0];
        assert_eq!(root.case, MatchedCase::G1G3);
        assert_eq!(root.case.label(), "i");
        assert!(!root.degenerate_family);
        assert!((root.s1 - 0.234143265942).abs() < 1e-9);
        assert!((root.s2 - 0.920339339870).abs() < 1e-9);
        assert!(root.residual_i1.abs() <= 1e-10 && root.residual_i2.abs() <= 1e-10);
    }

    #[test]
    fn pattern_heights_and_evaluation() {
        let site = maximum_at(vec![0.0], 1.0, vec![2.0]);
        let pattern = build_pattern(&[site], &[SpikeBranch::Tall], 10.0, 0.3, 1).unwrap();
        let c01 = spike_heights(1, 0.3, 1.0).c01;
        assert_eq!(pattern.sites[0].height, c01);
        // u(x) = c01·e^{−10x²}: half curvature times chi is 10.
        let at_half = evaluate_pattern(&pattern, &[0.5]);
        assert!((at_half - c01 * (-2.5f64).exp()).abs() < 1e-15);
        assert!((at_half - 0.093078029048904883).abs() < 1e-12);
        assert!((at_half - 0.09308).abs() < 1e-5);
        assert_eq!(evaluate_pattern(&pattern, &[0.0]), c01);
    }

    #[test]
    fn off_sites_carry_zero_height() {
        let sites = [
            maximum_at(vec![0.5], 1.99, vec![99.7]),
            maximum_at(vec![-0.5], 1.0, vec![99.7]),
        ];
        let pattern =
            build_pattern(&sites, &[SpikeBranch::Tall, SpikeBranch::Off], 50.0, 0.3, 1).unwrap();
        assert_eq!(pattern.sites[1].height, 0.0);
        // At the off site only the active spike's (underflowed) tail remains.
        let tails = evaluate_pattern(&pattern, &[-0.5]);
        assert!(tails < 1e-15, "active tail at the off site is {tails}");
    }

    #[test]
    fn inadmissible_threshold_names_the_bound() {
        let site = maximum_at(vec![0.0], 1.0, vec![2.0]);
        let err = build_pattern(&[site], &[SpikeBranch::Tall], 10.0, 0.47, 1).unwrap_err();
        match err {
            AsymptoticsError::InadmissibleTheta { theta, bound } => {
                assert_eq!(theta, 0.47);
                assert!((bound - theta_max(1, 1.0)).abs() < 1e-15);
            }
            other => panic!("unexpected error {other:?}"),
        }
        let message = format!("{}", build_pattern(
            &[maximum_at(vec![0.0], 1.0, vec![2.0])],
            &[SpikeBranch::Tall],
            10.0,
            0.47,
            1,
        )
        .unwrap_err());
        assert!(message.contains("0.4641"), "message should name the bound: {message}");
    }

    #[test]
    fn heights_ignore_curvatures() {
        let mut state = 0x13198a2e03707344u64;
        let mut unit = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let reference =
            build_pattern(&[maximum_at(vec![0.0], 1.0, vec![2.0])], &[SpikeBranch::Tall], 10.0, 0.3, 1)
                .unwrap()
                .sites[0]
                .height;
        for _ in 0..100 {
            let h = 1e-3 + 100.0 * unit();
            let pattern =
                build_pattern(&[maximum_at(vec![0.0], 1.0, vec![h])], &[SpikeBranch::Tall], 10.0, 0.3, 1)
                    .unwrap();
            assert_eq!(pattern.sites[0].height.to_bits(), reference.to_bits());
        }
    }

    #[test]
    fn speed_multiplier_sharpens_the_profile() {
        let site = maximum_at(vec![0.0], 1.0, vec![2.0]);
        let mut pattern = build_pattern(&[site], &[SpikeBranch::Tall], 10.0, 0.3, 1).unwrap();
        pattern.speed_multiplier = 2.5;
        let c01 = spike_heights(1, 0.3, 1.0).c01;
        let v = evaluate_pattern(&pattern, &[0.5]);
        assert!((v - c01 * (-2.5 * 2.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn beta_closed_forms() {
        let interval = Domain::interval(-1.0, 1.0);
        let beta = resource_beta(|_x: &[f64]| 2.0, &interval).unwrap();
        assert!((beta - 0.5).abs() < 1e-12);

        let unit = Domain::interval(0.0, 1.0);
        let beta = resource_beta(|x: &[f64]| 1.0 + x[0], &unit).unwrap();
        assert!((beta - 28.0 / 45.0).abs() < 1e-9);
        assert!((beta - 28.0 / 45.0).abs() < 1e-14);
    }

    #[test]
    fn beta_of_exponential_signal() {
        let a = 5.0 / (2.0 * std::f64::consts::PI).sqrt();
        let interval = Domain::interval(-1.0, 1.0);
        let beta = resource_beta(|x: &[f64]| (a * (-25.0 * x[0] * x[0]).exp()).exp(), &interval)
            .unwrap();
        assert!((beta - 0.19318123043829541).abs() < 1e-9);
    }

    #[test]
    fn beta_requires_positive_resource() {
        let interval = Domain::interval(-1.0, 1.0);
        let err = resource_beta(|x: &[f64]| x[0], &interval).unwrap_err();
        assert!(matches!(err, AsymptoticsError::NonPositiveResource { .. }));
    }

    #[test]
    fn beta_in_two_dimensions() {
        let square = Domain::rectangle([0.0, 0.0], [1.0, 1.0]);
        let beta = resource_beta(|_x: &[f64]| 3.0, &square).unwrap();
        assert!((beta - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ifd_threshold_reference_values() {
        // Force C4 = 1 with a constant resource sized to the site sum.
        let square = Domain::rectangle([0.0, 0.0], [1.0, 1.0]);
        let pi = std::f64::consts::PI;
        let (alpha1, c4, eps) =
            ifd_threshold(2, &[(1.0, vec![1.0, 1.0])], 1, |_x: &[f64]| pi.sqrt(), &square);
        assert!((alpha1 - 1.0).abs() < 1e-15);
        assert!((c4 - 1.0).abs() < 1e-12);
        assert!((eps - 0.375).abs() < 1e-12);

        let unit = Domain::interval(0.0, 1.0);
        let (_, c4, eps) =
            ifd_threshold(1, &[(1.0, vec![1.0])], 1, |_x: &[f64]| pi.powf(0.25), &unit);
        assert!((c4 - 1.0).abs() < 1e-12);
        assert!((eps - 0.16408469961176776).abs() < 1e-12);
        assert!((eps - (2.0 * 6.0f64.sqrt() - 3.0 * 2.0f64.sqrt()) / 4.0).abs() < 1e-12);

        let interval = Domain::interval(-1.0, 1.0);
        let (alpha1, c4, eps) =
            ifd_threshold(1, &[(1.0, vec![1.0])], 1, |_x: &[f64]| 1.0, &interval);
        assert!((alpha1 - 1.0).abs() < 1e-15);
        assert!((c4 - 2.0 / pi.sqrt()).abs() < 1e-12);
        assert!((c4 - 1.1283791670955126).abs() < 1e-12);
        assert!((eps - 0.14541627885077630).abs() < 1e-12);
        assert!((eps - 0.14542).abs() < 1e-5);
    }
}
