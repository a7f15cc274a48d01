//! Linear stability of spike patterns and competition equilibria.
//!
//! Perturbing one spike of height ξ produces a leading-order eigenvalue
//! λ = α₀·h′(ξ) with α₀ = π^{−n/2} and
//!
//! ```text
//! h(ξ) = ξ·[−2^{n/2}ξ² + 3^{n/2}(ā+θ)ξ − 6^{n/2}θā],
//! ```
//!
//! whose bracket vanishes exactly at the two admissible heights. The sign
//! structure h′(0) < 0, h′(c01) < 0, h′(c02) > 0 makes every short-branch
//! site unstable and tall/off patterns linearly stable ([`classify_pattern`]).
//!
//! For two-species coexistence roots (S₁*, S₂*), stability reduces to the
//! 2×2 Jacobian B of the balancing residuals (I₁, I₂): unstable when
//! Det B < 0 or Tr B > 0 ([`coexistence_stability`]). The determinant is
//! cross-checked against the independently expanded polynomial I₃ — the two
//! routes are never collapsed. Resource-following equilibria (0, r),
//! (0, βθr), and (u*, 0) are classified by [`ifd_equilibria_report`],
//! including the small-threshold override that destabilizes every resident
//! pattern once θ < ε₁*/χ^{n/2}.

use crate::asymptotics::{
    balancing_jacobian, build_pattern_scaled, half_pow, ifd_threshold, integrate_powers,
    AsymptoticsError, CoexistenceRoot, SpikeBranch, SpikePattern,
};
use crate::domain::Domain;
use crate::potential::CriticalPoint;

/// |λ| at or below this is marginal: the neglected O(ε) correction dominates.
pub const MARGINAL_TOL: f64 = 1e-10;

/// Sign-based classification of a leading-order eigenvalue set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Every eigenvalue is negative beyond the marginal band.
    LinearlyStable,
    /// Some eigenvalue is positive beyond the marginal band.
    Unstable,
    /// The decisive eigenvalue sits inside the marginal band.
    Marginal,
}

fn verdict_from(lambdas: &[f64]) -> Verdict {
    if lambdas.iter().any(|&l| l > MARGINAL_TOL) {
        Verdict::Unstable
    } else if lambdas.iter().any(|&l| l.abs() <= MARGINAL_TOL) {
        Verdict::Marginal
    } else {
        Verdict::LinearlyStable
    }
}

/// The height curve h and its derivative at ξ:
/// h = ξ·[−2^{n/2}ξ² + 3^{n/2}(ā+θ)ξ − 6^{n/2}θā],
/// h′ = −3·2^{n/2}ξ² + 2·3^{n/2}(ā+θ)ξ − 6^{n/2}θā.
pub fn h_eval(n: usize, theta: f64, a_bar: f64, xi: f64) -> (f64, f64) {
    let two = half_pow(2.0, n);
    let three = half_pow(3.0, n);
    let six = half_pow(6.0, n);
    let h = xi * (-two * xi * xi + three * (a_bar + theta) * xi - six * theta * a_bar);
    let h_prime = -3.0 * two * xi * xi + 2.0 * three * (a_bar + theta) * xi - six * theta * a_bar;
    (h, h_prime)
}

/// Leading eigenvalue data for one site of a pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteStability {
    pub branch: SpikeBranch,
    /// The site's leading-order height c_{i,0} ∈ {c01, c02, 0}.
    pub height: f64,
    pub h_prime: f64,
    /// λ = α₀·h′(c_{i,0}).
    pub lambda_leading: f64,
}

/// Stability classification of a spike pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// α₀ = π^{−n/2}.
    pub alpha0: f64,
    pub sites: Vec<SiteStability>,
    pub verdict: Verdict,
}

/// Classify a spike pattern: per-site λ = π^{−n/2}·h′(height), unstable
/// exactly when a site sits on the short branch (whose h′ is positive).
pub fn classify_pattern(pattern: &SpikePattern) -> StabilityReport {
    let alpha0 = 1.0 / half_pow(std::f64::consts::PI, pattern.dim);
    let sites: Vec<SiteStability> = pattern
        .sites
        .iter()
        .map(|site| {
            let (_, h_prime) = h_eval(pattern.dim, pattern.theta, site.plateau, site.height);
            SiteStability {
                branch: site.branch,
                height: site.height,
                h_prime,
                lambda_leading: alpha0 * h_prime,
            }
        })
        .collect();
    let lambdas: Vec<f64> = sites.iter().map(|s| s.lambda_leading).collect();
    StabilityReport { alpha0, sites, verdict: verdict_from(&lambdas) }
}

/// Two-valued verdict for coexistence roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateVerdict {
    /// Tr ≤ 0 and Det ≥ 0: not excluded at leading order.
    StableCandidate,
    /// Det < 0 or Tr > 0.
    Unstable,
}

/// Linearization data of the balancing system at a coexistence root.
#[derive(Debug, Clone, PartialEq)]
pub struct CoexistenceVerdict {
    pub d_i1_s1: f64,
    /// Off-diagonal entry; ∂I₁/∂S₂ and ∂I₂/∂S₁ are the same polynomial.
    pub d_i1_s2: f64,
    pub d_i2_s2: f64,
    pub trace: f64,
    pub determinant: f64,
    /// Independent evaluation of the expanded determinant polynomial I₃.
    pub det_crosscheck: f64,
    pub verdict: CandidateVerdict,
}

/// The determinant of the balancing Jacobian, fully expanded as a polynomial
/// in (S₁, S₂, 1+θ). Kept as a separate evaluation route from the 2×2
/// determinant so the two can be compared, never substituted for each other.
fn i3_polynomial(n: usize, c: f64, theta: f64, s1: f64, s2: f64) -> f64 {
    let p = |base: f64| 1.0 / half_pow(base, n);
    let pn = |base: f64| 1.0 / base.powi(n as i32);
    let t = 1.0 + theta;
    4.0 * (p(6.0 * c + 3.0) - pn(c + 2.0)) * s1 * s1
        + 4.0 * (p(9.0 * c) - p((2.0 + c) * (2.0 * c + 1.0))) * s1 * s2
        + 4.0 * (p(6.0 * c + 3.0 * c * c) - pn(2.0 * c + 1.0)) * s2 * s2
        + 2.0 * (-p(6.0 * c) - p(4.0 * c + 2.0) + 2.0 * p((c + 2.0) * (c + 1.0))) * t * s1
        + 2.0 * (2.0 * p((2.0 * c + 1.0) * (c + 1.0)) - p(c * (4.0 + 2.0 * c)) - p(6.0 * c))
            * t
            * s2
        + (p(4.0 * c) - pn(c + 1.0)) * t * t
}

/// Classify a coexistence root from the Jacobian of (I₁, I₂) at the root:
/// unstable when the determinant is negative or the trace positive.
pub fn coexistence_stability(
    n: usize,
    c: f64,
    theta: f64,
    root: &CoexistenceRoot,
) -> CoexistenceVerdict {
    let j = balancing_jacobian(n, c, theta, root.s1, root.s2);
    let trace = j[0][0] + j[1][1];
    let determinant = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let det_crosscheck = i3_polynomial(n, c, theta, root.s1, root.s2);
    let verdict = if determinant < 0.0 || trace > 0.0 {
        CandidateVerdict::Unstable
    } else {
        CandidateVerdict::StableCandidate
    };
    CoexistenceVerdict {
        d_i1_s1: j[0][0],
        d_i1_s2: j[0][1],
        d_i2_s2: j[1][1],
        trace,
        determinant,
        det_crosscheck,
        verdict,
    }
}

/// Verdict for the resource-tracking extinction state (0, r).
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceExtinctionVerdict {
    /// λ ≈ (θ∫r² − ∫r³)/∫r; negative exactly when θ < 1/β.
    pub lambda: f64,
    pub verdict: Verdict,
}

/// Verdict for the rescaled extinction state (0, βθr).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledExtinctionVerdict {
    /// Per-site λᵢ = π^{−n/2}·ā_m·θ(1−βθ)(β−1), signed as evaluated.
    pub lambdas: Vec<f64>,
    pub verdict: Verdict,
    /// True when the signed formula fails to deliver the instability the
    /// leading-order theory claims for this state (it does whenever β < 1).
    pub contradicts_claimed_instability: bool,
}

/// Verdict for the resident pattern state (u*, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct ResidentPatternVerdict {
    pub report: StabilityReport,
    pub epsilon1_star: f64,
    /// θ < ε₁*/χ^{n/2}: invasion destabilizes every branch assignment.
    pub small_theta_override: bool,
    pub verdict: Verdict,
}

/// The three equilibrium verdicts for the resource-following pair.
#[derive(Debug, Clone, PartialEq)]
pub struct IfdEquilibriaReport {
    pub beta: f64,
    pub extinction_to_resource: ResourceExtinctionVerdict,
    pub extinction_to_scaled_resource: ScaledExtinctionVerdict,
    pub resident_pattern: ResidentPatternVerdict,
}

/// Classify the three equilibria (0, r), (0, βθr), and (u*, 0) of the
/// resource-following pair with advection strengths χ and χ·c.
///
/// Maxima are the signal's critical points (plateaus ā_m = e^{A_m} are taken
/// from their values); `branches` assigns the resident pattern's heights. The
/// resident verdict combines the single-species classification with the
/// small-threshold override θ < ε₁*/χ^{n/2}, under which invasion succeeds
/// against any branch assignment.
pub fn ifd_equilibria_report<F>(
    n: usize,
    theta: f64,
    chi: f64,
    r: F,
    domain: &Domain,
    maxima: &[CriticalPoint],
    branches: &[SpikeBranch],
) -> Result<IfdEquilibriaReport, AsymptoticsError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(theta > 0.0, "Allee threshold must be positive");
    assert!(chi > 0.0, "advection strength must be positive");
    let moments = integrate_powers(&r, domain, &[1, 2, 3], true)?;
    let (r1, r2, r3) = (moments[0], moments[1], moments[2]);
    let beta = r2 / r3;
    let alpha0 = 1.0 / half_pow(std::f64::consts::PI, n);

    let lambda_resource = (theta * r2 - r3) / r1;
    let extinction_to_resource = ResourceExtinctionVerdict {
        lambda: lambda_resource,
        verdict: verdict_from(&[lambda_resource]),
    };

    let plateaus: Vec<f64> = maxima.iter().map(|m| m.value.exp()).collect();
    let lambdas: Vec<f64> = plateaus
        .iter()
        .map(|a_bar| alpha0 * a_bar * theta * (1.0 - beta * theta) * (beta - 1.0))
        .collect();
    let scaled_verdict = verdict_from(&lambdas);
    let extinction_to_scaled_resource = ScaledExtinctionVerdict {
        lambdas,
        verdict: scaled_verdict,
        contradicts_claimed_instability: scaled_verdict != Verdict::Unstable,
    };

    let pattern = build_pattern_scaled(maxima, &plateaus, branches, chi, theta, n)?;
    let report = classify_pattern(&pattern);
    let active = branches.iter().filter(|b| **b != SpikeBranch::Off).count();
    let site_data: Vec<(f64, Vec<f64>)> = maxima
        .iter()
        .zip(&plateaus)
        .map(|(m, &a_bar)| (a_bar, m.curvatures.clone()))
        .collect();
    let (_, _, epsilon1_star) = ifd_threshold(n, &site_data, active, &r, domain);
    let small_theta_override = theta < epsilon1_star / half_pow(chi, n);
    let verdict = if small_theta_override { Verdict::Unstable } else { report.verdict };
    let resident_pattern =
        ResidentPatternVerdict { report, epsilon1_star, small_theta_override, verdict };

    Ok(IfdEquilibriaReport {
        beta,
        extinction_to_resource,
        extinction_to_scaled_resource,
        resident_pattern,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{
        build_pattern, solve_coexistence, spike_heights, theta_max, MatchedCase,
    };
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
    fn h_vanishes_at_height_roots() {
        for (n, theta, a_bar) in [(1, 0.3, 1.0), (2, 0.3, 1.0), (1, 0.05, 2.0)] {
            let pair = spike_heights(n, theta, a_bar);
            for xi in [pair.c01, pair.c02] {
                let (h, _) = h_eval(n, theta, a_bar, xi);
                assert!(h.abs() < 1e-12, "h({xi}) = {h}");
            }
        }
    }

    #[test]
    fn h_prime_reference_values() {
        let (_, hp0) = h_eval(1, 0.3, 1.0, 0.0);
        assert_eq!(hp0, -6.0f64.sqrt() * 0.3);
        let (_, hp2) = h_eval(2, 0.4, 2.0, 0.0);
        assert_eq!(hp2, -6.0 * 0.4 * 2.0);

        let (_, hp_tall) = h_eval(1, 0.3, 1.0, 1.13393);
        assert!((hp_tall - (-1.08355926164)).abs() < 1e-9);
        assert!((hp_tall - (-1.0836)).abs() < 1e-4);
        let (_, hp_short) = h_eval(1, 0.3, 1.0, 0.45824);
        assert!((hp_short - 0.437873750924).abs() < 1e-9);
        assert!((hp_short - 0.4379).abs() < 1e-4);
    }

    #[test]
    fn h_prime_sign_structure() {
        for n in [1, 2] {
            for a_bar in [1.0, 2.0, 7.35] {
                for k in 1..20 {
                    let theta = 0.99 * theta_max(n, a_bar) * k as f64 / 19.0;
                    let pair = spike_heights(n, theta, a_bar);
                    assert!(pair.admissible);
                    let (_, at_zero) = h_eval(n, theta, a_bar, 0.0);
                    let (_, at_tall) = h_eval(n, theta, a_bar, pair.c01);
                    let (_, at_short) = h_eval(n, theta, a_bar, pair.c02);
                    assert!(at_zero < 0.0, "h'(0) at ({n}, {theta}, {a_bar})");
                    assert!(at_tall < 0.0, "h'(c01) at ({n}, {theta}, {a_bar})");
                    assert!(at_short > 0.0, "h'(c02) at ({n}, {theta}, {a_bar})");
                }
            }
        }
    }

    #[test]
    fn tall_site_eigenvalue_matches_reference() {
        let site = maximum_at(vec![0.0], 1.0, vec![2.0]);
        let pattern = build_pattern(&[site], &[SpikeBranch::Tall], 10.0, 0.3, 1).unwrap();
        let report = classify_pattern(&pattern);
        assert_eq!(report.verdict, Verdict::LinearlyStable);
        assert!((report.alpha0 - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        let site = &report.sites[0];
        assert!((site.lambda_leading - (-0.61131126795535686)).abs() < 1e-9);
        assert!((site.lambda_leading - (-0.6113)).abs() < 5e-5);
        assert!((site.h_prime - (-1.0835210109894060)).abs() < 1e-9);
        assert_eq!(
            site.lambda_leading.to_bits(),
            (report.alpha0 * site.h_prime).to_bits()
        );
    }

    #[test]
    fn short_site_eigenvalue_matches_reference() {
        let site = maximum_at(vec![0.0], 1.0, vec![2.0]);
        let pattern = build_pattern(&[site], &[SpikeBranch::Short], 10.0, 0.3, 1).unwrap();
        let report = classify_pattern(&pattern);
        assert_eq!(report.verdict, Verdict::Unstable);
        let site = &report.sites[0];
        assert!((site.lambda_leading - 0.24704582378250348).abs() < 1e-9);
        assert!((site.lambda_leading - 0.2470).abs() < 5e-5);
        assert!((site.h_prime - 0.43787732171342381).abs() < 1e-9);
    }

    #[test]
    fn tall_and_off_patterns_are_stable() {
        let sites = [
            maximum_at(vec![0.5], 1.0, vec![80.0]),
            maximum_at(vec![-0.5], 1.0, vec![99.0]),
        ];
        let pattern =
            build_pattern(&sites, &[SpikeBranch::Tall, SpikeBranch::Off], 50.0, 0.3, 1).unwrap();
        let report = classify_pattern(&pattern);
        assert_eq!(report.verdict, Verdict::LinearlyStable);
        assert!(report.sites.iter().all(|s| s.lambda_leading < 0.0));

        let pattern =
            build_pattern(&sites, &[SpikeBranch::Tall, SpikeBranch::Short], 50.0, 0.3, 1).unwrap();
        assert_eq!(classify_pattern(&pattern).verdict, Verdict::Unstable);
    }

    #[test]
    fn verdict_ignores_geometry_and_advection() {
        let branches = [SpikeBranch::Tall, SpikeBranch::Short];
        let reference = {
            let sites = [
                maximum_at(vec![0.1], 1.0, vec![3.0]),
                maximum_at(vec![-0.7], 1.0, vec![5.0]),
            ];
            classify_pattern(&build_pattern(&sites, &branches, 10.0, 0.25, 1).unwrap())
        };
        let moved = {
            let sites = [
                maximum_at(vec![0.9], 1.0, vec![44.0]),
                maximum_at(vec![0.2], 1.0, vec![0.5]),
            ];
            classify_pattern(&build_pattern(&sites, &branches, 173.0, 0.25, 1).unwrap())
        };
        assert_eq!(reference.verdict, moved.verdict);
        for (a, b) in reference.sites.iter().zip(&moved.sites) {
            assert_eq!(a.lambda_leading.to_bits(), b.lambda_leading.to_bits());
        }
    }

    #[test]
    fn determinant_crosscheck_matches_jacobian() {
        let mut state = 0xa4093822299f31d0u64;
        let mut unit = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let n = if unit() < 0.5 { 1 } else { 2 };
            let c = 1.0 + 2.0 * unit();
            let theta = 0.01 + 0.4 * unit();
            let s1 = 2.0 * unit();
            let s2 = 2.0 * unit();
            let j = balancing_jacobian(n, c, theta, s1, s2);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let i3 = i3_polynomial(n, c, theta, s1, s2);
            assert!(
                (det - i3).abs() <= 1e-9 * det.abs().max(1.0),
                "det {det} vs I3 {i3} at (n={n}, c={c}, theta={theta}, {s1}, {s2})"
            );
        }
    }

    #[test]
    fn tuned_coexistence_root_is_unstable() {
        let roots = solve_coexistence(1, 1.02, 0.255);
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].case, MatchedCase::G1G3);
        let verdict = coexistence_stability(1, 1.02, 0.255, &roots[0]);
        assert_eq!(verdict.verdict, CandidateVerdict::Unstable);
        assert!((verdict.trace - (-0.88428886)).abs() < 1e-6);
        assert!(verdict.determinant < 0.0);
        assert!(verdict.determinant > -1e-5 && verdict.determinant < -9e-6);
        assert!(
            (verdict.determinant - verdict.det_crosscheck).abs()
                <= 1e-9 * verdict.determinant.abs().max(1.0)
        );
        // Symmetric off-diagonal by construction.
        let j = balancing_jacobian(1, 1.02, 0.255, roots[0].s1, roots[0].s2);
        assert_eq!(j[0][1].to_bits(), j[1][0].to_bits());
        assert_eq!(verdict.d_i1_s2, j[0][1]);
    }

    #[test]
    fn degenerate_family_roots_are_classified() {
        // Family samples at c = 1: every root gets a finite verdict; the
        // short-branch family is a saddle (Det < 0).
        let roots = solve_coexistence(1, 1.0, 0.3);
        assert!(!roots.is_empty());
        for root in &roots {
            let v = coexistence_stability(1, 1.0, 0.3, root);
            assert!(v.trace.is_finite() && v.determinant.is_finite());
        }
    }

    #[test]
    fn ifd_constant_resource_report() {
        let interval = Domain::interval(-1.0, 1.0);
        let maxima = [maximum_at(vec![0.0], 0.0, vec![1.0])];
        let report = ifd_equilibria_report(
            1,
            0.3,
            50.0,
            |_x: &[f64]| 1.0,
            &interval,
            &maxima,
            &[SpikeBranch::Tall],
        )
        .unwrap();
        // beta = ∫r²/∫r³ = 1 for r ≡ 1.
        assert!((report.beta - 1.0).abs() < 1e-12);
        // (0, r): λ = (0.3·2 − 2)/2 = −0.7.
        assert!((report.extinction_to_resource.lambda - (-0.7)).abs() < 1e-12);
        assert_eq!(report.extinction_to_resource.verdict, Verdict::LinearlyStable);
        // (0, βθr): the (β−1) factor vanishes, so the state is marginal and
        // the claimed instability is contradicted.
        assert!(report.extinction_to_scaled_resource.lambdas[0].abs() < 1e-12);
        assert_eq!(report.extinction_to_scaled_resource.verdict, Verdict::Marginal);
        assert!(report.extinction_to_scaled_resource.contradicts_claimed_instability);
        // (u*, 0): plateau e^0 = 1, matching the unit-plateau threshold value.
        assert!((report.resident_pattern.epsilon1_star - 0.14541627885077630).abs() < 1e-9);
        assert!(!report.resident_pattern.small_theta_override);
        assert_eq!(report.resident_pattern.verdict, Verdict::LinearlyStable);
    }

    #[test]
    fn small_threshold_override_destabilizes_any_branch() {
        let interval = Domain::interval(-1.0, 1.0);
        let maxima = [maximum_at(vec![0.0], 0.0, vec![1.0])];
        // ε1* = 0.14542, χ = 50: override bound is 0.02056.
        for branches in [[SpikeBranch::Tall], [SpikeBranch::Short]] {
            let report = ifd_equilibria_report(
                1,
                0.01,
                50.0,
                |_x: &[f64]| 1.0,
                &interval,
                &maxima,
                &branches,
            )
            .unwrap();
            assert!(report.resident_pattern.small_theta_override);
            assert_eq!(report.resident_pattern.verdict, Verdict::Unstable);
        }
        // The same setup above the bound keeps the tall branch stable.
        let report = ifd_equilibria_report(
            1,
            0.03,
            50.0,
            |_x: &[f64]| 1.0,
            &interval,
            &maxima,
            &[SpikeBranch::Tall],
        )
        .unwrap();
        assert!(!report.resident_pattern.small_theta_override);
        assert_eq!(report.resident_pattern.verdict, Verdict::LinearlyStable);
    }

    #[test]
    fn ifd_exponential_resource_report() {
        // Signal A = (5/√(2π))e^{−25x²}, resource r = e^A, θ = 0.3.
        let a_m = 5.0 / (2.0 * std::f64::consts::PI).sqrt();
        let interval = Domain::interval(-1.0, 1.0);
        let curvature = 2.0 * a_m * 25.0; // |A''(0)| = 2a/σ² with σ = 0.2
        let maxima = [maximum_at(vec![0.0], a_m, vec![curvature])];
        let report = ifd_equilibria_report(
            1,
            0.3,
            20.0,
            |x: &[f64]| (a_m * (-25.0 * x[0] * x[0]).exp()).exp(),
            &interval,
            &maxima,
            &[SpikeBranch::Tall],
        )
        .unwrap();
        assert!((report.beta - 0.19318123043829541).abs() < 1e-9);
        assert!((report.extinction_to_resource.lambda - (-16.4882236339386)).abs() < 1e-6);
        assert_eq!(report.extinction_to_resource.verdict, Verdict::LinearlyStable);
        assert!(
            (report.extinction_to_scaled_resource.lambdas[0] - (-0.945554151760814)).abs() < 1e-6
        );
        assert!(report.extinction_to_scaled_resource.contradicts_claimed_instability);
        // Tall resident pattern at plateau ā = e^{A_m} stays stable.
        let resident = &report.resident_pattern;
        assert_eq!(resident.verdict, Verdict::LinearlyStable);
        assert!(!resident.small_theta_override);
        let height = spike_heights(1, 0.3, a_m.exp()).c01;
        assert!((height - 8.9423029169335706).abs() < 1e-9);
    }
}
