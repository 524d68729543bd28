//! Cloud-side aggregation of edge models.
//!
//! Each edge `i` reports its aggregate `AM_i` and the number of samples
//! `D_i` behind it. The cloud measures `b_i = ‖AM_i − global‖`, scores
//! `x_i = (D_i / min D) · (max b / b_i)` and assigns weights by maximizing
//!
//! ```text
//! Σ x_i · ln(1 + w_i)   subject to   w_i ≥ ζ,   Σ w_i ≤ τ
//! ```
//!
//! The program is strictly concave with a binding budget, so its optimum is
//! a water-filling: `w_i = max(ζ, x_i / v − 1)` for the multiplier `v` that
//! spends exactly `τ`. [`kkt_weights`] evaluates the closed form;
//! [`oracle_weights`] finds `v` by bisection and exists to check it.
//! The new global model is `Σ (w_i / τ) · AM_i`.

use crate::error::{Error, Result};
use crate::param::{weighted_sum, ParamVector};

/// Relative floor applied to edge distances before scoring.
pub const DISTANCE_EPSILON: f64 = 1e-9;

/// Tolerance on the budget constraint `Σ w = τ`.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Slack allowed on the floor constraint `w ≥ ζ`.
pub const FLOOR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudConfig {
    /// Minimum weight of any edge.
    pub zeta: f64,
    /// Total weight shared by all edges.
    pub tau: f64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        Self { zeta: 0.1, tau: 10.0 }
    }
}

impl CloudConfig {
    pub fn validate(&self, n_edges: usize) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta.is_finite() && self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "zeta and tau must be positive and finite, got zeta = {}, tau = {}",
                self.zeta, self.tau
            )));
        }
        if n_edges as f64 * self.zeta > self.tau {
            return Err(Error::Infeasible {
                n: n_edges,
                zeta: self.zeta,
                tau: self.tau,
            });
        }
        Ok(())
    }
}

/// An edge aggregate as received by the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeReport {
    pub edge_id: usize,
    pub model: ParamVector,
    /// Total training samples behind `model`.
    pub data_total: usize,
}

/// Per-edge quantities computed during a cloud round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeWeight {
    pub edge_id: usize,
    pub distance: f64,
    pub score: f64,
    pub weight: f64,
}

/// Output of [`kkt_weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub weights: Vec<f64>,
    /// Edges held at the floor `ζ`.
    pub clamped: Vec<bool>,
    /// True when the one-pass clamped set violated the constraints and had
    /// to be grown to a fixed point.
    pub iterative: bool,
    /// Number of passes over the unclamped set (1 for the direct path).
    pub passes: usize,
}

/// `‖edge − global‖₂`.
pub fn edge_distance(edge_model: &ParamVector, global: &ParamVector) -> Result<f64> {
    edge_model.l2_distance(global)
}

/// Edge scores from data totals and distances.
///
/// Distances are floored at `DISTANCE_EPSILON · max b` so an edge that
/// reproduces the global model does not divide by zero. If every distance
/// is zero the distance factor is 1 for all edges.
pub fn edge_scores(data_totals: &[usize], distances: &[f64]) -> Result<Vec<f64>> {
    if data_totals.is_empty() {
        return Err(Error::Empty("edge scores need at least one edge"));
    }
    if data_totals.len() != distances.len() {
        return Err(Error::LengthMismatch {
            expected: data_totals.len(),
            actual: distances.len(),
        });
    }
    if data_totals.contains(&0) {
        return Err(Error::InvalidArgument("edge data totals must be at least 1".into()));
    }
    if let Some(b) = distances.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
        return Err(Error::InvalidArgument(format!("invalid edge distance {b}")));
    }
    let min_d = *data_totals.iter().min().unwrap() as f64;
    let max_b = distances.iter().copied().fold(0.0, f64::max);
    let floor = DISTANCE_EPSILON * max_b;
    Ok(data_totals
        .iter()
        .zip(distances)
        .map(|(&d, &b)| {
            let ratio = if max_b == 0.0 { 1.0 } else { max_b / b.max(floor) };
            d as f64 / min_d * ratio
        })
        .collect())
}

fn check_scores(x: &[f64], cfg: &CloudConfig) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Empty("weights need at least one edge score"));
    }
    cfg.validate(x.len())?;
    if let Some(s) = x.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument(format!("edge scores must be positive, got {s}")));
    }
    Ok(())
}

/// Unclamped weight of edge `i` when the edges in `free` share the budget
/// left after the clamped ones:
///
/// ```text
/// f_i = [x_i (τ − |X|ζ + |V| − 1) − Σ_{j∈V, j≠i} x_j] / Σ_{j∈V} x_j
/// ```
fn free_weight(x: &[f64], i: usize, free: &[usize], n_clamped: usize, cfg: &CloudConfig) -> f64 {
    let sum_free: f64 = free.iter().map(|&j| x[j]).sum();
    let others = sum_free - x[i];
    let budget = cfg.tau - n_clamped as f64 * cfg.zeta + free.len() as f64 - 1.0;
    (x[i] * budget - others) / sum_free
}

/// Closed-form optimal weights.
///
/// The first pass evaluates the clamped set against all edges, exactly as
/// the direct formula prescribes. If any resulting free weight falls below
/// `ζ`, those edges join the clamped set and the free weights are
/// recomputed, until nothing changes.
pub fn kkt_weights(x: &[f64], cfg: &CloudConfig) -> Result<KktSolution> {
    check_scores(x, cfg)?;
    let n = x.len();
    let all: Vec<usize> = (0..n).collect();
    let mut clamped: Vec<bool> = all
        .iter()
        .map(|&i| cfg.zeta >= free_weight(x, i, &all, 0, cfg))
        .collect();
    let mut passes = 0;
    let mut iterative = false;
    loop {
        passes += 1;
        let free: Vec<usize> = all.iter().copied().filter(|&i| !clamped[i]).collect();
        let n_clamped = n - free.len();
        let mut weights = vec![cfg.zeta; n];
        for &i in &free {
            weights[i] = free_weight(x, i, &free, n_clamped, cfg);
        }
        let violators: Vec<usize> = free
            .iter()
            .copied()
            .filter(|&i| weights[i] < cfg.zeta - FLOOR_TOLERANCE)
            .collect();
        if violators.is_empty() {
            return Ok(KktSolution {
                weights,
                clamped,
                iterative,
                passes,
            });
        }
        iterative = true;
        for i in violators {
            clamped[i] = true;
        }
    }
}

/// Water-filling by bisection on the budget multiplier.
///
/// `w_i(v) = max(ζ, x_i / v − 1)` is non-increasing in `v`; bisection
/// narrows the bracket around the `v` with `Σ w_i(v) = τ` until it cannot
/// shrink further in floating point.
pub fn oracle_weights(x: &[f64], cfg: &CloudConfig) -> Result<Vec<f64>> {
    check_scores(x, cfg)?;
    let n = x.len() as f64;
    let fill = |v: f64| -> Vec<f64> { x.iter().map(|&xi| cfg.zeta.max(xi / v - 1.0)).collect() };
    let total = |v: f64| -> f64 { fill(v).iter().sum() };
    // At `hi` every edge sits on the floor; at `lo` the unclamped sum alone is τ.
    let mut hi = x.iter().copied().fold(0.0, f64::max) / (1.0 + cfg.zeta);
    let mut lo = x.iter().sum::<f64>() / (cfg.tau + n);
    if total(hi) >= cfg.tau - 1e-10 {
        return Ok(fill(hi));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > cfg.tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Whichever end of the final bracket spends the budget more exactly.
    let best = if (total(lo) - cfg.tau).abs() <= (total(hi) - cfg.tau).abs() {
        lo
    } else {
        hi
    };
    Ok(fill(best))
}

/// `Σ x_i ln(1 + w_i)`.
pub fn objective(x: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(xi, wi)| xi * wi.ln_1p()).sum()
}

/// Lagrange multipliers recovered from stationarity,
/// `x_i / (1 + w_i) − v + λ_i = 0`: `v` is the mean of `x_i / (1 + w_i)`
/// over unclamped edges (or the smallest such value if all are clamped) and
/// `λ_i = v − x_i / (1 + w_i)`.
pub fn kkt_multipliers(x: &[f64], w: &[f64], cfg: &CloudConfig) -> (f64, Vec<f64>) {
    let marginal: Vec<f64> = x.iter().zip(w).map(|(xi, wi)| xi / (1.0 + wi)).collect();
    let free: Vec<f64> = marginal
        .iter()
        .zip(w)
        .filter(|(_, &wi)| wi > cfg.zeta + 1e-12)
        .map(|(m, _)| *m)
        .collect();
    let v = if free.is_empty() {
        marginal.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    (v, marginal.iter().map(|m| v - m).collect())
}

/// `Σ (w_i / τ) · AM_i`, combined in ascending edge-id order.
pub fn cloud_aggregate(reports: &[EdgeReport], weights: &[f64], cfg: &CloudConfig) -> Result<ParamVector> {
    if reports.is_empty() {
        return Err(Error::Empty("cloud aggregation needs at least one edge"));
    }
    if reports.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: reports.len(),
            actual: weights.len(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if !((sum - cfg.tau).abs() <= SUM_TOLERANCE) {
        return Err(Error::InvalidArgument(format!(
            "edge weights sum to {sum}, not tau = {}; solve them first",
            cfg.tau
        )));
    }
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by_key(|&i| reports[i].edge_id);
    let models: Vec<&ParamVector> = order.iter().map(|&i| &reports[i].model).collect();
    let coeffs: Vec<f64> = order.iter().map(|&i| weights[i] / cfg.tau).collect();
    weighted_sum(&models, &coeffs)
}

/// Result of one cloud aggregation round.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudRound {
    pub global: ParamVector,
    /// One entry per report, in report order.
    pub edges: Vec<EdgeWeight>,
    pub iterative: bool,
}

/// Distances, scores, closed-form weights and the new global model.
pub fn run_cloud_round(reports: &[EdgeReport], global: &ParamVector, cfg: &CloudConfig) -> Result<CloudRound> {
    if reports.is_empty() {
        return Err(Error::Empty("cloud round needs at least one edge report"));
    }
    let distances = reports
        .iter()
        .map(|r| edge_distance(&r.model, global))
        .collect::<Result<Vec<_>>>()?;
    let totals: Vec<usize> = reports.iter().map(|r| r.data_total).collect();
    let scores = edge_scores(&totals, &distances)?;
    let solution = kkt_weights(&scores, cfg)?;
    let new_global = cloud_aggregate(reports, &solution.weights, cfg)?;
    let edges = reports
        .iter()
        .enumerate()
        .map(|(i, r)| EdgeWeight {
            edge_id: r.edge_id,
            distance: distances[i],
            score: scores[i],
            weight: solution.weights[i],
        })
        .collect();
    Ok(CloudRound {
        global: new_global,
        edges,
        iterative: solution.iterative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CFG: CloudConfig = CloudConfig { zeta: 0.1, tau: 10.0 };

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    fn report(edge_id: usize, model: &[f64], data_total: usize) -> EdgeReport {
        EdgeReport {
            edge_id,
            model: pv(model),
            data_total,
        }
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, CloudConfig) {
        let n = rng.random_range(2..=20);
        let x: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
        let tau = rng.random_range(1.0..20.0);
        let zeta = rng.random_range(0.0..tau / n as f64).max(1e-6);
        (x, CloudConfig { zeta, tau })
    }

    #[test]
    fn distance_examples() {
        let g = pv(&[1.0, 1.0]);
        assert_eq!(edge_distance(&g, &g).unwrap(), 0.0);
        assert_eq!(edge_distance(&pv(&[1.0, 2.0]), &g).unwrap(), 1.0);
        assert!(edge_distance(&pv(&[1.0]), &g).is_err());
    }

    #[test]
    fn score_examples() {
        assert_eq!(edge_scores(&[5, 5, 5], &[2.0, 2.0, 2.0]).unwrap(), vec![1.0; 3]);
        assert_eq!(edge_scores(&[200, 100], &[1.0, 2.0]).unwrap(), vec![4.0, 1.0]);
        // Halving edge 1's distance doubles its score only.
        let before = edge_scores(&[100, 100, 100], &[4.0, 2.0, 3.0]).unwrap();
        let after = edge_scores(&[100, 100, 100], &[4.0, 1.0, 3.0]).unwrap();
        assert_eq!(after[1], 2.0 * before[1]);
        assert_eq!(after[0], before[0]);
        assert_eq!(after[2], before[2]);
        assert!(edge_scores(&[], &[]).is_err());
        assert!(edge_scores(&[0, 1], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_distance_is_clamped() {
        let x = edge_scores(&[10, 10], &[0.0, 2.0]).unwrap();
        assert_eq!(x, vec![1.0 / DISTANCE_EPSILON, 1.0]);
        assert_eq!(edge_scores(&[10, 20], &[0.0, 0.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn symmetric_scores_give_equal_weights() {
        let sol = kkt_weights(&[3.0; 10], &CFG).unwrap();
        assert!(sol.weights.iter().all(|&w| (w - 1.0).abs() < 1e-12));
        assert!(!sol.iterative);
        let oracle = oracle_weights(&[3.0; 10], &CFG).unwrap();
        assert!(oracle.iter().all(|&w| (w - 1.0).abs() < 1e-9));
        let sym = CloudConfig { zeta: 0.1, tau: 4.0 };
        assert!(kkt_weights(&[1.0; 4], &sym)
            .unwrap()
            .weights
            .iter()
            .all(|&w| (w - 1.0).abs() < 1e-12));
    }

    #[test]
    fn low_scores_are_clamped_to_floor() {
        // Two far-away edges score 1, the rest 10.
        let mut x = vec![10.0; 10];
        x[2] = 1.0;
        x[3] = 1.0;
        let sol = kkt_weights(&x, &CFG).unwrap();
        assert_eq!(sol.weights[2], 0.1);
        assert_eq!(sol.weights[3], 0.1);
        for (i, w) in sol.weights.iter().enumerate() {
            if i != 2 && i != 3 {
                assert!((w - 9.8 / 8.0).abs() < 1e-12);
            }
        }
        assert!((sol.weights.iter().sum::<f64>() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn iterative_path_is_taken_and_recorded() {
        // Clamping the tiny edge shrinks the shared budget enough to push
        // the middle edge under the floor on the second pass.
        let x = [10.0, 4.0, 0.01];
        let cfg = CloudConfig { zeta: 0.5, tau: 3.0 };
        let sol = kkt_weights(&x, &cfg).unwrap();
        let oracle = oracle_weights(&x, &cfg).unwrap();
        for (a, b) in sol.weights.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{:?} vs {:?}", sol.weights, oracle);
        }
        assert!(sol.iterative, "{sol:?}");
        assert_eq!(sol.passes, 2);
        assert!((sol.weights[0] - 2.0).abs() < 1e-12);
        assert_eq!(&sol.weights[1..], &[0.5, 0.5]);
    }

    #[test]
    fn infeasible_and_invalid_inputs() {
        assert!(matches!(
            kkt_weights(&[1.0, 1.0], &CloudConfig { zeta: 3.0, tau: 4.0 }),
            Err(Error::Infeasible { .. })
        ));
        assert!(oracle_weights(&[1.0, 1.0], &CloudConfig { zeta: 3.0, tau: 4.0 }).is_err());
        assert!(kkt_weights(&[1.0, 0.0], &CFG).is_err());
        assert!(kkt_weights(&[], &CFG).is_err());
    }

    #[test]
    fn floor_equal_to_budget_share_clamps_everything() {
        let cfg = CloudConfig { zeta: 2.0, tau: 4.0 };
        let sol = kkt_weights(&[1.0, 3.0], &cfg).unwrap();
        assert_eq!(sol.weights, vec![2.0, 2.0]);
        assert_eq!(oracle_weights(&[1.0, 3.0], &cfg).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn closed_form_matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let (x, cfg) = random_instance(&mut rng);
            let sol = kkt_weights(&x, &cfg).unwrap();
            let oracle = oracle_weights(&x, &cfg).unwrap();
            for (a, b) in sol.weights.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-6);
            }
            assert!((objective(&x, &sol.weights) - objective(&x, &oracle)).abs() <= 1e-8);
        }
    }

    // Random feasible points never beat the solver.
    #[test]
    fn oracle_dominates_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = [0.3, 2.0, 5.0, 1.1, 9.0];
        let cfg = CloudConfig { zeta: 0.2, tau: 5.0 };
        let best = objective(&x, &oracle_weights(&x, &cfg).unwrap());
        for _ in 0..1000 {
            let raw: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let spare = cfg.tau - 5.0 * cfg.zeta;
            let scale = rng.random::<f64>();
            let w: Vec<f64> = raw.iter().map(|r| cfg.zeta + spare * scale * r / total).collect();
            assert!(objective(&x, &w) <= best + 1e-12);
        }
    }

    #[test]
    fn complementary_slackness_at_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (x, cfg) = random_instance(&mut rng);
            let w = oracle_weights(&x, &cfg).unwrap();
            let (v, lambda) = kkt_multipliers(&x, &w, &cfg);
            assert!(v > 0.0);
            for (l, wi) in lambda.iter().zip(&w) {
                assert!((l * (cfg.zeta - wi)).abs() <= 1e-8);
                assert!(*l >= -1e-8);
            }
        }
    }

    #[test]
    fn aggregate_examples() {
        let same = vec![report(0, &[1.0, 2.0], 1), report(1, &[1.0, 2.0], 1)];
        let out = cloud_aggregate(&same, &[3.0, 7.0], &CFG).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-15 && (out[1] - 2.0).abs() < 1e-15);

        let two = vec![report(0, &[0.0, 0.0], 1), report(1, &[4.0, 4.0], 1)];
        assert_eq!(
            cloud_aggregate(&two, &[5.0, 5.0], &CFG).unwrap().as_slice(),
            &[2.0, 2.0]
        );

        // A floor-clamped edge contributes w/τ = 0.01 of its model.
        let clamped = vec![report(0, &[100.0], 1), report(1, &[0.0], 1)];
        let out = cloud_aggregate(&clamped, &[0.1, 9.9], &CFG).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-12);

        assert!(cloud_aggregate(&two, &[1.0, 1.0], &CFG).is_err());
        assert!(cloud_aggregate(&[], &[], &CFG).is_err());
    }

    #[test]
    fn single_edge_round() {
        let g = pv(&[0.0, 0.0]);
        let r = run_cloud_round(&[report(4, &[1.0, -1.0], 30)], &g, &CFG).unwrap();
        assert_eq!(r.edges[0].weight, 10.0);
        assert_eq!(r.global.as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn symmetric_round_has_uniform_weights() {
        let g = pv(&[0.0, 0.0]);
        let reports: Vec<EdgeReport> = (0..10)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 10.0;
                report(i, &[a.cos(), a.sin()], 30)
            })
            .collect();
        let r = run_cloud_round(&reports, &g, &CFG).unwrap();
        for e in &r.edges {
            assert!((e.weight - 1.0).abs() < 1e-9);
        }
        assert!(run_cloud_round(&[], &g, &CFG).is_err());
    }

    proptest! {
        #[test]
        fn solved_weights_are_feasible(
            x in proptest::collection::vec(0.1f64..10.0, 2..20),
            zeta_frac in 0.0f64..1.0,
            tau in 0.5f64..30.0,
        ) {
            let cfg = CloudConfig { zeta: (zeta_frac * tau / x.len() as f64).max(1e-9), tau };
            let sol = kkt_weights(&x, &cfg).unwrap();
            prop_assert!(sol.weights.iter().all(|&w| w >= cfg.zeta - FLOOR_TOLERANCE));
            prop_assert!((sol.weights.iter().sum::<f64>() - tau).abs() <= SUM_TOLERANCE);
            // Strict concavity witness at the solution.
            prop_assert!(x.iter().zip(&sol.weights).all(|(xi, wi)| -xi / (1.0 + wi).powi(2) < 0.0));
        }

        #[test]
        fn closed_form_is_optimal(x in proptest::collection::vec(0.1f64..10.0, 2..20), tau in 1.0f64..20.0) {
            let cfg = CloudConfig { zeta: 0.1f64.min(tau / x.len() as f64), tau };
            let kkt = kkt_weights(&x, &cfg).unwrap();
            let oracle = oracle_weights(&x, &cfg).unwrap();
            prop_assert!(objective(&x, &kkt.weights) >= objective(&x, &oracle) - 1e-8);
        }

        #[test]
        fn weight_is_monotone_in_own_score(
            x in proptest::collection::vec(0.1f64..10.0, 2..12),
            idx in 0usize..12,
            bump in 1.0f64..5.0,
        ) {
            let i = idx % x.len();
            let mut y = x.clone();
            y[i] *= bump;
            let before = oracle_weights(&x, &CFG.min_feasible(x.len())).unwrap();
            let after = oracle_weights(&y, &CFG.min_feasible(x.len())).unwrap();
            prop_assert!(after[i] >= before[i] - 1e-9);
        }

        #[test]
        fn weights_are_scale_invariant(x in proptest::collection::vec(0.1f64..10.0, 2..20), k in 0.01f64..100.0) {
            let cfg = CFG.min_feasible(x.len());
            let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
            let a = kkt_weights(&x, &cfg).unwrap();
            let b = kkt_weights(&scaled, &cfg).unwrap();
            for (p, q) in a.weights.iter().zip(&b.weights) {
                prop_assert!((p - q).abs() <= 1e-10);
            }
        }
    }

    impl CloudConfig {
        /// Shrinks ζ when needed so `n` edges stay feasible.
        fn min_feasible(self, n: usize) -> Self {
            Self {
                zeta: self.zeta.min(self.tau / n as f64),
                tau: self.tau,
            }
        }
    }
}
