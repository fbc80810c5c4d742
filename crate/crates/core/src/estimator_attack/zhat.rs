//! Recovering `z ∈ [0,1]^v` from noisy answers `a_s ≈ <s, z>/v`, one per `s ∈ {0,1}^v`.
//!
//! Any `ẑ` with `|<ẑ, s>/v − a_s| <= ε` for every `s` is within `4ε` of `z` in
//! average L1 distance: split the coordinates by the sign of `ẑ − z` and test
//! those two `s`. We find such a point by minimizing the worst violation `t`
//! with a linear program over a growing subset of the constraints, adding the
//! violated ones each round until the point meets all of them.
//! Mask bit `i` is `s_i`.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::attack::{invalid, AttackError, Result};

/// Largest `v` accepted; the final check reads all `2^v` answers.
pub const MAX_ZHAT_V: usize = 16;

/// Slack on `ε` when accepting a solution.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

const CUTS_PER_ROUND: usize = 64;
const MAX_ROUNDS: usize = 500;

/// `|<z, s>/v − a_s|` for every mask.
fn violations(z: &[f64], answers: &[f64]) -> Vec<f64> {
    let v = z.len() as f64;
    let mut sums = vec![0.0f64; answers.len()];
    for mask in 1..answers.len() {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = sums[mask & (mask - 1)] + z[low];
    }
    sums.iter()
        .zip(answers)
        .map(|(s, a)| (s / v - a).abs())
        .collect()
}

/// Worst violation of `z` over all masks.
pub fn max_violation(z: &[f64], answers: &[f64]) -> f64 {
    violations(z, answers).into_iter().fold(0.0, f64::max)
}

fn solve(v: usize, answers: &[f64], active: &[usize]) -> Result<(Vec<f64>, f64)> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let z: Vec<_> = (0..v).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    let scale = 1.0 / v as f64;
    for &mask in active {
        let mut terms: Vec<_> = (0..v)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| (z[i], scale))
            .collect();
        terms.push((t, -1.0));
        lp.add_constraint(terms.as_slice(), ComparisonOp::Le, answers[mask]);
        let last = terms.len() - 1;
        terms[last].1 = 1.0;
        lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, answers[mask]);
    }
    let sol = lp
        .solve()
        .map_err(|e| AttackError::Decode(format!("linear program failed: {e}")))?;
    let zhat = z.iter().map(|&var| sol[var].clamp(0.0, 1.0)).collect();
    Ok((zhat, sol[t]))
}

/// A point of `[0,1]^v` meeting every answer to within `ε`, or
/// [`AttackError::Inconsistent`] when none exists (the answers were not `ε`-accurate).
pub fn zhat_recover(answers: &[f64], v: usize, epsilon: f64) -> Result<Vec<f64>> {
    if v == 0 || v > MAX_ZHAT_V {
        return invalid(format!("1 <= v <= {MAX_ZHAT_V} (got {v})"));
    }
    if answers.len() != 1 << v {
        return invalid(format!(
            "need 2^v = {} answers, got {}",
            1usize << v,
            answers.len()
        ));
    }
    if answers.iter().any(|a| !a.is_finite()) || epsilon.is_nan() || epsilon < 0.0 {
        return invalid("answers must be finite and epsilon non-negative");
    }
    // singletons, the full set and the empty set pin down most of the box
    let mut active: Vec<usize> = (0..v).map(|i| 1 << i).collect();
    active.push(0);
    if v > 1 {
        active.push((1 << v) - 1);
    }
    let mut in_active = vec![false; answers.len()];
    for &m in &active {
        in_active[m] = true;
    }
    for _ in 0..MAX_ROUNDS {
        let (zhat, t) = solve(v, answers, &active)?;
        let viol = violations(&zhat, answers);
        if viol.iter().all(|&x| x <= epsilon + FEASIBILITY_TOLERANCE) {
            return Ok(zhat);
        }
        if t > epsilon + FEASIBILITY_TOLERANCE {
            return Err(AttackError::Inconsistent(format!(
                "answers are not {epsilon}-consistent with any z in [0,1]^{v}: \
                 best worst-case error {t:.6}"
            )));
        }
        let mut cuts: Vec<usize> = (0..answers.len())
            .filter(|&m| !in_active[m] && viol[m] > epsilon + FEASIBILITY_TOLERANCE)
            .collect();
        if cuts.is_empty() {
            return Err(AttackError::Decode(
                "solver returned a point violating its own constraints".into(),
            ));
        }
        cuts.sort_by(|&a, &b| viol[b].total_cmp(&viol[a]));
        cuts.truncate(CUTS_PER_ROUND);
        for m in cuts {
            in_active[m] = true;
            active.push(m);
        }
    }
    Err(AttackError::Decode(format!(
        "constraint generation did not settle in {MAX_ROUNDS} rounds"
    )))
}

/// `<s, z>/v` for every mask; the ideal answers.
pub fn exact_answers(z: &[f64]) -> Vec<f64> {
    violations(z, &vec![0.0; 1 << z.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn l1_avg(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
    }

    #[test]
    fn exact_answers_recover_z() {
        let z = [0.25, 0.5, 1.0, 0.0];
        let got = zhat_recover(&exact_answers(&z), 4, 0.0).unwrap();
        assert!(l1_avg(&got, &z) < 1e-9, "{got:?}");
    }

    #[test]
    fn single_coordinate_interval() {
        for a in [0.0, 0.3, 0.97, 1.0] {
            let z = zhat_recover(&[0.0, a], 1, 0.05).unwrap();
            assert!(z[0] >= (a - 0.05f64).max(0.0) - 1e-9 && z[0] <= (a + 0.05f64).min(1.0) + 1e-9);
        }
    }

    #[test]
    fn noisy_answers_stay_within_four_epsilon() {
        let mut rng = stream_rng(11, 0);
        let eps = 0.05;
        for _ in 0..50 {
            let z: Vec<f64> = (0..4).map(|_| rng.gen()).collect();
            let answers: Vec<f64> = exact_answers(&z)
                .into_iter()
                .map(|a| a + if rng.gen_bool(0.5) { eps } else { -eps })
                .collect();
            let got = zhat_recover(&answers, 4, eps).unwrap();
            assert!(max_violation(&got, &answers) <= eps + 1e-9);
            assert!(l1_avg(&got, &z) <= 4.0 * eps + 1e-9);
        }
    }

    #[test]
    fn inconsistent_answers_rejected() {
        // a_{1} = a_{2} = 0 but a_{12} = 1 has no solution at ε = 0.1
        let err = zhat_recover(&[0.0, 0.0, 0.0, 1.0], 2, 0.1).unwrap_err();
        assert!(matches!(err, AttackError::Inconsistent(_)), "{err}");
    }

    #[test]
    fn larger_v_uses_cuts() {
        let mut rng = stream_rng(3, 0);
        let z: Vec<f64> = (0..10).map(|_| rng.gen()).collect();
        let answers: Vec<f64> = exact_answers(&z)
            .into_iter()
            .map(|a| a + rng.gen_range(-0.01..0.01))
            .collect();
        let got = zhat_recover(&answers, 10, 0.01).unwrap();
        assert!(max_violation(&got, &answers) <= 0.01 + 1e-9);
    }

    #[test]
    fn shape_checks() {
        assert!(zhat_recover(&[0.0; 3], 2, 0.1).is_err());
        assert!(zhat_recover(&[0.0; 2], 0, 0.1).is_err());
        assert!(zhat_recover(&[0.0], 17, 0.1).is_err());
    }
}
