use crate::error::{Error, Result};

/// Generalized advantage estimates and value targets for a time-major batch
/// (`index = t * num_envs + e`). A done at step `t` cuts the recursion there.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_values: &[f64],
    num_envs: usize,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if num_envs == 0 || n % num_envs != 0 || values.len() != n || dones.len() != n || bootstrap_values.len() != num_envs {
        return Err(Error::shape("gae inputs", &[n, n, n, num_envs], &[rewards.len(), values.len(), dones.len(), bootstrap_values.len()]));
    }
    let steps = n / num_envs;
    let mut adv = vec![0.0; n];
    for e in 0..num_envs {
        let mut next_adv = 0.0;
        let mut next_value = bootstrap_values[e];
        for t in (0..steps).rev() {
            let i = t * num_envs + e;
            let live = if dones[i] { 0.0 } else { 1.0 };
            let delta = rewards[i] + gamma * next_value * live - values[i];
            next_adv = delta + gamma * lambda * live * next_adv;
            adv[i] = next_adv;
            next_value = values[i];
        }
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Shifts and scales to zero mean, unit standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len();
    if n < 2 {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n as f64;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt().max(1e-8);
    for a in adv.iter_mut() {
        *a = (*a - mean) / std;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Σ_k (γλ)^k δ_{t+k} with the sum stopping after the first done.
    fn brute_force(r: &[f64], v: &[f64], d: &[bool], boot: f64, gamma: f64, lambda: f64) -> Vec<f64> {
        let n = r.len();
        let value_after = |k: usize| if k + 1 < n { v[k + 1] } else { boot };
        (0..n)
            .map(|t| {
                let mut total = 0.0;
                let mut w = 1.0;
                for k in t..n {
                    let next = if d[k] { 0.0 } else { value_after(k) };
                    total += w * (r[k] + gamma * next - v[k]);
                    if d[k] {
                        break;
                    }
                    w *= gamma * lambda;
                }
                total
            })
            .collect()
    }

    #[test]
    fn lambda_zero_is_td_residual() {
        let r = [1.0, 0.5, -0.2];
        let v = [0.3, 0.1, 0.7];
        let (a, _) = compute_gae(&r, &v, &[false; 3], &[0.9], 1, 0.9, 0.0).unwrap();
        for t in 0..3 {
            let next = if t < 2 { v[t + 1] } else { 0.9 };
            assert!((a[t] - (r[t] + 0.9 * next - v[t])).abs() < 1e-15);
        }
    }

    #[test]
    fn undiscounted_sum_with_zero_values() {
        let r = [1.0, 2.0, 3.0, 4.0];
        let (a, ret) = compute_gae(&r, &[0.0; 4], &[false; 4], &[0.0], 1, 1.0, 1.0).unwrap();
        assert_eq!(a, vec![10.0, 9.0, 7.0, 4.0]);
        assert_eq!(ret, a);
    }

    #[test]
    fn interleaved_envs_are_independent() {
        let (a, _) = compute_gae(&[1.0, 10.0, 1.0, 10.0], &[0.0; 4], &[false; 4], &[0.0, 0.0], 2, 1.0, 1.0).unwrap();
        assert_eq!(a, vec![2.0, 20.0, 1.0, 10.0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(compute_gae(&[1.0; 3], &[0.0; 3], &[false; 3], &[0.0], 2, 0.9, 0.9).is_err());
    }

    proptest! {
        #[test]
        fn matches_direct_summation(
            r in prop::collection::vec(-5.0f64..5.0, 10),
            v in prop::collection::vec(-5.0f64..5.0, 10),
            d in prop::collection::vec(prop::bool::weighted(0.2), 10),
            boot in -5.0f64..5.0,
            gamma in 0.0f64..=1.0,
            lambda in 0.0f64..=1.0,
        ) {
            let (a, ret) = compute_gae(&r, &v, &d, &[boot], 1, gamma, lambda).unwrap();
            let oracle = brute_force(&r, &v, &d, boot, gamma, lambda);
            for t in 0..10 {
                prop_assert!((a[t] - oracle[t]).abs() < 1e-10);
                prop_assert!((ret[t] - (oracle[t] + v[t])).abs() < 1e-10);
            }
        }

        #[test]
        fn normalized_mean_zero_std_one(mut a in prop::collection::vec(-100.0f64..100.0, 2..200)) {
            prop_assume!(a.iter().any(|x| (x - a[0]).abs() > 1e-3));
            normalize_advantages(&mut a);
            let n = a.len() as f64;
            let mean = a.iter().sum::<f64>() / n;
            let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-6);
            prop_assert!((std - 1.0).abs() < 1e-6);
        }
    }
}
