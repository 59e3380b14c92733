use hapcache::ppo::{
    clipped_objective, gae_from, log_prob, proc_act, squash, surrogate_with_grad, value_targets_from, Mlp, Transition,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gae_oracle(r: &[f64], v: &[f64], v_next: &[f64], gamma: f64, zeta: f64) -> Vec<f64> {
    let n = r.len();
    let mut out = vec![0.0; n];
    for (start, slot) in out.iter_mut().enumerate() {
        for i in start..n {
            let td = r[i] + gamma * v_next[i] - v[i];
            *slot += (gamma * zeta).powi((i - start) as i32) * td;
        }
    }
    out
}

fn targets_oracle(r: &[f64], gamma: f64) -> Vec<f64> {
    (0..r.len())
        .map(|n| (n..r.len()).map(|i| gamma.powi((i - n) as i32) * r[i]).sum())
        .collect()
}

#[test]
fn proc_act_respects_capacity_on_random_actions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let k = rng.random_range(1..=7);
        let c = rng.random_range(1..=30);
        let n_sto = rng.random_range(0..=c);
        let a: Vec<bool> = (0..k * c).map(|_| rng.random_bool(0.5)).collect();
        let z = proc_act(&a, k, c, n_sto).unwrap();
        assert!(z.within_capacity(n_sto));
        for kk in 0..k {
            let set: Vec<usize> = (0..c).filter(|&cc| a[kk * c + cc]).collect();
            let kept: Vec<usize> = (0..c).filter(|&cc| z.get(kk, cc)).collect();
            assert_eq!(kept, set[..set.len().min(n_sto)]);
        }
        assert_eq!(proc_act(&z.z, k, c, n_sto).unwrap(), z);
    }
}

#[test]
fn zeta_zero_reduces_to_td_residual() {
    let r = [1.0, -2.0, 0.5];
    let v = [0.3, 0.1, -0.4];
    let vn = [0.1, -0.4, 0.9];
    let a = gae_from(&r, &v, &vn, 0.9, 0.0).unwrap();
    for i in 0..3 {
        assert_eq!(a[i], r[i] + 0.9 * vn[i] - v[i]);
    }
}

/// Two-parameter policy: one Bernoulli bit with logit `w·s + b`.
fn toy_batch(rng: &mut ChaCha8Rng, old: &Mlp) -> (Vec<Transition>, Vec<f64>) {
    let mut batch = Vec::new();
    let mut adv = Vec::new();
    for _ in 0..8 {
        let s = vec![rng.random_range(-1.0..1.0)];
        let p = squash(old.forward(&s)[0]);
        let a = vec![rng.random::<f64>() < p];
        batch.push(Transition {
            log_prob: log_prob(&[p], &a),
            s: s.clone(),
            a,
            r: 0.0,
            s_next: s,
        });
        adv.push(rng.random_range(-2.0..2.0));
    }
    (batch, adv)
}

#[test]
fn actor_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let old = Mlp {
            sizes: vec![1, 1],
            params: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
        };
        let (batch, adv) = toy_batch(&mut rng, &old);
        let mut cur = old.clone();
        cur.params[0] += 0.3;
        cur.params[1] -= 0.2;
        // Huge clip ratio: the plain importance-weighted surrogate.
        let eps = 1e9;
        let (_, grad) = surrogate_with_grad(&cur, &batch, &adv, eps);
        for j in 0..2 {
            let h = 1e-6;
            let mut up = cur.clone();
            up.params[j] += h;
            let mut dn = cur.clone();
            dn.params[j] -= h;
            let fd = (surrogate_with_grad(&up, &batch, &adv, eps).0 - surrogate_with_grad(&dn, &batch, &adv, eps).0)
                / (2.0 * h);
            assert!((fd - grad[j]).abs() <= 1e-4 * fd.abs().max(1e-8), "param {j}: fd {fd} analytic {}", grad[j]);
        }
    }
}

#[test]
fn clipped_gradient_matches_finite_differences_away_from_kinks() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let old = Mlp {
        sizes: vec![1, 1],
        params: vec![0.4, -0.1],
    };
    let (batch, adv) = toy_batch(&mut rng, &old);
    let mut cur = old.clone();
    cur.params[0] += 0.7;
    let eps = 0.2;
    let (_, grad) = surrogate_with_grad(&cur, &batch, &adv, eps);
    for j in 0..2 {
        let h = 1e-7;
        let mut up = cur.clone();
        up.params[j] += h;
        let mut dn = cur.clone();
        dn.params[j] -= h;
        let fd =
            (surrogate_with_grad(&up, &batch, &adv, eps).0 - surrogate_with_grad(&dn, &batch, &adv, eps).0) / (2.0 * h);
        assert!((fd - grad[j]).abs() <= 1e-4 * fd.abs().max(1e-8), "param {j}: fd {fd} analytic {}", grad[j]);
    }
}

#[test]
fn ratio_one_surrogate_is_mean_advantage() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let net = Mlp {
        sizes: vec![1, 1],
        params: vec![0.7, 0.2],
    };
    let (batch, adv) = toy_batch(&mut rng, &net);
    let (s, _) = surrogate_with_grad(&net, &batch, &adv, 0.2);
    let mean = adv.iter().sum::<f64>() / adv.len() as f64;
    assert_eq!(s, mean);
}

#[test]
fn surrogate_is_unbounded_for_negative_advantage() {
    // min(ρÂ, clip(ρ)Â) follows ρÂ when Â < 0 and ρ > 1 + ε.
    let v = clipped_objective(&[50.0], &[-1.0], 0.2);
    assert_eq!(v, -50.0);
    assert!(v.abs() > 1.2);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(256) })]

    #[test]
    fn gae_matches_brute_force(seed in any::<u64>(), n in 1usize..12, gamma in 0.01f64..0.999, zeta in 0.0f64..0.999) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-3.0..3.0)).collect() };
        let (r, v, vn) = (draw(n), draw(n), draw(n));
        let fast = gae_from(&r, &v, &vn, gamma, zeta).unwrap();
        let slow = gae_oracle(&r, &v, &vn, gamma, zeta);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn targets_match_brute_force(seed in any::<u64>(), n in 1usize..12, gamma in 0.0f64..0.999) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let fast = value_targets_from(&r, gamma).unwrap();
        let slow = targets_oracle(&r, gamma);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    // The bound holds whenever no negative advantage meets a ratio above 1 + ε.
    #[test]
    fn surrogate_bounded_where_it_can_be(
        pairs in prop::collection::vec((0.0f64..5.0, -3.0f64..3.0), 1..20),
        eps in 0.05f64..0.5,
    ) {
        let (ratios, adv): (Vec<f64>, Vec<f64>) = pairs
            .into_iter()
            .map(|(r, a)| if a < 0.0 { (r.min(1.0 + eps), a) } else { (r, a) })
            .unzip();
        let bound = (1.0 + eps) * adv.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        prop_assert!(clipped_objective(&ratios, &adv, eps).abs() <= bound + 1e-12);
    }
}
