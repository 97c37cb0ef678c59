//! Property tests across the crate's invariants.

use hopfwarp::certify::{certify_nonneg, CertifyOptions, Status};
use hopfwarp::curvature::{ricci_doubly_warped, DoublyWarpedMetric, Jet};
use hopfwarp::hopf::{act_ab, act_qz, phi_k, phi_k_inverse, right_translate, ActionWeights, S3Pair, UnitQuaternion};
use hopfwarp::huge::{Pos, Tower};
use hopfwarp::qz::{decompose, recompose, split_at, tail_product_with_carry, DigitVector, GeneratorChain, QZ};
use hopfwarp::snowflake::{
    classify_tangent_cone, edge_map, gamma_action, vertices, KLimit, ScaleRegime, SnowflakeError, VertexId,
};
use hopfwarp::Interval;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;

fn chain_strategy() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(2u64..9, 1..5)
}

fn order(ks: &[u64]) -> u64 {
    ks.iter().product()
}

/// Exact error of `a + b` in floating point (Knuth's two-sum).
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// The exact value `s + e` lies in `x`.
fn encloses(x: Interval, s: f64, e: f64) -> bool {
    x.lo <= s && s <= x.hi && (e <= 0.0 || x.hi > s) && (e >= 0.0 || x.lo < s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interval_add_and_mul_enclose_exact(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let (s, e) = two_sum(a, b);
        prop_assert!(encloses(Interval::point(a) + Interval::point(b), s, e));
        let p = a * b;
        prop_assert!(encloses(Interval::point(a) * Interval::point(b), p, a.mul_add(b, -p)));
    }

    #[test]
    fn interval_functions_contain_float_results(x in 1e-3f64..50.0, w in 0.0f64..1.0) {
        let iv = Interval::new(x, x + w);
        for t in [x, x + w / 2.0, x + w] {
            prop_assert!(iv.exp().contains(t.exp()));
            prop_assert!(iv.ln().contains(t.ln()));
            prop_assert!(iv.sin().contains(t.sin()));
            prop_assert!(iv.cos().contains(t.cos()));
            prop_assert!(iv.sqrt().contains(t.sqrt()));
        }
    }

    #[test]
    fn tower_comparison_agrees_with_floats(a in -300.0f64..300.0, b in -300.0f64..300.0) {
        prop_assume!((a - b).abs() > 1e-9);
        let (ta, tb) = (Tower::fin(a).exp(), Tower::fin(b).exp());
        prop_assert_eq!(ta.compare(&tb), a.partial_cmp(&b));
        let sum = Pos::from_f64(a.exp()).mul(&Pos::from_f64(b.exp())).unwrap();
        prop_assert!(sum.ln_interval().unwrap().contains(a + b) || (sum.ln_interval().unwrap().mid() - (a + b)).abs() < 1e-9);
    }

    #[test]
    fn digits_round_trip(ks in chain_strategy(), m in any::<u64>()) {
        let chain = GeneratorChain::new(ks.clone()).unwrap();
        let g = chain.element(m % order(&ks));
        let dv = decompose(&g, &chain).unwrap();
        prop_assert!(dv.validate(&chain).is_ok());
        prop_assert_eq!(recompose(&dv, &chain).unwrap(), g.clone());
        // γ = Σ a_j γ_j, summed in Q/Z
        let direct = dv.digits.iter().enumerate().fold(QZ::zero(), |acc, (j, &a)| acc.add(&chain.gamma(j).unwrap().times(a)));
        prop_assert_eq!(direct, g);
    }

    #[test]
    fn split_is_head_plus_tail(ks in chain_strategy(), m in any::<u64>(), j in 0usize..4) {
        let chain = GeneratorChain::new(ks.clone()).unwrap();
        let j = j % ks.len();
        let g = chain.element(m % order(&ks));
        let (head, tail) = split_at(&g, &chain, j).unwrap();
        prop_assert!(head.order() <= &chain.cumulative(j).unwrap());
        prop_assert_eq!(head.add(&recompose(&tail, &chain).unwrap()), g);
    }

    #[test]
    fn carry_is_zero_or_one(ks in chain_strategy(), a in any::<u64>(), b in any::<u64>(), j in 0usize..4) {
        let chain = GeneratorChain::new(ks.clone()).unwrap();
        let j = j % ks.len();
        let tail_of = |m: u64| split_at(&chain.element(m % order(&ks)), &chain, j).unwrap().1;
        let (t1, t2) = (tail_of(a), tail_of(b));
        let (c, t) = tail_product_with_carry(&t1, &t2, &chain, j).unwrap();
        prop_assert!(c <= 1);
        // t1 + t2 = c γ_j + t in Q/Z
        let lhs = recompose(&t1, &chain).unwrap().add(&recompose(&t2, &chain).unwrap());
        let rhs = chain.gamma(j).unwrap().times(c).add(&recompose(&t, &chain).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn action_law_and_projection(ks in chain_strategy(), a in any::<u64>(), b in any::<u64>(), pick in any::<u64>()) {
        let chain = GeneratorChain::new(ks.clone()).unwrap();
        let n = order(&ks);
        let (g, h) = (chain.element(a % n), chain.element(b % n));
        let j = (pick as usize) % ks.len();
        let level = vertices(&chain, j).unwrap();
        let v = &level[(pick as usize / ks.len()) % level.len()];
        let inner = gamma_action(&h, v, &chain).unwrap();
        let outer = gamma_action(&g, &inner.vertex, &chain).unwrap();
        let both = gamma_action(&g.add(&h), v, &chain).unwrap();
        prop_assert_eq!(&outer.vertex, &both.vertex);
        prop_assert_eq!(outer.internal.add(&inner.internal), both.internal);
        if j < chain.top() {
            let down = gamma_action(&g, &edge_map(v, &chain).unwrap(), &chain).unwrap();
            prop_assert_eq!(edge_map(&gamma_action(&g, v, &chain).unwrap().vertex, &chain).unwrap(), down.vertex);
        }
    }

    #[test]
    fn vertices_reject_bad_digits(ks in chain_strategy()) {
        let chain = GeneratorChain::new(ks.clone()).unwrap();
        if ks.len() > 1 {
            let mut tail = vec![0; ks.len() - 1];
            tail[0] = ks[1];
            prop_assert!(VertexId::new(0, tail, &chain).is_err());
        }
        prop_assert!(VertexId::new(ks.len(), vec![], &chain).is_err());
    }

    #[test]
    fn classifier_is_total(tag in 0usize..5, s in 0.0f64..=1.0, k in prop::option::of(1u64..1000)) {
        let regime = match tag {
            0 => ScaleRegime::AtRj,
            1 => ScaleRegime::BetweenRjAndOrbit,
            2 => ScaleRegime::AtOrbitScale,
            3 => ScaleRegime::BetweenOrbitAndNext { s },
            _ => ScaleRegime::ApproachingNext,
        };
        let limit = k.map_or(KLimit::Infinite, KLimit::Finite);
        match classify_tangent_cone(regime, limit) {
            Ok(d) => prop_assert!(!d.label().is_empty()),
            Err(e) => prop_assert!(matches!(e, SnowflakeError::InvalidCombination(_))),
        }
    }

    #[test]
    fn rational_action_is_a_homomorphism(ks in chain_strategy(), a in any::<u64>(), b in any::<u64>(), seed in any::<u64>(), wa in -3i64..4, wb in -3i64..4) {
        let chain = GeneratorChain::new(ks.clone()).unwrap();
        let n = order(&ks);
        let (g, h) = (chain.element(a % n), chain.element(b % n));
        let p = S3Pair::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let w = ActionWeights::new(wa, wb);
        let lhs = act_qz(&g.add(&h), &p, w);
        let rhs = act_qz(&g, &act_qz(&h, &p, w), w);
        prop_assert!(lhs.dist(&rhs) < 1e-12);
        prop_assert!(act_qz(&QZ::zero(), &p, w).dist(&p) < 1e-15);
    }

    #[test]
    fn phi_k_intertwines(k in 1u32..8, theta in 0.0f64..6.3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = S3Pair::random(&mut rng);
        let q = UnitQuaternion::random(&mut rng);
        let lhs = phi_k(k, &act_ab(theta, &p, ActionWeights::new(1, k as i64)));
        let rhs = act_ab(theta, &phi_k(k, &p), ActionWeights::new(1, 0));
        prop_assert!(lhs.dist(&rhs) < 1e-12);
        prop_assert!(phi_k(k, &right_translate(&p, &q)).dist(&right_translate(&phi_k(k, &p), &q)) < 1e-12);
        prop_assert!(phi_k_inverse(k, &phi_k(k, &p)).dist(&p) < 1e-12);
    }

    #[test]
    fn quaternion_product_is_associative_and_unit(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (UnitQuaternion::random(&mut rng), UnitQuaternion::random(&mut rng), UnitQuaternion::random(&mut rng));
        prop_assert!(a.mul(&b).mul(&c).dist(&a.mul(&b.mul(&c))) < 1e-14);
        prop_assert!((a.mul(&b).norm() - 1.0).abs() < 1e-14);
        prop_assert!(a.mul(&a.inverse()).dist(&UnitQuaternion::identity()) < 1e-14);
    }

    /// Rescaling `g ↦ λ²g` (`f(r) ↦ λ f(r/λ)`) divides Ricci by `λ²`.
    #[test]
    fn ricci_scales_inversely(v in 0.1f64..3.0, d1 in -1.0f64..1.0, d2 in -1.0f64..1.0, u in 0.1f64..3.0, e1 in -1.0f64..1.0, e2 in -1.0f64..1.0, lam in 0.1f64..10.0) {
        let m = DoublyWarpedMetric::S3_S3;
        let (f, h) = (Jet::new(v, d1, d2), Jet::new(u, e1, e2));
        let (fs, hs) = (Jet::new(lam * v, d1, d2 / lam), Jet::new(lam * u, e1, e2 / lam));
        let (a, b) = (ricci_doubly_warped(&m, &f, &h), ricci_doubly_warped(&m, &fs, &hs));
        for (x, y) in [(a.rr, b.rr), (a.aa, b.aa), (a.ii, b.ii)] {
            prop_assert!((x - lam * lam * y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    /// Certified means nonnegative everywhere; a counterexample is real.
    #[test]
    fn certifier_verdicts_are_sound(c in -2.0f64..2.0, m in -0.5f64..0.5) {
        prop_assume!(m.abs() > 1e-3);
        let field = move |x: Interval| (x - c).sqr() + m;
        let r = certify_nonneg(field, Interval::new(-3.0, 3.0), &CertifyOptions::default());
        match r.status {
            Status::Certified => prop_assert!(m > 0.0),
            Status::Counterexample { x, value } => {
                prop_assert!(m < 0.0);
                prop_assert!(value < 0.0 && (x - c).powi(2) + m < 0.0);
            }
            Status::Inconclusive { .. } => prop_assert!(false, "quadratic left undecided"),
        }
    }
}

#[test]
fn digit_vector_zero_tail_is_identity() {
    let chain = GeneratorChain::new(vec![2, 3, 5]).unwrap();
    let z = DigitVector::zeros(1, 2);
    let v = VertexId::new(0, vec![1, 4], &chain).unwrap();
    let r = gamma_action(&QZ::zero(), &v, &chain).unwrap();
    assert_eq!(r.vertex, v);
    assert!(r.internal.is_zero());
    assert!(recompose(&z, &chain).unwrap().is_zero());
}

#[test]
fn towers_order_beyond_float_range() {
    let big = Tower::exp_n(2, Interval::point(10.0));
    let bigger = Tower::exp_n(2, Interval::point(11.0));
    assert_eq!(big.compare(&bigger), Some(Ordering::Less));
    assert_eq!(Tower::fin(1e300).compare(&big), Some(Ordering::Less));
}
