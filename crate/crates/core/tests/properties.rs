//! Algebraic invariants of the coefficient ring and the super-polynomial space.

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qsuper::grassmann::{FlagSpace, SuperMonomial, SuperPoly};
use qsuper::ring::{
    Assignment, Mono, NumericEval, Rat, RingElem, RingSum, SymbolTable, MAX_SYMBOLS,
};
use qsuper::structure::{Parity, RootData};

fn table() -> Arc<SymbolTable> {
    SymbolTable::affine()
}

/// A sum of up to four small monomials over `(q - q^-1)^d`, `d <= 2`.
fn elem() -> impl Strategy<Value = RingElem> {
    let term = (
        prop::collection::vec(-3i16..=3, 3),
        0usize..8,
        -4i64..=4,
        1i64..=3,
    );
    (prop::collection::vec(term, 0..=4), 0u32..=2).prop_map(|(terms, d)| {
        let t = table();
        let mut out = RingElem::zero(&t);
        for (e, slot, n, den) in terms {
            let mut m = [0i16; MAX_SYMBOLS];
            m[0] = e[0];
            m[slot] += e[1];
            m[(slot + 3) % t.len()] += e[2];
            out = &out + &RingElem::monomial(&t, Mono(m), Rat::new(n, den));
        }
        out.div_qdiff(d)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in elem(), b in elem(), c in elem()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn results_are_canonical(a in elem(), b in elem()) {
        for x in [&a + &b, &a - &b, &a * &b, (&a * &b).div_qdiff(1)] {
            prop_assert_eq!(x.canonical(), x);
        }
    }

    #[test]
    fn qdiff_division_inverts_multiplication(a in elem(), d in 0u32..3) {
        let t = table();
        let lifted = &a * &RingElem::qdiff(&t).pow(d);
        prop_assert_eq!(lifted.div_qdiff(d), a);
    }

    #[test]
    fn ring_sum_matches_naive_sum(xs in prop::collection::vec((elem(), elem()), 0..6), extra in elem()) {
        let t = table();
        let mut acc = RingSum::new(&t);
        let mut naive = RingElem::zero(&t);
        for (a, b) in &xs {
            acc.add_product(a, b);
            naive = &naive + &(a * b);
        }
        acc.add(&extra);
        naive = &naive + &extra;
        prop_assert_eq!(acc.finish(), naive);
    }

    #[test]
    fn numeric_evaluation_is_a_homomorphism(a in elem(), b in elem(), seed in any::<u64>()) {
        let t = table();
        let asg = Assignment::random(&t, &mut ChaCha8Rng::seed_from_u64(seed));
        let ev = NumericEval::new(&asg);
        let (va, vb) = (ev.eval(&a).unwrap(), ev.eval(&b).unwrap());
        prop_assert_eq!(&va, &a.subst_numeric(&asg).unwrap());
        prop_assert_eq!(ev.eval(&(&a + &b)).unwrap(), &va + &vb);
        prop_assert_eq!(ev.eval(&(&a * &b)).unwrap(), &va * &vb);
    }

    #[test]
    fn quantum_integers(n in -20i64..=20, m in -20i64..=20) {
        let t = table();
        prop_assert_eq!(RingElem::qint(&t, -n), -RingElem::qint(&t, n));
        // [n + m] = [n] q^m + [m] q^-n
        let lhs = RingElem::qint(&t, n + m);
        let rhs = &(&RingElem::qint(&t, n) * &RingElem::q_pow(&t, m)) + &(&RingElem::qint(&t, m) * &RingElem::q_pow(&t, -n));
        prop_assert_eq!(lhs, rhs);
    }
}

fn space() -> (Arc<FlagSpace>, Arc<SymbolTable>, Vec<SuperMonomial>) {
    let root = RootData::new(2, 2).unwrap();
    let t = SymbolTable::finite(root.rank()).unwrap();
    let s = FlagSpace::new(root);
    let monos = s.monomials_up_to(3);
    (s, t, monos)
}

fn parity_sign(a: Parity, b: Parity) -> i64 {
    if a == Parity::Odd && b == Parity::Odd {
        -1
    } else {
        1
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn graded_commutativity(i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let (s, t, monos) = space();
        let (a, b) = (i.get(&monos).clone(), j.get(&monos).clone());
        let pa = SuperPoly::from_monomial(&s, &t, a.clone());
        let pb = SuperPoly::from_monomial(&s, &t, b.clone());
        let sign = RingElem::from_int(&t, parity_sign(a.parity(&s), b.parity(&s)));
        prop_assert_eq!(pa.mul(&pb), pb.mul(&pa).scale(&sign));
    }

    #[test]
    fn multiplication_is_associative(i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>(), k in any::<prop::sample::Index>()) {
        let (s, t, monos) = space();
        let p = |x: &prop::sample::Index| SuperPoly::from_monomial(&s, &t, x.get(&monos).clone());
        let (a, b, c) = (p(&i), p(&j), p(&k));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    }

    #[test]
    fn left_derivative_is_a_graded_derivation(i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>(), v in 0usize..5) {
        let (s, t, monos) = space();
        let (a, b) = (i.get(&monos).clone(), j.get(&monos).clone());
        let pa = SuperPoly::from_monomial(&s, &t, a.clone());
        let pb = SuperPoly::from_monomial(&s, &t, b);
        let pv = if s.is_odd(v) { Parity::Odd } else { Parity::Even };
        let sign = RingElem::from_int(&t, parity_sign(pv, a.parity(&s)));
        let lhs = pa.mul(&pb).partial_left(v);
        let rhs = pa.partial_left(v).mul(&pb).add(&pa.mul(&pb.partial_left(v)).scale(&sign));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn left_multiplication_then_derivative(i in any::<prop::sample::Index>(), v in 0usize..5) {
        // d_v (x_v m) = m + (-1)^{|v|} x_v d_v m
        let (s, t, monos) = space();
        let p = SuperPoly::from_monomial(&s, &t, i.get(&monos).clone());
        let sign = RingElem::from_int(&t, if s.is_odd(v) { -1 } else { 1 });
        let lhs = p.left_mul_var(v).partial_left(v);
        let rhs = p.add(&p.partial_left(v).left_mul_var(v).scale(&sign));
        prop_assert_eq!(lhs, rhs);
    }
}
