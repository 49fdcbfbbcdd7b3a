use std::sync::Arc;

use apwave::freqset::{AdmissiblePair, GeneratorBasis, ModeId, ModeKind};
use apwave::TrigSum;
use proptest::prelude::*;

fn basis() -> Arc<GeneratorBasis> {
    Arc::new(GeneratorBasis::new(vec![1.0, 5f64.sqrt()], 14, 24.0).unwrap())
}

fn grid() -> Vec<f64> {
    (0..400).map(|i| -30.0 + 0.15 * i as f64).collect()
}

/// Terms `(a, b, is_sin, c)` with `|a + b√5| ≤ 12`, half the cutoff, so
/// products are never truncated.
fn terms() -> impl Strategy<Value = Vec<(i32, i32, bool, f64)>> {
    prop::collection::vec((-5i32..=5, -4i32..=4, any::<bool>(), -1.0f64..1.0), 0..6)
        .prop_map(|ts| ts.into_iter().filter(|(a, b, _, _)| (*a as f64 + *b as f64 * 5f64.sqrt()).abs() <= 12.0).collect())
}

fn build(b: &Arc<GeneratorBasis>, mean: f64, ts: &[(i32, i32, bool, f64)]) -> TrigSum {
    let mut u = TrigSum::constant(b, mean);
    for &(a, bb, is_sin, c) in ts {
        let v = [a, bb];
        u.add_term(if is_sin { ModeId::sin(&v) } else { ModeId::cos(&v) }, c);
    }
    u
}

/// Pointwise value from the term list, without going through `TrigSum`.
fn direct(mean: f64, ts: &[(i32, i32, bool, f64)], x: f64) -> f64 {
    mean + ts
        .iter()
        .map(|&(a, b, is_sin, c)| {
            let k = a as f64 + b as f64 * 5f64.sqrt();
            if is_sin {
                c * (k * x).sin()
            } else {
                c * (k * x).cos()
            }
        })
        .sum::<f64>()
}

fn max_diff(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
    grid().into_iter().map(|x| (f(x) - g(x)).abs()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn eval_matches_the_term_list(m in -1.0f64..1.0, ts in terms()) {
        let u = build(&basis(), m, &ts);
        prop_assert!(max_diff(|x| u.eval(x), |x| direct(m, &ts, x)) <= 1e-12);
    }

    #[test]
    fn products_agree_pointwise(m1 in -1.0f64..1.0, t1 in terms(), m2 in -1.0f64..1.0, t2 in terms()) {
        let b = basis();
        let (u, v) = (build(&b, m1, &t1), build(&b, m2, &t2));
        let uv = u.mul(&v).unwrap();
        prop_assert_eq!(uv.discarded_mass, 0.0);
        prop_assert!(max_diff(|x| uv.sum.eval(x), |x| direct(m1, &t1, x) * direct(m2, &t2, x)) <= 1e-11);
        // commutativity is exact up to summation order
        let vu = v.mul(&u).unwrap().sum;
        prop_assert!(uv.sum.sub(&vu).unwrap().norm_b2() <= 1e-14);
    }

    #[test]
    fn ring_laws(t1 in terms(), t2 in terms(), t3 in terms()) {
        let b = basis();
        let (u, v, w) = (build(&b, 0.3, &t1), build(&b, -0.2, &t2), build(&b, 0.0, &t3));
        // distributivity; the sums stay within the untruncated range
        let lhs = u.mul(&v.add(&w).unwrap()).unwrap().sum;
        let rhs = u.mul(&v).unwrap().sum.add(&u.mul(&w).unwrap().sum).unwrap();
        prop_assert!(max_diff(|x| lhs.eval(x), |x| rhs.eval(x)) <= 1e-11);
        prop_assert!(u.add(&u.scale(-1.0)).unwrap().is_zero());
        prop_assert_eq!(u.scale(0.0).is_zero(), true);
    }

    #[test]
    fn leibniz_rule(t1 in terms(), t2 in terms()) {
        let b = basis();
        let (u, v) = (build(&b, 0.5, &t1), build(&b, 1.0, &t2));
        let lhs = u.mul(&v).unwrap().sum.derivative();
        let rhs = u.derivative().mul(&v).unwrap().sum.add(&u.mul(&v.derivative()).unwrap().sum).unwrap();
        prop_assert!(max_diff(|x| lhs.eval(x), |x| rhs.eval(x)) <= 1e-10);
    }

    #[test]
    fn parseval_identity(m in -1.0f64..1.0, ts in terms()) {
        let u = build(&basis(), m, &ts);
        let mut expect = u.mean() * u.mean();
        for (mode, c) in u.terms() {
            if mode.kind != ModeKind::Mean {
                expect += 0.5 * c * c;
            }
        }
        prop_assert!((u.norm_b2().powi(2) - expect).abs() <= 1e-14);
    }

    /// The product of two elements of E has no mass outside E plus the mean.
    #[test]
    fn products_stay_in_the_algebra(
        c1 in prop::collection::vec((-3i32..=3, -2i32..=2, -1.0f64..1.0), 1..5),
        c2 in prop::collection::vec((-3i32..=3, -2i32..=2, -1.0f64..1.0), 1..5),
    ) {
        let pair = AdmissiblePair::even_odd_two(1.0, 5f64.sqrt(), 14, 24.0).unwrap();
        let b = Arc::clone(pair.basis());
        let mk = |cs: &[(i32, i32, f64)]| {
            let mut u = TrigSum::zero(&b);
            for &(n, l, c) in cs {
                // (even, even) as cos, (odd, odd) as sin
                u.add_term(ModeId::cos(&[2 * n, 2 * l]), c);
                u.add_term(ModeId::sin(&[2 * n + 1, 2 * l + 1]), c / 2.0);
            }
            u
        };
        let (u, v) = (mk(&c1), mk(&c2));
        let prod = u.mul(&v).unwrap();
        let (kept, defect) = prod.sum.project_e0(&pair);
        // only the mean is removed
        prop_assert!((defect - prod.sum.mean().abs()).abs() <= 1e-14);
        prop_assert!((kept.norm_b2().powi(2) + defect * defect - prod.sum.norm_b2().powi(2)).abs() <= 1e-12);
    }
}

#[test]
fn interleaved_square_lands_in_the_cos_class() {
    let pair = AdmissiblePair::interleaved(8.0).unwrap();
    let b = Arc::clone(pair.basis());
    let s = TrigSum::mode(&b, ModeId::sin(&[1]), 1.0);
    let sq = s.mul(&s).unwrap().sum;
    assert_eq!(sq.mean(), 0.5);
    assert_eq!(sq.coeff(&ModeId::cos(&[2])), -0.5);
    assert!(pair.admits(&ModeId::cos(&[2])));
    assert_eq!(sq.len(), 2);
}

#[test]
fn slope_square_is_mean_plus_double_frequency() {
    let b = basis();
    let d = TrigSum::mode(&b, ModeId::cos(&[1, 0]), 1.0).derivative();
    let sq = d.mul(&d).unwrap().sum;
    assert_eq!(sq.mean(), 0.5);
    assert_eq!(sq.coeff(&ModeId::cos(&[2, 0])), -0.5);
}

#[test]
fn truncation_receipt_counts_the_dropped_modes() {
    let b = Arc::new(GeneratorBasis::new(vec![1.0], 3, 3.0).unwrap());
    let u = TrigSum::mode(&b, ModeId::cos(&[2]), 1.0);
    let t = u.mul(&u).unwrap();
    // cos² 2x = ½ + ½ cos 4x, and 4 > 3
    assert_eq!(t.sum.mean(), 0.5);
    assert!((t.discarded_mass - (0.5f64 * 0.25).sqrt()).abs() < 1e-15);
}

/// Long-window mean of `|u|²` against the B² norm, with incommensurate
/// frequencies. Midpoint rule on `[−X, X]`, `X = 1e5`.
#[test]
fn parseval_matches_long_window_quadrature() {
    let b = basis();
    let mut u = TrigSum::constant(&b, 0.4);
    u.add_term(ModeId::cos(&[1, 0]), 0.7);
    u.add_term(ModeId::sin(&[0, 1]), -0.5);
    u.add_term(ModeId::cos(&[-1, 1]), 0.3);
    let x_half = 1e5;
    let n = 4_000_000usize;
    let dx = 2.0 * x_half / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let x = -x_half + (i as f64 + 0.5) * dx;
        let v = u.eval(x);
        acc += v * v;
    }
    let quad = acc * dx / (2.0 * x_half);
    let exact = u.norm_b2().powi(2);
    assert!(((quad - exact) / exact).abs() <= 1e-3, "{quad} vs {exact}");
}
