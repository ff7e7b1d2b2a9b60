//! Independent oracles for the period, Abel-map and ℘ layers.

use kleinian::abel;
use kleinian::curve::{random_curve, random_roots, sqrt_p};
use kleinian::periods::compute_periods;
use kleinian::{Complex64, Curve, CurvePoint, SigmaContext};
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Representative of `τ` in the standard fundamental domain of SL(2, Z).
fn reduce(mut t: Complex64) -> Complex64 {
    for _ in 0..200 {
        t.re -= t.re.round();
        if t.norm_sqr() < 1.0 - 1e-12 {
            t = -1.0 / t;
        } else {
            break;
        }
    }
    t
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        (a, b) = ((a + b) / 2.0, (a * b).sqrt());
    }
    a
}

/// `τ` of `y² = (x − e1)(x − e2)(x − e3)`, `e1 > e2 > e3` real, by the AGM.
fn agm_tau(e: [f64; 3]) -> Complex64 {
    let m1 = agm((e[0] - e[2]).sqrt(), (e[0] - e[1]).sqrt());
    let m2 = agm((e[0] - e[2]).sqrt(), (e[1] - e[2]).sqrt());
    c(0.0, m1 / m2)
}

/// Klein's j from the q-expansions of E4 and E6.
fn j_of_tau(t: Complex64) -> Complex64 {
    let q = (c(0.0, 2.0 * PI) * reduce(t)).exp();
    let (mut e4, mut e6) = (c(1.0, 0.0), c(1.0, 0.0));
    let mut qn = c(1.0, 0.0);
    for n in 1..60 {
        qn *= q;
        let s3: f64 = (1..=n).filter(|d| n % d == 0).map(|d| (d as f64).powi(3)).sum();
        let s5: f64 = (1..=n).filter(|d| n % d == 0).map(|d| (d as f64).powi(5)).sum();
        e4 += 240.0 * s3 * qn;
        e6 -= 504.0 * s5 * qn;
    }
    let e43 = e4 * e4 * e4;
    1728.0 * e43 / (e43 - e6 * e6)
}

fn j_of_roots(r: &[Complex64]) -> Complex64 {
    let s = (r[0] + r[1] + r[2]) / 3.0;
    let (a0, a1, a2) = (r[0] - s, r[1] - s, r[2] - s);
    let a = a0 * a1 + a0 * a2 + a1 * a2;
    let b = -a0 * a1 * a2;
    let a3 = 4.0 * a * a * a;
    1728.0 * a3 / (a3 + 27.0 * b * b)
}

#[test]
fn lemniscate_tau_is_i() {
    let curve = Curve::from_roots(&[c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]).unwrap();
    let p = compute_periods(&curve).unwrap();
    let want = agm_tau([1.0, 0.0, -1.0]);
    assert!((want - c(0.0, 1.0)).norm() < 1e-15);
    assert!((reduce(p.tau[(0, 0)]) - want).norm() < 1e-8);
}

#[test]
fn seeded_elliptic_curves_match_j_invariant() {
    for seed in 1..=6 {
        let roots = random_roots(seed, 1);
        let p = compute_periods(&random_curve(seed, 1)).unwrap();
        let (lib, want) = (j_of_tau(p.tau[(0, 0)]), j_of_roots(&roots));
        assert!((lib - want).norm() < 1e-7 * (1.0 + want.norm()), "seed {seed}: {lib} vs {want}");
    }
}

#[test]
fn wp_at_embedded_point_is_x() {
    let curve = random_curve(5, 1);
    let ctx = SigmaContext::new(&curve, &compute_periods(&curve).unwrap()).unwrap();
    for x in [c(0.3, 0.7), c(-1.1, 0.4), c(2.5, -0.2)] {
        let u = abel::embed(&curve, &CurvePoint::above(&curve, x, 1.0)).unwrap();
        let wp = ctx.wp_jet(&u).unwrap().wp(&[1, 1]);
        assert!((wp - x).norm() < 1e-9 * (1.0 + x.norm()), "{wp} vs {x}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn real_root_curves_match_agm(e2 in -0.8..0.8f64, gap1 in 0.2..2.0f64, gap3 in 0.2..2.0f64) {
        let e = [e2 + gap1, e2, e2 - gap3];
        let curve = Curve::from_roots(&[c(e[0], 0.0), c(e[1], 0.0), c(e[2], 0.0)]).unwrap();
        let p = compute_periods(&curve).unwrap();
        let (lib, want) = (reduce(p.tau[(0, 0)]), reduce(agm_tau(e)));
        prop_assert!((lib - want).norm() < 1e-8 * want.norm(), "{} vs {}", lib, want);
    }

    // d/dx of the Abel image of (x, y) is (1, x)/(2y).
    #[test]
    fn abel_map_differentiates_to_holomorphic_forms(re in -1.5..1.5f64, im in 0.3..1.5f64, seed in 1u64..4) {
        let curve = random_curve(seed, 2);
        let x = c(re, im);
        prop_assume!(curve.branch_distance(x) > 0.2);
        let y = sqrt_p(curve.eval_f(x));
        let at = |h: f64| {
            let xh = x + h;
            let mut yh = sqrt_p(curve.eval_f(xh));
            if (yh - y).norm() > (yh + y).norm() {
                yh = -yh;
            }
            abel::abel_point(&curve, &CurvePoint::affine(&curve, xh, yh).unwrap()).unwrap()
        };
        let h = 1e-4;
        let (up, dn) = (at(h), at(-h));
        for (k, want) in [c(1.0, 0.0), x].into_iter().enumerate() {
            let fd = (up[k] - dn[k]) / (2.0 * h);
            let want = want / (2.0 * y);
            prop_assert!((fd - want).norm() < 1e-6 * (1.0 + want.norm()), "{} vs {}", fd, want);
        }
    }
}
