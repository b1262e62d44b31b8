use std::f64::consts::PI;

use proptest::prelude::*;

use horocm::sphere_grid::io::{read_fields, write_csv, write_fields};
use horocm::{Error, ScalarField, SphereGrid};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A smooth field built from random quadratic and cubic monomials.
fn smooth_field(g: &SphereGrid, c: &[f64]) -> ScalarField {
    g.sample(|x| {
        let d = x.len();
        c[0] + c[1] * x[0] + c[2] * x[1] * x[d - 1] + c[3] * x[0] * x[0] * x[1] + c[4] * (x[d - 1] + 2.0).ln()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn project_even_is_idempotent_and_even(c in prop::collection::vec(-2.0f64..2.0, 5), three in any::<bool>()) {
        let g = if three { SphereGrid::build(3, 8).unwrap() } else { SphereGrid::build(2, 16).unwrap() };
        let f = smooth_field(&g, &c);
        let e = g.project_even(&f);
        prop_assert_eq!(g.antipodal_gap(&e), 0.0);
        prop_assert_eq!(g.project_even(&e), e.clone());
        // the projection fixes the even part and kills the odd part
        let odd = f.zip_map(&e, |a, b| a - b);
        prop_assert!(g.project_even(&odd).sup_norm() <= 1e-15 * (1.0 + f.sup_norm()));
    }

    #[test]
    fn quadrature_is_antipode_invariant(c in prop::collection::vec(-2.0f64..2.0, 5)) {
        let g = SphereGrid::build(2, 16).unwrap();
        let f = smooth_field(&g, &c);
        let flipped = ScalarField::new((0..g.len()).map(|i| f[g.pair(i)]).collect());
        let (a, b) = (g.integrate(&f), g.integrate(&flipped));
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn operators_commute_with_antipode(c in prop::collection::vec(-2.0f64..2.0, 5)) {
        let g = SphereGrid::build(2, 16).unwrap();
        let f = g.project_even(&smooth_field(&g, &c));
        let lap = g.laplacian(&f);
        prop_assert!(g.antipodal_gap(&lap) <= 1e-12 * (1.0 + lap.sup_norm()));
    }
}

#[test]
fn nodes_are_unit_and_pairs_antipodal() {
    for (n, r) in [(2, 16), (3, 8)] {
        let g = SphereGrid::build(n, r).unwrap();
        assert_eq!(g.len(), 2 * g.half());
        for i in 0..g.len() {
            let x = g.node(i);
            assert!((dot(x, x) - 1.0).abs() < 1e-14);
            let j = g.pair(i);
            assert_ne!(i, j);
            assert_eq!(g.pair(j), i);
            for (a, b) in x.iter().zip(g.node(j)) {
                assert_eq!(*a, -*b);
            }
            for a in 0..n {
                assert!(dot(g.frame(i, a), x).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn quadrature_converges_at_second_order() {
    let err = |n: usize, r: usize| {
        let g = SphereGrid::build(n, r).unwrap();
        let exact = if n == 2 { 4.0 * PI / 3.0 } else { PI * PI / 2.0 };
        (g.integrate(&g.sample(|x| x[n] * x[n])) - exact).abs()
    };
    for (n, r) in [(2, 16), (2, 32), (3, 8)] {
        let ratio = err(n, r) / err(n, 2 * r);
        assert!((ratio - 4.0).abs() < 0.1, "n = {n}, N = {r}: {ratio}");
    }
}

#[test]
fn laplacian_on_s3_harmonics() {
    let g = SphereGrid::build(3, 16).unwrap();
    let e = [0.4, -0.2, 0.7, 0.5];
    for (l, f) in [
        (1.0, g.sample(|x| dot(x, &e))),
        (2.0, g.sample(|x| x[0] * x[1] + x[2] * x[3])),
        (3.0, g.sample(|x| x[0].powi(3) - 3.0 * x[0] * x[1] * x[1])),
    ] {
        let want = f.map(|v| -l * (l + 2.0) * v);
        let err = g.laplacian(&f).zip_map(&want, |a, b| a - b).sup_norm();
        assert!(err < 2e-2 * (1.0 + want.sup_norm()), "l = {l}: {err}");
    }
}

#[test]
fn gradient_converges_at_second_order_or_better() {
    let e = [0.6, 0.0, 0.8];
    let mut errs = Vec::new();
    for res in [16, 32] {
        let g = SphereGrid::build(2, res).unwrap();
        let f = g.sample(|x| dot(x, &e).powi(3));
        let grad = g.gradient(&f);
        let mut err = 0.0f64;
        for i in 0..g.len() {
            let s = dot(g.node(i), &e);
            for a in 0..2 {
                let want = 3.0 * s * s * dot(g.frame(i, a), &e);
                err = err.max((grad.at(i)[a] - want).abs());
            }
        }
        errs.push(err);
    }
    assert!((errs[0] / errs[1]).log2() >= 1.9, "{errs:?}");
}

#[test]
fn constants_have_zero_derivatives() {
    let g = SphereGrid::build(2, 16).unwrap();
    let c = ScalarField::constant(g.len(), 2.75);
    assert_eq!(g.gradient(&c).norm_squared().sup_norm(), 0.0);
    assert_eq!(g.hessian(&c).trace().sup_norm(), 0.0);
}

#[test]
fn field_container_round_trip() {
    let g = SphereGrid::build(2, 8).unwrap();
    let phi = g.sample(|x| 2.0 + x[0] * x[0]);
    let f = ScalarField::constant(g.len(), 0.5);
    let mut buf = Vec::new();
    write_fields(&mut buf, &g, &[("phi", &phi), ("f", &f)]).unwrap();
    let file = read_fields(buf.as_slice()).unwrap();
    file.check_grid(&g).unwrap();
    assert_eq!(file.field("phi").unwrap(), phi);
    assert_eq!(file.field("f").unwrap(), f);
    assert!(file.field("missing").is_none());

    let other = SphereGrid::build(2, 10).unwrap();
    assert!(matches!(file.check_grid(&other), Err(Error::GridMismatch(_))));

    assert!(matches!(read_fields(&buf[..buf.len() - 3]), Err(Error::Io(_))));
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(read_fields(bad.as_slice()), Err(Error::Format(_))));
}

#[test]
fn csv_has_one_row_per_node() {
    let g = SphereGrid::build(2, 8).unwrap();
    let phi = ScalarField::constant(g.len(), 1.5);
    let mut buf = Vec::new();
    write_csv(&mut buf, &g, &[("phi", &phi)]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "node,x0,x1,x2,phi");
    assert_eq!(lines.count(), g.len());
}
