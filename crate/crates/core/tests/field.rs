use proptest::prelude::*;

use sqg_core::field::{
    derivative, extend, hardy_quotient, holder_seminorm, lp_norm_masked, Grid, MultiIndex, Parity,
    ScalarField,
};
use sqg_core::profiles::{Profile, RandomSmooth, SmoothCutoff};
use sqg_core::quadrature::adaptive_gauss_kronrod;
use sqg_core::Point;

fn all(_: usize, _: usize) -> bool {
    true
}

#[test]
fn odd_extension_of_height_times_cutoff_is_the_same_formula() {
    let g = Grid::half_plane(1.0 / 32.0, 1.0, 0.25).unwrap();
    let cut = SmoothCutoff { inner: 0.5, outer: 1.0 };
    let f = ScalarField::from_fn(g, 1.0, |p| p.x2 * cut.eval(p.norm())).unwrap();
    let ext = extend(&f, Parity::Odd).unwrap();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x1, x2) = (g.x1(i), -g.x2(j));
            let formula = x2 * cut.eval(x1.hypot(x2));
            assert!((ext.at_signed(i, -(j as isize)) - formula).abs() <= 1e-15);
        }
    }
}

#[test]
fn odd_extension_of_square_at_negative_height() {
    let g = Grid::half_plane(1.0 / 64.0, 1.0, 0.25).unwrap();
    let f = Profile::X2Squared { support: 1.0 }.sample(g).unwrap();
    let ext = extend(&f, Parity::Odd).unwrap();
    let i0 = (0.0 - g.x1_min) / g.h;
    let i0 = i0.round() as usize;
    for j in [1usize, 8, 16, 31] {
        let a = g.x2(j);
        assert_eq!(ext.at_signed(i0, -(j as isize)), -a * a);
    }
}

#[test]
fn holder_seminorm_of_extension_is_within_four_times() {
    let g = Grid::half_plane(1.0 / 64.0, 1.0, 0.25).unwrap();
    let f = Profile::GaussianX2 { support: 1.0 }.sample(g).unwrap();
    let odd = f.field().reflect(Parity::Odd).unwrap();
    let whole = holder_seminorm(&odd, 0, 0.5, 10_000, 42).unwrap();
    let half = holder_seminorm(f.field(), 0, 0.5, 10_000, 42).unwrap();
    assert!(half > 0.0);
    assert!(whole <= 4.0 * half, "{whole} vs {half}");
}

#[test]
fn mixed_derivative_of_polynomial_and_zero_field() {
    let g = Grid::half_plane(1.0 / 16.0, 1.0, 0.25).unwrap();
    let f = sqg_core::field::GridField::from_fn(g, |p| p.x1 * p.x1 * p.x2);
    let d = derivative(&f, MultiIndex::new(1, 1)).unwrap();
    for j in 0..g.ny {
        for i in 2..g.nx - 2 {
            assert!((d.at(i, j) - 2.0 * g.x1(i)).abs() <= 1e-10);
        }
    }
    let z = ScalarField::zeros(g, 1.0).unwrap();
    for idx in [MultiIndex::new(1, 0), MultiIndex::new(0, 2), MultiIndex::new(2, 1)] {
        assert_eq!(derivative(z.field(), idx).unwrap().max_abs(), 0.0);
    }
}

/// Max error of `d2^2` against `-sin x1 sin x2` on the rows `near`
/// (`j < 2`) and on the rest, inside the ball where the cutoff is one.
fn trig_errors(h: f64) -> (f64, f64) {
    let g = Grid::half_plane(h, 1.0, 0.25).unwrap();
    let cut = SmoothCutoff { inner: 0.5, outer: 1.0 };
    let f = ScalarField::from_fn(g, 1.0, |p| p.x1.sin() * p.x2.sin() * cut.eval(p.norm())).unwrap();
    let d = derivative(f.field(), MultiIndex::new(0, 2)).unwrap();
    let (mut near, mut inner) = (0.0f64, 0.0f64);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let p = g.point(i, j);
            if p.norm() > 0.4 {
                continue;
            }
            let e = (d.at(i, j) + p.x1.sin() * p.x2.sin()).abs();
            if j < 2 {
                near = near.max(e);
            } else {
                inner = inner.max(e);
            }
        }
    }
    (near, inner)
}

#[test]
fn second_normal_derivative_converges_at_the_stated_orders() {
    let (n1, i1) = trig_errors(1.0 / 32.0);
    let (n2, i2) = trig_errors(1.0 / 64.0);
    let near_rate = (n1 / n2).log2();
    let inner_rate = (i1 / i2).log2();
    assert!(near_rate >= 1.8, "near-boundary rate {near_rate}");
    assert!(inner_rate >= 3.5, "interior rate {inner_rate}");
}

#[test]
fn hardy_quotient_of_square_datum_vanishes() {
    let g = Grid::half_plane(1.0 / 64.0, 1.0, 0.25).unwrap();
    let f = Profile::X2Squared { support: 1.0 }.sample(g).unwrap();
    let q = hardy_quotient(&f).unwrap();
    let inside = lp_norm_masked(&q, f64::INFINITY, |i, j| g.point(i, j).norm() <= 0.4);
    assert!(inside <= 1e-10, "{inside}");
}

#[test]
fn hardy_quotient_matches_symbolic_quotient_near_boundary() {
    let h = 1.0 / 128.0;
    let g = Grid::half_plane(h, 1.0, 0.25).unwrap();
    let f = Profile::GaussianXy { a: 1.0, b: 0.0, support: 1.0 }.sample(g).unwrap();
    let q = hardy_quotient(&f).unwrap();
    let s2: f64 = 0.0625;
    let exact = |p: Point| {
        let r2 = p.x1 * p.x1 + p.x2 * p.x2;
        (-r2 / s2).exp() / s2 * (1.0 - 2.0 * p.x1 * p.x1 / s2)
    };
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for j in 1..=10 {
        for i in 0..g.nx {
            let p = g.point(i, j);
            if p.x1.abs() > 0.5 {
                continue;
            }
            err = err.max((q.at(i, j) - exact(p)).abs());
            scale = scale.max(exact(p).abs());
        }
    }
    assert!(err <= 1e-4 * scale, "{err} vs {scale}");
}

#[test]
fn bump_l2_norm_matches_radial_integral() {
    let cut = SmoothCutoff { inner: 0.25, outer: 0.5 };
    let centre = Point::new(0.0, 0.75);
    let g = Grid::half_plane(1.0 / 128.0, 1.25, 0.25).unwrap();
    let f = ScalarField::from_fn(g, 1.25, |p| cut.eval(p.distance(centre))).unwrap();
    let discrete = lp_norm_masked(f.field(), 2.0, all);
    let exact = adaptive_gauss_kronrod(
        |r| cut.eval(r).powi(2) * 2.0 * std::f64::consts::PI * r,
        0.0,
        0.5,
        1e-13,
    )
    .value
    .sqrt();
    assert!((discrete / exact - 1.0).abs() <= 0.02, "{discrete} vs {exact}");
}

#[test]
fn whole_cell_translation_preserves_lp_norms_exactly() {
    let g = Grid::half_plane(1.0 / 32.0, 1.0, 0.5).unwrap();
    let f = Profile::GaussianXy { a: 1.0, b: 0.5, support: 1.0 }.sample(g).unwrap();
    let moved = f.translated(3, 2, 1.25).unwrap();
    for p in [1.0, 2.0, 4.0, f64::INFINITY] {
        assert_eq!(lp_norm_masked(f.field(), p, all), lp_norm_masked(moved.field(), p, all));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn translation_invariance_for_random_fields(seed in 0u64..1000, di in -4isize..=4, dj in 0usize..=4) {
        let g = Grid::half_plane(1.0 / 32.0, 0.5, 0.375).unwrap();
        let f = RandomSmooth::new(seed, 0.5).sample(g).unwrap();
        let moved = f.translated(di, dj, 0.5 + 6.0 * g.h).unwrap();
        for p in [1.0, 2.0, f64::INFINITY] {
            prop_assert_eq!(lp_norm_masked(f.field(), p, all), lp_norm_masked(moved.field(), p, all));
        }
    }

    #[test]
    fn odd_extension_is_antisymmetric(seed in 0u64..1000) {
        let g = Grid::half_plane(1.0 / 16.0, 0.5, 0.25).unwrap();
        let f = RandomSmooth::new(seed, 0.5).sample(g).unwrap();
        let ext = extend(&f, Parity::Odd).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                prop_assert_eq!(ext.at_signed(i, -(j as isize)), -f.field().at(i, j));
            }
        }
    }

    #[test]
    fn lp_norms_are_absolutely_homogeneous(seed in 0u64..1000, c in -3.0f64..3.0) {
        let g = Grid::half_plane(1.0 / 16.0, 0.5, 0.25).unwrap();
        let f = RandomSmooth::new(seed, 0.5).sample(g).unwrap();
        let scaled = f.field().map(|v| c * v);
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            let (a, b) = (lp_norm_masked(&scaled, p, all), c.abs() * lp_norm_masked(f.field(), p, all));
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }
}
