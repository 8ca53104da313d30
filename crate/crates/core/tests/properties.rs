use proptest::prelude::*;

use subsmooth::blowup::{blowup_center, strict_transform_hypersurface, Chart};
use subsmooth::exactpoly::rational::{int, ratio};
use subsmooth::partition::{check_partition, grid_partition, Grid};
use subsmooth::smoothing::{torus_smoothing, CoverSpace};
use subsmooth::{parse_polynomial, Polynomial, RBox, Rational};

const N: usize = 3;

fn small_rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(a, b)| ratio(a, b))
}

fn poly(nvars: usize, max_terms: usize, max_exp: u32) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(
        (prop::collection::vec(0..=max_exp, nvars), small_rational()),
        0..=max_terms,
    )
    .prop_map(move |terms| Polynomial::from_terms(nvars, terms).unwrap())
}

fn point(nvars: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(small_rational(), nvars)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn substitute_identity(p in poly(N, 6, 3)) {
        prop_assert_eq!(p.substitute(&Polynomial::vars(N)).unwrap(), p);
    }

    #[test]
    fn eval_commutes_with_substitute(
        p in poly(N, 5, 3),
        map in prop::collection::vec(poly(N, 3, 2), N),
        x in point(N),
    ) {
        let composed = p.substitute(&map).unwrap().eval(&x).unwrap();
        let inner: Vec<Rational> = map.iter().map(|m| m.eval(&x).unwrap()).collect();
        prop_assert_eq!(composed, p.eval(&inner).unwrap());
    }

    #[test]
    fn divide_out_reconstructs(q in poly(N, 4, 2), d in poly(N, 3, 2), m in 0u32..3) {
        prop_assume!(!q.is_zero() && d.degree().unwrap_or(0) > 0);
        let p = &q * &d.pow(m);
        let (k, rest) = p.divide_out(&d).unwrap();
        prop_assert!(k >= m);
        prop_assert!((&rest * &d.pow(k)).equal_expanded(&p));
        prop_assert!(!rest.div_rem(&d).unwrap().1.is_zero());
    }

    #[test]
    fn partial_is_linear_and_leibniz(p in poly(N, 4, 3), q in poly(N, 4, 3), a in small_rational(), i in 0..N) {
        let d = |f: &Polynomial| f.partial(i).unwrap();
        let lhs = d(&(&p.scale(&a) + &q));
        prop_assert_eq!(lhs, &d(&p).scale(&a) + &d(&q));
        prop_assert_eq!(d(&(&p * &q)), &(&d(&p) * &q) + &(&p * &d(&q)));
    }

    #[test]
    fn display_parses_back(p in poly(N, 6, 3)) {
        let names: Vec<String> = (1..=N).map(|i| format!("x{i}")).collect();
        let text = p.display_with(&names).to_string();
        prop_assert_eq!(parse_polynomial(&text, &names).unwrap(), p);
    }

    #[test]
    fn json_roundtrip(p in poly(N, 6, 3)) {
        prop_assume!(!p.is_zero());
        let back: Polynomial = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn strict_transform_factors_total(h in poly(N, 5, 4), pivot in 0..N) {
        prop_assume!(!h.is_zero());
        let charts = blowup_center(&Chart::root("R3", &["a", "b", "c"]), 0, &[0, 1, 2], None, None).unwrap();
        let chart = &charts[pivot];
        let st = strict_transform_hypersurface(&h, chart).unwrap();
        prop_assert!(st.check_factorization(chart));
        prop_assert!(!st.strict.div_rem(&chart.exceptional[0]).unwrap().1.is_zero());
    }

    #[test]
    fn grid_cubes_tile_region(
        lo in prop::collection::vec(-3i64..=0, 2),
        w in prop::collection::vec(1i64..=3, 2),
        q in 1u32..=4,
    ) {
        let bounds: Vec<(i64, i64)> = lo.iter().zip(&w).map(|(a, b)| (*a, a + b)).collect();
        let region = RBox::from_ints(&bounds);
        let p = grid_partition(&region, &Grid::standard(region.clone(), q).unwrap()).unwrap();
        let vol: Rational = p.cells.iter().map(|c| c.cube.volume()).sum();
        prop_assert_eq!(vol, region.volume());
        prop_assert_eq!(p.len() as i64, w.iter().product::<i64>() * (q as i64).pow(2));
        prop_assert!(check_partition(&p).passed());
    }

    #[test]
    fn torus_fiber_has_full_sheet_count(
        n in 1usize..=3,
        t in prop::collection::vec(0.001f64..0.999, 3),
    ) {
        let cube = RBox::cube(n, int(-1), int(2)).unwrap();
        let cover = torus_smoothing(&cube).unwrap();
        let x: Vec<f64> = t[..n].iter().map(|s| -1.0 + 3.0 * s).collect();
        let fiber = cover.fiber(&x);
        prop_assert_eq!(fiber.len(), 1 << n);
        for z in &fiber {
            let back = cover.project(z);
            prop_assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }
}
