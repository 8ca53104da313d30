//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subsmooth::blowup::{blowup_center, strict_transform_hypersurface, BlowupSequence, Chart};
use subsmooth::casebook::SineCurve;
use subsmooth::exactpoly::rational::{int, ratio};
use subsmooth::numeric::tangent_determinant;
use subsmooth::partition::{
    certify_grid, check_partition, general_position, grid_partition, partition_subordinate_with, Grid, Witness,
};
use subsmooth::semialg::{BasicClosedSet, SemialgebraicCell, Variety};
use subsmooth::smoothing::{double_cover, smooth_set, torus_smoothing, Cover, CoverSpace, SmoothOptions};
use subsmooth::verify::{verify_covering, verify_smoothing, verify_snc, DET_THRESHOLD};
use subsmooth::{parse_polynomial, Polynomial, RBox, Rational};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn p(s: &str, names: &[&str]) -> Polynomial {
    parse_polynomial(s, names).unwrap()
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn quartic_strict_transform() -> Outcome {
    let base = ["x", "y", "z", "w"];
    let up = ["X", "Y", "Z", "w"];
    let h = p("(x^2 + z^2)^2*(w^4 + z^2*w^2) - (x^2 - z^2)^2", &base);
    let charts = blowup_center(&Chart::root("R4", &base), 0, &[0, 1, 2], None, Some(&names(&up))).unwrap();
    let zc = &charts[2];
    let map = vec![p("X*Z", &up), p("Y*Z", &up), p("Z", &up), p("w", &up)];
    ensure(zc.map_to_parent == map, "z-chart map differs from (XZ, YZ, Z, w)")?;
    let expected = p("(X^2 + 1)^2*(w^4 + Z^2*w^2) - (X^2 - 1)^2", &up);
    let total = h.substitute(&map).unwrap();
    ensure(
        total == &p("Z^4", &up) * &expected,
        "total transform is not Z^4 times the chart equation",
    )?;
    let st = strict_transform_hypersurface(&h, zc).unwrap();
    ensure(
        st.strict == expected,
        format!("strict transform {}", st.strict.display_with(&names(&up))),
    )?;
    ensure(
        st.multiplicities == vec![4],
        format!("multiplicities {:?}", st.multiplicities),
    )?;
    Ok("total = Z^4 * strict, multiplicity 4".into())
}

fn quartic_splitting() -> Outcome {
    let up = ["X", "Y", "Z", "w"];
    let strict = p("(X^2 + 1)^2*(w^4 + Z^2*w^2) - (X^2 - 1)^2", &up);
    let at_zero = strict.restrict(2, &int(0)).unwrap();
    let split = &p("(X^2 + 1)*w^2 - (X^2 - 1)", &up) * &p("(X^2 + 1)*w^2 + (X^2 - 1)", &up);
    ensure(at_zero == split, "restriction to Z = 0 does not split")?;
    Ok("Z = 0 restriction equals the product of both factors".into())
}

fn cusp_strict_transform() -> Outcome {
    let base = ["x", "w", "z"];
    let chart = ["u", "w", "z"];
    let h = p("z^4 - x^3 - w*x*z^2", &base);
    let charts = blowup_center(&Chart::root("R3", &base), 0, &[0, 2], None, Some(&names(&chart))).unwrap();
    let zc = &charts[1];
    ensure(
        zc.map_to_parent == vec![p("u*z", &chart), p("w", &chart), p("z", &chart)],
        "chart map is not x = u z",
    )?;
    let st = strict_transform_hypersurface(&h, zc).unwrap();
    ensure(st.strict == p("z - u^3 - u*w", &chart), "strict transform differs")?;
    ensure(
        st.multiplicities == vec![3],
        format!("multiplicities {:?}", st.multiplicities),
    )?;
    ensure(st.check_factorization(zc), "total != z^3 * strict")?;
    Ok("z - u^3 - u w with multiplicity 3".into())
}

fn remark_composition() -> Outcome {
    let u1 = ["x", "y", "Z", "W"];
    let u2 = ["x", "y", "z", "w"];
    let mut seq = BlowupSequence::new(Chart::root("R4", &u1));
    let first = seq.blow_up(0, &[0, 1, 2, 3], None, Some(&names(&u1))).unwrap();
    let w_chart = first[3];
    let second = seq.blow_up(w_chart, &[2, 3], None, Some(&names(&u2))).unwrap();
    let c2 = &seq.charts[second[1]];
    ensure(
        c2.map_to_parent == vec![p("x", &u2), p("y", &u2), p("z*w", &u2), p("w", &u2)],
        "U2 map is not (x, y, z w, w)",
    )?;
    // Oracle: substitute the W-chart map, then the U2 map, by hand.
    let w_map = [p("x*W", &u1), p("y*W", &u1), p("Z*W", &u1), p("W", &u1)];
    let hand: Vec<Polynomial> = w_map
        .iter()
        .map(|f| {
            f.substitute(&[p("x", &u2), p("y", &u2), p("z*w", &u2), p("w", &u2)])
                .unwrap()
        })
        .collect();
    ensure(
        hand == vec![p("x*w", &u2), p("y*w", &u2), p("z*w^2", &u2), p("w", &u2)],
        "oracle composite",
    )?;
    ensure(
        c2.map_to_base == hand,
        "composite map differs from successive substitution",
    )?;
    let f = p("x^3 - y*Z + W^2*x + 7", &u1);
    let stepwise = f
        .substitute(&seq.charts[w_chart].map_to_parent)
        .unwrap()
        .substitute(&c2.map_to_parent)
        .unwrap();
    ensure(
        stepwise == f.substitute(&c2.map_to_base).unwrap(),
        "pullback is not associative",
    )?;
    ensure(seq.check_composition().unwrap(), "sequence composition check failed")?;
    Ok("(x, y, Z, W) = (x, y, z w, w), composite (x w, y w, z w^2, w)".into())
}

fn torus_sheets() -> Outcome {
    let mut summary = Vec::new();
    for n in 1..=3usize {
        let cover = torus_smoothing(&RBox::cube(n, int(-1), int(1)).unwrap()).unwrap();
        let eqs = cover.float_equations();
        let dproj = cover.projection_jacobian();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let mut min_det = f64::INFINITY;
        for _ in 0..1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fiber = cover.fiber(&x);
            ensure(
                fiber.len() == 1 << n,
                format!("n = {n}: {} points over {x:?}", fiber.len()),
            )?;
            for z in &fiber {
                let back = cover.project(z);
                ensure(
                    back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12),
                    "fiber point projects elsewhere",
                )?;
                let d = tangent_determinant(&eqs, &dproj, z).ok_or("tangent space has wrong dimension")?;
                ensure(
                    d.abs() > DET_THRESHOLD,
                    format!("n = {n}: |det| = {:e} at {z:?}", d.abs()),
                )?;
                min_det = min_det.min(d.abs());
            }
        }
        summary.push(format!("n={n}: 2^{n} sheets, min |det| {min_det:.2e}"));
    }
    Ok(summary.join("; "))
}

fn double_cover_fibers() -> Outcome {
    let cell = BasicClosedSet::parse(&["x", "1 - x"], &["x"]).unwrap();
    let cover = double_cover(&cell);
    // Oracle: 2^(#positive f_i), or 0 if some f_i < 0.
    let oracle = |x: f64| {
        let vals = [x, 1.0 - x];
        if vals.iter().any(|&v| v < 0.0) {
            0
        } else {
            1usize << vals.iter().filter(|&&v| v > 0.0).count()
        }
    };
    for (x, want) in [(0.25, 4), (0.0, 2), (-1.0, 0)] {
        let got = cover.fiber(&[x]).len();
        ensure(
            got == want && oracle(x) == want,
            format!("fiber over {x} has {got} points"),
        )?;
    }
    let mut checked = 0;
    for x in [
        ratio(0, 1),
        ratio(1, 1),
        ratio(9, 25),
        ratio(16, 25),
        ratio(25, 169),
        ratio(144, 169),
        ratio(1, 4),
    ] {
        let Some(fiber) = cover.fiber_exact(std::slice::from_ref(&x)) else {
            continue;
        };
        for z in fiber {
            let on = cover.equations().iter().all(|e| e.eval(&z).unwrap().is_zero());
            let img = cover.project_exact(&z);
            let inside = cell.ineqs().iter().all(|f| !f.eval(&img).unwrap().is_negative());
            ensure(on && inside, format!("rational fiber point {z:?} fails containment"))?;
            checked += 1;
        }
    }
    ensure(checked >= 10, format!("only {checked} rational fiber points"))?;
    Ok(format!(
        "fibers 4/2/0, {checked} rational fiber points contained exactly"
    ))
}

fn partition_certification() -> Outcome {
    let region = RBox::from_ints(&[(-3, 3), (-3, 3)]);
    let centers = [-2i64, 0, 2];
    let covering: Vec<RBox> = centers
        .iter()
        .flat_map(|&a| centers.iter().map(move |&b| (a, b)))
        .map(|(a, b)| {
            RBox::new(
                vec![ratio(2 * a - 3, 2), ratio(2 * b - 3, 2)],
                vec![ratio(2 * a + 3, 2), ratio(2 * b + 3, 2)],
            )
            .unwrap()
        })
        .collect();
    let mut cells = Vec::new();
    for q in 1..=6 {
        let part = partition_subordinate_with(&covering, &Grid::standard(region.clone(), q).unwrap())
            .map_err(|e| format!("q = {q}: {e}"))?;
        let report = check_partition(&part);
        ensure(report.passed(), format!("q = {q}: {:?}", report.violations))?;
        ensure(
            report.exact && report.disjoint_interiors && report.exact_union,
            format!("q = {q}: not exact"),
        )?;
        ensure(
            report.subordinate == Some(true),
            format!("q = {q}: subordination not certified"),
        )?;
        // Oracle: every cell lies in the closed covering member it names.
        for c in &part.cells {
            let owner = c.subordinate_to.ok_or("cell without owner")?;
            ensure(covering[owner].contains_box(&c.cube), "cell escapes its covering box")?;
        }
        let vol: Rational = part.cells.iter().map(|c| c.cube.volume()).sum();
        ensure(vol == region.volume(), "cell volumes do not sum to the region")?;
        cells.push(part.cells.len());
    }
    Ok(format!("q = 1..6, cells {cells:?}, zero violations"))
}

fn general_position_check() -> Outcome {
    let region = RBox::from_ints(&[(-2, 2), (-2, 2)]);
    let x = Variety::hypersurface("x2", &["x1", "x2"]).unwrap();
    let flat = certify_grid(&Grid::standard(region.clone(), 1).unwrap(), &x, 0).unwrap();
    ensure(!flat.passed, "offset 0 should fail")?;
    let (bad, _) = flat.first_failure().unwrap();
    ensure(bad.axis == 1 && bad.value.is_zero(), "failure is not at x2 = 0")?;
    let (grid, cert) = general_position(&region, &x, 1, 32, 0).map_err(|e| e.to_string())?;
    ensure(cert.passed && cert.attempts > 1, "perturbed grid not certified")?;
    let hyperplanes = grid.hyperplanes();
    ensure(
        cert.hyperplanes.len() == hyperplanes.len(),
        "certificate misses hyperplanes",
    )?;
    for ((axis, value), h) in hyperplanes.iter().zip(&cert.hyperplanes) {
        let r = x.gens()[0].restrict(*axis, value).unwrap();
        ensure(
            !r.is_zero() && h.restrictions[0] == r,
            format!("hyperplane x{} = {value}", axis + 1),
        )?;
    }
    let off = &grid.offset[1];
    Ok(format!(
        "fails at offset 0, passes at offset {off} after {} attempts, {} hyperplanes certified",
        cert.attempts,
        hyperplanes.len()
    ))
}

fn sine_probe() -> Outcome {
    const K: u32 = 50;
    let delta = 0.1;
    let curve = SineCurve::new(ratio(1, 10)).unwrap();
    let g = |x: f64| (1.0 / (delta * x - 1.0 / PI)).sin();
    let zero = |k: u32| (1.0 / PI - 1.0 / (k as f64 * PI)) / delta;
    let zeros: Vec<f64> = (2..=K).map(zero).collect();
    let worst = zeros.iter().map(|&x| g(x).abs()).fold(0.0, f64::max);
    ensure(worst < 1e-9, format!("max |g(x_k)| = {worst:e}"))?;
    ensure(zeros.windows(2).all(|w| w[0] < w[1]), "zeros not increasing")?;
    ensure(zeros.iter().all(|&x| x < 1.0 / (delta * PI)), "zero beyond 1/(δπ)")?;
    // Oracle count: zeros in (1/(2δπ), x_K] with g changing sign across
    // them, detected on a fine grid between consecutive midpoints.
    let start = 1.0 / (2.0 * delta * PI);
    let oracle = (2..=K)
        .filter(|&k| {
            let x = zero(k);
            let h = (zero(k) - zero(k - 1)).min(if k < K { zero(k + 1) - zero(k) } else { f64::INFINITY }) / 2.0;
            x > start && g(x - h) * g(x + h) < 0.0
        })
        .count();
    let report = curve.sign_changes(K);
    ensure(oracle as u32 == K - 2, format!("oracle counts {oracle}"))?;
    ensure(
        report.sign_changes as u32 == K - 2,
        format!("library counts {}", report.sign_changes),
    )?;
    ensure(
        report.max_abs_at_zeros < 1e-9 && report.increasing,
        "library report disagrees",
    )?;
    Ok(format!(
        "{} sign changes for K = {K}, max |g(x_k)| = {worst:.1e}",
        K - 2
    ))
}

fn negative_controls() -> Outcome {
    let unit = RBox::from_ints(&[(0, 1), (0, 1)]);
    let cube = SemialgebraicCell::from_box(&unit);
    let clean = smooth_set(&cube, &unit, &[], &SmoothOptions::new(None, 0)).unwrap();
    ensure(verify_smoothing(&clean, &cube, 200, 0).passed(), "clean control fails")?;
    let mut caught = Vec::new();

    let mut gs = clean.clone();
    if let Cover::Torus(t) = &mut gs.pieces[0].cover {
        t.equations[0] = &t.equations[0] - &Polynomial::constant(4, int(3));
    }
    let r = verify_smoothing(&gs, &cube, 200, 0);
    ensure(
        !r.containment.passed() && !r.containment.violations[0].witness.is_empty(),
        "containment",
    )?;
    caught.push("containment");

    let mut gs = clean.clone();
    gs.pieces[0].open_part.strict.push(p("x1 - 1/3", &["x1", "x2"]));
    let r = verify_smoothing(&gs, &cube, 200, 0);
    ensure(
        !r.divisor.passed() && !r.divisor.violations[0].witness.is_empty(),
        "divisor",
    )?;
    caught.push("divisor");

    let mut gs = clean.clone();
    if let Cover::Torus(t) = &mut gs.pieces[0].cover {
        t.equations[0] = t.equations[0].pow(2);
    }
    let r = verify_smoothing(&gs, &cube, 200, 0);
    ensure(
        !r.sheets.passed() && !r.sheets.violations[0].witness.is_empty(),
        "sheets",
    )?;
    caught.push("sheets");

    let x = p("x", &["x"]);
    let snc = verify_snc(&[x.clone(), x.pow(2)], &[], 50, 0);
    ensure(
        !snc.passed() && !snc.transversality.violations[0].witness.is_empty(),
        "snc",
    )?;
    caught.push("snc");

    let region = RBox::from_ints(&[(-2, 2), (-2, 2)]);
    let disc = SemialgebraicCell::basic(vec![p("1 - x1^2 - x2^2", &["x1", "x2"])], region.clone()).unwrap();
    let mut gs = smooth_set(&disc, &region, &[], &SmoothOptions::new(Some(2), 0)).unwrap();
    gs.pieces.remove(0);
    let c = verify_covering(&gs, &disc, &region, 1000, 0);
    ensure(!c.passed() && !c.uncovered.violations[0].witness.is_empty(), "covering")?;
    caught.push("covering");

    let mut part = grid_partition(&unit, &Grid::standard(unit.clone(), 2).unwrap()).unwrap();
    part.cells.remove(3);
    let r = check_partition(&part);
    ensure(
        !r.passed() && matches!(r.violations[0].witness, Witness::Exact(_)),
        "partition hole",
    )?;
    part.cells.push(part.cells[0].clone());
    let r = check_partition(&part);
    ensure(!r.disjoint_interiors, "partition overlap")?;
    caught.push("partition");

    Ok(format!("caught with witnesses: {}", caught.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 exact strict transform (z-chart, quartic)", quartic_strict_transform),
        ("2 exact splitting at Z = 0", quartic_splitting),
        ("3 exact strict transform (x = u z)", cusp_strict_transform),
        ("4 exact chart composition", remark_composition),
        ("5 torus cover sheet count", torus_sheets),
        ("6 double cover fibers and containment", double_cover_fibers),
        ("7 partition certification", partition_certification),
        ("8 general position", general_position_check),
        ("9 sine-curve sign changes", sine_probe),
        ("10 negative controls", negative_controls),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
