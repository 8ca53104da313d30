//! Seeded checks of constructed smoothings: image containment, branch
//! divisor incidence, sheet counts with local diffeomorphism, normal
//! crossings, and covering density.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exactpoly::rational::{self, Rational};
use crate::exactpoly::{FloatPoly, Polynomial};
use crate::numeric::{self, EPS_MEM, EPS_NUM, REJECTION_BUDGET};
use crate::rbox::RBox;
use crate::semialg::{Membership, SemialgebraicCell};
use crate::smoothing::{CoverSpace, GlobalSmoothing};

/// Threshold on the local Jacobian determinant of each sheet.
pub const DET_THRESHOLD: f64 = 1e-7;
/// Violations kept per check.
const MAX_WITNESSES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckViolation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piece: Option<usize>,
    pub message: String,
    pub witness: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    pub failures: usize,
    pub violations: Vec<CheckViolation>,
}

impl Check {
    fn new(name: &str) -> Self {
        Check {
            name: name.into(),
            samples: 0,
            failures: 0,
            violations: Vec::new(),
        }
    }

    fn fail(&mut self, piece: Option<usize>, message: impl Into<String>, witness: Vec<f64>) {
        self.failures += 1;
        if self.violations.len() < MAX_WITNESSES {
            self.violations.push(CheckViolation {
                piece,
                message: message.into(),
                witness,
            });
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSheets {
    pub piece: usize,
    pub kind: String,
    pub expected: usize,
    /// Smallest and largest fiber size seen over the open part.
    pub min_count: usize,
    pub max_count: usize,
    pub min_abs_det: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub seed: u64,
    pub containment: Check,
    pub divisor: Check,
    pub sheets: Check,
    pub per_piece: Vec<PieceSheets>,
}

impl SmoothingReport {
    pub fn passed(&self) -> bool {
        self.containment.passed() && self.divisor.passed() && self.sheets.passed()
    }

    pub fn checks(&self) -> [&Check; 3] {
        [&self.containment, &self.divisor, &self.sheets]
    }
}

/// Scale-aware residual bound for points produced by Newton projection.
fn on_space(eqs: &[FloatPoly], z: &[f64]) -> bool {
    let scale = 1.0 + z.iter().map(|v| v.abs()).fold(0.0, f64::max).powi(2);
    numeric::residual(eqs, z) <= 1e-9 * scale
}

/// A fiber point over a random base point of `cube`, jittered off the
/// total space so that Newton projection has work to do.
fn random_total_point(cover: &dyn CoverSpace, cube: &RBox, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let p = cube.sample_uniform(rng);
    let fiber = cover.fiber(&p);
    if fiber.is_empty() {
        return None;
    }
    let z = &fiber[rng.gen_range(0..fiber.len())];
    Some(z.iter().map(|v| v + rng.gen_range(-0.25..0.25)).collect())
}

/// Base pool functions pulled back to the total space along the projection.
fn pulled_back(cover: &dyn CoverSpace, pool: &[Polynomial]) -> Vec<FloatPoly> {
    let proj = cover.projection_polys();
    pool.iter()
        .map(|f| f.substitute(&proj).expect("projection has base dimension").to_float())
        .collect()
}

/// Checks the three smoothing conditions on every piece at seeded samples.
///
/// 1. Points of the total space, reached by Newton projection from random
///    starts and, exactly, at rational fiber points, project into `x`.
/// 2. Points mapping onto a zero of the piece's pool lie on the branch
///    divisor, within `√ε_mem` (coordinates there are square roots).
/// 3. Over the open part, every fiber has the predicted number of points,
///    each on the total space with local Jacobian determinant above
///    [`DET_THRESHOLD`].
pub fn verify_smoothing(gs: &GlobalSmoothing, x: &SemialgebraicCell, n_samples: usize, seed: u64) -> SmoothingReport {
    let xs = x.float_system();
    let mut containment = Check::new("image containment");
    let mut divisor = Check::new("divisor preimage");
    let mut sheets = Check::new("sheet count and local diffeomorphism");
    let mut per_piece = Vec::new();
    let per = n_samples.div_ceil(gs.pieces.len().max(1)).max(1);

    for (k, piece) in gs.pieces.iter().enumerate() {
        let cover = piece.space();
        let eqs = cover.float_equations();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));

        // (1) Newton-sampled containment.
        let mut reached = 0;
        for _ in 0..4 * per {
            if reached == per {
                break;
            }
            let Some(start) = random_total_point(cover, &piece.cube, &mut rng) else {
                continue;
            };
            let Some(z) = numeric::newton_project(&eqs, &start, 1e-12, 80) else {
                continue;
            };
            if !on_space(&eqs, &z) {
                continue;
            }
            reached += 1;
            containment.samples += 1;
            let img = cover.project(&z);
            if !xs.contains(&img, EPS_MEM) {
                containment.fail(Some(k), "total-space point maps outside the set", z);
            }
        }
        // (1') exact containment at rational points of the open part.
        for j in 0..per.min(64) {
            let p: Vec<Rational> = (0..piece.cube.dim())
                .map(|i| &piece.cube.lo()[i] + rational::ratio(rng.gen_range(1..64), 64) * piece.cube.width(i))
                .collect();
            let Some(fiber) = cover.fiber_exact(&p) else { continue };
            for z in fiber {
                containment.samples += 1;
                let on = cover
                    .equations()
                    .iter()
                    .all(|e| e.eval(&z).map(|v| v.is_zero()).unwrap_or(false));
                let inside = x.contains(&cover.project_exact(&z)).unwrap_or(false);
                if !(on && inside) {
                    let w = z.iter().map(rational::to_f64).collect();
                    let msg = if on {
                        "rational fiber point maps outside the set"
                    } else {
                        "rational fiber point is not on the total space"
                    };
                    containment.fail(Some(k), format!("{msg} (sample {j})"), w);
                }
            }
        }

        // (2) points over the piece's pool zeros lie on the divisor.
        let pool_back = pulled_back(cover, &piece.open_part.strict);
        let div: Vec<FloatPoly> = cover.divisor().iter().map(Polynomial::to_float).collect();
        let tol = EPS_MEM.sqrt();
        for (fi, f) in pool_back.iter().enumerate() {
            let mut system = eqs.clone();
            system.push(f.clone());
            for _ in 0..per.div_ceil(pool_back.len()).max(1) {
                let Some(start) = random_total_point(cover, &piece.cube, &mut rng) else {
                    continue;
                };
                let Some(z) = numeric::newton_project(&system, &start, 1e-14, 80) else {
                    continue;
                };
                if !on_space(&system, &z) || !piece.cube.contains_f64(&cover.project(&z), 1e-9) {
                    continue;
                }
                divisor.samples += 1;
                if !div.iter().any(|d| d.eval(&z).abs() <= tol) {
                    divisor.fail(
                        Some(k),
                        format!("point over the zero set of pool function {fi} is off the divisor"),
                        z,
                    );
                }
            }
        }

        // (3) sheet counts over the open part.
        let expected = 1usize << piece.open_part.strict.len().min(cover.total_dim() - cover.base_dim());
        let dproj = cover.projection_jacobian();
        let mut stats = PieceSheets {
            piece: k,
            kind: piece.cover.kind().into(),
            expected,
            min_count: usize::MAX,
            max_count: 0,
            min_abs_det: f64::INFINITY,
        };
        let open: Vec<FloatPoly> = piece.open_part.strict.iter().map(Polynomial::to_float).collect();
        let mut taken = 0;
        let mut attempts = 0;
        while taken < per && attempts < REJECTION_BUDGET / 100 {
            attempts += 1;
            let p = piece.cube.sample_uniform(&mut rng);
            if !open.iter().all(|g| g.eval(&p) > EPS_MEM) {
                continue;
            }
            taken += 1;
            sheets.samples += 1;
            let fiber = cover.fiber(&p);
            stats.min_count = stats.min_count.min(fiber.len());
            stats.max_count = stats.max_count.max(fiber.len());
            if fiber.len() != expected {
                sheets.fail(
                    Some(k),
                    format!("fiber has {} points, expected {expected}", fiber.len()),
                    p.clone(),
                );
                continue;
            }
            for z in &fiber {
                if !on_space(&eqs, z) {
                    sheets.fail(Some(k), "fiber point is not on the total space", z.clone());
                    continue;
                }
                match numeric::tangent_determinant(&eqs, &dproj, z) {
                    Some(d) if d.abs() > DET_THRESHOLD => stats.min_abs_det = stats.min_abs_det.min(d.abs()),
                    other => {
                        stats.min_abs_det = stats.min_abs_det.min(other.map_or(0.0, f64::abs));
                        sheets.fail(Some(k), "sheet is not a local diffeomorphism", z.clone());
                    }
                }
            }
        }
        if stats.min_count == usize::MAX {
            stats.min_count = 0;
        }
        per_piece.push(stats);
    }
    SmoothingReport {
        seed,
        containment,
        divisor,
        sheets,
        per_piece,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SncReport {
    pub seed: u64,
    pub symbolic: Check,
    pub transversality: Check,
}

impl SncReport {
    pub fn passed(&self) -> bool {
        self.symbolic.passed() && self.transversality.passed()
    }
}

/// Whether `b = c · a^m` for a constant `c` and `m ≥ 1`.
fn is_power_multiple(a: &Polynomial, b: &Polynomial) -> bool {
    if a.is_constant() {
        return false;
    }
    matches!(b.divide_out(a), Ok((m, rest)) if m >= 1 && rest.is_constant())
}

/// Checks that `components` form a simple normal crossings divisor on the
/// algebraic set `{equations = 0}`.
///
/// Symbolically, no component is a constant multiple of a power of
/// another. At sampled points where some components vanish, the
/// gradients of the equations and of the vanishing components must have
/// full rank.
pub fn verify_snc(components: &[Polynomial], equations: &[Polynomial], n_samples: usize, seed: u64) -> SncReport {
    let mut symbolic = Check::new("components reduced and distinct");
    let mut trans = Check::new("transverse crossings");
    let dim = components
        .first()
        .or(equations.first())
        .map(Polynomial::num_vars)
        .unwrap_or(0);
    for (i, a) in components.iter().enumerate() {
        for (j, b) in components.iter().enumerate().skip(i + 1) {
            symbolic.samples += 1;
            if a.proportional_to(b).is_some() || is_power_multiple(a, b) || is_power_multiple(b, a) {
                symbolic.fail(
                    None,
                    format!("components {i} and {j} share a reduced equation"),
                    Vec::new(),
                );
            }
        }
    }
    if components.iter().chain(equations).any(|p| p.num_vars() != dim) {
        symbolic.fail(
            None,
            "components and equations live in different dimensions",
            Vec::new(),
        );
        return SncReport {
            seed,
            symbolic,
            transversality: trans,
        };
    }

    let eqs: Vec<FloatPoly> = equations.iter().map(Polynomial::to_float).collect();
    let comps: Vec<FloatPoly> = components.iter().map(Polynomial::to_float).collect();
    let room = dim.saturating_sub(equations.len());
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for mask in 1u64..(1u64 << comps.len().min(16)) {
        let s: Vec<usize> = (0..comps.len()).filter(|&i| mask >> i & 1 == 1).collect();
        if s.len() <= room.max(1) {
            subsets.push(s);
        }
    }
    subsets.sort_by_key(|s| s.len());
    subsets.truncate(64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if subsets.is_empty() {
        return SncReport {
            seed,
            symbolic,
            transversality: trans,
        };
    }
    let per = n_samples.div_ceil(subsets.len()).max(1);
    for s in &subsets {
        let mut system = eqs.clone();
        system.extend(s.iter().map(|&i| comps[i].clone()));
        for _ in 0..per {
            let start: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let Some(z) = numeric::newton_project(&system, &start, 1e-13, 80) else {
                continue;
            };
            if !on_space(&system, &z) {
                continue;
            }
            trans.samples += 1;
            let mut active = eqs.clone();
            active.extend(comps.iter().filter(|c| c.eval(&z).abs() <= 1e-9).cloned());
            let r = numeric::rank(&numeric::jacobian(&active, &z), EPS_NUM);
            if r < active.len() {
                trans.fail(None, format!("rank {r} < {} at a crossing", active.len()), z);
            }
        }
    }
    SncReport {
        seed,
        symbolic,
        transversality: trans,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub seed: u64,
    pub samples: usize,
    pub covered: usize,
    pub eps: f64,
    /// Fraction of samples within `eps` of a pool zero or grid hyperplane.
    pub band_fraction: f64,
    /// The same fraction at `eps / 10`.
    pub band_fraction_tenth: f64,
    pub uncovered: Check,
}

impl CoveringReport {
    pub fn passed(&self) -> bool {
        self.uncovered.passed() && self.band_fraction_tenth <= self.band_fraction
    }
}

fn grid_distance(gs: &GlobalSmoothing, p: &[f64]) -> f64 {
    let q = gs.grid.q as f64;
    p.iter()
        .enumerate()
        .map(|(i, &v)| {
            let s = (v - rational::to_f64(&gs.grid.offset[i])) * q;
            (s - s.round()).abs() / q
        })
        .fold(f64::INFINITY, f64::min)
}

/// Samples `x ∩ k` and checks that each sample has a nonempty fiber in
/// some piece, except inside the `eps`-band around pool zeros and grid
/// hyperplanes.
pub fn verify_covering(
    gs: &GlobalSmoothing,
    x: &SemialgebraicCell,
    k: &RBox,
    n_samples: usize,
    seed: u64,
) -> CoveringReport {
    let eps = EPS_MEM;
    let xs = x.float_system();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uncovered = Check::new("covering density");
    let (mut samples, mut covered, mut band, mut band_tenth) = (0, 0, 0, 0);
    let mut attempts = 0;
    while samples < n_samples && attempts < REJECTION_BUDGET {
        attempts += 1;
        let p = k.sample_uniform(&mut rng);
        if !xs.contains(&p, 0.0) {
            continue;
        }
        samples += 1;
        let dist = xs.distance_to_pool_zeros(&p).min(grid_distance(gs, &p));
        band += usize::from(dist <= eps);
        band_tenth += usize::from(dist <= eps / 10.0);
        let hit = gs
            .pieces
            .iter()
            .any(|pc| pc.cube.contains_f64(&p, eps) && !pc.space().fiber(&p).is_empty());
        if hit {
            covered += 1;
        } else if dist > eps {
            uncovered.fail(None, "sample of the set has no preimage", p);
        }
    }
    uncovered.samples = samples;
    let frac = |c: usize| if samples == 0 { 0.0 } else { c as f64 / samples as f64 };
    CoveringReport {
        seed,
        samples,
        covered,
        eps,
        band_fraction: frac(band),
        band_fraction_tenth: frac(band_tenth),
        uncovered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::parse_polynomial;
    use crate::exactpoly::rational::int;
    use crate::smoothing::{smooth_set, torus_smoothing, Cover, SmoothOptions};

    fn cube_smoothing() -> (SemialgebraicCell, GlobalSmoothing) {
        let region = RBox::from_ints(&[(0, 1), (0, 1)]);
        let x = SemialgebraicCell::from_box(&region);
        let gs = smooth_set(&x, &region, &[], &SmoothOptions::new(None, 0)).unwrap();
        (x, gs)
    }

    fn disc_smoothing() -> (SemialgebraicCell, GlobalSmoothing) {
        let region = RBox::from_ints(&[(-2, 2), (-2, 2)]);
        let x = SemialgebraicCell::basic(
            vec![parse_polynomial("1 - x1^2 - x2^2", &["x1", "x2"]).unwrap()],
            region.clone(),
        )
        .unwrap();
        let gs = smooth_set(&x, &region, &[], &SmoothOptions::new(Some(2), 0)).unwrap();
        (x, gs)
    }

    #[test]
    fn cube_torus_passes_all() {
        let (x, gs) = cube_smoothing();
        let r = verify_smoothing(&gs, &x, 300, 0);
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.per_piece[0].expected, 4);
        assert_eq!((r.per_piece[0].min_count, r.per_piece[0].max_count), (4, 4));
        assert!(r.divisor.samples > 0 && r.containment.samples > 0);
        let c = verify_covering(&gs, &x, &RBox::from_ints(&[(0, 1), (0, 1)]), 500, 0);
        assert!(c.passed());
        assert_eq!(c.covered, 500);
    }

    #[test]
    fn disc_passes_with_mixed_counts() {
        let (x, gs) = disc_smoothing();
        let r = verify_smoothing(&gs, &x, 1000, 1);
        assert!(r.passed(), "{:?}", r.checks().map(|c| &c.violations));
        let mut expected: Vec<usize> = r.per_piece.iter().map(|p| p.expected).collect();
        expected.sort();
        expected.dedup();
        assert!(expected.len() > 1, "{expected:?}");
        let c = verify_covering(&gs, &x, &RBox::from_ints(&[(-2, 2), (-2, 2)]), 1000, 1);
        assert!(c.passed(), "{c:?}");
    }

    #[test]
    fn perturbed_equation_is_caught() {
        let (x, mut gs) = cube_smoothing();
        if let Cover::Torus(t) = &mut gs.pieces[0].cover {
            t.equations[0] = &t.equations[0] - &Polynomial::constant(4, int(3));
        }
        let r = verify_smoothing(&gs, &x, 200, 0);
        assert!(!r.containment.passed());
        assert!(!r.containment.violations[0].witness.is_empty());
    }

    #[test]
    fn deleted_piece_leaves_uncovered_region() {
        let (x, mut gs) = disc_smoothing();
        gs.pieces.remove(0);
        let c = verify_covering(&gs, &x, &RBox::from_ints(&[(-2, 2), (-2, 2)]), 1000, 0);
        assert!(!c.passed());
        let w = &c.uncovered.violations[0].witness;
        assert!(w[0] * w[0] + w[1] * w[1] <= 1.0);
    }

    #[test]
    fn torus_divisor_is_snc() {
        let t = torus_smoothing(&RBox::cube(3, int(-1), int(1)).unwrap()).unwrap();
        let r = verify_snc(&t.divisor(), &t.equations, 1000, 0);
        assert!(r.passed(), "{r:?}");
        assert!(r.transversality.samples > 500);
        let t2 = torus_smoothing(&RBox::cube(2, int(-1), int(1)).unwrap()).unwrap();
        assert!(verify_snc(&t2.divisor(), &t2.equations, 200, 0).passed());
    }

    #[test]
    fn repeated_component_is_not_snc() {
        let x = parse_polynomial("x", &["x"]).unwrap();
        let r = verify_snc(&[x.clone(), x.pow(2)], &[], 50, 0);
        assert!(!r.symbolic.passed());
        assert!(!r.transversality.passed());
        assert_eq!(r.transversality.violations[0].witness.len(), 1);
    }

    #[test]
    fn band_shrinks_with_eps() {
        let (x, gs) = disc_smoothing();
        let c = verify_covering(&gs, &x, &RBox::from_ints(&[(-2, 2), (-2, 2)]), 2000, 3);
        assert!(c.band_fraction_tenth <= c.band_fraction);
    }

    #[test]
    fn reports_are_deterministic() {
        let (x, gs) = disc_smoothing();
        let a = verify_smoothing(&gs, &x, 200, 9);
        let b = verify_smoothing(&gs, &x, 200, 9);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
