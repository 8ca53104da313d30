//! Explicit smooth covers of cells and their assembly over a compatible
//! cube partition.
//!
//! A basic closed piece `{f_1 ≥ 0, …, f_q ≥ 0}` is the image of the
//! algebraic set `{t_i² = f_i(x)}` under the projection forgetting `t`.
//! A cube is the image of the product of circles `{c_i² + s_i² = 1}`
//! under an affine rescaling of `c`; that cover is smooth, has `2ⁿ`
//! sheets over the open cube, and the preimage of the boundary is the
//! normal crossings divisor `{∏ s_i = 0}`.

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exactpoly::rational::{self, Rational};
use crate::exactpoly::{enclose, FloatPoly, Polynomial};
use crate::numeric::{self, EPS_MEM, EPS_NUM, REJECTION_BUDGET};
use crate::partition::{
    partition_subordinate_with, refine_compatible_with, Grid, PartitionCell, PartitionError, Side, ThinCell,
};
use crate::rbox::RBox;
use crate::semialg::{BasicClosedSet, Membership, SemialgebraicCell};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SmoothingError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("cube has zero width along axis {axis}")]
    DegenerateCube { axis: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no cell of the partition has its interior inside the set")]
    EmptyInterior,
}

/// Common interface of the covers: an algebraic total space in
/// `R^{total_dim}` with a linear (affine) projection to `R^{base_dim}`.
pub trait CoverSpace {
    fn base_dim(&self) -> usize;

    /// Names of the total-space coordinates.
    fn vars(&self) -> &[String];

    fn equations(&self) -> &[Polynomial];

    fn project(&self, z: &[f64]) -> Vec<f64>;

    fn project_exact(&self, z: &[Rational]) -> Vec<Rational>;

    /// The projection as affine polynomials in the total-space variables.
    fn projection_polys(&self) -> Vec<Polynomial>;

    /// Constant Jacobian of the projection, `base_dim × total_dim`.
    fn projection_jacobian(&self) -> DMatrix<f64>;

    /// All real points over `x`; values within `ε_mem` of a branch point
    /// collapse to one.
    fn fiber(&self, x: &[f64]) -> Vec<Vec<f64>>;

    /// The fiber over a rational point when every coordinate is rational,
    /// `None` when some square root is irrational.
    fn fiber_exact(&self, x: &[Rational]) -> Option<Vec<Vec<Rational>>>;

    /// Components of the branch divisor, as polynomials on the total space.
    fn divisor(&self) -> Vec<Polynomial>;

    /// Sheet count predicted by the construction over `x`.
    fn predicted_sheets(&self, x: &[f64]) -> usize;

    fn total_dim(&self) -> usize {
        self.vars().len()
    }

    fn float_equations(&self) -> Vec<FloatPoly> {
        self.equations().iter().map(Polynomial::to_float).collect()
    }

    /// Smallest singular value of the equations' Jacobian at `z`; the
    /// total space is smooth of the expected dimension at `z` when this
    /// exceeds `ε_num`.
    fn min_singular_value(&self, z: &[f64]) -> f64 {
        let j = numeric::jacobian(&self.float_equations(), z);
        numeric::singular_values(&j).last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Branch values `±√v`, collapsed to one point within `ε_mem` of zero.
fn signed_roots(v: f64) -> Option<Vec<f64>> {
    if v < -EPS_MEM {
        None
    } else if v.abs() <= EPS_MEM {
        Some(vec![0.0])
    } else {
        let r = v.sqrt();
        Some(vec![r, -r])
    }
}

fn exact_roots(v: &Rational) -> Option<Option<Vec<Rational>>> {
    if v.is_negative() {
        Some(None)
    } else if v.is_zero() {
        Some(Some(vec![Rational::zero()]))
    } else {
        let r = rational::sqrt_exact(v)?;
        Some(Some(vec![r.clone(), -r]))
    }
}

/// Cartesian product of per-coordinate choices, prefixed by `head`.
fn product<T: Clone>(head: &[T], choices: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![head.to_vec()];
    for c in choices {
        out = out
            .into_iter()
            .flat_map(|p| {
                c.iter().map(move |v| {
                    let mut p = p.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// `Z = {(x, t) : t_i² = f_i(x)} ⊂ R^{n+q}` over a basic closed piece.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleCover {
    pub base: BasicClosedSet,
    pub vars: Vec<String>,
    pub equations: Vec<Polynomial>,
}

impl DoubleCover {
    pub fn new(base: &BasicClosedSet) -> Self {
        let n = base.ambient_dim();
        let q = base.ineqs().len();
        let total = n + q;
        let vars = (1..=n)
            .map(|i| format!("x{i}"))
            .chain((1..=q).map(|i| format!("t{i}")))
            .collect();
        let equations = base
            .ineqs()
            .iter()
            .enumerate()
            .map(|(i, f)| &Polynomial::var(total, n + i).pow(2) - &f.embed(total, 0))
            .collect();
        DoubleCover {
            base: base.clone(),
            vars,
            equations,
        }
    }

    pub fn num_ineqs(&self) -> usize {
        self.base.ineqs().len()
    }

    /// Where the Jacobian of `t_i² − f_i` can drop rank: only on some
    /// `{t_i = 0}`, and there only if the gradients of the `f_j` with
    /// `t_j = 0` are dependent.
    pub fn singular_candidate(&self) -> String {
        "union over i of {t_i = 0}, restricted to points where the gradients \
         of the f_j with t_j = 0 are linearly dependent"
            .into()
    }

    /// Sup bound on `|t_i|` over a box, from interval enclosures of `f_i`.
    pub fn fiber_bound(&self, bbox: &RBox) -> f64 {
        self.base
            .ineqs()
            .iter()
            .map(|f| rational::to_f64(&enclose(f, bbox.lo(), bbox.hi()).hi).max(0.0).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Double cover of a single basic closed piece.
pub fn double_cover(cell: &BasicClosedSet) -> DoubleCover {
    DoubleCover::new(cell)
}

impl CoverSpace for DoubleCover {
    fn base_dim(&self) -> usize {
        self.base.ambient_dim()
    }

    fn vars(&self) -> &[String] {
        &self.vars
    }

    fn equations(&self) -> &[Polynomial] {
        &self.equations
    }

    fn project(&self, z: &[f64]) -> Vec<f64> {
        z[..self.base_dim()].to_vec()
    }

    fn project_exact(&self, z: &[Rational]) -> Vec<Rational> {
        z[..self.base_dim()].to_vec()
    }

    fn projection_polys(&self) -> Vec<Polynomial> {
        (0..self.base_dim())
            .map(|i| Polynomial::var(self.total_dim(), i))
            .collect()
    }

    fn projection_jacobian(&self) -> DMatrix<f64> {
        let n = self.base_dim();
        DMatrix::from_fn(n, self.total_dim(), |i, j| if i == j { 1.0 } else { 0.0 })
    }

    fn fiber(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut choices = Vec::with_capacity(self.num_ineqs());
        for f in self.base.ineqs() {
            match signed_roots(f.eval_f64(x)) {
                Some(r) => choices.push(r),
                None => return Vec::new(),
            }
        }
        product(x, &choices)
    }

    fn fiber_exact(&self, x: &[Rational]) -> Option<Vec<Vec<Rational>>> {
        let mut choices = Vec::with_capacity(self.num_ineqs());
        for f in self.base.ineqs() {
            let v = f.eval(x).ok()?;
            match exact_roots(&v)? {
                Some(r) => choices.push(r),
                None => return Some(Vec::new()),
            }
        }
        Some(product(x, &choices))
    }

    fn divisor(&self) -> Vec<Polynomial> {
        let (n, total) = (self.base_dim(), self.total_dim());
        (0..self.num_ineqs()).map(|i| Polynomial::var(total, n + i)).collect()
    }

    fn predicted_sheets(&self, x: &[f64]) -> usize {
        let mut positive = 0;
        for f in self.base.ineqs() {
            let v = f.eval_f64(x);
            if v < -EPS_MEM {
                return 0;
            }
            if v > EPS_MEM {
                positive += 1;
            }
        }
        1 << positive
    }
}

/// `(S¹)ⁿ = {c_i² + s_i² = 1}` over a cube, projecting by
/// `x_i = m_i + h_i c_i` with `m` the center and `h` the half-widths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusCover {
    pub cube: RBox,
    pub vars: Vec<String>,
    pub equations: Vec<Polynomial>,
}

/// The product-of-circles cover of a non-degenerate cube.
pub fn torus_smoothing(cube: &RBox) -> Result<TorusCover, SmoothingError> {
    if let Some(axis) = (0..cube.dim()).find(|&i| cube.width(i).is_zero()) {
        return Err(SmoothingError::DegenerateCube { axis });
    }
    let n = cube.dim();
    let vars = (1..=n)
        .map(|i| format!("c{i}"))
        .chain((1..=n).map(|i| format!("s{i}")))
        .collect();
    let equations = (0..n)
        .map(|i| {
            let c = Polynomial::var(2 * n, i);
            let s = Polynomial::var(2 * n, n + i);
            &(&c.pow(2) + &s.pow(2)) - &Polynomial::one(2 * n)
        })
        .collect();
    Ok(TorusCover {
        cube: cube.clone(),
        vars,
        equations,
    })
}

impl TorusCover {
    fn half(&self, i: usize) -> Rational {
        self.cube.width(i) / rational::int(2)
    }

    fn mid(&self, i: usize) -> Rational {
        (&self.cube.lo()[i] + &self.cube.hi()[i]) / rational::int(2)
    }

    /// Point of the total space at angles `θ`.
    pub fn point_at(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .map(|t| t.cos())
            .chain(theta.iter().map(|t| t.sin()))
            .collect()
    }
}

impl CoverSpace for TorusCover {
    fn base_dim(&self) -> usize {
        self.cube.dim()
    }

    fn vars(&self) -> &[String] {
        &self.vars
    }

    fn equations(&self) -> &[Polynomial] {
        &self.equations
    }

    fn project(&self, z: &[f64]) -> Vec<f64> {
        (0..self.base_dim())
            .map(|i| rational::to_f64(&self.mid(i)) + rational::to_f64(&self.half(i)) * z[i])
            .collect()
    }

    fn project_exact(&self, z: &[Rational]) -> Vec<Rational> {
        (0..self.base_dim())
            .map(|i| self.mid(i) + self.half(i) * &z[i])
            .collect()
    }

    fn projection_polys(&self) -> Vec<Polynomial> {
        let n = self.base_dim();
        (0..n)
            .map(|i| &Polynomial::constant(2 * n, self.mid(i)) + &Polynomial::var(2 * n, i).scale(&self.half(i)))
            .collect()
    }

    fn projection_jacobian(&self) -> DMatrix<f64> {
        let n = self.base_dim();
        DMatrix::from_fn(
            n,
            2 * n,
            |i, j| {
                if i == j {
                    rational::to_f64(&self.half(i))
                } else {
                    0.0
                }
            },
        )
    }

    fn fiber(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.base_dim();
        let mut c = Vec::with_capacity(n);
        let mut choices = Vec::with_capacity(n);
        for (i, xi) in x.iter().enumerate() {
            let ci = (xi - rational::to_f64(&self.mid(i))) / rational::to_f64(&self.half(i));
            match signed_roots(1.0 - ci * ci) {
                Some(r) => choices.push(r),
                None => return Vec::new(),
            }
            c.push(ci.clamp(-1.0, 1.0));
        }
        product(&c, &choices)
    }

    fn fiber_exact(&self, x: &[Rational]) -> Option<Vec<Vec<Rational>>> {
        let n = self.base_dim();
        let mut c = Vec::with_capacity(n);
        let mut choices = Vec::with_capacity(n);
        for (i, xi) in x.iter().enumerate() {
            let ci = (xi - self.mid(i)) / self.half(i);
            match exact_roots(&(Rational::one() - &ci * &ci))? {
                Some(r) => choices.push(r),
                None => return Some(Vec::new()),
            }
            c.push(ci);
        }
        Some(product(&c, &choices))
    }

    fn divisor(&self) -> Vec<Polynomial> {
        let n = self.base_dim();
        (0..n).map(|i| Polynomial::var(2 * n, n + i)).collect()
    }

    fn predicted_sheets(&self, x: &[f64]) -> usize {
        let (lo, hi) = self.cube.to_f64();
        let mut interior = 0;
        for i in 0..x.len() {
            if x[i] < lo[i] - EPS_MEM || x[i] > hi[i] + EPS_MEM {
                return 0;
            }
            let c = (x[i] - rational::to_f64(&self.mid(i))) / rational::to_f64(&self.half(i));
            if 1.0 - c * c > EPS_MEM {
                interior += 1;
            }
        }
        1 << interior
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cover {
    Torus(TorusCover),
    Double(DoubleCover),
}

impl Cover {
    pub fn as_space(&self) -> &dyn CoverSpace {
        match self {
            Cover::Torus(t) => t,
            Cover::Double(d) => d,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Cover::Torus(_) => "torus",
            Cover::Double(_) => "double",
        }
    }
}

/// Sampled smooth/singular status of a cover's total space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessLedger {
    /// Points sampled over the open cell.
    pub interior_samples: usize,
    /// Points sampled on the branch divisor.
    pub divisor_samples: usize,
    pub smooth: usize,
    pub singular: usize,
    /// Smallest singular value of the equations' Jacobian over all samples.
    pub min_sigma: f64,
    /// A few points where the rank dropped.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub singular_points: Vec<Vec<f64>>,
    /// Sup bound on the total-space coordinates over the cell's box.
    pub coordinate_bound: f64,
}

const LEDGER_KEEP: usize = 8;

/// Samples the total space over `bbox`, both over the open cell and on
/// each divisor component (by Newton projection from interior points),
/// and records the rank of the equations' Jacobian at each sample.
pub fn smoothness_ledger(
    cover: &dyn CoverSpace,
    base: &dyn Membership,
    bbox: &RBox,
    count: usize,
    seed: u64,
) -> SmoothnessLedger {
    let sys = base.float_system();
    let eqs = cover.float_equations();
    let divisor: Vec<FloatPoly> = cover.divisor().iter().map(Polynomial::to_float).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interior = Vec::new();
    let mut attempts = 0;
    while interior.len() < count && attempts < REJECTION_BUDGET / 100 {
        attempts += 1;
        let x = bbox.sample_uniform(&mut rng);
        if sys.contains_strictly(&x, EPS_MEM) {
            let fiber = cover.fiber(&x);
            let k = rng.gen_range(0..fiber.len().max(1));
            if let Some(z) = fiber.into_iter().nth(k) {
                interior.push(z);
            }
        }
    }
    let mut on_divisor = Vec::new();
    if !interior.is_empty() {
        for (k, d) in divisor.iter().enumerate() {
            for j in 0..count.div_ceil(4).max(1) {
                let start = &interior[(k + j) % interior.len()];
                let mut system = eqs.clone();
                system.push(d.clone());
                if let Some(z) = numeric::newton_project(&system, start, 1e-12, 60) {
                    if sys.contains(&cover.project(&z), 1e-7) {
                        on_divisor.push(z);
                    }
                }
            }
        }
    }

    let mut ledger = SmoothnessLedger {
        interior_samples: interior.len(),
        divisor_samples: on_divisor.len(),
        smooth: 0,
        singular: 0,
        min_sigma: f64::INFINITY,
        singular_points: Vec::new(),
        coordinate_bound: 0.0,
    };
    for z in interior.iter().chain(&on_divisor) {
        let sigma = cover.min_singular_value(z);
        ledger.min_sigma = ledger.min_sigma.min(sigma);
        if sigma > EPS_NUM {
            ledger.smooth += 1;
        } else {
            ledger.singular += 1;
            if ledger.singular_points.len() < LEDGER_KEEP {
                ledger.singular_points.push(z.clone());
            }
        }
    }
    ledger
}

/// `{g > 0 for g in strict}`: the open part of a cell over which its
/// cover is a trivial finite covering.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenPiece {
    pub strict: Vec<Polynomial>,
}

impl OpenPiece {
    pub fn contains(&self, x: &[f64], eps: f64) -> bool {
        self.strict.iter().all(|g| g.eval_f64(x) > eps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingPiece {
    pub cube: RBox,
    pub cell: SemialgebraicCell,
    pub cover: Cover,
    pub open_part: OpenPiece,
    pub ledger: SmoothnessLedger,
}

impl SmoothingPiece {
    pub fn space(&self) -> &dyn CoverSpace {
        self.cover.as_space()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalSmoothing {
    pub set: SemialgebraicCell,
    pub grid: Grid,
    pub pieces: Vec<SmoothingPiece>,
    /// Cells dropped because their interior is outside the set.
    pub discarded: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub thin: Vec<ThinCell>,
}

impl GlobalSmoothing {
    /// Whether `x` lies in `U`, the union of the pieces' open parts.
    pub fn in_open_part(&self, x: &[f64], eps: f64) -> bool {
        self.pieces.iter().any(|p| p.open_part.contains(x, eps))
    }

    /// Total-space samples over each piece's open part, with their images.
    pub fn sample_points(&self, per_piece: usize, seed: u64) -> Vec<CoverPoint> {
        let mut out = Vec::new();
        for (k, p) in self.pieces.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let mut taken = 0;
            let mut attempts = 0;
            while taken < per_piece && attempts < REJECTION_BUDGET / 100 {
                attempts += 1;
                let x = p.cube.sample_uniform(&mut rng);
                if !p.open_part.contains(&x, EPS_MEM) {
                    continue;
                }
                for z in p.space().fiber(&x) {
                    out.push(CoverPoint {
                        piece: k,
                        image: p.space().project(&z),
                        total: z,
                    });
                }
                taken += 1;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub piece: usize,
    pub total: Vec<f64>,
    pub image: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct SmoothOptions {
    /// Initial grid density; the coarsest grid fitting the region when unset.
    pub q0: Option<u32>,
    pub seed: u64,
    /// Samples per piece for the smoothness ledger.
    pub ledger_samples: usize,
}

impl SmoothOptions {
    pub fn new(q0: Option<u32>, seed: u64) -> Self {
        SmoothOptions {
            q0,
            seed,
            ledger_samples: 32,
        }
    }
}

fn piece_for(cell: &PartitionCell, k: usize, opts: &SmoothOptions) -> Result<SmoothingPiece, SmoothingError> {
    let n = cell.cube.dim();
    let (cover, base, open_part) = if cell.is_cube() {
        let t = torus_smoothing(&cell.cube)?;
        let base = BasicClosedSet::from_box(&cell.cube);
        let open = OpenPiece {
            strict: cell.cube.pool(),
        };
        (Cover::Torus(t), base, open)
    } else {
        let base = cell.cell.piece(0);
        let open = OpenPiece {
            strict: base.ineqs().to_vec(),
        };
        (Cover::Double(double_cover(&base)), base, open)
    };
    let mut ledger = smoothness_ledger(
        cover.as_space(),
        &base,
        &cell.cube,
        opts.ledger_samples,
        opts.seed.wrapping_add(k as u64),
    );
    ledger.coordinate_bound = match &cover {
        Cover::Torus(_) => 1.0,
        Cover::Double(d) => d.fiber_bound(&cell.cube),
    }
    .max(
        (0..n)
            .map(|i| {
                rational::to_f64(&cell.cube.lo()[i])
                    .abs()
                    .max(rational::to_f64(&cell.cube.hi()[i]).abs())
            })
            .fold(0.0, f64::max),
    );
    Ok(SmoothingPiece {
        cube: cell.cube.clone(),
        cell: cell.cell.clone(),
        cover,
        open_part,
        ledger,
    })
}

/// Smooths a full-dimensional closed set over `region`.
///
/// The region is partitioned subordinate to `covering` (a single box
/// around the region when empty), the partition is refined to be
/// compatible with `x`, and every cell whose interior lies in `x` gets a
/// cover: the product of circles when the cell is a whole cube, otherwise
/// the double cover of the cube-with-signs piece.
pub fn smooth_set(
    x: &SemialgebraicCell,
    region: &RBox,
    covering: &[RBox],
    opts: &SmoothOptions,
) -> Result<GlobalSmoothing, SmoothingError> {
    let n = region.dim();
    if x.ambient_dim() != n {
        return Err(SmoothingError::DimensionMismatch {
            expected: n,
            got: x.ambient_dim(),
        });
    }
    let grid = match opts.q0 {
        Some(q) => Grid::standard(region.clone(), q)?,
        None => Grid::fitting(region.clone())?,
    };
    let default_cover;
    let covering = if covering.is_empty() {
        default_cover = vec![region.inflate(&Rational::one())];
        &default_cover
    } else {
        covering
    };
    let partition = partition_subordinate_with(covering, &grid)?;
    let refined = refine_compatible_with(&partition, x, opts.seed)?;
    let total = refined.partition.cells.len();
    let kept: Vec<&PartitionCell> = refined
        .partition
        .cells
        .iter()
        .filter(|c| c.side == Some(Side::Inside))
        .collect();
    if kept.is_empty() {
        return Err(SmoothingError::EmptyInterior);
    }
    let pieces = kept
        .iter()
        .enumerate()
        .map(|(k, c)| piece_for(c, k, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GlobalSmoothing {
        set: x.clone(),
        grid: refined.partition.grid.clone(),
        discarded: total - pieces.len(),
        pieces,
        thin: refined.thin,
    })
}
