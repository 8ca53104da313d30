//! Grid partitions of a box into cells: subordinate to a covering by open
//! boxes, refined to be compatible with a semialgebraic set, and placed in
//! general position with respect to a variety.
//!
//! All partitions share one global grid `{x_i = j/q + offset_i}`, so every
//! unrefined cell is a grid cube and the union/disjointness checks reduce
//! to exact box arithmetic.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exactpoly::rational::{self, Rational};
use crate::exactpoly::{certify_sign, BoxSign, PolyError, Polynomial};
use crate::numeric::{self, EPS_MEM, EPS_NUM};
use crate::rbox::RBox;
use crate::semialg::{Membership, SemialgebraicCell, SetError, Variety};

/// Bisection depth for interval sign certificates on a cube.
const SIGN_DEPTH: u32 = 6;
/// Upper bound on cubes in one partition.
const MAX_CUBES: usize = 1 << 22;
/// Doubling rounds tried when searching for a subordinate grid.
const MAX_REFINEMENTS: u32 = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PartitionError {
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("region face {side} of axis {axis} at {value} is not a grid hyperplane")]
    Incommensurate {
        axis: usize,
        side: &'static str,
        value: String,
    },
    #[error("covering misses the point {witness:?}")]
    Uncovered { witness: Vec<String> },
    #[error("partition would need more than {MAX_CUBES} cubes (q = {q})")]
    TooFine { q: u32 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "general position not reached after {attempts} attempts; last failure: \
         hyperplane x{axis} = {value}, generator {generator} restricts to zero"
    )]
    RetriesExhausted {
        attempts: u32,
        axis: usize,
        value: String,
        generator: usize,
    },
}

/// The hyperplanes `{x_i = j/q + offset_i}` restricted to a region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub q: u32,
    #[serde(with = "rational::serde_vec")]
    pub offset: Vec<Rational>,
    pub region: RBox,
}

impl Grid {
    pub fn new(q: u32, offset: Vec<Rational>, region: RBox) -> Result<Self, PartitionError> {
        if q == 0 {
            return Err(PartitionError::InvalidGrid("q must be positive".into()));
        }
        if offset.len() != region.dim() {
            return Err(PartitionError::DimensionMismatch {
                expected: region.dim(),
                got: offset.len(),
            });
        }
        let step = Rational::new(BigInt::one(), BigInt::from(q));
        for (i, o) in offset.iter().enumerate() {
            if o < &Rational::zero() || o >= &step {
                return Err(PartitionError::InvalidGrid(format!(
                    "offset {} on axis {i} is outside [0, 1/{q})",
                    rational::format(o)
                )));
            }
        }
        Ok(Grid { q, offset, region })
    }

    /// Unperturbed grid of density `q`.
    pub fn standard(region: RBox, q: u32) -> Result<Self, PartitionError> {
        let n = region.dim();
        Grid::new(q, vec![Rational::zero(); n], region)
    }

    /// Coarsest unperturbed grid on which every face of `region` lies.
    pub fn fitting(region: RBox) -> Result<Self, PartitionError> {
        let mut q = BigInt::one();
        for c in region.lo().iter().chain(region.hi()) {
            q = q.lcm(c.denom());
        }
        let q = q
            .to_u32()
            .ok_or_else(|| PartitionError::InvalidGrid("region denominators too large".into()))?;
        Grid::standard(region, q)
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    fn q_rat(&self) -> Rational {
        rational::int(self.q as i64)
    }

    /// Index of `c` on axis `axis` scaled to grid units.
    fn scaled(&self, axis: usize, c: &Rational) -> Rational {
        (c - &self.offset[axis]) * self.q_rat()
    }

    fn value(&self, axis: usize, j: &BigInt) -> Rational {
        Rational::from_integer(j.clone()) / self.q_rat() + &self.offset[axis]
    }

    pub fn is_grid_value(&self, axis: usize, c: &Rational) -> bool {
        self.scaled(axis, c).is_integer()
    }

    /// Grid hyperplanes `(axis, value)` meeting the region, axis-major.
    pub fn hyperplanes(&self) -> Vec<(usize, Rational)> {
        let mut out = Vec::new();
        for axis in 0..self.dim() {
            let lo = self.scaled(axis, &self.region.lo()[axis]).ceil().to_integer();
            let hi = self.scaled(axis, &self.region.hi()[axis]).floor().to_integer();
            let mut j = lo;
            while j <= hi {
                out.push((axis, self.value(axis, &j)));
                j += 1;
            }
        }
        out
    }

    /// Smallest box with grid faces containing `region`.
    pub fn aligned_hull(region: &RBox, q: u32, offset: &[Rational]) -> RBox {
        let g = Grid {
            q,
            offset: offset.to_vec(),
            region: region.clone(),
        };
        let lo = (0..region.dim())
            .map(|i| g.value(i, &g.scaled(i, &region.lo()[i]).floor().to_integer()))
            .collect();
        let hi = (0..region.dim())
            .map(|i| g.value(i, &g.scaled(i, &region.hi()[i]).ceil().to_integer()))
            .collect();
        RBox::new(lo, hi).expect("hull of a valid box")
    }

    /// Grid of density `k·q` containing every hyperplane of `self`.
    pub fn refined(&self, k: u32) -> Grid {
        let q = self.q * k;
        let step = Rational::new(BigInt::one(), BigInt::from(q));
        let offset = self
            .offset
            .iter()
            .map(|o| {
                let t = (o / &step).floor();
                o - t * &step
            })
            .collect();
        Grid {
            q,
            offset,
            region: self.region.clone(),
        }
    }

    fn check_commensurate(&self) -> Result<(), PartitionError> {
        for axis in 0..self.dim() {
            for (side, v) in [("lo", &self.region.lo()[axis]), ("hi", &self.region.hi()[axis])] {
                if !self.is_grid_value(axis, v) {
                    return Err(PartitionError::Incommensurate {
                        axis,
                        side,
                        value: rational::format(v),
                    });
                }
            }
        }
        if self.region.has_zero_width() {
            return Err(PartitionError::InvalidGrid("region has an edge of zero width".into()));
        }
        Ok(())
    }

    /// Grid cubes of the region in row-major order (last axis fastest).
    pub fn cubes(&self) -> Result<Vec<RBox>, PartitionError> {
        self.check_commensurate()?;
        let n = self.dim();
        let mut starts = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        let mut total: usize = 1;
        for axis in 0..n {
            let a = self.scaled(axis, &self.region.lo()[axis]).to_integer();
            let b = self.scaled(axis, &self.region.hi()[axis]).to_integer();
            let k = (&b - &a).to_usize().ok_or(PartitionError::TooFine { q: self.q })?;
            total = total
                .checked_mul(k)
                .filter(|&t| t <= MAX_CUBES)
                .ok_or(PartitionError::TooFine { q: self.q })?;
            starts.push(a);
            counts.push(k);
        }
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let lo: Vec<Rational> = (0..n)
                .map(|i| self.value(i, &(&starts[i] + BigInt::from(idx[i]))))
                .collect();
            let hi: Vec<Rational> = (0..n)
                .map(|i| self.value(i, &(&starts[i] + BigInt::from(idx[i] + 1))))
                .collect();
            out.push(RBox::new(lo, hi).expect("grid cube"));
            for i in (0..n).rev() {
                idx[i] += 1;
                if idx[i] < counts[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        Ok(out)
    }
}

/// Which side of a set the interior of a cell lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Inside,
    Outside,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCell {
    /// Grid cube the cell was cut from.
    pub cube: RBox,
    pub cell: SemialgebraicCell,
    /// Position relative to the set the partition was refined against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    /// Index of a covering box containing the cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subordinate_to: Option<usize>,
}

impl PartitionCell {
    fn from_cube(cube: RBox) -> Self {
        PartitionCell {
            cell: SemialgebraicCell::from_box(&cube),
            cube,
            side: None,
            subordinate_to: None,
        }
    }

    /// True when the cell is its whole cube, without sign constraints.
    pub fn is_cube(&self) -> bool {
        self.cell.pool().len() == 2 * self.cube.dim() && self.cell.pieces().len() == 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellPartition {
    pub grid: Grid,
    pub cells: Vec<PartitionCell>,
    /// Open covering boxes the partition is subordinate to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covering: Option<Vec<RBox>>,
    /// Grid-aligned closed boxes chosen inside each covering member
    /// (absent where no grid box fits).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub big_boxes: Vec<Option<RBox>>,
}

impl CellPartition {
    pub fn region(&self) -> &RBox {
        &self.grid.region
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Partition of `grid.region` into the closed cubes of the grid.
pub fn grid_partition(region: &RBox, grid: &Grid) -> Result<CellPartition, PartitionError> {
    let mut grid = grid.clone();
    grid.region = region.clone();
    let cells = grid.cubes()?.into_iter().map(PartitionCell::from_cube).collect();
    Ok(CellPartition {
        grid,
        cells,
        covering: None,
        big_boxes: Vec::new(),
    })
}

/// Certifies that the open boxes cover the closed region. Membership in
/// each open box is constant on every product of breakpoints and open
/// gaps, so testing one representative per product is exact.
pub fn certify_cover(covering: &[RBox], region: &RBox) -> Result<(), Vec<Rational>> {
    let n = region.dim();
    let atoms: Vec<Vec<Rational>> = (0..n)
        .map(|axis| {
            let (lo, hi) = (&region.lo()[axis], &region.hi()[axis]);
            let mut cuts: BTreeSet<Rational> = [lo.clone(), hi.clone()].into_iter().collect();
            for b in covering {
                for c in [&b.lo()[axis], &b.hi()[axis]] {
                    if lo < c && c < hi {
                        cuts.insert(c.clone());
                    }
                }
            }
            let cuts: Vec<Rational> = cuts.into_iter().collect();
            let mut reps = Vec::with_capacity(2 * cuts.len());
            for (k, c) in cuts.iter().enumerate() {
                reps.push(c.clone());
                if let Some(next) = cuts.get(k + 1) {
                    reps.push((c + next) / rational::int(2));
                }
            }
            reps
        })
        .collect();
    let mut idx = vec![0usize; n];
    loop {
        let p: Vec<Rational> = (0..n).map(|i| atoms[i][idx[i]].clone()).collect();
        if !covering.iter().any(|b| b.contains_open(&p)) {
            return Err(p);
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                return Ok(());
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < atoms[axis].len() {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Largest closed grid box inside the open box `w`, clipped to the region.
fn big_box(grid: &Grid, w: &RBox) -> Option<RBox> {
    let n = grid.dim();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for axis in 0..n {
        let a = grid.scaled(axis, &w.lo()[axis]).floor().to_integer() + 1;
        let b = grid.scaled(axis, &w.hi()[axis]).ceil().to_integer() - 1;
        let a = grid.value(axis, &a).max(grid.region.lo()[axis].clone());
        let b = grid.value(axis, &b).min(grid.region.hi()[axis].clone());
        if a >= b {
            return None;
        }
        lo.push(a);
        hi.push(b);
    }
    RBox::new(lo, hi).ok()
}

/// Partition of `region` subordinate to an open covering, on the coarsest
/// grid fitting the region.
pub fn partition_subordinate(covering: &[RBox], region: &RBox) -> Result<CellPartition, PartitionError> {
    partition_subordinate_with(covering, &Grid::fitting(region.clone())?)
}

/// Partition of `grid.region` subordinate to an open covering.
///
/// For each covering member a big closed grid box is chosen inside it;
/// each grid cube then goes to the first member whose big box contains it,
/// which realizes the closure-differences `closure(int Q_ι ∖ ⋃_{γ<ι} Q_γ)`
/// as unions of cubes. The grid is doubled until every cube is placed.
pub fn partition_subordinate_with(covering: &[RBox], grid: &Grid) -> Result<CellPartition, PartitionError> {
    let n = grid.dim();
    if let Some(b) = covering.iter().find(|b| b.dim() != n) {
        return Err(PartitionError::DimensionMismatch {
            expected: n,
            got: b.dim(),
        });
    }
    grid.check_commensurate()?;
    certify_cover(covering, &grid.region).map_err(|w| PartitionError::Uncovered {
        witness: w.iter().map(rational::format).collect(),
    })?;

    let mut grid = grid.clone();
    for _ in 0..=MAX_REFINEMENTS {
        let big: Vec<Option<RBox>> = covering.iter().map(|w| big_box(&grid, w)).collect();
        let cubes = grid.cubes()?;
        let owners: Vec<Option<usize>> = cubes
            .iter()
            .map(|c| big.iter().position(|b| b.as_ref().is_some_and(|b| b.contains_box(c))))
            .collect();
        if owners.iter().all(Option::is_some) {
            let cells = cubes
                .into_iter()
                .zip(owners)
                .map(|(cube, owner)| PartitionCell {
                    subordinate_to: owner,
                    ..PartitionCell::from_cube(cube)
                })
                .collect();
            return Ok(CellPartition {
                grid,
                cells,
                covering: Some(covering.to_vec()),
                big_boxes: big,
            });
        }
        grid = grid.refined(2);
    }
    Err(PartitionError::TooFine { q: grid.q })
}

/// A refined cell whose sign along some pool function could not be
/// resolved: every probe sat within `ε_mem` of its zero set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinCell {
    pub input_cell: usize,
    pub pool_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement {
    pub partition: CellPartition,
    pub thin: Vec<ThinCell>,
}

/// Probe points strictly inside a cube: a midpoint lattice plus seeded
/// uniform samples.
fn cube_probes(cube: &RBox, per_axis: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = cube.dim();
    let (lo, hi) = cube.to_f64();
    let mut out = Vec::new();
    let total = per_axis.pow(n as u32);
    for k in 0..total {
        let mut r = k;
        let mut p = Vec::with_capacity(n);
        for i in 0..n {
            let t = (r % per_axis) as f64 + 0.5;
            r /= per_axis;
            p.push(lo[i] + (hi[i] - lo[i]) * t / per_axis as f64);
        }
        out.push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        out.push(
            (0..n)
                .map(|i| lo[i] + (hi[i] - lo[i]) * rng.gen_range(0.001..0.999))
                .collect(),
        );
    }
    out
}

fn lattice_size(n: usize) -> usize {
    match n {
        0..=2 => 8,
        3 => 5,
        _ => 3,
    }
}

/// Sign of a pool function across a cell: certified on the whole cube, or
/// fixed by the sign pattern of the refined piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tri {
    Pos,
    Neg,
    Unknown,
}

fn side_of(y: &SemialgebraicCell, signs: &[Tri]) -> Option<Side> {
    let mut unknown = false;
    for piece in y.pieces() {
        if piece.iter().all(|&i| signs[i] == Tri::Pos) {
            return Some(Side::Inside);
        }
        if piece.iter().all(|&i| signs[i] != Tri::Neg) {
            unknown = true;
        }
    }
    if unknown {
        None
    } else {
        Some(Side::Outside)
    }
}

pub fn refine_compatible(p: &CellPartition, y: &SemialgebraicCell) -> Result<Refinement, PartitionError> {
    refine_compatible_with(p, y, 0)
}

/// Splits every cell along the sign conditions of `y`'s pool so that each
/// output interior lies inside or outside `y`.
///
/// Pool functions with an interval-certified sign on a cube do not split
/// it. The remaining ones split the cell into one piece per strict sign
/// pattern observed at the probe points.
pub fn refine_compatible_with(
    p: &CellPartition,
    y: &SemialgebraicCell,
    seed: u64,
) -> Result<Refinement, PartitionError> {
    let n = p.grid.dim();
    if y.ambient_dim() != n {
        return Err(PartitionError::DimensionMismatch {
            expected: n,
            got: y.ambient_dim(),
        });
    }
    let ypool_f: Vec<_> = y.pool().iter().map(Polynomial::to_float).collect();
    let mut cells = Vec::new();
    let mut thin = Vec::new();

    for (ci, pc) in p.cells.iter().enumerate() {
        let certified: Vec<Option<BoxSign>> = y
            .pool()
            .iter()
            .map(|g| certify_sign(g, pc.cube.lo(), pc.cube.hi(), SIGN_DEPTH))
            .collect();
        let mut base_signs: Vec<Tri> = certified
            .iter()
            .map(|c| match c {
                Some(BoxSign::NonNegative) | Some(BoxSign::Zero) => Tri::Pos,
                Some(BoxSign::NonPositive) => Tri::Neg,
                None => Tri::Unknown,
            })
            .collect();
        let open: Vec<usize> = (0..certified.len()).filter(|&k| certified[k].is_none()).collect();
        if open.is_empty() {
            cells.push(PartitionCell {
                side: side_of(y, &base_signs),
                ..pc.clone()
            });
            continue;
        }

        let sys = pc.cell.float_system();
        let probes: Vec<Vec<f64>> = cube_probes(
            &pc.cube,
            lattice_size(n),
            32,
            seed ^ (ci as u64).wrapping_mul(0x9e37_79b9),
        )
        .into_iter()
        .filter(|x| sys.contains_strictly(x, EPS_MEM))
        .collect();
        let mut splitting = Vec::new();
        for &k in &open {
            if probes.iter().all(|x| ypool_f[k].eval(x).abs() <= EPS_MEM) {
                thin.push(ThinCell {
                    input_cell: ci,
                    pool_index: k,
                });
            } else {
                splitting.push(k);
            }
        }
        let mut patterns: BTreeSet<Vec<bool>> = BTreeSet::new();
        for x in &probes {
            let vals: Vec<f64> = splitting.iter().map(|&k| ypool_f[k].eval(x)).collect();
            if vals.iter().all(|v| v.abs() > EPS_MEM) {
                patterns.insert(vals.iter().map(|v| *v > 0.0).collect());
            }
        }
        if patterns.is_empty() {
            cells.push(PartitionCell {
                side: None,
                ..pc.clone()
            });
            continue;
        }
        // Descending so the positive (inside) piece comes first.
        for pattern in patterns.into_iter().rev() {
            let mut cell = pc.cell.clone();
            for (&k, &positive) in splitting.iter().zip(&pattern) {
                let g = &y.pool()[k];
                cell = cell.intersect_with(if positive { g.clone() } else { -g })?;
                base_signs[k] = if positive { Tri::Pos } else { Tri::Neg };
            }
            cells.push(PartitionCell {
                cube: pc.cube.clone(),
                cell,
                side: side_of(y, &base_signs),
                subordinate_to: pc.subordinate_to,
            });
        }
        for &k in &splitting {
            base_signs[k] = Tri::Unknown;
        }
    }
    Ok(Refinement {
        partition: CellPartition { cells, ..p.clone() },
        thin,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimEstimate {
    /// Points of `X ∩ H` reached by Newton projection.
    pub points: usize,
    /// Largest `n - rank J` seen at those points.
    pub max_local_dim: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperplaneCheck {
    pub axis: usize,
    #[serde(with = "rational::serde_str")]
    pub value: Rational,
    /// Each generator restricted to the hyperplane.
    pub restrictions: Vec<Polynomial>,
    pub nonzero: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_estimate: Option<DimEstimate>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub grid: Grid,
    pub attempts: u32,
    pub hyperplanes: Vec<HyperplaneCheck>,
    pub passed: bool,
    pub note: String,
}

impl Certificate {
    pub fn first_failure(&self) -> Option<(&HyperplaneCheck, usize)> {
        self.hyperplanes.iter().find(|h| !h.passed).map(|h| {
            let g = h.restrictions.iter().position(Polynomial::is_zero).unwrap_or(0);
            (h, g)
        })
    }
}

fn estimate_section_dim(x: &Variety, region: &RBox, axis: usize, value: &Rational, seed: u64) -> DimEstimate {
    let n = x.ambient_dim();
    let mut eqs: Vec<_> = x.gens().iter().map(Polynomial::to_float).collect();
    let h = &Polynomial::var(n, axis) - &Polynomial::constant(n, value.clone());
    eqs.push(h.to_float());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = 0;
    let mut max_dim = None;
    for _ in 0..24 {
        let start = region.sample_uniform(&mut rng);
        if let Some(p) = numeric::newton_project(&eqs, &start, 1e-11, 60) {
            if !region.contains_f64(&p, 1e-9) {
                continue;
            }
            points += 1;
            let local = n - numeric::rank(&numeric::jacobian(&eqs, &p), EPS_NUM);
            max_dim = Some(max_dim.map_or(local, |m: usize| m.max(local)));
        }
    }
    DimEstimate {
        points,
        max_local_dim: max_dim,
    }
}

/// Checks every grid hyperplane meeting the grid's region against `x`.
///
/// A generator that does not vanish identically on `H` certifies
/// `dim(X ∩ H) < dim X` for a hypersurface. With several generators the
/// check additionally needs the sampled local dimension of `X ∩ H` to stay
/// below the declared dimension of `X`.
pub fn certify_grid(grid: &Grid, x: &Variety, seed: u64) -> Result<Certificate, PartitionError> {
    if x.ambient_dim() != grid.dim() {
        return Err(PartitionError::DimensionMismatch {
            expected: grid.dim(),
            got: x.ambient_dim(),
        });
    }
    let multi = x.gens().len() > 1;
    let mut checks = Vec::new();
    for (k, (axis, value)) in grid.hyperplanes().into_iter().enumerate() {
        let restrictions = x
            .gens()
            .iter()
            .map(|g| g.restrict(axis, &value))
            .collect::<Result<Vec<_>, _>>()?;
        let nonzero = restrictions.iter().all(|r| !r.is_zero());
        let dim_estimate = (multi && nonzero)
            .then(|| estimate_section_dim(x, &grid.region, axis, &value, seed.wrapping_add(k as u64)));
        let dim_ok = dim_estimate
            .as_ref()
            .and_then(|d| d.max_local_dim)
            .is_none_or(|d| d < x.claimed_dim());
        checks.push(HyperplaneCheck {
            axis,
            value,
            restrictions,
            nonzero,
            dim_estimate,
            passed: nonzero && dim_ok,
        });
    }
    let passed = checks.iter().all(|c| c.passed);
    let note = if multi {
        "several generators: nonzero restrictions are exact, the dimension drop is only a sampled estimate".into()
    } else {
        "hypersurface: every restriction is an exact nonzero polynomial".into()
    };
    Ok(Certificate {
        grid: grid.clone(),
        attempts: 1,
        hyperplanes: checks,
        passed,
        note,
    })
}

/// Finds a grid in general position with respect to `x`.
///
/// Attempt 0 is the unperturbed grid of density `q0`. Later attempts draw
/// rational offsets `k/(q·d)` from a seeded sequence with small primes `d`;
/// once half the retries are used up the density is doubled. The returned
/// grid's region is the grid-aligned hull of `region`.
pub fn general_position(
    region: &RBox,
    x: &Variety,
    q0: u32,
    max_retries: u32,
    seed: u64,
) -> Result<(Grid, Certificate), PartitionError> {
    const DENOMS: [i64; 6] = [3, 5, 7, 11, 13, 17];
    if q0 == 0 {
        return Err(PartitionError::InvalidGrid("q must be positive".into()));
    }
    let n = region.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = q0;
    let mut offset = vec![Rational::zero(); n];
    let mut last = None;
    for attempt in 0..=max_retries {
        if attempt > 0 {
            if attempt == max_retries.div_ceil(2) + 1 {
                q *= 2;
            }
            let d = DENOMS[(attempt as usize - 1) % DENOMS.len()];
            offset = (0..n)
                .map(|_| Rational::new(BigInt::from(rng.gen_range(0..d)), BigInt::from(d * q as i64)))
                .collect();
        }
        let hull = Grid::aligned_hull(region, q, &offset);
        let grid = Grid::new(q, offset.clone(), hull)?;
        let mut cert = certify_grid(&grid, x, seed)?;
        cert.attempts = attempt + 1;
        if cert.passed {
            return Ok((grid, cert));
        }
        last = Some(cert);
    }
    let cert = last.expect("at least one attempt");
    let (h, g) = cert
        .first_failure()
        .expect("failed certificate has a failing hyperplane");
    Err(PartitionError::RetriesExhausted {
        attempts: cert.attempts,
        axis: h.axis,
        value: rational::format(&h.value),
        generator: g,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Overlap,
    Uncovered,
    OutsideRegion,
    NotSubordinate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Exact(#[serde(with = "rational::serde_vec")] Vec<Rational>),
    Sampled(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub cells: Vec<usize>,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub cells: usize,
    /// True when every check was exact box arithmetic.
    pub exact: bool,
    pub disjoint_interiors: bool,
    pub exact_union: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subordinate: Option<bool>,
    pub violations: Vec<Violation>,
}

impl PartitionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const SAMPLES_PER_SPLIT_CUBE: usize = 64;

/// Certifies disjoint interiors, exact union and subordination.
///
/// Cubes are checked exactly: all cube faces are cut into elementary
/// boxes and each elementary box inside the region must be covered by
/// exactly one cube. Cells sharing a cube (sign refinements) are checked
/// by sampling inside that cube.
pub fn check_partition(p: &CellPartition) -> PartitionReport {
    let n = p.grid.dim();
    let region = p.region();
    let mut violations = Vec::new();

    let mut groups: HashMap<&RBox, Vec<usize>> = HashMap::new();
    let mut order: Vec<&RBox> = Vec::new();
    for (i, c) in p.cells.iter().enumerate() {
        groups
            .entry(&c.cube)
            .or_insert_with(|| {
                order.push(&c.cube);
                Vec::new()
            })
            .push(i);
    }

    for cube in &order {
        if !region.contains_box(cube) {
            let corner: Vec<Rational> = (0..n)
                .map(|i| {
                    if cube.lo()[i] < region.lo()[i] {
                        cube.lo()[i].clone()
                    } else {
                        cube.hi()[i].clone()
                    }
                })
                .collect();
            violations.push(Violation {
                kind: ViolationKind::OutsideRegion,
                cells: groups[cube].clone(),
                witness: Witness::Exact(corner),
            });
        }
    }

    // Elementary boxes from all breakpoints.
    let cuts: Vec<Vec<Rational>> = (0..n)
        .map(|axis| {
            let mut s: BTreeSet<Rational> = BTreeSet::new();
            s.insert(region.lo()[axis].clone());
            s.insert(region.hi()[axis].clone());
            for c in &order {
                s.insert(c.lo()[axis].clone());
                s.insert(c.hi()[axis].clone());
            }
            s.into_iter().collect()
        })
        .collect();
    let dims: Vec<usize> = cuts.iter().map(|c| c.len() - 1).collect();
    let total: usize = dims.iter().product();
    let mut owner: Vec<Option<usize>> = vec![None; total];
    let mut overlap_seen = vec![false; total];
    for (g, cube) in order.iter().enumerate() {
        let ranges: Vec<(usize, usize)> = (0..n)
            .map(|a| {
                let s = cuts[a].binary_search(&cube.lo()[a]).expect("cut present");
                let e = cuts[a].binary_search(&cube.hi()[a]).expect("cut present");
                (s, e)
            })
            .collect();
        if ranges.iter().any(|(s, e)| s >= e) {
            continue;
        }
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            let flat = idx.iter().zip(&dims).fold(0, |acc, (i, d)| acc * d + i);
            match owner[flat] {
                None => owner[flat] = Some(g),
                Some(first) if !overlap_seen[flat] => {
                    overlap_seen[flat] = true;
                    let mut cells = groups[order[first]].clone();
                    cells.extend(&groups[*cube]);
                    violations.push(Violation {
                        kind: ViolationKind::Overlap,
                        cells,
                        witness: Witness::Exact(elementary_center(&cuts, &idx)),
                    });
                }
                Some(_) => {}
            }
            let mut a = n;
            let mut done = true;
            while a > 0 {
                a -= 1;
                idx[a] += 1;
                if idx[a] < ranges[a].1 {
                    done = false;
                    break;
                }
                idx[a] = ranges[a].0;
            }
            if done {
                break;
            }
        }
    }
    let mut idx = vec![0usize; n];
    for (flat, own) in owner.iter().enumerate().take(total) {
        let mut r = flat;
        for a in (0..n).rev() {
            idx[a] = r % dims[a];
            r /= dims[a];
        }
        let center = elementary_center(&cuts, &idx);
        if own.is_none() && region.contains(&center) {
            violations.push(Violation {
                kind: ViolationKind::Uncovered,
                cells: Vec::new(),
                witness: Witness::Exact(center),
            });
        }
    }

    // Several cells on one cube.
    let mut exact = true;
    for (g, cube) in order.iter().enumerate() {
        let members = &groups[*cube];
        if members.len() < 2 {
            continue;
        }
        if members.iter().any(|&i| p.cells[i].is_cube()) {
            violations.push(Violation {
                kind: ViolationKind::Overlap,
                cells: members.clone(),
                witness: Witness::Exact(cube.center()),
            });
            continue;
        }
        exact = false;
        let systems: Vec<_> = members.iter().map(|&i| p.cells[i].cell.float_system()).collect();
        for x in cube_probes(cube, 0, SAMPLES_PER_SPLIT_CUBE, g as u64) {
            let holding: Vec<usize> = members
                .iter()
                .zip(&systems)
                .filter(|(_, s)| s.contains(&x, EPS_MEM))
                .map(|(&i, _)| i)
                .collect();
            if holding.is_empty() {
                violations.push(Violation {
                    kind: ViolationKind::Uncovered,
                    cells: members.clone(),
                    witness: Witness::Sampled(x),
                });
                break;
            }
            let strict: Vec<usize> = members
                .iter()
                .zip(&systems)
                .filter(|(_, s)| s.contains_strictly(&x, EPS_MEM))
                .map(|(&i, _)| i)
                .collect();
            if strict.len() > 1 {
                violations.push(Violation {
                    kind: ViolationKind::Overlap,
                    cells: strict,
                    witness: Witness::Sampled(x),
                });
                break;
            }
        }
    }

    let subordinate = p.covering.as_ref().map(|cov| {
        let mut ok = true;
        for (i, c) in p.cells.iter().enumerate() {
            let inside = c
                .subordinate_to
                .and_then(|k| cov.get(k))
                .is_some_and(|w| w.open_contains_box(&c.cube));
            if !inside {
                ok = false;
                violations.push(Violation {
                    kind: ViolationKind::NotSubordinate,
                    cells: vec![i],
                    witness: Witness::Exact(c.cube.center()),
                });
            }
        }
        ok
    });

    let disjoint_interiors = !violations.iter().any(|v| v.kind == ViolationKind::Overlap);
    let exact_union = !violations
        .iter()
        .any(|v| matches!(v.kind, ViolationKind::Uncovered | ViolationKind::OutsideRegion));
    PartitionReport {
        cells: p.cells.len(),
        exact,
        disjoint_interiors,
        exact_union,
        subordinate,
        violations,
    }
}

fn elementary_center(cuts: &[Vec<Rational>], idx: &[usize]) -> Vec<Rational> {
    idx.iter()
        .enumerate()
        .map(|(a, &i)| (&cuts[a][i] + &cuts[a][i + 1]) / rational::int(2))
        .collect()
}
