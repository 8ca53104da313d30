//! Semialgebraic sets given by polynomial inequalities: basic closed
//! sets, cells presented as unions of basic closed pieces over a shared
//! pool of boundary functions, and algebraic varieties.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exactpoly::{parse_polynomial, FloatPoly, PolyError, Polynomial, Rational};
use crate::numeric::{EPS_MEM, REJECTION_BUDGET};
use crate::rbox::{BoxError, RBox};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SetError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error("point has {got} coordinates, set lives in dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid set description: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("sampling failed: {accepted} of {requested} points accepted after {attempts} attempts")]
pub struct SampleError {
    pub attempts: usize,
    pub accepted: usize,
    pub requested: usize,
}

/// Sets whose defining system can be evaluated pointwise.
pub trait Membership {
    fn ambient_dim(&self) -> usize;

    /// Exact sign evaluation at a rational point.
    fn contains(&self, point: &[Rational]) -> Result<bool, SetError>;

    /// Compiled double-precision form of the defining system.
    fn float_system(&self) -> FloatSystem;
}

/// `⋃_j {f_i ≥ 0, i ∈ I_j}` compiled to doubles.
#[derive(Clone, Debug)]
pub struct FloatSystem {
    pub pool: Vec<FloatPoly>,
    pub pieces: Vec<Vec<usize>>,
}

impl FloatSystem {
    /// Membership with every inequality relaxed to `f_i ≥ -eps`.
    pub fn contains(&self, x: &[f64], eps: f64) -> bool {
        let vals: Vec<f64> = self.pool.iter().map(|f| f.eval(x)).collect();
        self.pieces.iter().any(|p| p.iter().all(|&i| vals[i] >= -eps))
    }

    /// Whether `x` lies in the open set where some piece holds strictly
    /// with margin `eps`.
    pub fn contains_strictly(&self, x: &[f64], eps: f64) -> bool {
        let vals: Vec<f64> = self.pool.iter().map(|f| f.eval(x)).collect();
        self.pieces.iter().any(|p| p.iter().all(|&i| vals[i] > eps))
    }

    /// Smallest `|f_i(x)|` over the pool.
    pub fn distance_to_pool_zeros(&self, x: &[f64]) -> f64 {
        self.pool.iter().map(|f| f.eval(x).abs()).fold(f64::INFINITY, f64::min)
    }
}

fn check_point(dim: usize, point: &[Rational]) -> Result<(), SetError> {
    if point.len() != dim {
        return Err(SetError::DimensionMismatch {
            expected: dim,
            got: point.len(),
        });
    }
    Ok(())
}

/// `{x : f_i(x) ≥ 0 for all i}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicClosedSet {
    ineqs: Vec<Polynomial>,
    ambient_dim: usize,
}

impl BasicClosedSet {
    pub fn new(ineqs: Vec<Polynomial>, ambient_dim: usize) -> Result<Self, SetError> {
        if ineqs.is_empty() {
            return Err(SetError::Invalid(
                "a basic closed set needs at least one inequality".into(),
            ));
        }
        let ineqs = ineqs
            .into_iter()
            .map(|p| p.with_num_vars(ambient_dim))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BasicClosedSet { ineqs, ambient_dim })
    }

    /// Parses each inequality `f ≥ 0` from an expression in `names`.
    pub fn parse<S: AsRef<str>>(exprs: &[&str], names: &[S]) -> Result<Self, SetError> {
        let ineqs = exprs
            .iter()
            .map(|e| parse_polynomial(e, names))
            .collect::<Result<Vec<_>, _>>()?;
        BasicClosedSet::new(ineqs, names.len())
    }

    pub fn from_box(b: &RBox) -> Self {
        BasicClosedSet {
            ineqs: b.pool(),
            ambient_dim: b.dim(),
        }
    }

    pub fn ineqs(&self) -> &[Polynomial] {
        &self.ineqs
    }
}

impl Membership for BasicClosedSet {
    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    fn contains(&self, point: &[Rational]) -> Result<bool, SetError> {
        check_point(self.ambient_dim, point)?;
        for f in &self.ineqs {
            if f.eval(point)? < Rational::from_integer(0.into()) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn float_system(&self) -> FloatSystem {
        FloatSystem {
            pool: self.ineqs.iter().map(Polynomial::to_float).collect(),
            pieces: vec![(0..self.ineqs.len()).collect()],
        }
    }
}

/// A cell `⋃_j {f_i ≥ 0, i ∈ I_j}` over a shared pool `f_1, …, f_q`,
/// contained in a rational bounding box.
///
/// Pool zeros may meet the interior of the cell; nothing here assumes
/// they only cut out the boundary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SetDescription", into = "SetDescription")]
pub struct SemialgebraicCell {
    vars: Vec<String>,
    pool: Vec<Polynomial>,
    pieces: Vec<Vec<usize>>,
    bbox: RBox,
}

pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

impl SemialgebraicCell {
    pub fn new(
        vars: Vec<String>,
        pool: Vec<Polynomial>,
        pieces: Vec<Vec<usize>>,
        bbox: RBox,
    ) -> Result<Self, SetError> {
        let n = vars.len();
        if pool.is_empty() {
            return Err(SetError::Invalid("pool is empty".into()));
        }
        if pieces.is_empty() {
            return Err(SetError::Invalid("cell has no pieces".into()));
        }
        for (j, piece) in pieces.iter().enumerate() {
            if piece.is_empty() {
                return Err(SetError::Invalid(format!("piece {j} is empty")));
            }
            if let Some(&bad) = piece.iter().find(|&&i| i >= pool.len()) {
                return Err(SetError::Invalid(format!(
                    "piece {j} refers to pool index {bad}, pool has {} entries",
                    pool.len()
                )));
            }
        }
        if bbox.dim() != n {
            return Err(SetError::DimensionMismatch {
                expected: n,
                got: bbox.dim(),
            });
        }
        for (i, a) in vars.iter().enumerate() {
            if vars[..i].contains(a) {
                return Err(SetError::Invalid(format!("variable `{a}` is repeated")));
            }
        }
        let pool = pool
            .into_iter()
            .map(|p| p.with_num_vars(n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SemialgebraicCell {
            vars,
            pool,
            pieces,
            bbox,
        })
    }

    /// A single basic closed piece `{f ≥ 0 for f in ineqs}`.
    pub fn basic(ineqs: Vec<Polynomial>, bbox: RBox) -> Result<Self, SetError> {
        let pieces = vec![(0..ineqs.len()).collect()];
        SemialgebraicCell::new(default_names(bbox.dim()), ineqs, pieces, bbox)
    }

    /// The closed box as a cell with its `2n` affine boundary functions.
    pub fn from_box(b: &RBox) -> Self {
        SemialgebraicCell::basic(b.pool(), b.clone()).expect("box pool is well-formed")
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn with_vars(mut self, vars: Vec<String>) -> Result<Self, SetError> {
        if vars.len() != self.vars.len() {
            return Err(SetError::DimensionMismatch {
                expected: self.vars.len(),
                got: vars.len(),
            });
        }
        self.vars = vars;
        Ok(self)
    }

    pub fn pool(&self) -> &[Polynomial] {
        &self.pool
    }

    pub fn pieces(&self) -> &[Vec<usize>] {
        &self.pieces
    }

    pub fn bbox(&self) -> &RBox {
        &self.bbox
    }

    /// The boundary functions `f_i`, in pool order.
    pub fn boundary_hypersurfaces(&self) -> &[Polynomial] {
        &self.pool
    }

    /// Piece `j` as a basic closed set.
    pub fn piece(&self, j: usize) -> BasicClosedSet {
        BasicClosedSet {
            ineqs: self.pieces[j].iter().map(|&i| self.pool[i].clone()).collect(),
            ambient_dim: self.vars.len(),
        }
    }

    /// Intersects every piece with `{g ≥ 0}`, appending `g` to the pool.
    pub fn intersect_with(&self, g: Polynomial) -> Result<Self, SetError> {
        let mut pool = self.pool.clone();
        pool.push(g);
        let k = pool.len() - 1;
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.push(k);
                p
            })
            .collect();
        SemialgebraicCell::new(self.vars.clone(), pool, pieces, self.bbox.clone())
    }

    /// Sampled check that boundary points of the cell lie on some pool
    /// zero set. Pairs of samples on opposite sides of the boundary are
    /// bisected down to the boundary; returns the worst `min_i |f_i|`
    /// seen and the number of boundary points examined.
    pub fn check_boundary_on_pool(&self, pairs: usize, seed: u64) -> (f64, usize) {
        let sys = self.float_system();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut found = 0;
        for _ in 0..pairs {
            let a = self.bbox.sample_uniform(&mut rng);
            let b = self.bbox.sample_uniform(&mut rng);
            let (ia, ib) = (sys.contains(&a, 0.0), sys.contains(&b, 0.0));
            if ia == ib {
                continue;
            }
            let (mut inside, mut outside) = if ia { (a, b) } else { (b, a) };
            for _ in 0..80 {
                let mid: Vec<f64> = inside.iter().zip(&outside).map(|(p, q)| 0.5 * (p + q)).collect();
                if sys.contains(&mid, 0.0) {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            worst = worst.max(sys.distance_to_pool_zeros(&inside));
            found += 1;
        }
        (worst, found)
    }
}

impl Membership for SemialgebraicCell {
    fn ambient_dim(&self) -> usize {
        self.vars.len()
    }

    fn contains(&self, point: &[Rational]) -> Result<bool, SetError> {
        check_point(self.vars.len(), point)?;
        let zero = Rational::from_integer(0.into());
        let mut nonneg = Vec::with_capacity(self.pool.len());
        for f in &self.pool {
            nonneg.push(f.eval(point)? >= zero);
        }
        Ok(self.pieces.iter().any(|p| p.iter().all(|&i| nonneg[i])))
    }

    fn float_system(&self) -> FloatSystem {
        FloatSystem {
            pool: self.pool.iter().map(Polynomial::to_float).collect(),
            pieces: self.pieces.clone(),
        }
    }
}

/// Polynomial entry of a description file: a term list or an infix
/// expression in the declared variables.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolySource {
    Terms(Polynomial),
    Expr(String),
}

impl PolySource {
    pub fn resolve(self, vars: &[String]) -> Result<Polynomial, SetError> {
        match self {
            PolySource::Terms(p) => Ok(p.with_num_vars(vars.len())?),
            PolySource::Expr(s) => Ok(parse_polynomial(&s, vars)?),
        }
    }
}

/// Wire format of a [`SemialgebraicCell`]:
/// `{"vars": [..], "pool": [..], "pieces": [[..]], "bbox": [[lo, hi], ..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetDescription {
    pub vars: Vec<String>,
    pub pool: Vec<PolySource>,
    pub pieces: Vec<Vec<usize>>,
    pub bbox: RBox,
}

impl TryFrom<SetDescription> for SemialgebraicCell {
    type Error = SetError;

    fn try_from(d: SetDescription) -> Result<Self, SetError> {
        let pool = d
            .pool
            .into_iter()
            .map(|p| p.resolve(&d.vars))
            .collect::<Result<Vec<_>, _>>()?;
        SemialgebraicCell::new(d.vars, pool, d.pieces, d.bbox)
    }
}

impl From<SemialgebraicCell> for SetDescription {
    fn from(c: SemialgebraicCell) -> Self {
        SetDescription {
            vars: c.vars,
            pool: c.pool.into_iter().map(PolySource::Terms).collect(),
            pieces: c.pieces,
            bbox: c.bbox,
        }
    }
}

/// An algebraic set `{g = 0 for g in gens}` with a declared dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VarietyDescription", into = "VarietyDescription")]
pub struct Variety {
    vars: Vec<String>,
    gens: Vec<Polynomial>,
    claimed_dim: usize,
}

impl Variety {
    pub fn new(vars: Vec<String>, gens: Vec<Polynomial>, claimed_dim: usize) -> Result<Self, SetError> {
        if gens.is_empty() {
            return Err(SetError::Invalid("a variety needs at least one generator".into()));
        }
        if claimed_dim >= vars.len() {
            return Err(SetError::Invalid(format!(
                "claimed dimension {claimed_dim} must be below the ambient dimension {}",
                vars.len()
            )));
        }
        let gens = gens
            .into_iter()
            .map(|g| g.with_num_vars(vars.len()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Variety {
            vars,
            gens,
            claimed_dim,
        })
    }

    /// Hypersurface `{g = 0}` of dimension `n - 1`.
    pub fn hypersurface<S: AsRef<str>>(expr: &str, names: &[S]) -> Result<Self, SetError> {
        let g = parse_polynomial(expr, names)?;
        let vars: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let d = vars.len().saturating_sub(1);
        Variety::new(vars, vec![g], d)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn ambient_dim(&self) -> usize {
        self.vars.len()
    }

    pub fn gens(&self) -> &[Polynomial] {
        &self.gens
    }

    pub fn claimed_dim(&self) -> usize {
        self.claimed_dim
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VarietyDescription {
    pub vars: Vec<String>,
    pub gens: Vec<PolySource>,
    pub claimed_dim: usize,
}

impl TryFrom<VarietyDescription> for Variety {
    type Error = SetError;

    fn try_from(d: VarietyDescription) -> Result<Self, SetError> {
        let gens = d
            .gens
            .into_iter()
            .map(|g| g.resolve(&d.vars))
            .collect::<Result<Vec<_>, _>>()?;
        Variety::new(d.vars, gens, d.claimed_dim)
    }
}

impl From<Variety> for VarietyDescription {
    fn from(v: Variety) -> Self {
        VarietyDescription {
            vars: v.vars,
            gens: v.gens.into_iter().map(PolySource::Terms).collect(),
            claimed_dim: v.claimed_dim,
        }
    }
}

/// Rejection sampling from `bbox`. Every returned point satisfies the
/// defining system exactly in floating point, hence also the relaxed
/// re-check at tolerance [`EPS_MEM`]. Deterministic in `seed`.
pub fn sample<M: Membership + ?Sized>(
    set: &M,
    bbox: &RBox,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, SampleError> {
    sample_with_budget(set, bbox, count, seed, REJECTION_BUDGET)
}

pub fn sample_with_budget<M: Membership + ?Sized>(
    set: &M,
    bbox: &RBox,
    count: usize,
    seed: u64,
    budget: usize,
) -> Result<Vec<Vec<f64>>, SampleError> {
    let sys = set.float_system();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        if attempts >= budget {
            return Err(SampleError {
                attempts,
                accepted: out.len(),
                requested: count,
            });
        }
        attempts += 1;
        let x = bbox.sample_uniform(&mut rng);
        if sys.contains(&x, 0.0) {
            debug_assert!(sys.contains(&x, EPS_MEM));
            out.push(x);
        }
    }
    Ok(out)
}

impl SemialgebraicCell {
    /// Rejection sampling from the cell's own bounding box.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, SampleError> {
        sample(self, &self.bbox, count, seed)
    }
}
