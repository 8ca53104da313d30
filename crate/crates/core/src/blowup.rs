//! Blowing up affine charts along coordinate subspaces.
//!
//! Blowing up `{x_j = a_j : j ∈ C}` produces one chart per pivot `i ∈ C`
//! with coordinates `x'_i = x_i − a_i`, `x'_j = (x_j − a_j)/(x_i − a_i)`
//! for the other `j ∈ C`, and the remaining coordinates unchanged. In the
//! chart the exceptional divisor is `{x'_i = 0}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exactpoly::rational::{self, Rational};
use crate::exactpoly::{PolyError, Polynomial};
use crate::numeric::EPS_MEM;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BlowupError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("a center needs at least two coordinates, got {0}")]
    CenterTooSmall(usize),
    #[error("center index {index} out of range for a chart of dimension {dim}")]
    CenterIndex { index: usize, dim: usize },
    #[error("center index {0} is repeated")]
    RepeatedIndex(usize),
    #[error("center point has {got} coordinates, chart has dimension {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("expected {expected} variable names, got {got}")]
    NameCount { expected: usize, got: usize },
    #[error("no chart with index {0}")]
    NoSuchChart(usize),
    #[error("chart {0} has already been blown up")]
    AlreadyBlownUp(usize),
    #[error("polynomial has {got} variables, chart has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot take the strict transform of the zero polynomial")]
    ZeroPolynomial,
}

/// How a chart was produced from its parent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartOrigin {
    pub parent: usize,
    pub center: Vec<usize>,
    pub pivot: usize,
    #[serde(with = "rational::serde_vec")]
    pub at: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart {
    pub name: String,
    pub vars: Vec<String>,
    /// Parent coordinates as polynomials in this chart's variables.
    pub map_to_parent: Vec<Polynomial>,
    /// Base coordinates as polynomials in this chart's variables.
    pub map_to_base: Vec<Polynomial>,
    /// Local equations of the exceptional components, newest first.
    pub exceptional: Vec<Polynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<ChartOrigin>,
}

impl Chart {
    /// `R^n` with the identity map.
    pub fn root<S: AsRef<str>>(name: &str, vars: &[S]) -> Chart {
        let n = vars.len();
        Chart {
            name: name.into(),
            vars: vars.iter().map(|s| s.as_ref().to_string()).collect(),
            map_to_parent: Polynomial::vars(n),
            map_to_base: Polynomial::vars(n),
            exceptional: Vec::new(),
            origin: None,
        }
    }

    /// A root chart carrying an existing exceptional divisor.
    pub fn root_with_exceptional<S: AsRef<str>>(
        name: &str,
        vars: &[S],
        exceptional: Vec<Polynomial>,
    ) -> Result<Chart, BlowupError> {
        let mut c = Chart::root(name, vars);
        for e in &exceptional {
            c.check_dim(e)?;
        }
        c.exceptional = exceptional;
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    fn check_dim(&self, h: &Polynomial) -> Result<(), BlowupError> {
        if h.num_vars() != self.dim() {
            return Err(BlowupError::DimensionMismatch {
                expected: self.dim(),
                got: h.num_vars(),
            });
        }
        Ok(())
    }

    /// Chart coordinates of a parent point, when the pivot denominator is
    /// farther than `ε_mem` from zero.
    pub fn from_parent(&self, p: &[f64]) -> Option<Vec<f64>> {
        let Some(o) = &self.origin else {
            return Some(p.to_vec());
        };
        let d = p[o.pivot] - rational::to_f64(&o.at[o.pivot]);
        if d.abs() <= EPS_MEM {
            return None;
        }
        let mut out = p.to_vec();
        out[o.pivot] = d;
        for &j in &o.center {
            if j != o.pivot {
                out[j] = (p[j] - rational::to_f64(&o.at[j])) / d;
            }
        }
        Some(out)
    }

    /// `|x_i − a_i|` for the pivot `i`; charts with larger values give
    /// better-conditioned lifts.
    pub fn denominator(&self, p: &[f64]) -> f64 {
        match &self.origin {
            Some(o) => (p[o.pivot] - rational::to_f64(&o.at[o.pivot])).abs(),
            None => f64::INFINITY,
        }
    }

    pub fn eval_to_parent(&self, u: &[f64]) -> Vec<f64> {
        self.map_to_parent.iter().map(|m| m.eval_f64(u)).collect()
    }

    pub fn eval_to_base(&self, u: &[f64]) -> Vec<f64> {
        self.map_to_base.iter().map(|m| m.eval_f64(u)).collect()
    }

    /// Determinant of the Jacobian of `map_to_base`.
    pub fn jacobian_determinant(&self) -> Polynomial {
        let rows: Vec<Vec<Polynomial>> = self.map_to_base.iter().map(Polynomial::gradient).collect();
        determinant(&rows, self.dim())
    }

    /// Multiplicity of each exceptional component in the Jacobian
    /// determinant of `map_to_base`.
    pub fn jacobian_multiplicities(&self) -> Vec<u32> {
        let det = self.jacobian_determinant();
        self.exceptional
            .iter()
            .map(|e| {
                if det.is_zero() {
                    u32::MAX
                } else {
                    det.divide_out(e).map(|r| r.0).unwrap_or(0)
                }
            })
            .collect()
    }
}

/// Cofactor expansion along the first row, skipping zero entries.
fn determinant(rows: &[Vec<Polynomial>], nvars: usize) -> Polynomial {
    fn rec(rows: &[Vec<Polynomial>], cols: &[usize], nvars: usize) -> Polynomial {
        if cols.is_empty() {
            return Polynomial::one(nvars);
        }
        let (first, rest) = rows.split_first().expect("square matrix");
        let mut acc = Polynomial::zero(nvars);
        for (k, &c) in cols.iter().enumerate() {
            if first[c].is_zero() {
                continue;
            }
            let minor_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let term = &first[c] * &rec(rest, &minor_cols, nvars);
            acc = if k % 2 == 0 { &acc + &term } else { &acc - &term };
        }
        acc
    }
    let cols: Vec<usize> = (0..rows.len()).collect();
    rec(rows, &cols, nvars)
}

fn validate_center(dim: usize, center: &[usize]) -> Result<(), BlowupError> {
    if center.len() < 2 {
        return Err(BlowupError::CenterTooSmall(center.len()));
    }
    for (k, &i) in center.iter().enumerate() {
        if i >= dim {
            return Err(BlowupError::CenterIndex { index: i, dim });
        }
        if center[..k].contains(&i) {
            return Err(BlowupError::RepeatedIndex(i));
        }
    }
    Ok(())
}

/// Blows up `chart` along `{x_j = at_j : j ∈ center}` (`at` defaults to
/// the origin). Returns one chart per center index, in center order.
///
/// Each child's exceptional list is its new component `x'_i` followed by
/// the non-constant strict transforms of the parent's components.
pub fn blowup_center(
    chart: &Chart,
    parent_index: usize,
    center: &[usize],
    at: Option<&[Rational]>,
    names: Option<&[String]>,
) -> Result<Vec<Chart>, BlowupError> {
    let n = chart.dim();
    validate_center(n, center)?;
    let at: Vec<Rational> = match at {
        Some(a) if a.len() != n => {
            return Err(BlowupError::PointDimension {
                expected: n,
                got: a.len(),
            })
        }
        Some(a) => a.to_vec(),
        None => vec![rational::int(0); n],
    };
    let vars = match names {
        Some(v) if v.len() != n => {
            return Err(BlowupError::NameCount {
                expected: n,
                got: v.len(),
            })
        }
        Some(v) => v.to_vec(),
        None => chart.vars.clone(),
    };
    let mut out = Vec::with_capacity(center.len());
    for &pivot in center {
        let xi = Polynomial::var(n, pivot);
        let map_to_parent: Vec<Polynomial> = (0..n)
            .map(|j| {
                let shift = Polynomial::constant(n, at[j].clone());
                if j == pivot {
                    &xi + &shift
                } else if center.contains(&j) {
                    &(&Polynomial::var(n, j) * &xi) + &shift
                } else {
                    Polynomial::var(n, j)
                }
            })
            .collect();
        let map_to_base = chart
            .map_to_base
            .iter()
            .map(|m| m.substitute(&map_to_parent))
            .collect::<Result<Vec<_>, _>>()?;
        let mut exceptional = vec![xi.clone()];
        for e in &chart.exceptional {
            let (_, rest) = e.substitute(&map_to_parent)?.divide_out(&xi)?;
            if !rest.is_constant() {
                exceptional.push(rest);
            }
        }
        out.push(Chart {
            name: format!("{}.{}", chart.name, vars[pivot]),
            vars: vars.clone(),
            map_to_parent,
            map_to_base,
            exceptional,
            origin: Some(ChartOrigin {
                parent: parent_index,
                center: center.to_vec(),
                pivot,
                at: at.clone(),
            }),
        });
    }
    Ok(out)
}

/// `h ∘ map_to_parent`.
pub fn total_transform(h: &Polynomial, chart: &Chart) -> Result<Polynomial, BlowupError> {
    chart.check_dim(h)?;
    Ok(h.substitute(&chart.map_to_parent)?)
}

/// `h ∘ map_to_base`.
pub fn total_transform_from_base(h: &Polynomial, chart: &Chart) -> Result<Polynomial, BlowupError> {
    chart.check_dim(h)?;
    Ok(h.substitute(&chart.map_to_base)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrictTransform {
    pub total: Polynomial,
    pub strict: Polynomial,
    /// Power of each of the chart's exceptional components divided out.
    pub multiplicities: Vec<u32>,
}

impl StrictTransform {
    /// `total = strict · ∏ E_k^{m_k}`, checked by exact expansion.
    pub fn check_factorization(&self, chart: &Chart) -> bool {
        let mut prod = self.strict.clone();
        for (e, &m) in chart.exceptional.iter().zip(&self.multiplicities) {
            prod = &prod * &e.pow(m);
        }
        prod.equal_expanded(&self.total)
    }
}

fn divide_exceptionals(
    total: Polynomial,
    exceptional: &[Polynomial],
    upto: usize,
) -> Result<StrictTransform, BlowupError> {
    let mut strict = total.clone();
    let mut multiplicities = vec![0; exceptional.len()];
    for (k, e) in exceptional.iter().enumerate().take(upto) {
        let (m, rest) = strict.divide_out(e)?;
        multiplicities[k] = m;
        strict = rest;
    }
    Ok(StrictTransform {
        total,
        strict,
        multiplicities,
    })
}

/// Strict transform of `{h = 0}` from the parent chart: the total
/// transform with the new exceptional component divided out at maximal
/// multiplicity.
pub fn strict_transform_hypersurface(h: &Polynomial, chart: &Chart) -> Result<StrictTransform, BlowupError> {
    if h.is_zero() {
        return Err(BlowupError::ZeroPolynomial);
    }
    let total = total_transform(h, chart)?;
    let upto = usize::from(chart.origin.is_some());
    divide_exceptionals(total, &chart.exceptional, upto)
}

/// Strict transform of `{h = 0}` from the base: the pullback along the
/// whole sequence with every exceptional component divided out.
pub fn strict_transform_from_base(h: &Polynomial, chart: &Chart) -> Result<StrictTransform, BlowupError> {
    if h.is_zero() {
        return Err(BlowupError::ZeroPolynomial);
    }
    let total = total_transform_from_base(h, chart)?;
    divide_exceptionals(total, &chart.exceptional, chart.exceptional.len())
}

/// `h` with `x_i` set to `value`; the variable is kept.
pub fn restrict(h: &Polynomial, i: usize, value: &Rational) -> Result<Polynomial, BlowupError> {
    Ok(h.restrict(i, value)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowupStep {
    pub parent: usize,
    pub center: Vec<usize>,
    #[serde(with = "rational::serde_vec")]
    pub at: Vec<Rational>,
    pub children: Vec<usize>,
}

/// A tree of charts: chart 0 is the base, and every step blows up one
/// existing chart once.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowupSequence {
    pub charts: Vec<Chart>,
    pub steps: Vec<BlowupStep>,
}

impl BlowupSequence {
    pub fn new(base: Chart) -> Self {
        BlowupSequence {
            charts: vec![base],
            steps: Vec::new(),
        }
    }

    pub fn base(&self) -> &Chart {
        &self.charts[0]
    }

    pub fn chart(&self, i: usize) -> Result<&Chart, BlowupError> {
        self.charts.get(i).ok_or(BlowupError::NoSuchChart(i))
    }

    /// Blows up chart `parent`; returns the indices of the new charts.
    pub fn blow_up(
        &mut self,
        parent: usize,
        center: &[usize],
        at: Option<&[Rational]>,
        names: Option<&[String]>,
    ) -> Result<Vec<usize>, BlowupError> {
        let chart = self.chart(parent)?;
        if self.step_of(parent).is_some() {
            return Err(BlowupError::AlreadyBlownUp(parent));
        }
        let children = blowup_center(chart, parent, center, at, names)?;
        let at = children[0].origin.as_ref().expect("child has an origin").at.clone();
        let first = self.charts.len();
        let ids: Vec<usize> = (first..first + children.len()).collect();
        self.charts.extend(children);
        self.steps.push(BlowupStep {
            parent,
            center: center.to_vec(),
            at,
            children: ids.clone(),
        });
        Ok(ids)
    }

    fn step_of(&self, chart: usize) -> Option<&BlowupStep> {
        self.steps.iter().find(|s| s.parent == chart)
    }

    /// Charts that have not been blown up.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.charts.len()).filter(|&i| self.step_of(i).is_none()).collect()
    }

    /// Whether every chart's `map_to_base` equals its parent's
    /// `map_to_base` composed with `map_to_parent`.
    pub fn check_composition(&self) -> Result<bool, BlowupError> {
        for c in &self.charts {
            let Some(o) = &c.origin else { continue };
            let parent = self.chart(o.parent)?;
            for (k, m) in parent.map_to_base.iter().enumerate() {
                if !m.substitute(&c.map_to_parent)?.equal_expanded(&c.map_to_base[k]) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Sampled overlap check between sibling charts: a point of chart A
    /// mapped to the parent and read back in chart B must map to the
    /// same parent point. Returns the worst discrepancy and the number of
    /// comparisons made.
    pub fn check_gluing(&self, samples: usize, seed: u64) -> (f64, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for step in &self.steps {
            for &a in &step.children {
                for &b in &step.children {
                    if a == b {
                        continue;
                    }
                    let (ca, cb) = (&self.charts[a], &self.charts[b]);
                    for _ in 0..samples {
                        let u: Vec<f64> = (0..ca.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                        let p = ca.eval_to_parent(&u);
                        if cb.denominator(&p) < 1e-3 {
                            continue;
                        }
                        let Some(v) = cb.from_parent(&p) else { continue };
                        let back = cb.eval_to_parent(&v);
                        let base_a = ca.eval_to_base(&u);
                        let base_b = cb.eval_to_base(&v);
                        let scale = 1.0 + p.iter().chain(&base_a).map(|x| x.abs()).fold(0.0, f64::max);
                        let err = back
                            .iter()
                            .zip(&p)
                            .chain(base_a.iter().zip(&base_b))
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0, f64::max)
                            / scale;
                        worst = worst.max(err);
                        count += 1;
                    }
                }
            }
        }
        (worst, count)
    }

    /// Lifts sampled points of a curve in base coordinates through the
    /// tree, choosing at each step the child with the largest pivot
    /// denominator.
    pub fn lift_curve<F>(&self, curve: F, ts: &[f64]) -> CurveLift
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let samples = ts
            .iter()
            .map(|&t| {
                let base_point = curve(t);
                let mut chart = 0;
                let mut coords = base_point.clone();
                while let Some(step) = self.step_of(chart) {
                    let best = step
                        .children
                        .iter()
                        .copied()
                        .max_by(|&a, &b| {
                            self.charts[a]
                                .denominator(&coords)
                                .total_cmp(&self.charts[b].denominator(&coords))
                        })
                        .expect("step has children");
                    match self.charts[best].from_parent(&coords) {
                        Some(u) => {
                            coords = u;
                            chart = best;
                        }
                        None => {
                            return LiftedSample {
                                t,
                                base_point,
                                lift: None,
                                unliftable_at: Some(step.parent),
                            }
                        }
                    }
                }
                let on_exceptional = self.charts[chart]
                    .exceptional
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.eval_f64(&coords).abs() <= EPS_MEM)
                    .map(|(k, _)| k)
                    .collect();
                LiftedSample {
                    t,
                    base_point,
                    lift: Some(Lift {
                        chart,
                        coords,
                        on_exceptional,
                    }),
                    unliftable_at: None,
                }
            })
            .collect();
        CurveLift { samples }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lift {
    pub chart: usize,
    pub coords: Vec<f64>,
    /// Indices into the chart's exceptional list vanishing at the lift.
    pub on_exceptional: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedSample {
    pub t: f64,
    pub base_point: Vec<f64>,
    pub lift: Option<Lift>,
    /// Chart whose center contains the sample, when lifting failed.
    pub unliftable_at: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveLift {
    pub samples: Vec<LiftedSample>,
}

impl CurveLift {
    pub fn unliftable(&self) -> usize {
        self.samples.iter().filter(|s| s.lift.is_none()).count()
    }

    /// Largest `|map_to_base(lift) − γ(t)|` over lifted samples.
    pub fn max_residual(&self, seq: &BlowupSequence) -> f64 {
        self.samples
            .iter()
            .filter_map(|s| {
                let l = s.lift.as_ref()?;
                let back = seq.charts[l.chart].eval_to_base(&l.coords);
                Some(
                    back.iter()
                        .zip(&s.base_point)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max),
                )
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::parse_polynomial;
    use crate::exactpoly::rational::int;

    fn p(s: &str, names: &[&str]) -> Polynomial {
        parse_polynomial(s, names).unwrap()
    }

    #[test]
    fn origin_blowup_z_chart() {
        let names = ["X", "Y", "Z"];
        let base = Chart::root("R3", &names);
        let charts = blowup_center(&base, 0, &[0, 1, 2], None, None).unwrap();
        let z = &charts[2];
        assert_eq!(
            z.map_to_parent,
            vec![p("X*Z", &names), p("Y*Z", &names), p("Z", &names)]
        );
        assert_eq!(z.exceptional, vec![p("Z", &names)]);
    }

    #[test]
    fn plane_x_chart() {
        let names = ["x", "y"];
        let charts = blowup_center(&Chart::root("R2", &names), 0, &[0, 1], None, None).unwrap();
        assert_eq!(charts[0].map_to_parent, vec![p("x", &names), p("x*y", &names)]);
        assert_eq!(charts[0].exceptional, vec![p("x", &names)]);
        assert_eq!(charts[0].jacobian_determinant(), p("x", &names));
    }

    #[test]
    fn hypersurface_center_rejected() {
        let base = Chart::root("R2", &["x", "y"]);
        assert_eq!(
            blowup_center(&base, 0, &[1], None, None),
            Err(BlowupError::CenterTooSmall(1))
        );
        assert_eq!(
            blowup_center(&base, 0, &[0, 0], None, None),
            Err(BlowupError::RepeatedIndex(0))
        );
    }

    #[test]
    fn two_step_composition() {
        let names = ["x", "y", "z", "w"];
        let mut seq = BlowupSequence::new(Chart::root("R4", &names));
        let first = seq.blow_up(0, &[0, 1, 2, 3], None, None).unwrap();
        let w_chart = first[3];
        assert_eq!(seq.charts[w_chart].exceptional, vec![p("w", &names)]);
        let second = seq.blow_up(w_chart, &[2, 3], None, None).unwrap();
        let u2 = &seq.charts[second[1]];
        assert_eq!(
            u2.map_to_parent,
            vec![p("x", &names), p("y", &names), p("z*w", &names), p("w", &names)]
        );
        assert_eq!(
            u2.map_to_base,
            vec![p("x*w", &names), p("y*w", &names), p("z*w^2", &names), p("w", &names)]
        );
        assert_eq!(u2.exceptional, vec![p("w", &names)]);
        // In the z-chart the old exceptional {w = 0} pulls back to z·w.
        let u2z = &seq.charts[second[0]];
        assert_eq!(u2z.exceptional, vec![p("z", &names), p("w", &names)]);
        assert!(seq.check_composition().unwrap());
        assert_eq!(u2.jacobian_determinant(), p("w^4", &names));
        assert!(u2.jacobian_multiplicities().iter().all(|&m| m >= 1));
        assert!(u2z.jacobian_multiplicities().iter().all(|&m| m >= 1));
        let (err, count) = seq.check_gluing(20, 1);
        assert!(count > 0 && err < 1e-9, "{err} {count}");
        assert_eq!(
            seq.blow_up(w_chart, &[0, 1], None, None),
            Err(BlowupError::AlreadyBlownUp(w_chart))
        );
    }

    #[test]
    fn cusp_surface_strict_transform() {
        let base_names = ["x", "w", "z"];
        let chart_names: Vec<String> = ["u", "w", "z"].iter().map(|s| s.to_string()).collect();
        let h = p("z^4 - x^3 - w*x*z^2", &base_names);
        let charts = blowup_center(&Chart::root("R3", &base_names), 0, &[0, 2], None, Some(&chart_names)).unwrap();
        let zc = &charts[1];
        let st = strict_transform_hypersurface(&h, zc).unwrap();
        assert_eq!(st.strict, parse_polynomial("z - u^3 - u*w", &chart_names).unwrap());
        assert_eq!(st.multiplicities, vec![3]);
        assert!(st.check_factorization(zc));
    }

    #[test]
    fn paraboloid_strict_transform() {
        // Oracle: (x z)^2 + (y z)^2 - z = z (z (x^2 + y^2) - 1) by hand.
        let names = ["x", "y", "z"];
        let charts = blowup_center(&Chart::root("R3", &names), 0, &[0, 1, 2], None, None).unwrap();
        let st = strict_transform_hypersurface(&p("x^2 + y^2 - z", &names), &charts[2]).unwrap();
        assert_eq!(st.strict, p("z*x^2 + z*y^2 - 1", &names));
        assert_eq!(st.multiplicities, vec![1]);
    }

    #[test]
    fn linear_form_fixed_by_chart() {
        let names = ["x", "y", "z"];
        let charts = blowup_center(&Chart::root("R3", &names), 0, &[0, 1], None, None).unwrap();
        let h = p("z + 1", &names);
        assert_eq!(total_transform(&h, &charts[0]).unwrap(), h);
        assert_eq!(
            restrict(&p("x + y", &["x", "y"]), 1, &int(0)).unwrap(),
            p("x", &["x", "y"])
        );
        assert_eq!(restrict(&p("3", &["x", "y"]), 0, &int(7)).unwrap(), p("3", &["x", "y"]));
    }

    #[test]
    fn zero_polynomial_has_no_strict_transform() {
        let charts = blowup_center(&Chart::root("R2", &["x", "y"]), 0, &[0, 1], None, None).unwrap();
        assert_eq!(
            strict_transform_hypersurface(&Polynomial::zero(2), &charts[0]),
            Err(BlowupError::ZeroPolynomial)
        );
    }

    #[test]
    fn parabola_lifts_through_x_chart() {
        let mut seq = BlowupSequence::new(Chart::root("R3", &["x", "y", "z"]));
        seq.blow_up(0, &[0, 1, 2], None, None).unwrap();
        let ts: Vec<f64> = (1..20).map(|k| 0.05 * k as f64).collect();
        let lift = seq.lift_curve(|t| vec![t, t * t, 0.0], &ts);
        assert_eq!(lift.unliftable(), 0);
        for s in &lift.samples {
            let l = s.lift.as_ref().unwrap();
            assert_eq!(l.chart, 1);
            assert!((l.coords[0] - s.t).abs() < 1e-15);
            assert!((l.coords[1] - s.t).abs() < 1e-12);
            assert_eq!(l.coords[2], 0.0);
        }
        assert!(lift.max_residual(&seq) < 1e-12);
    }

    #[test]
    fn curve_in_center_is_unliftable() {
        let mut seq = BlowupSequence::new(Chart::root("R3", &["x", "y", "z"]));
        seq.blow_up(0, &[0, 1], None, None).unwrap();
        let lift = seq.lift_curve(|t| vec![0.0, 0.0, t], &[0.1, 0.5, 1.0]);
        assert_eq!(lift.unliftable(), 3);
        assert!(lift.samples.iter().all(|s| s.unliftable_at == Some(0)));
    }

    #[test]
    fn translated_center_away_from_curve_is_identity_like() {
        let mut seq = BlowupSequence::new(Chart::root("R3", &["x", "y", "z"]));
        let at = [int(5), int(5), int(5)];
        seq.blow_up(0, &[0, 1, 2], Some(&at), None).unwrap();
        let lift = seq.lift_curve(
            |t| vec![t, (1.0 / (0.1 * t - 1.0 / std::f64::consts::PI)).sin(), 0.0],
            &[-1.0, 0.0, 1.0],
        );
        assert_eq!(lift.unliftable(), 0);
        assert!(lift.max_residual(&seq) < 1e-12);
        assert!(lift
            .samples
            .iter()
            .all(|s| s.lift.as_ref().unwrap().on_exceptional.is_empty()));
    }

    #[test]
    fn sequence_roundtrips_json() {
        let mut seq = BlowupSequence::new(Chart::root("R2", &["x", "y"]));
        seq.blow_up(0, &[0, 1], Some(&[int(1), int(0)]), None).unwrap();
        let json = serde_json::to_string(&seq).unwrap();
        let back: BlowupSequence = serde_json::from_str(&json).unwrap();
        assert_eq!(back, seq);
    }
}
