//! Axis-aligned boxes with rational corners.

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::exactpoly::rational::{self, Rational};
use crate::exactpoly::Polynomial;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RBox {
    lo: Vec<Rational>,
    hi: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoxError {
    #[error("box corners have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("box edge {axis} is inverted: lo {lo} > hi {hi}")]
    Inverted { axis: usize, lo: String, hi: String },
}

impl RBox {
    pub fn new(lo: Vec<Rational>, hi: Vec<Rational>) -> Result<Self, BoxError> {
        if lo.len() != hi.len() {
            return Err(BoxError::DimensionMismatch(lo.len(), hi.len()));
        }
        for (axis, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if a > b {
                return Err(BoxError::Inverted {
                    axis,
                    lo: rational::format(a),
                    hi: rational::format(b),
                });
            }
        }
        Ok(RBox { lo, hi })
    }

    /// `[lo, hi]^n`.
    pub fn cube(n: usize, lo: Rational, hi: Rational) -> Result<Self, BoxError> {
        RBox::new(vec![lo; n], vec![hi; n])
    }

    pub fn from_ints(bounds: &[(i64, i64)]) -> Self {
        RBox::new(
            bounds.iter().map(|b| rational::int(b.0)).collect(),
            bounds.iter().map(|b| rational::int(b.1)).collect(),
        )
        .expect("well-formed integer box")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[Rational] {
        &self.lo
    }

    pub fn hi(&self) -> &[Rational] {
        &self.hi
    }

    pub fn width(&self, axis: usize) -> Rational {
        &self.hi[axis] - &self.lo[axis]
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a == b)
    }

    pub fn volume(&self) -> Rational {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn center(&self) -> Vec<Rational> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (a + b) / rational::int(2))
            .collect()
    }

    pub fn contains(&self, p: &[Rational]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| a <= x && x <= b)
    }

    /// Membership in the open box.
    pub fn contains_open(&self, p: &[Rational]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| a < x && x < b)
    }

    pub fn contains_f64(&self, p: &[f64], eps: f64) -> bool {
        let (lo, hi) = self.to_f64();
        p.iter()
            .zip(lo.iter().zip(&hi))
            .all(|(x, (a, b))| *x >= a - eps && *x <= b + eps)
    }

    pub fn contains_box(&self, other: &RBox) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Whether the closed box `other` lies inside the open box `self`.
    pub fn open_contains_box(&self, other: &RBox) -> bool {
        (0..self.dim()).all(|i| self.lo[i] < other.lo[i] && other.hi[i] < self.hi[i])
    }

    /// Intersection of interiors, when nonempty.
    pub fn interior_intersection(&self, other: &RBox) -> Option<RBox> {
        let lo: Vec<Rational> = (0..self.dim())
            .map(|i| self.lo[i].clone().max(other.lo[i].clone()))
            .collect();
        let hi: Vec<Rational> = (0..self.dim())
            .map(|i| self.hi[i].clone().min(other.hi[i].clone()))
            .collect();
        lo.iter().zip(&hi).all(|(a, b)| a < b).then_some(RBox { lo, hi })
    }

    pub fn to_f64(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.lo.iter().map(rational::to_f64).collect(),
            self.hi.iter().map(rational::to_f64).collect(),
        )
    }

    /// The `2n` affine functions `x_i - lo_i`, `hi_i - x_i` whose
    /// non-negativity cuts out the box.
    pub fn pool(&self) -> Vec<Polynomial> {
        let n = self.dim();
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let x = Polynomial::var(n, i);
            out.push(&x - &Polynomial::constant(n, self.lo[i].clone()));
            out.push(&Polynomial::constant(n, self.hi[i].clone()) - &x);
        }
        out
    }

    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let (lo, hi) = self.to_f64();
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| if a == b { *a } else { rng.gen_range(*a..*b) })
            .collect()
    }

    /// Grows every edge by `margin` on both sides.
    pub fn inflate(&self, margin: &Rational) -> RBox {
        RBox {
            lo: self.lo.iter().map(|a| a - margin).collect(),
            hi: self.hi.iter().map(|b| b + margin).collect(),
        }
    }

    pub fn has_zero_width(&self) -> bool {
        (0..self.dim()).any(|i| self.width(i).is_zero())
    }
}

/// Serialized as `[[lo, hi], …]` with `"num/den"` strings.
impl Serialize for RBox {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| [rational::format(a), rational::format(b)])
            .collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Pair(
            #[serde(with = "rational::serde_str")] Rational,
            #[serde(with = "rational::serde_str")] Rational,
        );
        let pairs = Vec::<Pair>::deserialize(d)?;
        let (lo, hi) = pairs.into_iter().map(|Pair(a, b)| (a, b)).unzip();
        RBox::new(lo, hi).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::rational::ratio;

    #[test]
    fn unit_cube_pool() {
        let c = RBox::from_ints(&[(-1, 1), (-1, 1)]);
        let names = ["x", "y"];
        let expect: Vec<Polynomial> = ["x + 1", "1 - x", "y + 1", "1 - y"]
            .iter()
            .map(|s| crate::exactpoly::parse_polynomial(s, &names).unwrap())
            .collect();
        assert_eq!(c.pool(), expect);
    }

    #[test]
    fn open_and_closed_containment() {
        let b = RBox::from_ints(&[(0, 1)]);
        assert!(b.contains(&[rational::int(1)]));
        assert!(!b.contains_open(&[rational::int(1)]));
        let w = RBox::new(vec![ratio(-1, 10)], vec![ratio(6, 10)]).unwrap();
        let half = RBox::new(vec![rational::int(0)], vec![ratio(1, 2)]).unwrap();
        assert!(w.open_contains_box(&half));
        assert!(!half.open_contains_box(&half));
    }

    #[test]
    fn json_round_trip() {
        let b = RBox::new(vec![ratio(-1, 3)], vec![ratio(5, 2)]).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"[["-1/3","5/2"]]"#);
        assert_eq!(serde_json::from_str::<RBox>(&s).unwrap(), b);
        assert!(serde_json::from_str::<RBox>(r#"[["2","1"]]"#).is_err());
    }
}
