//! Exact interval enclosures of polynomial ranges over rational boxes.

use num_traits::{Signed, Zero};

use super::rational::{self, Rational};
use super::Polynomial;

/// Closed rational interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    fn point(c: Rational) -> Self {
        Interval { lo: c.clone(), hi: c }
    }

    fn add(&self, o: &Interval) -> Interval {
        Interval::new(&self.lo + &o.lo, &self.hi + &o.hi)
    }

    fn mul(&self, o: &Interval) -> Interval {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval::new(lo, hi)
    }

    fn pow(&self, e: u32) -> Interval {
        if e == 0 {
            return Interval::point(rational::int(1));
        }
        let a = rational::pow(&self.lo, e);
        let b = rational::pow(&self.hi, e);
        if e % 2 == 1 {
            Interval::new(a, b)
        } else if self.lo.is_negative() && self.hi.is_positive() {
            Interval::new(Rational::zero(), a.max(b))
        } else {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            Interval::new(lo, hi)
        }
    }
}

/// Sign certified to hold on a whole box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxSign {
    NonNegative,
    NonPositive,
    /// Both: the polynomial is certified to vanish on the box.
    Zero,
}

/// Naive interval enclosure of `p` on `Π [lo_i, hi_i]`.
pub fn enclose(p: &Polynomial, lo: &[Rational], hi: &[Rational]) -> Interval {
    let boxes: Vec<Interval> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| Interval::new(a.clone(), b.clone()))
        .collect();
    let mut acc = Interval::point(Rational::zero());
    for (m, c) in p.terms() {
        let mut t = Interval::point(c.clone());
        for (i, &e) in m.exponents().iter().enumerate() {
            if e > 0 {
                t = t.mul(&boxes[i].pow(e));
            }
        }
        acc = acc.add(&t);
    }
    acc
}

/// Tries to certify a constant sign of `p` on the box by interval
/// enclosures, bisecting the longest edge up to `depth` times along each
/// branch.
pub fn certify_sign(p: &Polynomial, lo: &[Rational], hi: &[Rational], depth: u32) -> Option<BoxSign> {
    if p.is_zero() {
        return Some(BoxSign::Zero);
    }
    if nonneg(p, lo, hi, depth) {
        return Some(BoxSign::NonNegative);
    }
    let neg = -p;
    if nonneg(&neg, lo, hi, depth) {
        return Some(BoxSign::NonPositive);
    }
    None
}

fn nonneg(p: &Polynomial, lo: &[Rational], hi: &[Rational], depth: u32) -> bool {
    let iv = enclose(p, lo, hi);
    if !iv.lo.is_negative() {
        return true;
    }
    if iv.hi.is_negative() || depth == 0 {
        return false;
    }
    let axis = (0..lo.len())
        .max_by(|&a, &b| (&hi[a] - &lo[a]).cmp(&(&hi[b] - &lo[b])))
        .unwrap_or(0);
    let mid = (&lo[axis] + &hi[axis]) / rational::int(2);
    let mut hi_left = hi.to_vec();
    hi_left[axis] = mid.clone();
    let mut lo_right = lo.to_vec();
    lo_right[axis] = mid;
    nonneg(p, lo, &hi_left, depth - 1) && nonneg(p, &lo_right, hi, depth - 1)
}
