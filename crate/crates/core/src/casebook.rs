//! Worked examples: exact identities where the data is polynomial, seeded
//! double-precision probes where the sine curve
//! `g(x) = sin(1/(δx − 1/π))` enters.

use std::f64::consts::PI;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blowup::{strict_transform_from_base, strict_transform_hypersurface, BlowupSequence, Chart};
use crate::exactpoly::rational::{self, int, ratio, Rational};
use crate::exactpoly::{parse_polynomial, FloatPoly, Polynomial};
use crate::numeric::{self, EPS_NUM};

/// Label attached to every probe that lifts the curve through a chosen
/// blowup sequence.
pub const SINGLE_SEQUENCE_LABEL: &str =
    "evidence for this sequence only; non-existence is a theorem, not a computation";

pub const DEFAULT_DELTA: (i64, i64) = (1, 10);

pub fn default_delta() -> Rational {
    ratio(DEFAULT_DELTA.0, DEFAULT_DELTA.1)
}

/// `g(x) = sin(1/(δx − 1/π))`, analytic for `x < 1/(δπ)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SineCurve {
    #[serde(with = "rational::serde_str")]
    pub delta: Rational,
}

impl SineCurve {
    pub fn new(delta: Rational) -> Option<Self> {
        delta.is_positive().then_some(SineCurve { delta })
    }

    fn d(&self) -> f64 {
        rational::to_f64(&self.delta)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (1.0 / (self.d() * x - 1.0 / PI)).sin()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let u = self.d() * x - 1.0 / PI;
        -self.d() * (1.0 / u).cos() / (u * u)
    }

    /// `1/(δπ)`, where `g` stops being defined.
    pub fn domain_end(&self) -> f64 {
        1.0 / (self.d() * PI)
    }

    /// `1/(2δπ)`, the end of the half-line carrying the curve.
    pub fn half_line_end(&self) -> f64 {
        0.5 * self.domain_end()
    }

    /// Zero `x_k = (1/π − 1/(kπ))/δ`, where the argument of the sine is `−kπ`.
    pub fn zero(&self, k: u32) -> f64 {
        (1.0 / PI - 1.0 / (k as f64 * PI)) / self.d()
    }

    /// Point between `x_k` and `x_{k+1}` where the argument is `−(k + ½)π`,
    /// so `|g| = 1` there.
    pub fn extremum(&self, k: u32) -> f64 {
        (1.0 / PI - 1.0 / ((k as f64 + 0.5) * PI)) / self.d()
    }

    /// In `y = δπx` coordinates the `k`-th zero is `y_k = (k − 1)/k`, and
    /// `1/(y_k − 1) = −k` exactly.
    pub fn zero_identity(k: u32) -> bool {
        let y = ratio(k as i64 - 1, k as i64);
        (y - Rational::one()).recip() == int(-(k as i64))
    }
}

/// Sign changes of `g` at its zeros `x_3, …, x_K` in `(1/(2δπ), x_K]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignChangeReport {
    pub k_max: u32,
    pub zeros: Vec<f64>,
    /// `max |g(x_k)|` over `k = 2..=K`.
    pub max_abs_at_zeros: f64,
    pub increasing: bool,
    pub below_domain_end: bool,
    /// Zeros `x_k`, `k ≥ 3`, where `g` takes opposite signs at the
    /// neighbouring extrema `m_{k−1}` and `m_k`.
    pub sign_changes: usize,
}

impl SineCurve {
    pub fn sign_changes(&self, k_max: u32) -> SignChangeReport {
        let zeros: Vec<f64> = (2..=k_max).map(|k| self.zero(k)).collect();
        let max_abs = zeros.iter().map(|&x| self.eval(x).abs()).fold(0.0, f64::max);
        let increasing = zeros.windows(2).all(|w| w[0] < w[1]);
        let below = zeros.iter().all(|&x| x < self.domain_end());
        let sign_changes = (3..=k_max)
            .filter(|&k| {
                let a = self.eval(self.extremum(k - 1));
                let b = self.eval(self.extremum(k));
                a * b < 0.0 && self.half_line_end() < self.zero(k)
            })
            .count();
        SignChangeReport {
            k_max,
            zeros,
            max_abs_at_zeros: max_abs,
            increasing,
            below_domain_end: below,
            sign_changes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identity {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub id: String,
    pub identities: Vec<Identity>,
    pub probes: Vec<Probe>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CaseReport {
    fn new(id: &str) -> Self {
        CaseReport {
            id: id.into(),
            identities: Vec::new(),
            probes: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn identity(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.identities.push(Identity {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn probe(
        &mut self,
        name: &str,
        seed: Option<u64>,
        tolerance: f64,
        samples: usize,
        passed: bool,
        detail: impl Into<String>,
    ) {
        self.probes.push(Probe {
            name: name.into(),
            seed,
            tolerance,
            samples,
            passed,
            detail: detail.into(),
        });
    }

    pub fn symbolic_passed(&self) -> bool {
        self.identities.iter().all(|i| i.passed)
    }

    pub fn probes_passed(&self) -> bool {
        self.probes.iter().all(|p| p.passed)
    }

    pub fn identity_named(&self, name: &str) -> Option<&Identity> {
        self.identities.iter().find(|i| i.name == name)
    }

    pub fn probe_named(&self, name: &str) -> Option<&Probe> {
        self.probes.iter().find(|p| p.name == name)
    }
}

impl fmt::Display for CaseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        writeln!(f, "case {}", self.id)?;
        writeln!(f, "  identities:")?;
        for i in &self.identities {
            write!(f, "    [{}] {}", mark(i.passed), i.name)?;
            if !i.detail.is_empty() {
                write!(f, ": {}", i.detail)?;
            }
            writeln!(f)?;
        }
        writeln!(f, "  probes:")?;
        for p in &self.probes {
            write!(
                f,
                "    [{}] {} (n={}, tol={:e}",
                mark(p.passed),
                p.name,
                p.samples,
                p.tolerance
            )?;
            if let Some(s) = p.seed {
                write!(f, ", seed={s}")?;
            }
            write!(f, ")")?;
            if !p.detail.is_empty() {
                write!(f, ": {}", p.detail)?;
            }
            writeln!(f)?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

fn poly(s: &str, names: &[&str]) -> Polynomial {
    parse_polynomial(s, names).expect("casebook polynomial parses")
}

fn names_of(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Quartic `z⁴ − x³ − wxz²` and its smooth model `z = u³ + uw`.
pub fn case_smoothpart() -> CaseReport {
    let mut r = CaseReport::new("smoothpart");
    let base = ["x", "w", "z"];
    let chart_names = names_of(&["u", "w", "z"]);
    let h = poly("z^4 - x^3 - w*x*z^2", &base);
    let mut seq = BlowupSequence::new(Chart::root("R3", &base));
    let ids = seq.blow_up(0, &[0, 2], None, Some(&chart_names)).expect("valid center");
    let chart = &seq.charts[ids[1]];
    let st = strict_transform_hypersurface(&h, chart).expect("nonzero");
    let cn: Vec<&str> = chart_names.iter().map(String::as_str).collect();
    let expected = poly("z - u^3 - u*w", &cn);
    r.identity(
        "strict transform under x = u z is z - u^3 - u w",
        st.strict == expected,
        format!("{}", st.strict.display_with(&chart_names)),
    );
    r.identity(
        "multiplicity of z is 3",
        st.multiplicities == vec![3],
        format!("{:?}", st.multiplicities),
    );
    r.identity("total = z^3 * strict", st.check_factorization(chart), "");
    r.identity(
        "X' is smooth: d/dz of z - u^3 - u w is 1",
        expected.partial(2).map(|d| d == Polynomial::one(3)).unwrap_or(false),
        "",
    );
    let image = [int(2), int(1), int(2)];
    r.identity(
        "(u, w) = (1, 1) maps to (x, w, z) = (2, 1, 2) on X",
        h.eval(&image).map(|v| v.is_zero()).unwrap_or(false)
            && chart
                .map_to_parent
                .iter()
                .map(|m| m.eval(&[int(1), int(1), int(2)]).unwrap())
                .eq(image.iter().cloned()),
        "16 = 8 + 8",
    );
    let on_d = st.strict.restrict(2, &int(0)).expect("index");
    r.identity(
        "X' ∩ {z = 0} is {u = 0} ∪ {w = -u^2}",
        on_d == -&poly("u^3 + u*w", &cn),
        format!("{}", on_d.display_with(&chart_names)),
    );

    let seed = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hf = h.to_float();
    let n = 1000;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let (u, w): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let z = u * u * u + u * w;
        let p = chart.eval_to_parent(&[u, w, z]);
        let scale = 1.0 + p.iter().map(|v| v.abs()).fold(0.0, f64::max).powi(4);
        worst = worst.max(hf.eval(&p).abs() / scale);
    }
    r.probe(
        "points of X' map into X",
        Some(seed),
        1e-12,
        n,
        worst <= 1e-12,
        format!("max relative residual {worst:.2e}"),
    );
    let mut t_ok = true;
    for k in 0..=40 {
        let u = -2.0 + 0.1 * k as f64;
        let p = chart.eval_to_parent(&[u, -u * u, 0.0]);
        t_ok &= p[0] == 0.0 && p[2] == 0.0 && p[1] <= 0.0;
    }
    r.probe(
        "T-shape: the branch z = 0, w = -u^2 maps into {x = z = 0, w <= 0}",
        None,
        0.0,
        41,
        t_ok,
        "",
    );
    let axis_ok = (0..=40).all(|k| {
        let w = -2.0 + 0.1 * k as f64;
        let p = chart.eval_to_parent(&[0.0, w, 0.0]);
        p[0] == 0.0 && p[2] == 0.0
    });
    r.probe("the line u = z = 0 maps into {x = z = 0}", None, 0.0, 41, axis_ok, "");
    r
}

/// The sine curve on the half-line: zeros, their exact form, and the
/// oscillation towards `1/(δπ)`.
pub fn case_finite_sine(delta: &Rational, k_max: u32) -> CaseReport {
    let mut r = CaseReport::new("finite-sine");
    let Some(g) = SineCurve::new(delta.clone()) else {
        r.identity("delta is positive", false, rational::format(delta));
        return r;
    };
    let all = (2..=k_max).all(SineCurve::zero_identity);
    r.identity("1/(y_k - 1) = -k for y_k = (k - 1)/k", all, format!("k = 2..={k_max}"));
    r.identity(
        "y = 1/2 at the half-line end, so the argument stays negative",
        (ratio(1, 2) - Rational::one()).is_negative(),
        "",
    );
    let rep = g.sign_changes(k_max);
    r.probe(
        "|g(x_k)| at the explicit zeros",
        None,
        1e-9,
        rep.zeros.len(),
        rep.max_abs_at_zeros < 1e-9,
        format!("max {:.2e}", rep.max_abs_at_zeros),
    );
    r.probe(
        "x_k increase towards 1/(delta pi)",
        None,
        0.0,
        rep.zeros.len(),
        rep.increasing && rep.below_domain_end,
        format!(
            "x_{k_max} = {:.12}, 1/(delta pi) = {:.12}",
            rep.zeros.last().unwrap_or(&f64::NAN),
            g.domain_end()
        ),
    );
    let target = k_max.saturating_sub(2) as usize;
    r.probe(
        "sign changes of g on [1/(2 delta pi), x_K]",
        None,
        0.0,
        target,
        rep.sign_changes == target,
        format!("{} of {target}", rep.sign_changes),
    );
    r.notes.push(
        "a closed analytic extension of the curve would need infinitely many zeros accumulating at 1/(delta pi)".into(),
    );
    r
}

/// Smoothness and incidence probes for `C = {z = 0, y = g(x)} ∩ S³`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSmoothness {
    /// `1/(δπ) > 1`, so the curve is closed inside the sphere.
    pub domain_ok: bool,
    /// Points of `C` with `w = 0`, where the rank can drop.
    pub turning_points: usize,
    pub min_sigma: f64,
    pub samples: usize,
    pub max_residual: f64,
}

fn curve_equations(g: &SineCurve, p: &[f64]) -> [f64; 3] {
    let (x, y, z, w) = (p[0], p[1], p[2], p[3]);
    [x * x + y * y + z * z + w * w - 1.0, z, y - g.eval(x)]
}

fn curve_jacobian(g: &SineCurve, p: &[f64]) -> nalgebra::DMatrix<f64> {
    let (x, y, z, w) = (p[0], p[1], p[2], p[3]);
    nalgebra::DMatrix::from_row_slice(
        3,
        4,
        &[
            2.0 * x,
            2.0 * y,
            2.0 * z,
            2.0 * w,
            0.0,
            0.0,
            1.0,
            0.0,
            -g.derivative(x),
            1.0,
            0.0,
            0.0,
        ],
    )
}

fn min_sigma(m: &nalgebra::DMatrix<f64>) -> f64 {
    numeric::singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn curve_smoothness(g: &SineCurve, samples: usize, seed: u64) -> CurveSmoothness {
    let end = g.domain_end();
    let domain_ok = end > 1.0;
    let hi = end.min(1.0) - 1e-9;
    let phi = |x: f64| x * x + g.eval(x).powi(2) - 1.0;
    let grid = 20_000;
    let mut turning = Vec::new();
    let step = (hi + 1.0) / grid as f64;
    for i in 0..grid {
        let (mut a, mut b) = (-1.0 + i as f64 * step, -1.0 + (i + 1) as f64 * step);
        if phi(a) * phi(b) > 0.0 {
            continue;
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if phi(a) * phi(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        turning.push(0.5 * (a + b));
    }
    let mut sigma = f64::INFINITY;
    for &x in &turning {
        sigma = sigma.min(min_sigma(&curve_jacobian(g, &[x, g.eval(x), 0.0, 0.0])));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = 0;
    let mut residual: f64 = 0.0;
    let mut attempts = 0;
    while taken < samples && attempts < 100 * samples.max(1) {
        attempts += 1;
        let x = rng.gen_range(-1.0..hi);
        let y = g.eval(x);
        let w2 = 1.0 - x * x - y * y;
        if w2 < 0.0 {
            continue;
        }
        let w = if rng.gen_bool(0.5) { w2.sqrt() } else { -w2.sqrt() };
        let p = [x, y, 0.0, w];
        residual = residual.max(curve_equations(g, &p).iter().map(|v| v.abs()).fold(0.0, f64::max));
        sigma = sigma.min(min_sigma(&curve_jacobian(g, &p)));
        taken += 1;
    }
    CurveSmoothness {
        domain_ok,
        turning_points: turning.len(),
        min_sigma: sigma,
        samples: taken,
        max_residual: residual,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberProbeSample {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<usize>,
    pub on_exceptional: Vec<usize>,
    /// Whether the lift lies on the strict transform of each supplied locus.
    pub on_loci: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberProbeReport {
    pub label: String,
    pub samples: Vec<FiberProbeSample>,
    pub unliftable: usize,
    pub max_residual: f64,
}

/// Lifts `curve` at the parameters `ts` and tabulates, per sample, the
/// chart reached, the exceptional components through the lift, and
/// whether the lift stays on the strict transform of each base locus.
pub fn fiber_dimension_probe<F>(seq: &BlowupSequence, curve: F, ts: &[f64], loci: &[Polynomial]) -> FiberProbeReport
where
    F: Fn(f64) -> Vec<f64>,
{
    let lift = seq.lift_curve(curve, ts);
    let strict: Vec<Vec<FloatPoly>> = seq
        .charts
        .iter()
        .map(|c| {
            loci.iter()
                .map(|h| {
                    strict_transform_from_base(h, c)
                        .map(|s| s.strict)
                        .unwrap_or_else(|_| Polynomial::zero(c.dim()))
                        .to_float()
                })
                .collect()
        })
        .collect();
    let samples = lift
        .samples
        .iter()
        .map(|s| match &s.lift {
            Some(l) => FiberProbeSample {
                t: s.t,
                chart: Some(l.chart),
                on_exceptional: l.on_exceptional.clone(),
                on_loci: strict[l.chart]
                    .iter()
                    .map(|f| f.eval(&l.coords).abs() <= 1e-9)
                    .collect(),
            },
            None => FiberProbeSample {
                t: s.t,
                chart: None,
                on_exceptional: Vec::new(),
                on_loci: Vec::new(),
            },
        })
        .collect();
    FiberProbeReport {
        label: SINGLE_SEQUENCE_LABEL.into(),
        samples,
        unliftable: lift.unliftable(),
        max_residual: lift.max_residual(seq),
    }
}

/// The curve `C ⊂ S³` over the z-chart of the origin blowup of `R³`.
pub fn case_example1(delta: &Rational, seed: u64) -> CaseReport {
    let mut r = CaseReport::new("ex1");
    let names = ["x", "y", "z"];
    let charts =
        crate::blowup::blowup_center(&Chart::root("W", &names), 0, &[0, 1, 2], None, None).expect("valid center");
    let zc = &charts[2];
    r.identity(
        "z-chart map is (x z, y z, z)",
        zc.map_to_parent == vec![poly("x*z", &names), poly("y*z", &names), poly("z", &names)],
        "",
    );
    r.identity(
        "exceptional divisor D is {z = 0}",
        zc.exceptional == vec![poly("z", &names)],
        "",
    );
    r.identity(
        "Jacobian determinant z^2 vanishes on D",
        zc.jacobian_determinant() == poly("z^2", &names) && zc.jacobian_multiplicities() == vec![2],
        "",
    );

    let Some(g) = SineCurve::new(delta.clone()) else {
        r.identity("delta is positive", false, rational::format(delta));
        return r;
    };
    r.probe(
        "g(0) = sin(-pi) = 0",
        None,
        1e-15,
        1,
        g.eval(0.0).abs() < 1e-15,
        format!("{:.2e}", g.eval(0.0)),
    );
    let at0 = [0.0, g.eval(0.0), 0.0, 1.0];
    let rank0 = numeric::rank(&curve_jacobian(&g, &at0), EPS_NUM);
    r.probe(
        "C at x = 0 is (0, 0, 0, ±1) with Jacobian rank 3",
        None,
        EPS_NUM,
        1,
        rank0 == 3 && curve_equations(&g, &at0).iter().all(|v| v.abs() < 1e-15),
        format!("rank {rank0}"),
    );
    let sm = curve_smoothness(&g, 1000, seed);
    let smooth = sm.domain_ok && sm.min_sigma > EPS_NUM && sm.max_residual < 1e-12;
    let detail = if sm.domain_ok {
        format!(
            "min singular value {:.3e} over {} samples and {} points with w = 0",
            sm.min_sigma, sm.samples, sm.turning_points
        )
    } else {
        format!(
            "1/(delta pi) = {:.4} <= 1: g oscillates without bound inside the sphere and C accumulates; \
             {} points with w = 0 already resolved",
            g.domain_end(),
            sm.turning_points
        )
    };
    r.probe("C is a smooth curve", Some(seed), EPS_NUM, sm.samples, smooth, detail);
    r.probe(
        "p(C) lies in D = {z = 0}",
        Some(seed),
        0.0,
        sm.samples,
        true,
        "z = 0 is one of the defining equations of C",
    );

    let gamma = |t: f64| vec![t, g.eval(t), 0.0];
    let end = g.domain_end();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ts: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..end.min(1.0))).collect();
    ts.sort_by(f64::total_cmp);
    let d = [poly("z", &names)];

    let empty = BlowupSequence::new(Chart::root("Z", &names));
    let rep = fiber_dimension_probe(&empty, gamma, &ts, &d);
    r.probe(
        "empty sequence: the lift of Gamma is Gamma, inside D",
        Some(seed),
        1e-9,
        ts.len(),
        rep.unliftable == 0 && rep.samples.iter().all(|s| s.on_loci == [true]),
        SINGLE_SEQUENCE_LABEL,
    );

    let mut off = BlowupSequence::new(Chart::root("Z", &names));
    off.blow_up(0, &[0, 1, 2], Some(&[int(0), int(2), int(0)]), None)
        .expect("valid center");
    let rep = fiber_dimension_probe(&off, gamma, &ts, &d);
    r.probe(
        "blowup centered off Gamma: lift maps back to Gamma and misses the exceptional divisor",
        Some(seed),
        1e-9,
        ts.len(),
        rep.unliftable == 0 && rep.max_residual < 1e-9 && rep.samples.iter().all(|s| s.on_exceptional.is_empty()),
        format!("max residual {:.2e}; {SINGLE_SEQUENCE_LABEL}", rep.max_residual),
    );

    let mut origin = BlowupSequence::new(Chart::root("Z", &names));
    origin.blow_up(0, &[0, 1, 2], None, None).expect("valid center");
    let rep = fiber_dimension_probe(&origin, gamma, &ts, &d);
    let meets = rep.samples.iter().filter(|s| !s.on_exceptional.is_empty()).count();
    r.probe(
        "origin blowup: Gamma lifts, meeting the exceptional divisor only at isolated samples",
        Some(seed),
        1e-9,
        ts.len(),
        rep.unliftable == 0 && rep.max_residual < 1e-9 && meets < ts.len(),
        format!(
            "{meets} of {} samples on the exceptional divisor; {SINGLE_SEQUENCE_LABEL}",
            ts.len()
        ),
    );
    r.notes
        .push("that every subanalytic set containing Gamma has dimension at least 2 is used, not checked".into());
    r.notes
        .push("the blowup along C itself is not built as charts; only C is examined".into());
    r
}

/// The quartic threefold `(x²+z²)²(w⁴+z²w²) − (x²−z²)²` in `R⁴`.
pub fn case_example2(delta: &Rational, seed: u64) -> CaseReport {
    let mut r = CaseReport::new("ex2");
    let base = ["x", "y", "z", "w"];
    let up = ["X", "Y", "Z", "w"];
    let upn = names_of(&up);
    let h = poly("(x^2 + z^2)^2*(w^4 + z^2*w^2) - (x^2 - z^2)^2", &base);
    r.identity(
        "{x = z = 0} lies in S",
        h.restrict(0, &int(0))
            .and_then(|p| p.restrict(2, &int(0)))
            .map(|p| p.is_zero())
            .unwrap_or(false),
        "",
    );
    let charts =
        crate::blowup::blowup_center(&Chart::root("R4", &base), 0, &[0, 1, 2], None, Some(&upn)).expect("valid center");
    let zc = &charts[2];
    r.identity(
        "chart map is (X Z, Y Z, Z, w)",
        zc.map_to_parent == vec![poly("X*Z", &up), poly("Y*Z", &up), poly("Z", &up), poly("w", &up)],
        "",
    );
    let st = strict_transform_hypersurface(&h, zc).expect("nonzero");
    let expected = poly("(X^2 + 1)^2*(w^4 + Z^2*w^2) - (X^2 - 1)^2", &up);
    r.identity(
        "strict transform is (X^2+1)^2 (w^4 + Z^2 w^2) - (X^2-1)^2",
        st.strict == expected,
        format!("{}", st.strict.display_with(&upn)),
    );
    r.identity(
        "multiplicity of Z is 4",
        st.multiplicities == vec![4],
        format!("{:?}", st.multiplicities),
    );
    r.identity("total = Z^4 * strict", st.check_factorization(zc), "");
    let at_z0 = st.strict.restrict(2, &int(0)).expect("index");
    let split = &poly("(X^2 + 1)*w^2 - (X^2 - 1)", &up) * &poly("(X^2 + 1)*w^2 + (X^2 - 1)", &up);
    r.identity(
        "at Z = 0 the equation splits into two factors",
        at_z0.equal_expanded(&split),
        "",
    );

    // w² solves A W² + B W − C = 0 with A > 0, C ≥ 0 when x² + z² ≠ 0;
    // the product of the roots is −C/A ≤ 0, so one root is ≥ 0.
    let mut solvable = true;
    let mut checked = 0;
    for xn in -3..=3 {
        for zn in -3..=3 {
            if xn == 0 && zn == 0 {
                continue;
            }
            let (x, z) = (ratio(xn, 2), ratio(zn, 3));
            let s = &x * &x + &z * &z;
            let a = &s * &s;
            let d = &x * &x - &z * &z;
            let c = &d * &d;
            let b = &a * &z * &z;
            solvable &= a.is_positive() && !(-&c / &a).is_positive();
            // The non-negative root, checked against the polynomial in w².
            let disc = rational::to_f64(&(&b * &b + int(4) * &a * &c));
            let w2 = (-rational::to_f64(&b) + disc.sqrt()) / (2.0 * rational::to_f64(&a));
            let w = w2.max(0.0).sqrt();
            let val = h.eval_f64(&[rational::to_f64(&x), 0.0, rational::to_f64(&z), w]);
            solvable &= val.abs() < 1e-9 * (1.0 + rational::to_f64(&a));
            checked += 1;
        }
    }
    r.identity(
        "S maps onto R^3: the equation has a real w when x^2 + z^2 != 0",
        solvable,
        format!("{checked} rational (x, z) pairs"),
    );

    let Some(g) = SineCurve::new(delta.clone()) else {
        r.identity("delta is positive", false, rational::format(delta));
        return r;
    };
    let c_eqs = |p: &[f64]| -> [f64; 3] {
        let (x, y, z, w) = (p[0], p[1], p[2], p[3]);
        [z, y - g.eval(x), (x * x + 1.0) * w * w + (x * x - 1.0)]
    };
    let c_jac = |p: &[f64]| {
        let (x, w) = (p[0], p[3]);
        nalgebra::DMatrix::from_row_slice(
            3,
            4,
            &[
                0.0,
                0.0,
                1.0,
                0.0,
                -g.derivative(x),
                1.0,
                0.0,
                0.0,
                2.0 * x * (w * w + 1.0),
                0.0,
                0.0,
                2.0 * (x * x + 1.0) * w,
            ],
        )
    };
    let at0 = [0.0, g.eval(0.0), 0.0, 1.0];
    r.probe(
        "C at X = 0: w = ±1, Jacobian rank 3",
        None,
        EPS_NUM,
        1,
        c_eqs(&at0).iter().all(|v| v.abs() < 1e-15) && numeric::rank(&c_jac(&at0), EPS_NUM) == 3,
        "",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1000;
    let mut real_ok = true;
    let mut sigma = f64::INFINITY;
    let mut residual: f64 = 0.0;
    let upper = g.domain_end().min(1.5);
    for _ in 0..n {
        let x: f64 = rng.gen_range(-1.5..upper);
        let w2 = (1.0 - x * x) / (1.0 + x * x);
        real_ok &= (w2 >= 0.0) == (x.abs() <= 1.0);
        if w2 < 0.0 {
            continue;
        }
        let p = [x, g.eval(x), 0.0, w2.sqrt()];
        residual = residual.max(c_eqs(&p).iter().map(|v| v.abs()).fold(0.0, f64::max));
        sigma = sigma.min(min_sigma(&c_jac(&p)));
    }
    for x in [-1.0, 1.0] {
        sigma = sigma.min(min_sigma(&c_jac(&[x, g.eval(x), 0.0, 0.0])));
    }
    r.probe(
        "C is real exactly over |X| <= 1",
        Some(seed),
        0.0,
        n,
        real_ok && g.domain_end() > 1.0,
        format!("1/(delta pi) = {:.4}", g.domain_end()),
    );
    r.probe(
        "C is smooth at samples",
        Some(seed),
        EPS_NUM,
        n,
        sigma > EPS_NUM && residual < 1e-12,
        format!("min singular value {sigma:.3e}, max residual {residual:.2e}"),
    );
    r.notes
        .push("the blowup along C is not built as charts; only C is examined".into());
    r
}

/// Two-step chart `(x, y, Z, W) = (x, y, z w, w)` over the origin blowup
/// of `R⁴`, and the curve `C` in its exceptional divisor.
pub fn case_remark_final(delta: &Rational, seed: u64) -> CaseReport {
    let mut r = CaseReport::new("remark-final");
    let u1 = ["x", "y", "Z", "W"];
    let u2 = ["x", "y", "z", "w"];
    let u1n = names_of(&u1);
    let u2n = names_of(&u2);
    let mut seq = BlowupSequence::new(Chart::root("R4", &u1));
    let first = seq.blow_up(0, &[0, 1, 2, 3], None, Some(&u1n)).expect("valid center");
    let w_chart = first[3];
    r.identity(
        "U1: origin blowup in the W-chart, exceptional {W = 0}",
        seq.charts[w_chart].map_to_base == vec![poly("x*W", &u1), poly("y*W", &u1), poly("Z*W", &u1), poly("W", &u1)]
            && seq.charts[w_chart].exceptional == vec![poly("W", &u1)],
        "",
    );
    let second = seq.blow_up(w_chart, &[2, 3], None, Some(&u2n)).expect("valid center");
    let c2 = &seq.charts[second[1]];
    r.identity(
        "U2 over U1 is (x, y, Z, W) = (x, y, z w, w)",
        c2.map_to_parent == vec![poly("x", &u2), poly("y", &u2), poly("z*w", &u2), poly("w", &u2)],
        "",
    );
    r.identity(
        "composite to R^4 is (x w, y w, z w^2, w)",
        c2.map_to_base == vec![poly("x*w", &u2), poly("y*w", &u2), poly("z*w^2", &u2), poly("w", &u2)],
        "",
    );
    r.identity(
        "composition agrees with successive substitution",
        seq.check_composition().unwrap_or(false),
        "",
    );
    let test = poly("x^2 + y^3*W - Z*W^2 + 1", &u1);
    let stepwise = test
        .substitute(&seq.charts[w_chart].map_to_parent)
        .and_then(|p| p.substitute(&c2.map_to_parent));
    let direct = test.substitute(&c2.map_to_base);
    r.identity(
        "pullback is associative",
        matches!((stepwise, direct), (Ok(a), Ok(b)) if a == b),
        "",
    );
    r.identity(
        "W pulls back to w, so {w = 0} maps into {W = 0}",
        c2.map_to_parent[3] == poly("w", &u2),
        "",
    );

    let Some(g) = SineCurve::new(delta.clone()) else {
        r.identity("delta is positive", false, rational::format(delta));
        return r;
    };
    let sys = |p: &[f64]| -> [f64; 3] { [p[3], p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - 1.0, p[1] - g.eval(p[0])] };
    let at0 = [0.0, g.eval(0.0), 1.0, 0.0];
    r.probe(
        "C at x = 0: (0, 0, ±1, 0)",
        None,
        1e-15,
        1,
        sys(&at0).iter().all(|v| v.abs() < 1e-15),
        "",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1000;
    let mut taken = 0;
    let mut residual: f64 = 0.0;
    let mut in_w0 = true;
    let hi = g.domain_end().min(1.0);
    for _ in 0..100 * n {
        if taken == n {
            break;
        }
        let x: f64 = rng.gen_range(-1.0..hi);
        let y = g.eval(x);
        let z2 = 1.0 - x * x - y * y;
        if z2 < 0.0 {
            continue;
        }
        let p = [x, y, z2.sqrt(), 0.0];
        residual = residual.max(sys(&p).iter().map(|v| v.abs()).fold(0.0, f64::max));
        in_w0 &= c2.eval_to_parent(&p)[3] == 0.0;
        taken += 1;
    }
    r.probe(
        "C samples satisfy w = 0, x^2 + y^2 + z^2 = 1, y = g(x)",
        Some(seed),
        1e-12,
        taken,
        taken == n && residual < 1e-12,
        format!("max residual {residual:.2e}"),
    );
    r.probe("C maps into {W = 0}", Some(seed), 0.0, taken, in_w0, "");
    r.notes.push(
        "the set A of points with 2-dimensional fibres contains an open part of {Z = W = 0, y = g(x)}; \
         that no ideal has this composite as its blowup is a theorem, not a computation"
            .into(),
    );
    r
}

/// Runs a case by its command-line id.
pub fn run_case(id: &str, delta: &Rational, seed: u64) -> Option<CaseReport> {
    Some(match id {
        "smoothpart" => case_smoothpart(),
        "finite-sine" => case_finite_sine(delta, 50),
        "ex1" => case_example1(delta, seed),
        "ex2" => case_example2(delta, seed),
        "remark-final" => case_remark_final(delta, seed),
        _ => return None,
    })
}

pub const CASE_IDS: [&str; 5] = ["smoothpart", "finite-sine", "ex1", "ex2", "remark-final"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_of_sine_curve() {
        let g = SineCurve::new(default_delta()).unwrap();
        assert!(g.eval(0.0).abs() < 1e-15);
        // Oracle: x_2 = 1/(2 delta pi) by the closed form with k = 2.
        assert!((g.zero(2) - g.half_line_end()).abs() < 1e-14);
        for k in 2..60 {
            assert!(g.eval(g.zero(k)).abs() < 1e-9);
            assert!((g.eval(g.extremum(k)).abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sign_changes_reach_k_minus_two() {
        let g = SineCurve::new(default_delta()).unwrap();
        let rep = g.sign_changes(50);
        assert_eq!(rep.sign_changes, 48);
        assert!(rep.increasing && rep.below_domain_end);
    }

    #[test]
    fn zero_identities_exact() {
        assert!((2..200).all(SineCurve::zero_identity));
    }

    #[test]
    fn every_case_passes_symbolically() {
        let d = default_delta();
        for id in CASE_IDS {
            let r = run_case(id, &d, 0).unwrap();
            assert!(r.symbolic_passed(), "{r}");
            assert!(r.probes_passed(), "{r}");
        }
        assert!(run_case("nope", &d, 0).is_none());
    }

    #[test]
    fn large_delta_fails_smoothness_only() {
        let r = case_example1(&ratio(1, 2), 0);
        assert!(r.symbolic_passed());
        assert!(!r.probe_named("C is a smooth curve").unwrap().passed);
    }

    #[test]
    fn paper_bound_delta_is_smooth() {
        // 1/10 < 1/(3 pi): inside the smallness range.
        let s = curve_smoothness(&SineCurve::new(default_delta()).unwrap(), 200, 4);
        assert!(s.domain_ok);
        assert!(s.min_sigma > 0.1);
        assert_eq!(s.turning_points, 2);
    }

    #[test]
    fn case_reports_roundtrip() {
        let r = case_example2(&default_delta(), 1);
        let back: CaseReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_string().contains("[pass] multiplicity of Z is 4"));
    }
}
