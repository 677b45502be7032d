//! Adaptive Gauss–Kronrod (7/15) quadrature with bisection, plus the
//! endpoint-singular weights `tau`, `mu` and `sqrt(t (1 - t))`.
//!
//! Weights whose derivative blows up at the endpoints are integrated after
//! the substitution `x = m + h cos(theta)`, where `m` is the midpoint and `h`
//! the half-width. Under it `sqrt((b - x)(x - a)) dx = h^2 sin^2(theta) dtheta`
//! and the integrand becomes smooth on `[0, pi]`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::expr::{FunctionSpec, Interval};

/// Maximum number of live subintervals.
pub const SUBDIVISION_BUDGET: usize = 10_000;

/// Default absolute tolerance for theorem verification.
pub const DEFAULT_TOL: f64 = 1e-10;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("integrand is undefined at x = {x}")]
    Undefined { x: f64 },
    #[error("tolerance must be positive and finite (got {0})")]
    BadTolerance(f64),
    #[error("the sqrt(t(1-t)) weight requires the domain [0, 1] (got [{a}, {b}])")]
    WeightDomain { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: u64,
    pub converged: bool,
}

impl QuadResult {
    /// Multiplies value and error estimate by `c`.
    pub fn scaled(self, c: f64) -> QuadResult {
        QuadResult {
            value: self.value * c,
            abs_error_estimate: self.abs_error_estimate * c.abs(),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    None,
    /// `sqrt((b - x)(x - a)) / (b - a)`
    Tau,
    /// `(b - x)(x - a) / (b - a)^2`
    Mu,
    /// `sqrt(t (1 - t))` on `[0, 1]`
    SqrtTOneMinusT,
}

impl Weight {
    pub fn eval(self, domain: Interval, x: f64) -> f64 {
        let (a, b) = (domain.a(), domain.b());
        let w = domain.width();
        let p = ((b - x) * (x - a)).max(0.0);
        match self {
            Weight::None => 1.0,
            Weight::Tau => p.sqrt() / w,
            Weight::Mu => p / (w * w),
            Weight::SqrtTOneMinusT => (x * (1.0 - x)).max(0.0).sqrt(),
        }
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// `|K - G|` is below the rounding floor; bisection cannot improve it.
    floored: bool,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod<F>(f: &F, a: f64, b: f64) -> Result<Segment, QuadError>
where
    F: Fn(f64) -> Option<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let at = |x: f64| f(x).ok_or(QuadError::Undefined { x });

    let fc = at(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_sum = (WGK[7] * fc).abs();
    for (j, (&node, &wk)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * node;
        let (f1, f2) = (at(center - dx)?, at(center + dx)?);
        kronrod += wk * (f1 + f2);
        abs_sum += wk * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let rounding = 50.0 * f64::EPSILON * abs_sum * half.abs();
    let raw = ((kronrod - gauss) * half).abs();
    Ok(Segment {
        a,
        b,
        value,
        error: raw.max(rounding),
        floored: raw <= rounding,
    })
}

/// Adaptive integration of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Non-convergence within [`SUBDIVISION_BUDGET`] subintervals is not an
/// error: the best estimate comes back with `converged == false`. The same
/// happens early once every remaining segment sits at its rounding floor,
/// i.e. when `tol` is below what `f64` can resolve for this integral.
pub fn integrate_fn<F>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> Option<f64>,
{
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(QuadError::BadTolerance(tol));
    }
    let mut evaluations = 15u64;
    let mut heap = BinaryHeap::new();
    heap.push(kronrod(&f, a, b)?);
    let mut frozen: Vec<Segment> = Vec::new();

    let total_error = |heap: &BinaryHeap<Segment>, frozen: &[Segment]| {
        compensated_sum(heap.iter().chain(frozen).map(|s| s.error))
    };

    let mut running = heap.peek().map_or(0.0, |s| s.error);
    let converged = loop {
        if running <= tol {
            // the running total drifts; confirm with a compensated sum
            running = total_error(&heap, &frozen);
            if running <= tol {
                break true;
            }
        }
        if heap.len() + frozen.len() >= SUBDIVISION_BUDGET {
            break false;
        }
        let Some(worst) = heap.pop() else {
            break false;
        };
        let mid = 0.5 * (worst.a + worst.b);
        if worst.floored || !(worst.a < mid && mid < worst.b) {
            frozen.push(worst);
            continue;
        }
        let (left, right) = (kronrod(&f, worst.a, mid)?, kronrod(&f, mid, worst.b)?);
        running += (left.error + right.error) - worst.error;
        heap.push(left);
        heap.push(right);
        evaluations += 30;
    };

    let mut segments: Vec<Segment> = heap.into_vec();
    segments.extend(frozen);
    segments.sort_by(|s, t| s.a.total_cmp(&t.a));
    Ok(QuadResult {
        value: compensated_sum(segments.iter().map(|s| s.value)),
        abs_error_estimate: compensated_sum(segments.iter().map(|s| s.error)),
        evaluations,
        converged,
    })
}

/// `int_a^b w(x) g(x) dx` for an arbitrary integrand `g`.
pub fn integrate_weighted_fn<F>(
    g: F,
    domain: Interval,
    weight: Weight,
    tol: f64,
) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> Option<f64>,
{
    let (a, b) = (domain.a(), domain.b());
    match weight {
        Weight::None => integrate_fn(g, a, b, tol),
        Weight::Mu => integrate_fn(|x| Some(Weight::Mu.eval(domain, x) * g(x)?), a, b, tol),
        Weight::Tau | Weight::SqrtTOneMinusT => {
            if weight == Weight::SqrtTOneMinusT && (a, b) != (0.0, 1.0) {
                return Err(QuadError::WeightDomain { a, b });
            }
            let (m, h) = (domain.midpoint(), 0.5 * domain.width());
            // tau(x) dx = (h / 2) sin^2(theta) dtheta; the t-weight is tau with h = 1/2.
            let scale = 0.5 * h;
            let to_x = |theta: f64| domain.clamp(m + h * theta.cos());
            let on_theta = |theta: f64| {
                let s = theta.sin();
                Some(scale * s * s * g(to_x(theta))?)
            };
            integrate_fn(on_theta, 0.0, PI, tol).map_err(|e| match e {
                QuadError::Undefined { x: theta } => QuadError::Undefined { x: to_x(theta) },
                other => other,
            })
        }
    }
}

/// `int_a^b f(x) dx` over the domain of `f`.
pub fn integrate(f: &FunctionSpec, tol: f64) -> Result<QuadResult, QuadError> {
    let d = f.domain();
    integrate_fn(|x| f.eval(x), d.a(), d.b(), tol)
}

/// `int_a^b w(x) f(x) dx` over the domain of `f`, without any prefactor.
pub fn integrate_weighted(
    f: &FunctionSpec,
    weight: Weight,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    integrate_weighted_fn(|x| f.eval(x), f.domain(), weight, tol)
}

/// Both sides of the change of variables
/// `int_0^1 sqrt(t(1-t)) f(ta + (1-t)b) dt = (1/(b-a)) int_a^b tau(x) f(x) dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstitutionSides {
    /// Direct adaptive quadrature in `t` of the composed integrand.
    pub t_side: QuadResult,
    /// Weighted `x` quadrature divided by `b - a`.
    pub x_side: QuadResult,
}

impl SubstitutionSides {
    pub fn difference(&self) -> f64 {
        (self.t_side.value - self.x_side.value).abs()
    }
}

pub fn substitution_sides(f: &FunctionSpec, tol: f64) -> Result<SubstitutionSides, QuadError> {
    let d = f.domain();
    let (a, b) = (d.a(), d.b());
    // No substitution on this side: plain bisection copes with the sqrt endpoints.
    let t_side = integrate_fn(
        |t| {
            let w = (t * (1.0 - t)).max(0.0).sqrt();
            Some(w * f.eval(d.clamp(t * a + (1.0 - t) * b))?)
        },
        0.0,
        1.0,
        tol,
    )?;
    let x_side = integrate_weighted(f, Weight::Tau, tol)?.scaled(1.0 / d.width());
    Ok(SubstitutionSides { t_side, x_side })
}

/// Absolute difference between the two sides of the `tau` change of variables.
pub fn tau_substitution_check(f: &FunctionSpec, tol: f64) -> Result<f64, QuadError> {
    Ok(substitution_sides(f, tol)?.difference())
}
