//! Adaptive Gauss–Kronrod (G7/K15) quadrature carried out in log space.
//!
//! Every integrand in this crate is nonnegative and many of them span
//! hundreds of orders of magnitude across a single horizon window (products
//! like `e^{kt} f(ε e^{-λ0 t})`). The integrand is therefore supplied as its
//! logarithm `h(t) = ln g(t)` and the result is `ln ∫ g`. Segments are refined
//! largest-contribution first and pruned once they cannot affect the total.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadConfig {
    /// Relative error target per accepted segment.
    pub rel_tol: f64,
    /// Maximum ln-variation of the integrand across an accepted segment.
    pub max_spread: f64,
    /// Segments whose ln-variation is below this are accepted outright: a
    /// Gauss–Kronrod gap on such a flat segment is rounding noise in `h`
    /// (typically from cancelling large terms), not truncation error.
    pub flat_spread: f64,
    /// Segments whose ln upper bound is this far below the running total are dropped.
    pub prune_margin: f64,
    pub max_segments: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-11, max_spread: 4.0, flat_spread: 0.05, prune_margin: 45.0, max_segments: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuad {
    /// `ln ∫ g`; `-inf` for a vanishing integral, `+inf` on overflow, NaN on a bad integrand.
    pub ln_value: f64,
    /// Estimated relative error of the total.
    pub rel_err: f64,
    pub segments: usize,
    pub converged: bool,
}

impl LogQuad {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// `ln(e^a + e^b)` without overflow.
pub fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; `-inf` when they are equal, NaN when `b > a`.
pub fn ln_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b > a {
        return f64::NAN;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp()).ln_1p()
}

/// Sum of `e^{x_i}` kept as `e^{reference} · acc`, so many terms with large
/// logarithms add without compounding rounding in `ln` space.
#[derive(Default)]
struct LnSum {
    reference: Option<f64>,
    acc: f64,
}

impl LnSum {
    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        match self.reference {
            None => {
                self.reference = Some(x);
                self.acc = 1.0;
            }
            Some(r) if x - r > 600.0 => {
                self.acc = self.acc * (r - x).exp() + 1.0;
                self.reference = Some(x);
            }
            Some(r) => self.acc += (x - r).exp(),
        }
    }

    fn ln(&self) -> f64 {
        match self.reference {
            None => f64::NEG_INFINITY,
            Some(r) => r + self.acc.ln(),
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    ln_est: f64,
    ln_bound: f64,
    rel_err: f64,
    spread: f64,
    /// Relative rounding noise of `e^h` implied by the magnitude of `h`.
    noise: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.ln_bound == other.ln_bound
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
        self.ln_bound.total_cmp(&other.ln_bound)
    }
}

enum SegmentEval {
    Finite(Segment),
    Infinite,
    Invalid,
}

fn eval_segment<H: Fn(f64) -> f64>(h: &H, a: f64, b: f64) -> SegmentEval {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut hk = [0.0; 15];
    for i in 0..7 {
        hk[2 * i] = h(c - r * XGK[i]);
        hk[2 * i + 1] = h(c + r * XGK[i]);
    }
    hk[14] = h(c);
    let ha = h(a);
    let hb = h(b);
    let samples = hk.iter().copied().chain([ha, hb]);
    let mut m = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for s in samples {
        if s.is_nan() {
            return SegmentEval::Invalid;
        }
        if s == f64::INFINITY {
            return SegmentEval::Infinite;
        }
        m = m.max(s);
        lo = lo.min(s);
    }
    if m == f64::NEG_INFINITY {
        return SegmentEval::Finite(Segment {
            a,
            b,
            ln_est: f64::NEG_INFINITY,
            ln_bound: f64::NEG_INFINITY,
            rel_err: 0.0,
            spread: 0.0,
            noise: 0.0,
        });
    }
    let e = |x: f64| (x - m).exp();
    let mut kron = WGK[7] * e(hk[14]);
    for i in 0..7 {
        kron += WGK[i] * (e(hk[2 * i]) + e(hk[2 * i + 1]));
    }
    let mut gauss = WG[3] * e(hk[14]);
    for (j, &i) in [1usize, 3, 5].iter().enumerate() {
        gauss += WG[j] * (e(hk[2 * i]) + e(hk[2 * i + 1]));
    }
    kron *= r;
    gauss *= r;
    let ln_est = if kron > 0.0 { m + kron.ln() } else { f64::NEG_INFINITY };
    let rel_err = if kron > 0.0 { (kron - gauss).abs() / kron } else { f64::INFINITY };
    SegmentEval::Finite(Segment {
        a,
        b,
        ln_est,
        ln_bound: m + (b - a).ln(),
        rel_err,
        spread: m - lo,
        noise: 64.0 * f64::EPSILON * m.abs(),
    })
}

/// Computes `ln ∫_a^b exp(h(t)) dt` for `a <= b`.
///
/// Assumes the maximum of `h` over a segment is attained near one of the 17
/// sample points (endpoints plus Kronrod nodes). That holds for the
/// exponential/power products used throughout; pathological spikes between
/// samples can be missed.
pub fn log_integral<H: Fn(f64) -> f64>(h: H, a: f64, b: f64, cfg: &QuadConfig) -> LogQuad {
    if !(b > a) {
        return LogQuad { ln_value: f64::NEG_INFINITY, rel_err: 0.0, segments: 0, converged: a == b };
    }
    let mut heap = BinaryHeap::new();
    match eval_segment(&h, a, b) {
        SegmentEval::Finite(s) => heap.push(s),
        SegmentEval::Infinite => {
            return LogQuad { ln_value: f64::INFINITY, rel_err: 0.0, segments: 1, converged: true }
        }
        SegmentEval::Invalid => {
            return LogQuad { ln_value: f64::NAN, rel_err: f64::NAN, segments: 1, converged: false }
        }
    }
    let mut total = LnSum::default();
    let mut ln_err = f64::NEG_INFINITY;
    let mut segments = 1usize;
    let mut converged = true;

    while let Some(seg) = heap.pop() {
        if seg.ln_bound < total.ln() - cfg.prune_margin {
            // Everything left is negligible; fold in the estimates anyway.
            total.add(seg.ln_est);
            for s in heap.drain() {
                total.add(s.ln_est);
            }
            break;
        }
        let width = seg.b - seg.a;
        let tiny = width <= 8.0 * f64::EPSILON * seg.a.abs().max(seg.b.abs()).max(f64::MIN_POSITIVE);
        let good = seg.spread <= cfg.flat_spread
            || (seg.spread <= cfg.max_spread && seg.rel_err <= cfg.rel_tol.max(seg.noise));
        if good || tiny || segments >= cfg.max_segments {
            if !good {
                converged = false;
            }
            total.add(seg.ln_est);
            if seg.rel_err.is_finite() && seg.rel_err > 0.0 {
                ln_err = ln_add(ln_err, seg.ln_est + seg.rel_err.ln());
            }
            continue;
        }
        let mid = 0.5 * (seg.a + seg.b);
        for (lo, hi) in [(seg.a, mid), (mid, seg.b)] {
            segments += 1;
            match eval_segment(&h, lo, hi) {
                SegmentEval::Finite(s) => heap.push(s),
                SegmentEval::Infinite => {
                    return LogQuad { ln_value: f64::INFINITY, rel_err: 0.0, segments, converged: true }
                }
                SegmentEval::Invalid => {
                    return LogQuad { ln_value: f64::NAN, rel_err: f64::NAN, segments, converged: false }
                }
            }
        }
    }
    let ln_total = total.ln();
    let rel_err = if ln_total.is_finite() { (ln_err - ln_total).exp() } else { 0.0 };
    LogQuad { ln_value: ln_total, rel_err, segments, converged }
}

/// Ordinary adaptive quadrature of a nonnegative integrand.
pub fn integrate_nonneg<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, cfg: &QuadConfig) -> LogQuad {
    log_integral(|t| g(t).ln(), a, b, cfg)
}
