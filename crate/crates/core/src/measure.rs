//! Quadrature of the invariant measure on `B^2 - 4AC = 1`.
//!
//! In the chart `(A, B)` with `C = (B^2 - 1) / 4A` the measure is
//! `dA dB / (4|A|)`, the Leray form of `B^2 - 4AC`. The swapped chart
//! `(C, B)` uses `dC dB / (4|C|)`. Integration is iterated: an adaptive
//! Gauss-Kronrod 7/15 rule runs over the chart coordinate, split at zero,
//! and for each node the region's `B`-section is measured exactly (closed
//! form for slabs) or by root bracketing (ellipsoids). Near the chart
//! coordinate zero, sections of bounded regions pinch to width `O(|A|)`,
//! which keeps the integrand bounded.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::enumerate::Region;
use crate::error::{Error, Result};
use crate::form::Move;
use crate::region::{BallPatch, Functional};

/// Target absolute error for `K`.
pub const K_TOLERANCE: f64 = 1e-4;
/// Target absolute error for the small patch.
pub const PATCH_TOLERANCE: f64 = 1e-6;

const MAX_PANELS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// Coordinates `(A, B)`, solving for `C`.
    AB,
    /// Coordinates `(C, B)`, solving for `A`.
    CB,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEstimate {
    pub value: f64,
    pub abs_error_bound: f64,
}

/// A `B`-section: disjoint open intervals plus an absolute error on their
/// endpoints.
#[derive(Debug, Clone, Default)]
pub struct Section {
    pub intervals: Vec<(f64, f64)>,
    pub endpoint_error: f64,
}

impl Section {
    fn length(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }
}

pub trait SurfaceRegion: Sync {
    /// Closed range containing every chart coordinate the region reaches.
    fn chart_range(&self, chart: Chart) -> (f64, f64);

    /// The `B`-section at chart coordinate `x != 0`.
    fn section(&self, chart: Chart, x: f64) -> Section;
}

#[inline]
fn lift(chart: Chart, x: f64, b: f64) -> [f64; 3] {
    let other = (b * b - 1.0) / (4.0 * x);
    match chart {
        Chart::AB => [x, b, other],
        Chart::CB => [other, b, x],
    }
}

/// `{ |l_i(P)| < 1 for all i }` for linear functionals `l_i`.
#[derive(Debug, Clone)]
pub struct SlabRegion {
    functionals: Vec<[f64; 3]>,
}

const SLAB_WINDOW: f64 = 1e6;

impl SlabRegion {
    pub fn new(functionals: Vec<[f64; 3]>) -> Self {
        Self { functionals }
    }

    pub fn k() -> Self {
        Self::new(
            Functional::ALL
                .iter()
                .map(|f| f.coefficients().map(|v| v as f64))
                .collect(),
        )
    }
}

/// Sorted open intervals of `{ p2 B^2 + p1 B + p0 < 0 }` inside the window.
fn negative_set(p2: f64, p1: f64, p0: f64) -> Vec<(f64, f64)> {
    let w = SLAB_WINDOW;
    if p2 == 0.0 {
        if p1 == 0.0 {
            return if p0 < 0.0 { vec![(-w, w)] } else { vec![] };
        }
        let root = -p0 / p1;
        return if p1 > 0.0 {
            vec![(-w, root.min(w))]
        } else {
            vec![(root.max(-w), w)]
        };
    }
    let disc = p1 * p1 - 4.0 * p2 * p0;
    if disc <= 0.0 {
        return if p2 > 0.0 { vec![] } else { vec![(-w, w)] };
    }
    let q = -0.5 * (p1 + p1.signum() * disc.sqrt());
    let (mut r1, mut r2) = if q == 0.0 {
        let r = (-p0 / p2).sqrt();
        (-r, r)
    } else {
        (q / p2, p0 / q)
    };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    if p2 > 0.0 {
        vec![(r1, r2)]
    } else {
        vec![(-w, r1), (r2, w)]
    }
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

impl SurfaceRegion for SlabRegion {
    fn chart_range(&self, _chart: Chart) -> (f64, f64) {
        // |l| < 1 for the K functionals bounds each coordinate by 1; other
        // slabs may reach further, so stay generous.
        if self.functionals.len() == 3 {
            (-1.0, 1.0)
        } else {
            (-SLAB_WINDOW, SLAB_WINDOW)
        }
    }

    fn section(&self, chart: Chart, x: f64) -> Section {
        let sigma = x.signum();
        let ax = x.abs();
        let mut acc = vec![(-SLAB_WINDOW, SLAB_WINDOW)];
        for l in &self.functionals {
            // In the AB chart: 4|x| l = sigma (gamma B^2 + 4 beta x B + 4 alpha x^2 - gamma).
            let (alpha, beta, gamma) = match chart {
                Chart::AB => (l[0], l[1], l[2]),
                Chart::CB => (l[2], l[1], l[0]),
            };
            let g2 = sigma * gamma;
            let g1 = sigma * 4.0 * beta * x;
            let g0 = sigma * (4.0 * alpha * x * x - gamma);
            let upper = negative_set(g2, g1, g0 - 4.0 * ax);
            let lower = negative_set(-g2, -g1, -g0 - 4.0 * ax);
            acc = intersect(&intersect(&acc, &upper), &lower);
            if acc.is_empty() {
                break;
            }
        }
        Section {
            intervals: acc,
            endpoint_error: 0.0,
        }
    }
}

/// `{ P : |L P - c| < r }` for an invertible linear map `L`. With `L = I`
/// this is a ball; with `L = M^{-1}` it is the image of a ball under `M`.
#[derive(Debug, Clone)]
pub struct EllipsoidRegion {
    map: [[f64; 3]; 3],
    inverse: [[f64; 3]; 3],
    center: [f64; 3],
    radius: f64,
}

const SECTION_SAMPLES: usize = 256;

fn apply(m: &[[f64; 3]; 3], p: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2])
}

fn to_f64_matrix(m: [[i64; 3]; 3]) -> [[f64; 3]; 3] {
    m.map(|row| row.map(|v| v as f64))
}

impl EllipsoidRegion {
    pub fn ball(center: [f64; 3], radius: f64) -> Self {
        let id = to_f64_matrix(Move::Identity.matrix());
        Self {
            map: id,
            inverse: id,
            center,
            radius,
        }
    }

    pub fn from_patch(patch: &BallPatch) -> Self {
        Self::ball(patch.center_f64(), patch.radius_f64())
    }

    /// The image `M(patch)`.
    pub fn image_of_patch(patch: &BallPatch, mv: Move) -> Self {
        Self {
            map: to_f64_matrix(mv.inverse_matrix()),
            inverse: to_f64_matrix(mv.matrix()),
            center: patch.center_f64(),
            radius: patch.radius_f64(),
        }
    }

    fn excess(&self, p: &[f64; 3]) -> f64 {
        let q = apply(&self.map, p);
        q.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            - self.radius * self.radius
    }

    /// Bounds of coordinate `i` over the solid ellipsoid.
    fn coordinate_range(&self, i: usize) -> (f64, f64) {
        let mid = apply(&self.inverse, &self.center)[i];
        let row = self.inverse[i];
        let spread = self.radius * (row[0] * row[0] + row[1] * row[1] + row[2] * row[2]).sqrt();
        (mid - spread, mid + spread)
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut inside: f64, mut outside: f64) -> (f64, f64) {
    // f(inside) < 0 <= f(outside)
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if f(mid) < 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    (0.5 * (inside + outside), (outside - inside).abs())
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

impl SurfaceRegion for EllipsoidRegion {
    fn chart_range(&self, chart: Chart) -> (f64, f64) {
        self.coordinate_range(match chart {
            Chart::AB => 0,
            Chart::CB => 2,
        })
    }

    fn section(&self, chart: Chart, x: f64) -> Section {
        let (lo, hi) = self.coordinate_range(1);
        let h = |b: f64| self.excess(&lift(chart, x, b));
        let step = (hi - lo) / SECTION_SAMPLES as f64;
        let samples: Vec<(f64, f64)> = (0..=SECTION_SAMPLES)
            .map(|i| {
                let b = lo + step * i as f64;
                (b, h(b))
            })
            .collect();
        let mut intervals = Vec::new();
        let mut err: f64 = 0.0;
        let mut open: Option<f64> = None;
        for w in samples.windows(2) {
            let ((b0, h0), (b1, h1)) = (w[0], w[1]);
            match (h0 < 0.0, h1 < 0.0) {
                (false, true) => {
                    let (root, e) = bisect(h, b1, b0);
                    err = err.max(e);
                    open = Some(root);
                }
                (true, false) => {
                    let (root, e) = bisect(h, b0, b1);
                    err = err.max(e);
                    intervals.push((open.take().unwrap_or(lo), root));
                }
                (true, true) if open.is_none() => open = Some(b0),
                _ => {}
            }
        }
        if let Some(start) = open {
            intervals.push((start, hi));
        }
        if intervals.is_empty() {
            // A sliver narrower than the sampling step.
            let (imin, _) = samples
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .expect("samples");
            let a = samples[imin.saturating_sub(1)].0;
            let b = samples[(imin + 1).min(SECTION_SAMPLES)].0;
            let m = golden_min(h, a, b);
            if h(m) < 0.0 {
                let (left, e1) = bisect(h, m, a);
                let (right, e2) = bisect(h, m, b);
                err = err.max(e1).max(e2);
                intervals.push((left, right));
            }
        }
        Section {
            intervals,
            endpoint_error: err,
        }
    }
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk15(f: &impl Fn(f64) -> (f64, f64), lo: f64, hi: f64) -> Panel {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let (fc, ec) = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut sec_err = WGK[7] * ec;
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, e1) = f(c - dx);
        let (f2, e2) = f(c + dx);
        kron += WGK[j] * (f1 + f2);
        sec_err += WGK[j] * (e1 + e2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kron * h;
    let err = ((kron - gauss) * h).abs() + sec_err * h + 50.0 * f64::EPSILON * value.abs();
    Panel { lo, hi, value, err }
}

/// Integrates the invariant measure over `region` in the given chart.
pub fn integrate(region: &dyn SurfaceRegion, chart: Chart, tol: f64) -> MeasureEstimate {
    let f = |x: f64| {
        let s = region.section(chart, x);
        let w = 4.0 * x.abs();
        (s.length() / w, 2.0 * s.intervals.len() as f64 * s.endpoint_error / w)
    };
    let (lo, hi) = region.chart_range(chart);
    let mut heap = BinaryHeap::new();
    for (a, b) in [(lo, hi.min(0.0)), (lo.max(0.0), hi)] {
        if a < b {
            let n = 8;
            let step = (b - a) / n as f64;
            for i in 0..n {
                let p_lo = a + step * i as f64;
                let p_hi = if i + 1 == n { b } else { p_lo + step };
                heap.push(gk15(&f, p_lo, p_hi));
            }
        }
    }
    let total = |heap: &BinaryHeap<Panel>| {
        heap.iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err))
    };
    let (_, mut err) = total(&heap);
    while err > tol && heap.len() < MAX_PANELS {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            break;
        }
        let left = gk15(&f, worst.lo, mid);
        let right = gk15(&f, mid, worst.hi);
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed drift from the running updates.
    let (value, abs_error_bound) = total(&heap);
    MeasureEstimate {
        value,
        abs_error_bound,
    }
}

/// Invariant measure of `K` or the patch, in the `(A, B)` chart.
pub fn measure_of(region: &Region) -> Result<MeasureEstimate> {
    measure_in_chart(region, Chart::AB)
}

pub fn measure_in_chart(region: &Region, chart: Chart) -> Result<MeasureEstimate> {
    match region {
        Region::K => Ok(integrate(&SlabRegion::k(), chart, K_TOLERANCE)),
        Region::Patch(p) => Ok(integrate(
            &EllipsoidRegion::from_patch(p),
            chart,
            PATCH_TOLERANCE,
        )),
        Region::FullBox => Err(Error::InvalidInput(
            "the coefficient box is not a region of the surface".into(),
        )),
    }
}
