//! Adaptive quadrature: Gauss–Kronrod on intervals and a tensor
//! Gauss–Legendre rule on polar cells with parent/children error estimates.
//!
//! Both integrators refine the cell with the largest error estimate first and
//! sum the final estimates in creation order, so results are bit-stable for a
//! given integrand, tolerance and budget.

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

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];

const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Nodes and weights of the composite 5-point Gauss–Legendre rule with
/// `panels` equal panels on `[a, b]`.
pub(crate) fn gauss_legendre_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let w = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(5 * panels);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        for k in 0..5 {
            out.push((mid + 0.5 * w * GL5_X[k], 0.5 * w * GL5_W[k]));
        }
    }
    out
}

/// Outcome of a converged integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub cells: usize,
}

/// Integration stopped before reaching the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadFailure<E> {
    Integrand(E),
    Budget {
        estimate: f64,
        error: f64,
        /// Bounds of the cell with the largest remaining error.
        worst: [f64; 4],
    },
}

impl<E> From<E> for QuadFailure<E> {
    fn from(e: E) -> Self {
        QuadFailure::Integrand(e)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key {
    err: f64,
    id: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn converged(err: f64, value: f64, tol: f64) -> bool {
    err <= tol * (1.0 + value.abs())
}

/// Gauss–Kronrod 7/15 on one interval: (kronrod, |kronrod - gauss|).
pub(crate) fn gk15<E>(f: &impl Fn(f64) -> Result<f64, E>, a: f64, b: f64) -> Result<(f64, f64), E> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

/// Globally adaptive integration of `f` over `[a, b]`, starting from
/// `initial` equal pieces.
pub(crate) fn integrate_1d<E>(
    f: impl Fn(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    initial: usize,
    tol: f64,
    max_intervals: usize,
) -> Result<Estimate, QuadFailure<E>> {
    struct Piece {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let n = initial.max(1);
    let mut pieces: Vec<Piece> = Vec::with_capacity(n * 4);
    let mut heap = BinaryHeap::new();
    for k in 0..n {
        let lo = a + (b - a) * k as f64 / n as f64;
        let hi = a + (b - a) * (k + 1) as f64 / n as f64;
        let (value, err) = gk15(&f, lo, hi)?;
        heap.push(Key { err, id: pieces.len() });
        pieces.push(Piece { a: lo, b: hi, value, err });
    }
    let mut live = vec![true; pieces.len()];
    loop {
        let (value, err) = sum_live(pieces.iter().map(|p| (p.value, p.err)), &live);
        if converged(err, value, tol) {
            return Ok(Estimate {
                value,
                error: err,
                cells: heap.len(),
            });
        }
        if heap.len() >= max_intervals {
            let worst = heap.peek().map(|k| &pieces[k.id]).unwrap();
            return Err(QuadFailure::Budget {
                estimate: value,
                error: err,
                worst: [worst.a, worst.b, 0.0, 0.0],
            });
        }
        let Key { id, .. } = heap.pop().unwrap();
        live[id] = false;
        let (lo, hi) = (pieces[id].a, pieces[id].b);
        let mid = 0.5 * (lo + hi);
        for (x0, x1) in [(lo, mid), (mid, hi)] {
            let (value, err) = gk15(&f, x0, x1)?;
            heap.push(Key { err, id: pieces.len() });
            pieces.push(Piece { a: x0, b: x1, value, err });
            live.push(true);
        }
    }
}

fn sum_live(items: impl Iterator<Item = (f64, f64)>, live: &[bool]) -> (f64, f64) {
    let mut value = 0.0;
    let mut err = 0.0;
    for ((v, e), &alive) in items.zip(live) {
        if alive {
            value += v;
            err += e;
        }
    }
    (value, err)
}

/// Tensor 5×5 Gauss–Legendre rule on a rectangle in (rho, theta).
fn gl_rect<E>(
    f: &impl Fn(f64, f64) -> Result<f64, E>,
    r0: f64,
    r1: f64,
    t0: f64,
    t1: f64,
) -> Result<f64, E> {
    let (rc, rh) = (0.5 * (r0 + r1), 0.5 * (r1 - r0));
    let (tc, th) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
    let mut sum = 0.0;
    for i in 0..5 {
        let rho = rc + rh * GL5_X[i];
        let mut row = 0.0;
        for j in 0..5 {
            row += GL5_W[j] * f(rho, tc + th * GL5_X[j])?;
        }
        sum += GL5_W[i] * row;
    }
    Ok(sum * rh * th)
}

#[derive(Clone, Copy)]
struct PolarCell {
    r0: f64,
    r1: f64,
    t0: f64,
    t1: f64,
    quarters: [f64; 4],
    err: f64,
}

impl PolarCell {
    fn new<E>(
        f: &impl Fn(f64, f64) -> Result<f64, E>,
        coarse: f64,
        r0: f64,
        r1: f64,
        t0: f64,
        t1: f64,
    ) -> Result<Self, E> {
        let rm = 0.5 * (r0 + r1);
        let tm = 0.5 * (t0 + t1);
        let quarters = [
            gl_rect(f, r0, rm, t0, tm)?,
            gl_rect(f, rm, r1, t0, tm)?,
            gl_rect(f, r0, rm, tm, t1)?,
            gl_rect(f, rm, r1, tm, t1)?,
        ];
        let fine: f64 = quarters.iter().sum();
        Ok(PolarCell {
            r0,
            r1,
            t0,
            t1,
            quarters,
            err: (fine - coarse).abs(),
        })
    }

    fn value(&self) -> f64 {
        self.quarters.iter().sum()
    }
}

/// Adaptive integration of `f(rho, theta)` (Jacobian included by the caller)
/// over the polar rectangle `[radial_breaks] × [0, 2π]`.
pub(crate) fn integrate_polar<E>(
    f: impl Fn(f64, f64) -> Result<f64, E>,
    radial_breaks: &[f64],
    angular_cells: usize,
    tol: f64,
    max_cells: usize,
) -> Result<Estimate, QuadFailure<E>> {
    let two_pi = std::f64::consts::TAU;
    let mut cells: Vec<PolarCell> = Vec::new();
    let mut heap = BinaryHeap::new();
    for w in radial_breaks.windows(2) {
        let (r0, r1) = (w[0], w[1]);
        for k in 0..angular_cells {
            let t0 = two_pi * k as f64 / angular_cells as f64;
            let t1 = two_pi * (k + 1) as f64 / angular_cells as f64;
            let coarse = gl_rect(&f, r0, r1, t0, t1)?;
            let cell = PolarCell::new(&f, coarse, r0, r1, t0, t1)?;
            heap.push(Key { err: cell.err, id: cells.len() });
            cells.push(cell);
        }
    }
    let mut live = vec![true; cells.len()];
    let mut splits = 0usize;
    loop {
        if splits.is_multiple_of(64) {
            let (value, err) = sum_live(cells.iter().map(|c| (c.value(), c.err)), &live);
            if converged(err, value, tol) {
                return Ok(Estimate {
                    value,
                    error: err,
                    cells: heap.len(),
                });
            }
            if heap.len() >= max_cells {
                let w = heap.peek().map(|k| cells[k.id]).unwrap();
                return Err(QuadFailure::Budget {
                    estimate: value,
                    error: err,
                    worst: [w.r0, w.r1, w.t0, w.t1],
                });
            }
        }
        splits += 1;
        let Key { id, .. } = heap.pop().unwrap();
        live[id] = false;
        let p = cells[id];
        let rm = 0.5 * (p.r0 + p.r1);
        let tm = 0.5 * (p.t0 + p.t1);
        let children = [
            (p.quarters[0], p.r0, rm, p.t0, tm),
            (p.quarters[1], rm, p.r1, p.t0, tm),
            (p.quarters[2], p.r0, rm, tm, p.t1),
            (p.quarters[3], rm, p.r1, tm, p.t1),
        ];
        for (coarse, r0, r1, t0, t1) in children {
            let cell = PolarCell::new(&f, coarse, r0, r1, t0, t1)?;
            heap.push(Key { err: cell.err, id: cells.len() });
            cells.push(cell);
            live.push(true);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn gk_polynomial_exact() {
        let (v, e) = gk15(&|x: f64| Ok::<_, Infallible>(x.powi(9) + 3.0 * x * x), 0.0, 2.0).unwrap();
        assert!((v - (1024.0 / 10.0 + 8.0)).abs() < 1e-12);
        assert!(e < 1e-9);
    }

    #[test]
    fn adaptive_1d_peak() {
        // ∫ 1/(1e-4 + x²) over [-1, 1] = 2·100·atan(100)
        let exact = 200.0 * 100f64.atan();
        let est = integrate_1d(|x| Ok::<_, Infallible>(1.0 / (1e-4 + x * x)), -1.0, 1.0, 4, 1e-12, 10_000)
            .unwrap();
        assert!((est.value - exact).abs() < 1e-9 * exact, "{} vs {}", est.value, exact);
    }

    #[test]
    fn polar_gaussian() {
        // ∫∫ exp(-ρ²) ρ dρ dθ over ρ<3 = π(1 - e^{-9})
        let exact = std::f64::consts::PI * (1.0 - (-9f64).exp());
        let est = integrate_polar(
            |r: f64, _t: f64| Ok::<_, Infallible>((-r * r).exp() * r),
            &[0.0, 1.0, 2.0, 3.0],
            8,
            1e-12,
            100_000,
        )
        .unwrap();
        assert!((est.value - exact).abs() < 1e-10);
    }

    #[test]
    fn budget_failure_reports_worst_cell() {
        let res = integrate_1d(
            |x: f64| Ok::<_, Infallible>(if x > 0.3 { 1.0 } else { 0.0 }),
            0.0,
            1.0,
            1,
            1e-15,
            8,
        );
        match res {
            Err(QuadFailure::Budget { worst, .. }) => assert!(worst[0] <= 0.3 && worst[1] >= 0.3),
            other => panic!("expected budget failure, got {other:?}"),
        }
    }
}
