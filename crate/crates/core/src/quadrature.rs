//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate falls below `max(abs_tol, rel_tol·|I|)`. Semi-infinite ranges are
//! mapped onto `[0, 1)` with `x = a + t/(1-t)`. A vector-valued variant shares
//! the subdivision across components, which is how families of weights that
//! depend on one mixing variable are integrated in a single pass.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_292_394,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Tolerances and subdivision budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-12, max_intervals: 2000 }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self { abs_tol, rel_tol: 0.0, ..Self::default() }
    }

    pub fn rel(rel_tol: f64) -> Self {
        Self { abs_tol: 0.0, rel_tol, ..Self::default() }
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    for j in 0..10 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quad> {
    if a == b {
        return Ok(Quad { value: 0.0, error: 0.0 });
    }
    let (value, error) = kronrod(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if !total.is_finite() {
            return Err(Error::Numerical(format!("non-finite integrand on [{a}, {b}]")));
        }
        if total_err <= tol {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature { achieved: total_err, requested: tol });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution: keep the estimate and stop refining it
            return Err(Error::Quadrature { achieved: total_err, requested: tol });
        }
        let (v1, e1) = kronrod(&mut f, worst.a, mid);
        let (v2, e2) = kronrod(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // re-sum to remove drift from the running updates
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(Quad { value, error })
}

/// Integrate `f` over `[a, ∞)`.
pub fn integrate_to_inf<F: FnMut(f64) -> f64>(mut f: F, a: f64, opts: QuadOptions) -> Result<Quad> {
    integrate(
        |t| {
            let u = 1.0 - t;
            let x = a + t / u;
            let v = f(x);
            if v == 0.0 { 0.0 } else { v / (u * u) }
        },
        0.0,
        1.0,
        opts,
    )
}

/// Integrate `f` over `[a, b]` after splitting at the given interior points.
pub fn integrate_split<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], opts: QuadOptions) -> Result<Quad> {
    let mut value = 0.0;
    let mut error = 0.0;
    let n = points.len().saturating_sub(1).max(1) as f64;
    let local = QuadOptions { abs_tol: opts.abs_tol / n, ..opts };
    for w in points.windows(2) {
        if w[1] > w[0] {
            let q = integrate(&mut f, w[0], w[1], local)?;
            value += q.value;
            error += q.error;
        }
    }
    Ok(Quad { value, error })
}

fn kronrod_vec<F: FnMut(f64, &mut [f64])>(
    f: &mut F,
    a: f64,
    b: f64,
    dim: usize,
    buf: &mut [f64],
) -> (Vec<f64>, Vec<f64>) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut resk = vec![0.0; dim];
    let mut resg = vec![0.0; dim];
    f(c, buf);
    for k in 0..dim {
        resk[k] = buf[k] * WGK[10];
    }
    for j in 0..10 {
        let x = h * XGK[j];
        f(c - x, buf);
        for k in 0..dim {
            resk[k] += WGK[j] * buf[k];
            if j % 2 == 1 {
                resg[k] += WG[j / 2] * buf[k];
            }
        }
        f(c + x, buf);
        for k in 0..dim {
            resk[k] += WGK[j] * buf[k];
            if j % 2 == 1 {
                resg[k] += WG[j / 2] * buf[k];
            }
        }
    }
    let err = resk.iter().zip(&resg).map(|(k, g)| ((k - g) * h).abs()).collect();
    (resk.into_iter().map(|v| v * h).collect(), err)
}

struct VecPiece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    key: f64,
}

/// Integrate a vector-valued `f(x, out)` over `[a, b]` with shared subdivision.
///
/// Convergence requires every component's summed error estimate to be below
/// `max(abs_tol, rel_tol·max_k |I_k|)`.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Vec<f64>> {
    if dim == 0 || a == b {
        return Ok(vec![0.0; dim]);
    }
    let mut buf = vec![0.0; dim];
    let (value, error) = kronrod_vec(&mut f, a, b, dim, &mut buf);
    let key = error.iter().cloned().fold(0.0, f64::max);
    let mut pieces = vec![VecPiece { a, b, value, error, key }];
    loop {
        let mut total = vec![0.0; dim];
        let mut total_err = vec![0.0; dim];
        for p in &pieces {
            for k in 0..dim {
                total[k] += p.value[k];
                total_err[k] += p.error[k];
            }
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::Numerical("non-finite vector integrand".into()));
        }
        let tol = opts.abs_tol.max(opts.rel_tol * scale);
        let worst_err = total_err.iter().cloned().fold(0.0, f64::max);
        if worst_err <= tol {
            return Ok(total);
        }
        if pieces.len() >= opts.max_intervals {
            return Err(Error::Quadrature { achieved: worst_err, requested: tol });
        }
        let idx = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.key.total_cmp(&y.1.key))
            .map(|(i, _)| i)
            .expect("non-empty");
        let worst = pieces.swap_remove(idx);
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature { achieved: worst_err, requested: tol });
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = kronrod_vec(&mut f, lo, hi, dim, &mut buf);
            let key = error.iter().cloned().fold(0.0, f64::max);
            pieces.push(VecPiece { a: lo, b: hi, value, error, key });
        }
    }
}

/// Vector-valued integral over `[a, ∞)`.
pub fn integrate_vec_to_inf<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    a: f64,
    opts: QuadOptions,
) -> Result<Vec<f64>> {
    integrate_vec(
        |t, out: &mut [f64]| {
            let u = 1.0 - t;
            f(a + t / u, out);
            let jac = 1.0 / (u * u);
            for v in out.iter_mut() {
                *v *= jac;
            }
        },
        dim,
        0.0,
        1.0,
        opts,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
