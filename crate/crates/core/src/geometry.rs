//! Periodic rectangle unions, grid sets and the stripe distance `D_η`.
//!
//! Boxes are half-open, `[lo, hi)` on every axis, with `0 ≤ lo < hi ≤ L`,
//! and are repeated `L`-periodically. A set that crosses the torus seam is
//! stored as several boxes.

use crate::error::{domain, Error, Result};
use crate::lattice::Lattice;
use crate::stripes1d::StripeProfile;
use serde::{Deserialize, Serialize};

/// Axis-aligned half-open box `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    fn overlaps(&self, other: &Rect) -> bool {
        (0..self.lo.len()).all(|a| self.lo[a] < other.hi[a] && other.lo[a] < self.hi[a])
    }
}

/// An `L`-periodic finite union of disjoint boxes in `[0, L)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RectUnionJson", into = "RectUnionJson")]
pub struct RectUnionSet {
    pub d: usize,
    pub period: f64,
    pub boxes: Vec<Rect>,
}

#[derive(Serialize, Deserialize)]
struct RectUnionJson {
    d: usize,
    #[serde(rename = "L")]
    period: f64,
    boxes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl TryFrom<RectUnionJson> for RectUnionSet {
    type Error = Error;
    fn try_from(j: RectUnionJson) -> Result<Self> {
        RectUnionSet::new(j.d, j.period, j.boxes.into_iter().map(|(lo, hi)| Rect { lo, hi }).collect())
    }
}

impl From<RectUnionSet> for RectUnionJson {
    fn from(s: RectUnionSet) -> Self {
        Self { d: s.d, period: s.period, boxes: s.boxes.into_iter().map(|r| (r.lo, r.hi)).collect() }
    }
}

impl RectUnionSet {
    /// Validates dimension, box bounds and pairwise disjointness.
    pub fn new(d: usize, period: f64, boxes: Vec<Rect>) -> Result<Self> {
        if !(2..=3).contains(&d) {
            return domain(format!("rectangle unions support d = 2 or 3, got {d}"));
        }
        if !(period > 0.0 && period.is_finite()) {
            return domain(format!("period must be positive, got {period}"));
        }
        for (k, b) in boxes.iter().enumerate() {
            if b.lo.len() != d || b.hi.len() != d {
                return domain(format!("box {k} has the wrong dimension"));
            }
            for a in 0..d {
                if !(b.lo[a] >= 0.0 && b.lo[a] < b.hi[a] && b.hi[a] <= period) {
                    return domain(format!("box {k} must satisfy 0 ≤ lo < hi ≤ L on axis {a}"));
                }
            }
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].overlaps(&boxes[j]) {
                    return domain(format!("boxes {i} and {j} overlap"));
                }
            }
        }
        Ok(Self { d, period, boxes })
    }

    pub fn empty(d: usize, period: f64) -> Result<Self> {
        Self::new(d, period, Vec::new())
    }

    pub fn volume(&self) -> f64 {
        self.boxes.iter().map(Rect::volume).sum()
    }

    pub fn volume_fraction(&self) -> f64 {
        self.volume() / self.period.powi(self.d as i32)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| {
            (0..self.d).all(|a| {
                let y = x[a].rem_euclid(self.period);
                b.lo[a] <= y && y < b.hi[a]
            })
        })
    }

    pub(crate) fn box_pairs(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.boxes.iter().map(|b| (b.lo.clone(), b.hi.clone())).collect()
    }

    pub(crate) fn lattice(&self) -> Lattice {
        Lattice::new(self.d, self.period, &self.box_pairs(), &[])
    }

    pub(crate) fn lattice_with(&self, extra: &[Vec<f64>]) -> Lattice {
        Lattice::new(self.d, self.period, &self.box_pairs(), extra)
    }

    /// Volume of `E ∩ R` for a region `R = Π [a_j, b_j)` of any position.
    pub fn overlap_volume(&self, a: &[f64], b: &[f64]) -> f64 {
        self.boxes
            .iter()
            .map(|r| (0..self.d).map(|k| periodic_overlap(r.lo[k], r.hi[k], a[k], b[k], self.period)).product::<f64>())
            .sum()
    }

    /// The image under `x ↦ factor·x` (period scaled too).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let boxes = self
            .boxes
            .iter()
            .map(|b| Rect {
                lo: b.lo.iter().map(|x| x * factor).collect(),
                hi: b.hi.iter().map(|x| x * factor).collect(),
            })
            .collect();
        Self::new(self.d, self.period * factor, boxes)
    }

    /// The translate `E + c`, re-split at the torus seam.
    pub fn translated(&self, c: &[f64]) -> Result<Self> {
        let l = self.period;
        let mut boxes = Vec::new();
        for b in &self.boxes {
            let pieces: Vec<Vec<(f64, f64)>> = (0..self.d)
                .map(|a| {
                    let start = (b.lo[a] + c[a]).rem_euclid(l);
                    let start = if start >= l { 0.0 } else { start };
                    split_wrapped(start, b.hi[a] - b.lo[a], l)
                })
                .collect();
            let mut combos: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new())];
            for axis in pieces {
                combos = combos
                    .into_iter()
                    .flat_map(|(lo, hi)| {
                        axis.iter().map(move |&(a, b)| {
                            let mut lo = lo.clone();
                            let mut hi = hi.clone();
                            lo.push(a);
                            hi.push(b);
                            (lo, hi)
                        })
                    })
                    .collect();
            }
            boxes.extend(combos.into_iter().filter(|(lo, hi)| lo.iter().zip(hi).all(|(a, b)| a < b)).map(|(lo, hi)| Rect { lo, hi }));
        }
        Self::new(self.d, l, boxes)
    }

    /// The set with coordinates reordered: new axis `a` is old axis `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.d {
            return domain("permutation length must equal the dimension");
        }
        let boxes = self
            .boxes
            .iter()
            .map(|b| Rect { lo: perm.iter().map(|&p| b.lo[p]).collect(), hi: perm.iter().map(|&p| b.hi[p]).collect() })
            .collect();
        Self::new(self.d, self.period, boxes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite floats serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Domain(format!("invalid set JSON: {e}")))
    }
}

/// Length of `∪_n [lo + nL, hi + nL) ∩ [a, b)`.
fn periodic_overlap(lo: f64, hi: f64, a: f64, b: f64, period: f64) -> f64 {
    let first = ((a - hi) / period).floor() as i64;
    let last = ((b - lo) / period).ceil() as i64;
    (first..=last)
        .map(|n| {
            let s = n as f64 * period;
            ((hi + s).min(b) - (lo + s).max(a)).max(0.0)
        })
        .sum()
}

/// A periodic finite union of half-open intervals in `[0, L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    pub period: f64,
    /// Sorted, disjoint, non-touching intervals inside `[0, L]`.
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn is_full(&self) -> bool {
        self.intervals.len() == 1 && self.intervals[0] == (0.0, self.period)
    }

    /// Boundary points in `[0, L)`; an interval touching both `0` and `L`
    /// continues across the seam, which is then not a boundary point.
    pub fn boundary_points(&self) -> Vec<f64> {
        let l = self.period;
        let mut pts = Vec::new();
        let wraps = self.intervals.first().is_some_and(|i| i.0 == 0.0)
            && self.intervals.last().is_some_and(|i| i.1 >= l);
        for &(a, b) in &self.intervals {
            if !(wraps && a == 0.0) {
                pts.push(a);
            }
            if !(wraps && b >= l) {
                pts.push(if b >= l { 0.0 } else { b });
            }
        }
        pts.sort_by(f64::total_cmp);
        pts
    }

    pub fn to_profile(&self) -> Result<StripeProfile> {
        let pts = self.boundary_points();
        let parity = match pts.len() {
            0 => self.is_full(),
            _ => {
                let mid = 0.5 * (pts[0] + pts[1]);
                self.intervals.iter().any(|&(a, b)| a <= mid && mid < b)
            }
        };
        StripeProfile::new(self.period, pts, parity)
    }
}

/// The slice `E_{t⊥}` along axis `i` through the point `t_perp` (the other
/// `d−1` coordinates, in increasing axis order).
pub fn slice(set: &RectUnionSet, i: usize, t_perp: &[f64]) -> Result<IntervalUnion> {
    if i >= set.d {
        return domain(format!("axis {i} out of range for d = {}", set.d));
    }
    if t_perp.len() != set.d - 1 {
        return domain(format!("expected {} transverse coordinates", set.d - 1));
    }
    let l = set.period;
    let others: Vec<usize> = (0..set.d).filter(|&a| a != i).collect();
    let mut iv: Vec<(f64, f64)> = set
        .boxes
        .iter()
        .filter(|b| {
            others.iter().zip(t_perp).all(|(&a, &t)| {
                let y = t.rem_euclid(l);
                b.lo[a] <= y && y < b.hi[a]
            })
        })
        .map(|b| (b.lo[i], b.hi[i]))
        .collect();
    iv.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (a, b) in iv {
        match merged.last_mut() {
            Some(last) if a <= last.1 + 1e-13 * l => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    Ok(IntervalUnion { period: l, intervals: merged })
}

/// `Per_{1i}(E, [0,L)^d)` for `axis = Some(i)`, `Per₁ = Σ_i Per_{1i}` for `None`.
pub fn per1(set: &RectUnionSet, axis: Option<usize>) -> Result<f64> {
    let lat = set.lattice();
    match axis {
        Some(i) if i >= set.d => domain(format!("axis {i} out of range for d = {}", set.d)),
        Some(i) => Ok(lat.per1_axis(i)),
        None => Ok((0..set.d).map(|a| lat.per1_axis(a)).sum()),
    }
}

/// Periodic stripes orthogonal to `e_i`: `∪_j [phase + 2jh, phase + (2j+1)h)` along axis `i`.
pub fn make_stripes(i: usize, h: f64, phase: f64, period: f64, d: usize) -> Result<RectUnionSet> {
    let pairs = commensurate(h, period)?;
    if i >= d {
        return domain(format!("axis {i} out of range for d = {d}"));
    }
    let mut boxes = Vec::new();
    for j in 0..pairs {
        let start = (phase + 2.0 * j as f64 * h).rem_euclid(period);
        for (a, b) in split_wrapped(start, h, period) {
            let mut lo = vec![0.0; d];
            let mut hi = vec![period; d];
            lo[i] = a;
            hi[i] = b;
            boxes.push(Rect { lo, hi });
        }
    }
    RectUnionSet::new(d, period, boxes)
}

/// Planar checkerboard with square cells of side `h`.
pub fn make_checkerboard(h: f64, period: f64) -> Result<RectUnionSet> {
    let pairs = commensurate(h, period)?;
    let n = 2 * pairs;
    let step = period / n as f64;
    let mut boxes = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if (a + b) % 2 == 0 {
                let lo = vec![a as f64 * step, b as f64 * step];
                let hi = vec![edge(a + 1, n, period), edge(b + 1, n, period)];
                boxes.push(Rect { lo, hi });
            }
        }
    }
    RectUnionSet::new(2, period, boxes)
}

fn edge(k: usize, n: usize, period: f64) -> f64 {
    if k == n { period } else { k as f64 * period / n as f64 }
}

/// Number `k` of stripe pairs when `L = 2k·h`; errors unless `L/(2h)` is an integer.
pub fn commensurate(h: f64, period: f64) -> Result<usize> {
    if !(h > 0.0 && period > 0.0) {
        return domain("width and period must be positive");
    }
    let r = period / (2.0 * h);
    let k = r.round();
    if k < 1.0 || (r - k).abs() > 1e-9 * r {
        return domain(format!("period {period} is not an even multiple of the width {h}"));
    }
    Ok(k as usize)
}

fn split_wrapped(start: f64, len: f64, period: f64) -> Vec<(f64, f64)> {
    let end = start + len;
    if end <= period * (1.0 + 1e-14) {
        vec![(start, end.min(period))]
    } else {
        vec![(start, period), (0.0, end - period)]
    }
}

/// Planar binary field on an `n × n` grid of cells of side `L/n`.
///
/// Cell `(i, j)` covers `[iL/n, (i+1)L/n) × [jL/n, (j+1)L/n)` and is stored
/// at `j·n + i` (row-major, rows along axis 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridJson", into = "GridJson")]
pub struct GridSet {
    pub n: usize,
    pub period: f64,
    pub cells: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    d: usize,
    n: usize,
    #[serde(rename = "L")]
    period: f64,
    /// Run lengths over the row-major cells, alternating 0/1, starting with 0.
    runs: Vec<u32>,
}

impl TryFrom<GridJson> for GridSet {
    type Error = Error;
    fn try_from(j: GridJson) -> Result<Self> {
        if j.d != 2 {
            return domain("grid sets are planar");
        }
        GridSet::new(j.n, j.period, decode_runs(&j.runs, j.n * j.n)?)
    }
}

impl From<GridSet> for GridJson {
    fn from(g: GridSet) -> Self {
        Self { d: 2, n: g.n, period: g.period, runs: encode_runs(&g.cells) }
    }
}

fn encode_runs(cells: &[bool]) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut count = 0u32;
    for &c in cells {
        if c == current {
            count += 1;
        } else {
            runs.push(count);
            current = c;
            count = 1;
        }
    }
    runs.push(count);
    runs
}

fn decode_runs(runs: &[u32], total: usize) -> Result<Vec<bool>> {
    let mut cells = Vec::with_capacity(total);
    for (k, &r) in runs.iter().enumerate() {
        cells.extend(std::iter::repeat(k % 2 == 1).take(r as usize));
    }
    if cells.len() != total {
        return domain(format!("run lengths cover {} cells, expected {total}", cells.len()));
    }
    Ok(cells)
}

impl GridSet {
    pub const MIN_RESOLUTION: usize = 8;

    pub fn new(n: usize, period: f64, cells: Vec<bool>) -> Result<Self> {
        if n < Self::MIN_RESOLUTION {
            return domain(format!("grid resolution must be at least {}, got {n}", Self::MIN_RESOLUTION));
        }
        if !(period > 0.0 && period.is_finite()) {
            return domain(format!("period must be positive, got {period}"));
        }
        if cells.len() != n * n {
            return domain(format!("expected {} cells, got {}", n * n, cells.len()));
        }
        Ok(Self { n, period, cells })
    }

    pub fn filled(n: usize, period: f64, value: bool) -> Result<Self> {
        Self::new(n, period, vec![value; n * n])
    }

    pub fn cell_size(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[(j % self.n) * self.n + i % self.n]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let n = self.n;
        self.cells[(j % n) * n + i % n] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.cell_size().powi(2)
    }

    /// `Per₁` from neighbouring cell pairs.
    pub fn per1(&self) -> f64 {
        let n = self.n;
        let mut faces = 0usize;
        for j in 0..n {
            for i in 0..n {
                let c = self.get(i, j);
                faces += (c != self.get(i + 1, j)) as usize + (c != self.get(i, j + 1)) as usize;
            }
        }
        faces as f64 * self.cell_size()
    }

    /// Rasterize: a cell is occupied when its center is in `set`.
    pub fn rasterize(set: &RectUnionSet, n: usize) -> Result<Self> {
        if set.d != 2 {
            return domain("grid sets are planar");
        }
        let c = set.period / n as f64;
        let cells = (0..n * n)
            .map(|k| set.contains(&[((k % n) as f64 + 0.5) * c, ((k / n) as f64 + 0.5) * c]))
            .collect();
        Self::new(n, set.period, cells)
    }

    /// Exact conversion: one box per maximal horizontal run of each row.
    pub fn to_rect_union(&self) -> RectUnionSet {
        let n = self.n;
        let at = |k: usize| edge(k, n, self.period);
        let mut boxes = Vec::new();
        for j in 0..n {
            let mut i = 0;
            while i < n {
                if self.get(i, j) {
                    let start = i;
                    while i < n && self.get(i, j) {
                        i += 1;
                    }
                    boxes.push(Rect { lo: vec![at(start), at(j)], hi: vec![at(i), at(j + 1)] });
                } else {
                    i += 1;
                }
            }
        }
        RectUnionSet::new(2, self.period, boxes).expect("row runs are disjoint")
    }

    /// Byte layout: `n` as u32 LE, `L` as f64 LE, run count as u32 LE, then
    /// the run lengths as u32 LE (row-major, alternating 0/1, starting with 0).
    pub fn to_rle_bytes(&self) -> Vec<u8> {
        let runs = encode_runs(&self.cells);
        let mut out = Vec::with_capacity(16 + 4 * runs.len());
        out.extend((self.n as u32).to_le_bytes());
        out.extend(self.period.to_le_bytes());
        out.extend((runs.len() as u32).to_le_bytes());
        for r in runs {
            out.extend(r.to_le_bytes());
        }
        out
    }

    pub fn from_rle_bytes(bytes: &[u8]) -> Result<Self> {
        let word = |k: usize| -> Result<u32> {
            bytes
                .get(k..k + 4)
                .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
                .ok_or_else(|| Error::Domain("truncated run-length block".into()))
        };
        let n = word(0)? as usize;
        let period = f64::from_le_bytes(
            bytes.get(4..12).ok_or_else(|| Error::Domain("truncated run-length block".into()))?.try_into().expect("8 bytes"),
        );
        let count = word(12)? as usize;
        let runs = (0..count).map(|k| word(16 + 4 * k)).collect::<Result<Vec<_>>>()?;
        Self::new(n, period, decode_runs(&runs, n * n)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite floats serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Domain(format!("invalid grid JSON: {e}")))
    }
}

/// Stripes along axis `i` whose interfaces `x_i = kh` are displaced by
/// `amplitude · sin(2π · mode · x_⊥ / L)`, rasterized at cell centers.
pub fn make_perturbed_stripes(i: usize, h: f64, amplitude: f64, mode: u32, period: f64, n: usize) -> Result<GridSet> {
    commensurate(h, period)?;
    if i >= 2 {
        return domain("perturbed stripes are planar");
    }
    let c = period / n as f64;
    let cells = (0..n * n)
        .map(|k| {
            let x = [((k % n) as f64 + 0.5) * c, ((k / n) as f64 + 0.5) * c];
            let along = x[i];
            let across = x[1 - i];
            let shift = amplitude * (2.0 * std::f64::consts::PI * mode as f64 * across / period).sin();
            let u = (along - shift).rem_euclid(2.0 * h);
            u < h
        })
        .collect();
    GridSet::new(n, period, cells)
}

/// The cube `Q_l(z)` of side `l` centered at `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Self {
        Self { center, side }
    }

    /// The whole period cell `[0, L)^d`.
    pub fn full(d: usize, period: f64) -> Self {
        Self { center: vec![0.5 * period; d], side: period }
    }
}

/// Result of the column dynamic programme for `D^i_η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeDistance {
    pub axis: usize,
    pub value: f64,
    pub n_bins: usize,
    pub bin_width: f64,
    /// Bound on `value − D^i_η` from restricting interfaces to bin edges.
    pub discretization_bound: f64,
}

/// Default number of columns of the stripe-distance programme.
pub const DEFAULT_BINS: usize = 256;

/// `D^i_η(E, Q_l(z))`: the `L¹` distance (normalized by `l^d`) from `E ∩ Q`
/// to the closest union of stripes orthogonal to `e_i` whose interfaces are
/// at least `η` apart.
///
/// Axis `i` of the cube is cut into `n_bins` columns and candidate
/// interfaces sit on column edges. When the cube is a full period the
/// separation constraint also applies across the seam.
pub fn stripe_distance(set: &RectUnionSet, i: usize, eta: f64, cube: &Cube, n_bins: usize) -> Result<StripeDistance> {
    let d = set.d;
    if i >= d || cube.center.len() != d {
        return domain("axis or cube dimension out of range");
    }
    let l = cube.side;
    if !(l > 0.0 && l <= set.period * (1.0 + 1e-12)) {
        return domain(format!("cube side must lie in (0, L], got {l}"));
    }
    if !(eta > 0.0) || eta >= l {
        return domain(format!("need 0 < η < l, got η = {eta}, l = {l}"));
    }
    if n_bins < 2 {
        return domain("need at least two columns");
    }
    let w = l / n_bins as f64;
    let lo: Vec<f64> = cube.center.iter().map(|c| c - 0.5 * l).collect();
    let cross = l.powi(d as i32 - 1);
    let mut cost = Vec::with_capacity(n_bins);
    for c in 0..n_bins {
        let mut a = lo.clone();
        let mut b: Vec<f64> = lo.iter().map(|x| x + l).collect();
        a[i] = lo[i] + c as f64 * w;
        b[i] = a[i] + w;
        let filled = (set.overlap_volume(&a, &b) / (w * cross)).clamp(0.0, 1.0);
        // Mismatch if the column is declared out / in, as a fraction of the cube.
        cost.push([filled * w / l, (1.0 - filled) * w / l]);
    }
    let run = ((eta / w) - 1e-9).ceil().max(1.0) as usize;
    let periodic = (l - set.period).abs() <= 1e-12 * set.period;
    let value = if periodic { dp_periodic(&cost, run) } else { dp_linear(&cost, run) };
    let switches = (l / eta).floor() + 1.0;
    Ok(StripeDistance { axis: i, value, n_bins, bin_width: w, discretization_bound: switches * w / l })
}

/// `min_i D^i_η`.
pub fn stripe_distance_min(set: &RectUnionSet, eta: f64, cube: &Cube, n_bins: usize) -> Result<StripeDistance> {
    let mut best: Option<StripeDistance> = None;
    for i in 0..set.d {
        let r = stripe_distance(set, i, eta, cube, n_bins)?;
        if best.as_ref().map_or(true, |b| r.value < b.value) {
            best = Some(r);
        }
    }
    Ok(best.expect("d ≥ 2"))
}

// State: (phase, run length capped at `run`). A switch needs a completed run.
fn dp_sweep(cost: &[[f64; 2]], run: usize, mut state: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    for col in cost {
        let mut next = vec![[f64::INFINITY; 2]; run + 1];
        for r in 1..=run {
            for p in 0..2 {
                let v = state[r][p];
                if !v.is_finite() {
                    continue;
                }
                let stay = (r + 1).min(run);
                next[stay][p] = next[stay][p].min(v + col[p]);
                if r == run {
                    next[1][1 - p] = next[1][1 - p].min(v + col[1 - p]);
                }
            }
        }
        state = next;
    }
    state
}

fn dp_linear(cost: &[[f64; 2]], run: usize) -> f64 {
    let mut init = vec![[f64::INFINITY; 2]; run + 1];
    init[run] = [cost[0][0], cost[0][1]];
    let end = dp_sweep(&cost[1..], run, init);
    end.iter().flat_map(|s| s.iter().copied()).fold(f64::INFINITY, f64::min)
}

fn dp_periodic(cost: &[[f64; 2]], run: usize) -> f64 {
    let n = cost.len();
    let constant = (0..2).map(|p| cost.iter().map(|c| c[p]).sum::<f64>()).fold(f64::INFINITY, f64::min);
    if 2 * run > n {
        return constant;
    }
    let mut best = constant;
    let mut rotated = Vec::with_capacity(n);
    for start in 0..n {
        rotated.clear();
        rotated.extend(cost[start..].iter().chain(&cost[..start]).copied());
        for p in 0..2 {
            let mut init = vec![[f64::INFINITY; 2]; run + 1];
            init[1][p] = rotated[0][p];
            let end = dp_sweep(&rotated[1..], run, init);
            // Closing the circle switches back to phase p at the start edge.
            best = best.min(end[run][1 - p]);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stripes_slice_to_their_profile() {
        let s = make_stripes(0, 1.0, 0.25, 4.0, 2).unwrap();
        for t in [0.0, 1.3, 3.99] {
            let u = slice(&s, 0, &[t]).unwrap();
            assert_eq!(u.boundary_points(), vec![0.25, 1.25, 2.25, 3.25]);
            assert!((u.measure() - 2.0).abs() < 1e-15);
        }
        let across = slice(&s, 1, &[0.5]).unwrap();
        assert!(across.is_full() && across.boundary_points().is_empty());
        let outside = slice(&s, 1, &[1.5]).unwrap();
        assert!(outside.intervals.is_empty());
    }

    #[test]
    fn wrapped_stripe_has_no_seam_boundary() {
        let s = make_stripes(0, 1.0, 1.5, 4.0, 2).unwrap();
        let u = slice(&s, 0, &[0.0]).unwrap();
        assert_eq!(u.boundary_points(), vec![0.5, 1.5, 2.5, 3.5]);
        let p = u.to_profile().unwrap();
        assert!(p.contains(0.2) && !p.contains(1.0) && p.contains(1.7));
    }

    #[test]
    fn checkerboard_slices_alternate() {
        let c = make_checkerboard(1.0, 4.0).unwrap();
        let a = slice(&c, 0, &[0.5]).unwrap().boundary_points();
        let b = slice(&c, 0, &[1.5]).unwrap().to_profile().unwrap();
        assert_eq!(a, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(b.contains(1.5) && !b.contains(0.5));
    }

    #[test]
    fn perimeter_examples() {
        let s = make_stripes(0, 1.0, 0.0, 2.0, 2).unwrap();
        assert!((per1(&s, None).unwrap() - 4.0).abs() < 1e-15);
        let sq = RectUnionSet::new(2, 4.0, vec![Rect::new(vec![1.0, 1.0], vec![2.0, 2.0])]).unwrap();
        assert!((per1(&sq, None).unwrap() - 4.0).abs() < 1e-15);
        let cb = make_checkerboard(1.0, 2.0).unwrap();
        assert!((per1(&cb, None).unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn constructors_have_half_volume() {
        assert!((make_stripes(1, 0.5, 0.1, 3.0, 3).unwrap().volume_fraction() - 0.5).abs() < 1e-14);
        assert!((make_checkerboard(1.0, 2.0).unwrap().volume_fraction() - 0.5).abs() < 1e-14);
        assert!(make_stripes(0, 0.7, 0.0, 2.0, 2).is_err());
        assert!(make_checkerboard(0.7, 2.0).is_err());
    }

    #[test]
    fn overlapping_boxes_rejected() {
        let r = RectUnionSet::new(
            2,
            2.0,
            vec![Rect::new(vec![0.0, 0.0], vec![1.0, 1.0]), Rect::new(vec![0.5, 0.5], vec![1.5, 1.5])],
        );
        assert!(r.is_err());
        let touching = RectUnionSet::new(
            2,
            2.0,
            vec![Rect::new(vec![0.0, 0.0], vec![1.0, 1.0]), Rect::new(vec![1.0, 0.0], vec![2.0, 1.0])],
        );
        assert!(touching.is_ok());
    }

    #[test]
    fn flat_perturbation_matches_rasterized_stripes() {
        let g = make_perturbed_stripes(0, 0.5, 0.0, 3, 2.0, 16).unwrap();
        let r = GridSet::rasterize(&make_stripes(0, 0.5, 0.0, 2.0, 2).unwrap(), 16).unwrap();
        assert_eq!(g.cells, r.cells);
        let wavy = make_perturbed_stripes(0, 0.5, 0.1, 1, 2.0, 32).unwrap();
        assert!(wavy.per1() > g.per1());
    }

    #[test]
    fn grid_json_and_rle_roundtrip() {
        let g = make_perturbed_stripes(1, 0.5, 0.12, 2, 2.0, 24).unwrap();
        assert_eq!(GridSet::from_json(&g.to_json()).unwrap(), g);
        assert_eq!(GridSet::from_rle_bytes(&g.to_rle_bytes()).unwrap(), g);
        let s = make_checkerboard(0.5, 2.0).unwrap();
        assert_eq!(RectUnionSet::from_json(&s.to_json()).unwrap(), s);
        assert!(GridSet::from_rle_bytes(&g.to_rle_bytes()[..10]).is_err());
    }

    #[test]
    fn stripes_have_zero_distance_in_their_direction() {
        let s = make_stripes(0, 0.5, 0.0, 2.0, 2).unwrap();
        let full = Cube::full(2, 2.0);
        assert!(stripe_distance(&s, 0, 0.3, &full, 256).unwrap().value < 1e-14);
        let local = Cube::new(vec![0.7, 1.1], 1.2);
        assert!(stripe_distance(&s, 0, 0.3, &local, 240).unwrap().value < 1e-14);
        let other = stripe_distance(&s, 1, 0.3, &full, 256).unwrap().value;
        assert!((other - 0.5).abs() < 1e-12);
        assert_eq!(stripe_distance_min(&s, 0.3, &full, 256).unwrap().axis, 0);
    }

    #[test]
    fn eta_must_be_below_cube_side() {
        let s = make_stripes(0, 0.5, 0.0, 2.0, 2).unwrap();
        assert!(stripe_distance(&s, 0, 2.0, &Cube::full(2, 2.0), 64).is_err());
    }

    // Enumerates every column pattern with circular runs of at least `run` columns.
    fn brute_force(cost: &[[f64; 2]], run: usize) -> f64 {
        let n = cost.len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let bit = |k: usize| ((mask >> (k % n)) & 1) as usize;
            let switches: Vec<usize> = (0..n).filter(|&k| bit(k) != bit(k + n - 1)).collect();
            let ok = switches.is_empty()
                || (0..switches.len()).all(|a| {
                    let next = switches[(a + 1) % switches.len()];
                    (next + n - switches[a] - 1) % n + 1 >= run
                });
            if ok {
                best = best.min((0..n).map(|k| cost[k][bit(k)]).sum());
            }
        }
        best
    }

    #[test]
    fn periodic_dp_matches_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let cost: Vec<[f64; 2]> = (0..12)
                .map(|_| {
                    let f: f64 = rng.gen();
                    [f / 12.0, (1.0 - f) / 12.0]
                })
                .collect();
            for run in 1..=6 {
                let a = dp_periodic(&cost, run);
                let b = brute_force(&cost, run);
                assert!((a - b).abs() < 1e-14, "run {run}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn transverse_stripes_on_coarse_grid_match_enumeration() {
        let s = make_stripes(1, 0.5, 0.0, 2.0, 2).unwrap();
        let r = stripe_distance(&s, 0, 0.4, &Cube::full(2, 2.0), 12).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
    }

    fn arb_set() -> impl Strategy<Value = RectUnionSet> {
        proptest::collection::vec((0u8..8, 0u8..8, 1u8..4, 1u8..4), 1..6).prop_map(|raw| {
            let mut boxes: Vec<Rect> = Vec::new();
            for (x, y, w, h) in raw {
                let r = Rect::new(
                    vec![x as f64 * 0.25, y as f64 * 0.25],
                    vec![((x + w).min(8)) as f64 * 0.25, ((y + h).min(8)) as f64 * 0.25],
                );
                if !boxes.iter().any(|b| b.overlaps(&r)) {
                    boxes.push(r);
                }
            }
            RectUnionSet::new(2, 2.0, boxes).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn per1_is_sum_of_directional(s in arb_set()) {
            let total = per1(&s, None).unwrap();
            let parts = per1(&s, Some(0)).unwrap() + per1(&s, Some(1)).unwrap();
            prop_assert_eq!(total, parts);
        }

        #[test]
        fn per1_by_slicing(s in arb_set()) {
            // Fubini: Per_{1i} = ∫ #∂E_slice dt⊥, the slice count is constant between box edges.
            for i in 0..2 {
                let mut cuts: Vec<f64> = s.boxes.iter().flat_map(|b| [b.lo[1 - i], b.hi[1 - i]]).collect();
                cuts.extend([0.0, 2.0]);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let integral: f64 = cuts.windows(2).map(|w| {
                    let n = slice(&s, i, &[0.5 * (w[0] + w[1])]).unwrap().boundary_points().len();
                    n as f64 * (w[1] - w[0])
                }).sum();
                prop_assert!((integral - per1(&s, Some(i)).unwrap()).abs() < 1e-12);
            }
        }

        #[test]
        fn grid_conversion_preserves_volume_and_perimeter(bits in proptest::collection::vec(any::<bool>(), 100)) {
            let g = GridSet::new(10, 3.0, bits).unwrap();
            let r = g.to_rect_union();
            prop_assert!((r.volume() - g.volume()).abs() < 1e-12);
            prop_assert!((per1(&r, None).unwrap() - g.per1()).abs() < 1e-12);
            prop_assert_eq!(GridSet::rasterize(&r, 10).unwrap(), g);
        }

        #[test]
        fn stripe_distance_monotone_in_eta(s in arb_set(), a in 0.05f64..0.9, b in 0.05f64..0.9) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let cube = Cube::full(2, 2.0);
            for i in 0..2 {
                let x = stripe_distance(&s, i, lo, &cube, 64).unwrap().value;
                let y = stripe_distance(&s, i, hi, &cube, 64).unwrap().value;
                prop_assert!(x <= y + 1e-14);
                prop_assert!((0.0..=1.0).contains(&x) && y <= 1.0);
            }
        }
    }
}
