//! Periodic product lattices induced by rectangle unions.
//!
//! The breakpoints of every box along every axis cut the torus `[0, L)^d`
//! into a product of cells on which the indicator is constant. Perimeters,
//! volumes and (with a separable kernel) all interaction integrals are
//! finite sums over these cells.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Lattice {
    pub d: usize,
    pub period: f64,
    /// Sorted breakpoints per axis, starting with 0, all `< L`.
    pub breaks: Vec<Vec<f64>>,
    pub widths: Vec<Vec<f64>>,
    pub dims: Vec<usize>,
    strides: Vec<usize>,
    pub occ: Vec<bool>,
}

/// Sorted, deduplicated points reduced into `[0, L)`, always containing 0.
pub(crate) fn axis_breaks(period: f64, pts: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = pts
        .into_iter()
        .map(|x| {
            let y = x.rem_euclid(period);
            if y >= period { 0.0 } else { y }
        })
        .chain(std::iter::once(0.0))
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * period);
    v
}

impl Lattice {
    /// Lattice of `boxes` (half-open, inside `[0, L]^d`) refined by `extra`
    /// breakpoints per axis.
    pub fn new(d: usize, period: f64, boxes: &[(Vec<f64>, Vec<f64>)], extra: &[Vec<f64>]) -> Self {
        let breaks: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                let own = boxes.iter().flat_map(|(lo, hi)| [lo[a], hi[a]]);
                let more = extra.get(a).into_iter().flatten().copied();
                axis_breaks(period, own.chain(more))
            })
            .collect();
        let widths: Vec<Vec<f64>> = breaks
            .iter()
            .map(|b| (0..b.len()).map(|k| b.get(k + 1).copied().unwrap_or(period) - b[k]).collect())
            .collect();
        let dims: Vec<usize> = breaks.iter().map(Vec::len).collect();
        let mut strides = vec![1; d];
        for a in 1..d {
            strides[a] = strides[a - 1] * dims[a - 1];
        }
        let total: usize = dims.iter().product();
        let mut lat = Self { d, period, breaks, widths, dims, strides, occ: vec![false; total] };
        for (lo, hi) in boxes {
            let ranges: Vec<(usize, usize)> = (0..d).map(|a| (lat.locate(a, lo[a]), lat.locate_end(a, hi[a]))).collect();
            lat.for_each_in(&ranges, |lat, idx| lat.occ[idx] = true);
        }
        lat
    }

    /// Index of the cell along `axis` whose left edge is `x` (or that contains it).
    pub fn locate(&self, axis: usize, x: f64) -> usize {
        let b = &self.breaks[axis];
        let x = x.rem_euclid(self.period);
        let tol = 1e-13 * self.period;
        b.partition_point(|&v| v <= x + tol).saturating_sub(1)
    }

    /// One past the last cell covered by a box ending at `x`.
    fn locate_end(&self, axis: usize, x: f64) -> usize {
        if x >= self.period * (1.0 - 1e-13) {
            return self.dims[axis];
        }
        self.locate(axis, x)
    }

    fn for_each_in(&mut self, ranges: &[(usize, usize)], mut f: impl FnMut(&mut Self, usize)) {
        if ranges.iter().any(|(a, b)| a >= b) {
            return;
        }
        let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            let idx = self.index(&cur);
            f(self, idx);
            let mut a = 0;
            loop {
                if a == self.d {
                    return;
                }
                cur[a] += 1;
                if cur[a] < ranges[a].1 {
                    break;
                }
                cur[a] = ranges[a].0;
                a += 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn index(&self, c: &[usize]) -> usize {
        c.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut c = vec![0; self.d];
        for a in 0..self.d {
            c[a] = idx % self.dims[a];
            idx /= self.dims[a];
        }
        c
    }

    /// Cell reached from `idx` by `delta` steps along `axis` (periodic).
    pub fn shift(&self, idx: usize, axis: usize, delta: isize) -> usize {
        let n = self.dims[axis] as isize;
        let c = (idx / self.strides[axis]) % self.dims[axis];
        let moved = (c as isize + delta).rem_euclid(n) as usize;
        idx + moved * self.strides[axis] - c * self.strides[axis]
    }

    #[cfg(test)]
    fn cell_volume(&self, c: &[usize]) -> f64 {
        c.iter().enumerate().map(|(a, &k)| self.widths[a][k]).product()
    }

    #[cfg(test)]
    fn contains(&self, x: &[f64]) -> bool {
        let c: Vec<usize> = (0..self.d).map(|a| self.locate(a, x[a])).collect();
        self.occ[self.index(&c)]
    }

    #[cfg(test)]
    fn volume(&self) -> f64 {
        (0..self.len()).filter(|&i| self.occ[i]).map(|i| self.cell_volume(&self.coords(i))).sum()
    }

    /// `Per_{1i}`: area of facets with normal `e_i` across which occupancy changes.
    pub fn per1_axis(&self, axis: usize) -> f64 {
        let mut total = 0.0;
        for idx in 0..self.len() {
            let next = self.shift(idx, axis, 1);
            if self.occ[idx] != self.occ[next] {
                let c = self.coords(idx);
                total += (0..self.d).filter(|&a| a != axis).map(|a| self.widths[a][c[a]]).product::<f64>();
            }
        }
        total
    }

    /// `out[c] = Σ_b m[c_axis][b] x[c with c_axis = b]`.
    pub fn apply_axis(&self, m: &[Vec<f64>], axis: usize, x: &[f64]) -> Vec<f64> {
        let n = self.dims[axis];
        let st = self.strides[axis];
        (0..x.len())
            .map(|idx| {
                let c = (idx / st) % n;
                let base = idx - c * st;
                m[c].iter().enumerate().map(|(b, v)| v * x[base + b * st]).sum()
            })
            .collect()
    }

    /// Cells along `axis` through `idx`, in increasing coordinate order.
    pub fn line(&self, axis: usize, idx: usize) -> impl Iterator<Item = usize> {
        let st = self.strides[axis];
        let base = idx - ((idx / st) % self.dims[axis]) * st;
        (0..self.dims[axis]).map(move |k| base + k * st)
    }

    /// Indices of the cells with coordinate 0 along `axis`.
    pub fn bases(&self, axis: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| (i / self.strides[axis]) % self.dims[axis] == 0).collect()
    }

    /// Cross-sectional area of the cell `idx` orthogonal to `axis`.
    pub fn transverse_area(&self, axis: usize, idx: usize) -> f64 {
        let c = self.coords(idx);
        (0..self.d).filter(|&a| a != axis).map(|a| self.widths[a][c[a]]).product()
    }
}

/// Per-axis interaction data of the separable kernel `e^{-λ|ζ|}` on a
/// periodic 1D partition with widths `ℓ_a` and left edges `x_a`.
///
/// `pair[a][b] = Σ_{n∈ℤ} ∫_{I_a} ∫_{I_b + nL} e^{-λ|u−v|} dv du`.
pub(crate) fn periodic_pair_matrix(edges: &[f64], widths: &[f64], period: f64, lambda: f64) -> Vec<Vec<f64>> {
    let n = edges.len();
    // Σ_{n≥0} e^{-nλL}
    let geo = -1.0 / (-lambda * period).exp_m1();
    let mut out = vec![vec![0.0; n]; n];
    for a in 0..n {
        let fa = -(-lambda * widths[a]).exp_m1();
        for b in 0..n {
            let fb = -(-lambda * widths[b]).exp_m1();
            out[a][b] = if a == b {
                let own = 2.0 * (widths[a] / lambda - fa / (lambda * lambda));
                own + 2.0 * fa * fa / (lambda * lambda) * (-lambda * (period - widths[a])).exp() * geo
            } else {
                // Gap from the end of the left interval to the start of the right one, both ways round.
                let (lo, hi) = if edges[a] < edges[b] { (a, b) } else { (b, a) };
                let g1 = edges[hi] - (edges[lo] + widths[lo]);
                let g2 = period - (edges[hi] + widths[hi]) + edges[lo];
                fa * fb / (lambda * lambda) * ((-lambda * g1).exp() + (-lambda * g2).exp()) * geo
            };
        }
    }
    out
}

/// `∫_{I_b, periodic} e^{-λ|t − v|} dv` for every cell `b`, at a point `t`.
pub(crate) fn periodic_point_vector(t: f64, edges: &[f64], widths: &[f64], period: f64, lambda: f64) -> Vec<f64> {
    let geo = -1.0 / (-lambda * period).exp_m1();
    let t = t.rem_euclid(period);
    edges
        .iter()
        .zip(widths)
        .map(|(&e, &w)| {
            let f = -(-lambda * w).exp_m1();
            let end = e + w;
            if t >= e && t <= end {
                let inner = (2.0 - (-lambda * (t - e)).exp() - (-lambda * (end - t)).exp()) / lambda;
                // Images on both sides: distance to the right image starts at e + L − t.
                let right = (-lambda * (e + period - t)).exp() * f / lambda;
                let left = (-lambda * (t + period - end)).exp() * f / lambda;
                inner + (right + left) * geo
            } else if t < e {
                ((-lambda * (e - t)).exp() + (-lambda * (t + period - end)).exp()) * f / lambda * geo
            } else {
                ((-lambda * (t - end)).exp() + (-lambda * (e + period - t)).exp()) * f / lambda * geo
            }
        })
        .collect()
}
