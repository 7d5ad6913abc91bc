//! One-dimensional stripe energies.
//!
//! A periodic 1D profile is a finite list of boundary points per period. For
//! such sets every quantity of the 1D functional reduces to the double tail
//! `Φ2(x) = ∫_x^∞ Φ1` of the sliced kernel, since
//! `∫_0^L |χ(s) − χ(s+ρ)| ds` is piecewise linear in `ρ` with kinks at the
//! pairwise point differences. All energies below are therefore exact sums
//! over point pairs and periodic images, truncated once `Φ2` drops below
//! `1e-17` of the retained terms.

use crate::error::{domain, Error, Result};
use crate::kernels::{KernelSpec, RescaleParams, SlicedKernel};
use crate::optimize::{grid_golden, nelder_mead, Min1, NelderMeadOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// An `L`-periodic subset of `ℝ` with `2k` boundary points per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeProfile {
    pub period: f64,
    pub boundary_points: Vec<f64>,
    /// Whether `(s₁, s₂)` belongs to the set.
    pub parity: bool,
}

impl StripeProfile {
    pub fn new(period: f64, boundary_points: Vec<f64>, parity: bool) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return domain(format!("period must be positive, got {period}"));
        }
        if boundary_points.len() % 2 != 0 {
            return domain(format!("need an even number of boundary points, got {}", boundary_points.len()));
        }
        if boundary_points.iter().any(|&s| !(0.0..period).contains(&s)) {
            return domain("boundary points must lie in [0, L)");
        }
        if boundary_points.windows(2).any(|w| w[0] >= w[1]) {
            return domain("boundary points must be strictly increasing");
        }
        Ok(Self { period, boundary_points, parity })
    }

    /// The empty set (no boundary).
    pub fn empty(period: f64) -> Result<Self> {
        Self::new(period, Vec::new(), false)
    }

    /// Number of boundary points per period.
    pub fn len(&self) -> usize {
        self.boundary_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary_points.is_empty()
    }

    /// Membership of `x` (any real) in the periodic set.
    pub fn contains(&self, x: f64) -> bool {
        let x = x.rem_euclid(self.period);
        let below = self.boundary_points.partition_point(|&s| s <= x);
        (below % 2 == 1) == self.parity
    }

    /// The profile shifted by `c` (points taken modulo `L`).
    pub fn shifted(&self, c: f64) -> Result<Self> {
        self.remap(|s| s + c, |t| t - c)
    }

    /// The mirror image `s ↦ L − s`.
    pub fn reflected(&self) -> Result<Self> {
        let l = self.period;
        self.remap(|s| l - s, |t| l - t)
    }

    fn remap(&self, f: impl Fn(f64) -> f64, inverse: impl Fn(f64) -> f64) -> Result<Self> {
        let l = self.period;
        let mut pts: Vec<f64> = self
            .boundary_points
            .iter()
            .map(|&s| {
                let t = f(s).rem_euclid(l);
                if t >= l { 0.0 } else { t }
            })
            .collect();
        pts.sort_by(f64::total_cmp);
        if pts.len() < 2 {
            return Self::new(l, pts, self.parity);
        }
        let parity = self.contains(inverse(0.5 * (pts[0] + pts[1])));
        Self::new(l, pts, parity)
    }

    /// Boundary point `j` with its periodic neighbours `(s⁻, s, s⁺)`, unwrapped
    /// so that `s⁻ < s < s⁺`.
    pub fn neighbors(&self, j: usize) -> (f64, f64, f64) {
        (self.point_ext(j as isize - 1), self.boundary_points[j], self.point_ext(j as isize + 1))
    }

    /// `s_i` extended periodically to all integers `i`.
    fn point_ext(&self, i: isize) -> f64 {
        let n = self.len() as isize;
        let q = i.div_euclid(n);
        self.boundary_points[i.rem_euclid(n) as usize] + q as f64 * self.period
    }

    /// Index of the boundary point closest to `s`.
    pub fn index_of(&self, s: f64) -> Option<usize> {
        self.boundary_points
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - s).abs().total_cmp(&(b.1 - s).abs()))
            .filter(|(_, &p)| (p - s).abs() <= 1e-12 * self.period.max(1.0))
            .map(|(i, _)| i)
    }

    /// Lengths of the consecutive gaps `s_{j+1} − s_j` (last one wraps).
    pub fn gaps(&self) -> Vec<f64> {
        let n = self.len() as isize;
        (0..n).map(|j| self.point_ext(j + 1) - self.point_ext(j)).collect()
    }

    /// Sup-distance to the equispaced profile with the same number of points,
    /// minimized over translations.
    pub fn distance_to_equispaced(&self) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        let step = self.period / n as f64;
        (0..n)
            .map(|a| {
                let deltas: Vec<f64> =
                    (0..n).map(|j| self.point_ext((a + j) as isize) - j as f64 * step).collect();
                let hi = deltas.iter().cloned().fold(f64::MIN, f64::max);
                let lo = deltas.iter().cloned().fold(f64::MAX, f64::min);
                0.5 * (hi - lo)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Periodic stripes `E_h = ∪_j [2jh, (2j+1)h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicStripes1D {
    pub h: f64,
}

impl PeriodicStripes1D {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return domain(format!("stripe width must be positive, got {h}"));
        }
        Ok(Self { h })
    }

    /// The stripes as a profile on `[0, L)`; `L` must be an even multiple of `h`.
    pub fn profile(&self, period: f64) -> Result<StripeProfile> {
        let ratio = period / self.h;
        let count = ratio.round();
        if count < 2.0 || (ratio - count).abs() > 1e-9 * ratio || count as u64 % 2 != 0 {
            return domain(format!("period {period} is not an even multiple of the width {}", self.h));
        }
        let n = count as usize;
        let pts = (0..n).map(|j| j as f64 * period / n as f64).collect();
        StripeProfile::new(period, pts, true)
    }
}

/// Distance beyond which `Φ2` is below `floor`.
fn tail_cutoff(k: &SlicedKernel, floor: f64) -> f64 {
    let mut x = 1.0 / k.spec.mu;
    while k.phi2(x) > floor && x < 1e6 / k.spec.mu {
        x *= 2.0;
    }
    x
}

/// `Σ σ_j σ_{j'} Φ2(|s_j − s_{j'} + nL|)` over all `(j, j', n)` except the
/// diagonal `j = j', n = 0`, with `σ_j = (−1)^j`.
pub(crate) fn pair_sum(points: &[f64], period: f64, k: &SlicedKernel, cutoff: f64) -> f64 {
    let n = points.len();
    let images = (cutoff / period).ceil() as i64 + 1;
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            let base = points[a] - points[b];
            let mut acc = 0.0;
            for m in -images..=images {
                if a == b && m == 0 {
                    continue;
                }
                let x = (base + m as f64 * period).abs();
                if x <= cutoff {
                    acc += k.phi2(x);
                }
            }
            total += sign * acc;
        }
    }
    total
}

/// `N·J − ∫_ℝ ∫_0^L |χ(s) − χ(s+ρ)| K̂(ρ) ds dρ` for a slice with boundary
/// points `points`, given `excess = J − ∫_ℝ |ρ| K̂`.
pub(crate) fn slice_bracket(points: &[f64], period: f64, k: &SlicedKernel, excess: f64) -> f64 {
    let n = points.len();
    if n == 0 {
        return 0.0;
    }
    let cutoff = tail_cutoff(k, 1e-18 * k.phi2(0.0));
    n as f64 * excess - 2.0 * pair_sum(points, period, k, cutoff)
}

/// `J_M − ∫_ℝ |ρ| K̂̄_M = −2 ∫_1^∞ ρ K̂̄_M`, without cancellation.
pub(crate) fn rescaled_excess(k: &SlicedKernel) -> f64 {
    -2.0 * (k.phi2(1.0) + k.phi1(1.0))
}

fn bracket_1d(points: &[f64], period: f64, k: &SlicedKernel) -> f64 {
    slice_bracket(points, period, k, rescaled_excess(k))
}

/// `F¹_{M,L}(E) = (M²/L)(Per(E,[0,L))·J_M − ∫_ℝ∫_0^L |χ(s)−χ(s+ρ)| K̂̄_M(ρ) ds dρ)`.
pub fn profile_energy_1d(profile: &StripeProfile, params: &RescaleParams) -> f64 {
    let k = params.sliced();
    params.m * params.m / profile.period * bracket_1d(&profile.boundary_points, profile.period, &k)
}

/// `e_M(h)` for the unscaled kernel `K_1` in dimension `d`.
pub fn periodic_stripe_energy_unrescaled(h: f64, m: f64, d: usize) -> Result<f64> {
    if !(h > 0.0) || !(m > 0.0) {
        return domain(format!("width and M must be positive, got h = {h}, M = {m}"));
    }
    let k = KernelSpec::yukawa(d, 1.0)?.sliced(1.0);
    Ok(stripe_bracket(h, m, &k) * 2.0 / h)
}

// 2 Σ_{j≥1} (−1)^{j+1} Φ2(jh) − Φ2(c) − c Φ1(c): the stripe energy without its prefactor.
fn stripe_bracket(h: f64, c: f64, k: &SlicedKernel) -> f64 {
    let head = k.phi2(c) + c * k.phi1(c);
    let first = k.phi2(h);
    let floor = 1e-17 * head.abs().max(first.abs()).max(f64::MIN_POSITIVE);
    let mut alt = 0.0;
    let mut j = 1u64;
    loop {
        let term = k.phi2(j as f64 * h);
        alt += if j % 2 == 1 { term } else { -term };
        if term < floor || j > 1_000_000 {
            break;
        }
        j += 1;
    }
    2.0 * alt - head
}

/// Rescaled stripe energy `F¹_{M,2h}(E_h)`; equals `(−1/ẽ*_M) e_M(Mh)`.
pub fn periodic_stripe_energy_rescaled(h: f64, params: &RescaleParams) -> Result<f64> {
    if !(h > 0.0) {
        return domain(format!("width must be positive, got {h}"));
    }
    let k = params.sliced();
    Ok(2.0 * params.m * params.m / h * stripe_bracket(h, 1.0, &k))
}

/// `g(h) = (1/h) Σ_{k≥1} ∫_0^h ∫_{2kh}^{(2k+1)h} K̂_1(u − v) dv du`.
pub fn lattice_sum_g(h: f64, d: usize) -> Result<f64> {
    if !(h > 0.0) {
        return domain(format!("width must be positive, got {h}"));
    }
    let k = KernelSpec::yukawa(d, 1.0)?.sliced(1.0);
    let floor = 1e-17 * k.phi2(h);
    let mut total = 0.0;
    for j in 1u64.. {
        let a = (2 * j) as f64 * h;
        let term = k.phi2(a - h) - 2.0 * k.phi2(a) + k.phi2(a + h);
        total += term;
        if k.phi2(a - h) < floor {
            break;
        }
    }
    Ok(total / h)
}

/// Central difference of [`lattice_sum_g`].
pub fn lattice_sum_g_derivative(h: f64, d: usize) -> Result<f64> {
    let step = 1e-4 * h;
    Ok((lattice_sum_g(h + step, d)? - lattice_sum_g(h - step, d)?) / (2.0 * step))
}

/// Optimal width and energy of unrescaled periodic stripes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalWidth {
    pub m: f64,
    pub d: usize,
    pub h_star: f64,
    pub e_star: f64,
    /// Set when `M < 4`, outside the regime the search is designed for.
    pub small_m: bool,
}

/// Smallest screening at which a nonnegative optimum is reported as an error.
/// Scans over `d ∈ {2, 3, 4}` give `e* < 0` for every `M ≥ 0.25`.
pub const NEGATIVE_ENERGY_THRESHOLD: f64 = 0.25;

/// Minimize `e_M(h)` over `h ∈ [M/4, 2M]` (64-point grid, then golden
/// section to `1e-8·M`); the bracket is widened to `[M/16, 8M]` once if the
/// grid minimum lands on its edge.
pub fn optimal_width(m: f64, d: usize) -> Result<OptimalWidth> {
    if !(m > 0.0 && m.is_finite()) {
        return domain(format!("M must be positive, got {m}"));
    }
    let k = KernelSpec::yukawa(d, 1.0)?.sliced(1.0);
    let energy = |h: f64| stripe_bracket(h, m, &k) * 2.0 / h;
    let tol = 1e-8 * m;
    let found: Min1 = match grid_golden(energy, 0.25 * m, 2.0 * m, 64, tol) {
        Ok(x) => x,
        Err(_) => grid_golden(energy, m / 16.0, 8.0 * m, 256, tol)?,
    };
    if m >= NEGATIVE_ENERGY_THRESHOLD && found.f >= 0.0 {
        return Err(Error::Numerical(format!("optimal stripe energy {} is not negative at M = {m}", found.f)));
    }
    Ok(OptimalWidth { m, d, h_star: found.x, e_star: found.f, small_m: m < 4.0 })
}

/// [`RescaleParams`] from the computed stripe optimum.
pub fn rescale_params(m: f64, d: usize) -> Result<RescaleParams> {
    let opt = optimal_width(m, d)?;
    RescaleParams::new(m, d, opt.e_star, opt.h_star)
}

/// Default differencing step for [`second_derivative_at`].
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Central second difference `(f(x+s) − 2f(x) + f(x−s))/s²`.
pub fn second_difference(mut f: impl FnMut(f64) -> f64, x: f64, step: f64) -> f64 {
    (f(x + step) - 2.0 * f(x) + f(x - step)) / (step * step)
}

/// `e″` of the rescaled stripe energy at `h` by central differences.
pub fn second_derivative_at(h: f64, params: &RescaleParams, step: f64) -> Result<f64> {
    if !(step > 0.0) || h <= 2.0 * step {
        return domain(format!("need h > 2·step > 0, got h = {h}, step = {step}"));
    }
    let k = params.sliced();
    let m2 = params.m * params.m;
    Ok(second_difference(|x| 2.0 * m2 / x * stripe_bracket(x, 1.0, &k), h, step))
}

/// Second differences at steps `s, 2s, 4s` and their Richardson extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureCertificate {
    pub h: f64,
    pub steps: [f64; 3],
    pub values: [f64; 3],
    pub extrapolated: f64,
    /// All three values share a sign and agree to `1e-3` relative.
    pub consistent: bool,
}

pub fn curvature_certificate(h: f64, params: &RescaleParams, step: f64) -> Result<CurvatureCertificate> {
    let steps = [step, 2.0 * step, 4.0 * step];
    let mut values = [0.0; 3];
    for (v, &s) in values.iter_mut().zip(&steps) {
        *v = second_derivative_at(h, params, s)?;
    }
    let extrapolated = (4.0 * values[0] - values[1]) / 3.0;
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let same_sign = values.iter().all(|v| v.signum() == values[0].signum() && *v != 0.0);
    let spread = values.iter().map(|v| (v - extrapolated).abs()).fold(0.0, f64::max);
    Ok(CurvatureCertificate { h, steps, values, extrapolated, consistent: same_sign && spread <= 1e-3 * scale })
}

/// The two one-sided interaction integrals at boundary point `j`, each with
/// its self-term `Φ2(0)` removed:
/// `∫_{s⁻}^{s}∫_0^∞ |χ(u+ρ)−χ(u)| K̂ dρ du − Φ2(0)` and its mirror on `(s, s⁺)`.
fn one_sided_terms(profile: &StripeProfile, j: usize, k: &SlicedKernel, cutoff: f64) -> (f64, f64) {
    let (sm, s, sp) = profile.neighbors(j);
    let ji = j as isize;
    let mut right_side = -k.phi2(s - sm);
    for i in 1.. {
        let q = profile.point_ext(ji + i);
        if q - s > cutoff {
            break;
        }
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        right_side += sign * (k.phi2(q - s) - k.phi2(q - sm));
    }
    let mut left_side = -k.phi2(sp - s);
    for i in 1.. {
        let q = profile.point_ext(ji - i);
        if s - q > cutoff {
            break;
        }
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        left_side += sign * (k.phi2(s - q) - k.phi2(sp - q));
    }
    (right_side, left_side)
}

fn check_index(profile: &StripeProfile, j: usize) -> Result<()> {
    if profile.len() < 2 {
        return domain("the penalization needs at least two boundary points");
    }
    if j >= profile.len() {
        return domain(format!("boundary index {j} out of range"));
    }
    Ok(())
}

/// `r_{i,M}` at boundary point `j`: `J_M` minus the two one-sided
/// interaction integrals over `(s⁻, s)` and `(s, s⁺)`.
///
/// Summed over one period this gives `(L/M²)·F¹_{M,L}`.
pub fn r_im_1d(profile: &StripeProfile, j: usize, params: &RescaleParams) -> Result<f64> {
    check_index(profile, j)?;
    let k = params.sliced();
    let cutoff = tail_cutoff(&k, 1e-18 * k.phi2(0.0));
    let (a, b) = one_sided_terms(profile, j, &k, cutoff);
    Ok(rescaled_excess(&k) - a - b)
}

/// `−1 + ∫_ℝ |ρ| K̂̄_M − ∫_{s⁻}^{s}∫_0^∞ |Δχ| K̂̄_M − ∫_s^{s⁺}∫_{−∞}^0 |Δχ| K̂̄_M`
/// at boundary point `j`.
pub fn r_tau_1d(profile: &StripeProfile, j: usize, params: &RescaleParams) -> Result<f64> {
    check_index(profile, j)?;
    let k = params.sliced();
    let cutoff = tail_cutoff(&k, 1e-18 * k.phi2(0.0));
    let (a, b) = one_sided_terms(profile, j, &k, cutoff);
    Ok(-1.0 - a - b)
}

/// [`r_tau_1d`] addressed by the boundary point's position.
pub fn r_tau_1d_at(profile: &StripeProfile, s: f64, params: &RescaleParams) -> Result<f64> {
    let j = profile.index_of(s).ok_or_else(|| Error::Domain(format!("{s} is not a boundary point")))?;
    r_tau_1d(profile, j, params)
}

/// Lower bound on `r_{i,M}` in terms of the neighbour distances
/// `δ± = |s − s∓|`: the sum over both sides of
/// `∫_δ^1 (ζ − δ) K̂̄_M − ∫_1^∞ δ K̂̄_M`.
pub fn r_lower_bound(delta_minus: f64, delta_plus: f64, params: &RescaleParams) -> f64 {
    let k = params.sliced();
    rescaled_excess(&k) + k.phi2(delta_minus) + k.phi2(delta_plus)
}

/// Best profile found by [`brute_force_min_profile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSearch {
    pub profile: StripeProfile,
    pub energy: f64,
    /// The best run met the simplex tolerances before its evaluation cap.
    pub converged: bool,
    pub restarts: usize,
    pub evaluations: usize,
}

// Gaps from log-weights: g_i = L e^{y_i} / Σ e^{y}, with y_{2k} = 0.
fn gaps_from(y: &[f64], period: f64) -> Vec<f64> {
    let top = y.iter().cloned().fold(0.0, f64::max);
    let mut w: Vec<f64> = y.iter().map(|v| (v - top).exp()).collect();
    w.push((-top).exp());
    let total: f64 = w.iter().sum();
    w.iter().map(|v| period * v / total).collect()
}

fn points_from_gaps(gaps: &[f64]) -> Vec<f64> {
    let mut pts = Vec::with_capacity(gaps.len());
    let mut acc = 0.0;
    for g in gaps {
        pts.push(acc);
        acc += g;
    }
    pts
}

/// Minimize [`profile_energy_1d`] over profiles with exactly `2k` boundary
/// points per period by Nelder–Mead from `budget` random starts (seeded).
///
/// The first point is pinned at 0 (translation invariance); the remaining
/// degrees of freedom are the gaps, parameterized by log-weights so that every
/// simplex vertex is an admissible profile.
pub fn brute_force_min_profile(
    params: &RescaleParams,
    period: f64,
    k: usize,
    budget: usize,
    seed: u64,
) -> Result<ProfileSearch> {
    if k == 0 || 2 * k > 8 {
        return domain(format!("need 1 ≤ k ≤ 4, got {k}"));
    }
    if !(period > 0.0) || budget == 0 {
        return domain("period and budget must be positive");
    }
    let n = 2 * k;
    let kern = params.sliced();
    let prefactor = params.m * params.m / period;
    let energy = |y: &[f64]| {
        let pts = points_from_gaps(&gaps_from(y, period));
        let v = prefactor * bracket_1d(&pts, period, &kern);
        if v.is_finite() { v } else { f64::MAX }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = NelderMeadOptions { max_evals: 4000 * n, x_tol: 1e-9, f_tol: 1e-14 };
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut evaluations = 0;
    for _ in 0..budget {
        let y0: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-0.7..0.7)).collect();
        let mut run = nelder_mead(energy, &y0, 0.3, opts);
        evaluations += run.evals;
        // Restarting from the result guards against a collapsed simplex.
        for _ in 0..3 {
            let again = nelder_mead(energy, &run.x, 0.05, opts);
            evaluations += again.evals;
            let settled = (run.f - again.f).abs() <= 1e-13 * run.f.abs().max(1.0);
            run = if again.f <= run.f { again } else { run };
            if settled {
                break;
            }
        }
        if best.as_ref().map_or(true, |b| run.f < b.1) {
            best = Some((run.x, run.f, run.converged));
        }
    }
    let (y, f, converged) = best.expect("budget is positive");
    let mut pts = points_from_gaps(&gaps_from(&y, period));
    pts.retain(|&s| s < period);
    let profile = StripeProfile::new(period, pts, true)?;
    Ok(ProfileSearch { profile, energy: f, converged, restarts: budget, evaluations })
}
