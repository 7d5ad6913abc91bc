//! Yukawa kernels with the 1-norm, their one-variable slices, the rescaled
//! kernel `K̄_M` and the coupling constants `J̃_M`, `J̃_∞`, `J_M`.
//!
//! Every kernel used here is a function of `r = |ζ|₁`. Two facts drive the
//! implementation:
//!
//! * The sliced kernel `K̂(t) = ∫ K(t, ζ⊥) dζ⊥` and its tails
//!   `Φ1(x) = ∫_x^∞ K̂`, `Φ2(x) = ∫_x^∞ Φ1` have closed forms for `d = 3`
//!   (`K̂ = 4E₂`, `Φ1 = 4E₃`, `Φ2 = 4E₄` at unit screening) and for the two
//!   planar kernels. Other dimensions use the 1-norm radial reduction
//!   `∫_{ℝ^{d-1}} f(|ζ⊥|₁) dζ⊥ = 2^{d-1}/(d-2)! ∫_0^∞ f(r) r^{d-2} dr`.
//! * `e^{-μr}/r^{d-2}` is a Laplace mixture of the separable kernels
//!   `e^{-λ|ζ|₁} = Π_i e^{-λ|ζ_i|}`; see [`Mixture`].

use crate::error::{domain, Result};
use crate::quadrature::{self, QuadOptions};
use crate::special::{e1, expint, factorial};
use serde::{Deserialize, Serialize};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Norm used inside the kernel. Only the 1-norm is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Norm {
    #[default]
    L1,
}

/// Radial profile of the kernel as a function of `r = |ζ|₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// `e^{-μr} / r^{d-2}`; for `d = 2` this is the plain exponential.
    Yukawa,
    /// Planar logarithmic variant `-e^{-μr} ln r` (only `d = 2`).
    Log,
}

/// Identifies a kernel `K_μ` in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub d: usize,
    pub mu: f64,
    #[serde(default)]
    pub norm: Norm,
    pub profile: Profile,
}

impl KernelSpec {
    /// The kernel of the functional: Yukawa for `d ≥ 3`, the logarithmic
    /// variant for `d = 2`.
    pub fn new(d: usize, mu: f64) -> Result<Self> {
        let profile = if d == 2 { Profile::Log } else { Profile::Yukawa };
        Self::with_profile(d, mu, profile)
    }

    /// `e^{-μ|ζ|₁}/|ζ|₁^{d-2}` in any dimension `d ≥ 2`.
    pub fn yukawa(d: usize, mu: f64) -> Result<Self> {
        Self::with_profile(d, mu, Profile::Yukawa)
    }

    pub fn with_profile(d: usize, mu: f64, profile: Profile) -> Result<Self> {
        if d < 2 {
            return domain(format!("dimension must be at least 2, got {d}"));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return domain(format!("screening parameter must be positive, got {mu}"));
        }
        if profile == Profile::Log && d != 2 {
            return domain("the logarithmic kernel is only defined for d = 2");
        }
        Ok(Self { d, mu, norm: Norm::L1, profile })
    }

    /// Radial profile `k(r)` with `K(ζ) = k(|ζ|₁)`.
    pub fn radial(&self, r: f64) -> f64 {
        match self.profile {
            Profile::Yukawa => (-self.mu * r).exp() / r.powi(self.d as i32 - 2),
            Profile::Log => -(-self.mu * r).exp() * r.ln(),
        }
    }

    /// One-variable slice of this kernel, multiplied by `scale`.
    pub fn sliced(&self, scale: f64) -> SlicedKernel {
        SlicedKernel { spec: *self, scale }
    }

    /// Separable Laplace-mixture representation, multiplied by `scale`.
    pub fn mixture(&self, scale: f64) -> Mixture {
        match (self.profile, self.d) {
            (Profile::Yukawa, 2) => Mixture::Single { lambda: self.mu, scale },
            (Profile::Yukawa, d) => Mixture::Yukawa { mu: self.mu, d, scale },
            (Profile::Log, _) => Mixture::Log { beta: self.mu, scale },
        }
    }
}

/// Value of `K_μ(ζ)` (1-norm). Errors at the origin.
pub fn kernel_value(spec: &KernelSpec, zeta: &[f64]) -> Result<f64> {
    if zeta.len() != spec.d {
        return domain(format!("expected a {}-vector, got length {}", spec.d, zeta.len()));
    }
    let r: f64 = zeta.iter().map(|z| z.abs()).sum();
    if r == 0.0 {
        return domain("kernel is singular at the origin");
    }
    Ok(spec.radial(r))
}

/// `K̂(t) = ∫_{ℝ^{d-1}} K(t, ζ⊥) dζ⊥` with default tolerances.
pub fn sliced_kernel(spec: &KernelSpec, t: f64) -> Result<f64> {
    spec.sliced(1.0).try_value(t)
}

/// Sliced kernel `K̂`, its tails and derivatives, times a constant factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicedKernel {
    pub spec: KernelSpec,
    pub scale: f64,
}

fn radial_weight(d: usize) -> f64 {
    2f64.powi(d as i32 - 1) / factorial(d as u32 - 2)
}

impl SlicedKernel {
    /// `K̂(t)`, even in `t`.
    pub fn value(&self, t: f64) -> f64 {
        self.try_value(t).unwrap_or(f64::NAN)
    }

    /// `K̂(t)` with quadrature failures reported.
    pub fn try_value(&self, t: f64) -> Result<f64> {
        let t = t.abs();
        let mu = self.spec.mu;
        let v = match (self.spec.profile, self.spec.d) {
            (Profile::Yukawa, 2) => 2.0 / mu * (-mu * t).exp(),
            (Profile::Yukawa, 3) => 4.0 / mu * expint(2, mu * t),
            (Profile::Yukawa, d) => {
                let k = |r: f64| (-mu * (t + r)).exp() * (r / (t + r)).powi(d as i32 - 2);
                radial_weight(d) * quadrature::integrate_to_inf(k, 0.0, QuadOptions::abs(1e-12))?.value
            }
            (Profile::Log, _) => {
                if t == 0.0 {
                    2.0 / mu * (EULER_GAMMA + mu.ln())
                } else {
                    -2.0 / mu * ((-mu * t).exp() * t.ln() + e1(mu * t))
                }
            }
        };
        Ok(self.scale * v)
    }

    /// `Φ1(x) = ∫_x^∞ K̂(t) dt` for `x ≥ 0`.
    pub fn phi1(&self, x: f64) -> f64 {
        let mu = self.spec.mu;
        let v = match (self.spec.profile, self.spec.d) {
            (Profile::Yukawa, 2) => 2.0 / (mu * mu) * (-mu * x).exp(),
            (Profile::Yukawa, 3) => 4.0 / (mu * mu) * expint(3, mu * x),
            (Profile::Yukawa, d) => self.mixture_tail(d, 1, x),
            (Profile::Log, _) => 2.0 * log_r2(mu, x),
        };
        self.scale * v
    }

    /// `Φ2(x) = ∫_x^∞ (t - x) K̂(t) dt` for `x ≥ 0`.
    pub fn phi2(&self, x: f64) -> f64 {
        let mu = self.spec.mu;
        let v = match (self.spec.profile, self.spec.d) {
            (Profile::Yukawa, 2) => 2.0 / (mu * mu * mu) * (-mu * x).exp(),
            (Profile::Yukawa, 3) => 4.0 / (mu * mu * mu) * expint(4, mu * x),
            (Profile::Yukawa, d) => self.mixture_tail(d, 2, x),
            (Profile::Log, _) => {
                let y = mu * x;
                let tail = if x == 0.0 { 1.0 } else { (1.0 - y) * (-y).exp() + y * y * e1(y) };
                2.0 * log_r2(mu, x) / mu - tail / mu.powi(3)
            }
        };
        self.scale * v
    }

    /// `∫_0^a t K̂(t) dt`.
    pub fn first_moment(&self, a: f64) -> f64 {
        if a.is_infinite() {
            return self.phi2(0.0);
        }
        self.phi2(0.0) - self.phi2(a) - a * self.phi1(a)
    }

    // ∫ over the Laplace variable of the m-fold tail: s^{d-3}/Γ(d-2) (λ)^{-(d-1)-m} e^{-λx}, λ = μ + s
    fn mixture_tail(&self, d: usize, m: i32, x: f64) -> f64 {
        let mu = self.spec.mu;
        let w = 2f64.powi(d as i32 - 1) / factorial(d as u32 - 3);
        let f = |s: f64| {
            let lam = mu + s;
            s.powi(d as i32 - 3) * lam.powi(-(d as i32 - 1) - m) * (-lam * x).exp()
        };
        w * quadrature::integrate_to_inf(f, 0.0, QuadOptions::rel(1e-13)).map(|q| q.value).unwrap_or(f64::NAN)
    }

    /// `n`-th derivative of `K̂` at `t > 0`.
    ///
    /// Closed form for `d = 3` and the planar exponential, Laplace
    /// representation `(-1)^n ∫ λ^n w(λ) e^{-λt} dλ` otherwise.
    pub fn derivative(&self, n: u32, t: f64) -> Result<f64> {
        if n == 0 {
            return self.try_value(t);
        }
        if t <= 0.0 {
            return domain("derivatives are taken at t > 0");
        }
        let mu = self.spec.mu;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let v = match (self.spec.profile, self.spec.d) {
            (Profile::Log, _) => return domain("complete monotonicity is not defined for the logarithmic kernel"),
            (Profile::Yukawa, 2) => sign * 2.0 * mu.powi(n as i32 - 1) * (-mu * t).exp(),
            (Profile::Yukawa, 3) => {
                let u = mu * t;
                let unit = if n == 1 {
                    -4.0 * e1(u)
                } else {
                    let m = n - 2;
                    let mut s = 0.0;
                    let mut binom = 1.0;
                    for j in 0..=m {
                        s += binom * factorial(j) * u.powi(-(j as i32) - 1);
                        binom = binom * (m - j) as f64 / (j + 1) as f64;
                    }
                    sign * 4.0 * (-u).exp() * s
                };
                mu.powi(n as i32 - 1) * unit
            }
            (Profile::Yukawa, d) => {
                let w = 2f64.powi(d as i32 - 1) / factorial(d as u32 - 3);
                let f = |s: f64| {
                    let lam = mu + s;
                    s.powi(d as i32 - 3) * lam.powi(n as i32 - (d as i32 - 1)) * (-lam * t).exp()
                };
                sign * w * quadrature::integrate_to_inf(f, 0.0, QuadOptions::rel(1e-13))?.value
            }
        };
        Ok(self.scale * v)
    }
}

// R2(x) = ∫_x^∞ (r - x) k(r) dr for k(r) = -e^{-βr} ln r; the planar slice has Φ1 = 2 R2.
fn log_r2(beta: f64, x: f64) -> f64 {
    let y = beta * x;
    let i1 = if x == 0.0 {
        -(EULER_GAMMA + beta.ln()) / beta
    } else {
        ((-y).exp() * x.ln() + e1(y)) / beta
    };
    let tail = if x == 0.0 { 1.0 } else { (-y).exp() - y * e1(y) };
    -(i1 + tail / beta) / beta
}

/// Laplace-mixture form of a 1-norm kernel:
/// `K(ζ) = scale · ∫ w(λ) e^{-λ|ζ|₁} dλ` (or the Frullani form for `Log`).
///
/// Integrals of `K` against box indicators factor per axis for every fixed
/// `λ`, so callers provide a vector-valued function of `λ` and
/// [`Mixture::integrate`] performs the single remaining quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mixture {
    /// `scale · e^{-λ|ζ|₁}` (planar Yukawa).
    Single { lambda: f64, scale: f64 },
    /// `scale · e^{-μr}/r^{d-2} = scale/Γ(d-2) ∫_0^∞ s^{d-3} e^{-(μ+s)r} ds`.
    Yukawa { mu: f64, d: usize, scale: f64 },
    /// `scale · (-e^{-βr} ln r) = scale ∫_0^∞ (e^{-(β+s)r} - e^{-s} e^{-βr}) / s ds`.
    Log { beta: f64, scale: f64 },
}

impl Mixture {
    /// Integrate the vector function `g(λ, out)` against the mixture.
    pub fn integrate<G: FnMut(f64, &mut [f64])>(&self, dim: usize, mut g: G, opts: QuadOptions) -> Result<Vec<f64>> {
        match *self {
            Mixture::Single { lambda, scale } => {
                let mut out = vec![0.0; dim];
                g(lambda, &mut out);
                out.iter_mut().for_each(|v| *v *= scale);
                Ok(out)
            }
            Mixture::Yukawa { mu, d, scale } => {
                let norm = scale / factorial(d as u32 - 3);
                let p = d as i32 - 3;
                let mut v = quadrature::integrate_vec_to_inf(
                    |s, out: &mut [f64]| {
                        g(mu + s, out);
                        let w = s.powi(p);
                        out.iter_mut().for_each(|v| *v *= w);
                    },
                    dim,
                    0.0,
                    opts,
                )?;
                v.iter_mut().for_each(|x| *x *= norm);
                Ok(v)
            }
            Mixture::Log { beta, scale } => {
                let mut base = vec![0.0; dim];
                g(beta, &mut base);
                let mut v = quadrature::integrate_vec_to_inf(
                    |s, out: &mut [f64]| {
                        g(beta + s, out);
                        let damp = (-s).exp();
                        for (o, b) in out.iter_mut().zip(&base) {
                            *o = (*o - damp * b) / s;
                        }
                    },
                    dim,
                    0.0,
                    opts,
                )?;
                v.iter_mut().for_each(|x| *x *= scale);
                Ok(v)
            }
        }
    }

    /// Scalar convenience wrapper around [`Mixture::integrate`].
    pub fn integrate_scalar<G: FnMut(f64) -> f64>(&self, mut g: G, opts: QuadOptions) -> Result<f64> {
        Ok(self.integrate(1, |l, out| out[0] = g(l), opts)?[0])
    }
}

/// One `(t, n)` entry of a complete-monotonicity report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityEntry {
    pub t: f64,
    pub n: u32,
    pub derivative: f64,
    /// Central difference of the `(n-1)`-th derivative (`NaN` for `n = 0`).
    pub finite_difference: f64,
    /// `(-1)^n · derivative`.
    pub signed: f64,
    pub pass: bool,
}

/// Per-point sign checks of `(-1)^n K̂^{(n)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub tolerance: f64,
    pub fd_step: f64,
    pub entries: Vec<MonotonicityEntry>,
}

impl MonotonicityReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    /// Largest relative gap between closed-form and finite-difference derivatives.
    pub fn max_fd_mismatch(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.n > 0)
            .map(|e| ((e.derivative - e.finite_difference) / e.derivative).abs())
            .fold(0.0, f64::max)
    }
}

/// Sign report of `(-1)^n d^n K̂/dt^n` on `t_grid` for `n ≤ n_max ≤ 6`.
pub fn complete_monotonicity_report(
    spec: &KernelSpec,
    t_grid: &[f64],
    n_max: u32,
    tolerance: f64,
    fd_step: f64,
) -> Result<MonotonicityReport> {
    if spec.profile == Profile::Log {
        return domain("the logarithmic planar kernel changes sign; complete monotonicity does not apply");
    }
    if n_max > 6 {
        return domain(format!("n_max must be at most 6, got {n_max}"));
    }
    let t_min = t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if t_min < 10.0 * fd_step {
        return domain(format!("smallest grid point {t_min} is below 10 finite-difference steps"));
    }
    let k = spec.sliced(1.0);
    let mut entries = Vec::with_capacity(t_grid.len() * (n_max as usize + 1));
    for &t in t_grid {
        for n in 0..=n_max {
            let derivative = k.derivative(n, t)?;
            let finite_difference = if n == 0 {
                f64::NAN
            } else {
                (k.derivative(n - 1, t + fd_step)? - k.derivative(n - 1, t - fd_step)?) / (2.0 * fd_step)
            };
            let signed = if n % 2 == 0 { derivative } else { -derivative };
            entries.push(MonotonicityEntry { t, n, derivative, finite_difference, signed, pass: signed >= -tolerance });
        }
    }
    Ok(MonotonicityReport { tolerance, fd_step, entries })
}

/// `J̃_M = ∫_{-M}^{M} |t| K̂(t) dt`; `M = ∞` gives `J̃_∞ = ∫ |ζ₁| K(ζ) dζ`.
pub fn coupling_tilde(spec: &KernelSpec, m: f64) -> Result<f64> {
    if m < 0.0 || m.is_nan() {
        return domain(format!("cutoff must be nonnegative, got {m}"));
    }
    if m.is_infinite() && spec.profile == Profile::Log {
        return domain("J at infinity is rejected for the sign-changing planar logarithmic kernel");
    }
    Ok(2.0 * spec.sliced(1.0).first_moment(m))
}

/// Parameters of the rescaled problem at screening `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleParams {
    pub m: f64,
    pub d: usize,
    /// Minimal unrescaled periodic-stripe energy `ẽ*_M < 0`.
    pub e_star_unrescaled: f64,
    pub h_star_unrescaled: f64,
    /// `ln(-1/ẽ*_M)/M`.
    pub gamma_m: f64,
    pub alpha_m: f64,
}

impl RescaleParams {
    /// Build from an unrescaled optimum.
    pub fn new(m: f64, d: usize, e_star: f64, h_star: f64) -> Result<Self> {
        if !(m > 0.0) {
            return domain(format!("M must be positive, got {m}"));
        }
        if d < 2 {
            return domain(format!("dimension must be at least 2, got {d}"));
        }
        if !(e_star < 0.0) {
            return domain(format!("optimal stripe energy must be negative, got {e_star}"));
        }
        if !(h_star > 0.0) {
            return domain(format!("optimal width must be positive, got {h_star}"));
        }
        let gamma_m = (-1.0 / e_star).ln() / m;
        Ok(Self { m, d, e_star_unrescaled: e_star, h_star_unrescaled: h_star, gamma_m, alpha_m: gamma_m })
    }

    /// `-1/ẽ*_M`.
    pub fn scale(&self) -> f64 {
        -1.0 / self.e_star_unrescaled
    }

    /// Rescaled optimal width `h̃ = h*_M / M`.
    pub fn h_tilde(&self) -> f64 {
        self.h_star_unrescaled / self.m
    }

    /// Kernel `K_M` (Yukawa profile, screening `M`).
    pub fn kernel(&self) -> KernelSpec {
        KernelSpec { d: self.d, mu: self.m, norm: Norm::L1, profile: Profile::Yukawa }
    }

    /// `K̂̄_M` as a [`SlicedKernel`].
    pub fn sliced(&self) -> SlicedKernel {
        self.kernel().sliced(self.scale())
    }

    /// Mixture form of `K̄_M`.
    pub fn mixture(&self) -> Mixture {
        self.kernel().mixture(self.scale())
    }

    /// Whether `0 < γ_M < 1` holds.
    pub fn gamma_in_unit_interval(&self) -> bool {
        self.gamma_m > 0.0 && self.gamma_m < 1.0
    }
}

/// `K̄_M(ζ) = (-1/ẽ*_M) e^{-M|ζ|₁}/|ζ|₁^{d-2}`.
pub fn rescaled_kernel_value(params: &RescaleParams, zeta: &[f64]) -> Result<f64> {
    Ok(params.scale() * kernel_value(&params.kernel(), zeta)?)
}

/// `K̂̄_M(t) = (-1/ẽ*_M) K̂_M(t)`.
pub fn rescaled_sliced_kernel(params: &RescaleParams, t: f64) -> Result<f64> {
    params.sliced().try_value(t)
}

/// `J_M = ∫_{-1}^{1} |t| K̂̄_M(t) dt`.
pub fn rescaled_coupling(params: &RescaleParams) -> f64 {
    2.0 * params.sliced().first_moment(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kernel_value_examples() {
        let k3 = KernelSpec::new(3, 1.0).unwrap();
        assert!(close(kernel_value(&k3, &[1.0, 0.0, 0.0]).unwrap(), (-1f64).exp(), 1e-15));
        let k2 = KernelSpec::new(2, 1.0).unwrap();
        assert_eq!(kernel_value(&k2, &[0.5, 0.5]).unwrap(), 0.0);
        let k4 = KernelSpec::new(4, 1.0).unwrap();
        assert!(close(kernel_value(&k4, &[1.0, 0.5, 0.25, 0.25]).unwrap(), (-2f64).exp() / 4.0, 1e-15));
        assert!(matches!(kernel_value(&k3, &[0.0, 0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::new(1, 1.0).is_err());
        assert!(KernelSpec::new(3, 0.0).is_err());
        assert!(KernelSpec::with_profile(3, 1.0, Profile::Log).is_err());
    }

    #[test]
    fn sliced_d3_examples() {
        let k = KernelSpec::new(3, 1.0).unwrap();
        // 4(e^{-1} - E1(1)) with E1(1) = 0.21938393439552027
        assert!(close(sliced_kernel(&k, 1.0).unwrap(), 4.0 * ((-1f64).exp() - 0.219_383_934_395_520_27), 1e-14));
        assert!(close(sliced_kernel(&k, 1.0).unwrap(), 0.593_982_1, 1e-7));
        assert!(close(sliced_kernel(&k, 0.0).unwrap(), 4.0, 1e-15));
        assert!(sliced_kernel(&k, 40.0).unwrap() < 1e-17);
    }

    #[test]
    fn sliced_scaling_in_mu() {
        for d in [2usize, 3, 4] {
            let k1 = KernelSpec::yukawa(d, 1.0).unwrap().sliced(1.0);
            let k2 = KernelSpec::yukawa(d, 2.5).unwrap().sliced(1.0);
            for t in [0.1, 0.7, 2.0] {
                let lhs = k2.value(t);
                let rhs = k1.value(2.5 * t) / 2.5;
                assert!(close(lhs, rhs, 1e-11 * rhs.abs()), "d={d} t={t}");
            }
        }
    }

    #[test]
    fn d4_radial_quadrature_matches_mixture_derivative_zero() {
        let k = KernelSpec::yukawa(4, 1.3).unwrap().sliced(1.0);
        for t in [0.05, 0.5, 3.0] {
            // K̂ = -∫_t^∞ K̂' and K̂' from the Laplace representation
            let q = quadrature::integrate_to_inf(|u| k.derivative(1, u).unwrap(), t, QuadOptions::abs(1e-12)).unwrap();
            assert!(close(k.value(t), -q.value, 1e-9), "t={t}");
        }
    }

    #[test]
    fn tails_are_iterated_integrals() {
        let specs = [
            KernelSpec::yukawa(2, 1.7).unwrap(),
            KernelSpec::yukawa(3, 0.8).unwrap(),
            KernelSpec::yukawa(4, 1.0).unwrap(),
            KernelSpec::new(2, 3.0).unwrap(),
        ];
        for spec in specs {
            let k = spec.sliced(1.0);
            for x in [0.0, 0.3, 1.1, 4.0] {
                let lo = if x == 0.0 { 0.0 } else { x };
                let p1 = quadrature::integrate_to_inf(|t| k.value(t), lo, QuadOptions::abs(1e-13)).unwrap().value;
                let p2 = quadrature::integrate_to_inf(|t| k.phi1(t), lo, QuadOptions::abs(1e-13)).unwrap().value;
                assert!(close(k.phi1(x), p1, 1e-10), "{spec:?} x={x} {} {}", k.phi1(x), p1);
                assert!(close(k.phi2(x), p2, 1e-10), "{spec:?} x={x} {} {}", k.phi2(x), p2);
            }
        }
    }

    #[test]
    fn log_slice_at_zero_is_continuous() {
        let k = KernelSpec::new(2, 5.0).unwrap().sliced(1.0);
        assert!(close(k.value(0.0), k.value(1e-9), 1e-7));
        assert!(close(k.phi1(0.0), k.phi1(1e-12), 1e-9));
        assert!(close(k.phi2(0.0), k.phi2(1e-12), 1e-9));
    }

    #[test]
    fn derivative_examples_d3() {
        let k = KernelSpec::new(3, 1.0).unwrap().sliced(1.0);
        assert!(close(k.derivative(1, 1.0).unwrap(), -0.877_535_7, 1e-7));
        assert!(close(k.derivative(2, 2.0).unwrap(), 4.0 * (-2f64).exp() / 2.0, 1e-15));
        let t: f64 = 0.7;
        let third = -4.0 * (-t).exp() * (1.0 / t + 1.0 / (t * t));
        assert!(close(k.derivative(3, t).unwrap(), third, 1e-14));
    }

    #[test]
    fn monotonicity_report_rejects_bad_inputs() {
        let k = KernelSpec::new(3, 1.0).unwrap();
        assert!(complete_monotonicity_report(&k, &[1.0], 7, 1e-9, 1e-4).is_err());
        assert!(complete_monotonicity_report(&k, &[1e-4], 2, 1e-9, 1e-4).is_err());
        let log = KernelSpec::new(2, 1.0).unwrap();
        assert!(complete_monotonicity_report(&log, &[1.0], 2, 1e-9, 1e-4).is_err());
        let r = complete_monotonicity_report(&k, &[0.5, 1.0, 2.0], 6, 1e-9, 1e-4).unwrap();
        assert!(r.all_pass());
        assert!(r.max_fd_mismatch() < 1e-6, "{}", r.max_fd_mismatch());
    }

    #[test]
    fn coupling_examples() {
        let k = KernelSpec::new(3, 1.0).unwrap();
        assert_eq!(coupling_tilde(&k, 0.0).unwrap(), 0.0);
        assert!(close(coupling_tilde(&k, f64::INFINITY).unwrap(), 8.0 / 3.0, 1e-14));
        let j1 = coupling_tilde(&k, 1.0).unwrap();
        assert!(j1 > 0.0 && j1 < 8.0 / 3.0);
        assert!(coupling_tilde(&k, 0.5).unwrap() < j1 && j1 < coupling_tilde(&k, 2.0).unwrap());
        assert!(coupling_tilde(&KernelSpec::new(2, 1.0).unwrap(), f64::INFINITY).is_err());
    }

    #[test]
    fn rescaled_examples() {
        let unit = RescaleParams::new(1.0, 3, -1.0, 1.0).unwrap();
        let k = KernelSpec::new(3, 1.0).unwrap();
        assert!(close(rescaled_coupling(&unit), coupling_tilde(&k, 1.0).unwrap(), 1e-15));
        let z = [0.3, -0.2, 0.1];
        assert!(close(rescaled_kernel_value(&unit, &z).unwrap(), kernel_value(&k, &z).unwrap(), 1e-15));

        let p = RescaleParams::new(8.0, 3, -(-7f64).exp(), 8.0).unwrap();
        let expect = 4.0 * 7f64.exp() * ((-8f64).exp() / 8.0 - e1(8.0));
        let got = rescaled_sliced_kernel(&p, 1.0).unwrap();
        assert!(close(got, expect, 1e-12 * expect.abs()));
        assert!(close(p.gamma_m, 7.0 / 8.0, 1e-15));
        assert!(RescaleParams::new(8.0, 3, 0.1, 8.0).is_err());
    }

    #[test]
    fn mixture_reproduces_radial_profile() {
        let opts = QuadOptions::rel(1e-12);
        for spec in [KernelSpec::yukawa(3, 1.5).unwrap(), KernelSpec::yukawa(4, 0.7).unwrap(), KernelSpec::new(2, 2.0).unwrap(), KernelSpec::yukawa(2, 2.0).unwrap()] {
            let m = spec.mixture(1.0);
            for r in [0.05, 0.9, 3.0] {
                let v = m.integrate_scalar(|l| (-l * r).exp(), opts).unwrap();
                assert!(close(v, spec.radial(r), 1e-10 * spec.radial(r).abs().max(1e-3)), "{spec:?} r={r}");
            }
        }
    }
}
