//! The double-Yukawa functional and its local limit as `β → ∞`.
//!
//! `Ẽ_{β,J,L}(E) = (1/L^d)(J·P_β(E) − ∫∫ |χ_E(x+ζ) − χ_E(x)| K₁(ζ) dζ dx)` with
//! the nonlocal perimeter `P_β = (C_{β,L}/2) ∫∫ |χ_E(x+ζ) − χ_E(x)| K_β(ζ) dζ dx`.
//! The constant `C_{β,L}` is fixed by the half-period slab, so `P_β` of that
//! slab tends to its 1-perimeter `2L^{d−1}`.
//!
//! `K_β` is the Yukawa kernel for `d = 3` and the logarithmic kernel
//! `−e^{−β|ζ|₁} ln|ζ|₁` for `d = 2`. The `K₁` term uses the same kernel as
//! [`functional_unrescaled`](crate::energy_nd::functional_unrescaled).

use serde::Serialize;

use crate::energy_nd::{functional_unrescaled, nonlocal_integral, PeriodicSet};
use crate::error::{domain, Error, Result};
use crate::geometry::RectUnionSet;
use crate::kernels::{KernelSpec, Mixture};
use crate::quadrature::{integrate_vec, QuadOptions};

/// Smallest period accepted by the normalization.
pub const MIN_PERIOD: f64 = 1.0;

const LAMBDA_OPTS: QuadOptions = QuadOptions { abs_tol: 0.0, rel_tol: 1e-11, max_intervals: 4000 };

fn check(d: usize, beta: f64, period: f64) -> Result<()> {
    if !(2..=3).contains(&d) {
        return domain(format!("the double-Yukawa functional is implemented for d = 2, 3, got {d}"));
    }
    if !(beta > 1.0 && beta.is_finite()) {
        return domain(format!("β must exceed 1, got {beta}"));
    }
    if !(period >= MIN_PERIOD && period.is_finite()) {
        return domain(format!("period must be at least {MIN_PERIOD}, got {period}"));
    }
    Ok(())
}

/// Mixture form of `K_β`.
fn kernel(d: usize, beta: f64) -> Result<Mixture> {
    Ok(KernelSpec::new(d, beta)?.mixture(1.0))
}

/// Per-`λ` pieces of the half-period slab of period `L` in dimension `d`.
struct SlabPieces {
    /// `∫_{H⁻}∫_{H⁺} e^{−λ|x−y|₁}`.
    window: f64,
    /// `N(λ) − 4·window` for the slab of width `w`, where `N(λ)` is its full
    /// periodic interaction, formed without cancellation.
    excess: f64,
}

fn slab_pieces(lambda: f64, period: f64, width: f64, d: usize) -> SlabPieces {
    let half = 0.5 * period;
    let e_half = (-lambda * half).exp();
    let e_full = (-lambda * period).exp();
    let l2 = lambda * lambda;
    // Normal factor: x₁ ∈ [0, L/2), y₁ ∈ [L/2, L).
    let a = (-(-lambda * half).exp_m1()).powi(2) / l2;
    // Transverse factor per axis, and its deficit against the full line.
    let deficit = 2.0 * e_half * (-(-lambda * period).exp_m1()) / l2;
    let line = 2.0 * period / lambda;
    let b = line - deficit;
    let full = line.powi(d as i32 - 1);
    let rho = e_full / (-(-lambda * period).exp_m1());
    // Interval of width w against its complement, minus the half-period value.
    let a_shift = (2.0 * e_half - (-lambda * width).exp() - (-lambda * (period - width)).exp()) / l2;
    let truncation: f64 = (0..d - 1).map(|k| line.powi(k as i32) * b.powi((d - 2 - k) as i32)).sum::<f64>() * deficit;
    SlabPieces {
        window: a * b.powi(d as i32 - 1),
        excess: 4.0 * (full * a_shift * (1.0 + rho) + full * a * rho + a * truncation),
    }
}

/// `C_{β,L} = L^{d−1} (∫_{H⁻}∫_{H⁺} |χ(x) − χ(y)| K_β(x − y) dx dy)^{−1}` with
/// `H⁻ = [0, L/2) × [0, L)^{d−1}` and `H⁺ = [L/2, L) × [−L/2, 3L/2)^{d−1}`.
pub fn normalization_constant(d: usize, beta: f64, period: f64) -> Result<f64> {
    check(d, beta, period)?;
    let window = kernel(d, beta)?.integrate_scalar(|l| slab_pieces(l, period, 0.5 * period, d).window, LAMBDA_OPTS)?;
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::Numerical(format!("slab window integral is {window}")));
    }
    Ok(period.powi(d as i32 - 1) / window)
}

/// `P_β(E) = (C_{β,L}/2) ∫∫ |χ_E(x+ζ) − χ_E(x)| K_β(ζ) dζ dx`.
pub fn nonlocal_perimeter(set: &impl PeriodicSet, beta: f64) -> Result<f64> {
    let set = set.rect_union();
    let c = normalization_constant(set.d, beta, set.period)?;
    Ok(0.5 * c * nonlocal_integral(&set, &kernel(set.d, beta)?)?)
}

/// `P_β(S) − Per₁(S)` for the slab `S = [0, w) × [0, L)^{d−1}`, computed
/// without forming the difference of two nearly equal numbers.
pub fn slab_defect(d: usize, beta: f64, period: f64, width: f64) -> Result<f64> {
    check(d, beta, period)?;
    if !(width > 0.0 && width < period) {
        return domain(format!("slab width must lie in (0, L), got {width}"));
    }
    let v = kernel(d, beta)?.integrate(
        2,
        |l, out| {
            let p = slab_pieces(l, period, width, d);
            out[0] = p.window;
            out[1] = p.excess;
        },
        LAMBDA_OPTS,
    )?;
    Ok(period.powi(d as i32 - 1) * v[1] / (2.0 * v[0]))
}

/// Recognizes a single box spanning the torus in all but one direction.
fn slab_width(set: &RectUnionSet) -> Option<f64> {
    let [b] = set.boxes.as_slice() else { return None };
    let thin: Vec<usize> = (0..set.d).filter(|&a| b.hi[a] - b.lo[a] < set.period).collect();
    match thin.as_slice() {
        [a] => Some(b.hi[*a] - b.lo[*a]),
        _ => None,
    }
}

/// `Ẽ_{β,J,L}(E)`.
pub fn double_yukawa_energy(set: &impl PeriodicSet, beta: f64, coupling: f64) -> Result<f64> {
    let set = set.rect_union();
    let p = nonlocal_perimeter(set.as_ref(), beta)?;
    let k1 = KernelSpec::yukawa(set.d, 1.0)?.mixture(1.0);
    let n1 = nonlocal_integral(&set, &k1)?;
    Ok((coupling * p - n1) / set.period.powi(set.d as i32))
}

/// One `β` of a convergence sweep of `P_β(E)` towards `Per₁(E)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSweepRow {
    pub beta: f64,
    pub period: f64,
    pub c_beta_l: f64,
    pub p_beta: f64,
    pub per1: f64,
    /// `|P_β − Per₁|`; exact for slabs, a plain difference otherwise.
    pub abs_error: f64,
    /// `Ẽ_{β,J,L}(E) − F̃_{J,L}(E)`, when a coupling is given.
    pub energy_gap: Option<f64>,
}

/// Evaluates `C_{β,L}`, `P_β(E)` and the error against `Per₁(E)` on a β ladder.
pub fn gamma_sweep(set: &impl PeriodicSet, betas: &[f64], coupling: Option<f64>) -> Result<Vec<GammaSweepRow>> {
    let set = set.rect_union();
    let per1 = crate::geometry::per1(&set, None)?;
    let limit = coupling.map(|j| functional_unrescaled(set.as_ref(), j)).transpose()?;
    betas
        .iter()
        .map(|&beta| {
            let c = normalization_constant(set.d, beta, set.period)?;
            let p = nonlocal_perimeter(set.as_ref(), beta)?;
            let defect = match slab_width(&set) {
                Some(w) => slab_defect(set.d, beta, set.period, w)?,
                None => p - per1,
            };
            let energy_gap = match (coupling, &limit) {
                (Some(j), Some(f)) => Some(double_yukawa_energy(set.as_ref(), beta, j)? - f.total),
                _ => None,
            };
            Ok(GammaSweepRow { beta, period: set.period, c_beta_l: c, p_beta: p, per1, abs_error: defect.abs(), energy_gap })
        })
        .collect()
}

/// CSV with columns `beta, L, C_beta_L, P_beta, per1, abs_error`, 17 significant digits.
pub fn sweep_to_csv(rows: &[GammaSweepRow]) -> String {
    let mut out = String::from("beta,L,C_beta_L,P_beta,per1,abs_error\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.beta, r.period, r.c_beta_l, r.p_beta, r.per1, r.abs_error
        ));
    }
    out
}

/// Split terms of `P_β` for a tilted half-plane, per unit interface length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltedInterfaceReport {
    pub theta: f64,
    pub beta: f64,
    pub epsilon: f64,
    /// Length of the interface inside `[−ε, ε]²`.
    pub length: f64,
    /// `(C/2)∫_Q∫ |χ(x) − χ(x + ζ_i e_i)| K_β`, per unit length, `i = 1, 2`.
    pub directional: [f64; 2],
    /// `(C/2)∫_Q∫ |χ(x) − χ(x + ζ₁e₁)| |χ(x) − χ(x + ζ₂e₂)| K_β`, per unit length.
    pub cross: f64,
    /// `directional₁ + directional₂ − 2·cross`.
    pub total: f64,
    /// `cross · β⁴ / C_{β,L}`.
    pub cross_ratio: f64,
}

/// `∫_ℝ |χ_I(u) − χ_I(u + z)| e^{−λ|z|} dz` for the interval `I = [lo, hi]`.
fn line_term(u: f64, lo: f64, hi: f64, lambda: f64) -> f64 {
    if hi <= lo {
        0.0
    } else if u < lo {
        ((-lambda * (lo - u)).exp() - (-lambda * (hi - u)).exp()) / lambda
    } else if u > hi {
        ((-lambda * (u - hi)).exp() - (-lambda * (u - lo)).exp()) / lambda
    } else {
        ((-lambda * (u - lo)).exp() + (-lambda * (hi - u)).exp()) / lambda
    }
}

/// Splits the nonlocal perimeter of `E = {x·ν ≤ 0} ∩ [−2ε, 2ε]²`,
/// `ν = (cos θ, sin θ)`, over the window `Q = [−ε, ε]²` (`d = 2`, log kernel).
pub fn tilted_interface_report(theta: f64, beta: f64, epsilon: f64, period: f64) -> Result<TiltedInterfaceReport> {
    if !(0.0..=std::f64::consts::FRAC_PI_4 + 1e-12).contains(&theta) {
        return domain(format!("θ must lie in [0, π/4], got {theta}"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return domain(format!("window half-width must be positive, got {epsilon}"));
    }
    let c = normalization_constant(2, beta, period)?;
    let (s, co) = theta.sin_cos();
    let tan = s / co;
    let outer = 2.0 * epsilon;
    // Horizontal slice through x₂ and vertical slice through x₁ of E.
    let row = move |x2: f64| (-outer, (-x2 * tan).min(outer));
    let col = move |x1: f64| if s == 0.0 { if x1 <= 0.0 { (-outer, outer) } else { (0.0, 0.0) } } else { (-outer, (-x1 * co / s).min(outer)) };
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-9, max_intervals: 2000 };
    let split = |pts: &mut Vec<f64>, lo: f64, hi: f64| {
        pts.retain(|p| *p > lo && *p < hi);
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
    };
    let raw = kernel(2, beta)?.integrate(
        3,
        |lambda, out| {
            let mut x2_pts = vec![0.0];
            split(&mut x2_pts, -epsilon, epsilon);
            let mut acc = [0.0; 3];
            for w in x2_pts.windows(2) {
                let part = integrate_vec(
                    |x2, o: &mut [f64]| {
                        let mut x1_pts = vec![-x2 * tan, -outer * tan, outer * tan];
                        split(&mut x1_pts, -epsilon, epsilon);
                        let (rl, rh) = row(x2);
                        let mut inner = [0.0; 3];
                        for v in x1_pts.windows(2) {
                            let r = integrate_vec(
                                |x1, q: &mut [f64]| {
                                    let (cl, ch) = col(x1);
                                    let a1 = line_term(x1, rl, rh, lambda);
                                    let a2 = line_term(x2, cl, ch, lambda);
                                    q[0] = a1;
                                    q[1] = a2;
                                    q[2] = a1 * a2;
                                },
                                3,
                                v[0],
                                v[1],
                                opts,
                            )
                            .expect("inner window quadrature converges");
                            inner.iter_mut().zip(&r).for_each(|(a, b)| *a += b);
                        }
                        o.copy_from_slice(&inner);
                    },
                    3,
                    w[0],
                    w[1],
                    opts,
                )
                .expect("outer window quadrature converges");
                acc.iter_mut().zip(&part).for_each(|(a, b)| *a += b);
            }
            // A free transverse direction contributes ∫ e^{−λ|ζ|} = 2/λ.
            out[0] = 2.0 / lambda * acc[0];
            out[1] = 2.0 / lambda * acc[1];
            out[2] = acc[2];
        },
        LAMBDA_OPTS,
    )?;
    let length = 2.0 * epsilon / co;
    let norm = 0.5 * c / length;
    let directional = [norm * raw[0], norm * raw[1]];
    let cross = norm * raw[2];
    Ok(TiltedInterfaceReport {
        theta,
        beta,
        epsilon,
        length,
        directional,
        cross,
        total: directional[0] + directional[1] - 2.0 * cross,
        cross_ratio: cross * beta.powi(4) / c,
    })
}

/// `φ(ν) = ∫|ζ·ν| K / ∫|ζ₁| K` for a kernel that depends on `|ζ|₁` only (`d = 2`).
pub fn anisotropy(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let (a, b) = (c.abs().max(s.abs()), c.abs().min(s.abs()));
    // Mean of |ω·ν| over the unit 1-sphere, relative to the mean of |ω₁| (= 1/2).
    // On the edges ω = (1−t, ±t): |a(1−t) + bt| and |a(1−t) − bt|.
    let plus = 0.5 * (a + b);
    let minus = if a + b > 0.0 { (a * a + b * b) / (2.0 * (a + b)) } else { 0.0 };
    (plus + minus) / 2.0 / 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_stripes, GridSet, Rect};
    use crate::kernels::coupling_tilde;
    use crate::quadrature::integrate_split;

    fn slab(d: usize, period: f64, axis: usize) -> RectUnionSet {
        let mut lo = vec![0.0; d];
        let mut hi = vec![period; d];
        lo[axis] = 0.25 * period;
        hi[axis] = 0.75 * period;
        RectUnionSet::new(d, period, vec![Rect::new(lo, hi)]).unwrap()
    }

    #[test]
    fn cubic_law_in_three_dimensions() {
        for (beta, period) in [(32.0, 2.0), (64.0, 4.0), (64.0, 1.0)] {
            let c = normalization_constant(3, beta, period).unwrap();
            assert!((c / beta.powi(3) - 0.75).abs() < 1e-9, "{}", c / beta.powi(3));
        }
        let r = normalization_constant(3, 64.0, 2.0).unwrap() / normalization_constant(3, 32.0, 2.0).unwrap();
        assert!((r - 8.0).abs() < 1e-8);
    }

    /// The window integral for the log kernel by direct 2D quadrature.
    #[test]
    fn planar_normalization_matches_quadrature() {
        let (beta, period) = (4.0, 1.0f64);
        let a = 0.5 * period;
        let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-9, max_intervals: 4000 };
        // u = y₁ − x₁ has density min(u, L − u); v = y₂ − x₂ has density |[0, L) ∩ [−a − v, 3a − v)|.
        let overlap = |v: f64| (period.min(3.0 * a - v) - 0f64.max(-a - v)).max(0.0);
        let k = |u: f64, v: f64| {
            let r = u + v.abs();
            -(-beta * r).exp() * r.ln()
        };
        let window = integrate_split(
            |u| {
                let w = u.min(period - u);
                w * integrate_split(|v| k(u, v) * overlap(v), &[-3.0 * a, -a, 0.0, a, 3.0 * a], opts).unwrap().value
            },
            &[0.0, a, period],
            opts,
        )
        .unwrap()
        .value;
        let c = normalization_constant(2, beta, period).unwrap();
        assert!((c * window / period - 1.0).abs() < 1e-7, "{} vs {}", c, period / window);
    }

    #[test]
    fn slab_defect_matches_direct_difference() {
        for d in [2, 3] {
            let period = 1.0;
            let beta = 4.0;
            let direct = nonlocal_perimeter(&slab(d, period, 0), beta).unwrap() - 2.0 * period.powi(d as i32 - 1);
            let exact = slab_defect(d, beta, period, 0.5).unwrap();
            assert!((direct - exact).abs() < 1e-8 * direct.abs().max(1e-3), "d={d}: {direct} vs {exact}");
            let off = slab_defect(d, beta, period, 0.3).unwrap();
            let mut set = slab(d, period, 0);
            set.boxes[0].hi[0] = 0.55;
            let direct = nonlocal_perimeter(&set, beta).unwrap() - 2.0 * period.powi(d as i32 - 1);
            assert!((direct - off).abs() < 1e-8 * direct.abs().max(1e-3), "d={d}: {direct} vs {off}");
        }
    }

    #[test]
    fn slab_defect_shrinks_with_beta() {
        for d in [2, 3] {
            let defects: Vec<f64> =
                [8.0, 16.0, 32.0, 64.0].iter().map(|&b| slab_defect(d, b, 2.0, 1.0).unwrap().abs()).collect();
            assert!(defects.windows(2).all(|w| w[1] < w[0]), "d={d}: {defects:?}");
        }
    }

    #[test]
    fn perimeter_is_symmetric_and_vanishes_on_empty_set() {
        let v = nonlocal_perimeter(&slab(2, 2.0, 0), 16.0).unwrap();
        let h = nonlocal_perimeter(&slab(2, 2.0, 1), 16.0).unwrap();
        assert!((v - h).abs() < 1e-11 * v);
        assert_eq!(nonlocal_perimeter(&RectUnionSet::empty(2, 2.0).unwrap(), 16.0).unwrap(), 0.0);
        let set = RectUnionSet::new(2, 2.0, vec![Rect::new(vec![0.2, 0.5], vec![1.1, 1.3])]).unwrap();
        let moved = set.translated(&[0.7, 1.1]).unwrap();
        let a = nonlocal_perimeter(&set, 16.0).unwrap();
        let b = nonlocal_perimeter(&moved, 16.0).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn box_perimeter_converges() {
        let set = RectUnionSet::new(2, 2.0, vec![Rect::new(vec![0.2, 0.5], vec![1.1, 1.3])]).unwrap();
        let rows = gamma_sweep(&set, &[8.0, 16.0, 32.0, 64.0], None).unwrap();
        assert!((rows[0].per1 - 3.4).abs() < 1e-12);
        assert!(rows.windows(2).all(|w| w[1].abs_error < w[0].abs_error), "{rows:?}");
        assert!(rows[3].abs_error < 0.1 * rows[3].per1);
        assert_eq!(sweep_to_csv(&rows).lines().count(), 5);
    }

    #[test]
    fn double_yukawa_approaches_the_limit_on_stripes() {
        let set = make_stripes(0, 0.5, 0.0, 2.0, 2).unwrap();
        let j = coupling_tilde(&KernelSpec::yukawa(2, 1.0).unwrap(), 6.0).unwrap();
        let rows = gamma_sweep(&set, &[8.0, 16.0, 32.0, 64.0], Some(j)).unwrap();
        let gaps: Vec<f64> = rows.iter().map(|r| r.energy_gap.unwrap().abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert_eq!(double_yukawa_energy(&RectUnionSet::empty(2, 2.0).unwrap(), 8.0, j).unwrap(), 0.0);
    }

    #[test]
    fn attractive_term_is_l1_continuous() {
        let n = 32;
        let period = 2.0;
        let mut cells = vec![false; n * n];
        for j in 0..n {
            for i in 0..n / 2 {
                cells[j * n + i] = true;
            }
        }
        let base = GridSet::new(n, period, cells.clone()).unwrap();
        cells[5 * n + 20] = true;
        let flipped = GridSet::new(n, period, cells).unwrap();
        let k1 = KernelSpec::yukawa(2, 1.0).unwrap().mixture(1.0);
        let a = nonlocal_integral(&base.rect_union(), &k1).unwrap();
        let b = nonlocal_integral(&flipped.rect_union(), &k1).unwrap();
        let cell = (period / n as f64).powi(2);
        // |Δ| ≤ 2·cell·∫K₁ with ∫K₁ = 4 for e^{−|ζ|₁}.
        assert!((a - b).abs() <= 8.0 * cell, "{}", (a - b).abs() / cell);
    }

    #[test]
    fn anisotropy_of_the_one_norm_kernel() {
        assert!((anisotropy(0.0) - 1.0).abs() < 1e-15);
        let diag = std::f64::consts::FRAC_PI_4;
        assert!((anisotropy(diag) - 0.75 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn aligned_interface_has_no_cross_term() {
        let r = tilted_interface_report(0.0, 32.0, 1.0, 1.0).unwrap();
        assert!((r.total - 1.0).abs() < 0.02, "{r:?}");
        assert!(r.cross.abs() < 1e-8 && r.directional[1].abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn tilted_interface_converges_to_the_anisotropy() {
        let theta = std::f64::consts::FRAC_PI_4;
        let r = tilted_interface_report(theta, 32.0, 1.0, 1.0).unwrap();
        let (s, c) = theta.sin_cos();
        assert!((r.directional[0] - c).abs() < 0.03 && (r.directional[1] - s).abs() < 0.03, "{r:?}");
        assert!((r.total - anisotropy(theta)).abs() < 0.03, "{r:?}");
        assert!(r.cross > 0.1);
    }
}
