//! d-dimensional periodic energies of rectangle unions and grid sets.
//!
//! The nonlocal interaction is evaluated through the Laplace mixture of the
//! kernel. For a fixed `λ` the kernel `e^{-λ|ζ|₁}` is separable, so every
//! cell-to-cell interaction on the product lattice of a set is a product of
//! per-axis closed forms, and one adaptive quadrature in `λ` remains (none
//! for the planar kernel).
//!
//! The total is assembled as `Σ_i G^i + X`. Each `G^i` is an exact sum of
//! one-dimensional slice energies along `e_i`, and `X = Σ_i N_i − N` gathers
//! the interactions that are not aligned with an axis. Here `N` is the full
//! nonlocal term and `N_i` its analogue with `ζ` replaced by `ζ_i e_i`. The
//! splitting lower bound replaces `X` by `Σ_i I^i ≤ X`.

use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::geometry::{slice, Cube, GridSet, RectUnionSet};
use crate::kernels::{rescaled_coupling, KernelSpec, Mixture, RescaleParams, SlicedKernel};
use crate::lattice::{periodic_pair_matrix, periodic_point_vector, Lattice};
use crate::quadrature::{gauss_legendre, QuadOptions};
use crate::stripes1d::{r_im_1d, rescaled_excess, slice_bracket, StripeProfile};

const LAMBDA_OPTS: QuadOptions = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-11, max_intervals: 4000 };

/// Sets whose energy can be evaluated: anything convertible to a union of boxes.
pub trait PeriodicSet {
    fn rect_union(&self) -> Cow<'_, RectUnionSet>;
}

impl PeriodicSet for RectUnionSet {
    fn rect_union(&self) -> Cow<'_, RectUnionSet> {
        Cow::Borrowed(self)
    }
}

impl PeriodicSet for GridSet {
    fn rect_union(&self) -> Cow<'_, RectUnionSet> {
        Cow::Owned(self.to_rect_union())
    }
}

/// Kernel, coupling and prefactor of one of the two functionals.
#[derive(Debug, Clone, Copy)]
struct Setting {
    kernel: SlicedKernel,
    mixture: Mixture,
    coupling: f64,
    /// `J − ∫_ℝ |ρ| K̂(ρ) dρ`.
    excess: f64,
    prefactor: f64,
}

impl Setting {
    fn rescaled(params: &RescaleParams, period: f64) -> Self {
        let kernel = params.sliced();
        Self {
            kernel,
            mixture: params.mixture(),
            coupling: rescaled_coupling(params),
            excess: rescaled_excess(&kernel),
            prefactor: params.m * params.m / period.powi(params.d as i32),
        }
    }

    fn unrescaled(d: usize, coupling: f64, period: f64) -> Result<Self> {
        let spec = KernelSpec::yukawa(d, 1.0)?;
        let kernel = spec.sliced(1.0);
        Ok(Self {
            kernel,
            mixture: spec.mixture(1.0),
            coupling,
            excess: coupling - 2.0 * kernel.phi2(0.0),
            prefactor: 1.0 / period.powi(d as i32),
        })
    }
}

/// Value of a functional together with its splitting.
///
/// `perimeter_term` and `nonlocal_term` carry the prefactor (`M²/L^d` or
/// `1/L^d`), so `total = perimeter_term − nonlocal_term`. The per-direction
/// `g_terms` and `i_terms` do not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub prefactor: f64,
    pub perimeter_term: f64,
    pub nonlocal_term: f64,
    pub total: f64,
    pub g_terms: Vec<f64>,
    pub i_terms: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_avg_total: Option<f64>,
}

impl EnergyBreakdown {
    /// `prefactor · Σ_i (G^i + I^i)`, a lower bound for `total`.
    pub fn splitting_lower_bound(&self) -> f64 {
        self.prefactor * (self.g_terms.iter().sum::<f64>() + self.i_terms.iter().sum::<f64>())
    }
}

/// `F̃_{J,L}(E) = (1/L^d)(J·Per₁(E) − ∫∫ |χ_E(x+ζ) − χ_E(x)| K₁(ζ) dζ dx)`.
///
/// The period is the set's own.
pub fn functional_unrescaled(set: &impl PeriodicSet, coupling: f64) -> Result<EnergyBreakdown> {
    let set = set.rect_union();
    if !coupling.is_finite() {
        return domain(format!("coupling must be finite, got {coupling}"));
    }
    breakdown(&set, &Setting::unrescaled(set.d, coupling, set.period)?)
}

/// `F_{M,L}(E) = (M²/L^d)(J_M·Per₁(E) − ∫∫ |χ_E(x+ζ) − χ_E(x)| K̄_M(ζ) dζ dx)`.
pub fn functional_rescaled(set: &impl PeriodicSet, params: &RescaleParams) -> Result<EnergyBreakdown> {
    let set = set.rect_union();
    check_dimension(&set, params)?;
    breakdown(&set, &Setting::rescaled(params, set.period))
}

fn check_dimension(set: &RectUnionSet, params: &RescaleParams) -> Result<()> {
    if set.d != params.d {
        return domain(format!("set has dimension {} but the kernel {}", set.d, params.d));
    }
    Ok(())
}

fn breakdown(set: &RectUnionSet, setting: &Setting) -> Result<EnergyBreakdown> {
    let lat = set.lattice();
    let d = lat.d;
    let g_terms = slice_terms(&lat, &setting.kernel, setting.excess);
    let (chi, comp) = indicator(&lat);
    let v = setting.mixture.integrate(
        d + 1,
        |lambda, out| {
            let mats = pair_matrices(&lat, lambda);
            let t = cross_terms(&lat, &mats, &chi, &comp);
            for i in 0..d {
                out[i] = 2.0 / d as f64 * t[i].iter().sum::<f64>();
            }
            out[d] = if d == 2 {
                t.iter().flatten().sum()
            } else {
                cross_excess(&lat, &mats, &chi, &comp, lambda)
            };
        },
        LAMBDA_OPTS,
    )?;
    let perimeter: f64 = (0..d).map(|a| lat.per1_axis(a)).sum();
    let pref = setting.prefactor;
    let total = pref * (g_terms.iter().sum::<f64>() + v[d]);
    let perimeter_term = pref * setting.coupling * perimeter;
    Ok(EnergyBreakdown {
        prefactor: pref,
        perimeter_term,
        nonlocal_term: perimeter_term - total,
        total,
        g_terms,
        i_terms: v[..d].to_vec(),
        local_avg_total: None,
    })
}

/// `∫_{[0,L)^d} ∫_{ℝ^d} |χ_E(x+ζ) − χ_E(x)| K(ζ) dζ dx` for the kernel with
/// Laplace mixture `mixture`, evaluated directly.
pub(crate) fn nonlocal_integral(set: &RectUnionSet, mixture: &Mixture) -> Result<f64> {
    let lat = set.lattice();
    let (chi, comp) = indicator(&lat);
    if chi.iter().all(|&c| c == 0.0) || comp.iter().all(|&c| c == 0.0) {
        return Ok(0.0);
    }
    mixture.integrate_scalar(
        |lambda| {
            let mut full = comp.clone();
            for (a, m) in pair_matrices(&lat, lambda).iter().enumerate() {
                full = lat.apply_axis(m, a, &full);
            }
            2.0 * chi.iter().zip(&full).map(|(c, f)| c * f).sum::<f64>()
        },
        LAMBDA_OPTS,
    )
}

fn indicator(lat: &Lattice) -> (Vec<f64>, Vec<f64>) {
    let chi: Vec<f64> = lat.occ.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect();
    let comp = chi.iter().map(|c| 1.0 - c).collect();
    (chi, comp)
}

fn pair_matrices(lat: &Lattice, lambda: f64) -> Vec<Vec<Vec<f64>>> {
    (0..lat.d).map(|a| periodic_pair_matrix(&lat.breaks[a], &lat.widths[a], lat.period, lambda)).collect()
}

/// Picks `on[c]` in occupied cells and `off[c]` elsewhere.
fn select(lat: &Lattice, on: Vec<f64>, off: Vec<f64>) -> Vec<f64> {
    lat.occ.iter().zip(on.into_iter().zip(off)).map(|(&o, (a, b))| if o { a } else { b }).collect()
}

/// Positions (cell indices along the line) where occupancy changes.
fn line_edges(lat: &Lattice, cells: &[usize]) -> Vec<usize> {
    let n = cells.len();
    (0..n).filter(|&k| lat.occ[cells[k]] != lat.occ[cells[(k + n - 1) % n]]).collect()
}

/// `G^i` for every direction: transverse area times the slice energy.
fn slice_terms(lat: &Lattice, kernel: &SlicedKernel, excess: f64) -> Vec<f64> {
    (0..lat.d)
        .map(|i| {
            lat.bases(i)
                .into_iter()
                .map(|base| {
                    let cells: Vec<usize> = lat.line(i, base).collect();
                    let pts: Vec<f64> = line_edges(lat, &cells).into_iter().map(|k| lat.breaks[i][k]).collect();
                    if pts.is_empty() {
                        0.0
                    } else {
                        lat.transverse_area(i, base) * slice_bracket(&pts, lat.period, kernel, excess)
                    }
                })
                .sum()
        })
        .collect()
}

/// `T_i(c) = ∫_{x∈c} ∫ |χ(x+ζ_i e_i) − χ(x)| |χ(x+ζ_i^⊥) − χ(x)| e^{-λ|ζ|₁} dζ dx`
/// for every direction `i` and cell `c`.
fn cross_terms(lat: &Lattice, mats: &[Vec<Vec<f64>>], chi: &[f64], comp: &[f64]) -> Vec<Vec<f64>> {
    (0..lat.d)
        .map(|i| {
            let along = select(lat, lat.apply_axis(&mats[i], i, comp), lat.apply_axis(&mats[i], i, chi));
            let (mut on, mut off) = (comp.to_vec(), chi.to_vec());
            for j in (0..lat.d).filter(|&j| j != i) {
                on = lat.apply_axis(&mats[j], j, &on);
                off = lat.apply_axis(&mats[j], j, &off);
            }
            let across = select(lat, on, off);
            along.iter().zip(&across).map(|(a, b)| a * b).collect()
        })
        .collect()
}

/// `X(λ) = Σ_i N_i(λ) − N(λ)`.
fn cross_excess(lat: &Lattice, mats: &[Vec<Vec<f64>>], chi: &[f64], comp: &[f64], lambda: f64) -> f64 {
    let mut full = comp.to_vec();
    for (a, m) in mats.iter().enumerate() {
        full = lat.apply_axis(m, a, &full);
    }
    let mut x = 0.0;
    for i in 0..lat.d {
        let along = lat.apply_axis(&mats[i], i, comp);
        for (idx, &c) in chi.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let coords = lat.coords(idx);
            let free: f64 = (0..lat.d).filter(|&j| j != i).map(|j| 2.0 * lat.widths[j][coords[j]] / lambda).product();
            x += 2.0 * along[idx] * free;
        }
    }
    let n: f64 = chi.iter().zip(&full).map(|(c, f)| c * f).sum();
    x - 2.0 * n
}

fn check_axis(set: &RectUnionSet, i: usize) -> Result<()> {
    if i >= set.d {
        return domain(format!("axis {i} out of range for d = {}", set.d));
    }
    Ok(())
}

/// Full coordinates from the transverse ones and the coordinate along `i`.
fn embed(i: usize, t_perp: &[f64], along: f64) -> Vec<f64> {
    let mut x = t_perp.to_vec();
    x.insert(i, along);
    x
}

/// `r_{i,M}(E, t⊥, s)` for the boundary point `s` of the slice through `t⊥`.
pub fn r_im(set: &impl PeriodicSet, i: usize, t_perp: &[f64], s: f64, params: &RescaleParams) -> Result<f64> {
    let set = set.rect_union();
    check_dimension(&set, params)?;
    let profile = slice(&set, i, t_perp)?.to_profile()?;
    let j = profile.index_of(s).ok_or_else(|| Error::Domain(format!("{s} is not a boundary point of the slice")))?;
    r_im_1d(&profile, j, params)
}

/// Cells along a line strictly between the boundary points before and after
/// edge `j` (the whole line when there are only two).
fn window(edges: &[usize], j: usize, n: usize) -> impl Iterator<Item = usize> {
    let m = edges.len();
    let start = edges[(j + m - 1) % m];
    let end = edges[(j + 1) % m];
    let count = match (end + n - start) % n {
        0 => n,
        c => c,
    };
    (0..count).map(move |k| (start + k) % n)
}

/// Per-λ slab sums `Σ_{b: b_i = k} χ_b Π_{a≠i} p_a[b_a]` (and the complement)
/// for each coordinate `k` along `i`.
fn slab_weights(lat: &Lattice, i: usize, point: &[f64], lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let vecs: Vec<Vec<f64>> = (0..lat.d)
        .map(|a| if a == i { Vec::new() } else { periodic_point_vector(point[a], &lat.breaks[a], &lat.widths[a], lat.period, lambda) })
        .collect();
    let mut on = vec![0.0; lat.dims[i]];
    let mut off = vec![0.0; lat.dims[i]];
    for idx in 0..lat.len() {
        let c = lat.coords(idx);
        let w: f64 = (0..lat.d).filter(|&a| a != i).map(|a| vecs[a][c[a]]).product();
        if lat.occ[idx] {
            on[c[i]] += w;
        } else {
            off[c[i]] += w;
        }
    }
    (on, off)
}

/// `v_{i,M}(E, t⊥, s) = (1/2d) ∫_{s⁻}^{s⁺} ∫ f_E K̄_M dζ du`.
pub fn v_im(set: &impl PeriodicSet, i: usize, t_perp: &[f64], s: f64, params: &RescaleParams) -> Result<f64> {
    let set = set.rect_union();
    check_dimension(&set, params)?;
    check_axis(&set, i)?;
    if t_perp.len() + 1 != set.d {
        return domain(format!("expected {} transverse coordinates", set.d - 1));
    }
    let lat = set.lattice();
    let point = embed(i, t_perp, 0.0);
    let coords: Vec<usize> = (0..lat.d).map(|a| if a == i { 0 } else { lat.locate(a, point[a]) }).collect();
    let cells: Vec<usize> = lat.line(i, lat.index(&coords)).collect();
    let edges = line_edges(&lat, &cells);
    if edges.len() < 2 {
        return domain("the slice needs at least two boundary points");
    }
    let l = lat.period;
    let s = s.rem_euclid(l);
    let j = edges
        .iter()
        .position(|&k| {
            let gap = (lat.breaks[i][k] - s).abs();
            gap.min(l - gap) <= 1e-9 * l
        })
        .ok_or_else(|| Error::Domain(format!("{s} is not a boundary point of the slice")))?;
    let win: Vec<usize> = window(&edges, j, cells.len()).collect();
    let d = lat.d as f64;
    params.mixture().integrate_scalar(
        |lambda| {
            let p = periodic_pair_matrix(&lat.breaks[i], &lat.widths[i], l, lambda);
            let (on, off) = slab_weights(&lat, i, &point, lambda);
            win.iter()
                .map(|&k| {
                    let occupied = lat.occ[cells[k]];
                    let a: f64 = (0..cells.len()).filter(|&b| lat.occ[cells[b]] != occupied).map(|b| p[k][b]).sum();
                    let b = if occupied { off[k] } else { on[k] };
                    a * b
                })
                .sum::<f64>()
                / (2.0 * d)
        },
        LAMBDA_OPTS,
    )
}

/// `w_{i,M}(E, t) = (1/d) ∫ f_E(t, ζ) K̄_M(ζ) dζ`.
pub fn w_im(set: &impl PeriodicSet, i: usize, t: &[f64], params: &RescaleParams) -> Result<f64> {
    let set = set.rect_union();
    check_dimension(&set, params)?;
    check_axis(&set, i)?;
    if t.len() != set.d {
        return domain(format!("expected a point with {} coordinates", set.d));
    }
    let lat = set.lattice();
    let coords: Vec<usize> = (0..lat.d).map(|a| lat.locate(a, t[a])).collect();
    let occupied = lat.occ[lat.index(&coords)];
    let cells: Vec<usize> = lat.line(i, lat.index(&coords)).collect();
    let d = lat.d as f64;
    params.mixture().integrate_scalar(
        |lambda| {
            let p = periodic_point_vector(t[i], &lat.breaks[i], &lat.widths[i], lat.period, lambda);
            let a: f64 = cells.iter().enumerate().filter(|(_, &c)| lat.occ[c] != occupied).map(|(b, _)| p[b]).sum();
            let (on, off) = slab_weights(&lat, i, t, lambda);
            let b = if occupied { off[coords[i]] } else { on[coords[i]] };
            a * b / d
        },
        LAMBDA_OPTS,
    )
}

/// Cells along `axis` covered by the window `[z − l/2, z + l/2)` of a lattice
/// that already contains both window ends as breakpoints.
fn window_cells(lat: &Lattice, axis: usize, center: f64, side: f64) -> Vec<bool> {
    let n = lat.dims[axis];
    let l = lat.period;
    let mut inside = vec![false; n];
    if side >= l {
        inside.fill(true);
        return inside;
    }
    let start = (center - 0.5 * side).rem_euclid(l);
    let cyclic = |x: f64| {
        let g = (x - start).abs();
        g.min(l - g)
    };
    let mut k = (0..n).min_by(|&a, &b| cyclic(lat.breaks[axis][a]).total_cmp(&cyclic(lat.breaks[axis][b]))).unwrap_or(0);
    let mut covered = 0.0;
    for _ in 0..n {
        let w = lat.widths[axis][k];
        if covered + 0.5 * w >= side {
            break;
        }
        inside[k] = true;
        covered += w;
        k = (k + 1) % n;
    }
    inside
}

fn check_cube(set: &RectUnionSet, cube: &Cube) -> Result<()> {
    if cube.center.len() != set.d {
        return domain(format!("cube center needs {} coordinates", set.d));
    }
    if !(cube.side > 0.0 && cube.side <= set.period) {
        return domain(format!("cube side must lie in (0, L], got {}", cube.side));
    }
    Ok(())
}

/// `F̄_{i,M}(E, Q_l(z))` for all directions at once.
fn local_terms(set: &RectUnionSet, cube: &Cube, params: &RescaleParams) -> Result<Vec<f64>> {
    let d = set.d;
    let half = 0.5 * cube.side;
    let extra: Vec<Vec<f64>> = cube.center.iter().map(|&z| vec![z - half, z + half]).collect();
    let lat = set.lattice_with(&extra);
    let inside: Vec<Vec<bool>> = (0..d).map(|a| window_cells(&lat, a, cube.center[a], cube.side)).collect();
    let in_cube = |c: &[usize], skip: Option<usize>| (0..d).filter(|&a| Some(a) != skip).all(|a| inside[a][c[a]]);

    let mut alpha = vec![vec![0.0; lat.len()]; d];
    let mut r_part = vec![0.0; d];
    for idx in 0..lat.len() {
        if in_cube(&lat.coords(idx), None) {
            for a in alpha.iter_mut() {
                a[idx] += 1.0 / d as f64;
            }
        }
    }
    for i in 0..d {
        for base in lat.bases(i) {
            if !in_cube(&lat.coords(base), Some(i)) {
                continue;
            }
            let cells: Vec<usize> = lat.line(i, base).collect();
            let edges = line_edges(&lat, &cells);
            if edges.is_empty() {
                continue;
            }
            let pts: Vec<f64> = edges.iter().map(|&k| lat.breaks[i][k]).collect();
            let profile = StripeProfile::new(lat.period, pts, lat.occ[cells[edges[0]]])?;
            let area = lat.transverse_area(i, base);
            for (j, &k) in edges.iter().enumerate() {
                if !inside[i][k] {
                    continue;
                }
                r_part[i] += area * r_im_1d(&profile, j, params)?;
                for c in window(&edges, j, cells.len()) {
                    alpha[i][cells[c]] += 0.5 / d as f64;
                }
            }
        }
    }

    let (chi, comp) = indicator(&lat);
    let cross = params.mixture().integrate(
        d,
        |lambda, out| {
            let mats = pair_matrices(&lat, lambda);
            let t = cross_terms(&lat, &mats, &chi, &comp);
            for i in 0..d {
                out[i] = alpha[i].iter().zip(&t[i]).map(|(a, t)| a * t).sum();
            }
        },
        LAMBDA_OPTS,
    )?;
    let vol = cube.side.powi(d as i32);
    Ok((0..d).map(|i| (r_part[i] + cross[i]) / vol).collect())
}

/// `F̄_{i,M}(E, Q_l(z))`: the slice terms `r + v` of boundary points in the
/// cube plus the bulk term `w`, averaged over the cube.
pub fn local_energy(set: &impl PeriodicSet, i: usize, cube: &Cube, params: &RescaleParams) -> Result<f64> {
    let set = set.rect_union();
    check_dimension(&set, params)?;
    check_axis(&set, i)?;
    check_cube(&set, cube)?;
    Ok(local_terms(&set, cube, params)?[i])
}

/// `F̄_M(E, Q_l(z)) = Σ_i F̄_{i,M}(E, Q_l(z))`.
pub fn local_energy_total(set: &impl PeriodicSet, cube: &Cube, params: &RescaleParams) -> Result<f64> {
    let set = set.rect_union();
    check_dimension(&set, params)?;
    check_cube(&set, cube)?;
    Ok(local_terms(&set, cube, params)?.iter().sum())
}

/// Samples of `z ↦ F̄_M(E, Q_l(z))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalEnergyField {
    pub side: f64,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl LocalEnergyField {
    /// Evaluates the field at the given centers.
    pub fn at_points(set: &impl PeriodicSet, params: &RescaleParams, side: f64, points: Vec<Vec<f64>>) -> Result<Self> {
        let set = set.rect_union();
        check_dimension(&set, params)?;
        let values = points
            .iter()
            .map(|z| {
                let cube = Cube::new(z.clone(), side);
                check_cube(&set, &cube)?;
                Ok(local_terms(&set, &cube, params)?.iter().sum())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { side, points, values })
    }

    /// Evaluates the field on the uniform grid `(k + 1/2)·L/n`, `k < n`, per axis.
    pub fn on_grid(set: &impl PeriodicSet, params: &RescaleParams, side: f64, n: usize) -> Result<Self> {
        let set = set.rect_union();
        if n == 0 {
            return domain("grid needs at least one point per axis");
        }
        let step = set.period / n as f64;
        let points = (0..n.pow(set.d as u32))
            .map(|mut k| {
                (0..set.d)
                    .map(|_| {
                        let c = k % n;
                        k /= n;
                        (c as f64 + 0.5) * step
                    })
                    .collect()
            })
            .collect();
        Self::at_points(set.as_ref(), params, side, points)
    }

    /// CSV with columns `z_1, …, z_d, f_bar`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let d = self.points.first().map_or(0, Vec::len);
        let mut out: String = (1..=d).map(|a| format!("z_{a},")).collect();
        out.push_str("f_bar\n");
        for (z, v) in self.points.iter().zip(&self.values) {
            for x in z {
                out.push_str(&format!("{x:.16e},"));
            }
            out.push_str(&format!("{v:.16e}\n"));
        }
        out
    }
}

/// How `z` is integrated over the torus in [`averaging_identity_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZQuadrature {
    /// Tensor Gauss–Legendre on the pieces where the integrand is smooth.
    Gauss { nodes: usize },
    /// Uniform sampling with a fixed seed.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Result of [`averaging_identity_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragingCheck {
    /// `(M²/L^d) ∫ F̄_M(E, Q_l(z)) dz`.
    pub lhs: f64,
    /// `(M²/L^d) Σ_i (G^i + I^i)`.
    pub rhs: f64,
    pub gap: f64,
    /// `F_{M,L}(E)`.
    pub functional: f64,
    /// Number of cube centers evaluated.
    pub evaluations: usize,
}

impl AveragingCheck {
    /// Whether `F_{M,L}(E) ≥ rhs − tol`.
    pub fn lower_bound_holds(&self, tol: f64) -> bool {
        self.functional >= self.rhs - tol
    }
}

/// Breakpoints in `z_a` where a face of the cube crosses a face of the set.
fn z_kinks(lat: &Lattice, axis: usize, side: f64) -> Vec<f64> {
    let half = 0.5 * side;
    let l = lat.period;
    let mut k: Vec<f64> = lat.breaks[axis]
        .iter()
        .flat_map(|&b| [b - half, b + half])
        .map(|x| x.rem_euclid(l))
        .map(|x| if x >= l { 0.0 } else { x })
        .chain([0.0])
        .collect();
    k.sort_by(f64::total_cmp);
    k.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * l);
    k
}

/// Compares the torus average of the local energy with the splitting.
pub fn averaging_identity_check(
    set: &impl PeriodicSet,
    params: &RescaleParams,
    side: f64,
    method: ZQuadrature,
) -> Result<AveragingCheck> {
    let set = set.rect_union();
    check_dimension(&set, params)?;
    check_cube(&set, &Cube::new(vec![0.0; set.d], side))?;
    let d = set.d;
    let l = set.period;
    let (nodes, weights): (Vec<Vec<f64>>, Vec<f64>) = match method {
        ZQuadrature::Gauss { nodes } => {
            if nodes == 0 {
                return domain("need at least one Gauss node per piece");
            }
            let lat = set.lattice();
            let (x, w) = gauss_legendre(nodes);
            let axes: Vec<Vec<(f64, f64)>> = (0..d)
                .map(|a| {
                    let k = z_kinks(&lat, a, side);
                    (0..k.len())
                        .flat_map(|p| {
                            let lo = k[p];
                            let hi = k.get(p + 1).copied().unwrap_or(l);
                            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                            x.iter().zip(&w).map(move |(xi, wi)| (mid + half * xi, half * wi)).collect::<Vec<_>>()
                        })
                        .collect()
                })
                .collect();
            let count: usize = axes.iter().map(Vec::len).product();
            (0..count)
                .map(|mut k| {
                    let mut z = Vec::with_capacity(d);
                    let mut weight = 1.0;
                    for axis in &axes {
                        let (p, wt) = axis[k % axis.len()];
                        k /= axis.len();
                        z.push(p);
                        weight *= wt;
                    }
                    (z, weight)
                })
                .unzip()
        }
        ZQuadrature::MonteCarlo { samples, seed } => {
            if samples < 1000 {
                return domain(format!("Monte Carlo needs at least 1000 samples, got {samples}"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vol = l.powi(d as i32);
            (0..samples).map(|_| ((0..d).map(|_| rng.gen::<f64>() * l).collect(), vol / samples as f64)).unzip()
        }
    };
    let mut integral = 0.0;
    for (z, w) in nodes.iter().zip(&weights) {
        integral += w * local_terms(&set, &Cube::new(z.clone(), side), params)?.iter().sum::<f64>();
    }
    let energy = functional_rescaled(set.as_ref(), params)?;
    let lhs = energy.prefactor * integral;
    let rhs = energy.splitting_lower_bound();
    Ok(AveragingCheck { lhs, rhs, gap: (lhs - rhs).abs(), functional: energy.total, evaluations: nodes.len() })
}
