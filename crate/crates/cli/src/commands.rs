//! Subcommand arguments and their execution.

use std::path::{Path, PathBuf};

use clap::{ArgAction, Args};
use serde::Serialize;
use serde_json::json;

use yukawa_stripes::energy_nd::{
    averaging_identity_check, functional_rescaled, functional_unrescaled, r_im, v_im, w_im, LocalEnergyField, ZQuadrature,
};
use yukawa_stripes::gamma_limit::{anisotropy, gamma_sweep, normalization_constant, sweep_to_csv, tilted_interface_report};
use yukawa_stripes::geometry::{slice, GridSet, RectUnionSet};
use yukawa_stripes::kernels::{complete_monotonicity_report, coupling_tilde, KernelSpec, RescaleParams};
use yukawa_stripes::search::{
    anneal, compare_candidates, scan_to_csv, standard_candidates, stripiness, trace_to_csv, width_vs_period_scan,
    AnnealSchedule, Candidate,
};
use yukawa_stripes::stripes1d::{
    optimal_width, periodic_stripe_energy_rescaled, periodic_stripe_energy_unrescaled, rescale_params,
};

use crate::output::{num, row, CliError, CliResult, Run};

fn log_spaced(lo: f64, hi: f64, points: usize) -> CliResult<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && points >= 2) {
        return Err(CliError::Config(format!("need 0 < min < max and at least 2 points, got [{lo}, {hi}] with {points}")));
    }
    let r = (hi / lo).ln();
    Ok((0..points).map(|k| lo * (r * k as f64 / (points - 1) as f64).exp()).collect())
}

fn lin_spaced(lo: f64, hi: f64, points: usize) -> CliResult<Vec<f64>> {
    if !(hi > lo && points >= 2) {
        return Err(CliError::Config(format!("need min < max and at least 2 points, got [{lo}, {hi}] with {points}")));
    }
    Ok((0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect())
}

/// Reads a rectangle-union or grid set from JSON.
pub fn load_set(path: &Path) -> CliResult<RectUnionSet> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    match RectUnionSet::from_json(&text) {
        Ok(s) => Ok(s),
        Err(rect) => GridSet::from_json(&text).map(|g| g.to_rect_union()).map_err(|grid| {
            CliError::Config(format!("{} is neither a set ({rect}) nor a grid ({grid})", path.display()))
        }),
    }
}

fn params_for(m: f64, d: usize) -> CliResult<RescaleParams> {
    Ok(rescale_params(m, d)?)
}

#[derive(Args, Debug, Serialize)]
pub struct KernelArgs {
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Screening parameter of the kernel.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.05)]
    pub t_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Highest derivative order in the sign report.
    #[arg(long, default_value_t = 6)]
    pub n_max: u32,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub fd_step: f64,
}

pub fn kernel(a: &KernelArgs, run: &mut Run) -> CliResult<()> {
    let spec = KernelSpec::new(a.d, a.mu)?;
    let k = spec.sliced(1.0);
    let ts = log_spaced(a.t_min, a.t_max, a.points)?;
    let mut csv = row(["t", "k_hat", "phi1", "phi2"].map(String::from));
    for &t in &ts {
        csv.push_str(&row([num(t), num(k.try_value(t)?), num(k.phi1(t)), num(k.phi2(t))]));
    }
    run.write("kernel.csv", &csv)?;
    run.tolerances = json!({ "sign_tolerance": a.tol, "fd_step": a.fd_step });
    let j_inf = coupling_tilde(&spec, f64::INFINITY)?;
    run.results = json!({ "profile": spec.profile, "coupling_infinity": j_inf });
    if spec.profile == yukawa_stripes::kernels::Profile::Yukawa {
        let report = complete_monotonicity_report(&spec, &ts, a.n_max, a.tol, a.fd_step)?;
        let mut csv = row(["t", "n", "derivative", "finite_difference", "signed", "pass"].map(String::from));
        for e in &report.entries {
            csv.push_str(&row([num(e.t), e.n.to_string(), num(e.derivative), num(e.finite_difference), num(e.signed), e.pass.to_string()]));
        }
        run.write("kernel_monotonicity.csv", &csv)?;
        run.results["all_signs_pass"] = json!(report.all_pass());
        run.results["max_fd_mismatch"] = json!(report.max_fd_mismatch());
    }
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct StripesArgs {
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long = "M", default_value_t = 12.0)]
    pub m: f64,
    /// Smallest width (default `M/4`, or `h̃/4` when rescaled).
    #[arg(long)]
    pub h_min: Option<f64>,
    /// Largest width (default `2M`, or `2h̃` when rescaled).
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub points: usize,
    /// Tabulate the rescaled energy in rescaled widths.
    #[arg(long, action = ArgAction::Set, default_value_t = false)]
    pub rescaled: bool,
}

pub fn stripes(a: &StripesArgs, run: &mut Run) -> CliResult<()> {
    let mut csv = row(["h", "energy"].map(String::from));
    if a.rescaled {
        let p = params_for(a.m, a.d)?;
        let hs = lin_spaced(a.h_min.unwrap_or(0.25 * p.h_tilde()), a.h_max.unwrap_or(2.0 * p.h_tilde()), a.points)?;
        for h in hs {
            csv.push_str(&row([num(h), num(periodic_stripe_energy_rescaled(h, &p)?)]));
        }
        run.results = json!({ "h_tilde": p.h_tilde() });
    } else {
        let hs = lin_spaced(a.h_min.unwrap_or(0.25 * a.m), a.h_max.unwrap_or(2.0 * a.m), a.points)?;
        for h in hs {
            csv.push_str(&row([num(h), num(periodic_stripe_energy_unrescaled(h, a.m, a.d)?)]));
        }
    }
    run.write("stripes.csv", &csv)
}

#[derive(Args, Debug, Serialize)]
pub struct OptimalWidthArgs {
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long = "M", value_delimiter = ',', default_value = "6,8,10,12")]
    pub m: Vec<f64>,
}

pub fn optimal_width_table(a: &OptimalWidthArgs, run: &mut Run) -> CliResult<()> {
    let mut csv = row(["M", "h_star", "h_star_over_M", "e_star", "log_e_over_M"].map(String::from));
    for &m in &a.m {
        let o = optimal_width(m, a.d)?;
        csv.push_str(&row([num(m), num(o.h_star), num(o.h_star / m), num(o.e_star), num((-o.e_star).ln() / m)]));
    }
    run.write("optimal-width.csv", &csv)
}

#[derive(Args, Debug, Serialize)]
pub struct EnergyArgs {
    /// Set file (rectangle union or grid JSON).
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long = "M", default_value_t = 12.0)]
    pub m: f64,
    /// Evaluate the unrescaled functional at this coupling instead.
    #[arg(long)]
    pub coupling: Option<f64>,
}

pub fn energy(a: &EnergyArgs, run: &mut Run) -> CliResult<()> {
    let set = load_set(&a.set)?;
    let b = match a.coupling {
        Some(j) => functional_unrescaled(&set, j)?,
        None => functional_rescaled(&set, &params_for(a.m, set.d)?)?,
    };
    let mut header: Vec<String> = ["prefactor", "perimeter_term", "nonlocal_term", "total", "lower_bound"].map(String::from).into();
    header.extend((1..=set.d).map(|k| format!("g_{k}")));
    header.extend((1..=set.d).map(|k| format!("i_{k}")));
    let mut cells = vec![num(b.prefactor), num(b.perimeter_term), num(b.nonlocal_term), num(b.total), num(b.splitting_lower_bound())];
    cells.extend(b.g_terms.iter().chain(&b.i_terms).map(|&x| num(x)));
    run.write("energy.csv", &(row(header) + &row(cells)))?;
    run.results = json!({ "total": b.total });
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long = "M", default_value_t = 12.0)]
    pub m: f64,
    /// Cube side for the local energy (default `min(2h̃, L)`).
    #[arg(long)]
    pub side: Option<f64>,
    /// Field points per axis.
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    /// Slice lines per transverse axis for the boundary terms.
    #[arg(long, default_value_t = 8)]
    pub lines: usize,
}

fn embed(t_perp: &[f64], axis: usize, s: f64) -> Vec<f64> {
    let mut z = t_perp.to_vec();
    z.insert(axis, s);
    z
}

fn transverse_points(d: usize, period: f64, lines: usize) -> Vec<Vec<f64>> {
    let step = period / lines as f64;
    (0..lines.pow(d as u32 - 1))
        .map(|mut k| {
            (0..d - 1)
                .map(|_| {
                    let c = k % lines;
                    k /= lines;
                    (c as f64 + 0.5) * step
                })
                .collect()
        })
        .collect()
}

pub fn decompose(a: &DecomposeArgs, run: &mut Run) -> CliResult<()> {
    let set = load_set(&a.set)?;
    let p = params_for(a.m, set.d)?;
    let side = a.side.unwrap_or((2.0 * p.h_tilde()).min(set.period));
    if a.lines == 0 {
        return Err(CliError::Config("need at least one slice line".into()));
    }
    let field = LocalEnergyField::on_grid(&set, &p, side, a.grid)?;
    run.write("decompose_field.csv", &field.to_csv())?;

    let coords = |prefix: &str| (1..=set.d).map(|k| format!("{prefix}_{k}")).collect::<Vec<_>>();
    let mut header = vec!["axis".to_string()];
    header.extend(coords("z"));
    let mut boundary = row(header.iter().cloned().chain(["r".into(), "v".into()]));
    let mut interior = row(header.iter().cloned().chain(["w".into()]));
    for axis in 0..set.d {
        for t_perp in transverse_points(set.d, set.period, a.lines) {
            for s in slice(&set, axis, &t_perp)?.boundary_points() {
                let z = embed(&t_perp, axis, s);
                let mut cells = vec![axis.to_string()];
                cells.extend(z.iter().map(|&x| num(x)));
                cells.push(num(r_im(&set, axis, &t_perp, s, &p)?));
                cells.push(num(v_im(&set, axis, &t_perp, s, &p)?));
                boundary.push_str(&row(cells));
            }
        }
        for z in &field.points {
            let mut cells = vec![axis.to_string()];
            cells.extend(z.iter().map(|&x| num(x)));
            cells.push(num(w_im(&set, axis, z, &p)?));
            interior.push_str(&row(cells));
        }
    }
    run.write("decompose_boundary.csv", &boundary)?;
    run.write("decompose_w.csv", &interior)?;
    run.results = json!({ "side": side, "h_tilde": p.h_tilde() });
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct AverageCheckArgs {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long = "M", default_value_t = 12.0)]
    pub m: f64,
    /// Cube side (default `min(2h̃, L)`).
    #[arg(long)]
    pub side: Option<f64>,
    /// Gauss–Legendre nodes per smooth piece.
    #[arg(long, default_value_t = 6)]
    pub nodes: usize,
    /// Use Monte Carlo with this many samples instead of Gauss–Legendre.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance of the lower-bound check `F ≥ rhs − tol`.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

pub fn average_check(a: &AverageCheckArgs, run: &mut Run) -> CliResult<()> {
    let set = load_set(&a.set)?;
    let p = params_for(a.m, set.d)?;
    let side = a.side.unwrap_or((2.0 * p.h_tilde()).min(set.period));
    let method = match a.samples {
        Some(samples) => {
            run.seeds.push(a.seed);
            ZQuadrature::MonteCarlo { samples, seed: a.seed }
        }
        None => ZQuadrature::Gauss { nodes: a.nodes },
    };
    let c = averaging_identity_check(&set, &p, side, method)?;
    let rel = c.gap / c.rhs.abs().max(f64::MIN_POSITIVE);
    let header = ["side", "lhs", "rhs", "gap", "relative_gap", "functional", "evaluations", "lower_bound_holds"];
    let cells = [num(side), num(c.lhs), num(c.rhs), num(c.gap), num(rel), num(c.functional), c.evaluations.to_string(), c.lower_bound_holds(a.tol).to_string()];
    run.write("average-check.csv", &(row(header.map(String::from)) + &row(cells)))?;
    run.tolerances = json!({ "lower_bound_tolerance": a.tol });
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct CompareArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "M", default_value_t = 12.0)]
    pub m: f64,
    /// Stripe pairs per period: `L = 2·pairs·h̃`.
    #[arg(long, default_value_t = 2)]
    pub pairs: usize,
    /// Grid resolution of perturbed stripes.
    #[arg(long, default_value_t = 96)]
    pub resolution: usize,
    /// Extra candidate sets (must share the period).
    #[arg(long, value_delimiter = ',')]
    pub set: Vec<PathBuf>,
}

pub fn compare(a: &CompareArgs, run: &mut Run) -> CliResult<()> {
    let p = params_for(a.m, a.d)?;
    if a.pairs == 0 {
        return Err(CliError::Config("pairs must be positive".into()));
    }
    let period = 2.0 * a.pairs as f64 * p.h_tilde();
    let mut candidates = standard_candidates(&p, period, a.resolution)?;
    for path in &a.set {
        candidates.push(Candidate::Custom { label: path.display().to_string(), set: load_set(path)? });
    }
    let ranking = compare_candidates(&p, period, &candidates)?;
    let mut csv = row(["rank", "label", "energy"].map(String::from));
    for r in &ranking {
        csv.push_str(&row([r.rank.to_string(), format!("\"{}\"", r.label.replace('"', "\"\"")), num(r.energy)]));
    }
    run.write("compare.csv", &csv)?;
    run.results = json!({ "L": period, "h_tilde": p.h_tilde() });
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct AnnealArgs {
    #[arg(long = "M", default_value_t = 12.0)]
    pub m: f64,
    #[arg(long, default_value_t = 2)]
    pub pairs: usize,
    /// Grid cells per side.
    #[arg(long, default_value_t = 48)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 300)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 0.97)]
    pub cooling: f64,
    #[arg(long, default_value_t = 200)]
    pub block_moves: usize,
    /// Starting temperature (default: calibrated from random flips).
    #[arg(long)]
    pub t0: Option<f64>,
    /// Stripe-distance tolerance `η` in units of `h̃`.
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
}

pub fn anneal_seeds(a: &AnnealArgs, run: &mut Run) -> CliResult<()> {
    let p = params_for(a.m, 2)?;
    if a.pairs == 0 || a.seeds.is_empty() {
        return Err(CliError::Config("pairs and the seed list must be nonempty".into()));
    }
    let period = 2.0 * a.pairs as f64 * p.h_tilde();
    let eta = a.eta * p.h_tilde();
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = a
            .seeds
            .iter()
            .map(|&seed| {
                let schedule = AnnealSchedule {
                    initial_temperature: a.t0,
                    cooling: a.cooling,
                    sweeps: a.sweeps,
                    block_moves: a.block_moves,
                    seed,
                };
                let p = &p;
                scope.spawn(move || -> CliResult<_> {
                    let r = anneal(p, period, a.n, &schedule)?;
                    let d = stripiness(&r.set, eta)?;
                    Ok((seed, r, d))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("annealing thread panicked")).collect()
    });
    let header = ["seed", "initial_energy", "energy", "stripe_distance", "stripe_axis", "accepted", "max_flip_mismatch"];
    let mut csv = row(header.map(String::from));
    let mut distances = Vec::new();
    for res in results {
        let (seed, r, d) = res?;
        csv.push_str(&row([
            seed.to_string(),
            num(r.initial_energy),
            num(r.energy),
            num(d.value),
            d.axis.to_string(),
            r.accepted.to_string(),
            num(r.max_flip_mismatch),
        ]));
        run.write(&format!("anneal_trace_seed{seed}.csv"), &trace_to_csv(&r.trace))?;
        run.write(&format!("anneal_set_seed{seed}.json"), &r.set.to_json())?;
        distances.push(d.value);
        run.seeds.push(seed);
    }
    run.write("anneal.csv", &csv)?;
    run.tolerances = json!({ "spot_check_interval": 1000 });
    run.results = json!({ "L": period, "h_tilde": p.h_tilde(), "eta": eta, "stripe_distances": distances });
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct ScanPeriodArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "M", default_value_t = 12.0)]
    pub m: f64,
    /// Periods in units of `h̃`.
    #[arg(long = "L-over-h", value_delimiter = ',', default_value = "2,4,8")]
    pub l_over_h: Vec<f64>,
}

pub fn scan_period(a: &ScanPeriodArgs, run: &mut Run) -> CliResult<()> {
    let p = params_for(a.m, a.d)?;
    let periods: Vec<f64> = a.l_over_h.iter().map(|x| x * p.h_tilde()).collect();
    let rows = width_vs_period_scan(&p, &periods)?;
    run.write("scan-period.csv", &scan_to_csv(&rows))?;
    run.results = json!({ "h_tilde": p.h_tilde(), "c_estimates": rows.iter().map(|r| r.c_estimate).collect::<Vec<_>>() });
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct GammaArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    pub beta: Vec<f64>,
    /// Set whose nonlocal perimeter is compared with `Per₁`.
    #[arg(long)]
    pub set: Option<PathBuf>,
    /// Also report the double-Yukawa energy gap at this coupling.
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Periods for the normalization table.
    #[arg(long = "L", value_delimiter = ',', default_value = "1,2,4")]
    pub periods: Vec<f64>,
    /// Interface angles for the tilted-interface report.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    /// Half-side of the window of the tilted-interface report.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Period entering `C_{β,L}` in the tilted-interface report.
    #[arg(long, default_value_t = 1.0)]
    pub tilt_period: f64,
}

pub fn gamma(a: &GammaArgs, run: &mut Run) -> CliResult<()> {
    let mut csv = row(["L", "beta", "C_beta_L", "C_over_beta3"].map(String::from));
    for &l in &a.periods {
        for &b in &a.beta {
            let c = normalization_constant(a.d, b, l)?;
            csv.push_str(&row([num(l), num(b), num(c), num(c / b.powi(3))]));
        }
    }
    run.write("gamma_constants.csv", &csv)?;
    if let Some(path) = &a.set {
        let set = load_set(path)?;
        if set.d != a.d {
            return Err(CliError::Config(format!("set has dimension {} but --d is {}", set.d, a.d)));
        }
        let rows = gamma_sweep(&set, &a.beta, a.coupling)?;
        let csv = match a.coupling {
            None => sweep_to_csv(&rows),
            Some(_) => {
                let header = ["beta", "L", "C_beta_L", "P_beta", "per1", "abs_error", "energy_gap"];
                let mut csv = row(header.map(String::from));
                for r in &rows {
                    let gap = r.energy_gap.map_or_else(String::new, num);
                    csv.push_str(&row([num(r.beta), num(r.period), num(r.c_beta_l), num(r.p_beta), num(r.per1), num(r.abs_error), gap]));
                }
                csv
            }
        };
        run.write("gamma.csv", &csv)?;
    }
    if !a.theta.is_empty() {
        let header = ["theta", "beta", "epsilon", "length", "directional_1", "directional_2", "cross", "total", "cross_ratio", "phi"];
        let mut csv = row(header.map(String::from));
        for &theta in &a.theta {
            for &b in &a.beta {
                let r = tilted_interface_report(theta, b, a.epsilon, a.tilt_period)?;
                csv.push_str(&row([
                    num(theta),
                    num(b),
                    num(a.epsilon),
                    num(r.length),
                    num(r.directional[0]),
                    num(r.directional[1]),
                    num(r.cross),
                    num(r.total),
                    num(r.cross_ratio),
                    num(anisotropy(theta)),
                ]));
            }
        }
        run.write("gamma_tilted.csv", &csv)?;
    }
    Ok(())
}
