//! Acceptance battery: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use yukawa_stripes::energy_nd::{averaging_identity_check, functional_rescaled, functional_unrescaled, ZQuadrature};
use yukawa_stripes::gamma_limit::{gamma_sweep, normalization_constant, tilted_interface_report};
use yukawa_stripes::geometry::{make_stripes, Rect, RectUnionSet};
use yukawa_stripes::kernels::{complete_monotonicity_report, coupling_tilde, sliced_kernel, KernelSpec};
use yukawa_stripes::optimize::grid_golden;
use yukawa_stripes::quadrature::{integrate_to_inf, QuadOptions};
use yukawa_stripes::search::{anneal, compare_candidates, standard_candidates, stripiness, width_vs_period_scan, AnnealSchedule};
use yukawa_stripes::stripes1d::{
    brute_force_min_profile, curvature_certificate, optimal_width, periodic_stripe_energy_rescaled, profile_energy_1d,
    rescale_params, PeriodicStripes1D, DEFAULT_FD_STEP,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed < limit
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

/// Up to `boxes` random boxes, each inside its own orthant cell of the period.
fn random_set(rng: &mut ChaCha8Rng, d: usize, period: f64, boxes: usize) -> RectUnionSet {
    let half = 0.5 * period;
    let mut cells: Vec<usize> = (0..1 << d).collect();
    let mut out = Vec::new();
    for _ in 0..boxes.min(cells.len()) {
        let cell = cells.swap_remove(rng.gen_range(0..cells.len()));
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for a in 0..d {
            let base = if cell >> a & 1 == 1 { half } else { 0.0 };
            let len = rng.gen_range(0.15..0.8) * half;
            let start = base + rng.gen_range(0.0..(half - len));
            lo.push(start);
            hi.push(start + len);
        }
        out.push(Rect::new(lo, hi));
    }
    RectUnionSet::new(d, period, out).expect("boxes lie in distinct cells")
}

fn kernel_closed_form() -> Outcome {
    let start = Instant::now();
    let spec = KernelSpec::new(3, 1.0).unwrap();
    let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 };
    let mut worst: f64 = 0.0;
    for t in log_grid(1e-3, 20.0, 50) {
        let oracle = 4.0
            * integrate_to_inf(
                |y| integrate_to_inf(|z| (-(t + y + z)).exp() / (t + y + z), 0.0, opts).unwrap().value,
                0.0,
                opts,
            )
            .unwrap()
            .value;
        worst = worst.max((sliced_kernel(&spec, t).unwrap() - oracle).abs());
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= 1e-8 && within(Duration::from_secs(10), elapsed),
        detail: format!("max |closed form - 2D quadrature| = {worst:.2e} on 50 points (limit 1e-8), {elapsed:.2?} (limit 10 s)"),
    }
}

fn reflection_positivity() -> Outcome {
    let spec = KernelSpec::new(3, 1.0).unwrap();
    let grid = log_grid(0.05, 10.0, 40);
    let report = complete_monotonicity_report(&spec, &grid, 6, 1e-9, 1e-5).unwrap();
    let worst = report.entries.iter().map(|e| e.signed).fold(f64::INFINITY, f64::min);
    let fd = report.max_fd_mismatch();
    Outcome {
        pass: report.all_pass() && fd <= 1e-5,
        detail: format!(
            "min (-1)^n K^(n) = {worst:.3e} over n <= 6, t in [0.05, 10] (limit -1e-9); max FD mismatch {fd:.2e} (limit 1e-5)"
        ),
    }
}

fn coupling_constant() -> Outcome {
    let spec = KernelSpec::new(3, 1.0).unwrap();
    // ∫_{|ζ|₁ ≤ r} |ζ₁| dζ = r⁴/3 in ℝ³, so J̃_∞ = ∫_0^∞ (4r³/3) e^{-r}/r dr.
    let oracle = integrate_to_inf(|r| 4.0 / 3.0 * r * r * (-r).exp(), 0.0, QuadOptions::rel(1e-14)).unwrap().value;
    let j_inf = coupling_tilde(&spec, f64::INFINITY).unwrap();
    let ladder: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0].iter().map(|&m| coupling_tilde(&spec, m).unwrap()).collect();
    let monotone = ladder.windows(2).all(|w| w[1] > w[0]) && ladder.iter().all(|&j| j <= j_inf);
    let tail = j_inf - ladder[ladder.len() - 1];
    let err = (j_inf - 8.0 / 3.0).abs().max((j_inf - oracle).abs());
    Outcome {
        pass: err <= 1e-8 && monotone && tail <= 1e-8,
        detail: format!(
            "J_inf = {j_inf:.15} (8/3 and radial oracle {oracle:.15}, error {err:.1e}); J_M increasing over M = 1..64: {monotone}, J_inf - J_64 = {tail:.1e}"
        ),
    }
}

fn stripe_asymptotics() -> Outcome {
    let start = Instant::now();
    let ms = [6.0, 8.0, 10.0, 12.0, 14.0];
    let opt: Vec<_> = ms.iter().map(|&m| optimal_width(m, 3).unwrap()).collect();
    let ratio: Vec<f64> = opt.iter().map(|o| o.h_star / o.m).collect();
    let rate: Vec<f64> = opt.iter().map(|o| (-o.e_star).ln() / o.m).collect();
    let increasing = ratio.windows(2).all(|w| w[1] > w[0]);
    let last = ratio[ratio.len() - 1];
    let in_band = rate.iter().all(|&r| (-1.3..=-0.7).contains(&r));
    let trending = (rate[rate.len() - 1] + 1.0).abs() < (rate[0] + 1.0).abs();
    let elapsed = start.elapsed();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    Outcome {
        pass: increasing && last >= 0.8 && in_band && trending && within(Duration::from_secs(60), elapsed),
        detail: format!(
            "h*/M = [{}] increasing: {increasing}; ln(-e*)/M = [{}] in [-1.3, -0.7]: {in_band}, trending to -1: {trending}; {elapsed:.2?}",
            fmt(&ratio),
            fmt(&rate)
        ),
    }
}

fn rescaling() -> Outcome {
    let m = 8.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let d = if k % 2 == 0 { 2 } else { 3 };
        let opt = optimal_width(m, d).unwrap();
        let p = rescale_params(m, d).unwrap();
        let j = coupling_tilde(&KernelSpec::yukawa(d, 1.0).unwrap(), m).unwrap();
        let set = random_set(&mut rng, d, 3.0 * m, 3);
        let lhs = functional_unrescaled(&set, j).unwrap().total;
        let rhs = -opt.e_star * functional_rescaled(&set.scaled(1.0 / m).unwrap(), &p).unwrap().total;
        worst = worst.max((lhs - rhs).abs() / lhs.abs());
    }
    let p = rescale_params(12.0, 3).unwrap();
    let h = p.h_tilde();
    let min = grid_golden(|x| periodic_stripe_energy_rescaled(x, &p).unwrap(), 0.5 * h, 2.0 * h, 32, 1e-10).unwrap();
    let off = (min.f + 1.0).abs();
    Outcome {
        pass: off <= 1e-4 && worst <= 1e-6,
        detail: format!("rescaled stripe optimum {:.10} (|+1| = {off:.1e}, limit 1e-4); scaling identity max rel. error {worst:.1e} on 5 random sets (limit 1e-6)", min.f),
    }
}

fn uniqueness() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [10.0, 12.0, 14.0] {
        let p = rescale_params(m, 3).unwrap();
        let c = curvature_certificate(p.h_tilde(), &p, DEFAULT_FD_STEP).unwrap();
        pass &= c.extrapolated > 0.0 && c.consistent;
        parts.push(format!("M={m}: e''={:.6e} consistent={}", c.extrapolated, c.consistent));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn profile_search() -> Outcome {
    let start = Instant::now();
    let p = rescale_params(12.0, 3).unwrap();
    let period = 4.0 * p.h_tilde();
    let found = brute_force_min_profile(&p, period, 2, 20, 11).unwrap();
    let periodic = PeriodicStripes1D::new(p.h_tilde()).unwrap().profile(period).unwrap();
    let target = profile_energy_1d(&periodic, &p);
    let dist = found.profile.distance_to_equispaced();
    let gap = (found.energy - target).abs();
    let elapsed = start.elapsed();
    Outcome {
        pass: dist <= 1e-3 && gap <= 1e-6 && within(Duration::from_secs(300), elapsed),
        detail: format!("boundary-point distance {dist:.1e} (limit 1e-3), energy gap {gap:.1e} (limit 1e-6), {elapsed:.2?} (limit 5 min)"),
    }
}

fn averaging_identity() -> Outcome {
    let p = rescale_params(12.0, 2).unwrap();
    let h = p.h_tilde();
    let period = 4.0 * h;
    let method = ZQuadrature::Gauss { nodes: 6 };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let stripes = make_stripes(0, h, 0.3, period, 2).unwrap();
    let boxes = random_set(&mut rng, 2, period, 2);
    let mut rel: f64 = 0.0;
    for set in [&stripes, &boxes] {
        let c = averaging_identity_check(set, &p, h, method).unwrap();
        rel = rel.max(c.gap.abs() / c.rhs.abs());
    }
    let mut slack = f64::INFINITY;
    for k in 0..10 {
        let n = 1 + k % 3;
        let set = random_set(&mut rng, 2, period, n);
        let c = averaging_identity_check(&set, &p, h, method).unwrap();
        slack = slack.min(c.functional - c.rhs);
    }
    let p3 = rescale_params(12.0, 3).unwrap();
    let mut slack3 = f64::INFINITY;
    for k in 0..10 {
        let set = random_set(&mut rng, 3, 4.0 * p3.h_tilde(), 1 + k % 3);
        let b = functional_rescaled(&set, &p3).unwrap();
        slack3 = slack3.min(b.total - b.splitting_lower_bound());
    }
    Outcome {
        pass: rel <= 1e-3 && slack >= -1e-9 && slack3 >= -1e-9,
        detail: format!(
            "max |lhs - rhs|/|rhs| = {rel:.1e} on stripes and a random 2-box set (limit 1e-3); min F - rhs = {slack:.1e} over 10 random planar sets, {slack3:.1e} over 10 random 3D sets (limit -1e-9)"
        ),
    }
}

fn stripes_beat_competitors() -> Outcome {
    let p = rescale_params(12.0, 2).unwrap();
    let period = 4.0 * p.h_tilde();
    let ranking = compare_candidates(&p, period, &standard_candidates(&p, period, 96).unwrap()).unwrap();
    let optimal = format!("stripes(axis=0, h={:.6})", p.h_tilde());
    let best = ranking.iter().find(|r| r.label == optimal).unwrap().energy;
    let rivals: Vec<_> = ranking.iter().filter(|r| r.label.starts_with("checkerboard") || r.label.starts_with("perturbed")).collect();
    let margin = rivals.iter().map(|r| r.energy - best).fold(f64::INFINITY, f64::min);
    Outcome {
        pass: rivals.len() == 3 && margin > 1e-4 && ranking[0].label == optimal,
        detail: format!("optimal stripes {best:.6} rank first; smallest margin over checkerboard and perturbed stripes {margin:.3e} (limit 1e-4)"),
    }
}

fn annealing() -> Outcome {
    let start = Instant::now();
    let p = rescale_params(12.0, 2).unwrap();
    let period = 4.0 * p.h_tilde();
    let floor = periodic_stripe_energy_rescaled(p.h_tilde(), &p).unwrap();
    let mut good = 0;
    let mut bounds = true;
    let mut parts = Vec::new();
    for seed in 0..3 {
        let r = anneal(&p, period, 48, &AnnealSchedule { seed, ..AnnealSchedule::default() }).unwrap();
        let d = stripiness(&r.set, 0.5 * p.h_tilde()).unwrap();
        good += usize::from(d.value <= 0.1);
        bounds &= r.energy <= r.initial_energy && r.energy >= floor - 1e-6;
        parts.push(format!("seed {seed}: D={:.4} F={:.6}", d.value, r.energy));
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: good >= 2 && bounds && within(Duration::from_secs(900), elapsed),
        detail: format!("{}; {good}/3 seeds with D <= 0.1 (need 2), energy bounds hold: {bounds}; {elapsed:.2?} (limit 15 min)", parts.join(", ")),
    }
}

fn gamma_battery() -> Outcome {
    let start = Instant::now();
    let mut c = Vec::new();
    for l in [1.0, 2.0, 4.0] {
        for b in [4.0, 8.0, 16.0, 32.0, 64.0f64] {
            c.push(normalization_constant(3, b, l).unwrap() / b.powi(3));
        }
    }
    let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let bracket = hi / lo <= 2.0;

    let betas = [8.0, 16.0, 32.0, 64.0];
    let mut decreasing = true;
    for l in [1.0, 2.0, 4.0] {
        let slab = RectUnionSet::new(2, l, vec![Rect::new(vec![0.0, 0.0], vec![0.5 * l, l])]).unwrap();
        let err: Vec<f64> = gamma_sweep(&slab, &betas, None).unwrap().iter().map(|r| r.abs_error).collect();
        decreasing &= err.windows(2).all(|w| w[1] < w[0]);
    }

    let ratios: Vec<f64> = betas
        .iter()
        .map(|&b| tilted_interface_report(std::f64::consts::FRAC_PI_4, b, 1.0, 1.0).unwrap().cross_ratio)
        .collect();
    let bounded = ratios[ratios.len() - 1] <= 2.0 * ratios[0];
    let elapsed = start.elapsed();
    let fmt = ratios.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ");
    Outcome {
        pass: bracket && decreasing && bounded && within(Duration::from_secs(600), elapsed),
        detail: format!(
            "(a) C/beta^3 in [{lo:.4}, {hi:.4}], single bracket: {bracket}; (b) slab |P - 2L| strictly decreasing: {decreasing}; (c) cross*beta^4/C = [{fmt}] at 45 deg, bounded: {bounded}; {elapsed:.2?} (limit 10 min)"
        ),
    }
}

fn period_scan() -> Outcome {
    let p = rescale_params(12.0, 2).unwrap();
    let h = p.h_tilde();
    let on: Vec<f64> = width_vs_period_scan(&p, &[2.0 * h, 4.0 * h, 8.0 * h]).unwrap().iter().map(|r| r.gap).collect();
    let commensurate = on.windows(2).all(|w| w[1] <= w[0] + 1e-12 * h) && on.iter().all(|&g| g <= 1e-12 * h);
    let off = width_vs_period_scan(&p, &[2.5 * h, 4.5 * h, 8.5 * h]).unwrap();
    let strictly = off.windows(2).all(|w| w[1].gap < w[0].gap);
    let (c1, c2) = (off[1].c_estimate, off[2].c_estimate);
    let stable = (c2 / c1 - 1.0).abs() <= 0.5;
    Outcome {
        pass: commensurate && strictly && stable,
        detail: format!(
            "gaps at L = 2,4,8 h~: [{:.1e}, {:.1e}, {:.1e}] non-increasing: {commensurate}; at L = 2.5,4.5,8.5 h~: [{:.4}, {:.4}, {:.4}] strictly decreasing: {strictly}, C = {c1:.4}, {c2:.4} stable within 50%: {stable}",
            on[0], on[1], on[2], off[0].gap, off[1].gap, off[2].gap
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("kernel closed form", kernel_closed_form),
        ("reflection positivity", reflection_positivity),
        ("coupling constant", coupling_constant),
        ("stripe asymptotics", stripe_asymptotics),
        ("rescaling self-consistency", rescaling),
        ("uniqueness certificate", uniqueness),
        ("1D profile search", profile_search),
        ("averaging identity", averaging_identity),
        ("stripes beat competitors", stripes_beat_competitors),
        ("annealing stripiness", annealing),
        ("Gamma-limit battery", gamma_battery),
        ("period scan", period_scan),
    ];
    let mut passed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        passed += usize::from(o.pass);
        println!("{:>2} {} {name}: {}", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {passed}/{} criteria pass", criteria.len());
    if passed < criteria.len() {
        std::process::exit(1);
    }
}
