//! Candidate ranking, simulated annealing on grid sets, and period scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy_nd::{functional_rescaled, PeriodicSet};
use crate::error::{domain, Error, Result};
use crate::geometry::{
    commensurate, make_checkerboard, make_perturbed_stripes, make_stripes, stripe_distance_min, Cube, GridSet,
    RectUnionSet, StripeDistance, DEFAULT_BINS,
};
use crate::kernels::{rescaled_coupling, RescaleParams};
use crate::lattice::periodic_pair_matrix;
use crate::quadrature::QuadOptions;
use crate::stripes1d::periodic_stripe_energy_rescaled;

/// A competitor in [`compare_candidates`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Candidate {
    Stripes { axis: usize, width: f64, phase: f64 },
    Checkerboard { width: f64 },
    PerturbedStripes { axis: usize, width: f64, amplitude: f64, mode: u32, resolution: usize },
    Custom { label: String, set: RectUnionSet },
}

impl Candidate {
    pub fn label(&self) -> String {
        match self {
            Candidate::Stripes { axis, width, .. } => format!("stripes(axis={axis}, h={width:.6})"),
            Candidate::Checkerboard { width } => format!("checkerboard(h={width:.6})"),
            Candidate::PerturbedStripes { amplitude, mode, resolution, .. } => {
                format!("perturbed-stripes(a={amplitude:.6}, mode={mode}, n={resolution})")
            }
            Candidate::Custom { label, .. } => label.clone(),
        }
    }

    /// The candidate as a set of the given dimension and period.
    pub fn build(&self, d: usize, period: f64) -> Result<RectUnionSet> {
        match self {
            Candidate::Stripes { axis, width, phase } => make_stripes(*axis, *width, *phase, period, d),
            Candidate::Checkerboard { width } if d == 2 => make_checkerboard(*width, period),
            Candidate::PerturbedStripes { axis, width, amplitude, mode, resolution } if d == 2 => {
                Ok(make_perturbed_stripes(*axis, *width, *amplitude, *mode, period, *resolution)?.to_rect_union())
            }
            Candidate::Custom { set, .. } if set.d == d && (set.period - period).abs() <= 1e-12 * period => Ok(set.clone()),
            Candidate::Custom { .. } => domain("custom candidate has the wrong dimension or period"),
            _ => domain(format!("candidate {} is planar only", self.label())),
        }
    }
}

/// Optimal stripes, stripes one pair off, the checkerboard, and perturbed
/// stripes at amplitudes `0.1h̃` and `0.2h̃`, all at period `L = 2k·h̃`.
pub fn standard_candidates(params: &RescaleParams, period: f64, resolution: usize) -> Result<Vec<Candidate>> {
    let h = params.h_tilde();
    let k = commensurate(h, period)?;
    let mut out = vec![Candidate::Stripes { axis: 0, width: h, phase: 0.0 }];
    for pairs in [k.saturating_sub(1), k + 1] {
        if pairs >= 1 && pairs != k {
            out.push(Candidate::Stripes { axis: 0, width: period / (2.0 * pairs as f64), phase: 0.0 });
        }
    }
    if params.d == 2 {
        out.push(Candidate::Checkerboard { width: h });
        for frac in [0.1, 0.2] {
            out.push(Candidate::PerturbedStripes { axis: 0, width: h, amplitude: frac * h, mode: 1, resolution });
        }
    }
    Ok(out)
}

/// A ranked candidate (rank 1 is the lowest energy).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedCandidate {
    pub rank: usize,
    pub label: String,
    pub energy: f64,
}

/// Evaluates `F_{M,L}` on every candidate and sorts by energy.
pub fn compare_candidates(params: &RescaleParams, period: f64, candidates: &[Candidate]) -> Result<Vec<RankedCandidate>> {
    commensurate(params.h_tilde(), period)?;
    let mut scored = candidates
        .iter()
        .map(|c| Ok((c.label(), functional_rescaled(&c.build(params.d, period)?, params)?.total)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(scored.into_iter().enumerate().map(|(i, (label, energy))| RankedCandidate { rank: i + 1, label, energy }).collect())
}

/// Metropolis annealing schedule on `n × n` grid sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    /// Starting temperature; `None` calibrates it to the mean `|ΔF|` of
    /// random single flips of the initial state.
    pub initial_temperature: Option<f64>,
    /// Factor applied to the temperature after every sweep.
    pub cooling: f64,
    pub sweeps: usize,
    /// Block flips per sweep, in addition to `n²` single flips.
    pub block_moves: usize,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { initial_temperature: None, cooling: 0.97, sweeps: 300, block_moves: 200, seed: 0 }
    }
}

impl AnnealSchedule {
    fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return domain(format!("cooling factor must lie in (0, 1), got {}", self.cooling));
        }
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return domain(format!("initial temperature must be positive, got {t}"));
            }
        }
        Ok(())
    }
}

/// One row of the annealing trace, recorded at the end of every sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub move_index: usize,
    pub energy: f64,
    /// Running minimum of `energy`.
    pub best: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealResult {
    pub set: GridSet,
    pub initial_energy: f64,
    /// `F_{M,L}` of `set` from [`functional_rescaled`].
    pub energy: f64,
    pub trace: Vec<TracePoint>,
    pub accepted: usize,
    /// Largest disagreement between an incremental `ΔF` and the difference of
    /// full evaluations over the spot checks, relative to the size of the
    /// perimeter and interaction parts.
    pub max_flip_mismatch: f64,
}

/// Trace as CSV: `move_index, energy, best, temperature`.
pub fn trace_to_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from("move_index,energy,best,temperature\n");
    for t in trace {
        out.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", t.move_index, t.energy, t.best, t.temperature));
    }
    out
}

/// Spot-check interval for incremental energies.
const CHECK_EVERY: usize = 1000;

/// Planar grid energy with incremental updates.
///
/// `F = pref·(J·Per₁ − 2(|E|·S − Q))` where `W(o)` is the exact interaction of
/// two cells at offset `o`, `S = Σ_o W(o)` and `Q = Σ_{c,c'∈E} W(c − c')`.
struct GridEnergy {
    n: usize,
    cells: Vec<bool>,
    weights: Vec<f64>,
    total_weight: f64,
    /// `φ(c) = Σ_{c'∈E} W(c − c')`.
    field: Vec<f64>,
    q: f64,
    count: usize,
    faces: usize,
    face_cost: f64,
    pref: f64,
}

impl GridEnergy {
    fn new(params: &RescaleParams, grid: &GridSet) -> Result<Self> {
        let n = grid.n;
        let h = grid.cell_size();
        let edges: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        let widths = vec![h; n];
        let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 4000 };
        let weights = params.mixture().integrate(
            n * n,
            |lambda, out| {
                let row = &periodic_pair_matrix(&edges, &widths, grid.period, lambda)[0];
                for j in 0..n {
                    for i in 0..n {
                        out[j * n + i] = row[i] * row[j];
                    }
                }
            },
            opts,
        )?;
        let mut e = Self {
            n,
            cells: vec![false; n * n],
            total_weight: weights.iter().sum(),
            weights,
            field: vec![0.0; n * n],
            q: 0.0,
            count: 0,
            faces: 0,
            face_cost: rescaled_coupling(params) * h,
            pref: params.m * params.m / (grid.period * grid.period),
        };
        for (c, &v) in grid.cells.iter().enumerate() {
            if v {
                e.apply(&[c]);
            }
        }
        Ok(e)
    }

    fn weight(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        let di = (a % n + n - b % n) % n;
        let dj = (a / n + n - b / n) % n;
        self.weights[dj * n + di]
    }

    fn neighbors(&self, c: usize) -> [usize; 4] {
        let n = self.n;
        let (i, j) = (c % n, c / n);
        [j * n + (i + 1) % n, j * n + (i + n - 1) % n, ((j + 1) % n) * n + i, ((j + n - 1) % n) * n + i]
    }

    fn energy(&self) -> f64 {
        self.pref * (self.face_cost * self.faces as f64 - 2.0 * (self.count as f64 * self.total_weight - self.q))
    }

    /// `ΔF` of toggling every cell in `block` (distinct cells).
    fn delta(&self, block: &[usize]) -> f64 {
        let sign = |c: usize| if self.cells[c] { -1.0 } else { 1.0 };
        let mut dq = 0.0;
        for (k, &a) in block.iter().enumerate() {
            dq += 2.0 * sign(a) * self.field[a];
            dq += self.weights[0];
            for &b in &block[k + 1..] {
                dq += 2.0 * sign(a) * sign(b) * self.weight(a, b);
            }
        }
        let dcount: f64 = block.iter().map(|&c| sign(c)).sum();
        let mut dfaces = 0i64;
        let inside = |c: usize| block.contains(&c);
        for &a in block {
            for b in self.neighbors(a) {
                if inside(b) {
                    continue;
                }
                dfaces += if self.cells[a] == self.cells[b] { 1 } else { -1 };
            }
        }
        self.pref * (self.face_cost * dfaces as f64 - 2.0 * (dcount * self.total_weight - dq))
    }

    fn apply(&mut self, block: &[usize]) {
        for &a in block {
            let before = self.faces as i64;
            let mut df = 0i64;
            for b in self.neighbors(a) {
                df += if self.cells[a] == self.cells[b] { 1 } else { -1 };
            }
            self.faces = (before + df) as usize;
            let sign = if self.cells[a] { -1.0 } else { 1.0 };
            self.q += 2.0 * sign * self.field[a] + self.weights[0];
            self.count = if self.cells[a] { self.count - 1 } else { self.count + 1 };
            self.cells[a] = !self.cells[a];
            for c in 0..self.field.len() {
                self.field[c] += sign * self.weight(c, a);
            }
        }
    }

    /// Size of the two cancelling parts of the energy.
    fn magnitude(&self) -> f64 {
        self.pref * (self.face_cost * self.faces as f64 + 2.0 * self.count as f64 * self.total_weight).max(1.0)
    }

    /// Energy from scratch, ignoring the cached field.
    fn full_energy(&self) -> f64 {
        let members: Vec<usize> = (0..self.cells.len()).filter(|&c| self.cells[c]).collect();
        let mut q = 0.0;
        for &a in &members {
            for &b in &members {
                q += self.weight(a, b);
            }
        }
        let mut faces = 0usize;
        for c in 0..self.cells.len() {
            let [right, _, up, _] = self.neighbors(c);
            faces += (self.cells[c] != self.cells[right]) as usize + (self.cells[c] != self.cells[up]) as usize;
        }
        self.pref * (self.face_cost * faces as f64 - 2.0 * (members.len() as f64 * self.total_weight - q))
    }
}

/// Coarsest grid used by the multilevel schedule.
const COARSEST: usize = 8;
/// Starting temperature of each refinement level, relative to its mean
/// single-flip cost.
const REFINE_FRACTION: f64 = 0.05;

/// Resolutions visited by [`anneal`], coarsest first.
fn levels(n: usize) -> Vec<usize> {
    let mut out = vec![n];
    while out[out.len() - 1] % 2 == 0 && out[out.len() - 1] / 2 >= COARSEST {
        out.push(out[out.len() - 1] / 2);
    }
    out.reverse();
    out
}

/// Majority vote over `f × f` blocks (ties count as members).
fn coarsen(grid: &GridSet, m: usize) -> Result<GridSet> {
    let f = grid.n / m;
    let cells = (0..m * m)
        .map(|c| {
            let (ci, cj) = (c % m, c / m);
            let votes = (0..f * f).filter(|&k| grid.get(ci * f + k % f, cj * f + k / f)).count();
            2 * votes >= f * f
        })
        .collect();
    GridSet::new(m, grid.period, cells)
}

fn refine(grid: &GridSet, n: usize) -> Result<GridSet> {
    let f = n / grid.n;
    GridSet::new(n, grid.period, (0..n * n).map(|c| grid.get((c % n) / f, (c / n) / f)).collect())
}

#[derive(Default)]
struct Chain {
    trace: Vec<TracePoint>,
    best: f64,
    accepted: usize,
    moves: usize,
    mismatch: f64,
}

impl Chain {
    fn mean_flip_cost(state: &GridEnergy, rng: &mut ChaCha8Rng) -> f64 {
        let probes = 256;
        let cells = state.cells.len();
        (0..probes).map(|_| state.delta(&[rng.gen_range(0..cells)]).abs()).sum::<f64>() / probes as f64
    }

    fn run(&mut self, state: &mut GridEnergy, thick: usize, sweeps: usize, block_moves: usize, t0: f64, cooling: f64, rng: &mut ChaCha8Rng) {
        let n = state.n;
        let cells = n * n;
        let mut temperature = t0;
        let mut block = Vec::new();
        for _ in 0..sweeps {
            for m in 0..cells + block_moves {
                block.clear();
                if m < cells {
                    block.push(rng.gen_range(0..cells));
                } else {
                    let a = rng.gen_range(1..=thick);
                    let b = if rng.gen_bool(0.5) { n } else { rng.gen_range(1..=n) };
                    let (w, h) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
                    let (i0, j0) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    for dj in 0..h {
                        for di in 0..w {
                            block.push(((j0 + dj) % n) * n + (i0 + di) % n);
                        }
                    }
                }
                let de = state.delta(&block);
                self.moves += 1;
                let check = self.moves % CHECK_EVERY == 0;
                let before = if check { state.full_energy() } else { 0.0 };
                if de <= 0.0 || rng.gen::<f64>() < (-de / temperature).exp() {
                    state.apply(&block);
                    self.accepted += 1;
                    if check {
                        let after = state.full_energy();
                        self.mismatch = self.mismatch.max((after - before - de).abs() / state.magnitude());
                    }
                }
            }
            let energy = state.energy();
            self.best = self.best.min(energy);
            self.trace.push(TracePoint { move_index: self.moves, energy, best: self.best, temperature });
            temperature *= cooling;
        }
    }
}

/// Seeded Metropolis annealing of `F_{M,L}` over `n × n` grid sets (`d = 2`).
///
/// Moves are single-cell flips plus rectangular block flips up to `h̃`
/// thick. The chain runs coarse to fine: the random start is coarsened by
/// majority vote down to at least [`COARSEST`] cells per side, annealed there
/// with the full schedule, and each refinement is annealed for a quarter of
/// the sweeps at four times the cooling rate, starting from a fixed fraction of
/// its mean flip cost.
pub fn anneal(params: &RescaleParams, period: f64, n: usize, schedule: &AnnealSchedule) -> Result<AnnealResult> {
    if params.d != 2 {
        return domain("annealing is planar");
    }
    if !(16..=64).contains(&n) {
        return domain(format!("grid resolution must lie in [16, 64], got {n}"));
    }
    schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let start = GridSet::new(n, period, (0..n * n).map(|_| rng.gen_bool(0.5)).collect())?;
    let initial_energy = GridEnergy::new(params, &start)?.energy();
    let mut chain = Chain { best: f64::INFINITY, ..Chain::default() };
    let mut current: Option<GridSet> = None;
    for (k, m) in levels(n).into_iter().enumerate() {
        let grid = match &current {
            None => coarsen(&start, m)?,
            Some(g) => refine(g, m)?,
        };
        let mut state = GridEnergy::new(params, &grid)?;
        let thick = ((params.h_tilde() / grid.cell_size()).round() as usize).clamp(1, m);
        let scale = Chain::mean_flip_cost(&state, &mut rng);
        let (t0, sweeps, cooling) = match (k, schedule.initial_temperature) {
            (0, Some(t)) => (t, schedule.sweeps, schedule.cooling),
            (0, None) => (scale, schedule.sweeps, schedule.cooling),
            _ => (REFINE_FRACTION * scale, (schedule.sweeps / 4).max(1), schedule.cooling.powi(4)),
        };
        chain.run(&mut state, thick, sweeps, schedule.block_moves, t0, cooling, &mut rng);
        current = Some(GridSet::new(m, period, state.cells)?);
    }
    let set = current.expect("at least one level");
    let exact = functional_rescaled(&set, params)?.total;
    if !exact.is_finite() {
        return Err(Error::Numerical("non-finite energy after annealing".into()));
    }
    Ok(AnnealResult {
        set,
        initial_energy,
        energy: exact,
        trace: chain.trace,
        accepted: chain.accepted,
        max_flip_mismatch: chain.mismatch,
    })
}

/// `min_i D^i_η` of a set over the whole period cell.
pub fn stripiness(set: &impl PeriodicSet, eta: f64) -> Result<StripeDistance> {
    let set = set.rect_union();
    stripe_distance_min(&set, eta, &Cube::full(set.d, set.period), DEFAULT_BINS)
}

/// Best admissible stripe width at one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodScanRow {
    pub period: f64,
    /// Number of stripe pairs per period.
    pub pairs: usize,
    /// `h_{M,L} = L / (2·pairs)`.
    pub width: f64,
    pub energy: f64,
    /// `|h_{M,L} − h̃|`.
    pub gap: f64,
    /// `gap · L`, the constant of the `C/L` law.
    pub c_estimate: f64,
}

/// Minimizes the rescaled stripe energy over the admissible widths `L/(2k)`.
pub fn width_vs_period_scan(params: &RescaleParams, periods: &[f64]) -> Result<Vec<PeriodScanRow>> {
    let h = params.h_tilde();
    periods
        .iter()
        .map(|&period| {
            if !(period > 0.0 && period.is_finite()) {
                return domain(format!("period must be positive, got {period}"));
            }
            let kmax = (period / h).ceil() as usize + 1;
            let mut best: Option<(usize, f64)> = None;
            for k in 1..=kmax {
                let e = periodic_stripe_energy_rescaled(period / (2.0 * k as f64), params)?;
                if best.map_or(true, |(_, b)| e < b) {
                    best = Some((k, e));
                }
            }
            let (pairs, energy) = best.expect("at least one width");
            let width = period / (2.0 * pairs as f64);
            let gap = (width - h).abs();
            Ok(PeriodScanRow { period, pairs, width, energy, gap, c_estimate: gap * period })
        })
        .collect()
}

/// Scan rows as CSV: `L, pairs, h_ML, energy, gap, c_estimate`.
pub fn scan_to_csv(rows: &[PeriodScanRow]) -> String {
    let mut out = String::from("L,pairs,h_ML,energy,gap,c_estimate\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.period, r.pairs, r.width, r.energy, r.gap, r.c_estimate
        ));
    }
    out
}
