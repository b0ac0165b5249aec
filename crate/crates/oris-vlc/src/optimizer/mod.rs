//! Solution machinery for the joint power-allocation / reflector-placement
//! problem: the illumination-constrained power LPs (subroutine 2), the
//! greedy placement heuristics (subroutine 1, one per resource policy), the
//! alternating loop that ties them together, the one-shot benchmark, and an
//! exact enumeration oracle for tiny instances.
//!
//! Two resource policies exist. `MinMirrors` grows the reflector set one
//! element at a time until the threshold is met and lets the power LP push
//! transmit power as high as the lighting constraints allow. `MinPower`
//! always deploys up to `n_max` reflectors and then asks for the cheapest
//! power meeting the threshold, falling back to the benchmark allocation
//! when no power satisfies it.

pub mod lp;

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelMatrix};
use crate::illumination::{self, SensingGrid};
use crate::metrics;
use crate::scene::{ElementSet, IlluminationConstraints, Scene};
use crate::Error;
use lp::{lp_solve, LinearProgram, LpOutcome, LpRow};

/// Which solver produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Approach {
    /// Benchmark power, no reflectors at all.
    #[serde(rename = "no-mirror")]
    NoMirror,
    /// Benchmark power plus a one-shot greedy placement; not iterated.
    #[serde(rename = "benchmark")]
    Benchmark,
    /// Alternating optimization, minimum-mirrors policy.
    #[serde(rename = "mm")]
    MinMirrors,
    /// Alternating optimization, minimum-power policy.
    #[serde(rename = "mp")]
    MinPower,
}

impl Approach {
    pub const ALL: [Approach; 4] = [
        Approach::NoMirror,
        Approach::Benchmark,
        Approach::MinMirrors,
        Approach::MinPower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Approach::NoMirror => "no-mirror",
            Approach::Benchmark => "benchmark",
            Approach::MinMirrors => "mm",
            Approach::MinPower => "mp",
        }
    }

    /// Whether this approach ever places reflector elements.
    pub fn places_mirrors(self) -> bool {
        !matches!(self, Approach::NoMirror)
    }
}

impl std::fmt::Display for Approach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Approach {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "no-mirror" => Ok(Approach::NoMirror),
            "benchmark" => Ok(Approach::Benchmark),
            "mm" => Ok(Approach::MinMirrors),
            "mp" => Ok(Approach::MinPower),
            other => Err(Error::InvalidConfig(format!(
                "unknown approach '{other}' (expected no-mirror|benchmark|mm|mp)"
            ))),
        }
    }
}

/// LED-to-element specular assignment. Stored as the owning LED per element,
/// which makes the one-LED-per-element rule structural.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    owner: Vec<Option<u16>>,
    selected: usize,
}

impl Assignment {
    pub fn empty(n_elements: usize) -> Self {
        Self {
            owner: vec![None; n_elements],
            selected: 0,
        }
    }

    /// Assign element `g` to LED `l`; the element must be free.
    pub fn assign(&mut self, g: usize, l: u16) {
        debug_assert!(self.owner[g].is_none(), "element already assigned");
        self.owner[g] = Some(l);
        self.selected += 1;
    }

    #[inline]
    pub fn owner(&self) -> &[Option<u16>] {
        &self.owner
    }

    pub fn beta(&self, l: usize, g: usize) -> bool {
        self.owner[g] == Some(l as u16)
    }

    pub fn mirrors_used(&self) -> usize {
        self.selected
    }

    pub fn selected_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.owner
            .iter()
            .enumerate()
            .filter_map(|(g, o)| o.map(|l| (l as usize, g)))
    }

    /// Check the placement budget and the ORIS-wall restriction.
    pub fn is_valid(&self, oris_range: &std::ops::Range<usize>, n_max: usize) -> bool {
        self.selected <= n_max
            && self
                .owner
                .iter()
                .enumerate()
                .all(|(g, o)| o.is_none() || oris_range.contains(&g))
    }
}

/// Nonnegative optical watts per LED plus the auxiliary minimum-illuminance
/// variable from the uniformity linearization.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub per_led: Vec<f64>,
    pub e_min: f64,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.per_led.iter().sum()
    }
}

/// Alternating-optimization knobs. `gamma_th` is stored linear; use
/// [`AoConfig::new`] to supply it in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct AoConfig {
    pub approach: Approach,
    /// Placement budget (C1).
    pub n_max: usize,
    /// Iteration cap of the alternating loop.
    pub t_max: usize,
    /// Relative SNR change declaring convergence.
    pub delta: f64,
    /// Resource regularization weight; applied lexicographically.
    pub epsilon: f64,
    /// SNR threshold, linear scale.
    pub gamma_th: f64,
}

impl AoConfig {
    pub fn new(approach: Approach, gamma_th_db: f64) -> Self {
        Self {
            approach,
            n_max: 128,
            t_max: 20,
            delta: 1e-6,
            epsilon: 1e-9,
            gamma_th: crate::db_to_linear(gamma_th_db),
        }
    }

    pub fn with_gamma_th_db(&self, gamma_th_db: f64) -> Self {
        let mut cfg = self.clone();
        cfg.gamma_th = crate::db_to_linear(gamma_th_db);
        cfg
    }
}

/// Outcome of one solve for one user realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Service flag b: true iff `gamma >= gamma_th`.
    pub served: bool,
    /// Achieved SNR, linear.
    pub gamma: f64,
    pub power: PowerAllocation,
    pub assignment: Assignment,
    /// Alternating iterations executed (0 for non-iterative solvers).
    pub iterations: usize,
    pub mirrors_used: usize,
    pub total_power: f64,
    pub converged: bool,
    /// b minus epsilon times the conserved resource.
    pub objective: f64,
    /// Achieved SNR after each alternating iteration, recorded at the
    /// placement step and after the power step.
    pub gamma_trace: Vec<(f64, f64)>,
}

/// Ranked specular candidate for subroutine 1.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    elem: usize,
    led: u16,
    /// Ranking score: blockage-masked specular gain times LED power.
    score: f64,
    /// Signal change when the element flips from diffuse to specular.
    net: f64,
}

/// Scene-level solver state: sensing grid, pruned LP rows and the cached
/// benchmark allocation. Construction fails when the lighting constraints
/// are infeasible, so every later solve can rely on the benchmark.
#[derive(Debug, Clone)]
pub struct SolverContext {
    pub scene: Scene,
    pub elements: ElementSet,
    pub grid: SensingGrid,
    /// Irredundant subset of the full constraint system, same feasible set.
    rows: Vec<LpRow>,
    benchmark: PowerAllocation,
}

impl SolverContext {
    pub fn new(scene: Scene) -> Result<Self, Error> {
        scene.validate()?;
        let elements = scene.element_set();
        let grid = illumination::build_sensing_grid(&scene);
        let full = illumination::constraint_rows(&grid, &scene.illum);
        let rows = prune_dominated_rows(&full, grid.n_leds, grid.n_points());
        let benchmark = benchmark_from_rows(&rows, grid.n_leds)?;
        Ok(Self {
            scene,
            elements,
            grid,
            rows,
            benchmark,
        })
    }

    /// Minimum-total-power allocation meeting the lighting constraints.
    pub fn benchmark_power(&self) -> &PowerAllocation {
        &self.benchmark
    }

    fn signal_threshold(&self, gamma_th: f64) -> f64 {
        (gamma_th * self.scene.noise.n0 * self.scene.noise.bandwidth).sqrt()
            / self.scene.receiver.responsivity
    }

    pub fn snr(&self, cm: &ChannelMatrix, p: &[f64], asg: &Assignment) -> f64 {
        metrics::snr_direct(
            p,
            asg.owner(),
            cm,
            self.scene.receiver.responsivity,
            &self.scene.noise,
        )
    }

    /// Candidate list for subroutine 1: per element, the best LED by the
    /// masked score, filtered to candidates that actually raise the signal,
    /// then ranked by selection sort (descending score, ties to the lower
    /// element index).
    fn specular_candidates(&self, cm: &ChannelMatrix, p: &[f64]) -> Vec<Candidate> {
        let ne = cm.n_elements;
        let mut cands: Vec<Candidate> = Vec::with_capacity(cm.oris_range.len());
        for g in cm.oris_range.clone() {
            let mut best: Option<Candidate> = None;
            for l in 0..cm.n_leds {
                let i = l * ne + g;
                if !cm.i_nlos[i] {
                    continue;
                }
                let score = cm.h_spec[i] * p[l];
                let net = (cm.h_spec[i] - cm.h_wall[i]) * p[l];
                if score > 0.0
                    && net > 0.0
                    && best.map_or(true, |b| score > b.score)
                {
                    best = Some(Candidate {
                        elem: g,
                        led: l as u16,
                        score,
                        net,
                    });
                }
            }
            if let Some(c) = best {
                cands.push(c);
            }
        }
        selection_sort_desc(&mut cands);
        cands
    }

    /// Greedy minimum-mirrors placement at fixed power: add elements in
    /// descending score order until the threshold is met or the budget is
    /// exhausted.
    pub fn subroutine1_mm(&self, cm: &ChannelMatrix, p: &[f64], cfg: &AoConfig) -> Assignment {
        let mut asg = Assignment::empty(cm.n_elements);
        let th = self.signal_threshold(cfg.gamma_th);
        let mut s = metrics::signal_sum(p, asg.owner(), cm);
        if s >= th {
            return asg;
        }
        for cand in self.specular_candidates(cm, p) {
            if asg.mirrors_used() >= cfg.n_max || s >= th {
                break;
            }
            asg.assign(cand.elem, cand.led);
            s += cand.net;
        }
        asg
    }

    /// One-shot minimum-power placement: the `n_max` best pairs outright.
    pub fn subroutine1_mp(&self, cm: &ChannelMatrix, p: &[f64], cfg: &AoConfig) -> Assignment {
        let mut asg = Assignment::empty(cm.n_elements);
        for cand in self.specular_candidates(cm, p).into_iter().take(cfg.n_max) {
            asg.assign(cand.elem, cand.led);
        }
        asg
    }

    fn subroutine1(&self, cm: &ChannelMatrix, p: &[f64], cfg: &AoConfig) -> Assignment {
        match cfg.approach {
            Approach::MinPower => self.subroutine1_mp(cm, p, cfg),
            _ => self.subroutine1_mm(cm, p, cfg),
        }
    }

    /// Power step at fixed placement.
    ///
    /// Minimum-power policy: cheapest allocation meeting the linearized SNR
    /// row on top of the lighting system; when even that is infeasible the
    /// user is in outage and the benchmark allocation applies. Minimum-
    /// mirrors policy: push the received signal as high as the lighting
    /// constraints allow, then read off the service flag.
    pub fn subroutine2(
        &self,
        asg: &Assignment,
        cm: &ChannelMatrix,
        cfg: &AoConfig,
    ) -> (PowerAllocation, bool) {
        let nl = self.grid.n_leds;
        let h: Vec<f64> = (0..nl)
            .map(|l| channel::overall_gain(cm, l, asg.owner()))
            .collect();
        // Tiny headroom keeps the reported flag consistent with the
        // strict-form threshold after rounding.
        let th = self.signal_threshold(cfg.gamma_th) * (1.0 + 1e-9);

        match cfg.approach {
            Approach::MinPower => {
                let at_benchmark: f64 = self
                    .benchmark
                    .per_led
                    .iter()
                    .zip(&h)
                    .map(|(p, h)| p * h)
                    .sum();
                if at_benchmark >= th {
                    // The benchmark already meets the threshold and no
                    // cheaper allocation can satisfy the lighting floor.
                    return (self.benchmark.clone(), true);
                }
                let mut rows = self.rows.clone();
                let mut snr_row = vec![0.0; nl + 1];
                for l in 0..nl {
                    snr_row[l] = -h[l];
                }
                rows.push(LpRow::new(snr_row, -th));
                let mut c = vec![1.0; nl];
                c.push(0.0);
                match lp_solve(&LinearProgram::new(c, rows)) {
                    LpOutcome::Optimal { x, .. } => (split_allocation(x, nl), true),
                    LpOutcome::Infeasible => (self.benchmark.clone(), false),
                    LpOutcome::Unbounded => unreachable!("minimized total power is bounded below"),
                }
            }
            _ => {
                // Maximize the received signal under the lighting system.
                // Normalized so the gain scale does not interact with the
                // solver's absolute cost tolerance.
                let h_max = h.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
                let mut c: Vec<f64> = h.iter().map(|v| -v / h_max).collect();
                c.push(0.0);
                match lp_solve(&LinearProgram::new(c, self.rows.clone())) {
                    LpOutcome::Optimal { x, .. } => {
                        let p = split_allocation(x, nl);
                        let s: f64 = p.per_led.iter().zip(&h).map(|(p, h)| p * h).sum();
                        let served = s >= self.signal_threshold(cfg.gamma_th);
                        (p, served)
                    }
                    LpOutcome::Infeasible => {
                        unreachable!("lighting system verified feasible at construction")
                    }
                    LpOutcome::Unbounded => {
                        unreachable!("per-point caps bound every power variable")
                    }
                }
            }
        }
    }

    /// Alternating loop: start from the benchmark power with no reflectors,
    /// alternate placement and power steps, stop when the SNR stabilizes or
    /// the iteration cap is hit.
    pub fn ao_solve(&self, cm: &ChannelMatrix, cfg: &AoConfig) -> SolveResult {
        let mut p = self.benchmark.clone();
        let mut asg = Assignment::empty(cm.n_elements);
        let mut gamma_prev = self.snr(cm, &p.per_led, &asg);
        let mut gamma = gamma_prev;
        let mut converged = false;
        let mut iterations = 0;
        let mut trace = Vec::new();

        for t in 1..=cfg.t_max {
            iterations = t;
            asg = self.subroutine1(cm, &p.per_led, cfg);
            let gamma_placed = self.snr(cm, &p.per_led, &asg);
            let (p_new, _) = self.subroutine2(&asg, cm, cfg);
            p = p_new;
            gamma = self.snr(cm, &p.per_led, &asg);
            trace.push((gamma_placed, gamma));
            if (gamma - gamma_prev).abs() / gamma_prev.max(1e-12) < cfg.delta {
                converged = true;
                break;
            }
            gamma_prev = gamma;
        }

        self.finish(cfg, gamma, p, asg, iterations, converged, trace)
    }

    /// Benchmark power, no reflectors.
    pub fn no_mirror_solve(&self, cm: &ChannelMatrix, cfg: &AoConfig) -> SolveResult {
        let p = self.benchmark.clone();
        let asg = Assignment::empty(cm.n_elements);
        let gamma = self.snr(cm, &p.per_led, &asg);
        self.finish(cfg, gamma, p, asg, 0, true, Vec::new())
    }

    /// One-shot benchmark: fixed benchmark power, a single greedy placement
    /// pass, no alternation.
    pub fn benchmark_solve(&self, cm: &ChannelMatrix, cfg: &AoConfig) -> SolveResult {
        let p = self.benchmark.clone();
        let asg = self.subroutine1_mm(cm, &p.per_led, cfg);
        let gamma = self.snr(cm, &p.per_led, &asg);
        self.finish(cfg, gamma, p, asg, 1, true, Vec::new())
    }

    /// Dispatch by approach.
    pub fn solve(&self, approach: Approach, cm: &ChannelMatrix, cfg: &AoConfig) -> SolveResult {
        let cfg = AoConfig {
            approach,
            ..cfg.clone()
        };
        match approach {
            Approach::NoMirror => self.no_mirror_solve(cm, &cfg),
            Approach::Benchmark => self.benchmark_solve(cm, &cfg),
            Approach::MinMirrors | Approach::MinPower => self.ao_solve(cm, &cfg),
        }
    }

    /// Exact solver by exhaustive enumeration of every feasible placement.
    ///
    /// Only for tiny instances: requires `(L+1)^K <= 1e6` over the
    /// ORIS-capable elements.
    pub fn oracle_solve(&self, cm: &ChannelMatrix, cfg: &AoConfig) -> Result<SolveResult, Error> {
        let k = cm.oris_range.len();
        let base = cm.n_leds + 1;
        let states = (base as f64).powi(k as i32);
        if states > 1e6 {
            let max_k = (1e6f64.ln() / (base as f64).ln()).floor() as usize;
            return Err(Error::BudgetExceeded(format!(
                "(L+1)^K = {base}^{k} exceeds 1e6; reduce to K <= {max_k} steerable elements"
            )));
        }

        let mut digits = vec![0usize; k];
        let mut best: Option<(bool, f64, SolveResult)> = None;
        loop {
            let count = digits.iter().filter(|&&d| d > 0).count();
            if count <= cfg.n_max {
                let mut asg = Assignment::empty(cm.n_elements);
                for (i, &d) in digits.iter().enumerate() {
                    if d > 0 {
                        asg.assign(cm.oris_range.start + i, (d - 1) as u16);
                    }
                }
                let (p, served) = self.subroutine2(&asg, cm, cfg);
                let resource = match cfg.approach {
                    Approach::MinPower => p.total(),
                    _ => asg.mirrors_used() as f64,
                };
                let better = match &best {
                    None => true,
                    Some((b, r, _)) => (served && !b) || (served == *b && resource < r - 1e-12),
                };
                if better {
                    let gamma = self.snr(cm, &p.per_led, &asg);
                    let res = self.finish(cfg, gamma, p, asg, 0, true, Vec::new());
                    best = Some((served, resource, res));
                }
            }
            // Odometer step over the (L+1)-ary placement space.
            let mut i = 0;
            loop {
                if i == k {
                    return Ok(best.expect("empty placement always enumerated").2);
                }
                digits[i] += 1;
                if digits[i] < base {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }

    fn finish(
        &self,
        cfg: &AoConfig,
        gamma: f64,
        power: PowerAllocation,
        assignment: Assignment,
        iterations: usize,
        converged: bool,
        gamma_trace: Vec<(f64, f64)>,
    ) -> SolveResult {
        let served = metrics::outage_flag(gamma, cfg.gamma_th);
        let mirrors_used = assignment.mirrors_used();
        let total_power = power.total();
        let resource = match cfg.approach {
            Approach::MinPower => total_power,
            _ => mirrors_used as f64,
        };
        SolveResult {
            served,
            gamma,
            power,
            assignment,
            iterations,
            mirrors_used,
            total_power,
            converged,
            objective: served as u8 as f64 - cfg.epsilon * resource,
            gamma_trace,
        }
    }
}

/// Selection sort, descending by score with ties to the lower element
/// index. Deliberately quadratic in the candidate count: the ranking pass is
/// the dominant cost of subroutine 1 and is meant to scale with the square
/// of the wall resolution.
fn selection_sort_desc(cands: &mut [Candidate]) {
    for i in 0..cands.len() {
        let mut best = i;
        for j in i + 1..cands.len() {
            let better = cands[j].score > cands[best].score
                || (cands[j].score == cands[best].score && cands[j].elem < cands[best].elem);
            if better {
                best = j;
            }
        }
        cands.swap(i, best);
    }
}

fn split_allocation(mut x: Vec<f64>, n_leds: usize) -> PowerAllocation {
    let e_min = x[n_leds];
    x.truncate(n_leds);
    PowerAllocation { per_led: x, e_min }
}

/// Minimum-total-power allocation subject to the full lighting system.
pub fn benchmark_power(
    grid: &SensingGrid,
    cfg: &IlluminationConstraints,
) -> Result<PowerAllocation, Error> {
    let rows = illumination::constraint_rows(grid, cfg);
    benchmark_from_rows(&rows, grid.n_leds)
}

/// Two-stage benchmark solve: minimize total power, then select among the
/// optimal allocations by minimizing the spread max(P) - min(P). The second
/// stage pins the symmetric solution whenever one is optimal, which keeps
/// the benchmark deterministic and physically sensible in symmetric rooms.
fn benchmark_from_rows(rows: &[LpRow], n_leds: usize) -> Result<PowerAllocation, Error> {
    let mut c = vec![1.0; n_leds];
    c.push(0.0);
    let total = match lp_solve(&LinearProgram::new(c, rows.to_vec())) {
        LpOutcome::Optimal { value, .. } => value,
        LpOutcome::Infeasible => {
            return Err(Error::Infeasible(
                "lighting constraints admit no power allocation".into(),
            ))
        }
        LpOutcome::Unbounded => unreachable!("minimized total power is bounded below"),
    };

    // Stage 2 variables: (P, E_min, s, t) with t <= P_l <= s.
    let nv = n_leds + 3;
    let s_col = n_leds + 1;
    let t_col = n_leds + 2;
    let mut rows2: Vec<LpRow> = rows
        .iter()
        .map(|r| {
            let mut coeffs = r.coeffs.clone();
            coeffs.resize(nv, 0.0);
            LpRow::new(coeffs, r.rhs)
        })
        .collect();
    for l in 0..n_leds {
        let mut hi = vec![0.0; nv];
        hi[l] = 1.0;
        hi[s_col] = -1.0;
        rows2.push(LpRow::new(hi, 0.0));
        let mut lo = vec![0.0; nv];
        lo[l] = -1.0;
        lo[t_col] = 1.0;
        rows2.push(LpRow::new(lo, 0.0));
    }
    let mut budget = vec![0.0; nv];
    for l in 0..n_leds {
        budget[l] = 1.0;
    }
    rows2.push(LpRow::new(budget, total + 1e-9 * (1.0 + total.abs())));

    let mut c2 = vec![0.0; nv];
    c2[s_col] = 1.0;
    c2[t_col] = -1.0;
    match lp_solve(&LinearProgram::new(c2, rows2)) {
        LpOutcome::Optimal { x, .. } => Ok(split_allocation(x, n_leds)),
        other => unreachable!("stage-2 spread LP cannot fail: {other:?}"),
    }
}

/// Drop constraint rows implied by another row under nonnegative variables.
///
/// Within the per-point blocks of the lighting system (rows 2..2+N tie the
/// minimum-illuminance variable under every point, rows 2+N.. cap every
/// point), a row is redundant when another row dominates it componentwise.
/// The first two aggregate rows are always kept. The feasible set is
/// unchanged.
fn prune_dominated_rows(rows: &[LpRow], n_leds: usize, n_points: usize) -> Vec<LpRow> {
    debug_assert_eq!(rows.len(), 2 * n_points + 2);
    let keep_block = |block: &[LpRow], larger_dominates: bool| -> Vec<LpRow> {
        let mut keep = Vec::new();
        'outer: for (i, row) in block.iter().enumerate() {
            for (j, other) in block.iter().enumerate() {
                if i == j {
                    continue;
                }
                let dominates = (0..n_leds).all(|l| {
                    if larger_dominates {
                        other.coeffs[l] >= row.coeffs[l]
                    } else {
                        other.coeffs[l] <= row.coeffs[l]
                    }
                });
                if dominates {
                    let equal = (0..n_leds).all(|l| other.coeffs[l] == row.coeffs[l]);
                    if !equal || j < i {
                        continue 'outer;
                    }
                }
            }
            keep.push(block[i].clone());
        }
        keep
    };

    let mut pruned = vec![rows[0].clone(), rows[1].clone()];
    // E_min <= E_v(n): coefficients are -lux; a row with componentwise
    // smaller lux (larger coefficients... i.e. smaller illuminance) implies
    // the rest.
    pruned.extend(keep_block(&rows[2..2 + n_points], true));
    // E_v(n) <= E_max: larger lux coefficients dominate.
    pruned.extend(keep_block(&rows[2 + n_points..], true));
    pruned
}
