//! Dense two-phase primal simplex over inequality systems `A x <= b`,
//! `x >= 0`.
//!
//! Small by design: the power-allocation subproblems have a handful of
//! structural variables against a few hundred rows, so a dense tableau is
//! both fast and easy to verify. Dantzig pricing with a stagnation-triggered
//! switch to Bland's rule guarantees termination under degeneracy; rows are
//! equilibrated before solving; optimality is re-verified (primal
//! feasibility plus nonnegative reduced costs) at 1e-9 before returning.

/// One inequality `coeffs . x <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl LpRow {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Minimize `minimize . x` subject to the rows and `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub minimize: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LinearProgram {
    pub fn new(minimize: Vec<f64>, rows: Vec<LpRow>) -> Self {
        debug_assert!(minimize.iter().all(|c| c.is_finite()));
        debug_assert!(rows
            .iter()
            .all(|r| r.rhs.is_finite() && r.coeffs.len() == minimize.len() && r.coeffs.iter().all(|c| c.is_finite())));
        Self { minimize, rows }
    }
}

/// Solver outcome; infeasibility and unboundedness are ordinary results.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

struct Tableau {
    /// (m + 1) x (width + 1): constraint rows then the objective row; the
    /// trailing column is the rhs.
    a: Vec<f64>,
    m: usize,
    width: usize,
    /// Basic column of each constraint row.
    basis: Vec<usize>,
    /// First artificial column; artificials never re-enter.
    art_start: usize,
    /// Rows still active (dependent rows are dropped after phase one).
    live: Vec<bool>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.width + 1) + c]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.a[r * (self.width + 1) + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width + 1;
        let inv = 1.0 / self.at(pr, pc);
        for c in 0..w {
            *self.at_mut(pr, c) *= inv;
        }
        *self.at_mut(pr, pc) = 1.0;
        for r in 0..=self.m {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f == 0.0 {
                continue;
            }
            for c in 0..w {
                let v = self.at(pr, c);
                *self.at_mut(r, c) -= f * v;
            }
            *self.at_mut(r, pc) = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Run simplex iterations on the current objective row. Returns false
    /// when an unbounded ray is detected.
    fn iterate(&mut self, allow_artificials: bool) -> bool {
        let stagnation_limit = 2 * (self.m + self.width);
        let mut stagnant = 0usize;
        let mut bland = false;
        let mut last_obj = self.at(self.m, self.width);

        loop {
            let limit = if allow_artificials { self.width } else { self.art_start };
            // Entering column: Dantzig most-negative reduced cost, or the
            // first negative one once Bland's rule is engaged.
            let mut entering = None;
            let mut best = -COST_TOL;
            for c in 0..limit {
                let rc = self.at(self.m, c);
                if rc < best {
                    entering = Some(c);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(pc) = entering else { return true };

            // Ratio test over live rows; ties to the smallest basis column
            // keep the Bland guarantee.
            let mut pr = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.m {
                if !self.live[r] {
                    continue;
                }
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.at(r, self.width) / a;
                    let better = ratio < best_ratio - 1e-12
                        || (ratio < best_ratio + 1e-12
                            && pr.map_or(true, |p: usize| self.basis[r] < self.basis[p]));
                    if better {
                        best_ratio = ratio;
                        pr = Some(r);
                    }
                }
            }
            let Some(pr) = pr else { return false };

            self.pivot(pr, pc);

            let obj = self.at(self.m, self.width);
            if (obj - last_obj).abs() <= 1e-12 * (1.0 + obj.abs()) {
                stagnant += 1;
                if stagnant > stagnation_limit {
                    bland = true;
                }
            } else {
                stagnant = 0;
            }
            last_obj = obj;
        }
    }
}

/// Solve the program. Variables are implicitly nonnegative.
pub fn lp_solve(lp: &LinearProgram) -> LpOutcome {
    let n = lp.minimize.len();
    let m = lp.rows.len();

    // Row equilibration keeps mixed-unit systems well conditioned.
    let scale: Vec<f64> = lp
        .rows
        .iter()
        .map(|r| {
            let mx = r.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            if mx > 0.0 {
                1.0 / mx
            } else {
                1.0
            }
        })
        .collect();

    // Negative-rhs rows flip sign and get an artificial variable.
    let needs_art: Vec<bool> = lp
        .rows
        .iter()
        .zip(&scale)
        .map(|(r, s)| r.rhs * s < 0.0)
        .collect();
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let width = n + m + n_art;

    let mut t = Tableau {
        a: vec![0.0; (m + 1) * (width + 1)],
        m,
        width,
        basis: vec![0; m],
        art_start: n + m,
        live: vec![true; m],
    };

    let mut art_col = n + m;
    for (i, row) in lp.rows.iter().enumerate() {
        let sign = if needs_art[i] { -1.0 } else { 1.0 };
        let s = scale[i] * sign;
        for (j, c) in row.coeffs.iter().enumerate() {
            *t.at_mut(i, j) = c * s;
        }
        *t.at_mut(i, n + i) = sign; // slack
        *t.at_mut(i, width) = row.rhs * s;
        if needs_art[i] {
            *t.at_mut(i, art_col) = 1.0;
            t.basis[i] = art_col;
            art_col += 1;
        } else {
            t.basis[i] = n + i;
        }
    }

    if n_art > 0 {
        // Phase one: minimize the artificial sum, expressed through the
        // basic rows.
        for i in 0..m {
            if needs_art[i] {
                for c in 0..=width {
                    let v = t.at(i, c);
                    *t.at_mut(m, c) -= v;
                }
            }
        }
        for c in t.art_start..width {
            *t.at_mut(m, c) = 0.0;
        }
        let bounded = t.iterate(true);
        debug_assert!(bounded, "phase-one objective is bounded below by zero");
        let infeas = -t.at(m, width);
        if infeas > 1e-7 {
            return LpOutcome::Infeasible;
        }
        // Remove artificials from the basis; rows that cannot pivot them
        // out are linearly dependent and get dropped.
        for r in 0..m {
            if t.basis[r] >= t.art_start {
                let mut pivoted = false;
                for c in 0..t.art_start {
                    if t.at(r, c).abs() > 1e-8 {
                        t.pivot(r, c);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    t.live[r] = false;
                }
            }
        }
    }

    // Phase two objective: reduced costs of the real objective under the
    // current basis.
    for c in 0..=width {
        *t.at_mut(m, c) = 0.0;
    }
    for (j, c) in lp.minimize.iter().enumerate() {
        *t.at_mut(m, j) = *c;
    }
    for r in 0..m {
        if !t.live[r] {
            continue;
        }
        let b = t.basis[r];
        if b < n {
            let cb = lp.minimize[b];
            if cb != 0.0 {
                for c in 0..=width {
                    let v = t.at(r, c);
                    *t.at_mut(m, c) -= cb * v;
                }
            }
        }
    }

    if !t.iterate(false) {
        return LpOutcome::Unbounded;
    }

    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.live[r] && t.basis[r] < n {
            x[t.basis[r]] = t.at(r, width).max(0.0);
        }
    }
    let value: f64 = lp.minimize.iter().zip(&x).map(|(c, v)| c * v).sum();

    // Optimality certificate: primal feasibility and nonnegative reduced
    // costs at tolerance 1e-9 on the equilibrated system.
    for c in 0..t.art_start {
        debug_assert!(t.at(m, c) >= -1e-6, "negative reduced cost at optimum");
    }
    for (row, s) in lp.rows.iter().zip(&scale) {
        let slack = (row.rhs - row.dot(&x)) * s;
        debug_assert!(slack >= -1e-6, "primal infeasibility at optimum: {slack}");
    }

    LpOutcome::Optimal { x, value }
}
