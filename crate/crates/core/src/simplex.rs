//! Bounded dual simplex for the LP relaxation of a [`ModelIR`].
//!
//! Every row `r` gets a logical variable `s_r = a_r x` whose bounds encode the
//! row sense, so the working system is `A x - s = 0` with bounds on every
//! variable. Starting from the all-logical basis with structural variables at
//! their cheaper bound is always dual feasible, which makes the dual simplex a
//! natural fit, and it warm-starts after the bound changes made by branching.
//!
//! The basis inverse is kept in product form (a file of eta columns) and is
//! rebuilt periodically. Ratio tests use bound flipping for boxed variables.

use std::time::Instant;

use crate::model_ir::{ModelIR, Sense, VarId};

/// Primal feasibility tolerance.
pub const TOL_FEAS: f64 = 1e-7;
/// Dual feasibility (optimality) tolerance.
pub const TOL_OPT: f64 = 1e-9;
/// Integrality tolerance used by branch-and-bound.
pub const TOL_INT: f64 = 1e-6;

const TOL_PIVOT: f64 = 1e-9;
const TOL_ZERO: f64 = 1e-12;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_BEFORE_BLAND: usize = 200;
const ARTIFICIAL_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The objective provably reached the cutoff; the relaxation can be pruned.
    CutOff,
    /// Iteration or time limit hit before a conclusion.
    Limit,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Structural variable values, indexed by `VarId`.
    pub values: Vec<f64>,
    /// Objective including the model's constant term. For `CutOff` and
    /// `Limit` this is the last dual objective, a valid lower bound, or `-inf` for
    /// `Limit` when artificial bounds were still active.
    pub objective: f64,
    pub iterations: usize,
    /// Structural reduced costs; filled only for `Optimal`.
    pub reduced_costs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// Basis statuses for structural variables followed by row logicals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone, Default)]
pub struct LpOptions {
    pub cutoff: Option<f64>,
    pub max_iterations: Option<usize>,
    pub deadline: Option<Instant>,
}

/// Solves the relaxation of `model` with optional bound overrides.
pub fn solve_lp(model: &ModelIR, overrides: &[(VarId, i64, i64)]) -> LpResult {
    let lp = LpProblem::new(model);
    let (mut lower, mut upper) = lp.default_bounds();
    for &(v, lo, hi) in overrides {
        lower[v.0] = lo as f64;
        upper[v.0] = hi as f64;
    }
    lp.solve(&lower, &upper, None, &LpOptions::default()).0
}

/// Column- and row-wise copies of a model's constraint matrix.
#[derive(Debug, Clone)]
pub struct LpProblem {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_start: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    cost: Vec<f64>,
    obj_constant: f64,
    /// Bounds of the logicals.
    row_lower: Vec<f64>,
    row_upper: Vec<f64>,
    var_lower: Vec<f64>,
    var_upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(model: &ModelIR) -> Self {
        let n = model.num_vars();
        let m = model.num_constraints();
        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_col = Vec::new();
        let mut row_val = Vec::new();
        let mut row_lower = Vec::with_capacity(m);
        let mut row_upper = Vec::with_capacity(m);
        let mut col_count = vec![0usize; n];
        row_start.push(0);
        for c in model.constraints() {
            for (v, a) in c.expr.terms() {
                row_col.push(v.0);
                row_val.push(a as f64);
                col_count[v.0] += 1;
            }
            row_start.push(row_col.len());
            let rhs = c.rhs as f64;
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, rhs),
                Sense::Ge => (rhs, f64::INFINITY),
                Sense::Eq => (rhs, rhs),
            };
            row_lower.push(lo);
            row_upper.push(hi);
        }
        let mut col_start = vec![0usize; n + 1];
        for j in 0..n {
            col_start[j + 1] = col_start[j] + col_count[j];
        }
        let mut fill = col_start.clone();
        let mut col_row = vec![0usize; row_col.len()];
        let mut col_val = vec![0f64; row_col.len()];
        for r in 0..m {
            for k in row_start[r]..row_start[r + 1] {
                let j = row_col[k];
                col_row[fill[j]] = r;
                col_val[fill[j]] = row_val[k];
                fill[j] += 1;
            }
        }
        let mut cost = vec![0f64; n + m];
        for (v, c) in model.objective().terms() {
            cost[v.0] = c as f64;
        }
        Self {
            n,
            m,
            col_start,
            col_row,
            col_val,
            row_start,
            row_col,
            row_val,
            cost,
            obj_constant: model.objective().constant as f64,
            row_lower,
            row_upper,
            var_lower: model.variables().iter().map(|v| v.lower as f64).collect(),
            var_upper: model.variables().iter().map(|v| v.upper as f64).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    /// The model's own variable bounds.
    pub fn default_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.var_lower.clone(), self.var_upper.clone())
    }

    /// All logicals basic; structural variables at the bound their cost prefers.
    pub fn slack_basis(&self) -> Basis {
        let mut status: Vec<VarStatus> = (0..self.n)
            .map(|j| {
                if self.cost[j] < 0.0 {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                }
            })
            .collect();
        status.extend(std::iter::repeat_n(VarStatus::Basic, self.m));
        Basis { status }
    }

    /// Solves with structural bounds `lower/upper`, optionally warm-started.
    pub fn solve(
        &self,
        lower: &[f64],
        upper: &[f64],
        warm: Option<&Basis>,
        opts: &LpOptions,
    ) -> (LpResult, Basis) {
        let mut big = ARTIFICIAL_BOUND;
        let mut basis = warm.cloned().unwrap_or_else(|| self.slack_basis());
        for _ in 0..4 {
            let mut run = DualSimplex::new(self, lower, upper, &basis, big, opts);
            let status = run.run();
            let needs_retry = matches!(status, LpStatus::Optimal | LpStatus::Infeasible)
                && run.uses_artificial_bound();
            let (result, out_basis) = run.finish(status);
            if !needs_retry {
                return (result, out_basis);
            }
            basis = out_basis;
            big *= 100.0;
        }
        let mut run = DualSimplex::new(self, lower, upper, &basis, big, opts);
        let status = run.run();
        run.finish(status)
    }
}

/// Product-form basis inverse.
#[derive(Debug, Default)]
struct EtaFile {
    pos: Vec<usize>,
    pivot: Vec<f64>,
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl EtaFile {
    fn clear(&mut self) {
        self.pos.clear();
        self.pivot.clear();
        self.start.clear();
        self.idx.clear();
        self.val.clear();
    }

    fn len(&self) -> usize {
        self.pos.len()
    }

    /// Records the pivot on `col` (already transformed by the current inverse).
    fn push(&mut self, p: usize, col: &[f64], nz: &[usize]) {
        self.pos.push(p);
        self.pivot.push(col[p]);
        self.start.push(self.idx.len());
        for &i in nz {
            if i != p && col[i].abs() > TOL_ZERO {
                self.idx.push(i);
                self.val.push(col[i]);
            }
        }
    }

    fn range(&self, k: usize) -> std::ops::Range<usize> {
        let end = if k + 1 < self.start.len() {
            self.start[k + 1]
        } else {
            self.idx.len()
        };
        self.start[k]..end
    }

    fn ftran(&self, v: &mut [f64]) {
        for k in 0..self.len() {
            let p = self.pos[k];
            if v[p] == 0.0 {
                continue;
            }
            let t = v[p] / self.pivot[k];
            v[p] = t;
            for e in self.range(k) {
                v[self.idx[e]] -= self.val[e] * t;
            }
        }
    }

    fn btran(&self, v: &mut [f64]) {
        for k in (0..self.len()).rev() {
            let p = self.pos[k];
            let mut s = v[p];
            for e in self.range(k) {
                s -= self.val[e] * v[self.idx[e]];
            }
            v[p] = s / self.pivot[k];
        }
    }
}

struct DualSimplex<'a> {
    lp: &'a LpProblem,
    opts: &'a LpOptions,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Which bounds of the logicals were replaced by the artificial box.
    artificial: Vec<bool>,
    status: Vec<VarStatus>,
    /// Basis position -> variable.
    head: Vec<usize>,
    x: Vec<f64>,
    d: Vec<f64>,
    etas: EtaFile,
    iterations: usize,
    degenerate_run: usize,
    // scratch
    work: Vec<f64>,
    row_alpha: Vec<f64>,
    row_touched: Vec<usize>,
    in_touched: Vec<bool>,
}

impl<'a> DualSimplex<'a> {
    fn new(
        lp: &'a LpProblem,
        lower: &[f64],
        upper: &[f64],
        basis: &Basis,
        big: f64,
        opts: &'a LpOptions,
    ) -> Self {
        let (n, m) = (lp.n, lp.m);
        let mut lo = Vec::with_capacity(n + m);
        let mut hi = Vec::with_capacity(n + m);
        lo.extend_from_slice(lower);
        hi.extend_from_slice(upper);
        lo.extend_from_slice(&lp.row_lower);
        hi.extend_from_slice(&lp.row_upper);
        let mut status = basis.status.clone();
        if status.len() != n + m {
            status = lp.slack_basis().status;
        }
        let artificial = vec![false; n + m];
        let mut s = Self {
            lp,
            opts,
            lower: lo,
            upper: hi,
            artificial,
            status,
            head: Vec::new(),
            x: vec![0.0; n + m],
            d: vec![0.0; n + m],
            etas: EtaFile::default(),
            iterations: 0,
            degenerate_run: 0,
            work: vec![0.0; m],
            row_alpha: vec![0.0; n + m],
            row_touched: Vec::new(),
            in_touched: vec![false; n + m],
        };
        s.repair_basis_count();
        s.refactor();
        s.compute_duals();
        s.make_dual_feasible(big);
        s.place_nonbasic();
        s.compute_primal();
        s
    }

    fn n_total(&self) -> usize {
        self.lp.n + self.lp.m
    }

    /// Ensures exactly `m` basic variables.
    fn repair_basis_count(&mut self) {
        let m = self.lp.m;
        let basic = self
            .status
            .iter()
            .filter(|&&s| s == VarStatus::Basic)
            .count();
        if basic != m {
            self.status = self.lp.slack_basis().status;
        }
    }

    /// Column `j` of `[A | -I]` scattered into `out` (which must be zero).
    fn scatter_column(&self, j: usize, out: &mut [f64], nz: &mut Vec<usize>) {
        if j < self.lp.n {
            for k in self.lp.col_start[j]..self.lp.col_start[j + 1] {
                out[self.lp.col_row[k]] = self.lp.col_val[k];
                nz.push(self.lp.col_row[k]);
            }
        } else {
            out[j - self.lp.n] = -1.0;
            nz.push(j - self.lp.n);
        }
    }

    fn column_len(&self, j: usize) -> usize {
        if j < self.lp.n {
            self.lp.col_start[j + 1] - self.lp.col_start[j]
        } else {
            1
        }
    }

    /// Rebuilds the eta file from the basic variables. Columns that turn out
    /// dependent are replaced by logicals.
    fn refactor(&mut self) {
        let m = self.lp.m;
        let n = self.lp.n;
        self.etas.clear();
        let mut assigned = vec![false; m];
        let mut head = vec![usize::MAX; m];
        let mut basics: Vec<usize> = (0..self.n_total())
            .filter(|&j| self.status[j] == VarStatus::Basic)
            .collect();
        // Logicals first: their pivots are trivial.
        for &j in basics.iter().filter(|&&j| j >= n) {
            let r = j - n;
            assigned[r] = true;
            head[r] = j;
            self.etas.pos.push(r);
            self.etas.pivot.push(-1.0);
            self.etas.start.push(self.etas.idx.len());
        }
        basics.retain(|&j| j < n);
        basics.sort_by_key(|&j| (self.column_len(j), j));
        let mut col = vec![0.0; m];
        let mut nz = Vec::new();
        let mut rejected = Vec::new();
        for &j in &basics {
            nz.clear();
            self.scatter_column(j, &mut col, &mut nz);
            self.etas.ftran(&mut col);
            // after transformation the column may be dense
            let mut best = None;
            let mut best_abs = 0.0;
            for (i, &v) in col.iter().enumerate() {
                if !assigned[i] && v.abs() > best_abs {
                    best_abs = v.abs();
                    best = Some(i);
                }
            }
            match best {
                Some(p) if best_abs > 1e-7 => {
                    let all: Vec<usize> = (0..m).filter(|&i| col[i] != 0.0).collect();
                    self.etas.push(p, &col, &all);
                    assigned[p] = true;
                    head[p] = j;
                }
                _ => rejected.push(j),
            }
            col.iter_mut().for_each(|v| *v = 0.0);
        }
        for j in rejected {
            self.status[j] = if self.lp.cost[j] < 0.0 {
                VarStatus::AtUpper
            } else {
                VarStatus::AtLower
            };
        }
        for r in 0..m {
            if !assigned[r] {
                let j = n + r;
                self.status[j] = VarStatus::Basic;
                assigned[r] = true;
                head[r] = j;
                self.etas.pos.push(r);
                self.etas.pivot.push(-1.0);
                self.etas.start.push(self.etas.idx.len());
            }
        }
        self.head = head;
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lower[j],
            VarStatus::AtUpper => self.upper[j],
            VarStatus::Basic => self.x[j],
        }
    }

    fn place_nonbasic(&mut self) {
        for j in 0..self.n_total() {
            match self.status[j] {
                VarStatus::AtLower if self.lower[j].is_finite() => self.x[j] = self.lower[j],
                VarStatus::AtUpper if self.upper[j].is_finite() => self.x[j] = self.upper[j],
                VarStatus::AtLower | VarStatus::AtUpper => {
                    // infinite side: park on the finite one
                    if self.lower[j].is_finite() {
                        self.status[j] = VarStatus::AtLower;
                        self.x[j] = self.lower[j];
                    } else {
                        self.status[j] = VarStatus::AtUpper;
                        self.x[j] = self.upper[j];
                    }
                }
                VarStatus::Basic => {}
            }
        }
    }

    /// `x_B = -B^{-1} N x_N`.
    fn compute_primal(&mut self) {
        let n = self.lp.n;
        let mut rhs = std::mem::take(&mut self.work);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n_total() {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let xj = self.nonbasic_value(j);
            if xj == 0.0 {
                continue;
            }
            if j < n {
                for k in self.lp.col_start[j]..self.lp.col_start[j + 1] {
                    rhs[self.lp.col_row[k]] -= self.lp.col_val[k] * xj;
                }
            } else {
                rhs[j - n] += xj;
            }
        }
        self.etas.ftran(&mut rhs);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = rhs[p];
        }
        self.work = rhs;
    }

    /// `y = B^{-T} c_B`, `d_j = c_j - y^T a_j`.
    fn compute_duals(&mut self) {
        let n = self.lp.n;
        let mut y = vec![0.0; self.lp.m];
        for (p, &j) in self.head.iter().enumerate() {
            y[p] = self.lp.cost[j];
        }
        self.etas.btran(&mut y);
        for j in 0..self.n_total() {
            if self.status[j] == VarStatus::Basic {
                self.d[j] = 0.0;
                continue;
            }
            let mut dj = self.lp.cost[j];
            if j < n {
                for k in self.lp.col_start[j]..self.lp.col_start[j + 1] {
                    dj -= y[self.lp.col_row[k]] * self.lp.col_val[k];
                }
            } else {
                dj += y[j - n];
            }
            self.d[j] = dj;
        }
    }

    /// Flips boxed variables to the bound their reduced cost prefers. One-sided
    /// variables with the wrong sign get an artificial opposite bound.
    fn make_dual_feasible(&mut self, big: f64) {
        for j in 0..self.n_total() {
            let dj = self.d[j];
            match self.status[j] {
                VarStatus::AtLower if dj < -TOL_OPT => {
                    if !self.upper[j].is_finite() {
                        self.upper[j] = self.lower[j].max(0.0) + big;
                        self.artificial[j] = true;
                    }
                    self.status[j] = VarStatus::AtUpper;
                }
                VarStatus::AtUpper if dj > TOL_OPT => {
                    if !self.lower[j].is_finite() {
                        self.lower[j] = self.upper[j].min(0.0) - big;
                        self.artificial[j] = true;
                    }
                    self.status[j] = VarStatus::AtLower;
                }
                _ => {}
            }
        }
    }

    fn uses_artificial_bound(&self) -> bool {
        (0..self.n_total()).any(|j| {
            self.artificial[j]
                && self.status[j] != VarStatus::Basic
                && ((self.status[j] == VarStatus::AtUpper && !self.lp_upper(j).is_finite())
                    || (self.status[j] == VarStatus::AtLower && !self.lp_lower(j).is_finite()))
        })
    }

    fn lp_lower(&self, j: usize) -> f64 {
        if j < self.lp.n {
            self.lower[j]
        } else {
            self.lp.row_lower[j - self.lp.n]
        }
    }

    fn lp_upper(&self, j: usize) -> f64 {
        if j < self.lp.n {
            self.upper[j]
        } else {
            self.lp.row_upper[j - self.lp.n]
        }
    }

    fn objective(&self) -> f64 {
        (0..self.lp.n)
            .map(|j| self.lp.cost[j] * self.x[j])
            .sum::<f64>()
            + self.lp.obj_constant
    }

    fn primal_infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - TOL_FEAS {
            self.lower[j] - v
        } else if v > self.upper[j] + TOL_FEAS {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn choose_leaving(&self, bland: bool) -> Option<usize> {
        let mut best = None;
        let mut best_score = 0.0;
        for (p, &j) in self.head.iter().enumerate() {
            let inf = self.primal_infeasibility(j);
            if inf <= 0.0 {
                continue;
            }
            if bland {
                match best {
                    Some((_, bj)) if bj <= j => {}
                    _ => best = Some((p, j)),
                }
            } else if inf > best_score {
                best_score = inf;
                best = Some((p, j));
            }
        }
        best.map(|(p, _)| p)
    }

    /// Row `p` of `B^{-1} [A | -I]` restricted to nonbasic columns.
    fn compute_pivot_row(&mut self, p: usize) {
        for &j in &self.row_touched {
            self.row_alpha[j] = 0.0;
            self.in_touched[j] = false;
        }
        self.row_touched.clear();
        let m = self.lp.m;
        let n = self.lp.n;
        let mut rho = std::mem::take(&mut self.work);
        rho.iter_mut().for_each(|v| *v = 0.0);
        rho[p] = 1.0;
        self.etas.btran(&mut rho);
        for (i, &ri) in rho.iter().enumerate().take(m) {
            if ri.abs() <= TOL_ZERO {
                continue;
            }
            let logical = n + i;
            if self.status[logical] != VarStatus::Basic {
                self.row_alpha[logical] = -ri;
                if !self.in_touched[logical] {
                    self.in_touched[logical] = true;
                    self.row_touched.push(logical);
                }
            }
            for k in self.lp.row_start[i]..self.lp.row_start[i + 1] {
                let j = self.lp.row_col[k];
                if self.status[j] == VarStatus::Basic {
                    continue;
                }
                self.row_alpha[j] += ri * self.lp.row_val[k];
                if !self.in_touched[j] {
                    self.in_touched[j] = true;
                    self.row_touched.push(j);
                }
            }
        }
        self.work = rho;
    }

    fn run(&mut self) -> LpStatus {
        let n = self.lp.n;
        let max_iter = self
            .opts
            .max_iterations
            .unwrap_or(50_000 + 20 * (self.lp.n + self.lp.m));
        let mut col = vec![0.0; self.lp.m];
        let mut col_nz: Vec<usize> = Vec::new();
        let mut flip_col = vec![0.0; self.lp.m];
        let mut verified = false;
        loop {
            if let Some(cut) = self.opts.cutoff {
                // the dual objective bounds the true LP only without artificial boxes
                if self.objective() >= cut && !self.uses_artificial_bound() {
                    return LpStatus::CutOff;
                }
            }
            if self.iterations >= max_iter {
                return LpStatus::Limit;
            }
            if self.iterations.is_multiple_of(64) {
                if let Some(deadline) = self.opts.deadline {
                    if Instant::now() >= deadline {
                        return LpStatus::Limit;
                    }
                }
            }
            if self.etas.len() > self.lp.m + REFACTOR_EVERY {
                self.reset_numerics();
            }
            let bland = self.degenerate_run > DEGENERATE_BEFORE_BLAND;
            let Some(p) = self.choose_leaving(bland) else {
                if verified {
                    return LpStatus::Optimal;
                }
                // Recompute from scratch before declaring optimality.
                self.reset_numerics();
                verified = true;
                continue;
            };
            verified = false;
            let leaving = self.head[p];
            let to_lower = self.x[leaving] < self.lower[leaving];
            let delta = if to_lower {
                self.x[leaving] - self.lower[leaving]
            } else {
                self.x[leaving] - self.upper[leaving]
            };
            self.compute_pivot_row(p);

            // Candidates: nonbasic j whose move pushes the leaving variable
            // toward its bound.
            let sign = if delta < 0.0 { -1.0 } else { 1.0 };
            let mut cands: Vec<(f64, usize)> = Vec::new();
            for &j in &self.row_touched {
                let a = self.row_alpha[j] * sign;
                if a.abs() <= TOL_PIVOT || self.lower[j] == self.upper[j] {
                    continue;
                }
                let ok = match self.status[j] {
                    VarStatus::AtLower => a > 0.0,
                    VarStatus::AtUpper => a < 0.0,
                    VarStatus::Basic => false,
                };
                if ok {
                    let ratio = (self.d[j] / a).max(0.0);
                    cands.push((ratio, j));
                }
            }
            if cands.is_empty() {
                return LpStatus::Infeasible;
            }
            cands.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap()
                    .then_with(|| {
                        let aa = self.row_alpha[a.1].abs();
                        let bb = self.row_alpha[b.1].abs();
                        bb.partial_cmp(&aa).unwrap()
                    })
                    .then(a.1.cmp(&b.1))
            });

            // Bound-flipping ratio test: pass boxed breakpoints while the dual
            // objective keeps improving.
            let mut slope = delta.abs();
            let mut flips: Vec<usize> = Vec::new();
            let mut entering = None;
            for (k, &(ratio, j)) in cands.iter().enumerate() {
                let range = self.upper[j] - self.lower[j];
                let boxed = range.is_finite();
                let next_slope = slope - range * self.row_alpha[j].abs();
                if !bland && boxed && next_slope >= 0.0 && k + 1 < cands.len() {
                    flips.push(j);
                    slope = next_slope;
                    continue;
                }
                // Among near-ties pick the largest pivot.
                let mut best = j;
                let mut best_abs = self.row_alpha[j].abs();
                if !bland {
                    for &(r2, j2) in &cands[k + 1..] {
                        if r2 > ratio + TOL_OPT {
                            break;
                        }
                        let a2 = self.row_alpha[j2].abs();
                        if a2 > best_abs {
                            best = j2;
                            best_abs = a2;
                        }
                    }
                }
                entering = Some(best);
                break;
            }
            let q = match entering {
                Some(q) => q,
                None => return LpStatus::Infeasible,
            };
            flips.retain(|&j| j != q);

            // Flip passed variables and update x_B.
            if !flips.is_empty() {
                flip_col.iter_mut().for_each(|v| *v = 0.0);
                for &j in &flips {
                    let (from, to, st) = match self.status[j] {
                        VarStatus::AtLower => (self.lower[j], self.upper[j], VarStatus::AtUpper),
                        _ => (self.upper[j], self.lower[j], VarStatus::AtLower),
                    };
                    let step = to - from;
                    self.status[j] = st;
                    self.x[j] = to;
                    if j < n {
                        for k in self.lp.col_start[j]..self.lp.col_start[j + 1] {
                            flip_col[self.lp.col_row[k]] += self.lp.col_val[k] * step;
                        }
                    } else {
                        flip_col[j - n] -= step;
                    }
                }
                self.etas.ftran(&mut flip_col);
                for (pos, &jb) in self.head.iter().enumerate() {
                    self.x[jb] -= flip_col[pos];
                }
            }

            // Entering column.
            col_nz.clear();
            col.iter_mut().for_each(|v| *v = 0.0);
            self.scatter_column(q, &mut col, &mut col_nz);
            self.etas.ftran(&mut col);
            let alpha_q = col[p];
            if alpha_q.abs() <= TOL_PIVOT {
                // Row and column disagree: numerical trouble, refactor and retry.
                self.reset_numerics();
                self.degenerate_run += 1;
                self.iterations += 1;
                continue;
            }

            let theta_d = self.d[q] / self.row_alpha[q];
            let delta_now = if to_lower {
                self.x[leaving] - self.lower[leaving]
            } else {
                self.x[leaving] - self.upper[leaving]
            };
            let theta_p = delta_now / alpha_q;

            for &j in &self.row_touched {
                if self.status[j] != VarStatus::Basic {
                    self.d[j] -= theta_d * self.row_alpha[j];
                }
            }
            self.d[q] = 0.0;
            self.d[leaving] = -theta_d;

            for (pos, &jb) in self.head.iter().enumerate() {
                if col[pos] != 0.0 {
                    self.x[jb] -= theta_p * col[pos];
                }
            }
            self.x[q] += theta_p;
            self.x[leaving] = if to_lower {
                self.lower[leaving]
            } else {
                self.upper[leaving]
            };
            self.status[leaving] = if to_lower {
                VarStatus::AtLower
            } else {
                VarStatus::AtUpper
            };
            self.status[q] = VarStatus::Basic;
            self.head[p] = q;
            let all: Vec<usize> = (0..self.lp.m).filter(|&i| col[i] != 0.0).collect();
            self.etas.push(p, &col, &all);

            if theta_d.abs() <= TOL_OPT {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            self.iterations += 1;
        }
    }

    fn reset_numerics(&mut self) {
        self.refactor();
        self.compute_duals();
        // Small dual infeasibilities from drift are repaired by flipping.
        for j in 0..self.n_total() {
            match self.status[j] {
                VarStatus::AtLower if self.d[j] < -TOL_OPT && self.upper[j].is_finite() => {
                    self.status[j] = VarStatus::AtUpper
                }
                VarStatus::AtUpper if self.d[j] > TOL_OPT && self.lower[j].is_finite() => {
                    self.status[j] = VarStatus::AtLower
                }
                _ => {}
            }
        }
        self.place_nonbasic();
        self.compute_primal();
    }

    fn finish(mut self, status: LpStatus) -> (LpResult, Basis) {
        let objective = if status == LpStatus::Limit && self.uses_artificial_bound() {
            f64::NEG_INFINITY
        } else {
            self.objective()
        };
        let values = self.x[..self.lp.n].to_vec();
        let reduced_costs = if status == LpStatus::Optimal {
            self.compute_duals();
            self.d[..self.lp.n].to_vec()
        } else {
            Vec::new()
        };
        let result = LpResult {
            status,
            values,
            objective,
            iterations: self.iterations,
            reduced_costs,
        };
        (
            result,
            Basis {
                status: self.status,
            },
        )
    }
}
