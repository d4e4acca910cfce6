//! Exact branch-and-bound over [`ModelIR`] using dual simplex relaxations.
//!
//! Nodes are explored best-bound first; after branching the search plunges
//! into one child (the rounding direction) and leaves the sibling in the
//! queue. Every node tries a rounding heuristic: binaries are rounded, packing
//! rows are repaired, and the remaining integer variables are completed by a
//! short LP dive. All objective coefficients are integers, so node bounds are
//! rounded up to the next integer before pruning.

mod oracle;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::model_ir::{ModelIR, Sense};
use crate::simplex::{Basis, LpOptions, LpProblem, LpResult, LpStatus, TOL_INT};

pub use oracle::{
    brute_force_oracle, brute_force_oracle_with_cap, OracleSolution, DEFAULT_ORACLE_CAP,
};

/// Slack used when comparing LP bounds against integer objectives.
const BOUND_GUARD: f64 = 1e-6;
const DIVE_STEPS: usize = 40;
/// Reduced costs below this are treated as zero.
const RC_TOL: f64 = 1e-7;
/// Rounds the permitted move up so that fixing errs toward keeping values.
const RC_SLACK: f64 = 1e-6;
/// Fractional candidates evaluated by strong branching at each node.
const STRONG_CANDIDATES: usize = 8;
/// Dual simplex iterations allowed per strong-branching child.
const STRONG_ITERATIONS: usize = 200;
/// A RINS sub-search runs at the root and then every this many nodes.
const RINS_INTERVAL: u64 = 100;
const RINS_NODE_LIMIT: u64 = 500;
/// Minimum share of variables fixed before a sub-search is worthwhile.
const RINS_MIN_FIXED: f64 = 0.3;
/// Largest share of the remaining time one sub-search may use.
const RINS_TIME_SHARE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub time_limit_secs: f64,
    pub gap_tolerance: f64,
    pub node_limit: Option<u64>,
    pub seed: u64,
    /// Seconds between progress lines; `None` disables them.
    pub log_interval_secs: Option<f64>,
    /// Choose the branching variable by evaluating child relaxations
    /// instead of by fractionality.
    pub strong_branching: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            time_limit_secs: 3600.0,
            gap_tolerance: 0.0,
            node_limit: None,
            seed: 0,
            log_interval_secs: Some(5.0),
            strong_branching: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    FeasibleTimeout,
    InfeasibleProven,
    NoSolutionTimeout,
}

/// One sample of the anytime progress of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub secs: f64,
    pub nodes: u64,
    pub incumbent: Option<i64>,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MipResult {
    pub status: SolveStatus,
    #[serde(skip)]
    pub incumbent: Option<Vec<i64>>,
    pub objective: Option<i64>,
    pub bound: f64,
    pub gap: f64,
    pub runtime_secs: f64,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub trace: Vec<TracePoint>,
}

/// `|objective - bound| / max(1, |objective|)`.
pub fn relative_gap(objective: i64, bound: f64) -> f64 {
    (objective as f64 - bound).abs() / (objective.abs() as f64).max(1.0)
}

enum Decision {
    Integral,
    Prune,
    /// Branch on `var` (or re-solve when only fixings were found).
    Branch {
        var: Option<usize>,
        fixings: Vec<(usize, f64, f64)>,
    },
}

struct BoundChange {
    var: usize,
    lower: f64,
    upper: f64,
    parent: Option<Rc<BoundChange>>,
}

struct Node {
    bound: i64,
    depth: u32,
    id: u64,
    changes: Option<Rc<BoundChange>>,
    basis: Option<Rc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the "largest" node is the lowest bound, then
    // the deepest, then the oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a ModelIR,
    lp: LpProblem,
    cfg: &'a SolveConfig,
    start: Instant,
    deadline: Instant,
    binary: Vec<bool>,
    /// Rows `sum x <= k` over binaries with unit coefficients.
    packing_rows: Vec<(Vec<usize>, i64)>,
    incumbent: Option<(i64, Vec<i64>)>,
    nodes: u64,
    lp_iterations: u64,
    next_id: u64,
    reported_bound: f64,
    trace: Vec<TracePoint>,
    last_log: Instant,
    /// Bounds valid for the whole search (tightened by root fixings).
    global_lower: Vec<f64>,
    global_upper: Vec<f64>,
    root: Option<RootRelaxation>,
    /// Whether this search may start RINS sub-searches.
    rins: bool,
}

/// Root LP data kept for reduced-cost fixing against later incumbents.
struct RootRelaxation {
    objective: f64,
    values: Vec<f64>,
    reduced_costs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Solves `model` to optimality or until a limit is hit.
pub fn solve(model: &ModelIR, cfg: &SolveConfig) -> MipResult {
    Search::new(model, cfg).run()
}

impl<'a> Search<'a> {
    fn new(model: &'a ModelIR, cfg: &'a SolveConfig) -> Self {
        let start = Instant::now();
        let limit = Duration::from_secs_f64(cfg.time_limit_secs.clamp(0.0, 1e9));
        let binary = model
            .variables()
            .iter()
            .map(|v| v.is_binary())
            .collect::<Vec<_>>();
        let packing_rows = model
            .constraints()
            .iter()
            .filter(|c| {
                c.sense == Sense::Le
                    && c.rhs >= 0
                    && c.expr.terms().all(|(v, a)| a == 1 && binary[v.0])
            })
            .map(|c| (c.expr.terms().map(|(v, _)| v.0).collect(), c.rhs))
            .collect();
        let lp = LpProblem::new(model);
        let (global_lower, global_upper) = lp.default_bounds();
        Self {
            model,
            lp,
            cfg,
            start,
            deadline: start + limit,
            binary,
            packing_rows,
            incumbent: None,
            nodes: 0,
            lp_iterations: 0,
            next_id: 0,
            reported_bound: f64::NEG_INFINITY,
            trace: Vec::new(),
            last_log: start,
            global_lower,
            global_upper,
            root: None,
            rins: true,
        }
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn incumbent_value(&self) -> Option<i64> {
        self.incumbent.as_ref().map(|(v, _)| *v)
    }

    /// Nodes with this bound cannot improve the incumbent enough to matter.
    fn prunable(&self, bound: i64) -> bool {
        match self.incumbent_value() {
            Some(inc) => bound >= inc || relative_gap(inc, bound as f64) <= self.cfg.gap_tolerance,
            None => false,
        }
    }

    /// Global bounds intersected with the node's changes; `None` if empty.
    fn node_bounds(&self, node: &Node) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lower = self.global_lower.clone();
        let mut upper = self.global_upper.clone();
        let mut seen = vec![false; lower.len()];
        let mut cur = node.changes.as_ref();
        // the newest change for a variable is the tightest
        while let Some(ch) = cur {
            if !seen[ch.var] {
                seen[ch.var] = true;
                lower[ch.var] = lower[ch.var].max(ch.lower);
                upper[ch.var] = upper[ch.var].min(ch.upper);
            }
            cur = ch.parent.as_ref();
        }
        lower
            .iter()
            .zip(&upper)
            .all(|(lo, hi)| lo <= hi)
            .then_some((lower, upper))
    }

    /// Bounds implied by the LP reduced costs: moving a nonbasic variable
    /// `t` units off its bound raises the relaxation by at least `t * |d|`,
    /// so it may only move while that stays below the incumbent.
    fn reduced_cost_fixings(
        &self,
        objective: f64,
        values: &[f64],
        reduced_costs: &[f64],
        lower: &[f64],
        upper: &[f64],
    ) -> Vec<(usize, f64, f64)> {
        let Some(inc) = self.incumbent_value() else {
            return Vec::new();
        };
        let room = inc as f64 - 1.0 - objective + BOUND_GUARD;
        if room < 0.0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (j, &d) in reduced_costs.iter().enumerate() {
            let (lo, hi, x) = (lower[j], upper[j], values[j]);
            if hi - lo < 0.5 {
                continue;
            }
            if d > RC_TOL && (x - lo).abs() <= TOL_INT {
                let t = (room / d + RC_SLACK).floor();
                if lo + t < hi {
                    out.push((j, lo, lo + t));
                }
            } else if d < -RC_TOL && (x - hi).abs() <= TOL_INT {
                let t = (room / -d + RC_SLACK).floor();
                if hi - t > lo {
                    out.push((j, hi - t, hi));
                }
            }
        }
        out
    }

    /// Re-applies root fixings after the incumbent improved.
    fn tighten_global(&mut self) {
        let Some(root) = self.root.take() else {
            return;
        };
        let fixings = self.reduced_cost_fixings(
            root.objective,
            &root.values,
            &root.reduced_costs,
            &root.lower,
            &root.upper,
        );
        debug!(
            "root reduced-cost fixing: {} bounds tightened (root lp {:.4})",
            fixings.len(),
            root.objective
        );
        for (j, lo, hi) in fixings {
            self.global_lower[j] = self.global_lower[j].max(lo);
            self.global_upper[j] = self.global_upper[j].min(hi);
        }
        self.root = Some(root);
    }

    fn lp_options(&self) -> LpOptions {
        LpOptions {
            cutoff: self
                .incumbent_value()
                .map(|inc| inc as f64 - 1.0 + 10.0 * BOUND_GUARD),
            max_iterations: None,
            deadline: Some(self.deadline),
        }
    }

    fn solve_lp(
        &mut self,
        lower: &[f64],
        upper: &[f64],
        basis: Option<&Basis>,
    ) -> (LpResult, Basis) {
        let opts = self.lp_options();
        let (res, basis) = self.lp.solve(lower, upper, basis, &opts);
        self.lp_iterations += res.iterations as u64;
        (res, basis)
    }

    fn is_integral(&self, values: &[f64]) -> bool {
        values.iter().all(|v| (v - v.round()).abs() <= TOL_INT)
    }

    /// Accepts `values` as incumbent if exactly feasible and improving.
    fn try_incumbent(&mut self, values: Vec<i64>) -> bool {
        let Ok(eval) = self.model.evaluate_dense(&values) else {
            return false;
        };
        if !eval.feasible {
            return false;
        }
        if self
            .incumbent_value()
            .is_none_or(|inc| eval.objective < inc)
        {
            self.incumbent = Some((eval.objective, values));
            self.record();
            self.tighten_global();
            return true;
        }
        false
    }

    fn round_clamped(&self, values: &[f64], lower: &[f64], upper: &[f64]) -> Vec<i64> {
        values
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(v, (lo, hi))| v.round().clamp(*lo, *hi) as i64)
            .collect()
    }

    /// Rounds binaries, repairs packing rows, then dives on the rest.
    fn heuristic(&mut self, values: &[f64], lower: &[f64], upper: &[f64], basis: &Basis) {
        let direct = self.round_clamped(values, lower, upper);
        if self.try_incumbent(direct) {
            return;
        }
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        let mut rounded: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.binary[j] {
                    if v >= 0.5 {
                        hi[j]
                    } else {
                        lo[j]
                    }
                } else {
                    v
                }
            })
            .collect();
        for (vars, rhs) in &self.packing_rows {
            let ones: Vec<usize> = vars.iter().copied().filter(|&j| rounded[j] > 0.5).collect();
            if ones.len() as i64 <= *rhs {
                continue;
            }
            let mut ranked = ones.clone();
            ranked.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
            for &j in ranked.iter().skip(*rhs as usize) {
                if lo[j] < 0.5 {
                    rounded[j] = 0.0;
                }
            }
        }
        for j in 0..rounded.len() {
            if self.binary[j] {
                lo[j] = rounded[j];
                hi[j] = rounded[j];
            }
        }
        let mut basis = basis.clone();
        for _ in 0..DIVE_STEPS {
            if Instant::now() >= self.deadline {
                return;
            }
            let (res, next_basis) = self.solve_lp(&lo, &hi, Some(&basis));
            basis = next_basis;
            if res.status != LpStatus::Optimal {
                return;
            }
            let frac = res
                .values
                .iter()
                .enumerate()
                .filter(|(_, v)| (*v - v.round()).abs() > TOL_INT)
                .min_by(|a, b| {
                    let fa = (a.1 - a.1.floor() - 0.5).abs();
                    let fb = (b.1 - b.1.floor() - 0.5).abs();
                    fa.partial_cmp(&fb).unwrap().then(a.0.cmp(&b.0))
                })
                .map(|(j, &v)| (j, v));
            match frac {
                None => {
                    let vals = self.round_clamped(&res.values, &lo, &hi);
                    self.try_incumbent(vals);
                    return;
                }
                Some((j, v)) => {
                    let r = v.round().clamp(lo[j], hi[j]);
                    lo[j] = r;
                    hi[j] = r;
                }
            }
        }
    }

    /// Relaxation-induced neighborhood search: variables on which the LP
    /// solution and the incumbent agree are fixed and the rest is searched
    /// with a node limit.
    fn rins(&mut self, values: &[f64], lower: &[f64], upper: &[f64]) {
        let Some((inc, inc_values)) = self.incumbent.clone() else {
            return;
        };
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        let mut fixed = 0;
        for j in 0..values.len() {
            let v = inc_values[j] as f64;
            if (values[j] - v).abs() <= TOL_INT && lo[j] <= v && v <= hi[j] {
                lo[j] = v;
                hi[j] = v;
                fixed += 1;
            }
        }
        if (fixed as f64) < RINS_MIN_FIXED * values.len() as f64 || fixed == values.len() {
            return;
        }
        let remaining = self
            .deadline
            .saturating_duration_since(Instant::now())
            .as_secs_f64();
        let cfg = SolveConfig {
            time_limit_secs: remaining * RINS_TIME_SHARE,
            node_limit: Some(RINS_NODE_LIMIT),
            log_interval_secs: None,
            ..self.cfg.clone()
        };
        let mut sub = Search::new(self.model, &cfg);
        sub.rins = false;
        sub.global_lower = lo;
        sub.global_upper = hi;
        sub.incumbent = Some((inc, inc_values));
        let result = sub.run();
        self.lp_iterations += result.lp_iterations;
        debug!(
            "rins: {fixed} of {} fixed, {} nodes, objective {:?}",
            values.len(),
            result.nodes,
            result.objective
        );
        if let (Some(obj), Some(vals)) = (result.objective, result.incumbent) {
            if obj < inc {
                self.try_incumbent(vals);
            }
        }
    }

    /// Child LP bound, `+inf` when the child is infeasible or cut off.
    fn child_bound(&mut self, lower: &[f64], upper: &[f64], basis: &Basis) -> f64 {
        let opts = LpOptions {
            max_iterations: Some(STRONG_ITERATIONS),
            ..self.lp_options()
        };
        let (res, _) = self.lp.solve(lower, upper, Some(basis), &opts);
        self.lp_iterations += res.iterations as u64;
        match res.status {
            LpStatus::Infeasible | LpStatus::CutOff => f64::INFINITY,
            LpStatus::Optimal | LpStatus::Limit => res.objective,
            LpStatus::Unbounded => f64::NEG_INFINITY,
        }
    }

    fn child_prunable(&self, bound: f64) -> bool {
        bound == f64::INFINITY
            || (bound.is_finite() && self.prunable((bound - BOUND_GUARD).ceil() as i64))
    }

    /// Evaluates both children of the most fractional candidates. Children
    /// that cannot beat the incumbent turn into fixings in `lower`/`upper`.
    fn strong_branch(
        &mut self,
        objective: f64,
        values: &[f64],
        lower: &mut [f64],
        upper: &mut [f64],
        basis: &Basis,
    ) -> Decision {
        let mut cands: Vec<(bool, f64, usize)> = values
            .iter()
            .enumerate()
            .filter_map(|(j, &v)| {
                let frac = v - v.floor();
                (frac > TOL_INT && frac < 1.0 - TOL_INT).then_some((
                    !self.binary[j],
                    (frac - 0.5).abs(),
                    j,
                ))
            })
            .collect();
        if cands.is_empty() {
            return Decision::Integral;
        }
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut fixings = Vec::new();
        let mut best: Option<(f64, usize)> = None;
        for &(_, _, j) in cands.iter().take(STRONG_CANDIDATES) {
            let v = values[j];
            let (lo, hi) = (lower[j], upper[j]);
            upper[j] = v.floor();
            let down = self.child_bound(lower, upper, basis);
            upper[j] = hi;
            lower[j] = v.ceil();
            let up = self.child_bound(lower, upper, basis);
            lower[j] = lo;
            match (self.child_prunable(down), self.child_prunable(up)) {
                (true, true) => return Decision::Prune,
                (true, false) => {
                    lower[j] = v.ceil();
                    fixings.push((j, lower[j], upper[j]));
                }
                (false, true) => {
                    upper[j] = v.floor();
                    fixings.push((j, lower[j], upper[j]));
                }
                (false, false) => {
                    let score = (down - objective).max(1e-6) * (up - objective).max(1e-6);
                    if best.is_none_or(|(s, _)| score > s) {
                        best = Some((score, j));
                    }
                }
            }
        }
        Decision::Branch {
            var: best.map(|(_, j)| j),
            fixings,
        }
    }

    /// Most fractional binary (ties to the lowest index), else most fractional
    /// general integer.
    fn branching_var(&self, values: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(bool, f64, usize)> = None;
        for (j, &v) in values.iter().enumerate() {
            let frac = v - v.floor();
            if frac <= TOL_INT || frac >= 1.0 - TOL_INT {
                continue;
            }
            let dist = (frac - 0.5).abs();
            let key = (self.binary[j], dist, j);
            best = match best {
                None => Some(key),
                Some(b) => {
                    let better = (key.0 && !b.0) || (key.0 == b.0 && key.1 < b.1 - 1e-12);
                    if better {
                        Some(key)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best.map(|(_, _, j)| (j, values[j]))
    }

    fn global_bound(&self, open: Option<&Node>, heap: &BinaryHeap<Node>) -> f64 {
        let mut bound = f64::INFINITY;
        let as_f64 = |b: i64| {
            if b == i64::MIN {
                f64::NEG_INFINITY
            } else {
                b as f64
            }
        };
        if let Some(n) = open {
            bound = bound.min(as_f64(n.bound));
        }
        if let Some(n) = heap.peek() {
            bound = bound.min(as_f64(n.bound));
        }
        if let Some(inc) = self.incumbent_value() {
            bound = bound.min(inc as f64);
        }
        bound
    }

    fn update_bound(&mut self, bound: f64) {
        if bound > self.reported_bound {
            self.reported_bound = bound;
        }
    }

    fn record(&mut self) {
        self.trace.push(TracePoint {
            secs: self.elapsed(),
            nodes: self.nodes,
            incumbent: self.incumbent_value(),
            bound: self.reported_bound,
        });
    }

    fn maybe_log(&mut self) {
        let Some(interval) = self.cfg.log_interval_secs else {
            return;
        };
        if self.last_log.elapsed().as_secs_f64() < interval {
            return;
        }
        self.last_log = Instant::now();
        self.record();
        let gap = self
            .incumbent_value()
            .map_or(f64::INFINITY, |inc| relative_gap(inc, self.reported_bound));
        info!(
            "nodes={} inc={} bnd={:.4} gap={:.6} t={:.2}",
            self.nodes,
            self.incumbent_value()
                .map_or("-".to_string(), |v| v.to_string()),
            self.reported_bound,
            gap,
            self.elapsed()
        );
    }

    fn new_node(
        &mut self,
        bound: i64,
        depth: u32,
        changes: Option<Rc<BoundChange>>,
        basis: Option<Rc<Basis>>,
    ) -> Node {
        self.next_id += 1;
        Node {
            bound,
            depth,
            id: self.next_id,
            changes,
            basis,
        }
    }

    fn run(mut self) -> MipResult {
        let mut heap: BinaryHeap<Node> = BinaryHeap::new();
        let mut plunge = Some(self.new_node(i64::MIN, 0, None, None));
        let mut hit_limit = false;

        loop {
            let gb = self.global_bound(plunge.as_ref(), &heap);
            if gb.is_finite() {
                self.update_bound(gb);
            }
            self.maybe_log();

            if Instant::now() >= self.deadline
                || self.cfg.node_limit.is_some_and(|lim| self.nodes >= lim)
            {
                hit_limit = plunge.is_some() || !heap.is_empty();
                if let Some(n) = plunge.take() {
                    heap.push(n);
                }
                break;
            }
            let Some(node) = plunge.take().or_else(|| heap.pop()) else {
                break;
            };
            if self.prunable(node.bound) {
                continue;
            }
            self.nodes += 1;
            let Some((lower, upper)) = self.node_bounds(&node) else {
                continue;
            };
            let (res, basis) = self.solve_lp(&lower, &upper, node.basis.as_deref());
            match res.status {
                LpStatus::Infeasible | LpStatus::CutOff => continue,
                LpStatus::Limit | LpStatus::Unbounded => {
                    // Keep the node open; the loop exits on the time check.
                    // An unbounded relaxation cannot occur with finite bounds.
                    if res.status == LpStatus::Limit && Instant::now() >= self.deadline {
                        heap.push(node);
                    }
                    continue;
                }
                LpStatus::Optimal => {}
            }
            let lp_bound = (res.objective - BOUND_GUARD).ceil() as i64;
            let bound = lp_bound.max(node.bound);
            if self.prunable(bound) {
                continue;
            }
            if self.is_integral(&res.values) {
                let vals = self.round_clamped(&res.values, &lower, &upper);
                if self.try_incumbent(vals) || self.prunable(bound) {
                    continue;
                }
            }
            self.heuristic(&res.values, &lower, &upper, &basis);
            if self.prunable(bound) {
                continue;
            }
            let (mut lower, mut upper) = (lower, upper);
            let (var, strong_fixings) = if self.cfg.strong_branching {
                match self.strong_branch(res.objective, &res.values, &mut lower, &mut upper, &basis)
                {
                    Decision::Integral => continue,
                    Decision::Prune => continue,
                    Decision::Branch { var, fixings } => (var, fixings),
                }
            } else {
                match self.branching_var(&res.values) {
                    Some((var, _)) => (Some(var), Vec::new()),
                    // Integral relaxation whose rounding failed an exact
                    // check; nothing left to branch on.
                    None => continue,
                }
            };
            let mut base = node.changes.clone();
            for &(j, lo, hi) in &strong_fixings {
                base = Some(Rc::new(BoundChange {
                    var: j,
                    lower: lo,
                    upper: hi,
                    parent: base,
                }));
            }
            let Some(var) = var else {
                // Only fixings were found; re-solve the tightened node.
                plunge = Some(self.new_node(bound, node.depth, base, Some(Rc::new(basis))));
                continue;
            };
            let value = res.values[var];
            debug!(
                "node depth={} lp={:.4} fractional={} branch x{}={:.4}",
                node.depth,
                res.objective,
                res.values
                    .iter()
                    .filter(|v| (*v - v.round()).abs() > TOL_INT)
                    .count(),
                var,
                value
            );
            if self.rins && (node.depth == 0 || self.nodes.is_multiple_of(RINS_INTERVAL)) {
                self.rins(&res.values, &lower, &upper);
                if self.prunable(bound) {
                    continue;
                }
            }
            if node.depth == 0 {
                self.root = Some(RootRelaxation {
                    objective: res.objective,
                    values: res.values.clone(),
                    reduced_costs: res.reduced_costs.clone(),
                    lower: lower.clone(),
                    upper: upper.clone(),
                });
                self.tighten_global();
            } else {
                let fixings = self.reduced_cost_fixings(
                    res.objective,
                    &res.values,
                    &res.reduced_costs,
                    &lower,
                    &upper,
                );
                for (j, lo, hi) in fixings {
                    base = Some(Rc::new(BoundChange {
                        var: j,
                        lower: lo,
                        upper: hi,
                        parent: base,
                    }));
                }
            }
            let basis = Rc::new(basis);
            let down = Rc::new(BoundChange {
                var,
                lower: lower[var],
                upper: value.floor(),
                parent: base.clone(),
            });
            let up = Rc::new(BoundChange {
                var,
                lower: value.ceil(),
                upper: upper[var],
                parent: base,
            });
            let depth = node.depth + 1;
            let down = self.new_node(bound, depth, Some(down), Some(basis.clone()));
            let up = self.new_node(bound, depth, Some(up), Some(basis));
            let (first, second) = if value - value.floor() >= 0.5 {
                (up, down)
            } else {
                (down, up)
            };
            heap.push(second);
            plunge = Some(first);
        }

        // Drop nodes that can no longer matter before reporting the bound.
        let open_bound = heap
            .iter()
            .filter(|n| !self.prunable(n.bound))
            .map(|n| n.bound as f64)
            .fold(f64::INFINITY, f64::min);
        let exhausted = !hit_limit || open_bound == f64::INFINITY;
        let final_bound = match (self.incumbent_value(), exhausted) {
            (Some(inc), true) => inc as f64,
            (Some(inc), false) => open_bound.min(inc as f64),
            (None, true) => f64::INFINITY,
            (None, false) => open_bound,
        };
        if final_bound.is_finite() {
            self.update_bound(final_bound);
        }
        let status = match (self.incumbent_value(), exhausted) {
            (Some(inc), _) if relative_gap(inc, self.reported_bound) <= self.cfg.gap_tolerance => {
                SolveStatus::Optimal
            }
            (Some(_), true) => SolveStatus::Optimal,
            (Some(_), false) => SolveStatus::FeasibleTimeout,
            (None, true) => SolveStatus::InfeasibleProven,
            (None, false) => SolveStatus::NoSolutionTimeout,
        };
        let objective = self.incumbent_value();
        let bound = if status == SolveStatus::InfeasibleProven {
            f64::INFINITY
        } else {
            self.reported_bound
        };
        let gap = match (status, objective) {
            (SolveStatus::Optimal, Some(_)) => 0.0,
            (_, Some(inc)) => relative_gap(inc, bound),
            _ => f64::INFINITY,
        };
        self.record();
        let runtime_secs = self.elapsed();
        MipResult {
            status,
            incumbent: self.incumbent.map(|(_, v)| v),
            objective,
            bound,
            gap,
            runtime_secs,
            nodes: self.nodes,
            lp_iterations: self.lp_iterations,
            trace: self.trace,
        }
    }
}
