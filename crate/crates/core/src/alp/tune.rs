//! Tuning the state-relevance constant `ε` by simulation.
//!
//! The optimal parameters are piecewise constant in `ε`. The search doubles
//! `ε` until the parameters change, bisects to the breakpoints, simulates
//! each distinct policy once and stops when a policy rejects every referral.

use serde::{Deserialize, Serialize};

use super::master::{column_generation_with, CgOptions};
use super::params::{AlpParams, Variant};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::mdp::State;
use crate::policies::{classify_regions, AlpPolicy, RegionLabel};
use crate::sim::{average_value, initial_states, SimConfig};

#[derive(Debug, Clone)]
pub struct TuneOptions {
    pub sim: SimConfig,
    pub cg: CgOptions,
    /// Largest `ε` tried, as a multiple of the starting `ε_2`.
    pub ceiling_factor: f64,
    /// Bisection stops once an interval is narrower than this multiple of
    /// the starting `ε_2`.
    pub min_width_factor: f64,
    /// Relative tolerance for deciding that two parameter sets are equal.
    pub same_tolerance: f64,
    /// Simulated policies allowed before giving up.
    pub max_evaluations: usize,
    /// LP solves allowed before giving up.
    pub max_solves: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            cg: CgOptions::default(),
            ceiling_factor: 1e4,
            min_width_factor: 1e-9,
            same_tolerance: 1e-6,
            max_evaluations: 64,
            max_solves: 400,
        }
    }
}

/// One simulated (or reused) policy on the search path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunePoint {
    pub epsilon: f64,
    pub value: f64,
    /// Parameters equal to an earlier point; its value was reused.
    pub reused: bool,
    pub rejection_hours: f64,
    pub diversion_hours: f64,
    pub travel_time: f64,
    pub acceptance_rate: f64,
    pub all_reject: bool,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub epsilon: f64,
    pub params: AlpParams,
    pub trace: Vec<TunePoint>,
    pub solves: usize,
    pub budget_exhausted: bool,
    pub ceiling_hit: bool,
}

struct Search<'a> {
    inst: &'a ProblemInstance,
    variant: Variant,
    opts: &'a TuneOptions,
    states: Vec<State>,
    solved: Vec<(f64, AlpParams)>,
    trace: Vec<TunePoint>,
    evaluated: Vec<(AlpParams, TunePoint)>,
}

impl Search<'_> {
    fn params(&mut self, eps: f64) -> Result<AlpParams> {
        if let Some((_, p)) = self.solved.iter().find(|(e, _)| *e == eps) {
            return Ok(p.clone());
        }
        if self.solved.len() >= self.opts.max_solves {
            return Err(Error::Precondition("solve budget exhausted".into()));
        }
        let p = column_generation_with(self.inst, eps, self.variant, &self.opts.cg)?.params;
        self.solved.push((eps, p.clone()));
        Ok(p)
    }

    fn same(&mut self, a: f64, b: f64) -> Result<bool> {
        let (pa, pb) = (self.params(a)?, self.params(b)?);
        Ok(pa.same_as(&pb, self.opts.same_tolerance))
    }

    fn evaluate(&mut self, eps: f64) -> Result<TunePoint> {
        let p = self.params(eps)?;
        if let Some((_, pt)) = self.evaluated.iter().find(|(q, _)| q.same_as(&p, self.opts.same_tolerance)) {
            let pt = TunePoint { epsilon: eps, reused: true, ..pt.clone() };
            self.trace.push(pt.clone());
            return Ok(pt);
        }
        if self.evaluated.len() >= self.opts.max_evaluations {
            return Err(Error::Precondition("simulation budget exhausted".into()));
        }
        let policy = AlpPolicy::new(p.clone());
        let (value, runs) = average_value(self.inst, &policy, &self.states, &self.opts.sim)?;
        let n = runs.len().max(1) as f64;
        let mut pt = TunePoint {
            epsilon: eps,
            value,
            reused: false,
            rejection_hours: 0.0,
            diversion_hours: 0.0,
            travel_time: 0.0,
            acceptance_rate: 0.0,
            all_reject: false,
        };
        let (mut arrived, mut accepted) = (0u64, 0u64);
        for r in &runs {
            let d = r.daily_mean();
            pt.rejection_hours += d.rejection_hours / n;
            pt.diversion_hours += d.diversion_hours / n;
            pt.travel_time += d.travel_time / n;
            arrived += d.referrals as u64;
            accepted += d.accepted as u64;
        }
        pt.acceptance_rate = if arrived == 0 { 1.0 } else { accepted as f64 / arrived as f64 };
        pt.all_reject = rejects_everything(self.inst, &p) || (arrived > 0 && accepted == 0);
        self.evaluated.push((p, pt.clone()));
        self.trace.push(pt.clone());
        Ok(pt)
    }
}

/// True if every `(k, l)` with arrivals is labelled always-reject.
fn rejects_everything(inst: &ProblemInstance, p: &AlpParams) -> bool {
    let labels = classify_regions(p, inst);
    (0..inst.types())
        .all(|k| (0..inst.regions()).all(|l| inst.rate(k, l) == 0.0 || labels[k][l] == RegionLabel::AlwaysReject))
}

enum Stop {
    Done,
    Ceiling,
}

/// Searches `ε` and returns the one with the lowest simulated value (ties:
/// smaller `ε`). Running out of budget returns the best point so far with
/// `budget_exhausted` set. An `ε` whose ALP is unbounded counts as the
/// ceiling.
pub fn tune_epsilon(inst: &ProblemInstance, variant: Variant, opts: &TuneOptions) -> Result<TuneOutcome> {
    opts.sim.validate()?;
    let states = initial_states(inst, &opts.sim)?;
    let mut s = Search { inst, variant, opts, states, solved: Vec::new(), trace: Vec::new(), evaluated: Vec::new() };
    let kl = (inst.types() * inst.regions()) as f64;
    let start: f64 = (0..inst.types()).flat_map(|k| (0..inst.regions()).map(move |l| (k, l))).map(|(k, l)| inst.rate(k, l)).sum::<f64>() / kl;
    let (ceiling, width) = (opts.ceiling_factor * start, opts.min_width_factor * start);
    let outcome = if start > 0.0 { search(&mut s, start, ceiling, width) } else { s.evaluate(0.0).map(|_| Stop::Done) };
    let (budget_exhausted, ceiling_hit) = match outcome {
        Ok(Stop::Done) => (false, false),
        Ok(Stop::Ceiling) | Err(Error::AlpUnbounded(_)) => (false, true),
        Err(Error::Precondition(m)) if m.ends_with("budget exhausted") => (true, false),
        Err(e) => return Err(e),
    };
    let best = s
        .trace
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.epsilon.total_cmp(&b.epsilon)))
        .cloned()
        .ok_or_else(|| Error::Precondition("no policy could be evaluated within the budget".into()))?;
    let params = s.solved.iter().find(|(e, _)| *e == best.epsilon).map(|(_, p)| p.clone()).expect("evaluated ε was solved");
    Ok(TuneOutcome { epsilon: best.epsilon, params, trace: s.trace, solves: s.solved.len(), budget_exhausted, ceiling_hit })
}

fn search(s: &mut Search, start: f64, ceiling: f64, width: f64) -> Result<Stop> {
    let (mut e1, mut e2) = (0.0, start);
    loop {
        match s.same(e1, e2) {
            Ok(false) => break,
            Ok(true) => {}
            Err(Error::AlpUnbounded(_)) => e2 = f64::INFINITY,
            Err(e) => return Err(e),
        }
        if e2.is_finite() {
            e1 = e2;
            e2 *= 2.0;
        }
        if e2 > ceiling {
            s.evaluate(e1)?;
            return Ok(Stop::Ceiling);
        }
    }
    let mut cur = e1;
    if s.evaluate(cur)?.all_reject {
        return Ok(Stop::Done);
    }
    loop {
        // Bisect until the midpoint matches the right end.
        let delta = loop {
            let mid = 0.5 * (e1 + e2);
            if e2 - e1 <= width || s.same(mid, e2)? {
                break e2 - e1;
            } else if s.same(mid, e1)? {
                e1 = mid;
            } else {
                e2 = mid;
            }
        };
        cur = e2;
        if s.same(cur, e1)? {
            e1 = cur;
            e2 = cur + 2.0 * delta;
        } else {
            if s.evaluate(cur)?.all_reject {
                return Ok(Stop::Done);
            }
            e1 = cur;
            e2 = cur + delta;
        }
        if e2 > ceiling {
            return Ok(Stop::Ceiling);
        }
    }
}
