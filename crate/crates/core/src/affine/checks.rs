//! Drinfeld relations of `U_q(sl-hat(2|1))` checked mode by mode on a truncated
//! Fock module.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::affine::current::{
    build_current, k_eigenvalue, AffineContext, CompiledCurrent, CurrentName, FConstants, HMode,
    Level, OscCache,
};
use crate::affine::fock::{basis_in, Fam, FockAccum, FockState, FockVector, MomentumWindow};
use crate::affine::oscillator::{osc_commutator, Central, Family, OscillatorId};
use crate::error::Error;
use crate::report::{id_hash, RelationReport, Status, Witness};
use crate::ring::{Assignment, NumericEval, Rat, RingElem};
use crate::structure::{Parity, RootData};

/// Rational substitutions per relation.
pub const NUMERIC_SAMPLES: usize = 3;
/// Basis states per relation on which the substitutions are run.
pub const NUMERIC_STATES: usize = 4;
/// Mode range of the ψ consistency check.
pub const PSI_WINDOW: i64 = 4;
/// Mode range of the Heisenberg closure check.
pub const HEISENBERG_MAX: i64 = 6;
/// Cached image terms kept before an evaluator starts over.
const CACHE_WEIGHT: usize = 6_000_000;

/// An operator on the Fock module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Mode(CurrentName, i64),
    /// `H^i_n` from the closed-form expansion
    H(usize, i64),
    /// `H^i_n` read off the field `H^i(z)`
    HField(usize, i64),
    K(usize, bool),
    /// multiplication by `gamma = q^k`
    Gamma,
}

impl Op {
    pub fn parity(self) -> Parity {
        match self {
            Op::Mode(CurrentName::E2 | CurrentName::F2, _) => Parity::Odd,
            _ => Parity::Even,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Mode(c, n) => write!(f, "{c}[{n}]"),
            Op::H(i, n) => write!(f, "H{i}[{n}]"),
            Op::HField(i, n) => write!(f, "H{i}field[{n}]"),
            Op::K(i, false) => write!(f, "K{i}"),
            Op::K(i, true) => write!(f, "K{i}^-1"),
            Op::Gamma => write!(f, "gamma"),
        }
    }
}

/// `coeff * ops[0] ops[1] ...`; the empty word is the identity.
#[derive(Debug, Clone)]
pub struct Word {
    pub coeff: RingElem,
    pub ops: Vec<Op>,
}

/// A linear combination of words of one parity.
#[derive(Debug, Clone)]
pub struct Expr {
    pub parity: Parity,
    pub words: Vec<Word>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr {
            parity: Parity::Even,
            words: Vec::new(),
        }
    }

    pub fn op(ctx: &AffineContext, op: Op) -> Self {
        Expr {
            parity: op.parity(),
            words: vec![Word {
                coeff: ctx.int(1),
                ops: vec![op],
            }],
        }
    }

    pub fn word(ctx: &AffineContext, ops: &[Op]) -> Self {
        let parity = ops.iter().fold(Parity::Even, |p, o| p.add(o.parity()));
        Expr {
            parity,
            words: vec![Word {
                coeff: ctx.int(1),
                ops: ops.to_vec(),
            }],
        }
    }

    pub fn scalar(c: RingElem) -> Self {
        Expr {
            parity: Parity::Even,
            words: if c.is_zero() {
                Vec::new()
            } else {
                vec![Word {
                    coeff: c,
                    ops: Vec::new(),
                }]
            },
        }
    }

    pub fn scaled(&self, c: &RingElem) -> Self {
        Expr {
            parity: self.parity,
            words: self
                .words
                .iter()
                .map(|w| Word {
                    coeff: &w.coeff * c,
                    ops: w.ops.clone(),
                })
                .filter(|w| !w.coeff.is_zero())
                .collect(),
        }
    }

    pub fn plus(&self, other: &Expr) -> Self {
        let parity = if self.words.is_empty() {
            other.parity
        } else {
            self.parity
        };
        let mut words = self.words.clone();
        words.extend(other.words.iter().cloned());
        Expr { parity, words }
    }

    pub fn compose(&self, other: &Expr) -> Self {
        let mut words = Vec::new();
        for a in &self.words {
            for b in &other.words {
                let mut ops = a.ops.clone();
                ops.extend(b.ops.iter().copied());
                words.push(Word {
                    coeff: &a.coeff * &b.coeff,
                    ops,
                });
            }
        }
        Expr {
            parity: self.parity.add(other.parity),
            words,
        }
    }

    /// `[a, b]_xi = ab - (-1)^{|a||b|} xi ba`.
    pub fn bracket(a: &Expr, b: &Expr, xi: &RingElem) -> Self {
        let sign = if a.parity == Parity::Odd && b.parity == Parity::Odd {
            1
        } else {
            -1
        };
        a.compose(b)
            .plus(&b.compose(a).scaled(&xi.scale(Rat::from_integer(sign))))
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub lhs: Expr,
    pub rhs: Expr,
    /// `true` when the identity involves only zero-momentum data and is run
    /// on the momentum-zero slice of the basis
    pub zero_momentum_only: bool,
}

/// Parameters of an affine run.
#[derive(Debug, Clone)]
pub struct AffineConfig {
    pub energy_cut: u32,
    pub mode_window: i64,
    pub momentum: MomentumWindow,
    pub level: Level,
    pub overrides: Vec<String>,
    pub seed: u64,
    /// wall-clock limit; states not reached in time leave their relations
    /// incomplete
    pub budget: Option<Duration>,
}

impl AffineConfig {
    /// Rejects overrides that do not parse, before any state is built.
    pub fn validate(&self) -> Result<(), Error> {
        let ctx = AffineContext::new(self.level);
        let mut f = FConstants::standard(&ctx);
        for o in &self.overrides {
            f.apply_override(&ctx, o)?;
        }
        Ok(())
    }
}

impl Default for AffineConfig {
    fn default() -> Self {
        AffineConfig {
            energy_cut: 2,
            mode_window: 2,
            momentum: MomentumWindow::Weighted(2),
            level: Level::Formal,
            overrides: Vec::new(),
            seed: 0,
            budget: None,
        }
    }
}

/// Currents, `H` modes and the basis for one configuration.
pub struct AffineModel {
    pub ctx: AffineContext,
    pub f: FConstants,
    currents: BTreeMap<CurrentName, CompiledCurrent>,
}

impl AffineModel {
    pub fn new(level: Level, overrides: &[String]) -> Result<Self, Error> {
        let ctx = AffineContext::new(level);
        let mut f = FConstants::standard(&ctx);
        for o in overrides {
            f.apply_override(&ctx, o)?;
        }
        let currents = CurrentName::ALL
            .iter()
            .map(|&n| (n, CompiledCurrent::new(&ctx, build_current(&ctx, n, &f))))
            .collect();
        Ok(AffineModel { ctx, f, currents })
    }

    /// `op` applied to a single state.
    pub fn apply_op(&self, op: Op, s: &FockState) -> FockVector {
        self.apply_op_cached(op, s, &mut BTreeMap::new())
    }

    fn apply_op_cached(
        &self,
        op: Op,
        s: &FockState,
        osc: &mut BTreeMap<CurrentName, OscCache>,
    ) -> FockVector {
        let ctx = &self.ctx;
        let one = ctx.int(1);
        let mut out = FockVector::zero();
        match op {
            Op::Mode(name, n) => {
                let mut acc = FockAccum::new(&ctx.table);
                self.currents[&name].apply_mode_cached(
                    ctx,
                    n,
                    s,
                    &one,
                    &mut acc,
                    osc.entry(name).or_default(),
                );
                out = acc.finish();
            }
            Op::H(i, n) => HMode::closed_form(ctx, i, n).apply(ctx, s, &one, &mut out),
            Op::HField(i, n) => HMode::from_field(ctx, i, n).apply(ctx, s, &one, &mut out),
            Op::K(i, inv) => out.add_term(s.clone(), k_eigenvalue(ctx, i, inv, s)),
            Op::Gamma => out.add_term(s.clone(), ctx.qhalf(2, 0)),
        }
        out
    }
}

/// Evaluates words on states, memoizing single-operator images.
pub struct Evaluator<'a> {
    model: &'a AffineModel,
    cache: HashMap<(Op, FockState), Arc<FockVector>>,
    cached_weight: usize,
    osc: BTreeMap<CurrentName, OscCache>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a AffineModel) -> Self {
        Evaluator {
            model,
            cache: HashMap::new(),
            cached_weight: 0,
            osc: BTreeMap::new(),
        }
    }

    fn op_on_state(&mut self, op: Op, s: &FockState) -> Arc<FockVector> {
        if let Some(v) = self.cache.get(&(op, s.clone())) {
            return v.clone();
        }
        let osc: usize = self.osc.values().map(|c| c.weight).sum();
        if self.cached_weight + osc >= CACHE_WEIGHT {
            self.cache.clear();
            self.osc.clear();
            self.cached_weight = 0;
        }
        let v = Arc::new(self.model.apply_op_cached(op, s, &mut self.osc));
        self.cached_weight += v
            .terms
            .iter()
            .map(|(t, c)| t.occ.len() + c.terms().len())
            .sum::<usize>()
            + 1;
        self.cache.insert((op, s.clone()), v.clone());
        v
    }

    /// `ops[0] ... ops[last]` applied to `s` (rightmost first).
    pub fn word_on_state(&mut self, ops: &[Op], s: &FockState) -> FockVector {
        let table = &self.model.ctx.table;
        let mut v = FockVector::basis(table, s.clone());
        for &op in ops.iter().rev() {
            let mut next = FockAccum::new(table);
            for (t, c) in &v.terms {
                let img = self.op_on_state(op, t);
                next.add_scaled(&img, c);
            }
            v = next.finish();
            if v.is_zero() {
                break;
            }
        }
        v
    }

    /// Images of the individual words of `e`.
    pub fn words(&mut self, e: &Expr, s: &FockState) -> Vec<(RingElem, FockVector)> {
        e.words
            .iter()
            .map(|w| (w.coeff.clone(), self.word_on_state(&w.ops, s)))
            .collect()
    }
}

fn sum_words(words: &[(RingElem, FockVector)]) -> FockVector {
    let mut out = FockVector::zero();
    for (c, v) in words {
        out.add_scaled(v, c);
    }
    out
}

fn numeric_image(
    words: &[(RingElem, FockVector)],
    a: &NumericEval,
) -> Result<BTreeMap<FockState, BigRational>, Error> {
    let mut out: BTreeMap<FockState, BigRational> = BTreeMap::new();
    for (c, v) in words {
        let cv = a.eval(c)?;
        for (s, k) in &v.terms {
            *out.entry(s.clone()).or_insert_with(BigRational::zero) += &cv * a.eval(k)?;
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

#[derive(Debug, Clone)]
struct Failure {
    index: usize,
    witness: Witness,
    lhs: String,
    rhs: String,
}

#[derive(Debug, Clone, Default)]
struct Partial {
    failure: Option<Failure>,
    numeric_ok: bool,
    numeric_runs: usize,
    checked: usize,
}

/// Runs instances on every basis state of energy `<= energy_cut` in the
/// momentum window.
pub struct AffineChecker {
    pub model: AffineModel,
    pub basis: Vec<FockState>,
    pub seed: u64,
    pub budget: Option<Duration>,
}

impl AffineChecker {
    pub fn new(cfg: &AffineConfig) -> Result<Self, Error> {
        Ok(AffineChecker {
            model: AffineModel::new(cfg.level, &cfg.overrides)?,
            basis: basis_in(cfg.energy_cut, cfg.momentum),
            seed: cfg.seed,
            budget: cfg.budget,
        })
    }

    pub fn ctx(&self) -> &AffineContext {
        &self.model.ctx
    }

    fn numeric_states(&self, inst: &Instance, eligible: &[usize]) -> BTreeSet<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ id_hash(&inst.id) ^ 0x5eed);
        let k = NUMERIC_STATES.min(eligible.len());
        sample(&mut rng, eligible.len(), k)
            .iter()
            .map(|i| eligible[i])
            .collect()
    }

    fn assignments(&self, inst: &Instance) -> Vec<Assignment> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ id_hash(&inst.id));
        (0..NUMERIC_SAMPLES)
            .map(|_| Assignment::random(&self.ctx().table, &mut rng))
            .collect()
    }

    /// Checks the instances; reports keep the input order.
    pub fn check_all(&self, instances: &[Instance]) -> Result<Vec<RelationReport>, Error> {
        let zero_slice: Vec<usize> = (0..self.basis.len())
            .filter(|&i| self.basis[i].mom == [0; 4])
            .collect();
        let all: Vec<usize> = (0..self.basis.len()).collect();
        let eligible = |inst: &Instance| {
            if inst.zero_momentum_only {
                &zero_slice
            } else {
                &all
            }
        };
        let numeric: Vec<BTreeSet<usize>> = instances
            .iter()
            .map(|i| self.numeric_states(i, eligible(i)))
            .collect();
        let assignments: Vec<Vec<Assignment>> =
            instances.iter().map(|i| self.assignments(i)).collect();
        // one strand per worker, dealt round-robin so that every worker sees
        // cheap and expensive states; states in a strand share an operator cache
        let workers = rayon::current_num_threads().clamp(1, all.len().max(1));
        let strands: Vec<Vec<usize>> = (0..workers)
            .map(|w| all.iter().copied().skip(w).step_by(workers).collect())
            .collect();
        let deadline = self.budget.map(|b| Instant::now() + b);
        let parts: Vec<(Vec<Partial>, bool)> = strands
            .par_iter()
            .map(|chunk| -> Result<(Vec<Partial>, bool), Error> {
                let mut ev = Evaluator::new(&self.model);
                let mut out = vec![
                    Partial {
                        numeric_ok: true,
                        ..Default::default()
                    };
                    instances.len()
                ];
                let mut truncated = false;
                'states: for &bi in chunk.iter() {
                    let s = &self.basis[bi];
                    for (k, inst) in instances.iter().enumerate() {
                        if out[k].failure.is_some() || (inst.zero_momentum_only && s.mom != [0; 4])
                        {
                            continue;
                        }
                        if deadline.is_some_and(|d| Instant::now() >= d) {
                            truncated = true;
                            break 'states;
                        }
                        out[k].checked += 1;
                        let lw = ev.words(&inst.lhs, s);
                        let rw = ev.words(&inst.rhs, s);
                        let l = sum_words(&lw);
                        let r = sum_words(&rw);
                        let diff = l.sub(&r);
                        if let Some((comp, _)) = diff.terms.iter().next() {
                            let t = &self.ctx().table;
                            out[k].failure = Some(Failure {
                                index: bi,
                                witness: Witness {
                                    basis: s.to_string(),
                                    component: comp.to_string(),
                                },
                                lhs: l.coeff(comp, t).to_string(),
                                rhs: r.coeff(comp, t).to_string(),
                            });
                            continue;
                        }
                        if numeric[k].contains(&bi) {
                            out[k].numeric_runs += 1;
                            for a in &assignments[k] {
                                let a = NumericEval::new(a);
                                if numeric_image(&lw, &a)? != numeric_image(&rw, &a)? {
                                    out[k].numeric_ok = false;
                                }
                            }
                        }
                    }
                }
                Ok((out, truncated))
            })
            .collect::<Result<_, _>>()?;
        let truncated = parts.iter().any(|(_, t)| *t);
        let parts: Vec<Vec<Partial>> = parts.into_iter().map(|(p, _)| p).collect();
        let mut reports = Vec::with_capacity(instances.len());
        for (k, inst) in instances.iter().enumerate() {
            let first = parts
                .iter()
                .filter_map(|p| p[k].failure.as_ref())
                .min_by_key(|f| f.index);
            let checked: usize = parts.iter().map(|p| p[k].checked).sum();
            let numeric_ok = parts.iter().all(|p| p[k].numeric_ok);
            let numeric_runs: usize = parts.iter().map(|p| p[k].numeric_runs).sum();
            let numeric = match (numeric_ok, numeric_runs) {
                (false, _) => Status::Fail,
                (true, 0) => Status::NotApplicable,
                (true, _) => Status::Pass,
            };
            let eligible_count = eligible(inst).len();
            let rep = match first {
                Some(f) => RelationReport::fail(&inst.id, checked, f.witness.clone(), f.lhs.clone(), f.rhs.clone()),
                None if truncated && checked < eligible_count && numeric_ok => RelationReport::incomplete(
                    &inst.id,
                    checked,
                    numeric,
                    format!("time budget exhausted after {checked} of {eligible_count} basis states; all checked states agree"),
                ),
                None if numeric_ok => RelationReport::pass(&inst.id, checked, numeric),
                None => {
                    let mut rep = RelationReport::pass(&inst.id, checked, Status::Fail);
                    rep.status = Status::Fail;
                    rep.note = Some("symbolic sides agree but a rational substitution disagrees".into());
                    rep
                }
            };
            reports.push(rep);
        }
        Ok(reports)
    }
}

fn sign_label(sign: i64) -> &'static str {
    if sign > 0 {
        "+"
    } else {
        "-"
    }
}

/// Cartan matrix of `sl(2|1)` in the distinguished basis.
pub fn cartan(i: usize, j: usize) -> i64 {
    match (i, j) {
        (1, 1) => 2,
        (2, 2) => 0,
        _ => -1,
    }
}

/// `(1/n)[a n]`.
fn bracket_over_n(ctx: &AffineContext, a: i64, n: i64) -> RingElem {
    RingElem::qint(&ctx.table, a * n).scale(Rat::new(1, n))
}

fn window(w: i64) -> impl Iterator<Item = i64> + Clone {
    -w..=w
}

fn nonzero_window(w: i64) -> impl Iterator<Item = i64> + Clone {
    (-w..=w).filter(|&n| n != 0)
}

fn e_op(sign: i64, i: usize, n: i64) -> Op {
    Op::Mode(CurrentName::chevalley(sign, i), n)
}

/// `psi^i_{±,n}` built from `K_i` and the closed-form `H` modes.
pub fn psi_from_h(ctx: &AffineContext, i: usize, sign: i64, n: i64) -> Expr {
    if n * sign < 0 {
        return Expr::zero();
    }
    let k = Expr::op(ctx, Op::K(i, sign < 0));
    if n == 0 {
        return k;
    }
    // partitions of |n|: sum over multiplicities c_m of prod (±(q - q^-1) H_{±m})^{c_m} / c_m!
    let mut out = Expr::zero();
    let total = n.abs();
    let mut stack: Vec<(i64, i64, Vec<(i64, u32)>)> = vec![(total, total, Vec::new())];
    while let Some((left, max_part, parts)) = stack.pop() {
        if left == 0 {
            let mut coeff = ctx.int(1);
            let mut ops = vec![Op::K(i, sign < 0)];
            for &(m, c) in &parts {
                let mut fact = 1i64;
                for j in 1..=i64::from(c) {
                    fact *= j;
                }
                coeff = coeff.scale(Rat::new(1, fact));
                for _ in 0..c {
                    coeff = &coeff * &RingElem::qdiff(&ctx.table).scale(Rat::from_integer(sign));
                    ops.push(Op::H(i, sign * m));
                }
            }
            out = out.plus(&Expr {
                parity: Parity::Even,
                words: vec![Word { coeff, ops }],
            });
            continue;
        }
        for m in (1..=max_part.min(left)).rev() {
            for c in 1..=(left / m) {
                let mut p = parts.clone();
                p.push((m, c as u32));
                stack.push((left - m * c, m - 1, p));
            }
        }
    }
    out
}

/// All Drinfeld relation instances within the mode window.
pub fn drinfeld_instances(ctx: &AffineContext, w: i64) -> Vec<Instance> {
    let kl = ctx.level;
    let mut out = Vec::new();
    let inst = |id: String, lhs: Expr, rhs: Expr| Instance {
        id,
        lhs,
        rhs,
        zero_momentum_only: false,
    };
    let one = ctx.int(1);
    let q = |n: i64| RingElem::q_pow(&ctx.table, n);
    let chevalley = [(1i64, 1usize), (1, 2), (-1, 1), (-1, 2)];

    // (6) gamma central
    for &(sign, i) in &chevalley {
        for n in window(w) {
            let x = e_op(sign, i, n);
            out.push(inst(
                format!(
                    "drinfeld.eq6.x={}.n={n}.k={kl}",
                    CurrentName::chevalley(sign, i)
                ),
                Expr::word(ctx, &[Op::Gamma, x]),
                Expr::word(ctx, &[x, Op::Gamma]),
            ));
        }
    }
    // (7)
    for i in 1..=2 {
        for &(sign, j) in &chevalley {
            for n in window(w) {
                let x = e_op(sign, j, n);
                out.push(inst(
                    format!(
                        "drinfeld.eq7.i={i}.j={j}.sign={}.n={n}.k={kl}",
                        sign_label(sign)
                    ),
                    Expr::word(ctx, &[Op::K(i, false), x, Op::K(i, true)]),
                    Expr::op(ctx, x).scaled(&q(sign * cartan(i, j))),
                ));
            }
        }
        for j in 1..=2 {
            for n in nonzero_window(w) {
                let h = Op::H(j, n);
                out.push(inst(
                    format!("drinfeld.eq7.kh.i={i}.j={j}.n={n}.k={kl}"),
                    Expr::bracket(&Expr::op(ctx, Op::K(i, false)), &Expr::op(ctx, h), &one),
                    Expr::zero(),
                ));
            }
        }
    }
    // (8)
    for i in 1..=2 {
        for j in 1..=2 {
            for n in nonzero_window(w) {
                for m in nonzero_window(w) {
                    let lhs = Expr::bracket(
                        &Expr::op(ctx, Op::H(i, n)),
                        &Expr::op(ctx, Op::H(j, m)),
                        &one,
                    );
                    let rhs = if n + m == 0 {
                        Expr::scalar(heisenberg_rhs(ctx, i, j, n))
                    } else {
                        Expr::zero()
                    };
                    out.push(inst(
                        format!("drinfeld.eq8.i={i}.j={j}.n={n}.m={m}.k={kl}"),
                        lhs,
                        rhs,
                    ));
                }
            }
        }
    }
    // (9)
    for i in 1..=2 {
        for &(sign, j) in &chevalley {
            for n in nonzero_window(w) {
                for m in window(w) {
                    let lhs = Expr::bracket(
                        &Expr::op(ctx, Op::H(i, n)),
                        &Expr::op(ctx, e_op(sign, j, m)),
                        &one,
                    );
                    let c = &bracket_over_n(ctx, cartan(i, j), n).scale(Rat::from_integer(sign))
                        * &ctx.gamma_half(-sign * n.abs());
                    let rhs = Expr::op(ctx, e_op(sign, j, n + m)).scaled(&c);
                    out.push(inst(
                        format!(
                            "drinfeld.eq9.i={i}.j={j}.sign={}.n={n}.m={m}.k={kl}",
                            sign_label(sign)
                        ),
                        lhs,
                        rhs,
                    ));
                }
            }
        }
    }
    // (10)
    for i in 1..=2 {
        for j in 1..=2 {
            for n in window(w) {
                for m in window(w) {
                    let lhs = Expr::bracket(
                        &Expr::op(ctx, e_op(1, i, n)),
                        &Expr::op(ctx, e_op(-1, j, m)),
                        &one,
                    );
                    let rhs = if i == j {
                        let inv_d = RingElem::one(&ctx.table).div_qdiff(1);
                        let p = Expr::op(ctx, Op::Mode(CurrentName::psi(i, 1), n + m))
                            .scaled(&(&inv_d * &ctx.gamma_half(n - m)));
                        let mm = Expr::op(ctx, Op::Mode(CurrentName::psi(i, -1), n + m))
                            .scaled(&-(&inv_d * &ctx.gamma_half(m - n)));
                        p.plus(&mm)
                    } else {
                        Expr::zero()
                    };
                    out.push(inst(
                        format!("drinfeld.eq10.i={i}.j={j}.n={n}.m={m}.k={kl}"),
                        lhs,
                        rhs,
                    ));
                }
            }
        }
    }
    // (11)
    for (i, j) in [(1usize, 1usize), (1, 2), (2, 2)] {
        for sign in [1i64, -1] {
            let xi = q(sign * cartan(i, j));
            for n in window(w) {
                for m in window(w) {
                    let a = Expr::bracket(
                        &Expr::op(ctx, e_op(sign, i, n + 1)),
                        &Expr::op(ctx, e_op(sign, j, m)),
                        &xi,
                    );
                    let b = Expr::bracket(
                        &Expr::op(ctx, e_op(sign, j, m + 1)),
                        &Expr::op(ctx, e_op(sign, i, n)),
                        &xi,
                    );
                    out.push(inst(
                        format!(
                            "drinfeld.eq11.i={i}.j={j}.sign={}.n={n}.m={m}.k={kl}",
                            sign_label(sign)
                        ),
                        a.plus(&b),
                        Expr::zero(),
                    ));
                }
            }
        }
    }
    // (12)
    for sign in [1i64, -1] {
        for n in window(w) {
            for m in window(w) {
                out.push(inst(
                    format!(
                        "drinfeld.eq12.i=2.j=2.sign={}.n={n}.m={m}.k={kl}",
                        sign_label(sign)
                    ),
                    Expr::bracket(
                        &Expr::op(ctx, e_op(sign, 2, n)),
                        &Expr::op(ctx, e_op(sign, 2, m)),
                        &one,
                    ),
                    Expr::zero(),
                ));
            }
        }
    }
    // (13)
    for sign in [1i64, -1] {
        for n1 in window(w) {
            for n2 in window(w).filter(|&x| x >= n1) {
                for m in window(w) {
                    let serre = |a: i64, b: i64| {
                        let inner = Expr::bracket(
                            &Expr::op(ctx, e_op(sign, 1, b)),
                            &Expr::op(ctx, e_op(sign, 2, m)),
                            &q(-1),
                        );
                        Expr::bracket(&Expr::op(ctx, e_op(sign, 1, a)), &inner, &q(1))
                    };
                    out.push(inst(
                        format!(
                            "drinfeld.eq13.i=1.j=2.sign={}.n1={n1}.n2={n2}.m={m}.k={kl}",
                            sign_label(sign)
                        ),
                        serre(n1, n2).plus(&serre(n2, n1)),
                        Expr::zero(),
                    ));
                }
            }
        }
    }
    out
}

/// `(1/n)[a_ij n](gamma^n - gamma^-n)/(q - q^-1)`.
pub fn heisenberg_rhs(ctx: &AffineContext, i: usize, j: usize, n: i64) -> RingElem {
    let g = &ctx.gamma_half(2 * n) - &ctx.gamma_half(-2 * n);
    (&bracket_over_n(ctx, cartan(i, j), n) * &g).div_qdiff(1)
}

/// ψ modes from the vertex operators against the `K exp(H)` generating function.
pub fn psi_instances(ctx: &AffineContext, w: i64) -> Vec<Instance> {
    let mut out = Vec::new();
    for i in 1..=2 {
        for sign in [1i64, -1] {
            for n in window(w) {
                out.push(Instance {
                    id: format!("psi.i={i}.sign={}.n={n}.k={}", sign_label(sign), ctx.level),
                    lhs: Expr::op(ctx, Op::Mode(CurrentName::psi(i, sign), n)),
                    rhs: psi_from_h(ctx, i, sign, n),
                    zero_momentum_only: false,
                });
            }
        }
    }
    out
}

/// Heisenberg relations of the `H` modes on states, and the field-derived
/// modes against the closed form. `H` never touches momenta, so the
/// momentum-zero slice suffices.
pub fn heisenberg_state_instances(ctx: &AffineContext, max: i64) -> Vec<Instance> {
    let one = ctx.int(1);
    let mut out = Vec::new();
    for i in 1..=2 {
        for j in 1..=2 {
            for n in nonzero_window(max) {
                out.push(Instance {
                    id: format!("heisenberg.state.i={i}.j={j}.n={n}.k={}", ctx.level),
                    lhs: Expr::bracket(
                        &Expr::op(ctx, Op::HField(i, n)),
                        &Expr::op(ctx, Op::HField(j, -n)),
                        &one,
                    ),
                    rhs: Expr::scalar(heisenberg_rhs(ctx, i, j, n)),
                    zero_momentum_only: true,
                });
            }
        }
        for n in nonzero_window(max) {
            out.push(Instance {
                id: format!("heisenberg.modes.i={i}.n={n}.k={}", ctx.level),
                lhs: Expr::op(ctx, Op::HField(i, n)),
                rhs: Expr::op(ctx, Op::H(i, n)),
                zero_momentum_only: true,
            });
        }
    }
    out
}

fn oscillator_of(f: Fam, n: i64) -> OscillatorId {
    let (family, i, j) = match f {
        Fam::A1 => (Family::A, 1, 0),
        Fam::A2 => (Family::A, 2, 0),
        Fam::B12 => (Family::B, 1, 2),
        Fam::B13 => (Family::B, 1, 3),
        Fam::B23 => (Family::B, 2, 3),
        Fam::C12 => (Family::C, 1, 2),
    };
    OscillatorId::Mode { family, i, j, n }
}

/// `[H^i_n, H^j_m]` from the closed-form modes and the oscillator
/// commutators, without any Fock space.
pub fn heisenberg_scalar(ctx: &AffineContext, i: usize, j: usize, n: i64, m: i64) -> RingElem {
    let root = RootData::new(2, 1).expect("sl(2|1)");
    let hi = HMode::closed_form(ctx, i, n);
    let hj = HMode::closed_form(ctx, j, m);
    let mut total = RingElem::zero(&ctx.table);
    for (x, cx) in &hi.coeffs {
        for (y, cy) in &hj.coeffs {
            let v = match osc_commutator(
                &root,
                &ctx.table,
                oscillator_of(*x, n),
                oscillator_of(*y, m),
            ) {
                Central::Zero => continue,
                Central::Ring(r) => r,
                Central::Linear(_) => unreachable!("no zero modes in H_n, n != 0"),
            };
            // k appears only through G; specialize if the level is fixed
            let v = match ctx.level {
                Level::Formal => v,
                Level::Int(_) => specialize(ctx, &v),
            };
            total = &total + &(&(cx * cy) * &v);
        }
    }
    total
}

/// Substitutes `G = q^{k/2}` at an integer level.
fn specialize(ctx: &AffineContext, v: &RingElem) -> RingElem {
    let g_slot = ctx.table.slot("G").expect("level symbol");
    let mut out = RingElem::zero(&ctx.table);
    for (mono, c) in v.terms() {
        let mut m = *mono;
        let e = i64::from(m.0[g_slot]);
        m.0[g_slot] = 0;
        let g = ctx.gamma_half(e);
        out = &out + &(&RingElem::monomial(&ctx.table, m, *c) * &g);
    }
    out.div_qdiff(v.denom())
}

/// Scalar Heisenberg checks for `1 <= |n| <= max`, all `i, j`.
pub fn check_heisenberg_scalar(ctx: &AffineContext, max: i64) -> Vec<RelationReport> {
    let mut out = Vec::new();
    for i in 1..=2 {
        for j in 1..=2 {
            for n in nonzero_window(max) {
                let id = format!("heisenberg.eq8.i={i}.j={j}.n={n}.k={}", ctx.level);
                let l = heisenberg_scalar(ctx, i, j, n, -n);
                let r = heisenberg_rhs(ctx, i, j, n);
                if l == r {
                    out.push(RelationReport::pass(&id, 1, Status::Pass));
                } else {
                    let w = Witness {
                        basis: "central".into(),
                        component: "1".into(),
                    };
                    out.push(RelationReport::fail(
                        &id,
                        1,
                        w,
                        l.to_string(),
                        r.to_string(),
                    ));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::fock::basis;

    fn model() -> AffineModel {
        AffineModel::new(Level::Formal, &[]).unwrap()
    }

    #[test]
    fn heisenberg_examples() {
        let ctx = AffineContext::new(Level::Formal);
        // a_22 = 0: the three contributions cancel
        assert!(heisenberg_scalar(&ctx, 2, 2, 1, -1).is_zero());
        let expect = (&RingElem::qint(&ctx.table, 2) * &(&ctx.gamma_half(2) - &ctx.gamma_half(-2)))
            .div_qdiff(1);
        assert_eq!(heisenberg_scalar(&ctx, 1, 1, 1, -1), expect);
        assert_eq!(heisenberg_rhs(&ctx, 1, 1, 1), expect);
    }

    #[test]
    fn psi_from_h_first_orders() {
        let ctx = AffineContext::new(Level::Formal);
        assert_eq!(psi_from_h(&ctx, 1, 1, 0).words.len(), 1);
        assert!(psi_from_h(&ctx, 1, 1, -2).words.is_empty());
        // partitions of 4: 5 words
        assert_eq!(psi_from_h(&ctx, 2, -1, -4).words.len(), 5);
    }

    #[test]
    fn vacuum_relations() {
        let m = model();
        let mut ev = Evaluator::new(&m);
        let v = FockState::vacuum();
        for inst in drinfeld_instances(&m.ctx, 1)
            .iter()
            .filter(|i| i.id.contains("eq10") || i.id.contains("eq12"))
        {
            let l = sum_words(&ev.words(&inst.lhs, &v));
            let r = sum_words(&ev.words(&inst.rhs, &v));
            assert_eq!(l, r, "{}", inst.id);
        }
    }

    #[test]
    fn psi_consistency_on_small_states() {
        let m = model();
        let mut ev = Evaluator::new(&m);
        let states = basis(1, 1);
        for inst in psi_instances(&m.ctx, 2) {
            for s in &states {
                let l = sum_words(&ev.words(&inst.lhs, s));
                let r = sum_words(&ev.words(&inst.rhs, s));
                assert_eq!(l, r, "{} on {s}", inst.id);
            }
        }
    }
}
