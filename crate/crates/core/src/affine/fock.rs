//! Fock states of the six bosons used by the `(2|1)` currents.
//!
//! States are products of rescaled creation operators on a momentum state.
//! With `X^(p) = X_{-p}/[p]` for `b, c` and `X^(p) = (q - q^-1) X_{-p}` for
//! `a`, and the matching rescaled annihilators, every contraction is a Laurent
//! polynomial over `p` and no denominator other than powers of `q - q^-1`
//! appears anywhere in the mode algebra.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::ring::{Rat, RingElem, RingSum, SymbolTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fam {
    A1,
    A2,
    B12,
    B13,
    B23,
    C12,
}

pub const FAMS: [Fam; 6] = [Fam::A1, Fam::A2, Fam::B12, Fam::B13, Fam::B23, Fam::C12];

/// Momentum slots, in lexicographic order: `Q_b^{12}, Q_b^{13}, Q_b^{23}, Q_c^{12}`.
pub const SLOTS: usize = 4;

impl Fam {
    pub fn name(self) -> &'static str {
        match self {
            Fam::A1 => "a1",
            Fam::A2 => "a2",
            Fam::B12 => "b12",
            Fam::B13 => "b13",
            Fam::B23 => "b23",
            Fam::C12 => "c12",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn slot(self) -> Option<usize> {
        match self {
            Fam::A1 | Fam::A2 => None,
            Fam::B12 => Some(0),
            Fam::B13 => Some(1),
            Fam::B23 => Some(2),
            Fam::C12 => Some(3),
        }
    }

    /// Whether `e^{Q}` of this family is a fermionic (cocycle-carrying) letter.
    pub fn odd_coordinate(self) -> bool {
        matches!(self, Fam::B13 | Fam::B23)
    }

    /// `-nu_i nu_j` for `b^{ij}`, `1` for `c`; the zero-mode eigenvalue is this
    /// times the momentum, and the rescaled contraction is this over `p`.
    pub fn metric(self) -> i64 {
        match self {
            Fam::B12 => -1,
            Fam::B13 | Fam::B23 | Fam::C12 => 1,
            Fam::A1 | Fam::A2 => 0,
        }
    }

    /// Eigenvalue of the zero mode on a momentum state (not defined for `a`).
    pub fn zero_mode(self, mom: &[i32; SLOTS]) -> i64 {
        match self.slot() {
            Some(s) => self.metric() * i64::from(mom[s]),
            None => panic!("a^i_0 is formal"),
        }
    }
}

/// `[X_p, Y^(p)]` for the rescaled annihilator `X_p` (`b_p/[p]`, `c_p/[p]`,
/// `(q - q^-1) a_p`) and rescaled creator `Y^(p)`; `qk1p` is `q^{(k+1)p}`.
pub fn contraction(
    table: &Arc<SymbolTable>,
    x: Fam,
    y: Fam,
    p: i64,
    qk1p: &RingElem,
) -> Option<RingElem> {
    let inv = Rat::new(1, p);
    match (x, y) {
        (Fam::A1 | Fam::A2, Fam::A1 | Fam::A2) => {
            let a = match (x, y) {
                (Fam::A1, Fam::A1) => 2,
                (Fam::A2, Fam::A2) => 0,
                _ => -1,
            };
            if a == 0 {
                return None;
            }
            let lev = qk1p - &qk1p.inverse().expect("monomial");
            let c = &RingElem::q_pow(table, a * p) - &RingElem::q_pow(table, -a * p);
            Some((&lev * &c).scale(inv))
        }
        _ if x == y => Some(RingElem::from_int(table, x.metric()).scale(inv)),
        _ => None,
    }
}

/// A basis state: creation multiset on top of a momentum state
/// `e^{m_12 Q_b^12} e^{m_13 Q_b^13} e^{m_23 Q_b^23} e^{m_c Q_c^12}|0>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    pub mom: [i32; SLOTS],
    /// sorted `(family, p, multiplicity)` with `p > 0`
    pub occ: Vec<(Fam, u32, u32)>,
}

impl FockState {
    pub fn vacuum() -> Self {
        FockState {
            mom: [0; SLOTS],
            occ: Vec::new(),
        }
    }

    pub fn with_momentum(mom: [i32; SLOTS]) -> Self {
        FockState {
            mom,
            occ: Vec::new(),
        }
    }

    pub fn energy(&self) -> u32 {
        self.occ.iter().map(|&(_, p, c)| p * c).sum()
    }

    /// Adds `count` creators `X^(p)` of family `fam`.
    pub fn create(&mut self, fam: Fam, p: u32, count: u32) {
        if count == 0 {
            return;
        }
        match self
            .occ
            .binary_search_by(|&(f, pp, _)| (f, pp).cmp(&(fam, p)))
        {
            Ok(k) => self.occ[k].2 += count,
            Err(k) => self.occ.insert(k, (fam, p, count)),
        }
    }

    pub fn count(&self, fam: Fam, p: u32) -> u32 {
        match self
            .occ
            .binary_search_by(|&(f, pp, _)| (f, pp).cmp(&(fam, p)))
        {
            Ok(k) => self.occ[k].2,
            Err(_) => 0,
        }
    }

    /// Removes one creator; the caller ensures it is present.
    pub fn remove_one(&mut self, fam: Fam, p: u32) {
        let k = self
            .occ
            .binary_search_by(|&(f, pp, _)| (f, pp).cmp(&(fam, p)))
            .expect("creator present");
        self.occ[k].2 -= 1;
        if self.occ[k].2 == 0 {
            self.occ.remove(k);
        }
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(fam, p, c) in &self.occ {
            if c == 1 {
                write!(f, "{}[-{p}] ", fam.name())?;
            } else {
                write!(f, "{}[-{p}]^{c} ", fam.name())?;
            }
        }
        let m = self.mom;
        write!(f, "|{},{},{},{}>", m[0], m[1], m[2], m[3])
    }
}

/// Sign of moving `e^{d Q}` (for an odd letter) leftwards past the odd
/// letters of the word `past`, given as `(odd?, power)` pairs.
pub fn cocycle_sign(moving_odd: bool, past: &[(bool, i32)]) -> i64 {
    if !moving_odd {
        return 1;
    }
    let n: i64 = past
        .iter()
        .filter(|(odd, _)| *odd)
        .map(|&(_, k)| i64::from(k))
        .sum();
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Sign produced when the zero-mode word of a vertex operator acts on the
/// momentum state `mom`. Inside a vertex operator the odd letters stand with
/// higher slots to the left, `:e^{Q^{23}} e^{Q^{13}}: = e^{Q^{23}} e^{Q^{13}}`;
/// states keep them in ascending order.
pub fn shift_sign(mom: &[i32; SLOTS], delta: &[i32; SLOTS]) -> i64 {
    let odd = |s: usize| {
        FAMS.iter()
            .any(|f| f.slot() == Some(s) && f.odd_coordinate())
    };
    let mut cur = *mom;
    let mut sign = 1;
    // the lowest letter is rightmost and acts first; each letter moves past
    // the state's letters of lower slots
    for s in 0..SLOTS {
        if delta[s] != 0 && odd(s) {
            let past: Vec<(bool, i32)> = (0..s).map(|t| (odd(t), cur[t])).collect();
            for _ in 0..delta[s].unsigned_abs() {
                sign *= cocycle_sign(true, &past);
            }
        }
        cur[s] += delta[s];
    }
    sign
}

/// All states with energy `<= e_cut` and every momentum entry in `[-w, w]`.
pub fn basis(e_cut: u32, w: i32) -> Vec<FockState> {
    let mut occs: Vec<Vec<(Fam, u32, u32)>> = Vec::new();
    let modes: Vec<(Fam, u32)> = (1..=e_cut)
        .flat_map(|p| FAMS.iter().map(move |&f| (f, p)))
        .collect();
    fn rec(
        modes: &[(Fam, u32)],
        left: u32,
        cur: &mut Vec<(Fam, u32, u32)>,
        out: &mut Vec<Vec<(Fam, u32, u32)>>,
    ) {
        let Some((&(f, p), rest)) = modes.split_first() else {
            let mut v = cur.clone();
            v.sort();
            out.push(v);
            return;
        };
        let mut c = 0;
        while c * p <= left {
            if c > 0 {
                cur.push((f, p, c));
            }
            rec(rest, left - c * p, cur, out);
            if c > 0 {
                cur.pop();
            }
            c += 1;
        }
    }
    rec(&modes, e_cut, &mut Vec::new(), &mut occs);
    occs.sort_by(|a, b| {
        let ea: u32 = a.iter().map(|&(_, p, c)| p * c).sum();
        let eb: u32 = b.iter().map(|&(_, p, c)| p * c).sum();
        ea.cmp(&eb).then_with(|| a.cmp(b))
    });
    let range: Vec<i32> = (-w..=w).collect();
    let mut out = Vec::new();
    for &m0 in &range {
        for &m1 in &range {
            for &m2 in &range {
                for &m3 in &range {
                    for o in &occs {
                        out.push(FockState {
                            mom: [m0, m1, m2, m3],
                            occ: o.clone(),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Which zero-mode momenta accompany the oscillator states of the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentumWindow {
    /// every momentum entry in `[-w, w]`
    Box(i32),
    /// oscillator energy plus `s * |m|_1` at most the energy cut: each unit
    /// of momentum is charged `s` units of energy
    Weighted(u32),
}

impl fmt::Display for MomentumWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentumWindow::Box(w) => write!(f, "box:{w}"),
            MomentumWindow::Weighted(s) => write!(f, "weighted:{s}"),
        }
    }
}

impl FromStr for MomentumWindow {
    type Err = String;

    /// `box:<w>` or `weighted:<s>` with `s >= 1`.
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad momentum window `{s}` (expected box:<w> or weighted:<s>)");
        let (kind, v) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "box" => v
                .parse()
                .ok()
                .filter(|w: &i32| *w >= 0)
                .map(MomentumWindow::Box)
                .ok_or_else(bad),
            "weighted" => v
                .parse()
                .ok()
                .filter(|s: &u32| *s >= 1)
                .map(MomentumWindow::Weighted)
                .ok_or_else(bad),
            _ => Err(bad()),
        }
    }
}

/// Basis states of oscillator energy `<= e_cut` whose momenta lie in `window`,
/// ordered by oscillator energy plus `|m|_1` (cheapest first).
pub fn basis_in(e_cut: u32, window: MomentumWindow) -> Vec<FockState> {
    let l1 = |s: &FockState| s.mom.iter().map(|m| m.unsigned_abs()).sum::<u32>();
    let mut out = match window {
        MomentumWindow::Box(w) => basis(e_cut, w),
        MomentumWindow::Weighted(w) => {
            let mut out = basis(e_cut, (e_cut / w) as i32);
            out.retain(|s| s.energy() + w * l1(s) <= e_cut);
            out
        }
    };
    out.sort_by_key(|s| s.energy() + l1(s));
    out
}

/// Exact finite combination of Fock states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockVector {
    pub terms: BTreeMap<FockState, RingElem>,
}

impl FockVector {
    pub fn zero() -> Self {
        FockVector {
            terms: BTreeMap::new(),
        }
    }

    pub fn basis(table: &Arc<SymbolTable>, s: FockState) -> Self {
        let mut v = Self::zero();
        v.terms.insert(s, RingElem::one(table));
        v
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, s: FockState, c: RingElem) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(s) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get() + &c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &FockVector, by: &RingElem) {
        if by.is_zero() {
            return;
        }
        for (s, c) in &other.terms {
            self.add_term(s.clone(), c * by);
        }
    }

    pub fn scale(&self, by: &RingElem) -> FockVector {
        let mut out = FockVector::zero();
        out.add_scaled(self, by);
        out
    }

    pub fn sub(&self, other: &FockVector) -> FockVector {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), -c);
        }
        out
    }

    pub fn coeff(&self, s: &FockState, table: &Arc<SymbolTable>) -> RingElem {
        self.terms
            .get(s)
            .cloned()
            .unwrap_or_else(|| RingElem::zero(table))
    }
}

/// Builder for a [`FockVector`] from many contributions; every coefficient
/// is canonicalized once at the end.
pub struct FockAccum {
    table: Arc<SymbolTable>,
    terms: HashMap<FockState, RingSum>,
}

impl FockAccum {
    pub fn new(table: &Arc<SymbolTable>) -> Self {
        FockAccum {
            table: table.clone(),
            terms: HashMap::new(),
        }
    }

    fn slot(&mut self, s: FockState) -> &mut RingSum {
        let table = &self.table;
        self.terms.entry(s).or_insert_with(|| RingSum::new(table))
    }

    pub fn add_term(&mut self, s: FockState, c: &RingElem) {
        if !c.is_zero() {
            self.slot(s).add(c);
        }
    }

    /// Adds `a * b` times the state `s`.
    pub fn add_product(&mut self, s: FockState, a: &RingElem, b: &RingElem) {
        if !a.is_zero() && !b.is_zero() {
            self.slot(s).add_product(a, b);
        }
    }

    pub fn add_scaled(&mut self, v: &FockVector, by: &RingElem) {
        if by.is_zero() {
            return;
        }
        for (s, c) in &v.terms {
            self.add_product(s.clone(), c, by);
        }
    }

    pub fn finish(self) -> FockVector {
        let terms = self
            .terms
            .into_iter()
            .map(|(s, c)| (s, c.finish()))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        FockVector { terms }
    }
}
