//! Exact coefficient arithmetic.
//!
//! A [`RingElem`] is a sparse Laurent polynomial over the rationals in the
//! root symbol `s = q^{1/2}` and a fixed list of invertible formal symbols,
//! divided by a power of `(q - q^-1)`. Every coefficient that shows up in the
//! q-difference and free-boson realizations lives in this ring, so equality
//! of operators reduces to structural equality of canonical elements.
//!
//! Canonical form: terms sorted, no zero coefficients, and the denominator
//! exponent is minimal (the numerator is not divisible by `q - q^-1`).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{CheckedAdd, CheckedMul, One, Signed, Zero};
use thiserror::Error;

/// Number of exponent slots in a monomial (slot 0 is the root symbol `s`).
pub const MAX_SYMBOLS: usize = 12;

/// Slot of the root symbol `s` with `s^2 = q`.
pub const ROOT_SLOT: usize = 0;

pub type Rat = Rational64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("operands belong to different symbol tables")]
    MismatchedTables,
    #[error("exponent {value} of `{symbol}` is not representable (scale {scale})")]
    NonHalfInteger {
        symbol: String,
        value: Rat,
        scale: i64,
    },
    #[error("division by zero: q^2 = 1 while the denominator power is {0}")]
    DivisionByZero(u32),
    #[error("symbol `{0}` was assigned zero")]
    ZeroAssignment(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("too many symbols ({0}); at most {max} are supported", max = MAX_SYMBOLS)]
    TooManySymbols(usize),
    #[error("element is not invertible in the ring: {0}")]
    NotInvertible(String),
}

/// One formal invertible symbol.
///
/// `scale` relates the symbol to its logarithmic variable: a unit of
/// `log_name` contributes `scale` to the exponent of the symbol. The root
/// `s` has scale 2 because `q^1 = s^2`; the level symbol `G = q^{k/2}` has
/// scale 2 for the same reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub log_name: String,
    pub scale: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<Symbol>,
}

impl SymbolTable {
    /// Builds a table holding `q` (stored through its square root) followed by
    /// the given `(name, log_name, scale)` formals.
    pub fn new<S: AsRef<str>>(formals: &[(S, S, i64)]) -> Result<Arc<Self>, RingError> {
        if formals.len() + 1 > MAX_SYMBOLS {
            return Err(RingError::TooManySymbols(formals.len() + 1));
        }
        let mut symbols = vec![Symbol {
            name: "q".into(),
            log_name: "1".into(),
            scale: 2,
        }];
        for (name, log_name, scale) in formals {
            symbols.push(Symbol {
                name: name.as_ref().to_string(),
                log_name: log_name.as_ref().to_string(),
                scale: *scale,
            });
        }
        Ok(Arc::new(SymbolTable { symbols }))
    }

    /// Table for the finite realization of rank `rank`: `L1..L{rank}` with
    /// `L_i = q^{lambda_i}`.
    pub fn finite(rank: usize) -> Result<Arc<Self>, RingError> {
        let formals: Vec<(String, String, i64)> = (1..=rank)
            .map(|i| (format!("L{i}"), format!("lambda{i}"), 1))
            .collect();
        Self::new(&formals)
    }

    /// Table for the affine (2|1) realization: level, vacuum weights and the
    /// four free constants of the currents.
    pub fn affine() -> Arc<Self> {
        Self::new(&[
            ("G", "k", 2),
            ("W1", "w1", 1),
            ("W2", "w2", 1),
            ("e11", "log_e11", 1),
            ("e12", "log_e12", 1),
            ("e21", "log_e21", 1),
            ("e22", "log_e22", 1),
        ])
        .expect("affine table fits")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn slot_of_log(&self, log_name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.log_name == log_name)
    }
}

/// Exponent vector; ordered by the formal slots first and the root last so
/// that terms sharing their formal part are contiguous.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Mono(pub [i16; MAX_SYMBOLS]);

impl Mono {
    pub const ONE: Mono = Mono([0; MAX_SYMBOLS]);

    pub fn root(e: i16) -> Mono {
        let mut m = Mono::ONE;
        m.0[ROOT_SLOT] = e;
        m
    }

    pub fn single(slot: usize, e: i16) -> Mono {
        let mut m = Mono::ONE;
        m.0[slot] = e;
        m
    }

    #[inline]
    pub fn mul(&self, other: &Mono) -> Mono {
        let mut out = [0i16; MAX_SYMBOLS];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.0[k]
                .checked_add(other.0[k])
                .expect("exponent overflow in ring monomial");
        }
        Mono(out)
    }

    pub fn inv(&self) -> Mono {
        let mut out = self.0;
        for e in out.iter_mut() {
            *e = -*e;
        }
        Mono(out)
    }

    pub fn pow(&self, n: i64) -> Mono {
        let mut out = [0i16; MAX_SYMBOLS];
        for (k, o) in out.iter_mut().enumerate() {
            let v = self.0[k] as i64 * n;
            *o = i16::try_from(v).expect("exponent overflow in ring monomial");
        }
        Mono(out)
    }

    #[inline]
    fn same_formals(&self, other: &Mono) -> bool {
        self.0[1..] == other.0[1..]
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0[1..]
            .cmp(&other.0[1..])
            .then(self.0[ROOT_SLOT].cmp(&other.0[ROOT_SLOT]))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
pub(crate) fn radd(a: &Rat, b: &Rat) -> Rat {
    a.checked_add(b).expect("rational coefficient overflow")
}

#[inline]
pub(crate) fn rmul(a: &Rat, b: &Rat) -> Rat {
    a.checked_mul(b).expect("rational coefficient overflow")
}

/// Linear form in the logarithmic variables of a symbol table: the exponent
/// `f` in `q^f`. Coefficients are rationals; `qpow` rejects any that do not
/// land on an integer exponent of the underlying symbol.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LinForm {
    pub constant: Rat,
    pub coeffs: BTreeMap<usize, Rat>,
}

impl LinForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rat) -> Self {
        LinForm {
            constant: c,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn int(c: i64) -> Self {
        Self::constant(Rat::from_integer(c))
    }

    pub fn half(twice: i64) -> Self {
        Self::constant(Rat::new(twice, 2))
    }

    /// `coef` times the logarithmic variable housed in `slot`.
    pub fn var(slot: usize, coef: Rat) -> Self {
        let mut f = Self::zero();
        f.add_var(slot, coef);
        f
    }

    pub fn add_var(&mut self, slot: usize, coef: Rat) {
        if slot == ROOT_SLOT {
            self.constant = radd(&self.constant, &coef);
            return;
        }
        let e = self.coeffs.entry(slot).or_insert_with(Rat::zero);
        *e = radd(e, &coef);
        if e.is_zero() {
            self.coeffs.remove(&slot);
        }
    }

    pub fn plus(&self, other: &LinForm) -> LinForm {
        let mut out = self.clone();
        out.constant = radd(&out.constant, &other.constant);
        for (&s, c) in &other.coeffs {
            out.add_var(s, *c);
        }
        out
    }

    pub fn plus_const(&self, c: Rat) -> LinForm {
        let mut out = self.clone();
        out.constant = radd(&out.constant, &c);
        out
    }

    pub fn scaled(&self, by: Rat) -> LinForm {
        let mut out = LinForm::constant(rmul(&self.constant, &by));
        for (&s, c) in &self.coeffs {
            out.add_var(s, rmul(c, &by));
        }
        out
    }

    pub fn neg(&self) -> LinForm {
        self.scaled(-Rat::one())
    }

    /// Replaces the variable in `slot` by the rational `value`.
    pub fn substitute(&self, slot: usize, value: Rat) -> LinForm {
        let mut out = self.clone();
        if let Some(c) = out.coeffs.remove(&slot) {
            out.constant = radd(&out.constant, &rmul(&c, &value));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.is_empty()
    }

    /// The monomial `q^f`.
    pub fn to_mono(&self, table: &SymbolTable) -> Result<Mono, RingError> {
        let mut m = Mono::ONE;
        let put = |m: &mut Mono, slot: usize, c: &Rat| -> Result<(), RingError> {
            let sym = &table.symbols[slot];
            let v = c * Rat::from_integer(sym.scale);
            if !v.is_integer() {
                return Err(RingError::NonHalfInteger {
                    symbol: sym.log_name.clone(),
                    value: *c,
                    scale: sym.scale,
                });
            }
            let e = i16::try_from(*v.numer()).expect("exponent overflow");
            m.0[slot] = m.0[slot].checked_add(e).expect("exponent overflow");
            Ok(())
        };
        put(&mut m, ROOT_SLOT, &self.constant)?;
        for (&slot, c) in &self.coeffs {
            if slot >= table.len() {
                return Err(RingError::UnknownSymbol(format!("slot {slot}")));
            }
            put(&mut m, slot, c)?;
        }
        Ok(m)
    }
}

/// Exact element `(sum of terms) / (q - q^-1)^denom`.
#[derive(Clone)]
pub struct RingElem {
    table: Arc<SymbolTable>,
    terms: Vec<(Mono, Rat)>,
    denom: u32,
}

impl fmt::Debug for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingElem({self})")
    }
}

impl PartialEq for RingElem {
    fn eq(&self, other: &Self) -> bool {
        same_table(&self.table, &other.table)
            && self.denom == other.denom
            && self.terms == other.terms
    }
}

impl Eq for RingElem {}

impl std::hash::Hash for RingElem {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.denom.hash(state);
        self.terms.hash(state);
    }
}

fn same_table(a: &Arc<SymbolTable>, b: &Arc<SymbolTable>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// `q - q^-1 = s^2 - s^-2` as a term list.
fn qdiff_terms() -> [(Mono, Rat); 2] {
    [(Mono::root(-2), -Rat::one()), (Mono::root(2), Rat::one())]
}

fn merge_sorted(a: &[(Mono, Rat)], b: &[(Mono, Rat)], negate_b: bool) -> Vec<(Mono, Rat)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let nb = |c: &Rat| if negate_b { -*c } else { *c };
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push((b[j].0, nb(&b[j].1)));
                j += 1;
            }
            Ordering::Equal => {
                let c = radd(&a[i].1, &nb(&b[j].1));
                if !c.is_zero() {
                    out.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend(b[j..].iter().map(|(m, c)| (*m, nb(c))));
    out
}

/// Sorts and merges an unsorted term list.
fn normalize_terms(mut v: Vec<(Mono, Rat)>) -> Vec<(Mono, Rat)> {
    if v.len() <= 1 {
        v.retain(|t| !t.1.is_zero());
        return v;
    }
    v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(Mono, Rat)> = Vec::with_capacity(v.len());
    for (m, c) in v {
        match out.last_mut() {
            Some(last) if last.0 == m => last.1 = radd(&last.1, &c),
            _ => {
                if let Some(last) = out.last() {
                    if last.1.is_zero() {
                        out.pop();
                    }
                }
                out.push((m, c));
            }
        }
    }
    if out.last().is_some_and(|t| t.1.is_zero()) {
        out.pop();
    }
    out
}

fn mul_terms(a: &[(Mono, Rat)], b: &[(Mono, Rat)]) -> Vec<(Mono, Rat)> {
    if a.len() == 1 {
        let (m, c) = a[0];
        return b.iter().map(|(n, d)| (m.mul(n), rmul(&c, d))).collect();
    }
    if b.len() == 1 {
        let (m, c) = b[0];
        return a.iter().map(|(n, d)| (n.mul(&m), rmul(d, &c))).collect();
    }
    let mut v = Vec::with_capacity(a.len() * b.len());
    for (m, c) in a {
        for (n, d) in b {
            v.push((m.mul(n), rmul(c, d)));
        }
    }
    normalize_terms(v)
}

/// Exact division of a sorted term list by `s^2 - s^-2`, if possible.
fn divide_by_qdiff(terms: &[(Mono, Rat)]) -> Option<Vec<(Mono, Rat)>> {
    let mut out = Vec::with_capacity(terms.len());
    let mut i = 0;
    while i < terms.len() {
        let mut j = i + 1;
        while j < terms.len() && terms[j].0.same_formals(&terms[i].0) {
            j += 1;
        }
        let lo = terms[i].0 .0[ROOT_SLOT] as i32;
        let hi = terms[j - 1].0 .0[ROOT_SLOT] as i32;
        if hi - lo < 4 {
            return None;
        }
        // cheap test first: residues of exponents mod 4 must cancel
        let mut residues = [Rat::zero(); 4];
        for t in &terms[i..j] {
            let r = (t.0 .0[ROOT_SLOT] as i32).rem_euclid(4) as usize;
            residues[r] = radd(&residues[r], &t.1);
        }
        if residues.iter().any(|r| !r.is_zero()) {
            return None;
        }
        let len = (hi - lo + 1) as usize;
        let mut dense = vec![Rat::zero(); len];
        for t in &terms[i..j] {
            dense[(t.0 .0[ROOT_SLOT] as i32 - lo) as usize] = t.1;
        }
        let mut quot = vec![Rat::zero(); len];
        for e in (4..len).rev() {
            let c = dense[e];
            if c.is_zero() {
                continue;
            }
            quot[e - 2] = c;
            dense[e] = Rat::zero();
            dense[e - 4] = radd(&dense[e - 4], &c);
        }
        debug_assert!(dense[..4].iter().all(|c| c.is_zero()));
        let mut base = terms[i].0;
        for (e, c) in quot.into_iter().enumerate() {
            if !c.is_zero() {
                base.0[ROOT_SLOT] = (lo + e as i32) as i16;
                out.push((base, c));
            }
        }
        i = j;
    }
    Some(out)
}

impl RingElem {
    pub fn zero(table: &Arc<SymbolTable>) -> Self {
        RingElem {
            table: table.clone(),
            terms: Vec::new(),
            denom: 0,
        }
    }

    pub fn one(table: &Arc<SymbolTable>) -> Self {
        Self::monomial(table, Mono::ONE, Rat::one())
    }

    pub fn from_int(table: &Arc<SymbolTable>, n: i64) -> Self {
        Self::monomial(table, Mono::ONE, Rat::from_integer(n))
    }

    pub fn from_rat(table: &Arc<SymbolTable>, r: Rat) -> Self {
        Self::monomial(table, Mono::ONE, r)
    }

    pub fn monomial(table: &Arc<SymbolTable>, m: Mono, c: Rat) -> Self {
        let terms = if c.is_zero() {
            Vec::new()
        } else {
            vec![(m, c)]
        };
        RingElem {
            table: table.clone(),
            terms,
            denom: 0,
        }
    }

    /// The formal symbol called `name` (e.g. `"L1"`, `"G"`, `"e11"`).
    pub fn symbol(table: &Arc<SymbolTable>, name: &str) -> Result<Self, RingError> {
        let slot = table
            .slot(name)
            .ok_or_else(|| RingError::UnknownSymbol(name.to_string()))?;
        let e = if slot == ROOT_SLOT { 2 } else { 1 };
        Ok(Self::monomial(table, Mono::single(slot, e), Rat::one()))
    }

    /// `q^n` for integer `n`.
    pub fn q_pow(table: &Arc<SymbolTable>, n: i64) -> Self {
        Self::monomial(table, Mono::root((2 * n) as i16), Rat::one())
    }

    /// `q - q^-1`.
    pub fn qdiff(table: &Arc<SymbolTable>) -> Self {
        RingElem {
            table: table.clone(),
            terms: qdiff_terms().to_vec(),
            denom: 0,
        }
    }

    /// `q^f` as a single monomial.
    pub fn qpow(table: &Arc<SymbolTable>, f: &LinForm) -> Result<Self, RingError> {
        Ok(Self::monomial(table, f.to_mono(table)?, Rat::one()))
    }

    /// `[f] = (q^f - q^-f) / (q - q^-1)`, canonicalized.
    pub fn qbracket(table: &Arc<SymbolTable>, f: &LinForm) -> Result<Self, RingError> {
        let m = f.to_mono(table)?;
        Ok(Self::qbracket_mono(table, m))
    }

    /// `(u - u^-1)/(q - q^-1)` for the monomial `u`.
    pub fn qbracket_mono(table: &Arc<SymbolTable>, m: Mono) -> Self {
        if m == Mono::ONE {
            return Self::zero(table);
        }
        let terms = normalize_terms(vec![(m, Rat::one()), (m.inv(), -Rat::one())]);
        let mut out = RingElem {
            table: table.clone(),
            terms,
            denom: 1,
        };
        out.reduce();
        out
    }

    /// The q-integer `[n]`.
    pub fn qint(table: &Arc<SymbolTable>, n: i64) -> Self {
        Self::qbracket_mono(table, Mono::root((2 * n) as i16))
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn terms(&self) -> &[(Mono, Rat)] {
        &self.terms
    }

    pub fn denom(&self) -> u32 {
        self.denom
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.denom == 0
            && self.terms.len() == 1
            && self.terms[0].0 == Mono::ONE
            && self.terms[0].1.is_one()
    }

    /// The single term `(m, c)` when the element is `c * m`.
    pub fn as_monomial(&self) -> Option<(Mono, Rat)> {
        (self.denom == 0 && self.terms.len() == 1).then(|| self.terms[0])
    }

    fn reduce(&mut self) {
        if self.terms.is_empty() {
            self.denom = 0;
            return;
        }
        while self.denom > 0 {
            match divide_by_qdiff(&self.terms) {
                Some(t) => {
                    self.terms = t;
                    self.denom -= 1;
                }
                None => break,
            }
        }
    }

    /// Re-runs canonicalization; a no-op on values produced by this module.
    pub fn canonical(&self) -> Self {
        let mut out = self.clone();
        out.terms = normalize_terms(out.terms);
        out.reduce();
        out
    }

    /// Numerator multiplied by `(q - q^-1)^k`.
    fn lifted_terms(&self, k: u32) -> Vec<(Mono, Rat)> {
        let mut t = self.terms.clone();
        for _ in 0..k {
            t = mul_terms(&t, &qdiff_terms());
        }
        t
    }

    fn check(&self, other: &Self) -> Result<(), RingError> {
        if same_table(&self.table, &other.table) {
            Ok(())
        } else {
            Err(RingError::MismatchedTables)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, RingError> {
        self.check(other)?;
        Ok(self.combine(other, false))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, RingError> {
        self.check(other)?;
        Ok(self.combine(other, true))
    }

    fn combine(&self, other: &Self, negate: bool) -> Self {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return if negate {
                other.neg_ref()
            } else {
                other.clone()
            };
        }
        let denom = self.denom.max(other.denom);
        let terms = if self.denom == other.denom {
            merge_sorted(&self.terms, &other.terms, negate)
        } else {
            let a = self.lifted_terms(denom - self.denom);
            let b = other.lifted_terms(denom - other.denom);
            merge_sorted(&a, &b, negate)
        };
        let mut out = RingElem {
            table: self.table.clone(),
            terms,
            denom,
        };
        out.reduce();
        out
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, RingError> {
        self.check(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(&self.table));
        }
        let mut out = RingElem {
            table: self.table.clone(),
            terms: mul_terms(&self.terms, &other.terms),
            denom: self.denom + other.denom,
        };
        // a monomial factor keeps the other side's divisibility; that side is
        // already reduced only if it carries a denominator itself
        let settled =
            |a: &Self, b: &Self| a.terms.len() == 1 && (b.denom > 0 || b.terms.len() == 1);
        if out.denom > 0 && !settled(self, other) && !settled(other, self) {
            out.reduce();
        }
        if out.terms.is_empty() {
            out.denom = 0;
        }
        Ok(out)
    }

    fn neg_ref(&self) -> Self {
        RingElem {
            table: self.table.clone(),
            terms: self.terms.iter().map(|(m, c)| (*m, -*c)).collect(),
            denom: self.denom,
        }
    }

    /// Multiplies by `c * m` without re-checking canonical form (a monomial
    /// with nonzero coefficient cannot change divisibility).
    pub fn mul_mono(&self, m: &Mono, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero(&self.table);
        }
        RingElem {
            table: self.table.clone(),
            terms: self
                .terms
                .iter()
                .map(|(n, d)| (n.mul(m), rmul(d, c)))
                .collect(),
            denom: self.denom,
        }
    }

    pub fn scale(&self, c: Rat) -> Self {
        self.mul_mono(&Mono::ONE, &c)
    }

    /// Divides by `(q - q^-1)^d`.
    pub fn div_qdiff(&self, d: u32) -> Self {
        let mut out = self.clone();
        if out.is_zero() {
            return out;
        }
        out.denom += d;
        out.reduce();
        out
    }

    /// Multiplicative inverse of a monomial.
    pub fn inverse(&self) -> Result<Self, RingError> {
        match self.as_monomial() {
            Some((m, c)) => Ok(Self::monomial(&self.table, m.inv(), c.recip())),
            None => Err(RingError::NotInvertible(self.to_string())),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one(&self.table);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Exact rational value under `assignment` (one value per table slot;
    /// slot 0 is the value of `s = q^{1/2}`).
    pub fn subst_numeric(&self, assignment: &Assignment) -> Result<BigRational, RingError> {
        let vals = &assignment.values;
        for (k, v) in vals.iter().enumerate().take(self.table.len()) {
            if v.is_zero() {
                return Err(RingError::ZeroAssignment(
                    self.table.symbols[k].name.clone(),
                ));
            }
        }
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = BigRational::new(BigInt::from(*c.numer()), BigInt::from(*c.denom()));
            for (k, &e) in m.0.iter().enumerate().take(self.table.len()) {
                if e != 0 {
                    t *= pow_signed(&vals[k], e as i32);
                }
            }
            total += t;
        }
        if self.denom > 0 {
            let s = &vals[ROOT_SLOT];
            let d = s * s - (s * s).recip();
            if d.is_zero() {
                return Err(RingError::DivisionByZero(self.denom));
            }
            total /= num_traits::pow(d, self.denom as usize);
        }
        Ok(total)
    }
}

fn pow_signed(v: &BigRational, e: i32) -> BigRational {
    let p = num_traits::pow(v.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        p.recip()
    } else {
        p
    }
}

/// Rational values for every slot of a symbol table.
#[derive(Clone, Debug)]
pub struct Assignment {
    pub values: Vec<BigRational>,
}

impl Assignment {
    /// Random nonzero small rationals; the root avoids `q^2 = 1`.
    pub fn random<R: rand::Rng>(table: &SymbolTable, rng: &mut R) -> Self {
        let mut values = Vec::with_capacity(table.len());
        for k in 0..table.len() {
            loop {
                let n: i64 = rng.gen_range(-40..=40);
                let d: i64 = rng.gen_range(1..=40);
                if n == 0 {
                    continue;
                }
                let v = BigRational::new(BigInt::from(n), BigInt::from(d));
                if k == ROOT_SLOT && (v.abs() == BigRational::one()) {
                    continue;
                }
                values.push(v);
                break;
            }
        }
        Assignment { values }
    }
}

/// Sum of elements and products, canonicalized once in [`RingSum::finish`].
///
/// Adding many contributions one at a time merges and re-reduces on every
/// step; collecting raw terms per denominator and sorting once is linear up
/// to the final sort.
#[derive(Clone, Debug)]
pub struct RingSum {
    table: Arc<SymbolTable>,
    /// raw numerator terms, indexed by the power of `(q - q^-1)` below them
    parts: Vec<Vec<(Mono, Rat)>>,
}

impl RingSum {
    pub fn new(table: &Arc<SymbolTable>) -> Self {
        RingSum {
            table: table.clone(),
            parts: Vec::new(),
        }
    }

    fn part(&mut self, denom: u32) -> &mut Vec<(Mono, Rat)> {
        let d = denom as usize;
        if self.parts.len() <= d {
            self.parts.resize_with(d + 1, Vec::new);
        }
        &mut self.parts[d]
    }

    pub fn add(&mut self, x: &RingElem) {
        debug_assert!(same_table(&self.table, &x.table));
        if !x.is_zero() {
            self.part(x.denom).extend_from_slice(&x.terms);
        }
    }

    /// Adds `a * b`.
    pub fn add_product(&mut self, a: &RingElem, b: &RingElem) {
        debug_assert!(same_table(&self.table, &a.table) && same_table(&a.table, &b.table));
        if a.is_zero() || b.is_zero() {
            return;
        }
        let out = self.part(a.denom + b.denom);
        out.reserve(a.terms.len() * b.terms.len());
        for (m, c) in &a.terms {
            for (n, d) in &b.terms {
                out.push((m.mul(n), rmul(c, d)));
            }
        }
    }

    pub fn finish(self) -> RingElem {
        let Some(top) = self.parts.iter().rposition(|p| !p.is_empty()) else {
            return RingElem::zero(&self.table);
        };
        let mut all = Vec::new();
        for (d, raw) in self.parts.into_iter().enumerate() {
            if raw.is_empty() {
                continue;
            }
            let mut t = normalize_terms(raw);
            for _ in d..top {
                t = mul_terms(&t, &qdiff_terms());
            }
            if all.is_empty() {
                all = t;
            } else {
                all.extend(t);
            }
        }
        let mut out = RingElem {
            table: self.table,
            terms: normalize_terms(all),
            denom: top as u32,
        };
        out.reduce();
        out
    }
}

/// Assignment with cached integer powers, for evaluating many elements quickly.
///
/// Each element is brought to the common denominator `prod (n_k d_k)^E_k`, so the
/// sum is formed in integers and reduced once.
#[derive(Clone, Debug)]
pub struct NumericEval {
    values: Vec<BigRational>,
    numer_pows: Vec<Vec<BigInt>>,
    denom_pows: Vec<Vec<BigInt>>,
    qdiff: Option<BigRational>,
}

const CACHED_POWERS: usize = 129;

impl NumericEval {
    pub fn new(assignment: &Assignment) -> Self {
        let table = |f: fn(&BigRational) -> &BigInt| {
            assignment
                .values
                .iter()
                .map(|v| {
                    let mut row = Vec::with_capacity(CACHED_POWERS);
                    let mut acc = BigInt::one();
                    for _ in 0..CACHED_POWERS {
                        row.push(acc.clone());
                        acc *= f(v);
                    }
                    row
                })
                .collect::<Vec<_>>()
        };
        let qdiff = assignment.values.get(ROOT_SLOT).and_then(|s| {
            let s2 = s * s;
            (!s2.is_zero())
                .then(|| &s2 - s2.recip())
                .filter(|d| !d.is_zero())
        });
        NumericEval {
            values: assignment.values.clone(),
            numer_pows: table(|v| v.numer()),
            denom_pows: table(|v| v.denom()),
            qdiff,
        }
    }

    fn power(&self, rows: &[Vec<BigInt>], k: usize, e: usize) -> BigInt {
        match rows[k].get(e) {
            Some(p) => p.clone(),
            None => num_traits::pow(rows[k][1].clone(), e),
        }
    }

    pub fn eval(&self, x: &RingElem) -> Result<BigRational, RingError> {
        let len = x.table.len();
        for (k, v) in self.values.iter().enumerate().take(len) {
            if v.is_zero() {
                return Err(RingError::ZeroAssignment(x.table.symbols[k].name.clone()));
            }
        }
        if x.terms.is_empty() {
            return Ok(BigRational::zero());
        }
        let mut span = [0usize; MAX_SYMBOLS];
        let mut coeff_lcm: i64 = 1;
        for (m, c) in &x.terms {
            for k in 0..len {
                span[k] = span[k].max(m.0[k].unsigned_abs() as usize);
            }
            coeff_lcm = num_integer::Integer::lcm(&coeff_lcm, c.denom());
        }
        let mut sum = BigInt::zero();
        for (m, c) in &x.terms {
            let mut t = BigInt::from(*c.numer() * (coeff_lcm / *c.denom()));
            for k in 0..len {
                if span[k] == 0 {
                    continue;
                }
                let e = m.0[k] as i64;
                let up = (span[k] as i64 + e) as usize;
                let down = (span[k] as i64 - e) as usize;
                t *= self.power(&self.numer_pows, k, up);
                t *= self.power(&self.denom_pows, k, down);
            }
            sum += t;
        }
        let mut common = BigInt::from(coeff_lcm);
        for k in 0..len {
            if span[k] > 0 {
                common *= self.power(&self.numer_pows, k, span[k]);
                common *= self.power(&self.denom_pows, k, span[k]);
            }
        }
        let mut total = BigRational::new(sum, common);
        if x.denom > 0 {
            let d = self
                .qdiff
                .as_ref()
                .ok_or(RingError::DivisionByZero(x.denom))?;
            total /= num_traits::pow(d.clone(), x.denom as usize);
        }
        Ok(total)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl $tr<&RingElem> for &RingElem {
            type Output = RingElem;
            fn $m(self, rhs: &RingElem) -> RingElem {
                self.$f(rhs)
                    .expect("ring operands must share a symbol table")
            }
        }
        impl $tr<RingElem> for RingElem {
            type Output = RingElem;
            fn $m(self, rhs: RingElem) -> RingElem {
                (&self)
                    .$f(&rhs)
                    .expect("ring operands must share a symbol table")
            }
        }
        impl $tr<&RingElem> for RingElem {
            type Output = RingElem;
            fn $m(self, rhs: &RingElem) -> RingElem {
                (&self)
                    .$f(rhs)
                    .expect("ring operands must share a symbol table")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for &RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        self.neg_ref()
    }
}

impl Neg for RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        self.neg_ref()
    }
}

// ---- display ---------------------------------------------------------------

fn fmt_mono(table: &SymbolTable, m: &Mono) -> String {
    let mut parts = Vec::new();
    for k in 1..table.len() {
        let e = m.0[k];
        if e == 0 {
            continue;
        }
        let name = &table.symbols[k].name;
        if e == 1 {
            parts.push(name.clone());
        } else {
            parts.push(format!("{name}^{e}"));
        }
    }
    let r = m.0[ROOT_SLOT];
    if r != 0 {
        if r % 2 == 0 {
            if r == 2 {
                parts.push("q".into());
            } else {
                parts.push(format!("q^{}", r / 2));
            }
        } else {
            parts.push(format!("q^({r}/2)"));
        }
    }
    parts.join("*")
}

fn fmt_terms(table: &SymbolTable, terms: &[(Mono, Rat)]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (idx, (m, c)) in terms.iter().rev().enumerate() {
        let mono = fmt_mono(table, m);
        let neg = c.is_negative();
        let a = c.abs();
        if idx == 0 {
            if neg {
                s.push('-');
            }
        } else if neg {
            s.push_str(" - ");
        } else {
            s.push_str(" + ");
        }
        if mono.is_empty() {
            s.push_str(&a.to_string());
        } else if a.is_one() {
            s.push_str(&mono);
        } else {
            s.push_str(&format!("{a}*{mono}"));
        }
    }
    s
}

impl RingElem {
    /// Whether the canonical string needs parentheses when used as a factor.
    pub fn is_atomic_display(&self) -> bool {
        (self.denom == 0 && self.terms.len() <= 1) || self.bracket_form().is_some()
    }

    /// `Some((c, u))` when the element equals `c * [u]` for a monomial `u`.
    fn bracket_form(&self) -> Option<(Rat, Mono)> {
        if self.denom != 1 || self.terms.len() != 2 {
            return None;
        }
        let (m0, c0) = self.terms[0];
        let (m1, c1) = self.terms[1];
        if m0.inv() != m1 || c0 != -c1 {
            return None;
        }
        // pick the orientation with a positive coefficient on u
        if c1.is_positive() {
            Some((c1, m1))
        } else {
            Some((c0, m0))
        }
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((c, u)) = self.bracket_form() {
            let inner = fmt_mono(&self.table, &u);
            return if c.is_one() {
                write!(f, "[{inner}]")
            } else {
                write!(f, "{c}*[{inner}]")
            };
        }
        let num = fmt_terms(&self.table, &self.terms);
        match self.denom {
            0 => write!(f, "{num}"),
            1 => write!(f, "({num})/(q - q^-1)"),
            d => write!(f, "({num})/(q - q^-1)^{d}"),
        }
    }
}

/// Checks `[a] q^{b_1+..+b_n} + sum_i [b_i] q^{-a + sum_{j<i} b_j - sum_{j>i} b_j} = [a + sum b_i]`
/// with `a, b_1..b_n` formal exponents.
pub fn verify_bracket_identity(n: usize) -> Result<bool, RingError> {
    let (lhs, rhs) = bracket_identity_sides(n)?;
    Ok(lhs == rhs)
}

/// Both sides of the telescoping bracket identity, in a fresh table with
/// symbols `A = q^a` and `B1..Bn = q^{b_i}`.
pub fn bracket_identity_sides(n: usize) -> Result<(RingElem, RingElem), RingError> {
    let mut formals: Vec<(String, String, i64)> = vec![("A".into(), "a".into(), 1)];
    for i in 1..=n {
        formals.push((format!("B{i}"), format!("b{i}"), 1));
    }
    let table = SymbolTable::new(&formals)?;
    let a = LinForm::var(1, Rat::one());
    let b: Vec<LinForm> = (0..n).map(|i| LinForm::var(2 + i, Rat::one())).collect();
    let sum_b = b.iter().fold(LinForm::zero(), |acc, x| acc.plus(x));
    let mut lhs = &RingElem::qbracket(&table, &a)? * &RingElem::qpow(&table, &sum_b)?;
    for i in 0..n {
        let mut e = a.neg();
        for (j, bj) in b.iter().enumerate() {
            match j.cmp(&i) {
                Ordering::Less => e = e.plus(bj),
                Ordering::Greater => e = e.plus(&bj.neg()),
                Ordering::Equal => {}
            }
        }
        lhs = &lhs + &(&RingElem::qbracket(&table, &b[i])? * &RingElem::qpow(&table, &e)?);
    }
    let rhs = RingElem::qbracket(&table, &a.plus(&sum_b))?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn t() -> Arc<SymbolTable> {
        SymbolTable::finite(2).unwrap()
    }

    fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn additive_and_multiplicative_identities() {
        let t = t();
        let x = RingElem::qint(&t, 3);
        assert_eq!(&RingElem::zero(&t) + &x, x);
        assert_eq!(&RingElem::one(&t) * &x, x);
        assert_eq!(
            &RingElem::qint(&t, 1) + &RingElem::qint(&t, 1),
            RingElem::from_int(&t, 2)
        );
    }

    #[test]
    fn qdiff_times_qint2() {
        let t = t();
        let p = &RingElem::qdiff(&t) * &RingElem::qint(&t, 2);
        let expect = &RingElem::q_pow(&t, 2) - &RingElem::q_pow(&t, -2);
        assert_eq!(p, expect);
        assert_eq!(p.denom(), 0);
    }

    #[test]
    fn symbol_inverse() {
        let t = t();
        let l = RingElem::symbol(&t, "L1").unwrap();
        assert!((&l * &l.inverse().unwrap()).is_one());
    }

    #[test]
    fn qpow_examples() {
        let t = SymbolTable::affine();
        assert!(RingElem::qpow(&t, &LinForm::zero()).unwrap().is_one());
        let g = t.slot_of_log("k").unwrap();
        let f = LinForm::var(g, Rat::new(1, 2)).plus_const(Rat::from_integer(2));
        let expect = &RingElem::symbol(&t, "G").unwrap() * &RingElem::q_pow(&t, 2);
        assert_eq!(RingElem::qpow(&t, &f).unwrap(), expect);
        let ft = SymbolTable::finite(1).unwrap();
        let l = LinForm::var(1, Rat::one());
        assert_eq!(
            RingElem::qpow(&ft, &l).unwrap(),
            RingElem::symbol(&ft, "L1").unwrap()
        );
    }

    #[test]
    fn qpow_rejects_fractional_lambda() {
        let t = t();
        let f = LinForm::var(1, Rat::new(1, 2));
        assert!(matches!(
            RingElem::qpow(&t, &f),
            Err(RingError::NonHalfInteger { .. })
        ));
        let f = LinForm::constant(Rat::new(1, 3));
        assert!(RingElem::qpow(&t, &f).is_err());
    }

    #[test]
    fn qbracket_examples() {
        let t = t();
        assert!(RingElem::qbracket(&t, &LinForm::zero()).unwrap().is_zero());
        assert!(RingElem::qbracket(&t, &LinForm::int(1)).unwrap().is_one());
        let two = RingElem::qbracket(&t, &LinForm::int(2)).unwrap();
        assert_eq!(two, &RingElem::q_pow(&t, 1) + &RingElem::q_pow(&t, -1));
        assert_eq!(two.to_string(), "q + q^-1");
        let l = RingElem::qbracket(&t, &LinForm::var(1, Rat::one())).unwrap();
        assert_eq!(l.denom(), 1);
        assert_eq!(l.to_string(), "[L1]");
    }

    #[test]
    fn mismatched_tables_error() {
        let a = RingElem::one(&SymbolTable::finite(1).unwrap());
        let b = RingElem::one(&SymbolTable::finite(2).unwrap());
        assert_eq!(a.try_add(&b), Err(RingError::MismatchedTables));
        assert_eq!(a.try_mul(&b), Err(RingError::MismatchedTables));
    }

    #[test]
    fn subst_qint2_at_s3() {
        let t = SymbolTable::finite(1).unwrap();
        let a = Assignment {
            values: vec![big(3, 1), big(5, 1)],
        };
        let v = RingElem::qint(&t, 2).subst_numeric(&a).unwrap();
        assert_eq!(v, big(82, 9));
        let l = RingElem::symbol(&t, "L1")
            .unwrap()
            .subst_numeric(&a)
            .unwrap();
        assert_eq!(l, big(5, 1));
    }

    #[test]
    fn subst_division_by_zero() {
        let t = SymbolTable::finite(1).unwrap();
        let a = Assignment {
            values: vec![big(-1, 1), big(5, 1)],
        };
        let x = RingElem::qbracket(&t, &LinForm::var(1, Rat::one())).unwrap();
        assert_eq!(x.subst_numeric(&a), Err(RingError::DivisionByZero(1)));
        // no denominator: fine even at q = 1
        assert!(RingElem::qint(&t, 3).subst_numeric(&a).is_ok());
    }

    #[test]
    fn bracket_identity_two_term_numeric() {
        let (lhs, rhs) = bracket_identity_sides(1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let a = Assignment::random(lhs.table(), &mut rng);
            assert_eq!(
                lhs.subst_numeric(&a).unwrap(),
                rhs.subst_numeric(&a).unwrap()
            );
        }
    }

    #[test]
    fn bracket_identity_small_n() {
        for n in [1, 2, 4] {
            assert!(verify_bracket_identity(n).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn canonical_denominator_is_minimal() {
        let t = t();
        // (q^2 - q^-2) / (q - q^-1)^2 = (q + q^-1)/(q - q^-1)
        let x = (&RingElem::q_pow(&t, 2) - &RingElem::q_pow(&t, -2)).div_qdiff(2);
        assert_eq!(x.denom(), 1);
        assert_eq!(x, RingElem::qint(&t, 2).div_qdiff(1));
    }

    #[test]
    fn display_half_powers() {
        let t = SymbolTable::affine();
        let x = RingElem::monomial(&t, Mono::root(-1), Rat::from_integer(-3));
        assert_eq!(x.to_string(), "-3*q^(-1/2)");
    }

    #[test]
    fn cached_evaluation_matches_direct_substitution() {
        let t = SymbolTable::affine();
        let g = RingElem::symbol(&t, "G").unwrap();
        let x = (&(&RingElem::qint(&t, 5) * &g.pow(3)) - &RingElem::from_rat(&t, Rat::new(7, 3)))
            .div_qdiff(2);
        let y = &x * &g.inverse().unwrap().pow(200);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let a = Assignment::random(&t, &mut rng);
            let ev = NumericEval::new(&a);
            for e in [&x, &y, &RingElem::zero(&t)] {
                assert_eq!(ev.eval(e).unwrap(), e.subst_numeric(&a).unwrap());
            }
        }
    }
}
