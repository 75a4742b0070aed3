//! Z2-graded polynomials in the flag coordinates `x_{i,j}`, `1 <= i < j <= M+N`.
//!
//! Odd variables (those with `nu_i nu_j = -1`) anticommute and square to
//! zero. Monomials store odd letters in the fixed lexicographic order of
//! `(i, j)`; every reordering sign is pushed into the coefficient. Grassmann
//! derivatives act from the left.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ring::{LinForm, Rat, RingElem, RingError, SymbolTable};
use crate::structure::{Parity, RootData};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrassmannError {
    #[error("no flag coordinate x_{{{0},{1}}}")]
    UnknownVariable(usize, usize),
    #[error("cannot parse monomial `{0}`")]
    Parse(String),
    #[error("odd variable {0} appears more than once")]
    OddSquare(String),
    #[error(transparent)]
    Ring(#[from] RingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarIndex {
    pub i: usize,
    pub j: usize,
    pub parity: Parity,
}

impl fmt::Display for VarIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.i < 10 && self.j < 10 {
            write!(f, "x{}{}", self.i, self.j)
        } else {
            write!(f, "x{}_{}", self.i, self.j)
        }
    }
}

/// The flag coordinates of `sl(M|N)` in canonical (lexicographic) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagSpace {
    root: RootData,
    vars: Vec<VarIndex>,
}

impl FlagSpace {
    pub fn new(root: RootData) -> Arc<Self> {
        let size = root.size();
        let mut vars = Vec::new();
        for i in 1..=size {
            for j in i + 1..=size {
                let parity = if root.nu(i) * root.nu(j) == 1 {
                    Parity::Even
                } else {
                    Parity::Odd
                };
                vars.push(VarIndex { i, j, parity });
            }
        }
        Arc::new(FlagSpace { root, vars })
    }

    pub fn root(&self) -> &RootData {
        &self.root
    }

    pub fn vars(&self) -> &[VarIndex] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Position of `x_{i,j}` in canonical order.
    pub fn var(&self, i: usize, j: usize) -> Result<usize, GrassmannError> {
        let size = self.root.size();
        if i == 0 || i >= j || j > size {
            return Err(GrassmannError::UnknownVariable(i, j));
        }
        // row-major offset of (i, j) in the strict upper triangle
        let before: usize = (1..i).map(|r| size - r).sum();
        Ok(before + (j - i - 1))
    }

    pub fn is_odd(&self, v: usize) -> bool {
        self.vars[v].parity == Parity::Odd
    }

    pub fn one(&self) -> SuperMonomial {
        SuperMonomial(vec![0; self.vars.len()])
    }

    /// All monomials of total degree `<= max_degree`, in canonical order.
    pub fn monomials_up_to(&self, max_degree: usize) -> Vec<SuperMonomial> {
        let mut out = Vec::new();
        let mut cur = vec![0u8; self.vars.len()];
        self.enumerate(0, max_degree, &mut cur, &mut out);
        out.sort();
        out
    }

    fn enumerate(
        &self,
        pos: usize,
        budget: usize,
        cur: &mut Vec<u8>,
        out: &mut Vec<SuperMonomial>,
    ) {
        if pos == self.vars.len() {
            out.push(SuperMonomial(cur.clone()));
            return;
        }
        let cap = if self.is_odd(pos) {
            budget.min(1)
        } else {
            budget
        };
        for e in 0..=cap {
            cur[pos] = e as u8;
            self.enumerate(pos + 1, budget - e, cur, out);
        }
        cur[pos] = 0;
    }

    /// Parses `"1"`, `"x12^2*x13"` or `"x1_10*x2_11"`.
    pub fn parse_monomial(&self, s: &str) -> Result<SuperMonomial, GrassmannError> {
        let s = s.trim();
        let mut m = self.one();
        if s == "1" || s.is_empty() {
            return Ok(m);
        }
        let bad = || GrassmannError::Parse(s.to_string());
        for factor in s.split('*') {
            let factor = factor.trim();
            let (name, exp) = match factor.split_once('^') {
                Some((n, e)) => (n, e.trim().parse::<u8>().map_err(|_| bad())?),
                None => (factor, 1),
            };
            let body = name.strip_prefix('x').ok_or_else(bad)?;
            let (i, j) = if let Some((a, b)) = body.split_once('_') {
                (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?)
            } else if body.len() == 2 && body.chars().all(|c| c.is_ascii_digit()) {
                let d: Vec<usize> = body.chars().map(|c| c as usize - '0' as usize).collect();
                (d[0], d[1])
            } else {
                return Err(bad());
            };
            let v = self.var(i, j)?;
            m.0[v] = m.0[v].checked_add(exp).ok_or_else(bad)?;
            if self.is_odd(v) && m.0[v] > 1 {
                return Err(GrassmannError::OddSquare(self.vars[v].to_string()));
            }
        }
        Ok(m)
    }

    pub fn format_monomial(&self, m: &SuperMonomial) -> String {
        let parts: Vec<String> =
            m.0.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| {
                    if e == 1 {
                        self.vars[v].to_string()
                    } else {
                        format!("{}^{e}", self.vars[v])
                    }
                })
                .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

/// Exponent vector over the flag coordinates; odd entries are 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SuperMonomial(pub Vec<u8>);

impl SuperMonomial {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// Eigenvalue of `theta_v = x_v d/dx_v`.
    pub fn theta(&self, v: usize) -> i64 {
        self.0[v] as i64
    }

    pub fn parity(&self, space: &FlagSpace) -> Parity {
        let odd = (0..self.0.len())
            .filter(|&v| space.is_odd(v) && self.0[v] == 1)
            .count();
        Parity::from_bit((odd % 2) as u8)
    }

    /// Number of odd letters strictly before position `v`.
    fn odd_before(&self, space: &FlagSpace, v: usize) -> usize {
        (0..v)
            .filter(|&u| space.is_odd(u) && self.0[u] == 1)
            .count()
    }
}

/// Product of monomials with its Koszul sign, or `None` when an odd letter repeats.
pub fn mul_monomials(
    space: &FlagSpace,
    a: &SuperMonomial,
    b: &SuperMonomial,
) -> Option<(i64, SuperMonomial)> {
    let mut sign = 1i64;
    let mut out = a.0.clone();
    for v in 0..b.0.len() {
        if b.0[v] == 0 {
            continue;
        }
        if space.is_odd(v) {
            if a.0[v] == 1 {
                return None;
            }
            // odd letters of `a` that sit after v must be crossed
            let crossed = (v + 1..a.0.len())
                .filter(|&u| space.is_odd(u) && a.0[u] == 1)
                .count();
            if crossed % 2 == 1 {
                sign = -sign;
            }
        }
        out[v] += b.0[v];
    }
    Some((sign, SuperMonomial(out)))
}

/// Linear form whose variables may include `theta_{i,j}` eigenvalues.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThetaForm {
    pub base: LinForm,
    /// `(variable position, coefficient)` pairs.
    pub theta: Vec<(usize, i64)>,
}

impl ThetaForm {
    pub fn constant(base: LinForm) -> Self {
        ThetaForm {
            base,
            theta: Vec::new(),
        }
    }

    pub fn add_theta(&mut self, v: usize, coef: i64) {
        if coef == 0 {
            return;
        }
        if let Some(e) = self.theta.iter_mut().find(|(u, _)| *u == v) {
            e.1 += coef;
        } else {
            self.theta.push((v, coef));
        }
        self.theta.retain(|(_, c)| *c != 0);
    }

    pub fn plus(&self, other: &ThetaForm) -> ThetaForm {
        let mut out = ThetaForm::constant(self.base.plus(&other.base));
        for &(v, c) in self.theta.iter().chain(other.theta.iter()) {
            out.add_theta(v, c);
        }
        out
    }

    pub fn neg(&self) -> ThetaForm {
        ThetaForm {
            base: self.base.neg(),
            theta: self.theta.iter().map(|&(v, c)| (v, -c)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.theta.is_empty()
    }

    /// Substitutes the theta eigenvalues of `m`.
    pub fn eval(&self, m: &SuperMonomial) -> LinForm {
        let t: i64 = self.theta.iter().map(|&(v, c)| c * m.theta(v)).sum();
        self.base.plus_const(Rat::from_integer(t))
    }
}

#[derive(Clone, PartialEq)]
pub struct SuperPoly {
    space: Arc<FlagSpace>,
    table: Arc<SymbolTable>,
    terms: BTreeMap<SuperMonomial, RingElem>,
}

impl fmt::Debug for SuperPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SuperPoly({self})")
    }
}

impl SuperPoly {
    pub fn zero(space: &Arc<FlagSpace>, table: &Arc<SymbolTable>) -> Self {
        SuperPoly {
            space: space.clone(),
            table: table.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn from_monomial(
        space: &Arc<FlagSpace>,
        table: &Arc<SymbolTable>,
        m: SuperMonomial,
    ) -> Self {
        Self::term(space, m, RingElem::one(table))
    }

    pub fn term(space: &Arc<FlagSpace>, m: SuperMonomial, c: RingElem) -> Self {
        let table = c.table().clone();
        let mut p = Self::zero(space, &table);
        p.add_term(m, c);
        p
    }

    pub fn var(space: &Arc<FlagSpace>, table: &Arc<SymbolTable>, v: usize) -> Self {
        let mut m = space.one();
        m.0[v] = 1;
        Self::from_monomial(space, table, m)
    }

    pub fn space(&self) -> &Arc<FlagSpace> {
        &self.space
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn terms(&self) -> &BTreeMap<SuperMonomial, RingElem> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &SuperMonomial) -> RingElem {
        self.terms
            .get(m)
            .cloned()
            .unwrap_or_else(|| RingElem::zero(&self.table))
    }

    pub fn add_term(&mut self, m: SuperMonomial, c: RingElem) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(e) => {
                let s = &*e + &c;
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *e = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add_assign_scaled(&mut self, other: &SuperPoly, by: &RingElem) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * by);
        }
    }

    pub fn add(&self, other: &SuperPoly) -> SuperPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &SuperPoly) -> SuperPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, by: &RingElem) -> SuperPoly {
        let mut out = SuperPoly::zero(&self.space, &self.table);
        if by.is_zero() {
            return out;
        }
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c * by);
        }
        out
    }

    /// Graded-commutative product.
    pub fn mul(&self, other: &SuperPoly) -> SuperPoly {
        let mut out = SuperPoly::zero(&self.space, &self.table);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if let Some((sign, m)) = mul_monomials(&self.space, a, b) {
                    out.add_term(m, (ca * cb).scale(Rat::from_integer(sign)));
                }
            }
        }
        out
    }

    /// Left multiplication by the coordinate `x_v`.
    pub fn left_mul_var(&self, v: usize) -> SuperPoly {
        let mut out = SuperPoly::zero(&self.space, &self.table);
        let odd = self.space.is_odd(v);
        for (m, c) in &self.terms {
            if odd && m.0[v] == 1 {
                continue;
            }
            let mut n = m.clone();
            n.0[v] += 1;
            let c = if odd && m.odd_before(&self.space, v) % 2 == 1 {
                -c
            } else {
                c.clone()
            };
            out.add_term(n, c);
        }
        out
    }

    /// Left derivative `d/dx_v`.
    pub fn partial_left(&self, v: usize) -> SuperPoly {
        self.lower(v, |e, table| RingElem::from_int(table, e as i64))
    }

    /// `x_v^n m -> [n] x_v^{n-1} m`: the atom `(1/x_v)[theta_v]`.
    pub fn lower_with_bracket(&self, v: usize) -> SuperPoly {
        self.lower(v, |e, table| RingElem::qint(table, e as i64))
    }

    fn lower(&self, v: usize, factor: impl Fn(u8, &Arc<SymbolTable>) -> RingElem) -> SuperPoly {
        let mut out = SuperPoly::zero(&self.space, &self.table);
        let odd = self.space.is_odd(v);
        for (m, c) in &self.terms {
            let e = m.0[v];
            if e == 0 {
                continue;
            }
            let mut n = m.clone();
            n.0[v] -= 1;
            let mut coef = c * &factor(e, &self.table);
            if odd && m.odd_before(&self.space, v) % 2 == 1 {
                coef = -coef;
            }
            out.add_term(n, coef);
        }
        out
    }

    /// Multiplies each monomial by `q^{f(theta)}`.
    pub fn qshift_apply(&self, f: &ThetaForm) -> Result<SuperPoly, RingError> {
        let mut out = SuperPoly::zero(&self.space, &self.table);
        for (m, c) in &self.terms {
            let shift = RingElem::qpow(&self.table, &f.eval(m))?;
            out.add_term(m.clone(), c * &shift);
        }
        Ok(out)
    }

    /// Multiplies each monomial by `[f(theta)]`.
    pub fn qbracket_apply(&self, f: &ThetaForm) -> Result<SuperPoly, RingError> {
        let mut out = SuperPoly::zero(&self.space, &self.table);
        for (m, c) in &self.terms {
            let b = RingElem::qbracket(&self.table, &f.eval(m))?;
            out.add_term(m.clone(), c * &b);
        }
        Ok(out)
    }
}

impl fmt::Display for SuperPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mono = self.space.format_monomial(m);
            let coef = c.to_string();
            if mono == "1" {
                write!(f, "{coef}")?;
            } else if c.is_one() {
                write!(f, "{mono}")?;
            } else if coef == "-1" {
                write!(f, "-{mono}")?;
            } else if c.is_atomic_display() {
                write!(f, "{coef}*{mono}")?;
            } else {
                write!(f, "({coef})*{mono}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Arc<FlagSpace>, Arc<SymbolTable>) {
        let space = FlagSpace::new(RootData::new(2, 1).unwrap());
        let table = SymbolTable::finite(2).unwrap();
        (space, table)
    }

    fn poly(space: &Arc<FlagSpace>, table: &Arc<SymbolTable>, s: &str) -> SuperPoly {
        SuperPoly::from_monomial(space, table, space.parse_monomial(s).unwrap())
    }

    #[test]
    fn variable_layout() {
        let (space, _) = setup();
        let names: Vec<String> = space.vars().iter().map(|v| v.to_string()).collect();
        assert_eq!(names, ["x12", "x13", "x23"]);
        assert!(!space.is_odd(0));
        assert!(space.is_odd(1) && space.is_odd(2));
        assert_eq!(space.var(2, 3).unwrap(), 2);
        assert!(space.var(3, 2).is_err());
    }

    #[test]
    fn koszul_products() {
        let (s, t) = setup();
        let x13 = poly(&s, &t, "x13");
        let x23 = poly(&s, &t, "x23");
        assert_eq!(x13.mul(&x23), poly(&s, &t, "x13*x23"));
        assert_eq!(
            x23.mul(&x13),
            poly(&s, &t, "x13*x23").scale(&RingElem::from_int(&t, -1))
        );
        assert!(x13.mul(&x13).is_zero());
    }

    #[test]
    fn left_derivatives() {
        let (s, t) = setup();
        let p = poly(&s, &t, "x13*x23");
        assert_eq!(p.partial_left(1), poly(&s, &t, "x23"));
        assert_eq!(
            p.partial_left(2),
            poly(&s, &t, "x13").scale(&RingElem::from_int(&t, -1))
        );
        let sq = poly(&s, &t, "x12^2");
        assert_eq!(
            sq.partial_left(0),
            poly(&s, &t, "x12").scale(&RingElem::from_int(&t, 2))
        );
    }

    #[test]
    fn lowering_with_bracket() {
        let (s, t) = setup();
        let sq = poly(&s, &t, "x12^2");
        assert_eq!(
            sq.lower_with_bracket(0),
            poly(&s, &t, "x12").scale(&RingElem::qint(&t, 2))
        );
        assert!(poly(&s, &t, "1").lower_with_bracket(0).is_zero());
        assert_eq!(poly(&s, &t, "x13").lower_with_bracket(1), poly(&s, &t, "1"));
    }

    #[test]
    fn qshift_examples() {
        let (s, t) = setup();
        let mut f = ThetaForm::default();
        f.add_theta(0, 1);
        let p = poly(&s, &t, "x12^3").qshift_apply(&f).unwrap();
        assert_eq!(p, poly(&s, &t, "x12^3").scale(&RingElem::q_pow(&t, 3)));

        let mut g = ThetaForm::constant(LinForm::var(1, Rat::from_integer(1)));
        g.add_theta(0, -1);
        let p = poly(&s, &t, "x12").qshift_apply(&g).unwrap();
        let expect = &RingElem::symbol(&t, "L1").unwrap() * &RingElem::q_pow(&t, -1);
        assert_eq!(p, poly(&s, &t, "x12").scale(&expect));

        let mut h = ThetaForm::default();
        h.add_theta(1, 1);
        assert_eq!(
            poly(&s, &t, "1").qshift_apply(&h).unwrap(),
            poly(&s, &t, "1")
        );
    }

    #[test]
    fn display_and_parse() {
        let (s, t) = setup();
        let m = s.parse_monomial("x13*x12^2").unwrap();
        assert_eq!(s.format_monomial(&m), "x12^2*x13");
        assert!(s.parse_monomial("x13*x13").is_err());
        assert!(s.parse_monomial("y12").is_err());
        let p = poly(&s, &t, "x12^2").lower_with_bracket(0);
        assert_eq!(p.to_string(), "(q + q^-1)*x12");
    }

    #[test]
    fn monomial_enumeration_counts() {
        let (s, _) = setup();
        // x12^a x13^b x23^c with b,c in {0,1}, a+b+c <= 2
        assert_eq!(s.monomials_up_to(2).len(), 3 + 2 + 2 + 1);
    }
}
