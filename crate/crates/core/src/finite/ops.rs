//! q-difference operators as lists of atoms, and noncommutative linear
//! combinations of their words.

use std::fmt;
use std::sync::Arc;

use crate::grassmann::{FlagSpace, SuperMonomial, SuperPoly, ThetaForm};
use crate::ring::{Rat, RingElem, RingError, SymbolTable};
use crate::structure::{graded_bracket_sign, Parity};

/// Which building block of the generators an atom belongs to; used for sabotage
/// targeting and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKind {
    H,
    /// `e_{i,i}`
    EDiag,
    /// `e_{i,i'}`, `i' < i`
    EOff,
    F1,
    F2,
    F3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId {
    pub kind: AtomKind,
    pub i: usize,
    /// second index (`i'` or `j'`); equal to `i` for `h`, `e_{i,i}` and `f^2`
    pub ip: usize,
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AtomKind::H => write!(f, "h.i={}", self.i),
            AtomKind::EDiag => write!(f, "e.i={}.ip={}", self.i, self.i),
            AtomKind::EOff => write!(f, "e.i={}.ip={}", self.i, self.ip),
            AtomKind::F1 => write!(f, "f1.j={}.jp={}", self.i, self.ip),
            AtomKind::F2 => write!(f, "f2.j={}", self.i),
            AtomKind::F3 => write!(f, "f3.j={}.jp={}", self.i, self.ip),
        }
    }
}

impl std::str::FromStr for AtomId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('.');
        let head = parts.next().unwrap_or_default();
        let mut i = None;
        let mut ip = None;
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| format!("bad atom id `{s}`"))?;
            let v: usize = v.parse().map_err(|_| format!("bad index in `{s}`"))?;
            match k {
                "i" | "j" => i = Some(v),
                "ip" | "jp" => ip = Some(v),
                _ => return Err(format!("bad key `{k}` in `{s}`")),
            }
        }
        let i = i.ok_or_else(|| format!("missing index in `{s}`"))?;
        let (kind, ip) = match head {
            "h" => (AtomKind::H, i),
            "e" => match ip {
                Some(p) if p != i => (AtomKind::EOff, p),
                _ => (AtomKind::EDiag, i),
            },
            "f1" => (AtomKind::F1, ip.ok_or("f1 needs jp")?),
            "f2" => (AtomKind::F2, i),
            "f3" => (AtomKind::F3, ip.ok_or("f3 needs jp")?),
            _ => return Err(format!("unknown atom kind `{head}`")),
        };
        Ok(AtomId { kind, i, ip })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lowering {
    /// `(1/x)[theta_x]`
    Bracket(usize),
    /// plain left derivative
    Plain(usize),
}

/// `coeff * x_{m_1}...x_{m_r} * lower * prod [b] * q^{shift} * sign`, applied
/// right to left.
#[derive(Debug, Clone)]
pub struct Atom {
    pub id: Option<AtomId>,
    pub coeff: RingElem,
    pub multiplier: Vec<usize>,
    pub lower: Option<Lowering>,
    pub brackets: Vec<ThetaForm>,
    pub shift: ThetaForm,
    /// diagonal sign `prod_v (-1)^{theta_v}`
    pub sign_theta: Vec<usize>,
}

impl Atom {
    pub fn new(coeff: RingElem) -> Self {
        Atom {
            id: None,
            coeff,
            multiplier: Vec::new(),
            lower: None,
            brackets: Vec::new(),
            shift: ThetaForm::default(),
            sign_theta: Vec::new(),
        }
    }

    /// Z2 grade of the atom.
    pub fn parity(&self, space: &FlagSpace) -> Parity {
        let mut bits = 0u8;
        for &v in &self.multiplier {
            bits ^= u8::from(space.is_odd(v));
        }
        if let Some(Lowering::Bracket(v) | Lowering::Plain(v)) = self.lower {
            bits ^= u8::from(space.is_odd(v));
        }
        Parity::from_bit(bits)
    }

    pub fn apply(&self, p: &SuperPoly) -> Result<SuperPoly, RingError> {
        let mut out = SuperPoly::zero(p.space(), p.table());
        for (m, c) in p.terms() {
            let r = self.apply_monomial(p.space(), m)?;
            out.add_assign_scaled(&r, c);
        }
        Ok(out)
    }

    pub fn apply_monomial(
        &self,
        space: &Arc<FlagSpace>,
        m: &SuperMonomial,
    ) -> Result<SuperPoly, RingError> {
        let table = self.coeff.table();
        let mut c = &self.coeff * &RingElem::qpow(table, &self.shift.eval(m))?;
        for b in &self.brackets {
            if c.is_zero() {
                break;
            }
            c = &c * &RingElem::qbracket(table, &b.eval(m))?;
        }
        let flips: i64 = self.sign_theta.iter().map(|&v| m.theta(v)).sum();
        if flips % 2 != 0 {
            c = -c;
        }
        let mut p = SuperPoly::term(space, m.clone(), c);
        match self.lower {
            Some(Lowering::Bracket(v)) => p = p.lower_with_bracket(v),
            Some(Lowering::Plain(v)) => p = p.partial_left(v),
            None => {}
        }
        for &v in self.multiplier.iter().rev() {
            p = p.left_mul_var(v);
        }
        Ok(p)
    }
}

/// A generator-level operator: a sum of atoms of a single parity.
#[derive(Debug, Clone)]
pub struct QDiffOp {
    pub name: String,
    pub atoms: Vec<Atom>,
    pub parity: Parity,
}

impl QDiffOp {
    pub fn new(name: impl Into<String>, atoms: Vec<Atom>, parity: Parity) -> Self {
        QDiffOp {
            name: name.into(),
            atoms,
            parity,
        }
    }

    pub fn apply(&self, p: &SuperPoly) -> Result<SuperPoly, RingError> {
        let mut out = SuperPoly::zero(p.space(), p.table());
        for a in &self.atoms {
            out = out.add(&a.apply(p)?);
        }
        Ok(out)
    }

    pub fn apply_monomial(
        &self,
        space: &Arc<FlagSpace>,
        table: &Arc<SymbolTable>,
        m: &SuperMonomial,
    ) -> Result<SuperPoly, RingError> {
        let mut out = SuperPoly::zero(space, table);
        for a in &self.atoms {
            out = out.add(&a.apply_monomial(space, m)?);
        }
        Ok(out)
    }

    /// Every atom's grade agrees with the declared parity.
    pub fn parity_consistent(&self, space: &FlagSpace) -> bool {
        self.atoms.iter().all(|a| a.parity(space) == self.parity)
    }
}

/// Noncommutative polynomial in [`QDiffOp`]s: `sum_w c_w * (op_1 op_2 ... op_r)`,
/// where the rightmost operator acts first.
#[derive(Debug, Clone)]
pub struct OpExpr {
    pub words: Vec<(RingElem, Vec<Arc<QDiffOp>>)>,
    pub parity: Parity,
}

impl OpExpr {
    pub fn zero(parity: Parity) -> Self {
        OpExpr {
            words: Vec::new(),
            parity,
        }
    }

    pub fn word(table: &Arc<SymbolTable>, ops: &[Arc<QDiffOp>]) -> Self {
        let parity = ops.iter().fold(Parity::Even, |p, o| p.add(o.parity));
        OpExpr {
            words: vec![(RingElem::one(table), ops.to_vec())],
            parity,
        }
    }

    pub fn scaled(&self, c: &RingElem) -> Self {
        OpExpr {
            words: self.words.iter().map(|(k, w)| (k * c, w.clone())).collect(),
            parity: self.parity,
        }
    }

    pub fn plus(&self, other: &OpExpr) -> Self {
        let mut words = self.words.clone();
        words.extend(other.words.iter().cloned());
        let parity = if self.words.is_empty() {
            other.parity
        } else {
            self.parity
        };
        OpExpr { words, parity }
    }

    pub fn minus(&self, other: &OpExpr) -> Self {
        let mut words = self.words.clone();
        words.extend(other.words.iter().map(|(c, w)| (-c, w.clone())));
        let parity = if self.words.is_empty() {
            other.parity
        } else {
            self.parity
        };
        OpExpr { words, parity }
    }

    pub fn compose(&self, other: &OpExpr) -> Self {
        let mut words = Vec::with_capacity(self.words.len() * other.words.len());
        for (a, wa) in &self.words {
            for (b, wb) in &other.words {
                let mut w = wa.clone();
                w.extend(wb.iter().cloned());
                words.push((a * b, w));
            }
        }
        OpExpr {
            words,
            parity: self.parity.add(other.parity),
        }
    }

    /// `[A, B]_xi = AB - (-1)^{|A||B|} xi BA`.
    pub fn graded_commutator(a: &OpExpr, b: &OpExpr, xi: &RingElem) -> Self {
        let sign = graded_bracket_sign(a.parity, b.parity);
        let ba = b.compose(a).scaled(&xi.scale(Rat::from_integer(sign)));
        a.compose(b).minus(&ba)
    }

    /// Applies every word separately to `m`.
    pub fn apply_words(
        &self,
        space: &Arc<FlagSpace>,
        table: &Arc<SymbolTable>,
        m: &SuperMonomial,
    ) -> Result<Vec<(RingElem, SuperPoly)>, RingError> {
        let mut out = Vec::with_capacity(self.words.len());
        for (c, w) in &self.words {
            let mut p = SuperPoly::from_monomial(space, table, m.clone());
            for op in w.iter().rev() {
                if p.is_zero() {
                    break;
                }
                p = op.apply(&p)?;
            }
            out.push((c.clone(), p));
        }
        Ok(out)
    }

    pub fn apply_monomial(
        &self,
        space: &Arc<FlagSpace>,
        table: &Arc<SymbolTable>,
        m: &SuperMonomial,
    ) -> Result<SuperPoly, RingError> {
        let mut out = SuperPoly::zero(space, table);
        for (c, p) in self.apply_words(space, table, m)? {
            out.add_assign_scaled(&p, &c);
        }
        Ok(out)
    }

    pub fn apply(&self, p: &SuperPoly) -> Result<SuperPoly, RingError> {
        let mut out = SuperPoly::zero(p.space(), p.table());
        for (m, c) in p.terms() {
            let r = self.apply_monomial(p.space(), p.table(), m)?;
            out.add_assign_scaled(&r, c);
        }
        Ok(out)
    }
}
