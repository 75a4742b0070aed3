//! The q-difference realization of `U_q(sl(M|N))` on the flag coordinates.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::Error;
use crate::finite::ops::{Atom, AtomId, AtomKind, Lowering, QDiffOp};
use crate::grassmann::{FlagSpace, ThetaForm};
use crate::ring::{LinForm, Rat, RingElem, SymbolTable};
use crate::structure::{Parity, RootData};

/// Sign conventions of the two assemblies of `e_i`, `f_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    I,
    II,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::I => write!(f, "i"),
            Variant::II => write!(f, "ii"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "i" | "I" | "1" => Ok(Variant::I),
            "ii" | "II" | "2" => Ok(Variant::II),
            _ => Err(Error::Config(format!(
                "unknown variant `{s}` (expected i or ii)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SabotageMode {
    /// remove the atom
    Drop,
    /// remove every theta term from its shift and brackets
    StripTheta,
    /// multiply its coefficient by q
    ScaleQ,
}

/// Deliberate corruption of one atom, for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sabotage {
    pub atom: AtomId,
    pub mode: SabotageMode,
}

impl FromStr for Sabotage {
    type Err = Error;

    /// `"<atom-id>[:drop|strip-theta|scale-q]"`; the default mode is
    /// `strip-theta` for `f2` and `drop` otherwise.
    fn from_str(s: &str) -> Result<Self, Error> {
        let (id, mode) = match s.split_once(':') {
            Some((a, m)) => (a, Some(m)),
            None => (s, None),
        };
        let atom: AtomId = id.parse().map_err(Error::Config)?;
        let mode = match mode {
            None if atom.kind == AtomKind::F2 => SabotageMode::StripTheta,
            None => SabotageMode::Drop,
            Some("drop") => SabotageMode::Drop,
            Some("strip-theta") => SabotageMode::StripTheta,
            Some("scale-q") => SabotageMode::ScaleQ,
            Some(m) => return Err(Error::Config(format!("unknown sabotage mode `{m}`"))),
        };
        Ok(Sabotage { atom, mode })
    }
}

impl fmt::Display for Sabotage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = match self.mode {
            SabotageMode::Drop => "drop",
            SabotageMode::StripTheta => "strip-theta",
            SabotageMode::ScaleQ => "scale-q",
        };
        write!(f, "{}:{m}", self.atom)
    }
}

#[derive(Debug, Clone)]
pub struct FiniteRealization {
    pub root: RootData,
    pub space: Arc<FlagSpace>,
    pub table: Arc<SymbolTable>,
    pub variant: Variant,
    pub sabotage: Option<Sabotage>,
}

impl FiniteRealization {
    pub fn new(
        m: usize,
        n: usize,
        variant: Variant,
        sabotage: Option<Sabotage>,
    ) -> Result<Self, Error> {
        let root = RootData::new(m, n)?;
        let space = FlagSpace::new(root.clone());
        let table = SymbolTable::finite(root.rank())?;
        if let Some(s) = &sabotage {
            let r = root.rank();
            let size = root.size();
            let AtomId { kind, i, ip } = s.atom;
            let ok = (1..=r).contains(&i)
                && match kind {
                    AtomKind::H | AtomKind::EDiag | AtomKind::F2 => true,
                    AtomKind::EOff | AtomKind::F1 => ip >= 1 && ip < i,
                    AtomKind::F3 => ip >= i + 2 && ip <= size,
                };
            if !ok {
                return Err(Error::Config(format!(
                    "sabotage target {} does not exist for sl({m}|{n})",
                    s.atom
                )));
            }
        }
        Ok(FiniteRealization {
            root,
            space,
            table,
            variant,
            sabotage,
        })
    }

    /// The same realization assembled with the other sign convention.
    pub fn with_variant(&self, variant: Variant) -> Self {
        FiniteRealization {
            variant,
            ..self.clone()
        }
    }

    pub fn rank(&self) -> usize {
        self.root.rank()
    }

    /// Every atom that can be targeted by a sabotage, in a fixed order.
    pub fn atom_ids(&self) -> Vec<AtomId> {
        let id = |kind, i, ip| AtomId { kind, i, ip };
        let mut out = Vec::new();
        for i in 1..=self.rank() {
            out.push(id(AtomKind::H, i, i));
            out.push(id(AtomKind::EDiag, i, i));
            out.extend((1..i).map(|ip| id(AtomKind::EOff, i, ip)));
            out.extend((1..i).map(|jp| id(AtomKind::F1, i, jp)));
            out.push(id(AtomKind::F2, i, i));
            out.extend((i + 2..=self.size()).map(|jp| id(AtomKind::F3, i, jp)));
        }
        out
    }

    pub(crate) fn size(&self) -> usize {
        self.root.size()
    }

    pub(crate) fn nu(&self, i: usize) -> i64 {
        self.root.nu(i)
    }

    pub(crate) fn var(&self, i: usize, j: usize) -> usize {
        self.space.var(i, j).expect("flag coordinate in range")
    }

    pub(crate) fn lambda(&self, i: usize) -> LinForm {
        LinForm::var(i, Rat::from_integer(1))
    }

    pub(crate) fn int(&self, n: i64) -> RingElem {
        RingElem::from_int(&self.table, n)
    }

    /// Adds `sum_{l=from}^{to} (nu_{a} theta_{l,a} - nu_{b} theta_{l,b})` times `sign`,
    /// the recurring column difference with `a = i+1`, `b = i`.
    pub(crate) fn add_column_sum(
        &self,
        f: &mut ThetaForm,
        from: usize,
        to: usize,
        upper: usize,
        lower: usize,
        sign: i64,
    ) {
        for l in from..=to {
            if l >= lower {
                continue;
            }
            f.add_theta(self.var(l, upper), sign * self.nu(upper));
            f.add_theta(self.var(l, lower), -sign * self.nu(lower));
        }
    }

    /// Adds `sign * sum_{m=from}^{N+M} (nu_a theta_{a,m} - nu_b theta_{b,m})`
    /// with rows `a`, `b` (`a < b`).
    pub(crate) fn add_row_sum(
        &self,
        f: &mut ThetaForm,
        from: usize,
        a: usize,
        b: usize,
        sign: i64,
    ) {
        for m in from..=self.size() {
            if m > a {
                f.add_theta(self.var(a, m), sign * self.nu(a));
            }
            if m > b {
                f.add_theta(self.var(b, m), -sign * self.nu(b));
            }
        }
    }

    /// `h_i` as a linear form in `lambda_i` and the thetas (the operator
    /// acts diagonally with this eigenvalue).
    pub fn build_h(&self, i: usize) -> Result<ThetaForm, Error> {
        self.root.check_index(i)?;
        let id = AtomId {
            kind: AtomKind::H,
            i,
            ip: i,
        };
        let mut f = ThetaForm::constant(self.lambda(i));
        self.add_column_sum(&mut f, 1, i - 1, i + 1, i, -1);
        f.add_theta(self.var(i, i + 1), -(self.nu(i) + self.nu(i + 1)));
        self.add_row_sum(&mut f, i + 2, i, i + 1, -1);
        match self.sabotage {
            Some(s) if s.atom == id => Ok(match s.mode {
                SabotageMode::Drop => ThetaForm::default(),
                SabotageMode::StripTheta => ThetaForm::constant(self.lambda(i)),
                SabotageMode::ScaleQ => ThetaForm {
                    base: f.base.plus_const(Rat::from_integer(1)),
                    theta: f.theta,
                },
            }),
            _ => Ok(f),
        }
    }

    /// `t_i^{±1} = q^{±h_i}`.
    pub fn build_t(&self, i: usize, inverse: bool) -> Result<QDiffOp, Error> {
        let h = self.build_h(i)?;
        let mut a = Atom::new(RingElem::one(&self.table));
        a.shift = if inverse { h.neg() } else { h };
        let name = if inverse {
            format!("t{i}^-1")
        } else {
            format!("t{i}")
        };
        Ok(QDiffOp::new(name, vec![a], Parity::Even))
    }

    /// The diagonal operator `[h_i]`.
    pub fn build_qbracket_h(&self, i: usize) -> Result<QDiffOp, Error> {
        let mut a = Atom::new(RingElem::one(&self.table));
        a.brackets.push(self.build_h(i)?);
        Ok(QDiffOp::new(format!("[h{i}]"), vec![a], Parity::Even))
    }

    fn finish(&self, mut atom: Atom, id: AtomId) -> Option<Atom> {
        atom.id = Some(id);
        match self.sabotage {
            Some(s) if s.atom == id => match s.mode {
                SabotageMode::Drop => None,
                SabotageMode::StripTheta => {
                    atom.shift.theta.clear();
                    for b in &mut atom.brackets {
                        b.theta.clear();
                    }
                    Some(atom)
                }
                SabotageMode::ScaleQ => {
                    atom.coeff = &atom.coeff * &RingElem::q_pow(&self.table, 1);
                    Some(atom)
                }
            },
            _ => Some(atom),
        }
    }

    /// `e_{i,i} = (1/x_{i,i+1})[theta_{i,i+1}] q^{-sum_{l<i}(nu_{i+1} theta_{l,i+1} - nu_i theta_{l,i})}`.
    pub fn atom_e_diag(&self, i: usize) -> Option<Atom> {
        let mut a = Atom::new(self.int(1));
        a.lower = Some(Lowering::Bracket(self.var(i, i + 1)));
        self.add_column_sum(&mut a.shift, 1, i - 1, i + 1, i, -1);
        self.finish(
            a,
            AtomId {
                kind: AtomKind::EDiag,
                i,
                ip: i,
            },
        )
    }

    /// `e_{i,i'} = x_{i',i} (1/x_{i',i+1})[theta_{i',i+1}] q^{-sum_{l<i'}(...)}`.
    pub fn atom_e_off(&self, i: usize, ip: usize) -> Option<Atom> {
        let mut a = Atom::new(self.int(1));
        a.multiplier = vec![self.var(ip, i)];
        a.lower = Some(Lowering::Bracket(self.var(ip, i + 1)));
        self.add_column_sum(&mut a.shift, 1, ip - 1, i + 1, i, -1);
        self.finish(
            a,
            AtomId {
                kind: AtomKind::EOff,
                i,
                ip,
            },
        )
    }

    pub fn atom_f1(&self, j: usize, jp: usize) -> Option<Atom> {
        let mut a = Atom::new(self.int(1));
        a.multiplier = vec![self.var(jp, j + 1)];
        a.lower = Some(Lowering::Bracket(self.var(jp, j)));
        let mut s = ThetaForm::constant(self.lambda(j).neg());
        self.add_column_sum(&mut s, jp + 1, j - 1, j + 1, j, 1);
        s.add_theta(self.var(j, j + 1), self.nu(j) + self.nu(j + 1));
        self.add_row_sum(&mut s, j + 2, j, j + 1, 1);
        a.shift = s;
        self.finish(
            a,
            AtomId {
                kind: AtomKind::F1,
                i: j,
                ip: jp,
            },
        )
    }

    /// `x_{j,j+1}[lambda_j - c theta_{j,j+1} - sum_{m>=j+2}(...)]` with `c = nu_j`
    /// (or `(nu_j + nu_{j+1})/2` for the alternative form).
    fn f2_like(&self, j: usize, alternative: bool) -> Atom {
        let mut a = Atom::new(self.int(1));
        a.multiplier = vec![self.var(j, j + 1)];
        let mut b = ThetaForm::constant(self.lambda(j));
        let c = if alternative {
            (self.nu(j) + self.nu(j + 1)) / 2
        } else {
            self.nu(j)
        };
        b.add_theta(self.var(j, j + 1), -c);
        self.add_row_sum(&mut b, j + 2, j, j + 1, -1);
        a.brackets.push(b);
        a
    }

    pub fn atom_f2(&self, j: usize) -> Option<Atom> {
        let a = self.f2_like(j, false);
        self.finish(
            a,
            AtomId {
                kind: AtomKind::F2,
                i: j,
                ip: j,
            },
        )
    }

    /// The alternative `f'^2_{j,j}` with `(nu_j + nu_{j+1})/2` in front of `theta_{j,j+1}`.
    pub fn atom_f2_alt(&self, j: usize) -> Atom {
        self.f2_like(j, true)
    }

    pub fn atom_f3(&self, j: usize, jp: usize) -> Option<Atom> {
        let mut a = Atom::new(self.int(1));
        a.multiplier = vec![self.var(j, jp)];
        a.lower = Some(Lowering::Bracket(self.var(j + 1, jp)));
        let mut s = ThetaForm::constant(self.lambda(j));
        self.add_row_sum(&mut s, jp, j, j + 1, -1);
        a.shift = s;
        self.finish(
            a,
            AtomId {
                kind: AtomKind::F3,
                i: j,
                ip: jp,
            },
        )
    }

    pub(crate) fn gen_parity(&self, i: usize) -> Parity {
        self.root.generator_parity(i)
    }

    /// Wraps a single atom (possibly sabotaged away) as an operator.
    pub fn atom_op(&self, name: String, atom: Option<Atom>, parity: Parity) -> Arc<QDiffOp> {
        Arc::new(QDiffOp::new(name, atom.into_iter().collect(), parity))
    }

    pub fn op_e_diag(&self, i: usize) -> Arc<QDiffOp> {
        self.atom_op(
            format!("e[{i},{i}]"),
            self.atom_e_diag(i),
            self.gen_parity(i),
        )
    }

    pub fn op_e_off(&self, i: usize, ip: usize) -> Arc<QDiffOp> {
        self.atom_op(
            format!("e[{i},{ip}]"),
            self.atom_e_off(i, ip),
            self.gen_parity(i),
        )
    }

    pub fn op_f1(&self, j: usize, jp: usize) -> Arc<QDiffOp> {
        self.atom_op(
            format!("f1[{j},{jp}]"),
            self.atom_f1(j, jp),
            self.gen_parity(j),
        )
    }

    pub fn op_f2(&self, j: usize) -> Arc<QDiffOp> {
        self.atom_op(format!("f2[{j},{j}]"), self.atom_f2(j), self.gen_parity(j))
    }

    pub fn op_f3(&self, j: usize, jp: usize) -> Arc<QDiffOp> {
        self.atom_op(
            format!("f3[{j},{jp}]"),
            self.atom_f3(j, jp),
            self.gen_parity(j),
        )
    }

    fn scaled(mut a: Atom, c: i64) -> Atom {
        if c != 1 {
            a.coeff = a.coeff.scale(Rat::from_integer(c));
        }
        a
    }

    /// Assembled `e_i` of the chosen variant.
    pub fn build_e(&self, i: usize) -> Result<QDiffOp, Error> {
        self.root.check_index(i)?;
        let off = match self.variant {
            Variant::I => self.nu(i),
            Variant::II => 1,
        };
        let mut atoms: Vec<Atom> = self.atom_e_diag(i).into_iter().collect();
        for ip in 1..i {
            atoms.extend(self.atom_e_off(i, ip).map(|a| Self::scaled(a, off)));
        }
        Ok(QDiffOp::new(format!("e{i}"), atoms, self.gen_parity(i)))
    }

    /// Assembled `f_j` of the chosen variant.
    pub fn build_f(&self, j: usize) -> Result<QDiffOp, Error> {
        self.root.check_index(j)?;
        let (c1, c3) = match self.variant {
            Variant::I => (1, -1),
            Variant::II => (self.nu(j), -self.nu(j + 1)),
        };
        let mut atoms = Vec::new();
        for jp in 1..j {
            atoms.extend(self.atom_f1(j, jp).map(|a| Self::scaled(a, c1)));
        }
        atoms.extend(self.atom_f2(j));
        for jp in j + 2..=self.size() {
            atoms.extend(self.atom_f3(j, jp).map(|a| Self::scaled(a, c3)));
        }
        Ok(QDiffOp::new(format!("f{j}"), atoms, self.gen_parity(j)))
    }

    /// The diagonal sign operator `x_{i,j} -> nu_j x_{i,j}` (its own inverse).
    pub fn build_nu_rescaling(&self) -> QDiffOp {
        let mut a = Atom::new(self.int(1));
        a.sign_theta = self
            .space
            .vars()
            .iter()
            .enumerate()
            .filter(|(_, v)| self.nu(v.j) == -1)
            .map(|(k, _)| k)
            .collect();
        QDiffOp::new("S", vec![a], Parity::Even)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::SuperPoly;

    fn real(m: usize, n: usize, v: Variant) -> FiniteRealization {
        FiniteRealization::new(m, n, v, None).unwrap()
    }

    fn on(r: &FiniteRealization, op: &QDiffOp, mono: &str) -> SuperPoly {
        let m = r.space.parse_monomial(mono).unwrap();
        op.apply_monomial(&r.space, &r.table, &m).unwrap()
    }

    fn h_eigen(r: &FiniteRealization, i: usize, mono: &str) -> LinForm {
        let m = r.space.parse_monomial(mono).unwrap();
        r.build_h(i).unwrap().eval(&m)
    }

    #[test]
    fn h_eigenvalues_sl21() {
        let r = real(2, 1, Variant::I);
        assert_eq!(h_eigen(&r, 1, "1"), LinForm::var(1, Rat::from_integer(1)));
        assert_eq!(
            h_eigen(&r, 1, "x12"),
            LinForm::var(1, Rat::from_integer(1)).plus_const(Rat::from_integer(-2))
        );
        assert_eq!(
            h_eigen(&r, 2, "x13"),
            LinForm::var(2, Rat::from_integer(1)).plus_const(Rat::from_integer(1))
        );
        let t1 = r.build_t(1, false).unwrap();
        let l1 = RingElem::symbol(&r.table, "L1").unwrap();
        assert_eq!(
            on(&r, &t1, "1"),
            SuperPoly::from_monomial(&r.space, &r.table, r.space.one()).scale(&l1)
        );
    }

    #[test]
    fn generator_examples_sl21() {
        let r = real(2, 1, Variant::I);
        let e1 = r.build_e(1).unwrap();
        let f1 = r.build_f(1).unwrap();
        let e2 = r.build_e(2).unwrap();
        assert_eq!(on(&r, &e1, "x12").to_string(), "1");
        assert_eq!(on(&r, &f1, "1").to_string(), "[L1]*x12");
        assert!(on(&r, &e2, "1").is_zero());
        assert_eq!(e2.parity, Parity::Odd);
        assert_eq!(f1.parity, Parity::Even);
    }

    #[test]
    fn parities_are_consistent() {
        for (m, n) in [(2, 1), (1, 2), (2, 2), (3, 1), (1, 3), (3, 0)] {
            for v in [Variant::I, Variant::II] {
                let r = real(m, n, v);
                for i in 1..=r.rank() {
                    let e = r.build_e(i).unwrap();
                    let f = r.build_f(i).unwrap();
                    assert!(e.parity_consistent(&r.space), "e{i} sl({m}|{n})");
                    assert!(f.parity_consistent(&r.space), "f{i} sl({m}|{n})");
                }
            }
        }
    }

    #[test]
    fn index_out_of_range() {
        let r = real(2, 1, Variant::I);
        assert!(r.build_e(3).is_err());
        assert!(r.build_f(0).is_err());
        assert!(r.build_h(3).is_err());
    }

    #[test]
    fn sabotage_parsing() {
        let s: Sabotage = "f2.j=1".parse().unwrap();
        assert_eq!(s.mode, SabotageMode::StripTheta);
        let s: Sabotage = "e.i=2.ip=1:scale-q".parse().unwrap();
        assert_eq!(s.atom.kind, AtomKind::EOff);
        assert_eq!(s.to_string(), "e.i=2.ip=1:scale-q");
        assert!("g.i=1".parse::<Sabotage>().is_err());
        assert!(
            FiniteRealization::new(2, 1, Variant::I, Some("f3.j=2.jp=4".parse().unwrap())).is_err()
        );
    }
}
