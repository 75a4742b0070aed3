//! Relation instances for the finite realization and the basis-wise checker.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Error;
use crate::finite::ops::{Atom, Lowering, OpExpr, QDiffOp};
use crate::finite::realization::{FiniteRealization, Variant};
use crate::grassmann::{FlagSpace, SuperMonomial, SuperPoly, ThetaForm};
use crate::report::{id_hash, RelationReport, Status, Witness};
use crate::ring::{Assignment, NumericEval, RingElem, SymbolTable};
use crate::structure::Parity;

/// Number of seeded rational substitutions run after every symbolic pass.
pub const NUMERIC_SAMPLES: usize = 3;

/// An operator identity `lhs = rhs` to be tested on a monomial basis.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub lhs: OpExpr,
    pub rhs: OpExpr,
}

/// Applies both sides of each instance to every monomial of the basis.
pub struct Checker {
    pub space: Arc<FlagSpace>,
    pub table: Arc<SymbolTable>,
    pub basis: Vec<SuperMonomial>,
    pub seed: u64,
}

type NumericImage = BTreeMap<SuperMonomial, BigRational>;

fn numeric_image(words: &[(RingElem, SuperPoly)], a: &NumericEval) -> Result<NumericImage, Error> {
    let mut out: NumericImage = BTreeMap::new();
    for (c, p) in words {
        if p.is_zero() {
            continue;
        }
        let cv = a.eval(c)?;
        for (m, k) in p.terms() {
            *out.entry(m.clone()).or_insert_with(BigRational::zero) += &cv * a.eval(k)?;
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

fn sum_words(
    space: &Arc<FlagSpace>,
    table: &Arc<SymbolTable>,
    words: &[(RingElem, SuperPoly)],
) -> SuperPoly {
    let mut out = SuperPoly::zero(space, table);
    for (c, p) in words {
        out.add_assign_scaled(p, c);
    }
    out
}

impl Checker {
    pub fn new(
        space: &Arc<FlagSpace>,
        table: &Arc<SymbolTable>,
        max_degree: usize,
        seed: u64,
    ) -> Self {
        Checker {
            space: space.clone(),
            table: table.clone(),
            basis: space.monomials_up_to(max_degree),
            seed,
        }
    }

    pub fn check(&self, inst: &Instance) -> Result<RelationReport, Error> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ id_hash(&inst.id));
        let samples: Vec<NumericEval> = (0..NUMERIC_SAMPLES)
            .map(|_| NumericEval::new(&Assignment::random(&self.table, &mut rng)))
            .collect();
        let mut numeric_ok = true;
        for m in &self.basis {
            let lw = inst.lhs.apply_words(&self.space, &self.table, m)?;
            let rw = inst.rhs.apply_words(&self.space, &self.table, m)?;
            let l = sum_words(&self.space, &self.table, &lw);
            let r = sum_words(&self.space, &self.table, &rw);
            let diff = l.sub(&r);
            if let Some((comp, _)) = diff.terms().iter().next() {
                let witness = Witness {
                    basis: self.space.format_monomial(m),
                    component: self.space.format_monomial(comp),
                };
                return Ok(RelationReport::fail(
                    &inst.id,
                    self.basis.len(),
                    witness,
                    l.coeff(comp).to_string(),
                    r.coeff(comp).to_string(),
                ));
            }
            // evaluate each word separately so that the symbolic sum is not trusted
            for a in &samples {
                if numeric_image(&lw, a)? != numeric_image(&rw, a)? {
                    numeric_ok = false;
                }
            }
        }
        if numeric_ok {
            Ok(RelationReport::pass(
                &inst.id,
                self.basis.len(),
                Status::Pass,
            ))
        } else {
            let mut rep = RelationReport::pass(&inst.id, self.basis.len(), Status::Fail);
            rep.status = Status::Fail;
            rep.note = Some("symbolic sides agree but a rational substitution disagrees".into());
            Ok(rep)
        }
    }

    /// Checks all instances in parallel; the output keeps the input order.
    pub fn check_all(&self, instances: &[Instance]) -> Result<Vec<RelationReport>, Error> {
        instances.par_iter().map(|i| self.check(i)).collect()
    }
}

fn word(r: &FiniteRealization, ops: &[Arc<QDiffOp>]) -> OpExpr {
    OpExpr::word(&r.table, ops)
}

fn zero() -> OpExpr {
    OpExpr::zero(Parity::Even)
}

fn one(r: &FiniteRealization) -> RingElem {
    RingElem::one(&r.table)
}

fn bracket(a: &OpExpr, b: &OpExpr, xi: &RingElem) -> OpExpr {
    OpExpr::graded_commutator(a, b, xi)
}

/// Generators `e^+_i = e_i` and `e^-_i = f_i`.
fn generator(r: &FiniteRealization, sign: i64, i: usize) -> Result<Arc<QDiffOp>, Error> {
    Ok(Arc::new(if sign > 0 {
        r.build_e(i)?
    } else {
        r.build_f(i)?
    }))
}

fn sign_label(sign: i64) -> &'static str {
    if sign > 0 {
        "+"
    } else {
        "-"
    }
}

/// Instances of the defining relations of `U_q(sl(M|N))` for the realization.
pub fn chevalley_instances(r: &FiniteRealization) -> Result<Vec<Instance>, Error> {
    let rank = r.rank();
    let v = r.variant;
    let m = r.root.m;
    let q = |n: i64| RingElem::q_pow(&r.table, n);
    let mut out = Vec::new();
    let t: Vec<Arc<QDiffOp>> = (1..=rank)
        .map(|i| r.build_t(i, false).map(Arc::new))
        .collect::<Result<_, _>>()?;
    let tinv: Vec<Arc<QDiffOp>> = (1..=rank)
        .map(|i| r.build_t(i, true).map(Arc::new))
        .collect::<Result<_, _>>()?;
    let e: Vec<Arc<QDiffOp>> = (1..=rank)
        .map(|i| generator(r, 1, i))
        .collect::<Result<_, _>>()?;
    let f: Vec<Arc<QDiffOp>> = (1..=rank)
        .map(|i| generator(r, -1, i))
        .collect::<Result<_, _>>()?;
    let gens = |sign: i64| if sign > 0 { &e } else { &f };

    for i in 1..=rank {
        for j in i + 1..=rank {
            out.push(Instance {
                id: format!("chevalley.eq1.i={i}.j={j}.variant={v}"),
                lhs: word(r, &[t[i - 1].clone(), t[j - 1].clone()]),
                rhs: word(r, &[t[j - 1].clone(), t[i - 1].clone()]),
            });
        }
    }
    for sign in [1i64, -1] {
        for i in 1..=rank {
            for j in 1..=rank {
                let g = gens(sign)[j - 1].clone();
                out.push(Instance {
                    id: format!(
                        "chevalley.eq2.i={i}.j={j}.sign={}.variant={v}",
                        sign_label(sign)
                    ),
                    lhs: word(r, &[t[i - 1].clone(), g.clone(), tinv[i - 1].clone()]),
                    rhs: word(r, &[g]).scaled(&q(sign * r.root.a(i, j))),
                });
            }
        }
    }
    for i in 1..=rank {
        for j in 1..=rank {
            let lhs = bracket(
                &word(r, &[e[i - 1].clone()]),
                &word(r, &[f[j - 1].clone()]),
                &one(r),
            );
            let rhs = if i == j {
                word(r, &[Arc::new(r.build_qbracket_h(i)?)])
            } else {
                zero()
            };
            out.push(Instance {
                id: format!("chevalley.eq3.i={i}.j={j}.variant={v}"),
                lhs,
                rhs,
            });
        }
    }
    for sign in [1i64, -1] {
        let g = gens(sign);
        for i in 1..=rank {
            for j in 1..=rank {
                if r.root.a(i, j).abs() != 1 || i == m {
                    continue;
                }
                let gi = word(r, &[g[i - 1].clone()]);
                let gj = word(r, &[g[j - 1].clone()]);
                let inner = bracket(&gi, &gj, &q(-1));
                out.push(Instance {
                    id: format!(
                        "chevalley.eq4.i={i}.j={j}.sign={}.variant={v}",
                        sign_label(sign)
                    ),
                    lhs: bracket(&gi, &inner, &q(1)),
                    rhs: zero(),
                });
            }
        }
        if m >= 2 && m < rank {
            let gm = word(r, &[g[m - 1].clone()]);
            let gp = word(r, &[g[m].clone()]);
            let gl = word(r, &[g[m - 2].clone()]);
            let inner = bracket(&gm, &gl, &q(-1));
            let mid = bracket(&gp, &inner, &q(1));
            out.push(Instance {
                id: format!("chevalley.eq5.sign={}.variant={v}", sign_label(sign)),
                lhs: bracket(&gm, &mid, &one(r)),
                rhs: zero(),
            });
        }
    }
    Ok(out)
}

fn diag_atom(r: &FiniteRealization, coeff: i64) -> Atom {
    Atom::new(r.int(coeff))
}

fn op(name: String, atoms: Vec<Atom>, parity: Parity) -> Arc<QDiffOp> {
    Arc::new(QDiffOp::new(name, atoms, parity))
}

/// The displayed intermediate commutators of the proof, atom by atom, and
/// the combined identity for the four uniform sign choices.
pub fn intermediate_instances(r: &FiniteRealization) -> Result<Vec<Instance>, Error> {
    let rank = r.rank();
    let size = r.size();
    let mut out = Vec::new();
    let w = |o: Arc<QDiffOp>| word(r, &[o]);
    let br = |a: Arc<QDiffOp>, b: Arc<QDiffOp>| bracket(&w(a), &w(b), &one(r));

    // vanishing commutators
    for i in 1..=rank {
        for j in 1..=rank {
            for jp in 1..j {
                out.push(Instance {
                    id: format!("intermediate.eq28.ediag-f1.i={i}.j={j}.jp={jp}"),
                    lhs: br(r.op_e_diag(i), r.op_f1(j, jp)),
                    rhs: zero(),
                });
            }
            for jp in j + 2..=size {
                out.push(Instance {
                    id: format!("intermediate.eq28.ediag-f3.i={i}.j={j}.jp={jp}"),
                    lhs: br(r.op_e_diag(i), r.op_f3(j, jp)),
                    rhs: zero(),
                });
            }
            for ip in 1..i {
                out.push(Instance {
                    id: format!("intermediate.eq28.eoff-f2.i={i}.ip={ip}.j={j}"),
                    lhs: br(r.op_e_off(i, ip), r.op_f2(j)),
                    rhs: zero(),
                });
            }
        }
    }

    // [e_{i,i}, f^2_{j,j}]
    for i in 1..=rank {
        for j in 1..=rank {
            let mut atoms = Vec::new();
            if i == j {
                let mut a = diag_atom(r, 1);
                let mut b = ThetaForm::constant(r.lambda(i));
                b.add_theta(r.var(i, i + 1), -(r.nu(i) + r.nu(i + 1)));
                r.add_row_sum(&mut b, i + 2, i, i + 1, -1);
                a.brackets.push(b);
                r.add_column_sum(&mut a.shift, 1, i - 1, i + 1, i, -1);
                atoms.push(a);
            }
            if i == j + 1 {
                let mut a = diag_atom(r, r.nu(i));
                a.multiplier = vec![r.var(i - 1, i)];
                a.lower = Some(Lowering::Bracket(r.var(i, i + 1)));
                let mut s = ThetaForm::constant(r.lambda(i - 1));
                r.add_column_sum(&mut s, 1, i - 1, i + 1, i, -1);
                s.add_theta(r.var(i - 1, i), -r.nu(i - 1));
                r.add_row_sum(&mut s, i + 1, i - 1, i, -1);
                a.shift = s;
                atoms.push(a);
            }
            let parity = r.gen_parity(i).add(r.gen_parity(j));
            out.push(Instance {
                id: format!("intermediate.eq29.i={i}.j={j}"),
                lhs: br(r.op_e_diag(i), r.op_f2(j)),
                rhs: w(op(format!("rhs29[{i},{j}]"), atoms, parity)),
            });
        }
    }

    // [e_{i,i'}, f^1_{j,j'}]
    for i in 1..=rank {
        for ip in 1..i {
            for j in 1..=rank {
                for jp in 1..j {
                    let mut atoms = Vec::new();
                    if i == j && ip == jp {
                        let mut a = diag_atom(r, r.nu(i));
                        let mut b = ThetaForm::default();
                        b.add_theta(r.var(ip, i), r.nu(i));
                        b.add_theta(r.var(ip, i + 1), -r.nu(i + 1));
                        a.brackets.push(b);
                        let mut s = ThetaForm::constant(r.lambda(i).neg());
                        r.add_column_sum(&mut s, 1, ip - 1, i + 1, i, -1);
                        r.add_column_sum(&mut s, ip + 1, i - 1, i + 1, i, 1);
                        s.add_theta(r.var(i, i + 1), r.nu(i) + r.nu(i + 1));
                        r.add_row_sum(&mut s, i + 2, i, i + 1, 1);
                        a.shift = s;
                        atoms.push(a);
                    }
                    out.push(Instance {
                        id: format!("intermediate.eq30.i={i}.ip={ip}.j={j}.jp={jp}"),
                        lhs: br(r.op_e_off(i, ip), r.op_f1(j, jp)),
                        rhs: w(op(format!("rhs30[{i},{ip},{j},{jp}]"), atoms, Parity::Even)),
                    });
                }
            }
        }
    }

    // [e_{i,i'}, f^3_{j,j'}]
    for i in 1..=rank {
        for ip in 1..i {
            for j in 1..=rank {
                for jp in j + 2..=size {
                    let mut atoms = Vec::new();
                    let first = ip == j && jp == i + 1;
                    let second = ip == j + 1 && jp == i;
                    if first || second {
                        let mut a = diag_atom(r, if first { 1 } else { -1 });
                        a.multiplier = vec![r.var(j, i)];
                        a.lower = Some(Lowering::Bracket(r.var(j + 1, i + 1)));
                        let mut s = ThetaForm::constant(r.lambda(j));
                        r.add_column_sum(&mut s, 1, j - 1, i + 1, i, -1);
                        s.add_theta(r.var(j, i + 1), -r.nu(i + 1));
                        r.add_row_sum(&mut s, i + 1, j, j + 1, -1);
                        if second {
                            s.add_theta(r.var(j, i), r.nu(i) - r.nu(j));
                        }
                        a.shift = s;
                        atoms.push(a);
                    }
                    let parity = r.gen_parity(i).add(r.gen_parity(j));
                    out.push(Instance {
                        id: format!("intermediate.eq31.i={i}.ip={ip}.j={j}.jp={jp}"),
                        lhs: br(r.op_e_off(i, ip), r.op_f3(j, jp)),
                        rhs: w(op(format!("rhs31[{i},{ip},{j},{jp}]"), atoms, parity)),
                    });
                }
            }
        }
    }

    // the assembled diagonal identity, for each uniform choice of signs
    for i in 1..=rank {
        for j in 1..=rank {
            for (el, eps) in [("i", r.nu(i)), ("j", r.nu(j))] {
                for (epl, epsp) in [("i", r.nu(i)), ("j+1", r.nu(j + 1))] {
                    let mut lhs = br(r.op_e_diag(i), r.op_f2(j));
                    for ip in 1..i {
                        for jp in 1..j {
                            lhs = lhs
                                .plus(&br(r.op_e_off(i, ip), r.op_f1(j, jp)).scaled(&r.int(eps)));
                        }
                        for jp in j + 2..=size {
                            lhs = lhs
                                .minus(&br(r.op_e_off(i, ip), r.op_f3(j, jp)).scaled(&r.int(epsp)));
                        }
                    }
                    let rhs = if i == j {
                        w(Arc::new(r.build_qbracket_h(i)?))
                    } else {
                        zero()
                    };
                    out.push(Instance {
                        id: format!("intermediate.eq33.i={i}.j={j}.eps=nu_{el}.epsp=nu_{epl}"),
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// The sign change of coordinates maps variant (i) to variant (ii), and the
/// alternative `f'^2` coincides with `f^2`.
pub fn remark_instances(r: &FiniteRealization) -> Result<Vec<Instance>, Error> {
    let one_ = r.with_variant(Variant::I);
    let two = r.with_variant(Variant::II);
    let s = Arc::new(r.build_nu_rescaling());
    let mut out = Vec::new();
    for i in 1..=r.rank() {
        let c = r.int(r.nu(i + 1));
        for (name, a, b) in [
            ("e", one_.build_e(i)?, two.build_e(i)?),
            ("f", one_.build_f(i)?, two.build_f(i)?),
        ] {
            out.push(Instance {
                id: format!("remark1.{name}.i={i}"),
                lhs: word(r, &[s.clone(), Arc::new(a), s.clone()]).scaled(&c),
                rhs: word(r, &[Arc::new(b)]),
            });
        }
    }
    for j in 1..=r.rank() {
        let alt = op(
            format!("f2'[{j},{j}]"),
            vec![r.atom_f2_alt(j)],
            r.gen_parity(j),
        );
        out.push(Instance {
            id: format!("remark2.j={j}"),
            lhs: word(r, &[alt]),
            rhs: word(r, &[r.op_f2(j)]),
        });
    }
    Ok(out)
}

pub fn check_chevalley(
    r: &FiniteRealization,
    max_degree: usize,
    seed: u64,
) -> Result<Vec<RelationReport>, Error> {
    Checker::new(&r.space, &r.table, max_degree, seed).check_all(&chevalley_instances(r)?)
}

pub fn check_intermediate(
    r: &FiniteRealization,
    max_degree: usize,
    seed: u64,
) -> Result<Vec<RelationReport>, Error> {
    Checker::new(&r.space, &r.table, max_degree, seed).check_all(&intermediate_instances(r)?)
}

pub fn check_remarks(
    r: &FiniteRealization,
    max_degree: usize,
    seed: u64,
) -> Result<Vec<RelationReport>, Error> {
    Checker::new(&r.space, &r.table, max_degree, seed).check_all(&remark_instances(r)?)
}

/// The telescoping bracket identity for `n = 1..=max_n`, checked exactly and
/// at seeded rational points.
pub fn check_bracket_identities(max_n: usize, seed: u64) -> Result<Vec<RelationReport>, Error> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let id = format!("ring.eq32.n={n}");
        let (lhs, rhs) = crate::ring::bracket_identity_sides(n)?;
        if lhs != rhs {
            let w = Witness {
                basis: "1".into(),
                component: "1".into(),
            };
            out.push(RelationReport::fail(
                id,
                1,
                w,
                lhs.to_string(),
                rhs.to_string(),
            ));
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ id_hash(&id));
        let mut ok = true;
        for _ in 0..NUMERIC_SAMPLES {
            let a = Assignment::random(lhs.table(), &mut rng);
            ok &= lhs.subst_numeric(&a)? == rhs.subst_numeric(&a)?;
        }
        out.push(RelationReport::pass(
            id,
            1,
            if ok { Status::Pass } else { Status::Fail },
        ));
        if !ok {
            out.last_mut().unwrap().status = Status::Fail;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn failures(reps: &[RelationReport]) -> Vec<String> {
        reps.iter()
            .filter(|r| !r.passed())
            .map(|r| format!("{} {:?} {:?} {:?}", r.id, r.witness, r.lhs, r.rhs))
            .collect()
    }

    #[test]
    fn sl21_chevalley_degree3() {
        for v in [Variant::I, Variant::II] {
            let r = FiniteRealization::new(2, 1, v, None).unwrap();
            let reps = check_chevalley(&r, 3, 1).unwrap();
            assert!(failures(&reps).is_empty(), "{:#?}", failures(&reps));
        }
    }

    #[test]
    fn sl2_chevalley() {
        let r = FiniteRealization::new(2, 0, Variant::I, None).unwrap();
        let reps = check_chevalley(&r, 4, 1).unwrap();
        assert!(failures(&reps).is_empty(), "{:#?}", failures(&reps));
    }

    #[test]
    fn sl21_intermediate_and_remarks() {
        let r = FiniteRealization::new(2, 1, Variant::I, None).unwrap();
        let reps = check_intermediate(&r, 3, 1).unwrap();
        assert!(failures(&reps).is_empty(), "{:#?}", failures(&reps));
        let reps = check_remarks(&r, 3, 1).unwrap();
        assert!(failures(&reps).is_empty(), "{:#?}", failures(&reps));
    }

    #[test]
    fn bracket_identities() {
        let reps = check_bracket_identities(4, 7).unwrap();
        assert!(reps.iter().all(|r| r.passed() && r.numeric == Status::Pass));
    }

    #[test]
    fn stripped_f2_fails_with_witness() {
        let s = "f2.j=1".parse().unwrap();
        let r = FiniteRealization::new(2, 1, Variant::I, Some(s)).unwrap();
        let reps = check_chevalley(&r, 3, 1).unwrap();
        let bad: Vec<_> = reps.iter().filter(|r| r.status == Status::Fail).collect();
        assert!(!bad.is_empty());
        assert!(bad.iter().all(|r| r.witness.is_some()));
    }
}
