//! The oscillators `a^i_n, b^{ij}_n, c^{ij}_n` and their coordinates.

use std::fmt;
use std::sync::Arc;

use crate::ring::{LinForm, Rat, RingElem, SymbolTable};
use crate::structure::RootData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    A,
    B,
    C,
}

/// A mode `X_n` or a coordinate `Q_X`. For `a^i` the second index is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OscillatorId {
    Mode {
        family: Family,
        i: usize,
        j: usize,
        n: i64,
    },
    Coord {
        family: Family,
        i: usize,
        j: usize,
    },
}

impl fmt::Display for OscillatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |fam: Family, i: usize, j: usize| match fam {
            Family::A => format!("a{i}"),
            Family::B => format!("b{i}{j}"),
            Family::C => format!("c{i}{j}"),
        };
        match *self {
            OscillatorId::Mode { family, i, j, n } => write!(f, "{}[{n}]", name(family, i, j)),
            OscillatorId::Coord { family, i, j } => write!(f, "Q_{}", name(family, i, j)),
        }
    }
}

/// Value of a commutator, which is central.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Central {
    Zero,
    Ring(RingElem),
    /// a value linear in the level `k`, such as `(k+g) a_ij`; `k` has no
    /// ring symbol of its own (only `q^{k/2}` does)
    Linear(LinForm),
}

fn level_slot(table: &SymbolTable) -> usize {
    table.slot_of_log("k").expect("table has a level symbol")
}

/// `[x, y]` for the oscillator algebra of `sl(M|N)`.
pub fn osc_commutator(
    root: &RootData,
    table: &Arc<SymbolTable>,
    x: OscillatorId,
    y: OscillatorId,
) -> Central {
    use OscillatorId::*;
    let (negate, x, y) = match (x, y) {
        (Coord { .. }, Mode { .. }) => (true, y, x),
        _ => (false, x, y),
    };
    let out = match (x, y) {
        (
            Mode {
                family: fx,
                i: ix,
                j: jx,
                n,
            },
            Mode {
                family: fy,
                i: iy,
                j: jy,
                n: m,
            },
        ) => {
            if fx != fy || n + m != 0 || n == 0 {
                Central::Zero
            } else {
                let inv_n = Rat::new(1, n);
                match fx {
                    Family::A => {
                        let a = root.a(ix, iy);
                        if a == 0 {
                            Central::Zero
                        } else {
                            let k = level_slot(table);
                            let kg = LinForm::var(k, Rat::from_integer(n))
                                .plus_const(Rat::from_integer(root.g() * n));
                            let v = &RingElem::qbracket(table, &kg).expect("level bracket")
                                * &RingElem::qint(table, a * n);
                            Central::Ring(v.scale(inv_n))
                        }
                    }
                    Family::B | Family::C if (ix, jx) != (iy, jy) => Central::Zero,
                    Family::B => {
                        let nn = root.nu(ix) * root.nu(jx);
                        let b = RingElem::qint(table, n);
                        Central::Ring((&b * &b).scale(inv_n * Rat::from_integer(-nn)))
                    }
                    Family::C => {
                        let b = RingElem::qint(table, n);
                        Central::Ring((&b * &b).scale(inv_n))
                    }
                }
            }
        }
        (
            Mode {
                family: fx,
                i: ix,
                j: jx,
                n,
            },
            Coord {
                family: fy,
                i: iy,
                j: jy,
            },
        ) => {
            if fx != fy || n != 0 {
                Central::Zero
            } else {
                match fx {
                    Family::A => {
                        let a = root.a(ix, iy);
                        if a == 0 {
                            Central::Zero
                        } else {
                            let k = level_slot(table);
                            Central::Linear(
                                LinForm::var(k, Rat::from_integer(a))
                                    .plus_const(Rat::from_integer(root.g() * a)),
                            )
                        }
                    }
                    _ if (ix, jx) != (iy, jy) => Central::Zero,
                    Family::B => {
                        Central::Ring(RingElem::from_int(table, -root.nu(ix) * root.nu(jx)))
                    }
                    Family::C => Central::Ring(RingElem::one(table)),
                }
            }
        }
        // coordinates commute (the sign rule for odd exponentials is handled
        // separately by the cocycle)
        _ => Central::Zero,
    };
    match (negate, out) {
        (true, Central::Ring(r)) => Central::Ring(-r),
        (true, Central::Linear(l)) => Central::Linear(l.neg()),
        (_, o) => o,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(family: Family, i: usize, j: usize, n: i64) -> OscillatorId {
        OscillatorId::Mode { family, i, j, n }
    }

    #[test]
    fn examples_sl21() {
        let root = RootData::new(2, 1).unwrap();
        let t = SymbolTable::affine();
        let k = t.slot_of_log("k").unwrap();
        let Central::Ring(v) = osc_commutator(
            &root,
            &t,
            mode(Family::A, 1, 0, 1),
            mode(Family::A, 1, 0, -1),
        ) else {
            panic!()
        };
        let k1 = LinForm::var(k, Rat::from_integer(1)).plus_const(Rat::from_integer(1));
        assert_eq!(
            v,
            &RingElem::qbracket(&t, &k1).unwrap() * &RingElem::qint(&t, 2)
        );
        assert_eq!(
            osc_commutator(
                &root,
                &t,
                mode(Family::B, 1, 3, 1),
                mode(Family::B, 1, 3, -1)
            ),
            Central::Ring(RingElem::one(&t))
        );
        assert_eq!(
            osc_commutator(
                &root,
                &t,
                mode(Family::B, 1, 2, 1),
                mode(Family::B, 1, 2, -1)
            ),
            Central::Ring(RingElem::from_int(&t, -1))
        );
        assert_eq!(
            osc_commutator(
                &root,
                &t,
                mode(Family::C, 1, 2, 1),
                mode(Family::B, 1, 2, -1)
            ),
            Central::Zero
        );
        assert_eq!(
            osc_commutator(
                &root,
                &t,
                mode(Family::A, 2, 0, 1),
                mode(Family::A, 2, 0, -1)
            ),
            Central::Zero
        );
    }

    #[test]
    fn zero_modes_and_antisymmetry() {
        let root = RootData::new(2, 1).unwrap();
        let t = SymbolTable::affine();
        let k = t.slot_of_log("k").unwrap();
        let q = OscillatorId::Coord {
            family: Family::A,
            i: 1,
            j: 0,
        };
        let expect = LinForm::var(k, Rat::from_integer(2)).plus_const(Rat::from_integer(2));
        assert_eq!(
            osc_commutator(&root, &t, mode(Family::A, 1, 0, 0), q),
            Central::Linear(expect.clone())
        );
        assert_eq!(
            osc_commutator(&root, &t, q, mode(Family::A, 1, 0, 0)),
            Central::Linear(expect.neg())
        );
        let qb = OscillatorId::Coord {
            family: Family::B,
            i: 2,
            j: 3,
        };
        assert_eq!(
            osc_commutator(&root, &t, mode(Family::B, 2, 3, 0), qb),
            Central::Ring(RingElem::one(&t))
        );
        assert_eq!(
            osc_commutator(&root, &t, mode(Family::B, 2, 3, 1), qb),
            Central::Zero
        );
    }
}
