//! Root data of `sl(M|N)` in the distinguished simple-root system.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("sl({m}|{n}) needs M + N >= 2")]
    TooSmall { m: usize, n: usize },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
}

/// Z2 grade of a generator or operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_bit(b: u8) -> Self {
        if b & 1 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    /// Grade of a product.
    pub fn add(self, other: Parity) -> Parity {
        Parity::from_bit(self.bit() ^ other.bit())
    }
}

/// `(-1)^{|A||B|}`, the sign in `[A,B]_xi = AB - (-1)^{|A||B|} xi BA`.
pub fn graded_bracket_sign(a: Parity, b: Parity) -> i64 {
    if a == Parity::Odd && b == Parity::Odd {
        -1
    } else {
        1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootData {
    pub m: usize,
    pub n: usize,
    /// `nu[i-1]` is `nu_i` for `1 <= i <= M+N`.
    nu: Vec<i64>,
    /// `cartan[i-1][j-1]` is `a_ij` for `1 <= i,j <= M+N-1`.
    cartan: Vec<Vec<i64>>,
}

impl RootData {
    pub fn new(m: usize, n: usize) -> Result<Self, StructureError> {
        if m + n < 2 {
            return Err(StructureError::TooSmall { m, n });
        }
        let size = m + n;
        let nu: Vec<i64> = (1..=size).map(|i| if i <= m { 1 } else { -1 }).collect();
        let rank = size - 1;
        let mut cartan = vec![vec![0i64; rank]; rank];
        for i in 1..=rank {
            for j in 1..=rank {
                let d = |a: usize, b: usize| i64::from(a == b);
                cartan[i - 1][j - 1] =
                    (nu[i - 1] + nu[i]) * d(i, j) - nu[i - 1] * d(i, j + 1) - nu[i] * d(i + 1, j);
            }
        }
        Ok(RootData { m, n, nu, cartan })
    }

    /// `M + N`.
    pub fn size(&self) -> usize {
        self.m + self.n
    }

    /// Number of simple roots, `M + N - 1`.
    pub fn rank(&self) -> usize {
        self.m + self.n - 1
    }

    /// `g = M - N`.
    pub fn g(&self) -> i64 {
        self.m as i64 - self.n as i64
    }

    /// `nu_i`, 1-based.
    pub fn nu(&self, i: usize) -> i64 {
        self.nu[i - 1]
    }

    /// `a_ij`, 1-based.
    pub fn a(&self, i: usize, j: usize) -> i64 {
        self.cartan[i - 1][j - 1]
    }

    pub fn cartan(&self) -> &[Vec<i64>] {
        &self.cartan
    }

    /// Grade of the Chevalley generators `e_i`, `f_i` (odd only at `i = M`).
    pub fn generator_parity(&self, i: usize) -> Parity {
        if i == self.m {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn check_index(&self, i: usize) -> Result<(), StructureError> {
        if (1..=self.rank()).contains(&i) {
            Ok(())
        } else {
            Err(StructureError::IndexOutOfRange {
                index: i,
                max: self.rank(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sl21() {
        let r = RootData::new(2, 1).unwrap();
        assert_eq!(r.cartan(), &[vec![2, -1], vec![-1, 0]]);
        assert_eq!((r.nu(1), r.nu(2), r.nu(3)), (1, 1, -1));
        assert_eq!(r.g(), 1);
        assert_eq!(r.generator_parity(2), Parity::Odd);
        assert_eq!(r.generator_parity(1), Parity::Even);
    }

    #[test]
    fn sl2_and_sl22() {
        let r = RootData::new(2, 0).unwrap();
        assert_eq!(r.cartan(), &[vec![2]]);
        assert_eq!(r.g(), 2);
        let r = RootData::new(2, 2).unwrap();
        assert_eq!(
            r.cartan(),
            &[vec![2, -1, 0], vec![-1, 0, 1], vec![0, 1, -2]]
        );
        assert_eq!(r.g(), 0);
    }

    #[test]
    fn too_small() {
        assert!(RootData::new(1, 0).is_err());
        assert!(RootData::new(0, 1).is_err());
        assert!(RootData::new(0, 2).is_ok());
    }

    #[test]
    fn bracket_signs() {
        assert_eq!(graded_bracket_sign(Parity::Even, Parity::Even), 1);
        assert_eq!(graded_bracket_sign(Parity::Odd, Parity::Even), 1);
        assert_eq!(graded_bracket_sign(Parity::Odd, Parity::Odd), -1);
    }

    #[test]
    fn cartan_shape_for_all_small_algebras() {
        for m in 0..6 {
            for n in 0..6 {
                let Ok(r) = RootData::new(m, n) else { continue };
                let rank = r.rank();
                for i in 1..=rank {
                    let mut nonzero = 0;
                    for j in 1..=rank {
                        assert_eq!(r.a(i, j), r.a(j, i));
                        assert!(r.a(i, j).abs() <= 2);
                        nonzero += usize::from(r.a(i, j) != 0);
                    }
                    assert!(nonzero <= 3);
                }
            }
        }
    }
}
