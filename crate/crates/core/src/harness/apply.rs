//! `apply`: evaluate a linear combination of generator words on a monomial.

use std::sync::Arc;

use crate::error::Error;
use crate::finite::{FiniteRealization, OpExpr, QDiffOp};
use crate::ring::{Rat, RingElem};

/// One generator of the finite realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenWord {
    E(usize),
    F(usize),
    T(usize),
    TInv(usize),
}

fn parse_generator(tok: &str) -> Result<GenWord, Error> {
    let bad = || {
        Error::Parse(format!(
            "unknown generator `{tok}` (expected e<i>, f<i>, t<i> or t<i>^-1)"
        ))
    };
    let (head, rest) = tok.split_at(1.min(tok.len()));
    let (idx, inv) = match rest.strip_suffix("^-1") {
        Some(i) => (i, true),
        None => (rest, false),
    };
    let i: usize = idx.parse().map_err(|_| bad())?;
    match (head, inv) {
        ("e", false) => Ok(GenWord::E(i)),
        ("f", false) => Ok(GenWord::F(i)),
        ("t", false) => Ok(GenWord::T(i)),
        ("t", true) => Ok(GenWord::TInv(i)),
        _ => Err(bad()),
    }
}

/// Parses `"e1 f1 - f1 e1"`, `"2 f1 f2 + t1^-1"` and the like into signed
/// integer multiples of words. Within a word the rightmost generator acts first.
pub fn parse_word_expr(expr: &str) -> Result<Vec<(i64, Vec<GenWord>)>, Error> {
    let spaced = expr
        .replace('+', " + ")
        .replace(" - ", " -- ")
        .replace('*', " ");
    let mut out: Vec<(i64, Vec<GenWord>)> = Vec::new();
    let mut sign = 1i64;
    let mut coeff: Option<i64> = None;
    let mut word: Vec<GenWord> = Vec::new();
    let mut started = false;
    let flush = |out: &mut Vec<(i64, Vec<GenWord>)>,
                 sign: i64,
                 coeff: Option<i64>,
                 word: &mut Vec<GenWord>|
     -> Result<(), Error> {
        if word.is_empty() && coeff.is_none() {
            return Err(Error::Parse(format!("empty term in `{expr}`")));
        }
        out.push((sign * coeff.unwrap_or(1), std::mem::take(word)));
        Ok(())
    };
    for tok in spaced.split_whitespace() {
        match tok {
            "+" | "--" => {
                if started {
                    flush(&mut out, sign, coeff, &mut word)?;
                }
                sign = if tok == "+" { 1 } else { -1 };
                coeff = None;
                started = false;
            }
            _ => {
                let (neg, body) = match tok.strip_prefix('-') {
                    Some(b) if !started => (true, b),
                    _ => (false, tok),
                };
                if neg {
                    sign = -sign;
                }
                if let Ok(c) = body.parse::<i64>() {
                    if started {
                        return Err(Error::Parse(format!(
                            "coefficient `{body}` must lead its term in `{expr}`"
                        )));
                    }
                    coeff = Some(c);
                } else {
                    word.push(parse_generator(body)?);
                }
                started = true;
            }
        }
    }
    if !started {
        return Err(Error::Parse(format!("empty expression `{expr}`")));
    }
    flush(&mut out, sign, coeff, &mut word)?;
    Ok(out)
}

fn generator(r: &FiniteRealization, g: GenWord) -> Result<Arc<QDiffOp>, Error> {
    Ok(Arc::new(match g {
        GenWord::E(i) => r.build_e(i)?,
        GenWord::F(i) => r.build_f(i)?,
        GenWord::T(i) => r.build_t(i, false)?,
        GenWord::TInv(i) => r.build_t(i, true)?,
    }))
}

/// The image of `expr` applied to the monomial `on`, printed exactly.
pub fn apply_expr(r: &FiniteRealization, expr: &str, on: &str) -> Result<String, Error> {
    let terms = parse_word_expr(expr)?;
    let m = r.space.parse_monomial(on)?;
    let mut total: Option<OpExpr> = None;
    for (c, word) in terms {
        let ops = word
            .iter()
            .map(|&g| generator(r, g))
            .collect::<Result<Vec<_>, _>>()?;
        let w = OpExpr::word(&r.table, &ops)
            .scaled(&RingElem::from_rat(&r.table, Rat::from_integer(c)));
        total = Some(match total {
            Some(t) => t.plus(&w),
            None => w,
        });
    }
    let total = total.expect("parser yields at least one term");
    Ok(total.apply_monomial(&r.space, &r.table, &m)?.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::Variant;

    fn sl21() -> FiniteRealization {
        FiniteRealization::new(2, 1, Variant::I, None).unwrap()
    }

    #[test]
    fn parses_words() {
        use GenWord::*;
        assert_eq!(
            parse_word_expr("e1 f1 - f1 e1").unwrap(),
            vec![(1, vec![E(1), F(1)]), (-1, vec![F(1), E(1)])]
        );
        assert_eq!(
            parse_word_expr("-2*t1^-1 + f2").unwrap(),
            vec![(-2, vec![TInv(1)]), (1, vec![F(2)])]
        );
        assert_eq!(parse_word_expr("3").unwrap(), vec![(3, vec![])]);
        assert!(parse_word_expr("").is_err());
        assert!(parse_word_expr("g1").is_err());
        assert!(parse_word_expr("e1 + ").is_err());
        assert!(parse_word_expr("e1 2").is_err());
    }

    #[test]
    fn documented_examples() {
        let r = sl21();
        assert_eq!(apply_expr(&r, "f1", "1").unwrap(), "[L1]*x12");
        assert_eq!(apply_expr(&r, "t1", "x12").unwrap(), "L1*q^-2*x12");
        assert_eq!(apply_expr(&r, "e1 f1 - f1 e1", "1").unwrap(), "[L1]");
    }

    #[test]
    fn bad_index_is_an_error() {
        assert!(apply_expr(&sl21(), "e3", "1").is_err());
        assert!(apply_expr(&sl21(), "e1", "x13^2").is_err());
    }
}
