//! Vertex-operator currents of `U_q(sl-hat(2|1))` and their Fourier modes as
//! exact maps on Fock states.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use crate::affine::fock::{
    contraction, shift_sign, Fam, FockAccum, FockState, FockVector, FAMS, SLOTS,
};
use crate::error::Error;
use crate::ring::{LinForm, Rat, RingElem, SymbolTable};
use crate::structure::Parity;

/// Largest momentum `p` for which mode tables are built.
const P_MAX: usize = 48;

/// The level: formal (through `G = q^{k/2}`) or a fixed integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Formal,
    Int(i64),
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Formal => write!(f, "formal"),
            Level::Int(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "formal" {
            return Ok(Level::Formal);
        }
        s.parse::<i64>()
            .map(Level::Int)
            .map_err(|_| Error::Config(format!("--k expects an integer or `formal`, got `{s}`")))
    }
}

/// Symbol table plus level; every `q`-power with `k` in it goes through here.
#[derive(Debug, Clone)]
pub struct AffineContext {
    pub table: Arc<SymbolTable>,
    pub level: Level,
    k_slot: usize,
}

impl AffineContext {
    pub fn new(level: Level) -> Self {
        let table = SymbolTable::affine();
        let k_slot = table.slot_of_log("k").expect("level symbol");
        AffineContext {
            table,
            level,
            k_slot,
        }
    }

    /// `k_coef * k + c`.
    pub fn lin(&self, k_coef: Rat, c: Rat) -> LinForm {
        let f = LinForm::var(self.k_slot, k_coef).plus_const(c);
        match self.level {
            Level::Formal => f,
            Level::Int(k) => f.substitute(self.k_slot, Rat::from_integer(k)),
        }
    }

    pub fn qpow(&self, f: &LinForm) -> RingElem {
        let f = match self.level {
            Level::Formal => f.clone(),
            Level::Int(k) => f.substitute(self.k_slot, Rat::from_integer(k)),
        };
        RingElem::qpow(&self.table, &f).expect("half-integer exponent")
    }

    /// `q^{(k_twice * k + c_twice)/2}`.
    pub fn qhalf(&self, k_twice: i64, c_twice: i64) -> RingElem {
        self.qpow(&self.lin(Rat::new(k_twice, 2), Rat::new(c_twice, 2)))
    }

    /// `gamma^{x/2} = q^{k x / 2}`.
    pub fn gamma_half(&self, x: i64) -> RingElem {
        self.qhalf(x, 0)
    }

    pub fn int(&self, n: i64) -> RingElem {
        RingElem::from_int(&self.table, n)
    }

    pub fn symbol(&self, name: &str) -> RingElem {
        RingElem::symbol(&self.table, name).expect("known symbol")
    }
}

/// The seven constants of the `F` currents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FConstants {
    pub values: BTreeMap<String, RingElem>,
}

pub const F_NAMES: [&str; 7] = ["f11", "f12", "f13", "f21", "f22", "f23", "f24"];

impl FConstants {
    /// The tuple forced by the `e` constants.
    pub fn standard(ctx: &AffineContext) -> Self {
        let e = |n: &str| ctx.symbol(n);
        let inv = |x: RingElem| x.inverse().expect("monomial");
        let (e11, e12, e21, e22) = (e("e11"), e("e12"), e("e21"), e("e22"));
        let q = RingElem::q_pow(&ctx.table, 1);
        let qk1 = ctx.qhalf(2, 2);
        let vals = [
            inv(e11.clone()),
            inv(e12.clone()),
            &(&qk1 * &e21) * &inv(&e11 * &e22),
            &q * &inv(e21.clone()),
            &(&q * &e12) * &inv(&e11 * &e21),
            inv(e22.clone()),
            &e12 * &inv(&e11 * &e22),
        ];
        FConstants {
            values: F_NAMES.iter().map(|n| n.to_string()).zip(vals).collect(),
        }
    }

    pub fn get(&self, name: &str) -> &RingElem {
        &self.values[name]
    }

    /// Applies `fXY=<expr>`.
    pub fn apply_override(&mut self, ctx: &AffineContext, text: &str) -> Result<(), Error> {
        let (name, expr) = text.split_once('=').ok_or_else(|| {
            Error::Parse(format!("override `{text}` is not of the form fXY=<expr>"))
        })?;
        let name = name.trim();
        if !F_NAMES.contains(&name) {
            return Err(Error::Config(format!("unknown constant `{name}`")));
        }
        let v = parse_monomial_expr(ctx, expr)?;
        self.values.insert(name.to_string(), v);
        Ok(())
    }
}

/// Parses products and quotients of integers and symbols with optional
/// exponents, e.g. `q^2*e21/e11`, `q^(k+1)/e22`, `-1`, `G^-1`.
pub fn parse_monomial_expr(ctx: &AffineContext, expr: &str) -> Result<RingElem, Error> {
    let bad = || Error::Parse(format!("cannot parse constant `{expr}`"));
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(bad());
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.to_string()),
        None => (false, s.clone()),
    };
    let mut out = ctx.int(if neg { -1 } else { 1 });
    // split on * and / at depth 0
    let mut factors: Vec<(bool, String)> = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut divide = false;
    for ch in body.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if depth == 0 && (ch == '*' || ch == '/') {
            factors.push((divide, std::mem::take(&mut cur)));
            divide = ch == '/';
        } else {
            cur.push(ch);
        }
    }
    factors.push((divide, cur));
    for (div, f) in factors {
        if f.is_empty() {
            return Err(bad());
        }
        let (base, exp) = match f.split_once('^') {
            Some((b, e)) => (
                b.to_string(),
                e.trim_matches(|c| c == '(' || c == ')').to_string(),
            ),
            None => (f.clone(), "1".to_string()),
        };
        let exp = parse_linear_k(ctx, &exp).ok_or_else(bad)?;
        let v = if let Ok(n) = base.parse::<i64>() {
            if n == 0 {
                return Err(Error::Config("constants must be invertible".into()));
            }
            if !exp.coeffs.is_empty() || !exp.constant.is_integer() {
                return Err(bad());
            }
            let e = *exp.constant.numer();
            RingElem::from_rat(&ctx.table, Rat::from_integer(n).pow(e as i32))
        } else if base == "q" {
            ctx.qpow(&exp)
        } else {
            let sym = RingElem::symbol(&ctx.table, &base).map_err(|_| bad())?;
            if !exp.coeffs.is_empty() || !exp.constant.is_integer() {
                return Err(bad());
            }
            let e = *exp.constant.numer();
            if e >= 0 {
                sym.pow(e as u32)
            } else {
                sym.inverse().map_err(|_| bad())?.pow((-e) as u32)
            }
        };
        out = if div {
            &out * &v.inverse().map_err(|_| bad())?
        } else {
            &out * &v
        };
    }
    Ok(out)
}

/// `c`, `k`, `c*k`, sums thereof, and `x/2` halves.
fn parse_linear_k(ctx: &AffineContext, s: &str) -> Option<LinForm> {
    let s = s.replace('-', "+-");
    let mut kc = Rat::from_integer(0);
    let mut c = Rat::from_integer(0);
    for term in s.split('+').filter(|t| !t.is_empty()) {
        let (term, half) = match term.strip_suffix("/2") {
            Some(t) => (t, Rat::new(1, 2)),
            None => (term, Rat::from_integer(1)),
        };
        if let Some(coef) = term.strip_suffix('k') {
            let coef = coef.trim_end_matches('*');
            let v = match coef {
                "" => 1,
                "-" => -1,
                x => x.parse().ok()?,
            };
            kc += Rat::from_integer(v) * half;
        } else {
            c += Rat::from_integer(term.parse().ok()?) * half;
        }
    }
    Some(ctx.lin(kc, c))
}

/// Which part of a boson field enters: the whole field `X(z)`, or `X_+(z)` /
/// `X_-(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Full,
    Plus,
    Minus,
}

/// `sign * X_part(q^{shift} z)`, with `shift = (k_twice k + c_twice)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub fam: Fam,
    pub part: Part,
    pub k_twice: i64,
    pub c_twice: i64,
    pub sign: i64,
}

const fn fac(fam: Fam, part: Part, k_twice: i64, c_twice: i64, sign: i64) -> Factor {
    Factor {
        fam,
        part,
        k_twice,
        c_twice,
        sign,
    }
}

/// `coeff * z^{z_off} * :exp(sum of factors):`.
#[derive(Debug, Clone)]
pub struct VertexTerm {
    pub coeff: RingElem,
    pub z_off: i64,
    pub factors: Vec<Factor>,
}

use Fam::*;
use Part::{Full as F, Minus as M, Plus as P};

pub const H1_FACTORS: [Factor; 10] = [
    fac(A1, P, 0, 1, 1),
    fac(B12, P, 1, 0, 1),
    fac(B12, P, 1, 4, 1),
    fac(B13, P, 1, 4, 1),
    fac(B23, P, 1, 2, -1),
    fac(A1, M, 0, -1, -1),
    fac(B12, M, -1, 0, -1),
    fac(B12, M, -1, -4, -1),
    fac(B13, M, -1, -4, -1),
    fac(B23, M, -1, -2, 1),
];

pub const H2_FACTORS: [Factor; 6] = [
    fac(A2, P, 0, 1, 1),
    fac(B12, P, 1, 2, -1),
    fac(B13, P, 1, 2, -1),
    fac(A2, M, 0, -1, -1),
    fac(B12, M, -1, -2, 1),
    fac(B13, M, -1, -2, 1),
];

/// The generating fields with a mode convention `X(z) = sum X_n z^{-n-shift}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurrentName {
    E1,
    E2,
    F1,
    F2,
    Psi1Plus,
    Psi1Minus,
    Psi2Plus,
    Psi2Minus,
}

impl CurrentName {
    pub const ALL: [CurrentName; 8] = [
        CurrentName::E1,
        CurrentName::E2,
        CurrentName::F1,
        CurrentName::F2,
        CurrentName::Psi1Plus,
        CurrentName::Psi1Minus,
        CurrentName::Psi2Plus,
        CurrentName::Psi2Minus,
    ];

    /// `E^{+,i}` or `E^{-,i}`.
    pub fn chevalley(sign: i64, i: usize) -> CurrentName {
        match (sign > 0, i) {
            (true, 1) => CurrentName::E1,
            (true, 2) => CurrentName::E2,
            (false, 1) => CurrentName::F1,
            (false, 2) => CurrentName::F2,
            _ => panic!("no current E^{sign},{i}"),
        }
    }

    pub fn psi(i: usize, sign: i64) -> CurrentName {
        match (i, sign > 0) {
            (1, true) => CurrentName::Psi1Plus,
            (1, false) => CurrentName::Psi1Minus,
            (2, true) => CurrentName::Psi2Plus,
            (2, false) => CurrentName::Psi2Minus,
            _ => panic!("no psi^{i}"),
        }
    }
}

impl fmt::Display for CurrentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CurrentName::E1 => "E1",
            CurrentName::E2 => "E2",
            CurrentName::F1 => "F1",
            CurrentName::F2 => "F2",
            CurrentName::Psi1Plus => "psi1+",
            CurrentName::Psi1Minus => "psi1-",
            CurrentName::Psi2Plus => "psi2+",
            CurrentName::Psi2Minus => "psi2-",
        };
        write!(f, "{s}")
    }
}

impl FromStr for CurrentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        CurrentName::ALL
            .iter()
            .copied()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown current `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct Current {
    pub name: CurrentName,
    pub terms: Vec<VertexTerm>,
    pub parity: Parity,
    /// `1` for `z^{-n-1}`, `0` for `z^{-n}`
    pub mode_shift: i64,
    /// `psi_{±,n}` are read off at argument `q^{±k/2} z`: the `n`-th mode is
    /// `gamma^{±n/2}` times the `z^{-n}` coefficient; `0` for other currents.
    pub arg_sign: i64,
}

fn vt(coeff: RingElem, z_off: i64, factors: &[Factor]) -> VertexTerm {
    VertexTerm {
        coeff,
        z_off,
        factors: factors.to_vec(),
    }
}

/// Builds one of the currents with the given `F` constants.
pub fn build_current(ctx: &AffineContext, name: CurrentName, f: &FConstants) -> Current {
    let t = &ctx.table;
    let inv_d = RingElem::one(t).div_qdiff(1);
    let e = |n: &str| ctx.symbol(n);
    let (terms, parity, mode_shift, arg_sign) = match name {
        CurrentName::E1 => (
            vec![
                vt(
                    -&(&e("e11") * &inv_d),
                    -1,
                    &[
                        fac(B12, P, 0, 0, 1),
                        fac(B12, F, 0, 2, -1),
                        fac(C12, F, 0, 2, -1),
                    ],
                ),
                vt(
                    &e("e12") * &inv_d,
                    -1,
                    &[
                        fac(B12, M, 0, 0, 1),
                        fac(B12, F, 0, -2, -1),
                        fac(C12, F, 0, -2, -1),
                    ],
                ),
            ],
            Parity::Even,
            1,
            0,
        ),
        CurrentName::E2 => (
            vec![
                vt(
                    e("e21"),
                    0,
                    &[
                        fac(B12, P, 0, 2, -1),
                        fac(B13, P, 0, 2, -1),
                        fac(B23, F, 0, 2, 1),
                    ],
                ),
                vt(
                    e("e22"),
                    0,
                    &[
                        fac(B12, F, 0, 0, 1),
                        fac(C12, F, 0, 0, 1),
                        fac(B13, F, 0, 0, 1),
                    ],
                ),
            ],
            Parity::Odd,
            1,
            0,
        ),
        CurrentName::F1 => (
            vec![
                vt(
                    f.get("f11") * &inv_d,
                    -1,
                    &[
                        fac(A1, P, 1, 1, 1),
                        fac(B12, P, 2, 4, 1),
                        fac(B13, P, 2, 4, 1),
                        fac(B23, P, 2, 2, -1),
                        fac(B12, F, 2, 2, 1),
                        fac(C12, F, 2, 2, 1),
                    ],
                ),
                vt(
                    -&(f.get("f12") * &inv_d),
                    -1,
                    &[
                        fac(A1, M, -1, -1, 1),
                        fac(B12, M, -2, -4, 1),
                        fac(B13, M, -2, -4, 1),
                        fac(B23, M, -2, -2, -1),
                        fac(B12, F, -2, -2, 1),
                        fac(C12, F, -2, -2, 1),
                    ],
                ),
                vt(
                    f.get("f13").clone(),
                    0,
                    &[
                        fac(A1, P, 1, 1, 1),
                        fac(B23, P, 2, 2, -1),
                        fac(B13, F, 2, 2, -1),
                        fac(B23, F, 2, 4, 1),
                    ],
                ),
            ],
            Parity::Even,
            1,
            0,
        ),
        CurrentName::F2 => (
            vec![
                vt(
                    f.get("f21") * &inv_d,
                    -1,
                    &[fac(A2, P, 1, 1, 1), fac(B23, F, 2, 2, -1)],
                ),
                vt(
                    -&(f.get("f22") * &inv_d),
                    -1,
                    &[fac(A2, M, -1, -1, 1), fac(B23, F, -2, -2, -1)],
                ),
                vt(
                    -&(f.get("f23") * &inv_d),
                    -1,
                    &[
                        fac(A2, M, -1, -1, 1),
                        fac(B12, M, -2, -2, -1),
                        fac(B13, M, -2, -2, -1),
                        fac(B12, F, -2, 0, -1),
                        fac(C12, F, -2, 0, -1),
                        fac(B13, F, -2, 0, -1),
                    ],
                ),
                vt(
                    f.get("f24") * &inv_d,
                    -1,
                    &[
                        fac(A2, M, -1, -1, 1),
                        fac(B12, P, -2, -2, -1),
                        fac(B13, M, -2, -2, -1),
                        fac(B12, F, -2, -4, -1),
                        fac(C12, F, -2, -4, -1),
                        fac(B13, F, -2, 0, -1),
                    ],
                ),
            ],
            Parity::Odd,
            1,
            0,
        ),
        CurrentName::Psi1Plus | CurrentName::Psi1Minus => {
            let s = if name == CurrentName::Psi1Plus { 1 } else { -1 };
            let part = if s > 0 { P } else { M };
            (
                vec![vt(
                    RingElem::one(t),
                    0,
                    &[
                        fac(A1, part, s, s, 1),
                        fac(B12, part, 2 * s, 0, 1),
                        fac(B12, part, 2 * s, 4 * s, 1),
                        fac(B13, part, 2 * s, 4 * s, 1),
                        fac(B23, part, 2 * s, 2 * s, -1),
                    ],
                )],
                Parity::Even,
                0,
                s,
            )
        }
        CurrentName::Psi2Plus | CurrentName::Psi2Minus => {
            let s = if name == CurrentName::Psi2Plus { 1 } else { -1 };
            let part = if s > 0 { P } else { M };
            (
                vec![vt(
                    RingElem::one(t),
                    0,
                    &[
                        fac(A2, part, s, s, 1),
                        fac(B12, part, 2 * s, 2 * s, -1),
                        fac(B13, part, 2 * s, 2 * s, -1),
                    ],
                )],
                Parity::Even,
                0,
                s,
            )
        }
    };
    Current {
        name,
        terms,
        parity,
        mode_shift,
        arg_sign,
    }
}

pub type Multiset = Vec<(Fam, u32, u32)>;
pub type CreationTable = Vec<(Multiset, RingElem)>;

/// Per-`p` data of one vertex term, indexed `[p][family]`.
#[derive(Debug)]
struct CompiledTerm {
    coeff: RingElem,
    z_off: i64,
    delta: [i32; SLOTS],
    /// z-exponent per unit of the slot's zero-mode eigenvalue
    z_coef: [i64; SLOTS],
    /// q-exponent per unit of the slot's zero-mode eigenvalue
    q_coef: [LinForm; SLOTS],
    /// exponents of `W1`, `W2` (the `a_0` parts)
    w_exp: [i64; 2],
    /// contraction of the annihilation exponent with a creator `X^(p)`
    gamma: Vec<[Option<RingElem>; 6]>,
    /// coefficient of `X^(p) z^p` in the creation exponent
    beta: Vec<[Option<RingElem>; 6]>,
    creation: Vec<OnceLock<Arc<CreationTable>>>,
}

fn add_opt(slot: &mut Option<RingElem>, v: RingElem) {
    let nv = match slot.take() {
        Some(x) => &x + &v,
        None => v,
    };
    *slot = if nv.is_zero() { None } else { Some(nv) };
}

impl CompiledTerm {
    fn new(ctx: &AffineContext, t: &VertexTerm) -> Self {
        let table = &ctx.table;
        let mut delta = [0i32; SLOTS];
        let mut z_coef = [0i64; SLOTS];
        let mut q_coef: [LinForm; SLOTS] = Default::default();
        let mut w_exp = [0i64; 2];
        let mut alpha: Vec<[Option<RingElem>; 6]> = vec![Default::default(); P_MAX + 1];
        let mut beta: Vec<[Option<RingElem>; 6]> = vec![Default::default(); P_MAX + 1];
        for f in &t.factors {
            let is_a = f.fam.slot().is_none();
            let eps = f.sign;
            let shift = ctx.lin(Rat::new(f.k_twice, 2), Rat::new(f.c_twice, 2));
            match f.part {
                Part::Full => {
                    let s = f.fam.slot().expect("full a^i fields do not occur");
                    delta[s] += eps as i32;
                    z_coef[s] += eps;
                    q_coef[s] = q_coef[s].plus(&shift.scaled(Rat::from_integer(eps)));
                }
                Part::Plus | Part::Minus => {
                    let pm = if f.part == Part::Plus { 1 } else { -1 };
                    match f.fam {
                        Fam::A1 => w_exp[0] += pm * eps,
                        Fam::A2 => w_exp[1] += pm * eps,
                        _ => {
                            let s = f.fam.slot().expect("slot");
                            q_coef[s] = q_coef[s].plus_const(Rat::from_integer(pm * eps));
                        }
                    }
                }
            }
            for p in 1..=P_MAX as i64 {
                let sp = shift.scaled(Rat::from_integer(p));
                let qsp = ctx.qpow(&sp);
                let qmsp = ctx.qpow(&sp.neg());
                let qp = &RingElem::q_pow(table, p) - &RingElem::q_pow(table, -p);
                let e = ctx.int(eps);
                let fi = f.fam.index();
                match f.part {
                    Part::Full => {
                        add_opt(&mut beta[p as usize][fi], &e * &qsp);
                        add_opt(&mut alpha[p as usize][fi], -&(&e * &qmsp));
                    }
                    Part::Plus => {
                        let c = if is_a { qmsp } else { &qp * &qmsp };
                        add_opt(&mut alpha[p as usize][fi], &e * &c);
                    }
                    Part::Minus => {
                        let c = if is_a { qsp } else { &qp * &qsp };
                        add_opt(&mut beta[p as usize][fi], -&(&e * &c));
                    }
                }
            }
        }
        let mut gamma: Vec<[Option<RingElem>; 6]> = vec![Default::default(); P_MAX + 1];
        for p in 1..=P_MAX {
            let qk1p = ctx.qpow(&ctx.lin(Rat::from_integer(p as i64), Rat::from_integer(p as i64)));
            for x in FAMS {
                let Some(a) = &alpha[p][x.index()] else {
                    continue;
                };
                for y in FAMS {
                    if let Some(c) = contraction(table, x, y, p as i64, &qk1p) {
                        add_opt(&mut gamma[p][y.index()], a * &c);
                    }
                }
            }
        }
        CompiledTerm {
            coeff: t.coeff.clone(),
            z_off: t.z_off,
            delta,
            z_coef,
            q_coef,
            w_exp,
            gamma,
            beta,
            creation: (0..=P_MAX).map(|_| OnceLock::new()).collect(),
        }
    }

    /// `sum_{multisets of total p = e} prod beta^c / c!` with the multisets.
    fn creation(&self, table: &Arc<SymbolTable>, e: usize) -> Arc<CreationTable> {
        assert!(e <= P_MAX, "creation energy {e} beyond table size {P_MAX}");
        self.creation[e]
            .get_or_init(|| {
                let modes: Vec<(Fam, u32, &RingElem)> = (1..=e)
                    .flat_map(|p| {
                        FAMS.iter().filter_map(move |&f| {
                            self.beta[p][f.index()].as_ref().map(|b| (f, p as u32, b))
                        })
                    })
                    .collect();
                let mut out = Vec::new();
                fn rec(
                    modes: &[(Fam, u32, &RingElem)],
                    left: u32,
                    cur: &mut Multiset,
                    coef: RingElem,
                    out: &mut CreationTable,
                ) {
                    if left == 0 {
                        let mut m = cur.clone();
                        m.sort();
                        out.push((m, coef));
                        return;
                    }
                    let Some((&(f, p, b), rest)) = modes.split_first() else {
                        return;
                    };
                    rec(rest, left, cur, coef.clone(), out);
                    let mut c = 1u32;
                    let mut acc = coef;
                    while c * p <= left {
                        acc = (&acc * b).scale(Rat::new(1, i64::from(c)));
                        cur.push((f, p, c));
                        rec(rest, left - c * p, cur, acc.clone(), out);
                        cur.pop();
                        c += 1;
                    }
                }
                rec(
                    &modes,
                    e as u32,
                    &mut Vec::new(),
                    RingElem::one(table),
                    &mut out,
                );
                Arc::new(out)
            })
            .clone()
    }
}

/// A current compiled for mode extraction.
#[derive(Debug)]
pub struct CompiledCurrent {
    pub current: Current,
    terms: Vec<CompiledTerm>,
}

fn binomial(n: u32, k: u32) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * i64::from(n - i) / i64::from(i + 1);
    }
    r
}

impl CompiledCurrent {
    pub fn new(ctx: &AffineContext, current: Current) -> Self {
        let terms = current
            .terms
            .iter()
            .map(|t| CompiledTerm::new(ctx, t))
            .collect();
        CompiledCurrent { current, terms }
    }

    /// Adds `scale` times the `n`-th mode applied to `s` into `out`.
    pub fn apply_mode(
        &self,
        ctx: &AffineContext,
        n: i64,
        s: &FockState,
        scale: &RingElem,
        out: &mut FockVector,
    ) {
        let mut acc = FockAccum::new(&ctx.table);
        self.apply_mode_cached(ctx, n, s, scale, &mut acc, &mut OscCache::default());
        for (st, c) in acc.finish().terms {
            out.add_term(st, c);
        }
    }

    /// As [`Self::apply_mode`], reusing oscillator images across zero modes.
    ///
    /// The zero modes only enter through a scalar, the cocycle sign, the
    /// momentum shift and the net oscillator energy, so the oscillator part is
    /// keyed by `(term, energy, occupation)`.
    pub fn apply_mode_cached(
        &self,
        ctx: &AffineContext,
        n: i64,
        s: &FockState,
        scale: &RingElem,
        out: &mut FockAccum,
        cache: &mut OscCache,
    ) {
        let mut scale = scale.clone();
        if self.current.arg_sign != 0 {
            scale = &scale * &ctx.gamma_half(self.current.arg_sign * n);
        }
        for (ti, t) in self.terms.iter().enumerate() {
            let mut zm = 0i64;
            let mut qexp = LinForm::zero();
            for slot in 0..SLOTS {
                let fam = [Fam::B12, Fam::B13, Fam::B23, Fam::C12][slot];
                let eig = fam.zero_mode(&s.mom);
                zm += t.z_coef[slot] * eig;
                if eig != 0 {
                    qexp = qexp.plus(&t.q_coef[slot].scaled(Rat::from_integer(eig)));
                }
            }
            // created minus annihilated energy
            let delta_e = -n - self.current.mode_shift - t.z_off - zm;
            let max_ann: i64 = s
                .occ
                .iter()
                .filter(|&&(f, p, _)| t.gamma[p as usize][f.index()].is_some())
                .map(|&(_, p, c)| i64::from(p * c))
                .sum();
            if delta_e + max_ann < 0 {
                continue;
            }
            let image = cache.get_or_build((ti, delta_e, s.occ.clone()), || {
                t.oscillator_image(ctx, delta_e, &s.occ)
            });
            if image.is_empty() {
                continue;
            }
            let mut zero = &(&t.coeff * &scale) * &ctx.qpow(&qexp);
            for (w, e) in [("W1", t.w_exp[0]), ("W2", t.w_exp[1])] {
                if e != 0 {
                    let w = ctx.symbol(w);
                    let w = if e > 0 {
                        w
                    } else {
                        w.inverse().expect("monomial")
                    };
                    zero = &zero * &w.pow(e.unsigned_abs() as u32);
                }
            }
            if shift_sign(&s.mom, &t.delta) < 0 {
                zero = -zero;
            }
            let mut mom = s.mom;
            for k in 0..SLOTS {
                mom[k] += t.delta[k];
            }
            for (occ, c) in image.iter() {
                out.add_product(
                    FockState {
                        mom,
                        occ: occ.clone(),
                    },
                    &zero,
                    c,
                );
            }
        }
    }
}

/// Oscillator images keyed by `(term, net energy, occupation)`.
#[derive(Debug, Default)]
pub struct OscCache {
    map: HashMap<(usize, i64, Multiset), Arc<CreationTable>>,
    /// coefficient monomials held, the measure used to bound memory
    pub weight: usize,
}

impl OscCache {
    fn get_or_build(
        &mut self,
        key: (usize, i64, Multiset),
        build: impl FnOnce() -> CreationTable,
    ) -> Arc<CreationTable> {
        if let Some(v) = self.map.get(&key) {
            return v.clone();
        }
        let v = Arc::new(build());
        self.weight += v
            .iter()
            .map(|(m, c)| m.len() + c.terms().len())
            .sum::<usize>()
            + 1;
        self.map.insert(key, v.clone());
        v
    }
}

impl CompiledTerm {
    /// Normal-ordered oscillator part acting on `occ`, creating net energy `delta_e`.
    fn oscillator_image(&self, ctx: &AffineContext, delta_e: i64, occ: &Multiset) -> CreationTable {
        let table = &ctx.table;
        // annihilation: each creator X^(p) becomes X^(p) + gamma_p
        let mut partial: Vec<(Multiset, i64, RingElem)> =
            vec![(Vec::new(), 0, RingElem::one(table))];
        for &(f, p, c) in occ {
            let g = self.gamma[p as usize][f.index()].as_ref();
            let mut next = Vec::new();
            for (occ, ann, coef) in &partial {
                let rmax = if g.is_some() { c } else { 0 };
                let mut gpow = RingElem::one(table);
                for r in 0..=rmax {
                    if r > 0 {
                        gpow = &gpow * g.expect("contraction");
                    }
                    let mut o = occ.clone();
                    if c - r > 0 {
                        o.push((f, p, c - r));
                    }
                    let k = ctx.int(binomial(c, r));
                    next.push((o, ann + i64::from(r * p), &(coef * &gpow) * &k));
                }
            }
            partial = next;
        }
        let mut acc: BTreeMap<Multiset, RingElem> = BTreeMap::new();
        for (occ, ann, coef) in partial {
            let e_new = delta_e + ann;
            if e_new < 0 {
                continue;
            }
            let tab = self.creation(table, e_new as usize);
            for (ms, c) in tab.iter() {
                let mut st = FockState {
                    mom: [0; SLOTS],
                    occ: occ.clone(),
                };
                for &(f, p, k) in ms {
                    st.create(f, p, k);
                }
                let v = &coef * c;
                match acc.entry(st.occ) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(v);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let sum = e.get() + &v;
                        *e.get_mut() = sum;
                    }
                }
            }
        }
        acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    }
}

/// `H^i_n` (`n != 0`) as a linear combination of oscillator modes `X_n`.
#[derive(Debug, Clone)]
pub struct HMode {
    pub i: usize,
    pub n: i64,
    pub coeffs: Vec<(Fam, RingElem)>,
}

impl HMode {
    /// The closed-form mode expansion.
    pub fn closed_form(ctx: &AffineContext, i: usize, n: i64) -> Self {
        let a = n.abs();
        let qa = |k_twice: i64, c_twice: i64| ctx.qhalf(k_twice * a, c_twice * a);
        let coeffs = match i {
            1 => vec![
                (Fam::A1, qa(0, -1)),
                (
                    Fam::B12,
                    &qa(-1, -2)
                        * &(&RingElem::q_pow(&ctx.table, a) + &RingElem::q_pow(&ctx.table, -a)),
                ),
                (Fam::B13, qa(-1, -4)),
                (Fam::B23, -qa(-1, -2)),
            ],
            2 => vec![
                (Fam::A2, qa(0, -1)),
                (Fam::B12, -qa(-1, -2)),
                (Fam::B13, -qa(-1, -2)),
            ],
            _ => panic!("H^{i} does not exist for (2|1)"),
        };
        HMode { i, n, coeffs }
    }

    /// Read off the field `H^i(z)`.
    pub fn from_field(ctx: &AffineContext, i: usize, n: i64) -> Self {
        let factors: &[Factor] = if i == 1 { &H1_FACTORS } else { &H2_FACTORS };
        let mut acc: BTreeMap<Fam, RingElem> = BTreeMap::new();
        for f in factors {
            let (wanted, sign) = if n > 0 {
                (Part::Plus, f.sign)
            } else {
                (Part::Minus, -f.sign)
            };
            if f.part != wanted {
                continue;
            }
            let s = ctx.lin(Rat::new(f.k_twice, 2), Rat::new(f.c_twice, 2));
            let v = ctx
                .qpow(&s.scaled(Rat::from_integer(-n)))
                .scale(Rat::from_integer(sign));
            let e = acc
                .entry(f.fam)
                .or_insert_with(|| RingElem::zero(&ctx.table));
            *e = &*e + &v;
        }
        HMode {
            i,
            n,
            coeffs: acc.into_iter().filter(|(_, v)| !v.is_zero()).collect(),
        }
    }

    pub fn apply(
        &self,
        ctx: &AffineContext,
        s: &FockState,
        scale: &RingElem,
        out: &mut FockVector,
    ) {
        let table = &ctx.table;
        let p = self.n.unsigned_abs() as u32;
        for (fam, c) in &self.coeffs {
            let is_a = fam.slot().is_none();
            // X_n in terms of the rescaled operators
            let ratio = if is_a {
                RingElem::one(table).div_qdiff(1)
            } else {
                RingElem::qint(table, p as i64)
            };
            let c = &(c * &ratio) * scale;
            if self.n < 0 {
                let mut st = s.clone();
                st.create(*fam, p, 1);
                out.add_term(st, c);
            } else {
                let qk1p = ctx.qpow(&ctx.lin(
                    Rat::from_integer(i64::from(p)),
                    Rat::from_integer(i64::from(p)),
                ));
                for &(g, pp, cnt) in &s.occ {
                    if pp != p {
                        continue;
                    }
                    if let Some(k) = contraction(table, *fam, g, i64::from(p), &qk1p) {
                        let mut st = s.clone();
                        st.remove_one(g, p);
                        out.add_term(st, &(&c * &k) * &ctx.int(i64::from(cnt)));
                    }
                }
            }
        }
    }
}

/// `K_i^{±1}` eigenvalue on a state.
pub fn k_eigenvalue(ctx: &AffineContext, i: usize, inverse: bool, s: &FockState) -> RingElem {
    let b = |f: Fam| f.zero_mode(&s.mom);
    let (w, e) = match i {
        1 => ("W1", 2 * b(Fam::B12) + b(Fam::B13) - b(Fam::B23)),
        2 => ("W2", -b(Fam::B12) - b(Fam::B13)),
        _ => panic!("K_{i} does not exist for (2|1)"),
    };
    let v = &ctx.symbol(w) * &RingElem::q_pow(&ctx.table, e);
    if inverse {
        v.inverse().expect("monomial")
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> AffineContext {
        AffineContext::new(Level::Formal)
    }

    #[test]
    fn standard_constants_at_unit_e() {
        use num_rational::BigRational;
        use rand::SeedableRng;
        let c = ctx();
        let f = FConstants::standard(&c);
        let int = |n: i64| BigRational::from_integer(n.into());
        let mut a = crate::ring::Assignment::random(
            &c.table,
            &mut rand_chacha::ChaCha8Rng::seed_from_u64(7),
        );
        for n in ["e11", "e12", "e21", "e22"] {
            a.values[c.table.slot(n).unwrap()] = int(1);
        }
        let q = &a.values[0] * &a.values[0];
        let g = a.values[c.table.slot("G").unwrap()].clone();
        let qk1 = &(&g * &g) * &q;
        let expect = [int(1), int(1), qk1, q.clone(), q, int(1), int(1)];
        for (n, e) in F_NAMES.iter().zip(expect) {
            assert_eq!(f.get(n).subst_numeric(&a).unwrap(), e, "{n}");
        }
    }

    #[test]
    fn override_parsing() {
        let c = ctx();
        let mut f = FConstants::standard(&c);
        f.apply_override(&c, "f13=1").unwrap();
        assert!(f.get("f13").is_one());
        f.apply_override(&c, "f11=q^(k+1)*e21/e11").unwrap();
        let expect = &(&c.qhalf(2, 2) * &c.symbol("e21")) * &c.symbol("e11").inverse().unwrap();
        assert_eq!(f.get("f11"), &expect);
        f.apply_override(&c, "f12=-2*G^-1").unwrap();
        assert_eq!(
            f.get("f12"),
            &c.symbol("G")
                .inverse()
                .unwrap()
                .scale(Rat::from_integer(-2))
        );
        assert!(f.apply_override(&c, "f99=1").is_err());
        assert!(f.apply_override(&c, "f11=").is_err());
        assert!(f.apply_override(&c, "f11=zz").is_err());
    }

    #[test]
    fn level_parsing() {
        assert_eq!("formal".parse::<Level>().unwrap(), Level::Formal);
        assert_eq!("3".parse::<Level>().unwrap(), Level::Int(3));
        assert!("x".parse::<Level>().is_err());
    }

    #[test]
    fn psi_zero_mode_on_vacuum() {
        let c = ctx();
        let f = FConstants::standard(&c);
        for (name, w, inv) in [
            (CurrentName::Psi2Plus, "W2", false),
            (CurrentName::Psi2Minus, "W2", true),
            (CurrentName::Psi1Plus, "W1", false),
        ] {
            let cur = CompiledCurrent::new(&c, build_current(&c, name, &f));
            let mut out = FockVector::zero();
            cur.apply_mode(
                &c,
                0,
                &FockState::vacuum(),
                &RingElem::one(&c.table),
                &mut out,
            );
            let wv = c.symbol(w);
            let expect = if inv { wv.inverse().unwrap() } else { wv };
            assert_eq!(
                out,
                FockVector::basis(&c.table, FockState::vacuum()).scale(&expect)
            );
        }
    }

    #[test]
    fn e2_on_vacuum_shifts_momentum() {
        let c = ctx();
        let f = FConstants::standard(&c);
        let cur = CompiledCurrent::new(&c, build_current(&c, CurrentName::E2, &f));
        let mut out = FockVector::zero();
        // the e21 term carries z^{b23_0} = 1 on the vacuum: mode -1 picks the constant
        cur.apply_mode(
            &c,
            -1,
            &FockState::vacuum(),
            &RingElem::one(&c.table),
            &mut out,
        );
        let s23 = FockState::with_momentum([0, 0, 1, 0]);
        let s13 = FockState::with_momentum([1, 0, 0, 1]);
        assert!(out.terms.contains_key(&s23));
        assert!(!out.terms.contains_key(&s13) || out.terms.len() >= 2);
        // large positive modes kill the vacuum
        for name in [
            CurrentName::E1,
            CurrentName::E2,
            CurrentName::F1,
            CurrentName::F2,
        ] {
            let cur = CompiledCurrent::new(&c, build_current(&c, name, &f));
            let mut out = FockVector::zero();
            cur.apply_mode(
                &c,
                5,
                &FockState::vacuum(),
                &RingElem::one(&c.table),
                &mut out,
            );
            assert!(out.is_zero(), "{name}");
        }
    }

    #[test]
    fn field_and_closed_form_h_agree() {
        let c = ctx();
        for i in 1..=2 {
            for n in [-3i64, -1, 1, 2, 6] {
                let a = HMode::from_field(&c, i, n);
                let b = HMode::closed_form(&c, i, n);
                let norm = |h: &HMode| {
                    h.coeffs
                        .iter()
                        .filter(|(_, v)| !v.is_zero())
                        .cloned()
                        .collect::<BTreeMap<_, _>>()
                };
                assert_eq!(norm(&a), norm(&b), "H{i}_{n}");
            }
        }
    }
}
