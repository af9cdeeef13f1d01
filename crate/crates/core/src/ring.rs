//! Exact coefficient ring: sparse Laurent polynomials over `BigRational` in
//! jet generators (shift picture or derivative picture) and a few
//! transcendental generators carrying their own derivation rules.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn factorial(n: u32) -> Rat {
    (1..=n as i64).fold(Rat::one(), |acc, k| acc * rint(k))
}

/// Harmonic number `1 + 1/2 + ... + 1/k`.
pub fn harmonic(k: u32) -> Rat {
    (1..=k as i64).fold(Rat::zero(), |acc, j| acc + rat(1, j))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RingError {
    #[error("picture mismatch: {0}")]
    PictureMismatch(&'static str),
    #[error("not an exact total difference; residual {0}")]
    NotExact(String),
    #[error("cannot invert non-monomial element {0}")]
    NotInvertible(String),
    #[error("no derivation rule for {0}")]
    NoDerivation(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    P,
    Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JetVar {
    P,
    Q,
    V1,
    V2,
    W1,
    W2,
}

impl From<Field> for JetVar {
    fn from(f: Field) -> Self {
        match f {
            Field::P => JetVar::P,
            Field::Q => JetVar::Q,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trans {
    /// `e^{v2}`
    ExpV2,
    /// `log v1`
    LogV1,
    /// `sqrt(v1 e^{v2})`
    SqrtV1ExpV2,
    /// `log(e^{v2} - v1)`
    LogExpV2MinusV1,
    /// `(e^{v2} - v1)^{-1}`
    InvExpV2MinusV1,
    /// `log Q - log P` at the given lattice offset (offset 0 in the derivative picture).
    LogQminusLogP(i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    Shift(Field, i64),
    Deriv(JetVar, u32),
    Trans(Trans),
}

impl Generator {
    fn shift_offset(&self) -> Option<i64> {
        match self {
            Generator::Shift(_, k) => Some(*k),
            Generator::Trans(Trans::LogQminusLogP(k)) => Some(*k),
            _ => None,
        }
    }

    fn shifted(&self, k: i64) -> Generator {
        match *self {
            Generator::Shift(f, o) => Generator::Shift(f, o + k),
            Generator::Trans(Trans::LogQminusLogP(o)) => Generator::Trans(Trans::LogQminusLogP(o + k)),
            g => g,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Shift(v, 0) => write!(f, "{v:?}"),
            Generator::Shift(v, k) => write!(f, "{v:?}[{k:+}]"),
            Generator::Deriv(v, n) => {
                let name = match v {
                    JetVar::P => "P",
                    JetVar::Q => "Q",
                    JetVar::V1 => "v1",
                    JetVar::V2 => "v2",
                    JetVar::W1 => "w1",
                    JetVar::W2 => "w2",
                };
                match n {
                    0 => write!(f, "{name}"),
                    1 => write!(f, "{name}_x"),
                    2 => write!(f, "{name}_xx"),
                    n => write!(f, "{name}_x{n}"),
                }
            }
            Generator::Trans(t) => match t {
                Trans::ExpV2 => write!(f, "exp(v2)"),
                Trans::LogV1 => write!(f, "log(v1)"),
                Trans::SqrtV1ExpV2 => write!(f, "sqrt(v1*exp(v2))"),
                Trans::LogExpV2MinusV1 => write!(f, "log(exp(v2)-v1)"),
                Trans::InvExpV2MinusV1 => write!(f, "(exp(v2)-v1)"),
                Trans::LogQminusLogP(0) => write!(f, "log(Q/P)"),
                Trans::LogQminusLogP(k) => write!(f, "log(Q/P)[{k:+}]"),
            },
        }
    }
}

/// Product of generator powers; sorted by generator, no zero exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(Generator, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn gen(g: Generator, e: i32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(g, e)])
        }
    }

    pub fn factors(&self) -> &[(Generator, i32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|(_, e)| *e as i64).sum()
    }

    pub fn exponent(&self, g: &Generator) -> i32 {
        self.0
            .binary_search_by(|(h, _)| h.cmp(g))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (&self.0[i], &other.0[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => {
                    out.push(*a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(*b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = a.1 + b.1;
                    if e != 0 {
                        out.push((a.0, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    pub fn inv(&self) -> Monomial {
        Monomial(self.0.iter().map(|(g, e)| (*g, -e)).collect())
    }

    pub fn pow(&self, n: i32) -> Monomial {
        if n == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(g, e)| (*g, e * n)).collect())
    }

    /// Drops the factor `g` entirely.
    pub fn without(&self, g: &Generator) -> Monomial {
        Monomial(self.0.iter().filter(|(h, _)| h != g).copied().collect())
    }

    pub fn map_gens(&self, f: impl Fn(&Generator) -> Generator) -> Monomial {
        let mut m = Monomial::one();
        for (g, e) in &self.0 {
            m = m.mul(&Monomial::gen(f(g), *e));
        }
        m
    }

    fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.iter().filter_map(|(g, _)| g.shift_offset())
    }
}

impl Ord for Monomial {
    /// Graded lexicographic over the generator enumeration.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match self.degree().cmp(&other.degree()) {
            Equal => {}
            o => return o,
        }
        let (mut i, mut j) = (0, 0);
        loop {
            let a = self.0.get(i);
            let b = other.0.get(j);
            match (a, b) {
                (None, None) => return Equal,
                (Some(a), None) => return a.1.cmp(&0),
                (None, Some(b)) => return 0.cmp(&b.1),
                (Some(a), Some(b)) => match a.0.cmp(&b.0) {
                    Less => return a.1.cmp(&0),
                    Greater => return 0.cmp(&b.1),
                    Equal => {
                        if a.1 != b.1 {
                            return a.1.cmp(&b.1);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, (g, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            match (g, *e) {
                (Generator::Trans(Trans::InvExpV2MinusV1), e) => write!(f, "{g}^{}", -e)?,
                (_, 1) => write!(f, "{g}")?,
                (_, e) => write!(f, "{g}^{e}")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Picture {
    Neutral,
    Shift,
    Deriv,
}

/// Sparse map monomial -> nonzero rational.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RingElem {
    terms: BTreeMap<Monomial, Rat>,
}

impl RingElem {
    pub fn zero() -> Self {
        RingElem { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn int(n: i64) -> Self {
        Self::constant(rint(n))
    }

    pub fn term(c: Rat, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        RingElem { terms }
    }

    pub fn gen(g: Generator) -> Self {
        Self::gen_pow(g, 1)
    }

    pub fn gen_pow(g: Generator, e: i32) -> Self {
        Self::term(Rat::one(), Monomial::gen(g, e))
    }

    /// Shift-picture jet `f^{(k)} = Λ^k f`.
    pub fn sj(f: Field, k: i64) -> Self {
        Self::gen(Generator::Shift(f, k))
    }

    pub fn p(k: i64) -> Self {
        Self::sj(Field::P, k)
    }

    pub fn q(k: i64) -> Self {
        Self::sj(Field::Q, k)
    }

    /// Derivative-picture jet `∂x^n var`.
    pub fn dj(v: JetVar, n: u32) -> Self {
        Self::gen(Generator::Deriv(v, n))
    }

    pub fn tr(t: Trans) -> Self {
        Self::gen(Generator::Trans(t))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn leading(&self) -> Option<(&Monomial, &Rat)> {
        self.terms.iter().next_back()
    }

    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rat) -> RingElem {
        if c.is_zero() {
            return RingElem::zero();
        }
        RingElem { terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rat) -> RingElem {
        if c.is_zero() {
            return RingElem::zero();
        }
        RingElem { terms: self.terms.iter().map(|(n, a)| (n.mul(m), a * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> RingElem {
        let mut acc = RingElem::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Integer power; negative powers only for single-term elements.
    pub fn powi(&self, n: i32) -> Result<RingElem, RingError> {
        if n >= 0 {
            return Ok(self.pow(n as u32));
        }
        let inv = self.inv_monomial()?;
        Ok(inv.pow((-n) as u32))
    }

    pub fn inv_monomial(&self) -> Result<RingElem, RingError> {
        if self.terms.len() != 1 {
            return Err(RingError::NotInvertible(self.to_string()));
        }
        let (m, c) = self.terms.iter().next().unwrap();
        Ok(RingElem::term(c.recip(), m.inv()))
    }

    pub fn generators(&self) -> Vec<Generator> {
        let mut gs: Vec<Generator> = self.terms.keys().flat_map(|m| m.0.iter().map(|(g, _)| *g)).collect();
        gs.sort();
        gs.dedup();
        gs
    }

    pub fn picture(&self) -> Result<Picture, RingError> {
        let mut shift = false;
        let mut deriv = false;
        for g in self.generators() {
            match g {
                Generator::Shift(..) => shift = true,
                Generator::Trans(Trans::LogQminusLogP(k)) if k != 0 => shift = true,
                Generator::Deriv(..) => deriv = true,
                _ => {}
            }
        }
        match (shift, deriv) {
            (true, true) => Err(RingError::PictureMismatch("shift and derivative jets mixed")),
            (true, false) => Ok(Picture::Shift),
            (false, true) => Ok(Picture::Deriv),
            _ => Ok(Picture::Neutral),
        }
    }

    /// `Λ^k e`: every lattice offset raised by `k`.
    pub fn shift(&self, k: i64) -> Result<RingElem, RingError> {
        if self.picture()? == Picture::Deriv {
            return Err(RingError::PictureMismatch("shift applied to derivative-picture element"));
        }
        Ok(self.shift_unchecked(k))
    }

    pub(crate) fn shift_unchecked(&self, k: i64) -> RingElem {
        if k == 0 {
            return self.clone();
        }
        let mut out = RingElem::zero();
        for (m, c) in &self.terms {
            out.add_term(m.map_gens(|g| g.shifted(k)), c.clone());
        }
        out
    }

    /// Shift that panics on derivative-picture input; used where the picture is structural.
    pub fn sh(&self, k: i64) -> RingElem {
        self.shift(k).expect("shift-picture element")
    }

    /// Applies a generator substitution; generators mapped to `None` are kept.
    pub fn subst(&self, f: &impl Fn(&Generator) -> Option<RingElem>) -> Result<RingElem, RingError> {
        let mut cache: BTreeMap<Generator, RingElem> = BTreeMap::new();
        let mut out = RingElem::zero();
        for (m, c) in &self.terms {
            let mut acc = RingElem::constant(c.clone());
            for (g, e) in &m.0 {
                let base = match cache.get(g) {
                    Some(b) => b.clone(),
                    None => {
                        let b = f(g).unwrap_or_else(|| RingElem::gen(*g));
                        cache.insert(*g, b.clone());
                        b
                    }
                };
                acc = &acc * &base.powi(*e)?;
            }
            out += &acc;
        }
        Ok(out)
    }

    /// Partial derivative of a single generator `g` with respect to the coordinate `x`.
    fn gen_partial(g: &Generator, x: &Generator) -> Result<RingElem, RingError> {
        use Generator as G;
        if g == x {
            return Ok(RingElem::one());
        }
        let v1 = G::Deriv(JetVar::V1, 0);
        let v2 = G::Deriv(JetVar::V2, 0);
        let e = || RingElem::tr(Trans::ExpV2);
        let d = || RingElem::tr(Trans::InvExpV2MinusV1);
        Ok(match g {
            G::Trans(Trans::ExpV2) if *x == v2 => e(),
            G::Trans(Trans::LogV1) if *x == v1 => RingElem::gen_pow(v1, -1),
            G::Trans(Trans::SqrtV1ExpV2) if *x == v1 => {
                (&RingElem::tr(Trans::SqrtV1ExpV2) * &RingElem::gen_pow(v1, -1)).scale(&rat(1, 2))
            }
            G::Trans(Trans::SqrtV1ExpV2) if *x == v2 => RingElem::tr(Trans::SqrtV1ExpV2).scale(&rat(1, 2)),
            G::Trans(Trans::LogExpV2MinusV1) if *x == v1 => -d(),
            G::Trans(Trans::LogExpV2MinusV1) if *x == v2 => &e() * &d(),
            G::Trans(Trans::InvExpV2MinusV1) if *x == v1 => d().pow(2),
            G::Trans(Trans::InvExpV2MinusV1) if *x == v2 => -(&e() * &d().pow(2)),
            G::Trans(Trans::LogQminusLogP(k)) => match *x {
                G::Shift(Field::Q, o) if o == *k => RingElem::gen_pow(*x, -1),
                G::Shift(Field::P, o) if o == *k => -RingElem::gen_pow(*x, -1),
                G::Deriv(JetVar::Q, 0) if *k == 0 => RingElem::gen_pow(*x, -1),
                G::Deriv(JetVar::P, 0) if *k == 0 => -RingElem::gen_pow(*x, -1),
                _ => RingElem::zero(),
            },
            _ => RingElem::zero(),
        })
    }

    /// Coordinates a generator depends on (itself for jets).
    fn gen_deps(g: &Generator) -> Vec<Generator> {
        use Generator as G;
        let v1 = G::Deriv(JetVar::V1, 0);
        let v2 = G::Deriv(JetVar::V2, 0);
        match g {
            G::Shift(..) | G::Deriv(..) => vec![*g],
            G::Trans(Trans::ExpV2) => vec![v2],
            G::Trans(Trans::LogV1) => vec![v1],
            G::Trans(Trans::SqrtV1ExpV2 | Trans::LogExpV2MinusV1 | Trans::InvExpV2MinusV1) => vec![v1, v2],
            G::Trans(Trans::LogQminusLogP(k)) => vec![G::Shift(Field::P, *k), G::Shift(Field::Q, *k)],
        }
    }

    /// Coordinates (jets) this element depends on, directly or through transcendental generators.
    pub fn dependencies(&self) -> Vec<Generator> {
        let deriv = matches!(self.picture(), Ok(Picture::Deriv));
        let mut out: Vec<Generator> = Vec::new();
        for g in self.generators() {
            for d in Self::gen_deps(&g) {
                let d = match d {
                    Generator::Shift(f, 0) if deriv => Generator::Deriv(f.into(), 0),
                    d => d,
                };
                out.push(d);
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// `∂e/∂x` for a coordinate generator `x`, chain rule through transcendental generators.
    pub fn diff(&self, x: &Generator) -> RingElem {
        let mut out = RingElem::zero();
        for (m, c) in &self.terms {
            for (g, e) in &m.0 {
                let dg = Self::gen_partial(g, x).expect("derivation table is total");
                if dg.is_zero() {
                    continue;
                }
                let rest = Monomial::gen(*g, e - 1).mul(&m.without(g));
                out += &dg.mul_monomial(&rest, &(c * rint(*e as i64)));
            }
        }
        out
    }

    /// `∂x e` in the derivative picture (Leibniz rule plus the derivation table).
    pub fn total_x_derivative(&self) -> Result<RingElem, RingError> {
        if self.picture()? == Picture::Shift {
            return Err(RingError::PictureMismatch("total_x_derivative applied to shift-picture element"));
        }
        let mut out = RingElem::zero();
        for x in self.dependencies() {
            let next = match x {
                Generator::Deriv(v, n) => Generator::Deriv(v, n + 1),
                Generator::Shift(f, 0) => Generator::Deriv(JetVar::from(f), 1),
                _ => return Err(RingError::PictureMismatch("shift jet in derivative picture")),
            };
            let dx = match x {
                Generator::Shift(f, 0) => Generator::Deriv(JetVar::from(f), 0),
                x => x,
            };
            out += &(&self.diff(&dx) * &RingElem::gen(next));
        }
        Ok(out)
    }

    /// Evolutionary derivative: each `f^{(k)}` is differentiated into `Λ^k df`.
    pub fn prolong(&self, dp: &RingElem, dq: &RingElem) -> RingElem {
        let mut out = RingElem::zero();
        for x in self.dependencies() {
            if let Generator::Shift(f, k) = x {
                let d = match f {
                    Field::P => dp,
                    Field::Q => dq,
                };
                if d.is_zero() {
                    continue;
                }
                out += &(&self.diff(&x) * &d.shift_unchecked(k));
            }
        }
        out
    }

    /// Expansion of `Λ = e^{ε∂x}` to order `ε^n`.
    pub fn eps_expand(&self, n: usize) -> Result<EpsSeries, RingError> {
        if self.picture()? == Picture::Deriv {
            return Err(RingError::PictureMismatch("eps_expand applied to derivative-picture element"));
        }
        let mut cache: BTreeMap<Generator, EpsSeries> = BTreeMap::new();
        let mut out = EpsSeries::zero(n);
        for (m, c) in &self.terms {
            let mut acc = EpsSeries::constant(RingElem::constant(c.clone()), n);
            for (g, e) in &m.0 {
                let s = cache.entry(*g).or_insert_with(|| gen_eps_series(g, n)).clone();
                acc = acc.mul(&s.powi(*e)?);
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Finds `g` with `Λg - g = self`.
    pub fn solve_total_difference(&self) -> Result<RingElem, RingError> {
        if self.picture()? == Picture::Deriv {
            return Err(RingError::PictureMismatch("solve_total_difference in derivative picture"));
        }
        let mut classes: BTreeMap<Monomial, Rat> = BTreeMap::new();
        let mut g = RingElem::zero();
        for (m, c) in &self.terms {
            let Some(s) = m.offsets().min() else {
                *classes.entry(m.clone()).or_insert_with(Rat::zero) += c;
                continue;
            };
            let m0 = m.map_gens(|h| h.shifted(-s));
            *classes.entry(m0.clone()).or_insert_with(Rat::zero) += c;
            if s > 0 {
                for j in 0..s {
                    g.add_term(m0.map_gens(|h| h.shifted(j)), c.clone());
                }
            } else {
                for j in s..0 {
                    g.add_term(m0.map_gens(|h| h.shifted(j)), -c.clone());
                }
            }
        }
        let mut residual = RingElem::zero();
        for (m0, c) in classes {
            residual.add_term(m0, c);
        }
        if !residual.is_zero() {
            return Err(RingError::NotExact(residual.to_string()));
        }
        Ok(g)
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide.
    pub fn div_exact(&self, d: &RingElem) -> Option<RingElem> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(RingElem::zero());
        }
        let (lt_d, lc_d) = d.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let lo_d = d.terms.keys().next()?.clone();
        let bound = self.terms.keys().next()?.mul(&lo_d.inv());
        let inv_lt = lt_d.inv();
        let mut r = self.clone();
        let mut q = RingElem::zero();
        let mut guard = 0usize;
        while let Some((lt_r, lc_r)) = r.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let t = lt_r.mul(&inv_lt);
            if t < bound {
                return None;
            }
            let c = lc_r / &lc_d;
            r -= &d.mul_monomial(&t, &c);
            q.add_term(t, c);
            guard += 1;
            if guard > 200_000 {
                return None;
            }
        }
        Some(q)
    }

    /// Content normalisation: divides by the leading coefficient, returning it.
    pub fn make_monic(&self) -> (Rat, RingElem) {
        match self.leading() {
            None => (Rat::one(), RingElem::zero()),
            Some((_, c)) => {
                let c = c.clone();
                (c.clone(), self.scale(&c.recip()))
            }
        }
    }

    /// Floating-point evaluation with a caller-supplied generator valuation.
    pub fn eval_f64(&self, val: &impl Fn(&Generator) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut x = c.to_f64().unwrap_or(f64::NAN);
                for (g, e) in &m.0 {
                    x *= val(g).powi(*e);
                }
                x
            })
            .sum()
    }

    /// Largest absolute coefficient, as a size diagnostic.
    pub fn max_abs_coeff(&self) -> Rat {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(Rat::zero)
    }
}

fn gen_eps_series(g: &Generator, n: usize) -> EpsSeries {
    match *g {
        Generator::Shift(f, k) => {
            let mut s = EpsSeries::zero(n);
            let mut kp = Rat::one();
            for i in 0..=n {
                s.coeffs[i] = RingElem::dj(f.into(), i as u32).scale(&(&kp / factorial(i as u32)));
                kp *= rint(k);
            }
            s
        }
        Generator::Trans(Trans::LogQminusLogP(k)) => {
            let log_ratio = |f: Field| {
                let base = RingElem::dj(f.into(), 0);
                let inv = base.inv_monomial().unwrap();
                let full = gen_eps_series(&Generator::Shift(f, k), n);
                let mut x = full.scale_elem(&inv);
                x.coeffs[0] = RingElem::zero();
                x.log1p()
            };
            let mut s = EpsSeries::constant(RingElem::tr(Trans::LogQminusLogP(0)), n);
            s = s.add(&log_ratio(Field::Q)).sub(&log_ratio(Field::P));
            s
        }
        g => EpsSeries::constant(RingElem::gen(g), n),
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a RingElem> for &'a RingElem {
    type Output = RingElem;
    fn add(self, rhs: &RingElem) -> RingElem {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a> Sub<&'a RingElem> for &'a RingElem {
    type Output = RingElem;
    fn sub(self, rhs: &RingElem) -> RingElem {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&RingElem> for RingElem {
    fn add_assign(&mut self, rhs: &RingElem) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&RingElem> for RingElem {
    fn sub_assign(&mut self, rhs: &RingElem) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl Add for RingElem {
    type Output = RingElem;
    fn add(mut self, rhs: RingElem) -> RingElem {
        self += &rhs;
        self
    }
}

impl Sub for RingElem {
    type Output = RingElem;
    fn sub(mut self, rhs: RingElem) -> RingElem {
        self -= &rhs;
        self
    }
}

impl<'a> Mul<&'a RingElem> for &'a RingElem {
    type Output = RingElem;
    fn mul(self, rhs: &RingElem) -> RingElem {
        let mut out = RingElem::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Mul for RingElem {
    type Output = RingElem;
    fn mul(self, rhs: RingElem) -> RingElem {
        &self * &rhs
    }
}

impl Neg for RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        RingElem { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl Neg for &RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        -self.clone()
    }
}

/// Truncated power series in `ε` with derivative-picture coefficients; `coeffs[i]` multiplies `ε^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsSeries {
    pub coeffs: Vec<RingElem>,
}

impl EpsSeries {
    pub fn zero(n: usize) -> Self {
        EpsSeries { coeffs: vec![RingElem::zero(); n + 1] }
    }

    pub fn constant(c: RingElem, n: usize) -> Self {
        let mut s = Self::zero(n);
        s.coeffs[0] = c;
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> &RingElem {
        &self.coeffs[i]
    }

    pub fn add(&self, o: &EpsSeries) -> EpsSeries {
        let n = self.order().min(o.order());
        EpsSeries { coeffs: (0..=n).map(|i| &self.coeffs[i] + &o.coeffs[i]).collect() }
    }

    pub fn sub(&self, o: &EpsSeries) -> EpsSeries {
        let n = self.order().min(o.order());
        EpsSeries { coeffs: (0..=n).map(|i| &self.coeffs[i] - &o.coeffs[i]).collect() }
    }

    pub fn mul(&self, o: &EpsSeries) -> EpsSeries {
        let n = self.order().min(o.order());
        let mut out = Self::zero(n);
        for i in 0..=n {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=(n - i) {
                if o.coeffs[j].is_zero() {
                    continue;
                }
                let p = &self.coeffs[i] * &o.coeffs[j];
                out.coeffs[i + j] += &p;
            }
        }
        out
    }

    pub fn scale_elem(&self, c: &RingElem) -> EpsSeries {
        EpsSeries { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// `log(1 + x)` for a series with vanishing constant term.
    fn log1p(&self) -> EpsSeries {
        let n = self.order();
        let mut out = Self::zero(n);
        let mut pw = self.clone();
        for j in 1..=n {
            let c = rat(if j % 2 == 1 { 1 } else { -1 }, j as i64);
            out = out.add(&EpsSeries { coeffs: pw.coeffs.iter().map(|a| a.scale(&c)).collect() });
            pw = pw.mul(self);
        }
        out
    }

    /// Integer power; negative powers need a single-term `ε^0` coefficient.
    pub fn powi(&self, e: i32) -> Result<EpsSeries, RingError> {
        let n = self.order();
        if e >= 0 {
            let mut acc = EpsSeries::constant(RingElem::one(), n);
            for _ in 0..e {
                acc = acc.mul(self);
            }
            return Ok(acc);
        }
        let inv0 = self.coeffs[0].inv_monomial()?;
        let mut x = self.scale_elem(&inv0);
        x.coeffs[0] = RingElem::zero();
        // (1+x)^e = Σ_j binom(e, j) x^j
        let mut out = EpsSeries::constant(RingElem::one(), n);
        let mut pw = x.clone();
        let mut binom = Rat::one();
        for j in 1..=n {
            binom = binom * rint(e as i64 - (j as i64 - 1)) / rint(j as i64);
            out = out.add(&EpsSeries { coeffs: pw.coeffs.iter().map(|a| a.scale(&binom)).collect() });
            pw = pw.mul(&x);
        }
        Ok(out.scale_elem(&inv0.pow((-e) as u32)))
    }

    pub fn total_x_derivative(&self) -> Result<EpsSeries, RingError> {
        Ok(EpsSeries { coeffs: self.coeffs.iter().map(|c| c.total_x_derivative()).collect::<Result<_, _>>()? })
    }
}

/// Rational function `num / Π den_i^{k_i}` with monic, pairwise distinct denominator factors.
#[derive(Clone, Debug)]
pub struct RatFunc {
    pub num: RingElem,
    pub den: Vec<(RingElem, u32)>,
}

impl RatFunc {
    pub fn from_elem(e: RingElem) -> Self {
        RatFunc { num: e, den: Vec::new() }
    }

    /// `num / den`; a single-term `den` is absorbed into the numerator.
    pub fn new(num: RingElem, den: RingElem) -> Self {
        if let Ok(inv) = den.inv_monomial() {
            return RatFunc::from_elem(&num * &inv);
        }
        let (c, monic) = den.make_monic();
        RatFunc { num: num.scale(&c.recip()), den: vec![(monic, 1)] }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn den_product(den: &[(RingElem, u32)]) -> RingElem {
        den.iter().fold(RingElem::one(), |acc, (f, k)| &acc * &f.pow(*k))
    }

    pub fn den_elem(&self) -> RingElem {
        Self::den_product(&self.den)
    }

    fn lcm(a: &[(RingElem, u32)], b: &[(RingElem, u32)]) -> Vec<(RingElem, u32)> {
        let mut out: Vec<(RingElem, u32)> = a.to_vec();
        for (f, k) in b {
            match out.iter_mut().find(|(g, _)| g == f) {
                Some(e) => e.1 = e.1.max(*k),
                None => out.push((f.clone(), *k)),
            }
        }
        out
    }

    fn lift(&self, to: &[(RingElem, u32)]) -> RingElem {
        let mut extra = Vec::new();
        for (f, k) in to {
            let have = self.den.iter().find(|(g, _)| g == f).map(|x| x.1).unwrap_or(0);
            if *k > have {
                extra.push((f.clone(), *k - have));
            }
        }
        &self.num * &Self::den_product(&extra)
    }

    pub fn add(&self, o: &RatFunc) -> RatFunc {
        let den = Self::lcm(&self.den, &o.den);
        RatFunc { num: &self.lift(&den) + &o.lift(&den), den }
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }

    pub fn sub(&self, o: &RatFunc) -> RatFunc {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &RatFunc) -> RatFunc {
        let mut den = self.den.clone();
        for (f, k) in &o.den {
            match den.iter_mut().find(|(g, _)| g == f) {
                Some(e) => e.1 += *k,
                None => den.push((f.clone(), *k)),
            }
        }
        RatFunc { num: &self.num * &o.num, den }
    }

    pub fn mul_elem(&self, e: &RingElem) -> RatFunc {
        RatFunc { num: &self.num * e, den: self.den.clone() }
    }

    /// `Λ^k` applied to numerator and denominator factors.
    pub fn shift(&self, k: i64) -> RatFunc {
        let mut den = Vec::new();
        for (f, e) in &self.den {
            den.push((f.shift_unchecked(k), *e));
        }
        RatFunc { num: self.num.shift_unchecked(k), den }
    }

    /// Quotient rule for `∂/∂x` with `x` a coordinate generator.
    pub fn diff(&self, x: &Generator) -> RatFunc {
        let mut out = RatFunc { num: self.num.diff(x), den: self.den.clone() };
        for (f, k) in &self.den {
            let df = f.diff(x);
            if df.is_zero() {
                continue;
            }
            let mut den = self.den.clone();
            for e in den.iter_mut() {
                if &e.0 == f {
                    e.1 += 1;
                }
            }
            let term = RatFunc { num: (&self.num * &df).scale(&-rint(*k as i64)), den };
            out = out.add(&term);
        }
        out
    }

    /// Equality by cross multiplication.
    pub fn equals(&self, o: &RatFunc) -> bool {
        self.sub(o).is_zero()
    }

    pub fn prolong(&self, dp: &RingElem, dq: &RingElem) -> RatFunc {
        let mut out = RatFunc { num: RingElem::zero(), den: Vec::new() };
        for x in self.dependencies() {
            if let Generator::Shift(f, k) = x {
                let d = match f {
                    Field::P => dp,
                    Field::Q => dq,
                };
                out = out.add(&self.diff(&x).mul_elem(&d.shift_unchecked(k)));
            }
        }
        out
    }

    pub fn dependencies(&self) -> Vec<Generator> {
        let mut out = self.num.dependencies();
        for (f, _) in &self.den {
            out.extend(f.dependencies());
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn eval_f64(&self, val: &impl Fn(&Generator) -> f64) -> f64 {
        let mut x = self.num.eval_f64(val);
        for (f, k) in &self.den {
            x /= f.eval_f64(val).powi(*k as i32);
        }
        x
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_empty() {
            return write!(f, "{}", self.num);
        }
        write!(f, "({})/(", self.num)?;
        for (i, (d, k)) in self.den.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if *k == 1 {
                write!(f, "({d})")?;
            } else {
                write!(f, "({d})^{k}")?;
            }
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(k: i64) -> RingElem {
        RingElem::p(k)
    }
    fn q(k: i64) -> RingElem {
        RingElem::q(k)
    }

    #[test]
    fn shift_examples() {
        let e = &q(0) * &p(0).powi(-1).unwrap();
        assert_eq!(e.sh(1), &q(1) * &p(1).powi(-1).unwrap());
        let e = q(0) - p(0);
        assert_eq!(e.sh(0), e);
        let e = &q(0) * &(q(-1) - p(-1));
        assert_eq!(e.sh(1), &q(1) * &(q(0) - p(0)));
    }

    #[test]
    fn shift_rejects_derivative_picture() {
        let e = RingElem::dj(JetVar::P, 1);
        assert!(matches!(e.shift(1), Err(RingError::PictureMismatch(_))));
    }

    #[test]
    fn total_x_derivative_examples() {
        let (pp, qq) = (RingElem::dj(JetVar::P, 0), RingElem::dj(JetVar::Q, 0));
        let (px, qx) = (RingElem::dj(JetVar::P, 1), RingElem::dj(JetVar::Q, 1));
        assert_eq!((&pp * &qq).total_x_derivative().unwrap(), &px * &qq + &pp * &qx);
        let v1 = RingElem::dj(JetVar::V1, 0);
        let v1x = RingElem::dj(JetVar::V1, 1);
        assert_eq!(v1.pow(2).total_x_derivative().unwrap(), (&v1 * &v1x).scale(&rint(2)));
        let e = RingElem::tr(Trans::ExpV2);
        assert_eq!(e.total_x_derivative().unwrap(), &e * &RingElem::dj(JetVar::V2, 1));
        assert!(p(1).total_x_derivative().is_err());
    }

    #[test]
    fn eps_expand_examples() {
        let s = p(1).eps_expand(2).unwrap();
        assert_eq!(s.coeff(0), &RingElem::dj(JetVar::P, 0));
        assert_eq!(s.coeff(1), &RingElem::dj(JetVar::P, 1));
        assert_eq!(s.coeff(2), &RingElem::dj(JetVar::P, 2).scale(&rat(1, 2)));
        let s = (q(0) - p(0)).eps_expand(1).unwrap();
        assert_eq!(s.coeff(1), &RingElem::zero());
        let (pp, qq) = (RingElem::dj(JetVar::P, 0), RingElem::dj(JetVar::Q, 0));
        let s = (&q(1) * &(q(0) - p(0))).eps_expand(1).unwrap();
        assert_eq!(s.coeff(0), &(&qq * &(&qq - &pp)));
        assert_eq!(s.coeff(1), &(&RingElem::dj(JetVar::Q, 1) * &(&qq - &pp)));
    }

    #[test]
    fn eps_expand_negative_power_and_log() {
        // 1/P^+ = 1/P - ε P_x/P^2 + ...
        let s = p(1).powi(-1).unwrap().eps_expand(1).unwrap();
        let pp = RingElem::dj(JetVar::P, 0);
        assert_eq!(s.coeff(1), &-(&RingElem::dj(JetVar::P, 1) * &pp.powi(-2).unwrap()));
        // log(Q/P)^+ = log(Q/P) + ε (Q_x/Q - P_x/P)
        let s = RingElem::tr(Trans::LogQminusLogP(1)).eps_expand(1).unwrap();
        let expect = RingElem::tr(Trans::LogQminusLogP(0)).total_x_derivative().unwrap();
        assert_eq!(s.coeff(1), &expect);
    }

    #[test]
    fn solve_total_difference_examples() {
        assert_eq!((q(1) - q(0)).solve_total_difference().unwrap(), q(0));
        assert!(matches!(q(0).solve_total_difference(), Err(RingError::NotExact(_))));
        let e = &q(1) * &p(1) - &q(0) * &p(0) + q(1) - q(0);
        assert_eq!(e.solve_total_difference().unwrap(), &q(0) * &p(0) + q(0));
    }

    #[test]
    fn div_exact_recovers_factor() {
        let a = q(-1) - p(-1);
        let b = &q(0) * &p(2) + p(0).powi(-1).unwrap();
        assert_eq!((&a * &b).div_exact(&a), Some(b));
        assert_eq!(q(0).div_exact(&(q(0) - p(0))), None);
    }

    #[test]
    fn monomial_order_is_multiplicative() {
        let a = Monomial::gen(Generator::Shift(Field::P, 0), 2);
        let b = Monomial::gen(Generator::Shift(Field::Q, 1), 1).mul(&Monomial::gen(Generator::Shift(Field::P, 0), 1));
        let c = Monomial::gen(Generator::Shift(Field::Q, -1), -1);
        assert_eq!(a.cmp(&b), a.mul(&c).cmp(&b.mul(&c)));
    }

    #[test]
    fn display_is_canonical() {
        let e = &q(1) * &p(0) - RingElem::constant(rat(3, 2));
        assert_eq!(e.to_string(), "P*Q[+1] - 3/2");
    }

    #[test]
    fn ratfunc_quotient_rule() {
        let x = Generator::Shift(Field::P, 0);
        let f = RatFunc::new(RingElem::one(), q(0) - p(0));
        let df = f.diff(&x);
        let expect = RatFunc { num: RingElem::one(), den: vec![((q(0) - p(0)).make_monic().1, 2)] };
        assert!(df.equals(&expect));
    }

    fn arb_elem() -> impl Strategy<Value = RingElem> {
        let term = (-3i64..=3, 0usize..2, -2i64..=2, -1i32..=2, -3i64..=3, 1i64..=3);
        prop::collection::vec(term, 0..5).prop_map(|ts| {
            let mut e = RingElem::zero();
            for (off, v, off2, ex, n, d) in ts {
                let f = if v == 0 { Field::P } else { Field::Q };
                let m = Monomial::gen(Generator::Shift(f, off), ex)
                    .mul(&Monomial::gen(Generator::Shift(Field::Q, off2), 1));
                e.add_term(m, rat(n, d));
            }
            e
        })
    }

    proptest! {
        #[test]
        fn shift_composes(e in arb_elem(), k in -3i64..3, m in -3i64..3) {
            prop_assert_eq!(e.sh(k).sh(m), e.sh(k + m));
        }

        #[test]
        fn ring_axioms(a in arb_elem(), b in arb_elem(), c in arb_elem()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        }

        #[test]
        fn solved_differences_telescope(e in arb_elem()) {
            let d = e.sh(1) - e.clone();
            let g = d.solve_total_difference().unwrap();
            prop_assert_eq!(g.sh(1) - g, d);
        }

        #[test]
        fn eps_expand_intertwines_shift(e in arb_elem()) {
            // Λ corresponds to e^{ε∂x} on ε-series.
            let n = 2;
            let lhs = e.sh(1).eps_expand(n).unwrap();
            let base = e.eps_expand(n).unwrap();
            let d1 = base.total_x_derivative().unwrap();
            let d2 = d1.total_x_derivative().unwrap();
            prop_assert_eq!(lhs.coeff(0), base.coeff(0));
            prop_assert_eq!(lhs.coeff(1), &(base.coeff(1) + d1.coeff(0)));
            prop_assert_eq!(lhs.coeff(2), &(&(base.coeff(2) + d1.coeff(1)) + &d2.coeff(0).scale(&rat(1, 2))));
        }
    }
}
