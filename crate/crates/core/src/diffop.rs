//! Shift operators `Σ a_i Λ^i` with ring coefficients.
//!
//! A `LaurentOp` knows its coefficients exactly on a window: below `floor`
//! and above `ceil` (when set) coefficients are unknown rather than zero.
//! Products shrink the window according to the extent of the other factor.

use std::collections::BTreeMap;
use std::fmt;

use crate::ring::{Field, RingElem};

const INF: i64 = i64::MAX / 4;

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentOp {
    coeffs: BTreeMap<i64, RingElem>,
    floor: Option<i64>,
    ceil: Option<i64>,
    truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InverseKind {
    /// `(1 - QΛ^{-1})^{-1} = Σ_k (QΛ^{-1})^k`
    OneMinusQLambdaInv,
    /// `(Λ - P)^{-1} = Σ_k (Λ^{-1}P)^k Λ^{-1}`, descending powers.
    LambdaMinusP,
    /// `(Λ - P)^{-1} = -Σ_k (P P^+ ... P^{(k)})^{-1} Λ^k`, ascending powers.
    LambdaMinusPAscending,
}

/// Window bound `f + ext` where `f` is a truncation edge and `ext` the other factor's extent.
fn sat_add(f: i64, ext: i64) -> i64 {
    if f <= -INF {
        -INF
    } else if ext >= INF {
        INF
    } else if ext <= -INF {
        -INF
    } else {
        f + ext
    }
}

impl LaurentOp {
    pub fn zero() -> Self {
        LaurentOp { coeffs: BTreeMap::new(), floor: None, ceil: None, truncated: false }
    }

    pub fn from_coeffs(it: impl IntoIterator<Item = (i64, RingElem)>) -> Self {
        let mut op = Self::zero();
        for (k, c) in it {
            op.add_coeff(k, &c);
        }
        op
    }

    /// `Λ^k`
    pub fn lambda(k: i64) -> Self {
        Self::from_coeffs([(k, RingElem::one())])
    }

    /// Multiplication operator by `a`.
    pub fn mult(a: RingElem) -> Self {
        Self::from_coeffs([(0, a)])
    }

    /// `a Λ^k`
    pub fn monomial(a: RingElem, k: i64) -> Self {
        Self::from_coeffs([(k, a)])
    }

    fn add_coeff(&mut self, k: i64, c: &RingElem) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(k).or_insert_with(RingElem::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&k);
        }
    }

    pub fn floor(&self) -> Option<i64> {
        self.floor
    }

    pub fn ceil(&self) -> Option<i64> {
        self.ceil
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn is_exact(&self) -> bool {
        self.floor.is_none() && self.ceil.is_none()
    }

    pub fn coeff(&self, k: i64) -> RingElem {
        self.coeffs.get(&k).cloned().unwrap_or_else(RingElem::zero)
    }

    pub fn coeffs(&self) -> impl DoubleEndedIterator<Item = (&i64, &RingElem)> {
        self.coeffs.iter()
    }

    /// Highest power present.
    pub fn upper(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn lower(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    /// True when the coefficient of `Λ^k` is known.
    pub fn knows(&self, k: i64) -> bool {
        self.floor.map_or(true, |f| k >= f) && self.ceil.map_or(true, |c| k <= c)
    }

    fn max_extent(&self) -> i64 {
        if self.ceil.is_some() {
            INF
        } else {
            self.upper().unwrap_or(-INF)
        }
    }

    fn min_extent(&self) -> i64 {
        if self.floor.is_some() {
            -INF
        } else {
            self.lower().unwrap_or(INF)
        }
    }

    /// Restricts the known window; coefficients outside are dropped.
    pub fn restrict(&self, lo: Option<i64>, hi: Option<i64>) -> LaurentOp {
        let floor = match (self.floor, lo) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let ceil = match (self.ceil, hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let mut out = LaurentOp { coeffs: BTreeMap::new(), floor, ceil, truncated: self.truncated };
        for (k, c) in &self.coeffs {
            if out.knows(*k) {
                out.coeffs.insert(*k, c.clone());
            } else {
                out.truncated = true;
            }
        }
        if floor.is_some() || ceil.is_some() {
            out.truncated = true;
        }
        out
    }

    pub fn add(&self, o: &LaurentOp) -> LaurentOp {
        self.combine(o, false)
    }

    pub fn sub(&self, o: &LaurentOp) -> LaurentOp {
        self.combine(o, true)
    }

    fn combine(&self, o: &LaurentOp, negate: bool) -> LaurentOp {
        let floor = match (self.floor, o.floor) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let ceil = match (self.ceil, o.ceil) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let mut out = LaurentOp { coeffs: self.coeffs.clone(), floor, ceil, truncated: self.truncated || o.truncated };
        for (k, c) in &o.coeffs {
            if negate {
                out.add_coeff(*k, &-c);
            } else {
                out.add_coeff(*k, c);
            }
        }
        out.coeffs.retain(|k, _| floor.map_or(true, |f| *k >= f) && ceil.map_or(true, |c| *k <= c));
        out
    }

    pub fn scale(&self, c: &crate::ring::Rat) -> LaurentOp {
        let mut out = self.clone();
        out.coeffs = self.coeffs.iter().map(|(k, a)| (*k, a.scale(c))).filter(|(_, a)| !a.is_zero()).collect();
        out
    }

    /// Left multiplication of every coefficient by `a`.
    pub fn left_mul(&self, a: &RingElem) -> LaurentOp {
        let mut out = self.clone();
        out.coeffs = self.coeffs.iter().map(|(k, c)| (*k, a * c)).filter(|(_, c)| !c.is_zero()).collect();
        out
    }

    pub fn mul(&self, o: &LaurentOp) -> LaurentOp {
        op_mul_window(self, o, None, None)
    }

    pub fn commutator(&self, o: &LaurentOp) -> LaurentOp {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn pow(&self, n: u32) -> LaurentOp {
        pow_window(self, n, None, None)
    }

    /// Formal adjoint: `Σ a_i Λ^i ↦ Σ Λ^{-i} a_i`; exact operators only.
    pub fn adjoint(&self) -> LaurentOp {
        assert!(self.is_exact(), "adjoint of a truncated operator");
        LaurentOp::from_coeffs(self.coeffs.iter().map(|(k, a)| (-k, a.sh(-k))))
    }

    /// Action on a function: `Σ a_i Λ^i f`.
    pub fn apply(&self, f: &RingElem) -> RingElem {
        assert!(self.is_exact(), "apply of a truncated operator");
        let mut out = RingElem::zero();
        for (k, a) in &self.coeffs {
            out += &(a * &f.sh(*k));
        }
        out
    }

    /// Maps every coefficient, keeping the window.
    pub fn map_coeffs(&self, f: impl Fn(&RingElem) -> RingElem) -> LaurentOp {
        let mut out = self.clone();
        out.coeffs = self.coeffs.iter().map(|(k, c)| (*k, f(c))).filter(|(_, c)| !c.is_zero()).collect();
        out
    }

    /// Coefficient-wise equality on the common known window.
    pub fn window_eq(&self, o: &LaurentOp) -> bool {
        let keys: std::collections::BTreeSet<i64> = self.coeffs.keys().chain(o.coeffs.keys()).copied().collect();
        keys.into_iter().filter(|k| self.knows(*k) && o.knows(*k)).all(|k| self.coeff(k) == o.coeff(k))
    }
}

/// `(AB)_n = Σ_{i+j=n} a_i Λ^i(b_j)`, optionally restricted to `lo ≤ n ≤ hi`.
pub fn op_mul_window(a: &LaurentOp, b: &LaurentOp, lo: Option<i64>, hi: Option<i64>) -> LaurentOp {
    let fa = a.floor.unwrap_or(-INF);
    let fb = b.floor.unwrap_or(-INF);
    let ca = a.ceil.unwrap_or(INF);
    let cb = b.ceil.unwrap_or(INF);
    let floor_raw = sat_add(fa, b.max_extent()).max(sat_add(fb, a.max_extent()));
    let ceil_raw = (-sat_add(-ca, -b.min_extent())).min(-sat_add(-cb, -a.min_extent()));
    let mut floor = (floor_raw > -INF).then_some(floor_raw);
    let mut ceil = (ceil_raw < INF).then_some(ceil_raw);
    if let Some(l) = lo {
        floor = Some(floor.map_or(l, |f| f.max(l)));
    }
    if let Some(h) = hi {
        ceil = Some(ceil.map_or(h, |c| c.min(h)));
    }
    let mut out = LaurentOp { coeffs: BTreeMap::new(), floor, ceil, truncated: a.truncated || b.truncated };
    let mut dropped = false;
    for (i, ai) in &a.coeffs {
        for (j, bj) in &b.coeffs {
            let n = i + j;
            if !out.knows(n) {
                dropped = true;
                continue;
            }
            let t = ai * &bj.shift_unchecked(*i);
            out.add_coeff(n, &t);
        }
    }
    out.truncated |= dropped || floor.is_some() || ceil.is_some();
    out
}

/// `A^n` keeping only what is needed for powers in `[lo, hi]` of the result.
pub fn pow_window(a: &LaurentOp, n: u32, lo: Option<i64>, hi: Option<i64>) -> LaurentOp {
    if n == 0 {
        return LaurentOp::lambda(0);
    }
    let up = a.upper().unwrap_or(0).max(0);
    let down = a.lower().unwrap_or(0).min(0);
    let mut acc = a.clone();
    for j in 1..n {
        let rest = (n - j - 1) as i64;
        let l = lo.map(|l| l - rest * up);
        let h = hi.map(|h| h - rest * down);
        acc = op_mul_window(a, &acc, l, h);
    }
    acc
}

pub fn plus_part(a: &LaurentOp) -> LaurentOp {
    let mut out = LaurentOp {
        coeffs: a.coeffs.range(0..).map(|(k, c)| (*k, c.clone())).collect(),
        floor: a.floor.filter(|f| *f > 0),
        ceil: a.ceil,
        truncated: a.truncated,
    };
    if out.ceil.is_some_and(|c| c < 0) {
        out.ceil = Some(-1);
    }
    out
}

pub fn minus_part(a: &LaurentOp) -> LaurentOp {
    LaurentOp {
        coeffs: a.coeffs.range(..0).map(|(k, c)| (*k, c.clone())).collect(),
        floor: a.floor,
        ceil: a.ceil.filter(|c| *c < -1),
        truncated: a.truncated,
    }
}

/// Coefficient of `Λ^0`; zero when structurally absent.
pub fn residue(a: &LaurentOp) -> RingElem {
    debug_assert!(a.knows(0) || a.floor.is_some_and(|f| f > 0));
    a.coeff(0)
}

pub fn geometric_inverse(kind: InverseKind, depth: u32) -> LaurentOp {
    assert!(depth >= 1);
    let d = depth as i64;
    let mut op = LaurentOp::zero();
    match kind {
        InverseKind::OneMinusQLambdaInv => {
            let mut c = RingElem::one();
            for k in 0..=d {
                op.add_coeff(-k, &c);
                c = &c * &RingElem::q(-k);
            }
            op.floor = Some(-d);
        }
        InverseKind::LambdaMinusP => {
            let mut c = RingElem::one();
            for k in 0..d {
                op.add_coeff(-k - 1, &c);
                c = &c * &RingElem::p(-k - 1);
            }
            op.floor = Some(-d);
        }
        InverseKind::LambdaMinusPAscending => {
            let mut c = RingElem::one();
            for k in 0..=d {
                c = &c * &RingElem::p(k).powi(-1).expect("monomial");
                op.add_coeff(k, &-c.clone());
            }
            op.ceil = Some(d);
        }
    }
    op.truncated = true;
    op
}

/// `Λ - P`
pub fn lambda_minus(f: Field) -> LaurentOp {
    LaurentOp::from_coeffs([(1, RingElem::one()), (0, -RingElem::sj(f, 0))])
}

/// `1 - QΛ^{-1}`
pub fn one_minus_q_lambda_inv() -> LaurentOp {
    LaurentOp::from_coeffs([(0, RingElem::one()), (-1, -RingElem::q(0))])
}

impl fmt::Display for LaurentOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = self.ceil {
            write!(f, "O(L^{}) + ", c + 1)?;
        }
        if self.coeffs.is_empty() {
            write!(f, "0")?;
        }
        for (i, (k, c)) in self.coeffs.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "({c})")?,
                k => write!(f, "({c})*L^{k}")?,
            }
        }
        if let Some(fl) = self.floor {
            write!(f, " + O(L^{})", fl - 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{rat, Rat};
    use proptest::prelude::*;

    fn p(k: i64) -> RingElem {
        RingElem::p(k)
    }
    fn q(k: i64) -> RingElem {
        RingElem::q(k)
    }

    #[test]
    fn exchange_rule() {
        let prod = LaurentOp::lambda(1).mul(&LaurentOp::monomial(q(0), -1));
        assert_eq!(prod, LaurentOp::mult(q(1)));
    }

    #[test]
    fn square_of_lambda_minus_p() {
        let a = lambda_minus(Field::P);
        let expect = LaurentOp::from_coeffs([(2, RingElem::one()), (1, -(p(1) + p(0))), (0, p(0).pow(2))]);
        assert_eq!(a.mul(&a), expect);
        assert_eq!(LaurentOp::lambda(0).mul(&a), a);
    }

    #[test]
    fn plus_minus_partition() {
        let l = LaurentOp::from_coeffs([(1, RingElem::one()), (0, q(0) - p(0)), (-1, &q(0) * &(q(-1) - p(-1)))]);
        assert_eq!(plus_part(&l), LaurentOp::from_coeffs([(1, RingElem::one()), (0, q(0) - p(0))]));
        assert_eq!(minus_part(&LaurentOp::lambda(1)), LaurentOp::zero());
        assert_eq!(plus_part(&l).add(&minus_part(&l)), l);
        assert_eq!(residue(&l), q(0) - p(0));
        assert_eq!(residue(&LaurentOp::lambda(2)), RingElem::zero());
    }

    #[test]
    fn neumann_inverses() {
        let g1 = geometric_inverse(InverseKind::OneMinusQLambdaInv, 1);
        assert!(g1.window_eq(&LaurentOp::from_coeffs([(0, RingElem::one()), (-1, q(0))])));
        for d in 1..5 {
            let g = geometric_inverse(InverseKind::OneMinusQLambdaInv, d);
            let prod = one_minus_q_lambda_inv().mul(&g);
            assert_eq!(prod.floor(), Some(-(d as i64)));
            assert!(prod.window_eq(&LaurentOp::lambda(0)));
        }
        let g = geometric_inverse(InverseKind::LambdaMinusP, 2);
        assert!(g.window_eq(&LaurentOp::from_coeffs([(-1, RingElem::one()), (-2, p(-1))])));
        let prod = lambda_minus(Field::P).mul(&g);
        assert!(prod.window_eq(&LaurentOp::lambda(0)));
    }

    #[test]
    fn both_sided_inverses_of_lambda_minus_p() {
        for kind in [InverseKind::LambdaMinusP, InverseKind::LambdaMinusPAscending] {
            let g = geometric_inverse(kind, 4);
            let left = lambda_minus(Field::P).mul(&g);
            let right = g.mul(&lambda_minus(Field::P));
            assert!(left.window_eq(&LaurentOp::lambda(0)), "{kind:?} left");
            assert!(right.window_eq(&LaurentOp::lambda(0)), "{kind:?} right");
            assert!(left.coeffs().count() >= 1);
        }
    }

    #[test]
    fn residue_of_l_squared() {
        let inv = geometric_inverse(InverseKind::OneMinusQLambdaInv, 3);
        let l = inv.mul(&lambda_minus(Field::P));
        let r = residue(&l.pow(2));
        let expect = (q(0) - p(0)).pow(2) + &q(1) * &(q(0) - p(0)) + &q(0) * &(q(-1) - p(-1));
        assert_eq!(r, expect);
    }

    fn arb_op() -> impl Strategy<Value = LaurentOp> {
        let coeff = (-2i64..=2, 0usize..2, -2i64..=2);
        prop::collection::vec((-2i64..=1, coeff), 1..4).prop_map(|cs| {
            LaurentOp::from_coeffs(cs.into_iter().map(|(k, (off, v, n))| {
                let f = if v == 0 { p(off) } else { q(off) };
                (k, (&f + &RingElem::constant(rat(n, 1))).scale(&Rat::from_integer(1.into())))
            }))
        })
    }

    proptest! {
        #[test]
        fn associativity(a in arb_op(), b in arb_op(), c in arb_op()) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        }

        #[test]
        fn exchange_rule_holds(k in -3i64..=3, off in -2i64..=2) {
            let lhs = LaurentOp::lambda(k).mul(&LaurentOp::mult(q(off)));
            prop_assert_eq!(lhs, LaurentOp::monomial(q(off + k), k));
        }

        #[test]
        fn commutator_residue_is_total_difference(a in arb_op(), b in arb_op()) {
            let r = residue(&a.commutator(&b));
            prop_assert!(r.solve_total_difference().is_ok());
        }
    }
}
