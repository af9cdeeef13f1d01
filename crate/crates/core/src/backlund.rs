//! Auto-Bäcklund transformation generated by `t^{1,0} - x`:
//! `P̃ = P⁻(Q⁺ - P)/(Q - P⁻)`, `Q̃ = Q(Q⁺ - P)/(Q - P⁻)`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::diffop::LaurentOp;
use crate::hamiltonian::HamOp;
use crate::report::{Check, Report};
use crate::ring::{Field, Generator, JetVar, RatFunc, RingElem};

#[derive(Debug, Error, PartialEq)]
pub enum BacklundError {
    #[error("Q - P^- vanishes at site {site}")]
    Pole { site: usize },
    #[error("P and Q have different lengths")]
    Shape,
}

#[derive(Clone, Debug)]
pub struct BacklundPair {
    pub pt: RatFunc,
    pub qt: RatFunc,
}

pub fn backlund() -> BacklundPair {
    let (p, q) = (RingElem::p, RingElem::q);
    let den = q(0) - p(-1);
    let common = q(1) - p(0);
    BacklundPair {
        pt: RatFunc::new(&p(-1) * &common, den.clone()),
        qt: RatFunc::new(&q(0) * &common, den),
    }
}

/// `(Q̃/P̃)(P⁻/Q⁻) = Q/Q⁻`, the exponentiated form of `(Λ̃ - 1)(log Q - log P) = (Λ - 1) log Q`.
pub fn backlund_identity_check() -> Report {
    let mut r = Report::new("Backlund identity");
    let b = backlund();
    let (p, q) = (RingElem::p, RingElem::q);
    let inv_pt = RatFunc::new(b.pt.den_elem(), b.pt.num.clone());
    let ratio = b.qt.mul(&inv_pt);
    let lhs = ratio.mul(&RatFunc::new(p(-1), q(-1)));
    let rhs = RatFunc::new(q(0), q(-1));
    r.push(Check::flag("(Qt/Pt)(P-/Q-) = Q/Q-", lhs.equals(&rhs), lhs.to_string(), rhs.to_string()));
    let qp = ratio.mul(&RatFunc::new(p(-1), RingElem::one()));
    r.push(Check::flag("Qt/Pt = Q/P-", qp.equals(&RatFunc::from_elem(q(0))), ratio.to_string(), "Q/P-"));
    r
}

/// `ε⁰` and `ε¹` terms of `P̃, Q̃` against `(P, Q)` and `(A⁰, B⁰)`, by clearing `Q - P⁻`.
pub fn backlund_order_eps_check() -> Report {
    let mut r = Report::new("Backlund to first order in epsilon");
    let b = backlund();
    let d = |f: JetVar, n: u32| RingElem::dj(f, n);
    let (p, q, px, qx) = (d(JetVar::P, 0), d(JetVar::Q, 0), d(JetVar::P, 1), d(JetVar::Q, 1));
    let den_v = &q - &p;
    let a0 = &(&qx * &p) - &(&px * &q);
    let b0 = &(&qx - &px) * &q;
    for (name, f, lead, first) in [("P", &b.pt, p.clone(), a0), ("Q", &b.qt, q.clone(), b0)] {
        let num = f.num.eps_expand(1).expect("shift picture");
        let den = f.den_elem().eps_expand(1).expect("shift picture");
        // f·den = num: f0·den0 = num0 and f1·den0 = num1 - f0·den1, with f1 = first/(Q - P)
        let e0 = &(&lead * den.coeff(0)) - num.coeff(0);
        r.push(Check::zero(format!("{name}t at eps^0"), &e0));
        let lhs = &(num.coeff(1) - &(&lead * den.coeff(1))) * &den_v;
        let rhs = &first * den.coeff(0);
        r.push(Check::equal(format!("{name}t at eps^1"), &lhs, &rhs));
    }
    r
}

/// Difference operator with rational coefficients, `Σ_k c_k Λ^k`.
#[derive(Clone, Debug, Default)]
pub struct RatOp(pub BTreeMap<i64, RatFunc>);

impl RatOp {
    pub fn zero() -> Self {
        RatOp(BTreeMap::new())
    }

    pub fn mult(c: RatFunc) -> Self {
        RatOp([(0, c)].into())
    }

    pub fn lambda(k: i64) -> Self {
        RatOp([(k, RatFunc::from_elem(RingElem::one()))].into())
    }

    pub fn from_laurent(op: &LaurentOp) -> Self {
        assert!(op.is_exact(), "only exact operators have rational lifts");
        RatOp(op.coeffs().map(|(k, c)| (*k, RatFunc::from_elem(c.clone()))).collect())
    }

    fn push(&mut self, k: i64, c: RatFunc) {
        let e = match self.0.remove(&k) {
            Some(old) => old.add(&c),
            None => c,
        };
        if !e.is_zero() {
            self.0.insert(k, e);
        }
    }

    pub fn add(&self, o: &RatOp) -> RatOp {
        let mut out = self.clone();
        for (k, c) in &o.0 {
            out.push(*k, c.clone());
        }
        out
    }

    /// `(aΛ^i)(bΛ^j) = a b^{(i)} Λ^{i+j}`
    pub fn mul(&self, o: &RatOp) -> RatOp {
        let mut out = RatOp::zero();
        for (i, a) in &self.0 {
            for (j, b) in &o.0 {
                out.push(i + j, a.mul(&b.shift(*i)));
            }
        }
        out
    }

    /// `Σ Λ^{-k} c_k`
    pub fn adjoint(&self) -> RatOp {
        let mut out = RatOp::zero();
        for (k, c) in &self.0 {
            out.push(-k, c.shift(-k));
        }
        out
    }

    /// Coefficient-wise equality; entries absent on one side must vanish on the other.
    pub fn equals(&self, o: &RatOp) -> bool {
        let keys: std::collections::BTreeSet<i64> = self.0.keys().chain(o.0.keys()).copied().collect();
        let zero = RatFunc::from_elem(RingElem::zero());
        keys.iter().all(|k| self.0.get(k).unwrap_or(&zero).equals(o.0.get(k).unwrap_or(&zero)))
    }
}

impl fmt::Display for RatOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.0.iter().map(|(k, c)| format!("[{c}] L^{k}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

pub type RatMatrix = [[RatOp; 2]; 2];

fn mat_mul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let e = |i: usize, j: usize| a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn partial(f: &RatFunc, field: Field, k: i64) -> RatFunc {
    f.diff(&Generator::Shift(field, k))
}

/// Fréchet derivative `J` of `(P̃, Q̃)`.
pub fn frechet_j(b: &BacklundPair) -> RatMatrix {
    let row = |f: &RatFunc| {
        [
            RatOp::mult(partial(f, Field::P, 0)).add(&RatOp::mult(partial(f, Field::P, -1)).mul(&RatOp::lambda(-1))),
            RatOp::mult(partial(f, Field::Q, 0)).add(&RatOp::mult(partial(f, Field::Q, 1)).mul(&RatOp::lambda(1))),
        ]
    };
    [row(&b.pt), row(&b.qt)]
}

/// `J*` as an explicit matrix: transposed, with `Λ^{∓1}` moved to the left.
pub fn frechet_j_star(b: &BacklundPair) -> RatMatrix {
    let col = |f: &RatFunc| {
        [
            RatOp::mult(partial(f, Field::P, 0)).add(&RatOp::lambda(1).mul(&RatOp::mult(partial(f, Field::P, -1)))),
            RatOp::mult(partial(f, Field::Q, 0)).add(&RatOp::lambda(-1).mul(&RatOp::mult(partial(f, Field::Q, 1)))),
        ]
    };
    let (cp, cq) = (col(&b.pt), col(&b.qt));
    [[cp[0].clone(), cq[0].clone()], [cp[1].clone(), cq[1].clone()]]
}

/// Substitutes `P_k ↦ Λ^k P̃`, `Q_k ↦ Λ^k Q̃` into a polynomial coefficient.
pub fn substitute(e: &RingElem, b: &BacklundPair) -> RatFunc {
    let mut out = RatFunc::from_elem(RingElem::zero());
    for (m, c) in e.terms() {
        let mut acc = RatFunc::from_elem(RingElem::constant(c.clone()));
        for (g, k) in m.factors() {
            let base = match g {
                Generator::Shift(Field::P, s) => b.pt.shift(*s),
                Generator::Shift(Field::Q, s) => b.qt.shift(*s),
                _ => RatFunc::from_elem(RingElem::gen(*g)),
            };
            assert!(*k >= 0, "operator coefficients are polynomial");
            for _ in 0..*k {
                acc = acc.mul(&base);
            }
        }
        out = out.add(&acc);
    }
    out
}

fn substituted(h: &HamOp, b: &BacklundPair) -> RatMatrix {
    let lift = |op: &LaurentOp| RatOp(op.coeffs().map(|(k, c)| (*k, substitute(c, b))).filter(|(_, c)| !c.is_zero()).collect());
    let e = &h.entries;
    [[lift(&e[0][0]), lift(&e[0][1])], [lift(&e[1][0]), lift(&e[1][1])]]
}

fn lift_hamop(h: &HamOp) -> RatMatrix {
    let e = &h.entries;
    [
        [RatOp::from_laurent(&e[0][0]), RatOp::from_laurent(&e[0][1])],
        [RatOp::from_laurent(&e[1][0]), RatOp::from_laurent(&e[1][1])],
    ]
}

/// `J𝒫_iJ* = 𝒫_i|_{P̃,Q̃}` entry-wise for both Hamiltonian operators, and `J*` as the adjoint of `J`.
pub fn backlund_frechet_invariance_check() -> Report {
    frechet_invariance(&backlund())
}

/// The invariance checks for an arbitrary change of variables.
pub fn frechet_invariance(b: &BacklundPair) -> Report {
    let mut r = Report::new("Backlund invariance of the bihamiltonian structure");
    let j = frechet_j(b);
    let js = frechet_j_star(b);
    for i in 0..2 {
        for k in 0..2 {
            let adj = j[k][i].adjoint();
            r.push(Check::flag(format!("J* [{}{}] is the adjoint of J", i + 1, k + 1), adj.equals(&js[i][k]), adj.to_string(), js[i][k].to_string()));
        }
    }
    for (name, h) in [("P0", HamOp::p0_pq()), ("P1", HamOp::p1_pq())] {
        let lhs = mat_mul(&mat_mul(&j, &lift_hamop(&h)), &js);
        let rhs = substituted(&h, b);
        for i in 0..2 {
            for k in 0..2 {
                r.push(Check::flag(
                    format!("J {name} J* [{}{}]", i + 1, k + 1),
                    lhs[i][k].equals(&rhs[i][k]),
                    lhs[i][k].to_string(),
                    rhs[i][k].to_string(),
                ));
            }
        }
    }
    r
}

/// The transformation on a periodic lattice.
pub fn apply_backlund(p: &[f64], q: &[f64]) -> Result<(Vec<f64>, Vec<f64>), BacklundError> {
    let n = p.len();
    if q.len() != n {
        return Err(BacklundError::Shape);
    }
    let mut pt = Vec::with_capacity(n);
    let mut qt = Vec::with_capacity(n);
    for i in 0..n {
        let pm = p[(i + n - 1) % n];
        let qp = q[(i + 1) % n];
        let den = q[i] - pm;
        if den == 0.0 || !den.is_finite() {
            return Err(BacklundError::Pole { site: i });
        }
        let common = qp - p[i];
        pt.push(pm * common / den);
        qt.push(q[i] * common / den);
    }
    Ok((pt, qt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity() {
        let r = backlund_identity_check();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn first_order() {
        let r = backlund_order_eps_check();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn printed_transform_preserves_both_operators() {
        let r = backlund_frechet_invariance_check();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn rescaling_is_not_a_symmetry() {
        let b = BacklundPair { pt: RatFunc::from_elem(RingElem::p(0).scale(&crate::ring::rint(2))), qt: RatFunc::from_elem(RingElem::q(0)) };
        let r = frechet_invariance(&b);
        assert!(!r.passed());
    }

    #[test]
    fn constant_fields_are_fixed() {
        let (pt, qt) = apply_backlund(&[0.3; 5], &[1.7; 5]).unwrap();
        assert!(pt.iter().all(|x| (x - 0.3).abs() < 1e-15));
        assert!(qt.iter().all(|x| (x - 1.7).abs() < 1e-15));
    }

    #[test]
    fn pole_is_reported() {
        let p = [1.0, 2.0, 3.0];
        let q = [3.0, 5.0, 7.0];
        assert_eq!(apply_backlund(&p, &q), Err(BacklundError::Pole { site: 0 }));
    }

    proptest! {
        #[test]
        fn ratio_identity_numerically(p in proptest::collection::vec(0.1f64..1.0, 6), q in proptest::collection::vec(1.5f64..3.0, 6)) {
            let (pt, qt) = apply_backlund(&p, &q).unwrap();
            for i in 0..6 {
                let lhs = qt[i] / pt[i];
                let rhs = q[i] / p[(i + 5) % 6];
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
            }
        }
    }
}
