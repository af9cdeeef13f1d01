//! Lax operators `L = (1-QΛ^{-1})^{-1}(Λ-P)` and `M = (Λ-P)^{-1}(1-QΛ^{-1})`,
//! residue densities, and the evolution of `(P, Q)` under each flow.
//!
//! Flow right-hand sides are `ε`-scaled: `dp = ε ∂P/∂t`, `dq = ε ∂Q/∂t`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::diffop::{
    geometric_inverse, lambda_minus, minus_part, one_minus_q_lambda_inv, op_mul_window, plus_part, pow_window,
    residue, InverseKind, LaurentOp,
};
use crate::report::{Check, Report};
use crate::ring::{factorial, rint, EpsSeries, Field, JetVar, Rat, RingElem, RingError, Trans};

/// Extra coefficient equations checked beyond the two that determine a flow.
const CONSISTENCY_DEPTH: i64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FlowLabel {
    /// `t^{2,p}`
    Pos(u32),
    /// `t^{0,-q}`, `q ≥ 1`
    Neg(u32),
}

impl FlowLabel {
    pub fn alpha(&self) -> u8 {
        match self {
            FlowLabel::Pos(_) => 2,
            FlowLabel::Neg(_) => 0,
        }
    }

    pub fn level(&self) -> i64 {
        match self {
            FlowLabel::Pos(p) => *p as i64,
            FlowLabel::Neg(q) => -(*q as i64),
        }
    }
}

impl fmt::Display for FlowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t^{{{},{}}}", self.alpha(), self.level())
    }
}

#[derive(Debug, Error)]
pub enum LaxError {
    #[error("flow {label}: coefficient of L^{power} inconsistent: {detail}")]
    Inconsistent { label: FlowLabel, power: i64, detail: String },
}

/// `h_{alpha,level}` in the shift picture.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    pub alpha: u8,
    pub level: i64,
    pub value: RingElem,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowRHS {
    pub label: FlowLabel,
    pub dp: RingElem,
    pub dq: RingElem,
}

/// `L` known down to `Λ^{-depth}`.
pub fn build_l(depth: u32) -> LaurentOp {
    let inv = geometric_inverse(InverseKind::OneMinusQLambdaInv, depth + 1);
    inv.mul(&lambda_minus(Field::P))
}

/// `M` known up to `Λ^{depth}`.
pub fn build_m(depth: u32) -> LaurentOp {
    let inv = geometric_inverse(InverseKind::LambdaMinusPAscending, depth + 1);
    inv.mul(&one_minus_q_lambda_inv())
}

/// `Res L^n`.
pub fn res_l_power(n: u32) -> RingElem {
    let l = build_l(n.saturating_sub(1).max(1));
    residue(&pow_window(&l, n, Some(0), None))
}

/// `Res M^n`.
pub fn res_m_power(n: u32) -> RingElem {
    let m = build_m(n.saturating_sub(1).max(1));
    residue(&pow_window(&m, n, None, Some(0)))
}

/// `h_{2,p} = Res L^{p+1} / (p+1)!`
pub fn density_positive(p: u32) -> Density {
    let v = res_l_power(p + 1).scale(&factorial(p + 1).recip());
    Density { alpha: 2, level: p as i64, value: v }
}

/// `h_{0,-q} = (-1)^q (q-1)! Res M^q`
pub fn density_negative(q: u32) -> Density {
    assert!(q >= 1);
    let sign = if q % 2 == 0 { rint(1) } else { rint(-1) };
    let v = res_m_power(q).scale(&(sign * factorial(q - 1)));
    Density { alpha: 0, level: -(q as i64), value: v }
}

/// Density paired with a flow label by tau-symmetry.
pub fn flow_density(label: FlowLabel) -> Density {
    match label {
        FlowLabel::Pos(p) => density_positive(p),
        FlowLabel::Neg(q) => density_negative(q),
    }
}

/// Taylor coefficients of `z / (1 - e^{-z})`.
pub fn todd_coefficients(n: usize) -> Vec<Rat> {
    // (1 - e^{-z})/z = Σ (-1)^k z^k / (k+1)!
    let a: Vec<Rat> = (0..=n).map(|k| rint(if k % 2 == 0 { 1 } else { -1 }) / factorial(k as u32 + 1)).collect();
    let mut b = vec![Rat::from_integer(0.into()); n + 1];
    b[0] = a[0].recip();
    for k in 1..=n {
        let mut s = Rat::from_integer(0.into());
        for j in 1..=k {
            s += &a[j] * &b[k - j];
        }
        b[k] = -s / &a[0];
    }
    b
}

/// `h_{0,0} = ε∂x (1-Λ^{-1})^{-1} (log Q - log P)` to order `ε^n`, derivative picture.
pub fn density_h00(n: usize) -> EpsSeries {
    let c = todd_coefficients(n);
    let mut out = EpsSeries::zero(n);
    let mut d = RingElem::tr(Trans::LogQminusLogP(0));
    for (i, ci) in c.iter().enumerate() {
        out.coeffs[i] = d.scale(ci);
        d = d.total_x_derivative().expect("derivative picture");
    }
    out
}

/// Right-hand side `εL_t` of the Lax equation, known down to `Λ^{-depth}`.
pub fn lax_rhs(label: FlowLabel, depth: i64) -> LaurentOp {
    match label {
        FlowLabel::Pos(p) => {
            let n = p + 1;
            let l0 = build_l(n.max(1));
            let a = plus_part(&pow_window(&l0, n, Some(0), None));
            let a = LaurentOp::from_coeffs(a.coeffs().map(|(k, c)| (*k, c.clone())));
            let l = build_l((depth + n as i64 + 1) as u32);
            let lo = Some(-depth);
            let c = op_mul_window(&a, &l, lo, None).sub(&op_mul_window(&l, &a, lo, None));
            c.scale(&factorial(n).recip())
        }
        FlowLabel::Neg(q) => {
            let m = build_m(q.max(2));
            let a = minus_part(&pow_window(&m, q, None, Some(-1)));
            let a = LaurentOp::from_coeffs(a.coeffs().map(|(k, c)| (*k, c.clone())));
            let l = build_l((depth + 2) as u32);
            let lo = Some(-depth);
            let c = op_mul_window(&a, &l, lo, None).sub(&op_mul_window(&l, &a, lo, None));
            let sign = if q % 2 == 1 { rint(1) } else { rint(-1) };
            c.scale(&(sign * factorial(q - 1)))
        }
    }
}

/// `(dP, dQ)` from `B·εL_t = dQ·Λ^{-1}L - dP`, `B = 1 - QΛ^{-1}`; remaining
/// coefficients are checked as consistency equations.
pub fn lax_flow(label: FlowLabel) -> Result<FlowRHS, LaxError> {
    let depth = 1 + CONSISTENCY_DEPTH;
    let y = lax_rhs(label, depth);
    let x = one_minus_q_lambda_inv().mul(&y);
    let x0 = x.coeff(0);
    let x1 = x.coeff(-1);
    let den = RingElem::q(-1) - RingElem::p(-1);
    let dq = x1.div_exact(&den).ok_or_else(|| LaxError::Inconsistent {
        label,
        power: -1,
        detail: format!("{x1} not divisible by {den}"),
    })?;
    let dp = &dq - &x0;
    let l = build_l((depth + 1) as u32);
    let z = LaurentOp::monomial(dq.clone(), 0)
        .mul(&LaurentOp::lambda(-1).mul(&l))
        .sub(&LaurentOp::mult(dp.clone()));
    for k in -depth..=x.upper().unwrap_or(0).max(1) {
        if !(x.knows(k) && z.knows(k)) {
            continue;
        }
        if x.coeff(k) != z.coeff(k) {
            return Err(LaxError::Inconsistent {
                label,
                power: k,
                detail: format!("{} != {}", x.coeff(k), z.coeff(k)),
            });
        }
    }
    Ok(FlowRHS { label, dp, dq })
}

/// `ε ∂h_a/∂t_b = ε ∂h_b/∂t_a`.
pub fn tau_symmetry_check(a: &(Density, FlowRHS), b: &(Density, FlowRHS)) -> Check {
    let lhs = a.0.value.prolong(&b.1.dp, &b.1.dq);
    let rhs = b.0.value.prolong(&a.1.dp, &a.1.dq);
    Check::equal(format!("d h[{}] / d {} = d h[{}] / d {}", a.1.label, b.1.label, b.1.label, a.1.label), &lhs, &rhs)
}

/// Prolonged cross-derivatives of `P` and `Q` agree.
pub fn flow_commutativity_check(a: &FlowRHS, b: &FlowRHS) -> Vec<Check> {
    let name = |v: &str| format!("[{}, {}] {v}", a.label, b.label);
    vec![
        Check::equal(name("P"), &b.dp.prolong(&a.dp, &a.dq), &a.dp.prolong(&b.dp, &b.dq)),
        Check::equal(name("Q"), &b.dq.prolong(&a.dp, &a.dq), &a.dq.prolong(&b.dp, &b.dq)),
    ]
}

/// Dispersionless change of variables `P = e^{v2} - v1`, `Q = e^{v2}` on a
/// derivative-picture element; `1/P` becomes `(e^{v2} - v1)^{-1}`.
pub fn pq_to_v(e: &RingElem) -> Result<RingElem, RingError> {
    use crate::ring::Generator as G;
    let ev2 = RingElem::tr(Trans::ExpV2);
    let v1 = RingElem::dj(JetVar::V1, 0);
    let jet = |base: RingElem, n: u32| -> RingElem {
        (0..n).fold(base, |x, _| x.total_x_derivative().expect("derivative picture"))
    };
    let mut out = RingElem::zero();
    for (m, c) in e.terms() {
        let mut acc = RingElem::constant(c.clone());
        for (g, k) in m.factors() {
            let base = match g {
                G::Deriv(JetVar::P, 0) if *k < 0 => RingElem::tr(Trans::InvExpV2MinusV1).pow((-k) as u32),
                G::Deriv(JetVar::P, n) => jet(&ev2 - &v1, *n).powi(*k)?,
                G::Deriv(JetVar::Q, n) => jet(ev2.clone(), *n).powi(*k)?,
                G::Trans(Trans::LogQminusLogP(0)) => {
                    (RingElem::dj(JetVar::V2, 0) - RingElem::tr(Trans::LogExpV2MinusV1)).powi(*k)?
                }
                G::Shift(..) | G::Trans(Trans::LogQminusLogP(_)) => {
                    return Err(RingError::PictureMismatch("shift jet in dispersionless substitution"))
                }
                g => RingElem::gen(*g).powi(*k)?,
            };
            acc = &acc * &base;
        }
        out += &acc;
    }
    Ok(out)
}

/// The printed low coefficients of `L` and `M`, compared with `build_l(3)` and `build_m(3)`.
pub fn lax_golden_check() -> Report {
    let mut r = Report::new("printed Lax coefficients");
    let (p, q) = (RingElem::p, RingElem::q);
    let inv = |e: RingElem| e.powi(-1).expect("monomial");
    let l = build_l(3);
    let m = build_m(3);
    r.push(Check::equal("L[1]", &l.coeff(1), &RingElem::one()));
    r.push(Check::equal("L[0]", &l.coeff(0), &(q(0) - p(0))));
    r.push(Check::equal("L[-1]", &l.coeff(-1), &(&q(0) * &(q(-1) - p(-1)))));
    r.push(Check::equal("M[-1]", &m.coeff(-1), &(&q(0) * &inv(p(0)))));
    r.push(Check::equal("M[0]", &m.coeff(0), &(&q(1) * &inv(&p(0) * &p(1)) - inv(p(0)))));
    let m1 = &q(2) * &inv(&(&p(0) * &p(1)) * &p(2)) - inv(&p(0) * &p(1));
    r.push(Check::equal("M[1]", &m.coeff(1), &m1));
    r
}

/// Pairwise tau-symmetry and commutativity among `t^{2,p}`, `p ≤ pmax`, and `t^{0,-q}`, `1 ≤ q ≤ qmax`.
pub fn tau_symmetry_suite(pmax: u32, qmax: u32) -> Result<Report, LaxError> {
    let mut r = Report::new("tau symmetry");
    let labels: Vec<FlowLabel> = (0..=pmax).map(FlowLabel::Pos).chain((1..=qmax).map(FlowLabel::Neg)).collect();
    let data: Vec<(Density, FlowRHS)> = labels.iter().map(|l| Ok((flow_density(*l), lax_flow(*l)?))).collect::<Result<_, LaxError>>()?;
    for i in 0..data.len() {
        for j in i + 1..data.len() {
            r.push(tau_symmetry_check(&data[i], &data[j]));
            r.checks.extend(flow_commutativity_check(&data[i].1, &data[j].1));
        }
    }
    Ok(r)
}

/// `ε^0` limit of a shift-picture density.
pub fn dispersionless(e: &RingElem) -> RingElem {
    e.eps_expand(0).expect("shift picture").coeffs[0].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::rat;

    fn p(k: i64) -> RingElem {
        RingElem::p(k)
    }
    fn q(k: i64) -> RingElem {
        RingElem::q(k)
    }
    fn inv(e: RingElem) -> RingElem {
        e.powi(-1).unwrap()
    }

    #[test]
    fn l_and_m_low_coefficients() {
        let l = build_l(2);
        assert_eq!(l.coeff(1), RingElem::one());
        assert_eq!(l.coeff(0), q(0) - p(0));
        assert_eq!(l.coeff(-1), &q(0) * &(q(-1) - p(-1)));
        let m = build_m(2);
        assert_eq!(m.coeff(-1), &q(0) * &inv(p(0)));
        assert_eq!(m.coeff(0), &q(1) * &inv(&p(0) * &p(1)) - inv(p(0)));
        let expect = &q(2) * &inv(&(&p(0) * &p(1)) * &p(2)) - inv(&p(0) * &p(1));
        assert_eq!(m.coeff(1), expect);
    }

    #[test]
    fn low_densities() {
        assert_eq!(density_positive(0).value, q(0) - p(0));
        let h1 = ((q(0) - p(0)).pow(2) + &q(1) * &(q(0) - p(0)) + &q(0) * &(q(-1) - p(-1))).scale(&rat(1, 2));
        assert_eq!(density_positive(1).value, h1);
        assert_eq!(density_negative(1).value, inv(p(0)) - &q(1) * &inv(&p(0) * &p(1)));
    }

    #[test]
    fn dispersionless_density_one() {
        let (pp, qq) = (RingElem::dj(JetVar::P, 0), RingElem::dj(JetVar::Q, 0));
        let expect = &(&qq - &pp) * &qq + (&qq - &pp).pow(2).scale(&rat(1, 2));
        assert_eq!(dispersionless(&density_positive(1).value), expect);
        let expect = inv(pp.clone()) - &qq * &pp.powi(-2).unwrap();
        assert_eq!(dispersionless(&density_negative(1).value), expect);
    }

    #[test]
    fn h00_first_orders() {
        let h = density_h00(2);
        let f = RingElem::tr(Trans::LogQminusLogP(0));
        assert_eq!(h.coeff(0), &f);
        assert_eq!(h.coeff(1), &f.total_x_derivative().unwrap().scale(&rat(1, 2)));
        let c = todd_coefficients(4);
        assert_eq!(c[2], rat(1, 12));
        assert_eq!(c[3], rat(0, 1));
        assert_eq!(c[4], rat(-1, 720));
    }

    #[test]
    fn base_flows_match_explicit_form() {
        let f = lax_flow(FlowLabel::Pos(0)).unwrap();
        assert_eq!(f.dp, &p(0) * &(q(1) - q(0)));
        assert_eq!(f.dq, &q(0) * &(q(1) - q(-1) - p(0) + p(-1)));
        let f = lax_flow(FlowLabel::Neg(1)).unwrap();
        assert_eq!(f.dp, &q(1) * &inv(p(1)) - &q(0) * &inv(p(-1)));
        assert_eq!(f.dq, &q(0) * &inv(p(0)) - &q(0) * &inv(p(-1)));
    }

    #[test]
    fn printed_coefficients() {
        let r = lax_golden_check();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn tau_symmetry_low_orders() {
        let r = tau_symmetry_suite(1, 1).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn second_positive_flow_commutes_with_first() {
        let a = lax_flow(FlowLabel::Pos(0)).unwrap();
        let b = lax_flow(FlowLabel::Pos(1)).unwrap();
        for c in flow_commutativity_check(&a, &b) {
            assert!(c.passed, "{c:?}");
        }
    }
}
