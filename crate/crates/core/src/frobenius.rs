//! The generalized Frobenius manifold with potential
//! `F = ½(v1)²v2 + v1 e^{v2} + ½(v1)² log v1`: structure constants, the
//! θ-functions by recursion and by residues of the superpotential, Principal
//! Hierarchy flows, two-point functions `Ω⁰`, and canonical coordinates.
//!
//! Elements live in the ring generated by `v1^{±1}`, `v2`, `e^{±v2}`, `log v1`,
//! `log(e^{v2}-v1)` and `D = (e^{v2}-v1)^{-1}`. The relation `D(e^{v2}-v1) = 1`
//! is applied by [`canon`].

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::hamiltonian::{dispersionless_hamops, DxMatrix};
use crate::lax::{density_h00, density_negative, density_positive, dispersionless, lax_flow, pq_to_v, FlowLabel};
use crate::report::{Check, Report};
use crate::ring::{factorial, harmonic, rat, rint, Generator, JetVar, Rat, RingElem, Trans};

/// Charge of the manifold.
pub const CHARGE: i64 = 1;

#[derive(Debug, Error)]
pub enum FrobError {
    #[error("θ({alpha},{k}): {detail}")]
    Integrability { alpha: u8, k: i64, detail: String },
    #[error("no antiderivative rule for {0}")]
    Unsupported(String),
    #[error("label ({0},{1}) is outside the index set")]
    OutOfDomain(u8, i64),
}

/// `(α, k)`: `α ∈ {1,2}` with `k ≥ 0`, or `α = 0` with any `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Label {
    pub alpha: u8,
    pub k: i64,
}

impl Label {
    pub fn new(alpha: u8, k: i64) -> Result<Label, FrobError> {
        match alpha {
            0 => Ok(Label { alpha, k }),
            1 | 2 if k >= 0 => Ok(Label { alpha, k }),
            _ => Err(FrobError::OutOfDomain(alpha, k)),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.alpha, self.k)
    }
}

pub fn v1() -> RingElem {
    RingElem::dj(JetVar::V1, 0)
}

pub fn v2() -> RingElem {
    RingElem::dj(JetVar::V2, 0)
}

pub fn ev2() -> RingElem {
    RingElem::tr(Trans::ExpV2)
}

pub fn log_v1() -> RingElem {
    RingElem::tr(Trans::LogV1)
}

/// `D = (e^{v2} - v1)^{-1}`
pub fn dinv() -> RingElem {
    RingElem::tr(Trans::InvExpV2MinusV1)
}

const G1: Generator = Generator::Deriv(JetVar::V1, 0);
const G2: Generator = Generator::Deriv(JetVar::V2, 0);
const GD: Generator = Generator::Trans(Trans::InvExpV2MinusV1);

pub fn d1(f: &RingElem) -> RingElem {
    f.diff(&G1)
}

pub fn d2(f: &RingElem) -> RingElem {
    f.diff(&G2)
}

/// `(num, B)` with `e = num · D^B` and `num` free of `D`.
pub fn clear_d(e: &RingElem) -> (RingElem, u32) {
    let b = e.terms().map(|(m, _)| m.exponent(&GD)).max().unwrap_or(0).max(0);
    let base = ev2() - v1();
    let mut num = RingElem::zero();
    for (m, c) in e.terms() {
        let k = b - m.exponent(&GD);
        let t = RingElem::term(c.clone(), m.without(&GD));
        num += &(&t * &base.pow(k as u32));
    }
    (num, b as u32)
}

/// Normal form `num · D^B` with `B` minimal.
pub fn canon(e: &RingElem) -> RingElem {
    let (mut num, mut b) = clear_d(e);
    while b > 0 {
        match div_e_minus_v1(&num) {
            Some(q) => {
                num = q;
                b -= 1;
            }
            None => break,
        }
    }
    &num * &dinv().pow(b)
}

/// Exact quotient by `e^{v2} - v1`, by synthetic division in `e^{v2}`.
fn div_e_minus_v1(num: &RingElem) -> Option<RingElem> {
    let ge = Generator::Trans(Trans::ExpV2);
    let mut by_pow: BTreeMap<i32, RingElem> = BTreeMap::new();
    for (m, c) in num.terms() {
        let j = m.exponent(&ge);
        by_pow.entry(j).or_insert_with(RingElem::zero).add_term(m.without(&ge), c.clone());
    }
    let (&lo, _) = by_pow.iter().next()?;
    let (&hi, _) = by_pow.iter().next_back()?;
    let x = v1();
    let mut q = RingElem::zero();
    let mut carry = RingElem::zero();
    for j in (lo..=hi).rev() {
        let a = by_pow.remove(&j).unwrap_or_else(RingElem::zero);
        let cur = &a + &carry;
        if j == lo {
            return cur.is_zero().then_some(q);
        }
        q += &(&cur * &RingElem::gen_pow(ge, j - 1));
        carry = &x * &cur;
    }
    None
}

/// Equality modulo `D(e^{v2} - v1) = 1`.
pub fn veq(a: &RingElem, b: &RingElem) -> bool {
    clear_d(&(a - b)).0.is_zero()
}

fn check_v(name: impl Into<String>, lhs: &RingElem, rhs: &RingElem) -> Check {
    let (l, r) = (canon(lhs), canon(rhs));
    Check::flag(name, veq(&l, &r), l.to_string(), r.to_string())
}

/// `η^{αβ}` is antidiagonal, so raising swaps components.
pub fn raise(g: &[RingElem; 2]) -> [RingElem; 2] {
    [g[1].clone(), g[0].clone()]
}

/// `⟨∇a, ∇b⟩ = η^{αβ} ∂_α a ∂_β b`.
pub fn pairing(a: &[RingElem; 2], b: &[RingElem; 2]) -> RingElem {
    &a[0] * &b[1] + &a[1] * &b[0]
}

pub fn gradient(f: &RingElem) -> [RingElem; 2] {
    [canon(&d1(f)), canon(&d2(f))]
}

/// Flat metric, unity, Euler field and structure constants.
#[derive(Clone, Debug)]
pub struct FrobeniusData {
    pub potential: RingElem,
    /// `μ = diag(-½, ½)`
    pub mu: [Rat; 2],
    /// `R_1`, row-major, `(R_1)^1_2 = 0`, `(R_1)^2_1 = 2`.
    pub r1: [[Rat; 2]; 2],
    pub charge: i64,
}

impl Default for FrobeniusData {
    fn default() -> Self {
        Self::new()
    }
}

impl FrobeniusData {
    pub fn new() -> Self {
        let x = v1();
        let potential = (&(&x * &x) * &v2()).scale(&rat(1, 2)) + &x * &ev2() + (&(&x * &x) * &log_v1()).scale(&rat(1, 2));
        let z = || rint(0);
        FrobeniusData { potential, mu: [rat(-1, 2), rat(1, 2)], r1: [[z(), z()], [rint(2), z()]], charge: CHARGE }
    }

    /// `c_{αβγ} = ∂³F`, indices in `{0, 1}` for `v1, v2`.
    pub fn c_lower(&self, a: usize, b: usize, c: usize) -> RingElem {
        let d = |f: &RingElem, i: usize| if i == 0 { d1(f) } else { d2(f) };
        d(&d(&d(&self.potential, a), b), c)
    }

    /// `c^γ_{αβ} = η^{γξ} c_{αβξ}`.
    pub fn c(&self, g: usize, a: usize, b: usize) -> RingElem {
        self.c_lower(a, b, 1 - g)
    }

    /// Unity `e = (v1∂1 - ∂2)/(v1 - e^{v2})`.
    pub fn unity(&self) -> [RingElem; 2] {
        [-(&v1() * &dinv()), dinv()]
    }

    pub fn euler(&self) -> [RingElem; 2] {
        [v1(), RingElem::one()]
    }

    /// `φ = v2 - log(e^{v2} - v1)`
    pub fn phi(&self) -> RingElem {
        v2() - RingElem::tr(Trans::LogExpV2MinusV1)
    }

    /// Intersection form `g^{αβ}`.
    pub fn intersection_form(&self) -> [[RingElem; 2]; 2] {
        let x = v1();
        let e = ev2();
        [[(&x * &e).scale(&rint(2)), &x + &e], [&x + &e, RingElem::int(2)]]
    }

    /// `∂_E f`
    pub fn euler_derivative(&self, f: &RingElem) -> RingElem {
        canon(&(&v1() * &d1(f) + d2(f)))
    }

    /// Hessian of the next level from a gradient: `c^ε_{γβ} ∂_ε θ`.
    fn next_hessian(&self, g: &[RingElem; 2]) -> [[RingElem; 2]; 2] {
        let h = |a: usize, b: usize| canon(&(&self.c(0, a, b) * &g[0] + &self.c(1, a, b) * &g[1]));
        [[h(0, 0), h(0, 1)], [h(1, 0), h(1, 1)]]
    }

    /// Symmetry, associativity, unity, `g^{αβ} = E^ε c^{αβ}_ε`, and `φ` as a potential of `e` and `E`.
    pub fn structure_checks(&self) -> Report {
        let mut r = Report::new("Frobenius structure");
        let idx = [0usize, 1];
        for a in idx {
            for b in idx {
                for c in idx {
                    r.push(check_v(format!("c_({a}{b}{c}) = c_({b}{a}{c})"), &self.c_lower(a, b, c), &self.c_lower(b, a, c)));
                    r.push(check_v(format!("c_({a}{b}{c}) = c_({a}{c}{b})"), &self.c_lower(a, b, c), &self.c_lower(a, c, b)));
                    for n in idx {
                        let mut lhs = RingElem::zero();
                        let mut rhs = RingElem::zero();
                        for m in idx {
                            lhs += &(&self.c(m, a, b) * &self.c(n, m, c));
                            rhs += &(&self.c(m, b, c) * &self.c(n, m, a));
                        }
                        r.push(check_v(format!("associativity ({a}{b}{c}) -> {n}"), &lhs, &rhs));
                    }
                }
            }
        }
        let e = self.unity();
        for b in idx {
            for g in idx {
                let s = &(&e[0] * &self.c(g, 0, b)) + &(&e[1] * &self.c(g, 1, b));
                let delta = if b == g { RingElem::one() } else { RingElem::zero() };
                r.push(check_v(format!("e . d{} has component {}", b + 1, g + 1), &s, &delta));
            }
        }
        let eu = self.euler();
        let gf = self.intersection_form();
        for a in idx {
            for b in idx {
                // c^{αβ}_ε = η^{αμ} c^β_{με}
                let mut s = RingElem::zero();
                for e_ in idx {
                    s += &(&eu[e_] * &self.c(b, 1 - a, e_));
                }
                r.push(check_v(format!("g^({}{}) = E^e c^({}{})_e", a + 1, b + 1, a + 1, b + 1), &gf[a][b], &s));
            }
        }
        let dphi = gradient(&self.phi());
        let up = raise(&dphi);
        r.push(check_v("eta-gradient of phi = e [1]", &up[0], &e[0]));
        r.push(check_v("eta-gradient of phi = e [2]", &up[1], &e[1]));
        for a in idx {
            let s = &(&gf[a][0] * &dphi[0]) + &(&gf[a][1] * &dphi[1]);
            r.push(check_v(format!("g-gradient of phi = E [{}]", a + 1), &s, &eu[a]));
        }
        r
    }
}

/// θ-functions with their gradients, filled in on demand by the recursions.
#[derive(Clone, Debug, Default)]
pub struct ThetaTable {
    data: FrobeniusData,
    entries: BTreeMap<Label, (RingElem, [RingElem; 2])>,
}

impl ThetaTable {
    pub fn new() -> Self {
        let data = FrobeniusData::new();
        let mut entries = BTreeMap::new();
        let x = v1();
        let y = v2();
        entries.insert(Label { alpha: 2, k: 0 }, (x.clone(), gradient(&x)));
        entries.insert(Label { alpha: 1, k: 0 }, (y.clone(), gradient(&y)));
        let phi = data.phi();
        entries.insert(Label { alpha: 0, k: 0 }, (phi.clone(), gradient(&phi)));
        ThetaTable { data, entries }
    }

    pub fn data(&self) -> &FrobeniusData {
        &self.data
    }

    pub fn theta(&mut self, alpha: u8, k: i64) -> Result<RingElem, FrobError> {
        Ok(self.entry(Label::new(alpha, k)?)?.0)
    }

    pub fn grad(&mut self, alpha: u8, k: i64) -> Result<[RingElem; 2], FrobError> {
        Ok(self.entry(Label::new(alpha, k)?)?.1)
    }

    /// Every entry computed so far, in label order.
    pub fn entries(&self) -> impl Iterator<Item = (&Label, &RingElem)> {
        self.entries.iter().map(|(l, (t, _))| (l, t))
    }

    fn entry(&mut self, l: Label) -> Result<(RingElem, [RingElem; 2]), FrobError> {
        if let Some(e) = self.entries.get(&l) {
            return Ok(e.clone());
        }
        let e = if l.k > 0 { self.step_up(l)? } else { self.step_down(l)? };
        self.entries.insert(l, e.clone());
        Ok(e)
    }

    /// `θ_{α,k}`, `k ≥ 1`, from `θ_{α,k-1}`; the gradient follows from the
    /// differentiated quasi-homogeneity relation except for `∂_1` at `k = 1`,
    /// `α ∈ {0, 1}`, which is integrated with vanishing constants.
    fn step_up(&mut self, l: Label) -> Result<(RingElem, [RingElem; 2]), FrobError> {
        let k = l.k;
        let prev = self.grad(l.alpha, k - 1)?;
        let a = self.data.next_hessian(&prev);
        let x = v1();
        // (extra weight in ∂_E θ = k θ + w θ_{2,k-1}, denominator shift)
        let (w, shift) = match l.alpha {
            2 => (0, 1),
            1 => (2, 0),
            _ => (1, 0),
        };
        let (t2, g2) = if w != 0 {
            let t = self.theta(2, k - 1)?;
            let g = self.grad(2, k - 1)?;
            (t.scale(&rint(w)), [g[0].scale(&rint(w)), g[1].scale(&rint(w))])
        } else {
            (RingElem::zero(), [RingElem::zero(), RingElem::zero()])
        };
        let de1 = canon(&(&x * &a[0][0] + a[0][1].clone()));
        let de2 = canon(&(&x * &a[0][1] + a[1][1].clone()));
        let grad2 = canon(&(&de2 - &g2[1]).scale(&rint(k + shift).recip()));
        let c1 = k + shift - 1;
        let grad1 = if c1 != 0 {
            canon(&(&de1 - &g2[0]).scale(&rint(c1).recip()))
        } else {
            let mut g = antiderivative_v1(&a[0][0])?;
            let rest = canon(&(&a[0][1] - &d2(&g)));
            if !d1(&rest).is_zero() && !veq(&d1(&rest), &RingElem::zero()) {
                return Err(FrobError::Integrability { alpha: l.alpha, k, detail: format!("∂2 residual {rest} depends on v1") });
            }
            g += &antiderivative_v2(&rest)?;
            canon(&g)
        };
        let theta = canon(&(&(&x * &grad1) + &grad2 - t2).scale(&rint(k + shift).recip()));
        let grad = [grad1, grad2];
        self.verify_level(l, &theta, &grad, Some(&a))?;
        Ok((theta, grad))
    }

    /// `θ_{0,k}`, `k ≤ -1`, from `∂_β θ_{0,k} = e^α ∂_α∂_β θ_{0,k+1}` and `∂_E θ_{0,k} = k θ_{0,k}`.
    fn step_down(&mut self, l: Label) -> Result<(RingElem, [RingElem; 2]), FrobError> {
        if l.alpha != 0 {
            return Err(FrobError::OutOfDomain(l.alpha, l.k));
        }
        let up = self.grad(0, l.k + 1)?;
        let e = self.data.unity();
        let hess = |b: usize| [canon(&if b == 0 { d1(&up[0]) } else { d2(&up[0]) }), canon(&if b == 0 { d1(&up[1]) } else { d2(&up[1]) })];
        let h = [hess(0), hess(1)];
        let g = |b: usize| canon(&(&e[0] * &h[0][b] + &e[1] * &h[1][b]));
        let grad = [g(0), g(1)];
        let theta = canon(&(&v1() * &grad[0] + grad[1].clone()).scale(&rint(l.k).recip()));
        self.verify_level(l, &theta, &grad, None)?;
        // the recursion from this level back up must reproduce the Hessian of θ_{0,k+1}
        let a = self.data.next_hessian(&grad);
        for i in 0..2 {
            for j in 0..2 {
                if !veq(&a[i][j], &h[i][j]) {
                    return Err(FrobError::Integrability { alpha: 0, k: l.k, detail: format!("Hessian ({i},{j}) of level {} not reproduced", l.k + 1) });
                }
            }
        }
        Ok((theta, grad))
    }

    fn verify_level(&self, l: Label, theta: &RingElem, grad: &[RingElem; 2], hess: Option<&[[RingElem; 2]; 2]>) -> Result<(), FrobError> {
        let fail = |detail: String| FrobError::Integrability { alpha: l.alpha, k: l.k, detail };
        if !veq(&d1(theta), &grad[0]) || !veq(&d2(theta), &grad[1]) {
            return Err(fail(format!("gradient of {theta} is not ({}, {})", grad[0], grad[1])));
        }
        if !veq(&d2(&grad[0]), &d1(&grad[1])) {
            return Err(fail("mixed partials disagree".into()));
        }
        if let Some(a) = hess {
            let got = [[d1(&grad[0]), d2(&grad[0])], [d1(&grad[1]), d2(&grad[1])]];
            for i in 0..2 {
                for j in 0..2 {
                    if !veq(&got[i][j], &a[i][j]) {
                        return Err(fail(format!("Hessian entry ({i},{j}) {} differs from {}", got[i][j], a[i][j])));
                    }
                }
            }
        }
        Ok(())
    }

    /// Fills `kmin..=kmax` for one family.
    pub fn slice(&mut self, alpha: u8, kmin: i64, kmax: i64) -> Result<Vec<(Label, RingElem)>, FrobError> {
        let mut out = Vec::new();
        for k in kmin..=kmax {
            let l = Label::new(alpha, k)?;
            out.push((l, self.entry(l)?.0));
        }
        Ok(out)
    }
}

/// `∫ dv1` of `Σ c v1^n (log v1)^m r(v2, e^{v2})`.
pub fn antiderivative_v1(e: &RingElem) -> Result<RingElem, FrobError> {
    let mut out = RingElem::zero();
    for (m, c) in e.terms() {
        let n = m.exponent(&G1);
        let lg = Generator::Trans(Trans::LogV1);
        let p = m.exponent(&lg);
        let rest = m.without(&G1).without(&lg);
        if rest.factors().iter().any(|(g, _)| !matches!(g, Generator::Deriv(JetVar::V2, 0) | Generator::Trans(Trans::ExpV2))) || p < 0 {
            return Err(FrobError::Unsupported(RingElem::term(c.clone(), m.clone()).to_string()));
        }
        let r = RingElem::term(c.clone(), rest);
        out += &(&r * &int_xn_logm(n, p as u32));
    }
    Ok(out)
}

/// `∫ v1^n (log v1)^m dv1`
fn int_xn_logm(n: i32, m: u32) -> RingElem {
    let x = v1();
    let l = log_v1();
    if n == -1 {
        return l.pow(m + 1).scale(&rint(m as i64 + 1).recip());
    }
    let np1 = rint(n as i64 + 1);
    let head = (&x.powi(n + 1).unwrap() * &l.pow(m)).scale(&np1.recip());
    if m == 0 {
        return head;
    }
    head - int_xn_logm(n, m - 1).scale(&(rint(m as i64) / np1))
}

/// `∫ dv2` of `Σ c v2^l e^{j v2}`.
pub fn antiderivative_v2(e: &RingElem) -> Result<RingElem, FrobError> {
    let mut out = RingElem::zero();
    let ge = Generator::Trans(Trans::ExpV2);
    for (m, c) in e.terms() {
        let l = m.exponent(&G2);
        let j = m.exponent(&ge);
        if !m.without(&G2).without(&ge).is_one() || l < 0 {
            return Err(FrobError::Unsupported(RingElem::term(c.clone(), m.clone()).to_string()));
        }
        out += &int_yl_ej(l as u32, j).scale(c);
    }
    Ok(out)
}

fn int_yl_ej(l: u32, j: i32) -> RingElem {
    let y = v2();
    if j == 0 {
        return y.pow(l + 1).scale(&rint(l as i64 + 1).recip());
    }
    let e = ev2().powi(j).unwrap();
    let head = (&y.pow(l) * &e).scale(&rint(j as i64).recip());
    if l == 0 {
        return head;
    }
    head - int_yl_ej(l - 1, j).scale(&(rint(l as i64) / rint(j as i64)))
}

/// Finite Laurent polynomial or truncated series in one local variable;
/// coefficients are exact for powers `≤ hi`.
#[derive(Clone, Debug, PartialEq)]
struct Ser {
    terms: BTreeMap<i64, RingElem>,
    hi: Option<i64>,
}

impl Ser {
    fn poly(it: impl IntoIterator<Item = (i64, RingElem)>) -> Ser {
        let mut s = Ser { terms: BTreeMap::new(), hi: None };
        for (k, c) in it {
            s.add_term(k, &c);
        }
        s
    }

    fn add_term(&mut self, k: i64, c: &RingElem) {
        if self.hi.is_some_and(|h| k > h) {
            return;
        }
        let e = self.terms.entry(k).or_insert_with(RingElem::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    fn lo(&self) -> i64 {
        self.terms.keys().next().copied().unwrap_or(0)
    }

    fn mul(&self, o: &Ser) -> Ser {
        let hi = match (self.hi, o.hi) {
            (None, None) => None,
            (Some(a), None) => Some(a + o.lo()),
            (None, Some(b)) => Some(b + self.lo()),
            (Some(a), Some(b)) => Some((a + o.lo()).min(b + self.lo())),
        };
        let mut out = Ser { terms: BTreeMap::new(), hi };
        for (i, a) in &self.terms {
            for (j, b) in &o.terms {
                if hi.is_some_and(|h| i + j > h) {
                    continue;
                }
                out.add_term(i + j, &canon(&(a * b)));
            }
        }
        out
    }

    fn add(&self, o: &Ser) -> Ser {
        let hi = match (self.hi, o.hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let mut out = Ser { terms: BTreeMap::new(), hi };
        for (k, c) in self.terms.iter().chain(o.terms.iter()) {
            out.add_term(*k, c);
        }
        out
    }

    fn pow(&self, n: u32) -> Ser {
        (0..n).fold(Ser::poly([(0, RingElem::one())]), |acc, _| acc.mul(self))
    }

    fn coeff(&self, k: i64) -> RingElem {
        assert!(self.hi.map_or(true, |h| k <= h), "coefficient {k} beyond truncation");
        canon(&self.terms.get(&k).cloned().unwrap_or_else(RingElem::zero))
    }
}

/// `Σ_{j=1}^{n} (-1)^{j+1}/j · (a t^{sign})^j`
fn log1p_terms(a: &RingElem, sign: i64, n: i64) -> Ser {
    Ser::poly((1..=n).map(|j| {
        let c = rat(if j % 2 == 1 { 1 } else { -1 }, j);
        (sign * j, a.pow(j as u32).scale(&c))
    }))
}

/// `λ^k / p` about `p = e^{v2}` in `s = p - e^{v2}`: `(s + e^{v2})^{k-1}(1 + v1/s)^k`.
fn lambda_k_over_p_at_e(k: u32) -> Ser {
    let a = Ser::poly([(1, RingElem::one()), (0, ev2())]);
    let b = Ser::poly([(0, RingElem::one()), (-1, v1())]);
    a.pow(k - 1).mul(&b.pow(k))
}

/// `log⁺ λ` truncated to powers in `[-n, n]` of `s`.
fn log_plus(n: i64) -> Ser {
    let einv = ev2().powi(-1).unwrap();
    Ser::poly([(0, v2())]).add(&log1p_terms(&einv, 1, n)).add(&log1p_terms(&v1(), -1, n))
}

/// `log⁻ λ` truncated to powers in `[-n, n]` of `s`.
fn log_minus(n: i64) -> Ser {
    let xinv = v1().powi(-1).unwrap();
    Ser::poly([(0, log_v1())]).add(&log1p_terms(&xinv, 1, n)).add(&log1p_terms(&ev2(), -1, n))
}

/// `Res_{p=0} λ^{-n} dp/p`. With `λ^{-n}/p = p^{-n-1}(p - e^{v2})^n (p + v1 - e^{v2})^{-n}`
/// this is the `p^n` coefficient of the last two factors.
pub fn residue_at_zero(n: u32) -> RingElem {
    let mut inv = Ser { terms: BTreeMap::new(), hi: Some(n as i64) };
    for j in 0..=n as i64 {
        inv.add_term(j, &-dinv().pow(j as u32 + 1));
    }
    let poly = Ser::poly([(1, RingElem::one()), (0, -ev2())]).pow(n);
    poly.mul(&inv.pow(n)).coeff(n as i64)
}

/// θ-functions from residues of the superpotential `λ(p) = p + v1 + v1e^{v2}/(p - e^{v2})`.
/// At `p = 0` the prefactor is `(-1)^k (k-1)!`, matching the lattice densities `h_{0,-k}`.
pub fn theta_by_residue(alpha: u8, k: i64) -> Result<RingElem, FrobError> {
    match (alpha, k) {
        (2, k) if k >= 1 => {
            // at p = ∞ in t = 1/p: λ = t^{-1} + v1 + v1 Σ_j e^{j v2} t^j
            let n = k as u32;
            let mut lam = Ser::poly([(-1, RingElem::one()), (0, v1())]);
            lam.hi = Some(n as i64);
            for j in 1..=n as i64 {
                lam.add_term(j, &(&v1() * &ev2().pow(j as u32)));
            }
            Ok(lam.pow(n + 1).coeff(0).scale(&factorial(n + 1).recip()))
        }
        (0, k) if k <= -1 => {
            let n = (-k) as u32;
            let r = residue_at_zero(n);
            Ok(canon(&r.scale(&(sign(n as i64) * factorial(n - 1)))))
        }
        (0 | 1, k) if k >= 1 => {
            let n = k as u32;
            let f = lambda_k_over_p_at_e(n);
            let h = harmonic(n);
            let logs = if alpha == 0 {
                log_plus(k).add(&Ser::poly([(0, RingElem::constant(-h))]))
            } else {
                log_plus(k).add(&log_minus(k)).add(&Ser::poly([(0, RingElem::constant(-h * rint(2)))]))
            };
            Ok(canon(&f.mul(&logs).coeff(-1).scale(&factorial(n).recip())))
        }
        _ => Err(FrobError::OutOfDomain(alpha, k)),
    }
}

/// Quasi-homogeneity of each computed level.
pub fn quasi_homogeneity_check(t: &mut ThetaTable, labels: &[Label]) -> Result<Report, FrobError> {
    let mut r = Report::new("quasi-homogeneity");
    for l in labels {
        let th = t.theta(l.alpha, l.k)?;
        let de = t.data().euler_derivative(&th);
        let k = rint(l.k);
        let rhs = match (l.alpha, l.k) {
            (2, _) => th.scale(&(k + rint(1))),
            (1, kk) if kk >= 1 => th.scale(&k) + t.theta(2, kk - 1)?.scale(&rint(2)),
            (0, kk) if kk >= 1 => th.scale(&k) + t.theta(2, kk - 1)?,
            (0, kk) if kk <= -1 => th.scale(&k),
            _ => continue,
        };
        r.push(check_v(format!("E theta{l}"), &de, &rhs));
    }
    Ok(r)
}

/// The recursion `∂_α∂_β θ_{k+1} = c^γ_{αβ} ∂_γ θ_k` between consecutive levels.
pub fn recursion_check(t: &mut ThetaTable, alpha: u8, kmin: i64, kmax: i64) -> Result<Report, FrobError> {
    let mut r = Report::new(format!("theta recursion alpha={alpha}"));
    for k in kmin..kmax {
        let lo = t.grad(alpha, k)?;
        let hi = t.grad(alpha, k + 1)?;
        let a = t.data().next_hessian(&lo);
        let h = [[d1(&hi[0]), d2(&hi[0])], [d1(&hi[1]), d2(&hi[1])]];
        for i in 0..2 {
            for j in 0..2 {
                r.push(check_v(format!("d{}d{} theta({alpha},{}) = c d theta({alpha},{k})", i + 1, j + 1, k + 1), &h[i][j], &a[i][j]));
            }
        }
    }
    Ok(r)
}

/// Recursion-method against residue-method θ.
pub fn cross_method_check(t: &mut ThetaTable, labels: &[Label]) -> Result<Report, FrobError> {
    let mut r = Report::new("theta: recursion vs residue");
    for l in labels {
        let a = t.theta(l.alpha, l.k)?;
        let b = theta_by_residue(l.alpha, l.k)?;
        r.push(check_v(format!("theta{l}"), &a, &b));
    }
    Ok(r)
}

/// The printed closed forms.
pub fn golden_thetas() -> Vec<(Label, RingElem)> {
    let x = v1();
    let y = v2();
    let e = ev2();
    let lx = log_v1();
    let half = rat(1, 2);
    let t21 = &x * &e + (&x * &x).scale(&half);
    let t11 = &(&y + &lx) * &x + (&e - &x);
    let t12 = &(&y + &lx) * &t21 + (e.pow(2) - (&x * &e).scale(&rint(4)) - x.pow(2)).scale(&rat(1, 4));
    let t22 = (&x * &e.pow(2)).scale(&half) + &x.pow(2) * &e + x.pow(3).scale(&rat(1, 6));
    let t01 = &x * &y;
    let t02 = (&(&y + &RingElem::one()) * &x.pow(2)).scale(&half) + &(&(&y - &RingElem::one()) * &e) * &x;
    // (v1 - e^{v2})^{-1} = -D
    let t0m1 = -(&x * &dinv().pow(2));
    let t0m2 = (&t21 * &dinv().pow(4)).scale(&rint(2));
    let l = |a, k| Label { alpha: a, k };
    vec![
        (l(1, 1), t11),
        (l(2, 1), t21),
        (l(1, 2), t12),
        (l(2, 2), t22),
        (l(0, 1), t01),
        (l(0, 2), t02),
        (l(0, -1), t0m1),
        (l(0, -2), t0m2),
    ]
}

pub fn golden_check(t: &mut ThetaTable) -> Result<Report, FrobError> {
    let mut r = Report::new("theta golden set");
    for (l, g) in golden_thetas() {
        r.push(check_v(format!("theta{l}"), &t.theta(l.alpha, l.k)?, &g));
    }
    Ok(r)
}

/// `∂v^α/∂t^{β,q} = η^{αε} ∂x ∂_ε θ_{β,q+1}`, derivative picture.
pub fn principal_flow(t: &mut ThetaTable, l: Label) -> Result<[RingElem; 2], FrobError> {
    let g = raise(&t.grad(l.alpha, l.k + 1)?);
    let dx = |e: &RingElem| canon(&e.total_x_derivative().expect("derivative picture"));
    Ok([dx(&g[0]), dx(&g[1])])
}

/// `Ω⁰_{α,k;β,ℓ}`. The `α = β = 0`, `ℓ < 0` case uses the telescoped sum
/// `Σ_{m=0}^{-ℓ-1} (-1)^m ⟨∇θ_{0,k-m}, ∇θ_{0,ℓ+1+m}⟩ + (-1)^ℓ θ_{0,k+ℓ}`;
/// [`omega0_printed_case4`] evaluates the printed index pattern.
pub fn omega0(t: &mut ThetaTable, a: Label, b: Label) -> Result<RingElem, FrobError> {
    let mut s = RingElem::zero();
    match (a.alpha, b.alpha) {
        (_, 1 | 2) => {
            for m in 0..=b.k {
                let p = pairing(&t.grad(a.alpha, a.k + 1 + m)?, &t.grad(b.alpha, b.k - m)?);
                s += &p.scale(&sign(m));
            }
        }
        (1 | 2, 0) => return omega0(t, b, a),
        (0, 0) if b.k >= 0 => {
            for m in 0..b.k {
                let p = pairing(&t.grad(0, a.k + 1 + m)?, &t.grad(0, b.k - m)?);
                s += &p.scale(&sign(m));
            }
            s += &t.theta(0, a.k + b.k)?.scale(&sign(b.k));
        }
        (0, 0) => {
            for m in 0..(-b.k) {
                let p = pairing(&t.grad(0, a.k - m)?, &t.grad(0, b.k + 1 + m)?);
                s += &p.scale(&sign(m));
            }
            s += &t.theta(0, a.k + b.k)?.scale(&sign(b.k));
        }
        _ => return Err(FrobError::OutOfDomain(a.alpha, a.k)),
    }
    Ok(canon(&s))
}

/// The printed fourth case, `Σ_{m=0}^{-ℓ-1} (-1)^m ⟨∇θ_{0,k+1-m}, ∇θ_{0,ℓ+m}⟩ + (-1)^ℓ θ_{0,k+ℓ}`.
pub fn omega0_printed_case4(t: &mut ThetaTable, k: i64, l: i64) -> Result<RingElem, FrobError> {
    assert!(l < 0);
    let mut s = RingElem::zero();
    for m in 0..(-l) {
        s += &pairing(&t.grad(0, k + 1 - m)?, &t.grad(0, l + m)?).scale(&sign(m));
    }
    s += &t.theta(0, k + l)?.scale(&sign(l));
    Ok(canon(&s))
}

fn sign(m: i64) -> Rat {
    if m.rem_euclid(2) == 0 {
        rint(1)
    } else {
        rint(-1)
    }
}

/// `∂θ_{α,k}/∂t^{β,ℓ} = ⟨∇θ_{α,k}, ∂x ∇θ_{β,ℓ+1}⟩`.
pub fn theta_time_derivative(t: &mut ThetaTable, a: Label, b: Label) -> Result<RingElem, FrobError> {
    let ga = t.grad(a.alpha, a.k)?;
    let gb = t.grad(b.alpha, b.k + 1)?;
    let dx = |e: &RingElem| e.total_x_derivative().expect("derivative picture");
    Ok(canon(&pairing(&ga, &[dx(&gb[0]), dx(&gb[1])])))
}

/// Symmetry, `∂xΩ = ∂θ_a/∂t^b` and `Ω_{0,0;a} = θ_a` over all pairs of `labels`.
pub fn omega_checks(t: &mut ThetaTable, labels: &[Label]) -> Result<Report, FrobError> {
    let mut r = Report::new("two-point functions");
    for (i, a) in labels.iter().enumerate() {
        let o = omega0(t, Label { alpha: 0, k: 0 }, *a)?;
        r.push(check_v(format!("Omega(0,0;{a}) = theta{a}"), &o, &t.theta(a.alpha, a.k)?));
        for b in &labels[i..] {
            let ab = omega0(t, *a, *b)?;
            let ba = omega0(t, *b, *a)?;
            r.push(check_v(format!("Omega({a};{b}) symmetric"), &ab, &ba));
            let dx = ab.total_x_derivative().expect("derivative picture");
            r.push(check_v(format!("dx Omega({a};{b}) = d theta{a} / dt{b}"), &dx, &theta_time_derivative(t, *a, *b)?));
            r.push(check_v(format!("dx Omega({a};{b}) = d theta{b} / dt{a}"), &dx, &theta_time_derivative(t, *b, *a)?));
        }
    }
    Ok(r)
}

/// `u^{1,2} = e^{v2} + v1 ± 2√(v1 e^{v2})`.
pub fn canonical_coords() -> (RingElem, RingElem) {
    let s = RingElem::tr(Trans::SqrtV1ExpV2).scale(&rint(2));
    let b = ev2() + v1();
    (&b + &s, &b - &s)
}

/// `(v1, e^{v2}) = ((√u1 ∓ √u2)/2)²` written as `(u1 + u2 ∓ 2r)/4` with `r = √(u1u2)`.
pub fn flat_coords(u1: &RingElem, u2: &RingElem, r: &RingElem) -> (RingElem, RingElem) {
    let s = u1 + u2;
    let q = rat(1, 4);
    ((&s - &r.scale(&rint(2))).scale(&q), (&s + &r.scale(&rint(2))).scale(&q))
}

/// Replaces `√(v1e^{v2})^2` by `v1 e^{v2}`.
pub fn reduce_sqrt(e: &RingElem) -> RingElem {
    let gs = Generator::Trans(Trans::SqrtV1ExpV2);
    let mut out = RingElem::zero();
    for (m, c) in e.terms() {
        let n = m.exponent(&gs);
        let (q, r) = (n.div_euclid(2), n.rem_euclid(2));
        let base = RingElem::term(c.clone(), m.without(&gs).mul(&crate::ring::Monomial::gen(gs, r)));
        out += &(&base * &(&v1() * &ev2()).powi(q).expect("monomial"));
    }
    out
}

pub fn canonical_coords_check() -> Report {
    let mut r = Report::new("canonical coordinates");
    let (u1, u2) = canonical_coords();
    let prod = reduce_sqrt(&(&u1 * &u2));
    let expect = (ev2() + v1()).pow(2) - (&v1() * &ev2()).scale(&rint(4));
    r.push(Check::equal("u1 u2 = (e^v2 + v1)^2 - 4 v1 e^v2", &prod, &expect));
    let root = ev2() - v1();
    r.push(Check::equal("(e^v2 - v1)^2 = u1 u2", &root.pow(2), &prod));
    let (a, b) = flat_coords(&u1, &u2, &root);
    r.push(Check::equal("v1 from u", &a, &v1()));
    r.push(Check::equal("e^v2 from u", &b, &ev2()));
    // the printed square-root form at a sample point
    let (x, y) = (0.37_f64, -0.4_f64);
    let e = y.exp();
    let (n1, n2) = (e + x + 2.0 * (x * e).sqrt(), e + x - 2.0 * (x * e).sqrt());
    let vx = ((n1.sqrt() - n2.sqrt()) / 2.0).powi(2);
    let vy = ((n1.sqrt() + n2.sqrt()) / 2.0).powi(2).ln();
    let ok = (vx - x).abs() < 1e-12 && (vy - y).abs() < 1e-12;
    r.push(Check::flag("numerical round trip", ok, format!("({vx}, {vy})"), format!("({x}, {y})")));
    r
}

fn apply_dx(m: &DxMatrix, g: &[RingElem; 2]) -> [RingElem; 2] {
    let row = |i: usize| canon(&(m[i][0].apply(&g[0]) + m[i][1].apply(&g[1])));
    [row(0), row(1)]
}

/// The four bihamiltonian recursion relations of the Principal Hierarchy for
/// `1 ≤ p ≤ pmax`; the `α = 1` line is checked as
/// `𝒫_1∇θ_{1,p} = p𝒫_0∇θ_{1,p+1} + 2𝒫_0∇θ_{2,p}`.
pub fn dispersionless_recursion_check(t: &mut ThetaTable, pmax: i64) -> Result<Report, FrobError> {
    let mut r = Report::new("dispersionless bihamiltonian recursion");
    let (p0, p1) = dispersionless_hamops();
    let pair = |r: &mut Report, name: String, a: [RingElem; 2], b: [RingElem; 2]| {
        for i in 0..2 {
            r.push(check_v(format!("{name} [{}]", i + 1), &a[i], &b[i]));
        }
    };
    for p in 1..=pmax {
        let pr = rint(p);
        let lhs = apply_dx(&p1, &t.grad(2, p)?);
        let rhs = apply_dx(&p0, &t.grad(2, p + 1)?).map(|e| e.scale(&(&pr + rint(1))));
        pair(&mut r, format!("{{v,H(2,{})}}_1 = {} {{v,H(2,{p})}}_0", p - 1, p + 1), lhs, rhs);
        let lhs = apply_dx(&p1, &t.grad(1, p)?);
        let a = apply_dx(&p0, &t.grad(1, p + 1)?);
        let b = apply_dx(&p0, &t.grad(2, p)?);
        let rhs = [a[0].scale(&pr) + b[0].scale(&rint(2)), a[1].scale(&pr) + b[1].scale(&rint(2))];
        pair(&mut r, format!("{{v,H(1,{})}}_1 = {p} {{v,H(1,{p})}}_0 + 2 {{v,H(2,{})}}_0", p - 1, p - 1), lhs, rhs);
        let lhs = apply_dx(&p1, &t.grad(0, p)?);
        let a = apply_dx(&p0, &t.grad(0, p + 1)?);
        let rhs = [a[0].scale(&pr) + b[0].clone(), a[1].scale(&pr) + b[1].clone()];
        pair(&mut r, format!("{{v,H(0,{})}}_1 = {p} {{v,H(0,{p})}}_0 + {{v,H(2,{})}}_0", p - 1, p - 1), lhs, rhs);
        let lhs = apply_dx(&p1, &t.grad(0, -p)?);
        let rhs = apply_dx(&p0, &t.grad(0, -p + 1)?).map(|e| e.scale(&-pr.clone()));
        pair(&mut r, format!("{{v,H(0,{})}}_1 = -{p} {{v,H(0,{})}}_0", -p - 1, -p), lhs, rhs);
    }
    Ok(r)
}

/// The printed `α = 1` line, `𝒫_1∇θ_{1,p} = p𝒫_0∇θ_{2,p+1} + 2𝒫_0∇θ_{2,p}`.
pub fn printed_alpha1_recursion_holds(t: &mut ThetaTable, p: i64) -> Result<bool, FrobError> {
    let (p0, p1) = dispersionless_hamops();
    let lhs = apply_dx(&p1, &t.grad(1, p)?);
    let a = apply_dx(&p0, &t.grad(2, p + 1)?);
    let b = apply_dx(&p0, &t.grad(2, p)?);
    Ok((0..2).all(|i| veq(&lhs[i], &(a[i].scale(&rint(p)) + b[i].scale(&rint(2))))))
}

/// `ε⁰` limits of lattice densities against θ under `w1 = Q - P`, `e^{w2} = Q`.
pub fn dispersionless_density_check(t: &mut ThetaTable, pmax: u32, qmax: u32) -> Result<Report, FrobError> {
    let mut r = Report::new("dispersionless densities");
    for p in 0..=pmax {
        let lim = pq_to_v(&dispersionless(&density_positive(p).value)).expect("v substitution");
        r.push(check_v(format!("h(2,{p}) -> theta(2,{p})"), &lim, &t.theta(2, p as i64)?));
    }
    for q in 1..=qmax {
        let lim = pq_to_v(&dispersionless(&density_negative(q).value)).expect("v substitution");
        r.push(check_v(format!("h(0,-{q}) -> theta(0,-{q})"), &lim, &t.theta(0, -(q as i64))?));
    }
    let h00 = pq_to_v(density_h00(0).coeff(0)).expect("v substitution");
    r.push(check_v("h(0,0) -> theta(0,0)", &h00, &t.theta(0, 0)?));
    Ok(r)
}

/// Leading order of the Lax flows against the Principal Hierarchy.
pub fn dispersionless_flow_check(t: &mut ThetaTable, labels: &[FlowLabel]) -> Result<Report, FrobError> {
    let mut r = Report::new("dispersionless flows");
    for fl in labels {
        let f = lax_flow(*fl).expect("lax flow");
        let lead = |e: &RingElem| {
            let s = e.eps_expand(1).expect("shift picture");
            (s.coeff(0).clone(), s.coeff(1).clone())
        };
        let (p0, p1) = lead(&f.dp);
        let (q0, q1) = lead(&f.dq);
        r.push(Check::zero(format!("{fl}: no ε^-1 term in P"), &p0));
        r.push(Check::zero(format!("{fl}: no ε^-1 term in Q"), &q0));
        let dv1 = pq_to_v(&(&q1 - &p1)).expect("v substitution");
        let dv2 = pq_to_v(&(&q1 * &RingElem::dj(JetVar::Q, 0).powi(-1).unwrap())).expect("v substitution");
        let l = Label { alpha: fl.alpha(), k: fl.level() };
        let pf = principal_flow(t, l)?;
        r.push(check_v(format!("{fl}: v1"), &dv1, &pf[0]));
        r.push(check_v(format!("{fl}: v2"), &dv2, &pf[1]));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(a: u8, k: i64) -> Label {
        Label { alpha: a, k }
    }

    #[test]
    fn structure() {
        let r = FrobeniusData::new().structure_checks();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn canon_reduces_unity_relation() {
        let e = &dinv() * &(ev2() - v1());
        assert_eq!(canon(&e), RingElem::one());
        assert_eq!(canon(&(RingElem::one() - &ev2() * &dinv())), -(&v1() * &dinv()));
    }

    #[test]
    fn golden_thetas_by_recursion() {
        let mut t = ThetaTable::new();
        let r = golden_check(&mut t).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn residues_agree_with_recursion() {
        let mut t = ThetaTable::new();
        let labels: Vec<Label> =
            [l(2, 1), l(2, 2), l(1, 1), l(1, 2), l(0, 1), l(0, 2), l(0, -1), l(0, -2), l(0, -3)].to_vec();
        let r = cross_method_check(&mut t, &labels).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn printed_zero_residue_normalization_is_off_by_minus_k() {
        let mut t = ThetaTable::new();
        for n in 1..=3u32 {
            let printed = residue_at_zero(n).scale(&(sign(n as i64 - 1) * factorial(n)));
            let theta = t.theta(0, -(n as i64)).unwrap();
            assert!(veq(&printed, &theta.scale(&rint(-(n as i64)))));
        }
    }

    #[test]
    fn residue_examples() {
        let x = v1();
        assert_eq!(theta_by_residue(0, 1).unwrap(), &x * &v2());
        let t21 = &x * &ev2() + (&x * &x).scale(&rat(1, 2));
        assert_eq!(theta_by_residue(2, 1).unwrap(), t21);
    }

    #[test]
    fn quasi_homogeneity_and_recursion() {
        let mut t = ThetaTable::new();
        let labels: Vec<Label> = (1..=3).flat_map(|k| [l(1, k), l(2, k), l(0, k), l(0, -k)]).collect();
        let r = quasi_homogeneity_check(&mut t, &labels).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
        for (a, lo, hi) in [(0u8, -3i64, 3i64), (1, 0, 3), (2, 0, 3)] {
            let r = recursion_check(&mut t, a, lo, hi).unwrap();
            assert!(r.passed(), "{:?}", r.first_failure());
        }
    }

    #[test]
    fn base_flow_is_translation() {
        let mut t = ThetaTable::new();
        let f = principal_flow(&mut t, l(0, 0)).unwrap();
        assert_eq!(f[0], RingElem::dj(JetVar::V1, 1));
        assert_eq!(f[1], RingElem::dj(JetVar::V2, 1));
    }

    #[test]
    fn two_point_functions() {
        let mut t = ThetaTable::new();
        let labels = [l(2, 0), l(1, 0), l(2, 1), l(1, 1), l(0, 1), l(0, -1), l(0, -2), l(0, 2)];
        let r = omega_checks(&mut t, &labels).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
        let o = omega0(&mut t, l(2, 0), l(2, 0)).unwrap();
        let expect = pairing(&t.grad(2, 1).unwrap(), &t.grad(2, 0).unwrap());
        assert!(veq(&o, &expect));
    }

    #[test]
    fn printed_fourth_case_differs() {
        let mut t = ThetaTable::new();
        let printed = omega0_printed_case4(&mut t, 0, -1).unwrap();
        let theta = t.theta(0, -1).unwrap();
        assert!(!veq(&printed, &theta));
        assert!(veq(&omega0(&mut t, l(0, 0), l(0, -1)).unwrap(), &theta));
    }

    #[test]
    fn canonical_coordinates() {
        let r = canonical_coords_check();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn recursion_of_principal_hierarchy() {
        let mut t = ThetaTable::new();
        let r = dispersionless_recursion_check(&mut t, 2).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
        assert!(!printed_alpha1_recursion_holds(&mut t, 1).unwrap());
    }

    #[test]
    fn lattice_densities_and_flows_reduce_to_theta() {
        let mut t = ThetaTable::new();
        let r = dispersionless_density_check(&mut t, 2, 2).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
        let flows = [FlowLabel::Pos(0), FlowLabel::Pos(1), FlowLabel::Neg(1), FlowLabel::Neg(2)];
        let r = dispersionless_flow_check(&mut t, &flows).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn antiderivatives() {
        let x = v1();
        let f = &x * &log_v1();
        let g = antiderivative_v1(&f).unwrap();
        assert_eq!(d1(&g), f);
        let h = &v2() * &ev2().pow(2);
        assert_eq!(d2(&antiderivative_v2(&h).unwrap()), h);
        assert!(antiderivative_v1(&dinv()).is_err());
    }
}
