//! Virasoro operators `L_m`, `m ≥ -1`, on a finite window of times, and the
//! commutation relations `[L_m, L_n] = (m - n) L_{m+n}`.
//!
//! Operators are normal-ordered elements of the Weyl algebra in `t^{α,p}` and
//! `∂/∂t^{α,p}` with `ε = 1`; the operators are homogeneous in `ε` so this
//! loses nothing. `κ` is carried as a formal coefficient.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::report::{Check, Report};
use crate::ring::{factorial, rat, rint, Rat};

#[derive(Debug, Error, PartialEq)]
pub enum VirasoroError {
    #[error("alpha_{m}({k}) is undefined for k <= -m")]
    OutOfDomain { m: i64, k: i64 },
    #[error("L_{0} is not defined")]
    BadIndex(i64),
}

/// The time `t^{α,p}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Time {
    pub alpha: u8,
    pub p: i64,
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{},{}", self.alpha, self.p)
    }
}

fn t(alpha: u8, p: i64) -> Time {
    Time { alpha, p }
}

/// `t^{1,p}, t^{2,p}` for `0 ≤ p ≤ P_max` and `t^{0,p}` for `|p| ≤ P_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub pmax: i64,
}

impl Window {
    pub fn contains(&self, v: Time) -> bool {
        match v.alpha {
            0 => v.p.abs() <= self.pmax,
            _ => (0..=self.pmax).contains(&v.p),
        }
    }

    /// Times at distance more than `margin` from the truncation edge.
    pub fn interior(&self, v: Time, margin: i64) -> bool {
        v.p.abs() <= self.pmax - margin
    }
}

/// `β_m(k) = (m+k)!/(k-1)!`, `k ≥ 1`.
pub fn beta_coeff(m: i64, k: i64) -> Rat {
    assert!(k >= 1 && m + k >= 0);
    factorial((m + k) as u32) / factorial((k - 1) as u32)
}

/// `α_m(k)` on its three branches.
pub fn alpha_coeff(m: i64, k: i64) -> Result<Rat, VirasoroError> {
    if k > 0 {
        let h = (k..=m + k).fold(Rat::zero(), |acc, j| acc + rat(1, j));
        Ok(beta_coeff(m, k) * h)
    } else if k == 0 {
        Ok(factorial(m as u32))
    } else if -m < k {
        let s = if k % 2 == 0 { rint(1) } else { rint(-1) };
        Ok(s * factorial((-k) as u32) * factorial((k + m) as u32))
    } else {
        Err(VirasoroError::OutOfDomain { m, k })
    }
}

/// Which printed group a coefficient came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Group {
    Beta,
    AlphaPositive,
    AlphaNegative,
    Lower,
}

/// `L_m = a^{ij} ∂_i∂_j + b^i_j t^j ∂_i + c_{ij} t^i t^j + κ δ_{m,0}`, summed over ordered pairs.
#[derive(Clone, Debug)]
pub struct VirasoroOp {
    pub m: i64,
    pub window: Window,
    /// keyed `(i, j)`, symmetric
    pub a: BTreeMap<(Time, Time), Rat>,
    /// keyed `(∂ index, t index)`
    pub b: BTreeMap<(Time, Time), Rat>,
    /// keyed `(i, j)`, symmetric
    pub c: BTreeMap<(Time, Time), Rat>,
    pub kappa: Rat,
    sources: BTreeMap<(Time, Time), BTreeSet<Group>>,
}

impl VirasoroOp {
    fn new(m: i64, window: Window) -> Self {
        VirasoroOp {
            m,
            window,
            a: BTreeMap::new(),
            b: BTreeMap::new(),
            c: BTreeMap::new(),
            kappa: if m == 0 { Rat::one() } else { Rat::zero() },
            sources: BTreeMap::new(),
        }
    }

    fn inside(&self, vs: &[Time]) -> bool {
        vs.iter().all(|v| self.window.contains(*v))
    }

    fn add_b(&mut self, d: Time, tv: Time, v: Rat, g: Group) {
        if v.is_zero() || !self.inside(&[d, tv]) {
            return;
        }
        self.sources.entry((d, tv)).or_default().insert(g);
        add(&mut self.b, (d, tv), v);
    }

    fn add_sym(map: &mut BTreeMap<(Time, Time), Rat>, i: Time, j: Time, v: Rat) {
        if i == j {
            add(map, (i, j), v);
        } else {
            let h = v * rat(1, 2);
            add(map, (i, j), h.clone());
            add(map, (j, i), h);
        }
    }

    fn add_a(&mut self, i: Time, j: Time, v: Rat) {
        if self.inside(&[i, j]) {
            Self::add_sym(&mut self.a, i, j, v);
        }
    }

    fn add_c(&mut self, i: Time, j: Time, v: Rat) {
        if self.inside(&[i, j]) {
            Self::add_sym(&mut self.c, i, j, v);
        }
    }

    /// `(∂ index, t index)` entries that more than one printed group contributes to.
    pub fn overlaps(&self) -> Vec<((Time, Time), Vec<Group>)> {
        self.sources.iter().filter(|(_, g)| g.len() > 1).map(|(k, g)| (*k, g.iter().copied().collect())).collect()
    }

    /// Sparse coefficient dump; rationals are written as strings.
    pub fn to_json(&self) -> serde_json::Value {
        let dump = |map: &BTreeMap<(Time, Time), Rat>| {
            map.iter().map(|((i, j), v)| serde_json::json!([i.to_string(), j.to_string(), v.to_string()])).collect::<Vec<_>>()
        };
        serde_json::json!({
            "m": self.m,
            "pmax": self.window.pmax,
            "a": dump(&self.a),
            "b": dump(&self.b),
            "c": dump(&self.c),
            "kappa": self.kappa.to_string(),
        })
    }

    pub fn to_weyl(&self) -> Weyl {
        let mut w = Weyl::zero();
        for ((i, j), v) in &self.a {
            w.add(WMono::new(&[], &[*i, *j]), v.clone());
        }
        for ((d, tv), v) in &self.b {
            w.add(WMono::new(&[*tv], &[*d]), v.clone());
        }
        for ((i, j), v) in &self.c {
            w.add(WMono::new(&[*i, *j], &[]), v.clone());
        }
        w.kappa = self.kappa.clone();
        w
    }
}

fn add(map: &mut BTreeMap<(Time, Time), Rat>, k: (Time, Time), v: Rat) {
    let e = map.entry(k).or_insert_with(Rat::zero);
    *e += v;
    if e.is_zero() {
        map.remove(&k);
    }
}

/// `L_m` truncated to `window`; terms touching a time outside the window are dropped.
pub fn build_virasoro(m: i64, window: Window) -> Result<VirasoroOp, VirasoroError> {
    if m < -1 {
        return Err(VirasoroError::BadIndex(m));
    }
    let mut op = VirasoroOp::new(m, window);
    let n = window.pmax;
    match m {
        -1 => {
            for k in 1..=n + 1 {
                op.add_b(t(1, k - 1), t(1, k), rint(1), Group::Lower);
                op.add_b(t(2, k - 1), t(2, k), rint(1), Group::Lower);
            }
            for p in -n..=n + 1 {
                op.add_b(t(0, p - 1), t(0, p), rint(1), Group::Lower);
            }
            op.add_c(t(1, 0), t(2, 0), rint(1));
        }
        0 => {
            for k in 1..=n + 1 {
                op.add_b(t(1, k), t(1, k), rint(k), Group::Lower);
                op.add_b(t(2, k - 1), t(2, k - 1), rint(k), Group::Lower);
                op.add_b(t(2, k - 1), t(1, k), rint(2), Group::Lower);
                op.add_b(t(2, k - 1), t(0, k), rint(1), Group::Lower);
            }
            for p in -n..=n {
                op.add_b(t(0, p), t(0, p), rint(p), Group::Lower);
            }
            op.add_c(t(1, 0), t(1, 0), rint(1));
            for k in 0..=n {
                let s = if k % 2 == 0 { rint(1) } else { rint(-1) };
                op.add_c(t(0, -k), t(1, k), s);
            }
        }
        _ => {
            let sgn = |e: i64| if e.rem_euclid(2) == 0 { rint(1) } else { rint(-1) };
            for k in 1..=n + 1 {
                let bm = beta_coeff(m, k);
                op.add_b(t(1, k + m), t(1, k), bm.clone(), Group::Beta);
                op.add_b(t(2, k + m - 1), t(2, k - 1), bm.clone(), Group::Beta);
                op.add_b(t(0, k + m), t(0, k), bm.clone(), Group::Beta);
                op.add_b(t(0, -k), t(0, -k - m), bm * sgn(m + 1), Group::Beta);
            }
            for k in 0..=n {
                let am = alpha_coeff(m, k)?;
                op.add_b(t(2, k + m - 1), t(1, k), am.clone() * rint(2), Group::AlphaPositive);
                op.add_b(t(2, k + m - 1), t(0, k), am.clone(), Group::AlphaPositive);
                op.add_c(t(0, -k - m), t(1, k), am * sgn(k + m));
            }
            for k in (1 - m)..=-1 {
                let am = alpha_coeff(m, k)?;
                op.add_a(t(2, k + m - 1), t(2, -k - 1), am.clone() * sgn(k));
                op.add_b(t(2, k + m - 1), t(0, k), am, Group::AlphaNegative);
            }
        }
    }
    Ok(op)
}

/// `∏ t_i^{e_i} ∏ ∂_j^{f_j}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WMono {
    pub t: BTreeMap<Time, u32>,
    pub d: BTreeMap<Time, u32>,
}

impl WMono {
    pub fn new(ts: &[Time], ds: &[Time]) -> Self {
        let mut m = WMono { t: BTreeMap::new(), d: BTreeMap::new() };
        for v in ts {
            *m.t.entry(*v).or_insert(0) += 1;
        }
        for v in ds {
            *m.d.entry(*v).or_insert(0) += 1;
        }
        m
    }

    fn vars(&self) -> impl Iterator<Item = Time> + '_ {
        self.t.keys().chain(self.d.keys()).copied()
    }
}

impl fmt::Display for WMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (v, e) in &self.t {
            parts.push(if *e == 1 { format!("{v}") } else { format!("{v}^{e}") });
        }
        for (v, e) in &self.d {
            parts.push(if *e == 1 { format!("d/d{v}") } else { format!("(d/d{v})^{e}") });
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// Normal-ordered Weyl algebra element plus a `κ` coefficient.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Weyl {
    pub terms: BTreeMap<WMono, Rat>,
    pub kappa: Rat,
}

fn binom(n: u32, k: u32) -> Rat {
    factorial(n) / (factorial(k) * factorial(n - k))
}

impl Weyl {
    pub fn zero() -> Self {
        Weyl { terms: BTreeMap::new(), kappa: Rat::zero() }
    }

    pub fn add(&mut self, m: WMono, c: Rat) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn scale(&self, c: &Rat) -> Weyl {
        let mut out = Weyl::zero();
        for (m, v) in &self.terms {
            out.add(m.clone(), v * c);
        }
        out.kappa = &self.kappa * c;
        out
    }

    pub fn sub(&self, o: &Weyl) -> Weyl {
        let mut out = self.clone();
        for (m, v) in &o.terms {
            out.add(m.clone(), -v.clone());
        }
        out.kappa -= &o.kappa;
        out
    }

    /// Product of monomials via `∂^a t^b = Σ_k C(a,k) C(b,k) k! t^{b-k} ∂^{a-k}` per variable.
    fn mono_mul(x: &WMono, y: &WMono) -> Vec<(WMono, Rat)> {
        let mut acc: Vec<(WMono, Rat)> = vec![(WMono { t: x.t.clone(), d: BTreeMap::new() }, Rat::one())];
        let vars: BTreeSet<Time> = x.d.keys().chain(y.t.keys()).copied().collect();
        for v in vars {
            let a = x.d.get(&v).copied().unwrap_or(0);
            let b = y.t.get(&v).copied().unwrap_or(0);
            let mut next = Vec::new();
            for (m, c) in &acc {
                for k in 0..=a.min(b) {
                    let coef = binom(a, k) * binom(b, k) * factorial(k);
                    let mut m2 = m.clone();
                    if b - k > 0 {
                        *m2.t.entry(v).or_insert(0) += b - k;
                    }
                    if a - k > 0 {
                        *m2.d.entry(v).or_insert(0) += a - k;
                    }
                    next.push((m2, c * coef));
                }
            }
            acc = next;
        }
        for (m, _) in acc.iter_mut() {
            for (v, e) in &y.d {
                *m.d.entry(*v).or_insert(0) += e;
            }
        }
        acc
    }

    /// Product of the `κ`-free parts.
    pub fn mul(&self, o: &Weyl) -> Weyl {
        let mut out = Weyl::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                for (m, c) in Self::mono_mul(m1, m2) {
                    out.add(m, c * c1 * c2);
                }
            }
        }
        out
    }

    /// `κ` is central and drops out.
    pub fn commutator(&self, o: &Weyl) -> Weyl {
        self.mul(o).sub(&o.mul(self))
    }
}

/// Compares `[L_m, L_n]` with `(m-n) L_{m+n}` on monomials whose times are at
/// least `max(|m|,|n|) + 1` away from the truncation edge. The numerical
/// constant of the commutator is compared with `(m-n) κ δ_{m+n,0}`, which fixes `κ`.
pub fn virasoro_commutator(m: i64, n: i64, window: Window) -> Result<Report, VirasoroError> {
    let mut r = Report::new(format!("[L_{m}, L_{n}] = {} L_{}", m - n, m + n));
    let lm = build_virasoro(m, window)?.to_weyl();
    let ln = build_virasoro(n, window)?.to_weyl();
    let lhs = lm.commutator(&ln);
    let rhs = if m + n >= -1 { build_virasoro(m + n, window)?.to_weyl().scale(&rint(m - n)) } else { Weyl::zero() };
    let margin = m.abs().max(n.abs()) + 1;
    let one = WMono::new(&[], &[]);
    let diff = lhs.sub(&rhs);
    let mut mismatches = Vec::new();
    for (mono, c) in &diff.terms {
        if *mono == one {
            continue;
        }
        if mono.vars().all(|v| window.interior(v, margin)) {
            mismatches.push(format!("{c} {mono}"));
        }
    }
    r.push(Check::flag(
        "interior coefficients",
        mismatches.is_empty(),
        if mismatches.is_empty() { "0".to_string() } else { mismatches.join(" + ") },
        "0",
    ));
    let constant = lhs.terms.get(&one).cloned().unwrap_or_else(Rat::zero);
    let kappa_coeff = rhs.kappa.clone();
    let note = if kappa_coeff.is_zero() {
        None
    } else {
        Some(format!("requires kappa = {}", &constant / &kappa_coeff))
    };
    let ok = !kappa_coeff.is_zero() || constant.is_zero();
    let mut c = Check::flag("constant term", ok, constant.to_string(), format!("{kappa_coeff} kappa"));
    if let Some(n) = note {
        c = c.with_note(n);
    }
    r.push(c);
    Ok(r)
}

/// `a` and `c` are symmetric and no coefficient receives two printed groups.
pub fn symmetry_check(op: &VirasoroOp) -> Report {
    let mut r = Report::new(format!("L_{} shape", op.m));
    for (name, map) in [("a", &op.a), ("c", &op.c)] {
        let bad: Vec<String> = map.iter().filter(|((i, j), v)| map.get(&(*j, *i)) != Some(*v)).map(|((i, j), _)| format!("({i},{j})")).collect();
        r.push(Check::flag(format!("{name} symmetric"), bad.is_empty(), bad.join(" "), ""));
    }
    let overlaps = op.overlaps();
    r.push(Check::flag("groups disjoint", overlaps.is_empty(), format!("{overlaps:?}"), "[]"));
    r
}

/// Shape of every `L_m` and all commutators for `-1 ≤ m, n ≤ mmax`.
pub fn virasoro_suite(mmax: i64, window: Window) -> Result<Report, VirasoroError> {
    let mut r = Report::new(format!("Virasoro relations, pmax = {}", window.pmax));
    for m in -1..=mmax {
        r.extend(symmetry_check(&build_virasoro(m, window)?));
    }
    for m in -1..=mmax {
        for n in -1..=mmax {
            let sub = virasoro_commutator(m, n, window)?;
            for mut c in sub.checks {
                c.name = format!("{}: {}", sub.suite, c.name);
                r.push(c);
            }
        }
    }
    Ok(r)
}

/// The value of `κ` forced by `[L_1, L_{-1}] = 2 L_0`.
pub fn forced_kappa(window: Window) -> Result<Rat, VirasoroError> {
    let l1 = build_virasoro(1, window)?.to_weyl();
    let lm1 = build_virasoro(-1, window)?.to_weyl();
    let c = l1.commutator(&lm1).terms.get(&WMono::new(&[], &[])).cloned().unwrap_or_else(Rat::zero);
    Ok(c / rint(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const W: Window = Window { pmax: 12 };

    #[test]
    fn coefficients() {
        assert_eq!(beta_coeff(2, 1), rint(6));
        assert_eq!(alpha_coeff(1, 0).unwrap(), rint(1));
        assert_eq!(alpha_coeff(2, -1).unwrap(), rint(-1));
        assert_eq!(alpha_coeff(1, 1).unwrap(), rint(2) * rat(3, 2));
        assert!(alpha_coeff(2, -2).is_err());
    }

    #[test]
    fn lower_operator_shape() {
        let l = build_virasoro(-1, W).unwrap();
        assert!(l.a.is_empty());
        assert_eq!(l.c.len(), 2);
        assert_eq!(l.c[&(t(1, 0), t(2, 0))], rat(1, 2));
        assert_eq!(l.c[&(t(2, 0), t(1, 0))], rat(1, 2));
    }

    #[test]
    fn l0_contains_mixed_first_order_terms() {
        let l = build_virasoro(0, W).unwrap();
        assert_eq!(l.b[&(t(2, 0), t(1, 1))], rint(2));
        assert_eq!(l.b[&(t(2, 2), t(0, 3))], rint(1));
        assert_eq!(l.kappa, rint(1));
    }

    #[test]
    fn l2_second_order_part() {
        let l = build_virasoro(2, W).unwrap();
        let keys: Vec<_> = l.a.keys().collect();
        assert_eq!(keys, vec![&(t(2, 0), t(2, 0))]);
        assert_eq!(l.a[&(t(2, 0), t(2, 0))], rint(1));
    }

    #[test]
    fn coefficient_maps_are_symmetric() {
        for m in -1..=4 {
            let l = build_virasoro(m, W).unwrap();
            for ((i, j), v) in l.a.iter().chain(l.c.iter()) {
                let mirror = l.a.get(&(*j, *i)).or_else(|| l.c.get(&(*j, *i)));
                assert_eq!(mirror, Some(v));
            }
        }
    }

    #[test]
    fn printed_groups_do_not_overlap() {
        for m in 1..=4 {
            assert!(build_virasoro(m, W).unwrap().overlaps().is_empty());
        }
    }

    #[test]
    fn weyl_relation() {
        let x = t(1, 0);
        let d = Weyl { terms: [(WMono::new(&[], &[x]), rint(1))].into(), kappa: rint(0) };
        let tt = Weyl { terms: [(WMono::new(&[x], &[]), rint(1))].into(), kappa: rint(0) };
        let c = d.commutator(&tt);
        assert_eq!(c.terms.len(), 1);
        assert_eq!(c.terms[&WMono::new(&[], &[])], rint(1));
    }

    #[test]
    fn kappa_is_forced_to_zero() {
        assert_eq!(forced_kappa(W).unwrap(), rint(0));
    }

    #[test]
    fn small_commutators() {
        for (m, n) in [(-1, 0), (0, 0), (1, 2), (-1, 1)] {
            let r = virasoro_commutator(m, n, W).unwrap();
            assert!(r.checks[0].passed, "{:?}", r.checks[0]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn antisymmetry(m in -1i64..=3, n in -1i64..=3) {
            let a = build_virasoro(m, W).unwrap().to_weyl();
            let b = build_virasoro(n, W).unwrap().to_weyl();
            let ab = a.commutator(&b);
            let ba = b.commutator(&a);
            prop_assert!(ab.sub(&ba.scale(&rint(-1))).terms.is_empty());
        }
    }
}
