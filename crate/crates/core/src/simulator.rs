//! Periodic-lattice integration of `t^{2,0}` and `t^{0,-1}` with `ε = 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::backlund::{apply_backlund, BacklundError};
use crate::hamiltonian::{hamiltonian_negative, hamiltonian_positive};
use crate::ring::{Field, Generator, RingElem, Trans};

/// Sites closer than this to a pole abort the run.
pub const POLE_GUARD: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("pole at site {site}: {what}")]
    Pole { site: usize, what: &'static str },
    #[error("non-finite value at site {site} after {step} steps")]
    NonFinite { site: usize, step: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("P and Q have different lengths")]
    Shape,
}

impl From<BacklundError> for SimError {
    fn from(e: BacklundError) -> Self {
        match e {
            BacklundError::Pole { site } => SimError::Pole { site, what: "Q - P^- vanishes" },
            BacklundError::Shape => SimError::Shape,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Flow {
    T20,
    T0m1,
    /// `t^{0,-1}` with the sign of `Q/P⁻` in `∂Q` reversed; does not commute with `t^{2,0}`.
    T0m1Flipped,
}

impl Flow {
    pub fn parse(s: &str) -> Option<Flow> {
        match s {
            "t20" => Some(Flow::T20),
            "t0m1" => Some(Flow::T0m1),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Flow::T20 => "t20",
            Flow::T0m1 => "t0m1",
            Flow::T0m1Flipped => "t0m1-flipped",
        }
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeState {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub times: BTreeMap<Flow, f64>,
}

impl LatticeState {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self, SimError> {
        if p.len() != q.len() || p.is_empty() {
            return Err(SimError::Shape);
        }
        Ok(LatticeState { p, q, times: BTreeMap::new() })
    }

    pub fn constant(n: usize, p0: f64, q0: f64) -> Self {
        LatticeState { p: vec![p0; n], q: vec![q0; n], times: BTreeMap::new() }
    }

    /// `P ∈ [0.5, 1.5]`, `Q ∈ [2, 3]`, independent per site. Constant states with
    /// `P·Q > 0` are linearly unstable near wavenumber `π`, so such data blow up in `O(1)` time.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let q = (0..n).map(|_| rng.gen_range(2.0..3.0)).collect();
        LatticeState { p, q, times: BTreeMap::new() }
    }

    /// Two Fourier modes per field with seeded amplitudes and phases,
    /// `P ∈ [0.7, 1.3]`, `Q ∈ [2.2, 2.8]`.
    pub fn smooth(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = 2.0 * std::f64::consts::PI / n as f64;
        let mut field = |mean: f64| -> Vec<f64> {
            let modes: Vec<(f64, f64)> = (0..2).map(|_| (rng.gen_range(0.0..0.15), rng.gen_range(0.0..tau * n as f64))).collect();
            (0..n)
                .map(|i| mean + modes.iter().enumerate().map(|(m, (a, ph))| a * ((m + 1) as f64 * tau * i as f64 + ph).sin()).sum::<f64>())
                .collect()
        };
        let p = field(1.0);
        let q = field(2.5);
        LatticeState { p, q, times: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn check_valid(&self) -> Result<(), SimError> {
        for i in 0..self.len() {
            if self.p[i].abs() < POLE_GUARD {
                return Err(SimError::Pole { site: i, what: "P vanishes" });
            }
            if self.q[i].abs() < POLE_GUARD {
                return Err(SimError::Pole { site: i, what: "Q vanishes" });
            }
        }
        Ok(())
    }

    /// `max(‖ΔP‖∞, ‖ΔQ‖∞)`
    pub fn distance(&self, o: &LatticeState) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        d(&self.p, &o.p).max(d(&self.q, &o.q))
    }

    fn axpy(&self, h: f64, d: &(Vec<f64>, Vec<f64>)) -> LatticeState {
        LatticeState {
            p: self.p.iter().zip(&d.0).map(|(x, y)| x + h * y).collect(),
            q: self.q.iter().zip(&d.1).map(|(x, y)| x + h * y).collect(),
            times: self.times.clone(),
        }
    }
}

/// `(∂P, ∂Q)` of a flow, indices mod `N`.
pub fn rhs(flow: Flow, s: &LatticeState) -> Result<(Vec<f64>, Vec<f64>), SimError> {
    let n = s.len();
    let (p, q) = (&s.p, &s.q);
    let up = |i: usize| (i + 1) % n;
    let dn = |i: usize| (i + n - 1) % n;
    let mut dp = Vec::with_capacity(n);
    let mut dq = Vec::with_capacity(n);
    if flow != Flow::T20 {
        s.check_valid()?;
    }
    for i in 0..n {
        let (a, b) = match flow {
            Flow::T20 => (p[i] * (q[up(i)] - q[i]), q[i] * (q[up(i)] - q[dn(i)] - p[i] + p[dn(i)])),
            Flow::T0m1 => (q[up(i)] / p[up(i)] - q[i] / p[dn(i)], q[i] / p[i] - q[i] / p[dn(i)]),
            Flow::T0m1Flipped => (q[up(i)] / p[up(i)] - q[i] / p[dn(i)], q[i] / p[i] + q[i] / p[dn(i)]),
        };
        dp.push(a);
        dq.push(b);
    }
    Ok((dp, dq))
}

/// One classical RK4 step.
pub fn rk4_step(flow: Flow, s: &LatticeState, h: f64) -> Result<LatticeState, SimError> {
    let k1 = rhs(flow, s)?;
    let k2 = rhs(flow, &s.axpy(h / 2.0, &k1))?;
    let k3 = rhs(flow, &s.axpy(h / 2.0, &k2))?;
    let k4 = rhs(flow, &s.axpy(h, &k3))?;
    let comb = |i: usize, x: f64, pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| {
        x + h / 6.0 * (pick(&k1)[i] + 2.0 * pick(&k2)[i] + 2.0 * pick(&k3)[i] + pick(&k4)[i])
    };
    let mut out = LatticeState {
        p: s.p.iter().enumerate().map(|(i, x)| comb(i, *x, |k| &k.0)).collect(),
        q: s.q.iter().enumerate().map(|(i, x)| comb(i, *x, |k| &k.1)).collect(),
        times: s.times.clone(),
    };
    *out.times.entry(flow).or_insert(0.0) += h;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: usize,
    /// Conserved quantities are logged every `cadence` steps and at the end; 0 disables logging.
    pub cadence: usize,
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) || !(self.dt * self.steps as f64).is_finite() {
            return Err(SimError::Config(format!("dt = {}, steps = {}", self.dt, self.steps)));
        }
        Ok(())
    }
}

/// A density compiled for evaluation at lattice sites.
#[derive(Clone, Debug)]
pub struct LatticeDensity {
    pub label: String,
    terms: Vec<(f64, Vec<(Atom, i32)>)>,
}

#[derive(Clone, Copy, Debug)]
enum Atom {
    P(i64),
    Q(i64),
    LogQOverP(i64),
}

impl LatticeDensity {
    /// Panics on generators outside the shift picture.
    pub fn compile(label: impl Into<String>, e: &RingElem) -> Self {
        let terms = e
            .terms()
            .map(|(m, c)| {
                let atoms = m
                    .factors()
                    .iter()
                    .map(|(g, k)| {
                        let a = match g {
                            Generator::Shift(Field::P, s) => Atom::P(*s),
                            Generator::Shift(Field::Q, s) => Atom::Q(*s),
                            Generator::Trans(Trans::LogQminusLogP(s)) => Atom::LogQOverP(*s),
                            g => panic!("{g:?} has no lattice value"),
                        };
                        (a, *k)
                    })
                    .collect();
                (c.to_f64().expect("finite rational"), atoms)
            })
            .collect();
        LatticeDensity { label: label.into(), terms }
    }

    pub fn at(&self, s: &LatticeState, site: usize) -> f64 {
        let n = s.len() as i64;
        let idx = |k: i64| (site as i64 + k).rem_euclid(n) as usize;
        self.terms
            .iter()
            .map(|(c, atoms)| {
                atoms.iter().fold(*c, |acc, (a, k)| {
                    let v = match a {
                        Atom::P(k) => s.p[idx(*k)],
                        Atom::Q(k) => s.q[idx(*k)],
                        Atom::LogQOverP(k) => (s.q[idx(*k)] / s.p[idx(*k)]).ln(),
                    };
                    acc * v.powi(*k)
                })
            })
            .sum()
    }

    /// Sum over one period.
    pub fn total(&self, s: &LatticeState) -> f64 {
        (0..s.len()).map(|i| self.at(s, i)).sum()
    }
}

/// `H_{2,p}` for `-1 ≤ p ≤ pmax` and `H_{0,-q}` for `1 ≤ q ≤ qmax`.
pub fn conserved_densities(pmax: i64, qmax: u32) -> Vec<LatticeDensity> {
    let mut out: Vec<LatticeDensity> = (-1..=pmax).map(|p| LatticeDensity::compile(format!("H_{{2,{p}}}"), &hamiltonian_positive(p))).collect();
    out.extend((1..=qmax).map(|q| LatticeDensity::compile(format!("H_{{0,-{q}}}"), &hamiltonian_negative(q))));
    out
}

pub fn conserved_quantities(s: &LatticeState, pmax: i64, qmax: u32) -> BTreeMap<String, f64> {
    conserved_densities(pmax, qmax).into_iter().map(|d| (d.label.clone(), d.total(s))).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LogRow {
    pub t: f64,
    pub values: Vec<f64>,
    /// Largest relative change of a logged quantity since `t = 0`.
    pub defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Run {
    pub flow: Flow,
    pub labels: Vec<String>,
    pub rows: Vec<LogRow>,
    pub state: LatticeState,
}

impl Run {
    pub fn max_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.defect).fold(0.0, f64::max)
    }

    /// Relative drift per quantity at the last logged row.
    pub fn drifts(&self) -> Vec<(String, f64)> {
        let (Some(first), Some(last)) = (self.rows.first(), self.rows.last()) else { return Vec::new() };
        self.labels.iter().enumerate().map(|(i, l)| (l.clone(), rel(first.values[i], last.values[i]))).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.labels.iter().cloned());
        header.push("defect".into());
        wr.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![format!("{:.6}", r.t)];
            rec.extend(r.values.iter().map(|v| format!("{v:.17e}")));
            rec.push(format!("{:.6e}", r.defect));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs().max(1.0)
}

/// RK4 with conserved-quantity logging.
pub fn integrate(state: &LatticeState, flow: Flow, cfg: &IntegratorConfig, densities: &[LatticeDensity]) -> Result<Run, SimError> {
    cfg.validate()?;
    state.check_valid()?;
    let labels = densities.iter().map(|d| d.label.clone()).collect();
    let eval = |s: &LatticeState| densities.iter().map(|d| d.total(s)).collect::<Vec<f64>>();
    let initial = eval(state);
    let mut rows = Vec::new();
    let log = |rows: &mut Vec<LogRow>, t: f64, s: &LatticeState| {
        let values = eval(s);
        let defect = values.iter().zip(&initial).map(|(v, v0)| rel(*v0, *v)).fold(0.0, f64::max);
        rows.push(LogRow { t, values, defect });
    };
    let mut s = state.clone();
    if cfg.cadence > 0 {
        log(&mut rows, 0.0, &s);
    }
    for step in 1..=cfg.steps {
        s = rk4_step(flow, &s, cfg.dt)?;
        if let Some(site) = (0..s.len()).find(|&i| !(s.p[i].is_finite() && s.q[i].is_finite())) {
            return Err(SimError::NonFinite { site, step });
        }
        if cfg.cadence > 0 && (step % cfg.cadence == 0 || step == cfg.steps) {
            log(&mut rows, step as f64 * cfg.dt, &s);
        }
    }
    Ok(Run { flow, labels, rows, state: s })
}

/// One forward Euler step.
pub fn euler_step(flow: Flow, s: &LatticeState, h: f64) -> Result<LatticeState, SimError> {
    let mut out = s.axpy(h, &rhs(flow, s)?);
    *out.times.entry(flow).or_insert(0.0) += h;
    Ok(out)
}

/// `‖Φ_A^h Φ_B^h s - Φ_B^h Φ_A^h s‖∞` with `Φ^h` a forward Euler step, so the
/// `h²` term of the defect is the Lie bracket of the two vector fields.
pub fn commutativity_probe(a: Flow, b: Flow, h: f64, s: &LatticeState) -> Result<f64, SimError> {
    let ab = euler_step(a, &euler_step(b, s, h)?, h)?;
    let ba = euler_step(b, &euler_step(a, s, h)?, h)?;
    Ok(ab.distance(&ba))
}

/// `defect(h) / defect(h/2)`: about 8 for commuting flows, about 4 otherwise.
pub fn probe_ratio(a: Flow, b: Flow, h: f64, s: &LatticeState) -> Result<f64, SimError> {
    Ok(commutativity_probe(a, b, h, s)? / commutativity_probe(a, b, h / 2.0, s)?)
}

/// Distance between transform-then-evolve and evolve-then-transform.
pub fn backlund_commutation(s: &LatticeState, flow: Flow, cfg: &IntegratorConfig) -> Result<f64, SimError> {
    let bt = |x: &LatticeState| -> Result<LatticeState, SimError> {
        let (p, q) = apply_backlund(&x.p, &x.q)?;
        LatticeState::new(p, q)
    };
    let quiet = IntegratorConfig { cadence: 0, ..cfg.clone() };
    let a = integrate(&bt(s)?, flow, &quiet, &[])?.state;
    let b = bt(&integrate(s, flow, &quiet, &[])?.state)?;
    Ok(a.distance(&b))
}

/// `|y_h - y_{h/2}| / |y_{h/2} - y_{h/4}|` at a fixed final time; about 16 for RK4.
pub fn richardson_ratio(s: &LatticeState, flow: Flow, dt: f64, steps: usize) -> Result<f64, SimError> {
    let run = |k: usize| integrate(s, flow, &IntegratorConfig { dt: dt / k as f64, steps: steps * k, cadence: 0 }, &[]).map(|r| r.state);
    let (y1, y2, y4) = (run(1)?, run(2)?, run(4)?);
    Ok(y1.distance(&y2) / y2.distance(&y4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lax::{lax_flow, FlowLabel};
    use proptest::prelude::*;

    fn small() -> LatticeState {
        LatticeState::new(vec![1.0, 1.0], vec![2.0, 3.0]).unwrap()
    }

    #[test]
    fn printed_examples() {
        let (dp, _) = rhs(Flow::T20, &small()).unwrap();
        assert_eq!(dp, vec![1.0, -1.0]);
        let h = conserved_quantities(&small(), -1, 0);
        assert_eq!(h["H_{2,-1}"], 3.0);
        let c = LatticeState::constant(7, 0.8, 2.5);
        for f in [Flow::T20, Flow::T0m1] {
            let (dp, dq) = rhs(f, &c).unwrap();
            assert!(dp.iter().chain(&dq).all(|x| x.abs() < 1e-15));
        }
    }

    #[test]
    fn explicit_rhs_matches_lax_flows() {
        let s = LatticeState::random(6, 3);
        for (flow, label) in [(Flow::T20, FlowLabel::Pos(0)), (Flow::T0m1, FlowLabel::Neg(1))] {
            let sym = lax_flow(label).unwrap();
            let (dp, dq) = rhs(flow, &s).unwrap();
            let (fp, fq) = (LatticeDensity::compile("dP", &sym.dp), LatticeDensity::compile("dQ", &sym.dq));
            for i in 0..s.len() {
                assert!((fp.at(&s, i) - dp[i]).abs() < 1e-13);
                assert!((fq.at(&s, i) - dq[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_steps_is_identity() {
        let s = LatticeState::random(8, 1);
        let r = integrate(&s, Flow::T20, &IntegratorConfig { dt: 1e-3, steps: 0, cadence: 1 }, &[]).unwrap();
        assert_eq!(r.state.p, s.p);
        assert_eq!(r.state.q, s.q);
    }

    #[test]
    fn rk4_order() {
        let s = LatticeState::random(8, 2);
        let r = richardson_ratio(&s, Flow::T20, 0.02, 25).unwrap();
        assert!((15.0..=17.0).contains(&r), "{r}");
    }

    #[test]
    fn probe_scaling() {
        let s = LatticeState::random(16, 4);
        assert!(commutativity_probe(Flow::T20, Flow::T20, 0.05, &s).unwrap() < 1e-14);
        let good = probe_ratio(Flow::T20, Flow::T0m1, 0.02, &s).unwrap();
        assert!((7.0..=9.0).contains(&good), "{good}");
        let bad = probe_ratio(Flow::T20, Flow::T0m1Flipped, 0.02, &s).unwrap();
        assert!((3.5..=4.5).contains(&bad), "{bad}");
    }

    #[test]
    fn uniform_random_data_blow_up_under_t20() {
        let s = LatticeState::random(32, 7);
        let e = integrate(&s, Flow::T20, &IntegratorConfig { dt: 1e-3, steps: 1000, cadence: 0 }, &[]).unwrap_err();
        assert!(matches!(e, SimError::NonFinite { step, .. } if step < 1000));
        let r = integrate(&LatticeState::smooth(32, 7), Flow::T20, &IntegratorConfig { dt: 1e-3, steps: 1000, cadence: 100 }, &conserved_densities(3, 2)).unwrap();
        assert!(r.max_drift() < 1e-8);
    }

    #[test]
    fn pole_guard() {
        let s = LatticeState::new(vec![1.0, 0.0, 1.0], vec![2.0, 2.0, 2.0]).unwrap();
        let e = integrate(&s, Flow::T0m1, &IntegratorConfig { dt: 1e-3, steps: 1, cadence: 0 }, &[]).unwrap_err();
        assert_eq!(e, SimError::Pole { site: 1, what: "P vanishes" });
    }

    #[test]
    fn backlund_commutes_with_evolution() {
        let s = LatticeState::random(12, 5);
        let cfg = IntegratorConfig { dt: 1e-3, steps: 100, cadence: 0 };
        for f in [Flow::T20, Flow::T0m1] {
            let d = backlund_commutation(&s, f, &cfg).unwrap();
            assert!(d < 1e-8, "{f}: {d}");
        }
    }

    #[test]
    fn csv_is_deterministic() {
        let s = LatticeState::random(8, 9);
        let cfg = IntegratorConfig { dt: 1e-2, steps: 10, cadence: 5 };
        let dens = conserved_densities(1, 1);
        let out = |_: ()| {
            let mut buf = Vec::new();
            integrate(&s, Flow::T20, &cfg, &dens).unwrap().write_csv(&mut buf).unwrap();
            buf
        };
        assert_eq!(out(()), out(()));
        let text = String::from_utf8(out(())).unwrap();
        assert!(text.starts_with("t,\"H_{2,-1}\"") || text.starts_with("t,H_{2,-1}"), "{text}");
    }

    proptest! {
        #[test]
        fn casimir_is_invariant(seed in 0u64..1000) {
            let s = LatticeState::random(10, seed);
            let casimir = LatticeDensity::compile("C", &hamiltonian_negative(1));
            for f in [Flow::T20, Flow::T0m1] {
                let (dp, dq) = rhs(f, &s).unwrap();
                let rate: f64 = (0..s.len()).map(|i| dq[i] / s.q[i] - dp[i] / s.p[i]).sum();
                prop_assert!(rate.abs() < 1e-12);
                let after = rk4_step(f, &s, 1e-3).unwrap();
                prop_assert!((casimir.total(&after) - casimir.total(&s)).abs() < 1e-10);
            }
        }

        #[test]
        fn t20_conserves_total_q_over_sum(seed in 0u64..1000) {
            let s = LatticeState::random(9, seed);
            let (_, dq) = rhs(Flow::T20, &s).unwrap();
            let sum: f64 = (0..s.len()).map(|i| dq[i] / s.q[i]).sum();
            prop_assert!(sum.abs() < 1e-12);
        }
    }
}
