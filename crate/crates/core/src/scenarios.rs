//! Initial-data constructors and the independent multipeakon ODE oracle.
//!
//! Profiles are sampled on kink-aligned grids: every e^{−|x−x₀|} kink is a
//! node, and the neighborhood of each kink is refined (the characteristics
//! that end up squeezed against a crest at time t started within e^{−t} of
//! it, so initialization noise there is what limits long runs).
//!
//! The oracle is the standard multipeakon system
//!
//!   q̇ᵢ = Σⱼ pⱼ e^{−|qᵢ−qⱼ|},   ṗᵢ = Σⱼ pᵢ pⱼ sgn(qᵢ−qⱼ) e^{−|qᵢ−qⱼ|},
//!
//! with sgn(0) = 0, valid strictly before its momentum blow-up; it provides
//! a desk-scale cross-check of the Lagrangian solver on (anti)peakon data.

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::grid::{h1_distance_sq, GridFunction, Kink};
use crate::lagrangian::{reconstruct_natural, ReconstructOptions, UniformGrid};
use crate::measure::{Atom, DataPair, Endpoint};

/// Sampling layout for closed-form profiles.
#[derive(Debug, Clone, Copy)]
pub struct ProfileGrid {
    /// Truncation radius around each kink; the neglected tail mass of
    /// e^{−2|x|} beyond it must stay below the quadrature noise
    /// (radius 20 leaves < 1e−12 for |c| ≤ 2).
    pub radius: f64,
    /// Base sampling step away from kinks.
    pub base_step: f64,
    /// Half-width of the refined zone around each kink.
    pub refine_half: f64,
    /// Refinement factor inside the refined zone.
    pub refine_factor: u32,
}

impl Default for ProfileGrid {
    fn default() -> Self {
        Self {
            radius: 20.0,
            base_step: 5e-3,
            refine_half: 1.0,
            refine_factor: 32,
        }
    }
}

impl ProfileGrid {
    pub fn with_step(radius: f64, base_step: f64) -> Self {
        Self {
            radius,
            base_step,
            ..Default::default()
        }
    }

    /// Tie the sampling step to a target α-resolution.
    pub fn for_alpha_spacing(radius: f64, dal: f64) -> Self {
        Self::with_step(radius, 0.5 * dal)
    }

    /// Per-kink node offsets: symmetric around the kink, fine inside the
    /// refined zone, base step outside, out to the radius.
    fn offsets(&self) -> Vec<f64> {
        let fine = self.base_step / self.refine_factor.max(1) as f64;
        let mut pos = vec![0.0];
        let mut x = 0.0;
        while x < self.refine_half {
            x += fine;
            pos.push(x);
        }
        while x < self.radius {
            x += self.base_step;
            pos.push(x);
        }
        if *pos.last().unwrap() > self.radius {
            *pos.last_mut().unwrap() = self.radius;
        }
        let mut out: Vec<f64> = pos.iter().skip(1).rev().map(|&v| -v).collect();
        out.extend(pos);
        out
    }

    /// Kink-aligned grid covering radius-neighborhoods of all kinks.
    pub fn build(&self, kinks: &[f64]) -> Vec<f64> {
        let offsets = self.offsets();
        let mut nodes: Vec<f64> = Vec::with_capacity(offsets.len() * kinks.len());
        for &k in kinks {
            nodes.extend(offsets.iter().map(|&o| k + o));
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nodes.dedup();
        nodes
    }
}

/// Plain kink-aligned uniform grid on [−radius, radius] ∪ translates, used
/// by tests and the randomized check suites.
pub fn kink_grid(radius: f64, step: f64, kinks: &[f64]) -> Vec<f64> {
    ProfileGrid {
        radius,
        base_step: step,
        refine_half: 0.0,
        refine_factor: 1,
    }
    .build(kinks)
}

/// The peakon cφ(· − x₀) with its energy density as a pure ac measure.
pub fn make_peakon(c: f64, x0: f64, grid: &ProfileGrid) -> Result<DataPair> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidParameter("peakon needs c != 0".into()));
    }
    let nodes = grid.build(&[x0]);
    let u = GridFunction::from_closed_form(
        nodes,
        |x| c * (-(x - x0).abs()).exp(),
        |x| -c * (x - x0).signum() * (-(x - x0).abs()).exp(),
        &[Kink {
            x: x0,
            left_slope: c,
            right_slope: -c,
        }],
    )?;
    DataPair::from_velocity(u, Vec::new())
}

/// Antisymmetric pair p φ(· + a) − p φ(· − a); the canonical wave-breaking
/// datum (collision at the origin).
pub fn make_peakon_antipeakon(p: f64, halfsep: f64, grid: &ProfileGrid) -> Result<DataPair> {
    if !(p > 0.0) || !(halfsep > 0.0) {
        return Err(Error::InvalidParameter(
            "pair needs p > 0 and halfsep > 0".into(),
        ));
    }
    let a = halfsep;
    let nodes = grid.build(&[-a, 0.0, a]);
    let f = move |x: f64| p * ((-(x + a).abs()).exp() - (-(x - a).abs()).exp());
    let df = move |x: f64| {
        p * (-(x + a).signum() * (-(x + a).abs()).exp()
            + (x - a).signum() * (-(x - a).abs()).exp())
    };
    let q = (-2.0 * a).exp();
    let u = GridFunction::from_closed_form(
        nodes,
        f,
        df,
        &[
            Kink {
                x: -a,
                left_slope: p * (1.0 - q),
                right_slope: -p * (1.0 + q),
            },
            Kink {
                x: a,
                left_slope: -p * (1.0 + q),
                right_slope: p * (1.0 - q),
            },
        ],
    )?;
    DataPair::from_velocity(u, Vec::new())
}

/// Perturbation families of the stability runs.
#[derive(Debug, Clone, Copy)]
pub enum Perturbation {
    /// (1 + size) · cφ
    Scaled,
    /// cφ plus a C∞ bump of H¹ norm `size`
    Bump { center: f64, width: f64 },
    /// cφ with an extra point mass `size` in the energy measure
    Atom { position: f64 },
}

/// Perturbed peakon data; returns the pair together with the measured
/// initial defect μ̄_s + ‖ū − cφ‖²_{H¹}.
pub fn make_perturbed_peakon(
    c: f64,
    kind: Perturbation,
    size: f64,
    grid: &ProfileGrid,
) -> Result<(DataPair, f64)> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("perturbed peakon needs c > 0".into()));
    }
    if size < 0.0 {
        return Err(Error::InvalidParameter("size must be >= 0".into()));
    }
    let pair = match kind {
        Perturbation::Scaled => {
            let base = make_peakon(c, 0.0, grid)?;
            let u = GridFunction::new(
                base.u.nodes().to_vec(),
                base.u.values().iter().map(|v| (1.0 + size) * v).collect(),
                base.u.derivative().iter().map(|v| (1.0 + size) * v).collect(),
            )?;
            DataPair::from_velocity(u, Vec::new())?
        }
        Perturbation::Bump { center, width } => {
            if !(width > 0.0) {
                return Err(Error::InvalidParameter("bump width must be positive".into()));
            }
            let base = make_peakon(c, 0.0, grid)?;
            let nodes = base.u.nodes().to_vec();
            let b = |x: f64| {
                let s: f64 = (x - center) / width;
                if s.abs() < 1.0 {
                    (-1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            };
            let db = |x: f64| {
                let s: f64 = (x - center) / width;
                if s.abs() < 1.0 {
                    let q = 1.0 - s * s;
                    -2.0 * s / (q * q) * (-1.0 / q).exp() / width
                } else {
                    0.0
                }
            };
            let raw = GridFunction::new(
                nodes.clone(),
                nodes.iter().map(|&x| b(x)).collect(),
                nodes.iter().map(|&x| db(x)).collect(),
            )?;
            // normalize in the same metric the defect is measured in
            let zero = GridFunction::new(
                vec![nodes[0], *nodes.last().unwrap()],
                vec![0.0; 2],
                vec![0.0; 2],
            )?;
            let norm = h1_distance_sq(&raw, &zero).sqrt();
            if size > 0.0 && !(norm > 0.0) {
                return Err(Error::InvalidParameter(
                    "bump support does not intersect the grid".into(),
                ));
            }
            let eta = if size == 0.0 { 0.0 } else { size / norm };
            let u = GridFunction::new(
                nodes.clone(),
                base.u
                    .values()
                    .iter()
                    .zip(nodes.iter())
                    .map(|(v, &x)| v + eta * b(x))
                    .collect(),
                base.u
                    .derivative()
                    .iter()
                    .zip(nodes.iter())
                    .map(|(d, &x)| d + eta * db(x))
                    .collect(),
            )?;
            DataPair::from_velocity(u, Vec::new())?
        }
        Perturbation::Atom { position } => {
            let base = make_peakon(c, 0.0, grid)?;
            let atoms = if size > 0.0 {
                vec![Atom {
                    position,
                    mass: size,
                }]
            } else {
                Vec::new()
            };
            DataPair::from_velocity(base.u, atoms)?
        }
    };
    let defect =
        pair.mu.singular_mass() + crate::grid::h1_distance_sq_to_peakon(&pair.u, c, 0.0);
    Ok((pair, defect))
}

/// α grid [G(x_min) − pad, G(x_max) + pad] with a node snapped onto
/// G(anchor_x) so that kink-carrying characteristics are grid points.
pub fn suggest_alpha_grid(
    data: &DataPair,
    n_alpha: usize,
    pad: f64,
    anchor_x: f64,
) -> Result<UniformGrid> {
    if n_alpha < 16 {
        return Err(Error::InvalidParameter("n_alpha must be >= 16".into()));
    }
    if !(pad > 0.0) {
        return Err(Error::InvalidParameter("pad must be positive".into()));
    }
    let g = |x: f64| x + data.mu.cdf(x, Endpoint::Closed);
    let lo = g(data.u.x_min()) - pad;
    let hi = g(data.u.x_max()) + pad;
    let dal = (hi - lo) / (n_alpha - 1) as f64;
    let anchor = g(anchor_x);
    let k = ((anchor - lo) / dal).round();
    UniformGrid::new(anchor - k * dal, dal, n_alpha)
}

/// The α grid of the reflected data: labels map as α ↦ μ(ℝ) − α.
pub fn mirrored_alpha_grid(grid: &UniformGrid, total_mass: f64) -> UniformGrid {
    UniformGrid::new(total_mass - grid.end(), grid.step(), grid.len()).unwrap()
}

/// Multipeakon oracle state: positions and momenta.
#[derive(Debug, Clone)]
pub struct MultipeakonState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl MultipeakonState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, t: f64) -> Result<Self> {
        if q.is_empty() || q.len() != p.len() {
            return Err(Error::InvalidParameter(
                "multipeakon state needs n >= 1 matching arrays".into(),
            ));
        }
        for w in q.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(
                    "multipeakon positions must be strictly increasing".into(),
                ));
            }
        }
        if q.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite multipeakon entry".into()));
        }
        Ok(Self { q, p, t })
    }

    /// u(x) = Σ pᵢ e^{−|x−qᵢ|} sampled on a kink-aligned grid.
    pub fn profile(&self, grid: &ProfileGrid) -> Result<GridFunction> {
        let nodes = grid.build(&self.q);
        let q = self.q.clone();
        let p = self.p.clone();
        let f = move |x: f64| -> f64 {
            q.iter()
                .zip(&p)
                .map(|(&qi, &pi)| pi * (-(x - qi).abs()).exp())
                .sum()
        };
        let q2 = self.q.clone();
        let p2 = self.p.clone();
        let df = move |x: f64| -> f64 {
            q2.iter()
                .zip(&p2)
                .map(|(&qi, &pi)| -pi * (x - qi).signum() * (-(x - qi).abs()).exp())
                .sum()
        };
        let kinks: Vec<Kink> = self
            .q
            .iter()
            .zip(&self.p)
            .map(|(&qi, &pi)| {
                let smooth: f64 = self
                    .q
                    .iter()
                    .zip(&self.p)
                    .filter(|(&qj, _)| qj != qi)
                    .map(|(&qj, &pj)| -pj * (qi - qj).signum() * (-(qi - qj).abs()).exp())
                    .sum();
                Kink {
                    x: qi,
                    left_slope: smooth + pi,
                    right_slope: smooth - pi,
                }
            })
            .collect();
        GridFunction::from_closed_form(nodes, f, df, &kinks)
    }

    /// E of the induced profile: 2 Σᵢⱼ pᵢ pⱼ e^{−|qᵢ−qⱼ|}.
    pub fn energy(&self) -> f64 {
        let mut e = 0.0;
        for (&qi, &pi) in self.q.iter().zip(&self.p) {
            for (&qj, &pj) in self.q.iter().zip(&self.p) {
                e += pi * pj * (-(qi - qj).abs()).exp();
            }
        }
        2.0 * e
    }
}

/// Right-hand side of the multipeakon system with sgn(0) = 0.
pub fn multipeakon_rhs(state: &MultipeakonState) -> (Vec<f64>, Vec<f64>) {
    let n = state.q.len();
    let mut dq = vec![0.0; n];
    let mut dp = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let d = state.q[i] - state.q[j];
            let e = (-d.abs()).exp();
            dq[i] += state.p[j] * e;
            if d != 0.0 {
                dp[i] += state.p[i] * state.p[j] * d.signum() * e;
            }
        }
    }
    (dq, dp)
}

/// One RK4 step of the oracle.
pub fn multipeakon_step(state: &MultipeakonState, dt: f64) -> MultipeakonState {
    let stage = |q: &[f64], p: &[f64]| {
        multipeakon_rhs(&MultipeakonState {
            q: q.to_vec(),
            p: p.to_vec(),
            t: 0.0,
        })
    };
    let add = |x: &[f64], a: f64, d: &[f64]| -> Vec<f64> {
        x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
    };
    let (k1q, k1p) = stage(&state.q, &state.p);
    let (k2q, k2p) = stage(&add(&state.q, 0.5 * dt, &k1q), &add(&state.p, 0.5 * dt, &k1p));
    let (k3q, k3p) = stage(&add(&state.q, 0.5 * dt, &k2q), &add(&state.p, 0.5 * dt, &k2p));
    let (k4q, k4p) = stage(&add(&state.q, dt, &k3q), &add(&state.p, dt, &k3p));
    let c = dt / 6.0;
    let comb = |x: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
        (0..x.len())
            .map(|i| x[i] + c * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    };
    MultipeakonState {
        q: comb(&state.q, &k1q, &k2q, &k3q, &k4q),
        p: comb(&state.p, &k1p, &k2p, &k3p, &k4p),
        t: state.t + dt,
    }
}

/// Momentum cap marking the oracle's blow-up: |p| beyond 10³ · max|p(0)|.
pub const ORACLE_MOMENTUM_CAP: f64 = 1e3;

/// Integrate the oracle and return the time at which the momentum cap is
/// first exceeded, or t_max if it never is.
pub fn multipeakon_blowup_time(mp0: &MultipeakonState, dt: f64, t_max: f64) -> f64 {
    let p0 = mp0.p.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let cap = ORACLE_MOMENTUM_CAP * p0;
    let mut cur = mp0.clone();
    while cur.t < t_max {
        cur = multipeakon_step(&cur, dt);
        if cur.p.iter().any(|p| p.abs() > cap) {
            return cur.t;
        }
    }
    t_max
}

/// Max H¹ deviation between the solver trajectory and the oracle profile at
/// the shared checkpoint times up to t_stop.  The oracle is integrated with
/// RK4 at dt/10 (dt = checkpoint spacing of the comparison).
pub fn oracle_compare(
    traj: &Trajectory,
    mp0: &MultipeakonState,
    t_stop: f64,
    profile_grid: &ProfileGrid,
) -> Result<f64> {
    if traj.checkpoints.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let p0 = mp0.p.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let cap = ORACLE_MOMENTUM_CAP * p0;
    let mut oracle = mp0.clone();
    let mut max_dev: f64 = 0.0;
    for cp in &traj.checkpoints {
        let t = cp.state.t();
        if t > t_stop {
            break;
        }
        // advance the oracle to t with sub-steps
        let span = t - oracle.t;
        if span > 0.0 {
            let nsub = ((span / 1e-4).ceil() as usize).max(10);
            let h = span / nsub as f64;
            for _ in 0..nsub {
                oracle = multipeakon_step(&oracle, h);
            }
        }
        if oracle.p.iter().any(|p| p.abs() > cap) {
            return Err(Error::OracleRange(format!(
                "oracle momentum blow-up before t_stop = {t_stop} (at t = {})",
                oracle.t
            )));
        }
        let u_oracle = oracle.profile(profile_grid)?;
        let rec = reconstruct_natural(&cp.state, &ReconstructOptions::default())?;
        let dev = h1_distance_sq(&rec.u, &u_oracle).sqrt();
        max_dev = max_dev.max(dev);
    }
    Ok(max_dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_peakon_examples() {
        let d = make_peakon(1.0, 0.0, &ProfileGrid::default()).unwrap();
        assert!((d.tilde_e() - 2.0).abs() < 1e-3);
        assert!((d.tilde_f() - 4.0 / 3.0).abs() < 1e-3);
        let neg = make_peakon(-1.0, 0.0, &ProfileGrid::default()).unwrap();
        assert!((neg.tilde_e() - 2.0).abs() < 1e-3, "E is even in c");
        let two = make_peakon(2.0, 5.0, &ProfileGrid::default()).unwrap();
        assert_eq!(two.u.value_at(5.0), 2.0);
        assert!(make_peakon(0.0, 0.0, &ProfileGrid::default()).is_err());
    }

    #[test]
    fn pair_examples() {
        let grid = ProfileGrid::with_step(26.0, 5e-3);
        let d = make_peakon_antipeakon(1.0, 5.0, &grid).unwrap();
        let expect = 4.0 * (1.0 - (-10.0_f64).exp());
        assert!((d.tilde_e() - expect).abs() < 1e-3);
        assert!(d.tilde_f().abs() < 1e-10);
        assert_eq!(d.u.value_at(0.0), 0.0);
        // the pair is its own mirror image
        let r = d.reflected();
        assert_eq!(r.u.nodes(), d.u.nodes());
        assert_eq!(r.u.values(), d.u.values());
        assert_eq!(r.u.derivative(), d.u.derivative());
    }

    #[test]
    fn perturbed_peakon_defects() {
        let grid = ProfileGrid::with_step(20.0, 4e-3);
        let (_, defect) = make_perturbed_peakon(1.0, Perturbation::Scaled, 0.0, &grid).unwrap();
        // floor set by piecewise-linear sampling of the kink profile
        assert!(defect < 1e-6, "exact peakon defect {defect}");
        let (_, defect) = make_perturbed_peakon(1.0, Perturbation::Scaled, 0.1, &grid).unwrap();
        assert!((defect - 0.02).abs() < 1e-3, "scaled defect {defect}");
        let (_, defect) = make_perturbed_peakon(
            1.0,
            Perturbation::Atom { position: 2.0 },
            0.3,
            &grid,
        )
        .unwrap();
        assert!((defect - 0.3).abs() < 1e-6, "atom defect {defect}");
        let (_, defect) = make_perturbed_peakon(
            1.0,
            Perturbation::Bump {
                center: 1.0,
                width: 1.0,
            },
            0.05,
            &grid,
        )
        .unwrap();
        assert!((defect - 0.0025).abs() < 2e-4, "bump defect {defect}");
    }

    #[test]
    fn multipeakon_rhs_examples() {
        // single peakon travels at speed p
        let s = MultipeakonState::new(vec![0.0], vec![0.7], 0.0).unwrap();
        let (dq, dp) = multipeakon_rhs(&s);
        assert_eq!(dq[0], 0.7);
        assert_eq!(dp[0], 0.0);
        // symmetric pair
        let s = MultipeakonState::new(vec![-1.0, 1.0], vec![1.0, -1.0], 0.0).unwrap();
        let (dq, dp) = multipeakon_rhs(&s);
        let e2 = (-2.0_f64).exp();
        assert!((dq[0] - (1.0 - e2)).abs() < 1e-15);
        assert!((dp[0] - e2).abs() < 1e-15);
        // antisymmetry q1 = -q2, p1 = -p2 is preserved: dq and dp both flip
        assert!((dq[1] + dq[0]).abs() < 1e-15, "antisymmetry of dq");
        assert!((dp[1] + dp[0]).abs() < 1e-15, "antisymmetry of dp");
        assert!(MultipeakonState::new(vec![], vec![], 0.0).is_err());
    }

    #[test]
    fn oracle_preserves_antisymmetry_and_energy() {
        let mut s = MultipeakonState::new(vec![-5.0, 5.0], vec![1.0, -1.0], 0.0).unwrap();
        let e0 = s.energy();
        assert!((e0 - 4.0 * (1.0 - (-10.0_f64).exp())).abs() < 1e-12);
        for _ in 0..2000 {
            s = multipeakon_step(&s, 1e-3);
        }
        assert!((s.q[0] + s.q[1]).abs() < 1e-12);
        assert!((s.p[0] + s.p[1]).abs() < 1e-12);
        assert!((s.energy() - e0).abs() < 1e-10, "energy drift {}", (s.energy() - e0).abs());
    }

    #[test]
    fn oracle_energy_matches_profile_energy() {
        let s = MultipeakonState::new(vec![-2.0, 1.0], vec![0.8, 0.4], 0.0).unwrap();
        let u = s.profile(&ProfileGrid::with_step(18.0, 2e-3)).unwrap();
        assert!((u.energy_e() - s.energy()).abs() < 1e-3);
    }

    #[test]
    fn pair_blowup_is_detected() {
        let s = MultipeakonState::new(vec![-5.0, 5.0], vec![1.0, -1.0], 0.0).unwrap();
        let t_blow = multipeakon_blowup_time(&s, 1e-4, 10.0);
        assert!(t_blow > 5.0 && t_blow < 6.5, "blow-up at {t_blow}");
    }

    #[test]
    fn alpha_grid_is_anchored() {
        let d = make_peakon(1.0, 0.0, &ProfileGrid::default()).unwrap();
        let g = suggest_alpha_grid(&d, 2001, 2.0, 0.0).unwrap();
        // the sampled G(0) must land on a node
        let anchor = 0.0 + d.mu.cdf(0.0, crate::measure::Endpoint::Closed);
        let k = ((anchor - g.start()) / g.step()).round() as usize;
        assert!((g.node(k) - anchor).abs() < 1e-9);
        assert!(suggest_alpha_grid(&d, 8, 2.0, 0.0).is_err());
    }
}
