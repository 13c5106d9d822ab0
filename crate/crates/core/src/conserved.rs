//! Generalized conserved quantities and weak-form residual checks.
//!
//! Ẽ(u, μ) = μ(ℝ) and F̃(u, μ) = ∫ u dμ are both constant along conservative
//! solutions, including through wave breaking.  In Lagrangian variables
//! Ẽ = H_N − H_1 exactly; F̃ is the cell-exact moment of the transported
//! energy under the exponential cell model (midpoint fallback on collapsed
//! cells, which is the atom limit).
//!
//! The weak residuals discretize the defining identities of conservative
//! solutions against compactly supported space-time bumps: the momentum
//! equation, the energy-transport equation and the F-flux identity
//!
//!   ∫∫ (φ_t + u φ_x) u dμ dt + ∫∫ φ_x (P u² − ¾u⁴ + P² − Pₓ²) dx dt = 0,
//!
//! with P = ¼ φ ∗ μ + ¼ φ ∗ u² evaluated from the reconstructed pair by a
//! direct Eulerian quadrature, independent of the Lagrangian kernel sweep.
//! μ-integrals use the Lagrangian change of variables with left-node
//! evaluation, x-integrals the trapezoid rule with left-cell slopes for uₓ;
//! both choices are first-order, so the residuals shrink like Δα under
//! simultaneous (Δα, dt) refinement.

use crate::cell::ExpCell;
use crate::error::{Error, Result};
use crate::evolution::{CheckpointDiagnostics, Trajectory};
use crate::grid::trapezoid;
use crate::lagrangian::LagrangianState;
use crate::measure::DataPair;
use serde::Serialize;

const MASS_FLOOR: f64 = 1e-290;

/// Ẽ = total transported energy H_N − H_1.
pub fn tilde_e(state: &LagrangianState) -> f64 {
    state.h()[state.len() - 1] - state.h()[0]
}

/// F̃ = ∫ u dμ in Lagrangian form: cell-exact moment of the energy density
/// under the exponential cell model, rescaled so each cell carries exactly
/// its ΔH; collapsed cells contribute the midpoint value Ū ΔH.
pub fn tilde_f(state: &LagrangianState) -> f64 {
    let (y, u, h) = (state.y(), state.u(), state.h());
    let mut acc = 0.0;
    for i in 0..y.len() - 1 {
        let w = y[i + 1] - y[i];
        let dh = h[i + 1] - h[i];
        let c = ExpCell::fit(w, u[i], u[i + 1]);
        let mass = c.mass_raw();
        if c.valid && mass > MASS_FLOOR {
            acc += dh / mass * c.f_moment_raw();
        } else {
            acc += 0.5 * (u[i] + u[i + 1]) * dh;
        }
    }
    acc
}

/// Conservation time series with relative drifts.
#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    pub e_tilde: Vec<f64>,
    pub f_tilde: Vec<f64>,
    pub e_ac: Vec<f64>,
    pub mu_s: Vec<f64>,
    pub rel_drift_e: f64,
    pub rel_drift_f: f64,
}

/// Drift report from already-collected checkpoint diagnostics.
pub fn drift_from_series(diags: &[CheckpointDiagnostics]) -> Result<ConservationReport> {
    if diags.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let e0 = diags[0].e_tilde;
    let f0 = diags[0].f_tilde;
    let mut de: f64 = 0.0;
    let mut df: f64 = 0.0;
    for d in diags {
        de = de.max((d.e_tilde - e0).abs());
        df = df.max((d.f_tilde - f0).abs());
    }
    // F drift is reported relative to max(|F(0)|, E(0)) so antisymmetric data
    // (F ~ 0) do not blow the ratio up
    let e_den = e0.abs().max(f64::MIN_POSITIVE);
    let f_den = f0.abs().max(e0.abs()).max(f64::MIN_POSITIVE);
    Ok(ConservationReport {
        times: diags.iter().map(|d| d.t).collect(),
        e_tilde: diags.iter().map(|d| d.e_tilde).collect(),
        f_tilde: diags.iter().map(|d| d.f_tilde).collect(),
        e_ac: diags.iter().map(|d| d.e_ac).collect(),
        mu_s: diags.iter().map(|d| d.mu_s).collect(),
        rel_drift_e: if de == 0.0 { 0.0 } else { de / e_den },
        rel_drift_f: if df == 0.0 { 0.0 } else { df / f_den },
    })
}

/// Drift report over a trajectory.
pub fn drift_report(traj: &Trajectory) -> Result<ConservationReport> {
    drift_from_series(&traj.diagnostics())
}

/// Smooth compactly supported space-time test function
/// φ(x, t) = b((x−x₀)/wₓ) · b((t−t₀)/w_t) with b(s) = e^{−1/(1−s²)} on |s|<1.
#[derive(Debug, Clone, Copy)]
pub struct BumpTestFunction {
    pub x0: f64,
    pub wx: f64,
    pub t0: f64,
    pub wt: f64,
}

fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

fn dbump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        let q = 1.0 - s * s;
        -2.0 * s / (q * q) * (-1.0 / q).exp()
    } else {
        0.0
    }
}

impl BumpTestFunction {
    pub fn value(&self, x: f64, t: f64) -> f64 {
        bump((x - self.x0) / self.wx) * bump((t - self.t0) / self.wt)
    }

    pub fn dx(&self, x: f64, t: f64) -> f64 {
        dbump((x - self.x0) / self.wx) / self.wx * bump((t - self.t0) / self.wt)
    }

    pub fn dt(&self, x: f64, t: f64) -> f64 {
        bump((x - self.x0) / self.wx) * dbump((t - self.t0) / self.wt) / self.wt
    }

    fn x_support(&self) -> (f64, f64) {
        (self.x0 - self.wx, self.x0 + self.wx)
    }

    fn t_support(&self) -> (f64, f64) {
        (self.t0 - self.wt, self.t0 + self.wt)
    }
}

/// Which weak identity to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakIdentity {
    /// u_t + u uₓ + Pₓ = 0 against φ.
    Momentum,
    /// (dμ)_t + (u dμ)_x = [u(u² − 2P) dx]_x against φ.
    Energy,
    /// The F-flux identity of the u-weighted energy.
    FFlux,
}

/// Eulerian P and Pₓ from a reconstructed pair at the target points:
/// P = ¼ φ ∗ μ + ¼ φ ∗ u², direct trapezoid sums plus exact atom kernels,
/// sgn(0) = 0 on the diagonal.
pub fn eulerian_p(data: &DataPair, targets: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nodes = data.u.nodes();
    let uvals = data.u.values();
    let dens = data.mu.ac_density().values();
    let n = nodes.len();
    let mut wq = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (nodes[i + 1] - nodes[i]);
        wq[i] += h;
        wq[i + 1] += h;
    }
    let src: Vec<f64> = (0..n)
        .map(|i| wq[i] * (dens[i] + uvals[i] * uvals[i]))
        .collect();
    let mut p = vec![0.0; targets.len()];
    let mut px = vec![0.0; targets.len()];
    for (k, &x) in targets.iter().enumerate() {
        let mut acc_p = 0.0;
        let mut acc_px = 0.0;
        for i in 0..n {
            let d = x - nodes[i];
            let e = (-d.abs()).exp() * src[i];
            acc_p += e;
            acc_px -= d.signum() * e * if d == 0.0 { 0.0 } else { 1.0 };
        }
        for a in data.mu.atoms() {
            let d = x - a.position;
            let e = (-d.abs()).exp() * a.mass;
            acc_p += e;
            if d != 0.0 {
                acc_px -= d.signum() * e;
            }
        }
        p[k] = 0.25 * acc_p;
        px[k] = 0.25 * acc_px;
    }
    (p, px)
}

/// Absolute value of the discretized left-minus-right side of the chosen
/// identity over the trajectory, with trapezoid quadrature in time.
pub fn weak_residual(
    traj: &Trajectory,
    phi: &BumpTestFunction,
    identity: WeakIdentity,
) -> Result<f64> {
    if traj.checkpoints.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let (t_lo, t_hi) = phi.t_support();
    let first_t = traj.checkpoints.first().unwrap().state.t();
    let last_t = traj.checkpoints.last().unwrap().state.t();
    let (run_lo, run_hi) = if first_t <= last_t {
        (first_t, last_t)
    } else {
        (last_t, first_t)
    };
    if t_lo < run_lo || t_hi > run_hi {
        return Err(Error::InvalidTestFunction(format!(
            "t-support [{t_lo}, {t_hi}] escapes the run interval [{run_lo}, {run_hi}]"
        )));
    }
    let (x_lo, x_hi) = phi.x_support();

    let mut times = Vec::new();
    let mut integrand = Vec::new();
    for cp in &traj.checkpoints {
        let t = cp.state.t();
        if t < t_lo || t > t_hi {
            continue;
        }
        let st = &cp.state;
        let y = st.y();
        if x_lo < y[0] || x_hi > y[y.len() - 1] {
            return Err(Error::InvalidTestFunction(format!(
                "x-support [{x_lo}, {x_hi}] escapes the solution box [{}, {}]",
                y[0],
                y[y.len() - 1]
            )));
        }
        let rec = crate::lagrangian::reconstruct_natural(
            st,
            &crate::lagrangian::ReconstructOptions::default(),
        )?;
        integrand.push(space_integral(st, &rec, phi, t, identity));
        times.push(t);
    }
    if times.len() < 2 {
        return Err(Error::InvalidTestFunction(
            "fewer than two checkpoints inside the t-support; checkpoint more densely".into(),
        ));
    }
    Ok(trapezoid(&times, &integrand).abs())
}

fn space_integral(
    state: &LagrangianState,
    rec: &DataPair,
    phi: &BumpTestFunction,
    t: f64,
    identity: WeakIdentity,
) -> f64 {
    let (x_lo, x_hi) = phi.x_support();
    let nodes = rec.u.nodes();
    let uvals = rec.u.values();
    // window of reconstruction nodes inside the support
    let lo = nodes.partition_point(|&x| x < x_lo);
    let hi = nodes.partition_point(|&x| x <= x_hi);
    if hi <= lo + 1 {
        return 0.0;
    }
    let xs = &nodes[lo..hi];
    let us = &uvals[lo..hi];
    // left-cell slope at each window node (first-order by construction)
    let slope_left: Vec<f64> = (lo..hi)
        .map(|i| {
            let j = if i == 0 { 0 } else { i - 1 };
            (uvals[j + 1] - uvals[j]) / (nodes[j + 1] - nodes[j])
        })
        .collect();

    match identity {
        WeakIdentity::Momentum => {
            let (_, px) = eulerian_p(rec, xs);
            let f: Vec<f64> = (0..xs.len())
                .map(|k| {
                    let x = xs[k];
                    us[k] * phi.dt(x, t) - phi.value(x, t) * (us[k] * slope_left[k] + px[k])
                })
                .collect();
            trapezoid(xs, &f)
        }
        WeakIdentity::Energy => {
            let (p, _) = eulerian_p(rec, xs);
            let rhs: Vec<f64> = (0..xs.len())
                .map(|k| phi.dx(xs[k], t) * us[k] * (us[k] * us[k] - 2.0 * p[k]))
                .collect();
            mu_integral(state, phi, t, |_u| 1.0) - trapezoid(xs, &rhs)
        }
        WeakIdentity::FFlux => {
            let (p, px) = eulerian_p(rec, xs);
            let rhs: Vec<f64> = (0..xs.len())
                .map(|k| {
                    let u = us[k];
                    phi.dx(xs[k], t) * (p[k] * u * u - 0.75 * u.powi(4) + p[k] * p[k] - px[k] * px[k])
                })
                .collect();
            mu_integral(state, phi, t, |u| u) + trapezoid(xs, &rhs)
        }
    }
}

/// ∫ (φ_t + u φ_x) g(u) dμ via the Lagrangian change of variables
/// Σᵢ (φ_t + U φ_x)(yᵢ) g(Uᵢ) ΔHᵢ with left-node evaluation.
fn mu_integral(
    state: &LagrangianState,
    phi: &BumpTestFunction,
    t: f64,
    g: impl Fn(f64) -> f64,
) -> f64 {
    let (y, u, h) = (state.y(), state.u(), state.h());
    let mut acc = 0.0;
    for i in 0..y.len() - 1 {
        let dh = h[i + 1] - h[i];
        if dh == 0.0 {
            continue;
        }
        acc += (phi.dt(y[i], t) + u[i] * phi.dx(y[i], t)) * g(u[i]) * dh;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, EvolveOptions};
    use crate::lagrangian::{alpha_transform, UniformGrid};
    use crate::scenarios::{make_peakon, make_peakon_antipeakon, suggest_alpha_grid, ProfileGrid};

    fn peakon_state(n: usize) -> LagrangianState {
        let data = make_peakon(1.0, 0.0, &ProfileGrid::with_step(20.0, 2e-3)).unwrap();
        let grid = suggest_alpha_grid(&data, n, 2.0, 0.0).unwrap();
        alpha_transform(&data, &grid).unwrap()
    }

    #[test]
    fn tilde_e_of_peakon() {
        let st = peakon_state(4001);
        assert!((tilde_e(&st) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn tilde_f_of_peakon() {
        let st = peakon_state(4001);
        assert!((tilde_f(&st) - 4.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn tilde_f_antisymmetric_vanishes() {
        let data = make_peakon_antipeakon(1.0, 5.0, &ProfileGrid::with_step(26.0, 5e-3)).unwrap();
        let grid = suggest_alpha_grid(&data, 3001, 2.0, 0.0).unwrap();
        let st = alpha_transform(&data, &grid).unwrap();
        assert!(tilde_f(&st).abs() < 1e-10, "{}", tilde_f(&st));
        let expect = 4.0 * (1.0 - (-10.0_f64).exp());
        assert!((tilde_e(&st) - expect).abs() < 1e-3);
    }

    #[test]
    fn zero_state_quantities() {
        let grid = UniformGrid::spanning(-4.0, 4.0, 33).unwrap();
        let nodes = grid.nodes();
        let st =
            LagrangianState::new(grid, nodes, vec![0.0; 33], vec![0.0; 33], 0.0).unwrap();
        assert_eq!(tilde_e(&st), 0.0);
        assert_eq!(tilde_f(&st), 0.0);
    }

    #[test]
    fn tilde_f_consistent_with_reconstruction() {
        let st = peakon_state(2001);
        let rec = crate::lagrangian::reconstruct_natural(
            &st,
            &crate::lagrangian::ReconstructOptions::default(),
        )
        .unwrap();
        let dal = st.alpha().step();
        assert!(
            (tilde_f(&st) - rec.tilde_f()).abs() < 5.0 * dal,
            "{} vs {}",
            tilde_f(&st),
            rec.tilde_f()
        );
    }

    #[test]
    fn reflection_flips_f_keeps_e() {
        let data = make_peakon(1.0, 0.0, &ProfileGrid::with_step(15.0, 5e-3)).unwrap();
        let grid = suggest_alpha_grid(&data, 1501, 2.0, 0.0).unwrap();
        let st = alpha_transform(&data, &grid).unwrap();
        let refl = data.reflected();
        let total = data.mu.total_mass();
        let mgrid = crate::scenarios::mirrored_alpha_grid(&grid, total);
        let mst = alpha_transform(&refl, &mgrid).unwrap();
        assert!((tilde_e(&mst) - tilde_e(&st)).abs() < 1e-10);
        assert!((tilde_f(&mst) + tilde_f(&st)).abs() < 1e-10);
    }

    #[test]
    fn single_checkpoint_report_has_zero_drift() {
        let st = peakon_state(501);
        let traj = evolve(&st, 0.0, 1e-2, &EvolveOptions::default()).unwrap();
        let rep = drift_report(&traj).unwrap();
        assert_eq!(rep.rel_drift_e, 0.0);
        assert_eq!(rep.rel_drift_f, 0.0);
        assert_eq!(rep.times.len(), 1);
    }

    #[test]
    fn per_step_e_change_bounded_by_boundary_flux() {
        let st = peakon_state(1001);
        let mut cur = st;
        let dt = 1e-3;
        for _ in 0..50 {
            let r0 = crate::evolution::rhs(&cur).unwrap();
            let n = cur.len();
            let before = tilde_e(&cur);
            let next = crate::evolution::step_rk4(&cur, dt).unwrap();
            let r1 = crate::evolution::rhs(&next).unwrap();
            let flux = r0.dh[0]
                .abs()
                .max(r0.dh[n - 1].abs())
                .max(r1.dh[0].abs())
                .max(r1.dh[n - 1].abs());
            let change = (tilde_e(&next) - before).abs();
            assert!(
                change <= dt * (2.0 * flux + 1e-12),
                "step energy change {change} vs flux bound {}",
                dt * (2.0 * flux + 1e-12)
            );
            cur = next;
        }
    }

    #[test]
    fn weak_residual_zero_solution() {
        let grid = UniformGrid::spanning(-6.0, 6.0, 121).unwrap();
        let nodes = grid.nodes();
        let st =
            LagrangianState::new(grid, nodes, vec![0.0; 121], vec![0.0; 121], 0.0).unwrap();
        let traj = evolve(&st, 1.0, 0.05, &EvolveOptions {
            checkpoint_every: 1,
            ..Default::default()
        })
        .unwrap();
        let phi = BumpTestFunction {
            x0: 0.0,
            wx: 2.0,
            t0: 0.5,
            wt: 0.4,
        };
        for id in [WeakIdentity::Momentum, WeakIdentity::Energy, WeakIdentity::FFlux] {
            let r = weak_residual(&traj, &phi, id).unwrap();
            assert!(r.abs() < 1e-14, "{id:?} residual {r}");
        }
    }

    #[test]
    fn weak_residual_rejects_escaping_support() {
        let st = peakon_state(501);
        let traj = evolve(&st, 0.2, 0.01, &EvolveOptions {
            checkpoint_every: 2,
            ..Default::default()
        })
        .unwrap();
        let phi = BumpTestFunction {
            x0: 0.0,
            wx: 1.0,
            t0: 0.5,
            wt: 0.4, // t-support [0.1, 0.9] escapes [0, 0.2]
        };
        assert!(matches!(
            weak_residual(&traj, &phi, WeakIdentity::Momentum),
            Err(Error::InvalidTestFunction(_))
        ));
        let phi_wide = BumpTestFunction {
            x0: 0.0,
            wx: 100.0, // x-support escapes the solution box
            t0: 0.1,
            wt: 0.05,
        };
        assert!(matches!(
            weak_residual(&traj, &phi_wide, WeakIdentity::Energy),
            Err(Error::InvalidTestFunction(_))
        ));
    }

    #[test]
    fn weak_residual_vanishes_off_support() {
        // phi supported away from the peakon's mass: integrand ~ kernel tail
        let st = peakon_state(1001);
        let traj = evolve(&st, 0.5, 0.01, &EvolveOptions {
            checkpoint_every: 5,
            ..Default::default()
        })
        .unwrap();
        let phi = BumpTestFunction {
            x0: -15.0,
            wx: 2.0,
            t0: 0.25,
            wt: 0.2,
        };
        for id in [WeakIdentity::Momentum, WeakIdentity::Energy, WeakIdentity::FFlux] {
            let r = weak_residual(&traj, &phi, id).unwrap();
            // the peakon's exponential tail reaches the support at ~e^{-13}
            assert!(r.abs() < 1e-6, "{id:?} residual {r}");
        }
    }
}
