//! The self-contained semilinear system in α-coordinates and its fixed-step
//! time integration:
//!
//!   dy/dt = U,    dU/dt = −Pₓ,    dH/dt = U³ − 2 U P,
//!
//! with the nonlocal terms
//!
//!   P(y(α))  =  ¼ ∫ e^{−|y(α)−y(θ)|} [H_θ + U² y_θ] dθ,
//!   Pₓ(y(α)) = −¼ ∫ sgn(α−θ) e^{−|y(α)−y(θ)|} [H_θ + U² y_θ] dθ.
//!
//! Both convolutions are evaluated in O(N) by left and right prefix
//! recurrences over cell-exact kernel integrals (see [`crate::cell`]); since
//! y is non-decreasing, every exponential has a non-positive argument and the
//! sweep cannot overflow, whatever the spatial extent of the grid.

use crate::cell::ExpCell;
use crate::conserved;
use crate::error::{Error, Result};
use crate::lagrangian::{
    reconstruct_natural, LagrangianState, ReconstructOptions,
};
use crate::stability::{self, StabilityMonitor};

/// Relative (to Δα) width of the monotonicity snap: cells driven negative by
/// no more than this fraction of Δα are snapped to zero width, larger
/// violations abort the step.  Near the crest of a peakon the exact cell
/// widths contract like e^{−t}, so this has to absorb crossings at the size
/// of the local truncation error, orders of magnitude above roundoff.
pub const CLAMP_FRAC: f64 = 1e-3;

const MASS_FLOOR: f64 = 1e-290;

/// One right-hand-side evaluation.
#[derive(Debug, Clone)]
pub struct RhsEvaluation {
    pub dy: Vec<f64>,
    pub du: Vec<f64>,
    pub dh: Vec<f64>,
    pub p: Vec<f64>,
    pub px: Vec<f64>,
}

fn check_sorted(y: &[f64]) -> Result<()> {
    for i in 0..y.len() - 1 {
        if y[i + 1] < y[i] {
            return Err(Error::CorruptedState(format!(
                "y decreasing at cell {i}: {} then {}",
                y[i],
                y[i + 1]
            )));
        }
    }
    Ok(())
}

/// Cell weights: kernel integrals of dμ + u² dx over each cell, referenced
/// to the right edge (`l`, seen from targets further right) and to the left
/// edge (`r`, seen from targets further left).
fn cell_kernel_weights(y: &[f64], u: &[f64], h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut l = vec![0.0; n - 1];
    let mut r = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let w = y[i + 1] - y[i];
        let dh = h[i + 1] - h[i];
        let c = ExpCell::fit(w, u[i], u[i + 1]);
        let mass = c.mass_raw();
        if c.valid && mass > MASS_FLOOR {
            let scale = dh / mass;
            let (lmu, rmu) = c.mu_weights_raw();
            let (l2, r2) = c.u2_weights();
            l[i] = scale * lmu + l2;
            r[i] = scale * rmu + r2;
        } else {
            // collapsed cell: all of its content sits at the midpoint
            let um = 0.5 * (u[i] + u[i + 1]);
            let deposit = (dh + um * um * w) * (-0.5 * w).exp();
            l[i] = deposit;
            r[i] = deposit;
        }
    }
    (l, r)
}

pub(crate) fn convolve_arrays(y: &[f64], u: &[f64], h: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_sorted(y)?;
    let n = y.len();
    let (lw, rw) = cell_kernel_weights(y, u, h);
    let mut a = vec![0.0; n];
    for j in 0..n - 1 {
        a[j + 1] = a[j] * (-(y[j + 1] - y[j])).exp() + lw[j];
    }
    let mut b = vec![0.0; n];
    for j in (0..n - 1).rev() {
        b[j] = b[j + 1] * (-(y[j + 1] - y[j])).exp() + rw[j];
    }
    let p: Vec<f64> = (0..n).map(|j| 0.25 * (a[j] + b[j])).collect();
    let px: Vec<f64> = (0..n).map(|j| 0.25 * (b[j] - a[j])).collect();
    Ok((p, px))
}

/// Reference evaluation of the same cell discretization by the direct
/// O(N²) double sum; the prefix sweep must agree to roundoff.
pub fn convolve_p_direct(state: &LagrangianState) -> Result<(Vec<f64>, Vec<f64>)> {
    let (y, u, h) = (state.y(), state.u(), state.h());
    check_sorted(y)?;
    let n = y.len();
    let (lw, rw) = cell_kernel_weights(y, u, h);
    let mut p = vec![0.0; n];
    let mut px = vec![0.0; n];
    for j in 0..n {
        let mut left = 0.0;
        for i in 0..j {
            left += lw[i] * (-(y[j] - y[i + 1])).exp();
        }
        let mut right = 0.0;
        for i in j..n - 1 {
            right += rw[i] * (-(y[i] - y[j])).exp();
        }
        p[j] = 0.25 * (left + right);
        px[j] = 0.25 * (right - left);
    }
    Ok((p, px))
}

/// P and Pₓ at the grid nodes.
pub fn convolve_p(state: &LagrangianState) -> Result<(Vec<f64>, Vec<f64>)> {
    convolve_arrays(state.y(), state.u(), state.h())
}

fn rhs_arrays(y: &[f64], u: &[f64], h: &[f64]) -> Result<RhsEvaluation> {
    let (p, px) = convolve_arrays(y, u, h)?;
    let n = y.len();
    let mut du = Vec::with_capacity(n);
    let mut dh = Vec::with_capacity(n);
    for j in 0..n {
        du.push(-px[j]);
        dh.push(u[j] * u[j] * u[j] - 2.0 * u[j] * p[j]);
    }
    Ok(RhsEvaluation {
        dy: u.to_vec(),
        du,
        dh,
        p,
        px,
    })
}

/// Right-hand side of the semilinear system at a state.
pub fn rhs(state: &LagrangianState) -> Result<RhsEvaluation> {
    rhs_arrays(state.y(), state.u(), state.h())
}

fn snap_monotone(y: &mut [f64], dal: f64, t: f64) -> Result<()> {
    let tol = CLAMP_FRAC * dal;
    for i in 0..y.len() - 1 {
        if y[i + 1] < y[i] {
            if y[i] - y[i + 1] <= tol {
                y[i + 1] = y[i];
            } else {
                return Err(Error::CorruptedState(format!(
                    "cell {i} crossed by {:.3e} (> {:.1e} dal) at t = {t}; reduce dt",
                    y[i] - y[i + 1],
                    CLAMP_FRAC
                )));
            }
        }
    }
    Ok(())
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

/// One classical Runge–Kutta step.  `dt` may be negative (backward step).
pub fn step_rk4(state: &LagrangianState, dt: f64) -> Result<LagrangianState> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("bad time step {dt}")));
    }
    let dal = state.alpha().step();
    let t = state.t();
    let (y0, u0, h0) = (state.y(), state.u(), state.h());

    let k1 = rhs_arrays(y0, u0, h0)?;
    let mut y1 = axpy(y0, 0.5 * dt, &k1.dy);
    snap_monotone(&mut y1, dal, t)?;
    let k2 = rhs_arrays(&y1, &axpy(u0, 0.5 * dt, &k1.du), &axpy(h0, 0.5 * dt, &k1.dh))?;
    let mut y2 = axpy(y0, 0.5 * dt, &k2.dy);
    snap_monotone(&mut y2, dal, t)?;
    let k3 = rhs_arrays(&y2, &axpy(u0, 0.5 * dt, &k2.du), &axpy(h0, 0.5 * dt, &k2.dh))?;
    let mut y3 = axpy(y0, dt, &k3.dy);
    snap_monotone(&mut y3, dal, t)?;
    let k4 = rhs_arrays(&y3, &axpy(u0, dt, &k3.du), &axpy(h0, dt, &k3.dh))?;

    let n = y0.len();
    let c = dt / 6.0;
    let mut y = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        y.push(y0[i] + c * (k1.dy[i] + 2.0 * k2.dy[i] + 2.0 * k3.dy[i] + k4.dy[i]));
        u.push(u0[i] + c * (k1.du[i] + 2.0 * k2.du[i] + 2.0 * k3.du[i] + k4.du[i]));
        h.push(h0[i] + c * (k1.dh[i] + 2.0 * k2.dh[i] + 2.0 * k3.dh[i] + k4.dh[i]));
    }
    if y.iter().chain(u.iter()).chain(h.iter()).any(|v| !v.is_finite()) {
        return Err(Error::BlowUp {
            t,
            detail: "non-finite value after RK4 step".into(),
        });
    }
    snap_monotone(&mut y, dal, t)?;
    Ok(LagrangianState::raw(*state.alpha(), y, u, h, t + dt))
}

impl LagrangianState {
    /// Assemble without re-validation; stepping keeps the invariants by the
    /// clamp above.
    pub(crate) fn raw(
        alpha: crate::lagrangian::UniformGrid,
        y: Vec<f64>,
        u: Vec<f64>,
        h: Vec<f64>,
        t: f64,
    ) -> Self {
        // Safety of invariants is maintained by the integrator; the public
        // constructor stays the validating path.
        Self::new_unchecked(alpha, y, u, h, t)
    }
}

/// Per-checkpoint stability numbers (present when a monitor is configured).
#[derive(Debug, Clone, Copy)]
pub struct MonitorNumbers {
    pub xi: f64,
    pub m: f64,
    pub dist2: f64,
    pub total: f64,
    pub lemma_bound: f64,
    pub eps2: f64,
    pub hypothesis_met: bool,
}

/// Diagnostics attached to every checkpoint.
#[derive(Debug, Clone)]
pub struct CheckpointDiagnostics {
    pub t: f64,
    pub e_tilde: f64,
    pub f_tilde: f64,
    pub e_ac: f64,
    pub mu_s: f64,
    /// leftmost maximizer of the reconstructed profile and its value
    pub crest_xi: f64,
    pub crest_m: f64,
    pub monitor: Option<MonitorNumbers>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub state: LagrangianState,
    pub diag: CheckpointDiagnostics,
}

/// Checkpointed evolution output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub checkpoints: Vec<Checkpoint>,
}

impl Trajectory {
    pub fn diagnostics(&self) -> Vec<CheckpointDiagnostics> {
        self.checkpoints.iter().map(|c| c.diag.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub checkpoint_every: usize,
    pub reconstruct: ReconstructOptions,
    pub monitor: Option<StabilityMonitor>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            checkpoint_every: 100,
            reconstruct: ReconstructOptions::default(),
            monitor: None,
        }
    }
}

fn checkpoint_diagnostics(
    state: &LagrangianState,
    opts: &EvolveOptions,
    delta0: &mut Option<f64>,
) -> Result<CheckpointDiagnostics> {
    let rec = reconstruct_natural(state, &opts.reconstruct)?;
    let (crest_xi, crest_m) = stability::crest(&rec.u);
    let monitor = match &opts.monitor {
        Some(mon) => {
            let frag = stability::peakon_distance(&rec, mon.c)?;
            let total = frag.total;
            let d0 = *delta0.get_or_insert_with(|| {
                let defect = rec.mu.singular_mass()
                    + crate::grid::h1_distance_sq_to_peakon(&rec.u, mon.c, mon.center);
                (2.0 * defect).sqrt()
            });
            let ca = mon.c.abs();
            let lemma_bound = 4.0 * ca * d0 + 4.0 * ca * (6.0 * ca * d0).sqrt();
            let hypothesis_met = d0 < (ca / 30.0).min(std::f64::consts::SQRT_2);
            Some(MonitorNumbers {
                xi: frag.xi,
                m: frag.m,
                dist2: frag.dist2,
                total,
                lemma_bound,
                eps2: mon.eps * mon.eps,
                hypothesis_met,
            })
        }
        None => None,
    };
    Ok(CheckpointDiagnostics {
        t: state.t(),
        e_tilde: conserved::tilde_e(state),
        f_tilde: conserved::tilde_f(state),
        e_ac: rec.u.energy_e(),
        mu_s: rec.mu.singular_mass(),
        crest_xi,
        crest_m,
        monitor,
    })
}

/// Drive the state to `t_end` with fixed steps, invoking `sink` at every
/// checkpoint (including the initial and final states).
pub fn evolve_with(
    state: &LagrangianState,
    t_end: f64,
    dt: f64,
    opts: &EvolveOptions,
    mut sink: impl FnMut(&LagrangianState, &CheckpointDiagnostics) -> Result<()>,
) -> Result<LagrangianState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if opts.checkpoint_every == 0 {
        return Err(Error::InvalidParameter("checkpoint_every must be >= 1".into()));
    }
    let span = t_end - state.t();
    let nsteps = (span.abs() / dt).round() as usize;
    if (nsteps as f64 * dt - span.abs()).abs() > 1e-9 * span.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} does not divide the interval of length {span}"
        )));
    }
    let signed_dt = if span < 0.0 { -dt } else { dt };

    let mut delta0: Option<f64> = None;
    let mut cur = state.clone();
    let diag = checkpoint_diagnostics(&cur, opts, &mut delta0)?;
    sink(&cur, &diag)?;
    for step in 1..=nsteps {
        cur = step_rk4(&cur, signed_dt)?;
        if step % opts.checkpoint_every == 0 || step == nsteps {
            let diag = checkpoint_diagnostics(&cur, opts, &mut delta0)?;
            sink(&cur, &diag)?;
        }
    }
    Ok(cur)
}

/// Evolve and collect all checkpoints.
pub fn evolve(
    state: &LagrangianState,
    t_end: f64,
    dt: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let mut checkpoints = Vec::new();
    evolve_with(state, t_end, dt, opts, |s, d| {
        checkpoints.push(Checkpoint {
            state: s.clone(),
            diag: d.clone(),
        });
        Ok(())
    })?;
    Ok(Trajectory { checkpoints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{alpha_transform, UniformGrid};
    use crate::scenarios::{make_peakon, suggest_alpha_grid, ProfileGrid};

    fn zero_state(n: usize) -> LagrangianState {
        let grid = UniformGrid::spanning(-8.0, 8.0, n).unwrap();
        let nodes = grid.nodes();
        LagrangianState::new(grid, nodes, vec![0.0; n], vec![0.0; n], 0.0).unwrap()
    }

    fn peakon_state(n_alpha: usize) -> LagrangianState {
        let data = make_peakon(1.0, 0.0, &ProfileGrid::default()).unwrap();
        let grid = suggest_alpha_grid(&data, n_alpha, 2.0, 0.0).unwrap();
        alpha_transform(&data, &grid).unwrap()
    }

    #[test]
    fn zero_state_has_zero_kernels() {
        let st = zero_state(33);
        let (p, px) = convolve_p(&st).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
        assert!(px.iter().all(|&v| v == 0.0));
        let r = rhs(&st).unwrap();
        assert!(r.du.iter().chain(r.dh.iter()).all(|&v| v == 0.0));
    }

    /// For the c=1 peakon, P(x) = e^{−|x|} − e^{−2|x|}/2 (convolution of
    /// ½e^{−|·|} with the density (3/2)e^{−2|·|} of u² + uₓ²/2).
    #[test]
    fn peakon_kernel_closed_form() {
        let st = peakon_state(4001);
        let (p, px) = convolve_p(&st).unwrap();
        let y = st.y();
        // the anchored grid has a node with y = 0
        let crest = y
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap()
            .0;
        assert!(y[crest].abs() < 1e-6);
        assert!((p[crest] - 0.5).abs() < 1e-4, "P(0) = {}", p[crest]);
        assert!(px[crest].abs() < 1e-6, "Px(0) = {}", px[crest]);
        // node nearest y = 1
        let j = y
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1.0).abs().partial_cmp(&(b.1 - 1.0).abs()).unwrap())
            .unwrap()
            .0;
        let expect = (-y[j]).exp() - 0.5 * (-2.0 * y[j]).exp();
        assert!((p[j] - expect).abs() < 1e-4, "{} vs {expect}", p[j]);
        // crest energy flux and acceleration vanish for the traveling wave
        let r = rhs(&st).unwrap();
        assert!(r.dh[crest].abs() < 1e-4);
        assert!(r.du[crest].abs() < 1e-6);
        assert_eq!(r.dy, st.u());
    }

    #[test]
    fn prefix_matches_direct_sum() {
        let st = peakon_state(201);
        let (p1, px1) = convolve_p(&st).unwrap();
        let (p2, px2) = convolve_p_direct(&st).unwrap();
        let scale = 1.0_f64;
        for i in 0..p1.len() {
            assert!((p1[i] - p2[i]).abs() <= 1e-13 * scale.max(p2[i].abs()));
            assert!((px1[i] - px2[i]).abs() <= 1e-13 * scale.max(px2[i].abs()));
        }
    }

    #[test]
    fn corrupted_state_detected() {
        let grid = UniformGrid::spanning(0.0, 1.0, 4).unwrap();
        let st = LagrangianState::raw(
            grid,
            vec![0.0, 0.5, 0.2, 1.0],
            vec![0.0; 4],
            vec![0.0; 4],
            0.0,
        );
        assert!(matches!(
            convolve_p(&st),
            Err(Error::CorruptedState(_))
        ));
    }

    #[test]
    fn zero_state_step_only_advances_time() {
        let st = zero_state(17);
        let next = step_rk4(&st, 0.25).unwrap();
        assert_eq!(next.t(), 0.25);
        assert_eq!(next.y(), st.y());
        assert_eq!(next.u(), st.u());
        assert_eq!(next.h(), st.h());
    }

    #[test]
    fn peakon_crest_advances_at_unit_speed() {
        let st = peakon_state(2001);
        let crest = st
            .u()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let dt = 1e-3;
        let mut cur = st.clone();
        for _ in 0..100 {
            cur = step_rk4(&cur, dt).unwrap();
        }
        let moved = cur.y()[crest] - st.y()[crest];
        assert!((moved - 0.1).abs() < 1e-5, "crest moved {moved}");
    }

    #[test]
    fn step_is_locally_reversible() {
        let st = peakon_state(801);
        let dt = 1e-2;
        let fwd = step_rk4(&st, dt).unwrap();
        let back = step_rk4(&fwd, -dt).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..st.len() {
            err = err.max((back.y()[i] - st.y()[i]).abs());
            err = err.max((back.u()[i] - st.u()[i]).abs());
            err = err.max((back.h()[i] - st.h()[i]).abs());
        }
        assert!(err < 1e-11, "reversibility defect {err}");
        assert!((back.t() - st.t()).abs() < 1e-15);
    }

    #[test]
    fn rk4_is_fourth_order_in_dt() {
        let st = peakon_state(401);
        let reference = {
            let mut cur = st.clone();
            for _ in 0..64 {
                cur = step_rk4(&cur, 0.4 / 64.0).unwrap();
            }
            cur
        };
        let err_of = |nsteps: usize| {
            let mut cur = st.clone();
            for _ in 0..nsteps {
                cur = step_rk4(&cur, 0.4 / nsteps as f64).unwrap();
            }
            let mut e: f64 = 0.0;
            for i in 0..cur.len() {
                e = e.max((cur.u()[i] - reference.u()[i]).abs());
                e = e.max((cur.y()[i] - reference.y()[i]).abs());
            }
            e
        };
        let e1 = err_of(1);
        let e2 = err_of(2);
        assert!(e1 / e2 >= 8.0, "dt-halving ratio {} (e1={e1}, e2={e2})", e1 / e2);
    }

    #[test]
    fn evolve_zero_span_yields_single_checkpoint() {
        let st = zero_state(21);
        let traj = evolve(&st, 0.0, 1e-2, &EvolveOptions::default()).unwrap();
        assert_eq!(traj.checkpoints.len(), 1);
        assert_eq!(traj.checkpoints[0].diag.e_tilde, 0.0);
    }

    #[test]
    fn evolve_rejects_non_divisible_interval() {
        let st = zero_state(21);
        assert!(evolve(&st, 0.05, 0.02, &EvolveOptions::default()).is_err());
    }

    #[test]
    fn odd_state_gives_even_p_odd_px() {
        // antisymmetric pair data: y odd, U odd, H-increments even
        let data =
            crate::scenarios::make_peakon_antipeakon(1.0, 3.0, &ProfileGrid::with_step(15.0, 0.01))
                .unwrap();
        let grid = suggest_alpha_grid(&data, 1601, 2.0, 0.0).unwrap();
        let st = alpha_transform(&data, &grid).unwrap();
        let (p, px) = convolve_p(&st).unwrap();
        let n = st.len();
        let mut ep: f64 = 0.0;
        let mut epx: f64 = 0.0;
        for i in 0..n {
            ep = ep.max((p[i] - p[n - 1 - i]).abs());
            epx = epx.max((px[i] + px[n - 1 - i]).abs());
        }
        assert!(ep < 1e-12, "P evenness defect {ep}");
        assert!(epx < 1e-12, "Px oddness defect {epx}");
    }
}
