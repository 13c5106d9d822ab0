//! Seeded property-check suites.
//!
//! These are the randomized verification batteries behind `chsolve check`:
//! kernel-acceleration equivalence against the direct double sum, the
//! identity/inequality battery for the stability estimates, the multipeakon
//! oracle cross-check and the weak-form refinement study.  Fixed seeds make
//! every run reproducible.

use crate::conserved::{weak_residual, BumpTestFunction, WeakIdentity};
use crate::error::Result;
use crate::evolution::{convolve_p, convolve_p_direct, evolve, EvolveOptions};
use crate::grid::{h1_distance_sq_to_peakon, GridFunction, Kink};
use crate::lagrangian::{alpha_transform, LagrangianState, ReconstructOptions, UniformGrid};
use crate::measure::{Atom, DataPair};
use crate::scenarios::{
    self, kink_grid, make_peakon, make_peakon_antipeakon, make_perturbed_peakon,
    multipeakon_blowup_time, suggest_alpha_grid, MultipeakonState, Perturbation, ProfileGrid,
};
use crate::stability::{
    crest, lemma_chain_bound, lemma_i_identity, lemma_ii_check, lemma_iii_iv_check, theorem_delta,
    HypothesisStatus, StabilityMonitor,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            pass,
            detail,
        }
    }
}

/// Random compact profile: a few peakon bumps with kink-aligned sampling,
/// optionally with atoms.
fn random_pair(rng: &mut ChaCha8Rng, step: f64, with_atoms: bool) -> DataPair {
    let k = rng.gen_range(1..=3);
    let mut raw: Vec<f64> = (0..k).map(|_| rng.gen_range(-4.0..4.0)).collect();
    raw.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut centers: Vec<f64> = Vec::new();
    for c in raw {
        if centers.last().map_or(true, |&l| c - l >= 0.05) {
            centers.push(c);
        }
    }
    let amps: Vec<f64> = centers
        .iter()
        .map(|_| {
            let a: f64 = rng.gen_range(-1.5..1.5);
            if a.abs() < 0.2 {
                a + 0.25 * if a >= 0.0 { 1.0 } else { -1.0 }
            } else {
                a
            }
        })
        .collect();
    let nodes = kink_grid(14.0, step, &centers);
    let a = amps.clone();
    let c = centers.clone();
    let f = move |x: f64| -> f64 {
        a.iter()
            .zip(&c)
            .map(|(&ai, &ci)| ai * (-(x - ci).abs()).exp())
            .sum()
    };
    let a2 = amps.clone();
    let c2 = centers.clone();
    let df = move |x: f64| -> f64 {
        a2.iter()
            .zip(&c2)
            .map(|(&ai, &ci)| -ai * (x - ci).signum() * (-(x - ci).abs()).exp())
            .sum()
    };
    let kinks: Vec<Kink> = centers
        .iter()
        .zip(&amps)
        .map(|(&ci, &ai)| {
            let smooth: f64 = centers
                .iter()
                .zip(&amps)
                .filter(|(&cj, _)| cj != ci)
                .map(|(&cj, &aj)| -aj * (ci - cj).signum() * (-(ci - cj).abs()).exp())
                .sum();
            Kink {
                x: ci,
                left_slope: smooth + ai,
                right_slope: smooth - ai,
            }
        })
        .collect();
    let u = GridFunction::from_closed_form(nodes, f, df, &kinks).unwrap();
    let mut atoms = Vec::new();
    if with_atoms {
        let n_atoms = rng.gen_range(0..=2);
        let mut positions: Vec<f64> = (0..n_atoms).map(|_| rng.gen_range(-8.0..8.0)).collect();
        positions.sort_by(|x, y| x.partial_cmp(y).unwrap());
        positions.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        for p in positions {
            atoms.push(Atom {
                position: p,
                mass: rng.gen_range(0.01..0.5),
            });
        }
    }
    DataPair::from_velocity(u, atoms).unwrap()
}

/// Random admissible Lagrangian state with occasional collapsed cells.
fn random_state(rng: &mut ChaCha8Rng, n: usize, span: f64) -> LagrangianState {
    let grid = UniformGrid::spanning(0.0, span.max(1.0), n).unwrap();
    let mut y = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    let mut cy = -0.5 * span;
    let mut ch = 0.0;
    for _ in 0..n {
        y.push(cy);
        u.push(rng.gen_range(-2.0..2.0));
        h.push(ch);
        let roll: f64 = rng.gen();
        if roll < 0.15 {
            // collapsed cell
        } else {
            cy += rng.gen_range(0.0..2.0 * span / n as f64);
        }
        ch += rng.gen_range(0.0..0.02);
    }
    LagrangianState::new(grid, y, u, h, 0.0).unwrap()
}

/// Brute-force equivalence of the O(N) kernel sweep (acceptance criterion:
/// ≤ 1e−12 relative for 50 random states with N ≤ 200).
pub fn kernel_suite(seed: u64, cases: usize) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(8..=200);
        let span = rng.gen_range(2.0..30.0);
        let st = random_state(&mut rng, n, span);
        let (p1, px1) = convolve_p(&st)?;
        let (p2, px2) = convolve_p_direct(&st)?;
        for i in 0..n {
            let s = p2[i].abs().max(1.0);
            max_rel = max_rel.max((p1[i] - p2[i]).abs() / s);
            let s = px2[i].abs().max(1.0);
            max_rel = max_rel.max((px1[i] - px2[i]).abs() / s);
        }
    }
    let mut out = vec![CheckResult::new(
        "kernel prefix sweep vs direct double sum",
        max_rel <= 1e-12,
        format!("max relative deviation {max_rel:.3e} over {cases} states (tol 1e-12)"),
    )];

    // overflow safety: huge spatial spans, nonnegative P
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut ok = true;
    let mut min_p: f64 = f64::INFINITY;
    for _ in 0..20 {
        let n = rng.gen_range(16..=128);
        let st = random_state(&mut rng, n, 2e6);
        let (p, px) = convolve_p(&st)?;
        ok &= p.iter().chain(px.iter()).all(|v| v.is_finite());
        min_p = min_p.min(p.iter().fold(f64::INFINITY, |a, &b| a.min(b)));
    }
    out.push(CheckResult::new(
        "kernel overflow safety on y spanning [-1e6, 1e6]",
        ok && min_p >= -1e-12,
        format!("all finite: {ok}, min P = {min_p:.3e}"),
    ));
    Ok(out)
}

/// The identity/inequality battery: (i) as an identity, (ii) as an
/// inequality over random pairs, (iii)+(iv) gated on the hypothesis, plus
/// the arithmetic ε-implication.
pub fn lemma_suite(
    seed: u64,
    n_identity: usize,
    n_inequality: usize,
    n_smallness: usize,
) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let step = 1e-3;

    // (i): exact identity, both sides by independent quadratures
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_identity {
        let pair = random_pair(&mut rng, step, true);
        let c = rng.gen_range(0.2..2.0);
        let xi = rng.gen_range(-6.0..6.0);
        let (lhs, rhs) = lemma_i_identity(&pair, c, xi);
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    out.push(CheckResult::new(
        "energy-distance identity (i) on random pairs",
        worst <= 1e-6,
        format!("max |lhs-rhs|/(1+|lhs|) = {worst:.3e} over {n_identity} cases (tol 1e-6)"),
    ));

    // (ii): inequality
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);
    let mut failures = 0usize;
    let mut margin: f64 = f64::INFINITY;
    for _ in 0..n_inequality {
        let pair = random_pair(&mut rng, 4e-3, true);
        let (f, bound) = lemma_ii_check(&pair);
        let slack = bound - f;
        margin = margin.min(slack);
        if f > bound + 1e-8 * (1.0 + f.abs()) {
            failures += 1;
        }
    }
    out.push(CheckResult::new(
        "F-bound inequality (ii) on random pairs",
        failures == 0,
        format!("{failures}/{n_inequality} violations; minimal slack {margin:.3e}"),
    ));

    // (iii)+(iv): hypothesis-satisfying perturbations
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x22);
    let grid = ProfileGrid::with_step(20.0, 4e-3);
    let mut bad = Vec::new();
    for case in 0..n_smallness {
        let c: f64 = rng.gen_range(0.5..2.0);
        let delta_max = (c / 30.0).min(std::f64::consts::SQRT_2);
        let delta = rng.gen_range(0.2 * delta_max..0.95 * delta_max);
        let defect_target = 0.5 * delta * delta * rng.gen_range(0.05..0.8);
        let kind = rng.gen_range(0..3);
        let (pair, _) = match kind {
            0 => make_perturbed_peakon(
                c,
                Perturbation::Scaled,
                (defect_target / (2.0 * c * c)).sqrt(),
                &grid,
            )?,
            1 => make_perturbed_peakon(
                c,
                Perturbation::Atom {
                    position: rng.gen_range(-4.0..4.0),
                },
                defect_target,
                &grid,
            )?,
            _ => make_perturbed_peakon(
                c,
                Perturbation::Bump {
                    center: rng.gen_range(-2.0..2.0),
                    width: rng.gen_range(0.5..1.5),
                },
                defect_target.sqrt(),
                &grid,
            )?,
        };
        let rep = lemma_iii_iv_check(&pair, c, delta)?;
        match rep.status {
            HypothesisStatus::Met => {
                let tol = 1e-6 * (1.0 + c * c);
                if rep.e_pair.0 > rep.e_pair.1 + tol
                    || rep.f_pair.0 > rep.f_pair.1 + tol
                    || rep.m_pair.0 > rep.m_pair.1 + tol
                {
                    bad.push(case);
                }
            }
            HypothesisStatus::NotMet(why) => {
                bad.push(case);
                let _ = why;
            }
        }
    }
    out.push(CheckResult::new(
        "smallness bounds (iii)+(iv) under the hypothesis",
        bad.is_empty(),
        format!("{} failures of {n_smallness} cases {:?}", bad.len(), &bad[..bad.len().min(5)]),
    ));

    // hypothesis-violating inputs are reported, never judged
    let peak = make_peakon(1.0, 0.0, &grid)?;
    let gate = lemma_iii_iv_check(&peak, 1.0, 0.1)?;
    out.push(CheckResult::new(
        "hypothesis gate reports out-of-range delta",
        matches!(gate.status, HypothesisStatus::NotMet(_)),
        format!("delta = 0.1 vs c/30 ≈ 0.0333: {:?}", gate.status),
    ));

    // the eps-form arithmetic over a (c, eps) grid
    let mut worst_slack = f64::INFINITY;
    let mut ok = true;
    for ci in 1..=30 {
        let c = 0.15 * ci as f64;
        for ei in 1..=19 {
            let eps = 0.05 * ei as f64;
            let lhs = lemma_chain_bound(c, theorem_delta(c, eps));
            worst_slack = worst_slack.min(eps * eps - lhs);
            ok &= lhs <= eps * eps;
        }
    }
    out.push(CheckResult::new(
        "eps-form implication 4cδ + 4c√(6cδ) ≤ ε²",
        ok,
        format!("minimal slack {worst_slack:.3e} over the (c, ε) grid"),
    ));
    Ok(out)
}

/// Cross-validation against the multipeakon ODE oracle.
pub fn oracle_suite(n_alpha: usize) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let opts = EvolveOptions {
        checkpoint_every: 200,
        reconstruct: ReconstructOptions::default(),
        monitor: None,
    };

    // single peakon: deviation = the solver's own traveling-wave error
    let data = make_peakon(1.0, 0.0, &ProfileGrid::for_alpha_spacing(20.0, 46.0 / n_alpha as f64))?;
    let grid = suggest_alpha_grid(&data, n_alpha, 2.0, 0.0)?;
    let st = alpha_transform(&data, &grid)?;
    let traj = evolve(&st, 3.0, 1e-3, &opts)?;
    let mp = MultipeakonState::new(vec![0.0], vec![1.0], 0.0)?;
    let dev = scenarios::oracle_compare(&traj, &mp, 3.0, &ProfileGrid::with_step(24.0, 4e-3))?;
    out.push(CheckResult::new(
        "oracle match on the free peakon",
        dev <= 0.02,
        format!("max H1 deviation {dev:.4} (tol 0.02)"),
    ));

    // peakon-antipeakon strictly before breaking
    let mp0 = MultipeakonState::new(vec![-5.0, 5.0], vec![1.0, -1.0], 0.0)?;
    let t_blow = multipeakon_blowup_time(&mp0, 1e-4, 10.0);
    let t_stop = 0.8 * t_blow;
    let span = 2.0 * 26.0 + 4.0 + 4.0;
    let data = make_peakon_antipeakon(
        1.0,
        5.0,
        &ProfileGrid::for_alpha_spacing(26.0, span / n_alpha as f64),
    )?;
    let grid = suggest_alpha_grid(&data, n_alpha, 2.0, 0.0)?;
    let st = alpha_transform(&data, &grid)?;
    let n_steps = (t_stop / 1e-3).floor();
    let traj = evolve(&st, n_steps * 1e-3, 1e-3, &opts)?;
    let dev = scenarios::oracle_compare(&traj, &mp0, t_stop, &ProfileGrid::with_step(30.0, 4e-3))?;
    out.push(CheckResult::new(
        "oracle match on the pair up to 0.8 of breaking",
        dev <= 0.05,
        format!("max H1 deviation {dev:.4} up to t = {t_stop:.2} (tol 0.05; blow-up at {t_blow:.2})"),
    ));
    Ok(out)
}

/// Weak-form residual refinement: halving Δα and dt must shrink each
/// residual by a factor inside the first-order window [1.6, 2.6].
pub fn weakform_suite(n_coarse: usize) -> Result<Vec<CheckResult>> {
    let phis = [
        BumpTestFunction {
            x0: 0.5,
            wx: 2.0,
            t0: 1.0,
            wt: 0.8,
        },
        BumpTestFunction {
            x0: 1.0,
            wx: 1.5,
            t0: 1.0,
            wt: 0.9,
        },
        BumpTestFunction {
            x0: 2.0,
            wx: 2.5,
            t0: 1.2,
            wt: 0.7,
        },
    ];

    let residuals = |n_alpha: usize, dt: f64| -> Result<[f64; 3]> {
        let span = 2.0 * 16.0 + 2.0 + 4.0;
        let data = make_peakon(
            1.0,
            0.0,
            &ProfileGrid::for_alpha_spacing(16.0, span / n_alpha as f64),
        )?;
        let grid = suggest_alpha_grid(&data, n_alpha, 2.0, 0.0)?;
        let st = alpha_transform(&data, &grid)?;
        let traj = evolve(
            &st,
            2.0,
            dt,
            &EvolveOptions {
                checkpoint_every: 5,
                reconstruct: ReconstructOptions::default(),
                monitor: None,
            },
        )?;
        let mut sums = [0.0; 3];
        for phi in &phis {
            for (k, id) in [WeakIdentity::Momentum, WeakIdentity::Energy, WeakIdentity::FFlux]
                .into_iter()
                .enumerate()
            {
                sums[k] += weak_residual(&traj, phi, id)?;
            }
        }
        Ok(sums)
    };

    let coarse = residuals(n_coarse, 2e-3)?;
    let fine = residuals(2 * n_coarse, 1e-3)?;
    let names = ["momentum", "energy transport", "F-flux"];
    let mut out = Vec::new();
    for k in 0..3 {
        let ratio = coarse[k] / fine[k];
        out.push(CheckResult::new(
            &format!("weak {} residual halves under refinement", names[k]),
            (1.6..=2.6).contains(&ratio),
            format!(
                "residual {:.3e} -> {:.3e}, ratio {ratio:.2} (window [1.6, 2.6])",
                coarse[k], fine[k]
            ),
        ));
    }
    Ok(out)
}

/// Fast structural invariants.
pub fn invariants_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    // beta(alpha, 0) = alpha after the transform
    let data = make_peakon(1.0, 0.0, &ProfileGrid::with_step(15.0, 5e-3))?;
    let grid = suggest_alpha_grid(&data, 2001, 2.0, 0.0)?;
    let st = alpha_transform(&data, &grid)?;
    let mut worst: f64 = 0.0;
    for i in 0..st.len() {
        let a = grid.node(i);
        worst = worst.max((st.beta(i) - a).abs() / a.abs().max(1.0));
        let dy = if i > 0 { st.y()[i] - st.y()[i - 1] } else { 0.0 };
        worst = worst.max((dy - grid.step()).max(0.0) / grid.step());
    }
    out.push(CheckResult::new(
        "transform: beta = alpha and 1-Lipschitz y",
        worst <= 1e-12,
        format!("max defect {worst:.3e}"),
    ));

    // crest symmetry of the kernels on the antisymmetric pair
    let pair = make_peakon_antipeakon(1.0, 3.0, &ProfileGrid::with_step(14.0, 5e-3))?;
    let grid = suggest_alpha_grid(&pair, 1601, 2.0, 0.0)?;
    let stp = alpha_transform(&pair, &grid)?;
    let (p, px) = convolve_p(&stp)?;
    let n = stp.len();
    let mut d: f64 = 0.0;
    for i in 0..n {
        d = d.max((p[i] - p[n - 1 - i]).abs()).max((px[i] + px[n - 1 - i]).abs());
    }
    out.push(CheckResult::new(
        "odd state: P even, Px odd",
        d <= 1e-12,
        format!("max symmetry defect {d:.3e}"),
    ));

    // local reversibility of the step
    let fwd = crate::evolution::step_rk4(&st, 1e-2)?;
    let back = crate::evolution::step_rk4(&fwd, -1e-2)?;
    let mut rev: f64 = 0.0;
    for i in 0..st.len() {
        rev = rev.max((back.y()[i] - st.y()[i]).abs());
        rev = rev.max((back.u()[i] - st.u()[i]).abs());
        rev = rev.max((back.h()[i] - st.h()[i]).abs());
    }
    out.push(CheckResult::new(
        "RK4 step reversibility",
        rev <= 1e-10,
        format!("defect {rev:.3e}"),
    ));

    // pushforward mass vs H span on random states
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_mass: f64 = 0.0;
    for _ in 0..10 {
        let pair = random_pair(&mut rng, 2e-3, true);
        let agrid = suggest_alpha_grid(&pair, 3001, 2.0, 0.0)?;
        let s = alpha_transform(&pair, &agrid)?;
        let rec = crate::lagrangian::reconstruct_natural(&s, &ReconstructOptions::default())?;
        let span = s.h()[s.len() - 1] - s.h()[0];
        worst_mass = worst_mass.max((rec.mu.total_mass() - span).abs() / span.max(1e-12));
    }
    out.push(CheckResult::new(
        "pushforward total mass matches the H span",
        worst_mass <= 2e-3,
        format!("max relative defect {worst_mass:.3e} (quadrature-limited)"),
    ));

    // Morrey bound and crest scaling invariance on random profiles
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7);
    let mut ok = true;
    for _ in 0..50 {
        let pair = random_pair(&mut rng, 4e-3, false);
        let (xi, m) = crest(&pair.u);
        ok &= m <= pair.u.h1_norm() / std::f64::consts::SQRT_2 + 1e-10;
        let scaled = GridFunction::new(
            pair.u.nodes().to_vec(),
            pair.u.values().iter().map(|v| 2.5 * v).collect(),
            pair.u.derivative().iter().map(|v| 2.5 * v).collect(),
        )
        .unwrap();
        ok &= crest(&scaled).0 == xi;
    }
    out.push(CheckResult::new(
        "Morrey bound and crest scaling invariance",
        ok,
        "50 random profiles".into(),
    ));

    // monitored stability bound on a short perturbed run
    let (pdata, defect) = make_perturbed_peakon(
        1.0,
        Perturbation::Scaled,
        0.005,
        &ProfileGrid::with_step(20.0, 5e-3),
    )?;
    let agrid = suggest_alpha_grid(&pdata, 2001, 2.0, 0.0)?;
    let s0 = alpha_transform(&pdata, &agrid)?;
    let traj = evolve(
        &s0,
        1.0,
        1e-3,
        &EvolveOptions {
            checkpoint_every: 100,
            reconstruct: ReconstructOptions::default(),
            monitor: Some(StabilityMonitor {
                c: 1.0,
                eps: 0.9,
                center: 0.0,
            }),
        },
    )?;
    let delta0 = (2.0 * defect).sqrt();
    let bound = lemma_chain_bound(1.0, delta0);
    let max_total = traj
        .checkpoints
        .iter()
        .filter_map(|c| c.diag.monitor.as_ref().map(|m| m.total))
        .fold(0.0_f64, f64::max);
    out.push(CheckResult::new(
        "monitored total stays below the chain bound",
        max_total <= bound,
        format!("max total {max_total:.3e} vs bound {bound:.3e} (delta0 = {delta0:.3e})"),
    ));

    // H1 error of peakon reconstruction shrinks under refinement
    let mut errs = Vec::new();
    for n in [1000usize, 2000] {
        let g = suggest_alpha_grid(&data, n + 1, 2.0, 0.0)?;
        let s = alpha_transform(&data, &g)?;
        let rec = crate::lagrangian::reconstruct_natural(&s, &ReconstructOptions::default())?;
        errs.push(h1_distance_sq_to_peakon(&rec.u, 1.0, 0.0).sqrt());
    }
    out.push(CheckResult::new(
        "reconstruction error refines",
        errs[0] / errs[1] > 1.5,
        format!("H1 errors {:.3e} -> {:.3e}", errs[0], errs[1]),
    ));
    Ok(out)
}
