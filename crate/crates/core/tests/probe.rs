//! Temporary probe (deleted before release).
use ch_core::grid::{h1_distance_sq_to_peakon, GridFunction, Kink};
use ch_core::measure::{Atom, DataPair};
use ch_core::scenarios::kink_grid;
use ch_core::stability::lemma_i_identity;

fn sum_profile(step: f64, amps: &[f64], centers: &[f64]) -> DataPair {
    let nodes = kink_grid(14.0, step, centers);
    let a = amps.to_vec();
    let c = centers.to_vec();
    let f = move |x: f64| -> f64 {
        a.iter().zip(&c).map(|(&ai, &ci)| ai * (-(x - ci).abs()).exp()).sum()
    };
    let a2 = amps.to_vec();
    let c2 = centers.to_vec();
    let df = move |x: f64| -> f64 {
        a2.iter()
            .zip(&c2)
            .map(|(&ai, &ci)| -ai * (x - ci).signum() * (-(x - ci).abs()).exp())
            .sum()
    };
    let kinks: Vec<Kink> = centers
        .iter()
        .zip(amps)
        .map(|(&ci, &ai)| {
            let smooth: f64 = centers
                .iter()
                .zip(amps)
                .filter(|(&cj, _)| cj != ci)
                .map(|(&cj, &aj)| -aj * (ci - cj).signum() * (-(ci - cj).abs()).exp())
                .sum();
            Kink { x: ci, left_slope: smooth + ai, right_slope: smooth - ai }
        })
        .collect();
    let u = GridFunction::from_closed_form(nodes, f, df, &kinks).unwrap();
    DataPair::from_velocity(
        u,
        vec![Atom { position: 1.234, mass: 0.3 }],
    )
    .unwrap()
}

#[test]
fn probe_identity_error_order() {
    let amps = [1.2, -0.7];
    let centers = [-1.5, 2.0];
    let c = 0.8;
    let xi = 0.7;
    for step in [4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4] {
        let pair = sum_profile(step, &amps, &centers);
        let (lhs, rhs) = lemma_i_identity(&pair, c, xi);
        // decompose: E(u) via trapezoid vs via the Gauss distance route
        let e_trap = pair.u.energy_e();
        let zero = GridFunction::new(
            vec![pair.u.x_min(), pair.u.x_max()],
            vec![0.0; 2],
            vec![0.0; 2],
        )
        .unwrap();
        let e_gauss = ch_core::grid::h1_distance_sq(&pair.u, &zero);
        let d2 = h1_distance_sq_to_peakon(&pair.u, c, xi);
        println!(
            "step {step:.1e}: |lhs-rhs| {:.3e}  Etrap-Egauss {:.3e}  dist2 {d2:.6}",
            (lhs - rhs).abs(),
            e_trap - e_gauss
        );
    }
}
