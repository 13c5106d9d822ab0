//! Temporary probe 2.
use ch_core::grid::{GridFunction, Kink};
use ch_core::scenarios::kink_grid;

#[test]
fn probe_e_routes() {
    for step in [4e-3, 2e-3, 1e-3, 5e-4] {
        let nodes = kink_grid(14.0, step, &[0.0]);
        let u = GridFunction::from_closed_form(
            nodes,
            |x: f64| (-x.abs()).exp(),
            |x: f64| -x.signum() * (-x.abs()).exp(),
            &[Kink { x: 0.0, left_slope: 1.0, right_slope: -1.0 }],
        )
        .unwrap();
        let e_trap = u.energy_e();
        let zero = GridFunction::new(vec![u.x_min(), u.x_max()], vec![0.0; 2], vec![0.0; 2]).unwrap();
        let e_gauss = ch_core::grid::h1_distance_sq(&u, &zero);
        let exact = 2.0 * (1.0 - (-28.0_f64).exp());
        println!(
            "step {step:.1e}: trap-exact {:+.3e}  gauss-exact {:+.3e}",
            e_trap - exact,
            e_gauss - exact
        );
    }
    // two-kink union grid: check for near-coincident nodes
    for step in [4e-3, 1e-3] {
        let nodes = kink_grid(14.0, step, &[-1.5, 2.0]);
        let mut min_gap = f64::INFINITY;
        for w in nodes.windows(2) {
            min_gap = min_gap.min(w[1] - w[0]);
        }
        println!("step {step:.1e}: n={} min_gap {:.3e}", nodes.len(), min_gap);
    }
}
