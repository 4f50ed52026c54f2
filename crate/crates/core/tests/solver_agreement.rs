//! Newton solver cross-checked against the fixed-point oracle on randomized
//! radial networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vertflex_core::per_unit::{admittance_matrix, to_per_unit, DEFAULT_S_BASE_MVA};
use vertflex_core::power_flow::{solve_power_flow, InjectionSet, SolverOptions};
use vertflex_core::reference::{gauss_seidel_voltages, random_radial_grid};

#[test]
fn newton_matches_fixed_point_on_random_radial_networks() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..20 {
        let n_buses = 3 + case % 4;
        let grid = random_radial_grid::<f64>(&mut rng, n_buses);
        let pu = to_per_unit(&grid, DEFAULT_S_BASE_MVA).unwrap();
        let y = admittance_matrix(&pu).unwrap();

        let mut inj = InjectionSet::zeros(&pu);
        for bus in 1..n_buses {
            // apparent power capped at 0.3 pu
            let p = rng.gen_range(0.0..0.28) * DEFAULT_S_BASE_MVA;
            let q = rng.gen_range(-0.1..0.1) * DEFAULT_S_BASE_MVA;
            inj.add_at(bus, p, q);
        }

        let sol = solve_power_flow(&pu, &y, &inj, &SolverOptions::default()).unwrap();
        assert!(sol.converged, "case {case}: newton did not converge");

        let oracle = gauss_seidel_voltages(&pu, &y, &inj, 1e-11, 200_000)
            .unwrap_or_else(|| panic!("case {case}: oracle did not converge"));

        for bus in 0..n_buses {
            let diff = (sol.v[bus].norm() - oracle[bus].norm()).abs();
            assert!(
                diff <= 1e-7,
                "case {case} bus {bus}: |v| differs by {diff:.3e}"
            );
        }
    }
}
