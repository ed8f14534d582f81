use pbedg::analytic::{AnalyticCase, AnalyticSolution};
use pbedg::diagnostics::{adaptive_integrate, pde_residual};
use pbedg::KernelSet;

fn sample_times(case: AnalyticCase) -> [f64; 3] {
    match case {
        AnalyticCase::ProdAgg => [0.01, 0.5, 0.9],
        _ => [0.01, 0.5, 2.0],
    }
}

#[test]
fn every_solution_satisfies_its_equation() {
    for case in AnalyticCase::ALL {
        let sol = AnalyticSolution::new(case);
        let kernels = KernelSet::from_id(case.kernel_id(), None, None).unwrap();
        for t in sample_times(case) {
            for x in [0.1, 1.0, 5.0] {
                let r = pde_residual(&|t, x| sol.number_density(t, x), &kernels, t, x, sol.truncation(t)).unwrap();
                assert!(r.residual <= 1e-6, "{} at t = {t}, x = {x}: {r:?}", case.id());
            }
        }
    }
}

#[test]
fn mass_is_conserved_inside_validity_window() {
    for case in AnalyticCase::ALL {
        let sol = AnalyticSolution::new(case);
        for t in sample_times(case) {
            let m1 = adaptive_integrate(&|x| if x > 0.0 { sol.mass_density(t, x).unwrap() } else { 0.0 }, 0.0, sol.truncation(t), 1e-10)
                .unwrap();
            assert!((m1 - 1.0).abs() <= 1e-8, "{} at t = {t}: {m1}", case.id());
        }
    }
}

#[test]
fn zeroth_moments_match_quadrature() {
    for case in AnalyticCase::ALL {
        let sol = AnalyticSolution::new(case);
        for t in sample_times(case) {
            let Some(m0) = sol.m0(t) else { continue };
            let q = adaptive_integrate(
                &|x| if x > 0.0 { sol.number_density(t, x).unwrap() } else { 0.0 },
                0.0,
                sol.truncation(t),
                1e-10,
            )
            .unwrap();
            assert!((q - m0).abs() <= 1e-8 * m0, "{} at t = {t}: {q} vs {m0}", case.id());
        }
    }
}
