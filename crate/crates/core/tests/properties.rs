use langevin_sgd::metrics::{w2_empirical, w2_gaussian, SampleSet};
use langevin_sgd::oracles::{
    gaussian_chain_law, subset_estimator_variance_bruteforce, subset_estimator_variance_formula, AffineChainSpec,
};
use langevin_sgd::planner::{plan_sgd_first_order, plan_sgd_second_order, potential_at};
use langevin_sgd::potentials::{
    make_isotropic_gaussian_target, Component, Constants, DecomposableTarget, Potential, Shifted, SquaredDistance,
};
use langevin_sgd::samplers::{lmc_step, lmc_update, sgd_idealized_step, ChainState};
use langevin_sgd::GaussianLaw;
use proptest::prelude::*;

fn points(dim: usize, len: usize) -> impl Strategy<Value = SampleSet> {
    prop::collection::vec(-10.0..10.0f64, dim * len).prop_map(move |data| SampleSet::from_flat(dim, data).unwrap())
}

fn triple() -> impl Strategy<Value = (SampleSet, SampleSet, SampleSet)> {
    (1usize..4, 1usize..7).prop_flat_map(|(d, n)| (points(d, n), points(d, n), points(d, n)))
}

fn centers(n: usize, p: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0..3.0f64, p), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn empirical_w2_is_a_metric((a, b, c) in triple()) {
        let ab = w2_empirical(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - w2_empirical(&b, &a).unwrap()).abs() <= 1e-12 * (1.0 + ab));
        prop_assert!(w2_empirical(&a, &a).unwrap() <= 1e-12);
        let ac = w2_empirical(&a, &c).unwrap();
        let bc = w2_empirical(&b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn empirical_w2_scales((a, b, _) in triple(), s in -5.0..5.0f64) {
        let base = w2_empirical(&a, &b).unwrap();
        let scaled = w2_empirical(&a.scaled(s), &b.scaled(s)).unwrap();
        prop_assert!((scaled - s.abs() * base).abs() <= 1e-9 * (1.0 + s.abs() * base));
    }

    #[test]
    fn gaussian_w2_of_point_masses(x in prop::collection::vec(-5.0..5.0f64, 3), y in prop::collection::vec(-5.0..5.0f64, 3)) {
        let d: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let w = w2_gaussian(&GaussianLaw::point_mass(&x).unwrap(), &GaussianLaw::point_mass(&y).unwrap()).unwrap();
        prop_assert!((w - d).abs() <= 1e-9);
    }

    #[test]
    fn gaussian_w2_isotropic_closed_form(mu in -3.0..3.0f64, s1 in 0.1..4.0f64, s2 in 0.1..4.0f64, p in 1usize..5) {
        let a = GaussianLaw::isotropic(&vec![0.0; p], s1 * s1).unwrap();
        let b = GaussianLaw::isotropic(&vec![mu; p], s2 * s2).unwrap();
        let expected = (p as f64 * (mu * mu + (s1 - s2) * (s1 - s2))).sqrt();
        prop_assert!((w2_gaussian(&a, &b).unwrap() - expected).abs() <= 1e-9);
    }

    #[test]
    fn variance_formula_matches_enumeration(a in prop::collection::vec(-100.0..100.0f64, 2..10), b_frac in 0.0..1.0f64) {
        let n = a.len();
        let b = 1 + ((n - 1) as f64 * b_frac).round() as usize;
        let f = subset_estimator_variance_formula(&a, b).unwrap();
        let e = subset_estimator_variance_bruteforce(&a, b).unwrap();
        prop_assert!((f - e).abs() <= 1e-10 * f.abs().max(e.abs()).max(1e-300));
    }

    #[test]
    fn plans_ignore_constant_shifts(cs in centers(30, 2), offsets in prop::collection::vec(-50.0..50.0f64, 30), theta0 in prop::collection::vec(-2.0..2.0f64, 2)) {
        let plain = make_isotropic_gaussian_target(2, 30, 1.0, &cs).unwrap();
        let components: Vec<Box<dyn Component>> = cs
            .iter()
            .zip(&offsets)
            .map(|(c, &offset)| {
                Box::new(Shifted { inner: SquaredDistance { center: c.clone(), weight: 1.0 }, offset }) as Box<dyn Component>
            })
            .collect();
        let shifted = DecomposableTarget::from_components(components, Constants::new(1.0, 1.0, Some(0.0)).unwrap()).unwrap();
        let f_plain = potential_at(&plain, &theta0).unwrap();
        let f_shift = potential_at(&shifted, &theta0).unwrap();
        prop_assert_eq!(f_plain.to_bits(), f_shift.to_bits());
        let eps = 0.5;
        let a = plan_sgd_first_order(eps, &plain, f_plain);
        let b = plan_sgd_first_order(eps, &shifted, f_shift);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn idealized_sgd_equals_lmc(h_frac in 0.01..0.99f64, n in 2usize..60, seed in any::<u64>(), cs in centers(60, 2)) {
        let target = make_isotropic_gaussian_target(2, n, 0.3, &cs[..n]).unwrap();
        let h = h_frac / target.constants().smoothness;
        let b = h * (n * n) as f64 / (2.0 + h * n as f64);
        prop_assume!(b >= 1.0);
        let mut lmc = ChainState::new(vec![1.0, -1.0], seed).unwrap();
        let mut sgd = lmc.clone();
        for _ in 0..200 {
            lmc_step(&mut lmc, &target, h).unwrap();
            sgd_idealized_step(&mut sgd, &target, h, b).unwrap();
        }
        for (x, y) in lmc.theta().iter().zip(sgd.theta()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn chain_law_mean_follows_gradient_descent(cs in centers(5, 2), h_frac in 0.01..0.99f64, k in 0u64..50, theta0 in prop::collection::vec(-5.0..5.0f64, 2)) {
        let target = make_isotropic_gaussian_target(2, 5, 0.7, &cs).unwrap();
        let h = h_frac / target.constants().smoothness;
        let law = gaussian_chain_law(&AffineChainSpec::lmc(&target, h).unwrap(), &theta0, k).unwrap();
        let mut theta = theta0.clone();
        for _ in 0..k {
            let g = target.gradient(&theta);
            lmc_update(&mut theta, &g, h, &[0.0, 0.0]);
        }
        let c = 1.0 - h * target.constants().strong_convexity;
        let var = 2.0 * h * (1.0 - c.powi(2 * k as i32)) / (1.0 - c * c);
        for j in 0..2 {
            prop_assert!((law.mean()[j] - theta[j]).abs() <= 1e-9 * (1.0 + theta[j].abs()));
            prop_assert!((law.cov()[(j, j)] - var).abs() <= 1e-9 * (1.0 + var));
        }
        prop_assert!(law.cov()[(0, 1)].abs() <= 1e-12);
    }

    #[test]
    fn first_order_plans_are_sound(eps_frac in 0.0..1.0f64, cs in centers(100, 1), theta0 in -3.0..3.0f64) {
        let n = 100;
        let target = make_isotropic_gaussian_target(1, n, 1.0, &cs).unwrap();
        let (lo, hi) = (3.0 / n as f64, 2.0 / (n as f64).sqrt());
        let eps = lo + (hi - lo) * eps_frac;
        let f0 = potential_at(&target, &[theta0]).unwrap();
        let plan = plan_sgd_first_order(eps, &target, f0).unwrap();
        prop_assert!(plan.predicted_bound <= eps);
        let spec = AffineChainSpec::sgd_idealized(&target, plan.h_eff, plan.b as f64).unwrap();
        let law = gaussian_chain_law(&spec, &[theta0], plan.k).unwrap();
        let exact = w2_gaussian(&law, &target.stationary_law().unwrap()).unwrap();
        prop_assert!(exact <= eps, "exact {} > eps {}", exact, eps);
    }

    #[test]
    fn second_order_plans_are_sound(eps_frac in 0.0..1.0f64, cs in centers(100, 1), theta0 in -3.0..3.0f64) {
        let n = 100;
        let target = make_isotropic_gaussian_target(1, n, 1.0, &cs).unwrap().with_hessian_lipschitz(1.0).unwrap();
        let (lo, hi) = (8.0 / 990.0, 0.4);
        let eps = lo + (hi - lo) * eps_frac;
        let f0 = potential_at(&target, &[theta0]).unwrap();
        let plan = plan_sgd_second_order(eps, &target, f0).unwrap();
        prop_assert!(plan.predicted_bound <= eps);
        let spec = AffineChainSpec::sgd_idealized(&target, plan.h_eff, plan.b as f64).unwrap();
        let law = gaussian_chain_law(&spec, &[theta0], plan.k).unwrap();
        let exact = w2_gaussian(&law, &target.stationary_law().unwrap()).unwrap();
        prop_assert!(exact <= eps, "exact {} > eps {}", exact, eps);
    }

    #[test]
    fn budget_formula_is_consistent(n in 9usize..2000, p in 1usize..6, eps_frac in 0.0..1.0f64, m_g in 0.2..3.0f64) {
        let cs: Vec<Vec<f64>> = (0..n).map(|i| vec![(i % 7) as f64 / 7.0; p]).collect();
        let target = make_isotropic_gaussian_target(p, n, m_g, &cs).unwrap();
        let (nf, pf) = (n as f64, p as f64);
        let (lo, hi) = (3.0 * pf.sqrt() / nf, 2.0 * pf.sqrt() / (nf * m_g).sqrt());
        prop_assume!(lo < hi);
        let eps = lo + (hi - lo) * eps_frac;
        let plan = plan_sgd_first_order(eps, &target, 0.0).unwrap();
        let b = nf * nf * eps * eps / (8.0 * pf + nf * eps * eps);
        prop_assert!((plan.b_real - b).abs() <= 1e-13 * b);
        let k_real = plan.log_q / (m_g * nf * plan.h);
        prop_assert!((k_real * b - plan.budget_bound).abs() <= 1e-12 * plan.budget_bound);
        prop_assert_eq!(plan.budget, plan.k * plan.b);
        prop_assert!(plan.budget as f64 >= plan.budget_bound * (1.0 - 1e-12));
    }
}
