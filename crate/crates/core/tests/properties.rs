use omo::domain::ConvexDomain;
use omo::equilibrium::{
    extragradient_step, ome_adversary, run_ome, vi_residual, LearnerConfig, SolverConfig, StepSize, VIPool,
};
use omo::integral::{line_integral, polyline_integral, LossSpec, QuadratureRule};
use omo::learners::{link, Algorithm, LearnerState, Regularizer};
use omo::maps::{spectral_norm, MonotoneMap};
use omo::networks::{gen_network, NetworkFamily, NetworkSpec};
use omo::regret::{regret_new_instant, regret_std_instant};
use omo::{rng, Matrix, Vector};
use proptest::prelude::*;
use rand::Rng;

fn rand_vec(r: &mut rng::Rng, n: usize, s: f64) -> Vector {
    Vector::from_fn(n, |_, _| r.random_range(-s..s))
}

fn rand_psd_affine(r: &mut rng::Rng, n: usize) -> MonotoneMap {
    let m = Matrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let k = Matrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let a = m.transpose() * &m + (&k - k.transpose()) * 0.5;
    MonotoneMap::affine_psd(a, rand_vec(r, n, 1.0)).unwrap()
}

fn rand_quadratic(r: &mut rng::Rng, n: usize) -> MonotoneMap {
    let m = Matrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    MonotoneMap::quadratic_gradient(m.transpose() * &m, rand_vec(r, n, 1.0)).unwrap()
}

fn rule() -> QuadratureRule {
    QuadratureRule::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn learner_iterates_stay_feasible(seed in any::<u64>(), kind in 0usize..3, algo in 0usize..2) {
        let mut r = rng::stream(seed, 1);
        let n = 4;
        let domain = match kind {
            0 => ConvexDomain::unit_box(n),
            1 => ConvexDomain::ball(rand_vec(&mut r, n, 0.5), 0.7).unwrap(),
            _ => ConvexDomain::simplex(n).unwrap(),
        };
        let reg = if kind == 2 && algo == 1 { Regularizer::entropy(0.3) } else { Regularizer::euclidean(0.3) }.unwrap();
        let mut state = if algo == 0 {
            LearnerState::omod_init(&domain, 0.3).unwrap()
        } else {
            LearnerState::omomd_init(&domain, &reg).unwrap()
        };
        for _ in 0..200 {
            let z = rand_vec(&mut r, n, 3.0);
            state = if algo == 0 { state.omod_step(&z, &domain) } else { state.omomd_step(&z, &reg, &domain) }.unwrap();
            prop_assert!(domain.contains(&state.primal, 1e-9).unwrap());
        }
    }

    #[test]
    fn descent_and_mirror_iterates_agree(seed in any::<u64>(), eta in 0.01..1.0f64) {
        let mut r = rng::stream(seed, 2);
        let n = 3;
        let domain = ConvexDomain::new_box(Vector::from_element(n, -1e6), Vector::from_element(n, 1e6)).unwrap();
        let reg = Regularizer::euclidean(eta).unwrap();
        let mut a = LearnerState::omod_init(&domain, eta).unwrap();
        let mut b = LearnerState::omomd_init(&domain, &reg).unwrap();
        for _ in 0..1000 {
            let z = rand_vec(&mut r, n, 1.0);
            a = a.omod_step(&z, &domain).unwrap();
            b = b.omomd_step(&z, &reg, &domain).unwrap();
            prop_assert!((&a.primal - &b.primal).amax() <= 1e-12 * (1.0 + a.primal.amax()));
        }
    }

    #[test]
    fn link_maximises_the_dual_objective(seed in any::<u64>(), entropy in any::<bool>()) {
        let mut r = rng::stream(seed, 3);
        let n = 4;
        let (domain, reg) = if entropy {
            (ConvexDomain::simplex(n).unwrap(), Regularizer::entropy(0.5).unwrap())
        } else {
            (ConvexDomain::unit_box(n), Regularizer::euclidean(0.5).unwrap())
        };
        let theta = rand_vec(&mut r, n, 4.0);
        let best = link(&reg, &theta, &domain).unwrap();
        let objective = |x: &Vector| x.dot(&theta) - reg.value(x);
        let top = objective(&best);
        for _ in 0..100 {
            let x = domain.sample(&mut r);
            prop_assert!(top >= objective(&x) - 1e-10);
        }
    }

    #[test]
    fn regret_n_ignores_the_reference(seed in any::<u64>()) {
        let mut r = rng::stream(seed, 4);
        let map = rand_psd_affine(&mut r, 3);
        let (x, u) = (rand_vec(&mut r, 3, 1.0), rand_vec(&mut r, 3, 1.0));
        let a = regret_new_instant(&map, &x, &u, &rule()).unwrap();
        let b = regret_new_instant(&map, &x, &u, &rule()).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
        // and regret_s does depend on it, through the loop term only
        let o1 = LossSpec::new(&map, rand_vec(&mut r, 3, 1.0), 0.0);
        let o2 = LossSpec::new(&map, rand_vec(&mut r, 3, 1.0), 5.0);
        let s1 = regret_std_instant(&o1, &x, &u, &rule()).unwrap();
        let s2 = regret_std_instant(&o2, &x, &u, &rule()).unwrap();
        let loop1 = polyline_integral(&map, &[o1.o.clone(), x.clone(), u.clone(), o1.o.clone()], &rule()).unwrap();
        let loop2 = polyline_integral(&map, &[o2.o.clone(), x.clone(), u.clone(), o2.o.clone()], &rule()).unwrap();
        prop_assert!(((s1 - a) - loop1).abs() < 1e-10);
        prop_assert!(((s2 - a) - loop2).abs() < 1e-10);
    }

    #[test]
    fn regret_n_below_linearisation(seed in any::<u64>()) {
        let mut r = rng::stream(seed, 5);
        let map = if seed % 2 == 0 { rand_psd_affine(&mut r, 4) } else { rand_quadratic(&mut r, 4) };
        for _ in 0..20 {
            let (x, u) = (rand_vec(&mut r, 4, 1.0), rand_vec(&mut r, 4, 1.0));
            let rn = regret_new_instant(&map, &x, &u, &rule()).unwrap();
            let lin = map.evaluate(&x).unwrap().dot(&(&x - &u));
            prop_assert!(rn <= lin + 1e-9);
        }
    }

    #[test]
    fn extragradient_residual_never_increases(seed in any::<u64>()) {
        let mut r = rng::stream(seed, 6);
        let n = 3;
        let map = rand_psd_affine(&mut r, n);
        let (a, _) = map.affine_parts().unwrap();
        let gamma = 0.9 / spectral_norm(a);
        let domain = ConvexDomain::unit_box(n);
        let mut x = domain.sample(&mut r);
        let mut last = vi_residual(&map, &domain, &x, gamma).unwrap();
        for _ in 0..300 {
            x = extragradient_step(&map, &domain, &x, gamma).unwrap();
            let res = vi_residual(&map, &domain, &x, gamma).unwrap();
            prop_assert!(res <= last * (1.0 + 1e-9) + 1e-14, "{res} > {last}");
            last = res;
        }
    }

    #[test]
    fn adversary_is_deterministic(seed in any::<u64>()) {
        let mut r = rng::stream(seed, 7);
        let domain = ConvexDomain::unit_box(2);
        let maps: Vec<_> = (0..4).map(|_| rand_psd_affine(&mut r, 2)).collect();
        let pool = VIPool::solve(maps, domain, seed, &SolverConfig::default()).unwrap();
        let p = rand_vec(&mut r, 2, 1.0);
        let (i, _) = ome_adversary(&pool, &p).unwrap();
        let reloaded = VIPool::from_text(&pool.to_text().unwrap()).unwrap();
        let (j, _) = ome_adversary(&reloaded, &p).unwrap();
        prop_assert_eq!(i, j);
        let d = |k: usize| (&pool.entries()[k].x_star - &p).norm();
        prop_assert!((0..4).all(|k| d(k) <= d(i)));
    }

    #[test]
    fn gradient_pool_regrets_coincide(seed in any::<u64>()) {
        let mut r = rng::stream(seed, 8);
        let domain = ConvexDomain::unit_box(3);
        let maps: Vec<_> = (0..3).map(|_| rand_quadratic(&mut r, 3)).collect();
        let pool = VIPool::solve(maps, domain, seed, &SolverConfig::default()).unwrap();
        let learner = LearnerConfig {
            algo: Algorithm::OMoMD,
            regularizer: Regularizer::euclidean(0.05).unwrap(),
            init: None,
        };
        let trace = run_ome(&pool, &learner, 100, &rule(), &SolverConfig::default()).unwrap();
        for rec in trace.records() {
            prop_assert!((rec.regret_n - rec.regret_s).abs() <= trace.eps_q());
        }
    }

    #[test]
    fn networks_are_strongly_monotone_and_reproducible(seed in any::<u64>(), sc in any::<bool>()) {
        let family = if sc { NetworkFamily::SupplyChain } else { NetworkFamily::Mln };
        let spec = NetworkSpec::new(family, seed);
        let map = gen_network(&spec).unwrap();
        let (a, _) = map.affine_parts().unwrap();
        let min_eig = ((a + a.transpose()) * 0.5).symmetric_eigenvalues().min();
        prop_assert!(min_eig >= spec.ranges.delta - 1e-12);
        let again = gen_network(&spec).unwrap();
        prop_assert_eq!(map.to_matrix_text().unwrap(), again.to_matrix_text().unwrap());
    }
}

#[test]
fn reloaded_pool_entries_reverify() {
    let domain = ConvexDomain::unit_box(4);
    let mut r = rng::stream(11, 9);
    let maps: Vec<_> = (0..5).map(|_| rand_psd_affine(&mut r, 4)).collect();
    let solver = SolverConfig { gamma: StepSize::Auto, tol: 1e-9, max_iter: 1_000_000 };
    let pool = VIPool::solve(maps, domain.clone(), 11, &solver).unwrap();
    let reloaded = VIPool::from_text(&pool.to_text().unwrap()).unwrap();
    for e in reloaded.entries() {
        let gamma = solver.resolve_gamma(&e.map, &domain).unwrap();
        assert!(vi_residual(&e.map, &domain, &e.x_star, gamma).unwrap() <= 2.0 * solver.tol);
    }
}

#[test]
fn integral_reverses_sign() {
    let mut r = rng::stream(3, 10);
    let map = rand_psd_affine(&mut r, 5);
    let (a, b) = (rand_vec(&mut r, 5, 1.0), rand_vec(&mut r, 5, 1.0));
    let fwd = line_integral(&map, &a, &b, &rule()).unwrap();
    let back = line_integral(&map, &b, &a, &rule()).unwrap();
    assert!((fwd + back).abs() < 1e-12);
}
