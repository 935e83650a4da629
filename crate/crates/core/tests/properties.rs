use chaoskit::chaos::{ChaosProcess, ChaosVector};
use chaoskit::cli::ExperimentConfig;
use chaoskit::field::{cosine, FieldModel, KernelSpec, TimeGrid};
use chaoskit::multiindex::{MultiIndex, TruncationSpec};
use chaoskit::skorokhod::{associated_process, skorokhod_integral, stratonovich_integral};
use chaoskit::sode::{closed_form, solve_propagator, PropagatorOptions, SodeProblem};
use chaoskit::spde::{check_parabolicity, solve_heat_closed, HeatInput, HeatProblem, SpatialGrid};
use proptest::prelude::*;

fn model(kernel: KernelSpec, t_end: f64, n: usize, k: usize) -> FieldModel {
    FieldModel::build(kernel, TimeGrid::new(t_end, n).unwrap(), k).unwrap()
}

fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        Just(KernelSpec::Wiener),
        (0.55f64..0.95).prop_map(|hurst| KernelSpec::Fbm { hurst }),
        (0.2f64..3.0).prop_map(|b| KernelSpec::OuStable { b }),
        (0.2f64..1.5).prop_map(|b| KernelSpec::OuUnstable { b }),
    ]
}

/// Random process with first- and second-order coefficients.
fn process(trunc: TruncationSpec, n1: usize, seeds: &[f64]) -> ChaosProcess {
    let mut p = ChaosProcess::new(trunc, n1);
    let row = |c: f64| -> Vec<f64> { (0..n1).map(|j| c * (1.0 + (j as f64 * c).sin())).collect() };
    p.push(MultiIndex::zero(), &row(seeds[0])).unwrap();
    p.push(MultiIndex::unit(1), &row(seeds[1])).unwrap();
    p.push(MultiIndex::unit(3), &row(seeds[2])).unwrap();
    p.push(MultiIndex::from_pairs([(1, 1), (2, 1)]), &row(seeds[3])).unwrap();
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn skorokhod_is_linear(
        kernel in kernel_strategy(),
        s1 in prop::collection::vec(-2.0f64..2.0, 4),
        s2 in prop::collection::vec(-2.0f64..2.0, 4),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let m = model(kernel, 1.0, 32, 4);
        let t = TruncationSpec::new(2, 4).unwrap();
        let (eta, zeta) = (process(t, 33, &s1), process(t, 33, &s2));
        let combo = eta.scale(a).axpy(b, &zeta).unwrap();
        let lhs = skorokhod_integral(&combo, &m, 1.0).unwrap();
        let rhs = skorokhod_integral(&eta, &m, 1.0).unwrap().scale(a)
            .axpy(b, &skorokhod_integral(&zeta, &m, 1.0).unwrap());
        for (alpha, _) in lhs.iter().chain(rhs.iter()) {
            prop_assert!((lhs.get(alpha) - rhs.get(alpha)).abs() <= 1e-12 * (1.0 + rhs.get(alpha).abs()));
        }
    }

    #[test]
    fn stratonovich_minus_skorokhod_is_the_trace(kernel in kernel_strategy(), s in prop::collection::vec(-2.0f64..2.0, 4)) {
        let m = model(kernel, 1.0, 32, 4);
        let eta = process(TruncationSpec::new(2, 4).unwrap(), 33, &s);
        let r = stratonovich_integral(&eta, &m).unwrap();
        for (alpha, c) in r.value.iter() {
            let sk = r.skorokhod.get(alpha);
            prop_assert!((c - sk - r.trace.get(alpha)).abs() <= 4.0 * f64::EPSILON * (c.abs() + sk.abs()));
        }
    }

    #[test]
    fn sode_mean_is_the_deterministic_solution(
        kernel in kernel_strategy(),
        drift in prop::collection::vec(-1.0f64..1.0, 3),
        u0 in -2.0f64..2.0,
    ) {
        let m = model(kernel, 1.0, 32, 3);
        let grid = *m.grid();
        let a: Vec<f64> = grid.nodes().iter().map(|t| drift[0] + drift[1] * t + drift[2] * t * t).collect();
        let p = SodeProblem::new(m, TruncationSpec::new(3, 3).unwrap()).with_drift(a).with_u0(u0);
        let expected: Vec<f64> = p.drift_integral().iter().map(|i| u0 * i.exp()).collect();
        let sol = solve_propagator(&p, PropagatorOptions::default()).unwrap();
        for (x, y) in sol.process.mean().iter().zip(&expected) {
            prop_assert!((x - y).abs() <= 1e-13 * y.abs().max(1.0));
        }
    }

    #[test]
    fn heat_solution_conserves_mass(
        kernel in kernel_strategy(),
        a in 0.2f64..2.0,
        sigma in 0.0f64..0.5,
        x in prop::collection::vec(-3.0f64..3.0, 17),
    ) {
        let space = SpatialGrid::new(20.0, 64).unwrap();
        let u0 = space.gaussian(7.0, 1.3);
        let p = HeatProblem::constant(model(kernel, 1.0, 16, 1), space, a, sigma, u0.clone()).unwrap();
        prop_assume!(check_parabolicity(&p).holds);
        let shift = p.shift_path(&x);
        let u = solve_heat_closed(&p, HeatInput::Shift(&shift), &[4, 16]).unwrap();
        let mass0: f64 = u0.iter().sum();
        for row in u {
            prop_assert!((row.iter().sum::<f64>() - mass0).abs() <= 1e-12 * mass0);
        }
    }

    #[test]
    fn fbm_margin_changes_sign_at_most_once(h in 0.55f64..0.95, a in 0.05f64..2.0, sigma in 0.2f64..2.0) {
        let space = SpatialGrid::new(20.0, 16).unwrap();
        let p = HeatProblem::constant(model(KernelSpec::Fbm { hurst: h }, 4.0, 64, 1), space, a, sigma, vec![0.0; 16]).unwrap();
        let r = check_parabolicity(&p);
        let changes = r.margin.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
        prop_assert!(changes <= 1);
        prop_assert_eq!(r.holds, changes == 0);
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), n in 1usize..4096, h in 0.5f64..0.99, a in -10.0f64..10.0) {
        let mut c = ExperimentConfig { kernel: KernelSpec::Fbm { hurst: h }, seed, ..Default::default() };
        c.grid.n = n;
        c.problem.a = a;
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(back, c);
    }
}

#[test]
fn first_order_coefficient_is_the_basis_projection() {
    // E(∫f⋄dB · ξ_k) = ∫ f m_k for deterministic f, against Simpson's rule
    let m = model(KernelSpec::Wiener, 2.0, 512, 6);
    let f = |t: f64| 1.0 + t - 0.3 * t * t + (3.0 * t).sin();
    let grid = *m.grid();
    let values: Vec<f64> = grid.nodes().iter().map(|&t| f(t)).collect();
    let eta = ChaosProcess::deterministic(TruncationSpec::new(1, 6).unwrap(), &values);
    let r = skorokhod_integral(&eta, &m, 2.0).unwrap();
    for k in 1..=6 {
        let n = 20_000;
        let h = 2.0 / n as f64;
        let simpson: f64 = (0..=n)
            .map(|i| {
                let t = i as f64 * h;
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * f(t) * cosine(k, 2.0, t)
            })
            .sum::<f64>()
            * h
            / 3.0;
        let got = r.get(&MultiIndex::unit(k));
        assert!((got - simpson).abs() < 2e-5, "k={k}: {got} vs {simpson}");
    }
}

/// `Σ_i W(t_i) ⋄ (W(t_{i+1}) − W(t_i))` on a uniform partition.
fn wick_riemann_sum(w: &ChaosProcess, n: usize, pieces: usize) -> ChaosVector {
    let step = n / pieces;
    let mut sum = ChaosVector::new(TruncationSpec::new(2, w.truncation().max_dim).unwrap());
    for i in 0..pieces {
        let left = w.at_node(i * step);
        let inc = w.at_node((i + 1) * step).axpy(-1.0, &left);
        sum = sum.axpy(1.0, &left.wick_product(&inc).result);
    }
    sum
}

#[test]
fn wick_riemann_sums_converge_to_the_integral() {
    let m = model(KernelSpec::Wiener, 1.0, 512, 32);
    let w = associated_process(&m, TruncationSpec::new(2, 32).unwrap());
    let exact = skorokhod_integral(&w, &m, 1.0).unwrap();
    let errors: Vec<f64> = [4usize, 8, 16, 32, 64]
        .iter()
        .map(|&p| {
            let s = wick_riemann_sum(&w, 512, p);
            s.iter().chain(exact.iter()).map(|(a, _)| (s.get(a) - exact.get(a)).abs()).fold(0.0, f64::max)
        })
        .collect();
    for e in errors.windows(2) {
        assert!(e[1] < 0.6 * e[0], "{errors:?}");
    }
}

#[test]
fn kappa_dominates_the_variance_growth() {
    // ‖𝒦*‖² ≥ sup_t R(t,t)/t, with the Galerkin estimate of the norm
    for kernel in [
        KernelSpec::Wiener,
        KernelSpec::Fbm { hurst: 0.6 },
        KernelSpec::Fbm { hurst: 0.9 },
        KernelSpec::OuStable { b: 1.0 },
        KernelSpec::OuUnstable { b: 1.0 },
    ] {
        let m = model(kernel, 1.0, 256, 1);
        let g = m.grid();
        let growth = m.variance().iter().enumerate().skip(1).map(|(j, v)| v / g.node(j)).fold(0.0, f64::max);
        let k2 = m.galerkin_norm().powi(2);
        assert!(k2 >= growth * (1.0 - 5e-3), "{}: {k2} vs {growth}", kernel.name());
        assert!(m.norm_bound().unwrap().bound >= growth * (1.0 - 1e-12), "{}", kernel.name());
    }
}

#[test]
fn propagator_matches_closed_form_on_a_fine_grid() {
    for kernel in [KernelSpec::Wiener, KernelSpec::Fbm { hurst: 0.75 }, KernelSpec::OuStable { b: 1.0 }] {
        let p = SodeProblem::new(model(kernel, 1.0, 512, 32), TruncationSpec::new(4, 32).unwrap());
        let opts = PropagatorOptions { prune_tol: Some(1e-9) };
        let prop = solve_propagator(&p, opts).unwrap().process;
        let exact = closed_form(&p, opts).unwrap();
        assert_eq!(prop.len(), exact.len());
        for (alpha, row) in prop.iter() {
            let e = exact.get(alpha).unwrap();
            let d = row.iter().zip(e).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(d <= 5e-3, "{}: {d}", kernel.name());
        }
    }
}
