use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use specband::calculus::apply_spectral;
use specband::dyadic::default_system;
use specband::grid::{lp_norm, make_grid, mixed_norm, Grid, GridFunction, MixedMode, Stack};
use specband::maximal::{hl_maximal, peetre_supremum, MaximalConfig};
use specband::operator::{assemble_with_stencil, eigendecompose, make_potential, EigenDecomposition, PotentialSpec, StencilOrder};

fn grid() -> Arc<Grid> {
    static G: OnceLock<Arc<Grid>> = OnceLock::new();
    G.get_or_init(|| make_grid(1, 6.0, 48).unwrap()).clone()
}

fn hermite() -> &'static EigenDecomposition {
    static ED: OnceLock<EigenDecomposition> = OnceLock::new();
    ED.get_or_init(|| {
        let g = grid();
        let v = make_potential(PotentialSpec::Hermite, &g).unwrap();
        eigendecompose(&assemble_with_stencil(g, v, StencilOrder::Eighth).unwrap()).unwrap()
    })
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 48)
}

fn func(v: Vec<f64>) -> GridFunction {
    GridFunction::new(grid(), v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hl_dominates_and_is_sublinear(a in values(), b in values()) {
        let cfg = MaximalConfig::dyadic(&grid());
        let (f, g) = (func(a), func(b));
        let mf = hl_maximal(&f, &cfg);
        for (m, v) in mf.values().iter().zip(f.values()) {
            prop_assert!(*m >= v.abs() * (1.0 - 1e-12));
        }
        let sum = hl_maximal(&f.add(&g).unwrap(), &cfg);
        let mg = hl_maximal(&g, &cfg);
        for k in 0..sum.values().len() {
            prop_assert!(sum.values()[k] <= mf.values()[k] + mg.values()[k] + 1e-9);
        }
    }

    #[test]
    fn peetre_dominates_and_decreases_in_s(a in values(), scale in 0.25f64..4.0, s in 0.5f64..6.0) {
        let f = func(a);
        let lo = peetre_supremum(&f, scale, s).unwrap();
        let hi = peetre_supremum(&f, scale, s + 1.0).unwrap();
        for k in 0..f.values().len() {
            prop_assert!(lo.values()[k] >= f.values()[k].abs());
            prop_assert!(hi.values()[k] <= lo.values()[k] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn triangle_inequality(a in values(), b in values(), p in 1.0f64..6.0) {
        let (f, g) = (func(a), func(b));
        let lhs = lp_norm(&f.add(&g).unwrap(), p).unwrap();
        prop_assert!(lhs <= lp_norm(&f, p).unwrap() + lp_norm(&g, p).unwrap() + 1e-9);
    }

    #[test]
    fn mixed_norms_decrease_in_q(rows in prop::collection::vec(values(), 1..5), p in 1.0f64..5.0, q in 1.0f64..5.0, alpha in -1.0f64..1.0) {
        let n = rows.len() as i32;
        let stack = Stack::new((0..n).collect(), rows.into_iter().map(func).collect()).unwrap();
        for mode in [MixedMode::LpOfLq, MixedMode::LqOfLp] {
            let a = mixed_norm(&stack, alpha, p, q, mode).unwrap();
            let b = mixed_norm(&stack, alpha, p, q + 1.0, mode).unwrap();
            prop_assert!(b <= a * (1.0 + 1e-12));
        }
    }

    #[test]
    fn spectral_calculus_is_linear_and_multiplicative(a in values(), b in values(), c in -3.0f64..3.0) {
        let ed = hermite();
        let (f, g) = (func(a), func(b));
        let phi = |l: f64| (-0.1 * l).exp();
        let theta = |l: f64| 1.0 / (1.0 + l);
        let lhs = apply_spectral(ed, phi, &f.scale(c).add(&g).unwrap()).unwrap();
        let rhs = apply_spectral(ed, phi, &f).unwrap().scale(c).add(&apply_spectral(ed, phi, &g).unwrap()).unwrap();
        let scale = 1.0 + lhs.abs_max();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
        let composed = apply_spectral(ed, |l| phi(l) * theta(l), &f).unwrap();
        let nested = apply_spectral(ed, phi, &apply_spectral(ed, theta, &f).unwrap()).unwrap();
        let scale = 1.0 + composed.abs_max();
        for (x, y) in composed.values().iter().zip(nested.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn dyadic_partition_of_unity(lambda in 0.5f64..128.0) {
        let system = default_system(0, 8).unwrap();
        prop_assert!((system.sum(lambda) - 1.0).abs() < 1e-12);
        for j in system.indices() {
            let v = system.eval(j, lambda);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
