use mde_core::measure::{DiscreteMeasure, LiftedMeasure, CANONICAL_TOL};
use proptest::prelude::*;

fn measure_1d(max: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((-5.0f64..5.0, 0.01f64..1.0), 1..=max).prop_map(|atoms| {
        let (p, w): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        DiscreteMeasure::from_1d(&p, &w).unwrap()
    })
}

fn measure_2d(max: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(((-3i32..3, -3i32..3), 0.01f64..1.0), 1..=max).prop_map(|atoms| {
        let coords = atoms.iter().flat_map(|((a, b), _)| [*a as f64 * 0.5, *b as f64 * 0.5]).collect();
        let weights = atoms.iter().map(|(_, w)| *w).collect();
        DiscreteMeasure::new(2, coords, weights).unwrap()
    })
}

fn lifted(max: usize) -> impl Strategy<Value = LiftedMeasure> {
    prop::collection::vec(((-3i32..3, -2i32..2), 0.01f64..1.0), 1..=max).prop_map(|atoms| {
        let pairs: Vec<_> = atoms
            .iter()
            .map(|((x, v), _)| (vec![*x as f64 * 0.25], vec![*v as f64]))
            .collect();
        let weights: Vec<f64> = atoms.iter().map(|(_, w)| *w).collect();
        LiftedMeasure::from_pairs(&pairs, &weights).unwrap()
    })
}

fn is_canonical(mu: &DiscreteMeasure) -> bool {
    let d = mu.dim();
    let atoms: Vec<&[f64]> = (0..mu.len()).map(|i| mu.atom(i)).collect();
    let sorted = atoms.windows(2).all(|w| w[0].partial_cmp(w[1]) == Some(std::cmp::Ordering::Less));
    let separated = (0..atoms.len()).all(|i| {
        (i + 1..atoms.len()).all(|j| (0..d).any(|k| (atoms[i][k] - atoms[j][k]).abs() > CANONICAL_TOL))
    });
    sorted && separated && mu.weights().iter().all(|w| *w > 0.0)
}

proptest! {
    #[test]
    fn constructors_yield_canonical_unit_mass(mu in measure_1d(20), nu in measure_2d(12)) {
        prop_assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!((nu.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(is_canonical(&mu));
        prop_assert!(is_canonical(&nu));
    }

    #[test]
    fn convolution_is_commutative_and_associative(
        a in measure_1d(6), b in measure_1d(6), c in measure_1d(6)
    ) {
        let ab = a.convolve(&b).unwrap();
        prop_assert!(ab.approx_eq(&b.convolve(&a).unwrap(), 1e-9, 1e-12));
        let left = ab.convolve(&c).unwrap();
        let right = a.convolve(&b.convolve(&c).unwrap()).unwrap();
        prop_assert!(left.approx_eq(&right, 1e-9, 1e-12));
        prop_assert!((left.total_mass() - 1.0).abs() < 1e-9);
        let unit = DiscreteMeasure::dirac(&[0.0]);
        prop_assert!(a.convolve(&unit).unwrap().approx_eq(&a, 0.0, 1e-15));
    }

    #[test]
    fn convolution_adds_means(a in measure_2d(8), b in measure_2d(8)) {
        let ab = a.convolve(&b).unwrap();
        let (ma, mb, mab) = (a.mean(), b.mean(), ab.mean());
        for k in 0..2 {
            prop_assert!((ma[k] + mb[k] - mab[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn coalescing_is_idempotent(mu in measure_1d(20), tol in 0.0f64..0.5) {
        let once = mu.coalesce(tol);
        prop_assert!(once.coalesce(tol).approx_eq(&once, 0.0, 1e-15));
        prop_assert!((once.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!(once.len() <= mu.len());
    }

    #[test]
    fn push_forward_composes(mu in measure_1d(15)) {
        let f = |x: &[f64]| vec![(2.0 * x[0]).round() / 2.0];
        let g = |x: &[f64]| vec![x[0] * x[0]];
        let two_step = mu.push_forward(f).unwrap().push_forward(g).unwrap();
        let one_step = mu.push_forward(|x| g(&f(x))).unwrap();
        prop_assert!(two_step.approx_eq(&one_step, 1e-12, 1e-12));
        let same = mu.push_forward(|x| x.to_vec()).unwrap();
        prop_assert!(same.approx_eq(&mu, 0.0, 1e-15));
    }

    #[test]
    fn scale_product_scales_the_mean(mu in measure_2d(10), a in -3.0f64..3.0) {
        let scaled = mu.scale_product(a);
        for (m, s) in mu.mean().iter().zip(scaled.mean()) {
            prop_assert!((a * m - s).abs() < 1e-9);
        }
    }

    #[test]
    fn disintegration_round_trips(v in lifted(16)) {
        let d = v.disintegrate();
        prop_assert_eq!(d.base.clone(), v.base());
        for f in &d.fibers {
            prop_assert!((f.total_mass() - 1.0).abs() < 1e-12);
        }
        let back = d.recombine().unwrap();
        prop_assert!(back.approx_eq(&v, 1e-12, 1e-12));
    }

    #[test]
    fn displacement_preserves_mass_and_mean_motion(v in lifted(16), s in 0.0f64..2.0) {
        let moved = v.displace(s, CANONICAL_TOL);
        prop_assert!((moved.total_mass() - 1.0).abs() < 1e-9);
        let mean_v: f64 = v.iter().map(|(_, vel, w)| vel[0] * w).sum();
        let expected = v.base().mean()[0] + s * mean_v;
        prop_assert!((moved.mean()[0] - expected).abs() < 1e-9);
    }

    #[test]
    fn prune_keeps_unit_mass(mu in measure_1d(20), floor in 0.0f64..0.05) {
        let (pruned, removed) = mu.prune(floor);
        prop_assert!((pruned.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!((0.0..1.0).contains(&removed));
    }
}

#[test]
fn product_with_dirac_fiber_is_a_graph() {
    let mu = DiscreteMeasure::from_1d(&[-1.0, 0.0, 2.0], &[0.25, 0.25, 0.5]).unwrap();
    let p = LiftedMeasure::product(&mu, &DiscreteMeasure::dirac(&[3.0])).unwrap();
    let g = LiftedMeasure::graph(&mu, &vec![vec![3.0]; 3]).unwrap();
    assert_eq!(p, g);
}
