use neckwall::{
    build_domain, energy, energy_gradient, rasterize, BulkSpec, DoubleWell, DumbbellGrid,
    NeckParams, NoPotential, Potential, Resolution, ScalarField,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dumbbell() -> DumbbellGrid {
    let neck = NeckParams::new(0.05, 0.03, 0.01).unwrap();
    let domain = build_domain(neck, BulkSpec::new(0.6).unwrap()).unwrap();
    let res = Resolution {
        cells_per_half: [3, 3, 2],
        growth: 1.5,
        max_spacing_frac: 0.25,
        ..Resolution::default()
    };
    rasterize(&domain, &res).unwrap()
}

fn random_field(grid: &DumbbellGrid, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..grid.active_count()).map(|_| rng.gen_range(-0.5..1.5)).collect();
    ScalarField::new(grid, v).unwrap()
}

#[test]
fn breakdown_identities_on_a_dumbbell() {
    let g = dumbbell();
    let w = DoubleWell::new(-0.3, 1.2, 2.0).unwrap();
    for seed in 0..5 {
        let e = energy(&g, &random_field(&g, seed), &w).unwrap();
        let scale = e.total.abs();
        assert!(e.total >= 0.0);
        assert!((e.neck + e.left_bulk + e.right_bulk - e.total).abs() <= 1e-12 * scale);
        assert!((e.dirichlet_part + e.potential_part - e.total).abs() <= 1e-12 * scale);
    }
}

#[test]
fn reduction_is_independent_of_thread_count() {
    let g = dumbbell();
    let u = random_field(&g, 7);
    let w = DoubleWell::standard();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let e = energy(&g, &u, &w).unwrap();
                let grad = energy_gradient(&g, &u, &w).unwrap();
                (e, grad.into_vec())
            })
    };
    let (e1, g1) = run(1);
    for t in [2, 3, 8] {
        let (e, gr) = run(t);
        assert_eq!(e, e1);
        assert_eq!(gr, g1);
    }
}

#[test]
fn mirrored_field_has_mirrored_breakdown() {
    let g = dumbbell();
    let u = random_field(&g, 3);
    let flipped: Vec<f64> = (0..g.active_count())
        .map(|c| u.values()[g.mirror_x(c).unwrap()])
        .collect();
    let w = DoubleWell::standard();
    let a = energy(&g, &u, &w).unwrap();
    let b = energy(&g, &ScalarField::new(&g, flipped).unwrap(), &w).unwrap();
    assert!((a.total - b.total).abs() <= 1e-12 * a.total);
    assert!((a.left_bulk - b.right_bulk).abs() <= 1e-12 * a.total);
    assert!((a.neck - b.neck).abs() <= 1e-12 * a.total);
}

#[test]
fn affine_along_each_axis_is_exact_on_a_full_box() {
    let n = [5, 4, 3];
    let h = [0.1, 0.2, 0.05];
    let g = DumbbellGrid::full_box(n, h).unwrap();
    for axis in 0..3 {
        let slope = 1.7;
        let u = ScalarField::from_fn(&g, |p| 0.3 + slope * p[axis]);
        let e = energy(&g, &u, &NoPotential).unwrap();
        // gradient is captured between the outermost centres
        let mut extent = [n[0] as f64 * h[0], n[1] as f64 * h[1], n[2] as f64 * h[2]];
        extent[axis] -= h[axis];
        let want = 0.5 * slope * slope * extent.iter().product::<f64>();
        assert!((e.dirichlet_part - want).abs() <= 1e-12 * want, "axis {axis}");
    }
}

#[test]
fn wrong_length_fields_are_rejected() {
    let g = dumbbell();
    let other = DumbbellGrid::full_box([2, 2, 2], [1.0; 3]).unwrap();
    let u = ScalarField::constant(&other, 0.0);
    assert_eq!(energy(&g, &u, &NoPotential).unwrap_err().kind(), "SizeMismatch");
    assert_eq!(energy_gradient(&g, &u, &NoPotential).unwrap_err().kind(), "SizeMismatch");
    assert!(ScalarField::new(&g, vec![f64::NAN; g.active_count()]).is_err());
}

#[test]
fn gradient_matches_directional_differences_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = [rng.gen_range(1..5), rng.gen_range(1..5), rng.gen_range(1..5)];
        let h = [rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0)];
        let g = DumbbellGrid::full_box(n, h).unwrap();
        let w = DoubleWell::new(rng.gen_range(-1.0..0.0), rng.gen_range(0.5..2.0), 1.0).unwrap();
        let u = random_field(&g, rng.gen());
        let v: Vec<f64> = (0..g.active_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shift = |s: f64| {
            let vals = u.values().iter().zip(&v).map(|(a, b)| a + s * b).collect();
            energy(&g, &ScalarField::new(&g, vals).unwrap(), &w).unwrap().total
        };
        let step = 1e-5;
        let fd = (shift(step) - shift(-step)) / (2.0 * step);
        let grad = energy_gradient(&g, &u, &w).unwrap();
        let exact: f64 = grad.values().iter().zip(&v).map(|(a, b)| a * b).sum();
        worst = worst.max((fd - exact).abs() / exact.abs().max(1e-12));
    }
    assert!(worst <= 1e-5, "{worst}");
}

proptest! {
    #[test]
    fn double_well_is_nonnegative_with_consistent_slope(
        alpha in -2.0f64..0.0,
        gap in 0.1f64..3.0,
        scale in 0.1f64..5.0,
        s in 0.0f64..1.0,
    ) {
        let w = DoubleWell::new(alpha, alpha + gap, scale).unwrap();
        let t = (alpha - 1.0) + s * (gap + 2.0);
        prop_assert!(w.value(t) >= 0.0);
        prop_assert_eq!(w.value(alpha), 0.0);
        prop_assert_eq!(w.value(alpha + gap), 0.0);
        let h = 1e-5;
        let fd = (w.value(t + h) - w.value(t - h)) / (2.0 * h);
        let d = w.derivative(t);
        prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0));
    }

    #[test]
    fn adding_a_constant_leaves_the_dirichlet_part(c in -2.0f64..2.0, seed in 0u64..1000) {
        let g = DumbbellGrid::full_box([3, 3, 3], [0.2, 0.3, 0.4]).unwrap();
        let u = random_field(&g, seed);
        let shifted = ScalarField::new(&g, u.values().iter().map(|x| x + c).collect()).unwrap();
        let w = DoubleWell::standard();
        let (a, b) = (energy(&g, &u, &w).unwrap(), energy(&g, &shifted, &w).unwrap());
        prop_assert!((a.dirichlet_part - b.dirichlet_part).abs() <= 1e-12 * a.dirichlet_part.max(1e-300));
    }
}
