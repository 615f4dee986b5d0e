//! Seeded and parallel paths must be bit-for-bit reproducible, independent
//! of the rayon pool size.

use ncphase::experiments::cube_grid;
use ncphase::oracle::kernel_fit;
use ncphase::{
    classical_rate, log_space, FockOracle, FockTruncation, PhaseVector, PhysParams, QuadratureSpec,
    SepGaussFunction, Smoother,
};

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn monte_carlo_repeats_for_equal_seeds() {
    let q = QuadratureSpec {
        mc_samples: 20_000,
        ..QuadratureSpec::default()
    };
    let s: Smoother<f64> = Smoother::new(PhysParams::default(), q).unwrap();
    let f = SepGaussFunction::unit_gaussian();
    let r = PhaseVector::new(0.1, 0.2, -0.3, 0.4);
    let a = in_pool(1, || s.smooth_mc(&f, &r).unwrap());
    let b = in_pool(4, || s.smooth_mc(&f, &r).unwrap());
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    let other = Smoother::new(PhysParams::default(), QuadratureSpec { rng_seed: 1, ..q }).unwrap();
    assert_ne!(a.value, other.smooth_mc(&f, &r).unwrap().value);
}

#[test]
fn kernel_fit_is_independent_of_thread_count() {
    let o = FockOracle::new(FockTruncation::new(12).unwrap(), PhysParams::default()).unwrap();
    let a = in_pool(1, || kernel_fit(&o, 16, 3).unwrap());
    let b = in_pool(3, || kernel_fit(&o, 16, 3).unwrap());
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn classical_rate_is_independent_of_thread_count() {
    let f = SepGaussFunction::unit_gaussian();
    let grid = cube_grid(1.0, 5);
    let mus = log_space(1e-1, 1e-3, 3);
    let a = in_pool(1, || {
        classical_rate(&f, &grid, PhysParams::default(), &mus).unwrap()
    });
    let b = in_pool(5, || {
        classical_rate(&f, &grid, PhysParams::default(), &mus).unwrap()
    });
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}
