use fiberqed::ensemble::{bootstrap_spearman, run_sweep, summarize, SweepParameter, SweepSpec};
use fiberqed::fiber::{AtomSpec, Units};
use fiberqed::forces::{ForceModel, ForceOptions};
use fiberqed::langevin::{IntegratorConfig, NoiseMode};
use fiberqed::modes::ig_odd_5_5;
use fiberqed::response::{Drive, DriveSpec, ProfileNormalization, WaveKind};
use fiberqed::spectral::SpectralModel;

fn model() -> (ForceModel, f64) {
    let units = Units::natural();
    let atom = AtomSpec::from_wavelength(0.78, 37.6991, 2.27369, units).unwrap();
    let drive = Drive::new(DriveSpec {
        profile: ig_odd_5_5(10.0),
        normalization: ProfileNormalization::Peak,
        amplitude: 1.0,
        coupling: 2443.94,
        detuning: 7728.32,
        wave: WaveKind::Travelling,
        k: 8.05537,
    })
    .unwrap();
    let m = ForceModel::new(drive, SpectralModel::constant(37.6991, 0.0), &atom, units, ForceOptions::default());
    (m, atom.mass)
}

fn integrator(noise_mode: NoiseMode, t_max: f64) -> IntegratorConfig {
    IntegratorConfig {
        r0: [9.0, 12.0, 0.0],
        v0: [0.812, 0.81, 0.0],
        t_max,
        dt: 0.05,
        noise_mode,
        seed: 0,
        core_exit_radius: 16.0,
        decimation: 1,
        planar: true,
        stop_on_exit: true,
    }
}

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

#[test]
fn zero_noise_repetitions_have_no_spread() {
    let (m, mass) = model();
    let sweep = SweepSpec {
        parameter: SweepParameter::Detuning,
        values: vec![3000.0, 7728.32],
        repetitions: 3,
        base_seed: 5,
    };
    let r = run_sweep(&m, mass, &sweep, &integrator(NoiseMode::Off, 100.0)).unwrap();
    for v in &r.values {
        assert_eq!(v.n, 3);
        assert_eq!(v.std_trap_time, 0.0);
    }
}

#[test]
fn repeated_values_give_identical_statistics() {
    let (m, mass) = model();
    let sweep = SweepSpec {
        parameter: SweepParameter::Detuning,
        values: vec![4000.0, 9000.0, 4000.0],
        repetitions: 6,
        base_seed: 9,
    };
    let r = run_sweep(&m, mass, &sweep, &integrator(NoiseMode::PaperCompat, 150.0)).unwrap();
    assert_eq!(r.values[0].runs, r.values[2].runs);
    assert_eq!(r.values[0].mean_trap_time, r.values[2].mean_trap_time);
    assert_eq!(r.total_runs(), 18);
}

#[test]
fn parallel_and_sequential_runs_agree() {
    let (m, mass) = model();
    let sweep = SweepSpec {
        parameter: SweepParameter::Detuning,
        values: vec![2000.0, 8000.0],
        repetitions: 8,
        base_seed: 3,
    };
    let cfg = integrator(NoiseMode::PaperCompat, 150.0);
    let a = pool(1).install(|| run_sweep(&m, mass, &sweep, &cfg)).unwrap();
    let b = pool(4).install(|| run_sweep(&m, mass, &sweep, &cfg)).unwrap();
    assert_eq!(a, b);
    let sa = summarize(&a, Some(bootstrap_spearman(&a, 200, 0.9, 1).unwrap()));
    let sb = summarize(&b, Some(bootstrap_spearman(&b, 200, 0.9, 1).unwrap()));
    assert_eq!(sa, sb);
}

#[test]
fn invalid_sweeps_are_rejected() {
    let (m, mass) = model();
    let cfg = integrator(NoiseMode::Off, 1.0);
    let empty = SweepSpec {
        parameter: SweepParameter::Amplitude,
        values: vec![],
        repetitions: 1,
        base_seed: 0,
    };
    assert!(run_sweep(&m, mass, &empty, &cfg).is_err());
    let none = SweepSpec {
        values: vec![1.0],
        repetitions: 0,
        ..empty
    };
    assert!(run_sweep(&m, mass, &none, &cfg).is_err());
}

#[test]
fn amplitude_sweep_rescales_the_drive() {
    let (m, mass) = model();
    let sweep = SweepSpec {
        parameter: SweepParameter::Amplitude,
        values: vec![0.0],
        repetitions: 2,
        base_seed: 0,
    };
    // With no drive the atom coasts straight out of the core.
    let r = run_sweep(&m, mass, &sweep, &integrator(NoiseMode::PaperCompat, 100.0)).unwrap();
    assert_eq!(r.values[0].censored_n, 0);
    assert_eq!(r.values[0].std_trap_time, 0.0);
}
