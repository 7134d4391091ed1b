//! Acceptance suite: one test per criterion, each printing a single
//! PASS line on success. Run with `--nocapture` to see the lines as they
//! complete.

use ndarray::Array2;
use ndarray_linalg::SVD;
use std::fs;
use std::process::Command;

use ionsim_core::couplings::{compute_couplings, fit_power_law};
use ionsim_core::experiments::{
    classical_splittings, dtc_phase_scan, reconstruct_couplings, run_dtc,
    run_mbl_quench, run_prethermal, run_spectroscopy, DisorderEnsemble, DtcParams, FlipLabel,
    LabeledSplitting, PrethermInitial, SpectroscopyParams,
};
use ionsim_core::hilbert::evolve;
use ionsim_core::ionchain::{solve_equilibrium, transverse_modes};
use ionsim_core::{
    Axis, CouplingMatrix, HamiltonianSpec, Propagator, RamanConfig, SpinState, Term, TrapConfig,
};

const YB171_MASS: f64 = ionsim_core::constants::YB171_MASS;

fn trap(n: usize) -> TrapConfig {
    TrapConfig {
        n_ions: n,
        axial_freq: 2.0 * std::f64::consts::PI * 0.5e6,
        transverse_freq: 2.0 * std::f64::consts::PI * 5.0e6,
        mass: YB171_MASS,
        charge: 1.0,
    }
}

fn raman(mu: f64) -> RamanConfig {
    let delta_k = 2.0 * 2.0 * std::f64::consts::PI / 355e-9;
    RamanConfig::from_delta_k(2.0 * std::f64::consts::PI * 0.5e6, mu, delta_k, YB171_MASS)
}

fn pass(n: usize, name: &str) {
    println!("ACCEPTANCE {n} ({name}): PASS");
}

#[test]
fn criterion_01_mechanics_oracles() {
    let eq2 = solve_equilibrium(&trap(2)).unwrap();
    let a2 = 0.25f64.cbrt();
    assert!((eq2.positions[0] + a2).abs() < 1e-8 && (eq2.positions[1] - a2).abs() < 1e-8);

    let eq3 = solve_equilibrium(&trap(3)).unwrap();
    let a3 = 1.25f64.cbrt();
    assert!((eq3.positions[0] + a3).abs() < 1e-8);
    assert!(eq3.positions[1].abs() < 1e-8);
    assert!((eq3.positions[2] - a3).abs() < 1e-8);

    let t = trap(5);
    let modes = transverse_modes(&t, &solve_equilibrium(&t).unwrap()).unwrap();
    for a in 0..5 {
        for b in 0..5 {
            let dot: f64 = (0..5)
                .map(|i| modes.eigenvectors[(i, a)] * modes.eigenvectors[(i, b)])
                .sum();
            let expect = if a == b { 1.0 } else { 0.0 };
            assert!((dot - expect).abs() < 1e-10, "orthonormality residual");
        }
    }
    assert!((modes.frequencies[0] - t.transverse_freq).abs() < 1e-10 * t.transverse_freq);
    let uniform = 1.0 / 5f64.sqrt();
    for i in 0..5 {
        assert!((modes.eigenvectors[(i, 0)].abs() - uniform).abs() < 1e-10);
    }
    pass(1, "mechanics oracles");
}

#[test]
fn criterion_02_coupling_consistency() {
    let t = trap(2);
    let modes = transverse_modes(&t, &solve_equilibrium(&t).unwrap()).unwrap();
    let j = compute_couplings(&raman(1.02 * modes.frequencies[0]), &modes).unwrap();
    let j12 = j.get(0, 1);

    // Full spin simulation of the two-ion flop: |dd> -> |uu> population
    // peaks first at t = pi / (2 J12).
    let spec = HamiltonianSpec::new(2, vec![Term::IsingXX { couplings: j.clone() }]).unwrap();
    let init = SpinState::all_down_z(2);
    let target = SpinState::basis_state(2, 0b11);
    let prop = Propagator::exact();
    let t_expect = std::f64::consts::FRAC_PI_2 / j12.abs();
    let mut best = (0.0, 0.0);
    for k in 1..=400 {
        let time = 1.2 * t_expect * k as f64 / 400.0;
        let s = evolve(&init, &spec, time, &prop).unwrap();
        let p = target.fidelity(&s);
        if p > best.1 {
            best = (time, p);
        }
    }
    assert!(best.1 > 0.999, "flop never completes: {best:?}");
    let j_measured = std::f64::consts::FRAC_PI_2 / best.0;
    assert!(
        (j_measured - j12.abs()).abs() < 0.01 * j12.abs(),
        "measured {j_measured}, computed {j12}"
    );
    pass(2, "coupling consistency");
}

#[test]
fn criterion_03_range_tunability() {
    let t = trap(10);
    let modes = transverse_modes(&t, &solve_equilibrium(&t).unwrap()).unwrap();
    let wt = modes.frequencies[0];
    let factors = [1.0002, 1.002, 1.02, 1.1, 1.5, 2.5, 5.0, 10.0];
    let mut alphas = Vec::new();
    for f in factors {
        let j = compute_couplings(&raman(f * wt), &modes).unwrap();
        alphas.push(fit_power_law(&j).unwrap().alpha);
    }
    for w in alphas.windows(2) {
        assert!(w[1] > w[0], "alpha not monotone: {alphas:?}");
    }
    assert!(alphas[0] < 0.1, "near-COM alpha {}", alphas[0]);
    assert!(*alphas.last().unwrap() >= 2.5, "far-detuned alpha {}", alphas.last().unwrap());
    pass(3, "range tunability");
}

#[test]
fn criterion_04_mbl_trend() {
    let steady = |alpha: f64, w: f64| -> f64 {
        let j = CouplingMatrix::power_law(10, 1.0, alpha);
        let ensemble = DisorderEnsemble { width: w, n_realizations: 30, seed: 7 };
        run_mbl_quench(&j, 4.0, &ensemble, 10.0, 40).unwrap().mean.steady_state_hd
    };
    let over_w: Vec<f64> = [0.0, 1.0, 4.0, 8.0].iter().map(|w| steady(1.0, *w)).collect();
    for pair in over_w.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12, "not monotone in W: {over_w:?}");
    }
    assert!((over_w[0] - 0.5).abs() < 0.1, "W=0 steady state {}", over_w[0]);
    assert!(over_w[3] <= over_w[0] - 0.1, "W=8 not localized enough: {over_w:?}");

    let over_alpha: Vec<f64> = [0.75, 1.0, 1.5].iter().map(|a| steady(*a, 8.0)).collect();
    assert!(
        over_alpha[0] > over_alpha[1] && over_alpha[1] > over_alpha[2],
        "not decreasing in alpha: {over_alpha:?}"
    );
    pass(4, "mbl trend");
}

#[test]
fn criterion_05_conservation_sentinel() {
    let j = CouplingMatrix::power_law(8, 0.0, 1.0);
    let ensemble = DisorderEnsemble { width: 5.0, n_realizations: 3, seed: 3 };
    let out = run_mbl_quench(&j, 0.0, &ensemble, 10.0, 30).unwrap();
    for r in &out.per_realization {
        for d in &r.hamming {
            assert!(d.abs() < 1e-10, "hamming {d} without dynamics");
        }
    }
    pass(5, "conservation sentinel");
}

#[test]
fn criterion_06_prethermalization() {
    // The idealized translation-invariant power law does not hold the edge
    // memory over the full window; the phonon-mediated matrix (with its
    // edge structure) does, so synthesize couplings from the trap at the
    // fitted range exponent and normalize to J0 = 1.
    let t = trap(7);
    let modes = transverse_modes(&t, &solve_equilibrium(&t).unwrap()).unwrap();
    let wt = modes.frequencies[0];
    let mediated = |alpha: f64| -> CouplingMatrix {
        let (raman, fit) = ionsim_core::couplings::detuning_for_range(
            &t,
            &raman(1.02 * wt),
            alpha,
            (1.0005 * wt, 10.0 * wt),
        )
        .unwrap();
        assert!((fit.alpha - alpha).abs() < 2e-3);
        let j = compute_couplings(&raman, &modes).unwrap();
        let scale = j.nearest_neighbor_scale();
        j.scaled(1.0 / scale)
    };
    let j_long = mediated(0.55);
    let j_short = mediated(1.33);
    let run = |j: &CouplingMatrix, initial: &PrethermInitial| {
        run_prethermal(j, 20.0, initial, 25.0, 100).unwrap()
    };
    let mut final_long = 0.0;
    for initial in [
        PrethermInitial::Left,
        PrethermInitial::Right,
        PrethermInitial::TwoExcitation,
    ] {
        let r = run(&j_long, &initial);
        let c0 = r.c_of_t[0];
        for (time, c) in r.times.iter().zip(&r.c_avg) {
            assert!(
                c.signum() == c0.signum(),
                "memory lost at J0 t = {time} for {initial:?} (C0 = {c0}, Cavg = {c})"
            );
        }
        if initial == PrethermInitial::Left {
            final_long = r.c_avg.last().unwrap().abs();
        }
    }
    let short_range = run(&j_short, &PrethermInitial::Left);
    assert!(
        short_range.c_avg.last().unwrap().abs() < final_long,
        "alpha = 1.33 should retain less memory than alpha = 0.55"
    );
    pass(6, "prethermalization");
}

fn pi_pulse(epsilon: f64) -> DtcParams {
    DtcParams { g: std::f64::consts::FRAC_PI_2, epsilon, t1: 1.0, t2: 1.0, t3: 1.0, n_periods: 100 }
}

#[test]
fn criterion_07_dtc_locking() {
    // (a) unperturbed, non-interacting, clean: all weight in the nu_tc bin.
    let j_zero = CouplingMatrix::power_law(10, 0.0, 1.5);
    let out = run_dtc(&pi_pulse(0.0), &j_zero, &DisorderEnsemble::none()).unwrap();
    let r = &out.per_realization[0];
    for bin in 0..100 {
        for site in 0..10 {
            let expect = if bin == 50 { 100.0 } else { 0.0 };
            assert!((r.spectra[bin][site] - expect).abs() < 1e-9);
        }
    }

    // (b) below the boundary (epsilon < 2 J0 t2) the sub-harmonic survives
    // disorder averaging; above it the peak moves off the nu_tc bin.
    let ensemble = DisorderEnsemble { width: std::f64::consts::PI, n_realizations: 10, seed: 21 };
    let locked = run_dtc(&pi_pulse(0.03), &CouplingMatrix::power_law(10, 0.036, 1.5), &ensemble)
        .unwrap();
    let argmax = |spectrum: &[f64]| {
        (1..spectrum.len())
            .max_by(|a, b| spectrum[*a].total_cmp(&spectrum[*b]))
            .unwrap()
    };
    assert_eq!(argmax(&locked.mean_spectrum), 50, "locked phase lost the sub-harmonic");

    let melted = run_dtc(&pi_pulse(0.12), &CouplingMatrix::power_law(10, 0.012, 1.5), &ensemble)
        .unwrap();
    assert_ne!(argmax(&melted.mean_spectrum), 50, "overdriven phase kept the sub-harmonic");
    pass(7, "dtc locking");
}

#[test]
fn criterion_08_dtc_boundary_slope() {
    let epsilons: Vec<f64> = (1..=12).map(|k| k as f64 * 0.01).collect();
    let j0t2 = [0.012, 0.024, 0.036];
    let shape = CouplingMatrix::power_law(10, 1.0, 1.5);
    let scan = dtc_phase_scan(&pi_pulse(0.0), &shape, &epsilons, &j0t2, 10, 17).unwrap();
    assert!(
        (scan.slope - 2.0).abs() <= 0.7,
        "boundary slope {} outside 2 +- 0.7 (eps* = {:?})",
        scan.slope,
        scan.columns.iter().map(|c| c.eps_star).collect::<Vec<_>>()
    );
    pass(8, "dtc boundary slope");
}

#[test]
fn criterion_09_spectroscopy_round_trip() {
    // Uneven 4-site couplings keep every splitting distinct and nonzero.
    let mut values = Array2::zeros((4, 4));
    for (i, k, v) in [
        (0usize, 1usize, 1.0),
        (0, 2, 0.35),
        (0, 3, 0.15),
        (1, 2, 0.8),
        (1, 3, 0.3),
        (2, 3, 0.6),
    ] {
        values[[i, k]] = v;
        values[[k, i]] = v;
    }
    let j = CouplingMatrix::new(values).unwrap();

    let grid_step = 0.005;
    let params = SpectroscopyParams {
        b0: 0.0,
        bp: 0.1,
        probe_freqs: (0..141).map(|k| 0.15 + grid_step * k as f64).collect(),
        duration: std::f64::consts::PI / 0.1,
        measure_conditional: false,
    };
    let scan = run_spectroscopy(&j, &params).unwrap();
    assert!(scan.unresolved.is_empty(), "unresolved: {:?}", scan.unresolved);
    for s in &scan.extracted_splittings {
        let FlipLabel::Single(i) = s.label else { panic!("bare scan only") };
        let row_sum: f64 = (0..4).filter(|k| *k != i).map(|k| j.get(i, k)).sum();
        let expect = 2.0 * row_sum;
        assert!(
            (s.delta_e.abs() - expect).abs() <= 2.0 * std::f64::consts::TAU * grid_step,
            "site {i}: extracted {} vs 2 sum J = {expect}",
            s.delta_e.abs()
        );
    }

    // Exact synthetic splittings invert to machine precision.
    let exact = classical_splittings(&j, true);
    let rec = reconstruct_couplings(4, &exact).unwrap();
    for i in 0..4 {
        for k in 0..4 {
            assert!((rec.get(i, k) - j.get(i, k)).abs() < 1e-12);
        }
    }

    // 1%-perturbed splittings stay within the least-squares perturbation
    // bound ||dJ||_2 <= ||db||_2 / sigma_min(A).
    let mut perturbed = exact.clone();
    let mut db_sq = 0.0;
    for (row, s) in perturbed.iter_mut().enumerate() {
        let rel = if row % 2 == 0 { 0.01 } else { -0.01 };
        let delta = rel * s.delta_e;
        s.delta_e += delta;
        db_sq += delta * delta;
    }
    let rec_p = reconstruct_couplings(4, &perturbed).unwrap();
    let design = design_matrix(4, &exact);
    let (_, sigma, _) = design.svd(false, false).unwrap();
    let sigma_min = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut dj_sq = 0.0;
    for i in 0..4 {
        for k in (i + 1)..4 {
            dj_sq += (rec_p.get(i, k) - j.get(i, k)).powi(2);
        }
    }
    assert!(
        dj_sq.sqrt() <= db_sq.sqrt() / sigma_min,
        "perturbed recovery {:e} exceeds bound {:e}",
        dj_sq.sqrt(),
        db_sq.sqrt() / sigma_min
    );
    pass(9, "spectroscopy round trip");
}

fn design_matrix(n: usize, splittings: &[LabeledSplitting]) -> Array2<f64> {
    let pair_index = |i: usize, k: usize| {
        let (a, b) = if i < k { (i, k) } else { (k, i) };
        a * n - a * (a + 1) / 2 + (b - a - 1)
    };
    let mut a = Array2::zeros((splittings.len(), n * (n - 1) / 2));
    for (row, s) in splittings.iter().enumerate() {
        match s.label {
            FlipLabel::Single(i) => {
                for k in 0..n {
                    if k != i {
                        a[[row, pair_index(i, k)]] = -2.0;
                    }
                }
            }
            FlipLabel::Conditional { flip, given } => {
                for k in 0..n {
                    if k != flip {
                        a[[row, pair_index(flip, k)]] = -2.0;
                    }
                }
                a[[row, pair_index(flip, given)]] += 4.0;
            }
        }
    }
    a
}

#[test]
fn criterion_10_numerical_hygiene() {
    // Norm drift over J0 t = 25.
    let j = CouplingMatrix::power_law(6, 1.0, 1.0);
    let spec = HamiltonianSpec::new(
        6,
        vec![
            Term::IsingXX { couplings: j.clone() },
            Term::UniformField { axis: Axis::Z, coefficient: 2.0 },
        ],
    )
    .unwrap();
    let init = SpinState::neel_z(6);
    let evolved = evolve(&init, &spec, 25.0, &Propagator::krylov()).unwrap();
    assert!((evolved.norm() - 1.0).abs() < 1e-9);

    // Dense eigendecomposition vs matrix-free Krylov.
    let dense = evolve(&init, &spec, 25.0, &Propagator::exact()).unwrap();
    let diff: f64 = dense
        .amplitudes()
        .iter()
        .zip(evolved.amplitudes())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(diff < 1e-10, "dense vs matrix-free diff {diff:e}");

    // Integrator order by step-halving on a modulated drive.
    let driven = HamiltonianSpec::new(
        3,
        vec![
            Term::IsingXX { couplings: CouplingMatrix::power_law(3, 0.8, 1.0) },
            Term::ModulatedField { axis: Axis::Z, b0: 0.4, bp: 0.9, freq: 0.35 },
        ],
    )
    .unwrap();
    let start = SpinState::all_down_x(3);
    let reference = ionsim_core::hilbert::evolve_n_steps(&start, &driven, 6.0, 1 << 14).unwrap();
    let err_at = |steps: usize| -> f64 {
        let s = ionsim_core::hilbert::evolve_n_steps(&start, &driven, 6.0, steps).unwrap();
        s.amplitudes()
            .iter()
            .zip(reference.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let e1 = err_at(64);
    let e2 = err_at(128);
    let order = (e1 / e2).log2();
    assert!(order >= 1.9, "integrator order {order}");

    // Byte-identical outputs across thread counts, through the binary.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mbl.toml");
    fs::write(
        &cfg,
        "experiment = \"mbl\"\nn = 6\nw_over_j0 = 4.0\nn_realizations = 3\nn_times = 15\nseed = 2\n",
    )
    .unwrap();
    let run_with = |threads: &str, out: &str| {
        let out_dir = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_ionsim"))
            .args(["mbl", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
        out_dir
    };
    let a = run_with("1", "a");
    let b = run_with("3", "b");
    for name in ["mean.csv", "realization_000.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs across thread counts"
        );
    }
    pass(10, "numerical hygiene");
}
