//! Release acceptance checks, one test per numbered criterion. Each test
//! prints its measured values beside the tolerance it must meet, so
//! `cargo test --test acceptance -- --nocapture` reads as a checklist and
//! the per-test ok/FAILED line is the verdict. Desk scale throughout:
//! three vortices, 10⁴ steps, at most 100 members.

use nalgebra::DMatrix;
use point_vortex::ensemble::{
    envelope, histogram, max_abs, pathwise_identities, run_ensemble, write_member_diagnostics,
    EnsembleConfig, EnsembleResult,
};
use point_vortex::fields::{
    ito_strat_correction, psi1, psi_wz, wz_commutator, xi1, xi2, StreamParams,
};
use point_vortex::geometry::{
    center_of_vorticity, impulses, kirchhoff_hamiltonian, Vec2, VortexState,
};
use point_vortex::homogenization::{
    estimate_with_bootstrap, lyapunov_oracle, simulate_fast, FastOU,
};
use point_vortex::integrators::{integrate, MethodSpec, Trajectory};
use point_vortex::noise::{
    area_rng, brownian, fbm, levy_area_partial, member_seed, pure_area, zero_path,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const DT: f64 = 1.0 / 250.0;
const STEPS: usize = 10_000;

fn triad_area() -> f64 {
    0.75 * 3f64.sqrt()
}

fn triad_angle() -> f64 {
    std::f64::consts::FRAC_PI_3
}

/// Largest deviation of the recorded area and angle from the triad values.
fn footprint_deviation(traj: &Trajectory) -> (f64, f64) {
    traj.records.iter().fold((0.0f64, 0.0f64), |(da, dg), rec| {
        (
            da.max((rec.area - triad_area()).abs()),
            dg.max((rec.angle - triad_angle()).abs()),
        )
    })
}

fn ensemble_deviation(result: &EnsembleResult) -> (f64, f64) {
    result
        .trajectories()
        .fold((0.0f64, 0.0f64), |(da, dg), (_, traj)| {
            let (a, g) = footprint_deviation(traj);
            (da.max(a), dg.max(g))
        })
}

fn benchmark_run(number: u8, seed: u64) -> EnsembleResult {
    let cfg = EnsembleConfig::benchmark(MethodSpec::by_number(number).unwrap(), seed);
    let result = run_ensemble(&cfg).unwrap();
    let failures = result.failures();
    assert!(failures.is_empty(), "members failed: {failures:?}");
    result
}

fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn lag1_correlation(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let denom: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let num: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    num / denom
}

#[test]
fn criterion_01_deterministic_conservation() {
    let p = StreamParams::benchmark();
    let method = MethodSpec::by_number(1).unwrap();
    let traj = integrate(
        &method,
        &VortexState::equilateral_triad(),
        &p,
        &zero_path(STEPS, 2, DT),
        1,
    )
    .unwrap();
    let (da, dg) = footprint_deviation(&traj);
    println!(
        "criterion 01, deterministic conservation: max |area - 3√3/4| = {da:.3e} (tol 1e-10), \
         max |angle - π/3| = {dg:.3e} (tol 1e-10)"
    );
    assert!(da <= 1e-10, "area deviation {da:.3e} exceeds 1e-10");
    assert!(dg <= 1e-10, "angle deviation {dg:.3e} exceeds 1e-10");
}

#[test]
fn criterion_02_stratonovich_conservation() {
    let result = benchmark_run(2, 42);
    let (da, dg) = ensemble_deviation(&result);
    println!(
        "criterion 02, Stratonovich conservation over 100 members: \
         max |area - 3√3/4| = {da:.3e} (tol 1e-5), max |angle - π/3| = {dg:.3e} (tol 1e-8)"
    );
    assert!(da <= 1e-5, "area deviation {da:.3e} exceeds 1e-5");
    assert!(dg <= 1e-8, "angle deviation {dg:.3e} exceeds 1e-8");
}

#[test]
fn criterion_03_ito_pseudostability() {
    let result = benchmark_run(3, 42);
    let (_, dg) = ensemble_deviation(&result);
    let finals: Vec<f64> = result
        .trajectories()
        .map(|(_, traj)| traj.final_record().area)
        .collect();
    let mean_final = finals.iter().sum::<f64>() / finals.len() as f64;
    let floor = 2.0 * triad_area();
    println!(
        "criterion 03, Itô pseudostability over 100 members: \
         max |angle - π/3| = {dg:.3e} (tol 1e-6), mean area at T = 40 is {mean_final:.3} \
         (needs >= {floor:.3})"
    );
    assert!(dg <= 1e-6, "angle deviation {dg:.3e} exceeds 1e-6");
    assert!(
        mean_final >= floor,
        "mean final area {mean_final:.3} below twice the initial area {floor:.3}"
    );
}

#[test]
fn criterion_04_wong_zakai_destabilization() {
    let result = benchmark_run(4, 42);
    let mut angle_exits = 0usize;
    let mut area_exits = 0usize;
    for (_, traj) in result.trajectories() {
        if traj
            .records
            .iter()
            .any(|r| (r.angle - triad_angle()).abs() > 0.3)
        {
            angle_exits += 1;
        }
        if traj.records.iter().any(|r| r.area < 1.0 || r.area > 1.5) {
            area_exits += 1;
        }
    }
    println!(
        "criterion 04, anomaly-drift destabilization over 100 members: \
         {angle_exits} members leave the ±0.3 angle window, {area_exits} leave area [1.0, 1.5] \
         (each needs >= 1)"
    );
    assert!(angle_exits >= 1, "no member left the angle window");
    assert!(area_exits >= 1, "no member left the area window");
}

/// The pure-area flow: zero path increments with linearly growing area, a
/// deterministic ODE with the anomaly drift alone. Its modified energy
/// H_WZD = H + s¹² Σ_α Γ_α ψ_wz(𝒙_α) is conserved far below tolerance and
/// the footprint oscillates, but at the benchmark parameters the orbit's
/// area and angle bands are wider than the windows asserted here, so this
/// test fails; the assertion message carries the measured bands.
#[test]
fn criterion_05_pure_area_footprint() {
    let p = StreamParams::benchmark();
    let path = pure_area(STEPS, DT, p.s).unwrap();
    let method = MethodSpec::by_number(5).unwrap();
    let traj = integrate(&method, &VortexState::equilateral_triad(), &p, &path, 10).unwrap();

    let areas: Vec<f64> = traj.records.iter().map(|r| r.area).collect();
    let angles: Vec<f64> = traj.records.iter().map(|r| r.angle).collect();
    let band = |v: &[f64]| {
        (
            v.iter().cloned().fold(f64::INFINITY, f64::min),
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let (alo, ahi) = band(&areas);
    let (glo, ghi) = band(&angles);
    let extrema = areas
        .windows(3)
        .filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0)
        .count();

    let modified = |state: &VortexState| -> f64 {
        let x_c = center_of_vorticity(state).unwrap();
        let stream: f64 = state
            .positions
            .iter()
            .zip(&state.strengths)
            .map(|(x, gamma)| gamma * psi_wz(*x, x_c, &p))
            .sum();
        kirchhoff_hamiltonian(state).unwrap() + p.s12() * stream
    };
    let h0 = modified(&traj.states[0]);
    let h_drift = traj
        .states
        .iter()
        .map(|s| (modified(s) - h0).abs())
        .fold(0.0, f64::max);

    println!(
        "criterion 05, pure-area footprint: area band [{alo:.4}, {ahi:.4}] (window [1.20, 1.32]), \
         {extrema} area extrema (needs >= 3), angle band [{glo:.4}, {ghi:.4}] \
         (window [0.78, 1.32]), max |ΔH_WZD| = {h_drift:.3e} (tol 1e-8)"
    );

    let mut violations = Vec::new();
    if alo < 1.20 || ahi > 1.32 {
        violations.push(format!("area band [{alo:.4}, {ahi:.4}] leaves [1.20, 1.32]"));
    }
    if extrema < 3 {
        violations.push(format!("only {extrema} area extrema, need >= 3"));
    }
    if glo < 0.78 || ghi > 1.32 {
        violations.push(format!("angle band [{glo:.4}, {ghi:.4}] leaves [0.78, 1.32]"));
    }
    if h_drift > 1e-8 {
        violations.push(format!("modified energy drifts {h_drift:.3e} > 1e-8"));
    }
    assert!(
        violations.is_empty(),
        "pure-area footprint: {}",
        violations.join("; ")
    );
}

#[test]
fn criterion_06_pathwise_moving_frame_identities() {
    let p = StreamParams::benchmark();
    let path = brownian(member_seed(42, 0), STEPS, 2, DT);
    let method = MethodSpec::by_number(2).unwrap();
    let traj = integrate(&method, &VortexState::equilateral_triad(), &p, &path, 1).unwrap();
    let res = pathwise_identities(&traj, &path, &p).unwrap();
    let (tx, ty, dh) = (max_abs(&res.t_x), max_abs(&res.t_y), max_abs(&res.h));
    println!(
        "criterion 06, moving-frame identities on one path: \
         sup |T_x(t) - T_x(0) - nΓbW²| = {tx:.3e} (tol 1e-8), \
         sup |T_y(t) - T_y(0) + nΓaW²| = {ty:.3e} (tol 1e-8), \
         sup |H(t) - H(0)| = {dh:.3e} (tol 1e-6)"
    );
    assert!(tx <= 1e-8, "T_x identity residual {tx:.3e} exceeds 1e-8");
    assert!(ty <= 1e-8, "T_y identity residual {ty:.3e} exceeds 1e-8");
    assert!(dh <= 1e-6, "energy drift {dh:.3e} exceeds 1e-6");
}

/// Same driving path for both methods; only the per-step Lévy-area
/// correction differs, and it alone breaks the shape invariants: the
/// corrected method's area excursion runs orders of magnitude above the
/// plain method's. The absolute window asserted here is not reached,
/// however: the triangle area is a critical point of the commutator flow at
/// the equilateral configuration (its directional derivative vanishes
/// exactly), so the independent per-step area samples destabilize the shape
/// only at second order. Excursions stay near 10⁻² across seeds and across
/// the whole benchmark ensemble, and this test fails on the window
/// sub-check with the measured values in the message.
#[test]
fn criterion_07_area_correction_structure_loss() {
    let p = StreamParams::benchmark();
    let path = brownian(member_seed(42, 0), STEPS, 2, DT);
    let triad = VortexState::equilateral_triad();
    let corrected = integrate(&MethodSpec::by_number(6).unwrap(), &triad, &p, &path, 10).unwrap();
    let plain = integrate(&MethodSpec::by_number(2).unwrap(), &triad, &p, &path, 10).unwrap();
    let (exc6, _) = footprint_deviation(&corrected);
    let (exc2, _) = footprint_deviation(&plain);
    println!(
        "criterion 07, Lévy-area correction vs plain Stratonovich on one path: \
         area excursion {exc6:.4} (window [0.05, 1.0]) vs {exc2:.3e} (tol 1e-5), \
         ratio {:.1e} (needs >= 1e3)",
        exc6 / exc2
    );
    let mut violations = Vec::new();
    if !(0.05..=1.0).contains(&exc6) {
        violations.push(format!("corrected-method excursion {exc6:.4} outside [0.05, 1.0]"));
    }
    if exc2 > 1e-5 {
        violations.push(format!("plain-method excursion {exc2:.3e} exceeds 1e-5"));
    }
    if exc6 < 1e3 * exc2 {
        violations.push(format!("excursion ratio {:.1e} below 10³", exc6 / exc2));
    }
    assert!(
        violations.is_empty(),
        "structure loss: {}",
        violations.join("; ")
    );
}

#[test]
fn criterion_08_levy_area_sampler_law() {
    // Oracle first: the iterated mid-sum of a two-channel random walk on a
    // 10⁴-point mesh of one Δt step, 10⁴ independent samples.
    let substeps = 10_000usize;
    let oracle_n = 10_000usize;
    let sub_sd = (DT / substeps as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5E8);
    let mut oracle = Vec::with_capacity(oracle_n);
    for _ in 0..oracle_n {
        let (mut w1, mut w2, mut area) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..substeps {
            let d1 = rng.sample::<f64, _>(StandardNormal) * sub_sd;
            let d2 = rng.sample::<f64, _>(StandardNormal) * sub_sd;
            area += 0.5 * (w1 * d2 - w2 * d1);
            w1 += d1;
            w2 += d2;
        }
        oracle.push(area);
    }
    let (_, var_oracle) = mean_variance(&oracle);

    // The sampler at depth K, with the depth-4K extension of the same
    // coefficient stream. The difference of the oscillatory partial sums is
    // exactly the Fourier terms between the depths, the tail whose mean
    // square the Δt²/(2π²K) bound controls.
    let n = 100_000usize;
    let k = 1000usize;
    let sqrt_dt = DT.sqrt();
    let mut samples = Vec::with_capacity(n);
    let mut trunc = 0.0f64;
    for i in 0..n {
        let mut rng = area_rng(8, i);
        let dw = [
            rng.sample::<f64, _>(StandardNormal) * sqrt_dt,
            rng.sample::<f64, _>(StandardNormal) * sqrt_dt,
        ];
        let depths = levy_area_partial(&mut rng, &dw, DT, &[k, 4 * k]);
        samples.push(depths[0].estimate.get(0, 1));
        let df = depths[0].fourier_part.get(0, 1) - depths[1].fourier_part.get(0, 1);
        trunc += df * df;
    }
    let (mean, var) = mean_variance(&samples);
    let se = (var / n as f64).sqrt();
    let trunc = trunc / n as f64;
    let trunc_bound = DT * DT / (2.0 * std::f64::consts::PI.powi(2) * k as f64);
    let var_err = (var - DT * DT / 4.0).abs() / var;
    let oracle_err = (var - var_oracle).abs() / var_oracle;

    println!(
        "criterion 08, Lévy-area sampler law at K = {k}: |mean| = {:.2e} (tol 4·SE = {:.2e}), \
         |Var - Δt²/4| / Var = {var_err:.4} (tol 0.03), oracle mismatch {oracle_err:.4} \
         (tol 0.05), truncation proxy {trunc:.3e} (bound {trunc_bound:.3e})",
        mean.abs(),
        4.0 * se
    );
    assert!(mean.abs() <= 4.0 * se, "sampler mean {mean:.2e} exceeds 4·SE");
    assert!(var_err <= 0.03, "variance off Δt²/4 by {var_err:.4}");
    assert!(oracle_err <= 0.05, "variance off the oracle by {oracle_err:.4}");
    assert!(
        trunc <= trunc_bound,
        "truncation proxy {trunc:.3e} exceeds {trunc_bound:.3e}"
    );
}

#[test]
fn criterion_09_fractional_driver() {
    let p = StreamParams::benchmark();
    // Lag-1 increment correlation at 10⁶ increments, H = 0.4.
    let rough = fbm(42, 1_000_000, 1, DT, 0.4).unwrap();
    let xs: Vec<f64> = rough.increments.iter().map(|row| row[0]).collect();
    let rho = lag1_correlation(&xs);
    let target = 2f64.powf(2.0 * 0.4 - 1.0) - 1.0;
    let rho_err = (rho - target).abs() / target.abs();

    // H = 1/2 must look Brownian: uncorrelated increments of variance Δt.
    let flat = fbm(43, 1_000_000, 1, DT, 0.5).unwrap();
    let ys: Vec<f64> = flat.increments.iter().map(|row| row[0]).collect();
    let rho_flat = lag1_correlation(&ys);
    let (_, var_flat) = mean_variance(&ys);

    // Shape preservation under the fractional method.
    let path = fbm(42, STEPS, 2, DT, 0.4).unwrap();
    let method = MethodSpec::by_number(7).unwrap();
    let traj = integrate(&method, &VortexState::equilateral_triad(), &p, &path, 10).unwrap();
    let (da, _) = footprint_deviation(&traj);

    println!(
        "criterion 09, fractional driver: lag-1 correlation {rho:.5} vs 2^(2H-1) - 1 = \
         {target:.5} ({:.2}% off, tol 3%); H = 1/2 lag-1 {rho_flat:.2e} (tol 4e-3) with \
         Var/Δt = {:.4} (tol 1%); fractional-method area deviation {da:.3e} (tol 1e-5)",
        100.0 * rho_err,
        var_flat / DT
    );
    assert!(rho_err <= 0.03, "lag-1 correlation off by {rho_err:.4}");
    assert!(
        rho_flat.abs() <= 4e-3,
        "H = 1/2 lag-1 correlation {rho_flat:.2e} not Brownian"
    );
    assert!(
        (var_flat / DT - 1.0).abs() <= 0.01,
        "H = 1/2 increment variance off Δt by {:.4}",
        (var_flat / DT - 1.0).abs()
    );
    assert!(da <= 1e-5, "area deviation {da:.3e} exceeds 1e-5");
}

#[test]
fn criterion_10_homogenisation_oracle() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
    let d = DMatrix::<f64>::identity(2, 2);
    let ou = FastOU::new(a, d.clone(), 1.0).unwrap();

    // The Lyapunov route must reproduce the closed form (I + J)/4 exactly.
    let oracle = lyapunov_oracle(&ou).unwrap();
    let closed = DMatrix::from_row_slice(2, 2, &[0.25, 0.25, -0.25, 0.25]);
    let oracle_gap = (&oracle - &closed)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(oracle_gap <= 1e-12, "Lyapunov solve differs from (I + J)/4");

    let path = simulate_fast(&ou, 42, 200_000, 0.05).unwrap();
    let run = estimate_with_bootstrap(&path, ou.default_lag_cutoff(), 50, 200, 42).unwrap();
    let est = &run.estimate;
    let err = &run.errors;
    let quarter_i = DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 0.25]);
    for i in 0..2 {
        for j in 0..2 {
            let e_gap = (est.e[(i, j)] - closed[(i, j)]).abs();
            assert!(
                e_gap <= 3.0 * err.se_e[(i, j)],
                "E[{i}{j}] = {:.4} is {e_gap:.4} from {:.2}, past 3σ = {:.4}",
                est.e[(i, j)],
                closed[(i, j)],
                3.0 * err.se_e[(i, j)]
            );
            let se_m = 0.5 * (err.se_e[(i, j)] + err.se_e[(j, i)]);
            let m_gap = (est.m[(i, j)] - quarter_i[(i, j)]).abs();
            assert!(
                m_gap <= 3.0 * se_m,
                "M[{i}{j}] = {:.4} is {m_gap:.4} from {:.2}, past 3σ = {:.4}",
                est.m[(i, j)],
                quarter_i[(i, j)],
                3.0 * se_m
            );
        }
    }
    let s12 = est.s_prime[(0, 1)];
    let s12_gap = (s12 - 0.25).abs();
    assert!(
        s12_gap <= 3.0 * err.se_s_prime[(0, 1)],
        "s′₁₂ = {s12:.4} is {s12_gap:.4} from 0.25, past 3σ"
    );

    // Symmetric drift: the anomaly must vanish within its own error bars.
    let ou0 = FastOU::new(DMatrix::identity(2, 2), d, 1.0).unwrap();
    let path0 = simulate_fast(&ou0, 43, 200_000, 0.05).unwrap();
    let run0 = estimate_with_bootstrap(&path0, ou0.default_lag_cutoff(), 50, 200, 43).unwrap();
    let null = run0.estimate.s_prime[(0, 1)].abs();
    let null_bar = 3.0 * run0.errors.se_s_prime[(0, 1)];
    assert!(null <= null_bar, "null anomaly {null:.2e} exceeds 3σ = {null_bar:.2e}");

    println!(
        "criterion 10, homogenised coefficients: E and M within 3σ of (I + J)/4 and I/4 \
         entrywise, s′₁₂ = {s12:.4} ± {:.4} brackets 0.25, symmetric-drift anomaly \
         {null:.2e} <= 3σ = {null_bar:.2e}",
        err.se_s_prime[(0, 1)]
    );
}

/// Spot checks of the per-module invariants that the unit suites assert in
/// full: closed forms against finite differences, the ring bracket
/// identities, scheduling-independent output bytes, histogram mass, and the
/// benchmark mean-area envelope.
#[test]
fn criterion_11_property_suites() {
    let p = StreamParams::benchmark();

    // Closed-form advection terms vs central differences (tol 1e-6).
    let h = 1e-5;
    let points = [
        (Vec2::new(0.3, -0.4), Vec2::ZERO),
        (Vec2::new(-1.1, 0.7), Vec2::new(0.2, -0.1)),
        (Vec2::new(0.05, 1.3), Vec2::new(-0.4, 0.3)),
    ];
    let mut fd_worst = 0.0f64;
    for (x, x_c) in points {
        // [ξ₁, ξ₂] = −(ξ₂·∇)ξ₁ because ξ₂ is constant.
        let v2 = xi2(&p);
        let adv2 = (xi1(x + v2 * h, x_c, &p) - xi1(x - v2 * h, x_c, &p)) * (0.5 / h);
        let comm = wz_commutator(x, x_c, &p);
        fd_worst = fd_worst.max((comm.x + adv2.x).abs()).max((comm.y + adv2.y).abs());
        // The Itô correction is ½(ξ₁·∇)ξ₁, the translation part self-advects nothing.
        let v1 = xi1(x, x_c, &p);
        let half_adv1 = (xi1(x + v1 * h, x_c, &p) - xi1(x - v1 * h, x_c, &p)) * (0.25 / h);
        let corr = ito_strat_correction(x, x_c, &p);
        fd_worst = fd_worst
            .max((corr.x - half_adv1.x).abs())
            .max((corr.y - half_adv1.y).abs());
    }
    assert!(fd_worst <= 1e-6, "finite-difference residual {fd_worst:.2e} exceeds 1e-6");

    // Weighted Poisson brackets of the rotation stream vanish on centered
    // rings (tol 1e-8); finite differences of the composite capture the
    // center's dependence on every coordinate.
    let fd_h = 1e-6;
    let mut bracket_worst = 0.0f64;
    for n in [3usize, 4, 5] {
        let state = VortexState::unit_ring(n);
        let strengths = state.strengths.clone();
        let rebuild = |pos: &[Vec2]| VortexState::new(pos.to_vec(), strengths.clone()).unwrap();
        let psi_total = |pos: &[Vec2]| -> f64 {
            let s = rebuild(pos);
            let x_c = center_of_vorticity(&s).unwrap();
            s.positions
                .iter()
                .zip(&s.strengths)
                .map(|(x, gamma)| gamma * psi1(*x, x_c, &p))
                .sum()
        };
        let f_tx = |pos: &[Vec2]| impulses(&rebuild(pos)).0;
        let f_ty = |pos: &[Vec2]| impulses(&rebuild(pos)).1;
        let f_r = |pos: &[Vec2]| impulses(&rebuild(pos)).2;
        let f_h = |pos: &[Vec2]| kirchhoff_hamiltonian(&rebuild(pos)).unwrap();
        let checks: [&dyn Fn(&[Vec2]) -> f64; 4] = [&f_tx, &f_ty, &f_r, &f_h];
        for f in checks {
            bracket_worst = bracket_worst.max(poisson_bracket(&state, f, &psi_total, fd_h).abs());
        }
    }
    assert!(
        bracket_worst <= 1e-8,
        "ring bracket residual {bracket_worst:.2e} exceeds 1e-8"
    );

    // Output bytes cannot depend on the thread count.
    let mut cfg = EnsembleConfig::benchmark(MethodSpec::by_number(2).unwrap(), 7);
    cfg.members = 8;
    cfg.horizon = 8.0;
    let bytes = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let result = run_ensemble(&cfg).unwrap();
            let mut buf = Vec::new();
            write_member_diagnostics(&mut buf, &result).unwrap();
            buf
        })
    };
    assert_eq!(bytes(1), bytes(4), "diagnostics differ between 1 and 4 threads");

    // Histogram mass: the binned density integrates to one.
    let result = run_ensemble(&cfg).unwrap();
    let trajs: Vec<&Trajectory> = result.trajectories().map(|(_, t)| t).collect();
    let grid = histogram(&trajs, 64, 64, None).unwrap();
    let mass_err = (grid.mass() - 1.0).abs();
    assert!(mass_err <= 1e-12, "histogram mass off by {mass_err:.2e}");

    // The benchmark ensemble's mean-area envelope stays within 1e-5.
    let bench = benchmark_run(2, 42);
    let (t, series) = bench.series(|rec| rec.area).unwrap();
    let env = envelope(&t, &series).unwrap();
    let env_dev = env
        .mean
        .iter()
        .map(|m| (m - triad_area()).abs())
        .fold(0.0, f64::max);
    assert!(env_dev <= 1e-5, "mean-area envelope off by {env_dev:.2e}");

    println!(
        "criterion 11, property suites: finite-difference residual {fd_worst:.2e} (tol 1e-6), \
         ring brackets {bracket_worst:.2e} (tol 1e-8), thread-count-independent bytes, \
         histogram mass error {mass_err:.1e}, mean-area envelope {env_dev:.2e} (tol 1e-5)"
    );
}

/// {F, G} = Σ_α (1/Γ_α)(∂F/∂x_α ∂G/∂y_α − ∂F/∂y_α ∂G/∂x_α) by central
/// differences about the given state.
fn poisson_bracket(
    state: &VortexState,
    f: &dyn Fn(&[Vec2]) -> f64,
    g: &dyn Fn(&[Vec2]) -> f64,
    h: f64,
) -> f64 {
    let partial = |func: &dyn Fn(&[Vec2]) -> f64, alpha: usize, dx: f64, dy: f64| {
        let mut plus = state.positions.clone();
        plus[alpha] += Vec2::new(dx, dy);
        let mut minus = state.positions.clone();
        minus[alpha] -= Vec2::new(dx, dy);
        (func(&plus) - func(&minus)) / (2.0 * dx.max(dy))
    };
    let mut bracket = 0.0;
    for alpha in 0..state.n() {
        let fx = partial(f, alpha, h, 0.0);
        let fy = partial(f, alpha, 0.0, h);
        let gx = partial(g, alpha, h, 0.0);
        let gy = partial(g, alpha, 0.0, h);
        bracket += (fx * gy - fy * gx) / state.strengths[alpha];
    }
    bracket
}
