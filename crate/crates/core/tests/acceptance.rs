//! End-to-end acceptance suite. Each test prints exactly one PASS/FAIL line
//! so the whole gate can be read off `cargo test --test acceptance -- --nocapture`.
//!
//! The checks are property-based and cross-oracle: closed-form special
//! functions against Laplace inversion, Monte Carlo against spectral PDE
//! solutions, and the discrete bounded-domain operator against its own
//! spectral invariants.

use std::time::Instant;

use nldiff::cauchy::{norm_l2, norm_mk, solve_cauchy, verify_cauchy_estimates, Field, Grid, ZetaGrid};
use nldiff::ctrw::{empirical_statistics, simulate_ensemble};
use nldiff::ibvp::{assemble_operator, eigendecompose, solve_ibvp, verify_ibvp_estimates, TruncatedKernel};
use nldiff::kernels::{SecondMoment, SpaceKernel, TimeKernel};
use nldiff::relaxation::{relaxation_z, relaxation_z_inverted, subordination_density, subordination_profile};
use nldiff::specfun::{ml, ml_multivariate, MultiMlParams};

/// Print the single verdict line for a criterion, then fail the test if the
/// criterion did not hold.
fn verdict(name: &str, outcome: Result<String, String>) {
    match outcome {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(detail) => {
            println!("FAIL {name}: {detail}");
            panic!("{name}: {detail}");
        }
    }
}

fn gaussian(sigma: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

#[test]
fn relaxation_inversion_matches_mittag_leffler_series() {
    let start = Instant::now();
    let run = || -> Result<String, String> {
        let mut worst = 0.0f64;
        for &alpha in &[0.3, 0.5, 0.8] {
            let kernel = TimeKernel::caputo(alpha).map_err(|e| e.to_string())?;
            for &lambda in &[0.5, 1.0, 2.0] {
                for &t in &[0.01, 0.1, 1.0, 10.0] {
                    let inverted =
                        relaxation_z_inverted(&kernel, lambda, t).map_err(|e| e.to_string())?;
                    let series =
                        ml(alpha, 1.0, -lambda * t.powf(alpha)).map_err(|e| e.to_string())?;
                    worst = worst.max((inverted - series).abs() / series.abs());
                }
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        if worst > 1e-6 {
            return Err(format!("max relative error {worst:.3e} exceeds 1e-6"));
        }
        if elapsed > 10.0 {
            return Err(format!("runtime {elapsed:.1}s exceeds 10s"));
        }
        Ok(format!("max relative error {worst:.3e} over 36 (alpha, lambda, t) triples in {elapsed:.2}s"))
    };
    verdict("relaxation oracle agreement", run());
}

#[test]
fn relaxation_curves_are_completely_monotone() {
    // Divided differences of a completely monotone function alternate in sign
    // on any increasing point set; check orders 1..=3 on 200 log-spaced times.
    let run = || -> Result<String, String> {
        let kernels = [
            ("caputo", TimeKernel::caputo(0.5).map_err(|e| e.to_string())?),
            (
                "multi-term",
                TimeKernel::multi_term_caputo(vec![1.0, 1.0], vec![0.8, 0.4])
                    .map_err(|e| e.to_string())?,
            ),
            (
                "tempered",
                TimeKernel::tempered_caputo(0.5, 1.0).map_err(|e| e.to_string())?,
            ),
        ];
        let n = 200usize;
        let times: Vec<f64> = (0..n)
            .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / (n - 1) as f64))
            .collect();
        let mut worst = 0.0f64;
        for (label, kernel) in &kernels {
            let z: Vec<f64> = times
                .iter()
                .map(|&t| relaxation_z(kernel, 1.0, t))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let mut diffs = z.clone();
            for order in 1..=3usize {
                let mut next = Vec::with_capacity(diffs.len() - 1);
                for i in 0..diffs.len() - 1 {
                    next.push((diffs[i + 1] - diffs[i]) / (times[i + order] - times[i]));
                }
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                for (i, &d) in next.iter().enumerate() {
                    let violation = -(sign * d);
                    worst = worst.max(violation);
                    if violation > 1e-9 {
                        return Err(format!(
                            "{label}: order-{order} difference at t = {:.4} violates the sign pattern by {violation:.3e}",
                            times[i]
                        ));
                    }
                }
                diffs = next;
            }
        }
        Ok(format!("worst sign violation {worst:.3e} across 3 kernels, orders 1..3, 200 log points"))
    };
    verdict("complete monotonicity", run());
}

#[test]
fn cauchy_estimate_suite_passes_on_reference_case() {
    let start = Instant::now();
    let run = || -> Result<String, String> {
        let tk = TimeKernel::caputo(0.5).map_err(|e| e.to_string())?;
        let sk = SpaceKernel::riesz(0.75).map_err(|e| e.to_string())?;
        let grid = Grid::new(40.0, 2048).map_err(|e| e.to_string())?;
        let initial = Field::from_fn(grid.clone(), gaussian(1.0)).map_err(|e| e.to_string())?;
        let times = [0.01, 0.1, 1.0, 10.0];
        let solution = solve_cauchy(&tk, &sk, &initial, &times).map_err(|e| e.to_string())?;
        let report =
            verify_cauchy_estimates(&tk, &sk, &initial, &solution).map_err(|e| e.to_string())?;
        for check in &report.checks {
            if !check.passed {
                return Err(format!(
                    "estimate '{}' failed (margin {:.3e}): {}",
                    check.name, check.margin, check.detail
                ));
            }
        }
        let min_value = solution
            .fields
            .iter()
            .flat_map(|f| f.values())
            .fold(f64::INFINITY, |a, &v| a.min(v));
        if min_value < -1e-8 {
            return Err(format!("propagator minimum {min_value:.3e} below -1e-8"));
        }
        let zeta = ZetaGrid::new(&sk, &grid).map_err(|e| e.to_string())?;
        let mk_1 = norm_mk(&solution.fields[2], &zeta);
        let mk_10 = norm_mk(&solution.fields[3], &zeta);
        if mk_10 >= mk_1 {
            return Err(format!("M_(k) norm did not decay: {mk_10:.6e} at t=10 vs {mk_1:.6e} at t=1"));
        }
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed > 30.0 {
            return Err(format!("runtime {elapsed:.1}s exceeds 30s"));
        }
        Ok(format!(
            "{} estimates passed; min value {min_value:.2e}; M_(k) decay {mk_1:.4e} -> {mk_10:.4e}; {elapsed:.1}s",
            report.checks.len()
        ))
    };
    verdict("Cauchy estimate suite", run());
}

#[test]
fn tempered_case_series_and_inversion_routes_agree() {
    // Route A evolves every spectral mode by the tempered closed-form series;
    // route B re-evaluates Z(t, zeta_k) by Talbot inversion. The L2 distance
    // between the two solutions is computed mode-wise: the map from spectral
    // coefficients to grid values is a fixed unitary (up to one constant),
    // so calibrating that constant on route A makes the comparison exact.
    let run = || -> Result<String, String> {
        let tk = TimeKernel::tempered_caputo(0.5, 1.0).map_err(|e| e.to_string())?;
        let sk = SpaceKernel::tempered_riesz(1.0, 0.5, 1.0).map_err(|e| e.to_string())?;
        let grid = Grid::new(40.0, 1024).map_err(|e| e.to_string())?;
        let initial = Field::from_fn(grid.clone(), gaussian(1.0)).map_err(|e| e.to_string())?;
        let zeta = ZetaGrid::new(&sk, &grid).map_err(|e| e.to_string())?;
        let f_spec = initial.spectral();
        let n = grid.len();
        let times = [0.5, 1.0];
        let solution = solve_cauchy(&tk, &sk, &initial, &times).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for (idx, &t) in times.iter().enumerate() {
            let half = n / 2;
            let z_series: Vec<f64> = (0..=half)
                .map(|k| relaxation_z(&tk, zeta.values()[k], t))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let z_inverted: Vec<f64> = (0..=half)
                .map(|k| relaxation_z_inverted(&tk, zeta.values()[k], t))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let mut sum_a = 0.0;
            let mut sum_d = 0.0;
            for k in 0..n {
                let m = k.min(n - k);
                let f2 = f_spec[k].norm_sqr();
                sum_a += f2 * z_series[m] * z_series[m];
                sum_d += f2 * (z_series[m] - z_inverted[m]).powi(2);
            }
            let c = norm_l2(&solution.fields[idx]).powi(2) / sum_a;
            let dist = (c * sum_d).sqrt();
            worst = worst.max(dist);
            if dist > 1e-6 {
                return Err(format!("L2 distance {dist:.3e} between routes at t = {t}"));
            }
        }
        Ok(format!("max L2 route distance {worst:.3e} at t in {{0.5, 1}}"))
    };
    verdict("dual analytic route (tempered-tempered)", run());
}

#[test]
fn two_term_series_matches_inverted_relaxation() {
    // Two-term kernel a = (1, 1), orders (0.8, 0.4):
    //   Z(t, lambda) = 1 - lambda t^{0.8} E_{(0.4, 0.8), 1.8}(-t^{0.4}, -lambda t^{0.8})
    // with lambda = |xi|^{1.5} (the Riesz(0.75) symbol).
    let run = || -> Result<String, String> {
        let kernel =
            TimeKernel::multi_term_caputo(vec![1.0, 1.0], vec![0.8, 0.4]).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        let mut pairs = 0usize;
        for &t in &[0.25f64, 0.5, 1.0, 2.0] {
            for &xi in &[0.5f64, 1.0, 1.5] {
                let lambda = xi.powf(1.5);
                let params = MultiMlParams::new(
                    vec![0.4, 0.8],
                    1.8,
                    vec![-t.powf(0.4), -lambda * t.powf(0.8)],
                )
                .map_err(|e| e.to_string())?;
                let series = 1.0
                    - lambda * t.powf(0.8) * ml_multivariate(&params).map_err(|e| e.to_string())?;
                let inverted =
                    relaxation_z_inverted(&kernel, lambda, t).map_err(|e| e.to_string())?;
                let err = (series - inverted).abs();
                worst = worst.max(err);
                pairs += 1;
                if err > 1e-6 {
                    return Err(format!(
                        "series {series:.9} vs inversion {inverted:.9} at (t, xi) = ({t}, {xi}): error {err:.3e}"
                    ));
                }
            }
        }
        Ok(format!("max absolute error {worst:.3e} over {pairs} (t, |xi|) pairs"))
    };
    verdict("multivariate ML consistency", run());
}

#[test]
fn subordination_density_is_normalized_and_matches_closed_form() {
    let run = || -> Result<String, String> {
        let kernel = TimeKernel::caputo(0.5).map_err(|e| e.to_string())?;
        let mut worst_mass = 0.0f64;
        for &t in &[0.5, 1.0, 2.0] {
            let profile = subordination_profile(&kernel, t).map_err(|e| e.to_string())?;
            let defect = (profile.total_mass - 1.0).abs();
            worst_mass = worst_mass.max(defect);
            if defect > 1e-3 {
                return Err(format!("mass {:.8} at t = {t} off by {defect:.3e}", profile.total_mass));
            }
        }
        // alpha = 1/2 closed form: phi(t, tau) = exp(-tau^2 / 4t) / sqrt(pi t).
        let mut worst_point = 0.0f64;
        let mut pairs = 0usize;
        for &t in &[0.5f64, 1.0, 2.0, 4.0] {
            for &tau in &[0.25f64, 0.5, 1.0, 2.0, 4.0] {
                let exact =
                    (-tau * tau / (4.0 * t)).exp() / (std::f64::consts::PI * t).sqrt();
                let numeric = subordination_density(&kernel, t, tau).map_err(|e| e.to_string())?;
                let err = (numeric - exact).abs();
                worst_point = worst_point.max(err);
                pairs += 1;
                if err > 1e-5 {
                    return Err(format!(
                        "phi({t}, {tau}) = {numeric:.9} vs closed form {exact:.9}: error {err:.3e}"
                    ));
                }
            }
        }
        Ok(format!(
            "mass defect <= {worst_mass:.3e}; closed-form error <= {worst_point:.3e} at {pairs} (t, tau) pairs"
        ))
    };
    verdict("subordination normalization", run());
}

#[test]
fn ctrw_ensemble_matches_pde_density_and_propagator_ecf() {
    let start = Instant::now();
    let run = || -> Result<String, String> {
        let tk = TimeKernel::caputo(0.5).map_err(|e| e.to_string())?;
        let sk = SpaceKernel::riesz(0.75).map_err(|e| e.to_string())?;
        let times = [1.0, 4.0];
        let particles = 100_000usize;
        let ensemble =
            simulate_ensemble(&tk, &sk, particles, &times, 20_260_823).map_err(|e| e.to_string())?;
        let range = (-20.0, 20.0);
        let bins = 401usize;
        let stats = empirical_statistics(&ensemble, range, bins, &[]);

        // PDE reference: near-delta Gaussian initial data on a wide grid.
        let grid = Grid::new(40.0, 2048).map_err(|e| e.to_string())?;
        let sigma = 2.0 * grid.dx();
        let initial = Field::from_fn(grid.clone(), gaussian(sigma)).map_err(|e| e.to_string())?;
        let solution = solve_cauchy(&tk, &sk, &initial, &times).map_err(|e| e.to_string())?;
        let points = grid.points();
        let (x0, dx) = (points[0], grid.dx());
        let width = (range.1 - range.0) / bins as f64;
        let mut l1 = Vec::new();
        let mut atom = Vec::new();
        for (k, hist) in stats.histograms.iter().enumerate() {
            let values = solution.fields[k].values();
            let mut dist = 0.0;
            for (c, h) in hist.centers.iter().zip(&hist.density) {
                let s = (c - x0) / dx;
                let i = (s.floor() as usize).min(values.len() - 2);
                let w = s - i as f64;
                let p = values[i] * (1.0 - w) + values[i + 1] * w;
                dist += (h - p).abs() * width;
            }
            l1.push(dist);
            // Fraction of particles that have not completed a renewal; the
            // exact walk law keeps this mass as an atom at the origin, which
            // the density solution spreads out.
            atom.push(
                ensemble.positions.iter().filter(|row| row[k] == 0.0).count() as f64
                    / particles as f64,
            );
        }

        // ECF against the exact renewal-process characteristic function
        // Z(t, 1 - e^{-zeta(xi)}), with a 3-sigma binomial band.
        let mut ecf_report = Vec::new();
        for (k, &t) in times.iter().enumerate() {
            for &xi in &[0.5f64, 1.0] {
                let xs = ensemble.positions.iter().map(|row| row[k]);
                let mean = xs.clone().map(|x| (xi * x).cos()).sum::<f64>() / particles as f64;
                let var = xs.map(|x| ((xi * x).cos() - mean).powi(2)).sum::<f64>()
                    / (particles - 1) as f64;
                let target = relaxation_z(&tk, 1.0 - (-sk.zeta(xi).map_err(|e| e.to_string())?).exp(), t)
                    .map_err(|e| e.to_string())?;
                let sigma_hat = (var / particles as f64).sqrt();
                let pull = (mean - target).abs() / sigma_hat;
                if pull > 3.0 {
                    return Err(format!(
                        "ECF at (t, xi) = ({t}, {xi}): {mean:.6} vs {target:.6} is {pull:.2} sigma"
                    ));
                }
                ecf_report.push(pull);
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed > 120.0 {
            return Err(format!("runtime {elapsed:.1}s exceeds 120s"));
        }
        let max_pull = ecf_report.iter().fold(0.0f64, |a, &b| a.max(b));
        if l1.iter().any(|&d| d > 0.05) {
            // Never-moved mass survives as an atom at x = 0 of size
            // Z(t, 1) = E_a(-t^a), and the walk's characteristic function is
            // Z(t, 1 - e^{-zeta}) rather than the density solution's
            // Z(t, zeta); their gap at xi = 1 lower-bounds any L1 distance.
            let mut bound = 0.0f64;
            for &t in &times {
                let zeta1 = sk.zeta(1.0).map_err(|e| e.to_string())?;
                let walk_cf = relaxation_z(&tk, 1.0 - (-zeta1).exp(), t).map_err(|e| e.to_string())?;
                let pde_cf = relaxation_z(&tk, zeta1, t).map_err(|e| e.to_string())?;
                bound = bound.max((walk_cf - pde_cf).abs());
            }
            return Err(format!(
                "L1 histogram distances {:.4}/{:.4} at t = 1/4 exceed 0.05; never-moved atom mass {:.4}/{:.4}; characteristic-function gap at xi = 1 lower-bounds L1 by {bound:.4}; ECF vs the renewal law within {max_pull:.2} sigma; {elapsed:.1}s",
                l1[0], l1[1], atom[0], atom[1]
            ));
        }
        Ok(format!(
            "L1 distances {:.4}/{:.4} at t = 1/4; ECF within {max_pull:.2} sigma; {elapsed:.1}s",
            l1[0], l1[1]
        ))
    };
    verdict("CTRW vs PDE", run());
}

#[test]
fn tempered_jumps_give_finite_subdiffusive_msd() {
    let run = || -> Result<String, String> {
        let tk = TimeKernel::caputo(0.5).map_err(|e| e.to_string())?;
        let sk = SpaceKernel::tempered_riesz(1.0, 0.5, 1.0).map_err(|e| e.to_string())?;
        let zdd = match sk.zeta_second_derivative_at_zero().map_err(|e| e.to_string())? {
            SecondMoment::Finite(v) => v,
            SecondMoment::Divergent => return Err("symbol curvature reported divergent".into()),
        };
        if (zdd - 4.0).abs() > 1e-8 {
            return Err(format!("quadrature zeta''(0) = {zdd:.12} differs from 4"));
        }
        let times = [0.5, 1.0, 2.0, 4.0];
        let particles = 100_000usize;
        let ensemble =
            simulate_ensemble(&tk, &sk, particles, &times, 8_652_025).map_err(|e| e.to_string())?;
        let stats = empirical_statistics(&ensemble, (-30.0, 30.0), 301, &[]);
        let gamma_15 = statrs::function::gamma::gamma(1.5);
        let mut worst_rel = 0.0f64;
        for (k, &t) in times.iter().enumerate() {
            let analytic = zdd * t.sqrt() / gamma_15;
            let rel = (stats.msd[k] - analytic).abs() / analytic;
            worst_rel = worst_rel.max(rel);
            if rel > 0.05 {
                return Err(format!(
                    "MSD {:.4} at t = {t} is {:.1}% from {analytic:.4}",
                    stats.msd[k],
                    100.0 * rel
                ));
            }
        }
        // Least-squares slope of ln MSD vs ln t.
        let n = times.len() as f64;
        let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let ly: Vec<f64> = stats.msd.iter().map(|m| m.ln()).collect();
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let slope = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        if (slope - 0.5).abs() > 0.05 {
            return Err(format!("log-log MSD slope {slope:.4} outside 0.5 +/- 0.05"));
        }
        Ok(format!(
            "zeta''(0) = {zdd:.10}; MSD within {:.2}% of 4 t^0.5 / Gamma(1.5); slope {slope:.4}",
            100.0 * worst_rel
        ))
    };
    verdict("finite MSD for tempered jumps", run());
}

#[test]
fn bounded_domain_suite_passes_at_full_resolution() {
    let start = Instant::now();
    let run = || -> Result<String, String> {
        let base = SpaceKernel::tempered_riesz(1.0, 0.5, 1.0).map_err(|e| e.to_string())?;
        let kernel = TruncatedKernel::new(base, 1.0, None, 0.5).map_err(|e| e.to_string())?;
        let op = assemble_operator(&kernel, 1024).map_err(|e| e.to_string())?;
        let eig = eigendecompose(&op).map_err(|e| e.to_string())?;
        if eig.eigenvalues[0] <= 0.0 {
            return Err(format!("lambda_1 = {} not positive", eig.eigenvalues[0]));
        }
        let gram = eig.eigenvectors.transpose() * &eig.eigenvectors * eig.dx;
        let m = eig.eigenvalues.len();
        let mut ortho_defect = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { 1.0 } else { 0.0 };
                ortho_defect = ortho_defect.max((gram[(i, j)] - target).abs());
            }
        }
        if ortho_defect > 1e-10 {
            return Err(format!("orthonormality defect {ortho_defect:.3e} exceeds 1e-10"));
        }

        let tk = TimeKernel::caputo(0.5).map_err(|e| e.to_string())?;
        let f: Vec<f64> = eig.points.iter().map(|&x| (1.0 - x * x).powi(2)).collect();
        let at_zero = solve_ibvp(&tk, &eig, &f, &[0.0]).map_err(|e| e.to_string())?;
        let recon = (eig.dx
            * at_zero.fields[0]
                .iter()
                .zip(&f)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>())
        .sqrt();
        if recon > 1e-8 {
            return Err(format!("t = 0 reconstruction error {recon:.3e} exceeds 1e-8"));
        }

        let times = [0.05, 0.1, 0.2, 1.0, 5.0, 10.0];
        let solution = solve_ibvp(&tk, &eig, &f, &times).map_err(|e| e.to_string())?;
        let report =
            verify_ibvp_estimates(&solution, &f, &eig, &tk).map_err(|e| e.to_string())?;
        for check in &report.checks {
            if !check.passed {
                return Err(format!(
                    "estimate '{}' failed (margin {:.3e}): {}",
                    check.name, check.margin, check.detail
                ));
            }
        }

        let psi1: Vec<f64> = eig.eigenvectors.column(0).iter().cloned().collect();
        let mode = solve_ibvp(&tk, &eig, &psi1, &[0.5, 1.0, 2.0]).map_err(|e| e.to_string())?;
        let mut worst_mode = 0.0f64;
        for (k, &t) in mode.times.iter().enumerate() {
            let ratio = mode.omegas[k][0] / mode.omega0[0];
            let exact = ml(0.5, 1.0, -eig.eigenvalues[0] * t.sqrt()).map_err(|e| e.to_string())?;
            let err = (ratio - exact).abs();
            worst_mode = worst_mode.max(err);
            if err > 1e-7 {
                return Err(format!(
                    "omega_1({t})/omega_1(0) = {ratio:.10} vs E_a(-lambda_1 t^a) = {exact:.10}"
                ));
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed > 60.0 {
            return Err(format!("runtime {elapsed:.1}s exceeds 60s"));
        }
        Ok(format!(
            "M = 1024: ortho defect {ortho_defect:.2e}, t0 error {recon:.2e}, {} estimates passed, mode-decay error {worst_mode:.2e}; {elapsed:.1}s",
            report.checks.len()
        ))
    };
    verdict("IBVP suite", run());
}

#[test]
fn exterior_truncation_does_not_change_the_solution() {
    // The bounded-domain operator only reads the kernel on (0, 2H], where the
    // truncated kernel coincides with the original; solutions computed from k
    // and from k* must therefore agree to machine precision.
    let run = || -> Result<String, String> {
        let base = SpaceKernel::tempered_riesz(1.0, 0.5, 1.0).map_err(|e| e.to_string())?;
        let with_default = TruncatedKernel::new(base.clone(), 1.0, None, 0.5).map_err(|e| e.to_string())?;
        let theta_small = with_default.theta() * 0.5;
        let with_small =
            TruncatedKernel::new(base, 1.0, Some(theta_small), 0.5).map_err(|e| e.to_string())?;
        let tk = TimeKernel::caputo(0.5).map_err(|e| e.to_string())?;
        let times = [0.5, 2.0];
        let mut solutions = Vec::new();
        for kernel in [&with_default, &with_small] {
            let op = assemble_operator(kernel, 512).map_err(|e| e.to_string())?;
            let eig = eigendecompose(&op).map_err(|e| e.to_string())?;
            let f: Vec<f64> = eig.points.iter().map(|&x| (1.0 - x * x).powi(2)).collect();
            solutions.push(solve_ibvp(&tk, &eig, &f, &times).map_err(|e| e.to_string())?);
        }
        let mut worst = 0.0f64;
        for k in 0..times.len() {
            for (a, b) in solutions[0].fields[k].iter().zip(&solutions[1].fields[k]) {
                worst = worst.max((a - b).abs());
            }
        }
        if worst > 1e-12 {
            return Err(format!("max-norm gap {worst:.3e} between k and k* solutions"));
        }
        Ok(format!("max-norm gap {worst:.3e} between k and k* solutions at t in {{0.5, 2}}"))
    };
    verdict("truncation equivalence", run());
}
