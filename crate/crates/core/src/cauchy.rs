//! Spectral solver for the Cauchy problem on the line:
//!   𝒟_(g) p(t,x) = 𝒟_(k) p(t,x),  p(0,x) = f(x),
//! solved exactly in Fourier space by p̃(t,ξ) = f̃(ξ) · Z(t, ζ(ξ)), then
//! sampled back to the grid by inverse DFT. The discretization imposes
//! 2L-periodicity, so initial data must decay at the grid boundary; boundary
//! mass is monitored rather than windowed away.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::kernels::{SpaceKernel, TimeKernel};
use crate::relaxation::relaxation_z;

/// Uniform grid on [−L, L) with 2π/N-coupled dual frequencies ξ_m = πm/L.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    half_width: f64,
    n: usize,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::domain(format!("grid half-width must be > 0, got {half_width}")));
        }
        if n < 256 || !n.is_power_of_two() {
            return Err(Error::domain(format!(
                "grid size must be a power of two >= 256, got {n}"
            )));
        }
        Ok(Grid { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Dual frequency spacing Δξ = π/L (so Δx·Δξ = 2π/N).
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    pub fn point(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Frequency ξ_m for DFT bin k, with m ∈ [−N/2, N/2).
    pub fn frequency(&self, k: usize) -> f64 {
        let m = if k < self.n / 2 { k as i64 } else { k as i64 - self.n as i64 };
        std::f64::consts::PI * m as f64 / self.half_width
    }
}

/// Grid function with a lazily computed spectrum.
///
/// The spectrum uses the unitary continuous-transform scaling
/// p̃_m = (Δx/√(2π)) Σ_i p_i e^{−i ξ_m x_i}, so Plancherel reads
/// Σ|p_i|²Δx = Σ|p̃_m|²Δξ and the M_(k) norm needs no extra factors.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    spectral: OnceLock<Arc<Vec<Complex64>>>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "field has {} values on a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("field values must be finite"));
        }
        Ok(Field { grid, values, spectral: OnceLock::new() })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Σ p_i Δx, the discrete mass.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// Physically scaled spectrum, computed once and shared.
    pub fn spectral(&self) -> Arc<Vec<Complex64>> {
        Arc::clone(self.spectral.get_or_init(|| {
            let n = self.grid.len();
            let mut buf: Vec<Complex64> =
                self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            FftPlanner::new().plan_fft_forward(n).process(&mut buf);
            let scale = self.grid.dx() / (2.0 * std::f64::consts::PI).sqrt();
            let l = self.grid.half_width();
            for (k, c) in buf.iter_mut().enumerate() {
                // e^{+iξ_m L} re-centres the DFT phase onto x_i = −L + iΔx.
                let xi = self.grid.frequency(k);
                *c *= scale * Complex64::from_polar(1.0, xi * l);
            }
            Arc::new(buf)
        }))
    }

    /// Rebuild a field from a physically scaled spectrum, reporting the
    /// largest imaginary residue discarded on the way back.
    pub(crate) fn from_spectral(grid: &Grid, spec: &[Complex64]) -> (Field, f64) {
        let n = grid.len();
        let scale = grid.dx() / (2.0 * std::f64::consts::PI).sqrt();
        let l = grid.half_width();
        let mut buf: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::from_polar(1.0, -grid.frequency(k) * l) / scale)
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        let mut residue = 0.0f64;
        let values: Vec<f64> = buf
            .iter()
            .map(|c| {
                residue = residue.max((c.im / n as f64).abs());
                c.re / n as f64
            })
            .collect();
        (
            Field { grid: grid.clone(), values, spectral: OnceLock::new() },
            residue,
        )
    }
}

/// ζ(ξ_m) tabulated once per (kernel, grid) pair; read-only after the fill.
#[derive(Debug, Clone)]
pub struct ZetaGrid {
    values: Vec<f64>,
}

impl ZetaGrid {
    pub fn new(kernel: &SpaceKernel, grid: &Grid) -> Result<Self> {
        // ζ is even, so only bins 0..=N/2 are evaluated.
        let half: Vec<f64> = (0..=grid.len() / 2)
            .into_par_iter()
            .map(|k| kernel.zeta(grid.frequency(k).abs()))
            .collect::<Result<Vec<f64>>>()?;
        let values = (0..grid.len())
            .map(|k| half[k.min(grid.len() - k)])
            .collect();
        Ok(ZetaGrid { values })
    }

    /// Degenerate or externally supplied symbol table (test hooks, CLI).
    pub fn from_values(values: Vec<f64>) -> Self {
        ZetaGrid { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Solution bundle: one field per requested time plus quality diagnostics.
#[derive(Debug, Clone)]
pub struct CauchySolution {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    pub warnings: Vec<String>,
    /// Largest imaginary part discarded by the inverse DFT.
    pub max_imag_residue: f64,
}

/// Boundary density thresholds. Heavy-tailed symbols (Riesz) put genuine
/// O(t |x|^{-1-2beta}) mass at any finite boundary, so densities above the
/// warn level are reported but only the error level aborts: past it the
/// periodic images feed back into the domain at answer-changing size.
const BOUNDARY_DENSITY_WARN: f64 = 1e-6;
const BOUNDARY_DENSITY_MAX: f64 = 1e-3;

pub fn solve_cauchy(
    time_kernel: &TimeKernel,
    space_kernel: &SpaceKernel,
    initial: &Field,
    times: &[f64],
) -> Result<CauchySolution> {
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("solve_cauchy: times must be sorted and >= 0"));
    }
    let grid = initial.grid();
    let mut warnings = Vec::new();
    let peak = initial.values().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let edge = initial.values()[0].abs().max(initial.values()[grid.len() - 1].abs());
    if edge > 1e-12 * peak.max(1e-300) {
        warnings.push(format!(
            "initial data does not decay at the grid boundary (edge/peak = {:.3e})",
            edge / peak
        ));
    }
    let zeta = ZetaGrid::new(space_kernel, grid)?;
    let f_spec = initial.spectral();

    let mut fields = Vec::with_capacity(times.len());
    let mut max_residue = 0.0f64;
    for &t in times {
        // Z(t, ζ) is even in the bin index; evaluate one half-spectrum.
        let half = grid.len() / 2;
        let z_half: Vec<f64> = (0..=half)
            .into_par_iter()
            .map(|k| relaxation_z(time_kernel, zeta.values()[k], t))
            .collect::<Result<Vec<f64>>>()?;
        let spec: Vec<Complex64> = (0..grid.len())
            .map(|k| f_spec[k] * z_half[k.min(grid.len() - k)])
            .collect();
        let (field, residue) = Field::from_spectral(grid, &spec);
        max_residue = max_residue.max(residue);
        let edge = field.values()[0].abs().max(field.values()[grid.len() - 1].abs());
        if edge > BOUNDARY_DENSITY_MAX {
            return Err(Error::BoundaryMass(format!(
                "boundary density {edge:.3e} at t = {t}; domain too small"
            )));
        }
        if edge > BOUNDARY_DENSITY_WARN && !warnings.iter().any(|w| w.starts_with("boundary")) {
            warnings.push(format!("boundary density reached {edge:.3e} at t = {t}"));
        }
        fields.push(field);
    }
    if max_residue > 1e-10 {
        warnings.push(format!("imaginary residue {max_residue:.3e} discarded by inverse DFT"));
    }
    Ok(CauchySolution { times: times.to_vec(), fields, warnings, max_imag_residue: max_residue })
}

/// ‖p‖_{L²} = √(Σ|p_i|²Δx).
pub fn norm_l2(field: &Field) -> f64 {
    (field.values().iter().map(|v| v * v).sum::<f64>() * field.grid().dx()).sqrt()
}

/// ‖p‖_{M_(k)} = √(Σ|(1+ζ(ξ_m)) p̃_m|²Δξ), the general Sobolev norm.
pub fn norm_mk(field: &Field, zeta: &ZetaGrid) -> f64 {
    let spec = field.spectral();
    let sum: f64 = spec
        .iter()
        .zip(zeta.values())
        .map(|(c, &z)| ((1.0 + z) * c.norm()).powi(2))
        .sum();
    (sum * field.grid().dxi()).sqrt()
}

/// The seminorm ‖ζ p̃‖_{L²(dξ)} = ‖𝒟_(k) p‖_{L²}.
pub fn norm_dk(field: &Field, zeta: &ZetaGrid) -> f64 {
    let spec = field.spectral();
    let sum: f64 = spec
        .iter()
        .zip(zeta.values())
        .map(|(c, &z)| (z * c.norm()).powi(2))
        .sum();
    (sum * field.grid().dxi()).sqrt()
}

/// −𝒟_(k) as a Fourier multiplier: 𝒟_(k)v = −F⁻¹(ζ · Fv).
pub fn apply_generalized_laplacian(field: &Field, space_kernel: &SpaceKernel) -> Result<Field> {
    let zeta = ZetaGrid::new(space_kernel, field.grid())?;
    let spec = field.spectral();
    let mult: Vec<Complex64> = spec
        .iter()
        .zip(zeta.values())
        .map(|(c, &z)| -z * c)
        .collect();
    Ok(Field::from_spectral(field.grid(), &mult).0)
}

/// One verified estimate: its label, the inequality margin (≥ 0 means pass
/// after tolerance), and the verdict.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub margin: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub(crate) fn push(&mut self, name: &'static str, margin: f64, passed: bool, detail: String) {
        self.checks.push(PropertyCheck { name, margin, passed, detail });
    }
}

/// Numerical analogue of the solution estimates for the Cauchy problem:
/// contraction in L² and M_(k), t → 0 continuity trend, the 1/(et) time
/// derivative bound (central differences, 5% slack), the 𝒟_(k) bound, the
/// large-time M_(k) decay, and positivity/boundedness of the propagator.
pub fn verify_cauchy_estimates(
    time_kernel: &TimeKernel,
    space_kernel: &SpaceKernel,
    initial: &Field,
    solution: &CauchySolution,
) -> Result<PropertyReport> {
    let zeta = ZetaGrid::new(space_kernel, initial.grid())?;
    let times = &solution.times;
    let fields = &solution.fields;
    let mut report = PropertyReport { checks: Vec::new() };
    let tol = 1e-10;

    let f_l2 = norm_l2(initial);
    let f_mk = norm_mk(initial, &zeta);

    // L2 and M_(k) contraction.
    let mut margin_l2 = f64::INFINITY;
    let mut margin_mk = f64::INFINITY;
    for p in fields {
        margin_l2 = margin_l2.min(f_l2 - norm_l2(p));
        margin_mk = margin_mk.min(f_mk - norm_mk(p, &zeta));
    }
    report.push(
        "l2_contraction",
        margin_l2,
        margin_l2 >= -tol * f_l2.max(1.0),
        format!("min ||f||_L2 - ||p(t)||_L2 = {margin_l2:.3e}"),
    );
    report.push(
        "mk_contraction",
        margin_mk,
        margin_mk >= -tol * f_mk.max(1.0),
        format!("min ||f||_Mk - ||p(t)||_Mk = {margin_mk:.3e}"),
    );

    // t -> 0 continuity: ||p(t) - f||_Mk nonincreasing over the three
    // smallest positive times (trend check; the estimate carries no rate).
    let small: Vec<(f64, f64)> = times
        .iter()
        .zip(fields)
        .filter(|(t, _)| **t > 0.0)
        .take(3)
        .map(|(&t, p)| {
            let diff = Field::new(
                initial.grid().clone(),
                p.values().iter().zip(initial.values()).map(|(a, b)| a - b).collect(),
            )
            .expect("same grid");
            (t, norm_mk(&diff, &zeta))
        })
        .collect();
    let trend_ok = small.windows(2).all(|w| w[0].1 <= w[1].1 + tol * f_mk.max(1.0));
    let trend_margin = small
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::INFINITY, f64::min);
    report.push(
        "t0_continuity_trend",
        if trend_margin.is_finite() { trend_margin } else { 0.0 },
        trend_ok,
        format!("||p(t)-f||_Mk at smallest times: {small:?}"),
    );

    // Time derivative bound ||d/dt p(t)||_L2 <= 1/(e t) ||f||_L2, checked by
    // central differences with a 5% slack for the FD truncation.
    let mut margin_dt = f64::INFINITY;
    for (&t, _) in times.iter().zip(fields).filter(|(t, _)| **t > 0.0) {
        let h = 0.01 * t;
        let pair = solve_cauchy(time_kernel, space_kernel, initial, &[t - h, t + h])?;
        let diff = Field::new(
            initial.grid().clone(),
            pair.fields[1]
                .values()
                .iter()
                .zip(pair.fields[0].values())
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect(),
        )?;
        let bound = f_l2 / (std::f64::consts::E * t) * 1.05;
        margin_dt = margin_dt.min(bound - norm_l2(&diff));
    }
    report.push(
        "dt_bound",
        margin_dt,
        margin_dt >= -tol * f_l2.max(1.0),
        format!("min (1.05/(e t))||f|| - ||dp/dt|| = {margin_dt:.3e}"),
    );

    // ||D_(k) p(t)||_L2 <= ||f||_Mk.
    let mut margin_dk = f64::INFINITY;
    for p in fields.iter() {
        margin_dk = margin_dk.min(f_mk - norm_dk(p, &zeta));
    }
    report.push(
        "dk_bound",
        margin_dk,
        margin_dk >= -tol * f_mk.max(1.0),
        format!("min ||f||_Mk - ||zeta p~|| = {margin_dk:.3e}"),
    );

    // Large-time M_(k) decay at T_max vs T_max/10.
    if let Some(&t_max) = times.iter().filter(|t| **t > 0.0).next_back() {
        let early = solve_cauchy(time_kernel, space_kernel, initial, &[t_max / 10.0])?;
        let late = norm_mk(fields.last().expect("nonempty"), &zeta);
        let ref_norm = norm_mk(&early.fields[0], &zeta);
        report.push(
            "mk_decay",
            ref_norm - late,
            late < ref_norm,
            format!("||p({t_max})||_Mk = {late:.6e} vs ||p({})||_Mk = {ref_norm:.6e}", t_max / 10.0),
        );
    }

    // Positivity (only meaningful for nonnegative data) and boundedness.
    let f_min = initial.values().iter().cloned().fold(f64::INFINITY, f64::min);
    if f_min >= 0.0 {
        let p_min = fields
            .iter()
            .flat_map(|p| p.values().iter().cloned())
            .fold(f64::INFINITY, f64::min);
        report.push(
            "positivity",
            p_min + 1e-8,
            p_min >= -1e-8,
            format!("min_i p_i = {p_min:.3e}"),
        );
    }
    let f_max = initial.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p_max = fields
        .iter()
        .flat_map(|p| p.values().iter().cloned())
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(
        "boundedness",
        f_max + 1e-8 - p_max,
        p_max <= f_max + 1e-8,
        format!("max_i p_i = {p_max:.6e} vs max_i f_i = {f_max:.6e}"),
    );

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::ml;

    fn gaussian(grid: Grid) -> Field {
        Field::from_fn(grid, |x| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt())
            .unwrap()
    }

    fn grid() -> Grid {
        Grid::new(40.0, 2048).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = grid();
        assert!((g.dx() * g.dxi() - 2.0 * std::f64::consts::PI / g.len() as f64).abs() < 1e-15);
        assert!(Grid::new(40.0, 100).is_err());
        assert!(Grid::new(40.0, 300).is_err());
        assert!(Grid::new(-1.0, 256).is_err());
    }

    #[test]
    fn solve_at_time_zero_round_trips() {
        let tk = TimeKernel::caputo(0.5).unwrap();
        let sk = SpaceKernel::riesz(0.75).unwrap();
        let f = gaussian(grid());
        let sol = solve_cauchy(&tk, &sk, &f, &[0.0]).unwrap();
        let err = sol.fields[0]
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-12, "round trip error {err}");
    }

    #[test]
    fn caputo_riesz_spectrum_is_mittag_leffler() {
        // p~(1, xi) = f~(xi) E_{1/2}(-|xi|^{3/2}).
        let tk = TimeKernel::caputo(0.5).unwrap();
        let sk = SpaceKernel::riesz(0.75).unwrap();
        let f = gaussian(grid());
        let sol = solve_cauchy(&tk, &sk, &f, &[1.0]).unwrap();
        let spec = sol.fields[0].spectral();
        let f_spec = f.spectral();
        let g = grid();
        for k in [1usize, 7, 40, 200, 511] {
            let xi = g.frequency(k).abs();
            let want = f_spec[k] * ml(0.5, 1.0, -xi.powf(1.5)).unwrap();
            assert!(
                (spec[k] - want).norm() <= 1e-9 * f_spec[0].norm(),
                "bin {k}: {} vs {}",
                spec[k],
                want
            );
        }
    }

    #[test]
    fn tempered_solution_matches_independent_inversion_route() {
        // Fast-path series Z against the numerically inverted Z, in L2.
        let tk = TimeKernel::tempered_caputo(0.5, 1.0).unwrap();
        let sk = SpaceKernel::tempered_riesz(1.0, 0.5, 1.0).unwrap();
        let g = grid();
        let f = gaussian(g.clone());
        let sol = solve_cauchy(&tk, &sk, &f, &[1.0]).unwrap();

        let zeta = ZetaGrid::new(&sk, &g).unwrap();
        let f_spec = f.spectral();
        let z_half: Vec<f64> = (0..=g.len() / 2)
            .into_par_iter()
            .map(|k| {
                crate::relaxation::relaxation_z_inverted(&tk, zeta.values()[k], 1.0)
            })
            .collect::<Result<Vec<f64>>>()
            .unwrap();
        let spec: Vec<Complex64> = (0..g.len())
            .map(|k| f_spec[k] * z_half[k.min(g.len() - k)])
            .collect();
        let (alt, _) = Field::from_spectral(&g, &spec);

        let diff = Field::new(
            g.clone(),
            sol.fields[0]
                .values()
                .iter()
                .zip(alt.values())
                .map(|(a, b)| a - b)
                .collect(),
        )
        .unwrap();
        let d = norm_l2(&diff);
        assert!(d <= 1e-6, "route disagreement {d:.3e} in L2");
    }

    #[test]
    fn norm_l2_basics() {
        let g = grid();
        let zero = Field::new(g.clone(), vec![0.0; g.len()]).unwrap();
        assert_eq!(norm_l2(&zero), 0.0);

        // Unit box on [-1/2, 1/2), edges aligned with the grid (dx = 1/4).
        let gb = Grid::new(32.0, 256).unwrap();
        let boxf = Field::from_fn(gb, |x| {
            if (-0.5..0.5).contains(&x) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert!((norm_l2(&boxf) - 1.0).abs() < 1e-12);

        // Plancherel: spectral sum equals the spatial sum.
        let f = gaussian(g.clone());
        let spec = f.spectral();
        let spectral_l2 =
            (spec.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dxi()).sqrt();
        assert!((spectral_l2 - norm_l2(&f)).abs() <= 1e-10);
    }

    #[test]
    fn norm_mk_dominates_l2_and_refines() {
        let sk = SpaceKernel::riesz(0.75).unwrap();
        let g = grid();
        let f = gaussian(g.clone());
        let zeta = ZetaGrid::new(&sk, &g).unwrap();
        let coarse = norm_mk(&f, &zeta);
        assert!(coarse >= norm_l2(&f));

        let g2 = Grid::new(40.0, 4096).unwrap();
        let f2 = gaussian(g2.clone());
        let zeta2 = ZetaGrid::new(&sk, &g2).unwrap();
        let fine = norm_mk(&f2, &zeta2);
        assert!(
            (coarse - fine).abs() <= 1e-6 * fine,
            "Mk norm not refinement-stable: {coarse} vs {fine}"
        );
    }

    #[test]
    fn zero_zeta_collapses_mk_to_l2() {
        let g = grid();
        let f = gaussian(g.clone());
        let zeta = ZetaGrid::from_values(vec![0.0; g.len()]);
        assert!((norm_mk(&f, &zeta) - norm_l2(&f)).abs() <= 1e-10);
    }

    #[test]
    fn laplacian_kills_constants_and_scales_modes() {
        let sk = SpaceKernel::riesz(0.5).unwrap();
        let g = grid();
        let ones = Field::new(g.clone(), vec![1.0; g.len()]).unwrap();
        let out = apply_generalized_laplacian(&ones, &sk).unwrap();
        assert!(out.values().iter().all(|v| v.abs() < 1e-10));

        // A single DFT-resolved sine mode is an eigenfunction.
        let xi1 = g.frequency(5);
        let mode = Field::from_fn(g.clone(), |x| (xi1 * x).sin()).unwrap();
        let out = apply_generalized_laplacian(&mode, &sk).unwrap();
        let z = sk.zeta(xi1).unwrap();
        let err = out
            .values()
            .iter()
            .zip(mode.values())
            .map(|(a, b)| (a + z * b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-9 * z, "eigenmode error {err}");
    }

    #[test]
    fn laplacian_matches_difference_form_quadrature() {
        // D_(k)p(x) = int (p(x+y)+p(x-y)-2p(x)) k(y) dy, evaluated directly
        // with singularity-aware quadrature as an independent oracle.
        // k ~ |y|^{-2} periodizes slowly; a wide grid keeps the image error
        // below the comparison tolerance.
        let sk = SpaceKernel::riesz(0.5).unwrap();
        // dx = 1/32 so every probe point below lies on the grid.
        let g = Grid::new(512.0, 32768).unwrap();
        let f = gaussian(g.clone());
        let out = apply_generalized_laplacian(&f, &sk).unwrap();
        let p = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        for &x in &[0.0, 0.5, 1.0, 2.0, 3.5] {
            let integrand = |y: f64| (p(x + y) + p(x - y) - 2.0 * p(x)) * sk.k_eval(y).unwrap();
            // Below delta the second difference is O(y^2) and cancels in f64
            // against the y^{-2} kernel; use the Taylor form
            // int_0^d C y^{-2} (p'' y^2 + p y^4/12) dy = C(p d + p d^3/36).
            let delta = 1e-3;
            let c = sk.k_eval(1.0).unwrap();
            let d2 = (x * x - 1.0) * p(x);
            let d4 = (x.powi(4) - 6.0 * x * x + 3.0) * p(x);
            let near = c * (d2 * delta + d4 * delta.powi(3) / 36.0)
                + crate::quad::tanh_sinh(&integrand, delta, 1.0, 1e-12);
            // The tail integrand is signed; integrate it in geometric panels,
            // then close with the analytic remainder -2p(x) int_Y^inf k dy
            // (the Gaussian terms are long dead at Y = 1e4).
            let mut tail = 0.0;
            let mut lo = 1.0f64;
            while lo < 1e4 {
                tail += crate::quad::gauss16(&integrand, lo, 1.25 * lo);
                lo *= 1.25;
            }
            tail += -2.0 * p(x) * sk.k_eval(lo).unwrap() * lo; // int C y^-2 = C/Y
            // The difference form integrates over all of R; the quadrature
            // above covers (0, inf) of an even integrand.
            let want = 2.0 * (near + tail);
            let i = ((x + g.half_width()) / g.dx()).round() as usize;
            let got = out.values()[i];
            assert!(
                (got - want).abs() <= 1e-4,
                "x = {x}: spectral {got:.6e} vs quadrature {want:.6e}"
            );
        }
    }

    #[test]
    fn estimates_pass_for_reference_case() {
        let tk = TimeKernel::caputo(0.5).unwrap();
        let sk = SpaceKernel::riesz(0.75).unwrap();
        let f = gaussian(grid());
        let times = [0.01, 0.1, 1.0, 10.0];
        let sol = solve_cauchy(&tk, &sk, &f, &times).unwrap();
        let report = verify_cauchy_estimates(&tk, &sk, &f, &sol).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn negative_lobe_skips_positivity() {
        let tk = TimeKernel::caputo(0.5).unwrap();
        let sk = SpaceKernel::riesz(0.75).unwrap();
        let f = Field::from_fn(grid(), |x| x * (-x * x / 2.0).exp()).unwrap();
        let sol = solve_cauchy(&tk, &sk, &f, &[0.1, 1.0]).unwrap();
        let report = verify_cauchy_estimates(&tk, &sk, &f, &sol).unwrap();
        assert!(report.checks.iter().all(|c| c.name != "positivity"));
        assert!(report.checks.iter().any(|c| c.name == "l2_contraction" && c.passed));
    }

    #[test]
    fn mass_and_symmetry_preserved() {
        let tk = TimeKernel::caputo(0.5).unwrap();
        let sk = SpaceKernel::riesz(0.75).unwrap();
        let f = gaussian(grid());
        let sol = solve_cauchy(&tk, &sk, &f, &[0.5, 2.0]).unwrap();
        for p in &sol.fields {
            assert!((p.mass() - f.mass()).abs() <= 1e-8, "mass {}", p.mass());
            let v = p.values();
            let n = v.len();
            // Even initial data: p(x_i) = p(x_{-i}) (index N-i modulo N).
            for i in 1..n / 2 {
                assert!(
                    (v[i] - v[n - i]).abs() <= 1e-12,
                    "symmetry broken at i = {i}"
                );
            }
        }
    }

    #[test]
    fn solution_independent_of_time_list() {
        let tk = TimeKernel::caputo(0.5).unwrap();
        let sk = SpaceKernel::riesz(0.75).unwrap();
        let f = gaussian(grid());
        let lone = solve_cauchy(&tk, &sk, &f, &[1.0]).unwrap();
        let joint = solve_cauchy(&tk, &sk, &f, &[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(lone.fields[0].values(), joint.fields[1].values());
    }

    #[test]
    fn grid_refinement_converges() {
        let tk = TimeKernel::caputo(0.5).unwrap();
        let sk = SpaceKernel::riesz(0.75).unwrap();
        let g1 = grid();
        let g2 = Grid::new(40.0, 4096).unwrap();
        let s1 = solve_cauchy(&tk, &sk, &gaussian(g1.clone()), &[1.0]).unwrap();
        let s2 = solve_cauchy(&tk, &sk, &gaussian(g2.clone()), &[1.0]).unwrap();
        // Compare on the coarse points (every second fine point).
        let diff: f64 = s1.fields[0]
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - s2.fields[0].values()[2 * i]).powi(2))
            .sum::<f64>()
            * g1.dx();
        assert!(diff.sqrt() <= 1e-5, "refinement L2 gap {}", diff.sqrt());
    }

    #[test]
    fn boundary_mass_escalates_to_error() {
        let tk = TimeKernel::caputo(0.5).unwrap();
        let sk = SpaceKernel::riesz(0.75).unwrap();
        // A wide density on a narrow domain spreads into the boundary.
        let g = Grid::new(5.0, 256).unwrap();
        let f = Field::from_fn(g, |x| (-x * x / 8.0).exp() / (8.0 * std::f64::consts::PI).sqrt())
            .unwrap();
        let r = solve_cauchy(&tk, &sk, &f, &[50.0]);
        assert!(matches!(r, Err(Error::BoundaryMass(_))));
    }
}

