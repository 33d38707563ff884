//! Monomer Green functions on a uniform energy grid (cm⁻¹).
//!
//! −Im⟨g(E)⟩ is the monomer absorption profile normalized to total weight π;
//! the real part is either analytic (Lorentzian peaks) or obtained from the
//! profile by a principal-value Hilbert transform.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MIN_GRID_POINTS: usize = 64;

/// Uniform energy grid, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGrid {
    e_min: f64,
    e_max: f64,
    n_points: usize,
}

impl EnergyGrid {
    pub fn new(e_min: f64, e_max: f64, n_points: usize) -> Result<Self> {
        if !(e_min.is_finite() && e_max.is_finite()) || e_min >= e_max {
            return Err(Error::InvalidGrid(format!(
                "need finite e_min < e_max, got [{e_min}, {e_max}]"
            )));
        }
        if n_points < MIN_GRID_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_GRID_POINTS} points, got {n_points}"
            )));
        }
        Ok(EnergyGrid {
            e_min,
            e_max,
            n_points,
        })
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn step(&self) -> f64 {
        (self.e_max - self.e_min) / (self.n_points - 1) as f64
    }

    pub fn energy(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.e_max
        } else {
            self.e_min + self.step() * i as f64
        }
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.energy(i)).collect()
    }

    pub fn contains(&self, e: f64) -> bool {
        e >= self.e_min && e <= self.e_max
    }
}

/// Trapezoid integral of samples over the grid.
pub fn trapezoid(grid: &EnergyGrid, y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = y[1..n - 1].iter().sum();
    grid.step() * (inner + 0.5 * (y[0] + y[n - 1]))
}

/// First moment of a non-negative profile.
pub fn centroid(grid: &EnergyGrid, y: &[f64]) -> f64 {
    let weight = trapezoid(grid, y);
    let first: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, v)| v * grid.energy(i))
        .collect();
    trapezoid(grid, &first) / weight
}

/// ∫ y dE over the real line: trapezoid on the grid plus a 1/(E−Ē)² tail
/// continued from each endpoint value, Ē being the centroid.
pub fn total_weight_with_tails(grid: &EnergyGrid, y: &[f64]) -> f64 {
    let inside = trapezoid(grid, y);
    let c = centroid(grid, y);
    if !(c > grid.e_min() && c < grid.e_max()) {
        return inside;
    }
    let left = y[0].max(0.0) * (c - grid.e_min());
    let right = y[y.len() - 1].max(0.0) * (grid.e_max() - c);
    inside + left + right
}

/// Complex ⟨g(E)⟩ sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomerGreen {
    grid: EnergyGrid,
    values: Vec<Complex64>,
}

/// Numerical health of a [`MonomerGreen`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenDiagnostics {
    /// min −Im⟨g⟩ over the grid.
    pub min_absorption: f64,
    /// (1/π)∫ −Im⟨g⟩ dE including tail continuation.
    pub weight: f64,
    /// Centroid of −Im⟨g⟩.
    pub centroid: f64,
    /// max over both endpoints of |(E − Ē)⟨g(E)⟩ − 1|.
    pub tail_deviation: f64,
}

impl GreenDiagnostics {
    pub const WEIGHT_TOL: f64 = 0.01;
    pub const TAIL_TOL: f64 = 0.05;

    pub fn is_positive(&self) -> bool {
        self.min_absorption >= -1e-12
    }

    pub fn is_normalized(&self) -> bool {
        (self.weight - 1.0).abs() <= Self::WEIGHT_TOL
    }

    pub fn tail_ok(&self) -> bool {
        self.tail_deviation < Self::TAIL_TOL
    }
}

impl MonomerGreen {
    pub fn from_samples(grid: EnergyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        Ok(MonomerGreen { grid, values })
    }

    pub fn grid(&self) -> &EnergyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// −Im⟨g⟩ samples.
    pub fn absorption(&self) -> Vec<f64> {
        self.values.iter().map(|g| -g.im).collect()
    }

    pub fn diagnostics(&self) -> GreenDiagnostics {
        let y = self.absorption();
        let min_absorption = y.iter().copied().fold(f64::INFINITY, f64::min);
        let weight = total_weight_with_tails(&self.grid, &y) / PI;
        let c = centroid(&self.grid, &y);
        let n = self.values.len();
        let tail = |i: usize| ((self.grid.energy(i) - c) * self.values[i] - 1.0).norm();
        GreenDiagnostics {
            min_absorption,
            weight,
            centroid: c,
            tail_deviation: tail(0).max(tail(n - 1)),
        }
    }

    /// Errors if the grid does not enclose the spectral support with margin.
    pub fn check_tails(&self) -> Result<()> {
        let d = self.diagnostics();
        if d.tail_ok() {
            Ok(())
        } else {
            Err(Error::GridTooNarrow(format!(
                "|(E-Ebar) g(E) - 1| = {:.3} at the grid ends (limit {})",
                d.tail_deviation,
                GreenDiagnostics::TAIL_TOL
            )))
        }
    }
}

/// One-level electronic Green function 1/(E − ε + iδ).
pub fn electronic_green(epsilon: f64, delta: f64, grid: &EnergyGrid) -> Result<MonomerGreen> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidBroadening(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let values = (0..grid.len())
        .map(|i| 1.0 / Complex64::new(grid.energy(i) - epsilon, delta))
        .collect();
    MonomerGreen::from_samples(*grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Broadening {
    Lorentzian,
    Gaussian,
}

/// Franck-Condon progression: peaks at e00 + m·ω_vib (m < n_peaks) with
/// Poisson weights e^{−S}S^m/m!, each broadened with half-width γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineshapeModel {
    pub e00: f64,
    pub vib_spacing: f64,
    pub huang_rhys: f64,
    pub n_peaks: usize,
    pub width: f64,
    pub broadening: Broadening,
}

impl Default for LineshapeModel {
    /// Pinacyanol-like profile spanning roughly 17000–20000 cm⁻¹.
    fn default() -> Self {
        LineshapeModel {
            e00: 17500.0,
            vib_spacing: 1200.0,
            huang_rhys: 0.9,
            n_peaks: 4,
            width: 350.0,
            broadening: Broadening::Lorentzian,
        }
    }
}

impl LineshapeModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidLineshape(msg));
        if !(self.e00 > 0.0 && self.e00.is_finite()) {
            return bad(format!("e00 must be positive, got {}", self.e00));
        }
        if !(self.vib_spacing > 0.0 && self.vib_spacing.is_finite()) {
            return bad(format!("vib_spacing must be positive, got {}", self.vib_spacing));
        }
        if !(self.huang_rhys >= 0.0 && self.huang_rhys.is_finite()) {
            return bad(format!("huang_rhys must be >= 0, got {}", self.huang_rhys));
        }
        if self.n_peaks == 0 {
            return bad("n_peaks must be >= 1".into());
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return bad(format!("width must be positive, got {}", self.width));
        }
        Ok(())
    }

    /// Poisson factors renormalized over the included peaks.
    pub fn peak_weights(&self) -> Vec<f64> {
        let s = self.huang_rhys;
        let mut w = Vec::with_capacity(self.n_peaks);
        let mut term = (-s).exp();
        for m in 0..self.n_peaks {
            if m > 0 {
                term *= s / m as f64;
            }
            w.push(term);
        }
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    }

    pub fn peak_positions(&self) -> Vec<f64> {
        (0..self.n_peaks)
            .map(|m| self.e00 + m as f64 * self.vib_spacing)
            .collect()
    }

    /// Minimal energy window the grid has to cover.
    pub fn required_span(&self) -> (f64, f64) {
        (
            self.e00 - 10.0 * self.width,
            self.e00 + self.n_peaks as f64 * self.vib_spacing + 10.0 * self.width,
        )
    }
}

/// Vibrationally averaged Green function of a [`LineshapeModel`].
pub fn vibronic_green(model: &LineshapeModel, grid: &EnergyGrid) -> Result<MonomerGreen> {
    model.validate()?;
    let (lo, hi) = model.required_span();
    if grid.e_min() > lo || grid.e_max() < hi {
        return Err(Error::GridTooNarrow(format!(
            "grid [{}, {}] must cover [{lo}, {hi}]",
            grid.e_min(),
            grid.e_max()
        )));
    }
    let weights = model.peak_weights();
    let peaks = model.peak_positions();
    match model.broadening {
        Broadening::Lorentzian => {
            let values = (0..grid.len())
                .map(|i| {
                    let e = grid.energy(i);
                    weights
                        .iter()
                        .zip(&peaks)
                        .map(|(w, p)| *w / Complex64::new(e - p, model.width))
                        .sum()
                })
                .collect();
            MonomerGreen::from_samples(*grid, values)
        }
        Broadening::Gaussian => {
            let sigma = model.width / (2.0 * 2f64.ln()).sqrt();
            let norm = PI / (sigma * (2.0 * PI).sqrt());
            let absorption: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let e = grid.energy(i);
                    weights
                        .iter()
                        .zip(&peaks)
                        .map(|(w, p)| w * norm * (-0.5 * ((e - p) / sigma).powi(2)).exp())
                        .sum()
                })
                .collect();
            green_from_absorption(grid, absorption)
        }
    }
}

/// Builds ⟨g⟩ from a non-negative profile −Im⟨g⟩ that already carries
/// weight π; the real part comes from [`kramers_kronig`].
fn green_from_absorption(grid: &EnergyGrid, absorption: Vec<f64>) -> Result<MonomerGreen> {
    let re = kramers_kronig(&absorption, grid)?;
    let values = re
        .into_iter()
        .zip(&absorption)
        .map(|(r, a)| Complex64::new(r, -a))
        .collect();
    MonomerGreen::from_samples(*grid, values)
}

/// Second difference of x·ln|x|: the exact principal-value integral of a
/// unit hat function against 1/(k − t).
fn hat_kernel(k: i64) -> f64 {
    fn xlogx(x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x * x.abs().ln()
        }
    }
    let k = k as f64;
    xlogx(k + 1.0) - 2.0 * xlogx(k) + xlogx(k - 1.0)
}

/// (z − ln(1+z))/z², the normalized PV integral of a 1/E² tail.
fn tail_kernel(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        0.5 - z / 3.0 + z * z / 4.0 - z * z * z / 5.0
    } else {
        (z - z.ln_1p()) / (z * z)
    }
}

/// Relative endpoint height above which the profile is considered to touch
/// the grid boundary.
const BOUNDARY_FRACTION: f64 = 0.01;

/// Principal-value Hilbert transform: given samples of −Im⟨g⟩ returns
/// Re⟨g(E)⟩ = (1/π) P∫ (−Im⟨g(E′)⟩)/(E − E′) dE′.
///
/// The profile is linearly interpolated between samples, and beyond the grid
/// continued as y_end·(E_end − Ē)²/(E − Ē)².
pub fn kramers_kronig(absorption: &[f64], grid: &EnergyGrid) -> Result<Vec<f64>> {
    let m = absorption.len();
    if m != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "{m} samples for a {}-point grid",
            grid.len()
        )));
    }
    let peak = absorption.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::InvalidLineshape("absorption profile is identically zero".into()));
    }
    if absorption.iter().any(|&y| y < -1e-12 * peak || !y.is_finite()) {
        return Err(Error::InvalidLineshape("absorption profile must be non-negative".into()));
    }
    let (y_lo, y_hi) = (absorption[0], absorption[m - 1]);
    if y_lo > BOUNDARY_FRACTION * peak || y_hi > BOUNDARY_FRACTION * peak {
        return Err(Error::SupportTouchesBoundary(format!(
            "endpoint values {y_lo:.3e}, {y_hi:.3e} exceed {BOUNDARY_FRACTION} of the peak {peak:.3e}"
        )));
    }

    let weights: Vec<f64> = (0..2 * m - 1)
        .map(|idx| hat_kernel(idx as i64 - (m as i64 - 1)))
        .collect();
    let h = grid.step();
    let c = centroid(grid, absorption);
    let left_len = c - (grid.e_min() - h);
    let right_len = (grid.e_max() + h) - c;

    Ok((0..m)
        .map(|i| {
            let conv: f64 = absorption
                .iter()
                .enumerate()
                .map(|(j, y)| y * weights[i + m - 1 - j])
                .sum();
            let x = grid.energy(i) - c;
            let tails = y_lo * tail_kernel(x / left_len) - y_hi * tail_kernel(-x / right_len);
            (conv + tails) / PI
        })
        .collect())
}

/// Parses a two-column `energy absorption` table. Columns may be separated by
/// whitespace, commas or semicolons; lines starting with `#` are comments.
pub fn parse_lineshape_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',' || c == ';')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(Error::InvalidTable(format!(
                "line {}: expected 2 columns, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| {
                Error::InvalidTable(format!("line {}: cannot parse '{s}'", lineno + 1))
            })
        };
        rows.push((parse(fields[0])?, parse(fields[1])?));
    }
    Ok(rows)
}

/// Linear interpolation of a strictly increasing table onto the grid; zero
/// outside the tabulated range.
pub fn resample_table(table: &[(f64, f64)], grid: &EnergyGrid) -> Result<Vec<f64>> {
    if table.len() < 2 {
        return Err(Error::InvalidTable(format!(
            "need at least 2 rows, got {}",
            table.len()
        )));
    }
    for (i, w) in table.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidTable(format!(
                "energies must increase strictly (rows {} and {})",
                i + 1,
                i + 2
            )));
        }
    }
    if let Some((i, _)) = table
        .iter()
        .enumerate()
        .find(|(_, (e, a))| !(*a >= 0.0) || !e.is_finite() || !a.is_finite())
    {
        return Err(Error::InvalidTable(format!(
            "row {}: absorption must be finite and non-negative",
            i + 1
        )));
    }
    let mut seg = 0;
    Ok((0..grid.len())
        .map(|i| {
            let e = grid.energy(i);
            if e < table[0].0 || e > table[table.len() - 1].0 {
                return 0.0;
            }
            while seg + 2 < table.len() && table[seg + 1].0 < e {
                seg += 1;
            }
            let (e0, a0) = table[seg];
            let (e1, a1) = table[seg + 1];
            let t = ((e - e0) / (e1 - e0)).clamp(0.0, 1.0);
            a0 + t * (a1 - a0)
        })
        .collect())
}

/// ⟨g⟩ from a measured absorption profile: resampled, normalized to unit
/// spectral weight, real part by Kramers-Kronig.
pub fn load_tabulated_lineshape(table: &[(f64, f64)], grid: &EnergyGrid) -> Result<MonomerGreen> {
    let mut absorption = resample_table(table, grid)?;
    let weight = total_weight_with_tails(grid, &absorption);
    if !(weight > 0.0) {
        return Err(Error::InvalidTable("absorption is zero on the grid".into()));
    }
    let scale = PI / weight;
    absorption.iter_mut().for_each(|a| *a *= scale);
    green_from_absorption(grid, absorption)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lorentzian_table(eps: f64, delta: f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let e = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (e, delta / ((e - eps).powi(2) + delta * delta))
            })
            .collect()
    }

    #[test]
    fn grid_validation() {
        assert!(EnergyGrid::new(1.0, 1.0, 100).is_err());
        assert!(EnergyGrid::new(0.0, 1.0, 63).is_err());
        let g = EnergyGrid::new(0.0, 63.0, 64).unwrap();
        assert_eq!(g.step(), 1.0);
        assert_eq!(g.energy(63), 63.0);
    }

    #[test]
    fn electronic_green_values() {
        let grid = EnergyGrid::new(-100.0, 100.0, 201).unwrap();
        let g = electronic_green(0.0, 2.0, &grid).unwrap();
        let at_pole = g.values()[100];
        assert_abs_diff_eq!(at_pole.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(at_pole.im, -0.5, epsilon = 1e-15);
        let far = g.values()[0];
        assert_abs_diff_eq!(far.re, -1.0 / 100.0, epsilon = 1e-5);
        assert!(far.im < 0.0 && far.im > -1e-3);
    }

    #[test]
    fn electronic_green_rejects_nonpositive_delta() {
        let grid = EnergyGrid::new(0.0, 1.0, 64).unwrap();
        assert!(matches!(
            electronic_green(0.5, 0.0, &grid),
            Err(Error::InvalidBroadening(_))
        ));
    }

    #[test]
    fn electronic_green_weight_against_arctangent() {
        let (eps, delta) = (1000.0, 5.0);
        let grid = EnergyGrid::new(eps - 200.0 * delta, eps + 200.0 * delta, 8001).unwrap();
        let g = electronic_green(eps, delta, &grid).unwrap();
        let weight = trapezoid(&grid, &g.absorption());
        let exact = 2.0 * (200.0f64).atan();
        assert!((weight - exact).abs() < 1e-3 * exact);
        assert!((weight - PI).abs() < 0.01 * PI);
    }

    #[test]
    fn poisson_weights() {
        let m = LineshapeModel {
            huang_rhys: 1.0,
            n_peaks: 4,
            ..Default::default()
        };
        let w = m.peak_weights();
        let raw = [1.0, 1.0, 0.5, 1.0 / 6.0];
        let total: f64 = raw.iter().sum();
        for (a, b) in w.iter().zip(raw) {
            assert_abs_diff_eq!(*a, b / total, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_peak_reduces_to_electronic() {
        let model = LineshapeModel {
            huang_rhys: 0.0,
            n_peaks: 1,
            ..Default::default()
        };
        let grid = EnergyGrid::new(10000.0, 30000.0, 2001).unwrap();
        let a = vibronic_green(&model, &grid).unwrap();
        let b = electronic_green(model.e00, model.width, &grid).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn default_model_diagnostics() {
        let grid = EnergyGrid::new(8000.0, 32000.0, 4096).unwrap();
        let g = vibronic_green(&LineshapeModel::default(), &grid).unwrap();
        let d = g.diagnostics();
        assert!(d.is_positive());
        assert!(d.is_normalized(), "{d:?}");
        assert!(d.tail_ok(), "{d:?}");
    }

    #[test]
    fn default_model_envelope() {
        let grid = EnergyGrid::new(8000.0, 32000.0, 24001).unwrap();
        let g = vibronic_green(&LineshapeModel::default(), &grid).unwrap();
        let y = g.absorption();
        let max = y.iter().copied().fold(0.0, f64::max);
        let above: Vec<f64> = (0..y.len())
            .filter(|&i| y[i] >= 0.5 * max)
            .map(|i| grid.energy(i))
            .collect();
        let (lo, hi) = (above[0], *above.last().unwrap());
        assert!((lo - 17000.0).abs() < 500.0, "{lo}");
        assert!(((hi - lo) - 2000.0).abs() < 200.0, "{}", hi - lo);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let grid = EnergyGrid::new(15000.0, 21000.0, 1000).unwrap();
        assert!(matches!(
            vibronic_green(&LineshapeModel::default(), &grid),
            Err(Error::GridTooNarrow(_))
        ));
    }

    #[test]
    fn gaussian_model_is_herglotz() {
        let model = LineshapeModel {
            broadening: Broadening::Gaussian,
            ..Default::default()
        };
        let grid = EnergyGrid::new(8000.0, 32000.0, 4096).unwrap();
        let g = vibronic_green(&model, &grid).unwrap();
        let d = g.diagnostics();
        assert!(d.is_positive());
        assert!(d.is_normalized(), "{d:?}");
        assert!(d.tail_ok(), "{d:?}");
    }

    #[test]
    fn hat_kernel_is_antisymmetric_and_decays() {
        assert_eq!(hat_kernel(0), 0.0);
        for k in 1..50 {
            assert_abs_diff_eq!(hat_kernel(k), -hat_kernel(-k), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(hat_kernel(1000), 1.0 / 1000.0, epsilon = 1e-9);
    }

    #[test]
    fn tail_kernel_series_matches_closed_form() {
        for z in [-9e-4, 5e-4, 9.9e-4] {
            let exact = (z - f64::ln_1p(z)) / (z * z);
            assert_abs_diff_eq!(tail_kernel(z), exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn kk_rejects_boundary_support() {
        let grid = EnergyGrid::new(0.0, 100.0, 101).unwrap();
        let y = vec![1.0; 101];
        assert!(matches!(
            kramers_kronig(&y, &grid),
            Err(Error::SupportTouchesBoundary(_))
        ));
    }

    #[test]
    fn table_parsing() {
        let rows = parse_lineshape_table("# header\n1 2\n3,4\n\n5\t6\n").unwrap();
        assert_eq!(rows, vec![(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]);
        assert!(parse_lineshape_table("1 2 3\n").is_err());
        assert!(parse_lineshape_table("1 x\n").is_err());
    }

    #[test]
    fn table_errors() {
        let grid = EnergyGrid::new(0.0, 10.0, 64).unwrap();
        assert!(load_tabulated_lineshape(&[(1.0, 1.0), (0.5, 1.0)], &grid).is_err());
        assert!(load_tabulated_lineshape(&[(1.0, 0.0), (2.0, 0.0)], &grid).is_err());
        assert!(load_tabulated_lineshape(&[(1.0, -1.0), (2.0, 0.0)], &grid).is_err());
    }

    #[test]
    fn fine_grid_interpolation_preserves_weight() {
        let table = lorentzian_table(0.0, 20.0, -2000.0, 2000.0, 801);
        let grid = EnergyGrid::new(-2000.0, 2000.0, 16001).unwrap();
        let y = resample_table(&table, &grid).unwrap();
        // Trapezoid on the table itself is the piecewise-linear integral.
        let table_weight: f64 = table
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        let resampled = trapezoid(&grid, &y);
        assert!((resampled - table_weight).abs() < 1e-3 * table_weight);
    }

    #[test]
    fn tabulated_scale_invariance() {
        let table = lorentzian_table(0.0, 20.0, -2000.0, 2000.0, 801);
        let scaled: Vec<(f64, f64)> = table.iter().map(|(e, a)| (*e, 7.5 * a)).collect();
        let grid = EnergyGrid::new(-2000.0, 2000.0, 2001).unwrap();
        let a = load_tabulated_lineshape(&table, &grid).unwrap();
        let b = load_tabulated_lineshape(&scaled, &grid).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() <= 1e-12 * x.norm().max(1e-12));
        }
    }

    #[test]
    fn tabulated_lorentzian_matches_electronic_green() {
        let (eps, delta) = (0.0, 20.0);
        let table = lorentzian_table(eps, delta, -3000.0, 3000.0, 3001);
        let grid = EnergyGrid::new(-3000.0, 3000.0, 3001).unwrap();
        let tab = load_tabulated_lineshape(&table, &grid).unwrap();
        let exact = electronic_green(eps, delta, &grid).unwrap();
        let scale = exact.values().iter().map(|g| g.norm()).fold(0.0, f64::max);
        let err = tab
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 0.005 * scale, "relative error {}", err / scale);
    }
}
