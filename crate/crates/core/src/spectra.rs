//! Stick spectra, monomer spectra and CES aggregate spectra.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::excitonics::{oscillator_strengths, ExcitonBasis};
use crate::geometry::{AggregateGeometry, Vec3};
use crate::lineshape::{total_weight_with_tails, EnergyGrid, MonomerGreen};

/// Light polarization: a fixed unit vector or the isotropic average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polarization {
    Isotropic,
    Fixed(Vec3),
}

impl Polarization {
    pub fn isotropic() -> Self {
        Polarization::Isotropic
    }

    /// Normalizes `direction`; errors on zero or non-finite input.
    pub fn fixed(direction: Vec3) -> Result<Self> {
        let norm = direction.norm();
        if !(norm > 1e-12) || !norm.is_finite() {
            return Err(Error::InvalidDipole(format!(
                "polarization vector must be non-zero, got {direction:?}"
            )));
        }
        Ok(Polarization::Fixed(direction / norm))
    }

    pub fn axes() -> [Polarization; 3] {
        [
            Polarization::Fixed(Vec3::x()),
            Polarization::Fixed(Vec3::y()),
            Polarization::Fixed(Vec3::z()),
        ]
    }

    /// |e·μ|², or |μ|²/3 for the isotropic average.
    pub fn weight(&self, mu: &Vec3) -> f64 {
        match self {
            Polarization::Isotropic => mu.norm_squared() / 3.0,
            Polarization::Fixed(e) => e.dot(mu).powi(2),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Polarization::Isotropic => "isotropic".to_string(),
            Polarization::Fixed(e) => format!("fixed ({}, {}, {})", e.x, e.y, e.z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyUnit {
    /// Dimensionless C_k / |V_ref|.
    ReferenceCoupling,
    /// Absolute cm⁻¹.
    Wavenumber,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stick {
    /// 0-based state index in ascending energy order.
    pub state: usize,
    pub energy: f64,
    pub strength: f64,
    pub cluster_strength: f64,
    pub participation_ratio: f64,
}

/// A pole of the CES expression outside the support of −Im⟨g⟩, carried as
/// a delta line of integrated weight `weight` (in units of ∫−Im A dE).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOffLine {
    pub state: usize,
    pub energy: f64,
    pub weight: f64,
}

/// Sampled −Im A(E), optionally per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSpectrum {
    pub grid: EnergyGrid,
    pub absorption: Vec<f64>,
    pub partials: Option<Vec<Vec<f64>>>,
}

impl ContinuousSpectrum {
    /// ∫ −Im A dE including the 1/E² tail continuation beyond the grid.
    pub fn integrated(&self) -> f64 {
        total_weight_with_tails(&self.grid, &self.absorption)
    }

    pub fn min_value(&self) -> f64 {
        self.absorption.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub sticks: Vec<Stick>,
    pub energy_unit: EnergyUnit,
    pub continuous: Option<ContinuousSpectrum>,
    pub coupling_cm1: Option<f64>,
    pub polarization: Polarization,
    /// Stick strengths sum to one.
    pub normalized: bool,
    /// No state carries strength for this polarization.
    pub zero_strength: bool,
    /// Grid indices where |1 − ⟨g⟩C_k| < 1e-12 for some bright state.
    pub pole_flags: Vec<usize>,
    pub split_off: Vec<SplitOffLine>,
    pub label: Option<String>,
}

impl SpectrumResult {
    fn sticks_only(
        sticks: Vec<Stick>,
        energy_unit: EnergyUnit,
        pol: &Polarization,
        zero_strength: bool,
    ) -> Self {
        SpectrumResult {
            sticks,
            energy_unit,
            continuous: None,
            coupling_cm1: None,
            polarization: *pol,
            normalized: !zero_strength,
            zero_strength,
            pole_flags: Vec::new(),
            split_off: Vec::new(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn total_strength(&self) -> f64 {
        self.sticks.iter().map(|s| s.strength).sum()
    }
}

fn make_sticks(basis: &ExcitonBasis, pol: &Polarization, energies: &[f64]) -> (Vec<Stick>, bool) {
    let f = oscillator_strengths(basis, pol);
    let sticks = energies
        .iter()
        .enumerate()
        .map(|(k, &energy)| Stick {
            state: k,
            energy,
            strength: f.per_state[k],
            cluster_strength: f.cluster[k],
            participation_ratio: basis.participation_ratios()[k],
        })
        .collect();
    (sticks, f.zero_strength)
}

/// Sticks at C_k/|V_ref| (ε = 0) with normalized oscillator strengths.
pub fn stick_spectrum(basis: &ExcitonBasis, pol: &Polarization) -> Result<SpectrumResult> {
    let energies = basis.scaled_energies()?;
    let (sticks, zero) = make_sticks(basis, pol, &energies);
    Ok(SpectrumResult::sticks_only(
        sticks,
        EnergyUnit::ReferenceCoupling,
        pol,
        zero,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CesOptions {
    /// Keep per-state partial spectra.
    pub keep_partials: bool,
    /// Evaluate grid points on the rayon pool; output is bit-identical.
    pub parallel: bool,
}

const POLE_TOLERANCE: f64 = 1e-12;
/// −Im⟨g⟩ below this fraction of its maximum counts as outside the support.
const SUPPORT_FLOOR: f64 = 1e-9;

fn ces_term(g: Complex64, c: f64) -> f64 {
    let d = 1.0 - g * c;
    if d.norm() == 0.0 {
        return 0.0;
    }
    -(g / d).im
}

/// Poles of g/(1 − gC) where −Im⟨g⟩ vanishes: roots of 1 − C Re⟨g⟩ with
/// residue 1/(C²|dRe⟨g⟩/dE|).
fn split_off_poles(g: &MonomerGreen, c: f64) -> Vec<(usize, f64, f64)> {
    if c == 0.0 {
        return Vec::new();
    }
    let grid = g.grid();
    let vals = g.values();
    let floor = SUPPORT_FLOOR * vals.iter().map(|v| -v.im).fold(0.0, f64::max);
    let h = grid.step();
    let target = 1.0 / c;
    let mut poles = Vec::new();
    for i in 0..vals.len() - 1 {
        let (a, b) = (vals[i], vals[i + 1]);
        if -a.im > floor || -b.im > floor {
            continue;
        }
        let (fa, fb) = (a.re - target, b.re - target);
        if fa == 0.0 || fa.signum() == fb.signum() {
            continue;
        }
        let slope = (b.re - a.re) / h;
        if slope >= 0.0 {
            // Outside the support Re⟨g⟩ decreases; a rising crossing is not a pole.
            continue;
        }
        let t = fa / (fa - fb);
        let residue = 1.0 / (c * c * slope.abs());
        poles.push((i, t, residue));
    }
    poles
}

/// Errors if a bright state's pole lies beyond the grid.
fn check_poles_inside(g: &MonomerGreen, c: f64) -> Result<()> {
    let vals = g.values();
    let grid = g.grid();
    let outside = if c > 0.0 {
        vals[vals.len() - 1].re > 1.0 / c
    } else if c < 0.0 {
        vals[0].re < 1.0 / c
    } else {
        false
    };
    if outside {
        return Err(Error::GridTooNarrow(format!(
            "split-off state at C = {c:.3} cm^-1 lies outside the grid [{}, {}]",
            grid.e_min(),
            grid.e_max()
        )));
    }
    Ok(())
}

/// CES absorption −Im Σ_k f_k ⟨g⟩/(1 − ⟨g⟩C_k) with C_k in cm⁻¹ from
/// `coupling_cm1` = |V_ref|. Poles outside the support of −Im⟨g⟩ are
/// located on the grid and added as delta lines (cloud-in-cell onto the two
/// neighbouring nodes) so the sampled spectrum keeps its full weight.
pub fn ces_spectrum(
    basis: &ExcitonBasis,
    pol: &Polarization,
    g: &MonomerGreen,
    coupling_cm1: f64,
    options: CesOptions,
) -> Result<SpectrumResult> {
    let energies = basis.absolute_energies(coupling_cm1)?;
    g.check_tails()?;
    let (sticks, zero) = make_sticks(basis, pol, &energies);
    let bright: Vec<(usize, f64, f64)> = sticks
        .iter()
        .filter(|s| s.strength > 0.0)
        .map(|s| (s.state, s.strength, s.energy))
        .collect();
    for &(_, _, c) in &bright {
        check_poles_inside(g, c)?;
    }

    let grid = *g.grid();
    let vals = g.values();
    let point = |i: usize| -> f64 {
        bright
            .iter()
            .map(|&(_, f, c)| f * ces_term(vals[i], c))
            .sum()
    };
    let mut absorption: Vec<f64> = if options.parallel {
        (0..grid.len()).into_par_iter().map(point).collect()
    } else {
        (0..grid.len()).map(point).collect()
    };
    let mut partials: Option<Vec<Vec<f64>>> = options.keep_partials.then(|| {
        sticks
            .iter()
            .map(|s| {
                vals.iter()
                    .map(|gv| s.strength * ces_term(*gv, s.energy))
                    .collect()
            })
            .collect()
    });

    let mut pole_flags: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            bright
                .iter()
                .any(|&(_, _, c)| (1.0 - vals[i] * c).norm() < POLE_TOLERANCE)
        })
        .collect();
    pole_flags.dedup();

    let h = grid.step();
    let last = grid.len() - 1;
    let mut split_off = Vec::new();
    for &(k, f, c) in &bright {
        for (i, t, residue) in split_off_poles(g, c) {
            let weight = PI * f * residue;
            let node_density = |node: usize, share: f64| {
                let end_factor = if node == 0 || node == last { 2.0 } else { 1.0 };
                weight * share * end_factor / h
            };
            let (lo, hi) = (node_density(i, 1.0 - t), node_density(i + 1, t));
            absorption[i] += lo;
            absorption[i + 1] += hi;
            if let Some(p) = partials.as_mut() {
                p[k][i] += lo;
                p[k][i + 1] += hi;
            }
            split_off.push(SplitOffLine {
                state: k,
                energy: grid.energy(i) + t * h,
                weight,
            });
        }
    }

    Ok(SpectrumResult {
        sticks,
        energy_unit: EnergyUnit::Wavenumber,
        continuous: Some(ContinuousSpectrum {
            grid,
            absorption,
            partials,
        }),
        coupling_cm1: Some(coupling_cm1),
        polarization: *pol,
        normalized: !zero,
        zero_strength: zero,
        pole_flags,
        split_off,
        label: None,
    })
}

fn monomer_from_weight(total: f64, g: &MonomerGreen, pol: &Polarization) -> SpectrumResult {
    let absorption = g.values().iter().map(|v| -total * v.im).collect();
    SpectrumResult {
        sticks: Vec::new(),
        energy_unit: EnergyUnit::Wavenumber,
        continuous: Some(ContinuousSpectrum {
            grid: *g.grid(),
            absorption,
            partials: None,
        }),
        coupling_cm1: None,
        polarization: *pol,
        normalized: false,
        zero_strength: !(total > 0.0),
        pole_flags: Vec::new(),
        split_off: Vec::new(),
        label: None,
    }
}

/// Site-basis monomer spectrum −Im (Σ_n |e·μ_n|²)⟨g⟩.
pub fn monomer_spectrum(
    geom: &AggregateGeometry,
    pol: &Polarization,
    g: &MonomerGreen,
) -> SpectrumResult {
    let total: f64 = geom.dipoles().map(|mu| pol.weight(&mu)).sum();
    monomer_from_weight(total, g, pol)
}

/// Exciton-basis monomer spectrum −Im (Σ_k |e·μ_k|²)⟨g⟩.
pub fn monomer_spectrum_exciton(
    basis: &ExcitonBasis,
    pol: &Polarization,
    g: &MonomerGreen,
) -> SpectrumResult {
    let total: f64 = basis.raw_strengths(pol).iter().sum();
    monomer_from_weight(total, g, pol)
}

/// Purely electronic spectral function −Im Σ_k f_k/(E − ε − C_k + iδ),
/// evaluated in closed form.
pub fn electronic_spectral_function(
    basis: &ExcitonBasis,
    pol: &Polarization,
    epsilon: f64,
    delta: f64,
    coupling_cm1: f64,
    grid: &EnergyGrid,
) -> Result<SpectrumResult> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidBroadening(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let energies = basis.absolute_energies(coupling_cm1)?;
    let (sticks, zero) = make_sticks(basis, pol, &energies);
    let absorption = (0..grid.len())
        .map(|i| {
            let e = grid.energy(i);
            sticks
                .iter()
                .map(|s| s.strength * delta / ((e - epsilon - s.energy).powi(2) + delta * delta))
                .sum()
        })
        .collect();
    Ok(SpectrumResult {
        sticks,
        energy_unit: EnergyUnit::Wavenumber,
        continuous: Some(ContinuousSpectrum {
            grid: *grid,
            absorption,
            partials: None,
        }),
        coupling_cm1: Some(coupling_cm1),
        polarization: *pol,
        normalized: !zero,
        zero_strength: zero,
        pole_flags: Vec::new(),
        split_off: Vec::new(),
        label: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excitonics::{coupling_matrix, diagonalize, CouplingMatrix};
    use crate::geometry::{build_chain, build_ring};
    use crate::lineshape::{electronic_green, vibronic_green, LineshapeModel};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn default_grid() -> EnergyGrid {
        EnergyGrid::new(8000.0, 32000.0, 4096).unwrap()
    }

    #[test]
    fn fixed_polarization_is_normalized() {
        let p = Polarization::fixed(Vec3::new(3.0, 4.0, 0.0)).unwrap();
        match p {
            Polarization::Fixed(e) => assert_abs_diff_eq!(e.norm(), 1.0, epsilon = 1e-12),
            _ => unreachable!(),
        }
        assert!(Polarization::fixed(Vec3::zeros()).is_err());
    }

    #[test]
    fn chain_h_and_j_configurations() {
        let h = diagonalize(&coupling_matrix(&build_chain(19, Vec3::z()).unwrap()).unwrap()).unwrap();
        let s = stick_spectrum(&h, &Polarization::isotropic()).unwrap();
        let top = s.sticks.iter().max_by(|a, b| a.strength.total_cmp(&b.strength)).unwrap();
        assert_eq!(top.state, 18);
        assert!(top.strength > 0.8);

        let j = diagonalize(&coupling_matrix(&build_chain(19, Vec3::x()).unwrap()).unwrap()).unwrap();
        let s = stick_spectrum(&j, &Polarization::isotropic()).unwrap();
        assert!(s.sticks[0].strength > 0.8);
        assert_abs_diff_eq!(s.total_strength(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dark_polarization_flags_zero_strength() {
        let b = diagonalize(&coupling_matrix(&build_chain(5, Vec3::z()).unwrap()).unwrap()).unwrap();
        let s = stick_spectrum(&b, &Polarization::fixed(Vec3::x()).unwrap()).unwrap();
        assert!(s.zero_strength);
        assert!(!s.normalized);
        assert!(s.sticks.iter().all(|x| x.strength == 0.0));
    }

    #[test]
    fn single_state_peak_position() {
        let cm = CouplingMatrix::from_parts(DMatrix::from_element(1, 1, 0.5), 1.0, vec![Vec3::x()])
            .unwrap();
        let b = diagonalize(&cm).unwrap();
        let grid = EnergyGrid::new(0.0, 20000.0, 20001).unwrap();
        let g = electronic_green(10000.0, 5.0, &grid).unwrap();
        let s = ces_spectrum(&b, &Polarization::isotropic(), &g, 300.0, CesOptions::default())
            .unwrap();
        let c = s.continuous.unwrap();
        let imax = (0..grid.len())
            .max_by(|&i, &j| c.absorption[i].total_cmp(&c.absorption[j]))
            .unwrap();
        assert!((grid.energy(imax) - 10150.0).abs() <= grid.step());
    }

    #[test]
    fn ces_matches_electronic_function_for_one_level_green() {
        let b = diagonalize(&coupling_matrix(&build_chain(6, Vec3::x()).unwrap()).unwrap()).unwrap();
        let grid = EnergyGrid::new(10000.0, 30000.0, 4001).unwrap();
        let g = electronic_green(20000.0, 20.0, &grid).unwrap();
        let pol = Polarization::isotropic();
        let a = ces_spectrum(&b, &pol, &g, 300.0, CesOptions::default()).unwrap();
        let e = electronic_spectral_function(&b, &pol, 20000.0, 20.0, 300.0, &grid).unwrap();
        let (a, e) = (a.continuous.unwrap(), e.continuous.unwrap());
        let scale = e.absorption.iter().copied().fold(0.0, f64::max);
        for (x, y) in a.absorption.iter().zip(&e.absorption) {
            assert!((x - y).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn ces_parallel_is_bit_identical() {
        let b = diagonalize(&coupling_matrix(&build_ring(16, 30.0, 90.0).unwrap()).unwrap()).unwrap();
        let g = vibronic_green(&LineshapeModel::default(), &default_grid()).unwrap();
        let pol = Polarization::isotropic();
        let seq = ces_spectrum(&b, &pol, &g, 150.0, CesOptions::default()).unwrap();
        let par = ces_spectrum(
            &b,
            &pol,
            &g,
            150.0,
            CesOptions {
                parallel: true,
                keep_partials: false,
            },
        )
        .unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn partials_sum_to_total() {
        let b = diagonalize(&coupling_matrix(&build_chain(8, Vec3::z()).unwrap()).unwrap()).unwrap();
        let g = vibronic_green(&LineshapeModel::default(), &default_grid()).unwrap();
        let s = ces_spectrum(
            &b,
            &Polarization::isotropic(),
            &g,
            300.0,
            CesOptions {
                keep_partials: true,
                parallel: false,
            },
        )
        .unwrap();
        let c = s.continuous.unwrap();
        let parts = c.partials.as_ref().unwrap();
        for i in 0..c.grid.len() {
            let sum: f64 = parts.iter().map(|p| p[i]).sum();
            assert!((sum - c.absorption[i]).abs() <= 1e-12 * c.absorption[i].abs().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn compact_support_split_off_keeps_weight() {
        // Rectangular-ish absorption band via a tabulated Gaussian; strong
        // coupling pushes the lowest state below the band.
        use crate::lineshape::{Broadening, LineshapeModel};
        let model = LineshapeModel {
            broadening: Broadening::Gaussian,
            width: 150.0,
            n_peaks: 1,
            huang_rhys: 0.0,
            ..Default::default()
        };
        let grid = EnergyGrid::new(8000.0, 32000.0, 4096).unwrap();
        let g = vibronic_green(&model, &grid).unwrap();
        let b = diagonalize(&coupling_matrix(&build_chain(10, Vec3::x()).unwrap()).unwrap()).unwrap();
        let s = ces_spectrum(&b, &Polarization::isotropic(), &g, 1000.0, CesOptions::default())
            .unwrap();
        assert!(!s.split_off.is_empty());
        let c = s.continuous.unwrap();
        assert!((c.integrated() / PI - 1.0).abs() < 0.01, "{}", c.integrated() / PI);
        assert!(c.min_value() >= -1e-12);
    }

    #[test]
    fn pole_beyond_grid_is_an_error() {
        let b = diagonalize(&coupling_matrix(&build_chain(10, Vec3::x()).unwrap()).unwrap()).unwrap();
        let g = vibronic_green(&LineshapeModel::default(), &default_grid()).unwrap();
        let r = ces_spectrum(&b, &Polarization::isotropic(), &g, 100000.0, CesOptions::default());
        assert!(matches!(r, Err(Error::GridTooNarrow(_))));
    }

    #[test]
    fn electronic_function_requires_positive_delta() {
        let b = diagonalize(&coupling_matrix(&build_chain(3, Vec3::x()).unwrap()).unwrap()).unwrap();
        let grid = default_grid();
        assert!(electronic_spectral_function(&b, &Polarization::isotropic(), 0.0, 0.0, 1.0, &grid)
            .is_err());
    }
}
