//! Dipole-dipole coupling, exciton eigenbasis and per-state observables.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{AggregateGeometry, GeometryKind, Vec3};
use crate::spectra::Polarization;

/// Point-dipole interaction between unit dipoles `d1` at `r1` and `d2` at
/// `r2`, in units of μ²/a³.
pub fn dipole_coupling(r1: &Vec3, d1: &Vec3, r2: &Vec3, d2: &Vec3) -> f64 {
    let sep = r1 - r2;
    let dist2 = sep.norm_squared();
    let dist = dist2.sqrt();
    let inv3 = 1.0 / (dist2 * dist);
    d1.dot(d2) * inv3 - 3.0 * d1.dot(&sep) * d2.dot(&sep) * inv3 / dist2
}

/// Which pairs enter the coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CouplingRange {
    #[default]
    All,
    /// Only index-adjacent pairs (closing the loop for rings and ellipses).
    /// Intended for checks against closed forms.
    NearestNeighbour,
}

/// The energy unit that dimensionless energies are quoted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ReferenceCoupling {
    /// V₁₂ of the undistorted geometry (Φ=0 chain, f=0 ring) with the same
    /// dipole specification, sign retained.
    #[default]
    UndistortedNeighbour,
    /// μ²/a³ itself, i.e. the perpendicular-dipole nearest-neighbour value.
    DipoleUnit,
}

/// Symmetric coupling matrix in units of μ²/a³ plus the reference coupling
/// used as energy unit.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    values: DMatrix<f64>,
    reference_coupling: f64,
    dipoles: Vec<Vec3>,
}

impl CouplingMatrix {
    /// Builds from explicit values. `dipoles` are the site dipoles the
    /// collective dipoles are assembled from.
    pub fn from_parts(
        values: DMatrix<f64>,
        reference_coupling: f64,
        dipoles: Vec<Vec3>,
    ) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n || dipoles.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix with {} dipoles",
                values.nrows(),
                values.ncols(),
                dipoles.len()
            )));
        }
        Ok(CouplingMatrix {
            values,
            reference_coupling,
            dipoles,
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn reference_coupling(&self) -> f64 {
        self.reference_coupling
    }

    pub fn dipoles(&self) -> &[Vec3] {
        &self.dipoles
    }

    /// First column V_{n,1}, n = 1…N.
    pub fn first_column(&self) -> Vec<f64> {
        self.values.column(0).iter().copied().collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.amax()
    }
}

/// All-pairs coupling with the undistorted nearest-neighbour reference.
pub fn coupling_matrix(geom: &AggregateGeometry) -> Result<CouplingMatrix> {
    coupling_matrix_with(geom, CouplingRange::All, ReferenceCoupling::default())
}

pub fn coupling_matrix_with(
    geom: &AggregateGeometry,
    range: CouplingRange,
    reference: ReferenceCoupling,
) -> Result<CouplingMatrix> {
    let sites = geom.sites();
    let n = sites.len();
    let closed = matches!(geom.kind(), GeometryKind::Ring | GeometryKind::Ellipse);
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (closed && i == 0 && j == n - 1);
            if range == CouplingRange::NearestNeighbour && !adjacent {
                continue;
            }
            let (a, b) = (&sites[i], &sites[j]);
            if (a.position - b.position).norm() <= 1e-9 {
                return Err(Error::SingularGeometry(i + 1, j + 1));
            }
            let v = dipole_coupling(&a.position, &a.dipole, &b.position, &b.dipole);
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    let reference_coupling = match reference {
        ReferenceCoupling::DipoleUnit => 1.0,
        ReferenceCoupling::UndistortedNeighbour => {
            let undistorted = geom.undistorted()?;
            let s = undistorted.sites();
            dipole_coupling(&s[0].position, &s[0].dipole, &s[1].position, &s[1].dipole)
        }
    };
    CouplingMatrix::from_parts(values, reference_coupling, geom.dipoles().collect())
}

/// Exciton eigenbasis: eigenvalues C_k ascending (units of μ²/a³),
/// eigenvectors as columns, collective dipoles and participation ratios.
#[derive(Debug, Clone)]
pub struct ExcitonBasis {
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
    collective_dipoles: Vec<Vec3>,
    participation: Vec<f64>,
    reference_coupling: f64,
    coupling_scale: f64,
}

impl ExcitonBasis {
    pub fn n(&self) -> usize {
        self.energies.len()
    }

    /// C_k in units of μ²/a³.
    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// a_{nk}: site n, state k.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn collective_dipoles(&self) -> &[Vec3] {
        &self.collective_dipoles
    }

    pub fn participation_ratios(&self) -> &[f64] {
        &self.participation
    }

    pub fn reference_coupling(&self) -> f64 {
        self.reference_coupling
    }

    /// C_k / |V_ref|.
    pub fn scaled_energies(&self) -> Result<Vec<f64>> {
        let unit = self.reference_coupling.abs();
        if !(unit > 1e-12) {
            return Err(Error::ZeroReferenceCoupling);
        }
        Ok(self.energies.iter().map(|c| c / unit).collect())
    }

    /// C_k in cm⁻¹ when |V_ref| corresponds to `coupling_cm1`.
    pub fn absolute_energies(&self, coupling_cm1: f64) -> Result<Vec<f64>> {
        if !(coupling_cm1 > 0.0) || !coupling_cm1.is_finite() {
            return Err(Error::InvalidCoupling(coupling_cm1));
        }
        Ok(self
            .scaled_energies()?
            .into_iter()
            .map(|c| c * coupling_cm1)
            .collect())
    }

    /// Groups of consecutive states whose energies differ by less than
    /// `1e-9 · max|V|`.
    pub fn degenerate_clusters(&self) -> Vec<Range<usize>> {
        let tol = 1e-9 * self.coupling_scale.max(f64::MIN_POSITIVE);
        let mut clusters = Vec::new();
        let mut start = 0;
        for k in 1..=self.n() {
            if k == self.n() || self.energies[k] - self.energies[k - 1] >= tol {
                clusters.push(start..k);
                start = k;
            }
        }
        clusters
    }

    /// Oscillator weight |e·μ_k|² of every state (isotropic: |μ_k|²/3).
    pub fn raw_strengths(&self, pol: &Polarization) -> Vec<f64> {
        self.collective_dipoles
            .iter()
            .map(|mu| pol.weight(mu))
            .collect()
    }
}

/// Full real-symmetric eigendecomposition, eigenvalues ascending.
pub fn diagonalize(v: &CouplingMatrix) -> Result<ExcitonBasis> {
    let n = v.n();
    let m = v.values();
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::SolverFailure("coupling matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::SolverFailure("symmetric eigen-solver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let energies = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        // Sign convention: largest-magnitude component positive.
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }

    let dipoles = v.dipoles();
    let collective_dipoles = (0..n)
        .map(|k| {
            vectors
                .column(k)
                .iter()
                .zip(dipoles)
                .fold(Vec3::zeros(), |acc, (a, d)| acc + d * *a)
        })
        .collect();
    let participation = (0..n)
        .map(|k| participation_ratio(vectors.column(k).iter().copied()))
        .collect();

    Ok(ExcitonBasis {
        energies,
        vectors,
        collective_dipoles,
        participation,
        reference_coupling: v.reference_coupling(),
        coupling_scale: v.max_abs(),
    })
}

/// Inverse participation: 1 / Σ_n a_n⁴ for a normalized vector.
pub fn participation_ratio(amplitudes: impl IntoIterator<Item = f64>) -> f64 {
    1.0 / amplitudes.into_iter().map(|a| a.powi(4)).sum::<f64>()
}

/// Analytic eigenvalues of an even-N circulant ring from its first column
/// V_{n,1}, returned in the order j = 0…N−1:
///
/// E_j = 2 Σ_{m=1}^{N/2−1} cos(2πjm/N) V_{1+m,1} + (−1)^j V_{N/2+1,1}
pub fn ring_eigenvalues_analytic(first_column: &[f64]) -> Result<Vec<f64>> {
    let n = first_column.len();
    if n % 2 != 0 {
        return Err(Error::UnsupportedParity(n));
    }
    if n < 2 {
        return Err(Error::InvalidGeometry(format!("ring needs N >= 2, got {n}")));
    }
    let half = n / 2;
    Ok((0..n)
        .map(|j| {
            let k = 2.0 * PI * j as f64 / n as f64;
            let sum: f64 = (1..half)
                .map(|m| (k * m as f64).cos() * first_column[m])
                .sum();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            2.0 * sum + sign * first_column[half]
        })
        .collect())
}

/// Normalized per-state oscillator strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorStrengths {
    /// f_k, summing to one unless `zero_strength`.
    pub per_state: Vec<f64>,
    /// Strength summed over each state's degenerate cluster.
    pub cluster: Vec<f64>,
    pub clusters: Vec<Range<usize>>,
    /// Σ_k |e·μ_k|² before normalization.
    pub total: f64,
    /// Every state is dark for this polarization; strengths are zeros.
    pub zero_strength: bool,
}

pub fn oscillator_strengths(basis: &ExcitonBasis, pol: &Polarization) -> OscillatorStrengths {
    let raw = basis.raw_strengths(pol);
    let total: f64 = raw.iter().sum();
    let zero_strength = !(total > 1e-12 * basis.n() as f64);
    let per_state: Vec<f64> = if zero_strength {
        vec![0.0; raw.len()]
    } else {
        raw.iter().map(|w| w / total).collect()
    };
    let clusters = basis.degenerate_clusters();
    let mut cluster = vec![0.0; per_state.len()];
    for r in &clusters {
        let s: f64 = per_state[r.clone()].iter().sum();
        for c in &mut cluster[r.clone()] {
            *c = s;
        }
    }
    OscillatorStrengths {
        per_state,
        cluster,
        clusters,
        total,
        zero_strength,
    }
}

/// Rotates a set of orthonormal vectors spanning one subspace into the
/// basis that maximizes Σ_k Σ_n a_{nk}⁴ (pairwise Jacobi sweeps).
pub fn maximally_localized(vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = vectors.to_vec();
    let m = out.len();
    for _sweep in 0..200 {
        let mut largest = 0.0f64;
        for p in 0..m {
            for q in (p + 1)..m {
                let (u, v) = (&out[p], &out[q]);
                // Σ x⁴+y⁴ = const − 2 Σ x²y²; Σ x²y² = K + ½(α cos4θ + β sin4θ).
                let mut alpha = 0.0;
                let mut beta = 0.0;
                for (a, b) in u.iter().zip(v.iter()) {
                    let d = b * b - a * a;
                    let pr = a * b;
                    alpha += pr * pr - 0.25 * d * d;
                    beta += d * pr;
                }
                let amp = alpha.hypot(beta);
                if amp < 1e-300 {
                    continue;
                }
                let psi = (-beta).atan2(-alpha);
                let theta = 0.25 * psi;
                if theta.abs() < 1e-14 {
                    continue;
                }
                largest = largest.max(theta.abs());
                let (s, c) = theta.sin_cos();
                let x = u * c + v * s;
                let y = v * c - u * s;
                out[p] = x;
                out[q] = y;
            }
        }
        if largest < 1e-12 {
            break;
        }
    }
    out
}

/// Participation ratios of the maximally localized combination of the given
/// states (indices into the ascending basis).
pub fn localized_participation(basis: &ExcitonBasis, states: Range<usize>) -> Vec<f64> {
    let cols: Vec<DVector<f64>> = states
        .map(|k| basis.vectors().column(k).clone_owned())
        .collect();
    maximally_localized(&cols)
        .iter()
        .map(|v| participation_ratio(v.iter().copied()))
        .collect()
}
