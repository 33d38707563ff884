//! Tab-delimited text tables with `#` header lines.

use std::fmt::Write as _;

use crate::excitonics::ExcitonBasis;
use crate::geometry::AggregateGeometry;
use crate::spectra::{EnergyUnit, SpectrumResult};

fn header(out: &mut String, lines: &[String]) {
    for l in lines {
        let _ = writeln!(out, "# {l}");
    }
}

pub fn geometry_table(geom: &AggregateGeometry) -> String {
    let mut out = String::new();
    header(
        &mut out,
        &[
            format!("geometry: {}", geom.spec().describe()),
            "n\tx\ty\tz\tmx\tmy\tmz".to_string(),
        ],
    );
    for (i, s) in geom.sites().iter().enumerate() {
        let (p, d) = (s.position, s.dipole);
        let _ = writeln!(
            out,
            "{}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}",
            i + 1,
            p.x,
            p.y,
            p.z,
            d.x,
            d.y,
            d.z
        );
    }
    out
}

/// Columns k, C_k_over_absV (or C_k_cm1), strength, cluster_strength, PR.
pub fn stick_table(spectrum: &SpectrumResult) -> String {
    let mut out = String::new();
    let energy_col = match spectrum.energy_unit {
        EnergyUnit::ReferenceCoupling => "C_k_over_absV",
        EnergyUnit::Wavenumber => "C_k_cm1",
    };
    let norm = if spectrum.zero_strength {
        "zero total strength (all dark)".to_string()
    } else {
        "strengths normalized to unit sum".to_string()
    };
    let mut lines = vec![
        format!("polarization: {}", spectrum.polarization.describe()),
        format!("normalization: {norm}"),
    ];
    if let Some(v) = spectrum.coupling_cm1 {
        lines.push(format!("coupling_cm1: {v}"));
    }
    lines.push(format!("k\t{energy_col}\tstrength\tcluster_strength\tPR"));
    header(&mut out, &lines);
    for s in &spectrum.sticks {
        let _ = writeln!(
            out,
            "{}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}",
            s.state + 1,
            s.energy,
            s.strength,
            s.cluster_strength,
            s.participation_ratio
        );
    }
    out
}

/// Columns energy_cm1, absorption; split-off delta lines are listed in the
/// header.
pub fn spectrum_table(spectrum: &SpectrumResult) -> Option<String> {
    let c = spectrum.continuous.as_ref()?;
    let mut out = String::new();
    let mut lines = vec![format!("polarization: {}", spectrum.polarization.describe())];
    if let Some(v) = spectrum.coupling_cm1 {
        lines.push(format!("coupling_cm1: {v}"));
    }
    for l in &spectrum.split_off {
        lines.push(format!(
            "split_off: state {} at {:.6} cm^-1, weight {:.6e}",
            l.state + 1,
            l.energy,
            l.weight
        ));
    }
    if !spectrum.pole_flags.is_empty() {
        lines.push(format!("pole_flags: {:?}", spectrum.pole_flags));
    }
    lines.push("energy_cm1\tabsorption".to_string());
    header(&mut out, &lines);
    for (i, a) in c.absorption.iter().enumerate() {
        let _ = writeln!(out, "{:.6}\t{:.12e}", c.grid.energy(i), a);
    }
    Some(out)
}

/// One row per state in ascending energy: k, energy, a_1k..a_Nk, a_1k²..a_Nk².
pub fn wavefunction_table(basis: &ExcitonBasis) -> String {
    let n = basis.n();
    let mut out = String::new();
    let mut cols = vec!["k".to_string(), "C_k".to_string()];
    cols.extend((1..=n).map(|i| format!("a_{i}")));
    cols.extend((1..=n).map(|i| format!("a2_{i}")));
    header(
        &mut out,
        &[
            "states ascending in energy; C_k in units of mu^2/a^3".to_string(),
            cols.join("\t"),
        ],
    );
    let v = basis.vectors();
    for k in 0..n {
        let mut row = vec![(k + 1).to_string(), format!("{:.12e}", basis.energies()[k])];
        row.extend((0..n).map(|i| format!("{:.12e}", v[(i, k)])));
        row.extend((0..n).map(|i| format!("{:.12e}", v[(i, k)].powi(2))));
        let _ = writeln!(out, "{}", row.join("\t"));
    }
    out
}
