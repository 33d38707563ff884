//! Test-only oracles, independent of the library's numerical paths.
#![allow(dead_code)]

use rand::Rng;

pub type P3 = [f64; 3];

fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Point-dipole coupling written out from the textbook formula.
pub fn coupling(r1: &P3, d1: &P3, r2: &P3, d2: &P3) -> f64 {
    let x = [r2[0] - r1[0], r2[1] - r1[1], r2[2] - r1[2]];
    let r2n = dot(&x, &x);
    let r = r2n.sqrt();
    dot(d1, d2) / (r * r2n) - 3.0 * dot(d1, &x) * dot(d2, &x) / (r2n * r2n * r)
}

pub fn coupling_matrix(pos: &[P3], dip: &[P3]) -> Vec<Vec<f64>> {
    let n = pos.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[i][j] = coupling(&pos[i], &dip[i], &pos[j], &dip[j]);
            }
        }
    }
    m
}

/// Number of characteristic-polynomial roots below x: sign changes in the
/// sequence of leading principal minors of A − xI (Sylvester's law of
/// inertia), each minor evaluated by pivoted elimination.
pub fn roots_below(a: &[Vec<f64>], x: f64) -> usize {
    let n = a.len();
    let mut previous = 1.0f64;
    let mut changes = 0;
    for k in 1..=n {
        let block: Vec<Vec<f64>> = a[..k].iter().map(|row| row[..k].to_vec()).collect();
        let mut d = char_poly(&block, x);
        if d == 0.0 {
            d = -previous * 1e-300;
        }
        if d.signum() != previous.signum() {
            changes += 1;
        }
        previous = d;
    }
    changes
}

/// det(A − xI) by Gaussian elimination with partial pivoting.
pub fn char_poly(a: &[Vec<f64>], x: f64) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= x;
    }
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        if m[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        det *= m[k][k];
        for i in (k + 1)..n {
            let factor = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= factor * m[k][j];
            }
        }
    }
    det
}

/// All characteristic-polynomial roots of a symmetric matrix, ascending,
/// by bisection on the root-counting function.
pub fn char_poly_roots(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let bound = a
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if roots_below(a, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-14 * bound {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

pub fn random_unit<R: Rng>(rng: &mut R) -> P3 {
    loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = dot(&v, &v).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Random sites in a cube with a minimum pair separation.
pub fn random_geometry<R: Rng>(rng: &mut R, n: usize) -> (Vec<P3>, Vec<P3>) {
    let mut pos: Vec<P3> = Vec::with_capacity(n);
    while pos.len() < n {
        let p = [
            rng.gen_range(0.0..3.0),
            rng.gen_range(0.0..3.0),
            rng.gen_range(0.0..3.0),
        ];
        let far = pos.iter().all(|q| {
            let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
            dot(&d, &d).sqrt() > 0.7
        });
        if far {
            pos.push(p);
        }
    }
    let dip = (0..n).map(|_| random_unit(rng)).collect();
    (pos, dip)
}

/// Circulant eigenvalues λ_j = Σ_m c_m cos(2πjm/N) of a symmetric
/// circulant matrix with first column c, via the discrete Fourier sum.
pub fn circulant_eigenvalues(first_column: &[f64]) -> Vec<f64> {
    let n = first_column.len();
    (0..n)
        .map(|j| {
            first_column
                .iter()
                .enumerate()
                .map(|(m, c)| {
                    c * (2.0 * std::f64::consts::PI * (j * m) as f64 / n as f64).cos()
                })
                .sum()
        })
        .collect()
}
