//! Aggregate geometries: straight and bent chains, rings and ellipses.
//!
//! Lengths are in units of the undistorted nearest-neighbour spacing and
//! every site carries a unit transition dipole; the dipole magnitude is a
//! global constant folded into the coupling unit.

use std::f64::consts::PI;

use nalgebra::{Isometry3, Rotation3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

const UNIT_TOL: f64 = 1e-12;
const MIN_SEPARATION: f64 = 1e-9;

/// A monomer: point position plus unit transition-dipole direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomerSite {
    pub position: Vec3,
    pub dipole: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Chain,
    BentChain,
    Ring,
    Ellipse,
    Custom,
}

impl GeometryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GeometryKind::Chain => "chain",
            GeometryKind::BentChain => "bent_chain",
            GeometryKind::Ring => "ring",
            GeometryKind::Ellipse => "ellipse",
            GeometryKind::Custom => "custom",
        }
    }
}

/// How a bent chain's dipole direction is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DipoleFrame {
    /// The same laboratory-frame direction on every site.
    Global,
    /// Direction given in the local frame of each segment (x along the
    /// segment axis, z normal to the chain plane). The vertex site uses the
    /// bisecting frame.
    Segment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleSpec {
    pub direction: Vec3,
    pub frame: DipoleFrame,
}

impl DipoleSpec {
    pub fn global(direction: Vec3) -> Self {
        DipoleSpec {
            direction,
            frame: DipoleFrame::Global,
        }
    }

    pub fn segment(direction: Vec3) -> Self {
        DipoleSpec {
            direction,
            frame: DipoleFrame::Segment,
        }
    }
}

/// Size convention for the ellipse as the ring is flattened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EllipseScaling {
    /// Perimeter equals the f=0 ring perimeter; arc spacing is unchanged.
    ConstantPerimeter,
    /// Semi-major axis stays at the ring radius; the perimeter shrinks.
    FixedMajorAxis,
}

/// Reference direction from which the in-plane dipole angle is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TangentKind {
    /// Exact tangent of the ellipse at the site.
    Analytic,
    /// Chord joining the two neighbouring sites.
    Chord,
}

/// The construction recipe of a geometry. Rebuilding from the recipe gives
/// the same sites; [`GeometrySpec::undistorted`] gives the straight-chain or
/// circular counterpart used to define the coupling unit.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometrySpec {
    Chain {
        n: usize,
        dipole: Vec3,
    },
    BentChain {
        n: usize,
        vertex: usize,
        bend_angle_deg: f64,
        dipole: DipoleSpec,
    },
    Ring {
        n: usize,
        tangent_angle_deg: f64,
        polar_angle_deg: f64,
    },
    Ellipse {
        n: usize,
        flattening: f64,
        tangent_angle_deg: f64,
        polar_angle_deg: f64,
        scaling: EllipseScaling,
        tangent: TangentKind,
    },
    Custom {
        n: usize,
    },
}

impl GeometrySpec {
    pub fn kind(&self) -> GeometryKind {
        match self {
            GeometrySpec::Chain { .. } => GeometryKind::Chain,
            GeometrySpec::BentChain { .. } => GeometryKind::BentChain,
            GeometrySpec::Ring { .. } => GeometryKind::Ring,
            GeometrySpec::Ellipse { .. } => GeometryKind::Ellipse,
            GeometrySpec::Custom { .. } => GeometryKind::Custom,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            GeometrySpec::Chain { n, .. }
            | GeometrySpec::BentChain { n, .. }
            | GeometrySpec::Ring { n, .. }
            | GeometrySpec::Ellipse { n, .. }
            | GeometrySpec::Custom { n } => n,
        }
    }

    /// The zero-bend / zero-flattening counterpart with the same dipole
    /// specification. `None` for custom geometries.
    pub fn undistorted(&self) -> Option<GeometrySpec> {
        match self {
            GeometrySpec::BentChain {
                n, vertex, dipole, ..
            } => Some(GeometrySpec::BentChain {
                n: *n,
                vertex: *vertex,
                bend_angle_deg: 0.0,
                dipole: *dipole,
            }),
            GeometrySpec::Ellipse {
                n,
                tangent_angle_deg,
                polar_angle_deg,
                scaling,
                tangent,
                ..
            } => Some(GeometrySpec::Ellipse {
                n: *n,
                flattening: 0.0,
                tangent_angle_deg: *tangent_angle_deg,
                polar_angle_deg: *polar_angle_deg,
                scaling: *scaling,
                tangent: *tangent,
            }),
            GeometrySpec::Custom { .. } => None,
            other => Some(other.clone()),
        }
    }

    pub fn build(&self) -> Result<AggregateGeometry> {
        match *self {
            GeometrySpec::Chain { n, dipole } => build_chain(n, dipole),
            GeometrySpec::BentChain {
                n,
                vertex,
                bend_angle_deg,
                dipole,
            } => build_bent_chain(n, vertex, bend_angle_deg, dipole),
            GeometrySpec::Ring {
                n,
                tangent_angle_deg,
                polar_angle_deg,
            } => build_ring(n, tangent_angle_deg, polar_angle_deg),
            GeometrySpec::Ellipse {
                n,
                flattening,
                tangent_angle_deg,
                polar_angle_deg,
                scaling,
                tangent,
            } => build_ellipse_with(
                n,
                flattening,
                tangent_angle_deg,
                polar_angle_deg,
                scaling,
                tangent,
            ),
            GeometrySpec::Custom { .. } => Err(Error::InvalidGeometry(
                "custom geometries cannot be rebuilt from their recipe".into(),
            )),
        }
    }

    /// One-line `key=value` description used in export headers.
    pub fn describe(&self) -> String {
        match self {
            GeometrySpec::Chain { n, dipole } => format!(
                "kind=chain n={n} dipole=({:.6},{:.6},{:.6})",
                dipole.x, dipole.y, dipole.z
            ),
            GeometrySpec::BentChain {
                n,
                vertex,
                bend_angle_deg,
                dipole,
            } => format!(
                "kind=bent_chain n={n} vertex={vertex} bend_angle_deg={bend_angle_deg} dipole=({:.6},{:.6},{:.6}) frame={}",
                dipole.direction.x,
                dipole.direction.y,
                dipole.direction.z,
                match dipole.frame {
                    DipoleFrame::Global => "global",
                    DipoleFrame::Segment => "segment",
                }
            ),
            GeometrySpec::Ring {
                n,
                tangent_angle_deg,
                polar_angle_deg,
            } => format!(
                "kind=ring n={n} tangent_angle_deg={tangent_angle_deg} polar_angle_deg={polar_angle_deg}"
            ),
            GeometrySpec::Ellipse {
                n,
                flattening,
                tangent_angle_deg,
                polar_angle_deg,
                scaling,
                tangent,
            } => format!(
                "kind=ellipse n={n} flattening={flattening} tangent_angle_deg={tangent_angle_deg} polar_angle_deg={polar_angle_deg} scaling={} tangent={}",
                match scaling {
                    EllipseScaling::ConstantPerimeter => "constant_perimeter",
                    EllipseScaling::FixedMajorAxis => "fixed_major_axis",
                },
                match tangent {
                    TangentKind::Analytic => "analytic",
                    TangentKind::Chord => "chord",
                }
            ),
            GeometrySpec::Custom { n } => format!("kind=custom n={n}"),
        }
    }
}

/// An ordered list of sites plus the recipe that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateGeometry {
    sites: Vec<MonomerSite>,
    spec: GeometrySpec,
}

impl AggregateGeometry {
    /// Wraps arbitrary sites. Dipoles are normalized; positions must be
    /// pairwise distinct.
    pub fn custom(sites: Vec<MonomerSite>) -> Result<Self> {
        let n = sites.len();
        let sites = sites
            .into_iter()
            .map(|s| {
                Ok(MonomerSite {
                    position: s.position,
                    dipole: unit(s.dipole)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::checked(sites, GeometrySpec::Custom { n })
    }

    fn checked(sites: Vec<MonomerSite>, spec: GeometrySpec) -> Result<Self> {
        if sites.len() < 2 {
            return Err(Error::InvalidGeometry(format!(
                "need at least 2 sites, got {}",
                sites.len()
            )));
        }
        for (i, a) in sites.iter().enumerate() {
            if !a.position.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidGeometry(format!(
                    "site {} has a non-finite position",
                    i + 1
                )));
            }
            for (j, b) in sites.iter().enumerate().skip(i + 1) {
                if (a.position - b.position).norm() <= MIN_SEPARATION {
                    return Err(Error::SingularGeometry(i + 1, j + 1));
                }
            }
        }
        Ok(AggregateGeometry { sites, spec })
    }

    pub fn sites(&self) -> &[MonomerSite] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn spec(&self) -> &GeometrySpec {
        &self.spec
    }

    pub fn kind(&self) -> GeometryKind {
        self.spec.kind()
    }

    pub fn dipoles(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.sites.iter().map(|s| s.dipole)
    }

    /// The undistorted counterpart (Φ=0 chain or f=0 ring). Custom
    /// geometries are their own reference.
    pub fn undistorted(&self) -> Result<AggregateGeometry> {
        match self.spec.undistorted() {
            Some(spec) if spec != self.spec => spec.build(),
            _ => Ok(self.clone()),
        }
    }

    /// Applies a rigid motion to positions and dipoles. The recipe is kept.
    pub fn transformed(&self, motion: &Isometry3<f64>) -> AggregateGeometry {
        let sites = self
            .sites
            .iter()
            .map(|s| MonomerSite {
                position: motion.transform_point(&s.position.into()).coords,
                dipole: motion.rotation * s.dipole,
            })
            .collect();
        AggregateGeometry {
            sites,
            spec: self.spec.clone(),
        }
    }
}

fn unit(v: Vec3) -> Result<Vec3> {
    let norm = v.norm();
    if !norm.is_finite() || norm <= UNIT_TOL {
        return Err(Error::InvalidDipole(format!(
            "dipole direction ({}, {}, {}) has zero or non-finite length",
            v.x, v.y, v.z
        )));
    }
    Ok(v / norm)
}

fn check_finite_angle(name: &str, deg: f64) -> Result<()> {
    if deg.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidAngle(format!("{name} must be finite")))
    }
}

/// Straight chain along x with sites at (n−1, 0, 0).
pub fn build_chain(n: usize, dipole_dir: Vec3) -> Result<AggregateGeometry> {
    if n < 2 {
        return Err(Error::InvalidGeometry(format!("chain needs N >= 2, got {n}")));
    }
    let dipole = unit(dipole_dir)?;
    let sites = (0..n)
        .map(|i| MonomerSite {
            position: Vec3::new(i as f64, 0.0, 0.0),
            dipole,
        })
        .collect();
    AggregateGeometry::checked(sites, GeometrySpec::Chain { n, dipole })
}

/// Chain in the xy plane bent at the 1-based site `vertex`: sites up to the
/// vertex lie along +x, the rest along a ray rotated by `angle_deg` about z.
pub fn build_bent_chain(
    n: usize,
    vertex: usize,
    angle_deg: f64,
    dipole: DipoleSpec,
) -> Result<AggregateGeometry> {
    if n < 3 {
        return Err(Error::InvalidGeometry(format!(
            "bent chain needs N >= 3, got {n}"
        )));
    }
    if vertex < 2 || vertex > n - 1 {
        return Err(Error::InvalidGeometry(format!(
            "vertex {vertex} outside 2..={}",
            n - 1
        )));
    }
    if !(0.0..180.0).contains(&angle_deg) {
        return Err(Error::InvalidAngle(format!(
            "bend angle {angle_deg} outside [0, 180)"
        )));
    }
    let direction = unit(dipole.direction)?;
    let bend = angle_deg.to_radians();
    let second = Rotation3::from_axis_angle(&Vector3::z_axis(), bend);
    let bisector = Rotation3::from_axis_angle(&Vector3::z_axis(), 0.5 * bend);
    let apex = Vec3::new((vertex - 1) as f64, 0.0, 0.0);
    let ray = second * Vec3::x();

    let sites = (1..=n)
        .map(|site| {
            let position = if site <= vertex {
                Vec3::new((site - 1) as f64, 0.0, 0.0)
            } else {
                apex + ray * (site - vertex) as f64
            };
            let dipole = match dipole.frame {
                DipoleFrame::Global => direction,
                DipoleFrame::Segment if site < vertex => direction,
                DipoleFrame::Segment if site == vertex => bisector * direction,
                DipoleFrame::Segment => second * direction,
            };
            MonomerSite { position, dipole }
        })
        .collect();
    AggregateGeometry::checked(
        sites,
        GeometrySpec::BentChain {
            n,
            vertex,
            bend_angle_deg: angle_deg,
            dipole: DipoleSpec {
                direction,
                frame: dipole.frame,
            },
        },
    )
}

/// Radius of the ring whose nearest-neighbour chord is 1.
pub fn ring_radius(n: usize) -> f64 {
    0.5 / (PI / n as f64).sin()
}

/// Dipole from an in-plane reference tangent: angle φ towards the outward
/// normal, tilted by polar angle θ from the plane normal (θ = 90° in-plane).
fn oriented_dipole(tangent: Vec3, phi: f64, theta: f64) -> Vec3 {
    let outward = Vec3::new(tangent.y, -tangent.x, 0.0);
    let in_plane = tangent * phi.cos() + outward * phi.sin();
    in_plane * theta.sin() + Vec3::z() * theta.cos()
}

/// Ring in the xy plane with unit chord spacing.
pub fn build_ring(
    n: usize,
    tangent_angle_deg: f64,
    polar_angle_deg: f64,
) -> Result<AggregateGeometry> {
    if n < 3 {
        return Err(Error::InvalidGeometry(format!("ring needs N >= 3, got {n}")));
    }
    check_finite_angle("tangent angle", tangent_angle_deg)?;
    check_finite_angle("polar angle", polar_angle_deg)?;
    let radius = ring_radius(n);
    let phi = tangent_angle_deg.to_radians();
    let theta = polar_angle_deg.to_radians();
    let sites = (0..n)
        .map(|i| {
            let alpha = 2.0 * PI * i as f64 / n as f64;
            let (s, c) = alpha.sin_cos();
            MonomerSite {
                position: Vec3::new(radius * c, radius * s, 0.0),
                dipole: oriented_dipole(Vec3::new(-s, c, 0.0), phi, theta),
            }
        })
        .collect();
    AggregateGeometry::checked(
        sites,
        GeometrySpec::Ring {
            n,
            tangent_angle_deg,
            polar_angle_deg,
        },
    )
}

/// Ellipse with the default conventions: constant perimeter and analytic
/// tangent.
pub fn build_ellipse(
    n: usize,
    flattening: f64,
    tangent_angle_deg: f64,
    polar_angle_deg: f64,
) -> Result<AggregateGeometry> {
    build_ellipse_with(
        n,
        flattening,
        tangent_angle_deg,
        polar_angle_deg,
        EllipseScaling::ConstantPerimeter,
        TangentKind::Analytic,
    )
}

/// Ellipse with semi-axes a, b = (1−f)a and sites at equal arc length
/// starting from the end of the major axis.
pub fn build_ellipse_with(
    n: usize,
    flattening: f64,
    tangent_angle_deg: f64,
    polar_angle_deg: f64,
    scaling: EllipseScaling,
    tangent: TangentKind,
) -> Result<AggregateGeometry> {
    if n < 3 {
        return Err(Error::InvalidGeometry(format!(
            "ellipse needs N >= 3, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&flattening) {
        return Err(Error::InvalidFlattening(flattening));
    }
    check_finite_angle("tangent angle", tangent_angle_deg)?;
    check_finite_angle("polar angle", polar_angle_deg)?;

    let radius = ring_radius(n);
    let ratio = 1.0 - flattening;
    let a = match scaling {
        EllipseScaling::ConstantPerimeter => {
            2.0 * PI * radius / EllipseArc::new(1.0, ratio).perimeter()
        }
        EllipseScaling::FixedMajorAxis => radius,
    };
    let arc = EllipseArc::new(a, a * ratio);
    let params = arc.equal_arc_parameters(n);
    let positions: Vec<Vec3> = params.iter().map(|&t| arc.point(t)).collect();

    let phi = tangent_angle_deg.to_radians();
    let theta = polar_angle_deg.to_radians();
    let sites = (0..n)
        .map(|i| {
            let t_hat = match tangent {
                TangentKind::Analytic => arc.tangent(params[i]),
                TangentKind::Chord => {
                    let next = positions[(i + 1) % n];
                    let prev = positions[(i + n - 1) % n];
                    (next - prev).normalize()
                }
            };
            MonomerSite {
                position: positions[i],
                dipole: oriented_dipole(t_hat, phi, theta),
            }
        })
        .collect();
    AggregateGeometry::checked(
        sites,
        GeometrySpec::Ellipse {
            n,
            flattening,
            tangent_angle_deg,
            polar_angle_deg,
            scaling,
            tangent,
        },
    )
}

/// Arc-length parameterization of the ellipse (a cos t, b sin t).
#[derive(Debug, Clone, Copy)]
pub struct EllipseArc {
    pub a: f64,
    pub b: f64,
}

const ARC_QUAD_TOL: f64 = 1e-13;
const ARC_INVERSION_TOL: f64 = 1e-11;

impl EllipseArc {
    pub fn new(a: f64, b: f64) -> Self {
        EllipseArc { a, b }
    }

    pub fn speed(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        (self.a * self.a * s * s + self.b * self.b * c * c).sqrt()
    }

    pub fn point(&self, t: f64) -> Vec3 {
        let (s, c) = t.sin_cos();
        Vec3::new(self.a * c, self.b * s, 0.0)
    }

    pub fn tangent(&self, t: f64) -> Vec3 {
        let (s, c) = t.sin_cos();
        Vec3::new(-self.a * s, self.b * c, 0.0).normalize()
    }

    /// Arc length between parameters `t0 <= t1`.
    pub fn length(&self, t0: f64, t1: f64) -> f64 {
        adaptive_simpson(&|t| self.speed(t), t0, t1, ARC_QUAD_TOL)
    }

    pub fn perimeter(&self) -> f64 {
        4.0 * self.length(0.0, 0.5 * PI)
    }

    /// Parameters of `n` points at equal arc-length intervals, first at t=0.
    pub fn equal_arc_parameters(&self, n: usize) -> Vec<f64> {
        let step = self.perimeter() / n as f64;
        let mut params = Vec::with_capacity(n);
        params.push(0.0);
        let mut t_prev = 0.0;
        let mut s_prev = 0.0;
        for k in 1..n {
            let target = step * k as f64;
            let t = self.invert(t_prev, s_prev, target);
            s_prev = s_prev + self.length(t_prev, t);
            t_prev = t;
            params.push(t);
        }
        params
    }

    /// Solves s(t) = target for t >= t0 given s(t0) = s0 (safeguarded Newton).
    fn invert(&self, t0: f64, s0: f64, target: f64) -> f64 {
        let mut lo = t0;
        let mut hi = 2.0 * PI;
        let mut t = t0 + (target - s0) / self.speed(t0).max(1e-300);
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        for _ in 0..200 {
            let residual = s0 + self.length(t0, t) - target;
            if residual.abs() < ARC_INVERSION_TOL {
                break;
            }
            if residual > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - residual / self.speed(t);
            t = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        t
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    // Split into panels so the initial estimate cannot alias a sharp corner.
    let panels = 8;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let x0 = a + h * i as f64;
            let x1 = x0 + h;
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = h / 6.0 * (f0 + 4.0 * fm + f1);
            recurse(f, x0, x1, f0, fm, f1, whole, tol / panels as f64, 40)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn site_eq(a: &AggregateGeometry, b: &AggregateGeometry, tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.sites().iter().zip(b.sites()) {
            assert!((x.position - y.position).norm() <= tol);
            assert!((x.dipole - y.dipole).norm() <= tol);
        }
    }

    #[test]
    fn dimer_chain() {
        let g = build_chain(2, Vec3::new(0.0, 0.0, 3.0)).unwrap();
        assert_eq!(g.sites()[0].position, Vec3::zeros());
        assert_eq!(g.sites()[1].position, Vec3::new(1.0, 0.0, 0.0));
        assert!(g.dipoles().all(|d| d == Vec3::z()));
    }

    #[test]
    fn chain_errors() {
        assert!(matches!(
            build_chain(1, Vec3::z()),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(
            build_chain(5, Vec3::zeros()),
            Err(Error::InvalidDipole(_))
        ));
    }

    #[test]
    fn bent_chain_errors() {
        let d = DipoleSpec::global(Vec3::z());
        assert!(build_bent_chain(19, 1, 10.0, d).is_err());
        assert!(build_bent_chain(19, 19, 10.0, d).is_err());
        assert!(matches!(
            build_bent_chain(19, 12, 180.0, d),
            Err(Error::InvalidAngle(_))
        ));
        assert!(matches!(
            build_bent_chain(19, 12, -1.0, d),
            Err(Error::InvalidAngle(_))
        ));
    }

    #[test]
    fn zero_bend_is_straight_chain() {
        for frame in [DipoleFrame::Global, DipoleFrame::Segment] {
            let bent = build_bent_chain(
                19,
                12,
                0.0,
                DipoleSpec {
                    direction: Vec3::z(),
                    frame,
                },
            )
            .unwrap();
            let straight = build_chain(19, Vec3::z()).unwrap();
            site_eq(&bent, &straight, 0.0);
        }
    }

    #[test]
    fn bent_chain_keeps_unit_spacing() {
        let g = build_bent_chain(19, 12, 135.0, DipoleSpec::global(Vec3::z())).unwrap();
        for w in g.sites().windows(2) {
            assert_abs_diff_eq!((w[1].position - w[0].position).norm(), 1.0, epsilon = 1e-9);
        }
        assert!(g.sites().iter().all(|s| s.position.z == 0.0));
    }

    #[test]
    fn segment_frame_keeps_dipoles_perpendicular_to_local_axis() {
        let dir = Vec3::new(0.0, 1.0, 1.0);
        let g = build_bent_chain(19, 12, 135.0, DipoleSpec::segment(dir)).unwrap();
        let s = g.sites();
        for i in 0..18 {
            if i + 1 == 11 || i + 1 == 12 {
                continue;
            }
            let axis = (s[i + 1].position - s[i].position).normalize();
            assert_abs_diff_eq!(s[i].dipole.dot(&axis), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s[i].dipole.z, 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn ring_spacing_and_symmetry() {
        let n = 16;
        let g = build_ring(n, 30.0, 70.0).unwrap();
        let r = ring_radius(n);
        for i in 0..n {
            let a = g.sites()[i];
            let b = g.sites()[(i + 1) % n];
            assert_abs_diff_eq!(a.position.norm(), r, epsilon = 1e-12);
            assert_abs_diff_eq!((b.position - a.position).norm(), 1.0, epsilon = 1e-9);
            let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * PI / n as f64);
            assert!((rot * a.position - b.position).norm() < 1e-12);
            assert!((rot * a.dipole - b.dipole).norm() < 1e-12);
        }
    }

    #[test]
    fn ring_orientation_conventions() {
        let g = build_ring(8, 0.0, 90.0).unwrap();
        let s = g.sites()[0];
        assert!((s.dipole - Vec3::y()).norm() < 1e-12);
        let g = build_ring(8, 90.0, 90.0).unwrap();
        assert!((g.sites()[0].dipole - Vec3::x()).norm() < 1e-12);
        let theta = (1.0 / 3f64.sqrt()).acos().to_degrees();
        let g = build_ring(8, 45.0, theta).unwrap();
        let d = g.sites()[0].dipole;
        assert_abs_diff_eq!(d.x.abs(), d.y.abs(), epsilon = 1e-12);
        assert_abs_diff_eq!(d.y.abs(), d.z.abs(), epsilon = 1e-12);
    }

    #[test]
    fn ring_needs_three_sites() {
        assert!(matches!(build_ring(2, 0.0, 90.0), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn circle_perimeter() {
        assert_abs_diff_eq!(EllipseArc::new(2.0, 2.0).perimeter(), 4.0 * PI, epsilon = 1e-12);
        // Ramanujan's second approximation is accurate to ~1e-10 relative here.
        let (a, b) = (1.0f64, 0.6f64);
        let h = ((a - b) / (a + b)).powi(2);
        let ramanujan = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
        assert_abs_diff_eq!(EllipseArc::new(a, b).perimeter(), ramanujan, epsilon = 1e-8);
    }

    #[test]
    fn flat_ellipse_is_ring() {
        for scaling in [EllipseScaling::ConstantPerimeter, EllipseScaling::FixedMajorAxis] {
            for tangent in [TangentKind::Analytic, TangentKind::Chord] {
                let e = build_ellipse_with(16, 0.0, 54.0, 80.0, scaling, tangent).unwrap();
                let r = build_ring(16, 54.0, 80.0).unwrap();
                site_eq(&e, &r, 1e-9);
            }
        }
    }

    #[test]
    fn ellipse_equal_arc_spacing() {
        for f in [0.2, 0.4, 0.7, 0.95] {
            let e = build_ellipse(16, f, 0.0, 90.0).unwrap();
            let GeometrySpec::Ellipse { .. } = e.spec() else {
                panic!()
            };
            let arc = {
                let radius = ring_radius(16);
                let a = 2.0 * PI * radius / EllipseArc::new(1.0, 1.0 - f).perimeter();
                EllipseArc::new(a, a * (1.0 - f))
            };
            let params: Vec<f64> = e
                .sites()
                .iter()
                .map(|s| {
                    let t = (s.position.y / arc.b).atan2(s.position.x / arc.a);
                    if t < 0.0 {
                        t + 2.0 * PI
                    } else {
                        t
                    }
                })
                .collect();
            let mut lengths: Vec<f64> = params
                .windows(2)
                .map(|w| arc.length(w[0], w[1]))
                .collect();
            lengths.push(arc.length(params[15], 2.0 * PI));
            let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
            assert_abs_diff_eq!(mean, 2.0 * PI * ring_radius(16) / 16.0, epsilon = 1e-9);
            for l in lengths {
                assert!((l - mean).abs() < 1e-6 * mean, "f={f}");
            }
        }
    }

    #[test]
    fn ellipse_errors() {
        assert!(matches!(
            build_ellipse(16, 1.0, 0.0, 90.0),
            Err(Error::InvalidFlattening(_))
        ));
        assert!(matches!(
            build_ellipse(16, -0.1, 0.0, 90.0),
            Err(Error::InvalidFlattening(_))
        ));
    }

    #[test]
    fn custom_rejects_coincident_sites() {
        let s = MonomerSite {
            position: Vec3::zeros(),
            dipole: Vec3::z(),
        };
        assert_eq!(
            AggregateGeometry::custom(vec![s, s]),
            Err(Error::SingularGeometry(1, 2))
        );
    }

    #[test]
    fn undistorted_recipes() {
        let g = build_ellipse(16, 0.4, 54.0, 90.0).unwrap();
        let r = g.undistorted().unwrap();
        site_eq(&r, &build_ring(16, 54.0, 90.0).unwrap(), 1e-9);
        let b = build_bent_chain(19, 12, 120.0, DipoleSpec::segment(Vec3::x())).unwrap();
        site_eq(&b.undistorted().unwrap(), &build_chain(19, Vec3::x()).unwrap(), 0.0);
    }
}
