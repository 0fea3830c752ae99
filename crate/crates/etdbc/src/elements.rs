//! Osculating orbital elements and the conversion to and from Cartesian
//! states around a single central body.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{wrap_two_pi, Real};
use crate::vec3::{self, V3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Center {
    Earth,
    Moon,
}

/// Classical osculating elements. Angles in radians, normalized to [0, 2π).
/// `a` is negative for hyperbolic orbits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalElements<T> {
    pub a: T,
    pub e: T,
    pub i: T,
    pub raan: T,
    pub argp: T,
    pub nu: T,
    pub center: Center,
}

const TINY: f64 = 1e-10;

/// Osculating elements from position and velocity relative to the central
/// body with gravitational parameter `gm` (any consistent unit system).
///
/// Conventions for deterministic output: raan = 0 when i < 1e−10 (argp then
/// measured from the x-axis) and argp = 0 when e < 1e−10 (nu then measured
/// from the node, or from the x-axis when both are degenerate).
pub fn cartesian_to_elements<T: Real>(
    r: &V3<T>,
    v: &V3<T>,
    gm: T,
    center: Center,
) -> Result<OrbitalElements<T>> {
    let rmag = vec3::norm(r);
    if rmag == T::zero() {
        return Err(Error::DegenerateOrbit("zero radius"));
    }
    let h = vec3::cross(r, v);
    let hmag = vec3::norm(&h);
    if hmag < T::lit(1e-14) * rmag * vec3::norm(v).max(T::epsilon()) || hmag == T::zero() {
        return Err(Error::DegenerateOrbit("rectilinear orbit (h -> 0)"));
    }
    let v2 = vec3::dot(v, v);
    let energy = v2 * T::half() - gm / rmag;
    if energy.abs() < T::lit(1e-300) {
        return Err(Error::DegenerateOrbit("parabolic orbit (a -> inf)"));
    }
    let a = -gm / (T::two() * energy);

    // eccentricity vector
    let rv = vec3::dot(r, v);
    let ev = [
        ((v2 - gm / rmag) * r[0] - rv * v[0]) / gm,
        ((v2 - gm / rmag) * r[1] - rv * v[1]) / gm,
        ((v2 - gm / rmag) * r[2] - rv * v[2]) / gm,
    ];
    let e = vec3::norm(&ev);

    let i = (h[2] / hmag).clamp(-T::one(), T::one()).acos();

    // node vector n = ẑ × h
    let n = [-h[1], h[0], T::zero()];
    let nmag = vec3::norm(&n);

    let tiny = T::lit(TINY);
    let equatorial = i < tiny || i > T::PI() - tiny;
    let circular = e < tiny;

    let raan = if equatorial {
        T::zero()
    } else {
        wrap_two_pi(n[1].atan2(n[0]))
    };

    // unit vector along the line from which argp is measured
    let node_dir: V3<T> = if equatorial {
        [T::one(), T::zero(), T::zero()]
    } else {
        vec3::unit(&n)
    };
    let _ = nmag;

    let hhat = vec3::unit(&h);
    let in_plane_angle = |from: &V3<T>, to: &V3<T>| -> T {
        let s = vec3::dot(&vec3::cross(from, to), &hhat);
        let c = vec3::dot(from, to);
        wrap_two_pi(s.atan2(c))
    };

    let argp = if circular {
        T::zero()
    } else {
        in_plane_angle(&node_dir, &vec3::unit(&ev))
    };

    let nu = if circular {
        in_plane_angle(&node_dir, &vec3::unit(r))
    } else {
        in_plane_angle(&vec3::unit(&ev), &vec3::unit(r))
    };

    Ok(OrbitalElements {
        a,
        e,
        i,
        raan,
        argp,
        nu,
        center,
    })
}

/// Position and velocity from osculating elements.
pub fn elements_to_cartesian<T: Real>(el: &OrbitalElements<T>, gm: T) -> Result<(V3<T>, V3<T>)> {
    if el.e < T::zero() {
        return Err(Error::DegenerateOrbit("negative eccentricity"));
    }
    let elliptic = el.e < T::one();
    if elliptic && el.a <= T::zero() {
        return Err(Error::DegenerateOrbit("elliptic orbit needs a > 0"));
    }
    if !elliptic && el.a >= T::zero() {
        return Err(Error::DegenerateOrbit("hyperbolic orbit needs a < 0"));
    }
    let p = el.a * (T::one() - el.e * el.e);
    let denom = T::one() + el.e * el.nu.cos();
    if denom <= T::zero() {
        return Err(Error::DegenerateOrbit("true anomaly beyond the asymptote"));
    }
    let rmag = p / denom;

    // perifocal coordinates
    let (snu, cnu) = el.nu.sin_cos();
    let r_pf = [rmag * cnu, rmag * snu, T::zero()];
    let vscale = (gm / p).sqrt();
    let v_pf = [-vscale * snu, vscale * (el.e + cnu), T::zero()];

    let (sr, cr) = el.raan.sin_cos();
    let (sw, cw) = el.argp.sin_cos();
    let (si, ci) = el.i.sin_cos();

    let rot = |u: &V3<T>| -> V3<T> {
        [
            (cr * cw - sr * sw * ci) * u[0] + (-cr * sw - sr * cw * ci) * u[1],
            (sr * cw + cr * sw * ci) * u[0] + (-sr * sw + cr * cw * ci) * u[1],
            sw * si * u[0] + cw * si * u[1],
        ]
    };

    Ok((rot(&r_pf), rot(&v_pf)))
}

impl<T: Real> OrbitalElements<T> {
    /// Apply the synodic z-mirror to the orientation angles: Ω ← Ω + π,
    /// ω ← ω − π, everything else unchanged.
    pub fn z_mirrored(&self) -> Self {
        Self {
            raan: wrap_two_pi(self.raan + T::PI()),
            argp: wrap_two_pi(self.argp - T::PI()),
            ..*self
        }
    }

    /// Periapsis radius a(1−e).
    pub fn periapsis(&self) -> T {
        self.a * (T::one() - self.e)
    }
}
