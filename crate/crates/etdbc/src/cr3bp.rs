//! Spatial circular restricted three-body problem: constants, frames,
//! equations of motion, energies, and the three-body energy parameter.
//!
//! All internal math is dimensionless. The barycentric synodic frame rotates
//! with the primaries; its x-axis points at the secondary, the secondary sits
//! at (1−μ, 0, 0), and the mean motion is 1, so one revolution of the
//! secondary takes 2π time units. Dimensional values appear only at the I/O
//! boundary through [`SystemParams`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::vec3::{self, V3, V6};

/// Universal gravitational constant, km³ kg⁻¹ s⁻².
pub const G_KM3_KG_S2: f64 = 6.67430e-20;

/// Earth-Moon system defaults (masses in kg, distances in km, epoch in
/// seconds past J2000).
pub mod earth_moon {
    pub const M_SUN_KG: f64 = 1.9885e30;
    pub const M_EARTH_KG: f64 = 5.9724e24;
    pub const M_MOON_KG: f64 = 7.3461e22;
    pub const LENGTH_UNIT_KM: f64 = 384399.0;
    pub const R_MOON_KM: f64 = 1737.4;
    /// Epoch at which the synodic and inertial frames are aligned.
    pub const T_ETD_S: f64 = 802221652.5;
}

/// Reference frame tags carried by [`State6`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Barycentric rotating frame, dimensionless units.
    Synodic,
    /// Earth-centered inertial frame aligned with the synodic axes at the
    /// reference epoch, dimensionless units.
    EarthInertialEtdAligned,
    /// Moon-centered inertial frame aligned with the synodic axes at the
    /// reference epoch, dimensionless units.
    MoonInertialEtdAligned,
    /// Earth-centered inertial frame of the ephemeris model, km and km/s.
    EphemerisInertial,
}

/// Position + velocity sample with a time tag and frame tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State6<T> {
    pub r: V3<T>,
    pub v: V3<T>,
    pub t: T,
    pub frame: Frame,
}

impl<T: Real> State6<T> {
    pub fn new(r: V3<T>, v: V3<T>, t: T, frame: Frame) -> Self {
        Self { r, v, t, frame }
    }

    pub fn synodic(r: V3<T>, v: V3<T>, t: T) -> Self {
        Self::new(r, v, t, Frame::Synodic)
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(self.v.iter()).all(|c| c.is_finite())
    }

    pub fn as_array(&self) -> V6<T> {
        [
            self.r[0], self.r[1], self.r[2], self.v[0], self.v[1], self.v[2],
        ]
    }

    pub fn from_array(y: &V6<T>, t: T, frame: Frame) -> Self {
        Self::new([y[0], y[1], y[2]], [y[3], y[4], y[5]], t, frame)
    }

    fn expect_frame(&self, expected: Frame) -> Result<()> {
        if self.frame == expected {
            Ok(())
        } else {
            Err(Error::FrameMismatch {
                expected,
                got: self.frame,
            })
        }
    }
}

/// System constants and scaling units for one primary pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<T> {
    /// Mass ratio m₂/(m₁+m₂).
    pub mu: T,
    /// km per length unit.
    pub length_unit_km: T,
    /// Seconds per dimensionless time unit. One revolution of the secondary
    /// is 2π time units, so this is the revolution period divided by 2π.
    pub time_unit_s: T,
    /// km/s per velocity unit (length_unit_km / time_unit_s).
    pub velocity_unit_kms: T,
    /// Jacobi constant at L1.
    pub cj_l1: T,
    /// Jacobi constant at L4 (analytic: 3 − μ + μ²).
    pub cj_l4: T,
    /// Physical radius of the secondary, km.
    pub r_moon_km: T,
    /// Escape radius, length units.
    pub r2_lim: T,
}

impl<T: Real> SystemParams<T> {
    /// Build params from a mass ratio and dimensional scales, solving for the
    /// L1 Jacobi constant.
    pub fn new(
        mu: T,
        length_unit_km: T,
        time_unit_s: T,
        r_moon_km: T,
        r2_lim: T,
    ) -> Result<Self> {
        if !(mu > T::zero() && mu < T::half()) {
            return Err(Error::InvalidParameter(format!(
                "mass ratio out of (0, 0.5): {mu}"
            )));
        }
        if !(r2_lim > T::zero() && r2_lim < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "escape radius out of (0, 1): {r2_lim}"
            )));
        }
        let (cj_l1, cj_l4) = lagrange_cj(mu)?;
        Ok(Self {
            mu,
            length_unit_km,
            time_unit_s,
            velocity_unit_kms: length_unit_km / time_unit_s,
            cj_l1,
            cj_l4,
            r_moon_km,
            r2_lim,
        })
    }

    /// Earth-Moon defaults: μ from the body masses, time unit from
    /// √(LU³ / G(m₁+m₂)).
    pub fn earth_moon() -> Self {
        use earth_moon::*;
        let mu_f64 = M_MOON_KG / (M_EARTH_KG + M_MOON_KG);
        let gm_sum = G_KM3_KG_S2 * (M_EARTH_KG + M_MOON_KG);
        let tu = (LENGTH_UNIT_KM.powi(3) / gm_sum).sqrt();
        Self::new(
            T::lit(mu_f64),
            T::lit(LENGTH_UNIT_KM),
            T::lit(tu),
            T::lit(R_MOON_KM),
            T::lit(0.9),
        )
        .expect("Earth-Moon defaults are valid")
    }

    /// Physical radius of the secondary in length units.
    pub fn r_moon_lu(&self) -> T {
        self.r_moon_km / self.length_unit_km
    }

    /// Position of the secondary in the synodic frame.
    pub fn moon_pos(&self) -> V3<T> {
        [T::one() - self.mu, T::zero(), T::zero()]
    }

    /// Hill-sphere radius (μ/3)^(1/3) in length units.
    pub fn hill_radius(&self) -> T {
        (self.mu / T::lit(3.0)).powf(T::one() / T::lit(3.0))
    }

    /// Gravitational parameter of the primary pair, km³/s².
    pub fn gm_sum_km3_s2(&self) -> T {
        let lu = self.length_unit_km;
        lu * lu * lu / (self.time_unit_s * self.time_unit_s)
    }

    pub fn validate(&self) -> Result<()> {
        let analytic_l4 = T::lit(3.0) - self.mu + self.mu * self.mu;
        if (self.cj_l4 - analytic_l4).abs() > T::lit(1e-12) {
            return Err(Error::InvalidParameter(format!(
                "cj_l4 = {} differs from 3 - mu + mu^2 = {}",
                self.cj_l4, analytic_l4
            )));
        }
        if self.cj_l4 >= self.cj_l1 {
            return Err(Error::InvalidParameter(
                "cj_l4 must be below cj_l1".into(),
            ));
        }
        if !(self.mu > T::zero() && self.mu < T::half()) {
            return Err(Error::InvalidParameter("mass ratio out of (0, 0.5)".into()));
        }
        if !(self.r2_lim > T::zero() && self.r2_lim < T::one()) {
            return Err(Error::InvalidParameter("r2_lim out of (0, 1)".into()));
        }
        Ok(())
    }
}

/// Distances to the two primaries from a synodic position.
#[inline]
pub fn primary_distances<T: Real>(r: &V3<T>, mu: T) -> (T, T) {
    let x1 = r[0] + mu;
    let x2 = r[0] - (T::one() - mu);
    let yz = r[1] * r[1] + r[2] * r[2];
    ((x1 * x1 + yz).sqrt(), (x2 * x2 + yz).sqrt())
}

/// Right-hand side of the synodic equations of motion, unchecked hot path.
#[inline]
pub fn eom_cr3bp_raw<T: Real>(y: &V6<T>, mu: T, dydt: &mut V6<T>) {
    let one = T::one();
    let (x, yy, z) = (y[0], y[1], y[2]);
    let (vx, vy, vz) = (y[3], y[4], y[5]);
    let (r1, r2) = primary_distances(&[x, yy, z], mu);
    let r1c = r1 * r1 * r1;
    let r2c = r2 * r2 * r2;
    let om = one - mu;
    let k1 = om / r1c;
    let k2 = mu / r2c;
    dydt[0] = vx;
    dydt[1] = vy;
    dydt[2] = vz;
    dydt[3] = T::two() * vy + x - k1 * (x + mu) - k2 * (x - om);
    dydt[4] = -T::two() * vx + yy - k1 * yy - k2 * yy;
    dydt[5] = -k1 * z - k2 * z;
}

/// Synodic state derivative (ẋ, ẏ, ż, ẍ, ÿ, z̈).
pub fn eom_cr3bp<T: Real>(state: &State6<T>, params: &SystemParams<T>) -> Result<V6<T>> {
    state.expect_frame(Frame::Synodic)?;
    let (r1, r2) = primary_distances(&state.r, params.mu);
    if r1 == T::zero() {
        return Err(Error::CollisionSingularity { which: 1 });
    }
    if r2 == T::zero() {
        return Err(Error::CollisionSingularity { which: 2 });
    }
    let y = state.as_array();
    let mut dydt = [T::zero(); 6];
    eom_cr3bp_raw(&y, params.mu, &mut dydt);
    Ok(dydt)
}

/// Jacobi constant C_J = −v² + x² + y² + 2(1−μ)/r₁ + 2μ/r₂.
pub fn jacobi_constant<T: Real>(state: &State6<T>, params: &SystemParams<T>) -> Result<T> {
    state.expect_frame(Frame::Synodic)?;
    let (r1, r2) = primary_distances(&state.r, params.mu);
    if r1 == T::zero() {
        return Err(Error::CollisionSingularity { which: 1 });
    }
    if r2 == T::zero() {
        return Err(Error::CollisionSingularity { which: 2 });
    }
    Ok(jacobi_raw(&state.as_array(), params.mu))
}

#[inline]
pub fn jacobi_raw<T: Real>(y: &V6<T>, mu: T) -> T {
    let (r1, r2) = primary_distances(&[y[0], y[1], y[2]], mu);
    let v2 = y[3] * y[3] + y[4] * y[4] + y[5] * y[5];
    -v2 + y[0] * y[0] + y[1] * y[1] + T::two() * (T::one() - mu) / r1 + T::two() * mu / r2
}

/// Three-body energy parameter Γ = (C_J − C_J^L1) / (C_J^L4 − C_J^L1).
#[inline]
pub fn gamma_from_cj<T: Real>(cj: T, params: &SystemParams<T>) -> T {
    (cj - params.cj_l1) / (params.cj_l4 - params.cj_l1)
}

/// Inverse of [`gamma_from_cj`].
#[inline]
pub fn cj_from_gamma<T: Real>(gamma: T, params: &SystemParams<T>) -> T {
    params.cj_l1 + gamma * (params.cj_l4 - params.cj_l1)
}

/// x-derivative of the effective potential on the x-axis between the
/// primaries; its root there is L1.
fn collinear_gradient<T: Real>(x: T, mu: T) -> T {
    let om = T::one() - mu;
    let d1 = x + mu; // > 0 on the L1 bracket
    let d2 = x - om; // < 0 on the L1 bracket
    x - om / (d1 * d1) + mu / (d2 * d2)
}

/// Locate L1 by bisection with a Newton polish on the bracket (0.5, 1−μ),
/// then evaluate the Jacobi constants at L1 and L4.
pub fn lagrange_cj<T: Real>(mu: T) -> Result<(T, T)> {
    if !(mu > T::zero() && mu < T::half()) {
        return Err(Error::InvalidParameter(format!(
            "mass ratio out of (0, 0.5): {mu}"
        )));
    }
    let x_l1 = l1_position(mu)?;
    let zero = T::zero();
    let state = State6::synodic([x_l1, zero, zero], [zero, zero, zero], zero);
    // evaluate Eq. of the Jacobi constant directly; params not needed
    let cj_l1 = jacobi_raw(&state.as_array(), mu);
    let cj_l4 = T::lit(3.0) - mu + mu * mu;
    Ok((cj_l1, cj_l4))
}

/// Synodic x-coordinate of L1.
pub fn l1_position<T: Real>(mu: T) -> Result<T> {
    let mut lo = T::half();
    let mut hi = T::one() - mu - T::epsilon();
    let f_lo = collinear_gradient(lo, mu);
    if f_lo > T::zero() {
        // bracket assumption fails only for mu outside the valid range
        return Err(Error::RootSolver {
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    // bisection until the bracket is small, then Newton to machine precision
    for _ in 0..80 {
        let mid = (lo + hi) * T::half();
        if collinear_gradient(mid, mu) <= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < T::lit(1e-6) {
            break;
        }
    }
    let mut x = (lo + hi) * T::half();
    for _ in 0..60 {
        let f = collinear_gradient(x, mu);
        let d1 = x + mu;
        let d2 = x - (T::one() - mu);
        let fp = T::one() + T::two() * (T::one() - mu) / (d1 * d1 * d1)
            - T::two() * mu / (d2 * d2 * d2);
        let step = f / fp;
        x = x - step;
        if step.abs() <= T::lit(1e-14) * x.abs().max(T::one()) {
            return Ok(x);
        }
    }
    // Newton stalls one ulp short of the tolerance in f32; accept the last
    // iterate if the residual is at noise level
    if collinear_gradient(x, mu).abs() < T::lit(1e3) * T::epsilon() {
        Ok(x)
    } else {
        Err(Error::RootSolver {
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Keplerian two-body energy relative to the secondary,
/// ε₂ = v₂²/2 − μ/r₂, from Moon-centered inertial position and velocity.
pub fn two_body_energy_moon<T: Real>(r2: &V3<T>, v2: &V3<T>, mu: T) -> Result<T> {
    let r = vec3::norm(r2);
    if r == T::zero() {
        return Err(Error::CollisionSingularity { which: 2 });
    }
    Ok(vec3::dot(v2, v2) * T::half() - mu / r)
}

/// Synodic → Moon-centered inertial, in the instantaneously aligned
/// convention: translation to the secondary plus v₂ = v + k × r₂.
pub fn synodic_to_moon_inertial<T: Real>(
    state: &State6<T>,
    params: &SystemParams<T>,
) -> Result<State6<T>> {
    state.expect_frame(Frame::Synodic)?;
    let r2 = vec3::sub(&state.r, &params.moon_pos());
    // k = ẑ, so k × r₂ = (−y₂, x₂, 0)
    let v2 = [state.v[0] - r2[1], state.v[1] + r2[0], state.v[2]];
    Ok(State6::new(r2, v2, state.t, Frame::MoonInertialEtdAligned))
}

/// Inverse of [`synodic_to_moon_inertial`]: v = v₂ − k × r₂.
pub fn moon_inertial_to_synodic<T: Real>(
    state: &State6<T>,
    params: &SystemParams<T>,
) -> Result<State6<T>> {
    state.expect_frame(Frame::MoonInertialEtdAligned)?;
    let r = vec3::add(&state.r, &params.moon_pos());
    let v = [state.v[0] + state.r[1], state.v[1] - state.r[0], state.v[2]];
    Ok(State6::new(r, v, state.t, Frame::Synodic))
}

/// Synodic → Earth-centered inertial in the same aligned convention.
pub fn synodic_to_earth_inertial<T: Real>(
    state: &State6<T>,
    params: &SystemParams<T>,
) -> Result<State6<T>> {
    state.expect_frame(Frame::Synodic)?;
    let r1 = [state.r[0] + params.mu, state.r[1], state.r[2]];
    let v1 = [state.v[0] - r1[1], state.v[1] + r1[0], state.v[2]];
    Ok(State6::new(r1, v1, state.t, Frame::EarthInertialEtdAligned))
}

/// ε₂ of a synodic state (transforms to the Moon-centered inertial frame
/// internally).
pub fn eps2_synodic<T: Real>(state: &State6<T>, params: &SystemParams<T>) -> Result<T> {
    let m = synodic_to_moon_inertial(state, params)?;
    two_body_energy_moon(&m.r, &m.v, params.mu)
}

/// Unchecked ε₂ of a raw synodic state array.
#[inline]
pub fn eps2_raw<T: Real>(y: &V6<T>, mu: T) -> T {
    let x2 = y[0] - (T::one() - mu);
    let y2 = y[1];
    let z2 = y[2];
    let v2 = [y[3] - y2, y[4] + x2, y[5]];
    let r = (x2 * x2 + y2 * y2 + z2 * z2).sqrt();
    vec3::dot(&v2, &v2) * T::half() - mu / r
}

/// Sign of dε₂/dτ at a synodic state, from the dot product of the primary's
/// perturbing acceleration with the Moon-relative inertial velocity.
pub fn eps2_dot_sign<T: Real>(state: &State6<T>, params: &SystemParams<T>) -> T {
    eps2_dot_raw(&state.as_array(), params.mu).signum_or_zero()
}

/// Value of dε₂/dτ = a₃ᵦ · v₂ with a₃ᵦ = (1−μ)(−r₁/r₁³ + r₁ − r₂).
#[inline]
pub fn eps2_dot_raw<T: Real>(y: &V6<T>, mu: T) -> T {
    let om = T::one() - mu;
    let r1v = [y[0] + mu, y[1], y[2]];
    let r2v = [y[0] - om, y[1], y[2]];
    let r1 = vec3::norm(&r1v);
    let r1c = r1 * r1 * r1;
    let a3b = [
        om * (-r1v[0] / r1c + r1v[0] - r2v[0]),
        om * (-r1v[1] / r1c + r1v[1] - r2v[1]),
        om * (-r1v[2] / r1c + r1v[2] - r2v[2]),
    ];
    let v2 = [y[3] - r2v[1], y[4] + r2v[0], y[5]];
    vec3::dot(&a3b, &v2)
}

trait SignumOrZero {
    fn signum_or_zero(self) -> Self;
}

impl<T: Real> SignumOrZero for T {
    fn signum_or_zero(self) -> Self {
        if self == T::zero() {
            T::zero()
        } else {
            self.signum()
        }
    }
}
