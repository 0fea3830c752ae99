//! First-order impulsive distance metrics between orbits sharing a central
//! body. Each orbital-element change is priced by a mono-impulsive sub-cost
//! with the remaining elements held at the reference values; the metric is
//! the quadrature sum. Angle differences are wrapped to (−π, π] before use.

use serde::{Deserialize, Serialize};

use crate::elements::OrbitalElements;
use crate::error::{Error, Result};
use crate::real::{wrap_pi, Real};

/// Eccentricities above this are rejected: the sub-cost formulas blow up
/// toward parabolic reference orbits.
const E_MAX: f64 = 0.999;

/// Reference and target element sets entering the metric. `gm` is the
/// gravitational parameter of the shared central body in km³/s²; semi-major
/// axes are in km.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricInput<T> {
    pub reference: ElementSet<T>,
    pub target: ElementSet<T>,
    pub gm: T,
}

/// The five elements the metric prices (true anomaly is not considered;
/// phasing is folded into the semi-major-axis change).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ElementSet<T> {
    pub a: T,
    pub e: T,
    pub i: T,
    pub raan: T,
    pub argp: T,
}

impl<T: Real> ElementSet<T> {
    pub fn from_elements(el: &OrbitalElements<T>) -> Self {
        Self {
            a: el.a,
            e: el.e,
            i: el.i,
            raan: el.raan,
            argp: el.argp,
        }
    }

    /// Orientation of the trajectory mirrored in the primaries' plane:
    /// Ω + π, ω − π, other elements unchanged.
    pub fn z_mirrored(&self) -> Self {
        Self {
            raan: self.raan + T::PI(),
            argp: self.argp - T::PI(),
            ..*self
        }
    }
}

/// Per-element sub-costs and their quadrature total, m/s.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricBreakdown<T> {
    pub dv_a: T,
    pub dv_e: T,
    pub dv_i: T,
    pub dv_raan: T,
    pub dv_argp: T,
    pub total: T,
}

/// Evaluate the metric. The reference elements populate a, e, i inside the
/// formulas; input units are km and radians, output m/s.
pub fn dv_metric<T: Real>(input: &MetricInput<T>) -> Result<MetricBreakdown<T>> {
    let r = &input.reference;
    let t = &input.target;
    for (label, e) in [("reference", r.e), ("target", t.e)] {
        if !(e >= T::zero() && e < T::lit(E_MAX)) {
            return Err(Error::NearParabolic {
                e: e.to_f64().unwrap_or(f64::NAN),
            });
        }
        let _ = label;
    }
    if r.a <= T::zero() || t.a <= T::zero() {
        return Err(Error::DegenerateOrbit("metric needs elliptic orbits"));
    }
    let gm = input.gm;
    // circular speeds at periapsis-flavored and apoapsis-flavored radii of
    // the reference orbit
    let v_peri_flavor = (gm * (T::one() - r.e) / (r.a * (T::one() + r.e))).sqrt();
    let v_mean_flavor = (gm / (r.a * (T::one() - r.e * r.e))).sqrt();

    let da = t.a - r.a;
    let de = t.e - r.e;
    let di = wrap_pi(t.i - r.i);
    let draan = wrap_pi(t.raan - r.raan);
    let dargp = wrap_pi(t.argp - r.argp);

    let km_s_to_m_s = T::lit(1000.0);
    let dv_a = T::half() * (da / r.a) * v_peri_flavor * km_s_to_m_s;
    let dv_e = T::half() * de * v_mean_flavor * km_s_to_m_s;
    let dv_i = v_peri_flavor * di * km_s_to_m_s;
    let dv_raan = v_peri_flavor * r.i.sin() * draan * km_s_to_m_s;
    let dv_argp = T::half() * r.e * v_mean_flavor * dargp * km_s_to_m_s;

    let total = (dv_a * dv_a + dv_e * dv_e + dv_i * dv_i + dv_raan * dv_raan + dv_argp * dv_argp)
        .sqrt();
    Ok(MetricBreakdown {
        dv_a,
        dv_e,
        dv_i,
        dv_raan,
        dv_argp,
        total,
    })
}

/// Which orientation branch a symmetric evaluation picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MirrorBranch {
    Direct,
    Mirrored,
}

/// Evaluate the metric against the target and its plane-mirrored twin, and
/// keep the cheaper branch.
pub fn dv_metric_symmetric<T: Real>(
    reference: &ElementSet<T>,
    target: &ElementSet<T>,
    gm: T,
) -> Result<(MetricBreakdown<T>, MirrorBranch)> {
    let direct = dv_metric(&MetricInput {
        reference: *reference,
        target: *target,
        gm,
    })?;
    let mirrored = dv_metric(&MetricInput {
        reference: *reference,
        target: target.z_mirrored(),
        gm,
    })?;
    if mirrored.total < direct.total {
        Ok((mirrored, MirrorBranch::Mirrored))
    } else {
        Ok((direct, MirrorBranch::Direct))
    }
}

/// Moon-centered variant used to compare perilune pairs: identical formulas
/// with the Moon's gravitational parameter, reference convention fixed to
/// the first argument.
pub fn dv2_metric<T: Real>(
    perilune_a: &ElementSet<T>,
    perilune_b: &ElementSet<T>,
    gm_moon: T,
) -> Result<MetricBreakdown<T>> {
    dv_metric(&MetricInput {
        reference: *perilune_a,
        target: *perilune_b,
        gm: gm_moon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GM_E: f64 = 398_600.435; // km³/s²

    fn reference() -> ElementSet<f64> {
        let d = std::f64::consts::PI / 180.0;
        ElementSet {
            a: 1.6839 * 384_399.0,
            e: 0.2282,
            i: 3.434 * d,
            raan: 124.9858 * d,
            argp: 213.7120 * d,
        }
    }

    #[test]
    fn identical_orbits_cost_nothing() {
        let r = reference();
        let m = dv_metric(&MetricInput {
            reference: r,
            target: r,
            gm: GM_E,
        })
        .unwrap();
        assert_eq!(m.total, 0.0);
    }

    #[test]
    fn single_element_isolation() {
        let r = reference();
        // semi-major axis alone
        let mut t = r;
        t.a += 5_000.0;
        let m = dv_metric(&MetricInput {
            reference: r,
            target: t,
            gm: GM_E,
        })
        .unwrap();
        let expect = 0.5 * (5_000.0 / r.a)
            * (GM_E * (1.0 - r.e) / (r.a * (1.0 + r.e))).sqrt()
            * 1000.0;
        assert!((m.dv_a - expect).abs() < 1e-12 * expect.abs());
        assert!((m.total - expect.abs()).abs() < 1e-12 * expect.abs());
        assert_eq!(m.dv_e, 0.0);
        assert_eq!(m.dv_i, 0.0);

        // eccentricity alone
        let mut t = r;
        t.e += 0.01;
        let m = dv_metric(&MetricInput { reference: r, target: t, gm: GM_E }).unwrap();
        let expect = 0.5 * 0.01 * (GM_E / (r.a * (1.0 - r.e * r.e))).sqrt() * 1000.0;
        assert!((m.dv_e - expect).abs() < 1e-12 * expect);

        // inclination alone
        let mut t = r;
        t.i += 0.02;
        let m = dv_metric(&MetricInput { reference: r, target: t, gm: GM_E }).unwrap();
        let expect = (GM_E * (1.0 - r.e) / (r.a * (1.0 + r.e))).sqrt() * 0.02 * 1000.0;
        assert!((m.dv_i - expect).abs() < 1e-12 * expect);

        // node alone carries the sin i factor
        let mut t = r;
        t.raan += 0.05;
        let m = dv_metric(&MetricInput { reference: r, target: t, gm: GM_E }).unwrap();
        let expect =
            (GM_E * (1.0 - r.e) / (r.a * (1.0 + r.e))).sqrt() * r.i.sin() * 0.05 * 1000.0;
        assert!((m.dv_raan - expect).abs() < 1e-12 * expect);

        // periapsis argument alone carries the e/2 factor
        let mut t = r;
        t.argp += 0.04;
        let m = dv_metric(&MetricInput { reference: r, target: t, gm: GM_E }).unwrap();
        let expect = r.e / 2.0 * (GM_E / (r.a * (1.0 - r.e * r.e))).sqrt() * 0.04 * 1000.0;
        assert!((m.dv_argp - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn angle_wrap_before_pricing() {
        let r = reference();
        let mut t = r;
        // an almost-full positive turn is a small negative difference
        t.argp += std::f64::consts::TAU - 0.01;
        let m = dv_metric(&MetricInput { reference: r, target: t, gm: GM_E }).unwrap();
        let expect = r.e / 2.0 * (GM_E / (r.a * (1.0 - r.e * r.e))).sqrt() * 0.01 * 1000.0;
        assert!((m.dv_argp.abs() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn near_parabolic_rejected() {
        let mut r = reference();
        r.e = 0.9999;
        assert!(matches!(
            dv_metric(&MetricInput { reference: r, target: reference(), gm: GM_E }),
            Err(Error::NearParabolic { .. })
        ));
    }

    #[test]
    fn symmetric_variant_picks_minimum() {
        let r = reference();
        let mut t = r;
        t.i += 0.1;
        t.raan += 1.0;
        t.argp += 0.3;
        let (best, _branch) = dv_metric_symmetric(&r, &t, GM_E).unwrap();
        let direct = dv_metric(&MetricInput { reference: r, target: t, gm: GM_E }).unwrap();
        let mirrored = dv_metric(&MetricInput {
            reference: r,
            target: t.z_mirrored(),
            gm: GM_E,
        })
        .unwrap();
        assert!(best.total <= direct.total + 1e-12);
        assert!(best.total <= mirrored.total + 1e-12);
        // mirroring twice changes nothing
        let (best2, _) = dv_metric_symmetric(&r, &t.z_mirrored().z_mirrored(), GM_E).unwrap();
        assert!((best2.total - best.total).abs() < 1e-9);
    }

    #[test]
    fn equatorial_target_mirror_degeneracy() {
        // at i = 0 both branches price identically: the node term vanishes
        // with sin i and the ω shift by ∓π wraps to the same magnitude
        let mut r = reference();
        r.i = 0.0;
        let mut t = r;
        t.a *= 1.01;
        t.argp += 0.2;
        let direct = dv_metric(&MetricInput { reference: r, target: t, gm: GM_E }).unwrap();
        let mirrored = dv_metric(&MetricInput {
            reference: r,
            target: t.z_mirrored(),
            gm: GM_E,
        })
        .unwrap();
        assert!((direct.dv_raan).abs() < 1e-12);
        assert!((mirrored.dv_raan).abs() < 1e-12);
    }

    #[test]
    fn moon_centered_variant_and_convention() {
        let gm_m = 4902.8;
        let d = std::f64::consts::PI / 180.0;
        let a = ElementSet { a: 3000.0, e: 0.4, i: 88.0 * d, raan: 0.3, argp: 1.2 };
        let b = ElementSet { a: 3200.0, e: 0.42, i: 92.0 * d, raan: 0.35, argp: 1.1 };
        assert_eq!(dv2_metric(&a, &a, gm_m).unwrap().total, 0.0);
        // the reference convention is the first argument, so the evaluation
        // is not symmetric in its arguments but is deterministic per pair
        let ab = dv2_metric(&a, &b, gm_m).unwrap();
        let ab2 = dv2_metric(&a, &b, gm_m).unwrap();
        assert_eq!(ab.total, ab2.total);
        let ba = dv2_metric(&b, &a, gm_m).unwrap();
        assert!((ab.total - ba.total).abs() / ab.total < 0.2);
    }

    proptest! {
        #[test]
        fn metric_scaling_and_positivity(
            da in -0.2f64..0.2,
            de in -0.1f64..0.1,
            di in -0.3f64..0.3,
            dr in -0.5f64..0.5,
            dw in -0.5f64..0.5,
        ) {
            let r = reference();
            let mut t = r;
            t.a *= 1.0 + da;
            t.e = (r.e + de).clamp(0.0, 0.9);
            t.i += di;
            t.raan += dr;
            t.argp += dw;
            let m1 = dv_metric(&MetricInput { reference: r, target: t, gm: GM_E }).unwrap();
            prop_assert!(m1.total >= 0.0);
            // halving every delta halves each sub-cost (formulas linear in Δ)
            let mut th = r;
            th.a = r.a + (t.a - r.a) / 2.0;
            th.e = r.e + (t.e - r.e) / 2.0;
            th.i = r.i + (t.i - r.i) / 2.0;
            th.raan = r.raan + (t.raan - r.raan) / 2.0;
            th.argp = r.argp + (t.argp - r.argp) / 2.0;
            let m2 = dv_metric(&MetricInput { reference: r, target: th, gm: GM_E }).unwrap();
            for (full, half) in [
                (m1.dv_a, m2.dv_a),
                (m1.dv_e, m2.dv_e),
                (m1.dv_i, m2.dv_i),
                (m1.dv_raan, m2.dv_raan),
                (m1.dv_argp, m2.dv_argp),
            ] {
                prop_assert!((full - 2.0 * half).abs() < 1e-9 * full.abs().max(1e-12));
            }
            // dropping a delta never increases the total
            let mut t_no_i = t;
            t_no_i.i = r.i;
            let m3 = dv_metric(&MetricInput { reference: r, target: t_no_i, gm: GM_E }).unwrap();
            prop_assert!(m3.total <= m1.total + 1e-12);
        }
    }
}
