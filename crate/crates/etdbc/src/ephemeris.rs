//! Ephemeris provider abstraction, the frame aligned with the Earth-Moon
//! geometry at a reference epoch, the rotopulsating transformation of
//! initial conditions, and the Earth-Moon-Sun point-mass dynamics.
//!
//! Providers serve Moon and Sun states (km, km/s) in an Earth-centered
//! inertial base frame. Everything downstream works in the aligned frame:
//! x toward the Moon at the reference epoch, z along the Moon's orbital
//! plane normal there. Epochs are seconds past J2000.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cr3bp::{earth_moon, Frame, State6, SystemParams, G_KM3_KG_S2};
use crate::error::{Error, Result};
use crate::propagation::DynModel;
use crate::vec3::{self, Mat3, V3, V6};

/// Central-difference step for Moon acceleration and angular-momentum rate,
/// seconds.
const FD_STEP_S: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Body {
    Moon,
    Sun,
}

/// Source of Moon and Sun states in the Earth-centered base frame.
pub trait EphemerisProvider: Send + Sync {
    /// Position (km) and velocity (km/s) of `body` at epoch `t` s past J2000.
    fn body_state(&self, body: Body, t: f64) -> Result<(V3<f64>, V3<f64>)>;
    /// Covered epoch interval.
    fn coverage(&self) -> (f64, f64);

    fn check_coverage(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.coverage();
        if t < lo || t > hi {
            Err(Error::OutOfCoverage { t, lo, hi })
        } else {
            Ok(())
        }
    }
}

/// Keplerian Moon elements for the analytic provider, defined at `epoch_s`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnalyticMoon {
    pub a_km: f64,
    pub e: f64,
    pub i_rad: f64,
    pub raan_rad: f64,
    pub argp_rad: f64,
    /// Mean anomaly at `epoch_s`.
    pub m0_rad: f64,
    pub epoch_s: f64,
}

/// Circular coplanar Sun for the analytic provider.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnalyticSun {
    pub a_km: f64,
    /// Phase angle in the base x-y plane at `epoch_s`.
    pub phase0_rad: f64,
    pub epoch_s: f64,
}

/// Closed-form Kepler/circular provider. Useful for hermetic testing and as
/// a stand-in when no tabulated ephemeris is supplied.
#[derive(Debug, Clone)]
pub struct AnalyticProvider {
    pub moon: AnalyticMoon,
    pub sun: AnalyticSun,
    /// G(m_E + m_M), km³/s², sets the Moon's mean motion.
    pub gm_earth_moon: f64,
    /// Apparent mean motion of the Sun around the Earth, rad/s.
    pub sun_rate: f64,
}

impl AnalyticProvider {
    pub fn earth_moon_defaults() -> Self {
        use earth_moon::*;
        let gm = G_KM3_KG_S2 * (M_EARTH_KG + M_MOON_KG);
        Self {
            moon: AnalyticMoon {
                a_km: LENGTH_UNIT_KM,
                e: 0.0549,
                i_rad: 5.145f64.to_radians(),
                raan_rad: 0.7,
                argp_rad: 2.1,
                m0_rad: 1.1,
                epoch_s: T_ETD_S,
            },
            sun: AnalyticSun {
                a_km: 1.495979e8,
                phase0_rad: 0.8,
                epoch_s: T_ETD_S,
            },
            gm_earth_moon: gm,
            // one sidereal year
            sun_rate: std::f64::consts::TAU / 3.155815e7,
        }
    }

    /// Circular planar Moon at the mean distance, Sun phase arbitrary;
    /// reproduces the rotating-frame model exactly.
    pub fn circular_moon() -> Self {
        let mut p = Self::earth_moon_defaults();
        p.moon.e = 0.0;
        p.moon.i_rad = 0.0;
        p.moon.raan_rad = 0.0;
        p.moon.argp_rad = 0.0;
        p
    }
}

fn solve_kepler(m: f64, e: f64) -> f64 {
    let mut big_e = m + e * m.sin();
    for _ in 0..30 {
        let f = big_e - e * big_e.sin() - m;
        let fp = 1.0 - e * big_e.cos();
        let step = f / fp;
        big_e -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    big_e
}

impl EphemerisProvider for AnalyticProvider {
    fn body_state(&self, body: Body, t: f64) -> Result<(V3<f64>, V3<f64>)> {
        match body {
            Body::Moon => {
                let mk = &self.moon;
                let n = (self.gm_earth_moon / mk.a_km.powi(3)).sqrt();
                let m = mk.m0_rad + n * (t - mk.epoch_s);
                let big_e = solve_kepler(m, mk.e);
                let (se, ce) = big_e.sin_cos();
                let b = mk.a_km * (1.0 - mk.e * mk.e).sqrt();
                // perifocal position and velocity
                let r_pf = [mk.a_km * (ce - mk.e), b * se, 0.0];
                let rmag = mk.a_km * (1.0 - mk.e * ce);
                let edot = n * mk.a_km / rmag;
                let v_pf = [-mk.a_km * se * edot, b * ce * edot, 0.0];
                let (sr, cr) = mk.raan_rad.sin_cos();
                let (sw, cw) = mk.argp_rad.sin_cos();
                let (si, ci) = mk.i_rad.sin_cos();
                let rot = |u: &V3<f64>| -> V3<f64> {
                    [
                        (cr * cw - sr * sw * ci) * u[0] + (-cr * sw - sr * cw * ci) * u[1],
                        (sr * cw + cr * sw * ci) * u[0] + (-sr * sw + cr * cw * ci) * u[1],
                        sw * si * u[0] + cw * si * u[1],
                    ]
                };
                Ok((rot(&r_pf), rot(&v_pf)))
            }
            Body::Sun => {
                let sk = &self.sun;
                let th = sk.phase0_rad + self.sun_rate * (t - sk.epoch_s);
                let (s, c) = th.sin_cos();
                Ok((
                    [sk.a_km * c, sk.a_km * s, 0.0],
                    [
                        -sk.a_km * self.sun_rate * s,
                        sk.a_km * self.sun_rate * c,
                        0.0,
                    ],
                ))
            }
        }
    }

    fn coverage(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Uniformly sampled states of one body.
#[derive(Debug, Clone)]
pub struct TabulatedBody {
    pub t0: f64,
    pub step: f64,
    /// (r, v) per record, km and km/s.
    pub states: Vec<V6<f64>>,
}

impl TabulatedBody {
    fn t_end(&self) -> f64 {
        self.t0 + self.step * (self.states.len() - 1) as f64
    }

    /// Cubic Hermite interpolation: positions from endpoint positions and
    /// velocities, velocity as the derivative of the same cubic (continuous
    /// at the knots by construction).
    fn sample(&self, t: f64) -> (V3<f64>, V3<f64>) {
        let idx_f = (t - self.t0) / self.step;
        let idx = (idx_f.floor() as usize).min(self.states.len() - 2);
        let s = idx_f - idx as f64;
        let h = self.step;
        let y0 = &self.states[idx];
        let y1 = &self.states[idx + 1];
        let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
        let h10 = s * s * s - 2.0 * s * s + s;
        let h01 = -2.0 * s * s * s + 3.0 * s * s;
        let h11 = s * s * s - s * s;
        let dh00 = (6.0 * s * s - 6.0 * s) / h;
        let dh10 = (3.0 * s * s - 4.0 * s + 1.0) / h;
        let dh01 = (-6.0 * s * s + 6.0 * s) / h;
        let dh11 = (3.0 * s * s - 2.0 * s) / h;
        let mut r = [0.0; 3];
        let mut v = [0.0; 3];
        for k in 0..3 {
            r[k] = h00 * y0[k] + h10 * h * y0[k + 3] + h01 * y1[k] + h11 * h * y1[k + 3];
            v[k] = dh00 * y0[k] + dh10 * h * y0[k + 3] + dh01 * y1[k] + dh11 * h * y1[k + 3];
        }
        (r, v)
    }

    /// Validate ordering, uniformity, and velocity/position consistency
    /// (central-difference residual below 1e-6 km/s on interior knots).
    pub fn validate(&self, path: &str) -> Result<()> {
        if self.states.len() < 4 {
            return Err(Error::Malformed {
                path: path.into(),
                reason: "need at least 4 records".into(),
            });
        }
        if self.step <= 0.0 {
            return Err(Error::Malformed {
                path: path.into(),
                reason: "non-positive step".into(),
            });
        }
        for i in 1..self.states.len() - 1 {
            for k in 0..3 {
                let fd = (self.states[i + 1][k] - self.states[i - 1][k]) / (2.0 * self.step);
                if (fd - self.states[i][k + 3]).abs() > 1e-6 {
                    return Err(Error::Malformed {
                        path: path.into(),
                        reason: format!(
                            "velocity inconsistent with position derivative at record {i} \
                             (residual {:.3e} km/s); sample the source more finely",
                            (fd - self.states[i][k + 3]).abs()
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Provider backed by tabulated state files.
#[derive(Debug, Clone)]
pub struct TabulatedProvider {
    pub moon: TabulatedBody,
    pub sun: TabulatedBody,
}

impl TabulatedProvider {
    pub fn from_files<P: AsRef<Path>>(moon: P, sun: P) -> Result<Self> {
        let moon = load_body_table(moon.as_ref(), "moon")?;
        let sun = load_body_table(sun.as_ref(), "sun")?;
        Ok(Self { moon, sun })
    }

    /// Sample an existing provider onto uniform tables (also the reference
    /// implementation of the file format writer).
    pub fn sample_from(
        provider: &dyn EphemerisProvider,
        t0: f64,
        t1: f64,
        step: f64,
    ) -> Result<Self> {
        let n = ((t1 - t0) / step).ceil() as usize + 1;
        let mut grab = |body: Body| -> Result<TabulatedBody> {
            let mut states = Vec::with_capacity(n);
            for i in 0..n {
                let (r, v) = provider.body_state(body, t0 + step * i as f64)?;
                states.push([r[0], r[1], r[2], v[0], v[1], v[2]]);
            }
            Ok(TabulatedBody { t0, step, states })
        };
        Ok(Self {
            moon: grab(Body::Moon)?,
            sun: grab(Body::Sun)?,
        })
    }

    pub fn write_files<P: AsRef<Path>>(&self, moon: P, sun: P, frame_label: &str) -> Result<()> {
        write_body_table(&self.moon, moon.as_ref(), "moon", frame_label)?;
        write_body_table(&self.sun, sun.as_ref(), "sun", frame_label)
    }
}

impl EphemerisProvider for TabulatedProvider {
    fn body_state(&self, body: Body, t: f64) -> Result<(V3<f64>, V3<f64>)> {
        self.check_coverage(t)?;
        let table = match body {
            Body::Moon => &self.moon,
            Body::Sun => &self.sun,
        };
        Ok(table.sample(t))
    }

    fn coverage(&self) -> (f64, f64) {
        (
            self.moon.t0.max(self.sun.t0),
            self.moon.t_end().min(self.sun.t_end()),
        )
    }
}

fn load_body_table(path: &Path, expect_body: &str) -> Result<TabulatedBody> {
    let pstr = path.display().to_string();
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut body_label = String::new();
    let mut step = f64::NAN;
    let mut rows: Vec<(f64, V6<f64>)> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("body:") {
                body_label = v.trim().to_string();
            } else if let Some(v) = rest.strip_prefix("step_s:") {
                step = v.trim().parse().map_err(|_| Error::Malformed {
                    path: pstr.clone(),
                    reason: "bad step_s header".into(),
                })?;
            }
            continue;
        }
        if line.starts_with("t_s") {
            continue; // column header
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 7 {
            return Err(Error::Malformed {
                path: pstr,
                reason: format!("expected 7 columns, got {}", cols.len()),
            });
        }
        let mut vals = [0.0f64; 7];
        for (k, c) in cols.iter().enumerate() {
            vals[k] = c.parse().map_err(|_| Error::Malformed {
                path: pstr.clone(),
                reason: format!("bad number: {c}"),
            })?;
        }
        rows.push((
            vals[0],
            [vals[1], vals[2], vals[3], vals[4], vals[5], vals[6]],
        ));
    }
    if body_label != expect_body {
        return Err(Error::Malformed {
            path: pstr,
            reason: format!("expected body '{expect_body}', found '{body_label}'"),
        });
    }
    if rows.len() < 2 {
        return Err(Error::Malformed {
            path: pstr,
            reason: "too few records".into(),
        });
    }
    let t0 = rows[0].0;
    let inferred = rows[1].0 - rows[0].0;
    let step = if step.is_nan() { inferred } else { step };
    for (i, pair) in rows.windows(2).enumerate() {
        let dt = pair[1].0 - pair[0].0;
        if (dt - step).abs() > 1e-9 * step.max(1.0) {
            return Err(Error::Malformed {
                path: pstr,
                reason: format!("non-uniform step between records {i} and {}", i + 1),
            });
        }
    }
    let table = TabulatedBody {
        t0,
        step,
        states: rows.into_iter().map(|(_, s)| s).collect(),
    };
    table.validate(&pstr)?;
    Ok(table)
}

fn write_body_table(table: &TabulatedBody, path: &Path, body: &str, frame: &str) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# etdbc-ephemeris v1")?;
    writeln!(f, "# body: {body}")?;
    writeln!(f, "# frame: {frame}")?;
    writeln!(f, "# t0_s: {}", table.t0)?;
    writeln!(f, "# step_s: {}", table.step)?;
    writeln!(f, "t_s,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms")?;
    for (i, s) in table.states.iter().enumerate() {
        let t = table.t0 + table.step * i as f64;
        writeln!(
            f,
            "{t},{},{},{},{},{},{}",
            s[0], s[1], s[2], s[3], s[4], s[5]
        )?;
    }
    Ok(())
}

/// Rotation from the provider's base frame into axes aligned with the
/// Earth-Moon geometry at the reference epoch: x along Earth→Moon, z along
/// the Moon's orbital plane normal.
#[derive(Debug, Clone, Copy)]
pub struct EtdAlignedFrames {
    pub t_etd: f64,
    /// base → aligned rotation.
    pub rot: Mat3<f64>,
}

impl EtdAlignedFrames {
    pub fn align(provider: &dyn EphemerisProvider, t_etd: f64) -> Result<Self> {
        provider.check_coverage(t_etd)?;
        let (r_m, v_m) = provider.body_state(Body::Moon, t_etd)?;
        let e1 = vec3::unit(&r_m);
        let h = vec3::cross(&r_m, &v_m);
        if vec3::norm(&h) == 0.0 {
            return Err(Error::DegenerateOrbit("Moon angular momentum vanishes"));
        }
        let e3 = vec3::unit(&h);
        let e2 = vec3::cross(&e3, &e1);
        // rows are the aligned axes in base coordinates
        let rot = Mat3([e1, e2, e3]);
        debug_assert!(rot.orthonormality_residual() < 1e-14);
        Ok(Self { t_etd, rot })
    }
}

/// Provider + frame + gravitational parameters, ready for propagation.
pub struct EphemerisContext {
    pub provider: Arc<dyn EphemerisProvider>,
    pub frames: EtdAlignedFrames,
    pub params: SystemParams<f64>,
    pub gm_earth_km: f64,
    pub gm_moon_km: f64,
    pub gm_sun_km: f64,
}

impl EphemerisContext {
    pub fn new(
        provider: Arc<dyn EphemerisProvider>,
        t_etd: f64,
        params: SystemParams<f64>,
    ) -> Result<Self> {
        let frames = EtdAlignedFrames::align(provider.as_ref(), t_etd)?;
        use earth_moon::*;
        Ok(Self {
            provider,
            frames,
            params,
            gm_earth_km: G_KM3_KG_S2 * M_EARTH_KG,
            gm_moon_km: G_KM3_KG_S2 * M_MOON_KG,
            gm_sun_km: G_KM3_KG_S2 * M_SUN_KG,
        })
    }

    /// Body state rotated into the aligned frame, km and km/s.
    pub fn body_state_aligned(&self, body: Body, t: f64) -> Result<(V3<f64>, V3<f64>)> {
        let (r, v) = self.provider.body_state(body, t)?;
        Ok((self.frames.rot.mul_vec(&r), self.frames.rot.mul_vec(&v)))
    }

    /// Moon acceleration in the aligned frame by central differences of the
    /// provider velocity, km/s².
    pub fn moon_accel_aligned(&self, t: f64) -> Result<V3<f64>> {
        let (_, vp) = self.body_state_aligned(Body::Moon, t + FD_STEP_S)?;
        let (_, vm) = self.body_state_aligned(Body::Moon, t - FD_STEP_S)?;
        Ok(vec3::scale(&vec3::sub(&vp, &vm), 1.0 / (2.0 * FD_STEP_S)))
    }

    /// Dimensionless epoch (time units past the alignment epoch) of a
    /// dimensional epoch in seconds.
    pub fn tau_of_epoch(&self, t_s: f64) -> f64 {
        (t_s - self.frames.t_etd) / self.params.time_unit_s
    }

    pub fn epoch_of_tau(&self, tau: f64) -> f64 {
        self.frames.t_etd + tau * self.params.time_unit_s
    }

    /// Scale a dimensional aligned-frame state (km, km/s, s) into length
    /// units with dimensionless time.
    pub fn scale_to_lu(&self, st: &State6<f64>) -> State6<f64> {
        let lu = self.params.length_unit_km;
        let vu = self.params.velocity_unit_kms;
        State6::new(
            vec3::scale(&st.r, 1.0 / lu),
            vec3::scale(&st.v, 1.0 / vu),
            self.tau_of_epoch(st.t),
            Frame::EarthInertialEtdAligned,
        )
    }

    pub fn scale_to_km(&self, st: &State6<f64>) -> State6<f64> {
        let lu = self.params.length_unit_km;
        let vu = self.params.velocity_unit_kms;
        State6::new(
            vec3::scale(&st.r, lu),
            vec3::scale(&st.v, vu),
            self.epoch_of_tau(st.t),
            Frame::EphemerisInertial,
        )
    }
}

/// Snapshot of the rotopulsating-frame kinematics at one epoch.
#[derive(Debug, Clone, Copy)]
pub struct RotopulsState {
    /// Earth-Moon barycenter position in the aligned Earth-centered frame, km.
    pub b: V3<f64>,
    /// Barycenter velocity, km/s.
    pub b_prime: V3<f64>,
    /// Earth-Moon distance, km.
    pub ell: f64,
    /// d ell / dT, km/s.
    pub ell_prime: f64,
    /// Synodic → aligned-inertial direction cosine matrix (columns e1 e2 e3).
    pub c: Mat3<f64>,
    /// dC/dT, 1/s.
    pub c_prime: Mat3<f64>,
    /// dτ/dT = √(G(m_E+m_M)/ℓ³), 1/s.
    pub tau_prime: f64,
    /// Epoch, s past J2000.
    pub t: f64,
}

/// Build the rotopulsating kinematics at epoch `t` from the provider's Moon
/// state. The Moon acceleration and angular-momentum rate come from central
/// finite differences.
pub fn build_rotopuls(ctx: &EphemerisContext, t: f64) -> Result<RotopulsState> {
    ctx.provider.check_coverage(t)?;
    let (r_m, v_m) = ctx.body_state_aligned(Body::Moon, t)?;
    let ell = vec3::norm(&r_m);
    if ell == 0.0 {
        return Err(Error::DegenerateOrbit("Moon at the Earth's center"));
    }
    let ell_prime = vec3::dot(&r_m, &v_m) / ell;
    let h_vec = vec3::cross(&r_m, &v_m);
    let h = vec3::norm(&h_vec);
    if h == 0.0 {
        return Err(Error::DegenerateOrbit("Moon angular momentum vanishes"));
    }
    let a_m = ctx.moon_accel_aligned(t)?;
    // h rate by the same central difference
    let h_at = |tt: f64| -> Result<f64> {
        let (r, v) = ctx.body_state_aligned(Body::Moon, tt)?;
        Ok(vec3::norm(&vec3::cross(&r, &v)))
    };
    let h_prime = (h_at(t + FD_STEP_S)? - h_at(t - FD_STEP_S)?) / (2.0 * FD_STEP_S);

    let e1 = vec3::scale(&r_m, 1.0 / ell);
    let e3 = vec3::scale(&h_vec, 1.0 / h);
    let e2 = vec3::cross(&e3, &e1);
    let e1p = vec3::scale(
        &vec3::sub(&vec3::scale(&v_m, ell), &vec3::scale(&r_m, ell_prime)),
        1.0 / (ell * ell),
    );
    let r_cross_a = vec3::cross(&r_m, &a_m);
    let e3p = vec3::scale(
        &vec3::sub(&vec3::scale(&r_cross_a, h), &vec3::scale(&h_vec, h_prime)),
        1.0 / (h * h),
    );
    let e2p = vec3::add(&vec3::cross(&e3p, &e1), &vec3::cross(&e3, &e1p));

    let mass_fraction = ctx.params.mu; // m_M / (m_E + m_M)
    let b = vec3::scale(&r_m, mass_fraction);
    let b_prime = vec3::scale(&v_m, mass_fraction);
    let tau_prime = (ctx.params.gm_sum_km3_s2() / (ell * ell * ell)).sqrt();

    Ok(RotopulsState {
        b,
        b_prime,
        ell,
        ell_prime,
        c: Mat3::from_columns(&e1, &e2, &e3),
        c_prime: Mat3::from_columns(&e1p, &e2p, &e3p),
        tau_prime,
        t,
    })
}

/// Map a dimensionless synodic state through the rotopulsating frame into
/// the aligned Earth-centered inertial frame (km, km/s).
pub fn synodic_to_ephemeris(ic: &State6<f64>, rp: &RotopulsState) -> Result<State6<f64>> {
    if ic.frame != Frame::Synodic {
        return Err(Error::FrameMismatch {
            expected: Frame::Synodic,
            got: ic.frame,
        });
    }
    let r = ic.r;
    let v = ic.v;
    let big_r = vec3::add(&rp.b, &vec3::scale(&rp.c.mul_vec(&r), rp.ell));
    // R' = B' + (ℓ'C + ℓC')r + ℓCτ'v
    let term_r = rp
        .c
        .scale(rp.ell_prime)
        .add(&rp.c_prime.scale(rp.ell))
        .mul_vec(&r);
    let term_v = vec3::scale(&rp.c.mul_vec(&v), rp.ell * rp.tau_prime);
    let big_v = vec3::add(&rp.b_prime, &vec3::add(&term_r, &term_v));
    Ok(State6::new(big_r, big_v, rp.t, Frame::EphemerisInertial))
}

/// Inverse of [`synodic_to_ephemeris`].
pub fn ephemeris_to_synodic(st: &State6<f64>, rp: &RotopulsState) -> Result<State6<f64>> {
    if st.frame != Frame::EphemerisInertial {
        return Err(Error::FrameMismatch {
            expected: Frame::EphemerisInertial,
            got: st.frame,
        });
    }
    let ct = rp.c.transpose();
    let r = vec3::scale(&ct.mul_vec(&vec3::sub(&st.r, &rp.b)), 1.0 / rp.ell);
    let term_r = rp
        .c
        .scale(rp.ell_prime)
        .add(&rp.c_prime.scale(rp.ell))
        .mul_vec(&r);
    let v = vec3::scale(
        &ct.mul_vec(&vec3::sub(&vec3::sub(&st.v, &rp.b_prime), &term_r)),
        1.0 / (rp.ell * rp.tau_prime),
    );
    Ok(State6::new(r, v, 0.0, Frame::Synodic))
}

/// Point-mass acceleration of a spacecraft at aligned-frame position `r`
/// (km) and epoch `t`: Earth monopole plus Moon and Sun third-body terms
/// with their indirect parts.
pub fn eom_nbody(ctx: &EphemerisContext, r: &V3<f64>, t: f64) -> Result<V3<f64>> {
    let rn = vec3::norm(r);
    if rn == 0.0 {
        return Err(Error::CollisionSingularity { which: 1 });
    }
    let (r_m, _) = ctx.body_state_aligned(Body::Moon, t)?;
    let (r_s, _) = ctx.body_state_aligned(Body::Sun, t)?;
    Ok(nbody_accel(
        r,
        &r_m,
        &r_s,
        ctx.gm_earth_km,
        ctx.gm_moon_km,
        ctx.gm_sun_km,
    ))
}

#[inline]
fn nbody_accel(
    r: &V3<f64>,
    r_m: &V3<f64>,
    r_s: &V3<f64>,
    gm_e: f64,
    gm_m: f64,
    gm_s: f64,
) -> V3<f64> {
    let mut acc = [0.0; 3];
    let rn = vec3::norm(r);
    let rn3 = rn * rn * rn;
    for k in 0..3 {
        acc[k] -= gm_e * r[k] / rn3;
    }
    for (gm, rb) in [(gm_m, r_m), (gm_s, r_s)] {
        if gm == 0.0 {
            continue;
        }
        let d = vec3::sub(r, rb);
        let dn = vec3::norm(&d);
        let dn3 = dn * dn * dn;
        let bn = vec3::norm(rb);
        let bn3 = bn * bn * bn;
        for k in 0..3 {
            acc[k] -= gm * (d[k] / dn3 + rb[k] / bn3);
        }
    }
    acc
}

/// The Earth-Moon-Sun dynamics wrapped into dimensionless units: positions
/// in length units, the Moon period 2π time units, epochs offset from the
/// alignment epoch. Dimensionless gravitational parameters are mass
/// fractions of the primary pair.
pub struct EphemerisModel<'a> {
    pub ctx: &'a EphemerisContext,
    gm_earth: f64,
    gm_moon: f64,
    gm_sun: f64,
}

impl<'a> EphemerisModel<'a> {
    pub fn new(ctx: &'a EphemerisContext) -> Self {
        let gm_sum = ctx.gm_earth_km + ctx.gm_moon_km;
        Self {
            ctx,
            gm_earth: ctx.gm_earth_km / gm_sum,
            gm_moon: ctx.gm_moon_km / gm_sum,
            gm_sun: ctx.gm_sun_km / gm_sum,
        }
    }

    /// Override the dimensionless Sun and Moon strengths (testing hook for
    /// degenerate dynamics).
    pub fn with_gm(mut self, gm_moon: f64, gm_sun: f64) -> Self {
        self.gm_moon = gm_moon;
        self.gm_sun = gm_sun;
        self
    }

    fn bodies_lu(&self, tau: f64) -> (V3<f64>, V3<f64>, V3<f64>, V3<f64>) {
        let t = self.ctx.epoch_of_tau(tau);
        let lu = self.ctx.params.length_unit_km;
        let vu = self.ctx.params.velocity_unit_kms;
        // coverage is checked at propagation setup; a hard failure here
        // would mean the horizon outruns the table
        let (rm, vm) = self
            .ctx
            .body_state_aligned(Body::Moon, t)
            .expect("moon state inside coverage");
        let (rs, _) = self
            .ctx
            .body_state_aligned(Body::Sun, t)
            .expect("sun state inside coverage");
        (
            vec3::scale(&rm, 1.0 / lu),
            vec3::scale(&vm, 1.0 / vu),
            vec3::scale(&rs, 1.0 / lu),
            [0.0; 3],
        )
    }

    /// Moon acceleration in dimensionless units.
    fn moon_accel_lu(&self, tau: f64) -> V3<f64> {
        let t = self.ctx.epoch_of_tau(tau);
        let a_km = self.ctx.moon_accel_aligned(t).expect("inside coverage");
        let scale = self.ctx.params.time_unit_s.powi(2) / self.ctx.params.length_unit_km;
        vec3::scale(&a_km, scale)
    }
}

impl DynModel for EphemerisModel<'_> {
    fn deriv(&self, tau: f64, y: &V6<f64>, dydt: &mut V6<f64>) {
        let (rm, _, rs, _) = self.bodies_lu(tau);
        let r = [y[0], y[1], y[2]];
        let acc = nbody_accel(&r, &rm, &rs, self.gm_earth, self.gm_moon, self.gm_sun);
        dydt[0] = y[3];
        dydt[1] = y[4];
        dydt[2] = y[5];
        dydt[3] = acc[0];
        dydt[4] = acc[1];
        dydt[5] = acc[2];
    }

    fn moon_rel(&self, tau: f64, y: &V6<f64>) -> (V3<f64>, V3<f64>) {
        let (rm, vm, _, _) = self.bodies_lu(tau);
        (
            [y[0] - rm[0], y[1] - rm[1], y[2] - rm[2]],
            [y[3] - vm[0], y[4] - vm[1], y[5] - vm[2]],
        )
    }

    fn earth_rel(&self, _tau: f64, y: &V6<f64>) -> (V3<f64>, V3<f64>) {
        ([y[0], y[1], y[2]], [y[3], y[4], y[5]])
    }

    fn gm_moon(&self) -> f64 {
        self.gm_moon
    }

    fn gm_earth(&self) -> f64 {
        self.gm_earth
    }

    fn eps2_dot(&self, tau: f64, y: &V6<f64>) -> f64 {
        let (r_rel, v_rel) = self.moon_rel(tau, y);
        let mut dydt = [0.0; 6];
        self.deriv(tau, y, &mut dydt);
        let a_sat = [dydt[3], dydt[4], dydt[5]];
        let a_moon = self.moon_accel_lu(tau);
        let a_rel = vec3::sub(&a_sat, &a_moon);
        let rn = vec3::norm(&r_rel);
        vec3::dot(&v_rel, &a_rel) + self.gm_moon * vec3::dot(&r_rel, &v_rel) / (rn * rn * rn)
    }
}
