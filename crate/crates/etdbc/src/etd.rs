//! Energy transition domain: membership of configuration-space points and
//! generation of the one-parameter family of initial conditions with zero
//! Moon-relative two-body energy at a fixed Jacobi constant.
//!
//! Both constraints are spheres in synodic velocity space: ε₂ = 0 is a sphere
//! of radius r_ε = √(2μ/r₂) centered at C₁ = (y₂, −x₂, 0), and C_J = const is
//! a sphere of radius r_J centered at the origin. A point belongs to the
//! domain exactly when the spheres intersect.

use serde::{Deserialize, Serialize};

use crate::cr3bp::{cj_from_gamma, eps2_raw, jacobi_raw, primary_distances, State6, SystemParams};
use crate::error::{Error, Result};
use crate::real::{wrap_two_pi, Real};
use crate::vec3::V3;

/// Relative tolerance for tangency classification, in velocity units.
const TANGENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntersectStatus {
    /// Transversal intersection: a circle of solutions.
    Circle,
    /// Spheres touch at a single point.
    Tangent,
    /// Spheres too far apart, or no real velocity satisfies the Jacobi
    /// constant at this position.
    Disjoint,
    /// One sphere strictly inside the other.
    Contained,
    /// Concentric spheres of equal radius: the whole sphere solves both
    /// constraints (occurs only on the vertical axis through the secondary).
    DegenerateCoincident,
}

/// Two-sphere intersection data at one configuration-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereIntersection<T> {
    /// Radius of the ε₂ = 0 sphere, √(2μ/r₂).
    pub r_eps: T,
    /// Radius of the Jacobi sphere (0 when no real velocity exists).
    pub r_j: T,
    /// Squared Jacobi-sphere radius; negative means the position is inside
    /// the forbidden region for this C_J.
    pub r_j_sq: T,
    /// Distance of the ε₂-sphere center from the origin, √(x₂² + y₂²).
    pub r_c1: T,
    pub status: IntersectStatus,
}

impl<T: Real> SphereIntersection<T> {
    pub fn is_member(&self) -> bool {
        matches!(
            self.status,
            IntersectStatus::Circle | IntersectStatus::Tangent | IntersectStatus::DegenerateCoincident
        )
    }

    /// True when no real velocity satisfies the Jacobi constant here.
    pub fn is_forbidden(&self) -> bool {
        self.r_j_sq < T::zero()
    }
}

/// Which of the two in-plane velocity solutions a state came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// η = asin(c/A) + α.
    EtaPlus,
    /// η = π − asin(c/A) + α.
    EtaMinus,
}

impl Branch {
    pub fn index(self) -> u8 {
        match self {
            Branch::EtaPlus => 0,
            Branch::EtaMinus => 1,
        }
    }

    pub fn from_index(i: u8) -> Self {
        if i == 0 {
            Branch::EtaPlus
        } else {
            Branch::EtaMinus
        }
    }
}

/// A domain initial condition parameterized by position, energy level, and
/// velocity declination. `sigma` is stored to disambiguate the branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtdPoint<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub gamma: T,
    /// Declination of the Moon-relative inertial velocity, radians.
    pub zeta: T,
    /// Injection angle σ = η − α, radians.
    pub sigma: T,
    pub branch: Branch,
}

/// Decide whether `(x, y, z)` belongs to the domain at Jacobi constant `cj`.
pub fn etd_membership<T: Real>(
    pos: &V3<T>,
    cj: T,
    params: &SystemParams<T>,
) -> Result<SphereIntersection<T>> {
    let mu = params.mu;
    let (r1, r2) = primary_distances(pos, mu);
    if r2 == T::zero() {
        return Err(Error::CollisionSingularity { which: 2 });
    }
    if r1 == T::zero() {
        return Err(Error::CollisionSingularity { which: 1 });
    }
    let r_eps = (T::two() * mu / r2).sqrt();
    let r_j_sq = pos[0] * pos[0] + pos[1] * pos[1] + T::two() * (T::one() - mu) / r1
        + T::two() * mu / r2
        - cj;
    let x2 = pos[0] - (T::one() - mu);
    let y2 = pos[1];
    let r_c1 = (x2 * x2 + y2 * y2).sqrt();

    if r_j_sq < T::zero() {
        return Ok(SphereIntersection {
            r_eps,
            r_j: T::zero(),
            r_j_sq,
            r_c1,
            status: IntersectStatus::Disjoint,
        });
    }
    let r_j = r_j_sq.sqrt();
    let tol = T::lit(TANGENT_TOL);
    let diff = (r_j - r_eps).abs();
    let sum = r_j + r_eps;

    let status = if r_c1 <= tol {
        if diff <= tol {
            IntersectStatus::DegenerateCoincident
        } else {
            IntersectStatus::Contained
        }
    } else if (r_c1 - sum).abs() < tol || (r_c1 - diff).abs() < tol {
        IntersectStatus::Tangent
    } else if r_c1 > sum {
        IntersectStatus::Disjoint
    } else if r_c1 < diff {
        IntersectStatus::Contained
    } else {
        IntersectStatus::Circle
    };

    Ok(SphereIntersection {
        r_eps,
        r_j,
        r_j_sq,
        r_c1,
        status,
    })
}

/// cos ζ below this counts as a pole (|ζ| = π/2 up to rounding).
#[inline]
fn pole_tol<T: Real>() -> T {
    T::epsilon() * T::lit(8.0)
}

/// Numerator shared by the added-angle coefficient and the injection angle:
/// 2(1−μ)/r₁ + 2(1−μ)x − (1−μ)² − C_J.
#[inline]
fn added_angle_numerator<T: Real>(pos: &V3<T>, cj: T, mu: T) -> T {
    let om = T::one() - mu;
    let (r1, _) = primary_distances(pos, mu);
    T::two() * om / r1 + T::two() * om * pos[0] - om * om - cj
}

/// sin σ at a point, energy level, and declination. The domain condition is
/// −1 ≤ sin σ ≤ 1.
pub fn injection_angle<T: Real>(
    pos: &V3<T>,
    gamma: T,
    zeta: T,
    params: &SystemParams<T>,
) -> Result<T> {
    let mu = params.mu;
    let cj = cj_from_gamma(gamma, params);
    let (_, r2) = primary_distances(pos, mu);
    if r2 == T::zero() {
        return Err(Error::CollisionSingularity { which: 2 });
    }
    let x2 = pos[0] - (T::one() - mu);
    let y2 = pos[1];
    let r_c1 = (x2 * x2 + y2 * y2).sqrt();
    if r_c1 == T::zero() {
        return Err(Error::AxisSingularity);
    }
    let cz = zeta.cos();
    if cz.abs() < pole_tol::<T>() {
        return Err(Error::PoleCase);
    }
    let v2 = (T::two() * mu / r2).sqrt();
    Ok(added_angle_numerator(pos, cj, mu) / (T::two() * v2 * cz * r_c1))
}

/// Half-width of the admissible declination band at a point and energy
/// level: |ζ| ≤ ζ_max solves |sin σ| ≤ 1 in closed form. `None` when the
/// point is outside the domain even at ζ = 0.
pub fn zeta_band<T: Real>(pos: &V3<T>, gamma: T, params: &SystemParams<T>) -> Result<Option<T>> {
    let mu = params.mu;
    let cj = cj_from_gamma(gamma, params);
    let (_, r2) = primary_distances(pos, mu);
    if r2 == T::zero() {
        return Err(Error::CollisionSingularity { which: 2 });
    }
    let x2 = pos[0] - (T::one() - mu);
    let y2 = pos[1];
    let r_c1 = (x2 * x2 + y2 * y2).sqrt();
    if r_c1 == T::zero() {
        return Err(Error::AxisSingularity);
    }
    let v2 = (T::two() * mu / r2).sqrt();
    let ratio = added_angle_numerator(pos, cj, mu).abs() / (T::two() * v2 * r_c1);
    if ratio > T::one() {
        Ok(None)
    } else {
        // |cos ζ| ≥ ratio, declination restricted to (−π/2, π/2)
        Ok(Some(ratio.min(T::one()).acos()))
    }
}

/// Generated initial condition: the synodic state plus its domain
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtdIc<T> {
    pub point: EtdPoint<T>,
    pub state: State6<T>,
}

/// Generate the up-to-two synodic initial conditions at a position, energy
/// level, and declination.
///
/// Returns an empty vector when the declination lies outside the admissible
/// band, one state at a tangency (sin σ = ±1), two otherwise.
pub fn etd_initial_conditions<T: Real>(
    pos: &V3<T>,
    gamma: T,
    zeta: T,
    params: &SystemParams<T>,
) -> Result<Vec<EtdIc<T>>> {
    let mu = params.mu;
    let cj = cj_from_gamma(gamma, params);
    let (r1, r2) = primary_distances(pos, mu);
    if r2 == T::zero() || r1 == T::zero() {
        return Err(Error::CollisionSingularity {
            which: if r2 == T::zero() { 2 } else { 1 },
        });
    }
    let x2 = pos[0] - (T::one() - mu);
    let y2 = pos[1];
    let a = -x2;
    let b = y2;
    let big_a = (a * a + b * b).sqrt();
    if big_a == T::zero() {
        return Err(Error::AxisSingularity);
    }
    let cz = zeta.cos();
    if cz.abs() < pole_tol::<T>() {
        return Err(Error::PoleCase);
    }
    let v2 = (T::two() * mu / r2).sqrt();
    let c = added_angle_numerator(pos, cj, mu) / (T::two() * v2 * cz);
    let ratio = c / big_a;
    if ratio.abs() > T::one() {
        return Ok(Vec::new());
    }
    // α measured counterclockwise from the negative x-axis
    let alpha = (-y2).atan2(-x2);
    let asin_c = ratio.asin();
    let eta_plus = asin_c + alpha;
    let eta_minus = T::PI() - asin_c + alpha;

    let sz = zeta.sin();
    let mut out = Vec::with_capacity(2);
    let mut push = |eta: T, sigma: T, branch: Branch| {
        let (se, ce) = eta.sin_cos();
        let v2_vec = [v2 * ce * cz, v2 * se * cz, v2 * sz];
        // synodic velocity v = v₂ − k × r₂
        let v = [v2_vec[0] + y2, v2_vec[1] - x2, v2_vec[2]];
        out.push(EtdIc {
            point: EtdPoint {
                x: pos[0],
                y: pos[1],
                z: pos[2],
                gamma,
                zeta,
                sigma: wrap_two_pi(sigma),
                branch,
            },
            state: State6::synodic(*pos, v, T::zero()),
        });
    };

    push(eta_plus, asin_c, Branch::EtaPlus);
    // at a tangency both solutions coincide; return one state
    if (ratio.abs() - T::one()).abs() > T::lit(1e-15) {
        push(eta_minus, T::PI() - asin_c, Branch::EtaMinus);
    }

    debug_assert!(out.iter().all(|ic| {
        let y = ic.state.as_array();
        eps2_raw(&y, mu).abs() < T::lit(1e-10) && (jacobi_raw(&y, mu) - cj).abs() < T::lit(1e-10)
    }));
    Ok(out)
}

/// Sample the two-parameter solution family on the vertical axis through the
/// secondary, where the constraint spheres coincide for exactly one Jacobi
/// constant per height.
pub fn etd_axis_sampler<T: Real>(
    z: T,
    eta: T,
    zeta: T,
    params: &SystemParams<T>,
) -> Result<EtdIc<T>> {
    let mu = params.mu;
    if z == T::zero() {
        return Err(Error::CollisionSingularity { which: 2 });
    }
    let pos = [T::one() - mu, T::zero(), z];
    let cj = axis_degenerate_cj(z, mu);
    let v2 = (T::two() * mu / z.abs()).sqrt();
    let (se, ce) = eta.sin_cos();
    let (sz, cz) = zeta.sin_cos();
    let v2_vec = [v2 * ce * cz, v2 * se * cz, v2 * sz];
    let v = [v2_vec[0], v2_vec[1] - T::zero(), v2_vec[2]]; // x₂ = y₂ = 0 here
    let gamma = crate::cr3bp::gamma_from_cj(cj, params);
    Ok(EtdIc {
        point: EtdPoint {
            x: pos[0],
            y: pos[1],
            z,
            gamma,
            zeta,
            sigma: T::zero(),
            branch: Branch::EtaPlus,
        },
        state: State6::synodic(pos, v, T::zero()),
    })
}

/// The unique Jacobi constant admitting solutions at (1−μ, 0, z):
/// 1 − 2μ + μ² + 2(1−μ)/√(1+z²). Its z = 0 limit, 3 − 4μ + μ², is the level
/// at which the domain reaches the secondary's position.
pub fn axis_degenerate_cj<T: Real>(z: T, mu: T) -> T {
    let om = T::one() - mu;
    om * om + T::two() * om / (T::one() + z * z).sqrt()
}

/// Boolean membership raster over an x–y box at fixed energy level and
/// height, with the energy-forbidden mask alongside.
#[derive(Debug, Clone)]
pub struct EtdSlice<T> {
    pub gamma: T,
    pub z: T,
    pub x0: T,
    pub y0: T,
    pub step: T,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, y-major ordering: index = iy * nx + ix.
    pub member: Vec<bool>,
    pub forbidden: Vec<bool>,
}

impl<T: Real> EtdSlice<T> {
    pub fn xy(&self, ix: usize, iy: usize) -> (T, T) {
        (
            self.x0 + T::from_usize(ix).unwrap() * self.step,
            self.y0 + T::from_usize(iy).unwrap() * self.step,
        )
    }

    pub fn at(&self, ix: usize, iy: usize) -> bool {
        self.member[iy * self.nx + ix]
    }

    /// Count 4-connected components of the membership mask.
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.member.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.member.len() {
            if !self.member[start] || seen[start] {
                continue;
            }
            count += 1;
            stack.push(start);
            seen[start] = true;
            while let Some(idx) = stack.pop() {
                let (ix, iy) = (idx % self.nx, idx / self.nx);
                let mut try_push = |jx: usize, jy: usize| {
                    let j = jy * self.nx + jx;
                    if self.member[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if ix > 0 {
                    try_push(ix - 1, iy);
                }
                if ix + 1 < self.nx {
                    try_push(ix + 1, iy);
                }
                if iy > 0 {
                    try_push(ix, iy - 1);
                }
                if iy + 1 < self.ny {
                    try_push(ix, iy + 1);
                }
            }
        }
        count
    }
}

/// Rasterize membership over `[x_min, x_max] × [y_min, y_max]` with the given
/// grid step. Points that coincide with a primary are marked non-member.
pub fn etd_slice<T: Real>(
    gamma: T,
    z: T,
    bbox: (T, T, T, T),
    step: T,
    params: &SystemParams<T>,
) -> Result<EtdSlice<T>> {
    if step <= T::zero() {
        return Err(Error::InvalidParameter("raster step must be positive".into()));
    }
    let (x_min, x_max, y_min, y_max) = bbox;
    if x_max <= x_min || y_max <= y_min {
        return Err(Error::InvalidParameter("empty raster box".into()));
    }
    let cj = cj_from_gamma(gamma, params);
    let nx = ((x_max - x_min) / step).to_usize().unwrap_or(0) + 1;
    let ny = ((y_max - y_min) / step).to_usize().unwrap_or(0) + 1;
    let mut member = vec![false; nx * ny];
    let mut forbidden = vec![false; nx * ny];
    for iy in 0..ny {
        let y = y_min + T::from_usize(iy).unwrap() * step;
        for ix in 0..nx {
            let x = x_min + T::from_usize(ix).unwrap() * step;
            match etd_membership(&[x, y, z], cj, params) {
                Ok(si) => {
                    member[iy * nx + ix] = si.is_member();
                    forbidden[iy * nx + ix] = si.is_forbidden();
                }
                Err(_) => {}
            }
        }
    }
    Ok(EtdSlice {
        gamma,
        z,
        x0: x_min,
        y0: y_min,
        step,
        nx,
        ny,
        member,
        forbidden,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr3bp::{eps2_raw, jacobi_raw};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn params() -> SystemParams<f64> {
        SystemParams::earth_moon()
    }

    /// Monte-Carlo oracle: sample velocity directions on the ε₂ = 0 sphere
    /// and report the best Jacobi-constant mismatch.
    fn sphere_oracle_member(pos: &V3<f64>, cj: f64, mu: f64, n: usize, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, r2) = primary_distances(pos, mu);
        let v2 = (2.0 * mu / r2).sqrt();
        let x2 = pos[0] - (1.0 - mu);
        let y2 = pos[1];
        let mut best = f64::INFINITY;
        for _ in 0..n {
            let u: [f64; 3] = loop {
                let v: [f64; 3] = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ];
                let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                if n2 > 1e-6 && n2 < 1.0 {
                    let s = n2.sqrt();
                    break [v[0] / s, v[1] / s, v[2] / s];
                }
            };
            let v2v = [v2 * u[0], v2 * u[1], v2 * u[2]];
            let v = [v2v[0] + y2, v2v[1] - x2, v2v[2]];
            let y = [pos[0], pos[1], pos[2], v[0], v[1], v[2]];
            best = best.min((jacobi_raw(&y, mu) - cj).abs());
        }
        // the sphere is 2-D, so a coarse hit threshold suffices to detect
        // that the intersection set is nonempty
        best < 2e-3
    }

    #[test]
    fn energy_forbidden_is_disjoint() {
        let p = params();
        // deep inside the forbidden region: near L1 with a very high C_J
        let si = etd_membership(&[0.83, 0.0, 0.0], 3.5, &p).unwrap();
        assert!(si.is_forbidden());
        assert_eq!(si.status, IntersectStatus::Disjoint);
        assert!(!si.is_member());
    }

    #[test]
    fn axis_degenerate_case() {
        let p = params();
        for z0 in [0.1, 0.3] {
            let cj = axis_degenerate_cj(z0, p.mu);
            let si = etd_membership(&[1.0 - p.mu, 0.0, z0], cj, &p).unwrap();
            assert_eq!(si.status, IntersectStatus::DegenerateCoincident);
            // off the magic level the axis point is never a member
            for dcj in [1e-6, -1e-6, 0.05, -0.05] {
                let si = etd_membership(&[1.0 - p.mu, 0.0, z0], cj + dcj, &p).unwrap();
                assert!(!si.is_member(), "dcj = {dcj}");
            }
        }
    }

    #[test]
    fn membership_matches_velocity_sphere_oracle() {
        let p = params();
        let cj = cj_from_gamma(1.0, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0;
        for k in 0..250 {
            let pos = [
                rng.gen_range(0.3..1.6),
                rng.gen_range(-0.8..0.8),
                0.0,
            ];
            let si = etd_membership(&pos, cj, &p).unwrap();
            // skip near-boundary points where the MC oracle is ambiguous
            if matches!(si.status, IntersectStatus::Tangent) {
                continue;
            }
            let margin = (si.r_c1 - (si.r_j + si.r_eps))
                .abs()
                .min((si.r_c1 - (si.r_j - si.r_eps).abs()).abs());
            if si.r_j_sq >= 0.0 && margin < 5e-3 {
                continue;
            }
            let oracle = sphere_oracle_member(&pos, cj, p.mu, 10_000, 1000 + k);
            assert_eq!(si.is_member(), oracle, "pos = {pos:?}, status = {:?}", si.status);
            checked += 1;
        }
        assert!(checked > 150, "only {checked} informative samples");
    }

    #[test]
    fn generated_states_satisfy_both_constraints() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut produced = 0;
        while produced < 500 {
            let gamma = rng.gen_range(0.1..1.3);
            let pos = [
                rng.gen_range(0.4..1.5),
                rng.gen_range(-0.7..0.7),
                rng.gen_range(-0.3..0.3),
            ];
            let band = match zeta_band(&pos, gamma, &p) {
                Ok(Some(b)) => b,
                _ => continue,
            };
            let zeta = rng.gen_range(-band..band.max(1e-12));
            let ics = etd_initial_conditions(&pos, gamma, zeta, &p).unwrap();
            let cj = cj_from_gamma(gamma, &p);
            for ic in &ics {
                let y = ic.state.as_array();
                assert!(eps2_raw(&y, p.mu).abs() <= 1e-12);
                assert!((jacobi_raw(&y, p.mu) - cj).abs() <= 1e-12);
                produced += 1;
            }
        }
    }

    #[test]
    fn two_distinct_branches_in_interior() {
        let p = params();
        let pos = [0.75, 0.1, 0.02];
        let gamma = crate::cr3bp::gamma_from_cj(3.0, &p);
        let ics = etd_initial_conditions(&pos, gamma, 0.15, &p).unwrap();
        assert_eq!(ics.len(), 2);
        assert_ne!(ics[0].point.branch, ics[1].point.branch);
        let dv: f64 = (0..3)
            .map(|i| (ics[0].state.v[i] - ics[1].state.v[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(dv > 1e-6, "branches coincide, |dv| = {dv}");
    }

    #[test]
    fn velocity_tips_lie_on_intersection_circle() {
        // independent construction of the circle from two-sphere algebra
        let p = params();
        let mu = p.mu;
        let pos = [0.78, 0.08, 0.03];
        let cj = 3.02;
        let gamma = crate::cr3bp::gamma_from_cj(cj, &p);
        let si = etd_membership(&pos, cj, &p).unwrap();
        assert_eq!(si.status, IntersectStatus::Circle);
        let x2 = pos[0] - (1.0 - mu);
        let y2 = pos[1];
        // circle center along the axis toward C1 at distance d, radius rho
        let d = (si.r_c1 * si.r_c1 + si.r_j_sq - si.r_eps * si.r_eps) / (2.0 * si.r_c1);
        let rho = (si.r_j_sq - d * d).sqrt();
        let chat = [y2 / si.r_c1, -x2 / si.r_c1, 0.0];
        let center = [d * chat[0], d * chat[1], 0.0];

        let band = zeta_band(&pos, gamma, &p).unwrap().unwrap();
        let mut n = 0;
        for k in 0..41 {
            let zeta = -band + 2.0 * band * (k as f64) / 40.0;
            for ic in etd_initial_conditions(&pos, gamma, zeta, &p).unwrap() {
                let v = ic.state.v;
                let radial: f64 = (0..3).map(|i| (v[i] - center[i]).powi(2)).sum::<f64>().sqrt();
                assert!((radial - rho).abs() < 1e-10, "zeta = {zeta}");
                // and the tip is on the Jacobi sphere
                let vmag = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                assert!((vmag - si.r_j).abs() < 1e-12);
                n += 1;
            }
        }
        assert!(n > 60);
    }

    #[test]
    fn planar_band_equals_membership_mask() {
        let p = params();
        let cj = cj_from_gamma(0.7, &p);
        let gamma = 0.7;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..400 {
            let pos = [rng.gen_range(0.4..1.5), rng.gen_range(-0.7..0.7), 0.0];
            let si = etd_membership(&pos, cj, &p).unwrap();
            let sigma = injection_angle(&pos, gamma, 0.0, &p);
            match sigma {
                Ok(s) => {
                    // avoid the tangency knife-edge
                    if (s.abs() - 1.0).abs() < 1e-9 {
                        continue;
                    }
                    assert_eq!(s.abs() <= 1.0, si.is_member(), "pos = {pos:?}, sin = {s}");
                }
                Err(_) => continue,
            }
        }
    }

    #[test]
    fn band_nesting_in_declination() {
        // growing |ζ| only shrinks the admissible set
        let p = params();
        let gamma = 0.9;
        let pos = [0.9, 0.15, 0.05];
        let s0 = injection_angle(&pos, gamma, 0.0, &p).unwrap();
        let mut last = s0.abs();
        for k in 1..15 {
            let zeta = 0.1 * k as f64;
            if zeta >= std::f64::consts::FRAC_PI_2 {
                break;
            }
            let s = injection_angle(&pos, gamma, zeta, &p).unwrap();
            assert!(s.abs() >= last - 1e-12);
            last = s.abs();
        }
    }

    #[test]
    fn moon_reach_threshold() {
        // at C_J = 3 − 4μ + μ² the domain reaches the secondary's position
        let p = params();
        let cj = 3.0 - 4.0 * p.mu + p.mu * p.mu;
        let si = etd_membership(&[1.0 - p.mu - 1e-6, 0.0, 0.0], cj, &p).unwrap();
        assert!(si.is_member());
    }

    #[test]
    fn gamma_zero_slice_topology() {
        // at the L1 energy level the domain splits into a shell around the
        // primary and a slab beyond the secondary
        let p = params();
        let slice = etd_slice(0.0, 0.0, (-2.0, 2.5, -2.0, 2.0), 0.02, &p).unwrap();
        assert_eq!(slice.connected_components(), 2);
    }

    #[test]
    fn high_energy_slice_gap_closes() {
        // the gap over the secondary nearly closes at Γ = 1.5, z = 0.3
        let p = params();
        let s_low = etd_slice(1.5, 0.0, (0.7, 1.3, -0.3, 0.3), 0.005, &p).unwrap();
        let s_high = etd_slice(1.5, 0.3, (0.7, 1.3, -0.3, 0.3), 0.005, &p).unwrap();
        let hole = |s: &EtdSlice<f64>| s.member.iter().filter(|m| !**m).count();
        assert!(
            3 * hole(&s_high) < hole(&s_low),
            "gap cells: z=0 -> {}, z=0.3 -> {}",
            hole(&s_low),
            hole(&s_high)
        );
    }

    #[test]
    fn raster_equals_pointwise_membership() {
        let p = params();
        let slice = etd_slice(1.0, 0.1, (0.6, 1.2, -0.4, 0.4), 0.05, &p).unwrap();
        let cj = cj_from_gamma(1.0, &p);
        for iy in 0..slice.ny {
            for ix in 0..slice.nx {
                let (x, y) = slice.xy(ix, iy);
                let si = etd_membership(&[x, y, 0.1], cj, &p).unwrap();
                assert_eq!(slice.at(ix, iy), si.is_member());
                assert_eq!(slice.forbidden[iy * slice.nx + ix], si.is_forbidden());
            }
        }
    }

    #[test]
    fn pole_and_axis_errors() {
        let p = params();
        assert!(matches!(
            etd_initial_conditions(&[0.8, 0.1, 0.0], 0.8, std::f64::consts::FRAC_PI_2, &p),
            Err(Error::PoleCase)
        ));
        assert!(matches!(
            etd_initial_conditions(&[1.0 - p.mu, 0.0, 0.2], 0.8, 0.1, &p),
            Err(Error::AxisSingularity)
        ));
        let ic = etd_axis_sampler(0.2, 1.0, 0.3, &p).unwrap();
        let y = ic.state.as_array();
        assert!(eps2_raw(&y, p.mu).abs() < 1e-14);
        let cj = jacobi_raw(&y, p.mu);
        assert!((cj - axis_degenerate_cj(0.2, p.mu)).abs() < 1e-12);
    }

    #[test]
    fn zeta_band_matches_scan_oracle() {
        let p = params();
        let pos = [0.85, 0.12, 0.04];
        let gamma = 0.8;
        let band = zeta_band(&pos, gamma, &p).unwrap().unwrap();
        // scanning oracle
        let mut max_ok: f64 = 0.0;
        for k in 0..20_000 {
            let zeta = 1.57 * (k as f64) / 20_000.0;
            match injection_angle(&pos, gamma, zeta, &p) {
                Ok(s) if s.abs() <= 1.0 => max_ok = max_ok.max(zeta),
                _ => {}
            }
        }
        assert!((band - max_ok).abs() < 1e-3, "band {band} vs scan {max_ok}");
    }
}
