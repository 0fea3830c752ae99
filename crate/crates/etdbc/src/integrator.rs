//! Embedded Dormand-Prince 8(5,3) integrator with 7th-order dense output,
//! specialized to 6-dimensional first-order systems.
//!
//! Step-wise driver: each accepted step yields its dense-output segment so
//! callers can localize events by bisection and keep the full trajectory
//! interpolant.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::vec3::V6;

/// Right-hand side of dy/dt = f(t, y).
pub trait OdeSystem<T: Real> {
    fn eval(&self, t: T, y: &V6<T>, dydt: &mut V6<T>);
}

impl<T: Real, F: Fn(T, &V6<T>, &mut V6<T>)> OdeSystem<T> for F {
    fn eval(&self, t: T, y: &V6<T>, dydt: &mut V6<T>) {
        self(t, y, dydt)
    }
}

/// Dense-output coefficients for one accepted step over [t0, t0+h].
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<T> {
    pub t0: T,
    pub h: T,
    cont: [V6<T>; 8],
}

impl<T: Real> DenseStep<T> {
    /// Interpolate the solution at `t` within this step.
    pub fn sample(&self, t: T) -> V6<T> {
        let s = (t - self.t0) / self.h;
        let s1 = T::one() - s;
        let c = &self.cont;
        let mut y = [T::zero(); 6];
        for i in 0..6 {
            let conpar = c[4][i] + (c[5][i] + (c[6][i] + c[7][i] * s) * s1) * s;
            y[i] = c[0][i] + (c[1][i] + (c[2][i] + (c[3][i] + conpar * s1) * s) * s1) * s;
        }
        y
    }

    pub fn t_end(&self) -> T {
        self.t0 + self.h
    }

    /// True when `t` lies within the step span (either integration
    /// direction).
    pub fn contains(&self, t: T) -> bool {
        let s = (t - self.t0) / self.h;
        s >= -T::lit(1e-12) && s <= T::one() + T::lit(1e-12)
    }
}

/// Stored dense trajectory over the integrated span.
#[derive(Debug, Clone)]
pub struct DenseTrajectory<T> {
    pub t0: T,
    steps: Vec<DenseStep<T>>,
}

impl<T: Real> DenseTrajectory<T> {
    pub fn new(t0: T) -> Self {
        Self {
            t0,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, step: DenseStep<T>) {
        self.steps.push(step);
    }

    pub fn t_end(&self) -> T {
        self.steps.last().map_or(self.t0, |s| s.t_end())
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[DenseStep<T>] {
        &self.steps
    }

    /// Interpolate at `t`; clamps to the integrated span.
    pub fn sample(&self, t: T) -> V6<T> {
        debug_assert!(!self.steps.is_empty());
        // monotone step times in either direction: binary search on t0
        let forward = self.steps.last().unwrap().h > T::zero();
        let mut lo = 0usize;
        let mut hi = self.steps.len() - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            let starts_before = if forward {
                self.steps[mid].t0 <= t
            } else {
                self.steps[mid].t0 >= t
            };
            if starts_before {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        self.steps[lo].sample(t)
    }

    /// Signed span from the first to the last integrated time.
    pub fn span(&self) -> (T, T) {
        (self.t0, self.t_end())
    }
}

/// Step-size and tolerance settings.
#[derive(Debug, Clone, Copy)]
pub struct StepControl<T> {
    pub rtol: T,
    pub atol: T,
    pub h_max: T,
    pub h_initial: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-12),
            atol: T::lit(1e-12),
            h_max: T::infinity(),
            h_initial: None,
            max_steps: 10_000_000,
        }
    }
}

/// Outcome of one attempted step.
pub enum StepOutcome<T> {
    /// Step accepted; dense segment covers it.
    Accepted(DenseStep<T>),
    /// Integration reached the final time.
    Done(DenseStep<T>),
}

pub struct Dop853<'a, T: Real, S: OdeSystem<T>> {
    sys: &'a S,
    pub t: T,
    pub y: V6<T>,
    k1: V6<T>,
    h: T,
    tf: T,
    ctrl: StepControl<T>,
    facold: T,
    steps_taken: usize,
    pub n_eval: usize,
}

impl<'a, T: Real, S: OdeSystem<T>> Dop853<'a, T, S> {
    pub fn new(sys: &'a S, t0: T, y0: V6<T>, tf: T, ctrl: StepControl<T>) -> Self {
        let mut k1 = [T::zero(); 6];
        sys.eval(t0, &y0, &mut k1);
        let mut me = Self {
            sys,
            t: t0,
            y: y0,
            k1,
            h: T::zero(),
            tf,
            ctrl,
            facold: T::lit(1e-4),
            steps_taken: 0,
            n_eval: 1,
        };
        me.h = match ctrl.h_initial {
            Some(h0) => h0.abs() * (tf - t0).signum(),
            None => me.initial_step(),
        };
        me
    }

    pub fn done(&self) -> bool {
        (self.tf - self.t).abs() <= T::lit(1e-14) * self.tf.abs().max(T::one())
    }

    fn error_weight(&self, i: usize, y_new: &V6<T>) -> T {
        self.ctrl.atol + self.ctrl.rtol * self.y[i].abs().max(y_new[i].abs())
    }

    fn initial_step(&mut self) -> T {
        // classic starting-step estimate from the first two derivatives
        let posneg = (self.tf - self.t).signum();
        let mut dnf = T::zero();
        let mut dny = T::zero();
        for i in 0..6 {
            let sk = self.ctrl.atol + self.ctrl.rtol * self.y[i].abs();
            dnf = dnf + (self.k1[i] / sk) * (self.k1[i] / sk);
            dny = dny + (self.y[i] / sk) * (self.y[i] / sk);
        }
        let mut h = if dnf <= T::lit(1e-10) || dny <= T::lit(1e-10) {
            T::lit(1e-6)
        } else {
            (dny / dnf).sqrt() * T::lit(0.01)
        };
        h = h.min(self.ctrl.h_max) * posneg;

        let mut y1 = [T::zero(); 6];
        for i in 0..6 {
            y1[i] = self.y[i] + h * self.k1[i];
        }
        let mut k2 = [T::zero(); 6];
        self.sys.eval(self.t + h, &y1, &mut k2);
        self.n_eval += 1;
        let mut der2 = T::zero();
        for i in 0..6 {
            let sk = self.ctrl.atol + self.ctrl.rtol * self.y[i].abs();
            let d = (k2[i] - self.k1[i]) / sk;
            der2 = der2 + d * d;
        }
        der2 = der2.sqrt() / h.abs();
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= T::lit(1e-15) {
            (h.abs() * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / der12).powf(T::one() / T::lit(8.0))
        };
        (h.abs() * T::lit(100.0))
            .min(h1)
            .min(self.ctrl.h_max)
            .max(T::lit(1e-10))
            * posneg
    }

    /// Advance by one accepted step, producing its dense segment.
    pub fn step(&mut self) -> Result<StepOutcome<T>> {
        let c = Coeffs::<T>::get();
        loop {
            if self.steps_taken >= self.ctrl.max_steps {
                return Err(Error::MaxSteps {
                    t: self.t.to_f64().unwrap_or(f64::NAN),
                });
            }
            self.steps_taken += 1;

            // clip to the final time
            let remaining = self.tf - self.t;
            if self.h.abs() > remaining.abs() {
                self.h = remaining;
            }
            let h = self.h;
            if h.abs() < T::lit(1e4) * T::epsilon() * self.t.abs().max(T::one()) {
                return Err(Error::StepUnderflow {
                    t: self.t.to_f64().unwrap_or(f64::NAN),
                });
            }

            let t = self.t;
            let y = &self.y;
            let mut k = [[T::zero(); 6]; 12];
            k[0] = self.k1;

            macro_rules! stage {
                ($idx:expr, $ci:expr, $($aij:expr => $kj:expr),+) => {{
                    let mut yi = [T::zero(); 6];
                    for n in 0..6 {
                        let mut acc = T::zero();
                        $( acc = acc + $aij * k[$kj][n]; )+
                        yi[n] = y[n] + h * acc;
                    }
                    self.sys.eval(t + $ci * h, &yi, &mut k[$idx]);
                }};
            }

            stage!(1, c.c2, c.a21 => 0);
            stage!(2, c.c3, c.a31 => 0, c.a32 => 1);
            stage!(3, c.c4, c.a41 => 0, c.a43 => 2);
            stage!(4, c.c5, c.a51 => 0, c.a53 => 2, c.a54 => 3);
            stage!(5, c.c6, c.a61 => 0, c.a64 => 3, c.a65 => 4);
            stage!(6, c.c7, c.a71 => 0, c.a74 => 3, c.a75 => 4, c.a76 => 5);
            stage!(7, c.c8, c.a81 => 0, c.a84 => 3, c.a85 => 4, c.a86 => 5, c.a87 => 6);
            stage!(8, c.c9, c.a91 => 0, c.a94 => 3, c.a95 => 4, c.a96 => 5, c.a97 => 6,
                   c.a98 => 7);
            stage!(9, c.c10, c.a101 => 0, c.a104 => 3, c.a105 => 4, c.a106 => 5, c.a107 => 6,
                   c.a108 => 7, c.a109 => 8);
            stage!(10, c.c11, c.a111 => 0, c.a114 => 3, c.a115 => 4, c.a116 => 5, c.a117 => 6,
                   c.a118 => 7, c.a119 => 8, c.a1110 => 9);
            stage!(11, T::one(), c.a121 => 0, c.a124 => 3, c.a125 => 4, c.a126 => 5,
                   c.a127 => 6, c.a128 => 7, c.a129 => 8, c.a1210 => 9, c.a1211 => 10);
            self.n_eval += 11;

            // 8th-order solution
            let mut ksum = [T::zero(); 6];
            let mut y_new = [T::zero(); 6];
            for n in 0..6 {
                ksum[n] = c.b1 * k[0][n]
                    + c.b6 * k[5][n]
                    + c.b7 * k[6][n]
                    + c.b8 * k[7][n]
                    + c.b9 * k[8][n]
                    + c.b10 * k[9][n]
                    + c.b11 * k[10][n]
                    + c.b12 * k[11][n];
                y_new[n] = y[n] + h * ksum[n];
            }

            // dual embedded error estimate
            let mut err = T::zero();
            let mut err2 = T::zero();
            for n in 0..6 {
                let sk = self.error_weight(n, &y_new);
                let e3 = ksum[n] - c.bhh1 * k[0][n] - c.bhh2 * k[8][n] - c.bhh3 * k[11][n];
                err2 = err2 + (e3 / sk) * (e3 / sk);
                let e5 = c.er1 * k[0][n]
                    + c.er6 * k[5][n]
                    + c.er7 * k[6][n]
                    + c.er8 * k[7][n]
                    + c.er9 * k[8][n]
                    + c.er10 * k[9][n]
                    + c.er11 * k[10][n]
                    + c.er12 * k[11][n];
                err = err + (e5 / sk) * (e5 / sk);
            }
            let mut deno = err + T::lit(0.01) * err2;
            if deno <= T::zero() {
                deno = T::one();
            }
            let err = h.abs() * err * (T::one() / (deno * T::lit(6.0))).sqrt();

            // step-size controller (order-8 exponent, Lund stabilization off)
            let expo1 = T::one() / T::lit(8.0);
            let safe = T::lit(0.9);
            let fac1 = T::lit(0.333);
            let fac2 = T::lit(6.0);
            let fac11 = err.powf(expo1);
            let fac = (fac11 / safe).max(T::one() / fac2).min(T::one() / fac1);
            let h_new = h / fac;

            if err <= T::one() {
                self.facold = err.max(T::lit(1e-4));
                let mut k_new = [T::zero(); 6];
                let t_new = t + h;
                self.sys.eval(t_new, &y_new, &mut k_new);
                self.n_eval += 1;

                let dense = self.build_dense(&k, &k_new, &y_new, h, c);

                self.t = t_new;
                self.y = y_new;
                self.k1 = k_new;
                self.h = if h_new.abs() > self.ctrl.h_max {
                    self.ctrl.h_max * h_new.signum()
                } else {
                    h_new
                };
                let done = self.done();
                return Ok(if done {
                    StepOutcome::Done(dense)
                } else {
                    StepOutcome::Accepted(dense)
                });
            }
            // rejected: retry with the reduced step
            self.h = h / (fac11 / safe).min(T::one() / fac1);
        }
    }

    /// Dense-output coefficients for the step just computed (3 extra stages).
    fn build_dense(
        &mut self,
        k: &[V6<T>; 12],
        k_new: &V6<T>,
        y_new: &V6<T>,
        h: T,
        c: &Coeffs<T>,
    ) -> DenseStep<T> {
        let t = self.t;
        let y = &self.y;
        let mut cont = [[T::zero(); 6]; 8];
        for n in 0..6 {
            cont[0][n] = y[n];
            let ydiff = y_new[n] - y[n];
            cont[1][n] = ydiff;
            let bspl = h * self.k1[n] - ydiff;
            cont[2][n] = bspl;
            cont[3][n] = ydiff - h * k_new[n] - bspl;
            cont[4][n] = c.d41 * k[0][n]
                + c.d46 * k[5][n]
                + c.d47 * k[6][n]
                + c.d48 * k[7][n]
                + c.d49 * k[8][n]
                + c.d410 * k[9][n]
                + c.d411 * k[10][n]
                + c.d412 * k[11][n];
            cont[5][n] = c.d51 * k[0][n]
                + c.d56 * k[5][n]
                + c.d57 * k[6][n]
                + c.d58 * k[7][n]
                + c.d59 * k[8][n]
                + c.d510 * k[9][n]
                + c.d511 * k[10][n]
                + c.d512 * k[11][n];
            cont[6][n] = c.d61 * k[0][n]
                + c.d66 * k[5][n]
                + c.d67 * k[6][n]
                + c.d68 * k[7][n]
                + c.d69 * k[8][n]
                + c.d610 * k[9][n]
                + c.d611 * k[10][n]
                + c.d612 * k[11][n];
            cont[7][n] = c.d71 * k[0][n]
                + c.d76 * k[5][n]
                + c.d77 * k[6][n]
                + c.d78 * k[7][n]
                + c.d79 * k[8][n]
                + c.d710 * k[9][n]
                + c.d711 * k[10][n]
                + c.d712 * k[11][n];
        }

        // three extra stages for the 7th-order interpolant
        let mut k14 = [T::zero(); 6];
        let mut k15 = [T::zero(); 6];
        let mut k16 = [T::zero(); 6];
        let mut yi = [T::zero(); 6];
        for n in 0..6 {
            yi[n] = y[n]
                + h * (c.a141 * k[0][n]
                    + c.a147 * k[6][n]
                    + c.a148 * k[7][n]
                    + c.a149 * k[8][n]
                    + c.a1410 * k[9][n]
                    + c.a1411 * k[10][n]
                    + c.a1412 * k[11][n]
                    + c.a1413 * k_new[n]);
        }
        self.sys.eval(t + c.c14 * h, &yi, &mut k14);
        for n in 0..6 {
            yi[n] = y[n]
                + h * (c.a151 * k[0][n]
                    + c.a156 * k[5][n]
                    + c.a157 * k[6][n]
                    + c.a158 * k[7][n]
                    + c.a1511 * k[10][n]
                    + c.a1512 * k[11][n]
                    + c.a1513 * k_new[n]
                    + c.a1514 * k14[n]);
        }
        self.sys.eval(t + c.c15 * h, &yi, &mut k15);
        for n in 0..6 {
            yi[n] = y[n]
                + h * (c.a161 * k[0][n]
                    + c.a166 * k[5][n]
                    + c.a167 * k[6][n]
                    + c.a168 * k[7][n]
                    + c.a169 * k[8][n]
                    + c.a1613 * k_new[n]
                    + c.a1614 * k14[n]
                    + c.a1615 * k15[n]);
        }
        self.sys.eval(t + c.c16 * h, &yi, &mut k16);
        self.n_eval += 3;

        for n in 0..6 {
            cont[4][n] = h
                * (cont[4][n]
                    + c.d413 * k_new[n]
                    + c.d414 * k14[n]
                    + c.d415 * k15[n]
                    + c.d416 * k16[n]);
            cont[5][n] = h
                * (cont[5][n]
                    + c.d513 * k_new[n]
                    + c.d514 * k14[n]
                    + c.d515 * k15[n]
                    + c.d516 * k16[n]);
            cont[6][n] = h
                * (cont[6][n]
                    + c.d613 * k_new[n]
                    + c.d614 * k14[n]
                    + c.d615 * k15[n]
                    + c.d616 * k16[n]);
            cont[7][n] = h
                * (cont[7][n]
                    + c.d713 * k_new[n]
                    + c.d714 * k14[n]
                    + c.d715 * k15[n]
                    + c.d716 * k16[n]);
        }
        DenseStep { t0: t, h, cont }
    }
}

/// Bisect a scalar function of time on a dense segment down to `t_tol`.
/// Requires a sign change between `ta` and `tb`.
pub fn bisect_on_dense<T: Real, F: Fn(T, &V6<T>) -> T>(
    seg: &DenseStep<T>,
    mut ta: T,
    mut tb: T,
    f: &F,
    t_tol: T,
) -> T {
    let mut fa = f(ta, &seg.sample(ta));
    for _ in 0..200 {
        if (tb - ta).abs() <= t_tol {
            break;
        }
        let tm = (ta + tb) * T::half();
        let fm = f(tm, &seg.sample(tm));
        if (fa <= T::zero()) == (fm <= T::zero()) {
            ta = tm;
            fa = fm;
        } else {
            tb = tm;
        }
    }
    (ta + tb) * T::half()
}

/// Butcher tableau and dense-output coefficients (standard 8(5,3) values).
struct Coeffs<T> {
    c2: T, c3: T, c4: T, c5: T, c6: T, c7: T, c8: T, c9: T, c10: T, c11: T,
    c14: T, c15: T, c16: T,
    a21: T, a31: T, a32: T, a41: T, a43: T, a51: T, a53: T, a54: T,
    a61: T, a64: T, a65: T, a71: T, a74: T, a75: T, a76: T,
    a81: T, a84: T, a85: T, a86: T, a87: T,
    a91: T, a94: T, a95: T, a96: T, a97: T, a98: T,
    a101: T, a104: T, a105: T, a106: T, a107: T, a108: T, a109: T,
    a111: T, a114: T, a115: T, a116: T, a117: T, a118: T, a119: T, a1110: T,
    a121: T, a124: T, a125: T, a126: T, a127: T, a128: T, a129: T, a1210: T, a1211: T,
    a141: T, a147: T, a148: T, a149: T, a1410: T, a1411: T, a1412: T, a1413: T,
    a151: T, a156: T, a157: T, a158: T, a1511: T, a1512: T, a1513: T, a1514: T,
    a161: T, a166: T, a167: T, a168: T, a169: T, a1613: T, a1614: T, a1615: T,
    b1: T, b6: T, b7: T, b8: T, b9: T, b10: T, b11: T, b12: T,
    bhh1: T, bhh2: T, bhh3: T,
    er1: T, er6: T, er7: T, er8: T, er9: T, er10: T, er11: T, er12: T,
    d41: T, d46: T, d47: T, d48: T, d49: T, d410: T, d411: T, d412: T,
    d413: T, d414: T, d415: T, d416: T,
    d51: T, d56: T, d57: T, d58: T, d59: T, d510: T, d511: T, d512: T,
    d513: T, d514: T, d515: T, d516: T,
    d61: T, d66: T, d67: T, d68: T, d69: T, d610: T, d611: T, d612: T,
    d613: T, d614: T, d615: T, d616: T,
    d71: T, d76: T, d77: T, d78: T, d79: T, d710: T, d711: T, d712: T,
    d713: T, d714: T, d715: T, d716: T,
}

impl<T: Real> Coeffs<T> {
    fn get() -> &'static Self {
        use std::any::TypeId;
        use std::sync::OnceLock;
        // one cached instantiation per scalar type
        static F64: OnceLock<Coeffs<f64>> = OnceLock::new();
        static F32: OnceLock<Coeffs<f32>> = OnceLock::new();
        if TypeId::of::<T>() == TypeId::of::<f64>() {
            let r = F64.get_or_init(Coeffs::<f64>::build);
            unsafe { &*(r as *const Coeffs<f64> as *const Coeffs<T>) }
        } else {
            let r = F32.get_or_init(Coeffs::<f32>::build);
            unsafe { &*(r as *const Coeffs<f32> as *const Coeffs<T>) }
        }
    }

    #[rustfmt::skip]
    fn build() -> Self {
        let l = T::lit;
        Self {
            c2: l(0.526001519587677318785587544488e-1),
            c3: l(0.789002279381515978178381316732e-1),
            c4: l(0.118350341907227396726757197510),
            c5: l(0.281649658092772603273242802490),
            c6: l(1.0 / 3.0),
            c7: l(0.25),
            c8: l(0.307692307692307692307692307692),
            c9: l(0.651282051282051282051282051282),
            c10: l(0.6),
            c11: l(0.857142857142857142857142857142),
            c14: l(0.1), c15: l(0.2), c16: l(0.777777777777777777777777777778),
            a21: l(5.26001519587677318785587544488e-2),
            a31: l(1.97250569845378994544595329183e-2),
            a32: l(5.91751709536136983633785987549e-2),
            a41: l(2.95875854768068491816892993775e-2),
            a43: l(8.87627564304205475450678981324e-2),
            a51: l(2.41365134159266685502369798665e-1),
            a53: l(-8.84549479328286085344864962717e-1),
            a54: l(9.24834003261792003115737966543e-1),
            a61: l(3.7037037037037037037037037037e-2),
            a64: l(1.70828608729473871279604482173e-1),
            a65: l(1.25467687566822425016691814123e-1),
            a71: l(3.7109375e-2),
            a74: l(1.70252211019544039314978060272e-1),
            a75: l(6.02165389804559606850219397283e-2),
            a76: l(-1.7578125e-2),
            a81: l(3.70920001185047927108779319836e-2),
            a84: l(1.70383925712239993810214054705e-1),
            a85: l(1.07262030446373284651809199168e-1),
            a86: l(-1.53194377486244017527936158236e-2),
            a87: l(8.27378916381402288758473766002e-3),
            a91: l(6.24110958716075717114429577812e-1),
            a94: l(-3.36089262944694129406857109825),
            a95: l(-8.68219346841726006818189891453e-1),
            a96: l(2.75920996994467083049415600797e1),
            a97: l(2.01540675504778934086186788979e1),
            a98: l(-4.34898841810699588477366255144e1),
            a101: l(4.77662536438264365890433908527e-1),
            a104: l(-2.48811461997166764192642586468),
            a105: l(-5.90290826836842996371446475743e-1),
            a106: l(2.12300514481811942347288949897e1),
            a107: l(1.52792336328824235832596922938e1),
            a108: l(-3.32882109689848629194453265587e1),
            a109: l(-2.03312017085086261358222928593e-2),
            a111: l(-9.3714243008598732571704021658e-1),
            a114: l(5.18637242884406370830023853209),
            a115: l(1.09143734899672957818500254654),
            a116: l(-8.14978701074692612513997267357),
            a117: l(-1.85200656599969598641566180701e1),
            a118: l(2.27394870993505042818970056734e1),
            a119: l(2.49360555267965238987089396762),
            a1110: l(-3.0467644718982195003823669022),
            a121: l(2.27331014751653820792359768449),
            a124: l(-1.05344954667372501984066689879e1),
            a125: l(-2.00087205822486249909675718444),
            a126: l(-1.79589318631187989172765950534e1),
            a127: l(2.79488845294199600508499808837e1),
            a128: l(-2.85899827713502369474065508674),
            a129: l(-8.87285693353062954433549289258),
            a1210: l(1.23605671757943030647266201528e1),
            a1211: l(6.43392746015763530355970484046e-1),
            a141: l(5.61675022830479523392909219681e-2),
            a147: l(2.53500210216624811088794765333e-1),
            a148: l(-2.46239037470802489917441475441e-1),
            a149: l(-1.24191423263816360469010140626e-1),
            a1410: l(1.5329179827876569731206322685e-1),
            a1411: l(8.20105229563468988491666602057e-3),
            a1412: l(7.56789766054569976138603589584e-3),
            a1413: l(-8.298e-3),
            a151: l(3.18346481635021405060768473261e-2),
            a156: l(2.83009096723667755288322961402e-2),
            a157: l(5.35419883074385676223797384372e-2),
            a158: l(-5.49237485713909884646569340306e-2),
            a1511: l(-1.08347328697249322858509316994e-4),
            a1512: l(3.82571090835658412954920192323e-4),
            a1513: l(-3.40465008687404560802977114492e-4),
            a1514: l(1.41312443674632500278074618366e-1),
            a161: l(-4.28896301583791923408573538692e-1),
            a166: l(-4.69762141536116384314449447206),
            a167: l(7.68342119606259904184240953878),
            a168: l(4.06898981839711007970213554331),
            a169: l(3.56727187455281109270669543021e-1),
            a1613: l(-1.39902416515901462129418009734e-3),
            a1614: l(2.9475147891527723389556272149),
            a1615: l(-9.15095847217987001081870187138),
            b1: l(5.42937341165687622380535766363e-2),
            b6: l(4.45031289275240888144113950566),
            b7: l(1.89151789931450038304281599044),
            b8: l(-5.8012039600105847814672114227),
            b9: l(3.1116436695781989440891606237e-1),
            b10: l(-1.52160949662516078556178806805e-1),
            b11: l(2.01365400804030348374776537501e-1),
            b12: l(4.47106157277725905176885569043e-2),
            bhh1: l(0.244094488188976377952755905512),
            bhh2: l(0.733846688281611857341361741547),
            bhh3: l(0.220588235294117647058823529412e-1),
            er1: l(0.1312004499419488073250102996e-1),
            er6: l(-0.1225156446376204440720569753e1),
            er7: l(-0.4957589496572501915214079952),
            er8: l(0.1664377182454986536961530415e1),
            er9: l(-0.3503288487499736816886487290),
            er10: l(0.3341791187130174790297318841),
            er11: l(0.8192320648511571246570742613e-1),
            er12: l(-0.2235530786388629525884427845e-1),
            d41: l(-0.84289382761090128651353491142e1),
            d46: l(0.56671495351937776962531783590),
            d47: l(-0.30689499459498916912797304727e1),
            d48: l(0.23846676565120698287728149680e1),
            d49: l(0.21170345824450282767155149946e1),
            d410: l(-0.87139158377797299206789907490),
            d411: l(0.22404374302607882758541771650e1),
            d412: l(0.63157877876946881815570249290),
            d413: l(-0.88990336451333310820698117400e-1),
            d414: l(0.18148505520854727256656404962e2),
            d415: l(-0.91946323924783554000451984436e1),
            d416: l(-0.44360363875948939664310572000e1),
            d51: l(0.10427508642579134603413151009e2),
            d56: l(0.24228349177525818288430175319e3),
            d57: l(0.16520045171727028198505394887e3),
            d58: l(-0.37454675472269020279518312152e3),
            d59: l(-0.22113666853125306036270938578e2),
            d510: l(0.77334326684722638389603898808e1),
            d511: l(-0.30674084731089398182061213626e2),
            d512: l(-0.93321305264302278729567221706e1),
            d513: l(0.15697238121770843886131091075e2),
            d514: l(-0.31139403219565177677282850411e2),
            d515: l(-0.93529243588444783865713862664e1),
            d516: l(0.35816841486394083752465898540e2),
            d61: l(0.19985053242002433820987653617e2),
            d66: l(-0.38703730874935176555105901742e3),
            d67: l(-0.18917813819516756882830838328e3),
            d68: l(0.52780815920542364900561016686e3),
            d69: l(-0.11573902539959630126141871134e2),
            d610: l(0.68812326946963000169666922661e1),
            d611: l(-0.10006050966910838403183860980e1),
            d612: l(0.77771377980534432092869265740),
            d613: l(-0.27782057523535084065932004339e1),
            d614: l(-0.60196695231264120758267380846e2),
            d615: l(0.84320405506677161018159903784e2),
            d616: l(0.11992291136182789328035130030e2),
            d71: l(-0.25693933462703749003312586129e2),
            d76: l(-0.15418974869023643374053993627e3),
            d77: l(-0.23152937917604549567536039109e3),
            d78: l(0.35763911791061412378285349910e3),
            d79: l(0.93405324183624310003907691704e2),
            d710: l(-0.37458323136451633156875139351e2),
            d711: l(0.10409964950896230045147246184e3),
            d712: l(0.29840293426660503123344363579e2),
            d713: l(-0.43533456590011143754432175058e2),
            d714: l(0.96324553959188282948394950600e2),
            d715: l(-0.39177261675615439165231486172e2),
            d716: l(-0.14972683625798562581422125276e3),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GM: f64 = 1.0;

    fn kepler(_t: f64, y: &V6<f64>, dydt: &mut V6<f64>) {
        let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        let r3 = r2 * r2.sqrt();
        dydt[0] = y[3];
        dydt[1] = y[4];
        dydt[2] = y[5];
        dydt[3] = -GM * y[0] / r3;
        dydt[4] = -GM * y[1] / r3;
        dydt[5] = -GM * y[2] / r3;
    }

    fn integrate_dense(y0: V6<f64>, tf: f64, tol: f64) -> (V6<f64>, DenseTrajectory<f64>) {
        let sys = kepler;
        let ctrl = StepControl {
            rtol: tol,
            atol: tol,
            ..Default::default()
        };
        let mut stepper = Dop853::new(&sys, 0.0, y0, tf, ctrl);
        let mut traj = DenseTrajectory::new(0.0);
        loop {
            match stepper.step().unwrap() {
                StepOutcome::Accepted(seg) => traj.push(seg),
                StepOutcome::Done(seg) => {
                    traj.push(seg);
                    break;
                }
            }
        }
        (stepper.y, traj)
    }

    #[test]
    fn kepler_period_closure() {
        // eccentric two-body orbit returns to its start after one period
        let a: f64 = 1.0;
        let e = 0.6;
        let rp = a * (1.0 - e);
        let vp = (GM * (2.0 / rp - 1.0 / a)).sqrt();
        let y0 = [rp, 0.0, 0.0, 0.0, vp, 0.0];
        let period = std::f64::consts::TAU * (a.powi(3) / GM).sqrt();
        let (yf, _) = integrate_dense(y0, period, 1e-13);
        for i in 0..6 {
            assert!((yf[i] - y0[i]).abs() < 2e-10, "component {i}: {}", yf[i] - y0[i]);
        }
    }

    #[test]
    fn energy_conservation_long_run() {
        let y0 = [1.0, 0.0, 0.1, 0.0, 1.05, 0.02];
        let energy = |y: &V6<f64>| {
            let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
            0.5 * (y[3] * y[3] + y[4] * y[4] + y[5] * y[5]) - GM / r
        };
        let e0 = energy(&y0);
        let (yf, _) = integrate_dense(y0, 200.0, 1e-12);
        assert!((energy(&yf) - e0).abs() < 1e-11);
    }

    #[test]
    fn dense_output_matches_checkpoint_integration() {
        let y0 = [1.1, 0.0, 0.0, 0.0, 0.9, 0.1];
        let (_, traj) = integrate_dense(y0, 10.0, 1e-12);
        for frac in [0.137, 0.5, 0.731, 0.9999] {
            let t = 10.0 * frac;
            let ys = traj.sample(t);
            let (direct, _) = integrate_dense(y0, t, 1e-13);
            for i in 0..6 {
                assert!(
                    (ys[i] - direct[i]).abs() < 1e-9,
                    "t = {t}, component {i}: dense {} vs direct {}",
                    ys[i],
                    direct[i]
                );
            }
        }
    }

    #[test]
    fn backward_integration() {
        let y0 = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let (ymid, _) = integrate_dense(y0, 3.0, 1e-13);
        // integrate back
        let sys = kepler;
        let ctrl = StepControl {
            rtol: 1e-13,
            atol: 1e-13,
            ..Default::default()
        };
        let mut stepper = Dop853::new(&sys, 3.0, ymid, 0.0, ctrl);
        loop {
            match stepper.step().unwrap() {
                StepOutcome::Accepted(_) => {}
                StepOutcome::Done(_) => break,
            }
        }
        for i in 0..6 {
            assert!((stepper.y[i] - y0[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn bisection_localizes_plane_crossing() {
        // y-component crossing of a circular orbit happens at t = π/2 exactly
        let y0 = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let (_, traj) = integrate_dense(y0, 2.0, 1e-13);
        let f = |_t: f64, y: &V6<f64>| y[0]; // x crosses zero at quarter period
        let mut found = None;
        for seg in traj.steps() {
            let fa = f(seg.t0, &seg.sample(seg.t0));
            let fb = f(seg.t_end(), &seg.sample(seg.t_end()));
            if (fa <= 0.0) != (fb <= 0.0) {
                found = Some(bisect_on_dense(seg, seg.t0, seg.t_end(), &f, 1e-12));
                break;
            }
        }
        let t = found.expect("crossing found");
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-10, "t = {t}");
    }
}
