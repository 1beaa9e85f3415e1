//! Adaptive Dormand–Prince 5(4) integrator for complex-valued systems.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{cabs, cre, real, to_f64, Real};

/// How per-component scaled errors are combined into one step error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorNorm {
    #[default]
    Rms,
    /// Every component must meet its own tolerance.
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions<T: Real> {
    pub rtol: T,
    pub atol: T,
    /// Upper bound on the step size. `None` leaves it free.
    pub h_max: Option<T>,
    pub norm: ErrorNorm,
}

impl<T: Real> OdeOptions<T> {
    /// `rtol = tol`, `atol = tol / 100`.
    pub fn from_tol(tol: T) -> Result<Self> {
        if !(tol > T::zero()) {
            return Err(Error::InvalidTolerance(to_f64(tol)));
        }
        Ok(Self {
            rtol: tol,
            atol: tol * real::<T>(1e-2),
            h_max: None,
            norm: ErrorNorm::Rms,
        })
    }
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            rtol: real(1e-8),
            atol: real(1e-10),
            h_max: None,
            norm: ErrorNorm::Rms,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` through every time in `checkpoints`
/// (non-decreasing, all `≥ t0`). `on_accept` runs after each accepted step
/// with the state and its cached derivative and may abort; it returns `true`
/// when it changed the state in a way it did not also apply to the
/// derivative, so that the derivative must be recomputed. `on_checkpoint` receives the
/// state at each requested time.
pub struct Dopri5<T: Real> {
    opts: OdeOptions<T>,
    pub stats: OdeStats,
}

impl<T: Real> Dopri5<T> {
    pub fn new(opts: OdeOptions<T>) -> Self {
        Self {
            opts,
            stats: OdeStats::default(),
        }
    }

    fn err_norm(&self, y: &[Complex<T>], y_new: &[Complex<T>], err: &[Complex<T>]) -> T {
        let mut acc = T::zero();
        for i in 0..y.len() {
            let scale = self.opts.atol + self.opts.rtol * cabs(y[i]).max(cabs(y_new[i]));
            let r = cabs(err[i]) / scale;
            match self.opts.norm {
                ErrorNorm::Rms => acc += r * r,
                ErrorNorm::Max => acc = acc.max(r),
            }
        }
        match self.opts.norm {
            ErrorNorm::Rms => (acc / real::<T>(y.len().max(1) as f64)).sqrt(),
            ErrorNorm::Max => acc,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn integrate<F, A, K>(
        &mut self,
        mut rhs: F,
        t0: T,
        y: &mut Vec<Complex<T>>,
        checkpoints: &[T],
        mut on_accept: A,
        mut on_checkpoint: K,
    ) -> Result<()>
    where
        F: FnMut(T, &[Complex<T>], &mut [Complex<T>]),
        A: FnMut(T, &mut [Complex<T>], &mut [Complex<T>]) -> Result<bool>,
        K: FnMut(usize, T, &[Complex<T>]) -> Result<()>,
    {
        let n = y.len();
        let mut k: Vec<Vec<Complex<T>>> = (0..7).map(|_| vec![Complex::zero(); n]).collect();
        let mut tmp = vec![Complex::zero(); n];
        let mut y_new = vec![Complex::zero(); n];
        let mut err = vec![Complex::zero(); n];
        let mut t = t0;

        rhs(t, y, &mut k[0]);
        self.stats.rhs_evals += 1;
        let mut h = self.initial_step(&mut rhs, t, y, &k[0], &mut tmp, &mut err);
        let mut fsal_valid = true;

        for (idx, &target) in checkpoints.iter().enumerate() {
            while t < target {
                if !fsal_valid {
                    rhs(t, y, &mut k[0]);
                    self.stats.rhs_evals += 1;
                    fsal_valid = true;
                }
                if let Some(hm) = self.opts.h_max {
                    h = h.min(hm);
                }
                let remaining = target - t;
                let last = h >= remaining;
                let step = if last { remaining } else { h };
                let tiny = real::<T>(1e-14) * t.abs().max(T::one());
                if step < tiny && !last {
                    return Err(Error::StepSizeUnderflow {
                        t: to_f64(t),
                        h: to_f64(step),
                    });
                }

                for s in 1..7 {
                    for i in 0..n {
                        let mut acc = y[i];
                        for j in 0..s {
                            let a = A[s][j];
                            if a != 0.0 {
                                acc += k[j][i] * cre(step * real::<T>(a));
                            }
                        }
                        tmp[i] = acc;
                    }
                    let ts = t + step * real::<T>(C[s]);
                    rhs(ts, &tmp, &mut k[s]);
                    self.stats.rhs_evals += 1;
                }
                // the last stage is evaluated at the fifth-order solution
                y_new.copy_from_slice(&tmp);
                for i in 0..n {
                    let mut e = Complex::zero();
                    for j in 0..7 {
                        if E[j] != 0.0 {
                            e += k[j][i] * cre(step * real::<T>(E[j]));
                        }
                    }
                    err[i] = e;
                }

                let en = self.err_norm(y, &y_new, &err);
                let en_f = to_f64(en);
                if !en_f.is_finite() {
                    self.stats.rejected += 1;
                    h = step * real::<T>(0.2);
                    if h < tiny {
                        return Err(Error::StepSizeUnderflow {
                            t: to_f64(t),
                            h: to_f64(h),
                        });
                    }
                    continue;
                }
                if en <= T::one() {
                    self.stats.accepted += 1;
                    t = if last { target } else { t + step };
                    std::mem::swap(y, &mut y_new);
                    k.swap(0, 6);
                    if on_accept(t, y, &mut k[0])? {
                        fsal_valid = false;
                    }
                    let fac = if en_f == 0.0 {
                        5.0
                    } else {
                        (0.9 * en_f.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    // keep the pre-truncation step so checkpoints do not shrink h
                    h = if last { h.max(step) } else { step * real::<T>(fac) };
                } else {
                    self.stats.rejected += 1;
                    let fac = (0.9 * en_f.powf(-0.2)).clamp(0.1, 1.0);
                    h = step * real::<T>(fac);
                    if h < tiny {
                        return Err(Error::StepSizeUnderflow {
                            t: to_f64(t),
                            h: to_f64(h),
                        });
                    }
                }
            }
            on_checkpoint(idx, t, y)?;
        }
        Ok(())
    }

    fn initial_step<F>(
        &mut self,
        rhs: &mut F,
        t: T,
        y: &[Complex<T>],
        f0: &[Complex<T>],
        tmp: &mut [Complex<T>],
        f1: &mut [Complex<T>],
    ) -> T
    where
        F: FnMut(T, &[Complex<T>], &mut [Complex<T>]),
    {
        let n = y.len().max(1);
        let nf = real::<T>(n as f64);
        let sc = |v: Complex<T>| self.opts.atol + self.opts.rtol * cabs(v);
        let mut d0 = T::zero();
        let mut d1 = T::zero();
        for i in 0..y.len() {
            let s = sc(y[i]);
            d0 += (cabs(y[i]) / s).powi(2);
            d1 += (cabs(f0[i]) / s).powi(2);
        }
        d0 = (d0 / nf).sqrt();
        d1 = (d1 / nf).sqrt();
        let small = real::<T>(1e-5);
        let mut h0 = if d0 < small || d1 < small {
            real::<T>(1e-6)
        } else {
            real::<T>(0.01) * d0 / d1
        };
        if let Some(hm) = self.opts.h_max {
            h0 = h0.min(hm);
        }
        for i in 0..y.len() {
            tmp[i] = y[i] + f0[i] * cre(h0);
        }
        rhs(t + h0, tmp, f1);
        self.stats.rhs_evals += 1;
        let mut d2 = T::zero();
        for i in 0..y.len() {
            d2 += (cabs(f1[i] - f0[i]) / sc(y[i])).powi(2);
        }
        d2 = (d2 / nf).sqrt() / h0;
        let m = d1.max(d2);
        let h1 = if m <= real::<T>(1e-15) {
            (h0 * real::<T>(1e-3)).max(real::<T>(1e-6))
        } else {
            (real::<T>(0.01) / m).powf(real::<T>(0.2))
        };
        let mut h = (h0 * real::<T>(100.0)).min(h1);
        if let Some(hm) = self.opts.h_max {
            h = h.min(hm);
        }
        h
    }
}
