//! Open-system dynamics of the cantilever: thermal master equation, the
//! rotating/displaced frame, the closed set of second-order moments, and
//! their steady state.
//!
//! The master equation is `ρ̇ = i[ρ, H] + 𝓛[ρ]` with
//! `𝓛[ρ] = (γ/2)(n̄+1)(2aρa† − a†aρ − ρa†a) + (γ/2)n̄(2a†ρa − aa†ρ − ρaa†)`,
//! all operators truncated to the same Fock basis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::hilbert::{
    displacement_op, ladder_ops, rotation_op, trace_distance, DensityMatrix, Operator,
    EDGE_POPULATION_LIMIT,
};
use crate::model::{build_dho, conditional_frequencies, Branch, CouplingSet};
use crate::ode::{Dopri5, ErrorNorm, OdeOptions, OdeStats};
use crate::scalar::{cabs, cexp, cplx, cre, real, to_f64, Real};

/// Thermal bath seen by the cantilever.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams<T: Real> {
    pub gamma: T,
    pub temperature: T,
    pub nbar: T,
}

impl<T: Real> BathParams<T> {
    /// Bath at temperature `T` for a mode of frequency `ω`.
    pub fn new(gamma: T, temperature: T, omega: T) -> Result<Self> {
        if gamma < T::zero() {
            return Err(Error::NegativeDecay(to_f64(gamma)));
        }
        if temperature < T::zero() {
            return Err(Error::NegativeTemperature(to_f64(temperature)));
        }
        let nbar = if temperature == T::zero() {
            T::zero()
        } else {
            T::one() / ((omega / temperature).exp() - T::one())
        };
        Ok(Self {
            gamma,
            temperature,
            nbar,
        })
    }

    pub fn zero_temperature(gamma: T) -> Result<Self> {
        Self::new(gamma, T::zero(), T::one())
    }

    /// Bath specified directly by its occupancy; `temperature` is left at zero.
    pub fn from_nbar(gamma: T, nbar: T) -> Result<Self> {
        if gamma < T::zero() {
            return Err(Error::NegativeDecay(to_f64(gamma)));
        }
        if nbar < T::zero() {
            return Err(Error::InvalidArgument(format!(
                "negative occupancy {}",
                to_f64(nbar)
            )));
        }
        Ok(Self {
            gamma,
            temperature: T::zero(),
            nbar,
        })
    }
}

// ---------------------------------------------------------------------------
// Master equation
// ---------------------------------------------------------------------------

/// Generator of the master equation on a column-major flattened `ρ`.
struct Liouvillian<T: Real> {
    dim: usize,
    rows: Vec<Vec<(usize, Complex<T>)>>,
    sqrt: Vec<T>,
    gain: T,
    loss: T,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> Liouvillian<T> {
    fn new(h: &Operator<T>, bath: &BathParams<T>) -> Self {
        let dim = h.dim();
        let rows = (0..dim)
            .map(|r| {
                (0..dim)
                    .filter_map(|c| {
                        let v = h.get(r, c);
                        (v != Complex::zero()).then_some((c, v))
                    })
                    .collect()
            })
            .collect();
        let half = real::<T>(0.5);
        Self {
            dim,
            rows,
            sqrt: (0..=dim).map(|k| real::<T>(k as f64).sqrt()).collect(),
            loss: half * bath.gamma * (bath.nbar + T::one()),
            gain: half * bath.gamma * bath.nbar,
            scratch: vec![Complex::zero(); dim * dim],
        }
    }

    fn dissipate(&self, rho: &[Complex<T>], out: &mut [Complex<T>], accumulate: bool) {
        let n = self.dim;
        let two = real::<T>(2.0);
        // diagonal of truncated a a†
        let d = |k: usize| {
            if k + 1 < n {
                real::<T>((k + 1) as f64)
            } else {
                T::zero()
            }
        };
        for c in 0..n {
            for r in 0..n {
                let idx = r + c * n;
                let x = rho[idx];
                let mut v = -x * cre(self.loss * real::<T>((r + c) as f64));
                if r + 1 < n && c + 1 < n {
                    v += rho[idx + 1 + n] * cre(two * self.loss * self.sqrt[r + 1] * self.sqrt[c + 1]);
                }
                if self.gain != T::zero() {
                    v -= x * cre(self.gain * (d(r) + d(c)));
                    if r > 0 && c > 0 {
                        v += rho[idx - 1 - n] * cre(two * self.gain * self.sqrt[r] * self.sqrt[c]);
                    }
                }
                if accumulate {
                    out[idx] += v;
                } else {
                    out[idx] = v;
                }
            }
        }
    }

    fn rhs(&mut self, rho: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = self.dim;
        // K = Hρ; ρH = K† for Hermitian H and ρ
        for c in 0..n {
            let col = &rho[c * n..(c + 1) * n];
            for r in 0..n {
                let mut acc = Complex::zero();
                for &(k, h) in &self.rows[r] {
                    acc += h * col[k];
                }
                self.scratch[r + c * n] = acc;
            }
        }
        let mi = cplx(T::zero(), -T::one());
        for c in 0..n {
            for r in 0..n {
                out[r + c * n] = mi * (self.scratch[r + c * n] - self.scratch[c + r * n].conj());
            }
        }
        self.dissipate(rho, out, true);
    }
}

/// `𝓛[ρ]` as an operator.
pub fn dissipator<T: Real>(rho: &DensityMatrix<T>, bath: &BathParams<T>) -> Operator<T> {
    let dim = rho.dim();
    let l = Liouvillian::new(&Operator::zeros(dim), bath);
    let mut out = vec![Complex::zero(); dim * dim];
    l.dissipate(rho.matrix().as_slice(), &mut out, false);
    Operator {
        m: DMatrix::from_vec(dim, dim, out),
    }
}

/// Diagnostics collected over a master-equation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunReport {
    pub ode: OdeStats,
    /// Largest `|Tr ρ(t) − Tr ρ(0)|` over accepted steps.
    pub max_trace_drift: f64,
    /// Largest `max |ρ − ρ†|` seen before symmetrization.
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue over the returned states.
    pub min_eigenvalue: f64,
    /// Largest top-two-level population over accepted steps.
    pub max_edge_population: f64,
}

#[derive(Debug, Clone)]
pub struct MasterRun<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    pub report: RunReport,
}

fn check_times<T: Real>(times: &[T]) -> Result<()> {
    let mut prev = T::zero();
    for &t in times {
        if !(t >= prev) {
            return Err(Error::InvalidArgument(
                "times must be non-negative and non-decreasing".into(),
            ));
        }
        prev = t;
    }
    Ok(())
}

fn check_hamiltonian<T: Real>(h: &Operator<T>) -> Result<()> {
    let scale = h.max_abs().max(T::one());
    if h.hermiticity_error() > real::<T>(1e-12) * scale {
        return Err(Error::InvalidArgument("Hamiltonian is not Hermitian".into()));
    }
    Ok(())
}

/// Integrates the master equation from `ρ0` at `t = 0` to each requested time.
pub fn evolve_master_at<T: Real>(
    h: &Operator<T>,
    rho0: &DensityMatrix<T>,
    bath: &BathParams<T>,
    times: &[T],
    tol: T,
) -> Result<MasterRun<T>> {
    if h.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            found: h.dim(),
        });
    }
    check_hamiltonian(h)?;
    check_times(times)?;
    rho0.validate()?;
    let opts = OdeOptions {
        norm: ErrorNorm::Max,
        ..OdeOptions::from_tol(tol)?
    };
    let dim = rho0.dim();

    let mut gen = Liouvillian::new(h, bath);
    let mut y: Vec<Complex<T>> = rho0.matrix().as_slice().to_vec();
    let tr0 = rho0.trace();
    let mut max_drift = 0.0f64;
    let mut max_herm = 0.0f64;
    let mut max_edge = 0.0f64;
    let mut states = Vec::with_capacity(times.len());
    let mut min_eig = f64::INFINITY;
    let limit = real::<T>(EDGE_POPULATION_LIMIT);

    let mut solver = Dopri5::new(opts);
    solver.integrate(
        |_, rho, out| gen.rhs(rho, out),
        T::zero(),
        &mut y,
        times,
        |_, rho, drho| {
            let mut herm = T::zero();
            let mut tr = T::zero();
            let half = cre(real::<T>(0.5));
            for c in 0..dim {
                tr += rho[c + c * dim].re;
                rho[c + c * dim].im = T::zero();
                drho[c + c * dim].im = T::zero();
                for r in 0..c {
                    let (u, l) = (r + c * dim, c + r * dim);
                    herm = herm.max(cabs(rho[u] - rho[l].conj()));
                    let avg = (rho[u] + rho[l].conj()) * half;
                    rho[u] = avg;
                    rho[l] = avg.conj();
                    let davg = (drho[u] + drho[l].conj()) * half;
                    drho[u] = davg;
                    drho[l] = davg.conj();
                }
            }
            max_herm = max_herm.max(to_f64(herm));
            max_drift = max_drift.max(to_f64((tr - tr0).abs()));
            let edge = rho[(dim - 1) * (dim + 1)].re + rho[(dim - 2) * (dim + 1)].re;
            max_edge = max_edge.max(to_f64(edge));
            if edge > limit {
                return Err(Error::TruncationInsufficient {
                    dim,
                    weight: to_f64(edge),
                });
            }
            Ok(false)
        },
        |_, _, rho| {
            let state = DensityMatrix::from_matrix_unchecked(DMatrix::from_column_slice(
                dim, dim, rho,
            ));
            min_eig = min_eig.min(to_f64(state.min_eigenvalue()));
            states.push(state);
            Ok(())
        },
    )?;
    Ok(MasterRun {
        times: times.to_vec(),
        states,
        report: RunReport {
            ode: solver.stats,
            max_trace_drift: max_drift,
            max_hermiticity_error: max_herm,
            min_eigenvalue: if min_eig.is_finite() { min_eig } else { 0.0 },
            max_edge_population: max_edge,
        },
    })
}

/// State at time `t`; see [`evolve_master_at`].
pub fn evolve_master<T: Real>(
    h: &Operator<T>,
    rho0: &DensityMatrix<T>,
    bath: &BathParams<T>,
    t: T,
    tol: T,
) -> Result<DensityMatrix<T>> {
    let mut run = evolve_master_at(h, rho0, bath, &[t], tol)?;
    Ok(run.states.pop().expect("one checkpoint"))
}

// ---------------------------------------------------------------------------
// Frame transform
// ---------------------------------------------------------------------------

/// Rotation angle and displacement of the frame that removes the drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameParams<T: Real> {
    pub theta: T,
    pub alpha: Complex<T>,
}

/// `α(t) = (i g_s / (γ/2 + iω)) (e^{−γt/2} − e^{iωt})`
pub fn frame_alpha<T: Real>(g_s: T, gamma: T, omega: T, t: T) -> Complex<T> {
    let half = real::<T>(0.5);
    let den = cplx(half * gamma, omega);
    let pre = cplx(T::zero(), g_s) / den;
    pre * (cre((-half * gamma * t).exp()) - cexp(cplx(T::zero(), omega * t)))
}

pub fn frame_params<T: Real>(g_s: T, gamma: T, omega: T, t: T) -> FrameParams<T> {
    FrameParams {
        theta: omega * t,
        alpha: frame_alpha(g_s, gamma, omega, t),
    }
}

/// Trace distance between direct evolution under the driven oscillator and
/// pure thermal decay mapped back through `R(θ)D(α)`, at each time.
pub fn transform_check_at<T: Real>(
    rho0: &DensityMatrix<T>,
    g_s: T,
    omega: T,
    bath: &BathParams<T>,
    times: &[T],
    tol: T,
) -> Result<Vec<T>> {
    Ok(transform_check_runs(rho0, g_s, omega, bath, times, tol)?.0)
}

/// [`transform_check_at`] plus the reports of the direct and decay runs.
pub fn transform_check_runs<T: Real>(
    rho0: &DensityMatrix<T>,
    g_s: T,
    omega: T,
    bath: &BathParams<T>,
    times: &[T],
    tol: T,
) -> Result<(Vec<T>, [RunReport; 2])> {
    let dim = rho0.dim();
    let direct = evolve_master_at(&build_dho(g_s, omega, dim)?, rho0, bath, times, tol)?;
    let decay = evolve_master_at(&Operator::zeros(dim), rho0, bath, times, tol)?;
    let dists = times
        .iter()
        .zip(direct.states.iter().zip(decay.states.iter()))
        .map(|(&t, (rd, r2))| {
            let fp = frame_params(g_s, bath.gamma, omega, t);
            let u = &rotation_op(fp.theta, dim)? * &displacement_op(fp.alpha, dim)?;
            trace_distance(rd, &r2.conjugated(&u)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((dists, [direct.report, decay.report]))
}

pub fn transform_check<T: Real>(
    rho0: &DensityMatrix<T>,
    g_s: T,
    omega: T,
    bath: &BathParams<T>,
    t: T,
    tol: T,
) -> Result<T> {
    Ok(transform_check_at(rho0, g_s, omega, bath, &[t], tol)?[0])
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

/// `⟨a⟩, ⟨a†⟩, ⟨a²⟩, ⟨a†²⟩, ⟨a†a⟩`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentVector<T: Real> {
    pub a: Complex<T>,
    pub adag: Complex<T>,
    pub a2: Complex<T>,
    pub adag2: Complex<T>,
    pub n: Complex<T>,
}

impl<T: Real> MomentVector<T> {
    pub fn vacuum() -> Self {
        Self::from_array([Complex::zero(); 5])
    }

    pub fn coherent(alpha: Complex<T>) -> Self {
        Self {
            a: alpha,
            adag: alpha.conj(),
            a2: alpha * alpha,
            adag2: (alpha * alpha).conj(),
            n: cre(alpha.norm_sqr()),
        }
    }

    pub fn thermal(nbar: T) -> Self {
        let mut m = Self::vacuum();
        m.n = cre(nbar);
        m
    }

    pub fn from_density(rho: &DensityMatrix<T>) -> Result<Self> {
        let l = ladder_ops::<T>(rho.dim())?;
        Ok(Self {
            a: rho.expectation(&l.a)?,
            adag: rho.expectation(&l.adag)?,
            a2: rho.expectation(&(&l.a * &l.a))?,
            adag2: rho.expectation(&(&l.adag * &l.adag))?,
            n: rho.expectation(&l.n)?,
        })
    }

    pub fn to_array(&self) -> [Complex<T>; 5] {
        [self.a, self.adag, self.a2, self.adag2, self.n]
    }

    pub fn from_array(v: [Complex<T>; 5]) -> Self {
        Self {
            a: v[0],
            adag: v[1],
            a2: v[2],
            adag2: v[3],
            n: v[4],
        }
    }

    /// `max(|⟨a†⟩ − ⟨a⟩*|, |⟨a†²⟩ − ⟨a²⟩*|, |Im⟨a†a⟩|)`
    pub fn conjugate_symmetry_error(&self) -> T {
        cabs(self.adag - self.a.conj())
            .max(cabs(self.adag2 - self.a2.conj()))
            .max(self.n.im.abs())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .fold(T::zero(), |acc, (x, y)| acc.max(cabs(*x - *y)))
    }
}

/// Affine moment flow `dM/dt = A M + b`.
pub fn moment_system<T: Real>(
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
    bath: &BathParams<T>,
) -> (DMatrix<Complex<T>>, DVector<Complex<T>>) {
    let (wk, gk) = conditional_frequencies(k, cs.g_prime, omega);
    let g = bath.gamma;
    let half = real::<T>(0.5);
    let i = cplx(T::zero(), T::one());
    let re = cre::<T>;
    let two = real::<T>(2.0);
    let four = real::<T>(4.0);
    let mut m = DMatrix::zeros(5, 5);
    m[(0, 0)] = cplx(-half * g, -wk);
    m[(0, 1)] = -i * re(two * gk);
    m[(1, 0)] = i * re(two * gk);
    m[(1, 1)] = cplx(-half * g, wk);
    m[(2, 2)] = -cplx(g, two * wk);
    m[(2, 4)] = -i * re(four * gk);
    m[(3, 3)] = -cplx(g, -two * wk);
    m[(3, 4)] = i * re(four * gk);
    m[(4, 2)] = i * re(two * gk);
    m[(4, 3)] = -i * re(two * gk);
    m[(4, 4)] = re(-g);
    let b = DVector::from_vec(vec![
        Complex::zero(),
        Complex::zero(),
        -i * re(two * gk),
        i * re(two * gk),
        re(g * bath.nbar),
    ]);
    (m, b)
}

pub fn moment_rhs<T: Real>(
    m: &MomentVector<T>,
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
    bath: &BathParams<T>,
) -> MomentVector<T> {
    let (a, b) = moment_system(k, cs, omega, bath);
    let v = DVector::from_column_slice(&m.to_array());
    let d = a * v + b;
    MomentVector::from_array([d[0], d[1], d[2], d[3], d[4]])
}

/// Adaptive integration of the moment equations to each requested time.
pub fn evolve_moments_at<T: Real>(
    m0: &MomentVector<T>,
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
    bath: &BathParams<T>,
    times: &[T],
    tol: T,
) -> Result<Vec<MomentVector<T>>> {
    check_times(times)?;
    let opts = OdeOptions::from_tol(tol)?;
    let (a, b) = moment_system(k, cs, omega, bath);
    let mut y = m0.to_array().to_vec();
    let mut out = Vec::with_capacity(times.len());
    let mut solver = Dopri5::new(opts);
    solver.integrate(
        |_, y, dy| {
            for r in 0..5 {
                let mut acc = b[r];
                for c in 0..5 {
                    acc += a[(r, c)] * y[c];
                }
                dy[r] = acc;
            }
        },
        T::zero(),
        &mut y,
        times,
        |_, _, _| Ok(false),
        |_, _, y| {
            out.push(MomentVector::from_array([y[0], y[1], y[2], y[3], y[4]]));
            Ok(())
        },
    )?;
    Ok(out)
}

pub fn evolve_moments<T: Real>(
    m0: &MomentVector<T>,
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
    bath: &BathParams<T>,
    t: T,
    tol: T,
) -> Result<MomentVector<T>> {
    Ok(evolve_moments_at(m0, k, cs, omega, bath, &[t], tol)?[0])
}

/// Exact solution through the exponential of the augmented 6×6 generator.
pub fn evolve_moments_exact<T: Real>(
    m0: &MomentVector<T>,
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
    bath: &BathParams<T>,
    t: T,
) -> MomentVector<T> {
    let (a, b) = moment_system(k, cs, omega, bath);
    let mut g = DMatrix::zeros(6, 6);
    for r in 0..5 {
        for c in 0..5 {
            g[(r, c)] = a[(r, c)] * cre(t);
        }
        g[(r, 5)] = b[r] * cre(t);
    }
    let e = g.exp();
    let mut v = DVector::zeros(6);
    for (i, x) in m0.to_array().iter().enumerate() {
        v[i] = *x;
    }
    v[5] = Complex::new(T::one(), T::zero());
    let r = e * v;
    MomentVector::from_array([r[0], r[1], r[2], r[3], r[4]])
}

/// `(Δz)²/z0² = ⟨a²⟩ − ⟨a⟩² + ⟨a†²⟩ − ⟨a†⟩² + 2⟨a†a⟩ − 2⟨a†⟩⟨a⟩ + 1`
pub fn position_variance<T: Real>(m: &MomentVector<T>) -> Result<T> {
    let two = cre(real::<T>(2.0));
    let v = m.a2 - m.a * m.a + m.adag2 - m.adag * m.adag + two * m.n - two * m.adag * m.a
        + cre(T::one());
    if v.re < real::<T>(-1e-9) {
        return Err(Error::NonPhysicalMoments(to_f64(v.re)));
    }
    Ok(v.re)
}

fn steady_denominator<T: Real>(
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
    bath: &BathParams<T>,
) -> Result<(T, T, T)> {
    let (wk, gk) = conditional_frequencies(k, cs.g_prime, omega);
    let four = real::<T>(4.0);
    let den = bath.gamma * bath.gamma + four * wk * wk - four * four * gk * gk;
    if !(den > T::zero()) || !(wk * wk > four * gk * gk) {
        return Err(Error::InstabilityRegime {
            omega_k: to_f64(wk),
            g_k: to_f64(gk),
        });
    }
    Ok((wk, gk, den))
}

pub fn steady_moments<T: Real>(
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
    bath: &BathParams<T>,
) -> Result<MomentVector<T>> {
    let (wk, gk, den) = steady_denominator(k, cs, omega, bath)?;
    let two = real::<T>(2.0);
    let f = two * bath.nbar + T::one();
    let a2 = cplx(two * wk, bath.gamma) * cre(-two * gk * f / den);
    Ok(MomentVector {
        a: Complex::zero(),
        adag: Complex::zero(),
        a2,
        adag2: a2.conj(),
        n: cre(bath.nbar + real::<T>(8.0) * gk * gk * f / den),
    })
}

/// Fixed point of the moment flow by a dense linear solve.
pub fn steady_moments_solve<T: Real>(
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
    bath: &BathParams<T>,
) -> Result<MomentVector<T>> {
    let (wk, gk, _) = steady_denominator(k, cs, omega, bath)?;
    let (a, b) = moment_system(k, cs, omega, bath);
    let x = a.lu().solve(&(-b)).ok_or(Error::InstabilityRegime {
        omega_k: to_f64(wk),
        g_k: to_f64(gk),
    })?;
    Ok(MomentVector::from_array([x[0], x[1], x[2], x[3], x[4]]))
}

/// `(2n̄+1)[γ² + 4ω_k(ω_k − 2g_k)] / (γ² + 4ω_k² − 16g_k²)`
pub fn steady_variance<T: Real>(
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
    bath: &BathParams<T>,
) -> Result<T> {
    let (wk, gk, den) = steady_denominator(k, cs, omega, bath)?;
    let two = real::<T>(2.0);
    let f = two * bath.nbar + T::one();
    Ok(f * (bath.gamma * bath.gamma + real::<T>(4.0) * wk * (wk - two * gk)) / den)
}

/// `T_c = ω / ln(γ²/(4ωg′) + ω/g′ + 3)`
pub fn critical_temperature<T: Real>(gamma: T, omega: T, g_prime: T) -> Result<T> {
    if !(g_prime > T::zero()) {
        return Err(Error::InvalidCoupling(to_f64(g_prime)));
    }
    let arg = gamma * gamma / (real::<T>(4.0) * omega * g_prime) + omega / g_prime + real(3.0);
    Ok(omega / arg.ln())
}

/// Temperature at which the squeezed-branch steady variance reaches 1,
/// by bisection to absolute accuracy `tol`.
pub fn steady_crossing_temperature<T: Real>(
    cs: &CouplingSet<T>,
    omega: T,
    gamma: T,
    tol: T,
) -> Result<T> {
    let f = |temp: T| -> Result<T> {
        let bath = BathParams::new(gamma, temp, omega)?;
        Ok(steady_variance(Branch::Minus, cs, omega, &bath)? - T::one())
    };
    if f(T::zero())? >= T::zero() {
        return Err(Error::InvalidArgument(
            "no steady squeezing at zero temperature".into(),
        ));
    }
    let mut lo = T::zero();
    let mut hi = omega;
    let mut guard = 0;
    while f(hi)? < T::zero() {
        lo = hi;
        hi *= real::<T>(2.0);
        guard += 1;
        if guard > 200 {
            return Err(Error::InvalidArgument("no crossing found".into()));
        }
    }
    while hi - lo > tol {
        let mid = (lo + hi) * real::<T>(0.5);
        if f(mid)? < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * real::<T>(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{coherent_state, quadrature, FockVector};
    use crate::model::{build_conditional, propagator};

    type C = Complex<f64>;

    fn fig4() -> CouplingSet<f64> {
        CouplingSet::nonlinear(0.0115)
    }

    #[test]
    fn bath_occupancy() {
        let b = BathParams::new(0.1, 0.0, 1.0).unwrap();
        assert_eq!(b.nbar, 0.0);
        let b = BathParams::new(0.1, 3.0, 1.0).unwrap();
        assert!((b.nbar - 1.0 / ((1.0f64 / 3.0).exp() - 1.0)).abs() < 1e-14);
        assert!((b.nbar - 2.52773).abs() < 1e-5);
        assert!(matches!(BathParams::new(-0.1, 0.0, 1.0), Err(Error::NegativeDecay(_))));
        assert!(matches!(
            BathParams::new(0.1, -1.0, 1.0),
            Err(Error::NegativeTemperature(_))
        ));
    }

    #[test]
    fn dissipator_examples() {
        let bath = BathParams::zero_temperature(0.3).unwrap();
        let vac = FockVector::<f64>::vacuum(6).unwrap().to_density();
        assert!(dissipator(&vac, &bath).max_abs() < 1e-15);
        let one = FockVector::<f64>::basis(1, 6).unwrap().to_density();
        let d = dissipator(&one, &bath);
        let mut want = Operator::zeros(6);
        want.m[(0, 0)] = C::new(0.3, 0.0);
        want.m[(1, 1)] = C::new(-0.3, 0.0);
        assert!(d.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn dissipator_matches_operator_form() {
        let dim = 9;
        let bath = BathParams::from_nbar(0.7, 0.4).unwrap();
        let l = ladder_ops::<f64>(dim).unwrap();
        let psi = FockVector::new(
            (0..dim)
                .map(|k| C::new((k as f64 * 0.37).sin(), (k as f64 * 0.91).cos()))
                .collect(),
        )
        .unwrap();
        let rho = psi.to_density();
        let r = rho.to_operator();
        let ad_a = &l.adag * &l.a;
        let a_ad = &l.a * &l.adag;
        let t1 = &(&(&(&l.a * &r) * &l.adag).scale_real(2.0) - &(&ad_a * &r)) - &(&r * &ad_a);
        let t2 = &(&(&(&l.adag * &r) * &l.a).scale_real(2.0) - &(&a_ad * &r)) - &(&r * &a_ad);
        let want = &t1.scale_real(0.35 * 1.4) + &t2.scale_real(0.35 * 0.4);
        let got = dissipator(&rho, &bath);
        assert!(got.max_abs_diff(&want) < 1e-13);
        assert!(got.trace().norm() < 1e-12);
    }

    #[test]
    fn unitary_limit_rotates_coherent_state() {
        let dim = 30;
        let h = ladder_ops::<f64>(dim).unwrap().n;
        let rho0 = coherent_state(C::new(2.0, 0.0), dim).unwrap().to_density();
        let bath = BathParams::zero_temperature(0.0).unwrap();
        let run = evolve_master_at(&h, &rho0, &bath, &[1.3], 1e-10).unwrap();
        let want = coherent_state(C::new(2.0, 0.0) * C::new(1.3f64.cos(), -1.3f64.sin()), dim)
            .unwrap()
            .to_density();
        let f = crate::hilbert::fidelity(&run.states[0], &want).unwrap();
        assert!((1.0 - f).abs() < 1e-8, "{f}");
        assert!(run.report.max_trace_drift < 1e-12);
    }

    #[test]
    fn thermalization_of_fock_state() {
        // ⟨n⟩(t) = n̄ + (n0 − n̄)e^{−γt}
        let dim = 30;
        let bath = BathParams::from_nbar(0.2, 0.5).unwrap();
        let rho0 = FockVector::<f64>::basis(2, dim).unwrap().to_density();
        let run = evolve_master_at(&Operator::zeros(dim), &rho0, &bath, &[1.0, 5.0], 1e-9).unwrap();
        let n = ladder_ops::<f64>(dim).unwrap().n;
        for (t, s) in [1.0, 5.0].iter().zip(&run.states) {
            let got = s.expectation(&n).unwrap().re;
            let want = 0.5 + 1.5 * (-0.2f64 * t).exp();
            assert!((got - want).abs() < 1e-7, "{t}: {got} vs {want}");
        }
        assert!(run.report.max_trace_drift < 1e-9);
        assert!(run.report.min_eigenvalue > -1e-7);
    }

    #[test]
    fn truncation_monitor_fires() {
        let dim = 12;
        let bath = BathParams::zero_temperature(0.0).unwrap();
        let h = build_dho(3.0, 1.0, dim).unwrap();
        let rho0 = FockVector::<f64>::vacuum(dim).unwrap().to_density();
        assert!(matches!(
            evolve_master(&h, &rho0, &bath, 3.0, 1e-8),
            Err(Error::TruncationInsufficient { .. })
        ));
    }

    #[test]
    fn frame_alpha_solves_drive_equation() {
        let (gs, g, w) = (-3.0, 0.01, 1.0);
        assert_eq!(frame_alpha(gs, g, w, 0.0), C::new(0.0, 0.0));
        for &t in &[0.3, 2.0, 17.5, 140.0] {
            let h = 1e-5;
            let d = (frame_alpha(gs, g, w, t + h) - frame_alpha(gs, g, w, t - h)) / (2.0 * h);
            let res = d + C::new(0.0, gs) * C::new((w * t).cos(), (w * t).sin())
                + frame_alpha(gs, g, w, t) * (g / 2.0);
            assert!(res.norm() < 1e-8, "{t}: {res}");
        }
        // long-time modulus
        let t = 1e5;
        let m = frame_alpha(gs, g, w, t).norm();
        assert!((m - gs.abs() / (g * g / 4.0 + w * w).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn transform_trivial_without_drive() {
        let dim = 20;
        let rho0 = coherent_state(C::new(0.8, 0.3), dim).unwrap().to_density();
        let bath = BathParams::new(0.05, 0.5, 1.0).unwrap();
        let d = transform_check(&rho0, 0.0, 1.0, &bath, 2.0, 1e-10).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn moment_rhs_reads_off_inhomogeneous_terms() {
        let cs = fig4();
        let bath = BathParams::zero_temperature(0.01).unwrap();
        let d = moment_rhs(&MomentVector::vacuum(), Branch::Minus, &cs, 1.0, &bath);
        let gk = 0.0115;
        assert_eq!(d.a, C::new(0.0, 0.0));
        assert_eq!(d.adag, C::new(0.0, 0.0));
        assert_eq!(d.n, C::new(0.0, 0.0));
        assert!((d.a2 - C::new(0.0, -2.0 * gk)).norm() < 1e-15);
        assert!((d.adag2 - C::new(0.0, 2.0 * gk)).norm() < 1e-15);
    }

    #[test]
    fn moments_match_dense_unitary() {
        let dim = 60;
        let cs = fig4();
        let bath = BathParams::zero_temperature(0.0).unwrap();
        let h = build_conditional(Branch::Minus, &cs, 1.0, dim).unwrap();
        let vac = FockVector::<f64>::vacuum(dim).unwrap();
        let n = ladder_ops::<f64>(dim).unwrap().n;
        for &t in &[0.5, 3.0, 12.0] {
            let psi = propagator(&h, t).apply(&vac).unwrap();
            let want = psi.expectation(&n).unwrap().re;
            let m = evolve_moments(&MomentVector::vacuum(), Branch::Minus, &cs, 1.0, &bath, t, 1e-11)
                .unwrap();
            assert!((m.n.re - want).abs() < 1e-8, "{t}");
            let x = evolve_moments_exact(&MomentVector::vacuum(), Branch::Minus, &cs, 1.0, &bath, t);
            assert!(x.max_abs_diff(&m) < 1e-9);
        }
    }

    #[test]
    fn moments_vanish_without_coupling() {
        let cs = CouplingSet::nonlinear(0.0);
        let bath = BathParams::zero_temperature(0.01).unwrap();
        let m = evolve_moments(&MomentVector::vacuum(), Branch::Minus, &cs, 1.0, &bath, 50.0, 1e-8)
            .unwrap();
        assert!(m.max_abs_diff(&MomentVector::vacuum()) == 0.0);
    }

    #[test]
    fn position_variance_examples() {
        assert_eq!(position_variance(&MomentVector::<f64>::vacuum()).unwrap(), 1.0);
        assert!((position_variance(&MomentVector::<f64>::thermal(0.7)).unwrap() - 2.4).abs() < 1e-15);
        let m = MomentVector::coherent(C::new(1.3, -0.4));
        assert!((position_variance(&m).unwrap() - 1.0).abs() < 1e-14);
        let mut bad = MomentVector::<f64>::vacuum();
        bad.n = C::new(-1.0, 0.0);
        assert!(matches!(position_variance(&bad), Err(Error::NonPhysicalMoments(_))));
    }

    #[test]
    fn steady_state_values() {
        let cs = fig4();
        let bath = BathParams::zero_temperature(0.01).unwrap();
        let m = steady_moments(Branch::Minus, &cs, 1.0, &bath).unwrap();
        let den = 1e-4 + 4.0 * 1.023f64.powi(2) - 16.0 * 0.0115f64.powi(2);
        assert!((m.n.re - 8.0 * 0.0115f64.powi(2) / den).abs() < 1e-15);
        assert!((m.n.re - 2.53e-4).abs() < 1e-6);
        let s = steady_moments_solve(Branch::Minus, &cs, 1.0, &bath).unwrap();
        assert!(m.max_abs_diff(&s) < 1e-12);
        let v = steady_variance(Branch::Minus, &cs, 1.0, &bath).unwrap();
        assert!((v - 0.97802).abs() < 1e-5);
        assert!((v - position_variance(&m).unwrap()).abs() < 1e-12);

        let thermal = BathParams::<f64>::new(0.01, 0.4, 1.0).unwrap();
        let free = CouplingSet::nonlinear(0.0);
        let m = steady_moments(Branch::Minus, &free, 1.0, &thermal).unwrap();
        assert!(m.max_abs_diff(&MomentVector::thermal(thermal.nbar)) < 1e-15);
        let v = steady_variance(Branch::Plus, &free, 1.0, &thermal).unwrap();
        assert!((v - (2.0 * thermal.nbar + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn steady_instability() {
        let bath = BathParams::zero_temperature(0.01).unwrap();
        let cs = CouplingSet::nonlinear(0.3);
        assert!(matches!(
            steady_variance(Branch::Plus, &cs, 1.0, &bath),
            Err(Error::InstabilityRegime { .. })
        ));
    }

    #[test]
    fn critical_temperature_values() {
        let tc: f64 = critical_temperature(0.01, 1.0, 0.0115).unwrap();
        assert!((tc - 0.222).abs() < 1e-3);
        let tc0 = critical_temperature(0.0, 1.0, 0.0115).unwrap();
        assert!((tc0 - 1.0 / (1.0f64 / 0.0115 + 3.0).ln()).abs() < 1e-15);
        assert!((tc0 - 0.22226).abs() < 1e-5);
        assert!(matches!(
            critical_temperature(0.01, 1.0, 0.0),
            Err(Error::InvalidCoupling(_))
        ));
        let bath = BathParams::new(0.01, tc, 1.0).unwrap();
        let v = steady_variance(Branch::Minus, &fig4(), 1.0, &bath).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
        let bis = steady_crossing_temperature(&fig4(), 1.0, 0.01, 1e-12).unwrap();
        assert!((bis - tc).abs() < 1e-6);
    }

    #[test]
    fn master_matches_moments_for_squeezing() {
        let dim = 40;
        let cs = fig4();
        let bath = BathParams::new(0.01, 1.0, 1.0).unwrap();
        let h = build_conditional(Branch::Minus, &cs, 1.0, dim).unwrap();
        let rho0 = FockVector::<f64>::vacuum(dim).unwrap().to_density();
        let times = [2.0, 5.0];
        let run = evolve_master_at(&h, &rho0, &bath, &times, 1e-10).unwrap();
        let x = quadrature::<f64>(dim).unwrap();
        for (t, s) in times.iter().zip(&run.states) {
            let var = s.expectation(&(&x * &x)).unwrap().re - s.expectation(&x).unwrap().re.powi(2);
            let m = evolve_moments_exact(&MomentVector::vacuum(), Branch::Minus, &cs, 1.0, &bath, *t);
            let want = position_variance(&m).unwrap();
            assert!(((var - want) / want).abs() < 1e-6, "{t}: {var} vs {want}");
            let from_state = MomentVector::from_density(s).unwrap();
            assert!(from_state.max_abs_diff(&m) < 1e-6);
        }
    }
}
