//! Truncated Fock-space linear algebra for a single bosonic mode, plus the
//! qubit-major composite space used for the cantilever–qubit system.
//!
//! Everything here is dense. Basis index `n` is the number state `|n⟩`,
//! `n < dim`. Composite vectors are ordered qubit-major: index `q * dim + n`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cabs, cexp, cis, cplx, cre, ln_factorial, real, safe_dim, to_f64, Real};

/// Population allowed in the two highest Fock levels of any produced state.
pub const EDGE_POPULATION_LIMIT: f64 = 1e-8;
/// Weight a coherent state may lose to truncation before renormalization.
pub const COHERENT_LOSS_LIMIT: f64 = 1e-6;

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::InvalidDimension(dim))
    } else {
        Ok(())
    }
}

fn check_same(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// Pure state of the cantilever in a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector<T: Real> {
    amps: DVector<Complex<T>>,
}

impl<T: Real> FockVector<T> {
    /// Wraps raw amplitudes. No normalization is applied.
    pub fn new(amps: Vec<Complex<T>>) -> Result<Self> {
        check_dim(amps.len())?;
        Ok(Self {
            amps: DVector::from_vec(amps),
        })
    }

    pub(crate) fn from_vector(amps: DVector<Complex<T>>) -> Self {
        Self { amps }
    }

    /// Number state `|n⟩`.
    pub fn basis(n: usize, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if n >= dim {
            return Err(Error::TruncationInsufficient { dim, weight: 1.0 });
        }
        let mut amps = DVector::zeros(dim);
        amps[n] = Complex::one();
        Ok(Self { amps })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::basis(0, dim)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        self.amps.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<Complex<T>> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// Rescales to unit norm. A zero vector is returned unchanged.
    pub fn normalize(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n > T::zero() {
            self.amps /= cre(n);
        }
        self
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        check_same(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `⟨ψ|A|ψ⟩ / ⟨ψ|ψ⟩`
    pub fn expectation(&self, op: &Operator<T>) -> Result<Complex<T>> {
        check_same(self.dim(), op.dim())?;
        let av = &op.m * &self.amps;
        Ok(self.amps.dotc(&av) / cre(self.norm_sqr()))
    }

    /// Relative population of the two highest levels.
    pub fn edge_population(&self) -> T {
        let d = self.dim();
        (self.amps[d - 1].norm_sqr() + self.amps[d - 2].norm_sqr()) / self.norm_sqr()
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        DensityMatrix::from_pure(self)
    }
}

/// Joint qubit ⊗ cantilever pure state, ordered qubit-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeState<T: Real> {
    dim: usize,
    amps: DVector<Complex<T>>,
}

impl<T: Real> CompositeState<T> {
    /// `(c0|0⟩ + c1|1⟩) ⊗ |ψ⟩`
    pub fn product(qubit: [Complex<T>; 2], cantilever: &FockVector<T>) -> Self {
        let dim = cantilever.dim();
        let mut amps = DVector::zeros(2 * dim);
        for q in 0..2 {
            for n in 0..dim {
                amps[q * dim + n] = qubit[q] * cantilever.amps[n];
            }
        }
        Self { dim, amps }
    }

    pub fn from_amplitudes(dim: usize, amps: Vec<Complex<T>>) -> Result<Self> {
        check_dim(dim)?;
        check_same(2 * dim, amps.len())?;
        Ok(Self {
            dim,
            amps: DVector::from_vec(amps),
        })
    }

    pub fn cantilever_dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        self.amps.as_slice()
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// Unnormalized cantilever amplitude conditioned on qubit state `q`.
    pub fn branch(&self, q: usize) -> FockVector<T> {
        let start = q * self.dim;
        FockVector::from_vector(DVector::from_iterator(
            self.dim,
            self.amps.iter().skip(start).take(self.dim).copied(),
        ))
    }

    /// Applies an operator on the composite space.
    pub fn evolve(&self, op: &Operator<T>) -> Result<Self> {
        check_same(2 * self.dim, op.dim())?;
        Ok(Self {
            dim: self.dim,
            amps: &op.m * &self.amps,
        })
    }

    /// `|⟨self|other⟩|²` for normalized inputs.
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        check_same(self.amps.len(), other.amps.len())?;
        let ov = self.amps.dotc(&other.amps);
        Ok(ov.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Dense square operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator<T: Real> {
    pub(crate) m: DMatrix<Complex<T>>,
}

impl<T: Real> Operator<T> {
    pub fn from_matrix(m: DMatrix<Complex<T>>) -> Result<Self> {
        check_same(m.nrows(), m.ncols())?;
        Ok(Self { m })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        Self {
            m: DMatrix::from_fn(dim, dim, f),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Self {
        Self {
            m: DMatrix::from_diagonal(&DVector::from_column_slice(entries)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self { m: &self.m * c }
    }

    pub fn scale_real(&self, c: T) -> Self {
        self.scale(cre(c))
    }

    pub fn apply(&self, v: &FockVector<T>) -> Result<FockVector<T>> {
        check_same(self.dim(), v.dim())?;
        Ok(FockVector::from_vector(&self.m * &v.amps))
    }

    /// `[A, B] = AB − BA`
    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            m: &self.m * &other.m - &other.m * &self.m,
        }
    }

    pub fn trace(&self) -> Complex<T> {
        self.m.trace()
    }

    /// `self ⊗ other` (self is the slow index).
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            m: self.m.kronecker(&other.m),
        }
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> T {
        self.m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.m
            .iter()
            .zip(other.m.iter())
            .fold(T::zero(), |acc, (a, b)| acc.max(cabs(*a - *b)))
    }

    /// `max |A − A†|` elementwise.
    pub fn hermiticity_error(&self) -> T {
        let n = self.dim();
        let mut e = T::zero();
        for i in 0..n {
            for j in i..n {
                e = e.max(cabs(self.m[(i, j)] - self.m[(j, i)].conj()));
            }
        }
        e
    }

    /// `max |U†U − I|` elementwise.
    pub fn unitarity_error(&self) -> T {
        let p = self.m.adjoint() * &self.m;
        Operator { m: p }.max_abs_diff(&Operator::identity(self.dim()))
    }

    /// Top-left `n × n` block.
    pub fn block(&self, n: usize) -> Self {
        Self {
            m: self.m.view((0, 0), (n, n)).into_owned(),
        }
    }

    /// Matrix exponential by scaling and squaring with Padé approximants.
    pub fn exp(&self) -> Self {
        Self { m: self.m.exp() }
    }

    /// Eigendecomposition of a Hermitian operator, ascending eigenvalues.
    /// Only the Hermitian part of `self` is used.
    pub fn eigh(&self) -> (Vec<T>, DMatrix<Complex<T>>) {
        let h = (&self.m + self.m.adjoint()) * cre(real::<T>(0.5));
        let eig = SymmetricEigen::new(h);
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    /// `f(A)` for Hermitian `A` through its eigendecomposition.
    pub fn hermitian_map(&self, f: impl Fn(T) -> Complex<T>) -> Self {
        let (values, v) = self.eigh();
        let n = self.dim();
        let mut scaled = v.clone();
        for (c, lam) in values.iter().enumerate() {
            let fc = f(*lam);
            for r in 0..n {
                scaled[(r, c)] *= fc;
            }
        }
        Self {
            m: scaled * v.adjoint(),
        }
    }

    /// Spectral (operator 2-) norm.
    pub fn spectral_norm(&self) -> T {
        let p = Operator {
            m: self.m.adjoint() * &self.m,
        };
        let (values, _) = p.eigh();
        values.last().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt()
    }
}

impl<T: Real> Add for &Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: Self) -> Operator<T> {
        Operator { m: &self.m + &rhs.m }
    }
}

impl<T: Real> Sub for &Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: Self) -> Operator<T> {
        Operator { m: &self.m - &rhs.m }
    }
}

impl<T: Real> Mul for &Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: Self) -> Operator<T> {
        Operator { m: &self.m * &rhs.m }
    }
}

impl<T: Real> Neg for &Operator<T> {
    type Output = Operator<T>;
    fn neg(self) -> Operator<T> {
        Operator { m: -&self.m }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl<T: Real> $tr for Operator<T> {
            type Output = Operator<T>;
            fn $f(self, rhs: Self) -> Operator<T> {
                (&self).$f(&rhs)
            }
        }
        impl<T: Real> $tr<&Operator<T>> for Operator<T> {
            type Output = Operator<T>;
            fn $f(self, rhs: &Operator<T>) -> Operator<T> {
                (&self).$f(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// Hermitian, unit-trace mixed state of the cantilever.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    pub(crate) m: DMatrix<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// `|ψ⟩⟨ψ|` for the normalized version of `psi`.
    pub fn from_pure(psi: &FockVector<T>) -> Self {
        let v = psi.clone().normalize();
        Self {
            m: &v.amps * v.amps.adjoint(),
        }
    }

    /// Validates Hermiticity and trace (cheap checks only; see [`Self::validate`]).
    pub fn new(op: Operator<T>) -> Result<Self> {
        let rho = Self { m: op.m };
        check_dim(rho.dim())?;
        let herm = rho.hermiticity_error();
        if herm > real(Self::HERMITICITY_TOL) {
            return Err(Error::InvalidState(format!(
                "hermiticity error {:.3e}",
                to_f64(herm)
            )));
        }
        let tr = rho.trace();
        if (tr - T::one()).abs() > real(Self::TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace {}", to_f64(tr))));
        }
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex<T>>) -> Self {
        Self { m }
    }

    /// Thermal state with mean occupation `nbar`, truncated and renormalized.
    pub fn thermal(nbar: T, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let ratio = if nbar > T::zero() {
            nbar / (nbar + T::one())
        } else {
            T::zero()
        };
        let mut p: Vec<T> = Vec::with_capacity(dim);
        let mut w = T::one();
        for _ in 0..dim {
            p.push(w);
            w *= ratio;
        }
        let total = p.iter().fold(T::zero(), |a, b| a + *b);
        let diag: Vec<Complex<T>> = p.iter().map(|x| cre(*x / total)).collect();
        Ok(Self {
            m: DMatrix::from_diagonal(&DVector::from_vec(diag)),
        })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.m
    }

    pub fn to_operator(&self) -> Operator<T> {
        Operator { m: self.m.clone() }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.m[(row, col)]
    }

    pub fn trace(&self) -> T {
        self.m.trace().re
    }

    pub fn purity(&self) -> T {
        let mut acc = T::zero();
        for z in self.m.iter() {
            acc += z.norm_sqr();
        }
        acc
    }

    /// `Tr(ρA)`
    pub fn expectation(&self, op: &Operator<T>) -> Result<Complex<T>> {
        check_same(self.dim(), op.dim())?;
        let n = self.dim();
        let mut acc = Complex::zero();
        for i in 0..n {
            for k in 0..n {
                acc += self.m[(i, k)] * op.m[(k, i)];
            }
        }
        Ok(acc)
    }

    pub fn hermiticity_error(&self) -> T {
        Operator { m: self.m.clone() }.hermiticity_error()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<T> {
        Operator { m: self.m.clone() }.eigh().0
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    /// Population of the two highest Fock levels.
    pub fn edge_population(&self) -> T {
        let d = self.dim();
        self.m[(d - 1, d - 1)].re + self.m[(d - 2, d - 2)].re
    }

    /// `(ρ + ρ†) / 2`
    pub fn symmetrized(&self) -> Self {
        Self {
            m: (&self.m + self.m.adjoint()) * cre(real::<T>(0.5)),
        }
    }

    /// `U ρ U†`
    pub fn conjugated(&self, u: &Operator<T>) -> Result<Self> {
        check_same(self.dim(), u.dim())?;
        Ok(Self {
            m: &u.m * &self.m * u.m.adjoint(),
        })
    }

    /// Full validation including positivity (costs an eigendecomposition).
    pub fn validate(&self) -> Result<()> {
        Self::new(self.to_operator())?;
        let lo = self.min_eigenvalue();
        if lo < -real::<T>(Self::POSITIVITY_TOL) {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {:.3e}",
                to_f64(lo)
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Constructions
// ---------------------------------------------------------------------------

/// Raw Glauber amplitudes `e^{−|α|²/2} αⁿ/√n!` for `n < dim`, not renormalized.
pub fn coherent_amplitudes<T: Real>(alpha: Complex<T>, dim: usize) -> DVector<Complex<T>> {
    let mut amps = DVector::zeros(dim);
    let mut cur = cre((-alpha.norm_sqr() * real::<T>(0.5)).exp());
    for n in 0..dim {
        amps[n] = cur;
        cur = cur * alpha / cre(real::<T>((n + 1) as f64).sqrt());
    }
    amps
}

/// Normalized coherent state `|α⟩` on `dim` levels.
pub fn coherent_state<T: Real>(alpha: Complex<T>, dim: usize) -> Result<FockVector<T>> {
    check_dim(dim)?;
    let raw = FockVector::from_vector(coherent_amplitudes(alpha, dim));
    let lost = T::one() - raw.norm_sqr();
    if lost > real(COHERENT_LOSS_LIMIT) {
        return Err(Error::TruncationInsufficient {
            dim,
            weight: to_f64(lost),
        });
    }
    let edge = raw.edge_population();
    if edge > real(EDGE_POPULATION_LIMIT) {
        return Err(Error::TruncationInsufficient {
            dim,
            weight: to_f64(edge),
        });
    }
    Ok(raw.normalize())
}

/// Annihilation, creation and number operators on `dim` levels.
#[derive(Debug, Clone)]
pub struct LadderOps<T: Real> {
    pub a: Operator<T>,
    pub adag: Operator<T>,
    pub n: Operator<T>,
}

pub fn ladder_ops<T: Real>(dim: usize) -> Result<LadderOps<T>> {
    check_dim(dim)?;
    let a = Operator::from_fn(dim, |r, c| {
        if c == r + 1 {
            cre(real::<T>(c as f64).sqrt())
        } else {
            Complex::zero()
        }
    });
    let adag = a.adjoint();
    let n = Operator::diagonal(
        &(0..dim)
            .map(|k| cre(real::<T>(k as f64)))
            .collect::<Vec<_>>(),
    );
    Ok(LadderOps { a, adag, n })
}

/// `a + a†`
pub fn quadrature<T: Real>(dim: usize) -> Result<Operator<T>> {
    let l = ladder_ops::<T>(dim)?;
    Ok(&l.a + &l.adag)
}

/// `D(α) = exp(αa† − α*a)`, computed from the eigendecomposition of the
/// Hermitian generator `i(αa† − α*a)`.
pub fn displacement_op<T: Real>(alpha: Complex<T>, dim: usize) -> Result<Operator<T>> {
    check_dim(dim)?;
    if safe_dim(cabs(alpha)) > dim {
        let tail = T::one() - FockVector::from_vector(coherent_amplitudes(alpha, dim)).norm_sqr();
        return Err(Error::TruncationInsufficient {
            dim,
            weight: to_f64(tail.max(T::zero())),
        });
    }
    let l = ladder_ops::<T>(dim)?;
    let i = cplx(T::zero(), T::one());
    let gen = (l.adag.scale(alpha) - l.a.scale(alpha.conj())).scale(i);
    Ok(gen.hermitian_map(|x| cis(-x)))
}

/// `R(θ) = exp(−iθ a†a)`
pub fn rotation_op<T: Real>(theta: T, dim: usize) -> Result<Operator<T>> {
    check_dim(dim)?;
    Ok(Operator::diagonal(
        &(0..dim)
            .map(|n| cis(-theta * real::<T>(n as f64)))
            .collect::<Vec<_>>(),
    ))
}

/// Weight the squeezed vacuum `exp(−λ(a² − a†²))|0⟩` places on levels `≥ dim`.
fn squeezed_vacuum_tail<T: Real>(lambda: T, dim: usize) -> T {
    let r = real::<T>(2.0) * lambda.abs();
    let t2 = r.tanh() * r.tanh();
    let mut p = T::one() / r.cosh();
    let mut kept = T::zero();
    let mut m = 0usize;
    while 2 * m < dim {
        kept += p;
        // P(2m+2)/P(2m) = tanh²r (2m+1)(2m+2) / (4 (m+1)²)
        let num = real::<T>(((2 * m + 1) * (2 * m + 2)) as f64);
        let den = real::<T>((4 * (m + 1) * (m + 1)) as f64);
        p = p * t2 * num / den;
        m += 1;
    }
    (T::one() - kept).max(T::zero())
}

/// Two-photon unitary `exp(−λ(a² − a†²))`, satisfying
/// `U a U† = a cosh 2λ − a† sinh 2λ` on the well-resolved part of the basis.
pub fn two_photon_op<T: Real>(lambda: T, dim: usize) -> Result<Operator<T>> {
    check_dim(dim)?;
    let tail = squeezed_vacuum_tail(lambda, dim);
    if tail > real(EDGE_POPULATION_LIMIT) {
        return Err(Error::TruncationInsufficient {
            dim,
            weight: to_f64(tail),
        });
    }
    let l = ladder_ops::<T>(dim)?;
    let a2 = &l.a * &l.a;
    let ad2 = &l.adag * &l.adag;
    // generator G = −λ(a² − a†²) is anti-Hermitian; iG is Hermitian
    let i = cplx(T::zero(), T::one());
    let gen = (&a2 - &ad2).scale(cre(-lambda) * i);
    Ok(gen.hermitian_map(|x| cis(-x)))
}

/// Untruncated Fock matrix elements `⟨m|D(α)|n⟩`, `m, n < dim`, from the
/// associated-Laguerre closed form. Unlike [`displacement_op`] these are
/// exact for any `α`; they are not a unitary on the truncated space.
pub fn displacement_elements<T: Real>(alpha: Complex<T>, dim: usize) -> DMatrix<Complex<T>> {
    let x = alpha.norm_sqr();
    let r = x.sqrt();
    let phase = if r > T::zero() {
        alpha / cre(r)
    } else {
        Complex::one()
    };
    let half = real::<T>(0.5);
    let lnr = if r > T::zero() { r.ln() } else { T::zero() };
    let lnfact: Vec<T> = {
        let mut v = Vec::with_capacity(dim + 1);
        let mut acc = T::zero();
        v.push(acc);
        for k in 1..=dim {
            acc += real::<T>(k as f64).ln();
            v.push(acc);
        }
        v
    };
    let mut out = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        // L_n^{(k)}(x) for n = 0 .. dim-k-1
        let kk = real::<T>(k as f64);
        let mut l_prev = T::zero();
        let mut l_cur = T::one();
        let pk = num_traits::pow::pow(phase, k);
        for n in 0..dim - k {
            if n == 1 {
                l_prev = T::one();
                l_cur = T::one() + kk - x;
            } else if n > 1 {
                let nn = real::<T>((n - 1) as f64);
                let next = ((real::<T>(2.0) * nn + T::one() + kk - x) * l_cur - (nn + kk) * l_prev)
                    / (nn + T::one());
                l_prev = l_cur;
                l_cur = next;
            }
            let mag = if k == 0 {
                (-x * half).exp()
            } else if r > T::zero() {
                (half * (lnfact[n] - lnfact[n + k]) + kk * lnr - x * half).exp()
            } else {
                T::zero()
            };
            let lower = pk * cre(mag * l_cur);
            out[(n + k, n)] = lower;
            if k > 0 {
                // ⟨n|D(α)|n+k⟩ = √(n!/(n+k)!) (−α*)^k e^{−x/2} L_n^{(k)}(x)
                let sign = if k % 2 == 0 { T::one() } else { -T::one() };
                out[(n, n + k)] = lower.conj() * cre(sign);
            }
        }
    }
    out
}

/// Wigner function `2 Tr[D(−ξ) ρ D(ξ) e^{iπa†a}]`.
///
/// Uses `D(ξ) e^{iπa†a} D(−ξ) = D(2ξ) e^{iπa†a}` with untruncated matrix
/// elements of `D(2ξ)`, so only `ρ` itself must be resolved by the basis.
pub fn wigner_numeric<T: Real>(rho: &DensityMatrix<T>, xi: Complex<T>) -> Result<T> {
    Ok(wigner_numeric_complex(rho, xi)?.re)
}

pub(crate) fn wigner_numeric_complex<T: Real>(
    rho: &DensityMatrix<T>,
    xi: Complex<T>,
) -> Result<Complex<T>> {
    let dim = rho.dim();
    let edge = rho.edge_population();
    if edge > real(EDGE_POPULATION_LIMIT) {
        return Err(Error::TruncationInsufficient {
            dim,
            weight: to_f64(edge),
        });
    }
    let d = displacement_elements(xi * cre(real::<T>(2.0)), dim);
    let mut acc: Complex<T> = Complex::zero();
    for n in 0..dim {
        let mut col: Complex<T> = Complex::zero();
        for m in 0..dim {
            col += rho.m[(n, m)] * d[(m, n)];
        }
        if n % 2 == 0 {
            acc += col;
        } else {
            acc -= col;
        }
    }
    Ok(acc * cre(real::<T>(2.0)))
}

fn psd_sqrt<T: Real>(m: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let op = Operator { m: m.clone() };
    let (values, _) = op.eigh();
    let top = values.last().copied().unwrap_or_else(T::zero).abs();
    let floor = top * real::<T>(1e-14);
    op.hermitian_map(|x| if x > floor { cre(x.sqrt()) } else { Complex::zero() })
        .m
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    check_same(rho.dim(), sigma.dim())?;
    let tol = real::<T>(1e-12);
    // pure fast path: F = ⟨ψ|ρ|ψ⟩
    for (pure, other) in [(sigma, rho), (rho, sigma)] {
        if (pure.purity() - T::one()).abs() < tol {
            let (_, v) = pure.to_operator().eigh();
            let psi = v.column(pure.dim() - 1).into_owned();
            let f = psi.dotc(&(&other.m * &psi)).re;
            return Ok(f.max(T::zero()).min(T::one()));
        }
    }
    let s = psd_sqrt(&rho.m);
    let inner = &s * &sigma.m * &s;
    let (values, _) = Operator { m: inner }.eigh();
    let tr = values
        .iter()
        .fold(T::zero(), |acc, x| acc + x.max(T::zero()).sqrt());
    Ok((tr * tr).max(T::zero()).min(T::one()))
}

/// `½ Σ |eig(ρ − σ)|`
pub fn trace_distance<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    check_same(rho.dim(), sigma.dim())?;
    let diff = Operator {
        m: &rho.m - &sigma.m,
    };
    let (values, _) = diff.eigh();
    Ok(values.iter().fold(T::zero(), |acc, x| acc + x.abs()) * real::<T>(0.5))
}

/// Coherent-state overlap `⟨α|β⟩ = exp(−|α|²/2 − |β|²/2 + α*β)`.
pub fn coherent_overlap<T: Real>(alpha: Complex<T>, beta: Complex<T>) -> Complex<T> {
    let half = real::<T>(0.5);
    cexp(cre(-(alpha.norm_sqr() + beta.norm_sqr()) * half) + alpha.conj() * beta)
}

/// Poisson tail `Σ_{n ≥ dim} e^{−|α|²}|α|^{2n}/n!` by direct summation.
pub fn coherent_tail<T: Real>(alpha_abs: T, dim: usize) -> T {
    let x = alpha_abs * alpha_abs;
    let mut kept = T::zero();
    for n in 0..dim {
        let lnp = -x + real::<T>(n as f64) * if x > T::zero() { x.ln() } else { T::zero() }
            - ln_factorial::<T>(n);
        if x > T::zero() || n == 0 {
            kept += lnp.exp();
        }
    }
    (T::one() - kept).max(T::zero())
}

// ---------------------------------------------------------------------------
// Qubit helpers (qubit-major composite operators)
// ---------------------------------------------------------------------------

/// `σz = |0⟩⟨0| − |1⟩⟨1|`
pub fn pauli_z<T: Real>() -> Operator<T> {
    Operator::diagonal(&[cre(T::one()), cre(-T::one())])
}

/// `σx = |0⟩⟨1| + |1⟩⟨0|`
pub fn pauli_x<T: Real>() -> Operator<T> {
    Operator::from_fn(2, |r, c| {
        if r != c {
            Complex::one()
        } else {
            Complex::zero()
        }
    })
}

/// Eigenstates `|±⟩ = (|0⟩ ± |1⟩)/√2` of `σx` as qubit amplitudes.
pub fn sigma_x_eigenstate<T: Real>(k: i32) -> [Complex<T>; 2] {
    let h = cre(real::<T>(0.5).sqrt());
    if k >= 0 {
        [h, h]
    } else {
        [h, -h]
    }
}
