//! Analytic results: normal-ordered factorization of linear-plus-number
//! exponentials, conditional displacement, measurement-prepared cats, the
//! zero-temperature dissipative cat and its Wigner function, and the unitary
//! squeezing variance.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::hilbert::{
    coherent_overlap, coherent_state, ladder_ops, CompositeState,
    DensityMatrix, FockVector, Operator, EDGE_POPULATION_LIMIT,
};
use crate::lindblad::frame_alpha;
use crate::model::{diagonalize_conditional, Branch, CouplingSet};
use crate::scalar::{cexp, cis, cplx, cre, real, to_f64, Real};

/// Switch to the series form below this `|β2 θ|`.
pub const BCH_SERIES_THRESHOLD: f64 = 1e-8;
/// Outcome probabilities below this are treated as impossible.
pub const DEGENERATE_PROBABILITY: f64 = 1e-14;

/// `exp[θ(β1 a + β2 a†a + β3 a†)] = e^{f1 a†} e^{f2 a†a} e^{f3 a} e^{f4}`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BchFactors<T: Real> {
    pub f1: Complex<T>,
    pub f2: Complex<T>,
    pub f3: Complex<T>,
    pub f4: Complex<T>,
}

pub fn bch_factorize<T: Real>(
    theta: Complex<T>,
    beta1: Complex<T>,
    beta2: Complex<T>,
    beta3: Complex<T>,
) -> BchFactors<T> {
    let x = beta2 * theta;
    let f2 = x;
    if x.norm_sqr().sqrt() < real::<T>(BCH_SERIES_THRESHOLD) {
        let c: Complex<T> = theta * (Complex::<T>::one() + x * cre(real::<T>(0.5)));
        return BchFactors {
            f1: beta3 * c,
            f2,
            f3: beta1 * c,
            f4: beta1 * beta3 * theta * theta * cre(real::<T>(0.5)),
        };
    }
    let (p1, p2) = phi_functions(x);
    BchFactors {
        f1: beta3 * theta * p1,
        f2,
        f3: beta1 * theta * p1,
        f4: beta1 * beta3 * theta * theta * p2,
    }
}

/// `((e^x − 1)/x, (e^x − 1 − x)/x²)`, by Taylor series near zero.
fn phi_functions<T: Real>(x: Complex<T>) -> (Complex<T>, Complex<T>) {
    let one = Complex::<T>::one();
    if x.norm_sqr() > real::<T>(0.01) {
        let em1 = cexp(x) - one;
        return (em1 / x, (em1 - x) / (x * x));
    }
    let (mut p1, mut p2) = (Complex::<T>::zero(), Complex::<T>::zero());
    let mut term = one;
    for k in 1..=20 {
        // term = x^{k-1}/k!
        term /= cre(real::<T>(k as f64));
        p1 += term;
        p2 += term / cre(real::<T>((k + 1) as f64));
        term *= x;
    }
    (p1, p2)
}

/// Action on `|α_i⟩`: returns `(ε, label)` with the result `e^{ε}|label⟩`.
pub fn bch_apply_coherent<T: Real>(f: &BchFactors<T>, alpha_i: Complex<T>) -> (Complex<T>, Complex<T>) {
    let ef2 = cexp(f.f2);
    let label = f.f1 + alpha_i * ef2;
    let half = real::<T>(0.5);
    let quad = (alpha_i * ef2).norm_sqr() - alpha_i.norm_sqr()
        + f.f1.norm_sqr()
        + real::<T>(2.0) * (f.f1 * alpha_i.conj() * ef2.conj()).re;
    let eps = f.f4 + f.f3 * alpha_i + cre(quad * half);
    (eps, label)
}

/// Dense product `e^{f4} e^{f1 a†} e^{f2 a†a} e^{f3 a}` on `dim` levels.
pub fn bch_operator<T: Real>(f: &BchFactors<T>, dim: usize) -> Result<Operator<T>> {
    let l = ladder_ops::<T>(dim)?;
    let e1 = l.adag.scale(f.f1).exp();
    let e2 = Operator::diagonal(
        &(0..dim)
            .map(|n| cexp(f.f2 * cre(real::<T>(n as f64))))
            .collect::<Vec<_>>(),
    );
    let e3 = l.a.scale(f.f3).exp();
    Ok((&(&e1 * &e2) * &e3).scale(cexp(f.f4)))
}

/// Coherent labels and phases of the two `σx` branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPair<T: Real> {
    pub alpha_plus: Complex<T>,
    pub alpha_minus: Complex<T>,
    pub theta_plus: T,
    pub theta_minus: T,
}

/// Branches of `ω a†a + g(a†+a)σx` started from `|α_i⟩`.
///
/// `α± = α_i e^{−iωt} ± (g/ω)(e^{−iωt} − 1)` and
/// `θ± = (g/ω)[gt − (g/ω) sin ωt ∓ (Re α_i sin ωt + Im α_i (1 − cos ωt))]`.
pub fn cdho_evolve<T: Real>(alpha_i: Complex<T>, g: T, omega: T, t: T) -> Result<BranchPair<T>> {
    if omega == T::zero() {
        return Err(Error::InvalidArgument("cantilever frequency must be non-zero".into()));
    }
    let r = g / omega;
    let ph = cis(-omega * t);
    let shift: Complex<T> = (ph - Complex::one()) * cre(r);
    let (s, c) = ((omega * t).sin(), (omega * t).cos());
    let common = g * t - r * s;
    let drive = alpha_i.re * s + alpha_i.im * (T::one() - c);
    Ok(BranchPair {
        alpha_plus: alpha_i * ph + shift,
        alpha_minus: alpha_i * ph - shift,
        theta_plus: r * (common - drive),
        theta_minus: r * (common + drive),
    })
}

/// `½[(e^{iθ₊}|α₊⟩ + e^{iθ₋}|α₋⟩)|0⟩ + (e^{iθ₊}|α₊⟩ − e^{iθ₋}|α₋⟩)|1⟩]`
pub fn cdho_state<T: Real>(b: &BranchPair<T>, dim: usize) -> Result<CompositeState<T>> {
    let p = coherent_state(b.alpha_plus, dim)?;
    let m = coherent_state(b.alpha_minus, dim)?;
    let cp = cis(b.theta_plus);
    let cm = cis(b.theta_minus);
    let h = cre(real::<T>(0.5));
    let mut amps = Vec::with_capacity(2 * dim);
    for sign in [T::one(), -T::one()] {
        for n in 0..dim {
            amps.push(h * (cp * p.amplitudes()[n] + cre(sign) * cm * m.amplitudes()[n]));
        }
    }
    CompositeState::from_amplitudes(dim, amps)
}

/// Initial `|α_i⟩ ⊗ |0⟩` of the conditional-displacement protocol.
pub fn cdho_initial<T: Real>(alpha_i: Complex<T>, dim: usize) -> Result<CompositeState<T>> {
    Ok(CompositeState::product(
        [Complex::one(), Complex::zero()],
        &coherent_state(alpha_i, dim)?,
    ))
}

/// Two-dyad cantilever state
/// `𝒩²[|β₊⟩⟨β₊| + |β₋⟩⟨β₋| + e^{−iφ}e^{Δr+iΔi}|β₊⟩⟨β₋| + h.c.]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatRecord<T: Real> {
    pub beta_plus: Complex<T>,
    pub beta_minus: Complex<T>,
    pub phi_rel: T,
    pub delta_r: T,
    pub delta_i: T,
    pub norm: T,
    /// Drive label `α(t)`; zero for measurement-prepared cats.
    pub alpha: Complex<T>,
}

impl<T: Real> CatRecord<T> {
    /// Weight of `|β₊⟩⟨β₋|`.
    pub fn coherence(&self) -> Complex<T> {
        cis(-self.phi_rel) * cexp(cplx(self.delta_r, self.delta_i))
    }

    /// `Tr(ρa)` from the dyad expansion.
    pub fn mean_a(&self) -> Complex<T> {
        let c = self.coherence();
        let ov = coherent_overlap(self.beta_minus, self.beta_plus);
        let n2 = cre(self.norm * self.norm);
        n2 * (self.beta_plus + self.beta_minus + c * ov * self.beta_plus
            + (c * ov).conj() * self.beta_minus)
    }

    /// `Tr ρ` from the dyad expansion; 1 for consistent records.
    pub fn trace(&self) -> T {
        let ov = coherent_overlap(self.beta_minus, self.beta_plus);
        self.norm * self.norm * real::<T>(2.0) * (T::one() + (self.coherence() * ov).re)
    }

    /// Largest label modulus.
    pub fn max_label(&self) -> T {
        self.beta_plus
            .norm_sqr()
            .max(self.beta_minus.norm_sqr())
            .sqrt()
    }
}

fn pure_cat<T: Real>(p: Complex<T>, m: Complex<T>, phi_rel: T, norm: T) -> CatRecord<T> {
    CatRecord {
        beta_plus: p,
        beta_minus: m,
        phi_rel,
        delta_r: T::zero(),
        delta_i: T::zero(),
        norm,
        alpha: Complex::zero(),
    }
}

/// Projects the qubit onto `|outcome⟩` (0 or 1). Returns the collapsed
/// cantilever state and the outcome probability.
pub fn measure_cat<T: Real>(b: &BranchPair<T>, outcome: usize) -> Result<(CatRecord<T>, T)> {
    let sign = match outcome {
        0 => T::one(),
        1 => -T::one(),
        _ => return Err(Error::InvalidArgument(format!("qubit outcome {outcome}"))),
    };
    let ov = coherent_overlap(b.alpha_plus, b.alpha_minus);
    let inv = real::<T>(2.0)
        * (T::one() + sign * (cis(-(b.theta_plus - b.theta_minus)) * ov).re);
    let prob = inv * real::<T>(0.25);
    if prob < real(DEGENERATE_PROBABILITY) {
        return Err(Error::DegenerateBranch);
    }
    let mut phi = b.theta_minus - b.theta_plus;
    if outcome == 1 {
        phi += T::pi();
    }
    Ok((
        pure_cat(b.alpha_plus, b.alpha_minus, phi, T::one() / inv.sqrt()),
        prob,
    ))
}

/// Even (`+`) or odd (`−`) cat `|β⟩ ± |−β⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Cat prepared from the vacuum, `β = g(e^{−iωt} − 1)/ω`.
pub fn cat_from_vacuum<T: Real>(g: T, omega: T, t: T, parity: Parity) -> Result<CatRecord<T>> {
    if omega == T::zero() {
        return Err(Error::InvalidArgument("cantilever frequency must be non-zero".into()));
    }
    let beta: Complex<T> = (cis(-omega * t) - Complex::one()) * cre(g / omega);
    let (sign, phi) = match parity {
        Parity::Even => (T::one(), T::zero()),
        Parity::Odd => (-T::one(), T::pi()),
    };
    let inv = real::<T>(2.0) * (T::one() + sign * (-real::<T>(2.0) * beta.norm_sqr()).exp());
    if inv * real::<T>(0.25) < real(DEGENERATE_PROBABILITY) {
        return Err(Error::DegenerateBranch);
    }
    Ok(pure_cat(beta, -beta, phi, T::one() / inv.sqrt()))
}

/// Steady coherent label `−i g_s / (γ/2 + iω)` of the damped driven oscillator.
pub fn steady_label<T: Real>(g_s: T, gamma: T, omega: T) -> Complex<T> {
    cplx(T::zero(), -g_s) / cplx(gamma * real::<T>(0.5), omega)
}

/// Zero-temperature evolution of `𝒩(|β⟩ + e^{iφ}|−β⟩)` under the damped
/// displaced oscillator.
pub fn dissipative_cat<T: Real>(
    beta: Complex<T>,
    phi_rel: T,
    g_s: T,
    omega: T,
    gamma: T,
    t: T,
) -> Result<CatRecord<T>> {
    if gamma < T::zero() {
        return Err(Error::NegativeDecay(to_f64(gamma)));
    }
    let half = real::<T>(0.5);
    let two = real::<T>(2.0);
    let alpha = frame_alpha(g_s, gamma, omega, t);
    let damp = (-half * gamma * t).exp();
    let rot = cis(-omega * t);
    let b2 = beta.norm_sqr();
    let inv = two * (T::one() + (-two * b2).exp() * phi_rel.cos());
    if inv < real(4.0 * DEGENERATE_PROBABILITY) {
        return Err(Error::DegenerateBranch);
    }
    Ok(CatRecord {
        beta_plus: (alpha + beta * cre(damp)) * rot,
        beta_minus: (alpha - beta * cre(damp)) * rot,
        phi_rel,
        delta_r: two * b2 * ((-gamma * t).exp() - T::one()),
        delta_i: two * (alpha * beta.conj() * cre(damp)).im,
        norm: T::one() / inv.sqrt(),
        alpha,
    })
}

/// Wigner function of a [`CatRecord`] in closed form.
pub fn wigner_analytic<T: Real>(cat: &CatRecord<T>, xi: Complex<T>) -> T {
    let two = real::<T>(2.0);
    let half = real::<T>(0.5);
    let (bp, bm) = (cat.beta_plus, cat.beta_minus);
    let g1 = (-two * (xi - bp).norm_sqr()).exp();
    let g2 = (-two * (xi - bm).norm_sqr()).exp();
    let big_theta = (xi * bm.conj() + xi.conj() * bp - cre(xi.norm_sqr())) * cre(two)
        - (cre(bp.norm_sqr() + bm.norm_sqr()) + bm.conj() * bp * cre(two)) * cre(half);
    let cross = cis(-cat.phi_rel) * cexp(cplx(cat.delta_r, cat.delta_i) + big_theta);
    two * cat.norm * cat.norm * (g1 + g2 + two * cross.re)
}

/// Dense density matrix of a [`CatRecord`] on `dim` levels, renormalized to
/// unit trace.
pub fn realize<T: Real>(cat: &CatRecord<T>, dim: usize) -> Result<DensityMatrix<T>> {
    let p = coherent_state(cat.beta_plus, dim)?;
    let m = coherent_state(cat.beta_minus, dim)?;
    let c = cat.coherence();
    let pv = p.as_vector();
    let mv = m.as_vector();
    let n2 = cre(cat.norm * cat.norm);
    let mut mat = (pv * pv.adjoint() + mv * mv.adjoint()) * n2;
    let cross = pv * mv.adjoint() * (c * n2);
    mat += &cross;
    mat += cross.adjoint();
    let tr = mat.trace().re;
    if !(tr > T::zero()) {
        return Err(Error::DegenerateBranch);
    }
    mat /= cre(tr);
    let rho = DensityMatrix::new(Operator::from_matrix(mat)?)?;
    let edge = rho.edge_population();
    if edge > real(EDGE_POPULATION_LIMIT) {
        return Err(Error::TruncationInsufficient {
            dim,
            weight: to_f64(edge),
        });
    }
    Ok(rho)
}

/// Pure cantilever state of a record with no decoherence.
pub fn realize_pure<T: Real>(cat: &CatRecord<T>, dim: usize) -> Result<FockVector<T>> {
    let p = coherent_state(cat.beta_plus, dim)?;
    let m = coherent_state(cat.beta_minus, dim)?;
    let c = cis(-cat.phi_rel).conj();
    let amps = p
        .amplitudes()
        .iter()
        .zip(m.amplitudes())
        .map(|(x, y)| *x + c * *y)
        .collect();
    Ok(FockVector::new(amps)?.normalize())
}

/// `(Δz)²_k / z0² = e^{−8λ_k} sin²(Ω_k t) + cos²(Ω_k t)`
pub fn unitary_variance<T: Real>(k: Branch, cs: &CouplingSet<T>, omega: T, t: T) -> Result<T> {
    let spec = diagonalize_conditional(k, cs, omega)?;
    let (s, c) = ((spec.big_omega_k * t).sin(), (spec.big_omega_k * t).cos());
    Ok((-real::<T>(8.0) * spec.lambda_k).exp() * s * s + c * c)
}
