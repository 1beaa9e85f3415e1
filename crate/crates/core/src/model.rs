//! Device parameters, derived coupling constants, and the tailored
//! cantilever–qubit Hamiltonians.
//!
//! Composite operators act on `qubit ⊗ cantilever` with the qubit index
//! slowest, matching [`crate::hilbert::CompositeState`].

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hilbert::{ladder_ops, pauli_x, pauli_z, quadrature, Operator};
use crate::scalar::{cre, real, to_f64, Real};

/// Vacuum permeability in T·m/A.
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Superconducting flux quantum `h/2e` in Wb.
pub const FLUX_QUANTUM: f64 = 2.067_833_848e-15;
/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Measured field gradient and zero-point amplitude, used in place of the
/// dipole-derived `C` and the mass-derived `z0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientOverride<T: Real> {
    /// `|∂B_z/∂z|` in T/m.
    pub gradient: T,
    /// Zero-point amplitude in m.
    pub z0: T,
}

/// Physical device parameters in SI units, with energies as angular
/// frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams<T: Real> {
    /// Tip magnetic moment, A·m².
    pub tip_moment: T,
    /// Tip to loop-centre distance, m.
    pub tip_distance: T,
    /// SQUID loop area, m².
    pub loop_area: T,
    /// Josephson energy, rad/s.
    pub josephson_energy: T,
    /// Charging energy, rad/s.
    pub charging_energy: T,
    pub gate_charge: T,
    /// Externally applied field through the loop, T.
    pub external_field: T,
    /// Cantilever angular frequency, rad/s.
    pub cantilever_freq: T,
    /// Cantilever effective mass, kg.
    pub cantilever_mass: T,
    pub mu0: T,
    pub flux_quantum: T,
    pub gradient_override: Option<GradientOverride<T>>,
}

impl<T: Real> DeviceParams<T> {
    /// MRFM-style cantilever at 2 MHz, a 1 µm² loop and `E_J = 5×10⁹ rad/s`,
    /// with a field gradient of 10⁷ T/m and `z0 = 5×10⁻¹³ m`.
    pub fn reference() -> Self {
        let omega = 2.0 * std::f64::consts::PI * 2.0e6;
        let z0 = 5.0e-13;
        Self {
            tip_moment: real(1.0e-13),
            tip_distance: real(50.0e-9),
            loop_area: real(1.0e-12),
            josephson_energy: real(5.0e9),
            charging_energy: real(2.0 * std::f64::consts::PI * 5.0e9),
            gate_charge: real(0.5),
            external_field: T::zero(),
            cantilever_freq: real(omega),
            cantilever_mass: real(HBAR_SI / (2.0 * omega * z0 * z0)),
            mu0: real(MU0),
            flux_quantum: real(FLUX_QUANTUM),
            gradient_override: Some(GradientOverride {
                gradient: real(1.0e7),
                z0: real(z0),
            }),
        }
    }

    fn validate(&self) -> Result<()> {
        let checks = [
            (self.tip_distance, "tip_distance"),
            (self.loop_area, "loop_area"),
            (self.cantilever_freq, "cantilever_freq"),
            (self.cantilever_mass, "cantilever_mass"),
            (self.flux_quantum, "flux_quantum"),
        ];
        for (v, name) in checks {
            if !(v > T::zero()) || !to_f64(v).is_finite() {
                return Err(Error::InvalidDevice(format!("{name} must be positive")));
            }
        }
        if let Some(o) = self.gradient_override {
            if !(o.z0 > T::zero()) {
                return Err(Error::InvalidDevice("override z0 must be positive".into()));
            }
            if !to_f64(o.gradient).is_finite() {
                return Err(Error::InvalidDevice("override gradient not finite".into()));
            }
        }
        Ok(())
    }
}

/// Derived coupling constants. `b0`, `c` and `z0` are SI; the rest are
/// phases (rad) or angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSet<T: Real> {
    pub b0: T,
    pub c: T,
    pub z0: T,
    pub phi0: T,
    pub phi: T,
    pub omega0: T,
    pub e_j: T,
    pub g: T,
    pub g_prime: T,
}

impl<T: Real> CouplingSet<T> {
    /// Couplings from the flux parameters alone (geometry fields zero).
    pub fn from_flux(e_j: T, phi0: T, phi: T, omega0: T) -> Self {
        Self {
            b0: T::zero(),
            c: T::zero(),
            z0: T::zero(),
            phi0,
            phi,
            omega0,
            e_j,
            g: e_j * phi,
            g_prime: e_j * phi * phi * real::<T>(0.5),
        }
    }

    /// Only the quadratic coupling is set; enough for the conditional
    /// Hamiltonians and everything built from them.
    pub fn nonlinear(g_prime: T) -> Self {
        Self {
            b0: T::zero(),
            c: T::zero(),
            z0: T::zero(),
            phi0: T::zero(),
            phi: T::zero(),
            omega0: T::zero(),
            e_j: T::zero(),
            g: T::zero(),
            g_prime,
        }
    }
}

pub fn derive_couplings<T: Real>(dev: &DeviceParams<T>) -> Result<CouplingSet<T>> {
    dev.validate()?;
    let two_pi = T::two_pi();
    let r = dev.tip_distance;
    let b0 = dev.mu0 * dev.tip_moment / (two_pi * r * r * r);
    let (c, z0) = match dev.gradient_override {
        Some(o) => (o.gradient, o.z0),
        None => {
            let z0 = (real::<T>(HBAR_SI)
                / (real::<T>(2.0) * dev.cantilever_mass * dev.cantilever_freq))
                .sqrt();
            (real::<T>(3.0) * b0 / r, z0)
        }
    };
    let pi = T::pi();
    let phi0 = pi * dev.loop_area * (b0 + dev.external_field) / dev.flux_quantum;
    let phi = -pi * dev.loop_area * c * z0 / dev.flux_quantum;
    let omega0 = real::<T>(8.0) * dev.charging_energy * (dev.gate_charge - real(0.5));
    let e_j = dev.josephson_energy;
    Ok(CouplingSet {
        b0,
        c,
        z0,
        phi0,
        phi,
        omega0,
        e_j,
        g: e_j * phi,
        g_prime: e_j * phi * phi * real::<T>(0.5),
    })
}

fn qubit_part<T: Real>(omega0: T, dim: usize) -> Operator<T> {
    pauli_z::<T>()
        .scale_real(omega0 * real::<T>(0.5))
        .kron(&Operator::identity(dim))
}

fn oscillator_part<T: Real>(omega: T, dim: usize) -> Result<Operator<T>> {
    let n = ladder_ops::<T>(dim)?.n;
    Ok(Operator::identity(2).kron(&n.scale_real(omega)))
}

/// `(ω0/2)σz + ω a†a − E_J cos[φ0 + φ(a†+a)] σx` with the operator cosine
/// taken through the spectrum of the truncated quadrature.
pub fn build_full_hamiltonian<T: Real>(
    cs: &CouplingSet<T>,
    omega: T,
    dim: usize,
) -> Result<Operator<T>> {
    let x = quadrature::<T>(dim)?;
    let cosine = x.hermitian_map(|v| cre((cs.phi0 + cs.phi * v).cos()));
    let coupling = pauli_x::<T>().kron(&cosine.scale_real(-cs.e_j));
    Ok(&(&qubit_part(cs.omega0, dim) + &oscillator_part(omega, dim)?) + &coupling)
}

/// `(ω0/2)σz + ω a†a + g(a†+a)σx`
pub fn build_linear<T: Real>(cs: &CouplingSet<T>, omega: T, dim: usize) -> Result<Operator<T>> {
    let x = quadrature::<T>(dim)?;
    let coupling = pauli_x::<T>().kron(&x.scale_real(cs.g));
    Ok(&(&qubit_part(cs.omega0, dim) + &oscillator_part(omega, dim)?) + &coupling)
}

/// `ω a†a + (ω0/2)σz − E_J σx − g′(a†+a)² σx`
pub fn build_nonlinear<T: Real>(
    cs: &CouplingSet<T>,
    omega: T,
    dim: usize,
) -> Result<Operator<T>> {
    let x = quadrature::<T>(dim)?;
    let x2 = &x * &x;
    let inner = &Operator::identity(dim).scale_real(-cs.e_j) - &x2.scale_real(cs.g_prime);
    let coupling = pauli_x::<T>().kron(&inner);
    Ok(&(&qubit_part(cs.omega0, dim) + &oscillator_part(omega, dim)?) + &coupling)
}

/// Displaced oscillator `ω a†a + g_s(a† + a)` on the cantilever alone.
pub fn build_dho<T: Real>(g_s: T, omega: T, dim: usize) -> Result<Operator<T>> {
    let l = ladder_ops::<T>(dim)?;
    Ok(&l.n.scale_real(omega) + &(&l.a + &l.adag).scale_real(g_s))
}

/// Qubit branch selected by the `σx` eigenvalue `k = ±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> i32 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }

    pub fn from_sign(k: i32) -> Option<Self> {
        match k {
            1 => Some(Branch::Plus),
            -1 => Some(Branch::Minus),
            _ => None,
        }
    }

    fn signf<T: Real>(self) -> T {
        real(self.sign() as f64)
    }
}

/// `(ω_k, g_k)` with `g_k = −k g′` and `ω_k = ω + 2 g_k`.
pub fn conditional_frequencies<T: Real>(k: Branch, g_prime: T, omega: T) -> (T, T) {
    let g_k = -k.signf::<T>() * g_prime;
    (omega + real::<T>(2.0) * g_k, g_k)
}

/// `H_k = ω_k a†a + g_k(a†² + a²)`
pub fn build_conditional<T: Real>(
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
    dim: usize,
) -> Result<Operator<T>> {
    let (omega_k, g_k) = conditional_frequencies(k, cs.g_prime, omega);
    let l = ladder_ops::<T>(dim)?;
    let pair = &(&l.a * &l.a) + &(&l.adag * &l.adag);
    Ok(&l.n.scale_real(omega_k) + &pair.scale_real(g_k))
}

/// Bogoliubov constants of a conditional Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalSpec<T: Real> {
    pub k: Branch,
    pub omega_k: T,
    pub g_k: T,
    pub lambda_k: T,
    pub big_omega_k: T,
    pub c_k: T,
}

pub fn diagonalize_conditional<T: Real>(
    k: Branch,
    cs: &CouplingSet<T>,
    omega: T,
) -> Result<ConditionalSpec<T>> {
    let (omega_k, g_k) = conditional_frequencies(k, cs.g_prime, omega);
    let two = real::<T>(2.0);
    let disc = omega_k * omega_k - real::<T>(4.0) * g_k * g_k;
    if !(disc > T::zero()) {
        return Err(Error::InstabilityRegime {
            omega_k: to_f64(omega_k),
            g_k: to_f64(g_k),
        });
    }
    let lambda_k = (two * g_k / omega_k).atanh() * real::<T>(0.25);
    let big_omega_k = disc.sqrt();
    let s2 = (two * lambda_k).sinh();
    let c_k = omega_k * s2 * s2 - g_k * (two * two * lambda_k).sinh();
    Ok(ConditionalSpec {
        k,
        omega_k,
        g_k,
        lambda_k,
        big_omega_k,
        c_k,
    })
}

/// Multiplies a Hamiltonian by `−it` through its spectrum: `exp(−iHt)`.
pub fn propagator<T: Real>(h: &Operator<T>, t: T) -> Operator<T> {
    h.hermitian_map(|e| {
        let p = -e * t;
        Complex::new(p.cos(), p.sin())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::two_photon_op;
    use std::f64::consts::PI;

    fn sigma_x_rotation(dim: usize) -> Operator<f64> {
        // columns |+⟩ ⊗ |n⟩ then |−⟩ ⊗ |n⟩
        let h = 0.5f64.sqrt();
        let had = Operator::from_fn(2, |r, c| {
            cre(if r == 1 && c == 1 { -h } else { h })
        });
        had.kron(&Operator::identity(dim))
    }

    #[test]
    fn reference_device_couplings() {
        let cs = derive_couplings(&DeviceParams::<f64>::reference()).unwrap();
        let phi_ref = -2.4e-3 * PI;
        assert!(((cs.phi - phi_ref) / phi_ref).abs() < 0.02, "{}", cs.phi);
        let g_ref = -2.0 * PI * 6.0e6;
        assert!(((cs.g - g_ref) / g_ref).abs() < 0.05, "{}", cs.g);
        let gp_ref = 2.0 * PI * 23.0e3;
        assert!(((cs.g_prime - gp_ref) / gp_ref).abs() < 0.05, "{}", cs.g_prime);
        assert!((cs.g_prime / cs.g.abs() - cs.phi.abs() / 2.0).abs() < 1e-15);
        assert_eq!(cs.omega0, 0.0);
    }

    #[test]
    fn geometric_path() {
        let mut dev = DeviceParams::<f64>::reference();
        dev.gradient_override = None;
        let cs = derive_couplings(&dev).unwrap();
        let r = dev.tip_distance;
        assert!((cs.b0 - MU0 * dev.tip_moment / (2.0 * PI * r.powi(3))).abs() < 1e-18);
        assert!((cs.c - 3.0 * cs.b0 / r).abs() < 1e-9 * cs.c.abs());
        assert!((cs.z0 - 5.0e-13).abs() < 1e-22);
        assert!((cs.g_prime / cs.g.abs() - cs.phi.abs() / 2.0).abs() < 1e-15);

        dev.tip_distance = 0.0;
        assert!(matches!(derive_couplings(&dev), Err(Error::InvalidDevice(_))));
    }

    #[test]
    fn full_decouples_without_flux_modulation() {
        let cs = CouplingSet::from_flux(2.0, 0.0, 0.0, 0.3);
        let h = build_full_hamiltonian(&cs, 1.0, 10).unwrap();
        let want = &(&qubit_part(0.3, 10) + &oscillator_part(1.0, 10).unwrap())
            + &pauli_x::<f64>().kron(&Operator::identity(10)).scale_real(-2.0);
        assert!(h.max_abs_diff(&want) < 1e-12);
        assert!(h.hermiticity_error() < 1e-12);
    }

    #[test]
    fn linear_block_diagonal_in_sigma_x_basis() {
        let dim = 20;
        let cs = CouplingSet::from_flux(1.0, PI / 2.0, 0.4, 0.0);
        let h = build_linear(&cs, 1.0, dim).unwrap();
        assert!(h.hermiticity_error() < 1e-12);
        let u = sigma_x_rotation(dim);
        let rot = &(&u.adjoint() * &h) * &u;
        let mut off = 0.0f64;
        for r in 0..dim {
            for c in dim..2 * dim {
                off = off.max(rot.get(r, c).norm()).max(rot.get(c, r).norm());
            }
        }
        assert!(off < 1e-12);
        let plus = build_dho(cs.g, 1.0, dim).unwrap();
        let minus = build_dho(-cs.g, 1.0, dim).unwrap();
        for r in 0..dim {
            for c in 0..dim {
                assert!((rot.get(r, c) - plus.get(r, c)).norm() < 1e-12);
                assert!((rot.get(r + dim, c + dim) - minus.get(r, c)).norm() < 1e-12);
            }
        }

        let zero = CouplingSet::from_flux(0.0, PI / 2.0, 0.0, 0.7);
        let h = build_linear(&zero, 1.3, 6).unwrap();
        let want = &qubit_part(0.7, 6) + &oscillator_part(1.3, 6).unwrap();
        assert!(h.max_abs_diff(&want) < 1e-15);
    }

    fn diff_norm(a: &Operator<f64>, b: &Operator<f64>, half: usize) -> f64 {
        // qubit blocks restricted to the lower half of the Fock basis
        let dim = a.dim() / 2;
        let mut idx: Vec<usize> = (0..half).collect();
        idx.extend((0..half).map(|n| n + dim));
        let d = a - b;
        Operator::from_fn(idx.len(), |r, c| d.get(idx[r], idx[c])).spectral_norm()
    }

    #[test]
    fn linear_matches_full_with_cubic_remainder() {
        let dim = 60;
        let e_j = 3.0;
        let phi = -2.4e-3 * PI;
        let x_radius = quadrature::<f64>(dim).unwrap().spectral_norm();
        let disc = |phi: f64| {
            let cs = CouplingSet::from_flux(e_j, PI / 2.0, phi, 0.0);
            let full = build_full_hamiltonian(&cs, 1.0, dim).unwrap();
            let lin = build_linear(&cs, 1.0, dim).unwrap();
            let whole = (&full - &lin).spectral_norm();
            assert!(whole <= e_j * phi.abs().powi(3) * x_radius.powi(3) / 6.0 * (1.0 + 1e-9));
            diff_norm(&full, &lin, dim / 2)
        };
        let d1 = disc(phi);
        let d2 = disc(phi / 2.0);
        let ratio = d1 / d2;
        assert!((ratio - 8.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn nonlinear_block_reduction() {
        let dim = 24;
        let cs = CouplingSet::from_flux(5.0, 0.0, 0.1, 0.0);
        let omega = 1.0;
        let h = build_nonlinear(&cs, omega, dim).unwrap();
        assert!(h.hermiticity_error() < 1e-12);
        let u = sigma_x_rotation(dim);
        let rot = &(&u.adjoint() * &h) * &u;
        for (offset, k) in [(0, Branch::Plus), (dim, Branch::Minus)] {
            let hk = build_conditional(k, &cs, omega, dim).unwrap();
            let shift = -(k.sign() as f64) * (cs.e_j + cs.g_prime);
            for r in 0..dim {
                for c in 0..dim {
                    if r == dim - 1 && c == dim - 1 {
                        continue; // truncated aa† corner
                    }
                    let want = hk.get(r, c) + cre(if r == c { shift } else { 0.0 });
                    assert!((rot.get(r + offset, c + offset) - want).norm() < 1e-12);
                    let other = if offset == 0 { dim } else { 0 };
                    assert!(rot.get(r + offset, c + other).norm() < 1e-12);
                }
            }
        }
        let zero = CouplingSet::from_flux(0.0, 0.0, 0.0, 0.2);
        let h = build_nonlinear(&zero, 1.0, 6).unwrap();
        let want = &qubit_part(0.2, 6) + &oscillator_part(1.0, 6).unwrap();
        assert!(h.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn nonlinear_quartic_scaling_against_full() {
        let dim = 60;
        let e_j = 3.0;
        let x = quadrature::<f64>(dim).unwrap();
        let x2 = &x * &x;
        let x_radius = x.spectral_norm();
        let disc = |phi: f64| {
            let cs = CouplingSet::from_flux(e_j, 0.0, phi, 0.0);
            let full = build_full_hamiltonian(&cs, 1.0, dim).unwrap();
            let printed = build_nonlinear(&cs, 1.0, dim).unwrap();
            // printed form differs from the cosine expansion by 2g′X²σx
            let gap = pauli_x::<f64>().kron(&x2.scale_real(2.0 * cs.g_prime));
            let bound = e_j * phi.powi(4) * x_radius.powi(4) / 24.0;
            assert!((&(&full - &printed) - &gap).spectral_norm() <= bound * (1.0 + 1e-6));
            let expanded = &printed + &gap;
            diff_norm(&full, &expanded, dim / 2)
        };
        let phi = -2.4e-3 * PI;
        let ratio = disc(phi) / disc(phi / 2.0);
        assert!((ratio - 16.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn conditional_definitions() {
        let cs = CouplingSet::<f64>::nonlinear(0.0115);
        let (wk, gk) = conditional_frequencies(Branch::Minus, cs.g_prime, 1.0);
        assert!((gk - 0.0115).abs() < 1e-15);
        assert!((wk - 1.023).abs() < 1e-15);
        let h0 = build_conditional(Branch::Plus, &CouplingSet::nonlinear(0.0), 1.0, 8).unwrap();
        assert!(h0.max_abs_diff(&ladder_ops::<f64>(8).unwrap().n) < 1e-15);
    }

    #[test]
    fn conditional_spectrum() {
        let cs = CouplingSet::nonlinear(0.0115);
        for k in [Branch::Plus, Branch::Minus] {
            let spec = diagonalize_conditional(k, &cs, 1.0).unwrap();
            let h = build_conditional(k, &cs, 1.0, 80).unwrap();
            assert!(h.hermiticity_error() < 1e-12);
            let (vals, _) = h.eigh();
            for (n, v) in vals.iter().take(20).enumerate() {
                let want = n as f64 * spec.big_omega_k + spec.c_k;
                assert!((v - want).abs() < 1e-8, "{k:?} level {n}: {v} vs {want}");
            }
            assert!((spec.c_k - (spec.big_omega_k - spec.omega_k) / 2.0).abs() < 1e-14);
        }
        let m = diagonalize_conditional(Branch::Minus, &cs, 1.0).unwrap();
        assert!((m.big_omega_k - (1.023f64.powi(2) - 4.0 * 0.0115f64.powi(2)).sqrt()).abs() < 1e-14);
        assert!((m.big_omega_k - 1.02274).abs() < 1e-5);
    }

    #[test]
    fn diagonalize_trivial_and_unstable() {
        let s = diagonalize_conditional(Branch::Plus, &CouplingSet::nonlinear(0.0), 2.0).unwrap();
        assert_eq!(s.lambda_k, 0.0);
        assert_eq!(s.big_omega_k, 2.0);
        assert_eq!(s.c_k, 0.0);
        // k = −1: ω_k = ω + 2g′ = 2g_k  ⇔  ω = 0
        assert!(matches!(
            diagonalize_conditional(Branch::Minus, &CouplingSet::nonlinear(0.25), 0.0),
            Err(Error::InstabilityRegime { .. })
        ));
        // k = +1: ω_k = ω − 2g′, g_k = −g′; ω_k² ≤ 4g_k² for g′ ≥ ω/4
        assert!(matches!(
            diagonalize_conditional(Branch::Plus, &CouplingSet::nonlinear(0.25), 1.0),
            Err(Error::InstabilityRegime { .. })
        ));
    }

    #[test]
    fn bogoliubov_round_trip() {
        let dim = 60;
        let cs = CouplingSet::nonlinear(0.0115);
        for k in [Branch::Plus, Branch::Minus] {
            let spec = diagonalize_conditional(k, &cs, 1.0).unwrap();
            let h = build_conditional(k, &cs, 1.0, dim).unwrap();
            let u = two_photon_op(spec.lambda_k, dim).unwrap();
            let t = &(&u * &h) * &u.adjoint();
            let n = ladder_ops::<f64>(dim).unwrap().n;
            let want = &n.scale_real(spec.big_omega_k) + &Operator::identity(dim).scale_real(spec.c_k);
            for r in 0..dim / 2 {
                for c in 0..dim / 2 {
                    assert!((t.get(r, c) - want.get(r, c)).norm() < 1e-9, "{k:?} ({r},{c})");
                }
            }
        }
    }
}
