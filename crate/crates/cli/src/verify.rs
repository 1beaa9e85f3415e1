//! Cross-check suite: every closed form against an independent brute-force
//! route at one parameter profile.

use cantilever::closedform::{bch_factorize, bch_operator, dissipative_cat, realize, wigner_analytic, CatRecord};
use cantilever::hilbert::{fidelity, ladder_ops, wigner_numeric, Operator};
use cantilever::lindblad::{
    evolve_master_at, evolve_moments_at, steady_moments, steady_moments_solve, transform_check_runs,
    BathParams, MomentVector, RunReport,
};
use cantilever::model::{build_conditional, build_dho, Branch, CouplingSet};
use num_complex::Complex64 as C;
use rand::{rngs::StdRng, Rng, SeedableRng};

use crate::config::Config;
use crate::{CliError, Globals};

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of the interference phase in the analytic Wigner function.
    WignerSign,
}

struct Profile {
    dim: usize,
    tol: f64,
    beta: f64,
    omega: f64,
    gamma: f64,
    g_s: f64,
    g_prime: f64,
    temperature: f64,
    bch_draws: usize,
    seed: u64,
    times: Vec<f64>,
}

impl Profile {
    fn read(g: &Globals, cfg: &mut Config) -> Result<Self, CliError> {
        let dim = cfg.usize("dim", 40)?;
        let tol = cfg.f64("tol", 1e-9)?;
        let p = Self {
            dim: g.dim.unwrap_or(dim),
            tol: g.tol.unwrap_or(tol),
            beta: cfg.f64("beta", 1.2)?,
            omega: cfg.f64("omega", 1.0)?,
            gamma: cfg.f64("gamma", 0.2)?,
            g_s: cfg.f64("g_s", -0.4)?,
            g_prime: cfg.f64("g_prime", 0.0115)?,
            temperature: cfg.f64("temperature", 0.5)?,
            bch_draws: cfg.usize("bch_draws", 20)?,
            seed: cfg.usize("seed", 20)? as u64,
            times: cfg.list("times", &[0.5, 2.0, 5.0])?,
        };
        cfg.finish()?;
        if p.dim < 2 {
            return Err(CliError::Config(format!("dim {}: need at least 2 levels", p.dim)));
        }
        if !(p.tol > 0.0) {
            return Err(CliError::Config(format!("tol {}: must be positive", p.tol)));
        }
        if !(p.omega > 0.0) {
            return Err(CliError::Config("`omega` must be positive".into()));
        }
        if !(p.gamma > 0.0) {
            return Err(CliError::Config("`gamma` must be positive".into()));
        }
        if p.temperature < 0.0 {
            return Err(CliError::Config("`temperature` must be non-negative".into()));
        }
        if p.times.is_empty() {
            return Err(CliError::Config("empty time list".into()));
        }
        Ok(p)
    }

    fn cat(&self, t: f64) -> Result<CatRecord<f64>, CliError> {
        Ok(dissipative_cat(C::new(self.beta, 0.0), 0.0, self.g_s, self.omega, self.gamma, t)?)
    }
}

struct Suite {
    failures: Vec<&'static str>,
    reports: Vec<RunReport>,
}

impl Suite {
    fn record(&mut self, name: &'static str, pass: bool, detail: String) {
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures.push(name);
        }
    }
}

pub fn run(g: &Globals, mut cfg: Config, fault: Option<Fault>) -> Result<(), CliError> {
    let p = Profile::read(g, &mut cfg)?;
    let mut s = Suite {
        failures: Vec::new(),
        reports: Vec::new(),
    };
    cat_vs_master(&p, &mut s)?;
    wigner(&p, fault, &mut s)?;
    frame(&p, &mut s)?;
    bch(&p, &mut s)?;
    moments(&p, &mut s)?;
    steady(&p, &mut s)?;

    let drift = s.reports.iter().map(|r| r.max_trace_drift).fold(0.0, f64::max);
    let herm = s.reports.iter().map(|r| r.max_hermiticity_error).fold(0.0, f64::max);
    let eig = s.reports.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min);
    s.record(
        "master-equation invariants",
        drift < 1e-9 && herm < 1e-10 && eig >= -1e-7,
        format!("{} runs, trace drift {drift:.2e}, hermiticity {herm:.2e}, min eigenvalue {eig:.2e}", s.reports.len()),
    );

    if s.failures.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Verify(s.failures.join(", ")))
    }
}

fn cat_vs_master(p: &Profile, s: &mut Suite) -> Result<(), CliError> {
    let rho0 = realize(&p.cat(0.0)?, p.dim)?;
    let run = evolve_master_at(
        &build_dho(p.g_s, p.omega, p.dim)?,
        &rho0,
        &BathParams::zero_temperature(p.gamma)?,
        &p.times,
        p.tol,
    )?;
    let mut worst: f64 = 1.0;
    for (&t, rho) in p.times.iter().zip(&run.states) {
        worst = worst.min(fidelity(&realize(&p.cat(t)?, p.dim)?, rho)?);
    }
    s.reports.push(run.report);
    s.record("closed-form cat vs master equation", worst > 1.0 - 1e-6, format!("min fidelity {worst:.10}"));
    Ok(())
}

fn wigner(p: &Profile, fault: Option<Fault>, s: &mut Suite) -> Result<(), CliError> {
    let mut worst: f64 = 0.0;
    for &t in std::iter::once(&0.0).chain(&p.times) {
        let cat = p.cat(t)?;
        let rho = realize(&cat, p.dim)?;
        let mut analytic = cat;
        if fault == Some(Fault::WignerSign) {
            analytic.delta_i = -analytic.delta_i;
        }
        for i in 0..=16 {
            for j in 0..=16 {
                let xi = C::new(-4.0 + 0.5 * i as f64, -4.0 + 0.5 * j as f64);
                worst = worst.max((wigner_analytic(&analytic, xi) - wigner_numeric(&rho, xi)?).abs());
            }
        }
    }
    s.record("analytic vs numeric Wigner", worst < 1e-6, format!("max difference {worst:.2e}"));
    Ok(())
}

fn frame(p: &Profile, s: &mut Suite) -> Result<(), CliError> {
    let rho0 = realize(&dissipative_cat(C::new(p.beta, 0.0), 0.0, 0.0, p.omega, 0.0, 0.0)?, p.dim)?;
    let mut worst: f64 = 0.0;
    for temp in [0.0, p.temperature] {
        let bath = BathParams::new(p.gamma, temp, p.omega)?;
        let (d, reps) = transform_check_runs(&rho0, p.g_s, p.omega, &bath, &p.times, p.tol)?;
        worst = d.iter().fold(worst, |m, &x| m.max(x));
        s.reports.extend(reps);
    }
    s.record("rotating-frame equivalence", worst < 1e-5, format!("max trace distance {worst:.2e}"));
    Ok(())
}

fn bch(p: &Profile, s: &mut Suite) -> Result<(), CliError> {
    let mut rng = StdRng::seed_from_u64(p.seed);
    let (dim, block) = (80, 20);
    let l = ladder_ops::<f64>(dim)?;
    let mut worst: f64 = 0.0;
    for draw in 0..p.bch_draws {
        let t = rng.gen_range(0.1..2.0);
        let b1 = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let b2 = if draw < 2 {
            C::new(rng.gen_range(-5e-9..5e-9), 0.0)
        } else {
            C::new(rng.gen_range(-2.0..2.0), 0.0)
        };
        let b3 = b1.conj();
        let theta = C::new(0.0, -t);
        let gen: Operator<f64> = &(&l.a.scale(b1) + &l.n.scale(b2)) + &l.adag.scale(b3);
        let dense = gen.scale(theta).exp();
        let prod = bch_operator(&bch_factorize(theta, b1, b2, b3), dim)?;
        worst = worst.max((&dense - &prod).block(block).spectral_norm());
    }
    s.record(
        "BCH factorization vs matrix exponential",
        worst < 1e-9,
        format!("{} draws, max deviation {worst:.2e}", p.bch_draws),
    );
    Ok(())
}

fn moments(p: &Profile, s: &mut Suite) -> Result<(), CliError> {
    let cs = CouplingSet::nonlinear(p.g_prime);
    let bath = BathParams::new(p.gamma, p.temperature, p.omega)?;
    let mut worst: f64 = 0.0;
    for k in [Branch::Minus, Branch::Plus] {
        let rho0 = realize(&p.cat(0.0)?, p.dim)?;
        let m0 = MomentVector::from_density(&rho0)?;
        let dense = evolve_master_at(&build_conditional(k, &cs, p.omega, p.dim)?, &rho0, &bath, &p.times, p.tol)?;
        let flow = evolve_moments_at(&m0, k, &cs, p.omega, &bath, &p.times, p.tol)?;
        for (rho, m) in dense.states.iter().zip(&flow) {
            worst = worst.max(MomentVector::from_density(rho)?.max_abs_diff(m));
        }
        s.reports.push(dense.report);
    }
    s.record("moment equations vs dense evolution", worst < 1e-6, format!("max deviation {worst:.2e}"));
    Ok(())
}

fn steady(p: &Profile, s: &mut Suite) -> Result<(), CliError> {
    let cs = CouplingSet::nonlinear(p.g_prime);
    let mut worst: f64 = 0.0;
    for k in [Branch::Minus, Branch::Plus] {
        for temp in [0.0, p.temperature] {
            let bath = BathParams::new(p.gamma, temp, p.omega)?;
            let a = steady_moments(k, &cs, p.omega, &bath)?;
            let b = steady_moments_solve(k, &cs, p.omega, &bath)?;
            worst = worst.max(a.max_abs_diff(&b));
        }
    }
    s.record("steady moments vs linear solve", worst < 1e-12, format!("max deviation {worst:.2e}"));
    Ok(())
}
