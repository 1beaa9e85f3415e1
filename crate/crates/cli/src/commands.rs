use cantilever::closedform::{
    cdho_evolve, cdho_initial, cdho_state, dissipative_cat, measure_cat, realize, unitary_variance,
    wigner_analytic, BranchPair, CatRecord,
};
use cantilever::hilbert::{fidelity, wigner_numeric};
use cantilever::lindblad::{
    critical_temperature, evolve_master_at, evolve_moments_at, position_variance,
    steady_crossing_temperature, steady_variance, BathParams, MomentVector,
};
use cantilever::model::{
    build_dho, build_linear, derive_couplings, diagonalize_conditional, propagator, Branch,
    CouplingSet, DeviceParams, GradientOverride,
};
use cantilever::scalar::safe_dim;
use num_complex::Complex64 as C;

use crate::config::Config;
use crate::output::{grid, header, write_csv};
use crate::{CliError, Globals};

const DEFAULT_TIMES: [f64; 6] = [0.0, 0.06, 0.5, 0.1, 1.5, 20.0];

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("`{name}` must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("`{name}` must be non-negative, got {v}")))
    }
}

fn branch(k: i32) -> Result<Branch, CliError> {
    Branch::from_sign(k).ok_or_else(|| CliError::Config(format!("`k` must be +1 or -1, got {k}")))
}

fn dim_override(g: &Globals, cfg: &mut Config) -> Result<Option<usize>, CliError> {
    let d = match g.dim {
        Some(d) => {
            cfg.opt_usize("dim")?;
            Some(d)
        }
        None => cfg.opt_usize("dim")?,
    };
    if let Some(d) = d {
        if d < 2 {
            return Err(CliError::Config(format!("dim {d}: need at least 2 levels")));
        }
    }
    Ok(d)
}

fn tolerance(g: &Globals, cfg: &mut Config, default: f64) -> Result<f64, CliError> {
    let t = cfg.f64("tol", default)?;
    positive("tol", g.tol.unwrap_or(t))
}

/// Truncation that resolves every label in `cats`: 60 levels when they fit,
/// otherwise at least 150.
pub fn cat_dim(cats: &[CatRecord<f64>]) -> usize {
    let r = cats.iter().map(|c| c.max_label()).fold(0.0, f64::max);
    let need = safe_dim(r);
    if need <= 60 {
        60
    } else {
        need.max(150)
    }
}

struct CatScenario {
    omega: f64,
    gamma: f64,
    g_s: f64,
    beta: C,
    phi_rel: f64,
}

impl CatScenario {
    fn read(cfg: &mut Config) -> Result<Self, CliError> {
        let s = Self {
            omega: cfg.f64("omega", 100.0)?,
            gamma: non_negative("gamma", cfg.f64("gamma", 1.0)?)?,
            g_s: cfg.f64("g_s", -300.0)?,
            beta: C::new(cfg.f64("beta", 3.0)?, cfg.f64("beta_im", 0.0)?),
            phi_rel: cfg.f64("phi_rel", 0.0)?,
        };
        if s.omega == 0.0 {
            return Err(CliError::Config("`omega` must be non-zero".into()));
        }
        Ok(s)
    }

    fn at(&self, t: f64) -> Result<CatRecord<f64>, CliError> {
        Ok(dissipative_cat(self.beta, self.phi_rel, self.g_s, self.omega, self.gamma, t)?)
    }

    /// Labels sampled finely enough to catch their largest excursion up to `t`.
    fn path(&self, t: f64) -> Result<Vec<CatRecord<f64>>, CliError> {
        let period = 2.0 * std::f64::consts::PI / self.omega.abs();
        let n = ((t / period) * 64.0).ceil().clamp(1.0, 1e6) as usize;
        (0..=n).map(|i| self.at(t * i as f64 / n as f64)).collect()
    }
}

pub fn wigner(g: &Globals, mut cfg: Config, numeric: bool, sorted: bool) -> Result<(), CliError> {
    let name = cfg.string("name", "wigner");
    let sc = CatScenario::read(&mut cfg)?;
    let mut times = cfg.list("times", &DEFAULT_TIMES)?;
    let (x0, x1) = (cfg.f64("x_min", -5.0)?, cfg.f64("x_max", 5.0)?);
    let (y0, y1) = (cfg.f64("y_min", -5.0)?, cfg.f64("y_max", 5.0)?);
    let step = positive("step", cfg.f64("step", 0.05)?)?;
    let dim = dim_override(g, &mut cfg)?;
    cfg.finish()?;
    if times.is_empty() {
        return Err(CliError::Config("empty time list".into()));
    }
    if let Some(t) = times.iter().find(|t| **t < 0.0) {
        return Err(CliError::Config(format!("negative time {t}")));
    }
    if !(x1 > x0 && y1 > y0) {
        return Err(CliError::Config("grid needs x_max > x_min and y_max > y_min".into()));
    }
    if sorted {
        times.sort_by(f64::total_cmp);
    }
    let xs = grid(x0, x1, step);
    let ys = grid(y0, y1, step);
    let mut cols = vec!["gamma_t", "x", "y", "W"];
    if numeric {
        cols.push("W_numeric");
    }
    let mut rows = Vec::with_capacity(times.len() * xs.len() * ys.len());
    for &t in &times {
        let cat = sc.at(if sc.gamma > 0.0 { t / sc.gamma } else { t })?;
        let rho = if numeric {
            Some(realize(&cat, dim.unwrap_or_else(|| cat_dim(&[cat])))?)
        } else {
            None
        };
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for &x in &xs {
            for &y in &ys {
                let xi = C::new(x, y);
                let w = wigner_analytic(&cat, xi);
                if w > best.0 {
                    best = (w, x, y);
                }
                let mut row = vec![t, x, y, w];
                if let Some(r) = &rho {
                    row.push(wigner_numeric(r, xi)?);
                }
                rows.push(row);
            }
        }
        println!("gamma t = {t}: max W = {:.6} at ({:.4}, {:.4})", best.0, best.1, best.2);
    }
    write_csv(&g.out, &name, &header(&cols), &rows)?;
    Ok(())
}

pub fn cat_evolve(g: &Globals, mut cfg: Config, numeric: bool) -> Result<(), CliError> {
    let mode = cfg.string("mode", "dissipative");
    match mode.as_str() {
        "dissipative" => cat_evolve_dissipative(g, cfg, numeric),
        "measured" => cat_evolve_measured(g, cfg, numeric),
        other => Err(CliError::Config(format!(
            "`mode` must be `dissipative` or `measured`, got `{other}`"
        ))),
    }
}

fn cat_evolve_dissipative(g: &Globals, mut cfg: Config, numeric: bool) -> Result<(), CliError> {
    let name = cfg.string("name", "cat_evolve");
    let sc = CatScenario::read(&mut cfg)?;
    let t_max = non_negative("t_max", cfg.f64("t_max", 1.5)?)?;
    let t_step = positive("t_step", cfg.f64("t_step", 0.05)?)?;
    let dim = dim_override(g, &mut cfg)?;
    let tol = tolerance(g, &mut cfg, 1e-8)?;
    cfg.finish()?;
    let times = grid(0.0, t_max, t_step);
    let cats: Vec<CatRecord<f64>> = times.iter().map(|&t| sc.at(t)).collect::<Result<_, _>>()?;
    let mut cols = vec![
        "t", "beta_plus_re", "beta_plus_im", "beta_minus_re", "beta_minus_im", "alpha_re",
        "alpha_im", "delta_r", "delta_i", "coherence_abs", "mean_a_re", "mean_a_im",
    ];
    let mut fid = Vec::new();
    if numeric {
        cols.push("fidelity_master");
        let d = dim.unwrap_or(cat_dim(&sc.path(t_max)?));
        let rho0 = realize(&cats[0], d)?;
        let bath = BathParams::zero_temperature(sc.gamma)?;
        let run = evolve_master_at(&build_dho(sc.g_s, sc.omega, d)?, &rho0, &bath, &times, tol)?;
        for (cat, rho) in cats.iter().zip(&run.states) {
            fid.push(fidelity(&realize(cat, d)?, rho)?);
        }
        println!(
            "dim {d}: {} steps, trace drift {:.2e}, min eigenvalue {:.2e}",
            run.report.ode.accepted, run.report.max_trace_drift, run.report.min_eigenvalue
        );
    }
    let rows: Vec<Vec<f64>> = times
        .iter()
        .zip(&cats)
        .enumerate()
        .map(|(i, (&t, c))| {
            let m = c.mean_a();
            let mut row = vec![
                t,
                c.beta_plus.re,
                c.beta_plus.im,
                c.beta_minus.re,
                c.beta_minus.im,
                c.alpha.re,
                c.alpha.im,
                c.delta_r,
                c.delta_i,
                c.delta_r.exp(),
                m.re,
                m.im,
            ];
            if numeric {
                row.push(fid[i]);
            }
            row
        })
        .collect();
    write_csv(&g.out, &name, &header(&cols), &rows)?;
    Ok(())
}

fn cat_evolve_measured(g: &Globals, mut cfg: Config, numeric: bool) -> Result<(), CliError> {
    let name = cfg.string("name", "cat_measured");
    let omega = cfg.f64("omega", 1.0)?;
    let coupling = cfg.f64("g", -3.0)?;
    let alpha_i = C::new(cfg.f64("alpha_i", 0.0)?, cfg.f64("alpha_i_im", 0.0)?);
    let t_max = non_negative("t_max", cfg.f64("t_max", 2.0 * std::f64::consts::PI)?)?;
    let t_step = positive("t_step", cfg.f64("t_step", std::f64::consts::PI / 50.0)?)?;
    let dim = dim_override(g, &mut cfg)?;
    cfg.finish()?;
    if omega == 0.0 {
        return Err(CliError::Config("`omega` must be non-zero".into()));
    }
    let mut cols = vec![
        "t", "alpha_plus_re", "alpha_plus_im", "alpha_minus_re", "alpha_minus_im", "theta_plus",
        "theta_minus", "p0", "p1",
    ];
    if numeric {
        cols.push("fidelity_dense");
    }
    let r = (alpha_i.norm() + 2.0 * (coupling / omega).abs()).max(1.0);
    let d = dim.unwrap_or(safe_dim(r).max(40));
    let cs = CouplingSet::from_flux(1.0, std::f64::consts::FRAC_PI_2, coupling, 0.0);
    let h = if numeric { Some(build_linear(&cs, omega, d)?) } else { None };
    let mut rows = Vec::new();
    for t in grid(0.0, t_max, t_step) {
        let b: BranchPair<f64> = cdho_evolve(alpha_i, coupling, omega, t)?;
        let p = |k| match measure_cat(&b, k) {
            Ok((_, p)) => Ok(p),
            Err(cantilever::Error::DegenerateBranch) => Ok(0.0),
            Err(e) => Err(e),
        };
        let mut row = vec![
            t,
            b.alpha_plus.re,
            b.alpha_plus.im,
            b.alpha_minus.re,
            b.alpha_minus.im,
            b.theta_plus,
            b.theta_minus,
            p(0)?,
            p(1)?,
        ];
        if let Some(h) = &h {
            let psi = cdho_initial(alpha_i, d)?.evolve(&propagator(h, t))?;
            row.push(psi.fidelity(&cdho_state(&b, d)?)?);
        }
        rows.push(row);
    }
    write_csv(&g.out, &name, &header(&cols), &rows)?;
    Ok(())
}

pub fn squeeze_unitary(g: &Globals, mut cfg: Config) -> Result<(), CliError> {
    let name = cfg.string("name", "squeeze_unitary");
    let omega = positive("omega", cfg.f64("omega", 1.0)?)?;
    let gp = cfg.f64("g_prime", 0.0115)?;
    let k = branch(cfg.i32("k", -1)?)?;
    let t_max = non_negative("t_max", cfg.f64("t_max", 150.0)?)?;
    let t_step = positive("t_step", cfg.f64("t_step", 0.05)?)?;
    cfg.finish()?;
    let cs = CouplingSet::nonlinear(gp);
    let spec = diagonalize_conditional(k, &cs, omega)?;
    let rows: Vec<Vec<f64>> = grid(0.0, t_max / omega, t_step / omega)
        .into_iter()
        .map(|t| Ok(vec![omega * t, unitary_variance(k, &cs, omega, t)?]))
        .collect::<Result<_, CliError>>()?;
    let vmin = rows.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min);
    println!(
        "min variance {vmin:.6}, e^(-8 lambda) = {:.6}, period {:.6}",
        (-8.0 * spec.lambda_k).exp(),
        std::f64::consts::PI / spec.big_omega_k
    );
    write_csv(&g.out, &name, &header(&["omega_t", "variance"]), &rows)?;
    Ok(())
}

pub fn squeeze_dissipative(g: &Globals, mut cfg: Config) -> Result<(), CliError> {
    let name = cfg.string("name", "squeeze_dissipative");
    let omega = positive("omega", cfg.f64("omega", 1.0)?)?;
    let gamma = non_negative("gamma", cfg.f64("gamma", 0.01)?)?;
    let gp = cfg.f64("g_prime", 0.0115)?;
    let k = branch(cfg.i32("k", -1)?)?;
    let temps = cfg.list("temperatures", &[0.0, 1.0, 3.0])?;
    let t_max = non_negative("t_max", cfg.f64("t_max", 2000.0)?)?;
    let t_step = positive("t_step", cfg.f64("t_step", 0.5)?)?;
    let tol = tolerance(g, &mut cfg, 1e-10)?;
    cfg.finish()?;
    if temps.is_empty() {
        return Err(CliError::Config("empty temperature list".into()));
    }
    for &t in &temps {
        non_negative("temperatures", t)?;
    }
    let cs = CouplingSet::nonlinear(gp);
    let times = grid(0.0, t_max / omega, t_step / omega);
    let curves: Vec<Result<Vec<f64>, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = temps
            .iter()
            .map(|&temp| {
                let (cs, times) = (&cs, &times);
                s.spawn(move || -> Result<Vec<f64>, CliError> {
                    let bath = BathParams::new(gamma, temp, omega)?;
                    let traj = evolve_moments_at(&MomentVector::vacuum(), k, cs, omega, &bath, times, tol)?;
                    let v = traj.iter().map(position_variance).collect::<Result<Vec<_>, _>>()?;
                    match steady_variance(k, cs, omega, &bath) {
                        Ok(sv) => println!("T = {temp}: final {:.6}, steady {sv:.6}", v[v.len() - 1]),
                        Err(_) => println!("T = {temp}: final {:.6}, no steady state", v[v.len() - 1]),
                    }
                    Ok(v)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let curves: Vec<Vec<f64>> = curves.into_iter().collect::<Result<_, _>>()?;
    let mut cols = vec!["omega_t".to_string()];
    cols.extend(temps.iter().map(|t| format!("variance_T{t}")));
    let rows: Vec<Vec<f64>> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut r = vec![omega * t];
            r.extend(curves.iter().map(|c| c[i]));
            r
        })
        .collect();
    write_csv(&g.out, &name, &cols, &rows)?;
    Ok(())
}

pub fn steady_sweep(g: &Globals, mut cfg: Config) -> Result<(), CliError> {
    let name = cfg.string("name", "steady_sweep");
    let omega = positive("omega", cfg.f64("omega", 1.0)?)?;
    let gamma = non_negative("gamma", cfg.f64("gamma", 0.01)?)?;
    let gp = cfg.f64("g_prime", 0.0115)?;
    let k = branch(cfg.i32("k", -1)?)?;
    let t_min = non_negative("t_min", cfg.f64("t_min", 0.005)?)?;
    let t_max = cfg.f64("t_max", 1.0)?;
    let t_step = positive("t_step", cfg.f64("t_step", 0.005)?)?;
    cfg.finish()?;
    if !(t_max >= t_min) {
        return Err(CliError::Config("`t_max` must not be below `t_min`".into()));
    }
    let cs = CouplingSet::nonlinear(gp);
    let rows: Vec<Vec<f64>> = grid(t_min, t_max, t_step)
        .into_iter()
        .map(|x| {
            let bath = BathParams::new(gamma, x * omega, omega)?;
            Ok(vec![x, steady_variance(k, &cs, omega, &bath)?])
        })
        .collect::<Result<_, CliError>>()?;
    if k == Branch::Minus {
        let tc = critical_temperature(gamma, omega, gp)?;
        let tb = steady_crossing_temperature(&cs, omega, gamma, 1e-12)?;
        println!("T_c / omega = {:.6} (bisection {:.6})", tc / omega, tb / omega);
    }
    write_csv(&g.out, &name, &header(&["temperature", "variance"]), &rows)?;
    Ok(())
}

pub fn params(g: &Globals, mut cfg: Config) -> Result<(), CliError> {
    let name = cfg.string("name", "params");
    let r = DeviceParams::<f64>::reference();
    let ov = r.gradient_override.expect("reference device has a gradient");
    let gradient = cfg.f64("gradient", ov.gradient)?;
    let z0 = cfg.f64("z0", ov.z0)?;
    let dev = DeviceParams {
        tip_moment: cfg.f64("tip_moment", r.tip_moment)?,
        tip_distance: cfg.f64("tip_distance", r.tip_distance)?,
        loop_area: cfg.f64("loop_area", r.loop_area)?,
        josephson_energy: cfg.f64("josephson_energy", r.josephson_energy)?,
        charging_energy: cfg.f64("charging_energy", r.charging_energy)?,
        gate_charge: cfg.f64("gate_charge", r.gate_charge)?,
        external_field: cfg.f64("external_field", r.external_field)?,
        cantilever_freq: cfg.f64("cantilever_freq", r.cantilever_freq)?,
        cantilever_mass: cfg.f64("cantilever_mass", r.cantilever_mass)?,
        mu0: r.mu0,
        flux_quantum: r.flux_quantum,
        // gradient = 0 falls back to the dipole field of the tip
        gradient_override: (gradient != 0.0).then_some(GradientOverride { gradient, z0 }),
    };
    cfg.finish()?;
    let cs = derive_couplings(&dev)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let table = [
        ("B0 [T]", cs.b0),
        ("C [T/m]", cs.c),
        ("z0 [m]", cs.z0),
        ("phi0 [rad]", cs.phi0),
        ("phi [rad]", cs.phi),
        ("phi / pi", cs.phi / std::f64::consts::PI),
        ("omega0 [rad/s]", cs.omega0),
        ("E_J [rad/s]", cs.e_j),
        ("g [rad/s]", cs.g),
        ("g / 2pi [Hz]", cs.g / two_pi),
        ("g' [rad/s]", cs.g_prime),
        ("g' / 2pi [Hz]", cs.g_prime / two_pi),
    ];
    for (k, v) in &table {
        println!("{k:>16} = {v:.6e}");
    }
    let dir = &g.out;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("{name}.csv"));
    let io = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(["quantity", "value"]).map_err(io)?;
    for (k, v) in &table {
        w.write_record([k.to_string(), crate::output::number(*v)]).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Config(e.to_string()))?;
    println!("wrote {}", path.display());
    Ok(())
}
