use std::f64::consts::FRAC_PI_4;

use lyalab::cocycle_file::AnyCocycle;
use lyalab::experiments::{run_continuity_sweep, run_support_jitter};
use lyalab::exponents::{estimate_extremal_mc, furstenberg_integral};
use lyalab::holder::{
    build_construction, holder_rows, kifer_crossover, swap_test_path, vanishing_exponent_check,
    verify_subspace_swap, ShiftMetricParams,
};
use lyalab::oseledets::angle_convergence_experiment;
use lyalab::stationary::{directional_mass, solve_stationary, DICTIONARY_VERSION};
use lyalab::{Error, FiniteCocycle, ProjPoint, Report};

use crate::config::ExperimentConfig;
use crate::{CliError, Command};

/// A finished report, plus the numeric failure to surface after writing it.
pub struct Outcome {
    pub report: Report,
    pub failure: Option<Error>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome {
            report,
            failure: None,
        }
    }
}

pub fn run(command: Command, config: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let report = match command {
        Command::Estimate => estimate(config, seed)?,
        Command::Stationary => return stationary(config, seed),
        Command::Oseledets => oseledets(config, seed)?,
        Command::Sweep => sweep(config, seed)?,
        Command::Jitter => jitter(config, seed)?,
        Command::Holder => holder(config, seed)?,
        Command::Kifer => kifer(config, seed)?,
    };
    Ok(report
        .with_meta("version", env!("CARGO_PKG_VERSION"))
        .with_meta("seed", seed)
        .into())
}

fn finite(config: &ExperimentConfig, command: &str) -> Result<FiniteCocycle, CliError> {
    match config.cocycle()? {
        AnyCocycle::Finite(c) => Ok(c),
        AnyCocycle::Window(_) => Err(CliError::Config(format!(
            "`{command}` needs a locally constant cocycle (no [cocycle.window])"
        ))),
    }
}

fn estimate(config: &ExperimentConfig, seed: u64) -> Result<Report, CliError> {
    let budgets = config.budgets()?;
    let cocycle = config.cocycle()?;
    let e = estimate_extremal_mc(cocycle.as_dyn(), budgets.n_steps, budgets.n_trials, seed)?;
    let mut report = Report::new(
        "estimate",
        &["lambda_plus", "stderr_plus", "lambda_minus", "stderr_minus"],
    )
    .with_meta("n_steps", budgets.n_steps)
    .with_meta("n_trials", budgets.n_trials);
    report.push_row(vec![
        e.lambda_plus,
        e.stderr_plus,
        e.lambda_minus,
        e.stderr_minus,
    ])?;
    Ok(report)
}

fn stationary(config: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let cocycle = finite(config, "stationary")?;
    let b = &config.budgets;
    let tol = config.tolerances.stationary;
    let (measure, residual, iterations, failure) =
        match solve_stationary(&cocycle, b.particle_budget, b.max_iters, tol, seed) {
            Ok(s) => (s.measure, s.residual, s.iterations, None),
            Err(Error::NotConverged {
                best,
                residual,
                iterations,
            }) => {
                let failure = Error::NotConverged {
                    best: best.clone(),
                    residual,
                    iterations,
                };
                (*best, residual, iterations, Some(failure))
            }
            Err(e) => return Err(e.into()),
        };
    let horizontal = ProjPoint::real(1.0, 0.0).expect("nonzero");
    let vertical = ProjPoint::real(0.0, 1.0).expect("nonzero");
    let mut report = Report::new(
        "stationary",
        &["x", "y", "z", "z1_re", "z1_im", "z2_re", "z2_im", "weight"],
    )
    .with_meta("version", env!("CARGO_PKG_VERSION"))
    .with_meta("seed", seed)
    .with_meta("particle_budget", b.particle_budget)
    .with_meta("max_iters", b.max_iters)
    .with_meta("iterations", iterations)
    .with_meta("residual", lyalab::report::format_float(residual))
    .with_meta("dictionary_version", DICTIONARY_VERSION)
    .with_meta("converged", failure.is_none())
    .with_meta(
        "furstenberg_integral",
        lyalab::report::format_float(furstenberg_integral(&cocycle, &measure)?),
    )
    .with_meta(
        "mass_near_horizontal",
        lyalab::report::format_float(directional_mass(&measure, &horizontal, FRAC_PI_4)),
    )
    .with_meta(
        "mass_near_vertical",
        lyalab::report::format_float(directional_mass(&measure, &vertical, FRAC_PI_4)),
    );
    for (p, w) in measure.particles() {
        let [x, y, z] = p.sphere();
        let (z1, z2) = (p.z1(), p.z2());
        report.push_row(vec![x, y, z, z1.re, z1.im, z2.re, z2.im, *w])?;
    }
    Ok(Outcome { report, failure })
}

fn oseledets(config: &ExperimentConfig, seed: u64) -> Result<Report, CliError> {
    let base = finite(config, "oseledets")?;
    let o = &config.oseledets;
    let depth = config.budgets.depth;
    let spec = config.perturbation(base.len())?;
    let mut report = Report::new(
        "oseledets",
        &["gamma", "fraction", "n_points", "n_excluded"],
    )
    .with_meta("eps", o.eps)
    .with_meta("depth", depth);
    if o.gammas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Config(
            "oseledets gammas must be strictly descending".into(),
        ));
    }
    for &gamma in &o.gammas {
        let other = spec.apply(&base, gamma)?;
        let e = angle_convergence_experiment(&base, &other, o.eps, depth, o.n_points, seed)?;
        report.push_row(vec![
            gamma,
            e.fraction,
            e.n_points as f64,
            e.n_excluded as f64,
        ])?;
    }
    Ok(report)
}

fn sweep(config: &ExperimentConfig, seed: u64) -> Result<Report, CliError> {
    let base = finite(config, "sweep")?;
    let spec = config.perturbation(base.len())?;
    let result = run_continuity_sweep(&base, &spec, &config.sweep.gammas, config.budgets()?, seed)?;
    Ok(result.to_report())
}

fn jitter(config: &ExperimentConfig, seed: u64) -> Result<Report, CliError> {
    let base = finite(config, "jitter")?;
    let j = &config.jitter;
    let result = run_support_jitter(&base, &j.deltas, &j.split, config.budgets()?, seed)?;
    Ok(result.to_report().with_meta("cluster_size", j.split.len()))
}

fn holder(config: &ExperimentConfig, seed: u64) -> Result<Report, CliError> {
    let h = &config.holder;
    let params = ShiftMetricParams::new(h.r)?;
    let budgets = config.budgets()?;
    let mut columns = vec![
        "k",
        "n",
        "eps",
        "holder_norm",
        "sup_term",
        "quotient_term",
        "bound",
        "sup_distance",
        "swap_max_angle",
    ];
    if h.estimate {
        columns.extend(["lambda_plus", "stderr_plus"]);
    }
    let mut report = Report::new("holder", &columns)
        .with_meta("sigma", h.sigma)
        .with_meta("r", h.r)
        .with_meta("weights", format!("{:?}", h.weights))
        .with_meta(
            "discontinuity_regime",
            params.in_discontinuity_regime(h.sigma),
        );
    if h.estimate {
        report = report
            .with_meta("n_steps", budgets.n_steps)
            .with_meta("n_trials", budgets.n_trials);
    }
    let rows = holder_rows(h.sigma, &h.ks, params, h.weights)?;
    for row in rows {
        let c = build_construction(h.sigma, row.k, h.weights)?;
        let (path, origin) = swap_test_path(&c, 0);
        let swap = verify_subspace_swap(&c, &path, origin)?;
        let mut values = vec![
            row.k as f64,
            c.n as f64,
            c.eps,
            row.norm.total,
            row.norm.sup_term,
            row.norm.quotient_term,
            row.bound,
            c.sup_distance(),
            swap.max_angle(),
        ];
        if h.estimate {
            let e = vanishing_exponent_check(&c, budgets.n_steps, budgets.n_trials, seed)?;
            values.extend([e.lambda_plus, e.stderr_plus]);
        }
        report.push_row(values)?;
    }
    Ok(report)
}

fn kifer(config: &ExperimentConfig, seed: u64) -> Result<Report, CliError> {
    let k = &config.kifer;
    let budgets = config.budgets()?;
    let mut report = Report::new("kifer", &["p1", "n_steps", "lambda_plus", "stderr_plus"])
        .with_meta("sigma", k.sigma)
        .with_meta("n_trials", budgets.n_trials);
    for &p1 in &k.p1 {
        let rows = kifer_crossover(k.sigma, p1, &k.lengths, budgets.n_trials, seed)?;
        for (len, e) in k.lengths.iter().zip(rows) {
            report.push_row(vec![p1, *len as f64, e.lambda_plus, e.stderr_plus])?;
        }
    }
    Ok(report)
}
