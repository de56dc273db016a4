//! The six subcommands, each a function from resolved config to output.

use doubling_core::cocycle::lyapunov_curve;
use doubling_core::operator::{build_halfline_box, BoundaryCondition};
use doubling_core::spectral::{decay_report, eigensolve, eigenvalues, periodic_bands};
use doubling_core::symbolic::{circle_map_float, derive_seed, DigitSequence};

use crate::config::{CommandKind, ExperimentConfig, ThetaSpec};
use crate::output::{emit, Cell, Table};
use crate::{verify, CliError};

pub fn run(config: &ExperimentConfig) -> Result<(), CliError> {
    match config.command {
        CommandKind::Lyapunov => lyapunov(config),
        CommandKind::Bands => bands(config),
        CommandKind::Spectrum => spectrum(config),
        CommandKind::Localize => localize(config),
        CommandKind::Verify => verify::run(config),
        CommandKind::FloatDemo => float_demo(config),
    }
}

fn lyapunov(config: &ExperimentConfig) -> Result<(), CliError> {
    let spec = config.potential_spec()?;
    let grid = config.grid.to_core()?;
    let curve = lyapunov_curve(&spec, grid, config.n_steps, config.n_samples, config.seed)?;

    let mut table = Table::new(vec![
        "E",
        "gamma_mean",
        "gamma_stderr",
        "n_steps",
        "n_samples",
        "lambda",
        "f_kind",
        "base",
        "seed",
    ]);
    for p in &curve.points {
        table.push(vec![
            Cell::F(p.energy),
            Cell::F(p.mean),
            Cell::F(p.stderr),
            Cell::U(p.n_steps),
            Cell::U(u64::from(p.n_samples)),
            Cell::F(config.lambda),
            Cell::S(config.f.kind_name().into()),
            Cell::U(u64::from(config.base)),
            Cell::U(config.seed),
        ]);
    }
    emit(config, &table)
}

fn periodic_theta(config: &ExperimentConfig) -> Result<DigitSequence, CliError> {
    let omega = config.theta.to_halfline(config.base)?;
    if !omega.is_periodic() {
        return Err(CliError::Validation(
            "band computation needs a periodic θ: use --theta rational:p/q or digits:…".into(),
        ));
    }
    Ok(omega)
}

fn bands(config: &ExperimentConfig) -> Result<(), CliError> {
    let spec = config.potential_spec()?;
    let omega = periodic_theta(config)?;
    let set = periodic_bands(&spec, &omega)?;

    let mut table = Table::new(vec!["band_index", "E_lower", "E_upper", "period"]);
    for (i, band) in set.bands().iter().enumerate() {
        table.push(vec![
            Cell::U(i as u64),
            Cell::F(band.lo),
            Cell::F(band.hi),
            Cell::U(set.period() as u64),
        ]);
    }
    for gap in set.closed_gaps() {
        table.notes.push(format!("closed gap (|Δ| = 2 tangency) near E = {gap}"));
    }
    emit(config, &table)
}

fn spectrum(config: &ExperimentConfig) -> Result<(), CliError> {
    let spec = config.potential_spec()?;
    let omega = config.theta.to_halfline(config.base)?;
    let bc = BoundaryCondition::new(config.alpha)?;
    let op = build_halfline_box(&spec, &omega, config.box_size, bc);
    let vals = eigenvalues(&op)?;

    let mut table = Table::new(vec!["index", "eigenvalue"]);
    for (i, v) in vals.iter().enumerate() {
        table.push(vec![Cell::U(i as u64), Cell::F(*v)]);
    }
    emit(config, &table)
}

fn localize(config: &ExperimentConfig) -> Result<(), CliError> {
    let spec = config.potential_spec()?;
    let bc = BoundaryCondition::new(config.alpha)?;

    // Seeded θ fans out into n_samples independent draws; an explicit θ is a
    // single batch.
    let batches: Vec<(u64, DigitSequence)> = match &config.theta {
        ThetaSpec::Seeded { seed } => (0..config.n_samples)
            .map(|i| {
                let sub = derive_seed(*seed, u64::from(i));
                Ok((sub, DigitSequence::seeded(config.base, sub)?))
            })
            .collect::<Result<_, CliError>>()?,
        other => vec![(config.seed, other.to_halfline(config.base)?)],
    };

    let mut table = Table::new(vec![
        "eigenvalue",
        "rate",
        "residual",
        "participation_ratio",
        "N",
        "alpha",
        "seed",
    ]);
    for (label, omega) in &batches {
        let op = build_halfline_box(&spec, omega, config.box_size, bc);
        let pairs = eigensolve(&op)?;
        for pair in &pairs {
            let report = decay_report(pair);
            table.push(vec![
                Cell::F(report.eigenvalue),
                Cell::F(report.rate),
                Cell::F(report.residual),
                Cell::F(report.participation_ratio),
                Cell::U(config.box_size as u64),
                Cell::F(config.alpha),
                Cell::U(*label),
            ]);
        }
    }
    emit(config, &table)
}

fn float_demo(config: &ExperimentConfig) -> Result<(), CliError> {
    let omega = config.theta.to_halfline(config.base)?;
    let depth = doubling_core::symbolic::float_depth(config.base);

    // Exact rational orbit runs alongside when θ was given as p/q.
    let rational = match &config.theta {
        ThetaSpec::Rational { p, q } => Some((*p, *q)),
        _ => None,
    };

    let mut float_theta = match rational {
        Some((p, q)) => p as f64 / q as f64,
        None => omega.eval_float(depth),
    };
    let mut exact = rational;

    let mut table = Table::new(vec![
        "step",
        "float_iterate",
        "symbolic_value",
        "exact_value",
        "float_abs_err",
        "symbolic_abs_err",
    ]);
    let steps = config.n_steps.min(80);
    let mut collapse_step: Option<u64> = None;
    for step in 0..=steps {
        let symbolic = omega.shifted(step).eval_float(depth);
        let (exact_cell, float_err, symbolic_err) = match exact {
            Some((p, q)) => {
                let value = p as f64 / q as f64;
                (
                    Cell::F(value),
                    Cell::F((float_theta - value).abs()),
                    Cell::F((symbolic - value).abs()),
                )
            }
            None => (Cell::S(String::new()), Cell::S(String::new()), Cell::S(String::new())),
        };
        table.push(vec![
            Cell::U(step),
            Cell::F(float_theta),
            Cell::F(symbolic),
            exact_cell,
            float_err,
            symbolic_err,
        ]);
        if collapse_step.is_none() && step > 0 && float_theta == 0.0 {
            collapse_step = Some(step);
        }
        float_theta = circle_map_float(float_theta, config.base);
        if let Some((p, q)) = exact {
            exact = Some((
                ((u128::from(p) * u128::from(config.base)) % u128::from(q)) as u64,
                q,
            ));
        }
    }

    match collapse_step {
        Some(s) => table.notes.push(format!(
            "float iteration of the map collapsed to exact 0 at step {s}; the symbolic orbit continues"
        )),
        None => table
            .notes
            .push(format!("float orbit has not collapsed within {steps} steps")),
    }
    if let Some((mut p, q)) = rational {
        // Long-division oracle over the full configured horizon.
        let mut max_err = 0.0f64;
        for step in 0..=config.n_steps.min(100_000) {
            let value = p as f64 / q as f64;
            let symbolic = omega.shifted(step).eval_float(depth);
            max_err = max_err.max((symbolic - value).abs());
            p = ((u128::from(p) * u128::from(config.base)) % u128::from(q)) as u64;
        }
        table.notes.push(format!(
            "symbolic orbit vs exact long-division orbit over {} steps: max |err| = {max_err:.3e}",
            config.n_steps.min(100_000)
        ));
    }
    emit(config, &table)
}
