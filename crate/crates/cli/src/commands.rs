use std::fmt;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use schur_purify::analytics::{distillation_yield, mean_fidelity, BlockSpectrum};
use schur_purify::blocks::BlockLabel;
use schur_purify::cloning::{
    estimation_lambda, mixed_cloning_fidelity, mixed_cloning_terms, scaling_relation_check, CloneSettings,
    OutputCount,
};
use schur_purify::haar::{haar_unitary, random_direction};
use schur_purify::oracle::{
    covariance_residual, decomposition_report, quadrature_check, reversibility_check, rotation_residual,
    BlockMeasurement,
};
use schur_purify::protocol::{histogram_fit, DenseProtocol, OutcomeSampler};
use schur_purify::{DenseCap, Direction, Error, MixedQubit};

use crate::args::{CloneArgs, Command, Figure1Args, SimulateArgs, StatsArgs, VerifyArgs};
use crate::output::{create, real, Report};
use crate::parallel;

/// Environment variable overriding the dense cap (in qubits).
pub const CAP_VAR: &str = "SCHUR_CAP";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Failure(_) => 1,
            Self::Usage(_) | Self::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Failure(m) => f.write_str(m),
            Self::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Verification { .. } | Error::RankDeficiency { .. } => Self::Failure(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
        }
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run(command: crate::args::Cli) -> CliResult<Status> {
    match command.command {
        Command::Stats(a) => cmd_stats(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Figure1(a) => cmd_figure1(&a),
        Command::Clone(a) => cmd_clone(&a),
    }
}

pub fn dense_cap() -> CliResult<DenseCap> {
    match std::env::var(CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(DenseCap::new)
            .map_err(|_| CliError::Usage(format!("{CAP_VAR} must be a qubit count, got `{v}`"))),
        Err(_) => Ok(DenseCap::default()),
    }
}

fn single_lambda(values: &[f64]) -> CliResult<f64> {
    match values {
        [l] if (0.0..=1.0).contains(l) => Ok(*l),
        [l] => Err(Error::InvalidLambda(*l).into()),
        _ => Err(CliError::Usage("this command takes a single --lambda".into())),
    }
}

fn check_n(n: usize) -> CliResult<()> {
    match n {
        0 => Err(Error::EmptyRegister.into()),
        n if n % 2 == 1 => Err(Error::OddQubitCount(n).into()),
        _ => Ok(()),
    }
}


fn direction_string(d: &Direction) -> String {
    d.components().iter().map(|&c| real(c)).collect::<Vec<_>>().join(" ")
}

pub fn cmd_stats(a: &StatsArgs) -> CliResult<Status> {
    check_n(a.n)?;
    let lambda = single_lambda(&a.lambda)?;
    let spectrum = BlockSpectrum::new(a.n, lambda)?;
    let mut report = Report::new(["j", "d_j", "p_j", "f_j"]);
    for r in &spectrum.rows {
        report.row(vec![
            r.j.to_string(),
            r.multiplicity.to_string(),
            real(r.probability),
            real(r.fidelity),
        ]);
    }
    report.footer("yield", real(spectrum.distillation_yield()));
    report.footer("mean_fidelity", real(spectrum.mean_fidelity(!a.without_j0)));
    report.emit(&a.output)?;
    Ok(Status::Pass)
}

struct Checks {
    report: Report,
    tol: f64,
    worst: f64,
    pass: bool,
}

impl Checks {
    fn add(&mut self, check: &str, label: Option<BlockLabel>, residual: f64) {
        self.add_cells(check, label.map(|l| l.j), label.map(|l| l.alpha), residual);
    }

    fn add_cells(&mut self, check: &str, j: Option<u32>, alpha: Option<usize>, residual: f64) {
        let ok = residual < self.tol;
        self.pass &= ok;
        self.worst = if residual.is_nan() { f64::NAN } else { self.worst.max(residual) };
        let cell = |v: Option<String>| v.unwrap_or_default();
        self.report.row(vec![
            check.to_string(),
            cell(j.map(|j| j.to_string())),
            cell(alpha.map(|a| a.to_string())),
            real(residual),
            Status::from_pass(ok).label().to_string(),
        ]);
    }
}

pub fn cmd_verify(a: &VerifyArgs) -> CliResult<Status> {
    check_n(a.n)?;
    let lambda = single_lambda(&a.lambda)?;
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let cap = dense_cap()?;
    cap.check(a.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let direction = match &a.direction {
        Some(v) => Direction::new(v[0], v[1], v[2])?,
        None => random_direction(&mut rng),
    };
    let q = MixedQubit::new(lambda, direction)?;
    let workers = parallel::default_workers();
    let basis = parallel::build_basis(a.n, cap, workers)?;

    if let Some(path) = &a.dump_basis {
        let mut w = csv::WriterBuilder::new()
            .delimiter(a.output.format.delimiter())
            .from_writer(create(path)?);
        w.write_record(["j", "m", "alpha", "index", "re", "im"]).map_err(io::Error::from)?;
        for (key, index, amp) in basis.export_rows() {
            w.write_record([
                key.j.to_string(),
                key.m.to_string(),
                key.alpha.to_string(),
                index.to_string(),
                real(amp.re),
                real(amp.im),
            ])
            .map_err(io::Error::from)?;
        }
        w.flush()?;
    }

    let mut checks = Checks {
        report: Report::new(["check", "j", "alpha", "residual", "status"]),
        tol: a.tol,
        worst: 0.0,
        pass: true,
    };
    checks.add("orthonormality", None, basis.orthonormality_residual());
    let decomposition = decomposition_report(&basis, &q, cap)?;
    checks.add("block_sum", None, decomposition.block_sum_residual);
    checks.add("excitation_sum", None, decomposition.excitation_residual);
    for b in &decomposition.blocks {
        checks.add("probability", Some(b.label), b.probability_residual());
        checks.add("post_state", Some(b.label), b.post_residual);
        checks.add("purified_state", Some(b.label), b.purified_residual);
        checks.add("kept_fidelity", Some(b.label), b.fidelity_residual);
    }
    for j in 1..=(a.n / 2) as u32 {
        let r = quadrature_check(&q, j, 2 * j as usize + 1, cap)?;
        checks.add_cells("quadrature", Some(j), None, r);
    }
    let labels = basis.labels();
    let reversibility: Vec<(BlockLabel, f64)> = labels
        .par_iter()
        .map(|&l| reversibility_check(&basis, &q, l, cap).map(|r| (l, r)))
        .collect::<Result<_, _>>()?;
    for (l, r) in reversibility {
        checks.add("reversibility", Some(l), r);
    }
    let procedure = BlockMeasurement { basis: &basis };
    let (mut rotation, mut covariance) = (0.0f64, 0.0f64);
    for _ in 0..a.rotations {
        let u = haar_unitary(&mut rng);
        rotation = rotation.max(rotation_residual(&basis, &u)?);
        covariance = covariance.max(covariance_residual(&procedure, &q, &u, cap)?);
    }
    if a.rotations > 0 {
        checks.add("rotation", None, rotation);
        checks.add("covariance", None, covariance);
    }

    let status = Status::from_pass(checks.pass);
    let mut report = checks.report;
    report.footer("n", a.n.to_string());
    report.footer("lambda", real(lambda));
    report.footer("direction", direction_string(&direction));
    report.footer("tol", real(a.tol));
    report.footer("max_residual", real(checks.worst));
    report.footer("status", status.label());
    report.emit(&a.output)?;
    Ok(status)
}

/// Both z-scores must stay below this for `simulate` to pass.
pub const Z_LIMIT: f64 = 4.0;

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<Status> {
    check_n(a.n)?;
    let lambda = single_lambda(&a.lambda)?;
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let workers = a.workers.unwrap_or_else(parallel::default_workers).max(1);
    let q = MixedQubit::along_z(lambda)?;

    let (summary, dense) = if a.dense {
        let cap = dense_cap()?;
        cap.check(a.n)?;
        let basis = parallel::build_basis(a.n, cap, workers)?;
        let dense = DenseProtocol::from_basis(&basis, &q, cap)?;
        let (summary, _) = parallel::simulate_dense(&dense, a.trials, a.seed, workers)?;
        (summary, Some(dense))
    } else {
        (parallel::simulate(&q, a.n, a.trials, a.seed, workers)?, None)
    };

    if let Some(path) = &a.dump {
        let mut w = create(path)?;
        writeln!(w, "trial,j,alpha,kept,fidelity")?;
        let sampler = OutcomeSampler::new(&q, a.n)?;
        for t in 0..a.trials {
            let r = match &dense {
                Some(d) => d.sample(a.seed, t),
                None => sampler.sample(a.seed, t),
            };
            writeln!(w, "{},{},{},{},{}", r.trial, r.j, r.alpha, r.kept_qubits, real(r.fidelity))?;
        }
        w.flush()?;
    }

    let yield_target = distillation_yield(a.n, lambda)?;
    let fidelity_target = mean_fidelity(a.n, lambda, true)?;
    let yield_z = summary.empirical_yield.z_score(yield_target);
    let fidelity_z = summary.empirical_mean_fidelity.z_score(fidelity_target);
    let fit = histogram_fit(&summary)?;

    let mut report = Report::new(["j", "count", "frequency", "p_j"]);
    let spectrum = BlockSpectrum::new(a.n, lambda)?;
    for (row, &count) in spectrum.rows.iter().zip(&summary.histogram) {
        report.row(vec![
            row.j.to_string(),
            count.to_string(),
            real(count as f64 / summary.trials as f64),
            real(row.probability),
        ]);
    }
    let status = Status::from_pass(yield_z.abs() < Z_LIMIT && fidelity_z.abs() < Z_LIMIT);
    report.footer("n", a.n.to_string());
    report.footer("lambda", real(lambda));
    report.footer("trials", summary.trials.to_string());
    report.footer("seed", summary.seed.to_string());
    report.footer("path", if a.dense { "dense" } else { "closed_form" });
    report.footer("yield", real(summary.empirical_yield.value));
    report.footer("yield_se", real(summary.empirical_yield.error));
    report.footer("yield_target", real(yield_target));
    report.footer("yield_z", real(yield_z));
    report.footer("mean_fidelity", real(summary.empirical_mean_fidelity.value));
    report.footer("mean_fidelity_se", real(summary.empirical_mean_fidelity.error));
    report.footer("mean_fidelity_target", real(fidelity_target));
    report.footer("mean_fidelity_z", real(fidelity_z));
    report.footer("chi2", real(fit.statistic));
    report.footer("chi2_dof", fit.dof.to_string());
    report.footer("chi2_p", real(fit.p_value));
    report.footer("status", status.label());
    report.emit(&a.output)?;
    Ok(status)
}

/// `(λ, [(N, λ^mix_{N,∞})])`.
pub type Curve = (f64, Vec<(usize, f64)>);

pub fn figure1_curves(lambdas: &[f64], n_min: usize, n_max: usize) -> CliResult<Vec<Curve>> {
    if n_min < 2 || n_min % 2 == 1 || n_max < n_min {
        return Err(CliError::Usage(format!(
            "N range must be even with 2 <= n-min <= n-max, got {n_min}..{n_max}"
        )));
    }
    if lambdas.is_empty() {
        return Err(CliError::Usage("at least one --lambda is required".into()));
    }
    lambdas
        .iter()
        .map(|&l| {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::InvalidLambda(l).into());
            }
            let pts = (n_min..=n_max)
                .step_by(2)
                .map(|n| estimation_lambda(n, l).map(|v| (n, v)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((l, pts))
        })
        .collect()
}

pub fn cmd_figure1(a: &Figure1Args) -> CliResult<Status> {
    let curves = figure1_curves(&a.lambda, a.n_min, a.n_max)?;
    let mut report = Report::new(["N", "lambda", "lambda_mix_inf"]);
    for (l, pts) in &curves {
        for &(n, v) in pts {
            report.row(vec![n.to_string(), real(*l), real(v)]);
        }
    }
    report.emit(&a.output)?;
    if let Some(path) = &a.plot {
        crate::plot::render_figure1(path, &curves).map_err(|e| CliError::Io(io::Error::other(e)))?;
    }
    Ok(Status::Pass)
}

pub fn cmd_clone(a: &CloneArgs) -> CliResult<Status> {
    let lambda = single_lambda(&a.lambda)?;
    let m = a.m.0;
    let settings = CloneSettings::new(a.n, m, lambda)?;
    let mut report = Report::new(["j", "p_j", "f_j", "F_pur", "fidelity"]);
    for t in mixed_cloning_terms(&settings)? {
        report.row(vec![
            t.j.to_string(),
            real(t.probability),
            real(t.block_fidelity),
            real(t.pure_fidelity),
            real(t.fidelity),
        ]);
    }
    let f = mixed_cloning_fidelity(&settings)?;
    report.footer("n", a.n.to_string());
    report.footer("m", m.to_string());
    report.footer("lambda", real(lambda));
    report.footer("F_mix", real(f));
    report.footer("lambda_mix", real(2.0 * f - 1.0));
    report.footer("lambda_mix_inf", real(estimation_lambda(a.n, lambda)?));
    if let OutputCount::Finite(_) = m {
        report.footer("scaling_residual", real(scaling_relation_check(&settings)?));
    }
    report.emit(&a.output)?;
    Ok(Status::Pass)
}
