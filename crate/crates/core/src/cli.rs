//! Command-line front end.
//!
//! Every subcommand reads CSV or model JSON, runs one pipeline stage and
//! writes its result atomically. Exit codes: 0 on success, 1 for
//! validation, input and format errors, 2 for numerical failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use nalgebra::DMatrix;

use crate::bench::{
    lrmar_explained_variance, pca_explained_variance, simulate_sinusoids, write_bench_csv,
    BenchRecord, SinusoidConfig, Target,
};
use crate::error::{LrmarError, Result};
use crate::extensions::fit_wcca;
use crate::persist::{load_model, save_model, wcca_to_json, write_atomic};
use crate::selection::{grid_select, parse_range, SelectOptions};
use crate::series::{read_matrix_csv, write_matrix_csv, TimeSeries};
use crate::spec::{InitMethod, ModelSpec, Rates};
use crate::vb::{fit, predict_one_step, reconstruct, transform, FittedModel};

/// Environment variable that sets the default worker count for `select`.
pub const WORKERS_ENV: &str = "LRMAR_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "lrmar", version, about = "Low-rank MAR factor models fitted by variational Bayes")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic sinusoid benchmark data.
    Simulate(SimulateArgs),
    /// Fit an LR-MAR model and save it as JSON.
    Fit(FitArgs),
    /// Grid search over (P, Q) by free energy.
    Select(SelectArgs),
    /// Latent means of a series under a saved model.
    Transform(TransformArgs),
    /// Map latent means back to the output space.
    Reconstruct(ReconstructArgs),
    /// Predictive means (and covariance) of the next L samples.
    Predict(PredictArgs),
    /// Fit the windowed CCA smoother.
    Wcca(WccaArgs),
    /// Explained-variance benchmark of LR-MAR against PCA.
    Bench(BenchArgs),
}

/// Prior hyperparameters and loop controls shared by the fitting commands.
#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    /// Set all six Gamma prior parameters at once.
    #[arg(long)]
    pub hyper: Option<f64>,
    #[arg(long)]
    pub iota: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Relative free-energy change that counts as converged.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start from a seeded random initialization instead of the SVD.
    #[arg(long)]
    pub random_init: bool,
    /// Over-relaxed steps between cycles (kept only when they lower the
    /// free energy); usually several times fewer cycles.
    #[arg(long)]
    pub accelerate: bool,
}

impl HyperArgs {
    fn apply(&self, mut spec: ModelSpec) -> ModelSpec {
        if let Some(h) = self.hyper {
            spec = spec.with_all_hyper(h);
        }
        let set = |slot: &mut Rates, v: Option<f64>| {
            if let Some(v) = v {
                *slot = Rates::Uniform(v);
            }
        };
        if let Some(v) = self.iota {
            spec.iota = v;
        }
        set(&mut spec.a, self.a);
        if let Some(v) = self.kappa {
            spec.kappa = v;
        }
        set(&mut spec.b, self.b);
        if let Some(v) = self.nu {
            spec.nu = v;
        }
        set(&mut spec.c, self.c);
        if let Some(v) = self.tol {
            spec.tol = v;
        }
        if let Some(v) = self.max_iter {
            spec.max_iter = v;
        }
        spec.seed = self.seed;
        if self.random_init {
            spec.init = InitMethod::Random;
        }
        spec.accelerate |= self.accelerate;
        spec
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "T", default_value_t = 4000)]
    pub t: usize,
    #[arg(long = "N", default_value_t = 12)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub noise_std: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the noise-free series.
    #[arg(long)]
    pub clean_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "P")]
    pub p: usize,
    #[arg(long = "Q")]
    pub q: usize,
    #[arg(long = "L", default_value_t = 1)]
    pub l: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Past window sizes: `a..b` (inclusive), `a,b,c` or `a`.
    #[arg(long = "P", default_value = "2..8")]
    pub p: String,
    /// Latent dimensions: `a..b` (inclusive), `a,b,c` or `a`.
    #[arg(long = "Q", default_value = "1..10")]
    pub q: String,
    #[arg(long = "L", default_value_t = 1)]
    pub l: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Worker threads; 0 uses every logical core.
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Latent means as written by `transform`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Add the training channel means back.
    #[arg(long)]
    pub original_units: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// One row per forecast origin t = P..=T, in original units.
    #[arg(long)]
    pub out: PathBuf,
    /// Predictive covariance (the same for every origin).
    #[arg(long)]
    pub cov_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WccaArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Window length, used for both the past and the future view.
    #[arg(long = "P")]
    pub p: usize,
    #[arg(long = "Q")]
    pub q: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the latent means.
    #[arg(long)]
    pub z_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long = "T", default_value_t = 4000)]
    pub t: usize,
    #[arg(long = "N", default_value_t = 12)]
    pub n: usize,
    #[arg(long = "P", default_value_t = 6)]
    pub p: usize,
    /// Ranks to evaluate: `a..b`, `a,b,c` or `a`.
    #[arg(long = "Q", default_value = "1..12")]
    pub q: String,
    /// Number of datasets; seeds run from `--seed` upwards.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub noise_std: f64,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub accelerate: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lrmar: {e}");
            exit_code(&e)
        }
    }
}

/// 2 for numerical failures, 1 for everything else.
pub fn exit_code(e: &LrmarError) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Select(a) => select(a),
        Command::Transform(a) => transform_cmd(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Predict(a) => predict(a),
        Command::Wcca(a) => wcca(a),
        Command::Bench(a) => bench(a),
    }
}

fn check_input(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(LrmarError::Validation(format!("input file {} not found", path.display())))
    }
}

fn check_output(path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    if path.is_dir() {
        return Err(LrmarError::Validation(format!("output {} is a directory", path.display())));
    }
    if dir.is_dir() {
        Ok(())
    } else {
        Err(LrmarError::Validation(format!(
            "output directory {} does not exist",
            dir.display()
        )))
    }
}

fn read_series(path: &Path) -> Result<TimeSeries> {
    TimeSeries::from_csv_path(path).map_err(|e| match e {
        LrmarError::Csv(_) | LrmarError::Format(_) | LrmarError::Validation(_) => {
            LrmarError::Format(format!("reading {}: {e}", path.display()))
        }
        other => other,
    })
}

fn write_matrix(path: &Path, header: &[String], m: &DMatrix<f64>) -> Result<()> {
    write_atomic(path, |w| write_matrix_csv(w, Some(header), m))
}

fn latent_header(q: usize) -> Vec<String> {
    (1..=q).map(|k| format!("z{k}")).collect()
}

/// Channel names, suffixed with the lead when the model predicts several lags.
fn output_header(model: &FittedModel) -> Vec<String> {
    let l = model.spec.l;
    (0..l)
        .flat_map(|lag| {
            model.channel_names.iter().map(move |name| {
                if l == 1 {
                    name.clone()
                } else {
                    format!("{name}+{}", lag + 1)
                }
            })
        })
        .collect()
}

fn simulate(a: SimulateArgs) -> Result<()> {
    check_output(&a.out)?;
    if let Some(p) = &a.clean_out {
        check_output(p)?;
    }
    let config = SinusoidConfig {
        t: a.t,
        n: a.n,
        seed: a.seed,
        noise_std: a.noise_std,
        ..SinusoidConfig::default()
    };
    let (noisy, clean) = simulate_sinusoids(&config)?;
    write_atomic(&a.out, |w| noisy.write_csv(w))?;
    if let Some(p) = &a.clean_out {
        write_atomic(p, |w| clean.write_csv(w))?;
    }
    Ok(())
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    check_input(&a.input)?;
    check_output(&a.out)?;
    let series = read_series(&a.input)?;
    let spec = a.hyper.apply(ModelSpec::new(a.p, a.q).with_lags(a.l));
    let model = fit(&series, &spec)?;
    info!(
        "free energy {:.6e} after {} cycles (converged: {})",
        model.free_energy(),
        model.iterations,
        model.converged
    );
    if !model.converged {
        log::warn!("stopped at max_iter={} before convergence", spec.max_iter);
    }
    save_model(&model, &a.out)
}

fn select(a: SelectArgs) -> Result<()> {
    check_input(&a.input)?;
    check_output(&a.out)?;
    let p_values = parse_range(&a.p)?;
    let q_values = parse_range(&a.q)?;
    let series = read_series(&a.input)?;
    let template = a
        .hyper
        .apply(ModelSpec::new(p_values[0], q_values[0]).with_lags(a.l));
    let grid = grid_select(
        &series,
        &p_values,
        &q_values,
        &template,
        SelectOptions { repeats: a.repeats, workers: a.workers },
    )?;
    write_atomic(&a.out, |w| grid.write_csv(w))?;
    let (p, q) = grid.best()?;
    println!("best P={p} Q={q}");
    Ok(())
}

fn transform_cmd(a: TransformArgs) -> Result<()> {
    check_input(&a.model)?;
    check_input(&a.input)?;
    check_output(&a.out)?;
    let model = load_model(&a.model)?;
    let series = read_series(&a.input)?;
    let z = transform(&model, &series)?;
    write_matrix(&a.out, &latent_header(model.spec.q), &z)
}

fn reconstruct_cmd(a: ReconstructArgs) -> Result<()> {
    check_input(&a.model)?;
    check_input(&a.input)?;
    check_output(&a.out)?;
    let model = load_model(&a.model)?;
    let z = read_matrix_csv(std::fs::File::open(&a.input)?)?;
    let y = reconstruct(&model, &z, a.original_units)?;
    write_matrix(&a.out, &output_header(&model), &y)
}

fn predict(a: PredictArgs) -> Result<()> {
    check_input(&a.model)?;
    check_input(&a.input)?;
    check_output(&a.out)?;
    if let Some(p) = &a.cov_out {
        check_output(p)?;
    }
    let model = load_model(&a.model)?;
    let series = read_series(&a.input)?;
    if series.channels() != model.channels() {
        return Err(LrmarError::Dimension(format!(
            "model has {} channels, series has {}",
            model.channels(),
            series.channels()
        )));
    }
    let (p, n, l) = (model.spec.p, model.channels(), model.spec.l);
    let t = series.len();
    if t < p {
        return Err(LrmarError::Dimension(format!("need at least P={p} rows, got {t}")));
    }
    let centered = series.center_with(&model.means)?;
    let data = centered.data();
    let mut means = DMatrix::zeros(t - p + 1, n * l);
    let mut cov = None;
    for (row, origin) in (p..=t).enumerate() {
        let history = DMatrix::from_fn(p, n, |i, ch| data[(origin - 1 - i, ch)]);
        let (mean, c) = predict_one_step(&model, &history)?;
        for j in 0..n * l {
            means[(row, j)] = mean[j] + model.means[j % n];
        }
        cov.get_or_insert(c);
    }
    write_matrix(&a.out, &output_header(&model), &means)?;
    if let (Some(path), Some(c)) = (&a.cov_out, cov) {
        write_matrix(path, &output_header(&model), &c)?;
    }
    Ok(())
}

fn wcca(a: WccaArgs) -> Result<()> {
    check_input(&a.input)?;
    check_output(&a.out)?;
    if let Some(p) = &a.z_out {
        check_output(p)?;
    }
    let series = read_series(&a.input)?;
    let spec = a.hyper.apply(ModelSpec::new(a.p, a.q).with_lags(a.p));
    let post = fit_wcca(&series, &spec)?;
    let json = wcca_to_json(&post)?;
    write_atomic(&a.out, |w| Ok(w.write_all(json.as_bytes())?))?;
    if let Some(p) = &a.z_out {
        write_matrix(p, &latent_header(a.q), &post.z_bar)?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    check_output(&a.out)?;
    let q_values = parse_range(&a.q)?;
    let mut records = Vec::new();
    for seed in a.seed..a.seed + a.seeds {
        let config = SinusoidConfig {
            t: a.t,
            n: a.n,
            seed,
            noise_std: a.noise_std,
            ..SinusoidConfig::default()
        };
        let (noisy, clean) = simulate_sinusoids(&config)?;
        for &q in &q_values {
            for (target, series) in [(Target::Noisy, &noisy), (Target::Clean, &clean)] {
                records.push(BenchRecord {
                    method: "pca".into(),
                    q,
                    p: 0,
                    target,
                    explained_variance: pca_explained_variance(&noisy, series, q)?,
                    seed,
                });
            }
            let mut spec = ModelSpec::new(a.p, q).with_seed(seed).with_acceleration(a.accelerate);
            if let Some(m) = a.max_iter {
                spec.max_iter = m;
            }
            let model = fit(&noisy, &spec)?;
            for (target, series) in [(Target::Noisy, &noisy), (Target::Clean, &clean)] {
                records.push(BenchRecord {
                    method: "lrmar".into(),
                    q,
                    p: a.p,
                    target,
                    explained_variance: lrmar_explained_variance(&model, &noisy, series)?,
                    seed,
                });
            }
            info!("seed {seed} Q={q} done");
        }
    }
    write_atomic(&a.out, |w| write_bench_csv(w, &records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_flag_is_exit_one() {
        assert_eq!(run(["lrmar", "fit", "--bogus"]), 1);
        assert_eq!(run(["lrmar"]), 1);
        assert_eq!(run(["lrmar", "--help"]), 0);
    }

    #[test]
    fn missing_input_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("m.json");
        let code = run([
            "lrmar".as_ref(),
            "fit".as_ref(),
            "--in".as_ref(),
            dir.path().join("nope.csv").as_os_str(),
            "--P".as_ref(),
            "1".as_ref(),
            "--Q".as_ref(),
            "1".as_ref(),
            "--out".as_ref(),
            out.as_os_str(),
        ] as [&std::ffi::OsStr; 10]);
        assert_eq!(code, 1);
        assert!(!out.exists());
    }

    #[test]
    fn hyper_overrides() {
        let h = HyperArgs {
            hyper: Some(0.5),
            iota: None,
            a: Some(2.0),
            kappa: None,
            b: None,
            nu: Some(3.0),
            c: None,
            tol: Some(1e-6),
            max_iter: Some(7),
            seed: 9,
            random_init: true,
            accelerate: true,
        };
        let s = h.apply(ModelSpec::new(2, 2));
        assert_eq!(s.iota, 0.5);
        assert_eq!(s.a, Rates::Uniform(2.0));
        assert_eq!(s.nu, 3.0);
        assert_eq!(s.b, Rates::Uniform(0.5));
        assert_eq!((s.tol, s.max_iter, s.seed), (1e-6, 7, 9));
        assert_eq!(s.init, InitMethod::Random);
        assert!(s.accelerate);
    }
}
