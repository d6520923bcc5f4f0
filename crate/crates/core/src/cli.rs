//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for data
//! errors (malformed or inconsistent inputs).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use crate::capacity::{exact_capacity, CapacityReport};
use crate::channels::{fit_channel, ChannelParams, ChannelSpec, FitResult};
use crate::dataio::{
    builtin_appendix, builtin_dataset, load_appendix_dir, report_to_string, sort_report_rows,
    AppendixDataset, ReportRow,
};
use crate::error::{Error, Result};
use crate::measure::{
    exact_record_with_spec, record_to_accessible_choi, sampled_record_with_spec, CorrelatorRecord,
    RecordMode, SamplingConfig,
};
use crate::witness::{
    bootstrap_by, bootstrap_error, q_det, q_det_warm, q_lim, BootstrapReport, Convention,
    LimReport, LimSource, PatternProduct, SearchConfig, WitnessResult,
};

#[derive(Debug, Parser)]
#[command(
    name = "capwit",
    version,
    about = "Capacity witnesses for correlated Pauli channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact capacity of the correlated bit-flip channel.
    Theory {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        mu: f64,
    },
    /// Witness from a record file or an appendix dataset.
    Witness(WitnessArgs),
    /// Simulate the prepare-and-measure scheme and write a record.
    Simulate(SimulateArgs),
    /// Fit (p, μ) to an appendix dataset.
    Fit(DatasetArgs),
    /// Process every appendix dataset into the report CSV.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Grid points per angle.
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    /// Refine the best grid points with a simplex search.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub refine: bool,
}

impl SearchArgs {
    pub fn config(&self) -> SearchConfig {
        SearchConfig {
            grid: self.grid,
            refine: self.refine,
            ..SearchConfig::default()
        }
    }
}

/// Input: a file, or a shipped appendix dataset selected by its labels.
#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long, conflicts_with_all = ["p", "mu"])]
    pub input: Option<PathBuf>,
    /// Label of a shipped dataset, e.g. 1/2.
    #[arg(long, requires = "mu")]
    pub p: Option<String>,
    #[arg(long, requires = "p")]
    pub mu: Option<String>,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[command(flatten)]
    pub source: DatasetArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Fill missing single-pair data from a fitted channel.
    #[arg(long)]
    pub fit: bool,
    /// Bootstrap resamples for the uncertainty.
    #[arg(long, value_name = "N", requires = "seed")]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the full result as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub mu: f64,
    /// Shots per setting; exact probabilities when absent.
    #[arg(long, requires = "seed")]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Poisson-distributed totals per setting.
    #[arg(long, requires = "shots")]
    pub poisson: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Directory of dataset files; the shipped fixtures when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, value_name = "N", requires = "seed")]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Bootstrap request.
#[derive(Clone, Copy, Debug)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
}

fn bootstrap_from(n: Option<usize>, seed: Option<u64>) -> Option<Bootstrap> {
    n.zip(seed)
        .map(|(resamples, seed)| Bootstrap { resamples, seed })
}

pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Domain(_) => 2,
        _ => 3,
    }
}

pub fn cmd_theory(p: f64, mu: f64) -> Result<String> {
    let rep = CapacityReport::for_params(&ChannelParams::new(p, mu)?);
    Ok(format!(
        "p = {p:.6}, mu = {mu:.6}: Q = {:.6}, Q1 = {:.6}, Q2 = {:.6}, Q_lim = {:.6}, Delta_Q = {:.6}",
        rep.q_exact,
        rep.q1,
        rep.q2,
        rep.q_lim,
        rep.correlation_gain()
    ))
}

/// Everything computed for one appendix dataset.
#[derive(Clone, Debug, Serialize)]
pub struct DatasetAnalysis {
    pub fit_p: f64,
    pub fit_mu: Option<f64>,
    pub fit_visibility: f64,
    pub fit_chi2: f64,
    pub witness: WitnessResult,
    pub lim: LimReport,
    pub row: ReportRow,
}

/// Converts a dataset to the published convention expected by the fit.
fn published_correlators(ds: &AppendixDataset) -> crate::channels::CorrelatorMatrix {
    let mut m = ds.correlators();
    if ds.convention == Convention::Transpose {
        for (i, row) in m.values.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let pattern = PatternProduct::parse(&format!(
                    "{0}{0}{1}{1}",
                    ["X", "Y", "Z"][i],
                    ["X", "Y", "Z"][j]
                ))
                .expect("valid pattern");
                *v = Convention::NoTranspose.from_transpose(&pattern, *v);
            }
        }
    }
    m
}

pub fn fit_dataset(ds: &AppendixDataset) -> Result<FitResult> {
    fit_channel(&published_correlators(ds))
}

fn fitted_params(fit: &FitResult) -> Result<ChannelParams> {
    fit.params().ok_or_else(|| {
        Error::DataIntegrity(format!(
            "fitted p = {} leaves the correlation undetermined",
            fit.p
        ))
    })
}

/// Bootstrap of a dataset witness. Each resample redraws the nine measured
/// correlators, refits the model and refills the single-pair entries from
/// it, so the fit uncertainty reaches the model-filled coefficients too.
pub fn bootstrap_dataset(
    ds: &AppendixDataset,
    nominal: &WitnessResult,
    boot: Bootstrap,
    cfg: &SearchConfig,
) -> Result<BootstrapReport> {
    bootstrap_by(boot.resamples, boot.seed, |rng| {
        let drawn = ds.resample(rng);
        let model = fitted_params(&fit_dataset(&drawn)?)?;
        let choi = drawn.to_accessible_choi(&model)?;
        q_det_warm(&choi, &nominal.candidates, cfg).map(|r| r.q_det_raw)
    })
}

pub fn analyze_dataset(
    ds: &AppendixDataset,
    cfg: &SearchConfig,
    boot: Option<Bootstrap>,
) -> Result<DatasetAnalysis> {
    let fit = fit_dataset(ds)?;
    let model = fitted_params(&fit)?;
    let choi = ds.to_accessible_choi(&model)?;
    let mut witness = q_det(&choi, cfg)?;
    if let Some(b) = boot {
        witness.sigma_q = Some(bootstrap_dataset(ds, &witness, b, cfg)?.sigma_q);
    }
    let lim = q_lim(LimSource::Fitted(model), cfg)?;
    let mut assumptions: Vec<String> = witness
        .assumptions
        .iter()
        .map(|a| a.label().to_string())
        .collect();
    assumptions.push("fitted_q_lim".into());
    let row = ReportRow {
        p: ds.p.to_f64(),
        mu: ds.mu.to_f64(),
        q_theory: exact_capacity(&ds.params()?),
        q_det_tot_raw: witness.q_det_raw,
        q_det_tot: witness.q_det,
        sigma_q: witness.sigma_q,
        q1: lim.q1,
        q2: lim.q2,
        q_lim: lim.q_lim,
        clamped: witness.clamped,
        assumptions,
    };
    Ok(DatasetAnalysis {
        fit_p: fit.p,
        fit_mu: fit.mu,
        fit_visibility: fit.visibility,
        fit_chi2: fit.chi2,
        witness,
        lim,
        row,
    })
}

/// Witness and limit for a simulated (or otherwise complete) record.
#[derive(Clone, Debug, Serialize)]
pub struct RecordAnalysis {
    pub witness: WitnessResult,
    pub lim: Option<LimReport>,
}

pub fn analyze_record(
    rec: &CorrelatorRecord,
    cfg: &SearchConfig,
    boot: Option<Bootstrap>,
) -> Result<RecordAnalysis> {
    let choi = record_to_accessible_choi(rec)?;
    let mut witness = q_det(&choi, cfg)?;
    if let Some(b) = boot {
        witness.sigma_q = Some(bootstrap_error(&choi, &witness, b.resamples, b.seed, cfg)?.sigma_q);
    }
    let lim = if rec.n_pairs == 2 {
        Some(q_lim(LimSource::Marginals(&choi), cfg)?)
    } else {
        None
    };
    Ok(RecordAnalysis { witness, lim })
}

enum Input {
    Record(CorrelatorRecord),
    Dataset(AppendixDataset),
}

fn read_input(src: &DatasetArgs) -> Result<Input> {
    match (&src.input, &src.p, &src.mu) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path)?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            if value.get("entries").is_some() {
                Ok(Input::Dataset(AppendixDataset::from_json(&text)?))
            } else {
                Ok(Input::Record(CorrelatorRecord::from_json(&text)?))
            }
        }
        (None, Some(p), Some(mu)) => Ok(Input::Dataset(builtin_dataset(p, mu)?)),
        _ => Err(Error::Config(
            "give --input FILE or --p/--mu of a shipped dataset".into(),
        )),
    }
}

fn emit(out: &Option<PathBuf>, json: &impl Serialize) -> Result<()> {
    if let Some(path) = out {
        fs::write(path, serde_json::to_string_pretty(json)? + "\n")?;
    }
    Ok(())
}

fn witness_line(w: &WitnessResult) -> String {
    let sigma = w
        .sigma_q
        .map(|s| format!("{s:.6}"))
        .unwrap_or_else(|| "-".into());
    format!(
        "Q_det_tot = {:.6} (raw {:.6}, clamped {}), sigma_Q = {sigma}, basis {}",
        w.q_det, w.q_det_raw, w.clamped, w.best_basis
    )
}

fn lim_line(l: &LimReport) -> String {
    format!(
        "Q1 = {:.6}, Q2 = {:.6}, Q_lim = {:.6}{}",
        l.q1,
        l.q2,
        l.q_lim,
        if l.model_assisted {
            " (model-assisted)"
        } else {
            ""
        }
    )
}

pub fn cmd_witness(args: &WitnessArgs) -> Result<String> {
    let cfg = args.search.config();
    let boot = bootstrap_from(args.bootstrap, args.seed);
    match read_input(&args.source)? {
        Input::Dataset(ds) => {
            if !args.fit {
                return Err(Error::DataIntegrity(
                    "the dataset has no single-pair correlators or marginals; rerun with --fit"
                        .into(),
                ));
            }
            let a = analyze_dataset(&ds, &cfg, boot)?;
            emit(&args.out, &a)?;
            Ok(format!(
                "{}\n{}\nfit: p = {:.6}, mu = {}",
                witness_line(&a.witness),
                lim_line(&a.lim),
                a.fit_p,
                a.fit_mu
                    .map(|m| format!("{m:.6}"))
                    .unwrap_or_else(|| "-".into())
            ))
        }
        Input::Record(rec) => {
            let a = analyze_record(&rec, &cfg, boot)?;
            emit(&args.out, &a)?;
            let mut text = witness_line(&a.witness);
            if let Some(l) = &a.lim {
                text.push('\n');
                text.push_str(&lim_line(l));
            }
            Ok(text)
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let params = ChannelParams::new(args.p, args.mu)?;
    let spec = ChannelSpec::CorrelatedFlip {
        p: args.p,
        mu: args.mu,
    };
    let ch = crate::channels::correlated_channel(&params);
    let rec = match (args.shots, args.seed) {
        (Some(shots), Some(seed)) => {
            let cfg = SamplingConfig {
                shots_per_setting: shots,
                seed,
                poisson: args.poisson,
            };
            sampled_record_with_spec(&ch, &cfg, Some(spec))?
        }
        (Some(_), None) => return Err(Error::Config("sampling requires --seed".into())),
        _ => exact_record_with_spec(&ch, Some(spec))?,
    };
    fs::write(&args.out, rec.to_json()? + "\n")?;
    let mode = match rec.metadata.mode {
        RecordMode::Exact => "exact".to_string(),
        RecordMode::Sampled => format!("{} shots per setting", args.shots.unwrap_or_default()),
    };
    Ok(format!(
        "wrote {} settings ({mode}) to {}",
        rec.settings.len(),
        args.out.display()
    ))
}

pub fn cmd_fit(args: &DatasetArgs) -> Result<String> {
    let ds = match read_input(args)? {
        Input::Dataset(ds) => ds,
        Input::Record(_) => {
            return Err(Error::DataIntegrity(
                "fit expects an appendix-style dataset".into(),
            ))
        }
    };
    let fit = fit_dataset(&ds)?;
    Ok(format!(
        "label p = {}, mu = {}: fitted p = {:.6}, mu = {}, A_IX = {:.6}, visibility = {:.4}, chi2 = {:.3}",
        ds.p,
        ds.mu,
        fit.p,
        fit.mu.map(|m| format!("{m:.6}")).unwrap_or_else(|| "-".into()),
        fit.single_flip,
        fit.visibility,
        fit.chi2
    ))
}

/// Report rows for every dataset, sorted by `p` descending and `μ`
/// ascending.
pub fn reproduce(
    datasets: &[AppendixDataset],
    cfg: &SearchConfig,
    boot: Option<Bootstrap>,
) -> Result<Vec<ReportRow>> {
    let mut rows = datasets
        .iter()
        .map(|ds| analyze_dataset(ds, cfg, boot).map(|a| a.row))
        .collect::<Result<Vec<_>>>()?;
    sort_report_rows(&mut rows);
    Ok(rows)
}

pub fn cmd_reproduce(args: &ReproduceArgs) -> Result<String> {
    let datasets = match &args.input {
        Some(dir) => load_dir(dir)?,
        None => builtin_appendix()?,
    };
    let rows = reproduce(
        &datasets,
        &args.search.config(),
        bootstrap_from(args.bootstrap, args.seed),
    )?;
    let csv = report_to_string(&rows)?;
    match &args.out {
        Some(path) => {
            fs::write(path, &csv)?;
            Ok(format!("wrote {} rows to {}", rows.len(), path.display()))
        }
        None => Ok(csv.trim_end().to_string()),
    }
}

fn load_dir(dir: &Path) -> Result<Vec<AppendixDataset>> {
    let data = load_appendix_dir(dir)?;
    if data.is_empty() {
        return Err(Error::DataIntegrity(format!(
            "no datasets in {}",
            dir.display()
        )));
    }
    Ok(data)
}

pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Theory { p, mu } => cmd_theory(*p, *mu),
        Command::Witness(a) => cmd_witness(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    }
}

/// Parses `std::env::args`, runs the command and maps errors to exit codes.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
