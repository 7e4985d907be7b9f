//! `sclf` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::flip_engine::{FlipPlan, MetricVariant};
use crate::nn_runtime::load_model;
use crate::polar_code::{CodeSpec, CrcPoly, MessageFrame};
use crate::scl_decoder::{ca_scl_select, SclDecoder};
use crate::sim_harness::dataset::{generate_dataset, DatasetConfig, DatasetKind, RankingSource};
use crate::sim_harness::{run_fer, CodeConfig, DecoderKind, SimConfig, SimError};

#[derive(Debug, Parser)]
#[command(name = "sclf", version, about = "Polar list-flip decoders and Monte-Carlo harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo FER/ADA over an SNR grid.
    Simulate(SimulateArgs),
    /// Labeled datasets for the flip and CFC models.
    GenDataset(DatasetArgs),
    /// Print a model file's architecture.
    InspectModel { path: PathBuf },
    /// Noiseless encode/decode round trip over a few codes.
    EncodeDecodeSelftest {
        #[arg(long, default_value_t = 4)]
        list_size: usize,
    },
}

#[derive(Debug, Args)]
struct CodeArgs {
    /// log2 of the code length.
    #[arg(long)]
    n: Option<u32>,
    /// Message bits.
    #[arg(long = "k")]
    k: Option<usize>,
    /// CRC polynomial: crc8, crc16, crc24c, hex, or `none`.
    #[arg(long)]
    crc: Option<String>,
    #[arg(long)]
    list_size: Option<usize>,
}

impl CodeArgs {
    fn apply(&self, code: &mut CodeConfig, list_size: &mut usize) -> Result<(), SimError> {
        if let Some(n) = self.n {
            code.n = n;
        }
        if let Some(k) = self.k {
            code.k = k;
        }
        if let Some(c) = &self.crc {
            code.crc_poly = match c.as_str() {
                "none" => None,
                s => Some(s.parse::<CrcPoly>().map_err(|e| SimError::Config(e.to_string()))?),
            };
        }
        if let Some(l) = self.list_size {
            *list_size = l;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    decoder: Option<DecoderKind>,
    /// Comma-separated Eb/N0 values in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Frame cap per SNR point.
    #[arg(long)]
    frames: Option<u64>,
    /// Stop a point after this many frame errors (0 disables).
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    code: CodeArgs,
    /// exact, sum or pm2.
    #[arg(long)]
    metric: Option<MetricVariant>,
    #[arg(long)]
    beta: Option<f64>,
    /// Flip budget T (T1 for nested decoders).
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    t2_outer: Option<usize>,
    #[arg(long)]
    t2_inner: Option<usize>,
    #[arg(long)]
    flip1_model: Option<PathBuf>,
    #[arg(long)]
    flip2_model: Option<PathBuf>,
    #[arg(long)]
    cfc_model: Option<PathBuf>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON run report path.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl SimulateArgs {
    fn config(&self) -> Result<SimConfig, SimError> {
        let mut cfg = match (&self.config, self.decoder) {
            (Some(path), _) => SimConfig::load(path)?,
            (None, Some(d)) => SimConfig::new(d, Vec::new()),
            (None, None) => return Err(SimError::Config("give --config or --decoder".into())),
        };
        if let Some(d) = self.decoder {
            cfg.decoder = d;
        }
        if let Some(s) = &self.snr {
            cfg.snr_db = s.clone();
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$(
                if let Some(v) = self.$flag.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        set!(frames => max_frames, min_errors => min_frame_errors, seed => seed, metric => metric,
             beta => beta, t => t, t2_outer => t2_outer, t2_inner => t2_inner);
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if self.flip1_model.is_some() {
            cfg.models.flip1 = self.flip1_model.clone();
        }
        if self.flip2_model.is_some() {
            cfg.models.flip2 = self.flip2_model.clone();
        }
        if self.cfc_model.is_some() {
            cfg.models.cfc = self.cfc_model.clone();
        }
        self.code.apply(&mut cfg.code, &mut cfg.list_size)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct DatasetArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kind: Option<DatasetKind>,
    /// Training samples.
    #[arg(long)]
    count: Option<usize>,
    /// Validation samples.
    #[arg(long)]
    val_count: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Feature depth j (2j values per step).
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    cfc_budget: Option<usize>,
    /// Rank CFC first flips with this flip-1 model instead of the pm2 metric.
    #[arg(long)]
    flip1_model: Option<PathBuf>,
    #[arg(long)]
    max_frames_per_snr: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    code: CodeArgs,
    /// Output prefix; writes <out>.train.{bin,json} and <out>.validation.{bin,json}.
    #[arg(long)]
    out: PathBuf,
}

impl DatasetArgs {
    fn config(&self) -> Result<DatasetConfig, SimError> {
        let mut cfg = match (&self.config, self.kind) {
            (Some(path), _) => DatasetConfig::load(path)?,
            (None, Some(k)) => DatasetConfig::new(k),
            (None, None) => return Err(SimError::Config("give --config or --kind".into())),
        };
        if let Some(k) = self.kind {
            cfg.kind = k;
        }
        if let Some(s) = &self.snr {
            cfg.snr_db = s.clone();
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$(
                if let Some(v) = self.$flag {
                    cfg.$field = v;
                }
            )*};
        }
        set!(count => train_count, val_count => validation_count, seed => seed, depth => feature_depth,
             cfc_budget => cfc_budget, max_frames_per_snr => max_frames_per_snr);
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if let Some(p) = &self.flip1_model {
            cfg.flip1_model = Some(p.clone());
            cfg.cfc_ranking = RankingSource::Flip1Model;
        }
        self.code.apply(&mut cfg.code, &mut cfg.list_size)?;
        Ok(cfg)
    }
}

fn simulate(args: &SimulateArgs) -> Result<(), SimError> {
    let cfg = args.config()?;
    let report = run_fer(&cfg)?;
    match &args.csv {
        Some(path) => std::fs::write(path, report.csv_string()).map_err(|e| io(path, e))?,
        None => print!("{}", report.csv_string()),
    }
    if let Some(path) = &args.report {
        std::fs::write(path, report.to_json()).map_err(|e| io(path, e))?;
    }
    for p in &report.points {
        eprintln!(
            "{:>7} dB  frames {:>9}  errors {:>6}  FER {:.3e} [{:.3e}, {:.3e}]  ADA {:.4}  {:.1}s",
            p.snr_db, p.frames, p.errors, p.fer, p.fer_ci95.0, p.fer_ci95.1, p.ada, p.wall_seconds
        );
    }
    Ok(())
}

fn io(path: &std::path::Path, source: std::io::Error) -> SimError {
    SimError::Io { path: path.display().to_string(), source }
}

fn gen_dataset(args: &DatasetArgs) -> Result<(), SimError> {
    let cfg = args.config()?;
    let (train, val) = generate_dataset(&cfg, &args.out)?;
    println!("{}", train.manifest.display());
    println!("{}", val.manifest.display());
    Ok(())
}

fn inspect_model(path: &std::path::Path) -> Result<(), SimError> {
    let m = load_model(path).map_err(|source| SimError::ModelLoad { path: path.display().to_string(), source })?;
    let a = m.arch();
    println!("kind: {}", a.model_kind);
    println!("sequence length S: {}", a.seq_len());
    println!("input_dim: {}", a.input_dim);
    println!("lstm: {} -> {}", a.lstm1_units, a.lstm2_units);
    println!("fc: {} ({:?})", a.fc_units, a.fc_activation);
    println!("out: {} ({:?})", a.out_units, a.out_activation);
    println!("input normalization: {}", m.input_scale.is_some() || m.input_offset.is_some());
    println!("parameters: {}", m.parameter_count());
    Ok(())
}

/// Codes exercised by the self-test: `(n, K, CRC)`.
pub const SELFTEST_CODES: [(u32, usize, CrcPoly); 4] =
    [(7, 56, CrcPoly::CRC8), (8, 120, CrcPoly::CRC8), (10, 496, CrcPoly::CRC16), (9, 256, CrcPoly::CRC24C)];

fn selftest(list_size: usize) -> Result<bool, SimError> {
    let mut all_ok = true;
    for (n, k, crc) in SELFTEST_CODES {
        let spec = CodeSpec::with_crc(n, k, Some(crc))?;
        let mut dec = SclDecoder::new(&spec, list_size)?;
        let mut ok = true;
        for pattern in 0..4usize {
            let bits: Vec<u8> = (0..k)
                .map(|i| match pattern {
                    0 => 0,
                    1 => 1,
                    p => ((i * (2 * p + 1) + p) % 3 == 0) as u8,
                })
                .collect();
            let frame = MessageFrame::new(&spec, &bits)?;
            let x = spec.encode(&frame)?;
            let llrs: Vec<f64> = x.iter().map(|&b| if b == 0 { 20.0 } else { -20.0 }).collect();
            let out = dec.decode(&llrs, &FlipPlan::empty(), None)?;
            let (path, pass) = ca_scl_select(&out.paths, &spec)?;
            ok &= pass && spec.message_of(&path.u) == bits;
        }
        println!(
            "({}, {}+{}) {crc}: {}",
            spec.len(),
            k,
            spec.crc_bits(),
            if ok { "ok" } else { "FAILED" }
        );
        all_ok &= ok;
    }
    Ok(all_ok)
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::GenDataset(a) => gen_dataset(a),
        Command::InspectModel { path } => inspect_model(path),
        Command::EncodeDecodeSelftest { list_size } => match selftest(*list_size) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("error: self-test failed");
                return 1;
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
