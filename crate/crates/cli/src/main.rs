use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use neuromimo::harness::{
    parse_detectors, parse_snr_range, parse_usize_list, report_op_counts, run_attempts_study,
    run_ber_sweep, run_local_minima_study, write_ber_results, write_landscape_csv,
    write_opcount_csv, ExperimentConfig,
};
use neuromimo::linear::REFERENCE_CONFIGS;
use neuromimo::model::{bits_to_qpsk, complex_to_real, generate_rayleigh_channel, transmit};
use neuromimo::qubo::{build_qubo, ml_brute_force, objective, MAX_ENUMERATION_BITS};
use neuromimo::seed::{derive_rng, stream};
use neuromimo::snn::{decode, init_network, run};
use neuromimo::{LifParams, SnrSpec, QPSK_ALPHA};
use rand::Rng;

#[derive(Parser)]
#[command(name = "neuromimo", version, about = "Spiking-network MU-MIMO detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER versus SNR for the selected detectors.
    Ber(SweepArgs),
    /// Mean number of 1-flip local minima versus spatial ratio.
    Landscape(LandscapeArgs),
    /// SNN BER under several attempt budgets on the same transmissions.
    Attempts(AttemptsArgs),
    /// Operation counts of MMSE versus QUBO construction.
    Opcount(OpcountArgs),
    /// Spike raster of the network for a single transmission.
    SpikeDump(SpikeDumpArgs),
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    antennas: Option<usize>,
    #[arg(long)]
    streams: Option<usize>,
    /// `start:stop:step` in dB (inclusive) or a single value.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    tx_per_frame: Option<usize>,
    /// Comma-separated subset of zf,mmse,snn,ml.
    #[arg(long)]
    detectors: Option<String>,
    /// SNN attempts per transmission.
    #[arg(long)]
    attempts: Option<usize>,
    /// Variance of the stochastic input current.
    #[arg(long)]
    sigma_v_sq: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Result CSV; a JSON sidecar with the full config is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_json_file(p)
                .with_context(|| format!("reading config {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.antennas {
            c.antennas = v;
        }
        if let Some(v) = self.streams {
            c.streams = v;
        }
        if let Some(s) = &self.snr {
            c.snr_db = parse_snr_range(s)?;
        }
        if let Some(v) = self.frames {
            c.frames = v;
        }
        if let Some(v) = self.tx_per_frame {
            c.tx_per_frame = v;
        }
        if let Some(s) = &self.detectors {
            c.detectors = parse_detectors(s)?;
        }
        if let Some(v) = self.attempts {
            c.attempts = v;
        }
        if let Some(v) = self.sigma_v_sq {
            c.lif.sigma_v_sq = v;
        }
        if let Some(v) = self.steps {
            c.lif.steps = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(p) = &self.out {
            c.output = Some(p.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
struct AttemptsArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Comma-separated attempt budgets, e.g. `1,20,40`.
    #[arg(long)]
    attempts_list: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct LandscapeConfig {
    antennas: Vec<usize>,
    streams: usize,
    instances: usize,
    /// `None` draws noiseless observations.
    snr_db: Option<f64>,
    seed: u64,
    output: Option<PathBuf>,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            antennas: vec![4, 8, 16, 32],
            streams: 4,
            instances: 200,
            snr_db: Some(10.0),
            seed: 1,
            output: None,
        }
    }
}

#[derive(Args, Debug)]
struct LandscapeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated antenna counts.
    #[arg(long)]
    antennas: Option<String>,
    #[arg(long)]
    streams: Option<usize>,
    /// Random instances per antenna count.
    #[arg(long)]
    instances: Option<usize>,
    /// Observation SNR in dB.
    #[arg(long, conflicts_with = "noiseless")]
    snr: Option<f64>,
    /// Count minima of noiseless instances.
    #[arg(long)]
    noiseless: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl LandscapeArgs {
    fn resolve(&self) -> Result<LandscapeConfig> {
        let mut c: LandscapeConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => LandscapeConfig::default(),
        };
        if let Some(s) = &self.antennas {
            c.antennas = parse_usize_list(s)?;
        }
        if let Some(v) = self.streams {
            c.streams = v;
        }
        if let Some(v) = self.instances {
            c.instances = v;
        }
        if let Some(v) = self.snr {
            c.snr_db = Some(v);
        }
        if self.noiseless {
            c.snr_db = None;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(p) = &self.out {
            c.output = Some(p.clone());
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct OpcountConfig {
    /// `(antennas, streams)` pairs, the nine reference sizes by default.
    configs: Vec<(usize, usize)>,
    output: Option<PathBuf>,
}

impl Default for OpcountConfig {
    fn default() -> Self {
        Self {
            configs: REFERENCE_CONFIGS.to_vec(),
            output: None,
        }
    }
}

#[derive(Args, Debug)]
struct OpcountArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// System sizes as `MxK` separated by commas, e.g. `16x4,32x16`.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_sizes(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (m, k) = t
                .trim()
                .split_once(['x', 'X'])
                .with_context(|| format!("bad size `{t}`, expected MxK"))?;
            Ok((m.parse()?, k.parse()?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct SpikeDumpConfig {
    antennas: usize,
    streams: usize,
    snr_db: f64,
    seed: u64,
    lif: LifParams,
    /// Raster text file; stdout when absent.
    output: Option<PathBuf>,
    /// Optional QUBO matrix dump.
    qubo_output: Option<PathBuf>,
}

impl Default for SpikeDumpConfig {
    fn default() -> Self {
        Self {
            antennas: 16,
            streams: 4,
            snr_db: 10.0,
            seed: 1,
            lif: LifParams::default(),
            output: None,
            qubo_output: None,
        }
    }
}

#[derive(Args, Debug)]
struct SpikeDumpArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    antennas: Option<usize>,
    #[arg(long)]
    streams: Option<usize>,
    /// Single SNR in dB.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    sigma_v_sq: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    qubo_out: Option<PathBuf>,
}

impl SpikeDumpArgs {
    fn resolve(&self) -> Result<SpikeDumpConfig> {
        let mut c: SpikeDumpConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => SpikeDumpConfig::default(),
        };
        if let Some(v) = self.antennas {
            c.antennas = v;
        }
        if let Some(v) = self.streams {
            c.streams = v;
        }
        if let Some(v) = self.snr {
            c.snr_db = v;
        }
        if let Some(v) = self.sigma_v_sq {
            c.lif.sigma_v_sq = v;
        }
        if let Some(v) = self.steps {
            c.lif.steps = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(p) = &self.out {
            c.output = Some(p.clone());
        }
        if let Some(p) = &self.qubo_out {
            c.qubo_output = Some(p.clone());
        }
        c.lif.validate()?;
        Ok(c)
    }
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_ber(records: &[neuromimo::BerRecord]) {
    println!("{:>8} {:>8} {:>8} {:>10} {:>12} {:>12}", "snr_db", "detector", "attempts", "errors", "bits", "ber");
    for r in records {
        println!(
            "{:>8} {:>8} {:>8} {:>10} {:>12} {:>12.4e}",
            r.snr_db, r.detector, r.attempts, r.bit_errors, r.bits_total, r.ber
        );
    }
}

fn cmd_ber(args: &SweepArgs) -> Result<()> {
    let config = args.resolve()?;
    log::info!("config hash {}", config.hash());
    let records = run_ber_sweep(&config)?;
    print_ber(&records);
    if let Some(path) = &config.output {
        write_ber_results(path, "ber", &config, &records)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_attempts(args: &AttemptsArgs) -> Result<()> {
    let mut config = args.sweep.resolve()?;
    if let Some(s) = &args.attempts_list {
        config.attempts_list = parse_usize_list(s)?;
    }
    config.validate()?;
    log::info!("config hash {}", config.hash());
    let records = run_attempts_study(&config)?;
    print_ber(&records);
    if let Some(path) = &config.output {
        write_ber_results(path, "attempts", &config, &records)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_landscape(args: &LandscapeArgs) -> Result<()> {
    let c = args.resolve()?;
    let rows = run_local_minima_study(&c.antennas, c.streams, c.instances, c.snr_db, c.seed)?;
    println!("{:>8} {:>8} {:>8} {:>10} {:>12}", "antennas", "streams", "ratio", "instances", "mean_minima");
    for r in &rows {
        println!(
            "{:>8} {:>8} {:>8} {:>10} {:>12.4}",
            r.antennas, r.streams, r.spatial_ratio, r.instances, r.mean_local_minima
        );
    }
    if let Some(path) = &c.output {
        write_landscape_csv(path, &rows, c.snr_db)?;
    }
    Ok(())
}

fn cmd_opcount(args: &OpcountArgs) -> Result<()> {
    let mut c: OpcountConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => OpcountConfig::default(),
    };
    if let Some(s) = &args.sizes {
        c.configs = parse_sizes(s)?;
    }
    if let Some(p) = &args.out {
        c.output = Some(p.clone());
    }
    let report = report_op_counts(&c.configs);
    println!("{:>8} {:>8} {:>12} {:>12} {:>10}", "antennas", "streams", "mmse_ops", "qubo_ops", "reduction");
    for r in &report.rows {
        println!(
            "{:>8} {:>8} {:>12.1} {:>12.1} {:>9.1}%",
            r.antennas,
            r.streams,
            r.mmse.total(),
            r.qubo.total(),
            100.0 * r.reduction
        );
    }
    if let Some(avg) = report.average_reduction {
        println!("average reduction {:.1}%", 100.0 * avg);
    }
    if let Some(path) = &c.output {
        write_opcount_csv(path, &report)?;
    }
    Ok(())
}

fn cmd_spike_dump(args: &SpikeDumpArgs) -> Result<()> {
    let c = args.resolve()?;
    let n_bits = 2 * c.streams;
    let mut rng = derive_rng(c.seed, &[stream::CHANNEL, 0]);
    let channel = generate_rayleigh_channel(c.antennas, c.streams, &mut rng)?;
    let mut bit_rng = derive_rng(c.seed, &[stream::BITS, 0, 0]);
    let bits: Vec<u8> = (0..n_bits).map(|_| u8::from(bit_rng.random::<bool>())).collect();
    let y = transmit(
        &channel,
        &bits_to_qpsk(&bits)?,
        SnrSpec::from_db(c.snr_db),
        &mut derive_rng(c.seed, &[stream::NOISE, 0, 0]),
    )?;
    let system = complex_to_real(&channel, &y)?;
    let inst = build_qubo(&system, QPSK_ALPHA)?;

    let net = init_network(&inst);
    let mut snn_rng = derive_rng(c.seed, &[stream::SNN, 0]);
    let raster = if c.lif.sigma_v_sq > 0.0 {
        run(&net, &c.lif, Some(&mut snn_rng))?
    } else {
        run(&net, &c.lif, None)?
    };
    let decoded = decode(&raster, &c.lif)?;

    match &c.output {
        Some(path) => {
            let mut w = create_file(path)?;
            raster.write_text(&mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            raster.write_text(&mut w)?;
            w.flush()?;
        }
    }
    if let Some(path) = &c.qubo_output {
        let mut w = create_file(path)?;
        inst.write_text(&mut w)?;
        w.flush()?;
    }

    let fmt = |b: &[u8]| b.iter().map(|v| v.to_string()).collect::<String>();
    let mut err = io::stderr().lock();
    writeln!(err, "transmitted {}", fmt(&bits))?;
    writeln!(err, "snn         {}  objective {:.6}", fmt(&decoded), objective(&inst, &decoded)?)?;
    if n_bits <= MAX_ENUMERATION_BITS {
        let ml = ml_brute_force(&system, QPSK_ALPHA)?;
        writeln!(err, "ml          {}  objective {:.6}", fmt(&ml.bits), objective(&inst, &ml.bits)?)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Ber(a) => cmd_ber(a),
        Command::Attempts(a) => cmd_attempts(a),
        Command::Landscape(a) => cmd_landscape(a),
        Command::Opcount(a) => cmd_opcount(a),
        Command::SpikeDump(a) => cmd_spike_dump(a),
    }
}
