//! `slepmom` command line front end.
//!
//! Exit codes: 0 on success, 2 for usage errors (unknown or invalid flags,
//! values that violate a precondition), 1 when reading inputs or computing
//! fails. Outputs are written to a temporary file in the target directory and
//! renamed into place.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dpss::{compute_dpss, BasisFile, DpssBasis, DpssParams};
use crate::harness::{
    child_seed, classification_sweep, load_dataset_dir, make_synthetic_dataset, rotation_stability,
    smooth_test_image, synthetic_images, SplitMode, SyntheticConfig, TrainConfig, TABLE_ANGLES,
    TABLE_FRACTIONS, TABLE_ORDERS,
};
use crate::imaging::{read_pgm, to_cartesian, to_polar, write_pgm, NoiseSpec, RasterImage};
use crate::moments::{compute_moments, invariants, reconstruct, MomentSet, MomentsFile};

const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "slepmom", version, about = "Slepian-based image moments and rotation invariants")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discrete prolate spheroidal sequences.
    #[command(subcommand)]
    Dpss(DpssCommand),
    /// Slepian-based moments of an image.
    #[command(subcommand)]
    Moments(MomentsCommand),
    /// Rotation invariants |S_mn| (n >= 0) as a one-row CSV.
    Invariants(InvariantsArgs),
    /// Rebuild an image from a moment dump.
    Reconstruct(ReconstructArgs),
    /// Invariants of one image over a set of rotations (CSV table + std row).
    RotateTest(StabilityArgs),
    /// Like rotate-test, with Gaussian noise added after each rotation.
    NoiseTest(NoiseTestArgs),
    /// Train-fraction classification sweep.
    Classify(ClassifyArgs),
    /// Synthetic inputs.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Debug, Subcommand)]
enum DpssCommand {
    /// Compute a basis and write it as JSON.
    Gen {
        /// Sequence length N.
        #[arg(long)]
        n: usize,
        /// Half bandwidth W, in (0, 0.5).
        #[arg(long)]
        w: f64,
        /// Number of sequences K <= N.
        #[arg(long)]
        k: usize,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Radial samples R of the polar grid.
    #[arg(long, default_value_t = 128)]
    radial: usize,
    /// Angular samples T of the polar grid.
    #[arg(long, default_value_t = 256)]
    angular: usize,
}

#[derive(Debug, Args)]
struct OrderArgs {
    /// Radial orders M (m = 0..M-1).
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Highest angular order L (n = -L..L).
    #[arg(long, default_value_t = 9)]
    l: usize,
}

#[derive(Debug, Subcommand)]
enum MomentsCommand {
    /// Compute S_mn of a PGM image and write them as JSON.
    Compute {
        /// Input binary PGM.
        #[arg(long)]
        image: PathBuf,
        /// Basis JSON from `dpss gen`.
        #[arg(long)]
        basis: PathBuf,
        #[command(flatten)]
        orders: OrderArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct InvariantsArgs {
    /// Input binary PGM (needs --basis).
    #[arg(long, conflicts_with = "moments", required_unless_present = "moments")]
    image: Option<PathBuf>,
    /// Moment dump from `moments compute`.
    #[arg(long)]
    moments: Option<PathBuf>,
    /// Basis JSON, required with --image.
    #[arg(long, required_unless_present = "moments")]
    basis: Option<PathBuf>,
    #[command(flatten)]
    orders: OrderArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    /// Moment dump from `moments compute`.
    #[arg(long)]
    moments: PathBuf,
    /// Basis JSON the moments were computed with.
    #[arg(long)]
    basis: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Render onto a SIZE x SIZE raster instead of writing the polar grid.
    #[arg(long)]
    size: Option<usize>,
    /// Output PGM path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    /// Input binary PGM.
    #[arg(long)]
    image: PathBuf,
    /// Basis JSON from `dpss gen`.
    #[arg(long)]
    basis: PathBuf,
    /// Comma-separated rotation angles in degrees.
    #[arg(long, value_delimiter = ',', default_values_t = TABLE_ANGLES)]
    angles: Vec<f64>,
    /// Comma-separated m:n columns [default: the ten reference columns].
    #[arg(long, value_delimiter = ',', value_parser = parse_order)]
    orders: Vec<(usize, usize)>,
    #[command(flatten)]
    grid: GridArgs,
    /// Decimal places in the CSV; shortest round-trip form when omitted.
    #[arg(long)]
    precision: Option<usize>,
    /// Also write the full report with metadata as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct NoiseTestArgs {
    #[command(flatten)]
    table: StabilityArgs,
    /// Signal-to-noise ratio in dB.
    #[arg(long, default_value_t = 30.0)]
    snr_db: f64,
    /// Seed for all randomness.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Stratified,
    Random,
}

#[derive(Debug, Args)]
struct SyntheticArgs {
    /// Number of classes.
    #[arg(long, default_value_t = 6)]
    classes: usize,
    /// Items per class.
    #[arg(long, default_value_t = 8)]
    per_class: usize,
    /// Rotated renderings per item.
    #[arg(long, default_value_t = 1)]
    rotations: usize,
    /// Image side length in pixels.
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// Noise level of the renderings in dB.
    #[arg(long, default_value_t = 30.0)]
    snr_db: f64,
    /// Render without noise.
    #[arg(long)]
    clean: bool,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Dataset root laid out as <root>/<class>/<image>.pgm; synthetic data
    /// is generated when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Basis JSON [default: N=64, W=0.1, K=10].
    #[arg(long)]
    basis: Option<PathBuf>,
    #[command(flatten)]
    synthetic: SyntheticArgs,
    /// Radial samples R of the polar grid.
    #[arg(long, default_value_t = 64)]
    radial: usize,
    /// Angular samples T of the polar grid.
    #[arg(long, default_value_t = 128)]
    angular: usize,
    /// Comma-separated training fractions.
    #[arg(long, value_delimiter = ',', default_values_t = TABLE_FRACTIONS)]
    fractions: Vec<f64>,
    /// Random splits per fraction.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, value_enum, default_value = "stratified")]
    split: SplitArg,
    /// Classifier regularization.
    #[arg(long, default_value_t = TrainConfig::default().reg)]
    reg: f64,
    /// Classifier training epochs.
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    /// Seed for all randomness.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Decimal places in the CSV; shortest round-trip form when omitted.
    #[arg(long)]
    precision: Option<usize>,
    /// Also write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Write a labelled synthetic dataset as <out-dir>/<class>/<image>.pgm.
    Dataset {
        #[command(flatten)]
        synthetic: SyntheticArgs,
        /// Seed for all randomness.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write the smooth reference test image.
    TestImage {
        /// Image side length in pixels.
        #[arg(long, default_value_t = 128)]
        size: usize,
        /// Output PGM path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_order(s: &str) -> Result<(usize, usize), String> {
    let (m, n) = s
        .split_once(':')
        .ok_or_else(|| format!("expected m:n, got `{s}`"))?;
    let m = m.trim().parse().map_err(|_| format!("bad radial order in `{s}`"))?;
    let n = n.trim().parse().map_err(|_| format!("bad angular order in `{s}`"))?;
    Ok((m, n))
}

enum CliError {
    Usage(String),
    Failure(String),
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn failure(msg: impl Into<String>) -> CliError {
    CliError::Failure(msg.into())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: &dyn std::fmt::Display| failure(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(bytes).map_err(|e| fail(&e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        // temp files are created owner-only; outputs get the usual mode
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(|e| fail(&e))?;
    }
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| failure(format!("cannot read {}: {e}", path.display())))
}

fn load_image(path: &Path) -> CliResult<RasterImage> {
    read_pgm(&read_input(path)?).map_err(|e| failure(format!("{}: {e}", path.display())))
}

fn load_basis(path: &Path) -> CliResult<DpssBasis> {
    let file: BasisFile = serde_json::from_slice(&read_input(path)?)
        .map_err(|e| failure(format!("{}: {e}", path.display())))?;
    DpssBasis::from_file(file).map_err(|e| failure(format!("{}: {e}", path.display())))
}

fn load_moments(path: &Path) -> CliResult<MomentSet> {
    let file: MomentsFile = serde_json::from_slice(&read_input(path)?)
        .map_err(|e| failure(format!("{}: {e}", path.display())))?;
    MomentSet::from_file(file).map_err(|e| failure(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| failure(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn check_grid(grid: &GridArgs) -> CliResult<(usize, usize)> {
    if grid.radial == 0 {
        return Err(usage("--radial must be positive"));
    }
    if grid.angular == 0 {
        return Err(usage("--angular must be positive"));
    }
    Ok((grid.radial, grid.angular))
}

fn check_orders(orders: &OrderArgs, basis: &DpssBasis, angular: usize) -> CliResult<()> {
    if orders.m == 0 || orders.m > basis.n_seq() {
        return Err(usage(format!(
            "--m must lie in 1..={} (sequences in the basis), got {}",
            basis.n_seq(),
            orders.m
        )));
    }
    if 2 * orders.l + 1 > angular {
        return Err(usage(format!(
            "--l {} needs 2L+1 <= --angular ({angular})",
            orders.l
        )));
    }
    Ok(())
}

fn dpss_gen(n: usize, w: f64, k: usize, out: &Path) -> CliResult<()> {
    let params = DpssParams::new(n, w, k).map_err(|e| match e {
        crate::Error::Parameter { name, reason } => usage(format!("--{name}: {reason}")),
        other => usage(other.to_string()),
    })?;
    let basis = compute_dpss(params)?;
    write_atomic(out, &to_json(&basis.to_file())?)
}

fn stability(args: &StabilityArgs, noise: Option<(f64, u64)>) -> CliResult<()> {
    let grid = check_grid(&args.grid)?;
    if args.angles.is_empty() {
        return Err(usage("--angles needs at least one angle"));
    }
    if args.angles.iter().any(|a| !a.is_finite()) {
        return Err(usage("--angles must be finite"));
    }
    let orders = if args.orders.is_empty() {
        TABLE_ORDERS.to_vec()
    } else {
        args.orders.clone()
    };
    let noise = match noise {
        Some((snr, seed)) => Some(NoiseSpec::new(snr, seed).map_err(|_| usage("--snr-db must be finite"))?),
        None => None,
    };
    let image = load_image(&args.image)?;
    let basis = load_basis(&args.basis)?;
    let max_m = orders.iter().map(|o| o.0).max().unwrap_or(0);
    let max_n = orders.iter().map(|o| o.1).max().unwrap_or(0);
    if max_m >= basis.n_seq() {
        return Err(usage(format!(
            "--orders uses radial order {max_m} but the basis has {} sequences",
            basis.n_seq()
        )));
    }
    if 2 * max_n + 1 > grid.1 {
        return Err(usage(format!("--orders angular order {max_n} needs 2n+1 <= --angular")));
    }
    let report = rotation_stability(&image, &args.angles, &orders, &basis, grid, noise)?;
    write_atomic(&args.out, report.to_csv(args.precision).as_bytes())?;
    if let Some(path) = &args.json {
        write_atomic(path, &to_json(&report)?)?;
    }
    Ok(())
}

fn synthetic_config(args: &SyntheticArgs, seed: u64) -> CliResult<SyntheticConfig> {
    if args.classes < 2 {
        return Err(usage("--classes must be at least 2"));
    }
    if args.per_class == 0 {
        return Err(usage("--per-class must be positive"));
    }
    if args.rotations == 0 {
        return Err(usage("--rotations must be positive"));
    }
    if args.size < 8 {
        return Err(usage("--size must be at least 8"));
    }
    if !args.snr_db.is_finite() {
        return Err(usage("--snr-db must be finite"));
    }
    Ok(SyntheticConfig {
        n_classes: args.classes,
        per_class: args.per_class,
        rotations_per_item: args.rotations,
        image_size: args.size,
        snr_db: (!args.clean).then_some(args.snr_db),
        seed,
        ..SyntheticConfig::default()
    })
}

fn default_basis() -> CliResult<DpssBasis> {
    Ok(compute_dpss(DpssParams::new(64, 0.1, 10)?)?)
}

fn classify(args: &ClassifyArgs) -> CliResult<()> {
    if args.radial == 0 || args.angular < 19 {
        return Err(usage("--radial must be positive and --angular at least 19 for 100-entry features"));
    }
    if args.fractions.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(usage("--fractions must lie in (0, 1)"));
    }
    if args.repeats == 0 {
        return Err(usage("--repeats must be positive"));
    }
    if !(args.reg > 0.0 && args.reg.is_finite()) {
        return Err(usage("--reg must be positive"));
    }
    if args.epochs == 0 {
        return Err(usage("--epochs must be positive"));
    }
    let synth = if args.data.is_none() {
        Some(synthetic_config(&args.synthetic, args.seed)?)
    } else {
        None
    };
    let basis = match &args.basis {
        Some(p) => load_basis(p)?,
        None => default_basis()?,
    };
    if basis.n_seq() < 10 {
        return Err(usage("--basis needs at least 10 sequences for 100-entry features"));
    }
    let grid = (args.radial, args.angular);
    let ds = match (&args.data, synth) {
        (Some(root), _) => load_dataset_dir(root, &basis, grid)
            .map_err(|e| failure(format!("{}: {e}", root.display())))?,
        (None, Some(cfg)) => make_synthetic_dataset(&cfg, &basis, grid)?,
        (None, None) => unreachable!(),
    };
    let mode = match args.split {
        SplitArg::Stratified => SplitMode::Stratified,
        SplitArg::Random => SplitMode::Random,
    };
    let train = TrainConfig {
        reg: args.reg,
        epochs: args.epochs,
        ..TrainConfig::default()
    };
    // keep the split stream apart from the streams used to synthesize data
    let sweep_seed = child_seed(args.seed, u64::MAX, 0);
    let report = classification_sweep(&ds, &args.fractions, args.repeats, sweep_seed, mode, &train)
        .map_err(|e| match e {
            crate::Error::Parameter { name: "fractions", reason } => usage(format!("--fractions: {reason}")),
            other => failure(other.to_string()),
        })?;
    write_atomic(&args.out, report.to_csv(args.precision).as_bytes())?;
    if let Some(path) = &args.json {
        write_atomic(path, &to_json(&report)?)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Dpss(DpssCommand::Gen { n, w, k, out }) => dpss_gen(n, w, k, &out),
        Command::Moments(MomentsCommand::Compute {
            image,
            basis,
            orders,
            grid,
            out,
        }) => {
            let (r, t) = check_grid(&grid)?;
            let img = load_image(&image)?;
            let basis = load_basis(&basis)?;
            check_orders(&orders, &basis, t)?;
            let ms = compute_moments(&to_polar(&img, r, t)?, &basis, orders.m, orders.l)?;
            write_atomic(&out, &to_json(&ms.to_file())?)
        }
        Command::Invariants(args) => {
            let ms = match (&args.moments, &args.image, &args.basis) {
                (Some(path), _, _) => load_moments(path)?,
                (None, Some(image), Some(basis)) => {
                    let (r, t) = check_grid(&args.grid)?;
                    let img = load_image(image)?;
                    let basis = load_basis(basis)?;
                    check_orders(&args.orders, &basis, t)?;
                    compute_moments(&to_polar(&img, r, t)?, &basis, args.orders.m, args.orders.l)?
                }
                _ => return Err(usage("--image requires --basis")),
            };
            write_atomic(&args.out, invariants(&ms).to_csv().as_bytes())
        }
        Command::Reconstruct(args) => {
            let grid = check_grid(&args.grid)?;
            if args.size == Some(0) {
                return Err(usage("--size must be positive"));
            }
            let ms = load_moments(&args.moments)?;
            let basis = load_basis(&args.basis)?;
            if ms.basis_id() != basis.id() {
                return Err(failure(format!(
                    "moments were computed with {} but --basis is {}",
                    ms.basis_id(),
                    basis.id()
                )));
            }
            let rec = reconstruct(&ms, &basis, grid)?;
            let raster = match args.size {
                Some(size) => to_cartesian(&rec.image, size)?,
                None => {
                    let px: Vec<f64> = rec.image.samples().iter().map(|s| s.re.clamp(0.0, 1.0)).collect();
                    RasterImage::new(grid.1, grid.0, px)?
                }
            };
            write_atomic(&args.out, &write_pgm(&raster))?;
            println!("max imaginary residual: {}", rec.max_imag_residual);
            Ok(())
        }
        Command::RotateTest(args) => stability(&args, None),
        Command::NoiseTest(args) => stability(&args.table, Some((args.snr_db, args.seed))),
        Command::Classify(args) => classify(&args),
        Command::Synth(SynthCommand::Dataset {
            synthetic,
            seed,
            out_dir,
        }) => {
            let cfg = synthetic_config(&synthetic, seed)?;
            let images = synthetic_images(&cfg)?;
            let mut counters = vec![0usize; cfg.n_classes + 1];
            for (img, label) in images {
                let dir = out_dir.join(format!("class{label}"));
                std::fs::create_dir_all(&dir)
                    .map_err(|e| failure(format!("cannot create {}: {e}", dir.display())))?;
                let idx = counters[label as usize];
                counters[label as usize] += 1;
                write_atomic(&dir.join(format!("img{idx:03}.pgm")), &write_pgm(&img))?;
            }
            Ok(())
        }
        Command::Synth(SynthCommand::TestImage { size, out }) => {
            if size < 8 {
                return Err(usage("--size must be at least 8"));
            }
            write_atomic(&out, &write_pgm(&smooth_test_image(size)))
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("usage error"));
            return 2;
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be positive");
        return 2;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli)) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}
