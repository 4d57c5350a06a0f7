//! `fflt`: generate test problems, run the fast transforms against the
//! naive sums and emit CSV for error and timing plots.

mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fflt::{
    gen_testdata, interpolation_order, make_disk_plan, make_plan, naive_apply, naive_disk_apply,
    relative_error, BackendKind, BesselHalfKernel, ExpKernel, Kernel, Variant,
};

use crate::io::{fmt_float, DiskInput, LaplaceInput};

#[derive(Parser, Debug)]
#[command(name = "fflt", version, about = "Fast Laplace and unit-disk transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelArg {
    /// exp(-y xi)
    Exp,
    /// sqrt(pi / (2 y xi)) exp(-y xi)
    Bessel,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Direct,
    Nfft,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Direct => BackendKind::Direct,
            BackendArg::Nfft => BackendKind::Nfft,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum ErrorAlgo {
    Laplace,
    DiskDirect,
    DiskNfft,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum TimeAlgo {
    Laplace,
    DiskNfft,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Target accuracy in (0, 1)
    #[arg(long)]
    epsilon: f64,
    /// Problem size when generating data
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Seed of the ChaCha8 generator used for test data
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read the problem from a CSV file instead of generating it
    #[arg(long)]
    input: Option<PathBuf>,
    /// Write the result row here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Compare with the naive sum and fail if the error exceeds epsilon
    #[arg(long)]
    check: bool,
    /// Draw complex coefficients (independent real and imaginary parts)
    #[arg(long)]
    complex: bool,
    /// Save the problem actually used as CSV
    #[arg(long)]
    write_input: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discrete Laplace transform; input columns y,xi,fhat_re,fhat_im
    Laplace {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "exp")]
        kernel: KernelArg,
    },
    /// Generalized polynomial in the unit disk; input columns
    /// z_re,z_im,exponent,fhat_re,fhat_im
    Disk {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "direct")]
        backend: BackendArg,
    },
    /// Error against the naive sum for q = q-min..=q-max with
    /// epsilon = 4^(1/2 - q); bound is 2^(1 - 2q)
    BenchError {
        #[arg(long, default_value_t = 16384)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        q_min: usize,
        #[arg(long, default_value_t = 14)]
        q_max: usize,
        #[arg(long, value_enum, default_value = "laplace")]
        algo: ErrorAlgo,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Median apply time for n = n-min, 2 n-min, ..., n-max; planning is
    /// excluded and the naive sum is timed only up to --naive-max
    BenchTime {
        #[arg(long, default_value_t = 8)]
        q: usize,
        #[arg(long, default_value_t = 1024)]
        n_min: usize,
        #[arg(long, default_value_t = 65536)]
        n_max: usize,
        #[arg(long, value_enum, default_value = "laplace")]
        algo: TimeAlgo,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 16384)]
        naive_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

const RECORD_HEADER: [&str; 7] = ["n", "epsilon", "q", "M", "E", "time_fast_s", "time_naive_s"];

/// One result row; `error` and `time_naive_s` are filled by `--check`.
#[derive(Debug, Clone, PartialEq)]
struct BenchRecord {
    n: usize,
    epsilon: f64,
    q: usize,
    levels: usize,
    error: Option<f64>,
    time_fast_s: f64,
    time_naive_s: Option<f64>,
}

impl BenchRecord {
    fn to_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        vec![
            self.n.to_string(),
            fmt_float(self.epsilon),
            self.q.to_string(),
            self.levels.to_string(),
            opt(self.error),
            fmt_float(self.time_fast_s),
            opt(self.time_naive_s),
        ]
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        bail!("--epsilon must lie in (0, 1), got {eps}");
    }
    Ok(())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn laplace_input(c: &Common) -> Result<LaplaceInput> {
    if let Some(path) = &c.input {
        return io::read_laplace(path);
    }
    let d = gen_testdata(c.n, interpolation_order(c.epsilon), c.seed, c.complex);
    Ok(LaplaceInput {
        y: d.y,
        xi: d.xi,
        fhat: d.fhat,
    })
}

fn disk_input(c: &Common) -> Result<DiskInput> {
    if let Some(path) = &c.input {
        return io::read_disk(path);
    }
    let d = gen_testdata(c.n, interpolation_order(c.epsilon), c.seed, c.complex);
    Ok(DiskInput {
        z: d.disk_nodes(),
        exponents: d.xi,
        fhat: d.fhat,
    })
}

fn kernel_of(k: KernelArg) -> (Arc<dyn Kernel>, Variant) {
    match k {
        KernelArg::Exp => (Arc::new(ExpKernel), Variant::Exp),
        KernelArg::Bessel => (Arc::new(BesselHalfKernel), Variant::General),
    }
}

fn finish(c: &Common, record: BenchRecord) -> Result<ExitCode> {
    io::write_table(c.output.as_deref(), &RECORD_HEADER, &[record.to_row()])?;
    if let Some(e) = record.error {
        if e > c.epsilon {
            eprintln!("error {e:e} exceeds epsilon {:e}", c.epsilon);
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_laplace(c: &Common, kernel: KernelArg) -> Result<ExitCode> {
    check_epsilon(c.epsilon)?;
    let input = laplace_input(c)?;
    if let Some(path) = &c.write_input {
        io::write_laplace(path, &input)?;
    }
    let (kernel, variant) = kernel_of(kernel);
    let plan = make_plan(c.epsilon, kernel.clone(), &input.y, &input.xi, variant)?;
    let (fast, time_fast_s) = timed(|| plan.apply(&input.fhat));
    let fast = fast?;
    let mut record = BenchRecord {
        n: input.y.len(),
        epsilon: c.epsilon,
        q: plan.q(),
        levels: plan.levels(),
        error: None,
        time_fast_s,
        time_naive_s: None,
    };
    if c.check {
        let (exact, t) = timed(|| naive_apply(kernel.as_ref(), &input.y, &input.xi, &input.fhat));
        record.error = Some(relative_error(&exact?, &fast, &input.fhat)?);
        record.time_naive_s = Some(t);
    }
    finish(c, record)
}

fn run_disk(c: &Common, backend: BackendArg) -> Result<ExitCode> {
    check_epsilon(c.epsilon)?;
    let input = disk_input(c)?;
    if let Some(path) = &c.write_input {
        io::write_disk(path, &input)?;
    }
    let plan = make_disk_plan(c.epsilon, &input.z, &input.exponents, backend.into())?;
    let (fast, time_fast_s) = timed(|| plan.apply(&input.fhat));
    let fast = fast?;
    let mut record = BenchRecord {
        n: input.z.len(),
        epsilon: c.epsilon,
        q: plan.q(),
        levels: plan.levels(),
        error: None,
        time_fast_s,
        time_naive_s: None,
    };
    if c.check {
        let (exact, t) = timed(|| naive_disk_apply(&input.z, &input.exponents, &input.fhat));
        record.error = Some(relative_error(&exact?, &fast, &input.fhat)?);
        record.time_naive_s = Some(t);
    }
    finish(c, record)
}

fn bench_error(n: usize, q_min: usize, q_max: usize, algo: ErrorAlgo, seed: u64, output: Option<&Path>) -> Result<()> {
    if q_min == 0 || q_min > q_max {
        bail!("need 1 <= q-min <= q-max");
    }
    let mut rows = Vec::new();
    for q in q_min..=q_max {
        let eps = 4f64.powf(0.5 - q as f64);
        let bound = 2f64.powi(1 - 2 * q as i32);
        let d = gen_testdata(n, q, seed, false);
        let e = match algo {
            ErrorAlgo::Laplace => {
                let plan = make_plan(eps, Arc::new(ExpKernel), &d.y, &d.xi, Variant::Exp)?;
                let exact = naive_apply(&ExpKernel, &d.y, &d.xi, &d.fhat)?;
                relative_error(&exact, &plan.apply(&d.fhat)?, &d.fhat)?
            }
            ErrorAlgo::DiskDirect | ErrorAlgo::DiskNfft => {
                let backend = if algo == ErrorAlgo::DiskNfft {
                    BackendKind::Nfft
                } else {
                    BackendKind::Direct
                };
                let z = d.disk_nodes();
                let plan = make_disk_plan(eps, &z, &d.xi, backend)?;
                let exact = naive_disk_apply(&z, &d.xi, &d.fhat)?;
                relative_error(&exact, &plan.apply(&d.fhat)?, &d.fhat)?
            }
        };
        rows.push(vec![q.to_string(), fmt_float(eps), fmt_float(e), fmt_float(bound)]);
    }
    io::write_table(output, &["q", "epsilon", "E", "bound"], &rows)
}

type Job = Box<dyn Fn() -> Result<()>>;

#[allow(clippy::too_many_arguments)]
fn bench_time(
    q: usize,
    n_min: usize,
    n_max: usize,
    algo: TimeAlgo,
    repeats: usize,
    naive_max: usize,
    seed: u64,
    output: Option<&Path>,
) -> Result<()> {
    if q == 0 || n_min == 0 || n_min > n_max || repeats == 0 {
        bail!("need q >= 1, 1 <= n-min <= n-max and repeats >= 1");
    }
    let eps = 4f64.powf(0.5 - q as f64);
    let mut rows = Vec::new();
    let mut n = n_min;
    while n <= n_max {
        let d = gen_testdata(n, q, seed, false);
        let (fast, naive): (Job, Job) = match algo {
            TimeAlgo::Laplace => {
                let plan = make_plan(eps, Arc::new(ExpKernel), &d.y, &d.xi, Variant::Exp)?;
                let d2 = d.clone();
                (
                    Box::new(move || plan.apply(&d.fhat).map(drop).map_err(Into::into)),
                    Box::new(move || naive_apply(&ExpKernel, &d2.y, &d2.xi, &d2.fhat).map(drop).map_err(Into::into)),
                )
            }
            TimeAlgo::DiskNfft => {
                let z = d.disk_nodes();
                let plan = make_disk_plan(eps, &z, &d.xi, BackendKind::Nfft)?;
                let d2 = d.clone();
                let fhat = d.fhat;
                (
                    Box::new(move || plan.apply(&fhat).map(drop).map_err(Into::into)),
                    Box::new(move || naive_disk_apply(&z, &d2.xi, &d2.fhat).map(drop).map_err(Into::into)),
                )
            }
        };
        let mut times = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let (r, t) = timed(&fast);
            r?;
            times.push(t);
        }
        let naive_time = if n <= naive_max {
            let (r, t) = timed(&naive);
            r?;
            fmt_float(t)
        } else {
            String::new()
        };
        rows.push(vec![n.to_string(), fmt_float(median(times)), naive_time]);
        n *= 2;
    }
    io::write_table(output, &["n", "time_fast_s", "time_naive_s"], &rows)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Laplace { common, kernel } => run_laplace(&common, kernel),
        Command::Disk { common, backend } => run_disk(&common, backend),
        Command::BenchError {
            n,
            q_min,
            q_max,
            algo,
            seed,
            output,
        } => bench_error(n, q_min, q_max, algo, seed, output.as_deref()).map(|_| ExitCode::SUCCESS),
        Command::BenchTime {
            q,
            n_min,
            n_max,
            algo,
            repeats,
            naive_max,
            seed,
            output,
        } => bench_time(q, n_min, n_max, algo, repeats, naive_max, seed, output.as_deref())
            .map(|_| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fflt: {e:#}");
            ExitCode::FAILURE
        }
    }
}
