//! Command-line front end: parse a chain spec and an experiment request,
//! run it, and write CSV or JSON.
//!
//! Conventions: stdout carries data, stderr carries diagnostics (the last
//! stderr line on failure is a machine-readable JSON object), exit code 0 on
//! success, 2 on usage errors, 1 on numerical-contract violations. CSV values
//! are printed with 17 significant digits so they round-trip to the exact
//! double.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channel::{
    conserving_block_max_diff, reduced_propagator_conserving, reduced_propagator_numeric,
};
use crate::dynamics::decompose;
use crate::experiments::{
    run_delta_sweep, run_pairwise_fidelities, run_time_series, SweepResult, TimeSeriesOptions,
    TimeSeriesRecord,
};
use crate::hamiltonians::{
    build_full_space, build_single_excitation, site_basis_index, ChainSpec,
};
use crate::measures::{
    fidelity, fidelity_numeric, interference, reduced_interference_closed, unitarity_residual,
};
use crate::{Error, Result};

/// Environment variable naming the directory that relative `--output` paths
/// are resolved against.
pub const OUTPUT_DIR_ENV: &str = "SPIN_TRANSFER_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "spin-transfer",
    version,
    about = "Spin-chain state transfer: fidelity and interference measures",
    after_help = "Data goes to stdout (or --output); diagnostics go to stderr."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample F, I_r, I_full, p11, p1N on a uniform time grid.
    Timeseries(TimeseriesArgs),
    /// Sweep the flux-qubit tunneling Δ; report the transfer maximum per point.
    DeltaSweep(DeltaSweepArgs),
    /// Pairwise fidelities F_1j for every site j along a conserving chain.
    Pairwise(PairwiseArgs),
    /// Dump the reduced two-spin channel tensor at one time as JSON.
    ChannelDump(ChannelDumpArgs),
    /// Run the built-in invariant suite and report pass/fail per check.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Heisenberg,
    XyWeakEnds,
    FluxQubit,
    XyIsing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Debug)]
struct ChainArgs {
    /// Chain model.
    #[arg(long, value_enum, default_value_t = ModelArg::Heisenberg)]
    model: ModelArg,

    /// Number of sites N ≥ 2.
    #[arg(long, default_value_t = 3)]
    n: usize,

    /// Exchange coupling J (heisenberg, xy-weak-ends; default 1).
    #[arg(long)]
    j: Option<f64>,

    /// End-bond ratio a, so J_2 = J_N = aJ (xy-weak-ends; default 0.02).
    #[arg(long)]
    a: Option<f64>,

    /// Transverse coupling J_xy (flux-qubit default 0.08, xy-ising default 1).
    #[arg(long)]
    jxy: Option<f64>,

    /// Ising coupling J_z (flux-qubit default 1, xy-ising default 0.05).
    #[arg(long)]
    jz: Option<f64>,

    /// Tunneling amplitude Δ (flux-qubit; default 0).
    #[arg(long)]
    delta: Option<f64>,

    /// Magnetic field: one scalar for every site, or N comma-separated values.
    #[arg(long, default_value = "0")]
    b: String,
}

impl ChainArgs {
    fn to_spec(&self) -> Result<ChainSpec> {
        let model_name = match self.model {
            ModelArg::Heisenberg => "heisenberg",
            ModelArg::XyWeakEnds => "xy-weak-ends",
            ModelArg::FluxQubit => "flux-qubit",
            ModelArg::XyIsing => "xy-ising",
        };
        let reject = |flag: &str| -> Result<()> {
            Err(Error::Usage(format!(
                "--{flag} does not apply to model {model_name}"
            )))
        };
        match self.model {
            ModelArg::Heisenberg | ModelArg::XyWeakEnds => {
                if self.jxy.is_some() {
                    reject("jxy")?;
                }
                if self.jz.is_some() {
                    reject("jz")?;
                }
                if self.delta.is_some() {
                    reject("delta")?;
                }
                if self.model == ModelArg::Heisenberg && self.a.is_some() {
                    reject("a")?;
                }
            }
            ModelArg::FluxQubit | ModelArg::XyIsing => {
                if self.j.is_some() {
                    reject("j")?;
                }
                if self.a.is_some() {
                    reject("a")?;
                }
                if self.model == ModelArg::XyIsing && self.delta.is_some() {
                    reject("delta")?;
                }
            }
        }
        let spec = match self.model {
            ModelArg::Heisenberg => ChainSpec::heisenberg(self.n, self.j.unwrap_or(1.0)),
            ModelArg::XyWeakEnds => {
                ChainSpec::xy_weak_ends(self.n, self.j.unwrap_or(1.0), self.a.unwrap_or(0.02))
            }
            ModelArg::FluxQubit => ChainSpec::flux_qubit(
                self.n,
                self.jxy.unwrap_or(0.08),
                self.jz.unwrap_or(1.0),
                self.delta.unwrap_or(0.0),
            ),
            ModelArg::XyIsing => {
                ChainSpec::xy_ising(self.n, self.jxy.unwrap_or(1.0), self.jz.unwrap_or(0.05))
            }
        };
        let spec = apply_field_arg(spec, &self.b)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Clone, Debug)]
struct IoArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output file (default: stdout). A relative path is resolved inside
    /// $SPIN_TRANSFER_OUT_DIR when that variable is set.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Number of worker threads for the parallel loops (default: one per core).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct TimeseriesArgs {
    #[command(flatten)]
    chain: ChainArgs,

    /// End of the sampled time interval [0, t_max].
    #[arg(long)]
    t_max: f64,

    /// Number of samples on the uniform grid.
    #[arg(long, default_value_t = 1000)]
    steps: usize,

    /// Report the raw phase-sensitive fidelity instead of the phase-aligned one.
    #[arg(long)]
    raw_phase: bool,

    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args, Debug)]
struct DeltaSweepArgs {
    /// Number of sites.
    #[arg(long, default_value_t = 3)]
    n: usize,

    /// Ising coupling J_z.
    #[arg(long, default_value_t = 1.0)]
    jz: f64,

    /// Transverse coupling J_xy.
    #[arg(long, default_value_t = 0.08)]
    jxy: f64,

    /// Magnetic field: one scalar for every site, or N comma-separated values.
    #[arg(long, default_value = "0")]
    b: String,

    /// Δ grid as start:stop:step; stop is included when within half a step.
    #[arg(long, value_name = "START:STOP:STEP")]
    delta: String,

    /// Search window for the transfer maximum, as lo:hi. Default 0:1/J_xy.
    #[arg(long, value_name = "LO:HI")]
    window: Option<String>,

    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args, Debug)]
struct PairwiseArgs {
    #[command(flatten)]
    chain: ChainArgs,

    /// End of the sampled time interval [0, t_max].
    #[arg(long)]
    t_max: f64,

    /// Number of samples on the uniform grid.
    #[arg(long, default_value_t = 1000)]
    steps: usize,

    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args, Debug)]
struct ChannelDumpArgs {
    #[command(flatten)]
    chain: ChainArgs,

    /// Time at which to extract the channel.
    #[arg(long)]
    t: f64,

    /// Force the numeric full-space route (d = 4) even for conserving chains.
    #[arg(long)]
    numeric: bool,

    /// Output file (default: stdout). A relative path is resolved inside
    /// $SPIN_TRANSFER_OUT_DIR when that variable is set.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Seed for the Monte Carlo fidelity check.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

/// Entry point used by the binary: parses `std::env::args_os()`.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Parse `args` (including argv[0]), dispatch, and return the process exit
/// code. Errors are reported on stderr, ending with one machine-readable
/// JSON line `{"error": ..., "kind": "usage"|"numerics"}`.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code != 0 {
                emit_error_json("usage", &e.to_string());
                return 2;
            }
            return 0;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        // The reader closing the pipe (`… | head`) is a normal way to stop
        // consuming a stream, not a failure.
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(err) => {
            let kind = if err.is_usage() { "usage" } else { "numerics" };
            emit_error_json(kind, &err.to_string());
            if err.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn emit_error_json(kind: &str, message: &str) {
    eprintln!(
        "{}",
        serde_json::json!({ "error": message, "kind": kind })
    );
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Timeseries(a) => cmd_timeseries(a),
        Command::DeltaSweep(a) => cmd_delta_sweep(a),
        Command::Pairwise(a) => cmd_pairwise(a),
        Command::ChannelDump(a) => cmd_channel_dump(a),
        Command::Selftest(a) => cmd_selftest(a),
    }
}

fn init_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::Numerics(format!("cannot configure worker pool: {e}")))?;
    }
    Ok(())
}

/// Parse a magnetic-field argument: a single scalar applies to every site,
/// a comma-separated list of N values sets per-site fields.
fn apply_field_arg(spec: ChainSpec, b: &str) -> Result<ChainSpec> {
    let bad = |_| Error::Usage(format!("cannot parse --b value {b:?} as a number list"));
    if b.contains(',') {
        let fields = b
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(bad)?;
        Ok(spec.with_fields(fields))
    } else {
        Ok(spec.with_uniform_field(b.trim().parse::<f64>().map_err(bad)?))
    }
}

/// Parse `start:stop:step` into the grid start, start+step, …; stop is
/// included when it lies within half a step of a grid point.
fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let usage =
        || Error::Usage(format!("range {s:?} must have the form start:stop:step"));
    if parts.len() != 3 {
        return Err(usage());
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|_| usage())?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::Usage(format!("range step {step} must be positive")));
    }
    if !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::Usage(format!(
            "range [{start}, {stop}] must be finite with stop ≥ start"
        )));
    }
    // Number of whole steps that fit; the +0.5 keeps `stop` on the grid when
    // floating-point error leaves (stop−start)/step just below an integer.
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    let mut grid: Vec<f64> = (0..count).map(|k| start + k as f64 * step).collect();
    // The half-step slack only absorbs floating-point error at the endpoint;
    // a point materially beyond `stop` must not leak into the grid.
    if let Some(&last) = grid.last() {
        if last > stop && last - stop > 1e-9 * step.max(stop.abs()) {
            grid.pop();
        }
    }
    Ok(grid)
}

/// Parse a `lo:hi` time interval.
fn parse_window(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    let usage = || Error::Usage(format!("window {s:?} must have the form lo:hi"));
    if parts.len() != 2 {
        return Err(usage());
    }
    let lo = parts[0].trim().parse::<f64>().map_err(|_| usage())?;
    let hi = parts[1].trim().parse::<f64>().map_err(|_| usage())?;
    Ok((lo, hi))
}

fn resolve_output_path(p: &Path) -> PathBuf {
    if p.is_relative() {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            return PathBuf::from(dir).join(p);
        }
    }
    p.to_path_buf()
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            let p = resolve_output_path(p);
            let f = File::create(&p).map_err(|e| {
                Error::Usage(format!("cannot create output file {}: {e}", p.display()))
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn write_series_csv(
    w: &mut dyn Write,
    recs: &[TimeSeriesRecord],
    pairwise_sites: Option<usize>,
) -> Result<()> {
    let mut header = String::from("t,F,I_r,I_full,p11,p1N");
    if let Some(n) = pairwise_sites {
        for j in 2..=n {
            header.push_str(&format!(",F_1{j}"));
        }
    }
    writeln!(w, "{header}")?;
    for r in recs {
        write!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.fidelity, r.i_reduced, r.i_full_normalized, r.p11, r.p1n
        )?;
        if let Some(pw) = &r.pairwise {
            for v in pw {
                write!(w, ",{v:.16e}")?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

fn write_sweep_csv(w: &mut dyn Write, res: &SweepResult) -> Result<()> {
    writeln!(w, "{},t_star,max_f1N,I_r_at_max", res.parameter)?;
    for p in &res.points {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            p.param, p.t_star, p.max_f1n, p.i_r_at_max
        )?;
    }
    Ok(())
}

fn cmd_timeseries(a: TimeseriesArgs) -> Result<()> {
    init_jobs(a.io.jobs)?;
    let spec = a.chain.to_spec()?;
    let recs = run_time_series(
        &spec,
        a.t_max,
        a.steps,
        TimeSeriesOptions {
            align_phase: !a.raw_phase,
        },
    )?;
    let mut out = open_output(&a.io.output)?;
    match a.io.format {
        Format::Csv => write_series_csv(&mut *out, &recs, None)?,
        Format::Json => {
            serde_json::to_writer(&mut *out, &recs)
                .map_err(|e| Error::Numerics(format!("JSON encoding failed: {e}")))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_delta_sweep(a: DeltaSweepArgs) -> Result<()> {
    init_jobs(a.io.jobs)?;
    let base = apply_field_arg(ChainSpec::flux_qubit(a.n, a.jxy, a.jz, 0.0), &a.b)?;
    let grid = parse_range(&a.delta)?;
    let window = match &a.window {
        Some(s) => parse_window(s)?,
        None => (0.0, 1.0 / a.jxy),
    };
    let res = run_delta_sweep(&base, &grid, window)?;
    let mut out = open_output(&a.io.output)?;
    match a.io.format {
        Format::Csv => write_sweep_csv(&mut *out, &res)?,
        Format::Json => {
            serde_json::to_writer(&mut *out, &res)
                .map_err(|e| Error::Numerics(format!("JSON encoding failed: {e}")))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_pairwise(a: PairwiseArgs) -> Result<()> {
    init_jobs(a.io.jobs)?;
    let spec = a.chain.to_spec()?;
    let recs = run_pairwise_fidelities(&spec, a.t_max, a.steps)?;
    let mut out = open_output(&a.io.output)?;
    match a.io.format {
        Format::Csv => write_series_csv(&mut *out, &recs, Some(spec.n_sites))?,
        Format::Json => {
            serde_json::to_writer(&mut *out, &recs)
                .map_err(|e| Error::Numerics(format!("JSON encoding failed: {e}")))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_channel_dump(a: ChannelDumpArgs) -> Result<()> {
    let spec = a.chain.to_spec()?;
    let tensor = if spec.conserves_excitations() && !a.numeric {
        let sp = decompose(&build_single_excitation(&spec)?)?;
        reduced_propagator_conserving(&sp, a.t)?
    } else {
        let sp = decompose(&build_full_space(&spec)?)?;
        reduced_propagator_numeric(&sp, spec.n_sites, a.t)?
    };
    tensor.validate()?;
    let mut out = open_output(&a.output)?;
    serde_json::to_writer_pretty(&mut *out, &tensor.dump())
        .map_err(|e| Error::Numerics(format!("JSON encoding failed: {e}")))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// One self-test check: name, pass/fail, and a short numeric detail.
struct Check {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn check(name: &'static str, ok: bool, detail: String) -> Check {
    Check { name, ok, detail }
}

fn selftest_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    // Every default model builds a Hermitian operator that decomposes.
    let specs = [
        ChainSpec::heisenberg(5, 1.0).with_uniform_field(0.1),
        ChainSpec::xy_weak_ends(5, 1.0, 0.02),
        ChainSpec::flux_qubit(4, 0.08, 1.0, 0.4),
        ChainSpec::xy_ising(4, 1.0, 0.05),
    ];
    let mut build_ok = true;
    for spec in &specs {
        let h = if spec.conserves_excitations() {
            build_single_excitation(spec)
        } else {
            build_full_space(spec)
        };
        build_ok &= h.and_then(|h| decompose(&h)).is_ok();
    }
    checks.push(check(
        "hamiltonians build and decompose",
        build_ok,
        "4 models".into(),
    ));

    // Propagator unitarity.
    let sp = decompose(&build_single_excitation(
        &ChainSpec::heisenberg(5, 1.0).with_uniform_field(0.1),
    )?)?;
    let r = unitarity_residual(&sp.evolve(1.7));
    checks.push(check(
        "propagator unitarity",
        r < 1e-9,
        format!("residual {r:.2e}"),
    ));

    // Group property U(s+t) = U(t) U(s).
    let (s, t) = (0.9, 0.8);
    let diff = (sp.evolve(s + t) - sp.evolve(t) * sp.evolve(s))
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    checks.push(check(
        "propagator group property",
        diff < 1e-9,
        format!("max diff {diff:.2e}"),
    ));

    // Probability sum rule: a column of the propagator stays normalized.
    let col = sp.evolve_column(4.2, 1);
    let total: f64 = col.iter().map(|z| z.norm_sqr()).sum();
    checks.push(check(
        "probability sum rule",
        (total - 1.0).abs() < 1e-9,
        format!("deviation {:.2e}", (total - 1.0).abs()),
    ));

    // Channel preserves trace and Hermiticity.
    let sp_xyi = decompose(&build_single_excitation(&ChainSpec::xy_ising(4, 1.0, 0.05))?)?;
    let p3 = reduced_propagator_conserving(&sp_xyi, 2.1)?;
    let ok = p3.validate().is_ok();
    checks.push(check(
        "channel trace/Hermiticity preservation",
        ok,
        format!(
            "residuals {:.2e} / {:.2e}",
            p3.trace_preservation_residual(),
            p3.hermiticity_preservation_residual()
        ),
    ));

    // Analytic channel matches the numeric full-space route.
    let spec = ChainSpec::xy_ising(4, 1.0, 0.05).with_uniform_field(0.2);
    let spc = decompose(&build_single_excitation(&spec)?)?;
    let spf = decompose(&build_full_space(&spec)?)?;
    let pa = reduced_propagator_conserving(&spc, 1.3)?;
    let pn = reduced_propagator_numeric(&spf, 4, 1.3)?;
    let worst = conserving_block_max_diff(&pa, &pn)?;
    checks.push(check(
        "analytic channel matches partial trace",
        worst < 1e-9,
        format!("max diff {worst:.2e}"),
    ));

    // Closed-form reduced interference matches the tensor measure.
    let amps = spc.amplitudes(1.3);
    let ir_closed = reduced_interference_closed(&amps, false);
    let ir_tensor = interference(&pa);
    checks.push(check(
        "closed-form I_r matches tensor I_r",
        (ir_closed - ir_tensor).abs() < 1e-10,
        format!("diff {:.2e}", (ir_closed - ir_tensor).abs()),
    ));

    // Forced values at t = 0.
    let mut forced_ok = true;
    for spec in &specs {
        let rec = &run_time_series(spec, 1.0, 2, TimeSeriesOptions::default())?[0];
        forced_ok &= (rec.fidelity - 0.5).abs() < 1e-12
            && rec.i_reduced.abs() < 1e-12
            && rec.i_full_normalized.abs() < 1e-12;
    }
    checks.push(check(
        "t = 0 gives F = 1/2, I_r = 0, I_full = 0",
        forced_ok,
        "4 models".into(),
    ));

    // Perfect transfer on the two-site chain at t = π/(4J).
    let sp2 = decompose(&build_single_excitation(&ChainSpec::xy_weak_ends(2, 1.0, 1.0))?)?;
    let tstar = std::f64::consts::FRAC_PI_4;
    let amps2 = sp2.amplitudes(tstar);
    let f1n = amps2.f1n.norm();
    let ir = reduced_interference_closed(&amps2, false);
    let f_aligned = fidelity(&amps2, true);
    checks.push(check(
        "perfect transfer without interference",
        (f1n - 1.0).abs() < 1e-9 && ir < 1e-12 && (f_aligned - 1.0).abs() < 1e-9,
        format!("|f_1N|-1 = {:.2e}, I_r = {ir:.2e}", f1n - 1.0),
    ));

    // Uniform field leaves the reduced interference invariant.
    let sp_b = decompose(&build_single_excitation(
        &ChainSpec::xy_ising(5, 1.0, 0.05).with_uniform_field(0.37),
    )?)?;
    let sp_0 = decompose(&build_single_excitation(&ChainSpec::xy_ising(5, 1.0, 0.05))?)?;
    let d_ir = (interference(&reduced_propagator_conserving(&sp_b, 2.6)?)
        - interference(&reduced_propagator_conserving(&sp_0, 2.6)?))
    .abs();
    checks.push(check(
        "uniform-field invariance of I_r",
        d_ir < 1e-10,
        format!("diff {d_ir:.2e}"),
    ));

    // Mirror symmetry of the amplitudes.
    let u = sp_0.evolve(2.6);
    let n = sp_0.dim - 1;
    let mirror = (u[(1, 1)] - u[(n, n)]).norm().max((u[(1, n)] - u[(n, 1)]).norm());
    checks.push(check(
        "mirror symmetry of amplitudes",
        mirror < 1e-10,
        format!("max diff {mirror:.2e}"),
    ));

    // Monte Carlo fidelity agrees with the closed form (raw phase).
    let sp5 = decompose(&build_single_excitation(
        &ChainSpec::heisenberg(5, 1.0).with_uniform_field(0.3),
    )?)?;
    let t_mc = 3.1;
    let f_closed = fidelity(&sp5.amplitudes(t_mc), false);
    let p = reduced_propagator_conserving(&sp5, t_mc)?;
    let est = fidelity_numeric(&p, 20_000, seed)?;
    let dev = (est.mean - f_closed).abs();
    checks.push(check(
        "Monte Carlo fidelity matches closed form",
        dev < 4.0 * est.std_error,
        format!("deviation {dev:.2e} vs SE {:.2e}", est.std_error),
    ));

    // Full-space pipeline at Δ = 0 agrees with the single-excitation one.
    let spec0 = ChainSpec::flux_qubit(3, 0.08, 1.0, 0.0);
    let spf0 = decompose(&build_full_space(&spec0)?)?;
    let spc0 = decompose(&build_single_excitation(&spec0)?)?;
    let t_cmp = 7.0;
    let a_full = spf0.amplitudes_between(t_cmp, site_basis_index(3, 1), site_basis_index(3, 3))?;
    let a_sub = spc0.amplitudes(t_cmp);
    let d_amp = (a_full.f1n - a_sub.f1n)
        .norm()
        .max((a_full.f11 - a_sub.f11).norm());
    checks.push(check(
        "full-space route matches single-excitation route at Δ = 0",
        d_amp < 1e-9,
        format!("max diff {d_amp:.2e}"),
    ));

    Ok(checks)
}

fn cmd_selftest(a: SelftestArgs) -> Result<()> {
    let checks = selftest_checks(a.seed)?;
    let mut all_ok = true;
    for c in &checks {
        println!(
            "selftest {:<55} {}  ({})",
            c.name,
            if c.ok { "pass" } else { "FAIL" },
            c.detail
        );
        all_ok &= c.ok;
    }
    let passed = checks.iter().filter(|c| c.ok).count();
    println!("selftest summary: {passed}/{} passed", checks.len());
    if all_ok {
        Ok(())
    } else {
        Err(Error::Numerics(format!(
            "{} selftest check(s) failed",
            checks.len() - passed
        )))
    }
}
