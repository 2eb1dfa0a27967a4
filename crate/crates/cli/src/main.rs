use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use uniallpass::allpass::{is_allpass, DEFAULT_TOL};
use uniallpass::complete::{
    orthogonal_completion, random_orthogonal, random_uniallpass, siso_completion,
};
use uniallpass::designs::{
    counterexample, gardner_nested, poletti_unitary, schroeder_series, GainVector,
};
use uniallpass::gcp::poles;
use uniallpass::homogeneous::{
    design_homogeneous_siso, DsimStrategy, HomogeneousSpec, DEFAULT_SLACK,
};
use uniallpass::io::{to_canonical_json, FdnDocument};
use uniallpass::response::impulse_response;
use uniallpass::verify::{
    check_theorem3, check_theorem4, dsim_lyapunov, DiagonalSimilarity, MAX_SUBSET_DIM,
};
use uniallpass::{DelayVector, FdnError, FdnSystem};

#[derive(Parser, Debug)]
#[command(
    name = "uniallpass",
    version,
    about = "Design, complete and verify uniallpass feedback delay networks"
)]
struct Cli {
    /// Certification tolerance.
    #[arg(long, global = true, env = "UNIALLPASS_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a system from a closed-form design.
    Design {
        #[command(subcommand)]
        design: Design,
        #[command(flatten)]
        out: Output,
    },
    /// Complete a feedback matrix with input, output and direct gains.
    Complete(CompleteArgs),
    /// Check allpass and uniallpass conditions.
    Verify {
        input: PathBuf,
        /// Override the delays stored in the file.
        #[arg(long, value_delimiter = ',')]
        delays: Option<Vec<usize>>,
    },
    /// Write the impulse response as CSV and optionally WAV.
    Simulate(SimulateArgs),
    /// Write the poles as CSV.
    Poles {
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Rewrite a system file in canonical form.
    Export {
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args, Debug)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Design {
    /// All poles on a circle of radius gamma.
    Homogeneous {
        #[arg(long, value_delimiter = ',', required = true)]
        delays: Vec<usize>,
        #[arg(long)]
        gamma: f64,
        /// Cauchy nodes (diagonal similarity); chosen automatically when omitted.
        #[arg(long, value_delimiter = ',')]
        dsim: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_SLACK)]
        slack: f64,
    },
    /// Series of Schroeder allpass sections.
    Schroeder {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        gains: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        delays: Vec<usize>,
    },
    /// Nested Schroeder allpasses.
    Gardner {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        gains: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        delays: Vec<usize>,
    },
    /// Multichannel unitary reverberator with a random orthogonal matrix.
    Poletti {
        #[arg(long, allow_hyphen_values = true)]
        gain: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        delays: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Three-line system that is allpass for some delays only.
    Counterexample {
        #[arg(long, value_delimiter = ',', default_value = "1,1,1")]
        delays: Vec<usize>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Siso,
    Orthogonal,
}

#[derive(Args, Debug)]
struct CompleteArgs {
    /// Feedback matrix: a system JSON file, a JSON array of rows, or whitespace-separated rows.
    #[arg(required_unless_present = "random")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Siso)]
    mode: Mode,
    /// Number of input/output channels (orthogonal mode).
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Use the feedback matrix of a random uniallpass system of this size.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    delays: Option<Vec<usize>>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 4096)]
    length: usize,
    #[command(flatten)]
    out: Output,
    /// Also write 16-bit PCM, peak-normalized to -1 dBFS.
    #[arg(long)]
    wav: Option<PathBuf>,
    #[arg(long, default_value_t = 48000)]
    rate: u32,
    /// One mono WAV file per input/output pair instead of one multichannel file.
    #[arg(long)]
    split: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if !(cli.tol > 0.0) {
        bail!("tolerance must be positive");
    }
    match cli.command {
        Command::Design { design, out } => design_cmd(design, &out, cli.tol),
        Command::Complete(args) => complete_cmd(args, cli.tol),
        Command::Verify { input, delays } => verify_cmd(&input, delays, cli.tol),
        Command::Simulate(args) => simulate_cmd(args),
        Command::Poles { input, out } => poles_cmd(&input, &out),
        Command::Export { input, out } => {
            let doc = FdnDocument::load(&input)?;
            emit(&out, &doc.to_json()?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit(out: &Output, text: &str) -> Result<()> {
    match &out.output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    }
}

fn certificate(fdn: &FdnSystem, dsim: Option<&DiagonalSimilarity>, tol: f64) -> Value {
    let mut v = json!({ "tol": tol });
    match dsim.map(|d| check_theorem3(fdn, d, tol)) {
        Some(Ok(cert)) => {
            v["theorem3_residual"] = json!(cert.residual);
            v["certified"] = json!(cert.verdict);
        }
        Some(Err(e)) => {
            v["certified"] = json!(false);
            v["error"] = json!(e.to_string());
        }
        None => v["certified"] = json!(false),
    }
    if let Ok(p) = poles(fdn) {
        v["max_pole_modulus"] = json!(p.iter().fold(0.0f64, |m, z| m.max(z.norm())));
    }
    v
}

fn write_system(
    out: &Output,
    fdn: &FdnSystem,
    dsim: Option<&DiagonalSimilarity>,
    meta: Value,
    tol: f64,
) -> Result<ExitCode> {
    let mut doc = FdnDocument::from_system(fdn, dsim);
    let cert = certificate(fdn, dsim, tol);
    let certified = cert["certified"] == json!(true);
    doc.meta = Some(meta);
    doc.verify = Some(cert);
    emit(out, &doc.to_json()?)?;
    if !certified {
        eprintln!("warning: system is not certified uniallpass");
    }
    Ok(ExitCode::SUCCESS)
}

fn delays(m: Vec<usize>) -> Result<DelayVector> {
    Ok(DelayVector::new(m)?)
}

fn design_cmd(design: Design, out: &Output, tol: f64) -> Result<ExitCode> {
    match design {
        Design::Homogeneous {
            delays: m,
            gamma,
            dsim,
            slack,
        } => {
            if !(slack > 0.0 && slack < 1.0) {
                bail!("slack must lie in (0, 1)");
            }
            let mut spec = HomogeneousSpec::new(delays(m)?, gamma);
            spec.dsim = dsim;
            spec.strategy = DsimStrategy::Slack(slack);
            let design = design_homogeneous_siso(&spec)?;
            let meta = json!({
                "design": "homogeneous",
                "gamma": gamma,
                "nodes": design.pair.d,
                "pole_radius_error": design.pole_radius_error,
            });
            write_system(out, &design.fdn, Some(design.dsim()), meta, tol)
        }
        Design::Schroeder { gains, delays: m } => {
            let (fdn, dsim) = schroeder_series(&GainVector::new(gains.clone())?, delays(m)?)?;
            write_system(
                out,
                &fdn,
                Some(&dsim),
                json!({ "design": "schroeder", "gains": gains }),
                tol,
            )
        }
        Design::Gardner { gains, delays: m } => {
            let (fdn, dsim) = gardner_nested(&GainVector::new(gains.clone())?, delays(m)?)?;
            write_system(
                out,
                &fdn,
                Some(&dsim),
                json!({ "design": "gardner", "gains": gains }),
                tol,
            )
        }
        Design::Poletti {
            gain,
            delays: m,
            seed,
        } => {
            let u = random_orthogonal(m.len(), seed);
            let (fdn, dsim) = poletti_unitary(&u, gain, delays(m)?)?;
            write_system(
                out,
                &fdn,
                Some(&dsim),
                json!({ "design": "poletti", "gain": gain, "seed": seed }),
                tol,
            )
        }
        Design::Counterexample { delays: m } => {
            let fdn = counterexample(delays(m)?)?;
            write_system(out, &fdn, None, json!({ "design": "counterexample" }), tol)
        }
    }
}

fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(_)) => FdnDocument::from_json(text)?.a,
        Ok(v @ Value::Array(_)) => {
            serde_json::from_value(v).context("matrix must be an array of rows")?
        }
        Ok(_) => bail!("expected a JSON object or array"),
        Err(_) => text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<Vec<f64>, _>>()
            })
            .collect::<std::result::Result<_, _>>()
            .context("matrix text must contain whitespace-separated numbers")?,
    };
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        bail!("feedback matrix must be square and non-empty");
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn complete_cmd(args: CompleteArgs, tol: f64) -> Result<ExitCode> {
    let a = match (&args.input, args.random) {
        (_, Some(n)) => random_uniallpass(n, args.p, args.seed, true)?.0.a(),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_matrix(&text)?
        }
        (None, None) => unreachable!("clap requires input or --random"),
    };
    let m = match args.delays {
        Some(m) => delays(m)?,
        None => DelayVector::ones(a.nrows()),
    };
    let (sys, dsim) = match args.mode {
        Mode::Orthogonal => orthogonal_completion(&a, args.p)?,
        Mode::Siso => {
            if args.p != 1 {
                bail!("general completion is only available for a single input and output; use --mode orthogonal");
            }
            let (sys, trace) = siso_completion(&a)?;
            (sys, trace.dsim)
        }
    };
    let fdn = FdnSystem::from_system_matrix(&sys, m)?;
    let mode = match args.mode {
        Mode::Siso => "siso",
        Mode::Orthogonal => "orthogonal",
    };
    write_system(
        &args.out,
        &fdn,
        Some(&dsim),
        json!({ "completion": mode, "p": args.p }),
        tol,
    )
}

fn verify_cmd(input: &Path, delays_override: Option<Vec<usize>>, tol: f64) -> Result<ExitCode> {
    let doc = FdnDocument::load(input)?;
    let mut fdn = doc.system()?;
    if let Some(m) = delays_override {
        fdn = fdn.with_delays(delays(m)?)?;
    }
    println!("delays: {:?}", fdn.delays.as_slice());

    let dsim = match doc.dsim() {
        Some(d) => Ok(d),
        None => dsim_lyapunov(&fdn.a, &fdn.b),
    };
    let certified = match dsim.and_then(|d| check_theorem3(&fdn, &d, tol)) {
        Ok(cert) => {
            let word = if cert.verdict {
                "certified"
            } else {
                "not certified"
            };
            println!(
                "theorem 3: {word} (residual {:.3e}, tol {tol:.1e})",
                cert.residual
            );
            cert.verdict
        }
        Err(e) => {
            println!("theorem 3: not certified ({e})");
            false
        }
    };

    if fdn.n() <= MAX_SUBSET_DIM {
        match check_theorem4(&fdn, tol) {
            Ok(r) => {
                let word = if r.verdict { "pass" } else { "fail" };
                let note = if r.necessary_only {
                    ", necessary condition only"
                } else {
                    ""
                };
                println!(
                    "theorem 4: {word} (max deviation {:.3e}, sign {:+}{note})",
                    r.max_deviation, r.sign
                );
            }
            Err(e) => println!("theorem 4: not applicable ({e})"),
        }
    } else {
        println!("theorem 4: skipped (more than {MAX_SUBSET_DIM} delay lines)");
    }

    let allpass = match is_allpass(&fdn, tol) {
        Ok(r) => {
            let word = if r.allpass { "allpass" } else { "not allpass" };
            println!(
                "frequency grid: {word} (unitary defect {:.3e}, reversal defect {:.3e}, sign {:+}, {} points)",
                r.unitary_defect, r.reversal_defect, r.sign, r.grid_points
            );
            r.allpass
        }
        Err(FdnError::Unstable { max_modulus, .. }) => {
            println!("frequency grid: not allpass (unstable, max pole modulus {max_modulus:.6})");
            false
        }
        Err(e) => {
            println!("frequency grid: not allpass ({e})");
            false
        }
    };

    let verdict = match (certified, allpass) {
        (true, true) => "uniallpass",
        (false, true) => "allpass for these delays, not certified uniallpass",
        (_, false) => "not allpass",
    };
    println!("verdict: {verdict}");
    Ok(if certified && allpass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn simulate_cmd(args: SimulateArgs) -> Result<ExitCode> {
    let fdn = FdnDocument::load(&args.input)?.system()?;
    let h = impulse_response(&fdn, args.length)?;
    let p = fdn.p();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|o| (0..p).map(move |i| (o, i))).collect();

    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["n".to_string()];
    if p == 1 {
        header.push("h".into());
    } else {
        header.extend(pairs.iter().map(|(o, i)| format!("h_{o}_{i}")));
    }
    csv.write_record(&header)?;
    for (n, m) in h.iter().enumerate() {
        let mut row = vec![n.to_string()];
        row.extend(pairs.iter().map(|&(o, i)| m[(o, i)].to_string()));
        csv.write_record(&row)?;
    }
    let bytes = csv.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    emit(&args.out, std::str::from_utf8(&bytes)?)?;

    if let Some(path) = &args.wav {
        let channels: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(o, i)| h.iter().map(|m| m[(o, i)]).collect())
            .collect();
        write_wav(path, &channels, args.rate, args.split)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn write_wav(path: &Path, channels: &[Vec<f64>], rate: u32, split: bool) -> Result<()> {
    let peak = channels
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let target = 10f64.powf(-1.0 / 20.0);
    let scale = if peak > 0.0 { target / peak } else { 1.0 };
    let quantize = |x: f64| (x * scale * i16::MAX as f64).round() as i16;

    let mut files = Vec::new();
    let groups: Vec<&[Vec<f64>]> = if split {
        channels.chunks(1).collect()
    } else {
        vec![channels]
    };
    for (k, group) in groups.iter().enumerate() {
        let file = if split {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
            path.with_file_name(format!("{stem}_{k}.wav"))
        } else {
            path.to_path_buf()
        };
        let spec = hound::WavSpec {
            channels: group.len() as u16,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(&file, spec)
            .with_context(|| format!("creating {}", file.display()))?;
        for n in 0..group[0].len() {
            for ch in group.iter() {
                writer.write_sample(quantize(ch[n]))?;
            }
        }
        writer.finalize()?;
        files.push(file.display().to_string());
    }

    let meta = json!({
        "bits_per_sample": 16,
        "channels": channels.len(),
        "files": files,
        "peak": peak,
        "peak_dbfs": -1.0,
        "sample_rate": rate,
        "scale": scale,
    });
    let sidecar = path.with_extension("json");
    std::fs::write(&sidecar, to_canonical_json(&meta)?)
        .with_context(|| format!("writing {}", sidecar.display()))?;
    Ok(())
}

fn poles_cmd(input: &Path, out: &Output) -> Result<ExitCode> {
    let fdn = FdnDocument::load(input)?.system()?;
    let mut p = poles(&fdn)?;
    p.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(a.arg().total_cmp(&b.arg()))
    });
    let sink: Box<dyn Write> = match &out.output {
        Some(path) => {
            Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)
        }
        None => Box::new(io::stdout()),
    };
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    csv.write_record(["real", "imag", "modulus"])?;
    for z in p {
        csv.write_record([z.re.to_string(), z.im.to_string(), z.norm().to_string()])?;
    }
    csv.flush()?;
    Ok(ExitCode::SUCCESS)
}
