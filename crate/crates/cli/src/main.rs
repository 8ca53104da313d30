use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use subsmooth::blowup::{strict_transform_from_base, BlowupSequence, Chart, StrictTransform};
use subsmooth::casebook::{self, CASE_IDS};
use subsmooth::exactpoly::rational;
use subsmooth::partition::{
    check_partition, general_position, grid_partition, partition_subordinate_with, refine_compatible_with,
    CellPartition, Certificate, Grid, PartitionReport, ThinCell,
};
use subsmooth::semialg::{PolySource, SemialgebraicCell, Variety};
use subsmooth::smoothing::{smooth_set, GlobalSmoothing, SmoothOptions};
use subsmooth::verify::{verify_covering, verify_smoothing, verify_snc, CoveringReport, SmoothingReport, SncReport};
use subsmooth::{Polynomial, RBox, Rational};

#[derive(Parser)]
#[command(
    name = "subsmooth",
    version,
    about = "Partitions, cover smoothings and blowup charts for semialgebraic sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition the bounding box of a set into grid cells.
    Partition {
        /// Set-description JSON; its bounding box is the region.
        input: PathBuf,
        /// Grid density (cubes of side 1/q). Defaults to the coarsest grid fitting the region.
        #[arg(long)]
        q: Option<u32>,
        /// Grid offset, comma-separated rationals in [0, 1/q).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        offset: Option<Vec<String>>,
        /// JSON list of open boxes the partition must be subordinate to.
        #[arg(long)]
        covering: Option<PathBuf>,
        /// Set-description JSON the cells must be compatible with.
        #[arg(long)]
        compatible_with: Option<PathBuf>,
        /// Variety JSON the grid hyperplanes must be in general position with.
        #[arg(long)]
        general_position: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        max_retries: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Build and verify a global smoothing of a full-dimensional set.
    Smooth {
        input: PathBuf,
        /// Region as `lo:hi` per axis, comma-separated. Defaults to the set's bounding box.
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
        #[arg(long)]
        q: Option<u32>,
        #[arg(long)]
        covering: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Write a CSV point cloud `piece_id, cover coords…, image coords…`.
        #[arg(long)]
        export_points: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        points_per_piece: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a blowup sequence and print its charts.
    Blowup {
        sequence: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Strict transforms of a hypersurface along a blowup sequence.
    StrictTransform {
        /// Polynomial in the base variables: an expression or a JSON term list.
        h: PathBuf,
        sequence: PathBuf,
        /// Only this chart; defaults to every leaf chart.
        #[arg(long)]
        chart: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a worked example from the casebook.
    Example {
        id: String,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Re-verify a smoothing JSON against its set.
    Verify {
        smoothing: PathBuf,
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

/// Sequence file: base variables, optional pre-existing exceptional
/// components, and ordered blowups of chart indices.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceFile {
    vars: Vec<String>,
    #[serde(default)]
    exceptional: Vec<PolySource>,
    #[serde(default)]
    steps: Vec<StepFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepFile {
    #[serde(default)]
    chart: usize,
    center: Vec<usize>,
    #[serde(default)]
    at: Option<Vec<String>>,
    #[serde(default)]
    names: Option<Vec<String>>,
}

#[derive(Serialize)]
struct PartitionOutput {
    partition: CellPartition,
    report: PartitionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    thin: Vec<ThinCell>,
}

#[derive(Serialize)]
struct SmoothOutput {
    smoothing: GlobalSmoothing,
    report: SmoothingReport,
}

#[derive(Serialize)]
struct BlowupOutput {
    sequence: BlowupSequence,
    leaves: Vec<usize>,
    composition_ok: bool,
    gluing_max_error: f64,
    gluing_samples: usize,
}

#[derive(Serialize)]
struct TransformOutput {
    chart: usize,
    name: String,
    vars: Vec<String>,
    strict_text: String,
    factorization_ok: bool,
    #[serde(flatten)]
    transform: StrictTransform,
}

#[derive(Serialize)]
struct VerifyOutput {
    smoothing: SmoothingReport,
    covering: CoveringReport,
    snc: Vec<SncReport>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display())),
        None => print_stdout(&(json + "\n")),
    }
}

/// Writes to stdout, treating a closed pipe as success.
fn print_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn parse_rationals(items: &[String]) -> Result<Vec<Rational>> {
    items
        .iter()
        .map(|s| rational::parse(s.trim()).map_err(|e| anyhow!("bad rational {s:?}: {e}")))
        .collect()
}

fn parse_region(s: &str) -> Result<RBox> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in s.split(',') {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("region axis {part:?} is not lo:hi"))?;
        let v = parse_rationals(&[a.into(), b.into()])?;
        lo.push(v[0].clone());
        hi.push(v[1].clone());
    }
    Ok(RBox::new(lo, hi)?)
}

fn read_polynomial(path: &Path, vars: &[String]) -> Result<Polynomial> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let trimmed = text.trim();
    let source = if trimmed.starts_with(['{', '[', '"']) {
        serde_json::from_str(trimmed).with_context(|| format!("parsing {}", path.display()))?
    } else {
        PolySource::Expr(trimmed.to_string())
    };
    source
        .resolve(vars)
        .with_context(|| format!("polynomial in {}", path.display()))
}

fn build_sequence(path: &Path) -> Result<BlowupSequence> {
    let file: SequenceFile = read_json(path)?;
    let exceptional = file
        .exceptional
        .into_iter()
        .map(|p| p.resolve(&file.vars))
        .collect::<Result<Vec<_>, _>>()?;
    let base = Chart::root_with_exceptional("base", &file.vars, exceptional)?;
    let mut seq = BlowupSequence::new(base);
    for (k, step) in file.steps.iter().enumerate() {
        let at = step.at.as_deref().map(parse_rationals).transpose()?;
        seq.blow_up(step.chart, &step.center, at.as_deref(), step.names.as_deref())
            .with_context(|| format!("step {k}"))?;
    }
    Ok(seq)
}

#[allow(clippy::too_many_arguments)]
fn cmd_partition(
    input: &Path,
    q: Option<u32>,
    offset: Option<&[String]>,
    covering: Option<&Path>,
    compatible_with: Option<&Path>,
    gp: Option<&Path>,
    max_retries: u32,
    seed: u64,
    out: Option<&Path>,
) -> Result<bool> {
    let set: SemialgebraicCell = read_json(input)?;
    let region = set.bbox().clone();
    let mut certificate = None;
    let grid = if let Some(path) = gp {
        if offset.is_some() {
            bail!("--offset and --general-position are exclusive");
        }
        let x: Variety = read_json(path)?;
        let (grid, cert) = general_position(&region, &x, q.unwrap_or(1), max_retries, seed)?;
        certificate = Some(cert);
        grid
    } else {
        match (q, offset) {
            (None, None) => Grid::fitting(region.clone())?,
            (q, Some(off)) => {
                let q = q.unwrap_or(1);
                let off = parse_rationals(off)?;
                let hull = Grid::aligned_hull(&region, q, &off);
                Grid::new(q, off, hull)?
            }
            (Some(q), None) => Grid::standard(region.clone(), q)?,
        }
    };
    let mut partition = match covering {
        Some(path) => {
            let boxes: Vec<RBox> = read_json(path)?;
            partition_subordinate_with(&boxes, &grid)?
        }
        None => grid_partition(&grid.region, &grid)?,
    };
    let mut thin = Vec::new();
    if let Some(path) = compatible_with {
        let y: SemialgebraicCell = read_json(path)?;
        let r = refine_compatible_with(&partition, &y, seed)?;
        partition = r.partition;
        thin = r.thin;
    }
    let report = check_partition(&partition);
    let passed = report.passed() && certificate.as_ref().is_none_or(|c| c.passed);
    eprintln!(
        "partition: {} cells, {} violations{}",
        partition.len(),
        report.violations.len(),
        certificate
            .as_ref()
            .map(|c| format!(", general position {} after {} attempts", verdict(c.passed), c.attempts))
            .unwrap_or_default()
    );
    emit(
        &PartitionOutput {
            partition,
            report,
            certificate,
            thin,
        },
        out,
    )?;
    Ok(passed)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn export_points(gs: &GlobalSmoothing, per_piece: usize, seed: u64, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    for p in gs.sample_points(per_piece, seed) {
        let mut row = vec![p.piece.to_string()];
        row.extend(p.total.iter().map(f64::to_string));
        row.extend(p.image.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_smooth(
    input: &Path,
    region: Option<&str>,
    q: Option<u32>,
    covering: Option<&Path>,
    seed: u64,
    samples: usize,
    points: Option<&Path>,
    per_piece: usize,
    out: Option<&Path>,
) -> Result<bool> {
    let set: SemialgebraicCell = read_json(input)?;
    let region = match region {
        Some(s) => parse_region(s)?,
        None => set.bbox().clone(),
    };
    let boxes: Vec<RBox> = covering.map(read_json).transpose()?.unwrap_or_default();
    let gs = smooth_set(&set, &region, &boxes, &SmoothOptions::new(q, seed))?;
    let report = verify_smoothing(&gs, &set, samples, seed);
    if let Some(path) = points {
        export_points(&gs, per_piece, seed, path)?;
    }
    let torus = gs.pieces.iter().filter(|p| p.cover.kind() == "torus").count();
    eprintln!(
        "smooth: {} pieces ({torus} torus, {} double), {} discarded cells",
        gs.pieces.len(),
        gs.pieces.len() - torus,
        gs.discarded
    );
    for c in report.checks() {
        eprintln!(
            "  {}: {} ({} samples, {} failures)",
            c.name,
            verdict(c.passed()),
            c.samples,
            c.failures
        );
    }
    let passed = report.passed();
    emit(&SmoothOutput { smoothing: gs, report }, out)?;
    Ok(passed)
}

fn cmd_blowup(sequence: &Path, seed: u64, out: Option<&Path>) -> Result<bool> {
    let seq = build_sequence(sequence)?;
    let composition_ok = seq.check_composition()?;
    let (gluing_max_error, gluing_samples) = seq.check_gluing(50, seed);
    let passed = composition_ok && gluing_max_error < 1e-9;
    for &i in &seq.leaves() {
        let c = &seq.charts[i];
        let map: Vec<String> = c
            .map_to_base
            .iter()
            .map(|m| m.display_with(&c.vars).to_string())
            .collect();
        eprintln!("chart {i} ({}): base = ({})", c.name, map.join(", "));
    }
    emit(
        &BlowupOutput {
            leaves: seq.leaves(),
            sequence: seq,
            composition_ok,
            gluing_max_error,
            gluing_samples,
        },
        out,
    )?;
    Ok(passed)
}

fn cmd_strict_transform(h: &Path, sequence: &Path, chart: Option<usize>, out: Option<&Path>) -> Result<bool> {
    let seq = build_sequence(sequence)?;
    let h = read_polynomial(h, &seq.base().vars)?;
    let ids = match chart {
        Some(i) => {
            seq.chart(i)?;
            vec![i]
        }
        None => seq.leaves(),
    };
    let mut outputs = Vec::new();
    for i in ids {
        let c = &seq.charts[i];
        let transform = strict_transform_from_base(&h, c)?;
        let strict_text = transform.strict.display_with(&c.vars).to_string();
        eprintln!(
            "chart {i} ({}): {strict_text}  multiplicities {:?}",
            c.name, transform.multiplicities
        );
        outputs.push(TransformOutput {
            chart: i,
            name: c.name.clone(),
            vars: c.vars.clone(),
            strict_text,
            factorization_ok: transform.check_factorization(c),
            transform,
        });
    }
    let passed = outputs.iter().all(|o| o.factorization_ok);
    emit(&outputs, out)?;
    Ok(passed)
}

fn cmd_example(id: &str, delta: Option<&str>, seed: u64, json: bool) -> Result<bool> {
    let delta = match delta {
        Some(s) => rational::parse(s).map_err(|e| anyhow!("bad --delta {s:?}: {e}"))?,
        None => casebook::default_delta(),
    };
    let report = casebook::run_case(id, &delta, seed)
        .ok_or_else(|| anyhow!("unknown example {id:?}; expected one of {}", CASE_IDS.join(", ")))?;
    if json {
        emit(&report, None)?;
    } else {
        print_stdout(&report.to_string())?;
    }
    Ok(report.symbolic_passed())
}

fn cmd_verify(smoothing: &Path, input: &Path, seed: u64, samples: usize, out: Option<&Path>) -> Result<bool> {
    let set: SemialgebraicCell = read_json(input)?;
    let text = fs::read_to_string(smoothing).with_context(|| format!("reading {}", smoothing.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", smoothing.display()))?;
    // Accept both a bare smoothing and the output of `smooth`.
    let inner = value.get("smoothing").cloned().unwrap_or(value);
    let gs: GlobalSmoothing =
        serde_json::from_value(inner).with_context(|| format!("parsing {}", smoothing.display()))?;
    let region = gs.grid.region.clone();
    let report = verify_smoothing(&gs, &set, samples, seed);
    let covering = verify_covering(&gs, &set, &region, samples, seed);
    let snc: Vec<SncReport> = gs
        .pieces
        .iter()
        .map(|p| {
            let space = p.space();
            verify_snc(&space.divisor(), space.equations(), samples.min(200), seed)
        })
        .collect();
    for c in report.checks() {
        eprintln!(
            "{}: {} ({} samples, {} failures)",
            c.name,
            verdict(c.passed()),
            c.samples,
            c.failures
        );
    }
    eprintln!(
        "covering: {} ({}/{} covered)",
        verdict(covering.passed()),
        covering.covered,
        covering.samples
    );
    let snc_ok = snc.iter().all(SncReport::passed);
    eprintln!("divisor normal crossings: {}", verdict(snc_ok));
    let passed = report.passed() && covering.passed() && snc_ok;
    emit(
        &VerifyOutput {
            smoothing: report,
            covering,
            snc,
        },
        out,
    )?;
    Ok(passed)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Partition {
            input,
            q,
            offset,
            covering,
            compatible_with,
            general_position,
            max_retries,
            seed,
            out,
        } => cmd_partition(
            &input,
            q,
            offset.as_deref(),
            covering.as_deref(),
            compatible_with.as_deref(),
            general_position.as_deref(),
            max_retries,
            seed,
            out.as_deref(),
        ),
        Command::Smooth {
            input,
            region,
            q,
            covering,
            seed,
            samples,
            export_points,
            points_per_piece,
            out,
        } => cmd_smooth(
            &input,
            region.as_deref(),
            q,
            covering.as_deref(),
            seed,
            samples,
            export_points.as_deref(),
            points_per_piece,
            out.as_deref(),
        ),
        Command::Blowup { sequence, seed, out } => cmd_blowup(&sequence, seed, out.as_deref()),
        Command::StrictTransform {
            h,
            sequence,
            chart,
            out,
        } => cmd_strict_transform(&h, &sequence, chart, out.as_deref()),
        Command::Example { id, delta, seed, json } => cmd_example(&id, delta.as_deref(), seed, json),
        Command::Verify {
            smoothing,
            input,
            seed,
            samples,
            out,
        } => cmd_verify(&smoothing, &input, seed, samples, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
