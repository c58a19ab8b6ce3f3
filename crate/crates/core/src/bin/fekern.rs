use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fekern::checks;
use fekern::quadrature::{quadrature_rule, rule_table};
use fekern::refelem::{GeometryKind, Shape};
use fekern::sparse::{bench_pattern, spy_file, BenchMode, SpyStyle, DEFAULT_THRESHOLD};
use fekern::Error;

#[derive(Parser)]
#[command(name = "fekern", version, about = "Finite element kernel tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the pattern of a MatrixMarket file as SVG.
    Spy {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        /// Pixels per scalar cell.
        #[arg(long, default_value_t = 10)]
        cell: usize,
        /// Pixels of margin per nesting level.
        #[arg(long, default_value_t = 2)]
        pad: usize,
    },
    /// Time the three assembly stages of a 5-point stencil pattern.
    Bench {
        /// Grid side; the matrix has n*n rows.
        #[arg(long)]
        n: usize,
        /// Run a single mode instead of both.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Row size at which index set rows switch to a tree.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: usize,
    },
    /// Randomized geometry, quadrature and element invariant checks.
    Geomcheck {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random points per geometry and element.
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Print a quadrature rule: coordinates then weight, one point per line.
    Quad {
        /// Reference element: vertex, line, triangle, quadrilateral,
        /// tetrahedron, hexahedron, prism, pyramid, or simplex/cube with --dim.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        dim: Option<usize>,
    },
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("fekern: {message}");
    ExitCode::from(code)
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

fn spy(input: PathBuf, output: PathBuf, cell: usize, pad: usize) -> ExitCode {
    let style = SpyStyle {
        cell,
        padding: pad,
        ..SpyStyle::default()
    };
    if cell == 0 {
        return fail(1, "--cell must be positive");
    }
    match spy_file(&input, &output, &style) {
        Ok(s) => {
            println!("{} {} {}", s.rows, s.cols, s.nnz);
            ExitCode::SUCCESS
        }
        Err(e) => fail(error_code(&e), e),
    }
}

fn bench(n: usize, mode: Option<String>, reps: usize, threshold: usize) -> ExitCode {
    let modes = match mode.as_deref().map(BenchMode::parse) {
        None => vec![BenchMode::Resort, BenchMode::NoSort],
        Some(Ok(m)) => vec![m],
        Some(Err(e)) => return fail(1, e),
    };
    let mut reports = Vec::new();
    for mode in modes {
        match bench_pattern(n, mode, reps, threshold) {
            Ok(r) => {
                for (stage, secs) in r.stages() {
                    println!("{stage}\t{}\t{secs:.6e}\t{:016x}", r.mode.name(), r.checksum);
                }
                reports.push(r);
            }
            Err(e) => return fail(1, e),
        }
    }
    if let [a, b] = reports.as_slice() {
        if a.checksum != b.checksum {
            return fail(1, "modes built different patterns");
        }
        eprintln!(
            "setup-matrix nosort/resort ratio: {:.3}",
            b.setup_matrix / a.setup_matrix
        );
    }
    ExitCode::SUCCESS
}

fn geomcheck(seed: u64, points: usize) -> ExitCode {
    let results = checks::geometry_suite(seed, points)
        .into_iter()
        .chain(checks::quadrature_suite())
        .chain(checks::element_suite(seed, points));
    let mut ok = true;
    for r in results {
        ok &= r.passed;
        println!(
            "{}\t{}\tworst={:.3e}\ttol={:.1e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.worst,
            r.tolerance
        );
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn parse_kind(kind: &str, dim: Option<usize>) -> Result<GeometryKind, Error> {
    match (kind, dim) {
        ("simplex", d) => GeometryKind::new(Shape::Simplex, d.unwrap_or(1)),
        ("cube", d) => GeometryKind::new(Shape::Cube, d.unwrap_or(1)),
        (name, d) => {
            let k = GeometryKind::parse(name)?;
            match d {
                Some(d) if d != k.dim() => Err(Error::IllegalKind {
                    shape: name.to_string(),
                    dim: d,
                }),
                _ => Ok(k),
            }
        }
    }
}

fn quad(kind: String, order: usize, dim: Option<usize>) -> ExitCode {
    let rule = parse_kind(&kind, dim).and_then(|k| quadrature_rule(k, order));
    match rule {
        Ok(rule) => {
            print!("{}", rule_table(rule));
            ExitCode::SUCCESS
        }
        Err(e) => fail(1, e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Spy {
            input,
            output,
            cell,
            pad,
        } => spy(input, output, cell, pad),
        Command::Bench {
            n,
            mode,
            reps,
            threshold,
        } => bench(n, mode, reps, threshold),
        Command::Geomcheck { seed, points } => geomcheck(seed, points),
        Command::Quad { kind, order, dim } => quad(kind, order, dim),
    }
}
