use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use delay_lyap::benchmarks::generate_example;
use delay_lyap::io::{fmt_g17, load_manifest, write_manifest};
use delay_lyap::study::{Sweep, dense_sweep, krylov_sweep, oracle_reference};
use delay_lyap::{DelaySystemF64, KrylovLyap, LyapApproxF64, SolveOptions, Timings};
use serde::Serialize;

use crate::{Failure, Input, Mode, Solve};

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct SystemSummary {
    n: usize,
    m: usize,
    r: usize,
    s: usize,
    delays: Vec<f64>,
}

#[derive(Serialize)]
struct PhaseTimes {
    factorization: f64,
    arnoldi: f64,
    lyapunov: f64,
    evaluation: f64,
    total: f64,
}

#[derive(Serialize)]
struct Report {
    command: Vec<String>,
    system: SystemSummary,
    h2: f64,
    k: usize,
    residual: f64,
    residual_history: Vec<(usize, f64)>,
    stable: bool,
    /// Milliseconds per phase.
    timings: PhaseTimes,
    outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Root {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct RootsReport {
    command: Vec<String>,
    system: SystemSummary,
    k: usize,
    roots: Vec<Root>,
    stable: bool,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn load(input: &Input) -> Result<DelaySystemF64, Failure> {
    let loaded = match (&input.manifest, &input.example) {
        (Some(path), _) => load_manifest(path),
        (None, Some(name)) => generate_example(name, input.n),
        (None, None) => return Err(Failure::input("give a manifest path or --example")),
    };
    // anything wrong with the input is a parse-class failure
    loaded.map_err(|e| Failure::input(e.to_string()))
}

fn summary(s: &DelaySystemF64) -> SystemSummary {
    SystemSummary { n: s.n(), m: s.m(), r: s.r(), s: s.s(), delays: s.taus().to_vec() }
}

fn options(solve: &Solve) -> SolveOptions<f64> {
    SolveOptions { k: solve.k, residual_tol: solve.tol, max_k: solve.max_k }
}

fn run(system: &DelaySystemF64, solve: &Solve) -> Result<(LyapApproxF64, Timings), Failure> {
    let mut solver = KrylovLyap::new(system)?;
    let approx = solver.solve(&options(solve))?;
    Ok((approx, solver.timings()))
}

fn report(system: &DelaySystemF64, a: &LyapApproxF64, t: Timings, evaluation: Duration, total: Duration, outputs: Vec<PathBuf>) -> Report {
    Report {
        command: std::env::args().collect(),
        system: summary(system),
        h2: a.h2_norm(),
        k: a.k,
        residual: a.relative_residual(),
        residual_history: a.history.clone(),
        stable: a.stable,
        timings: PhaseTimes {
            factorization: ms(t.factorization),
            arnoldi: ms(t.arnoldi),
            lyapunov: ms(t.projection),
            evaluation: ms(evaluation),
            total: ms(total),
        },
        outputs,
    }
}

fn json<S: Serialize>(value: &S) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

/// Writes to standard output; a closed pipe is not an error.
fn emit(text: &str) -> Outcome {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(Failure { code: 1, message: format!("cannot write to standard output: {e}") })
        }
        _ => Ok(()),
    }
}

fn write_file(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure { code: 1, message: format!("cannot write {}: {e}", path.display()) })
}

pub fn h2(input: &Input, solve: &Solve) -> Outcome {
    let start = Instant::now();
    let system = load(input)?;
    let (a, t) = run(&system, solve)?;
    emit(&(json(&report(&system, &a, t, Duration::ZERO, start.elapsed(), Vec::new())) + "\n"))
}

/// `t,P_1_1,...,P_n_n` rows, `%.17g`, LF endings.
fn lyap_csv(n: usize, times: &[f64], ps: &[nalgebra::DMatrix<f64>]) -> String {
    let mut out = String::from("t");
    for i in 1..=n {
        for j in 1..=n {
            let _ = write!(out, ",P_{i}_{j}");
        }
    }
    out.push('\n');
    for (t, p) in times.iter().zip(ps) {
        out.push_str(&fmt_g17(*t));
        for i in 0..n {
            for j in 0..n {
                out.push(',');
                out.push_str(&fmt_g17(p[(i, j)]));
            }
        }
        out.push('\n');
    }
    out
}

pub fn lyap(input: &Input, solve: &Solve, t_max: f64, samples: usize, out: Option<&Path>) -> Outcome {
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(Failure::input("--t-max must be a nonnegative number"));
    }
    if samples == 0 {
        return Err(Failure::input("--samples must be positive"));
    }
    let start = Instant::now();
    let system = load(input)?;
    let (a, t) = run(&system, solve)?;
    let eval_start = Instant::now();
    let ps = a.eval_p_grid(t_max, samples)?;
    let times: Vec<f64> = if samples == 1 {
        vec![0.0]
    } else {
        let dt = t_max / (samples - 1) as f64;
        (0..samples).map(|j| dt * j as f64).collect()
    };
    let csv = lyap_csv(system.n(), &times, &ps);
    let evaluation = eval_start.elapsed();
    match out {
        Some(path) => {
            write_file(path, &csv)?;
            let r = report(&system, &a, t, evaluation, start.elapsed(), vec![path.to_path_buf()]);
            emit(&(json(&r) + "\n"))?;
        }
        None => {
            emit(&csv)?;
            let r = report(&system, &a, t, evaluation, start.elapsed(), Vec::new());
            eprintln!("{}", json(&r));
        }
    }
    Ok(())
}

pub fn roots(input: &Input, k: usize, count: usize) -> Outcome {
    if k == 0 {
        return Err(Failure::input("--k must be positive"));
    }
    let system = load(input)?;
    let mut solver = KrylovLyap::new(&system)?;
    let est = solver.roots(k, count)?;
    let r = RootsReport {
        command: std::env::args().collect(),
        system: summary(&system),
        k,
        roots: est.roots.iter().map(|z| Root { re: z.re, im: z.im }).collect(),
        stable: est.stable,
    };
    emit(&(json(&r) + "\n"))?;
    if est.stable {
        Ok(())
    } else {
        Err(Failure { code: 3, message: "stability certificate failed: a root estimate has nonnegative real part".into() })
    }
}

fn sweep_csv(mode: Mode, sweep: &Sweep<f64>) -> String {
    let mut out = String::from(match mode {
        Mode::N => "N,err_p,err_p0\n",
        Mode::K => "k,err_p,err_h2\n",
    });
    for row in &sweep.rows {
        let _ = writeln!(out, "{},{},{}", row.param, fmt_g17(row.err_p), fmt_g17(row.err_second));
    }
    let _ = writeln!(out, "# slope: {},{}", fmt_g17(sweep.slope_p), fmt_g17(sweep.slope_second));
    out
}

#[allow(clippy::too_many_arguments)]
pub fn convergence(
    example: &str,
    n: Option<usize>,
    mode: Mode,
    grid: &[usize],
    t_max: Option<f64>,
    samples: usize,
    k_ref: Option<usize>,
    out: Option<&Path>,
) -> Outcome {
    let system = generate_example(example, n).map_err(|e| Failure::input(e.to_string()))?;
    if grid.is_empty() || grid.contains(&0) {
        return Err(Failure::input("--grid needs positive values"));
    }
    if samples < 2 {
        return Err(Failure::input("--samples must be at least 2"));
    }
    let top = *grid.iter().max().expect("nonempty");
    let sweep = match mode {
        Mode::N => {
            let t_max = t_max.unwrap_or(2.0);
            let reference = oracle_reference(&system, t_max, samples)?;
            dense_sweep(&system, grid, &reference, t_max)?
        }
        Mode::K => {
            let t_max = t_max.unwrap_or(50.0);
            let k_ref = k_ref.unwrap_or((3 * top).div_ceil(2));
            if k_ref <= top {
                return Err(Failure::input("--k-ref must exceed every grid value"));
            }
            krylov_sweep(&system, grid, k_ref, t_max, samples)?
        }
    };
    let csv = sweep_csv(mode, &sweep);
    match out {
        Some(path) => write_file(path, &csv),
        None => emit(&csv),
    }
}

pub fn generate(example: &str, n: Option<usize>, out: &Path) -> Outcome {
    let system: DelaySystemF64 = generate_example(example, n).map_err(|e| Failure::input(e.to_string()))?;
    let written = write_manifest(&system, out)?;
    let list: String = written.iter().map(|p| format!("{}\n", p.display())).collect();
    emit(&list)
}

pub fn gnuplot(csv: &Path, out: Option<&Path>) -> Outcome {
    let text = std::fs::read_to_string(csv).map_err(|e| Failure::input(format!("cannot read {}: {e}", csv.display())))?;
    let header: Vec<&str> = text.lines().next().unwrap_or("").split(',').collect();
    if header.len() < 2 {
        return Err(Failure::input(format!("{}:1: expected a CSV header", csv.display())));
    }
    let name = csv.display().to_string().replace('\'', "''");
    let mut s = String::from("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
    if header[0] == "t" {
        let _ = writeln!(s, "set xlabel 't'\nset ylabel 'P(t)'");
        let curves: Vec<String> = (2..=header.len()).map(|c| format!("'{name}' using 1:{c} with lines")).collect();
        let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    } else {
        let _ = writeln!(s, "set logscale xy\nset xlabel '{}'\nset ylabel 'normalized error'", header[0]);
        let curves: Vec<String> =
            (2..=header.len()).map(|c| format!("'{name}' using 1:{c} with linespoints")).collect();
        let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    }
    match out {
        Some(path) => write_file(path, &s),
        None => emit(&s),
    }
}
