//! Command-line front end: collect excitation data, synthesize certificates,
//! verify them independently, and emit figure-ready CSV data.
//!
//! Exit codes are a stable contract:
//! 0 success, 1 usage/configuration error, 2 excitation/data failure,
//! 3 no certificate found at the requested k, 4 nonlinearity cancellation
//! failure, 5 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kcbc::datarep;
use kcbc::matcore::{self, Mat};
use kcbc::plant::{self, trajectory_from_csv, trajectory_to_csv, TrajectoryData};
use kcbc::report::{self, parse_certificate_report};
use kcbc::scenario::ScenarioConfig;
use kcbc::synth::{self, Controller, SynthStatus, SynthesisReport};
use kcbc::verify;

const EXIT_CONFIG: u8 = 1;
const EXIT_EXCITATION: u8 = 2;
const EXIT_NOT_FOUND: u8 = 3;
const EXIT_CANCELLATION: u8 = 4;
const EXIT_VERIFY_FAIL: u8 = 5;

#[derive(Parser)]
#[command(
    name = "kcbc",
    about = "Data-driven synthesis and verification of k-inductive control barrier certificates",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the excitation experiment and write the trajectory CSV.
    Collect {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the experiment horizon T.
        #[arg(long)]
        horizon: Option<usize>,
        /// Output directory (default: scenario's output_dir or ".").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a certificate and controller from a trajectory.
    Synth {
        #[arg(long)]
        scenario: PathBuf,
        /// Trajectory CSV; collected in-process when omitted.
        #[arg(long)]
        traj: Option<PathBuf>,
        /// Override the induction depth k.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// S-procedure multiplier degree (0 or 2).
        #[arg(long, value_parser = [clap::builder::PossibleValue::new("0"), clap::builder::PossibleValue::new("2")])]
        multiplier_degree: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independently re-verify a certificate report against trajectory data.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        /// Certificate report JSON produced by `synth`.
        #[arg(long)]
        report: PathBuf,
        /// Trajectory CSV the certificate was synthesized from.
        #[arg(long)]
        traj: PathBuf,
        /// Monte Carlo rollout count.
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Monte Carlo rollout length.
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit CSVs for plotting: level-set contours, region rectangles,
    /// closed-loop rollouts.
    Plotdata {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Rollout count.
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Rollout length.
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CONFIG)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Collect {
            scenario,
            seed,
            horizon,
            out,
        } => cmd_collect(&scenario, seed, horizon, out.as_deref()),
        Cmd::Synth {
            scenario,
            traj,
            k,
            seed,
            multiplier_degree,
            out,
        } => cmd_synth(
            &scenario,
            traj.as_deref(),
            k,
            seed,
            multiplier_degree.as_deref(),
            out.as_deref(),
        ),
        Cmd::Verify {
            scenario,
            report,
            traj,
            runs,
            horizon,
            seed,
            out,
        } => cmd_verify(&scenario, &report, &traj, runs, horizon, seed, out.as_deref()),
        Cmd::Plotdata {
            scenario,
            report,
            runs,
            horizon,
            seed,
            out,
        } => cmd_plotdata(&scenario, &report, runs, horizon, seed, out.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// shared helpers

fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn out_dir(cfg: &ScenarioConfig, flag: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = flag
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn collect_trajectory(
    cfg: &ScenarioConfig,
    seed: u64,
    horizon: usize,
) -> Result<TrajectoryData, CliError> {
    let pl = cfg
        .build_plant()
        .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    let dict = cfg
        .build_dictionary()
        .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    let exc = cfg.excitation(&pl, seed);
    plant::collect_excited(&pl, &cfg.x_start, &exc, horizon, &dict, 5)
        .map(|(data, _)| data)
        .map_err(|e| CliError::new(EXIT_EXCITATION, e.to_string()))
}

fn read_trajectory(path: &Path) -> Result<TrajectoryData, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    trajectory_from_csv(&text).map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))
}

// ---------------------------------------------------------------------------
// collect

fn cmd_collect(
    scenario: &Path,
    seed: Option<u64>,
    horizon: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = load_scenario(scenario)?;
    let seed = seed.unwrap_or(cfg.seed);
    let horizon = horizon.unwrap_or(cfg.horizon);
    let data = collect_trajectory(&cfg, seed, horizon)?;
    let dir = out_dir(&cfg, out)?;
    let path = dir.join(format!("{}_trajectory.csv", cfg.name));
    write_file(&path, &trajectory_to_csv(&data))?;
    println!(
        "collected {} steps from {} -> {}",
        horizon,
        cfg.name,
        path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// synth

fn cmd_synth(
    scenario: &Path,
    traj: Option<&Path>,
    k: Option<usize>,
    seed: Option<u64>,
    multiplier_degree: Option<&str>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut cfg = load_scenario(scenario)?;
    if let Some(d) = multiplier_degree {
        cfg.solver.multiplier_degree = d.parse().unwrap_or(0);
    }
    let seed = seed.unwrap_or(cfg.seed);
    let data = match traj {
        Some(p) => read_trajectory(p)?,
        None => collect_trajectory(&cfg, seed, cfg.horizon)?,
    };
    let prob = cfg
        .build_problem(k)
        .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    let nonlinear = prob.dictionary.total_terms() > prob.n;
    let rep = if nonlinear {
        synth::synthesize_nonlinear(&data, &prob)
    } else {
        synth::synthesize_linear(&data, &prob)
    }
    .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;

    let dir = out_dir(&cfg, out)?;
    let path = dir.join(format!("{}_k{}_certificate.json", cfg.name, prob.k));
    write_file(&path, &report::certificate_report_json(&rep))?;
    print_synth_summary(&cfg.name, prob.k, &rep, &path);
    synth_exit(&rep)
}

fn print_synth_summary(name: &str, k: usize, rep: &SynthesisReport, path: &Path) {
    match (&rep.status, &rep.certificate) {
        (SynthStatus::Certified, Some(c)) => println!(
            "{name} k={k}: Certified (gamma {:.6}, lambda {:.6}, epsilon {:.6}) -> {}",
            c.gamma,
            c.lambda_,
            c.epsilon,
            path.display()
        ),
        _ => println!(
            "{name} k={k}: {:?} ({}) -> {}",
            rep.status,
            rep.diagnostics.messages.join("; "),
            path.display()
        ),
    }
}

fn synth_exit(rep: &SynthesisReport) -> Result<(), CliError> {
    match rep.status {
        SynthStatus::Certified => Ok(()),
        SynthStatus::NotFoundAtK => Err(CliError::new(
            EXIT_NOT_FOUND,
            format!(
                "feasible solution not found with given k ({})",
                rep.diagnostics.messages.join("; ")
            ),
        )),
        SynthStatus::DataError => {
            let msg = rep.diagnostics.messages.join("; ");
            let code = if msg.contains("cancellation") {
                EXIT_CANCELLATION
            } else {
                EXIT_EXCITATION
            };
            Err(CliError::new(code, msg))
        }
    }
}

// ---------------------------------------------------------------------------
// verify

fn cmd_verify(
    scenario: &Path,
    report_path: &Path,
    traj: &Path,
    runs: usize,
    horizon: usize,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = load_scenario(scenario)?;
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", report_path.display())))?;
    let parsed = parse_certificate_report(&text)
        .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    let cert = parsed.certificate.ok_or_else(|| {
        CliError::new(
            EXIT_CONFIG,
            format!("report has status {} and no certificate", parsed.status),
        )
    })?;
    let k_gain = parsed
        .k_gain
        .ok_or_else(|| CliError::new(EXIT_CONFIG, "report has no controller gain"))?;

    let prob = cfg
        .build_problem(Some(cert.k))
        .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    let data = read_trajectory(traj)?;
    let lifted = plant::lift(&data, &prob.dictionary)
        .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    let rep = datarep::rep_from_gain(&data, &lifted.m0, &k_gain).map_err(|e| match e {
        datarep::DataRepError::RankDeficient { .. } => {
            CliError::new(EXIT_EXCITATION, e.to_string())
        }
        _ => CliError::new(EXIT_CONFIG, e.to_string()),
    })?;
    let ctrl = Controller {
        k_gain,
        dictionary: prob.dictionary.clone(),
    };
    let pl = cfg
        .build_plant()
        .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;

    let vrep = verify::verify_certificate(
        &cert,
        &ctrl,
        &rep,
        &prob,
        Some(&pl),
        runs,
        horizon,
        seed.unwrap_or(cfg.seed),
        verify::DEFAULT_SAMPLES,
    );
    let dir = out_dir(&cfg, out)?;
    let path = dir.join(format!("{}_k{}_verification.json", cfg.name, cert.k));
    write_file(&path, &report::verification_report_json(&vrep))?;

    if vrep.pass {
        println!("{} k={}: PASS -> {}", cfg.name, cert.k, path.display());
        Ok(())
    } else {
        let (name, worst) = vrep.condition_checks.worst();
        let witness = vrep
            .condition_checks
            .checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| format!(" at {:?}", c.argmax))
            .unwrap_or_default();
        println!(
            "{} k={}: FAIL (worst: {name} violation {worst:.3e}{witness}) -> {}",
            cfg.name,
            cert.k,
            path.display()
        );
        Err(CliError::new(
            EXIT_VERIFY_FAIL,
            format!("verification failed: {name} violation {worst:.3e}{witness}"),
        ))
    }
}

// ---------------------------------------------------------------------------
// plotdata

fn cmd_plotdata(
    scenario: &Path,
    report_path: &Path,
    runs: usize,
    horizon: usize,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = load_scenario(scenario)?;
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", report_path.display())))?;
    let parsed = parse_certificate_report(&text)
        .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    let cert = parsed
        .certificate
        .ok_or_else(|| CliError::new(EXIT_CONFIG, "report has no certificate"))?;
    let n = cert.p.rows();
    if cfg.state_dim() != n {
        return Err(CliError::new(
            EXIT_CONFIG,
            "scenario dimension does not match the certificate",
        ));
    }
    let dir = out_dir(&cfg, out)?;

    // contours
    let center: Vec<f64> = cfg.x.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
    let mut contours = String::from("set,x1,x2\n");
    let pairs: Vec<(usize, usize)> = if n == 2 {
        vec![(0, 1)]
    } else {
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect()
    };
    for &(i, j) in &pairs {
        for (label, level) in [("gamma", cert.gamma), ("lambda", cert.lambda_)] {
            let set = if n == 2 {
                label.to_string()
            } else {
                format!("{label}_x{}x{}", i + 1, j + 1)
            };
            if let Some(poly) = level_ellipse(&cert.p, level, &center, (i, j), 256) {
                for (a, b) in poly {
                    contours.push_str(&format!("{set},{a:.17e},{b:.17e}\n"));
                }
            }
        }
    }
    let contours_path = dir.join(format!("{}_contours.csv", cfg.name));
    write_file(&contours_path, &contours)?;

    // region rectangles
    let mut regions = String::from("region");
    for d in 1..=n {
        regions.push_str(&format!(",x{d}lo,x{d}hi"));
    }
    regions.push('\n');
    let mut push_region = |name: &str, b: &[(f64, f64)]| {
        regions.push_str(name);
        for &(lo, hi) in b {
            regions.push_str(&format!(",{lo:.17e},{hi:.17e}"));
        }
        regions.push('\n');
    };
    push_region("x", &cfg.x);
    push_region("x_init", &cfg.x_init);
    for (i, b) in cfg.x_unsafe.iter().enumerate() {
        push_region(&format!("x_unsafe{i}"), b);
    }
    let regions_path = dir.join(format!("{}_regions.csv", cfg.name));
    write_file(&regions_path, &regions)?;

    // rollouts
    let mut rollouts = String::from("run,t");
    for d in 1..=n {
        rollouts.push_str(&format!(",x{d}"));
    }
    rollouts.push('\n');
    if let Some(k_gain) = parsed.k_gain {
        let pl = cfg
            .build_plant()
            .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
        let dict = cfg
            .build_dictionary()
            .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
        let ctrl = Controller {
            k_gain,
            dictionary: dict,
        };
        use rand::{Rng, SeedableRng};
        for r in 0..runs {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.unwrap_or(cfg.seed));
            rng.set_stream(r as u64);
            let x0: Vec<f64> = cfg
                .x_init
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
                .collect();
            for (t, x) in verify::rollout(&pl, &ctrl, &x0, horizon).iter().enumerate() {
                rollouts.push_str(&format!("{r},{t}"));
                for v in x {
                    rollouts.push_str(&format!(",{v:.17e}"));
                }
                rollouts.push('\n');
            }
        }
    }
    let rollouts_path = dir.join(format!("{}_rollouts.csv", cfg.name));
    write_file(&rollouts_path, &rollouts)?;

    println!(
        "wrote {}, {}, {}",
        contours_path.display(),
        regions_path.display(),
        rollouts_path.display()
    );
    Ok(())
}

/// Points on the level set `x' P x = level` restricted to the plane where
/// all coordinates except `(i, j)` are fixed at `center`. The restriction of
/// a positive-definite quadratic to a plane is an ellipse (when the level is
/// reachable), so the polyline is computed in closed form.
fn level_ellipse(
    p: &Mat,
    level: f64,
    center: &[f64],
    (i, j): (usize, usize),
    points: usize,
) -> Option<Vec<(f64, f64)>> {
    let n = p.rows();
    // restricted quadratic: q(y) = y'Ay + b'y + c0 over y = (x_i, x_j)
    let a = Mat::from_rows(&[
        &[p.get(i, i), p.get(i, j)],
        &[p.get(j, i), p.get(j, j)],
    ]);
    let mut b = [0.0f64; 2];
    let mut c0 = 0.0;
    for r in 0..n {
        for c in 0..n {
            let xr = if r == i || r == j { 0.0 } else { center[r] };
            let xc = if c == i || c == j { 0.0 } else { center[c] };
            c0 += xr * p.get(r, c) * xc;
        }
    }
    for r in 0..n {
        if r == i || r == j {
            continue;
        }
        b[0] += 2.0 * center[r] * p.get(r, i);
        b[1] += 2.0 * center[r] * p.get(r, j);
    }
    let ainv = matcore::spd_inverse(&a).ok()?;
    let ystar = ainv.matvec(&[-0.5 * b[0], -0.5 * b[1]]);
    // q(ystar + d) = d'Ad + q(ystar)
    let q_star = ystar[0] * (a.get(0, 0) * ystar[0] + a.get(0, 1) * ystar[1])
        + ystar[1] * (a.get(1, 0) * ystar[0] + a.get(1, 1) * ystar[1])
        + b[0] * ystar[0]
        + b[1] * ystar[1]
        + c0;
    let r2 = level - q_star;
    if r2 <= 0.0 {
        return None;
    }
    // d = sqrt(r2) * A^{-1/2} [cos t; sin t]
    let eig = matcore::sym_eig(&a).ok()?;
    let mut inv_sqrt = Mat::zeros(2, 2);
    for r in 0..2 {
        for c in 0..2 {
            let mut v = 0.0;
            for e in 0..2 {
                v += eig.eigenvectors.get(r, e) * eig.eigenvectors.get(c, e)
                    / eig.eigenvalues[e].max(1e-300).sqrt();
            }
            inv_sqrt.set(r, c, v);
        }
    }
    let scale = r2.sqrt();
    let mut out = Vec::with_capacity(points + 1);
    for s in 0..=points {
        let t = 2.0 * std::f64::consts::PI * s as f64 / points as f64;
        let d = inv_sqrt.matvec(&[t.cos(), t.sin()]);
        out.push((ystar[0] + scale * d[0], ystar[1] + scale * d[1]));
    }
    Some(out)
}
