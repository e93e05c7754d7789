//! Batch front-end: tabulates potentials, runs verification suites, and
//! emits CSV/JSON for plots and CI.
//!
//! Exit status: 0 when every checked margin is within tolerance, 2 when a
//! contract is violated (with a machine-readable record on stdout), 1 on
//! usage or evaluation errors.

use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use hdl_core::bump::{seeded_corpus, ExpBump};
use hdl_core::counterexample::{no_continuous_multiplier, BumpFamily, BumpedPotential};
use hdl_core::forms::{
    dirac_channel_form, hardy_discrete_min, hardy_quotient, r3_discrete_min, r3_quotient,
    scaling_demo, verify_r1, verify_r6, verify_r8, Channel,
};
use hdl_core::grid::{log_grid, log_grid_ppd};
use hdl_core::ode::{self, SolveConfig};
use hdl_core::potential::{admissible, find_t, t_closed_form, w_pm, ChannelSign, Potential};
use hdl_core::transform::{equivalence_check, VariableMap};
use hdl_core::{forms, LogTower};

/// 17 significant digits, diff-stable.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EvalFn {
    X1,
    Xk,
    Winf,
    Nbar,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PotentialKind {
    One,
    Winf,
    Wbar,
    W1,
    W2,
    W3,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Inequality {
    Hardy,
    R1,
    R3,
    R6,
    R8,
    M,
    All,
}

#[derive(Parser, Debug)]
#[command(name = "hdl", about = "numerical laboratory for sharp Hardy-type inequalities on radial Dirac channels", version)]
struct Cli {
    /// Tower constant a > 1.
    #[arg(long, global = true, default_value_t = 5.0)]
    a: f64,
    /// Relative tail cutoff for the tower series.
    #[arg(long, global = true, default_value_t = 1e-14)]
    trunc_tol: f64,
    /// Grid lower end.
    #[arg(long, global = true, default_value_t = 1e-6)]
    grid_min: f64,
    /// Grid upper end.
    #[arg(long, global = true, default_value_t = 1e2)]
    grid_max: f64,
    /// Grid points per decade (>= 16).
    #[arg(long, global = true, default_value_t = 256)]
    ppd: usize,
    /// Margin tolerance for verification subcommands.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Output format for tabular data.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for the reproducible bump corpus.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate or tabulate tower functions.
    Eval {
        #[arg(long = "fn", value_enum)]
        function: EvalFn,
        /// Single evaluation point (tabulates the grid when omitted).
        #[arg(long)]
        s: Option<f64>,
        /// Tower depth for the composed function.
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Tabulate constructed potentials with channel margins.
    Potentials {
        /// Print the threshold past which the 1/(4s)-channel envelope
        /// stays above 1, then exit.
        #[arg(long = "find-t", alias = "find-T")]
        find_t: bool,
        #[arg(long, value_enum, default_value_t = PotentialKind::W1)]
        which: PotentialKind,
    },
    /// Solve the singular multiplier problem and write its trace.
    Ode {
        #[arg(long, default_value_t = 1e-2)]
        delta: f64,
        /// Weighted-class constant (> 1/4).
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        /// Fixed-point tolerance.
        #[arg(long, default_value_t = 1e-10)]
        ode_tol: f64,
        /// Keep every n-th grid node in the trace.
        #[arg(long, default_value_t = 100)]
        stride: usize,
    },
    /// Tabulate the change of variables and optionally check equivalence.
    Transform {
        #[arg(long, value_enum, default_value_t = PotentialKind::One)]
        w: PotentialKind,
        #[arg(long)]
        check_equivalence: bool,
    },
    /// Run an inequality suite over the seeded corpus.
    Verify {
        #[arg(long, value_enum, default_value_t = Inequality::All)]
        ineq: Inequality,
        #[arg(long, default_value_t = 0.5)]
        nu: f64,
        /// Corpus size.
        #[arg(long, default_value_t = 100)]
        corpus: usize,
    },
    /// Bump-perturbation demonstration: no multiplier continuous at 0.
    Counterexample {
        #[arg(long, default_value_t = 0.5)]
        height: f64,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
    /// Mass-kept rescaling sweep exposing the sharp linear growth.
    DemoScaling {
        #[arg(long, value_enum, default_value_t = PotentialKind::W2)]
        w: PotentialKind,
        /// Largest dyadic scale.
        #[arg(long, default_value_t = 64)]
        lambda_max: u32,
    },
}

struct Output {
    path: Option<std::path::PathBuf>,
}

impl Output {
    fn write(&self, content: &str) -> std::io::Result<()> {
        match &self.path {
            Some(p) => std::fs::write(p, content),
            None => std::io::stdout().write_all(content.as_bytes()),
        }
    }
}

#[derive(serde::Serialize)]
struct VerifyRecord {
    inequality: String,
    potential: String,
    channel: i32,
    margin_min: f64,
    quotient: Option<f64>,
    grid: String,
    corpus_seed: u64,
}

#[derive(serde::Serialize)]
struct FailureRecord<'a> {
    error: &'a str,
    detail: String,
}

fn fail(detail: String) -> ExitCode {
    let rec = FailureRecord {
        error: "contract_violation",
        detail,
    };
    println!("{}", serde_json::to_string(&rec).unwrap());
    ExitCode::from(2)
}

fn build_potential(
    kind: PotentialKind,
    tower: &LogTower,
) -> hdl_core::Result<Potential> {
    Ok(match kind {
        PotentialKind::One => Potential::One,
        PotentialKind::Winf => Potential::tower_optimal(*tower),
        PotentialKind::Wbar => Potential::BarEnvelope { tower: *tower },
        PotentialKind::W1 => Potential::w1(*tower)?,
        PotentialKind::W2 => Potential::w2()?,
        PotentialKind::W3 => {
            let sol = Arc::new(ode::solve(tower, &SolveConfig::default())?);
            Potential::w3(*tower)?.attach_ode(sol)?
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("HDL_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    if cli.ppd < 16 {
        return Err("points per decade must be at least 16".into());
    }
    if !(cli.grid_min < cli.grid_max) {
        return Err("grid-min must be below grid-max".into());
    }
    let tower = LogTower::with_params(cli.a, cli.trunc_tol, 64)?;
    let out = Output {
        path: cli.out.clone(),
    };
    let grid = log_grid_ppd(cli.grid_min, cli.grid_max, cli.ppd);

    match cli.command {
        Command::Eval { function, s, k } => {
            let eval_one = |s: f64| -> hdl_core::Result<f64> {
                match function {
                    EvalFn::X1 => tower.x1(s),
                    EvalFn::Xk => tower.xk(s, k),
                    EvalFn::Winf => tower.w_infinity(s),
                    EvalFn::Nbar => tower.nbar(s),
                }
            };
            if let Some(s) = s {
                println!("{}", fmt(eval_one(s)?));
                return Ok(ExitCode::SUCCESS);
            }
            let mut csv = String::from("s,value\n");
            let mut rows = Vec::new();
            for &s in &grid {
                let v = eval_one(s)?;
                csv.push_str(&format!("{},{}\n", fmt(s), fmt(v)));
                rows.push(serde_json::json!({"s": s, "value": v}));
            }
            match cli.format {
                Format::Csv => out.write(&csv)?,
                Format::Json => out.write(&(serde_json::to_string_pretty(&rows)? + "\n"))?,
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Potentials { find_t: do_find, which } => {
            if do_find {
                let t = find_t()?;
                let radical = t_closed_form();
                println!("{}", fmt(t));
                if (t - radical).abs() > 1e-10 {
                    return Ok(fail(format!(
                        "threshold {t} disagrees with the closed form {radical}"
                    )));
                }
                return Ok(ExitCode::SUCCESS);
            }
            let potential = build_potential(which, &tower)?;
            let pair = potential.multiplier_pair().ok();
            let mut csv =
                String::from("s,W,channel_plus,channel_minus,margin_plus,margin_minus\n");
            for &s in &grid {
                let w = potential.eval(s)?;
                let (cp, cm, mp, mm) = match &pair {
                    Some(pair) => {
                        let (m_p, d_p) = pair.plus.eval(s)?;
                        let (m_m, d_m) = pair.minus.eval(s)?;
                        let cp = w_pm(m_p, d_p, s, ChannelSign::Plus);
                        let cm = w_pm(m_m, d_m, s, ChannelSign::Minus);
                        (cp, cm, cp - w, cm - w)
                    }
                    None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
                };
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fmt(s),
                    fmt(w),
                    fmt(cp),
                    fmt(cm),
                    fmt(mp),
                    fmt(mm),
                ));
            }
            out.write(&csv)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Ode {
            delta,
            c,
            ode_tol,
            stride,
        } => {
            let config = SolveConfig {
                delta,
                class_constant: c,
                tol: ode_tol,
                ..SolveConfig::default()
            };
            let sol = ode::solve(&tower, &config)?;
            let residual = sol.residual();
            let mut csv = String::from("s,w,n,m,residual\n");
            for i in (0..sol.s.len()).step_by(stride.max(1)) {
                let s = sol.s[i];
                let n = tower.nbar(s)? * (1.0 + sol.w[i]);
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt(s),
                    fmt(sol.w[i]),
                    fmt(n),
                    fmt(1.0 + n),
                    fmt(residual.v[i]),
                ));
            }
            out.write(&csv)?;
            let summary = serde_json::json!({
                "delta": sol.delta,
                "iterations": sol.iterations,
                "residual_sup": sol.residual_sup,
                "class_norm": sol.class_norm,
                "w0_extrapolated": sol.w0_extrapolated,
                "contraction_ratios": sol.contraction_ratios(),
            });
            eprintln!("{summary}");
            let ratios_ok = sol
                .contraction_ratios()
                .iter()
                .skip(1)
                .all(|r| *r < 0.9);
            if sol.residual_sup > 10.0 * ode_tol || !ratios_ok || sol.class_norm > c {
                return Ok(fail(format!(
                    "solver contract violated: residual {:.3e}, class norm {:.3}",
                    sol.residual_sup, sol.class_norm
                )));
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Transform {
            w,
            check_equivalence,
        } => {
            let potential = build_potential(w, &tower)?;
            let map = VariableMap::new(potential)?;
            let mut csv = String::from("r,y,W,V\n");
            for &r in &grid {
                let y = map.y_of_r(r)?;
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt(r),
                    fmt(y),
                    fmt(map.potential().eval(r)?),
                    fmt(map.v_of_y(y)?),
                ));
            }
            out.write(&csv)?;
            if check_equivalence {
                let rep = equivalence_check(&map, &ExpBump::new(0.05, 1.0), cli.ppd.max(256))?;
                println!("{}", serde_json::to_string(&rep)?);
                if rep.rel_mismatch > 1e-5 {
                    return Ok(fail(format!(
                        "equivalence mismatch {:.3e}",
                        rep.rel_mismatch
                    )));
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Verify { ineq, nu, corpus } => {
            let records = run_verify(&tower, ineq, nu, corpus, cli.seed, &grid, cli.tol)?;
            let json = serde_json::to_string_pretty(&records)?;
            out.write(&(json + "\n"))?;
            let worst = records
                .iter()
                .map(|r| r.margin_min)
                .fold(f64::INFINITY, f64::min);
            if worst < -cli.tol {
                return Ok(fail(format!("margin {worst:.3e} below -{:.1e}", cli.tol)));
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Counterexample { height, trials } => {
            let bumps = BumpFamily::dyadic(height, 30)?;
            let perturbed = BumpedPotential {
                tower,
                bumps,
            };
            let report = no_continuous_multiplier(&perturbed, trials, 50.0)?;
            let mut csv = String::from("trial,s_start,blowup_radius,max_m\n");
            for t in &report.trials {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    t.trial,
                    fmt(t.s_start),
                    fmt(t.blowup_radius.unwrap_or(f64::INFINITY)),
                    fmt(t.max_m),
                ));
            }
            out.write(&csv)?;
            eprintln!("{}", serde_json::to_string(&report)?);
            if height > 0.0 && !report.all_blow_up {
                return Ok(fail("a perturbed trajectory survived".into()));
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::DemoScaling { w, lambda_max } => {
            let potential = build_potential(w, &tower)?;
            let lambdas: Vec<f64> = (0..)
                .map(|k| (1u64 << k) as f64)
                .take_while(|&l| l <= lambda_max as f64)
                .collect();
            let rows = scaling_demo(&potential, &ExpBump::new(0.5, 2.0), &lambdas, 512)?;
            let mut csv =
                String::from("lambda,gradient,gradient_weighted,mass,potential_term,margin\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fmt(r.lambda),
                    fmt(r.gradient),
                    fmt(r.gradient_weighted),
                    fmt(r.mass),
                    fmt(r.potential_term),
                    fmt(r.margin),
                ));
            }
            out.write(&csv)?;
            // the gradient share must quarter per doubling
            for pair in rows.windows(2) {
                let ratio =
                    (pair[0].gradient / pair[0].mass) / (pair[1].gradient / pair[1].mass);
                if (ratio - 4.0).abs() > 0.2 {
                    return Ok(fail(format!("scaling ratio {ratio} off 4")));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn grid_label(grid: &[f64], ppd: usize) -> String {
    format!("{:.1e}..{:.1e}@{}", grid[0], grid[grid.len() - 1], ppd)
}

fn run_verify(
    tower: &LogTower,
    ineq: Inequality,
    nu: f64,
    corpus_size: usize,
    seed: u64,
    grid: &[f64],
    tol: f64,
) -> Result<Vec<VerifyRecord>, Box<dyn std::error::Error>> {
    let ppd = ((grid.len() - 1) as f64 / (grid[grid.len() - 1] / grid[0]).log10()).round()
        as usize;
    let label = grid_label(grid, ppd);
    let corpus = seeded_corpus(seed, corpus_size, grid[0] * 1e2, grid[grid.len() - 1] * 0.5);
    let mut records = Vec::new();
    let wants = |i: Inequality| matches!(ineq, Inequality::All) || std::mem::discriminant(&ineq) == std::mem::discriminant(&i);

    if wants(Inequality::Hardy) {
        let sharp_grid = log_grid((-320.0f64).exp(), 1.0, 10_000);
        let discrete = hardy_discrete_min(&sharp_grid)?;
        let worst = corpus
            .par_iter()
            .map(|b| {
                let v = b.to_grid_function(grid).unwrap();
                hardy_quotient(&v).quotient.unwrap() - 0.25
            })
            .reduce(|| f64::INFINITY, f64::min);
        records.push(VerifyRecord {
            inequality: "hardy".into(),
            potential: "none".into(),
            channel: 0,
            margin_min: worst.min(discrete - 0.25),
            quotient: Some(discrete),
            grid: label.clone(),
            corpus_seed: seed,
        });
    }
    if wants(Inequality::R3) {
        let sharp_grid = log_grid((-105.0f64).exp(), 1.0, 10_000);
        let discrete = r3_discrete_min(&sharp_grid)?;
        let worst = corpus
            .par_iter()
            .map(|b| {
                let v = b.to_grid_function(grid).unwrap();
                r3_quotient(&v).quotient.unwrap() - 1.0
            })
            .reduce(|| f64::INFINITY, f64::min);
        records.push(VerifyRecord {
            inequality: "R3".into(),
            potential: "none".into(),
            channel: 0,
            margin_min: worst.min(discrete - 1.0),
            quotient: Some(discrete),
            grid: label.clone(),
            corpus_seed: seed,
        });
    }
    if wants(Inequality::R1) {
        let worst = corpus
            .par_iter()
            .map(|b| {
                let v = b.to_grid_function(grid).unwrap();
                let rep = verify_r1(&v).unwrap();
                rep.gap / rep.mass_term.abs().max(1e-300)
            })
            .reduce(|| f64::INFINITY, f64::min);
        records.push(VerifyRecord {
            inequality: "R1".into(),
            potential: "coulomb".into(),
            channel: 0,
            margin_min: worst,
            quotient: None,
            grid: label.clone(),
            corpus_seed: seed,
        });
    }
    if wants(Inequality::R6) {
        let worst = corpus
            .par_iter()
            .map(|b| {
                let v = b.to_grid_function(grid).unwrap();
                let rep = verify_r6(nu, &v).unwrap();
                rep.gap / rep.mass_term.abs().max(1e-300)
            })
            .reduce(|| f64::INFINITY, f64::min);
        records.push(VerifyRecord {
            inequality: "R6".into(),
            potential: "coulomb".into(),
            channel: 0,
            margin_min: worst,
            quotient: None,
            grid: label.clone(),
            corpus_seed: seed,
        });
    }
    if wants(Inequality::R8) {
        for potential in [Potential::w1(*tower)?, Potential::w2()?] {
            let pair = potential.multiplier_pair()?;
            let (rp, rm) = potential.break_radii()?;
            let vgrid = forms::grid_with_nodes(grid, &[rp, rm]);
            let worst = corpus
                .par_iter()
                .map(|b| {
                    let v = b.to_grid_function(&vgrid).unwrap();
                    let rep = verify_r8(
                        &potential,
                        &pair,
                        &v,
                        Channel::ground(),
                        &v,
                        Channel::negative_ground(),
                    )
                    .unwrap();
                    let scale = rep.lhs_plus.abs().max(rep.rhs_plus.abs()).max(1e-300);
                    rep.margin_min / scale
                })
                .reduce(|| f64::INFINITY, f64::min);
            records.push(VerifyRecord {
                inequality: "R8".into(),
                potential: potential.name().into(),
                channel: 0,
                margin_min: worst,
                quotient: None,
                grid: label.clone(),
                corpus_seed: seed,
            });
        }
    }
    if wants(Inequality::M) {
        let sol = Arc::new(ode::solve(tower, &SolveConfig::default())?);
        for potential in [
            Potential::w1(*tower)?,
            Potential::w2()?,
            Potential::w3(*tower)?.attach_ode(sol)?,
        ] {
            let pair = potential.multiplier_pair()?;
            let report = admissible(&pair, &potential, grid, tol)?;
            records.push(VerifyRecord {
                inequality: "M".into(),
                potential: potential.name().into(),
                channel: 0,
                margin_min: report.min_margin,
                quotient: None,
                grid: label.clone(),
                corpus_seed: seed,
            });
        }
    }
    // channel dominance rides along with the full suite
    if matches!(ineq, Inequality::All) {
        let b = &corpus[0];
        let v = b.to_grid_function(grid)?;
        let w1 = Potential::w1(*tower)?;
        let base = dirac_channel_form(&w1, Channel::ground(), &v)?.value;
        let mut worst = f64::INFINITY;
        for n in [-3, -2, 1, 2] {
            let f = dirac_channel_form(&w1, Channel::new(n)?, &v)?.value;
            worst = worst.min((f - base) / base.abs().max(1e-300));
        }
        records.push(VerifyRecord {
            inequality: "channel-dominance".into(),
            potential: "w1".into(),
            channel: 0,
            margin_min: worst,
            quotient: None,
            grid: label,
            corpus_seed: seed,
        });
    }
    Ok(records)
}
