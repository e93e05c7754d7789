//! Acceptance suite: one test per verification criterion, each printing a
//! pass line with its measured figures (visible with `--nocapture`).

use std::time::Instant;

use hdl_core::bump::{seeded_corpus, ExpBump};
use hdl_core::counterexample::{BumpFamily, BumpedPotential, no_continuous_multiplier};
use hdl_core::forms::{
    hardy_discrete_min, r3_discrete_min, scaling_demo, verify_r6,
};
use hdl_core::grid::{log_grid, log_grid_ppd, GridFunction};
use hdl_core::ode::{self, CoefficientFns, SolveConfig};
use hdl_core::potential::{admissible, find_t, t_closed_form, Potential};
use hdl_core::transform::{equivalence_check, telescope, VariableMap};
use hdl_core::LogTower;

fn tower() -> LogTower {
    LogTower::new(5.0).unwrap()
}

fn full_solve() -> std::sync::Arc<hdl_core::ode::OdeSolution> {
    std::sync::Arc::new(ode::solve(&tower(), &SolveConfig::default()).unwrap())
}

#[test]
fn criterion_01_threshold() {
    let start = Instant::now();
    let t = find_t().unwrap();
    assert!(
        (t - 0.866876).abs() < 1e-5,
        "threshold {t} vs 0.866876"
    );
    let radical = t_closed_form();
    assert!(
        (t - radical).abs() < 1e-10,
        "radical {radical} vs root {t}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 01 threshold: PASS (T = {t:.8}, radical gap {:.2e}, {elapsed:?})",
        (t - radical).abs());
}

#[test]
fn criterion_02_generator_identity() {
    let start = Instant::now();
    let tw = tower();
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let s = 1e-8 * (1e6_f64).powf(i as f64 / 49.0);
        let lhs = s * tw.nbar_prime_series(s).unwrap() - tw.nbar(s).unwrap().powi(2);
        let rhs = 2.0 * (tw.w_infinity(s).unwrap() - 1.0);
        worst = worst.max((lhs - rhs).abs());
    }
    assert!(worst < 1e-6, "worst residual {worst:.3e}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 02 generator identity: PASS (worst residual {worst:.3e}, {elapsed:?})");
}

#[test]
fn criterion_03_partial_sum_identity() {
    let start = Instant::now();
    let tw = tower();
    let mut worst: f64 = 0.0;
    for k in 1..=6 {
        for i in 0..20 {
            let s = 1e-6 * (1e6_f64).powf(i as f64 / 19.0);
            let h = s * 1e-5;
            let up = tw.sigma_pi(s + h, k).unwrap().sigma;
            let dn = tw.sigma_pi(s - h, k).unwrap().sigma;
            let lhs =
                2.0 * s * (up - dn) / (2.0 * h) - tw.sigma_pi(s, k).unwrap().sigma.powi(2);
            let mut rhs = 0.0;
            for j in 1..=k {
                rhs += tw.sigma_pi(s, j).unwrap().pi.powi(2);
            }
            worst = worst.max((lhs - rhs).abs() / rhs.abs());
        }
    }
    assert!(worst < 1e-5, "worst relative error {worst:.3e}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 03 partial-sum identity: PASS (worst rel error {worst:.3e}, {elapsed:?})");
}

#[test]
fn criterion_04_singular_ode() {
    let start = Instant::now();
    let tw = tower();
    let sol = ode::solve(&tw, &SolveConfig::default()).unwrap();
    // contraction from iterate 2 on
    let ratios = sol.contraction_ratios();
    for (i, r) in ratios.iter().enumerate().skip(1) {
        assert!(*r < 0.9, "ratio[{i}] = {r}");
    }
    assert!(
        sol.residual_sup < 1e-9,
        "sup residual {:.3e}",
        sol.residual_sup
    );
    assert!(sol.class_norm <= 0.5, "|w log s| reached {}", sol.class_norm);
    // coefficient asymptotics, normalized by the tower itself
    let coeffs = CoefficientFns::new(tw);
    let s0 = 1e-8;
    let (f0, _, f2) = coeffs.eval(s0).unwrap();
    let x1 = tw.x1(s0).unwrap();
    let r0 = s0 * f0 / (x1 * x1) / 0.25;
    assert!((r0 - 1.0).abs() < 0.10, "f0 ratio {r0}");
    let s1 = 1e-10;
    let (_, f1, _) = coeffs.eval(s1).unwrap();
    let r1 = s1 * f1 / (tw.x1(s1).unwrap() * tw.xk(s1, 2).unwrap());
    assert!((r1 - 1.0).abs() < 0.25, "f1 ratio {r1}");
    let r2 = s0 * f2 / tw.nbar(s0).unwrap();
    assert!((r2 - 1.0).abs() < 0.10, "f2 ratio {r2}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "criterion 04 singular ODE: PASS ({} iterations, residual {:.2e}, class norm {:.3}, \
         f-ratios {:.3}/{:.3}/{:.3}, {elapsed:?})",
        sol.iterations, sol.residual_sup, sol.class_norm, r0, r1, r2
    );
}

#[test]
fn criterion_05_sharp_constants() {
    let start = Instant::now();
    let hardy_grid = log_grid((-320.0f64).exp(), 1.0, 10_000);
    let hardy = hardy_discrete_min(&hardy_grid).unwrap();
    assert!(
        (0.25..=0.2501).contains(&hardy),
        "Hardy discrete min {hardy}"
    );
    let t_hardy = start.elapsed();
    assert!(t_hardy.as_secs_f64() < 10.0);
    let start_r3 = Instant::now();
    let r3_grid = log_grid((-105.0f64).exp(), 1.0, 10_000);
    let r3 = r3_discrete_min(&r3_grid).unwrap();
    assert!((1.0..=1.001).contains(&r3), "weighted discrete min {r3}");
    let t_r3 = start_r3.elapsed();
    assert!(t_r3.as_secs_f64() < 10.0);
    println!(
        "criterion 05 sharp constants: PASS (1/4-quotient {hardy:.7} in {t_hardy:?}, \
         weighted quotient {r3:.7} in {t_r3:?})"
    );
}

#[test]
fn criterion_06_coulomb_gap() {
    let start = Instant::now();
    // equality profile at nu = 1/2
    let nu = 0.5;
    let gamma = (1.0_f64 - nu * nu).sqrt();
    let grid = log_grid(1e-8, 60.0, 12_000);
    let v = GridFunction::sample(
        grid,
        |r| r.powf(gamma - 1.0) * (-nu * r).exp(),
        Some(|r: f64| ((gamma - 1.0) / r - nu) * r.powf(gamma - 1.0) * (-nu * r).exp()),
        false,
    )
    .unwrap();
    let trial = verify_r6(nu, &v).unwrap();
    assert!(
        trial.normalized_gap.abs() < 1e-4,
        "normalized gap {:.3e}",
        trial.normalized_gap
    );
    // positivity over the seeded corpus
    let corpus_grid = log_grid(1e-6, 100.0, 3000);
    let mut min_norm_gap = f64::INFINITY;
    for b in seeded_corpus(42, 100, 1e-3, 50.0) {
        let vb = b.to_grid_function(&corpus_grid).unwrap();
        let rep = verify_r6(nu, &vb).unwrap();
        min_norm_gap = min_norm_gap.min(rep.gap / rep.mass_term.abs().max(1e-300));
        assert!(
            rep.gap >= -1e-8 * rep.mass_term.abs(),
            "corpus gap {:.3e}",
            rep.gap
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "criterion 06 Coulomb gap: PASS (trial gap {:.2e}, corpus min normalized gap {:.2e}, \
         {elapsed:?})",
        trial.normalized_gap, min_norm_gap
    );
}

#[test]
fn criterion_07_transform_equivalence() {
    let start = Instant::now();
    let bumps = [
        ExpBump::new(0.05, 1.0),
        ExpBump::new(0.3, 2.0),
        ExpBump::new(1.0, 8.0),
        ExpBump::new(0.01, 0.2),
        ExpBump::new(2.0, 20.0),
    ];
    let mut worst: f64 = 0.0;
    for potential in [Potential::One, Potential::w2().unwrap()] {
        let map = VariableMap::new(potential).unwrap();
        for b in &bumps {
            let rep = equivalence_check(&map, b, 512).unwrap();
            worst = worst.max(rep.rel_mismatch);
        }
    }
    assert!(worst < 1e-6, "worst mismatch {worst:.3e}");
    // second-order convergence under refinement, measured where the
    // potential kink makes the trapezoid error genuinely O(h^2)
    let map = VariableMap::new(Potential::w2().unwrap()).unwrap();
    let b = ExpBump::new(0.3, 2.0);
    let coarse = equivalence_check(&map, &b, 64).unwrap().rel_mismatch;
    let finest = equivalence_check(&map, &b, 512).unwrap().rel_mismatch;
    let order = (coarse / finest).log2() / 3.0;
    assert!((1.5..=2.5).contains(&order), "observed order {order:.2}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "criterion 07 transform equivalence: PASS (worst mismatch {worst:.2e}, \
         observed order {order:.2}, {elapsed:?})"
    );
}

#[test]
fn criterion_08_telescoping() {
    let start = Instant::now();
    let tw = tower();
    let bumps = [ExpBump::new(0.02, 0.9), ExpBump::new(0.001, 0.1)];
    let mut worst: f64 = 0.0;
    for b in &bumps {
        for k in 1..=3 {
            let rep = telescope(&tw, b, k, 1.0, 512).unwrap();
            assert!(rep.rel_gap < 1e-5, "k = {k}: gap {:.3e}", rep.rel_gap);
            assert!(rep.remainder >= 0.0);
            worst = worst.max(rep.rel_gap);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("criterion 08 telescoping: PASS (worst rel gap {worst:.2e}, {elapsed:?})");
}

#[test]
fn criterion_09_construction_soundness() {
    let start = Instant::now();
    let tw = tower();
    let sol = full_solve();
    let grid = log_grid_ppd(1e-6, 1e2, 256);
    let potentials = [
        Potential::w1(tw).unwrap(),
        Potential::w2().unwrap(),
        Potential::w3(tw).unwrap().attach_ode(sol).unwrap(),
    ];
    let mut details = String::new();
    for p in &potentials {
        let pair = p.multiplier_pair().unwrap();
        let report = admissible(&pair, p, &grid, 1e-9).unwrap();
        assert!(
            report.min_margin >= -1e-9,
            "{}: min margin {:.3e}",
            p.name(),
            report.min_margin
        );
        for &s in &grid {
            assert!(p.eval(s).unwrap() >= 1.0 - 1e-12, "{} below 1 at {s}", p.name());
        }
        details.push_str(&format!("{} margin {:.1e}; ", p.name(), report.min_margin));
    }
    // linear growth with the sharp coefficient at s = 100
    for p in &potentials[1..] {
        let ratio = p.eval(100.0).unwrap() / 100.0;
        assert!((ratio - 1.0).abs() < 1e-3, "{}: W/s = {ratio}", p.name());
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("criterion 09 construction soundness: PASS ({details}{elapsed:?})");
}

#[test]
fn criterion_10_necessity_demos() {
    let start = Instant::now();
    // mass-kept rescaling: the gradient share decays like 1/λ^2 ...
    let lambdas = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    let rows = scaling_demo(&Potential::w2().unwrap(), &ExpBump::new(0.5, 2.0), &lambdas, 512)
        .unwrap();
    for pair in rows.windows(2) {
        let ratio = (pair[0].gradient / pair[0].mass) / (pair[1].gradient / pair[1].mass);
        assert!(
            (ratio - 4.0).abs() <= 0.05 * 4.0,
            "quartering ratio {ratio}"
        );
    }
    for r in &rows {
        assert!(r.margin >= -1e-10 * r.mass, "sharp-slope margin {:.3e}", r.margin);
    }
    // ... and a super-critical slope fails at scale
    let bad = scaling_demo(&Potential::Linear(2.0), &ExpBump::new(0.5, 2.0), &lambdas, 512)
        .unwrap();
    assert!(
        bad.last().unwrap().margin < 0.0,
        "slope-2 potential should violate the inequality at scale"
    );
    // bump perturbations force strictly earlier escape than the control
    let tw = tower();
    let mut radii = Vec::new();
    for &height in &[0.25, 0.5, 1.0] {
        let w = BumpedPotential {
            tower: tw,
            bumps: BumpFamily::dyadic(height, 30).unwrap(),
        };
        let rep = no_continuous_multiplier(&w, 3, 50.0).unwrap();
        assert!(rep.all_blow_up, "height {height}: {:?}", rep.trials);
        for (b, c) in rep.trials.iter().zip(rep.control.iter()) {
            let rb = b.blowup_radius.expect("perturbed flow must escape");
            let rc = c.blowup_radius.expect("control escapes past the bumps");
            assert!(rb < rc, "height {height}: {rb} !< {rc}");
            assert!(rc > 1.1, "control escaped inside the bump region");
        }
        radii.push(rep.trials[0].blowup_radius.unwrap());
    }
    assert!(
        radii[0] > radii[1] && radii[1] > radii[2],
        "escape radius should shrink with height: {radii:?}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "criterion 10 necessity demos: PASS (escape radii {radii:.3?} for heights \
         0.25/0.5/1.0, {elapsed:?})"
    );
}
