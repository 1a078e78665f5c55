//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! `cargo test --test acceptance -- 3 7` runs only criteria 3 and 7.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pktsched::assignment::{AssignmentItem, AssignmentProblem};
use pktsched::extensions::{buffer_size_study, tandem_study, BufferStudyConfig, TandemConfig};
use pktsched::fixtures::hard_instance;
use pktsched::harness::{
    mean_std, psi_study, ratio, run_protocol, scenario_presets, write_csv, BatchConfig, Exec, ParamSpace,
    PsiStudyConfig, RepMode,
};
use pktsched::policies::{PolicySpec, GOLDEN_RATIO};
use pktsched::workload::{derive_seed, warmup_for};
use pktsched::{
    generate, generate_agreeable, offline_optimum, offline_optimum_with, run, solve, solve_bruteforce, GenConfig,
    OfflineMode, Time, Window,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = fn() -> Outcome;

fn all_policies() -> Vec<PolicySpec> {
    vec![
        PolicySpec::mg(),
        PolicySpec::Greedy,
        PolicySpec::edf_alpha(GOLDEN_RATIO),
        PolicySpec::mlp(),
        PolicySpec::mm(10.0),
        PolicySpec::lmg(),
        PolicySpec::smmg(0.95),
    ]
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..500 {
        let slots: Time = rng.random_range(1..=6);
        let n = rng.random_range(0..=8);
        let items = (0..n)
            .map(|id| {
                let a = rng.random_range(0..slots);
                let b = rng.random_range(0..slots);
                AssignmentItem { id, weight: rng.random_range(1..=30) as f64, lo: a.min(b), hi: a.max(b) }
            })
            .collect();
        let p = AssignmentProblem::new(items, 0, slots - 1).unwrap();
        if solve(&p).total_weight != solve_bruteforce(&p).unwrap().total_weight {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("500 problems, {mismatches} mismatches, {elapsed:.2?}"),
    )
}

fn hard_instance_table() -> Outcome {
    let inst = hard_instance(1.0, 100.0);
    let w = Window::full(2);
    let mlp = run(&PolicySpec::mlp(), &inst, 2, w, 0).unwrap().zeta;
    let mg = run(&PolicySpec::mg(), &inst, 2, w, 0).unwrap().zeta;
    let off = offline_optimum(&inst, 2, w).unwrap().zeta_off;
    outcome(mlp == 101.0 && mg == 200.0 && off == 200.0, format!("MLP={mlp} MG={mg} OFF={off}"))
}

fn random_gen(rng: &mut ChaCha8Rng, seed: u64) -> GenConfig {
    let steps = rng.random_range(1..=100);
    GenConfig {
        steps,
        lambda: rng.random_range(0.3..=8.0),
        w_max: rng.random_range(1..=20),
        d_max: rng.random_range(0..=20),
        kappa: warmup_for(steps),
        seed,
        ..Default::default()
    }
}

fn dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let policies = all_policies();
    let (mut worst, mut violations) = (0.0f64, 0);
    let (mut worst_window, mut window_violations, mut counted_above) = (0.0f64, 0, 0);
    for i in 0..1000 {
        let cfg = random_gen(&mut rng, derive_seed(3, i, 0));
        let inst = generate(&cfg).unwrap();
        let h = cfg.horizon();
        let full = Window::full(h);
        let off = offline_optimum(&inst, h, full).unwrap().zeta_off;
        // measured window of the protocol, against the window-restricted optimum
        let w = Window::new(cfg.kappa as Time + 1, h);
        let off_window = offline_optimum_with(&inst, h, w, OfflineMode::WindowOnly).unwrap().zeta_off;
        let off_counted = offline_optimum(&inst, h, w).unwrap().zeta_off;
        for p in &policies {
            let r = run(p, &inst, h, full, 0).unwrap();
            let rho = ratio(r.zeta_total, off);
            worst = worst.max(rho);
            violations += (rho > 1.0 + 1e-9) as usize;
            let zw: f64 = r.sent.iter().filter(|(t, _)| w.contains(*t)).map(|&(_, id)| inst.packets[id].weight).sum();
            let rho_w = ratio(zw, off_window);
            worst_window = worst_window.max(rho_w);
            window_violations += (rho_w > 1.0 + 1e-9) as usize;
            counted_above += (ratio(zw, off_counted) > 1.0 + 1e-9) as usize;
        }
    }
    outcome(
        violations == 0 && window_violations == 0,
        format!(
            "1000 instances x {} policies: max rho {worst:.6} ({violations} violations), \
             windowed max rho {worst_window:.6} ({window_violations} violations); \
             full-horizon optimum counted on the window is exceeded in {counted_above} runs",
            policies.len()
        ),
    )
}

fn mg_bound_agreeable() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut violations) = (f64::INFINITY, 0);
    for i in 0..500 {
        let mut cfg = random_gen(&mut rng, derive_seed(4, i, 0));
        cfg.kappa = 0;
        let inst = generate_agreeable(&cfg).unwrap();
        let t_end = cfg.horizon() + cfg.d_max as Time;
        let w = Window::full(t_end);
        let off = offline_optimum(&inst, t_end, w).unwrap().zeta_off;
        let rho = ratio(run(&PolicySpec::mg(), &inst, t_end, w, 0).unwrap().zeta, off);
        worst = worst.min(rho);
        if rho < 1.0 / GOLDEN_RATIO - 1e-9 {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("500 agreeable instances, min rho_MG {worst:.4} (bound {:.4})", 1.0 / GOLDEN_RATIO),
    )
}

fn scenario1_rho_hat() -> Outcome {
    let start = Instant::now();
    let cfg = BatchConfig { rep_mode: RepMode::FreshInstance, master_seed: 5, ..scenario_presets("S1").unwrap() };
    let records = run_protocol(&cfg).unwrap();
    let v: Vec<f64> = records.iter().filter_map(|r| r.rho_hat).collect();
    let (m, s) = mean_std(&v);
    let elapsed = start.elapsed();
    outcome(
        m >= 1.02 && elapsed < Duration::from_secs(600),
        format!("50 combos x 20 fresh reps: mean rho_hat {m:.4} (sd {s:.4}), {elapsed:.1?}"),
    )
}

fn dip_shape() -> Outcome {
    let at = |lambda: f64| {
        let cfg = BatchConfig {
            space: ParamSpace {
                steps: (200, 200),
                lambda: (lambda, lambda),
                w_max: (20, 20),
                d_max: (20, 20),
                ..Default::default()
            },
            combinations: 1,
            reps: 30,
            rep_mode: RepMode::FreshInstance,
            policies: vec![PolicySpec::mlp()],
            master_seed: 6,
            ..Default::default()
        };
        run_protocol(&cfg).unwrap()[0].rho("mlp").unwrap()
    };
    let (low, mid, high) = (at(0.7), at(2.5), at(20.0));
    outcome(
        low >= mid + 0.01 && high >= mid + 0.01,
        format!("rho_MLP at lambda 0.7 / 2.5 / 20: {low:.4} / {mid:.4} / {high:.4}"),
    )
}

fn psi_ceiling() -> Outcome {
    let cfg = PsiStudyConfig { master_seed: 7, ..Default::default() };
    let study = psi_study(&cfg).unwrap();
    let worst = study.cells.iter().map(|c| c.psi).fold(0.0f64, f64::max);
    let mean = study.rows.iter().map(|r| r.psi).sum::<f64>() / study.rows.len() as f64;
    outcome(
        worst <= 0.70,
        format!(
            "{} combos in {} (wmax, dmax) cells: max cell psi {worst:.4}, mean {mean:.4}",
            study.rows.len(),
            study.cells.len()
        ),
    )
}

fn scenario2_ordering() -> Outcome {
    let cfg = BatchConfig { master_seed: 8, ..scenario_presets("S2").unwrap() };
    let records = run_protocol(&cfg).unwrap();
    let mg: Vec<f64> = records.iter().filter_map(|r| r.rho("mg")).collect();
    let mlp: Vec<f64> = records.iter().filter_map(|r| r.rho("mlp")).collect();
    let (a, _) = mean_std(&mg);
    let (b, _) = mean_std(&mlp);
    outcome(b >= a + 0.005, format!("mean rho_MG {a:.4}, rho_MLP {b:.4}, diff {:.4}", b - a))
}

fn buffer_sizing() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (i, lambda) in [2.0, 10.0, 50.0, 100.0].into_iter().enumerate() {
        let start = Instant::now();
        let r = buffer_size_study(lambda, 1e-6, BufferStudyConfig::default(), 10_000_000, derive_seed(9, i as u64, 0))
            .unwrap();
        let elapsed = start.elapsed();
        let ok = (1.0..=2.0).contains(&r.ratio)
            && (lambda != 100.0 || (120..=190).contains(&r.b))
            && elapsed < Duration::from_secs(300);
        pass &= ok;
        lines.push(format!(
            "lambda {lambda}: b {} ratio {:.3} mean occ {:.1} ({elapsed:.1?})",
            r.b, r.ratio, r.mean_occupancy
        ));
    }
    outcome(pass, lines.join("; "))
}

fn tandem() -> Outcome {
    let cfg = TandemConfig::default();
    let pairs = tandem_study(&cfg, 30, 10, Exec::default()).unwrap();
    let monotone = pairs
        .iter()
        .all(|p| [&p.adjusted, &p.unadjusted].iter().all(|r| r.node_zeta.windows(2).all(|w| w[1] <= w[0] + 1e-9)));
    let n = pairs.len() as f64;
    let with = pairs.iter().map(|p| p.adjusted.final_zeta()).sum::<f64>() / n;
    let without = pairs.iter().map(|p| p.unadjusted.final_zeta()).sum::<f64>() / n;
    let node1 = pairs.iter().map(|p| p.adjusted.node_zeta[0]).sum::<f64>() / n;
    outcome(
        monotone && with >= without,
        format!("30 runs: downstream dominance {monotone}; mean final zeta adjusted {with:.1}, unadjusted {without:.1} (node 1 {node1:.1})"),
    )
}

fn lmg() -> Outcome {
    let cfg = BatchConfig {
        combinations: 200,
        master_seed: 11,
        policies: vec![PolicySpec::mg(), PolicySpec::lmg()],
        ..scenario_presets("MOD").unwrap()
    };
    let records = run_protocol(&cfg).unwrap();
    let label = PolicySpec::lmg().label();
    let pairs: Vec<(f64, f64)> = records.iter().map(|r| (r.zeta("mg").unwrap(), r.zeta(&label).unwrap())).collect();
    let wins = pairs.iter().filter(|(mg, l)| l >= mg).count() as f64 / pairs.len() as f64;
    let change: Vec<f64> = pairs.iter().filter(|(mg, _)| *mg > 0.0).map(|(mg, l)| (l - mg) / mg).collect();
    let (mean, _) = mean_std(&change);
    outcome(
        wins >= 0.5 && (-0.02..=0.05).contains(&mean),
        format!("200 scenarios: LMG >= MG in {:.1}%, mean relative change {:+.3}%", wins * 100.0, mean * 100.0),
    )
}

fn smmg() -> Outcome {
    let cfg = BatchConfig {
        combinations: 2000,
        master_seed: 12,
        policies: vec![PolicySpec::mg(), PolicySpec::smmg(0.95)],
        ..scenario_presets("MOD").unwrap()
    };
    let records = run_protocol(&cfg).unwrap();
    let label = PolicySpec::smmg(0.95).label();
    let diffs: Vec<f64> = records
        .iter()
        .filter(|r| (8.0..=12.0).contains(&r.nbar))
        .map(|r| r.rho(&label).unwrap() - r.rho("mg").unwrap())
        .collect();
    let (mean, _) = mean_std(&diffs);
    outcome(
        !diffs.is_empty() && mean >= 0.0,
        format!("{} of 2000 scenarios with nbar in [8, 12]: mean rho_SMMG - rho_MG {mean:+.5}", diffs.len()),
    )
}

fn determinism() -> Outcome {
    let csv = |jobs: usize| {
        let cfg = BatchConfig {
            combinations: 12,
            reps: 3,
            rep_mode: RepMode::FreshInstance,
            master_seed: 13,
            exec: Exec::with_jobs(jobs),
            policies: vec![PolicySpec::mg(), PolicySpec::mlp(), PolicySpec::smmg(0.95)],
            ..scenario_presets("S2").unwrap()
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &cfg.labels(), &run_protocol(&cfg).unwrap()).unwrap();
        buf
    };
    let (a, b, c) = (csv(1), csv(1), csv(8));
    outcome(
        a == b && a == c,
        format!("rerun identical {}, jobs 1 vs 8 identical {}, {} bytes", a == b, a == c, a.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check); 13] = [
        (1, "oracle equivalence", oracle_equivalence),
        (2, "hard instance", hard_instance_table),
        (3, "offline dominance", dominance),
        (4, "MG bound on agreeable deadlines", mg_bound_agreeable),
        (5, "scenario 1 rho_hat", scenario1_rho_hat),
        (6, "rho_MLP dip over lambda", dip_shape),
        (7, "psi ceiling", psi_ceiling),
        (8, "scenario 2 ordering", scenario2_ordering),
        (9, "buffer sizing", buffer_sizing),
        (10, "tandem", tandem),
        (11, "LMG vs MG", lmg),
        (12, "SMMG vs MG", smmg),
        (13, "determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        failed += !o.pass as usize;
        println!(
            "acceptance {n:>2} {name:<32} {} [{:.1?}] {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            o.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
