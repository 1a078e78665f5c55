//! One function per subcommand.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use pktsched::extensions::{
    buffer_size_sweep, tandem_study, write_buffer_csv, write_tandem_csv, BufferStudyConfig, TandemConfig,
};
use pktsched::fixtures::hard_instance;
use pktsched::harness::{
    emit_csv, fmt_g, psi_study, run_protocol, scatter_svg, scenario_presets, summarize, write_psi_csv, write_runlog,
    BatchConfig, Exec, ParamSpace, PsiStudyConfig, Scenario, PRESET_NAMES,
};
use pktsched::policies::GOLDEN_RATIO;
use pktsched::workload::warmup_for;
use pktsched::{
    generate, generate_agreeable, offline_optimum_with, run as run_policy, scenario1, ArrivalModel, GenConfig,
    Instance, OfflineMode, PolicySpec, Time, Window,
};

use crate::args::{BatchCmd, BufferCmd, GenArgs, GenCmd, HardCmd, PolicyArgs, PsiCmd, RunCmd, TandemCmd};
use crate::config::write_effective;
use crate::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn create_out(dir: &Path, echo: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_effective(dir, echo)
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn model_of(n: u8) -> ArrivalModel {
    if n == 2 {
        ArrivalModel::Model2
    } else {
        ArrivalModel::Model1
    }
}

fn offline_mode(s: &str) -> Result<OfflineMode, CliError> {
    match s {
        "full" | "full-horizon" => Ok(OfflineMode::FullHorizon),
        "window" | "window-only" => Ok(OfflineMode::WindowOnly),
        _ => Err(usage(format!("unknown offline mode {s:?} (full, window)"))),
    }
}

fn gen_config(g: &GenArgs) -> Result<GenConfig, CliError> {
    let kappa = if g.kappa == "auto" {
        warmup_for(g.steps)
    } else {
        g.kappa.parse().map_err(|_| usage(format!("bad kappa {:?}", g.kappa)))?
    };
    Ok(GenConfig {
        steps: g.steps,
        lambda: g.lambda,
        w_max: g.wmax,
        d_max: g.dmax,
        model: model_of(g.model),
        bimodal_p: g.p,
        kappa,
        seed: g.seed,
    })
}

fn generate_from(g: &GenArgs) -> Result<Instance, CliError> {
    let cfg = gen_config(g)?;
    let inst = if g.agreeable { generate_agreeable(&cfg)? } else { generate(&cfg)? };
    Ok(if g.scenario1 { scenario1(&inst) } else { inst })
}

fn policy_spec(p: &PolicyArgs) -> Result<PolicySpec, CliError> {
    let mut params = Vec::new();
    let mut push = |key: &str, v: Option<String>| {
        if let Some(v) = v {
            params.push(format!("{key}={v}"));
        }
    };
    push("phi", p.phi.map(|v| v.to_string()));
    push("nbar", p.nbar.map(|v| v.to_string()));
    push("alpha", p.alpha.map(|v| v.to_string()));
    push("f", p.epoch.clone());
    push("p", p.fraction.map(|v| v.to_string()));
    let mut text = p.policy.clone();
    if !params.is_empty() {
        text.push(if text.contains(':') { ',' } else { ':' });
        text.push_str(&params.join(","));
    }
    let spec: PolicySpec = text.parse()?;
    spec.validate()?;
    Ok(spec)
}

pub fn gen(c: GenCmd, echo: &str) -> Result<(), CliError> {
    let inst = generate_from(&c.gen)?;
    let mut text: String =
        echo.lines().map(|l| if l.starts_with('#') { format!("{l}\n") } else { format!("# {l}\n") }).collect();
    text.push_str(&inst.to_text());
    match c.out {
        Some(path) => {
            write_text(&path, &text)?;
            print!("{echo}");
            println!("packets={} horizon={}", inst.len(), inst.horizon);
            println!("instance={}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn run(c: RunCmd, echo: &str) -> Result<(), CliError> {
    let spec = policy_spec(&c.policy)?;
    let mode = offline_mode(&c.offline)?;
    let (instance, default_t_end, default_window) = match &c.instance {
        Some(path) => {
            let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let inst = Instance::read_text(std::io::BufReader::new(file))?;
            let t_end = inst.horizon.max(inst.max_deadline()).max(1);
            (inst, t_end, Window::full(t_end))
        }
        None => {
            let inst = generate_from(&c.gen)?;
            let cfg = gen_config(&c.gen)?;
            if cfg.kappa > 0 {
                let t_end = cfg.horizon();
                (inst, t_end, Window::new(cfg.kappa as Time + 1, t_end))
            } else {
                let t_end = inst.horizon.max(inst.max_deadline()).max(1);
                (inst, t_end, Window::full(t_end))
            }
        }
    };
    let t_end = c.t_end.unwrap_or(default_t_end);
    let window = c.window.map_or(default_window, |s| Window::new(s.0, s.1));
    let result = run_policy(&spec, &instance, t_end, window, c.gen.seed)?;
    let off = offline_optimum_with(&instance, t_end, window, mode)?;

    create_out(&c.out, echo)?;
    let log = c.out.join("sendlog.txt");
    write_text(&log, &result.send_log_text(&instance))?;

    print!("{echo}");
    println!("spec={spec}");
    println!("packets={} t_end={t_end} window={}:{}", instance.len(), window.first, window.last);
    println!("zeta={}", fmt_g(result.zeta));
    println!("zeta_total={}", fmt_g(result.zeta_total));
    println!("nbar={}", fmt_g(result.mean_occupancy()));
    println!("zeta_off={}", fmt_g(off.zeta_off));
    println!("rho={}", fmt_g(pktsched::harness::ratio(result.zeta, off.zeta_off)));
    println!("send_log={}", log.display());
    Ok(())
}

fn batch_config(c: &BatchCmd) -> Result<BatchConfig, CliError> {
    let mut cfg = if PRESET_NAMES.iter().any(|n| n.eq_ignore_ascii_case(&c.scenario)) {
        scenario_presets(&c.scenario)?
    } else {
        let scenario: Scenario = c.scenario.parse()?;
        BatchConfig { scenario, ..BatchConfig::default() }
    };
    let space: &mut ParamSpace = &mut cfg.space;
    if let Some(s) = c.steps {
        space.steps = (s.0, s.1);
    }
    if let Some(s) = c.lambda {
        space.lambda = (s.0, s.1);
    }
    if let Some(s) = c.wmax {
        space.w_max = (s.0, s.1);
    }
    if let Some(s) = c.dmax {
        space.d_max = (s.0, s.1);
    }
    if let Some(s) = c.p {
        space.bimodal_p = (s.0, s.1);
    }
    if let Some(m) = c.model {
        space.model = model_of(m);
    }
    if let Some(n) = c.combos {
        cfg.combinations = n;
    }
    if let Some(n) = c.reps {
        cfg.reps = n;
    }
    if let Some(m) = &c.rep_mode {
        cfg.rep_mode = m.parse()?;
    }
    if !c.policies.is_empty() {
        cfg.policies = c.policies.iter().map(|p| p.parse()).collect::<Result<_, _>>()?;
    }
    if let Some(m) = &c.offline {
        cfg.offline_mode = offline_mode(m)?;
    }
    cfg.master_seed = c.seed;
    cfg.exec = Exec::with_jobs(c.jobs);
    cfg.validate()?;
    Ok(cfg)
}

pub fn batch(c: BatchCmd, echo: &str) -> Result<(), CliError> {
    let cfg = batch_config(&c)?;
    let records = run_protocol(&cfg)?;
    let labels = cfg.labels();

    create_out(&c.out, echo)?;
    let csv = c.out.join("results.csv");
    emit_csv(&records, &labels, &csv)?;
    let runlog = c.out.join("runlog.txt");
    write_runlog(create_file(&runlog)?, &cfg, &records)?;

    let mut summary = format!("records={}\n", records.len());
    for line in summarize(&labels, &records) {
        summary.push_str(&format!("{} mean={} std={} n={}\n", line.name, fmt_g(line.mean), fmt_g(line.std), line.n));
    }
    for label in &labels {
        let max = records.iter().filter_map(|r| r.rho(label)).fold(f64::NEG_INFINITY, f64::max);
        summary.push_str(&format!("rho_{label} max={}\n", fmt_g(max)));
    }
    write_text(&c.out.join("summary.txt"), &summary)?;

    if c.svg {
        for label in &labels {
            let pts: Vec<(f64, f64)> = records.iter().filter_map(|r| Some((r.nbar, r.rho(label)?))).collect();
            let svg = scatter_svg(&format!("rho_{label} vs mean occupancy"), "nbar", &format!("rho_{label}"), &pts);
            write_text(&c.out.join(format!("rho_{label}_vs_nbar.svg")), &svg)?;
        }
        let pts: Vec<(f64, f64)> = records.iter().filter_map(|r| Some((r.combination.lambda, r.rho_hat?))).collect();
        if !pts.is_empty() {
            let svg = scatter_svg("rho_hat vs arrival rate", "lambda", "rho_hat", &pts);
            write_text(&c.out.join("rho_hat_vs_lambda.svg"), &svg)?;
        }
    }

    print!("{echo}");
    print!("{summary}");
    println!("csv={}", csv.display());
    println!("runlog={}", runlog.display());
    Ok(())
}

pub fn psi(c: PsiCmd, echo: &str) -> Result<(), CliError> {
    let cfg = PsiStudyConfig {
        space: ParamSpace {
            steps: (c.steps.0, c.steps.1),
            lambda: (c.lambda.0, c.lambda.1),
            w_max: (c.wmax.0, c.wmax.1),
            d_max: (c.dmax.0, c.dmax.1),
            ..ParamSpace::default()
        },
        combinations: c.combos,
        reps: c.reps,
        master_seed: c.seed,
        grouping: c.group_by.parse()?,
        exec: Exec::with_jobs(c.jobs),
    };
    let study = psi_study(&cfg)?;

    create_out(&c.out, echo)?;
    let rows = c.out.join("psi_rows.csv");
    let cells = c.out.join("psi_cells.csv");
    write_psi_csv(create_file(&rows)?, create_file(&cells)?, &study)?;

    let mean = |v: Vec<f64>| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let psi_mean = mean(study.rows.iter().map(|r| r.psi).collect());
    let freq_mean = mean(study.rows.iter().map(|r| r.choice_freq_h).collect());
    let cell_max = study.cells.iter().map(|c| c.psi).fold(0.0, f64::max);
    print!("{echo}");
    println!("rows={} cells={}", study.rows.len(), study.cells.len());
    println!("psi_mean={}", fmt_g(psi_mean));
    println!("psi_cell_max={}", fmt_g(cell_max));
    println!("freq_h_mean={}", fmt_g(freq_mean));
    println!("rows_csv={}", rows.display());
    println!("cells_csv={}", cells.display());
    Ok(())
}

fn node_overrides(raw: &[String]) -> Result<Vec<Option<PolicySpec>>, CliError> {
    let mut out: Vec<Option<PolicySpec>> = Vec::new();
    for item in raw {
        let (k, spec) = item.split_once('=').ok_or_else(|| usage(format!("node policy {item:?} is not k=SPEC")))?;
        let k: usize = k.trim().parse().map_err(|_| usage(format!("bad node index in {item:?}")))?;
        if k == 0 {
            return Err(usage("nodes are numbered from 1"));
        }
        if out.len() < k {
            out.resize(k, None);
        }
        out[k - 1] = Some(spec.parse()?);
    }
    Ok(out)
}

pub fn tandem(c: TandemCmd, echo: &str) -> Result<(), CliError> {
    let cfg = TandemConfig {
        nodes: c.nodes,
        adjust_deadlines: true,
        policy: c.policy.parse()?,
        node_policies: node_overrides(&c.node_policies)?,
        gen: gen_config(&c.gen)?,
    };
    let pairs = tandem_study(&cfg, c.runs, c.gen.seed, Exec::with_jobs(c.jobs))?;

    create_out(&c.out, echo)?;
    let csv = c.out.join("tandem.csv");
    write_tandem_csv(create_file(&csv)?, &pairs)?;

    print!("{echo}");
    let runs = pairs.len() as f64;
    for k in 0..cfg.nodes - 1 {
        let adj = pairs.iter().map(|p| p.adjusted.node_zeta[k]).sum::<f64>() / runs;
        let raw = pairs.iter().map(|p| p.unadjusted.node_zeta[k]).sum::<f64>() / runs;
        println!("node={} zeta_adjusted={} zeta_unadjusted={}", k + 1, fmt_g(adj), fmt_g(raw));
    }
    let delivered_adj = pairs.iter().map(|p| p.adjusted.final_zeta()).sum::<f64>() / runs;
    let delivered_raw = pairs.iter().map(|p| p.unadjusted.final_zeta()).sum::<f64>() / runs;
    println!("delivered_adjusted={} delivered_unadjusted={}", fmt_g(delivered_adj), fmt_g(delivered_raw));
    println!("csv={}", csv.display());
    Ok(())
}

pub fn buffersize(c: BufferCmd, echo: &str) -> Result<(), CliError> {
    if !(c.target > 0.0 && c.target <= 1.0) {
        return Err(usage(format!("target must lie in (0, 1], got {}", c.target)));
    }
    let run_length = c.run_length.unwrap_or_else(|| (10.0 / c.target).ceil() as u64);
    let cfg = BufferStudyConfig { w_max: c.wmax, d_max: c.dmax, divisor: c.phi };
    let results = buffer_size_sweep(&c.lambda, c.target, cfg, run_length, c.seed, Exec::with_jobs(c.jobs))?;

    create_out(&c.out, echo)?;
    let csv: PathBuf = c.out.join("buffer.csv");
    write_buffer_csv(create_file(&csv)?, &results)?;

    print!("{echo}");
    for r in &results {
        println!(
            "lambda={} b={} ratio={} mean_occupancy={} exceed_fraction={} resolved={}",
            fmt_g(r.lambda),
            r.b,
            fmt_g(r.ratio),
            fmt_g(r.mean_occupancy),
            fmt_g(r.exceed_fraction),
            r.resolved
        );
    }
    println!("csv={}", csv.display());
    Ok(())
}

pub fn hardinstance(c: HardCmd, echo: &str) -> Result<(), CliError> {
    for (name, w) in [("w1", c.w1), ("w2", c.w2)] {
        if !(w > 0.0 && w.is_finite()) {
            return Err(usage(format!("{name} must be a positive weight, got {w}")));
        }
    }
    let inst = hard_instance(c.w1, c.w2);
    let window = Window::full(2);
    let mlp = run_policy(&PolicySpec::mlp(), &inst, 2, window, 0)?.zeta;
    let mg = run_policy(&PolicySpec::mg(), &inst, 2, window, 0)?.zeta;
    let off = offline_optimum_with(&inst, 2, window, OfflineMode::FullHorizon)?.zeta_off;
    print!("{echo}");
    println!("MLP={} MG={} OFF={}", fmt_g(mlp), fmt_g(mg), fmt_g(off));
    if c.w1 < c.w2 / GOLDEN_RATIO {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
        if !(close(mlp, c.w1 + c.w2) && close(mg, 2.0 * c.w2) && close(off, 2.0 * c.w2)) {
            return Err(CliError::Invariant(format!(
                "expected MLP={} MG=OFF={}",
                fmt_g(c.w1 + c.w2),
                fmt_g(2.0 * c.w2)
            )));
        }
        println!("check=ok");
    } else {
        println!("check=skipped (w1 >= w2/phi)");
    }
    Ok(())
}
