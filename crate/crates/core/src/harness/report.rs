//! CSV, run-log and SVG output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::batch::{BatchConfig, BatchRecord, RepMode};
use super::psi::PsiStudy;
use crate::error::Result;
use crate::workload::{derive_seed, ArrivalModel};

/// `printf("%g")`: six significant digits, trailing zeros dropped,
/// exponent form outside `1e-4 <= |x| < 1e6`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let fixed = format!("{:.*}", (5 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

/// Column names for a batch over policies with the given labels.
pub fn csv_header(labels: &[String]) -> Vec<String> {
    let mut h: Vec<String> =
        ["scenario", "T", "lambda", "wmax", "dmax", "p", "kappa", "nbar", "psi", "zeta_off"].map(String::from).into();
    h.extend(labels.iter().map(|l| format!("zeta_{l}")));
    h.extend(labels.iter().map(|l| format!("rho_{l}")));
    h.extend(["rho_hat", "freq_h", "combo", "seed", "reps"].map(String::from));
    h
}

fn csv_row(labels: &[String], r: &BatchRecord) -> Vec<String> {
    let c = &r.combination;
    let p = match c.model {
        ArrivalModel::Model2 => fmt_g(c.bimodal_p),
        ArrivalModel::Model1 => String::new(),
    };
    let mut row = vec![
        r.scenario.to_string(),
        c.steps.to_string(),
        fmt_g(c.lambda),
        c.w_max.to_string(),
        c.d_max.to_string(),
        p,
        c.kappa.to_string(),
        fmt_g(r.nbar),
        opt(r.psi),
        fmt_g(r.zeta_off),
    ];
    row.extend(labels.iter().map(|l| opt(r.zeta(l))));
    row.extend(labels.iter().map(|l| opt(r.rho(l))));
    row.extend([opt(r.rho_hat), opt(r.choice_freq_h), c.index.to_string(), r.seed.to_string(), r.reps.to_string()]);
    row
}

pub fn write_csv<W: Write>(out: W, labels: &[String], records: &[BatchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(labels))?;
    for r in records {
        w.write_record(csv_row(labels, r))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per record under a fixed header; byte-identical for identical input.
pub fn emit_csv(records: &[BatchRecord], labels: &[String], path: &Path) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), labels, records)
}

/// Seeds and parameters of every combination, enough to replay any row.
pub fn write_runlog<W: Write>(mut out: W, cfg: &BatchConfig, records: &[BatchRecord]) -> Result<()> {
    writeln!(out, "# master_seed={} rep_mode={} reps={}", cfg.master_seed, cfg.rep_mode, cfg.reps)?;
    writeln!(out, "# instance seed = derive_seed(master_seed, combo, rep); rep is 0 in literal mode")?;
    for r in records {
        let c = &r.combination;
        let seeds: Vec<String> = match cfg.rep_mode {
            RepMode::Literal => vec![r.seed.to_string()],
            RepMode::FreshInstance => {
                (0..cfg.reps).map(|rep| derive_seed(cfg.master_seed, c.index as u64, rep as u64).to_string()).collect()
            }
        };
        writeln!(
            out,
            "combo={} T={} lambda={} wmax={} dmax={} p={} kappa={} model={:?} seeds={}",
            c.index,
            c.steps,
            c.lambda,
            c.w_max,
            c.d_max,
            c.bimodal_p,
            c.kappa,
            c.model,
            seeds.join(",")
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Per-combination and per-cell ψ tables.
pub fn write_psi_csv<W: Write>(rows_out: W, cells_out: W, study: &PsiStudy) -> Result<()> {
    let mut w = csv::Writer::from_writer(rows_out);
    w.write_record(["combo", "T", "lambda", "wmax", "dmax", "psi", "freq_h"])?;
    for r in &study.rows {
        let c = &r.combination;
        w.write_record([
            c.index.to_string(),
            c.steps.to_string(),
            fmt_g(c.lambda),
            c.w_max.to_string(),
            c.d_max.to_string(),
            fmt_g(r.psi),
            fmt_g(r.choice_freq_h),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(cells_out);
    w.write_record(["wmax", "dmax", "combo", "psi", "freq_h", "count"])?;
    let key = |k: Option<u32>| k.map(|v| v.to_string()).unwrap_or_default();
    for c in &study.cells {
        w.write_record([
            key(c.w_max),
            key(c.d_max),
            c.combination.map(|v| v.to_string()).unwrap_or_default(),
            fmt_g(c.psi),
            fmt_g(c.choice_freq_h),
            c.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A plain scatter plot. Non-finite points are skipped.
pub fn scatter_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let span = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = span(&mut pts.iter().map(|p| p.0));
    let (y0, y1) = span(&mut pts.iter().map(|p| p.1));
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        W / 2.0,
        esc(title)
    ));
    s.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = H - M,
        r = W - M
    ));
    for (v, x) in [(x0, M), (x1, W - M)] {
        s.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
            H - M + 16.0,
            fmt_g(v)
        ));
    }
    for (v, y) in [(y0, H - M), (y1, M)] {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
            M - 6.0,
            fmt_g(v)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        W / 2.0,
        H - 15.0,
        esc(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 15 {})\">{}</text>\n",
        H / 2.0,
        H / 2.0,
        esc(y_label)
    ));
    for (x, y) in pts {
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.7\"/>\n",
            sx(x),
            sy(y)
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::batch::{run_protocol, ParamSpace};
    use crate::harness::exec::Exec;

    #[test]
    fn g_format() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.333333"),
            (2.0 / 3.0, "0.666667"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (999999.5, "1e+06"),
            (100.0, "100"),
            (0.97345678, "0.973457"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g(x), want, "{x}");
        }
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    fn cfg() -> BatchConfig {
        BatchConfig {
            space: ParamSpace {
                steps: (40, 50),
                lambda: (0.5, 3.0),
                w_max: (1, 8),
                d_max: (0, 5),
                ..Default::default()
            },
            combinations: 3,
            reps: 2,
            master_seed: 5,
            exec: Exec::Sequential,
            ..Default::default()
        }
    }

    #[test]
    fn header_only_for_no_records() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &cfg().labels(), &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with(
            "scenario,T,lambda,wmax,dmax,p,kappa,nbar,psi,zeta_off,zeta_mg,zeta_mlp,rho_mg,rho_mlp,rho_hat"
        ));
    }

    #[test]
    fn one_line_per_record_and_reproducible() {
        let c = cfg();
        let records = run_protocol(&c).unwrap();
        let mut a = Vec::new();
        write_csv(&mut a, &c.labels(), &records[..1]).unwrap();
        assert_eq!(String::from_utf8(a).unwrap().lines().count(), 2);
        let render = || {
            let mut buf = Vec::new();
            write_csv(&mut buf, &c.labels(), &run_protocol(&c).unwrap()).unwrap();
            buf
        };
        assert_eq!(render(), render());
    }

    #[test]
    fn runlog_lists_every_combination() {
        let c = BatchConfig { rep_mode: RepMode::FreshInstance, ..cfg() };
        let records = run_protocol(&c).unwrap();
        let mut buf = Vec::new();
        write_runlog(&mut buf, &c, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("combo=")).count(), 3);
        assert!(text.lines().nth(2).unwrap().contains(&format!("seeds={},", records[0].seed)));
    }

    #[test]
    fn svg_has_one_marker_per_finite_point() {
        let s = scatter_svg("t", "x", "y", &[(1.0, 2.0), (2.0, 3.0), (f64::NAN, 1.0)]);
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.starts_with("<svg"));
    }
}
