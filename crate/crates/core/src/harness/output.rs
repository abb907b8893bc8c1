//! CSV and SVG emission. Every file is written to a temporary sibling and
//! renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::run::{RunResult, SeedOutcome};
use super::stats::{self, Summary};
use crate::diagnostics::SweepRow;
use crate::error::{Error, Result};
use crate::metrics::ScatterPoint;

pub const ITERATION_HEADER: &str =
    "iteration,best_raw_reward,mean_raw_reward,broadcast,eval_reward,update_variance,bound_rhs,bound_holds";
pub const SUMMARY_HEADER: &str = "config,runs,failed,mean,ci95_half_width,median";
pub const SCATTER_HEADER: &str = "family,seed,n,density,reachability,homogeneity";
pub const SWEEP_HEADER: &str = "instance,family,n,d,lhs,rhs,f,g,reachability,homogeneity,holds";

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn iteration_csv(run: &RunResult) -> String {
    let mut out = String::from(ITERATION_HEADER);
    out.push('\n');
    for r in &run.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iteration,
            r.best_raw_reward,
            r.mean_raw_reward,
            r.broadcast,
            opt(r.eval_reward),
            opt(r.update_variance),
            opt(r.bound_rhs),
            opt(r.bound_holds),
        )
        .unwrap();
    }
    out
}

pub fn scatter_csv(points: &[ScatterPoint]) -> String {
    let mut out = String::from(SCATTER_HEADER);
    out.push('\n');
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.family, p.seed, p.n, p.density, p.reachability, p.homogeneity
        )
        .unwrap();
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let b = &r.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.instance,
            r.family,
            r.n,
            r.d,
            b.lhs_variance,
            b.rhs_bound,
            b.f_term,
            b.g_term,
            b.reach_term,
            b.homog_term,
            b.holds
        )
        .unwrap();
    }
    out
}

/// Results of one configuration, ready to be written.
#[derive(Debug, Clone)]
pub struct ConfigOutcome {
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedOutcome>,
}

impl ConfigOutcome {
    pub fn successes(&self) -> impl Iterator<Item = &RunResult> {
        self.seeds.iter().filter_map(|s| s.result.as_ref().ok())
    }

    pub fn final_metrics(&self) -> Vec<f64> {
        self.successes().map(|r| r.final_metric).collect()
    }

    pub fn summary(&self) -> Option<Summary> {
        stats::aggregate_runs(&self.final_metrics()).ok()
    }
}

pub fn summary_csv(outcomes: &[ConfigOutcome]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for o in outcomes {
        let metrics = o.final_metrics();
        let failed = o.seeds.len() - metrics.len();
        let summary = o.summary();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&o.config.name),
            metrics.len(),
            failed,
            opt(summary.map(|s| s.mean)),
            opt(summary.and_then(|s| s.half_width)),
            opt(stats::median(&metrics)),
        )
        .unwrap();
    }
    out
}

/// Training curve (best raw reward per iteration, mean over seeds) with a
/// 95% band, as a standalone SVG.
pub fn curve_svg(title: &str, runs: &[&RunResult]) -> String {
    let len = runs.iter().map(|r| r.rows.len()).max().unwrap_or(0);
    let mut points = Vec::with_capacity(len);
    for t in 0..len {
        let vals: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.rows.get(t).map(|row| row.best_raw_reward))
            .collect();
        if let Ok(s) = stats::aggregate_runs(&vals) {
            let hw = s.half_width.unwrap_or(0.0);
            points.push((t as f64, s.mean, s.mean - hw, s.mean + hw));
        }
    }
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        xml_escape(title)
    );
    if points.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let lo = points.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.3).fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let tmax = (len.max(2) - 1) as f64;
    let x = |t: f64| pad + t / tmax * (w - 2.0 * pad);
    let y = |v: f64| h - pad - (v - lo) / span * (h - 2.0 * pad);

    let mut band = String::new();
    for p in &points {
        write!(band, "{:.2},{:.2} ", x(p.0), y(p.3)).unwrap();
    }
    for p in points.iter().rev() {
        write!(band, "{:.2},{:.2} ", x(p.0), y(p.2)).unwrap();
    }
    let line: String = points
        .iter()
        .map(|p| format!("{:.2},{:.2}", x(p.0), y(p.1)))
        .collect::<Vec<_>>()
        .join(" ");
    write!(
        svg,
        "<polygon points=\"{}\" fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\"/>\n\
         <polyline points=\"{line}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n\
         <line x1=\"{pad}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{pad}\" y=\"{lab}\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n\
         <text x=\"{r}\" y=\"{lab}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{tmax}</text>\n\
         <text x=\"{yl}\" y=\"{b}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{lo:.3}</text>\n\
         <text x=\"{yl}\" y=\"{pad}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{hi:.3}</text>\n\
         <text x=\"{cx}\" y=\"{xl}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">iteration</text>\n\
         </svg>\n",
        band.trim_end(),
        b = h - pad,
        r = w - pad,
        lab = h - pad + 16.0,
        yl = pad - 4.0,
        cx = w / 2.0,
        xl = h - 12.0,
    )
    .unwrap();
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn safe_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes per-run iteration CSVs, the echoed resolved config and a curve
/// per configuration, plus one `summary.csv` row per configuration.
/// Returns the paths written.
pub fn emit_outputs(outcomes: &[ConfigOutcome], outdir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for o in outcomes {
        let dir = outdir.join(safe_name(&o.config.name));
        let config_json = serde_json::to_string_pretty(&o.config).expect("config serializes");
        let path = dir.join("config.resolved.json");
        write_atomic(&path, config_json.as_bytes())?;
        written.push(path);
        let mut errors = String::new();
        for s in &o.seeds {
            match &s.result {
                Ok(run) => {
                    let path = dir.join(format!("seed_{}.csv", s.seed));
                    write_atomic(&path, iteration_csv(run).as_bytes())?;
                    written.push(path);
                }
                Err(e) => writeln!(errors, "seed {}: {e}", s.seed).unwrap(),
            }
        }
        if !errors.is_empty() {
            let path = dir.join("errors.txt");
            write_atomic(&path, errors.as_bytes())?;
            written.push(path);
        }
        let runs: Vec<&RunResult> = o.successes().collect();
        let path = dir.join("curve.svg");
        write_atomic(&path, curve_svg(&o.config.name, &runs).as_bytes())?;
        written.push(path);
    }
    let path = outdir.join("summary.csv");
    write_atomic(&path, summary_csv(outcomes).as_bytes())?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::{RunRow, StopReason};
    use crate::metrics::family_scatter;

    fn run(seed: u64, metric: f64) -> RunResult {
        RunResult {
            seed,
            graph_seed: seed,
            rows: vec![
                RunRow {
                    iteration: 0,
                    best_raw_reward: -1.5,
                    mean_raw_reward: -2.0,
                    broadcast: true,
                    eval_reward: None,
                    update_variance: None,
                    bound_rhs: None,
                    bound_holds: None,
                },
                RunRow {
                    iteration: 1,
                    best_raw_reward: -1.0,
                    mean_raw_reward: -1.25,
                    broadcast: false,
                    eval_reward: Some(metric),
                    update_variance: Some(0.5),
                    bound_rhs: Some(2.0),
                    bound_holds: Some(true),
                },
            ],
            initial_metric: -3.0,
            final_metric: metric,
            stop: StopReason::IterationCap,
        }
    }

    fn outcome(name: &str) -> ConfigOutcome {
        let mut config = crate::harness::config::ExperimentConfig::from_json(
            r#"{"objective": {"kind": "sphere"}, "topology": {"family": "complete"}, "agents": 4}"#,
        )
        .unwrap();
        config.name = name.into();
        ConfigOutcome {
            config,
            seeds: vec![
                SeedOutcome { seed: 0, result: Ok(run(0, -0.5)) },
                SeedOutcome { seed: 1, result: Ok(run(1, -0.25)) },
                SeedOutcome { seed: 2, result: Err("boom".into()) },
            ],
        }
    }

    #[test]
    fn iteration_csv_layout() {
        let text = iteration_csv(&run(0, -0.5));
        assert_eq!(
            text,
            format!("{ITERATION_HEADER}\n0,-1.5,-2,true,,,,\n1,-1,-1.25,false,-0.5,0.5,2,true\n")
        );
    }

    #[test]
    fn summary_has_one_row_per_config() {
        let text = summary_csv(&[outcome("a"), outcome("b,c")]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("a,2,1,-0.375,"));
        assert!(lines[2].starts_with("\"b,c\",2,1,"));
    }

    #[test]
    fn scatter_rows() {
        let pts = family_scatter(20, 0.5, 50, 0, 100).unwrap();
        let text = scatter_csv(&pts);
        assert_eq!(text.lines().count(), 201);
        assert_eq!(text.lines().next().unwrap(), SCATTER_HEADER);
    }

    #[test]
    fn emit_writes_and_overwrites() {
        let dir = tempfile::tempdir().unwrap();
        let outs = [outcome("cfg")];
        let first = emit_outputs(&outs, dir.path()).unwrap();
        assert!(first.iter().all(|p| p.exists()));
        assert!(dir.path().join("cfg/errors.txt").exists());
        let csv0 = fs::read_to_string(dir.path().join("cfg/seed_0.csv")).unwrap();
        let second = emit_outputs(&outs, dir.path()).unwrap();
        assert_eq!(first, second);
        assert_eq!(fs::read_to_string(dir.path().join("cfg/seed_0.csv")).unwrap(), csv0);
        // no temp files left behind
        let leftovers = fs::read_dir(dir.path().join("cfg")).unwrap().count();
        assert_eq!(leftovers, 5);
        let svg = fs::read_to_string(dir.path().join("cfg/curve.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    }
}
