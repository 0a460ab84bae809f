use std::io::Write;

use fdpr::analysis::{certify, convergence_study, lebesgue_bound, scan, stability_bound, theory_constants, Budgets};
use fdpr::engine::Engine;
use fdpr::weights::{Profile, WeightSpec};

use crate::config::{Command, ExperimentConfig};
use crate::CliError;

fn fmt_num(v: f64) -> String {
    format!("{v:.10e}")
}

fn header(cfg: &ExperimentConfig, out: &mut Vec<u8>) {
    for (k, v) in cfg.entries() {
        if k != "out" {
            writeln!(out, "# {k}={v}").expect("writing to memory");
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Output(e.to_string())
}

/// Basis functions of the first node level on the evaluation grid: point coordinates,
/// then one column per node, then the nonzero count for the 1-norm engines.
pub fn run_basis_dump(cfg: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
    cfg.validate()?;
    let sweep = cfg.sweep();
    let nodes = sweep.nodes(cfg.nodes[0])?;
    let n = nodes.len();
    let approx = sweep.approximant(nodes)?;
    let grid = sweep.eval_grid()?;
    let rows = certify(scan(&approx, &grid, |c| (c.to_dense(), c.nonzeros())))?;
    let lp = matches!(cfg.engine, Engine::OneNorm(_));
    let dim = cfg.domain.dim();

    let mut out = Vec::new();
    header(cfg, &mut out);
    let mut w = csv::Writer::from_writer(&mut out);
    let mut head: Vec<String> = if dim == 1 {
        vec!["x".into()]
    } else {
        (1..=dim).map(|i| format!("x{i}")).collect()
    };
    head.extend((0..n).map(|j| format!("a{j}")));
    if lp {
        head.push("nonzeros".into());
    }
    w.write_record(&head).map_err(csv_err)?;
    for (x, (a, nnz)) in grid.points().iter().zip(&rows) {
        let mut rec: Vec<String> = x.iter().map(|v| fmt_num(*v)).collect();
        rec.extend(a.iter().map(|v| fmt_num(*v)));
        if lp {
            rec.push(nnz.to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))?;
    drop(w);
    Ok(out)
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
    cfg.validate()?;
    let report = convergence_study(&cfg.sweep(), Some(&cfg.target))?;
    let mut out = Vec::new();
    report.write_csv(&mut out)?;
    Ok(out)
}

/// Lebesgue constants over the node levels, in the convergence table layout with an
/// empty error column.
pub fn run_lebesgue(cfg: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
    cfg.validate()?;
    let report = convergence_study(&cfg.sweep(), None)?;
    let mut out = Vec::new();
    report.write_csv(&mut out)?;
    Ok(out)
}

fn profile_string(p: &Profile) -> String {
    WeightSpec::new(*p)
        .map(|s| s.to_string())
        .unwrap_or_else(|_| format!("{p:?}"))
}

/// Constants of the local reproduction, the fast-decay pair, the truncated stability series
/// of the configured weight and the theoretical Lebesgue bound, as `quantity,value` rows.
pub fn run_theory(cfg: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
    cfg.validate()?;
    let dim = cfg.domain.dim();
    let budgets = Budgets {
        c_qu: cfg.c_qu,
        gamma: cfg.gamma,
        c_gamma: cfg.c_gamma,
    };
    let (tc, decay) = theory_constants(
        cfg.theta,
        cfg.radius,
        cfg.degree,
        budgets,
        &cfg.weight.profile,
        cfg.engine.method(),
    )?;
    let series = stability_bound(1.0, &cfg.weight.profile, dim, cfg.degree)?;
    let bound = lebesgue_bound(&decay, dim)?;

    let mut out = Vec::new();
    header(cfg, &mut out);
    let mut w = csv::Writer::from_writer(&mut out);
    let rows: Vec<(&str, String)> = vec![
        ("theta", fmt_num(tc.theta)),
        ("radius", fmt_num(tc.r)),
        ("degree", tc.m.to_string()),
        ("c1", fmt_num(tc.c1)),
        ("c2", fmt_num(tc.c2)),
        ("h0", fmt_num(tc.h0)),
        ("decay_c", fmt_num(decay.c)),
        ("decay_ln_c", fmt_num(decay.ln_c)),
        ("decay_phi", profile_string(&decay.phi)),
        ("weight_series", fmt_num(series.series)),
        ("weight_series_k", fmt_num(series.k)),
        ("weight_series_terms", series.terms.to_string()),
        ("lebesgue_bound", fmt_num(bound.k)),
        ("lebesgue_bound_terms", bound.terms.to_string()),
    ];
    w.write_record(["quantity", "value"]).map_err(csv_err)?;
    for (k, v) in rows {
        w.write_record([k, v.as_str()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))?;
    drop(w);
    Ok(out)
}

/// Dispatches on `cfg.command` and writes the result to `cfg.out` or standard output.
pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let bytes = match cfg.command {
        Command::Basis => run_basis_dump(cfg)?,
        Command::Converge => run_convergence(cfg)?,
        Command::Lebesgue => run_lebesgue(cfg)?,
        Command::Theory => run_theory(cfg)?,
    };
    match &cfg.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
            }
            std::fs::write(path, &bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|e| CliError::Output(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_rows(bytes: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
        let text = String::from_utf8(bytes.to_vec()).unwrap();
        let body: String = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect();
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let head = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.unwrap().iter().map(String::from).collect())
            .collect();
        (head, rows)
    }

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn shepard_dump_rows_sum_to_one() {
        let c = cfg("command = basis\nnodes = 5\nperturb = 0.2\nseed = 3\ndegree = 0\nengine = shepard\ngrid = 41\n");
        let (head, rows) = parse_rows(&run_basis_dump(&c).unwrap());
        assert_eq!(head.len(), 1 + 5);
        assert_eq!(rows.len(), 41);
        for r in rows {
            let s: f64 = r[1..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn quartic_dump_reproduces_x() {
        let c = cfg("command = basis\nnodes = 9\nperturb = 0.2\nseed = 3\ndegree = 4\ngrid = 41\n");
        let sweep = c.sweep();
        let nodes = sweep.nodes(9).unwrap();
        let xs: Vec<f64> = nodes.points().map(|p| p[0]).collect();
        let (_, rows) = parse_rows(&run_basis_dump(&c).unwrap());
        for r in rows {
            let x: f64 = r[0].parse().unwrap();
            let a: Vec<f64> = r[1..].iter().map(|v| v.parse().unwrap()).collect();
            let sum: f64 = a.iter().sum();
            let first: f64 = a.iter().zip(&xs).map(|(a, x)| a * x).sum();
            assert!((sum - 1.0).abs() < 1e-8);
            assert!((first - x).abs() < 1e-8);
        }
    }

    #[test]
    fn one_norm_dump_is_sparse() {
        let c = cfg(
            "command = basis\ndomain = 0:1,0:1\nnodes = 6\ndegree = 2\nengine = l1-warm\ntarget = franke\ngrid = 11\n",
        );
        let (head, rows) = parse_rows(&run_basis_dump(&c).unwrap());
        assert_eq!(head.last().unwrap(), "nonzeros");
        for r in rows {
            let nnz: usize = r.last().unwrap().parse().unwrap();
            assert!(nnz <= 6, "{nnz} nonzeros");
        }
    }

    #[test]
    fn theory_report_lists_constants() {
        let c = cfg("command = theory\ndegree = 1\n");
        let text = String::from_utf8(run_theory(&c).unwrap()).unwrap();
        let (_, rows) = parse_rows(text.as_bytes());
        let c2: f64 = rows.iter().find(|r| r[0] == "c2").unwrap()[1].parse().unwrap();
        let s = (std::f64::consts::PI / 5.0).sin();
        assert!((c2 - 16.0 * (1.0 + s).powi(2) / (3.0 * s * s)).abs() < 1e-8);
        assert!(rows.iter().any(|r| r[0] == "lebesgue_bound"));
    }

    #[test]
    fn theory_refuses_divergent_series() {
        let c = cfg("command = theory\ndegree = 0\nweight = algebraic:k=1\n");
        assert_eq!(run_theory(&c).unwrap_err().exit_code(), 4);
        let c = cfg("command = theory\ntheta = 1\n");
        assert_eq!(run_theory(&c).unwrap_err().exit_code(), 2);
    }
}
