//! Drivers for the `run`, `gen` and `integrate` subcommands.
//!
//! A run writes three files into its output directory:
//!
//! * `trace.csv` with header `t,regret_n,regret_s,loss_inf,cum_regret_n,avg_regret_n`,
//! * `metadata.txt` with one `key = value` line per resolved setting and summary value,
//! * `plot.svg` with the average regret and per-round loss curves.

use std::fs;
use std::path::Path;

use crate::config::{Eta, ExperimentConfig};
use crate::domain::ConvexDomain;
use crate::equilibrium::{run_ome_with_comparator, vi_residual, LearnerConfig, VIPool};
use crate::integral::{line_integral_estimate, Estimate, QuadratureRule};
use crate::learners::{tuned_eta, Regularizer};
use crate::maps::{estimate_lipschitz, parse_matrix_text, MeanField, MonotoneMap};
use crate::networks::gen_pool;
use crate::plot::trace_plot;
use crate::regret::{approximate_u_t, ComparatorMode, RegretTrace, CSV_HEADER};
use crate::{rng, Error, Result, Vector};

pub const TRACE_FILE: &str = "trace.csv";
pub const METADATA_FILE: &str = "metadata.txt";
pub const PLOT_FILE: &str = "plot.svg";
pub const POOL_FILE: &str = "pool.txt";

/// Ordered `key = value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Metadata::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| Error::Parse {
                line: i + 1,
                column: 1,
                message: "expected `key = value`".into(),
            })?;
            out.push(k.trim(), v.trim());
        }
        Ok(out)
    }
}

fn fmt_vec(v: &Vector) -> String {
    format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub pool: VIPool,
    pub trace: RegretTrace,
    pub eta: f64,
    pub metadata: Metadata,
}

/// Sample pairs per map for the automatic learning rate.
pub const LIPSCHITZ_SAMPLES: usize = 256;

/// Learning rate for the configured horizon: fixed, or `B/(L√(2T))` with
/// `B` half the domain diameter and `L` the largest sampled Lipschitz
/// estimate over the pool.
pub fn resolve_eta(cfg: &ExperimentConfig, pool: &VIPool) -> Result<(f64, Option<(f64, f64)>)> {
    match cfg.eta {
        Eta::Fixed(e) => Ok((e, None)),
        Eta::Auto => {
            let b = pool.domain().diameter() / 2.0;
            let mut l = 0.0f64;
            for e in pool.entries() {
                l = l.max(estimate_lipschitz(&e.map, pool.domain(), LIPSCHITZ_SAMPLES, cfg.seed)?);
            }
            if !(b > 0.0 && l > 0.0) {
                return Err(Error::Config(format!(
                    "cannot tune eta automatically (B = {b}, L = {l}); set learner.eta"
                )));
            }
            Ok((tuned_eta(b, l, cfg.rounds)?, Some((b, l))))
        }
    }
}

/// Generates the pool for `cfg`.
pub fn build_pool(cfg: &ExperimentConfig) -> Result<VIPool> {
    gen_pool(&cfg.network_spec(), cfg.pool_size, &cfg.domain, &cfg.solver)
}

fn base_metadata(cfg: &ExperimentConfig, command: &str) -> Metadata {
    let mut md = Metadata::default();
    md.push("command", command);
    md.push("version", env!("CARGO_PKG_VERSION"));
    md.push("rng_scheme", rng::SCHEME);
    for (k, v) in cfg.entries() {
        md.0.push((k, v));
    }
    md
}

/// Runs the configured experiment in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let rule = cfg.rule()?;
    let pool = build_pool(cfg)?;
    let (eta, tuned) = resolve_eta(cfg, &pool)?;
    let regularizer = Regularizer::new(cfg.regularizer, eta)?;
    let maps = pool.maps();
    let u_t = approximate_u_t(&maps, &[], pool.domain(), ComparatorMode::AverageEquilibrium, &cfg.solver)?;
    let learner = LearnerConfig { algo: cfg.algo, regularizer, init: cfg.init.clone() };
    let trace = run_ome_with_comparator(&pool, &learner, cfg.rounds, &rule, u_t)?;

    let mean = MeanField::new(&maps)?;
    let gamma = cfg.solver.resolve_gamma(&mean, pool.domain())?;
    let mut md = base_metadata(cfg, "run");
    md.push("eta", eta);
    if let Some((b, l)) = tuned {
        md.push("eta_b", b);
        md.push("eta_l", l);
    }
    if let Some(first) = trace.records().first() {
        md.push("x_1", fmt_vec(&first.x_t));
    }
    md.push("u_t", fmt_vec(trace.u_t()));
    md.push(
        "u_t_caveat",
        "equilibrium of the pool-average map; the farthest-equilibrium adversary is not uniform over the pool",
    );
    md.push("u_t_residual", vi_residual(&mean, pool.domain(), trace.u_t(), gamma)?);
    md.push("pool_max_residual", pool.max_residual(gamma)?);
    md.push("residual_gamma", gamma);
    md.push("eps_q", trace.eps_q());
    md.push("cum_regret_n", trace.cum_regret_n());
    md.push("cum_regret_s", trace.cum_regret_s());
    md.push("cum_loss_inf", trace.cum_loss_inf());
    md.push("avg_regret_n", trace.avg_regret_n());
    md.push("status", "ok");
    Ok(RunOutput { pool, trace, eta, metadata: md })
}

fn write_failure(cfg: &ExperimentConfig, command: &str, out_dir: &Path, err: &Error) -> Result<()> {
    let mut md = base_metadata(cfg, command);
    md.push("status", "error");
    md.push("error", err.to_string().replace('\n', " "));
    if let Error::NonConvergence { best, residual, iterations } = err {
        md.push("best_iterate", fmt_vec(best));
        md.push("best_residual", residual);
        md.push("iterations", iterations);
    }
    fs::write(out_dir.join(METADATA_FILE), md.to_text())?;
    Ok(())
}

/// Runs the experiment and writes its artifacts into `out_dir` (created if
/// missing). On failure after validation, `trace.csv` holds whatever rows
/// were completed (at least the header) and `metadata.txt` records the error.
pub fn run_to_dir(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    fs::create_dir_all(out_dir)?;
    match run(cfg) {
        Ok(output) => {
            let mut csv = Vec::new();
            output.trace.write_csv(&mut csv)?;
            fs::write(out_dir.join(TRACE_FILE), csv)?;
            fs::write(out_dir.join(METADATA_FILE), output.metadata.to_text())?;
            let rows: Vec<_> = output.trace.rows().collect();
            let title = format!("{} pool, {} rounds", cfg.family, cfg.rounds);
            fs::write(out_dir.join(PLOT_FILE), trace_plot(&title, &rows).to_svg())?;
            Ok(output)
        }
        Err(err) => {
            fs::write(out_dir.join(TRACE_FILE), format!("{CSV_HEADER}\n"))?;
            write_failure(cfg, "run", out_dir, &err)?;
            Err(err)
        }
    }
}

/// Generates the pool and writes `pool.txt` and `metadata.txt`.
pub fn gen_to_dir(cfg: &ExperimentConfig, out_dir: &Path) -> Result<VIPool> {
    fs::create_dir_all(out_dir)?;
    match build_pool(cfg) {
        Ok(pool) => {
            fs::write(out_dir.join(POOL_FILE), pool.to_text()?)?;
            let maps = pool.maps();
            let mean = MeanField::new(&maps)?;
            let gamma = cfg.solver.resolve_gamma(&mean, pool.domain())?;
            let mut md = base_metadata(cfg, "gen");
            md.push("pool_max_residual", pool.max_residual(gamma)?);
            md.push("residual_gamma", gamma);
            md.push("status", "ok");
            fs::write(out_dir.join(METADATA_FILE), md.to_text())?;
            Ok(pool)
        }
        Err(err) => {
            write_failure(cfg, "gen", out_dir, &err)?;
            Err(err)
        }
    }
}

/// A map named on the command line: `saddle`, `rotation2d`, or a path to a
/// file in the plain-text matrix format.
pub fn parse_map_arg(arg: &str) -> Result<MonotoneMap> {
    match arg.to_ascii_lowercase().as_str() {
        "saddle" | "saddle-game" => Ok(MonotoneMap::SaddleGame),
        "rotation" | "rotation2d" => Ok(MonotoneMap::Rotation2D),
        _ => {
            let path = Path::new(arg);
            if !path.exists() {
                return Err(Error::InvalidArgument(format!(
                    "`{arg}` is neither a built-in map (saddle, rotation2d) nor a readable file"
                )));
            }
            let (a, b) = parse_matrix_text(&fs::read_to_string(path)?)?;
            MonotoneMap::affine_unchecked(a, b)
        }
    }
}

/// Parses a comma- or space-separated point such as `0.5,1`.
pub fn parse_point(arg: &str) -> Result<Vector> {
    let values = arg
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("invalid coordinate `{s}` in `{arg}`"))))
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty point".into()));
    }
    Ok(Vector::from_vec(values))
}

/// Straight-line integral from `a` to `b` with a Gauss-Legendre rule.
pub fn integrate(map: &MonotoneMap, a: &Vector, b: &Vector, nodes: usize) -> Result<Estimate> {
    let rule = QuadratureRule::gauss_legendre(nodes)?;
    line_integral_estimate(map, a, b, &rule)
}

/// Unit box for a map's dimension, used when only a map is given.
pub fn default_domain(map: &MonotoneMap) -> ConvexDomain {
    ConvexDomain::unit_box(map.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::NetworkFamily;

    fn small(family: NetworkFamily) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(family);
        cfg.rounds = 40;
        cfg.pool_size = 3;
        cfg.seed = 5;
        cfg
    }

    #[test]
    fn run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(NetworkFamily::SupplyChain);
        let out = run_to_dir(&cfg, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
        assert_eq!(csv.lines().count(), 41);
        assert!(csv.starts_with(CSV_HEADER));
        let md = Metadata::parse(&fs::read_to_string(dir.path().join(METADATA_FILE)).unwrap()).unwrap();
        assert_eq!(md.get("status"), Some("ok"));
        assert_eq!(md.get("seed"), Some("5"));
        assert_eq!(md.get("eta").unwrap().parse::<f64>().unwrap(), out.eta);
        assert!(md.get("u_t_residual").unwrap().parse::<f64>().unwrap() <= 1e-6);
        let svg = fs::read_to_string(dir.path().join(PLOT_FILE)).unwrap();
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn non_convergence_leaves_header_and_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(NetworkFamily::Mln);
        cfg.solver.max_iter = 3;
        let err = run_to_dir(&cfg, dir.path()).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
        assert_eq!(fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap(), format!("{CSV_HEADER}\n"));
        let md = Metadata::parse(&fs::read_to_string(dir.path().join(METADATA_FILE)).unwrap()).unwrap();
        assert_eq!(md.get("status"), Some("error"));
        assert!(md.get("best_residual").is_some());
    }

    #[test]
    fn gen_round_trips_through_the_pool_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(NetworkFamily::Mln);
        let pool = gen_to_dir(&cfg, dir.path()).unwrap();
        let back = VIPool::from_text(&fs::read_to_string(dir.path().join(POOL_FILE)).unwrap()).unwrap();
        assert_eq!(back, pool);
    }

    #[test]
    fn integrate_arguments() {
        let est = integrate(&parse_map_arg("saddle").unwrap(), &parse_point("1,1").unwrap(), &parse_point("0 0").unwrap(), 16)
            .unwrap();
        assert!((est.value + 2.0 / 3.0).abs() < 1e-14);
        assert!(parse_point("1,x").is_err());
        assert!(parse_map_arg("no-such-map").is_err());
        assert!(integrate(&MonotoneMap::Rotation2D, &parse_point("0,0").unwrap(), &parse_point("1").unwrap(), 16).is_err());
    }
}
