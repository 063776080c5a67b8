//! Experiment configuration files (TOML).
//!
//! ```toml
//! [run]
//! rounds = 1000
//! seed = 0
//! quadrature = "gauss-legendre"   # or "trapezoid"
//! quad_nodes = 16
//!
//! [network]
//! family = "mln"                  # or "supply-chain"
//! n_firms = 5                     # 3 for supply-chain
//! controls_per_firm = 2
//! pool_size = 10
//! delta = 0.05
//! d_range = [-1.0, 1.0]
//! k_range = [-0.5, 0.5]
//! b_range = [-1.0, 1.0]
//!
//! [domain]
//! kind = "box"                    # box: lower, upper; ball: center, radius; simplex
//! lower = 0.0
//! upper = 1.0
//!
//! [learner]
//! algo = "omomd"                  # or "omod"
//! regularizer = "euclidean"       # or "entropy" (simplex only)
//! eta = "auto"                    # or a positive number
//!
//! [solver]
//! tol = 1e-8
//! gamma = "auto"
//! max_iter = 1000000
//! ```
//!
//! Every key is optional; missing keys take the values shown. Unknown keys
//! and out-of-range values are rejected before any computation starts.

use serde::Deserialize;

use crate::domain::ConvexDomain;
use crate::equilibrium::{SolverConfig, StepSize};
use crate::integral::{QuadratureKind, QuadratureRule};
use crate::learners::{Algorithm, RegularizerKind};
use crate::networks::{NetworkFamily, NetworkSpec, ParamRanges};
use crate::{Error, Result, Vector};

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    domain: RawDomain,
    #[serde(default)]
    learner: RawLearner,
    #[serde(default)]
    solver: RawSolver,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    rounds: Option<i64>,
    seed: Option<u64>,
    quadrature: Option<String>,
    quad_nodes: Option<i64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    family: Option<String>,
    n_firms: Option<i64>,
    controls_per_firm: Option<i64>,
    pool_size: Option<i64>,
    delta: Option<f64>,
    d_range: Option<[f64; 2]>,
    k_range: Option<[f64; 2]>,
    b_range: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    kind: Option<String>,
    lower: Option<ScalarOrList>,
    upper: Option<ScalarOrList>,
    center: Option<ScalarOrList>,
    radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AutoOr {
    Word(String),
    Value(f64),
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawLearner {
    algo: Option<String>,
    regularizer: Option<String>,
    eta: Option<AutoOr>,
    init: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol: Option<f64>,
    gamma: Option<AutoOr>,
    max_iter: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eta {
    /// `B/(L√(2T))` with `B` half the domain diameter and `L` the largest
    /// sampled Lipschitz estimate over the pool.
    Auto,
    Fixed(f64),
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub rounds: usize,
    pub seed: u64,
    pub quadrature: QuadratureKind,
    pub quad_nodes: usize,
    pub family: NetworkFamily,
    pub n_firms: usize,
    pub controls_per_firm: usize,
    pub pool_size: usize,
    pub ranges: ParamRanges,
    pub domain: ConvexDomain,
    pub algo: Algorithm,
    pub regularizer: RegularizerKind,
    pub eta: Eta,
    pub init: Option<Vector>,
    pub solver: SolverConfig,
}

impl ExperimentConfig {
    /// Defaults for a family: its firm count, 2 controls, 10 networks on the
    /// unit box, OMoMD with the Euclidean regularizer and tuned rate.
    pub fn defaults(family: NetworkFamily) -> Self {
        let n_firms = family.default_firms();
        ExperimentConfig {
            rounds: 1000,
            seed: 0,
            quadrature: QuadratureKind::GaussLegendre,
            quad_nodes: 16,
            family,
            n_firms,
            controls_per_firm: 2,
            pool_size: 10,
            ranges: ParamRanges::default(),
            domain: ConvexDomain::unit_box(n_firms * 2),
            algo: Algorithm::OMoMD,
            regularizer: RegularizerKind::EuclideanHalfSq,
            eta: Eta::Auto,
            init: None,
            solver: SolverConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string() + &span_note(text, e.span())))?;
        resolve(raw)
    }

    pub fn dim(&self) -> usize {
        self.n_firms * self.controls_per_firm
    }

    pub fn network_spec(&self) -> NetworkSpec {
        NetworkSpec {
            family: self.family,
            n_firms: self.n_firms,
            controls_per_firm: self.controls_per_firm,
            ranges: self.ranges,
            seed: self.seed,
        }
    }

    pub fn rule(&self) -> Result<QuadratureRule> {
        QuadratureRule::new(self.quadrature, self.quad_nodes)
    }

    /// Every resolved value as `(key, value)` pairs, in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let pair = |(a, b): (f64, f64)| format!("[{a}, {b}]");
        let list = |v: &Vector| format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
        let mut out = vec![
            ("rounds", self.rounds.to_string()),
            ("seed", self.seed.to_string()),
            ("quadrature", quadrature_name(self.quadrature).to_string()),
            ("quad_nodes", self.quad_nodes.to_string()),
            ("family", self.family.to_string()),
            ("n_firms", self.n_firms.to_string()),
            ("controls_per_firm", self.controls_per_firm.to_string()),
            ("pool_size", self.pool_size.to_string()),
            ("delta", self.ranges.delta.to_string()),
            ("d_range", pair(self.ranges.d)),
            ("k_range", pair(self.ranges.k)),
            ("b_range", pair(self.ranges.b)),
        ];
        match &self.domain {
            ConvexDomain::Box { lower, upper } => {
                out.push(("domain", "box".into()));
                out.push(("domain_lower", list(lower)));
                out.push(("domain_upper", list(upper)));
            }
            ConvexDomain::Ball { center, radius } => {
                out.push(("domain", "ball".into()));
                out.push(("domain_center", list(center)));
                out.push(("domain_radius", radius.to_string()));
            }
            ConvexDomain::Simplex { .. } => out.push(("domain", "simplex".into())),
        }
        out.push(("algo", match self.algo {
            Algorithm::OMoD => "omod".into(),
            Algorithm::OMoMD => "omomd".into(),
        }));
        out.push(("regularizer", match self.regularizer {
            RegularizerKind::EuclideanHalfSq => "euclidean".into(),
            RegularizerKind::NegativeEntropy => "entropy".into(),
        }));
        out.push(("eta_setting", match self.eta {
            Eta::Auto => "auto".into(),
            Eta::Fixed(e) => e.to_string(),
        }));
        out.push(("init", self.init.as_ref().map_or("default".into(), list)));
        out.push(("solver_tol", self.solver.tol.to_string()));
        out.push(("solver_gamma_setting", match self.solver.gamma {
            StepSize::Auto => "auto".into(),
            StepSize::Fixed(g) => g.to_string(),
        }));
        out.push(("solver_max_iter", self.solver.max_iter.to_string()));
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

fn quadrature_name(kind: QuadratureKind) -> &'static str {
    match kind {
        QuadratureKind::GaussLegendre => "gauss-legendre",
        QuadratureKind::CompositeTrapezoid => "trapezoid",
    }
}

fn span_note(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let before = &text[..r.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!(" (line {line}, column {column})")
        }
        None => String::new(),
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive_int(key: &str, v: Option<i64>, default: usize) -> Result<usize> {
    match v {
        None => Ok(default),
        Some(n) if n >= 1 => Ok(n as usize),
        Some(n) => Err(cfg_err(format!("{key} must be ≥ 1, got {n}"))),
    }
}

fn range(key: &str, v: Option<[f64; 2]>, default: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = v.map_or(default, |[a, b]| (a, b));
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok((lo, hi))
    } else {
        Err(cfg_err(format!("{key} must be a finite interval [lo, hi] with lo < hi, got [{lo}, {hi}]")))
    }
}

fn broadcast(key: &str, v: ScalarOrList, dim: usize) -> Result<Vector> {
    match v {
        ScalarOrList::Scalar(x) => Ok(Vector::from_element(dim, x)),
        ScalarOrList::List(xs) if xs.len() == dim => Ok(Vector::from_vec(xs)),
        ScalarOrList::List(xs) => Err(cfg_err(format!("{key} has {} entries, expected {dim}", xs.len()))),
    }
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let family = match raw.network.family.as_deref() {
        None => NetworkFamily::Mln,
        Some(name) => name.parse().map_err(|e: Error| cfg_err(e.to_string()))?,
    };
    let mut cfg = ExperimentConfig::defaults(family);

    cfg.rounds = positive_int("run.rounds", raw.run.rounds, cfg.rounds)?;
    cfg.seed = raw.run.seed.unwrap_or(cfg.seed);
    cfg.quadrature = match raw.run.quadrature.as_deref() {
        None | Some("gauss-legendre") => QuadratureKind::GaussLegendre,
        Some("trapezoid") => QuadratureKind::CompositeTrapezoid,
        Some(other) => return Err(cfg_err(format!("run.quadrature `{other}` is not gauss-legendre or trapezoid"))),
    };
    cfg.quad_nodes = positive_int("run.quad_nodes", raw.run.quad_nodes, cfg.quad_nodes)?;
    if cfg.quad_nodes < 2 {
        return Err(cfg_err("run.quad_nodes must be ≥ 2"));
    }

    let net = raw.network;
    cfg.n_firms = positive_int("network.n_firms", net.n_firms, cfg.n_firms)?;
    cfg.controls_per_firm = positive_int("network.controls_per_firm", net.controls_per_firm, cfg.controls_per_firm)?;
    cfg.pool_size = positive_int("network.pool_size", net.pool_size, cfg.pool_size)?;
    let delta = net.delta.unwrap_or(cfg.ranges.delta);
    if !(delta.is_finite() && delta > 0.0) {
        return Err(cfg_err(format!("network.delta must be positive, got {delta}")));
    }
    cfg.ranges = ParamRanges {
        d: range("network.d_range", net.d_range, cfg.ranges.d)?,
        k: range("network.k_range", net.k_range, cfg.ranges.k)?,
        b: range("network.b_range", net.b_range, cfg.ranges.b)?,
        delta,
    };

    let dim = cfg.dim();
    let d = raw.domain;
    let field_err = |kind: &str, key: &str| cfg_err(format!("domain.{key} does not apply to kind = \"{kind}\""));
    cfg.domain = match d.kind.as_deref().unwrap_or("box") {
        "box" => {
            if d.center.is_some() {
                return Err(field_err("box", "center"));
            }
            if d.radius.is_some() {
                return Err(field_err("box", "radius"));
            }
            let lower = broadcast("domain.lower", d.lower.unwrap_or(ScalarOrList::Scalar(0.0)), dim)?;
            let upper = broadcast("domain.upper", d.upper.unwrap_or(ScalarOrList::Scalar(1.0)), dim)?;
            ConvexDomain::new_box(lower, upper).map_err(|e| cfg_err(e.to_string()))?
        }
        "ball" => {
            if d.lower.is_some() || d.upper.is_some() {
                return Err(field_err("ball", if d.lower.is_some() { "lower" } else { "upper" }));
            }
            let center = broadcast("domain.center", d.center.unwrap_or(ScalarOrList::Scalar(0.0)), dim)?;
            ConvexDomain::ball(center, d.radius.unwrap_or(1.0)).map_err(|e| cfg_err(e.to_string()))?
        }
        "simplex" => {
            if d.lower.is_some() || d.upper.is_some() || d.center.is_some() || d.radius.is_some() {
                return Err(cfg_err("the simplex domain takes no parameters"));
            }
            ConvexDomain::simplex(dim).map_err(|e| cfg_err(e.to_string()))?
        }
        other => return Err(cfg_err(format!("domain.kind `{other}` is not box, ball or simplex"))),
    };

    let l = raw.learner;
    cfg.algo = match l.algo.as_deref() {
        None | Some("omomd") => Algorithm::OMoMD,
        Some("omod") => Algorithm::OMoD,
        Some(other) => return Err(cfg_err(format!("learner.algo `{other}` is not omod or omomd"))),
    };
    cfg.regularizer = match l.regularizer.as_deref() {
        None | Some("euclidean") => RegularizerKind::EuclideanHalfSq,
        Some("entropy") => RegularizerKind::NegativeEntropy,
        Some(other) => return Err(cfg_err(format!("learner.regularizer `{other}` is not euclidean or entropy"))),
    };
    if cfg.algo == Algorithm::OMoD && cfg.regularizer != RegularizerKind::EuclideanHalfSq {
        return Err(cfg_err("learner.algo = \"omod\" requires the euclidean regularizer"));
    }
    if cfg.regularizer == RegularizerKind::NegativeEntropy && !matches!(cfg.domain, ConvexDomain::Simplex { .. }) {
        return Err(cfg_err("the entropy regularizer requires domain.kind = \"simplex\""));
    }
    cfg.eta = match l.eta {
        None => Eta::Auto,
        Some(AutoOr::Word(w)) if w == "auto" => Eta::Auto,
        Some(AutoOr::Word(w)) => return Err(cfg_err(format!("learner.eta must be \"auto\" or a number, got `{w}`"))),
        Some(AutoOr::Value(e)) if e.is_finite() && e > 0.0 => Eta::Fixed(e),
        Some(AutoOr::Value(e)) => return Err(cfg_err(format!("learner.eta must be positive, got {e}"))),
    };
    if let Some(init) = l.init {
        if init.len() != dim {
            return Err(cfg_err(format!("learner.init has {} entries, expected {dim}", init.len())));
        }
        let x = Vector::from_vec(init);
        if !cfg.domain.contains(&x, 1e-9).map_err(|e| cfg_err(e.to_string()))? {
            return Err(cfg_err("learner.init lies outside the domain"));
        }
        cfg.init = Some(x);
    }

    let s = raw.solver;
    if let Some(tol) = s.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(cfg_err(format!("solver.tol must be positive, got {tol}")));
        }
        cfg.solver.tol = tol;
    }
    cfg.solver.max_iter = positive_int("solver.max_iter", s.max_iter, cfg.solver.max_iter)?;
    cfg.solver.gamma = match s.gamma {
        None => StepSize::Auto,
        Some(AutoOr::Word(w)) if w == "auto" => StepSize::Auto,
        Some(AutoOr::Word(w)) => return Err(cfg_err(format!("solver.gamma must be \"auto\" or a number, got `{w}`"))),
        Some(AutoOr::Value(g)) if g.is_finite() && g > 0.0 => StepSize::Fixed(g),
        Some(AutoOr::Value(g)) => return Err(cfg_err(format!("solver.gamma must be positive, got {g}"))),
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults(NetworkFamily::Mln));
        assert_eq!(cfg.dim(), 10);
    }

    #[test]
    fn full_file() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [run]
            rounds = 50
            seed = 3
            quad_nodes = 8
            [network]
            family = "supply-chain"
            pool_size = 4
            [domain]
            kind = "ball"
            center = 0.5
            radius = 2.0
            [learner]
            algo = "omod"
            eta = 0.01
            [solver]
            gamma = 0.02
            max_iter = 5000
            "#,
        )
        .unwrap();
        assert_eq!((cfg.rounds, cfg.seed, cfg.quad_nodes, cfg.pool_size), (50, 3, 8, 4));
        assert_eq!(cfg.family, NetworkFamily::SupplyChain);
        assert_eq!(cfg.dim(), 6);
        assert_eq!(cfg.domain, ConvexDomain::ball(Vector::from_element(6, 0.5), 2.0).unwrap());
        assert_eq!(cfg.eta, Eta::Fixed(0.01));
        assert_eq!(cfg.solver.gamma, StepSize::Fixed(0.02));
        assert_eq!(cfg.solver.max_iter, 5000);
    }

    #[test]
    fn rejections() {
        for text in [
            "[run]\nrounds = 0\n",
            "[run]\nhorizon = 10\n",
            "[bogus]\n",
            "[network]\nfamily = \"grid\"\n",
            "[network]\nd_range = [1.0, -1.0]\n",
            "[domain]\nkind = \"box\"\nradius = 1.0\n",
            "[domain]\nlower = [0.0, 0.0]\n",
            "[learner]\neta = -1.0\n",
            "[learner]\neta = \"fast\"\n",
            "[learner]\nregularizer = \"entropy\"\n",
            "[learner]\nalgo = \"omod\"\nregularizer = \"entropy\"\n[domain]\nkind = \"simplex\"\n",
            "[solver]\ntol = 0.0\n",
            "[run]\nquad_nodes = 1\n",
            "rounds = [",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn entries_cover_every_section() {
        let cfg = ExperimentConfig::defaults(NetworkFamily::Mln);
        let keys: Vec<String> = cfg.entries().into_iter().map(|(k, _)| k).collect();
        for k in ["rounds", "seed", "family", "domain", "algo", "eta_setting", "solver_tol"] {
            assert!(keys.iter().any(|x| x == k), "{k}");
        }
    }
}
