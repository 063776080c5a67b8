//! Variational-inequality equilibria, the farthest-equilibrium adversary and
//! the online equilibration loop.
//!
//! An equilibrium of `F` on `X` is a point with `⟨F(x*), x − x*⟩ ≥ 0` for all
//! `x ∈ X`, equivalently a zero of the natural residual
//! `‖x − Π(x − γF(x))‖`. For monotone `L`-Lipschitz maps the extragradient
//! iteration converges for any `γ < 1/L`.

use std::fmt::Write as _;

use crate::domain::ConvexDomain;
use crate::integral::{LossSpec, QuadratureRule};
use crate::learners::{Algorithm, Learner, Regularizer};
use crate::maps::{estimate_lipschitz, fmt_row, parse_row, read_matrix_block, MonotoneMap, NetworkMeta, VectorField};
use crate::regret::{approximate_u_t, ComparatorMode, RegretTrace};
use crate::{check_dim, check_finite, Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `0.5/L̂`, with `L̂` the closed-form Lipschitz constant when known and a
    /// sampled estimate otherwise.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub gamma: StepSize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { gamma: StepSize::Auto, tol: 1e-8, max_iter: 1_000_000 }
    }
}

/// Samples used for the Lipschitz estimate behind [`StepSize::Auto`].
const LIPSCHITZ_SAMPLES: usize = 256;

impl SolverConfig {
    /// Resolves the step size for `map` and checks `γ < 1/L` when `L` is known.
    pub fn resolve_gamma<F: VectorField + ?Sized>(&self, map: &F, domain: &ConvexDomain) -> Result<f64> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be ≥ 1".into()));
        }
        let hint = map.lipschitz_hint();
        match self.gamma {
            StepSize::Fixed(g) => {
                if !(g.is_finite() && g > 0.0) {
                    return Err(Error::InvalidArgument(format!("step size must be positive, got {g}")));
                }
                if let Some(l) = hint {
                    if g * l >= 1.0 {
                        return Err(Error::InvalidArgument(format!("step size {g} is not below 1/L = {}", 1.0 / l)));
                    }
                }
                Ok(g)
            }
            StepSize::Auto => {
                let l = match hint {
                    Some(l) => l,
                    None => estimate_lipschitz(map, domain, LIPSCHITZ_SAMPLES, 0)?,
                };
                Ok(if l > 0.0 { 0.5 / l } else { 1.0 })
            }
        }
    }
}

/// Result of an equilibrium solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vector,
    /// Natural residual at `x` with step `gamma`.
    pub residual: f64,
    pub iterations: usize,
    pub gamma: f64,
}

/// Natural residual `‖x − Π(x − γF(x))‖₂`.
pub fn vi_residual<F: VectorField + ?Sized>(map: &F, domain: &ConvexDomain, x: &Vector, gamma: f64) -> Result<f64> {
    check_dim(domain.dim(), map.dim())?;
    check_dim(domain.dim(), x.len())?;
    let y = domain.project(&(x - map.apply(x) * gamma))?;
    Ok((x - y).norm())
}

/// One extragradient step: `y = Π(x − γF(x))`, `x⁺ = Π(x − γF(y))`.
pub fn extragradient_step<F: VectorField + ?Sized>(
    map: &F,
    domain: &ConvexDomain,
    x: &Vector,
    gamma: f64,
) -> Result<Vector> {
    check_dim(domain.dim(), map.dim())?;
    check_dim(domain.dim(), x.len())?;
    let y = domain.project_unchecked(&(x - map.apply(x) * gamma));
    Ok(domain.project_unchecked(&(x - map.apply(&y) * gamma)))
}

/// A deterministic interior starting point: box midpoint, ball centre or
/// simplex barycentre.
pub fn default_start(domain: &ConvexDomain) -> Vector {
    match domain {
        ConvexDomain::Box { lower, upper } => (lower + upper) * 0.5,
        ConvexDomain::Ball { center, .. } => center.clone(),
        ConvexDomain::Simplex { dim } => Vector::from_element(*dim, 1.0 / *dim as f64),
    }
}

/// Extragradient from [`default_start`].
pub fn extragradient_solve<F: VectorField + ?Sized>(
    map: &F,
    domain: &ConvexDomain,
    config: &SolverConfig,
) -> Result<Solution> {
    extragradient_solve_from(map, domain, &default_start(domain), config)
}

pub fn extragradient_solve_from<F: VectorField + ?Sized>(
    map: &F,
    domain: &ConvexDomain,
    x0: &Vector,
    config: &SolverConfig,
) -> Result<Solution> {
    iterate(map, domain, x0, config, true)
}

/// Projected descent `x ← Π(x − γF(x))`. Converges for gradients of convex
/// functions with `γ ≤ 1/L`, but can cycle or diverge on rotational maps.
pub fn projected_descent_solve<F: VectorField + ?Sized>(
    map: &F,
    domain: &ConvexDomain,
    config: &SolverConfig,
) -> Result<Solution> {
    iterate(map, domain, &default_start(domain), config, false)
}

fn iterate<F: VectorField + ?Sized>(
    map: &F,
    domain: &ConvexDomain,
    x0: &Vector,
    config: &SolverConfig,
    extra: bool,
) -> Result<Solution> {
    check_dim(domain.dim(), map.dim())?;
    check_dim(domain.dim(), x0.len())?;
    check_finite(x0, "starting point")?;
    let gamma = config.resolve_gamma(map, domain)?;
    let mut x = domain.project(x0)?;
    let mut best = (x.clone(), f64::INFINITY);
    for k in 0..config.max_iter {
        let y = domain.project_unchecked(&(&x - map.apply(&x) * gamma));
        let residual = (&x - &y).norm();
        if !residual.is_finite() {
            break;
        }
        if residual < best.1 {
            best = (x.clone(), residual);
        }
        if residual <= config.tol {
            return Ok(Solution { x, residual, iterations: k, gamma });
        }
        x = if extra { domain.project_unchecked(&(&x - map.apply(&y) * gamma)) } else { y };
    }
    let residual = vi_residual(map, domain, &x, gamma)?;
    if residual <= config.tol {
        return Ok(Solution { x, residual, iterations: config.max_iter, gamma });
    }
    let (best, residual) = if residual < best.1 { (x, residual) } else { best };
    Err(Error::NonConvergence { best, residual, iterations: config.max_iter })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub map: MonotoneMap,
    pub x_star: Vector,
}

/// Finite set of maps sharing a domain, each with its precomputed equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct VIPool {
    entries: Vec<PoolEntry>,
    domain: ConvexDomain,
    seed: u64,
}

impl VIPool {
    pub fn new(entries: Vec<PoolEntry>, domain: ConvexDomain, seed: u64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("a pool needs at least one entry".into()));
        }
        for e in &entries {
            check_dim(domain.dim(), e.map.dim())?;
            check_dim(domain.dim(), e.x_star.len())?;
        }
        Ok(VIPool { entries, domain, seed })
    }

    /// Solves every equilibrium with `solver`.
    pub fn solve(maps: Vec<MonotoneMap>, domain: ConvexDomain, seed: u64, solver: &SolverConfig) -> Result<Self> {
        let entries = maps
            .into_iter()
            .map(|map| {
                let x_star = extragradient_solve(&map, &domain, solver)?.x;
                Ok(PoolEntry { map, x_star })
            })
            .collect::<Result<Vec<_>>>()?;
        VIPool::new(entries, domain, seed)
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn maps(&self) -> Vec<MonotoneMap> {
        self.entries.iter().map(|e| e.map.clone()).collect()
    }

    /// Largest natural residual (step `gamma`) over the stored equilibria.
    pub fn max_residual(&self, gamma: f64) -> Result<f64> {
        self.entries
            .iter()
            .map(|e| vi_residual(&e.map, &self.domain, &e.x_star, gamma))
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
    }

    /// Text form: a `pool` header, the domain, then per entry an `entry`
    /// line, the matrix block and the equilibrium on its own line.
    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        writeln!(out, "pool {} {}", self.entries.len(), self.seed).unwrap();
        match &self.domain {
            ConvexDomain::Box { lower, upper } => {
                writeln!(out, "domain box").unwrap();
                writeln!(out, "{}", fmt_row(lower.iter())).unwrap();
                writeln!(out, "{}", fmt_row(upper.iter())).unwrap();
            }
            ConvexDomain::Ball { center, radius } => {
                writeln!(out, "domain ball {radius}").unwrap();
                writeln!(out, "{}", fmt_row(center.iter())).unwrap();
            }
            ConvexDomain::Simplex { dim } => writeln!(out, "domain simplex {dim}").unwrap(),
        }
        for e in &self.entries {
            match &e.map {
                MonotoneMap::NetworkGame { meta, .. } => writeln!(
                    out,
                    "entry network {} {} {} {}",
                    meta.family, meta.n_firms, meta.controls_per_firm, meta.seed
                )
                .unwrap(),
                MonotoneMap::AffinePsd { .. } => writeln!(out, "entry affine").unwrap(),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "{} maps cannot be stored in a pool file",
                        other.family_name()
                    )))
                }
            }
            out.push_str(&e.map.to_matrix_text()?);
            writeln!(out, "{}", fmt_row(e.x_star.iter())).unwrap();
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: text.lines().count() + 1,
                column: 1,
                message: format!("unexpected end of input, expected {what}"),
            })
        };
        let err = |line: usize, message: String| Error::Parse { line, column: 1, message };

        let (ln, header) = next("pool header")?;
        let words: Vec<&str> = header.split_whitespace().collect();
        let (count, seed) = match words.as_slice() {
            ["pool", c, s] => (
                c.parse::<usize>().map_err(|_| err(ln, format!("invalid entry count `{c}`")))?,
                s.parse::<u64>().map_err(|_| err(ln, format!("invalid seed `{s}`")))?,
            ),
            _ => return Err(err(ln, "expected `pool <count> <seed>`".into())),
        };

        let (ln, dline) = next("domain line")?;
        let words: Vec<&str> = dline.split_whitespace().collect();
        let domain = match words.as_slice() {
            ["domain", "box"] => {
                let (l1, lo) = next("box lower bounds")?;
                let (l2, hi) = next("box upper bounds")?;
                let n = lo.split_whitespace().count();
                let lower = Vector::from_vec(parse_row(lo, l1, n)?);
                let upper = Vector::from_vec(parse_row(hi, l2, n)?);
                ConvexDomain::new_box(lower, upper)?
            }
            ["domain", "ball", r] => {
                let radius: f64 = r.parse().map_err(|_| err(ln, format!("invalid radius `{r}`")))?;
                let (l1, c) = next("ball centre")?;
                let n = c.split_whitespace().count();
                ConvexDomain::ball(Vector::from_vec(parse_row(c, l1, n)?), radius)?
            }
            ["domain", "simplex", d] => {
                ConvexDomain::simplex(d.parse().map_err(|_| err(ln, format!("invalid dimension `{d}`")))?)?
            }
            _ => return Err(err(ln, "expected `domain box|ball <radius>|simplex <dim>`".into())),
        };

        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, eline) = next("entry line")?;
            let words: Vec<&str> = eline.split_whitespace().collect();
            let meta = match words.as_slice() {
                ["entry", "affine"] => None,
                ["entry", "network", fam, firms, per, s] => Some(NetworkMeta {
                    family: fam.parse()?,
                    n_firms: firms.parse().map_err(|_| err(ln, format!("invalid firm count `{firms}`")))?,
                    controls_per_firm: per.parse().map_err(|_| err(ln, format!("invalid control count `{per}`")))?,
                    seed: s.parse().map_err(|_| err(ln, format!("invalid seed `{s}`")))?,
                }),
                _ => return Err(err(ln, "expected `entry affine` or `entry network <family> <firms> <controls> <seed>`".into())),
            };
            let (a, b) = {
                let mut block = std::iter::from_fn(|| next("matrix block").ok());
                read_matrix_block(&mut block)?
            };
            let (lx, xl) = next("equilibrium line")?;
            let x_star = Vector::from_vec(parse_row(xl, lx, b.len())?);
            let map = match meta {
                Some(meta) => MonotoneMap::network(a, b, meta)?,
                None => MonotoneMap::affine_psd(a, b)?,
            };
            entries.push(PoolEntry { map, x_star });
        }
        if let Ok((ln, _)) = next("end of input") {
            return Err(err(ln, format!("trailing content after {count} entries")));
        }
        VIPool::new(entries, domain, seed)
    }
}

/// Picks the entry whose equilibrium is farthest (Euclidean) from
/// `prediction`; ties go to the lowest index.
pub fn ome_adversary<'p>(pool: &'p VIPool, prediction: &Vector) -> Result<(usize, &'p PoolEntry)> {
    check_dim(pool.domain.dim(), prediction.len())?;
    let mut best = (0, f64::NEG_INFINITY);
    for (i, e) in pool.entries.iter().enumerate() {
        let d = (&e.x_star - prediction).norm();
        if d > best.1 {
            best = (i, d);
        }
    }
    Ok((best.0, &pool.entries[best.0]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub algo: Algorithm,
    pub regularizer: Regularizer,
    /// Initial prediction; the learner's own default when `None`.
    pub init: Option<Vector>,
}

/// Online equilibration against the farthest-equilibrium adversary.
///
/// Round `t`: the learner predicts `x_t`, the adversary reveals `F_t` from
/// the pool, the round is scored with reference `o_t = x_t*` and `f_o = 0`,
/// and the learner observes `F_t(x_t)`. The comparator `u_T` is the
/// equilibrium of the pool average, which does not depend on the play.
pub fn run_ome(
    pool: &VIPool,
    learner: &LearnerConfig,
    rounds: usize,
    rule: &QuadratureRule,
    solver: &SolverConfig,
) -> Result<RegretTrace> {
    let u_t = approximate_u_t(&pool.maps(), &[], &pool.domain, ComparatorMode::AverageEquilibrium, solver)?;
    run_ome_with_comparator(pool, learner, rounds, rule, u_t)
}

/// [`run_ome`] with a caller-supplied comparator.
pub fn run_ome_with_comparator(
    pool: &VIPool,
    learner: &LearnerConfig,
    rounds: usize,
    rule: &QuadratureRule,
    u_t: Vector,
) -> Result<RegretTrace> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("the horizon T must be ≥ 1".into()));
    }
    check_dim(pool.domain.dim(), u_t.len())?;
    let mut l = Learner::new(learner.algo, pool.domain.clone(), learner.regularizer)?;
    if let Some(x0) = &learner.init {
        l.start_at(x0.clone())?;
    }
    let mut trace = RegretTrace::new(u_t);
    for t in 1..=rounds {
        let x = l.predict().clone();
        let (_, entry) = ome_adversary(pool, &x)?;
        let spec = LossSpec::new(&entry.map, entry.x_star.clone(), 0.0);
        trace.record_round(t, &entry.map, &spec, &x, &entry.x_star, rule)?;
        l.observe(&entry.map.evaluate(&x)?)?;
    }
    Ok(trace)
}
