//! Seeded affine network games.
//!
//! Each firm owns a block of controls. The concatenated negative utility
//! gradient is `F(x) = Ax + b` with `A = S + K`, where `S = DᵀD + δI` is
//! symmetric positive definite and `K` is skew-symmetric with zero blocks on
//! the diagonal, so firms interact rotationally but each firm's own block is
//! a convex quadratic. The symmetric part of `A` is `S`, which makes every
//! generated game strongly monotone with modulus at least `δ`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::domain::ConvexDomain;
use crate::equilibrium::{extragradient_solve, PoolEntry, SolverConfig, VIPool};
use crate::maps::{check_monotone, MonotoneMap, NetworkMeta, Verdict};
use crate::{check_dim, rng, Error, Matrix, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetworkFamily {
    /// Market-linked network: many firms competing over shared markets.
    Mln,
    /// Supply chain: fewer firms coupled along the chain.
    SupplyChain,
}

impl NetworkFamily {
    pub fn name(self) -> &'static str {
        match self {
            NetworkFamily::Mln => "mln",
            NetworkFamily::SupplyChain => "supply-chain",
        }
    }

    pub fn default_firms(self) -> usize {
        match self {
            NetworkFamily::Mln => 5,
            NetworkFamily::SupplyChain => 3,
        }
    }

    pub fn stream(self) -> u64 {
        match self {
            NetworkFamily::Mln => rng::STREAM_MLN,
            NetworkFamily::SupplyChain => rng::STREAM_SUPPLY_CHAIN,
        }
    }
}

impl fmt::Display for NetworkFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetworkFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mln" => Ok(NetworkFamily::Mln),
            "supply-chain" | "supply_chain" | "supplychain" => Ok(NetworkFamily::SupplyChain),
            other => Err(Error::InvalidArgument(format!(
                "unknown network family `{other}` (expected mln or supply-chain)"
            ))),
        }
    }
}

/// Sampling ranges for the generator. Each range is `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRanges {
    pub d: (f64, f64),
    pub k: (f64, f64),
    pub b: (f64, f64),
    pub delta: f64,
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges { d: (-1.0, 1.0), k: (-0.5, 0.5), b: (-1.0, 1.0), delta: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub family: NetworkFamily,
    pub n_firms: usize,
    pub controls_per_firm: usize,
    pub ranges: ParamRanges,
    pub seed: u64,
}

impl NetworkSpec {
    /// Family defaults: 5 firms for MLN, 3 for the supply chain, 2 controls each.
    pub fn new(family: NetworkFamily, seed: u64) -> Self {
        NetworkSpec {
            family,
            n_firms: family.default_firms(),
            controls_per_firm: 2,
            ranges: ParamRanges::default(),
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_firms * self.controls_per_firm
    }

    fn validate(&self) -> Result<()> {
        if self.n_firms == 0 || self.controls_per_firm == 0 {
            return Err(Error::InvalidArgument("a network needs at least one firm and one control".into()));
        }
        let r = &self.ranges;
        for (name, (lo, hi)) in [("d", r.d), ("k", r.k), ("b", r.b)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!("range {name} = [{lo}, {hi}) is empty or non-finite")));
            }
        }
        if !(r.delta.is_finite() && r.delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", r.delta)));
        }
        Ok(())
    }

    fn firm_of(&self, i: usize) -> usize {
        i / self.controls_per_firm
    }
}

/// Draws one game. Identical specs give bit-identical matrices.
pub fn gen_network(spec: &NetworkSpec) -> Result<MonotoneMap> {
    spec.validate()?;
    let n = spec.dim();
    let r = &spec.ranges;
    let mut rng = rng::stream(spec.seed, spec.family.stream());
    let d = Matrix::from_fn(n, n, |_, _| rng.random_range(r.d.0..r.d.1));
    let mut a = d.transpose() * &d + Matrix::identity(n, n) * r.delta;
    for i in 0..n {
        for j in (i + 1)..n {
            if spec.firm_of(i) != spec.firm_of(j) {
                let k = rng.random_range(r.k.0..r.k.1);
                a[(i, j)] += k;
                a[(j, i)] -= k;
            }
        }
    }
    let b = Vector::from_fn(n, |_, _| rng.random_range(r.b.0..r.b.1));
    let meta = NetworkMeta {
        family: spec.family,
        n_firms: spec.n_firms,
        controls_per_firm: spec.controls_per_firm,
        seed: spec.seed,
    };
    MonotoneMap::network(a, b, meta)
}

/// Utility of firm `firm` at joint action `x`:
/// `−(½ x_iᵀA_ii x_i + Σ_{j≠i} x_iᵀA_ij x_j + b_iᵀx_i)`. Its negative
/// gradient with respect to the firm's own controls is block `i` of `Ax + b`.
pub fn firm_utility(map: &MonotoneMap, firm: usize, x: &Vector) -> Result<f64> {
    let MonotoneMap::NetworkGame { a, b, meta } = map else {
        return Err(Error::InvalidArgument(format!("{} map has no firm structure", map.family_name())));
    };
    check_dim(b.len(), x.len())?;
    if firm >= meta.n_firms {
        return Err(Error::InvalidArgument(format!("firm {firm} out of range ({} firms)", meta.n_firms)));
    }
    let m = meta.controls_per_firm;
    let own = firm * m..(firm + 1) * m;
    let mut value = 0.0;
    for i in own.clone() {
        value += b[i] * x[i];
        for j in 0..x.len() {
            let w = if own.contains(&j) { 0.5 } else { 1.0 };
            value += w * x[i] * a[(i, j)] * x[j];
        }
    }
    Ok(-value)
}

/// Generates `count` games (game `i` uses seed `spec.seed + i`), checks each
/// for monotonicity and solves its equilibrium on `domain`.
pub fn gen_pool(spec: &NetworkSpec, count: usize, domain: &ConvexDomain, solver: &SolverConfig) -> Result<VIPool> {
    if count == 0 {
        return Err(Error::InvalidArgument("pool size must be ≥ 1".into()));
    }
    check_dim(spec.dim(), domain.dim())?;
    let build = |i: usize| -> Result<PoolEntry> {
        let mut s = spec.clone();
        s.seed = spec.seed.wrapping_add(i as u64);
        let map = gen_network(&s)?;
        let report = check_monotone(&map, domain, 64, 1e-9, s.seed)?;
        if report.verdict != Verdict::Monotone {
            return Err(Error::InvalidMap(format!(
                "generated network {i} failed the monotonicity check (min inner {:e})",
                report.min_pairwise_inner
            )));
        }
        let x_star = extragradient_solve(&map, domain, solver)?.x;
        Ok(PoolEntry { map, x_star })
    };
    #[cfg(feature = "parallel")]
    let entries: Result<Vec<PoolEntry>> = {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(build).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let entries: Result<Vec<PoolEntry>> = (0..count).map(build).collect();
    VIPool::new(entries?, domain.clone(), spec.seed)
}

/// Entrywise mean of a homogeneous list of network games.
pub fn average_network(maps: &[MonotoneMap]) -> Result<MonotoneMap> {
    let Some(MonotoneMap::NetworkGame { meta: first, .. }) = maps.first() else {
        return Err(Error::Heterogeneous("expected a nonempty list of network games".into()));
    };
    let n = first.n_firms * first.controls_per_firm;
    let (mut sa, mut sb) = (Matrix::zeros(n, n), Vector::zeros(n));
    for (i, m) in maps.iter().enumerate() {
        match m {
            MonotoneMap::NetworkGame { a, b, meta }
                if meta.family == first.family
                    && meta.n_firms == first.n_firms
                    && meta.controls_per_firm == first.controls_per_firm =>
            {
                sa += a;
                sb += b;
            }
            _ => {
                return Err(Error::Heterogeneous(format!(
                    "entry {i} ({}) does not match entry 0",
                    m.family_name()
                )))
            }
        }
    }
    let k = maps.len() as f64;
    MonotoneMap::network(sa / k, sb / k, first.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::vi_residual;
    use crate::maps::{jacobian_fd, VectorField};

    #[test]
    fn structure_of_generated_games() {
        for family in [NetworkFamily::Mln, NetworkFamily::SupplyChain] {
            let spec = NetworkSpec::new(family, 11);
            let map = gen_network(&spec).unwrap();
            let (a, b) = map.affine_parts().unwrap();
            assert_eq!(b.len(), if family == NetworkFamily::Mln { 10 } else { 6 });
            let sym = (a + a.transpose()) * 0.5;
            let min = nalgebra::SymmetricEigen::new(sym).eigenvalues.min();
            assert!(min >= 0.05 - 1e-10, "{min}");
            // diagonal firm blocks are symmetric
            let m = spec.controls_per_firm;
            for f in 0..spec.n_firms {
                for i in f * m..(f + 1) * m {
                    for j in f * m..(f + 1) * m {
                        assert_eq!(a[(i, j)].to_bits(), a[(j, i)].to_bits());
                    }
                }
            }
            assert!(b.iter().all(|&v| (-1.0..1.0).contains(&v)));
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = NetworkSpec::new(NetworkFamily::Mln, 42);
        let a = gen_network(&spec).unwrap().to_matrix_text().unwrap();
        let b = gen_network(&spec).unwrap().to_matrix_text().unwrap();
        assert_eq!(a, b);
        let other = gen_network(&NetworkSpec::new(NetworkFamily::Mln, 43)).unwrap().to_matrix_text().unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn utility_gradients_concatenate_to_the_map() {
        let spec = NetworkSpec::new(NetworkFamily::SupplyChain, 5);
        let map = gen_network(&spec).unwrap();
        let x = Vector::from_fn(6, |i, _| 0.1 + 0.13 * i as f64);
        let fx = map.apply(&x);
        let h = 1e-5;
        for i in 0..6 {
            let firm = i / 2;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let g = (firm_utility(&map, firm, &xp).unwrap() - firm_utility(&map, firm, &xm).unwrap()) / (2.0 * h);
            assert!((-g - fx[i]).abs() < 1e-8, "{i}: {} vs {}", -g, fx[i]);
        }
        assert!(jacobian_fd(&map, &x, 1e-5).is_ok());
    }

    #[test]
    fn pool_equilibria_and_average() {
        let spec = NetworkSpec::new(NetworkFamily::SupplyChain, 3);
        let domain = ConvexDomain::unit_box(6);
        let solver = SolverConfig::default();
        let pool = gen_pool(&spec, 4, &domain, &solver).unwrap();
        assert_eq!(pool.entries().len(), 4);
        for (i, e) in pool.entries().iter().enumerate() {
            let MonotoneMap::NetworkGame { meta, .. } = &e.map else { panic!() };
            assert_eq!(meta.seed, 3 + i as u64);
            assert!(vi_residual(&e.map, &domain, &e.x_star, 1.0).unwrap() < 1e-6);
        }
        let maps: Vec<MonotoneMap> = pool.entries().iter().map(|e| e.map.clone()).collect();
        let avg = average_network(&maps).unwrap();
        let x = Vector::from_element(6, 0.5);
        let mean: Vector = maps.iter().map(|m| m.apply(&x)).fold(Vector::zeros(6), |s, v| s + v) / 4.0;
        assert!((avg.apply(&x) - mean).norm() < 1e-12);

        let mixed = vec![maps[0].clone(), gen_network(&NetworkSpec::new(NetworkFamily::Mln, 1)).unwrap()];
        assert!(matches!(average_network(&mixed), Err(Error::Heterogeneous(_))));
    }

    #[test]
    fn family_names_round_trip() {
        for f in [NetworkFamily::Mln, NetworkFamily::SupplyChain] {
            assert_eq!(f.name().parse::<NetworkFamily>().unwrap(), f);
        }
        assert!("grid".parse::<NetworkFamily>().is_err());
    }
}
