//! Browser bindings for the demo page in `www/`.
//!
//! Three operations: the loss surface of a 2-D map over the unit square,
//! path-integral vs standard regret on one triangle with its curl bound, and
//! a small equilibration run. The plain functions in [`ops`] do the work; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use wasm_bindgen::prelude::*;

pub mod ops {
    use omo::config::{Eta, ExperimentConfig};
    use omo::domain::ConvexDomain;
    use omo::experiment::{parse_map_arg, run};
    use omo::integral::{omo_loss, triangle_discrepancy_bound, triangle_loop, LossSpec, QuadratureRule};
    use omo::maps::MonotoneMap;
    use omo::networks::NetworkFamily;
    use omo::regret::{regret_new_instant, regret_std_instant};
    use omo::{Error, Result, Vector};

    fn planar(name: &str) -> Result<MonotoneMap> {
        let map = match name {
            "saddle" | "rotation2d" => parse_map_arg(name)?,
            _ => return Err(Error::InvalidArgument(format!("unknown map `{name}`"))),
        };
        Ok(map)
    }

    fn p(x: f64, y: f64) -> Vector {
        Vector::from_vec(vec![x, y])
    }

    /// Loss `f(x) = ∫_{o→x}⟨F, dx⟩` on an `n × n` grid over `[0,1]²`, row
    /// major with `y` increasing by row.
    pub fn loss_surface(map: &str, ox: f64, oy: f64, n: usize) -> Result<Vec<f64>> {
        if !(2..=400).contains(&n) {
            return Err(Error::InvalidArgument(format!("grid size must be in 2..=400, got {n}")));
        }
        let map = planar(map)?;
        let spec = LossSpec::new(&map, p(ox, oy), 0.0);
        let rule = QuadratureRule::default();
        let step = 1.0 / (n - 1) as f64;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(omo_loss(&spec, &p(j as f64 * step, i as f64 * step), &rule)?);
            }
        }
        Ok(out)
    }

    /// `[regret_n, regret_s, loop (o→x→u→o), curl bound]` for one round with
    /// reference `o`, comparator `u` and play `x`.
    pub fn regret_gap(map: &str, o: [f64; 2], u: [f64; 2], x: [f64; 2]) -> Result<Vec<f64>> {
        let map = planar(map)?;
        let (o, u, x) = (p(o[0], o[1]), p(u[0], u[1]), p(x[0], x[1]));
        let rule = QuadratureRule::default();
        let spec = LossSpec::new(&map, o.clone(), 0.0);
        let rn = regret_new_instant(&map, &x, &u, &rule)?;
        let rs = regret_std_instant(&spec, &x, &u, &rule)?;
        let lp = triangle_loop(&map, &o, &x, &u, &rule)?;
        let constants = map.curl_constants(&ConvexDomain::unit_box(2));
        let bound = triangle_discrepancy_bound(&constants, &o, &u, &x)?;
        Ok(vec![rn, rs, lp, bound])
    }

    /// Equilibration run on a generated pool. Returns `rounds` values each of
    /// average regret_n, average regret_s and loss_inf, concatenated, then
    /// the learning rate.
    pub fn ome_curves(family: &str, seed: u64, rounds: usize, pool_size: usize) -> Result<Vec<f64>> {
        if !(1..=5000).contains(&rounds) || !(1..=20).contains(&pool_size) {
            return Err(Error::InvalidArgument("rounds must be in 1..=5000 and pool size in 1..=20".into()));
        }
        let family: NetworkFamily = family.parse()?;
        let mut cfg = ExperimentConfig::defaults(family);
        cfg.seed = seed;
        cfg.rounds = rounds;
        cfg.pool_size = pool_size;
        cfg.eta = Eta::Auto;
        let output = run(&cfg)?;
        let rows: Vec<_> = output.trace.rows().collect();
        let mut out = Vec::with_capacity(3 * rounds + 1);
        out.extend(rows.iter().map(|r| r.avg_regret_n));
        let mut cum = 0.0;
        out.extend(rows.iter().map(|r| {
            cum += r.regret_s;
            cum / r.t as f64
        }));
        out.extend(rows.iter().map(|r| r.loss_inf));
        out.push(output.eta);
        Ok(out)
    }
}

fn js(e: omo::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn loss_surface(map: &str, ox: f64, oy: f64, n: usize) -> Result<Vec<f64>, JsError> {
    ops::loss_surface(map, ox, oy, n).map_err(js)
}

#[wasm_bindgen]
pub fn regret_gap(map: &str, ox: f64, oy: f64, ux: f64, uy: f64, xx: f64, xy: f64) -> Result<Vec<f64>, JsError> {
    ops::regret_gap(map, [ox, oy], [ux, uy], [xx, xy]).map_err(js)
}

#[wasm_bindgen]
pub fn ome_curves(family: &str, seed: u64, rounds: usize, pool_size: usize) -> Result<Vec<f64>, JsError> {
    ops::ome_curves(family, seed, rounds, pool_size).map_err(js)
}
