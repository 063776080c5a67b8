//! Path-integral regret (`regret_n`), standard regret (`regret_s`) and the
//! per-round trace of an online run.
//!
//! `regret_n` for round `t` is the straight-line integral of `F_t` from the
//! comparator `u_T` to the play `x_t`; it never looks at the round's
//! reference vector. `regret_s` is the loss difference `f_t(x_t) − f_t(u_T)`,
//! i.e. the integral `o_t → x_t` minus the integral `o_t → u_T`. The two
//! coincide for gradient fields and differ by the loop integral around
//! `(o_t, u_T, x_t)` otherwise.

use std::io::{self, Write};

use crate::domain::ConvexDomain;
use crate::equilibrium::{extragradient_solve, projected_descent_solve, SolverConfig};
use crate::integral::{line_integral, omo_loss, LossSpec, QuadratureRule, EXACT_EPS};
use crate::maps::{MeanField, MonotoneMap, VectorField};
use crate::{check_dim, Error, Result, Vector};

/// `∫_{u_T → x_t} ⟨F_t, dx⟩`.
pub fn regret_new_instant<F: VectorField + ?Sized>(
    map: &F,
    x_t: &Vector,
    u_t: &Vector,
    rule: &QuadratureRule,
) -> Result<f64> {
    line_integral(map, u_t, x_t, rule)
}

/// `f_t(x_t) − f_t(u_T)` under the OMO loss with the given reference.
pub fn regret_std_instant<F: VectorField + ?Sized>(
    spec: &LossSpec<'_, F>,
    x_t: &Vector,
    u_t: &Vector,
    rule: &QuadratureRule,
) -> Result<f64> {
    Ok(omo_loss(spec, x_t, rule)? - omo_loss(spec, u_t, rule)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparatorMode {
    /// Equilibrium of the averaged map, solved by extragradient.
    AverageEquilibrium,
    /// Exact minimiser of the summed losses; only valid for gradient fields,
    /// where the descent direction is `Σ F_t(u)`.
    ConservativeExact,
}

/// Approximates the best fixed strategy in hindsight for a sequence of maps.
pub fn approximate_u_t(
    maps: &[MonotoneMap],
    o_list: &[Vector],
    domain: &ConvexDomain,
    mode: ComparatorMode,
    solver: &SolverConfig,
) -> Result<Vector> {
    let mean = MeanField::new(maps)?;
    check_dim(domain.dim(), mean.dim())?;
    if !o_list.is_empty() && o_list.len() != maps.len() {
        return Err(Error::InvalidArgument(format!(
            "{} reference vectors for {} maps",
            o_list.len(),
            maps.len()
        )));
    }
    for o in o_list {
        check_dim(domain.dim(), o.len())?;
    }
    match mode {
        ComparatorMode::AverageEquilibrium => Ok(extragradient_solve(&mean, domain, solver)?.x),
        ComparatorMode::ConservativeExact => {
            if let Some(index) = maps.iter().position(|m| !m.is_conservative()) {
                return Err(Error::NotConservative { index });
            }
            // The mean of the gradients has the same minimiser as the sum.
            Ok(projected_descent_solve(&mean, domain, solver)?.x)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub regret_n: f64,
    pub regret_s: f64,
    pub loss_inf: f64,
    pub x_t: Vector,
    pub x_star_t: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    records: Vec<RoundRecord>,
    u_t: Vector,
    cum_regret_n: f64,
    cum_regret_s: f64,
    cum_loss_inf: f64,
    eps_q: f64,
}

impl RegretTrace {
    pub fn new(u_t: Vector) -> Self {
        RegretTrace {
            records: Vec::new(),
            u_t,
            cum_regret_n: 0.0,
            cum_regret_s: 0.0,
            cum_loss_inf: 0.0,
            eps_q: 0.0,
        }
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn u_t(&self) -> &Vector {
        &self.u_t
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn cum_regret_n(&self) -> f64 {
        self.cum_regret_n
    }

    pub fn cum_regret_s(&self) -> f64 {
        self.cum_regret_s
    }

    pub fn cum_loss_inf(&self) -> f64 {
        self.cum_loss_inf
    }

    pub fn avg_regret_n(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.cum_regret_n / self.records.len() as f64
        }
    }

    /// Largest per-round quadrature tolerance seen so far.
    pub fn eps_q(&self) -> f64 {
        self.eps_q
    }

    /// Measures round `t` (which must follow the last recorded round) and
    /// appends it: `regret_n` from `u_T`, `regret_s` against `spec`, and
    /// `loss_∞` as the straight-line integral from `x_t` to the round's
    /// equilibrium.
    pub fn record_round(
        &mut self,
        t: usize,
        map: &MonotoneMap,
        spec: &LossSpec<'_, MonotoneMap>,
        x_t: &Vector,
        x_star_t: &Vector,
        rule: &QuadratureRule,
    ) -> Result<&RoundRecord> {
        let expected = self.records.last().map_or(1, |r| r.t + 1);
        if t != expected {
            return Err(Error::OutOfOrder { expected, got: t });
        }
        let regret_n = regret_new_instant(map, x_t, &self.u_t, rule)?;
        let regret_s = regret_std_instant(spec, x_t, &self.u_t, rule)?;
        let loss_inf = line_integral(map, x_t, x_star_t, rule)?;
        let eps = match map.polynomial_degree() {
            Some(p) if rule.is_exact_for(p) => EXACT_EPS,
            _ => crate::integral::line_integral_estimate(map, &self.u_t, x_t, rule)?.eps,
        };
        self.eps_q = self.eps_q.max(eps);
        self.cum_regret_n += regret_n;
        self.cum_regret_s += regret_s;
        self.cum_loss_inf += loss_inf;
        self.records.push(RoundRecord {
            t,
            regret_n,
            regret_s,
            loss_inf,
            x_t: x_t.clone(),
            x_star_t: x_star_t.clone(),
        });
        Ok(self.records.last().expect("just pushed"))
    }

    /// Rows of the CSV contract, with running cumulative and average `regret_n`.
    pub fn rows(&self) -> impl Iterator<Item = TraceRow> + '_ {
        let mut cum = 0.0;
        self.records.iter().enumerate().map(move |(i, r)| {
            cum += r.regret_n;
            TraceRow {
                t: r.t,
                regret_n: r.regret_n,
                regret_s: r.regret_s,
                loss_inf: r.loss_inf,
                cum_regret_n: cum,
                avg_regret_n: cum / (i + 1) as f64,
            }
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for row in self.rows() {
            writeln!(out, "{}", row.to_csv())?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str = "t,regret_n,regret_s,loss_inf,cum_regret_n,avg_regret_n";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub regret_n: f64,
    pub regret_s: f64,
    pub loss_inf: f64,
    pub cum_regret_n: f64,
    pub avg_regret_n: f64,
}

impl TraceRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e}",
            self.t, self.regret_n, self.regret_s, self.loss_inf, self.cum_regret_n, self.avg_regret_n
        )
    }
}

/// Parses a trace CSV written by [`RegretTrace::write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse { line: 1, column: 1, message: format!("expected header `{CSV_HEADER}`") });
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse { line: i + 1, column: 1, message: format!("expected 6 fields, got {}", fields.len()) });
        }
        let mut column = 1;
        let mut nums = [0.0f64; 5];
        let t: usize = fields[0].parse().map_err(|_| Error::Parse {
            line: i + 1,
            column,
            message: format!("invalid round `{}`", fields[0]),
        })?;
        column += fields[0].len() + 1;
        for (k, f) in fields[1..].iter().enumerate() {
            nums[k] = f.parse().map_err(|_| Error::Parse {
                line: i + 1,
                column,
                message: format!("invalid number `{f}`"),
            })?;
            column += f.len() + 1;
        }
        rows.push(TraceRow {
            t,
            regret_n: nums[0],
            regret_s: nums[1],
            loss_inf: nums[2],
            cum_regret_n: nums[3],
            avg_regret_n: nums[4],
        });
    }
    Ok(rows)
}
