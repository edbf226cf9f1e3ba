//! Dense two-phase primal simplex with Bland's rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PIVOT_TOLERANCE: f64 = 1e-9;
pub const MAX_VARIABLES: usize = 1024;
const MAX_PIVOTS: usize = 100_000;

/// `maximize c.x` subject to `A_eq x = b_eq`, `A_le x <= b_le`, `x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub le_rows: Vec<Vec<f64>>,
    pub le_rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: SolveStatus,
    /// Empty unless optimal.
    pub x: Vec<f64>,
    pub value: Option<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    /// Program over the probability simplex: includes `sum_j x_j = 1`.
    pub fn on_simplex(objective: Vec<f64>) -> Self {
        let m = objective.len();
        Self {
            objective,
            eq_rows: vec![vec![1.0; m]],
            eq_rhs: vec![1.0],
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
        }
    }

    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) {
        self.add_le(row.into_iter().map(|v| -v).collect(), -rhs);
    }

    fn validate(&self) -> Result<()> {
        let n = self.variables();
        if n == 0 {
            return Err(Error::MalformedProgram("no variables".into()));
        }
        if n > MAX_VARIABLES {
            return Err(Error::MalformedProgram(format!("{n} variables exceeds {MAX_VARIABLES}")));
        }
        if self.eq_rows.len() != self.eq_rhs.len() || self.le_rows.len() != self.le_rhs.len() {
            return Err(Error::MalformedProgram("row and right-hand-side counts differ".into()));
        }
        for row in self.eq_rows.iter().chain(&self.le_rows) {
            if row.len() != n {
                return Err(Error::MalformedProgram(format!("row has {} coefficients, expected {n}", row.len())));
            }
        }
        let all_finite = self
            .objective
            .iter()
            .chain(self.eq_rows.iter().flatten())
            .chain(self.le_rows.iter().flatten())
            .chain(&self.eq_rhs)
            .chain(&self.le_rhs)
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::MalformedProgram("non-finite coefficient".into()));
        }
        Ok(())
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in &mut self.rows[row] {
            *v /= p;
        }
        self.rhs[row] /= p;
        self.rows[row][col] = 1.0;
        let (pivot_row, pivot_rhs) = (self.rows[row].clone(), self.rhs[row]);
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                self.rhs[i] -= factor * pivot_rhs;
                self.rows[i][col] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Maximizes `cost . x` over columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<Phase> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::MalformedProgram("pivot limit exceeded".into()));
            }
            // Bland: lowest-index column with positive reduced cost.
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .zip(&self.rows)
                        .map(|(&b, row)| cost[b] * row[j])
                        .sum::<f64>();
                reduced > PIVOT_TOLERANCE
            });
            let Some(col) = entering else {
                return Ok(Phase::Optimal);
            };

            let mut leaving: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[col];
                if a <= PIVOT_TOLERANCE {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / a;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((best, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * best_ratio.abs().max(1.0);
                        if ratio < best_ratio && !tie || tie && self.basis[i] < self.basis[best] {
                            Some((i, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            match leaving {
                Some((row, _)) => self.pivot(row, col),
                None => return Ok(Phase::Unbounded),
            }
        }
    }
}

pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.variables();
    let n_le = lp.le_rows.len();
    let rows_in: Vec<(&Vec<f64>, f64, Option<usize>)> = lp
        .le_rows
        .iter()
        .zip(&lp.le_rhs)
        .enumerate()
        .map(|(k, (r, &b))| (r, b, Some(k)))
        .chain(lp.eq_rows.iter().zip(&lp.eq_rhs).map(|(r, &b)| (r, b, None)))
        .collect();

    // Columns: originals, one slack per <= row, then artificials.
    let needs_artificial: Vec<bool> = rows_in.iter().map(|(_, b, slack)| slack.is_none() || *b < 0.0).collect();
    let n_art = needs_artificial.iter().filter(|&&a| a).count();
    let width = n + n_le + n_art;

    let mut tab = Tableau {
        rows: Vec::with_capacity(rows_in.len()),
        rhs: Vec::with_capacity(rows_in.len()),
        basis: Vec::with_capacity(rows_in.len()),
        pivots: 0,
    };
    let mut next_art = n + n_le;
    for ((coeffs, b, slack), &art) in rows_in.iter().zip(&needs_artificial) {
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width];
        for (dst, &c) in row.iter_mut().zip(coeffs.iter()) {
            *dst = sign * c;
        }
        if let Some(k) = slack {
            row[n + k] = sign;
        }
        let basic = if art {
            row[next_art] = 1.0;
            next_art += 1;
            next_art - 1
        } else {
            n + slack.expect("slack row")
        };
        tab.rows.push(row);
        tab.rhs.push(sign * b);
        tab.basis.push(basic);
    }

    if n_art > 0 {
        let mut phase1 = vec![0.0; width];
        for c in phase1.iter_mut().skip(n + n_le) {
            *c = -1.0;
        }
        tab.optimize(&phase1, width)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(&b, _)| b >= n + n_le)
            .map(|(_, &v)| v)
            .sum();
        if infeasibility > PIVOT_TOLERANCE {
            return Ok(LpSolution {
                status: SolveStatus::Infeasible,
                x: Vec::new(),
                value: None,
                pivots: tab.pivots,
            });
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= n + n_le {
                match (0..n + n_le).find(|&j| tab.rows[i][j].abs() > PIVOT_TOLERANCE) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.rhs.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    match tab.optimize(&cost, n + n_le)? {
        Phase::Unbounded => Ok(LpSolution {
            status: SolveStatus::Unbounded,
            x: Vec::new(),
            value: None,
            pivots: tab.pivots,
        }),
        Phase::Optimal => {
            let mut x = vec![0.0; n];
            for (&b, &v) in tab.basis.iter().zip(&tab.rhs) {
                if b < n {
                    x[b] = v;
                }
            }
            let value = x.iter().zip(&lp.objective).map(|(a, c)| a * c).sum();
            Ok(LpSolution {
                status: SolveStatus::Optimal,
                x,
                value: Some(value),
                pivots: tab.pivots,
            })
        }
    }
}
