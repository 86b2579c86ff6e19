//! Dense two-phase primal simplex.
//!
//! Pricing is Dantzig's most-negative reduced cost with lowest-index ties;
//! after a run of degenerate pivots the solver switches to Bland's rule until
//! the objective moves again. Inequality right-hand sides are perturbed by
//! small fixed amounts so that homogeneous rows do not stall the ratio test;
//! the perturbation is carried as its own column, removed at the end, and
//! any infeasibility it leaves is repaired by dual simplex pivots. Every
//! choice is a deterministic function of the tableau, so identical programs
//! always end at the same vertex.

use alloc::vec;
use alloc::vec::Vec;

use super::LinearProgram;
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 64;
const PERTURBATION: f64 = 1e-7;

fn frac(x: f64) -> f64 {
    x - libm::floor(x)
}

/// Optimal vertex of a [`LinearProgram`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Minimised objective `c.x`.
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Rel {
    Le,
    Ge,
    Eq,
}

struct Tableau {
    rows: usize,
    width: usize,
    /// Row-major `rows x width`; the last column is the right-hand side and
    /// the one before it the accumulated perturbation.
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs of the phase-2 objective; the last entry is `-z`.
    cost: Vec<f64>,
    /// Reduced costs of the phase-1 objective.
    aux: Vec<f64>,
    active: Vec<bool>,
    pivots: usize,
    scratch: Vec<usize>,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.width - 1]
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    /// Subtracts the perturbation column from the right-hand side.
    fn remove_perturbation(&mut self) {
        let w = self.width;
        for row in self.data.chunks_mut(w).chain([&mut self.cost[..], &mut self.aux[..]]) {
            row[w - 1] -= row[w - 2];
            row[w - 2] = 0.0;
        }
    }

    /// Dual simplex pivots until every active row is primal feasible. The
    /// reduced costs must already be non-negative.
    fn dual_repair(&mut self, limit: usize, max_pivots: usize) -> Result<()> {
        loop {
            let mut leaving = None;
            let mut worst = -FEASIBILITY_TOL;
            for r in 0..self.rows {
                if self.active[r] && self.rhs(r) < worst {
                    worst = self.rhs(r);
                    leaving = Some(r);
                }
            }
            let Some(r) = leaving else { return Ok(()) };
            let mut entering = None;
            let mut best = f64::INFINITY;
            for j in 0..limit {
                let a = self.at(r, j);
                if a < -PIVOT_TOL {
                    let ratio = self.cost[j].max(0.0) / -a;
                    if ratio < best - 1e-12 {
                        best = ratio;
                        entering = Some(j);
                    }
                }
            }
            let Some(c) = entering else { return Err(Error::Infeasible) };
            self.pivot(r, c);
            if self.pivots > max_pivots {
                return Err(Error::NonConvergence { what: "dual simplex repair", iterations: self.pivots });
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.data[r * w + c];
        self.scratch.clear();
        for j in 0..w {
            let v = &mut self.data[r * w + j];
            if *v != 0.0 {
                *v *= inv;
                self.scratch.push(j);
            }
        }
        self.data[r * w + c] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        let nz = &self.scratch;
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for &j in nz {
                    row[j] -= f * pivot_row[j];
                }
                row[c] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        eliminate(&mut self.cost);
        eliminate(&mut self.aux);
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs primal simplex on the phase-1 (`aux`) or phase-2 (`cost`) row
    /// over columns `0..limit`.
    fn optimize(&mut self, phase_one: bool, limit: usize, max_pivots: usize) -> Result<()> {
        let mut degenerate = 0usize;
        loop {
            let costs = if phase_one { &self.aux } else { &self.cost };
            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = -COST_TOL;
            for (j, &d) in costs[..limit].iter().enumerate() {
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = entering else { return Ok(()) };

            let mut leaving: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.rows {
                if !self.active[r] {
                    continue;
                }
                let a = self.at(r, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                let better = match leaving {
                    None => true,
                    Some(l) => {
                        if ratio < best_ratio - 1e-12 {
                            true
                        } else if ratio <= best_ratio + 1e-12 {
                            if bland {
                                self.basis[r] < self.basis[l]
                            } else {
                                a > self.at(l, c)
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leaving = Some(r);
                    best_ratio = best_ratio.min(ratio);
                }
            }
            let Some(r) = leaving else {
                return Err(Error::Unbounded);
            };
            if best_ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            if self.pivots > max_pivots {
                let what = if phase_one { "simplex phase one" } else { "simplex phase two" };
                return Err(Error::NonConvergence { what, iterations: self.pivots });
            }
        }
    }
}

/// Solves `lp` to optimality. Returns [`Error::Infeasible`] or
/// [`Error::Unbounded`] when no optimum exists.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    // Shift x = y + lower so that y >= 0, and make every right-hand side non-negative.
    let mut rows: Vec<(Vec<(usize, f64)>, f64, Rel)> = Vec::new();
    for (cons, rel) in lp
        .equalities
        .iter()
        .map(|c| (c, Rel::Eq))
        .chain(lp.inequalities.iter().map(|c| (c, Rel::Le)))
    {
        let shift: f64 = cons.coeffs.iter().map(|&(j, a)| a * lp.lower_bounds[j]).sum();
        let mut rhs = cons.rhs - shift;
        let mut coeffs = cons.coeffs.clone();
        let mut rel = rel;
        if rhs < 0.0 {
            rhs = -rhs;
            coeffs.iter_mut().for_each(|c| c.1 = -c.1);
            if rel == Rel::Le {
                rel = Rel::Ge;
            }
        }
        rows.push((coeffs, rhs, rel));
    }

    let m = rows.len();
    let slack_count = rows.iter().filter(|r| r.2 != Rel::Eq).count();
    let art_count = rows.iter().filter(|r| r.2 != Rel::Le).count();
    let first_artificial = n + slack_count;
    let width = first_artificial + art_count + 2;
    let rhs_scale = 1.0 + rows.iter().map(|r| r.1).fold(0.0, f64::max);

    let mut t = Tableau {
        rows: m,
        width,
        data: vec![0.0; m * width],
        basis: vec![0; m],
        cost: vec![0.0; width],
        aux: vec![0.0; width],
        active: vec![true; m],
        pivots: 0,
        scratch: Vec::with_capacity(width),
    };
    let mut next_slack = n;
    let mut next_art = first_artificial;
    for (r, (coeffs, rhs, rel)) in rows.iter().enumerate() {
        let row = &mut t.data[r * width..(r + 1) * width];
        for &(j, a) in coeffs {
            row[j] += a;
        }
        row[width - 1] = *rhs;
        if *rel != Rel::Eq {
            // Distinct deterministic offsets in [1, 2) * PERTURBATION * scale.
            let eps = PERTURBATION * rhs_scale * (1.0 + frac(r as f64 * 0.618_033_988_749_895));
            row[width - 2] = eps;
            row[width - 1] += eps;
        }
        match rel {
            Rel::Le => {
                row[next_slack] = 1.0;
                t.basis[r] = next_slack;
                next_slack += 1;
            }
            Rel::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
            Rel::Eq => {
                row[next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
        }
    }
    t.cost[..n].copy_from_slice(&lp.objective);
    for r in 0..m {
        if t.basis[r] >= first_artificial {
            for j in (0..first_artificial).chain([width - 2, width - 1]) {
                t.aux[j] -= t.data[r * width + j];
            }
        }
    }

    let max_pivots = 50 * (m + width) + 1000;

    if art_count > 0 {
        t.optimize(true, first_artificial, max_pivots)?;
        let residual = -(t.aux[width - 1] - t.aux[width - 2]);
        if residual > FEASIBILITY_TOL * rhs_scale {
            return Err(Error::Infeasible);
        }
        // Drive remaining artificials out of the basis; rows where that is
        // impossible are redundant.
        for r in 0..m {
            if t.basis[r] < first_artificial {
                continue;
            }
            let mut best = None;
            let mut best_abs = PIVOT_TOL;
            for j in 0..first_artificial {
                let a = t.at(r, j).abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            match best {
                Some(j) => t.pivot(r, j),
                None => {
                    t.active[r] = false;
                    t.data[r * width..(r + 1) * width].fill(0.0);
                }
            }
        }
        for r in 0..m {
            t.data[r * width + first_artificial..r * width + width - 2].fill(0.0);
        }
        t.cost[first_artificial..width - 2].fill(0.0);
    }

    t.optimize(false, first_artificial, max_pivots)?;
    t.remove_perturbation();
    t.dual_repair(first_artificial, max_pivots)?;

    let mut x = lp.lower_bounds.clone();
    for r in 0..m {
        let j = t.basis[r];
        if t.active[r] && j < n {
            x[j] += t.rhs(r).max(0.0);
        }
    }
    Ok(LpSolution { objective: lp.objective_value(&x), x, pivots: t.pivots })
}
