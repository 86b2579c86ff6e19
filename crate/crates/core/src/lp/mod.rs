//! Linear programming: a dense two-phase simplex solver and the occupancy
//! measure LPs built on top of it.

mod mdp_lp;
mod simplex;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

pub use mdp_lp::{
    build_extended_lp, build_known_model_lp, extract_occupancy, extract_policy, solve_extended_lp,
    solve_known_model_lp, ExtendedLpSolution, ExtendedOccupancy,
};
pub use simplex::{solve_lp, LpSolution};

/// Sparse linear constraint `sum coeffs[i].1 * x[coeffs[i].0] (op) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// `minimize c.x` subject to `A_eq x = b_eq`, `A_ub x <= b_ub`, `x >= lower`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub equalities: Vec<Constraint>,
    pub inequalities: Vec<Constraint>,
    pub lower_bounds: Vec<f64>,
}

impl LinearProgram {
    /// Program over `num_vars` non-negative variables with zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: alloc::vec![0.0; num_vars],
            equalities: Vec::new(),
            inequalities: Vec::new(),
            lower_bounds: alloc::vec![0.0; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(Constraint::new(coeffs, rhs));
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.inequalities.push(Constraint::new(coeffs, rhs));
    }

    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        let negated = coeffs.into_iter().map(|(j, a)| (j, -a)).collect();
        self.inequalities.push(Constraint::new(negated, -rhs));
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower_bounds.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} lower bounds for {n} variables",
                self.lower_bounds.len()
            )));
        }
        let all_finite = self.objective.iter().chain(&self.lower_bounds).all(|x| x.is_finite())
            && self
                .equalities
                .iter()
                .chain(&self.inequalities)
                .all(|c| c.rhs.is_finite() && c.coeffs.iter().all(|&(j, a)| j < n && a.is_finite()));
        if !all_finite {
            return Err(Error::InvalidConfig("LP has a non-finite entry or an out-of-range index".into()));
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self.equalities.iter().map(|c| (c.eval(x) - c.rhs).abs());
        let ub = self.inequalities.iter().map(|c| (c.eval(x) - c.rhs).max(0.0));
        let lb = self.lower_bounds.iter().zip(x).map(|(&l, &v)| (l - v).max(0.0));
        eq.chain(ub).chain(lb).fold(0.0, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Plain-text standard form: an objective line, then one constraint per line,
/// then the variable bounds.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn terms(f: &mut fmt::Formatter<'_>, coeffs: impl Iterator<Item = (usize, f64)>) -> fmt::Result {
            let mut first = true;
            for (j, a) in coeffs.filter(|&(_, a)| a != 0.0) {
                if first {
                    write!(f, "{a:e} x{j}")?;
                    first = false;
                } else if a < 0.0 {
                    write!(f, " - {:e} x{j}", -a)?;
                } else {
                    write!(f, " + {a:e} x{j}")?;
                }
            }
            if first {
                write!(f, "0")?;
            }
            Ok(())
        }
        write!(f, "minimize: ")?;
        terms(f, self.objective.iter().copied().enumerate())?;
        writeln!(f)?;
        for (i, c) in self.equalities.iter().enumerate() {
            write!(f, "e{i}: ")?;
            terms(f, c.coeffs.iter().copied())?;
            writeln!(f, " = {:e}", c.rhs)?;
        }
        for (i, c) in self.inequalities.iter().enumerate() {
            write!(f, "u{i}: ")?;
            terms(f, c.coeffs.iter().copied())?;
            writeln!(f, " <= {:e}", c.rhs)?;
        }
        for (j, l) in self.lower_bounds.iter().enumerate() {
            writeln!(f, "x{j} >= {l:e}")?;
        }
        Ok(())
    }
}
