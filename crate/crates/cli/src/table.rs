//! Final-step summary table: one row per environment, mean ± std of the
//! average and worst-case errors for each algorithm.

use std::fmt::Write as _;

use modest_core::envs::EnvSpec;
use modest_core::learner::Algorithm;

use crate::results::{final_errors, ResultRow};
use crate::stats::{mean, sample_std};

pub fn render_table(rows: &[ResultRow]) -> String {
    let finals = final_errors(rows);
    let mut envs: Vec<EnvSpec> = Vec::new();
    let mut algos: Vec<Algorithm> = Vec::new();
    for f in &finals {
        if !envs.contains(&f.env) {
            envs.push(f.env);
        }
        if !algos.contains(&f.algo) {
            algos.push(f.algo);
        }
    }
    let mut out = String::from("| env |");
    for a in &algos {
        let _ = write!(out, " {a} E | {a} W |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|---|".repeat(algos.len()));
    out.push('\n');
    for env in &envs {
        let _ = write!(out, "| {env} |");
        for algo in &algos {
            match finals.iter().find(|f| f.env == *env && f.algo == *algo) {
                Some(f) => {
                    let _ = write!(
                        out,
                        " {:.4e} ± {:.1e} | {:.4e} ± {:.1e} |",
                        mean(&f.error_avg),
                        sample_std(&f.error_avg),
                        mean(&f.error_max),
                        sample_std(&f.error_max)
                    );
                }
                None => out.push_str(" - | - |"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let rows: Vec<ResultRow> = (0..2u64)
            .flat_map(|g| {
                [Algorithm::MaxEnt, Algorithm::WeightedMaxEnt].map(move |algo| ResultRow {
                    env: EnvSpec::Garnet { states: 5, actions: 5, branching: 5, seed: g },
                    algo,
                    seed: 0,
                    step: 100,
                    error_avg: 0.1,
                    error_max: 0.2,
                })
            })
            .collect();
        let t = render_table(&rows);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("maxent E") && lines[0].contains("weighted-maxent W"));
        assert!(lines[2].starts_with("| garnet:5x5x5:0 |"));
    }
}
