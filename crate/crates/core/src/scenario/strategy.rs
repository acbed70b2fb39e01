use crate::approx::{ArithBackend, Paradigm};
use crate::ir::{census, evaluate, Arithmetic, DFGraph, IrError, Scalar, Trace};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// How a strategic server decides when to cheat.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerStrategy {
    /// Number of initial jobs always run accurately (W).
    #[serde(default = "default_warmup")]
    pub honest_warmup: u64,
    /// Jobs with fewer arithmetic nodes than this are always run accurately (T).
    #[serde(default = "default_threshold")]
    pub small_job_threshold: usize,
    /// Probability of approximating an eligible job (p).
    #[serde(default = "default_prob")]
    pub dishonest_prob: f64,
}

fn default_warmup() -> u64 {
    10
}
fn default_threshold() -> usize {
    30
}
fn default_prob() -> f64 {
    1.0
}

impl Default for ServerStrategy {
    fn default() -> Self {
        ServerStrategy {
            honest_warmup: default_warmup(),
            small_job_threshold: default_threshold(),
            dishonest_prob: default_prob(),
        }
    }
}

impl ServerStrategy {
    /// Cheats on every job.
    pub fn always_dishonest() -> Self {
        ServerStrategy {
            honest_warmup: 0,
            small_job_threshold: 0,
            dishonest_prob: 1.0,
        }
    }

    /// Never cheats.
    pub fn honest() -> Self {
        ServerStrategy {
            dishonest_prob: 0.0,
            ..Self::always_dishonest()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.dishonest_prob) {
            return Err(format!("dishonest_prob must lie in [0, 1], got {}", self.dishonest_prob));
        }
        Ok(())
    }

    /// Paradigm for job number `job_index` (0-based). Always consumes one
    /// draw from `rng`, so the stream stays aligned whatever the rules decide.
    pub fn choose<R: Rng + ?Sized>(&self, job_index: u64, census_total: usize, rng: &mut R) -> Paradigm {
        let draw: f64 = rng.gen();
        if job_index < self.honest_warmup || census_total < self.small_job_threshold {
            Paradigm::Accurate
        } else if draw < self.dishonest_prob {
            Paradigm::Approximate
        } else {
            Paradigm::Accurate
        }
    }
}

/// A server run: the raw result and the paradigm actually used.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    pub trace: Trace,
    pub ground_truth: Paradigm,
}

/// Runs `job` the way the strategic server would.
pub fn server_execute<A: Arithmetic + ?Sized, R: Rng + ?Sized>(
    job: &DFGraph,
    inputs: &[Scalar],
    strategy: &ServerStrategy,
    appx: &A,
    job_index: u64,
    rng: &mut R,
) -> Result<Execution, IrError> {
    let ground_truth = strategy.choose(job_index, census(job).total, rng);
    let trace = match ground_truth {
        Paradigm::Accurate => evaluate(job, inputs, &ArithBackend::exact())?,
        Paradigm::Approximate => evaluate(job, inputs, appx)?,
    };
    Ok(Execution { trace, ground_truth })
}

/// Whether `claimed` differs from the exact result at all. Runs that happen
/// to land on the exact answer are undetectable in principle.
pub fn ground_truth_oracle(job: &DFGraph, inputs: &[Scalar], claimed: &[Scalar]) -> Result<bool, IrError> {
    let exact = evaluate(job, inputs, &ArithBackend::exact())?;
    Ok(differs(&exact.outputs, claimed))
}

pub(crate) fn differs(exact: &[Scalar], claimed: &[Scalar]) -> bool {
    exact.len() != claimed.len()
        || exact.iter().zip(claimed).any(|(e, c)| match (e, c) {
            (Scalar::Int(a), Scalar::Int(b)) => a != b,
            (Scalar::Float(a), Scalar::Float(b)) => a != b,
            _ => true,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::UnitCombo;
    use crate::ir::BuiltinSpec;

    #[test]
    fn warmup_and_small_jobs_stay_honest() {
        let s = ServerStrategy::default();
        let mut rng = crate::rng::substream(1, "s", 0);
        assert_eq!(s.choose(4, 500, &mut rng), Paradigm::Accurate);
        assert_eq!(s.choose(50, 7, &mut rng), Paradigm::Accurate);
        assert_eq!(s.choose(50, 500, &mut rng), Paradigm::Approximate);
        assert_eq!(ServerStrategy::honest().choose(50, 500, &mut rng), Paradigm::Accurate);
    }

    #[test]
    fn degenerate_strategy_cheats_on_fir() {
        let g = BuiltinSpec::fir_filter().build().unwrap();
        let x = BuiltinSpec::fir_filter().sample_inputs(&mut crate::rng::substream(2, "x", 0));
        let appx = ArithBackend::integer(UnitCombo::defaults()[0]).unwrap();
        let mut rng = crate::rng::substream(2, "d", 0);
        let run = server_execute(&g, &x, &ServerStrategy::always_dishonest(), &appx, 0, &mut rng).unwrap();
        assert_eq!(run.ground_truth, Paradigm::Approximate);
        let small = BuiltinSpec::Conv2x2.build().unwrap();
        let xs = BuiltinSpec::Conv2x2.sample_inputs(&mut rng);
        let run = server_execute(&small, &xs, &ServerStrategy::default(), &appx, 100, &mut rng).unwrap();
        assert_eq!(run.ground_truth, Paradigm::Accurate);
    }

    #[test]
    fn oracle_compares_exactly() {
        let g = BuiltinSpec::Conv2x2.build().unwrap();
        let x: Vec<Scalar> = (1..=8).map(Scalar::Int).collect();
        let exact = evaluate(&g, &x, &ArithBackend::exact()).unwrap().outputs;
        assert!(!ground_truth_oracle(&g, &x, &exact).unwrap());
        let bumped = vec![Scalar::Int(exact[0].as_int().unwrap() + 1)];
        assert!(ground_truth_oracle(&g, &x, &bumped).unwrap());
    }

    #[test]
    fn bad_probability() {
        let s = ServerStrategy {
            dishonest_prob: 1.5,
            ..ServerStrategy::default()
        };
        assert!(s.validate().is_err());
    }
}
