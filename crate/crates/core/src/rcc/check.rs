use super::ring::{inverse_unchecked, is_prime, residue_unchecked, ring_add, ring_mul, ring_sub, to_residue};
use super::{RccError, Residue};
use crate::ir::{DFGraph, IrError, Op, ScalarType};
use crate::Judgement;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Ordered, pairwise distinct moduli, each greater than 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct ModuleSet {
    moduli: Vec<u64>,
}

impl ModuleSet {
    pub fn new(moduli: Vec<u64>) -> Result<Self, RccError> {
        if moduli.is_empty() {
            return Err(RccError::Config("module set is empty".into()));
        }
        for (i, &m) in moduli.iter().enumerate() {
            if m <= 1 {
                return Err(RccError::Modulus {
                    modulus: m,
                    reason: "modulus must be greater than 1".into(),
                });
            }
            if moduli[..i].contains(&m) {
                return Err(RccError::Config(format!("modulus {m} appears twice")));
            }
        }
        Ok(ModuleSet { moduli })
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    pub fn all_prime(&self) -> bool {
        self.moduli.iter().all(|&m| is_prime(m))
    }

    /// `count` distinct primes drawn uniformly from `[2, bound]`.
    pub fn random_primes<R: Rng + ?Sized>(rng: &mut R, count: usize, bound: u64) -> Result<Self, RccError> {
        let pool: Vec<u64> = (2..=bound).filter(|&p| is_prime(p)).collect();
        if pool.len() < count {
            return Err(RccError::Config(format!("fewer than {count} primes up to {bound}")));
        }
        let picks = rand::seq::index::sample(rng, pool.len(), count);
        ModuleSet::new(picks.iter().map(|i| pool[i]).collect())
    }
}

impl Default for ModuleSet {
    fn default() -> Self {
        ModuleSet { moduli: vec![3, 5, 7] }
    }
}

impl TryFrom<Vec<u64>> for ModuleSet {
    type Error = RccError;

    fn try_from(v: Vec<u64>) -> Result<Self, RccError> {
        ModuleSet::new(v)
    }
}

impl From<ModuleSet> for Vec<u64> {
    fn from(m: ModuleSet) -> Self {
        m.moduli
    }
}

impl FromStr for ModuleSet {
    type Err = RccError;

    fn from_str(s: &str) -> Result<Self, RccError> {
        let moduli = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u64>()
                    .map_err(|_| RccError::Config(format!("bad modulus {p:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        ModuleSet::new(moduli)
    }
}

impl fmt::Display for ModuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.moduli.iter().map(u64::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

fn require_integer(graph: &DFGraph) -> Result<(), RccError> {
    if graph.scalar_type() != ScalarType::Int16 {
        return Err(RccError::NotInteger(format!(
            "program {:?} is {}; residue checks need an int16 program",
            graph.name(),
            graph.scalar_type()
        )));
    }
    Ok(())
}

fn has_div(graph: &DFGraph) -> bool {
    graph.nodes().iter().any(|n| n.op == Op::Div)
}

/// Evaluates the program in the residue ring mod `m`; one residue per output.
///
/// Divisions are mapped to multiplication by the inverse, which is only
/// faithful when the exact division has no remainder.
pub fn evaluate_mod(graph: &DFGraph, inputs: &[i64], m: u64) -> Result<Vec<Residue>, RccError> {
    require_integer(graph)?;
    if inputs.len() != graph.inputs().len() {
        return Err(IrError::Input(format!("expected {} inputs, got {}", graph.inputs().len(), inputs.len())).into());
    }
    if has_div(graph) && !is_prime(m) {
        return Err(RccError::Modulus {
            modulus: m,
            reason: "programs with division need prime moduli".into(),
        });
    }
    let zero = to_residue(0, m)?;
    let mut values = vec![zero; graph.len()];
    for (id, &x) in graph.inputs().iter().zip(inputs) {
        values[graph.slot(*id).expect("validated")] = to_residue(x, m)?;
    }
    for (i, node) in graph.nodes().iter().enumerate() {
        let ops = graph.operand_slots(i);
        values[i] = match node.op {
            Op::Input => continue,
            Op::Const => to_residue(node.value.and_then(|v| v.as_int()).expect("int const") as i64, m)?,
            Op::Output | Op::Export => values[ops[0]],
            Op::Add => ring_add(values[ops[0]], values[ops[1]])?,
            Op::Sub => ring_sub(values[ops[0]], values[ops[1]])?,
            Op::Mul => ring_mul(values[ops[0]], values[ops[1]])?,
            Op::Div => {
                let inv = inverse_unchecked(values[ops[1]]).ok_or(RccError::NoInverse { modulus: m })?;
                ring_mul(values[ops[0]], inv)?
            }
            Op::Tan | Op::Arctan | Op::Convert => unreachable!("int16 programs have no {} nodes", node.op),
        };
    }
    Ok(graph
        .outputs()
        .iter()
        .map(|id| values[graph.slot(*id).expect("validated")])
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundOutcome {
    Match,
    Mismatch,
    /// A divisor fell into the zero class, so this modulus says nothing.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub modulus: u64,
    pub outcome: RoundOutcome,
    /// Residues of the client's modular evaluation (empty when skipped).
    pub computed: Vec<u64>,
    /// Residues of the server's claimed outputs.
    pub claimed: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RccVerdict {
    pub judgement: Judgement,
    pub failed_round: Option<usize>,
    pub rounds: Vec<RoundRecord>,
}

impl RccVerdict {
    pub fn failed_modulus(&self) -> Option<u64> {
        self.failed_round.map(|r| self.rounds[r - 1].modulus)
    }

    pub fn skipped(&self) -> usize {
        self.rounds.iter().filter(|r| r.outcome == RoundOutcome::Skipped).count()
    }
}

/// Multi-round residue check: stops at the first modulus whose residues
/// disagree with the claimed outputs.
pub fn rcc_check(graph: &DFGraph, inputs: &[i64], claimed: &[i64], modules: &ModuleSet) -> Result<RccVerdict, RccError> {
    require_integer(graph)?;
    if modules.is_empty() {
        return Err(RccError::Config("module set is empty".into()));
    }
    if claimed.len() != graph.outputs().len() {
        return Err(RccError::Config(format!(
            "program has {} outputs but {} claimed values were given",
            graph.outputs().len(),
            claimed.len()
        )));
    }
    if has_div(graph) {
        if let Some(&m) = modules.moduli().iter().find(|&&m| !is_prime(m)) {
            return Err(RccError::Modulus {
                modulus: m,
                reason: "programs with division need prime moduli".into(),
            });
        }
    }

    let mut rounds = Vec::with_capacity(modules.len());
    for (j, &m) in modules.moduli().iter().enumerate() {
        let claimed_res: Vec<u64> = claimed
            .iter()
            .map(|&c| residue_unchecked((c as i128).rem_euclid(m as i128) as u64, m).value())
            .collect();
        let (outcome, computed) = match evaluate_mod(graph, inputs, m) {
            Ok(c) => {
                let c: Vec<u64> = c.iter().map(|r| r.value()).collect();
                let outcome = if c == claimed_res {
                    RoundOutcome::Match
                } else {
                    RoundOutcome::Mismatch
                };
                (outcome, c)
            }
            Err(RccError::NoInverse { .. }) => (RoundOutcome::Skipped, Vec::new()),
            Err(e) => return Err(e),
        };
        rounds.push(RoundRecord {
            round: j + 1,
            modulus: m,
            outcome,
            computed,
            claimed: claimed_res,
        });
        if outcome == RoundOutcome::Mismatch {
            return Ok(RccVerdict {
                judgement: Judgement::Positive,
                failed_round: Some(j + 1),
                rounds,
            });
        }
    }
    let judgement = if rounds.iter().all(|r| r.outcome == RoundOutcome::Skipped) {
        Judgement::Inconclusive
    } else {
        Judgement::Negative
    };
    Ok(RccVerdict {
        judgement,
        failed_round: None,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{GraphBuilder, ScalarType::Int16};

    /// `a*b + a`
    fn mul_add() -> DFGraph {
        let mut b = GraphBuilder::new("mul_add", Int16);
        let x = b.input(Int16);
        let y = b.input(Int16);
        let p = b.mul(x, y);
        let s = b.add(p, x);
        b.output(s);
        b.build().unwrap()
    }

    fn set(v: &[u64]) -> ModuleSet {
        ModuleSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn evaluate_mod_examples() {
        let g = mul_add();
        assert_eq!(evaluate_mod(&g, &[3, 4], 3).unwrap()[0].value(), 0);
        assert_eq!(evaluate_mod(&g, &[8, 6], 2).unwrap()[0].value(), 0);
    }

    #[test]
    fn verdict_examples() {
        let g = mul_add();
        let v = rcc_check(&g, &[3, 4], &[15], &ModuleSet::default()).unwrap();
        assert_eq!(v.judgement, Judgement::Negative);
        assert_eq!(v.rounds.len(), 3);

        let v = rcc_check(&g, &[3, 4], &[14], &ModuleSet::default()).unwrap();
        assert_eq!((v.judgement, v.failed_round), (Judgement::Positive, Some(1)));
        assert_eq!((v.rounds[0].computed[0], v.rounds[0].claimed[0]), (0, 2));

        let v = rcc_check(&g, &[3, 4], &[30], &set(&[3, 5])).unwrap();
        assert_eq!(v.judgement, Judgement::Negative);
        let v = rcc_check(&g, &[3, 4], &[30], &set(&[3, 5, 7])).unwrap();
        assert_eq!((v.judgement, v.failed_round, v.failed_modulus()), (Judgement::Positive, Some(3), Some(7)));
    }

    #[test]
    fn zero_class_divisors_skip_rounds() {
        let mut b = GraphBuilder::new("div", Int16);
        let x = b.input(Int16);
        let y = b.input(Int16);
        let q = b.div(x, y);
        b.output(q);
        let g = b.build().unwrap();
        let v = rcc_check(&g, &[12, 3], &[4], &set(&[3, 5])).unwrap();
        assert_eq!(v.judgement, Judgement::Negative);
        assert_eq!(v.skipped(), 1);
        let v = rcc_check(&g, &[30, 15], &[2], &set(&[3, 5])).unwrap();
        assert_eq!(v.judgement, Judgement::Inconclusive);
        assert!(matches!(rcc_check(&g, &[12, 3], &[4], &set(&[4, 5])), Err(RccError::Modulus { .. })));
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ModuleSet::new(vec![]), Err(RccError::Config(_))));
        assert!(matches!(ModuleSet::new(vec![3, 3]), Err(RccError::Config(_))));
        assert!(matches!(ModuleSet::new(vec![1, 3]), Err(RccError::Modulus { .. })));
        assert!(matches!(rcc_check(&mul_add(), &[1, 2], &[3, 4], &ModuleSet::default()), Err(RccError::Config(_))));
        assert_eq!("3, 5,7".parse::<ModuleSet>().unwrap(), ModuleSet::default());
    }

    #[test]
    fn random_prime_sets() {
        let mut rng = crate::rng::substream(1, "primes", 0);
        let s = ModuleSet::random_primes(&mut rng, 3, 101).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.all_prime() && s.moduli().iter().all(|&p| p <= 101));
    }
}
