//! Generators for the driving sign sequences: the deterministic all-plus
//! family, i.i.d. Bernoulli signs (optionally conditioned on survival by
//! whole-sequence rejection), SIR-induced sequences, and the one-sign-per-line
//! file format.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, SimRng};
use crate::seq::{compute_walk, Sign, SignSequence};
use crate::sir::{gen_sir, SirTrajectory};
use crate::{Error, Result};

/// Attempt cap for rejection sampling of survival-conditioned sequences.
pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;

/// What to generate.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    ConstantPlus,
    Iid { p: f64 },
    Sir { lambda_n: f64, susceptibles: usize },
    Explicit { values: Vec<i64> },
}

/// Full description of a sequence draw: kind, horizon and seed.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SequenceSpec {
    #[serde(flatten)]
    pub kind: SequenceKind,
    pub horizon: usize,
    pub seed: u64,
    #[serde(default)]
    pub condition_survival: bool,
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SequenceKind::Iid { p } => {
                if !(0.0..1.0).contains(p) {
                    return Err(Error::OutOfRange(format!("need 0 <= p < 1, got {p}")));
                }
                if self.condition_survival && *p <= 0.5 {
                    return Err(Error::OutOfRange(
                        "conditioning on survival needs p > 1/2".into(),
                    ));
                }
            }
            SequenceKind::Sir {
                lambda_n,
                susceptibles,
            } => {
                if *lambda_n < 0.0 || !lambda_n.is_finite() {
                    return Err(Error::OutOfRange(format!(
                        "need lambda_n >= 0, got {lambda_n}"
                    )));
                }
                if *susceptibles == 0 {
                    return Err(Error::OutOfRange("need at least one susceptible".into()));
                }
                if self.condition_survival {
                    return Err(Error::OutOfRange(
                        "SIR sequences are filtered by survival downstream, not conditioned".into(),
                    ));
                }
            }
            SequenceKind::ConstantPlus | SequenceKind::Explicit { .. } => {
                if self.condition_survival {
                    return Err(Error::OutOfRange(
                        "conditioning applies to i.i.d. sequences only".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Generates the sequence for replication `stream` of this spec's seed.
    /// SIR sequences run to absorption; the other kinds have length `horizon`.
    pub fn generate(&self, stream: u64) -> Result<SignSequence> {
        self.validate()?;
        let mut rng = stream_rng(self.seed, stream);
        match &self.kind {
            SequenceKind::ConstantPlus => Ok(gen_constant_plus(self.horizon)),
            SequenceKind::Iid { p } => {
                if self.condition_survival {
                    gen_iid_conditioned(*p, self.horizon, &mut rng, DEFAULT_REJECTION_CAP)
                } else {
                    Ok(gen_iid(*p, self.horizon, &mut rng))
                }
            }
            SequenceKind::Sir {
                lambda_n,
                susceptibles,
            } => Ok(gen_sir(*susceptibles, *lambda_n, &mut rng)?.0),
            SequenceKind::Explicit { values } => SignSequence::from_values(values.iter().copied()),
        }
    }
}

/// `n` copies of +1: the classical random recursive tree schedule.
pub fn gen_constant_plus(n: usize) -> SignSequence {
    SignSequence::new(vec![Sign::Plus; n])
}

/// i.i.d. signs with `P(+1) = p`.
pub fn gen_iid(p: f64, n: usize, rng: &mut SimRng) -> SignSequence {
    (0..n)
        .map(|_| {
            if rng.gen::<f64>() < p {
                Sign::Plus
            } else {
                Sign::Minus
            }
        })
        .collect()
}

/// i.i.d. signs conditioned on `tau > n` by whole-sequence rejection.
/// Requires `p > 1/2` so the acceptance probability stays bounded away from
/// zero at large `n`.
pub fn gen_iid_conditioned(
    p: f64,
    n: usize,
    rng: &mut SimRng,
    max_attempts: u64,
) -> Result<SignSequence> {
    if p <= 0.5 || p >= 1.0 {
        return Err(Error::OutOfRange(format!(
            "conditioning needs 1/2 < p < 1, got {p}"
        )));
    }
    for _ in 0..max_attempts {
        let x = gen_iid(p, n, rng);
        if compute_walk(&x).survives_past(n) {
            return Ok(x);
        }
    }
    Err(Error::ConditioningFailed {
        attempts: max_attempts,
    })
}

/// Re-exported SIR generator; see [`crate::sir`] for the chain itself.
pub use crate::sir::gen_sir as gen_sir_sequence;

/// Convenience: SIR sequence plus trajectory under a fresh stream.
pub fn gen_sir_seeded(n: usize, lambda_n: f64, seed: u64) -> Result<(SignSequence, SirTrajectory)> {
    gen_sir(n, lambda_n, &mut stream_rng(seed, 0))
}

/// Writes a sequence as one ±1 per line with a comment header.
pub fn write_sequence<W: Write>(mut out: W, x: &SignSequence, header: Option<&str>) -> Result<()> {
    if let Some(header) = header {
        writeln!(out, "# {header}")?;
    }
    for sign in x.iter() {
        writeln!(out, "{}", if sign.is_plus() { "+1" } else { "-1" })?;
    }
    Ok(())
}

/// Reads the one-±1-per-line format; `#`-prefixed lines and blanks are
/// skipped.
pub fn read_sequence<R: BufRead>(input: R) -> Result<SignSequence> {
    let mut signs = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let token = line.trim();
        if token.is_empty() || token.starts_with('#') {
            continue;
        }
        let value = match token {
            "+1" | "1" => 1,
            "-1" => -1,
            other => {
                return Err(Error::BadSequenceFile(format!(
                    "line {}: expected ±1, got {other:?}",
                    lineno + 1
                )))
            }
        };
        signs.push(Sign::from_value(value)?);
    }
    Ok(SignSequence::new(signs))
}

pub fn read_sequence_file(path: &Path) -> Result<SignSequence> {
    let file = std::fs::File::open(path)?;
    read_sequence(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_plus_examples() {
        assert_eq!(gen_constant_plus(0).len(), 0);
        assert_eq!(gen_constant_plus(3).signs(), &[Sign::Plus; 3]);
        let w = compute_walk(&gen_constant_plus(5));
        assert_eq!(w.s(5), 6);
    }

    #[test]
    fn iid_p_zero_is_all_minus() {
        let mut rng = stream_rng(1, 0);
        let x = gen_iid(0.0, 5, &mut rng);
        assert!(x.iter().all(|s| !s.is_plus()));
        assert_eq!(compute_walk(&x).tau(), Some(1));
    }

    #[test]
    fn iid_is_bit_reproducible() {
        let a = gen_iid(0.6, 100, &mut stream_rng(9, 4));
        let b = gen_iid(0.6, 100, &mut stream_rng(9, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn iid_empirical_mean_near_expectation() {
        // fixed seed; 2p - 1 = 0.5 within six sigma of the CLT scale
        let n = 1_000_000;
        let x = gen_iid(0.75, n, &mut stream_rng(2024, 0));
        let mean = x.iter().map(|s| s.value() as f64).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 3e-3, "mean = {mean}");
    }

    #[test]
    fn conditioned_sequences_survive() {
        let x = gen_iid_conditioned(0.75, 10_000, &mut stream_rng(3, 0), 1000).unwrap();
        let w = compute_walk(&x);
        assert!(w.survives_past(10_000));
        assert!(w.values().iter().skip(1).all(|&s| s > 0));
    }

    #[test]
    fn conditioning_requires_supercritical_p() {
        assert!(gen_iid_conditioned(0.4, 10, &mut stream_rng(1, 0), 10).is_err());
    }

    #[test]
    fn conditioning_cap_is_reported() {
        // p barely above 1/2 at a horizon it cannot reach in two attempts
        let err = gen_iid_conditioned(0.500001, 100_000, &mut stream_rng(1, 0), 2).unwrap_err();
        assert!(matches!(err, Error::ConditioningFailed { attempts: 2 }));
    }

    #[test]
    fn sequence_file_round_trip() {
        let x = SignSequence::from_values([1, -1, 1]).unwrap();
        let mut buf = Vec::new();
        write_sequence(&mut buf, &x, Some("seed=7 kind=explicit")).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=7"));
        assert_eq!(read_sequence(&buf[..]).unwrap(), x);
    }

    #[test]
    fn sequence_file_rejects_garbage() {
        assert!(matches!(
            read_sequence("+1\n2\n".as_bytes()),
            Err(Error::BadSequenceFile(_))
        ));
    }

    #[test]
    fn spec_validation() {
        let spec = SequenceSpec {
            kind: SequenceKind::Iid { p: 0.4 },
            horizon: 10,
            seed: 0,
            condition_survival: true,
        };
        assert!(spec.validate().is_err());
        let spec = SequenceSpec {
            kind: SequenceKind::Iid { p: 1.2 },
            horizon: 10,
            seed: 0,
            condition_survival: false,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_generation_is_stream_deterministic() {
        let spec = SequenceSpec {
            kind: SequenceKind::Iid { p: 0.7 },
            horizon: 50,
            seed: 11,
            condition_survival: false,
        };
        assert_eq!(spec.generate(3).unwrap(), spec.generate(3).unwrap());
        assert_ne!(spec.generate(3).unwrap(), spec.generate(4).unwrap());
    }
}
