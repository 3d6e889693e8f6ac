//! Degree-distribution moments: the only network summary the SCPW closure consumes.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScpwError};

/// Relative tolerance used by both feasibility inequalities.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// First three raw moments ⟨k⟩, ⟨k²⟩, ⟨k³⟩ of a degree distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeMoments {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl DegreeMoments {
    /// Builds a moment triple. Only positivity is enforced here; use
    /// [`check_feasibility`] for the Jensen and Cauchy–Schwarz bounds.
    pub fn new(k1: f64, k2: f64, k3: f64) -> Result<Self> {
        for (name, v) in [("k1", k1), ("k2", k2), ("k3", k3)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(ScpwError::InvalidMoments(format!(
                    "{name} = {v} must be finite and positive"
                )));
            }
        }
        Ok(Self { k1, k2, k3 })
    }

    /// Like [`DegreeMoments::new`] but also rejects infeasible triples,
    /// naming the violated inequality.
    pub fn feasible(k1: f64, k2: f64, k3: f64) -> Result<Self> {
        let m = Self::new(k1, k2, k3)?;
        check_feasibility(&m).into_result()?;
        Ok(m)
    }

    /// ⟨k²⟩ − ⟨k⟩².
    pub fn variance(&self) -> f64 {
        self.k2 - self.k1 * self.k1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("moments serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: DegreeMoments = serde_json::from_str(s).map_err(|e| ScpwError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::new(m.k1, m.k2, m.k3)
    }
}

/// Exact integer power sums Σd, Σd², Σd³ and the node count.
#[derive(Debug, Default, Clone, Copy)]
struct PowerSums {
    n: u128,
    s1: u128,
    s2: u128,
    s3: u128,
}

impl PowerSums {
    fn add(&mut self, degree: u64, count: u64) {
        let d = degree as u128;
        let c = count as u128;
        self.n += c;
        self.s1 += c * d;
        self.s2 += c * d * d;
        self.s3 += c * d * d * d;
    }

    fn finish(self) -> Result<DegreeMoments> {
        if self.n == 0 {
            return Err(ScpwError::ZeroCount);
        }
        if self.s1 == 0 {
            return Err(ScpwError::AllZeroDegrees);
        }
        // Sums are exact; each moment is rounded once per conversion and once in the division.
        let n = self.n as f64;
        Ok(DegreeMoments {
            k1: self.s1 as f64 / n,
            k2: self.s2 as f64 / n,
            k3: self.s3 as f64 / n,
        })
    }
}

/// Empirical moments of a degree sequence.
pub fn moments_from_sequence(degrees: &[u64]) -> Result<DegreeMoments> {
    if degrees.is_empty() {
        return Err(ScpwError::EmptySequence);
    }
    let mut sums = PowerSums::default();
    for &d in degrees {
        sums.add(d, 1);
    }
    sums.finish()
}

/// Moments of a two-point degree distribution with `n_a` nodes of degree `k_a`
/// and `n_b` nodes of degree `k_b`.
pub fn moments_from_bimodal(k_a: u64, n_a: u64, k_b: u64, n_b: u64) -> Result<DegreeMoments> {
    if n_a + n_b == 0 {
        return Err(ScpwError::ZeroCount);
    }
    let mut sums = PowerSums::default();
    sums.add(k_a, n_a);
    sums.add(k_b, n_b);
    sums.finish()
}

/// Analytic raw moments of a Poisson degree distribution.
pub fn moments_from_poisson(mean: f64) -> Result<DegreeMoments> {
    if !mean.is_finite() || mean <= 0.0 {
        return Err(ScpwError::InvalidParameter(format!(
            "Poisson mean must be positive, got {mean}"
        )));
    }
    let m = mean;
    DegreeMoments::new(m, m * m + m, m * m * m + 3.0 * m * m + m)
}

/// Which moment inequality a triple violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// ⟨k²⟩ ≥ ⟨k⟩²
    Jensen,
    /// ⟨k²⟩² ≤ ⟨k³⟩⟨k⟩
    CauchySchwarz,
}

impl std::fmt::Display for Inequality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Inequality::Jensen => write!(f, "Jensen (k2 >= k1^2)"),
            Inequality::CauchySchwarz => write!(f, "Cauchy-Schwarz (k2^2 <= k3*k1)"),
        }
    }
}

/// Margins of both inequalities. Positive margins are slack, negative ones violations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// ⟨k²⟩ − ⟨k⟩²
    pub jensen_margin: f64,
    /// ⟨k³⟩⟨k⟩ − ⟨k²⟩²
    pub cauchy_schwarz_margin: f64,
    pub jensen_ok: bool,
    pub cauchy_schwarz_ok: bool,
}

impl FeasibilityReport {
    pub fn ok(&self) -> bool {
        self.jensen_ok && self.cauchy_schwarz_ok
    }

    pub fn violations(&self) -> Vec<(Inequality, f64)> {
        let mut v = Vec::new();
        if !self.jensen_ok {
            v.push((Inequality::Jensen, -self.jensen_margin));
        }
        if !self.cauchy_schwarz_ok {
            v.push((Inequality::CauchySchwarz, -self.cauchy_schwarz_margin));
        }
        v
    }

    /// Both margins exceed `rel` times their natural scale. Used to pick
    /// cells strictly inside the feasible wedge.
    pub fn strictly_inside(&self, m: &DegreeMoments, rel: f64) -> bool {
        self.jensen_margin > rel * m.k1 * m.k1 && self.cauchy_schwarz_margin > rel * m.k3 * m.k1
    }

    pub fn into_result(self) -> Result<()> {
        if self.ok() {
            return Ok(());
        }
        let msg = self
            .violations()
            .iter()
            .map(|(ineq, by)| format!("{ineq} violated by {by:e}"))
            .collect::<Vec<_>>()
            .join("; ");
        Err(ScpwError::Infeasible(msg))
    }
}

pub fn check_feasibility(m: &DegreeMoments) -> FeasibilityReport {
    let jensen_margin = m.k2 - m.k1 * m.k1;
    let cauchy_schwarz_margin = m.k3 * m.k1 - m.k2 * m.k2;
    FeasibilityReport {
        jensen_margin,
        cauchy_schwarz_margin,
        jensen_ok: jensen_margin >= -FEASIBILITY_TOL * m.k1 * m.k1,
        cauchy_schwarz_ok: cauchy_schwarz_margin >= -FEASIBILITY_TOL * m.k3 * m.k1,
    }
}

/// Parses a degree-sequence file: one nonnegative integer per line, blank lines ignored.
pub fn read_degree_sequence(reader: impl BufRead) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let d = t.parse::<u64>().map_err(|e| ScpwError::Parse {
            line: i + 1,
            message: format!("'{t}': {e}"),
        })?;
        out.push(d);
    }
    Ok(out)
}

pub fn read_degree_file(path: impl AsRef<Path>) -> Result<Vec<u64>> {
    let f = std::fs::File::open(path)?;
    read_degree_sequence(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bimodal_sequence_matches_reported_moments() {
        let mut seq = vec![3u64; 5000];
        seq.extend(std::iter::repeat_n(5u64, 5000));
        let m = moments_from_sequence(&seq).unwrap();
        assert_eq!((m.k1, m.k2, m.k3), (4.0, 17.0, 76.0));
    }

    #[test]
    fn small_sequences() {
        let m = moments_from_sequence(&[1, 1]).unwrap();
        assert_eq!((m.k1, m.k2, m.k3), (1.0, 1.0, 1.0));
        let m = moments_from_sequence(&[1, 2, 3]).unwrap();
        assert_eq!(m.k1, 2.0);
        assert!((m.k2 - 14.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.k3, 12.0);
    }

    #[test]
    fn sequence_errors() {
        assert_eq!(moments_from_sequence(&[]), Err(ScpwError::EmptySequence));
        assert_eq!(moments_from_sequence(&[0, 0]), Err(ScpwError::AllZeroDegrees));
    }

    #[test]
    fn bimodal_examples() {
        let m = moments_from_bimodal(3, 5000, 5, 5000).unwrap();
        assert_eq!((m.k1, m.k2, m.k3), (4.0, 17.0, 76.0));
        let m = moments_from_bimodal(2, 1, 4, 3).unwrap();
        assert_eq!((m.k1, m.k2, m.k3), (3.5, 13.0, 50.0));
        let m = moments_from_bimodal(7, 3, 7, 11).unwrap();
        assert_eq!((m.k1, m.k2, m.k3), (7.0, 49.0, 343.0));
        assert_eq!(moments_from_bimodal(3, 0, 5, 0), Err(ScpwError::ZeroCount));
        assert_eq!(moments_from_bimodal(0, 4, 0, 2), Err(ScpwError::AllZeroDegrees));
    }

    #[test]
    fn poisson_examples() {
        let m = moments_from_poisson(10.0).unwrap();
        assert_eq!((m.k1, m.k2, m.k3), (10.0, 110.0, 1310.0));
        let m = moments_from_poisson(1.0).unwrap();
        assert_eq!((m.k1, m.k2, m.k3), (1.0, 2.0, 5.0));
        let m = moments_from_poisson(0.5).unwrap();
        assert_eq!((m.k1, m.k2, m.k3), (0.5, 0.75, 1.375));
        assert!(moments_from_poisson(0.0).is_err());
        assert!(moments_from_poisson(f64::NAN).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let r = check_feasibility(&DegreeMoments::new(4.0, 17.0, 76.0).unwrap());
        assert!(r.ok());
        assert_eq!(r.jensen_margin, 1.0);
        assert_eq!(r.cauchy_schwarz_margin, 15.0);

        let r = check_feasibility(&DegreeMoments::new(2.0, 4.0, 8.0).unwrap());
        assert!(r.ok());
        assert_eq!(r.jensen_margin, 0.0);
        assert_eq!(r.cauchy_schwarz_margin, 0.0);

        let r = check_feasibility(&DegreeMoments::new(2.0, 3.0, 100.0).unwrap());
        assert!(!r.ok());
        assert_eq!(r.violations(), vec![(Inequality::Jensen, 1.0)]);
        let err = r.into_result().unwrap_err();
        assert!(err.to_string().contains("Jensen"));
    }

    #[test]
    fn json_round_trip() {
        let m = DegreeMoments::new(4.0, 17.0, 76.0).unwrap();
        let s = m.to_json();
        assert_eq!(s, r#"{"k1":4.0,"k2":17.0,"k3":76.0}"#);
        assert_eq!(DegreeMoments::from_json(&s).unwrap(), m);
        assert!(DegreeMoments::from_json(r#"{"k1":-1,"k2":1,"k3":1}"#).is_err());
    }

    #[test]
    fn degree_file_parsing() {
        let text = "3\n\n5\n  4 \n";
        assert_eq!(read_degree_sequence(text.as_bytes()).unwrap(), vec![3, 5, 4]);
        let err = read_degree_sequence("3\n-1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, ScpwError::Parse { line: 2, .. }));
    }
}
