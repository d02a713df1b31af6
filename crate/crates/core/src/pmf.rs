//! Finite probability objects: PMFs, joints, channel matrices, code lengths.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on probability normalisation.
pub const NORMALIZATION_TOL: f64 = 1e-12;

fn check_weights(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidPmf(format!("{what} has no entries")));
    }
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidPmf(format!(
                "{what} entry {i} is {p}, expected >= 0"
            )));
        }
    }
    Ok(())
}

fn check_unique(labels: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::InvalidPmf(format!(
                "{what} has duplicate label {l:?}"
            )));
        }
    }
    Ok(())
}

/// A probability mass function over a labeled finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePmf {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl DiscretePmf {
    /// Builds a PMF, requiring the weights to sum to 1 within 1e-12.
    pub fn new<L: Into<String>>(labels: Vec<L>, probs: Vec<f64>) -> Result<Self> {
        Self::build(labels, probs, false)
    }

    /// Builds a PMF, rescaling the weights to sum to exactly 1.
    pub fn new_renormalized<L: Into<String>>(labels: Vec<L>, probs: Vec<f64>) -> Result<Self> {
        Self::build(labels, probs, true)
    }

    /// Convenience constructor labeling entries "0", "1", ….
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let labels: Vec<String> = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(labels, probs)
    }

    /// Uniform distribution over `n` symbols labeled "0" … "n-1".
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPmf(
                "uniform PMF needs at least one symbol".into(),
            ));
        }
        Self::from_probs(vec![1.0 / n as f64; n])
    }

    fn build<L: Into<String>>(labels: Vec<L>, probs: Vec<f64>, renormalize: bool) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != probs.len() {
            return Err(Error::InvalidPmf(format!(
                "{} labels but {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        check_unique(&labels, "PMF")?;
        check_weights(&probs, "PMF")?;
        let sum: f64 = probs.iter().sum();
        let probs = if renormalize {
            if sum <= 0.0 {
                return Err(Error::InvalidPmf(
                    "cannot renormalize zero total mass".into(),
                ));
            }
            probs.iter().map(|p| p / sum).collect()
        } else {
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidPmf(format!(
                    "probabilities sum to {sum}, expected 1 within {NORMALIZATION_TOL:e}"
                )));
            }
            probs
        };
        Ok(DiscretePmf { labels, probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A joint distribution over two labeled finite alphabets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    probs: Vec<Vec<f64>>,
}

impl JointPmf {
    pub fn new<L: Into<String>>(
        row_labels: Vec<L>,
        col_labels: Vec<L>,
        probs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let row_labels: Vec<String> = row_labels.into_iter().map(Into::into).collect();
        let col_labels: Vec<String> = col_labels.into_iter().map(Into::into).collect();
        check_unique(&row_labels, "joint rows").map_err(|e| Error::InvalidJoint(e.to_string()))?;
        check_unique(&col_labels, "joint columns")
            .map_err(|e| Error::InvalidJoint(e.to_string()))?;
        if probs.len() != row_labels.len() {
            return Err(Error::InvalidJoint(format!(
                "{} rows but {} row labels",
                probs.len(),
                row_labels.len()
            )));
        }
        let mut total = 0.0;
        for (i, row) in probs.iter().enumerate() {
            if row.len() != col_labels.len() {
                return Err(Error::InvalidJoint(format!(
                    "row {i} has {} entries but there are {} column labels",
                    row.len(),
                    col_labels.len()
                )));
            }
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::InvalidJoint(format!(
                        "entry ({i}, {j}) is {p}, expected >= 0"
                    )));
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidJoint(format!(
                "entries sum to {total}, expected 1 within {NORMALIZATION_TOL:e}"
            )));
        }
        Ok(JointPmf {
            row_labels,
            col_labels,
            probs,
        })
    }

    /// Joint induced by an input PMF and a channel: p(x, y) = p(x)·p(y|x).
    pub fn from_input_and_channel(input: &DiscretePmf, channel: &ChannelMatrix) -> Result<Self> {
        if input.labels() != channel.input_labels() {
            return Err(Error::AlphabetMismatch(
                "input PMF labels differ from channel input labels".into(),
            ));
        }
        let probs = input
            .probs()
            .iter()
            .zip(channel.rows())
            .map(|(&px, row)| row.iter().map(|&pyx| px * pyx).collect())
            .collect();
        JointPmf::new(
            channel.input_labels().to_vec(),
            channel.output_labels().to_vec(),
            probs,
        )
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    /// Marginal over the row variable.
    pub fn row_marginal(&self) -> DiscretePmf {
        let probs: Vec<f64> = self.probs.iter().map(|row| row.iter().sum()).collect();
        DiscretePmf {
            labels: self.row_labels.clone(),
            probs,
        }
    }

    /// Marginal over the column variable.
    pub fn col_marginal(&self) -> DiscretePmf {
        let mut probs = vec![0.0; self.col_labels.len()];
        for row in &self.probs {
            for (j, &p) in row.iter().enumerate() {
                probs[j] += p;
            }
        }
        DiscretePmf {
            labels: self.col_labels.clone(),
            probs,
        }
    }

    /// The same joint with the two variables swapped.
    pub fn transposed(&self) -> JointPmf {
        let mut probs = vec![vec![0.0; self.row_labels.len()]; self.col_labels.len()];
        for (i, row) in self.probs.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                probs[j][i] = p;
            }
        }
        JointPmf {
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            probs,
        }
    }
}

/// Conditional distributions p(y|x), one row per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix {
    input_labels: Vec<String>,
    output_labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl ChannelMatrix {
    pub fn new<L: Into<String>>(
        input_labels: Vec<L>,
        output_labels: Vec<L>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let input_labels: Vec<String> = input_labels.into_iter().map(Into::into).collect();
        let output_labels: Vec<String> = output_labels.into_iter().map(Into::into).collect();
        check_unique(&input_labels, "channel inputs")
            .map_err(|e| Error::InvalidChannel(e.to_string()))?;
        check_unique(&output_labels, "channel outputs")
            .map_err(|e| Error::InvalidChannel(e.to_string()))?;
        if rows.len() != input_labels.len() {
            return Err(Error::InvalidChannel(format!(
                "{} rows but {} input labels",
                rows.len(),
                input_labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != output_labels.len() {
                return Err(Error::InvalidChannel(format!(
                    "row {i} has {} entries but there are {} output labels",
                    row.len(),
                    output_labels.len()
                )));
            }
            check_weights(row, &format!("channel row {i}"))
                .map_err(|e| Error::InvalidChannel(e.to_string()))?;
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidChannel(format!(
                    "row {i} sums to {sum}, expected 1 within {NORMALIZATION_TOL:e}"
                )));
            }
        }
        Ok(ChannelMatrix {
            input_labels,
            output_labels,
            rows,
        })
    }

    /// The binary symmetric channel with flip probability `p`.
    pub fn binary_symmetric(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("flip probability must be in [0,1], got {p}"),
            });
        }
        ChannelMatrix::new(
            vec!["0", "1"],
            vec!["0", "1"],
            vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
        )
    }

    pub fn n_inputs(&self) -> usize {
        self.input_labels.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_labels.len()
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Per-symbol code lengths in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeLengthAssignment {
    labels: Vec<String>,
    lengths: Vec<u32>,
}

impl CodeLengthAssignment {
    pub fn new<L: Into<String>>(labels: Vec<L>, lengths: Vec<u32>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != lengths.len() {
            return Err(Error::InvalidPmf(format!(
                "{} labels but {} lengths",
                labels.len(),
                lengths.len()
            )));
        }
        check_unique(&labels, "code length assignment")?;
        if let Some(i) = lengths.iter().position(|&l| l == 0) {
            return Err(Error::InvalidParameter {
                name: "lengths",
                reason: format!("length of symbol {i} must be strictly positive"),
            });
        }
        Ok(CodeLengthAssignment { labels, lengths })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    /// Kraft sum Σ 2^(−length). At most 1 for any prefix-decodable code.
    pub fn kraft_sum(&self) -> f64 {
        self.lengths
            .iter()
            .map(|&l| (2.0f64).powi(-(l as i32)))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_rejects_negative_and_unnormalized() {
        assert!(DiscretePmf::from_probs(vec![0.5, -0.5, 1.0]).is_err());
        assert!(DiscretePmf::from_probs(vec![0.5, 0.6]).is_err());
        assert!(DiscretePmf::from_probs(vec![]).is_err());
        assert!(DiscretePmf::new(vec!["a", "a"], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn pmf_renormalizes_on_request() {
        let p = DiscretePmf::new_renormalized(vec!["a", "b"], vec![2.0, 2.0]).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn joint_marginals_and_transpose() {
        let j = JointPmf::new(
            vec!["x0", "x1"],
            vec!["y0", "y1", "y2"],
            vec![vec![0.1, 0.2, 0.3], vec![0.2, 0.1, 0.1]],
        )
        .unwrap();
        let row = j.row_marginal();
        assert!((row.probs()[0] - 0.6).abs() < 1e-15);
        assert!((row.probs()[1] - 0.4).abs() < 1e-15);
        let col = j.col_marginal();
        assert!((col.probs()[0] - 0.3).abs() < 1e-15);
        let t = j.transposed();
        assert_eq!(t.row_labels(), j.col_labels());
        assert!((t.probs()[2][0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn channel_rows_must_be_pmfs() {
        assert!(ChannelMatrix::new(vec!["a"], vec!["x", "y"], vec![vec![0.7, 0.7]],).is_err());
        let bsc = ChannelMatrix::binary_symmetric(0.1).unwrap();
        assert_eq!(bsc.rows()[0], vec![0.9, 0.1]);
    }

    #[test]
    fn kraft_sum_of_block_scheme() {
        // 15 symbols at 4 bits plus 241 at 12 bits
        let labels: Vec<String> = (0..256).map(|i| format!("m{i}")).collect();
        let lengths: Vec<u32> = (0..256).map(|i| if i < 15 { 4 } else { 12 }).collect();
        let a = CodeLengthAssignment::new(labels, lengths).unwrap();
        let expected = 15.0 / 16.0 + 241.0 / 4096.0;
        assert!((a.kraft_sum() - expected).abs() < 1e-15);
        assert!(a.kraft_sum() <= 1.0);
    }

    #[test]
    fn code_lengths_must_be_positive() {
        assert!(CodeLengthAssignment::new(vec!["a"], vec![0]).is_err());
    }
}
