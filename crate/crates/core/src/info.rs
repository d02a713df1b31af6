//! Shannon-theory primitives on finite alphabets, all in bits.

use crate::error::{Error, Result};
use crate::pmf::{ChannelMatrix, CodeLengthAssignment, DiscretePmf, JointPmf};

const LN_2: f64 = std::f64::consts::LN_2;

/// Entropy H(X) = −Σ p log2 p, skipping zero-probability terms.
pub fn entropy(p: &DiscretePmf) -> f64 {
    entropy_of_weights(p.probs())
}

pub(crate) fn entropy_of_weights(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
        / LN_2
}

/// Conditional entropy H(Y|X) of a joint over (X, Y).
///
/// Rows with zero marginal probability contribute nothing.
pub fn conditional_entropy(joint: &JointPmf) -> f64 {
    let mut acc = 0.0;
    for row in joint.probs() {
        let px: f64 = row.iter().sum();
        if px <= 0.0 {
            continue;
        }
        for &pxy in row {
            if pxy > 0.0 {
                acc -= pxy * (pxy / px).ln();
            }
        }
    }
    acc / LN_2
}

/// Kullback–Leibler divergence D(p ‖ q) = Σ p log2(p/q).
///
/// Requires identical alphabets. When q puts no mass where p does, the
/// divergence is genuinely infinite and `f64::INFINITY` is returned; that is
/// a meaningful value, not a failure.
pub fn kl_divergence(p: &DiscretePmf, q: &DiscretePmf) -> Result<f64> {
    if p.labels() != q.labels() {
        return Err(Error::AlphabetMismatch(
            "KL divergence needs both distributions over the same alphabet".into(),
        ));
    }
    let mut acc = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += pi * (pi / qi).ln();
        }
    }
    Ok((acc / LN_2).max(0.0))
}

/// Mutual information I(X;Y) = D(p(x,y) ‖ p(x)p(y)).
pub fn mutual_information(joint: &JointPmf) -> f64 {
    let px = joint.row_marginal();
    let py = joint.col_marginal();
    let mut acc = 0.0;
    for (i, row) in joint.probs().iter().enumerate() {
        for (j, &pxy) in row.iter().enumerate() {
            if pxy > 0.0 {
                acc += pxy * (pxy / (px.probs()[i] * py.probs()[j])).ln();
            }
        }
    }
    (acc / LN_2).max(0.0)
}

/// Mutual information of a channel driven by a given input distribution.
pub fn channel_mutual_information(input: &DiscretePmf, channel: &ChannelMatrix) -> Result<f64> {
    if input.labels() != channel.input_labels() {
        return Err(Error::AlphabetMismatch(
            "input PMF labels differ from channel input labels".into(),
        ));
    }
    Ok(channel_mi_from_weights(input.probs(), channel.rows()))
}

pub(crate) fn channel_mi_from_weights(input: &[f64], rows: &[Vec<f64>]) -> f64 {
    let n_out = rows.first().map_or(0, Vec::len);
    let mut marginal = vec![0.0; n_out];
    for (&px, row) in input.iter().zip(rows) {
        for (q, &pyx) in marginal.iter_mut().zip(row) {
            *q += px * pyx;
        }
    }
    let mut acc = 0.0;
    for (&px, row) in input.iter().zip(rows) {
        if px <= 0.0 {
            continue;
        }
        for (&q, &pyx) in marginal.iter().zip(row) {
            if pyx > 0.0 {
                acc += px * pyx * (pyx / q).ln();
            }
        }
    }
    (acc / LN_2).max(0.0)
}

/// Binary entropy H(θ) = −θ log2 θ − (1−θ) log2(1−θ).
pub fn binary_entropy(theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter {
            name: "theta",
            reason: format!("probability must be in [0,1], got {theta}"),
        });
    }
    let mut acc = 0.0;
    if theta > 0.0 {
        acc -= theta * theta.ln();
    }
    if theta < 1.0 {
        acc -= (1.0 - theta) * (1.0 - theta).ln();
    }
    Ok(acc / LN_2)
}

/// Capacity of the binary symmetric channel: C = 1 − H(p).
///
/// Note the complement: H(0.1) ≈ 0.469 while the capacity at p = 0.1 is
/// 1 − H(0.1) ≈ 0.531. The two are easy to swap by accident.
pub fn bsc_capacity(p: f64) -> Result<f64> {
    Ok(1.0 - binary_entropy(p)?)
}

/// Mutual information of the binary symmetric channel with input P(X=1) = q
/// and flip probability p: I(X;Y) = H(q(1−p) + (1−q)p) − H(p).
///
/// The output marginal probability of a one is q(1−p) + (1−q)p, so the first
/// term is the output entropy; the simpler-looking H(q) − H(p) is not the
/// mutual information except at q = 1/2, where both equal the capacity.
pub fn bsc_mutual_information(q: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("input probability must be in [0,1], got {q}"),
        });
    }
    let output_one = q * (1.0 - p) + (1.0 - q) * p;
    Ok((binary_entropy(output_one)? - binary_entropy(p)?).max(0.0))
}

/// Average code length Σ p_i · length_i in bits per symbol.
pub fn expected_code_length(p: &DiscretePmf, lengths: &CodeLengthAssignment) -> Result<f64> {
    if p.labels() != lengths.labels() {
        return Err(Error::AlphabetMismatch(
            "code length assignment labels differ from PMF labels".into(),
        ));
    }
    Ok(p.probs()
        .iter()
        .zip(lengths.lengths())
        .map(|(&pi, &li)| pi * li as f64)
        .sum())
}

fn parse_bits(block: &str, expected: usize) -> Result<Vec<bool>> {
    if block.len() != expected {
        return Err(Error::InvalidParameter {
            name: "block",
            reason: format!(
                "expected {expected} bits, got {:?} ({} chars)",
                block,
                block.len()
            ),
        });
    }
    block
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::InvalidParameter {
                name: "block",
                reason: format!("expected '0' or '1', got {other:?}"),
            }),
        })
        .collect()
}

/// Appends the parity bit to a 2-bit block so the total number of ones is even.
pub fn parity_extend(block: &str) -> Result<String> {
    let bits = parse_bits(block, 2)?;
    let parity = bits[0] ^ bits[1];
    Ok(format!("{block}{}", if parity { '1' } else { '0' }))
}

/// True when a 3-bit block is not one of the four even-parity codewords.
pub fn parity_detect(block: &str) -> Result<bool> {
    let bits = parse_bits(block, 3)?;
    Ok(bits.iter().filter(|&&b| b).count() % 2 == 1)
}
