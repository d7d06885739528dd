//! Histogram distance measures.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistanceError {
    #[error("descriptor lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DistanceKind {
    Euclidean,
    Cosine,
    L1,
    D1,
    #[default]
    ChiSquare,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 5] = [
        DistanceKind::Euclidean,
        DistanceKind::Cosine,
        DistanceKind::L1,
        DistanceKind::D1,
        DistanceKind::ChiSquare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::Cosine => "cosine",
            DistanceKind::L1 => "l1",
            DistanceKind::D1 => "d1",
            DistanceKind::ChiSquare => "chisq",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(DistanceKind::Euclidean),
            "cosine" => Ok(DistanceKind::Cosine),
            "l1" => Ok(DistanceKind::L1),
            "d1" => Ok(DistanceKind::D1),
            "chisq" | "chi-square" | "chisquare" => Ok(DistanceKind::ChiSquare),
            other => Err(format!(
                "unknown distance `{other}` (expected euclidean|cosine|l1|d1|chisq)"
            )),
        }
    }
}

/// Distance between two descriptors of equal length.
///
/// Chi-square terms whose denominator `q_i + t_i` is zero contribute nothing.
/// Cosine distance is `1 - cos(q, t)`, floored at zero.
pub fn distance(q: &[f64], t: &[f64], kind: DistanceKind) -> Result<f64, DistanceError> {
    if q.len() != t.len() {
        return Err(DistanceError::LengthMismatch {
            left: q.len(),
            right: t.len(),
        });
    }
    let pairs = q.iter().zip(t);
    let d = match kind {
        DistanceKind::Euclidean => pairs.map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        DistanceKind::L1 => pairs.map(|(a, b)| (a - b).abs()).sum(),
        DistanceKind::D1 => pairs.map(|(a, b)| (a - b).abs() / (1.0 + (a + b))).sum(),
        DistanceKind::ChiSquare => pairs
            .map(|(a, b)| {
                let s = a + b;
                if s == 0.0 {
                    0.0
                } else {
                    (a - b) * (a - b) / s
                }
            })
            .sum(),
        DistanceKind::Cosine => {
            let (mut dot, mut qq, mut tt) = (0.0, 0.0, 0.0);
            for (a, b) in pairs {
                dot += a * b;
                qq += a * a;
                tt += b * b;
            }
            if qq == 0.0 || tt == 0.0 {
                return Err(DistanceError::ZeroVector);
            }
            (1.0 - dot / (qq.sqrt() * tt.sqrt())).max(0.0)
        }
    };
    Ok(d)
}
