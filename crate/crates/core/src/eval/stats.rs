//! McNemar's paired test and the chi-square tail it needs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Outcome of a continuity-corrected McNemar test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    /// Queries system A got right and B got wrong.
    pub b: usize,
    /// Queries system A got wrong and B got right.
    pub c: usize,
    pub statistic: f64,
    pub p_value: f64,
}

impl McNemar {
    pub fn from_discordant(b: usize, c: usize) -> Self {
        if b + c == 0 {
            return McNemar {
                b,
                c,
                statistic: 0.0,
                p_value: 1.0,
            };
        }
        let diff = (b as f64 - c as f64).abs() - 1.0;
        let statistic = diff.max(0.0).powi(2) / (b + c) as f64;
        McNemar {
            b,
            c,
            statistic,
            p_value: chi_square_sf(statistic, 1.0),
        }
    }

    pub fn significant_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Paired test over per-query hit vectors in the same query order.
pub fn mcnemar(hits_a: &[bool], hits_b: &[bool]) -> Result<McNemar> {
    if hits_a.len() != hits_b.len() {
        return Err(Error::LengthMismatch(hits_a.len(), hits_b.len()));
    }
    let b = hits_a.iter().zip(hits_b).filter(|(&a, &b)| a && !b).count();
    let c = hits_a.iter().zip(hits_b).filter(|(&a, &b)| !a && b).count();
    Ok(McNemar::from_discordant(b, c))
}

/// `P(X > x)` for a chi-square variable with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("df > 0").sf(x)
}
