//! Claim specifications and their evaluation along scenario paths.

use std::collections::BTreeMap;

use super::{Lattice, ModelError};

/// A contingent claim.  Vanilla kinds read only the terminal price,
/// `RunningMin` reads the whole path, and `Table` pins an explicit value to
/// every terminal node of a tree lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum PayoffSpec {
    /// `(S_T - strike)^+` (dimension 1).
    Call { strike: f64 },
    /// `(strike - S_T)^+` (dimension 1).
    Put { strike: f64 },
    /// `|S_T - strike|` (dimension 1).
    Straddle { strike: f64 },
    /// `weights . S_T + offset`.
    Linear { weights: Vec<f64>, offset: f64 },
    /// Smallest terminal price coordinate.
    MinCoord,
    /// Largest terminal price coordinate.
    MaxCoord,
    /// Minimum of the first price coordinate over the whole path, including
    /// the root (dimension 1).
    RunningMin,
    /// Explicit value per terminal node id.
    Table(BTreeMap<String, f64>),
}

impl PayoffSpec {
    /// Payoffs that depend on the terminal price vector alone.  Only these
    /// survive recombination (merged nodes must agree on the payoff).
    pub fn is_terminal_price_function(&self) -> bool {
        matches!(
            self,
            PayoffSpec::Call { .. }
                | PayoffSpec::Put { .. }
                | PayoffSpec::Straddle { .. }
                | PayoffSpec::Linear { .. }
                | PayoffSpec::MinCoord
                | PayoffSpec::MaxCoord
        )
    }

    /// Static consistency against a lattice: dimension requirements and table
    /// coverage of every terminal node.
    pub fn validate(&self, lattice: &Lattice) -> Result<(), ModelError> {
        let need_dim_one = |kind: &str| -> Result<(), ModelError> {
            if lattice.dim() != 1 {
                Err(ModelError::PayoffDimension {
                    kind: kind.into(),
                    expected: 1,
                    got: lattice.dim(),
                })
            } else {
                Ok(())
            }
        };
        match self {
            PayoffSpec::Call { .. } => need_dim_one("call"),
            PayoffSpec::Put { .. } => need_dim_one("put"),
            PayoffSpec::Straddle { .. } => need_dim_one("straddle"),
            PayoffSpec::RunningMin => need_dim_one("running_min"),
            PayoffSpec::Linear { weights, .. } => {
                if weights.len() != lattice.dim() {
                    Err(ModelError::PayoffDimension {
                        kind: "linear".into(),
                        expected: lattice.dim(),
                        got: weights.len(),
                    })
                } else {
                    Ok(())
                }
            }
            PayoffSpec::MinCoord | PayoffSpec::MaxCoord => Ok(()),
            PayoffSpec::Table(values) => {
                for &leaf in lattice.leaves() {
                    let id = &lattice.node(leaf).id;
                    if !values.contains_key(id) {
                        return Err(ModelError::PayoffMissing { leaf: id.clone() });
                    }
                }
                for id in values.keys() {
                    match lattice.index_of(id) {
                        Some(ix) if lattice.is_terminal(ix) => {}
                        _ => return Err(ModelError::PayoffUnknownLeaf { id: clone_id(id) }),
                    }
                }
                Ok(())
            }
        }
    }

    /// Evaluate along a root-to-leaf node index path.
    pub fn evaluate(&self, lattice: &Lattice, path: &[usize]) -> Result<f64, ModelError> {
        let leaf = *path.last().expect("non-empty path");
        let terminal = &lattice.node(leaf).price;
        let v = match self {
            PayoffSpec::Call { strike } => (terminal[0] - strike).max(0.0),
            PayoffSpec::Put { strike } => (strike - terminal[0]).max(0.0),
            PayoffSpec::Straddle { strike } => (terminal[0] - strike).abs(),
            PayoffSpec::Linear { weights, offset } => {
                weights
                    .iter()
                    .zip(terminal.iter())
                    .map(|(w, s)| w * s)
                    .sum::<f64>()
                    + offset
            }
            PayoffSpec::MinCoord => terminal.iter().cloned().fold(f64::INFINITY, f64::min),
            PayoffSpec::MaxCoord => terminal.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            PayoffSpec::RunningMin => lattice
                .path_prices(path)
                .map(|p| p[0])
                .fold(f64::INFINITY, f64::min),
            PayoffSpec::Table(values) => {
                let id = &lattice.node(leaf).id;
                *values
                    .get(id)
                    .ok_or_else(|| ModelError::PayoffMissing { leaf: id.clone() })?
            }
        };
        Ok(v)
    }
}

fn clone_id(id: &str) -> String {
    id.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lattice::RawNode;

    fn chain_lattice(prices: &[f64]) -> Lattice {
        // single path lattice with the given prices over time
        let t_max = prices.len() - 1;
        let raw: Vec<RawNode> = prices
            .iter()
            .enumerate()
            .map(|(t, &p)| RawNode {
                id: format!("n{t}"),
                time: t as u32,
                price: vec![p],
                successors: if t < t_max {
                    vec![format!("n{}", t + 1)]
                } else {
                    vec![]
                },
            })
            .collect();
        Lattice::assemble(t_max as u32, 1, &[prices[0]], raw, false).unwrap()
    }

    #[test]
    fn running_min_includes_the_root() {
        let lat = chain_lattice(&[2.0, 4.0, 8.0]);
        let path = lat.enumerate_paths().remove(0);
        let v = PayoffSpec::RunningMin.evaluate(&lat, &path).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn vanilla_payoffs() {
        let lat = chain_lattice(&[100.0, 100.0, 115.0]);
        let path = lat.enumerate_paths().remove(0);
        let c = PayoffSpec::Call { strike: 100.0 }
            .evaluate(&lat, &path)
            .unwrap();
        let p = PayoffSpec::Put { strike: 100.0 }
            .evaluate(&lat, &path)
            .unwrap();
        let s = PayoffSpec::Straddle { strike: 100.0 }
            .evaluate(&lat, &path)
            .unwrap();
        assert_eq!((c, p, s), (15.0, 0.0, 15.0));
    }

    #[test]
    fn table_must_cover_all_leaves() {
        let lat = chain_lattice(&[1.0, 2.0]);
        let table = PayoffSpec::Table(BTreeMap::new());
        let err = table.validate(&lat).unwrap_err();
        assert!(matches!(err, ModelError::PayoffMissing { .. }));
    }
}
