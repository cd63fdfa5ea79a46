//! Prior families: per-node finite lists of probability vectors over the
//! node's successors, feeding the robust utility layer.
//!
//! A list at a node generates its uncertainty set as the convex hull of its
//! entries; the optimiser minimises over that hull, so listing the extreme
//! points is enough.

use std::collections::BTreeMap;

use super::{Lattice, ModelError, PROB_TOL};

/// Probability vectors per node, aligned with the node's successor order.
/// Terminal nodes carry an empty list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriorFamily {
    by_node: Vec<Vec<Vec<f64>>>,
}

impl PriorFamily {
    /// Validate a per-node-id map against a lattice.  Every non-terminal node
    /// must receive a non-empty list; every vector must match the successor
    /// count, be entrywise non-negative and sum to one within `1e-12`.
    pub fn from_map(
        lattice: &Lattice,
        map: &BTreeMap<String, Vec<Vec<f64>>>,
    ) -> Result<Self, ModelError> {
        let mut by_node = vec![Vec::new(); lattice.len()];
        for (id, list) in map {
            let ix = match lattice.index_of(id) {
                Some(ix) if !lattice.is_terminal(ix) => ix,
                _ => return Err(ModelError::PriorBadNode { node: id.clone() }),
            };
            if list.is_empty() {
                return Err(ModelError::PriorEmpty { node: id.clone() });
            }
            let k = lattice.node(ix).successors.len();
            for p in list {
                if p.len() != k {
                    return Err(ModelError::PriorLength {
                        node: id.clone(),
                        got: p.len(),
                        expected: k,
                    });
                }
                let mut mass = 0.0;
                for &w in p {
                    if !w.is_finite() || w < 0.0 {
                        return Err(ModelError::NegativeProbability { node: id.clone() });
                    }
                    mass += w;
                }
                if (mass - 1.0).abs() > PROB_TOL {
                    return Err(ModelError::ProbabilityMass {
                        mass,
                        node: id.clone(),
                    });
                }
            }
            by_node[ix] = list.clone();
        }
        for ix in 0..lattice.len() {
            if !lattice.is_terminal(ix) && by_node[ix].is_empty() {
                return Err(ModelError::PriorMissing {
                    node: lattice.node(ix).id.clone(),
                });
            }
        }
        Ok(PriorFamily { by_node })
    }

    /// Attach the same list of vectors to every non-terminal node.  Vector
    /// lengths must equal each node's successor count.
    pub fn uniform(lattice: &Lattice, list: &[Vec<f64>]) -> Result<Self, ModelError> {
        let mut map = BTreeMap::new();
        for ix in 0..lattice.len() {
            if !lattice.is_terminal(ix) {
                map.insert(lattice.node(ix).id.clone(), list.to_vec());
            }
        }
        Self::from_map(lattice, &map)
    }

    /// Build directly from per-index lists (already aligned with successor
    /// order); used when deriving one family from another.
    pub fn from_lists(lists: Vec<Vec<Vec<f64>>>) -> Self {
        PriorFamily { by_node: lists }
    }

    /// Prior vectors at a node (empty for terminal nodes).
    pub fn at(&self, ix: usize) -> &[Vec<f64>] {
        &self.by_node[ix]
    }

    pub fn to_map(&self, lattice: &Lattice) -> BTreeMap<String, Vec<Vec<f64>>> {
        let mut map = BTreeMap::new();
        for (ix, list) in self.by_node.iter().enumerate() {
            if !list.is_empty() {
                map.insert(lattice.node(ix).id.clone(), list.clone());
            }
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lattice::RawNode;

    fn one_step() -> Lattice {
        let raw = vec![
            RawNode {
                id: "r".into(),
                time: 0,
                price: vec![1.0],
                successors: vec!["a".into(), "b".into()],
            },
            RawNode {
                id: "a".into(),
                time: 1,
                price: vec![2.0],
                successors: vec![],
            },
            RawNode {
                id: "b".into(),
                time: 1,
                price: vec![0.5],
                successors: vec![],
            },
        ];
        Lattice::assemble(1, 1, &[1.0], raw, false).unwrap()
    }

    #[test]
    fn accepts_valid_family() {
        let lat = one_step();
        let mut map = BTreeMap::new();
        map.insert("r".to_string(), vec![vec![0.5, 0.5], vec![0.9, 0.1]]);
        let fam = PriorFamily::from_map(&lat, &map).unwrap();
        assert_eq!(fam.at(lat.root()).len(), 2);
    }

    #[test]
    fn rejects_bad_mass_with_descriptive_message() {
        let lat = one_step();
        let mut map = BTreeMap::new();
        map.insert("r".to_string(), vec![vec![0.6, 0.5]]);
        let err = PriorFamily::from_map(&lat, &map).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("probability mass 1.1"), "{msg}");
        assert!(msg.contains("≠ 1"), "{msg}");
    }

    #[test]
    fn rejects_missing_node_coverage() {
        let lat = one_step();
        let err = PriorFamily::from_map(&lat, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, ModelError::PriorMissing { .. }));
    }

    #[test]
    fn rejects_terminal_attachment() {
        let lat = one_step();
        let mut map = BTreeMap::new();
        map.insert("r".to_string(), vec![vec![0.5, 0.5]]);
        map.insert("a".to_string(), vec![vec![1.0]]);
        let err = PriorFamily::from_map(&lat, &map).unwrap_err();
        assert!(matches!(err, ModelError::PriorBadNode { .. }));
    }
}
