//! Scenario lattice storage, validation and traversal.

use std::collections::BTreeMap;

use super::ModelError;

/// One market scenario node.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub time: u32,
    pub price: Vec<f64>,
    /// Indices into [`Lattice::nodes`].
    pub successors: Vec<usize>,
}

/// Validated scenario lattice.  Nodes are stored root-first, grouped by time;
/// all traversal orders derived from the storage order are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    nodes: Vec<Node>,
    horizon: u32,
    dim: usize,
    root: usize,
    slices: Vec<Vec<usize>>,
    preds: Vec<Vec<usize>>,
    recombined: bool,
    ids: BTreeMap<String, usize>,
}

/// Construction input prior to index resolution.
#[derive(Debug, Clone)]
pub struct RawNode {
    pub id: String,
    pub time: u32,
    pub price: Vec<f64>,
    pub successors: Vec<String>,
}

impl Lattice {
    /// Resolve ids, check every structural invariant and assemble the lattice.
    /// `recombined` relaxes the unique-predecessor (tree) requirement to
    /// "at least one predecessor, no cycles" for merged lattices.
    pub fn assemble(
        horizon: u32,
        dim: usize,
        root_price: &[f64],
        raw: Vec<RawNode>,
        recombined: bool,
    ) -> Result<Self, ModelError> {
        if horizon < 1 {
            return Err(ModelError::HorizonZero);
        }
        if dim < 1 {
            return Err(ModelError::DimensionZero);
        }

        let mut ids = BTreeMap::new();
        for (i, n) in raw.iter().enumerate() {
            if ids.insert(n.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateId { id: n.id.clone() });
            }
        }

        for n in &raw {
            if n.price.len() != dim {
                return Err(ModelError::PriceDimension {
                    node: n.id.clone(),
                    got: n.price.len(),
                    expected: dim,
                });
            }
            for &p in &n.price {
                if !p.is_finite() {
                    return Err(ModelError::NonFinitePrice { node: n.id.clone() });
                }
                if p < 0.0 {
                    return Err(ModelError::NegativePrice { node: n.id.clone() });
                }
            }
            if n.time > horizon {
                return Err(ModelError::BeyondHorizon {
                    node: n.id.clone(),
                    time: n.time,
                    horizon,
                });
            }
            if n.time == horizon && !n.successors.is_empty() {
                return Err(ModelError::TerminalWithSuccessors { node: n.id.clone() });
            }
            if n.time < horizon && n.successors.is_empty() {
                return Err(ModelError::NoSuccessors { node: n.id.clone() });
            }
        }

        let roots: Vec<usize> = raw
            .iter()
            .enumerate()
            .filter(|(_, n)| n.time == 0)
            .map(|(i, _)| i)
            .collect();
        if roots.len() != 1 {
            return Err(ModelError::RootCount { count: roots.len() });
        }
        let root_raw = roots[0];
        if !super::prices_equal(&raw[root_raw].price, root_price) {
            return Err(ModelError::RootPriceMismatch);
        }

        // Resolve successor ids and count predecessors.
        let mut succ_ix: Vec<Vec<usize>> = Vec::with_capacity(raw.len());
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); raw.len()];
        for (i, n) in raw.iter().enumerate() {
            let mut list = Vec::with_capacity(n.successors.len());
            for sid in &n.successors {
                let &j = ids.get(sid).ok_or_else(|| ModelError::DanglingSuccessor {
                    node: n.id.clone(),
                    succ: sid.clone(),
                })?;
                if raw[j].time != n.time + 1 {
                    return Err(ModelError::TimeInconsistent {
                        node: n.id.clone(),
                        succ: sid.clone(),
                    });
                }
                list.push(j);
                preds[j].push(i);
            }
            succ_ix.push(list);
        }

        for (i, n) in raw.iter().enumerate() {
            if i == root_raw {
                continue;
            }
            match preds[i].len() {
                0 => return Err(ModelError::Unreachable { node: n.id.clone() }),
                1 => {}
                k if !recombined => {
                    return Err(ModelError::MultiplePredecessors {
                        node: n.id.clone(),
                        count: k,
                    })
                }
                _ => {}
            }
        }

        // Reorder nodes by (time, original position) so slices are contiguous
        // and iteration order is stable.
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by_key(|&i| (raw[i].time, i));
        let mut new_ix = vec![0usize; raw.len()];
        for (pos, &old) in order.iter().enumerate() {
            new_ix[old] = pos;
        }

        let mut nodes = Vec::with_capacity(raw.len());
        for &old in &order {
            nodes.push(Node {
                id: raw[old].id.clone(),
                time: raw[old].time,
                price: raw[old].price.clone(),
                successors: succ_ix[old].iter().map(|&j| new_ix[j]).collect(),
            });
        }
        let mut slices: Vec<Vec<usize>> = vec![Vec::new(); horizon as usize + 1];
        for (i, n) in nodes.iter().enumerate() {
            slices[n.time as usize].push(i);
        }
        for (t, s) in slices.iter().enumerate() {
            if s.is_empty() {
                return Err(ModelError::Schema(format!("no nodes at time {t}")));
            }
        }
        let mut preds_new: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            for &j in &n.successors {
                preds_new[j].push(i);
            }
        }
        let ids = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();

        Ok(Lattice {
            nodes,
            horizon,
            dim,
            root: new_ix[root_raw],
            slices,
            preds: preds_new,
            recombined,
            ids,
        })
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, ix: usize) -> &Node {
        &self.nodes[ix]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.get(id).copied()
    }

    /// Node indices at time `t`, in storage order.
    pub fn at_time(&self, t: u32) -> &[usize] {
        &self.slices[t as usize]
    }

    pub fn leaves(&self) -> &[usize] {
        &self.slices[self.horizon as usize]
    }

    pub fn is_terminal(&self, ix: usize) -> bool {
        self.nodes[ix].time == self.horizon
    }

    /// Predecessors (exactly one per non-root node unless recombined).
    pub fn predecessors(&self, ix: usize) -> &[usize] {
        &self.preds[ix]
    }

    pub fn parent(&self, ix: usize) -> Option<usize> {
        self.preds[ix].first().copied()
    }

    pub fn is_tree(&self) -> bool {
        !self.recombined
    }

    /// Price increments `S(succ) - S(node)` per successor, in successor order.
    pub fn increments(&self, ix: usize) -> Vec<Vec<f64>> {
        let s = &self.nodes[ix].price;
        self.nodes[ix]
            .successors
            .iter()
            .map(|&j| {
                self.nodes[j]
                    .price
                    .iter()
                    .zip(s.iter())
                    .map(|(y, x)| y - x)
                    .collect()
            })
            .collect()
    }

    /// All root-to-leaf node index paths, depth first following successor
    /// order.  On a tree every leaf appears in exactly one path; a recombined
    /// lattice enumerates every distinct walk.
    pub fn enumerate_paths(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        self.walk(&mut stack, &mut out);
        out
    }

    fn walk(&self, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *stack.last().expect("non-empty walk");
        if self.is_terminal(last) {
            out.push(stack.clone());
            return;
        }
        for &j in &self.nodes[last].successors {
            stack.push(j);
            self.walk(stack, out);
            stack.pop();
        }
    }

    /// Prices along a node index path.
    pub fn path_prices<'a>(&'a self, path: &'a [usize]) -> impl Iterator<Item = &'a [f64]> {
        path.iter().map(move |&ix| self.nodes[ix].price.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(id: &str, time: u32, price: f64, succ: &[&str]) -> RawNode {
        RawNode {
            id: id.into(),
            time,
            price: vec![price],
            successors: succ.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn binary_two_period_paths() {
        let nodes = vec![
            raw("r", 0, 100.0, &["a", "b"]),
            raw("a", 1, 120.0, &["aa", "ab"]),
            raw("b", 1, 80.0, &["ba", "bb"]),
            raw("aa", 2, 144.0, &[]),
            raw("ab", 2, 96.0, &[]),
            raw("ba", 2, 96.1, &[]),
            raw("bb", 2, 64.0, &[]),
        ];
        let lat = Lattice::assemble(2, 1, &[100.0], nodes, false).unwrap();
        let paths = lat.enumerate_paths();
        assert_eq!(paths.len(), 4);
        for p in &paths {
            assert_eq!(p.len(), 3);
            assert_eq!(p[0], lat.root());
        }
        assert_eq!(lat.at_time(1).len(), 2);
        assert_eq!(lat.leaves().len(), 4);
    }

    #[test]
    fn rejects_dangling_successor() {
        let nodes = vec![raw("r", 0, 1.0, &["ghost"])];
        let err = Lattice::assemble(1, 1, &[1.0], nodes, false).unwrap_err();
        assert!(matches!(err, ModelError::DanglingSuccessor { .. }));
    }

    #[test]
    fn rejects_negative_price() {
        let nodes = vec![raw("r", 0, 1.0, &["a"]), raw("a", 1, -0.5, &[])];
        let err = Lattice::assemble(1, 1, &[1.0], nodes, false).unwrap_err();
        assert!(matches!(err, ModelError::NegativePrice { .. }));
    }

    #[test]
    fn rejects_zero_horizon() {
        let nodes = vec![raw("r", 0, 1.0, &[])];
        let err = Lattice::assemble(0, 1, &[1.0], nodes, false).unwrap_err();
        assert!(matches!(err, ModelError::HorizonZero));
        assert_eq!(err.to_string(), "horizon must be ≥ 1");
    }

    #[test]
    fn rejects_second_predecessor_without_recombine() {
        let nodes = vec![
            raw("r", 0, 1.0, &["a", "b"]),
            raw("a", 1, 2.0, &["c"]),
            raw("b", 1, 0.5, &["c"]),
            raw("c", 2, 1.0, &[]),
        ];
        let err = Lattice::assemble(2, 1, &[1.0], nodes.clone(), false).unwrap_err();
        assert!(matches!(err, ModelError::MultiplePredecessors { .. }));
        let ok = Lattice::assemble(2, 1, &[1.0], nodes, true).unwrap();
        assert_eq!(ok.enumerate_paths().len(), 2);
    }

    #[test]
    fn increments_follow_successor_order() {
        let nodes = vec![
            raw("r", 0, 100.0, &["u", "d"]),
            raw("u", 1, 120.0, &[]),
            raw("d", 1, 80.0, &[]),
        ];
        let lat = Lattice::assemble(1, 1, &[100.0], nodes, false).unwrap();
        let inc = lat.increments(lat.root());
        assert_eq!(inc, vec![vec![20.0], vec![-20.0]]);
    }
}
