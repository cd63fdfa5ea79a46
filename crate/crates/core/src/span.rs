//! Orthonormal bases of spans of increment vectors.
//!
//! Hedges only act on wealth through inner products with the support
//! increments, so they are determined modulo the orthogonal complement of the
//! increment span.  Working in span coordinates keeps feasible sets compact
//! and pins the reported hedge to the minimal-norm representative.

/// Orthonormal basis of the span of a family of vectors in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Span {
    dim: usize,
    basis: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Span {
    /// Gram–Schmidt with one re-orthogonalisation pass; directions whose
    /// residual is below `1e-10` of the input scale are treated as dependent.
    pub fn of(vectors: &[Vec<f64>], dim: usize) -> Span {
        let scale = vectors
            .iter()
            .map(|v| norm(v))
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for v in vectors {
            let mut w = v.clone();
            for _ in 0..2 {
                for e in &basis {
                    let c = dot(&w, e);
                    for (wk, ek) in w.iter_mut().zip(e.iter()) {
                        *wk -= c * ek;
                    }
                }
            }
            let n = norm(&w);
            if n > 1e-10 * scale {
                for wk in w.iter_mut() {
                    *wk /= n;
                }
                basis.push(w);
                if basis.len() == dim {
                    break;
                }
            }
        }
        Span { dim, basis }
    }

    /// Dimension of the span.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of (the projection of) `v` in the basis.
    pub fn coords(&self, v: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|e| dot(v, e)).collect()
    }

    /// Vector in ambient space with the given basis coordinates.
    pub fn from_coords(&self, a: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for (c, e) in a.iter().zip(self.basis.iter()) {
            for (vk, ek) in v.iter_mut().zip(e.iter()) {
                *vk += c * ek;
            }
        }
        v
    }

    /// Orthogonal projection of `v` onto the span (the minimal-norm
    /// representative of its class modulo the orthogonal complement).
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.from_coords(&self.coords(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_rank_in_one_dimension() {
        let s = Span::of(&[vec![-20.0], vec![20.0]], 1);
        assert_eq!(s.rank(), 1);
        assert_eq!(s.project(&[3.5]), vec![3.5]);
    }

    #[test]
    fn degenerate_direction_is_detected() {
        let s = Span::of(&[vec![1.0, 1.0], vec![-2.0, -2.0]], 2);
        assert_eq!(s.rank(), 1);
        let p = s.project(&[1.0, 0.0]);
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_family_has_empty_span() {
        let s = Span::of(&[vec![0.0, 0.0]], 2);
        assert_eq!(s.rank(), 0);
        assert_eq!(s.project(&[4.0, -1.0]), vec![0.0, 0.0]);
    }
}
