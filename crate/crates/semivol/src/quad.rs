//! Thin wrapper around Gauss–Legendre node/weight generation.

use gauss_quad::legendre::GaussLegendre;

/// A one-dimensional Gauss–Legendre rule, possibly mapped to an interval
/// other than `[-1, 1]`. A rule with `m` nodes integrates polynomials of
/// degree `2m - 1` exactly.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pairs: Vec<(f64, f64)>,
}

impl GaussRule {
    pub fn new(nodes: usize) -> Self {
        let rule = GaussLegendre::new(nodes.max(2)).expect("node count >= 2");
        GaussRule {
            pairs: rule.into_node_weight_pairs(),
        }
    }

    /// Affinely map the rule onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> GaussRule {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        GaussRule {
            pairs: self
                .pairs
                .iter()
                .map(|&(x, w)| (half * x + mid, half * w))
                .collect(),
        }
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}
