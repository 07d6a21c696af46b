//! Dense graded-lexicographic coefficient layouts, one per jet order.

use std::sync::OnceLock;

use super::{MultiIndex, MAX_ORDER, NVARS};

/// Index tables shared by every jet of a given order.
#[derive(Debug)]
pub(crate) struct Layout {
    order: usize,
    indices: Vec<MultiIndex>,
    lookup: Vec<u32>,
    /// `(i, j, k)` with `indices[i] + indices[j] == indices[k]`.
    products: Vec<(u32, u32, u32)>,
    /// Position of the first coefficient of each degree, plus a final sentinel.
    degree_starts: Vec<usize>,
}

const ABSENT: u32 = u32::MAX;

impl Layout {
    fn build(order: usize) -> Self {
        let mut indices = Vec::new();
        let mut degree_starts = Vec::with_capacity(order + 2);
        for degree in 0..=order {
            degree_starts.push(indices.len());
            push_degree(degree, &mut indices);
        }
        degree_starts.push(indices.len());

        let side = order + 1;
        let mut lookup = vec![ABSENT; side.pow(NVARS as u32)];
        for (pos, idx) in indices.iter().enumerate() {
            lookup[dense_key(side, idx)] = pos as u32;
        }

        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if a.degree() + b.degree() > order {
                    continue;
                }
                let k = lookup[dense_key(side, &a.add(b))];
                products.push((i as u32, j as u32, k));
            }
        }

        Self {
            order,
            indices,
            lookup,
            products,
            degree_starts,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.indices.len()
    }

    pub(crate) fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub(crate) fn products(&self) -> &[(u32, u32, u32)] {
        &self.products
    }

    /// Coefficient positions of total degree `<= degree`.
    pub(crate) fn prefix_len(&self, degree: usize) -> usize {
        self.degree_starts[degree.min(self.order) + 1]
    }

    pub(crate) fn position(&self, idx: &MultiIndex) -> Option<usize> {
        if idx.degree() > self.order {
            return None;
        }
        let pos = self.lookup[dense_key(self.order + 1, idx)];
        (pos != ABSENT).then_some(pos as usize)
    }
}

fn dense_key(side: usize, idx: &MultiIndex) -> usize {
    idx.exponents()
        .iter()
        .fold(0, |acc, &e| acc * side + e as usize)
}

/// Exponent tuples of one total degree, lexicographically descending.
fn push_degree(degree: usize, out: &mut Vec<MultiIndex>) {
    for a in (0..=degree).rev() {
        for b in (0..=degree - a).rev() {
            for c in (0..=degree - a - b).rev() {
                let d = degree - a - b - c;
                out.push(MultiIndex::new([a as u8, b as u8, c as u8, d as u8]));
            }
        }
    }
}

pub(crate) fn layout(order: usize) -> &'static Layout {
    static LAYOUTS: OnceLock<Vec<Layout>> = OnceLock::new();
    let all = LAYOUTS.get_or_init(|| (0..=MAX_ORDER).map(Layout::build).collect());
    &all[order]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn coefficient_count_is_binomial() {
        for order in 0..=MAX_ORDER {
            assert_eq!(layout(order).len(), binomial(order + NVARS, NVARS));
        }
        assert_eq!(layout(4).len(), 70);
    }

    #[test]
    fn zero_index_first_and_graded() {
        let l = layout(4);
        assert_eq!(l.indices()[0], MultiIndex::zero());
        let degrees: Vec<usize> = l.indices().iter().map(MultiIndex::degree).collect();
        assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(l.prefix_len(1), 5);
    }

    #[test]
    fn lookup_roundtrip() {
        let l = layout(3);
        for (pos, idx) in l.indices().iter().enumerate() {
            assert_eq!(l.position(idx), Some(pos));
        }
        assert_eq!(l.position(&MultiIndex::new([2, 2, 0, 0])), None);
    }
}
