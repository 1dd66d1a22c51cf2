//! Static k-d tree over row-major points for exact nearest-neighbor queries.
//!
//! Results are exact and deterministic: among equidistant candidates the one
//! with the smallest index wins, so a query returns the same neighbor as a
//! linear scan.

const LEAF_SIZE: usize = 8;

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

pub struct KdTree<'a> {
    points: &'a [f64],
    dim: usize,
    order: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

/// Squared Euclidean distance, summed in coordinate order.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn better(d2: f64, idx: usize, best: Option<(f64, usize)>) -> bool {
    match best {
        None => true,
        Some((bd, bi)) => d2 < bd || (d2 == bd && idx < bi),
    }
}

impl<'a> KdTree<'a> {
    /// Builds a tree over `points`, a flat array of `dim`-component rows.
    pub fn new(points: &'a [f64], dim: usize) -> Self {
        assert!(dim > 0 && points.len().is_multiple_of(dim));
        let n = points.len() / dim;
        let mut tree = KdTree {
            points,
            dim,
            order: (0..n).collect(),
            nodes: Vec::new(),
            root: 0,
        };
        tree.root = tree.build(0, n);
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn coord(&self, idx: usize, axis: usize) -> f64 {
        self.points[idx * self.dim + axis]
    }

    fn point(&self, idx: usize) -> &'a [f64] {
        &self.points[idx * self.dim..(idx + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        // Split along the axis of widest spread.
        let mut axis = 0;
        let mut widest = f64::NEG_INFINITY;
        for a in 0..self.dim {
            let (lo, hi) = self.order[start..end].iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &i| {
                    let c = self.coord(i, a);
                    (lo.min(c), hi.max(c))
                },
            );
            if hi - lo > widest {
                widest = hi - lo;
                axis = a;
            }
        }
        if widest <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let mid = start + (end - start) / 2;
        let points = self.points;
        let dim = self.dim;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + axis].total_cmp(&points[b * dim + axis])
        });
        let value = self.coord(self.order[mid], axis);
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes.push(Node::Split {
            axis,
            value,
            left,
            right,
        });
        self.nodes.len() - 1
    }

    /// Nearest point to `query` whose index is not rejected by `exclude`.
    ///
    /// Returns `(squared distance, index)`.
    pub fn nearest<F>(&self, query: &[f64], exclude: F) -> Option<(f64, usize)>
    where
        F: Fn(usize) -> bool,
    {
        let mut best = None;
        self.search(self.root, query, &exclude, &mut best);
        best
    }

    fn search<F>(&self, node: usize, query: &[f64], exclude: &F, best: &mut Option<(f64, usize)>)
    where
        F: Fn(usize) -> bool,
    {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if exclude(i) {
                        continue;
                    }
                    let d2 = sq_dist(query, self.point(i));
                    if better(d2, i, *best) {
                        *best = Some((d2, i));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, exclude, best);
                // Equality keeps the far side alive so index ties resolve.
                if best.is_none_or(|(bd, _)| diff * diff <= bd) {
                    self.search(far, query, exclude, best);
                }
            }
        }
    }
}

/// Linear-scan counterpart of [`KdTree::nearest`].
pub fn brute_force_nearest<F>(points: &[f64], dim: usize, query: &[f64], exclude: F) -> Option<(f64, usize)>
where
    F: Fn(usize) -> bool,
{
    let mut best = None;
    for (i, p) in points.chunks_exact(dim).enumerate() {
        if exclude(i) {
            continue;
        }
        let d2 = sq_dist(query, p);
        if better(d2, i, best) {
            best = Some((d2, i));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_linear_scan(
            dim in 1usize..5,
            raw in prop::collection::vec(-4i32..4, 1..400),
            q in 0usize..400,
            window in 0usize..4,
        ) {
            // Small integer coordinates force plenty of exact ties.
            let n = raw.len() / dim;
            prop_assume!(n > 0);
            let pts: Vec<f64> = raw[..n * dim].iter().map(|&v| v as f64 * 0.5).collect();
            let tree = KdTree::new(&pts, dim);
            let q = q % n;
            let query = &pts[q * dim..(q + 1) * dim];
            let excl = |i: usize| i.abs_diff(q) <= window;
            prop_assert_eq!(tree.nearest(query, excl), brute_force_nearest(&pts, dim, query, excl));
        }
    }

    #[test]
    fn all_excluded() {
        let pts = [0.0, 1.0, 2.0];
        let tree = KdTree::new(&pts, 1);
        assert_eq!(tree.nearest(&[0.0], |_| true), None);
    }
}
