//! Exact fixed-radius neighbor search.
//!
//! [`KdTree`] is a static median-split tree rebuilt per frame; [`LinearScan`]
//! answers the same queries by brute force and serves as the reference and
//! benchmarking baseline.

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub const DEFAULT_LEAF_SIZE: usize = 16;

/// Fixed-radius neighbor queries over an indexed point set.
pub trait RadiusSearch {
    /// Number of indexed points.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends to `out` every index `i` with `|p_i - center| <= radius`, in
    /// unspecified order. `radius` must be non-negative.
    fn radius_into(&self, center: Vec3, radius: f64, out: &mut Vec<usize>);

    /// Sorted indices of the points within `radius` of `center`, boundary inclusive.
    fn radius_query(&self, center: Vec3, radius: f64) -> Result<Vec<usize>> {
        check_radius(radius)?;
        let mut out = Vec::new();
        self.radius_into(center, radius, &mut out);
        out.sort_unstable();
        Ok(out)
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "query radius must be >= 0, got {radius}"
        )))
    }
}

#[derive(Debug, Clone)]
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

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    /// Point indices permuted so that every node covers a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
    leaf_size: usize,
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> KdTree {
        Self::with_leaf_size(points, DEFAULT_LEAF_SIZE)
    }

    pub fn with_leaf_size(points: &[Vec3], leaf_size: usize) -> KdTree {
        let leaf_size = leaf_size.max(1);
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
            leaf_size,
        };
        if !points.is_empty() {
            tree.build_node(0, points.len(), 0);
        }
        tree
    }

    fn build_node(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= self.leaf_size {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = depth % 3;
        let mid = (end - start) / 2;
        let points = &self.points;
        // ties on the coordinate are broken by point index so the build is deterministic
        self.order[start..end].select_nth_unstable_by(mid, |&a, &b| {
            points[a]
                .axis(axis)
                .total_cmp(&points[b].axis(axis))
                .then(a.cmp(&b))
        });
        let value = self.points[self.order[start + mid]].axis(axis);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, start + mid, depth + 1);
        let right = self.build_node(start + mid, end, depth + 1);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Number of levels from the root to the deepest leaf (0 for an empty tree).
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 1,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }

    /// Point indices in leaf order; each index appears exactly once.
    pub fn leaf_order(&self) -> &[usize] {
        &self.order
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    fn search(&self, id: usize, center: Vec3, radius: f64, r2: f64, out: &mut Vec<usize>) {
        match self.nodes[id] {
            Node::Leaf { start, end } => {
                out.extend(
                    self.order[start..end]
                        .iter()
                        .copied()
                        .filter(|&i| self.points[i].distance_squared(center) <= r2),
                );
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let c = center.axis(axis);
                if c - radius <= value {
                    self.search(left, center, radius, r2, out);
                }
                if c + radius >= value {
                    self.search(right, center, radius, r2, out);
                }
            }
        }
    }
}

impl RadiusSearch for KdTree {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn radius_into(&self, center: Vec3, radius: f64, out: &mut Vec<usize>) {
        if !self.nodes.is_empty() {
            self.search(0, center, radius, radius * radius, out);
        }
    }
}

/// Brute-force neighbor search.
#[derive(Debug, Clone)]
pub struct LinearScan {
    points: Vec<Vec3>,
}

impl LinearScan {
    pub fn new(points: &[Vec3]) -> Self {
        Self {
            points: points.to_vec(),
        }
    }
}

impl RadiusSearch for LinearScan {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn radius_into(&self, center: Vec3, radius: f64, out: &mut Vec<usize>) {
        let r2 = radius * radius;
        out.extend(
            self.points
                .iter()
                .enumerate()
                .filter(|(_, p)| p.distance_squared(center) <= r2)
                .map(|(i, _)| i),
        );
    }
}

pub fn build(points: &[Vec3]) -> KdTree {
    KdTree::build(points)
}

pub fn radius_query(tree: &KdTree, center: Vec3, radius: f64) -> Result<Vec<usize>> {
    tree.radius_query(center, radius)
}
