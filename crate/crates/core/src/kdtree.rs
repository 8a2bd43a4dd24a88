//! Static 2D k-d tree for nearest-neighbor texel queries.
//!
//! Ties on squared distance resolve to the lowest point index, so queries
//! agree exactly with an exhaustive scan.

pub(crate) struct KdTree2 {
    /// Point coordinates, indexed by original point index.
    points: Vec<[f64; 2]>,
    /// Permutation of point indices; the tree is implicit over this array.
    order: Vec<u32>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy)]
enum Node {
    Leaf {
        start: u32,
        end: u32,
    },
    Split {
        axis: u8,
        value: f64,
        left: u32,
        right: u32,
    },
}

const LEAF_SIZE: usize = 8;

impl KdTree2 {
    pub fn build(points: Vec<[f64; 2]>) -> KdTree2 {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            build_node(&points, &mut order, 0, &mut nodes);
        }
        KdTree2 { points, order, nodes }
    }

    /// Index of the nearest point to `q` (lowest index among equals).
    pub fn nearest(&self, q: [f64; 2]) -> Option<usize> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, u32::MAX);
        self.search(0, q, &mut best);
        Some(best.1 as usize)
    }

    fn search(&self, node: usize, q: [f64; 2], best: &mut (f64, u32)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start as usize..end as usize] {
                    let p = self.points[idx as usize];
                    let dx = p[0] - q[0];
                    let dy = p[1] - q[1];
                    let d = dx * dx + dy * dy;
                    if d < best.0 || (d == best.0 && idx < best.1) {
                        *best = (d, idx);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near as usize, q, best);
                // Equality must still descend: an equidistant point with a
                // lower index may live on the far side.
                if diff * diff <= best.0 {
                    self.search(far as usize, q, best);
                }
            }
        }
    }
}

fn build_node(points: &[[f64; 2]], order: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len() as u32;
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        });
        return id;
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &i in order.iter() {
        let p = points[i as usize];
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
    if hi[axis] == lo[axis] {
        // all points coincide
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        });
        return id;
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis].total_cmp(&points[b as usize][axis])
    });
    let value = points[order[mid] as usize][axis];
    // Left holds coordinates <= value, right holds >= value.
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (left_part, right_part) = order.split_at_mut(mid);
    let left = build_node(points, left_part, offset, nodes);
    let right = build_node(points, right_part, offset + mid, nodes);
    nodes[id as usize] = Node::Split {
        axis: axis as u8,
        value,
        left,
        right,
    };
    id
}
