//! Static k-d tree for k-nearest-neighbour queries under the max norm.

const LEAF_SIZE: usize = 12;

enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

pub struct KdTree<'a, const D: usize> {
    points: &'a [[f64; D]],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a, const D: usize> KdTree<'a, D> {
    pub fn new(points: &'a [[f64; D]]) -> Self {
        let mut tree = Self {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split the widest axis at the median
        let mut axis = 0;
        let mut widest = -1.0;
        for a in 0..D {
            let (lo, hi) = self.order[start..end]
                .iter()
                .map(|&i| self.points[i][a])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            if hi - lo > widest {
                widest = hi - lo;
                axis = a;
            }
        }
        let mid = start + (end - start) / 2;
        let pts = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        let value = pts[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// Max-norm distance from point `query` to its `k`-th nearest other point.
    pub fn kth_distance(&self, query: usize, k: usize) -> f64 {
        let mut best = vec![f64::INFINITY; k];
        self.search(0, query, &mut best);
        best[k - 1]
    }

    fn search(&self, node: usize, query: usize, best: &mut [f64]) {
        let q = &self.points[query];
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if i == query {
                        continue;
                    }
                    let p = &self.points[i];
                    let mut d = 0.0_f64;
                    for a in 0..D {
                        d = d.max((p[a] - q[a]).abs());
                    }
                    let k = best.len();
                    if d < best[k - 1] {
                        let mut pos = k - 1;
                        while pos > 0 && best[pos - 1] > d {
                            best[pos] = best[pos - 1];
                            pos -= 1;
                        }
                        best[pos] = d;
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, best);
                if diff.abs() <= best[best.len() - 1] {
                    self.search(far, query, best);
                }
            }
        }
    }
}
