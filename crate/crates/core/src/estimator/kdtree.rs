//! Max-norm neighbor queries over a fixed point set.
//!
//! Queries are always made for members of the indexed set and exclude the
//! query point itself. Both the tree and the brute-force path return exactly
//! the same answers: `kth_distance` is a distance value (unique regardless of
//! ties) and `count_within` counts points at distance strictly below the
//! radius.

const LEAF_SIZE: usize = 12;

/// Point sets smaller than this are searched by brute force.
pub const BRUTE_FORCE_BELOW: usize = 512;

#[inline]
fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    let mut d = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let v = (x - y).abs();
        if v > d {
            d = v;
        }
    }
    d
}

/// Row-major points of fixed dimension.
#[derive(Debug, Clone)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0, "ragged point set");
        Self { dim, coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// Neighbor queries over a [`PointSet`].
pub trait NeighborIndex: Sync {
    /// Max-norm distance from point `i` to its `k`-th nearest other point.
    fn kth_distance(&self, i: usize, k: usize) -> f64;
    /// Number of points `j != i` with `dist(i, j) < radius`.
    fn count_within(&self, i: usize, radius: f64) -> usize;
}

/// Exhaustive search; reference implementation for the tree.
pub struct BruteForce<'a> {
    points: &'a PointSet,
}

impl<'a> BruteForce<'a> {
    pub fn new(points: &'a PointSet) -> Self {
        Self { points }
    }
}

impl NeighborIndex for BruteForce<'_> {
    fn kth_distance(&self, i: usize, k: usize) -> f64 {
        let q = self.points.point(i);
        let mut d: Vec<f64> = (0..self.points.len())
            .filter(|&j| j != i)
            .map(|j| max_norm(q, self.points.point(j)))
            .collect();
        let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
        *kth
    }

    fn count_within(&self, i: usize, radius: f64) -> usize {
        let q = self.points.point(i);
        (0..self.points.len())
            .filter(|&j| j != i && max_norm(q, self.points.point(j)) < radius)
            .count()
    }
}

/// `true` when every coordinate differs by less than `radius`.
#[inline]
fn within(a: &[f64], b: &[f64], radius: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < radius)
}

const NO_CHILD: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    start: u32,
    end: u32,
    /// Child node ids, `NO_CHILD` for leaves.
    left: u32,
    right: u32,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.left == NO_CHILD
    }

    fn len(&self) -> usize {
        (self.end - self.start) as usize
    }
}

/// Where a node's bounding box lies relative to a max-norm ball.
enum BoxRelation {
    Outside,
    Inside,
    Partial,
}

/// Kd-tree splitting at the median of the widest dimension, with a bounding
/// box per node.
pub struct KdTree {
    dim: usize,
    /// Coordinates reordered into tree order.
    coords: Vec<f64>,
    /// Tree position -> original index.
    order: Vec<usize>,
    /// Original index -> tree position.
    position: Vec<usize>,
    nodes: Vec<Node>,
    /// Per node: `dim` lower bounds followed by `dim` upper bounds.
    boxes: Vec<f64>,
}

impl KdTree {
    pub fn new(points: &PointSet) -> Self {
        let n = points.len();
        assert!(n < NO_CHILD as usize, "too many points for the tree");
        let dim = points.dim();
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::new();
        let mut boxes = Vec::new();
        if n > 0 {
            build(points, &mut order, 0, n, &mut nodes, &mut boxes);
        }
        let mut coords = Vec::with_capacity(n * dim);
        let mut position = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            coords.extend_from_slice(points.point(i));
            position[i] = pos;
        }
        Self {
            dim,
            coords,
            order,
            position,
            nodes,
            boxes,
        }
    }

    #[inline]
    fn at(&self, pos: usize) -> &[f64] {
        &self.coords[pos * self.dim..(pos + 1) * self.dim]
    }

    #[inline]
    fn bounds(&self, node: usize) -> (&[f64], &[f64]) {
        let b = &self.boxes[node * 2 * self.dim..(node + 1) * 2 * self.dim];
        b.split_at(self.dim)
    }

    /// Max-norm distance from `q` to the node's bounding box.
    #[inline]
    fn box_distance(&self, node: usize, q: &[f64]) -> f64 {
        let (lo, hi) = self.bounds(node);
        let mut d = 0.0f64;
        for ((x, lo), hi) in q.iter().zip(lo).zip(hi) {
            d = d.max(lo - x).max(x - hi);
        }
        d
    }

    #[inline]
    fn relation(&self, node: usize, q: &[f64], radius: f64) -> BoxRelation {
        let (lo, hi) = self.bounds(node);
        let mut inside = true;
        for ((x, lo), hi) in q.iter().zip(lo).zip(hi) {
            if lo - x >= radius || x - hi >= radius {
                return BoxRelation::Outside;
            }
            if inside && (x - lo >= radius || hi - x >= radius) {
                inside = false;
            }
        }
        if inside {
            BoxRelation::Inside
        } else {
            BoxRelation::Partial
        }
    }

    /// `best` holds up to `k` distances in ascending order.
    fn knn_visit(&self, node: usize, q: &[f64], self_pos: usize, k: usize, best: &mut Vec<f64>) {
        let nd = self.nodes[node];
        if nd.is_leaf() {
            for pos in nd.start as usize..nd.end as usize {
                if pos == self_pos {
                    continue;
                }
                let d = max_norm(q, self.at(pos));
                if best.len() < k {
                    let at = best.partition_point(|&b| b <= d);
                    best.insert(at, d);
                } else if d < best[k - 1] {
                    best.pop();
                    let at = best.partition_point(|&b| b <= d);
                    best.insert(at, d);
                }
            }
            return;
        }
        let (l, r) = (nd.left as usize, nd.right as usize);
        let dl = self.box_distance(l, q);
        let dr = self.box_distance(r, q);
        let ((first, df), (second, ds)) = if dl <= dr {
            ((l, dl), (r, dr))
        } else {
            ((r, dr), (l, dl))
        };
        if best.len() < k || df < best[k - 1] {
            self.knn_visit(first, q, self_pos, k, best);
        }
        if best.len() < k || ds < best[k - 1] {
            self.knn_visit(second, q, self_pos, k, best);
        }
    }

    fn count_visit(&self, node: usize, q: &[f64], radius: f64) -> usize {
        let nd = self.nodes[node];
        match self.relation(node, q, radius) {
            BoxRelation::Outside => 0,
            BoxRelation::Inside => nd.len(),
            BoxRelation::Partial if nd.is_leaf() => (nd.start as usize..nd.end as usize)
                .filter(|&pos| within(q, self.at(pos), radius))
                .count(),
            BoxRelation::Partial => {
                self.count_visit(nd.left as usize, q, radius)
                    + self.count_visit(nd.right as usize, q, radius)
            }
        }
    }
}

fn build(
    points: &PointSet,
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
    boxes: &mut Vec<f64>,
) -> u32 {
    let dim = points.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for &i in &order[start..end] {
        for (d, v) in points.point(i).iter().enumerate() {
            lo[d] = lo[d].min(*v);
            hi[d] = hi[d].max(*v);
        }
    }
    let id = nodes.len();
    nodes.push(Node {
        start: start as u32,
        end: end as u32,
        left: NO_CHILD,
        right: NO_CHILD,
    });
    boxes.extend_from_slice(&lo);
    boxes.extend_from_slice(&hi);
    if end - start <= LEAF_SIZE {
        return id as u32;
    }
    let split_dim = (0..dim)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .expect("dim > 0");
    if hi[split_dim] - lo[split_dim] <= 0.0 {
        // All points coincide; keep them in one leaf.
        return id as u32;
    }
    let mid = (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid, |&a, &b| {
        points.point(a)[split_dim].total_cmp(&points.point(b)[split_dim])
    });
    let left = build(points, order, start, start + mid, nodes, boxes);
    let right = build(points, order, start + mid, end, nodes, boxes);
    nodes[id].left = left;
    nodes[id].right = right;
    id as u32
}

impl NeighborIndex for KdTree {
    fn kth_distance(&self, i: usize, k: usize) -> f64 {
        let pos = self.position[i];
        let q = self.at(pos);
        let mut best = Vec::with_capacity(k + 1);
        self.knn_visit(0, q, pos, k, &mut best);
        *best.last().expect("k >= 1 and enough points")
    }

    fn count_within(&self, i: usize, radius: f64) -> usize {
        if !(radius > 0.0) {
            return 0;
        }
        let q = self.at(self.position[i]);
        // The query point itself is always within a positive radius.
        self.count_visit(0, q, radius) - 1
    }
}

impl KdTree {
    /// Original index of the point stored at tree position `pos`.
    pub fn original_index(&self, pos: usize) -> usize {
        self.order[pos]
    }
}

/// Tree index for large sets, brute force for small ones.
pub fn build_index(points: &PointSet) -> Box<dyn NeighborIndex + '_> {
    if points.len() < BRUTE_FORCE_BELOW {
        Box::new(BruteForce::new(points))
    } else {
        Box::new(KdTree::new(points))
    }
}
