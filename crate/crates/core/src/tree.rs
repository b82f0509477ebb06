//! Centered random trees.
//!
//! A centered tree of depth `k` splits every node at the midpoint of a
//! coordinate drawn uniformly from `{1..d}`, independently of the data, until
//! each root-to-leaf path carries `k` splits. Leaves are dyadic boxes: along
//! coordinate `m` the leaf containing `x` is the interval of index
//! `ceil(2^{k_m} x_m)` (with `x_m = 0` mapped to 1), where `k_m` counts the
//! splits on `m` along the path.
//!
//! Intervals are left-open and right-closed, `((j-1)/2^{k_m}, j/2^{k_m}]`,
//! except the leftmost which is closed at 0. Descent goes left iff
//! `x_m <= midpoint`, which agrees with the ceiling rule everywhere,
//! dyadic rationals included.

use rand::Rng;

use crate::data::Dataset;
use crate::error::{invalid_input, Error, Result};

/// Largest depth accepted by [`build_tree`] (the full tree stores `2^k - 1` nodes).
pub const MAX_TREE_DEPTH: u32 = 30;
/// Largest depth accepted for a single query path (cell indices are `u64`).
pub const MAX_PATH_DEPTH: u32 = 63;

/// Index of the dyadic interval of level `level` containing `v`.
#[inline]
pub fn dyadic_index(v: f64, level: u32) -> u64 {
    let scaled = (v * (level as f64).exp2()).ceil();
    if scaled < 1.0 {
        1
    } else {
        scaled as u64
    }
}

/// A complete centered tree: the split coordinate of each of the `2^k - 1`
/// internal nodes, stored in heap order (children of node `i` are `2i+1`
/// and `2i+2`, left first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenteredTree {
    d: usize,
    k: u32,
    split_coords: Vec<u16>,
}

/// Draw a centered tree: every internal node's coordinate is i.i.d. uniform.
pub fn build_tree<R: Rng + ?Sized>(d: usize, k: u32, rng: &mut R) -> Result<CenteredTree> {
    if d == 0 || d > usize::from(u16::MAX) {
        return Err(invalid_input(format!("dimension {d} out of range")));
    }
    if k > MAX_TREE_DEPTH {
        return Err(Error::DepthOverflow { depth: k, max: MAX_TREE_DEPTH });
    }
    let internal = (1usize << k) - 1;
    let split_coords = (0..internal).map(|_| rng.random_range(0..d) as u16).collect();
    Ok(CenteredTree { d, k, split_coords })
}

impl CenteredTree {
    /// Build from explicit split coordinates (0-based), in heap order.
    pub fn from_split_coords(d: usize, k: u32, split_coords: Vec<u16>) -> Result<Self> {
        if k > MAX_TREE_DEPTH {
            return Err(Error::DepthOverflow { depth: k, max: MAX_TREE_DEPTH });
        }
        if split_coords.len() != (1usize << k) - 1 {
            return Err(invalid_input("split coordinate array must have 2^k - 1 entries"));
        }
        if d == 0 || split_coords.iter().any(|&c| usize::from(c) >= d) {
            return Err(invalid_input("split coordinate out of range"));
        }
        Ok(Self { d, k, split_coords })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> u32 {
        self.k
    }

    pub fn split_coords(&self) -> &[u16] {
        &self.split_coords
    }

    pub fn leaf_count(&self) -> usize {
        1usize << self.k
    }

    /// The leaf containing `x`.
    pub fn leaf_of(&self, x: &[f64]) -> LeafCell {
        debug_assert_eq!(x.len(), self.d);
        let mut counts = vec![0u32; self.d];
        let mut index = vec![1u64; self.d];
        let mut node = 0usize;
        for _ in 0..self.k {
            let m = usize::from(self.split_coords[node]);
            // midpoint of ((j-1)/2^c, j/2^c] is (2j-1)/2^(c+1); exact in f64
            let mid = (2 * index[m] - 1) as f64 * (-(f64::from(counts[m]) + 1.0)).exp2();
            counts[m] += 1;
            if x[m] <= mid {
                index[m] = 2 * index[m] - 1;
                node = 2 * node + 1;
            } else {
                index[m] *= 2;
                node = 2 * node + 2;
            }
        }
        LeafCell { split_counts: counts, cell_index: index }
    }

    /// All `2^k` leaves, left to right.
    pub fn leaves(&self) -> Vec<LeafCell> {
        let mut out = Vec::with_capacity(self.leaf_count());
        let mut counts = vec![0u32; self.d];
        let mut index = vec![1u64; self.d];
        self.collect_leaves(0, 0, &mut counts, &mut index, &mut out);
        out
    }

    fn collect_leaves(&self, node: usize, level: u32, counts: &mut [u32], index: &mut [u64], out: &mut Vec<LeafCell>) {
        if level == self.k {
            out.push(LeafCell { split_counts: counts.to_vec(), cell_index: index.to_vec() });
            return;
        }
        let m = usize::from(self.split_coords[node]);
        let j = index[m];
        counts[m] += 1;
        index[m] = 2 * j - 1;
        self.collect_leaves(2 * node + 1, level + 1, counts, index, out);
        index[m] = 2 * j;
        self.collect_leaves(2 * node + 2, level + 1, counts, index, out);
        index[m] = j;
        counts[m] -= 1;
    }
}

/// A dyadic cell: per-coordinate split counts `k_m` and interval indices
/// `1 <= j_m <= 2^{k_m}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LeafCell {
    split_counts: Vec<u32>,
    cell_index: Vec<u64>,
}

impl LeafCell {
    /// The root cell `[0,1]^d`.
    pub fn root(d: usize) -> Self {
        Self { split_counts: vec![0; d], cell_index: vec![1; d] }
    }

    /// The cell of the given split counts that contains `x`.
    pub fn containing(split_counts: Vec<u32>, x: &[f64]) -> Self {
        debug_assert_eq!(split_counts.len(), x.len());
        let cell_index = split_counts.iter().zip(x).map(|(&c, &v)| dyadic_index(v, c)).collect();
        Self { split_counts, cell_index }
    }

    pub fn new(split_counts: Vec<u32>, cell_index: Vec<u64>) -> Result<Self> {
        if split_counts.len() != cell_index.len() || split_counts.is_empty() {
            return Err(invalid_input("split counts and cell indices must have equal nonzero length"));
        }
        for (&c, &j) in split_counts.iter().zip(&cell_index) {
            if c > MAX_PATH_DEPTH || j == 0 || j > 1u64 << c {
                return Err(invalid_input(format!("cell index {j} invalid for {c} splits")));
            }
        }
        Ok(Self { split_counts, cell_index })
    }

    pub fn d(&self) -> usize {
        self.split_counts.len()
    }

    pub fn split_counts(&self) -> &[u32] {
        &self.split_counts
    }

    pub fn cell_index(&self) -> &[u64] {
        &self.cell_index
    }

    /// Total number of splits, `sum_m k_m`.
    pub fn depth(&self) -> u32 {
        self.split_counts.iter().sum()
    }

    /// Lebesgue volume, `2^{-k}`.
    pub fn volume(&self) -> f64 {
        (-f64::from(self.depth())).exp2()
    }

    /// Max-norm diameter, `2^{-min_m k_m}`.
    pub fn diameter(&self) -> f64 {
        let min = self.split_counts.iter().copied().min().unwrap_or(0);
        (-f64::from(min)).exp2()
    }

    /// Bounds `(lo, hi)` of the interval along coordinate `m`.
    pub fn interval(&self, m: usize) -> (f64, f64) {
        let w = (-f64::from(self.split_counts[m])).exp2();
        ((self.cell_index[m] - 1) as f64 * w, self.cell_index[m] as f64 * w)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.split_counts
            .iter()
            .zip(&self.cell_index)
            .zip(x)
            .all(|((&c, &j), &v)| dyadic_index(v, c) == j)
    }
}

/// Sample the leaf containing `x` of a fresh random tree without building the
/// tree: the split counts along the path are `k` i.i.d. uniform coordinate
/// draws, i.e. `Multinomial(k, (1/d, ..., 1/d))`.
pub fn sample_query_path<R: Rng + ?Sized>(d: usize, k: u32, x: &[f64], rng: &mut R) -> LeafCell {
    debug_assert!(k <= MAX_PATH_DEPTH);
    debug_assert_eq!(x.len(), d);
    let mut counts = vec![0u32; d];
    for _ in 0..k {
        counts[rng.random_range(0..d)] += 1;
    }
    LeafCell::containing(counts, x)
}

/// Mean label of the subsample points falling in `cell`, or 0 when the cell
/// is empty.
pub fn tree_predict(cell: &LeafCell, subsample: &[usize], data: &Dataset) -> f64 {
    let scales: Vec<f64> = cell.split_counts.iter().map(|&c| f64::from(c).exp2()).collect();
    let targets: Vec<f64> = cell.cell_index.iter().map(|&j| j as f64).collect();
    let mut hits = 0u64;
    let mut ones = 0u64;
    for &i in subsample {
        let row = data.row(i);
        let inside = row
            .iter()
            .zip(&scales)
            .zip(&targets)
            .all(|((&v, &s), &t)| (v * s).ceil().max(1.0) == t);
        if inside {
            hits += 1;
            ones += u64::from(data.label(i));
        }
    }
    if hits == 0 {
        0.0
    } else {
        ones as f64 / hits as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn depth_zero_is_the_root() {
        let mut rng = Stream::new(1).rng();
        let t = build_tree(2, 0, &mut rng).unwrap();
        assert_eq!(t.leaf_count(), 1);
        let leaf = t.leaf_of(&[0.3, 0.9]);
        assert_eq!(leaf, LeafCell::root(2));
        assert_eq!(leaf.volume(), 1.0);
        assert_eq!(sample_query_path(2, 0, &[0.3, 0.9], &mut rng), LeafCell::root(2));
    }

    #[test]
    fn depth_three_has_eight_leaves() {
        let mut rng = Stream::new(2).rng();
        let t = build_tree(2, 3, &mut rng).unwrap();
        let leaves = t.leaves();
        assert_eq!(leaves.len(), 8);
        assert_eq!(leaves.iter().map(LeafCell::volume).sum::<f64>(), 1.0);
    }

    #[test]
    fn forced_first_coordinate_descent() {
        // k = 2, all splits on coordinate 1: x1 = 0.3 lies in (1/4, 1/2]
        let t = CenteredTree::from_split_coords(2, 2, vec![0, 0, 0]).unwrap();
        let leaf = t.leaf_of(&[0.3, 0.8]);
        assert_eq!(leaf.split_counts(), &[2, 0]);
        assert_eq!(leaf.cell_index(), &[2, 1]);
        assert_eq!(leaf.interval(0), (0.25, 0.5));
    }

    #[test]
    fn dyadic_boundaries_follow_the_closed_right_convention() {
        let t = CenteredTree::from_split_coords(1, 2, vec![0, 0, 0]).unwrap();
        assert_eq!(t.leaf_of(&[0.0]).cell_index(), &[1]);
        assert_eq!(t.leaf_of(&[0.25]).cell_index(), &[1]);
        assert_eq!(t.leaf_of(&[0.5]).cell_index(), &[2]);
        assert_eq!(t.leaf_of(&[0.75]).cell_index(), &[3]);
        assert_eq!(t.leaf_of(&[1.0]).cell_index(), &[4]);
        assert_eq!(dyadic_index(0.0, 5), 1);
        assert_eq!(dyadic_index(1.0, 5), 32);
    }

    #[test]
    fn descent_matches_ceiling_rule() {
        let s = Stream::new(9);
        for trial in 0..10_000u64 {
            let mut rng = s.child(trial).rng();
            let d = rng.random_range(1..=4);
            let k = rng.random_range(0..=10);
            let t = build_tree(d, k, &mut rng).unwrap();
            let x: Vec<f64> = (0..d)
                .map(|_| if rng.random_bool(0.1) { f64::from(rng.random_range(0..=8u32)) / 8.0 } else { rng.random() })
                .collect();
            let leaf = t.leaf_of(&x);
            assert_eq!(leaf, LeafCell::containing(leaf.split_counts().to_vec(), &x));
            assert!(leaf.contains(&x));
            assert_eq!(leaf.depth(), k);
        }
    }

    #[test]
    fn every_point_in_exactly_one_leaf() {
        let mut rng = Stream::new(5).rng();
        let t = build_tree(3, 6, &mut rng).unwrap();
        let leaves = t.leaves();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            assert_eq!(leaves.iter().filter(|l| l.contains(&x)).count(), 1);
        }
    }

    #[test]
    fn diameter_is_two_to_minus_min_count() {
        let leaf = LeafCell::new(vec![3, 1, 2], vec![5, 2, 1]).unwrap();
        assert_eq!(leaf.diameter(), 0.5);
        assert_eq!(leaf.depth(), 6);
        assert!(LeafCell::new(vec![1], vec![3]).is_err());
        assert!(LeafCell::new(vec![1], vec![0]).is_err());
    }

    #[test]
    fn build_rejects_excessive_depth() {
        let mut rng = Stream::new(0).rng();
        assert!(matches!(build_tree(2, 31, &mut rng), Err(Error::DepthOverflow { .. })));
        assert!(build_tree(0, 2, &mut rng).is_err());
    }

    #[test]
    fn tree_prediction_examples() {
        let rows = vec![vec![0.1, 0.1], vec![0.2, 0.2], vec![0.3, 0.1], vec![0.4, 0.2], vec![0.9, 0.9]];
        let data = Dataset::from_rows(&rows, vec![1, 0, 0, 1, 1]).unwrap();
        let lower_left = LeafCell::new(vec![1, 1], vec![1, 1]).unwrap();
        assert_eq!(tree_predict(&lower_left, &[0, 1, 2, 3], &data), 0.5);
        let upper_left = LeafCell::new(vec![1, 1], vec![1, 2]).unwrap();
        assert_eq!(tree_predict(&upper_left, &[0, 1, 2, 3, 4], &data), 0.0);
        let upper_right = LeafCell::new(vec![1, 1], vec![2, 2]).unwrap();
        assert_eq!(tree_predict(&upper_right, &[4], &data), 1.0);
        // subsample restricts which points count
        assert_eq!(tree_predict(&lower_left, &[0, 3], &data), 1.0);
    }
}
