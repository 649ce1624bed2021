//! Correlation distances and minimax-linkage hierarchical clustering.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::panel::ReturnsPanel;

/// Minimum number of jointly observed periods for a correlation.
pub const MIN_OVERLAP: usize = 3;

/// Symmetric dissimilarities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn new(d: DMatrix<f64>) -> Result<Self> {
        let n = d.nrows();
        if d.ncols() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: d.ncols(),
            });
        }
        for i in 0..n {
            if d[(i, i)] != 0.0 {
                return Err(Error::InvalidSpec(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let v = d[(i, j)];
                if !v.is_finite() || v < 0.0 || v != d[(j, i)] {
                    return Err(Error::InvalidSpec(format!("bad distance at ({i}, {j})")));
                }
            }
        }
        Ok(Self { d })
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// Restriction to `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            d: DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.d[(idx[a], idx[b])]),
        }
    }
}

fn pair_corr(panel: &ReturnsPanel, a: usize, b: usize) -> Result<f64> {
    let (va, vb) = (panel.column(a), panel.column(b));
    let mask = panel.mask();
    let rows: Vec<usize> = (0..panel.n_periods())
        .filter(|&t| mask[(t, a)] && mask[(t, b)])
        .collect();
    if rows.len() < MIN_OVERLAP {
        return Err(Error::InsufficientOverlap {
            a: panel.assets()[a].clone(),
            b: panel.assets()[b].clone(),
            overlap: rows.len(),
        });
    }
    let m = rows.len() as f64;
    let ma = rows.iter().map(|&t| va[t]).sum::<f64>() / m;
    let mb = rows.iter().map(|&t| vb[t]).sum::<f64>() / m;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &t in &rows {
        let (x, y) = (va[t] - ma, vb[t] - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if saa == 0.0 {
        return Err(Error::ZeroVariance(panel.assets()[a].clone()));
    }
    if sbb == 0.0 {
        return Err(Error::ZeroVariance(panel.assets()[b].clone()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// `1 - |corr|` on pairwise-complete observations.
pub fn correlation_distance(panel: &ReturnsPanel) -> Result<DistanceMatrix> {
    let n = panel.n_assets();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..i)
                .map(|j| pair_corr(panel, i, j).map(|c| 1.0 - c.abs()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut d = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(DistanceMatrix { d })
}

/// `(radius, prototype)` with the prototype minimizing the distance to the
/// farthest member; ties go to the lowest index.
pub fn minimax_radius(cluster: &[usize], d: &DistanceMatrix) -> Result<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    let mut sorted = cluster.to_vec();
    sorted.sort_unstable();
    for &x in &sorted {
        let r = sorted.iter().map(|&y| d.get(x, y)).fold(0.0, f64::max);
        if best.map_or(true, |(br, _)| r < br) {
            best = Some((r, x));
        }
    }
    best.ok_or(Error::EmptyCluster)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Cluster ids: leaves are `0..n`, merge `i` creates `n + i`.
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub prototype: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
}

struct Node {
    members: Vec<usize>,
    min_member: usize,
}

/// Bottom-up agglomeration with `d(G, H) = r(G ∪ H)`.
///
/// Equal linkages are resolved by the smaller of the two clusters'
/// smallest members, then the larger.
pub fn minimax_cluster(d: &DistanceMatrix) -> Dendrogram {
    let n = d.n();
    let total = (2 * n).saturating_sub(1);
    // dmax[x * total + c]: distance from point x to the farthest member of c.
    let mut dmax = vec![0.0f64; n * total];
    for x in 0..n {
        for y in 0..n {
            dmax[x * total + y] = d.get(x, y);
        }
    }
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            members: vec![i],
            min_member: i,
        })
        .collect();
    let mut active: Vec<usize> = (0..n).collect();

    let linkage = |dmax: &[f64], nodes: &[Node], g: usize, h: usize| -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for &x in nodes[g].members.iter().chain(&nodes[h].members) {
            let r = dmax[x * total + g].max(dmax[x * total + h]);
            if r < best.0 || (r == best.0 && x < best.1) {
                best = (r, x);
            }
        }
        best
    };

    // link[(a, b)] for active a < b, stored densely by cluster id.
    let mut link = vec![(f64::INFINITY, usize::MAX); total * total];
    for a in 0..n {
        for b in a + 1..n {
            let v = linkage(&dmax, &nodes, a, b);
            link[a * total + b] = v;
            link[b * total + a] = v;
        }
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    while active.len() > 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for (ia, &a) in active.iter().enumerate() {
            for &b in &active[ia + 1..] {
                let h = link[a * total + b].0;
                let (ma, mb) = (nodes[a].min_member, nodes[b].min_member);
                let key = (ma.min(mb), ma.max(mb));
                let better = match best {
                    None => true,
                    Some((bh, bk, _, _)) => h < bh || (h == bh && key < bk),
                };
                if better {
                    best = Some((h, key, a, b));
                }
            }
        }
        let (height, _, a, b) = best.expect("at least two active clusters");
        let prototype = link[a * total + b].1;
        let c = nodes.len();
        for x in 0..n {
            dmax[x * total + c] = dmax[x * total + a].max(dmax[x * total + b]);
        }
        let mut members = nodes[a].members.clone();
        members.extend_from_slice(&nodes[b].members);
        members.sort_unstable();
        nodes.push(Node {
            min_member: members[0],
            members,
        });
        active.retain(|&k| k != a && k != b);
        for &k in &active {
            let v = linkage(&dmax, &nodes, c, k);
            link[c * total + k] = v;
            link[k * total + c] = v;
        }
        active.push(c);
        let (lo, hi) = if nodes[a].min_member <= nodes[b].min_member {
            (a, b)
        } else {
            (b, a)
        };
        merges.push(Merge {
            a: lo,
            b: hi,
            height,
            prototype,
        });
    }
    Dendrogram { leaves: n, merges }
}

/// A flat cluster with its prototype.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Sorted leaf indices.
    pub members: Vec<usize>,
    pub prototype: usize,
}

impl Dendrogram {
    /// Leaf members of cluster id `c`.
    pub fn members(&self, c: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![c];
        while let Some(k) = stack.pop() {
            if k < self.leaves {
                out.push(k);
            } else {
                let m = &self.merges[k - self.leaves];
                stack.push(m.a);
                stack.push(m.b);
            }
        }
        out.sort_unstable();
        out
    }

    fn flatten(&self, n_merges: usize) -> Vec<Cluster> {
        let n = self.leaves;
        let mut roots = vec![true; n + n_merges];
        for m in &self.merges[..n_merges] {
            roots[m.a] = false;
            roots[m.b] = false;
        }
        let mut out: Vec<Cluster> = (0..n + n_merges)
            .filter(|&c| roots[c])
            .map(|c| Cluster {
                members: self.members(c),
                prototype: if c < n { c } else { self.merges[c - n].prototype },
            })
            .collect();
        out.sort_by_key(|c| c.members[0]);
        out
    }

    /// Maximal clusters formed by merges with height `<= max_height`.
    pub fn cut_by_threshold(&self, max_height: f64) -> Vec<Cluster> {
        let k = self.merges.iter().take_while(|m| m.height <= max_height).count();
        self.flatten(k)
    }

    /// Exactly `k` clusters (clamped to `1..=n`).
    pub fn cut_to_count(&self, k: usize) -> Vec<Cluster> {
        let k = k.clamp(1.min(self.leaves), self.leaves);
        self.flatten(self.leaves - k)
    }
}

/// Convenience wrapper over [`Dendrogram::cut_by_threshold`].
pub fn cut_by_threshold(dend: &Dendrogram, max_height: f64) -> Vec<Cluster> {
    dend.cut_by_threshold(max_height)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(n: usize, entries: &[(usize, usize, f64)]) -> DistanceMatrix {
        let mut d = DMatrix::zeros(n, n);
        for &(i, j, v) in entries {
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
        DistanceMatrix::new(d).unwrap()
    }

    #[test]
    fn three_point_radius() {
        let d = dm(3, &[(0, 1, 0.1), (0, 2, 0.2), (1, 2, 0.3)]);
        assert_eq!(minimax_radius(&[0, 1, 2], &d).unwrap(), (0.2, 0));
        assert_eq!(minimax_radius(&[2], &d).unwrap(), (0.0, 2));
        assert!(matches!(minimax_radius(&[], &d), Err(Error::EmptyCluster)));
    }

    #[test]
    fn equal_distances_pick_lowest() {
        let d = dm(3, &[(0, 1, 0.4), (0, 2, 0.4), (1, 2, 0.4)]);
        assert_eq!(minimax_radius(&[2, 1, 0], &d).unwrap().1, 0);
    }

    #[test]
    fn small_trees() {
        let one = minimax_cluster(&dm(1, &[]));
        assert!(one.merges.is_empty());
        let two = minimax_cluster(&dm(2, &[(0, 1, 0.7)]));
        assert_eq!(two.merges.len(), 1);
        assert_eq!(two.merges[0].height, 0.7);
        assert_eq!(two.merges[0].prototype, 0);
    }

    #[test]
    fn block_design_cuts_into_blocks() {
        let n = 6;
        let mut e = Vec::new();
        for i in 0..n {
            for j in 0..i {
                let same = (i < 3) == (j < 3);
                e.push((i, j, if same { 0.1 } else { 0.9 }));
            }
        }
        let dend = minimax_cluster(&dm(n, &e));
        let cut = dend.cut_by_threshold(0.5);
        assert_eq!(cut.len(), 2);
        assert_eq!(cut[0].members, vec![0, 1, 2]);
        assert_eq!(cut[1].members, vec![3, 4, 5]);
        assert_eq!(dend.cut_by_threshold(0.0).len(), n);
        let root = dend.cut_by_threshold(1.0);
        assert_eq!(root.len(), 1);
        assert_eq!(root[0].prototype, dend.merges.last().unwrap().prototype);
        assert_eq!(dend.cut_to_count(3).len(), 3);
    }
}
