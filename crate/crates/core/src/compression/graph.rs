use super::{exact_blocking, CompressionError};
use crate::sparse::{symmetrized_pattern, Adjacency, BlockPartition, CsrMatrix};

/// Result of [`graph_blocking_with_stats`].
#[derive(Debug, Clone)]
pub struct GraphBlocking {
    pub partition: BlockPartition,
    /// Block density tracked incrementally through the merges.
    pub av_bd: f64,
    /// Block density of the exact (checksum) blocking the merges started from.
    pub initial_av_bd: f64,
    pub merges: usize,
}

/// Graph-based compression with density floor `mu`.
pub fn graph_blocking(a: &CsrMatrix, mu: f64) -> Result<BlockPartition, CompressionError> {
    graph_blocking_with_stats(a, mu).map(|g| g.partition)
}

/// Starts from the exact blocking and sweeps the supernodes once in
/// ascending id. Each supernode `X` tries its quotient-graph neighbors `Z`
/// in ascending id and absorbs `Z` when
///
/// * the cross spanned by `X ∪ Z` (its block row and block column at
///   vertex resolution) keeps density `N / T >= mu`, with
///   `T = 2 |adj(X∪Z)| |X∪Z| - |X∪Z|^2` and
///   `N = 2 Σ |adj(v)| - Σ |adj(v) ∩ (X∪Z)|` over `v ∈ X∪Z`, and
/// * the global block density of `A` stays `>= mu`.
///
/// The global density is `nnz(A) / covered cells`; covered cells are kept
/// exactly through the block couplings of `A`, so the final value equals
/// [`crate::sparse::block_metrics`] on the returned partition.
pub fn graph_blocking_with_stats(
    a: &CsrMatrix,
    mu: f64,
) -> Result<GraphBlocking, CompressionError> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(CompressionError::ParameterOutOfRange {
            name: "mu",
            value: mu,
        });
    }
    let adj = symmetrized_pattern(a)?;
    let exact = exact_blocking(&adj);
    Ok(merge_supernodes(a, &adj, &exact, mu))
}

fn merge_supernodes(
    a: &CsrMatrix,
    adj: &Adjacency,
    initial: &BlockPartition,
    mu: f64,
) -> GraphBlocking {
    let mut state = MergeState::new(a, adj, initial);
    let initial_av_bd = state.av_bd();

    let mut merges = 0;
    let mut candidates = Vec::new();
    for x in 0..state.members.len() {
        if !state.alive[x] {
            continue;
        }
        state.candidates_of(x, &mut candidates);
        for &z in &candidates {
            if !state.alive[z] {
                continue;
            }
            let (cells_after, local_ok) = state.evaluate(x, z, mu);
            if local_ok && state.nnz as f64 >= mu * cells_after as f64 {
                state.merge(x, z, cells_after);
                merges += 1;
            }
        }
    }

    let av_bd = state.av_bd();
    let mut relabel = vec![usize::MAX; state.members.len()];
    let mut next = 0;
    for x in 0..relabel.len() {
        if state.alive[x] {
            relabel[x] = next;
            next += 1;
        }
    }
    let block_of = state.owner.iter().map(|&x| relabel[x]).collect();
    GraphBlocking {
        partition: BlockPartition::from_block_of(block_of)
            .expect("alive supernodes cover all vertices")
            .canonical(),
        av_bd,
        initial_av_bd,
        merges,
    }
}

struct MergeState<'a> {
    adj: &'a Adjacency,
    nnz: usize,
    covered: usize,
    owner: Vec<usize>,
    members: Vec<Vec<usize>>,
    alive: Vec<bool>,
    /// Sorted union of the members' vertex adjacencies.
    adj_union: Vec<Vec<usize>>,
    degree_sum: Vec<usize>,
    /// Σ_{v ∈ X} |adj(v) ∩ X|.
    inner: Vec<usize>,
    /// Block columns `J` with `A(X, J)` nonzero, sorted.
    row_blocks: Vec<Vec<usize>>,
    /// Block rows `I` with `A(I, X)` nonzero, sorted.
    col_blocks: Vec<Vec<usize>>,
}

impl<'a> MergeState<'a> {
    fn new(a: &CsrMatrix, adj: &'a Adjacency, exact: &BlockPartition) -> Self {
        let owner = exact.block_of().to_vec();
        let members = exact.groups();
        let nb = members.len();
        let mut row_blocks: Vec<Vec<usize>> = vec![Vec::new(); nb];
        let mut col_blocks: Vec<Vec<usize>> = vec![Vec::new(); nb];
        for i in 0..a.n_rows() {
            for &c in a.row(i).0 {
                row_blocks[owner[i]].push(owner[c]);
                col_blocks[owner[c]].push(owner[i]);
            }
        }
        for l in row_blocks.iter_mut().chain(col_blocks.iter_mut()) {
            l.sort_unstable();
            l.dedup();
        }
        let size: Vec<usize> = members.iter().map(Vec::len).collect();
        let covered = row_blocks
            .iter()
            .enumerate()
            .map(|(x, l)| l.iter().map(|&j| size[x] * size[j]).sum::<usize>())
            .sum();
        let adj_union = members
            .iter()
            .map(|m| {
                let mut u: Vec<usize> = m
                    .iter()
                    .flat_map(|&v| adj.neighbors(v).iter().copied())
                    .collect();
                u.sort_unstable();
                u.dedup();
                u
            })
            .collect();
        let degree_sum = members
            .iter()
            .map(|m| m.iter().map(|&v| adj.degree(v)).sum())
            .collect();
        let inner = members
            .iter()
            .enumerate()
            .map(|(x, m)| {
                m.iter()
                    .map(|&v| adj.neighbors(v).iter().filter(|&&w| owner[w] == x).count())
                    .sum()
            })
            .collect();
        Self {
            adj,
            nnz: a.nnz(),
            covered,
            owner,
            members,
            alive: vec![true; nb],
            adj_union,
            degree_sum,
            inner,
            row_blocks,
            col_blocks,
        }
    }

    fn av_bd(&self) -> f64 {
        if self.covered == 0 {
            1.0
        } else {
            self.nnz as f64 / self.covered as f64
        }
    }

    fn size(&self, x: usize) -> usize {
        self.members[x].len()
    }

    /// Alive supernodes other than `x` owning a vertex of `adj(x)`, ascending.
    fn candidates_of(&self, x: usize, out: &mut Vec<usize>) {
        out.clear();
        out.extend(
            self.adj_union[x]
                .iter()
                .map(|&w| self.owner[w])
                .filter(|&z| z != x),
        );
        out.sort_unstable();
        out.dedup();
    }

    /// Pattern edges between the members of `x` and `z` (counted from `x`).
    fn cross_edges(&self, x: usize, z: usize) -> usize {
        let (from, to) = if self.degree_sum[x] <= self.degree_sum[z] {
            (x, z)
        } else {
            (z, x)
        };
        self.members[from]
            .iter()
            .map(|&v| {
                self.adj
                    .neighbors(v)
                    .iter()
                    .filter(|&&w| self.owner[w] == to)
                    .count()
            })
            .sum()
    }

    /// Covered cells after merging `z` into `x`, and whether the merged
    /// cross passes the local `N / T >= mu` test.
    fn evaluate(&self, x: usize, z: usize, mu: f64) -> (usize, bool) {
        let w = self.size(x) + self.size(z);
        let adj_w = sorted_union_len(&self.adj_union[x], &self.adj_union[z]);
        let t = 2 * adj_w * w - w * w;
        let inner = self.inner[x] + self.inner[z] + 2 * self.cross_edges(x, z);
        let n = 2 * (self.degree_sum[x] + self.degree_sum[z]) - inner;
        let local_ok = n as f64 >= mu * t as f64;
        if !local_ok {
            return (self.covered, false);
        }

        let sx = self.size(x);
        let sz = self.size(z);
        let s = |j: usize| self.size(j);
        let mut old = 0usize;
        for &j in &self.row_blocks[x] {
            old += sx * s(j);
        }
        for &j in &self.row_blocks[z] {
            old += sz * s(j);
        }
        for &i in &self.col_blocks[x] {
            if i != x && i != z {
                old += s(i) * sx;
            }
        }
        for &i in &self.col_blocks[z] {
            if i != x && i != z {
                old += s(i) * sz;
            }
        }
        let mut new = 0usize;
        let mut has_self = false;
        for_each_union(&self.row_blocks[x], &self.row_blocks[z], |j| {
            if j == x || j == z {
                has_self = true;
            } else {
                new += w * s(j);
            }
        });
        for_each_union(&self.col_blocks[x], &self.col_blocks[z], |i| {
            if i == x || i == z {
                has_self = true;
            } else {
                new += s(i) * w;
            }
        });
        if has_self {
            new += w * w;
        }
        (self.covered - old + new, true)
    }

    fn merge(&mut self, x: usize, z: usize, cells_after: usize) {
        let cross = self.cross_edges(x, z);
        self.inner[x] += self.inner[z] + 2 * cross;
        self.degree_sum[x] += self.degree_sum[z];
        let zu = std::mem::take(&mut self.adj_union[z]);
        self.adj_union[x] = sorted_union(&self.adj_union[x], &zu);

        let zm = std::mem::take(&mut self.members[z]);
        for &v in &zm {
            self.owner[v] = x;
        }
        self.members[x].extend(zm);
        self.members[x].sort_unstable();
        self.alive[z] = false;

        let relabel = |l: &[usize]| {
            let mut out: Vec<usize> = l.iter().map(|&j| if j == z { x } else { j }).collect();
            out.sort_unstable();
            out.dedup();
            out
        };
        let zr = std::mem::take(&mut self.row_blocks[z]);
        let zc = std::mem::take(&mut self.col_blocks[z]);
        let rows = relabel(&sorted_union(&self.row_blocks[x], &zr));
        let cols = relabel(&sorted_union(&self.col_blocks[x], &zc));
        // neighbors see z replaced by x
        for &j in &rows {
            if j != x {
                self.col_blocks[j] = relabel(&self.col_blocks[j]);
            }
        }
        for &i in &cols {
            if i != x {
                self.row_blocks[i] = relabel(&self.row_blocks[i]);
            }
        }
        self.row_blocks[x] = rows;
        self.col_blocks[x] = cols;
        self.covered = cells_after;
    }
}

fn sorted_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    for_each_union(a, b, |v| out.push(v));
    out
}

fn sorted_union_len(a: &[usize], b: &[usize]) -> usize {
    let mut n = 0;
    for_each_union(a, b, |_| n += 1);
    n
}

fn for_each_union(a: &[usize], b: &[usize], mut f: impl FnMut(usize)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        f(v);
    }
}
