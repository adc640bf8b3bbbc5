use super::{CsrMatrix, SparseError};

/// Undirected pattern graph in compressed form. Neighbor lists are sorted
/// ascending and, for graphs built by [`symmetrized_pattern`], contain the
/// vertex itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    ptr: Vec<usize>,
    idx: Vec<usize>,
}

impl Adjacency {
    /// Builds a graph from per-vertex neighbor lists. Lists are sorted and
    /// deduplicated; symmetry is the caller's responsibility.
    pub fn from_lists(lists: Vec<Vec<usize>>) -> Self {
        let mut ptr = vec![0];
        let mut idx = Vec::new();
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            idx.extend_from_slice(&l);
            ptr.push(idx.len());
        }
        Self { ptr, idx }
    }

    pub fn n_vertices(&self) -> usize {
        self.ptr.len() - 1
    }

    /// Total length of all neighbor lists (self-loops included).
    pub fn n_entries(&self) -> usize {
        self.idx.len()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.idx[self.ptr[v]..self.ptr[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.ptr[v + 1] - self.ptr[v]
    }
}

/// Pattern of `A + A^T` with every vertex adjacent to itself.
pub fn symmetrized_pattern(a: &CsrMatrix) -> Result<Adjacency, SparseError> {
    if !a.is_square() {
        return Err(SparseError::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        });
    }
    let n = a.n_rows();
    let at = a.transpose();
    let mut ptr = Vec::with_capacity(n + 1);
    let mut idx = Vec::with_capacity(2 * a.nnz() + n);
    ptr.push(0);
    for i in 0..n {
        // three-way merge of row i of A, row i of A^T and {i}
        let (r, _) = a.row(i);
        let (c, _) = at.row(i);
        let (mut p, mut q) = (0, 0);
        let mut self_done = false;
        loop {
            let next_r = r.get(p).copied().unwrap_or(usize::MAX);
            let next_c = c.get(q).copied().unwrap_or(usize::MAX);
            let next_s = if self_done { usize::MAX } else { i };
            let m = next_r.min(next_c).min(next_s);
            if m == usize::MAX {
                break;
            }
            idx.push(m);
            if next_r == m {
                p += 1;
            }
            if next_c == m {
                q += 1;
            }
            if next_s == m {
                self_done = true;
            }
        }
        ptr.push(idx.len());
    }
    Ok(Adjacency { ptr, idx })
}
