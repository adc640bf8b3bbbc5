use crate::sparse::{Adjacency, BlockPartition, VbcsrMatrix};

/// Graph of supernodes: vertex `s` stands for the members of block `s`;
/// `s` and `t` are adjacent iff some member of `s` is adjacent to some
/// member of `t`. Every supernode is adjacent to itself.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientGraph {
    supernodes: Vec<Vec<usize>>,
    adjacency: Adjacency,
    member_to_supernode: Vec<usize>,
}

impl QuotientGraph {
    pub fn n_supernodes(&self) -> usize {
        self.supernodes.len()
    }

    pub fn supernodes(&self) -> &[Vec<usize>] {
        &self.supernodes
    }

    pub fn members(&self, s: usize) -> &[usize] {
        &self.supernodes[s]
    }

    /// Supernode neighbors of `s`, sorted, `s` included.
    pub fn neighbors(&self, s: usize) -> &[usize] {
        self.adjacency.neighbors(s)
    }

    /// Number of other supernodes adjacent to `s`.
    pub fn degree(&self, s: usize) -> usize {
        let nb = self.neighbors(s);
        nb.len() - usize::from(nb.binary_search(&s).is_ok())
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn member_to_supernode(&self) -> &[usize] {
        &self.member_to_supernode
    }

    /// Scalar rows represented by supernode `s`.
    pub fn weight(&self, s: usize) -> usize {
        self.supernodes[s].len()
    }

    /// Quotient graph of a block matrix: supernodes are its block rows and
    /// edges follow the symmetrized block pattern.
    pub fn from_block_pattern(m: &VbcsrMatrix) -> QuotientGraph {
        let nb = m.n_block_rows();
        assert_eq!(
            nb,
            m.col_layout().n_blocks(),
            "block pattern must be square"
        );
        let mut lists: Vec<Vec<usize>> = (0..nb).map(|s| vec![s]).collect();
        for bi in 0..nb {
            for (bj, _) in m.block_row(bi) {
                if bj != bi {
                    lists[bi].push(bj);
                    lists[bj].push(bi);
                }
            }
        }
        let layout = m.row_layout();
        QuotientGraph {
            supernodes: (0..nb).map(|s| layout.range(s).collect()).collect(),
            adjacency: Adjacency::from_lists(lists),
            member_to_supernode: layout.block_of(),
        }
    }
}

/// Coalesces the vertices of each block of `partition` into a supernode.
/// Supernode ids are the partition's block ids.
pub fn build_quotient_graph(adjacency: &Adjacency, partition: &BlockPartition) -> QuotientGraph {
    assert_eq!(
        adjacency.n_vertices(),
        partition.len(),
        "partition must cover the graph"
    );
    let block_of = partition.block_of();
    let supernodes = partition.groups();
    let mut mark = vec![usize::MAX; supernodes.len()];
    let lists = supernodes
        .iter()
        .enumerate()
        .map(|(s, members)| {
            let mut l = Vec::new();
            for &v in members {
                for &w in adjacency.neighbors(v) {
                    let t = block_of[w];
                    if mark[t] != s {
                        mark[t] = s;
                        l.push(t);
                    }
                }
            }
            if mark[s] != s {
                l.push(s);
            }
            l
        })
        .collect();
    QuotientGraph {
        supernodes,
        adjacency: Adjacency::from_lists(lists),
        member_to_supernode: block_of.to_vec(),
    }
}
