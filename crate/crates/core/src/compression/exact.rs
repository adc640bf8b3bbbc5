use crate::sparse::{Adjacency, BlockPartition};

/// Checksum of every vertex: the wrapping sum of `w + 1` over its
/// neighbors `w` (1-based weights). Equal adjacency lists give equal keys;
/// the converse does not hold.
pub fn checksum_keys(adjacency: &Adjacency) -> Vec<u64> {
    (0..adjacency.n_vertices())
        .map(|u| {
            adjacency
                .neighbors(u)
                .iter()
                .fold(0u64, |acc, &w| acc.wrapping_add(w as u64 + 1))
        })
        .collect()
}

/// Groups vertices with identical adjacency lists (indistinguishable
/// nodes). Candidates are bucketed by checksum and then compared in full.
///
/// Blocks are numbered by their smallest member.
pub fn exact_blocking(adjacency: &Adjacency) -> BlockPartition {
    let n = adjacency.n_vertices();
    let keys = checksum_keys(adjacency);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&v| (keys[v], v));

    let mut block_of = vec![usize::MAX; n];
    let mut n_blocks = 0;
    for (pos, &i) in order.iter().enumerate() {
        if block_of[i] != usize::MAX {
            continue;
        }
        block_of[i] = n_blocks;
        for &j in &order[pos + 1..] {
            if keys[j] != keys[i] {
                break;
            }
            if block_of[j] == usize::MAX && adjacency.neighbors(i) == adjacency.neighbors(j) {
                block_of[j] = n_blocks;
            }
        }
        n_blocks += 1;
    }
    BlockPartition::from_block_of(block_of)
        .expect("every block has a first member")
        .canonical()
}
