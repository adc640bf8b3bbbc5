use super::{exact_blocking, CompressionError};
use crate::sparse::{symmetrized_pattern, BlockPartition, CsrMatrix};

/// Approximate blocking by comparing row patterns.
///
/// A checksum pass first groups rows with identical patterns. Every row
/// left alone is then scanned in ascending order and joins the first group
/// (in creation order) whose representative row has pattern cosine at
/// least `tau`; otherwise it starts a new group. The representative of a
/// group is its lowest-index row. Patterns are those of `A + A^T` with the
/// diagonal included, so `tau = 1` reproduces [`exact_blocking`].
pub fn angle_blocking(a: &CsrMatrix, tau: f64) -> Result<BlockPartition, CompressionError> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(CompressionError::ParameterOutOfRange {
            name: "tau",
            value: tau,
        });
    }
    let adj = symmetrized_pattern(a)?;
    let n = adj.n_vertices();
    let exact = exact_blocking(&adj);

    let mut group_of = vec![usize::MAX; n];
    // representative row -> group id
    let mut rep_group = vec![usize::MAX; n];
    let mut n_groups = 0;
    for members in exact.groups() {
        if members.len() > 1 {
            for &v in &members {
                group_of[v] = n_groups;
            }
            rep_group[members[0]] = n_groups;
            n_groups += 1;
        }
    }

    let mut overlap = vec![0usize; n];
    let mut touched: Vec<usize> = Vec::new();
    for i in 0..n {
        if group_of[i] != usize::MAX {
            continue;
        }
        let pi = adj.neighbors(i);
        // |p_i ∩ p_r| for every representative r sharing a column with i;
        // the pattern is symmetric, so the rows holding column c are adj(c)
        for &c in pi {
            for &r in adj.neighbors(c) {
                if rep_group[r] != usize::MAX {
                    if overlap[r] == 0 {
                        touched.push(r);
                    }
                    overlap[r] += 1;
                }
            }
        }
        let mut best: Option<usize> = None;
        for &r in &touched {
            let cos = overlap[r] as f64 / ((pi.len() * adj.degree(r)) as f64).sqrt();
            if cos >= tau {
                let g = rep_group[r];
                if best.is_none_or(|b| g < b) {
                    best = Some(g);
                }
            }
            overlap[r] = 0;
        }
        touched.clear();
        match best {
            Some(g) => group_of[i] = g,
            None => {
                group_of[i] = n_groups;
                rep_group[i] = n_groups;
                n_groups += 1;
            }
        }
    }
    Ok(BlockPartition::from_block_of(group_of)
        .expect("group ids are dense")
        .canonical())
}
