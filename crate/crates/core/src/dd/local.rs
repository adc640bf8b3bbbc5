use rayon::prelude::*;

use crate::compression::build_quotient_graph;
use crate::sparse::{symmetrized_pattern, BlockPartition, CsrMatrix};

use super::{DdError, DomainMap};

/// Couplings `E_ij` of a domain's interface rows to the interface unknowns
/// of neighbor `neighbor`; columns follow the neighbor's interface order.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub neighbor: usize,
    pub matrix: CsrMatrix,
}

/// Equations owned by one domain.
///
/// Local unknowns are ordered interior first, then interface. A row is
/// interface when it is coupled, in either direction, to a row owned by
/// another domain.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    domain: usize,
    rows: Vec<usize>,
    n_interior: usize,
    matrix: CsrMatrix,
    partition: BlockPartition,
    owned_partition: BlockPartition,
    ext_rows: Vec<usize>,
    ext_matrix: CsrMatrix,
    ext_partition: BlockPartition,
    couplings: Vec<Coupling>,
}

impl LocalSystem {
    pub fn domain(&self) -> usize {
        self.domain
    }

    /// Owned global rows in local order.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_interface(&self) -> usize {
        self.rows.len() - self.n_interior
    }

    pub fn interior(&self) -> &[usize] {
        &self.rows[..self.n_interior]
    }

    pub fn interface(&self) -> &[usize] {
        &self.rows[self.n_interior..]
    }

    /// `A_i = A(rows, rows)`.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Supernodes of the domain with interior and interface members split
    /// into separate blocks.
    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    /// Supernodes of the domain, unsplit.
    pub fn owned_partition(&self) -> &BlockPartition {
        &self.owned_partition
    }

    /// Owned rows followed by the overlap rows.
    pub fn ext_rows(&self) -> &[usize] {
        &self.ext_rows
    }

    pub fn ext_matrix(&self) -> &CsrMatrix {
        &self.ext_matrix
    }

    pub fn ext_partition(&self) -> &BlockPartition {
        &self.ext_partition
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// `(B, F, E, C)` of the interior / interface splitting of `A_i`.
    pub fn blocks(&self) -> (CsrMatrix, CsrMatrix, CsrMatrix, CsrMatrix) {
        let n = self.rows.len();
        let u: Vec<usize> = (0..self.n_interior).collect();
        let y: Vec<usize> = (self.n_interior..n).collect();
        let m = &self.matrix;
        (
            m.submatrix(&u, &u),
            m.submatrix(&u, &y),
            m.submatrix(&y, &u),
            m.submatrix(&y, &y),
        )
    }
}

/// Splits `a` into per-domain equations. `partition` is the block
/// partition whose blocks are the quotient-graph supernodes `map` was
/// computed on. With `overlap > 0` each domain's extended system also
/// holds the supernodes within `overlap` quotient-graph hops.
pub fn build_local_systems(
    a: &CsrMatrix,
    partition: &BlockPartition,
    map: &DomainMap,
    overlap: usize,
) -> Result<Vec<LocalSystem>, DdError> {
    let n = a.n_rows();
    if !a.is_square() || partition.len() != n {
        return Err(DdError::InvalidDomains(format!(
            "partition of length {} does not fit a {}x{} matrix",
            partition.len(),
            a.n_rows(),
            a.n_cols()
        )));
    }
    if map.owner().len() != partition.n_blocks() {
        return Err(DdError::InvalidDomains(format!(
            "domain map covers {} supernodes, partition has {}",
            map.owner().len(),
            partition.n_blocks()
        )));
    }
    let adj = symmetrized_pattern(a)?;
    let qg = build_quotient_graph(&adj, partition);
    let row_owner = map.row_owner(n);
    let is_interface: Vec<bool> = (0..n)
        .map(|r| {
            adj.neighbors(r)
                .iter()
                .any(|&c| row_owner[c] != row_owner[r])
        })
        .collect();

    let p = map.n_domains();
    // local position of every row inside its domain's interface list
    let mut iface_pos = vec![usize::MAX; n];
    let mut iface_counts = vec![0usize; p];
    for (d, rows) in map.domain_rows().iter().enumerate() {
        for &r in rows {
            if is_interface[r] {
                iface_pos[r] = iface_counts[d];
                iface_counts[d] += 1;
            }
        }
    }

    (0..p)
        .into_par_iter()
        .map(|d| {
            let supernodes = &map.domain_supernodes()[d];
            let owned = &map.domain_rows()[d];
            let mut rows: Vec<usize> = owned
                .iter()
                .copied()
                .filter(|&r| !is_interface[r])
                .collect();
            let n_interior = rows.len();
            rows.extend(owned.iter().copied().filter(|&r| is_interface[r]));

            let mut local = std::collections::HashMap::with_capacity(rows.len());
            for (k, &r) in rows.iter().enumerate() {
                local.insert(r, k);
            }
            let mut split_groups = Vec::new();
            let mut owned_groups = Vec::new();
            for &s in supernodes {
                let members = qg.members(s);
                let inner: Vec<usize> = members
                    .iter()
                    .filter(|&&r| !is_interface[r])
                    .map(|r| local[r])
                    .collect();
                let outer: Vec<usize> = members
                    .iter()
                    .filter(|&&r| is_interface[r])
                    .map(|r| local[r])
                    .collect();
                owned_groups.push(members.iter().map(|r| local[r]).collect::<Vec<_>>());
                split_groups.extend([inner, outer].into_iter().filter(|g| !g.is_empty()));
            }
            let partition = BlockPartition::from_groups(rows.len(), &split_groups)?;
            let owned_partition = BlockPartition::from_groups(rows.len(), &owned_groups)?;
            let matrix = a.submatrix(&rows, &rows);

            // overlap: quotient-graph hops from the owned supernodes
            let mut inside = vec![false; qg.n_supernodes()];
            for &s in supernodes {
                inside[s] = true;
            }
            let mut layer: Vec<usize> = supernodes.clone();
            let mut extra: Vec<usize> = Vec::new();
            for _ in 0..overlap {
                let mut next = Vec::new();
                for &s in &layer {
                    for &t in qg.neighbors(s) {
                        if !inside[t] {
                            inside[t] = true;
                            next.push(t);
                        }
                    }
                }
                if next.is_empty() {
                    break;
                }
                extra.extend_from_slice(&next);
                layer = next;
            }
            extra.sort_unstable();
            let mut ext_rows = rows.clone();
            let mut ext_groups = owned_groups.clone();
            for &s in &extra {
                let start = ext_rows.len();
                ext_rows.extend_from_slice(qg.members(s));
                ext_groups.push((start..ext_rows.len()).collect());
            }
            let ext_partition = BlockPartition::from_groups(ext_rows.len(), &ext_groups)?;
            let ext_matrix = if extra.is_empty() {
                matrix.clone()
            } else {
                a.submatrix(&ext_rows, &ext_rows)
            };

            let mut triplets: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); p];
            for (k, &r) in rows[n_interior..].iter().enumerate() {
                let (cols, vals) = a.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    let j = row_owner[c];
                    if j != d {
                        triplets[j].push((k, iface_pos[c], v));
                    }
                }
            }
            let mut couplings = Vec::new();
            for (j, t) in triplets.into_iter().enumerate() {
                if !t.is_empty() {
                    let matrix =
                        CsrMatrix::from_triplets(rows.len() - n_interior, iface_counts[j], &t)?;
                    couplings.push(Coupling {
                        neighbor: j,
                        matrix,
                    });
                }
            }
            Ok(LocalSystem {
                domain: d,
                rows,
                n_interior,
                matrix,
                partition,
                owned_partition,
                ext_rows,
                ext_matrix,
                ext_partition,
                couplings,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::partition_quotient_graph;
    use crate::gallery::laplacian_2d;

    fn map_for(a: &CsrMatrix, part: &BlockPartition, p: usize) -> DomainMap {
        let qg = build_quotient_graph(&symmetrized_pattern(a).unwrap(), part);
        partition_quotient_graph(&qg, p).unwrap()
    }

    #[test]
    fn single_domain_has_no_interface() {
        let a = laplacian_2d(4, 4);
        let part = BlockPartition::singletons(16);
        let locals = build_local_systems(&a, &part, &map_for(&a, &part, 1), 0).unwrap();
        assert_eq!(locals.len(), 1);
        assert_eq!(locals[0].n_interface(), 0);
        assert!(locals[0].couplings().is_empty());
        assert_eq!(locals[0].matrix(), &a);
    }

    #[test]
    fn block_diagonal_is_all_interior() {
        let a = CsrMatrix::from_dense(
            4,
            4,
            &[
                2.0, 1.0, 0.0, 0.0, //
                1.0, 2.0, 0.0, 0.0, //
                0.0, 0.0, 3.0, 1.0, //
                0.0, 0.0, 1.0, 3.0,
            ],
        );
        let part = BlockPartition::from_block_of(vec![0, 0, 1, 1]).unwrap();
        let qg = build_quotient_graph(&symmetrized_pattern(&a).unwrap(), &part);
        let map = DomainMap::from_assignment(&qg, vec![0, 1], 2).unwrap();
        let locals = build_local_systems(&a, &part, &map, 0).unwrap();
        for l in &locals {
            assert_eq!(l.n_interface(), 0);
            assert!(l.couplings().is_empty());
        }
    }

    #[test]
    fn laplacian_halves_interface_is_the_cut() {
        // 6x6 grid, domain 0 = columns 0..3, domain 1 = columns 3..6
        let a = laplacian_2d(6, 6);
        let part = BlockPartition::singletons(36);
        let qg = build_quotient_graph(&symmetrized_pattern(&a).unwrap(), &part);
        let owner: Vec<usize> = (0..36).map(|i| usize::from(i % 6 >= 3)).collect();
        let map = DomainMap::from_assignment(&qg, owner.clone(), 2).unwrap();
        let locals = build_local_systems(&a, &part, &map, 0).unwrap();
        for l in &locals {
            let mut want: Vec<usize> = l
                .rows()
                .iter()
                .copied()
                .filter(|&r| a.row(r).0.iter().any(|&c| owner[c] != l.domain()))
                .collect();
            want.sort_unstable();
            let mut got = l.interface().to_vec();
            got.sort_unstable();
            assert_eq!(got, want);
            assert!(got.iter().all(|&r| r % 6 == 2 || r % 6 == 3));
            assert_eq!(got.len(), 6);
        }
    }

    #[test]
    fn assembly_reproduces_every_entry_once() {
        let a = laplacian_2d(7, 5);
        let part = BlockPartition::singletons(35);
        let map = map_for(&a, &part, 3);
        let locals = build_local_systems(&a, &part, &map, 0).unwrap();
        let mut count = std::collections::HashMap::new();
        for l in &locals {
            for (i, j, v) in l.matrix().triplets() {
                *count.entry((l.rows()[i], l.rows()[j])).or_insert(0) += 1;
                assert_eq!(a.get(l.rows()[i], l.rows()[j]), Some(v));
            }
            for c in l.couplings() {
                let nb = &locals[c.neighbor];
                for (i, j, v) in c.matrix.triplets() {
                    let (r, col) = (l.interface()[i], nb.interface()[j]);
                    *count.entry((r, col)).or_insert(0) += 1;
                    assert_eq!(a.get(r, col), Some(v));
                }
            }
        }
        assert_eq!(count.len(), a.nnz());
        assert!(count.values().all(|&c| c == 1));
    }

    #[test]
    fn overlap_extends_by_quotient_hops() {
        let a = crate::gallery::laplacian_1d(10);
        let part = BlockPartition::singletons(10);
        let qg = build_quotient_graph(&symmetrized_pattern(&a).unwrap(), &part);
        let owner: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
        let map = DomainMap::from_assignment(&qg, owner, 2).unwrap();
        let locals = build_local_systems(&a, &part, &map, 2).unwrap();
        let mut ext0 = locals[0].ext_rows().to_vec();
        ext0.sort_unstable();
        assert_eq!(ext0, (0..7).collect::<Vec<_>>());
        let mut ext1 = locals[1].ext_rows().to_vec();
        ext1.sort_unstable();
        assert_eq!(ext1, (3..10).collect::<Vec<_>>());
        assert_eq!(&locals[0].ext_rows()[..5], locals[0].rows());
    }
}
