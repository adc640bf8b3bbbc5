//! Seeded synthetic matrices with planted block structure.
//!
//! Everything here is deterministic given its seed (ChaCha8).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparse::{BlockPartition, CsrMatrix, Permutation};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 1D Laplacian `tridiag(-1, 2, -1)`.
pub fn laplacian_1d(n: usize) -> CsrMatrix {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, 2.0));
        if i > 0 {
            t.push((i, i - 1, -1.0));
        }
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).expect("valid stencil")
}

/// 5-point Laplacian on an `nx x ny` grid, row-major numbering.
pub fn laplacian_2d(nx: usize, ny: usize) -> CsrMatrix {
    convection_diffusion_2d(nx, ny, 0.0)
}

/// 7-point Laplacian on an `n x n x n` grid.
pub fn laplacian_3d(n: usize) -> CsrMatrix {
    let idx = |x: usize, y: usize, z: usize| (z * n + y) * n + x;
    let mut t = Vec::new();
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let i = idx(x, y, z);
                t.push((i, i, 6.0));
                let mut nb = |c: usize| t.push((i, c, -1.0));
                if x > 0 {
                    nb(idx(x - 1, y, z));
                }
                if x + 1 < n {
                    nb(idx(x + 1, y, z));
                }
                if y > 0 {
                    nb(idx(x, y - 1, z));
                }
                if y + 1 < n {
                    nb(idx(x, y + 1, z));
                }
                if z > 0 {
                    nb(idx(x, y, z - 1));
                }
                if z + 1 < n {
                    nb(idx(x, y, z + 1));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n * n * n, n * n * n, &t).expect("valid stencil")
}

/// Upwind convection-diffusion on an `nx x ny` grid with wind `beta` along
/// both axes; `beta = 0` is the 5-point Laplacian.
pub fn convection_diffusion_2d(nx: usize, ny: usize, beta: f64) -> CsrMatrix {
    let n = nx * ny;
    let h = 1.0 / (nx.max(ny) + 1) as f64;
    let c = beta * h;
    let mut t = Vec::with_capacity(5 * n);
    for y in 0..ny {
        for x in 0..nx {
            let i = y * nx + x;
            t.push((i, i, 4.0 + 2.0 * c));
            if x > 0 {
                t.push((i, i - 1, -1.0 - c));
            }
            if x + 1 < nx {
                t.push((i, i + 1, -1.0));
            }
            if y > 0 {
                t.push((i, i - nx, -1.0 - c));
            }
            if y + 1 < ny {
                t.push((i, i + nx, -1.0));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t).expect("valid stencil")
}

/// Diagonally dominant random nonsymmetric matrix with about `density * n`
/// off-diagonal entries per row.
pub fn random_nonsymmetric(n: usize, density: f64, seed: u64) -> CsrMatrix {
    let mut r = rng(seed);
    let mut t = Vec::new();
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            if j != i && r.gen_bool(density) {
                let v: f64 = r.gen_range(-1.0..1.0);
                sum += v.abs();
                t.push((i, j, v));
            }
        }
        t.push((i, i, 1.1 * sum + 0.5));
    }
    CsrMatrix::from_triplets(n, n, &t).expect("valid triplets")
}

/// Replaces every scalar `(i, j)` of `base` by a `dofs[i] x dofs[j]` block
/// of perturbed copies of the entry. Off-diagonal cells are kept with
/// probability `keep` (diagonal blocks stay dense), so `keep = 1` plants
/// exact blocks. Diagonals are then made mildly dominant.
pub fn expand_blocks(
    base: &CsrMatrix,
    dofs: &[usize],
    keep: f64,
    seed: u64,
) -> (CsrMatrix, BlockPartition) {
    assert_eq!(dofs.len(), base.n_rows());
    let mut r = rng(seed);
    let mut start = vec![0usize; dofs.len() + 1];
    for (i, &d) in dofs.iter().enumerate() {
        start[i + 1] = start[i] + d;
    }
    let n = start[dofs.len()];
    let mut t = Vec::new();
    let mut offsum = vec![0.0f64; n];
    for i in 0..base.n_rows() {
        let (cols, vals) = base.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            for a in start[i]..start[i + 1] {
                for b in start[j]..start[j + 1] {
                    if a == b {
                        continue;
                    }
                    if i != j && !r.gen_bool(keep) {
                        continue;
                    }
                    let scale = if i == j { 0.3 } else { 1.0 };
                    let w = scale * v.abs().max(0.1) * r.gen_range(-1.0..1.0);
                    offsum[a] += w.abs();
                    t.push((a, b, w));
                }
            }
        }
    }
    for (a, s) in offsum.iter().enumerate() {
        t.push((a, a, 1.05 * s + 0.1));
    }
    let groups: Vec<Vec<usize>> = (0..dofs.len())
        .map(|i| (start[i]..start[i + 1]).collect())
        .collect();
    let partition = BlockPartition::from_groups(n, &groups).expect("groups cover 0..n");
    (
        CsrMatrix::from_triplets(n, n, &t).expect("valid triplets"),
        partition,
    )
}

/// Block tridiagonal matrix with random block sizes in `1..=max_block`.
pub fn block_tridiagonal(
    n_blocks: usize,
    max_block: usize,
    seed: u64,
) -> (CsrMatrix, BlockPartition) {
    let mut r = rng(seed);
    let dofs: Vec<usize> = (0..n_blocks).map(|_| r.gen_range(1..=max_block)).collect();
    expand_blocks(&laplacian_1d(n_blocks), &dofs, 1.0, seed ^ 0x5eed)
}

/// Random matrix with planted dense blocks of sizes `2..=6`, coupled along
/// a random supernode graph (a path plus random chords), rows shuffled.
/// Every planted block has a distinct closed neighborhood in the quotient
/// graph, so the returned partition is exactly the row-pattern partition.
pub fn planted_blocks(n_super: usize, seed: u64) -> (CsrMatrix, BlockPartition) {
    assert!(n_super >= 3);
    let mut r = rng(seed);
    let sizes: Vec<usize> = (0..n_super).map(|_| r.gen_range(2..=6)).collect();
    let mut nbrs: Vec<Vec<usize>> = loop {
        let mut nb: Vec<Vec<usize>> = (0..n_super).map(|s| vec![s]).collect();
        for s in 0..n_super - 1 {
            nb[s].push(s + 1);
            nb[s + 1].push(s);
        }
        for _ in 0..n_super {
            let (a, b) = (r.gen_range(0..n_super), r.gen_range(0..n_super));
            if a != b {
                nb[a].push(b);
                nb[b].push(a);
            }
        }
        for l in nb.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        let mut sorted = nb.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() == n_super {
            break nb;
        }
    };
    let mut start = vec![0usize; n_super + 1];
    for s in 0..n_super {
        start[s + 1] = start[s] + sizes[s];
    }
    let n = start[n_super];
    let mut t = Vec::new();
    let mut offsum = vec![0.0f64; n];
    for (s, list) in nbrs.iter_mut().enumerate() {
        for &q in list.iter() {
            for a in start[s]..start[s + 1] {
                for b in start[q]..start[q + 1] {
                    if a != b {
                        // keep every cell nonzero so blocks are fully dense
                        let w: f64 =
                            r.gen_range(0.1..1.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
                        offsum[a] += w.abs();
                        t.push((a, b, w));
                    }
                }
            }
        }
    }
    for (a, s) in offsum.iter().enumerate() {
        t.push((a, a, 1.05 * s + 0.1));
    }
    let mut forward: Vec<usize> = (0..n).collect();
    forward.shuffle(&mut r);
    let p = Permutation::try_from_forward(forward).expect("shuffle is a permutation");
    let a = CsrMatrix::from_triplets(n, n, &t).expect("valid triplets");
    let a = a.permute(&p, &p).expect("dimensions match");
    let block_of: Vec<usize> = (0..n)
        .map(|new| {
            let old = p.inverse()[new];
            start.partition_point(|&s| s <= old) - 1
        })
        .collect();
    let partition = BlockPartition::from_block_of(block_of)
        .expect("dense ids")
        .canonical();
    (a, partition)
}

#[derive(Debug, Clone)]
pub struct CorpusMatrix {
    pub name: &'static str,
    pub matrix: CsrMatrix,
}

/// The ten-matrix desk corpus used by the property and acceptance tests.
pub fn desk_corpus() -> Vec<CorpusMatrix> {
    let mut out = Vec::with_capacity(10);
    let mut push = |name, matrix| out.push(CorpusMatrix { name, matrix });
    push("lap2d_20", laplacian_2d(20, 20));
    push("lap3d_8", laplacian_3d(8));
    push(
        "lap2d_3dof",
        expand_blocks(&laplacian_2d(15, 15), &[3; 225], 1.0, 11).0,
    );
    push(
        "lap3d_4dof_perturbed",
        expand_blocks(&laplacian_3d(6), &[4; 216], 0.85, 12).0,
    );
    push("convdiff_25", convection_diffusion_2d(25, 25, 40.0));
    push("random_nonsym_500", random_nonsymmetric(500, 0.01, 13));
    push("block_tridiag", block_tridiagonal(150, 6, 14).0);
    push("planted_blocks", planted_blocks(120, 15).0);
    let mut r = rng(16);
    let dofs: Vec<usize> = (0..14 * 14).map(|_| r.gen_range(2..=5)).collect();
    push(
        "lap2d_vardof_perturbed",
        expand_blocks(&laplacian_2d(14, 14), &dofs, 0.9, 17).0,
    );
    push(
        "convdiff_3dof_perturbed",
        expand_blocks(&convection_diffusion_2d(12, 12, 20.0), &[3; 144], 0.8, 18).0,
    );
    out
}
