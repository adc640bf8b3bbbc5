use super::{Permutation, SparseError};

/// An ordered partition of `0..n` into blocks.
///
/// Block `b` holds the indices `i` with `block_of[i] == b`, listed in
/// ascending order. `block_order` fixes the order in which blocks appear
/// after the induced permutation is applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    block_of: Vec<usize>,
    block_sizes: Vec<usize>,
    block_order: Vec<usize>,
}

impl BlockPartition {
    /// Builds a partition from a block id per index. Ids must be dense in
    /// `0..n_blocks`; blocks are ordered by id.
    pub fn from_block_of(block_of: Vec<usize>) -> Result<Self, SparseError> {
        let n_blocks = block_of.iter().map(|&b| b + 1).max().unwrap_or(0);
        let mut block_sizes = vec![0usize; n_blocks];
        for &b in &block_of {
            block_sizes[b] += 1;
        }
        if let Some(b) = block_sizes.iter().position(|&s| s == 0) {
            return Err(SparseError::InvalidPartition(format!("block {b} is empty")));
        }
        Ok(Self {
            block_of,
            block_sizes,
            block_order: (0..n_blocks).collect(),
        })
    }

    /// Builds a partition from explicit groups; group `k` becomes block `k`.
    pub fn from_groups(n: usize, groups: &[Vec<usize>]) -> Result<Self, SparseError> {
        let mut block_of = vec![usize::MAX; n];
        for (b, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(SparseError::InvalidPartition(format!("block {b} is empty")));
            }
            for &i in g {
                if i >= n {
                    return Err(SparseError::InvalidPartition(format!(
                        "index {i} out of range"
                    )));
                }
                if block_of[i] != usize::MAX {
                    return Err(SparseError::InvalidPartition(format!(
                        "index {i} appears in more than one block"
                    )));
                }
                block_of[i] = b;
            }
        }
        if let Some(i) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(SparseError::InvalidPartition(format!(
                "index {i} not covered"
            )));
        }
        Self::from_block_of(block_of)
    }

    /// Every index in its own block.
    pub fn singletons(n: usize) -> Self {
        Self {
            block_of: (0..n).collect(),
            block_sizes: vec![1; n],
            block_order: (0..n).collect(),
        }
    }

    /// Contiguous blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self, SparseError> {
        let block_of = sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
            .collect();
        Self::from_block_of(block_of)
    }

    pub fn with_block_order(mut self, order: Vec<usize>) -> Result<Self, SparseError> {
        Permutation::try_from_inverse(order.clone())
            .ok()
            .filter(|p| p.len() == self.n_blocks())
            .ok_or_else(|| {
                SparseError::InvalidPartition("block_order is not a permutation".into())
            })?;
        self.block_order = order;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn n_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn block_order(&self) -> &[usize] {
        &self.block_order
    }

    /// Members of each block, ascending, indexed by block id.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = self
            .block_sizes
            .iter()
            .map(|&s| Vec::with_capacity(s))
            .collect();
        for (i, &b) in self.block_of.iter().enumerate() {
            groups[b].push(i);
        }
        groups
    }

    /// The permutation `P_B` listing each block's members contiguously, in
    /// `block_order`.
    pub fn permutation(&self) -> Permutation {
        let groups = self.groups();
        let order: Vec<usize> = self
            .block_order
            .iter()
            .flat_map(|&b| groups[b].iter().copied())
            .collect();
        Permutation::try_from_inverse(order).expect("partition induces a bijection")
    }

    /// Block sizes in permuted order, i.e. the layout of `P_B A P_B^T`.
    pub fn layout(&self) -> BlockLayout {
        BlockLayout::from_sizes(self.block_order.iter().map(|&b| self.block_sizes[b]))
    }

    /// Whether the induced permutation is the identity.
    pub fn is_contiguous(&self) -> bool {
        let mut expected = 0;
        let mut offset = 0;
        for &b in &self.block_order {
            for i in offset..offset + self.block_sizes[b] {
                if self.block_of[i] != b {
                    return false;
                }
            }
            offset += self.block_sizes[b];
            expected += 1;
        }
        expected == self.n_blocks()
    }

    /// Renumbers blocks by their smallest member so that equal partitions
    /// compare equal regardless of labelling.
    pub fn canonical(&self) -> BlockPartition {
        let mut relabel = vec![usize::MAX; self.n_blocks()];
        let mut next = 0;
        let mut block_of = Vec::with_capacity(self.len());
        for &b in &self.block_of {
            if relabel[b] == usize::MAX {
                relabel[b] = next;
                next += 1;
            }
            block_of.push(relabel[b]);
        }
        BlockPartition::from_block_of(block_of).expect("relabelled partition is valid")
    }
}

/// Offsets of contiguous blocks: block `k` spans `offsets[k]..offsets[k+1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn from_sizes(sizes: impl IntoIterator<Item = usize>) -> Self {
        let mut offsets = vec![0];
        for s in sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Self { offsets }
    }

    pub fn uniform(n: usize, block: usize) -> Self {
        assert!(block > 0);
        Self::from_sizes((0..n).step_by(block).map(|s| block.min(n - s)))
    }

    pub fn n_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    #[inline]
    pub fn size(&self, k: usize) -> usize {
        self.offsets[k + 1] - self.offsets[k]
    }

    #[inline]
    pub fn start(&self, k: usize) -> usize {
        self.offsets[k]
    }

    #[inline]
    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    /// Block containing each scalar index.
    pub fn block_of(&self) -> Vec<usize> {
        (0..self.n_blocks())
            .flat_map(|k| std::iter::repeat_n(k, self.size(k)))
            .collect()
    }

    /// Layout of the blocks `first..` only.
    pub fn tail(&self, first: usize) -> BlockLayout {
        BlockLayout::from_sizes((first..self.n_blocks()).map(|k| self.size(k)))
    }

    pub fn head(&self, count: usize) -> BlockLayout {
        BlockLayout::from_sizes((0..count).map(|k| self.size(k)))
    }

    pub fn to_partition(&self) -> BlockPartition {
        BlockPartition::from_block_of(self.block_of()).expect("layout blocks are non-empty")
    }
}
