use super::SparseError;

/// A bijection on `0..n` stored in both directions.
///
/// `forward[old] = new` and `inverse[new] = old`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    pub fn try_from_forward(forward: Vec<usize>) -> Result<Self, SparseError> {
        let inverse = invert(&forward)?;
        Ok(Self { forward, inverse })
    }

    /// Builds the permutation from the list of old indices in their new order.
    pub fn try_from_inverse(inverse: Vec<usize>) -> Result<Self, SparseError> {
        let forward = invert(&inverse)?;
        Ok(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn inverted(&self) -> Permutation {
        Permutation {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &f)| i == f)
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &Permutation) -> Result<Permutation, SparseError> {
        if first.len() != self.len() {
            return Err(SparseError::DimensionMismatch {
                expected: self.len(),
                got: first.len(),
            });
        }
        let forward = first.forward.iter().map(|&m| self.forward[m]).collect();
        Permutation::try_from_forward(forward)
    }

    /// `(P v)[new] = v[inverse[new]]`.
    pub fn apply<T: Copy>(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.len());
        self.inverse.iter().map(|&old| v[old]).collect()
    }

    /// `(P^T v)[old] = v[forward[old]]`.
    pub fn apply_inverse<T: Copy>(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.len());
        self.forward.iter().map(|&new| v[new]).collect()
    }
}

fn invert(map: &[usize]) -> Result<Vec<usize>, SparseError> {
    let n = map.len();
    let mut inv = vec![usize::MAX; n];
    for (i, &m) in map.iter().enumerate() {
        if m >= n {
            return Err(SparseError::InvalidPermutation(format!(
                "index {m} out of range 0..{n}"
            )));
        }
        if inv[m] != usize::MAX {
            return Err(SparseError::InvalidPermutation(format!(
                "index {m} repeated"
            )));
        }
        inv[m] = i;
    }
    Ok(inv)
}
