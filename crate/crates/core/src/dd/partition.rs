use std::collections::VecDeque;

use crate::compression::QuotientGraph;

use super::DdError;

/// Assignment of supernodes to domains.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMap {
    n_domains: usize,
    owner: Vec<usize>,
    domain_supernodes: Vec<Vec<usize>>,
    domain_rows: Vec<Vec<usize>>,
}

impl DomainMap {
    /// Builds a map from a supernode -> domain array (e.g. read from a
    /// partition file). Every domain must own at least one supernode.
    pub fn from_assignment(
        qg: &QuotientGraph,
        owner: Vec<usize>,
        n_domains: usize,
    ) -> Result<Self, DdError> {
        if owner.len() != qg.n_supernodes() {
            return Err(DdError::InvalidDomains(format!(
                "assignment has {} entries for {} supernodes",
                owner.len(),
                qg.n_supernodes()
            )));
        }
        let mut domain_supernodes = vec![Vec::new(); n_domains];
        for (s, &d) in owner.iter().enumerate() {
            if d >= n_domains {
                return Err(DdError::InvalidDomains(format!(
                    "supernode {s} assigned to domain {d} >= {n_domains}"
                )));
            }
            domain_supernodes[d].push(s);
        }
        if let Some(d) = domain_supernodes.iter().position(Vec::is_empty) {
            return Err(DdError::InvalidDomains(format!(
                "domain {d} owns no supernode"
            )));
        }
        let domain_rows = domain_supernodes
            .iter()
            .map(|list| {
                list.iter()
                    .flat_map(|&s| qg.members(s).iter().copied())
                    .collect()
            })
            .collect();
        Ok(Self {
            n_domains,
            owner,
            domain_supernodes,
            domain_rows,
        })
    }

    pub fn n_domains(&self) -> usize {
        self.n_domains
    }

    /// Supernode -> domain.
    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    /// Supernodes of each domain, ascending.
    pub fn domain_supernodes(&self) -> &[Vec<usize>] {
        &self.domain_supernodes
    }

    /// Rows of each domain, unrolled from its supernodes in ascending order.
    pub fn domain_rows(&self) -> &[Vec<usize>] {
        &self.domain_rows
    }

    /// Row -> domain.
    pub fn row_owner(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (d, rows) in self.domain_rows.iter().enumerate() {
            for &r in rows {
                out[r] = d;
            }
        }
        out
    }
}

/// BFS distances from `sources` (usize::MAX when unreachable).
fn distances(qg: &QuotientGraph, sources: &[usize]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; qg.n_supernodes()];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(s) = queue.pop_front() {
        for &t in qg.neighbors(s) {
            if dist[t] == usize::MAX {
                dist[t] = dist[s] + 1;
                queue.push_back(t);
            }
        }
    }
    dist
}

/// Splits the quotient graph into `p` domains by greedy BFS growth.
///
/// Seeds: supernode 0, then repeatedly the supernode farthest from all
/// chosen seeds (unreachable counts as farthest, ties by id). Growth: the
/// domain with the fewest rows (ties by id) that can still grow claims the
/// next unassigned supernode of its BFS frontier. When no domain can grow
/// but supernodes remain (disconnected graph), the smallest unassigned
/// supernode reseeds the lightest domain.
pub fn partition_quotient_graph(qg: &QuotientGraph, p: usize) -> Result<DomainMap, DdError> {
    let ns = qg.n_supernodes();
    if p == 0 || p > ns {
        return Err(DdError::InvalidDomains(format!(
            "cannot split {ns} supernodes into {p} domains"
        )));
    }
    let mut seeds = vec![0usize];
    let mut dist = distances(qg, &seeds);
    while seeds.len() < p {
        let next = (0..ns)
            .filter(|s| !seeds.contains(s))
            .max_by(|&a, &b| dist[a].cmp(&dist[b]).then(b.cmp(&a)))
            .expect("p <= supernodes");
        seeds.push(next);
        let d = distances(qg, &[next]);
        for (x, y) in dist.iter_mut().zip(d) {
            *x = (*x).min(y);
        }
    }

    let mut owner = vec![usize::MAX; ns];
    let mut weight = vec![0usize; p];
    let mut frontier: Vec<VecDeque<usize>> = vec![VecDeque::new(); p];
    let mut assigned = 0;
    let claim = |d: usize,
                 s: usize,
                 owner: &mut Vec<usize>,
                 weight: &mut Vec<usize>,
                 frontier: &mut Vec<VecDeque<usize>>| {
        owner[s] = d;
        weight[d] += qg.weight(s);
        for &t in qg.neighbors(s) {
            if owner[t] == usize::MAX {
                frontier[d].push_back(t);
            }
        }
    };
    for (d, &s) in seeds.iter().enumerate() {
        claim(d, s, &mut owner, &mut weight, &mut frontier);
        assigned += 1;
    }
    while assigned < ns {
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by_key(|&d| (weight[d], d));
        let mut grew = false;
        for &d in &order {
            while let Some(s) = frontier[d].pop_front() {
                if owner[s] == usize::MAX {
                    claim(d, s, &mut owner, &mut weight, &mut frontier);
                    assigned += 1;
                    grew = true;
                    break;
                }
            }
            if grew {
                break;
            }
        }
        if !grew {
            let s = owner
                .iter()
                .position(|&o| o == usize::MAX)
                .expect("unassigned supernode");
            claim(order[0], s, &mut owner, &mut weight, &mut frontier);
            assigned += 1;
        }
    }
    DomainMap::from_assignment(qg, owner, p)
}
