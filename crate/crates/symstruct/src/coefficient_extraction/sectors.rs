//! Block storage for joint-space operators generated from `X ⊗ ρ_E` by
//! repeated commutators with `H_SE`.
//!
//! The joint space splits into the connected components ("sectors") of the
//! nonzero pattern of `H_SE`; in a sector-ordered basis `H_SE` is block
//! diagonal, so `[H_SE, Y]` maps the `(a, b)` block of `Y` to itself:
//! `[H, Y]_ab = H_a Y_ab − Y_ab H_b`. Only the blocks present in `X ⊗ ρ_E`
//! are ever stored. For excitation-conserving couplings the sectors are the
//! excitation-number subspaces and this saves most of the work; for a
//! fully connected coupling it degenerates to one dense block.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::operator_algebra::{CMatrix, SparseMatrix, C64, ZERO};

#[derive(Clone, Debug)]
pub(crate) struct Sectors {
    n: usize,
    ne: usize,
    sector_of: Vec<usize>,
    local_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    blocks: Vec<SparseMatrix>,
}

/// Operator stored as dense blocks `(a, b, Y_ab)`, sorted by `(a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct BlockOp {
    blocks: Vec<(usize, usize, CMatrix)>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl Sectors {
    pub(crate) fn new(h: &SparseMatrix, n: usize, ne: usize) -> Self {
        let d = n * ne;
        let mut parent: Vec<usize> = (0..d).collect();
        let trip = h.triplets();
        for &(r, c, _) in &trip {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut id_of_root = vec![usize::MAX; d];
        let mut sector_of = vec![0; d];
        let mut local_of = vec![0; d];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for g in 0..d {
            let r = find(&mut parent, g);
            if id_of_root[r] == usize::MAX {
                id_of_root[r] = members.len();
                members.push(Vec::new());
            }
            let s = id_of_root[r];
            sector_of[g] = s;
            local_of[g] = members[s].len();
            members[s].push(g);
        }
        let mut per: Vec<Vec<(usize, usize, C64)>> = vec![Vec::new(); members.len()];
        for (r, c, v) in trip {
            per[sector_of[r]].push((local_of[r], local_of[c], v));
        }
        let blocks = per
            .into_iter()
            .zip(&members)
            .map(|(t, m)| SparseMatrix::from_triplets(m.len(), m.len(), t))
            .collect();
        Sectors { n, ne, sector_of, local_of, members, blocks }
    }

    #[cfg(test)]
    pub(crate) fn count(&self) -> usize {
        self.members.len()
    }

    /// Blocks of `x ⊗ ρ_E`.
    pub(crate) fn lift(&self, x: &CMatrix, rho_e: &CMatrix) -> BlockOp {
        let ne = self.ne;
        let mut map: BTreeMap<(usize, usize), CMatrix> = BTreeMap::new();
        let rho_nz: Vec<(usize, usize, C64)> = (0..ne)
            .flat_map(|e| (0..ne).map(move |f| (e, f)))
            .filter_map(|(e, f)| {
                let v = rho_e[(e, f)];
                (v != ZERO).then_some((e, f, v))
            })
            .collect();
        for s in 0..self.n {
            for s2 in 0..self.n {
                let xv = x[(s, s2)];
                if xv == ZERO {
                    continue;
                }
                for &(e, f, v) in &rho_nz {
                    let (g, g2) = (s * ne + e, s2 * ne + f);
                    let (a, b) = (self.sector_of[g], self.sector_of[g2]);
                    let blk = map
                        .entry((a, b))
                        .or_insert_with(|| CMatrix::zeros(self.members[a].len(), self.members[b].len()));
                    blk[(self.local_of[g], self.local_of[g2])] += xv * v;
                }
            }
        }
        BlockOp { blocks: map.into_iter().map(|((a, b), m)| (a, b, m)).collect() }
    }

    /// `[H_SE, y]`, block by block.
    pub(crate) fn ad(&self, y: &BlockOp) -> Result<BlockOp> {
        let blocks = y
            .blocks
            .iter()
            .map(|(a, b, m)| {
                let z = self.blocks[*a].mul_dense(m)? - self.blocks[*b].dense_mul(m)?;
                Ok((*a, *b, z))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockOp { blocks })
    }

    /// `tr_E(y)`.
    pub(crate) fn partial_trace(&self, y: &BlockOp) -> CMatrix {
        let (n, ne) = (self.n, self.ne);
        let mut out = CMatrix::zeros(n, n);
        for (a, b, m) in &y.blocks {
            for (i, &g) in self.members[*a].iter().enumerate() {
                let (s, e) = (g / ne, g % ne);
                for s2 in 0..n {
                    let g2 = s2 * ne + e;
                    if self.sector_of[g2] == *b {
                        out[(s, s2)] += m[(i, self.local_of[g2])];
                    }
                }
            }
        }
        out
    }
}

impl BlockOp {
    pub(crate) fn scale(mut self, s: C64) -> Self {
        for (_, _, m) in &mut self.blocks {
            *m *= s;
        }
        self
    }

    /// `self + s·other` for operators with the same block pattern.
    pub(crate) fn axpy(mut self, s: C64, other: &BlockOp) -> Self {
        debug_assert_eq!(self.blocks.len(), other.blocks.len());
        for ((a, b, m), (a2, b2, o)) in self.blocks.iter_mut().zip(&other.blocks) {
            debug_assert_eq!((*a, *b), (*a2, *b2));
            *m += o * s;
        }
        self
    }
}
