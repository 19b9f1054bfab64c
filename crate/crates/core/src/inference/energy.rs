//! Per-bit quadratic energy and its restriction to one block.

use super::codes::CodeMatrix;
use super::maxflow::FlowGraph;
use crate::blocks::Block;
use crate::data::AffinityStore;
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

/// Coefficients `a_ij` of the stage-wise binary quadratic problem for bit `k`:
///
/// `a_ij = -|y_ij| (k y_ij - Σ_{p<k} z_{p,i} z_{p,j})`
///
/// stored parallel to the affinity's adjacency, so `a_ij` exists exactly
/// where `y_ij` is defined. All values are integers.
#[derive(Debug, Clone)]
pub struct BitEnergy<'a> {
    affinity: &'a AffinityStore,
    k: usize,
    coeffs: Vec<i32>,
}

impl<'a> BitEnergy<'a> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.affinity.n()
    }

    pub fn affinity(&self) -> &'a AffinityStore {
        self.affinity
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[i32]) {
        let r = self.affinity.row_range(i);
        (&self.affinity.neighbors_flat()[r.clone()], &self.coeffs[r])
    }

    /// `a_ij`, or `None` when the pair is undefined.
    pub fn get(&self, i: usize, j: usize) -> Option<i32> {
        let (nb, a) = self.row(i);
        nb.binary_search(&(j as u32)).ok().map(|p| a[p])
    }
}

/// Builds the bit-`k` coefficients from the first `k - 1` rows of `prev`
/// (`k` counts from 1).
pub fn compute_bit_coefficients<'a>(
    k: usize,
    affinity: &'a AffinityStore,
    prev: &CodeMatrix,
    mode: Parallelism,
) -> Result<BitEnergy<'a>> {
    if k < 1 {
        return Err(Error::contract("bit index k counts from 1"));
    }
    if prev.m() < k - 1 {
        return Err(Error::contract(format!(
            "bit {k} needs {} previous bits, code matrix has {}",
            k - 1,
            prev.m()
        )));
    }
    if prev.n() != affinity.n() {
        return Err(Error::contract(format!(
            "code matrix has {} points, affinity has {}",
            prev.n(),
            affinity.n()
        )));
    }
    let kk = k as i64;
    let rows = par::map_indexed(affinity.n(), mode, |i| {
        let (nb, y) = affinity.row(i);
        nb.iter()
            .zip(y)
            .map(|(&j, &y)| {
                let agree = prev.prefix_agreement(i, j as usize, k - 1);
                // |y| = 1 for every stored pair.
                (agree - kk * y as i64) as i32
            })
            .collect::<Vec<i32>>()
    });
    Ok(BitEnergy { affinity, k, coeffs: rows.concat() })
}

/// `Σ_i Σ_j a_ij z_i z_j` over defined ordered pairs.
pub fn bit_objective(z: &[i8], energy: &BitEnergy<'_>, mode: Parallelism) -> i64 {
    assert_eq!(z.len(), energy.n(), "bit assignment length mismatch");
    par::map_indexed(energy.n(), mode, |i| {
        let (nb, a) = energy.row(i);
        let s: i64 = nb.iter().zip(a).map(|(&j, &a)| a as i64 * z[j as usize] as i64).sum();
        s * z[i] as i64
    })
    .into_iter()
    .sum()
}

/// Normalized objective over the first `bits` rows:
/// `Σ_{ij} |y_ij| (bits y_ij - Σ_k z_{k,i} z_{k,j})^2`, divided by the
/// number of defined ordered pairs.
pub fn total_objective(
    codes: &CodeMatrix,
    affinity: &AffinityStore,
    bits: usize,
    mode: Parallelism,
) -> Result<f64> {
    if codes.m() < bits || codes.n() != affinity.n() {
        return Err(Error::contract(format!(
            "code matrix {}x{} cannot supply {bits} bits for {} points",
            codes.m(),
            codes.n(),
            affinity.n()
        )));
    }
    let pairs = affinity.ordered_pair_count();
    if pairs == 0 {
        return Err(Error::Undefined("no defined pairwise relations".into()));
    }
    let b = bits as i64;
    let sum: i64 = par::map_indexed(affinity.n(), mode, |i| {
        let (nb, y) = affinity.row(i);
        nb.iter()
            .zip(y)
            .map(|(&j, &y)| {
                let r = b * y as i64 - codes.prefix_agreement(i, j as usize, bits);
                r * r
            })
            .sum::<i64>()
    })
    .into_iter()
    .sum();
    Ok(sum as f64 / pairs as f64)
}

/// Conditional energy of one block:
/// `E(z) = Σ_i u_i z_i + Σ_i Σ_j v_ij z_i z_j` over block members,
/// the double sum running over ordered pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEnergyTerms {
    pub members: Vec<u32>,
    pub unary: Vec<i64>,
    /// `(p, q, v_pq)` with local indices `p < q`; each unordered pair once.
    pub pairwise: Vec<(u32, u32, i64)>,
}

impl BlockEnergyTerms {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn energy(&self, z: &[i8]) -> i64 {
        let unary: i64 = self.unary.iter().zip(z).map(|(&u, &z)| u * z as i64).sum();
        let pair: i64 = self
            .pairwise
            .iter()
            .map(|&(p, q, v)| v * z[p as usize] as i64 * z[q as usize] as i64)
            .sum();
        unary + 2 * pair
    }

    /// Largest pairwise coefficient, if any.
    pub fn max_pairwise(&self) -> Option<i64> {
        self.pairwise.iter().map(|t| t.2).max()
    }
}

/// Reusable global-to-local index map, so building many block energies
/// costs O(block degree) rather than O(n) each.
#[derive(Debug, Clone)]
pub struct BlockWorkspace {
    local: Vec<u32>,
}

const OUTSIDE: u32 = u32::MAX;

impl BlockWorkspace {
    pub fn new(n: usize) -> Self {
        BlockWorkspace { local: vec![OUTSIDE; n] }
    }

    pub fn terms(&mut self, block: &Block, energy: &BitEnergy<'_>, current: &[i8]) -> BlockEnergyTerms {
        let members = block.members();
        for (p, &i) in members.iter().enumerate() {
            self.local[i as usize] = p as u32;
        }
        let mut unary = Vec::with_capacity(members.len());
        let mut pairwise = Vec::new();
        for (p, &i) in members.iter().enumerate() {
            let (nb, a) = energy.row(i as usize);
            let mut outside = 0i64;
            for (&j, &a) in nb.iter().zip(a) {
                match self.local[j as usize] {
                    OUTSIDE => outside += a as i64 * current[j as usize] as i64,
                    q if q as usize > p => pairwise.push((p as u32, q, a as i64)),
                    _ => {}
                }
            }
            unary.push(2 * outside);
        }
        for &i in members {
            self.local[i as usize] = OUTSIDE;
        }
        BlockEnergyTerms { members: members.to_vec(), unary, pairwise }
    }
}

/// `u_i = 2 Σ_{j ∉ B} a_ij ẑ_j` and `v_ij = a_ij` for `i, j ∈ B`.
pub fn block_energy_terms(block: &Block, energy: &BitEnergy<'_>, current: &[i8]) -> BlockEnergyTerms {
    BlockWorkspace::new(energy.n()).terms(block, energy, current)
}

/// Exact minimizer of a submodular block energy via one s-t min cut.
///
/// Node `p` on the source side of the cut means `z_p = +1`. A positive
/// `u_p` becomes arc `p -> t` of capacity `2 u_p`, a negative one arc
/// `s -> p` of capacity `-2 u_p`; each pair contributes arcs `p <-> q` of
/// capacity `-4 v_pq` (the two ordered copies of the pair, doubled by the
/// ±1-to-{0,1} change of variables). Among several minimizers the one with
/// the smallest source side is returned, so unforced variables read -1.
pub fn solve_block_mincut(terms: &BlockEnergyTerms) -> Result<Vec<i8>> {
    if let Some(&(p, q, v)) = terms.pairwise.iter().find(|t| t.2 > 0) {
        return Err(Error::NotSubmodular {
            i: terms.members[p as usize],
            j: terms.members[q as usize],
            value: v,
        });
    }
    let b = terms.len();
    if b == 1 {
        return Ok(vec![if terms.unary[0] < 0 { 1 } else { -1 }]);
    }
    let (s, t) = (b, b + 1);
    let mut g = FlowGraph::new(b + 2);
    for (p, &u) in terms.unary.iter().enumerate() {
        if u > 0 {
            g.add_edge(p, t, 2 * u, 0);
        } else if u < 0 {
            g.add_edge(s, p, -2 * u, 0);
        }
    }
    for &(p, q, v) in &terms.pairwise {
        if v < 0 {
            g.add_edge(p as usize, q as usize, -4 * v, -4 * v);
        }
    }
    g.max_flow(s, t);
    let side = g.source_side(s);
    Ok((0..b).map(|p| if side[p] { 1 } else { -1 }).collect())
}
