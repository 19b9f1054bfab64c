//! Greedy construction of blocks with no internal dissimilar pair.
//!
//! Inside such a block every pairwise coefficient of the per-bit energy is
//! nonpositive, so the block's conditional energy is submodular and can be
//! minimized exactly with one s-t min cut.

use rand::Rng;

use crate::data::AffinityStore;
use crate::seed;

/// A set of point ids, kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    members: Vec<u32>,
}

impl Block {
    pub fn new(mut members: Vec<u32>) -> Self {
        members.sort_unstable();
        members.dedup();
        Block { members }
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: u32) -> bool {
        self.members.binary_search(&i).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Block>,
    n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlockStats {
    pub count: usize,
    pub mean_size: f64,
    pub max_size: usize,
    pub min_size: usize,
    /// Sum of block sizes divided by `n`; above 1 when blocks overlap.
    pub coverage_ratio: f64,
}

impl BlockPartition {
    /// Wraps explicit blocks. Checks coverage but not submodularity.
    pub fn new(blocks: Vec<Block>, n: usize) -> crate::Result<Self> {
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.is_empty() {
                return Err(crate::Error::contract("empty block"));
            }
            for &i in b.members() {
                let slot = seen.get_mut(i as usize).ok_or_else(|| {
                    crate::Error::contract(format!("block member {i} out of range for {n} points"))
                })?;
                *slot = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(crate::Error::contract(format!("point {i} is not covered by any block")));
        }
        Ok(BlockPartition { blocks, n })
    }

    /// One block per point: block coordinate descent degenerates to ICM.
    pub fn singletons(n: usize) -> Self {
        BlockPartition { blocks: (0..n as u32).map(|i| Block { members: vec![i] }).collect(), n }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn stats(&self) -> BlockStats {
        let sizes = self.blocks.iter().map(Block::len);
        let total: usize = sizes.clone().sum();
        BlockStats {
            count: self.blocks.len(),
            mean_size: total as f64 / self.blocks.len().max(1) as f64,
            max_size: sizes.clone().max().unwrap_or(0),
            min_size: sizes.min().unwrap_or(0),
            coverage_ratio: total as f64 / self.n.max(1) as f64,
        }
    }

    /// Every index appears in at least one block.
    pub fn covers_all(&self) -> bool {
        let mut seen = vec![false; self.n];
        for b in &self.blocks {
            for &i in b.members() {
                seen[i as usize] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// True iff no pair inside the block is labelled dissimilar.
pub fn verify_block(block: &Block, affinity: &AffinityStore) -> bool {
    block.members().iter().all(|&i| {
        let (nb, vals) = affinity.row(i as usize);
        nb.iter().zip(vals).all(|(&j, &y)| y >= 0 || !block.contains(j))
    })
}

/// Point selection for block seeding. `Random` draws from the uncovered set
/// with the seeded generator; `Fixed` takes candidates in the given order
/// (the first still uncovered one wins), which makes hand traces possible.
#[derive(Debug, Clone)]
pub enum SeedOrder {
    Random(u64),
    Fixed(Vec<u32>),
}

/// Greedy block construction.
///
/// Each round picks an uncovered point `x`, then scans `x`, its similar
/// neighbors (index order, covered or not), then the remaining uncovered
/// points (index order). A candidate is admitted unless it is dissimilar
/// to a current member. Admitted points leave the uncovered set, so blocks
/// only overlap through the similar-neighbor channel.
///
/// `max_block_size` stops admission once a block reaches that size.
pub fn construct_blocks(
    affinity: &AffinityStore,
    n: usize,
    order: SeedOrder,
    max_block_size: Option<usize>,
) -> BlockPartition {
    assert_eq!(affinity.n(), n, "affinity covers {} points, expected {n}", affinity.n());
    let cap = max_block_size.unwrap_or(usize::MAX).max(1);

    // Uncovered set with O(1) removal.
    let mut uncovered: Vec<u32> = (0..n as u32).collect();
    let mut slot: Vec<usize> = (0..n).collect();
    let remove = |uncovered: &mut Vec<u32>, slot: &mut Vec<usize>, i: u32| {
        let s = slot[i as usize];
        if s == usize::MAX {
            return;
        }
        let last = *uncovered.last().unwrap();
        uncovered.swap_remove(s);
        if last != i {
            slot[last as usize] = s;
        }
        slot[i as usize] = usize::MAX;
    };

    // forbidden[j] == t: j is dissimilar to some member of block t.
    // member[j] == t: j already admitted to block t.
    let mut forbidden = vec![usize::MAX; n];
    let mut member = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    let (mut rng, fixed) = match order {
        SeedOrder::Random(s) => (Some(seed::stream(s, "blocks", 0)), Vec::new()),
        SeedOrder::Fixed(v) => (None, v),
    };
    let mut fixed_pos = 0;

    while !uncovered.is_empty() {
        let t = blocks.len();
        let start = match rng.as_mut() {
            Some(r) => uncovered[r.random_range(0..uncovered.len())],
            None => {
                while fixed_pos < fixed.len() && slot[fixed[fixed_pos] as usize] == usize::MAX {
                    fixed_pos += 1;
                }
                if fixed_pos < fixed.len() {
                    fixed[fixed_pos]
                } else {
                    // Order exhausted: fall back to the lowest uncovered id.
                    *uncovered.iter().min().unwrap()
                }
            }
        };

        let mut members: Vec<u32> = Vec::new();
        let mut admit = |j: u32, members: &mut Vec<u32>| {
            if members.len() >= cap || member[j as usize] == t || forbidden[j as usize] == t {
                return;
            }
            member[j as usize] = t;
            members.push(j);
            let (nb, vals) = affinity.row(j as usize);
            for (&q, &y) in nb.iter().zip(vals) {
                if y < 0 {
                    forbidden[q as usize] = t;
                }
            }
        };

        admit(start, &mut members);
        let (nb, vals) = affinity.row(start as usize);
        for (&j, &y) in nb.iter().zip(vals) {
            if y > 0 {
                admit(j, &mut members);
            }
        }
        let mut rest: Vec<u32> = uncovered.clone();
        rest.sort_unstable();
        for j in rest {
            admit(j, &mut members);
        }

        for &j in &members {
            remove(&mut uncovered, &mut slot, j);
        }
        blocks.push(Block::new(members));
    }

    BlockPartition { blocks, n }
}
