//! Non-crossing partitions of `{1..m}`.
//!
//! Generation fixes the block containing the smallest open element; the
//! gaps between consecutive elements of that block are then partitioned
//! independently. Every partition is produced exactly once and no crossing
//! partition is ever built.

/// A partition of `{1..m}` into blocks. Blocks are sorted, 1-based, and listed
/// by their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NcPartition {
    blocks: Vec<Vec<usize>>,
}

impl NcPartition {
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.retain(|b| !b.is_empty());
        blocks.sort_unstable_by_key(|b| b[0]);
        NcPartition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn size(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_pairing(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 2)
    }

    /// Blocks are disjoint and cover exactly `{1..m}`.
    pub fn is_partition_of(&self, m: usize) -> bool {
        let mut seen = vec![false; m + 1];
        for &x in self.blocks.iter().flatten() {
            if x == 0 || x > m || seen[x] {
                return false;
            }
            seen[x] = true;
        }
        seen[1..].iter().all(|&s| s)
    }

    /// No `a < b < c < d` with `a, c` in one block and `b, d` in another.
    pub fn is_noncrossing(&self) -> bool {
        let owner = self.owner_map();
        let m = owner.len();
        for a in 0..m {
            for b in a + 1..m {
                if owner[b] == owner[a] {
                    continue;
                }
                for c in b + 1..m {
                    if owner[c] != owner[a] {
                        continue;
                    }
                    for d in c + 1..m {
                        if owner[d] == owner[b] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn owner_map(&self) -> Vec<usize> {
        let m = self.size();
        let mut owner = vec![usize::MAX; m];
        for (i, b) in self.blocks.iter().enumerate() {
            for &x in b {
                if x >= 1 && x <= m {
                    owner[x - 1] = i;
                }
            }
        }
        owner
    }
}

/// Catalan number `C_m`.
pub fn catalan(m: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..m as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// Calls `visit` with the block list (0-based positions) of every non-crossing
/// partition of `{0..m-1}` whose block sizes satisfy `allowed`.
pub fn for_each_noncrossing<F, A>(m: usize, allowed: A, mut visit: F)
where
    F: FnMut(&[Vec<usize>]),
    A: Fn(usize) -> bool,
{
    let mut pending = vec![(0usize, m)];
    let mut blocks = Vec::new();
    next_interval(&mut pending, &mut blocks, &allowed, &mut visit);
}

fn next_interval<F, A>(
    pending: &mut Vec<(usize, usize)>,
    blocks: &mut Vec<Vec<usize>>,
    allowed: &A,
    visit: &mut F,
) where
    F: FnMut(&[Vec<usize>]),
    A: Fn(usize) -> bool,
{
    let Some((lo, hi)) = pending.pop() else {
        visit(blocks);
        return;
    };
    if lo == hi {
        next_interval(pending, blocks, allowed, visit);
    } else {
        let mut block = vec![lo];
        grow_block(lo, hi, &mut block, pending, blocks, allowed, visit);
    }
    pending.push((lo, hi));
}

fn grow_block<F, A>(
    last: usize,
    hi: usize,
    block: &mut Vec<usize>,
    pending: &mut Vec<(usize, usize)>,
    blocks: &mut Vec<Vec<usize>>,
    allowed: &A,
    visit: &mut F,
) where
    F: FnMut(&[Vec<usize>]),
    A: Fn(usize) -> bool,
{
    if allowed(block.len()) {
        pending.push((last + 1, hi));
        blocks.push(block.clone());
        next_interval(pending, blocks, allowed, visit);
        blocks.pop();
        pending.pop();
    }
    for next in last + 1..hi {
        pending.push((last + 1, next));
        block.push(next);
        grow_block(next, hi, block, pending, blocks, allowed, visit);
        block.pop();
        pending.pop();
    }
}

/// All non-crossing partitions of `{1..m}`; `Catalan(m)` of them.
pub fn noncrossing_partitions(m: usize) -> Vec<NcPartition> {
    let mut out = Vec::new();
    for_each_noncrossing(m, |_| true, |blocks| out.push(to_partition(blocks)));
    out
}

/// Non-crossing pairings of `{1..m}`; empty when `m` is odd.
pub fn noncrossing_pairings(m: usize) -> Vec<NcPartition> {
    if m % 2 == 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for_each_noncrossing(m, |s| s == 2, |blocks| out.push(to_partition(blocks)));
    out
}

fn to_partition(blocks: &[Vec<usize>]) -> NcPartition {
    NcPartition::new(blocks.iter().map(|b| b.iter().map(|x| x + 1).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Every set partition of {1..m} via restricted growth strings.
    fn all_set_partitions(m: usize) -> Vec<NcPartition> {
        let mut out = Vec::new();
        let mut rgs = vec![0usize; m];
        fn rec(i: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<NcPartition>) {
            let m = rgs.len();
            if i == m {
                let nblocks = if m == 0 { 0 } else { max + 1 };
                let mut blocks = vec![Vec::new(); nblocks];
                for (pos, &b) in rgs.iter().enumerate() {
                    blocks[b].push(pos + 1);
                }
                out.push(NcPartition::new(blocks));
                return;
            }
            let top = if i == 0 { 0 } else { max + 1 };
            for b in 0..=top {
                rgs[i] = b;
                rec(i + 1, max.max(b), rgs, out);
            }
        }
        rec(0, 0, &mut rgs, &mut out);
        out
    }

    #[test]
    fn counts_small() {
        assert_eq!(noncrossing_partitions(0).len(), 1);
        assert_eq!(noncrossing_partitions(3).len(), 5);
        assert_eq!(noncrossing_pairings(3).len(), 0);
        assert_eq!(noncrossing_pairings(6).len(), 5);
        let p4 = noncrossing_pairings(4);
        let set: HashSet<_> = p4.into_iter().collect();
        let expected: HashSet<_> = [
            NcPartition::new(vec![vec![1, 2], vec![3, 4]]),
            NcPartition::new(vec![vec![1, 4], vec![2, 3]]),
        ]
        .into_iter()
        .collect();
        assert_eq!(set, expected);
    }

    #[test]
    fn brute_force_filter_agrees() {
        for m in 0..=7 {
            let brute: HashSet<_> =
                all_set_partitions(m).into_iter().filter(|p| p.is_noncrossing()).collect();
            let generated: Vec<_> = noncrossing_partitions(m);
            let gen_set: HashSet<_> = generated.iter().cloned().collect();
            assert_eq!(gen_set.len(), generated.len(), "duplicates at m={m}");
            assert_eq!(gen_set, brute, "m={m}");
        }
        assert_eq!(noncrossing_partitions(4).len(), 14);
    }

    #[test]
    fn catalan_counts_and_validity() {
        for m in 0..=10 {
            let parts = noncrossing_partitions(m);
            assert_eq!(parts.len() as u128, catalan(m));
            for p in &parts {
                assert!(p.is_partition_of(m));
                assert!(p.is_noncrossing());
            }
            let pairs = noncrossing_pairings(m);
            let expected = if m % 2 == 0 { catalan(m / 2) } else { 0 };
            assert_eq!(pairs.len() as u128, expected);
            assert!(pairs.iter().all(|p| p.is_pairing() && p.is_noncrossing()));
        }
    }

    #[test]
    fn crossing_detected() {
        let p = NcPartition::new(vec![vec![1, 3], vec![2, 4]]);
        assert!(!p.is_noncrossing());
    }
}
