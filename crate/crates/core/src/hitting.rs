//! Minimum hitting set: greedy approximation, exact branch and bound, an
//! enumeration oracle, and the reductions to and from sparsest innovative
//! vectors.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::gfield::{Elem, Field};
use crate::gfmatrix::{LinalgError, Matrix};
use crate::innovate::{Scenario, UserState};

/// Default node limit for [`exact_hitting`].
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

/// Largest universe [`oracle_min_hitting`] will enumerate.
pub const ORACLE_MAX_N: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HittingError {
    #[error("instance needs at least one set")]
    NoSets,
    #[error("set {0} is empty")]
    EmptySet(usize),
    #[error("element {elem} of set {set} is outside 1..={n}")]
    OutOfRange { set: usize, elem: usize, n: usize },
    #[error("branch and bound exceeded its budget of {0} nodes")]
    BudgetExceeded(u64),
    #[error("universe of {0} elements is too large to enumerate")]
    TooLarge(usize),
    #[error("row {0} of the support matrix is zero")]
    ZeroRow(usize),
    #[error("field of order {q} is smaller than the number of sets {k}")]
    FieldTooSmall { q: u32, k: usize },
    #[error("instance parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A collection of nonempty subsets of `{0..n}` (1-based in text form).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HittingInstance {
    n: usize,
    sets: Vec<Vec<usize>>,
}

impl HittingInstance {
    /// Builds an instance from 0-based sets; each set is sorted and deduplicated.
    pub fn new(n: usize, sets: Vec<Vec<usize>>) -> Result<Self, HittingError> {
        if sets.is_empty() {
            return Err(HittingError::NoSets);
        }
        let mut clean = Vec::with_capacity(sets.len());
        for (i, mut s) in sets.into_iter().enumerate() {
            if s.is_empty() {
                return Err(HittingError::EmptySet(i));
            }
            if let Some(&e) = s.iter().find(|&&e| e >= n) {
                return Err(HittingError::OutOfRange { set: i, elem: e + 1, n });
            }
            s.sort_unstable();
            s.dedup();
            clean.push(s);
        }
        Ok(HittingInstance { n, sets: clean })
    }

    /// Builds an instance from 1-based sets.
    pub fn from_one_based(n: usize, sets: &[Vec<usize>]) -> Result<Self, HittingError> {
        for (i, s) in sets.iter().enumerate() {
            if let Some(&e) = s.iter().find(|&&e| e == 0 || e > n) {
                return Err(HittingError::OutOfRange { set: i, elem: e, n });
            }
        }
        Self::new(n, sets.iter().map(|s| s.iter().map(|e| e - 1).collect()).collect())
    }

    pub fn universe_size(&self) -> usize {
        self.n
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn is_hit_by(&self, chosen: &[usize]) -> bool {
        self.sets.iter().all(|s| s.iter().any(|e| chosen.contains(e)))
    }
}

impl fmt::Display for HittingInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.n, self.sets.len())?;
        for s in &self.sets {
            let line: Vec<String> = s.iter().map(|e| (e + 1).to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for HittingInstance {
    type Err = HittingError;

    /// Line 1 `N K`, then K lines of 1-based element indices.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| HittingError::Parse(m.to_string());
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("empty input"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad header")))
            .collect::<Result<_, _>>()?;
        let [n, k] = header[..] else {
            return Err(bad("header must be `N K`"));
        };
        let mut sets = Vec::with_capacity(k);
        for _ in 0..k {
            let line = lines.next().ok_or_else(|| bad("missing set line"))?;
            let set: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad element")))
                .collect::<Result<_, _>>()?;
            sets.push(set);
        }
        if lines.next().is_some() {
            return Err(bad("trailing lines after the last set"));
        }
        Self::from_one_based(n, &sets)
    }
}

/// A hitting set (0-based, sorted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HittingSolution {
    pub hitting_set: Vec<usize>,
    /// Set only by exact solvers.
    pub optimal: bool,
}

impl HittingSolution {
    pub fn size(&self) -> usize {
        self.hitting_set.len()
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.hitting_set.iter().map(|e| e + 1).collect()
    }
}

/// Repeatedly picks the element hitting the most not-yet-hit sets, lowest
/// index on ties.
pub fn greedy_hitting(inst: &HittingInstance) -> HittingSolution {
    let mut hit = vec![false; inst.sets.len()];
    let mut remaining = inst.sets.len();
    let mut counts = vec![0usize; inst.n];
    let mut chosen = Vec::new();
    while remaining > 0 {
        counts.iter_mut().for_each(|c| *c = 0);
        for (s, set) in inst.sets.iter().enumerate() {
            if !hit[s] {
                for &e in set {
                    counts[e] += 1;
                }
            }
        }
        // max_by_key keeps the last maximum; scan in reverse to keep the lowest index
        let (best, _) = counts
            .iter()
            .enumerate()
            .rev()
            .max_by_key(|&(_, &c)| c)
            .expect("nonempty universe");
        chosen.push(best);
        for (s, set) in inst.sets.iter().enumerate() {
            if !hit[s] && set.binary_search(&best).is_ok() {
                hit[s] = true;
                remaining -= 1;
            }
        }
    }
    chosen.sort_unstable();
    HittingSolution {
        hitting_set: chosen,
        optimal: false,
    }
}

/// Fixed-width bitset over `u64` words.
#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn full(len: usize) -> Self {
        let mut b = Self::empty(len);
        for i in 0..len {
            b.insert(i);
        }
        b
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn remove(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn minus(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= !b;
        }
    }

    fn union_with(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn is_subset(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn disjoint(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == 0)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut x = word;
            std::iter::from_fn(move || {
                if x == 0 {
                    return None;
                }
                let t = x.trailing_zeros() as usize;
                x &= x - 1;
                Some(w * 64 + t)
            })
        })
    }
}

struct Search {
    set_elems: Vec<Bits>,
    elem_sets: Vec<Bits>,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl Search {
    /// Explores the subtree where `chosen` is fixed, `active` sets still need a
    /// hit and only `allowed` elements may be added.
    fn explore(&mut self, chosen: &mut Vec<usize>, mut active: Bits, mut allowed: Bits) -> Result<(), HittingError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(HittingError::BudgetExceeded(self.budget));
        }
        let mark = chosen.len();
        let result = self.explore_inner(chosen, &mut active, &mut allowed);
        chosen.truncate(mark);
        result
    }

    fn explore_inner(&mut self, chosen: &mut Vec<usize>, active: &mut Bits, allowed: &mut Bits) -> Result<(), HittingError> {
        if !self.reduce(chosen, active, allowed) {
            return Ok(());
        }
        if chosen.len() >= self.best.len() {
            return Ok(());
        }
        if active.is_empty() {
            self.best = chosen.clone();
            self.best.sort_unstable();
            return Ok(());
        }
        let avail: Vec<(usize, Bits)> = active
            .iter()
            .map(|s| (s, self.set_elems[s].and(allowed)))
            .collect();
        if chosen.len() + packing_bound(&avail) >= self.best.len() {
            return Ok(());
        }
        let (_, branch_set) = avail
            .iter()
            .min_by_key(|(s, a)| (a.count(), *s))
            .expect("active set exists");
        let mut order: Vec<(usize, usize)> = branch_set
            .iter()
            .map(|e| (e, self.elem_sets[e].and(active).count()))
            .collect();
        order.sort_by_key(|&(e, c)| (std::cmp::Reverse(c), e));
        let mut allowed_here = allowed.clone();
        for (e, _) in order {
            allowed_here.remove(e);
            let mut next_active = active.clone();
            next_active.minus(&self.elem_sets[e]);
            chosen.push(e);
            self.explore(chosen, next_active, allowed_here.clone())?;
            chosen.pop();
        }
        Ok(())
    }

    /// Applies unit-set forcing plus dominated set and element removal until a
    /// fixpoint. Returns false when some active set can no longer be hit.
    fn reduce(&self, chosen: &mut Vec<usize>, active: &mut Bits, allowed: &mut Bits) -> bool {
        loop {
            let mut changed = false;
            let sets: Vec<usize> = active.iter().collect();
            let mut avail = Vec::with_capacity(sets.len());
            for &s in &sets {
                let a = self.set_elems[s].and(allowed);
                match a.count() {
                    0 => return false,
                    1 => {
                        let e = a.iter().next().expect("one element");
                        chosen.push(e);
                        active.minus(&self.elem_sets[e]);
                        allowed.remove(e);
                        changed = true;
                        break;
                    }
                    _ => avail.push((s, a)),
                }
            }
            if changed {
                continue;
            }
            // a set whose available elements contain another active set's is implied by it
            for i in 0..avail.len() {
                for j in 0..avail.len() {
                    let (si, ai) = &avail[i];
                    let (sj, aj) = &avail[j];
                    if i != j && active.contains(*si) && active.contains(*sj) && aj.is_subset(ai) && (ai != aj || sj < si) {
                        active.remove(*si);
                        changed = true;
                        break;
                    }
                }
            }
            if changed {
                continue;
            }
            // an element whose covered sets are contained in another's is never needed
            let elems: Vec<usize> = allowed.iter().collect();
            let cover: Vec<Bits> = elems.iter().map(|&e| self.elem_sets[e].and(active)).collect();
            for a in 0..elems.len() {
                if cover[a].is_empty() {
                    allowed.remove(elems[a]);
                    changed = true;
                    continue;
                }
                for b in 0..elems.len() {
                    if a != b
                        && allowed.contains(elems[b])
                        && cover[a].is_subset(&cover[b])
                        && (cover[a] != cover[b] || elems[b] < elems[a])
                    {
                        allowed.remove(elems[a]);
                        changed = true;
                        break;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }
}

/// Number of pairwise disjoint sets found greedily, smallest first; each needs
/// its own element, so this bounds the remaining cost from below.
fn packing_bound(avail: &[(usize, Bits)]) -> usize {
    let mut order: Vec<&(usize, Bits)> = avail.iter().collect();
    order.sort_by_key(|(s, a)| (a.count(), *s));
    let Some((_, first)) = order.first() else {
        return 0;
    };
    let mut used = Bits::empty(first.0.len() * 64);
    let mut count = 0;
    for (_, a) in order {
        if a.disjoint(&used) {
            used.union_with(a);
            count += 1;
        }
    }
    count
}

/// Exact minimum hitting set by branch and bound seeded with the greedy
/// solution. Fails with `BudgetExceeded` once `budget` nodes are expanded.
pub fn exact_hitting(inst: &HittingInstance, budget: u64) -> Result<HittingSolution, HittingError> {
    let n = inst.n;
    let k = inst.sets.len();
    let mut set_elems = Vec::with_capacity(k);
    let mut elem_sets = vec![Bits::empty(k); n];
    for (s, set) in inst.sets.iter().enumerate() {
        let mut b = Bits::empty(n);
        for &e in set {
            b.insert(e);
            elem_sets[e].insert(s);
        }
        set_elems.push(b);
    }
    let greedy = greedy_hitting(inst);
    let mut search = Search {
        set_elems,
        elem_sets,
        // one more than greedy so that the search can confirm greedy's size
        best: (0..=greedy.size()).collect(),
        nodes: 0,
        budget,
    };
    search.explore(&mut Vec::new(), Bits::full(k), Bits::full(n))?;
    let hitting_set = if search.best.len() > greedy.size() {
        greedy.hitting_set
    } else {
        search.best
    };
    debug_assert!(inst.is_hit_by(&hitting_set));
    Ok(HittingSolution {
        hitting_set,
        optimal: true,
    })
}

/// Exhaustive minimum by subsets of increasing size, lexicographic within a size.
pub fn oracle_min_hitting(inst: &HittingInstance) -> Result<HittingSolution, HittingError> {
    let n = inst.n;
    if n > ORACLE_MAX_N {
        return Err(HittingError::TooLarge(n));
    }
    let masks: Vec<u32> = inst
        .sets
        .iter()
        .map(|s| s.iter().fold(0u32, |m, &e| m | 1 << e))
        .collect();
    for size in 0..=n {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let m = combo.iter().fold(0u32, |m, &e| m | 1 << e);
            if masks.iter().all(|&s| s & m != 0) {
                return Ok(HittingSolution {
                    hitting_set: combo,
                    optimal: true,
                });
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
    }
    unreachable!("the full universe hits every nonempty set")
}

/// Advances `combo` to the next k-subset of `0..n` in lexicographic order.
pub(crate) fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
        return false;
    };
    combo[i] += 1;
    for j in i + 1..k {
        combo[j] = combo[j - 1] + 1;
    }
    true
}

/// Instance whose sets are the supports of the given support-mask rows.
pub fn instance_from_btilde(rows: &[Vec<bool>]) -> Result<HittingInstance, HittingError> {
    let n = rows.first().map_or(0, Vec::len);
    let mut sets = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        let set: Vec<usize> = row.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        if set.is_empty() {
            return Err(HittingError::ZeroRow(k));
        }
        sets.push(set);
    }
    HittingInstance::new(n, sets)
}

/// Sparsity scenario equivalent to `inst`: user k's null space is spanned by
/// the characteristic vector of set k, so its sparsity number equals the
/// minimum hitting set size.
pub fn sparsity_instance_from_hitting(inst: &HittingInstance, field: &Field) -> Result<Scenario, HittingError> {
    let k = inst.num_sets();
    if (field.q() as usize) < k {
        return Err(HittingError::FieldTooSmall { q: field.q(), k });
    }
    let n = inst.n;
    let users = inst
        .sets
        .iter()
        .enumerate()
        .map(|(id, set)| {
            let mut row = vec![0 as Elem; n];
            for &e in set {
                row[e] = 1;
            }
            let b = Matrix::from_rows(field, n, &[row])?;
            Ok(UserState::from_null_basis(id, &b))
        })
        .collect::<Result<Vec<_>, LinalgError>>()?;
    Ok(Scenario::new(field.clone(), n, users).expect("users share field and n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example3() -> HittingInstance {
        HittingInstance::from_one_based(5, &[vec![1, 2, 3], vec![2, 3, 4], vec![4, 5]]).unwrap()
    }

    fn random_instance(rng: &mut impl Rng, max_n: usize, max_k: usize) -> HittingInstance {
        let n = rng.gen_range(1..=max_n);
        let k = rng.gen_range(1..=max_k);
        let sets = (0..k)
            .map(|_| {
                let mut s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
                if s.is_empty() {
                    s.push(rng.gen_range(0..n));
                }
                s
            })
            .collect();
        HittingInstance::new(n, sets).unwrap()
    }

    #[test]
    fn greedy_example3() {
        let g = greedy_hitting(&example3());
        assert_eq!(g.one_based(), vec![2, 4]);
        assert!(!g.optimal);
    }

    #[test]
    fn greedy_trivial_cases() {
        let one = HittingInstance::from_one_based(4, &[vec![3]]).unwrap();
        assert_eq!(greedy_hitting(&one).one_based(), vec![3]);
        let shared = HittingInstance::from_one_based(4, &[vec![1, 2], vec![1, 3], vec![1, 4]]).unwrap();
        assert_eq!(greedy_hitting(&shared).one_based(), vec![1]);
    }

    #[test]
    fn exact_and_oracle_example3() {
        let inst = example3();
        let e = exact_hitting(&inst, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(e.size(), 2);
        assert!(e.optimal && inst.is_hit_by(&e.hitting_set));
        assert_eq!(oracle_min_hitting(&inst).unwrap().size(), 2);
        // {1,4} from the worked example is also a hitting set of that size
        assert!(inst.is_hit_by(&[0, 3]));
    }

    #[test]
    fn disjoint_and_singleton_instances() {
        let disjoint = HittingInstance::from_one_based(3, &[vec![1], vec![2], vec![3]]).unwrap();
        assert_eq!(exact_hitting(&disjoint, 100).unwrap().size(), 3);
        let singles = HittingInstance::new(6, (0..6).map(|i| vec![i]).collect()).unwrap();
        assert_eq!(oracle_min_hitting(&singles).unwrap().size(), 6);
        let whole = HittingInstance::new(6, vec![(0..6).collect()]).unwrap();
        assert_eq!(oracle_min_hitting(&whole).unwrap().size(), 1);
    }

    #[test]
    fn exact_matches_oracle_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let inst = random_instance(&mut rng, 12, 10);
            let e = exact_hitting(&inst, DEFAULT_NODE_BUDGET).unwrap();
            let o = oracle_min_hitting(&inst).unwrap();
            let g = greedy_hitting(&inst);
            assert!(inst.is_hit_by(&e.hitting_set));
            assert!(inst.is_hit_by(&g.hitting_set));
            assert_eq!(e.size(), o.size(), "{inst}");
            assert!(g.size() >= e.size());
        }
    }

    #[test]
    fn budget_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut exceeded = 0;
        for _ in 0..50 {
            let inst = random_instance(&mut rng, 40, 60);
            let full = exact_hitting(&inst, DEFAULT_NODE_BUDGET).unwrap();
            match exact_hitting(&inst, 1) {
                Ok(sol) => assert_eq!(sol.size(), full.size()),
                Err(e) => {
                    assert_eq!(e, HittingError::BudgetExceeded(1));
                    exceeded += 1;
                }
            }
        }
        assert!(exceeded > 0);
    }

    #[test]
    fn oracle_guard() {
        let inst = HittingInstance::new(21, vec![vec![0]]).unwrap();
        assert_eq!(oracle_min_hitting(&inst), Err(HittingError::TooLarge(21)));
    }

    #[test]
    fn validation_errors() {
        assert_eq!(HittingInstance::new(3, vec![]), Err(HittingError::NoSets));
        assert_eq!(HittingInstance::new(3, vec![vec![]]), Err(HittingError::EmptySet(0)));
        assert!(matches!(
            HittingInstance::from_one_based(3, &[vec![0]]),
            Err(HittingError::OutOfRange { .. })
        ));
    }

    #[test]
    fn btilde_instance() {
        let rows = vec![
            vec![true, true, false, true],
            vec![false, true, true, false],
            vec![true, false, true, true],
        ];
        let inst = instance_from_btilde(&rows).unwrap();
        assert_eq!(inst.sets(), &[vec![0, 1, 3], vec![1, 2], vec![0, 2, 3]]);
        assert_eq!(instance_from_btilde(&[vec![false, false]]), Err(HittingError::ZeroRow(0)));
        let all = instance_from_btilde(&[vec![true; 3]]).unwrap();
        assert_eq!(all.sets(), &[vec![0, 1, 2]]);
        let mut rev = rows.clone();
        rev.reverse();
        let rinst = instance_from_btilde(&rev).unwrap();
        assert_eq!(oracle_min_hitting(&rinst).unwrap().size(), oracle_min_hitting(&inst).unwrap().size());
    }

    #[test]
    fn text_round_trip() {
        let inst = example3();
        let text = inst.to_string();
        assert_eq!(text, "5 3\n1 2 3\n2 3 4\n4 5\n");
        assert_eq!(text.parse::<HittingInstance>().unwrap(), inst);
        assert!("5 2\n1 2\n".parse::<HittingInstance>().is_err());
        assert!("3 1\n4\n".parse::<HittingInstance>().is_err());
    }

    #[test]
    fn combinations_enumerate() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all.len(), 6);
        assert_eq!(all.last().unwrap(), &vec![2, 3]);
    }
}
