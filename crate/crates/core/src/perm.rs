//! Permutations of `0..rho`, Kendall tau distance and the two permutation
//! embeddings used by the label model (pair signs and inversion vectors).
//!
//! A [`Permutation`] is stored as an *ordering*: `order[k]` is the item placed
//! at rank `k`. Item pairs `(i, j)` with `i < j` are indexed lexicographically,
//! `(0,1), (0,2), ..., (0,rho-1), (1,2), ...`; every module relies on this
//! coordinate order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// An ordering of the items `0..rho`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    /// Validates that `order` is a bijection on `0..order.len()`.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        if order.is_empty() {
            return invalid("a permutation needs at least one item");
        }
        let mut seen = vec![false; order.len()];
        for &item in &order {
            if item >= order.len() || seen[item] {
                return invalid(format!("{order:?} is not a permutation of 0..{}", order.len()));
            }
            seen[item] = true;
        }
        Ok(Permutation(order))
    }

    pub fn identity(rho: usize) -> Self {
        Permutation((0..rho).collect())
    }

    /// The full reversal `rho-1, ..., 1, 0`.
    pub fn reversal(rho: usize) -> Self {
        Permutation((0..rho).rev().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// `positions()[item]` is the rank of `item`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (rank, &item) in self.0.iter().enumerate() {
            pos[item] = rank;
        }
        pos
    }

    pub fn invert(&self) -> Permutation {
        Permutation(self.positions())
    }

    /// `self ∘ other`, i.e. `result[k] = self[other[k]]`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        check_len(self.len(), other.len())?;
        Ok(Permutation(other.0.iter().map(|&k| self.0[k]).collect()))
    }

    /// Builds a permutation without validation. Callers guarantee bijectivity.
    pub(crate) fn from_vec_unchecked(order: Vec<usize>) -> Self {
        debug_assert!(Permutation::new(order.clone()).is_ok());
        Permutation(order)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, item) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{item}")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let order = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad permutation entry {tok:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::new(order)
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return invalid(format!("length mismatch: {a} vs {b}"));
    }
    Ok(())
}

/// Number of item pairs, `rho (rho - 1) / 2`.
pub fn pair_count(rho: usize) -> usize {
    rho * rho.saturating_sub(1) / 2
}

/// Lexicographic index of the pair `(i, j)`, `i < j < rho`.
pub fn pair_index(i: usize, j: usize, rho: usize) -> usize {
    debug_assert!(i < j && j < rho);
    i * (2 * rho - i - 1) / 2 + (j - i - 1)
}

/// Number of item pairs that `a` and `b` order differently.
///
/// Counts inversions of `b`'s ranks read in `a`'s order with a merge sort.
pub fn kendall_tau(a: &Permutation, b: &Permutation) -> Result<usize> {
    check_len(a.len(), b.len())?;
    let pos_b = b.positions();
    let mut seq: Vec<usize> = a.0.iter().map(|&item| pos_b[item]).collect();
    let mut buf = vec![0; seq.len()];
    Ok(count_inversions(&mut seq, &mut buf))
}

fn count_inversions(seq: &mut [usize], buf: &mut [usize]) -> usize {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = seq.split_at_mut(mid);
        let (buf_l, buf_r) = buf.split_at_mut(mid);
        count_inversions(left, buf_l) + count_inversions(right, buf_r)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            buf[k] = seq[i];
            i += 1;
        } else {
            buf[k] = seq[j];
            count += mid - i;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&buf[..n]);
    count
}

/// Sign vector in `{-1, +1}^(rho choose 2)`: the entry for pair `(i, j)` is
/// `+1` when item `i` precedes item `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PairSignVector(Vec<i8>);

impl PairSignVector {
    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &PairSignVector) -> Result<i64> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(&x, &y)| i64::from(x) * i64::from(y)).sum())
    }
}

pub fn pair_sign_embed(p: &Permutation) -> Result<PairSignVector> {
    let rho = p.len();
    if rho < 2 {
        return invalid("pair-sign embedding needs at least two items");
    }
    let mut out = vec![0i8; pair_count(rho)];
    fill_pair_signs(p, &mut out);
    Ok(PairSignVector(out))
}

/// Writes the pair signs of `p` into `out` (length `pair_count(rho)`).
pub(crate) fn fill_pair_signs<T: From<i8>>(p: &Permutation, out: &mut [T]) {
    let pos = p.positions();
    let rho = pos.len();
    let mut k = 0;
    for i in 0..rho {
        for j in (i + 1)..rho {
            out[k] = T::from(if pos[i] < pos[j] { 1 } else { -1 });
            k += 1;
        }
    }
}

/// Inversion table: entry `b - 1` (for `b = 1..rho`) counts the earlier ranks
/// holding a larger item than rank `b`, so `0 <= x(b) <= b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InversionVector(Vec<usize>);

impl InversionVector {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        for (k, &x) in entries.iter().enumerate() {
            if x > k + 1 {
                return invalid(format!("inversion entry {x} exceeds its bound {}", k + 1));
            }
        }
        Ok(InversionVector(entries))
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn weight(&self) -> usize {
        self.0.iter().sum()
    }
}

pub fn inversion_vector(p: &Permutation) -> InversionVector {
    let order = &p.0;
    let entries = (1..order.len())
        .map(|b| order[..b].iter().filter(|&&earlier| earlier > order[b]).count())
        .collect();
    InversionVector(entries)
}

pub fn l1_inversion_distance(a: &InversionVector, b: &InversionVector) -> Result<usize> {
    check_len(a.0.len(), b.0.len())?;
    Ok(a.0.iter().zip(&b.0).map(|(&x, &y)| x.abs_diff(y)).sum())
}

/// Iterator over all permutations of `0..rho` in lexicographic order.
pub fn all_permutations(rho: usize) -> AllPermutations {
    AllPermutations { next: (rho >= 1).then(|| (0..rho).collect()) }
}

pub struct AllPermutations {
    next: Option<Vec<usize>>,
}

impl Iterator for AllPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if next_lexicographic(&mut succ) {
            self.next = Some(succ);
        }
        Some(Permutation(current))
    }
}

fn next_lexicographic(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    fn naive_kendall(a: &Permutation, b: &Permutation) -> usize {
        let (pa, pb) = (a.positions(), b.positions());
        let rho = a.len();
        let mut d = 0;
        for i in 0..rho {
            for j in (i + 1)..rho {
                if (pa[i] < pa[j]) != (pb[i] < pb[j]) {
                    d += 1;
                }
            }
        }
        d
    }

    fn arb_perm(rho: usize) -> impl Strategy<Value = Permutation> {
        Just((0..rho).collect::<Vec<_>>()).prop_shuffle().prop_map(Permutation)
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert!(Permutation::new(vec![]).is_err());
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau(&Permutation::identity(4), &Permutation::identity(4)).unwrap(), 0);
        assert_eq!(kendall_tau(&p(&[1, 0, 2]), &p(&[0, 1, 2])).unwrap(), 1);
        assert_eq!(kendall_tau(&p(&[3, 2, 1, 0]), &p(&[0, 1, 2, 3])).unwrap(), 6);
        assert!(kendall_tau(&p(&[0, 1]), &p(&[0, 1, 2])).is_err());
    }

    #[test]
    fn kendall_is_a_metric_exhaustively() {
        for rho in 1..=5 {
            let perms: Vec<_> = all_permutations(rho).collect();
            for a in &perms {
                for b in &perms {
                    let d = kendall_tau(a, b).unwrap();
                    assert_eq!(d, naive_kendall(a, b));
                    assert_eq!(d, kendall_tau(b, a).unwrap());
                    assert_eq!(d == 0, a == b);
                    assert!(d <= pair_count(rho));
                    for c in perms.iter().step_by(7) {
                        assert!(d <= kendall_tau(a, c).unwrap() + kendall_tau(c, b).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn kendall_symmetry_and_triangle_at_rho_6() {
        let perms: Vec<_> = all_permutations(6).collect();
        for (k, a) in perms.iter().enumerate().step_by(13) {
            for b in perms.iter().skip(k % 5).step_by(17) {
                let d = kendall_tau(a, b).unwrap();
                assert_eq!(d, naive_kendall(a, b));
                let c = &perms[(k * 31) % perms.len()];
                assert!(d <= kendall_tau(a, c).unwrap() + kendall_tau(c, b).unwrap());
            }
        }
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let perms: Vec<_> = all_permutations(4).collect();
        assert_eq!(perms.len(), 24);
        assert!(perms.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all_permutations(1).count(), 1);
    }

    #[test]
    fn pair_sign_examples() {
        assert_eq!(pair_sign_embed(&Permutation::identity(3)).unwrap().entries(), &[1, 1, 1]);
        assert_eq!(pair_sign_embed(&p(&[2, 1, 0])).unwrap().entries(), &[-1, -1, -1]);
        assert!(pair_sign_embed(&Permutation::identity(1)).is_err());
        // (1,0,2): item 1 precedes item 0, everything precedes 2
        assert_eq!(pair_sign_embed(&p(&[1, 0, 2])).unwrap().entries(), &[-1, 1, 1]);
    }

    #[test]
    fn pair_index_is_lexicographic() {
        let rho = 6;
        let mut k = 0;
        for i in 0..rho {
            for j in (i + 1)..rho {
                assert_eq!(pair_index(i, j, rho), k);
                k += 1;
            }
        }
        assert_eq!(k, pair_count(rho));
    }

    #[test]
    fn embeddings_are_injective_up_to_rho_6() {
        use std::collections::HashSet;
        for rho in 2..=6 {
            let perms: Vec<_> = all_permutations(rho).collect();
            let signs: HashSet<_> = perms.iter().map(|q| pair_sign_embed(q).unwrap()).collect();
            let invs: HashSet<_> = perms.iter().map(inversion_vector).collect();
            assert_eq!(signs.len(), perms.len());
            assert_eq!(invs.len(), perms.len());
        }
    }

    #[test]
    fn inversion_vector_examples() {
        assert_eq!(inversion_vector(&Permutation::identity(5)).entries(), &[0, 0, 0, 0]);
        let rev = inversion_vector(&Permutation::reversal(4));
        assert_eq!(rev.weight(), 6);
        assert_eq!(rev.entries(), &[1, 2, 3]);
        let id = Permutation::identity(4);
        for q in all_permutations(4) {
            let x = inversion_vector(&q);
            for (k, &e) in x.entries().iter().enumerate() {
                assert!(e <= k + 1);
            }
            assert_eq!(x.weight(), kendall_tau(&q, &id).unwrap());
        }
    }

    #[test]
    fn l1_inversion_examples() {
        let x = inversion_vector(&p(&[2, 0, 3, 1]));
        assert_eq!(l1_inversion_distance(&x, &x).unwrap(), 0);
        let zeros = inversion_vector(&Permutation::identity(4));
        assert_eq!(
            l1_inversion_distance(&zeros, &x).unwrap(),
            kendall_tau(&p(&[2, 0, 3, 1]), &Permutation::identity(4)).unwrap()
        );
        assert!(l1_inversion_distance(&zeros, &inversion_vector(&Permutation::identity(3))).is_err());
        assert!(InversionVector::new(vec![2, 0]).is_err());
    }

    #[test]
    fn invert_and_compose_examples() {
        assert_eq!(Permutation::identity(4).invert(), Permutation::identity(4));
        assert_eq!(p(&[2, 0, 1]).invert(), p(&[1, 2, 0]));
        assert_eq!(p(&[2, 0, 1]).compose(&p(&[1, 2, 0])).unwrap(), Permutation::identity(3));
        let q = p(&[3, 1, 0, 2]);
        assert_eq!(q.compose(&Permutation::identity(4)).unwrap(), q);
        assert!(q.compose(&Permutation::identity(3)).is_err());
    }

    #[test]
    fn display_round_trip() {
        let q = p(&[2, 0, 1]);
        assert_eq!(q.to_string(), "2,0,1");
        assert_eq!("2,0,1".parse::<Permutation>().unwrap(), q);
        assert!("2,0,0".parse::<Permutation>().is_err());
        assert!("a,b".parse::<Permutation>().is_err());
    }

    proptest! {
        #[test]
        fn prop_merge_count_matches_naive(a in arb_perm(40), b in arb_perm(40)) {
            prop_assert_eq!(kendall_tau(&a, &b).unwrap(), naive_kendall(&a, &b));
        }

        #[test]
        fn prop_sign_identity(a in arb_perm(9), b in arb_perm(9)) {
            let dot = pair_sign_embed(&a).unwrap().dot(&pair_sign_embed(&b).unwrap()).unwrap();
            let d = kendall_tau(&a, &b).unwrap() as i64;
            prop_assert_eq!(dot, pair_count(9) as i64 - 2 * d);
        }

        #[test]
        fn prop_left_invariance(a in arb_perm(12), b in arb_perm(12), c in arb_perm(12)) {
            let d = kendall_tau(&a, &b).unwrap();
            let d2 = kendall_tau(&c.compose(&a).unwrap(), &c.compose(&b).unwrap()).unwrap();
            prop_assert_eq!(d, d2);
        }

        #[test]
        fn prop_group_inverse(a in arb_perm(15)) {
            prop_assert_eq!(a.compose(&a.invert()).unwrap(), Permutation::identity(15));
            prop_assert_eq!(a.invert().compose(&a).unwrap(), Permutation::identity(15));
        }

        #[test]
        fn prop_l1_matches_direct_sum(a in arb_perm(5), b in arb_perm(5)) {
            let (xa, xb) = (inversion_vector(&a), inversion_vector(&b));
            let direct: usize = (0..4).map(|k| {
                let (u, v) = (xa.entries()[k] as i64, xb.entries()[k] as i64);
                (u - v).unsigned_abs() as usize
            }).sum();
            prop_assert_eq!(l1_inversion_distance(&xa, &xb).unwrap(), direct);
        }
    }
}
