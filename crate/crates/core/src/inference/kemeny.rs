//! Weighted Kemeny aggregation of rankings.

use rand::seq::SliceRandom;

use crate::error::{invalid, Error, Result};
use crate::perm::{all_permutations, Permutation};
use crate::rng::{substream, Domain};

/// Largest `rho` solved by enumeration.
pub const EXHAUSTIVE_THRESHOLD: usize = 8;

/// `w[i][j]`: total weight of rankings placing item `i` before item `j`.
pub(crate) struct PairWeights {
    rho: usize,
    w: Vec<f64>,
    total: f64,
}

impl PairWeights {
    pub(crate) fn new(labels: &[Permutation], weights: &[f64]) -> Result<Self> {
        let rho = common_rho(labels)?;
        if weights.len() != labels.len() {
            return invalid(format!("{} weights for {} rankings", weights.len(), labels.len()));
        }
        let mut w = vec![0.0; rho * rho];
        for (p, &wt) in labels.iter().zip(weights) {
            let s = p.as_slice();
            for x in 0..rho {
                for y in (x + 1)..rho {
                    w[s[x] * rho + s[y]] += wt;
                }
            }
        }
        Ok(PairWeights { rho, w, total: weights.iter().map(|v| v.abs()).sum() })
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.rho + j]
    }

    /// `sum_a w_a d_tau(labels_a, order)`.
    pub(crate) fn objective(&self, order: &[usize]) -> f64 {
        let mut cost = 0.0;
        for x in 0..order.len() {
            for y in (x + 1)..order.len() {
                cost += self.get(order[y], order[x]);
            }
        }
        cost
    }

    /// Slack below which two objectives are considered tied; proportional
    /// to the total weight so that rescaling weights leaves ties unchanged.
    pub(crate) fn tolerance(&self) -> f64 {
        let max_d = (self.rho * self.rho.saturating_sub(1) / 2).max(1) as f64;
        1e-12 * self.total * max_d
    }
}

fn common_rho(labels: &[Permutation]) -> Result<usize> {
    let first = labels.first().ok_or_else(|| Error::Configuration("no rankings to aggregate".into()))?;
    let rho = first.len();
    if labels.iter().any(|p| p.len() != rho) {
        return invalid("rankings to aggregate have different lengths");
    }
    Ok(rho)
}

/// `sum_a weights_a d_tau(labels_a, candidate)`.
pub fn kemeny_objective(labels: &[Permutation], weights: &[f64], candidate: &Permutation) -> Result<f64> {
    let pw = PairWeights::new(labels, weights)?;
    if candidate.len() != pw.rho {
        return invalid("candidate length differs from the rankings");
    }
    Ok(pw.objective(candidate.as_slice()))
}

/// Exact weighted Kemeny ranking by enumeration of every permutation.
/// Ties go to the lexicographically smallest permutation.
pub fn kemeny_exact(labels: &[Permutation], weights: &[f64]) -> Result<Permutation> {
    kemeny_exact_with_threshold(labels, weights, EXHAUSTIVE_THRESHOLD)
}

pub fn kemeny_exact_with_threshold(labels: &[Permutation], weights: &[f64], threshold: usize) -> Result<Permutation> {
    let pw = PairWeights::new(labels, weights)?;
    if pw.rho > threshold {
        return Err(Error::UseHeuristic { rho: pw.rho, threshold });
    }
    let tol = pw.tolerance();
    let mut best: Option<(f64, Permutation)> = None;
    for cand in all_permutations(pw.rho) {
        let obj = pw.objective(cand.as_slice());
        if best.as_ref().is_none_or(|(b, _)| obj < b - tol) {
            best = Some((obj, cand));
        }
    }
    Ok(best.expect("at least one permutation").1)
}

/// Weighted Borda order: items sorted by weighted mean position, ties by
/// item index.
pub(crate) fn borda(labels: &[Permutation], weights: &[f64]) -> Result<Permutation> {
    let rho = common_rho(labels)?;
    let mut score = vec![0.0; rho];
    for (p, &w) in labels.iter().zip(weights) {
        for (pos, &item) in p.as_slice().iter().enumerate() {
            score[item] += w * pos as f64;
        }
    }
    let mut items: Vec<usize> = (0..rho).collect();
    items.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
    Ok(Permutation::from_vec_unchecked(items))
}

/// Weighted Kemeny heuristic: single-item insertion local search started
/// from every input ranking, the weighted Borda order and `restarts` random
/// permutations. Restart `k` always uses the same random stream for a given
/// seed, so more restarts never give a worse objective.
pub fn kemeny_local_search(labels: &[Permutation], weights: &[f64], restarts: usize, seed: u64) -> Result<Permutation> {
    let pw = PairWeights::new(labels, weights)?;
    let rho = pw.rho;
    let tol = pw.tolerance();
    let mut starts: Vec<Vec<usize>> = labels.iter().map(|p| p.as_slice().to_vec()).collect();
    starts.push(borda(labels, weights)?.into_vec());
    for k in 0..restarts {
        let mut rng = substream(seed, Domain::LocalSearch, k as u64, 0);
        let mut v: Vec<usize> = (0..rho).collect();
        v.shuffle(&mut rng);
        starts.push(v);
    }
    starts.sort();
    starts.dedup();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for start in starts {
        let (obj, order) = insertion_descent(&pw, start, tol);
        let better = match &best {
            None => true,
            Some((b, bo)) => obj < b - tol || (obj <= b + tol && order < *bo),
        };
        if better {
            best = Some((obj, order));
        }
    }
    let (_, order) = best.expect("at least one start");
    Ok(Permutation::from_vec_unchecked(order))
}

/// Repeatedly applies the best improving single-item move until none
/// improves by more than `tol`.
fn insertion_descent(pw: &PairWeights, mut order: Vec<usize>, tol: f64) -> (f64, Vec<usize>) {
    let n = order.len();
    let mut obj = pw.objective(&order);
    loop {
        let mut best = (0.0, 0, 0);
        for s in 0..n {
            let x = order[s];
            let mut delta = 0.0;
            for t in (s + 1)..n {
                let y = order[t];
                delta += pw.get(x, y) - pw.get(y, x);
                if delta < best.0 {
                    best = (delta, s, t);
                }
            }
            let mut delta = 0.0;
            for t in (0..s).rev() {
                let y = order[t];
                delta += pw.get(y, x) - pw.get(x, y);
                if delta < best.0 {
                    best = (delta, s, t);
                }
            }
        }
        if best.0 >= -tol {
            return (obj, order);
        }
        let (_, s, t) = best;
        let x = order.remove(s);
        order.insert(t, x);
        obj = pw.objective(&order);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::kendall_tau;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_perm(rng: &mut ChaCha8Rng, rho: usize) -> Permutation {
        let mut v: Vec<usize> = (0..rho).collect();
        v.shuffle(rng);
        Permutation::new(v).unwrap()
    }

    fn brute(labels: &[Permutation], weights: &[f64]) -> (f64, Vec<Permutation>) {
        let rho = labels[0].len();
        let objs: Vec<(f64, Permutation)> = all_permutations(rho)
            .map(|c| {
                let o = labels.iter().zip(weights).map(|(l, w)| w * kendall_tau(l, &c).unwrap() as f64).sum();
                (o, c)
            })
            .collect();
        let best = objs.iter().map(|o| o.0).fold(f64::INFINITY, f64::min);
        let ties = objs.into_iter().filter(|o| o.0 <= best + 1e-9).map(|o| o.1).collect();
        (best, ties)
    }

    #[test]
    fn single_ranking_is_its_own_aggregate() {
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        assert_eq!(kemeny_exact(std::slice::from_ref(&p), &[1.0]).unwrap(), p);
        assert_eq!(kemeny_local_search(std::slice::from_ref(&p), &[1.0], 4, 1).unwrap(), p);
    }

    #[test]
    fn reversed_pair_ties_break_lexicographically() {
        let a = Permutation::new(vec![1, 2, 0]).unwrap();
        let b = Permutation::new(vec![0, 2, 1]).unwrap();
        let got = kemeny_exact(&[a.clone(), b.clone()], &[1.0, 1.0]).unwrap();
        let (_, ties) = brute(&[a, b], &[1.0, 1.0]);
        assert_eq!(ties.len(), 6);
        assert_eq!(got, ties[0]);
        assert_eq!(got, Permutation::identity(3));
    }

    #[test]
    fn exact_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..30 {
            let m = rng.random_range(1..6);
            let labels: Vec<Permutation> = (0..m).map(|_| random_perm(&mut rng, 5)).collect();
            let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..3.0)).collect();
            if weights.iter().all(|&w| w == 0.0) {
                continue;
            }
            let got = kemeny_exact(&labels, &weights).unwrap();
            let (best, ties) = brute(&labels, &weights);
            assert!((kemeny_objective(&labels, &weights, &got).unwrap() - best).abs() < 1e-9);
            assert_eq!(got, ties[0]);
        }
    }

    #[test]
    fn exact_rejects_large_rho() {
        let p = Permutation::identity(9);
        assert!(matches!(kemeny_exact(&[p], &[1.0]), Err(Error::UseHeuristic { rho: 9, threshold: 8 })));
        assert!(kemeny_exact(&[], &[]).is_err());
    }

    #[test]
    fn local_search_never_worse_than_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for _ in 0..20 {
            let labels: Vec<Permutation> = (0..7).map(|_| random_perm(&mut rng, 12)).collect();
            let weights: Vec<f64> = (0..7).map(|_| rng.random_range(0.1..3.0)).collect();
            let got = kemeny_local_search(&labels, &weights, 2, 3).unwrap();
            let obj = kemeny_objective(&labels, &weights, &got).unwrap();
            for l in &labels {
                assert!(obj <= kemeny_objective(&labels, &weights, l).unwrap() + 1e-9);
            }
            // Local optimality under single-item insertion.
            let pw = PairWeights::new(&labels, &weights).unwrap();
            let (again, _) = insertion_descent(&pw, got.as_slice().to_vec(), pw.tolerance());
            assert!((again - obj).abs() < 1e-9);
        }
    }

    #[test]
    fn local_search_unanimous_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let p = random_perm(&mut rng, 10);
        assert_eq!(kemeny_local_search(&vec![p.clone(); 4], &[1.0; 4], 3, 0).unwrap(), p);
        for seed in 0..10 {
            let labels: Vec<Permutation> = (0..5).map(|_| random_perm(&mut rng, 9)).collect();
            let w = [1.0, 0.5, 2.0, 1.5, 0.7];
            let one = kemeny_objective(&labels, &w, &kemeny_local_search(&labels, &w, 1, seed).unwrap()).unwrap();
            let many = kemeny_objective(&labels, &w, &kemeny_local_search(&labels, &w, 16, seed).unwrap()).unwrap();
            assert!(many <= one + 1e-9);
        }
    }

    #[test]
    fn local_search_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let labels: Vec<Permutation> = (0..6).map(|_| random_perm(&mut rng, 15)).collect();
        let w = [1.0; 6];
        assert_eq!(
            kemeny_local_search(&labels, &w, 8, 9).unwrap(),
            kemeny_local_search(&labels, &w, 8, 9).unwrap()
        );
    }
}
