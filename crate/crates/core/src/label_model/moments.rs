//! Observable moments of labeling-function outputs.

use crate::data::{CoordinateEmbedding, LabelingMatrix};
use crate::error::{invalid, Result};

/// Per-pair, per-coordinate second moments
/// `e_ab(i) = (1/n) sum_t g(lf_a(t))_i g(lf_b(t))_i`, including `a == b`,
/// together with the first moments `(1/n) sum_t g(lf_a(t))_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMoments {
    n_lfs: usize,
    dim: usize,
    n_samples: usize,
    second: Vec<f64>,
    first: Vec<f64>,
}

impl PairMoments {
    /// Builds moments from explicit values; `second` is indexed
    /// `(a * n_lfs + b) * dim + i` and must be symmetric in `(a, b)`.
    pub fn from_parts(n_lfs: usize, dim: usize, second: Vec<f64>, first: Vec<f64>) -> Result<Self> {
        if second.len() != n_lfs * n_lfs * dim || first.len() != n_lfs * dim {
            return invalid("moment arrays do not match n_lfs and dim");
        }
        Ok(PairMoments { n_lfs, dim, n_samples: 0, second, first })
    }

    pub fn n_lfs(&self) -> usize {
        self.n_lfs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn get(&self, a: usize, b: usize, i: usize) -> f64 {
        self.second[(a * self.n_lfs + b) * self.dim + i]
    }

    pub fn mean(&self, a: usize, i: usize) -> f64 {
        self.first[a * self.dim + i]
    }

    /// `m x m` matrix of the coordinate-`i` moments, row-major.
    pub fn coordinate_matrix(&self, i: usize) -> Vec<f64> {
        let m = self.n_lfs;
        (0..m * m).map(|k| self.get(k / m, k % m, i)).collect()
    }

    /// `m x m` matrix of moments summed over coordinates.
    pub fn summed_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_lfs)
            .map(|a| (0..self.n_lfs).map(|b| (0..self.dim).map(|i| self.get(a, b, i)).sum()).collect())
            .collect()
    }
}

pub fn empirical_pair_moments<T, E>(data: &LabelingMatrix<T>, embed: &E) -> Result<PairMoments>
where
    E: CoordinateEmbedding<T> + ?Sized,
{
    let (m, d, n) = (data.n_lfs(), embed.dim(), data.n_tasks());
    if n == 0 {
        return invalid("no tasks to estimate moments from");
    }
    let mut second = vec![0.0; m * m * d];
    let mut first = vec![0.0; m * d];
    let mut buf = vec![0.0; m * d];
    for row in data.rows() {
        for (a, label) in row.iter().enumerate() {
            embed.embed_into(label, &mut buf[a * d..(a + 1) * d]);
        }
        for a in 0..m {
            let ga = &buf[a * d..(a + 1) * d];
            for (acc, &x) in first[a * d..(a + 1) * d].iter_mut().zip(ga) {
                *acc += x;
            }
            for b in a..m {
                let gb = &buf[b * d..(b + 1) * d];
                let dst = &mut second[(a * m + b) * d..(a * m + b + 1) * d];
                for ((acc, &x), &y) in dst.iter_mut().zip(ga).zip(gb) {
                    *acc += x * y;
                }
            }
        }
    }
    let inv = 1.0 / n as f64;
    for a in 0..m {
        for b in a..m {
            for i in 0..d {
                let v = second[(a * m + b) * d + i] * inv;
                second[(a * m + b) * d + i] = v;
                second[(b * m + a) * d + i] = v;
            }
        }
    }
    first.iter_mut().for_each(|x| *x *= inv);
    Ok(PairMoments { n_lfs: m, dim: d, n_samples: n, second, first })
}

/// Indicator frequencies for `{-1,+1}`-valued embeddings:
/// `ones(a, i) = P(g(lf_a)_i = 1)` and `both(a, b, i) = P(g(lf_a)_i = 1, g(lf_b)_i = 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypercubeMoments {
    n_lfs: usize,
    dim: usize,
    ones: Vec<f64>,
    both: Vec<f64>,
}

impl HypercubeMoments {
    /// Builds frequencies from explicit values; `both` is indexed
    /// `(a * n_lfs + b) * dim + i` and must be symmetric in `(a, b)`.
    pub fn from_parts(n_lfs: usize, dim: usize, ones: Vec<f64>, both: Vec<f64>) -> Result<Self> {
        if both.len() != n_lfs * n_lfs * dim || ones.len() != n_lfs * dim {
            return invalid("frequency arrays do not match n_lfs and dim");
        }
        Ok(HypercubeMoments { n_lfs, dim, ones, both })
    }

    pub fn ones(&self, a: usize, i: usize) -> f64 {
        self.ones[a * self.dim + i]
    }

    pub fn both(&self, a: usize, b: usize, i: usize) -> f64 {
        self.both[(a * self.n_lfs + b) * self.dim + i]
    }

    pub fn n_lfs(&self) -> usize {
        self.n_lfs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn hypercube_moments<T, E>(data: &LabelingMatrix<T>, embed: &E) -> Result<HypercubeMoments>
where
    E: CoordinateEmbedding<T> + ?Sized,
{
    if !embed.is_hypercube() {
        return invalid("hypercube moments need a {-1,+1}-valued embedding");
    }
    let (m, d, n) = (data.n_lfs(), embed.dim(), data.n_tasks());
    let mut ones = vec![0u64; m * d];
    let mut both = vec![0u64; m * m * d];
    let mut buf = vec![0.0; m * d];
    for row in data.rows() {
        for (a, label) in row.iter().enumerate() {
            embed.embed_into(label, &mut buf[a * d..(a + 1) * d]);
        }
        for a in 0..m {
            for i in 0..d {
                if buf[a * d + i] > 0.0 {
                    ones[a * d + i] += 1;
                    for b in a..m {
                        if buf[b * d + i] > 0.0 {
                            both[(a * m + b) * d + i] += 1;
                        }
                    }
                }
            }
        }
    }
    let inv = 1.0 / n as f64;
    let mut both_f = vec![0.0; m * m * d];
    for a in 0..m {
        for b in a..m {
            for i in 0..d {
                let v = both[(a * m + b) * d + i] as f64 * inv;
                both_f[(a * m + b) * d + i] = v;
                both_f[(b * m + a) * d + i] = v;
            }
        }
    }
    Ok(HypercubeMoments {
        n_lfs: m,
        dim: d,
        ones: ones.into_iter().map(|c| c as f64 * inv).collect(),
        both: both_f,
    })
}

/// Mean pairwise distances `(1/n) sum_t d(lf_a(t), lf_b(t))`, row-major `m x m`.
pub fn mean_pair_distances<T>(data: &LabelingMatrix<T>, dist: impl Fn(&T, &T) -> f64) -> Vec<f64> {
    let m = data.n_lfs();
    let mut out = vec![0.0; m * m];
    for row in data.rows() {
        for a in 0..m {
            for b in (a + 1)..m {
                out[a * m + b] += dist(&row[a], &row[b]);
            }
        }
    }
    let inv = 1.0 / data.n_tasks() as f64;
    for a in 0..m {
        for b in (a + 1)..m {
            let v = out[a * m + b] * inv;
            out[a * m + b] = v;
            out[b * m + a] = v;
        }
    }
    out
}
