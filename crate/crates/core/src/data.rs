//! Labeling-function outputs and the coordinate embeddings applied to them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::perm::{fill_pair_signs, pair_count, Permutation};

/// `n_tasks x n_lfs` labeling-function outputs, stored task-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelingMatrix<T> {
    n_tasks: usize,
    n_lfs: usize,
    entries: Vec<T>,
}

impl<T> LabelingMatrix<T> {
    pub fn new(n_tasks: usize, n_lfs: usize, entries: Vec<T>) -> Result<Self> {
        if n_tasks == 0 || n_lfs == 0 {
            return invalid("a labeling matrix needs at least one task and one labeling function");
        }
        if entries.len() != n_tasks * n_lfs {
            return invalid(format!(
                "expected {} entries for {n_tasks} tasks x {n_lfs} labeling functions, got {}",
                n_tasks * n_lfs,
                entries.len()
            ));
        }
        Ok(LabelingMatrix { n_tasks, n_lfs, entries })
    }

    /// Builds a matrix from per-task rows.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n_tasks = rows.len();
        let n_lfs = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_lfs) {
            return invalid("rows have different numbers of labeling functions");
        }
        Self::new(n_tasks, n_lfs, rows.into_iter().flatten().collect())
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn n_lfs(&self) -> usize {
        self.n_lfs
    }

    pub fn get(&self, task: usize, lf: usize) -> &T {
        &self.entries[task * self.n_lfs + lf]
    }

    pub fn row(&self, task: usize) -> &[T] {
        &self.entries[task * self.n_lfs..(task + 1) * self.n_lfs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.entries.chunks(self.n_lfs)
    }

    /// Keeps only the listed labeling functions, in the given order.
    pub fn select_lfs(&self, lfs: &[usize]) -> Result<Self>
    where
        T: Clone,
    {
        if let Some(&bad) = lfs.iter().find(|&&a| a >= self.n_lfs) {
            return invalid(format!("labeling function {bad} out of range"));
        }
        let entries = self.rows().flat_map(|row| lfs.iter().map(|&a| row[a].clone())).collect();
        Self::new(self.n_tasks, lfs.len(), entries)
    }

    /// Keeps the first `n` tasks.
    pub fn truncate_tasks(&self, n: usize) -> Result<Self>
    where
        T: Clone,
    {
        let n = n.min(self.n_tasks);
        Self::new(n, self.n_lfs, self.entries[..n * self.n_lfs].to_vec())
    }
}

impl LabelingMatrix<Permutation> {
    /// Common ranking length; errors if rankings disagree.
    pub fn rho(&self) -> Result<usize> {
        let rho = self.entries[0].len();
        if self.entries.iter().any(|p| p.len() != rho) {
            return invalid("rankings in a labeling matrix must share the same length");
        }
        Ok(rho)
    }
}

/// Describes the embedding used by a learned model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDescriptor {
    pub kind: String,
    pub dim: usize,
    /// Exponent `c` such that the modeled distance is `d^c`.
    pub exponent: u32,
}

/// Maps labels to real coordinates `g(label) in R^dim`.
pub trait CoordinateEmbedding<T> {
    fn dim(&self) -> usize;
    fn embed_into(&self, label: &T, out: &mut [f64]);
    fn descriptor(&self) -> EmbeddingDescriptor;
    /// True when every coordinate takes values in `{-1, +1}`.
    fn is_hypercube(&self) -> bool {
        false
    }
}

/// Pair-sign embedding of rankings into `{-1,+1}^(rho choose 2)`.
#[derive(Clone, Copy, Debug)]
pub struct PairSignEmbedding {
    pub rho: usize,
}

impl CoordinateEmbedding<Permutation> for PairSignEmbedding {
    fn dim(&self) -> usize {
        pair_count(self.rho)
    }

    fn embed_into(&self, label: &Permutation, out: &mut [f64]) {
        fill_pair_signs(label, out);
    }

    fn descriptor(&self) -> EmbeddingDescriptor {
        EmbeddingDescriptor { kind: "pair_sign".into(), dim: self.dim(), exponent: 1 }
    }

    fn is_hypercube(&self) -> bool {
        true
    }
}

/// Identity embedding of scalar labels.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScalarEmbedding;

impl CoordinateEmbedding<f64> for ScalarEmbedding {
    fn dim(&self) -> usize {
        1
    }

    fn embed_into(&self, label: &f64, out: &mut [f64]) {
        out[0] = *label;
    }

    fn descriptor(&self) -> EmbeddingDescriptor {
        EmbeddingDescriptor { kind: "identity".into(), dim: 1, exponent: 2 }
    }
}

/// Identity embedding of real vectors of a fixed dimension.
#[derive(Clone, Copy, Debug)]
pub struct VectorEmbedding {
    pub dim: usize,
}

impl CoordinateEmbedding<Vec<f64>> for VectorEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_into(&self, label: &Vec<f64>, out: &mut [f64]) {
        out.copy_from_slice(label);
    }

    fn descriptor(&self) -> EmbeddingDescriptor {
        EmbeddingDescriptor { kind: "identity".into(), dim: self.dim, exponent: 2 }
    }
}

/// Lookup-table embedding of the points `0..N` of a finite space.
#[derive(Clone, Debug)]
pub struct TableEmbedding {
    pub coords: Vec<Vec<f64>>,
    pub kind: String,
    pub exponent: u32,
}

impl CoordinateEmbedding<usize> for TableEmbedding {
    fn dim(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    fn embed_into(&self, label: &usize, out: &mut [f64]) {
        out.copy_from_slice(&self.coords[*label]);
    }

    fn descriptor(&self) -> EmbeddingDescriptor {
        EmbeddingDescriptor { kind: self.kind.clone(), dim: self.dim(), exponent: self.exponent }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_shape_checks() {
        assert!(LabelingMatrix::new(2, 3, vec![0.0; 5]).is_err());
        assert!(LabelingMatrix::<f64>::new(0, 3, vec![]).is_err());
        let m = LabelingMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(*m.get(1, 0), 4.0);
        assert_eq!(m.row(0), &[1.0, 2.0, 3.0]);
        let sel = m.select_lfs(&[2, 0]).unwrap();
        assert_eq!(sel.row(1), &[6.0, 4.0]);
        assert!(m.select_lfs(&[3]).is_err());
        assert!(LabelingMatrix::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn ranking_matrix_requires_common_length() {
        let m = LabelingMatrix::new(1, 2, vec![Permutation::identity(3), Permutation::identity(4)]).unwrap();
        assert!(m.rho().is_err());
    }

    #[test]
    fn pair_sign_embedding_writes_signs() {
        let e = PairSignEmbedding { rho: 3 };
        let mut out = [0.0; 3];
        e.embed_into(&Permutation::new(vec![1, 0, 2]).unwrap(), &mut out);
        assert_eq!(out, [-1.0, 1.0, 1.0]);
        assert!(e.is_hypercube());
    }
}
