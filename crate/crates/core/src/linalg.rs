//! Dense symmetric eigen-decomposition on row-major buffers.

use alloc::vec::Vec;

use nalgebra::DMatrix;

/// Eigenpairs of a symmetric matrix sorted by descending eigenvalue.
/// `vectors[k]` is the unit eigenvector of `values[k]`, with its largest
/// absolute component made positive so the output is sign-stable.
pub(crate) struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub(crate) fn symmetric_eigen(n: usize, row_major: &[f64]) -> SymmetricEigen {
    debug_assert_eq!(row_major.len(), n * n);
    if n == 0 {
        return SymmetricEigen {
            values: Vec::new(),
            vectors: Vec::new(),
        };
    }
    let m = DMatrix::from_row_slice(n, n, row_major);
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let col = eig.eigenvectors.column(k);
            let mut v: Vec<f64> = col.iter().copied().collect();
            let pivot = v.iter().copied().fold(
                0.0f64,
                |best, x| if x.abs() > best.abs() { x } else { best },
            );
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    SymmetricEigen { values, vectors }
}

/// Reassembles `Σ max(λₖ, 0) vₖ vₖᵀ` (row-major).
pub(crate) fn clip_to_psd(n: usize, eig: &SymmetricEigen) -> Vec<f64> {
    let mut out = alloc::vec![0.0; n * n];
    for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
        if *lambda <= 0.0 {
            continue;
        }
        for i in 0..n {
            let li = lambda * v[i];
            for j in 0..n {
                out[i * n + j] += li * v[j];
            }
        }
    }
    // Exact symmetry.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (out[i * n + j] + out[j * n + i]);
            out[i * n + j] = m;
            out[j * n + i] = m;
        }
    }
    out
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(n: usize, row_major: &[f64]) -> f64 {
    eigenvalues(n, row_major).last().copied().unwrap_or(0.0)
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn eigenvalues(n: usize, row_major: &[f64]) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut values: Vec<f64> = DMatrix::from_row_slice(n, n, row_major)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}
