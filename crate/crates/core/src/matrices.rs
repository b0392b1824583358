//! Random square matrices and their extreme singular values.
//!
//! `‖A‖` comes from power iteration on `AᵀA`; `σ_min(A) = 1/‖A⁻¹‖` from one
//! LU factorization followed by inverse iteration with triangular solves.
//! Start vectors are drawn from streams derived from the matrix seed, so a
//! [`SpectralSummary`] is a pure function of `(dist, n, seed)`.

use serde::Serialize;

use crate::distributions::EntryDistribution;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, RngStream};
use crate::scalar::Scalar;

pub const MAX_DIMENSION: usize = 4096;

/// Dense `n × n` matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::config(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from nested rows; panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), n, "matrix rows must have length {n}");
            data.extend_from_slice(row);
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, a| m.max(a.abs()))
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ x`.
    pub fn mul_transpose_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// Default pivot threshold `1e-12 · max|a_ij| · n`.
    pub fn default_pivot_tol(&self) -> T {
        T::of(1e-12) * self.max_abs() * T::of(self.n as f64)
    }
}

impl<T> std::ops::Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// A matrix with i.i.d. entries together with the inputs that reproduce it.
#[derive(Debug, Clone)]
pub struct MatrixSample<T> {
    pub matrix: SquareMatrix<T>,
    pub dist: EntryDistribution,
    pub seed: u64,
}

/// Fills an `n × n` matrix row by row from the stream seeded by `seed`.
pub fn sample_matrix<T: Scalar>(dist: &EntryDistribution, n: usize, seed: u64) -> Result<MatrixSample<T>> {
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::config(format!("dimension {n} outside 1..={MAX_DIMENSION}")));
    }
    let mut rng = RngStream::new(derive_seed(seed, 0));
    let data = (0..n * n).map(|_| T::of(dist.sample(&mut rng))).collect();
    Ok(MatrixSample {
        matrix: SquareMatrix { n, data },
        dist: dist.clone(),
        seed,
    })
}

/// Outcome of a power-type iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationReport<T> {
    pub value: T,
    pub iterations: usize,
    /// Relative change of the Rayleigh quotient at the last step.
    pub residual: T,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for IterationOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::default_tolerance(),
            max_iter: 10_000,
        }
    }
}

fn start_vector<T: Scalar>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = RngStream::new(seed);
    let mut v: Vec<T> = (0..n).map(|_| T::of(rng.standard_normal())).collect();
    let norm = norm2(&v);
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Iterates `v ← M v / ‖M v‖` for the symmetric positive semidefinite
/// operator `M` given as `apply(v) = (M v, vᵀ M v)`.
fn rayleigh_iteration<T: Scalar>(
    mut v: Vec<T>,
    opts: IterationOptions<T>,
    mut apply: impl FnMut(&[T]) -> (Vec<T>, T),
) -> IterationReport<T> {
    let (mut u, mut lambda) = apply(&v);
    let mut residual = T::infinity();
    for it in 1..=opts.max_iter {
        let norm = norm2(&u);
        if norm == T::zero() {
            return IterationReport {
                value: T::zero(),
                iterations: it,
                residual: T::zero(),
                converged: true,
            };
        }
        v.iter_mut().zip(&u).for_each(|(a, &b)| *a = b / norm);
        let (next_u, next_lambda) = apply(&v);
        residual = (next_lambda - lambda).abs() / next_lambda;
        u = next_u;
        lambda = next_lambda;
        if residual <= opts.tol {
            return IterationReport {
                value: lambda,
                iterations: it,
                residual,
                converged: true,
            };
        }
    }
    IterationReport {
        value: lambda,
        iterations: opts.max_iter,
        residual,
        converged: false,
    }
}

/// Largest singular value by power iteration on `AᵀA` from the start vector
/// seeded by `start_seed`.
pub fn operator_norm<T: Scalar>(
    a: &SquareMatrix<T>,
    start_seed: u64,
    opts: IterationOptions<T>,
) -> IterationReport<T> {
    let v = start_vector(a.dim(), start_seed);
    let report = rayleigh_iteration(v, opts, |v| {
        let w = a.mul_vec(v);
        let lambda = dot(&w, &w);
        (a.mul_transpose_vec(&w), lambda)
    });
    IterationReport {
        value: report.value.sqrt(),
        ..report
    }
}

/// LU factorization with partial pivoting, `PA = LU`, stored compactly.
#[derive(Debug, Clone)]
pub struct LuFactorization<T> {
    lu: SquareMatrix<T>,
    /// Row `i` of `PA` is row `perm[i]` of `A`.
    perm: Vec<usize>,
}

/// A pivot fell below the threshold: the matrix is treated as singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot<T> {
    pub column: usize,
    pub magnitude: T,
}

impl<T: Scalar> LuFactorization<T> {
    pub fn factor(a: &SquareMatrix<T>, pivot_tol: T) -> std::result::Result<Self, SingularPivot<T>> {
        let n = a.dim();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, magnitude) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if magnitude < pivot_tol || magnitude == T::zero() {
                return Err(SingularPivot { column: k, magnitude });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != T::zero() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= factor * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &y[..i]);
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = dot(&row[i + 1..], &y[i + 1..]);
            y[i] = (y[i] - s) / row[i];
        }
        y
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        // Uᵀ z = b
        let mut z = b.to_vec();
        for i in 0..n {
            z[i] /= self.lu[(i, i)];
            let zi = z[i];
            for j in i + 1..n {
                z[j] -= self.lu[(i, j)] * zi;
            }
        }
        // Lᵀ y = z
        for i in (0..n).rev() {
            let yi = z[i];
            for j in 0..i {
                z[j] -= self.lu[(i, j)] * yi;
            }
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }
}

/// `σ_min` estimate; `singular` means a pivot fell below the threshold and
/// `value` is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaMinReport<T> {
    pub value: T,
    pub singular: bool,
    pub iterations: usize,
    pub residual: T,
    pub converged: bool,
}

/// Smallest singular value via LU and inverse iteration on `(AᵀA)⁻¹`.
pub fn smallest_singular_value<T: Scalar>(
    a: &SquareMatrix<T>,
    pivot_tol: T,
    start_seed: u64,
    opts: IterationOptions<T>,
) -> SigmaMinReport<T> {
    let lu = match LuFactorization::factor(a, pivot_tol) {
        Ok(lu) => lu,
        Err(_) => {
            return SigmaMinReport {
                value: T::zero(),
                singular: true,
                iterations: 0,
                residual: T::zero(),
                converged: true,
            }
        }
    };
    let v = start_vector(a.dim(), start_seed);
    let report = rayleigh_iteration(v, opts, |v| {
        let w = lu.solve_transpose(v);
        let lambda = dot(&w, &w);
        (lu.solve(&w), lambda)
    });
    SigmaMinReport {
        value: T::one() / report.value.sqrt(),
        singular: false,
        iterations: report.iterations,
        residual: report.residual,
        converged: report.converged,
    }
}

/// Per-matrix record of the two extreme singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSummary<T> {
    pub op_norm: T,
    pub sigma_min: T,
    pub singular_flag: bool,
    /// Iterations used by the norm and `σ_min` solvers.
    pub iterations: [usize; 2],
    pub residuals: [T; 2],
    pub converged: bool,
}

impl<T: Scalar> MatrixSample<T> {
    pub fn operator_norm(&self, opts: IterationOptions<T>) -> IterationReport<T> {
        operator_norm(&self.matrix, derive_seed(self.seed, 1), opts)
    }

    pub fn smallest_singular_value(&self, pivot_tol: T, opts: IterationOptions<T>) -> SigmaMinReport<T> {
        smallest_singular_value(&self.matrix, pivot_tol, derive_seed(self.seed, 2), opts)
    }

    pub fn spectral_summary(&self, opts: IterationOptions<T>) -> SpectralSummary<T> {
        let norm = self.operator_norm(opts);
        let smin = self.smallest_singular_value(self.matrix.default_pivot_tol(), opts);
        // Both are estimates of the same spectrum; keep the invariant exact.
        let sigma_min = smin.value.min(norm.value);
        SpectralSummary {
            op_norm: norm.value,
            sigma_min,
            singular_flag: smin.singular,
            iterations: [norm.iterations, smin.iterations],
            residuals: [norm.residual, smin.residual],
            converged: norm.converged && smin.converged,
        }
    }
}
