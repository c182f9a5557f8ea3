//! Linear coarse-graining maps.
//!
//! A selector `Φ ∈ ℝ^{m×N}` of full row rank picks out the resolved
//! coordinates `h = Φx`. From it we build `Σ = sqrt(ΦΦᵀ)`, the right inverse
//! `Φ* = ΦᵀΣ⁻²` and a matrix `Ψ ∈ ℝ^{(N−m)×N}` with orthonormal rows spanning
//! the kernel of `Φ`, so that `Φ*Φ + ΨᵀΨ = I` and every state splits as
//! `x = Φ*h + Ψᵀx̃`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a selector counts as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorMatrix(DMatrix<f64>);

impl SelectorMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::DimensionMismatch("selector matrix is empty".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(
                "selector matrix has non-finite entries".into(),
            ));
        }
        Ok(Self(entries))
    }

    /// Build from row slices; all rows must have the same length.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged selector rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(DMatrix::from_row_slice(rows.len(), ncols, &flat))
    }

    /// Number of resolved coordinates `m`.
    pub fn resolved_dim(&self) -> usize {
        self.0.nrows()
    }

    /// Full phase-space dimension `N`.
    pub fn full_dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Coarse-graining map together with its orthogonal complement.
///
/// Immutable once built.
#[derive(Debug, Clone)]
pub struct CgMap {
    phi: SelectorMatrix,
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    sigma_sq: DMatrix<f64>,
    phi_star: DMatrix<f64>,
    psi: DMatrix<f64>,
}

impl CgMap {
    /// Construct `Σ`, `Φ*` and `Ψ` from `Φ`.
    ///
    /// `Φ*` and `Ψ` come from a Householder QR factorisation of `Φᵀ` padded to a
    /// square matrix, `Σ` from the eigendecomposition of `ΦΦᵀ`. Each row of `Ψ`
    /// is oriented so that its first non-negligible entry is positive.
    pub fn new(phi: SelectorMatrix) -> Result<Self> {
        let m = phi.resolved_dim();
        let n = phi.full_dim();
        if m > n {
            return Err(Error::DimensionMismatch(format!(
                "selector has {m} rows but only {n} columns"
            )));
        }

        let s = phi.matrix().singular_values();
        let largest = s.max();
        let smallest = s.min();
        if !(largest > 0.0) || smallest <= RANK_TOLERANCE * largest {
            return Err(Error::RankDeficient { smallest, largest });
        }

        // Householder QR of [Φᵀ | 0]: Φᵀ = Q₁R₁ and the remaining columns of Q
        // complete an orthonormal basis. Then Φ* = Q₁R₁⁻ᵀ and Φ*Φ = Q₁Q₁ᵀ.
        let mut padded = DMatrix::<f64>::zeros(n, n);
        padded
            .view_mut((0, 0), (n, m))
            .copy_from(&phi.matrix().transpose());
        let qr = padded.qr();
        let q = qr.q();
        let r1 = qr.r().view((0, 0), (m, m)).into_owned();
        let q1 = q.columns(0, m).transpose();
        let phi_star = r1
            .solve_upper_triangular(&q1)
            .ok_or(Error::RankDeficient { smallest, largest })?
            .transpose();

        let sigma_sq = phi.matrix() * phi.matrix().transpose();
        let eig = SymmetricEigen::new(sigma_sq.clone());
        let w = &eig.eigenvectors;
        let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let sigma = w * DMatrix::from_diagonal(&root) * w.transpose();
        let sigma_inv = w * DMatrix::from_diagonal(&root.map(|v| 1.0 / v)) * w.transpose();

        let mut psi = q.columns(m, n - m).transpose();
        for mut row in psi.row_iter_mut() {
            let scale = row.amax();
            let lead = row.iter().copied().find(|v| v.abs() > 1e-12 * scale);
            if matches!(lead, Some(v) if v < 0.0) {
                row.neg_mut();
            }
        }

        Ok(Self {
            phi,
            sigma,
            sigma_inv,
            sigma_sq,
            phi_star,
            psi,
        })
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        self.phi.matrix()
    }

    pub fn selector(&self) -> &SelectorMatrix {
        &self.phi
    }

    /// `Σ = sqrt(ΦΦᵀ)`, symmetric positive definite.
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    /// `Σ² = ΦΦᵀ`.
    pub fn sigma_sq(&self) -> &DMatrix<f64> {
        &self.sigma_sq
    }

    /// `Φ* = ΦᵀΣ⁻²`, of shape `N × m`.
    pub fn phi_star(&self) -> &DMatrix<f64> {
        &self.phi_star
    }

    /// `Ψ`, of shape `(N − m) × N` with orthonormal rows.
    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub fn resolved_dim(&self) -> usize {
        self.phi.resolved_dim()
    }

    pub fn full_dim(&self) -> usize {
        self.phi.full_dim()
    }

    /// Split a state into resolved coordinates `h = Φx` and unresolved ones `x̃ = Ψx`.
    pub fn decompose(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != self.full_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has length {}, expected {}",
                x.len(),
                self.full_dim()
            )));
        }
        let x = DVector::from_column_slice(x);
        let h = self.phi() * &x;
        let xt = &self.psi * &x;
        Ok((h.as_slice().to_vec(), xt.as_slice().to_vec()))
    }

    /// Inverse of [`decompose`](Self::decompose): `x = Φ*h + Ψᵀx̃`.
    pub fn reconstruct(&self, h: &[f64], xt: &[f64]) -> Result<Vec<f64>> {
        let (m, n) = (self.resolved_dim(), self.full_dim());
        if h.len() != m || xt.len() != n - m {
            return Err(Error::DimensionMismatch(format!(
                "got ({}, {}) coordinates, expected ({m}, {})",
                h.len(),
                xt.len(),
                n - m
            )));
        }
        let h = DVector::from_column_slice(h);
        let xt = DVector::from_column_slice(xt);
        let x = &self.phi_star * h + self.psi.transpose() * xt;
        Ok(x.as_slice().to_vec())
    }

    /// `‖Φ*Φ + ΨᵀΨ − I‖_F`.
    pub fn partition_of_identity_error(&self) -> f64 {
        let n = self.full_dim();
        let sum = &self.phi_star * self.phi() + self.psi.transpose() * &self.psi;
        (sum - DMatrix::<f64>::identity(n, n)).norm()
    }
}

/// The benchmark selector `Φ = (1 0)`.
pub fn benchmark_map() -> CgMap {
    let phi = SelectorMatrix::from_rows(&[&[1.0, 0.0]]).expect("static selector");
    CgMap::new(phi).expect("static selector has full rank")
}
