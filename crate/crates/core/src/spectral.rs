//! Eigenstructure of lattice difference operators: per-axis spectra, the
//! Kronecker-sum tensor of squared singular values, tail sums of inverse
//! singular values, and the incoherence constant of the left singular
//! vectors.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::lattice::{build_diff_1d, LatticeSpec, SparseOperator};

/// Eigenvalues below this magnitude are clamped to zero when classifying
/// null directions.
const NULL_CLAMP: f64 = 1e-12;

/// Largest matrix entry count that the dense decompositions will accept.
pub const DENSE_LIMIT: usize = 10_000_000;

/// All `N` eigenvalues of D₁ᵀD₁ for the 1d operator, ascending, from a dense
/// symmetric eigensolver. Zeros of the null space are included.
pub fn eigenvalues_1d(n: usize, order: usize, wrap: bool) -> Result<Vec<f64>> {
    let d = build_diff_1d(n, order, wrap)?;
    let dense = d.to_dense();
    let dtd = dense.transpose() * dense;
    let mut ev: Vec<f64> = dtd
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&v| if v.abs() < NULL_CLAMP { 0.0 } else { v.max(0.0) })
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ev)
}

/// Kronecker-sum representation of the spectrum of DᵀD on a lattice:
/// ξ_i² = Σ_j ρ_{i_j} over per-axis eigenvalue lists.
#[derive(Clone, Debug)]
pub struct EigenStructure {
    rho_per_axis: Vec<Vec<f64>>,
    lambda_max: f64,
}

impl EigenStructure {
    pub fn rho_per_axis(&self) -> &[Vec<f64>] {
        &self.rho_per_axis
    }

    /// Largest eigenvalue of DᵀD.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn dims(&self) -> Vec<usize> {
        self.rho_per_axis.iter().map(Vec::len).collect()
    }

    pub fn n(&self) -> usize {
        self.rho_per_axis.iter().map(Vec::len).product()
    }

    /// ξ² at a multi-index (0-based, per-axis positions into the ascending
    /// eigenvalue lists).
    pub fn xi_sq(&self, idx: &[usize]) -> f64 {
        idx.iter()
            .zip(&self.rho_per_axis)
            .map(|(&i, rho)| rho[i])
            .sum()
    }

    /// Number of zero eigenvalues per axis.
    pub fn nullity_per_axis(&self) -> Vec<usize> {
        self.rho_per_axis
            .iter()
            .map(|rho| rho.iter().take_while(|&&v| v == 0.0).count())
            .collect()
    }

    /// Visit every multi-index with its ξ² value (row-major order).
    pub fn for_each_xi_sq(&self, mut f: impl FnMut(&[usize], f64)) {
        let dims = self.dims();
        let d = dims.len();
        let mut idx = vec![0usize; d];
        loop {
            f(&idx, self.xi_sq(&idx));
            let mut j = d;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < dims[j] {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

/// Per-axis spectra assembled into the lazy Kronecker-sum tensor.
pub fn kron_sum_eigenvalues(spec: &LatticeSpec) -> Result<EigenStructure> {
    let mut rho_per_axis = Vec::with_capacity(spec.ndim());
    for j in 0..spec.ndim() {
        rho_per_axis.push(eigenvalues_1d(
            spec.dims()[j],
            spec.orders()[j] + 1,
            spec.wrap()[j],
        )?);
    }
    let lambda_max = rho_per_axis
        .iter()
        .map(|rho| rho.last().copied().unwrap_or(0.0))
        .sum();
    Ok(EigenStructure {
        rho_per_axis,
        lambda_max,
    })
}

/// Index sets excluded from the inverse-singular-value tail sum.
#[derive(Clone, Debug)]
pub enum ExcludedSet {
    /// Exactly the null multi-indices (ξ_i = 0).
    NullSpace,
    /// Ball-shaped set {i : ||(i - k - 1)_+||_2 < r} in 0-based indexing,
    /// which always contains the null multi-indices for r > 0.
    Ball { radius: f64 },
    /// Explicit 0-based multi-indices.
    Explicit(BTreeSet<Vec<usize>>),
}

impl ExcludedSet {
    /// Membership test for a 0-based multi-index given per-axis trend orders
    /// and nullities.
    pub fn contains_for(&self, idx: &[usize], orders: &[usize], nullity_axis: &[usize]) -> bool {
        match self {
            ExcludedSet::NullSpace => idx
                .iter()
                .zip(nullity_axis)
                .all(|(&i, &nil)| i < nil),
            ExcludedSet::Ball { radius } => {
                let mut sq = 0.0;
                for (&i, &k) in idx.iter().zip(orders) {
                    let over = i.saturating_sub(k + 1) as f64;
                    sq += over * over;
                }
                sq.sqrt() < *radius
            }
            ExcludedSet::Explicit(set) => set.contains(idx),
        }
    }
}

/// The scalar L_{J,p} = ( μ²/n · Σ_{i ∉ J} ξ_i^{-p} )^{1/p} over the
/// Kronecker-sum spectrum. Errors if an index outside J has ξ_i = 0, which
/// signals that J fails to cover the null space.
pub fn l_jp(spec: &LatticeSpec, excluded: &ExcludedSet, p: f64, mu: f64) -> Result<f64> {
    assert!(p >= 1.0, "p must be at least 1");
    assert!(mu >= 1.0, "incoherence constant must be at least 1");
    let eigen = kron_sum_eigenvalues(spec)?;
    l_jp_from_eigen(&eigen, spec.orders(), excluded, p, mu)
}

pub fn l_jp_from_eigen(
    eigen: &EigenStructure,
    orders: &[usize],
    excluded: &ExcludedSet,
    p: f64,
    mu: f64,
) -> Result<f64> {
    let nullity_axis = eigen.nullity_per_axis();
    let n = eigen.n() as f64;
    let mut sum = 0.0;
    let mut zero_outside = false;
    eigen.for_each_xi_sq(|idx, xi_sq| {
        if excluded.contains_for(idx, orders, &nullity_axis) {
            return;
        }
        if xi_sq == 0.0 {
            zero_outside = true;
        } else {
            sum += xi_sq.powf(-p / 2.0);
        }
    });
    if zero_outside {
        return Err(Error::ZeroEigenvalueInSum);
    }
    Ok((mu * mu / n * sum).powf(1.0 / p))
}

/// Incoherence constant μ = max_j ||U_j||_∞ √m over the left singular
/// vectors of the operator (dense decomposition; desk scale only).
pub fn incoherence_constant(op: &SparseOperator) -> Result<f64> {
    let size = op.n_rows() * op.n_cols();
    if size > DENSE_LIMIT {
        return Err(Error::SizeLimit {
            size,
            limit: DENSE_LIMIT,
        });
    }
    let dense = op.to_dense();
    let m = op.n_rows() as f64;
    let svd = dense.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut mu: f64 = 0.0;
    for c in 0..u.ncols() {
        let linf = u.column(c).iter().fold(0f64, |acc, &v| acc.max(v.abs()));
        mu = mu.max(linf * m.sqrt());
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense_dtd_spectrum(spec: &LatticeSpec) -> Vec<f64> {
        let d = crate::lattice::build_diff_lattice(spec).unwrap();
        let dense = d.to_dense();
        let dtd = dense.transpose() * dense;
        let mut ev: Vec<f64> = dtd.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    #[test]
    fn path_graph_second_eigenvalue() {
        // second-smallest eigenvalue of the chain DᵀD at k=0 is 4 sin²(π/2N)
        let ev = eigenvalues_1d(8, 1, false).unwrap();
        assert_relative_eq!(ev[1], 0.1522409349774265, epsilon = 1e-10);
        assert_eq!(ev.len(), 8);
    }

    #[test]
    fn null_multiplicity_matches_order() {
        let ev = eigenvalues_1d(5, 1, false).unwrap();
        assert_eq!(ev.iter().filter(|&&v| v == 0.0).count(), 1);
        let ev = eigenvalues_1d(6, 2, false).unwrap();
        assert_eq!(ev.iter().filter(|&&v| v == 0.0).count(), 2);
    }

    #[test]
    fn kron_sum_zero_at_null_corner() {
        let spec = LatticeSpec::new(vec![3, 3], vec![0, 0], vec![false, false]).unwrap();
        let eigen = kron_sum_eigenvalues(&spec).unwrap();
        assert_eq!(eigen.xi_sq(&[0, 0]), 0.0);
    }

    #[test]
    fn lambda_max_matches_dense() {
        let spec = LatticeSpec::new(vec![4, 4], vec![0, 0], vec![false, false]).unwrap();
        let eigen = kron_sum_eigenvalues(&spec).unwrap();
        let ev = dense_dtd_spectrum(&spec);
        assert_relative_eq!(eigen.lambda_max(), *ev.last().unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn kron_sum_multiset_equals_dense_spectrum() {
        for (dims, orders, wrap) in [
            (vec![3, 2], vec![0, 0], vec![false, false]),
            (vec![4, 4], vec![1, 1], vec![false, false]),
            (vec![5, 3], vec![1, 0], vec![false, true]),
            (vec![4, 2, 3], vec![0, 0, 0], vec![false, false, false]),
        ] {
            let spec = LatticeSpec::new(dims, orders, wrap).unwrap();
            let eigen = kron_sum_eigenvalues(&spec).unwrap();
            let mut kron: Vec<f64> = Vec::with_capacity(spec.n());
            eigen.for_each_xi_sq(|_, v| kron.push(v));
            kron.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let dense = dense_dtd_spectrum(&spec);
            assert_eq!(kron.len(), dense.len());
            for (a, b) in kron.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn l_jp_matches_arithmetic_oracle() {
        // 1d, N=4, k=0, J = null set, p=2, mu=1:
        // sqrt( (1/4) * sum_{l=2..4} 1/rho_l ) = 0.7905694150420949
        let spec = LatticeSpec::chain(4, 0).unwrap();
        let v = l_jp(&spec, &ExcludedSet::NullSpace, 2.0, 1.0).unwrap();
        assert_relative_eq!(v, 0.7905694150420949, epsilon = 1e-12);
    }

    #[test]
    fn l_jp_empty_sum_is_zero() {
        let spec = LatticeSpec::chain(4, 0).unwrap();
        let all: BTreeSet<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
        let v = l_jp(&spec, &ExcludedSet::Explicit(all), 2.0, 1.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn l_jp_rejects_too_small_sets() {
        let spec = LatticeSpec::chain(4, 0).unwrap();
        let missing_null: BTreeSet<Vec<usize>> = [vec![1usize]].into_iter().collect();
        assert!(matches!(
            l_jp(&spec, &ExcludedSet::Explicit(missing_null), 2.0, 1.0),
            Err(Error::ZeroEigenvalueInSum)
        ));
    }

    #[test]
    fn ball_contains_null_indices() {
        let spec = LatticeSpec::new(vec![6, 6], vec![1, 1], vec![false, false]).unwrap();
        // a small positive radius keeps the null corner excluded
        let v = l_jp(&spec, &ExcludedSet::Ball { radius: 0.5 }, 2.0, 1.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn incoherence_identity_is_one() {
        let id = SparseOperator::from_triplets(1, 1, &[(0, 0, 1.0)]);
        assert_relative_eq!(incoherence_constant(&id).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn incoherence_chain_matches_reference_and_range() {
        let d = build_diff_1d(16, 1, false).unwrap();
        let mu = incoherence_constant(&d).unwrap();
        // dense singular-vector reference
        assert_relative_eq!(mu, 1.3693063937629346, epsilon = 1e-9);
        let m = d.n_rows() as f64;
        assert!(mu >= 1.0 && mu <= m.sqrt());
    }
}
