//! Difference operators and null-space bases for d-dimensional lattice graphs.
//!
//! Vertices are ordered row-major over the multi-index `(i_1, ..., i_d)` with
//! axis 1 slowest, i.e. `linear = ((i_1 * N_2 + i_2) * N_3 + i_3) ...`. All
//! file formats and operators in this crate share that ordering.

use crate::error::{Error, Result};

/// Shape of a lattice problem: per-axis vertex counts, per-axis trend orders
/// and per-axis wrap (cylinder) flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeSpec {
    dims: Vec<usize>,
    orders: Vec<usize>,
    wrap: Vec<bool>,
}

impl LatticeSpec {
    pub fn new(dims: Vec<usize>, orders: Vec<usize>, wrap: Vec<bool>) -> Result<Self> {
        if dims.is_empty() || dims.len() != orders.len() || dims.len() != wrap.len() {
            return Err(Error::InvalidSpec(format!(
                "dims/orders/wrap must share a positive length, got {}/{}/{}",
                dims.len(),
                orders.len(),
                wrap.len()
            )));
        }
        for (j, (&n, (&k, &w))) in dims.iter().zip(orders.iter().zip(wrap.iter())).enumerate() {
            if n == 0 {
                return Err(Error::InvalidSpec(format!("axis {j} has zero length")));
            }
            if w {
                if n < 2 {
                    return Err(Error::InvalidSpec(format!(
                        "wrapped axis {j} needs at least 2 vertices"
                    )));
                }
            } else if n <= k + 1 {
                return Err(Error::DimensionTooSmall { n, order: k + 1 });
            }
        }
        Ok(LatticeSpec { dims, orders, wrap })
    }

    /// Chain of length `n` with trend order `k`.
    pub fn chain(n: usize, k: usize) -> Result<Self> {
        LatticeSpec::new(vec![n], vec![k], vec![false])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn wrap(&self) -> &[bool] {
        &self.wrap
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total vertex count.
    pub fn n(&self) -> usize {
        self.dims.iter().product()
    }

    /// Per-axis nullity of the 1d operator: `k_j + 1` unwrapped, 1 wrapped.
    pub fn nullity_per_axis(&self) -> Vec<usize> {
        self.orders
            .iter()
            .zip(&self.wrap)
            .map(|(&k, &w)| if w { 1 } else { k + 1 })
            .collect()
    }

    /// Nullity of the stacked operator (product of per-axis nullities).
    pub fn nullity(&self) -> usize {
        self.nullity_per_axis().iter().product()
    }
}

/// Sparse matrix in both CSR and CSC form with matvec contracts. Immutable
/// after construction and safe to share across threads.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    n_rows: usize,
    n_cols: usize,
    // CSR
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    val: Vec<f64>,
    // CSC (stores the same entries for transpose products)
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    val_csc: Vec<f64>,
}

impl SparseOperator {
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> SparseOperator {
        let mut row_counts = vec![0usize; n_rows + 1];
        for &(r, _, _) in triplets {
            debug_assert!(r < n_rows);
            row_counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_counts[i + 1] += row_counts[i];
        }
        let row_ptr = row_counts;
        let nnz = triplets.len();
        let mut col_idx = vec![0usize; nnz];
        let mut val = vec![0f64; nnz];
        let mut cursor = row_ptr.clone();
        for &(r, c, v) in triplets {
            let p = cursor[r];
            col_idx[p] = c;
            val[p] = v;
            cursor[r] += 1;
        }
        // sort within each row by column for reproducible iteration
        for r in 0..n_rows {
            let (lo, hi) = (row_ptr[r], row_ptr[r + 1]);
            let mut pairs: Vec<(usize, f64)> = (lo..hi).map(|p| (col_idx[p], val[p])).collect();
            pairs.sort_by_key(|&(c, _)| c);
            for (off, (c, v)) in pairs.into_iter().enumerate() {
                col_idx[lo + off] = c;
                val[lo + off] = v;
            }
        }

        let mut col_counts = vec![0usize; n_cols + 1];
        for &c in &col_idx {
            debug_assert!(c < n_cols);
            col_counts[c + 1] += 1;
        }
        for i in 0..n_cols {
            col_counts[i + 1] += col_counts[i];
        }
        let col_ptr = col_counts;
        let mut row_idx = vec![0usize; nnz];
        let mut val_csc = vec![0f64; nnz];
        let mut cursor = col_ptr.clone();
        for r in 0..n_rows {
            for p in row_ptr[r]..row_ptr[r + 1] {
                let c = col_idx[p];
                let q = cursor[c];
                row_idx[q] = r;
                val_csc[q] = val[p];
                cursor[c] += 1;
            }
        }

        SparseOperator {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            val,
            col_ptr,
            row_idx,
            val_csc,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// Iterate entries as (row, col, value) in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.col_idx[p], self.val[p]))
        })
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        use rayon::prelude::*;
        const PAR_THRESHOLD: usize = 1 << 14;
        if self.n_rows >= PAR_THRESHOLD {
            y.par_iter_mut().enumerate().for_each(|(r, out)| {
                let mut acc = 0.0;
                for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.val[p] * x[self.col_idx[p]];
                }
                *out = acc;
            });
        } else {
            for (r, out) in y.iter_mut().enumerate() {
                let mut acc = 0.0;
                for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.val[p] * x[self.col_idx[p]];
                }
                *out = acc;
            }
        }
    }

    /// y = Aᵀ x.
    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_cols];
        self.t_matvec_into(x, &mut y);
        y
    }

    pub fn t_matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_rows);
        assert_eq!(y.len(), self.n_cols);
        use rayon::prelude::*;
        const PAR_THRESHOLD: usize = 1 << 14;
        if self.n_cols >= PAR_THRESHOLD {
            y.par_iter_mut().enumerate().for_each(|(c, out)| {
                let mut acc = 0.0;
                for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                    acc += self.val_csc[p] * x[self.row_idx[p]];
                }
                *out = acc;
            });
        } else {
            for (c, out) in y.iter_mut().enumerate() {
                let mut acc = 0.0;
                for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                    acc += self.val_csc[p] * x[self.row_idx[p]];
                }
                *out = acc;
            }
        }
    }

    /// Dense copy; intended for desk-scale diagnostics and tests.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Operator restricted to a subset of rows (order preserved).
    pub fn select_rows(&self, rows: &[usize]) -> SparseOperator {
        let mut trip = Vec::new();
        for (new_r, &r) in rows.iter().enumerate() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                trip.push((new_r, self.col_idx[p], self.val[p]));
            }
        }
        SparseOperator::from_triplets(rows.len(), self.n_cols, &trip)
    }

    /// Vertical stack; operands must agree on the column count.
    pub fn vstack(blocks: &[&SparseOperator]) -> SparseOperator {
        assert!(!blocks.is_empty());
        let n_cols = blocks[0].n_cols;
        let mut trip = Vec::new();
        let mut row_off = 0;
        for b in blocks {
            assert_eq!(b.n_cols, n_cols);
            for (r, c, v) in b.triplets() {
                trip.push((row_off + r, c, v));
            }
            row_off += b.n_rows;
        }
        SparseOperator::from_triplets(row_off, n_cols, &trip)
    }
}

/// Signed binomial row pattern of the order-`r` forward difference. Order 1
/// is the plain forward difference `(-1, +1)`; higher orders are normalized
/// to a leading `+1`, e.g. order 3 is `(+1, -3, +3, -1)`.
fn diff_coefficients(r: usize) -> Vec<f64> {
    let mut c = vec![0f64; r + 1];
    // recurrence sign pattern is (-1)^{r-j} * C(r, j)
    let mut binom = 1f64;
    for (j, slot) in c.iter_mut().enumerate() {
        let sign = if (r - j) % 2 == 0 { 1.0 } else { -1.0 };
        *slot = sign * binom;
        binom = binom * (r - j) as f64 / (j + 1) as f64;
    }
    if r >= 2 && c[0] < 0.0 {
        for v in &mut c {
            *v = -*v;
        }
    }
    c
}

/// The 1d difference operator of the given order (`order = k + 1 >= 1`).
///
/// Unwrapped: `(N - order) x N`, row `i` applying the signed binomial stencil
/// at offset `i`. Wrapped: the `N x N` circulant analogue with indices mod N.
pub fn build_diff_1d(n: usize, order: usize, wrap: bool) -> Result<SparseOperator> {
    assert!(order >= 1, "order must be at least 1");
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, order });
    }
    if !wrap && n <= order {
        return Err(Error::DimensionTooSmall { n, order });
    }
    let coeff = diff_coefficients(order);
    let mut trip = Vec::new();
    if wrap {
        for i in 0..n {
            for (j, &v) in coeff.iter().enumerate() {
                trip.push((i, (i + j) % n, v));
            }
        }
        Ok(SparseOperator::from_triplets(n, n, &trip))
    } else {
        let rows = n - order;
        for i in 0..rows {
            for (j, &v) in coeff.iter().enumerate() {
                trip.push((i, i + j, v));
            }
        }
        Ok(SparseOperator::from_triplets(rows, n, &trip))
    }
}

/// Strides for the row-major vertex ordering (axis 1 slowest).
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let d = dims.len();
    let mut s = vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        s[j] = s[j + 1] * dims[j + 1];
    }
    s
}

/// The stacked lattice difference operator: block `j` is
/// `I ⊗ ... ⊗ D_{N_j}^{(k_j+1)} ⊗ ... ⊗ I` acting along axis `j`.
pub fn build_diff_lattice(spec: &LatticeSpec) -> Result<SparseOperator> {
    let d = spec.ndim();
    let n = spec.n();
    let st = strides(spec.dims());
    let mut blocks_trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut row_off = 0usize;

    for j in 0..d {
        let nj = spec.dims()[j];
        let dj = build_diff_1d(nj, spec.orders()[j] + 1, spec.wrap()[j])?;
        let other: usize = n / nj;
        // enumerate the fixed coordinates of all axes except j, in row-major
        // order, so block rows follow the Kronecker convention
        for fixed in 0..other {
            // decompose `fixed` into the multi-index over axes != j
            let mut base = 0usize;
            let mut rem = fixed;
            for l in 0..d {
                if l == j {
                    continue;
                }
                let radix: usize = (l + 1..d).filter(|&m| m != j).map(|m| spec.dims()[m]).product();
                let il = rem / radix;
                rem %= radix;
                base += il * st[l];
            }
            for (r, c, v) in dj.triplets() {
                blocks_trip.push((row_off + fixed * dj.n_rows() + r, base + c * st[j], v));
            }
        }
        row_off += other * dj.n_rows();
    }
    Ok(SparseOperator::from_triplets(row_off, n, &blocks_trip))
}

/// Orthonormal basis for the null space of the lattice difference operator.
#[derive(Clone, Debug)]
pub struct NullSpaceBasis {
    n: usize,
    columns: Vec<Vec<f64>>,
}

impl NullSpaceBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Nullity κ.
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Coefficients Qᵀ v.
    pub fn coefficients(&self, v: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|q| q.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Orthogonal projection Q Qᵀ v onto the null space.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        let w = self.coefficients(v);
        let mut out = vec![0.0; self.n];
        for (c, q) in w.iter().zip(&self.columns) {
            for (o, &qi) in out.iter_mut().zip(q) {
                *o += c * qi;
            }
        }
        Ok(out)
    }

    /// Euclidean norm of the projection, computed from coefficients.
    pub fn projection_norm(&self, v: &[f64]) -> f64 {
        self.coefficients(v)
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// An identity-free basis wrapper used when D has a trivial null space.
    pub fn empty(n: usize) -> NullSpaceBasis {
        NullSpaceBasis { n, columns: vec![] }
    }

    pub(crate) fn from_columns(n: usize, columns: Vec<Vec<f64>>) -> NullSpaceBasis {
        NullSpaceBasis { n, columns }
    }
}

/// Projection of `v` onto the null space spanned by `basis`.
pub fn project_null(basis: &NullSpaceBasis, v: &[f64]) -> Result<Vec<f64>> {
    basis.project(v)
}

/// Evaluates the polynomial null-space family (monomial exponents up to the
/// per-axis order, forced to zero on wrapped axes) on the grid and
/// orthonormalizes. Coordinates are affinely rescaled to [-1, 1] per axis
/// before evaluation to keep the monomials well conditioned.
pub fn polynomial_null_basis(spec: &LatticeSpec) -> Result<NullSpaceBasis> {
    let n = spec.n();
    let d = spec.ndim();
    let nullity_axis = spec.nullity_per_axis();
    let kappa: usize = nullity_axis.iter().product();
    let st = strides(spec.dims());

    // per-axis coordinates in [-1, 1]
    let coords: Vec<Vec<f64>> = spec
        .dims()
        .iter()
        .map(|&nj| {
            (0..nj)
                .map(|i| {
                    if nj == 1 {
                        0.0
                    } else {
                        -1.0 + 2.0 * i as f64 / (nj - 1) as f64
                    }
                })
                .collect()
        })
        .collect();

    let mut m = nalgebra::DMatrix::zeros(n, kappa);
    for (col, mut expo_rem) in (0..kappa).map(|c| (c, c)) {
        // decompose the column index into per-axis exponents (row-major)
        let mut expo = vec![0usize; d];
        for j in (0..d).rev() {
            expo[j] = expo_rem % nullity_axis[j];
            expo_rem /= nullity_axis[j];
        }
        for lin in 0..n {
            let mut rem = lin;
            let mut v = 1.0;
            for j in 0..d {
                let ij = rem / st[j];
                rem %= st[j];
                v *= coords[j][ij].powi(expo[j] as i32);
            }
            m[(lin, col)] = v;
        }
    }

    let qr = m.col_piv_qr();
    let (q, r, _p) = qr.unpack();
    let r00 = r[(0, 0)].abs().max(f64::MIN_POSITIVE);
    let mut columns = Vec::with_capacity(kappa);
    for c in 0..kappa {
        let ratio = r[(c, c)].abs() / r00;
        if ratio < 1e-10 {
            return Err(Error::RankDeficient { ratio });
        }
        columns.push(q.column(c).iter().copied().collect());
    }
    Ok(NullSpaceBasis::from_columns(n, columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_difference_of_ramp() {
        let d = build_diff_1d(5, 1, false).unwrap();
        let out = d.matvec(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(out, vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn third_order_stencil() {
        let d = build_diff_1d(6, 3, false).unwrap();
        assert_eq!(d.n_rows(), 3);
        // row pattern (+1, -3, +3, -1)
        let theta = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_relative_eq!(d.matvec(&theta)[0], 1.0);
        let theta = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_relative_eq!(d.matvec(&theta)[0], -3.0);
        let theta = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        assert_relative_eq!(d.matvec(&theta)[0], 3.0);
        let theta = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert_relative_eq!(d.matvec(&theta)[0], -1.0);
    }

    #[test]
    fn coefficients_are_signed_binomials_up_to_row_sign() {
        // |c_j| = C(r, j) with alternating signs
        for r in 1..=5 {
            let c = diff_coefficients(r);
            let mut binom = 1f64;
            for j in 0..=r {
                assert_relative_eq!(c[j].abs(), binom);
                if j < r {
                    assert!(c[j] * c[j + 1] < 0.0, "signs must alternate");
                }
                binom = binom * (r - j) as f64 / (j + 1) as f64;
            }
        }
    }

    #[test]
    fn recurrence_property_up_to_sign() {
        // D^{(r)} equals D^{(1)}_{smaller} * D^{(r-1)} up to a global sign
        for n in [6usize, 9] {
            for r in 2..=3usize {
                let dr = build_diff_1d(n, r, false).unwrap().to_dense();
                let d1 = build_diff_1d(n - r + 1, 1, false).unwrap().to_dense();
                let dr1 = build_diff_1d(n, r - 1, false).unwrap().to_dense();
                let prod = d1 * dr1;
                let same = (dr.clone() - prod.clone()).abs().max();
                let flipped = (dr + prod).abs().max();
                assert!(same < 1e-12 || flipped < 1e-12);
            }
        }
    }

    #[test]
    fn circulant_annihilates_constants() {
        let d = build_diff_1d(4, 1, true).unwrap();
        let out = d.matvec(&[3.5, 3.5, 3.5, 3.5]);
        assert!(out.iter().all(|&v| v.abs() < 1e-15));
        assert_eq!(d.n_rows(), 4);
    }

    #[test]
    fn too_small_axis_errors() {
        assert!(matches!(
            build_diff_1d(3, 3, false),
            Err(Error::DimensionTooSmall { .. })
        ));
        assert!(build_diff_1d(4, 3, false).is_ok());
    }

    #[test]
    fn lattice_row_counts_match_edge_counts() {
        // 3x3 grid, k=0: 3*2 + 2*3 = 12 rows, 9 cols
        let spec = LatticeSpec::new(vec![3, 3], vec![0, 0], vec![false, false]).unwrap();
        let d = build_diff_lattice(&spec).unwrap();
        assert_eq!(d.n_rows(), 12);
        assert_eq!(d.n_cols(), 9);
    }

    #[test]
    fn lattice_annihilates_constants() {
        let spec = LatticeSpec::new(vec![2, 2], vec![0, 0], vec![false, false]).unwrap();
        let d = build_diff_lattice(&spec).unwrap();
        let out = d.matvec(&[7.0, 7.0, 7.0, 7.0]);
        assert!(out.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn matvec_agrees_with_dense_product() {
        let spec = LatticeSpec::new(vec![4, 3], vec![1, 0], vec![false, false]).unwrap();
        let d = build_diff_lattice(&spec).unwrap();
        let dense = d.to_dense();
        let mut rng = crate::rng::CounterRng::new(11, 0);
        for _ in 0..5 {
            let x: Vec<f64> = (0..d.n_cols()).map(|_| rng.next_normal()).collect();
            let y = d.matvec(&x);
            let yd = dense.clone() * nalgebra::DVector::from_column_slice(&x);
            for (a, b) in y.iter().zip(yd.iter()) {
                assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-12);
            }
            let z: Vec<f64> = (0..d.n_rows()).map(|_| rng.next_normal()).collect();
            let w = d.t_matvec(&z);
            let wd = dense.transpose() * nalgebra::DVector::from_column_slice(&z);
            for (a, b) in w.iter().zip(wd.iter()) {
                assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn null_basis_dimensions_and_orthonormality() {
        // 4x4, k=(1,1): kappa = 4
        let spec = LatticeSpec::new(vec![4, 4], vec![1, 1], vec![false, false]).unwrap();
        let basis = polynomial_null_basis(&spec).unwrap();
        assert_eq!(basis.dim(), 4);
        let d = build_diff_lattice(&spec).unwrap();
        for q in basis.columns() {
            let dq = d.matvec(q);
            assert!(dq.iter().all(|&v| v.abs() < 1e-10));
            assert_relative_eq!(q.iter().map(|v| v * v).sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        // Q^T Q = I
        for (i, qi) in basis.columns().iter().enumerate() {
            for (j, qj) in basis.columns().iter().enumerate() {
                let dot: f64 = qi.iter().zip(qj).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(dot, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn wrapped_axis_reduces_nullity() {
        let spec = LatticeSpec::new(vec![4, 4], vec![1, 1], vec![true, false]).unwrap();
        assert_eq!(spec.nullity(), 2);
        let basis = polynomial_null_basis(&spec).unwrap();
        assert_eq!(basis.dim(), 2);
        let d = build_diff_lattice(&spec).unwrap();
        for q in basis.columns() {
            assert!(d.matvec(q).iter().all(|&v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn constant_basis_1d() {
        let spec = LatticeSpec::chain(5, 0).unwrap();
        let basis = polynomial_null_basis(&spec).unwrap();
        assert_eq!(basis.dim(), 1);
        let q = &basis.columns()[0];
        let expect = 1.0 / 5f64.sqrt();
        for &v in q {
            assert_relative_eq!(v.abs(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_is_mean_for_constants() {
        let spec = LatticeSpec::chain(6, 0).unwrap();
        let basis = polynomial_null_basis(&spec).unwrap();
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let p = basis.project(&v).unwrap();
        for &x in &p {
            assert_relative_eq!(x, 3.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_idempotent_and_annihilated() {
        let spec = LatticeSpec::new(vec![5, 4], vec![1, 1], vec![false, false]).unwrap();
        let basis = polynomial_null_basis(&spec).unwrap();
        let d = build_diff_lattice(&spec).unwrap();
        let mut rng = crate::rng::CounterRng::new(3, 1);
        let v: Vec<f64> = (0..spec.n()).map(|_| rng.next_normal()).collect();
        let p = basis.project(&v).unwrap();
        let pp = basis.project(&p).unwrap();
        for (a, b) in p.iter().zip(&pp) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(d.matvec(&p).iter().all(|&x| x.abs() < 1e-9));
        // vector already in the span projects to itself
        let q0 = basis.columns()[1].clone();
        let pq = basis.project(&q0).unwrap();
        for (a, b) in q0.iter().zip(&pq) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_of_orthogonal_vector_is_zero() {
        let spec = LatticeSpec::chain(4, 0).unwrap();
        let basis = polynomial_null_basis(&spec).unwrap();
        let v = [1.0, -1.0, 1.0, -1.0]; // orthogonal to constants
        let p = basis.project(&v).unwrap();
        assert!(p.iter().all(|&x| x.abs() < 1e-14));
    }

    #[test]
    fn polynomials_annihilated_on_lattices() {
        // ||D p||_inf <= 1e-9 ||p||_inf for per-axis degrees <= k_j
        let spec = LatticeSpec::new(vec![7, 6], vec![2, 1], vec![false, false]).unwrap();
        let d = build_diff_lattice(&spec).unwrap();
        let st = strides(spec.dims());
        for (a1, a2) in [(0, 0), (1, 0), (2, 1), (2, 0), (0, 1)] {
            let mut p = vec![0.0; spec.n()];
            for (lin, slot) in p.iter_mut().enumerate() {
                let i1 = lin / st[0];
                let i2 = lin % st[0];
                *slot = (i1 as f64).powi(a1) * (i2 as f64).powi(a2);
            }
            let sup = p.iter().fold(0f64, |m, &v| m.max(v.abs()));
            let dp = d.matvec(&p);
            let dsup = dp.iter().fold(0f64, |m, &v| m.max(v.abs()));
            assert!(dsup <= 1e-9 * sup.max(1.0), "degree ({a1},{a2}) not annihilated");
        }
    }

    #[test]
    fn length_mismatch_is_reported() {
        let spec = LatticeSpec::chain(4, 0).unwrap();
        let basis = polynomial_null_basis(&spec).unwrap();
        assert!(matches!(
            basis.project(&[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
