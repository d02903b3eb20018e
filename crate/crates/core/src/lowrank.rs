//! Complex SVD, truncated rank-k approximation, nuclear norm and singular
//! value thresholding.
//!
//! The decomposition reduces a tall matrix to a square triangular factor with
//! Householder QR and diagonalizes that factor with one-sided (Hestenes)
//! Jacobi rotations. Wide matrices are handled through their conjugate
//! transpose. Spectrograms are very tall (`K = 4096` rows against a few
//! hundred frames), so the QR step dominates and the Jacobi sweeps stay cheap.

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = Array2<Complex64>;

const JACOBI_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// `M = U · diag(σ) · V^H` with `r = min(rows, cols)` columns in `U` and `V`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `Σ_{i<k} σ_i u_i v_i^H` with each `σ_i` replaced by `shrink(σ_i)`.
    pub fn reconstruct_with(&self, k: usize, shrink: impl Fn(f64) -> f64) -> CMatrix {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut out = CMatrix::zeros((m, n));
        for i in 0..k.min(self.rank()) {
            let s = shrink(self.singular_values[i]);
            if s == 0.0 {
                continue;
            }
            let vc: Vec<Complex64> = self.v.column(i).iter().map(|z| z.conj() * s).collect();
            for (r, ui) in self.u.column(i).iter().enumerate() {
                if *ui == Complex64::default() {
                    continue;
                }
                let mut row = out.row_mut(r);
                for (o, vj) in row.iter_mut().zip(&vc) {
                    *o += ui * vj;
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(self.rank(), |s| s)
    }
}

/// Column-major dense working matrix.
#[derive(Clone)]
struct Cols {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Cols {
    fn from_array(m: &CMatrix, conjugate_transpose: bool) -> Self {
        if conjugate_transpose {
            let (rows, cols) = (m.ncols(), m.nrows());
            let mut data = Vec::with_capacity(rows * cols);
            for row in m.rows() {
                data.extend(row.iter().map(|z| z.conj()));
            }
            Self { rows, cols, data }
        } else {
            let (rows, cols) = m.dim();
            let mut data = vec![Complex64::default(); rows * cols];
            for ((i, j), z) in m.indexed_iter() {
                data[j * rows + i] = *z;
            }
            Self { rows, cols, data }
        }
    }

    fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::default(); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::from(1.0);
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn two_cols_mut(&mut self, p: usize, q: usize) -> (&mut [Complex64], &mut [Complex64]) {
        debug_assert!(p < q);
        let (head, tail) = self.data.split_at_mut(q * self.rows);
        (&mut head[p * self.rows..(p + 1) * self.rows], &mut tail[..self.rows])
    }

    fn to_array(&self) -> CMatrix {
        CMatrix::from_shape_fn((self.rows, self.cols), |(i, j)| self.data[j * self.rows + i])
    }
}

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // Four independent accumulators let the loop vectorize.
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: Complex64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x.conj() * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            re[i] += x[i].re * y[i].re + x[i].im * y[i].im;
            im[i] += x[i].re * y[i].im - x[i].im * y[i].re;
        }
    }
    Complex64::new(re.iter().sum(), im.iter().sum()) + tail
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Householder QR of a tall matrix in place. Returns the reflectors
/// (`v_j` acting on rows `j..`) and the `cols × cols` upper-triangular factor.
fn householder_qr(mut a: Cols) -> (Vec<Vec<Complex64>>, Cols) {
    let (m, n) = (a.rows, a.cols);
    debug_assert!(m >= n);
    let mut reflectors = Vec::with_capacity(n);
    for j in 0..n {
        let x = &a.col(j)[j..];
        let xnorm = norm_sqr(x).sqrt();
        if xnorm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Complex64::from(1.0)
        };
        let alpha = -phase * xnorm;
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm = norm_sqr(&v).sqrt();
        if vnorm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vnorm);
        {
            let c = a.col_mut(j);
            c[j] = alpha;
            c[j + 1..].iter_mut().for_each(|z| *z = Complex64::default());
        }
        for c in j + 1..n {
            let col = &mut a.col_mut(c)[j..];
            let d = dot_conj(&v, col) * 2.0;
            for (z, vi) in col.iter_mut().zip(&v) {
                *z -= vi * d;
            }
        }
        reflectors.push(v);
    }
    let mut r = Cols {
        rows: n,
        cols: n,
        data: vec![Complex64::default(); n * n],
    };
    for j in 0..n {
        r.col_mut(j)[..=j].copy_from_slice(&a.col(j)[..=j]);
    }
    (reflectors, r)
}

/// Applies `Q = H_0 H_1 ⋯ H_{n−1}` to the `m × r` matrix `y` in place.
fn apply_q(reflectors: &[Vec<Complex64>], y: &mut Cols) {
    for (j, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        for c in 0..y.cols {
            let col = &mut y.col_mut(c)[j..];
            let d = dot_conj(v, col) * 2.0;
            for (z, vi) in col.iter_mut().zip(v) {
                *z -= vi * d;
            }
        }
    }
}

/// One-sided Jacobi: rotates the columns of `w` (and accumulates the same
/// rotations into `v`) until they are mutually orthogonal.
fn one_sided_jacobi(w: &mut Cols, v: &mut Cols) -> Result<()> {
    let n = w.cols;
    let mut norms: Vec<f64> = (0..n).map(|j| norm_sqr(w.col(j))).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (wp, wq) = w.two_cols_mut(p, q);
                let gamma = dot_conj(wp, wq);
                let g = gamma.norm();
                if g <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let pc = phase.conj();
                for (xp, xq) in wp.iter_mut().zip(wq.iter_mut()) {
                    let yq = *xq * pc;
                    let np = *xp * c - yq * s;
                    *xq = *xp * s + yq * c;
                    *xp = np;
                }
                let (vp, vq) = v.two_cols_mut(p, q);
                for (xp, xq) in vp.iter_mut().zip(vq.iter_mut()) {
                    let yq = *xq * pc;
                    let np = *xp * c - yq * s;
                    *xq = *xp * s + yq * c;
                    *xp = np;
                }
                norms[p] = norm_sqr(w.col(p));
                norms[q] = norm_sqr(w.col(q));
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::Numerical(format!(
        "one-sided Jacobi did not converge in {MAX_SWEEPS} sweeps"
    )))
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("matrix has NaN or infinite entries".into()));
    }
    Ok(())
}

/// Orthonormalizes the columns of `u` in order; a column that loses most of
/// its norm (a numerically null direction) is replaced by a canonical basis
/// vector orthogonalized against the others.
fn orthonormalize(u: &mut Cols) {
    let m = u.rows;
    let mut next_basis = 0usize;
    for j in 0..u.cols {
        let before = norm_sqr(u.col(j)).sqrt();
        for _ in 0..2 {
            for i in 0..j {
                let (ui, uj) = u.two_cols_mut(i, j);
                let d = dot_conj(ui, uj);
                uj.iter_mut().zip(ui.iter()).for_each(|(z, b)| *z -= b * d);
            }
        }
        let after = norm_sqr(u.col(j)).sqrt();
        if before > 0.0 && after > 0.5 * before {
            u.col_mut(j).iter_mut().for_each(|z| *z /= after);
            continue;
        }
        // Completion with e_k.
        loop {
            let col = u.col_mut(j);
            col.iter_mut().for_each(|z| *z = Complex64::default());
            col[next_basis % m] = Complex64::from(1.0);
            next_basis += 1;
            for _ in 0..2 {
                for i in 0..j {
                    let (ui, uj) = u.two_cols_mut(i, j);
                    let d = dot_conj(ui, uj);
                    uj.iter_mut().zip(ui.iter()).for_each(|(z, b)| *z -= b * d);
                }
            }
            let nrm = norm_sqr(u.col(j)).sqrt();
            if nrm > 0.5 {
                u.col_mut(j).iter_mut().for_each(|z| *z /= nrm);
                break;
            }
        }
    }
}

/// Triangular factor, singular values and right singular vectors of a tall
/// matrix, sorted descending. `w` holds `R V` (columns `σ_i u_i^R`).
struct RightFactors {
    reflectors: Vec<Vec<Complex64>>,
    w: Cols,
    v: Cols,
    sigma: Vec<f64>,
}

fn right_factors(a: Cols) -> Result<RightFactors> {
    let n = a.cols;
    let (reflectors, mut r) = householder_qr(a);
    let mut v = Cols::identity(n);
    one_sided_jacobi(&mut r, &mut v)?;
    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = (0..n).map(|j| norm_sqr(r.col(j)).sqrt()).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]));
    let mut w = Cols {
        rows: n,
        cols: n,
        data: Vec::with_capacity(n * n),
    };
    let mut vs = Cols {
        rows: n,
        cols: n,
        data: Vec::with_capacity(n * n),
    };
    for &j in &order {
        w.data.extend_from_slice(r.col(j));
        vs.data.extend_from_slice(v.col(j));
    }
    let sigma = order.iter().map(|&j| sig[j]).collect();
    Ok(RightFactors {
        reflectors,
        w,
        v: vs,
        sigma,
    })
}

/// Scales each `u_i` so its largest-magnitude entry is positive real and
/// applies the same phase to `v_i`.
fn normalize_phases(u: &mut CMatrix, v: &mut CMatrix) {
    for i in 0..u.ncols() {
        let mut best = Complex64::default();
        for z in u.column(i) {
            if z.norm() > best.norm() {
                best = *z;
            }
        }
        if best.norm() == 0.0 {
            continue;
        }
        let rot = (best / best.norm()).conj();
        u.column_mut(i).iter_mut().for_each(|z| *z *= rot);
        v.column_mut(i).iter_mut().for_each(|z| *z *= rot);
    }
}

/// Thin SVD with `r = min(rows, cols)` singular triplets.
pub fn svd(m: &CMatrix) -> Result<SvdFactors> {
    check_finite(m)?;
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    let wide = rows < cols;
    let a = Cols::from_array(m, wide);
    let (big, n) = (a.rows, a.cols);
    let rf = right_factors(a)?;

    let mut ur = rf.w.clone();
    for (j, &s) in rf.sigma.iter().enumerate() {
        if s > 0.0 {
            ur.col_mut(j).iter_mut().for_each(|z| *z /= s);
        } else {
            ur.col_mut(j).iter_mut().for_each(|z| *z = Complex64::default());
        }
    }
    orthonormalize(&mut ur);
    let mut left = Cols {
        rows: big,
        cols: n,
        data: vec![Complex64::default(); big * n],
    };
    for j in 0..n {
        left.col_mut(j)[..n].copy_from_slice(ur.col(j));
    }
    apply_q(&rf.reflectors, &mut left);

    let (mut u, mut v) = if wide {
        (rf.v.to_array(), left.to_array())
    } else {
        (left.to_array(), rf.v.to_array())
    };
    normalize_phases(&mut u, &mut v);
    Ok(SvdFactors {
        u,
        singular_values: rf.sigma,
        v,
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    check_finite(m)?;
    if m.is_empty() {
        return Err(Error::invalid("empty matrix"));
    }
    let a = Cols::from_array(m, m.nrows() < m.ncols());
    Ok(right_factors(a)?.sigma)
}

/// Best rank-`k` approximation in the Frobenius norm.
///
/// Computed as the projection of `M` onto its leading `k`-dimensional
/// singular subspace on the smaller side.
pub fn rank_k_approx(m: &CMatrix, k: usize) -> Result<CMatrix> {
    check_finite(m)?;
    let r = m.nrows().min(m.ncols());
    if k == 0 || k > r {
        return Err(Error::invalid(format!("rank k={k} outside 1..={r}")));
    }
    spectral_map(m, |i, _| if i < k { 1.0 } else { 0.0 })
}

/// Sum of singular values.
pub fn nuclear_norm(m: &CMatrix) -> Result<f64> {
    check_finite(m)?;
    if m.is_empty() {
        return Err(Error::invalid("empty matrix"));
    }
    Ok(GramEigen::new(&Split::new(m))?.sigma().iter().sum())
}

/// Singular value soft-thresholding, the proximity operator of `threshold·‖·‖_*`.
pub fn svt(m: &CMatrix, threshold: f64) -> Result<CMatrix> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be non-negative, got {threshold}"
        )));
    }
    check_finite(m)?;
    spectral_map(m, |_, s| if s > threshold { 1.0 - threshold / s } else { 0.0 })
}

/// Real and imaginary parts of the tall working matrix `A` (`M`, or `M^H`
/// when `M` is wide), so products run on the real matrix-multiply kernels.
struct Split {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Split {
    fn new(m: &CMatrix) -> Self {
        if m.nrows() < m.ncols() {
            Self {
                re: DMatrix::from_fn(m.ncols(), m.nrows(), |i, j| m[[j, i]].re),
                im: DMatrix::from_fn(m.ncols(), m.nrows(), |i, j| -m[[j, i]].im),
            }
        } else {
            Self {
                re: DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]].re),
                im: DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]].im),
            }
        }
    }
}

/// Eigendecomposition of the Gram matrix `A^H A`, eigenpairs sorted
/// descending.
///
/// The spectral functions above (projection, shrinkage, nuclear norm) only
/// need `σ_i² = μ_i` and the right singular vectors, and the Hermitian
/// tridiagonal eigensolver is much cheaper than Jacobi sweeps once a
/// spectrogram has a few hundred frames. Small singular values lose relative
/// accuracy through the squaring; [`svd`] and [`singular_values`] keep the
/// Jacobi route for callers that need them.
struct GramEigen {
    mu: Vec<f64>,
    vecs: Vec<Vec<Complex64>>,
}

impl GramEigen {
    fn new(a: &Split) -> Result<Self> {
        let n = a.re.ncols();
        // A^H A = (X^T X + Y^T Y) + i (X^T Y − Y^T X) for A = X + iY.
        let (xt, yt) = (a.re.transpose(), a.im.transpose());
        let xy = &xt * &a.im;
        let re = &xt * &a.re + &yt * &a.im;
        let gram = DMatrix::<Complex64>::from_fn(n, n, |i, j| Complex64::new(re[(i, j)], xy[(i, j)] - xy[(j, i)]));
        let eig = nalgebra::SymmetricEigen::try_new(gram, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        Ok(Self {
            mu: order.iter().map(|&j| eig.eigenvalues[j].max(0.0)).collect(),
            vecs: order
                .iter()
                .map(|&j| eig.eigenvectors.column(j).iter().copied().collect())
                .collect(),
        })
    }

    fn sigma(&self) -> Vec<f64> {
        self.mu.iter().map(|m| m.sqrt()).collect()
    }
}

/// `Σ_i weight(i, σ_i) σ_i u_i v_i^H`, evaluated as `A · Σ_i weight · v_i v_i^H`
/// on the smaller side.
fn spectral_map(m: &CMatrix, weight: impl Fn(usize, f64) -> f64) -> Result<CMatrix> {
    if m.is_empty() {
        return Err(Error::invalid("empty matrix"));
    }
    let a = Split::new(m);
    let eig = GramEigen::new(&a)?;
    let n = a.re.ncols();
    let mut p_re = DMatrix::<f64>::zeros(n, n);
    let mut p_im = DMatrix::<f64>::zeros(n, n);
    for (i, (s, v)) in eig.sigma().into_iter().zip(&eig.vecs).enumerate() {
        let w = weight(i, s);
        if w == 0.0 {
            continue;
        }
        for (c, vc) in v.iter().enumerate() {
            for (r, vr) in v.iter().enumerate() {
                let z = vr * vc.conj() * w;
                p_re[(r, c)] += z.re;
                p_im[(r, c)] += z.im;
            }
        }
    }
    let out_re = &a.re * &p_re - &a.im * &p_im;
    let out_im = &a.re * &p_im + &a.im * &p_re;
    Ok(if m.nrows() < m.ncols() {
        CMatrix::from_shape_fn(m.dim(), |(i, j)| Complex64::new(out_re[(j, i)], -out_im[(j, i)]))
    } else {
        CMatrix::from_shape_fn(m.dim(), |(i, j)| Complex64::new(out_re[(i, j)], out_im[(i, j)]))
    })
}
