//! Small dense complex matrices (2×2 and 3×3).
//!
//! Everything downstream works with `Mat<2>` (subspace connections,
//! holonomies) or `Mat<3>` (Hamiltonians, full propagators). The kernel is
//! deliberately fixed-size: storage is a row-major array on the stack, all
//! operations are pure and `Copy`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{SMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shorthand for a complex scalar.
pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix of fixed dimension, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat<const N: usize> {
    pub m: [[C64; N]; N],
}

pub type Mat2 = Mat<2>;
pub type Mat3 = Mat<3>;

/// Column vector of fixed dimension.
pub type Ket<const N: usize> = [C64; N];
pub type Ket3 = Ket<3>;

impl<const N: usize> std::fmt::Debug for Mat<N> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat{N}[")?;
        for row in &self.m {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<const N: usize> Default for Mat<N> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const N: usize> Mat<N> {
    pub fn zero() -> Self {
        Self { m: [[ZERO; N]; N] }
    }

    pub fn identity() -> Self {
        let mut out = Self::zero();
        for k in 0..N {
            out.m[k][k] = ONE;
        }
        out
    }

    pub fn from_rows(m: [[C64; N]; N]) -> Self {
        Self { m }
    }

    pub fn diag(d: [C64; N]) -> Self {
        let mut out = Self::zero();
        for k in 0..N {
            out.m[k][k] = d[k];
        }
        out
    }

    pub fn from_real_diag(d: [f64; N]) -> Self {
        Self::diag(d.map(|x| C64::new(x, 0.0)))
    }

    /// Matrix whose columns are the given kets.
    pub fn from_columns(cols: [Ket<N>; N]) -> Self {
        let mut out = Self::zero();
        for (j, col) in cols.iter().enumerate() {
            for i in 0..N {
                out.m[i][j] = col[i];
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Ket<N> {
        std::array::from_fn(|i| self.m[i][j])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..N {
            for j in 0..N {
                out.m[i][j] = self.m[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|k| self.m[k][k]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Maximum absolute row sum (induced 1-norm of the transpose; any
    /// consistent norm works for the scaling decision).
    pub fn norm_inf(&self) -> f64 {
        self.m
            .iter()
            .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.m
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn apply(&self, v: &Ket<N>) -> Ket<N> {
        std::array::from_fn(|i| (0..N).map(|j| self.m[i][j] * v[j]).sum())
    }

    /// Largest `|M_ij − conj(M_ji)|` together with the offending index pair.
    pub fn hermiticity_defect(&self) -> (f64, usize, usize) {
        self.symmetry_defect(1.0)
    }

    pub fn anti_hermiticity_defect(&self) -> f64 {
        self.symmetry_defect(-1.0).0
    }

    fn symmetry_defect(&self, sign: f64) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for i in 0..N {
            for j in i..N {
                let d = (self.m[i][j] - self.m[j][i].conj() * sign).norm();
                if d > worst.0 {
                    worst = (d, i, j);
                }
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect().0 <= tol
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.anti_hermiticity_defect() <= tol
    }

    /// `‖M†M − 1‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self - Self::identity()).frobenius()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Frobenius distance to another matrix.
    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).frobenius()
    }
}

impl<const N: usize> Index<(usize, usize)> for Mat<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.m[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Mat<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.m[i][j]
    }
}

impl<const N: usize> Add for Mat<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<const N: usize> AddAssign for Mat<N> {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..N {
            for j in 0..N {
                self.m[i][j] += rhs.m[i][j];
            }
        }
    }
}

impl<const N: usize> Sub for Mat<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.m[i][j] -= rhs.m[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for Mat<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl<const N: usize> Mul for Mat<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for i in 0..N {
            for k in 0..N {
                let a = self.m[i][k];
                for j in 0..N {
                    out.m[i][j] += a * rhs.m[k][j];
                }
            }
        }
        out
    }
}

impl<const N: usize> Mul<C64> for Mat<N> {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

impl<const N: usize> Mul<f64> for Mat<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale_re(rhs)
    }
}

/// `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner<const N: usize>(a: &Ket<N>, b: &Ket<N>) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn ket_norm<const N: usize>(a: &Ket<N>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn ket_sub<const N: usize>(a: &Ket<N>, b: &Ket<N>) -> Ket<N> {
    std::array::from_fn(|k| a[k] - b[k])
}

pub fn ket_scale<const N: usize>(a: &Ket<N>, s: C64) -> Ket<N> {
    a.map(|z| z * s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Pauli matrix in the `|1⟩, |2⟩` basis.
pub fn pauli(axis: Axis) -> Mat2 {
    match axis {
        Axis::X => Mat2::from_rows([[ZERO, ONE], [ONE, ZERO]]),
        Axis::Y => Mat2::from_rows([[ZERO, -I], [I, ZERO]]),
        Axis::Z => Mat2::from_rows([[ONE, ZERO], [ZERO, -ONE]]),
    }
}

pub fn sigma_x() -> Mat2 {
    pauli(Axis::X)
}

pub fn sigma_y() -> Mat2 {
    pauli(Axis::Y)
}

pub fn sigma_z() -> Mat2 {
    pauli(Axis::Z)
}

fn check_finite<const N: usize>(m: &Mat<N>, what: &'static str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Dense kernels delegated to nalgebra for the two sizes in use.
pub trait Dense: Sized {
    fn exp_dense(&self) -> Self;
    /// Unsorted eigenvalues and eigenvectors (as columns) of a Hermitian matrix.
    fn eigh_dense(&self) -> (Vec<f64>, Self);
}

macro_rules! dense_impl {
    ($n:literal) => {
        impl Dense for Mat<$n> {
            fn exp_dense(&self) -> Self {
                from_na(&to_na(self).exp())
            }

            fn eigh_dense(&self) -> (Vec<f64>, Self) {
                let e = SymmetricEigen::new(to_na(self));
                (
                    e.eigenvalues.iter().copied().collect(),
                    from_na(&e.eigenvectors),
                )
            }
        }
    };
}

dense_impl!(2);
dense_impl!(3);

fn to_na<const N: usize>(m: &Mat<N>) -> SMatrix<C64, N, N> {
    SMatrix::from_fn(|i, j| m.m[i][j])
}

fn from_na<const N: usize>(m: &SMatrix<C64, N, N>) -> Mat<N> {
    Mat {
        m: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])),
    }
}

/// Matrix exponential (Padé with scaling and squaring).
pub fn expm<const N: usize>(m: &Mat<N>) -> Result<Mat<N>>
where
    Mat<N>: Dense,
{
    check_finite(m, "expm argument")?;
    let e = m.exp_dense();
    check_finite(&e, "expm result")?;
    Ok(e)
}

/// Closed-form exponential of an arbitrary 2×2 matrix:
/// `exp(M) = e^{tr/2} (cosh q · 1 + sinh q / q · (M − tr/2))`, `q² = −det(M − tr/2)`.
pub fn expm2(m: &Mat2) -> Result<Mat2> {
    check_finite(m, "expm2 argument")?;
    Ok(expm2_unchecked(m))
}

/// Same as [`expm2`] without the finiteness check; used in hot loops whose
/// inputs are already validated.
pub fn expm2_unchecked(m: &Mat2) -> Mat2 {
    let half_tr = m.trace() * 0.5;
    let a = m.m[0][0] - half_tr;
    let b = m.m[0][1];
    let c = m.m[1][0];
    // traceless part squares to q² · 1
    let q2 = a * a + b * c;
    let q = q2.sqrt();
    let (ch, sh_over_q) = if q.norm() < 1e-4 {
        // series to O(q^8)
        let ch = ONE + q2 / 2.0 + q2 * q2 / 24.0 + q2 * q2 * q2 / 720.0;
        let sh = ONE + q2 / 6.0 + q2 * q2 / 120.0 + q2 * q2 * q2 / 5040.0;
        (ch, sh)
    } else {
        (q.cosh(), q.sinh() / q)
    };
    let pref = half_tr.exp();
    Mat2::from_rows([
        [pref * (ch + sh_over_q * a), pref * sh_over_q * b],
        [pref * sh_over_q * c, pref * (ch - sh_over_q * a)],
    ])
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition<const N: usize> {
    /// Ascending.
    pub values: [f64; N],
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: Mat<N>,
}

impl<const N: usize> EigenDecomposition<N> {
    pub fn vector(&self, k: usize) -> Ket<N> {
        self.vectors.column(k)
    }

    /// Largest `‖H v_k − λ_k v_k‖` over all pairs.
    pub fn max_residual(&self, h: &Mat<N>) -> f64 {
        (0..N)
            .map(|k| {
                let v = self.vector(k);
                let hv = h.apply(&v);
                ket_norm(&ket_sub(&hv, &ket_scale(&v, C64::new(self.values[k], 0.0))))
            })
            .fold(0.0, f64::max)
    }

    pub fn orthonormality_defect(&self) -> f64 {
        self.vectors.unitarity_defect()
    }
}

/// Hermitian eigensolver for 3×3 matrices.
///
/// Eigenvalues are returned ascending. Each eigenvector's global phase is
/// fixed so that its largest-magnitude component (first one on ties) is real
/// and positive.
pub fn eigh3(h: &Mat3) -> Result<EigenDecomposition<3>> {
    eigh(h)
}

pub fn eigh<const N: usize>(h: &Mat<N>) -> Result<EigenDecomposition<N>>
where
    Mat<N>: Dense,
{
    check_finite(h, "eigensolver input")?;
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let (defect, row, col) = h.hermiticity_defect();
    if defect > 1e-12 * scale {
        return Err(Error::NotHermitian {
            row,
            col,
            deviation: defect,
        });
    }
    // symmetrize away the tolerated defect
    let (values, vectors) = (*h + h.adjoint()).scale_re(0.5).eigh_dense();
    let mut order: [usize; N] = std::array::from_fn(|k| k);
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    Ok(EigenDecomposition {
        values: order.map(|k| values[k]),
        vectors: Mat::from_columns(order.map(|k| fix_phase(vectors.column(k)))),
    })
}

/// Multiplies `v` by the unit phase that makes its largest-magnitude
/// component real and positive.
pub fn fix_phase<const N: usize>(v: Ket<N>) -> Ket<N> {
    let mut best = 0;
    for k in 1..N {
        if v[k].norm() > v[best].norm() * (1.0 + 1e-12) {
            best = k;
        }
    }
    let pivot = v[best];
    if pivot.norm() == 0.0 {
        return v;
    }
    let phase = pivot.conj() / pivot.norm();
    v.map(|z| z * phase)
}

/// Nearest unitary matrix, `U (U†U)^{-1/2}`.
pub fn polar_unitary<const N: usize>(u: &Mat<N>) -> Result<Mat<N>>
where
    Mat<N>: Dense,
{
    let gram = u.adjoint() * *u;
    let eig = eigh(&gram)?;
    if eig.values[0].is_nan() || eig.values[0] <= 0.0 {
        return Err(Error::NotUnitary(u.unitarity_defect()));
    }
    let inv_sqrt = Mat::<N>::from_real_diag(eig.values.map(|x| 1.0 / x.sqrt()));
    Ok(*u * (eig.vectors * inv_sqrt * eig.vectors.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Plain Taylor series without scaling; only trustworthy for small norms.
    fn taylor_oracle<const N: usize>(m: &Mat<N>, terms: usize) -> Mat<N> {
        let mut sum = Mat::<N>::identity();
        let mut term = Mat::<N>::identity();
        for k in 1..terms {
            term = (term * *m).scale_re(1.0 / k as f64);
            sum += term;
        }
        sum
    }

    fn random_anti_hermitian2(seed: u64, scale: f64) -> Mat2 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut r = || rng.gen_range(-scale..scale);
        let h = Mat2::from_rows([
            [C64::new(r(), 0.0), C64::new(r(), r())],
            [ZERO, C64::new(r(), 0.0)],
        ]);
        let mut h = h;
        h.m[1][0] = h.m[0][1].conj();
        h.scale(I)
    }

    #[test]
    fn pauli_algebra() {
        assert_eq!(sigma_z(), Mat2::from_real_diag([1.0, -1.0]));
        assert!(sigma_x() * sigma_x() == Mat2::identity());
        assert!((sigma_x() * sigma_y()).dist(&sigma_z().scale(I)) < 1e-15);
        for s in [sigma_x(), sigma_y(), sigma_z()] {
            assert_eq!(s.trace(), ZERO);
            assert!(s.is_hermitian(0.0));
            assert!(s.is_unitary(1e-15));
        }
    }

    #[test]
    fn expm_of_zero_is_identity() {
        assert_eq!(expm(&Mat3::zero()).unwrap(), Mat3::identity());
        assert_eq!(expm2(&Mat2::zero()).unwrap(), Mat2::identity());
    }

    #[test]
    fn expm_euler_identity() {
        let m = sigma_x().scale(I * (PI / 2.0));
        let want = sigma_x().scale(I);
        assert!(expm(&m).unwrap().dist(&want) < 1e-14);
        assert!(expm2(&m).unwrap().dist(&want) < 1e-14);
    }

    #[test]
    fn expm_rejects_non_finite() {
        let mut m = Mat2::zero();
        m.m[0][1] = C64::new(f64::NAN, 0.0);
        assert!(matches!(expm(&m), Err(Error::NonFinite(_))));
        assert!(expm2(&m).is_err());
    }

    #[test]
    fn expm_matches_taylor_oracle_on_anti_hermitian() {
        for seed in 0..50 {
            let m = random_anti_hermitian2(seed, 0.8);
            // ‖m‖ < 3 so 80 unscaled Taylor terms are converged far below 1e-16
            let oracle = taylor_oracle(&m, 80);
            let s = expm(&m).unwrap();
            let c = expm2(&m).unwrap();
            assert!(s.dist(&oracle) < 1e-13, "seed {seed}: {}", s.dist(&oracle));
            assert!(c.dist(&oracle) < 1e-13, "seed {seed}: {}", c.dist(&oracle));
            assert!(s.is_unitary(1e-12));
        }
    }

    #[test]
    fn expm2_small_argument_branch() {
        let m = sigma_y().scale(I * 3e-5) + sigma_z().scale(I * 2e-5);
        let oracle = taylor_oracle(&m, 12);
        assert!(expm2(&m).unwrap().dist(&oracle) < 1e-16);
    }

    #[test]
    fn eigh3_diagonal() {
        let d = Mat3::from_real_diag([0.0, 1.0, -9.0]);
        let e = eigh3(&d).unwrap();
        assert_eq!(e.values, [-9.0, 0.0, 1.0]);
        assert!(e.max_residual(&d) < 1e-15);
    }

    #[test]
    fn eigh3_rejects_non_hermitian() {
        let mut m = Mat3::identity();
        m.m[0][2] = C64::new(1.0, 0.0);
        match eigh3(&m) {
            Err(Error::NotHermitian { row, col, .. }) => assert_eq!((row, col), (0, 2)),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn phase_convention_makes_largest_component_real_positive() {
        let v = fix_phase([C64::new(0.1, 0.2), C64::new(0.0, -0.9), C64::new(0.3, 0.0)]);
        assert!(v[1].im.abs() < 1e-16 && v[1].re > 0.0);
    }

    #[test]
    fn polar_restores_unitarity() {
        let u = expm(&Mat3::from_real_diag([0.3, -1.0, 2.0]).scale(I)).unwrap();
        let noisy = u.scale_re(1.0 + 1e-6);
        let fixed = polar_unitary(&noisy).unwrap();
        assert!(fixed.is_unitary(1e-14));
        assert!(fixed.dist(&u) < 1e-14);
    }
}
