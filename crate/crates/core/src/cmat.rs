//! Small complex matrices for the 2x2 MIMO link math and the n-pair cable
//! transfer matrices. Everything is closed-form; no linear algebra crate.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Dense square complex matrix of small order (cable matrices are
/// `n_pairs` x `n_pairs`, composed copper sections `n_ports` x `n_ports`).
#[derive(Debug, Clone, PartialEq)]
pub struct CMatN {
    n: usize,
    data: Vec<C64>,
}

impl CMatN {
    pub fn zeros(n: usize) -> Self {
        CMatN {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Largest entry magnitude, for passivity checks.
    pub fn max_entry_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Singular values in descending order. Closed form, order 1 and 2 only.
    pub fn singular_values(&self) -> Vec<f64> {
        match self.n {
            1 => vec![self[(0, 0)].norm()],
            2 => {
                // Eigenvalues of the 2x2 Hermitian Gram matrix A^H A.
                let a = self[(0, 0)];
                let b = self[(0, 1)];
                let c = self[(1, 0)];
                let d = self[(1, 1)];
                let g00 = a.norm_sqr() + c.norm_sqr();
                let g11 = b.norm_sqr() + d.norm_sqr();
                let g01 = a.conj() * b + c.conj() * d;
                let tr = g00 + g11;
                let det = g00 * g11 - g01.norm_sqr();
                let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
                let l1 = (tr / 2.0 + disc).max(0.0);
                let l2 = (tr / 2.0 - disc).max(0.0);
                vec![l1.sqrt(), l2.sqrt()]
            }
            n => panic!("singular_values implemented for order <= 2, got {n}"),
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMatN {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatN {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Fixed 2x2 complex matrix used on the hot path of the link engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[C64; 2]; 2],
}

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn zeros() -> Self {
        let z = C64::new(0.0, 0.0);
        Mat2::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        Mat2::new(o, z, z, o)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let mut out = *self;
        for row in &mut out.m {
            for z in row {
                *z *= s;
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &rhs.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn adjoint(&self) -> Mat2 {
        Mat2::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    /// Gram matrix A^H A (Hermitian, PSD).
    pub fn gram(&self) -> Mat2 {
        self.adjoint().mul(self)
    }

    /// Inverse; the caller guarantees non-singularity (the MMSE resolvent
    /// A^H A + sigma^2 I is always invertible for sigma^2 > 0).
    pub fn inverse(&self) -> Mat2 {
        let a = self.m[0][0];
        let b = self.m[0][1];
        let c = self.m[1][0];
        let d = self.m[1][1];
        let det = a * d - b * c;
        let inv = 1.0 / det;
        Mat2::new(d * inv, -b * inv, -c * inv, a * inv)
    }

    pub fn mul_vec(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}
