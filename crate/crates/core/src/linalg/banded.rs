use crate::{Error, Result, Scalar};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Storage is row-major with room for the `kl` extra super-diagonals that
/// partial pivoting fills in, so a matrix can be factorized in place.
#[derive(Debug, Clone)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, width, data: vec![T::zero(); n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl, "({i},{j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.offset(i, j)]
        } else {
            T::zero()
        }
    }

    /// Adds `v` to entry `(i, j)`; panics outside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku);
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let o = self.offset(i, j);
        self.data[o] = v;
    }

    pub fn add_diagonal(&mut self, diag: &[T], scale: T) {
        assert_eq!(diag.len(), self.n);
        for (i, &d) in diag.iter().enumerate() {
            self.add(i, i, scale * d);
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                let row = &self.data[i * self.width..];
                (lo..=hi).map(|j| row[j + self.kl - i] * x[j]).sum()
            })
            .collect()
    }

    /// Largest `|a_ij - a_ji|` over the band.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in i.saturating_sub(self.kl)..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// LU factorization with partial pivoting, consuming the matrix.
    ///
    /// Fails with [`Error::JacobianSingular`] when a pivot is zero relative
    /// to the matrix scale.
    pub fn factorize(mut self) -> Result<BandedLu<T>> {
        let n = self.n;
        let (kl, ku, w) = (self.kl, self.ku, self.width);
        let scale = self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        let tiny = scale * T::epsilon() * T::from_usize_lossy(n.max(1));
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.offset(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.offset(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best <= tiny || best == T::zero() {
                return Err(Error::JacobianSingular { pivot: k });
            }
            if p != k {
                for j in k..=last_col {
                    let a = self.offset(k, j);
                    let b = self.offset(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.offset(k, k)];
            let ncols = last_col - k;
            let (head, tail) = self.data.split_at_mut((k + 1) * w);
            let krow_start = k * w + kl;
            let krow = &head[krow_start + 1..krow_start + 1 + ncols];
            for i in k + 1..=last_row {
                let base = (i - k - 1) * w + (k + kl - i);
                let l = tail[base] / pivot;
                tail[base] = l;
                if l == T::zero() {
                    continue;
                }
                let irow = &mut tail[base + 1..base + 1 + ncols];
                for (a, &b) in irow.iter_mut().zip(krow) {
                    *a -= l * b;
                }
            }
        }
        Ok(BandedLu { lu: self, piv })
    }
}

/// Factorized band matrix produced by [`BandedMatrix::factorize`].
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    lu: BandedMatrix<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn dim(&self) -> usize {
        self.lu.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let m = &self.lu;
        let n = m.n;
        assert_eq!(b.len(), n);
        let (kl, ku, w) = (m.kl, m.ku, m.width);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == T::zero() {
                continue;
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= m.data[i * w + (k + kl - i)] * bk;
            }
        }
        for i in (0..n).rev() {
            let row = &m.data[i * w + kl..];
            let last = (i + kl + ku).min(n - 1);
            let mut s = b[i];
            for j in i + 1..=last {
                s -= row[j - i] * b[j];
            }
            b[i] = s / row[0];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Signed count of negative pivots is not available after partial
    /// pivoting; this exposes the diagonal of `U` for diagnostics.
    pub fn u_diagonal(&self) -> Vec<T> {
        (0..self.lu.n).map(|i| self.lu.data[i * self.lu.width + self.lu.kl]).collect()
    }
}
