//! Block operators: `d x d` arrays of grid operators with zero and scaled-identity tags.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::operator::{complex_eigenvalues, OperatorMatrix};
use crate::scalar::{cabs, cinv, cone, czero, real, to_f64, Real, C};
use nalgebra::{DMatrix, DVector};

/// Reciprocal condition number below which an inverse is refused (f64).
pub const RCOND_THRESHOLD: f64 = 1e-13;

/// One block of a [`BlockOperator`].
#[derive(Debug, Clone, PartialEq)]
pub enum Block<T: Real> {
    Zero,
    /// `c * Id`, applied exactly.
    Scaled(C<T>),
    Dense(OperatorMatrix<T>),
}

impl<T: Real> Block<T> {
    pub fn identity() -> Self {
        Block::Scaled(cone())
    }

    /// `c * op` as a dense block.
    pub fn op(c: C<T>, op: &OperatorMatrix<T>) -> Self {
        Block::Dense(op.scale(c)).normalized()
    }

    fn normalized(self) -> Self {
        match self {
            Block::Scaled(c) if c == czero() => Block::Zero,
            Block::Dense(m) if m.is_zero() || m.max_abs() == T::zero() => Block::Zero,
            other => other,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Block::Zero)
    }

    fn grid(&self) -> Option<&GridSpec<T>> {
        match self {
            Block::Dense(m) => Some(m.grid()),
            _ => None,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (Block::Zero, x) | (x, Block::Zero) => x.clone(),
            (Block::Scaled(a), Block::Scaled(b)) => Block::Scaled(a + b),
            (Block::Scaled(a), Block::Dense(m)) | (Block::Dense(m), Block::Scaled(a)) => Block::Dense(m.add_identity(*a)),
            (Block::Dense(a), Block::Dense(b)) => Block::Dense(a.add(b)),
        }
        .normalized()
    }

    pub fn scale(&self, z: C<T>) -> Self {
        match self {
            Block::Zero => Block::Zero,
            Block::Scaled(c) => Block::Scaled(c * z),
            Block::Dense(m) => Block::Dense(m.scale(z)),
        }
        .normalized()
    }

    pub fn neg(&self) -> Self {
        self.scale(-cone::<T>())
    }

    pub fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (Block::Zero, _) | (_, Block::Zero) => Block::Zero,
            (Block::Scaled(a), Block::Scaled(b)) => Block::Scaled(a * b),
            (Block::Scaled(a), Block::Dense(m)) | (Block::Dense(m), Block::Scaled(a)) => Block::Dense(m.scale(*a)),
            (Block::Dense(a), Block::Dense(b)) => Block::Dense(a.mul(b)),
        }
        .normalized()
    }

    fn apply(&self, x: &[C<T>]) -> Option<Vec<C<T>>> {
        match self {
            Block::Zero => None,
            Block::Scaled(c) => Some(x.iter().map(|v| v * c).collect()),
            Block::Dense(m) => Some(m.apply_slice(x)),
        }
    }

    fn entry(&self, i: usize, j: usize) -> C<T> {
        match self {
            Block::Zero => czero(),
            Block::Scaled(c) => {
                if i == j {
                    *c
                } else {
                    czero()
                }
            }
            Block::Dense(m) => m.entry(i, j),
        }
    }

    fn inverse(&self, grid: &GridSpec<T>) -> Result<(Self, T)> {
        match self {
            Block::Zero => Err(Error::SingularOperator(format!("zero block on grid n = {}", grid.n()))),
            Block::Scaled(c) => Ok((Block::Scaled(cinv(*c)), T::one())),
            Block::Dense(m) => m.inverse().map(|(inv, rc)| (Block::Dense(inv), rc)),
        }
    }

    fn eigenvalues(&self, n: usize) -> Result<Vec<C<T>>> {
        match self {
            Block::Zero => Ok(vec![czero(); n]),
            Block::Scaled(c) => Ok(vec![*c; n]),
            Block::Dense(m) => m.eigenvalues(),
        }
    }

    fn determinant(&self, n: usize) -> C<T> {
        match self {
            Block::Zero => czero(),
            Block::Scaled(c) => (0..n).fold(cone(), |acc, _| acc * c),
            Block::Dense(m) => m.determinant(),
        }
    }
}

/// A `d x d` array of blocks sharing one grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator<T: Real> {
    grid: GridSpec<T>,
    d: usize,
    blocks: Vec<Block<T>>,
}

/// Assembles a block operator from a square array of blocks.
pub fn block_assemble<T: Real>(grid: GridSpec<T>, entries: Vec<Vec<Block<T>>>) -> Result<BlockOperator<T>> {
    let d = entries.len();
    if d == 0 || entries.iter().any(|row| row.len() != d) {
        return Err(Error::invalid("block array must be square and non-empty"));
    }
    let blocks: Vec<Block<T>> = entries.into_iter().flatten().map(Block::normalized).collect();
    for b in &blocks {
        if let Some(g) = b.grid() {
            if *g != grid {
                return Err(Error::invalid("blocks are discretized on inconsistent grids"));
            }
        }
    }
    Ok(BlockOperator { grid, d, blocks })
}

/// Inverts a block operator, exploiting block-triangular structure and scaled-identity pivots.
pub fn block_invert<T: Real>(op: &BlockOperator<T>) -> Result<BlockOperator<T>> {
    op.inverse_with_rcond().map(|(inv, _)| inv)
}

impl<T: Real> BlockOperator<T> {
    pub fn identity(grid: GridSpec<T>, d: usize) -> Self {
        Self::diagonal(grid, d, Block::identity())
    }

    pub fn zeros(grid: GridSpec<T>, d: usize) -> Self {
        Self { grid, d, blocks: vec![Block::Zero; d * d] }
    }

    fn diagonal(grid: GridSpec<T>, d: usize, b: Block<T>) -> Self {
        let mut out = Self::zeros(grid, d);
        for i in 0..d {
            out.blocks[i * d + i] = b.clone();
        }
        out
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn block(&self, i: usize, j: usize) -> &Block<T> {
        &self.blocks[i * self.d + j]
    }

    pub fn set_block(&mut self, i: usize, j: usize, b: Block<T>) {
        self.blocks[i * self.d + j] = b.normalized();
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.grid, other.grid, "block operators live on different grids");
        assert_eq!(self.d, other.d, "block operators have different block counts");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.add(b)).collect();
        Self { grid: self.grid, d: self.d, blocks }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-cone::<T>()))
    }

    pub fn scale(&self, z: C<T>) -> Self {
        Self { grid: self.grid, d: self.d, blocks: self.blocks.iter().map(|b| b.scale(z)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        let d = self.d;
        let mut blocks = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = Block::Zero;
                for l in 0..d {
                    let a = self.block(i, l);
                    let b = other.block(l, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc.add(&a.mul(b));
                    }
                }
                blocks.push(acc);
            }
        }
        Self { grid: self.grid, d, blocks }
    }

    pub fn apply(&self, f: &GridFunction<T>) -> Result<GridFunction<T>> {
        if f.grid() != &self.grid || f.d() != self.d {
            return Err(Error::invalid("function shape does not match block operator"));
        }
        let n = self.grid.n();
        let mut out = vec![czero::<T>(); self.d * n];
        for i in 0..self.d {
            for j in 0..self.d {
                if let Some(v) = self.block(i, j).apply(f.component(j)) {
                    for (o, x) in out[i * n..(i + 1) * n].iter_mut().zip(v) {
                        *o += x;
                    }
                }
            }
        }
        GridFunction::new(self.grid, self.d, DVector::from_vec(out))
    }

    pub fn to_dense(&self) -> DMatrix<C<T>> {
        let n = self.grid.n();
        let dn = self.d * n;
        DMatrix::from_fn(dn, dn, |r, c| self.block(r / n, c / n).entry(r % n, c % n))
    }

    pub fn from_dense(grid: GridSpec<T>, d: usize, m: &DMatrix<C<T>>) -> Self {
        let n = grid.n();
        assert_eq!(m.shape(), (d * n, d * n));
        let mut blocks = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let sub = m.view((i * n, j * n), (n, n)).into_owned();
                blocks.push(Block::Dense(OperatorMatrix::from_complex(grid, &sub)).normalized());
            }
        }
        Self { grid, d, blocks }
    }

    /// Largest entry modulus of the assembled matrix.
    pub fn max_abs(&self) -> T {
        self.blocks.iter().fold(T::zero(), |acc, b| {
            acc.max(match b {
                Block::Zero => T::zero(),
                Block::Scaled(c) => cabs(*c),
                Block::Dense(m) => m.max_abs(),
            })
        })
    }

    /// Largest absolute row sum (operator infinity-norm).
    pub fn norm_inf(&self) -> T {
        let n = self.grid.n();
        let mut rows = vec![T::zero(); self.d * n];
        for i in 0..self.d {
            for j in 0..self.d {
                let sums: Vec<T> = match self.block(i, j) {
                    Block::Zero => continue,
                    Block::Scaled(c) => vec![cabs(*c); n],
                    Block::Dense(m) => m.row_abs_sums(),
                };
                for (r, s) in rows[i * n..(i + 1) * n].iter_mut().zip(sums) {
                    *r += s;
                }
            }
        }
        rows.into_iter().fold(T::zero(), |a, b| a.max(b))
    }

    fn sub_operator(&self, r0: usize, c0: usize, size: usize) -> Self {
        let mut blocks = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                blocks.push(self.block(r0 + i, c0 + j).clone());
            }
        }
        Self { grid: self.grid, d: size, blocks }
    }

    pub(crate) fn join(x: &Self, y: &Self, z: &Self, w: &Self) -> Self {
        let h = x.d;
        let d = 2 * h;
        let mut out = Self::zeros(x.grid, d);
        for i in 0..h {
            for j in 0..h {
                out.blocks[i * d + j] = x.block(i, j).clone();
                out.blocks[i * d + j + h] = y.block(i, j).clone();
                out.blocks[(i + h) * d + j] = z.block(i, j).clone();
                out.blocks[(i + h) * d + j + h] = w.block(i, j).clone();
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(Block::is_zero)
    }

    fn split(&self) -> Option<[Self; 4]> {
        if self.d < 2 || !self.d.is_multiple_of(2) {
            return None;
        }
        let h = self.d / 2;
        Some([self.sub_operator(0, 0, h), self.sub_operator(0, h, h), self.sub_operator(h, 0, h), self.sub_operator(h, h, h)])
    }

    /// Symmetry of the assembled matrix (`X^T = X`, no conjugation), up to `tol` entry-wise.
    pub fn is_symmetric(&self, tol: T) -> bool {
        let n = self.grid.n();
        for i in 0..self.d {
            for j in i..self.d {
                let (a, b) = (self.block(i, j), self.block(j, i));
                let ok = match (a, b) {
                    (Block::Zero, Block::Zero) => true,
                    (Block::Scaled(x), Block::Scaled(y)) => i == j || x == y,
                    _ => (0..n).all(|r| (0..n).all(|c| cabs(a.entry(r, c) - b.entry(c, r)) <= tol)),
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    pub fn transpose(&self) -> Self {
        let d = self.d;
        let mut out = Self::zeros(self.grid, d);
        for i in 0..d {
            for j in 0..d {
                out.blocks[j * d + i] = match self.block(i, j) {
                    Block::Dense(m) => Block::Dense(m.transpose()),
                    other => other.clone(),
                };
            }
        }
        out
    }

    /// True when every block strictly below the diagonal is an exact zero.
    pub fn is_block_upper_triangular(&self) -> bool {
        (0..self.d).all(|i| (0..i).all(|j| self.block(i, j).is_zero()))
    }

    fn rcond_threshold() -> T {
        real::<T>(RCOND_THRESHOLD).max(T::eps() * real(10.0))
    }

    /// Inverse plus the smallest reciprocal condition number met along the way.
    pub fn inverse_with_rcond(&self) -> Result<(Self, T)> {
        let (inv, rcond) = self.invert_rec()?;
        if rcond < Self::rcond_threshold() {
            return Err(Error::IllConditioned {
                t_end: to_f64(self.grid.t_end()),
                rcond: to_f64(rcond),
                threshold: to_f64(Self::rcond_threshold()),
            });
        }
        Ok((inv, rcond))
    }

    fn invert_rec(&self) -> Result<(Self, T)> {
        if self.d == 1 {
            let (b, rc) = self.blocks[0].inverse(&self.grid)?;
            return Ok((Self { grid: self.grid, d: 1, blocks: vec![b] }, rc));
        }
        let Some([x, y, z, w]) = self.split() else {
            return self.invert_dense();
        };
        let minus = -cone::<T>();
        if z.is_zero() || y.is_zero() {
            let (xi, rx) = x.invert_rec()?;
            let (wi, rw) = if w == x { (xi.clone(), rx) } else { w.invert_rec()? };
            let rc = rx.min(rw);
            let zero = Self::zeros(self.grid, x.d);
            return Ok(if z.is_zero() {
                let top = xi.mul(&y).mul(&wi).scale(minus);
                (Self::join(&xi, &top, &zero, &wi), rc)
            } else {
                let bottom = wi.mul(&z).mul(&xi).scale(minus);
                (Self::join(&xi, &zero, &bottom, &wi), rc)
            });
        }
        // Schur complement on a scaled-identity pivot when one is available.
        let scaled_pivot = |p: &Self| p.d == 1 && matches!(p.blocks[0], Block::Scaled(_));
        if scaled_pivot(&w) {
            if let Ok(r) = Self::schur_on_w(&x, &y, &z, &w) {
                return Ok(r);
            }
        }
        if scaled_pivot(&x) {
            // swap roles: permute to put x in the pivot position
            if let Ok((inv, rc)) = Self::schur_on_w(&w, &z, &y, &x) {
                let [a, b, c, d] = inv.split().expect("even block count");
                return Ok((Self::join(&d, &c, &b, &a), rc));
            }
        }
        if let Ok(r) = Self::schur_on_w(&x, &y, &z, &w) {
            if r.1 >= Self::rcond_threshold() {
                return Ok(r);
            }
        }
        self.invert_dense()
    }

    fn schur_on_w(x: &Self, y: &Self, z: &Self, w: &Self) -> Result<(Self, T)> {
        let minus = -cone::<T>();
        let (wi, rw) = w.invert_rec()?;
        let wi_z = wi.mul(z);
        let s = x.sub(&y.mul(&wi_z));
        let (si, rs) = s.invert_rec()?;
        let y_wi = y.mul(&wi);
        let top_right = si.mul(&y_wi).scale(minus);
        let bottom_left = wi_z.mul(&si).scale(minus);
        let bottom_right = wi.add(&wi_z.mul(&si).mul(&y_wi));
        Ok((Self::join(&si, &top_right, &bottom_left, &bottom_right), rw.min(rs)))
    }

    fn invert_dense(&self) -> Result<(Self, T)> {
        let m = self.to_dense();
        let inv = m
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularOperator(format!("dense block operator of size {} is singular", m.nrows())))?;
        let norm1 = |a: &DMatrix<C<T>>| {
            (0..a.ncols())
                .map(|j| a.column(j).iter().fold(T::zero(), |acc, v| acc + cabs(*v)))
                .fold(T::zero(), |p, q| p.max(q))
        };
        let rcond = T::one() / (norm1(&m) * norm1(&inv));
        Ok((Self::from_dense(self.grid, self.d, &inv), rcond))
    }

    /// All eigenvalues, taken block by block when the operator is block triangular.
    pub fn eigenvalues(&self) -> Result<Vec<C<T>>> {
        let n = self.grid.n();
        if self.d == 1 {
            return self.blocks[0].eigenvalues(n);
        }
        let lower = (0..self.d).all(|i| (i + 1..self.d).all(|j| self.block(i, j).is_zero()));
        if self.is_block_upper_triangular() || lower {
            let mut out = Vec::with_capacity(self.d * n);
            let mut seen: Vec<(usize, Vec<C<T>>)> = Vec::new();
            for i in 0..self.d {
                let b = self.block(i, i);
                if let Some((_, ev)) = seen.iter().find(|(k, _)| self.block(*k, *k) == b) {
                    out.extend_from_slice(ev);
                    continue;
                }
                let ev = b.eigenvalues(n)?;
                out.extend_from_slice(&ev);
                seen.push((i, ev));
            }
            return Ok(out);
        }
        if let Some([x, y, z, w]) = self.split() {
            if z.is_zero() || y.is_zero() {
                let mut ev = x.eigenvalues()?;
                ev.extend(if w == x { ev.clone() } else { w.eigenvalues()? });
                return Ok(ev);
            }
        }
        complex_eigenvalues(self.to_dense())
    }

    pub fn determinant(&self) -> C<T> {
        let n = self.grid.n();
        if self.d == 1 {
            return self.blocks[0].determinant(n);
        }
        if self.is_block_upper_triangular() {
            return (0..self.d).fold(cone(), |acc, i| acc * self.block(i, i).determinant(n));
        }
        if let Some([x, y, z, w]) = self.split() {
            if z.is_zero() || y.is_zero() {
                let dx = x.determinant();
                return dx * if w == x { dx } else { w.determinant() };
            }
        }
        self.to_dense().lu().determinant()
    }
}
