use super::check_caustic;
use crate::block::{block_assemble, Block, BlockOperator};
use crate::error::Result;
use crate::grid::GridSpec;
use crate::operator::{discretize, OperatorKind, OperatorMatrix};
use crate::scalar::{ci, cone, cplx, creal, real, Real};
use nalgebra::DMatrix;

/// Kinetic part `K`, potential part `L` and `N = Id + K + L` on one grid.
#[derive(Debug, Clone)]
pub struct CPOperators<T: Real> {
    pub grid: GridSpec<T>,
    pub k: BlockOperator<T>,
    pub l: BlockOperator<T>,
    pub n: BlockOperator<T>,
}

/// Builds `K`, `L` and `N` in the component order `(x1, p1, x2, p2)`.
pub fn build_cp_operators<T: Real>(grid: GridSpec<T>, k: T) -> CPOperators<T> {
    let i = ci::<T>();
    let one = cone::<T>();
    let s = Block::Scaled;
    let z = || Block::Zero;
    let kk = block_assemble(
        grid,
        vec![
            vec![s(-one), s(-i), z(), z()],
            vec![s(-i), s(i - one), z(), z()],
            vec![z(), z(), s(-one), s(-i)],
            vec![z(), z(), s(-i), s(i - one)],
        ],
    )
    .expect("scaled blocks carry no grid");

    let a = discretize(OperatorKind::A, &grid);
    let b = discretize(OperatorKind::B, &grid);
    let bs = discretize(OperatorKind::BStar, &grid);
    let two_k = k * real(2.0);
    let ik2a = Block::op(i * (k * k), &a);
    let l = block_assemble(
        grid,
        vec![
            vec![ik2a.clone(), z(), z(), Block::op(-i * two_k, &bs)],
            vec![z(), z(), Block::op(i * two_k, &b), z()],
            vec![z(), z(), ik2a, z()],
            vec![z(), z(), z(), z()],
        ],
    )
    .expect("all blocks share the grid");
    let n = BlockOperator::identity(grid, 4).add(&kk).add(&l);
    CPOperators { grid, k: kk, l, n }
}

/// Action matrix of `(1 - k^2 A)^{-1} - 1`, from the resolvent kernel
/// `k cos(k min(s,r)) sin(k (t - max(s,r))) / cos(kt)`.
pub fn resolvent_matrix<T: Real>(grid: &GridSpec<T>, k: T) -> OperatorMatrix<T> {
    let n = grid.n();
    let h = grid.weight();
    let t = grid.t_end();
    let c = (k * t).cos();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let lo = grid.node(i.min(j));
        let hi = grid.node(i.max(j));
        h * k * (k * lo).cos() * (k * (t - hi)).sin() / c
    });
    OperatorMatrix::from_real(*grid, m)
}

/// `N^{-1}` on `[0, t)` from its closed form, with `(k^2 A - 1)^{-1}` taken from the resolvent kernel.
pub fn n_inverse_closed<T: Real>(grid: GridSpec<T>, k: T) -> Result<BlockOperator<T>> {
    check_caustic(grid.t_end(), k)?;
    let minus = -cone::<T>();
    // G = (k^2 A - 1)^{-1} = -(1 + R)
    let g = resolvent_matrix(&grid, k).add_identity(cone()).scale(minus);
    let a = discretize(OperatorKind::A, &grid);
    let b = discretize(OperatorKind::B, &grid);
    let bs = discretize(OperatorKind::BStar, &grid);
    let k2 = creal(k * k);
    let two_k = creal(k * real(2.0));
    let ag = a.mul(&g).scale(k2);
    let gb = Block::Dense(g);
    let m_inv = block_assemble(grid, vec![vec![gb.clone(), gb.clone()], vec![gb, Block::Dense(ag)]])?;
    let p = block_assemble(
        grid,
        vec![vec![Block::Zero, Block::op(-two_k, &bs)], vec![Block::op(two_k, &b), Block::Zero]],
    )?;
    let top_right = m_inv.mul(&p).mul(&m_inv).scale(minus);
    let zero = BlockOperator::zeros(grid, 2);
    let r_inv = BlockOperator::join(&m_inv, &top_right, &zero, &m_inv);
    // N = i R on [0, t)
    Ok(r_inv.scale(cplx(T::zero(), -T::one())))
}
