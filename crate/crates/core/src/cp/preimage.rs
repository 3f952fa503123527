use super::{check_caustic, tan_over_k};
use crate::error::{Error, Result};
use crate::grid::{pair, GridFunction, GridSpec};
use crate::operator::{discretize, OperatorKind};
use crate::scalar::{ci, cplx, czero, real, Real, C};
use nalgebra::{DVector, Matrix2};

/// Which pinning function to pull back through `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinTarget {
    /// `(1, 0, 0, 0)`: pins `x1`.
    Eta1,
    /// `(0, 0, 1, 0)`: pins `x2`.
    Eta3,
}

impl PinTarget {
    pub fn component(self) -> usize {
        match self {
            PinTarget::Eta1 => 0,
            PinTarget::Eta3 => 2,
        }
    }
}

/// Solves `a u_{i-1} + b u_i + a u_{i+1} = r_i` with modified first and last diagonal entries.
fn thomas<T: Real>(off: T, diag: &[T], rhs: &[C<T>]) -> Result<Vec<C<T>>> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![czero::<T>(); n];
    let mut beta = diag[0];
    for i in 0..n {
        if i > 0 {
            beta = diag[i] - off * c[i - 1];
        }
        if beta == T::zero() || !beta.is_finite() {
            return Err(Error::Numerical(format!("tridiagonal elimination broke down at row {i}")));
        }
        c[i] = off / beta;
        let prev = if i > 0 { d[i - 1] * off } else { czero() };
        d[i] = (rhs[i] - prev) / beta;
    }
    let mut u = vec![czero::<T>(); n];
    u[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = d[i] - u[i + 1] * c[i];
    }
    Ok(u)
}

/// Solves `u'' + k^2 u = rhs` on the cell-centred grid with `u'(0) = alpha`, `u(t) = beta`.
fn helmholtz_bvp<T: Real>(grid: &GridSpec<T>, k: T, rhs: &[C<T>], alpha: C<T>, beta: C<T>) -> Result<Vec<C<T>>> {
    let n = grid.n();
    let h = grid.weight();
    let h2 = h * h;
    let two: T = real(2.0);
    let mut diag = vec![-two + k * k * h2; n];
    let mut r: Vec<C<T>> = rhs.iter().map(|v| v * h2).collect();
    // ghost u_{-1} = u_0 - h alpha
    diag[0] += T::one();
    r[0] += alpha * h;
    // ghost u_n = 2 beta - u_{n-1}
    diag[n - 1] -= T::one();
    r[n - 1] -= beta * two;
    thomas(T::one(), &diag, &r)
}

/// Numerical preimage `f` with `N f = eta`, from the equivalent second-order boundary-value problem.
///
/// With `f3 = f4`: `f3'' + k^2 f3 = 0`, `f3'(0) = 0`, `f3(t) = i [eta = eta3]`, then
/// `f1'' + k^2 f1 = 4k f3'`, `f1'(0) = 4k f3(0)`, `f1(t) = i [eta = eta1] + 2k int f3`, and
/// `f2 = f1 - 2k B f3`.
pub fn solve_preimage<T: Real>(grid: GridSpec<T>, k: T, which: PinTarget) -> Result<GridFunction<T>> {
    check_caustic(grid.t_end(), k)?;
    let n = grid.n();
    let h = grid.weight();
    let i = ci::<T>();
    let (c1, c3) = match which {
        PinTarget::Eta1 => (i, czero()),
        PinTarget::Eta3 => (czero(), i),
    };
    let zeros = vec![czero::<T>(); n];
    let f3 = helmholtz_bvp(&grid, k, &zeros, czero(), c3)?;

    let two: T = real(2.0);
    let four_k = k * real(4.0);
    let ghost_lo = f3[0];
    let ghost_hi = c3 * two - f3[n - 1];
    let deriv: Vec<C<T>> = (0..n)
        .map(|j| {
            let lo = if j == 0 { ghost_lo } else { f3[j - 1] };
            let hi = if j + 1 == n { ghost_hi } else { f3[j + 1] };
            (hi - lo) / (h * two)
        })
        .collect();
    let rhs: Vec<C<T>> = deriv.iter().map(|d| d * four_k).collect();
    let f3_at_0 = (f3[0] + ghost_lo) * real::<T>(0.5);
    let int_f3 = f3.iter().fold(czero::<T>(), |a, v| a + v) * h;
    let f1 = helmholtz_bvp(&grid, k, &rhs, f3_at_0 * four_k, c1 + int_f3 * (k * two))?;

    let bf3 = discretize(OperatorKind::B, &grid).apply_slice(&f3);
    let f2: Vec<C<T>> = f1.iter().zip(&bf3).map(|(a, b)| a - b * (k * two)).collect();
    let values: Vec<C<T>> = f1.into_iter().chain(f2).chain(f3.iter().copied()).chain(f3.iter().copied()).collect();
    GridFunction::new(grid, 4, DVector::from_vec(values))
}

/// The pinning matrix `<eta_i, N^{-1} eta_j>` for `(eta1, eta3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MMatrix<T: Real> {
    /// `i tan(kt)/k * Id`.
    pub closed: Matrix2<C<T>>,
    /// Pairings against the numerical preimages, when a grid was supplied.
    pub numerical: Option<Matrix2<C<T>>>,
}

pub fn m_matrix_closed<T: Real>(t: T, k: T) -> Result<Matrix2<C<T>>> {
    check_caustic(t, k)?;
    let d = cplx(T::zero(), tan_over_k(t, k));
    Ok(Matrix2::new(d, czero(), czero(), d))
}

/// Closed form, plus the numerical value from [`solve_preimage`] when `grid` is given.
pub fn m_matrix<T: Real>(t: T, k: T, grid: Option<&GridSpec<T>>) -> Result<MMatrix<T>> {
    let closed = m_matrix_closed(t, k)?;
    let numerical = match grid {
        None => None,
        Some(g) => {
            if (g.t_end() - t).abs() > t * real(1e-12) {
                return Err(Error::invalid(format!("grid horizon {} does not match t = {t}", g.t_end())));
            }
            let etas = [GridFunction::indicator(*g, 4, 0)?, GridFunction::indicator(*g, 4, 2)?];
            let pre = [solve_preimage(*g, k, PinTarget::Eta1)?, solve_preimage(*g, k, PinTarget::Eta3)?];
            let mut m = Matrix2::from_element(czero());
            for a in 0..2 {
                for b in 0..2 {
                    m[(a, b)] = pair(&etas[a], &pre[b])?;
                }
            }
            Some(m)
        }
    };
    Ok(MMatrix { closed, numerical })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp::build_cp_operators;
    use crate::grid::make_grid;

    fn sup_err(f: &GridFunction<f64>, c: usize, exact: impl Fn(f64) -> C<f64>) -> f64 {
        let g = *f.grid();
        f.component(c).iter().enumerate().map(|(i, v)| (v - exact(g.node(i))).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn eta1_preimage_matches_closed_form() {
        let g = make_grid(1.0f64, 512).unwrap();
        let f = solve_preimage(g, 1.0, PinTarget::Eta1).unwrap();
        let want = |s: f64| cplx(0.0, s.cos() / 1f64.cos());
        assert!(sup_err(&f, 0, want) < 1e-5);
        assert!(sup_err(&f, 1, want) < 1e-5);
        assert!(f.component(2).iter().chain(f.component(3)).all(|v| *v == czero()));
    }

    #[test]
    fn eta3_preimage_matches_closed_form_with_secular_term() {
        let (t, k) = (1.0f64, 1.0f64);
        let g = make_grid(t, 512).unwrap();
        let f = solve_preimage(g, k, PinTarget::Eta3).unwrap();
        let c = (k * t).cos();
        let h1 = |s: f64| cplx(0.0, (2.0 * (k * s).sin() + 2.0 * k * (s - t) * (k * s).cos()) / c);
        let h2 = |s: f64| cplx(0.0, 2.0 * k * (k * s).cos() * (s - t) / c);
        let h3 = |s: f64| cplx(0.0, (k * s).cos() / c);
        assert!(sup_err(&f, 0, h1) < 1e-5);
        assert!(sup_err(&f, 1, h2) < 1e-5);
        assert!(sup_err(&f, 2, h3) < 1e-5);
        assert!(sup_err(&f, 3, h3) < 1e-5);
    }

    #[test]
    fn forward_application_reproduces_pins() {
        let g = make_grid(1.0f64, 1024).unwrap();
        let n = build_cp_operators(g, 1.0).n;
        for which in [PinTarget::Eta1, PinTarget::Eta3] {
            let f = solve_preimage(g, 1.0, which).unwrap();
            let eta = GridFunction::indicator(g, 4, which.component()).unwrap();
            let r = n.apply(&f).unwrap().sub(&eta).unwrap().sup_norm();
            assert!(r < 1e-4, "{which:?}: {r}");
        }
    }

    #[test]
    fn m_matrix_examples() {
        let m = m_matrix(1.0f64, 1.0, None).unwrap();
        assert!((m.closed[(0, 0)] - cplx(0.0, 1.557407724654902)).norm() < 1e-12);
        assert_eq!(m.closed[(0, 1)], czero());
        let m0 = m_matrix_closed(2.0f64, 0.0).unwrap();
        assert_eq!(m0[(1, 1)], cplx(0.0, 2.0));
        let g = make_grid(1.0f64, 1024).unwrap();
        let num = m_matrix(1.0, 1.0, Some(&g)).unwrap().numerical.unwrap();
        assert!((num - m.closed).iter().all(|z| z.norm() < 1e-5), "{num}");
        assert!(m_matrix(std::f64::consts::FRAC_PI_2, 1.0, None).is_err());
    }
}
