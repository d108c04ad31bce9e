use crate::error::{Error, Result};

/// Boundary condition imposed at one end of a parametric direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Univariate B-spline space of degree `p` with `n_el` uniform elements on
/// an open knot vector over `[0, 1]`, with the endpoint basis function
/// removed at each Dirichlet end.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineSpace1D {
    degree: usize,
    n_el: usize,
    knots: Vec<f64>,
    bc: [BoundaryCondition; 2],
}

impl SplineSpace1D {
    pub fn new(degree: usize, n_el: usize, bc: [BoundaryCondition; 2]) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("spline degree must be at least 1".into()));
        }
        if n_el == 0 {
            return Err(Error::InvalidInput("number of elements must be positive".into()));
        }
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..n_el).map(|i| i as f64 / n_el as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        let s = Self {
            degree,
            n_el,
            knots,
            bc,
        };
        if s.dim() == 0 {
            return Err(Error::InvalidInput("spline space has no degrees of freedom".into()));
        }
        Ok(s)
    }

    /// Same knots and degree, different boundary conditions.
    pub fn with_bc(&self, bc: [BoundaryCondition; 2]) -> Result<Self> {
        Self::new(self.degree, self.n_el, bc)
    }

    /// Homogeneous Dirichlet at both ends.
    pub fn dirichlet(degree: usize, n_el: usize) -> Result<Self> {
        Self::new(degree, n_el, [BoundaryCondition::Dirichlet; 2])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_el(&self) -> usize {
        self.n_el
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn bc(&self) -> [BoundaryCondition; 2] {
        self.bc
    }

    /// Element breakpoints `0, 1/n_el, ..., 1`.
    pub fn breakpoints(&self) -> Vec<f64> {
        (0..=self.n_el).map(|i| i as f64 / self.n_el as f64).collect()
    }

    /// Number of basis functions before boundary conditions.
    pub fn full_dim(&self) -> usize {
        self.n_el + self.degree
    }

    /// Index of the first retained full basis function.
    pub fn first_index(&self) -> usize {
        usize::from(self.bc[0] == BoundaryCondition::Dirichlet)
    }

    /// Number of retained basis functions.
    pub fn dim(&self) -> usize {
        let removed = self.bc.iter().filter(|&&b| b == BoundaryCondition::Dirichlet).count();
        self.full_dim().saturating_sub(removed)
    }

    /// Reduced index of full basis function `i`, if retained.
    pub fn reduced_index(&self, i: usize) -> Option<usize> {
        let off = self.first_index();
        (i >= off && i - off < self.dim()).then(|| i - off)
    }

    /// Knot span index `s` with `t_s <= x < t_{s+1}` (closed at `x = 1`).
    pub fn find_span(&self, x: f64) -> usize {
        let n = self.full_dim() - 1;
        let u = &self.knots;
        if x >= u[n + 1] {
            return n;
        }
        if x <= u[self.degree] {
            return self.degree;
        }
        let (mut lo, mut hi) = (self.degree, n + 1);
        let mut mid = (lo + hi) / 2;
        while x < u[mid] || x >= u[mid + 1] {
            if x < u[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
            mid = (lo + hi) / 2;
        }
        mid
    }

    /// Values and derivatives up to order `nder` of the `p+1` full basis
    /// functions that are nonzero at `x`. Returns the full index of the
    /// first one and `ders[k][j]` = k-th derivative of function `first + j`.
    pub fn eval_local(&self, x: f64, nder: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
        let p = self.degree;
        let span = self.find_span(x);
        Ok((span - p, ders_basis_funs(span, x, p, nder, &self.knots)))
    }

    /// Nonzero retained basis functions (reduced index, value of derivative
    /// order `deriv`) at `x`.
    pub fn eval_basis(&self, x: f64, deriv: usize) -> Result<Vec<(usize, f64)>> {
        let (first, ders) = self.eval_local(x, deriv)?;
        let row = ders.into_iter().nth(deriv).unwrap();
        Ok(row
            .into_iter()
            .enumerate()
            .filter_map(|(j, v)| self.reduced_index(first + j).map(|r| (r, v)))
            .collect())
    }

    /// Dense vector of all retained basis values (derivative `deriv`) at `x`.
    pub fn eval_all(&self, x: f64, deriv: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        for (i, v) in self.eval_basis(x, deriv)? {
            out[i] = v;
        }
        Ok(out)
    }
}

/// Cox–de Boor recursion for basis functions and derivatives.
fn ders_basis_funs(span: usize, x: f64, p: usize, nder: usize, u: &[f64]) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - u[span + 1 - j];
        right[j] = u[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = vec![vec![0.0; p + 1]; nder + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nder.min(p) {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for k in 1..=nder.min(p) {
        for v in ders[k].iter_mut() {
            *v *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryCondition::*;

    #[test]
    fn dimension_counts() {
        let s = SplineSpace1D::new(3, 8, [Dirichlet, Neumann]).unwrap();
        assert_eq!(s.full_dim(), 11);
        assert_eq!(s.dim(), 10);
        assert_eq!(SplineSpace1D::dirichlet(2, 4).unwrap().dim(), 4);
    }

    #[test]
    fn partition_of_unity_and_derivative_sum() {
        let s = SplineSpace1D::new(4, 5, [Neumann, Neumann]).unwrap();
        for k in 0..=40 {
            let x = k as f64 / 40.0;
            let (_, d) = s.eval_local(x, 2).unwrap();
            let sum: f64 = d[0].iter().sum();
            let dsum: f64 = d[1].iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            assert!(dsum.abs() < 1e-11);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = SplineSpace1D::new(3, 4, [Neumann, Neumann]).unwrap();
        let h = 1e-6;
        for &x in &[0.1, 0.33, 0.61, 0.9] {
            let d = s.eval_all(x, 1).unwrap();
            let vp = s.eval_all(x + h, 0).unwrap();
            let vm = s.eval_all(x - h, 0).unwrap();
            for i in 0..s.dim() {
                assert!((d[i] - (vp[i] - vm[i]) / (2.0 * h)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn dirichlet_basis_vanishes_at_ends() {
        let s = SplineSpace1D::dirichlet(3, 6).unwrap();
        assert!(s.eval_all(0.0, 0).unwrap().iter().all(|v| v.abs() < 1e-15));
        assert!(s.eval_all(1.0, 0).unwrap().iter().all(|v| v.abs() < 1e-15));
        assert!(matches!(s.eval_all(1.5, 0), Err(Error::OutOfDomain(_))));
    }
}
