//! Dense complex linear algebra helpers. Storage is nalgebra; SVD and
//! eigenvalues go through faer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Singular value decomposition with singular values in descending order.
/// `v_h` holds the conjugate transpose of the right singular vectors.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v_h: CMat,
}

fn to_faer(m: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn faer_svd(m: &CMat) -> faer::linalg::solvers::Svd<C64> {
    to_faer(m).thin_svd().expect("svd of a finite matrix converges")
}

/// Thin SVD. nalgebra's complex SVD can return an inaccurate factorization
/// when singular values come in close pairs, so this goes through faer.
pub fn svd(m: &CMat) -> Svd {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Svd { u: CMat::zeros(r, 0), s: vec![], v_h: CMat::zeros(0, c) };
    }
    let d = faer_svd(m);
    let k = r.min(c);
    let s = d.S().column_vector();
    let (u, v) = (d.U(), d.V());
    Svd {
        u: CMat::from_fn(r, k, |i, j| u[(i, j)]),
        s: (0..k).map(|i| s[i].re).collect(),
        v_h: CMat::from_fn(k, c, |i, j| v[(j, i)].conj()),
    }
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = to_faer(m).singular_values().expect("svd of a finite matrix converges");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn min_singular_value(m: &CMat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn cond(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Numerical rank with a threshold relative to the largest singular value.
pub fn rank(s: &[f64], rel_tol: f64) -> usize {
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Orthonormal basis of the numerical right null space, as columns.
pub fn null_space(m: &CMat, rel_tol: f64) -> CMat {
    let (r, c) = m.shape();
    let sq = if r < c {
        let mut p = CMat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let d = svd(&sq);
    let k = rank(&d.s, rel_tol);
    let v = d.v_h.adjoint();
    v.columns(k, c - k).into_owned()
}

/// Right singular vector for the smallest singular value.
pub fn smallest_right_singular_vector(m: &CMat) -> CVec {
    let n = m.ncols();
    let sq = if m.nrows() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), m.shape()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let d = svd(&sq);
    d.v_h.row(n - 1).adjoint()
}

/// Eigenvalues of a square matrix, unordered.
pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    if m.nrows() == 0 {
        return vec![];
    }
    to_faer(m).eigenvalues().expect("eigenvalues of a finite matrix converge")
}

pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm.
pub fn norm2(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn vnorm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Least squares solution of `a x = b` through the pseudo-inverse.
pub fn lstsq(a: &CMat, b: &CMat, rel_tol: f64) -> CMat {
    let d = svd(a);
    let k = rank(&d.s, rel_tol);
    let mut x = CMat::zeros(a.ncols(), b.ncols());
    for i in 0..k {
        let ui = d.u.column(i);
        let vi = d.v_h.row(i).adjoint();
        let coef = ui.adjoint() * b / C64::new(d.s[i], 0.0);
        x += vi * coef;
    }
    x
}

/// Single-linkage clusters of points within `tol`, in a deterministic order:
/// points are sorted by real then imaginary part and clusters are listed by
/// their first member in that order.
pub fn cluster_points(points: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .re
            .total_cmp(&points[b].re)
            .then(points[a].im.total_cmp(&points[b].im))
    });
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let nx = p[j];
            p[j] = r;
            j = nx;
        }
        r
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if (points[a] - points[b]).norm() <= tol {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(g) => groups[g].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

pub fn mean(points: &[C64]) -> C64 {
    points.iter().sum::<C64>() / points.len() as f64
}

pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Powers of a complex number, `[1, z, z^2, .., z^n]`.
pub fn powers(z: C64, n: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = C64::new(1.0, 0.0);
    for _ in 0..=n {
        out.push(acc);
        acc *= z;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_rank_one() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let n = null_space(&m, 1e-12);
        assert_eq!(n.ncols(), 1);
        assert!(fro(&(&m * &n)) < 1e-12);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 1.0), c(3.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0)]);
        let mut e = eigenvalues(&m);
        e.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((e[0] - c(-2.0, 0.0)).norm() < 1e-12);
        assert!((e[1] - c(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn clusters_are_transitive() {
        let p = [c(0.0, 0.0), c(1e-8, 0.0), c(2e-8, 0.0), c(1.0, 0.0)];
        let g = cluster_points(&p, 1.5e-8);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].len(), 3);
    }

    #[test]
    fn lstsq_recovers_solution() {
        let a = CMat::from_fn(5, 2, |i, j| c((i + 2 * j) as f64, (i * j) as f64 * 0.1));
        let x = CMat::from_row_slice(2, 1, &[c(1.0, -1.0), c(0.5, 2.0)]);
        let b = &a * &x;
        assert!(fro(&(lstsq(&a, &b, 1e-12) - x)) < 1e-10);
    }

    #[test]
    fn eigenvalues_of_rotation_and_companions() {
        let r = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        let mut ev = eigenvalues(&r);
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] + I).norm() < 1e-14 && (ev[1] - I).norm() < 1e-14);
        // Companion matrix of prod (z - z_k) for nearly paired roots.
        let roots = [c(0.0, 0.7648), c(0.0, 0.7073), c(0.0, -0.7648), c(0.0, -0.7073), c(0.3, 0.1)];
        let mut p = vec![c(1.0, 0.0)];
        for z in roots {
            let mut q = vec![C64::default(); p.len() + 1];
            for (k, a) in p.iter().enumerate() {
                q[k + 1] += a;
                q[k] -= a * z;
            }
            p = q;
        }
        let n = roots.len();
        let comp = CMat::from_fn(n, n, |i, j| if j == n - 1 { -p[i] } else if i == j + 1 { c(1.0, 0.0) } else { C64::default() });
        let ev = eigenvalues(&comp);
        for z in roots {
            assert!(ev.iter().map(|e| (e - z).norm()).fold(f64::INFINITY, f64::min) < 1e-10);
        }
    }
}
