//! Symmetric generalized eigenproblems.
//!
//! Two pencils appear in plate analysis:
//!
//! * vibration, `A x = lambda B x` with `B` positive definite and `A`
//!   possibly indefinite (heated plates past the critical temperature);
//! * buckling, `A x = lambda B x` with `A` positive definite and `B`
//!   indefinite, where the smallest positive `lambda` is wanted.
//!
//! Both are solved by Lanczos iteration with full reorthogonalization on a
//! shift-inverted operator, with a dense reference for small systems.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};
use crate::sparse::{CsrMatrix, SkylineLdlt};

/// Systems at or below this many unknowns default to the dense solver.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenStrategy {
    /// Dense below [`DENSE_LIMIT`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

impl EigenStrategy {
    fn use_dense(self, n: usize) -> bool {
        match self {
            EigenStrategy::Auto => n <= DENSE_LIMIT,
            EigenStrategy::Dense => true,
            EigenStrategy::Lanczos => false,
        }
    }
}

/// Eigenpairs sorted by ascending eigenvalue; vectors are `B`-orthonormal
/// for vibration and `A`-orthonormal for buckling.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Deterministic, well-spread starting vector.
fn start_vector(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 + 1.0;
            1.0 + 0.5 * (t * 0.618_033_988_749_895).fract() + 0.25 * (t * 1.414_213_562_373_095).sin()
        })
        .collect()
}

/// Extreme Ritz pairs of an operator `op` that is self-adjoint in the inner
/// product defined by the matrix applied in `inner`. Iterates stay orthogonal
/// to the `locked` vectors, each given with its inner-product image.
struct Lanczos<'a> {
    n: usize,
    op: &'a dyn Fn(&[f64]) -> Vec<f64>,
    inner: &'a dyn Fn(&[f64]) -> Vec<f64>,
}

struct RitzPairs {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

type Selector<'a> = &'a dyn Fn(&[f64]) -> Vec<usize>;

impl Lanczos<'_> {
    /// Runs until the `want` Ritz values ranked first by `select` have
    /// converged to relative residual `tol`, growing the subspace as needed.
    fn run(&self, want: usize, tol: f64, select: Selector, locked: &[(Vec<f64>, Vec<f64>)]) -> Result<RitzPairs> {
        let room = self.n - locked.len();
        if room == 0 {
            return Ok(RitzPairs { values: Vec::new(), vectors: Vec::new() });
        }
        let mut steps = (2 * want + 20).max(40).min(room);
        loop {
            match self.attempt(steps, want, tol, select, locked)? {
                Some(pairs) => return Ok(pairs),
                None if steps >= room => {
                    return Err(PlateError::Numeric("Lanczos iteration did not converge".into()));
                }
                None => steps = (2 * steps).min(room),
            }
        }
    }

    fn orthogonalize(w: &mut [f64], vectors: &[Vec<f64>], images: &[Vec<f64>], locked: &[(Vec<f64>, Vec<f64>)]) {
        for _ in 0..2 {
            for (v, bv) in locked.iter().map(|(v, bv)| (v, bv)).chain(vectors.iter().zip(images)) {
                let c = dot(w, bv);
                axpy(-c, v, w);
            }
        }
    }

    fn attempt(
        &self,
        steps: usize,
        want: usize,
        tol: f64,
        select: Selector,
        locked: &[(Vec<f64>, Vec<f64>)],
    ) -> Result<Option<RitzPairs>> {
        let n = self.n;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut images: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut alpha = Vec::with_capacity(steps);
        let mut beta: Vec<f64> = Vec::with_capacity(steps);

        let mut q = start_vector(n);
        Self::orthogonalize(&mut q, &[], &[], locked);
        let mut bq = (self.inner)(&q);
        let norm = dot(&q, &bq);
        if !(norm > 0.0) {
            return Err(PlateError::Numeric("inner-product matrix is not positive definite".into()));
        }
        let s = 1.0 / norm.sqrt();
        q.iter_mut().for_each(|v| *v *= s);
        bq.iter_mut().for_each(|v| *v *= s);
        let mut last_beta = 0.0;
        let mut exhausted = false;

        for j in 0..steps {
            let mut w = (self.op)(&q);
            alpha.push(dot(&w, &bq));
            basis.push(q.clone());
            images.push(bq.clone());
            Self::orthogonalize(&mut w, &basis, &images, locked);
            let bw = (self.inner)(&w);
            let b2 = dot(&w, &bw);
            let b = if b2 > 0.0 { b2.sqrt() } else { 0.0 };
            last_beta = b;
            let scale = alpha.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            if b <= 1e-13 * scale || j + 1 == steps {
                exhausted = b <= 1e-13 * scale;
                break;
            }
            beta.push(b);
            q = w.iter().map(|v| v / b).collect();
            bq = bw.iter().map(|v| v / b).collect();
        }

        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let theta: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let chosen = select(&theta);
        let scale = theta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let take = chosen.len().min(want);
        let converged = exhausted
            || chosen.iter().take(take).all(|&i| {
                let residual = (last_beta * eig.eigenvectors[(m - 1, i)]).abs();
                residual <= tol * theta[i].abs().max(1e-3 * scale)
            });
        if !converged && m < n - locked.len() {
            return Ok(None);
        }
        let mut values = Vec::with_capacity(take);
        let mut vectors = Vec::with_capacity(take);
        for &i in chosen.iter().take(take) {
            let mut x = vec![0.0; n];
            for (k, v) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(k, i)], v, &mut x);
            }
            values.push(theta[i]);
            vectors.push(x);
        }
        Ok(Some(RitzPairs { values, vectors }))
    }
}

fn descending(theta: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..theta.len()).collect();
    idx.sort_by(|&i, &j| theta[j].total_cmp(&theta[i]));
    idx
}

/// Smallest `count` eigenpairs of `A x = lambda B x`, `B` positive definite.
pub fn smallest_eigenpairs(a: &CsrMatrix, b: &CsrMatrix, count: usize, strategy: EigenStrategy) -> Result<EigenPairs> {
    let n = a.n;
    if n == 0 || count == 0 {
        return Ok(EigenPairs { values: Vec::new(), vectors: Vec::new() });
    }
    let count = count.min(n);
    if strategy.use_dense(n) {
        return dense_smallest(a, b, count);
    }
    let factor_at = |sigma: f64| -> Option<SkylineLdlt> {
        let shifted = if sigma == 0.0 { a.clone() } else { a.add_scaled(b, -sigma).ok()? };
        SkylineLdlt::factor(&shifted).ok().filter(|f| f.negative_pivots() == 0)
    };
    // shift at zero when A is definite, otherwise step below the spectrum
    let ratio = a
        .diagonal()
        .iter()
        .zip(b.diagonal())
        .filter(|(_, bd)| *bd > 0.0)
        .map(|(ad, bd)| ad.abs() / bd)
        .fold(f64::INFINITY, f64::min);
    let base = if ratio.is_finite() && ratio > 0.0 { ratio } else { 1.0 };
    let mut sigma = 0.0;
    let mut step = 1e-10 * base;
    let factor = loop {
        if let Some(f) = factor_at(sigma) {
            break f;
        }
        sigma = -step;
        step *= 10.0;
        if step > 1e6 * base {
            return Err(PlateError::Numeric("no definite shift found for the vibration pencil".into()));
        }
    };
    let op = |x: &[f64]| factor.solve(&b.matvec(x));
    let inner = |x: &[f64]| b.matvec(x);
    let lanczos = Lanczos { n, op: &op, inner: &inner };
    // theta = 1/(lambda - sigma) > 0; the largest theta are the smallest lambda.
    // Restarts against the locked set recover repeated eigenvalues.
    let mut found: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for _ in 0..16 {
        let locked: Vec<(Vec<f64>, Vec<f64>)> = found.iter().map(|(_, v, bv)| (v.clone(), bv.clone())).collect();
        let ritz = lanczos.run(count, 1e-11, &descending, &locked)?;
        let floor = if found.len() >= count { found[count - 1].0 } else { f64::NEG_INFINITY };
        let mut entered = false;
        for (theta, v) in ritz.values.into_iter().zip(ritz.vectors) {
            if theta > floor * (1.0 + 1e-9) || found.len() < count {
                let bv = b.matvec(&v);
                let norm = dot(&v, &bv).sqrt();
                found.push((theta, v.iter().map(|x| x / norm).collect(), bv.iter().map(|x| x / norm).collect()));
                entered = true;
            }
        }
        found.sort_by(|x, y| y.0.total_cmp(&x.0));
        found.truncate(count);
        if !entered || found.len() + count > n {
            break;
        }
    }
    let mut out = EigenPairs { values: Vec::new(), vectors: Vec::new() };
    for (theta, v, _) in found {
        out.values.push(sigma + 1.0 / theta);
        out.vectors.push(v);
    }
    Ok(out)
}

fn dense_smallest(a: &CsrMatrix, b: &CsrMatrix, count: usize) -> Result<EigenPairs> {
    let ad = a.to_dense();
    let bd = b.to_dense();
    let chol = bd
        .cholesky()
        .ok_or_else(|| PlateError::Numeric("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| PlateError::Numeric("mass factor is singular".into()))?;
    let c = &linv * ad * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lt = l.transpose();
    let mut out = EigenPairs { values: Vec::new(), vectors: Vec::new() };
    for &i in idx.iter().take(count) {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| PlateError::Numeric("mass factor is singular".into()))?;
        out.values.push(eig.eigenvalues[i]);
        out.vectors.push(x.iter().copied().collect());
    }
    Ok(out)
}

/// Smallest positive `lambda` of `A x = lambda B x` with `A` positive
/// definite, and its `A`-normalized mode.
pub fn smallest_positive_eigenpair(a: &CsrMatrix, b: &CsrMatrix, strategy: EigenStrategy) -> Result<(f64, Vec<f64>)> {
    let n = a.n;
    if n == 0 {
        return Err(PlateError::NoBuckling);
    }
    if strategy.use_dense(n) {
        return dense_positive(a, b);
    }
    let factor = SkylineLdlt::factor(a)?;
    if factor.negative_pivots() > 0 {
        return Err(PlateError::Numeric(format!(
            "stiffness is indefinite ({} negative pivots); the reference state is already unstable",
            factor.negative_pivots()
        )));
    }
    // mu = 1/lambda for A^{-1} B, self-adjoint in the A inner product
    let op = |x: &[f64]| factor.solve(&b.matvec(x));
    let inner = |x: &[f64]| a.matvec(x);
    let lanczos = Lanczos { n, op: &op, inner: &inner };
    let ritz = lanczos.run(2, 1e-11, &descending, &[])?;
    let scale = ritz.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    finish_positive(a, ritz.values[0], ritz.vectors[0].clone(), scale)
}

fn finish_positive(a: &CsrMatrix, mu: f64, mut v: Vec<f64>, scale: f64) -> Result<(f64, Vec<f64>)> {
    if !(mu > 1e-12 * scale) {
        return Err(PlateError::NoBuckling);
    }
    let norm = dot(&v, &a.matvec(&v)).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    Ok((1.0 / mu, v))
}

fn dense_positive(a: &CsrMatrix, b: &CsrMatrix) -> Result<(f64, Vec<f64>)> {
    let ad = a.to_dense();
    let chol = ad.cholesky().ok_or_else(|| {
        PlateError::Numeric("stiffness is not positive definite; the reference state is already unstable".into())
    })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| PlateError::Numeric("stiffness factor is singular".into()))?;
    let c = &linv * b.to_dense() * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let (imax, mu) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or(PlateError::NoBuckling)?;
    let scale = eig.eigenvalues.amax();
    let y: DVector<f64> = eig.eigenvectors.column(imax).into_owned();
    let x = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| PlateError::Numeric("stiffness factor is singular".into()))?;
    finish_positive(a, mu, x.iter().copied().collect(), scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, spring: f64, mass: f64) -> (CsrMatrix, CsrMatrix) {
        let mut k = Vec::new();
        let mut m = Vec::new();
        for i in 0..n {
            k.push((i, i, 2.0 * spring));
            m.push((i, i, mass * (1.0 + 0.1 * (i % 3) as f64)));
            if i + 1 < n {
                k.push((i, i + 1, -spring));
                k.push((i + 1, i, -spring));
            }
        }
        (CsrMatrix::from_triplets(n, &k).unwrap(), CsrMatrix::from_triplets(n, &m).unwrap())
    }

    #[test]
    fn lanczos_matches_dense_on_a_chain() {
        let (k, m) = chain(300, 1e6, 2.0);
        let dense = smallest_eigenpairs(&k, &m, 6, EigenStrategy::Dense).unwrap();
        let lanczos = smallest_eigenpairs(&k, &m, 6, EigenStrategy::Lanczos).unwrap();
        for (a, b) in dense.values.iter().zip(&lanczos.values) {
            assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} {b}");
        }
        for (i, vi) in lanczos.vectors.iter().enumerate() {
            for (j, vj) in lanczos.vectors.iter().enumerate() {
                let g = dot(vi, &m.matvec(vj));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn indefinite_stiffness_gives_negative_eigenvalues() {
        let (k, m) = chain(200, 1.0, 1.0);
        let shifted = k.add_scaled(&m, -0.01).unwrap();
        let dense = smallest_eigenpairs(&shifted, &m, 3, EigenStrategy::Dense).unwrap();
        let lanczos = smallest_eigenpairs(&shifted, &m, 3, EigenStrategy::Lanczos).unwrap();
        assert!(dense.values[0] < 0.0);
        for (a, b) in dense.values.iter().zip(&lanczos.values) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-3));
        }
    }

    #[test]
    fn buckling_pencil_matches_dense() {
        let (k, m) = chain(250, 3.0, 1.0);
        // indefinite load operator
        let mut t = m.triplets();
        for e in t.iter_mut() {
            if e.0 % 7 == 0 {
                e.2 = -e.2;
            }
        }
        let b = CsrMatrix::from_triplets(250, &t).unwrap();
        let (ld, _) = smallest_positive_eigenpair(&k, &b, EigenStrategy::Dense).unwrap();
        let (ll, v) = smallest_positive_eigenpair(&k, &b, EigenStrategy::Lanczos).unwrap();
        assert!((ld - ll).abs() <= 1e-10 * ld);
        let kv = k.matvec(&v);
        let bv = b.matvec(&v);
        let res: f64 = kv.iter().zip(&bv).map(|(x, y)| (x - ll * y).abs()).fold(0.0, f64::max);
        assert!(res < 1e-8 * kv.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }

    #[test]
    fn no_positive_load_means_no_buckling() {
        let (k, m) = chain(20, 1.0, 1.0);
        let tension = m.scaled(-1.0);
        assert!(matches!(
            smallest_positive_eigenpair(&k, &tension, EigenStrategy::Dense),
            Err(PlateError::NoBuckling)
        ));
        assert!(matches!(
            smallest_positive_eigenpair(&k, &tension, EigenStrategy::Lanczos),
            Err(PlateError::NoBuckling)
        ));
    }
}
