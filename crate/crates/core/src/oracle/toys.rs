//! Small regression models with known learning coefficients.
//!
//! Both use the Gaussian negative log-likelihood with known noise `sigma`,
//! `l_i(w) = (y_i - f(x_i; w))^2 / (2 sigma^2)`, averaged over samples.
//! Losses over the full dataset are computed from sufficient statistics.

use crate::complexity::StochasticLoss;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};
use crate::scalar::Scalar;

/// `y = x . w0 + noise` with `d` features drawn from `N(0, 1)`.
#[derive(Debug, Clone)]
pub struct LinearRegression {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub sigma: f64,
    gram: Vec<Vec<f64>>,
    xty: Vec<f64>,
    yty: f64,
}

impl LinearRegression {
    pub fn synthetic(n: usize, d: usize, sigma: f64, seed: u64) -> Self {
        let mut rng = stream_rng(seed, streams::SYNTHETIC, 0);
        let w0: Vec<f64> = (0..d).map(|_| f64::standard_normal(&mut rng)).collect();
        let x: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| f64::standard_normal(&mut rng)).collect()).collect();
        let y = x
            .iter()
            .map(|xi| xi.iter().zip(&w0).map(|(a, b)| a * b).sum::<f64>() + sigma * f64::standard_normal(&mut rng))
            .collect();
        Self::new(x, y, sigma)
    }

    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, sigma: f64) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut gram = vec![vec![0.0; d]; d];
        let mut xty = vec![0.0; d];
        for (xi, &yi) in x.iter().zip(&y) {
            for a in 0..d {
                xty[a] += xi[a] * yi;
                for b in 0..d {
                    gram[a][b] += xi[a] * xi[b];
                }
            }
        }
        let yty = y.iter().map(|v| v * v).sum();
        Self { x, y, sigma, gram, xty, yty }
    }

    pub fn dim(&self) -> usize {
        self.xty.len()
    }

    /// Hessian of the mean loss: `X^T X / (n sigma^2)`.
    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let scale = 1.0 / (self.y.len() as f64 * self.sigma * self.sigma);
        self.gram.iter().map(|row| row.iter().map(|v| v * scale).collect()).collect()
    }

    /// Least-squares minimizer.
    pub fn minimizer(&self) -> Result<Vec<f64>> {
        cholesky_solve(&self.gram, &self.xty)
    }

    fn full_loss(&self, w: &[f64]) -> f64 {
        let d = self.dim();
        let mut quad = 0.0;
        for a in 0..d {
            for b in 0..d {
                quad += w[a] * self.gram[a][b] * w[b];
            }
        }
        let lin: f64 = w.iter().zip(&self.xty).map(|(a, b)| a * b).sum();
        (self.yty - 2.0 * lin + quad) / (2.0 * self.sigma * self.sigma * self.y.len() as f64)
    }
}

impl<F: Scalar> StochasticLoss<F> for LinearRegression {
    fn num_params(&self) -> usize {
        self.dim()
    }

    fn num_samples(&self) -> usize {
        self.y.len()
    }

    fn loss_and_grad(&mut self, params: &[F], indices: &[usize], grad: &mut Vec<F>) -> Result<f64> {
        let w: Vec<f64> = params.iter().map(|p| p.to_f64_lossy()).collect();
        let s2 = self.sigma * self.sigma;
        let mut g = vec![0.0; w.len()];
        let mut loss = 0.0;
        for &i in indices {
            let xi = &self.x[i];
            let r = xi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - self.y[i];
            loss += r * r / (2.0 * s2);
            for (gk, xk) in g.iter_mut().zip(xi) {
                *gk += r * xk / s2;
            }
        }
        let m = indices.len() as f64;
        grad.clear();
        grad.extend(g.iter().map(|v| F::from_f64_lossy(v / m)));
        Ok(loss / m)
    }

    fn loss(&mut self, params: &[F], indices: &[usize]) -> Result<f64> {
        let w: Vec<f64> = params.iter().map(|p| p.to_f64_lossy()).collect();
        if indices.len() == self.y.len() {
            return Ok(self.full_loss(&w));
        }
        let s2 = self.sigma * self.sigma;
        let total: f64 = indices
            .iter()
            .map(|&i| {
                let r = self.x[i].iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - self.y[i];
                r * r / (2.0 * s2)
            })
            .sum();
        Ok(total / indices.len() as f64)
    }
}

/// `y = w1 * w2 * x + noise` with true product zero: the simplest singular
/// model, whose learning coefficient is 1/2 (against 1 for a regular model
/// with two parameters).
#[derive(Debug, Clone)]
pub struct ProductModel {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

impl ProductModel {
    pub fn synthetic(n: usize, sigma: f64, seed: u64) -> Self {
        let mut rng = stream_rng(seed, streams::SYNTHETIC, 1);
        let x: Vec<f64> = (0..n).map(|_| f64::standard_normal(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| sigma * f64::standard_normal(&mut rng)).collect();
        Self::new(x, y, sigma)
    }

    pub fn new(x: Vec<f64>, y: Vec<f64>, sigma: f64) -> Self {
        let sxx = x.iter().map(|v| v * v).sum();
        let sxy = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let syy = y.iter().map(|v| v * v).sum();
        Self { x, y, sigma, sxx, sxy, syy }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Mean loss as a function of the product `c = w1 * w2`.
    pub fn loss_of_product(&self, c: f64) -> f64 {
        (self.syy - 2.0 * c * self.sxy + c * c * self.sxx) / (2.0 * self.sigma * self.sigma * self.n() as f64)
    }

    /// Curvature of the mean loss in `c`: `sum x^2 / (n sigma^2)`.
    pub fn product_curvature(&self) -> f64 {
        self.sxx / (self.n() as f64 * self.sigma * self.sigma)
    }

    /// A minimizer on the balanced branch `|w1| = |w2|`.
    pub fn minimizer(&self) -> [f64; 2] {
        let c = self.sxy / self.sxx;
        let r = c.abs().sqrt();
        [r, r * c.signum()]
    }
}

impl<F: Scalar> StochasticLoss<F> for ProductModel {
    fn num_params(&self) -> usize {
        2
    }

    fn num_samples(&self) -> usize {
        self.n()
    }

    fn loss_and_grad(&mut self, params: &[F], indices: &[usize], grad: &mut Vec<F>) -> Result<f64> {
        let (w1, w2) = (params[0].to_f64_lossy(), params[1].to_f64_lossy());
        let c = w1 * w2;
        let s2 = self.sigma * self.sigma;
        let (mut loss, mut dc) = (0.0, 0.0);
        for &i in indices {
            let r = c * self.x[i] - self.y[i];
            loss += r * r / (2.0 * s2);
            dc += r * self.x[i] / s2;
        }
        let m = indices.len() as f64;
        grad.clear();
        grad.push(F::from_f64_lossy(dc * w2 / m));
        grad.push(F::from_f64_lossy(dc * w1 / m));
        Ok(loss / m)
    }

    fn loss(&mut self, params: &[F], indices: &[usize]) -> Result<f64> {
        let c = params[0].to_f64_lossy() * params[1].to_f64_lossy();
        if indices.len() == self.n() {
            return Ok(self.loss_of_product(c));
        }
        let s2 = self.sigma * self.sigma;
        let total: f64 = indices
            .iter()
            .map(|&i| {
                let r = c * self.x[i] - self.y[i];
                r * r / (2.0 * s2)
            })
            .sum();
        Ok(total / indices.len() as f64)
    }
}

/// Data-free quadratic `L(w) = 1/2 sum h_i w_i^2`; `n` only sets the
/// tempering. Minibatches do not change the loss, so the sampler's only
/// noise is the injected Gaussian.
#[derive(Debug, Clone)]
pub struct QuadraticBowl {
    pub curvatures: Vec<f64>,
    pub n: usize,
}

impl<F: Scalar> StochasticLoss<F> for QuadraticBowl {
    fn num_params(&self) -> usize {
        self.curvatures.len()
    }

    fn num_samples(&self) -> usize {
        self.n
    }

    fn loss_and_grad(&mut self, params: &[F], _indices: &[usize], grad: &mut Vec<F>) -> Result<f64> {
        grad.clear();
        grad.extend(params.iter().zip(&self.curvatures).map(|(&w, &h)| w * F::from_f64_lossy(h)));
        <Self as StochasticLoss<F>>::loss(self, params, &[])
    }

    fn loss(&mut self, params: &[F], _indices: &[usize]) -> Result<f64> {
        Ok(params.iter().zip(&self.curvatures).map(|(&w, &h)| 0.5 * h * w.to_f64_lossy().powi(2)).sum())
    }
}

/// Solve `a x = b` for symmetric positive-definite `a`.
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let d = b.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if v <= 0.0 {
                    return Err(Error::Data("matrix is not positive definite".into()));
                }
                l[i][j] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; d];
    for i in 0..d {
        z[i] = (b[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        x[i] = (z[i] - (i + 1..d).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Ok(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let d = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..d).map(|i| m[i][i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_minimizer_has_zero_gradient() {
        let mut model = LinearRegression::synthetic(200, 3, 0.5, 1);
        let w = model.minimizer().unwrap();
        let all: Vec<usize> = (0..200).collect();
        let mut g = Vec::new();
        StochasticLoss::<f64>::loss_and_grad(&mut model, &w, &all, &mut g).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-10), "{g:?}");
        let full = StochasticLoss::<f64>::loss(&mut model, &w, &all).unwrap();
        let partial = StochasticLoss::<f64>::loss(&mut model, &w, &all[..199]).unwrap();
        assert!((full - partial).abs() < 0.1);
    }

    #[test]
    fn sufficient_statistics_match_direct_sum() {
        let mut model = ProductModel::synthetic(50, 1.0, 3);
        let all: Vec<usize> = (0..50).collect();
        let w = [0.7, -1.3];
        let mut g = Vec::new();
        let direct = StochasticLoss::<f64>::loss_and_grad(&mut model, &w, &all, &mut g).unwrap();
        let fast = StochasticLoss::<f64>::loss(&mut model, &w, &all).unwrap();
        assert!((direct - fast).abs() < 1e-12);
    }

    #[test]
    fn jacobi_eigenvalues() {
        let mut ev = symmetric_eigenvalues(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }
}
