//! Weighted generalized linear models fitted from scratch.
//!
//! Three families are supported: logistic (binary response, logit link),
//! linear (Gaussian, identity link, solved by QR) and Poisson (log link) with
//! HC0 sandwich standard errors. Binary outcomes may be passed to the Poisson
//! fitter; the exponentiated coefficients are then risk ratios.

use thiserror::Error;

use crate::linalg::{inverse_from_r, least_squares_qr, Cholesky, LinalgError, Matrix};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlmError {
    #[error("design has {rows} rows but {got} {what} were supplied")]
    Length { what: &'static str, rows: usize, got: usize },
    #[error("non-finite design entry at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("case weight at row {row} is negative or non-finite")]
    BadWeight { row: usize },
    #[error("invalid response at row {row}: {reason}")]
    InvalidResponse { row: usize, reason: &'static str },
    #[error("singular design: column '{column}' is linearly dependent on earlier columns")]
    SingularDesign { column: String },
    #[error("degenerate response: {0}")]
    DegenerateResponse(&'static str),
    #[error("domain error: {0}")]
    Domain(&'static str),
}

/// Model matrix with column names and optional non-negative case weights.
#[derive(Debug, Clone)]
pub struct DesignMatrix<T> {
    x: Matrix<T>,
    names: Vec<String>,
    weights: Option<Vec<T>>,
}

impl<T: Real> DesignMatrix<T> {
    pub fn new(x: Matrix<T>, names: Vec<String>) -> Result<Self, GlmError> {
        if names.len() != x.cols() {
            return Err(GlmError::Length { what: "column names", rows: x.cols(), got: names.len() });
        }
        for i in 0..x.rows() {
            if let Some(j) = x.row(i).iter().position(|v| !v.is_finite()) {
                return Err(GlmError::NonFinite { row: i, column: j });
            }
        }
        Ok(Self { x, names, weights: None })
    }

    /// Build from row vectors; every row must have `names.len()` entries.
    pub fn from_rows(rows: &[Vec<T>], names: Vec<String>) -> Result<Self, GlmError> {
        let p = names.len();
        let mut data = Vec::with_capacity(rows.len() * p);
        for r in rows {
            if r.len() != p {
                return Err(GlmError::Length { what: "row entries", rows: p, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        let x = Matrix::from_row_major(rows.len(), p, data).map_err(|_| GlmError::Length {
            what: "row entries",
            rows: p,
            got: 0,
        })?;
        Self::new(x, names)
    }

    pub fn with_weights(mut self, weights: Vec<T>) -> Result<Self, GlmError> {
        if weights.len() != self.x.rows() {
            return Err(GlmError::Length { what: "case weights", rows: self.x.rows(), got: weights.len() });
        }
        if let Some(row) = weights.iter().position(|w| !w.is_finite() || *w < T::zero()) {
            return Err(GlmError::BadWeight { row });
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.cols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.x.row(i)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[i])
    }

    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    fn linear_predictor(&self, beta: &[T]) -> Vec<T> {
        (0..self.n_rows()).map(|i| dot(self.row(i), beta)).collect()
    }

    fn intercept_column(&self) -> Option<usize> {
        (0..self.n_cols()).find(|&j| (0..self.n_rows()).all(|i| self.x[(i, j)] == T::one()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Logistic,
    Linear,
    Poisson,
}

#[derive(Debug, Clone, Copy)]
pub struct IrlsOptions {
    pub max_iter: usize,
    pub gradient_tol: f64,
    pub deviance_tol: f64,
    /// Coefficient magnitude treated as divergence (perfect separation).
    pub divergence_bound: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self { max_iter: 100, gradient_tol: 1e-8, deviance_tol: 1e-10, divergence_bound: 30.0 }
    }
}

#[derive(Debug, Clone)]
pub struct GlmFit<T> {
    pub family: Family,
    pub names: Vec<String>,
    pub coefficients: Vec<T>,
    pub model_se: Vec<T>,
    pub robust_se: Option<Vec<T>>,
    pub covariance: Matrix<T>,
    pub robust_covariance: Option<Matrix<T>>,
    /// Residual SD for the linear family.
    pub residual_sd: Option<T>,
    pub converged: bool,
    pub separation: bool,
    pub iterations: usize,
    /// Weighted log-likelihood. For the Poisson family the `log(y!)` term is
    /// omitted (it is zero for binary outcomes).
    pub log_likelihood: T,
}

impl<T: Real> GlmFit<T> {
    pub fn coefficient(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| n == name).map(|j| self.coefficients[j])
    }

    pub fn robust_se_of(&self, name: &str) -> Option<T> {
        let j = self.names.iter().position(|n| n == name)?;
        self.robust_se.as_ref().map(|se| se[j])
    }

    pub fn linear_predictor(&self, row: &[T]) -> T {
        dot(row, &self.coefficients)
    }

    /// Fitted mean (probability, mean or rate) for every row of `design`.
    pub fn predict_mean(&self, design: &DesignMatrix<T>) -> Vec<T> {
        (0..design.n_rows()).map(|i| inverse_link(self.family, self.linear_predictor(design.row(i)))).collect()
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn sigmoid<T: Real>(eta: T) -> T {
    if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    }
}

/// `log(1 + exp(x))` without overflow.
fn softplus<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn inverse_link<T: Real>(family: Family, eta: T) -> T {
    match family {
        Family::Logistic => sigmoid(eta),
        Family::Linear => eta,
        Family::Poisson => eta.exp(),
    }
}

fn singular(design: &DesignMatrix<impl Real>, e: LinalgError) -> GlmError {
    match e {
        LinalgError::Singular { column } => GlmError::SingularDesign {
            column: design.names.get(column).cloned().unwrap_or_else(|| format!("#{column}")),
        },
        _ => GlmError::Domain("linear algebra failure"),
    }
}

fn check_response<T: Real>(design: &DesignMatrix<T>, y: &[T], family: Family) -> Result<(), GlmError> {
    if y.len() != design.n_rows() {
        return Err(GlmError::Length { what: "responses", rows: design.n_rows(), got: y.len() });
    }
    for (row, &v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(GlmError::InvalidResponse { row, reason: "non-finite" });
        }
        match family {
            Family::Logistic if v != T::zero() && v != T::one() => {
                return Err(GlmError::InvalidResponse { row, reason: "logistic response must be 0 or 1" })
            }
            Family::Poisson if v < T::zero() => {
                return Err(GlmError::InvalidResponse { row, reason: "poisson response must be non-negative" })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Weighted log-likelihood of `beta` (Gaussian family uses unit variance).
pub fn log_likelihood<T: Real>(family: Family, design: &DesignMatrix<T>, y: &[T], beta: &[T]) -> T {
    let eta = design.linear_predictor(beta);
    let half = T::of(0.5);
    eta.iter()
        .zip(y)
        .enumerate()
        .map(|(i, (&e, &yi))| {
            let w = design.weight(i);
            let term = match family {
                Family::Logistic => yi * e - softplus(e),
                Family::Poisson => yi * e - e.exp(),
                Family::Linear => -half * (yi - e) * (yi - e),
            };
            w * term
        })
        .sum()
}

/// Gradient of [`log_likelihood`] with respect to `beta`: `X' W (y - mu)`.
pub fn score<T: Real>(family: Family, design: &DesignMatrix<T>, y: &[T], beta: &[T]) -> Vec<T> {
    let p = design.n_cols();
    let mut g = vec![T::zero(); p];
    for i in 0..design.n_rows() {
        let row = design.row(i);
        let r = design.weight(i) * (y[i] - inverse_link(family, dot(row, beta)));
        for j in 0..p {
            g[j] = g[j] + r * row[j];
        }
    }
    g
}

/// Fisher information `X' W X` with working weights for `family` at `beta`.
fn information<T: Real>(family: Family, design: &DesignMatrix<T>, beta: &[T]) -> Matrix<T> {
    let p = design.n_cols();
    let mut info = Matrix::zeros(p, p);
    for i in 0..design.n_rows() {
        let row = design.row(i);
        let cw = design.weight(i);
        if cw == T::zero() {
            continue;
        }
        let w = match family {
            Family::Logistic => {
                let mu = sigmoid(dot(row, beta));
                cw * mu * (T::one() - mu)
            }
            Family::Poisson => cw * dot(row, beta).exp(),
            Family::Linear => cw,
        };
        for a in 0..p {
            let wa = w * row[a];
            for b in a..p {
                info[(a, b)] = info[(a, b)] + wa * row[b];
            }
        }
    }
    info.symmetrize_from_upper();
    info
}

/// Sandwich covariance `B^{-1} M B^{-1}` where `M` sums outer products of the
/// per-row (or per-cluster) score contributions `scale_i * x_i`.
pub fn sandwich<T: Real>(
    design: &DesignMatrix<T>,
    bread_inverse: &Matrix<T>,
    score_scale: &[T],
    clusters: Option<&[u64]>,
) -> Matrix<T> {
    let p = design.n_cols();
    let mut meat = Matrix::zeros(p, p);
    let mut add = |s: &[T]| {
        for a in 0..p {
            for b in a..p {
                meat[(a, b)] = meat[(a, b)] + s[a] * s[b];
            }
        }
    };
    match clusters {
        None => {
            for i in 0..design.n_rows() {
                let s: Vec<T> = design.row(i).iter().map(|&x| x * score_scale[i]).collect();
                add(&s);
            }
        }
        Some(ids) => {
            let mut order: Vec<usize> = (0..design.n_rows()).collect();
            order.sort_by_key(|&i| ids[i]);
            let mut start = 0;
            while start < order.len() {
                let id = ids[order[start]];
                let mut s = vec![T::zero(); p];
                let mut end = start;
                while end < order.len() && ids[order[end]] == id {
                    let i = order[end];
                    for (acc, &x) in s.iter_mut().zip(design.row(i)) {
                        *acc = *acc + x * score_scale[i];
                    }
                    end += 1;
                }
                add(&s);
                start = end;
            }
        }
    }
    meat.symmetrize_from_upper();
    let left = bread_inverse.matmul(&meat).expect("square");
    left.matmul(bread_inverse).expect("square")
}

fn sqrt_diag<T: Real>(m: &Matrix<T>) -> Vec<T> {
    m.diagonal().into_iter().map(|v| v.max(T::zero()).sqrt()).collect()
}

fn irls<T: Real>(family: Family, design: &DesignMatrix<T>, y: &[T], opts: &IrlsOptions) -> Result<GlmFit<T>, GlmError> {
    let p = design.n_cols();
    let mut beta = vec![T::zero(); p];
    if family == Family::Poisson {
        let (sw, swy) = (0..design.n_rows())
            .fold((T::zero(), T::zero()), |(a, b), i| (a + design.weight(i), b + design.weight(i) * y[i]));
        if let Some(j) = design.intercept_column() {
            beta[j] = (swy / sw).ln();
        }
    }
    let bound = T::of(opts.divergence_bound);
    let grad_tol = T::of(opts.gradient_tol);
    let dev_tol = T::of(opts.deviance_tol);
    let mut ll = log_likelihood(family, design, y, &beta);
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let g = score(family, design, y, &beta);
        let gmax = g.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if gmax < grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let info = information(family, design, &beta);
        let step = Cholesky::new(&info).map_err(|e| singular(design, e))?.solve(&g);
        let mut t = T::one();
        let mut candidate: Vec<T>;
        let mut new_ll;
        let mut halvings = 0;
        loop {
            candidate = beta.iter().zip(&step).map(|(&b, &s)| b + t * s).collect();
            new_ll = log_likelihood(family, design, y, &candidate);
            if new_ll.is_finite() && new_ll >= ll - T::of(1e-12) * ll.abs() || halvings >= 30 {
                break;
            }
            t = t * T::of(0.5);
            halvings += 1;
        }
        let change = (new_ll - ll).abs() / (ll.abs() + T::of(0.1));
        beta = candidate;
        ll = new_ll;
        if beta.iter().any(|b| b.abs() > bound) {
            separation = true;
            break;
        }
        if change < dev_tol {
            converged = true;
            break;
        }
    }
    if separation {
        log::warn!("{family:?} fit diverged (|coefficient| > {}); possible perfect separation", opts.divergence_bound);
    }
    let info = information(family, design, &beta);
    let covariance = match Cholesky::new(&info) {
        Ok(c) => c.inverse(),
        Err(_) if separation => Matrix::zeros(p, p),
        Err(e) => return Err(singular(design, e)),
    };
    Ok(GlmFit {
        family,
        names: design.names.clone(),
        model_se: sqrt_diag(&covariance),
        coefficients: beta,
        robust_se: None,
        covariance,
        robust_covariance: None,
        residual_sd: None,
        converged: converged && !separation,
        separation,
        iterations,
        log_likelihood: ll,
    })
}

fn weighted_mean_and_total<T: Real>(design: &DesignMatrix<T>, y: &[T]) -> (T, T) {
    let (sw, swy) = (0..design.n_rows())
        .fold((T::zero(), T::zero()), |(a, b), i| (a + design.weight(i), b + design.weight(i) * y[i]));
    (if sw > T::zero() { swy / sw } else { T::nan() }, sw)
}

/// Logistic regression by IRLS.
pub fn fit_logistic<T: Real>(design: &DesignMatrix<T>, y: &[T]) -> Result<GlmFit<T>, GlmError> {
    fit_logistic_with(design, y, &IrlsOptions::default())
}

pub fn fit_logistic_with<T: Real>(
    design: &DesignMatrix<T>,
    y: &[T],
    opts: &IrlsOptions,
) -> Result<GlmFit<T>, GlmError> {
    check_response(design, y, Family::Logistic)?;
    let (mean, total) = weighted_mean_and_total(design, y);
    if !(total > T::zero()) {
        return Err(GlmError::DegenerateResponse("all case weights are zero"));
    }
    if mean <= T::zero() || mean >= T::one() {
        return Err(GlmError::DegenerateResponse("binary response is constant"));
    }
    irls(Family::Logistic, design, y, opts)
}

/// Poisson regression (log link) with HC0 sandwich standard errors.
pub fn fit_poisson_robust<T: Real>(design: &DesignMatrix<T>, y: &[T]) -> Result<GlmFit<T>, GlmError> {
    fit_poisson_inner(design, y, None)
}

/// Poisson regression with cluster-robust sandwich standard errors.
pub fn fit_poisson_clustered<T: Real>(
    design: &DesignMatrix<T>,
    y: &[T],
    clusters: &[u64],
) -> Result<GlmFit<T>, GlmError> {
    if clusters.len() != design.n_rows() {
        return Err(GlmError::Length { what: "cluster ids", rows: design.n_rows(), got: clusters.len() });
    }
    fit_poisson_inner(design, y, Some(clusters))
}

fn fit_poisson_inner<T: Real>(
    design: &DesignMatrix<T>,
    y: &[T],
    clusters: Option<&[u64]>,
) -> Result<GlmFit<T>, GlmError> {
    check_response(design, y, Family::Poisson)?;
    let (mean, total) = weighted_mean_and_total(design, y);
    if !(total > T::zero()) {
        return Err(GlmError::DegenerateResponse("all case weights are zero"));
    }
    if !(mean > T::zero()) {
        return Err(GlmError::DegenerateResponse("poisson response is identically zero"));
    }
    let mut fit = irls(Family::Poisson, design, y, &IrlsOptions::default())?;
    let scale: Vec<T> =
        (0..design.n_rows()).map(|i| design.weight(i) * (y[i] - fit.linear_predictor(design.row(i)).exp())).collect();
    let robust = sandwich(design, &fit.covariance, &scale, clusters);
    fit.robust_se = Some(sqrt_diag(&robust));
    fit.robust_covariance = Some(robust);
    Ok(fit)
}

/// Weighted least squares via QR of `sqrt(W) X`.
pub fn fit_linear<T: Real>(design: &DesignMatrix<T>, y: &[T]) -> Result<GlmFit<T>, GlmError> {
    fit_linear_inner(design, y, None)
}

/// Weighted least squares with cluster-robust standard errors in `robust_se`.
pub fn fit_linear_clustered<T: Real>(
    design: &DesignMatrix<T>,
    y: &[T],
    clusters: &[u64],
) -> Result<GlmFit<T>, GlmError> {
    if clusters.len() != design.n_rows() {
        return Err(GlmError::Length { what: "cluster ids", rows: design.n_rows(), got: clusters.len() });
    }
    fit_linear_inner(design, y, Some(clusters))
}

fn fit_linear_inner<T: Real>(
    design: &DesignMatrix<T>,
    y: &[T],
    clusters: Option<&[u64]>,
) -> Result<GlmFit<T>, GlmError> {
    check_response(design, y, Family::Linear)?;
    let (n, p) = (design.n_rows(), design.n_cols());
    let mut data = Vec::with_capacity(n * p);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let sw = design.weight(i).sqrt();
        data.extend(design.row(i).iter().map(|&x| x * sw));
        ys.push(y[i] * sw);
    }
    let xw = Matrix::from_row_major(n, p, data).expect("shape");
    let (beta, r) = least_squares_qr(&xw, &ys).map_err(|e| singular(design, e))?;
    let xtx_inv = inverse_from_r(&r);
    let mut rss = T::zero();
    let mut sw = T::zero();
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let w = design.weight(i);
        let resid = y[i] - dot(design.row(i), &beta);
        rss = rss + w * resid * resid;
        sw = sw + w;
        scale.push(w * resid);
    }
    let dof = sw - T::of_usize(p);
    if !(dof > T::zero()) {
        return Err(GlmError::DegenerateResponse("no residual degrees of freedom"));
    }
    let sigma2 = rss / dof;
    let mut covariance = xtx_inv.clone();
    covariance.scale_in_place(sigma2);
    let ml_var = rss / sw;
    let two_pi = T::of(std::f64::consts::TAU);
    let log_likelihood =
        if ml_var > T::zero() { -T::of(0.5) * sw * ((two_pi * ml_var).ln() + T::one()) } else { T::infinity() };
    let (robust_se, robust_covariance) = match clusters {
        Some(ids) => {
            let rc = sandwich(design, &xtx_inv, &scale, Some(ids));
            (Some(sqrt_diag(&rc)), Some(rc))
        }
        None => (None, None),
    };
    Ok(GlmFit {
        family: Family::Linear,
        names: design.names.clone(),
        model_se: sqrt_diag(&covariance),
        coefficients: beta,
        robust_se,
        covariance,
        robust_covariance,
        residual_sd: Some(sigma2.sqrt()),
        converged: true,
        separation: false,
        iterations: 1,
        log_likelihood,
    })
}

/// Normal density.
pub fn gaussian_density<T: Real>(value: T, mean: T, sd: T) -> Result<T, GlmError> {
    if !(sd > T::zero()) || !sd.is_finite() {
        return Err(GlmError::Domain("standard deviation must be positive"));
    }
    let z = (value - mean) / sd;
    let norm = T::one() / (sd * T::of(std::f64::consts::TAU).sqrt());
    Ok(norm * (-T::of(0.5) * z * z).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: &[Vec<f64>], names: &[&str]) -> DesignMatrix<f64> {
        DesignMatrix::from_rows(rows, names.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn logistic_intercept_only_is_logit_of_mean() {
        let y = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let d = design(&vec![vec![1.0]; y.len()], &["(intercept)"]);
        let fit = fit_logistic(&d, &y).unwrap();
        let p: f64 = 0.3;
        assert!((fit.coefficients[0] - (p / (1.0 - p)).ln()).abs() < 1e-8);
        assert!(fit.converged);
    }

    #[test]
    fn logistic_constant_response_is_degenerate() {
        let d = design(&vec![vec![1.0, 0.5]; 4], &["(intercept)", "x"]);
        assert!(matches!(fit_logistic(&d, &[1.0; 4]), Err(GlmError::DegenerateResponse(_))));
    }

    #[test]
    fn logistic_separation_is_flagged() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        let fit = fit_logistic(&design(&rows, &["(intercept)", "x"]), &y).unwrap();
        assert!(fit.separation);
        assert!(!fit.converged);
    }

    #[test]
    fn poisson_all_zero_is_degenerate() {
        let d = design(&vec![vec![1.0]; 3], &["(intercept)"]);
        assert!(matches!(fit_poisson_robust(&d, &[0.0; 3]), Err(GlmError::DegenerateResponse(_))));
    }

    #[test]
    fn poisson_intercept_only_uses_weighted_mean() {
        let d = design(&vec![vec![1.0]; 4], &["(intercept)"]).with_weights(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = [1.0, 0.0, 1.0, 0.0];
        let fit = fit_poisson_robust(&d, &y).unwrap();
        assert!((fit.coefficients[0] - (4.0f64 / 10.0).ln()).abs() < 1e-10);
    }

    #[test]
    fn linear_exact_fit_and_duplicate_column() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| 2.0 * i as f64).collect();
        let fit = fit_linear(&design(&rows, &["(intercept)", "x"]), &y).unwrap();
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.residual_sd.unwrap() < 1e-12);

        let dup: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64, i as f64]).collect();
        let err = fit_linear(&design(&dup, &["(intercept)", "x", "x_copy"]), &y).unwrap_err();
        assert_eq!(err, GlmError::SingularDesign { column: "x_copy".into() });
    }

    #[test]
    fn gaussian_density_values() {
        assert!((gaussian_density(0.0f64, 0.0, 1.0).unwrap() - 0.398_942_280_4).abs() < 1e-10);
        let s = 0.7f64;
        assert!(
            (gaussian_density(1.3f64, 1.3, s).unwrap() - 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt())).abs() < 1e-14
        );
        assert!(gaussian_density(0.0, 0.0, 0.0).is_err());
        assert!(gaussian_density(0.0f32, 0.0, -1.0).is_err());
    }

    #[test]
    fn negative_weight_rejected() {
        let d = design(&vec![vec![1.0]; 2], &["(intercept)"]);
        assert_eq!(d.with_weights(vec![1.0, -1.0]).unwrap_err(), GlmError::BadWeight { row: 1 });
    }

    #[test]
    fn logistic_fits_in_f32() {
        let rows: Vec<Vec<f32>> = (0..40).map(|i| vec![1.0, (i % 5) as f32]).collect();
        let y: Vec<f32> = (0..40).map(|i| if (i * 7) % 3 == 0 { 1.0 } else { 0.0 }).collect();
        let d = DesignMatrix::from_rows(&rows, vec!["(intercept)".into(), "x".into()]).unwrap();
        let fit = fit_logistic(&d, &y).unwrap();
        assert!(fit.coefficients.iter().all(|c| c.is_finite()));
    }
}
