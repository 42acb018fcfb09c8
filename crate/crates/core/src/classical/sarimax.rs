//! SARIMAX estimated by conditional sum of squares.
//!
//! The model is regression with multiplicative seasonal ARMA errors on the
//! differenced scale:
//!
//! ```text
//! w_t = (1 - B)^d (1 - B^s)^D y_t          (same differencing for each exog column)
//! z_t = w_t - beta . xw_t - c              (c only when d + D = 0)
//! phi(B) Phi(B^s) z_t = theta(B) Theta(B^s) e_t
//! ```
//!
//! Residuals `e_t` are computed recursively with pre-sample residuals set to
//! zero, and the coefficients minimize their sum of squares with a
//! Nelder-Mead simplex started from zero.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::simplex::{self, SimplexOptions};
use crate::{Error, Result};

/// Roots whose modulus is within this distance of 1 are flagged.
const UNIT_ROOT_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SarimaxOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    #[serde(rename = "P")]
    pub seasonal_p: usize,
    #[serde(rename = "D")]
    pub seasonal_d: usize,
    #[serde(rename = "Q")]
    pub seasonal_q: usize,
    pub s: usize,
}

impl SarimaxOrder {
    /// `(p, d, q)(P, D, Q, s)`.
    pub const fn new(pdq: (usize, usize, usize), seasonal: (usize, usize, usize, usize)) -> Self {
        Self {
            p: pdq.0,
            d: pdq.1,
            q: pdq.2,
            seasonal_p: seasonal.0,
            seasonal_d: seasonal.1,
            seasonal_q: seasonal.2,
            s: seasonal.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 {
            return Err(Error::InvalidArgument("season length must be >= 1".into()));
        }
        if self.seasonal_p + self.seasonal_d + self.seasonal_q > 0 && self.s < 2 {
            return Err(Error::InvalidArgument(
                "seasonal terms need a season length of at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn has_intercept(&self) -> bool {
        self.d + self.seasonal_d == 0
    }

    fn ar_lags(&self) -> usize {
        self.p + self.seasonal_p * self.s
    }

    fn ma_lags(&self) -> usize {
        self.q + self.seasonal_q * self.s
    }

    fn diff_lags(&self) -> usize {
        self.d + self.seasonal_d * self.s
    }

    fn n_arma(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    /// Smallest modulus among the roots of the full AR polynomial, if it has any.
    pub min_ar_root_modulus: Option<f64>,
    pub near_unit_root: bool,
    pub n_effective: usize,
}

/// Values from the end of the training sample that seed the forecast recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTail {
    /// Last `d + D*s` undifferenced observations.
    pub levels: Vec<f64>,
    /// Last `d + D*s` exogenous rows.
    pub exog: Vec<Vec<f64>>,
    /// Last `p + P*s` values of the regression-adjusted differenced series.
    pub adjusted: Vec<f64>,
    /// Last `q + Q*s` residuals.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaxModel {
    pub order: SarimaxOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sar: Vec<f64>,
    pub sma: Vec<f64>,
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub sigma2: f64,
    pub training_tail: TrainingTail,
    pub diagnostics: FitDiagnostics,
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `(1 - B)^d (1 - B^s)^D` as coefficients of `B^0 .. B^(d + D*s)`.
fn differencing_polynomial(order: &SarimaxOrder) -> Vec<f64> {
    let mut poly = vec![1.0];
    for _ in 0..order.seasonal_d {
        let mut f = vec![0.0; order.s + 1];
        f[0] = 1.0;
        f[order.s] = -1.0;
        poly = poly_mul(&poly, &f);
    }
    for _ in 0..order.d {
        poly = poly_mul(&poly, &[1.0, -1.0]);
    }
    poly
}

/// Coefficients of the full lag polynomials, as sparse `(lag, coef)` lists:
/// AR such that `z_t = sum a_k z_(t-k) + ...`, MA such that `... + sum m_k e_(t-k)`.
struct Expanded {
    ar: Vec<(usize, f64)>,
    ma: Vec<(usize, f64)>,
    ar_poly: Vec<f64>,
}

fn expand(order: &SarimaxOrder, ar: &[f64], ma: &[f64], sar: &[f64], sma: &[f64]) -> Expanded {
    let s = order.s;
    let mut phi = vec![1.0];
    phi.extend(ar.iter().map(|c| -c));
    let mut seasonal_phi = vec![0.0; sar.len() * s + 1];
    seasonal_phi[0] = 1.0;
    for (j, c) in sar.iter().enumerate() {
        seasonal_phi[(j + 1) * s] = -c;
    }
    let ar_poly = poly_mul(&phi, &seasonal_phi);

    let mut theta = vec![1.0];
    theta.extend_from_slice(ma);
    let mut seasonal_theta = vec![0.0; sma.len() * s + 1];
    seasonal_theta[0] = 1.0;
    for (j, c) in sma.iter().enumerate() {
        seasonal_theta[(j + 1) * s] = *c;
    }
    let ma_poly = poly_mul(&theta, &seasonal_theta);

    Expanded {
        ar: (1..ar_poly.len())
            .filter(|&k| ar_poly[k] != 0.0)
            .map(|k| (k, -ar_poly[k]))
            .collect(),
        ma: (1..ma_poly.len())
            .filter(|&k| ma_poly[k] != 0.0)
            .map(|k| (k, ma_poly[k]))
            .collect(),
        ar_poly,
    }
}

/// Unpacked view of the optimizer's parameter vector.
struct Params<'a> {
    ar: &'a [f64],
    ma: &'a [f64],
    sar: &'a [f64],
    sma: &'a [f64],
    beta: &'a [f64],
    intercept: f64,
}

fn unpack<'a>(order: &SarimaxOrder, n_exog: usize, theta: &'a [f64]) -> Params<'a> {
    let (ar, rest) = theta.split_at(order.p);
    let (ma, rest) = rest.split_at(order.q);
    let (sar, rest) = rest.split_at(order.seasonal_p);
    let (sma, rest) = rest.split_at(order.seasonal_q);
    let (beta, rest) = rest.split_at(n_exog);
    Params {
        ar,
        ma,
        sar,
        sma,
        beta,
        intercept: rest.first().copied().unwrap_or(0.0),
    }
}

fn adjusted_series(w: &[f64], xw: &[Vec<f64>], beta: &[f64], intercept: f64) -> Vec<f64> {
    let mut z: Vec<f64> = w.iter().map(|v| v - intercept).collect();
    for (col, b) in xw.iter().zip(beta) {
        for (zi, x) in z.iter_mut().zip(col) {
            *zi -= b * x;
        }
    }
    z
}

/// Residuals of the ARMA recursion; entries before the largest AR lag stay zero.
fn css_residuals(z: &[f64], exp: &Expanded, start: usize) -> Vec<f64> {
    let mut e = vec![0.0; z.len()];
    for t in start..z.len() {
        let mut pred = 0.0;
        for &(k, a) in &exp.ar {
            pred += a * z[t - k];
        }
        for &(k, m) in &exp.ma {
            if k <= t {
                pred += m * e[t - k];
            }
        }
        e[t] = z[t] - pred;
    }
    e
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    libm::sqrt(xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64)
}

/// Roots of the characteristic polynomial `l^r - a_1 l^(r-1) - ... - a_r`,
/// i.e. reciprocals of the AR polynomial's roots (Durand-Kerner iteration).
fn inverse_ar_roots(ar_poly: &[f64]) -> Vec<Complex64> {
    let degree = match ar_poly.iter().rposition(|&c| c != 0.0) {
        Some(r) if r > 0 => r,
        _ => return Vec::new(),
    };
    // Monic characteristic polynomial, highest power first: coefficients of the AR
    // polynomial read in order are exactly those of l^r, l^(r-1), ..., l^0.
    let coeffs = &ar_poly[..=degree];
    let eval = |x: Complex64| coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree).map(|i| seed.powu(i as u32)).collect();
    for _ in 0..1000 {
        let mut delta: f64 = 0.0;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-12, 0.0);
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-13 {
            break;
        }
    }
    roots
}

/// Fit by conditional sum of squares. `exog` holds one column per regressor,
/// each as long as `endog`.
pub fn sarimax_fit(endog: &[f64], exog: &[Vec<f64>], order: SarimaxOrder) -> Result<SarimaxModel> {
    order.validate()?;
    if let Some(col) = exog.iter().find(|c| c.len() != endog.len()) {
        return Err(Error::LengthMismatch {
            expected: endog.len(),
            actual: col.len(),
        });
    }
    if endog.iter().chain(exog.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in SARIMAX input".into()));
    }
    let (w, _) = super::difference(endog, order.d, order.seasonal_d, order.s)?;
    let xw = exog
        .iter()
        .map(|c| super::difference(c, order.d, order.seasonal_d, order.s).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;

    let n_exog = exog.len();
    let n_params = order.n_arma() + n_exog + order.has_intercept() as usize;
    let start = order.ar_lags();
    if w.len() <= 10 * n_params.max(1) || w.len() <= start {
        return Err(Error::TooShort {
            needed: (10 * n_params.max(1)).max(start),
            actual: w.len(),
        });
    }
    let n_eff = w.len() - start;

    let objective = |theta: &[f64]| {
        let p = unpack(&order, n_exog, theta);
        let exp = expand(&order, p.ar, p.ma, p.sar, p.sma);
        let z = adjusted_series(&w, &xw, p.beta, p.intercept);
        let e = css_residuals(&z, &exp, start);
        e[start..].iter().map(|v| v * v).sum::<f64>() / n_eff as f64
    };

    let w_scale = match std_dev(&w) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let mut steps = vec![0.1; order.n_arma()];
    for col in &xw {
        let sx = std_dev(col);
        steps.push(if sx > 0.0 { 0.1 * w_scale / sx } else { 0.1 });
    }
    if order.has_intercept() {
        steps.push(0.1 * w_scale);
    }
    let result = simplex::minimize(objective, &vec![0.0; n_params], &steps, &SimplexOptions::default());

    let p = unpack(&order, n_exog, &result.x);
    let exp = expand(&order, p.ar, p.ma, p.sar, p.sma);
    let z = adjusted_series(&w, &xw, p.beta, p.intercept);
    let e = css_residuals(&z, &exp, start);
    let sse: f64 = e[start..].iter().map(|v| v * v).sum();

    let roots = inverse_ar_roots(&exp.ar_poly);
    let min_ar_root_modulus = roots
        .iter()
        .map(|r| r.norm())
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.max(m))))
        .map(|largest_inverse| 1.0 / largest_inverse);
    let near_unit_root = roots
        .iter()
        .any(|r| r.norm() > 0.0 && libm::fabs(1.0 / r.norm() - 1.0) < UNIT_ROOT_MARGIN);

    let m = order.diff_lags();
    let tail = |v: &[f64], len: usize| v[v.len() - len.min(v.len())..].to_vec();
    let n = endog.len();
    Ok(SarimaxModel {
        order,
        ar: p.ar.to_vec(),
        ma: p.ma.to_vec(),
        sar: p.sar.to_vec(),
        sma: p.sma.to_vec(),
        beta: p.beta.to_vec(),
        intercept: p.intercept,
        sigma2: (sse / n_eff as f64).max(f64::MIN_POSITIVE),
        training_tail: TrainingTail {
            levels: tail(endog, m),
            exog: (n - m..n).map(|t| exog.iter().map(|c| c[t]).collect()).collect(),
            adjusted: tail(&z, order.ar_lags()),
            residuals: tail(&e, order.ma_lags()),
        },
        diagnostics: FitDiagnostics {
            converged: result.converged,
            iterations: result.iterations,
            objective: result.value,
            min_ar_root_modulus,
            near_unit_root,
            n_effective: n_eff,
        },
    })
}

/// Iterate the one-step recursion `steps` times with future shocks at zero,
/// then undo the differencing. `exog_future` holds one row per step.
pub fn sarimax_forecast(model: &SarimaxModel, steps: usize, exog_future: &[Vec<f64>]) -> Result<Vec<f64>> {
    let order = &model.order;
    let n_exog = model.beta.len();
    if n_exog > 0 && exog_future.len() < steps {
        return Err(Error::MissingExog(steps));
    }
    if let Some(row) = exog_future.iter().take(steps).find(|r| r.len() != n_exog) {
        return Err(Error::Shape(format!(
            "exogenous row has {} columns, model has {n_exog}",
            row.len()
        )));
    }
    let tail = &model.training_tail;
    let m = order.diff_lags();
    if tail.levels.len() != m || tail.adjusted.len() != order.ar_lags() || tail.residuals.len() != order.ma_lags() {
        return Err(Error::Shape("training tail does not match the model order".into()));
    }
    let diff_poly = differencing_polynomial(order);
    let exp = expand(order, &model.ar, &model.ma, &model.sar, &model.sma);

    // Differenced future regressors: the same filter over [tail rows ++ future rows].
    let exog_rows: Vec<&[f64]> = tail
        .exog
        .iter()
        .map(Vec::as_slice)
        .chain(exog_future.iter().take(steps).map(Vec::as_slice))
        .collect();
    let regression = |h: usize| -> f64 {
        if n_exog == 0 {
            return model.intercept;
        }
        let t = m + h;
        let mut acc = model.intercept;
        for (j, b) in model.beta.iter().enumerate() {
            let xw: f64 = diff_poly.iter().enumerate().map(|(k, c)| c * exog_rows[t - k][j]).sum();
            acc += b * xw;
        }
        acc
    };

    let r_ar = order.ar_lags();
    let r_ma = order.ma_lags();
    let mut z = tail.adjusted.clone();
    let mut e = tail.residuals.clone();
    let mut levels = tail.levels.clone();
    let mut out = Vec::with_capacity(steps);
    for h in 0..steps {
        let mut zh = 0.0;
        for &(k, a) in &exp.ar {
            zh += a * z[r_ar + h - k];
        }
        for &(k, c) in &exp.ma {
            if k <= h {
                continue; // future shock, zero in expectation
            }
            zh += c * e[r_ma + h - k];
        }
        z.push(zh);
        e.push(0.0);
        let w = zh + regression(h);
        // y_t = w_t - sum_{k>=1} c_k y_(t-k)
        let t = m + h;
        let y = w - diff_poly
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * levels[t - k])
            .sum::<f64>();
        levels.push(y);
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn manual(order: SarimaxOrder, ar: Vec<f64>, intercept: f64, tail: TrainingTail) -> SarimaxModel {
        SarimaxModel {
            order,
            ar,
            ma: Vec::new(),
            sar: Vec::new(),
            sma: Vec::new(),
            beta: Vec::new(),
            intercept,
            sigma2: 1.0,
            training_tail: tail,
            diagnostics: FitDiagnostics {
                converged: true,
                iterations: 0,
                objective: 0.0,
                min_ar_root_modulus: None,
                near_unit_root: false,
                n_effective: 0,
            },
        }
    }

    #[test]
    fn order_validation() {
        assert!(SarimaxOrder::new((1, 0, 0), (0, 0, 0, 0)).validate().is_err());
        assert!(SarimaxOrder::new((1, 0, 0), (1, 0, 0, 1)).validate().is_err());
        assert!(SarimaxOrder::new((1, 1, 1), (1, 1, 0, 24)).validate().is_ok());
    }

    #[test]
    fn expansion_of_multiplicative_ar() {
        let order = SarimaxOrder::new((1, 0, 1), (1, 0, 1, 4));
        let exp = expand(&order, &[0.5], &[0.3], &[0.2], &[0.4]);
        // (1 - .5B)(1 - .2B^4) = 1 - .5B - .2B^4 + .1B^5
        assert_eq!(exp.ar, vec![(1, 0.5), (4, 0.2), (5, -0.1)]);
        // (1 + .3B)(1 + .4B^4) = 1 + .3B + .4B^4 + .12B^5
        assert_eq!(exp.ma.len(), 3);
        assert!((exp.ma[2].1 - 0.12).abs() < 1e-15);
    }

    #[test]
    fn ar1_closed_form_forecast() {
        let order = SarimaxOrder::new((1, 0, 0), (0, 0, 0, 1));
        let model = manual(
            order,
            vec![0.5],
            0.0,
            TrainingTail {
                levels: vec![],
                exog: vec![],
                adjusted: vec![8.0],
                residuals: vec![],
            },
        );
        assert_eq!(sarimax_forecast(&model, 3, &[]).unwrap(), vec![4.0, 2.0, 1.0]);
    }

    #[test]
    fn zero_coefficients_forecast_the_intercept() {
        let order = SarimaxOrder::new((0, 0, 0), (0, 0, 0, 1));
        let model = manual(
            order,
            vec![],
            7.5,
            TrainingTail {
                levels: vec![],
                exog: vec![],
                adjusted: vec![],
                residuals: vec![],
            },
        );
        assert_eq!(sarimax_forecast(&model, 4, &[]).unwrap(), vec![7.5; 4]);
    }

    #[test]
    fn integrated_model_continues_last_level() {
        let order = SarimaxOrder::new((0, 1, 0), (0, 0, 0, 1));
        let model = manual(
            order,
            vec![],
            0.0,
            TrainingTail {
                levels: vec![42.0],
                exog: vec![vec![]],
                adjusted: vec![],
                residuals: vec![],
            },
        );
        assert_eq!(sarimax_forecast(&model, 3, &[]).unwrap(), vec![42.0; 3]);
    }

    #[test]
    fn seasonal_difference_forecast_repeats_last_season() {
        let order = SarimaxOrder::new((0, 0, 0), (0, 1, 0, 4));
        let model = manual(
            order,
            vec![],
            0.0,
            TrainingTail {
                levels: vec![1.0, 2.0, 3.0, 4.0],
                exog: vec![vec![]; 4],
                adjusted: vec![],
                residuals: vec![],
            },
        );
        assert_eq!(
            sarimax_forecast(&model, 6, &[]).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0, 1.0, 2.0]
        );
    }

    #[test]
    fn ar1_estimate_is_consistent() {
        let eps = noise(5000, 7);
        let mut y = vec![0.0; 5000];
        for t in 1..5000 {
            y[t] = 0.7 * y[t - 1] + eps[t];
        }
        let model = sarimax_fit(&y, &[], SarimaxOrder::new((1, 0, 0), (0, 0, 0, 1))).unwrap();
        assert!((0.6..=0.8).contains(&model.ar[0]), "phi = {}", model.ar[0]);
        assert!(model.diagnostics.converged);
        assert!(!model.diagnostics.near_unit_root);
        let root = model.diagnostics.min_ar_root_modulus.unwrap();
        assert!((root - 1.0 / model.ar[0]).abs() < 1e-6);
        assert!((model.sigma2 - 1.0).abs() < 0.1);
    }

    #[test]
    fn white_noise_intercept_matches_sample_mean() {
        let y: Vec<f64> = noise(2000, 11).into_iter().map(|v| 3.0 + v).collect();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let model = sarimax_fit(&y, &[], SarimaxOrder::new((0, 0, 0), (0, 0, 0, 1))).unwrap();
        assert!((model.intercept - mean).abs() < 2.0 / (2000f64).sqrt());
    }

    #[test]
    fn perfect_regressor() {
        let y: Vec<f64> = noise(500, 3).into_iter().map(|v| 10.0 + 4.0 * v).collect();
        let model = sarimax_fit(
            &y,
            core::slice::from_ref(&y),
            SarimaxOrder::new((0, 0, 0), (0, 0, 0, 1)),
        )
        .unwrap();
        assert!((model.beta[0] - 1.0).abs() < 1e-3, "beta = {}", model.beta[0]);
        assert!(model.sigma2 < 1e-4, "sigma2 = {}", model.sigma2);
        assert!(model.sigma2 > 0.0);
    }

    #[test]
    fn near_unit_root_is_flagged() {
        // A random walk fitted without differencing.
        let eps = noise(3000, 5);
        let y: Vec<f64> = eps
            .iter()
            .scan(0.0, |acc, e| {
                *acc += e;
                Some(*acc)
            })
            .collect();
        let model = sarimax_fit(&y, &[], SarimaxOrder::new((1, 0, 0), (0, 0, 0, 1))).unwrap();
        assert!(model.ar[0] > 0.99);
        assert!(model.diagnostics.min_ar_root_modulus.unwrap() < 1.01);
    }

    #[test]
    fn seasonal_roots() {
        // (1 - 0.5B)(1 - 0.9B^4): inverse roots 0.5 and the four 4th roots of 0.9.
        let exp = expand(&SarimaxOrder::new((1, 0, 0), (1, 0, 0, 4)), &[0.5], &[], &[0.9], &[]);
        let mut moduli: Vec<f64> = inverse_ar_roots(&exp.ar_poly).iter().map(|r| r.norm()).collect();
        moduli.sort_by(f64::total_cmp);
        assert!((moduli[0] - 0.5).abs() < 1e-9);
        for m in &moduli[1..] {
            assert!((m - 0.9f64.powf(0.25)).abs() < 1e-9);
        }
    }

    #[test]
    fn short_series_is_rejected() {
        let y = vec![1.0; 30];
        assert!(matches!(
            sarimax_fit(&y, &[], SarimaxOrder::new((1, 1, 1), (1, 1, 0, 24))),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn forecast_requires_exog() {
        let y: Vec<f64> = noise(300, 1);
        let x: Vec<f64> = (0..300).map(|i| (i % 24) as f64).collect();
        let model = sarimax_fit(&y, &[x], SarimaxOrder::new((1, 0, 0), (0, 0, 0, 1))).unwrap();
        assert_eq!(sarimax_forecast(&model, 5, &[]), Err(Error::MissingExog(5)));
        assert_eq!(sarimax_forecast(&model, 2, &[vec![1.0], vec![2.0]]).unwrap().len(), 2);
    }
}
