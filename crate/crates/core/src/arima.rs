//! ARIMA(p, d, q) estimation by conditional sum of squares and forecasting.
//!
//! Sign convention: `y_t = c + sum(phi_i y_{t-i}) + e_t + sum(theta_j e_{t-j})`
//! on the `d`-times differenced series. Pre-sample observations and
//! residuals are zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{Interval, TrafficSeries};

const MAX_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 40;
const RELATIVE_TOLERANCE: f64 = 1e-10;
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArimaError {
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("series too short: need {needed} samples, have {actual}")]
    SeriesTooShort { needed: usize, actual: usize },
    #[error("fitted AR polynomial has a root on or inside the unit circle")]
    NonStationaryFit,
    #[error("normal equations are singular")]
    SingularNormalEquations,
    #[error("no order in the grid produced a viable fit")]
    NoViableOrder,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self, ArimaError> {
        let order = Self { p, d, q };
        order.validate()?;
        Ok(order)
    }

    pub fn validate(&self) -> Result<(), ArimaError> {
        if self.d > 2 {
            return Err(ArimaError::InvalidOrder(format!(
                "d = {} exceeds 2",
                self.d
            )));
        }
        if self.p + self.q == 0 && self.d == 0 {
            return Err(ArimaError::InvalidOrder(
                "p + q must be at least 1 unless the model is a random walk".into(),
            ));
        }
        Ok(())
    }

    /// Number of estimated coefficients including the intercept.
    pub fn n_params(&self) -> usize {
        self.p + self.q + 1
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

/// State needed to continue the recursion past the end of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaTail {
    /// Last `p` values of the differenced series, oldest first.
    pub differenced: Vec<f64>,
    /// Last `q` residuals, oldest first.
    pub residuals: Vec<f64>,
    /// Last value of the series differenced `k` times, for `k` in `0..d`.
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub intercept: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub tail: ArimaTail,
    pub interval: Interval,
    /// Number of level observations the model was fitted on; also the
    /// length of history used when re-anchoring.
    pub n_obs: usize,
}

/// Applies the first-difference operator `d` times.
pub fn difference(values: &[f64], d: usize) -> Result<Vec<f64>, ArimaError> {
    if values.len() <= d {
        return Err(ArimaError::SeriesTooShort {
            needed: d + 1,
            actual: values.len(),
        });
    }
    let mut out = values.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Inverse of [`difference`]: `initial` holds the first `d` values of the
/// original series.
pub fn integrate(diffs: &[f64], d: usize, initial: &[f64]) -> Result<Vec<f64>, ArimaError> {
    if initial.len() != d {
        return Err(ArimaError::InvalidOrder(format!(
            "integration of order {d} needs {d} initial values, got {}",
            initial.len()
        )));
    }
    if d == 0 {
        return Ok(diffs.to_vec());
    }
    let inner_initial = if d > 1 {
        difference(initial, 1)?
    } else {
        Vec::new()
    };
    let once = integrate(diffs, d - 1, &inner_initial)?;
    let mut out = Vec::with_capacity(once.len() + 1);
    let mut acc = initial[0];
    out.push(acc);
    for v in once {
        acc += v;
        out.push(acc);
    }
    Ok(out)
}

/// One-step residuals of the ARMA recursion for `t >= p` (zero-based).
pub fn css_residuals(
    order: ArimaOrder,
    intercept: f64,
    ar: &[f64],
    ma: &[f64],
    y: &[f64],
) -> Vec<f64> {
    let (p, q) = (order.p, order.q);
    debug_assert_eq!(ar.len(), p);
    debug_assert_eq!(ma.len(), q);
    if y.len() <= p {
        return Vec::new();
    }
    // residuals indexed by absolute time; pre-sample entries stay zero
    let mut eps = vec![0.0; y.len()];
    for t in p..y.len() {
        let mut e = y[t] - intercept;
        for (i, phi) in ar.iter().enumerate() {
            e -= phi * y[t - 1 - i];
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                e -= theta * eps[t - 1 - j];
            }
        }
        eps[t] = e;
    }
    eps.split_off(p)
}

/// True when all roots of `1 - sum(phi_i z^i)` lie outside the unit circle,
/// checked by stepping the coefficients down to reflection coefficients.
pub fn is_stationary(ar: &[f64]) -> bool {
    let mut a = ar.to_vec();
    for k in (1..=a.len()).rev() {
        let kappa = a[k - 1];
        if !kappa.is_finite() || kappa.abs() >= 1.0 {
            return false;
        }
        let denom = 1.0 - kappa * kappa;
        let prev: Vec<f64> = (0..k - 1)
            .map(|i| (a[i] + kappa * a[k - 2 - i]) / denom)
            .collect();
        a = prev;
    }
    true
}

/// True when all roots of `1 + sum(theta_i z^i)` lie outside the circle of
/// radius `1 + INVERTIBILITY_MARGIN`. Over-differenced fits drive the MA part
/// onto the unit circle, where CSS residuals stop being meaningful.
pub fn is_invertible(ma: &[f64]) -> bool {
    let r = 1.0 + INVERTIBILITY_MARGIN;
    let scaled: Vec<f64> = ma
        .iter()
        .enumerate()
        .map(|(i, t)| -t * r.powi(i as i32 + 1))
        .collect();
    is_stationary(&scaled)
}

const INVERTIBILITY_MARGIN: f64 = 1e-3;

fn rss(residuals: &[f64]) -> f64 {
    residuals.iter().map(|e| e * e).sum()
}

/// Minimum-norm least squares `design * beta ~ target` via SVD, rejecting
/// rank-deficient designs.
fn least_squares(design: DMatrix<f64>, target: DVector<f64>) -> Result<DVector<f64>, ArimaError> {
    let svd = design.svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if !(max > 0.0) || !(min > RANK_TOLERANCE * max) || !min.is_finite() {
        return Err(ArimaError::SingularNormalEquations);
    }
    svd.solve(&target, 0.0)
        .map_err(|_| ArimaError::SingularNormalEquations)
}

struct Params<'a> {
    order: ArimaOrder,
    beta: &'a [f64],
}

impl Params<'_> {
    fn residuals(&self, y: &[f64]) -> Vec<f64> {
        let (p, q) = (self.order.p, self.order.q);
        css_residuals(
            self.order,
            self.beta[0],
            &self.beta[1..1 + p],
            &self.beta[1 + p..1 + p + q],
            y,
        )
    }
}

fn ar_least_squares(y: &[f64], p: usize) -> Result<DVector<f64>, ArimaError> {
    let rows = y.len() - p;
    let design = DMatrix::from_fn(rows, p + 1, |r, c| if c == 0 { 1.0 } else { y[r + p - c] });
    let target = DVector::from_iterator(rows, y[p..].iter().copied());
    least_squares(design, target)
}

/// Result of a fit together with the residual sum of squares after each
/// accepted Gauss-Newton step (first entry is the starting point).
#[derive(Debug, Clone)]
pub struct FitTrace {
    pub model: ArimaModel,
    pub rss_path: Vec<f64>,
}

pub fn fit(series: &TrafficSeries, order: ArimaOrder) -> Result<ArimaModel, ArimaError> {
    fit_values(series.counts(), order, series.interval())
}

pub fn fit_values(
    values: &[f64],
    order: ArimaOrder,
    interval: Interval,
) -> Result<ArimaModel, ArimaError> {
    fit_traced(values, order, interval).map(|t| t.model)
}

/// Conditional-sum-of-squares fit. `q = 0` is solved exactly by linear
/// least squares; otherwise damped Gauss-Newton with a central-difference
/// Jacobian, halving the step until the objective decreases.
pub fn fit_traced(
    values: &[f64],
    order: ArimaOrder,
    interval: Interval,
) -> Result<FitTrace, ArimaError> {
    order.validate()?;
    let needed = 10 * order.n_params() + order.d;
    if values.len() < needed {
        return Err(ArimaError::SeriesTooShort {
            needed,
            actual: values.len(),
        });
    }
    let y = difference(values, order.d)?;
    let (p, q) = (order.p, order.q);
    let k = order.n_params();

    let mut beta: Vec<f64> = vec![0.0; k];
    if p > 0 {
        let ls = ar_least_squares(&y, p)?;
        beta[..=p].copy_from_slice(ls.as_slice());
    } else {
        beta[0] = y.iter().sum::<f64>() / y.len() as f64;
    }
    let mut current = rss(&Params { order, beta: &beta }.residuals(&y));
    let mut rss_path = vec![current];

    if q > 0 {
        if !current.is_finite() {
            return Err(ArimaError::SingularNormalEquations);
        }
        for _ in 0..MAX_ITERATIONS {
            let e = Params { order, beta: &beta }.residuals(&y);
            let rows = e.len();
            let mut jac = DMatrix::zeros(rows, k);
            for j in 0..k {
                let h = 1e-6 * beta[j].abs().max(1.0);
                let mut plus = beta.clone();
                let mut minus = beta.clone();
                plus[j] += h;
                minus[j] -= h;
                let ep = Params { order, beta: &plus }.residuals(&y);
                let em = Params {
                    order,
                    beta: &minus,
                }
                .residuals(&y);
                for r in 0..rows {
                    jac[(r, j)] = (ep[r] - em[r]) / (2.0 * h);
                }
            }
            let target = DVector::from_iterator(rows, e.iter().map(|v| -v));
            let step = least_squares(jac, target)?;

            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let trial: Vec<f64> = beta
                    .iter()
                    .zip(step.iter())
                    .map(|(b, s)| b + scale * s)
                    .collect();
                let trial_rss = rss(&Params {
                    order,
                    beta: &trial,
                }
                .residuals(&y));
                if trial_rss.is_finite() && trial_rss < current {
                    accepted = Some((trial, trial_rss));
                    break;
                }
                scale *= 0.5;
            }
            let Some((next, next_rss)) = accepted else {
                break;
            };
            let rel = (current - next_rss) / current.max(f64::MIN_POSITIVE);
            beta = next;
            current = next_rss;
            rss_path.push(current);
            if rel < RELATIVE_TOLERANCE || current == 0.0 {
                break;
            }
        }
    }

    let ar = beta[1..1 + p].to_vec();
    let ma = beta[1 + p..].to_vec();
    if !is_stationary(&ar) {
        return Err(ArimaError::NonStationaryFit);
    }
    let residuals = css_residuals(order, beta[0], &ar, &ma, &y);
    let sigma2 = rss(&residuals) / residuals.len() as f64;
    let mut model = ArimaModel {
        order,
        intercept: beta[0],
        ar,
        ma,
        sigma2,
        tail: ArimaTail {
            differenced: vec![],
            residuals: vec![],
            levels: vec![],
        },
        interval,
        n_obs: values.len(),
    };
    model.tail = model.tail_for(values)?;
    Ok(FitTrace { model, rss_path })
}

/// Akaike criterion as used for order selection.
pub fn aic(n: usize, rss: f64, order: ArimaOrder) -> f64 {
    let n = n as f64;
    n * (rss / n).ln() + 2.0 * order.n_params() as f64
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub order: ArimaOrder,
    pub model: ArimaModel,
    pub aic: f64,
    /// Every order tried with its criterion, or `None` when the fit failed.
    pub candidates: Vec<(ArimaOrder, Option<f64>)>,
}

pub fn select_order(
    series: &TrafficSeries,
    max_p: usize,
    max_d: usize,
    max_q: usize,
) -> Result<ArimaOrder, ArimaError> {
    select_and_fit(series.counts(), max_p, max_d, max_q, series.interval()).map(|s| s.order)
}

/// Grid search by AIC over `p <= max_p`, `d <= max_d`, `q <= max_q`.
/// Ties go to the smaller `p + q`, then the smaller `d`.
pub fn select_and_fit(
    values: &[f64],
    max_p: usize,
    max_d: usize,
    max_q: usize,
    interval: Interval,
) -> Result<Selection, ArimaError> {
    if max_p > 3 || max_d > 2 || max_q > 3 {
        return Err(ArimaError::InvalidOrder(format!(
            "grid bounds ({max_p},{max_d},{max_q}) exceed (3,2,3)"
        )));
    }
    let mut best: Option<(ArimaModel, f64)> = None;
    let mut candidates = Vec::new();
    for d in 0..=max_d {
        for p in 0..=max_p {
            for q in 0..=max_q {
                let Ok(order) = ArimaOrder::new(p, d, q) else {
                    continue;
                };
                let fitted = fit_values(values, order, interval)
                    .ok()
                    .filter(|m| is_invertible(&m.ma));
                let score = fitted.and_then(|m| {
                    let n = values.len() - d - p;
                    let s = aic(n, m.sigma2 * n as f64, order);
                    s.is_finite().then_some((m, s))
                });
                candidates.push((order, score.as_ref().map(|(_, s)| *s)));
                let Some((model, score)) = score else {
                    continue;
                };
                let better = match &best {
                    None => true,
                    Some((b, bs)) => {
                        let key = |o: ArimaOrder| (o.p + o.q, o.d);
                        score < *bs || (score == *bs && key(order) < key(b.order))
                    }
                };
                if better {
                    best = Some((model, score));
                }
            }
        }
    }
    let (model, aic) = best.ok_or(ArimaError::NoViableOrder)?;
    Ok(Selection {
        order: model.order,
        model,
        aic,
        candidates,
    })
}

impl ArimaModel {
    pub fn validate(&self) -> Result<(), ArimaError> {
        self.order.validate()?;
        if self.ar.len() != self.order.p || self.ma.len() != self.order.q {
            return Err(ArimaError::InvalidModel(
                "coefficient count does not match order".into(),
            ));
        }
        if self.tail.differenced.len() != self.order.p
            || self.tail.residuals.len() != self.order.q
            || self.tail.levels.len() != self.order.d
        {
            return Err(ArimaError::InvalidModel("tail does not match order".into()));
        }
        let all = std::iter::once(self.intercept)
            .chain(self.ar.iter().copied())
            .chain(self.ma.iter().copied())
            .chain(self.tail.differenced.iter().copied())
            .chain(self.tail.residuals.iter().copied())
            .chain(self.tail.levels.iter().copied());
        if all.into_iter().any(|v| !v.is_finite()) || !(self.sigma2 >= 0.0) {
            return Err(ArimaError::InvalidModel(
                "non-finite coefficient or negative variance".into(),
            ));
        }
        Ok(())
    }

    fn tail_for(&self, values: &[f64]) -> Result<ArimaTail, ArimaError> {
        let (p, d, q) = (self.order.p, self.order.d, self.order.q);
        if values.len() <= d + p {
            return Err(ArimaError::SeriesTooShort {
                needed: d + p + 1,
                actual: values.len(),
            });
        }
        let mut levels = Vec::with_capacity(d);
        let mut current = values.to_vec();
        for _ in 0..d {
            levels.push(*current.last().expect("non-empty"));
            current = difference(&current, 1)?;
        }
        let y = current;
        let residuals = css_residuals(self.order, self.intercept, &self.ar, &self.ma, &y);
        let mut res_tail = vec![0.0; q.saturating_sub(residuals.len())];
        res_tail.extend_from_slice(&residuals[residuals.len().saturating_sub(q)..]);
        Ok(ArimaTail {
            differenced: y[y.len() - p..].to_vec(),
            residuals: res_tail,
            levels,
        })
    }

    /// Same coefficients, recursion state recomputed from `values`.
    pub fn anchored(&self, values: &[f64]) -> Result<ArimaModel, ArimaError> {
        let mut next = self.clone();
        next.tail = self.tail_for(values)?;
        Ok(next)
    }

    /// `horizon` steps past the end of the anchored data, future shocks set
    /// to zero, integrated back to levels and clamped at zero.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        let (p, q, d) = (self.order.p, self.order.q, self.order.d);
        let mut hist = self.tail.differenced.clone();
        let mut shocks = self.tail.residuals.clone();
        let mut levels = self.tail.levels.clone();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let mut w = self.intercept;
            for i in 0..p {
                w += self.ar[i] * hist[hist.len() - 1 - i];
            }
            for j in 0..q {
                w += self.ma[j] * shocks[shocks.len() - 1 - j];
            }
            if p > 0 {
                hist.remove(0);
                hist.push(w);
            }
            if q > 0 {
                shocks.remove(0);
                shocks.push(0.0);
            }
            // integrate from the most differenced level outwards
            let mut v = w;
            for k in (0..d).rev() {
                levels[k] += v;
                v = levels[k];
            }
            out.push(v.max(0.0));
        }
        out
    }

    /// Long-run mean of the differenced process.
    pub fn implied_mean(&self) -> f64 {
        self.intercept / (1.0 - self.ar.iter().sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(order: ArimaOrder, c: f64, ar: Vec<f64>, ma: Vec<f64>, tail: ArimaTail) -> ArimaModel {
        ArimaModel {
            order,
            intercept: c,
            ar,
            ma,
            sigma2: 1.0,
            tail,
            interval: Interval::QuarterHour,
            n_obs: 100,
        }
    }

    #[test]
    fn differencing_examples() {
        assert_eq!(
            difference(&[1.0, 3.0, 6.0, 10.0], 1).unwrap(),
            vec![2.0, 3.0, 4.0]
        );
        assert_eq!(difference(&[1.0, 3.0], 0).unwrap(), vec![1.0, 3.0]);
        assert_eq!(
            difference(&[1.0, 3.0, 6.0, 10.0], 2).unwrap(),
            vec![1.0, 1.0]
        );
        assert!(difference(&[1.0], 1).is_err());
    }

    #[test]
    fn integrate_inverts_difference() {
        let s = [4.0, 9.0, 7.0, 12.0, 30.0, 2.0];
        for d in 0..=2 {
            let back = integrate(&difference(&s, d).unwrap(), d, &s[..d]).unwrap();
            assert_eq!(back, s.to_vec(), "d = {d}");
        }
    }

    #[test]
    fn order_validation() {
        assert!(ArimaOrder::new(0, 0, 0).is_err());
        assert!(ArimaOrder::new(0, 1, 0).is_ok());
        assert!(ArimaOrder::new(1, 3, 0).is_err());
    }

    #[test]
    fn exact_ar_recursion_has_zero_residuals() {
        let order = ArimaOrder::new(1, 0, 0).unwrap();
        assert_eq!(
            css_residuals(order, 0.0, &[0.5], &[], &[1.0, 0.5, 0.25]),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn zero_coefficients_leave_demeaned_data() {
        let order = ArimaOrder::new(1, 0, 1).unwrap();
        let y = [3.0, 5.0, 2.0, 8.0];
        assert_eq!(
            css_residuals(order, 2.0, &[0.0], &[0.0], &y),
            vec![3.0, 0.0, 6.0]
        );
    }

    #[test]
    fn ma1_unrolled_by_hand() {
        let order = ArimaOrder::new(0, 0, 1).unwrap();
        let (c, th) = (1.0, 0.4);
        let y = [2.0, -1.0, 0.5, 3.0, 1.5];
        let e0 = y[0] - c;
        let e1 = y[1] - c - th * e0;
        let e2 = y[2] - c - th * e1;
        let e3 = y[3] - c - th * e2;
        let e4 = y[4] - c - th * e3;
        assert_eq!(
            css_residuals(order, c, &[], &[th], &y),
            vec![e0, e1, e2, e3, e4]
        );
    }

    #[test]
    fn invertibility_boundaries() {
        assert!(is_invertible(&[]));
        assert!(is_invertible(&[0.5]));
        assert!(is_invertible(&[-0.99]));
        assert!(!is_invertible(&[-1.0]));
        assert!(!is_invertible(&[-0.9995]));
        // (1 - B)(1 - 0.9B)
        assert!(!is_invertible(&[-1.9, 0.9]));
        assert!(is_invertible(&[-1.2, 0.35]));
    }

    #[test]
    fn stationarity_boundaries() {
        assert!(is_stationary(&[]));
        assert!(is_stationary(&[0.7]));
        assert!(!is_stationary(&[1.0]));
        assert!(!is_stationary(&[-1.2]));
        assert!(is_stationary(&[0.5, 0.3]));
        assert!(!is_stationary(&[0.8, 0.3]));
        assert!(!is_stationary(&[0.2, -1.0]));
    }

    #[test]
    fn random_walk_forecast_is_flat() {
        let order = ArimaOrder::new(0, 1, 0).unwrap();
        let m = model(
            order,
            0.0,
            vec![],
            vec![],
            ArimaTail {
                differenced: vec![],
                residuals: vec![],
                levels: vec![42.0],
            },
        );
        assert_eq!(m.forecast(5), vec![42.0; 5]);
    }

    #[test]
    fn ar1_forecast_decays_geometrically() {
        let order = ArimaOrder::new(1, 0, 0).unwrap();
        let m = model(
            order,
            0.0,
            vec![0.5],
            vec![],
            ArimaTail {
                differenced: vec![8.0],
                residuals: vec![],
                levels: vec![],
            },
        );
        assert_eq!(m.forecast(4), vec![4.0, 2.0, 1.0, 0.5]);
    }

    #[test]
    fn ma1_forgets_after_one_step() {
        let order = ArimaOrder::new(0, 0, 1).unwrap();
        let m = model(
            order,
            10.0,
            vec![],
            vec![0.6],
            ArimaTail {
                differenced: vec![],
                residuals: vec![3.0],
                levels: vec![],
            },
        );
        let f = m.forecast(5);
        assert_eq!(f[0], 10.0 + 0.6 * 3.0);
        assert!(f[1..].iter().all(|&v| v == 10.0));
    }

    #[test]
    fn forecasts_clamp_at_zero() {
        let order = ArimaOrder::new(0, 1, 0).unwrap();
        let m = model(
            order,
            -5.0,
            vec![],
            vec![],
            ArimaTail {
                differenced: vec![],
                residuals: vec![],
                levels: vec![8.0],
            },
        );
        assert_eq!(m.forecast(3), vec![3.0, 0.0, 0.0]);
    }

    #[test]
    fn constant_series_is_singular() {
        let order = ArimaOrder::new(1, 0, 0).unwrap();
        assert_eq!(
            fit_values(&[7.0; 50], order, Interval::Hour).unwrap_err(),
            ArimaError::SingularNormalEquations
        );
    }

    #[test]
    fn short_series_rejected() {
        let order = ArimaOrder::new(1, 0, 1).unwrap();
        assert!(matches!(
            fit_values(&[1.0; 20], order, Interval::Hour),
            Err(ArimaError::SeriesTooShort { needed: 30, .. })
        ));
    }

    #[test]
    fn anchoring_to_fit_data_reproduces_tail() {
        let values: Vec<f64> = (0..80)
            .map(|t| 50.0 + 10.0 * (t as f64 * 0.3).sin() + (t % 7) as f64)
            .collect();
        let order = ArimaOrder::new(2, 1, 1).unwrap();
        let m = fit_values(&values, order, Interval::QuarterHour).unwrap();
        assert_eq!(m.anchored(&values).unwrap(), m);
    }
}
