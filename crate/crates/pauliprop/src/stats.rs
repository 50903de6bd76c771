//! Spectral statistics of propagated operators.
//!
//! The squared coefficients of a generic deep circuit's Heisenberg image
//! follow a Porter-Thomas law. This module orders coefficient spectra,
//! evaluates the two candidate reference curves (the single-variable form
//! built on the inverse error function, and the exponential two-variable
//! form), measures RMS residuals against either, and fits the
//! growth/decay law of significant-term counts
//! `N(L) = scale * D * e^(-r*L) * g^L / (D - 1 + a * g^L)`.
//!
//! `erf`/`erf_inv` are implemented locally: the inverse starts from the
//! Acklam rational approximation of the inverse normal CDF and takes one
//! Newton step against a series-accurate `erf`, landing well below 1e-12
//! absolute error on [-0.999, 0.999].

use thiserror::Error;

use crate::propagation::{OperatorSum, PropagationTrace};

/// Largest register for which a full zero-padded spectrum is materialized
/// (`4^N` values).
pub const SPECTRUM_MAX_QUBITS: usize = 10;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("spectra are limited to {limit} qubits, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("spectrum has {got} values where {expected} are required")]
    NotFullLength { got: usize, expected: usize },
    #[error("residuals compare squared spectra; found negative value {0}")]
    NegativeValue(f64),
    #[error("density argument must be positive, got {0}")]
    BadDensityArgument(f64),
    #[error("the fit needs a trace of at least {limit} layers, got {got}")]
    TraceTooShort { got: usize, limit: usize },
    #[error("trace has no nonzero counts to fit")]
    DegenerateTrace,
}

/// Coefficient spectrum in ascending order, zero-padded to the full basis
/// size `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSpectrum {
    values: Vec<f64>,
    d: usize,
    lambda: f64,
}

impl OrderedSpectrum {
    /// Builds a spectrum from raw squared coefficients (at most `d` of
    /// them), padding with zeros and sorting ascending. `Lambda` is their
    /// sum.
    pub fn from_values(mut values: Vec<f64>, d: usize) -> Result<OrderedSpectrum, StatsError> {
        if values.len() > d {
            return Err(StatsError::NotFullLength { got: values.len(), expected: d });
        }
        let lambda = values.iter().sum();
        values.resize(d, 0.0);
        values.sort_by(f64::total_cmp);
        Ok(OrderedSpectrum { values, d, lambda })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `Lambda = sum of lambda^2`, also for signed spectra.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Fraction of negative values among the nonzero ones; `None` for an
    /// all-zero spectrum. Meaningful on signed spectra.
    pub fn negative_fraction(&self) -> Option<f64> {
        let nonzero = self.values.iter().filter(|v| **v != 0.0).count();
        if nonzero == 0 {
            return None;
        }
        let negative = self.values.iter().filter(|v| **v < 0.0).count();
        Some(negative as f64 / nonzero as f64)
    }
}

/// Orders the coefficients of `s` ascending over the full `4^N` basis,
/// implicit zeros included: squared coefficients by default, raw signed
/// coefficients with `signed`.
pub fn ordered_spectrum(s: &OperatorSum, signed: bool) -> Result<OrderedSpectrum, StatsError> {
    let n = s.n_qubits();
    if n > SPECTRUM_MAX_QUBITS {
        return Err(StatsError::TooLarge { n, limit: SPECTRUM_MAX_QUBITS });
    }
    let d = 1usize << (2 * n);
    let raw: Vec<f64> =
        s.terms().map(|(_, l)| if signed { l } else { l * l }).collect();
    let lambda: f64 = s.terms().map(|(_, l)| l * l).sum();
    let mut values = raw;
    values.resize(d, 0.0);
    values.sort_by(f64::total_cmp);
    Ok(OrderedSpectrum { values, d, lambda })
}

/// The two reference curves an ordered spectrum is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtCurve {
    /// Single-variable ordered Porter-Thomas values via the inverse error
    /// function.
    Pt1,
    /// Two-variable exponential comparison curve.
    Pt2,
}

impl PtCurve {
    pub fn eval(self, n: usize, d: usize, lambda: f64) -> f64 {
        match self {
            PtCurve::Pt1 => pt1_curve(n, d, lambda),
            PtCurve::Pt2 => pt2_curve(n, d, lambda),
        }
    }
}

/// Ordered Porter-Thomas value at rank `n` of `d`:
/// `(2*Lambda/D) * erf_inv(n/D)^2`. Rank `d` itself diverges and returns
/// infinity as a sentinel.
pub fn pt1_curve(n: usize, d: usize, lambda: f64) -> f64 {
    assert!(n <= d, "rank {n} beyond spectrum size {d}");
    if n == d {
        return f64::INFINITY;
    }
    let u = erf_inv(n as f64 / d as f64);
    (2.0 * lambda / d as f64) * u * u
}

/// Exponential comparison curve at rank `n` of `d`:
/// `-(Lambda/D) * ln(1 - n/D)`, with the same infinity sentinel at `n = d`.
pub fn pt2_curve(n: usize, d: usize, lambda: f64) -> f64 {
    assert!(n <= d, "rank {n} beyond spectrum size {d}");
    if n == d {
        return f64::INFINITY;
    }
    // + 0.0 turns the negative zero at n = 0 into a plain zero
    -(lambda / d as f64) * (1.0 - n as f64 / d as f64).ln() + 0.0
}

/// Porter-Thomas density `sqrt(D/(2*pi*Lambda)) * e^(-p*D/(2*Lambda)) / sqrt(p)`
/// for `p > 0`.
pub fn pt_density(p: f64, d: usize, lambda: f64) -> Result<f64, StatsError> {
    if !(p > 0.0) {
        return Err(StatsError::BadDensityArgument(p));
    }
    let d = d as f64;
    Ok((d / (2.0 * std::f64::consts::PI * lambda)).sqrt() * (-p * d / (2.0 * lambda)).exp()
        / p.sqrt())
}

/// RMS difference between a full-length squared spectrum and a reference
/// curve, excluding the top `ceil(0.01 * D)` ranks where the curves
/// diverge.
pub fn rms_residual(spec: &OrderedSpectrum, curve: PtCurve) -> Result<f64, StatsError> {
    if spec.values.len() != spec.d {
        return Err(StatsError::NotFullLength { got: spec.values.len(), expected: spec.d });
    }
    if let Some(bad) = spec.values.iter().find(|v| **v < 0.0) {
        return Err(StatsError::NegativeValue(*bad));
    }
    let excluded = (0.01 * spec.d as f64).ceil() as usize;
    let kept = spec.d - excluded;
    let mut total = 0.0;
    for n in 0..kept {
        let diff = spec.values[n] - curve.eval(n, spec.d, spec.lambda);
        total += diff * diff;
    }
    Ok((total / kept as f64).sqrt())
}

/// Error function, exact at 0, `+-1` beyond `|x| = 6` to double precision.
/// Evaluated through the all-positive confluent series
/// `erf(x) = (2/sqrt(pi)) * x * e^(-x^2) * sum (2x^2)^n / (3*5*...*(2n+1))`,
/// which avoids the cancellation of the alternating Taylor form.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return x;
    }
    if x.abs() > 6.0 {
        return 1.0f64.copysign(x);
    }
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= 2.0 * x2 / (2 * n + 1) as f64;
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    std::f64::consts::FRAC_2_SQRT_PI * x * (-x2).exp() * sum
}

/// Inverse error function on (-1, 1), with `+-infinity` at the endpoints
/// and NaN outside. Acklam's rational approximation of the inverse normal
/// CDF supplies a starting point good to ~2.3e-9; one Newton step against
/// [`erf`] brings the absolute error below 1e-12 on [-0.999, 0.999].
pub fn erf_inv(x: f64) -> f64 {
    if x.is_nan() || x.abs() > 1.0 {
        return f64::NAN;
    }
    if x.abs() == 1.0 {
        return f64::INFINITY.copysign(x);
    }
    if x == 0.0 {
        return x;
    }
    let y = inverse_normal_cdf((x + 1.0) / 2.0) / std::f64::consts::SQRT_2;
    // Newton step on erf(y) - x = 0; the derivative of erf is
    // (2/sqrt(pi)) e^(-y^2)
    y - (erf(y) - x) * (std::f64::consts::PI.sqrt() / 2.0) * (y * y).exp()
}

/// Acklam's rational approximation of the inverse standard-normal CDF,
/// relative error below 1.15e-9 over (0, 1).
fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Fitted parameters of the significant-term growth/decay law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthDecayFit {
    /// Per-layer branching factor `g`.
    pub d_bar: f64,
    /// Per-layer decay rate `r` of the `e^(-r*L)` factor. The run's
    /// threshold and noise rate only enter as this product; they cannot be
    /// separated by the fit. Fixed to 0 for noiseless traces.
    pub decay_rate: f64,
    /// Saturation constant of the `D - 1 + a*g^L` denominator.
    pub a: f64,
    /// Proportionality constant.
    pub scale: f64,
    /// RMS of the log-domain fit residuals.
    pub residual: f64,
}

impl GrowthDecayFit {
    /// The fitted count at (fractional) processed-layer count `layer`.
    pub fn eval(&self, layer: f64, d: usize) -> f64 {
        let d = d as f64;
        self.scale * d * (-self.decay_rate * layer).exp() * self.d_bar.powf(layer)
            / (d - 1.0 + self.a * self.d_bar.powf(layer))
    }
}

/// `ln(e^a + e^b)` without overflow.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Least-squares fit of the growth/decay law to a propagation trace's
/// `n_eps` column, in the log domain (counts carry multiplicative noise).
/// The layer variable is the number of processed layers, so the curve runs
/// forward even though propagation walks the circuit backwards. For
/// noiseless traces (`gamma = 0`) the decay factor is fixed to 1.
pub fn fit_neps(trace: &PropagationTrace, d: usize) -> Result<GrowthDecayFit, StatsError> {
    const MIN_LAYERS: usize = 10;
    if trace.records.len() < MIN_LAYERS {
        return Err(StatsError::TraceTooShort { got: trace.records.len(), limit: MIN_LAYERS });
    }
    let points: Vec<(f64, f64)> = trace
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.n_eps > 0)
        .map(|(i, r)| ((i + 1) as f64, (r.n_eps as f64).ln()))
        .collect();
    if points.len() < 4 {
        return Err(StatsError::DegenerateTrace);
    }
    let fit_decay = trace.gamma > 0.0;

    // initial growth guess: log-slope from the first point to the peak
    let peak = points
        .iter()
        .cloned()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("points is non-empty");
    let first = points[0];
    let slope =
        if peak.0 > first.0 { ((peak.1 - first.1) / (peak.0 - first.0)).max(0.0) } else { 0.0 };
    let ln_d = (d as f64).ln();

    let objective = |u: &[f64]| -> f64 {
        let ln_g = u[0];
        let r = if fit_decay { u[1].exp() } else { 0.0 };
        let (ln_a, ln_scale) = if fit_decay { (u[2], u[3]) } else { (u[1], u[2]) };
        let mut total = 0.0;
        for &(layer, ln_y) in &points {
            let ln_denominator = log_add_exp(((d - 1) as f64).ln(), ln_a + layer * ln_g);
            let model = ln_scale + ln_d + layer * ln_g - r * layer - ln_denominator;
            let diff = ln_y - model;
            total += diff * diff;
        }
        if total.is_finite() {
            total
        } else {
            f64::MAX
        }
    };

    let start: Vec<f64> = if fit_decay {
        vec![slope.max(1e-6), (0.01f64).ln(), 0.0, 0.0]
    } else {
        vec![slope.max(1e-6), 0.0, 0.0]
    };
    let best = nelder_mead(&objective, &start, 1e-8, 8000);
    let value = objective(&best);
    let ln_g = best[0];
    let r = if fit_decay { best[1].exp() } else { 0.0 };
    let (ln_a, ln_scale) = if fit_decay { (best[2], best[3]) } else { (best[1], best[2]) };
    Ok(GrowthDecayFit {
        d_bar: ln_g.exp(),
        decay_rate: r,
        a: ln_a.exp(),
        scale: ln_scale.exp(),
        residual: (value / points.len() as f64).sqrt(),
    })
}

/// Derivative-free Nelder-Mead minimization with standard coefficients,
/// stopping when both the simplex diameter and the value spread fall under
/// `tol`.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += if v[i].abs() > 1e-3 { 0.25 * v[i].abs() } else { 0.25 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalued: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalued;

        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if diameter < tol && (values[n] - values[0]).abs() < tol {
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let blend = |from: &[f64], factor: f64| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, w)| c + factor * (c - w)).collect()
        };

        let reflected = blend(&simplex[n], 1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = blend(&simplex[n], 2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let contracted = blend(&simplex[n], -0.5);
            let fc = f(&contracted);
            if fc < values[n] {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                // shrink towards the best vertex
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    simplex.swap_remove(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::random_clifford_t;
    use crate::pauli::{Axis, PauliString};
    use crate::propagation::{propagate, LayerRecord, NoiseModel};

    // frozen 40-digit evaluations of the inverse error function
    const ERF_INV_REFERENCE: [(f64, f64); 20] = [
        (-0.999, -2.3267537655135246706),
        (-0.9, -1.1630871536766740867),
        (-0.8, -0.90619380243682322007),
        (-0.5, -0.47693627620446987338),
        (-0.25, -0.22531205501217810473),
        (-0.1, -0.088855990494257687016),
        (-0.02425, -0.021494312646868821406),
        (-0.001, -0.00088622715746655210457),
        (0.001, 0.00088622715746655210457),
        (0.02, 0.017726395026678018482),
        (0.1, 0.088855990494257687016),
        (0.3, 0.27246271472675435562),
        (0.476936, 0.45157923451278412605),
        (0.5, 0.47693627620446987338),
        (0.7, 0.73286907795921685222),
        (0.9, 1.1630871536766740867),
        (0.95, 1.3859038243496779453),
        (0.97575, 1.5932141973909671058),
        (0.99, 1.821386367718449673),
        (0.999, 2.3267537655135246706),
    ];

    const ERF_REFERENCE: [(f64, f64); 7] = [
        (0.1, 0.1124629160182848922),
        (0.5, 0.52049987781304653768),
        (1.0, 0.84270079294971486934),
        (1.5, 0.96610514647531072707),
        (2.0, 0.99532226501895273416),
        (2.33, 0.99901619500654980297),
        (3.0, 0.99997790950300141456),
    ];

    fn z_last(n: usize) -> OperatorSum {
        let mut p = PauliString::identity(n).unwrap();
        p.set_axis(n, Axis::Z).unwrap();
        OperatorSum::single(p, 1.0)
    }

    #[test]
    fn erf_matches_frozen_references() {
        for (x, expected) in ERF_REFERENCE {
            assert!((erf(x) - expected).abs() < 1e-15, "erf({x})");
            assert!((erf(-x) + expected).abs() < 1e-15, "erf(-{x})");
        }
        assert_eq!(erf(0.0), 0.0);
        assert_eq!(erf(10.0), 1.0);
        assert_eq!(erf(-10.0), -1.0);
    }

    #[test]
    fn erf_inv_matches_frozen_references_below_1e12() {
        for (x, expected) in ERF_INV_REFERENCE {
            let got = erf_inv(x);
            assert!((got - expected).abs() < 1e-12, "erf_inv({x}) = {got}, want {expected}");
        }
    }

    #[test]
    fn erf_inv_round_trips_against_erf() {
        for i in 0..=1998 {
            let x = -0.999 + i as f64 * 0.001;
            assert!((erf(erf_inv(x)) - x).abs() < 1e-13, "round trip at {x}");
        }
    }

    #[test]
    fn erf_inv_edge_cases() {
        assert_eq!(erf_inv(0.0), 0.0);
        assert_eq!(erf_inv(1.0), f64::INFINITY);
        assert_eq!(erf_inv(-1.0), f64::NEG_INFINITY);
        assert!(erf_inv(1.5).is_nan());
        assert!(erf_inv(f64::NAN).is_nan());
    }

    #[test]
    fn pt1_curve_examples() {
        assert_eq!(pt1_curve(0, 256, 1.0), 0.0);
        // frozen high-precision value of (2/256) * erf_inv(0.5)^2
        let mid = pt1_curve(128, 256, 1.0);
        assert!((mid - 1.7770954028108310623e-3).abs() < 1e-15);
        // linear in Lambda
        assert_eq!(pt1_curve(57, 256, 2.0), 2.0 * pt1_curve(57, 256, 1.0));
        assert_eq!(pt1_curve(256, 256, 1.0), f64::INFINITY);
    }

    #[test]
    fn pt2_curve_examples() {
        assert_eq!(pt2_curve(0, 256, 1.0), 0.0);
        let mid = pt2_curve(128, 256, 1.0);
        assert!((mid - std::f64::consts::LN_2 / 256.0).abs() < 1e-18);
        assert_eq!(pt2_curve(256, 256, 1.0), f64::INFINITY);
        // the exponential curve sits above the single-variable one mid-rank
        assert!(mid > pt1_curve(128, 256, 1.0));
    }

    #[test]
    fn pt_curves_are_strictly_increasing() {
        for curve in [PtCurve::Pt1, PtCurve::Pt2] {
            let mut last = -1.0;
            for n in 0..256 {
                let v = curve.eval(n, 256, 1.0);
                assert!(v > last, "{curve:?} at rank {n}");
                last = v;
            }
        }
    }

    #[test]
    fn pt_density_normalizes_and_has_the_right_mean() {
        let (d, lambda) = (256usize, 1.0);
        assert!(matches!(pt_density(0.0, d, lambda), Err(StatsError::BadDensityArgument(_))));
        assert!(matches!(pt_density(-0.1, d, lambda), Err(StatsError::BadDensityArgument(_))));
        // substitute p = u^2 so the integrand becomes a plain Gaussian:
        // integral Pr(p) dp = integral 2u Pr(u^2) du
        let steps = 4000;
        let upper = 0.8f64;
        let h = upper / steps as f64;
        let mut mass = 0.0;
        let mut mean = 0.0;
        for i in 0..=steps {
            let u = i as f64 * h;
            let weight = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            // the u = 0 endpoint is the removable sqrt(p) limit
            let density = if i == 0 {
                2.0 * (d as f64 / (2.0 * std::f64::consts::PI * lambda)).sqrt()
            } else {
                2.0 * u * pt_density(u * u, d, lambda).unwrap()
            };
            mass += weight * density;
            mean += weight * density * u * u;
        }
        mass *= h / 3.0;
        mean *= h / 3.0;
        assert!((mass - 1.0).abs() < 1e-6, "total mass {mass}");
        assert!((mean - lambda / d as f64).abs() < 1e-6, "mean {mean}");
    }

    #[test]
    fn pt_density_diverges_like_inverse_sqrt() {
        let (d, lambda) = (256usize, 1.0);
        let expected = (d as f64 / (2.0 * std::f64::consts::PI * lambda)).sqrt();
        let p = 1e-12;
        let ratio = pt_density(p, d, lambda).unwrap() * p.sqrt();
        assert!((ratio - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn single_unit_term_spectrum_is_zeros_then_one() {
        let spectrum = ordered_spectrum(&z_last(2), false).unwrap();
        assert_eq!(spectrum.d(), 16);
        assert_eq!(spectrum.values().len(), 16);
        assert_eq!(&spectrum.values()[..15], &[0.0; 15]);
        assert_eq!(spectrum.values()[15], 1.0);
        assert!((spectrum.lambda() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spectrum_is_a_permutation_of_inputs_plus_padding() {
        let mut s = OperatorSum::new(1).unwrap();
        s.add_term("X".parse().unwrap(), -0.6).unwrap();
        s.add_term("Z".parse().unwrap(), 0.8).unwrap();
        let unsigned = ordered_spectrum(&s, false).unwrap();
        assert_eq!(unsigned.values(), &[0.0, 0.0, 0.36, 0.6400000000000001]);
        let signed = ordered_spectrum(&s, true).unwrap();
        assert_eq!(signed.values(), &[-0.6, 0.0, 0.0, 0.8]);
        assert!((signed.lambda() - 1.0).abs() < 1e-15);
        // already-sorted values come back unchanged via from_values
        let direct = OrderedSpectrum::from_values(vec![0.1, 0.2, 0.3, 0.4], 4).unwrap();
        assert_eq!(direct.values(), &[0.1, 0.2, 0.3, 0.4]);
        assert!(OrderedSpectrum::from_values(vec![0.0; 5], 4).is_err());
    }

    #[test]
    fn negative_fraction_counts_nonzero_values() {
        let spec = OrderedSpectrum::from_values(vec![-0.3, -0.1, 0.2, 0.4, 0.5], 8).unwrap();
        assert_eq!(spec.negative_fraction(), Some(0.4));
        let zeros = OrderedSpectrum::from_values(vec![], 8).unwrap();
        assert_eq!(zeros.negative_fraction(), None);
    }

    #[test]
    fn deep_generic_output_has_roughly_balanced_signs() {
        let circuit = random_clifford_t(3, 100, 0).unwrap();
        let (out, _) = propagate(&circuit, &z_last(3), 0.0, &NoiseModel::noiseless()).unwrap();
        let spectrum = ordered_spectrum(&out, true).unwrap();
        let fraction = spectrum.negative_fraction().unwrap();
        assert!((0.35..=0.65).contains(&fraction), "negative fraction {fraction}");
    }

    #[test]
    fn residual_vanishes_against_the_generating_curve() {
        let d = 256;
        for curve in [PtCurve::Pt1, PtCurve::Pt2] {
            let values: Vec<f64> = (0..d).map(|n| curve.eval(n, d, 1.0)).collect();
            // the top rank is infinite only at n = d; all d values are finite
            let spec = OrderedSpectrum::from_values(values, d).unwrap();
            let (own, other) = match curve {
                PtCurve::Pt1 => (
                    rms_residual(&spec, PtCurve::Pt1).unwrap(),
                    rms_residual(&spec, PtCurve::Pt2).unwrap(),
                ),
                PtCurve::Pt2 => (
                    rms_residual(&spec, PtCurve::Pt2).unwrap(),
                    rms_residual(&spec, PtCurve::Pt1).unwrap(),
                ),
            };
            // Lambda of the synthetic spectrum is not exactly 1, so the
            // regenerated curve differs by that scale factor
            let lambda_gap = (spec.lambda() - 1.0).abs();
            assert!(own <= lambda_gap + 1e-15, "{curve:?}: own residual {own}");
            assert!(other > 10.0 * own.max(1e-9), "{curve:?} vs other curve");
        }
    }

    #[test]
    fn residual_rejects_bad_spectra() {
        let negative = OrderedSpectrum::from_values(vec![-0.1, 0.2], 4).unwrap();
        assert!(matches!(
            rms_residual(&negative, PtCurve::Pt1),
            Err(StatsError::NegativeValue(_))
        ));
        let short = OrderedSpectrum { values: vec![0.0; 3], d: 4, lambda: 0.0 };
        assert!(matches!(
            rms_residual(&short, PtCurve::Pt1),
            Err(StatsError::NotFullLength { got: 3, expected: 4 })
        ));
    }

    fn synthetic_trace(g: f64, a: f64, scale: f64, d: usize, layers: usize) -> PropagationTrace {
        let records: Vec<LayerRecord> = (0..layers)
            .map(|i| {
                let l = (i + 1) as f64;
                let count = scale * d as f64 * g.powf(l) / (d as f64 - 1.0 + a * g.powf(l));
                LayerRecord {
                    layer: layers - i,
                    retained: count.round() as usize,
                    n_eps: count.round() as usize,
                    norm: 1.0,
                    expectation: 0.0,
                }
            })
            .collect();
        PropagationTrace {
            records,
            expectation: 0.0,
            eps: 0.01,
            count_eps: 0.01,
            gamma: 0.0,
            t: 1.0,
        }
    }

    #[test]
    fn fit_recovers_a_synthetic_growth_curve() {
        let trace = synthetic_trace(2.0, 1.0, 1.0, 256, 40);
        let fit = fit_neps(&trace, 256).unwrap();
        assert!((fit.d_bar - 2.0).abs() / 2.0 < 0.05, "d_bar {}", fit.d_bar);
        assert_eq!(fit.decay_rate, 0.0, "noiseless trace fixes the decay factor");
        assert!(fit.residual < 0.2);
    }

    #[test]
    fn flat_trace_fits_to_unit_growth() {
        let records: Vec<LayerRecord> = (0..50)
            .map(|i| LayerRecord {
                layer: 50 - i,
                retained: 1,
                n_eps: 1,
                norm: 1.0,
                expectation: 0.0,
            })
            .collect();
        let trace = PropagationTrace {
            records,
            expectation: 0.0,
            eps: 0.01,
            count_eps: 0.01,
            gamma: 0.0,
            t: 1.0,
        };
        let fit = fit_neps(&trace, 256).unwrap();
        assert!((fit.d_bar - 1.0).abs() < 0.05, "d_bar {}", fit.d_bar);
    }

    #[test]
    fn fit_rejects_short_and_empty_traces() {
        let mut trace = synthetic_trace(2.0, 1.0, 1.0, 256, 5);
        assert!(matches!(
            fit_neps(&trace, 256),
            Err(StatsError::TraceTooShort { got: 5, limit: 10 })
        ));
        trace = synthetic_trace(2.0, 1.0, 1.0, 256, 40);
        for r in trace.records.iter_mut() {
            r.n_eps = 0;
        }
        assert!(matches!(fit_neps(&trace, 256), Err(StatsError::DegenerateTrace)));
    }

    #[test]
    fn noisy_trace_fit_rises_then_decays() {
        let circuit = random_clifford_t(4, 100, 1).unwrap();
        let noise = NoiseModel::new(0.005, 1.0).unwrap();
        let (_, trace) = propagate(&circuit, &z_last(4), 0.002, &noise).unwrap();
        let fit = fit_neps(&trace, 256).unwrap();
        assert!(fit.d_bar > 1.0);
        assert!(fit.decay_rate > 0.0);
        let curve: Vec<f64> =
            (1..=trace.records.len()).map(|l| fit.eval(l as f64, 256)).collect();
        let peak = curve
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        assert!(peak > 0, "fitted curve must rise first");
        assert!(peak < curve.len() - 1, "fitted curve must decay by the end");
        assert!(curve[1] > curve[0]);
        assert!(*curve.last().unwrap() < curve[peak] * 0.9);
    }

    #[test]
    fn rescaled_spectra_share_the_single_variable_shape() {
        let circuit = random_clifford_t(3, 200, 2).unwrap();
        let rescaled_residual = |gamma: f64| -> f64 {
            let noise = NoiseModel::new(gamma, 1.0).unwrap();
            let (out, _) = propagate(&circuit, &z_last(3), 0.0, &noise).unwrap();
            let spectrum = ordered_spectrum(&out, false).unwrap();
            let lambda = spectrum.lambda();
            let rescaled: Vec<f64> = spectrum.values().iter().map(|v| v / lambda).collect();
            let spec = OrderedSpectrum::from_values(rescaled, spectrum.d()).unwrap();
            rms_residual(&spec, PtCurve::Pt1).unwrap()
        };
        let clean = rescaled_residual(0.0);
        let noisy = rescaled_residual(0.01);
        assert!(
            noisy <= 2.0 * clean,
            "universality violated: noisy {noisy} vs clean {clean}"
        );
    }
}
