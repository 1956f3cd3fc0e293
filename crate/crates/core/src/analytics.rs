//! Exact expected moments of the network.
//!
//! With `y = lambda1 t`, `z = lambda2 t`, the expected quadratic moments are
//!
//! ```text
//! V(t) = e^{L t} V(0) + t g2(L t) q1
//!      + u d(0) t ( g1'(y) (1,0) + F(g1, t) (0,1) )
//!      + u b t^2  ( g2'(y) (1,0) + F(g2, t) (0,1) )
//! ```
//!
//! where `F(g, t) = w2 (g[y, z] - g'(y)) = -2 y g[y, y, z]`. Writing `F`
//! through the second divided difference keeps the formula finite when
//! `alpha = 0` or the two eigenvalues approach each other.

use nalgebra::{Matrix2, Vector2};

use crate::error::{invalid, Error, Result};
use crate::model::{derived_scalars, DerivedScalars, ModelParams, MomentVector};
use crate::phi::{exp_dd, exp_dd2, expm1mx_dd, g2, g2_dd, g2_dd2, g2_prime};

/// Eigenstructure of `L_N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralData {
    /// `-alpha_N`, eigenvalue on `e1`.
    pub lambda1: f64,
    /// `-2 (alpha_N + beta_N)`, eigenvalue on `e2`.
    pub lambda2: f64,
    pub e1: Vector2<f64>,
    pub e2: Vector2<f64>,
    /// Coordinate of `(1, 0)` along `e2`: `(1, 0) = e1 + w2 e2`.
    pub w2: f64,
}

impl SpectralData {
    /// `a_i = 1 + lambda_i / delta_N`, the eigenvalues of the jump matrix K.
    pub fn jump_eigenvalues(&self, delta_n: f64) -> (f64, f64) {
        (1.0 + self.lambda1 / delta_n, 1.0 + self.lambda2 / delta_n)
    }
}

pub fn spectral(scalars: &DerivedScalars) -> Result<SpectralData> {
    let lambda1 = -scalars.alpha_n;
    let lambda2 = -2.0 * (scalars.alpha_n + scalars.beta_n);
    let gap = lambda2 - lambda1;
    if gap == 0.0 {
        return Err(Error::CoincidentEigenvalues);
    }
    let ratio = 2.0 * lambda1 / gap;
    Ok(SpectralData {
        lambda1,
        lambda2,
        e1: Vector2::new(1.0, ratio),
        e2: Vector2::new(0.0, 1.0),
        w2: -ratio,
    })
}

/// `e^{L_N t}` for the lower-triangular `L_N`.
pub fn exp_l(scalars: &DerivedScalars, t: f64) -> Matrix2<f64> {
    let y = -scalars.alpha_n * t;
    let z = -2.0 * (scalars.alpha_n + scalars.beta_n) * t;
    Matrix2::new(y.exp(), 0.0, -2.0 * y * exp_dd(y, z), z.exp())
}

/// `(-L_N)^{-1} (Id - e^{L_N t}) = t g2(L_N t)`, finite also when `L_N` is singular.
pub fn integrated_exp_l(scalars: &DerivedScalars, t: f64) -> Matrix2<f64> {
    let y = -scalars.alpha_n * t;
    let z = -2.0 * (scalars.alpha_n + scalars.beta_n) * t;
    t * Matrix2::new(g2(y), 0.0, -2.0 * y * g2_dd(y, z), g2(z))
}

/// `d_N(t) = d0 e^{-alpha t/N} + (v - r) t g2(-alpha t/N)`; reduces to
/// `d0 + (v - r) t` when `alpha = 0`.
pub fn d_closed_form(params: &ModelParams, d0: f64, t: f64) -> f64 {
    let y = -params.alpha / params.n as f64 * t;
    d0 * y.exp() + params.skew() * t * g2(y)
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid("time must be finite and non-negative"));
    }
    Ok(())
}

/// Expected moments `(R_N(t), D_N(t), d_N(t))` from initial expected moments.
pub fn moments_closed_form(params: &ModelParams, init: MomentVector, t: f64) -> Result<MomentVector> {
    check_time(t)?;
    let s = derived_scalars(params)?;
    Ok(closed_form_with(&s, params, init, t))
}

pub(crate) fn closed_form_with(s: &DerivedScalars, params: &ModelParams, init: MomentVector, t: f64) -> MomentVector {
    let y = -s.alpha_n * t;
    let z = -2.0 * (s.alpha_n + s.beta_n) * t;
    let mut v = exp_l(s, t) * init.quadratic() + integrated_exp_l(s, t) * s.q1;

    let coupling = s.u * init.displacement * t;
    v += coupling * Vector2::new(y.exp(), -2.0 * y * exp_dd2(y, z));

    let drift = s.u * s.skew * t * t;
    v += drift * Vector2::new(g2_prime(y), -2.0 * y * g2_dd2(y, z));

    let pairwise = if s.n > 1 { v[1] } else { 0.0 };
    MomentVector::new(v[0], pairwise, d_closed_form(params, init.displacement, t))
}

/// The same moments evaluated term by term in the eigenbasis `e1, e2`.
/// Needs `alpha > 0`; loses accuracy when `lambda1 t` is small.
pub fn moments_eigenbasis_form(params: &ModelParams, init: MomentVector, t: f64) -> Result<MomentVector> {
    check_time(t)?;
    let s = derived_scalars(params)?;
    if s.alpha_n <= 0.0 {
        return Err(Error::NoStationaryLimit);
    }
    let sp = spectral(&s)?;
    let (l1, l2) = (sp.lambda1, sp.lambda2);
    let (x1, x2) = ((l1 * t).exp(), (l2 * t).exp());
    let basis = Matrix2::from_columns(&[sp.e1, sp.e2]);
    let basis_inv = basis.try_inverse().ok_or(Error::CoincidentEigenvalues)?;
    let e_lt = basis * Matrix2::new(x1, 0.0, 0.0, x2) * basis_inv;
    let neg_l_inv = (-s.l_n).try_inverse().ok_or(Error::NoStationaryLimit)?;

    let mut v = e_lt * init.quadratic() + neg_l_inv * (Matrix2::identity() - e_lt) * s.q1;
    v += s.u
        * init.displacement
        * (t * x1 * sp.e1 + (x2 - x1) / (l2 - l1) * sp.w2 * sp.e2);
    v += s.u
        * s.skew
        * ((1.0 / (l1 * l1) - (1.0 / (l1 * l1) - t / l1) * x1) * sp.e1
            + (1.0 / (l1 * l2) + (x2 / l2 - x1 / l1) / (l2 - l1)) * sp.w2 * sp.e2);
    let pairwise = if s.n > 1 { v[1] } else { 0.0 };
    Ok(MomentVector::new(v[0], pairwise, d_closed_form(params, init.displacement, t)))
}

/// Large-time limits: exact values for the given N and the leading large-N
/// forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryLimits {
    pub exact: MomentVector,
    pub asymptotic: MomentVector,
}

pub fn stationary_limits(params: &ModelParams) -> Result<StationaryLimits> {
    let s = derived_scalars(params)?;
    if params.alpha <= 0.0 {
        return Err(Error::NoStationaryLimit);
    }
    let sp = spectral(&s)?;
    let s2 = params.sigma * params.sigma;
    let b = params.skew();
    let n = params.n as f64;
    let (alpha, beta) = (params.alpha, params.beta);

    let r = s2 / s.alpha_n + s.u * b / (sp.lambda1 * sp.lambda1);
    let d_pair = if params.n > 1 {
        2.0 * s2 / (s.alpha_n + s.beta_n) + 2.0 * s.u * b / (sp.lambda1 * sp.lambda2)
    } else {
        0.0
    };
    let disp = b / s.alpha_n;
    let asym_d = if params.n > 1 {
        2.0 * s2 * n / (alpha + beta) + 2.0 * b * b * n * n / (alpha * (alpha + beta))
    } else {
        0.0
    };
    Ok(StationaryLimits {
        exact: MomentVector::new(r, d_pair, disp),
        asymptotic: MomentVector::new(
            s2 * n / alpha + 2.0 * b * b * n * n / (alpha * alpha),
            asym_d,
            b * n / alpha,
        ),
    })
}

/// Whether the moments settle as `t -> infinity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `alpha > 0`: all moments converge.
    Stationary,
    /// `alpha = 0`: R grows without bound (polynomially in t).
    Unbounded,
}

pub fn regime(params: &ModelParams) -> Regime {
    if params.alpha > 0.0 {
        Regime::Stationary
    } else {
        Regime::Unbounded
    }
}

/// Right-hand side of the moment ODE: `L V + (2 (v - r) d, 0) + q1`.
pub fn ode_derivative(scalars: &DerivedScalars, v: Vector2<f64>, d: f64) -> Vector2<f64> {
    scalars.l_n * v + Vector2::new(scalars.u * d, 0.0) + scalars.q1
}

/// Integrates the moment ODE with classical RK4; `d` is taken from
/// [`d_closed_form`].
pub fn ode_moments(params: &ModelParams, init: MomentVector, t_grid: &[f64]) -> Result<Vec<MomentVector>> {
    let s = derived_scalars(params)?;
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("time grid must be finite and non-negative"));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("time grid must be sorted"));
    }
    let fastest = (2.0 * (s.alpha_n + s.beta_n)).max(s.alpha_n);
    let h_max = if fastest > 0.0 { (0.01 / fastest).min(1.0) } else { 1.0 };
    let d = |t: f64| d_closed_form(params, init.displacement, t);
    let f = |t: f64, v: Vector2<f64>| ode_derivative(&s, v, d(t));

    let mut out = Vec::with_capacity(t_grid.len());
    let mut t = 0.0;
    let mut v = init.quadratic();
    for &target in t_grid {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / h_max).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for i in 0..steps {
                let ti = t + i as f64 * h;
                let k1 = f(ti, v);
                let k2 = f(ti + 0.5 * h, v + 0.5 * h * k1);
                let k3 = f(ti + 0.5 * h, v + 0.5 * h * k2);
                let k4 = f(ti + h, v + h * k3);
                v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            t = target;
        }
        let pairwise = if params.n > 1 { v[1] } else { 0.0 };
        out.push(MomentVector::new(v[0], pairwise, d(target)));
    }
    Ok(out)
}

/// Values of `E A^Pi`, `E t A^{Pi+1}/(Pi+1)` and
/// `E t^2 A^{Pi+2}/((Pi+1)(Pi+2))` for a Poisson count `Pi` of mean `delta t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonPowers<T> {
    pub power: T,
    pub shifted1: T,
    pub shifted2: T,
}

fn check_rate_time(delta: f64, t: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Domain("rate must be positive".into()));
    }
    check_time(t)
}

pub fn poisson_power_expectation(a: f64, delta: f64, t: f64) -> Result<PoissonPowers<f64>> {
    check_rate_time(delta, t)?;
    let damp = (-delta * t).exp();
    let x = delta * t * a;
    Ok(PoissonPowers {
        power: (-delta * t * (1.0 - a)).exp(),
        shifted1: damp * t * a * g2(x),
        shifted2: damp * t * t * a * a * crate::phi::phi2(x),
    })
}

/// Matrix version for a lower-triangular 2x2 `A`.
pub fn poisson_power_expectation_matrix(a: &Matrix2<f64>, delta: f64, t: f64) -> Result<PoissonPowers<Matrix2<f64>>> {
    check_rate_time(delta, t)?;
    if a[(0, 1)] != 0.0 {
        return Err(Error::Domain("matrix must be lower triangular".into()));
    }
    let (a11, a21, a22) = (a[(0, 0)], a[(1, 0)], a[(1, 1)]);
    let d11 = poisson_power_expectation(a11, delta, t)?;
    let d22 = poisson_power_expectation(a22, delta, t)?;
    let damp = (-delta * t).exp();
    let dt = delta * t;
    // Divided differences over [a11, a22] of the three scalar functions.
    let f1 = damp * dt * exp_dd(dt * a11, dt * a22);
    let f2 = f1 / delta;
    let f3 = damp * t / delta * expm1mx_dd(dt * a11, dt * a22);
    let tri = |p: f64, off: f64, q: f64| Matrix2::new(p, 0.0, a21 * off, q);
    Ok(PoissonPowers {
        power: tri(d11.power, f1, d22.power),
        shifted1: tri(d11.shifted1, f2, d22.shifted1),
        shifted2: tri(d11.shifted2, f3, d22.shifted2),
    })
}

/// Arguments closer than this use the equal-argument formulas.
pub const U_EQUAL_THRESHOLD: f64 = 1e-9;

/// `U1(a1, a2) = E t/(Pi+1) sum_{m<=Pi} a1^m a2^{Pi-m}` and
/// `U2(a1, a2) = E t^2/((Pi+1)(Pi+2)) sum_{m1+m2<=Pi} a1^m2 a2^m1`.
pub fn u_functions(a1: f64, a2: f64, delta: f64, t: f64) -> Result<(f64, f64)> {
    for a in [a1, a2] {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Domain(format!("argument {a} outside (0, 1)")));
        }
    }
    check_rate_time(delta, t)?;
    if (a1 - a2).abs() < U_EQUAL_THRESHOLD {
        let y = -(1.0 - 0.5 * (a1 + a2)) * delta * t;
        return Ok((t * y.exp(), t * t * g2_prime(y)));
    }
    let y1 = -(1.0 - a1) * delta * t;
    let y2 = -(1.0 - a2) * delta * t;
    Ok((t * exp_dd(y1, y2), t * t * g2_dd(y1, y2)))
}

/// `h_R(c) = (1 - (1 + alpha c) e^{-alpha c}) / (alpha c)^2` and `h_D(c)`,
/// the scaled coefficient functions at `t = c N`.
pub fn h_functions(c: f64, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain("c must be positive".into()));
    }
    if !(alpha > 0.0) || !(beta >= 0.0) {
        return Err(Error::Domain("alpha must be positive and beta non-negative".into()));
    }
    let y = -alpha * c;
    let z = -2.0 * (alpha + beta) * c;
    Ok((g2_prime(y), 2.0 * alpha * c * g2_dd2(y, z)))
}

/// `h_D` written out term by term; accurate only for moderate `c`.
pub fn h_d_explicit(c: f64, alpha: f64, beta: f64) -> f64 {
    let ac = alpha * c;
    let ab2 = alpha + 2.0 * beta;
    let first = 2.0 / (c * c) * (1.0 - (1.0 + ac) * (-ac).exp()) / (alpha * ab2);
    let inner = 1.0 / (2.0 * (alpha + beta) * alpha)
        - ((-ac).exp() / alpha - (-2.0 * (alpha + beta) * c).exp() / (2.0 * (alpha + beta))) / ab2;
    first - 2.0 / (c * c) * alpha / ab2 * inner
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::divided_difference;

    fn params(n: usize, sigma: f64, skew: f64, alpha: f64, beta: f64) -> ModelParams {
        ModelParams::new(n, 1.0, 1.0 + skew, sigma, alpha, beta).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    /// Independent evaluation: exponential of the augmented generator of
    /// (R, D, d, 1) by scaling and squaring with a Taylor core.
    fn augmented_oracle(p: &ModelParams, init: MomentVector, t: f64) -> [f64; 3] {
        use nalgebra::{Matrix4, Vector4};
        let n = p.n as f64;
        let an = p.alpha / n;
        let bn = if p.n > 1 { p.beta / (n - 1.0) } else { 0.0 };
        let b = p.skew();
        let s2 = p.sigma * p.sigma;
        #[rustfmt::skip]
        let a = Matrix4::new(
            -an, 0.0, 2.0 * b, s2,
            2.0 * an, -2.0 * (an + bn), 0.0, 2.0 * s2,
            0.0, 0.0, -an, b,
            0.0, 0.0, 0.0, 0.0,
        ) * t;
        let norm = a.abs().max();
        let mut k = 0;
        while norm / 2f64.powi(k) > 0.05 {
            k += 1;
        }
        let scaled = a / 2f64.powi(k);
        let mut e = Matrix4::identity();
        let mut term = Matrix4::identity();
        for m in 1..20 {
            term = term * scaled / m as f64;
            e += term;
        }
        for _ in 0..k {
            e = e * e;
        }
        let v = e * Vector4::new(init.offset_sq, init.pairwise_sq, init.displacement, 1.0);
        [v[0], v[1], v[2]]
    }

    #[test]
    fn spectral_example() {
        let s = derived_scalars(&params(2, 1.0, 0.0, 1.0, 2.0)).unwrap();
        let sp = spectral(&s).unwrap();
        assert_eq!(sp.lambda1, -0.5);
        assert_eq!(sp.lambda2, -5.0);
        assert!((sp.w2 + 2.0 / 9.0).abs() < 1e-15);
        assert!((sp.e1 - Vector2::new(1.0, 2.0 / 9.0)).norm() < 1e-15);
        assert_eq!(sp.e1 + sp.w2 * sp.e2, Vector2::new(1.0, 0.0));
        for (l, e) in [(sp.lambda1, sp.e1), (sp.lambda2, sp.e2)] {
            assert!((s.l_n * e - l * e).norm() <= 1e-13);
        }
    }

    #[test]
    fn spectral_without_gossip_and_large_n() {
        let s = derived_scalars(&params(7, 1.0, 0.0, 3.0, 0.0)).unwrap();
        let sp = spectral(&s).unwrap();
        assert_eq!(sp.lambda2, 2.0 * sp.lambda1);
        assert!((sp.w2 + 2.0).abs() < 1e-15);

        let (alpha, beta) = (2.0, 1.0);
        let n = 1_000_000;
        let s = derived_scalars(&params(n, 1.0, 0.0, alpha, beta)).unwrap();
        let sp = spectral(&s).unwrap();
        let nf = n as f64;
        assert!(rel(nf * sp.lambda1, -alpha) < 1e-12);
        assert!(rel(nf * sp.lambda2, -2.0 * (alpha + beta)) < 1e-5);
        assert!(rel(sp.w2, -2.0 * alpha / (alpha + 2.0 * beta)) < 1e-5);

        let s = derived_scalars(&params(3, 1.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(matches!(spectral(&s), Err(Error::CoincidentEigenvalues)));
    }

    #[test]
    fn closed_form_at_zero_time_is_init() {
        let p = params(5, 0.7, 0.3, 1.5, 0.4);
        let init = MomentVector::new(2.0, 3.0, -0.5);
        assert_eq!(moments_closed_form(&p, init, 0.0).unwrap(), init);
    }

    #[test]
    fn free_dynamics_without_messages() {
        let p = params(4, 1.3, 0.0, 0.0, 0.0);
        for t in [1.0, 10.0, 100.0] {
            let m = moments_closed_form(&p, MomentVector::ZERO, t).unwrap();
            assert!(rel(m.offset_sq, 1.69 * t) <= 1e-12);
            assert!(rel(m.pairwise_sq, 2.0 * 1.69 * t) <= 1e-12);
            assert_eq!(m.displacement, 0.0);
        }
    }

    #[test]
    fn pure_drift_without_messages() {
        // alpha = beta = 0: y_j = d0 + b t for every sensor.
        let p = params(3, 0.0, 0.5, 0.0, 0.0);
        let init = MomentVector::new(1.0, 0.0, 1.0);
        let t = 4.0;
        let m = moments_closed_form(&p, init, t).unwrap();
        assert!(rel(m.offset_sq, 9.0) < 1e-14);
        assert!(m.pairwise_sq.abs() < 1e-14);
        assert!(rel(m.displacement, 3.0) < 1e-15);
    }

    #[test]
    fn stationary_values_n2() {
        let lim = stationary_limits(&params(2, 1.0, 1.0, 1.0, 2.0)).unwrap();
        assert!(rel(lim.exact.offset_sq, 10.0) < 1e-14);
        assert!(rel(lim.exact.pairwise_sq, 2.4) < 1e-14);
        assert!(rel(lim.exact.displacement, 2.0) < 1e-14);
        let m = moments_closed_form(&params(2, 1.0, 1.0, 1.0, 2.0), MomentVector::ZERO, 1e4).unwrap();
        assert!(rel(m.offset_sq, 10.0) < 1e-6);
        assert!(rel(m.pairwise_sq, 2.4) < 1e-6);
        assert!(rel(m.displacement, 2.0) < 1e-6);

        let lim = stationary_limits(&params(2, 1.0, 0.0, 1.0, 2.0)).unwrap();
        assert!(rel(lim.exact.offset_sq, 2.0) < 1e-15);
        assert!(rel(lim.exact.pairwise_sq, 0.8) < 1e-15);
        assert_eq!(lim.exact.displacement, 0.0);
        assert!(rel(lim.asymptotic.offset_sq, 2.0) < 1e-15);
        assert!(rel(lim.asymptotic.pairwise_sq, 4.0 / 3.0) < 1e-15);
    }

    #[test]
    fn stationary_noise_free_and_scaling() {
        // Without noise the skew alone keeps R away from zero.
        let p = params(10, 0.0, 0.2, 1.5, 0.5);
        let lim = stationary_limits(&p).unwrap();
        let l1 = -1.5 / 10.0;
        assert!(rel(lim.exact.offset_sq, 2.0 * 0.04 / (l1 * l1)) < 1e-14);
        // R(inf) / N^2 -> 2 (v - r)^2 / alpha^2.
        let n = 10_000_000;
        let lim = stationary_limits(&params(n, 1.0, 0.2, 1.5, 0.5)).unwrap();
        let ratio = lim.exact.offset_sq / (n as f64).powi(2);
        assert!(rel(ratio, 2.0 * 0.04 / 2.25) < 1e-4);
        assert!(matches!(
            stationary_limits(&params(3, 1.0, 0.0, 0.0, 1.0)),
            Err(Error::NoStationaryLimit)
        ));
    }

    #[test]
    fn closed_form_matches_augmented_oracle() {
        let cases = [
            (params(2, 1.0, 1.0, 1.0, 2.0), MomentVector::ZERO),
            (params(50, 0.5, 0.1, 2.0, 1.0), MomentVector::new(0.3, 0.2, 0.1)),
            (params(3, 0.0, -0.7, 0.3, 0.0), MomentVector::new(1.0, 0.5, -1.0)),
            (params(4, 1.0, 0.4, 0.0, 0.8), MomentVector::new(0.0, 0.0, 2.0)),
            (params(1, 0.9, 0.4, 1.2, 0.0), MomentVector::new(1.0, 0.0, 0.5)),
        ];
        for (p, init) in cases {
            for t in [0.01, 0.3, 2.0, 17.0, 120.0] {
                let m = moments_closed_form(&p, init, t).unwrap();
                let o = augmented_oracle(&p, init, t);
                let want_d = if p.n > 1 { o[1] } else { 0.0 };
                assert!(rel(m.offset_sq, o[0]) < 1e-11, "{p:?} t={t}: {m:?} vs {o:?}");
                assert!(rel(m.pairwise_sq, want_d) < 1e-11, "{p:?} t={t}: {m:?} vs {o:?}");
                assert!(rel(m.displacement, o[2]) < 1e-12);
            }
        }
    }

    #[test]
    fn remark_form_matches_eigenbasis_form() {
        let cases = [
            params(2, 1.0, 1.0, 1.0, 2.0),
            params(5, 0.3, -0.8, 2.5, 0.7),
            params(12, 1.7, 0.05, 4.0, 3.0),
            params(3, 0.6, 2.0, 0.9, 0.1),
        ];
        let init = MomentVector::new(1.5, 0.4, 0.9);
        for p in cases {
            let n = p.n as f64;
            for lt in [0.7, 2.0, 6.0] {
                let t = lt * n / p.alpha;
                let a = moments_closed_form(&p, init, t).unwrap();
                let b = moments_eigenbasis_form(&p, init, t).unwrap();
                assert!(rel(a.offset_sq, b.offset_sq) < 1e-13, "{p:?} {t}");
                assert!(rel(a.pairwise_sq, b.pairwise_sq) < 1e-13, "{p:?} {t}");
            }
        }
    }

    #[test]
    fn displacement_examples() {
        let p = params(2, 1.0, 1.0, 1.0, 0.0);
        assert_eq!(d_closed_form(&p, 0.7, 0.0), 0.7);
        assert!(rel(d_closed_form(&p, 0.0, 2.0), 2.0 * (1.0 - (-1.0f64).exp())) < 1e-15);
        let p0 = params(3, 1.0, 0.25, 0.0, 1.0);
        assert!(rel(d_closed_form(&p0, 1.0, 8.0), 3.0) < 1e-15);
    }

    #[test]
    fn displacement_solves_its_ode() {
        let p = params(4, 1.0, 0.6, 1.3, 0.0);
        let d0 = -0.4;
        let h = 1e-4;
        for t in [0.5, 3.0, 20.0] {
            let deriv = (d_closed_form(&p, d0, t + h) - d_closed_form(&p, d0, t - h)) / (2.0 * h);
            let rhs = -1.3 / 4.0 * d_closed_form(&p, d0, t) + 0.6;
            assert!((deriv - rhs).abs() <= 1e-8, "{deriv} vs {rhs}");
        }
    }

    #[test]
    fn ode_fixed_point_and_agreement() {
        let p = params(2, 1.0, 1.0, 1.0, 2.0);
        let s = derived_scalars(&p).unwrap();
        let lim = stationary_limits(&p).unwrap().exact;
        let dv = ode_derivative(&s, lim.quadratic(), lim.displacement);
        assert!(dv.norm() <= 1e-10, "{dv:?}");

        let grid: Vec<f64> = (0..200).map(|i| 50.0 * i as f64 / 199.0).collect();
        let ode = ode_moments(&p, MomentVector::ZERO, &grid).unwrap();
        for (t, m) in grid.iter().zip(&ode) {
            let c = moments_closed_form(&p, MomentVector::ZERO, *t).unwrap();
            assert!(rel(m.offset_sq, c.offset_sq) <= 1e-8);
            assert!(rel(m.pairwise_sq, c.pairwise_sq) <= 1e-8);
        }
        assert!(ode_moments(&p, MomentVector::ZERO, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn ode_homogeneous_decay() {
        let p = params(3, 0.0, 0.0, 1.0, 0.5);
        let s = derived_scalars(&p).unwrap();
        let init = MomentVector::new(2.0, 1.0, 0.0);
        let out = ode_moments(&p, init, &[1.5, 4.0]).unwrap();
        for (t, m) in [1.5, 4.0].iter().zip(out) {
            let want = exp_l(&s, *t) * init.quadratic();
            assert!(rel(m.offset_sq, want[0]) < 1e-10);
            assert!(rel(m.pairwise_sq, want[1]) < 1e-10);
        }
    }

    #[test]
    fn monotone_stabilization() {
        let p = params(4, 0.8, 0.3, 1.0, 0.5);
        let lim = stationary_limits(&p).unwrap().exact;
        let t0 = 10.0 * 4.0;
        let dist = |t: f64| {
            let m = moments_closed_form(&p, MomentVector::ZERO, t).unwrap();
            (m.offset_sq - lim.offset_sq).abs() + (m.pairwise_sq - lim.pairwise_sq).abs()
        };
        let mut prev = dist(t0);
        for k in 1..50 {
            let cur = dist(t0 + k as f64 * 3.0);
            assert!(cur <= prev + 1e-12);
            prev = cur;
        }
    }

    fn poisson_pmf(lambda: f64, nmax: usize) -> Vec<f64> {
        let mut p = vec![(-lambda).exp()];
        for n in 1..=nmax {
            let prev = p[n - 1];
            p.push(prev * lambda / n as f64);
        }
        p
    }

    #[test]
    fn poisson_identities_scalar_series() {
        let (a, delta, t) = (0.9f64, 5.0, 2.0);
        let pm = poisson_pmf(delta * t, 200);
        let mut s = [0.0; 3];
        for (n, pn) in pm.iter().enumerate() {
            let nf = n as f64;
            s[0] += pn * a.powi(n as i32);
            s[1] += pn * t * a.powi(n as i32 + 1) / (nf + 1.0);
            s[2] += pn * t * t * a.powi(n as i32 + 2) / ((nf + 1.0) * (nf + 2.0));
        }
        let got = poisson_power_expectation(a, delta, t).unwrap();
        assert!(rel(got.power, s[0]) < 1e-12);
        assert!(rel(got.shifted1, s[1]) < 1e-12);
        assert!(rel(got.shifted2, s[2]) < 1e-12);
    }

    #[test]
    fn poisson_identities_special_values() {
        let got = poisson_power_expectation(1.0, 3.0, 2.0).unwrap();
        assert_eq!(got.power, 1.0);
        assert!(rel(got.shifted1, (1.0 - (-6.0f64).exp()) / 3.0) < 1e-15);
        let got = poisson_power_expectation(0.0, 3.0, 2.0).unwrap();
        assert!(rel(got.power, (-6.0f64).exp()) < 1e-15);
        assert_eq!(got.shifted1, 0.0);
        let m = poisson_power_expectation_matrix(&Matrix2::identity(), 3.0, 2.0).unwrap();
        assert_eq!(m.power, Matrix2::identity());
        assert!(poisson_power_expectation(0.5, 0.0, 1.0).is_err());
        assert!(poisson_power_expectation_matrix(&Matrix2::new(1.0, 1.0, 0.0, 1.0), 1.0, 1.0).is_err());
    }

    #[test]
    fn poisson_identities_matrix_series() {
        let a = Matrix2::new(0.9, 0.0, 0.35, 0.2);
        let (delta, t) = (4.0, 1.5);
        let pm = poisson_pmf(delta * t, 200);
        let mut s = [Matrix2::zeros(); 3];
        let mut an = Matrix2::identity();
        for (n, pn) in pm.iter().enumerate() {
            let nf = n as f64;
            s[0] += *pn * an;
            s[1] += *pn * t / (nf + 1.0) * an * a;
            s[2] += *pn * t * t / ((nf + 1.0) * (nf + 2.0)) * an * a * a;
            an *= a;
        }
        let got = poisson_power_expectation_matrix(&a, delta, t).unwrap();
        for (g, w) in [(got.power, s[0]), (got.shifted1, s[1]), (got.shifted2, s[2])] {
            assert!((g - w).abs().max() < 1e-12 * w.abs().max(), "{g} vs {w}");
        }
    }

    #[test]
    fn u_functions_examples() {
        assert_eq!(u_functions(0.3, 0.6, 2.0, 0.0).unwrap(), (0.0, 0.0));
        let (a, delta, t) = (0.7, 3.0, 1.2);
        let (u1, _) = u_functions(a, a, delta, t).unwrap();
        assert!(rel(u1, t * (-(1.0 - a) * delta * t).exp()) < 1e-15);
        assert!(u_functions(0.0, 0.5, 1.0, 1.0).is_err());
        assert!(u_functions(0.5, 1.0, 1.0, 1.0).is_err());

        // Explicit expressions at well separated arguments.
        let (a1, a2, delta, t) = (0.9, 0.8, 5.0, 2.0);
        let (u1, u2) = u_functions(a1, a2, delta, t).unwrap();
        let e1 = (-(1.0 - a1) * delta * t).exp();
        let e2 = (-(1.0 - a2) * delta * t).exp();
        let want1 = (e1 - e2) / (delta * (a1 - a2));
        let want2 = (1.0 / ((1.0 - a1) * (1.0 - a2)) - (e1 / (1.0 - a1) - e2 / (1.0 - a2)) / (a1 - a2)) / (delta * delta);
        assert!(rel(u1, want1) < 1e-13);
        assert!(rel(u2, want2) < 1e-12);
    }

    #[test]
    fn u_functions_continuous_across_threshold() {
        let (a, delta, t) = (0.55, 2.0, 3.0);
        let below = u_functions(a, a + 0.999e-9, delta, t).unwrap();
        let above = u_functions(a, a + 1.001e-9, delta, t).unwrap();
        assert!((below.0 - above.0).abs() <= 1e-9);
        assert!((below.1 - above.1).abs() <= 1e-9);
    }

    #[test]
    fn h_function_limits() {
        let (hr, hd) = h_functions(1e-4, 1.0, 0.5).unwrap();
        assert!((hr - 0.5).abs() < 1e-4);
        assert!(rel(hd, 1e-4 / 3.0) < 1e-3);
        let c = 1e3;
        let (hr, hd) = h_functions(c, 2.0, 1.0).unwrap();
        assert!((hr * c * c - 0.25).abs() < 1e-6);
        assert!(rel(hd * c * c, 1.0 / (2.0 * 3.0)) < 1e-6);
        let (hr, _) = h_functions(1e-8, 1.0, 0.0).unwrap();
        assert!((hr - 0.5).abs() < 1e-8);
        assert!(h_functions(0.0, 1.0, 1.0).is_err());
        assert!(h_functions(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn h_d_forms_agree() {
        // H(g2, c) straight from its definition.
        let def = |c: f64, alpha: f64, beta: f64| {
            let y = -alpha * c;
            let z = -2.0 * (alpha + beta) * c;
            (divided_difference(g2, g2_prime, y, z) - g2_prime(y)) * (-2.0 * alpha / (alpha + 2.0 * beta))
        };
        let (_, hd) = h_functions(1.0, 1.0, 0.0).unwrap();
        assert!(rel(hd, def(1.0, 1.0, 0.0)) < 1e-12);
        assert!(rel(hd, h_d_explicit(1.0, 1.0, 0.0)) < 1e-12);
        for &(c, a, b) in &[(0.5, 2.0, 1.0), (3.0, 0.7, 2.2), (1.7, 1.0, 0.3)] {
            let (_, hd) = h_functions(c, a, b).unwrap();
            assert!(rel(hd, def(c, a, b)) < 1e-11);
            assert!(rel(hd, h_d_explicit(c, a, b)) < 1e-11);
        }
    }

    #[test]
    fn regime_flag() {
        assert_eq!(regime(&params(3, 1.0, 0.1, 0.0, 1.0)), Regime::Unbounded);
        assert_eq!(regime(&params(3, 1.0, 0.1, 1.0, 1.0)), Regime::Stationary);
        // Unbounded regime still yields finite values.
        let m = moments_closed_form(&params(3, 1.0, 0.1, 0.0, 1.0), MomentVector::ZERO, 1e3).unwrap();
        assert!(m.offset_sq.is_finite() && m.pairwise_sq.is_finite());
    }
}
