//! Exponential-type scalar functions and their divided differences.
//!
//! The closed forms for the moments are built from `g1(y) = e^y`,
//! `g2(y) = (e^y - 1)/y` and divided differences of the two at arguments
//! `lambda_i t`. All evaluations switch to Taylor series when every argument
//! is small and otherwise use product-rule identities that never divide by a
//! small number.

/// Threshold below which all-small arguments are summed as power series.
const SERIES_RADIUS: f64 = 1.0;
/// Enough terms for full double precision inside `SERIES_RADIUS`.
const SERIES_TERMS: usize = 32;

/// Taylor coefficients `1/(m + shift)!`.
fn shifted_inverse_factorials(shift: usize) -> [f64; SERIES_TERMS] {
    let mut c = [0.0; SERIES_TERMS];
    let mut f = 1.0;
    for k in 2..=shift {
        f *= k as f64;
    }
    for (m, cm) in c.iter_mut().enumerate() {
        if m > 0 {
            f *= (m + shift) as f64;
        }
        *cm = 1.0 / f;
    }
    c
}

fn horner(c: &[f64], y: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &cm| acc * y + cm)
}

/// `g1(y) = e^y`.
pub fn g1(y: f64) -> f64 {
    y.exp()
}

/// `phi_k(y) = (e^y - sum_{j<k} y^j/j!) / y^k`, for k = 0..=3.
pub fn phi(k: usize, y: f64) -> f64 {
    assert!(k <= 3, "phi_k implemented for k <= 3");
    if k == 0 {
        return y.exp();
    }
    if y.abs() < SERIES_RADIUS {
        return horner(&shifted_inverse_factorials(k), y);
    }
    let em1 = y.exp_m1();
    match k {
        1 => em1 / y,
        2 => (em1 - y) / (y * y),
        _ => (em1 - y - 0.5 * y * y) / (y * y * y),
    }
}

/// `g2(y) = (e^y - 1)/y`, with `g2(0) = 1`.
pub fn g2(y: f64) -> f64 {
    phi(1, y)
}

/// `phi_2(y) = (e^y - 1 - y)/y^2`, with `phi_2(0) = 1/2`.
pub fn phi2(y: f64) -> f64 {
    phi(2, y)
}

/// Derivative of `g2`: `(1 + (y - 1) e^y) / y^2`, with value 1/2 at 0.
pub fn g2_prime(y: f64) -> f64 {
    if y.abs() < SERIES_RADIUS {
        // sum_m y^m / (m! (m + 2))
        let mut term = 1.0;
        let mut acc = 0.0;
        for m in 0..SERIES_TERMS {
            if m > 0 {
                term *= y / m as f64;
            }
            acc += term / (m + 2) as f64;
        }
        return acc;
    }
    (1.0 + (y - 1.0) * y.exp()) / (y * y)
}

/// Plain divided difference `(g(z) - g(y))/(z - y)`, falling back to the
/// derivative at coincident points.
pub fn divided_difference(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, y: f64, z: f64) -> f64 {
    if y == z {
        dg(y)
    } else {
        (g(z) - g(y)) / (z - y)
    }
}

/// `exp[y, z]`.
pub fn exp_dd(y: f64, z: f64) -> f64 {
    y.exp() * phi(1, z - y)
}

/// `exp[y, y, z]`.
pub fn exp_dd2(y: f64, z: f64) -> f64 {
    y.exp() * phi(2, z - y)
}

/// Complete homogeneous symmetric polynomials `h_j(y, z)`, j < SERIES_TERMS.
fn homogeneous_2(y: f64, z: f64) -> [f64; SERIES_TERMS] {
    let mut h = [0.0; SERIES_TERMS];
    let mut yj = 1.0;
    h[0] = 1.0;
    for j in 1..SERIES_TERMS {
        yj *= y;
        h[j] = z * h[j - 1] + yj;
    }
    h
}

/// `h_j(y, y, z)`.
fn homogeneous_3(y: f64, z: f64) -> [f64; SERIES_TERMS] {
    let mut h = [0.0; SERIES_TERMS];
    let mut yj = 1.0;
    h[0] = 1.0;
    for j in 1..SERIES_TERMS {
        yj *= y;
        h[j] = z * h[j - 1] + (j + 1) as f64 * yj;
    }
    h
}

/// `g2[y, z]`, the first divided difference of `g2`.
pub fn g2_dd(y: f64, z: f64) -> f64 {
    if y == z {
        return g2_prime(y);
    }
    if y.abs().max(z.abs()) < SERIES_RADIUS {
        let c = shifted_inverse_factorials(1);
        let h = homogeneous_2(y, z);
        return (1..SERIES_TERMS).rev().map(|m| c[m] * h[m - 1]).sum();
    }
    // (x g2(x))[x0, x1] = exp[x0, x1] = g2(x0) + x1 g2[x0, x1]
    let (x0, x1) = if z.abs() >= y.abs() { (y, z) } else { (z, y) };
    (exp_dd(x0, x1) - g2(x0)) / x1
}

/// `g2[y, y, z]`, the second divided difference of `g2` with `y` doubled.
pub fn g2_dd2(y: f64, z: f64) -> f64 {
    if y.abs().max(z.abs()) < SERIES_RADIUS {
        let c = shifted_inverse_factorials(1);
        let h = homogeneous_3(y, z);
        return (2..SERIES_TERMS).rev().map(|m| c[m] * h[m - 2]).sum();
    }
    if z.abs() >= y.abs() {
        // (x g2)[y, y, z] = g2'(y) + z g2[y, y, z]
        (exp_dd2(y, z) - g2_prime(y)) / z
    } else {
        // (x g2)[z, y, y] = g2[z, y] + y g2[y, y, z]
        (exp_dd2(y, z) - g2_dd(z, y)) / y
    }
}

/// `f[x, y]` for `f(x) = e^x - 1 - x`.
pub fn expm1mx_dd(x: f64, y: f64) -> f64 {
    // exp[a, b] - 1 = expm1(a) g2(b - a) + (b - a) phi2(b - a); choosing the
    // base point so both terms share a sign.
    let (a, b) = if x >= 0.0 && y >= 0.0 {
        (x.min(y), x.max(y))
    } else {
        (x.max(y), x.min(y))
    };
    let h = b - a;
    a.exp_m1() * g2(h) + h * phi2(h)
}
