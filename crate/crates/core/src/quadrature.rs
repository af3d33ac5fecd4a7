//! Gauss–Legendre rules and the time-weight integrals used by the integrators.

use std::f64::consts::FRAC_PI_4;
use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// Eight-point Gauss–Legendre estimate of `\int_a^b f`.
pub fn gauss8<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule8();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    nodes.iter().zip(weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Recursive bisection until whole-panel and two-half estimates agree to `tol`.
pub fn adaptive_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (gauss8(f, a, m), gauss8(f, m, b));
        if depth == 0 || (l + r - whole).abs() <= tol.max(4.0 * f64::EPSILON * (l + r).abs()) {
            l + r
        } else {
            rec(f, a, m, l, 0.5 * tol, depth - 1) + rec(f, m, b, r, 0.5 * tol, depth - 1)
        }
    }
    rec(f, a, b, gauss8(f, a, b), tol, 30)
}

/// `\int_a^b tau^{-alpha} d tau` in closed form, `a, b > 0`.
pub fn power_weight_integral(a: f64, b: f64, alpha: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if alpha == 1.0 {
        (b / a).ln()
    } else {
        let e = 1.0 - alpha;
        (b.powf(e) - a.powf(e)) / e
    }
}

/// Integrand of `\int sin(2 sigma)^{-alpha} d sigma` after `sigma = r^q`, `q = 1/(1 - alpha)`.
fn regularised_cos_integrand(r: f64, alpha: f64) -> f64 {
    let q = 1.0 / (1.0 - alpha);
    let sigma = r.powf(q);
    let u = 2.0 * sigma;
    let sinc = if u < 1e-8 { 1.0 - u * u / 6.0 } else { u.sin() / u };
    q * 2f64.powf(-alpha) * sinc.powf(-alpha)
}

fn cos_weight_integral_nonneg(a: f64, b: f64, alpha: f64, adaptive: bool) -> f64 {
    // a <= b in [0, pi/4]
    if alpha > 0.0 && alpha < 1.0 {
        let e = 1.0 - alpha;
        let (ra, rb) = ((FRAC_PI_4 - b).max(0.0).powf(e), (FRAC_PI_4 - a).max(0.0).powf(e));
        let f = |r: f64| regularised_cos_integrand(r, alpha);
        if adaptive {
            adaptive_gauss(&f, ra, rb, 1e-15)
        } else {
            gauss8(f, ra, rb)
        }
    } else {
        let f = |tau: f64| (2.0 * tau).cos().powf(-alpha);
        if adaptive {
            adaptive_gauss(&f, a, b, 1e-15)
        } else {
            gauss8(f, a, b)
        }
    }
}

fn cos_weight_oriented(a: f64, b: f64, alpha: f64, adaptive: bool) -> f64 {
    if a > b {
        return -cos_weight_oriented(b, a, alpha, adaptive);
    }
    if b <= 0.0 {
        return cos_weight_integral_nonneg(-b, -a, alpha, adaptive);
    }
    if a < 0.0 {
        return cos_weight_integral_nonneg(0.0, -a, alpha, adaptive) + cos_weight_integral_nonneg(0.0, b, alpha, adaptive);
    }
    cos_weight_integral_nonneg(a, b, alpha, adaptive)
}

/// `\int_a^b cos(2 tau)^{-alpha} d tau` on `(-pi/4, pi/4)` with one 8-node panel
/// in a variable that removes the endpoint singularity when `0 < alpha < 1`.
pub fn cos_weight_integral(a: f64, b: f64, alpha: f64) -> f64 {
    cos_weight_oriented(a, b, alpha, false)
}

/// Adaptive version of [`cos_weight_integral`] for long intervals.
pub fn cos_weight_integral_adaptive(a: f64, b: f64, alpha: f64) -> f64 {
    cos_weight_oriented(a, b, alpha, true)
}
