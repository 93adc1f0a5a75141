//! Gauss-Legendre rules on an interval.

use std::sync::OnceLock;

/// Nodes and weights of the `order`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The 32-point rule, computed once.
pub fn gauss_legendre_32() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(32))
}

/// Composite 32-point Gauss-Legendre integration over `panels` equal panels of [lo, hi].
/// Returns the abscissae and weights so callers can evaluate several integrands at once.
pub fn composite_points(lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre_32();
    let width = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * x.len());
    for p in 0..panels {
        let a = lo + p as f64 * width;
        let mid = a + 0.5 * width;
        for (xi, wi) in x.iter().zip(w) {
            out.push((mid + 0.5 * width * xi, 0.5 * width * wi));
        }
    }
    out
}

/// Composite rule for integrands that behave like `(x - lo)^power` near
/// `lo`. For `0 < power < 1` the variable is mapped as
/// `x = lo + (hi - lo) t^m` with `m = ceil(1 / power)`, so the endpoint
/// factor becomes `t^(m power)` with `m power >= 1`.
pub fn graded_points(lo: f64, hi: f64, panels: usize, power: f64) -> Vec<(f64, f64)> {
    if !(power > 0.0 && power < 1.0) {
        return composite_points(lo, hi, panels);
    }
    let m = (1.0 / power).ceil().min(64.0);
    let span = hi - lo;
    composite_points(0.0, 1.0, panels)
        .into_iter()
        .map(|(t, w)| (lo + span * t.powf(m), w * span * m * t.powf(m - 1.0)))
        .collect()
}
