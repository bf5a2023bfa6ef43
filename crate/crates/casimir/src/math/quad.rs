//! Quadrature rules: fixed Gauss–Legendre panels and adaptive Simpson.

/// 24-point Gauss–Legendre nodes and weights on [-1, 1].
///
/// Generated by Newton iteration on the Legendre polynomial; the closure
/// below reproduces them at first use so no table needs to be vendored.
fn gl24() -> &'static ([f64; 24], [f64; 24]) {
    use once_cell::sync::OnceCell;
    static CELL: OnceCell<([f64; 24], [f64; 24])> = OnceCell::new();
    CELL.get_or_init(|| {
        let n = 24usize;
        let mut xs = [0.0; 24];
        let mut ws = [0.0; 24];
        for i in 0..n {
            // Chebyshev initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0f64, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            xs[n - 1 - i] = x;
            ws[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (xs, ws)
    })
}

/// Integrate `f` over `[a, b]` with a single 24-point Gauss–Legendre rule.
pub fn gauss24(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (xs, ws) = gl24();
    let c = 0.5 * (b + a);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..24 {
        s += ws[i] * f(c + h * xs[i]);
    }
    s * h
}

/// Integrate `f` over `[a, b]` split into `n` equal Gauss–Legendre panels.
pub fn gauss24_panels(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| gauss24(&f, a + i as f64 * h, a + (i + 1) as f64 * h))
        .sum()
}

/// Adaptive Simpson integration to absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    rec(&f, a, b, fa, fm, fb, whole, tol, 40)
}
