//! Shared numerical primitives: compensated summation, quadrature rules,
//! low-discrepancy sampling, 1-D optimization and root finding.

use std::collections::HashMap;
use std::sync::Mutex;
use std::sync::OnceLock;

/// Neumaier-compensated sum over a fixed iteration order.
///
/// All big reductions in the crate go through this so results are
/// bit-stable run to run regardless of magnitude spread.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator in its natural order.
pub fn csum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Gauss–Legendre nodes and weights on [0, 1].
///
/// Nodes are computed by Newton iteration on the Legendre polynomial and
/// cached per order; exact for polynomials of degree <= 2n-1.
pub fn gauss_legendre_01(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard.entry(n).or_insert_with(|| {
        let rule = Box::new(compute_gauss_legendre_01(n));
        Box::leak(rule)
    })
}

fn compute_gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Initial guess on [-1, 1], then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1]; reverse so nodes come out increasing.
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
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
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrate f over [a, b] with an n-point Gauss–Legendre rule.
pub fn gl_integrate(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre_01(n);
    let mut acc = KahanSum::new();
    for (x, w) in nodes.iter().zip(weights) {
        acc.add(w * f(a + (b - a) * x));
    }
    (b - a) * acc.value()
}

/// Composite-Simpson weights for n_intervals uniform intervals of width h.
///
/// Odd interval counts get a 3/8 panel at the end so second-order accuracy
/// is kept for any n >= 3.
pub fn simpson_weights(n_intervals: usize, h: f64) -> Vec<f64> {
    assert!(n_intervals >= 2, "need at least two intervals");
    let n = n_intervals;
    let mut w = vec![0.0; n + 1];
    let simpson_panels = if n % 2 == 0 { n / 2 } else { (n - 3) / 2 };
    for p in 0..simpson_panels {
        let i = 2 * p;
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if n % 2 == 1 {
        let i = n - 3;
        w[i] += 3.0 * h / 8.0;
        w[i + 1] += 9.0 * h / 8.0;
        w[i + 2] += 9.0 * h / 8.0;
        w[i + 3] += 3.0 * h / 8.0;
    }
    w
}

/// Radical-inverse (van der Corput) in the given base.
fn radical_inverse(base: u64, mut i: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// k-th point of the Halton sequence in the given bases (prefixes nest).
pub fn halton(k: u64, bases: &[u64]) -> Vec<f64> {
    bases.iter().map(|&b| radical_inverse(b, k + 1)).collect()
}

/// k-th Halton point mapped uniformly into the ball of radius `r`.
pub fn halton_ball(k: u64, r: f64) -> [f64; 3] {
    let h = halton(k, &[2, 3, 5]);
    let rad = r * h[0].cbrt();
    let z = 2.0 * h[1] - 1.0;
    let phi = 2.0 * std::f64::consts::PI * h[2];
    let s = (1.0 - z * z).max(0.0).sqrt();
    [rad * s * phi.cos(), rad * s * phi.sin(), rad * z]
}

/// k-th Halton point mapped area-uniformly onto the sphere of radius `r`.
pub fn halton_sphere(k: u64, r: f64) -> [f64; 3] {
    let h = halton(k, &[2, 3]);
    let z = 1.0 - 2.0 * h[0];
    let phi = 2.0 * std::f64::consts::PI * h[1];
    let s = (1.0 - z * z).max(0.0).sqrt();
    [r * s * phi.cos(), r * s * phi.sin(), r * z]
}

/// Golden-section maximization of f on [a, b] to relative x-tolerance.
pub fn golden_max(mut a: f64, mut b: f64, rel_tol: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    (x, fx)
}

/// Bisection on a bracketed sign change to relative tolerance.
pub fn bisect(mut a: f64, mut b: f64, rel_tol: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= rel_tol * m.abs().max(1e-300) {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa > 0.0) == (fm > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Least-squares line y = slope*x + intercept; returns (slope, intercept, rms residual).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = csum(xs.iter().copied()) / n;
    let my = csum(ys.iter().copied()) / n;
    let sxy = csum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = csum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss = csum(
        xs.iter()
            .zip(ys)
            .map(|(x, y)| (y - slope * x - intercept).powi(2)),
    );
    (slope, intercept, (rss / n).sqrt())
}

/// FNV-1a hash of a byte string, used to fingerprint configs and fields.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        // n-point rule integrates degree 2n-1 exactly.
        for n in [2usize, 4, 8, 16] {
            let deg = 2 * n - 1;
            let exact = 1.0 / (deg as f64 + 1.0);
            let got = gl_integrate(0.0, 1.0, n, |s| s.powi(deg as i32));
            assert!((got - exact).abs() < 1e-14, "n={n} got={got} exact={exact}");
        }
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        for n in [8usize, 9, 12, 15] {
            let h = 1.0 / n as f64;
            let w = simpson_weights(n, h);
            let got: f64 = w
                .iter()
                .enumerate()
                .map(|(i, wi)| wi * (i as f64 * h).powi(3))
                .sum();
            assert!((got - 0.25).abs() < 1e-13, "n={n} got={got}");
        }
    }

    #[test]
    fn halton_prefixes_nest() {
        let a: Vec<[f64; 3]> = (0..16).map(|k| halton_ball(k, 2.0)).collect();
        let b: Vec<[f64; 3]> = (0..64).map(|k| halton_ball(k, 2.0)).collect();
        assert_eq!(&a[..], &b[..16]);
        for p in &b {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!(r <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn golden_finds_parabola_max() {
        // Comparison-based search localizes a smooth max to about
        // sqrt(machine eps) in x, and the value to machine accuracy.
        let (x, fx) = golden_max(0.0, 3.0, 1e-12, |s| -(s - 1.25) * (s - 1.25) + 7.0);
        assert!((x - 1.25).abs() < 1e-6);
        assert!((fx - 7.0).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(0.0, 2.0, 1e-12, |x| x * x - 2.0);
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-10);
    }
}
