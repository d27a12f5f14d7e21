#![allow(dead_code)]

use statrs::distribution::{Binomial, DiscreteCDF};

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 36)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
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
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // the first levels are always split so narrow peaks are not missed
    if depth == 0 || (depth < 44 && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_ℝ f` through `x = t / (1 - t²)`.
pub fn integrate_line<F: Fn(f64) -> f64>(f: &F, tol: f64) -> f64 {
    let g = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        let x = t / d;
        let v = f(x) * (1.0 + t * t) / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // split at the origin so kinks there fall on a panel edge
    simpson(&g, -1.0, 0.0, 0.5 * tol) + simpson(&g, 0.0, 1.0, 0.5 * tol)
}

/// `∫_ℝ² f` in polar coordinates, `r = s / (1 - s)`.
pub fn integrate_plane<F: Fn(f64, f64) -> f64>(f: &F, tol: f64) -> f64 {
    let radial = |theta: f64| {
        let (sn, cs) = theta.sin_cos();
        let g = |s: f64| {
            if s >= 1.0 {
                return 0.0;
            }
            let r = s / (1.0 - s);
            let v = f(r * cs, r * sn) * r / ((1.0 - s) * (1.0 - s));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        simpson(&g, 0.0, 1.0, tol * 1e-2)
    };
    let tau = std::f64::consts::TAU;
    (0..8)
        .map(|k| simpson(&radial, tau * k as f64 / 8.0, tau * (k + 1) as f64 / 8.0, tol / 8.0))
        .sum()
}

/// `P(X ≥ k)` for `X ~ Binomial(n, ½)`.
pub fn sign_test_p(k: u64, n: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, n).unwrap();
    1.0 - b.cdf(k - 1)
}

/// Asymptotic Kolmogorov–Smirnov p-value for statistic `d` on `n` samples.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// KS distance between `samples` and the CDF `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let c = cdf(x);
        d = d.max(c - i as f64 / n).max((i + 1) as f64 / n - c);
    }
    d
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
