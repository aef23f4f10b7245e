//! One-dimensional search primitives shared by the minimizers and root finders.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping once the
/// bracket is narrower than `tol`. Returns `(x, f(x))`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 300 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    // the returned point is the best among the final probes
    [(mid, fm), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap()
}

/// Uniform grid of `points` abscissae on `[a, b]` (endpoints included).
pub fn grid(a: f64, b: f64, points: usize) -> impl Iterator<Item = f64> {
    let n = points.max(2);
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(move |k| if k == n - 1 { b } else { a + step * k as f64 })
}

/// Global minimum of `f` on `[a, b]`: a dense scan with `points` samples
/// brackets the best sample, then golden-section search refines it to `tol`.
pub fn scan_minimize<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: usize, tol: f64) -> (f64, f64) {
    if b - a <= tol {
        let m = 0.5 * (a + b);
        return (m, f(m));
    }
    let xs: Vec<f64> = grid(a, b, points).collect();
    let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(k, _)| k)
        .unwrap();
    let lo = xs[best.saturating_sub(1)];
    let hi = xs[(best + 1).min(xs.len() - 1)];
    let refined = golden_section(&f, lo, hi, tol);
    if refined.1 <= values[best] {
        refined
    } else {
        (xs[best], values[best])
    }
}

/// Indices of strict interior local minima of a sampled sequence; plateaus
/// count once.
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = values.len();
    let mut k = 1;
    while k + 1 < n {
        if values[k] < values[k - 1] {
            let mut j = k;
            while j + 1 < n && values[j + 1] == values[k] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] > values[k] {
                out.push(k);
            }
            k = j + 1;
        } else {
            k += 1;
        }
    }
    out
}

/// Bisection for a sign change of `f` on `[a, b]`. Assumes `f(a)` and `f(b)`
/// have opposite signs (or one is zero) and runs until the bracket stops
/// shrinking or is narrower than `tol`. Returns the final bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return (m, m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scan_escapes_local_minimum() {
        // two wells, the deeper one on the right
        let f = |x: f64| (x * x - 1.0).powi(2) - 0.2 * x;
        let (x, _) = scan_minimize(f, -2.0, 2.0, 2001, 1e-12);
        assert!(x > 0.9 && x < 1.1);
    }

    #[test]
    fn bisect_brackets_root() {
        let (a, b) = bisect(|x| x.cos() - x, 0.0, 1.0, 1e-15);
        assert!((a - 0.739_085_133_215_160_6).abs() < 1e-14);
        assert!(b - a < 1e-14);
    }

    #[test]
    fn local_minima_counts_plateaus_once() {
        assert_eq!(local_minima(&[3.0, 1.0, 1.0, 2.0, 0.5, 4.0]), vec![1, 4]);
        assert!(local_minima(&[1.0, 2.0, 3.0]).is_empty());
    }

    #[test]
    fn grid_hits_endpoints() {
        let g: Vec<f64> = grid(0.1, 0.7, 7).collect();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[6], 0.7);
    }
}
