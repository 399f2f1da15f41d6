//! Independent reference methods used to cross-check the main solvers:
//! golden-section line search, a small Nelder-Mead simplex, and dense scans.
//! These deliberately avoid the Newton/assembly code paths they are used to
//! verify.

/// Golden-section minimization of a unimodal function on [a, b].
/// Returns (argmin, min).
pub fn golden_min(a: f64, b: f64, tol: f64, f: &impl Fn(f64) -> f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
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
    (x, f(x))
}

/// Golden-section maximization on [a, b].
pub fn golden_max(a: f64, b: f64, tol: f64, f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let (x, v) = golden_min(a, b, tol, &|t| -f(t));
    (x, -v)
}

/// Derivative-free Nelder-Mead simplex minimization. Deterministic given the
/// starting point; good enough as an oracle on the <= 3-dimensional problems
/// it is used for.
pub fn nelder_mead(
    f: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    max_iter: usize,
    ftol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += scale;
        simplex.push(v);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|x| f(x)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..max_iter {
        // order
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fvals[a].partial_cmp(&fvals[b]).unwrap());
        let ordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let fordered: Vec<f64> = idx.iter().map(|&i| fvals[i]).collect();
        simplex = ordered;
        fvals = fordered;

        if (fvals[n] - fvals[0]).abs() <= ftol * (1.0 + fvals[0].abs()) {
            break;
        }
        // centroid of all but worst
        let mut cen = vec![0.0; n];
        for v in simplex.iter().take(n) {
            for i in 0..n {
                cen[i] += v[i] / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let refl: Vec<f64> = (0..n).map(|i| cen[i] + alpha * (cen[i] - worst[i])).collect();
        let frefl = f(&refl);
        if frefl < fvals[0] {
            let exp: Vec<f64> = (0..n).map(|i| cen[i] + gamma * (refl[i] - cen[i])).collect();
            let fexp = f(&exp);
            if fexp < frefl {
                simplex[n] = exp;
                fvals[n] = fexp;
            } else {
                simplex[n] = refl;
                fvals[n] = frefl;
            }
        } else if frefl < fvals[n - 1] {
            simplex[n] = refl;
            fvals[n] = frefl;
        } else {
            let con: Vec<f64> = (0..n).map(|i| cen[i] + rho * (worst[i] - cen[i])).collect();
            let fcon = f(&con);
            if fcon < fvals[n] {
                simplex[n] = con;
                fvals[n] = fcon;
            } else {
                // shrink toward best
                for k in 1..=n {
                    let v: Vec<f64> = (0..n)
                        .map(|i| simplex[0][i] + sigma * (simplex[k][i] - simplex[0][i]))
                        .collect();
                    fvals[k] = f(&v);
                    simplex[k] = v;
                }
            }
        }
    }
    let mut besti = 0;
    for i in 1..=n {
        if fvals[i] < fvals[besti] {
            besti = i;
        }
    }
    (simplex[besti].clone(), fvals[besti])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_finds_quadratic_minimum() {
        let (x, v) = golden_min(-3.0, 5.0, 1e-12, &|t| (t - 1.25) * (t - 1.25) + 2.0);
        // value comparisons localize a smooth minimum to ~sqrt(machine eps)
        assert_abs_diff_eq!(x, 1.25, epsilon = 1e-6);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn nelder_mead_minimizes_rosenbrock_lite() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 10.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, _) = nelder_mead(&f, &[-0.5, 0.5], 0.5, 4000, 1e-14);
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-4);
    }
}
