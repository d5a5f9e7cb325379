//! Derivative-free Nelder-Mead minimization over a feasible set described by
//! a projection.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Spread of objective values across the simplex.
    pub tol_f: f64,
    /// Largest coordinate distance from the best vertex.
    pub tol_x: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { tol_f: 1e-10, tol_x: 1e-8, max_iter: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    calls: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.calls += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Minimizes `f` starting from `start`, with initial simplex edges `steps`.
///
/// Every trial point is passed through `project` before evaluation, so the
/// simplex never leaves the feasible set. NaN objective values count as +∞.
pub fn minimize<F, P>(
    f: F,
    project: P,
    start: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
    P: Fn(&mut [f64]),
{
    let dim = start.len();
    assert_eq!(dim, steps.len());
    let mut obj = Counted { f, calls: 0 };

    let mut x0 = start.to_vec();
    project(&mut x0);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = obj.eval(&x0);
    simplex.push((x0.clone(), f0));
    for i in 0..dim {
        let mut v = x0.clone();
        v[i] += steps[i];
        project(&mut v);
        if v == x0 {
            v[i] -= steps[i];
            project(&mut v);
        }
        let fv = obj.eval(&v);
        simplex.push((v, fv));
    }

    let trial = |c: &[f64], w: &[f64], coef: f64| -> Vec<f64> {
        let mut v: Vec<f64> = c.iter().zip(w).map(|(ci, wi)| ci + coef * (ci - wi)).collect();
        project(&mut v);
        v
    };

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let f_spread = simplex[dim].1 - best.1;
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= opts.tol_f && x_spread <= opts.tol_x {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for (v, _) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let xr = trial(&centroid, &worst.0, 1.0);
        let fr = obj.eval(&xr);

        if fr < simplex[0].1 {
            let xe = trial(&centroid, &worst.0, 2.0);
            let fe = obj.eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = trial(&centroid, &worst.0, 0.5);
            let fc = obj.eval(&xc);
            (xc, fc)
        } else {
            let xc = trial(&centroid, &worst.0, -0.5);
            let fc = obj.eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            let mut s: Vec<f64> = anchor.iter().zip(v.iter()).map(|(a, x)| a + 0.5 * (x - a)).collect();
            project(&mut s);
            *fv = obj.eval(&s);
            *v = s;
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult { x, f, iterations, evaluations: obj.calls, converged }
}
