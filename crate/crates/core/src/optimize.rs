//! Quasi-Newton minimization of a smooth function with an analytic gradient.
//!
//! BFGS on the inverse Hessian with a strong Wolfe line search (bracketing
//! and zoom). Close to a minimum the cost changes fall below floating-point
//! resolution, so a step is also accepted under the approximate Wolfe
//! conditions, which only look at the directional derivative. Updates with
//! non-positive curvature are skipped.

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub grad_tol: f64,
    pub max_iters: u64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-10, max_iters: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Converged,
    MaxIters,
    /// The line search failed even along steepest descent.
    LineSearch,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iters: u64,
    pub evals: usize,
    pub exit: Exit,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LS_EVALS: usize = 40;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn axpy(x: &[f64], a: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(xi, pi)| xi + a * pi).collect()
}

struct Point {
    a: f64,
    f: f64,
    g: Vec<f64>,
    d: f64,
}

struct Search<'a, F> {
    fg: &'a F,
    x: &'a [f64],
    p: &'a [f64],
    f0: f64,
    d0: f64,
    evals: usize,
}

impl<F: Fn(&[f64]) -> (f64, Vec<f64>)> Search<'_, F> {
    fn eval(&mut self, a: f64) -> Point {
        self.evals += 1;
        let (f, g) = (self.fg)(&axpy(self.x, a, self.p));
        let d = dot(&g, self.p);
        Point { a, f, g, d }
    }

    fn armijo(&self, pt: &Point) -> bool {
        pt.f.is_finite() && pt.f <= self.f0 + C1 * pt.a * self.d0
    }

    fn accept(&self, pt: &Point) -> bool {
        if !pt.f.is_finite() || !pt.d.is_finite() {
            return false;
        }
        let strong = self.armijo(pt) && pt.d.abs() <= -C2 * self.d0;
        let approx = pt.f <= self.f0 + 1e-14 * self.f0.abs().max(1.0)
            && (2.0 * C1 - 1.0) * self.d0 >= pt.d
            && pt.d >= C2 * self.d0;
        strong || approx
    }

    fn run(&mut self, a1: f64) -> Option<Point> {
        let mut prev = Point { a: 0.0, f: self.f0, g: Vec::new(), d: self.d0 };
        let mut a = a1;
        let mut first = true;
        while self.evals < MAX_LS_EVALS {
            let cur = self.eval(a);
            if self.accept(&cur) {
                return Some(cur);
            }
            if !self.armijo(&cur) || (!first && cur.f >= prev.f) {
                return self.zoom(prev, cur);
            }
            if cur.d >= 0.0 {
                return self.zoom(cur, prev);
            }
            prev = cur;
            a *= 2.0;
            first = false;
        }
        None
    }

    fn zoom(&mut self, mut lo: Point, mut hi: Point) -> Option<Point> {
        while self.evals < MAX_LS_EVALS {
            let (a_lo, a_hi) = (lo.a, hi.a);
            if (a_hi - a_lo).abs() <= 1e-15 * a_lo.abs().max(a_hi.abs()) {
                return None;
            }
            // quadratic through lo's value and slope and hi's value
            let da = a_hi - a_lo;
            let denom = 2.0 * (hi.f - lo.f - lo.d * da);
            let mut a = if hi.f.is_finite() && denom > 0.0 { a_lo - lo.d * da * da / denom } else { f64::NAN };
            let (l, h) = (a_lo.min(a_hi), a_lo.max(a_hi));
            let margin = 0.1 * (h - l);
            if !a.is_finite() || a < l + margin || a > h - margin {
                a = 0.5 * (a_lo + a_hi);
            }
            let cur = self.eval(a);
            if self.accept(&cur) {
                return Some(cur);
            }
            if !self.armijo(&cur) || cur.f >= lo.f {
                hi = cur;
            } else {
                if cur.d * da >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
        None
    }
}

/// Minimizes `fg` (returning value and gradient) from `x0`.
pub fn minimize_bfgs<F>(fg: &F, x0: &[f64], opts: &BfgsOptions) -> Minimum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x);
    let mut evals = 1;
    let mut hinv = identity(n);
    let mut fresh = true;
    let mut iters = 0;
    let exit = loop {
        if n == 0 || norm(&g) < opts.grad_tol {
            break Exit::Converged;
        }
        if iters >= opts.max_iters {
            break Exit::MaxIters;
        }
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        let mut d0 = dot(&g, &p);
        if !(d0 < 0.0) {
            hinv = identity(n);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
            d0 = -dot(&g, &g);
        }
        let a1 = if fresh { (1.0 / norm(&g)).min(1.0) } else { 1.0 };
        let mut ls = Search { fg, x: &x, p: &p, f0: f, d0, evals: 0 };
        let found = ls.run(a1);
        evals += ls.evals;
        let Some(pt) = found else {
            if fresh {
                break Exit::LineSearch;
            }
            hinv = identity(n);
            fresh = true;
            continue;
        };
        let s: Vec<f64> = p.iter().map(|v| v * pt.a).collect();
        let y: Vec<f64> = pt.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        x = axpy(&x, pt.a, &p);
        f = pt.f;
        g = pt.g;
        iters += 1;
        let sy = dot(&s, &y);
        if sy > 1e-14 * norm(&s) * norm(&y) {
            if fresh {
                let scale = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|h| *h *= scale);
            }
            bfgs_update(&mut hinv, &s, &y, sy);
            fresh = false;
        }
    };
    Minimum { grad_norm: norm(&g), x, f, iters, evals, exit }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`, H symmetric.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let c = rho * rho * dot(y, &hy) + rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (f, g)
        };
        let m = minimize_bfgs(&fg, &[-1.2, 1.0], &BfgsOptions::default());
        assert_eq!(m.exit, Exit::Converged);
        assert!((m.x[0] - 1.0).abs() < 1e-8 && (m.x[1] - 1.0).abs() < 1e-8, "{m:?}");
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let d = [1.0, 3.0, 10.0, 300.0];
        let fg = |x: &[f64]| {
            let f = 0.5 * x.iter().zip(&d).map(|(v, k)| k * v * v).sum::<f64>();
            (f, x.iter().zip(&d).map(|(v, k)| k * v).collect())
        };
        let m = minimize_bfgs(&fg, &[1.0; 4], &BfgsOptions::default());
        assert_eq!(m.exit, Exit::Converged);
        assert!(m.iters < 30, "{m:?}");
    }

    #[test]
    fn periodic_cost() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            (a.cos() + 0.3 * (a + b).sin(), vec![-a.sin() + 0.3 * (a + b).cos(), 0.3 * (a + b).cos()])
        };
        let m = minimize_bfgs(&fg, &[0.1, 0.0], &BfgsOptions::default());
        assert_eq!(m.exit, Exit::Converged);
        assert!(m.f < -1.29, "{m:?}");
    }

    #[test]
    fn already_stationary() {
        let fg = |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]);
        let m = minimize_bfgs(&fg, &[0.0], &BfgsOptions::default());
        assert_eq!(m.iters, 0);
        assert_eq!(m.exit, Exit::Converged);
    }
}
