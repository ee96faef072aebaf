//! Derivative-free local search and the multi-start driver used for the
//! entropic optimizations over channel inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Settings for [`nelder_mead`].
#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    /// Converged when the spread of objective values across the simplex is
    /// at most this.
    pub tol: f64,
    pub initial_step: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { tol: 1e-7, initial_step: 0.3, max_evals: 4000 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

fn simplex_around(x0: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-3 { step * v[i].abs().max(0.5) } else { step };
        simplex.push(v);
    }
    simplex
}

fn run_simplex(f: &dyn Fn(&[f64]) -> f64, mut simplex: Vec<Vec<f64>>, opts: &NelderMeadOptions, budget: usize) -> Minimum {
    let n = simplex[0].len();
    // dimension-adaptive coefficients
    let nf = n.max(1) as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = values.len();
    let mut order: Vec<usize> = (0..=n).collect();

    while evals < budget {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n.saturating_sub(1)]);
        if (values[worst] - values[best]).abs() <= opts.tol || n == 0 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for &k in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[k]) {
                *c += x / nf;
            }
        }
        let towards = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[worst]).map(|(c, w)| c + t * (c - w)).collect() };

        let reflected = towards(alpha);
        let fr = f(&reflected);
        evals += 1;
        if fr < values[best] {
            let expanded = towards(beta);
            let fe = f(&expanded);
            evals += 1;
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[worst] {
            let c = towards(gamma);
            let v = f(&c);
            (c, v)
        } else {
            let c = towards(-gamma);
            let v = f(&c);
            (c, v)
        };
        evals += 1;
        if fc < fr.min(values[worst]) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        let anchor = simplex[best].clone();
        for &k in &order[1..] {
            simplex[k] = anchor.iter().zip(&simplex[k]).map(|(a, x)| a + delta * (x - a)).collect();
            values[k] = f(&simplex[k]);
            evals += 1;
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum { x: simplex[best].clone(), value: values[best], evals }
}

/// Minimizes `f` from `x0`, restarting once from the converged point to
/// escape premature simplex collapse.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let first = run_simplex(f, simplex_around(x0, opts.initial_step), opts, opts.max_evals);
    let remaining = opts.max_evals.saturating_sub(first.evals).max(4 * (x0.len() + 1));
    let second = run_simplex(f, simplex_around(&first.x, opts.initial_step * 0.5), opts, remaining);
    let evals = first.evals + second.evals;
    if second.value < first.value {
        Minimum { evals, ..second }
    } else {
        Minimum { evals, ..first }
    }
}

/// Starting points for a multi-start search: `first`, then `count - 1`
/// standard-normal points drawn from a stream fixed by `seed`.
pub fn multistart_points(first: Vec<f64>, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = first.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![first];
    while points.len() < count {
        points.push((0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect());
    }
    points
}

/// Minimizes from every start in parallel; the reduction picks the lowest
/// value with ties going to the earliest start, so the result does not depend
/// on scheduling.
pub fn multistart_minimize<F>(f: F, starts: &[Vec<f64>], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let results: Vec<Minimum> = starts.par_iter().map(|x0| nelder_mead(&f, x0, opts)).collect();
    let mut best: Option<Minimum> = None;
    for r in results {
        if best.as_ref().is_none_or(|b| r.value < b.value) {
            best = Some(r);
        }
    }
    best.expect("at least one start")
}

/// Settings for [`lbfgs`].
#[derive(Clone, Copy, Debug)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    /// Converged when the largest gradient component is at most this.
    pub grad_tol: f64,
    /// Converged after three consecutive steps that change `f` by at most
    /// this, relative to `max(1, |f|)`.
    pub f_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { memory: 8, max_iters: 500, grad_tol: 1e-10, f_tol: 1e-14 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Objective returning the value and the gradient.
pub type ValueAndGradient<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a;

/// Limited-memory BFGS with a backtracking Armijo line search (initial step
/// 1, shrink factor 1/2). `f` returns the value and the gradient; infinite
/// values are treated as infeasible and rejected by the line search.
pub fn lbfgs(f: &ValueAndGradient<'_>, x0: &[f64], opts: &LbfgsOptions) -> Minimum {
    const ARMIJO_C: f64 = 1e-4;
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut evals = 1;
    let mut history: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = std::collections::VecDeque::new();
    let mut flat_steps = 0;
    for _ in 0..opts.max_iters {
        if g.iter().fold(0.0_f64, |a, v| a.max(v.abs())) <= opts.grad_tol || !fx.is_finite() {
            break;
        }
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        let scale = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300),
        };
        d.iter_mut().for_each(|v| *v *= scale);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (ft, gt) = f(&trial);
            evals += 1;
            if ft.is_finite() && ft <= fx + ARMIJO_C * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, ft, gt)) = accepted else { break };
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            history.push_back((s, y, 1.0 / sy));
            if history.len() > opts.memory {
                history.pop_front();
            }
        }
        flat_steps = if (fx - ft).abs() <= opts.f_tol * fx.abs().max(1.0) { flat_steps + 1 } else { 0 };
        x = trial;
        fx = ft;
        g = gt;
        if flat_steps >= 3 {
            break;
        }
    }
    Minimum { x, value: fx, evals }
}
