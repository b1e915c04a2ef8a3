//! Limited-memory quasi-Newton minimization: two-loop recursion over a
//! bounded history of curvature pairs, a strong-Wolfe line search
//! (c1 = 1e-4, c2 = 0.9, bracketing plus safeguarded-interpolation zoom),
//! and seeded multistart.

use serde::Serialize;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("optimizer memory must be at least 1")]
    BadMemory,
    #[error("tolerances must be positive")]
    BadTolerance,
    #[error("restart count must be at least 1")]
    BadRestarts,
}

/// Settings of the outer loop. `stochastic` relaxes exact-mode assumptions:
/// monotonicity is not enforced and termination adds a patience counter
/// (no improvement beyond `f_tol` over 10 iterations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct OptimizerConfig {
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub f_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    #[serde(default)]
    pub stochastic: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            memory: 10,
            max_iters: 2000,
            grad_tol: 1e-7,
            f_tol: 1e-12,
            restarts: 8,
            seed: 0,
            stochastic: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.memory < 1 {
            return Err(OptimizerError::BadMemory);
        }
        if !(self.grad_tol > 0.0) || !(self.f_tol > 0.0) {
            return Err(OptimizerError::BadTolerance);
        }
        if self.restarts < 1 {
            return Err(OptimizerError::BadRestarts);
        }
        Ok(())
    }
}

/// The function being minimized. `begin_iteration` lets stochastic
/// objectives pin their random stream per iteration (common random numbers
/// across the line search); `take_shots` drains the shot counter for the
/// iteration trace.
pub trait Objective {
    fn value(&mut self, theta: &[f64]) -> f64;
    fn gradient(&mut self, theta: &[f64]) -> Vec<f64>;
    fn begin_iteration(&mut self, _iter: usize) {}
    fn take_shots(&mut self) -> u64 {
        0
    }
    /// Cumulative (circuits, shots) consumed so far.
    fn usage(&self) -> (u64, u64) {
        (0, 0)
    }
    /// Whether evaluations at a fixed point change between iterations
    /// (fresh sample streams). When true, the optimizer re-evaluates the
    /// current point at each iteration start so the line search compares
    /// values from one stream.
    fn resamples_per_iteration(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    FTol,
    Patience,
    MaxIters,
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub e: f64,
    pub grad_inf: f64,
    pub step: f64,
    pub shots: u64,
    /// Both strong-Wolfe inequalities held for the accepted step.
    pub wolfe_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTrace {
    pub iterations: Vec<IterationRecord>,
    pub theta_opt: Vec<f64>,
    pub e_min: f64,
    pub termination: Termination,
    pub evaluations: u64,
    pub circuits: u64,
    pub shots: u64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: applies the implicit inverse-Hessian estimate to `g`.
/// With an empty history this is exactly the identity, so the search
/// direction reduces to steepest descent.
fn two_loop(history: &[(Vec<f64>, Vec<f64>, f64)], g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = history.last() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    q
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_BRACKET: usize = 20;
const MAX_ZOOM: usize = 30;

struct LineSearchResult {
    alpha: f64,
    value: f64,
    grad: Vec<f64>,
    wolfe_ok: bool,
}

/// Safeguarded quadratic-interpolation step inside the bracket, from
/// `(lo, f_lo, g_lo)` and `(hi, f_hi)`. Falls back to bisection when the
/// model is not convex or the step leaves the safeguard band.
fn interp_step(lo: f64, f_lo: f64, g_lo: f64, hi: f64, f_hi: f64) -> f64 {
    let d = hi - lo;
    let denom = 2.0 * (f_hi - f_lo - g_lo * d);
    let mut cand = if denom.abs() > 1e-300 && denom / (d * d) > 0.0 {
        lo - g_lo * d * d / denom
    } else {
        lo + 0.5 * d
    };
    let span = d.abs();
    let lo_bound = lo.min(hi) + 0.1 * span;
    let hi_bound = lo.max(hi) - 0.1 * span;
    if !cand.is_finite() || cand < lo_bound || cand > hi_bound {
        cand = lo + 0.5 * d;
    }
    cand
}

/// Strong-Wolfe line search (bracketing phase plus interpolating zoom).
/// Values are evaluated before gradients, and gradients only at points that
/// pass the Armijo test. Non-finite trial values count as Armijo failures,
/// so degenerate shot-mode evaluations shrink the step instead of aborting.
fn line_search<O: Objective>(
    obj: &mut O,
    theta: &[f64],
    dir: &[f64],
    f0: f64,
    g0_dot_d: f64,
    evals: &mut u64,
) -> Option<LineSearchResult> {
    let trial_point = |alpha: f64| -> Vec<f64> {
        theta.iter().zip(dir).map(|(t, d)| t + alpha * d).collect()
    };
    let armijo = |alpha: f64, v: f64| v.is_finite() && v <= f0 + C1 * alpha * g0_dot_d;

    let mut alpha_prev = 0.0f64;
    let mut f_prev = f0;
    let mut g_prev_dot_d = g0_dot_d;
    let mut alpha = 1.0f64;

    let mut lo;
    let mut hi;
    let mut f_lo;
    let mut f_hi;
    let g_lo_init;

    let mut i = 0;
    loop {
        let point = trial_point(alpha);
        *evals += 1;
        let v = obj.value(&point);
        if !armijo(alpha, v) || (i > 0 && v >= f_prev) {
            lo = alpha_prev;
            hi = alpha;
            f_lo = f_prev;
            f_hi = v;
            g_lo_init = g_prev_dot_d;
            break;
        }
        let g = obj.gradient(&point);
        let gd = dot(&g, dir);
        if gd.abs() <= -C2 * g0_dot_d {
            return Some(LineSearchResult {
                alpha,
                value: v,
                grad: g,
                wolfe_ok: true,
            });
        }
        if gd >= 0.0 {
            lo = alpha;
            hi = alpha_prev;
            f_lo = v;
            f_hi = f_prev;
            g_lo_init = gd;
            break;
        }
        alpha_prev = alpha;
        f_prev = v;
        g_prev_dot_d = gd;
        alpha *= 2.0;
        i += 1;
        if i >= MAX_BRACKET {
            // Curvature never satisfied but Armijo holds: accept the last
            // point (flagged as a weak-Wolfe step).
            let point = trial_point(alpha_prev);
            *evals += 1;
            let v = obj.value(&point);
            let g = obj.gradient(&point);
            return Some(LineSearchResult {
                alpha: alpha_prev,
                value: v,
                grad: g,
                wolfe_ok: false,
            });
        }
    }

    // Zoom: shrink [lo, hi]; f_lo is the best Armijo point so far and g_lo
    // its directional derivative.
    let mut g_lo = g_lo_init;
    let mut best_grad: Option<Vec<f64>> = None;
    for _ in 0..MAX_ZOOM {
        if (hi - lo).abs() < 1e-16 {
            break;
        }
        let candidate = interp_step(lo, f_lo, g_lo, hi, f_hi);
        let point = trial_point(candidate);
        *evals += 1;
        let v = obj.value(&point);
        if !armijo(candidate, v) || v >= f_lo {
            hi = candidate;
            f_hi = v;
            continue;
        }
        let g = obj.gradient(&point);
        let gd = dot(&g, dir);
        if gd.abs() <= -C2 * g0_dot_d {
            return Some(LineSearchResult {
                alpha: candidate,
                value: v,
                grad: g,
                wolfe_ok: true,
            });
        }
        if gd * (hi - lo) >= 0.0 {
            hi = lo;
            f_hi = f_lo;
        }
        lo = candidate;
        f_lo = v;
        g_lo = gd;
        best_grad = Some(g);
    }
    if lo > 0.0 && f_lo < f0 {
        // Armijo-only fallback at the best bracketed point.
        let grad = match best_grad {
            Some(g) => g,
            None => {
                *evals += 1;
                obj.gradient(&trial_point(lo))
            }
        };
        return Some(LineSearchResult {
            alpha: lo,
            value: f_lo,
            grad,
            wolfe_ok: false,
        });
    }
    None
}

/// Minimizes `obj` from `theta0`. Terminates on the gradient infinity norm,
/// on relative cost stagnation, on iteration budget, or on line-search
/// failure after a steepest-descent reset.
pub fn minimize<O: Objective>(obj: &mut O, theta0: &[f64], config: &OptimizerConfig) -> RunTrace {
    config.validate().expect("validated by caller");
    let mut theta = theta0.to_vec();
    let mut evals: u64 = 0;
    obj.begin_iteration(0);
    evals += 1;
    let mut f = obj.value(&theta);
    let mut g = obj.gradient(&theta);
    let _ = obj.take_shots();

    let mut trace = RunTrace {
        iterations: Vec::new(),
        theta_opt: theta.clone(),
        e_min: f,
        termination: Termination::MaxIters,
        evaluations: evals,
        circuits: 0,
        shots: 0,
    };
    if !f.is_finite() || g.iter().any(|x| !x.is_finite()) {
        trace.termination = Termination::NonFinite;
        let (c, s) = obj.usage();
        trace.circuits = c;
        trace.shots = s;
        return trace;
    }
    if inf_norm(&g) < config.grad_tol {
        trace.termination = Termination::GradTol;
        let (c, s) = obj.usage();
        trace.circuits = c;
        trace.shots = s;
        return trace;
    }

    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut patience = 0usize;
    let mut best_f = f;

    let reanchor = config.stochastic && obj.resamples_per_iteration();
    for iter in 1..=config.max_iters {
        obj.begin_iteration(iter);
        if reanchor && iter > 1 {
            // Fresh sample stream per iteration: the line search must
            // compare values drawn from one stream, so re-anchor f and g at
            // the current point. The re-anchored value is also the unbiased
            // progress measure (line-search values overfit their stream).
            evals += 1;
            f = obj.value(&theta);
            g = obj.gradient(&theta);
            if !f.is_finite() || g.iter().any(|x| !x.is_finite()) {
                trace.termination = Termination::NonFinite;
                break;
            }
            if f < best_f - config.f_tol * (1.0 + f.abs()) {
                best_f = f;
                patience = 0;
            } else {
                patience += 1;
                if patience >= 10 {
                    trace.termination = Termination::Patience;
                    break;
                }
            }
        }
        let mut dir: Vec<f64> = two_loop(&history, &g).iter().map(|x| -x).collect();
        let mut g_dot_d = dot(&g, &dir);
        if g_dot_d >= 0.0 {
            history.clear();
            dir = g.iter().map(|x| -x).collect();
            g_dot_d = dot(&g, &dir);
        }

        let searched = match line_search(obj, &theta, &dir, f, g_dot_d, &mut evals) {
            Some(r) => Some(r),
            None => {
                if history.is_empty() {
                    None
                } else {
                    history.clear();
                    let dir: Vec<f64> = g.iter().map(|x| -x).collect();
                    let g_dot_d = dot(&g, &dir);
                    line_search(obj, &theta, &dir, f, g_dot_d, &mut evals)
                }
            }
        };
        let result = match searched {
            Some(r) => r,
            None => {
                if config.stochastic {
                    // No descent within the noise floor this stream; hold
                    // position and spend patience.
                    history.clear();
                    patience += 1;
                    trace.iterations.push(IterationRecord {
                        iter,
                        e: f,
                        grad_inf: inf_norm(&g),
                        step: 0.0,
                        shots: obj.take_shots(),
                        wolfe_ok: false,
                    });
                    if patience >= 10 {
                        trace.termination = Termination::Patience;
                        break;
                    }
                    continue;
                }
                trace.termination = Termination::LineSearchFailed;
                break;
            }
        };

        let step: Vec<f64> = dir.iter().map(|d| d * result.alpha).collect();
        let y: Vec<f64> = result.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &y);
        let s_norm = step.iter().map(|x| x * x).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        if sy > 1e-10 * s_norm * y_norm {
            if history.len() == config.memory {
                history.remove(0);
            }
            history.push((step.clone(), y, 1.0 / sy));
        }

        for (t, s) in theta.iter_mut().zip(&step) {
            *t += s;
        }
        let f_new = result.value;
        let g_new = result.grad;
        if !f_new.is_finite() || g_new.iter().any(|x| !x.is_finite()) {
            trace.termination = Termination::NonFinite;
            break;
        }

        trace.iterations.push(IterationRecord {
            iter,
            e: f_new,
            grad_inf: inf_norm(&g_new),
            step: result.alpha,
            shots: obj.take_shots(),
            wolfe_ok: result.wolfe_ok,
        });

        let df = (f - f_new).abs();
        let grad_inf = inf_norm(&g_new);
        f = f_new;
        g = g_new;
        trace.theta_opt = theta.clone();
        trace.e_min = f;

        if grad_inf < config.grad_tol {
            trace.termination = Termination::GradTol;
            break;
        }
        if config.stochastic {
            // Per-iteration streams measure progress at the re-anchor
            // instead; fixed streams ratchet on the accepted values here.
            if !reanchor {
                if f < best_f - config.f_tol * (1.0 + f.abs()) {
                    best_f = f;
                    patience = 0;
                } else {
                    patience += 1;
                    if patience >= 10 {
                        trace.termination = Termination::Patience;
                        break;
                    }
                }
            }
        } else if df < config.f_tol * (1.0 + f.abs()) {
            trace.termination = Termination::FTol;
            break;
        }
    }
    trace.evaluations = evals;
    let (c, s) = obj.usage();
    trace.circuits = c;
    trace.shots = s;
    trace
}

/// Best-of-restarts driver: independent seeded starting points (and
/// objectives), returning the run with the lowest final cost. Restarts run
/// in parallel when the `parallel` feature is on; selection is by value
/// with the restart index as the deterministic tie-break.
pub struct MultistartResult {
    pub best: RunTrace,
    pub best_index: usize,
    pub runs: Vec<RunTrace>,
}

pub fn multistart<O, MF, TF>(
    make_objective: MF,
    make_theta0: TF,
    config: &OptimizerConfig,
) -> MultistartResult
where
    O: Objective,
    MF: Fn(usize) -> O + Sync,
    TF: Fn(usize) -> Vec<f64> + Sync,
{
    let runs: Vec<RunTrace> = crate::parallel::map_indexed(config.restarts, |j| {
        let mut obj = make_objective(j);
        let theta0 = make_theta0(j);
        minimize(&mut obj, &theta0, config)
    });
    let mut best_index = 0;
    for (j, run) in runs.iter().enumerate() {
        if run.e_min < runs[best_index].e_min {
            best_index = j;
        }
    }
    MultistartResult {
        best: runs[best_index].clone(),
        best_index,
        runs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        q: Vec<Vec<f64>>,
    }

    impl Objective for Quadratic {
        fn value(&mut self, theta: &[f64]) -> f64 {
            let n = theta.len();
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += 0.5 * theta[i] * self.q[i][j] * theta[j];
                }
            }
            acc
        }
        fn gradient(&mut self, theta: &[f64]) -> Vec<f64> {
            let n = theta.len();
            (0..n)
                .map(|i| (0..n).map(|j| self.q[i][j] * theta[j]).sum())
                .collect()
        }
    }

    fn spd6() -> Quadratic {
        // Diagonally dominant symmetric 6x6.
        let n = 6;
        let mut q = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                q[i][j] = 1.0 / (1.0 + (i as f64 - j as f64).abs());
            }
            q[i][i] += 3.0 + i as f64;
        }
        Quadratic { q }
    }

    #[test]
    fn quadratic_converges_fast() {
        let mut obj = spd6();
        let config = OptimizerConfig {
            grad_tol: 1e-8,
            ..OptimizerConfig::default()
        };
        let theta0 = vec![1.0, -2.0, 3.0, -4.0, 5.0, -6.0];
        let trace = minimize(&mut obj, &theta0, &config);
        assert_eq!(trace.termination, Termination::GradTol);
        assert!(trace.iterations.len() <= 50, "{} iters", trace.iterations.len());
        let g = obj.gradient(&trace.theta_opt);
        assert!(inf_norm(&g) < 1e-8);
    }

    #[test]
    fn infinite_grad_tol_returns_start() {
        let mut obj = spd6();
        let config = OptimizerConfig {
            grad_tol: f64::INFINITY,
            ..OptimizerConfig::default()
        };
        let theta0 = vec![1.0; 6];
        let trace = minimize(&mut obj, &theta0, &config);
        assert_eq!(trace.termination, Termination::GradTol);
        assert!(trace.iterations.is_empty());
        assert_eq!(trace.theta_opt, theta0);
    }

    #[test]
    fn empty_memory_two_loop_is_identity() {
        let g = vec![0.3, -1.2, 4.5];
        let out = two_loop(&[], &g);
        assert_eq!(out, g);
    }

    #[test]
    fn accepted_steps_satisfy_wolfe() {
        let mut obj = spd6();
        let config = OptimizerConfig::default();
        let trace = minimize(&mut obj, &vec![2.0; 6], &config);
        assert!(trace.iterations.iter().all(|r| r.wolfe_ok));
        // Exact mode: E non-increasing across accepted iterations.
        for w in trace.iterations.windows(2) {
            assert!(w[1].e <= w[0].e + 1e-15);
        }
    }

    #[test]
    fn non_finite_objective_aborts_with_trace() {
        struct Bad;
        impl Objective for Bad {
            fn value(&mut self, _: &[f64]) -> f64 {
                f64::NAN
            }
            fn gradient(&mut self, theta: &[f64]) -> Vec<f64> {
                vec![0.0; theta.len()]
            }
        }
        let trace = minimize(&mut Bad, &[1.0], &OptimizerConfig::default());
        assert_eq!(trace.termination, Termination::NonFinite);
    }

    #[test]
    fn multistart_single_restart_equals_minimize() {
        let config = OptimizerConfig {
            restarts: 1,
            ..OptimizerConfig::default()
        };
        let res = multistart(|_| spd6(), |_| vec![1.5; 6], &config);
        let mut obj = spd6();
        let direct = minimize(&mut obj, &vec![1.5; 6], &config);
        assert_eq!(res.best.e_min, direct.e_min);
        assert_eq!(res.best.theta_opt, direct.theta_opt);
    }

    #[test]
    fn multistart_deterministic_selection() {
        let config = OptimizerConfig {
            restarts: 4,
            ..OptimizerConfig::default()
        };
        let mk = |j: usize| vec![j as f64 + 0.5; 6];
        let a = multistart(|_| spd6(), mk, &config);
        let b = multistart(|_| spd6(), mk, &config);
        assert_eq!(a.best_index, b.best_index);
        assert_eq!(a.best.theta_opt, b.best.theta_opt);
        assert_eq!(a.runs.len(), 4);
    }

    #[test]
    fn rosenbrock_2d_reaches_minimum() {
        struct Rosenbrock;
        impl Objective for Rosenbrock {
            fn value(&mut self, t: &[f64]) -> f64 {
                (1.0 - t[0]).powi(2) + 100.0 * (t[1] - t[0] * t[0]).powi(2)
            }
            fn gradient(&mut self, t: &[f64]) -> Vec<f64> {
                vec![
                    -2.0 * (1.0 - t[0]) - 400.0 * t[0] * (t[1] - t[0] * t[0]),
                    200.0 * (t[1] - t[0] * t[0]),
                ]
            }
        }
        let config = OptimizerConfig {
            grad_tol: 1e-8,
            max_iters: 500,
            ..OptimizerConfig::default()
        };
        let trace = minimize(&mut Rosenbrock, &[-1.2, 1.0], &config);
        assert!((trace.theta_opt[0] - 1.0).abs() < 1e-6);
        assert!((trace.theta_opt[1] - 1.0).abs() < 1e-6);
    }
}
