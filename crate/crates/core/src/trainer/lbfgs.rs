//! Limited-memory BFGS for maximization.
//!
//! The driver minimizes `φ(x) = -f(x)` with the two-loop recursion and a
//! line search enforcing the strong Wolfe conditions (bracketing followed by
//! a safeguarded cubic zoom). Close to the optimum the decrease in `φ` can
//! drop below rounding error while the directional derivative is still
//! accurate, so a step that does not increase `φ` and satisfies the
//! approximate Wolfe derivative bounds is accepted as well.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::pl_model::Weights;

use super::{HistoryRecord, TrainConfig, TrainReport};

pub const WOLFE_C1: f64 = 1e-4;
pub const WOLFE_C2: f64 = 0.9;
const MAX_BRACKET_EVALS: usize = 30;
const MAX_ZOOM_EVALS: usize = 30;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn all_finite(value: f64, grad: &[f64]) -> bool {
    value.is_finite() && grad.iter().all(|g| g.is_finite())
}

struct CurvaturePair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// `φ` and its gradient at one trial point.
struct Probe {
    x: Vec<f64>,
    phi: f64,
    grad: Vec<f64>,
    slope: f64,
}

struct Minimizer<'a, F> {
    objective: &'a mut F,
    iteration: usize,
}

impl<F> Minimizer<'_, F>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    fn eval(&mut self, x: Vec<f64>, direction: &[f64]) -> Result<Probe> {
        let (f, g) = (self.objective)(&x);
        if !all_finite(f, &g) {
            return Err(Error::NonFinite {
                iteration: self.iteration,
            });
        }
        let grad: Vec<f64> = g.into_iter().map(|v| -v).collect();
        let slope = dot(&grad, direction);
        Ok(Probe {
            x,
            phi: -f,
            grad,
            slope,
        })
    }

    fn probe(&mut self, origin: &[f64], direction: &[f64], step: f64) -> Result<Probe> {
        let x = origin
            .iter()
            .zip(direction)
            .map(|(o, d)| o + step * d)
            .collect();
        self.eval(x, direction)
    }

    /// Strong Wolfe line search along `direction` from `start`. Returns the
    /// accepted probe, or `None` if no acceptable step was found.
    fn line_search(
        &mut self,
        start: &Probe,
        direction: &[f64],
        initial_step: f64,
    ) -> Result<Option<Probe>> {
        let phi0 = start.phi;
        let slope0 = start.slope;
        let armijo = |step: f64, phi: f64| phi <= phi0 + WOLFE_C1 * step * slope0;
        let curvature = |slope: f64| slope.abs() <= -WOLFE_C2 * slope0;

        let mut prev_step = 0.0;
        let mut prev: Option<Probe> = None;
        let mut step = initial_step;
        for i in 0..MAX_BRACKET_EVALS {
            let p = self.probe(&start.x, direction, step)?;
            let prev_phi = prev.as_ref().map_or(phi0, |q| q.phi);
            if !armijo(step, p.phi) || (i > 0 && p.phi >= prev_phi) {
                if approx_wolfe(start, &p) {
                    return Ok(Some(p));
                }
                return self.zoom(start, direction, (prev_step, prev), (step, Some(p)));
            }
            if curvature(p.slope) {
                return Ok(Some(p));
            }
            if p.slope >= 0.0 {
                return self.zoom(start, direction, (step, Some(p)), (prev_step, prev));
            }
            prev_step = step;
            prev = Some(p);
            step *= 2.0;
        }
        Ok(prev.filter(|p| p.phi < phi0))
    }

    /// Narrows `[lo, hi]` until a strong Wolfe point is found. `lo` always
    /// satisfies the sufficient decrease condition; its probe is `None` when
    /// it is the starting point.
    fn zoom(
        &mut self,
        start: &Probe,
        direction: &[f64],
        lo: (f64, Option<Probe>),
        hi: (f64, Option<Probe>),
    ) -> Result<Option<Probe>> {
        let phi0 = start.phi;
        let slope0 = start.slope;
        let (mut lo_step, mut lo_probe) = lo;
        let (mut hi_step, mut hi_probe) = hi;
        for _ in 0..MAX_ZOOM_EVALS {
            let (lo_phi, lo_slope) = lo_probe
                .as_ref()
                .map_or((phi0, slope0), |p| (p.phi, p.slope));
            let (hi_phi, hi_slope) = hi_probe
                .as_ref()
                .map_or((phi0, slope0), |p| (p.phi, p.slope));
            let width = hi_step - lo_step;
            if width.abs() <= 1e-16 * lo_step.abs().max(hi_step.abs()).max(1e-300) {
                break;
            }
            let step = cubic_minimizer(lo_step, lo_phi, lo_slope, hi_step, hi_phi, hi_slope)
                .filter(|s| {
                    let (a, b) = (lo_step.min(hi_step), lo_step.max(hi_step));
                    let margin = 0.1 * (b - a);
                    *s >= a + margin && *s <= b - margin
                })
                .unwrap_or(0.5 * (lo_step + hi_step));
            let p = self.probe(&start.x, direction, step)?;
            let approx = approx_wolfe(start, &p);
            if p.phi > phi0 + WOLFE_C1 * step * slope0 || p.phi >= lo_phi {
                if approx {
                    return Ok(Some(p));
                }
                hi_step = step;
                hi_probe = Some(p);
            } else {
                if p.slope.abs() <= -WOLFE_C2 * slope0 || approx {
                    return Ok(Some(p));
                }
                if p.slope * (hi_step - lo_step) >= 0.0 {
                    hi_step = lo_step;
                    hi_probe = lo_probe.take();
                }
                lo_step = step;
                lo_probe = Some(p);
            }
        }
        Ok(lo_probe.filter(|p| p.phi < phi0))
    }
}

/// No increase in `φ`, a change within rounding noise, and a slope inside
/// the approximate Wolfe bounds.
fn approx_wolfe(start: &Probe, p: &Probe) -> bool {
    p.phi <= start.phi
        && start.phi - p.phi <= 1e-10 * start.phi.abs().max(1.0)
        && p.slope >= WOLFE_C2 * start.slope
        && p.slope <= (2.0 * WOLFE_C1 - 1.0) * start.slope
}

/// Minimizer of the cubic interpolating values and slopes at `a` and `b`.
fn cubic_minimizer(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc.is_nan() || disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = db - da + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let step = b - (b - a) * (db + d2 - d1) / denom;
    step.is_finite().then_some(step)
}

fn two_loop(grad: &[f64], memory: &VecDeque<CurvaturePair>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for pair in memory.iter().rev() {
        let alpha = pair.rho * dot(&pair.s, &q);
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some(last) = memory.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for (pair, alpha) in memory.iter().zip(alphas.into_iter().rev()) {
        let beta = pair.rho * dot(&pair.y, &q);
        for (qi, si) in q.iter_mut().zip(&pair.s) {
            *qi += (alpha - beta) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Maximizes `objective` starting from `w0`.
///
/// Stops when the gradient infinity-norm drops to `cfg.grad_tol` or after
/// `cfg.max_iters` accepted steps. A line search that cannot find an
/// acceptable step, even along the steepest ascent direction, ends the run
/// with `converged == false`.
pub fn lbfgs_maximize<F>(mut objective: F, w0: Weights, cfg: &TrainConfig) -> Result<TrainReport>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    cfg.validate()?;
    let mut minimizer = Minimizer {
        objective: &mut objective,
        iteration: 0,
    };
    let x0 = w0.into_inner();
    let zero_dir = vec![0.0; x0.len()];
    let mut current = minimizer.eval(x0, &zero_dir)?;
    let mut history = vec![HistoryRecord {
        iteration: 0,
        objective: -current.phi,
        grad_norm: inf_norm(&current.grad),
    }];
    let mut memory: VecDeque<CurvaturePair> = VecDeque::with_capacity(cfg.lbfgs_memory);
    let mut converged = inf_norm(&current.grad) <= cfg.grad_tol;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iters {
        minimizer.iteration = iterations + 1;
        let mut accepted = None;
        for attempt in 0..2 {
            let steepest = attempt == 1 || memory.is_empty();
            let direction = if steepest {
                memory.clear();
                current.grad.iter().map(|g| -g).collect()
            } else {
                two_loop(&current.grad, &memory)
            };
            let start = Probe {
                x: current.x.clone(),
                phi: current.phi,
                grad: current.grad.clone(),
                slope: dot(&current.grad, &direction),
            };
            if start.slope.is_nan() || start.slope >= 0.0 {
                if steepest {
                    break;
                }
                continue;
            }
            let initial_step = if steepest {
                (1.0 / dot(&direction, &direction).sqrt()).min(1.0)
            } else {
                1.0
            };
            if let Some(p) = minimizer.line_search(&start, &direction, initial_step)? {
                accepted = Some(p);
                break;
            }
            if steepest {
                break;
            }
        }
        let Some(next) = accepted else {
            break;
        };

        let s: Vec<f64> = next.x.iter().zip(&current.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next
            .grad
            .iter()
            .zip(&current.grad)
            .map(|(a, b)| a - b)
            .collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if memory.len() == cfg.lbfgs_memory {
                memory.pop_front();
            }
            memory.push_back(CurvaturePair {
                s,
                y,
                rho: 1.0 / sy,
            });
        }
        current = next;
        iterations += 1;
        let grad_norm = inf_norm(&current.grad);
        history.push(HistoryRecord {
            iteration: iterations,
            objective: -current.phi,
            grad_norm,
        });
        converged = grad_norm <= cfg.grad_tol;
    }

    Ok(TrainReport {
        final_weights: Weights::new(current.x)?,
        history,
        converged,
        iterations_used: iterations,
    })
}
