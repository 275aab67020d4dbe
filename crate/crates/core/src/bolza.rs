//! Bolza optimal control over a box of admissible controls.
//!
//! `J = Σ_{i=1}^{m+1} [Φ(x(t_i)) + ∫_{t_{i-1}}^{t_i} L(t, x, u, v) dt]`, where
//! the impulse control `v(t_{i-1}⁻)` is held constant inside `L` over
//! segment `i` (zero on the first segment, which has no impulse).

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::SolverContext;
use crate::system::{ControlLaw, SegmentControl, Trajectory};

pub type TerminalCost<T> = Arc<dyn Fn(&DVector<T>) -> T + Send + Sync>;
/// `L(t, x, u, v)`.
pub type RunningCost<T> = Arc<dyn Fn(T, &DVector<T>, &DVector<T>, &DVector<T>) -> T + Send + Sync>;

/// Time-invariant box `[lower, upper]` for both `u` and `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleSet<T: Scalar> {
    pub lower: DVector<T>,
    pub upper: DVector<T>,
}

impl<T: Scalar> AdmissibleSet<T> {
    pub fn new(lower: DVector<T>, upper: DVector<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::Domain("box needs lower <= upper componentwise".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn symmetric(p: usize, radius: T) -> Self {
        Self {
            lower: DVector::from_element(p, -radius),
            upper: DVector::from_element(p, radius),
        }
    }

    pub fn clamp(&self, x: &DVector<T>) -> DVector<T> {
        x.zip_zip_map(&self.lower, &self.upper, |v, l, u| v.max(l).min(u))
    }

    pub fn contains(&self, x: &DVector<T>) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }
}

/// Declared growth constants: `L >= φ(t) + c1‖x‖ + c2‖u‖^p + c3‖v‖^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthConstants<T> {
    /// Smallest sampled value of `φ`.
    pub phi_min: T,
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub p: T,
}

#[derive(Clone)]
pub struct BolzaCost<T: Scalar> {
    pub terminal: TerminalCost<T>,
    pub running: RunningCost<T>,
    pub growth: Option<GrowthConstants<T>>,
}

impl<T: Scalar> fmt::Debug for BolzaCost<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BolzaCost").field("growth", &self.growth).finish_non_exhaustive()
    }
}

impl<T: Scalar> BolzaCost<T> {
    /// `Φ(x) = Σ w_t (x - target)²` and `L = w_u |u|² + w_v |v|²`.
    pub fn quadratic(target: DVector<T>, terminal_weight: T, u_weight: T, v_weight: T) -> Self {
        Self {
            terminal: Arc::new(move |x: &DVector<T>| (x - &target).norm_squared() * terminal_weight),
            running: Arc::new(move |_, _, u: &DVector<T>, v: &DVector<T>| {
                u.norm_squared() * u_weight + v.norm_squared() * v_weight
            }),
            growth: None,
        }
    }
}

fn trapezoid<T: Scalar>(times: &[T], values: &[T]) -> T {
    let mut acc = T::zero();
    for i in 1..times.len() {
        acc += (values[i - 1] + values[i]) * (times[i] - times[i - 1]) * T::lit(0.5);
    }
    acc
}

fn held_impulse<T: Scalar>(controls: &ControlLaw<T>, i: usize, p: usize) -> DVector<T> {
    if i == 0 {
        DVector::zeros(p)
    } else {
        controls.v_impulses[i - 1].clone()
    }
}

/// `J` for a trajectory on the context grid.
pub fn cost_eval<T: Scalar>(
    ctx: &SolverContext<T>,
    cost: &BolzaCost<T>,
    traj: &Trajectory<T>,
    controls: &ControlLaw<T>,
) -> Result<T> {
    let spec = ctx.spec();
    controls.check_shape(spec, ctx.nodes())?;
    if traj.segments.len() != spec.segment_count() || traj.segments.iter().any(|s| s.len() != ctx.nodes() + 1) {
        return Err(Error::ControlShape("trajectory grid does not match the controls".into()));
    }
    let mut total = T::zero();
    for (i, seg) in traj.segments.iter().enumerate() {
        let u = ctx.control_samples(i, &controls.u_segments[i])?;
        let v = held_impulse(controls, i, spec.p());
        let running: Vec<T> = seg
            .times
            .iter()
            .zip(&seg.values)
            .zip(&u)
            .map(|((&t, x), ul)| (cost.running)(t, x, ul, &v))
            .collect();
        total += (cost.terminal)(seg.last()) + trapezoid(&seg.times, &running);
    }
    Ok(total)
}

/// Clamps every `u` node value and every `v` into the box. Steering
/// segments carry no node values and are returned unchanged; sample them
/// with [`SolverContext::control_samples`] first.
pub fn project_admissible<T: Scalar>(controls: &ControlLaw<T>, set: &AdmissibleSet<T>) -> ControlLaw<T> {
    ControlLaw {
        u_segments: controls
            .u_segments
            .iter()
            .map(|seg| match seg {
                SegmentControl::Constant(u) => SegmentControl::Constant(set.clamp(u)),
                SegmentControl::Sampled(us) => SegmentControl::Sampled(us.iter().map(|u| set.clamp(u)).collect()),
                other => other.clone(),
            })
            .collect(),
        v_impulses: controls.v_impulses.iter().map(|v| set.clamp(v)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig<T> {
    pub intervals_per_segment: usize,
    /// Central-difference step relative to `max(1, |θ_k|)`.
    pub fd_step: T,
    pub rel_tol: T,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: T,
    pub max_backtracks: usize,
}

impl<T: Scalar> Default for OptimizeConfig<T> {
    fn default() -> Self {
        Self {
            intervals_per_segment: 8,
            fd_step: T::lit(1e-5),
            rel_tol: T::lit(1e-8),
            max_iter: 500,
            armijo: T::lit(1e-4),
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry<T> {
    pub iteration: usize,
    pub cost: T,
    /// `∫‖u‖^p + Σ_i ∫‖v_i‖^p` with `p` from the growth constants (else 2).
    pub energy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalTriplet<T: Scalar> {
    pub trajectory: Trajectory<T>,
    pub controls: ControlLaw<T>,
    pub cost: T,
    pub parameters: Vec<T>,
    pub trace: Vec<TraceEntry<T>>,
    pub iterations: usize,
    /// Cost evaluations that failed in the solver and were rejected.
    pub rejected: usize,
}

/// Piecewise-constant control parameterization: `K` intervals per segment
/// with `p` components each, followed by the `m` impulse values.
#[derive(Debug, Clone, Copy)]
pub struct ControlGrid {
    pub segments: usize,
    pub intervals: usize,
    pub p: usize,
    pub impulses: usize,
    pub nodes: usize,
}

impl ControlGrid {
    pub fn new<T: Scalar>(ctx: &SolverContext<T>, intervals: usize) -> Result<Self> {
        if intervals == 0 || intervals > ctx.nodes() {
            return Err(Error::Domain(format!(
                "control intervals per segment must lie in 1..={}, got {intervals}",
                ctx.nodes()
            )));
        }
        let spec = ctx.spec();
        Ok(Self {
            segments: spec.segment_count(),
            intervals,
            p: spec.p(),
            impulses: spec.m(),
            nodes: ctx.nodes(),
        })
    }

    pub fn len(&self) -> usize {
        (self.segments * self.intervals + self.impulses) * self.p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interval holding grid node `l`: a node on an interval boundary takes
    /// the value of the interval to its right, the last node the last one.
    fn interval_of(&self, l: usize) -> usize {
        (l * self.intervals / self.nodes).min(self.intervals - 1)
    }

    pub fn to_controls<T: Scalar>(&self, theta: &[T]) -> ControlLaw<T> {
        let p = self.p;
        let piece = |i: usize, k: usize| {
            let off = (i * self.intervals + k) * p;
            DVector::from_column_slice(&theta[off..off + p])
        };
        let u_segments = (0..self.segments)
            .map(|i| SegmentControl::Sampled((0..=self.nodes).map(|l| piece(i, self.interval_of(l))).collect()))
            .collect();
        let base = self.segments * self.intervals * p;
        let v_impulses = (0..self.impulses)
            .map(|k| DVector::from_column_slice(&theta[base + k * p..base + (k + 1) * p]))
            .collect();
        ControlLaw { u_segments, v_impulses }
    }

    fn project<T: Scalar>(&self, theta: &mut [T], set: &AdmissibleSet<T>) {
        for (k, v) in theta.iter_mut().enumerate() {
            let c = k % self.p;
            *v = v.max(set.lower[c]).min(set.upper[c]);
        }
    }
}

fn control_energy<T: Scalar>(ctx: &SolverContext<T>, controls: &ControlLaw<T>, p: T) -> Result<T> {
    let mut total = T::zero();
    for (i, seg) in controls.u_segments.iter().enumerate() {
        let times = ctx.segment_times(i)?;
        let u = ctx.control_samples(i, seg)?;
        let v = held_impulse(controls, i, ctx.spec().p());
        let vals: Vec<T> = u.iter().map(|ul| ul.norm().powf(p) + v.norm().powf(p)).collect();
        total += trapezoid(times, &vals);
    }
    Ok(total)
}

fn evaluate<T: Scalar>(
    ctx: &SolverContext<T>,
    cost: &BolzaCost<T>,
    controls: &ControlLaw<T>,
) -> Option<(T, Trajectory<T>)> {
    let report = ctx.picard(controls, None).ok()?;
    let j = cost_eval(ctx, cost, &report.trajectory, controls).ok()?;
    j.is_finite().then_some((j, report.trajectory))
}

/// Projected finite-difference gradient descent with Armijo backtracking.
/// Returns the best triplet found, a local minimizer in general; the
/// box-projected zero control is the initial incumbent and is kept unless
/// strictly improved.
pub fn optimize<T: Scalar>(
    ctx: &SolverContext<T>,
    cost: &BolzaCost<T>,
    set: &AdmissibleSet<T>,
    cfg: &OptimizeConfig<T>,
) -> Result<OptimalTriplet<T>> {
    let spec = ctx.spec();
    if set.lower.len() != spec.p() {
        return Err(Error::Dimension(format!("box has {} components, controls have {}", set.lower.len(), spec.p())));
    }
    let grid = ControlGrid::new(ctx, cfg.intervals_per_segment)?;
    let energy_p = cost.growth.map_or(T::lit(2.0), |g| g.p);
    let eval_theta = |theta: &[T]| evaluate(ctx, cost, &grid.to_controls(theta));

    let mut theta = vec![T::zero(); grid.len()];
    grid.project(&mut theta, set);
    let (mut j, mut traj) = eval_theta(&theta)
        .ok_or_else(|| Error::Optimization("the solver failed at the initial (projected zero) control".into()))?;
    let mut rejected = 0usize;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        cost: j,
        energy: control_energy(ctx, &grid.to_controls(&theta), energy_p)?,
    }];
    let mut step = T::one();
    let mut iterations = 0;
    for it in 1..=cfg.max_iter {
        iterations = it;
        let grad: Vec<Option<T>> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let h = cfg.fd_step * theta[k].abs().max(T::one());
                let mut plus = theta.clone();
                plus[k] += h;
                let mut minus = theta.clone();
                minus[k] -= h;
                let jp = eval_theta(&plus)?.0;
                let jm = eval_theta(&minus)?.0;
                Some((jp - jm) / (h + h))
            })
            .collect();
        rejected += grad.iter().filter(|g| g.is_none()).count() * 2;
        let grad: Vec<T> = grad.into_iter().map(|g| g.unwrap_or(T::zero())).collect();

        let mut accepted = None;
        let mut t = (step * T::lit(2.0)).min(T::lit(1e6));
        for _ in 0..cfg.max_backtracks {
            let mut cand: Vec<T> = theta.iter().zip(&grad).map(|(x, g)| *x - t * *g).collect();
            grid.project(&mut cand, set);
            let decrease: T = theta
                .iter()
                .zip(&cand)
                .zip(&grad)
                .map(|((x, c), g)| *g * (*x - *c))
                .fold(T::zero(), |a, b| a + b);
            if decrease <= T::zero() {
                break;
            }
            match eval_theta(&cand) {
                Some((jc, tc)) if jc <= j - cfg.armijo * decrease => {
                    accepted = Some((cand, jc, tc));
                    break;
                }
                Some(_) => {}
                None => rejected += 1,
            }
            t *= T::lit(0.5);
        }
        let Some((cand, jc, tc)) = accepted else {
            break;
        };
        step = t;
        let improvement = (j - jc) / j.abs().max(T::eps());
        theta = cand;
        j = jc;
        traj = tc;
        trace.push(TraceEntry {
            iteration: it,
            cost: j,
            energy: control_energy(ctx, &grid.to_controls(&theta), energy_p)?,
        });
        if improvement < cfg.rel_tol {
            break;
        }
    }
    Ok(OptimalTriplet {
        trajectory: traj,
        controls: grid.to_controls(&theta),
        cost: j,
        parameters: theta,
        trace,
        iterations,
        rejected,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T: Scalar> {
    pub controls: ControlLaw<T>,
    pub parameters: Vec<T>,
    pub cost: T,
    pub candidates: usize,
}

pub const ORACLE_LIMIT: u128 = 1_000_000;

/// Exhaustive search over `levels` evenly spaced values per control
/// component (one level where the box is collapsed), on `intervals`
/// piecewise-constant pieces per segment plus the impulse values.
pub fn brute_force_oracle<T: Scalar>(
    ctx: &SolverContext<T>,
    cost: &BolzaCost<T>,
    set: &AdmissibleSet<T>,
    intervals: usize,
    levels: usize,
) -> Result<OracleResult<T>> {
    let grid = ControlGrid::new(ctx, intervals)?;
    if set.lower.len() != grid.p {
        return Err(Error::Dimension("box dimension differs from the control dimension".into()));
    }
    if levels == 0 {
        return Err(Error::Domain("oracle needs at least one level".into()));
    }
    let axis: Vec<Vec<T>> = (0..grid.p)
        .map(|c| {
            let (lo, hi) = (set.lower[c], set.upper[c]);
            if lo == hi || levels == 1 {
                vec![lo]
            } else {
                let span = T::from_usize_lossy(levels - 1);
                (0..levels)
                    .map(|k| if k + 1 == levels { hi } else { lo + (hi - lo) * T::from_usize_lossy(k) / span })
                    .collect()
            }
        })
        .collect();
    let radices: Vec<usize> = (0..grid.len()).map(|k| axis[k % grid.p].len()).collect();
    let total = radices.iter().try_fold(1u128, |acc, &r| acc.checked_mul(r as u128)).unwrap_or(u128::MAX);
    if total > ORACLE_LIMIT {
        return Err(Error::GridTooLarge(total));
    }
    let total = total as usize;
    let decode = |mut idx: usize| -> Vec<T> {
        radices
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let digit = idx % r;
                idx /= r;
                axis[k % grid.p][digit]
            })
            .collect()
    };
    let best = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let theta = decode(idx);
            evaluate(ctx, cost, &grid.to_controls(&theta)).map(|(j, _)| (j, idx))
        })
        .reduce_with(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let (j, idx) = best.ok_or_else(|| Error::Optimization("every oracle candidate failed in the solver".into()))?;
    let theta = decode(idx);
    Ok(OracleResult {
        controls: grid.to_controls(&theta),
        parameters: theta,
        cost: j,
        candidates: total,
    })
}

/// `(J(incumbent) - φ_min b) / min(c2, c3)` when `c2, c3 > 0`: an upper
/// bound on the `p`-energy of any control whose cost does not exceed the
/// incumbent.
pub fn coercivity_bound<T: Scalar>(growth: &GrowthConstants<T>, incumbent: T, horizon: T) -> Option<T> {
    let c = growth.c2.min(growth.c3);
    (c > T::zero()).then(|| (incumbent - growth.phi_min * horizon) / c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverConfig;
    use crate::system::SystemSpec;
    use nalgebra::{dmatrix, dvector};

    fn lq(q: f64) -> (SolverContext<f64>, BolzaCost<f64>) {
        let spec = SystemSpec::linear(q, dmatrix![0.0], dmatrix![1.0], dmatrix![0.0], dvector![0.0], 1.0);
        let ctx = SolverContext::new(&spec, &SolverConfig::default().with_nodes(32)).unwrap();
        (ctx, BolzaCost::quadratic(dvector![1.0], 1.0, 1.0, 0.0))
    }

    #[test]
    fn projection_clamps() {
        let set = AdmissibleSet::symmetric(2, 1.0);
        let law = ControlLaw {
            u_segments: vec![SegmentControl::Constant(dvector![2.0, 0.5])],
            v_impulses: vec![dvector![-3.0, 0.5]],
        };
        let p = project_admissible(&law, &set);
        assert_eq!(p.u_segments[0], SegmentControl::Constant(dvector![1.0, 0.5]));
        assert_eq!(p.v_impulses[0], dvector![-1.0, 0.5]);
    }

    #[test]
    fn lq_cost_at_half() {
        let (ctx, cost) = lq(1.0);
        let law = ControlLaw::constant(ctx.spec(), dvector![0.5]);
        let r = ctx.picard(&law, None).unwrap();
        let j = cost_eval(&ctx, &cost, &r.trajectory, &law).unwrap();
        assert!((j - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_counts_and_guard() {
        let (ctx, cost) = lq(1.0);
        let set = AdmissibleSet::new(dvector![0.0], dvector![1.0]).unwrap();
        let one = brute_force_oracle(&ctx, &cost, &set, 1, 3).unwrap();
        assert_eq!(one.candidates, 3);
        assert!((one.cost - 0.5).abs() < 1e-12);
        assert_eq!(brute_force_oracle(&ctx, &cost, &set, 2, 3).unwrap().candidates, 9);
        assert!(matches!(brute_force_oracle(&ctx, &cost, &set, 8, 10), Err(Error::GridTooLarge(_))));
        let collapsed = AdmissibleSet::new(dvector![0.0], dvector![0.0]).unwrap();
        let c = brute_force_oracle(&ctx, &cost, &collapsed, 4, 5).unwrap();
        assert_eq!(c.candidates, 1);
        assert_eq!(c.parameters, vec![0.0; 4]);
    }

    #[test]
    fn lq_optimum() {
        let (ctx, cost) = lq(1.0);
        let r = optimize(&ctx, &cost, &AdmissibleSet::symmetric(1, 10.0), &OptimizeConfig::default()).unwrap();
        assert!((r.cost - 0.5).abs() < 1e-6, "{}", r.cost);
        assert!(r.trace.windows(2).all(|w| w[1].cost <= w[0].cost));
    }
}
