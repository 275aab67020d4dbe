//! Controllability Grammians, the regularized resolvent, steering-control
//! synthesis, the closed-loop fixed point and the `λ → 0⁺` sweep.
//!
//! Segment indices are 0-based: segment `i` runs over `[t_i, t_{i+1}]` and
//! targets waypoint `x_{i+1}`. `Ψ¹` exists for every segment; `Ψ²` exists for
//! segments `1..=m`, where the impulse at `t_i` acts.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solver::{apply_impulse, SolveReport, SolverConfig, SolverContext};
use crate::system::{ControlLaw, SegmentControl, SystemSpec, Trajectory};

/// Desired states `x_1, …, x_{m+1}` at `t_1, …, t_{m+1} = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waypoints<T: Scalar> {
    pub targets: Vec<DVector<T>>,
}

impl<T: Scalar> Waypoints<T> {
    pub fn new(targets: Vec<DVector<T>>) -> Self {
        Self { targets }
    }

    pub fn check(&self, spec: &SystemSpec<T>) -> Result<()> {
        if self.targets.len() != spec.segment_count() {
            return Err(Error::Dimension(format!(
                "{} waypoints for {} segments",
                self.targets.len(),
                spec.segment_count()
            )));
        }
        if let Some(bad) = self.targets.iter().find(|x| x.len() != spec.n()) {
            return Err(Error::Dimension(format!("waypoint of length {} in a {}-state system", bad.len(), spec.n())));
        }
        Ok(())
    }
}

/// `Ψ¹` for every segment and `Ψ²` for segments `1..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrammianPair<T: Scalar> {
    pub psi1: Vec<DMatrix<T>>,
    pub psi2: Vec<DMatrix<T>>,
    pub q: T,
    pub bounds: Vec<T>,
}

impl<T: Scalar> GrammianPair<T> {
    pub fn compute(ctx: &SolverContext<T>) -> Result<Self> {
        let spec = ctx.spec();
        let psi1 = (0..spec.segment_count())
            .map(|i| ctx.grammian_1(i))
            .collect::<Result<Vec<_>>>()?;
        let psi2 = (1..spec.segment_count())
            .map(|i| grammian_2_ctx(ctx, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            psi1,
            psi2,
            q: spec.q,
            bounds: spec.boundaries(),
        })
    }

    /// `Ψ²` of segment `i >= 1`.
    pub fn psi2_of(&self, i: usize) -> Option<&DMatrix<T>> {
        i.checked_sub(1).and_then(|k| self.psi2.get(k))
    }
}

fn grammian_2_ctx<T: Scalar>(ctx: &SolverContext<T>, i: usize) -> Result<DMatrix<T>> {
    let spec = ctx.spec();
    if i == 0 || i > spec.m() {
        return Err(Error::Index {
            index: i,
            valid: format!("1..={}", spec.m()),
        });
    }
    let sd = ctx.segment_propagator(i)? * &spec.d;
    let psi = &sd * sd.transpose();
    Ok((&psi + psi.transpose()) * T::lit(0.5))
}

fn grammian_guard<T: Scalar>(spec: &SystemSpec<T>) -> Result<()> {
    if !(spec.q > T::lit(0.5)) {
        return Err(Error::DivergentGrammian(spec.q.to_f64_lossy()));
    }
    Ok(())
}

/// `Ψ¹ = ∫_{t_i}^{t_{i+1}} T_q(t_{i+1}-s) B Bᵀ T_q(t_{i+1}-s)ᵀ ds` on a grid of
/// `nodes` cells. Requires `q > 1/2`.
pub fn grammian_1<T: Scalar>(spec: &SystemSpec<T>, i: usize, nodes: usize) -> Result<DMatrix<T>> {
    grammian_guard(spec)?;
    let ctx = SolverContext::new(spec, &SolverConfig::default().with_nodes(nodes))?;
    ctx.grammian_1(i)
}

/// `Ψ² = S_q(t_{i+1}-t_i) D Dᵀ S_q(t_{i+1}-t_i)ᵀ` for `i = 1..=m`.
pub fn grammian_2<T: Scalar>(spec: &SystemSpec<T>, i: usize) -> Result<DMatrix<T>> {
    grammian_guard(spec)?;
    if i == 0 || i > spec.m() {
        return Err(Error::Index {
            index: i,
            valid: format!("1..={}", spec.m()),
        });
    }
    let (t0, t1) = spec.segment_bounds(i)?;
    let pair = crate::mlfunc::OperatorPair::new(&spec.a, spec.order()?)?;
    let sd = pair.s(t1 - t0)? * &spec.d;
    let psi = &sd * sd.transpose();
    Ok((&psi + psi.transpose()) * T::lit(0.5))
}

/// `R(λ, Ψ) = (λI + Ψ)^{-1}` through a Cholesky factorization.
pub fn resolvent<T: Scalar>(lambda: T, psi: &DMatrix<T>) -> Result<DMatrix<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::Domain(format!("resolvent needs lambda > 0, got {lambda}")));
    }
    if !psi.is_square() {
        return Err(Error::Dimension("resolvent needs a square matrix".into()));
    }
    let n = psi.nrows();
    let shifted = psi + DMatrix::identity(n, n) * lambda;
    let chol = shifted
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("lambda I + Psi is not positive definite (lambda = {lambda})")))?;
    Ok(chol.inverse())
}

/// Synthesized controls together with the residuals they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis<T: Scalar> {
    pub controls: ControlLaw<T>,
    /// `P_k` for `k = 1..=m+1`; the `u`- and `v`-residuals coincide.
    pub residuals: Vec<DVector<T>>,
}

/// Residual `P_{i+1}(x̂)`: target minus propagated start minus the
/// `f`-convolution, all along `frozen`. Impulse controls are excluded.
pub fn steering_residual<T: Scalar>(
    ctx: &SolverContext<T>,
    waypoints: &Waypoints<T>,
    frozen: &Trajectory<T>,
    i: usize,
) -> Result<DVector<T>> {
    let spec = ctx.spec();
    let base = if i == 0 {
        &spec.x0 - spec.eval_nonlocal(frozen)
    } else {
        let left = frozen.at_boundary(i)?;
        apply_impulse(spec, i, left, &DVector::zeros(spec.p()))?
    };
    let f = ctx.forcing_values(i, frozen)?;
    let conv = ctx.convolve(i, ctx.nodes(), &f)?;
    Ok(&waypoints.targets[i] - ctx.segment_propagator(i)? * base - conv)
}

/// Steering controls `u = Bᵀ T_qᵀ R(λ,Ψ¹) P` on every segment and
/// `v(t_i⁻) = Dᵀ S_qᵀ R(λ,Ψ²) P` at every impulse.
pub fn synthesize_controls<T: Scalar>(
    ctx: &SolverContext<T>,
    grammians: &GrammianPair<T>,
    lambda: T,
    waypoints: &Waypoints<T>,
    frozen: &Trajectory<T>,
) -> Result<Synthesis<T>> {
    let spec = ctx.spec();
    waypoints.check(spec)?;
    let mut u_segments = Vec::with_capacity(spec.segment_count());
    let mut v_impulses = Vec::with_capacity(spec.m());
    let mut residuals = Vec::with_capacity(spec.segment_count());
    for i in 0..spec.segment_count() {
        let p = steering_residual(ctx, waypoints, frozen, i)?;
        let coefficient = resolvent(lambda, &grammians.psi1[i])? * &p;
        u_segments.push(SegmentControl::Steering { coefficient });
        if let Some(psi2) = grammians.psi2_of(i) {
            let w = resolvent(lambda, psi2)? * &p;
            let v = spec.d.tr_mul(&ctx.segment_propagator(i)?.tr_mul(&w));
            v_impulses.push(v);
        }
        residuals.push(p);
    }
    Ok(Synthesis {
        controls: ControlLaw { u_segments, v_impulses },
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop<T: Scalar> {
    pub report: SolveReport<T>,
    pub controls: ControlLaw<T>,
    pub outer_iterations: usize,
    /// Picard sweeps summed over all outer iterations.
    pub picard_iterations: usize,
    pub last_update: T,
}

pub const CLOSED_LOOP_CAP: usize = 100;

/// Alternates synthesis on the current trajectory and a warm-started Picard
/// solve until the trajectory update drops below the Picard tolerance.
pub fn closed_loop_solve<T: Scalar>(
    ctx: &SolverContext<T>,
    grammians: &GrammianPair<T>,
    lambda: T,
    waypoints: &Waypoints<T>,
) -> Result<ClosedLoop<T>> {
    let spec = ctx.spec();
    waypoints.check(spec)?;
    let tol = ctx.config().picard_tol;
    let initial = ctx.picard(&ControlLaw::zero(spec), None)?;
    let mut picard_iterations = initial.iterations;
    let mut x = initial.trajectory;
    let mut update = T::max_finite();
    for outer in 1..=CLOSED_LOOP_CAP {
        let syn = synthesize_controls(ctx, grammians, lambda, waypoints, &x)?;
        let report = ctx.picard(&syn.controls, Some(&x))?;
        picard_iterations += report.iterations;
        update = report.trajectory.node_distance(&x);
        x = report.trajectory.clone();
        if update < tol {
            return Ok(ClosedLoop {
                report,
                controls: syn.controls,
                outer_iterations: outer,
                picard_iterations,
                last_update: update,
            });
        }
        if !update.is_finite() {
            break;
        }
    }
    Err(Error::ClosedLoopDiverged {
        iterations: CLOSED_LOOP_CAP,
        update: update.to_f64_lossy(),
    })
}

/// Terminal error at one waypoint in three forms.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalError<T: Scalar> {
    /// `‖λR(λ,Ψ¹)P‖` for `k = 1`, `‖λ[R(λ,Ψ¹)+R(λ,Ψ²)]P‖` for `k >= 2`.
    pub identity: T,
    /// `‖x_k - x̄(t_k)‖` from the converged trajectory.
    pub direct: T,
    /// Norm of the difference of the two vectors.
    pub mismatch: T,
    /// `‖(I - Ψ¹R(λ,Ψ¹) - Ψ²R(λ,Ψ²))P‖`, what the control law implies.
    pub derived: T,
}

pub fn terminal_error<T: Scalar>(
    ctx: &SolverContext<T>,
    grammians: &GrammianPair<T>,
    lambda: T,
    waypoints: &Waypoints<T>,
    closed: &ClosedLoop<T>,
) -> Result<Vec<TerminalError<T>>> {
    let spec = ctx.spec();
    let traj = &closed.report.trajectory;
    let n = spec.n();
    let eye = DMatrix::<T>::identity(n, n);
    (0..spec.segment_count())
        .map(|i| {
            let p = steering_residual(ctx, waypoints, traj, i)?;
            let r1 = resolvent(lambda, &grammians.psi1[i])?;
            let mut printed = r1.clone();
            let mut implied = &eye - &grammians.psi1[i] * &r1;
            if let Some(psi2) = grammians.psi2_of(i) {
                let r2 = resolvent(lambda, psi2)?;
                printed += &r2;
                implied -= psi2 * r2;
            }
            let identity_vec = printed * &p * lambda;
            let direct_vec = &waypoints.targets[i] - traj.at_boundary(i + 1)?;
            Ok(TerminalError {
                identity: identity_vec.norm(),
                direct: direct_vec.norm(),
                mismatch: (&identity_vec - &direct_vec).norm(),
                derived: (implied * &p).norm(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T: Scalar> {
    pub lambda: T,
    /// Direct terminal errors per waypoint, or the failure message.
    pub outcome: std::result::Result<SweepOutcome<T>, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome<T: Scalar> {
    pub errors: Vec<TerminalError<T>>,
    /// `∫|u|²` summed over segments (`cᵀΨ¹c` per segment).
    pub energy_u: T,
    /// `Σ|v_i|²`.
    pub energy_v: T,
    pub picard_iterations: usize,
    pub outer_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport<T: Scalar> {
    pub lambdas: Vec<T>,
    pub rows: Vec<SweepRow<T>>,
    /// Every row succeeded and every waypoint error strictly decreases.
    pub decreasing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams<T> {
    pub lambda0: T,
    pub ratio: T,
    pub count: usize,
}

impl<T: Scalar> Default for SweepParams<T> {
    fn default() -> Self {
        Self {
            lambda0: T::lit(0.1),
            ratio: T::lit(0.1),
            count: 5,
        }
    }
}

fn control_energy<T: Scalar>(grammians: &GrammianPair<T>, controls: &ControlLaw<T>) -> (T, T) {
    let mut eu = T::zero();
    for (seg, psi) in controls.u_segments.iter().zip(&grammians.psi1) {
        if let SegmentControl::Steering { coefficient } = seg {
            eu += coefficient.dot(&(psi * coefficient));
        }
    }
    let ev = controls.v_impulses.iter().map(|v| v.norm_squared()).fold(T::zero(), |a, b| a + b);
    (eu, ev)
}

/// Closed-loop runs for `λ_j = λ₀ rʲ`, `j = 0..J-1`, in parallel on at most
/// `threads` workers. Rows come back ordered by decreasing `λ`.
pub fn lambda_sweep<T: Scalar>(
    ctx: &SolverContext<T>,
    waypoints: &Waypoints<T>,
    params: SweepParams<T>,
    threads: Option<usize>,
) -> Result<SweepReport<T>> {
    if !(params.lambda0 > T::zero()) {
        return Err(Error::Domain(format!("lambda0 must be positive, got {}", params.lambda0)));
    }
    if !(params.ratio > T::zero() && params.ratio < T::one()) {
        return Err(Error::Domain(format!("ratio must lie in (0, 1), got {}", params.ratio)));
    }
    if params.count < 2 {
        return Err(Error::Domain(format!("sweep needs at least 2 values, got {}", params.count)));
    }
    waypoints.check(ctx.spec())?;
    let grammians = GrammianPair::compute(ctx)?;
    let lambdas: Vec<T> = (0..params.count)
        .map(|j| params.lambda0 * params.ratio.powi(j as i32))
        .collect();
    let run = |lambda: T| -> SweepRow<T> {
        let outcome = closed_loop_solve(ctx, &grammians, lambda, waypoints).and_then(|cl| {
            let errors = terminal_error(ctx, &grammians, lambda, waypoints, &cl)?;
            let (energy_u, energy_v) = control_energy(&grammians, &cl.controls);
            Ok(SweepOutcome {
                errors,
                energy_u,
                energy_v,
                picard_iterations: cl.picard_iterations,
                outer_iterations: cl.outer_iterations,
            })
        });
        SweepRow {
            lambda,
            outcome: outcome.map_err(|e| e.to_string()),
        }
    };
    let rows: Vec<SweepRow<T>> = match threads {
        Some(1) => lambdas.iter().map(|&l| run(l)).collect(),
        _ => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(k) = threads {
                builder = builder.num_threads(k);
            }
            let pool = builder
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
            pool.install(|| lambdas.par_iter().map(|&l| run(l)).collect())
        }
    };
    let decreasing = rows.iter().all(|r| r.outcome.is_ok())
        && rows.windows(2).all(|w| match (&w[0].outcome, &w[1].outcome) {
            (Ok(a), Ok(b)) => a.errors.iter().zip(&b.errors).all(|(x, y)| y.direct < x.direct),
            _ => false,
        });
    Ok(SweepReport {
        lambdas,
        rows,
        decreasing,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentVerdict<T: Scalar> {
    pub segment: usize,
    pub min_eig_psi1: T,
    pub min_eig_psi2: Option<T>,
    pub controllable: bool,
    /// `(λ, λ‖R(λ,Ψ¹)‖, λ‖R(λ,Ψ²)‖)` for three sample `λ`.
    pub decay: Vec<(T, T, Option<T>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllabilityReport<T: Scalar> {
    pub segments: Vec<SegmentVerdict<T>>,
    pub controllable: bool,
}

fn min_eigenvalue<T: Scalar>(psi: &DMatrix<T>) -> T {
    psi.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(T::max_finite(), |a, b| a.min(b))
}

fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(T::zero(), |a, b| a.max(b))
}

/// Finite-dimensional criterion: `λR(λ,Ψ) → 0` iff `Ψ` is positive definite.
/// The verdict requires every `Ψ¹` and every `Ψ²` to be definite.
pub fn linear_controllability_check<T: Scalar>(ctx: &SolverContext<T>) -> Result<ControllabilityReport<T>> {
    let grammians = GrammianPair::compute(ctx)?;
    let sample_lambdas = [T::lit(1e-2), T::lit(1e-4), T::lit(1e-6)];
    let definite = |psi: &DMatrix<T>, min: T| {
        let floor = T::lit(1e-12).max(T::eps() * T::lit(100.0)) * spectral_norm(psi).max(T::one());
        min > floor
    };
    let mut segments = Vec::with_capacity(grammians.psi1.len());
    for (i, psi1) in grammians.psi1.iter().enumerate() {
        let m1 = min_eigenvalue(psi1);
        let psi2 = grammians.psi2_of(i);
        let m2 = psi2.map(min_eigenvalue);
        let mut controllable = definite(psi1, m1);
        if let (Some(p2), Some(v)) = (psi2, m2) {
            controllable &= definite(p2, v);
        }
        let decay = sample_lambdas
            .iter()
            .map(|&l| {
                let d1 = spectral_norm(&resolvent(l, psi1)?) * l;
                let d2 = match psi2 {
                    Some(p2) => Some(spectral_norm(&resolvent(l, p2)?) * l),
                    None => None,
                };
                Ok((l, d1, d2))
            })
            .collect::<Result<Vec<_>>>()?;
        segments.push(SegmentVerdict {
            segment: i,
            min_eig_psi1: m1,
            min_eig_psi2: m2,
            controllable,
            decay,
        });
    }
    let controllable = segments.iter().all(|s| s.controllable);
    Ok(ControllabilityReport { segments, controllable })
}
