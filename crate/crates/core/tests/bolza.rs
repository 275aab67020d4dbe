use std::sync::Arc;
use std::time::Instant;

use fracctrl_core::bolza::{
    brute_force_oracle, coercivity_bound, cost_eval, optimize, project_admissible, AdmissibleSet, BolzaCost,
    GrowthConstants, OptimizeConfig,
};
use fracctrl_core::system::{ControlLaw, ImpulseMap, SegmentControl};
use fracctrl_core::{Error, SolverConfig, SolverContext, SystemSpec};
use nalgebra::{dmatrix, dvector, DVector};
use proptest::prelude::*;

fn lq_spec(q: f64) -> SystemSpec<f64> {
    SystemSpec::linear(q, dmatrix![0.0], dmatrix![1.0], dmatrix![0.0], dvector![0.0], 1.0)
}

fn ctx(spec: &SystemSpec<f64>, nodes: usize) -> SolverContext<f64> {
    SolverContext::new(spec, &SolverConfig::default().with_nodes(nodes)).unwrap()
}

fn lq_cost() -> BolzaCost<f64> {
    BolzaCost::quadratic(dvector![1.0], 1.0, 1.0, 0.0)
}

fn box1(lo: f64, hi: f64) -> AdmissibleSet<f64> {
    AdmissibleSet::new(dvector![lo], dvector![hi]).unwrap()
}

/// Exact minimum of `(g·c - 1)^2 + Σ c_k^2 h` for `K` equal pieces of
/// `u` under the kernel `(1-s)^{q-1} / Γ(q)`: `1 / (1 + Σ g_k^2 / h)`.
fn lq_pieces_minimum(q: f64, k: usize) -> f64 {
    let h = 1.0 / k as f64;
    let gq1 = statrs::function::gamma::gamma(q + 1.0);
    let s: f64 = (0..k)
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let g = ((1.0 - a).powf(q) - (1.0 - b).powf(q)) / gq1;
            g * g / h
        })
        .sum();
    1.0 / (1.0 + s)
}

#[test]
fn cost_examples() {
    let spec = lq_spec(1.0);
    let c = ctx(&spec, 32);
    let zero = ControlLaw::zero(&spec);
    let traj = c.picard(&zero, None).unwrap().trajectory;
    let energy = BolzaCost::quadratic(dvector![0.0], 0.0, 1.0, 1.0);
    assert_eq!(cost_eval(&c, &energy, &traj, &zero).unwrap(), 0.0);

    let unit = BolzaCost {
        terminal: Arc::new(|_: &DVector<f64>| 0.0),
        running: Arc::new(|_, _: &DVector<f64>, _: &DVector<f64>, _: &DVector<f64>| 1.0),
        growth: None,
    };
    assert!((cost_eval(&c, &unit, &traj, &zero).unwrap() - 1.0).abs() < 1e-14);

    let half = ControlLaw::constant(&spec, dvector![0.5]);
    let traj = c.picard(&half, None).unwrap().trajectory;
    assert!((traj.at_boundary(1).unwrap()[0] - 0.5).abs() < 1e-13);
    assert!((cost_eval(&c, &lq_cost(), &traj, &half).unwrap() - 0.5).abs() < 1e-13);
}

#[test]
fn cost_rejects_grid_mismatch() {
    let spec = lq_spec(1.0);
    let traj = ctx(&spec, 16).picard(&ControlLaw::zero(&spec), None).unwrap().trajectory;
    let c = ctx(&spec, 32);
    assert!(matches!(
        cost_eval(&c, &lq_cost(), &traj, &ControlLaw::zero(&spec)),
        Err(Error::ControlShape(_))
    ));
}

#[test]
fn impulse_value_is_held_over_the_next_segment() {
    let reset: ImpulseMap<f64> = Arc::new(|x: &DVector<f64>| x * 0.0);
    let spec = SystemSpec::linear(1.0, dmatrix![0.0], dmatrix![1.0], dmatrix![1.0], dvector![0.0], 3.0)
        .with_impulses(vec![1.0], vec![reset]);
    let c = ctx(&spec, 16);
    let controls = ControlLaw { u_segments: vec![SegmentControl::Constant(dvector![0.0]); 2], v_impulses: vec![dvector![3.0]] };
    let traj = c.picard(&controls, None).unwrap().trajectory;
    let cost = BolzaCost::quadratic(dvector![0.0], 0.0, 0.0, 1.0);
    // |v|^2 = 9 over the second segment of length 2.
    assert!((cost_eval(&c, &cost, &traj, &controls).unwrap() - 18.0).abs() < 1e-12);
}

#[test]
fn projection_examples() {
    let set = box1(-1.0, 1.0);
    let spec = lq_spec(1.0);
    let p = project_admissible(&ControlLaw::constant(&spec, dvector![2.0]), &set);
    assert_eq!(p.u_segments[0], SegmentControl::Constant(dvector![1.0]));
    let inside = ControlLaw::constant(&spec, dvector![0.3]);
    assert_eq!(project_admissible(&inside, &set), inside);
    let set2 = AdmissibleSet::symmetric(2, 1.0);
    let law = ControlLaw { u_segments: vec![], v_impulses: vec![dvector![-3.0, 0.5]] };
    assert_eq!(project_admissible(&law, &set2).v_impulses[0], dvector![-1.0, 0.5]);
    assert!(AdmissibleSet::new(dvector![1.0], dvector![0.0]).is_err());
}

#[test]
fn oracle_examples() {
    let spec = lq_spec(1.0);
    let c = ctx(&spec, 32);
    let r = brute_force_oracle(&c, &lq_cost(), &box1(0.0, 1.0), 1, 3).unwrap();
    assert_eq!(r.candidates, 3);
    assert_eq!(r.parameters, vec![0.5]);
    assert!((r.cost - 0.5).abs() < 1e-13);
    let r = brute_force_oracle(&c, &lq_cost(), &box1(0.0, 0.0), 4, 7).unwrap();
    assert_eq!((r.candidates, r.parameters.clone()), (1, vec![0.0; 4]));
    let r = brute_force_oracle(&c, &lq_cost(), &box1(0.0, 1.0), 2, 3).unwrap();
    assert_eq!(r.candidates, 9);
    assert!(matches!(
        brute_force_oracle(&c, &lq_cost(), &box1(0.0, 1.0), 8, 11),
        Err(Error::GridTooLarge(_))
    ));
}

#[test]
fn lq_classical_optimum() {
    let start = Instant::now();
    let spec = lq_spec(1.0);
    let c = ctx(&spec, 128);
    let set = box1(-10.0, 10.0);
    let opt = optimize(&c, &lq_cost(), &set, &OptimizeConfig::default()).unwrap();
    assert!((opt.cost - 0.5).abs() < 2e-2, "{}", opt.cost);
    for u in &opt.parameters {
        assert!((u - 0.5).abs() < 1e-3, "{:?}", opt.parameters);
    }
    // Oracle over c in {0, 0.01, ..., 1} with one piece.
    let oracle = brute_force_oracle(&c, &lq_cost(), &box1(0.0, 1.0), 1, 101).unwrap();
    assert!((oracle.cost - 0.5).abs() < 1e-12 && (oracle.parameters[0] - 0.5).abs() < 1e-12);
    assert!(opt.cost <= oracle.cost + 1e-6);
    assert!(start.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn lq_fractional_matches_coarse_oracle() {
    let start = Instant::now();
    let spec = lq_spec(0.5);
    let c = ctx(&spec, 256);
    let set = box1(0.0, 1.0);
    // Step 0.05 over two pieces: 21^2 candidates.
    let oracle = brute_force_oracle(&c, &lq_cost(), &set, 2, 21).unwrap();
    assert_eq!(oracle.candidates, 441);
    let cfg = OptimizeConfig { intervals_per_segment: 2, ..OptimizeConfig::default() };
    let shared = optimize(&c, &lq_cost(), &set, &cfg).unwrap();
    assert!(shared.cost <= oracle.cost + 1e-6, "{} vs {}", shared.cost, oracle.cost);
    assert!((shared.cost - oracle.cost).abs() < 5e-2);
    let exact = lq_pieces_minimum(0.5, 2);
    assert!((shared.cost - exact).abs() < 1e-2, "{} vs {exact}", shared.cost);

    let fine = optimize(&c, &lq_cost(), &set, &OptimizeConfig::default()).unwrap();
    assert!(fine.cost <= 1.0 && fine.cost <= oracle.cost + 1e-6);
    let exact = lq_pieces_minimum(0.5, 8);
    assert!((fine.cost - exact).abs() < 1e-2, "{} vs {exact}", fine.cost);
    assert!(start.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn zero_cost_optimum() {
    let reset: ImpulseMap<f64> = Arc::new(|x: &DVector<f64>| x * 0.5);
    let spec = SystemSpec::linear(0.8, dmatrix![-1.0], dmatrix![1.0], dmatrix![1.0], dvector![1.0], 2.0)
        .with_impulses(vec![1.0], vec![reset]);
    let c = ctx(&spec, 32);
    let cost = BolzaCost::quadratic(dvector![0.0], 0.0, 1.0, 1.0);
    let opt = optimize(&c, &cost, &AdmissibleSet::symmetric(1, 2.0), &OptimizeConfig::default()).unwrap();
    assert_eq!(opt.cost, 0.0);
    assert!(opt.parameters.iter().all(|&u| u == 0.0));
}

#[test]
fn incumbent_is_the_projected_zero_control() {
    // Box excludes zero: the incumbent is u = 1 and is never worsened.
    let spec = lq_spec(0.9);
    let c = ctx(&spec, 64);
    let set = box1(1.0, 3.0);
    let cost = BolzaCost::quadratic(dvector![-2.0], 1.0, 0.1, 0.0);
    let opt = optimize(&c, &cost, &set, &OptimizeConfig { intervals_per_segment: 4, ..OptimizeConfig::default() }).unwrap();
    let first = opt.trace[0].cost;
    let ones = ControlLaw::constant(&spec, dvector![1.0]);
    let traj = c.picard(&ones, None).unwrap().trajectory;
    assert!((first - cost_eval(&c, &cost, &traj, &ones).unwrap()).abs() < 1e-12);
    assert!(opt.cost <= first);
    assert!(opt.parameters.iter().all(|&u| (1.0..=3.0).contains(&u)));
    assert!(opt.trace.windows(2).all(|w| w[1].cost <= w[0].cost));
}

#[test]
fn coercivity_bound_holds_along_the_trace() {
    // L = 2 u^2 + 1 satisfies L >= φ + c2 |u|^2 with φ = 1, c2 = 2, p = 2.
    let growth = GrowthConstants { phi_min: 1.0, c1: 0.0, c2: 2.0, c3: 2.0, p: 2.0 };
    let cost = BolzaCost {
        terminal: Arc::new(|x: &DVector<f64>| (x[0] - 3.0).powi(2)),
        running: Arc::new(|_, _: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>| {
            2.0 * u.norm_squared() + 2.0 * v.norm_squared() + 1.0
        }),
        growth: Some(growth),
    };
    let spec = lq_spec(0.8);
    let c = ctx(&spec, 64);
    let opt = optimize(&c, &cost, &AdmissibleSet::symmetric(1, 5.0), &OptimizeConfig::default()).unwrap();
    let bound = coercivity_bound(&growth, opt.trace[0].cost, 1.0).unwrap();
    assert!(bound > 0.0);
    for entry in &opt.trace {
        assert!(entry.energy <= bound + 1e-12, "{entry:?} > {bound}");
    }
    let none = GrowthConstants { c2: 0.0, ..growth };
    assert_eq!(coercivity_bound(&none, 1.0, 1.0), None);
}

#[test]
fn box_dimension_is_checked() {
    let spec = lq_spec(1.0);
    let c = ctx(&spec, 16);
    let set = AdmissibleSet::symmetric(2, 1.0);
    assert!(matches!(optimize(&c, &lq_cost(), &set, &OptimizeConfig::default()), Err(Error::Dimension(_))));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn optimizer_respects_box_and_dominates_oracle(
        lo in -1.0f64..0.5,
        width in 0.0f64..1.5,
        target in -2.0f64..2.0,
        q in 0.6f64..=1.0,
    ) {
        let spec = lq_spec(q);
        let c = ctx(&spec, 32);
        let set = box1(lo, lo + width);
        let cost = BolzaCost::quadratic(dvector![target], 1.0, 0.5, 0.0);
        let oracle = brute_force_oracle(&c, &cost, &set, 2, 5).unwrap();
        let cfg = OptimizeConfig { intervals_per_segment: 2, max_iter: 200, ..OptimizeConfig::default() };
        let opt = optimize(&c, &cost, &set, &cfg).unwrap();
        prop_assert!(opt.parameters.iter().all(|&u| u >= lo && u <= lo + width));
        prop_assert!(opt.cost <= oracle.cost + 1e-6, "{} vs {}", opt.cost, oracle.cost);
    }
}
