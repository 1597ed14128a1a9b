use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::sample::Index;

use ea_plan::bench::perturb_model;
use ea_plan::compile::{compile, diff_models, verify_solution, CompileConfig, EaProblem, ExplanationCosts, Ordering, Stage};
use ea_plan::corpus;
use ea_plan::cost::{cost, Cost};
use ea_plan::grounding::{load_task, validate_plan, GroundOptions, PlanningTask, State};
use ea_plan::oracle::goal_distances;
use ea_plan::pddl::serialize_task;
use ea_plan::planner::{astar, hmax, Estimate, HeuristicKind, Limits, SearchStatus};
use ea_plan::solve::{solve_ea, strategy_by_name, SolveConfig, SolveMode, SolveStatus};

const BASES: &[(&str, &str)] = &[
    (corpus::BLOCKSWORLD_DOMAIN, corpus::BW3_TABLE),
    (corpus::BLOCKSWORLD_DOMAIN, corpus::BW3_REVERSE),
    (corpus::GRIPPER_DOMAIN, corpus::GRIPPER_P01),
    (corpus::ELEVATOR_DOMAIN, corpus::ELEVATOR_P01),
    (corpus::SATELLITE_DOMAIN, corpus::SATELLITE_P01),
];

fn base(i: usize) -> &'static PlanningTask {
    static TASKS: OnceLock<Vec<PlanningTask>> = OnceLock::new();
    &TASKS.get_or_init(|| BASES.iter().map(|(d, p)| load_task(d, p, GroundOptions::default()).unwrap()).collect())[i]
}

fn toy(i: usize, n: usize, seed: u64) -> EaProblem {
    let robot = base(i).clone();
    let human = perturb_model(&robot, n, seed).unwrap();
    EaProblem::new(robot, human).unwrap()
}

fn toy_strategy() -> impl Strategy<Value = EaProblem> {
    (0..BASES.len(), 1usize..=4, any::<u64>()).prop_map(|(i, n, seed)| toy(i, n, seed))
}

fn compile_cfg(expl: Cost, ordering: Ordering, stage: Stage) -> CompileConfig {
    CompileConfig { costs: ExplanationCosts::uniform(expl), ordering, stage, inference: true, restrict_unused: true }
}

fn ordering() -> impl Strategy<Value = Ordering> {
    prop_oneof![Just(Ordering::Free), Just(Ordering::BeforeFirstUse), Just(Ordering::PlanPrefix)]
}

fn stage() -> impl Strategy<Value = Stage> {
    prop_oneof![Just(Stage::Propose), Just(Stage::Execute)]
}

/// States along a random walk, choosing among applicable actions.
fn walk(task: &PlanningTask, picks: &[Index]) -> Vec<State> {
    let mut s = task.initial_state();
    let mut out = vec![s.clone()];
    for ix in picks {
        let apps: Vec<_> = task.applicable_ids(&s).collect();
        if apps.is_empty() {
            break;
        }
        s = task.apply(&s, apps[ix.index(apps.len())]).unwrap();
        out.push(s.clone());
    }
    out
}

fn guard_cfg(expl: Cost) -> SolveConfig {
    SolveConfig { compile: compile_cfg(expl, Ordering::PlanPrefix, Stage::Propose), ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn apply_is_deterministic(p in toy_strategy(), o in ordering(), st in stage(), picks in prop::collection::vec(any::<Index>(), 0..15)) {
        let aug = compile(&p, &compile_cfg(cost(1), o, st)).unwrap();
        let t = &aug.task;
        for s in walk(t, &picks) {
            for a in t.applicable_ids(&s) {
                prop_assert_eq!(t.apply(&s, a).unwrap(), t.apply(&s, a).unwrap());
            }
        }
    }

    #[test]
    fn removing_a_guard_keeps_actions_applicable(p in toy_strategy(), o in ordering(), st in stage(), picks in prop::collection::vec(any::<Index>(), 0..15)) {
        let aug = compile(&p, &compile_cfg(cost(1), o, st)).unwrap();
        let t = &aug.task;
        for s in walk(t, &picks) {
            for a in t.applicable_ids(&s) {
                let act = t.action(a);
                for imp in &act.implications {
                    if s.contains(imp.guard) && !act.pre.contains(&imp.guard) {
                        let mut weaker = s.clone();
                        weaker.remove(imp.guard);
                        prop_assert!(t.applicable(&weaker, a), "{} lost applicability", act.name);
                    }
                }
            }
        }
    }

    #[test]
    fn plan_cost_is_the_sum_of_action_costs(i in 0..BASES.len(), picks in prop::collection::vec(any::<Index>(), 0..20)) {
        // Arbitrary sequences, applicable or not.
        let t = base(i);
        let plan: Vec<_> = picks.iter().map(|ix| ix.index(t.actions().len())).collect();
        let sum: Cost = plan.iter().map(|&a| t.action(a).cost).sum();
        prop_assert_eq!(validate_plan(t, &plan).total_cost, sum);
    }

    #[test]
    fn perturbed_tasks_round_trip_through_pddl(i in 0..BASES.len(), n in 0usize..6, seed in any::<u64>()) {
        let human = perturb_model(base(i), n, seed).unwrap();
        let text = serialize_task(&human);
        let back = load_task(&text.domain, &text.problem, GroundOptions { prune: false, ..Default::default() }).unwrap();
        prop_assert!(diff_models(&human, &back).unwrap().is_empty());
        prop_assert_eq!(back.fluents().len(), human.fluents().len());
        // Lifted schema and arguments do not survive grounded output.
        let key = |t: &PlanningTask| -> Vec<_> {
            t.actions().iter().map(|a| (a.name.clone(), a.pre.clone(), a.effects.clone(), a.cost)).collect()
        };
        prop_assert_eq!(key(&back), key(&human));
    }

    #[test]
    fn perturbation_yields_exactly_n_updates(i in 0..BASES.len(), n in 0usize..8, seed in any::<u64>()) {
        let robot = base(i);
        let human = perturb_model(robot, n, seed).unwrap();
        prop_assert_eq!(diff_models(robot, &human).unwrap().len(), n);
        prop_assert_eq!(&perturb_model(robot, n, seed).unwrap(), &human);
    }

    #[test]
    fn applying_the_full_diff_recovers_the_robot_model(p in toy_strategy()) {
        let full = p.updated_human(&p.diff().updates()).unwrap();
        prop_assert!(diff_models(p.robot(), &full).unwrap().is_empty());
    }

    #[test]
    fn compiled_size_is_linear(p in toy_strategy(), o in ordering(), st in stage(), inference in any::<bool>()) {
        let mut cfg = compile_cfg(cost(1), o, st);
        cfg.inference = inference;
        let s = compile(&p, &cfg).unwrap().size();
        prop_assert!(s.within_bound(), "{:?}", s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn hmax_is_admissible_on_compiled_tasks(p in toy_strategy(), o in ordering(), picks in prop::collection::vec(any::<Index>(), 0..12)) {
        let aug = compile(&p, &compile_cfg(cost(2), o, Stage::Execute)).unwrap();
        let t = &aug.task;
        let dist = goal_distances(t, 500_000).unwrap();
        for s in walk(t, &picks) {
            match (hmax(t, &s), dist.get(&s)) {
                (Estimate::Finite(h), Some(d)) => prop_assert!(h <= *d, "h {} > h* {}", h, d),
                (Estimate::Unreachable, Some(d)) => prop_assert!(false, "dead end claimed, h* {}", d),
                _ => {}
            }
        }
    }

    #[test]
    fn hmax_and_blind_agree_and_search_is_deterministic(p in toy_strategy(), o in ordering(), st in stage()) {
        let aug = compile(&p, &compile_cfg(cost(1), o, st)).unwrap();
        let h = astar(&aug.task, HeuristicKind::Hmax, Limits::NONE);
        let b = astar(&aug.task, HeuristicKind::Blind, Limits::NONE);
        prop_assert_eq!(h.status, b.status);
        if h.status == SearchStatus::Solved {
            prop_assert_eq!(h.cost, b.cost);
        }
        prop_assert_eq!(astar(&aug.task, HeuristicKind::Hmax, Limits::NONE).plan, h.plan);
    }

    #[test]
    fn memoization_does_not_change_results(p in toy_strategy(), expl in 1i64..4) {
        let on = guard_cfg(cost(expl));
        let off = SolveConfig { memoize: false, ..on.clone() };
        let a = solve_ea(&p, SolveMode::OptimalGuard, &on).unwrap();
        let b = solve_ea(&p, SolveMode::OptimalGuard, &off).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.objective, b.objective);
        prop_assert_eq!(a.solution, b.solution);
    }

    #[test]
    fn objective_is_monotone_in_explanation_cost(p in toy_strategy(), lo in 1i64..4, step in 0i64..4) {
        for mode in [SolveMode::Valid, SolveMode::OptimalGuard] {
            let a = solve_ea(&p, mode, &guard_cfg(cost(lo))).unwrap();
            let b = solve_ea(&p, mode, &guard_cfg(cost(lo + step))).unwrap();
            prop_assert_eq!(a.status, b.status);
            if a.status == SolveStatus::Solved {
                prop_assert!(a.objective <= b.objective);
            }
        }
    }

    #[test]
    fn guard_and_baseline_solutions_are_optimal_for_the_observer(p in toy_strategy()) {
        let cfg = guard_cfg(cost(1));
        let guard = solve_ea(&p, SolveMode::OptimalGuard, &cfg).unwrap();
        let base = strategy_by_name("baseline").unwrap().solve(&p, &cfg).unwrap();
        for out in [&guard, &base] {
            if let Some(sol) = &out.solution {
                let check = verify_solution(&p, sol, Some(Limits::NONE)).unwrap();
                prop_assert!(check.valid && check.optimal_in_human == Some(true), "{}: {:?}", out.method, check);
            }
        }
        if let (Some(g), Some(b)) = (&guard.solution, &base.solution) {
            prop_assert!(g.total_cost() <= b.total_cost());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn oracle_minimum_matches_valid_mode_on_blocksworld(i in 0usize..2, n in 1usize..=6, seed in any::<u64>(), expl in 1i64..4) {
        let p = toy(i, n, seed);
        let costs = ExplanationCosts::uniform(cost(expl));
        let oracle = ea_plan::oracle::min_solution_cost(&p, &costs, &ea_plan::oracle::OracleCaps::default()).unwrap();
        let out = solve_ea(&p, SolveMode::Valid, &guard_cfg(cost(expl))).unwrap();
        prop_assert_eq!((out.status == SolveStatus::Solved).then_some(out.objective), oracle);
    }
}
