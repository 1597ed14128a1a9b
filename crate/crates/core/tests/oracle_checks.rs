use ea_plan::compile::{CompileConfig, EaProblem, ExplanationCosts, ModelUpdate, Ordering, Stage};
use ea_plan::corpus;
use ea_plan::cost::cost;
use ea_plan::grounding::{load_task, GroundOptions};
use ea_plan::oracle::{enumerate_ea_solutions, exact_delta, goal_distances, mce, min_solution_cost, optimal_plans, OracleCaps};
use ea_plan::solve::{solve_ea, SolveConfig, SolveMode};

const BLUE: &[&str] =
    &["move_p1_p2", "move_p2_p3", "move_p3_p4", "move_p4_p11", "move_p11_p13", "move_p13_p14", "move_p14_p18", "move_p18_p17"];
const DOOR: &[&str] = &[
    "move_p1_p7",
    "move_p7_p8",
    "opendoor_p8_d1",
    "movethroughdoor_p8_p9_d1",
    "move_p9_p10",
    "move_p10_p13",
    "move_p13_p14",
    "move_p14_p18",
    "move_p18_p17",
];

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn usar_enumeration_contains_blue_route_with_two_updates() {
    let p = corpus::usar().unwrap();
    let sols = enumerate_ea_solutions(&p, &ExplanationCosts::uniform(cost(1)), cost(82), 9, &OracleCaps::default()).unwrap();
    assert!(!sols.is_empty());
    assert!(sols.iter().all(|s| s.total_cost() <= cost(82)));
    let blue = sols.iter().find(|s| s.plan == names(BLUE) && s.explanation.len() == 2).expect("blue route");
    assert_eq!(blue.explanation_cost, cost(2));
    // One explanation is enough for mere validity.
    assert!(sols.iter().any(|s| s.plan == names(BLUE) && s.explanation == vec![ModelUpdate::init(true, "clear_p2_p3")]));
}

#[test]
fn usar_door_route_needs_the_unlock_explained() {
    let p = corpus::usar().unwrap();
    let sols = enumerate_ea_solutions(&p, &ExplanationCosts::uniform(cost(100)), cost(200), 9, &OracleCaps::default()).unwrap();
    let door: Vec<_> = sols.iter().filter(|s| s.plan == names(DOOR)).collect();
    // Without execute-stage inference the human expects the door to stay shut.
    assert!(door.iter().all(|s| !s.explanation.is_empty()));
    assert!(door.iter().any(|s| s.explanation == vec![ModelUpdate::init(true, "unlocked_d1")]));
    // Two updates at 100 each push the blue route past the cap.
    let blue: Vec<_> = sols.iter().filter(|s| s.plan == names(BLUE)).collect();
    assert_eq!(blue.len(), 1);
    assert_eq!(blue[0].total_cost(), cost(180));
}

#[test]
fn usar_mce_of_blue_route() {
    let p = corpus::usar().unwrap();
    let e = mce(&p, &names(BLUE), &ExplanationCosts::uniform(cost(1)), &OracleCaps::default()).unwrap().unwrap();
    assert_eq!(e, vec![ModelUpdate::init(true, "clear_p2_p3"), ModelUpdate::init(false, "clear_p16_p17")]);
    let e = mce(&p, &names(DOOR), &ExplanationCosts::uniform(cost(1)), &OracleCaps::default()).unwrap().unwrap();
    assert_eq!(e, vec![ModelUpdate::init(true, "unlocked_d1"), ModelUpdate::init(false, "clear_p16_p17")]);
}

#[test]
fn usar_min_cost_matches_valid_compilation() {
    let p = corpus::usar().unwrap();
    let costs = ExplanationCosts::uniform(cost(1));
    let oracle = min_solution_cost(&p, &costs, &OracleCaps::default()).unwrap().unwrap();
    assert_eq!(oracle, cost(81));
    let cfg = SolveConfig {
        compile: CompileConfig {
            costs,
            ordering: Ordering::PlanPrefix,
            stage: Stage::Propose,
            inference: false,
            restrict_unused: true,
        },
        ..Default::default()
    };
    assert_eq!(solve_ea(&p, SolveMode::Valid, &cfg).unwrap().objective, oracle);
}

#[test]
fn identical_models_need_no_explanation() {
    let p = EaProblem::from_pddl(corpus::BLOCKSWORLD_DOMAIN, corpus::BW3_TABLE, corpus::BLOCKSWORLD_DOMAIN, corpus::BW3_TABLE)
        .unwrap();
    assert!(p.diff().is_empty());
    let costs = ExplanationCosts::uniform(cost(1));
    assert_eq!(min_solution_cost(&p, &costs, &OracleCaps::default()).unwrap(), Some(cost(4)));
    let plans = optimal_plans(p.robot(), 6, &OracleCaps::default()).unwrap();
    for plan in &plans {
        assert_eq!(mce(&p, plan, &costs, &OracleCaps::default()).unwrap(), Some(vec![]));
    }
}

const TWO_ROUTES: &str = "(define (domain two) (:requirements :strips :action-costs)
  (:predicates (s) (g))
  (:functions (total-cost))
  (:action short :parameters () :precondition (s) :effect (and (g) (increase (total-cost) 4)))
  (:action long :parameters () :precondition (s) :effect (and (g) (increase (total-cost) 6))))";
const TWO_ROUTES_P: &str = "(define (problem two-p) (:domain two) (:init (s) (= (total-cost) 0)) (:goal (g)))";

#[test]
fn exact_delta_on_two_route_task() {
    let t = load_task(TWO_ROUTES, TWO_ROUTES_P, GroundOptions::default()).unwrap();
    let d = exact_delta(&t, cost(50), &OracleCaps::default()).unwrap().unwrap();
    assert_eq!((d.optimal, d.delta, d.censored), (cost(4), Some(cost(2)), false));
    // Below the second route the gap is unobservable.
    let d = exact_delta(&t, cost(5), &OracleCaps::default()).unwrap().unwrap();
    assert_eq!((d.optimal, d.delta, d.censored), (cost(4), None, true));
}

#[test]
fn goal_distances_on_bw3() {
    let t = load_task(corpus::BLOCKSWORLD_DOMAIN, corpus::BW3_REVERSE, GroundOptions::default()).unwrap();
    let d = goal_distances(&t, 10_000).unwrap();
    assert_eq!(d[&t.initial_state()], cost(6));
    // All 22 arrangements of three blocks with the hand empty or holding one.
    assert_eq!(d.len(), 22);
}
