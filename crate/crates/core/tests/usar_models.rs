use ea_plan::cost::cost;
use ea_plan::grounding::{ground_pair, parse_plan, validate_plan, GroundOptions, PlanningTask};
use ea_plan::pddl::{parse_domain, parse_problem};
use ea_plan::planner::{astar, hmax, optimal_cost, Estimate, HeuristicKind, Limits};

const DOMAIN: &str = include_str!("../data/usar/domain.pddl");
const ROBOT: &str = include_str!("../data/usar/robot.pddl");
const HUMAN: &str = include_str!("../data/usar/human.pddl");

fn pair() -> (PlanningTask, PlanningTask) {
    let d = parse_domain(DOMAIN).unwrap();
    let r = parse_problem(ROBOT, &d).unwrap();
    let h = parse_problem(HUMAN, &d).unwrap();
    ground_pair((&d, &r), (&d, &h), GroundOptions::default()).unwrap()
}

fn plan(task: &PlanningTask, text: &str) -> Vec<usize> {
    task.resolve_plan(&parse_plan(text).unwrap()).unwrap()
}

const BLUE: &str = "(move p1 p2)(move p2 p3)(move p3 p4)(move p4 p11)(move p11 p13)(move p13 p14)(move p14 p18)(move p18 p17)";
const GREY: &str = "(move p1 p7)(move p7 p12)(move p12 p15)(move p15 p16)(move p16 p17)";
const DOOR: &str = "(move p1 p7)(move p7 p8)(opendoor p8 d1)(movethroughdoor p8 p9 d1)(move p9 p10)(move p10 p13)(move p13 p14)(move p14 p18)(move p18 p17)";

#[test]
fn blue_route_costs_eighty_in_robot_model() {
    let (r, _) = pair();
    let rep = validate_plan(&r, &plan(&r, BLUE));
    assert!(rep.is_valid());
    assert_eq!(rep.total_cost, cost(80));
}

#[test]
fn grey_route_fails_at_blocked_edge() {
    let (r, h) = pair();
    let rep = validate_plan(&r, &plan(&r, GREY));
    assert!(!rep.executable);
    let f = rep.failure.unwrap();
    assert_eq!(f.step, 4);
    assert_eq!(f.action, "move_p16_p17");
    assert!(validate_plan(&h, &plan(&h, GREY)).is_valid());
}

#[test]
fn door_route_needs_unlocked_door() {
    let (r, h) = pair();
    let rep = validate_plan(&r, &plan(&r, DOOR));
    assert!(rep.is_valid());
    assert_eq!(rep.total_cost, cost(100));
    assert!(!validate_plan(&h, &plan(&h, DOOR)).is_valid());
}

#[test]
fn optimal_costs() {
    let (r, h) = pair();
    assert_eq!(optimal_cost(&r, Limits::NONE), Ok(Some(cost(80))));
    assert_eq!(optimal_cost(&h, Limits::NONE), Ok(Some(cost(50))));
    let res = astar(&r, HeuristicKind::Hmax, Limits::NONE);
    assert_eq!(r.actions().len(), h.actions().len());
    match hmax(&r, &r.initial_state()) {
        Estimate::Finite(v) => assert!(v <= res.cost),
        Estimate::Unreachable => panic!("goal reachable"),
    }
}
