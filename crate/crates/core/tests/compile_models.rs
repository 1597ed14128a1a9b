use ea_plan::compile::{
    compile, extract_solution, verify_solution, CompileConfig, EaProblem, EaSolution, ModelUpdate, Ordering, Part, Stage,
};
use ea_plan::corpus;
use ea_plan::cost::cost;
use ea_plan::grounding::{load_task, EffectGroup, GroundOptions, PlanningTask};
use ea_plan::pddl::serialize_task;
use ea_plan::planner::{astar, HeuristicKind, Limits};

fn names(sol_plan: &str) -> Vec<String> {
    ea_plan::grounding::parse_plan(sol_plan).unwrap()
}

const BLUE: &str = "(move p1 p2)(move p2 p3)(move p3 p4)(move p4 p11)(move p11 p13)(move p13 p14)(move p14 p18)(move p18 p17)";
const PASSAGE: &str = "(move p1 p2)(move p2 p5)(clear_passage p5 p6)(move p5 p6)(move p6 p10)(move p10 p13)(move p13 p14)(move p14 p18)(move p18 p17)";

fn sol(explanation: Vec<ModelUpdate>, plan: &str) -> EaSolution {
    EaSolution { explanation, plan: names(plan), explanation_cost: cost(0), task_cost: cost(0) }
}

#[test]
fn usar_diff_has_the_three_init_updates() {
    let p = corpus::usar().unwrap();
    let d = p.diff();
    assert_eq!(d.len(), 3);
    assert!(d.plus.contains(&ModelUpdate::init(true, "clear_p2_p3")));
    assert!(d.plus.contains(&ModelUpdate::init(true, "unlocked_d1")));
    assert!(d.minus.contains(&ModelUpdate::init(false, "clear_p16_p17")));
    assert_eq!(ModelUpdate::init(false, "clear_p16_p17").to_string(), "remove-(clear_p16_p17)-from-I");
}

#[test]
fn identical_models_compile_to_plain_plan() {
    let p = EaProblem::from_pddl(corpus::USAR_DOMAIN, corpus::USAR_ROBOT, corpus::USAR_DOMAIN, corpus::USAR_ROBOT).unwrap();
    assert!(p.diff().is_empty());
    let aug = compile(&p, &CompileConfig::default()).unwrap();
    assert_eq!(aug.meta_fluents().count(), 0);
    let r = astar(&aug.task, HeuristicKind::Hmax, Limits::NONE);
    let plan = r.plan.unwrap();
    assert_eq!(aug.task.action(plan[0]).name, "ea_start");
    assert_eq!(aug.task.action(*plan.last().unwrap()).name, "ea_finish");
    assert_eq!(r.cost, cost(80));
    let s = extract_solution(&aug, &plan).unwrap();
    assert!(s.explanation.is_empty());
    assert_eq!(s.plan, names(BLUE));
}

#[test]
fn missing_precondition_becomes_prec_add() {
    let p = EaProblem::from_pddl(corpus::USAR_DOMAIN, corpus::USAR_ROBOT, corpus::USAR_HUMAN_DOMAIN_NOCLEAR, corpus::USAR_HUMAN)
        .unwrap();
    let u = ModelUpdate::action(Part::Prec, true, "move_p1_p2", "clear_p1_p2");
    assert!(p.diff().plus.contains(&u));
    assert_eq!(u.meta_name(), "mu+_prec__move_p1_p2__clear_p1_p2");

    let cfg = CompileConfig { ordering: Ordering::Free, ..Default::default() };
    let aug = compile(&p, &cfg).unwrap();
    let t = &aug.task;
    let mv = t.action(t.action_id("move_p1_p2").unwrap());
    let name = |f| t.fluent_name(f).to_string();
    let pre: Vec<String> = mv.pre.iter().map(|&f| name(f)).collect::<Vec<_>>().tap_sort();
    assert_eq!(pre, ["at_p1", "bel_at_p1", "clear_p1_p2"]);
    assert_eq!(mv.implications.len(), 1);
    assert_eq!(name(mv.implications[0].guard), "mu+_prec__move_p1_p2__clear_p1_p2");
    assert_eq!(name(mv.implications[0].consequent), "bel_clear_p1_p2");
    let eff = mv.unconditional();
    let mut add: Vec<String> = eff.add.iter().map(|&f| name(f)).collect();
    add.sort();
    assert_eq!(add, ["at_p2", "bel_at_p2"]);
    let explain = t.action(t.action_id("explain_mu+_prec__move_p1_p2__clear_p1_p2").unwrap());
    assert!(explain.pre.is_empty());
    assert_eq!(explain.unconditional().add.iter().map(|&f| name(f)).collect::<Vec<_>>(), ["mu+_prec__move_p1_p2__clear_p1_p2"]);

    let pddl = serialize_task(t);
    assert!(pddl.domain.contains("(imply (mu+_prec__move_p1_p2__clear_p1_p2) (bel_clear_p1_p2))"));
    assert!(pddl.domain.contains(":disjunctive-preconditions"));
}

trait TapSort {
    fn tap_sort(self) -> Self;
}

impl TapSort for Vec<String> {
    fn tap_sort(mut self) -> Self {
        self.sort();
        self
    }
}

#[test]
fn full_diff_recovers_robot_model() {
    let p = EaProblem::from_pddl(corpus::USAR_DOMAIN, corpus::USAR_ROBOT, corpus::USAR_HUMAN_DOMAIN_NOCLEAR, corpus::USAR_HUMAN)
        .unwrap();
    let all = p.diff().updates();
    assert_eq!(&p.updated_human(&all).unwrap(), p.robot());
    assert_eq!(&p.updated_human(&[]).unwrap(), p.human());
    let mut twice = all.clone();
    twice.extend(all.iter().cloned());
    assert_eq!(&p.updated_human(&twice).unwrap(), p.robot());
    assert!(p.updated_human(&[ModelUpdate::init(true, "at_p9")]).is_err());
}

#[test]
fn opendoor_gets_inference_effect() {
    let p = corpus::usar().unwrap();
    let cfg = CompileConfig { stage: Stage::Execute, ..Default::default() };
    let aug = compile(&p, &cfg).unwrap();
    let t = &aug.task;
    let od = t.action(t.action_id("opendoor_p8_d1").unwrap());
    let name = |f| t.fluent_name(f).to_string();
    let rendered: Vec<(Vec<String>, Vec<String>)> = od
        .conditional()
        .iter()
        .map(|g: &EffectGroup| {
            (g.when.iter().map(|&f| name(f)).collect(), g.add.iter().map(|&f| name(f)).collect::<Vec<_>>().tap_sort())
        })
        .collect();
    assert!(rendered.contains(&(vec!["unlocked_d1".into()], vec!["open_d1".into()])));
    assert!(rendered.contains(&(vec!["bel_unlocked_d1".into()], vec!["bel_open_d1".into()])));
    assert!(rendered.contains(&(
        vec!["unlocked_d1".into()],
        vec!["bel_open_d1".into(), "bel_unlocked_d1".into(), "mu+_init__unlocked_d1".into()]
    )));

    let propose = compile(&p, &CompileConfig::default()).unwrap();
    let same = ea_plan::compile::annotate_side_effects(&propose, Stage::Propose, true).unwrap();
    assert_eq!(same.task, propose.task);
    let exec = ea_plan::compile::annotate_side_effects(&propose, Stage::Execute, true).unwrap();
    assert_eq!(exec.task, aug.task);
}

#[test]
fn both_usar_solutions_verify() {
    let p = corpus::usar().unwrap();
    let two = vec![ModelUpdate::init(true, "clear_p2_p3"), ModelUpdate::init(false, "clear_p16_p17")];
    let opt = Some(Limits::NONE);
    let c = verify_solution(&p, &sol(two.clone(), BLUE), opt).unwrap();
    assert!(c.valid && c.optimal_in_human == Some(true));
    let c = verify_solution(&p, &sol(vec![], PASSAGE), None).unwrap();
    assert!(c.valid);
    assert_eq!(c.robot.total_cost, cost(130));
    let c = verify_solution(&p, &sol(vec![], BLUE), None).unwrap();
    assert!(c.robot.is_valid());
    assert!(!c.human.is_valid());
    assert_eq!(c.human.failure.unwrap().action, "move_p2_p3");
    let c = verify_solution(&p, &sol(vec![two[0].clone()], BLUE), opt).unwrap();
    assert!(c.human.is_valid());
    assert_eq!(c.optimal_in_human, Some(false));
}

#[test]
fn trivial_augmented_plan_extracts_nothing() {
    let dom = "(define (domain t) (:predicates (p)))";
    let prob = "(define (problem t1) (:domain t) (:init (p)) (:goal (and (p))))";
    let t = load_task(dom, prob, GroundOptions::default()).unwrap();
    let p = EaProblem::new(t.clone(), t).unwrap();
    let aug = compile(&p, &CompileConfig::default()).unwrap();
    let plan = vec![aug.task.action_id("ea_start").unwrap(), aug.task.action_id("ea_finish").unwrap()];
    let s = extract_solution(&aug, &plan).unwrap();
    assert!(s.explanation.is_empty() && s.plan.is_empty());
    assert!(extract_solution(&aug, &plan[1..]).is_err());
}

fn bw_with_prec_gap() -> EaProblem {
    let r = load_task(corpus::BLOCKSWORLD_DOMAIN, corpus::BW3_TABLE, GroundOptions::default()).unwrap();
    let mut actions = r.actions().to_vec();
    let id = r.action_id("pick-up_a").unwrap();
    let clear_a = r.fluent_id("clear_a").unwrap();
    actions[id].pre.retain(|&f| f != clear_a);
    let h = PlanningTask::new("bw-human", r.fluents().to_vec(), actions, r.init().to_vec(), r.goal().to_vec()).unwrap();
    EaProblem::new(r, h).unwrap()
}

#[test]
fn blocksworld_single_prec_gap_size() {
    let p = bw_with_prec_gap();
    assert_eq!(p.diff().len(), 1);
    let f = p.robot().num_fluents();
    let cfg = CompileConfig { ordering: Ordering::Free, ..Default::default() };
    let aug = compile(&p, &cfg).unwrap();
    assert_eq!(aug.task.num_fluents(), 2 * f + 1 + 2);
    assert_eq!(aug.task.actions().len(), p.robot().actions().len() + 1 + 2);
    for ordering in [Ordering::Free, Ordering::BeforeFirstUse, Ordering::PlanPrefix] {
        for stage in [Stage::Propose, Stage::Execute] {
            let aug = compile(&p, &CompileConfig { ordering, stage, ..Default::default() }).unwrap();
            assert!(aug.size().within_bound(), "{ordering} {stage}");
        }
    }
}

#[test]
fn diff_and_solution_json() {
    let p = corpus::usar().unwrap();
    let j = serde_json::to_value(p.diff()).unwrap();
    assert_eq!(j["minus"][0]["kind"], "init-remove");
    assert_eq!(j["minus"][0]["fluent"], "clear_p16_p17");
    assert!(j["minus"][0].get("action").is_none());
    let s = sol(vec![ModelUpdate::init(true, "clear_p2_p3")], BLUE);
    let back: EaSolution = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
}
