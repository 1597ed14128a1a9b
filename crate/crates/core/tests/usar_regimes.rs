use ea_plan::baseline::model_space_search;
use ea_plan::compile::{CompileConfig, ExplanationCosts, ModelUpdate, Ordering, Stage};
use ea_plan::corpus;
use ea_plan::cost::cost;
use ea_plan::grounding::parse_plan;
use ea_plan::planner::Limits;
use ea_plan::solve::{solve_ea, SolveConfig, SolveMode, SolveStatus};

fn cfg(expl: i64) -> SolveConfig {
    SolveConfig {
        compile: CompileConfig {
            costs: ExplanationCosts::uniform(cost(expl)),
            ordering: Ordering::PlanPrefix,
            stage: Stage::Execute,
            inference: true,
            restrict_unused: true,
        },
        ..Default::default()
    }
}

fn plan(text: &str) -> Vec<String> {
    parse_plan(text).unwrap()
}

#[test]
fn regimes() {
    let p = corpus::usar().unwrap();
    let o = solve_ea(&p, SolveMode::OptimalGuard, &cfg(1)).unwrap();
    println!("{:?}", o.augmented_plan);
    let s = o.solution.unwrap();
    assert_eq!(o.objective, cost(82));
    assert_eq!(s.explanation, vec![ModelUpdate::init(true, "clear_p2_p3"), ModelUpdate::init(false, "clear_p16_p17")]);

    let o = solve_ea(&p, SolveMode::OptimalGuard, &cfg(100)).unwrap();
    println!("{:?}", o.augmented_plan);
    assert_eq!(o.objective, cost(200));

    let o = solve_ea(&p, SolveMode::Penalty(cost(50)), &cfg(100)).unwrap();
    println!("{:?}", o.augmented_plan);
    assert_eq!(o.objective, cost(150));

    let o = solve_ea(&p, SolveMode::Valid, &cfg(1)).unwrap();
    println!("{:?} {}", o.augmented_plan, o.objective);

    let (b, trace) = model_space_search(&p, &ExplanationCosts::uniform(cost(1)), Limits::NONE).unwrap();
    assert_eq!(b.status, SolveStatus::Solved);
    println!("{:?} {}", b.solution, trace.len());
    let _ = plan("(move p1 p2)");
}
