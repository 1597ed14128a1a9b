//! Bundled example models, embedded at build time.

use crate::compile::EaProblem;
use crate::error::Result;

pub const USAR_DOMAIN: &str = include_str!("../data/usar/domain.pddl");
pub const USAR_HUMAN_DOMAIN_NOCLEAR: &str = include_str!("../data/usar/domain-human-noclear.pddl");
pub const USAR_ROBOT: &str = include_str!("../data/usar/robot.pddl");
pub const USAR_HUMAN: &str = include_str!("../data/usar/human.pddl");

pub const BLOCKSWORLD_DOMAIN: &str = include_str!("../data/blocksworld/domain.pddl");
pub const BW3_TABLE: &str = include_str!("../data/blocksworld/bw3-table.pddl");
pub const BW3_REVERSE: &str = include_str!("../data/blocksworld/bw3-reverse.pddl");

/// The search-and-rescue pair: the robot knows P2-P3 is clear and the door
/// at P8 unlocked; the human wrongly believes P16-P17 is clear.
pub fn usar() -> Result<EaProblem> {
    EaProblem::from_pddl(USAR_DOMAIN, USAR_ROBOT, USAR_DOMAIN, USAR_HUMAN)
}

pub const BW4: &str = include_str!("../data/blocksworld/bw4.pddl");

pub const GRIPPER_DOMAIN: &str = include_str!("../data/gripper/domain.pddl");
pub const GRIPPER_P01: &str = include_str!("../data/gripper/p01.pddl");
pub const GRIPPER_P02: &str = include_str!("../data/gripper/p02.pddl");

pub const DRIVERLOG_DOMAIN: &str = include_str!("../data/driverlog/domain.pddl");
pub const DRIVERLOG_P01: &str = include_str!("../data/driverlog/p01.pddl");
pub const DRIVERLOG_P02: &str = include_str!("../data/driverlog/p02.pddl");

pub const ELEVATOR_DOMAIN: &str = include_str!("../data/elevator/domain.pddl");
pub const ELEVATOR_P01: &str = include_str!("../data/elevator/p01.pddl");
pub const ELEVATOR_P02: &str = include_str!("../data/elevator/p02.pddl");
pub const ELEVATOR_P03: &str = include_str!("../data/elevator/p03.pddl");
pub const ELEVATOR_P04: &str = include_str!("../data/elevator/p04.pddl");

pub const SATELLITE_DOMAIN: &str = include_str!("../data/satellite/domain.pddl");
pub const SATELLITE_P01: &str = include_str!("../data/satellite/p01.pddl");

/// A named (domain, problem) pair from the bundled corpus.
#[derive(Debug, Clone, Copy)]
pub struct Instance {
    pub domain_name: &'static str,
    pub problem_name: &'static str,
    pub domain: &'static str,
    pub problem: &'static str,
}

const fn inst(domain_name: &'static str, problem_name: &'static str, domain: &'static str, problem: &'static str) -> Instance {
    Instance { domain_name, problem_name, domain, problem }
}

/// Small classical instances used for perturbation experiments.
pub const MINI: &[Instance] = &[
    inst("blocksworld", "bw3-table", BLOCKSWORLD_DOMAIN, BW3_TABLE),
    inst("blocksworld", "bw3-reverse", BLOCKSWORLD_DOMAIN, BW3_REVERSE),
    inst("blocksworld", "bw4", BLOCKSWORLD_DOMAIN, BW4),
    inst("gripper", "p01", GRIPPER_DOMAIN, GRIPPER_P01),
    inst("gripper", "p02", GRIPPER_DOMAIN, GRIPPER_P02),
    inst("driverlog", "p01", DRIVERLOG_DOMAIN, DRIVERLOG_P01),
    inst("driverlog", "p02", DRIVERLOG_DOMAIN, DRIVERLOG_P02),
    inst("elevator", "p01", ELEVATOR_DOMAIN, ELEVATOR_P01),
    inst("elevator", "p02", ELEVATOR_DOMAIN, ELEVATOR_P02),
    inst("elevator", "p03", ELEVATOR_DOMAIN, ELEVATOR_P03),
    inst("elevator", "p04", ELEVATOR_DOMAIN, ELEVATOR_P04),
    inst("satellite", "p01", SATELLITE_DOMAIN, SATELLITE_P01),
];

/// Instances of one domain from [`MINI`].
pub fn mini(domain_name: &str) -> Vec<Instance> {
    MINI.iter().filter(|i| i.domain_name == domain_name).copied().collect()
}
