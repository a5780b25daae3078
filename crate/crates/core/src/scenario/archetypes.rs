//! Map builders and the shipped interaction archetypes.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::{FRAC_PI_2, PI};

use super::{ground_truth_noise, AgentSpec, ScenarioSpec};
use crate::behavior::PassingOrder;
use crate::config::SensorNoise;
use crate::geometry::Vec2;
use crate::kinematics::AgentId;
use crate::lanegraph::{LaneSpec, MapSpec};
use crate::math;

pub const LANE_WIDTH: f64 = 3.5;
/// Half side of the square intersection box.
pub const BOX_HALF: f64 = 2.0 * LANE_WIDTH;
pub const ARM_LENGTH: f64 = 120.0;
pub const SPEED_LIMIT: f64 = 10.0;
pub const RING_RADIUS: f64 = 20.0;
/// Largest spacing of polyline vertices on arcs (m).
const ARC_STEP: f64 = 0.5;

/// Approach names in counter-clockwise order of the arm they come from.
const ARMS: [&str; 4] = ["s", "e", "n", "w"];
/// Exit names by travel direction: north, west, south, east.
const EXITS: [&str; 4] = ["n", "w", "s", "e"];

fn rotate(p: Vec2, k: usize) -> Vec2 {
    let (s, c) = (math::sin(k as f64 * FRAC_PI_2), math::cos(k as f64 * FRAC_PI_2));
    Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

fn pts(points: &[Vec2]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p.x, p.y]).collect()
}

/// Circular arc from `start` with initial `heading`, turning by `turn`
/// radians (positive to the left) on a circle of `radius`.
pub fn arc(start: Vec2, heading: f64, radius: f64, turn: f64) -> Vec<Vec2> {
    let side = if turn >= 0.0 { 1.0 } else { -1.0 };
    let centre = start + Vec2::from_angle(heading + side * FRAC_PI_2) * radius;
    let from = heading - side * FRAC_PI_2;
    let n = libm::ceil((radius * turn.abs()) / ARC_STEP).max(2.0) as usize;
    (0..=n).map(|i| centre + Vec2::from_angle(from + turn * i as f64 / n as f64) * radius).collect()
}

fn lane(id: &str, centerline: Vec<[f64; 2]>, yield_line: Option<f64>, successors: &[String]) -> LaneSpec {
    LaneSpec {
        id: id.into(),
        centerline,
        width: LANE_WIDTH,
        speed_limits: vec![[0.0, SPEED_LIMIT]],
        yield_line,
        successors: successors.to_vec(),
    }
}

/// Turn of an intersection connector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Turn {
    Left,
    Straight,
    Right,
}

impl Turn {
    pub fn name(self) -> &'static str {
        match self {
            Turn::Left => "left",
            Turn::Straight => "straight",
            Turn::Right => "right",
        }
    }
}

/// Lane id of the approach on arm `k` (0 south, 1 east, 2 north, 3 west).
pub fn approach_id(k: usize) -> String {
    format!("{}_in", ARMS[k % 4])
}

/// Lane id of the exit reached when travelling in direction `k`
/// (0 north, 1 west, 2 south, 3 east).
pub fn exit_id(k: usize) -> String {
    format!("{}_out", EXITS[k % 4])
}

pub fn connector_id(k: usize, turn: Turn) -> String {
    format!("{}_{}", ARMS[k % 4], turn.name())
}

fn exit_direction(k: usize, turn: Turn) -> usize {
    match turn {
        Turn::Left => (k + 1) % 4,
        Turn::Straight => k % 4,
        Turn::Right => (k + 3) % 4,
    }
}

/// Route over approach, connector and exit lanes.
pub fn route_ids(k: usize, turn: Turn) -> Vec<String> {
    vec![approach_id(k), connector_id(k, turn), exit_id(exit_direction(k, turn))]
}

fn approach_geometry(k: usize) -> Vec<Vec2> {
    let h = 0.5 * LANE_WIDTH;
    vec![rotate(Vec2::new(h, -BOX_HALF - ARM_LENGTH), k), rotate(Vec2::new(h, -BOX_HALF), k)]
}

fn exit_geometry(k: usize) -> Vec<Vec2> {
    let h = 0.5 * LANE_WIDTH;
    vec![rotate(Vec2::new(h, BOX_HALF), k), rotate(Vec2::new(h, BOX_HALF + ARM_LENGTH), k)]
}

fn connector_geometry(k: usize, turn: Turn) -> Vec<Vec2> {
    let h = 0.5 * LANE_WIDTH;
    let start = Vec2::new(h, -BOX_HALF);
    let local = match turn {
        Turn::Straight => vec![start, Vec2::new(h, BOX_HALF)],
        Turn::Right => arc(start, FRAC_PI_2, BOX_HALF - h, -FRAC_PI_2),
        Turn::Left => arc(start, FRAC_PI_2, BOX_HALF + h, FRAC_PI_2),
    };
    local.into_iter().map(|p| rotate(p, k)).collect()
}

fn is_main(k: usize) -> bool {
    k % 2 == 1
}

/// Four-way intersection of an east-west main road with a north-south side
/// road; 3.5 m lanes, right-hand traffic, yield lines at the side-road stop
/// positions. Each arm has an approach, an exit, and left, straight and
/// right connectors.
pub fn four_way_intersection() -> MapSpec {
    let mut lanes = Vec::new();
    for k in 0..4 {
        let conns: Vec<String> =
            [Turn::Left, Turn::Straight, Turn::Right].iter().map(|t| connector_id(k, *t)).collect();
        let yield_line = (!is_main(k)).then_some(ARM_LENGTH);
        lanes.push(lane(&approach_id(k), pts(&approach_geometry(k)), yield_line, &conns));
        lanes.push(lane(&exit_id(k), pts(&exit_geometry(k)), None, &[]));
        for turn in [Turn::Left, Turn::Straight, Turn::Right] {
            let succ = [exit_id(exit_direction(k, turn))];
            lanes.push(lane(&connector_id(k, turn), pts(&connector_geometry(k, turn)), None, &succ));
        }
    }
    let mut right_of_way = Vec::new();
    let turns = [Turn::Left, Turn::Straight, Turn::Right];
    for m in [1, 3] {
        for s in [0, 2] {
            for tm in turns {
                for ts in turns {
                    right_of_way.push([connector_id(m, tm), connector_id(s, ts)]);
                }
            }
        }
    }
    for k in 0..4 {
        let oncoming = (k + 2) % 4;
        for t in [Turn::Straight, Turn::Right] {
            right_of_way.push([connector_id(oncoming, t), connector_id(k, Turn::Left)]);
        }
    }
    MapSpec { lanes, right_of_way }
}

/// Crossroads with straight connectors only: four approaches, four exits
/// and four straight connectors (12 lanes).
pub fn straight_crossroads() -> MapSpec {
    let mut lanes = Vec::new();
    for k in 0..4 {
        lanes.push(lane(&approach_id(k), pts(&approach_geometry(k)), None, &[connector_id(k, Turn::Straight)]));
        lanes.push(lane(&exit_id(k), pts(&exit_geometry(k)), None, &[]));
        lanes.push(lane(
            &connector_id(k, Turn::Straight),
            pts(&connector_geometry(k, Turn::Straight)),
            None,
            &[exit_id(k)],
        ));
    }
    MapSpec { lanes, right_of_way: Vec::new() }
}

/// Two consecutive straight lanes along the x axis.
pub fn straight_road(length: f64) -> MapSpec {
    let half = 0.5 * length;
    MapSpec {
        lanes: vec![
            lane("a", vec![[0.0, 0.0], [half, 0.0]], None, &["b".to_string()]),
            lane("b", vec![[half, 0.0], [length, 0.0]], None, &[]),
        ],
        right_of_way: Vec::new(),
    }
}

/// Angle of the exit split on the ring.
const RING_EXIT: f64 = -2.0 * PI / 3.0;
/// Angle where the entry joins the ring.
const RING_ENTRY: f64 = -PI / 3.0;
const RAMP_RADIUS: f64 = 8.0;

fn ring_arc(from: f64, to: f64) -> Vec<Vec2> {
    let start = Vec2::from_angle(from) * RING_RADIUS;
    arc(start, from + FRAC_PI_2, RING_RADIUS, to - from)
}

/// Single-lane counter-clockwise roundabout with one southern arm: the ring
/// has right of way over the entry.
pub fn roundabout() -> MapSpec {
    let ring_w = ring_arc(PI / 3.0, 2.0 * PI + RING_EXIT);
    let ring_s = ring_arc(RING_EXIT, RING_ENTRY);
    let ring_e = ring_arc(RING_ENTRY, PI / 3.0);

    let exit_start = Vec2::from_angle(RING_EXIT) * RING_RADIUS;
    let exit_ramp = arc(exit_start, RING_EXIT + FRAC_PI_2, RAMP_RADIUS, -(PI / 3.0));
    let exit_end = *exit_ramp.last().unwrap();
    let exit_road = vec![exit_end, exit_end + Vec2::new(0.0, -ARM_LENGTH)];

    let entry_end = Vec2::from_angle(RING_ENTRY) * RING_RADIUS;
    let mut entry_ramp = arc(entry_end, RING_ENTRY + FRAC_PI_2 + PI, RAMP_RADIUS, PI / 3.0);
    entry_ramp.reverse();
    let entry_start = entry_ramp[0];
    let entry_road = vec![entry_start + Vec2::new(0.0, -ARM_LENGTH), entry_start];

    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    MapSpec {
        lanes: vec![
            lane("ring_w", pts(&ring_w), None, &s(&["exit_ramp", "ring_s"])),
            lane("ring_s", pts(&ring_s), None, &s(&["ring_e"])),
            lane("ring_e", pts(&ring_e), None, &s(&["ring_w"])),
            lane("exit_ramp", pts(&exit_ramp), None, &s(&["exit_road"])),
            lane("exit_road", pts(&exit_road), None, &[]),
            lane("entry_road", pts(&entry_road), Some(ARM_LENGTH), &s(&["entry_ramp"])),
            lane("entry_ramp", pts(&entry_ramp), None, &s(&["ring_e"])),
        ],
        right_of_way: vec![["ring_s".into(), "entry_ramp".into()]],
    }
}

/// Built-in maps by name: `four_way`, `roundabout`, `crossroads` and
/// `straight_road` (200 m).
pub fn named_map(name: &str) -> Option<MapSpec> {
    match name {
        "four_way" => Some(four_way_intersection()),
        "roundabout" => Some(roundabout()),
        "crossroads" => Some(straight_crossroads()),
        "straight_road" => Some(straight_road(200.0)),
        _ => None,
    }
}

/// Shipped synthetic scenes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Archetype {
    /// A left-turner on the side road yields to a straight main-road agent.
    Scene1,
    /// A side-road agent crosses ahead of a slow main-road agent.
    Scene1b,
    /// An agent follows a leader that slows down for its right turn.
    Scene2,
    /// An agent on the ring stays inside while another one enters.
    Roundabout,
    /// A single agent crossing the intersection.
    Lone,
}

impl Archetype {
    pub const ALL: [Archetype; 5] =
        [Archetype::Scene1, Archetype::Scene1b, Archetype::Scene2, Archetype::Roundabout, Archetype::Lone];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Scene1 => "scene1",
            Archetype::Scene1b => "scene1b",
            Archetype::Scene2 => "scene2",
            Archetype::Roundabout => "roundabout",
            Archetype::Lone => "lone",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn map_name(self) -> &'static str {
        match self {
            Archetype::Roundabout => "roundabout",
            _ => "four_way",
        }
    }

    pub fn map(self) -> MapSpec {
        match self {
            Archetype::Roundabout => roundabout(),
            _ => four_way_intersection(),
        }
    }

    pub fn spec(self, seed: u64) -> ScenarioSpec {
        let (agents, duration) = match self {
            Archetype::Scene1 => (
                vec![
                    side_agent(0, 20.0, 5.0, Turn::Left, &[(1, PassingOrder::OtherFirst)]),
                    main_agent(1, 28.0, 4.0, Turn::Straight, &[(0, PassingOrder::SelfFirst)]),
                ],
                20.0,
            ),
            Archetype::Scene1b => (
                vec![
                    side_agent(0, 15.0, 8.0, Turn::Straight, &[(1, PassingOrder::SelfFirst)]),
                    main_agent(1, 26.0, 3.0, Turn::Straight, &[(0, PassingOrder::SelfFirst)]),
                ],
                10.0,
            ),
            Archetype::Scene2 => (
                vec![
                    side_agent(0, 40.0, 6.0, Turn::Left, &[]),
                    side_agent(1, 28.0, 6.0, Turn::Right, &[]),
                ],
                14.0,
            ),
            Archetype::Roundabout => (roundabout_agents(), 10.0),
            Archetype::Lone => (vec![side_agent(0, 40.0, 8.0, Turn::Straight, &[])], 10.0),
        };
        ScenarioSpec {
            name: self.name().into(),
            map: Some(self.map_name().into()),
            agents,
            sensor: SensorNoise::default(),
            process_noise: ground_truth_noise(),
            duration,
            seed,
        }
    }
}

fn orders(list: &[(u32, PassingOrder)]) -> BTreeMap<AgentId, PassingOrder> {
    list.iter().map(|(k, o)| (AgentId(*k), *o)).collect()
}

/// Agent on the arm `k` approach, `dist` metres before the box.
/// Agent spawned `dist` metres before the box on approach `k`.
pub fn approach_agent(id: u32, k: usize, dist: f64, v: f64, turn: Turn, ords: &[(u32, PassingOrder)]) -> AgentSpec {
    let p = rotate(Vec2::new(0.5 * LANE_WIDTH, -BOX_HALF - dist), k);
    let heading = math::wrap_angle(FRAC_PI_2 + k as f64 * FRAC_PI_2);
    AgentSpec {
        id: AgentId(id),
        spawn: [p.x, p.y, heading, v],
        route: route_ids(k, turn),
        orders: orders(ords),
        idm: None,
        sampler: None,
    }
}

fn side_agent(id: u32, dist: f64, v: f64, turn: Turn, ords: &[(u32, PassingOrder)]) -> AgentSpec {
    approach_agent(id, 0, dist, v, turn, ords)
}

fn main_agent(id: u32, dist: f64, v: f64, turn: Turn, ords: &[(u32, PassingOrder)]) -> AgentSpec {
    approach_agent(id, 1, dist, v, turn, ords)
}

fn roundabout_agents() -> Vec<AgentSpec> {
    let ring_angle = RING_EXIT + 2.0 * PI - 1.1;
    let p = Vec2::from_angle(ring_angle) * RING_RADIUS;
    let map = roundabout();
    let entry = &map.lanes.iter().find(|l| l.id == "entry_road").unwrap().centerline;
    let q = entry[1];
    vec![
        AgentSpec {
            id: AgentId(0),
            spawn: [p.x, p.y, math::wrap_angle(ring_angle + FRAC_PI_2), 6.0],
            route: ["ring_w", "ring_s", "ring_e"].iter().map(|s| s.to_string()).collect(),
            orders: orders(&[(1, PassingOrder::SelfFirst)]),
            idm: None,
            sampler: None,
        },
        AgentSpec {
            id: AgentId(1),
            spawn: [q[0], q[1] - 30.0, FRAC_PI_2, 7.0],
            route: ["entry_road", "entry_ramp", "ring_e", "ring_w"].iter().map(|s| s.to_string()).collect(),
            orders: orders(&[(0, PassingOrder::OtherFirst)]),
            idm: None,
            sampler: None,
        },
    ]
}
