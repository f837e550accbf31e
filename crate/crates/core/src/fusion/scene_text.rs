use alloc::format;
use alloc::string::String;

use crate::sim::{Neighbor, SceneState, SimConfig};

fn describe(out: &mut String, label: &str, direction: &str, neighbor: Option<Neighbor>, ego_speed: f64) {
    match neighbor {
        None => out.push_str(&format!(" {label}: no vehicle {direction}.")),
        Some(n) if n.gap < 0.0 => out.push_str(&format!(
            " {label}: vehicle alongside, {}.",
            relative_speed(n.speed - ego_speed)
        )),
        Some(n) => out.push_str(&format!(
            " {label}: vehicle {:.1} m {direction}, {}.",
            n.gap,
            relative_speed(n.speed - ego_speed)
        )),
    }
}

fn relative_speed(rel: f64) -> String {
    if rel <= -0.05 {
        format!("{:.1} m/s slower", -rel)
    } else if rel >= 0.05 {
        format!("{:.1} m/s faster", rel)
    } else {
        String::from("same speed")
    }
}

/// Deterministic English description of the ego's surroundings, in a fixed slot order.
pub fn scene_to_text(state: &SceneState, config: &SimConfig) -> String {
    let ego = &state.ego;
    let hood = state.neighborhood(config);
    let (lane_name, other_name) = if ego.lane == 0 { ("right", "left") } else { ("left", "right") };
    let remaining = (config.road_length - ego.longitudinal_pos).max(0.0);
    let mut out = format!(
        "Ego vehicle in the {lane_name} lane (lane {}) at {:.1} m/s, position {:.1} m of a {:.1} m two-lane road \
         ({:.1} m remaining); target speed {:.1}-{:.1} m/s.",
        ego.lane, ego.speed, ego.longitudinal_pos, config.road_length, remaining, config.v_min_target,
        config.v_max_target,
    );
    describe(&mut out, "Same lane ahead", "ahead", hood.same_leader, ego.speed);
    describe(&mut out, "Same lane behind", "behind", hood.same_follower, ego.speed);
    describe(&mut out, &format!("{} lane ahead", capitalize(other_name)), "ahead", hood.other_leader, ego.speed);
    describe(&mut out, &format!("{} lane behind", capitalize(other_name)), "behind", hood.other_follower, ego.speed);
    out
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
