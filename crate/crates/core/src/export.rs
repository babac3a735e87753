//! CSV trajectory export.
//!
//! `trajectory.csv`: `round,agent,role,value,reference` with one row per
//! agent per round. `edges.csv`: `round,from,to,value` with one row per edge
//! per round, i.e. what each receiver was actually sent. Floats use Rust's
//! shortest round-trip formatting, so output is byte-stable.

use std::fmt::Write;

use crate::graph::Digraph;
use crate::simulation::Trajectory;

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("round,agent,role,value,reference\n");
    for (t, row) in traj.states.iter().enumerate() {
        let reference = traj.reference_at(t as u64).map(|r| r.to_string()).unwrap_or_default();
        for (idx, value) in row.iter().enumerate() {
            let _ = writeln!(out, "{t},{},{},{value},{reference}", idx + 1, traj.roles[idx].as_str());
        }
    }
    out
}

pub fn edges_csv(traj: &Trajectory, g: &Digraph) -> String {
    let mut out = String::from("round,from,to,value\n");
    for t in 0..traj.rounds() as u64 {
        for (from, to) in g.edges() {
            let _ = writeln!(out, "{t},{from},{to},{}", traj.delivered(t, from, to));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::RoleKind;

    #[test]
    fn csv_layout() {
        let traj = Trajectory {
            roles: vec![RoleKind::Normal, RoleKind::Leader],
            states: vec![vec![1.5, 2.0], vec![1.75, 2.0]],
            reference: Some(vec![2.0, 2.0]),
            byzantine_edges: vec![],
        };
        let csv = trajectory_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "round,agent,role,value,reference");
        assert_eq!(lines[1], "0,1,normal,1.5,2");
        assert_eq!(lines[4], "1,2,leader,2,2");

        let g = Digraph::from_edges(2, [(2, 1)]).unwrap();
        assert_eq!(edges_csv(&traj, &g), "round,from,to,value\n0,2,1,2\n1,2,1,2\n");
    }
}
