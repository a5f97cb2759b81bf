//! Keep-right lane policy with overtaking on the left.
//!
//! Lone vehicles and whole platoons are treated as units. Units are visited
//! from the front of the road backwards and change at most one lane per step.
//! A change needs the ACC headway to the new vehicle ahead and, for the new
//! vehicle behind, the headway at its own speed. Units involved in a join as
//! target keep their lane; joiners steer toward the lane of their target.

use super::world::World;
use crate::formation::JoinPosition;

/// Speed margin below the desired speed that counts as being held up.
const HELD_UP_MARGIN: f64 = 1.0;

/// Fraction of the ACC headway a joiner accepts to vehicles other than its
/// target when changing lanes.
const JOINER_HEADWAY_SCALE: f64 = 0.5;

struct Unit {
    members: Vec<usize>,
    front: f64,
    rear: f64,
    speed: f64,
    desired: f64,
    lane: usize,
}

impl World {
    fn unit_of(&self, i: usize) -> Option<Unit> {
        let v = &self.vehicles[i];
        let members = match v.platoon.and_then(|p| self.platoons.get(&p)) {
            Some(p) if p.leader() != v.id => return None,
            Some(p) => p.members.iter().map(|&id| self.index_of(id).expect("members are on the road")).collect(),
            None => vec![i],
        };
        let last = &self.vehicles[*members.last().unwrap()];
        Some(Unit {
            front: v.position,
            rear: last.rear(),
            speed: v.speed,
            desired: self.tracked_speed(v),
            lane: v.lane,
            members,
        })
    }

    fn unit_locked(&self, i: usize) -> bool {
        let v = &self.vehicles[i];
        match v.platoon.and_then(|p| self.platoons.get(&p)) {
            Some(p) => p.reserved_by.is_some(),
            None => v.reserved_by.is_some(),
        }
    }

    /// Whether `unit` may move into `lane`. `relax_ahead`/`relax_behind`
    /// name a vehicle index for which only the platoon gap is required;
    /// `headway_scale` shortens the headway required to everyone else.
    fn lane_change_safe(
        &self,
        lanes: &[Vec<usize>],
        unit: &Unit,
        lane: usize,
        relax_ahead: Option<usize>,
        relax_behind: Option<usize>,
        headway_scale: f64,
    ) -> bool {
        let d = &self.cfg.dynamics;
        let close = self.cfg.dynamics.cacc_gap_m - self.cfg.formation.attach_gap_tolerance_m;
        let (ahead, behind) = self.neighbours(&lanes[lane], unit.front, unit.front - unit.rear, &unit.members);
        // Whoever comes from behind faster must be able to match speed in time.
        let closing = |follower: f64, leader: f64| (follower - leader).max(0.0).powi(2) / (2.0 * d.krauss_decel_mps2);
        let ahead_ok = ahead.is_none_or(|(gap, p)| {
            let need = if Some(p) == relax_ahead { close } else { headway_scale * d.acc_headway_s * unit.speed };
            gap >= need.max(d.min_gap_m) + closing(unit.speed, self.vehicles[p].speed)
        });
        let behind_ok = behind.is_none_or(|(gap, f)| {
            let vf = self.vehicles[f].speed;
            let need = if Some(f) == relax_behind { close } else { headway_scale * d.acc_headway_s * vf };
            gap >= need.max(d.min_gap_m) + closing(vf, unit.speed)
        });
        ahead_ok && behind_ok
    }

    fn move_unit(&mut self, lanes: &mut [Vec<usize>], unit: &Unit, to: usize) {
        for &m in &unit.members {
            let from = &mut lanes[unit.lane];
            from.retain(|&x| x != m);
            self.vehicles[m].lane = to;
        }
        for &m in &unit.members {
            let pos = self.vehicles[m].position;
            let at = lanes[to].partition_point(|&x| self.vehicles[x].position <= pos);
            lanes[to].insert(at, m);
        }
        self.counters.lane_changes += 1;
    }

    pub(crate) fn apply_lane_policy(&mut self) {
        let n_lanes = self.cfg.freeway.lanes;
        if n_lanes < 2 {
            return;
        }
        let lookahead = self.cfg.dynamics.lane_change_lookahead_s;
        let mut lanes = self.lanes_ascending();
        let mut order: Vec<usize> = (0..self.vehicles.len()).collect();
        order.sort_by(|&a, &b| {
            let (va, vb) = (&self.vehicles[a], &self.vehicles[b]);
            vb.position.total_cmp(&va.position).then(va.id.cmp(&vb.id))
        });
        for i in order {
            let Some(unit) = self.unit_of(i) else { continue };
            if self.unit_locked(i) {
                continue;
            }
            if let Some(m) = &self.vehicles[i].maneuver {
                let Some(t) = self.index_of(m.target) else { continue };
                let position = m.position;
                let goal = self.vehicles[t].lane;
                // Whether the target would be the direct neighbour on the join side.
                let direct = |lane: usize| {
                    let (ahead, behind) =
                        self.neighbours(&lanes[lane], unit.front, unit.front - unit.rear, &unit.members);
                    match position {
                        JoinPosition::Back => ahead.map(|(_, p)| p) == Some(t),
                        JoinPosition::Front => behind.map(|(_, f)| f) == Some(t),
                    }
                };
                if goal == unit.lane {
                    if direct(goal) {
                        continue;
                    }
                    // Someone is in between: step aside and pass in another lane.
                    let aside = [unit.lane + 1, unit.lane.wrapping_sub(1)]
                        .into_iter()
                        .filter(|&l| l < n_lanes)
                        .find(|&l| self.lane_change_safe(&lanes, &unit, l, None, None, JOINER_HEADWAY_SCALE));
                    if let Some(l) = aside {
                        self.move_unit(&mut lanes, &unit, l);
                    }
                    continue;
                }
                let to = if goal > unit.lane { unit.lane + 1 } else { unit.lane - 1 };
                if to == goal && !direct(goal) {
                    continue;
                }
                let (ra, rb) = match position {
                    JoinPosition::Back => (Some(t), None),
                    JoinPosition::Front => (None, Some(t)),
                };
                if self.lane_change_safe(&lanes, &unit, to, ra, rb, JOINER_HEADWAY_SCALE) {
                    self.move_unit(&mut lanes, &unit, to);
                }
                continue;
            }

            let own_ahead = self.neighbours(&lanes[unit.lane], unit.front, unit.front - unit.rear, &unit.members).0;
            let held_up = own_ahead.is_some_and(|(gap, p)| {
                gap < lookahead * unit.desired && self.vehicles[p].speed < unit.desired - HELD_UP_MARGIN
            });
            if held_up && unit.lane + 1 < n_lanes {
                let (_, p) = own_ahead.unwrap();
                let left = unit.lane + 1;
                let left_ahead = self.neighbours(&lanes[left], unit.front, unit.front - unit.rear, &unit.members).0;
                let better = left_ahead.is_none_or(|(gap, q)| {
                    gap >= lookahead * unit.desired || self.vehicles[q].speed > self.vehicles[p].speed + HELD_UP_MARGIN
                });
                if better && self.lane_change_safe(&lanes, &unit, left, None, None, 1.0) {
                    self.move_unit(&mut lanes, &unit, left);
                }
                continue;
            }
            if unit.lane > 0 && !held_up {
                let right = unit.lane - 1;
                let right_ahead = self.neighbours(&lanes[right], unit.front, unit.front - unit.rear, &unit.members).0;
                let free = right_ahead.is_none_or(|(gap, q)| {
                    gap >= 2.0 * lookahead * unit.desired || self.vehicles[q].speed >= unit.desired - HELD_UP_MARGIN / 2.0
                });
                if free && self.lane_change_safe(&lanes, &unit, right, None, None, 1.0) {
                    self.move_unit(&mut lanes, &unit, right);
                }
            }
        }
    }
}
