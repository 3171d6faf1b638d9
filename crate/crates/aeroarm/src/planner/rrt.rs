//! Asymptotically optimal tree search between two control-space points.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    collision_check_config, collision_check_segment, metric, ControlSpacePoint, ObstacleSet,
    RRTStarParams, RobotGeometry,
};

struct Node {
    x: ControlSpacePoint,
    parent: usize,
    cost: f64,
    children: Vec<usize>,
}

/// Grows a rewired tree from `start` toward `goal`; returns the node chain
/// once the goal is connected, improving it until the iteration budget runs
/// out. `None` if the goal was never reached.
pub(super) fn rrt_star(
    start: &ControlSpacePoint,
    goal: &ControlSpacePoint,
    obstacles: &ObstacleSet,
    geom: &RobotGeometry,
    params: &RRTStarParams,
    weights: &DVector<f64>,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<ControlSpacePoint>> {
    let dim = start.dim() as f64;
    let mut nodes = vec![Node {
        x: start.clone(),
        parent: 0,
        cost: 0.0,
        children: Vec::new(),
    }];
    let mut goal_node: Option<usize> = None;

    for _ in 0..params.max_iterations {
        let sample = if rng.random_range(0.0..1.0) < params.goal_bias {
            goal.clone()
        } else {
            sample_uniform(&params.bounds_low, &params.bounds_high, rng)
        };

        let (nearest, nearest_dist) = nearest_node(&nodes, &sample, weights);
        if nearest_dist < 1e-12 {
            continue;
        }
        let new = if nearest_dist <= params.steer_step {
            sample
        } else {
            ControlSpacePoint::interpolate(
                &nodes[nearest].x,
                &sample,
                params.steer_step / nearest_dist,
            )
        };
        if !collision_check_config(&new, obstacles, geom) {
            continue;
        }

        let n = nodes.len() as f64;
        let radius = (params.gamma * ((n.ln().max(1.0)) / n).powf(1.0 / dim))
            .min(3.0 * params.steer_step)
            .max(params.steer_step);
        let mut neighbors: Vec<(usize, f64)> = nodes
            .iter()
            .enumerate()
            .filter_map(|(i, node)| {
                let d = metric(&node.x, &new, weights);
                (d <= radius).then_some((i, d))
            })
            .collect();
        if neighbors.iter().all(|&(i, _)| i != nearest) {
            neighbors.push((nearest, nearest_dist));
        }

        // cheapest collision-free parent among the neighborhood
        let mut best: Option<(usize, f64)> = None;
        for &(i, d) in &neighbors {
            let through = nodes[i].cost + d;
            if best.is_some_and(|(_, c)| through >= c) {
                continue;
            }
            if collision_check_segment(
                &nodes[i].x,
                &new,
                obstacles,
                geom,
                params.collision_resolution,
            ) {
                best = Some((i, through));
            }
        }
        let Some((parent, cost)) = best else { continue };
        let new_idx = nodes.len();
        nodes.push(Node {
            x: new,
            parent,
            cost,
            children: Vec::new(),
        });
        nodes[parent].children.push(new_idx);

        // rewire the neighborhood through the new node where cheaper
        for &(i, d) in &neighbors {
            if i == parent {
                continue;
            }
            let through = cost + d;
            if through + 1e-12 >= nodes[i].cost {
                continue;
            }
            if !collision_check_segment(
                &nodes[new_idx].x,
                &nodes[i].x,
                obstacles,
                geom,
                params.collision_resolution,
            ) {
                continue;
            }
            reparent(&mut nodes, i, new_idx, through);
        }

        // try to tie the new node to the goal
        let goal_dist = metric(&nodes[new_idx].x, goal, weights);
        if goal_dist <= params.steer_step
            && collision_check_segment(
                &nodes[new_idx].x,
                goal,
                obstacles,
                geom,
                params.collision_resolution,
            )
        {
            let through = nodes[new_idx].cost + goal_dist;
            match goal_node {
                None => {
                    let idx = nodes.len();
                    nodes.push(Node {
                        x: goal.clone(),
                        parent: new_idx,
                        cost: through,
                        children: Vec::new(),
                    });
                    nodes[new_idx].children.push(idx);
                    goal_node = Some(idx);
                }
                Some(idx) if through + 1e-12 < nodes[idx].cost => {
                    reparent(&mut nodes, idx, new_idx, through);
                }
                Some(_) => {}
            }
        }
    }

    let mut idx = goal_node?;
    let mut chain = vec![nodes[idx].x.clone()];
    while idx != 0 {
        idx = nodes[idx].parent;
        chain.push(nodes[idx].x.clone());
    }
    chain.reverse();
    Some(chain)
}

fn sample_uniform(
    low: &DVector<f64>,
    high: &DVector<f64>,
    rng: &mut ChaCha8Rng,
) -> ControlSpacePoint {
    let v = DVector::from_iterator(
        low.len(),
        low.iter()
            .zip(high.iter())
            .map(|(&lo, &hi)| if hi > lo { rng.random_range(lo..hi) } else { lo }),
    );
    ControlSpacePoint::from_vector(&v)
}

fn nearest_node(
    nodes: &[Node],
    target: &ControlSpacePoint,
    weights: &DVector<f64>,
) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, node) in nodes.iter().enumerate() {
        let d = metric(&node.x, target, weights);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Moves `node` under `new_parent` at cost `new_cost` and propagates the
/// cost change through its subtree.
fn reparent(nodes: &mut Vec<Node>, node: usize, new_parent: usize, new_cost: f64) {
    let old_parent = nodes[node].parent;
    nodes[old_parent].children.retain(|&c| c != node);
    nodes[node].parent = new_parent;
    nodes[new_parent].children.push(node);
    let delta = new_cost - nodes[node].cost;
    let mut stack = vec![node];
    while let Some(i) = stack.pop() {
        nodes[i].cost += delta;
        stack.extend(nodes[i].children.iter().copied());
    }
}
