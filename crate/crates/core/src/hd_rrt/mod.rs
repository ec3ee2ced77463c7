//! Hazard-aware dynamic RRT confined to the robot's sliding window.
//!
//! Expansion samples the window uniformly, steers towards the nearest node and
//! validates the new edge segment by segment. Nodes that repeatedly fail in
//! enough distinct directions are declared saturated: their neighborhood is
//! inflated into the persistent hazard layer and they are cut from the tree.
//! Whenever the robot has moved far enough the tree is re-rooted at the robot
//! and everything outside the new window is pruned.

mod feasibility;
mod tree;

use std::collections::BTreeSet;

use rand::Rng;

pub use feasibility::{
    assess_edge, check_feasibility, crosses_hazard, gradability, meta_segment_count, EdgeAssessment,
    FeasibilityParams, Infeasibility, Verdict,
};
pub use tree::{sector_of, CandidateState, NodeId, SaturationVector, Tree, TreeNode};

use crate::error::{Error, Result};
use crate::geometry::{segment_distance, Point2};
use crate::grid_map::{HazardLayer, LocalGridMap};
use crate::scalar::{lit, Scalar};
use crate::terrain::TerrainView;

/// Whether out-of-window structure is discarded (the planner) or kept (the
/// full-tree baseline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TreeMode {
    #[default]
    Pruned,
    FullTree,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionSettings<T> {
    pub feasibility: FeasibilityParams<T>,
    /// `N_s`: blocked-sector count at which a node saturates.
    pub saturation_threshold: usize,
    pub mode: TreeMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub candidate: Point2<T>,
    pub nearest: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// The edge reached unobserved terrain.
    Unknown,
    /// The edge crosses an already flagged hazard.
    Hazard,
    /// Infeasible; the failure was recorded but did not saturate the node.
    Blocked(Infeasibility),
    /// The steered sample coincides with its nearest node.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendOutcome {
    Added(NodeId),
    Rejected(Rejection),
    /// The nearest node saturated, was inflated into the hazard layer and removed.
    SaturatedAndPruned(NodeId),
    /// Full-tree baseline: the node saturated and was inflated but stays in the tree.
    SaturatedRetained(NodeId),
}

/// Draws a candidate uniformly over the window and steers it to within
/// `r_ext` of the nearest tree node.
pub fn sample_new_node<T: Scalar, R: Rng + ?Sized>(
    tree: &Tree<T>,
    map: &LocalGridMap<T>,
    rng: &mut R,
) -> Sample<T> {
    let (min, max) = map.bounds();
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    let raw = Point2::new(
        min.x + (max.x - min.x) * lit(u),
        min.y + (max.y - min.y) * lit(v),
    );
    let (nearest, _) = tree.index().nearest(raw).expect("tree is never empty");
    let from = tree.node(nearest).unwrap().position;
    Sample {
        candidate: from.steer(raw, tree.r_ext()),
        nearest,
    }
}

/// Sets the sector bit of `nearest` facing `candidate` after a failed
/// connection and reports whether the node is now saturated.
pub fn record_failure<T: Scalar>(
    tree: &mut Tree<T>,
    nearest: NodeId,
    candidate: Point2<T>,
    verdict: Verdict,
    saturation_threshold: usize,
) -> Result<bool> {
    if !matches!(verdict, Verdict::Infeasible(_)) {
        return Err(Error::NotInfeasible);
    }
    let node = tree.node_mut(nearest).ok_or(Error::UnknownNode(nearest.0))?;
    let k = sector_of(node.position.bearing_to(candidate));
    node.saturation.set(k);
    Ok(node.saturation.count() >= saturation_threshold)
}

/// Inflates a saturated node into the hazard layer by the extension radius.
pub fn mark_hazard<T: Scalar>(layer: &mut HazardLayer<T>, node: Point2<T>, r_ext: T) -> usize {
    layer.mark_disc(node, r_ext)
}

/// One expansion attempt.
pub fn extend<T: Scalar, R: Rng + ?Sized>(
    tree: &mut Tree<T>,
    map: &mut LocalGridMap<T>,
    rng: &mut R,
    settings: &ExpansionSettings<T>,
    hazards: &mut HazardLayer<T>,
) -> ExtendOutcome {
    extend_guarded(tree, map, rng, settings, hazards, &[])
}

/// [`extend`] that never inflates a hazard disc touching any `keep_clear`
/// segment: nodes that close behave like the root and are exempt from
/// saturation. The navigator passes the edge under the robot.
pub fn extend_guarded<T: Scalar, R: Rng + ?Sized>(
    tree: &mut Tree<T>,
    map: &mut LocalGridMap<T>,
    rng: &mut R,
    settings: &ExpansionSettings<T>,
    hazards: &mut HazardLayer<T>,
    keep_clear: &[(Point2<T>, Point2<T>)],
) -> ExtendOutcome {
    let sample = sample_new_node(tree, map, rng);
    let from = tree.node(sample.nearest).unwrap().position;
    if from.distance(sample.candidate) <= map.resolution() * lit(1e-3) {
        return ExtendOutcome::Rejected(Rejection::Degenerate);
    }
    let first = assess_edge(from, sample.candidate, &*map, &settings.feasibility);
    match first.verdict {
        Verdict::Unknown => ExtendOutcome::Rejected(Rejection::Unknown),
        Verdict::Infeasible(Infeasibility::Hazard) => ExtendOutcome::Rejected(Rejection::Hazard),
        Verdict::Infeasible(clause) => {
            let nearest = sample.nearest;
            let node = tree.node(nearest).unwrap();
            // a flagged cell reaches at most r_ext plus a cell diagonal from the node
            let reach = tree.r_ext() + map.resolution() * lit(1.5);
            let guarded = keep_clear
                .iter()
                .any(|&(a, b)| segment_distance(node.position, a, b) <= reach);
            let exempt = nearest == tree.root_id() || node.saturated || guarded;
            if exempt {
                return ExtendOutcome::Rejected(Rejection::Blocked(clause));
            }
            let saturated = record_failure(
                tree,
                nearest,
                sample.candidate,
                first.verdict,
                settings.saturation_threshold,
            )
            .expect("verdict is infeasible");
            if !saturated {
                return ExtendOutcome::Rejected(Rejection::Blocked(clause));
            }
            let node = tree.node_mut(nearest).unwrap();
            node.saturated = true;
            let position = node.position;
            mark_hazard(hazards, position, tree.r_ext());
            map.project_hazards(hazards);
            match settings.mode {
                TreeMode::FullTree => ExtendOutcome::SaturatedRetained(nearest),
                TreeMode::Pruned => {
                    remove_with_reattach(tree, nearest, &*map, &settings.feasibility);
                    sweep_hazards(tree, &*map, &settings.feasibility);
                    ExtendOutcome::SaturatedAndPruned(nearest)
                }
            }
        }
        Verdict::Feasible => {
            let candidate = sample.candidate;
            let elevation = map
                .elevation_at(candidate)
                .expect("feasible edge endpoints are known");
            let (parent, gradient) = choose_parent(tree, candidate, &*map, &settings.feasibility)
                .unwrap_or((sample.nearest, first.mean_gradient));
            ExtendOutcome::Added(tree.attach(parent, candidate, elevation, gradient))
        }
    }
}

/// Cheapest feasible parent within `r_ext` of `p` by resulting path length.
fn choose_parent<T: Scalar, V: TerrainView<T>>(
    tree: &Tree<T>,
    p: Point2<T>,
    map: &V,
    params: &FeasibilityParams<T>,
) -> Option<(NodeId, T)> {
    let mut options: Vec<(T, NodeId, Point2<T>)> = tree
        .index()
        .within(p, tree.r_ext())
        .into_iter()
        .map(|(id, q)| (tree.node(id).unwrap().cum_length + q.distance(p), id, q))
        .collect();
    options.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    options.into_iter().find_map(|(_, id, q)| {
        let a = assess_edge(q, p, map, params);
        a.verdict.is_feasible().then_some((id, a.mean_gradient))
    })
}

/// Removes `id` with its parent edge. Each child is reattached to the
/// cheapest feasible in-radius node outside the removed subtree; children
/// without such a node are dropped with their descendants.
pub fn remove_with_reattach<T: Scalar, V: TerrainView<T>>(
    tree: &mut Tree<T>,
    id: NodeId,
    map: &V,
    params: &FeasibilityParams<T>,
) -> Vec<TreeNode<T>> {
    if id == tree.root_id() || !tree.contains(id) {
        return Vec::new();
    }
    let mut doomed: BTreeSet<NodeId> = tree.subtree(id).into_iter().collect();
    let children: Vec<NodeId> = tree.node(id).unwrap().children.iter().copied().collect();
    for child in children {
        let pos = tree.node(child).unwrap().position;
        let mut options: Vec<(T, NodeId, Point2<T>)> = tree
            .index()
            .within(pos, tree.r_ext())
            .into_iter()
            .filter(|(cand, _)| !doomed.contains(cand))
            .map(|(cand, q)| (tree.node(cand).unwrap().cum_length + q.distance(pos), cand, q))
            .collect();
        options.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let found = options.into_iter().find_map(|(_, cand, q)| {
            let a = assess_edge(q, pos, map, params);
            a.verdict.is_feasible().then_some((cand, a.mean_gradient))
        });
        if let Some((parent, gradient)) = found {
            for kept in tree.subtree(child) {
                doomed.remove(&kept);
            }
            tree.reparent(child, parent, gradient);
        }
    }
    let removed = tree.drop_nodes(&doomed);
    tree.recompute_cumulative();
    removed
}

/// Removes every non-root node standing on, or connected through, a
/// hazard-flagged cell.
pub fn sweep_hazards<T: Scalar, V: TerrainView<T>>(
    tree: &mut Tree<T>,
    map: &V,
    params: &FeasibilityParams<T>,
) -> Vec<TreeNode<T>> {
    let offenders: Vec<NodeId> = tree
        .nodes()
        .filter(|n| n.parent.is_some())
        .filter(|n| {
            let parent = tree.node(n.parent.unwrap()).unwrap().position;
            map.is_hazard(n.position) || crosses_hazard(parent, n.position, map)
        })
        .map(|n| n.id)
        .collect();
    let mut removed = Vec::new();
    for id in offenders {
        removed.extend(remove_with_reattach(tree, id, map, params));
    }
    removed
}

/// Re-roots the tree at the robot and, in pruned mode, discards everything
/// outside the window. Returns the removed nodes.
///
/// The new root is the nearest kept node; when the robot does not stand on
/// it, a root node is inserted at the robot and joined to the nearest node
/// it can feasibly reach. If none is reachable the tree restarts at the robot.
pub fn prune_and_rebase<T: Scalar>(
    tree: &mut Tree<T>,
    robot: Point2<T>,
    map: &LocalGridMap<T>,
    settings: &ExpansionSettings<T>,
) -> Vec<TreeNode<T>> {
    let pruned = settings.mode == TreeMode::Pruned;
    let mut removed = Vec::new();
    let anchor = if pruned {
        tree.index()
            .nearest_where(robot, |id| map.contains(tree.node(id).unwrap().position))
    } else {
        tree.index().nearest(robot)
    };
    let root_elevation = map.elevation_at(robot).unwrap_or(tree.root().elevation);
    let Some((anchor, _)) = anchor else {
        return tree.reset(robot, root_elevation, !pruned);
    };
    tree.reroot(anchor);
    if pruned {
        let keep: BTreeSet<NodeId> = {
            let mut keep = BTreeSet::new();
            let mut stack = vec![anchor];
            while let Some(id) = stack.pop() {
                keep.insert(id);
                stack.extend(
                    tree.node(id)
                        .unwrap()
                        .children
                        .iter()
                        .copied()
                        .filter(|c| map.contains(tree.node(*c).unwrap().position)),
                );
            }
            keep
        };
        let doomed: BTreeSet<NodeId> = tree.ids().into_iter().filter(|id| !keep.contains(id)).collect();
        removed = tree.drop_nodes(&doomed);
    }

    let tolerance = map.resolution() * lit(1e-6);
    if tree.root().position.distance(robot) > tolerance {
        let mut options: Vec<(T, NodeId, Point2<T>)> = tree
            .index()
            .within(robot, tree.r_ext())
            .into_iter()
            .map(|(id, q)| (q.distance(robot), id, q))
            .collect();
        let root = tree.root();
        if !options.iter().any(|o| o.1 == root.id) {
            options.push((root.position.distance(robot), root.id, root.position));
        }
        options.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let bridge = options.into_iter().find_map(|(_, id, q)| {
            let a = assess_edge(robot, q, map, &settings.feasibility);
            a.verdict.is_feasible().then_some((id, a.mean_gradient))
        });
        match bridge {
            Some((id, gradient)) => {
                tree.reroot(id);
                tree.push_root(robot, root_elevation, gradient);
            }
            None => removed.extend(tree.reset(robot, root_elevation, !pruned)),
        }
    }
    tree.recompute_cumulative();
    removed
}
