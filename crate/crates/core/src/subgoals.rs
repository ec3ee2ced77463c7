//! Frontier candidates and the two subgoal scores.
//!
//! Local subgoals are tree leaves inside the window whose surroundings stay
//! mostly unobserved. They are scored by branch length, gradient and
//! twist plus distance to the target. Global subgoals are retained graph
//! candidates scored by distance inflated by how much was already seen
//! around them.

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::global_graph::GraphNodeId;
use crate::grid_map::LocalGridMap;
use crate::hd_rrt::{CandidateState, NodeId, Tree};
use crate::scalar::{from_usize, lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams<T> {
    pub w_alpha: T,
    pub w_beta: T,
    pub lambda: T,
    /// Coverage threshold `δ` at or below which a leaf stays a candidate.
    pub delta: T,
    /// Fewest local candidates needed before the local set is used.
    pub n_delta: usize,
    /// Arrival tolerance, meters.
    pub reach_eps: T,
}

impl<T: Scalar> CostParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("cost.w_alpha", self.w_alpha),
            ("cost.w_beta", self.w_beta),
            ("cost.lambda", self.lambda),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::config(key, "must be a finite value >= 0"));
            }
        }
        if !(self.delta > T::zero() && self.delta <= T::one()) {
            return Err(Error::config("cost.delta", "must lie in (0, 1]"));
        }
        if self.n_delta == 0 {
            return Err(Error::config("cost.n_delta", "must be at least 1"));
        }
        if !(self.reach_eps > T::zero()) {
            return Err(Error::config("cost.reach_eps", "must be strictly positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeRef {
    Tree(NodeId),
    Graph(GraphNodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgoalSource {
    Local,
    Global,
}

impl SubgoalSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SubgoalSource::Local => "local",
            SubgoalSource::Global => "global",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subgoal<T> {
    pub position: Point2<T>,
    pub source: SubgoalSource,
    pub node: NodeRef,
    pub nabla_max: T,
    pub cost: T,
}

/// Known fraction of the disc of `radius` about `p`, counting cells of the
/// window whose centers fall in the disc.
pub fn coverage_ratio<T: Scalar>(p: Point2<T>, map: &LocalGridMap<T>, radius: T) -> T {
    let world = map.world();
    let res = world.resolution;
    let (ci, cj) = world.cell_of(p);
    let reach = (radius / res).ceil().to_i64().unwrap_or(0) + 1;
    let mut known = 0usize;
    let mut off_world = 0usize;
    for j in cj - reach..=cj + reach {
        for i in ci - reach..=ci + reach {
            if world.cell_center(i, j).distance(p) > radius {
                continue;
            }
            if !world.in_bounds(i, j) {
                off_world += 1;
            } else if map.cell(i, j).is_some_and(|c| c.elevation.is_some()) {
                known += 1;
            }
        }
    }
    // ground beyond the world edge can never be observed, so it is not frontier
    let area = T::PI() * radius * radius - from_usize::<T>(off_world) * res * res;
    if area <= T::zero() {
        return T::one();
    }
    (from_usize::<T>(known) * res * res / area).min(T::one())
}

/// Re-evaluates every non-root tree node inside the window and returns the
/// local subgoal set. A node stays a candidate only while it is a leaf with
/// coverage at most `delta` at every evaluation; losing either is final.
pub fn update_candidates<T: Scalar>(
    tree: &mut Tree<T>,
    map: &LocalGridMap<T>,
    params: &CostParams<T>,
    tick: u64,
) -> Vec<Subgoal<T>> {
    let radius = tree.r_ext();
    let root = tree.root_id();
    let (lo, hi) = map.bounds();
    let center = lo.lerp(hi, lit(0.5));
    let mut in_window: Vec<NodeId> = tree
        .index()
        .within(center, center.distance(hi))
        .into_iter()
        .filter(|&(id, p)| id != root && map.contains(p))
        .map(|(id, _)| id)
        .collect();
    in_window.sort();
    let mut set = Vec::new();
    for id in in_window {
        let node = tree.node(id).unwrap();
        if node.candidate == CandidateState::Revoked {
            continue;
        }
        let eligible = node.is_leaf() && !node.saturated;
        let nabla = coverage_ratio(node.position, map, radius);
        let next = match node.candidate {
            CandidateState::Revoked => CandidateState::Revoked,
            _ if !eligible || nabla > params.delta => CandidateState::Revoked,
            CandidateState::Unevaluated => CandidateState::Candidate {
                nabla_max: nabla,
                first_seen: tick,
            },
            CandidateState::Candidate {
                nabla_max,
                first_seen,
            } => CandidateState::Candidate {
                nabla_max: nabla_max.max(nabla),
                first_seen,
            },
        };
        let position = node.position;
        tree.node_mut(id).unwrap().candidate = next;
        if let CandidateState::Candidate { nabla_max, .. } = next {
            set.push(Subgoal {
                position,
                source: SubgoalSource::Local,
                node: NodeRef::Tree(id),
                nabla_max,
                cost: T::zero(),
            });
        }
    }
    set
}

/// Branch attributes entering the local score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTerms<T> {
    /// Branch length from the root, meters.
    pub length: T,
    /// Summed mean gradient of the branch edges.
    pub gradient: T,
    /// Summed absolute turn angle along the branch, radians.
    pub turn: T,
    /// Planar distance to the final target, meters.
    pub dist: T,
}

/// `(wα·T/ΣT + wβ·Γ/ΣΓ)·exp(−λΥ) + Dist` for each entry. A zero sum makes
/// its ratio term zero.
pub fn local_costs<T: Scalar>(terms: &[LocalTerms<T>], params: &CostParams<T>) -> Vec<T> {
    let sum_t: T = terms.iter().map(|t| t.length).sum();
    let sum_g: T = terms.iter().map(|t| t.gradient).sum();
    terms
        .iter()
        .map(|t| {
            let lt = if sum_t > T::zero() { params.w_alpha * t.length / sum_t } else { T::zero() };
            let lg = if sum_g > T::zero() { params.w_beta * t.gradient / sum_g } else { T::zero() };
            (lt + lg) * (-params.lambda * t.turn).exp() + t.dist
        })
        .collect()
}

pub fn local_terms<T: Scalar>(s: &Subgoal<T>, tree: &Tree<T>, target: Point2<T>) -> Option<LocalTerms<T>> {
    let NodeRef::Tree(id) = s.node else {
        return None;
    };
    let n = tree.node(id)?;
    Some(LocalTerms {
        length: n.cum_length,
        gradient: n.cum_gradient,
        turn: n.cum_turn,
        dist: s.position.distance(target),
    })
}

/// Local score of `s` normalized over the whole local set `set`.
pub fn local_cost<T: Scalar>(
    s: &Subgoal<T>,
    tree: &Tree<T>,
    set: &[Subgoal<T>],
    target: Point2<T>,
    params: &CostParams<T>,
) -> Option<T> {
    let terms: Vec<LocalTerms<T>> = set
        .iter()
        .map(|x| local_terms(x, tree, target))
        .collect::<Option<_>>()?;
    let k = set.iter().position(|x| x.node == s.node)?;
    Some(local_costs(&terms, params)[k])
}

/// `Dist · exp(∇max)`.
pub fn global_cost<T: Scalar>(s: &Subgoal<T>, target: Point2<T>) -> T {
    s.position.distance(target) * s.nabla_max.exp()
}

fn argmin<T: Scalar>(set: &[Subgoal<T>], costs: &[T]) -> Subgoal<T> {
    let mut best = 0;
    for k in 1..set.len() {
        let better = costs[k] < costs[best] || (costs[k] == costs[best] && set[k].node < set[best].node);
        if better {
            best = k;
        }
    }
    Subgoal {
        cost: costs[best],
        ..set[best]
    }
}

/// Picks the local set when it holds at least `n_delta` candidates, the
/// global set otherwise; an empty global set falls back to a non-empty
/// local one. Ties go to the lowest node id.
pub fn select_subgoal<T: Scalar>(
    local: &[Subgoal<T>],
    global: &[Subgoal<T>],
    tree: &Tree<T>,
    params: &CostParams<T>,
    target: Point2<T>,
) -> Result<Subgoal<T>> {
    let use_local = !local.is_empty() && (local.len() >= params.n_delta || global.is_empty());
    if use_local {
        let terms: Vec<LocalTerms<T>> = local
            .iter()
            .map(|s| local_terms(s, tree, target).ok_or(Error::UnknownNode(node_raw(s.node))))
            .collect::<Result<_>>()?;
        return Ok(argmin(local, &local_costs(&terms, params)));
    }
    if global.is_empty() {
        return Err(Error::NoSubgoal);
    }
    let costs: Vec<T> = global.iter().map(|s| global_cost(s, target)).collect();
    Ok(argmin(global, &costs))
}

fn node_raw(r: NodeRef) -> u64 {
    match r {
        NodeRef::Tree(id) => id.0,
        NodeRef::Graph(id) => id.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_map::SensorModel;
    use crate::terrain::HeightField;

    fn params() -> CostParams<f64> {
        CostParams {
            w_alpha: 1.0,
            w_beta: 1.0,
            lambda: 0.5,
            delta: 0.6,
            n_delta: 3,
            reach_eps: 0.25,
        }
    }

    fn flat_field() -> HeightField<f64> {
        HeightField::from_fn(Point2::new(0.0, 0.0), 0.1, 200, 200, |_| 0.0).unwrap()
    }

    fn sensed_map(field: &HeightField<f64>, at: Point2<f64>, radius: f64) -> LocalGridMap<f64> {
        SensorModel {
            window_w: 80,
            window_h: 80,
            radius,
        }
        .sense(field, at, None)
        .unwrap()
    }

    fn global(id: u64, x: f64, nabla: f64) -> Subgoal<f64> {
        Subgoal {
            position: Point2::new(x, 0.0),
            source: SubgoalSource::Global,
            node: NodeRef::Graph(GraphNodeId(id)),
            nabla_max: nabla,
            cost: 0.0,
        }
    }

    #[test]
    fn coverage_full_empty_half() {
        let field = flat_field();
        let c = Point2::new(10.0, 10.0);
        let map = sensed_map(&field, c, 100.0);
        let full = coverage_ratio(c, &map, 1.0);
        let cell = 0.01 / std::f64::consts::PI;
        assert!((full - 1.0).abs() <= cell * 8.0, "{full}");

        let blank = LocalGridMap::empty(*field.geometry(), 80, 80, c);
        assert_eq!(coverage_ratio(c, &blank, 1.0), 0.0);

        // half plane x < 10 known
        let geo = *field.geometry();
        let mut half = LocalGridMap::empty(geo, 80, 80, c);
        for j in 0..200 {
            for i in 0..200 {
                if geo.cell_center(i, j).x < 10.0 {
                    half.set_elevation(i, j, Some(0.0));
                }
            }
        }
        let mut exact = 0usize;
        for j in 0..200 {
            for i in 0..200 {
                let q = geo.cell_center(i, j);
                if q.distance(c) <= 1.0 && q.x < 10.0 {
                    exact += 1;
                }
            }
        }
        let h = coverage_ratio(c, &half, 1.0);
        assert_eq!(h, exact as f64 * 0.01 / std::f64::consts::PI);
        assert!((h - 0.5).abs() < 0.05, "{h}");
    }

    #[test]
    fn candidate_lifecycle() {
        let field = flat_field();
        let c = Point2::new(10.0, 10.0);
        // sensed radius 2.5: a leaf at 2.5 m sits on the frontier
        let map = sensed_map(&field, c, 2.5);
        let mut tree = Tree::new(c, 0.0, 1.0);
        let inner = tree.attach(tree.root_id(), Point2::new(10.5, 10.0), 0.0, 0.0);
        let mid = tree.attach(tree.root_id(), Point2::new(11.5, 10.0), 0.0, 0.0);
        let edge = tree.attach(mid, Point2::new(12.5, 10.0), 0.0, 0.0);
        let p = params();
        let set = update_candidates(&mut tree, &map, &p, 0);
        assert_eq!(set.len(), 1);
        assert_eq!(set[0].node, NodeRef::Tree(edge));
        assert!(set[0].nabla_max <= p.delta);
        assert_eq!(tree.node(inner).unwrap().candidate, CandidateState::Revoked);
        assert_eq!(tree.node(mid).unwrap().candidate, CandidateState::Revoked);

        // gaining a child revokes for good, even if the child is removed
        let child = tree.attach(edge, Point2::new(13.0, 10.0), 0.0, 0.0);
        update_candidates(&mut tree, &map, &p, 1);
        assert_eq!(tree.node(edge).unwrap().candidate, CandidateState::Revoked);
        let doomed = std::iter::once(child).collect();
        tree.drop_nodes(&doomed);
        assert!(update_candidates(&mut tree, &map, &p, 2).is_empty());
    }

    #[test]
    fn nabla_max_tracks_history() {
        let field = flat_field();
        let c = Point2::new(10.0, 10.0);
        let mut tree = Tree::new(c, 0.0, 1.0);
        let leaf = tree.attach(tree.root_id(), Point2::new(12.6, 10.0), 0.0, 0.0);
        let p = params();
        let narrow = sensed_map(&field, c, 2.2);
        let a = update_candidates(&mut tree, &narrow, &p, 0)[0].nabla_max;
        let wider = sensed_map(&field, c, 2.5);
        let b = update_candidates(&mut tree, &wider, &p, 1)[0].nabla_max;
        assert!(b > a);
        let c2 = update_candidates(&mut tree, &narrow, &p, 2)[0].nabla_max;
        assert_eq!(c2, b);
        assert!(matches!(
            tree.node(leaf).unwrap().candidate,
            CandidateState::Candidate { first_seen: 0, .. }
        ));
    }

    #[test]
    fn single_flat_straight_branch() {
        let mut tree = Tree::new(Point2::new(0.0, 0.0), 0.0, 1.0);
        let a = tree.attach(tree.root_id(), Point2::new(1.0, 0.0), 0.0, 0.0);
        let s = Subgoal {
            position: Point2::new(1.0, 0.0),
            source: SubgoalSource::Local,
            node: NodeRef::Tree(a),
            nabla_max: 0.2,
            cost: 0.0,
        };
        let target = Point2::new(4.0, 4.0);
        let p = CostParams { w_alpha: 0.7, ..params() };
        let cost = local_cost(&s, &tree, &[s], target, &p).unwrap();
        assert_eq!(cost, 0.7 + 5.0);
    }

    #[test]
    fn three_subgoal_hand_evaluation() {
        let terms = [
            LocalTerms { length: 2.0, gradient: 0.3, turn: 0.4, dist: 7.5 },
            LocalTerms { length: 3.5, gradient: 0.1, turn: 1.2, dist: 6.25 },
            LocalTerms { length: 1.25, gradient: 0.6, turn: 0.0, dist: 8.0 },
        ];
        let p = CostParams { w_alpha: 1.5, w_beta: 0.75, lambda: 0.3, ..params() };
        // ΣT = 6.75, ΣΓ = 1.0
        let expect = [
            (1.5 * 2.0 / 6.75 + 0.75 * 0.3) * (-0.12f64).exp() + 7.5,
            (1.5 * 3.5 / 6.75 + 0.75 * 0.1) * (-0.36f64).exp() + 6.25,
            (1.5 * 1.25 / 6.75 + 0.75 * 0.6) + 8.0,
        ];
        let got = local_costs(&terms, &p);
        for (g, e) in got.iter().zip(expect) {
            assert!(((g - e) / e).abs() < 1e-12, "{g} vs {e}");
        }
        // the middle one: 0.594963... + 6.25
        assert!((got[1] - 6.844_963).abs() < 1e-5);
    }

    #[test]
    fn global_cost_identities() {
        let t = Point2::new(0.0, 0.0);
        assert_eq!(global_cost(&global(0, 3.7, 0.0), t), 3.7);
        let e = global_cost(&global(0, 10.0, 1.0), t);
        assert!((e - 27.182_818_284_590_45).abs() < 1e-12);
        assert!(global_cost(&global(0, 5.0, 0.2), t) < global_cost(&global(1, -5.0, 0.8), t));
    }

    #[test]
    fn selection_rules() {
        let tree = Tree::new(Point2::new(0.0, 0.0), 0.0, 1.0);
        let p = params();
        let t = Point2::new(0.0, 0.0);
        assert_eq!(select_subgoal(&[], &[], &tree, &p, t), Err(Error::NoSubgoal));
        let only = select_subgoal(&[], &[global(4, 2.0, 0.1)], &tree, &p, t).unwrap();
        assert_eq!(only.node, NodeRef::Graph(GraphNodeId(4)));
        let tie = select_subgoal(&[], &[global(9, 2.0, 0.5), global(3, -2.0, 0.5)], &tree, &p, t).unwrap();
        assert_eq!(tie.node, NodeRef::Graph(GraphNodeId(3)));
    }

    #[test]
    fn local_branch_when_enough_candidates() {
        let mut tree = Tree::new(Point2::new(0.0, 0.0), 0.0, 1.0);
        let r = tree.root_id();
        let ids: Vec<NodeId> = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]
            .iter()
            .map(|&(x, y)| tree.attach(r, Point2::new(x, y), 0.0, 0.0))
            .collect();
        let local: Vec<Subgoal<f64>> = ids
            .iter()
            .map(|&id| Subgoal {
                position: tree.node(id).unwrap().position,
                source: SubgoalSource::Local,
                node: NodeRef::Tree(id),
                nabla_max: 0.3,
                cost: 0.0,
            })
            .collect();
        let p = params();
        let target = Point2::new(0.0, 50.0);
        // a global candidate right at the target is ignored
        let g = [global(0, 0.0, 0.0)];
        let s = select_subgoal(&local, &g, &tree, &p, target).unwrap();
        assert_eq!(s.source, SubgoalSource::Local);
        assert_eq!(s.node, NodeRef::Tree(ids[1]));
        // below n_delta the global set wins
        let s = select_subgoal(&local[..2], &g, &tree, &p, target).unwrap();
        assert_eq!(s.source, SubgoalSource::Global);
        // equal local costs break on id
        let s = select_subgoal(&local, &g, &tree, &p, Point2::new(0.0, 0.0)).unwrap();
        assert_eq!(s.node, NodeRef::Tree(ids[0]));
    }
}
