//! Mission-long topological graph fed by the windowed tree at every rebase.
//!
//! Past roots, frontier candidates and the branches leading to them are
//! copied out of the tree before pruning discards them, then joined to their
//! nearest neighbors over edges validated against everything ever sensed.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use crate::geometry::Point2;
use crate::hd_rrt::{assess_edge, CandidateState, FeasibilityParams, NodeId, Tree};
use crate::scalar::{lit, Scalar};
use crate::spatial::GridIndex;
use crate::terrain::TerrainView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphNodeId(pub u64);

impl fmt::Display for GraphNodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Ordered by how much a merged duplicate should keep: a past root always
/// survives as a root so the travelled history stays queryable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Waypoint,
    CandidateTarget,
    Root,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Waypoint => "waypoint",
            NodeKind::CandidateTarget => "candidate",
            NodeKind::Root => "root",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode<T> {
    pub id: GraphNodeId,
    pub position: Point2<T>,
    pub elevation: T,
    pub kind: NodeKind,
    /// Highest coverage ratio seen for a candidate target, else zero.
    pub nabla_max: T,
    /// Visited or found covered; no longer offered as a subgoal.
    pub consumed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge<T> {
    /// Planar length, meters.
    pub weight: T,
    pub mean_gradient: T,
}

/// Result of one harvest: ids of newly created nodes, ids that existed but
/// were touched by a merge, and consecutive pairs that should be linked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Harvest {
    pub added: Vec<GraphNodeId>,
    pub merged: Vec<GraphNodeId>,
    pub links: Vec<(GraphNodeId, GraphNodeId)>,
}

/// A route over the graph. `weight` sums the graph edges from `nodes[0]`
/// on, left to right; `entry` is the length of the virtual edge from the
/// query position to `nodes[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPath<T> {
    pub nodes: Vec<GraphNodeId>,
    pub points: Vec<Point2<T>>,
    pub weight: T,
    pub entry: T,
}

#[derive(Debug, Clone)]
pub struct Graph<T> {
    nodes: BTreeMap<GraphNodeId, GraphNode<T>>,
    edges: BTreeMap<(GraphNodeId, GraphNodeId), GraphEdge<T>>,
    adjacency: BTreeMap<GraphNodeId, BTreeSet<GraphNodeId>>,
    index: GridIndex<GraphNodeId, T>,
    roots: Vec<GraphNodeId>,
    merge_tol: T,
    next_id: u64,
}

fn key(a: GraphNodeId, b: GraphNodeId) -> (GraphNodeId, GraphNodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Total order on finite costs for the priority queue.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cost<T>(T);

impl<T: Scalar> Eq for Cost<T> {}

impl<T: Scalar> PartialOrd for Cost<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Cost<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

impl<T: Scalar> Graph<T> {
    /// Empty graph; nodes closer than `resolution / 2` are folded together.
    pub fn new(resolution: T) -> Self {
        Self {
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            adjacency: BTreeMap::new(),
            index: GridIndex::new(resolution * lit(8.0)),
            roots: Vec::new(),
            merge_tol: resolution * lit(0.5),
            next_id: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: GraphNodeId) -> Option<&GraphNode<T>> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &GraphNode<T>> + '_ {
        self.nodes.values()
    }

    /// Edges as `(a, b, edge)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (GraphNodeId, GraphNodeId, &GraphEdge<T>)> + '_ {
        self.edges.iter().map(|(&(a, b), e)| (a, b, e))
    }

    pub fn edge(&self, a: GraphNodeId, b: GraphNodeId) -> Option<&GraphEdge<T>> {
        self.edges.get(&key(a, b))
    }

    pub fn neighbors(&self, id: GraphNodeId) -> impl Iterator<Item = GraphNodeId> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    /// Root nodes in the order the tree passed through them.
    pub fn roots(&self) -> &[GraphNodeId] {
        &self.roots
    }

    pub fn merge_tolerance(&self) -> T {
        self.merge_tol
    }

    pub fn nearest(&self, p: Point2<T>) -> Option<(GraphNodeId, T)> {
        self.index.nearest(p)
    }

    /// Inserts a node or folds it into an existing one within the merge
    /// tolerance. Returns the id and whether a new node was created.
    pub fn insert(&mut self, position: Point2<T>, elevation: T, kind: NodeKind, nabla_max: T) -> (GraphNodeId, bool) {
        let nabla = nabla_max.max(T::zero()).min(T::one());
        if let Some((id, d)) = self.index.nearest(position) {
            if d <= self.merge_tol {
                let node = self.nodes.get_mut(&id).unwrap();
                match (node.kind, kind) {
                    (NodeKind::CandidateTarget, NodeKind::CandidateTarget) => {
                        node.nabla_max = node.nabla_max.max(nabla);
                    }
                    (NodeKind::Waypoint, NodeKind::CandidateTarget) => {
                        node.kind = kind;
                        node.nabla_max = nabla;
                    }
                    (NodeKind::CandidateTarget, NodeKind::Root) => {
                        // standing on it means it has been explored
                        node.kind = kind;
                        node.consumed = true;
                    }
                    (old, new) if new > old => node.kind = new,
                    _ => {}
                }
                return (id, false);
            }
        }
        let id = GraphNodeId(self.next_id);
        self.next_id += 1;
        self.nodes.insert(
            id,
            GraphNode {
                id,
                position,
                elevation,
                kind,
                nabla_max: if kind == NodeKind::CandidateTarget { nabla } else { T::zero() },
                consumed: false,
            },
        );
        self.adjacency.insert(id, BTreeSet::new());
        self.index.insert(id, position);
        (id, true)
    }

    /// Adds an undirected edge; refuses self-loops and duplicates.
    pub fn add_edge(&mut self, a: GraphNodeId, b: GraphNodeId, mean_gradient: T) -> bool {
        if a == b || !self.nodes.contains_key(&a) || !self.nodes.contains_key(&b) {
            return false;
        }
        let k = key(a, b);
        if self.edges.contains_key(&k) {
            return false;
        }
        let weight = self.nodes[&a].position.distance(self.nodes[&b].position);
        self.edges.insert(
            k,
            GraphEdge {
                weight,
                mean_gradient,
            },
        );
        self.adjacency.get_mut(&a).unwrap().insert(b);
        self.adjacency.get_mut(&b).unwrap().insert(a);
        true
    }

    fn push_root(&mut self, id: GraphNodeId) {
        if self.roots.last() != Some(&id) {
            self.roots.push(id);
        }
    }

    fn record(&mut self, out: &mut Harvest, position: Point2<T>, elevation: T, kind: NodeKind, nabla: T) -> GraphNodeId {
        let (id, fresh) = self.insert(position, elevation, kind, nabla);
        let list = if fresh { &mut out.added } else { &mut out.merged };
        if !list.contains(&id) {
            list.push(id);
        }
        id
    }

    fn link(out: &mut Harvest, a: GraphNodeId, b: GraphNodeId) {
        if a != b && !out.links.contains(&(a, b)) {
            out.links.push((a, b));
        }
    }

    /// Copies the tree's history into the graph before a rebase.
    ///
    /// Adds the outgoing root, the robot's executed trail since the last
    /// rebase ending at `robot` (both as roots at the ends, waypoints in
    /// between), each of `candidates` still marked as a candidate in the
    /// tree, and the branch to each thinned to roughly `r_ext` spacing.
    /// Consecutive thinned nodes are kept only when the straight shortcut
    /// between them is feasible on `view`.
    #[allow(clippy::too_many_arguments)]
    pub fn harvest<V: TerrainView<T> + ?Sized>(
        &mut self,
        tree: &Tree<T>,
        candidates: &[NodeId],
        robot: Point2<T>,
        robot_elevation: T,
        trail: &[(Point2<T>, T)],
        view: &V,
        params: &FeasibilityParams<T>,
    ) -> Harvest {
        let mut out = Harvest::default();
        let root = tree.root();
        let root_id = self.record(&mut out, root.position, root.elevation, NodeKind::Root, T::zero());
        self.push_root(root_id);

        let mut prev = root_id;
        for &(p, h) in trail {
            let id = self.record(&mut out, p, h, NodeKind::Waypoint, T::zero());
            Self::link(&mut out, prev, id);
            prev = id;
        }
        let here = self.record(&mut out, robot, robot_elevation, NodeKind::Root, T::zero());
        Self::link(&mut out, prev, here);

        let r_ext = tree.r_ext();
        for node in candidates.iter().filter_map(|&id| tree.node(id)) {
            let CandidateState::Candidate { nabla_max, .. } = node.candidate else {
                continue;
            };
            let branch = tree.branch(node.id);
            let mut last = root.position;
            let mut last_id = root_id;
            for (k, &bid) in branch.iter().enumerate().skip(1) {
                let b = tree.node(bid).unwrap();
                let is_target = k + 1 == branch.len();
                let keep = is_target || last.distance(b.position) >= r_ext || {
                    let next = tree.node(branch[k + 1]).unwrap().position;
                    !assess_edge(last, next, view, params).verdict.is_feasible()
                };
                if !keep {
                    continue;
                }
                let (kind, nabla) = if is_target {
                    (NodeKind::CandidateTarget, nabla_max)
                } else {
                    (NodeKind::Waypoint, T::zero())
                };
                let id = self.record(&mut out, b.position, b.elevation, kind, nabla);
                Self::link(&mut out, last_id, id);
                last = b.position;
                last_id = id;
            }
        }
        self.push_root(here);
        out
    }

    /// Tries edges from each of `ids` to its `k_nn` nearest nodes, plus the
    /// explicit `links`; an edge is kept when feasible on `view`.
    pub fn connect<V: TerrainView<T> + ?Sized>(
        &mut self,
        ids: &[GraphNodeId],
        links: &[(GraphNodeId, GraphNodeId)],
        view: &V,
        params: &FeasibilityParams<T>,
        k_nn: usize,
    ) -> usize {
        let mut tried: BTreeSet<(GraphNodeId, GraphNodeId)> = BTreeSet::new();
        let mut pairs: Vec<(GraphNodeId, GraphNodeId)> = links.to_vec();
        for &id in ids {
            let Some(node) = self.nodes.get(&id) else {
                continue;
            };
            for (other, _) in self.index.k_nearest(node.position, k_nn, |o| o == id) {
                pairs.push((id, other));
            }
        }
        let mut added = 0;
        for (a, b) in pairs {
            let k = key(a, b);
            if a == b || self.edges.contains_key(&k) || !tried.insert(k) {
                continue;
            }
            let (Some(na), Some(nb)) = (self.nodes.get(&a), self.nodes.get(&b)) else {
                continue;
            };
            let assessment = assess_edge(na.position, nb.position, view, params);
            if assessment.verdict.is_feasible() && self.add_edge(a, b, assessment.mean_gradient) {
                added += 1;
            }
        }
        added
    }

    /// Graph node the query position enters through, provided the virtual
    /// edge to it is feasible.
    pub fn entry<V: TerrainView<T> + ?Sized>(
        &self,
        from: Point2<T>,
        view: &V,
        params: &FeasibilityParams<T>,
    ) -> Option<(GraphNodeId, T)> {
        let (id, d) = self.index.nearest(from)?;
        if d <= self.merge_tol {
            return Some((id, d));
        }
        assess_edge(from, self.nodes[&id].position, view, params)
            .verdict
            .is_feasible()
            .then_some((id, d))
    }

    /// Uniform-cost distances and predecessors from `start`.
    pub fn search_from(&self, start: GraphNodeId) -> BTreeMap<GraphNodeId, (T, Option<GraphNodeId>)> {
        let mut best: BTreeMap<GraphNodeId, (T, Option<GraphNodeId>)> = BTreeMap::new();
        let mut done: BTreeSet<GraphNodeId> = BTreeSet::new();
        let mut queue = BinaryHeap::new();
        best.insert(start, (T::zero(), None));
        queue.push(Reverse((Cost(T::zero()), start)));
        while let Some(Reverse((Cost(d), id))) = queue.pop() {
            if !done.insert(id) {
                continue;
            }
            for next in self.neighbors(id) {
                if done.contains(&next) {
                    continue;
                }
                let nd = d + self.edges[&key(id, next)].weight;
                let better = match best.get(&next) {
                    None => true,
                    Some(&(old, via)) => nd < old || (nd == old && via.is_some_and(|v| id < v)),
                };
                if better {
                    best.insert(next, (nd, Some(id)));
                    queue.push(Reverse((Cost(nd), next)));
                }
            }
        }
        best
    }

    /// Cheapest route from `from` to node `to`, entered through the node
    /// nearest `from`. `None` when the entry is infeasible or `to` is not
    /// reachable.
    pub fn shortest_path<V: TerrainView<T> + ?Sized>(
        &self,
        from: Point2<T>,
        to: GraphNodeId,
        view: &V,
        params: &FeasibilityParams<T>,
    ) -> Option<GraphPath<T>> {
        if !self.nodes.contains_key(&to) {
            return None;
        }
        let (start, entry) = self.entry(from, view, params)?;
        self.path_between(start, to).map(|mut p| {
            p.entry = entry;
            p
        })
    }

    /// Cheapest route between two graph nodes.
    pub fn path_between(&self, start: GraphNodeId, to: GraphNodeId) -> Option<GraphPath<T>> {
        self.path_in(&self.search_from(start), to)
    }

    /// Reads the route to `to` out of a [`Graph::search_from`] table.
    pub fn path_in(&self, table: &BTreeMap<GraphNodeId, (T, Option<GraphNodeId>)>, to: GraphNodeId) -> Option<GraphPath<T>> {
        let &(weight, _) = table.get(&to)?;
        let mut nodes = vec![to];
        let mut cur = to;
        while let Some(&(_, Some(prev))) = table.get(&cur) {
            nodes.push(prev);
            cur = prev;
        }
        nodes.reverse();
        let points = nodes.iter().map(|id| self.nodes[id].position).collect();
        Some(GraphPath {
            nodes,
            points,
            weight,
            entry: T::zero(),
        })
    }

    /// Unconsumed candidate targets.
    pub fn open_candidates(&self) -> impl Iterator<Item = &GraphNode<T>> + '_ {
        self.nodes
            .values()
            .filter(|n| n.kind == NodeKind::CandidateTarget && !n.consumed)
    }

    /// Marks every candidate within `eps` of `p` as visited. Returns how many.
    pub fn consume_reached(&mut self, p: Point2<T>, eps: T) -> usize {
        let hits: Vec<GraphNodeId> = self.index.within(p, eps).into_iter().map(|(id, _)| id).collect();
        let mut n = 0;
        for id in hits {
            let node = self.nodes.get_mut(&id).unwrap();
            if node.kind == NodeKind::CandidateTarget && !node.consumed {
                node.consumed = true;
                n += 1;
            }
        }
        n
    }

    /// Re-evaluates open candidates with `coverage` (which returns `None`
    /// where it cannot judge). Records the new maximum and retires those
    /// above `delta`. Returns how many were retired.
    pub fn consume_covered(&mut self, coverage: impl Fn(Point2<T>) -> Option<T>, delta: T) -> usize {
        let mut n = 0;
        for node in self.nodes.values_mut() {
            if node.kind != NodeKind::CandidateTarget || node.consumed {
                continue;
            }
            if let Some(c) = coverage(node.position) {
                node.nabla_max = node.nabla_max.max(c.min(T::one()));
                if c > delta {
                    node.consumed = true;
                    n += 1;
                }
            }
        }
        n
    }

    /// Text dump: `N id kind x y elev nabla_max` lines, then
    /// `E id_a id_b weight` lines.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for n in self.nodes.values() {
            out.push_str(&format!(
                "N {} {} {} {} {} {}\n",
                n.id,
                n.kind.as_str(),
                n.position.x,
                n.position.y,
                n.elevation,
                n.nabla_max
            ));
        }
        for (&(a, b), e) in &self.edges {
            out.push_str(&format!("E {a} {b} {}\n", e.weight));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_map::{HazardLayer, KnownTerrain, SensorModel};
    use crate::terrain::HeightField;

    fn params() -> FeasibilityParams<f64> {
        FeasibilityParams {
            alpha_grad: 0.577,
            beta_flat: 2.0,
            meta_len: 0.1,
        }
    }

    fn flat(n: usize) -> HeightField<f64> {
        HeightField::from_fn(Point2::new(0.0, 0.0), 0.1, n, n, |_| 0.0).unwrap()
    }

    fn sensed(field: &HeightField<f64>) -> KnownTerrain<f64> {
        let geo = *field.geometry();
        let sensor = SensorModel {
            window_w: geo.nx * 2,
            window_h: geo.ny * 2,
            radius: 1e3,
        };
        let c = Point2::new(field.width_m() / 2.0, field.height_m() / 2.0);
        let map = sensor.sense(field, c, None).unwrap();
        let mut k = KnownTerrain::new(geo);
        k.absorb(&map);
        k
    }

    /// Minimum over every simple path, summing weights left to right.
    fn brute_force(g: &Graph<f64>, a: GraphNodeId, b: GraphNodeId) -> Option<f64> {
        fn walk(g: &Graph<f64>, cur: GraphNodeId, b: GraphNodeId, acc: f64, seen: &mut Vec<GraphNodeId>, best: &mut Option<f64>) {
            if cur == b {
                if best.map_or(true, |x| acc < x) {
                    *best = Some(acc);
                }
                return;
            }
            for n in g.neighbors(cur).collect::<Vec<_>>() {
                if seen.contains(&n) {
                    continue;
                }
                seen.push(n);
                walk(g, n, b, acc + g.edge(cur, n).unwrap().weight, seen, best);
                seen.pop();
            }
        }
        let mut best = None;
        walk(g, a, b, 0.0, &mut vec![a], &mut best);
        best
    }

    #[test]
    fn chain_beats_direct_long_edge() {
        let mut g = Graph::new(0.1);
        let a = g.insert(Point2::new(0.0, 0.0), 0.0, NodeKind::Root, 0.0).0;
        let b = g.insert(Point2::new(1.0, 0.0), 0.0, NodeKind::Waypoint, 0.0).0;
        let c = g.insert(Point2::new(2.0, 0.0), 0.0, NodeKind::Waypoint, 0.0).0;
        g.add_edge(a, b, 0.0);
        g.add_edge(b, c, 0.0);
        // a straight a–c edge would weigh 2; stretch it with a detour node
        let d = g.insert(Point2::new(1.0, 1.118_033_988_749_895), 0.0, NodeKind::Waypoint, 0.0).0;
        g.add_edge(a, d, 0.0);
        g.add_edge(d, c, 0.0);
        let p = g.path_between(a, c).unwrap();
        assert_eq!(p.nodes, vec![a, b, c]);
        assert_eq!(p.weight, 2.0);
        assert_eq!(Some(p.weight), brute_force(&g, a, c));
        assert!((g.path_between(a, d).unwrap().weight - 1.5).abs() < 1e-12);
    }

    #[test]
    fn identity_and_disconnected() {
        let mut g = Graph::new(0.1);
        let a = g.insert(Point2::new(0.0, 0.0), 0.0, NodeKind::Root, 0.0).0;
        let b = g.insert(Point2::new(5.0, 0.0), 0.0, NodeKind::Root, 0.0).0;
        let p = g.path_between(a, a).unwrap();
        assert_eq!(p.nodes, vec![a]);
        assert_eq!(p.weight, 0.0);
        assert!(g.path_between(a, b).is_none());
    }

    #[test]
    fn no_self_loops_or_duplicates() {
        let mut g = Graph::new(0.1);
        let a = g.insert(Point2::new(0.0, 0.0), 0.0, NodeKind::Root, 0.0).0;
        let b = g.insert(Point2::new(1.0, 0.0), 0.0, NodeKind::Root, 0.0).0;
        assert!(!g.add_edge(a, a, 0.0));
        assert!(g.add_edge(a, b, 0.0));
        assert!(!g.add_edge(b, a, 0.0));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn merge_keeps_roots_and_raises_candidates() {
        let mut g = Graph::new(0.2);
        let (w, _) = g.insert(Point2::new(1.0, 1.0), 0.0, NodeKind::Waypoint, 0.0);
        let (c, fresh) = g.insert(Point2::new(1.05, 1.0), 0.0, NodeKind::CandidateTarget, 0.4);
        assert!(!fresh);
        assert_eq!(w, c);
        assert_eq!(g.node(w).unwrap().kind, NodeKind::CandidateTarget);
        g.insert(Point2::new(1.0, 1.05), 0.0, NodeKind::CandidateTarget, 0.2);
        assert_eq!(g.node(w).unwrap().nabla_max, 0.4);
        g.insert(Point2::new(1.0, 1.0), 0.0, NodeKind::Root, 0.0);
        let n = g.node(w).unwrap();
        assert_eq!(n.kind, NodeKind::Root);
        assert!(n.consumed);
        g.insert(Point2::new(1.0, 1.0), 0.0, NodeKind::CandidateTarget, 0.1);
        assert_eq!(g.node(w).unwrap().kind, NodeKind::Root);
        // just beyond the tolerance is a new node
        assert!(g.insert(Point2::new(1.11, 1.0), 0.0, NodeKind::Waypoint, 0.0).1);
    }

    #[test]
    fn connect_on_flat_ground_and_across_hazard() {
        let field = flat(60);
        let known = sensed(&field);
        let mut hazards = HazardLayer::new(*field.geometry());
        let mut g = Graph::new(0.1);
        let a = g.insert(Point2::new(1.0, 1.0), 0.0, NodeKind::Root, 0.0).0;
        assert_eq!(g.connect(&[a], &[], &known.view(&hazards), &params(), 5), 0);
        let b = g.insert(Point2::new(2.5, 3.0), 0.0, NodeKind::Root, 0.0).0;
        assert_eq!(g.connect(&[b], &[], &known.view(&hazards), &params(), 5), 1);
        assert_eq!(g.edge(a, b).unwrap().weight, Point2::new(1.0, 1.0).distance(Point2::new(2.5, 3.0)));

        for k in 0..60 {
            hazards.mark_disc(Point2::new(4.05, k as f64 * 0.1 + 0.05), 0.01);
        }
        let c = g.insert(Point2::new(5.0, 1.0), 0.0, NodeKind::Root, 0.0).0;
        assert_eq!(g.connect(&[c], &[], &known.view(&hazards), &params(), 5), 0);
        assert!(g.neighbors(c).next().is_none());
    }

    #[test]
    fn harvest_fig5_branch() {
        let field = flat(100);
        let known = sensed(&field);
        let hazards = HazardLayer::new(*field.geometry());
        let view = known.view(&hazards);
        let mut tree = Tree::new(Point2::new(2.0, 2.0), 0.0, 1.0);
        let a = tree.attach(tree.root_id(), Point2::new(3.0, 2.0), 0.0, 0.0);
        let b = tree.attach(a, Point2::new(4.0, 2.0), 0.0, 0.0);
        tree.node_mut(b).unwrap().candidate = CandidateState::Candidate {
            nabla_max: 0.3,
            first_seen: 0,
        };
        let mut g = Graph::new(0.1);
        let h = g.harvest(&tree, &[b], Point2::new(2.0, 2.0), 0.0, &[], &view, &params());
        assert_eq!(h.added.len(), 3);
        let kinds: Vec<NodeKind> = h.added.iter().map(|id| g.node(*id).unwrap().kind).collect();
        assert_eq!(kinds, vec![NodeKind::Root, NodeKind::Waypoint, NodeKind::CandidateTarget]);
        assert_eq!(g.node(h.added[2]).unwrap().nabla_max, 0.3);
        assert_eq!(g.roots(), &[h.added[0]]);

        let again = g.harvest(&tree, &[b], Point2::new(2.0, 2.0), 0.0, &[], &view, &params());
        assert!(again.added.is_empty());
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn harvest_without_candidates_adds_only_roots() {
        let field = flat(60);
        let known = sensed(&field);
        let hazards = HazardLayer::new(*field.geometry());
        let tree = Tree::new(Point2::new(2.0, 2.0), 0.0, 1.0);
        let mut g = Graph::new(0.1);
        let h = g.harvest(&tree, &[], Point2::new(3.0, 2.0), 0.0, &[], &known.view(&hazards), &params());
        assert_eq!(h.added.len(), 2);
        assert!(h.added.iter().all(|id| g.node(*id).unwrap().kind == NodeKind::Root));
        assert_eq!(g.roots().len(), 2);
        assert_eq!(h.links, vec![(h.added[0], h.added[1])]);
    }

    #[test]
    fn consumption_policies() {
        let mut g = Graph::new(0.1);
        let a = g.insert(Point2::new(0.0, 0.0), 0.0, NodeKind::CandidateTarget, 0.1).0;
        let b = g.insert(Point2::new(5.0, 0.0), 0.0, NodeKind::CandidateTarget, 0.1).0;
        assert_eq!(g.consume_reached(Point2::new(0.1, 0.0), 0.25), 1);
        assert!(g.node(a).unwrap().consumed);
        assert_eq!(g.consume_covered(|p| (p.x > 1.0).then_some(0.9), 0.6), 1);
        assert!(g.node(b).unwrap().consumed);
        assert_eq!(g.node(b).unwrap().nabla_max, 0.9);
        assert_eq!(g.open_candidates().count(), 0);
    }

    #[test]
    fn snapshot_format() {
        let mut g = Graph::new(0.1);
        let a = g.insert(Point2::new(0.0, 0.0), 1.5, NodeKind::Root, 0.0).0;
        let b = g.insert(Point2::new(3.0, 4.0), 1.0, NodeKind::CandidateTarget, 0.25).0;
        g.add_edge(a, b, 0.0);
        assert_eq!(g.snapshot(), "N 0 root 0 0 1.5 0\nN 1 candidate 3 4 1 0.25\nE 0 1 5\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ucs_matches_enumeration(
                pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 2..9),
                mask in any::<u64>(),
            ) {
                let mut g = Graph::new(0.01);
                let ids: Vec<GraphNodeId> = pts
                    .iter()
                    .map(|&(x, y)| g.insert(Point2::new(x, y), 0.0, NodeKind::Waypoint, 0.0).0)
                    .collect();
                let mut bit = 0;
                for i in 0..ids.len() {
                    for j in i + 1..ids.len() {
                        if mask >> (bit % 64) & 1 == 1 {
                            g.add_edge(ids[i], ids[j], 0.0);
                        }
                        bit += 1;
                    }
                }
                let (a, b) = (ids[0], *ids.last().unwrap());
                let got = g.path_between(a, b);
                let want = brute_force(&g, a, b);
                prop_assert_eq!(got.as_ref().map(|p| p.weight), want);
                if let Some(p) = got {
                    let mut sum = 0.0;
                    for w in p.nodes.windows(2) {
                        sum += g.edge(w[0], w[1]).unwrap().weight;
                    }
                    prop_assert_eq!(sum, p.weight);
                }
            }
        }
    }
}
