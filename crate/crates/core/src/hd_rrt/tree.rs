use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::geometry::{turn_angle, Point2};
use crate::scalar::Scalar;
use crate::spatial::GridIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Eight one-bit sectors of failed expansions around a node. Sector `k`
/// covers bearings `[kπ/4, (k+1)π/4)` counterclockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SaturationVector(u8);

impl SaturationVector {
    pub fn from_mask(mask: u8) -> Self {
        Self(mask)
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn set(&mut self, sector: usize) {
        self.0 |= 1 << sector;
    }

    pub fn get(self, sector: usize) -> bool {
        self.0 & (1 << sector) != 0
    }

    /// Number of blocked sectors.
    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }
}

/// Sector index of a bearing in `[0, 2π)`.
pub fn sector_of<T: Scalar>(bearing: T) -> usize {
    (bearing / T::FRAC_PI_4()).floor().to_usize().unwrap_or(0).min(7)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidateState<T> {
    Unevaluated,
    Candidate { nabla_max: T, first_seen: u64 },
    /// Lost candidacy; never regained.
    Revoked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode<T> {
    pub id: NodeId,
    pub position: Point2<T>,
    pub elevation: T,
    pub parent: Option<NodeId>,
    pub children: BTreeSet<NodeId>,
    pub saturation: SaturationVector,
    /// Set once the node has been declared saturated.
    pub saturated: bool,
    /// Planar length of the edge to the parent.
    pub edge_length: T,
    /// Mean `|ℓ|` over the meta segments of the edge to the parent.
    pub edge_gradient: T,
    pub cum_length: T,
    pub cum_gradient: T,
    pub cum_turn: T,
    pub candidate: CandidateState<T>,
}

impl<T: Scalar> TreeNode<T> {
    fn new(id: NodeId, position: Point2<T>, elevation: T) -> Self {
        Self {
            id,
            position,
            elevation,
            parent: None,
            children: BTreeSet::new(),
            saturation: SaturationVector::default(),
            saturated: false,
            edge_length: T::zero(),
            edge_gradient: T::zero(),
            cum_length: T::zero(),
            cum_gradient: T::zero(),
            cum_turn: T::zero(),
            candidate: CandidateState::Unevaluated,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Rooted tree of feasible edges with a spatial index over node positions.
#[derive(Debug, Clone)]
pub struct Tree<T> {
    nodes: BTreeMap<NodeId, TreeNode<T>>,
    root: NodeId,
    r_ext: T,
    index: GridIndex<NodeId, T>,
    next_id: u64,
    detached: usize,
}

impl<T: Scalar> Tree<T> {
    pub fn new(root_position: Point2<T>, root_elevation: T, r_ext: T) -> Self {
        let mut tree = Self {
            nodes: BTreeMap::new(),
            root: NodeId(0),
            r_ext,
            index: GridIndex::new(r_ext.max(T::epsilon())),
            next_id: 0,
            detached: 0,
        };
        tree.root = tree.alloc(root_position, root_elevation);
        tree
    }

    fn alloc(&mut self, position: Point2<T>, elevation: T) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.nodes.insert(id, TreeNode::new(id, position, elevation));
        self.index.insert(id, position);
        id
    }

    pub fn root_id(&self) -> NodeId {
        self.root
    }

    pub fn root(&self) -> &TreeNode<T> {
        &self.nodes[&self.root]
    }

    pub fn r_ext(&self) -> T {
        self.r_ext
    }

    pub fn node(&self, id: NodeId) -> Option<&TreeNode<T>> {
        self.nodes.get(&id)
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Option<&mut TreeNode<T>> {
        self.nodes.get_mut(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Nodes attached to the tree.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Attached nodes plus any cut loose but retained by the full-tree baseline.
    pub fn retained_count(&self) -> usize {
        self.nodes.len() + self.detached
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TreeNode<T>> + '_ {
        self.nodes.values()
    }

    pub fn ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub(crate) fn index(&self) -> &GridIndex<NodeId, T> {
        &self.index
    }

    /// Adds `position` as a child of `parent` over an already-validated edge.
    pub fn attach(&mut self, parent: NodeId, position: Point2<T>, elevation: T, edge_gradient: T) -> NodeId {
        let id = self.alloc(position, elevation);
        self.link(parent, id, edge_gradient);
        self.refresh_from(id);
        id
    }

    fn link(&mut self, parent: NodeId, child: NodeId, edge_gradient: T) {
        let ppos = self.nodes[&parent].position;
        let c = self.nodes.get_mut(&child).unwrap();
        c.parent = Some(parent);
        c.edge_length = ppos.distance(c.position);
        c.edge_gradient = edge_gradient;
        self.nodes.get_mut(&parent).unwrap().children.insert(child);
    }

    /// Recomputes the cumulative fields of `id` from its parent.
    fn refresh_from(&mut self, id: NodeId) {
        let node = &self.nodes[&id];
        let Some(pid) = node.parent else {
            let n = self.nodes.get_mut(&id).unwrap();
            n.cum_length = T::zero();
            n.cum_gradient = T::zero();
            n.cum_turn = T::zero();
            n.edge_length = T::zero();
            n.edge_gradient = T::zero();
            return;
        };
        let parent = &self.nodes[&pid];
        let turn = match parent.parent {
            Some(gid) => {
                let g = self.nodes[&gid].position;
                turn_angle(parent.position - g, node.position - parent.position)
            }
            None => T::zero(),
        };
        let (cl, cg, ct) = (
            parent.cum_length + node.edge_length,
            parent.cum_gradient + node.edge_gradient,
            parent.cum_turn + turn,
        );
        let n = self.nodes.get_mut(&id).unwrap();
        n.cum_length = cl;
        n.cum_gradient = cg;
        n.cum_turn = ct;
    }

    /// Recomputes every cumulative field top-down from the root.
    pub fn recompute_cumulative(&mut self) {
        for id in self.bfs_from(self.root) {
            self.refresh_from(id);
        }
    }

    /// Breadth-first order from `start`, children in id order.
    pub fn bfs_from(&self, start: NodeId) -> Vec<NodeId> {
        let mut order = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(id) = queue.pop_front() {
            order.push(id);
            queue.extend(self.nodes[&id].children.iter().copied());
        }
        order
    }

    /// Node ids from the root down to `id` inclusive.
    pub fn branch(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[&cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Makes `new_root` the root by reversing parent pointers along the path
    /// from the old root. Node and edge sets are unchanged.
    pub fn reroot(&mut self, new_root: NodeId) {
        if new_root == self.root {
            return;
        }
        // path new_root -> ... -> old root; edge i joins path[i] and path[i+1]
        let mut path = self.branch(new_root);
        path.reverse();
        let edges: Vec<(T, T)> = path
            .iter()
            .take(path.len() - 1)
            .map(|id| {
                let n = &self.nodes[id];
                (n.edge_length, n.edge_gradient)
            })
            .collect();
        for (k, pair) in path.windows(2).enumerate() {
            let (child, parent) = (pair[0], pair[1]);
            self.nodes.get_mut(&parent).unwrap().children.remove(&child);
            self.nodes.get_mut(&child).unwrap().children.insert(parent);
            let p = self.nodes.get_mut(&parent).unwrap();
            p.parent = Some(child);
            p.edge_length = edges[k].0;
            p.edge_gradient = edges[k].1;
        }
        let r = self.nodes.get_mut(&new_root).unwrap();
        r.parent = None;
        r.edge_length = T::zero();
        r.edge_gradient = T::zero();
        self.root = new_root;
        self.recompute_cumulative();
    }

    /// `id` and all of its descendants.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        self.bfs_from(id)
    }

    /// Detaches and drops exactly `ids`, fixing child sets of survivors.
    pub(crate) fn drop_nodes(&mut self, ids: &BTreeSet<NodeId>) -> Vec<TreeNode<T>> {
        let mut removed = Vec::with_capacity(ids.len());
        for id in ids {
            if let Some(n) = self.nodes.remove(id) {
                self.index.remove(*id, n.position);
                removed.push(n);
            }
        }
        for n in &removed {
            if let Some(p) = n.parent {
                if let Some(pn) = self.nodes.get_mut(&p) {
                    pn.children.remove(&n.id);
                }
            }
        }
        removed
    }

    /// Discards every node and restarts from a single root.
    pub(crate) fn reset(&mut self, root_position: Point2<T>, root_elevation: T, keep_as_detached: bool) -> Vec<TreeNode<T>> {
        let removed: Vec<TreeNode<T>> = std::mem::take(&mut self.nodes).into_values().collect();
        if keep_as_detached {
            self.detached += removed.len();
        }
        self.index.clear();
        self.root = self.alloc(root_position, root_elevation);
        removed
    }

    /// Inserts a fresh root at `position` whose only child is the current root.
    pub(crate) fn push_root(&mut self, position: Point2<T>, elevation: T, edge_gradient: T) -> NodeId {
        let old = self.root;
        let id = self.alloc(position, elevation);
        self.link(id, old, edge_gradient);
        self.root = id;
        self.recompute_cumulative();
        id
    }

    /// Reparents `child` under `parent` (edge already validated).
    pub(crate) fn reparent(&mut self, child: NodeId, parent: NodeId, edge_gradient: T) {
        if let Some(old) = self.nodes[&child].parent {
            if let Some(o) = self.nodes.get_mut(&old) {
                o.children.remove(&child);
            }
        }
        self.link(parent, child, edge_gradient);
    }

    /// Plain-text dump, one node per line: `id parent x y elev sat_mask cum_len`
    /// with parent `-1` for the root.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for n in self.nodes.values() {
            let parent = n.parent.map_or("-1".to_string(), |p| p.0.to_string());
            out.push_str(&format!(
                "{} {} {} {} {} {} {}\n",
                n.id, parent, n.position.x, n.position.y, n.elevation, n.saturation.mask(), n.cum_length
            ));
        }
        out
    }

    /// Structural self-check: one root, consistent links, every node reachable
    /// from the root and cumulative lengths matching edge sums.
    pub fn check_structure(&self) -> Result<(), String> {
        let roots: Vec<_> = self.nodes.values().filter(|n| n.parent.is_none()).collect();
        if roots.len() != 1 || roots[0].id != self.root {
            return Err(format!("expected single root {}, found {}", self.root, roots.len()));
        }
        for n in self.nodes.values() {
            if let Some(p) = n.parent {
                let pn = self.nodes.get(&p).ok_or(format!("{} has missing parent {p}", n.id))?;
                if !pn.children.contains(&n.id) {
                    return Err(format!("{p} does not list child {}", n.id));
                }
                let expect = pn.cum_length + pn.position.distance(n.position);
                let tol = T::epsilon() * (T::one() + expect) * crate::scalar::lit(64.0);
                if (expect - n.cum_length).abs() > tol || !(n.cum_length > T::zero()) {
                    return Err(format!("cum_length of {} inconsistent", n.id));
                }
            }
            for c in &n.children {
                if self.nodes.get(c).and_then(|cn| cn.parent) != Some(n.id) {
                    return Err(format!("child {c} of {} does not point back", n.id));
                }
            }
        }
        if self.bfs_from(self.root).len() != self.nodes.len() {
            return Err("unreachable nodes present".into());
        }
        if self.index.len() != self.nodes.len() {
            return Err("spatial index out of sync".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_formula() {
        use std::f64::consts::PI;
        assert_eq!(sector_of(0.0f64), 0);
        assert_eq!(sector_of(PI / 2.0), 2);
        assert_eq!(sector_of(PI / 4.0 - 1e-12), 0);
        assert_eq!(sector_of(PI / 4.0), 1);
        assert_eq!(sector_of(2.0 * PI - 1e-12), 7);
    }

    #[test]
    fn saturation_counts_distinct_sectors() {
        let mut v = SaturationVector::default();
        v.set(1);
        v.set(1);
        v.set(5);
        assert_eq!(v.count(), 2);
        assert!(v.get(5) && !v.get(0));
        assert_eq!(v.mask(), 0b0010_0010);
    }

    /// Hand trace: root(0,0) → a(1,0) → b(1,1). Rebasing at b reverses both
    /// links; from b, a sits at 1 m and the old root at 2 m, with one right
    /// angle turn at a.
    #[test]
    fn reroot_chain_hand_trace() {
        let mut t = Tree::new(Point2::new(0.0, 0.0), 0.0, 1.5);
        let r = t.root_id();
        let a = t.attach(r, Point2::new(1.0, 0.0), 0.0, 0.25);
        let b = t.attach(a, Point2::new(1.0, 1.0), 0.0, 0.5);
        assert_eq!(t.node(b).unwrap().cum_length, 2.0);
        assert_eq!(t.node(b).unwrap().cum_gradient, 0.75);
        assert!((t.node(b).unwrap().cum_turn - std::f64::consts::FRAC_PI_2).abs() < 1e-15);

        t.reroot(b);
        t.check_structure().unwrap();
        assert_eq!(t.root_id(), b);
        assert_eq!(t.node(b).unwrap().parent, None);
        assert_eq!(t.node(a).unwrap().parent, Some(b));
        assert_eq!(t.node(r).unwrap().parent, Some(a));
        assert_eq!(t.node(a).unwrap().cum_length, 1.0);
        assert_eq!(t.node(r).unwrap().cum_length, 2.0);
        assert_eq!(t.node(a).unwrap().cum_gradient, 0.5);
        assert_eq!(t.node(r).unwrap().cum_gradient, 0.75);
        assert!((t.node(r).unwrap().cum_turn - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn reroot_preserves_edge_set() {
        let mut t = Tree::new(Point2::new(0.0, 0.0), 0.0, 2.0);
        let r = t.root_id();
        let a = t.attach(r, Point2::new(1.0, 0.0), 0.0, 0.0);
        let _b = t.attach(a, Point2::new(2.0, 0.0), 0.0, 0.0);
        let c = t.attach(r, Point2::new(0.0, 1.0), 0.0, 0.0);
        let d = t.attach(c, Point2::new(0.0, 2.0), 0.0, 0.0);
        let edges = |t: &Tree<f64>| {
            let mut e: Vec<(u64, u64)> = t
                .nodes()
                .filter_map(|n| n.parent.map(|p| (n.id.0.min(p.0), n.id.0.max(p.0))))
                .collect();
            e.sort();
            e
        };
        let before = edges(&t);
        t.reroot(d);
        assert_eq!(edges(&t), before);
        t.check_structure().unwrap();
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn snapshot_lines() {
        let mut t = Tree::new(Point2::new(0.0, 0.0), 1.0, 1.0);
        let r = t.root_id();
        t.attach(r, Point2::new(0.5, 0.0), 1.5, 0.0);
        assert_eq!(t.snapshot(), "0 -1 0 0 1 0 0\n1 0 0.5 0 1.5 0 0.5\n");
    }
}
