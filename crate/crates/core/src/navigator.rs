//! The receding-horizon episode loop: sense, grow the tree, rebase and
//! harvest, pick a subgoal, move.
//!
//! The robot is a holonomic point that follows straight edges exactly. It
//! only changes plan, rebases or turns at edge endpoints, so the executed
//! trajectory is a chain of edges that were each validated before use.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::global_graph::{Graph, GraphNode, GraphNodeId, NodeKind};
use crate::grid_map::{HazardLayer, KnownTerrain, LocalGridMap, SensorModel};
use crate::hd_rrt::{
    assess_edge, crosses_hazard, extend_guarded, gradability, prune_and_rebase, ExpansionSettings, FeasibilityParams,
    NodeId, Tree, TreeMode, TreeNode,
};
use crate::scalar::{from_usize, lit, Scalar};
use crate::subgoals::{coverage_ratio, select_subgoal, update_candidates, CostParams, NodeRef, Subgoal, SubgoalSource};
use crate::terrain::{generate_terrain, HeightField, TerrainSpec, TerrainView};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig<T> {
    pub terrain: TerrainSpec<T>,
    pub start: Point2<T>,
    pub target: Point2<T>,
    /// Window size in cells.
    pub window_w: usize,
    pub window_h: usize,
    pub sensing_radius: T,
    pub r_ext: T,
    pub feasibility: FeasibilityParams<T>,
    pub cost: CostParams<T>,
    pub saturation_threshold: usize,
    pub extends_per_cycle: usize,
    /// Meters per tick.
    pub speed: T,
    pub max_ticks: u64,
    pub seed: u64,
    pub mode: TreeMode,
    pub k_nn: usize,
    /// Robot displacement from the current root that triggers a rebase.
    pub rebase_threshold: T,
    /// Consecutive ticks without any subgoal before giving up.
    pub stall_ticks: u64,
    /// Ticks the robot holds still at a vertex before each subgoal decision
    /// so the tree can grow into the frontier of the recentred window.
    pub settle_ticks: u64,
}

impl<T: Scalar> EpisodeConfig<T> {
    /// Defaults for the 32 m hilly world, corner to corner.
    pub fn hilly(seed: u64) -> Self {
        Self {
            terrain: TerrainSpec::hilly(seed),
            start: Point2::new(lit(3.0), lit(3.0)),
            target: Point2::new(lit(29.0), lit(29.0)),
            window_w: 40,
            window_h: 40,
            sensing_radius: lit(4.0),
            r_ext: lit(1.5),
            feasibility: FeasibilityParams {
                alpha_grad: lit(0.577),
                beta_flat: lit(2.0),
                meta_len: lit(0.2),
            },
            cost: CostParams {
                w_alpha: lit(1.0),
                w_beta: lit(1.0),
                lambda: lit(0.5),
                delta: lit(0.6),
                n_delta: 3,
                reach_eps: lit(0.25),
            },
            saturation_threshold: 3,
            extends_per_cycle: 80,
            speed: lit(0.5),
            max_ticks: 600,
            seed,
            mode: TreeMode::Pruned,
            k_nn: 5,
            rebase_threshold: lit(1.5),
            stall_ticks: 30,
            settle_ticks: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.terrain.validate()?;
        if self.start == self.target {
            return Err(Error::config("episode.target", "must differ from episode.start"));
        }
        if self.max_ticks == 0 {
            return Err(Error::config("episode.max_ticks", "must be at least 1"));
        }
        if self.extends_per_cycle == 0 {
            return Err(Error::config("tree.extends_per_cycle", "must be at least 1"));
        }
        if self.window_w < 4 {
            return Err(Error::config("window.width", "must be at least 4 cells"));
        }
        if self.window_h < 4 {
            return Err(Error::config("window.height", "must be at least 4 cells"));
        }
        let positive = |v: T, key: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, "must be strictly positive"))
            }
        };
        positive(self.sensing_radius, "sensor.radius")?;
        positive(self.r_ext, "tree.r_ext")?;
        positive(self.speed, "robot.speed")?;
        positive(self.rebase_threshold, "tree.rebase_threshold")?;
        let half = from_usize::<T>(self.window_w.min(self.window_h)) * self.terrain.resolution * lit(0.5);
        if self.r_ext >= half {
            return Err(Error::config("tree.r_ext", "must be smaller than half the window"));
        }
        if !(1..=8).contains(&self.saturation_threshold) {
            return Err(Error::config("tree.saturation_threshold", "must lie in 1..=8"));
        }
        if self.k_nn == 0 {
            return Err(Error::config("graph.k_nn", "must be at least 1"));
        }
        self.feasibility.validate(self.terrain.resolution)?;
        self.cost.validate()?;
        Ok(())
    }

    fn settings(&self) -> ExpansionSettings<T> {
        ExpansionSettings {
            feasibility: self.feasibility,
            saturation_threshold: self.saturation_threshold,
            mode: self.mode,
        }
    }
}

/// How the current route was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Straight to the target, or through a tree node next to it.
    Direct,
    Local,
    Global,
    /// No route; the robot waits.
    Idle,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Direct => "direct",
            Branch::Local => "local",
            Branch::Global => "global",
            Branch::Idle => "idle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision<T> {
    pub tick: u64,
    pub n_local: usize,
    pub n_global: usize,
    pub branch: Branch,
    pub subgoal: Option<Point2<T>>,
    pub cost: Option<T>,
}

/// One row per tick, state at the end of the tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord<T> {
    pub tick: u64,
    pub position: Point2<T>,
    pub elevation: T,
    pub node_count: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub branch: Branch,
    pub subgoal: Option<Point2<T>>,
    pub cost: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Running,
    Reached,
    NoSubgoal,
    OutOfTicks,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Running => "running",
            Outcome::Reached => "reached",
            Outcome::NoSubgoal => "no_subgoal",
            Outcome::OutOfTicks => "out_of_ticks",
        }
    }
}

/// Summary of a rebase, kept for auditing window containment and history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RebaseRecord<T> {
    pub tick: u64,
    pub position: Point2<T>,
    /// Tree nodes outside the window right after pruning (pruned mode).
    pub outside_window: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics<T> {
    pub success: bool,
    pub outcome: Outcome,
    pub ticks: u64,
    /// Executed polyline with ground-truth elevation at each vertex.
    pub trajectory: Vec<(Point2<T>, T)>,
    pub path_length: T,
    /// Sum of `|Δh|` over the executed meta segments per meter travelled.
    pub roughness: T,
    pub rows: Vec<TickRecord<T>>,
    pub decisions: Vec<Decision<T>>,
    pub rebases: Vec<RebaseRecord<T>>,
    pub peak_nodes: usize,
    pub final_nodes: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub memory_bytes: usize,
    pub peak_memory_bytes: usize,
    /// Executed vertices or segments that touched a flagged cell when run.
    pub hazard_violations: usize,
}

/// Per-node footprint used by the memory proxy.
pub fn memory_proxy<T>(tree_nodes: usize, graph_nodes: usize) -> usize {
    tree_nodes * std::mem::size_of::<TreeNode<T>>() + graph_nodes * std::mem::size_of::<GraphNode<T>>()
}

#[derive(Debug, Clone)]
struct Route<T> {
    points: Vec<Point2<T>>,
    branch: Branch,
    subgoal: Option<Subgoal<T>>,
}

impl<T> Route<T> {
    fn idle() -> Self {
        Self {
            points: Vec::new(),
            branch: Branch::Idle,
            subgoal: None,
        }
    }
}

/// Live state of one navigation run.
pub struct Episode<'a, T: Scalar> {
    config: EpisodeConfig<T>,
    field: &'a HeightField<T>,
    sensor: SensorModel<T>,
    map: LocalGridMap<T>,
    known: KnownTerrain<T>,
    hazards: HazardLayer<T>,
    tree: Tree<T>,
    graph: Graph<T>,
    rng: ChaCha8Rng,
    robot: Point2<T>,
    /// Last vertex passed; the robot is mid-edge unless it stands on it.
    vertex: Point2<T>,
    trail: Vec<(Point2<T>, T)>,
    route: Route<T>,
    local_set: Vec<Subgoal<T>>,
    stalled: u64,
    settled: u64,
    tick: u64,
    outcome: Outcome,
    metrics: EpisodeMetrics<T>,
}

impl<'a, T: Scalar> Episode<'a, T> {
    pub fn new(config: EpisodeConfig<T>, field: &'a HeightField<T>) -> Result<Self> {
        config.validate()?;
        for (p, key) in [(config.start, "episode.start"), (config.target, "episode.target")] {
            if !field.contains(p) {
                return Err(Error::config(key, "lies outside the terrain"));
            }
        }
        let world = *field.geometry();
        let sensor = SensorModel {
            window_w: config.window_w,
            window_h: config.window_h,
            radius: config.sensing_radius,
        };
        let map = sensor.sense(field, config.start, None)?;
        let start_elev = ground(field, config.start);
        let mut known = KnownTerrain::new(world);
        known.absorb(&map);
        let metrics = EpisodeMetrics {
            success: false,
            outcome: Outcome::Running,
            ticks: 0,
            trajectory: vec![(config.start, start_elev)],
            path_length: T::zero(),
            roughness: T::zero(),
            rows: Vec::new(),
            decisions: Vec::new(),
            rebases: Vec::new(),
            peak_nodes: 1,
            final_nodes: 1,
            graph_nodes: 0,
            graph_edges: 0,
            memory_bytes: 0,
            peak_memory_bytes: 0,
            hazard_violations: 0,
        };
        Ok(Self {
            tree: Tree::new(config.start, start_elev, config.r_ext),
            graph: Graph::new(world.resolution),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            robot: config.start,
            vertex: config.start,
            trail: Vec::new(),
            route: Route::idle(),
            local_set: Vec::new(),
            stalled: 0,
            settled: 0,
            tick: 0,
            outcome: Outcome::Running,
            hazards: HazardLayer::new(world),
            known,
            map,
            sensor,
            field,
            config,
            metrics,
        })
    }

    pub fn config(&self) -> &EpisodeConfig<T> {
        &self.config
    }

    pub fn tree(&self) -> &Tree<T> {
        &self.tree
    }

    pub fn graph(&self) -> &Graph<T> {
        &self.graph
    }

    pub fn map(&self) -> &LocalGridMap<T> {
        &self.map
    }

    pub fn hazards(&self) -> &HazardLayer<T> {
        &self.hazards
    }

    pub fn known(&self) -> &KnownTerrain<T> {
        &self.known
    }

    pub fn robot(&self) -> Point2<T> {
        self.robot
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn metrics(&self) -> &EpisodeMetrics<T> {
        &self.metrics
    }

    /// Local subgoal set from the latest candidate update.
    pub fn local_subgoals(&self) -> &[Subgoal<T>] {
        &self.local_set
    }

    fn at_vertex(&self) -> bool {
        self.robot == self.vertex
    }

    fn sense(&mut self) -> Result<()> {
        self.map = self.sensor.sense(self.field, self.robot, Some(&self.map))?;
        self.map.project_hazards(&self.hazards);
        self.known.absorb(&self.map);
        let (map, r, delta) = (&self.map, self.config.r_ext, self.config.cost.delta);
        self.graph.consume_reached(self.robot, self.config.cost.reach_eps);
        self.graph
            .consume_covered(|p| map.contains(p).then(|| coverage_ratio(p, map, r)), delta);
        Ok(())
    }

    fn rebase(&mut self) {
        let elev = ground(self.field, self.robot);
        let view = self.known.view(&self.hazards);
        let candidates = self.local_ids();
        let harvest = self.graph.harvest(
            &self.tree,
            &candidates,
            self.robot,
            elev,
            &self.trail,
            &view,
            &self.config.feasibility,
        );
        self.trail.clear();
        let removed = prune_and_rebase(&mut self.tree, self.robot, &self.map, &self.config.settings());
        let mut fresh = harvest.added.clone();
        fresh.extend(harvest.merged.iter().copied());
        let view = self.known.view(&self.hazards);
        self.graph
            .connect(&fresh, &harvest.links, &view, &self.config.feasibility, self.config.k_nn);
        let outside_window = self.tree.nodes().filter(|n| !self.map.contains(n.position)).count();
        self.metrics.rebases.push(RebaseRecord {
            tick: self.tick,
            position: self.robot,
            outside_window,
            removed: removed.len(),
        });
    }

    fn local_ids(&self) -> Vec<NodeId> {
        self.local_set
            .iter()
            .filter_map(|s| match s.node {
                NodeRef::Tree(id) => Some(id),
                NodeRef::Graph(_) => None,
            })
            .collect()
    }

    fn displaced(&self) -> bool {
        self.tree.root().position.distance(self.robot) >= self.config.rebase_threshold
    }

    fn route_valid(&self) -> bool {
        if self.route.points.is_empty() {
            return false;
        }
        if let Some(Subgoal {
            node: NodeRef::Graph(id),
            ..
        }) = self.route.subgoal
        {
            if self.graph.node(id).map_or(true, |n| n.consumed) {
                return false;
            }
        }
        let view = self.known.view(&self.hazards);
        let mut from = self.robot;
        for &p in &self.route.points {
            if from != p && !assess_edge(from, p, &view, &self.config.feasibility).verdict.is_feasible() {
                return false;
            }
            from = p;
        }
        true
    }

    fn feasible_on_map(&self, a: Point2<T>, b: Point2<T>) -> bool {
        a == b || assess_edge(a, b, &self.map, &self.config.feasibility).verdict.is_feasible()
    }

    fn branch_points(&self, id: NodeId) -> Vec<Point2<T>> {
        self.tree
            .branch(id)
            .into_iter()
            .skip(1)
            .map(|n| self.tree.node(n).unwrap().position)
            .collect()
    }

    /// Route to the target through the window, if one is visible.
    fn direct_route(&self) -> Option<Vec<Point2<T>>> {
        let target = self.config.target;
        if !self.map.contains(target) {
            return None;
        }
        if self.feasible_on_map(self.robot, target) {
            return Some(vec![target]);
        }
        let mut best: Option<(T, NodeId)> = None;
        for n in self.tree.nodes() {
            if n.position.distance(target) > self.tree.r_ext() || n.saturated {
                continue;
            }
            if !self.feasible_on_map(n.position, target) {
                continue;
            }
            if best.map_or(true, |(c, _)| n.cum_length < c) {
                best = Some((n.cum_length, n.id));
            }
        }
        let (_, id) = best?;
        let mut points = self.branch_points(id);
        points.push(target);
        Some(points)
    }

    /// Open graph candidates outside the window that the graph can reach,
    /// with the route to each.
    fn global_set(&self) -> Vec<(Subgoal<T>, Vec<Point2<T>>)> {
        let view = self.known.view(&self.hazards);
        let Some((entry, _)) = self.graph.entry(self.robot, &view, &self.config.feasibility) else {
            return Vec::new();
        };
        let table = self.graph.search_from(entry);
        let mut out = Vec::new();
        for n in self.graph.open_candidates() {
            if self.map.contains(n.position) {
                continue;
            }
            let Some(path) = self.graph.path_in(&table, n.id) else {
                continue;
            };
            let mut points = path.points;
            if points.first() == Some(&self.robot) {
                points.remove(0);
            }
            out.push((
                Subgoal {
                    position: n.position,
                    source: SubgoalSource::Global,
                    node: NodeRef::Graph(n.id),
                    nabla_max: n.nabla_max,
                    cost: T::zero(),
                },
                points,
            ));
        }
        out
    }

    fn plan(&mut self) {
        if let Some(points) = self.direct_route() {
            let points = self.shortcut(points);
            self.route = Route {
                points,
                branch: Branch::Direct,
                subgoal: None,
            };
            self.log_decision(Branch::Direct, Some(self.config.target), None, 0);
            self.stalled = 0;
            return;
        }
        let global = self.global_set();
        let global_goals: Vec<Subgoal<T>> = global.iter().map(|g| g.0).collect();
        match select_subgoal(&self.local_set, &global_goals, &self.tree, &self.config.cost, self.config.target) {
            Ok(choice) => {
                let points = match choice.node {
                    NodeRef::Tree(id) => self.branch_points(id),
                    NodeRef::Graph(id) => global
                        .iter()
                        .find(|g| g.0.node == NodeRef::Graph(id))
                        .map(|g| g.1.clone())
                        .unwrap_or_default(),
                };
                let points = self.shortcut(points);
                let branch = match choice.source {
                    SubgoalSource::Local => Branch::Local,
                    SubgoalSource::Global => Branch::Global,
                };
                self.route = Route {
                    points,
                    branch,
                    subgoal: Some(choice),
                };
                self.log_decision(branch, Some(choice.position), Some(choice.cost), global_goals.len());
                self.stalled = 0;
            }
            Err(_) => {
                self.route = Route::idle();
                self.log_decision(Branch::Idle, None, None, global_goals.len());
                self.stalled += 1;
            }
        }
    }

    /// Greedy shortcutting: from each kept point jump to the farthest later
    /// point reachable by one feasible straight edge on the window.
    fn shortcut(&self, points: Vec<Point2<T>>) -> Vec<Point2<T>> {
        let mut out = Vec::with_capacity(points.len());
        let mut from = self.robot;
        let mut k = 0;
        while k < points.len() {
            let mut jump = k;
            for j in (k + 1..points.len()).rev() {
                if self.map.contains(points[j]) && self.feasible_on_map(from, points[j]) {
                    jump = j;
                    break;
                }
            }
            out.push(points[jump]);
            from = points[jump];
            k = jump + 1;
        }
        out
    }

    fn log_decision(&mut self, branch: Branch, subgoal: Option<Point2<T>>, cost: Option<T>, n_global: usize) {
        self.metrics.decisions.push(Decision {
            tick: self.tick,
            n_local: self.local_set.len(),
            n_global,
            branch,
            subgoal,
            cost,
        });
    }

    fn push_vertex(&mut self, p: Point2<T>) {
        let last = self.metrics.trajectory.last().unwrap().0;
        if last == p {
            return;
        }
        let crosses = crosses_hazard(last, p, &self.hazards_view());
        if crosses {
            self.metrics.hazard_violations += 1;
        }
        self.metrics.trajectory.push((p, ground(self.field, p)));
        self.trail.push((p, ground(self.field, p)));
        self.vertex = p;
    }

    fn hazards_view(&self) -> crate::grid_map::KnownView<'_, T> {
        self.known.view(&self.hazards)
    }

    /// Moves up to `speed` along the route, stopping at a vertex when a
    /// rebase is due or the route ends.
    fn advance(&mut self) {
        let mut budget = self.config.speed;
        while budget > T::zero() {
            let Some(&next) = self.route.points.first() else {
                break;
            };
            let d = self.robot.distance(next);
            if d <= budget {
                budget = budget - d;
                self.metrics.path_length = self.metrics.path_length + d;
                self.robot = next;
                self.route.points.remove(0);
                self.push_vertex(next);
                if self.displaced() || self.route.points.is_empty() {
                    break;
                }
                // only the edge under the robot is kept clear during expansion
                if crosses_hazard(next, self.route.points[0], &self.hazards_view()) {
                    break;
                }
            } else {
                self.robot = self.robot.lerp(next, budget / d);
                self.metrics.path_length = self.metrics.path_length + budget;
                budget = T::zero();
            }
        }
    }

    /// Runs one cycle. Does nothing once the episode has ended.
    pub fn step(&mut self) -> Result<Outcome> {
        if self.outcome != Outcome::Running {
            return Ok(self.outcome);
        }
        self.tick += 1;
        self.sense()?;
        let settings = self.config.settings();
        let under_robot = [(self.vertex, self.route.points.first().copied().unwrap_or(self.robot))];
        for _ in 0..self.config.extends_per_cycle {
            extend_guarded(
                &mut self.tree,
                &mut self.map,
                &mut self.rng,
                &settings,
                &mut self.hazards,
                &under_robot,
            );
        }
        if self.at_vertex() {
            let replan = !self.route_valid();
            let off_root = self.tree.root().position != self.robot;
            // a plan that walks tree branches needs the root under the robot
            let target_visible = self.route.branch != Branch::Direct && self.map.contains(self.config.target);
            if self.displaced() || ((replan || target_visible) && off_root) {
                self.rebase();
            }
            self.local_set = update_candidates(&mut self.tree, &self.map, &self.config.cost, self.tick);
            let direct = self.direct_route().is_some();
            let direct_pending = self.route.branch != Branch::Direct && direct;
            if (replan || direct_pending) && !direct && self.settled < self.config.settle_ticks {
                // hold still while the tree fills the new frontier
                self.settled += 1;
                self.route = Route::idle();
            } else if replan || direct_pending {
                self.settled = 0;
                self.plan();
            }
        } else {
            self.local_set = update_candidates(&mut self.tree, &self.map, &self.config.cost, self.tick);
        }
        self.advance();
        self.record_tick();

        if self.robot.distance(self.config.target) <= self.config.cost.reach_eps {
            self.outcome = Outcome::Reached;
        } else if self.route.branch == Branch::Idle && self.stalled >= self.config.stall_ticks {
            self.outcome = Outcome::NoSubgoal;
        } else if self.tick >= self.config.max_ticks {
            self.outcome = Outcome::OutOfTicks;
        }
        if self.outcome != Outcome::Running {
            self.finish();
        }
        Ok(self.outcome)
    }

    fn record_tick(&mut self) {
        let nodes = self.tree.retained_count();
        let memory = memory_proxy::<T>(nodes, self.graph.len());
        let m = &mut self.metrics;
        m.peak_nodes = m.peak_nodes.max(nodes);
        m.peak_memory_bytes = m.peak_memory_bytes.max(memory);
        m.rows.push(TickRecord {
            tick: self.tick,
            position: self.robot,
            elevation: ground(self.field, self.robot),
            node_count: nodes,
            graph_nodes: self.graph.len(),
            graph_edges: self.graph.edge_count(),
            branch: self.route.branch,
            subgoal: self.route.subgoal.map(|s| s.position).or_else(|| {
                (self.route.branch == Branch::Direct).then_some(self.config.target)
            }),
            cost: self.route.subgoal.map(|s| s.cost),
        });
    }

    /// Closes the record: the robot's last position joins the trajectory and
    /// the final root joins the graph history.
    fn finish(&mut self) {
        if !self.at_vertex() {
            self.push_vertex(self.robot);
        }
        let elev = ground(self.field, self.robot);
        let view = self.known.view(&self.hazards);
        let candidates = self.local_ids();
        let h = self.graph.harvest(
            &self.tree,
            &candidates,
            self.robot,
            elev,
            &self.trail,
            &view,
            &self.config.feasibility,
        );
        let mut fresh = h.added.clone();
        fresh.extend(h.merged.iter().copied());
        let view = self.known.view(&self.hazards);
        self.graph
            .connect(&fresh, &h.links, &view, &self.config.feasibility, self.config.k_nn);
        self.trail.clear();

        let m = &mut self.metrics;
        m.outcome = self.outcome;
        m.success = self.outcome == Outcome::Reached;
        m.ticks = self.tick;
        m.final_nodes = self.tree.retained_count();
        m.graph_nodes = self.graph.len();
        m.graph_edges = self.graph.edge_count();
        m.memory_bytes = memory_proxy::<T>(m.final_nodes, m.graph_nodes);
        m.peak_memory_bytes = m.peak_memory_bytes.max(m.memory_bytes);
        m.roughness = roughness(self.field, &m.trajectory, self.config.feasibility.meta_len);
    }

    /// Steps until the episode ends.
    pub fn run(mut self) -> Result<EpisodeMetrics<T>> {
        while self.step()? == Outcome::Running {}
        Ok(self.metrics)
    }

    /// Graph nodes whose kind is root, in history order.
    pub fn root_history(&self) -> Vec<GraphNodeId> {
        self.graph
            .roots()
            .iter()
            .copied()
            .filter(|id| self.graph.node(*id).is_some_and(|n| n.kind == NodeKind::Root))
            .collect()
    }
}

fn ground<T: Scalar>(field: &HeightField<T>, p: Point2<T>) -> T {
    field.elevation_at(p).unwrap_or_else(|| {
        let (i, j) = field.geometry().cell_of(p);
        let g = field.geometry();
        let ci = i.clamp(0, g.nx as i64 - 1);
        let cj = j.clamp(0, g.ny as i64 - 1);
        field.cell(ci, cj).unwrap()
    })
}

/// `Σ|Δh|` over the meta segments of a polyline divided by its length.
pub fn roughness<T: Scalar>(field: &HeightField<T>, trajectory: &[(Point2<T>, T)], meta_len: T) -> T {
    let mut rise = T::zero();
    let mut length = T::zero();
    for w in trajectory.windows(2) {
        let (a, b) = (w[0].0, w[1].0);
        let len = a.distance(b);
        if len == T::zero() {
            continue;
        }
        let Ok(slopes) = gradability(a, b, field, meta_len) else {
            continue;
        };
        let run = len / from_usize(slopes.len());
        rise = rise + slopes.iter().flatten().map(|l| l.abs() * run).sum::<T>();
        length = length + len;
    }
    if length > T::zero() {
        rise / length
    } else {
        T::zero()
    }
}

/// Builds the terrain and runs one episode.
pub fn run_episode<T: Scalar>(config: &EpisodeConfig<T>) -> Result<EpisodeMetrics<T>> {
    config.validate()?;
    let field = generate_terrain(&config.terrain)?;
    Episode::new(config.clone(), &field)?.run()
}

/// Runs one episode over an existing field.
pub fn run_episode_on<T: Scalar>(config: &EpisodeConfig<T>, field: &HeightField<T>) -> Result<EpisodeMetrics<T>> {
    Episode::new(config.clone(), field)?.run()
}
