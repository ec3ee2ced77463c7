//! Mapless navigation over 2.5D terrain with a hazard-aware windowed RRT, a
//! persistent history graph and two-level subgoal selection.
//!
//! All geometry and cost arithmetic is generic over [`Scalar`] (`f32` or
//! `f64`); the `*64` aliases below fix the scalar for everyday use.

pub mod config;
pub mod error;
pub mod geometry;
pub mod global_graph;
pub mod grid_map;
pub mod hd_rrt;
pub mod navigator;
pub mod scalar;
pub mod spatial;
pub mod subgoals;
pub mod terrain;

pub use error::{Error, Result};
pub use geometry::Point2;
pub use global_graph::{Graph, GraphNodeId, NodeKind};
pub use grid_map::{GridCell, HazardLayer, KnownTerrain, LocalGridMap, SensorModel};
pub use navigator::{run_episode, run_episode_on, Episode, EpisodeConfig, EpisodeMetrics, Outcome};
pub use scalar::Scalar;
pub use terrain::{generate_terrain, HeightField, TerrainKind, TerrainSpec, TerrainView};

pub type Point = Point2<f64>;
pub type HeightField64 = HeightField<f64>;
pub type LocalGridMap64 = LocalGridMap<f64>;
pub type Tree64 = hd_rrt::Tree<f64>;
pub type Graph64 = Graph<f64>;
pub type EpisodeConfig64 = EpisodeConfig<f64>;
pub type EpisodeMetrics64 = EpisodeMetrics<f64>;
