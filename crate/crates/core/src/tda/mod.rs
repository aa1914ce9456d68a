//! Persistent homology of delay-embedded series.

pub mod cache;
pub mod diagram;
pub mod embed;
pub mod filtration;
pub mod oracle;
pub mod reduction;
pub mod rips;

pub use diagram::{channel_diagram, diagram_for_instance, diagram_to_point_set, PersistenceDiagram, PhParams, TopoPointSet};
pub use embed::{delay_embed, pairwise_distances, DistanceMatrix, PointCloud};
pub use filtration::{build_rips_filtration, Filtration, Simplex};
pub use oracle::{betti_at, diagram_from_betti, persistent_betti};
pub use reduction::{reduce_boundary, PersistencePair};
pub use rips::rips_persistence;
