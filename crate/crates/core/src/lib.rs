//! Penetration depth for closed triangle meshes.
//!
//! The pipeline has three stages:
//!
//! 1. **Point classification** ([`pip`]): every vertex of one object is tested
//!    against the other object with a two-way ray-parity point-in-polyhedron
//!    test, producing the penetration point sets.
//! 2. **Penetration surface generation** ([`psurf`]): the triangles touching a
//!    penetration point are compacted into a standalone sub-mesh with its own
//!    acceleration structure.
//! 3. **Sampled Hausdorff distance** ([`hdist`]): rays cast from each
//!    penetration point toward the opposing surface estimate the directional
//!    Hausdorff distances; the penetration depth is the larger of the two.
//!
//! All ray queries go through the software BVH in [`accel`]. The [`oracle`]
//! module holds independent brute-force references used for ground truth; it
//! shares no query code with the BVH path.
//!
//! With the default `parallel` feature the per-vertex and per-point loops run
//! on rayon; results are identical to the sequential build and independent of
//! the thread count.

pub mod accel;
pub mod hdist;
pub mod mesh;
pub mod oracle;
pub mod pip;
pub mod psurf;
pub mod shapes;

pub(crate) mod par;
pub(crate) mod rng;
