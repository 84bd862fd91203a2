//! Evaluation of the free energies and functionals.

pub mod circle;
pub mod fields;
pub mod planar;
pub mod sphere;

pub use circle::{half_laplacian_energy, lebedev_milin_functional, lebedev_milin_parts};
pub use fields::{CircleField, PlanarDensity, PlanarInput, RadialDensity, SphereField};
pub use planar::{log_interaction, planar_free_energy, planar_free_energy_parts, FreeEnergyParts, SelfCell};
pub use sphere::{
    dirichlet_energy, onofri_entropy_form_gap, onofri_functional, onofri_parts, sphere_green_apply,
    spherical_free_energy, spherical_free_energy_parts,
};
