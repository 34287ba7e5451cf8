//! Physical types, inertia tensors and the equations of motion of a
//! spinning cylinder carrying a ring damper with a point or distributed slug.

mod eom;
mod inertia;
mod params;

use thiserror::Error;

pub use eom::{
    angular_momentum, beta_ddot_distributed, beta_ddot_point, dissipation_power,
    friction_coefficient, full_rhs, h_rhs, kinetic_energy, kinetic_energy_rate, nutation_angle,
    omega_from_state, scaled_residual, Derivative, State,
};
pub use inertia::{
    assemble_inertia, center_of_mass_offset, distributed_slug_inertia, point_slug_inertia,
    ring_inertia, slug_mass, InertiaSet, PRODUCT_OF_INERTIA_SIGN,
};
pub use params::{
    CylinderBody, DamperParams, DistributedSlug, OffsetMassConvention, SlugModel,
    DEFAULT_DRAG_COEFFICIENT,
};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("parameter `{name}` out of domain ({value}): {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("combined inertia tensor is singular")]
    SingularInertia,
    #[error("slug acceleration closure is degenerate (coefficient {0:e})")]
    DegenerateClosure(f64),
    #[error("nutation angle is undefined for zero angular momentum")]
    UndefinedAngle,
}

/// Parameters together with their assembled inertia, the unit every
/// integrator and analysis routine works on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub params: DamperParams,
    pub inertia: InertiaSet,
}

impl Model {
    pub fn new(params: DamperParams) -> Result<Self, DynamicsError> {
        let inertia = assemble_inertia(&params)?;
        Ok(Self { params, inertia })
    }

    pub fn rhs(&self, s: &State) -> Result<Derivative, DynamicsError> {
        full_rhs(&self.inertia, &self.params, s)
    }

    pub fn state_from_body_rates(&self, omega: Vec3, beta_dot: f64) -> State {
        State::from_body_rates(&self.inertia, omega, beta_dot)
    }

    pub fn kinetic_energy(&self, s: &State) -> f64 {
        kinetic_energy(&self.inertia, s)
    }
}
