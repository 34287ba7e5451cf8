use serde::{Deserialize, Serialize};

use super::DynamicsError;

/// Drag coefficient used when none is given, from a wall-shear estimate of
/// water in a partially filled ring.
pub const DEFAULT_DRAG_COEFFICIENT: f64 = 1.63;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<(), DynamicsError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(DynamicsError::Domain {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<(), DynamicsError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(DynamicsError::Domain {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

/// Satellite body modelled as a solid cylinder. The mass includes the ring
/// structure, whose own inertia is folded into the cylinder's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderBody {
    /// kg
    pub mass: f64,
    /// m
    pub radius: f64,
    /// m
    pub length: f64,
}

impl CylinderBody {
    pub fn new(mass: f64, radius: f64, length: f64) -> Result<Self, DynamicsError> {
        let body = Self {
            mass,
            radius,
            length,
        };
        body.validate()?;
        Ok(body)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        check_positive("body.mass", self.mass)?;
        check_positive("body.radius", self.radius)?;
        check_positive("body.length", self.length)
    }
}

/// A rigid torus-arc slug centred on the body x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributedSlug {
    /// Fluid density, kg/m^3.
    pub density: f64,
    /// Radius of the ring tube cross-section, m.
    pub cross_section_radius: f64,
    /// Angular extent of the arc, rad. `2π` fills the ring.
    pub fill_angle: f64,
    /// Height of the ring plane above the centre-of-mass plane, m.
    #[serde(default)]
    pub vertical_offset: f64,
}

impl DistributedSlug {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        check_positive("slug.density", self.density)?;
        check_positive("slug.cross_section_radius", self.cross_section_radius)?;
        if !(self.fill_angle.is_finite()
            && self.fill_angle > 0.0
            && self.fill_angle <= std::f64::consts::TAU)
        {
            return Err(DynamicsError::Domain {
                name: "slug.fill_angle",
                value: self.fill_angle,
                reason: "must lie in (0, 2π]",
            });
        }
        check_non_negative("slug.vertical_offset", self.vertical_offset)
    }

    /// `ρ π r_c² R φ`
    pub fn mass(&self, ring_radius: f64) -> f64 {
        self.density
            * std::f64::consts::PI
            * self.cross_section_radius
            * self.cross_section_radius
            * ring_radius
            * self.fill_angle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SlugModel {
    PointMass {
        /// kg
        mass: f64,
        /// Height of the ring plane above the centre-of-mass plane, m.
        /// Only the diagonal inertia increments are applied for a point slug.
        #[serde(default)]
        vertical_offset: f64,
    },
    Distributed {
        density: f64,
        cross_section_radius: f64,
        fill_angle: f64,
        #[serde(default)]
        vertical_offset: f64,
    },
}

impl SlugModel {
    pub fn point_mass(mass: f64) -> Self {
        SlugModel::PointMass {
            mass,
            vertical_offset: 0.0,
        }
    }

    pub fn distributed(slug: DistributedSlug) -> Self {
        SlugModel::Distributed {
            density: slug.density,
            cross_section_radius: slug.cross_section_radius,
            fill_angle: slug.fill_angle,
            vertical_offset: slug.vertical_offset,
        }
    }

    /// The arc description, if this is the distributed model.
    pub fn as_distributed(&self) -> Option<DistributedSlug> {
        match *self {
            SlugModel::Distributed {
                density,
                cross_section_radius,
                fill_angle,
                vertical_offset,
            } => Some(DistributedSlug {
                density,
                cross_section_radius,
                fill_angle,
                vertical_offset,
            }),
            SlugModel::PointMass { .. } => None,
        }
    }

    pub fn vertical_offset(&self) -> f64 {
        match *self {
            SlugModel::PointMass {
                vertical_offset, ..
            }
            | SlugModel::Distributed {
                vertical_offset, ..
            } => vertical_offset,
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, SlugModel::PointMass { .. })
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        match self {
            SlugModel::PointMass {
                mass,
                vertical_offset,
            } => {
                check_positive("slug.mass", *mass)?;
                check_non_negative("slug.vertical_offset", *vertical_offset)
            }
            SlugModel::Distributed { .. } => self.as_distributed().unwrap().validate(),
        }
    }
}

/// Which mass multiplies `h_i²` in the vertical-offset diagonal increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetMassConvention {
    /// Parallel-axis shift of the slug: `m_s h_i²`.
    #[default]
    Slug,
    /// Body (ring) mass: `m_r h_i²`.
    BodyMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamperParams {
    pub body: CylinderBody,
    /// Ring centreline radius, m.
    pub ring_radius: f64,
    pub slug: SlugModel,
    /// Linear friction coefficient, kg/s. Zero gives the dissipationless system.
    #[serde(default = "default_drag")]
    pub drag_coefficient: f64,
    #[serde(default)]
    pub offset_mass_convention: OffsetMassConvention,
}

fn default_drag() -> f64 {
    DEFAULT_DRAG_COEFFICIENT
}

impl DamperParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.body.validate()?;
        check_positive("ring_radius", self.ring_radius)?;
        self.slug.validate()?;
        check_non_negative("drag_coefficient", self.drag_coefficient)
    }

    /// Same configuration with friction removed.
    pub fn dissipationless(&self) -> Self {
        Self {
            drag_coefficient: 0.0,
            ..*self
        }
    }

    /// Point-mass configuration used for the CubeSat-scale study: 2 kg body,
    /// 5 cm radius and length, 5 g slug on a 5 cm ring.
    pub fn paper_point_mass() -> Self {
        Self {
            body: CylinderBody {
                mass: 2.0,
                radius: 0.05,
                length: 0.05,
            },
            ring_radius: 0.05,
            slug: SlugModel::point_mass(0.005),
            drag_coefficient: DEFAULT_DRAG_COEFFICIENT,
            offset_mass_convention: OffsetMassConvention::Slug,
        }
    }

    /// Distributed configuration: 135° water arc in a 2.5 cm ring lifted
    /// 1.5 cm above the centre-of-mass plane, same body and friction.
    ///
    /// The tube radius is not published; 3.6 mm reproduces the reported
    /// ten-second settling of this configuration.
    pub fn paper_distributed() -> Self {
        Self {
            body: CylinderBody {
                mass: 2.0,
                radius: 0.05,
                length: 0.05,
            },
            ring_radius: 0.025,
            slug: SlugModel::distributed(DistributedSlug {
                density: 1000.0,
                cross_section_radius: 0.0036,
                fill_angle: 135f64.to_radians(),
                vertical_offset: 0.015,
            }),
            drag_coefficient: DEFAULT_DRAG_COEFFICIENT,
            offset_mass_convention: OffsetMassConvention::Slug,
        }
    }
}
