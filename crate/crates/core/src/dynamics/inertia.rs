use std::f64::consts::PI;

use serde::Serialize;

use super::params::{check_non_negative, check_positive};
use super::{
    CylinderBody, DamperParams, DistributedSlug, DynamicsError, Mat3, OffsetMassConvention,
    SlugModel,
};

/// Sign applied to the arc's x–z product of inertia in the (1,3)/(3,1) slots.
pub const PRODUCT_OF_INERTIA_SIGN: f64 = 1.0;

/// Distance from the ring centre to the system centre of mass, along e₁.
pub fn center_of_mass_offset(
    slug_mass: f64,
    ring_mass: f64,
    radius: f64,
) -> Result<f64, DynamicsError> {
    check_non_negative("slug mass", slug_mass)?;
    check_positive("ring mass", ring_mass)?;
    check_positive("ring radius", radius)?;
    Ok(slug_mass * radius / (slug_mass + ring_mass))
}

fn check_offset(d: f64, radius: f64) -> Result<(), DynamicsError> {
    check_non_negative("center-of-mass offset", d)?;
    if d >= radius {
        return Err(DynamicsError::Domain {
            name: "center-of-mass offset",
            value: d,
            reason: "must be smaller than the radius",
        });
    }
    Ok(())
}

/// Cylinder (plus ring) inertia about the system centre of mass.
pub fn ring_inertia(body: &CylinderBody, d: f64) -> Result<Mat3, DynamicsError> {
    body.validate()?;
    check_offset(d, body.radius)?;
    let m = body.mass;
    let transverse = m * body.radius * body.radius / 4.0 + m * body.length * body.length / 12.0;
    let axial = m * body.radius * body.radius / 2.0;
    let shift = m * d * d;
    Ok(Mat3::from_diagonal(
        &[transverse, transverse + shift, axial + shift].into(),
    ))
}

/// Point slug sitting on e₁ at distance `R - d` from the centre of mass.
pub fn point_slug_inertia(slug_mass: f64, radius: f64, d: f64) -> Result<Mat3, DynamicsError> {
    check_positive("slug mass", slug_mass)?;
    check_positive("ring radius", radius)?;
    check_offset(d, radius)?;
    let arm = radius - d;
    let i = slug_mass * arm * arm;
    Ok(Mat3::from_diagonal(&[0.0, i, i].into()))
}

/// Thin torus-arc slug of half-angle `φ/2` about e₁, including the
/// vertical-offset terms (`m_s h_i²` on the x and y diagonals and the
/// x–z product of inertia).
pub fn distributed_slug_inertia(
    slug: &DistributedSlug,
    radius: f64,
    d: f64,
) -> Result<Mat3, DynamicsError> {
    slug.validate()?;
    check_positive("ring radius", radius)?;
    check_offset(d, radius)?;

    let phi = slug.fill_angle;
    let r = radius;
    // linear density times R
    let k = slug.density * PI * slug.cross_section_radius * slug.cross_section_radius * r;
    let (sin_phi, sin_half) = (phi.sin(), (phi / 2.0).sin());

    let ixx = k * r * r * (phi - sin_phi) / 2.0;
    let iyy = k * ((d * d + r * r / 2.0) * phi - 4.0 * r * d * sin_half + r * r / 2.0 * sin_phi);
    let izz = k * ((d * d + r * r) * phi - 4.0 * r * d * sin_half);

    let mass = slug.mass(radius);
    let hi = slug.vertical_offset;
    let lift = mass * hi * hi;
    let ixz = PRODUCT_OF_INERTIA_SIGN * mass * hi * r * sin_half / (phi / 2.0);

    Ok(Mat3::new(
        ixx + lift,
        0.0,
        ixz, //
        0.0,
        iyy + lift,
        0.0, //
        ixz,
        0.0,
        izz,
    ))
}

pub fn slug_mass(slug: &SlugModel, ring_radius: f64) -> f64 {
    match slug {
        SlugModel::PointMass { mass, .. } => *mass,
        SlugModel::Distributed { .. } => slug.as_distributed().unwrap().mass(ring_radius),
    }
}

/// Ring and slug inertia tensors about the system centre of mass, with the
/// inverse of their sum cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InertiaSet {
    /// Centre-of-mass offset, m.
    pub offset: f64,
    pub ring: Mat3,
    pub slug: Mat3,
    #[serde(skip)]
    combined_inverse: Mat3,
}

impl InertiaSet {
    pub fn new(offset: f64, ring: Mat3, slug: Mat3) -> Result<Self, DynamicsError> {
        for (name, m) in [("ring inertia", &ring), ("slug inertia", &slug)] {
            if m.iter().any(|x| !x.is_finite()) || (m - m.transpose()).amax() > 0.0 {
                return Err(DynamicsError::Domain {
                    name,
                    value: f64::NAN,
                    reason: "tensor must be finite and symmetric",
                });
            }
            if (0..3).any(|i| m[(i, i)] < 0.0) {
                return Err(DynamicsError::Domain {
                    name,
                    value: m.diagonal().min(),
                    reason: "diagonal entries must be >= 0",
                });
            }
        }
        let combined_inverse = (ring + slug)
            .try_inverse()
            .ok_or(DynamicsError::SingularInertia)?;
        if combined_inverse.iter().any(|x| !x.is_finite()) {
            return Err(DynamicsError::SingularInertia);
        }
        Ok(Self {
            offset,
            ring,
            slug,
            combined_inverse,
        })
    }

    pub fn combined(&self) -> Mat3 {
        self.ring + self.slug
    }

    /// `(I_r + I_s)⁻¹`
    pub fn combined_inverse(&self) -> &Mat3 {
        &self.combined_inverse
    }

    /// The x–z product of inertia of the slug.
    pub fn product_xz(&self) -> f64 {
        self.slug[(0, 2)]
    }
}

pub fn assemble_inertia(params: &DamperParams) -> Result<InertiaSet, DynamicsError> {
    params.validate()?;
    let radius = params.ring_radius;
    let m_s = slug_mass(&params.slug, radius);
    let d = center_of_mass_offset(m_s, params.body.mass, radius)?;
    let ring = ring_inertia(&params.body, d)?;

    let hi = params.slug.vertical_offset();
    let offset_mass = match params.offset_mass_convention {
        OffsetMassConvention::Slug => m_s,
        OffsetMassConvention::BodyMass => params.body.mass,
    };
    let mut slug = match params.slug {
        SlugModel::PointMass { mass, .. } => {
            let mut i = point_slug_inertia(mass, radius, d)?;
            i[(0, 0)] += offset_mass * hi * hi;
            i[(1, 1)] += offset_mass * hi * hi;
            i
        }
        SlugModel::Distributed { .. } => {
            let arc = params.slug.as_distributed().unwrap();
            distributed_slug_inertia(&arc, radius, d)?
        }
    };
    if !params.slug.is_point_mass()
        && params.offset_mass_convention == OffsetMassConvention::BodyMass
    {
        // the arc tensor already carries m_s h_i²
        let extra = (offset_mass - m_s) * hi * hi;
        slug[(0, 0)] += extra;
        slug[(1, 1)] += extra;
    }
    InertiaSet::new(d, ring, slug)
}
