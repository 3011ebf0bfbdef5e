//! Cubic-lattice voxelization of spheres, cylinders and stacked hybrid
//! cylinders, plus the gap-offset surfaces that emitters are placed on.
//!
//! The lattice is registered at the first shape's center. A lattice point
//! belongs to a shape when the point itself is inside the closed analytic
//! shape; there is no partial-volume weighting.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::wavenumber;
use crate::error::{Error, Result};
use crate::material::Material;
use crate::tensor::{vadd, vnorm, vsub, Vec3};

pub const DEFAULT_VOXEL_CAP: usize = 200_000;

/// Relative slack on inside tests so exact boundary points count as inside.
const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeKind {
    Sphere {
        radius: f64,
    },
    /// Axis along `z`, `center` at mid-height.
    Cylinder {
        radius: f64,
        height: f64,
    },
    /// Two coaxial cylinders stacked along `z`; `center` at mid-height of
    /// the whole stack.
    HybridCylinder {
        radius: f64,
        h_lower: f64,
        h_upper: f64,
        lower_material: String,
        upper_material: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    #[serde(flatten)]
    pub kind: ShapeKind,
    #[serde(default)]
    pub center: Vec3,
    /// Material of homogeneous shapes. Ignored by hybrid cylinders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<String>,
}

impl ShapeSpec {
    pub fn sphere(radius: f64, material: &str) -> Self {
        Self {
            kind: ShapeKind::Sphere { radius },
            center: [0.0; 3],
            material: Some(material.to_string()),
        }
    }

    pub fn cylinder(radius: f64, height: f64, material: &str) -> Self {
        Self {
            kind: ShapeKind::Cylinder { radius, height },
            center: [0.0; 3],
            material: Some(material.to_string()),
        }
    }

    pub fn hybrid_cylinder(radius: f64, h_lower: f64, h_upper: f64, lower: &str, upper: &str) -> Self {
        Self {
            kind: ShapeKind::HybridCylinder {
                radius,
                h_lower,
                h_upper,
                lower_material: lower.to_string(),
                upper_material: upper.to_string(),
            },
            center: [0.0; 3],
            material: None,
        }
    }

    pub fn with_center(mut self, center: Vec3) -> Self {
        self.center = center;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive")))
            }
        };
        match &self.kind {
            ShapeKind::Sphere { radius } => positive(*radius, "radius")?,
            ShapeKind::Cylinder { radius, height } => {
                positive(*radius, "radius")?;
                positive(*height, "height")?;
            }
            ShapeKind::HybridCylinder {
                radius,
                h_lower,
                h_upper,
                ..
            } => {
                positive(*radius, "radius")?;
                positive(*h_lower, "h_lower")?;
                positive(*h_upper, "h_upper")?;
            }
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter("center must be finite".into()));
        }
        if !matches!(self.kind, ShapeKind::HybridCylinder { .. }) && self.material.is_none() {
            return Err(Error::InvalidParameter("homogeneous shape needs a material".into()));
        }
        Ok(())
    }

    /// Names of every material this shape references.
    pub fn material_names(&self) -> Vec<&str> {
        match &self.kind {
            ShapeKind::HybridCylinder {
                lower_material,
                upper_material,
                ..
            } => vec![lower_material.as_str(), upper_material.as_str()],
            _ => self.material.iter().map(|s| s.as_str()).collect(),
        }
    }

    /// Half extents of the axis-aligned bounding box.
    pub fn half_extent(&self) -> Vec3 {
        match &self.kind {
            ShapeKind::Sphere { radius } => [*radius; 3],
            ShapeKind::Cylinder { radius, height } => [*radius, *radius, 0.5 * height],
            ShapeKind::HybridCylinder {
                radius,
                h_lower,
                h_upper,
                ..
            } => [*radius, *radius, 0.5 * (h_lower + h_upper)],
        }
    }

    pub fn volume(&self) -> f64 {
        match &self.kind {
            ShapeKind::Sphere { radius } => 4.0 / 3.0 * PI * radius.powi(3),
            ShapeKind::Cylinder { radius, height } => PI * radius * radius * height,
            ShapeKind::HybridCylinder {
                radius,
                h_lower,
                h_upper,
                ..
            } => PI * radius * radius * (h_lower + h_upper),
        }
    }

    /// Material label of `p` if it lies inside the closed shape.
    pub fn material_at(&self, p: &Vec3) -> Option<&str> {
        let r = vsub(p, &self.center);
        let scale = self.half_extent().iter().cloned().fold(0.0, f64::max);
        let slack = BOUNDARY_SLACK * scale;
        let rho = (r[0] * r[0] + r[1] * r[1]).sqrt();
        match &self.kind {
            ShapeKind::Sphere { radius } => {
                (vnorm(&r) <= radius + slack).then(|| self.material.as_deref().unwrap_or(""))
            }
            ShapeKind::Cylinder { radius, height } => (rho <= radius + slack && r[2].abs() <= 0.5 * height + slack)
                .then(|| self.material.as_deref().unwrap_or("")),
            ShapeKind::HybridCylinder {
                radius,
                h_lower,
                h_upper,
                lower_material,
                upper_material,
            } => {
                let half = 0.5 * (h_lower + h_upper);
                if rho > radius + slack || r[2].abs() > half + slack {
                    return None;
                }
                let interface = -half + h_lower;
                if r[2] <= interface + slack {
                    Some(lower_material.as_str())
                } else {
                    Some(upper_material.as_str())
                }
            }
        }
    }

    /// Axial position of the material interface of a hybrid cylinder,
    /// relative to the shape center.
    pub fn interface_z(&self) -> Option<f64> {
        match &self.kind {
            ShapeKind::HybridCylinder { h_lower, h_upper, .. } => Some(-0.5 * (h_lower + h_upper) + h_lower),
            _ => None,
        }
    }

    /// The surface offset outward by `gap`.
    pub fn offset_surface(&self, gap: f64) -> OffsetSurface {
        match &self.kind {
            ShapeKind::Sphere { radius } => OffsetSurface::Sphere {
                center: self.center,
                radius: *radius,
                gap,
            },
            ShapeKind::Cylinder { radius, height } => OffsetSurface::Cylinder {
                center: self.center,
                radius: *radius,
                height: *height,
                gap,
            },
            ShapeKind::HybridCylinder {
                radius,
                h_lower,
                h_upper,
                ..
            } => OffsetSurface::Cylinder {
                center: self.center,
                radius: *radius,
                height: h_lower + h_upper,
                gap,
            },
        }
    }

    /// Distance from `p` to the shape surface, negative inside.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        let r = vsub(p, &self.center);
        match &self.kind {
            ShapeKind::Sphere { radius } => vnorm(&r) - radius,
            _ => {
                let h = self.half_extent();
                let rho = (r[0] * r[0] + r[1] * r[1]).sqrt();
                let dr = rho - h[0];
                let dz = r[2].abs() - h[2];
                if dr <= 0.0 && dz <= 0.0 {
                    dr.max(dz)
                } else {
                    (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt()
                }
            }
        }
    }
}

/// Outward-offset surface used to place emitters at a fixed surface gap.
///
/// Parameterized by a meridian coordinate `u in [0, 1]` (south pole or
/// bottom-cap center to north pole or top-cap center, by arc length) and an
/// azimuth `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetSurface {
    Sphere {
        center: Vec3,
        radius: f64,
        gap: f64,
    },
    Cylinder {
        center: Vec3,
        radius: f64,
        height: f64,
        gap: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub position: Vec3,
    /// Outward unit normal.
    pub normal: Vec3,
}

impl OffsetSurface {
    pub fn meridian_length(&self) -> f64 {
        match *self {
            OffsetSurface::Sphere { radius, gap, .. } => PI * (radius + gap),
            OffsetSurface::Cylinder {
                radius, height, gap, ..
            } => 2.0 * radius + PI * gap + height,
        }
    }

    /// Largest chord across the surface.
    pub fn diameter(&self) -> f64 {
        match *self {
            OffsetSurface::Sphere { radius, gap, .. } => 2.0 * (radius + gap),
            OffsetSurface::Cylinder {
                radius, height, gap, ..
            } => ((2.0 * radius).powi(2) + height.powi(2)).sqrt() + 2.0 * gap,
        }
    }

    pub fn point(&self, u: f64, phi: f64) -> SurfacePoint {
        let u = u.clamp(0.0, 1.0);
        let (c, s) = (phi.cos(), phi.sin());
        match *self {
            OffsetSurface::Sphere { center, radius, gap } => {
                let theta = PI * (1.0 - u);
                let n = [theta.sin() * c, theta.sin() * s, theta.cos()];
                let rr = radius + gap;
                SurfacePoint {
                    position: vadd(&center, &[rr * n[0], rr * n[1], rr * n[2]]),
                    normal: n,
                }
            }
            OffsetSurface::Cylinder {
                center,
                radius,
                height,
                gap,
            } => {
                let half = 0.5 * height;
                let arc = 0.5 * PI * gap;
                let mut t = u * self.meridian_length();
                // (rho, z, n_rho, n_z) along the meridian
                let (rho, z, nr, nz) = if t <= radius {
                    (t, -half - gap, 0.0, -1.0)
                } else if {
                    t -= radius;
                    t <= arc
                } {
                    let a = -0.5 * PI + t / gap.max(f64::MIN_POSITIVE);
                    (radius + gap * a.cos(), -half + gap * a.sin(), a.cos(), a.sin())
                } else if {
                    t -= arc;
                    t <= height
                } {
                    (radius + gap, -half + t, 1.0, 0.0)
                } else if {
                    t -= height;
                    t <= arc
                } {
                    let a = t / gap.max(f64::MIN_POSITIVE);
                    (radius + gap * a.cos(), half + gap * a.sin(), a.cos(), a.sin())
                } else {
                    t -= arc;
                    ((radius - t).max(0.0), half + gap, 0.0, 1.0)
                };
                SurfacePoint {
                    position: vadd(&center, &[rho * c, rho * s, z]),
                    normal: [nr * c, nr * s, nz],
                }
            }
        }
    }

    /// Surface coordinates `(u, phi)` of the surface point nearest to `p`
    /// (exact for points on the surface).
    pub fn locate(&self, p: &Vec3) -> (f64, f64) {
        match *self {
            OffsetSurface::Sphere { center, .. } => {
                let d = vsub(p, &center);
                let r = vnorm(&d);
                let theta = if r > 0.0 {
                    (d[2] / r).clamp(-1.0, 1.0).acos()
                } else {
                    0.0
                };
                (1.0 - theta / PI, d[1].atan2(d[0]))
            }
            OffsetSurface::Cylinder {
                center,
                radius,
                height,
                gap,
            } => {
                let d = vsub(p, &center);
                let rho = d[0].hypot(d[1]);
                let half = 0.5 * height;
                let arc = 0.5 * PI * gap;
                let t = if d[2] < -half {
                    if rho <= radius {
                        rho
                    } else {
                        let a = (d[2] + half).atan2(rho - radius);
                        radius + gap * (a + 0.5 * PI)
                    }
                } else if d[2] <= half {
                    radius + arc + (d[2] + half)
                } else if rho > radius {
                    let a = (d[2] - half).atan2(rho - radius);
                    radius + arc + height + gap * a
                } else {
                    self.meridian_length() - rho
                };
                (t / self.meridian_length(), d[1].atan2(d[0]))
            }
        }
    }

    /// Whether meridian coordinate `u` falls on the straight side wall.
    pub fn on_side_wall(&self, u: f64) -> bool {
        match *self {
            OffsetSurface::Cylinder {
                radius, height, gap, ..
            } => {
                let t = u * self.meridian_length() - radius - 0.5 * PI * gap;
                (-1e-12 * height..=height * (1.0 + 1e-12)).contains(&t)
            }
            OffsetSurface::Sphere { .. } => false,
        }
    }

    /// Meridian coordinate of the point on the side wall at axial offset
    /// `z` from the center (cylinders only).
    pub fn side_wall_u(&self, z: f64) -> Option<f64> {
        match *self {
            OffsetSurface::Cylinder {
                radius, height, gap, ..
            } => {
                if z.abs() > 0.5 * height {
                    return None;
                }
                let t = radius + 0.5 * PI * gap + (z + 0.5 * height);
                Some(t / self.meridian_length())
            }
            OffsetSurface::Sphere { .. } => None,
        }
    }
}

/// Discrete lattice representation of one or more shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub spacing: f64,
    /// Physical position of lattice index (0, 0, 0).
    pub origin: Vec3,
    pub indices: Vec<[i32; 3]>,
    pub centers: Vec<Vec3>,
    /// Per-voxel index into `material_names`.
    pub material_of: Vec<usize>,
    pub material_names: Vec<String>,
    /// Expansion origin for multipoles (first shape center).
    pub reference: Vec3,
}

impl VoxelGrid {
    pub fn empty(spacing: f64) -> Self {
        Self {
            spacing,
            origin: [0.0; 3],
            indices: Vec::new(),
            centers: Vec::new(),
            material_of: Vec::new(),
            material_names: Vec::new(),
            reference: [0.0; 3],
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn volume_per_voxel(&self) -> f64 {
        self.spacing * self.spacing * self.spacing
    }

    pub fn material_name(&self, voxel: usize) -> &str {
        &self.material_names[self.material_of[voxel]]
    }

    pub fn count_material(&self, name: &str) -> usize {
        match self.material_names.iter().position(|n| n == name) {
            Some(id) => self.material_of.iter().filter(|&&m| m == id).count(),
            None => 0,
        }
    }

    /// Smallest distance from `p` to any voxel cube (0 inside a cube).
    pub fn distance_to_cells(&self, p: &Vec3) -> f64 {
        let h = 0.5 * self.spacing;
        self.centers
            .iter()
            .map(|c| {
                let d: Vec3 = [
                    ((p[0] - c[0]).abs() - h).max(0.0),
                    ((p[1] - c[1]).abs() - h).max(0.0),
                    ((p[2] - c[2]).abs() - h).max(0.0),
                ];
                vnorm(&d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `x_m,y_m,z_m,material` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_m,y_m,z_m,material\n");
        for (i, c) in self.centers.iter().enumerate() {
            out.push_str(&format!(
                "{:.9e},{:.9e},{:.9e},{}\n",
                c[0],
                c[1],
                c[2],
                self.material_name(i)
            ));
        }
        out
    }
}

pub fn voxelize(shape: &ShapeSpec, spacing: f64) -> Result<VoxelGrid> {
    voxelize_with_cap(std::slice::from_ref(shape), spacing, DEFAULT_VOXEL_CAP)
}

/// Voxelize a set of shapes on one lattice registered at the first shape's
/// center. Where shapes overlap the earlier shape wins.
pub fn voxelize_with_cap(shapes: &[ShapeSpec], spacing: f64, cap: usize) -> Result<VoxelGrid> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidParameter("spacing must be positive".into()));
    }
    let first = shapes.first().ok_or(Error::EmptyGrid)?;
    for s in shapes {
        s.validate()?;
    }
    let origin = first.center;
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for s in shapes {
        let h = s.half_extent();
        for a in 0..3 {
            let rel = s.center[a] - origin[a];
            lo[a] = lo[a].min(((rel - h[a]) / spacing).floor() as i64 - 1);
            hi[a] = hi[a].max(((rel + h[a]) / spacing).ceil() as i64 + 1);
        }
    }

    let mut grid = VoxelGrid {
        spacing,
        origin,
        reference: origin,
        ..VoxelGrid::empty(spacing)
    };
    let mut ids: HashMap<String, usize> = HashMap::new();
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in lo[2]..=hi[2] {
                let p = [
                    origin[0] + i as f64 * spacing,
                    origin[1] + j as f64 * spacing,
                    origin[2] + k as f64 * spacing,
                ];
                let Some(name) = shapes.iter().find_map(|s| s.material_at(&p)) else {
                    continue;
                };
                if grid.centers.len() >= cap {
                    return Err(Error::TooLarge {
                        count: grid.centers.len() + 1,
                        cap,
                    });
                }
                let next = ids.len();
                let id = *ids.entry(name.to_string()).or_insert_with(|| {
                    grid.material_names.push(name.to_string());
                    next
                });
                grid.indices.push([i as i32, j as i32, k as i32]);
                grid.centers.push(p);
                grid.material_of.push(id);
            }
        }
    }
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(grid)
}

/// Largest `|m| k d` over the voxels, with `m` the square root of the
/// largest-magnitude permittivity eigenvalue.
pub fn validity_metric<F>(grid: &VoxelGrid, material_of: F, omega: f64) -> Result<f64>
where
    F: Fn(&str) -> Option<Material>,
{
    let k = wavenumber(omega);
    let mut worst: f64 = 0.0;
    let mut seen = vec![false; grid.material_names.len()];
    for &m in &grid.material_of {
        if std::mem::replace(&mut seen[m], true) {
            continue;
        }
        let name = &grid.material_names[m];
        let mat = material_of(name).ok_or_else(|| Error::UnknownMaterial(name.clone()))?;
        let t = mat.tensor(omega, 0.0)?;
        let lmax = t.eigenvalues().into_iter().map(|l| l.norm()).fold(0.0, f64::max);
        worst = worst.max(lmax.sqrt());
    }
    if grid.is_empty() {
        worst = 1.0;
    }
    Ok(worst * k * grid.spacing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::C0;
    use crate::tensor::vscale;

    const UM: f64 = 1e-6;

    #[test]
    fn sphere_counts() {
        let g = voxelize(&ShapeSpec::sphere(30.0 * UM, "insb"), 20.0 * UM).unwrap();
        assert_eq!(g.len(), 19);
        let g = voxelize(&ShapeSpec::sphere(5.0 * UM, "insb"), 20.0 * UM).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.centers[0], [0.0; 3]);
    }

    #[test]
    fn sphere_volume_converges() {
        let r = 30.0 * UM;
        let d = r / 12.0;
        let g = voxelize(&ShapeSpec::sphere(r, "a"), d).unwrap();
        let ratio = g.len() as f64 / (4.0 / 3.0 * PI * r.powi(3) / d.powi(3));
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn empty_and_too_large() {
        let s = ShapeSpec::sphere(1.0 * UM, "a").with_center([0.5 * UM, 0.0, 0.0]);
        // the lattice sits on the center, so the center itself is always inside
        assert_eq!(voxelize(&s, 10.0 * UM).unwrap().len(), 1);
        let err = voxelize_with_cap(&[ShapeSpec::sphere(30.0 * UM, "a")], 1.0 * UM, 1000);
        assert!(matches!(err, Err(Error::TooLarge { .. })));
        assert!(matches!(voxelize_with_cap(&[], 1.0, 10), Err(Error::EmptyGrid)));
    }

    #[test]
    fn refinement_ratio() {
        let s = ShapeSpec::cylinder(35.0 * UM, 88.0 * UM, "si");
        let a = voxelize(&s, 6.0 * UM).unwrap().len() as f64;
        let b = voxelize(&s, 3.0 * UM).unwrap().len() as f64;
        assert!(a >= 1000.0);
        assert!((7.0..=9.0).contains(&(b / a)), "{}", b / a);
    }

    #[test]
    fn mirror_symmetry() {
        let g = voxelize(&ShapeSpec::sphere(23.0 * UM, "a"), 4.0 * UM).unwrap();
        let set: std::collections::HashSet<[i32; 3]> = g.indices.iter().cloned().collect();
        for idx in &g.indices {
            assert!(set.contains(&[-idx[0], idx[1], idx[2]]));
            assert!(set.contains(&[idx[0], -idx[1], idx[2]]));
            assert!(set.contains(&[idx[0], idx[1], -idx[2]]));
        }
    }

    #[test]
    fn hybrid_partition() {
        let s = ShapeSpec::hybrid_cylinder(35.0 * UM, 8.0 * UM, 80.0 * UM, "insb", "si");
        let d = 3.0 * UM;
        let g = voxelize(&s, d).unwrap();
        let (nl, nu) = (g.count_material("insb"), g.count_material("si"));
        assert_eq!(nl + nu, g.len());
        let iface = s.interface_z().unwrap();
        let top_lower = g
            .centers
            .iter()
            .zip(&g.material_of)
            .filter(|(_, &m)| g.material_names[m] == "insb")
            .map(|(c, _)| c[2])
            .fold(f64::MIN, f64::max);
        assert!(top_lower <= iface + 1e-12 && iface - top_lower <= d);
    }

    #[test]
    fn validity_values() {
        let g = voxelize(&ShapeSpec::sphere(10.0 * UM, "si"), 3.0 * UM).unwrap();
        let omega = 2.0 * PI * 2e12;
        let si = |_: &str| Some(Material::silicon());
        let v = validity_metric(&g, si, omega).unwrap();
        let expect = 10.6_f64.sqrt() * omega / C0 * 3.0 * UM;
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 0.409).abs() < 2e-3, "{v}");
        let vac = |_: &str| Some(Material::Constant(crate::tensor::CONE));
        let v = validity_metric(&g, vac, omega).unwrap();
        assert!((v - omega / C0 * 3.0 * UM).abs() < 1e-15);
        let g2 = voxelize(&ShapeSpec::sphere(10.0 * UM, "si"), 1.5 * UM).unwrap();
        let v2 = validity_metric(&g2, vac, omega).unwrap();
        assert!((v2 - 0.5 * v).abs() < 1e-15);
    }

    #[test]
    fn offset_surface_gap_is_constant() {
        let s = ShapeSpec::hybrid_cylinder(35.0 * UM, 8.0 * UM, 80.0 * UM, "insb", "si");
        let gap = 3.0 * UM;
        let surf = s.offset_surface(gap);
        for iu in 0..=40 {
            for ip in 0..8 {
                let p = surf.point(iu as f64 / 40.0, ip as f64 * 0.7);
                assert!((s.signed_distance(&p.position) - gap).abs() < 1e-12);
                assert!((vnorm(&p.normal) - 1.0).abs() < 1e-12);
            }
        }
        let sp = ShapeSpec::sphere(30.0 * UM, "a").offset_surface(gap);
        let p = sp.point(0.5, 0.0);
        assert!((vnorm(&vsub(&p.position, &vscale(&p.normal, 33.0 * UM)))).abs() < 1e-18);
        for iu in 0..=40 {
            let (u, phi) = (iu as f64 / 40.0, 0.3);
            let (u2, phi2) = surf.locate(&surf.point(u, phi).position);
            assert!((u2 - u).abs() < 1e-9, "{u} -> {u2}");
            assert!(iu == 0 || iu == 40 || (phi2 - phi).abs() < 1e-9);
            let (u3, _) = sp.locate(&sp.point(u, phi).position);
            assert!((u3 - u).abs() < 1e-9);
        }
        let u = surf.side_wall_u(10.0 * UM).unwrap();
        let p = surf.point(u, 0.0);
        assert!((p.position[2] - 10.0 * UM).abs() < 1e-12 && (p.position[0] - 38.0 * UM).abs() < 1e-12);
        assert!(surf.on_side_wall(u) && !surf.on_side_wall(0.02) && !surf.on_side_wall(0.98));
        assert!(!sp.on_side_wall(0.5));
    }
}
