//! Scene files (versioned JSON), bundled setups and run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::{wavenumber, C0};
use crate::error::{Error, Result};
use crate::geometry::{validity_metric, voxelize_with_cap, ShapeSpec, VoxelGrid, DEFAULT_VOXEL_CAP};
use crate::material::{Material, MaterialParams, MaterialTable};
use crate::source::SourceSpec;
use crate::tensor::{vnorm, vscale, vsub, Vec3, C64};

pub const SCHEMA_VERSION: u32 = 1;
pub const BUNDLED: [&str; 4] = [
    "insb_sphere",
    "insb_sphere_enz",
    "hybrid_cylinder_ed",
    "hybrid_cylinder_md",
];

const UM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MaterialSpec {
    Drude(MaterialParams),
    Constant { eps_re: f64, eps_im: f64 },
}

impl From<MaterialSpec> for Material {
    fn from(m: MaterialSpec) -> Self {
        match m {
            MaterialSpec::Drude(p) => Material::Drude(p),
            MaterialSpec::Constant { eps_re, eps_im } => Material::Constant(C64::new(eps_re, eps_im)),
        }
    }
}

/// Frequencies in units of the scene's plasma frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| self.omega_min + (self.omega_max - self.omega_min) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Point sources are moved along the line from the first shape's center
/// through their scene position, so that their surface gap takes each value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceSweep {
    pub gap_min: f64,
    pub gap_max: f64,
    pub points: usize,
    /// In units of the plasma frequency.
    pub omega: f64,
}

impl DistanceSweep {
    pub fn gaps(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let (a, b) = (self.gap_min.ln(), self.gap_max.ln());
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// Largest spacing with validity metric 0.5 at the top of the sweep,
    /// capped at a sixth of the smallest shape extent.
    Auto,
    Spacing(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Multipoles,
    DecayFrequency,
    DecayDistance,
    FarFieldPattern,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub schema: u32,
    pub name: String,
    pub materials: BTreeMap<String, MaterialSpec>,
    pub shapes: Vec<ShapeSpec>,
    #[serde(default)]
    pub b_z: f64,
    /// Also emit `b_z = 0` rows in scattering output.
    #[serde(default)]
    pub compare_unbiased: bool,
    pub sources: Vec<SourceSpec>,
    pub sweep: Sweep,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_sweep: Option<DistanceSweep>,
    pub grid: GridSpec,
    #[serde(default)]
    pub outputs: Vec<Output>,
    /// Normalization frequency (rad/s) for scenes without a Drude material.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_ref: Option<f64>,
}

fn line_col_error(e: serde_json::Error) -> Error {
    Error::config(format!("line {} column {}", e.line(), e.column()), e.to_string())
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Scene = serde_json::from_str(text).map_err(line_col_error)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config(
                "schema",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema),
            ));
        }
        if self.shapes.is_empty() {
            return Err(Error::config("shapes", "at least one shape is required"));
        }
        for (i, s) in self.shapes.iter().enumerate() {
            s.validate()
                .map_err(|e| Error::config(format!("shapes[{i}]"), e.to_string()))?;
            for m in s.material_names() {
                if !self.materials.contains_key(m) {
                    return Err(Error::config(format!("shapes[{i}]"), format!("unknown material '{m}'")));
                }
            }
        }
        for (i, s) in self.sources.iter().enumerate() {
            s.validate()
                .map_err(|e| Error::config(format!("sources[{i}]"), e.to_string()))?;
        }
        if self.sweep.points < 2 {
            return Err(Error::config("sweep.points", "need at least 2 points"));
        }
        if !(self.sweep.omega_min > 0.0 && self.sweep.omega_max >= self.sweep.omega_min) {
            return Err(Error::config("sweep", "frequencies must be positive and ordered"));
        }
        if let Some(d) = &self.distance_sweep {
            if !(d.gap_min > 0.0 && d.gap_max >= d.gap_min && d.points >= 2 && d.omega > 0.0) {
                return Err(Error::config(
                    "distance_sweep",
                    "gaps must be positive and ordered, points >= 2",
                ));
            }
        }
        if let GridSpec::Spacing(s) = self.grid {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("grid.spacing", "must be positive"));
            }
        }
        if !self.b_z.is_finite() {
            return Err(Error::config("b_z", "must be finite"));
        }
        self.omega_p()?;
        Ok(())
    }

    /// Plasma frequency of the Drude material(s); all must agree.
    pub fn omega_p(&self) -> Result<f64> {
        let mut found: Option<f64> = None;
        for m in self.materials.values() {
            if let MaterialSpec::Drude(p) = m {
                match found {
                    Some(w) if w != p.omega_p => {
                        return Err(Error::config(
                            "materials",
                            "Drude materials disagree on the plasma frequency",
                        ))
                    }
                    _ => found = Some(p.omega_p),
                }
            }
        }
        found.or(self.omega_ref.filter(|w| *w > 0.0)).ok_or_else(|| {
            Error::config(
                "materials",
                "a Drude material or omega_ref is needed to normalize frequencies",
            )
        })
    }

    pub fn material_table(&self) -> MaterialTable {
        self.materials
            .iter()
            .map(|(k, v)| (k.clone(), Material::from(*v)))
            .collect()
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn spacing(&self) -> Result<f64> {
        match self.grid {
            GridSpec::Spacing(s) => Ok(s),
            GridSpec::Auto => {
                let omega = self.sweep.omega_max * self.omega_p()?;
                let table = self.material_table();
                let n = table
                    .values()
                    .map(|m| {
                        m.tensor(omega, 0.0)
                            .map(|t| t.eigenvalues().into_iter().map(|l| l.norm()).fold(1.0, f64::max).sqrt())
                            .unwrap_or(1.0)
                    })
                    .fold(1.0, f64::max);
                let by_validity = 0.5 / (n * wavenumber(omega));
                let smallest = self
                    .shapes
                    .iter()
                    .flat_map(|s| s.half_extent())
                    .fold(f64::INFINITY, f64::min)
                    * 2.0;
                Ok(by_validity.min(smallest / 6.0))
            }
        }
    }

    pub fn voxelize(&self, spacing_override: Option<f64>) -> Result<VoxelGrid> {
        let spacing = match spacing_override {
            Some(s) => s,
            None => self.spacing()?,
        };
        voxelize_with_cap(&self.shapes, spacing, DEFAULT_VOXEL_CAP)
    }

    pub fn validity(&self, grid: &VoxelGrid) -> Result<f64> {
        let table = self.material_table();
        validity_metric(grid, |n| table.get(n).copied(), self.sweep.omega_max * self.omega_p()?)
    }

    pub fn plane_waves(&self) -> Vec<SourceSpec> {
        self.sources.iter().copied().filter(SourceSpec::is_plane_wave).collect()
    }

    pub fn point_sources(&self) -> Vec<SourceSpec> {
        self.sources.iter().copied().filter(|s| !s.is_plane_wave()).collect()
    }

    /// `source` moved so its surface gap to the first shape equals `gap`.
    pub fn source_at_gap(&self, source: &SourceSpec, gap: f64) -> Result<SourceSpec> {
        let shape = &self.shapes[0];
        let pos = source.position().ok_or(Error::NotPointSource)?;
        let dir = vsub(&pos, &shape.center);
        let len = vnorm(&dir);
        if len == 0.0 {
            return Err(Error::InvalidParameter("source sits at the shape center".into()));
        }
        let u = vscale(&dir, 1.0 / len);
        // signed distance grows monotonically along the ray; bisect on it
        let (mut lo, mut hi) = (
            0.0,
            len + gap + shape.half_extent().iter().fold(0.0, |a: f64, b| a.max(*b)) * 2.0,
        );
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let p = crate::tensor::vadd(&shape.center, &vscale(&u, mid));
            if shape.signed_distance(&p) < gap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p: Vec3 = crate::tensor::vadd(&shape.center, &vscale(&u, 0.5 * (lo + hi)));
        Ok(source.with_position(p))
    }

    /// Characteristic size used to normalize gaps: the first shape's
    /// largest half extent.
    pub fn size(&self) -> f64 {
        self.shapes[0].half_extent().iter().fold(0.0, |a: f64, b| a.max(*b))
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let insb = || MaterialSpec::Drude(MaterialParams::default());
        let si = MaterialSpec::Constant {
            eps_re: 10.6,
            eps_im: 0.0,
        };
        let sphere = |b_z: f64, sweep: Sweep| Scene {
            schema: SCHEMA_VERSION,
            name: name.to_string(),
            materials: BTreeMap::from([("insb".to_string(), insb())]),
            shapes: vec![ShapeSpec::sphere(30.0 * UM, "insb")],
            b_z,
            compare_unbiased: b_z != 0.0,
            sources: vec![
                SourceSpec::plane_wave([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
                SourceSpec::point_ed([0.0, 0.0, 33.0 * UM], [0.0, 0.0, 1.0]),
            ],
            sweep,
            distance_sweep: Some(DistanceSweep {
                gap_min: 1.0 * UM,
                gap_max: 900.0 * UM,
                points: 12,
                omega: 1.2,
            }),
            grid: GridSpec::Spacing(5.0 * UM),
            outputs: vec![Output::Multipoles, Output::DecayFrequency, Output::DecayDistance],
            omega_ref: None,
        };
        let hybrid = |source: SourceSpec| Scene {
            schema: SCHEMA_VERSION,
            name: name.to_string(),
            materials: BTreeMap::from([("insb".to_string(), insb()), ("si".to_string(), si)]),
            shapes: vec![ShapeSpec::hybrid_cylinder(35.0 * UM, 8.0 * UM, 80.0 * UM, "insb", "si")],
            b_z: 0.2,
            compare_unbiased: true,
            sources: vec![SourceSpec::plane_wave([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]), source],
            sweep: Sweep {
                omega_min: 1.0,
                omega_max: 1.3,
                points: 61,
            },
            distance_sweep: None,
            grid: GridSpec::Spacing(5.0 * UM),
            outputs: vec![Output::Multipoles, Output::DecayFrequency],
            omega_ref: None,
        };
        let side = [38.0 * UM, 0.0, 0.0];
        match name {
            "insb_sphere" => Ok(sphere(
                0.0,
                Sweep {
                    omega_min: 0.5,
                    omega_max: 1.8,
                    points: 131,
                },
            )),
            "insb_sphere_enz" => Ok(sphere(
                0.2,
                Sweep {
                    omega_min: 0.95,
                    omega_max: 1.15,
                    points: 41,
                },
            )),
            "hybrid_cylinder_ed" => Ok(hybrid(SourceSpec::point_ed(side, [1.0, 0.0, 0.0]))),
            "hybrid_cylinder_md" => Ok(hybrid(SourceSpec::point_md(side, [1.0, 0.0, 0.0]))),
            _ => Err(Error::config("scene", format!("no bundled scene named '{name}'"))),
        }
    }
}

/// Converts an angular frequency to THz.
pub fn thz(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI) * 1e-12
}

/// Free-space wavelength at `omega`.
pub fn wavelength(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * C0 / omega
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub scene_hash: String,
    pub engine_version: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<ManifestEntry>,
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str, scene: &Scene, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            scene_hash: scene.hash(),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            started_unix: unix_now(),
            finished_unix: 0,
            outputs: Vec::new(),
        }
    }

    /// Writes `contents` under `dir` and records its checksum.
    pub fn write(&mut self, dir: &Path, file: &str, contents: &[u8]) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(file);
        std::fs::write(&path, contents)?;
        self.outputs.push(ManifestEntry {
            path: file.to_string(),
            sha256: hex::encode(Sha256::digest(contents)),
        });
        Ok(path)
    }

    pub fn finish(&mut self, dir: &Path) -> Result<PathBuf> {
        self.finished_unix = unix_now();
        let path = dir.join("manifest.json");
        std::fs::create_dir_all(dir)?;
        std::fs::write(&path, serde_json::to_string_pretty(&self).expect("manifest serializes"))?;
        Ok(path)
    }

    /// Recomputes every listed checksum; returns the first mismatch.
    pub fn verify(&self, dir: &Path) -> Result<Option<String>> {
        for e in &self.outputs {
            let data = std::fs::read(dir.join(&e.path))?;
            if hex::encode(Sha256::digest(&data)) != e.sha256 {
                return Ok(Some(e.path.clone()));
            }
        }
        Ok(None)
    }
}
