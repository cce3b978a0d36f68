//! Voxelized dielectric targets, pose placement with material jitter, and
//! ground-truth labels in the sensing plane.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::EPSILON_0;
use crate::error::{Error, Result};
use crate::metrics::wrap_angle;

/// Isotropic lossy dielectric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Relative permittivity, at least 1.
    pub relative_permittivity: f64,
    /// Conductivity in S/m, nonnegative.
    pub conductivity: f64,
}

impl Material {
    pub fn new(relative_permittivity: f64, conductivity: f64) -> Result<Self> {
        if relative_permittivity < 1.0 || conductivity < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "material needs eps_r >= 1 and sigma >= 0, got ({relative_permittivity}, {conductivity})"
            )));
        }
        Ok(Self { relative_permittivity, conductivity })
    }

    /// Default vehicle-body stand-in.
    pub fn metal() -> Self {
        Self { relative_permittivity: 3.0, conductivity: 1e4 }
    }

    /// Default lossy-rubber stand-in.
    pub fn tire() -> Self {
        Self { relative_permittivity: 4.0, conductivity: 1.0 }
    }
}

/// Complex contrast chi = eps_r - 1 - j sigma / (omega eps0).
pub fn contrast(material: Material, angular_frequency: f64) -> Result<Complex64> {
    if angular_frequency <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "angular frequency must be positive, got {angular_frequency}"
        )));
    }
    Ok(Complex64::new(
        material.relative_permittivity - 1.0,
        -material.conductivity / (angular_frequency * EPSILON_0),
    ))
}

/// A voxelized target in its body frame. Offsets are centered: their mean is
/// the body-frame origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoxelTarget {
    pub class_id: usize,
    pub voxel_offsets: Vec<Vector3<f64>>,
    pub voxel_materials: Vec<Material>,
    pub voxel_pitch: f64,
    pub mesh_id: String,
}

impl VoxelTarget {
    pub fn n_voxels(&self) -> usize {
        self.voxel_offsets.len()
    }

    /// Voxel volume in m^3.
    pub fn voxel_volume(&self) -> f64 {
        self.voxel_pitch.powi(3)
    }
}

pub const CLASS_MOTORBIKE: usize = 0;
pub const CLASS_CAR: usize = 1;

/// Builds a deterministic procedural target.
///
/// Class 0 ("motorbike") is a solid elongated slab of metal voxels with two
/// tire voxels at the front and rear of the bottom layer. Class 1 ("car") is
/// a hollow box shell of metal voxels with four tire voxels near the bottom
/// corners. The voxel grid spans `round(dimension / pitch)` cells per axis.
pub fn make_procedural_target(
    class_id: usize,
    dimensions: Vector3<f64>,
    pitch: f64,
) -> Result<VoxelTarget> {
    if pitch <= 0.0 {
        return Err(Error::InvalidConfig(format!("voxel pitch must be positive, got {pitch}")));
    }
    if class_id > 1 {
        return Err(Error::InvalidConfig(format!("unknown class id {class_id}")));
    }
    for d in [dimensions.x, dimensions.y, dimensions.z] {
        if !(d >= pitch) {
            return Err(Error::InvalidConfig(format!(
                "every dimension must be at least the pitch ({pitch}), got {dimensions:?}"
            )));
        }
    }
    let cells = |d: f64| ((d / pitch).round() as usize).max(1);
    let (nx, ny, nz) = (cells(dimensions.x), cells(dimensions.y), cells(dimensions.z));

    let mut cells_sel: Vec<(usize, usize, usize)> = Vec::new();
    match class_id {
        CLASS_MOTORBIKE => {
            for i in 0..nx {
                for j in 0..ny {
                    for k in 0..nz {
                        cells_sel.push((i, j, k));
                    }
                }
            }
        }
        _ => {
            for i in 0..nx {
                for j in 0..ny {
                    for k in 0..nz {
                        let boundary = i == 0
                            || i == nx - 1
                            || j == 0
                            || j == ny - 1
                            || k == 0
                            || k == nz - 1;
                        if boundary {
                            cells_sel.push((i, j, k));
                        }
                    }
                }
            }
        }
    }

    let tire_cells: Vec<(usize, usize, usize)> = match class_id {
        CLASS_MOTORBIKE => {
            let j = (ny - 1) / 2;
            let mut t = vec![(0, j, 0)];
            if nx > 1 {
                t.push((nx - 1, j, 0));
            }
            t
        }
        _ => {
            let ix = [1.min(nx - 1), nx.saturating_sub(2)];
            let jy = [0, ny - 1];
            let mut t = Vec::new();
            for &i in &ix {
                for &j in &jy {
                    let c = (i, j, 0);
                    if !t.contains(&c) {
                        t.push(c);
                    }
                }
            }
            t
        }
    };

    let raw: Vec<Vector3<f64>> = cells_sel
        .iter()
        .map(|&(i, j, k)| {
            Vector3::new(
                (i as f64 - (nx as f64 - 1.0) / 2.0) * pitch,
                (j as f64 - (ny as f64 - 1.0) / 2.0) * pitch,
                (k as f64 - (nz as f64 - 1.0) / 2.0) * pitch,
            )
        })
        .collect();
    let mean: Vector3<f64> = raw.iter().sum::<Vector3<f64>>() / raw.len() as f64;
    let voxel_offsets: Vec<Vector3<f64>> = raw.iter().map(|p| p - mean).collect();
    let voxel_materials: Vec<Material> = cells_sel
        .iter()
        .map(|c| if tire_cells.contains(c) { Material::tire() } else { Material::metal() })
        .collect();
    let name = if class_id == CLASS_MOTORBIKE { "motorbike" } else { "car" };
    let mesh_id = format!(
        "{name}-{:.3}x{:.3}x{:.3}-p{:.4}",
        dimensions.x, dimensions.y, dimensions.z, pitch
    );
    Ok(VoxelTarget { class_id, voxel_offsets, voxel_materials, voxel_pitch: pitch, mesh_id })
}

/// Uniform multiplicative jitter on (eps_r - 1) and sigma: independent
/// factors in [1 - delta, 1 + delta] per voxel.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MaterialJitterSpec {
    pub delta: f64,
}

impl Default for MaterialJitterSpec {
    fn default() -> Self {
        Self { delta: 0.1 }
    }
}

/// A posed target with world-frame voxel positions and jittered materials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacedScene {
    pub target: VoxelTarget,
    /// Heading about the z-axis, wrapped to [-pi, pi).
    pub heading: f64,
    pub center: Vector3<f64>,
    pub material_jitter_seed: u64,
    pub world_positions: Vec<Vector3<f64>>,
    /// Per-voxel (eps_r - 1, sigma) multipliers actually applied.
    pub jitter_factors: Vec<[f64; 2]>,
    /// Materials after jitter; feed these to `contrast`.
    pub materials: Vec<Material>,
}

/// Rotation about z by `angle`.
pub fn rotation_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Poses a target: world position = R_z(heading) * offset + center, with
/// deterministic material jitter under `seed`.
pub fn place(
    target: &VoxelTarget,
    heading: f64,
    center: Vector3<f64>,
    jitter: MaterialJitterSpec,
    seed: u64,
) -> Result<PlacedScene> {
    if !heading.is_finite() {
        return Err(Error::Numeric(format!("heading must be finite, got {heading}")));
    }
    if !(0.0..=1.0).contains(&jitter.delta) {
        return Err(Error::InvalidConfig(format!(
            "jitter delta must lie in [0, 1], got {}",
            jitter.delta
        )));
    }
    let rot = rotation_z(heading);
    let world_positions: Vec<Vector3<f64>> =
        target.voxel_offsets.iter().map(|o| rot * o + center).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter_factors = Vec::with_capacity(target.n_voxels());
    let mut materials = Vec::with_capacity(target.n_voxels());
    for base in &target.voxel_materials {
        let f = if jitter.delta == 0.0 {
            [1.0, 1.0]
        } else {
            let lo = 1.0 - jitter.delta;
            let hi = 1.0 + jitter.delta;
            [rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)]
        };
        jitter_factors.push(f);
        materials.push(Material {
            relative_permittivity: 1.0 + (base.relative_permittivity - 1.0) * f[0],
            conductivity: base.conductivity * f[1],
        });
    }
    Ok(PlacedScene {
        target: target.clone(),
        heading: wrap_angle(heading),
        center,
        material_jitter_seed: seed,
        world_positions,
        jitter_factors,
        materials,
    })
}

impl PlacedScene {
    pub fn n_voxels(&self) -> usize {
        self.world_positions.len()
    }

    pub fn voxel_volume(&self) -> f64 {
        self.target.voxel_volume()
    }

    /// Per-voxel contrasts at the given angular frequency.
    pub fn contrasts(&self, angular_frequency: f64) -> Result<Vec<Complex64>> {
        self.materials.iter().map(|m| contrast(*m, angular_frequency)).collect()
    }
}

/// Class label and planar localization labels for a placed scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub class_id: usize,
    /// Planar range in meters.
    pub range: f64,
    /// Azimuth atan2(y, x) in radians.
    pub azimuth: f64,
    /// Geometric center projected to the z = 0 sensing plane.
    pub center_projected: [f64; 2],
}

/// Labels from the geometric center of the world voxel positions, projected
/// to the z = 0 plane.
pub fn ground_truth(scene: &PlacedScene) -> Result<GroundTruth> {
    if scene.world_positions.is_empty() {
        return Err(Error::Numeric("scene has no voxels".into()));
    }
    let c: Vector3<f64> =
        scene.world_positions.iter().sum::<Vector3<f64>>() / scene.n_voxels() as f64;
    Ok(GroundTruth {
        class_id: scene.target.class_id,
        range: c.x.hypot(c.y),
        azimuth: c.y.atan2(c.x),
        center_projected: [c.x, c.y],
    })
}
