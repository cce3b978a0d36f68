//! Discretized volume-integral-equation solve for the total field inside a
//! voxelized scatterer.
//!
//! The unknown per voxel n is the total-field transfer matrix A(r_n), and
//! the system reads
//!
//! A(r_n) - k0^2 [ dV sum_{n' != n} G(r_n, r_n') chi_n' A(r_n')
//!                 + m_self chi_n A(r_n) ] = A_inc(r_n)
//!
//! with m_self the weak-form self-integral of G over the equal-volume
//! sphere. Its static limit makes the diagonal block tend to I (1 + chi/3),
//! which reproduces the Clausius-Mossotti polarizability for a single small
//! voxel.

use nalgebra::{DMatrix, DVector, Matrix3xX, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::ArrayGeometry;
use crate::constants::C0;
use crate::em::green::{dyadic_green, incident_matrix};
use crate::error::{Error, Result};
use crate::scene::PlacedScene;

/// Solver selection. `Auto` picks the dense factorization up to 3000
/// unknowns (1000 voxels) and the matrix-free iterative solver above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Auto,
    DenseDirect,
    Iterative,
    Born,
}

impl SolveMethod {
    fn resolve(self, n_voxels: usize) -> SolveMethod {
        match self {
            SolveMethod::Auto => {
                if 3 * n_voxels <= 3000 {
                    SolveMethod::DenseDirect
                } else {
                    SolveMethod::Iterative
                }
            }
            other => other,
        }
    }
}

/// Iterative-solver controls.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 500 }
    }
}

/// What the solver actually did.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub method: &'static str,
    /// Worst relative residual across right-hand sides (iterative only).
    pub residual: Option<f64>,
    /// Worst iteration count across right-hand sides (iterative only).
    pub iterations: Option<usize>,
}

/// Per-voxel total-field transfer matrices for one subcarrier.
#[derive(Debug, Clone)]
pub struct TotalFieldSolution {
    /// One 3 x N_t matrix per voxel, in scene voxel order.
    pub fields: Vec<Matrix3xX<Complex64>>,
    pub subcarrier_index: usize,
    pub report: SolverReport,
}

/// Radius of the sphere with the voxel's volume.
pub fn effective_radius(voxel_volume: f64) -> f64 {
    (3.0 * voxel_volume / (4.0 * std::f64::consts::PI)).cbrt()
}

/// Weak-form self-integral of the dyadic Green's function over the
/// equal-volume sphere (isotropic, returned as the scalar multiplying I):
///
/// m_self = (2/(3 k^2)) [ (1 + j k a) e^{-j k a} - 1 ] - 1/(3 k^2)
pub fn self_term(k0: f64, voxel_volume: f64) -> Complex64 {
    let a = effective_radius(voxel_volume);
    let ka = k0 * a;
    let k2 = k0 * k0;
    let osc = (Complex64::new(1.0, ka)) * Complex64::new(0.0, -ka).exp() - 1.0;
    osc * (2.0 / (3.0 * k2)) - 1.0 / (3.0 * k2)
}

/// Solves the VIE with default iterative options.
pub fn solve_total_fields(
    scene: &PlacedScene,
    array: &ArrayGeometry,
    k0: f64,
    method: SolveMethod,
) -> Result<TotalFieldSolution> {
    solve_total_fields_with(scene, array, k0, method, SolverOptions::default())
}

/// Solves the VIE with explicit iterative options.
pub fn solve_total_fields_with(
    scene: &PlacedScene,
    array: &ArrayGeometry,
    k0: f64,
    method: SolveMethod,
    options: SolverOptions,
) -> Result<TotalFieldSolution> {
    let n = scene.n_voxels();
    if n == 0 {
        return Err(Error::Numeric("scene has no voxels".into()));
    }
    if !(k0 > 0.0) {
        return Err(Error::InvalidConfig(format!("k0 must be positive, got {k0}")));
    }
    let wavelength = 2.0 * std::f64::consts::PI / k0;
    if scene.target.voxel_pitch > wavelength / 4.0 {
        log::warn!(
            "voxel pitch {:.3} m exceeds lambda/4 = {:.3} m; point collocation is coarse",
            scene.target.voxel_pitch,
            wavelength / 4.0
        );
    }
    let chi = scene.contrasts(k0 * C0)?;
    let n_tx = array.n_tx();
    let incident: Vec<Matrix3xX<Complex64>> = scene
        .world_positions
        .iter()
        .map(|p| incident_matrix(array, k0, p))
        .collect::<Result<_>>()?;

    match method.resolve(n) {
        SolveMethod::Born => Ok(TotalFieldSolution {
            fields: incident,
            subcarrier_index: 0,
            report: SolverReport { method: "born", residual: None, iterations: None },
        }),
        SolveMethod::DenseDirect => {
            let dv = scene.voxel_volume();
            let ms = self_term(k0, dv);
            let k2 = Complex64::from(k0 * k0);
            let mut m = DMatrix::<Complex64>::zeros(3 * n, 3 * n);
            for a in 0..n {
                let diag = Complex64::from(1.0) - k2 * ms * chi[a];
                for i in 0..3 {
                    m[(3 * a + i, 3 * a + i)] = diag;
                }
                for b in (a + 1)..n {
                    let g = dyadic_green(k0, &scene.world_positions[a], &scene.world_positions[b])?;
                    let sab = -k2 * Complex64::from(dv) * chi[b];
                    let sba = -k2 * Complex64::from(dv) * chi[a];
                    for i in 0..3 {
                        for j in 0..3 {
                            m[(3 * a + i, 3 * b + j)] = g[(i, j)] * sab;
                            m[(3 * b + i, 3 * a + j)] = g[(j, i)] * sba;
                        }
                    }
                }
            }
            let mut rhs = DMatrix::<Complex64>::zeros(3 * n, n_tx);
            for (a, inc) in incident.iter().enumerate() {
                for t in 0..n_tx {
                    for i in 0..3 {
                        rhs[(3 * a + i, t)] = inc[(i, t)];
                    }
                }
            }
            let lu = m.lu();
            let solution = lu.solve(&rhs).ok_or_else(|| {
                let u = lu.u();
                let mags: Vec<f64> = (0..3 * n).map(|i| u[(i, i)].norm()).collect();
                let max = mags.iter().cloned().fold(0.0f64, f64::max);
                let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
                Error::SingularSystem { condition_estimate: if min > 0.0 { max / min } else { f64::INFINITY } }
            })?;
            let fields = (0..n)
                .map(|a| {
                    let mut f = Matrix3xX::zeros(n_tx);
                    for t in 0..n_tx {
                        for i in 0..3 {
                            f[(i, t)] = solution[(3 * a + i, t)];
                        }
                    }
                    f
                })
                .collect();
            Ok(TotalFieldSolution {
                fields,
                subcarrier_index: 0,
                report: SolverReport { method: "dense_direct", residual: None, iterations: None },
            })
        }
        SolveMethod::Iterative => {
            let dv = scene.voxel_volume();
            let ms = self_term(k0, dv);
            let positions = &scene.world_positions;
            let columns: Vec<(DVector<Complex64>, f64, usize)> = (0..n_tx)
                .into_par_iter()
                .map(|t| {
                    let mut b = DVector::<Complex64>::zeros(3 * n);
                    for a in 0..n {
                        for i in 0..3 {
                            b[3 * a + i] = incident[a][(i, t)];
                        }
                    }
                    bicgstab(positions, &chi, k0, dv, ms, &b, options)
                })
                .collect::<Result<_>>()?;
            let mut residual: f64 = 0.0;
            let mut iterations = 0usize;
            let mut fields = vec![Matrix3xX::<Complex64>::zeros(n_tx); n];
            for (t, (x, res, iters)) in columns.iter().enumerate() {
                residual = residual.max(*res);
                iterations = iterations.max(*iters);
                for a in 0..n {
                    for i in 0..3 {
                        fields[a][(i, t)] = x[3 * a + i];
                    }
                }
            }
            Ok(TotalFieldSolution {
                fields,
                subcarrier_index: 0,
                report: SolverReport {
                    method: "iterative",
                    residual: Some(residual),
                    iterations: Some(iterations),
                },
            })
        }
        SolveMethod::Auto => unreachable!("resolved above"),
    }
}

/// One matrix-vector product of the discretized VIE operator.
fn apply_operator(
    positions: &[Vector3<f64>],
    chi: &[Complex64],
    k0: f64,
    dv: f64,
    m_self: Complex64,
    x: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    let n = positions.len();
    let k2 = Complex64::from(k0 * k0);
    let mut y = DVector::<Complex64>::zeros(3 * n);
    for a in 0..n {
        let self_scale = k2 * m_self * chi[a];
        let mut acc = [Complex64::new(0.0, 0.0); 3];
        for b in 0..n {
            if b == a {
                continue;
            }
            let g = dyadic_green(k0, &positions[a], &positions[b])?;
            let xb = [chi[b] * x[3 * b], chi[b] * x[3 * b + 1], chi[b] * x[3 * b + 2]];
            for i in 0..3 {
                acc[i] += g[(i, 0)] * xb[0] + g[(i, 1)] * xb[1] + g[(i, 2)] * xb[2];
            }
        }
        for i in 0..3 {
            y[3 * a + i] =
                x[3 * a + i] - self_scale * x[3 * a + i] - k2 * Complex64::from(dv) * acc[i];
        }
    }
    Ok(y)
}

/// Stabilized bi-conjugate gradient solve of the matrix-free system.
/// Returns (solution, relative residual, iterations).
fn bicgstab(
    positions: &[Vector3<f64>],
    chi: &[Complex64],
    k0: f64,
    dv: f64,
    m_self: Complex64,
    b: &DVector<Complex64>,
    options: SolverOptions,
) -> Result<(DVector<Complex64>, f64, usize)> {
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok((DVector::zeros(b.len()), 0.0, 0));
    }
    let mut x = b.clone();
    let ax = apply_operator(positions, chi, k0, dv, m_self, &x)?;
    let mut r = b - ax;
    let r_hat = r.clone();
    let mut rho = Complex64::new(1.0, 0.0);
    let mut alpha = Complex64::new(1.0, 0.0);
    let mut omega = Complex64::new(1.0, 0.0);
    let mut v = DVector::<Complex64>::zeros(b.len());
    let mut p = DVector::<Complex64>::zeros(b.len());
    let mut res = r.norm() / b_norm;
    for it in 1..=options.max_iterations {
        if res <= options.tolerance {
            return Ok((x, res, it - 1));
        }
        let rho_new = r_hat.dotc(&r);
        if rho_new.norm() == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p = &r + (p - &v * omega) * beta;
        v = apply_operator(positions, chi, k0, dv, m_self, &p)?;
        alpha = rho / r_hat.dotc(&v);
        let s = &r - &v * alpha;
        if s.norm() / b_norm <= options.tolerance {
            x += &p * alpha;
            return Ok((x, s.norm() / b_norm, it));
        }
        let t = apply_operator(positions, chi, k0, dv, m_self, &s)?;
        let t_dot_t = t.dotc(&t);
        if t_dot_t.norm() == 0.0 {
            break;
        }
        omega = t.dotc(&s) / t_dot_t;
        x += &p * alpha + &s * omega;
        r = s - &t * omega;
        res = r.norm() / b_norm;
    }
    if res <= options.tolerance {
        return Ok((x, res, options.max_iterations));
    }
    Err(Error::NoConvergence {
        iterations: options.max_iterations,
        residual: res,
        tolerance: options.tolerance,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::array::build_cross_array;
    use crate::scene::{make_procedural_target, place, Material, MaterialJitterSpec, VoxelTarget};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const K0_49GHZ: f64 = 102.69640607563241;

    pub(crate) fn free_space_scene() -> PlacedScene {
        let mut t =
            make_procedural_target(crate::scene::CLASS_CAR, Vector3::new(0.9, 0.6, 0.6), 0.3)
                .unwrap();
        t.voxel_materials =
            vec![Material { relative_permittivity: 1.0, conductivity: 0.0 }; t.n_voxels()];
        place(&t, 0.4, Vector3::new(6.0, 1.0, 0.1), MaterialJitterSpec::default(), 5).unwrap()
    }

    pub(crate) fn random_scene(
        n: usize,
        seed: u64,
        center: Vector3<f64>,
    ) -> PlacedScene {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut offsets: Vec<Vector3<f64>> = Vec::new();
        while offsets.len() < n {
            let c = Vector3::new(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            );
            if offsets.iter().all(|o| (o - c).norm() > 0.12) {
                offsets.push(c);
            }
        }
        let mean: Vector3<f64> = offsets.iter().sum::<Vector3<f64>>() / n as f64;
        let offsets: Vec<Vector3<f64>> = offsets.iter().map(|o| o - mean).collect();
        let materials: Vec<Material> = (0..n)
            .map(|_| Material {
                relative_permittivity: rng.gen_range(1.05..1.3),
                conductivity: rng.gen_range(0.0..0.05),
            })
            .collect();
        let target = VoxelTarget {
            class_id: 0,
            voxel_offsets: offsets,
            voxel_materials: materials,
            voxel_pitch: 0.05,
            mesh_id: format!("random-{n}-{seed}"),
        };
        place(&target, 0.0, center, MaterialJitterSpec { delta: 0.0 }, seed).unwrap()
    }

    #[test]
    fn self_term_static_limit() {
        // diagonal block 1 - k0^2 m_self chi tends to 1 + chi/3
        let dv = 1.0;
        let a = effective_radius(dv);
        let chi = Complex64::new(1.0, -0.2);
        for ka in [1e-2, 1e-3] {
            let k0 = ka / a;
            let diag = Complex64::from(1.0) - Complex64::from(k0 * k0) * self_term(k0, dv) * chi;
            let want = Complex64::from(1.0) + chi / 3.0;
            assert!((diag - want).norm() < 2.0 * ka * ka, "ka={ka}: {diag} vs {want}");
        }
    }

    #[test]
    fn clausius_mossotti_polarizability_limit() {
        let dv = 0.004f64.powi(3);
        let chi = Complex64::from(1.0);
        let k0 = 1e-3 / effective_radius(dv);
        let alpha_solver = chi * dv / (Complex64::from(1.0) - Complex64::from(k0 * k0) * self_term(k0, dv) * chi);
        let alpha_cm = chi * 3.0 * dv / (chi + 3.0);
        assert!((alpha_solver - alpha_cm).norm() / alpha_cm.norm() < 1e-4);
    }

    #[test]
    fn zero_contrast_recovers_incident() {
        let scene = free_space_scene();
        let array = build_cross_array(4, 4, 4.9e9, 0.5).unwrap();
        for method in [SolveMethod::DenseDirect, SolveMethod::Iterative, SolveMethod::Born] {
            let sol = solve_total_fields(&scene, &array, K0_49GHZ, method).unwrap();
            for (pos, f) in scene.world_positions.iter().zip(&sol.fields) {
                let inc = incident_matrix(&array, K0_49GHZ, pos).unwrap();
                let diff = (f - &inc).norm();
                assert!(diff <= 1e-10 * inc.norm(), "method {:?}: {diff}", method);
            }
        }
    }

    #[test]
    fn dense_and_iterative_agree() {
        let scene = random_scene(50, 21, Vector3::new(6.0, 1.0, 0.0));
        let array = build_cross_array(4, 4, 4.9e9, 0.5).unwrap();
        let dense =
            solve_total_fields(&scene, &array, K0_49GHZ, SolveMethod::DenseDirect).unwrap();
        let iter = solve_total_fields_with(
            &scene,
            &array,
            K0_49GHZ,
            SolveMethod::Iterative,
            SolverOptions { tolerance: 1e-12, max_iterations: 500 },
        )
        .unwrap();
        let mut scale: f64 = 0.0;
        for f in &dense.fields {
            scale = scale.max(f.iter().map(|c| c.norm()).fold(0.0, f64::max));
        }
        for (fd, fi) in dense.fields.iter().zip(&iter.fields) {
            for (a, b) in fd.iter().zip(fi.iter()) {
                assert!((a - b).norm() <= 1e-8 * scale);
            }
        }
        assert_eq!(iter.report.method, "iterative");
        assert!(iter.report.residual.unwrap() <= 1e-12);
    }

    #[test]
    fn auto_resolves_by_size() {
        assert_eq!(SolveMethod::Auto.resolve(1000), SolveMethod::DenseDirect);
        assert_eq!(SolveMethod::Auto.resolve(1001), SolveMethod::Iterative);
        assert_eq!(SolveMethod::Born.resolve(5000), SolveMethod::Born);
    }

    #[test]
    fn born_returns_incident() {
        let scene = random_scene(10, 3, Vector3::new(5.0, 0.0, 0.0));
        let array = build_cross_array(2, 2, 4.9e9, 0.5).unwrap();
        let sol = solve_total_fields(&scene, &array, K0_49GHZ, SolveMethod::Born).unwrap();
        for (pos, f) in scene.world_positions.iter().zip(&sol.fields) {
            let inc = incident_matrix(&array, K0_49GHZ, pos).unwrap();
            assert_eq!(f, &inc);
        }
    }

    #[test]
    fn effective_radius_matches_volume() {
        let dv = 0.3f64.powi(3);
        let a = effective_radius(dv);
        assert_relative_eq!(4.0 / 3.0 * std::f64::consts::PI * a.powi(3), dv, max_relative = 1e-12);
    }
}
