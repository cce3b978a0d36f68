//! Channel-matrix assembly from the total-field solve:
//! H_k = k0^2 dV sum_n B(r_n) chi_n A(r_n).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::{ArrayGeometry, FrequencyGrid};
use crate::constants::C0;
use crate::em::green::receive_matrix;
use crate::em::solve::{solve_total_fields_with, SolveMethod, SolverOptions, TotalFieldSolution};
use crate::error::{Error, Result};
use crate::scene::PlacedScene;

/// Target-induced channel response on one subcarrier.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    /// N_r x N_t complex entries.
    pub entries: DMatrix<Complex64>,
    /// Index into the full subcarrier grid.
    pub subcarrier_index: usize,
}

/// Assembles H = k0^2 dV sum_n B(r_n) chi_n A(r_n) from a solved total
/// field.
pub fn channel_matrix(
    solution: &TotalFieldSolution,
    scene: &PlacedScene,
    array: &ArrayGeometry,
    k0: f64,
) -> Result<ChannelMatrix> {
    if solution.fields.len() != scene.n_voxels() {
        return Err(Error::LengthMismatch(format!(
            "{} solved voxels vs {} scene voxels",
            solution.fields.len(),
            scene.n_voxels()
        )));
    }
    let chi = scene.contrasts(k0 * C0)?;
    let scale = Complex64::from(k0 * k0 * scene.voxel_volume());
    let mut h = DMatrix::<Complex64>::zeros(array.n_rx(), array.n_tx());
    for ((pos, a), chi_n) in scene.world_positions.iter().zip(&solution.fields).zip(&chi) {
        let b = receive_matrix(array, k0, pos)?;
        h += b * (a * *chi_n);
    }
    h *= scale;
    Ok(ChannelMatrix { entries: h, subcarrier_index: solution.subcarrier_index })
}

/// Solves the forward problem on every selected subcarrier and assembles the
/// per-tone channel matrices, in selected-index order.
pub fn simulate_sample(
    scene: &PlacedScene,
    array: &ArrayGeometry,
    grid: &FrequencyGrid,
    method: SolveMethod,
) -> Result<Vec<ChannelMatrix>> {
    simulate_sample_with(scene, array, grid, method, SolverOptions::default())
}

/// `simulate_sample` with explicit iterative-solver options.
pub fn simulate_sample_with(
    scene: &PlacedScene,
    array: &ArrayGeometry,
    grid: &FrequencyGrid,
    method: SolveMethod,
    options: SolverOptions,
) -> Result<Vec<ChannelMatrix>> {
    grid.selected_indices
        .par_iter()
        .map(|&idx| {
            let k0 = grid.wavenumbers[idx];
            let mut sol = solve_total_fields_with(scene, array, k0, method, options)?;
            sol.subcarrier_index = idx;
            if let Some(res) = sol.report.residual {
                log::debug!("subcarrier {idx}: {} residual {res:.3e}", sol.report.method);
            }
            channel_matrix(&sol, scene, array, k0)
        })
        .collect()
}
