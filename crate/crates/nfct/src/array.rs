//! Cross-shaped near-field MIMO array geometry and the OFDM subcarrier grid.
//!
//! The transmit ULA lies along the y-axis and the receive ULA along the
//! z-axis, both centered at the origin. Each transmit element is an ideal
//! electric dipole with a configurable moment; each receive element projects
//! the incident field onto a unit-norm polarization vector.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::C0;
use crate::error::{Error, Result};

/// Transmit/receive element layout, dipole moments, and polarizations.
#[derive(Debug, Clone)]
pub struct ArrayGeometry {
    pub tx_positions: Vec<Vector3<f64>>,
    pub rx_positions: Vec<Vector3<f64>>,
    pub tx_dipole_moments: Vec<Vector3<Complex64>>,
    pub rx_polarizations: Vec<Vector3<Complex64>>,
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
    /// Consecutive element spacing in meters.
    pub element_spacing: f64,
}

impl ArrayGeometry {
    /// Builds an array from explicit element data.
    ///
    /// This is the escape hatch for non-cross layouts (e.g. the co-located
    /// reciprocity configuration where the receive array duplicates the
    /// transmit array). Every receive polarization must have unit Euclidean
    /// norm within 1e-12.
    pub fn custom(
        tx_positions: Vec<Vector3<f64>>,
        rx_positions: Vec<Vector3<f64>>,
        tx_dipole_moments: Vec<Vector3<Complex64>>,
        rx_polarizations: Vec<Vector3<Complex64>>,
        carrier_frequency: f64,
        element_spacing: f64,
    ) -> Result<Self> {
        if tx_positions.is_empty() || rx_positions.is_empty() {
            return Err(Error::InvalidConfig("array needs at least one tx and one rx element".into()));
        }
        if carrier_frequency <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "carrier frequency must be positive, got {carrier_frequency}"
            )));
        }
        if tx_dipole_moments.len() != tx_positions.len() {
            return Err(Error::LengthMismatch(format!(
                "{} tx positions vs {} dipole moments",
                tx_positions.len(),
                tx_dipole_moments.len()
            )));
        }
        if rx_polarizations.len() != rx_positions.len() {
            return Err(Error::LengthMismatch(format!(
                "{} rx positions vs {} polarizations",
                rx_positions.len(),
                rx_polarizations.len()
            )));
        }
        for (r, q) in rx_polarizations.iter().enumerate() {
            let norm = q.map(|c| c.norm_sqr()).sum().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "rx polarization {r} has norm {norm}, expected unit norm"
                )));
            }
        }
        Ok(Self {
            tx_positions,
            rx_positions,
            tx_dipole_moments,
            rx_polarizations,
            carrier_frequency,
            element_spacing,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx_positions.len()
    }

    /// Carrier wavelength in meters.
    pub fn carrier_wavelength(&self) -> f64 {
        C0 / self.carrier_frequency
    }

    /// Aperture length of an N-element ULA with this spacing: (N-1)*d.
    pub fn tx_aperture(&self) -> f64 {
        (self.n_tx() as f64 - 1.0) * self.element_spacing
    }
}

/// Builds the cross-shaped array: tx ULA along y, rx ULA along z, both
/// centered at the origin with spacing `spacing_fraction * lambda_c`.
///
/// Element `m` of an N-element ULA sits at coordinate `(m - (N-1)/2) * d`
/// along its axis. Dipole moments and receive polarizations default to the
/// x-axis, orthogonal to both array axes.
pub fn build_cross_array(
    n_tx: usize,
    n_rx: usize,
    carrier: f64,
    spacing_fraction: f64,
) -> Result<ArrayGeometry> {
    if n_tx == 0 || n_rx == 0 {
        return Err(Error::InvalidConfig(format!(
            "element counts must be positive, got n_tx={n_tx}, n_rx={n_rx}"
        )));
    }
    if carrier <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "carrier frequency must be positive, got {carrier}"
        )));
    }
    if spacing_fraction <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "spacing fraction must be positive, got {spacing_fraction}"
        )));
    }
    let d = spacing_fraction * C0 / carrier;
    let centered = |m: usize, n: usize| (m as f64 - (n as f64 - 1.0) / 2.0) * d;
    let tx_positions: Vec<_> = (0..n_tx)
        .map(|m| Vector3::new(0.0, centered(m, n_tx), 0.0))
        .collect();
    let rx_positions: Vec<_> = (0..n_rx)
        .map(|m| Vector3::new(0.0, 0.0, centered(m, n_rx)))
        .collect();
    let x_hat = Vector3::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    ArrayGeometry::custom(
        tx_positions,
        rx_positions,
        vec![x_hat; n_tx],
        vec![x_hat; n_rx],
        carrier,
        d,
    )
}

/// Free-space wavenumber 2*pi*f/c0 in rad/m.
pub fn wavenumber(frequency: f64) -> Result<f64> {
    if frequency <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "frequency must be positive, got {frequency}"
        )));
    }
    Ok(2.0 * std::f64::consts::PI * frequency / C0)
}

/// OFDM subcarrier frequencies with a deterministic sensing-tone selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub subcarrier_frequencies: Vec<f64>,
    pub wavenumbers: Vec<f64>,
    pub selected_indices: Vec<usize>,
}

impl FrequencyGrid {
    pub fn k_total(&self) -> usize {
        self.subcarrier_frequencies.len()
    }

    pub fn k_selected(&self) -> usize {
        self.selected_indices.len()
    }

    /// Frequencies of the selected sensing tones, in index order.
    pub fn selected_frequencies(&self) -> Vec<f64> {
        self.selected_indices
            .iter()
            .map(|&i| self.subcarrier_frequencies[i])
            .collect()
    }

    /// Wavenumbers of the selected sensing tones, in index order.
    pub fn selected_wavenumbers(&self) -> Vec<f64> {
        self.selected_indices
            .iter()
            .map(|&i| self.wavenumbers[i])
            .collect()
    }
}

/// Evenly spaced sensing-tone indices over `[0, k_total)`.
///
/// For `k_selected >= 2` both endpoints are included and intermediate
/// indices round to the nearest integer with ties toward the lower index.
/// A single tone takes the index `k_total / 2`.
fn select_indices(k_total: usize, k_selected: usize) -> Vec<usize> {
    if k_selected == 1 {
        return vec![k_total / 2];
    }
    let span = (k_total - 1) as f64;
    let steps = (k_selected - 1) as f64;
    (0..k_selected)
        .map(|j| {
            let x = j as f64 * span / steps;
            // round half down
            (x - 0.5).ceil() as usize
        })
        .collect()
}

/// Builds `k_total` subcarriers centered on `carrier` with uniform `spacing`
/// and selects `k_selected` sensing tones.
pub fn build_frequency_grid(
    carrier: f64,
    spacing: f64,
    k_total: usize,
    k_selected: usize,
) -> Result<FrequencyGrid> {
    if carrier <= 0.0 || spacing <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "carrier and spacing must be positive, got carrier={carrier}, spacing={spacing}"
        )));
    }
    if k_total == 0 {
        return Err(Error::InvalidConfig("k_total must be at least 1".into()));
    }
    if k_selected == 0 || k_selected > k_total {
        return Err(Error::InvalidConfig(format!(
            "k_selected must satisfy 1 <= k_selected <= k_total, got {k_selected} of {k_total}"
        )));
    }
    let center = (k_total as f64 - 1.0) / 2.0;
    let subcarrier_frequencies: Vec<f64> = (0..k_total)
        .map(|i| carrier + (i as f64 - center) * spacing)
        .collect();
    if subcarrier_frequencies[0] <= 0.0 {
        return Err(Error::InvalidConfig(
            "subcarrier grid extends to nonpositive frequencies".into(),
        ));
    }
    let wavenumbers = subcarrier_frequencies
        .iter()
        .map(|&f| wavenumber(f))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyGrid {
        subcarrier_frequencies,
        wavenumbers,
        selected_indices: select_indices(k_total, k_selected),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_element_array_is_symmetric() {
        let a = build_cross_array(2, 2, 4.9e9, 0.5).unwrap();
        let d = 0.5 * C0 / 4.9e9;
        assert_relative_eq!(a.tx_positions[0].y, -d / 2.0, max_relative = 1e-15);
        assert_relative_eq!(a.tx_positions[1].y, d / 2.0, max_relative = 1e-15);
        assert_eq!(a.tx_positions[0].x, 0.0);
        assert_eq!(a.tx_positions[0].z, 0.0);
    }

    #[test]
    fn paper_scale_aperture() {
        // 64 elements at lambda/2 for 4.9 GHz: 63 * lambda_c / 2 = 1.92723723 m
        let a = build_cross_array(64, 64, 4.9e9, 0.5).unwrap();
        assert_relative_eq!(a.tx_aperture(), 1.92723723, epsilon = 1e-8);
    }

    #[test]
    fn empty_array_rejected() {
        assert!(build_cross_array(0, 4, 4.9e9, 0.5).is_err());
        assert!(build_cross_array(4, 4, -1.0, 0.5).is_err());
        assert!(build_cross_array(4, 4, 4.9e9, 0.0).is_err());
    }

    #[test]
    fn centroid_at_origin() {
        for n in [1usize, 2, 7, 64] {
            let a = build_cross_array(n, n, 4.9e9, 0.5).unwrap();
            let c: Vector3<f64> = a.tx_positions.iter().sum::<Vector3<f64>>() / n as f64;
            assert!(c.norm() <= 1e-12 * a.tx_aperture().max(1.0));
            let c: Vector3<f64> = a.rx_positions.iter().sum::<Vector3<f64>>() / n as f64;
            assert!(c.norm() <= 1e-12 * a.tx_aperture().max(1.0));
        }
    }

    #[test]
    fn aperture_scales_with_count() {
        let a = build_cross_array(8, 8, 4.9e9, 0.5).unwrap();
        let b = build_cross_array(16, 16, 4.9e9, 0.5).unwrap();
        assert_relative_eq!(a.tx_aperture(), 7.0 * a.element_spacing, max_relative = 1e-15);
        assert_relative_eq!(b.tx_aperture(), 15.0 * b.element_spacing, max_relative = 1e-15);
    }

    #[test]
    fn wavenumber_examples() {
        // definitional inverse: f = c0 / (2 pi) gives k0 = 1
        let f = C0 / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(wavenumber(f).unwrap(), 1.0, max_relative = 1e-15);
        // frozen value for 4.9 GHz
        assert_relative_eq!(wavenumber(4.9e9).unwrap(), 102.69640607563241, max_relative = 1e-12);
        assert!(wavenumber(0.0).is_err());
        assert!(wavenumber(-1.0).is_err());
    }

    #[test]
    fn grid_wavenumbers_match_definition() {
        let g = build_frequency_grid(4.9e9, 1e6, 16, 16).unwrap();
        for (f, k) in g.subcarrier_frequencies.iter().zip(&g.wavenumbers) {
            assert_relative_eq!(*k, 2.0 * std::f64::consts::PI * f / C0, max_relative = 1e-9);
        }
    }

    #[test]
    fn full_selection_is_identity() {
        let g = build_frequency_grid(4.9e9, 1e6, 16, 16).unwrap();
        assert_eq!(g.selected_indices, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn selection_even_spacing() {
        // verified by enumeration: j * 15 / 3 for j in 0..4
        let g = build_frequency_grid(4.9e9, 1e6, 16, 4).unwrap();
        assert_eq!(g.selected_indices, vec![0, 5, 10, 15]);
        // independent enumeration oracle over all (K, Ks >= 2) pairs up to 24
        for k in 2..=24usize {
            for ks in 2..=k {
                let got = select_indices(k, ks);
                let want: Vec<usize> = (0..ks)
                    .map(|j| {
                        let x = j as f64 * (k - 1) as f64 / (ks - 1) as f64;
                        let lo = x.floor();
                        if x - lo > 0.5 {
                            (lo as usize) + 1
                        } else {
                            lo as usize
                        }
                    })
                    .collect();
                assert_eq!(got, want, "K={k} Ks={ks}");
                assert!(got.windows(2).all(|w| w[0] < w[1]), "strictly increasing");
                assert_eq!(got[0], 0);
                assert_eq!(*got.last().unwrap(), k - 1);
            }
        }
    }

    #[test]
    fn single_tone_takes_center() {
        let g = build_frequency_grid(4.9e9, 1e6, 16, 1).unwrap();
        assert_eq!(g.selected_indices, vec![8]);
        let g = build_frequency_grid(4.9e9, 1e6, 15, 1).unwrap();
        assert_eq!(g.selected_indices, vec![7]);
    }

    #[test]
    fn selection_is_idempotent() {
        for ks in 1..=16usize {
            let g = build_frequency_grid(4.9e9, 1e6, 16, ks).unwrap();
            let again = select_indices(ks, ks);
            assert_eq!(again, (0..ks).collect::<Vec<_>>());
            let _ = g;
        }
    }

    #[test]
    fn oversized_selection_rejected() {
        assert!(build_frequency_grid(4.9e9, 1e6, 16, 17).is_err());
        assert!(build_frequency_grid(4.9e9, 1e6, 16, 0).is_err());
    }
}
