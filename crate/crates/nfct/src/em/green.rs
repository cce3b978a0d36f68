//! Scalar and dyadic free-space Green's functions, ideal dipole fields, and
//! the incident/receive transfer matrices.
//!
//! The time convention is e^{-j k0 R} throughout: outgoing waves carry a
//! negative phase slope in distance.

use nalgebra::{Matrix3, Matrix3xX, MatrixXx3, Vector3};
use num_complex::Complex64;

use crate::array::ArrayGeometry;
use crate::constants::EPSILON_0;
use crate::error::{Error, Result};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Scalar Green's function e^{-j k0 R} / (4 pi R).
pub fn scalar_green(k0: f64, distance: f64) -> Result<Complex64> {
    if !(distance > 0.0) {
        return Err(Error::Singular(format!(
            "scalar Green's function needs a positive distance, got {distance}"
        )));
    }
    Ok(Complex64::new(0.0, -k0 * distance).exp() / (FOUR_PI * distance))
}

/// Dyadic Green's function, closed form of (I + grad grad^T / k0^2) g(R):
///
/// G = g(R) [ (1 - j/(kR) - 1/(kR)^2) I + (-1 + 3j/(kR) + 3/(kR)^2) RR^T ]
pub fn dyadic_green(
    k0: f64,
    observation: &Vector3<f64>,
    source: &Vector3<f64>,
) -> Result<Matrix3<Complex64>> {
    if !(k0 > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "dyadic Green's function needs k0 > 0, got {k0}"
        )));
    }
    let d = observation - source;
    let r = d.norm();
    if !(r > 0.0) {
        return Err(Error::Singular(
            "dyadic Green's function at coincident points".into(),
        ));
    }
    let g = scalar_green(k0, r)?;
    let kr = k0 * r;
    let kr2 = kr * kr;
    let c_iso = Complex64::new(1.0 - 1.0 / kr2, -1.0 / kr);
    let c_rad = Complex64::new(-1.0 + 3.0 / kr2, 3.0 / kr);
    let rhat = d / r;
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut v = c_rad * (rhat[i] * rhat[j]);
            if i == j {
                v += c_iso;
            }
            out[(i, j)] = g * v;
        }
    }
    Ok(out)
}

/// Field of an ideal electric dipole with moment `moment` at `source`:
///
/// E = e^{-j k0 R} / (4 pi eps0) [ k0^2/R (I - RR^T)
///                                 + (1/R^3 + j k0/R^2)(3 RR^T - I) ] p
///
/// Valid for k0 >= 0; k0 = 0 gives the static dipole field.
pub fn dipole_field(
    k0: f64,
    observation: &Vector3<f64>,
    source: &Vector3<f64>,
    moment: &Vector3<Complex64>,
) -> Result<Vector3<Complex64>> {
    if k0 < 0.0 {
        return Err(Error::InvalidConfig(format!("k0 must be nonnegative, got {k0}")));
    }
    let d = observation - source;
    let r = d.norm();
    if !(r > 0.0) {
        return Err(Error::Singular("dipole field at coincident points".into()));
    }
    let rhat = d / r;
    let p_radial: Complex64 =
        rhat.iter().zip(moment.iter()).map(|(a, b)| b * *a).sum();
    let radial = Vector3::new(
        Complex64::from(rhat.x) * p_radial,
        Complex64::from(rhat.y) * p_radial,
        Complex64::from(rhat.z) * p_radial,
    );
    let transverse = moment - radial;
    let near = Complex64::new(1.0 / (r * r * r), k0 / (r * r));
    let far = Complex64::from(k0 * k0 / r);
    let field = transverse * far + (radial * Complex64::from(3.0) - moment) * near;
    let prefactor = Complex64::new(0.0, -k0 * r).exp() / (FOUR_PI * EPSILON_0);
    Ok(field * prefactor)
}

/// Incident-field transfer matrix at `position`: column t is the field of
/// transmit dipole t. Shape 3 x N_t.
pub fn incident_matrix(
    array: &ArrayGeometry,
    k0: f64,
    position: &Vector3<f64>,
) -> Result<Matrix3xX<Complex64>> {
    let mut out = Matrix3xX::zeros(array.n_tx());
    for (t, (pos, moment)) in
        array.tx_positions.iter().zip(&array.tx_dipole_moments).enumerate()
    {
        let col = dipole_field(k0, position, pos, moment)?;
        out.set_column(t, &col);
    }
    Ok(out)
}

/// Receive transfer matrix at `position`: row r is q_r^H G(r_r, position).
/// Shape N_r x 3.
pub fn receive_matrix(
    array: &ArrayGeometry,
    k0: f64,
    position: &Vector3<f64>,
) -> Result<MatrixXx3<Complex64>> {
    let mut out = MatrixXx3::zeros(array.n_rx());
    for (r, (pos, q)) in array.rx_positions.iter().zip(&array.rx_polarizations).enumerate() {
        let g = dyadic_green(k0, pos, position)?;
        for j in 0..3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..3 {
                acc += q[i].conj() * g[(i, j)];
            }
            out[(r, j)] = acc;
        }
    }
    Ok(out)
}
