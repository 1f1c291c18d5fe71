//! Characteristic-matrix optics for planar multilayer stacks at normal
//! incidence.
//!
//! Layers are listed from the ambient side down: element 0 is the first layer
//! light crosses. Each layer contributes the matrix
//! `[[cos d, i sin d / n], [i n sin d, cos d]]` with phase
//! `d = 2 pi n t / lambda`, and the stack matrix is the left-to-right product
//! in that order.

use num_complex::Complex64;

use super::ProblemError;

/// A lossless layer sequence between a real ambient and a (possibly
/// absorbing) semi-infinite substrate.
#[derive(Debug, Clone)]
pub struct LayerStack {
    thicknesses: Vec<f64>,
    indices: Vec<f64>,
    ambient: f64,
    substrate: Complex64,
}

impl LayerStack {
    pub fn new(
        thicknesses: Vec<f64>,
        indices: Vec<f64>,
        ambient: f64,
        substrate: Complex64,
    ) -> Result<Self, ProblemError> {
        if thicknesses.len() != indices.len() {
            return Err(ProblemError::NonPhysical(format!(
                "{} thicknesses vs {} indices",
                thicknesses.len(),
                indices.len()
            )));
        }
        if let Some(t) = thicknesses.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(ProblemError::NonPhysical(format!("negative layer thickness {t}")));
        }
        if let Some(n) = indices.iter().find(|n| !n.is_finite() || **n < 1.0) {
            return Err(ProblemError::NonPhysical(format!("refractive index {n} < 1")));
        }
        if ambient < 1.0 || substrate.re < 1.0 || substrate.im < 0.0 {
            return Err(ProblemError::NonPhysical(format!(
                "ambient {ambient} / substrate {substrate} out of range"
            )));
        }
        Ok(Self { thicknesses, indices, ambient, substrate })
    }

    pub fn layers(&self) -> usize {
        self.thicknesses.len()
    }

    /// Stack characteristic matrix at the given vacuum wavelength.
    fn matrix(&self, wavelength: f64) -> [Complex64; 4] {
        let i = Complex64::new(0.0, 1.0);
        // Identity; zero-thickness layers contribute exactly this.
        let mut m = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        for (t, n) in self.thicknesses.iter().zip(&self.indices) {
            let delta = 2.0 * std::f64::consts::PI * n * t / wavelength;
            let (s, c) = delta.sin_cos();
            let layer = [
                Complex64::new(c, 0.0),
                i * s / n,
                i * n * s,
                Complex64::new(c, 0.0),
            ];
            m = [
                m[0] * layer[0] + m[1] * layer[2],
                m[0] * layer[1] + m[1] * layer[3],
                m[2] * layer[0] + m[3] * layer[2],
                m[2] * layer[1] + m[3] * layer[3],
            ];
        }
        m
    }

    /// Power reflectance and transmittance at normal incidence.
    ///
    /// `transmittance` is the power flux entering the substrate. For a
    /// lossless stack the pair satisfies `R + T = 1` up to rounding.
    pub fn reflectance_transmittance(&self, wavelength: f64) -> Result<(f64, f64), ProblemError> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(ProblemError::NonPhysical(format!("wavelength {wavelength}")));
        }
        let [m11, m12, m21, m22] = self.matrix(wavelength);
        let n0 = Complex64::new(self.ambient, 0.0);
        let ns = self.substrate;
        let b = n0 * m11 + n0 * ns * m12;
        let den = b + m21 + ns * m22;
        let r = (b - m21 - ns * m22) / den;
        let t = 2.0 * n0 / den;
        let refl = r.norm_sqr().clamp(0.0, 1.0);
        let trans = (ns.re / self.ambient * t.norm_sqr()).clamp(0.0, 1.0);
        Ok((refl, trans))
    }

    /// Power reflectance at normal incidence, in `[0, 1]`.
    pub fn reflectance(&self, wavelength: f64) -> Result<f64, ProblemError> {
        self.reflectance_transmittance(wavelength).map(|(r, _)| r)
    }
}
