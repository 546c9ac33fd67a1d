use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Central-difference step for derivatives without an analytic form.
pub const FD_STEP: f64 = 1e-6;

/// Vector fields of `dY = b(H, Y) dA + sigma(H, Y) dX` with scalar `A`, `H`.
///
/// `sigma` is `k x d` row-major; its column `j` multiplies `dX^j`.
pub trait Coefficients: Sync {
    /// `k`.
    fn state_dim(&self) -> usize;
    /// `d`.
    fn driver_dim(&self) -> usize;
    fn drift(&self, h: f64, y: &[f64], out: &mut [f64]);
    fn diffusion(&self, h: f64, y: &[f64], out: &mut [f64]);

    /// `out[(i * d + j) * k + l] = d sigma_{ij} / d y_l`.
    ///
    /// The default is a central difference with step [`FD_STEP`].
    fn diffusion_derivative(&self, h: f64, y: &[f64], out: &mut [f64]) {
        fd_diffusion_derivative(self, h, y, out);
    }
}

pub(crate) fn fd_diffusion_derivative<C: Coefficients + ?Sized>(
    c: &C,
    h: f64,
    y: &[f64],
    out: &mut [f64],
) {
    let k = c.state_dim();
    let kd = k * c.driver_dim();
    let mut yp = y.to_vec();
    let mut plus = vec![0.0; kd];
    let mut minus = vec![0.0; kd];
    for l in 0..k {
        yp[l] = y[l] + FD_STEP;
        c.diffusion(h, &yp, &mut plus);
        yp[l] = y[l] - FD_STEP;
        c.diffusion(h, &yp, &mut minus);
        yp[l] = y[l];
        for m in 0..kd {
            out[m * k + l] = (plus[m] - minus[m]) / (2.0 * FD_STEP);
        }
    }
}

/// `sum_{j,l,m} d_l sigma_{ij} sigma_{lm} XX^{m,j}`, the second-order
/// correction of one step with second-level increment `xx` (`d x d`).
pub(crate) fn second_order_term<C: Coefficients + ?Sized>(
    c: &C,
    h: f64,
    y: &[f64],
    sigma: &[f64],
    xx: &[f64],
    deriv: &mut [f64],
    out: &mut [f64],
) {
    let k = c.state_dim();
    let d = c.driver_dim();
    c.diffusion_derivative(h, y, deriv);
    for i in 0..k {
        let mut acc = 0.0;
        for j in 0..d {
            for l in 0..k {
                let dl = deriv[(i * d + j) * k + l];
                if dl == 0.0 {
                    continue;
                }
                for m in 0..d {
                    acc += dl * sigma[l * d + m] * xx[m * d + j];
                }
            }
        }
        out[i] = acc;
    }
}

/// Largest relative gap between `diffusion_derivative` and a central
/// difference over the probe states.
pub fn derivative_check(c: &dyn Coefficients, probes: &[(f64, Vec<f64>)]) -> f64 {
    let n = c.state_dim() * c.driver_dim() * c.state_dim();
    let mut analytic = vec![0.0; n];
    let mut numeric = vec![0.0; n];
    let mut worst = 0.0f64;
    for (h, y) in probes {
        c.diffusion_derivative(*h, y, &mut analytic);
        fd_diffusion_derivative(c, *h, y, &mut numeric);
        for (a, b) in analytic.iter().zip(&numeric) {
            worst = worst.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
        }
    }
    worst
}

/// Built-in coefficient families, selected by `kind` in configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    /// Scalar state: `b = b0 + b1 y`, `sigma_j = s0_j + s1_j y`.
    Linear {
        #[serde(default)]
        drift: [f64; 2],
        diffusion: Vec<[f64; 2]>,
    },
    /// Planar state: `b = 0`, `sigma_j(y) = omega_j J y` with `J` the quarter turn.
    Rotation { omega: Vec<f64> },
    /// Bounded smooth fields: `b_i = tanh((B y + b0)_i + kappa h)` and
    /// `sigma_ij = scale_j tanh((A_j y + c_j)_i)`.
    TanhAffine {
        /// `k x k`, row-major.
        drift_matrix: Vec<f64>,
        drift_offset: Vec<f64>,
        #[serde(default)]
        time_coupling: f64,
        /// One `k x k` matrix per driver component.
        diffusion_matrices: Vec<Vec<f64>>,
        diffusion_offsets: Vec<Vec<f64>>,
        /// Per driver component; empty means all ones.
        #[serde(default)]
        scales: Vec<f64>,
    },
}

impl CoefficientSpec {
    pub fn build(&self) -> Result<BuiltinCoefficients> {
        let bad = |m: String| config_err("/coefficients", m);
        match self {
            CoefficientSpec::Linear { diffusion, .. } if diffusion.is_empty() => Err(bad(
                "linear coefficients need at least one diffusion column".into(),
            )),
            CoefficientSpec::Rotation { omega } if omega.is_empty() => {
                Err(bad("rotation needs at least one frequency".into()))
            }
            CoefficientSpec::TanhAffine {
                drift_matrix,
                drift_offset,
                diffusion_matrices,
                diffusion_offsets,
                scales,
                ..
            } => {
                let k = drift_offset.len();
                let d = diffusion_matrices.len();
                if k == 0 || d == 0 {
                    return Err(bad("tanh_affine needs a state and a driver".into()));
                }
                if drift_matrix.len() != k * k
                    || diffusion_matrices.iter().any(|m| m.len() != k * k)
                    || diffusion_offsets.len() != d
                    || diffusion_offsets.iter().any(|c| c.len() != k)
                    || !(scales.is_empty() || scales.len() == d)
                {
                    return Err(bad(format!(
                        "tanh_affine shapes inconsistent for k = {k}, d = {d}"
                    )));
                }
                Ok(BuiltinCoefficients { spec: self.clone() })
            }
            _ => Ok(BuiltinCoefficients { spec: self.clone() }),
        }
    }
}

/// A validated [`CoefficientSpec`] with analytic derivatives.
#[derive(Clone, Debug)]
pub struct BuiltinCoefficients {
    spec: CoefficientSpec,
}

impl BuiltinCoefficients {
    pub fn spec(&self) -> &CoefficientSpec {
        &self.spec
    }
}

impl Coefficients for BuiltinCoefficients {
    fn state_dim(&self) -> usize {
        match &self.spec {
            CoefficientSpec::Linear { .. } => 1,
            CoefficientSpec::Rotation { .. } => 2,
            CoefficientSpec::TanhAffine { drift_offset, .. } => drift_offset.len(),
        }
    }

    fn driver_dim(&self) -> usize {
        match &self.spec {
            CoefficientSpec::Linear { diffusion, .. } => diffusion.len(),
            CoefficientSpec::Rotation { omega } => omega.len(),
            CoefficientSpec::TanhAffine {
                diffusion_matrices, ..
            } => diffusion_matrices.len(),
        }
    }

    fn drift(&self, h: f64, y: &[f64], out: &mut [f64]) {
        match &self.spec {
            CoefficientSpec::Linear { drift, .. } => out[0] = drift[0] + drift[1] * y[0],
            CoefficientSpec::Rotation { .. } => out.fill(0.0),
            CoefficientSpec::TanhAffine {
                drift_matrix,
                drift_offset,
                time_coupling,
                ..
            } => {
                let k = drift_offset.len();
                for i in 0..k {
                    let z: f64 = (0..k).map(|l| drift_matrix[i * k + l] * y[l]).sum::<f64>()
                        + drift_offset[i]
                        + time_coupling * h;
                    out[i] = z.tanh();
                }
            }
        }
    }

    fn diffusion(&self, _h: f64, y: &[f64], out: &mut [f64]) {
        match &self.spec {
            CoefficientSpec::Linear { diffusion, .. } => {
                for (j, s) in diffusion.iter().enumerate() {
                    out[j] = s[0] + s[1] * y[0];
                }
            }
            CoefficientSpec::Rotation { omega } => {
                let d = omega.len();
                for (j, w) in omega.iter().enumerate() {
                    out[j] = -w * y[1];
                    out[d + j] = w * y[0];
                }
            }
            CoefficientSpec::TanhAffine {
                diffusion_matrices,
                diffusion_offsets,
                scales,
                ..
            } => {
                let k = y.len();
                let d = diffusion_matrices.len();
                for j in 0..d {
                    let a = &diffusion_matrices[j];
                    let scale = scales.get(j).copied().unwrap_or(1.0);
                    for i in 0..k {
                        let z: f64 = (0..k).map(|l| a[i * k + l] * y[l]).sum::<f64>()
                            + diffusion_offsets[j][i];
                        out[i * d + j] = scale * z.tanh();
                    }
                }
            }
        }
    }

    fn diffusion_derivative(&self, _h: f64, y: &[f64], out: &mut [f64]) {
        match &self.spec {
            CoefficientSpec::Linear { diffusion, .. } => {
                for (j, s) in diffusion.iter().enumerate() {
                    out[j] = s[1];
                }
            }
            CoefficientSpec::Rotation { omega } => {
                // Entry (i, j, l): sigma_{0j} = -w_j y_1, sigma_{1j} = w_j y_0.
                let d = omega.len();
                out.fill(0.0);
                for (j, w) in omega.iter().enumerate() {
                    out[j * 2 + 1] = -w;
                    out[(d + j) * 2] = *w;
                }
            }
            CoefficientSpec::TanhAffine {
                diffusion_matrices,
                diffusion_offsets,
                scales,
                ..
            } => {
                let k = y.len();
                let d = diffusion_matrices.len();
                for j in 0..d {
                    let a = &diffusion_matrices[j];
                    let scale = scales.get(j).copied().unwrap_or(1.0);
                    for i in 0..k {
                        let z: f64 = (0..k).map(|l| a[i * k + l] * y[l]).sum::<f64>()
                            + diffusion_offsets[j][i];
                        let sech2 = 1.0 - z.tanh().powi(2);
                        for l in 0..k {
                            out[(i * d + j) * k + l] = scale * sech2 * a[i * k + l];
                        }
                    }
                }
            }
        }
    }
}
