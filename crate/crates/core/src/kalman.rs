//! Constant-acceleration Kalman filter on the ground plane.
//!
//! State is `[x, y, vx, vy, ax, ay]` with one frame as the time unit. The
//! update adds a detection-localization covariance `D` to the innovation
//! covariance next to the sensor noise `R`:
//!
//! ```text
//! y = z − H x
//! S = H P Hᵀ + R + D
//! K = P Hᵀ S⁻¹
//! x ← x + K y
//! P ← (I − K H) P      (then symmetrized)
//! ```
//!
//! With `D = 0` this is the textbook filter.

use nalgebra::{DMatrix, Matrix2, SMatrix, SVector, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type StateVector = SVector<f64, 6>;
pub type StateCovariance = SMatrix<f64, 6, 6>;
pub type ObservationMatrix = SMatrix<f64, 2, 6>;
pub type Gain = SMatrix<f64, 6, 2>;

const SYMMETRY_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum KalmanError {
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("measurement is not finite")]
    NonFiniteMeasurement,
    #[error("{name} must be symmetric positive semi-definite")]
    NotPsd { name: &'static str },
    #[error("observation matrix must select one state entry per row")]
    BadObservationModel,
    #[error("invalid filter setting: {0}")]
    InvalidSetting(String),
}

/// Scalar knobs the filter matrices are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSettings {
    /// Intensity of the discrete white-noise acceleration model.
    pub q_intensity: f64,
    /// Per-axis sensor measurement variance, m².
    pub r_var: f64,
    /// Detection-localization variance along x, m².
    pub d_var_x: f64,
    /// Detection-localization variance along y, m².
    pub d_var_y: f64,
    /// When false `D` is replaced by zero (ablation).
    pub use_detection_noise: bool,
    pub p0_pos: f64,
    pub p0_vel: f64,
    pub p0_acc: f64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        FilterSettings {
            q_intensity: 1e-8,
            r_var: 0.01,
            d_var_x: 0.017221,
            d_var_y: 0.005901,
            use_detection_noise: true,
            p0_pos: 0.5,
            p0_vel: 0.5,
            p0_acc: 0.1,
        }
    }
}

impl FilterSettings {
    pub fn validate(&self) -> Result<(), KalmanError> {
        let checks = [
            ("q_intensity", self.q_intensity, false),
            ("r_var", self.r_var, false),
            ("d_var_x", self.d_var_x, false),
            ("d_var_y", self.d_var_y, false),
            ("p0_pos", self.p0_pos, true),
            ("p0_vel", self.p0_vel, true),
            ("p0_acc", self.p0_acc, true),
        ];
        for (name, value, strict) in checks {
            let ok = value.is_finite() && if strict { value > 0.0 } else { value >= 0.0 };
            if !ok {
                return Err(KalmanError::InvalidSetting(format!("{name} = {value}")));
            }
        }
        if self.r_var + self.d_var_x.min(self.d_var_y) <= 0.0 {
            return Err(KalmanError::InvalidSetting(
                "r_var + d_var must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub x: StateVector,
    pub p: StateCovariance,
}

impl FilterState {
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x[0], self.x[1])
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.x[2], self.x[3])
    }

    /// Position variances `(P_xx, P_yy)`.
    pub fn position_variance(&self) -> (f64, f64) {
        (self.p[(0, 0)], self.p[(1, 1)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub f: StateCovariance,
    pub h: ObservationMatrix,
    pub q: StateCovariance,
    pub r: Matrix2<f64>,
    pub d: Matrix2<f64>,
    pub p0: StateCovariance,
}

/// Per-axis index triple `(pos, vel, acc)` in the state vector.
const AXES: [[usize; 3]; 2] = [[0, 2, 4], [1, 3, 5]];

impl FilterParams {
    pub fn constant_acceleration(s: &FilterSettings) -> Self {
        let mut f = StateCovariance::identity();
        let mut q = StateCovariance::zeros();
        let mut p0 = StateCovariance::zeros();
        // Γ = [½, 1, 1]ᵀ for Δt = 1; Q = q Γ Γᵀ per axis.
        let gamma = [0.5, 1.0, 1.0];
        for [pos, vel, acc] in AXES {
            f[(pos, vel)] = 1.0;
            f[(pos, acc)] = 0.5;
            f[(vel, acc)] = 1.0;
            let idx = [pos, vel, acc];
            for a in 0..3 {
                for b in 0..3 {
                    q[(idx[a], idx[b])] = s.q_intensity * gamma[a] * gamma[b];
                }
            }
            p0[(pos, pos)] = s.p0_pos;
            p0[(vel, vel)] = s.p0_vel;
            p0[(acc, acc)] = s.p0_acc;
        }
        let mut h = ObservationMatrix::zeros();
        h[(0, 0)] = 1.0;
        h[(1, 1)] = 1.0;
        let d = if s.use_detection_noise {
            Matrix2::new(s.d_var_x, 0.0, 0.0, s.d_var_y)
        } else {
            Matrix2::zeros()
        };
        FilterParams {
            f,
            h,
            q,
            r: Matrix2::identity() * s.r_var,
            d,
            p0,
        }
    }

    pub fn validate(&self) -> Result<(), KalmanError> {
        if !is_symmetric_psd(&self.q) {
            return Err(KalmanError::NotPsd { name: "Q" });
        }
        if !is_symmetric_psd(&self.p0) {
            return Err(KalmanError::NotPsd { name: "P0" });
        }
        if !is_symmetric_psd(&self.r) {
            return Err(KalmanError::NotPsd { name: "R" });
        }
        if !is_symmetric_psd(&self.d) {
            return Err(KalmanError::NotPsd { name: "D" });
        }
        for row in self.h.row_iter() {
            let ones = row.iter().filter(|v| **v == 1.0).count();
            let zeros = row.iter().filter(|v| **v == 0.0).count();
            if ones != 1 || zeros != 5 {
                return Err(KalmanError::BadObservationModel);
            }
        }
        Ok(())
    }
}

pub fn is_symmetric_psd<const N: usize>(m: &SMatrix<f64, N, N>) -> bool {
    if !m.iter().all(|v| v.is_finite()) {
        return false;
    }
    if (m - m.transpose()).amax() > SYMMETRY_TOL {
        return false;
    }
    SymmetricEigen::new(DMatrix::from_column_slice(N, N, m.as_slice()))
        .eigenvalues
        .iter()
        .all(|e| *e >= -PSD_TOL)
}

/// Fresh state at a measured position with zero velocity and acceleration.
pub fn init_state(z: Vector2<f64>, params: &FilterParams) -> FilterState {
    let mut x = StateVector::zeros();
    x[0] = z.x;
    x[1] = z.y;
    FilterState { x, p: params.p0 }
}

pub fn predict(state: &FilterState, params: &FilterParams) -> FilterState {
    let x = params.f * state.x;
    let p = params.f * state.p * params.f.transpose() + params.q;
    FilterState {
        x,
        p: symmetrize(&p),
    }
}

/// Kalman gain for the current prior.
pub fn gain(state: &FilterState, params: &FilterParams) -> Result<Gain, KalmanError> {
    let s = params.h * state.p * params.h.transpose() + params.r + params.d;
    let s_inv = s.try_inverse().ok_or(KalmanError::SingularInnovation)?;
    Ok(state.p * params.h.transpose() * s_inv)
}

pub fn update(
    state: &FilterState,
    z: Vector2<f64>,
    params: &FilterParams,
) -> Result<FilterState, KalmanError> {
    if !z.iter().all(|v| v.is_finite()) {
        return Err(KalmanError::NonFiniteMeasurement);
    }
    let k = gain(state, params)?;
    let residual = z - params.h * state.x;
    let x = state.x + k * residual;
    let p = (StateCovariance::identity() - k * params.h) * state.p;
    Ok(FilterState {
        x,
        p: symmetrize(&p),
    })
}

fn symmetrize(p: &StateCovariance) -> StateCovariance {
    (p + p.transpose()) * 0.5
}
