//! Kinematic single-track vehicle model.

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Polygon, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Wheelbase [m].
    pub wheelbase: f64,
    /// Rear axle to center of gravity [m].
    pub rear_to_cg: f64,
    pub body_length: f64,
    pub body_width: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 0.22,
            rear_to_cg: 0.11,
            body_length: 0.22,
            body_width: 0.107,
        }
    }
}

impl VehicleParams {
    pub fn is_valid(&self) -> bool {
        0.0 < self.rear_to_cg
            && self.rear_to_cg < self.wheelbase
            && self.body_length > 0.0
            && self.body_width > 0.0
    }

    /// Side slip angle at the center of gravity.
    pub fn slip_angle(&self, delta: f64) -> f64 {
        (self.rear_to_cg / self.wheelbase * delta.tan()).atan()
    }

    /// Body rectangle centered on the center of gravity, inflated by `margin`
    /// on every side.
    pub fn footprint(&self, pose: Pose, margin: f64) -> Polygon {
        Polygon::rectangle(
            [pose.x, pose.y],
            self.body_length + 2.0 * margin,
            self.body_width + 2.0 * margin,
            pose.psi,
        )
        .expect("vehicle body has positive extent")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
    pub delta: f64,
}

impl VehicleState {
    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.psi)
    }

    fn axpy(&self, h: f64, d: &StateDerivative) -> Self {
        Self {
            x: self.x + h * d.x,
            y: self.y + h * d.y,
            psi: self.psi + h * d.psi,
            v: self.v + h * d.v,
            delta: self.delta + h * d.delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Acceleration [m/s²].
    pub accel: f64,
    /// Steering rate [rad/s].
    pub steer_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
    pub delta: f64,
}

pub fn dynamics_derivative(
    s: &VehicleState,
    u: &ControlInput,
    params: &VehicleParams,
) -> StateDerivative {
    let beta = params.slip_angle(s.delta);
    StateDerivative {
        x: s.v * (s.psi + beta).cos(),
        y: s.v * (s.psi + beta).sin(),
        psi: s.v / params.wheelbase * s.delta.tan() * beta.cos(),
        v: u.accel,
        delta: u.steer_rate,
    }
}

/// Minimum number of RK4 substeps per integration call.
pub const MIN_SUBSTEPS: usize = 10;

/// Integrates over `dt` with fixed-step RK4; `input(t)` is evaluated at
/// relative times in `[0, dt]`. The returned heading is wrapped to `[0, 2π)`.
pub fn integrate(
    s: &VehicleState,
    input: impl Fn(f64) -> ControlInput,
    dt: f64,
    substeps: usize,
    params: &VehicleParams,
) -> VehicleState {
    let n = substeps.max(MIN_SUBSTEPS);
    let h = dt / n as f64;
    let f = |t: f64, st: &VehicleState| dynamics_derivative(st, &input(t), params);
    let mut st = *s;
    for k in 0..n {
        let t = k as f64 * h;
        let k1 = f(t, &st);
        let k2 = f(t + h / 2.0, &st.axpy(h / 2.0, &k1));
        let k3 = f(t + h / 2.0, &st.axpy(h / 2.0, &k2));
        let k4 = f(t + h, &st.axpy(h, &k3));
        st = VehicleState {
            x: st.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            y: st.y + h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
            psi: st.psi + h / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi),
            v: st.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
            delta: st.delta + h / 6.0 * (k1.delta + 2.0 * k2.delta + 2.0 * k3.delta + k4.delta),
        };
    }
    st.psi = wrap_angle(st.psi);
    st
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: VehicleParams = VehicleParams {
        wheelbase: 0.22,
        rear_to_cg: 0.11,
        body_length: 0.22,
        body_width: 0.107,
    };

    #[test]
    fn standstill_derivative() {
        let s = VehicleState {
            x: 1.0,
            y: 2.0,
            psi: 0.3,
            v: 0.0,
            delta: 0.2,
        };
        let u = ControlInput {
            accel: 0.5,
            steer_rate: -0.1,
        };
        let d = dynamics_derivative(&s, &u, &P);
        assert_eq!((d.x, d.y, d.psi, d.v, d.delta), (0.0, 0.0, 0.0, 0.5, -0.1));
    }

    #[test]
    fn straight_derivative() {
        let s = VehicleState {
            v: 1.0,
            ..Default::default()
        };
        let d = dynamics_derivative(&s, &ControlInput::default(), &P);
        assert_eq!((d.x, d.y, d.psi, d.v, d.delta), (1.0, 0.0, 0.0, 0.0, 0.0));
        for ratio in [0.1, 0.5, 0.9] {
            let p = VehicleParams {
                rear_to_cg: ratio * P.wheelbase,
                ..P
            };
            assert_eq!(p.slip_angle(0.0), 0.0);
        }
    }

    #[test]
    fn straight_line_integration() {
        let s = VehicleState {
            v: 1.0,
            ..Default::default()
        };
        let end = integrate(&s, |_| ControlInput::default(), 1.0, 10, &P);
        assert!((end.x - 1.0).abs() < 1e-9);
        assert!(end.y.abs() < 1e-12);
    }

    #[test]
    fn constant_steering_traces_circle() {
        let delta: f64 = 0.25;
        let beta = P.slip_angle(delta);
        let radius = P.wheelbase / (delta.tan() * beta.cos());
        let mut s = VehicleState {
            v: 0.8,
            delta,
            ..Default::default()
        };
        // center lies to the left of the initial CG velocity
        let center = [-radius * beta.sin(), radius * beta.cos()];
        for _ in 0..40 {
            s = integrate(&s, |_| ControlInput::default(), 0.1, 10, &P);
            let r = (s.x - center[0]).hypot(s.y - center[1]);
            assert!(
                (r - radius).abs() / radius < 1e-6,
                "r={r} expected {radius}"
            );
        }
    }

    #[test]
    fn equilibrium() {
        let s = VehicleState {
            x: 0.4,
            y: -0.2,
            psi: 1.0,
            v: 0.0,
            delta: 0.1,
        };
        assert_eq!(integrate(&s, |_| ControlInput::default(), 0.2, 10, &P), s);
    }

    #[test]
    fn params_validity() {
        assert!(P.is_valid());
        assert!(!VehicleParams {
            rear_to_cg: 0.3,
            ..P
        }
        .is_valid());
        assert!(!VehicleParams {
            body_width: 0.0,
            ..P
        }
        .is_valid());
    }
}
