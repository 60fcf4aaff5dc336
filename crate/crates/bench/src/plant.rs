//! Inverted pendulum on a cart: the unknown drift term `f_I(x)` of the
//! angular acceleration, used as the target function.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid pendulum parameter `{name}` = {value}")]
pub struct PlantError {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Cart mass, kg.
    pub cart_mass: f64,
    /// Pendulum mass, kg.
    pub pendulum_mass: f64,
    /// Half the pendulum length, m.
    pub half_length: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 0.1,
            pendulum_mass: 0.02,
            half_length: 0.2,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        for (name, value) in [
            ("gravity", self.gravity),
            ("cart_mass", self.cart_mass),
            ("pendulum_mass", self.pendulum_mass),
            ("half_length", self.half_length),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PlantError { name, value });
            }
        }
        // 4/3 - m cos²x₁/(m_c+m) is smallest at cos² = 1
        let floor = 4.0 / 3.0 - self.pendulum_mass / (self.cart_mass + self.pendulum_mass);
        if !(floor > 0.0) {
            return Err(PlantError {
                name: "pendulum_mass",
                value: self.pendulum_mass,
            });
        }
        Ok(())
    }

    pub fn with_half_length(self, half_length: f64) -> Self {
        Self {
            half_length,
            ..self
        }
    }
}

/// `f_I(x₁, x₂)` for angle `x₁` (rad) and angular velocity `x₂` (rad/s).
pub fn pendulum_f(state: [f64; 2], p: &PendulumParams) -> f64 {
    let [x1, x2] = state;
    let total = p.cart_mass + p.pendulum_mass;
    let (s, c) = x1.sin_cos();
    let num = p.gravity * s - p.pendulum_mass * p.half_length * x2 * x2 * c * s / total;
    let den = p.half_length * (4.0 / 3.0 - p.pendulum_mass * c * c / total);
    num / den
}
