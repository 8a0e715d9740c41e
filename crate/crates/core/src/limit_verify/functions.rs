use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A bounded test function with three bounded derivatives, supplied with
/// closed forms for `f'` and `f''`.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    f: RealFn,
    d1: RealFn,
    d2: RealFn,
    /// Declared sup-norm bounds of `f, f', f'', f'''`.
    bounds: [f64; 4],
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .finish()
    }
}

/// Step of the central differences used to validate supplied derivatives.
pub const VALIDATION_STEP: f64 = 1e-4;
pub const VALIDATION_TOL: f64 = 1e-6;

impl TestFunction {
    /// Validates `d1` and `d2` against central differences of `f` on a
    /// 0.01-spaced grid over `[-10, 10]`, and `f`, `f'`, `f''` against the
    /// declared bounds on the same grid.
    pub fn new<F, D1, D2>(
        name: impl Into<String>,
        f: F,
        d1: D1,
        d2: D2,
        bounds: [f64; 4],
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        let h = VALIDATION_STEP;
        for i in 0..=2000 {
            let x = -10.0 + i as f64 * 0.01;
            let fd1 = (f(x + h) - f(x - h)) / (2.0 * h);
            let fd2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            if (fd1 - d1(x)).abs() > VALIDATION_TOL || (fd2 - d2(x)).abs() > VALIDATION_TOL {
                return Err(invalid(format!(
                    "derivatives of {name} disagree with finite differences at {x}"
                )));
            }
            if f(x).abs() > bounds[0] || d1(x).abs() > bounds[1] || d2(x).abs() > bounds[2] {
                return Err(invalid(format!(
                    "{name} exceeds its declared bounds at {x}"
                )));
            }
        }
        Ok(Self {
            name,
            f: Arc::new(f),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            bounds,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }

    pub fn sin() -> Self {
        Self::new(
            "sin",
            f64::sin,
            f64::cos,
            |x| -x.sin(),
            [1.0, 1.0, 1.0, 1.0],
        )
        .unwrap()
    }

    pub fn tanh() -> Self {
        Self::new(
            "tanh",
            f64::tanh,
            |x| 1.0 - x.tanh().powi(2),
            |x| {
                let t = x.tanh();
                -2.0 * t * (1.0 - t * t)
            },
            [1.0, 1.0, 0.77, 2.0],
        )
        .unwrap()
    }

    /// `1 / (1 + x^2)`.
    pub fn lorentzian() -> Self {
        Self::new(
            "lorentzian",
            |x| 1.0 / (1.0 + x * x),
            |x| -2.0 * x / (1.0 + x * x).powi(2),
            |x| (6.0 * x * x - 2.0) / (1.0 + x * x).powi(3),
            [1.0, 0.65, 2.0, 4.67],
        )
        .unwrap()
    }

    /// `exp(-x^2)`.
    pub fn gaussian() -> Self {
        Self::new(
            "gaussian",
            |x| (-x * x).exp(),
            |x| -2.0 * x * (-x * x).exp(),
            |x| (4.0 * x * x - 2.0) * (-x * x).exp(),
            [1.0, 0.86, 2.0, 3.91],
        )
        .unwrap()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(
            "constant",
            move |_| c,
            |_| 0.0,
            |_| 0.0,
            [c.abs(), 0.0, 0.0, 0.0],
        )
        .unwrap()
    }

    /// The fixed library: sin, tanh, lorentzian, gaussian and the constant 1.
    pub fn library() -> Vec<Self> {
        vec![
            Self::sin(),
            Self::tanh(),
            Self::lorentzian(),
            Self::gaussian(),
            Self::constant(1.0),
        ]
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Self::library().into_iter().find(|f| f.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_validates() {
        let names: Vec<String> = TestFunction::library()
            .iter()
            .map(|f| f.name().to_string())
            .collect();
        assert_eq!(names, ["sin", "tanh", "lorentzian", "gaussian", "constant"]);
        assert!(TestFunction::by_name("tanh").is_some());
        assert!(TestFunction::by_name("cos").is_none());
    }

    #[test]
    fn wrong_derivative_rejected() {
        assert!(TestFunction::new("bad", f64::sin, f64::sin, |x| -x.sin(), [1.0; 4]).is_err());
        assert!(TestFunction::new("bad2", f64::sin, f64::cos, f64::sin, [1.0; 4]).is_err());
    }

    #[test]
    fn bounds_enforced() {
        assert!(TestFunction::new(
            "big",
            |x| 2.0 * x.sin(),
            |x| 2.0 * x.cos(),
            |x| -2.0 * x.sin(),
            [1.0; 4]
        )
        .is_err());
    }
}
