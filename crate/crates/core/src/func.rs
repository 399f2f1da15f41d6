//! Shared closure handles for coefficients, data and custom basis functions.

use std::fmt;
use std::sync::Arc;

/// A scalar function of one variable, shareable across threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn scalar_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

/// A coefficient with value and first-derivative evaluators, e.g. the
/// advection field beta(x) whose derivative enters div(beta v).
#[derive(Clone)]
pub struct Coefficient {
    value: ScalarFn,
    deriv: ScalarFn,
    label: String,
}

impl Coefficient {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Coefficient {
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            label: label.into(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Coefficient::new(format!("{c}"), move |_| c, |_| 0.0)
    }

    /// a + b x
    pub fn linear(a: f64, b: f64) -> Self {
        Coefficient::new(format!("{a} + {b} x"), move |x| a + b * x, move |_| b)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coefficient({})", self.label)
    }
}
