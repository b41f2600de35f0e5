use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Field;

type PointwiseFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type FieldFn = Arc<dyn Fn(f64, &Field) -> Field + Send + Sync>;

#[derive(Clone)]
enum Evaluator {
    Zero,
    Pointwise(PointwiseFn),
    FieldMap(FieldFn),
}

/// Reaction term `f(t, y)` of the controlled equation.
///
/// `lipschitz` is the constant `L` in `|f(t1,y1) − f(t2,y2)| ≤ L(|t1−t2| + |y1−y2|)`.
/// `growth`, when declared, is a constant `C` with `|f(t,y)(x)| ≤ C|y(x)|`, which
/// forces `f(t, 0) = 0`.
#[derive(Clone)]
pub struct NonlinearitySpec {
    name: String,
    lipschitz: f64,
    growth: Option<f64>,
    eval: Evaluator,
}

impl fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearitySpec")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("growth", &self.growth)
            .finish()
    }
}

impl NonlinearitySpec {
    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            lipschitz: 0.0,
            growth: Some(0.0),
            eval: Evaluator::Zero,
        }
    }

    /// `f(t, y) = c·y`
    pub fn linear(c: f64) -> Self {
        Self {
            name: format!("linear({c})"),
            lipschitz: c.abs(),
            growth: Some(c.abs()),
            eval: Evaluator::Pointwise(Arc::new(move |_, y| c * y)),
        }
    }

    /// `f(t, y) = amplitude·sin(y)`
    pub fn sine(amplitude: f64) -> Self {
        Self {
            name: format!("sine({amplitude})"),
            lipschitz: amplitude.abs(),
            growth: Some(amplitude.abs()),
            eval: Evaluator::Pointwise(Arc::new(move |_, y| amplitude * y.sin())),
        }
    }

    /// `f(t, y) = slope·y + offset`; a growth constant exists only when `offset == 0`.
    pub fn affine(slope: f64, offset: f64) -> Self {
        Self {
            name: format!("affine({slope},{offset})"),
            lipschitz: slope.abs(),
            growth: (offset == 0.0).then_some(slope.abs()),
            eval: Evaluator::Pointwise(Arc::new(move |_, y| slope * y + offset)),
        }
    }

    /// Arbitrary pointwise reaction. When `growth` is declared the function must vanish at `y = 0`.
    pub fn pointwise(
        name: impl Into<String>,
        lipschitz: f64,
        growth: Option<f64>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::Domain(format!(
                "Lipschitz constant must be >= 0, got {lipschitz}"
            )));
        }
        if let Some(c) = growth {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Domain(format!(
                    "growth constant must be >= 0, got {c}"
                )));
            }
            for t in [0.0, 0.25, 0.5, 1.0] {
                if f(t, 0.0) != 0.0 {
                    return Err(Error::Contract(format!(
                        "declared growth constant but f({t}, 0) != 0"
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            lipschitz,
            growth,
            eval: Evaluator::Pointwise(Arc::new(f)),
        })
    }

    /// Forcing acting on whole fields (not pointwise in space). No growth constant is declared.
    pub fn field_map(
        name: impl Into<String>,
        lipschitz: f64,
        f: impl Fn(f64, &Field) -> Field + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            lipschitz,
            growth: None,
            eval: Evaluator::FieldMap(Arc::new(f)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn growth(&self) -> Option<f64> {
        self.growth
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.eval, Evaluator::Zero)
    }

    /// Scalar evaluation for pointwise reactions; `None` for field maps.
    pub fn eval_scalar(&self, t: f64, y: f64) -> Option<f64> {
        match &self.eval {
            Evaluator::Zero => Some(0.0),
            Evaluator::Pointwise(f) => Some(f(t, y)),
            Evaluator::FieldMap(_) => None,
        }
    }

    pub fn evaluate(&self, t: f64, y: &Field) -> Field {
        match &self.eval {
            Evaluator::Zero => Field::zeros(*y.grid()),
            Evaluator::Pointwise(f) => y.map(|v| f(t, v)),
            Evaluator::FieldMap(f) => f(t, y),
        }
    }
}
