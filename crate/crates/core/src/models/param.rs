use ndarray::Array2;
use rand::Rng;

/// A named trainable tensor with its last-collected gradient.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Array2<f64>,
    pub grad: Array2<f64>,
}

impl Param {
    /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    pub fn uniform(name: &str, shape: (usize, usize), fan_in: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        Self {
            name: name.to_string(),
            value: Array2::from_shape_fn(shape, |_| rng.gen_range(-bound..bound)),
            grad: Array2::zeros(shape),
        }
    }

    pub fn zeros(name: &str, shape: (usize, usize)) -> Self {
        Self {
            name: name.to_string(),
            value: Array2::zeros(shape),
            grad: Array2::zeros(shape),
        }
    }

    pub fn from_value(name: &str, value: Array2<f64>) -> Self {
        let grad = Array2::zeros(value.dim());
        Self {
            name: name.to_string(),
            value,
            grad,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.dim()
    }
}
