use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdamError {
    #[error("parameter count mismatch: optimizer has {expected}, got {got}")]
    ParamCountMismatch { expected: usize, got: usize },
    #[error("gradient shape mismatch for parameter {index}")]
    GradShapeMismatch { index: usize },
}

/// Adam with bias correction. Moment buffers are kept per parameter in
/// the order the parameters were registered.
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(lr: f64, shapes: &[(usize, usize)]) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            v: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn step(
        &mut self,
        params: &mut [&mut Array2<f64>],
        grads: &[&Array2<f64>],
    ) -> Result<(), AdamError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(AdamError::ParamCountMismatch {
                expected: self.m.len(),
                got: params.len().max(grads.len()),
            });
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for (i, (p, g)) in params.iter_mut().zip(grads.iter()).enumerate() {
            if p.dim() != g.dim() {
                return Err(AdamError::GradShapeMismatch { index: i });
            }
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            m.zip_mut_with(g, |mi, gi| *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi);
            v.zip_mut_with(g, |vi, gi| *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi);
            ndarray::Zip::from(&mut **p)
                .and(&*m)
                .and(&*v)
                .for_each(|pi, &mi, &vi| {
                    let mhat = mi / b1t;
                    let vhat = vi / b2t;
                    *pi -= self.lr * mhat / (vhat.sqrt() + self.eps);
                });
        }
        Ok(())
    }
}
