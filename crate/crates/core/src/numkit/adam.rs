use super::Matrix;
use crate::error::{Error, Result};

/// Adam with bias-corrected moments. Moment buffers are created on the first
/// step and must see the same parameter shapes afterwards.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape(format!(
                "adam: {} params but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Matrix::zeros(p.dim())).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::Shape("adam: parameter count changed".into()));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.dim() != g.dim() || p.dim() != m.dim() {
                return Err(Error::Shape("adam: parameter/gradient shape mismatch".into()));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            ndarray::Zip::from(&mut **p)
                .and(g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    let mhat = *m / bc1;
                    let vhat = *v / bc2;
                    *p -= lr * mhat / (vhat.sqrt() + eps);
                });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn three_steps_match_hand_trace() {
        let mut p = array![[1.0, -2.0]];
        let grads = [array![[0.5, -1.0]], array![[0.25, 2.0]], array![[-1.0, 0.0]]];
        let mut adam = Adam::new(0.1);

        // reference written out longhand
        let (mut m, mut v, mut x) = ([0.0f64; 2], [0.0f64; 2], [1.0f64, -2.0]);
        for (t, g) in grads.iter().enumerate() {
            adam.step(&mut [&mut p], std::slice::from_ref(g)).unwrap();
            for k in 0..2 {
                let gk = g[[0, k]];
                m[k] = 0.9 * m[k] + 0.1 * gk;
                v[k] = 0.999 * v[k] + 0.001 * gk * gk;
                let mh = m[k] / (1.0 - 0.9f64.powi(t as i32 + 1));
                let vh = v[k] / (1.0 - 0.999f64.powi(t as i32 + 1));
                x[k] -= 0.1 * mh / (vh.sqrt() + 1e-8);
            }
            assert!((p[[0, 0]] - x[0]).abs() < 1e-15);
            assert!((p[[0, 1]] - x[1]).abs() < 1e-15);
        }
        // first step moves each coordinate by ~lr against the gradient sign
        assert_eq!(adam.steps_taken(), 3);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let mut p = array![[0.0, 0.0, 0.0]];
        let mut adam = Adam::new(0.01);
        adam.step(&mut [&mut p], &[array![[3.0, -0.001, 0.0]]]).unwrap();
        assert!((p[[0, 0]] + 0.01).abs() < 1e-9);
        assert!((p[[0, 1]] - 0.01).abs() < 1e-6);
        assert_eq!(p[[0, 2]], 0.0);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut p = array![[0.0, 0.0]];
        let mut adam = Adam::new(0.01);
        assert!(adam.step(&mut [&mut p], &[array![[1.0]]]).is_err());
    }
}
