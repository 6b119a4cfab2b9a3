//! Allocation-free stepping kernel for the exponential-adapted
//! Euler-Maruyama method under the AI metric.
//!
//! A step from X works in the coordinates of the congruence by X^{-1/2}:
//! with L_M = log(X^{-1/2} M X^{-1/2}), L_V = log(X^{-1/2} V X^{-1/2}) and
//! Z = sum_j z_j S_j, the update
//!
//!   X' = X^{1/2} exp(theta dt L_M + pull dt L_V + sigma sqrt(dt) Z) X^{1/2}
//!
//! is algebraically identical to Exp_X(drift dt + noise + pull dt): the
//! congruences by X^{1/2} cancel inside the exponential. The inner logs are
//! exactly the quantities the bridge correction term needs, so the guided
//! sampler gets them for free.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::symkernel::{apply_spectral_into, basis_combine_into, EigenScratch, SPD_FLOOR};

const EXP_OVERFLOW: f64 = 709.0;

pub(crate) struct AiStepper {
    n: usize,
    pub x: DMatrix<f64>,
    sqrt_x: DMatrix<f64>,
    inv_sqrt_x: DMatrix<f64>,
    pub l_m: DMatrix<f64>,
    pub l_v: DMatrix<f64>,
    acc: DMatrix<f64>,
    noise: DMatrix<f64>,
    t1: DMatrix<f64>,
    t2: DMatrix<f64>,
    eig: EigenScratch,
    fw: Vec<f64>,
}

impl AiStepper {
    pub fn new(n: usize) -> Self {
        AiStepper {
            n,
            x: DMatrix::zeros(n, n),
            sqrt_x: DMatrix::zeros(n, n),
            inv_sqrt_x: DMatrix::zeros(n, n),
            l_m: DMatrix::zeros(n, n),
            l_v: DMatrix::zeros(n, n),
            acc: DMatrix::zeros(n, n),
            noise: DMatrix::zeros(n, n),
            t1: DMatrix::zeros(n, n),
            t2: DMatrix::zeros(n, n),
            eig: EigenScratch::new(n),
            fw: vec![0.0; n],
        }
    }

    pub fn set_state(&mut self, x: &DMatrix<f64>) {
        self.x.copy_from(x);
    }

    /// Factor the current state into X^{1/2} and X^{-1/2}.
    pub fn factor_state(&mut self) -> Result<()> {
        self.eig.factor(&self.x)?;
        if self.eig.w[0] <= SPD_FLOOR {
            return Err(Error::Boundary {
                context: "AI Euler-Maruyama state".into(),
                eigenvalue: self.eig.w[0],
                floor: SPD_FLOOR,
            });
        }
        for (f, &l) in self.fw.iter_mut().zip(self.eig.w.iter()) {
            *f = l.sqrt();
        }
        apply_spectral_into(&self.eig.v, &self.fw, &mut self.sqrt_x);
        for (f, &l) in self.fw.iter_mut().zip(self.eig.w.iter()) {
            *f = 1.0 / l.sqrt();
        }
        apply_spectral_into(&self.eig.v, &self.fw, &mut self.inv_sqrt_x);
        Ok(())
    }

    /// t2 = X^{-1/2} q X^{-1/2}, exactly symmetric.
    fn congruence_inv_sqrt(&mut self, q: &DMatrix<f64>) {
        self.inv_sqrt_x.mul_to(q, &mut self.t1);
        self.t1.mul_to(&self.inv_sqrt_x, &mut self.t2);
        symmetrize_inplace(&mut self.t2);
    }

    fn inner_log(&mut self, q: &DMatrix<f64>, context: &str) -> Result<()> {
        self.congruence_inv_sqrt(q);
        self.eig.factor(&self.t2)?;
        if self.eig.w[0] <= SPD_FLOOR {
            return Err(Error::Boundary {
                context: context.into(),
                eigenvalue: self.eig.w[0],
                floor: SPD_FLOOR,
            });
        }
        for (f, &l) in self.fw.iter_mut().zip(self.eig.w.iter()) {
            *f = l.ln();
        }
        Ok(())
    }

    /// l_m = log(X^{-1/2} m X^{-1/2}).
    pub fn load_log_m(&mut self, m: &DMatrix<f64>) -> Result<()> {
        self.inner_log(m, "AI step: log toward the attractor")?;
        let (v, fw) = (&self.eig.v, &self.fw);
        apply_spectral_into(v, fw, &mut self.l_m);
        Ok(())
    }

    /// l_v = log(X^{-1/2} v X^{-1/2}).
    pub fn load_log_v(&mut self, v_target: &DMatrix<f64>) -> Result<()> {
        self.inner_log(v_target, "AI step: log toward the bridge endpoint")?;
        let (v, fw) = (&self.eig.v, &self.fw);
        apply_spectral_into(v, fw, &mut self.l_v);
        Ok(())
    }

    /// One exponential-adapted step:
    /// X <- X^{1/2} exp(cm l_m + cv l_v + cz Z) X^{1/2}.
    /// Pass cm = 0 or cv = 0 to drop the corresponding term.
    pub fn advance(&mut self, cm: f64, cv: f64, cz: f64, z: &[f64]) -> Result<()> {
        basis_combine_into(self.n, z, &mut self.noise);
        for i in 0..self.n {
            for j in 0..self.n {
                self.acc[(i, j)] =
                    cm * self.l_m[(i, j)] + cv * self.l_v[(i, j)] + cz * self.noise[(i, j)];
            }
        }
        self.eig.factor(&self.acc)?;
        if self.eig.w[self.n - 1] > EXP_OVERFLOW {
            return Err(Error::NumericFailure(format!(
                "AI step: exponential overflow, tangent eigenvalue {:.3e}",
                self.eig.w[self.n - 1]
            )));
        }
        for (f, &l) in self.fw.iter_mut().zip(self.eig.w.iter()) {
            *f = l.exp();
        }
        apply_spectral_into(&self.eig.v, &self.fw, &mut self.t1);
        self.sqrt_x.mul_to(&self.t1, &mut self.t2);
        self.t2.mul_to(&self.sqrt_x, &mut self.t1);
        symmetrize_inplace(&mut self.t1);
        self.x.copy_from(&self.t1);
        Ok(())
    }
}

pub(crate) fn symmetrize_inplace(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Frobenius inner product of two buffers of equal shape.
pub(crate) fn frob_inner_buf(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
