use serde::{Deserialize, Serialize};

use super::tape::Mat;
use super::DenoiserParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

/// Gradient-descent state for one parameter set.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        step: i32,
        m: Vec<Mat>,
        v: Vec<Mat>,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &DenoiserParams) -> Self {
        match kind {
            OptimizerKind::Sgd => Self::Sgd { lr },
            OptimizerKind::Adam => Self::Adam {
                lr,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                step: 0,
                m: params.zeros_like(),
                v: params.zeros_like(),
            },
        }
    }

    pub fn step(&mut self, params: &mut DenoiserParams, grads: &[Mat]) {
        assert_eq!(grads.len(), params.tensors.len());
        match self {
            Self::Sgd { lr } => {
                for (t, g) in params.tensors.iter_mut().zip(grads) {
                    for (p, d) in t.value.data.iter_mut().zip(&g.data) {
                        *p -= *lr * d;
                    }
                }
            }
            Self::Adam {
                lr,
                beta1,
                beta2,
                eps,
                step,
                m,
                v,
            } => {
                *step += 1;
                let c1 = 1.0 - beta1.powi(*step);
                let c2 = 1.0 - beta2.powi(*step);
                for (k, (t, g)) in params.tensors.iter_mut().zip(grads).enumerate() {
                    for (idx, (p, d)) in t.value.data.iter_mut().zip(&g.data).enumerate() {
                        let mk = &mut m[k].data[idx];
                        let vk = &mut v[k].data[idx];
                        *mk = *beta1 * *mk + (1.0 - *beta1) * d;
                        *vk = *beta2 * *vk + (1.0 - *beta2) * d * d;
                        *p -= *lr * (*mk / c1) / ((*vk / c2).sqrt() + *eps);
                    }
                }
            }
        }
    }
}
