//! Neuron activation functions with closed-form first and second derivatives.
//!
//! The multiplier equation contracts constraint Hessians against velocities,
//! which requires an exact second derivative of the activation; finite
//! differences or first-order autodiff would not be enough.

/// Activation applied to a neuron's weighted input sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
}

/// Value and first two derivatives of an activation at a point.
#[derive(Debug, Clone, Copy)]
pub struct ActivationEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Activation {
    pub fn eval(self, z: f64) -> ActivationEval {
        match self {
            Activation::Identity => ActivationEval {
                value: z,
                d1: 1.0,
                d2: 0.0,
            },
            Activation::Tanh => {
                let v = z.tanh();
                let d1 = 1.0 - v * v;
                // sigma'' = -2 sigma sigma'
                ActivationEval {
                    value: v,
                    d1,
                    d2: -2.0 * v * d1,
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tanh_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &z in &[-3.0, -1.2, 0.0, 0.7, 2.5] {
            let e = Activation::Tanh.eval(z);
            let fp = Activation::Tanh.eval(z + h).value;
            let fm = Activation::Tanh.eval(z - h).value;
            assert_relative_eq!(e.d1, (fp - fm) / (2.0 * h), max_relative = 1e-6);
            assert_relative_eq!(
                e.d2,
                (fp - 2.0 * e.value + fm) / (h * h),
                epsilon = 1e-5,
                max_relative = 1e-4
            );
            // second derivative is consistent with the derivative of d1
            let d1p = Activation::Tanh.eval(z + h).d1;
            let d1m = Activation::Tanh.eval(z - h).d1;
            assert_relative_eq!(e.d2, (d1p - d1m) / (2.0 * h), epsilon = 1e-9, max_relative = 1e-6);
        }
    }

    #[test]
    fn identity_is_linear() {
        let e = Activation::Identity.eval(4.2);
        assert_eq!((e.value, e.d1, e.d2), (4.2, 1.0, 0.0));
    }

    #[test]
    fn values_finite_for_large_arguments() {
        for &z in &[-7.0e2, 7.0e2, 1.0e6, -1.0e6] {
            let e = Activation::Tanh.eval(z);
            assert!(e.value.is_finite() && e.d1.is_finite() && e.d2.is_finite());
        }
    }
}
