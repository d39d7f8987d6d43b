//! Compactly supported smoothing kernels and their integral constants.
//!
//! Every built-in kernel is a symmetric probability density on
//! `[-1, 1]`. The two constants used downstream are the squared L² norm
//! `∫K²` (asymptotic variance of every estimator) and the second moment
//! `∫z²K` (leading bias).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number of nodes in the fixed composite Simpson rule used for kernel integrals.
pub const QUADRATURE_NODES: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[default]
    Epanechnikov,
    Uniform,
    Triangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
}

/// `‖K‖²` and `∫z²K(z)dz` for a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub l2_norm_sq: f64,
    pub c_k: f64,
}

impl Kernel {
    pub const EPANECHNIKOV: Kernel = Kernel { kind: KernelKind::Epanechnikov };
    pub const UNIFORM: Kernel = Kernel { kind: KernelKind::Uniform };
    pub const TRIANGULAR: Kernel = Kernel { kind: KernelKind::Triangular };

    pub const fn new(kind: KernelKind) -> Self {
        Kernel { kind }
    }

    /// Half-width of the support; `1.0` for all built-ins.
    pub const fn support_radius(&self) -> f64 {
        1.0
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        let a = z.abs();
        if a > 1.0 {
            return 0.0;
        }
        match self.kind {
            KernelKind::Epanechnikov => 0.75 * (1.0 - z * z),
            KernelKind::Uniform => 0.5,
            KernelKind::Triangular => 1.0 - a,
        }
    }

    /// Integral constants by a fixed composite Simpson rule over the support.
    pub fn constants(&self) -> KernelConstants {
        KernelConstants { l2_norm_sq: self.integrate(|_, k| k * k), c_k: self.integrate(|z, k| z * z * k) }
    }

    /// `∫ g(z, K(z)) dz` over the support with [`QUADRATURE_NODES`] nodes.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, g: F) -> f64 {
        let r = self.support_radius();
        simpson(|z| g(z, self.eval(z)), -r, r, QUADRATURE_NODES)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            KernelKind::Epanechnikov => "epanechnikov",
            KernelKind::Uniform => "uniform",
            KernelKind::Triangular => "triangular",
        }
    }
}

pub fn eval_kernel(k: Kernel, z: f64) -> f64 {
    k.eval(z)
}

pub fn kernel_constants(k: Kernel) -> KernelConstants {
    k.constants()
}

/// Composite Simpson rule with `nodes` (odd, ≥ 3) equally spaced points.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, nodes: usize) -> f64 {
    assert!(nodes >= 3 && nodes % 2 == 1, "simpson needs an odd node count >= 3");
    let intervals = nodes - 1;
    let step = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + step * i as f64);
    }
    acc * step / 3.0
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s.to_ascii_lowercase().as_str() {
            "epanechnikov" => KernelKind::Epanechnikov,
            "uniform" => KernelKind::Uniform,
            "triangular" => KernelKind::Triangular,
            other => return Err(Error::InvalidInput(format!("unknown kernel '{other}'"))),
        };
        Ok(Kernel { kind })
    }
}
