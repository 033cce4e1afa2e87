//! Coefficient bundles for retarded, neutral, and jump equations.
//!
//! Coefficients are pure maps of `(t, segment)`. They write into caller
//! buffers so the engine can step without allocating.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::noise::StreamReader;
use crate::paths::{Interp, Segment, SegmentView};

/// `b(t, phi)` written into an `n`-vector.
pub type DriftFn = Arc<dyn Fn(f64, &dyn SegmentView, &mut [f64]) + Send + Sync>;
/// `sigma(t, phi)` written row-major into an `n x m` buffer.
pub type DiffusionFn = Arc<dyn Fn(f64, &dyn SegmentView, &mut [f64]) + Send + Sync>;
/// Neutral map `G(phi)`; time is passed for variable-lag maps.
pub type NeutralFn = Arc<dyn Fn(f64, &dyn SegmentView, &mut [f64]) + Send + Sync>;
/// Jump coefficient `sigma(t, phi, z)` for a scalar mark `z`.
pub type JumpFn = Arc<dyn Fn(f64, &dyn SegmentView, f64, &mut [f64]) + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(domain("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![value],
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Self { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }
}

/// Where the delayed argument of a coefficient is read.
#[derive(Clone)]
pub enum DelaySpec {
    /// `phi(-lag)` with `0 < lag <= tau`.
    PointConstant { lag: f64 },
    /// `phi(-delta(t))` with `0 <= delta(t) <= tau`.
    PointVariable {
        tau: f64,
        delta: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// `sum_k w_k phi(theta_k)` for a discrete probability measure on `[-tau, 0]`.
    Distributed { tau: f64, atoms: Vec<(f64, f64)> },
}

impl core::fmt::Debug for DelaySpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::PointConstant { lag } => f.debug_struct("PointConstant").field("lag", lag).finish(),
            Self::PointVariable { tau, .. } => f.debug_struct("PointVariable").field("tau", tau).finish(),
            Self::Distributed { tau, atoms } => f
                .debug_struct("Distributed")
                .field("tau", tau)
                .field("atoms", atoms)
                .finish(),
        }
    }
}

impl DelaySpec {
    pub fn point(lag: f64) -> Result<Self> {
        if !(lag > 0.0 && lag.is_finite()) {
            return Err(domain("point lag must be positive and finite"));
        }
        Ok(Self::PointConstant { lag })
    }

    /// Variable lag; `delta` is spot-checked on `t in [0, 100]`.
    pub fn variable(tau: f64, delta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(domain("delay window must have tau > 0"));
        }
        for k in 0..=1000 {
            let t = k as f64 * 0.1;
            let d = delta(t);
            if !(0.0..=tau).contains(&d) {
                return Err(domain(format!("variable lag delta({t}) = {d} leaves [0, tau]")));
            }
        }
        Ok(Self::PointVariable {
            tau,
            delta: Arc::new(delta),
        })
    }

    /// Discrete measure given as `(atom, weight)` pairs with atoms in `[-tau, 0]`.
    pub fn distributed(tau: f64, atoms: Vec<(f64, f64)>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(domain("delay window must have tau > 0"));
        }
        if atoms.is_empty() {
            return Err(domain("distributed delay needs at least one atom"));
        }
        let mut total = 0.0;
        for &(theta, w) in &atoms {
            if !(-tau..=0.0).contains(&theta) {
                return Err(domain("distributed delay atom outside [-tau, 0]"));
            }
            if !(w >= 0.0) {
                return Err(domain("distributed delay weights must be nonnegative"));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain(format!("distributed delay weights sum to {total}, not 1")));
        }
        Ok(Self::Distributed { tau, atoms })
    }

    pub fn tau(&self) -> f64 {
        match self {
            Self::PointConstant { lag } => *lag,
            Self::PointVariable { tau, .. } | Self::Distributed { tau, .. } => *tau,
        }
    }

    /// Component `i` of the delayed value at time `t`.
    pub fn delayed(&self, t: f64, phi: &dyn SegmentView, i: usize) -> f64 {
        match self {
            Self::PointConstant { lag } => phi.component(-lag, i),
            Self::PointVariable { tau, delta } => phi.component(-delta(t).clamp(0.0, *tau), i),
            Self::Distributed { atoms, .. } => atoms.iter().map(|&(th, w)| w * phi.component(th, i)).sum(),
        }
    }
}

/// Law of the scalar jump mark `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum MarkLaw {
    /// Uniform on `{-1, +1}`.
    Rademacher,
    /// Finite support `(value, probability)`.
    Discrete(Vec<(f64, f64)>),
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std_dev: f64 },
}

const GAUSS_LEGENDRE_16: [(f64, f64); 8] = [
    (0.09501250983763745, 0.09472530522753429),
    (0.2816035507792589, 0.0913017075224618),
    (0.45801677765722737, 0.08457825969750131),
    (0.6178762444026438, 0.07479799440828838),
    (0.755404408355003, 0.062314485627767015),
    (0.8656312023878318, 0.047579255841246296),
    (0.9445750230732326, 0.031126761969323853),
    (0.9894009349916499, 0.013576229705877019),
];

// Probabilists' Hermite nodes, weights normalised to sum to one.
const GAUSS_HERMITE_20: [(f64, f64); 10] = [
    (0.3469641570813559, 0.2607930634495548),
    (1.042945348802751, 0.16173933398400003),
    (1.7452473208141268, 0.06150637206397696),
    (2.458663611172368, 0.013997837447100996),
    (3.1890148165533896, 0.0018301031310804924),
    (3.9439673506573163, 0.00012882627996192942),
    (4.734581334046055, 4.4021210902308646e-06),
    (5.5787388058932015, 6.127490259982928e-08),
    (6.510590157013654, 2.4820623623151797e-10),
    (7.619048541679758, 1.2578006724379264e-13),
];

impl MarkLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Rademacher => Ok(()),
            Self::Discrete(atoms) => {
                if atoms.is_empty() || atoms.iter().any(|&(z, p)| !(p >= 0.0) || !z.is_finite()) {
                    return Err(domain("discrete mark law needs finite atoms with nonnegative weights"));
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(domain("discrete mark probabilities must sum to 1"));
                }
                Ok(())
            }
            Self::Uniform { low, high } => {
                if !(low < high) || !low.is_finite() || !high.is_finite() {
                    return Err(domain("uniform mark law needs finite low < high"));
                }
                Ok(())
            }
            Self::Normal { mean, std_dev } => {
                if !mean.is_finite() || !(*std_dev >= 0.0 && std_dev.is_finite()) {
                    return Err(domain("normal mark law needs finite mean and std_dev >= 0"));
                }
                Ok(())
            }
        }
    }

    pub fn has_finite_support(&self) -> bool {
        matches!(self, Self::Rademacher | Self::Discrete(_))
    }

    pub fn sample(&self, r: &mut StreamReader) -> f64 {
        match self {
            Self::Rademacher => {
                if r.next_u64() >> 63 == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
            Self::Discrete(atoms) => {
                let u = r.uniform();
                let mut acc = 0.0;
                for &(z, p) in atoms {
                    acc += p;
                    if u < acc {
                        return z;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            Self::Uniform { low, high } => low + (high - low) * r.uniform(),
            Self::Normal { mean, std_dev } => mean + std_dev * r.normal(),
        }
    }

    /// Nodes and weights integrating `E f(z)`. Exact for finite support and
    /// for polynomials of moderate degree otherwise.
    pub fn quadrature(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Rademacher => vec![(-1.0, 0.5), (1.0, 0.5)],
            Self::Discrete(atoms) => atoms.clone(),
            Self::Uniform { low, high } => {
                let (mid, half) = (0.5 * (low + high), 0.5 * (high - low));
                GAUSS_LEGENDRE_16
                    .iter()
                    .flat_map(|&(x, w)| [(mid - half * x, w), (mid + half * x, w)])
                    .collect()
            }
            Self::Normal { mean, std_dev } => GAUSS_HERMITE_20
                .iter()
                .flat_map(|&(x, w)| [(mean - std_dev * x, w), (mean + std_dev * x, w)])
                .collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Rademacher => 0.0,
            Self::Discrete(atoms) => atoms.iter().map(|&(z, p)| z * p).sum(),
            Self::Uniform { low, high } => 0.5 * (low + high),
            Self::Normal { mean, .. } => *mean,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Self::Rademacher => 1.0,
            Self::Discrete(atoms) => atoms.iter().map(|&(z, p)| z * z * p).sum(),
            Self::Uniform { low, high } => (low * low + low * high + high * high) / 3.0,
            Self::Normal { mean, std_dev } => mean * mean + std_dev * std_dev,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelClass {
    Retarded,
    Neutral,
    Jump,
}

/// Shape of the built-in jump coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpForm {
    /// `scale * z`.
    Additive,
    /// `scale * z * (delayed value)`.
    Delayed,
    /// `scale * z * min(1 + |phi(0)|, cap)`.
    Saturating { cap: f64 },
}

/// Parameters of a recognised built-in, used to attach analytic rates.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    LinearRetarded { a: f64, b_lag: f64 },
    NeutralLinear { kappa: f64, a: f64, b_lag: f64 },
    JumpLinear { a: f64, b_lag: f64, jump_scale: f64, intensity: f64, form: JumpForm },
    Zero,
}

#[derive(Clone)]
pub struct NeutralPart {
    pub map: NeutralFn,
    /// Declared contraction constant of the neutral map.
    pub kappa: f64,
}

#[derive(Clone)]
pub struct JumpPart {
    pub coeff: JumpFn,
    pub law: MarkLaw,
    pub intensity: f64,
    /// `intensity * E_z[coeff]`; filled by quadrature when not supplied.
    pub compensator: Option<DriftFn>,
}

#[derive(Clone)]
pub struct ModelSpec {
    class: ModelClass,
    dim: usize,
    noise_dim: usize,
    tau: f64,
    drift: DriftFn,
    diffusion: Option<DiffusionFn>,
    neutral: Option<NeutralPart>,
    jump: Option<JumpPart>,
    builtin: Option<Builtin>,
}

impl core::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ModelSpec")
            .field("class", &self.class)
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim)
            .field("tau", &self.tau)
            .field("builtin", &self.builtin)
            .finish_non_exhaustive()
    }
}

fn check_window(dim: usize, tau: f64) -> Result<()> {
    if dim == 0 {
        return Err(domain("state dimension must be positive"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(domain("delay window must have tau > 0"));
    }
    Ok(())
}

impl ModelSpec {
    /// `dX = b(t, X_t) dt + sigma(t, X_t) dW` with an `m`-dimensional `W`.
    pub fn retarded(dim: usize, noise_dim: usize, tau: f64, drift: DriftFn, diffusion: DiffusionFn) -> Result<Self> {
        check_window(dim, tau)?;
        if noise_dim == 0 {
            return Err(domain("Brownian dimension must be positive"));
        }
        Ok(Self {
            class: ModelClass::Retarded,
            dim,
            noise_dim,
            tau,
            drift,
            diffusion: Some(diffusion),
            neutral: None,
            jump: None,
            builtin: None,
        })
    }

    /// `d(X - G(X_t)) = b dt + sigma dW`. Requires `kappa in (0, 1/2)` and `G(0) = 0`.
    pub fn neutral(
        dim: usize,
        noise_dim: usize,
        tau: f64,
        drift: DriftFn,
        diffusion: DiffusionFn,
        map: NeutralFn,
        kappa: f64,
    ) -> Result<Self> {
        let mut spec = Self::retarded(dim, noise_dim, tau, drift, diffusion)?;
        if !(kappa > 0.0 && kappa < 0.5) {
            return Err(domain(format!("neutral contraction kappa = {kappa} must lie in (0, 1/2)")));
        }
        let zero = Segment::constant(Interp::ContinuousLinear, tau, 2, &vec![0.0; dim])?;
        let mut g0 = vec![0.0; dim];
        map(0.0, &zero, &mut g0);
        if g0.iter().any(|v| *v != 0.0) {
            return Err(Error::Contract("neutral map must send the zero segment to zero".into()));
        }
        spec.class = ModelClass::Neutral;
        spec.neutral = Some(NeutralPart { map, kappa });
        Ok(spec)
    }

    /// `dX = b dt + int sigma(t, X_{t-}, z) N~(dt, dz)` with finite-activity
    /// compound Poisson marks.
    pub fn jump(dim: usize, tau: f64, drift: DriftFn, coeff: JumpFn, law: MarkLaw, intensity: f64) -> Result<Self> {
        check_window(dim, tau)?;
        law.validate()?;
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(domain(format!("jump intensity {intensity} must be positive and finite")));
        }
        Ok(Self {
            class: ModelClass::Jump,
            dim,
            noise_dim: 0,
            tau,
            drift,
            diffusion: None,
            neutral: None,
            jump: Some(JumpPart {
                coeff,
                law,
                intensity,
                compensator: None,
            }),
            builtin: None,
        })
    }

    /// Replaces the diffusion (retarded and neutral classes).
    pub fn with_diffusion(mut self, noise_dim: usize, diffusion: DiffusionFn) -> Result<Self> {
        if self.class == ModelClass::Jump {
            return Err(domain("jump models carry no Brownian diffusion"));
        }
        if noise_dim == 0 {
            return Err(domain("Brownian dimension must be positive"));
        }
        self.noise_dim = noise_dim;
        self.diffusion = Some(diffusion);
        self.builtin = None;
        Ok(self)
    }

    pub fn with_drift(mut self, drift: DriftFn) -> Self {
        self.drift = drift;
        self.builtin = None;
        self
    }

    /// Supplies a closed-form compensator for the jump part.
    pub fn with_compensator(mut self, compensator: DriftFn) -> Result<Self> {
        match self.jump.as_mut() {
            Some(j) => {
                j.compensator = Some(compensator);
                Ok(self)
            }
            None => Err(domain("only jump models have a compensator")),
        }
    }

    pub fn class(&self) -> ModelClass {
        self.class
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn builtin(&self) -> Option<&Builtin> {
        self.builtin.as_ref()
    }

    pub fn neutral_part(&self) -> Option<&NeutralPart> {
        self.neutral.as_ref()
    }

    pub fn jump_part(&self) -> Option<&JumpPart> {
        self.jump.as_ref()
    }

    pub fn drift(&self, t: f64, phi: &dyn SegmentView, out: &mut [f64]) {
        (self.drift)(t, phi, out)
    }

    /// Writes `sigma(t, phi)`; zero for jump models.
    pub fn diffusion(&self, t: f64, phi: &dyn SegmentView, out: &mut [f64]) {
        match &self.diffusion {
            Some(d) => d(t, phi, out),
            None => out.iter_mut().for_each(|o| *o = 0.0),
        }
    }

    /// Writes `G(phi)`; zero outside the neutral class.
    pub fn neutral_map(&self, t: f64, phi: &dyn SegmentView, out: &mut [f64]) {
        match &self.neutral {
            Some(n) => (n.map)(t, phi, out),
            None => out.iter_mut().for_each(|o| *o = 0.0),
        }
    }

    pub fn jump_coeff(&self, t: f64, phi: &dyn SegmentView, z: f64, out: &mut [f64]) {
        match &self.jump {
            Some(j) => (j.coeff)(t, phi, z, out),
            None => out.iter_mut().for_each(|o| *o = 0.0),
        }
    }

    /// `intensity * E_z[sigma(t, phi, z)]`; zero outside the jump class.
    pub fn compensator(&self, t: f64, phi: &dyn SegmentView, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let Some(j) = &self.jump else { return };
        if let Some(c) = &j.compensator {
            c(t, phi, out);
            return;
        }
        let mut buf = vec![0.0; out.len()];
        for (z, w) in j.law.quadrature() {
            (j.coeff)(t, phi, z, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += j.intensity * w * b;
            }
        }
    }

    /// `intensity * E_z |sigma(t, phi, z)|^2` by quadrature.
    pub fn jump_second_moment(&self, t: f64, phi: &dyn SegmentView) -> f64 {
        let Some(j) = &self.jump else { return 0.0 };
        let mut buf = vec![0.0; self.dim];
        j.law
            .quadrature()
            .into_iter()
            .map(|(z, w)| {
                (j.coeff)(t, phi, z, &mut buf);
                w * buf.iter().map(|x| x * x).sum::<f64>()
            })
            .sum::<f64>()
            * j.intensity
    }
}

fn linear_drift(a: f64, b_lag: f64, delay: DelaySpec) -> DriftFn {
    Arc::new(move |t, phi, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = -a * phi.component(0.0, i) + b_lag * delay.delayed(t, phi, i);
        }
    })
}

fn constant_diffusion(sigma: Matrix) -> DiffusionFn {
    Arc::new(move |_, _, out| out.copy_from_slice(sigma.data()))
}

/// `b(t, phi) = -a phi(0) + b_lag * delayed(phi)` and constant `sigma0`;
/// the state dimension is the row count of `sigma0`.
pub fn linear_retarded(a: f64, b_lag: f64, sigma0: Matrix, delay: DelaySpec) -> Result<ModelSpec> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain("linear_retarded needs a > 0"));
    }
    if !b_lag.is_finite() {
        return Err(domain("b_lag must be finite"));
    }
    let (n, m) = (sigma0.rows(), sigma0.cols());
    let tau = delay.tau();
    let mut spec = ModelSpec::retarded(n, m, tau, linear_drift(a, b_lag, delay), constant_diffusion(sigma0))?;
    spec.builtin = Some(Builtin::LinearRetarded { a, b_lag });
    Ok(spec)
}

/// Neutral linear model with `G(phi) = kappa * delayed(phi)`.
pub fn neutral_linear(kappa: f64, delay: DelaySpec, a: f64, b_lag: f64, sigma0: Matrix) -> Result<ModelSpec> {
    if !(kappa > 0.0 && kappa < 0.5) {
        return Err(domain(format!("neutral_linear needs kappa in (0, 1/2), got {kappa}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain("neutral_linear needs a > 0"));
    }
    let (n, m) = (sigma0.rows(), sigma0.cols());
    let tau = delay.tau();
    let g_delay = delay.clone();
    let map: NeutralFn = Arc::new(move |t, phi, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = kappa * g_delay.delayed(t, phi, i);
        }
    });
    let mut spec = ModelSpec::neutral(
        n,
        m,
        tau,
        linear_drift(a, b_lag, delay),
        constant_diffusion(sigma0),
        map,
        kappa,
    )?;
    spec.builtin = Some(Builtin::NeutralLinear { kappa, a, b_lag });
    Ok(spec)
}

/// Scalar jump model with drift `-a phi(0) + b_lag * delayed(phi)` and
/// additive marks `jump_scale * z`.
pub fn jump_linear(
    a: f64,
    b_lag: f64,
    jump_scale: f64,
    intensity: f64,
    law: MarkLaw,
    delay: DelaySpec,
) -> Result<ModelSpec> {
    jump_linear_with(a, b_lag, jump_scale, intensity, law, delay, JumpForm::Additive)
}

pub fn jump_linear_with(
    a: f64,
    b_lag: f64,
    jump_scale: f64,
    intensity: f64,
    law: MarkLaw,
    delay: DelaySpec,
    form: JumpForm,
) -> Result<ModelSpec> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain("jump_linear needs a > 0"));
    }
    if !jump_scale.is_finite() {
        return Err(domain("jump_scale must be finite"));
    }
    if let JumpForm::Saturating { cap } = form {
        if !(cap >= 1.0) {
            return Err(domain("saturating jump cap must be at least 1"));
        }
    }
    let tau = delay.tau();
    let coeff_delay = delay.clone();
    let coeff: JumpFn = Arc::new(move |t, phi, z, out| {
        let factor = match form {
            JumpForm::Additive => 1.0,
            JumpForm::Delayed => coeff_delay.delayed(t, phi, 0),
            JumpForm::Saturating { cap } => (1.0 + phi.component(0.0, 0).abs()).min(cap),
        };
        out[0] = jump_scale * z * factor;
    });
    let mut spec = ModelSpec::jump(1, tau, linear_drift(a, b_lag, delay.clone()), coeff, law.clone(), intensity)?;
    let mean = law.mean();
    let comp: DriftFn = Arc::new(move |t, phi, out| {
        let factor = match form {
            JumpForm::Additive => 1.0,
            JumpForm::Delayed => delay.delayed(t, phi, 0),
            JumpForm::Saturating { cap } => (1.0 + phi.component(0.0, 0).abs()).min(cap),
        };
        out[0] = intensity * jump_scale * mean * factor;
    });
    spec = spec.with_compensator(comp)?;
    spec.builtin = Some(Builtin::JumpLinear {
        a,
        b_lag,
        jump_scale,
        intensity,
        form,
    });
    Ok(spec)
}

/// Zero drift and zero diffusion; every initial segment is a fixed point.
pub fn zero_model(dim: usize, tau: f64) -> Result<ModelSpec> {
    let drift: DriftFn = Arc::new(|_, _, out: &mut [f64]| out.iter_mut().for_each(|o| *o = 0.0));
    let diffusion: DiffusionFn = Arc::new(|_, _, out: &mut [f64]| out.iter_mut().for_each(|o| *o = 0.0));
    let mut spec = ModelSpec::retarded(dim, 1, tau, drift, diffusion)?;
    spec.builtin = Some(Builtin::Zero);
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Channel, NoiseStream};

    fn seg(values: &[f64]) -> Segment {
        let grid = Segment::uniform_grid(1.0, values.len());
        Segment::scalar(Interp::ContinuousLinear, grid, values.to_vec()).unwrap()
    }

    #[test]
    fn linear_retarded_drift() {
        let m = linear_retarded(3.0, 1.0, Matrix::scalar(1.0), DelaySpec::point(1.0).unwrap()).unwrap();
        let phi = seg(&[2.0, 0.0, 1.0]);
        let mut b = [0.0];
        m.drift(0.0, &phi, &mut b);
        assert_eq!(b[0], -3.0 + 2.0);
        let mut s = [0.0];
        m.diffusion(0.0, &phi, &mut s);
        assert_eq!(s[0], 1.0);
    }

    #[test]
    fn distributed_two_atom_average() {
        let d = DelaySpec::distributed(1.0, vec![(-1.0, 0.5), (0.0, 0.5)]).unwrap();
        let phi = seg(&[4.0, 0.0, 2.0]);
        assert_eq!(d.delayed(0.0, &phi, 0), 3.0);
        assert!(DelaySpec::distributed(1.0, vec![(-1.0, 0.6), (0.0, 0.5)]).is_err());
        assert!(DelaySpec::distributed(1.0, vec![(-1.5, 1.0)]).is_err());
    }

    #[test]
    fn variable_lag_is_spot_checked() {
        assert!(DelaySpec::variable(1.0, |t| 0.5 + 0.4 * libm::sin(t)).is_ok());
        assert!(DelaySpec::variable(1.0, |t| 0.5 + t).is_err());
    }

    #[test]
    fn neutral_linear_map() {
        let m = neutral_linear(0.25, DelaySpec::point(1.0).unwrap(), 3.0, 0.5, Matrix::scalar(0.5)).unwrap();
        let phi = seg(&[4.0, 0.0, 2.0]);
        let mut g = [0.0];
        m.neutral_map(0.0, &phi, &mut g);
        assert_eq!(g[0], 1.0);
        assert!(matches!(
            neutral_linear(0.0, DelaySpec::point(1.0).unwrap(), 3.0, 0.5, Matrix::scalar(0.5)),
            Err(Error::Domain(_))
        ));
        assert!(neutral_linear(0.5, DelaySpec::point(1.0).unwrap(), 3.0, 0.5, Matrix::scalar(0.5)).is_err());
    }

    #[test]
    fn neutral_distributed_is_kappa_lipschitz() {
        let kappa = 0.3;
        let d = DelaySpec::distributed(1.0, vec![(-1.0, 0.5), (0.0, 0.5)]).unwrap();
        let m = neutral_linear(kappa, d, 2.0, 0.5, Matrix::scalar(0.1)).unwrap();
        let mut r = NoiseStream::new(9, 0).reader(Channel::Auxiliary);
        let (mut g1, mut g2) = ([0.0], [0.0]);
        for _ in 0..10_000 {
            let a: Vec<f64> = (0..5).map(|_| r.normal()).collect();
            let b: Vec<f64> = (0..5).map(|_| r.normal()).collect();
            let (pa, pb) = (seg(&a), seg(&b));
            m.neutral_map(0.0, &pa, &mut g1);
            m.neutral_map(0.0, &pb, &mut g2);
            let lhs = (g1[0] - g2[0]).abs();
            let rhs = kappa * pa.sup_distance(&pb).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn jump_linear_compensator() {
        let m = jump_linear(3.0, 1.0, 0.1, 2.0, MarkLaw::Rademacher, DelaySpec::point(1.0).unwrap()).unwrap();
        let phi = seg(&[1.0, 1.0]);
        let mut c = [1.0];
        m.compensator(0.0, &phi, &mut c);
        assert_eq!(c[0], 0.0);
        assert!(jump_linear(3.0, 1.0, 0.1, 0.0, MarkLaw::Rademacher, DelaySpec::point(1.0).unwrap()).is_err());
        assert!(jump_linear(3.0, 1.0, 0.1, f64::INFINITY, MarkLaw::Rademacher, DelaySpec::point(1.0).unwrap()).is_err());
    }

    #[test]
    fn quadrature_compensator_matches_closed_form() {
        let law = MarkLaw::Uniform { low: 0.0, high: 2.0 };
        let m = jump_linear_with(1.0, 0.0, 0.5, 3.0, law.clone(), DelaySpec::point(1.0).unwrap(), JumpForm::Delayed)
            .unwrap();
        let phi = seg(&[2.0, 1.0]);
        let mut closed = [0.0];
        m.compensator(0.0, &phi, &mut closed);
        // Strip the closed form and integrate numerically.
        let j = m.jump_part().unwrap().clone();
        let raw = ModelSpec::jump(1, 1.0, Arc::new(|_, _, o: &mut [f64]| o[0] = 0.0), j.coeff, law, 3.0).unwrap();
        let mut quad = [0.0];
        raw.compensator(0.0, &phi, &mut quad);
        assert!((closed[0] - 3.0 * 0.5 * 1.0 * 2.0).abs() < 1e-12);
        assert!((closed[0] - quad[0]).abs() < 1e-12);
    }

    #[test]
    fn mark_law_moments_by_quadrature() {
        for law in [
            MarkLaw::Rademacher,
            MarkLaw::Discrete(vec![(0.0, 0.25), (2.0, 0.75)]),
            MarkLaw::Uniform { low: -1.0, high: 3.0 },
            MarkLaw::Normal { mean: 0.5, std_dev: 2.0 },
        ] {
            let q = law.quadrature();
            let m1: f64 = q.iter().map(|(z, w)| z * w).sum();
            let m2: f64 = q.iter().map(|(z, w)| z * z * w).sum();
            assert!((m1 - law.mean()).abs() < 1e-10, "{law:?}");
            assert!((m2 - law.second_moment()).abs() < 1e-10, "{law:?}");
        }
    }

    #[test]
    fn neutral_rejects_nonzero_at_origin() {
        let drift: DriftFn = Arc::new(|_, _, o: &mut [f64]| o[0] = 0.0);
        let diff: DiffusionFn = Arc::new(|_, _, o: &mut [f64]| o[0] = 0.0);
        let map: NeutralFn = Arc::new(|_, _, o: &mut [f64]| o[0] = 1.0);
        assert!(matches!(
            ModelSpec::neutral(1, 1, 1.0, drift, diff, map, 0.2),
            Err(Error::Contract(_))
        ));
    }
}
