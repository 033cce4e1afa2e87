use alloc::vec::Vec;

use crate::error::{domain, Result};

/// Piecewise-linear increasing homeomorphism of `[-tau, 0]` onto itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange {
    breakpoints: Vec<f64>,
    images: Vec<f64>,
}

impl TimeChange {
    pub fn new(breakpoints: Vec<f64>, images: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != images.len() {
            return Err(domain("time change needs matching breakpoint and image lists"));
        }
        let last = breakpoints.len() - 1;
        if breakpoints[0] != images[0] || breakpoints[last] != 0.0 || images[last] != 0.0 {
            return Err(domain("time change must fix both endpoints of [-tau, 0]"));
        }
        if !(breakpoints[0] < 0.0) {
            return Err(domain("time change window must have tau > 0"));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0] && w[1].is_finite());
        if !increasing(&breakpoints) || !increasing(&images) {
            return Err(domain("time change must be strictly increasing"));
        }
        Ok(Self { breakpoints, images })
    }

    pub fn identity(tau: f64) -> Self {
        Self {
            breakpoints: alloc::vec![-tau, 0.0],
            images: alloc::vec![-tau, 0.0],
        }
    }

    pub fn tau(&self) -> f64 {
        -self.breakpoints[0]
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn images(&self) -> &[f64] {
        &self.images
    }

    /// `lambda(t)`; exact at breakpoints.
    pub fn apply(&self, t: f64) -> f64 {
        interpolate(&self.breakpoints, &self.images, t)
    }

    /// `lambda^{-1}(s)`; exact at images of breakpoints.
    pub fn inverse(&self, s: f64) -> f64 {
        interpolate(&self.images, &self.breakpoints, s)
    }

    pub fn slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints
            .windows(2)
            .zip(self.images.windows(2))
            .map(|(b, i)| (i[1] - i[0]) / (b[1] - b[0]))
    }

    /// Same as [`homeomorphism_norm`].
    pub fn norm(&self) -> f64 {
        homeomorphism_norm(self)
    }
}

/// `sup_{s<t} |log((lambda(t) - lambda(s)) / (t - s))|`.
///
/// Every chord slope of a piecewise-linear map is a weighted mean of the
/// piece slopes it spans, so the supremum is the largest `|log slope|` over
/// the pieces.
pub fn homeomorphism_norm(lambda: &TimeChange) -> f64 {
    lambda
        .slopes()
        .map(|s| libm::log(s).abs())
        .fold(0.0, f64::max)
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    if xs[k] == x {
        return ys[k];
    }
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + w * (ys[k + 1] - ys[k])
}
