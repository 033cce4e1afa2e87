use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::noise::{Channel, NoiseStream, StreamReader};
use crate::paths::{Interp, Segment};

/// How far sampled segments range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius {
    /// Scales log-uniform in `[r / 1000, r]`.
    Bounded(f64),
    /// Scales log-uniform in `[1e-3, 1e6]`.
    Unbounded,
}

/// Draws `(t, phi, psi)` triples for the assumption checkers.
///
/// Four shape families are mixed equally: Gaussian noise, constants, a
/// single tent spike on a constant base, and sawtooth waves. Trial `k` is a
/// pure function of `(seed, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPairSampler {
    pub tau: f64,
    pub dim: usize,
    pub points: usize,
    pub radius: Radius,
    pub seed: u64,
    /// Times are drawn uniformly from `[0, t_max]`.
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledPair {
    pub trial: u64,
    pub t: f64,
    pub phi: Segment,
    pub psi: Segment,
    pub scale: f64,
}

impl SegmentPairSampler {
    pub fn new(tau: f64, dim: usize, radius: Radius, seed: u64) -> Result<Self> {
        if !(tau > 0.0) || dim == 0 {
            return Err(domain("sampler needs tau > 0 and dim >= 1"));
        }
        if let Radius::Bounded(r) = radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(domain("bounded sampler radius must be positive"));
            }
        }
        Ok(Self {
            tau,
            dim,
            points: 21,
            radius,
            seed,
            t_max: 10.0,
        })
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.radius, Radius::Bounded(_))
    }

    pub fn sample(&self, trial: u64) -> Result<SampledPair> {
        let mut r = NoiseStream::new(self.seed, trial).reader(Channel::Auxiliary);
        let (lo, hi) = match self.radius {
            Radius::Bounded(radius) => (radius * 1e-3, radius),
            Radius::Unbounded => (1e-3, 1e6),
        };
        let scale = lo * libm::pow(hi / lo, r.uniform());
        let t = self.t_max * r.uniform();
        let n = self.points.max(3);
        let family = (r.next_u64() % 4) as u8;
        let (phi, psi) = match family {
            0 => (self.gaussian(&mut r, scale, n), self.gaussian(&mut r, scale, n)),
            1 => (self.constant(&mut r, scale, n), self.constant(&mut r, scale, n)),
            2 => {
                let base = self.constant(&mut r, scale, n);
                let spiked = self.spike(&mut r, &base, n);
                (spiked, base_shift(&mut r, &base))
            }
            _ => (self.sawtooth(&mut r, scale, n), self.sawtooth(&mut r, scale, n)),
        };
        let grid = Segment::uniform_grid(self.tau, n);
        Ok(SampledPair {
            trial,
            t,
            phi: Segment::new(Interp::ContinuousLinear, grid.clone(), self.dim, phi, None)?,
            psi: Segment::new(Interp::ContinuousLinear, grid, self.dim, psi, None)?,
            scale,
        })
    }

    fn gaussian(&self, r: &mut StreamReader, scale: f64, n: usize) -> Vec<f64> {
        (0..n * self.dim).map(|_| scale * r.normal()).collect()
    }

    fn constant(&self, r: &mut StreamReader, scale: f64, n: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..self.dim).map(|_| scale * r.normal()).collect();
        (0..n).flat_map(|_| v.iter().copied()).collect()
    }

    /// Adds a tent of height `ratio * base` at one grid point, at `-tau`
    /// half the time; `ratio` is log-uniform in `[1e-2, 1e2]` with a random sign.
    fn spike(&self, r: &mut StreamReader, base: &[f64], n: usize) -> Vec<f64> {
        let at = if r.uniform() < 0.5 {
            0
        } else {
            (r.next_u64() % n as u64) as usize
        };
        let ratio = libm::pow(10.0, -2.0 + 4.0 * r.uniform()) * if r.uniform() < 0.5 { -1.0 } else { 1.0 };
        let mut out = base.to_vec();
        for i in 0..self.dim {
            out[at * self.dim + i] += ratio * base[at * self.dim + i];
        }
        out
    }

    fn sawtooth(&self, r: &mut StreamReader, scale: f64, n: usize) -> Vec<f64> {
        let period = 2 + (r.next_u64() % 6) as usize;
        let amp: Vec<f64> = (0..self.dim).map(|_| scale * r.normal()).collect();
        let offset: Vec<f64> = (0..self.dim).map(|_| scale * r.normal()).collect();
        let mut out = vec![0.0; n * self.dim];
        for k in 0..n {
            let phase = (k % period) as f64 / (period - 1) as f64;
            for i in 0..self.dim {
                out[k * self.dim + i] = offset[i] + amp[i] * (2.0 * phase - 1.0);
            }
        }
        out
    }
}

/// `base` scaled by a factor in `[0, 1)`, so the spiked difference keeps a
/// constant part and the pair is not identical off the spike.
fn base_shift(r: &mut StreamReader, base: &[f64]) -> Vec<f64> {
    let f = r.uniform();
    base.iter().map(|v| f * v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::SegmentView;

    #[test]
    fn trials_are_reproducible() {
        let s = SegmentPairSampler::new(1.0, 2, Radius::Bounded(2.0), 5).unwrap();
        assert_eq!(s.sample(17).unwrap(), s.sample(17).unwrap());
        assert_ne!(s.sample(17).unwrap(), s.sample(18).unwrap());
    }

    #[test]
    fn bounded_radius_holds() {
        let s = SegmentPairSampler::new(1.0, 1, Radius::Bounded(2.0), 1).unwrap();
        for k in 0..500 {
            let p = s.sample(k).unwrap();
            assert!(p.scale <= 2.0 && p.phi.dim() == 1);
        }
    }
}
