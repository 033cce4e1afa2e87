use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::models::MarkLaw;
use crate::noise::{Channel, NoiseStream};

/// Atoms `(epoch, mark)` of a Poisson random measure with intensity
/// `rate dt x law(dz)` on `(0, horizon] x R`.
///
/// Epochs come from exponential gaps on one channel and marks from
/// another, so the `j`-th mark does not depend on how many epochs exist.
pub fn sample_poisson_measure(rate: f64, law: &MarkLaw, horizon: f64, stream: &NoiseStream) -> Result<Vec<(f64, f64)>> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(domain("Poisson intensity must be finite and nonnegative"));
    }
    if !(horizon > 0.0) {
        return Err(domain("Poisson horizon must be positive"));
    }
    let mut atoms = Vec::new();
    if rate == 0.0 {
        return Ok(atoms);
    }
    let mut epochs = stream.reader(Channel::JumpEpochs);
    let mut marks = stream.reader(Channel::JumpMarks);
    let mut t = 0.0;
    loop {
        t += epochs.exponential(rate);
        if t > horizon {
            break;
        }
        atoms.push((t, law.sample(&mut marks)));
    }
    Ok(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, variance};

    #[test]
    fn zero_rate_is_empty() {
        let s = NoiseStream::new(1, 0);
        assert!(sample_poisson_measure(0.0, &MarkLaw::Rademacher, 10.0, &s).unwrap().is_empty());
    }

    #[test]
    fn epochs_sorted_in_range() {
        let s = NoiseStream::new(5, 2);
        let atoms = sample_poisson_measure(5.0, &MarkLaw::Rademacher, 10.0, &s).unwrap();
        assert!(atoms.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(atoms.iter().all(|&(t, z)| t > 0.0 && t <= 10.0 && (z == 1.0 || z == -1.0)));
    }

    #[test]
    fn count_is_poisson() {
        let reps = 10_000;
        let counts: Vec<f64> = (0..reps)
            .map(|i| {
                let s = NoiseStream::new(77, i);
                sample_poisson_measure(5.0, &MarkLaw::Rademacher, 10.0, &s).unwrap().len() as f64
            })
            .collect();
        let m = mean(&counts);
        let v = variance(&counts);
        // SE of the mean is sqrt(50 / 1e4); of the variance about 50 * sqrt(2 / 1e4).
        assert!((m - 50.0).abs() < 3.0 * libm::sqrt(50.0 / reps as f64), "mean {m}");
        assert!((v - 50.0).abs() < 3.0 * 50.0 * libm::sqrt(2.0 / reps as f64), "variance {v}");
    }
}
