//! Sampled checks of the standing assumptions on a coefficient bundle.
//!
//! Each check draws `(t, phi, psi)` triples, reduces every triple to the
//! scalars of the relevant inequality and then either finds a refuting
//! triple, fits constants, or gives up.
//!
//! Dissipativity checks fail only on a triple that refutes every pair
//! `alpha1 > alpha2`: a nonnegative left side while the window difference
//! never exceeds the present one. Growth checks fail on an unbounded sampler
//! when the ratio keeps growing with the radius.

mod fit;
mod sampler;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use fit::{fit_dissipativity, fit_growth, FitOutcome, Sample};
pub use sampler::{Radius, SampledPair, SegmentPairSampler};

use crate::ensemble::ensemble_map;
use crate::error::{domain, Error, Result};
use crate::models::{ModelClass, ModelSpec};
use crate::noise::{derive_seed, Channel, NoiseStream};
use crate::paths::{Segment, SegmentView};

const PASS_MARGIN: f64 = 1e-6;
const MARK_SALT: u64 = 0xB1;
/// Ratio between the largest growth ratios at the top and bottom of the
/// radius range that counts as superlinear growth.
const GROWTH_FAIL: f64 = 1e3;
const GROWTH_LOCAL: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    H1,
    H2,
    A2,
    A3,
    Eq13,
    B1,
    B2,
    /// `kappa in (0, 1/2)` and `alpha1 > alpha2 / (1 - 2 kappa)^2`.
    Gate,
}

impl Assumption {
    pub fn id(self) -> &'static str {
        match self {
            Self::H1 => "H1",
            Self::H2 => "H2",
            Self::A2 => "A2",
            Self::A3 => "A3",
            Self::Eq13 => "EQ13",
            Self::B1 => "B1",
            Self::B2 => "B2",
            Self::Gate => "GATE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    PassWithConstants,
    FailWithWitness,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Constants {
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub alpha3: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Triple { trial: u64, t: f64, phi: Segment, psi: Segment },
    /// The gate fails on the constants themselves.
    Constants { kappa: f64, alpha1: f64, alpha2: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub assumption: Assumption,
    pub status: Status,
    pub constants: Constants,
    pub witness: Option<Witness>,
    pub trials: usize,
    /// Pass: slack of the strict constant inequality. Fail: violation score
    /// of the witness, reproduced by [`replay`].
    pub margin: f64,
    /// Constants were only verified on a bounded set of segments.
    pub local_only: bool,
    pub note: Option<String>,
    pub p_exp: f64,
    /// Sampler seed; mark draws for jump checks derive from it.
    pub seed: u64,
    pub mark_samples: usize,
}

impl Verdict {
    fn new(assumption: Assumption, trials: usize, sampler: &SegmentPairSampler) -> Self {
        Self {
            assumption,
            status: Status::Inconclusive,
            constants: Constants::default(),
            witness: None,
            trials,
            margin: 0.0,
            local_only: false,
            note: None,
            p_exp: 0.0,
            seed: sampler.seed,
            mark_samples: 0,
        }
    }
}

/// Verdicts of a multi-part check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictSet {
    pub verdicts: Vec<Verdict>,
}

impl VerdictSet {
    pub fn status(&self) -> Status {
        let s = self.verdicts.iter().map(|v| v.status);
        if s.clone().any(|s| s == Status::FailWithWitness) {
            Status::FailWithWitness
        } else if s.clone().any(|s| s == Status::Inconclusive) {
            Status::Inconclusive
        } else {
            Status::PassWithConstants
        }
    }

    pub fn get(&self, a: Assumption) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.assumption == a)
    }
}

/// Differences of one sampled pair, evaluated once.
struct PairEval {
    d0: f64,
    sup: f64,
    drift_dot: f64,
    drift_sq: f64,
    sigma_sq: f64,
    neutral: f64,
    neutral_dot: f64,
    jump_mean: f64,
    jump_se: f64,
}

fn evaluate_pair(model: &ModelSpec, pair: &SampledPair, mark_seed: Option<(u64, usize)>) -> PairEval {
    let n = model.dim();
    let m = model.noise_dim().max(1);
    let (t, phi, psi) = (pair.t, &pair.phi, &pair.psi);
    let last = phi.len() - 1;
    let delta0: Vec<f64> = phi.value_at(last).iter().zip(psi.value_at(last)).map(|(a, b)| a - b).collect();

    let mut bp = vec![0.0; n];
    let mut bq = vec![0.0; n];
    model.drift(t, phi, &mut bp);
    model.drift(t, psi, &mut bq);
    let db: Vec<f64> = bp.iter().zip(&bq).map(|(a, b)| a - b).collect();

    let mut sp = vec![0.0; n * m];
    let mut sq = vec![0.0; n * m];
    model.diffusion(t, phi, &mut sp);
    model.diffusion(t, psi, &mut sq);

    let mut gp = vec![0.0; n];
    let mut gq = vec![0.0; n];
    model.neutral_map(t, phi, &mut gp);
    model.neutral_map(t, psi, &mut gq);
    let dg: Vec<f64> = gp.iter().zip(&gq).map(|(a, b)| a - b).collect();

    let (jump_mean, jump_se) = match (model.jump_part(), mark_seed) {
        (Some(j), Some((seed, samples))) => {
            let sq_diff = |z: f64, cp: &mut [f64], cq: &mut [f64]| {
                model.jump_coeff(t, phi, z, cp);
                model.jump_coeff(t, psi, z, cq);
                cp.iter().zip(cq.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            };
            let mut cp = vec![0.0; n];
            let mut cq = vec![0.0; n];
            if j.law.has_finite_support() {
                let v: f64 = j.law.quadrature().into_iter().map(|(z, w)| w * sq_diff(z, &mut cp, &mut cq)).sum();
                (j.intensity * v, 0.0)
            } else {
                let mut r = NoiseStream::new(derive_seed(seed, MARK_SALT), pair.trial).reader(Channel::JumpMarks);
                let draws: Vec<f64> = (0..samples).map(|_| sq_diff(j.law.sample(&mut r), &mut cp, &mut cq)).collect();
                (
                    j.intensity * crate::stats::mean(&draws),
                    j.intensity * crate::stats::standard_error(&draws),
                )
            }
        }
        _ => (0.0, 0.0),
    };

    PairEval {
        d0: crate::paths::norm(&delta0),
        sup: phi.sup_distance(psi).unwrap_or(f64::INFINITY),
        drift_dot: delta0.iter().zip(&db).map(|(a, b)| a * b).sum(),
        drift_sq: db.iter().map(|x| x * x).sum(),
        sigma_sq: sp.iter().zip(&sq).map(|(a, b)| (a - b) * (a - b)).sum(),
        neutral: crate::paths::norm(&dg),
        neutral_dot: dg.iter().zip(&db).map(|(a, b)| a * b).sum(),
        jump_mean,
        jump_se,
    }
}

fn check_sampler(model: &ModelSpec, sampler: &SegmentPairSampler, trials: usize) -> Result<()> {
    if sampler.dim != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: sampler.dim,
        });
    }
    if (sampler.tau - model.tau()).abs() > 1e-12 * model.tau() {
        return Err(domain("sampler window does not match the model delay"));
    }
    if trials == 0 {
        return Err(domain("need at least one trial"));
    }
    Ok(())
}

fn draw(model: &ModelSpec, sampler: &SegmentPairSampler, trials: usize, marks: Option<usize>) -> Result<Vec<(SampledPair, PairEval)>> {
    let out = ensemble_map(trials, |k| {
        let pair = sampler.sample(k as u64)?;
        let eval = evaluate_pair(model, &pair, marks.map(|m| (sampler.seed, m)));
        Ok::<_, Error>((pair, eval))
    });
    out.into_iter().collect()
}

fn witness_of(pair: &SampledPair) -> Witness {
    Witness::Triple {
        trial: pair.trial,
        t: pair.t,
        phi: pair.phi.clone(),
        psi: pair.psi.clone(),
    }
}

/// Score of a refuting triple for a dissipativity inequality: `lhs / a` when
/// the window never exceeds the present difference, else `-inf`.
fn refutation_score(s: &Sample) -> f64 {
    if s.a > 0.0 && s.r <= s.a * (1.0 + 1e-12) && s.lhs >= 0.0 {
        s.lhs / s.a
    } else {
        f64::NEG_INFINITY
    }
}

fn dissipativity_verdict(
    mut v: Verdict,
    pairs: &[SampledPair],
    samples: &[Sample],
    weight: f64,
    require_ordered: bool,
) -> Verdict {
    let worst = samples
        .iter()
        .enumerate()
        .map(|(i, s)| (i, refutation_score(s)))
        .filter(|(_, s)| s.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((i, score)) = worst {
        v.status = Status::FailWithWitness;
        v.witness = Some(witness_of(&pairs[i]));
        v.margin = score;
        v.note = Some("left side nonnegative while the window never exceeds the present difference".into());
        return v;
    }
    match fit_dissipativity(samples, weight) {
        FitOutcome::Infeasible => {
            v.note = Some("no finite constants fit the sample".into());
        }
        FitOutcome::Feasible { alpha2, .. } => {
            let alpha2 = alpha2.max(PASS_MARGIN);
            let env = fit::envelope(samples, alpha2);
            let alpha1 = env - 1e-9 * env.abs().max(1.0);
            v.constants.alpha1 = Some(alpha1);
            v.constants.alpha2 = Some(alpha2);
            let ok = if require_ordered {
                alpha1 - alpha2 > PASS_MARGIN
            } else {
                alpha1 > PASS_MARGIN
            };
            v.margin = alpha1 - weight * alpha2;
            if ok {
                v.status = Status::PassWithConstants;
            } else {
                v.note = Some("feasible only with alpha1 <= alpha2".into());
            }
        }
    }
    v
}

/// Growth ratio at the top of the radius range over the bottom.
fn growth_across_radius(pairs: &[SampledPair], ratios: &[f64]) -> f64 {
    let logs: Vec<f64> = pairs.iter().map(|p| libm::log(p.scale)).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return 1.0;
    }
    let quarter = 0.25 * (hi - lo);
    let band_max = |inside: &dyn Fn(f64) -> bool| {
        logs.iter()
            .zip(ratios)
            .filter(|(l, r)| inside(**l) && r.is_finite())
            .map(|(_, r)| *r)
            .fold(0.0, f64::max)
    };
    let bottom = band_max(&|l| l <= lo + quarter);
    let top = band_max(&|l| l >= hi - quarter);
    if bottom > 0.0 {
        top / bottom
    } else if top > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

fn growth_verdict(mut v: Verdict, sampler: &SegmentPairSampler, pairs: &[SampledPair], samples: &[(f64, f64)]) -> Verdict {
    let ratios: Vec<f64> = samples
        .iter()
        .map(|&(lhs, r)| if r > 0.0 { lhs / r } else if lhs > 0.0 { f64::INFINITY } else { 0.0 })
        .collect();
    let growth = growth_across_radius(pairs, &ratios);
    let argmax = ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let fail = |mut v: Verdict, note: &str| {
        v.status = Status::FailWithWitness;
        v.witness = Some(witness_of(&pairs[argmax]));
        v.margin = ratios[argmax];
        v.note = Some(note.into());
        v
    };
    let Some(c) = fit_growth(samples) else {
        return fail(v, "coefficient differs on identical windows");
    };
    if !sampler.is_bounded() && growth > GROWTH_FAIL {
        return fail(v, &format!("ratio grows by {growth:.3e} across the radius range; no global constant"));
    }
    let alpha3 = if c > 0.0 { c * (1.0 + PASS_MARGIN) } else { 1.0 };
    v.status = Status::PassWithConstants;
    v.constants.alpha3 = Some(alpha3);
    v.margin = alpha3 - c;
    if sampler.is_bounded() && growth > GROWTH_LOCAL {
        v.local_only = true;
        v.note = Some("local only".into());
    }
    v
}

fn h1_sample(e: &PairEval, p: f64) -> Sample {
    let w = if p == 0.0 { 1.0 } else { libm::pow(e.d0, p) };
    Sample {
        lhs: w * (2.0 * e.drift_dot + e.sigma_sq),
        a: w * e.d0 * e.d0,
        r: w * e.sup * e.sup,
    }
}

fn h2_sample(e: &PairEval, p: f64) -> (f64, f64) {
    let q = 1.0 + 0.5 * p;
    (libm::pow(e.sigma_sq, q), libm::pow(e.sup * e.sup, q))
}

fn a2_sample(e: &PairEval) -> Sample {
    Sample {
        lhs: 2.0 * (e.drift_dot - e.neutral_dot) + e.sigma_sq,
        a: e.d0 * e.d0,
        r: e.sup * e.sup,
    }
}

/// Mark integral made conservative for the direction of the claim.
fn b1_sample(e: &PairEval, upper: bool) -> Sample {
    let i = if upper { e.jump_mean + 3.0 * e.jump_se } else { (e.jump_mean - 3.0 * e.jump_se).max(0.0) };
    Sample {
        lhs: 2.0 * e.drift_dot + i,
        a: e.d0 * e.d0,
        r: e.sup * e.sup,
    }
}

fn b2_sample(e: &PairEval) -> (f64, f64) {
    (e.drift_sq + e.jump_mean + 3.0 * e.jump_se, e.sup * e.sup)
}

/// Weighted dissipativity of a retarded bundle.
pub fn check_h1(model: &ModelSpec, sampler: &SegmentPairSampler, p_exp: f64, trials: usize) -> Result<Verdict> {
    if model.class() != ModelClass::Retarded {
        return Err(domain("H1 applies to the retarded class"));
    }
    if !(p_exp >= 0.0 && p_exp.is_finite()) {
        return Err(domain("p_exp must be finite and nonnegative"));
    }
    check_sampler(model, sampler, trials)?;
    let draws = draw(model, sampler, trials, None)?;
    let (pairs, evals): (Vec<_>, Vec<_>) = draws.into_iter().unzip();
    let samples: Vec<Sample> = evals.iter().map(|e| h1_sample(e, p_exp)).collect();
    let mut v = Verdict::new(Assumption::H1, trials, sampler);
    v.p_exp = p_exp;
    v.local_only = sampler.is_bounded();
    Ok(dissipativity_verdict(v, &pairs, &samples, 1.0, true))
}

/// Growth bound on the diffusion difference.
pub fn check_h2(model: &ModelSpec, sampler: &SegmentPairSampler, p_exp: f64, trials: usize) -> Result<Verdict> {
    if model.class() == ModelClass::Jump {
        return Err(domain("H2 applies to diffusion coefficients"));
    }
    if !(p_exp >= 0.0 && p_exp.is_finite()) {
        return Err(domain("p_exp must be finite and nonnegative"));
    }
    check_sampler(model, sampler, trials)?;
    let draws = draw(model, sampler, trials, None)?;
    let (pairs, evals): (Vec<_>, Vec<_>) = draws.into_iter().unzip();
    let samples: Vec<(f64, f64)> = evals.iter().map(|e| h2_sample(e, p_exp)).collect();
    let mut v = Verdict::new(Assumption::H2, trials, sampler);
    v.p_exp = p_exp;
    Ok(growth_verdict(v, sampler, &pairs, &samples))
}

/// The composite condition of the neutral theorem, as a pure function of
/// the constants.
pub fn neutral_gate(kappa: f64, alpha1: f64, alpha2: f64) -> Verdict {
    let score = gate_score(kappa, alpha1, alpha2);
    let mut v = Verdict {
        assumption: Assumption::Gate,
        status: Status::PassWithConstants,
        constants: Constants {
            alpha1: Some(alpha1),
            alpha2: Some(alpha2),
            alpha3: None,
            kappa: Some(kappa),
        },
        witness: None,
        trials: 0,
        margin: -score,
        local_only: false,
        note: None,
        p_exp: 0.0,
        seed: 0,
        mark_samples: 0,
    };
    if score >= 0.0 {
        v.status = Status::FailWithWitness;
        v.margin = score;
        v.witness = Some(Witness::Constants { kappa, alpha1, alpha2 });
        v.note = Some(if kappa > 0.0 && kappa < 0.5 {
            let bound = alpha2 / ((1.0 - 2.0 * kappa) * (1.0 - 2.0 * kappa));
            format!("alpha1 > alpha2/(1-2kappa)^2 violated: {alpha1} <= {bound}")
        } else {
            format!("kappa in (0, 1/2) violated: kappa = {kappa}")
        });
    }
    v
}

/// Nonnegative when the gate fails.
fn gate_score(kappa: f64, alpha1: f64, alpha2: f64) -> f64 {
    if !(kappa > 0.0 && kappa < 0.5) {
        return f64::INFINITY;
    }
    alpha2 / ((1.0 - 2.0 * kappa) * (1.0 - 2.0 * kappa)) - alpha1
}

/// Lipschitz bound of the neutral map, dissipativity through the neutral
/// difference, the diffusion bound, and the theorem gate.
pub fn check_neutral(model: &ModelSpec, sampler: &SegmentPairSampler, trials: usize) -> Result<VerdictSet> {
    let Some(part) = model.neutral_part() else {
        return Err(domain("neutral checks need the neutral class"));
    };
    check_sampler(model, sampler, trials)?;
    let draws = draw(model, sampler, trials, None)?;
    let (pairs, evals): (Vec<_>, Vec<_>) = draws.into_iter().unzip();

    let ratios: Vec<f64> = evals.iter().map(|e| if e.sup > 0.0 { e.neutral / e.sup } else { 0.0 }).collect();
    let (imax, kappa) = ratios
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    if kappa == 0.0 {
        return Err(Error::Contract("neutral map vanishes on every sample; use the retarded class".into()));
    }
    let mut eq13 = Verdict::new(Assumption::Eq13, trials, sampler);
    eq13.constants.kappa = Some(kappa);
    if kappa >= 0.5 || kappa > part.kappa * (1.0 + 1e-9) {
        eq13.status = Status::FailWithWitness;
        eq13.witness = Some(witness_of(&pairs[imax]));
        eq13.margin = kappa;
        eq13.note = Some(format!("sampled Lipschitz ratio {kappa} exceeds declared {} or 1/2", part.kappa));
    } else {
        eq13.status = Status::PassWithConstants;
        eq13.margin = 0.5 - kappa;
    }

    let weight = if kappa < 0.5 { 1.0 / ((1.0 - 2.0 * kappa) * (1.0 - 2.0 * kappa)) } else { 1.0 };
    let samples: Vec<Sample> = evals.iter().map(a2_sample).collect();
    let mut a2 = Verdict::new(Assumption::A2, trials, sampler);
    a2.local_only = sampler.is_bounded();
    let a2 = dissipativity_verdict(a2, &pairs, &samples, weight, true);

    let growth: Vec<(f64, f64)> = evals.iter().map(|e| h2_sample(e, 0.0)).collect();
    let a3 = growth_verdict(Verdict::new(Assumption::A3, trials, sampler), sampler, &pairs, &growth);

    let gate = match (a2.constants.alpha1, a2.constants.alpha2) {
        (Some(a1), Some(a2c)) if a2.status != Status::FailWithWitness => {
            let mut g = neutral_gate(kappa, a1, a2c);
            g.trials = trials;
            g.seed = sampler.seed;
            g
        }
        _ => {
            let mut g = Verdict::new(Assumption::Gate, trials, sampler);
            g.note = Some("no dissipativity constants to test".into());
            g
        }
    };
    Ok(VerdictSet {
        verdicts: vec![eq13, a2, a3, gate],
    })
}

/// Dissipativity and growth bounds with the mark integral; continuous mark
/// laws use `mark_samples` draws per triple and 3-standard-error margins.
pub fn check_jump(model: &ModelSpec, sampler: &SegmentPairSampler, trials: usize, mark_samples: usize) -> Result<VerdictSet> {
    let Some(part) = model.jump_part() else {
        return Err(domain("jump checks need the jump class"));
    };
    if !part.law.has_finite_support() && mark_samples < 2 {
        return Err(domain("continuous mark laws need at least two mark samples"));
    }
    check_sampler(model, sampler, trials)?;
    let draws = draw(model, sampler, trials, Some(mark_samples))?;
    let (pairs, evals): (Vec<_>, Vec<_>) = draws.into_iter().unzip();

    let mut b1 = Verdict::new(Assumption::B1, trials, sampler);
    b1.mark_samples = mark_samples;
    b1.local_only = sampler.is_bounded();
    // Refute with the lower mark bound, fit with the upper one.
    let lower: Vec<Sample> = evals.iter().map(|e| b1_sample(e, false)).collect();
    let upper: Vec<Sample> = evals.iter().map(|e| b1_sample(e, true)).collect();
    let refuted = lower.iter().any(|s| refutation_score(s).is_finite());
    let b1 = if refuted {
        dissipativity_verdict(b1, &pairs, &lower, 1.0, true)
    } else {
        dissipativity_verdict(b1, &pairs, &upper, 1.0, true)
    };

    let mut b2 = Verdict::new(Assumption::B2, trials, sampler);
    b2.mark_samples = mark_samples;
    let growth: Vec<(f64, f64)> = evals.iter().map(b2_sample).collect();
    let b2 = growth_verdict(b2, sampler, &pairs, &growth);
    Ok(VerdictSet { verdicts: vec![b1, b2] })
}

/// Recomputes the violation score of a failing verdict's witness; `None`
/// when there is no witness.
pub fn replay(model: &ModelSpec, v: &Verdict) -> Result<Option<f64>> {
    let Some(w) = &v.witness else { return Ok(None) };
    let (trial, t, phi, psi) = match w {
        Witness::Constants { kappa, alpha1, alpha2 } => return Ok(Some(gate_score(*kappa, *alpha1, *alpha2))),
        Witness::Triple { trial, t, phi, psi } => (*trial, *t, phi.clone(), psi.clone()),
    };
    if phi.dim() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: phi.dim(),
        });
    }
    let pair = SampledPair {
        trial,
        t,
        phi,
        psi,
        scale: 1.0,
    };
    let marks = (model.class() == ModelClass::Jump).then_some((v.seed, v.mark_samples));
    let e = evaluate_pair(model, &pair, marks);
    let ratio = |(lhs, r): (f64, f64)| if r > 0.0 { lhs / r } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(Some(match v.assumption {
        Assumption::H1 => refutation_score(&h1_sample(&e, v.p_exp)),
        Assumption::A2 => refutation_score(&a2_sample(&e)),
        Assumption::B1 => refutation_score(&b1_sample(&e, false)),
        Assumption::H2 => ratio(h2_sample(&e, v.p_exp)),
        Assumption::A3 => ratio(h2_sample(&e, 0.0)),
        Assumption::B2 => ratio(b2_sample(&e)),
        Assumption::Eq13 => {
            if e.sup > 0.0 {
                e.neutral / e.sup
            } else {
                0.0
            }
        }
        Assumption::Gate => return Err(domain("gate witnesses are constants")),
    }))
}
