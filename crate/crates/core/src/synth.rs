//! Synthetic ground truth, noise laws and Bernoulli sampling of Ω.

use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{inf_norm, DenseMatrix, RngStream};
use crate::metrics::incoherence_mu;
use crate::model::{FactorPair, LeaveOut, ObservationSet, Sample};

/// Low-rank instance `M⋆ = U⋆ Σ⋆ V⋆ᵀ` with known spectrum.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub u_star: DenseMatrix,
    pub v_star: DenseMatrix,
    pub sigma_star: Vec<f64>,
    pub m_star: DenseMatrix,
    /// Incoherence: the larger of `μ(U⋆)` and `μ(V⋆)`.
    pub mu: f64,
    pub kappa: f64,
    pub factors_star: FactorPair,
}

impl GroundTruth {
    pub fn n(&self) -> usize {
        self.m_star.rows()
    }

    pub fn rank(&self) -> usize {
        self.sigma_star.len()
    }

    pub fn m_star_inf(&self) -> f64 {
        inf_norm(&self.m_star).expect("non-empty ground truth")
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_star[0]
    }
}

/// `r` values equally spaced from `r` down to `1`.
pub fn equidistant_spectrum(r: usize) -> Vec<f64> {
    if r == 1 {
        return vec![1.0];
    }
    let top = r as f64;
    (0..r)
        .map(|i| top - (top - 1.0) * i as f64 / (r - 1) as f64)
        .collect()
}

/// Random orthonormal `n × r` basis: i.i.d. standard normals, then
/// Gram-Schmidt with one reorthogonalization pass.
pub fn random_orthonormal(n: usize, r: usize, rng: &mut RngStream) -> Result<DenseMatrix> {
    if r == 0 || r > n {
        return Err(Error::shape(format!(
            "cannot draw {r} orthonormal columns in dimension {n}"
        )));
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(r);
    for _ in 0..r {
        let mut v: Vec<f64> = (0..n)
            .map(|_| rng.sample(rand_distr::StandardNormal))
            .collect();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        cols.push(v);
    }
    Ok(DenseMatrix::from_columns(n, &cols))
}

/// Square rank-`r` ground truth with Gaussian-then-orthonormalized singular
/// subspaces and the equidistant spectrum `r, …, 1`.
pub fn make_ground_truth(n: usize, r: usize, rng: &mut RngStream) -> Result<GroundTruth> {
    if r == 0 || r > n {
        return Err(Error::shape(format!("rank {r} out of range for n = {n}")));
    }
    let u_star = random_orthonormal(n, r, rng)?;
    let v_star = random_orthonormal(n, r, rng)?;
    let sigma_star = equidistant_spectrum(r);
    let m_star = u_star.scale_columns(&sigma_star)?.matmul_t(&v_star)?;
    let roots: Vec<f64> = sigma_star.iter().map(|s| s.sqrt()).collect();
    let factors_star =
        FactorPair::new(u_star.scale_columns(&roots)?, v_star.scale_columns(&roots)?)?;
    let mu = incoherence_mu(&u_star)?.max(incoherence_mu(&v_star)?);
    let kappa = sigma_star[0] / sigma_star[r - 1];
    Ok(GroundTruth {
        u_star,
        v_star,
        sigma_star,
        m_star,
        mu,
        kappa,
        factors_star,
    })
}

/// Zero-mean noise law with scale `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian {
        sigma: f64,
    },
    /// `sigma` times a standard Student's t with `nu` degrees of freedom;
    /// the variance is `sigma² nu / (nu − 2)`.
    StudentT {
        nu: f64,
        sigma: f64,
    },
    /// `±sigma/√delta` with probability `delta/2` each, else `0`.
    Trinomial {
        delta: f64,
        sigma: f64,
    },
    /// `sigma √((1−delta)/delta)` with probability `delta`, else
    /// `−sigma √(delta/(1−delta))`.
    AsymTwoPoint {
        delta: f64,
        sigma: f64,
    },
    None,
}

impl NoiseModel {
    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma }
            | NoiseModel::StudentT { sigma, .. }
            | NoiseModel::Trinomial { sigma, .. }
            | NoiseModel::AsymTwoPoint { sigma, .. } => sigma,
            NoiseModel::None => 0.0,
        }
    }

    pub fn family(&self) -> NoiseFamily {
        match *self {
            NoiseModel::Gaussian { .. } => NoiseFamily::Gaussian,
            NoiseModel::StudentT { nu, .. } => NoiseFamily::StudentT { nu },
            NoiseModel::Trinomial { delta, .. } => NoiseFamily::Trinomial { delta },
            NoiseModel::AsymTwoPoint { delta, .. } => NoiseFamily::AsymTwoPoint { delta },
            NoiseModel::None => NoiseFamily::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigma = self.sigma();
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!(
                "noise scale must be finite and ≥ 0, got {sigma}"
            )));
        }
        match *self {
            NoiseModel::StudentT { nu, .. } if !(nu > 2.0 && nu.is_finite()) => Err(Error::domain(
                format!("Student's t needs finite nu > 2, got {nu}"),
            )),
            NoiseModel::Trinomial { delta, .. } | NoiseModel::AsymTwoPoint { delta, .. }
                if !(delta > 0.0 && delta < 1.0) =>
            {
                Err(Error::domain(format!(
                    "delta must lie in (0, 1), got {delta}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Exact support and probabilities for the discrete laws.
    pub fn support(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            NoiseModel::Trinomial { delta, sigma } => {
                let a = sigma / delta.sqrt();
                Some(vec![
                    (a, delta / 2.0),
                    (0.0, 1.0 - delta),
                    (-a, delta / 2.0),
                ])
            }
            NoiseModel::AsymTwoPoint { delta, sigma } => Some(vec![
                (sigma * ((1.0 - delta) / delta).sqrt(), delta),
                (-sigma * (delta / (1.0 - delta)).sqrt(), 1.0 - delta),
            ]),
            NoiseModel::None => Some(vec![(0.0, 1.0)]),
            _ => None,
        }
    }

    /// Analytic variance, `None` when infinite or undefined.
    pub fn variance(&self) -> Option<f64> {
        let s2 = self.sigma().powi(2);
        match *self {
            NoiseModel::StudentT { nu, .. } if nu > 2.0 => Some(s2 * nu / (nu - 2.0)),
            NoiseModel::StudentT { .. } => None,
            NoiseModel::None => Some(0.0),
            _ => Some(s2),
        }
    }

    pub fn sampler(&self) -> Result<NoiseSampler> {
        self.validate()?;
        let kind = match *self {
            NoiseModel::Gaussian { sigma } => SamplerKind::Gaussian(
                Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?,
            ),
            NoiseModel::StudentT { nu, sigma } => SamplerKind::StudentT(
                StudentT::new(nu).map_err(|e| Error::domain(e.to_string()))?,
                sigma,
            ),
            NoiseModel::Trinomial { delta, sigma } => SamplerKind::Trinomial {
                delta,
                magnitude: sigma / delta.sqrt(),
            },
            NoiseModel::AsymTwoPoint { delta, sigma } => SamplerKind::TwoPoint {
                delta,
                high: sigma * ((1.0 - delta) / delta).sqrt(),
                low: -sigma * (delta / (1.0 - delta)).sqrt(),
            },
            NoiseModel::None => SamplerKind::Zero,
        };
        Ok(NoiseSampler { kind })
    }
}

/// A noise law without its scale; combined with a σ grid by the bench.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    StudentT { nu: f64 },
    Trinomial { delta: f64 },
    AsymTwoPoint { delta: f64 },
    None,
}

impl NoiseFamily {
    pub fn at(&self, sigma: f64) -> NoiseModel {
        match *self {
            NoiseFamily::Gaussian => NoiseModel::Gaussian { sigma },
            NoiseFamily::StudentT { nu } => NoiseModel::StudentT { nu, sigma },
            NoiseFamily::Trinomial { delta } => NoiseModel::Trinomial { delta, sigma },
            NoiseFamily::AsymTwoPoint { delta } => NoiseModel::AsymTwoPoint { delta, sigma },
            NoiseFamily::None => NoiseModel::None,
        }
    }

    /// Short label used in result tables, e.g. `student_t(2.1)`.
    pub fn name(&self) -> String {
        match *self {
            NoiseFamily::Gaussian => "gaussian".into(),
            NoiseFamily::StudentT { nu } => format!("student_t({nu})"),
            NoiseFamily::Trinomial { delta } => format!("trinomial({delta})"),
            NoiseFamily::AsymTwoPoint { delta } => format!("asym_two_point({delta})"),
            NoiseFamily::None => "none".into(),
        }
    }
}

/// Validated, ready-to-draw form of a [`NoiseModel`].
#[derive(Clone, Debug)]
pub struct NoiseSampler {
    kind: SamplerKind,
}

#[derive(Clone, Debug)]
enum SamplerKind {
    Gaussian(Normal<f64>),
    StudentT(StudentT<f64>, f64),
    Trinomial { delta: f64, magnitude: f64 },
    TwoPoint { delta: f64, high: f64, low: f64 },
    Zero,
}

impl NoiseSampler {
    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match &self.kind {
            SamplerKind::Gaussian(d) => d.sample(rng),
            SamplerKind::StudentT(d, sigma) => sigma * d.sample(rng),
            SamplerKind::Trinomial { delta, magnitude } => {
                let u: f64 = rng.random();
                if u < delta / 2.0 {
                    *magnitude
                } else if u < *delta {
                    -*magnitude
                } else {
                    0.0
                }
            }
            SamplerKind::TwoPoint { delta, high, low } => {
                if rng.random::<f64>() < *delta {
                    *high
                } else {
                    *low
                }
            }
            SamplerKind::Zero => 0.0,
        }
    }
}

/// One draw from `model`.
pub fn draw_noise(model: &NoiseModel, rng: &mut RngStream) -> Result<f64> {
    Ok(model.sampler()?.draw(rng))
}

/// Includes each entry independently with probability `p` and observes
/// `M⋆_ij + ε_ij`.
pub fn sample_observations(
    truth: &GroundTruth,
    p: f64,
    noise: &NoiseModel,
    rng: &mut RngStream,
) -> Result<ObservationSet> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!(
            "sampling rate must lie in (0, 1], got {p}"
        )));
    }
    let sampler = noise.sampler()?;
    let m = &truth.m_star;
    let mut samples = Vec::with_capacity((p * (m.rows() * m.cols()) as f64 * 1.1) as usize);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if rng.random::<f64>() < p {
                samples.push(Sample {
                    i,
                    j,
                    value: m[(i, j)] + sampler.draw(rng),
                });
            }
        }
    }
    ObservationSet::new(m.rows(), m.cols(), p, samples)
}

/// Redraws the noise of every observed entry on one row or column, keeping
/// Ω and all other values unchanged.
pub fn resample_line_noise(
    obs: &ObservationSet,
    truth: &DenseMatrix,
    leave: LeaveOut,
    noise: &NoiseModel,
    rng: &mut RngStream,
) -> Result<ObservationSet> {
    let sampler = noise.sampler()?;
    let samples = obs
        .samples()
        .iter()
        .map(|s| {
            if leave.excludes(s.i, s.j) {
                Sample {
                    value: truth[(s.i, s.j)] + sampler.draw(rng),
                    ..*s
                }
            } else {
                *s
            }
        })
        .collect();
    ObservationSet::new(obs.n1(), obs.n2(), obs.rate_p(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_rule() {
        assert_eq!(equidistant_spectrum(1), vec![1.0]);
        assert_eq!(equidistant_spectrum(5), vec![5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(equidistant_spectrum(3), vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn ground_truth_structure() {
        let mut rng = RngStream::new(1, 0);
        let gt = make_ground_truth(30, 1, &mut rng).unwrap();
        assert_eq!(gt.sigma_star, vec![1.0]);
        assert_eq!(gt.kappa, 1.0);
        let gt = make_ground_truth(30, 5, &mut rng).unwrap();
        assert_eq!(gt.kappa, 5.0);
        let recon = gt.factors_star.product();
        assert!(recon.sub(&gt.m_star).unwrap().sum_sq().sqrt() < 1e-10);
        let bal = crate::metrics::imbalance(&gt.factors_star);
        assert!(bal < 1e-12);
        assert!(matches!(
            make_ground_truth(3, 4, &mut rng),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn discrete_laws_have_exact_moments() {
        for model in [
            NoiseModel::Trinomial {
                delta: 0.01,
                sigma: 1e-3,
            },
            NoiseModel::AsymTwoPoint {
                delta: 1e-4,
                sigma: 2.0,
            },
            NoiseModel::AsymTwoPoint {
                delta: 0.3,
                sigma: 0.5,
            },
        ] {
            let support = model.support().unwrap();
            let total: f64 = support.iter().map(|(_, p)| p).sum();
            let mean: f64 = support.iter().map(|(x, p)| x * p).sum();
            let var: f64 = support.iter().map(|(x, p)| x * x * p).sum();
            assert!((total - 1.0).abs() < 1e-15);
            assert!(
                mean.abs() < 1e-15 * model.sigma().max(1.0),
                "{model:?}: {mean}"
            );
            assert!((var - model.sigma().powi(2)).abs() < 1e-12 * model.sigma().powi(2));
        }
    }

    #[test]
    fn asym_support_values() {
        let sigma = 1.7;
        let s = NoiseModel::AsymTwoPoint { delta: 1e-4, sigma }
            .support()
            .unwrap();
        assert!((s[0].0 - sigma * 9999f64.sqrt()).abs() < 1e-12);
        assert!((s[1].0 + sigma / 9999f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn trinomial_draws_hit_support_only() {
        let model = NoiseModel::Trinomial {
            delta: 0.01,
            sigma: 1e-3,
        };
        let sampler = model.sampler().unwrap();
        let mut rng = RngStream::new(5, 0);
        let draws: Vec<f64> = (0..200_000).map(|_| sampler.draw(&mut rng)).collect();
        let nonzero: Vec<f64> = draws.iter().copied().filter(|&x| x != 0.0).collect();
        assert!(nonzero.iter().all(|x| x.abs() == 1e-3 / 0.1));
        let frac = nonzero.len() as f64 / draws.len() as f64;
        let sd = (0.01f64 * 0.99 / 200_000.0).sqrt();
        assert!((frac - 0.01).abs() < 4.0 * sd, "{frac}");
    }

    #[test]
    fn invalid_parameters() {
        let mut rng = RngStream::new(0, 0);
        for bad in [
            NoiseModel::Gaussian { sigma: -1.0 },
            NoiseModel::StudentT {
                nu: 2.0,
                sigma: 1.0,
            },
            NoiseModel::Trinomial {
                delta: 0.0,
                sigma: 1.0,
            },
            NoiseModel::AsymTwoPoint {
                delta: 1.0,
                sigma: 1.0,
            },
        ] {
            assert!(matches!(draw_noise(&bad, &mut rng), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn full_noiseless_sampling_copies_truth() {
        let mut rng = RngStream::new(2, 0);
        let gt = make_ground_truth(12, 2, &mut rng).unwrap();
        let obs = sample_observations(&gt, 1.0, &NoiseModel::None, &mut rng).unwrap();
        assert_eq!(obs.len(), 144);
        assert_eq!(obs.values(), gt.m_star);
    }

    #[test]
    fn line_resampling_only_touches_that_line() {
        let mut rng = RngStream::new(4, 0);
        let gt = make_ground_truth(10, 2, &mut rng).unwrap();
        let noise = NoiseModel::Gaussian { sigma: 0.1 };
        let obs = sample_observations(&gt, 0.5, &noise, &mut rng).unwrap();
        let re = resample_line_noise(&obs, &gt.m_star, LeaveOut::Row(3), &noise, &mut rng).unwrap();
        for (a, b) in obs.samples().iter().zip(re.samples()) {
            assert_eq!((a.i, a.j), (b.i, b.j));
            if a.i == 3 {
                assert_ne!(a.value, b.value);
            } else {
                assert_eq!(a.value, b.value);
            }
        }
    }
}
