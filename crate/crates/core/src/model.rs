//! Huber loss, the truncation operator, and the balanced-factorization
//! objective with its exact gradient.
//!
//! The objective is
//!
//! ```text
//! f(X, Y) = (1/2p) Σ_{(i,j)∈Ω} ρ_τ((XYᵀ)_ij − M_ij) + (1/8)‖XᵀX − YᵀY‖²_F
//! ```
//!
//! and `τ = +∞` reduces it to regularized least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{mix_seed, DenseMatrix};

/// Huber loss: `x²/2` inside `[−τ, τ]`, `τ|x| − τ²/2` outside.
pub fn huber_rho(x: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(rho(x, tau))
}

/// Truncation (Winsorization) operator: `clip(x, −τ, τ)`, the derivative of
/// [`huber_rho`].
pub fn psi_tau(x: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(psi(x, tau))
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "Huber threshold must be positive, got {tau}"
        )))
    }
}

#[inline]
pub(crate) fn rho(x: f64, tau: f64) -> f64 {
    let a = x.abs();
    if a <= tau {
        0.5 * x * x
    } else {
        tau * a - 0.5 * tau * tau
    }
}

#[inline]
pub(crate) fn psi(x: f64, tau: f64) -> f64 {
    x.clamp(-tau, tau)
}

/// Huber threshold. `tau = +∞` selects the least-squares loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuberParams {
    pub tau: f64,
}

impl HuberParams {
    pub fn new(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self { tau })
    }

    pub fn least_squares() -> Self {
        Self { tau: f64::INFINITY }
    }

    /// `τ = c_tau · (‖M⋆‖∞ + σ√(n p))`.
    pub fn adaptive(c_tau: f64, m_star_inf: f64, sigma: f64, n: usize, p: f64) -> Result<Self> {
        Self::new(c_tau * (m_star_inf + sigma * (n as f64 * p).sqrt()))
    }

    pub fn is_least_squares(&self) -> bool {
        self.tau.is_infinite()
    }
}

/// Candidate factors with `M = X Yᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
}

impl FactorPair {
    pub fn new(x: DenseMatrix, y: DenseMatrix) -> Result<Self> {
        if x.cols() != y.cols() || x.cols() == 0 {
            return Err(Error::shape(format!(
                "factor ranks differ or are zero: {} vs {}",
                x.cols(),
                y.cols()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn rank(&self) -> usize {
        self.x.cols()
    }

    /// `X Yᵀ`.
    pub fn product(&self) -> DenseMatrix {
        self.x.matmul_t(&self.y).expect("factor ranks agree")
    }

    /// The `(n1 + n2) × r` stack `[X; Y]`.
    pub fn stacked(&self) -> DenseMatrix {
        self.x.vstack(&self.y).expect("factor ranks agree")
    }

    pub fn from_stacked(f: &DenseMatrix, n1: usize) -> Result<Self> {
        if n1 > f.rows() {
            return Err(Error::shape(format!("split at {n1} of {} rows", f.rows())));
        }
        Self::new(f.row_block(0, n1), f.row_block(n1, f.rows()))
    }

    /// `(X Q, Y Q)`.
    pub fn rotate(&self, q: &DenseMatrix) -> Result<Self> {
        Self::new(self.x.matmul(q)?, self.y.matmul(q)?)
    }

    /// `XᵀX − YᵀY`.
    pub fn gram_difference(&self) -> DenseMatrix {
        let xx = self.x.t_matmul(&self.x).expect("square gram");
        let yy = self.y.t_matmul(&self.y).expect("square gram");
        xx.sub(&yy).expect("same rank")
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// One observed entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// The sampled index set Ω with observed values and the nominal rate `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    n1: usize,
    n2: usize,
    rate_p: f64,
    samples: Vec<Sample>,
}

impl ObservationSet {
    /// Samples must be strictly increasing in `(i, j)` and in bounds.
    pub fn new(n1: usize, n2: usize, rate_p: f64, samples: Vec<Sample>) -> Result<Self> {
        if !(rate_p > 0.0 && rate_p <= 1.0) {
            return Err(Error::domain(format!(
                "sampling rate must lie in (0, 1], got {rate_p}"
            )));
        }
        for (k, s) in samples.iter().enumerate() {
            if s.i >= n1 || s.j >= n2 {
                return Err(Error::shape(format!(
                    "sample ({}, {}) outside a {n1}x{n2} matrix",
                    s.i, s.j
                )));
            }
            if !s.value.is_finite() {
                return Err(Error::domain(format!(
                    "non-finite value at ({}, {})",
                    s.i, s.j
                )));
            }
            if k > 0 {
                let prev = samples[k - 1];
                if (prev.i, prev.j) >= (s.i, s.j) {
                    return Err(Error::domain(format!(
                        "samples must be strictly increasing; ({}, {}) follows ({}, {})",
                        s.i, s.j, prev.i, prev.j
                    )));
                }
            }
        }
        Ok(Self {
            n1,
            n2,
            rate_p,
            samples,
        })
    }

    /// Builds Ω from a dense value matrix and a 0/1 mask of the same shape.
    pub fn from_mask(values: &DenseMatrix, mask: &DenseMatrix, rate_p: f64) -> Result<Self> {
        values.check_same_shape(mask)?;
        let mut samples = Vec::new();
        for i in 0..values.rows() {
            for j in 0..values.cols() {
                let m = mask[(i, j)];
                if m == 1.0 {
                    samples.push(Sample {
                        i,
                        j,
                        value: values[(i, j)],
                    });
                } else if m != 0.0 {
                    return Err(Error::domain(format!(
                        "mask entry {m} at ({i}, {j}) is not 0/1"
                    )));
                }
            }
        }
        Self::new(values.rows(), values.cols(), rate_p, samples)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn rate_p(&self) -> f64 {
        self.rate_p
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `|Ω| / (n1 n2)`.
    pub fn empirical_rate(&self) -> f64 {
        self.samples.len() as f64 / (self.n1 * self.n2) as f64
    }

    /// 0/1 indicator of Ω.
    pub fn mask(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n1, self.n2);
        for s in &self.samples {
            m[(s.i, s.j)] = 1.0;
        }
        m
    }

    /// Observed values at Ω, zero elsewhere.
    pub fn values(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n1, self.n2);
        for s in &self.samples {
            m[(s.i, s.j)] = s.value;
        }
        m
    }

    /// Order-sensitive hash of the indices, values and rate.
    pub fn fingerprint(&self) -> u64 {
        let mut words = Vec::with_capacity(3 * self.samples.len() + 3);
        words.extend([self.n1 as u64, self.n2 as u64, self.rate_p.to_bits()]);
        for s in &self.samples {
            words.extend([s.i as u64, s.j as u64, s.value.to_bits()]);
        }
        mix_seed(&words)
    }

    fn check_factors(&self, f: &FactorPair) -> Result<()> {
        if f.x.rows() != self.n1 || f.y.rows() != self.n2 {
            return Err(Error::shape(format!(
                "factors {}x{} / {}x{} do not match observations of a {}x{} matrix",
                f.x.rows(),
                f.x.cols(),
                f.y.rows(),
                f.y.cols(),
                self.n1,
                self.n2
            )));
        }
        Ok(())
    }
}

/// Which line a leave-one-out loss replaces with clean ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeaveOut {
    /// Zero-based row index.
    Row(usize),
    /// Zero-based column index.
    Column(usize),
}

impl LeaveOut {
    /// Decodes the one-based index `l ∈ [1, n1 + n2]`: `l ≤ n1` is row `l`,
    /// larger values are column `l − n1`.
    pub fn from_index(l: usize, n1: usize, n2: usize) -> Result<Self> {
        match l {
            0 => Err(Error::domain("leave-one-out index is one-based")),
            l if l <= n1 => Ok(LeaveOut::Row(l - 1)),
            l if l <= n1 + n2 => Ok(LeaveOut::Column(l - n1 - 1)),
            l => Err(Error::domain(format!(
                "leave-one-out index {l} outside [1, {}]",
                n1 + n2
            ))),
        }
    }

    pub fn index(&self, n1: usize) -> usize {
        match *self {
            LeaveOut::Row(i) => i + 1,
            LeaveOut::Column(j) => n1 + j + 1,
        }
    }

    pub(crate) fn excludes(&self, i: usize, j: usize) -> bool {
        match *self {
            LeaveOut::Row(l) => i == l,
            LeaveOut::Column(l) => j == l,
        }
    }

    pub(crate) fn check(&self, n1: usize, n2: usize) -> Result<()> {
        let ok = match *self {
            LeaveOut::Row(i) => i < n1,
            LeaveOut::Column(j) => j < n2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{self:?} outside a {n1}x{n2} matrix"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Term {
    i: usize,
    j: usize,
    target: f64,
    weight: f64,
}

/// Weighted residual terms `Σ w · ρ_τ((XYᵀ)_ij − target)` of a data term.
///
/// The standard objective weights every observed entry by `1/2p`; a
/// leave-one-out loss drops the observations of one line and adds that
/// whole line of the ground truth with weight `1/2`.
#[derive(Clone, Debug)]
pub struct LossTerms {
    n1: usize,
    n2: usize,
    terms: Vec<Term>,
}

impl LossTerms {
    pub fn standard(obs: &ObservationSet) -> Self {
        let weight = 0.5 / obs.rate_p;
        Self {
            n1: obs.n1,
            n2: obs.n2,
            terms: obs
                .samples
                .iter()
                .map(|s| Term {
                    i: s.i,
                    j: s.j,
                    target: s.value,
                    weight,
                })
                .collect(),
        }
    }

    pub fn leave_one_out(
        obs: &ObservationSet,
        truth: &DenseMatrix,
        leave: LeaveOut,
    ) -> Result<Self> {
        if truth.shape() != (obs.n1, obs.n2) {
            return Err(Error::shape(format!(
                "ground truth {}x{} vs observations {}x{}",
                truth.rows(),
                truth.cols(),
                obs.n1,
                obs.n2
            )));
        }
        leave.check(obs.n1, obs.n2)?;
        let weight = 0.5 / obs.rate_p;
        let mut terms: Vec<Term> = obs
            .samples
            .iter()
            .filter(|s| !leave.excludes(s.i, s.j))
            .map(|s| Term {
                i: s.i,
                j: s.j,
                target: s.value,
                weight,
            })
            .collect();
        let clean = |i: usize, j: usize| Term {
            i,
            j,
            target: truth[(i, j)],
            weight: 0.5,
        };
        match leave {
            LeaveOut::Row(l) => terms.extend((0..obs.n2).map(|j| clean(l, j))),
            LeaveOut::Column(l) => terms.extend((0..obs.n1).map(|i| clean(i, l))),
        }
        Ok(Self {
            n1: obs.n1,
            n2: obs.n2,
            terms,
        })
    }

    fn check_factors(&self, f: &FactorPair) -> Result<()> {
        if f.x.rows() != self.n1 || f.y.rows() != self.n2 || f.x.cols() != f.y.cols() {
            return Err(Error::shape(format!(
                "factors {}x{} / {}x{} do not match a {}x{} loss",
                f.x.rows(),
                f.x.cols(),
                f.y.rows(),
                f.y.cols(),
                self.n1,
                self.n2
            )));
        }
        Ok(())
    }

    /// Objective value: data term plus balancing regularizer.
    pub fn value(&self, f: &FactorPair, params: HuberParams) -> Result<f64> {
        self.check_factors(f)?;
        let tau = params.tau;
        let data: f64 = self
            .terms
            .iter()
            .map(|t| t.weight * rho(entry(f, t.i, t.j) - t.target, tau))
            .sum();
        Ok(data + 0.125 * f.gram_difference().sum_sq())
    }

    /// Exact gradient `(∇_X f, ∇_Y f)`.
    pub fn gradient(&self, f: &FactorPair, params: HuberParams) -> Result<FactorPair> {
        self.value_and_gradient(f, params).map(|(_, g)| g)
    }

    /// Objective value and gradient from one pass over the residuals.
    pub fn value_and_gradient(
        &self,
        f: &FactorPair,
        params: HuberParams,
    ) -> Result<(f64, FactorPair)> {
        self.check_factors(f)?;
        let tau = params.tau;
        let r = f.rank();
        let mut gx = DenseMatrix::zeros(f.x.rows(), r);
        let mut gy = DenseMatrix::zeros(f.y.rows(), r);
        let mut data = 0.0;
        for t in &self.terms {
            let resid = entry(f, t.i, t.j) - t.target;
            data += t.weight * rho(resid, tau);
            let c = t.weight * psi(resid, tau);
            if c == 0.0 {
                continue;
            }
            for (g, &y) in gx.row_mut(t.i).iter_mut().zip(f.y.row(t.j)) {
                *g += c * y;
            }
            for (g, &x) in gy.row_mut(t.j).iter_mut().zip(f.x.row(t.i)) {
                *g += c * x;
            }
        }
        let diff = f.gram_difference();
        gx.add_scaled(0.5, &f.x.matmul(&diff)?)?;
        gy.add_scaled(-0.5, &f.y.matmul(&diff)?)?;
        Ok((data + 0.125 * diff.sum_sq(), FactorPair::new(gx, gy)?))
    }
}

#[inline]
fn entry(f: &FactorPair, i: usize, j: usize) -> f64 {
    f.x.row(i).iter().zip(f.y.row(j)).map(|(a, b)| a * b).sum()
}

/// The Huber objective `f(X, Y)`.
pub fn objective(f: &FactorPair, obs: &ObservationSet, params: HuberParams) -> Result<f64> {
    obs.check_factors(f)?;
    LossTerms::standard(obs).value(f, params)
}

/// Exact gradient of [`objective`].
pub fn gradient(f: &FactorPair, obs: &ObservationSet, params: HuberParams) -> Result<FactorPair> {
    obs.check_factors(f)?;
    LossTerms::standard(obs).gradient(f, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    use crate::matcore::RngStream;

    #[test]
    fn huber_branches() {
        assert_eq!(huber_rho(0.5, 1.0).unwrap(), 0.125);
        assert_eq!(huber_rho(2.0, 1.0).unwrap(), 1.5);
        for tau in [0.1, 1.0, 7.5] {
            let half = tau * tau / 2.0;
            assert_eq!(huber_rho(tau, tau).unwrap(), half);
            assert_eq!(huber_rho(-tau, tau).unwrap(), half);
            // the linear branch evaluated at the knot
            assert_eq!(tau * tau - half, half);
        }
    }

    #[test]
    fn psi_clips() {
        assert_eq!(psi_tau(0.3, 1.0).unwrap(), 0.3);
        assert_eq!(psi_tau(-5.0, 1.0).unwrap(), -1.0);
        assert_eq!(psi_tau(1e300, f64::INFINITY).unwrap(), 1e300);
    }

    #[test]
    fn nonpositive_tau_is_domain_error() {
        for tau in [0.0, -1.0, f64::NAN] {
            assert!(matches!(huber_rho(1.0, tau), Err(Error::Domain(_))));
            assert!(matches!(psi_tau(1.0, tau), Err(Error::Domain(_))));
            assert!(HuberParams::new(tau).is_err());
        }
    }

    #[test]
    fn psi_matches_finite_difference_of_rho() {
        let mut rng = RngStream::new(11, 0);
        let h = 1e-6;
        for _ in 0..200 {
            let tau = 0.1 + 3.0 * rng.random::<f64>();
            let x = 8.0 * (rng.random::<f64>() - 0.5);
            let fd = (rho(x + h, tau) - rho(x - h, tau)) / (2.0 * h);
            assert!((fd - psi(x, tau)).abs() < 1e-6, "x={x} tau={tau}");
        }
    }

    proptest! {
        #[test]
        fn huber_shape_properties(x in -1e3f64..1e3, tau in 1e-3f64..1e2) {
            prop_assert_eq!(rho(x, tau), rho(-x, tau));
            prop_assert_eq!(psi(x, tau), -psi(-x, tau));
            prop_assert!(psi(x, tau).abs() <= tau);
            let quad = 0.5 * x * x;
            prop_assert!(rho(x, tau) <= quad);
            if x.abs() <= tau {
                prop_assert_eq!(rho(x, tau), quad);
            } else {
                prop_assert!(rho(x, tau) < quad);
            }
        }
    }

    #[test]
    fn single_observation_hand_value() {
        let obs = ObservationSet::new(
            1,
            1,
            1.0,
            vec![Sample {
                i: 0,
                j: 0,
                value: 0.0,
            }],
        )
        .unwrap();
        let f = FactorPair::new(
            DenseMatrix::from_rows(&[[1.0]]).unwrap(),
            DenseMatrix::from_rows(&[[2.0]]).unwrap(),
        )
        .unwrap();
        let v = objective(&f, &obs, HuberParams::new(10.0).unwrap()).unwrap();
        assert_eq!(v, 2.125);
    }

    #[test]
    fn observation_set_validation() {
        let s = |i, j| Sample { i, j, value: 1.0 };
        assert!(ObservationSet::new(2, 2, 0.0, vec![]).is_err());
        assert!(ObservationSet::new(2, 2, 1.5, vec![]).is_err());
        assert!(ObservationSet::new(2, 2, 0.5, vec![s(2, 0)]).is_err());
        assert!(ObservationSet::new(2, 2, 0.5, vec![s(0, 1), s(0, 1)]).is_err());
        assert!(ObservationSet::new(2, 2, 0.5, vec![s(1, 0), s(0, 1)]).is_err());
        assert!(ObservationSet::new(2, 2, 0.5, vec![s(0, 1), s(1, 0)]).is_ok());
    }

    #[test]
    fn mask_round_trip() {
        let values = DenseMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64);
        let mask = DenseMatrix::from_fn(3, 4, |i, j| ((i + j) % 2) as f64);
        let obs = ObservationSet::from_mask(&values, &mask, 0.5).unwrap();
        assert_eq!(obs.len(), 6);
        assert_eq!(obs.mask(), mask);
        assert!(ObservationSet::from_mask(&values, &mask.scale(2.0), 0.5).is_err());
    }

    #[test]
    fn leave_out_index_decoding() {
        assert_eq!(LeaveOut::from_index(1, 5, 4).unwrap(), LeaveOut::Row(0));
        assert_eq!(LeaveOut::from_index(5, 5, 4).unwrap(), LeaveOut::Row(4));
        assert_eq!(LeaveOut::from_index(6, 5, 4).unwrap(), LeaveOut::Column(0));
        assert_eq!(LeaveOut::from_index(9, 5, 4).unwrap(), LeaveOut::Column(3));
        assert!(LeaveOut::from_index(0, 5, 4).is_err());
        assert!(LeaveOut::from_index(10, 5, 4).is_err());
        assert_eq!(LeaveOut::Column(3).index(5), 9);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let obs = ObservationSet::new(3, 3, 1.0, vec![]).unwrap();
        let f = FactorPair::new(DenseMatrix::zeros(2, 1), DenseMatrix::zeros(3, 1)).unwrap();
        assert!(matches!(
            objective(&f, &obs, HuberParams::least_squares()),
            Err(Error::Shape(_))
        ));
        assert!(FactorPair::new(DenseMatrix::zeros(2, 1), DenseMatrix::zeros(2, 2)).is_err());
    }
}
