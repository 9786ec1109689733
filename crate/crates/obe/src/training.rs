//! Channel sampling, pilot training and MMSE channel estimation.
//!
//! Training uses one orthogonal pilot per in-cell user, reused across
//! cells. After correlating with pilot `p`, site `b` observes
//!
//! ```text
//! psi_{b,p} = sum_{k in group p} h_{b,k} + w / sqrt(rho_tr)
//! ```
//!
//! so the observation covariance is `Q_p = sum_{k in group} C_k + I/rho_tr`
//! and the MMSE estimate of user `k`'s channel is `C_k Q_p^{-1} psi_p` with
//! error covariance `C_k - C_k Q_p^{-1} C_k`.

use num_complex::Complex64;
use rand::Rng;

use crate::channel_model::{CovStructure, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{ceye, cr, hermitian_sqrt, hermitize, CMat, CVec, HermSolver};
use crate::rng::standard_complex_vec;

/// One draw of all site-to-user channels: `h[site][user]`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: Vec<Vec<CVec>>,
}

/// Pilot observations after correlation: `psi[site][pilot]`.
#[derive(Debug, Clone)]
pub struct TrainingObservation {
    pub psi: Vec<Vec<CVec>>,
}

/// MMSE estimate of one channel.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub mean: CVec,
    pub error_cov: CMat,
}

/// Observation covariance `Q_p` at one site.
pub fn observation_covariance(scenario: &Scenario, site: usize, pilot: usize) -> Result<CMat> {
    let members = scenario.group_members(pilot);
    if members.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "pilot {pilot} has no users"
        )));
    }
    let mut q = ceye(scenario.m) * cr(1.0 / scenario.rho_tr);
    for &k in &members {
        q += scenario.covariances[site][k].matrix();
    }
    Ok(q)
}

/// Precomputed coloring factors for drawing channels of one scenario.
///
/// Dense covariances use a Hermitian eigenvalue square root (slightly
/// negative eigenvalues are clipped to zero; anything below
/// `-1e-8 * trace/M` is an error). Circulant and diagonal structures use
/// their spectral factor directly.
pub struct ChannelSampler {
    factors: Vec<Vec<CMat>>,
    m: usize,
}

impl ChannelSampler {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let mut factors = Vec::with_capacity(scenario.n_sites());
        for site in 0..scenario.n_sites() {
            let mut row = Vec::with_capacity(scenario.n_users());
            for u in 0..scenario.n_users() {
                let cov = &scenario.covariances[site][u];
                let factor = match cov.structure() {
                    CovStructure::DiagonalIdentity => {
                        let mut b = CMat::zeros(scenario.m, scenario.m);
                        for i in 0..scenario.m {
                            let v = cov.matrix()[(i, i)].re;
                            if v < 0.0 {
                                return Err(Error::NotPositiveSemidefinite {
                                    min_eig: v,
                                    tol: 0.0,
                                });
                            }
                            b[(i, i)] = cr(v.sqrt());
                        }
                        b
                    }
                    CovStructure::Circulant { spectrum } => circulant_from_eigs(
                        &spectrum
                            .iter()
                            .map(|&x| x.max(0.0).sqrt())
                            .collect::<Vec<_>>(),
                    ),
                    CovStructure::Dense => {
                        let tol = 1e-8 * cov.trace().abs() / scenario.m as f64;
                        hermitian_sqrt(cov.matrix(), tol)?
                    }
                };
                row.push(factor);
            }
            factors.push(row);
        }
        Ok(Self {
            factors,
            m: scenario.m,
        })
    }

    /// Draw one channel realization. Per site, per user: `m` standard
    /// complex Gaussians colored by the user's factor.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> ChannelRealization {
        let h = self
            .factors
            .iter()
            .map(|row| {
                row.iter()
                    .map(|b| b * standard_complex_vec(rng, self.m))
                    .collect()
            })
            .collect();
        ChannelRealization { h }
    }
}

/// Materialize a circulant matrix from its DFT-grid eigenvalues.
fn circulant_from_eigs(eigs: &[f64]) -> CMat {
    let m = eigs.len();
    let col: Vec<Complex64> = (0..m)
        .map(|r| {
            let mut acc = Complex64::ZERO;
            for (idx, &lam) in eigs.iter().enumerate() {
                let phase = 2.0 * std::f64::consts::PI * ((r * idx) % m) as f64 / m as f64;
                acc += Complex64::from_polar(lam, phase);
            }
            acc / cr(m as f64)
        })
        .collect();
    CMat::from_fn(m, m, |r, c| col[(r + m - c) % m])
}

/// One-shot channel draw for a scenario. Prefer [`ChannelSampler`] when
/// drawing repeatedly; this rebuilds the coloring factors every call.
pub fn sample_channels<R: Rng>(scenario: &Scenario, rng: &mut R) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(scenario)?.sample(rng))
}

/// Correlate the pilot block against each pilot sequence at every site.
/// Noise is drawn per (site, pilot) in index order.
pub fn ls_observations<R: Rng>(
    channels: &ChannelRealization,
    scenario: &Scenario,
    rng: &mut R,
) -> TrainingObservation {
    let noise_scale = cr(1.0 / scenario.rho_tr.sqrt());
    let psi = (0..scenario.n_sites())
        .map(|site| {
            (0..scenario.n_pilots)
                .map(|pilot| {
                    let mut acc = standard_complex_vec(rng, scenario.m) * noise_scale;
                    for &k in &scenario.group_members(pilot) {
                        acc += &channels.h[site][k];
                    }
                    acc
                })
                .collect()
        })
        .collect();
    TrainingObservation { psi }
}

/// MMSE estimation operators for every user at one site.
pub struct EstimatorBank {
    site: usize,
    /// `W_k = C_k Q_{p(k)}^{-1}` per user.
    w: Vec<CMat>,
    /// Error covariance per user.
    err: Vec<CMat>,
    pilots: Vec<usize>,
}

impl EstimatorBank {
    pub fn new(scenario: &Scenario, site: usize) -> Result<Self> {
        let n = scenario.n_users();
        let mut w = vec![CMat::zeros(0, 0); n];
        let mut err = vec![CMat::zeros(0, 0); n];
        for pilot in 0..scenario.n_pilots {
            let q = observation_covariance(scenario, site, pilot)?;
            let solver = HermSolver::new(&q)?;
            for &k in &scenario.group_members(pilot) {
                let c = scenario.covariances[site][k].matrix();
                // C Q^{-1} = (Q^{-1} C)^H for Hermitian C and Q.
                let wk = solver.solve_mat(c).adjoint();
                let e = hermitize(&(c - &wk * c));
                w[k] = wk;
                err[k] = e;
            }
        }
        Ok(Self {
            site,
            w,
            err,
            pilots: (0..n).map(|u| u % scenario.users_per_cell).collect(),
        })
    }

    pub fn site(&self) -> usize {
        self.site
    }

    /// Estimation operator `W_k` of one user.
    pub fn operator(&self, user: usize) -> &CMat {
        &self.w[user]
    }

    /// Estimation error covariance of one user.
    pub fn error_cov(&self, user: usize) -> &CMat {
        &self.err[user]
    }

    /// Estimate one user's channel from the site's observations.
    pub fn estimate(&self, obs: &TrainingObservation, user: usize) -> CVec {
        &self.w[user] * &obs.psi[self.site][self.pilots[user]]
    }

    /// Estimates for all users at this site.
    pub fn estimate_all(&self, obs: &TrainingObservation) -> Vec<CVec> {
        (0..self.w.len()).map(|u| self.estimate(obs, u)).collect()
    }
}

/// MMSE estimate of one user's channel at one site.
///
/// Convenience wrapper over [`EstimatorBank`] for single calls.
pub fn mmse_channel_estimate(
    obs: &TrainingObservation,
    scenario: &Scenario,
    site: usize,
    user: usize,
) -> Result<ChannelEstimate> {
    if user >= scenario.n_users() {
        return Err(Error::InvalidArgument(format!("no user {user}")));
    }
    let bank = EstimatorBank::new(scenario, site)?;
    Ok(ChannelEstimate {
        mean: bank.estimate(obs, user),
        error_cov: bank.err[user].clone(),
    })
}
