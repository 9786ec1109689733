//! SINR analysis for bilinear equalizers.
//!
//! A bilinear equalizer for user `k` applies a statistically chosen
//! transformation `A_k` to the user's pilot observation: `g_k = A_k psi`.
//! Averaging over channels and noise gives the achievable-rate SINR bound
//!
//! ```text
//!                      p_k |tr(C_k A_k)|^2
//! gamma_k(A_k) = --------------------------------------------------
//!                tr(Z A_k Q A_k^H) + sum_{n in group, n != k} p_n |tr(C_n A_k)|^2
//! ```
//!
//! with `Z = I + sum_n p_n C_n` over all users and `Q` the observation
//! covariance of the pilot group. The maximizing transformation admits a
//! closed form whose value only depends on the group's coupling matrix
//!
//! ```text
//! Gamma[n, k] = tr(C_n Z^{-1} C_k Q^{-1}) / M
//! ```
//!
//! This module computes `Gamma` (dense, spectral and limit flavors), the
//! closed-form optimal SINR, its large-array limit, the low-SNR limit, the
//! partial-information variant built on estimated instead of true channels,
//! and the per-realization conditional SINR used by the simulation driver.

use num_complex::Complex64;

use crate::channel_model::{AngularDensity, Basis, CovStructure, CovarianceModel, Scenario};
use crate::equalizers::Transformation;
use crate::error::{Error, Result};
use crate::linalg::{
    ceye, cr, dft_matrix, hermitian_eigenvalues, hermitize, psd_spectral_norm, trace_product, CMat,
    CVec, HermSolver,
};
use crate::training::EstimatorBank;

/// Which model a coupling matrix was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaFlavor {
    /// Finite-size `tr(C_n Z^{-1} C_k Q^{-1}) / M`.
    FiniteM,
    /// Large-array limit of the circulant model (frequency integral).
    CirculantLimit,
    /// Finite-size variant with the estimation-stage `Z` replaced by the
    /// partial-information `Z_tilde = I + sum p_n (C_n - C_n Q^{-1} C_n)`.
    PartialInformation,
}

/// Hermitian positive semidefinite coupling matrix of one pilot group.
#[derive(Debug, Clone)]
pub struct GammaMatrix {
    pub mat: CMat,
    pub flavor: GammaFlavor,
}

impl GammaMatrix {
    pub fn order(&self) -> usize {
        self.mat.nrows()
    }
}

/// Statistics of one pilot group at one site, dense representation.
///
/// `covs` and `powers` follow group order. `z` is the received-signal
/// covariance over all users visible at the site, `q` the group's
/// observation covariance.
pub struct GroupContext {
    pub m: usize,
    pub covs: Vec<CovarianceModel>,
    pub powers: Vec<f64>,
    pub z: CMat,
    pub q: CMat,
    pub z_tilde: Option<CMat>,
    pub spectral: Option<SpectralGroup>,
}

impl GroupContext {
    /// Build a context from explicit covariances: the group itself plus any
    /// number of out-of-group users contributing to `z` only.
    pub fn synthetic(
        group: Vec<(f64, CovarianceModel)>,
        others: &[(f64, &CMat)],
        rho_tr: f64,
    ) -> Result<Self> {
        if group.is_empty() {
            return Err(Error::InvalidArgument("empty pilot group".into()));
        }
        if !(rho_tr.is_finite() && rho_tr > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "training SNR must be positive, got {rho_tr}"
            )));
        }
        let m = group[0].1.order();
        let mut z = ceye(m);
        let mut q = ceye(m) * cr(1.0 / rho_tr);
        for (p, c) in &group {
            if !(p.is_finite() && *p > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "power must be positive, got {p}"
                )));
            }
            if c.order() != m {
                return Err(Error::DimensionMismatch {
                    context: "GroupContext::synthetic",
                    expected: m,
                    got: c.order(),
                });
            }
            z += c.matrix() * cr(*p);
            q += c.matrix();
        }
        for (p, c) in others {
            z += *c * cr(*p);
        }
        let (powers, covs) = group.into_iter().unzip();
        Ok(Self {
            m,
            covs,
            powers,
            z,
            q,
            z_tilde: None,
            spectral: None,
        })
    }

    /// Context of pilot group `pilot` at `site` of a scenario. When every
    /// covariance at the site is circulant, the spectral companion is
    /// attached automatically.
    pub fn from_scenario(scenario: &Scenario, site: usize, pilot: usize) -> Result<Self> {
        let members = scenario.group_members(pilot);
        if members.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "pilot {pilot} has no users"
            )));
        }
        let m = scenario.m;
        let mut z = ceye(m);
        for u in 0..scenario.n_users() {
            z += scenario.covariances[site][u].matrix() * cr(scenario.users[u].power);
        }
        let q = crate::training::observation_covariance(scenario, site, pilot)?;
        let covs: Vec<CovarianceModel> = members
            .iter()
            .map(|&u| scenario.covariances[site][u].clone())
            .collect();
        let powers: Vec<f64> = members.iter().map(|&u| scenario.users[u].power).collect();
        let spectral = SpectralGroup::from_scenario(scenario, site, pilot);
        Ok(Self {
            m,
            covs,
            powers,
            z,
            q,
            z_tilde: None,
            spectral,
        })
    }

    /// Attach the partial-information covariance
    /// `Z_tilde = I + sum_n p_n (C_n - C_n Q_{g(n)}^{-1} C_n)` built from the
    /// estimation-error covariances of every user at the site.
    pub fn attach_partial_information(&mut self, scenario: &Scenario, site: usize) -> Result<()> {
        let bank = EstimatorBank::new(scenario, site)?;
        let mut zt = ceye(scenario.m);
        for u in 0..scenario.n_users() {
            zt += bank.error_cov(u) * cr(scenario.users[u].power);
        }
        self.z_tilde = Some(zt);
        if let Some(sp) = &mut self.spectral {
            sp.attach_partial_information(scenario, site)?;
        }
        Ok(())
    }

    pub fn set_z_tilde(&mut self, z_tilde: CMat) {
        self.z_tilde = Some(z_tilde);
    }

    pub fn group_size(&self) -> usize {
        self.covs.len()
    }
}

/// Spectral (circulant-model) statistics of one pilot group: everything is
/// diagonal on the DFT frequency grid, so coupling matrices reduce to
/// scalar sums. Usable at array sizes where dense algebra is out of reach.
#[derive(Debug, Clone)]
pub struct SpectralGroup {
    pub m: usize,
    /// Eigenvalue grid per group member.
    pub covs: Vec<Vec<f64>>,
    pub powers: Vec<f64>,
    /// Grid of `Z = 1 + sum_n p_n f_n`.
    pub z: Vec<f64>,
    /// Grid of `Q = sum_group f + 1/rho_tr`.
    pub q: Vec<f64>,
    pub z_tilde: Option<Vec<f64>>,
}

impl SpectralGroup {
    /// Build from explicit spectra (group plus out-of-group contributors).
    pub fn synthetic(
        group: Vec<(f64, Vec<f64>)>,
        others: &[(f64, &[f64])],
        rho_tr: f64,
    ) -> Result<Self> {
        if group.is_empty() {
            return Err(Error::InvalidArgument("empty pilot group".into()));
        }
        let m = group[0].1.len();
        let mut z = vec![1.0; m];
        let mut q = vec![1.0 / rho_tr; m];
        for (p, f) in &group {
            if f.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "SpectralGroup::synthetic",
                    expected: m,
                    got: f.len(),
                });
            }
            for i in 0..m {
                z[i] += p * f[i];
                q[i] += f[i];
            }
        }
        for (p, f) in others {
            for i in 0..m {
                z[i] += p * f[i];
            }
        }
        let (powers, covs) = group.into_iter().unzip();
        Ok(Self {
            m,
            covs,
            powers,
            z,
            q,
            z_tilde: None,
        })
    }

    /// Spectral view of a scenario group; `None` unless every covariance at
    /// the site is circulant.
    pub fn from_scenario(scenario: &Scenario, site: usize, pilot: usize) -> Option<Self> {
        let spectrum_of = |u: usize| -> Option<&[f64]> {
            match scenario.covariances[site][u].structure() {
                CovStructure::Circulant { spectrum } => Some(spectrum),
                _ => None,
            }
        };
        let m = scenario.m;
        let mut z = vec![1.0; m];
        for u in 0..scenario.n_users() {
            let f = spectrum_of(u)?;
            let p = scenario.users[u].power;
            for i in 0..m {
                z[i] += p * f[i];
            }
        }
        let members = scenario.group_members(pilot);
        let mut q = vec![1.0 / scenario.rho_tr; m];
        let mut covs = Vec::with_capacity(members.len());
        let mut powers = Vec::with_capacity(members.len());
        for &u in &members {
            let f = spectrum_of(u)?;
            for i in 0..m {
                q[i] += f[i];
            }
            covs.push(f.to_vec());
            powers.push(scenario.users[u].power);
        }
        Some(Self {
            m,
            covs,
            powers,
            z,
            q,
            z_tilde: None,
        })
    }

    fn attach_partial_information(&mut self, scenario: &Scenario, site: usize) -> Result<()> {
        // Error spectra: f - f^2 / q_g, with q_g the user's own group grid.
        let m = scenario.m;
        let mut zt = vec![1.0; m];
        for pilot in 0..scenario.n_pilots {
            let members = scenario.group_members(pilot);
            let mut qg = vec![1.0 / scenario.rho_tr; m];
            for &u in &members {
                if let CovStructure::Circulant { spectrum } =
                    scenario.covariances[site][u].structure()
                {
                    for i in 0..m {
                        qg[i] += spectrum[i];
                    }
                } else {
                    return Err(Error::InvalidArgument(
                        "spectral partial information requires circulant covariances".into(),
                    ));
                }
            }
            for &u in &members {
                if let CovStructure::Circulant { spectrum } =
                    scenario.covariances[site][u].structure()
                {
                    let p = scenario.users[u].power;
                    for i in 0..m {
                        zt[i] += p * (spectrum[i] - spectrum[i] * spectrum[i] / qg[i]);
                    }
                }
            }
        }
        self.z_tilde = Some(zt);
        Ok(())
    }

    fn gamma_with_z(&self, z: &[f64], flavor: GammaFlavor) -> GammaMatrix {
        let kp = self.covs.len();
        let mut g = CMat::zeros(kp, kp);
        for n in 0..kp {
            for k in n..kp {
                let mut acc = 0.0;
                for i in 0..self.m {
                    acc += self.covs[n][i] * self.covs[k][i] / (z[i] * self.q[i]);
                }
                let v = cr(acc / self.m as f64);
                g[(n, k)] = v;
                g[(k, n)] = v;
            }
        }
        GammaMatrix { mat: g, flavor }
    }

    pub fn gamma(&self) -> GammaMatrix {
        self.gamma_with_z(&self.z.clone(), GammaFlavor::FiniteM)
    }

    pub fn gamma_partial(&self) -> Result<GammaMatrix> {
        let zt = self
            .z_tilde
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("partial information not attached".into()))?
            .clone();
        Ok(self.gamma_with_z(&zt, GammaFlavor::PartialInformation))
    }

    /// Gram matrix `tr(C_n C_k) / M` on the spectral grid.
    pub fn gram(&self) -> CMat {
        let kp = self.covs.len();
        CMat::from_fn(kp, kp, |n, k| {
            let mut acc = 0.0;
            for i in 0..self.m {
                acc += self.covs[n][i] * self.covs[k][i];
            }
            cr(acc / self.m as f64)
        })
    }
}

/// Finite-size coupling matrix of a group context.
///
/// Dense cost is two Hermitian multi-solves plus `K^2` trace products;
/// contexts carrying a spectral companion use the O(M K^2) scalar path.
pub fn gamma_matrix(ctx: &GroupContext) -> Result<GammaMatrix> {
    if let Some(sp) = &ctx.spectral {
        return Ok(sp.gamma());
    }
    gamma_dense(ctx, &ctx.z, GammaFlavor::FiniteM)
}

/// Partial-information coupling matrix (requires `z_tilde`).
pub fn gamma_matrix_partial(ctx: &GroupContext) -> Result<GammaMatrix> {
    if let Some(sp) = &ctx.spectral {
        if sp.z_tilde.is_some() {
            return sp.gamma_partial();
        }
    }
    let zt = ctx
        .z_tilde
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("partial information not attached".into()))?;
    gamma_dense(ctx, zt, GammaFlavor::PartialInformation)
}

fn gamma_dense(ctx: &GroupContext, z: &CMat, flavor: GammaFlavor) -> Result<GammaMatrix> {
    let solver_z = HermSolver::new(z)?;
    let solver_q = HermSolver::new(&ctx.q)?;
    let kp = ctx.group_size();
    let mut y = Vec::with_capacity(kp);
    for c in &ctx.covs {
        let t = solver_z.solve_mat(c.matrix());
        // (Q^{-1} T^H)^H = T Q^{-1}
        y.push(solver_q.solve_mat(&t.adjoint()).adjoint());
    }
    let mut g = CMat::zeros(kp, kp);
    for n in 0..kp {
        for k in 0..kp {
            g[(n, k)] = trace_product(ctx.covs[n].matrix(), &y[k]) / cr(ctx.m as f64);
        }
    }
    Ok(GammaMatrix {
        mat: hermitize(&g),
        flavor,
    })
}

/// Gram matrix `tr(C_n C_k) / M` of a family of covariances.
pub fn gram_matrix(covs: &[&CMat]) -> CMat {
    let kp = covs.len();
    let m = if kp > 0 { covs[0].nrows() } else { 0 };
    CMat::from_fn(kp, kp, |n, k| {
        trace_product(covs[n], covs[k]) / cr(m as f64)
    })
}

/// Closed-form SINR of the optimal bilinear equalizer for group member `k`.
///
/// With `B = P^{-1}/M + Gamma` and `y = B^{-1} e_k`, the optimum is
/// `M p_k / y_k - 1`. Works with any flavor of coupling matrix; with the
/// partial-information flavor it yields the deterministic equivalent of the
/// estimate-based equalizer.
pub fn obe_sinr_closed_form(
    gamma: &GammaMatrix,
    powers: &[f64],
    m: usize,
    k: usize,
) -> Result<f64> {
    let kp = gamma.order();
    check_group_args(kp, powers, m, k)?;
    let mut b = gamma.mat.clone();
    for i in 0..kp {
        b[(i, i)] += cr(1.0 / (m as f64 * powers[i]));
    }
    let solver = HermSolver::new(&b)?;
    let y = solver.solve_vec(&unit_vec(kp, k));
    let yk = y[k].re;
    if !(yk.is_finite() && yk > 0.0) {
        return Err(Error::Singular(format!(
            "closed form produced a nonpositive resolvent entry {yk:.3e}"
        )));
    }
    Ok(m as f64 * powers[k] / yk - 1.0)
}

/// Large-array SINR limit `M p_k / [Gamma^{-1}]_{kk}`.
///
/// Valid when the group covariances stay asymptotically linearly
/// independent; a singular or severely ill-conditioned coupling matrix is
/// reported as an error carrying its condition estimate.
pub fn asymptotic_sinr(gamma: &GammaMatrix, powers: &[f64], m: usize, k: usize) -> Result<f64> {
    let kp = gamma.order();
    check_group_args(kp, powers, m, k)?;
    let ev = hermitian_eigenvalues(&gamma.mat);
    let min = ev[0];
    let max = ev[kp - 1];
    if !(min > 0.0) || max / min > 1e12 {
        return Err(Error::Singular(format!(
            "coupling matrix is singular or ill-conditioned (min eig {min:.3e}, condition {:.3e})",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    let solver = HermSolver::new(&gamma.mat)?;
    let y = solver.solve_vec(&unit_vec(kp, k));
    Ok(m as f64 * powers[k] / y[k].re)
}

/// Low-SNR limit of the optimal SINR under the scaling
/// `p_k = lambda_k / (M rho_tr)`, `rho_tr -> 0`: only the Gram matrix
/// `G = tr(C_n C_k)/M` survives and
/// `gamma_low = lambda_k / [(diag(1/lambda) + G)^{-1} e_k]_k - 1`.
pub fn low_snr_sinr(gram: &CMat, lambdas: &[f64], k: usize) -> Result<f64> {
    let kp = gram.nrows();
    check_group_args(kp, lambdas, 1, k)?;
    let mut b = gram.clone();
    for i in 0..kp {
        b[(i, i)] += cr(1.0 / lambdas[i]);
    }
    let solver = HermSolver::new(&b)?;
    let y = solver.solve_vec(&unit_vec(kp, k));
    let yk = y[k].re;
    if !(yk.is_finite() && yk > 0.0) {
        return Err(Error::Singular("low-SNR resolvent is nonpositive".into()));
    }
    Ok(lambdas[k] / yk - 1.0)
}

fn check_group_args(kp: usize, powers: &[f64], m: usize, k: usize) -> Result<()> {
    if powers.len() != kp {
        return Err(Error::DimensionMismatch {
            context: "group powers",
            expected: kp,
            got: powers.len(),
        });
    }
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    if k >= kp {
        return Err(Error::InvalidArgument(format!(
            "user index {k} out of group"
        )));
    }
    if let Some(&p) = powers.iter().find(|&&p| !(p.is_finite() && p > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "power must be positive, got {p}"
        )));
    }
    Ok(())
}

fn unit_vec(n: usize, k: usize) -> CVec {
    let mut e = CVec::zeros(n);
    e[k] = cr(1.0);
    e
}

/// One pilot group of a large-array limit computation: densities of the
/// group members plus the powers and densities of every user contributing
/// to the received-signal covariance.
pub struct LimitInstance<'a> {
    pub group: Vec<&'a AngularDensity>,
    pub all: Vec<(f64, &'a AngularDensity)>,
    pub rho_tr: f64,
}

/// Large-array limit of the circulant-model coupling matrix for a uniform
/// linear array, computed in the angle domain.
///
/// Substituting `omega = pi sin(theta)` into the frequency integral and
/// writing `n_i(theta) = 2 beta_i eta_i(theta)` gives
///
/// ```text
/// Gamma[n, k] = 1/2 Int n_n n_k cos(theta)
///     / ((cos(theta) + sum_i p_i n_i) (sum_{i in group} n_i + cos(theta)/rho_tr)) dtheta
/// ```
///
/// integrated over (-pi/2, pi/2) with a rule split at all cluster centers.
/// The node count starts at `base_nodes` and doubles until the largest
/// entry changes by less than 1e-6 relative, up to 65536 nodes.
pub fn gamma_ula_limit(inst: &LimitInstance, base_nodes: usize) -> Result<GammaMatrix> {
    if inst.group.is_empty() {
        return Err(Error::InvalidArgument("empty pilot group".into()));
    }
    if !(inst.rho_tr.is_finite() && inst.rho_tr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "training SNR must be positive, got {}",
            inst.rho_tr
        )));
    }
    let eval = |nodes: usize| -> Result<CMat> {
        let mut cuts: Vec<f64> = inst
            .all
            .iter()
            .flat_map(|(_, d)| d.clusters().iter().map(|c| c.center))
            .chain(
                inst.group
                    .iter()
                    .flat_map(|d| d.clusters().iter().map(|c| c.center)),
            )
            .collect();
        let rule = crate::channel_model::composite_rule(nodes, &mut cuts)?;
        let kp = inst.group.len();
        let mut g = CMat::zeros(kp, kp);
        for (&theta, &w) in rule.nodes.iter().zip(&rule.weights) {
            let cos = theta.cos();
            let group_n: Vec<f64> = inst
                .group
                .iter()
                .map(|d| 2.0 * d.gain() * d.eval(theta))
                .collect();
            let mut z_acc = cos;
            for (p, d) in &inst.all {
                z_acc += p * 2.0 * d.gain() * d.eval(theta);
            }
            let q_acc: f64 = group_n.iter().sum::<f64>() + cos / inst.rho_tr;
            let denom = z_acc * q_acc;
            if denom <= 0.0 {
                continue;
            }
            let scale = 0.5 * w * cos / denom;
            for n in 0..kp {
                for k in n..kp {
                    let v = cr(scale * group_n[n] * group_n[k]);
                    g[(n, k)] += v;
                    if n != k {
                        g[(k, n)] += v;
                    }
                }
            }
        }
        Ok(g)
    };

    let mut nodes = base_nodes.max(64);
    let mut current = eval(nodes)?;
    loop {
        if nodes * 2 > 65536 {
            return Err(Error::InvalidArgument(
                "limit integral did not converge within the node budget".into(),
            ));
        }
        nodes *= 2;
        let refined = eval(nodes)?;
        let scale = refined.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diff = (&refined - &current)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        current = refined;
        if diff <= 1e-6 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(GammaMatrix {
        mat: current,
        flavor: GammaFlavor::CirculantLimit,
    })
}

/// Average-SINR bound of an arbitrary transformation for group member `k`.
///
/// Exploits structure: diagonal transformations in the identity basis cost
/// O(M^2); the DFT basis adds basis changes of the two covariances.
pub fn bilinear_sinr(ctx: &GroupContext, t: &Transformation, k: usize) -> Result<f64> {
    if k >= ctx.group_size() {
        return Err(Error::InvalidArgument(format!(
            "user index {k} out of group"
        )));
    }
    let traces: Vec<Complex64> = ctx
        .covs
        .iter()
        .map(|c| transformation_trace(c, t))
        .collect::<Result<_>>()?;
    let quad = transformation_quadratic(&ctx.z, &ctx.q, t)?;
    if !(quad.is_finite() && quad > 0.0) {
        return Err(Error::InvalidArgument(
            "transformation is numerically zero".into(),
        ));
    }
    let mut den = quad;
    for n in 0..ctx.group_size() {
        if n != k {
            den += ctx.powers[n] * traces[n].norm_sqr();
        }
    }
    Ok(ctx.powers[k] * traces[k].norm_sqr() / den)
}

/// `tr(C A)` for a covariance and a transformation.
fn transformation_trace(c: &CovarianceModel, t: &Transformation) -> Result<Complex64> {
    match t {
        Transformation::Dense { a } => Ok(trace_product(c.matrix(), a)),
        Transformation::Diagonal { d, basis } => {
            let diag = c.basis_diagonal(*basis);
            if diag.len() != d.len() {
                return Err(Error::DimensionMismatch {
                    context: "transformation_trace",
                    expected: diag.len(),
                    got: d.len(),
                });
            }
            Ok(diag
                .iter()
                .zip(d.iter())
                .map(|(&cd, &dd)| dd * cr(cd))
                .sum())
        }
    }
}

/// `tr(Z A Q A^H)`.
fn transformation_quadratic(z: &CMat, q: &CMat, t: &Transformation) -> Result<f64> {
    match t {
        Transformation::Dense { a } => {
            let zaq = z * a * q;
            let mut acc = Complex64::ZERO;
            for (x, y) in zaq.iter().zip(a.iter()) {
                acc += x * y.conj();
            }
            Ok(acc.re)
        }
        Transformation::Diagonal { d, basis } => {
            let m = z.nrows();
            if d.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "transformation_quadratic",
                    expected: m,
                    got: d.len(),
                });
            }
            let (zb, qb) = match basis {
                Basis::Identity => (z.clone(), q.clone()),
                Basis::Dft => {
                    let f = dft_matrix(m);
                    (f.adjoint() * z * &f, f.adjoint() * q * &f)
                }
            };
            let mut acc = Complex64::ZERO;
            for u in 0..m {
                for v in 0..m {
                    acc += d[u].conj() * zb[(u, v)] * qb[(v, u)] * d[v];
                }
            }
            Ok(acc.re)
        }
    }
}

/// Conditional (per-realization) SINR of filter `g` for user `k`, given the
/// channel estimates of all users at the site.
///
/// The residual-interference term uses the precomputed sum
/// `t_sum = sum_n p_n C_tilde_n`; see [`conditional_sinr_direct`] for the
/// expanded per-user form.
pub fn conditional_sinr(
    powers: &[f64],
    estimates: &[CVec],
    t_sum: &CMat,
    g: &CVec,
    k: usize,
) -> Result<f64> {
    if estimates.len() != powers.len() {
        return Err(Error::DimensionMismatch {
            context: "conditional_sinr",
            expected: powers.len(),
            got: estimates.len(),
        });
    }
    if k >= powers.len() {
        return Err(Error::InvalidArgument(format!(
            "user index {k} out of range"
        )));
    }
    let gnorm = g.norm_squared();
    if gnorm == 0.0 {
        return Err(Error::InvalidArgument("zero filter".into()));
    }
    let mut den = gnorm + g.dotc(&(t_sum * g)).re;
    let mut num = 0.0;
    for n in 0..powers.len() {
        let cross = g.dotc(&estimates[n]).norm_sqr();
        if n == k {
            num = powers[k] * cross;
        } else {
            den += powers[n] * cross;
        }
    }
    Ok(num / den)
}

/// Conditional SINR with explicit per-user error covariances; same value as
/// [`conditional_sinr`] with `t_sum = sum_n p_n err_covs[n]`.
pub fn conditional_sinr_direct(
    powers: &[f64],
    err_covs: &[&CMat],
    estimates: &[CVec],
    g: &CVec,
    k: usize,
) -> Result<f64> {
    let gnorm = g.norm_squared();
    if gnorm == 0.0 {
        return Err(Error::InvalidArgument("zero filter".into()));
    }
    let mut den = gnorm;
    let mut num = 0.0;
    for n in 0..powers.len() {
        den += powers[n] * g.dotc(&(err_covs[n] * g)).re;
        let cross = g.dotc(&estimates[n]).norm_sqr();
        if n == k {
            num = powers[k] * cross;
        } else {
            den += powers[n] * cross;
        }
    }
    Ok(num / den)
}

/// Observable trends behind the large-array limit: per-user trace density
/// and spectral norm, the smallest Gram eigenvalue of the group, and the
/// condition number of the coupling matrix. These are reported as numbers;
/// callers decide what counts as a warning trend.
#[derive(Debug, Clone)]
pub struct ConditionDiagnostics {
    pub trace_over_m: Vec<f64>,
    pub spectral_norm: Vec<f64>,
    pub gram_min_eig: f64,
    pub gamma_condition: f64,
}

pub fn condition_diagnostics(ctx: &GroupContext) -> Result<ConditionDiagnostics> {
    let m = ctx.m as f64;
    let trace_over_m = ctx.covs.iter().map(|c| c.trace() / m).collect();
    let spectral_norm = ctx
        .covs
        .iter()
        .map(|c| match c.structure() {
            CovStructure::Circulant { spectrum } => spectrum.iter().copied().fold(0.0, f64::max),
            CovStructure::DiagonalIdentity => (0..c.order())
                .map(|i| c.matrix()[(i, i)].re)
                .fold(0.0, f64::max),
            CovStructure::Dense => psd_spectral_norm(c.matrix()),
        })
        .collect();
    let gram = if let Some(sp) = &ctx.spectral {
        sp.gram()
    } else {
        gram_matrix(&ctx.covs.iter().map(|c| c.matrix()).collect::<Vec<_>>())
    };
    let gram_min_eig = hermitian_eigenvalues(&gram)[0];
    let gamma = gamma_matrix(ctx)?;
    let ev = hermitian_eigenvalues(&gamma.mat);
    let gamma_condition = if ev[0] > 0.0 {
        ev[ev.len() - 1] / ev[0]
    } else {
        f64::INFINITY
    };
    Ok(ConditionDiagnostics {
        trace_over_m,
        spectral_norm,
        gram_min_eig,
        gamma_condition,
    })
}
