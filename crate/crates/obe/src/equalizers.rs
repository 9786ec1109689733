//! Equalizer constructions: the optimal bilinear transformation in oracle
//! and efficient form, its diagonal restriction, and the baseline filters
//! (matched filters, regularized zero forcing, linear MMSE).

use num_complex::Complex64;

use crate::channel_model::Basis;
use crate::error::{Error, Result};
use crate::linalg::{
    ceye, cr, dft_matrix, hermitize, kron, trace_product, unvec, vec_of, CMat, CVec, HermSolver,
};
use crate::sinr::{GammaFlavor, GammaMatrix, GroupContext};

/// A statistical transformation `A` defining the bilinear filter
/// `g = A psi`. Diagonal transformations store only their diagonal plus the
/// basis it lives in.
#[derive(Debug, Clone)]
pub enum Transformation {
    Dense { a: CMat },
    Diagonal { d: CVec, basis: Basis },
}

impl Transformation {
    pub fn dim(&self) -> usize {
        match self {
            Transformation::Dense { a } => a.nrows(),
            Transformation::Diagonal { d, .. } => d.len(),
        }
    }

    /// Materialize as a dense matrix (DFT-basis diagonals become
    /// circulant matrices).
    pub fn to_dense(&self) -> CMat {
        match self {
            Transformation::Dense { a } => a.clone(),
            Transformation::Diagonal { d, basis } => match basis {
                Basis::Identity => CMat::from_fn(d.len(), d.len(), |r, c| {
                    if r == c {
                        d[r]
                    } else {
                        Complex64::ZERO
                    }
                }),
                Basis::Dft => {
                    let m = d.len();
                    let f = dft_matrix(m);
                    let mut scaled = f.clone();
                    for c in 0..m {
                        for r in 0..m {
                            scaled[(r, c)] *= d[c];
                        }
                    }
                    scaled * f.adjoint()
                }
            },
        }
    }
}

/// Number of scalar multiplies spent in the core of a filter application
/// (basis changes excluded; they are shared across a pilot group).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCount {
    pub core_multiplies: usize,
}

/// Apply a transformation to one observation: `g = A psi`.
pub fn bilinear_filter(t: &Transformation, psi: &CVec) -> Result<CVec> {
    Ok(bilinear_filter_counted(t, psi)?.0)
}

/// Same as [`bilinear_filter`] but reporting the core multiply count:
/// `m^2` for dense transformations, `m` for diagonal ones.
pub fn bilinear_filter_counted(t: &Transformation, psi: &CVec) -> Result<(CVec, OpCount)> {
    let m = t.dim();
    if psi.len() != m {
        return Err(Error::DimensionMismatch {
            context: "bilinear_filter",
            expected: m,
            got: psi.len(),
        });
    }
    match t {
        Transformation::Dense { a } => Ok((
            a * psi,
            OpCount {
                core_multiplies: m * m,
            },
        )),
        Transformation::Diagonal { d, basis } => {
            let g = match basis {
                Basis::Identity => d.component_mul(psi),
                Basis::Dft => {
                    let f = dft_matrix(m);
                    let hat = f.adjoint() * psi;
                    &f * d.component_mul(&hat)
                }
            };
            Ok((g, OpCount { core_multiplies: m }))
        }
    }
}

/// Brute-force optimal bilinear transformation for one group member via the
/// vectorized `M^2`-dimensional system
///
/// ```text
/// a = (Q^T kron Z + sum_{n != k} p_n c_n c_n^H)^{-1} c_k,  c_n = vec(C_n)
/// ```
///
/// Returns the transformation and its SINR `p_k c_k^H a`, which is the
/// global maximum of the average-SINR bound. Dimension is capped at
/// `m <= 16`; this is a reference implementation for validating the
/// group-dimensional closed form.
pub fn obe_oracle(ctx: &GroupContext, k: usize) -> Result<(Transformation, f64)> {
    let m = ctx.m;
    if m > 16 {
        return Err(Error::InvalidArgument(format!(
            "oracle solver is limited to m <= 16, got {m}"
        )));
    }
    if k >= ctx.group_size() {
        return Err(Error::InvalidArgument(format!(
            "user index {k} out of group"
        )));
    }
    let mut s = kron(&ctx.q.transpose(), &ctx.z);
    let cvecs: Vec<CVec> = ctx.covs.iter().map(|c| vec_of(c.matrix())).collect();
    for n in 0..ctx.group_size() {
        if n != k {
            let cn = &cvecs[n];
            s.gerc(cr(ctx.powers[n]), cn, cn, cr(1.0));
        }
    }
    let solver = HermSolver::new(&hermitize(&s))?;
    let a = solver.solve_vec(&cvecs[k]);
    let gamma = ctx.powers[k] * cvecs[k].dotc(&a).re;
    Ok((
        Transformation::Dense {
            a: unvec(&a, m, m)?,
        },
        gamma,
    ))
}

/// Optimal bilinear transformations for a whole pilot group, built in group
/// dimension.
#[derive(Debug)]
pub struct ObeSolution {
    /// One transformation per group member, in group order.
    pub transforms: Vec<Transformation>,
    /// The coupling matrix computed along the way.
    pub gamma: GammaMatrix,
    /// Combination coefficients: column `k` holds the weights of
    /// `Z^{-1} C_l Q^{-1}` in member `k`'s transformation.
    pub coefficients: CMat,
    /// Set when the coefficient system needed a diagonal jitter.
    pub regularized: bool,
}

/// Efficient construction of all optimal transformations of a group.
///
/// Every optimum has the form `A_k = Z^{-1} (sum_l sigma_{lk} C_l) Q^{-1}`
/// with `sigma_{.k} = (P^{-1} + M Gamma)^{-1} e_k` (any per-user scaling is
/// immaterial to the SINR). When the coefficient system is numerically
/// singular (duplicated covariances at extreme sizes), a `1e-12` diagonal
/// jitter is applied once and reported via the `regularized` flag and a
/// warning log.
pub fn obe_transformations(ctx: &GroupContext) -> Result<ObeSolution> {
    let m = ctx.m;
    let kp = ctx.group_size();
    let solver_z = HermSolver::new(&ctx.z)?;
    let solver_q = HermSolver::new(&ctx.q)?;
    // Y_l = Z^{-1} C_l Q^{-1}
    let mut basis = Vec::with_capacity(kp);
    for c in &ctx.covs {
        let t = solver_z.solve_mat(c.matrix());
        basis.push(solver_q.solve_mat(&t.adjoint()).adjoint());
    }
    let mut gamma = CMat::zeros(kp, kp);
    for n in 0..kp {
        for k in 0..kp {
            gamma[(n, k)] = trace_product(ctx.covs[n].matrix(), &basis[k]) / cr(m as f64);
        }
    }
    let gamma = GammaMatrix {
        mat: hermitize(&gamma),
        flavor: GammaFlavor::FiniteM,
    };

    let mut sys = &gamma.mat * cr(m as f64);
    for i in 0..kp {
        sys[(i, i)] += cr(1.0 / ctx.powers[i]);
    }
    let (solver, regularized) = match HermSolver::new(&sys) {
        Ok(s) => (s, false),
        Err(_) => {
            log::warn!("coefficient system singular for a group of {kp}; applying 1e-12 jitter");
            let mut jittered = sys.clone();
            for i in 0..kp {
                jittered[(i, i)] += cr(1e-12);
            }
            (HermSolver::new(&jittered)?, true)
        }
    };
    let coefficients = solver.solve_mat(&ceye(kp));
    let transforms = (0..kp)
        .map(|k| {
            let mut a = CMat::zeros(m, m);
            for l in 0..kp {
                a += &basis[l] * coefficients[(l, k)];
            }
            Transformation::Dense { a }
        })
        .collect();
    Ok(ObeSolution {
        transforms,
        gamma,
        coefficients,
        regularized,
    })
}

/// Matched filter on the MMSE channel estimate: `A_k = C_k Q^{-1}`.
pub fn mmse_mf_transformations(ctx: &GroupContext) -> Result<Vec<Transformation>> {
    let solver_q = HermSolver::new(&ctx.q)?;
    Ok(ctx
        .covs
        .iter()
        .map(|c| Transformation::Dense {
            a: solver_q.solve_mat(c.matrix()).adjoint(),
        })
        .collect())
}

/// Matched filter on the raw observation: `A_k = I`.
pub fn ls_mf_transformation(m: usize) -> Transformation {
    Transformation::Dense { a: ceye(m) }
}

/// Diagonal bilinear equalizers from covariance diagonals.
///
/// Given per-member diagonals `xi_k` (in some shared basis), positive
/// per-coordinate weights `d` and positive per-member penalties `r`, the
/// transformation of member `k` is the diagonal
///
/// ```text
/// a_k = D Xi (R + Xi^T D Xi)^{-1} e_k,   D = diag(d), R = diag(r)
/// ```
///
/// Only diagonals enter: the construction never touches a full covariance.
pub fn diagonal_obe(
    diags: &[Vec<f64>],
    weights: &[f64],
    penalties: &[f64],
    basis: Basis,
) -> Result<Vec<Transformation>> {
    let kp = diags.len();
    if kp == 0 {
        return Err(Error::InvalidArgument("empty pilot group".into()));
    }
    let m = diags[0].len();
    if weights.len() != m {
        return Err(Error::DimensionMismatch {
            context: "diagonal_obe weights",
            expected: m,
            got: weights.len(),
        });
    }
    if penalties.len() != kp {
        return Err(Error::DimensionMismatch {
            context: "diagonal_obe penalties",
            expected: kp,
            got: penalties.len(),
        });
    }
    if let Some(&w) = weights.iter().find(|&&w| !(w.is_finite() && w > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "weights must be positive, got {w}"
        )));
    }
    if let Some(&r) = penalties.iter().find(|&&r| !(r.is_finite() && r > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "penalties must be positive, got {r}"
        )));
    }
    for d in diags {
        if d.len() != m {
            return Err(Error::DimensionMismatch {
                context: "diagonal_obe diagonals",
                expected: m,
                got: d.len(),
            });
        }
    }
    // K x K system R + Xi^T D Xi.
    let mut sys = nalgebra::DMatrix::<f64>::zeros(kp, kp);
    for n in 0..kp {
        for k in n..kp {
            let mut acc = 0.0;
            for i in 0..m {
                acc += diags[n][i] * weights[i] * diags[k][i];
            }
            sys[(n, k)] = acc;
            sys[(k, n)] = acc;
        }
    }
    for i in 0..kp {
        sys[(i, i)] += penalties[i];
    }
    let chol = sys
        .cholesky()
        .ok_or_else(|| Error::Singular("diagonal equalizer system is singular".into()))?;
    let sol = chol.solve(&nalgebra::DMatrix::<f64>::identity(kp, kp));
    Ok((0..kp)
        .map(|k| {
            let d = CVec::from_fn(m, |i, _| {
                let mut acc = 0.0;
                for l in 0..kp {
                    acc += diags[l][i] * sol[(l, k)];
                }
                cr(weights[i] * acc)
            });
            Transformation::Diagonal { d, basis }
        })
        .collect())
}

/// Default weights for [`diagonal_obe`]: the diagonal surrogate of
/// `Z^{-1} Q^{-1}`, namely `1 / ((1 + sum_n p_n xi_n) (sum_group xi + 1/rho_tr))`
/// per coordinate. `all` carries every user visible at the site,
/// `group` indexes the pilot group members within `all`.
pub fn default_diagonal_weights(
    all: &[(f64, Vec<f64>)],
    group: &[usize],
    rho_tr: f64,
) -> Result<Vec<f64>> {
    if all.is_empty() || group.is_empty() {
        return Err(Error::InvalidArgument("empty user set".into()));
    }
    let m = all[0].1.len();
    let mut z = vec![1.0; m];
    for (p, diag) in all {
        if diag.len() != m {
            return Err(Error::DimensionMismatch {
                context: "default_diagonal_weights",
                expected: m,
                got: diag.len(),
            });
        }
        for i in 0..m {
            z[i] += p * diag[i];
        }
    }
    let mut q = vec![1.0 / rho_tr; m];
    for &g in group {
        for i in 0..m {
            q[i] += all[g].1[i];
        }
    }
    Ok((0..m).map(|i| 1.0 / (z[i] * q[i])).collect())
}

/// Linear MMSE filters on estimated channels.
///
/// `base` is the estimate-independent part `I + sum_n p_n C_tilde_n`; the
/// per-realization covariance adds the outer products of all estimates.
/// One Hermitian factorization is shared by every requested user.
pub fn lmmse_filters(
    base: &CMat,
    estimates: &[CVec],
    powers: &[f64],
    targets: &[usize],
) -> Result<Vec<CVec>> {
    if estimates.len() != powers.len() {
        return Err(Error::DimensionMismatch {
            context: "lmmse_filters",
            expected: powers.len(),
            got: estimates.len(),
        });
    }
    let mut cov = base.clone();
    for (p, h) in powers.iter().zip(estimates) {
        cov.gerc(cr(*p), h, h, cr(1.0));
    }
    let solver = HermSolver::new(&cov)?;
    targets
        .iter()
        .map(|&k| {
            if k >= estimates.len() {
                return Err(Error::InvalidArgument(format!("no user {k}")));
            }
            Ok(solver.solve_vec(&estimates[k]))
        })
        .collect()
}

/// Zero-forcing filters on the estimated channels of one cell: the columns
/// of `H (H^H H)^{-1}`. Fails when the estimate Gram matrix has condition
/// number above 1e12.
pub fn mmse_zf_filters(estimates: &[&CVec]) -> Result<Vec<CVec>> {
    let kc = estimates.len();
    if kc == 0 {
        return Err(Error::InvalidArgument("no estimates".into()));
    }
    let m = estimates[0].len();
    if kc > m {
        return Err(Error::InvalidArgument(format!(
            "cannot zero-force {kc} users with {m} antennas"
        )));
    }
    let mut h = CMat::zeros(m, kc);
    for (c, e) in estimates.iter().enumerate() {
        if e.len() != m {
            return Err(Error::DimensionMismatch {
                context: "mmse_zf_filters",
                expected: m,
                got: e.len(),
            });
        }
        h.set_column(c, e);
    }
    let gram = h.adjoint() * &h;
    let ev = crate::linalg::hermitian_eigenvalues(&gram);
    let (min, max) = (ev[0], ev[kc - 1]);
    if !(min > 0.0) || max / min > 1e12 {
        return Err(Error::Singular(format!(
            "estimate Gram matrix ill-conditioned (condition {:.3e})",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    let solver = HermSolver::new(&gram)?;
    let x = solver.solve_mat(&ceye(kc));
    let filters = &h * x;
    Ok((0..kc).map(|c| filters.column(c).into_owned()).collect())
}
