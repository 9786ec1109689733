//! Angular scattering densities, array covariance models and the
//! three-site network geometry.
//!
//! A user's channel to a uniform linear array is modeled as zero-mean
//! complex Gaussian with covariance
//!
//! ```text
//! C = beta * Integral a(theta) a(theta)^H eta(theta) dtheta
//! ```
//!
//! where `a` is the array steering vector, `eta` a truncated-Laplacian
//! mixture on (-pi/2, pi/2) and `beta` the large-scale path gain. The
//! integral is evaluated by composite Gauss-Legendre quadrature split at
//! the cluster centers, which keeps narrow clusters accurate. Besides the
//! exact Toeplitz form the module offers a circulant surrogate defined by
//! a spectral density sampled on the DFT grid, and a plain diagonal
//! surrogate for channels without array structure.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cr, dft_matrix, CMat, CVec};
use crate::quadrature::Quadrature;

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;
const PI: f64 = std::f64::consts::PI;

/// One Laplacian scattering cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    /// Center angle in radians, strictly inside (-pi/2, pi/2).
    pub center: f64,
    /// Laplacian scale parameter in radians.
    pub spread: f64,
    /// Nonnegative mixture weight.
    pub weight: f64,
}

/// Normalized angular scattering density with a large-scale gain.
///
/// The density is a weighted mixture of Laplacians, each truncated to
/// (-pi/2, pi/2) and renormalized; mixture weights are normalized to sum
/// to one at construction, so `eval` integrates to one and the covariance
/// trace equals `M * gain`.
#[derive(Debug, Clone)]
pub struct AngularDensity {
    clusters: Vec<Cluster>,
    gain: f64,
}

impl AngularDensity {
    pub fn new(clusters: Vec<Cluster>, gain: f64) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::InvalidModel(
                "density needs at least one cluster".into(),
            ));
        }
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::InvalidModel(format!(
                "gain must be positive, got {gain}"
            )));
        }
        for c in &clusters {
            if !(c.center.is_finite() && c.center.abs() < HALF_PI) {
                return Err(Error::InvalidModel(format!(
                    "cluster center {} outside (-pi/2, pi/2)",
                    c.center
                )));
            }
            if !(c.spread.is_finite() && c.spread > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "cluster spread must be positive, got {}",
                    c.spread
                )));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::InvalidModel(format!(
                    "cluster weight must be nonnegative, got {}",
                    c.weight
                )));
            }
        }
        let total: f64 = clusters.iter().map(|c| c.weight).sum();
        if total <= 0.0 {
            return Err(Error::InvalidModel("cluster weights sum to zero".into()));
        }
        let clusters = clusters
            .into_iter()
            .map(|c| Cluster {
                weight: c.weight / total,
                ..c
            })
            .collect();
        Ok(Self { clusters, gain })
    }

    /// Single-cluster density.
    pub fn single(center: f64, spread: f64, gain: f64) -> Result<Self> {
        Self::new(
            vec![Cluster {
                center,
                spread,
                weight: 1.0,
            }],
            gain,
        )
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// Normalized density value at `theta` (without the gain factor).
    /// Zero outside (-pi/2, pi/2).
    pub fn eval(&self, theta: f64) -> f64 {
        if theta.abs() > HALF_PI {
            return 0.0;
        }
        self.clusters
            .iter()
            .map(|c| {
                // Mass of the untruncated Laplacian inside the window.
                let mass = 1.0
                    - 0.5
                        * ((-(c.center + HALF_PI) / c.spread).exp()
                            + (-(HALF_PI - c.center) / c.spread).exp());
                let pdf = (-(theta - c.center).abs() / c.spread).exp() / (2.0 * c.spread);
                c.weight * pdf / mass
            })
            .sum()
    }

    /// Composite Gauss-Legendre rule over (-pi/2, pi/2) split at the
    /// cluster centers, with roughly `nodes` points in total.
    ///
    /// Splitting removes the kink each Laplacian has at its center, so the
    /// rule converges fast even for very narrow clusters.
    pub fn quadrature(&self, nodes: usize) -> Result<Quadrature> {
        let mut cuts: Vec<f64> = self.clusters.iter().map(|c| c.center).collect();
        composite_rule(nodes, &mut cuts)
    }
}

/// Composite Gauss-Legendre rule on (-pi/2, pi/2) with interior break
/// points, nodes distributed proportionally to segment length.
pub(crate) fn composite_rule(nodes: usize, cuts: &mut Vec<f64>) -> Result<Quadrature> {
    if nodes < 64 {
        return Err(Error::InvalidArgument(format!(
            "at least 64 quadrature nodes required, got {nodes}"
        )));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut bounds = vec![-HALF_PI];
    for &c in cuts.iter() {
        if c > bounds.last().copied().unwrap() + 1e-12 && c < HALF_PI - 1e-12 {
            bounds.push(c);
        }
    }
    bounds.push(HALF_PI);

    let total_len: f64 = PI;
    let mut rule = Quadrature {
        nodes: Vec::with_capacity(nodes + 32 * bounds.len()),
        weights: Vec::with_capacity(nodes + 32 * bounds.len()),
    };
    for w in bounds.windows(2) {
        let frac = (w[1] - w[0]) / total_len;
        let n_seg = ((nodes as f64 * frac).round() as usize).max(32);
        let seg = Quadrature::gauss_legendre(n_seg, w[0], w[1])?;
        rule.nodes.extend(seg.nodes);
        rule.weights.extend(seg.weights);
    }
    Ok(rule)
}

/// Spectral density on (-pi, pi] defining a circulant covariance.
#[derive(Debug, Clone)]
pub enum SpectrumFn {
    /// Constant level; the covariance is `level * I`.
    Flat { level: f64 },
    /// `mean + depth * cos(harmonic * omega)`; requires `mean >= |depth|`.
    RaisedCosine {
        mean: f64,
        depth: f64,
        harmonic: u32,
    },
    /// Spectral density induced by an angular density on a uniform
    /// linear array: `f(w) = 2 pi beta eta(asin(w/pi)) / sqrt(pi^2 - w^2)`,
    /// set to zero at the edges `w = +-pi`.
    Density(AngularDensity),
}

impl SpectrumFn {
    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            SpectrumFn::Flat { level } => *level,
            SpectrumFn::RaisedCosine {
                mean,
                depth,
                harmonic,
            } => mean + depth * (*harmonic as f64 * omega).cos(),
            SpectrumFn::Density(d) => {
                let denom_sq = PI * PI - omega * omega;
                if denom_sq <= 0.0 {
                    return 0.0;
                }
                let theta = (omega / PI).asin();
                2.0 * PI * d.gain() * d.eval(theta) / denom_sq.sqrt()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SpectrumFn::Flat { level } if !(level.is_finite() && *level >= 0.0) => {
                Err(Error::InvalidModel(format!(
                    "flat spectrum level must be nonnegative, got {level}"
                )))
            }
            SpectrumFn::RaisedCosine { mean, depth, .. }
                if !(mean.is_finite() && depth.is_finite() && *mean >= depth.abs()) =>
            {
                Err(Error::InvalidModel(
                    "raised-cosine spectrum requires mean >= |depth|".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Structural tag of a covariance model.
#[derive(Debug, Clone, PartialEq)]
pub enum CovStructure {
    /// General Hermitian matrix.
    Dense,
    /// Diagonal in the identity basis.
    DiagonalIdentity,
    /// Circulant; diagonalized by the DFT with the stored eigenvalue grid
    /// (index `m` corresponds to frequency `2 pi m / M`).
    Circulant { spectrum: Vec<f64> },
}

/// Basis in which a diagonal approximation or transformation lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Identity,
    Dft,
}

/// Hermitian positive semidefinite channel covariance with a structure tag.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    matrix: CMat,
    structure: CovStructure,
    /// First-row/column generator when the matrix is Toeplitz:
    /// `matrix[r, c] = t[r - c]`, `t[-d] = conj(t[d])`.
    toeplitz: Option<Vec<Complex64>>,
}

impl CovarianceModel {
    /// Wrap a dense Hermitian matrix. The Hermitian defect must be within
    /// absolute tolerance 1e-12 relative to the average diagonal scale.
    pub fn from_dense(matrix: CMat) -> Result<Self> {
        let m = matrix.nrows();
        if matrix.ncols() != m || m == 0 {
            return Err(Error::DimensionMismatch {
                context: "CovarianceModel::from_dense",
                expected: m.max(1),
                got: matrix.ncols(),
            });
        }
        let scale = (crate::linalg::trace(&matrix).re / m as f64).abs().max(1.0);
        let defect = crate::linalg::hermitian_defect(&matrix);
        if defect > 1e-12 * scale {
            return Err(Error::InvalidModel(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            matrix: crate::linalg::hermitize(&matrix),
            structure: CovStructure::Dense,
            toeplitz: None,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn structure(&self) -> &CovStructure {
        &self.structure
    }

    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        crate::linalg::trace(&self.matrix).re
    }

    /// Toeplitz generator if the model was built entry-wise from a density.
    pub fn toeplitz_generator(&self) -> Option<&[Complex64]> {
        self.toeplitz.as_deref()
    }

    /// Smallest eigenvalue; negative values beyond `-1e-8 * trace / M`
    /// violate the positive semidefiniteness contract.
    pub fn validate_psd(&self) -> Result<f64> {
        let tol = 1e-8
            * (self.trace() / self.order() as f64)
                .abs()
                .max(f64::MIN_POSITIVE);
        let min_eig = crate::linalg::hermitian_eigenvalues(&self.matrix)[0];
        if min_eig < -tol {
            return Err(Error::NotPositiveSemidefinite { min_eig, tol });
        }
        Ok(min_eig)
    }

    /// Diagonal of the covariance in the given basis, as real values.
    ///
    /// For the DFT basis this is `diag(F^H C F)`; Toeplitz and circulant
    /// structures use O(M^2) and O(M) shortcuts, dense matrices fall back
    /// to quadratic forms per basis vector.
    pub fn basis_diagonal(&self, basis: Basis) -> Vec<f64> {
        let m = self.order();
        match basis {
            Basis::Identity => (0..m).map(|i| self.matrix[(i, i)].re).collect(),
            Basis::Dft => {
                if let CovStructure::Circulant { spectrum } = &self.structure {
                    return spectrum.clone();
                }
                if let Some(t) = &self.toeplitz {
                    // diag(F^H C F)_u = (1/M) sum_d (M - |d|) t[d] e^{-j 2 pi d u / M}
                    return (0..m)
                        .map(|u| {
                            let mut acc = (m as f64) * t[0].re;
                            for d in 1..m {
                                let win = (m - d) as f64;
                                let phase = -2.0 * PI * (d as f64) * (u as f64) / m as f64;
                                let e = Complex64::from_polar(1.0, phase);
                                acc += 2.0 * win * (t[d] * e).re;
                            }
                            acc / m as f64
                        })
                        .collect();
                }
                let f = dft_matrix(m);
                (0..m)
                    .map(|u| {
                        let col = f.column(u);
                        let v = &self.matrix * col;
                        col.dotc(&v).re
                    })
                    .collect()
            }
        }
    }
}

/// Steering vector of a uniform linear array with half-wavelength spacing:
/// entry `m` is `exp(j pi m sin(theta))`, `m = 0..M-1`.
pub fn steering_vector(m: usize, theta: f64) -> Result<CVec> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "steering vector needs m >= 1".into(),
        ));
    }
    if !(theta.is_finite() && theta.abs() <= HALF_PI) {
        return Err(Error::InvalidArgument(format!(
            "steering angle {theta} outside [-pi/2, pi/2]"
        )));
    }
    let s = theta.sin();
    Ok(CVec::from_fn(m, |i, _| {
        Complex64::from_polar(1.0, PI * i as f64 * s)
    }))
}

/// Exact Toeplitz covariance of an `m`-antenna uniform linear array for the
/// given density, using about `nodes` quadrature points.
///
/// Entries are `C[r, c] = t[r - c]` with
/// `t[d] = gain * Integral e^{j pi d sin(theta)} eta(theta) dtheta`.
/// The matrix is a nonnegative combination of steering outer products, so
/// it is positive semidefinite up to rounding. Construction fails when the
/// quadrature mass deviates from one by more than 1e-6 (rule too coarse for
/// the density), which keeps the trace within that tolerance of `m * gain`.
pub fn toeplitz_covariance(
    density: &AngularDensity,
    m: usize,
    nodes: usize,
) -> Result<CovarianceModel> {
    if m == 0 {
        return Err(Error::InvalidArgument("covariance needs m >= 1".into()));
    }
    let rule = density.quadrature(nodes)?;
    let masses: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&th, &w)| w * density.eval(th))
        .collect();
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "quadrature too coarse for this density: mass {total:.8} with {nodes} nodes"
        )));
    }
    let sines: Vec<f64> = rule.nodes.iter().map(|&th| th.sin()).collect();
    let mut t = vec![Complex64::ZERO; m];
    for d in 0..m {
        let mut acc = Complex64::ZERO;
        for (mass, s) in masses.iter().zip(&sines) {
            acc += Complex64::from_polar(*mass, PI * d as f64 * s);
        }
        t[d] = acc * cr(density.gain());
    }
    let matrix = CMat::from_fn(m, m, |r, c| if r >= c { t[r - c] } else { t[c - r].conj() });
    Ok(CovarianceModel {
        matrix,
        structure: CovStructure::Dense,
        toeplitz: Some(t),
    })
}

/// Circulant covariance with eigenvalues `f(2 pi m / M)` on the wrapped
/// frequency grid, diagonalized by the unitary DFT.
pub fn circulant_covariance(spectrum: &SpectrumFn, m: usize) -> Result<CovarianceModel> {
    if m == 0 {
        return Err(Error::InvalidArgument("covariance needs m >= 1".into()));
    }
    spectrum.validate()?;
    let eigs = sample_spectrum(spectrum, m)?;
    // First column of F diag(eigs) F^H, then wrap it around.
    let col: Vec<Complex64> = (0..m)
        .map(|r| {
            let mut acc = Complex64::ZERO;
            for (idx, &lam) in eigs.iter().enumerate() {
                let phase = 2.0 * PI * ((r * idx) % m) as f64 / m as f64;
                acc += Complex64::from_polar(lam, phase);
            }
            acc / cr(m as f64)
        })
        .collect();
    let matrix = CMat::from_fn(m, m, |r, c| {
        let d = (r + m - c) % m;
        col[d]
    });
    Ok(CovarianceModel {
        matrix: crate::linalg::hermitize(&matrix),
        structure: CovStructure::Circulant { spectrum: eigs },
        toeplitz: None,
    })
}

/// Diagonal covariance (identity basis) with entries sampled from the
/// spectral density on the same wrapped grid the circulant model uses.
/// This is the structure-free surrogate for channels without a uniform
/// array geometry.
pub fn diagonal_covariance(spectrum: &SpectrumFn, m: usize) -> Result<CovarianceModel> {
    if m == 0 {
        return Err(Error::InvalidArgument("covariance needs m >= 1".into()));
    }
    spectrum.validate()?;
    let d = sample_spectrum(spectrum, m)?;
    let matrix = CMat::from_fn(m, m, |r, c| if r == c { cr(d[r]) } else { Complex64::ZERO });
    Ok(CovarianceModel {
        matrix,
        structure: CovStructure::DiagonalIdentity,
        toeplitz: None,
    })
}

fn sample_spectrum(spectrum: &SpectrumFn, m: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = (0..m)
        .map(|idx| {
            let mut omega = 2.0 * PI * idx as f64 / m as f64;
            if omega > PI {
                omega -= 2.0 * PI;
            }
            spectrum.eval(omega)
        })
        .collect();
    if let Some(&bad) = vals.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidModel(format!(
            "spectrum must be finite and nonnegative on the grid, got {bad}"
        )));
    }
    Ok(vals)
}

/// Normalized Frobenius gap `norm(C_T - C_C) / sqrt(M)` between the exact
/// Toeplitz covariance and its circulant surrogate for one density.
/// Decreases in `M` when the induced spectral density is well behaved.
pub fn weak_equivalence_gap(density: &AngularDensity, m: usize, nodes: usize) -> Result<f64> {
    let t = toeplitz_covariance(density, m, nodes)?;
    let c = circulant_covariance(&SpectrumFn::Density(density.clone()), m)?;
    Ok((t.matrix() - c.matrix()).norm() / (m as f64).sqrt())
}

/// Three-site network: sites on a circle of radius `cell_diameter` around
/// the origin at 0, 120 and 240 degrees, arrays facing the center. All
/// users, whichever cell serves them, live in one shared disc of radius
/// `user_disc_radius` around the origin; co-located users on the same
/// pilot are what makes the contamination in this layout severe.
#[derive(Debug, Clone)]
pub struct NetworkGeometry {
    pub cell_diameter: f64,
    pub user_disc_radius: f64,
    pub pathloss_exponent: f64,
    pub reference_distance: f64,
    sites: Vec<Site>,
}

#[derive(Debug, Clone, Copy)]
pub struct Site {
    pub position: (f64, f64),
    /// Boresight direction in radians (global frame).
    pub boresight: f64,
}

pub const N_CELLS: usize = 3;

impl NetworkGeometry {
    pub fn new(
        cell_diameter: f64,
        user_disc_radius: f64,
        pathloss_exponent: f64,
        reference_distance: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("cell_diameter", cell_diameter),
            ("user_disc_radius", user_disc_radius),
            ("pathloss_exponent", pathloss_exponent),
            ("reference_distance", reference_distance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if user_disc_radius >= cell_diameter {
            return Err(Error::InvalidModel(
                "user disc must not reach the sites: user_disc_radius < cell_diameter".into(),
            ));
        }
        let sites = (0..N_CELLS)
            .map(|b| {
                let phi = 2.0 * PI * b as f64 / N_CELLS as f64;
                Site {
                    position: (cell_diameter * phi.cos(), cell_diameter * phi.sin()),
                    boresight: wrap_angle(phi + PI),
                }
            })
            .collect();
        Ok(Self {
            cell_diameter,
            user_disc_radius,
            pathloss_exponent,
            reference_distance,
            sites,
        })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Center of the shared user disc: the network center.
    pub fn disc_center(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    /// Distance-based power gain, flat inside the reference distance.
    pub fn pathloss(&self, distance: f64) -> f64 {
        (distance.max(self.reference_distance) / self.reference_distance)
            .powf(-self.pathloss_exponent)
    }

    /// Path gain of the reference probe at the network center, used to
    /// translate a configured edge SNR into a transmit power.
    pub fn probe_gain(&self) -> f64 {
        self.pathloss(self.cell_diameter)
    }

    /// Angle of `point` as seen from `site`, measured against boresight.
    pub fn view_angle(&self, site: usize, point: (f64, f64)) -> f64 {
        let s = self.sites[site];
        let raw = (point.1 - s.position.1).atan2(point.0 - s.position.0);
        wrap_angle(raw - s.boresight)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a;
    while x > PI {
        x -= 2.0 * PI;
    }
    while x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// A sampled set of user positions together with the induced angular
/// densities at every site. Independent of the antenna count, so one drop
/// can be instantiated at several array sizes.
#[derive(Debug, Clone)]
pub struct UserDrop {
    pub users_per_cell: usize,
    /// Flat user index `u = cell * users_per_cell + j`; user `j` of every
    /// cell shares pilot `j`.
    pub positions: Vec<(f64, f64)>,
    /// `densities[site][user]`, gains already include the path loss.
    pub densities: Vec<Vec<AngularDensity>>,
}

impl UserDrop {
    pub fn n_users(&self) -> usize {
        self.positions.len()
    }

    pub fn cell_of(&self, user: usize) -> usize {
        user / self.users_per_cell
    }

    pub fn pilot_of(&self, user: usize) -> usize {
        user % self.users_per_cell
    }
}

/// Cluster layout shared by all users of a drop.
#[derive(Debug, Clone, Copy)]
pub struct ClusterProfile {
    /// Clusters per user; the first sits at the geometric angle, the rest
    /// at random offsets within +-pi/8.
    pub clusters: usize,
    /// Laplacian scale of every cluster, radians.
    pub spread: f64,
    /// Give all users of a pilot group the covariance of the group's first
    /// member (an intentionally degenerate layout for diagnostics).
    pub shared_group_density: bool,
}

/// Draw user positions uniformly in their cell discs and build per-site
/// densities. Draw order per user: radius, azimuth, then cluster offsets.
pub fn sample_user_drop<R: rand::Rng>(
    geometry: &NetworkGeometry,
    users_per_cell: usize,
    profile: &ClusterProfile,
    rng: &mut R,
) -> Result<UserDrop> {
    if users_per_cell == 0 {
        return Err(Error::InvalidModel("users_per_cell must be >= 1".into()));
    }
    if profile.clusters == 0 {
        return Err(Error::InvalidModel("cluster count must be >= 1".into()));
    }
    let n_users = N_CELLS * users_per_cell;
    let mut positions = Vec::with_capacity(n_users);
    let mut offsets = Vec::with_capacity(n_users);
    let center = geometry.disc_center();
    for _ in 0..n_users {
        let r = geometry.user_disc_radius * rng.gen::<f64>().sqrt();
        let phi = 2.0 * PI * rng.gen::<f64>();
        positions.push((center.0 + r * phi.cos(), center.1 + r * phi.sin()));
        let mut offs = vec![0.0];
        for _ in 1..profile.clusters {
            offs.push((rng.gen::<f64>() - 0.5) * PI / 4.0);
        }
        offsets.push(offs);
    }

    let mut densities = Vec::with_capacity(N_CELLS);
    for site in 0..N_CELLS {
        let mut row = Vec::with_capacity(n_users);
        for u in 0..n_users {
            let src = if profile.shared_group_density {
                // Collapse each pilot group onto its first member.
                u % users_per_cell
            } else {
                u
            };
            let base = geometry.view_angle(site, positions[src]);
            let dist = {
                let s = geometry.sites()[site].position;
                let p = positions[src];
                ((p.0 - s.0).powi(2) + (p.1 - s.1).powi(2)).sqrt()
            };
            let clusters: Vec<Cluster> = offsets[src]
                .iter()
                .map(|off| Cluster {
                    center: base + off,
                    spread: profile.spread,
                    weight: 1.0,
                })
                .collect();
            for c in &clusters {
                if c.center.abs() >= HALF_PI {
                    return Err(Error::InvalidModel(format!(
                        "user {u} falls outside the field of view of site {site} (angle {:.3})",
                        c.center
                    )));
                }
            }
            row.push(AngularDensity::new(clusters, geometry.pathloss(dist))?);
        }
        densities.push(row);
    }
    Ok(UserDrop {
        users_per_cell,
        positions,
        densities,
    })
}

/// How covariances are materialized from densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceMode {
    /// Exact Toeplitz integral.
    Toeplitz,
    /// Circulant surrogate from the induced spectral density.
    Circulant,
    /// Diagonal surrogate in the identity basis.
    Diagonal,
}

#[derive(Debug, Clone, Copy)]
pub struct UserMeta {
    pub cell: usize,
    pub pilot: usize,
    pub power: f64,
}

/// A drop instantiated at a concrete array size and SNR operating point.
#[derive(Debug)]
pub struct Scenario {
    pub m: usize,
    pub users_per_cell: usize,
    pub n_pilots: usize,
    pub users: Vec<UserMeta>,
    /// `covariances[site][user]`.
    pub covariances: Vec<Vec<CovarianceModel>>,
    /// Training SNR (linear).
    pub rho_tr: f64,
}

impl Scenario {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_sites(&self) -> usize {
        self.covariances.len()
    }

    pub fn group_members(&self, pilot: usize) -> Vec<usize> {
        (0..self.n_users())
            .filter(|&u| self.users[u].pilot == pilot)
            .collect()
    }

    /// Users served by a cell, in flat-index order.
    pub fn cell_members(&self, cell: usize) -> Vec<usize> {
        (0..self.n_users())
            .filter(|&u| self.users[u].cell == cell)
            .collect()
    }
}

/// Options controlling scenario instantiation.
#[derive(Debug, Clone, Copy)]
pub struct InstantiationOptions {
    pub mode: CovarianceMode,
    pub quadrature_nodes: usize,
    /// Training SNR; `None` matches it to the per-user transmit power, so
    /// the *effective* (post-pathloss) training SNR of the reference probe
    /// equals the configured data SNR.
    pub rho_tr: Option<f64>,
}

/// Build a scenario from a drop at `m` antennas and an edge SNR in dB.
///
/// All users transmit at the common power that gives the reference probe
/// at the network center the configured SNR; no per-user power control.
pub fn instantiate_scenario(
    drop: &UserDrop,
    geometry: &NetworkGeometry,
    m: usize,
    snr_db: f64,
    opts: &InstantiationOptions,
) -> Result<Scenario> {
    let rho_ul = 10f64.powf(snr_db / 10.0);
    let power = rho_ul / geometry.probe_gain();
    // Covariances carry the pathloss, so a raw per-antenna noise level of
    // 1/rho_ul would drown every channel. Matching the training SNR to the
    // transmit power makes the probe's effective training SNR equal rho_ul.
    let rho_tr = opts.rho_tr.unwrap_or(power);
    if !(rho_tr.is_finite() && rho_tr > 0.0) {
        return Err(Error::InvalidModel(format!(
            "training SNR must be positive, got {rho_tr}"
        )));
    }
    let users: Vec<UserMeta> = (0..drop.n_users())
        .map(|u| UserMeta {
            cell: drop.cell_of(u),
            pilot: drop.pilot_of(u),
            power,
        })
        .collect();
    let mut covariances = Vec::with_capacity(N_CELLS);
    for site in 0..N_CELLS {
        let mut row = Vec::with_capacity(drop.n_users());
        for u in 0..drop.n_users() {
            let density = &drop.densities[site][u];
            let cov = match opts.mode {
                CovarianceMode::Toeplitz => toeplitz_covariance(density, m, opts.quadrature_nodes)?,
                CovarianceMode::Circulant => {
                    circulant_covariance(&SpectrumFn::Density(density.clone()), m)?
                }
                CovarianceMode::Diagonal => {
                    diagonal_covariance(&SpectrumFn::Density(density.clone()), m)?
                }
            };
            row.push(cov);
        }
        covariances.push(row);
    }
    Ok(Scenario {
        m,
        users_per_cell: drop.users_per_cell,
        n_pilots: drop.users_per_cell,
        users,
        covariances,
        rho_tr,
    })
}
