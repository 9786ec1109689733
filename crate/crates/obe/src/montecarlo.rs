//! Seeded Monte Carlo sweeps over array size and SNR.
//!
//! For every grid point the statistical transformations are built exactly
//! once; trials then draw channels and training noise, form filters, and
//! score each user's conditional SINR at its serving site. Trials run in
//! parallel with per-trial random streams derived from (seed, point, trial),
//! so results are bit-identical regardless of worker count.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel_model::{
    instantiate_scenario, sample_user_drop, Basis, ClusterProfile, CovarianceMode,
    InstantiationOptions, NetworkGeometry, Scenario, UserDrop,
};
use crate::equalizers::{
    bilinear_filter, default_diagonal_weights, diagonal_obe, lmmse_filters, ls_mf_transformation,
    mmse_mf_transformations, mmse_zf_filters, obe_transformations, Transformation,
};
use crate::error::{Error, Result};
use crate::linalg::{ceye, cr, CMat, CVec};
use crate::rng::stream;
use crate::sinr::{conditional_sinr, GroupContext};
use crate::training::{ls_observations, ChannelSampler, EstimatorBank};

/// Equalizer methods available to the sweep driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    LsMf,
    MmseMf,
    Obe,
    ObeDiag,
    Lmmse,
    MmseZf,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::LsMf,
        Method::MmseMf,
        Method::Obe,
        Method::ObeDiag,
        Method::Lmmse,
        Method::MmseZf,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::LsMf => "ls-mf",
            Method::MmseMf => "mmse-mf",
            Method::Obe => "obe",
            Method::ObeDiag => "obe-d",
            Method::Lmmse => "lmmse",
            Method::MmseZf => "mmse-zf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

/// Aggregations reported per (method, point).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    /// One row per user: average rate over trials.
    PerUserRate,
    /// The smallest per-user average rate; the row carries that user's
    /// standard error.
    MinUserRate,
    /// Network-wide average rate, treated as a per-trial statistic.
    MeanRate,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::PerUserRate, Metric::MinUserRate, Metric::MeanRate];

    pub fn tag(self) -> &'static str {
        match self {
            Metric::PerUserRate => "per-user-rate",
            Metric::MinUserRate => "min-user-rate",
            Metric::MeanRate => "mean-rate",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric '{s}'")))
    }
}

/// Whether all grid points share one user drop or redraw positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropMode {
    /// One seeded drop for the whole sweep; curves over M stay comparable.
    Fixed,
    /// An independent drop per (M, SNR) point.
    PerPoint,
}

impl DropMode {
    pub fn tag(self) -> &'static str {
        match self {
            DropMode::Fixed => "fixed",
            DropMode::PerPoint => "per-point",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(DropMode::Fixed),
            "per-point" => Ok(DropMode::PerPoint),
            _ => Err(Error::Config(format!("unknown drop mode '{s}'"))),
        }
    }
}

/// Everything a sweep needs.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub geometry: NetworkGeometry,
    pub profile: ClusterProfile,
    pub users_per_cell: usize,
    /// Pilot sequences per coherence block; must be at least
    /// `users_per_cell`. Extra pilots carry no users.
    pub n_pilots: usize,
    pub mode: CovarianceMode,
    pub quadrature_nodes: usize,
    pub antennas: Vec<usize>,
    pub snr_db: Vec<f64>,
    /// Training SNR; `None` ties it to the per-user transmit power of the
    /// point (effective training SNR = data SNR for the reference probe).
    pub rho_tr: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub metrics: Vec<Metric>,
    pub drop_mode: DropMode,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.antennas.is_empty() || self.snr_db.is_empty() {
            return Err(Error::Config(
                "antenna and SNR grids must be nonempty".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.methods.is_empty() || self.metrics.is_empty() {
            return Err(Error::Config(
                "method and metric lists must be nonempty".into(),
            ));
        }
        if self.n_pilots < self.users_per_cell {
            return Err(Error::Config(format!(
                "users_per_cell ({}) exceeds the pilot count ({}): every cell \
                 needs one pilot per user",
                self.users_per_cell, self.n_pilots
            )));
        }
        if let Some(&m) = self.antennas.iter().find(|&&m| m < self.users_per_cell) {
            return Err(Error::Config(format!(
                "array size {m} is smaller than users_per_cell ({})",
                self.users_per_cell
            )));
        }
        Ok(())
    }
}

/// One output row. `user` is `None` on aggregate rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub m: usize,
    pub snr_db: f64,
    pub metric: Metric,
    pub user: Option<usize>,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<ResultRow>,
}

/// Per-point state shared by all trials: the scenario, its channel
/// sampler, per-site estimator banks and error-covariance sums, and the
/// statistical transformations of every requested method.
pub(crate) struct PointContext {
    pub scenario: Scenario,
    sampler: ChannelSampler,
    banks: Vec<EstimatorBank>,
    /// Per site: `sum_n p_n C_tilde_n`.
    t_sum: Vec<CMat>,
    /// Per site: `I + t_sum`, the estimate-independent LMMSE core.
    lmmse_base: Vec<CMat>,
    powers: Vec<f64>,
    /// Users served by each site, flat indices.
    cell_users: Vec<Vec<usize>>,
    /// Per-user transformations at the serving site, present when the
    /// method was requested.
    obe: Vec<Option<Transformation>>,
    obe_diag: Vec<Option<Transformation>>,
    mmse_mf: Vec<Option<Transformation>>,
    ls_mf: Transformation,
    want_lmmse: bool,
    want_zf: bool,
}

impl PointContext {
    pub(crate) fn new(scenario: Scenario, methods: &[Method]) -> Result<Self> {
        let n_users = scenario.n_users();
        let n_sites = scenario.n_sites();
        let sampler = ChannelSampler::new(&scenario)?;
        let mut banks = Vec::with_capacity(n_sites);
        let mut t_sum = Vec::with_capacity(n_sites);
        let mut lmmse_base = Vec::with_capacity(n_sites);
        for site in 0..n_sites {
            let bank = EstimatorBank::new(&scenario, site)?;
            let mut t = CMat::zeros(scenario.m, scenario.m);
            for u in 0..n_users {
                t += bank.error_cov(u) * cr(scenario.users[u].power);
            }
            lmmse_base.push(ceye(scenario.m) + &t);
            t_sum.push(t);
            banks.push(bank);
        }
        let powers: Vec<f64> = scenario.users.iter().map(|u| u.power).collect();
        let cell_users: Vec<Vec<usize>> = (0..n_sites).map(|c| scenario.cell_members(c)).collect();

        let want = |m: Method| methods.contains(&m);
        let mut obe = vec![None; n_users];
        let mut obe_diag = vec![None; n_users];
        let mut mmse_mf = vec![None; n_users];
        let diag_basis = match scenario.covariances[0][0].structure() {
            crate::channel_model::CovStructure::DiagonalIdentity => Basis::Identity,
            _ => Basis::Dft,
        };
        for site in 0..n_sites {
            // Diagonals of every covariance at this site, for the partial
            // information method.
            let site_diags: Option<Vec<Vec<f64>>> = want(Method::ObeDiag).then(|| {
                (0..n_users)
                    .map(|u| scenario.covariances[site][u].basis_diagonal(diag_basis))
                    .collect()
            });
            for pilot in 0..scenario.users_per_cell {
                let members = scenario.group_members(pilot);
                let served = members.iter().position(|&u| scenario.users[u].cell == site);
                let Some(served) = served else { continue };
                if want(Method::Obe) {
                    let ctx = GroupContext::from_scenario(&scenario, site, pilot)?;
                    let sol = obe_transformations(&ctx)?;
                    obe[members[served]] = Some(sol.transforms[served].clone());
                }
                if want(Method::MmseMf) {
                    let ctx = GroupContext::from_scenario(&scenario, site, pilot)?;
                    let t = mmse_mf_transformations(&ctx)?;
                    mmse_mf[members[served]] = Some(t[served].clone());
                }
                if let Some(diags) = &site_diags {
                    let all: Vec<(f64, Vec<f64>)> = (0..n_users)
                        .map(|u| (powers[u], diags[u].clone()))
                        .collect();
                    let weights = default_diagonal_weights(&all, &members, scenario.rho_tr)?;
                    let group_diags: Vec<Vec<f64>> =
                        members.iter().map(|&u| diags[u].clone()).collect();
                    let penalties: Vec<f64> = members.iter().map(|&u| 1.0 / powers[u]).collect();
                    let t = diagonal_obe(&group_diags, &weights, &penalties, diag_basis)?;
                    obe_diag[members[served]] = Some(t[served].clone());
                }
            }
        }
        Ok(Self {
            ls_mf: ls_mf_transformation(scenario.m),
            want_lmmse: want(Method::Lmmse),
            want_zf: want(Method::MmseZf),
            scenario,
            sampler,
            banks,
            t_sum,
            lmmse_base,
            powers,
            cell_users,
            obe,
            obe_diag,
            mmse_mf,
        })
    }
}

/// One Monte Carlo draw: rates in bit/s/Hz per requested method and user.
pub(crate) fn run_trial(
    point: &PointContext,
    methods: &[Method],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    let scen = &point.scenario;
    let n_users = scen.n_users();
    let channels = point.sampler.sample(rng);
    let obs = ls_observations(&channels, scen, rng);
    let estimates: Vec<Vec<CVec>> = point
        .banks
        .iter()
        .map(|bank| bank.estimate_all(&obs))
        .collect();

    // Per-realization filters, indexed like cell_users.
    let lmmse: Option<Vec<Vec<CVec>>> = if point.want_lmmse {
        let mut per_site = Vec::with_capacity(scen.n_sites());
        for site in 0..scen.n_sites() {
            per_site.push(lmmse_filters(
                &point.lmmse_base[site],
                &estimates[site],
                &point.powers,
                &point.cell_users[site],
            )?);
        }
        Some(per_site)
    } else {
        None
    };
    let zf: Option<Vec<Vec<CVec>>> = if point.want_zf {
        let mut per_site = Vec::with_capacity(scen.n_sites());
        for site in 0..scen.n_sites() {
            let served: Vec<&CVec> = point.cell_users[site]
                .iter()
                .map(|&u| &estimates[site][u])
                .collect();
            per_site.push(mmse_zf_filters(&served)?);
        }
        Some(per_site)
    } else {
        None
    };

    let mut rates = vec![vec![0.0; n_users]; methods.len()];
    for (mi, &method) in methods.iter().enumerate() {
        for u in 0..n_users {
            let site = scen.users[u].cell;
            let pilot = scen.users[u].pilot;
            let g = match method {
                Method::LsMf => bilinear_filter(&point.ls_mf, &obs.psi[site][pilot])?,
                Method::MmseMf => bilinear_filter(
                    point.mmse_mf[u].as_ref().expect("mmse-mf built"),
                    &obs.psi[site][pilot],
                )?,
                Method::Obe => bilinear_filter(
                    point.obe[u].as_ref().expect("obe built"),
                    &obs.psi[site][pilot],
                )?,
                Method::ObeDiag => bilinear_filter(
                    point.obe_diag[u].as_ref().expect("obe-d built"),
                    &obs.psi[site][pilot],
                )?,
                Method::Lmmse => {
                    let idx = point.cell_users[site].iter().position(|&x| x == u).unwrap();
                    lmmse.as_ref().expect("lmmse built")[site][idx].clone()
                }
                Method::MmseZf => {
                    let idx = point.cell_users[site].iter().position(|&x| x == u).unwrap();
                    zf.as_ref().expect("zf built")[site][idx].clone()
                }
            };
            let gamma =
                conditional_sinr(&point.powers, &estimates[site], &point.t_sum[site], &g, u)?;
            rates[mi][u] = (1.0 + gamma).log2();
        }
    }
    Ok(rates)
}

struct PointAccumulator {
    trials: usize,
    /// Per method: per-user sums and squared sums of rates.
    sum: Vec<Vec<f64>>,
    sumsq: Vec<Vec<f64>>,
    /// Per method: sums of the per-trial network-mean rate.
    mean_sum: Vec<f64>,
    mean_sumsq: Vec<f64>,
}

impl PointAccumulator {
    fn new(n_methods: usize, n_users: usize) -> Self {
        Self {
            trials: 0,
            sum: vec![vec![0.0; n_users]; n_methods],
            sumsq: vec![vec![0.0; n_users]; n_methods],
            mean_sum: vec![0.0; n_methods],
            mean_sumsq: vec![0.0; n_methods],
        }
    }

    fn absorb(&mut self, rates: &[Vec<f64>]) {
        self.trials += 1;
        for (mi, per_user) in rates.iter().enumerate() {
            let mut acc = 0.0;
            for (u, &r) in per_user.iter().enumerate() {
                self.sum[mi][u] += r;
                self.sumsq[mi][u] += r * r;
                acc += r;
            }
            let mean = acc / per_user.len() as f64;
            self.mean_sum[mi] += mean;
            self.mean_sumsq[mi] += mean * mean;
        }
    }

    fn stats(&self, sum: f64, sumsq: f64) -> (f64, f64) {
        let n = self.trials as f64;
        let mean = sum / n;
        if self.trials < 2 {
            return (mean, 0.0);
        }
        let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }

    fn rows(
        &self,
        methods: &[Method],
        metrics: &[Metric],
        m: usize,
        snr_db: f64,
    ) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for (mi, &method) in methods.iter().enumerate() {
            let per_user: Vec<(f64, f64)> = (0..self.sum[mi].len())
                .map(|u| self.stats(self.sum[mi][u], self.sumsq[mi][u]))
                .collect();
            for &metric in metrics {
                match metric {
                    Metric::PerUserRate => {
                        for (u, &(value, stderr)) in per_user.iter().enumerate() {
                            rows.push(ResultRow {
                                method,
                                m,
                                snr_db,
                                metric,
                                user: Some(u),
                                value,
                                stderr,
                            });
                        }
                    }
                    Metric::MinUserRate => {
                        let (value, stderr) = per_user
                            .iter()
                            .copied()
                            .min_by(|a, b| a.0.total_cmp(&b.0))
                            .expect("at least one user");
                        rows.push(ResultRow {
                            method,
                            m,
                            snr_db,
                            metric,
                            user: None,
                            value,
                            stderr,
                        });
                    }
                    Metric::MeanRate => {
                        let (value, stderr) = self.stats(self.mean_sum[mi], self.mean_sumsq[mi]);
                        rows.push(ResultRow {
                            method,
                            m,
                            snr_db,
                            metric,
                            user: None,
                            value,
                            stderr,
                        });
                    }
                }
            }
        }
        rows
    }
}

fn point_error(e: Error, m: usize, snr_db: f64) -> Error {
    Error::InvalidModel(format!("point (M = {m}, SNR = {snr_db} dB): {e}"))
}

/// Run the full sweep. Rows come back sorted by
/// (method, M, SNR, metric, user); per-user rows precede aggregates of the
/// same metric set.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let fixed_drop: Option<UserDrop> = match spec.drop_mode {
        DropMode::Fixed => Some(sample_user_drop(
            &spec.geometry,
            spec.users_per_cell,
            &spec.profile,
            &mut stream(spec.seed, "drop", &[]),
        )?),
        DropMode::PerPoint => None,
    };
    let opts = InstantiationOptions {
        mode: spec.mode,
        quadrature_nodes: spec.quadrature_nodes,
        rho_tr: spec.rho_tr,
    };

    let mut rows = Vec::new();
    for (ai, &m) in spec.antennas.iter().enumerate() {
        for (si, &snr_db) in spec.snr_db.iter().enumerate() {
            let drop = match &fixed_drop {
                Some(d) => d.clone(),
                None => sample_user_drop(
                    &spec.geometry,
                    spec.users_per_cell,
                    &spec.profile,
                    &mut stream(spec.seed, "drop", &[ai as u64, si as u64]),
                )?,
            };
            let mut scenario = instantiate_scenario(&drop, &spec.geometry, m, snr_db, &opts)
                .map_err(|e| point_error(e, m, snr_db))?;
            scenario.n_pilots = spec.n_pilots;
            let point = PointContext::new(scenario, &spec.methods)
                .map_err(|e| point_error(e, m, snr_db))?;

            let per_trial: Vec<Result<Vec<Vec<f64>>>> = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream(spec.seed, "trial", &[ai as u64, si as u64, t as u64]);
                    run_trial(&point, &spec.methods, &mut rng)
                })
                .collect();
            let mut acc = PointAccumulator::new(spec.methods.len(), point.scenario.n_users());
            for r in per_trial {
                acc.absorb(&r.map_err(|e| point_error(e, m, snr_db))?);
            }
            rows.extend(acc.rows(&spec.methods, &spec.metrics, m, snr_db));
        }
    }
    rows.sort_by(|a, b| {
        (a.method.tag(), a.m)
            .cmp(&(b.method.tag(), b.m))
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(
                (a.metric.tag(), a.user.map_or(usize::MAX, |u| u))
                    .cmp(&(b.metric.tag(), b.user.map_or(usize::MAX, |u| u))),
            )
    });
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::{CovarianceModel, Scenario, UserMeta};
    use crate::linalg::CMat;
    use approx::assert_relative_eq;

    fn tiny_spec(trials: usize, seed: u64) -> SweepSpec {
        SweepSpec {
            geometry: NetworkGeometry::new(500.0, 125.0, 3.7, 50.0).unwrap(),
            profile: ClusterProfile {
                clusters: 1,
                spread: 10f64.to_radians(),
                shared_group_density: false,
            },
            users_per_cell: 2,
            n_pilots: 2,
            mode: CovarianceMode::Circulant,
            quadrature_nodes: 256,
            antennas: vec![16],
            snr_db: vec![-6.0],
            rho_tr: None,
            trials,
            seed,
            methods: Method::ALL.to_vec(),
            metrics: Metric::ALL.to_vec(),
            drop_mode: DropMode::Fixed,
        }
    }

    #[test]
    fn trials_with_same_stream_reproduce_bitwise() {
        let spec = tiny_spec(1, 7);
        let drop = sample_user_drop(
            &spec.geometry,
            spec.users_per_cell,
            &spec.profile,
            &mut stream(7, "drop", &[]),
        )
        .unwrap();
        let opts = InstantiationOptions {
            mode: spec.mode,
            quadrature_nodes: spec.quadrature_nodes,
            rho_tr: None,
        };
        let scenario = instantiate_scenario(&drop, &spec.geometry, 16, -6.0, &opts).unwrap();
        let point = PointContext::new(scenario, &spec.methods).unwrap();
        let a = run_trial(&point, &spec.methods, &mut stream(7, "trial", &[0, 0, 3])).unwrap();
        let b = run_trial(&point, &spec.methods, &mut stream(7, "trial", &[0, 0, 3])).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&point, &spec.methods, &mut stream(7, "trial", &[0, 0, 4])).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_point_single_trial_row_count() {
        let mut spec = tiny_spec(1, 3);
        spec.methods = vec![Method::Obe, Method::Lmmse];
        let res = run_sweep(&spec).unwrap();
        // Per method: 6 per-user rows + min + mean.
        assert_eq!(res.rows.len(), 2 * (6 + 1 + 1));
        assert!(res.rows.iter().all(|r| r.stderr == 0.0));
        assert!(res
            .rows
            .iter()
            .all(|r| r.value.is_finite() && r.value > 0.0));
    }

    #[test]
    fn sweep_is_worker_count_invariant() {
        let spec = tiny_spec(8, 11);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec))
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec))
            .unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn doubling_trials_shrinks_stderr_like_sqrt() {
        let mut spec = tiny_spec(64, 5);
        spec.methods = vec![Method::Obe];
        spec.metrics = vec![Metric::MeanRate];
        let small = run_sweep(&spec).unwrap();
        spec.trials = 256;
        let large = run_sweep(&spec).unwrap();
        let (s, l) = (small.rows[0].stderr, large.rows[0].stderr);
        // 4x trials should halve the standard error, within statistical slack.
        let ratio = s / l;
        assert!(
            (1.4..3.0).contains(&ratio),
            "stderr ratio {ratio} out of range ({s} vs {l})"
        );
    }

    #[test]
    fn per_point_drops_differ_fixed_drops_do_not() {
        let mut spec = tiny_spec(4, 19);
        spec.antennas = vec![12, 16];
        spec.methods = vec![Method::MmseMf];
        spec.metrics = vec![Metric::MeanRate];
        let fixed = run_sweep(&spec).unwrap();
        spec.drop_mode = DropMode::PerPoint;
        let redrop = run_sweep(&spec).unwrap();
        assert_eq!(fixed.rows.len(), 2);
        assert_eq!(redrop.rows.len(), 2);
        // Same seed, same first point index, but different drop streams.
        assert_ne!(fixed.rows[0].value, redrop.rows[0].value);
    }

    #[test]
    fn rejects_inconsistent_specs() {
        let mut spec = tiny_spec(1, 1);
        spec.users_per_cell = 3;
        assert!(matches!(run_sweep(&spec), Err(Error::Config(_))));
        let mut spec = tiny_spec(1, 1);
        spec.trials = 0;
        assert!(run_sweep(&spec).is_err());
        let mut spec = tiny_spec(1, 1);
        spec.antennas = vec![1];
        assert!(run_sweep(&spec).is_err());
    }

    /// Hand-built single-user single-site scenario for calibration tests.
    fn lone_user_scenario(m: usize, power: f64, rho_tr: f64) -> Scenario {
        let c = CovarianceModel::from_dense(CMat::identity(m, m)).unwrap();
        Scenario {
            m,
            users_per_cell: 1,
            n_pilots: 1,
            users: vec![UserMeta {
                cell: 0,
                pilot: 0,
                power,
            }],
            covariances: vec![vec![c]],
            rho_tr,
        }
    }

    #[test]
    fn perfect_training_matched_filter_hits_p_times_channel_energy() {
        let scen = lone_user_scenario(24, 0.8, 1e12);
        let methods = vec![Method::MmseMf];
        let point = PointContext::new(scen, &methods).unwrap();
        let mut rng = stream(2, "trial", &[0]);
        let channels = point.sampler.sample(&mut rng);
        let expected = 0.8 * channels.h[0][0].norm_squared();
        // Redraw identically inside run_trial.
        let mut rng = stream(2, "trial", &[0]);
        let rates = run_trial(&point, &methods, &mut rng).unwrap();
        let gamma = 2f64.powf(rates[0][0]) - 1.0;
        assert_relative_eq!(gamma, expected, max_relative = 0.01);
    }

    #[test]
    fn average_conditional_rate_dominates_statistical_bound() {
        // The conditional bound is the tighter of the two: its average rate
        // must not fall below log2(1 + gamma*) by more than noise.
        let spec = tiny_spec(400, 23);
        let drop = sample_user_drop(
            &spec.geometry,
            spec.users_per_cell,
            &spec.profile,
            &mut stream(23, "drop", &[]),
        )
        .unwrap();
        let opts = InstantiationOptions {
            mode: spec.mode,
            quadrature_nodes: spec.quadrature_nodes,
            rho_tr: None,
        };
        let scenario = instantiate_scenario(&drop, &spec.geometry, 32, -6.0, &opts).unwrap();
        let methods = vec![Method::Obe];
        let mut closed = vec![0.0; scenario.n_users()];
        for site in 0..scenario.n_sites() {
            for pilot in 0..scenario.users_per_cell {
                let ctx = GroupContext::from_scenario(&scenario, site, pilot).unwrap();
                let gamma = crate::sinr::gamma_matrix(&ctx).unwrap();
                let members = scenario.group_members(pilot);
                for (i, &u) in members.iter().enumerate() {
                    if scenario.users[u].cell == site {
                        closed[u] =
                            crate::sinr::obe_sinr_closed_form(&gamma, &ctx.powers, scenario.m, i)
                                .unwrap();
                    }
                }
            }
        }
        let point = PointContext::new(scenario, &methods).unwrap();
        let n_users = point.scenario.n_users();
        let mut acc = PointAccumulator::new(1, n_users);
        for t in 0..400u64 {
            let rates = run_trial(&point, &methods, &mut stream(23, "trial", &[0, 0, t])).unwrap();
            acc.absorb(&rates);
        }
        for u in 0..n_users {
            let (mean, stderr) = acc.stats(acc.sum[0][u], acc.sumsq[0][u]);
            let bound = (1.0 + closed[u]).log2();
            assert!(
                mean >= bound - 2.0 * stderr,
                "user {u}: conditional mean {mean} below statistical bound {bound}"
            );
        }
    }

    #[test]
    fn rows_are_sorted_and_tagged() {
        let mut spec = tiny_spec(2, 31);
        spec.antennas = vec![16, 12];
        spec.methods = vec![Method::MmseZf, Method::LsMf];
        spec.metrics = vec![Metric::MinUserRate, Metric::PerUserRate];
        let res = run_sweep(&spec).unwrap();
        let keys: Vec<_> = res
            .rows
            .iter()
            .map(|r| {
                (
                    r.method.tag(),
                    r.m,
                    r.metric.tag(),
                    r.user.map_or(usize::MAX, |u| u),
                )
            })
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(res.rows.iter().any(|r| r.method.tag() == "mmse-zf"));
        assert_eq!(Method::parse("obe-d").unwrap(), Method::ObeDiag);
        assert!(Method::parse("obe-x").is_err());
        assert_eq!(Metric::parse("min-user-rate").unwrap(), Metric::MinUserRate);
        assert_eq!(DropMode::parse("per-point").unwrap(), DropMode::PerPoint);
    }
}
