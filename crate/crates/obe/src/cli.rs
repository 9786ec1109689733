//! Subcommand dispatch: `run` (Monte Carlo sweep to CSV), `check`
//! (self-validation oracles), `asymptotic` (closed-form SINR scaling to
//! CSV). Worker count is taken from the `OBE_WORKERS` environment variable;
//! all output files are byte-deterministic given (config bytes, seed).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::channel_model::{
    instantiate_scenario, sample_user_drop, weak_equivalence_gap, InstantiationOptions, Scenario,
    UserDrop,
};
use crate::config::Config;
use crate::equalizers::obe_oracle;
use crate::error::{Error, Result};
use crate::montecarlo::{run_sweep, Metric, SweepResult};
use crate::rng::stream;
use crate::sinr::{
    asymptotic_sinr, condition_diagnostics, gamma_matrix, gamma_matrix_partial, gamma_ula_limit,
    obe_sinr_closed_form, GroupContext, LimitInstance,
};

const USAGE: &str = "usage:
  obe run <config> --out <path>         run the configured sweep, write CSV
  obe check <config> [--tol <x>]        run self-validation checks
  obe asymptotic <config> --out <path>  closed-form SINR scaling, write CSV

exit codes: 0 ok, 1 failed check or runtime error, 2 usage or config error.";

/// Entry point shared by the binary and the integration tests. Returns the
/// process exit code; diagnostics go to stderr, reports to stdout.
pub fn main_entry(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(args: &[String]) -> Result<i32> {
    let mut it = args.iter().map(String::as_str);
    match it.next() {
        Some("run") => {
            let (config, out) = config_and_out(&mut it, "run")?;
            cmd_run(&config, &out)?;
            Ok(0)
        }
        Some("check") => {
            let mut config = None;
            let mut tol = 1e-9;
            while let Some(a) = it.next() {
                match a {
                    "--tol" => {
                        let v = it
                            .next()
                            .ok_or_else(|| Error::Config("--tol needs a value".into()))?;
                        tol = v.parse().map_err(|_| {
                            Error::Config(format!("--tol: expected a number, got '{v}'"))
                        })?;
                    }
                    _ if config.is_none() => config = Some(a.to_string()),
                    _ => return Err(Error::Config(format!("unexpected argument '{a}'"))),
                }
            }
            let config =
                config.ok_or_else(|| Error::Config(format!("missing config path\n{USAGE}")))?;
            let cfg = Config::load(config)?;
            Ok(if cmd_check(&cfg, tol)? { 0 } else { 1 })
        }
        Some("asymptotic") => {
            let (config, out) = config_and_out(&mut it, "asymptotic")?;
            cmd_asymptotic(&config, &out)?;
            Ok(0)
        }
        Some("help") | Some("--help") | Some("-h") => {
            println!("{USAGE}");
            Ok(0)
        }
        Some(other) => Err(Error::Config(format!(
            "unknown subcommand '{other}'\n{USAGE}"
        ))),
        None => Err(Error::Config(format!("missing subcommand\n{USAGE}"))),
    }
}

fn config_and_out<'a>(
    it: &mut impl Iterator<Item = &'a str>,
    cmd: &str,
) -> Result<(String, String)> {
    let mut config = None;
    let mut out = None;
    while let Some(a) = it.next() {
        match a {
            "--out" => {
                out = Some(
                    it.next()
                        .ok_or_else(|| Error::Config("--out needs a path".into()))?
                        .to_string(),
                )
            }
            _ if config.is_none() => config = Some(a.to_string()),
            _ => return Err(Error::Config(format!("unexpected argument '{a}'"))),
        }
    }
    match (config, out) {
        (Some(c), Some(o)) => Ok((c, o)),
        _ => Err(Error::Config(format!(
            "'{cmd}' needs a config path and --out <path>\n{USAGE}"
        ))),
    }
}

/// Run inside a rayon pool sized by `OBE_WORKERS` when set.
fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var("OBE_WORKERS") {
        Err(_) => Ok(f()),
        Ok(s) => {
            let n: usize = s.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
                Error::Config(format!("OBE_WORKERS must be a positive integer, got '{s}'"))
            })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidModel(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize sweep rows with the fixed column set
/// `method,M,snr_db,metric,user,value,stderr`.
pub fn write_sweep_csv<W: Write>(mut w: W, result: &SweepResult) -> std::io::Result<()> {
    writeln!(w, "method,M,snr_db,metric,user,value,stderr")?;
    for r in &result.rows {
        let user = match (r.metric, r.user) {
            (_, Some(u)) => u.to_string(),
            (Metric::MinUserRate, None) => "min".to_string(),
            (Metric::MeanRate, None) => "mean".to_string(),
            (Metric::PerUserRate, None) => unreachable!("per-user rows carry a user"),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.method.tag(),
            r.m,
            r.snr_db,
            r.metric.tag(),
            user,
            fmt(r.value),
            fmt(r.stderr)
        )?;
    }
    Ok(())
}

fn cmd_run(config: &str, out: &str) -> Result<()> {
    let cfg = Config::load(config)?;
    let spec = cfg.to_spec()?;
    let result = with_workers(|| run_sweep(&spec))??;
    let file = File::create(Path::new(out))?;
    let mut w = BufWriter::new(file);
    write_sweep_csv(&mut w, &result)?;
    w.flush()?;
    println!("wrote {} rows to {out}", result.rows.len());
    Ok(())
}

fn seeded_drop(cfg: &Config) -> Result<UserDrop> {
    sample_user_drop(
        &cfg.geometry()?,
        cfg.network.users_per_cell,
        &cfg.profile(),
        &mut stream(cfg.sim.seed, "drop", &[]),
    )
}

fn scenario_at(cfg: &Config, drop: &UserDrop, m: usize) -> Result<Scenario> {
    let opts = InstantiationOptions {
        mode: cfg.channel.covariance_mode,
        quadrature_nodes: cfg.channel.quadrature_nodes,
        rho_tr: cfg.sim.rho_tr,
    };
    let mut s = instantiate_scenario(drop, &cfg.geometry()?, m, cfg.sim.snr_db[0], &opts)?;
    s.n_pilots = cfg.sim.pilots;
    Ok(s)
}

/// Self-validation: brute-force oracle agreement at a small array size,
/// conditioning diagnostics over the configured sizes, and the shrinking
/// gap between exact and circulant-surrogate covariances. Returns whether
/// every hard check passed; diagnostics only warn.
fn cmd_check(cfg: &Config, tol: f64) -> Result<bool> {
    let drop = seeded_drop(cfg)?;
    let mut all_ok = true;

    // Brute-force equivalence at M = 8.
    let scen = scenario_at(cfg, &drop, 8)?;
    let mut worst: f64 = 0.0;
    for site in 0..scen.n_sites() {
        for pilot in 0..scen.users_per_cell {
            let ctx = GroupContext::from_scenario(&scen, site, pilot)?;
            let gamma = gamma_matrix(&ctx)?;
            for k in 0..ctx.group_size() {
                let (_, g_star) = obe_oracle(&ctx, k)?;
                let g_closed = obe_sinr_closed_form(&gamma, &ctx.powers, scen.m, k)?;
                worst = worst.max((g_star - g_closed).abs() / g_star.abs());
            }
        }
    }
    let ok = worst <= tol;
    all_ok &= ok;
    println!(
        "[{}] oracle equivalence at M = 8: max relative gap {:.3e} (tol {:.1e})",
        if ok { "PASS" } else { "FAIL" },
        worst,
        tol
    );

    // Conditioning diagnostics per configured size (warnings only).
    for &m in &cfg.sim.antennas {
        let scen = scenario_at(cfg, &drop, m)?;
        let mut min_trace = f64::INFINITY;
        let mut max_norm: f64 = 0.0;
        let mut worst_cond: f64 = 0.0;
        let mut gram_ratio = f64::INFINITY;
        for site in 0..scen.n_sites() {
            for pilot in 0..scen.users_per_cell {
                let ctx = GroupContext::from_scenario(&scen, site, pilot)?;
                let d = condition_diagnostics(&ctx)?;
                for (&t, &n) in d.trace_over_m.iter().zip(&d.spectral_norm) {
                    min_trace = min_trace.min(t);
                    max_norm = max_norm.max(n / t);
                }
                worst_cond = worst_cond.max(d.gamma_condition);
                let gram = crate::linalg::hermitian_eigenvalues(&ctx_gram(&ctx));
                let (lo, hi) = (gram[0], gram[gram.len() - 1]);
                gram_ratio = gram_ratio.min(if hi > 0.0 { (lo / hi).max(0.0) } else { 0.0 });
            }
        }
        let degenerate = gram_ratio < 1e-10 || worst_cond > 1e10;
        println!(
            "[{}] conditioning at M = {m}: trace/M >= {:.3e}, norm/trace <= {:.3e}, \
             gram eig ratio {:.3e}, coupling condition {:.3e}",
            if degenerate { "WARN" } else { "PASS" },
            min_trace,
            max_norm,
            gram_ratio,
            worst_cond
        );
        if degenerate {
            println!(
                "       some covariances of a pilot group are (nearly) linearly \
                 dependent; optimal-filter SINRs will saturate"
            );
        }
    }

    // Circulant surrogate gap must shrink with the array.
    let (m_lo, m_hi) = (
        *cfg.sim.antennas.iter().min().unwrap(),
        *cfg.sim.antennas.iter().max().unwrap(),
    );
    if m_lo == m_hi {
        println!("[PASS] surrogate gap: single array size configured, nothing to compare");
    } else {
        let gap_at = |m: usize| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for site_row in &drop.densities {
                for density in site_row {
                    let g = weak_equivalence_gap(density, m, cfg.channel.quadrature_nodes)?
                        / density.gain();
                    worst = worst.max(g);
                }
            }
            Ok(worst)
        };
        let (lo, hi) = (gap_at(m_lo)?, gap_at(m_hi)?);
        let ok = hi < lo;
        all_ok &= ok;
        println!(
            "[{}] surrogate gap shrinks: {:.4e} at M = {m_lo} -> {:.4e} at M = {m_hi}",
            if ok { "PASS" } else { "FAIL" },
            lo,
            hi
        );
    }

    println!(
        "{}",
        if all_ok {
            "all checks passed"
        } else {
            "CHECKS FAILED"
        }
    );
    Ok(all_ok)
}

fn ctx_gram(ctx: &GroupContext) -> crate::linalg::CMat {
    let covs: Vec<&crate::linalg::CMat> = ctx.covs.iter().map(|c| c.matrix()).collect();
    crate::sinr::gram_matrix(&covs)
}

/// Closed-form SINR scaling over the configured sizes: finite-M optimum,
/// its large-array form, the estimate-conditioned deterministic equivalent,
/// and the array-limit prediction from the angular densities alone.
fn cmd_asymptotic(config: &str, out: &str) -> Result<()> {
    let cfg = Config::load(config)?;
    let drop = seeded_drop(&cfg)?;
    let n_users = drop.n_users();

    // The limit coupling matrix depends only on densities and powers;
    // compute it once per (site, pilot).
    let first = scenario_at(&cfg, &drop, *cfg.sim.antennas.iter().min().unwrap())?;
    let mut limits = vec![vec![None; first.users_per_cell]; first.n_sites()];
    for site in 0..first.n_sites() {
        for pilot in 0..first.users_per_cell {
            let members = first.group_members(pilot);
            let inst = LimitInstance {
                group: members.iter().map(|&u| &drop.densities[site][u]).collect(),
                all: (0..n_users)
                    .map(|u| (first.users[u].power, &drop.densities[site][u]))
                    .collect(),
                rho_tr: first.rho_tr,
            };
            match gamma_ula_limit(&inst, 128) {
                Ok(g) => limits[site][pilot] = Some(g),
                Err(e) => log::warn!("limit for site {site} pilot {pilot} unavailable: {e}"),
            }
        }
    }

    struct Row {
        user: usize,
        m: usize,
        star: f64,
        asy: f64,
        det: f64,
        limit: f64,
        flag: &'static str,
    }
    let mut rows: Vec<Row> = Vec::new();
    for &m in &cfg.sim.antennas {
        let scen = scenario_at(&cfg, &drop, m)?;
        for site in 0..scen.n_sites() {
            for pilot in 0..scen.users_per_cell {
                let mut ctx = GroupContext::from_scenario(&scen, site, pilot)?;
                ctx.attach_partial_information(&scen, site)?;
                let gamma = gamma_matrix(&ctx)?;
                let gamma_det = gamma_matrix_partial(&ctx)?;
                let members = scen.group_members(pilot);
                for (i, &u) in members.iter().enumerate() {
                    if scen.users[u].cell != site {
                        continue;
                    }
                    let mut flag = "ok";
                    let mut grab = |r: Result<f64>, tag: &'static str| match r {
                        Ok(v) => v,
                        Err(_) => {
                            if flag == "ok" {
                                flag = tag;
                            }
                            f64::NAN
                        }
                    };
                    let star = grab(
                        obe_sinr_closed_form(&gamma, &ctx.powers, m, i),
                        "star-singular",
                    );
                    let asy = grab(asymptotic_sinr(&gamma, &ctx.powers, m, i), "asy-singular");
                    let det = grab(
                        obe_sinr_closed_form(&gamma_det, &ctx.powers, m, i),
                        "det-singular",
                    );
                    let limit = match &limits[site][pilot] {
                        Some(g) => grab(asymptotic_sinr(g, &ctx.powers, m, i), "limit-singular"),
                        None => {
                            if flag == "ok" {
                                flag = "limit-unavailable";
                            }
                            f64::NAN
                        }
                    };
                    rows.push(Row {
                        user: u,
                        m,
                        star,
                        asy,
                        det,
                        limit,
                        flag,
                    });
                }
            }
        }
    }
    rows.sort_by_key(|r| (r.m, r.user));

    let file = File::create(Path::new(out))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "user,M,gamma_star,gamma_asy,gamma_det,gamma_limit,flag")?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.user,
            r.m,
            fmt(r.star),
            fmt(r.asy),
            fmt(r.det),
            fmt(r.limit),
            r.flag
        )?;
    }
    w.flush()?;
    println!("wrote {} rows to {out}", rows.len());
    Ok(())
}
