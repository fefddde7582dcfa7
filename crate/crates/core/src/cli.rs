//! Experiment runner behind the command-line interface: single-point bound
//! evaluation, parameter sweeps to CSV, protocol simulation, and the
//! self-verification report.

use crate::bounds::{
    eve_leakage, legit_rate, lower_bound, upper_bound, EtInputDistribution, EvalOptions,
    SearchConfig, SecrecyResult,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::hd_benchmark::{hd_power, hd_power_residual, hd_secrecy_rate, TGridCfg};
use crate::model::{
    db_to_linear, dbm_to_watts, discretize_exponential, linear_to_db, path_loss, FadingGrid,
};
use crate::numerics::{cal_i, ent_excess, mixture_entropy, MixtureSpec};
use crate::power_policy::{
    calibrate_lambda2, ehu_power_residual, energy_balance_residual, mean_harvest, solve_ehu_power,
};
use crate::protocol_sim::{simulate, SimConfig};
use std::f64::consts::LN_2;
use std::io::Write;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    PEtDbm,
    Alpha1Db,
    Qbar1Db,
    Eta,
    DEhuEve,
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p_et_dbm" => Ok(SweepVariable::PEtDbm),
            "alpha1_db" => Ok(SweepVariable::Alpha1Db),
            "qbar1_db" => Ok(SweepVariable::Qbar1Db),
            "eta" => Ok(SweepVariable::Eta),
            "d_ehu_eve" => Ok(SweepVariable::DEhuEve),
            other => Err(Error::domain(format!("unknown sweep variable `{other}`"))),
        }
    }
}

impl std::fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SweepVariable::PEtDbm => "p_et_dbm",
            SweepVariable::Alpha1Db => "alpha1_db",
            SweepVariable::Qbar1Db => "qbar1_db",
            SweepVariable::Eta => "eta",
            SweepVariable::DEhuEve => "d_ehu_eve",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOutputs {
    pub upper: bool,
    pub lower: bool,
    pub hd: bool,
    pub sim: bool,
}

impl Default for SweepOutputs {
    fn default() -> Self {
        SweepOutputs {
            upper: true,
            lower: true,
            hd: true,
            sim: false,
        }
    }
}

impl std::str::FromStr for SweepOutputs {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut out = SweepOutputs {
            upper: false,
            lower: false,
            hd: false,
            sim: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "upper" => out.upper = true,
                "lower" => out.lower = true,
                "hd" => out.hd = true,
                "sim" => out.sim = true,
                other => return Err(Error::domain(format!("unknown output `{other}`"))),
            }
        }
        if !(out.upper || out.lower || out.hd || out.sim) {
            return Err(Error::domain("no outputs selected"));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub outputs: SweepOutputs,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::domain("sweep needs at least one value"));
        }
        Ok(())
    }
}

fn apply_variable(cfg: &RunConfig, var: SweepVariable, value: f64) -> RunConfig {
    let mut out = cfg.clone();
    match var {
        SweepVariable::PEtDbm => out.params.p_et = dbm_to_watts(value),
        SweepVariable::Alpha1Db => out.params.alpha1 = db_to_linear(value),
        SweepVariable::Qbar1Db => out.params.qbar1 = db_to_linear(value).sqrt(),
        SweepVariable::Eta => out.params.eta = value,
        SweepVariable::DEhuEve => out.params.d_ehu_eve = value,
    }
    out
}

/// Rates for one parameter point plus simulator output when requested.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub result: SecrecyResult,
    pub sim_fraction_active: Option<f64>,
}

/// Evaluate the requested outputs at a single parameter point.
pub fn evaluate_point(
    cfg: &RunConfig,
    outputs: SweepOutputs,
    search: &SearchConfig,
    opts: EvalOptions,
) -> Result<PointResult> {
    cfg.params.validate()?;
    let fading = FadingGrid::rayleigh(&cfg.params, cfg.n_fading_points)?;
    let mut merged = SecrecyResult {
        c_s_upper: None,
        c_s_lower: None,
        case_label: None,
        hd_rate: None,
        diagnostics: None,
    };
    let mut lower_solution = None;
    if outputs.lower || outputs.sim {
        let (res, dist, policy) = lower_bound(&cfg.params, &fading, opts)?;
        merged.c_s_lower = res.c_s_lower;
        merged.case_label = res.case_label;
        merged.diagnostics = res.diagnostics;
        lower_solution = Some((dist, policy));
    }
    if outputs.upper {
        let (res, _, _) = upper_bound(&cfg.params, &fading, search, opts)?;
        merged.c_s_upper = res.c_s_upper;
    }
    if outputs.hd {
        let sol = hd_secrecy_rate(&cfg.params, &fading, TGridCfg::default(), opts)?;
        merged.hd_rate = Some(sol.rate);
    }
    let mut sim_fraction = None;
    if outputs.sim {
        let (dist, policy) = lower_solution.clone().expect("lower solution computed");
        let sim_cfg = SimConfig {
            n_slots: 20_000,
            k: 20,
            initial_battery: 0.0,
            et_dist: dist,
            policy,
            seed: cfg.seed,
            battery_cap: None,
        };
        let trace = simulate(&sim_cfg, &cfg.params, &fading)?;
        sim_fraction = Some(trace.fraction_active_after(1_000));
    }
    merged.check_ordering()?;
    Ok(PointResult {
        result: merged,
        sim_fraction_active: sim_fraction,
    })
}

fn fmt_opt_rate(v: Option<f64>, nats: bool) -> String {
    match v {
        Some(r) => format!("{:.9e}", if nats { r } else { r / LN_2 }),
        None => String::new(),
    }
}

/// Run a sweep and write one CSV row per value. Solver failures are
/// recorded in the row's error column instead of aborting the sweep.
pub fn run_sweep<W: Write>(
    cfg: &RunConfig,
    spec: &SweepSpec,
    search: &SearchConfig,
    opts: EvalOptions,
    nats: bool,
    out: &mut W,
) -> Result<()> {
    spec.validate()?;
    writeln!(
        out,
        "variable,value,c_s_upper_{u},c_s_lower_{u},case_label,hd_rate_{u},sim_fraction_active,runtime_ms,error",
        u = if nats { "nats" } else { "bits" }
    )?;
    let rows: Vec<String> = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut row_cfg = apply_variable(cfg, spec.variable, value);
            row_cfg.seed = cfg.seed.wrapping_add(i as u64);
            let started = Instant::now();
            let outcome = evaluate_point(&row_cfg, spec.outputs, search, opts);
            let ms = started.elapsed().as_millis();
            match outcome {
                Ok(point) => format!(
                    "{},{},{},{},{},{},{},{},",
                    spec.variable,
                    value,
                    fmt_opt_rate(point.result.c_s_upper, nats),
                    fmt_opt_rate(point.result.c_s_lower, nats),
                    point
                        .result
                        .case_label
                        .map(|c| c.to_string())
                        .unwrap_or_default(),
                    fmt_opt_rate(point.result.hd_rate, nats),
                    point
                        .sim_fraction_active
                        .map(|f| format!("{f:.6}"))
                        .unwrap_or_default(),
                    ms,
                ),
                Err(e) => format!(
                    "{},{},,,,,,{},\"{}\"",
                    spec.variable,
                    value,
                    ms,
                    e.to_string().replace('"', "'"),
                ),
            }
        })
        .collect();
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// One entry of the verification report.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        pass,
        detail,
    }
}

/// Machine-readable self-verification: runs the invariant suites at the
/// given configuration and reports measured residuals. Failures become
/// report entries, never panics.
pub fn verify(cfg: &RunConfig, opts: EvalOptions) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);

    // unit round trip
    {
        let mut worst: f64 = 0.0;
        let mut x = -200.0;
        while x <= 200.0 {
            worst = worst.max((linear_to_db(db_to_linear(x)) - x).abs());
            x += 7.3;
        }
        checks.push(check(
            "unit_roundtrip_db",
            worst <= 1e-12,
            format!("max |roundtrip - x| = {worst:.3e}"),
        ));
    }

    // fading grid mass and mean
    {
        let mut worst_mass: f64 = 0.0;
        let mut worst_mean: f64 = 0.0;
        for n in [2usize, 16, 64] {
            let d = discretize_exponential(3.7, n).unwrap();
            worst_mass = worst_mass.max((d.probs.iter().sum::<f64>() - 1.0).abs());
            worst_mean = worst_mean.max((d.mean() - 3.7).abs() / 3.7);
        }
        checks.push(check(
            "fading_grid_mass_mean",
            worst_mass <= 1e-12 && worst_mean <= 5e-3,
            format!("mass err {worst_mass:.3e}, mean rel err {worst_mean:.3e}"),
        ));
    }

    // path loss monotone
    {
        let a = path_loss(cfg.params.fc, 5.0, cfg.params.gamma).unwrap();
        let b = path_loss(cfg.params.fc, 10.0, cfg.params.gamma).unwrap();
        checks.push(check(
            "path_loss_monotone",
            a > b,
            format!("pl(5m)={a:.3e} > pl(10m)={b:.3e}"),
        ));
    }

    // deficit-function properties
    {
        let i0 = cal_i(0.0).unwrap();
        let i6 = cal_i(6.0).unwrap();
        let asym = (i6 - (36.0 - LN_2)).abs();
        let mut deficit_ok = true;
        for k in 0..50 {
            let a = 0.02 + k as f64 * 0.2;
            let d = ent_excess(a).unwrap();
            if !(0.0..=LN_2 + 1e-12).contains(&d) {
                deficit_ok = false;
            }
        }
        checks.push(check(
            "deficit_function",
            i0 == 0.0 && asym <= 1e-5 && deficit_ok,
            format!("cal_i(0)={i0:.1e}, |cal_i(6)-(36-ln2)|={asym:.3e}"),
        ));
    }

    // closed form vs integral mutual information on random draws
    {
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let x0: f64 = rng.gen_range(0.1..3.0);
            let f2: f64 = rng.gen_range(0.0..2.0);
            let pe: f64 = rng.gen_range(0.0..2.0);
            let s3: f64 = rng.gen_range(0.2..2.0);
            let g2: f64 = rng.gen_range(0.01..2.0);
            let sig_y_sq = f2 * pe + s3;
            let gm = g2.sqrt();
            let h_y = mixture_entropy(&MixtureSpec {
                means: vec![-gm * x0, gm * x0],
                probs: vec![0.5, 0.5],
                sigma_sq: sig_y_sq,
            })
            .unwrap();
            let h_z = mixture_entropy(&MixtureSpec {
                means: vec![-gm * x0, gm * x0],
                probs: vec![0.5, 0.5],
                sigma_sq: s3,
            })
            .unwrap();
            let integral = h_y - h_z;
            let closed = 0.5 * (sig_y_sq / s3).ln() + ent_excess(gm * x0 / sig_y_sq.sqrt()).unwrap()
                - ent_excess(gm * x0 / s3.sqrt()).unwrap();
            worst = worst.max((integral - closed).abs());
        }
        checks.push(check(
            "mi_integral_vs_closed_form",
            worst <= 1e-6,
            format!("max |diff| = {worst:.3e} nats"),
        ));
    }

    // fixed-point residuals on random draws
    {
        let mut worst_fd: f64 = 0.0;
        let mut worst_hd: f64 = 0.0;
        for _ in 0..100 {
            let mut p = cfg.params.clone();
            p.sigma1_sq = rng.gen_range(0.1..2.0);
            p.sigma2_sq = rng.gen_range(0.1..2.0);
            p.sigma3_sq = rng.gen_range(0.1..2.0);
            p.alpha2 = rng.gen_range(0.0..0.05);
            p.qbar1 = rng.gen_range(0.0..1.0);
            p.alpha1 = rng.gen_range(0.0..0.1);
            p.p_et = rng.gen_range(0.1..4.0);
            let f = discretize_exponential(rng.gen_range(0.1..2.0), 8).unwrap();
            let x2_sq = rng.gen_range(0.0..4.0);
            let v_sq = rng.gen_range(0.05..4.0);
            let lam = rng.gen_range(0.05..5.0);
            let root = solve_ehu_power(x2_sq, v_sq, lam, &p, &f);
            if root > 0.0 {
                worst_fd = worst_fd.max(ehu_power_residual(root, x2_sq, v_sq, lam, &p, &f).abs());
            }
            let root_hd = hd_power(v_sq, lam, &p, &f);
            if root_hd > 0.0 {
                worst_hd = worst_hd.max(hd_power_residual(root_hd, v_sq, lam, &p, &f).abs());
            }
        }
        checks.push(check(
            "fixed_point_residuals",
            worst_fd <= 1e-9 && worst_hd <= 1e-9,
            format!("max |fd residual| = {worst_fd:.3e}, max |hd residual| = {worst_hd:.3e}"),
        ));
    }

    // energy-balance calibration at the configured point
    {
        let outcome = (|| -> Result<(f64, f64)> {
            let fading = FadingGrid::rayleigh(&cfg.params, cfg.n_fading_points.min(16))?;
            let dist =
                EtInputDistribution::binary_constant(cfg.params.p_et.sqrt(), fading.v_sq.len());
            let policy = calibrate_lambda2(&dist, &cfg.params, &fading)?;
            let r = energy_balance_residual(&policy, &dist, &cfg.params, &fading);
            let scale = mean_harvest(&dist, &cfg.params, &fading.v_sq);
            Ok((r, scale))
        })();
        match outcome {
            Ok((r, scale)) => checks.push(check(
                "energy_balance_calibration",
                r.abs() <= 1e-9 * scale,
                format!("relative residual = {:.3e}", r / scale),
            )),
            Err(e) => checks.push(check(
                "energy_balance_calibration",
                false,
                format!("failed: {e}"),
            )),
        }
    }

    // bound ordering and rate sanity at the configured point, in both
    // formula conventions
    for (name, mode) in [
        ("bound_ordering", EvalOptions::default()),
        (
            "bound_ordering_printed",
            EvalOptions {
                printed_formulas: true,
            },
        ),
    ] {
        let mode = EvalOptions {
            printed_formulas: mode.printed_formulas || opts.printed_formulas,
        };
        let outcome = (|| -> Result<(f64, f64, f64)> {
            let mut small = cfg.clone();
            small.n_fading_points = small.n_fading_points.min(8);
            let fading = FadingGrid::rayleigh(&small.params, small.n_fading_points)?;
            let (lo, dist, policy) = lower_bound(&small.params, &fading, mode)?;
            let legit = legit_rate(&dist, &policy, &small.params, &fading.v_sq);
            let leak = eve_leakage(&dist, &policy, &small.params, &fading, mode)?;
            let search = SearchConfig {
                j_max: 1,
                amp_levels: 4,
                prob_resolution: 2,
                ..SearchConfig::default()
            };
            let (up, _, _) = upper_bound(&small.params, &fading, &search, mode)?;
            let _ = (legit, leak);
            Ok((
                up.c_s_upper.unwrap_or(0.0),
                lo.c_s_lower.unwrap_or(0.0),
                legit,
            ))
        })();
        match outcome {
            Ok((u, l, _)) => checks.push(check(
                name,
                u >= l - 1e-6 && u >= 0.0 && l >= 0.0,
                format!("upper = {u:.6e}, lower = {l:.6e} nats/use"),
            )),
            Err(e) => checks.push(check(name, false, format!("failed: {e}"))),
        }
    }

    // config gate self-test
    {
        let rejected = crate::config::parse_config("qbar1 = 1.2\n").is_err();
        checks.push(check(
            "config_invariant_gate",
            rejected,
            "eta*(qbar1^2+alpha1) >= 1 rejected at load".to_string(),
        ));
    }

    checks
}
