use clap::{Args, Parser, Subcommand};
use std::f64::consts::LN_2;
use std::path::PathBuf;
use std::process::ExitCode;
use wpc_secrecy::cli::{evaluate_point, run_sweep, verify, SweepOutputs, SweepSpec, SweepVariable};
use wpc_secrecy::{
    lower_bound, simulate, Error, EvalOptions, FadingGrid, RunConfig, SearchConfig, SimConfig,
};

#[derive(Parser)]
#[command(
    name = "wpc-secrecy",
    about = "Secrecy-capacity bounds and protocol simulation for a full-duplex wirelessly powered link",
    version
)]
struct TopLevel {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Flat key/value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of fading grid points per channel.
    #[arg(long)]
    fading_points: Option<usize>,
    /// Reproduce the printed formulas verbatim (g = 1 in the eavesdropper
    /// mixtures, asymmetric half-duplex leakage).
    #[arg(long)]
    printed_formulas: bool,
    /// Report rates in nats per channel use instead of bits.
    #[arg(long)]
    nats: bool,
}

#[derive(Args, Clone)]
struct SearchOpts {
    /// Maximum number of +-pairs per candidate distribution.
    #[arg(long, default_value_t = 3)]
    j_max: usize,
    /// Number of geometric amplitude levels.
    #[arg(long, default_value_t = 12)]
    amp_levels: usize,
    /// Probability simplex resolution (denominator).
    #[arg(long, default_value_t = 4)]
    prob_res: usize,
}

impl SearchOpts {
    fn to_config(&self) -> SearchConfig {
        SearchConfig {
            j_max: self.j_max,
            amp_levels: self.amp_levels,
            prob_resolution: self.prob_res,
            ..SearchConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the secrecy bounds and the half-duplex benchmark at one point.
    Bounds {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        search: SearchOpts,
    },
    /// Sweep one variable and write a CSV table.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        search: SearchOpts,
        /// Variable to sweep: p_et_dbm, alpha1_db, qbar1_db, eta, d_ehu_eve.
        #[arg(long)]
        variable: SweepVariable,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        /// Comma-separated outputs: upper,lower,hd,sim.
        #[arg(long, default_value = "upper,lower,hd")]
        outputs: SweepOutputs,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate the transmit-when-charged protocol at the configured point.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// Number of slots.
        #[arg(long, default_value_t = 100_000)]
        slots: usize,
        /// Symbols per slot.
        #[arg(long, default_value_t = 50)]
        symbols_per_slot: usize,
        /// Initial battery charge in joules.
        #[arg(long, default_value_t = 0.0)]
        initial_battery: f64,
        /// Burn-in slots excluded from the reported active fraction.
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        /// Write the per-slot trace as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the self-verification suites and report pass/fail per check.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn load(common: &CommonOpts) -> Result<(RunConfig, EvalOptions), Error> {
    let mut cfg = match &common.config {
        Some(path) => wpc_secrecy::load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.fading_points {
        if n == 0 {
            return Err(Error::config(0, "fading-points must be >= 1"));
        }
        cfg.n_fading_points = n;
    }
    Ok((
        cfg,
        EvalOptions {
            printed_formulas: common.printed_formulas,
        },
    ))
}

fn rate_str(v: Option<f64>, nats: bool) -> String {
    match v {
        Some(r) => {
            if nats {
                format!("{r:.9e} nats/use")
            } else {
                format!("{:.9e} bits/use", r / LN_2)
            }
        }
        None => "-".to_string(),
    }
}

fn run() -> Result<ExitCode, Error> {
    let top = TopLevel::parse();
    match top.command {
        Command::Bounds { common, search } => {
            let (cfg, opts) = load(&common)?;
            let point = evaluate_point(
                &cfg,
                SweepOutputs {
                    upper: true,
                    lower: true,
                    hd: true,
                    sim: false,
                },
                &search.to_config(),
                opts,
            )?;
            let r = &point.result;
            println!("c_s_upper: {}", rate_str(r.c_s_upper, common.nats));
            println!("c_s_lower: {}", rate_str(r.c_s_lower, common.nats));
            println!(
                "case:      {}",
                r.case_label.map(|c| c.to_string()).unwrap_or_default()
            );
            println!("hd_rate:   {}", rate_str(r.hd_rate, common.nats));
            if let Some(d) = &r.diagnostics {
                println!(
                    "mac check: R_ET = {:.3} bits, I(X2;Y3) = {:.6e} bits, I(X1;Y3) = {:.6e} bits, R_EHU = {:.6e} bits, eve_blocked = {}",
                    d.r_et_bits(),
                    d.i_x2_y3_nats / LN_2,
                    d.i_x1_y3_nats / LN_2,
                    d.r_ehu_nats / LN_2,
                    d.eve_blocked()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            common,
            search,
            variable,
            values,
            outputs,
            out,
        } => {
            let (cfg, opts) = load(&common)?;
            let spec = SweepSpec {
                variable,
                values,
                outputs,
            };
            let mut file = std::fs::File::create(&out)?;
            run_sweep(&cfg, &spec, &search.to_config(), opts, common.nats, &mut file)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            common,
            slots,
            symbols_per_slot,
            initial_battery,
            burn_in,
            out,
        } => {
            let (cfg, opts) = load(&common)?;
            let fading = FadingGrid::rayleigh(&cfg.params, cfg.n_fading_points)?;
            let (res, dist, policy) = lower_bound(&cfg.params, &fading, opts)?;
            let sim_cfg = SimConfig {
                n_slots: slots,
                k: symbols_per_slot,
                initial_battery,
                et_dist: dist,
                policy,
                seed: cfg.seed,
                battery_cap: None,
            };
            let trace = simulate(&sim_cfg, &cfg.params, &fading)?;
            println!("slots:              {slots}");
            println!("active slots:       {}", trace.n_active);
            println!("silent slots:       {}", trace.b_silent);
            println!("fraction_active:    {:.6}", trace.fraction_active);
            println!(
                "fraction_active (after {} burn-in): {:.6}",
                burn_in,
                trace.fraction_active_after(burn_in)
            );
            println!(
                "analytic c_s_lower: {}",
                rate_str(res.c_s_lower, common.nats)
            );
            println!(
                "empirical rate:     {}",
                rate_str(Some(trace.empirical_secrecy_rate), common.nats)
            );
            if let Some(path) = out {
                let mut file = std::fs::File::create(&path)?;
                trace.write_csv(&mut file)?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { common } => {
            let (cfg, opts) = load(&common)?;
            let checks = verify(&cfg, opts);
            let mut any_fail = false;
            for c in &checks {
                println!(
                    "{} {} {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                any_fail |= !c.pass;
            }
            if any_fail {
                Ok(ExitCode::from(3))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e @ Error::Config { .. }) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
