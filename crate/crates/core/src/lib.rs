//! Secrecy-capacity bounds and protocol simulation for a point-to-point
//! full-duplex wirelessly powered link: an energy transmitter powers (and
//! jams for) an energy-harvesting user that sends confidential data back,
//! while a passive eavesdropper listens.
//!
//! The crate computes an upper bound on the secrecy capacity by exhaustive
//! search over discrete transmitter input distributions, an achievable
//! lower bound with a case analysis over binary signalling, a half-duplex
//! harvest-then-transmit benchmark, and a slot-level battery simulation of
//! the transmit-when-charged protocol.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod hd_benchmark;
pub mod model;
pub mod numerics;
pub mod power_policy;
pub mod protocol_sim;

pub use bounds::{
    eve_leakage, legit_rate, lower_bound, mac_decodability_check, upper_bound, CaseLabel,
    EtInputDistribution, EvalOptions, MacDiagnostics, SearchConfig, SecrecyResult,
};
pub use config::{load_config, parse_config, RunConfig};
pub use error::{Error, Result};
pub use hd_benchmark::{hd_power, hd_secrecy_rate, HdSolution, TGridCfg};
pub use model::{
    db_to_linear, dbm_to_watts, discretize_exponential, linear_to_db, path_loss, watts_to_dbm,
    FadingDist, FadingGrid, FadingSampler, SystemParams,
};
pub use numerics::{cal_i, ent_excess, mixture_entropy, MixtureSpec};
pub use power_policy::{calibrate_lambda2, energy_balance_residual, solve_ehu_power, PowerPolicy};
pub use protocol_sim::{harvest_energy, simulate, SimConfig, SimTrace};
