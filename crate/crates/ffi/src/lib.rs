//! C ABI for the secrecy-bounds library: opaque handles, error codes, and
//! plain-float results so other languages can bind without knowing the
//! Rust types. The header is generated into `include/wpc_secrecy.h` at
//! build time.

#![allow(clippy::missing_safety_doc)]

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use wpc_secrecy::cli::{evaluate_point, SweepOutputs};
use wpc_secrecy::{
    lower_bound, simulate, EvalOptions, FadingGrid, RunConfig, SearchConfig, SecrecyResult,
    SimConfig,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidConfig = 2,
    InfeasibleEnergy = 3,
    SolverFailure = 4,
    Panic = 5,
}

/// Opaque evaluation context: parsed configuration plus evaluation options.
pub struct WpcContext {
    cfg: RunConfig,
    opts: EvalOptions,
    search: SearchConfig,
}

/// Rates of one evaluated point, in bits per channel use. Fields the
/// requested outputs did not cover are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WpcRates {
    pub c_s_upper_bits: f64,
    pub c_s_lower_bits: f64,
    pub hd_rate_bits: f64,
    /// 1 = first case, 2 = second case, 3 = zero-rate case, 0 = not computed.
    pub case_label: i32,
}

/// Summary of one protocol simulation run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WpcSimSummary {
    pub n_slots: u64,
    pub n_active: u64,
    pub fraction_active: f64,
    pub empirical_rate_bits: f64,
}

fn rates_from(result: &SecrecyResult) -> WpcRates {
    let to_bits = |v: Option<f64>| v.map(|r| r / std::f64::consts::LN_2).unwrap_or(f64::NAN);
    WpcRates {
        c_s_upper_bits: to_bits(result.c_s_upper),
        c_s_lower_bits: to_bits(result.c_s_lower),
        hd_rate_bits: to_bits(result.hd_rate),
        case_label: match result.case_label {
            Some(wpc_secrecy::CaseLabel::Case1) => 1,
            Some(wpc_secrecy::CaseLabel::Case2) => 2,
            Some(wpc_secrecy::CaseLabel::Case3) => 3,
            None => 0,
        },
    }
}

fn status_of(err: &wpc_secrecy::Error) -> WpcStatus {
    use wpc_secrecy::Error::*;
    match err {
        Config { .. } | Domain(_) | Shape(_) => WpcStatus::InvalidConfig,
        InfeasibleEnergy { .. } => WpcStatus::InfeasibleEnergy,
        _ => WpcStatus::SolverFailure,
    }
}

/// Create an evaluation context from config text (the same flat key/value
/// format the CLI reads). Pass NULL or an empty string for the defaults.
/// Returns NULL on parse failure.
#[no_mangle]
pub unsafe extern "C" fn wpc_context_new(config_text: *const c_char) -> *mut WpcContext {
    let text = if config_text.is_null() {
        String::new()
    } else {
        match CStr::from_ptr(config_text).to_str() {
            Ok(s) => s.to_string(),
            Err(_) => return ptr::null_mut(),
        }
    };
    match wpc_secrecy::parse_config(&text) {
        Ok(cfg) => Box::into_raw(Box::new(WpcContext {
            cfg,
            opts: EvalOptions::default(),
            search: SearchConfig::default(),
        })),
        Err(_) => ptr::null_mut(),
    }
}

/// Toggle the printed-formulas compatibility mode.
#[no_mangle]
pub unsafe extern "C" fn wpc_context_set_printed_formulas(
    ctx: *mut WpcContext,
    enabled: bool,
) -> WpcStatus {
    let Some(ctx) = ctx.as_mut() else {
        return WpcStatus::NullArgument;
    };
    ctx.opts.printed_formulas = enabled;
    WpcStatus::Ok
}

/// Adjust the upper-bound search family.
#[no_mangle]
pub unsafe extern "C" fn wpc_context_set_search(
    ctx: *mut WpcContext,
    j_max: u32,
    amp_levels: u32,
    prob_resolution: u32,
) -> WpcStatus {
    let Some(ctx) = ctx.as_mut() else {
        return WpcStatus::NullArgument;
    };
    if j_max == 0 || amp_levels == 0 || prob_resolution == 0 {
        return WpcStatus::InvalidConfig;
    }
    ctx.search.j_max = j_max as usize;
    ctx.search.amp_levels = amp_levels as usize;
    ctx.search.prob_resolution = prob_resolution as usize;
    WpcStatus::Ok
}

/// Compute the secrecy bounds and the half-duplex benchmark at the
/// configured point. `want_upper` may be cleared to skip the (slower)
/// upper-bound search.
#[no_mangle]
pub unsafe extern "C" fn wpc_compute_bounds(
    ctx: *const WpcContext,
    want_upper: bool,
    out: *mut WpcRates,
) -> WpcStatus {
    let Some(ctx) = ctx.as_ref() else {
        return WpcStatus::NullArgument;
    };
    let Some(out) = out.as_mut() else {
        return WpcStatus::NullArgument;
    };
    let result = catch_unwind(AssertUnwindSafe(|| {
        evaluate_point(
            &ctx.cfg,
            SweepOutputs {
                upper: want_upper,
                lower: true,
                hd: true,
                sim: false,
            },
            &ctx.search,
            ctx.opts,
        )
    }));
    match result {
        Ok(Ok(point)) => {
            *out = rates_from(&point.result);
            WpcStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => WpcStatus::Panic,
    }
}

/// Simulate the transmit-when-charged protocol at the configured point with
/// the calibrated lower-bound policy.
#[no_mangle]
pub unsafe extern "C" fn wpc_simulate(
    ctx: *const WpcContext,
    n_slots: u64,
    symbols_per_slot: u32,
    initial_battery_j: f64,
    out: *mut WpcSimSummary,
) -> WpcStatus {
    let Some(ctx) = ctx.as_ref() else {
        return WpcStatus::NullArgument;
    };
    let Some(out) = out.as_mut() else {
        return WpcStatus::NullArgument;
    };
    let result = catch_unwind(AssertUnwindSafe(|| -> wpc_secrecy::Result<WpcSimSummary> {
        let fading = FadingGrid::rayleigh(&ctx.cfg.params, ctx.cfg.n_fading_points)?;
        let (_, dist, policy) = lower_bound(&ctx.cfg.params, &fading, ctx.opts)?;
        let cfg = SimConfig {
            n_slots: n_slots as usize,
            k: symbols_per_slot as usize,
            initial_battery: initial_battery_j,
            et_dist: dist,
            policy,
            seed: ctx.cfg.seed,
            battery_cap: None,
        };
        let trace = simulate(&cfg, &ctx.cfg.params, &fading)?;
        Ok(WpcSimSummary {
            n_slots,
            n_active: trace.n_active as u64,
            fraction_active: trace.fraction_active,
            empirical_rate_bits: trace.empirical_secrecy_rate / std::f64::consts::LN_2,
        })
    }));
    match result {
        Ok(Ok(summary)) => {
            *out = summary;
            WpcStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => WpcStatus::Panic,
    }
}

/// Release a context created by `wpc_context_new`.
#[no_mangle]
pub unsafe extern "C" fn wpc_context_free(ctx: *mut WpcContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn context_roundtrip_and_bounds() {
        let text = CString::new("p_et_dbm = 0\nn_fading_points = 4\n").unwrap();
        unsafe {
            let ctx = wpc_context_new(text.as_ptr());
            assert!(!ctx.is_null());
            let mut rates = WpcRates {
                c_s_upper_bits: f64::NAN,
                c_s_lower_bits: f64::NAN,
                hd_rate_bits: f64::NAN,
                case_label: 0,
            };
            let st = wpc_compute_bounds(ctx, false, &mut rates);
            assert_eq!(st, WpcStatus::Ok);
            assert!(rates.c_s_lower_bits.is_finite());
            assert!(rates.c_s_upper_bits.is_nan());
            assert!(rates.hd_rate_bits >= 0.0);
            wpc_context_free(ctx);
        }
    }

    #[test]
    fn invalid_config_yields_null() {
        let text = CString::new("qbar1 = 5\n").unwrap();
        unsafe {
            let ctx = wpc_context_new(text.as_ptr());
            assert!(ctx.is_null());
        }
    }

    #[test]
    fn null_arguments_are_reported() {
        unsafe {
            let st = wpc_compute_bounds(ptr::null(), false, ptr::null_mut());
            assert_eq!(st, WpcStatus::NullArgument);
        }
    }
}
