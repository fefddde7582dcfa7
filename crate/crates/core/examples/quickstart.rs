//! Minimal library walkthrough: build the fading grids, compute the three
//! rates at one operating point, and run a short protocol simulation.

use wpc_secrecy::*;

fn main() -> Result<()> {
    let params = SystemParams {
        p_et: dbm_to_watts(0.0),
        p_p: 1e-12,
        ..SystemParams::default()
    };
    let fading = FadingGrid::rayleigh(&params, 16)?;
    let opts = EvalOptions::default();

    let (lower, dist, policy) = lower_bound(&params, &fading, opts)?;
    let (upper, _, _) = upper_bound(&params, &fading, &SearchConfig::default(), opts)?;
    let hd = hd_secrecy_rate(&params, &fading, TGridCfg::default(), opts)?;

    let bits = |nats: f64| nats / std::f64::consts::LN_2;
    println!(
        "upper {:.4e}  lower {:.4e}  hd {:.4e}  [bits/channel use, {}]",
        bits(upper.c_s_upper.unwrap()),
        bits(lower.c_s_lower.unwrap()),
        bits(hd.rate),
        lower.case_label.unwrap(),
    );

    let sim = SimConfig {
        n_slots: 20_000,
        k: 20,
        initial_battery: 0.0,
        et_dist: dist,
        policy,
        seed: 42,
        battery_cap: None,
    };
    let trace = simulate(&sim, &params, &fading)?;
    println!(
        "simulated {} slots: active fraction {:.4} after burn-in",
        sim.n_slots,
        trace.fraction_active_after(1000)
    );
    Ok(())
}
