//! Flat key/value config files.
//!
//! One `key = value` pair per line; `#` starts a comment. Keys match the
//! [`SystemParams`] field names. Gains and powers may instead be given in
//! dB/dBm with a `_db`/`_dbm` suffix; those are converted on load with the
//! same conversion functions the library exposes. `noise_dbm` sets all
//! three noise variances at once. `qbar1_db` is the dB value of the
//! squared mean gain qbar1^2.
//!
//! Run-level keys: `n_fading_points`, `seed`.

use crate::error::{Error, Result};
use crate::model::{db_to_linear, dbm_to_watts, SystemParams};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub n_fading_points: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: SystemParams::default(),
            n_fading_points: 64,
            seed: 42,
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(lineno, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        let fv = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::config(lineno, format!("invalid number `{value}`")))
        };
        let p = &mut cfg.params;
        match key {
            "eta" => p.eta = fv()?,
            "sigma1_sq" => p.sigma1_sq = fv()?,
            "sigma2_sq" => p.sigma2_sq = fv()?,
            "sigma3_sq" => p.sigma3_sq = fv()?,
            "sigma1_sq_dbm" => p.sigma1_sq = dbm_to_watts(fv()?),
            "sigma2_sq_dbm" => p.sigma2_sq = dbm_to_watts(fv()?),
            "sigma3_sq_dbm" => p.sigma3_sq = dbm_to_watts(fv()?),
            "noise_dbm" => {
                let w = dbm_to_watts(fv()?);
                p.sigma1_sq = w;
                p.sigma2_sq = w;
                p.sigma3_sq = w;
            }
            "alpha1" => p.alpha1 = fv()?,
            "alpha1_db" => p.alpha1 = db_to_linear(fv()?),
            "alpha2" => p.alpha2 = fv()?,
            "alpha2_db" => p.alpha2 = db_to_linear(fv()?),
            "qbar1" => p.qbar1 = fv()?,
            "qbar1_db" => p.qbar1 = db_to_linear(fv()?).sqrt(),
            "p_et" => p.p_et = fv()?,
            "p_et_dbm" => p.p_et = dbm_to_watts(fv()?),
            "p_p" => p.p_p = fv()?,
            "p_p_dbm" => p.p_p = dbm_to_watts(fv()?),
            "fc" => p.fc = fv()?,
            "gamma" => p.gamma = fv()?,
            "d_ehu_et" => p.d_ehu_et = fv()?,
            "d_ehu_eve" => p.d_ehu_eve = fv()?,
            "d_et_eve" => p.d_et_eve = fv()?,
            "n_fading_points" => {
                cfg.n_fading_points = value
                    .parse::<usize>()
                    .map_err(|_| Error::config(lineno, format!("invalid count `{value}`")))?;
                if cfg.n_fading_points == 0 {
                    return Err(Error::config(lineno, "n_fading_points must be >= 1"));
                }
            }
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::config(lineno, format!("invalid seed `{value}`")))?;
            }
            _ => return Err(Error::config(lineno, format!("unknown key `{key}`"))),
        }
    }
    cfg.params
        .validate()
        .map_err(|e| Error::config(0, e.to_string()))?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn db_suffixed_keys_convert_bit_exact() {
        let cfg = parse_config(
            "alpha2_db = -100\nnoise_dbm = -90\nqbar1_db = 0\np_et_dbm = 0\n# comment\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.params.alpha2, db_to_linear(-100.0));
        assert_eq!(cfg.params.sigma1_sq, dbm_to_watts(-90.0));
        assert_eq!(cfg.params.sigma3_sq, dbm_to_watts(-90.0));
        assert_eq!(cfg.params.qbar1, 1.0);
        assert_eq!(cfg.params.p_et, dbm_to_watts(0.0));
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config("eta = 0.8\nbogus_key = 3\n").unwrap_err();
        match err {
            Error::Config { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
        let err = parse_config("eta = zebra\n").unwrap_err();
        match err {
            Error::Config { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn invariant_gate_rejects_bad_recycle_fraction() {
        // eta*(qbar1^2+alpha1) >= 1 must be rejected at load
        let err = parse_config("qbar1 = 1.2\n");
        assert!(err.is_err());
    }
}
