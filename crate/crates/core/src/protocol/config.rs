use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::metrics::default_kl_max;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// Divide contentiousness by `delta_decay` after every round.
    #[default]
    Scheduled,
    /// Weighted sum of normalized KL, JS and WD.
    MetricDriven,
}

/// Thresholds, weights, and schedule constants for one debate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DebateConfig {
    /// Wasserstein threshold, in scale steps.
    pub tau_wd: f64,
    /// Jensen-Shannon threshold, in bits.
    pub tau_jsd: f64,
    /// Mutual-information floor; only gates when a joint distribution exists.
    pub tau_mi: Option<f64>,
    /// Upper bound on symmetrized KL when it stands in for mutual information.
    pub kl_proxy_bound: f64,
    /// Round-over-round cross-entropy stability bound, in bits.
    pub eps_ce: f64,
    /// Per-agent round-over-round L2 distribution change bound.
    pub eps_p: f64,
    /// Argument similarity that counts as "no new perspective".
    pub tau_sim: f64,
    pub tau_crit: f64,
    pub crit_enabled: bool,
    /// Whether a CRIT score equal to `tau_crit` passes.
    pub crit_inclusive: bool,
    pub crit_depth: u32,
    pub k_consecutive: usize,
    pub t_max: usize,
    pub delta_init: f64,
    pub delta_decay: f64,
    pub delta_mode: DeltaMode,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Defaults to KL between smoothed opposite point masses on the scale.
    pub kl_max: Option<f64>,
    pub js_max: f64,
    /// Defaults to `n - 1` for an `n`-label scale.
    pub wd_max: Option<f64>,
    /// Minimum entropy gap for the dual-entropy initial condition, in bits.
    pub edt_entropy_gap: f64,
    /// Minimum initial Wasserstein separation, in scale steps.
    pub edt_separation: f64,
}

impl Default for DebateConfig {
    fn default() -> Self {
        Self {
            tau_wd: 0.05,
            tau_jsd: 0.01,
            tau_mi: None,
            kl_proxy_bound: 0.05,
            eps_ce: 0.05,
            eps_p: 0.05,
            tau_sim: 0.8,
            tau_crit: 6.0,
            crit_enabled: false,
            crit_inclusive: true,
            crit_depth: 2,
            k_consecutive: 2,
            t_max: 10,
            delta_init: 0.9,
            delta_decay: 2.08,
            delta_mode: DeltaMode::Scheduled,
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma: 1.0 / 3.0,
            kl_max: None,
            js_max: 1.0,
            wd_max: None,
            edt_entropy_gap: 0.5,
            edt_separation: 0.5,
        }
    }
}

/// Metric maxima used to normalize the metric-driven contentiousness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizers {
    pub kl_max: f64,
    pub js_max: f64,
    pub wd_max: f64,
}

impl DebateConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |msg: String| Err(ProtocolError::InvalidConfig(msg));
        let non_negative = [
            ("tau_wd", self.tau_wd),
            ("tau_jsd", self.tau_jsd),
            ("kl_proxy_bound", self.kl_proxy_bound),
            ("eps_ce", self.eps_ce),
            ("eps_p", self.eps_p),
            ("tau_sim", self.tau_sim),
            ("tau_crit", self.tau_crit),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("edt_entropy_gap", self.edt_entropy_gap),
            ("edt_separation", self.edt_separation),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!(
                    "{name} must be a finite non-negative number, got {v}"
                ));
            }
        }
        if let Some(mi) = self.tau_mi {
            if !(mi.is_finite() && mi >= 0.0) {
                return bad(format!("tau_mi must be non-negative, got {mi}"));
            }
        }
        if self.tau_sim > 1.0 {
            return bad(format!("tau_sim must lie in [0, 1], got {}", self.tau_sim));
        }
        if !(0.0..=1.0).contains(&self.delta_init) {
            return bad(format!(
                "delta_init must lie in [0, 1], got {}",
                self.delta_init
            ));
        }
        if !(self.delta_decay.is_finite() && self.delta_decay > 1.0) {
            return bad(format!(
                "delta_decay must exceed 1, got {}",
                self.delta_decay
            ));
        }
        if self.k_consecutive < 1 || self.t_max < 1 {
            return bad("k_consecutive and t_max must be at least 1".into());
        }
        if self.k_consecutive > self.t_max {
            return bad(format!(
                "k_consecutive ({}) cannot exceed t_max ({})",
                self.k_consecutive, self.t_max
            ));
        }
        if self.delta_mode == DeltaMode::MetricDriven && self.alpha + self.beta + self.gamma <= 0.0
        {
            return bad("metric-driven contentiousness needs alpha + beta + gamma > 0".into());
        }
        for (name, v) in [
            ("kl_max", self.kl_max),
            ("wd_max", self.wd_max),
            ("js_max", Some(self.js_max)),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        Ok(())
    }

    pub fn normalizers(&self, scale_len: usize) -> Normalizers {
        Normalizers {
            kl_max: self.kl_max.unwrap_or_else(|| default_kl_max(scale_len)),
            js_max: self.js_max,
            wd_max: self
                .wd_max
                .unwrap_or((scale_len.saturating_sub(1)).max(1) as f64),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ProtocolError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| ProtocolError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Whether a CRIT score clears the configured threshold.
    pub fn crit_passes(&self, score: f64) -> bool {
        if self.crit_inclusive {
            score >= self.tau_crit
        } else {
            score > self.tau_crit
        }
    }
}
