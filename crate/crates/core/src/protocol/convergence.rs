use serde::{Deserialize, Serialize};

use super::{DebateConfig, ProtocolError, Round, Verdict, VerdictKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Convergence {
    Continue,
    Done(Verdict),
}

/// Which convergence conditions a single round meets. Stability conditions
/// compare against the previous round and hold trivially for the first one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCriteria {
    pub wd: bool,
    pub jsd: bool,
    /// Mutual information above `tau_mi`, or the KL proxy below its bound.
    pub information: bool,
    pub cross_entropy_stable: bool,
    pub distributions_stable: bool,
    pub arguments_settled: bool,
    /// `None` when CRIT gating is disabled.
    pub crit: Option<CritCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CritCheck {
    Pass,
    Below,
    Missing,
}

impl RoundCriteria {
    pub fn quantitative(&self) -> bool {
        self.wd
            && self.jsd
            && self.information
            && self.cross_entropy_stable
            && self.distributions_stable
            && self.arguments_settled
    }
}

/// Evaluates every condition for `history[i]`.
pub fn round_criteria(history: &[Round], i: usize, cfg: &DebateConfig) -> RoundCriteria {
    let round = &history[i];
    let snap = &round.snapshot;
    let information = match (snap.mutual_info, cfg.tau_mi) {
        (Some(mi), Some(tau)) => mi > tau,
        (Some(_), None) => true,
        (None, _) => snap.kl_proxy.is_some_and(|p| p < cfg.kl_proxy_bound),
    };
    let (cross_entropy_stable, distributions_stable) = match i.checked_sub(1).map(|p| &history[p]) {
        None => (true, true),
        Some(prev) => {
            let ce = (snap.cross_entropy_ab - prev.snapshot.cross_entropy_ab).abs() < cfg.eps_ce;
            let moved =
                |a: &crate::metrics::Distribution, b| a.l2_distance(b).is_ok_and(|d| d < cfg.eps_p);
            (
                ce,
                moved(&round.dist_a, &prev.dist_a) && moved(&round.dist_b, &prev.dist_b),
            )
        }
    };
    let arguments_settled = matches!((round.sim_a, round.sim_b), (Some(a), Some(b)) if a > cfg.tau_sim && b > cfg.tau_sim);
    let crit = cfg
        .crit_enabled
        .then(|| match (round.crit_a, round.crit_b) {
            (Some(a), Some(b)) if cfg.crit_passes(a) && cfg.crit_passes(b) => CritCheck::Pass,
            (Some(a), Some(b)) if !cfg.crit_passes(a) || !cfg.crit_passes(b) => CritCheck::Below,
            (Some(a), None) | (None, Some(a)) if !cfg.crit_passes(a) => CritCheck::Below,
            _ => CritCheck::Missing,
        });
    RoundCriteria {
        wd: snap.wd < cfg.tau_wd,
        jsd: snap.jsd < cfg.tau_jsd,
        information,
        cross_entropy_stable,
        distributions_stable,
        arguments_settled,
        crit,
    }
}

fn validate_history(history: &[Round]) -> Result<(), ProtocolError> {
    let first = history
        .first()
        .ok_or_else(|| ProtocolError::MalformedHistory("no rounds".into()))?;
    for (pos, round) in history.iter().enumerate() {
        if round.index != pos + 1 {
            return Err(ProtocolError::MalformedHistory(format!(
                "round at position {} has index {}, expected {}",
                pos + 1,
                round.index,
                pos + 1
            )));
        }
        if !round.dist_a.same_scale(&first.dist_a) || !round.dist_b.same_scale(&first.dist_a) {
            return Err(ProtocolError::MalformedHistory(format!(
                "round {} changes the label scale",
                round.index
            )));
        }
    }
    Ok(())
}

/// Decides whether a debate has converged, must go to human review, or
/// continues. A pure function of its inputs.
pub fn check_convergence(
    history: &[Round],
    cfg: &DebateConfig,
) -> Result<Convergence, ProtocolError> {
    validate_history(history)?;
    let n = history.len();
    if n > cfg.t_max {
        return Ok(Convergence::Done(Verdict {
            kind: VerdictKind::MaxRoundsExceeded,
            consensus: None,
            reason: format!("history has {n} rounds, cap is {}", cfg.t_max),
        }));
    }
    let k = cfg.k_consecutive;
    if n >= k {
        let window: Vec<RoundCriteria> = (n - k..n)
            .map(|i| round_criteria(history, i, cfg))
            .collect();
        if window.iter().all(RoundCriteria::quantitative) {
            let crit: Vec<Option<CritCheck>> = window.iter().map(|c| c.crit).collect();
            if crit
                .iter()
                .all(|c| matches!(c, None | Some(CritCheck::Pass)))
            {
                let last = &history[n - 1];
                let consensus = last.dist_a.mean(&last.dist_b)?;
                return Ok(Convergence::Done(Verdict::converged(
                    consensus,
                    format!(
                        "all convergence criteria held for rounds {}..={n}",
                        n - k + 1
                    ),
                )));
            }
            if crit.contains(&Some(CritCheck::Below)) {
                return Ok(Convergence::Done(Verdict::human_review(format!(
                    "distributions converged by round {n} but argument quality is below {}",
                    cfg.tau_crit
                ))));
            }
        }
    }
    if n == cfg.t_max {
        return Ok(Convergence::Done(Verdict::human_review(format!(
            "no convergence within {} rounds",
            cfg.t_max
        ))));
    }
    Ok(Convergence::Continue)
}
