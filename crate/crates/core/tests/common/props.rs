//! Strategies and property checks shared by the proptest suite and the
//! acceptance binary.

use std::sync::Arc;

use evince_core::agents::parse::{format_distribution, parse_distribution};
use evince_core::crit::aggregate_gamma;
use evince_core::metrics::{
    cross_entropy, entropy, js_divergence, kl_divergence, mutual_information, normalized_mi,
    wasserstein_ordinal, Distribution, JointDistribution, LabelScale, MetricSnapshot,
};
use evince_core::protocol::{next_contentiousness, novelty_override, DebateConfig};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = Result<(), TestCaseError>;

fn scale(n: usize) -> Arc<LabelScale> {
    Arc::new(LabelScale::new((0..n).map(|i| format!("L{i}"))).unwrap())
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..1.0], n)
        .prop_filter("needs mass", |w| w.iter().sum::<f64>() > 1e-6)
}

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Three distributions on a shared scale of 2 to 7 labels.
pub fn dist_triple() -> impl Strategy<Value = (Distribution, Distribution, Distribution)> {
    (2usize..=7).prop_flat_map(|n| {
        let s = scale(n);
        (weights(n), weights(n), weights(n)).prop_map(move |(a, b, c)| {
            let d = |w| Distribution::normalized(s.clone(), w).unwrap();
            (d(a), d(b), d(c))
        })
    })
}

/// A joint table of 2..=5 by 2..=5 cells.
pub fn joint() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=5, 2usize..=5).prop_flat_map(|(r, c)| {
        weights(r * c).prop_map(move |w| normalize(w).chunks(c).map(<[f64]>::to_vec).collect())
    })
}

/// Mass moved along the line by matching cumulative mass left to right.
pub fn transport_oracle(p: &[f64], q: &[f64]) -> f64 {
    let (mut p, mut q) = (p.to_vec(), q.to_vec());
    let (mut i, mut j, mut cost) = (0, 0, 0.0);
    while i < p.len() && j < q.len() {
        let m = p[i].min(q[j]);
        cost += m * (i as f64 - j as f64).abs();
        p[i] -= m;
        q[j] -= m;
        if p[i] <= 1e-15 {
            i += 1;
        } else {
            j += 1;
        }
    }
    cost
}

pub fn jsd_symmetric_bounded((p, q, _): (Distribution, Distribution, Distribution)) -> Check {
    let (a, b) = (
        js_divergence(&p, &q).unwrap(),
        js_divergence(&q, &p).unwrap(),
    );
    prop_assert!((a - b).abs() < 1e-12);
    prop_assert!((0.0..=1.0).contains(&a));
    Ok(())
}

pub fn kl_non_negative((p, q, _): (Distribution, Distribution, Distribution)) -> Check {
    prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
    prop_assert!(kl_divergence(&p, &p).unwrap() < 1e-9);
    Ok(())
}

pub fn cross_entropy_identity((p, q, _): (Distribution, Distribution, Distribution)) -> Check {
    let ce = cross_entropy(&p, &q).unwrap();
    let sum = entropy(&p) + kl_divergence(&p, &q).unwrap();
    prop_assert!((ce - sum).abs() < 1e-9, "CE {} vs H + KL {}", ce, sum);
    Ok(())
}

pub fn wasserstein_properties((p, q, r): (Distribution, Distribution, Distribution)) -> Check {
    let pq = wasserstein_ordinal(&p, &q).unwrap();
    prop_assert!((pq - wasserstein_ordinal(&q, &p).unwrap()).abs() < 1e-12);
    let pr = wasserstein_ordinal(&p, &r).unwrap();
    let rq = wasserstein_ordinal(&r, &q).unwrap();
    prop_assert!(pq <= pr + rq + 1e-9);
    let oracle = transport_oracle(p.probs(), q.probs());
    prop_assert!(
        (pq - oracle).abs() < 1e-9,
        "WD {} vs transport {}",
        pq,
        oracle
    );
    Ok(())
}

pub fn entropy_bounds((p, _, _): (Distribution, Distribution, Distribution)) -> Check {
    let h = entropy(&p);
    prop_assert!(h >= 0.0 && h <= (p.len() as f64).log2() + 1e-12);
    Ok(())
}

pub fn nmi_matches_oracle(rows: Vec<Vec<f64>>) -> Check {
    let j = JointDistribution::from_rows(&rows).unwrap();
    let (r, c) = (rows.len(), rows[0].len());
    let mut px = vec![0.0; r];
    let mut py = vec![0.0; c];
    for x in 0..r {
        for y in 0..c {
            px[x] += rows[x][y];
            py[y] += rows[x][y];
        }
    }
    let mut mi = 0.0;
    for x in 0..r {
        for y in 0..c {
            if rows[x][y] > 0.0 {
                mi += rows[x][y] * (rows[x][y] / (px[x] * py[y])).log2();
            }
        }
    }
    let h = |v: &[f64]| -> f64 { v.iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum() };
    let denom = h(&px).max(h(&py));
    let nmi_oracle = if denom > 0.0 {
        (mi.max(0.0) / denom).min(1.0)
    } else {
        0.0
    };
    let nmi = normalized_mi(&j);
    prop_assert!((0.0..=1.0).contains(&nmi));
    prop_assert!((mutual_information(&j) - mi.max(0.0)).abs() < 1e-9);
    prop_assert!(
        (nmi - nmi_oracle).abs() < 1e-9,
        "NMI {} vs {}",
        nmi,
        nmi_oracle
    );
    Ok(())
}

/// Distributions on the five-point scale, including exact zeros.
pub fn five_point() -> impl Strategy<Value = Distribution> {
    weights(5)
        .prop_map(|w| Distribution::normalized(Arc::new(LabelScale::five_point_bias()), w).unwrap())
}

pub fn parse_round_trip(d: Distribution) -> Check {
    let back = parse_distribution(&format_distribution(&d), d.scale()).unwrap();
    for (a, b) in d.probs().iter().zip(back.probs()) {
        prop_assert!((a - b).abs() < 1e-9);
    }
    Ok(())
}

/// Ratings for 1..=6 reasons, a reason index, and bumps for gamma and theta.
pub fn crit_case() -> impl Strategy<Value = (Vec<(f64, f64)>, usize, f64, f64)> {
    prop::collection::vec((1.0f64..=10.0, 1.0f64..=10.0), 1..=6).prop_flat_map(|v| {
        let n = v.len();
        (Just(v), 0..n, 0.0f64..9.0, 0.0f64..9.0)
    })
}

pub fn crit_monotone((scores, i, dg, dt): (Vec<(f64, f64)>, usize, f64, f64)) -> Check {
    let base = aggregate_gamma(scores.clone()).unwrap();
    prop_assert!((0.1 - 1e-12..=10.0 + 1e-12).contains(&base));
    let mut up = scores;
    up[i].0 = (up[i].0 + dg).min(10.0);
    up[i].1 = (up[i].1 + dt).min(10.0);
    let raised = aggregate_gamma(up).unwrap();
    prop_assert!(raised >= base - 1e-12, "{} < {}", raised, base);
    Ok(())
}

pub fn novelty_rule((sa, sb, tau, delta): (f64, f64, f64, f64)) -> Check {
    let cfg = DebateConfig {
        tau_sim: tau,
        ..DebateConfig::default()
    };
    let out = novelty_override(sa, sb, &cfg, delta);
    if sa > tau && sb > tau {
        prop_assert!((out - delta / cfg.delta_decay).abs() < 1e-15);
        prop_assert!(delta == 0.0 || out < delta);
    } else {
        prop_assert_eq!(out, delta);
    }
    Ok(())
}

pub fn novelty_inputs() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0)
}

pub fn schedule_decreasing((delta, decay): (f64, f64)) -> Check {
    let cfg = DebateConfig {
        delta_decay: decay,
        ..DebateConfig::default()
    };
    let s = LabelScale::five_point_bias();
    let u = Distribution::uniform(Arc::new(s.clone()));
    let snap = MetricSnapshot::compute(&u, &u).unwrap();
    let next = next_contentiousness(delta, &snap, &cfg, &s);
    prop_assert!(next < delta && next >= 0.0);
    Ok(())
}

pub fn schedule_inputs() -> impl Strategy<Value = (f64, f64)> {
    (1e-6f64..=1.0, 1.01f64..10.0)
}
