//! Probability distributions over ordered label scales and the divergence /
//! information measures the debate protocol consumes.
//!
//! Every logarithm is base 2, so entropies and divergences are in bits and the
//! Jensen-Shannon divergence is bounded by 1. Ordinal Wasserstein distances are
//! measured in scale steps (unit spacing between adjacent labels).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Additive floor applied to the denominator distribution before KL and
/// cross-entropy.
pub const SMOOTHING_EPSILON: f64 = 1e-10;

/// Simplex tolerance accepted as-is.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Inputs whose total is off by more than [`SIMPLEX_TOLERANCE`] but within this
/// bound are renormalized instead of rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("invalid label scale: {0}")]
    InvalidScale(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("distributions are defined on different label scales")]
    ScaleMismatch,
    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),
}

/// An ordered categorical label space. Label `i` sits at ordinal position `i`.
///
/// Each label may carry alternative spellings that parsers and loaders accept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScaleRepr", into = "ScaleRepr")]
pub struct LabelScale {
    labels: Vec<String>,
    aliases: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct ScaleRepr {
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    aliases: Vec<Vec<String>>,
}

impl TryFrom<ScaleRepr> for LabelScale {
    type Error = MetricError;

    fn try_from(repr: ScaleRepr) -> Result<Self, Self::Error> {
        if repr.aliases.is_empty() {
            LabelScale::new(repr.labels)
        } else {
            LabelScale::with_aliases(repr.labels, repr.aliases)
        }
    }
}

impl From<LabelScale> for ScaleRepr {
    fn from(scale: LabelScale) -> Self {
        let aliases = if scale.aliases.iter().all(Vec::is_empty) {
            Vec::new()
        } else {
            scale.aliases
        };
        ScaleRepr {
            labels: scale.labels,
            aliases,
        }
    }
}

impl LabelScale {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, MetricError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let aliases = vec![Vec::new(); labels.len()];
        Self::with_aliases(labels, aliases)
    }

    pub fn with_aliases(
        labels: Vec<String>,
        aliases: Vec<Vec<String>>,
    ) -> Result<Self, MetricError> {
        if labels.len() < 2 {
            return Err(MetricError::InvalidScale(format!(
                "need at least 2 labels, got {}",
                labels.len()
            )));
        }
        if aliases.len() != labels.len() {
            return Err(MetricError::InvalidScale(
                "alias table must have one entry per label".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for name in labels.iter().chain(aliases.iter().flatten()) {
            let key = name.trim().to_lowercase();
            if key.is_empty() {
                return Err(MetricError::InvalidScale("empty label name".into()));
            }
            if !seen.insert(key) {
                return Err(MetricError::InvalidScale(format!(
                    "duplicate label name {name:?}"
                )));
            }
        }
        Ok(Self { labels, aliases })
    }

    /// The five-point news-bias scale, ordered from most negative toward the
    /// subject to most positive.
    pub fn five_point_bias() -> Self {
        let labels = [
            "Negative",
            "Weak Negative",
            "Neutral",
            "Weak Positive",
            "Positive",
        ];
        let aliases: [&[&str]; 5] = [
            &["negatively biased"],
            &["W. Negative", "weakly negative", "weakly negatively biased"],
            &["neutrally biased"],
            &["W. Positive", "weakly positive", "weakly positively biased"],
            &["positively biased"],
        ];
        Self::with_aliases(
            labels.iter().map(|s| s.to_string()).collect(),
            aliases
                .iter()
                .map(|a| a.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
        .expect("static scale is valid")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    /// All accepted spellings of label `index`, canonical name first.
    pub fn names_for(&self, index: usize) -> impl Iterator<Item = &str> {
        self.labels
            .get(index)
            .into_iter()
            .chain(self.aliases.get(index).into_iter().flatten())
            .map(String::as_str)
    }

    /// Case-insensitive lookup over canonical names and aliases.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        let key = name.trim().to_lowercase();
        (0..self.len()).find(|&i| self.names_for(i).any(|n| n.to_lowercase() == key))
    }

    /// Largest possible ordinal transport distance (extreme point masses).
    pub fn max_steps(&self) -> f64 {
        (self.len() - 1) as f64
    }
}

impl fmt::Display for LabelScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.labels.join(", "))
    }
}

/// A probability vector over a [`LabelScale`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub struct Distribution {
    scale: Arc<LabelScale>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistRepr {
    scale: Arc<LabelScale>,
    probs: Vec<f64>,
}

impl TryFrom<DistRepr> for Distribution {
    type Error = MetricError;

    fn try_from(repr: DistRepr) -> Result<Self, Self::Error> {
        Distribution::new(repr.scale, repr.probs)
    }
}

impl From<Distribution> for DistRepr {
    fn from(d: Distribution) -> Self {
        DistRepr {
            scale: d.scale,
            probs: d.probs,
        }
    }
}

impl Distribution {
    /// Validates `probs` against the simplex. Totals within 1e-9 are kept
    /// verbatim, totals within 1e-6 are renormalized, anything else is rejected.
    pub fn new(scale: Arc<LabelScale>, probs: Vec<f64>) -> Result<Self, MetricError> {
        if probs.len() != scale.len() {
            return Err(MetricError::InvalidDistribution(format!(
                "expected {} probabilities, got {}",
                scale.len(),
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(MetricError::InvalidDistribution(format!(
                "entry {i} is {p}, must be a finite non-negative number"
            )));
        }
        let total: f64 = probs.iter().sum();
        let off = (total - 1.0).abs();
        if off <= SIMPLEX_TOLERANCE {
            Ok(Self { scale, probs })
        } else if off <= RENORMALIZE_TOLERANCE {
            let probs = probs.into_iter().map(|p| p / total).collect();
            Ok(Self { scale, probs })
        } else {
            Err(MetricError::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )))
        }
    }

    /// Builds a distribution from percentages (e.g. `[5.0, 15.0, 50.0, 25.0, 5.0]`).
    pub fn from_percentages(scale: Arc<LabelScale>, percents: &[f64]) -> Result<Self, MetricError> {
        Self::new(scale, percents.iter().map(|p| p / 100.0).collect())
    }

    /// Scales arbitrary non-negative weights onto the simplex.
    pub fn normalized(scale: Arc<LabelScale>, weights: Vec<f64>) -> Result<Self, MetricError> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(MetricError::InvalidDistribution(format!(
                "cannot normalize weights summing to {total}"
            )));
        }
        Self::new(scale, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(scale: Arc<LabelScale>) -> Self {
        let n = scale.len();
        Self {
            scale,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(scale: Arc<LabelScale>, index: usize) -> Result<Self, MetricError> {
        if index >= scale.len() {
            return Err(MetricError::InvalidDistribution(format!(
                "label index {index} out of range for {} labels",
                scale.len()
            )));
        }
        let mut probs = vec![0.0; scale.len()];
        probs[index] = 1.0;
        Ok(Self { scale, probs })
    }

    pub fn scale(&self) -> &Arc<LabelScale> {
        &self.scale
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn same_scale(&self, other: &Distribution) -> bool {
        Arc::ptr_eq(&self.scale, &other.scale) || self.scale == other.scale
    }

    fn check_scale(&self, other: &Distribution) -> Result<(), MetricError> {
        if self.same_scale(other) {
            Ok(())
        } else {
            Err(MetricError::ScaleMismatch)
        }
    }

    /// Pointwise mean; the simplex is closed under averaging.
    pub fn mean(&self, other: &Distribution) -> Result<Distribution, MetricError> {
        self.check_scale(other)?;
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        Ok(Distribution {
            scale: self.scale.clone(),
            probs,
        })
    }

    /// Euclidean distance between probability vectors.
    pub fn l2_distance(&self, other: &Distribution) -> Result<f64, MetricError> {
        self.check_scale(other)?;
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// Additive floor then renormalization.
    pub fn smoothed(&self, epsilon: f64) -> Distribution {
        let total = 1.0 + epsilon * self.probs.len() as f64;
        let probs = self.probs.iter().map(|p| (p + epsilon) / total).collect();
        Distribution {
            scale: self.scale.clone(),
            probs,
        }
    }

    /// Index of the most probable label (first on ties).
    pub fn mode(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| {
                if p > best.1 {
                    (i, p)
                } else {
                    best
                }
            })
            .0
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(p: &Distribution) -> f64 {
    entropy_of(p.probs())
}

fn entropy_of(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum();
    h.max(0.0)
}

/// `KL(p || q)` in bits. `q` is smoothed with [`SMOOTHING_EPSILON`] first.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64, MetricError> {
    p.check_scale(q)?;
    let q = q.smoothed(SMOOTHING_EPSILON);
    Ok(kl_unchecked(p.probs(), q.probs()).max(0.0))
}

fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).log2())
        .sum()
}

/// Jensen-Shannon divergence in bits, bounded by 1.
///
/// The midpoint has no zeros wherever either input has mass, so no smoothing
/// is needed.
pub fn js_divergence(p: &Distribution, q: &Distribution) -> Result<f64, MetricError> {
    p.check_scale(q)?;
    let m: Vec<f64> = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let js = 0.5 * kl_unchecked(p.probs(), &m) + 0.5 * kl_unchecked(q.probs(), &m);
    Ok(js.clamp(0.0, 1.0))
}

/// Earth mover's distance with ground cost `|i - j|` on ordinal positions:
/// the sum of absolute CDF differences.
pub fn wasserstein_ordinal(p: &Distribution, q: &Distribution) -> Result<f64, MetricError> {
    p.check_scale(q)?;
    let mut cdf_gap = 0.0;
    let mut total = 0.0;
    for (a, b) in p.probs().iter().zip(q.probs()) {
        cdf_gap += a - b;
        total += cdf_gap.abs();
    }
    // The last CDF difference is zero up to rounding; drop it.
    total -= cdf_gap.abs();
    Ok(total.max(0.0))
}

/// `H(p, q) = -sum p log2 q` with `q` smoothed like [`kl_divergence`].
pub fn cross_entropy(p: &Distribution, q: &Distribution) -> Result<f64, MetricError> {
    p.check_scale(q)?;
    let q = q.smoothed(SMOOTHING_EPSILON);
    Ok(p.probs()
        .iter()
        .zip(q.probs())
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| -a * b.log2())
        .sum())
}

/// Symmetrized KL, used in place of mutual information when the agents'
/// joint distribution is unavailable.
pub fn kl_proxy_for_mi(p: &Distribution, q: &Distribution) -> Result<f64, MetricError> {
    Ok(0.5 * (kl_divergence(p, q)? + kl_divergence(q, p)?))
}

/// Default KL normalizer: KL between opposite point masses on the scale after
/// smoothing the denominator.
pub fn default_kl_max(scale_len: usize) -> f64 {
    ((1.0 + SMOOTHING_EPSILON * scale_len as f64) / SMOOTHING_EPSILON).log2()
}

/// A row-major joint probability table `p(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, cells: Vec<f64>) -> Result<Self, MetricError> {
        if rows == 0 || cols == 0 || cells.len() != rows * cols {
            return Err(MetricError::InvalidJoint(format!(
                "{} cells do not form a {rows}x{cols} table",
                cells.len()
            )));
        }
        if cells.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(MetricError::InvalidJoint(
                "entries must be finite and non-negative".into(),
            ));
        }
        let total: f64 = cells.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(MetricError::InvalidJoint(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MetricError::InvalidJoint("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Outer product of two marginals.
    pub fn independent(p: &[f64], q: &[f64]) -> Result<Self, MetricError> {
        let cells = p
            .iter()
            .flat_map(|a| q.iter().map(move |b| a * b))
            .collect();
        Self::new(p.len(), q.len(), cells)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.cells[x * self.cols + y]
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.cells
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|y| (0..self.rows).map(|x| self.get(x, y)).sum())
            .collect()
    }
}

/// `I(X; Y)` in bits.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let px = joint.row_marginal();
    let py = joint.col_marginal();
    let mut mi = 0.0;
    for (x, &pxv) in px.iter().enumerate() {
        for (y, &pyv) in py.iter().enumerate() {
            let pxy = joint.get(x, y);
            if pxy > 0.0 {
                mi += pxy * (pxy / (pxv * pyv)).log2();
            }
        }
    }
    mi.max(0.0)
}

/// `I(X; Y) / max(H(X), H(Y))`, defined as 0 when both marginals are
/// degenerate.
pub fn normalized_mi(joint: &JointDistribution) -> f64 {
    let denom = entropy_of(&joint.row_marginal()).max(entropy_of(&joint.col_marginal()));
    if denom <= 0.0 {
        return 0.0;
    }
    (mutual_information(joint) / denom).clamp(0.0, 1.0)
}

/// All per-round measures between the two agents' distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub kl_ab: f64,
    pub kl_ba: f64,
    pub jsd: f64,
    pub wd: f64,
    pub wd_normalized: f64,
    pub cross_entropy_ab: f64,
    #[serde(default)]
    pub mutual_info: Option<f64>,
    #[serde(default)]
    pub nmi: Option<f64>,
    /// Symmetrized KL, present whenever no joint distribution was supplied.
    #[serde(default)]
    pub kl_proxy: Option<f64>,
}

impl MetricSnapshot {
    pub fn compute(a: &Distribution, b: &Distribution) -> Result<Self, MetricError> {
        Self::compute_with_joint(a, b, None)
    }

    pub fn compute_with_joint(
        a: &Distribution,
        b: &Distribution,
        joint: Option<&JointDistribution>,
    ) -> Result<Self, MetricError> {
        let kl_ab = kl_divergence(a, b)?;
        let kl_ba = kl_divergence(b, a)?;
        let wd = wasserstein_ordinal(a, b)?;
        let (mutual_info, nmi, kl_proxy) = match joint {
            Some(j) => (Some(mutual_information(j)), Some(normalized_mi(j)), None),
            None => (None, None, Some(0.5 * (kl_ab + kl_ba))),
        };
        Ok(Self {
            entropy_a: entropy(a),
            entropy_b: entropy(b),
            kl_ab,
            kl_ba,
            jsd: js_divergence(a, b)?,
            wd,
            wd_normalized: wd / a.scale().max_steps(),
            cross_entropy_ab: cross_entropy(a, b)?,
            mutual_info,
            nmi,
            kl_proxy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn five() -> Arc<LabelScale> {
        Arc::new(LabelScale::five_point_bias())
    }

    fn dist(scale: &Arc<LabelScale>, p: &[f64]) -> Distribution {
        Distribution::new(scale.clone(), p.to_vec()).unwrap()
    }

    const R1_A: [f64; 5] = [0.05, 0.15, 0.50, 0.25, 0.05];
    const R1_B: [f64; 5] = [0.10, 0.10, 0.25, 0.35, 0.20];
    const R2_A: [f64; 5] = [0.07, 0.13, 0.40, 0.30, 0.10];
    const R2_B: [f64; 5] = [0.05, 0.10, 0.20, 0.40, 0.25];
    const R3_A: [f64; 5] = [0.05, 0.10, 0.35, 0.35, 0.15];
    const R3_B: [f64; 5] = [0.05, 0.10, 0.30, 0.35, 0.20];

    #[test]
    fn scale_rejects_duplicates_and_short() {
        assert!(LabelScale::new(["a"]).is_err());
        assert!(LabelScale::new(["a", "A"]).is_err());
        assert!(LabelScale::new(["a", ""]).is_err());
        let s = LabelScale::five_point_bias();
        assert_eq!(s.index_of("weak negative"), Some(1));
        assert_eq!(s.index_of("W. Positive"), Some(3));
        assert_eq!(s.index_of("negatively biased"), Some(0));
        assert_eq!(s.index_of("meh"), None);
    }

    #[test]
    fn distribution_validation() {
        let s = five();
        assert!(Distribution::new(s.clone(), vec![0.2; 4]).is_err());
        assert!(Distribution::new(s.clone(), vec![0.5, 0.5, 0.1, -0.1, 0.0]).is_err());
        assert!(Distribution::new(s.clone(), vec![0.2, 0.2, 0.2, 0.2, 0.3]).is_err());
        let d = Distribution::new(s.clone(), vec![0.2, 0.2, 0.2, 0.2, 0.2 + 5e-7]).unwrap();
        assert_abs_diff_eq!(d.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(Distribution::new(s, vec![f64::NAN, 0.5, 0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn entropy_examples() {
        let s = five();
        assert_abs_diff_eq!(
            entropy(&Distribution::uniform(s.clone())),
            5f64.log2(),
            epsilon = 1e-12
        );
        assert_eq!(
            entropy(&Distribution::point_mass(s.clone(), 0).unwrap()),
            0.0
        );
        // Term-by-term oracle.
        let oracle = -(0.05 * 0.05f64.log2())
            - 0.15 * 0.15f64.log2()
            - 0.50 * 0.50f64.log2()
            - 0.25 * 0.25f64.log2()
            - 0.05 * 0.05f64.log2();
        assert_abs_diff_eq!(oracle, 1.842737648613667, epsilon = 1e-12);
        assert_abs_diff_eq!(entropy(&dist(&s, &R1_A)), oracle, epsilon = 1e-12);
    }

    #[test]
    fn kl_table_values() {
        let s = five();
        assert_abs_diff_eq!(
            kl_divergence(&dist(&s, &R1_A), &dist(&s, &R1_B)).unwrap(),
            0.316,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            kl_divergence(&dist(&s, &R2_A), &dist(&s, &R2_B)).unwrap(),
            0.226,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            kl_divergence(&dist(&s, &R3_A), &dist(&s, &R3_B)).unwrap(),
            0.016,
            epsilon = 1e-3
        );
        let a = dist(&s, &R1_A);
        assert!(kl_divergence(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn kl_handles_zero_denominator() {
        let s = five();
        let p = Distribution::point_mass(s.clone(), 0).unwrap();
        let q = Distribution::point_mass(s.clone(), 4).unwrap();
        let kl = kl_divergence(&p, &q).unwrap();
        assert!(kl.is_finite());
        assert_abs_diff_eq!(kl, default_kl_max(5), epsilon = 1e-9);
    }

    #[test]
    fn js_table_values() {
        let s = five();
        assert_abs_diff_eq!(
            js_divergence(&dist(&s, &R1_A), &dist(&s, &R1_B)).unwrap(),
            0.081,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            js_divergence(&dist(&s, &R2_A), &dist(&s, &R2_B)).unwrap(),
            0.056,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            js_divergence(&dist(&s, &R3_A), &dist(&s, &R3_B)).unwrap(),
            0.004,
            epsilon = 1e-3
        );
        let p = Distribution::point_mass(s.clone(), 0).unwrap();
        let q = Distribution::point_mass(s, 4).unwrap();
        assert_abs_diff_eq!(js_divergence(&p, &q).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn wasserstein_table_values() {
        let s = five();
        assert_abs_diff_eq!(
            wasserstein_ordinal(&dist(&s, &R1_A), &dist(&s, &R1_B)).unwrap(),
            0.45,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            wasserstein_ordinal(&dist(&s, &R2_A), &dist(&s, &R2_B)).unwrap(),
            0.47,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            wasserstein_ordinal(&dist(&s, &R3_A), &dist(&s, &R3_B)).unwrap(),
            0.10,
            epsilon = 1e-12
        );
        let p = Distribution::point_mass(s.clone(), 0).unwrap();
        let q = Distribution::point_mass(s, 4).unwrap();
        assert_eq!(wasserstein_ordinal(&p, &q).unwrap(), 4.0);
    }

    #[test]
    fn cross_entropy_examples() {
        let s = five();
        let u = Distribution::uniform(s.clone());
        assert_abs_diff_eq!(cross_entropy(&u, &u).unwrap(), 5f64.log2(), epsilon = 1e-9);
        let pm = Distribution::point_mass(s.clone(), 2).unwrap();
        assert_abs_diff_eq!(cross_entropy(&pm, &u).unwrap(), 5f64.log2(), epsilon = 1e-9);
        let (a, b) = (dist(&s, &R1_A), dist(&s, &R1_B));
        let direct: f64 = R1_A.iter().zip(R1_B).map(|(p, q)| -p * q.log2()).sum();
        let ce = cross_entropy(&a, &b).unwrap();
        assert_abs_diff_eq!(ce, direct, epsilon = 1e-9);
        assert_abs_diff_eq!(
            ce,
            entropy(&a) + kl_divergence(&a, &b).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn mutual_information_examples() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let q = [0.5, 0.25, 0.25];
        let ind = JointDistribution::independent(&p, &q).unwrap();
        assert_abs_diff_eq!(mutual_information(&ind), 0.0, epsilon = 1e-12);

        let mut diag = vec![0.0; 25];
        for i in 0..5 {
            diag[i * 5 + i] = 0.2;
        }
        let j = JointDistribution::new(5, 5, diag).unwrap();
        assert_abs_diff_eq!(mutual_information(&j), 5f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(normalized_mi(&j), 1.0, epsilon = 1e-12);

        // 3x3 joint against a hand-written triple loop.
        let rows = vec![
            vec![0.10, 0.05, 0.05],
            vec![0.05, 0.30, 0.05],
            vec![0.02, 0.08, 0.30],
        ];
        let j = JointDistribution::from_rows(&rows).unwrap();
        let px: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        let py: Vec<f64> = (0..3).map(|c| rows.iter().map(|r| r[c]).sum()).collect();
        let mut oracle = 0.0;
        for x in 0..3 {
            for y in 0..3 {
                oracle += rows[x][y] * (rows[x][y] / (px[x] * py[y])).log2();
            }
        }
        assert_abs_diff_eq!(mutual_information(&j), oracle, epsilon = 1e-12);
        assert!(JointDistribution::new(2, 2, vec![0.5, 0.5, 0.5, 0.0]).is_err());
        assert!(JointDistribution::from_rows(&[vec![0.5], vec![0.25, 0.25]]).is_err());
    }

    #[test]
    fn kl_proxy_examples() {
        let s = five();
        let (a, b) = (dist(&s, &R1_A), dist(&s, &R1_B));
        assert!(kl_proxy_for_mi(&a, &a).unwrap() < 1e-12);
        let forward: f64 = R1_A.iter().zip(R1_B).map(|(p, q)| p * (p / q).log2()).sum();
        let backward: f64 = R1_B.iter().zip(R1_A).map(|(p, q)| p * (p / q).log2()).sum();
        assert_abs_diff_eq!(
            kl_proxy_for_mi(&a, &b).unwrap(),
            0.5 * (forward + backward),
            epsilon = 1e-9
        );
        let r3 = kl_proxy_for_mi(&dist(&s, &R3_A), &dist(&s, &R3_B)).unwrap();
        assert!(r3 < 0.05, "{r3}");
    }

    #[test]
    fn scale_mismatch_is_reported() {
        let s5 = five();
        let s3 = Arc::new(LabelScale::new(["lo", "mid", "hi"]).unwrap());
        let a = Distribution::uniform(s5);
        let b = Distribution::uniform(s3);
        assert_eq!(kl_divergence(&a, &b), Err(MetricError::ScaleMismatch));
        assert_eq!(js_divergence(&a, &b), Err(MetricError::ScaleMismatch));
        assert_eq!(wasserstein_ordinal(&a, &b), Err(MetricError::ScaleMismatch));
        assert_eq!(cross_entropy(&a, &b), Err(MetricError::ScaleMismatch));
    }

    #[test]
    fn snapshot_uses_proxy_without_joint() {
        let s = five();
        let snap = MetricSnapshot::compute(&dist(&s, &R1_A), &dist(&s, &R1_B)).unwrap();
        assert!(snap.mutual_info.is_none() && snap.nmi.is_none());
        assert!(snap.kl_proxy.is_some());
        assert_abs_diff_eq!(snap.wd_normalized, 0.45 / 4.0, epsilon = 1e-12);
    }
}
