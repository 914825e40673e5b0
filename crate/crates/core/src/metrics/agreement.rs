//! Inter-rater agreement: Pearson's r, Kendall's tau-b and Cohen's kappa.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Agreement statistics. Undefined values (zero variance, or chance
/// agreement of 1 for kappa) are NaN with the matching `*_defined` flag
/// cleared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub pearson_rho: f64,
    pub pearson_defined: bool,
    pub kendall_tau_b: f64,
    pub kendall_defined: bool,
    pub cohens_kappa: f64,
    pub kappa_defined: bool,
    pub n: usize,
}

pub fn rater_agreement(a: &[f64], b: &[f64]) -> Result<Agreement, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(MetricsError::TooFewPairs(a.len()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let pearson = pearson(a, b);
    let kendall = kendall_tau_b(a, b);
    let kappa = cohens_kappa(a, b);
    Ok(Agreement {
        pearson_rho: pearson.unwrap_or(f64::NAN),
        pearson_defined: pearson.is_some(),
        kendall_tau_b: kendall.unwrap_or(f64::NAN),
        kendall_defined: kendall.is_some(),
        cohens_kappa: kappa.unwrap_or(f64::NAN),
        kappa_defined: kappa.is_some(),
        n: a.len(),
    })
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Centered two-pass Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    // one sqrt keeps r exactly 1 for identical lists
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

fn sign(x: f64, y: f64) -> i64 {
    match x.partial_cmp(&y).expect("finite") {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

/// Number of tied pairs `sum t(t-1)/2` over groups of equal values.
fn tied_pairs(x: &[f64]) -> i64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut total = 0i64;
    let mut run = 1i64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Tie-corrected Kendall tau-b: `S / sqrt((n0 - n1)(n0 - n2))` with `S`
/// the sum of pairwise sign products.
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as i64;
    let n0 = n * (n - 1) / 2;
    let mut s = 0i64;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            s += sign(a[i], a[j]) * sign(b[i], b[j]);
        }
    }
    let denom = ((n0 - tied_pairs(a)) as f64) * ((n0 - tied_pairs(b)) as f64);
    if denom <= 0.0 {
        return None;
    }
    Some((s as f64 / denom.sqrt()).clamp(-1.0, 1.0))
}

/// Cohen's kappa treating each distinct value as a category label.
pub fn cohens_kappa(a: &[f64], b: &[f64]) -> Option<f64> {
    struct Label(f64);
    impl PartialEq for Label {
        fn eq(&self, other: &Self) -> bool {
            self.cmp(other) == Ordering::Equal
        }
    }
    impl Eq for Label {}
    impl PartialOrd for Label {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Label {
        fn cmp(&self, other: &Self) -> Ordering {
            self.0.total_cmp(&other.0)
        }
    }

    let n = a.len() as f64;
    let mut confusion: BTreeMap<(Label, Label), usize> = BTreeMap::new();
    let mut row: BTreeMap<Label, usize> = BTreeMap::new();
    let mut col: BTreeMap<Label, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        // normalize -0.0 so it shares a category with 0.0
        let (x, y) = (x + 0.0, y + 0.0);
        *confusion.entry((Label(x), Label(y))).or_insert(0) += 1;
        *row.entry(Label(x)).or_insert(0) += 1;
        *col.entry(Label(y)).or_insert(0) += 1;
    }
    let observed = confusion
        .iter()
        .filter(|((x, y), _)| x == y)
        .map(|(_, &c)| c as f64)
        .sum::<f64>()
        / n;
    let expected = row
        .iter()
        .map(|(label, &r)| r as f64 * col.get(label).copied().unwrap_or(0) as f64)
        .sum::<f64>()
        / (n * n);
    if (1.0 - expected).abs() < f64::EPSILON {
        return None;
    }
    Some((observed - expected) / (1.0 - expected))
}
