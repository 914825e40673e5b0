//! Slow, direct reimplementations used as test oracles. Each one takes a
//! different route from the library code it checks.
#![allow(dead_code)]

use std::collections::BTreeSet;

/// Character-by-character tokenizer.
pub fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn grams(t: &[String], n: usize) -> Vec<&[String]> {
    if t.len() < n {
        return Vec::new();
    }
    (0..=t.len() - n).map(|i| &t[i..i + n]).collect()
}

fn prf(overlap: usize, cand: usize, reference: usize) -> (f64, f64, f64) {
    let p = if cand == 0 {
        0.0
    } else {
        overlap as f64 / cand as f64
    };
    let r = if reference == 0 {
        0.0
    } else {
        overlap as f64 / reference as f64
    };
    let f = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f)
}

/// Clipped n-gram overlap by linear scans over distinct grams.
pub fn rouge_n(cand: &str, reference: &str, n: usize) -> (f64, f64, f64) {
    let (c, r) = (tokens(cand), tokens(reference));
    let (cg, rg) = (grams(&c, n), grams(&r, n));
    let mut seen: Vec<&[String]> = Vec::new();
    let mut overlap = 0;
    for g in &cg {
        if seen.contains(g) {
            continue;
        }
        seen.push(g);
        let in_c = cg.iter().filter(|x| *x == g).count();
        let in_r = rg.iter().filter(|x| *x == g).count();
        overlap += in_c.min(in_r);
    }
    prf(overlap, cg.len(), rg.len())
}

/// Full-table LCS.
pub fn lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in (0..a.len()).rev() {
        for j in (0..b.len()).rev() {
            t[i][j] = if a[i] == b[j] {
                1 + t[i + 1][j + 1]
            } else {
                t[i + 1][j].max(t[i][j + 1])
            };
        }
    }
    t[0][0]
}

pub fn rouge_l(cand: &str, reference: &str) -> (f64, f64, f64) {
    let (c, r) = (tokens(cand), tokens(reference));
    prf(lcs(&c, &r), c.len(), r.len())
}

/// Raw-sum Pearson formula.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx <= 1e-12 || vy <= 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx * vy).sqrt())
}

/// Kendall tau-b from concordant / discordant / one-sided tie counts.
pub fn kendall(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut c, mut d, mut tx, mut ty) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..x.len() {
        for j in 0..i {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1.0;
            } else if dy == 0.0 {
                ty += 1.0;
            } else if (dx > 0.0) == (dy > 0.0) {
                c += 1.0;
            } else {
                d += 1.0;
            }
        }
    }
    let denom = ((c + d + tx) * (c + d + ty)).sqrt();
    if denom == 0.0 {
        return None;
    }
    Some((c - d) / denom)
}

/// Cohen's kappa over an explicit category list and square matrix.
pub fn kappa(x: &[f64], y: &[f64]) -> Option<f64> {
    let mut cats: Vec<f64> = x.iter().chain(y).copied().collect();
    cats.sort_by(f64::total_cmp);
    cats.dedup();
    let k = cats.len();
    let idx = |v: f64| cats.iter().position(|&c| c == v).unwrap();
    let mut m = vec![vec![0f64; k]; k];
    for (&a, &b) in x.iter().zip(y) {
        m[idx(a)][idx(b)] += 1.0;
    }
    let n = x.len() as f64;
    let mut po = 0.0;
    let mut pe = 0.0;
    for i in 0..k {
        po += m[i][i];
        let row: f64 = m[i].iter().sum();
        let col: f64 = (0..k).map(|r| m[r][i]).sum();
        pe += row * col;
    }
    po /= n;
    pe /= n * n;
    if (1.0 - pe).abs() < 1e-15 {
        return None;
    }
    Some((po - pe) / (1.0 - pe))
}

/// Merge by painting a coverage array and reading off maximal runs.
pub fn coalesce(windows: &[std::ops::Range<usize>]) -> Vec<std::ops::Range<usize>> {
    let max = windows.iter().map(|w| w.end).max().unwrap_or(0);
    let mut covered = vec![false; max];
    for w in windows {
        for t in w.clone() {
            covered[t] = true;
        }
    }
    let mut out = Vec::new();
    let mut t = 0;
    while t < max {
        if covered[t] {
            let s = t;
            while t < max && covered[t] {
                t += 1;
            }
            out.push(s..t);
        } else {
            t += 1;
        }
    }
    out
}

/// Count-based majority: present in at least min(3, k) of k sets.
pub fn majority(sets: &[BTreeSet<String>]) -> BTreeSet<String> {
    let k = sets.len();
    let need = if k <= 2 { k } else { 3 };
    let universe: BTreeSet<&String> = sets.iter().flatten().collect();
    universe
        .into_iter()
        .filter(|c| sets.iter().filter(|s| s.contains(*c)).count() >= need && need > 0)
        .cloned()
        .collect()
}

/// Longest-match extraction by repeated global scans: take the longest
/// surface occurrence that fits entirely in free tokens (leftmost on ties),
/// mark it, repeat.
pub fn longest_match(
    text: &str,
    surfaces: &[(Vec<String>, String)],
) -> Vec<(usize, usize, String)> {
    let t = tokens(text);
    let mut free = vec![true; t.len()];
    let mut out = Vec::new();
    loop {
        let mut best: Option<(usize, usize, String)> = None;
        for (surface, id) in surfaces {
            let len = surface.len();
            if len == 0 || len > t.len() {
                continue;
            }
            for start in 0..=t.len() - len {
                if t[start..start + len] == surface[..]
                    && free[start..start + len].iter().all(|&f| f)
                {
                    let better = match &best {
                        None => true,
                        Some((bs, bl, _)) => len > *bl || (len == *bl && start < *bs),
                    };
                    if better {
                        best = Some((start, len, id.clone()));
                    }
                }
            }
        }
        match best {
            Some((s, l, id)) => {
                free[s..s + l].iter_mut().for_each(|f| *f = false);
                out.push((s, l, id));
            }
            None => break,
        }
    }
    out.sort();
    out
}

/// Character-scan sentence splitter.
pub fn sentences(text: &str, abbreviations: &[&str]) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let at_word_end = i + 1 == chars.len() || chars[i + 1].is_whitespace();
        if matches!(c, '.' | '!' | '?') && at_word_end && i + 1 < chars.len() {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let opens = j < chars.len() && (chars[j].is_uppercase() || chars[j].is_ascii_digit());
            let mut w = i;
            while w > 0 && !chars[w - 1].is_whitespace() {
                w -= 1;
            }
            let word: String = chars[w..=i].iter().collect();
            let abbrev = abbreviations.iter().any(|a| a.eq_ignore_ascii_case(&word));
            if opens && !abbrev {
                let s: String = chars[start..=i].iter().collect();
                out.push(s.split_whitespace().collect::<Vec<_>>().join(" "));
                start = j;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    let rest: String = chars[start.min(chars.len())..].iter().collect();
    let rest = rest.split_whitespace().collect::<Vec<_>>().join(" ");
    if !rest.is_empty() {
        out.push(rest);
    }
    out
}
