//! Aggregate formulas and per-sample metrics.

use std::collections::BTreeSet;

use crate::geometry::{ciou, iou, BBox, Polygon};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("accuracy {name} = {value} is outside [0, 1]")]
pub struct DomainError {
    pub name: &'static str,
    pub value: String,
}

fn unit<T: Scalar>(name: &'static str, v: T) -> Result<T, DomainError> {
    if v < T::zero() || v > T::one() {
        return Err(DomainError { name, value: format!("{v:?}") });
    }
    Ok(v)
}

/// Mean of factual and deceptive accuracy.
pub fn acc_eq1<T: Scalar>(acc_fact: T, acc_dec: T) -> Result<T, DomainError> {
    Ok((unit("acc_fact", acc_fact)? + unit("acc_dec", acc_dec)?) / T::two())
}

/// Color aggregate: the two deceptive causes are averaged first, then
/// averaged with factual accuracy.
pub fn acc_eq2<T: Scalar>(acc_fact: T, acc_dec_ex: T, acc_dec_pan: T) -> Result<T, DomainError> {
    let dec = (unit("acc_dec_ex", acc_dec_ex)? + unit("acc_dec_pan", acc_dec_pan)?) / T::two();
    Ok((unit("acc_fact", acc_fact)? + dec) / T::two())
}

/// `correct / n`, or `None` for an empty group.
pub fn ratio<T: Scalar>(correct: usize, n: usize) -> Option<T> {
    (n > 0).then(|| T::from_usize_exact(correct) / T::from_usize_exact(n))
}

/// Numbers in order of appearance. A leading sign and one decimal point are
/// accepted.
pub fn numbers(text: &str) -> Vec<f64> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let neg = b[i] == b'-' && i + 1 < b.len() && b[i + 1].is_ascii_digit() && (i == 0 || !b[i - 1].is_ascii_alphanumeric());
        if b[i].is_ascii_digit() || neg {
            let start = i;
            i += 1;
            let mut dot = false;
            while i < b.len() && (b[i].is_ascii_digit() || (b[i] == b'.' && !dot && i + 1 < b.len() && b[i + 1].is_ascii_digit())) {
                dot |= b[i] == b'.';
                i += 1;
            }
            if let Ok(v) = text[start..i].parse() {
                out.push(v);
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Comma-separated labels (also split on " and "), canonicalized.
pub fn label_set(text: &str) -> BTreeSet<String> {
    super::normalize::canonical(text)
        .replace(" and ", ",")
        .split(',')
        .map(|t| t.trim().trim_end_matches('.').to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

/// `2|Y ∩ Z| / (|Y| + |Z|)`, 1 when both are empty.
pub fn example_f1(gold: &BTreeSet<String>, pred: &BTreeSet<String>) -> f64 {
    if gold.is_empty() && pred.is_empty() {
        return 1.0;
    }
    2.0 * gold.intersection(pred).count() as f64 / (gold.len() + pred.len()) as f64
}

pub fn box_iou(gold: [f64; 4], pred: [f64; 4]) -> f64 {
    let g = BBox::new(gold[0], gold[1], gold[2], gold[3]);
    let p = BBox::new(pred[0], pred[1], pred[2], pred[3]);
    if gold == pred {
        return 1.0;
    }
    g.iou(&p)
}

/// Mean C-IoU of one sample's building sets. Pairs are matched greedily by
/// descending IoU (ties by gold then prediction index); only pairs with
/// positive IoU match. Unmatched polygons on either side contribute zero:
/// the score is the matched C-IoU sum over `gold + pred - matched`.
pub fn matched_ciou(gold: &[Vec<(f64, f64)>], pred: &[Vec<(f64, f64)>]) -> f64 {
    if gold.is_empty() && pred.is_empty() {
        return 1.0;
    }
    let to_poly = |r: &Vec<(f64, f64)>| Polygon::from_coords(r).ok();
    let gp: Vec<Option<Polygon<f64>>> = gold.iter().map(to_poly).collect();
    let pp: Vec<Option<Polygon<f64>>> = pred.iter().map(to_poly).collect();
    let mut pairs = Vec::new();
    for (i, g) in gp.iter().enumerate() {
        for (j, p) in pp.iter().enumerate() {
            let v = if gold[i] == pred[j] {
                1.0
            } else {
                match (g, p) {
                    (Some(g), Some(p)) => iou(p, g),
                    _ => 0.0,
                }
            };
            if v > 0.0 {
                pairs.push((v, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut used_g, mut used_p) = (vec![false; gold.len()], vec![false; pred.len()]);
    let (mut sum, mut matched) = (0.0, 0usize);
    for (_, i, j) in pairs {
        if used_g[i] || used_p[j] {
            continue;
        }
        used_g[i] = true;
        used_p[j] = true;
        matched += 1;
        sum += if gold[i] == pred[j] {
            1.0
        } else {
            match (&gp[i], &pp[j]) {
                (Some(g), Some(p)) => ciou(p, g),
                _ => 0.0,
            }
        };
    }
    sum / (gold.len() + pred.len() - matched) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn eq1_eq2_hand_values() {
        assert!((acc_eq1(0.7679f64, 0.9067).unwrap() - 0.8373).abs() < 1e-9);
        assert!((acc_eq2(0.8150f64, 0.9333, 0.9300).unwrap() - 0.873325).abs() < 1e-9);
        assert_eq!(acc_eq2(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(acc_eq2(1.0, 1.0, 1.0).unwrap(), 1.0);
        let r = |n: i64| Rational::new(n, 10_000);
        assert_eq!(acc_eq2(r(8150), r(9333), r(9300)).unwrap(), Rational::new(873_325, 1_000_000));
        assert_eq!(acc_eq1(r(7679), r(9067)).unwrap(), Rational::new(8373, 10_000));
        assert!(acc_eq1(1.2, 0.5).is_err());
        assert!(acc_eq2(0.5, -0.1, 0.5).is_err());
    }

    #[test]
    fn pan_weight_is_a_quarter() {
        let r = |n: i64| Rational::new(n, 100);
        let d = Rational::new(1, 8);
        let a = acc_eq2(r(50), r(40), r(30)).unwrap();
        let b = acc_eq2(r(50), r(40), r(30) + d).unwrap();
        assert_eq!(b - a, d / Rational::from_integer(4));
    }

    #[test]
    fn number_extraction() {
        assert_eq!(numbers("There are 3 ships"), vec![3.0]);
        assert_eq!(numbers("length 50.0 m, width 20.0 m"), vec![50.0, 20.0]);
        assert_eq!(numbers("about -2.5 or 7."), vec![-2.5, 7.0]);
        assert_eq!(numbers("P-3 plane"), vec![3.0]);
        assert!(numbers("none").is_empty());
    }

    #[test]
    fn f1_examples() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(example_f1(&s(&["a", "b"]), &s(&["b", "c"])), 0.5);
        assert_eq!(example_f1(&s(&[]), &s(&[])), 1.0);
        assert_eq!(label_set("Forest, water and urban."), s(&["forest", "urban", "water"]));
    }

    #[test]
    fn ciou_matching() {
        let sq = |x: f64| vec![(x, 0.0), (x + 10.0, 0.0), (x + 10.0, 10.0), (x, 10.0)];
        assert_eq!(matched_ciou(&[sq(0.0), sq(100.0)], &[sq(100.0), sq(0.0)]), 1.0);
        assert_eq!(matched_ciou(&[sq(0.0)], &[]), 0.0);
        assert_eq!(matched_ciou(&[sq(0.0)], &[sq(0.0), sq(50.0)]), 0.5);
        let half = matched_ciou(&[sq(0.0)], &[sq(5.0)]);
        assert!((half - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn box_threshold() {
        let v = box_iou([0.0, 0.0, 10.0, 10.0], [0.0, 0.0, 10.0, 4.5]);
        assert!((v - 0.45).abs() < 1e-12);
        assert!(v < 0.5);
    }
}
