//! Entropy, cross entropy, RCE and the precision/recall curve.

use crate::error::{Error, Result};

pub const CLIP: f64 = 1e-15;

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::input("entropy of a negative or non-finite probability"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::input(format!("probabilities sum to {s}, not 1")));
    }
    Ok(-p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>())
}

/// A choice broken into weighted sub-choices.
#[derive(Debug, Clone, PartialEq)]
pub enum ChoiceTree {
    Outcome,
    Choice(Vec<(f64, ChoiceTree)>),
}

impl ChoiceTree {
    pub fn choice(branches: Vec<(f64, ChoiceTree)>) -> Self {
        ChoiceTree::Choice(branches)
    }

    pub fn uniform(n: usize) -> Self {
        ChoiceTree::Choice(vec![(1.0 / n as f64, ChoiceTree::Outcome); n])
    }

    /// H of the top choice plus the weighted entropies of every sub-choice.
    pub fn weighted_entropy(&self) -> Result<f64> {
        match self {
            ChoiceTree::Outcome => Ok(0.0),
            ChoiceTree::Choice(b) => {
                let w: Vec<f64> = b.iter().map(|x| x.0).collect();
                let mut h = entropy(&w)?;
                for (p, sub) in b {
                    h += p * sub.weighted_entropy()?;
                }
                Ok(h)
            }
        }
    }

    /// Probabilities of the final outcomes, depth first.
    pub fn outcomes(&self) -> Vec<f64> {
        match self {
            ChoiceTree::Outcome => vec![1.0],
            ChoiceTree::Choice(b) => b
                .iter()
                .flat_map(|(p, sub)| sub.outcomes().into_iter().map(move |q| p * q))
                .collect(),
        }
    }
}

pub fn decomposition_check(root: f64, tree: &ChoiceTree) -> Result<bool> {
    Ok((root - tree.weighted_entropy()?).abs() <= 1e-6)
}

/// (½,½) then (½,½) on the left and (⅓,⅓,⅓) on the right.
pub fn second_case() -> ChoiceTree {
    ChoiceTree::choice(vec![(0.5, ChoiceTree::uniform(2)), (0.5, ChoiceTree::uniform(3))])
}

/// As the second case with the right side split as (⅓, ⅔) and ⅔ as (½,½).
pub fn third_case() -> ChoiceTree {
    ChoiceTree::choice(vec![
        (0.5, ChoiceTree::uniform(2)),
        (
            0.5,
            ChoiceTree::choice(vec![(1.0 / 3.0, ChoiceTree::Outcome), (2.0 / 3.0, ChoiceTree::uniform(2))]),
        ),
    ])
}

/// The third case with the last two outcomes merged beforehand.
pub fn premature_merge() -> ChoiceTree {
    ChoiceTree::choice(vec![
        (0.5, ChoiceTree::uniform(2)),
        (
            0.5,
            ChoiceTree::choice(vec![(1.0 / 3.0, ChoiceTree::Outcome), (2.0 / 3.0, ChoiceTree::Outcome)]),
        ),
    ])
}

fn check_pair(labels: &[i64], preds: &[f64]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::input("metric on empty input"));
    }
    if labels.len() != preds.len() {
        return Err(Error::input("labels and predictions differ in length"));
    }
    Ok(())
}

/// Mean log loss with predictions clipped to [ε, 1−ε].
pub fn cross_entropy(labels: &[i64], preds: &[f64]) -> Result<f64> {
    check_pair(labels, preds)?;
    let mut s = 0.0;
    for (&l, &p) in labels.iter().zip(preds) {
        let p = p.clamp(CLIP, 1.0 - CLIP);
        s -= if l == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(s / labels.len() as f64)
}

pub fn ctr(labels: &[i64]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::input("ctr of empty labels"));
    }
    Ok(labels.iter().filter(|&&l| l == 1).count() as f64 / labels.len() as f64)
}

/// Relative cross entropy against the ground-truth CTR straw man, in percent.
pub fn rce(labels: &[i64], preds: &[f64]) -> Result<f64> {
    check_pair(labels, preds)?;
    let c = ctr(labels)?;
    if c == 0.0 || c == 1.0 {
        return Err(Error::Numeric("rce needs both classes".into()));
    }
    let straw = cross_entropy(labels, &vec![c; labels.len()])?;
    Ok((1.0 - cross_entropy(labels, preds)? / straw) * 100.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// (recall, precision), recall weakly decreasing, ending at (0, 1).
    pub points: Vec<(f64, f64)>,
}

impl PrCurve {
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[0].0 - w[1].0).abs() * (w[0].1 + w[1].1) / 2.0)
            .sum()
    }
}

pub fn pr_curve(labels: &[i64], scores: &[f64]) -> Result<PrCurve> {
    check_pair(labels, scores)?;
    let total_pos = labels.iter().filter(|&&l| l == 1).count();
    if total_pos == 0 {
        return Err(Error::Numeric("precision/recall curve without positives".into()));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut pts = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        pts.push((tp as f64 / total_pos as f64, tp as f64 / (tp + fp) as f64));
        if tp == total_pos {
            break;
        }
    }
    pts.reverse();
    pts.push((0.0, 1.0));
    Ok(PrCurve { points: pts })
}

pub fn prauc(labels: &[i64], scores: &[f64]) -> Result<f64> {
    Ok(pr_curve(labels, scores)?.area())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        let h = entropy(&[0.25, 0.25, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]).unwrap();
        assert!((h - 1.58903).abs() < 1e-4);
        assert_eq!(entropy(&[1.0]).unwrap(), 0.0);
        assert!((entropy(&[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(entropy(&[-0.5, 1.5]).is_err());
        assert!(decomposition_check(h, &second_case()).unwrap());
        assert!(decomposition_check(h, &third_case()).unwrap());
        assert!(premature_merge().weighted_entropy().unwrap() < h - 1e-3);
    }

    #[test]
    fn ce_and_rce() {
        assert!((cross_entropy(&[1, 0], &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(cross_entropy(&[1], &[1.0]).unwrap() <= 2e-15);
        let ce = cross_entropy(&[1, 1, 0, 0], &[0.8, 0.6, 0.3, 0.1]).unwrap();
        assert!((ce - 0.299001).abs() < 1e-6);
        assert!((rce(&[1, 0, 0, 0], &[0.5; 4]).unwrap() + 23.2623).abs() < 1e-3);
        assert!((rce(&[1, 0], &[1.0, 0.0]).unwrap() - 100.0).abs() < 1e-10);
        assert!(rce(&[1, 1], &[0.5, 0.5]).is_err());
        assert_eq!(ctr(&[1, 1, 0, 1]).unwrap(), 0.75);
    }

    #[test]
    fn prc() {
        let c = pr_curve(&[1, 0, 0, 0], &[0.3; 4]).unwrap();
        assert_eq!(c.points, vec![(1.0, 0.25), (0.0, 1.0)]);
        assert_eq!(c.area(), 0.625);
        assert_eq!(prauc(&[1, 1, 0, 0], &[0.9, 0.8, 0.2, 0.1]).unwrap(), 1.0);
        assert_eq!(prauc(&[1, 0], &[0.1, 0.9]).unwrap(), 0.25);
        assert!(prauc(&[0, 0], &[0.1, 0.9]).is_err());
    }
}
