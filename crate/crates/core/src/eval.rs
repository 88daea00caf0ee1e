//! Verification and identification metrics over score sets.
//!
//! Tie conventions are pessimistic: a score equal to the threshold is
//! accepted, and in rank computations non-mates tied with the true mate rank
//! ahead of it.

use std::fmt::Display;

use crate::error::{Error, Result};
use crate::matching::format_sig9;

/// One impression of one finger (or subject).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleId {
    pub subject: u32,
    pub impression: u32,
}

impl SampleId {
    pub fn new(subject: u32, impression: u32) -> Self {
        SampleId { subject, impression }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pair {
    pub query: SampleId,
    pub gallery: SampleId,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Protocol {
    pub genuine: Vec<Pair>,
    pub impostor: Vec<Pair>,
}

impl Protocol {
    pub fn n_genuine(&self) -> usize {
        self.genuine.len()
    }

    pub fn n_impostor(&self) -> usize {
        self.impostor.len()
    }
}

/// FVC convention: all intra-finger impression pairs are genuine; impostors
/// compare the first impression of every pair of distinct fingers.
pub fn build_fvc_protocol(n_fingers: u32, n_impressions: u32) -> Result<Protocol> {
    if n_fingers < 2 || n_impressions < 2 {
        return Err(Error::InvalidArgument(format!(
            "FVC protocol needs >= 2 fingers and impressions, got {n_fingers}x{n_impressions}"
        )));
    }
    let mut p = Protocol::default();
    for f in 0..n_fingers {
        for a in 0..n_impressions {
            for b in a + 1..n_impressions {
                p.genuine.push(Pair {
                    query: SampleId::new(f, a),
                    gallery: SampleId::new(f, b),
                });
            }
        }
    }
    for f in 0..n_fingers {
        for g in f + 1..n_fingers {
            p.impostor.push(Pair {
                query: SampleId::new(f, 0),
                gallery: SampleId::new(g, 0),
            });
        }
    }
    Ok(p)
}

/// Query set against gallery set: same-subject pairs are genuine, every
/// cross-subject pair is an impostor. Query impressions are numbered
/// `0..q_per_subject`, gallery impressions `0..g_per_subject`.
pub fn build_cross_protocol(n_subjects: u32, q_per_subject: u32, g_per_subject: u32) -> Result<Protocol> {
    if n_subjects < 1 || q_per_subject < 1 || g_per_subject < 1 {
        return Err(Error::InvalidArgument("cross protocol sizes must be >= 1".into()));
    }
    let mut p = Protocol::default();
    for s in 0..n_subjects {
        for q in 0..q_per_subject {
            for t in 0..n_subjects {
                for g in 0..g_per_subject {
                    let pair = Pair {
                        query: SampleId::new(s, q),
                        gallery: SampleId::new(t, g),
                    };
                    if s == t {
                        p.genuine.push(pair);
                    } else {
                        p.impostor.push(pair);
                    }
                }
            }
        }
    }
    Ok(p)
}

/// Pair counts of [`build_cross_protocol`] without materializing the lists.
pub fn cross_protocol_counts(n_subjects: u64, q_per_subject: u64, g_per_subject: u64) -> (u64, u64) {
    let genuine = n_subjects * q_per_subject * g_per_subject;
    let impostor = n_subjects * n_subjects.saturating_sub(1) * q_per_subject * g_per_subject;
    (genuine, impostor)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl ScoreSet {
    pub fn new(genuine: Vec<f64>, impostor: Vec<f64>) -> Self {
        ScoreSet { genuine, impostor }
    }

    fn validated(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.genuine.is_empty() || self.impostor.is_empty() {
            return Err(Error::EmptyScores);
        }
        if self.genuine.iter().chain(&self.impostor).any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("scores must be finite".into()));
        }
        let mut g = self.genuine.clone();
        let mut i = self.impostor.clone();
        g.sort_by(f64::total_cmp);
        i.sort_by(f64::total_cmp);
        Ok((g, i))
    }
}

/// Fraction of the sorted slice at or above `t`.
fn frac_at_or_above(sorted: &[f64], t: f64) -> f64 {
    let below = sorted.partition_point(|&x| x < t);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

fn sorted_union(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// Operating threshold for a target false accept rate: the smallest observed
/// score whose impostor acceptance does not exceed `far`. `None` means no
/// observed score qualifies and everything is rejected.
pub fn threshold_at_far(s: &ScoreSet, far: f64) -> Result<Option<f64>> {
    if !(far > 0.0 && far < 1.0) {
        return Err(Error::InvalidArgument(format!("far must lie in (0, 1), got {far}")));
    }
    let (g, i) = s.validated()?;
    Ok(sorted_union(&g, &i)
        .into_iter()
        .find(|&t| frac_at_or_above(&i, t) <= far))
}

/// True accept rate at the [`threshold_at_far`] operating point.
pub fn tar_at_far(s: &ScoreSet, far: f64) -> Result<f64> {
    let t = threshold_at_far(s, far)?;
    let (g, _) = s.validated()?;
    Ok(t.map_or(0.0, |t| frac_at_or_above(&g, t)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetPoint {
    pub far: f64,
    pub frr: f64,
}

/// Threshold sweep over every observed score plus one threshold above all
/// of them. Points run from `(0, frr_max)` to `(1, 0)` with FAR ascending.
pub fn det_curve(s: &ScoreSet) -> Result<Vec<DetPoint>> {
    let (g, i) = s.validated()?;
    let mut pts = vec![DetPoint { far: 0.0, frr: 1.0 }];
    for &t in sorted_union(&g, &i).iter().rev() {
        pts.push(DetPoint {
            far: frac_at_or_above(&i, t),
            frr: 1.0 - frac_at_or_above(&g, t),
        });
    }
    pts.dedup();
    Ok(pts)
}

/// Equal error rate, linearly interpolated on the DET polyline.
pub fn equal_error_rate(s: &ScoreSet) -> Result<f64> {
    let pts = det_curve(s)?;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.far >= b.frr {
            let d0 = a.frr - a.far;
            let d1 = b.frr - b.far;
            if d0 <= 0.0 {
                return Ok(0.5 * (a.far + a.frr));
            }
            let t = d0 / (d0 - d1);
            let far = a.far + t * (b.far - a.far);
            let frr = a.frr + t * (b.frr - a.frr);
            return Ok(0.5 * (far + frr));
        }
    }
    Ok(0.0)
}

/// Cumulative match characteristic. `scores[q][j]` scores query `q` against
/// gallery entry `j`; the true mate of query `q` is the first gallery entry
/// whose label equals `query_labels[q]`. Entry `r - 1` of the result is the
/// fraction of queries whose mate ranks within the top `r`.
pub fn cmc_curve<L: PartialEq + Display>(
    scores: &[Vec<f64>],
    gallery_labels: &[L],
    query_labels: &[L],
) -> Result<Vec<f64>> {
    if scores.len() != query_labels.len() {
        return Err(Error::SizeMismatch(format!(
            "{} score rows for {} queries",
            scores.len(),
            query_labels.len()
        )));
    }
    let n = gallery_labels.len();
    let mut hits = vec![0usize; n];
    for (row, label) in scores.iter().zip(query_labels) {
        if row.len() != n {
            return Err(Error::SizeMismatch(format!(
                "score row has {} entries, gallery has {n}",
                row.len()
            )));
        }
        let mate = gallery_labels
            .iter()
            .position(|g| g == label)
            .ok_or_else(|| Error::Label(format!("query label `{label}` has no gallery entry")))?;
        let s = row[mate];
        let ahead = row.iter().enumerate().filter(|&(j, &x)| j != mate && x >= s).count();
        hits[ahead] += 1;
    }
    let q = scores.len().max(1) as f64;
    let mut acc = 0usize;
    Ok(hits
        .into_iter()
        .map(|h| {
            acc += h;
            acc as f64 / q
        })
        .collect())
}

/// Headline numbers written to `summary.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub rank1: f64,
    pub tar_at_1e3: f64,
    pub tar_at_1e4: f64,
    pub eer: f64,
    pub n_genuine: usize,
    pub n_impostor: usize,
}

impl EvalSummary {
    pub fn to_csv(&self) -> String {
        format!(
            "rank1,tar@1e-3,tar@1e-4,eer,n_genuine,n_impostor\n{},{},{},{},{},{}\n",
            format_sig9(self.rank1),
            format_sig9(self.tar_at_1e3),
            format_sig9(self.tar_at_1e4),
            format_sig9(self.eer),
            self.n_genuine,
            self.n_impostor
        )
    }
}

pub fn det_csv(points: &[DetPoint]) -> String {
    let mut out = String::from("far,frr\n");
    for p in points {
        out.push_str(&format!("{},{}\n", format_sig9(p.far), format_sig9(p.frr)));
    }
    out
}

pub fn cmc_csv(cmc: &[f64]) -> String {
    let mut out = String::from("rank,accuracy\n");
    for (r, a) in cmc.iter().enumerate() {
        out.push_str(&format!("{},{}\n", r + 1, format_sig9(*a)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fvc() {
        let p = build_fvc_protocol(2, 2).unwrap();
        assert_eq!((p.n_genuine(), p.n_impostor()), (2, 1));
        assert!(build_fvc_protocol(1, 2).is_err());
    }

    #[test]
    fn small_cross() {
        let p = build_cross_protocol(2, 1, 1).unwrap();
        assert_eq!((p.n_genuine(), p.n_impostor()), (2, 2));
        for n in 1..6u32 {
            let p = build_cross_protocol(n, 1, 1).unwrap();
            assert_eq!(p.n_genuine(), n as usize);
            assert_eq!(p.n_impostor(), (n * (n - 1)) as usize);
        }
    }

    #[test]
    fn protocol_lists_disjoint() {
        let p = build_fvc_protocol(5, 3).unwrap();
        let g: std::collections::HashSet<_> = p.genuine.iter().collect();
        assert!(p.impostor.iter().all(|x| !g.contains(x)));
    }

    #[test]
    fn tar_hand_example() {
        let s = ScoreSet::new(vec![0.9, 0.8], vec![0.1, 0.2]);
        assert_eq!(threshold_at_far(&s, 0.5).unwrap(), Some(0.2));
        assert_eq!(tar_at_far(&s, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn tar_below_resolution() {
        // Ten impostors: any far < 0.1 demands a threshold above all of them.
        let imp: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let gen = vec![0.35, 0.85, 0.9, 0.95, 1.2, 1.3, 0.1, 0.5, 0.91, 0.92];
        let s = ScoreSet::new(gen, imp);
        // Max impostor 0.9; genuine strictly above: 0.95, 1.2, 1.3, 0.91, 0.92.
        assert_eq!(tar_at_far(&s, 0.05).unwrap(), 0.5);
    }

    #[test]
    fn indistinguishable_sets() {
        let v: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64).collect();
        let s = ScoreSet::new(v.clone(), v);
        for far in [0.01, 0.1, 0.25, 0.5] {
            let t = tar_at_far(&s, far).unwrap();
            assert!(t <= far + 1e-12 && t >= far - 1.0 / 200.0, "far {far} tar {t}");
        }
        assert!((equal_error_rate(&s).unwrap() - 0.5).abs() < 0.01);
    }

    #[test]
    fn empty_scores() {
        let s = ScoreSet::new(vec![], vec![0.1]);
        assert!(matches!(tar_at_far(&s, 0.1), Err(Error::EmptyScores)));
        assert!(matches!(det_curve(&s), Err(Error::EmptyScores)));
        assert!(tar_at_far(&ScoreSet::new(vec![1.0], vec![0.0]), 1.0).is_err());
    }

    #[test]
    fn det_hand_example() {
        // Genuine {0.8, 0.6}, impostor {0.7, 0.2}. Thresholds descending:
        // +inf: (0, 1); 0.8: (0, 0.5); 0.7: (0.5, 0.5); 0.6: (0.5, 0); 0.2: (1, 0).
        let s = ScoreSet::new(vec![0.8, 0.6], vec![0.7, 0.2]);
        let pts: Vec<(f64, f64)> = det_curve(&s).unwrap().iter().map(|p| (p.far, p.frr)).collect();
        assert_eq!(pts, vec![(0.0, 1.0), (0.0, 0.5), (0.5, 0.5), (0.5, 0.0), (1.0, 0.0)]);
        assert_eq!(equal_error_rate(&s).unwrap(), 0.5);
    }

    #[test]
    fn det_separated_touches_origin() {
        let s = ScoreSet::new(vec![0.9, 0.8], vec![0.1, 0.2]);
        let pts = det_curve(&s).unwrap();
        assert!(pts.iter().any(|p| p.far == 0.0 && p.frr == 0.0));
        assert_eq!(equal_error_rate(&s).unwrap(), 0.0);
    }

    #[test]
    fn cmc_examples() {
        let labels = ["a", "b", "c"];
        let scores = vec![vec![0.9, 0.1, 0.2], vec![0.8, 0.5, 0.1], vec![0.1, 0.2, 0.7]];
        let cmc = cmc_curve(&scores, &labels, &labels).unwrap();
        assert_eq!(cmc, vec![2.0 / 3.0, 1.0, 1.0]);

        let two = vec![vec![0.9, 0.1], vec![0.2, 0.6]];
        assert_eq!(cmc_curve(&two, &labels[..2], &labels[..2]).unwrap()[0], 1.0);

        let tied = vec![vec![0.5, 0.5]];
        assert_eq!(cmc_curve(&tied, &["x", "y"], &["y"]).unwrap(), vec![0.0, 1.0]);

        assert!(matches!(cmc_curve(&tied, &["x", "y"], &["z"]), Err(Error::Label(_))));
    }

    #[test]
    fn summary_csv_layout() {
        let s = EvalSummary {
            rank1: 1.0,
            tar_at_1e3: 0.5,
            tar_at_1e4: 0.25,
            eer: 0.0,
            n_genuine: 2,
            n_impostor: 1,
        };
        assert_eq!(
            s.to_csv(),
            "rank1,tar@1e-3,tar@1e-4,eer,n_genuine,n_impostor\n1,0.5,0.25,0,2,1\n"
        );
    }
}
