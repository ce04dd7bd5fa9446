//! Acceptable families, smallest acceptable subsets, and variable importance.
//!
//! A candidate subset is acceptable at level τ when the posterior probability
//! that it loses nothing relative to the fitted quantiles, `P(D_S ≤ 0)`, is at
//! least ε.

use crate::decision::{optimal_action_with, DrawLosses, ProjectorCache, SubsetMask};
use crate::error::{Error, Result};
use crate::model::QuantileDraws;
use crate::search::CandidateSet;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_EPSILON: f64 = 0.05;
/// Threshold on variable importance for keystone covariates.
pub const DEFAULT_KEYSTONE_LEVEL: f64 = 0.9;
pub const EMPTY_REASON: &str = "no subset matches fitted quantiles";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub subset: SubsetMask,
    pub prob_d_le_0: f64,
    pub expected_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptableFamily {
    pub tau: f64,
    pub epsilon: f64,
    pub members: Vec<Member>,
    pub s_small: Option<SubsetMask>,
    pub empty_reason: Option<String>,
}

impl AcceptableFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, s: &SubsetMask) -> Option<&Member> {
        self.members.iter().find(|m| &m.subset == s)
    }
}

/// A candidate with its per-draw `D_S` values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSubset {
    pub subset: SubsetMask,
    pub d: Vec<f64>,
    pub expected_loss: f64,
}

impl ScoredSubset {
    pub fn prob_d_le_0(&self) -> f64 {
        self.d.iter().filter(|&&v| v <= 0.0).count() as f64 / self.d.len() as f64
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    Ok(())
}

/// Per-draw `D_S` and expected loss for every candidate.
pub fn score_candidates(
    cands: &CandidateSet,
    qd: &QuantileDraws,
    x: &DMatrix<f64>,
) -> Result<Vec<ScoredSubset>> {
    let losses = DrawLosses::new(qd, x)?;
    let cache = ProjectorCache::new(x);
    cands
        .subsets
        .par_iter()
        .map(|c| {
            let proj = cache.get(&c.subset)?;
            let action = optimal_action_with(&proj, &losses.qhat, qd.tau)?;
            Ok(ScoredSubset {
                subset: c.subset.clone(),
                d: losses.d_s(&action)?,
                expected_loss: losses.expected_loss(&action),
            })
        })
        .collect()
}

/// Keep the scored subsets with `P(D_S ≤ 0) ≥ epsilon`, in input order.
pub fn family_from_scores(
    tau: f64,
    epsilon: f64,
    scored: &[ScoredSubset],
) -> Result<AcceptableFamily> {
    check_epsilon(epsilon)?;
    let members: Vec<Member> = scored
        .iter()
        .map(|s| Member {
            subset: s.subset.clone(),
            prob_d_le_0: s.prob_d_le_0(),
            expected_loss: s.expected_loss,
        })
        .filter(|m| m.prob_d_le_0 >= epsilon)
        .collect();
    let mut fam = AcceptableFamily {
        tau,
        epsilon,
        members,
        s_small: None,
        empty_reason: None,
    };
    fam.s_small = smallest_acceptable(&fam);
    if fam.s_small.is_none() {
        fam.empty_reason = Some(EMPTY_REASON.to_string());
    }
    Ok(fam)
}

pub fn filter_acceptable(
    cands: &CandidateSet,
    qd: &QuantileDraws,
    x: &DMatrix<f64>,
    epsilon: f64,
) -> Result<AcceptableFamily> {
    check_epsilon(epsilon)?;
    let scored = score_candidates(cands, qd, x)?;
    family_from_scores(qd.tau, epsilon, &scored)
}

/// Fewest columns, then smallest expected loss, then first index list.
pub fn smallest_acceptable(fam: &AcceptableFamily) -> Option<SubsetMask> {
    fam.members
        .iter()
        .min_by(|a, b| {
            a.subset
                .len()
                .cmp(&b.subset.len())
                .then(a.expected_loss.total_cmp(&b.expected_loss))
                .then_with(|| a.subset.indices().cmp(b.subset.indices()))
        })
        .map(|m| m.subset.clone())
}

/// Share of family members containing each column.
pub fn variable_importance(fam: &AcceptableFamily, p: usize) -> Result<Vec<f64>> {
    if fam.members.is_empty() {
        return Err(Error::EmptyFamily(
            fam.empty_reason.clone().unwrap_or_else(|| EMPTY_REASON.into()),
        ));
    }
    let mut counts = vec![0usize; p];
    for m in &fam.members {
        for &j in m.subset.indices() {
            if j >= p {
                return Err(Error::Dimension(format!(
                    "member uses column {} of {p}",
                    j + 1
                )));
            }
            counts[j] += 1;
        }
    }
    let total = fam.members.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Columns whose importance exceeds `level`.
pub fn keystones(vi: &[f64], level: f64) -> SubsetMask {
    SubsetMask::new(
        vi.iter()
            .enumerate()
            .filter(|(_, &v)| v > level)
            .map(|(j, _)| j)
            .collect(),
    )
    .expect("indices are distinct")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableScore {
    pub index: usize,
    pub name: String,
    pub importance: f64,
    pub keystone: bool,
    /// Forced into every subset, so its importance is structurally 1.
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub indices: SubsetMask,
    pub prob_d_le_0: f64,
    pub expected_loss: f64,
}

/// Per-level JSON summary of an acceptable family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub tau: f64,
    pub epsilon: f64,
    pub n_acceptable: usize,
    pub s_small: Option<SubsetMask>,
    pub s_small_names: Option<Vec<String>>,
    pub empty_reason: Option<String>,
    pub variable_importance: Vec<VariableScore>,
    pub members: Vec<MemberReport>,
}

impl AcceptanceReport {
    pub fn new(
        fam: &AcceptableFamily,
        names: &[String],
        always_include: &SubsetMask,
        keystone_level: f64,
    ) -> Result<AcceptanceReport> {
        let p = names.len();
        let variable_importance = if fam.is_empty() {
            Vec::new()
        } else {
            variable_importance(fam, p)?
                .into_iter()
                .enumerate()
                .map(|(j, vi)| VariableScore {
                    index: j + 1,
                    name: names[j].clone(),
                    importance: vi,
                    keystone: vi > keystone_level,
                    forced: always_include.contains(j),
                })
                .collect()
        };
        Ok(AcceptanceReport {
            tau: fam.tau,
            epsilon: fam.epsilon,
            n_acceptable: fam.len(),
            s_small: fam.s_small.clone(),
            s_small_names: fam
                .s_small
                .as_ref()
                .map(|s| s.indices().iter().map(|&j| names[j].clone()).collect()),
            empty_reason: fam.empty_reason.clone(),
            variable_importance,
            members: fam
                .members
                .iter()
                .map(|m| MemberReport {
                    indices: m.subset.clone(),
                    prob_d_le_0: m.prob_d_le_0,
                    expected_loss: m.expected_loss,
                })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::exhaustive_search;

    fn mask(one_based: &[usize]) -> SubsetMask {
        SubsetMask::from_one_based(one_based, 10).unwrap()
    }

    fn fam_of(members: &[(&[usize], f64)]) -> AcceptableFamily {
        let members: Vec<Member> = members
            .iter()
            .map(|(s, loss)| Member {
                subset: mask(s),
                prob_d_le_0: 1.0,
                expected_loss: *loss,
            })
            .collect();
        let mut fam = AcceptableFamily {
            tau: 0.5,
            epsilon: 0.05,
            members,
            s_small: None,
            empty_reason: None,
        };
        fam.s_small = smallest_acceptable(&fam);
        fam
    }

    #[test]
    fn two_draw_filtering() {
        let scored = vec![
            ScoredSubset {
                subset: mask(&[1, 2]),
                d: vec![-1.0, 1.0],
                expected_loss: 1.0,
            },
            ScoredSubset {
                subset: mask(&[1, 3]),
                d: vec![1.0, 2.0],
                expected_loss: 2.0,
            },
        ];
        let fam = family_from_scores(0.5, 0.5, &scored).unwrap();
        assert_eq!(fam.len(), 1);
        assert_eq!(fam.members[0].subset, mask(&[1, 2]));
        assert_eq!(fam.members[0].prob_d_le_0, 0.5);
        assert_eq!(fam.s_small, Some(mask(&[1, 2])));
        assert!(family_from_scores(0.5, 0.0, &scored).is_err());
    }

    #[test]
    fn epsilon_one_can_empty_the_family() {
        let scored = vec![ScoredSubset {
            subset: mask(&[1]),
            d: vec![-1.0, 1.0],
            expected_loss: 1.0,
        }];
        let fam = family_from_scores(0.5, 1.0, &scored).unwrap();
        assert!(fam.is_empty());
        assert_eq!(fam.s_small, None);
        assert_eq!(fam.empty_reason.as_deref(), Some(EMPTY_REASON));
        assert!(matches!(
            variable_importance(&fam, 3),
            Err(Error::EmptyFamily(_))
        ));
    }

    #[test]
    fn smallest_member_tie_rules() {
        assert_eq!(
            fam_of(&[(&[1, 2], 9.0), (&[1, 2, 3], 1.0)]).s_small,
            Some(mask(&[1, 2]))
        );
        assert_eq!(
            fam_of(&[(&[1, 2], 5.0), (&[1, 3], 4.0)]).s_small,
            Some(mask(&[1, 3]))
        );
        assert_eq!(
            fam_of(&[(&[1, 3], 4.0), (&[1, 2], 4.0)]).s_small,
            Some(mask(&[1, 2]))
        );
    }

    #[test]
    fn importance_counts_members() {
        let vi = variable_importance(&fam_of(&[(&[1, 2], 1.0)]), 3).unwrap();
        assert_eq!(vi, vec![1.0, 1.0, 0.0]);
        let vi = variable_importance(
            &fam_of(&[(&[1, 2], 1.0), (&[1, 3], 1.0), (&[1, 2, 3], 1.0)]),
            3,
        )
        .unwrap();
        assert_eq!(vi[0], 1.0);
        assert!((vi[1] - 2.0 / 3.0).abs() < 1e-15 && (vi[2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(keystones(&[1.0, 0.95, 0.3], 0.9).to_one_based(), vec![1, 2]);
    }

    #[test]
    fn exact_fit_candidate_is_always_accepted() {
        // qhat lies in the span of the full design, so the full subset
        // reproduces it exactly
        let n = 12;
        let x = DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => ((i * 7) % 5) as f64,
        });
        let m = 4;
        let mut values = Vec::new();
        for k in 0..m {
            for i in 0..n {
                let b = [1.0 + k as f64, 0.5 - 0.1 * k as f64, (k % 2) as f64];
                values.push(b[0] + b[1] * x[(i, 1)] + b[2] * x[(i, 2)]);
            }
        }
        let qd = QuantileDraws::new(0.5, m, n, values).unwrap();
        let qhat = crate::model::fitted_quantiles(&qd);
        let cands = exhaustive_search(&qhat, &x, 0.5, 5, &SubsetMask::intercept()).unwrap();
        let fam = filter_acceptable(&cands, &qd, &x, 1.0).unwrap();
        assert_eq!(fam.member(&SubsetMask::full(3)).unwrap().prob_d_le_0, 1.0);
        // larger epsilon families are nested in smaller-epsilon ones
        let loose = filter_acceptable(&cands, &qd, &x, 0.05).unwrap();
        assert!(fam.members.iter().all(|m| loose.member(&m.subset).is_some()));
        let full_loss = loose.member(&SubsetMask::full(3)).unwrap().expected_loss;
        assert!(loose.members.iter().all(|m| full_loss <= m.expected_loss + 1e-12));
    }

    #[test]
    fn report_names_and_flags() {
        let fam = fam_of(&[(&[1, 2], 1.0), (&[1, 3], 2.0)]);
        let names: Vec<String> = ["(Intercept)", "a", "b"].iter().map(|s| s.to_string()).collect();
        let r = AcceptanceReport::new(&fam, &names, &SubsetMask::intercept(), 0.9).unwrap();
        assert_eq!(r.s_small_names, Some(vec!["(Intercept)".into(), "a".into()]));
        assert!(r.variable_importance[0].forced && r.variable_importance[0].keystone);
        assert!(!r.variable_importance[1].keystone);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"s_small\":[1,2]"));
    }
}
