use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::plan::{GroupKey, SessionPlan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
    Equal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub idx: usize,
    pub choice: Choice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub observer_id: String,
    pub results: Vec<TrialResult>,
}

impl PreferenceRecord {
    /// Checks that the record answers every planned trial exactly once.
    pub fn check_against(&self, plan: &SessionPlan) -> Result<()> {
        let bad = |reason: String| Error::IncompleteRecord {
            observer: self.observer_id.clone(),
            reason,
        };
        if self.observer_id != plan.observer_id {
            return Err(bad(format!("plan belongs to observer {}", plan.observer_id)));
        }
        let planned: BTreeSet<usize> = plan.trials.iter().map(|t| t.idx).collect();
        let mut answered = BTreeSet::new();
        for r in &self.results {
            if !planned.contains(&r.idx) {
                return Err(bad(format!("result for unplanned trial {}", r.idx)));
            }
            if !answered.insert(r.idx) {
                return Err(bad(format!("trial {} answered twice", r.idx)));
            }
        }
        let missing: Vec<usize> = planned.difference(&answered).copied().collect();
        if !missing.is_empty() {
            return Err(bad(format!("{} unanswered trials, first {}", missing.len(), missing[0])));
        }
        Ok(())
    }

    fn choices(&self) -> BTreeMap<usize, Choice> {
        self.results.iter().map(|r| (r.idx, r.choice)).collect()
    }
}

/// Points per video for one observer: one point to the preferred video of
/// each trial, half a point each on Equal.
pub fn score_observer(plan: &SessionPlan, record: &PreferenceRecord) -> Result<BTreeMap<String, f64>> {
    record.check_against(plan)?;
    let choices = record.choices();
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for t in &plan.trials {
        let (pa, pb) = match choices[&t.idx] {
            Choice::A => (1.0, 0.0),
            Choice::B => (0.0, 1.0),
            Choice::Equal => (0.5, 0.5),
        };
        *scores.entry(t.a.clone()).or_insert(0.0) += pa;
        *scores.entry(t.b.clone()).or_insert(0.0) += pb;
    }
    Ok(scores)
}

/// Circular triads per group: triples of videos whose strict preferences
/// form a cycle. Equal answers contribute no edge.
pub fn circular_triads(plan: &SessionPlan, record: &PreferenceRecord) -> Result<BTreeMap<GroupKey, usize>> {
    record.check_against(plan)?;
    let choices = record.choices();
    // winner -> losers, per group
    let mut graphs: BTreeMap<&GroupKey, BTreeMap<&str, BTreeSet<&str>>> = BTreeMap::new();
    let mut nodes: BTreeMap<&GroupKey, BTreeSet<&str>> = BTreeMap::new();
    for t in &plan.trials {
        let g = graphs.entry(&t.group).or_default();
        let n = nodes.entry(&t.group).or_default();
        n.insert(&t.a);
        n.insert(&t.b);
        match choices[&t.idx] {
            Choice::A => {
                g.entry(&t.a).or_default().insert(&t.b);
            }
            Choice::B => {
                g.entry(&t.b).or_default().insert(&t.a);
            }
            Choice::Equal => {}
        }
    }
    let beats = |g: &BTreeMap<&str, BTreeSet<&str>>, x: &str, y: &str| g.get(x).is_some_and(|s| s.contains(y));
    let mut out = BTreeMap::new();
    for (key, members) in &nodes {
        let g = &graphs[key];
        let v: Vec<&str> = members.iter().copied().collect();
        let mut count = 0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                for k in j + 1..v.len() {
                    let (a, b, c) = (v[i], v[j], v[k]);
                    if (beats(g, a, b) && beats(g, b, c) && beats(g, c, a))
                        || (beats(g, a, c) && beats(g, c, b) && beats(g, b, a))
                    {
                        count += 1;
                    }
                }
            }
        }
        out.insert((*key).clone(), count);
    }
    Ok(out)
}
