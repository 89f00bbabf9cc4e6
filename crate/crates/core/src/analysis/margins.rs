use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::context::VariantDataset;
use crate::inference::PredictionSet;
use crate::treebank::InstanceId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// B correct, A wrong.
    Win,
    /// A correct, B wrong.
    Loss,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedOutcome {
    pub instance_id: InstanceId,
    pub run_id: u64,
    pub outcome: Outcome,
    pub gold_label: String,
}

/// Compares condition `a` (the reference) with condition `b` instance by
/// instance.
pub fn pair_outcomes(
    gold: &VariantDataset,
    a: &PredictionSet,
    b: &PredictionSet,
    run_id: u64,
) -> Result<Vec<PairedOutcome>, AnalysisError> {
    a.check_coverage(gold)
        .map_err(|source| AnalysisError::Coverage { which: "a", source })?;
    b.check_coverage(gold)
        .map_err(|source| AnalysisError::Coverage { which: "b", source })?;
    Ok(crate::par::map(&gold.instances, |inst| {
        let id = &inst.instance_id;
        let a_ok = a.get(id) == Some(inst.gold_label.as_str());
        let b_ok = b.get(id) == Some(inst.gold_label.as_str());
        let outcome = match (a_ok, b_ok) {
            (false, true) => Outcome::Win,
            (true, false) => Outcome::Loss,
            _ => Outcome::Tie,
        };
        PairedOutcome {
            instance_id: id.clone(),
            run_id,
            outcome,
            gold_label: inst.gold_label.clone(),
        }
    }))
}

/// How a relation's win/loss totals become Δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaDefinition {
    /// (wins − losses) / runs.
    #[default]
    PerRun,
    /// (wins − losses) / (wins + losses + ties): net wins per paired decision.
    PerSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Winning,
    Losing,
    Tied,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Winning, Category::Losing, Category::Tied];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Winning => "winning",
            Category::Losing => "losing",
            Category::Tied => "tied",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationMargin {
    pub relation: String,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub delta: f64,
    pub category: Category,
}

/// Margins split by category, each list sorted by |Δ| descending, then by
/// relation name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RelationMargins {
    pub winning: Vec<RelationMargin>,
    pub losing: Vec<RelationMargin>,
    pub tied: Vec<RelationMargin>,
}

impl RelationMargins {
    pub fn get(&self, category: Category) -> &[RelationMargin] {
        match category {
            Category::Winning => &self.winning,
            Category::Losing => &self.losing,
            Category::Tied => &self.tied,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &RelationMargin> {
        self.winning.iter().chain(&self.losing).chain(&self.tied)
    }

    pub fn find(&self, relation: &str) -> Option<&RelationMargin> {
        self.iter().find(|m| m.relation == relation)
    }

    pub fn category_of(&self, relation: &str) -> Option<Category> {
        self.find(relation).map(|m| m.category)
    }
}

/// Win, loss and tie totals per gold relation.
pub fn tally_outcomes(outcomes: &[PairedOutcome]) -> BTreeMap<String, [usize; 3]> {
    let mut totals: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    for o in outcomes {
        let t = totals.entry(o.gold_label.clone()).or_default();
        match o.outcome {
            Outcome::Win => t[0] += 1,
            Outcome::Loss => t[1] += 1,
            Outcome::Tie => t[2] += 1,
        }
    }
    totals
}

/// Aggregates outcomes from `num_runs` runs into per-relation margins.
pub fn relation_margins(
    outcomes: &[PairedOutcome],
    num_runs: usize,
    definition: DeltaDefinition,
) -> Result<RelationMargins, AnalysisError> {
    if num_runs == 0 {
        return Err(AnalysisError::NoRuns);
    }
    let mut out = RelationMargins::default();
    for (relation, [wins, losses, ties]) in tally_outcomes(outcomes) {
        let net = wins as f64 - losses as f64;
        let delta = match definition {
            DeltaDefinition::PerRun => net / num_runs as f64,
            DeltaDefinition::PerSupport => net / (wins + losses + ties) as f64,
        };
        let category = match wins.cmp(&losses) {
            std::cmp::Ordering::Greater => Category::Winning,
            std::cmp::Ordering::Less => Category::Losing,
            std::cmp::Ordering::Equal => Category::Tied,
        };
        let m = RelationMargin {
            relation,
            wins,
            losses,
            ties,
            delta,
            category,
        };
        match category {
            Category::Winning => out.winning.push(m),
            Category::Losing => out.losing.push(m),
            Category::Tied => out.tied.push(m),
        }
    }
    for list in [&mut out.winning, &mut out.losing, &mut out.tied] {
        list.sort_by(|x, y| {
            y.delta
                .abs()
                .total_cmp(&x.delta.abs())
                .then_with(|| x.relation.cmp(&y.relation))
        });
    }
    Ok(out)
}

pub fn write_margins_tsv<W: Write>(margins: &RelationMargins, mut w: W) -> io::Result<()> {
    writeln!(w, "relation\twins\tlosses\tties\tdelta\tcategory")?;
    for m in margins.iter() {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{:.1}\t{}",
            m.relation, m.wins, m.losses, m.ties, m.delta, m.category
        )?;
    }
    Ok(())
}
