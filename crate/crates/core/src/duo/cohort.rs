use std::path::Path;

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use super::score::{risk_score, RiskOutcome, StudentRecord};
use super::tables::{AgeBand, DistanceBand, Education, RiskTables};
use crate::data::{one_hot_expand, Column, Dataset, FeatureSchema, MetricKind};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixEntry {
    pub weight: f64,
    #[serde(flatten)]
    pub record: StudentRecord,
}

/// A categorical distribution over student records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMix {
    #[serde(rename = "entry")]
    pub entries: Vec<MixEntry>,
}

impl CohortMix {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let mix: CohortMix = toml::from_str(s).map_err(|e| Error::Parse(format!("cohort mix: {e}")))?;
        mix.check()?;
        Ok(mix)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn point_mass(record: StudentRecord) -> Self {
        Self { entries: vec![MixEntry { weight: 1.0, record }] }
    }

    pub fn check(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidConfig("cohort mix has no entries".into()));
        }
        if let Some(e) = self.entries.iter().find(|e| !(e.weight.is_finite() && e.weight >= 0.0)) {
            return Err(Error::InvalidConfig(format!("mix weight {} must be nonnegative", e.weight)));
        }
        let total: f64 = self.entries.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("mix weights sum to {total}, expected 1")));
        }
        if self.entries.iter().any(|e| e.record.distance == DistanceBand::Unknown) {
            return Err(Error::InvalidConfig("records with unknown distance are excluded from the cohort".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Cohort {
    pub records: Vec<StudentRecord>,
    pub outcomes: Vec<RiskOutcome>,
    /// Three categorical columns: education, age, distance.
    pub categorical: Dataset,
    /// The same rows as 17 one-hot binary features; metric is `high_risk`.
    pub dataset: Dataset,
}

fn labels<T: Copy>(values: &[T], label: impl Fn(T) -> &'static str) -> Vec<&'static str> {
    values.iter().map(|&v| label(v)).collect()
}

pub fn cohort_schema() -> FeatureSchema {
    FeatureSchema::new(
        vec![
            Column::categorical("education", labels(Education::ALL, Education::label)),
            Column::categorical("age", labels(AgeBand::ALL, AgeBand::label)),
            Column::categorical("distance", labels(DistanceBand::KNOWN, DistanceBand::label)),
        ],
        MetricKind::Binary,
    )
}

/// Scores records and lays them out as a dataset with a binary high-risk metric.
pub fn cohort_from_records(records: Vec<StudentRecord>, tables: &RiskTables) -> Result<Cohort> {
    let outcomes: Vec<RiskOutcome> = records.iter().map(|r| risk_score(r, tables)).collect::<Result<_>>()?;
    let mut rows = Array2::zeros((records.len(), 3));
    for (mut row, r) in rows.outer_iter_mut().zip(&records) {
        let distance = DistanceBand::KNOWN.iter().position(|&d| d == r.distance).ok_or(Error::UnknownDistance)?;
        row[0] = r.education.index() as f64;
        row[1] = r.age_current.index() as f64;
        row[2] = distance as f64;
    }
    let metric: Vec<f64> = outcomes.iter().map(|o| f64::from(u8::from(o.high_risk))).collect();
    let categorical = Dataset::new(rows, metric, None, cohort_schema())?;
    let dataset = one_hot_expand(&categorical);
    Ok(Cohort { records, outcomes, categorical, dataset })
}

/// Draws `n` records from `mix` with `RngStream(seed, 0)` and scores them.
pub fn synth_cohort(n: usize, mix: &CohortMix, tables: &RiskTables, seed: u64) -> Result<Cohort> {
    mix.check()?;
    let index = WeightedIndex::new(mix.entries.iter().map(|e| e.weight))
        .map_err(|e| Error::InvalidConfig(format!("cohort mix: {e}")))?;
    let mut rng = RngStream::new(seed, 0).rng();
    let records = (0..n).map(|_| mix.entries[index.sample(&mut rng)].record).collect();
    cohort_from_records(records, tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn record() -> StudentRecord {
        StudentRecord {
            education: Education::Mbo12,
            age_current: AgeBand::A25To50,
            distance: DistanceBand::Zero,
            age_registered: AgeBand::A15To18,
            age_gba: AgeBand::A15To18,
        }
    }

    fn tables() -> RiskTables {
        let mut r2 = BTreeMap::new();
        for &a in AgeBand::ALL {
            for &d in DistanceBand::KNOWN {
                r2.insert((a, d), 40.0);
            }
        }
        RiskTables::new(r2)
    }

    #[test]
    fn point_mass_gives_identical_rows() {
        let c = synth_cohort(50, &CohortMix::point_mass(record()), &tables(), 1).unwrap();
        assert_eq!(c.dataset.len(), 50);
        assert_eq!(c.dataset.rows().ncols(), 17);
        let first = c.dataset.row(0).to_owned();
        assert!(c.dataset.rows().outer_iter().all(|r| r == first));
        // 1.2 * (40 + 30) = 84 -> category 1.
        assert!(c.dataset.metric().iter().all(|&m| m == 1.0));
    }

    #[test]
    fn one_hot_groups() {
        let mut other = record();
        other.education = Education::Wo;
        other.distance = DistanceBand::D50To500km;
        other.age_current = AgeBand::A19To20;
        let mix = CohortMix {
            entries: vec![MixEntry { weight: 0.5, record: record() }, MixEntry { weight: 0.5, record: other }],
        };
        let c = synth_cohort(200, &mix, &tables(), 2).unwrap();
        for row in c.dataset.rows().outer_iter() {
            assert_eq!(row.slice(ndarray::s![0..4]).sum(), 1.0);
            assert_eq!(row.slice(ndarray::s![4..9]).sum(), 1.0);
            assert_eq!(row.slice(ndarray::s![9..17]).sum(), 1.0);
        }
        assert_eq!(c.dataset.schema().names()[0], "education=MBO12");
        let again = synth_cohort(200, &mix, &tables(), 2).unwrap();
        assert_eq!(c.records, again.records);
    }

    #[test]
    fn toml_mix() {
        let s = r#"
[[entry]]
weight = 0.25
education = "WO"
age = "19-20"
distance = "50-500km"
age_registered = "19-20"
age_gba = "19-20"

[[entry]]
weight = 0.75
education = "MBO12"
age = "25-50"
distance = "0km"
age_registered = "15-18"
age_gba = "15-18"
"#;
        let mix = CohortMix::from_toml_str(s).unwrap();
        assert_eq!(mix.entries.len(), 2);
        assert_eq!(mix.entries[1].record, record());
        assert!(CohortMix::from_toml_str(&s.replace("0.75", "0.7")).is_err());
    }

    #[test]
    fn empty_cohort_fails_validation() {
        let r = synth_cohort(0, &CohortMix::point_mass(record()), &tables(), 0);
        assert!(matches!(r, Err(Error::Validation(_))));
    }
}
