use serde::{Deserialize, Serialize};

use super::tables::{AgeBand, DistanceBand, Education, RiskTables};
use crate::error::{Error, Result};

pub const MAX_SCORE: f64 = 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StudentRecord {
    pub education: Education,
    #[serde(rename = "age")]
    pub age_current: AgeBand,
    pub distance: DistanceBand,
    pub age_registered: AgeBand,
    pub age_gba: AgeBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskOutcome {
    pub score: f64,
    pub category: u8,
    pub high_risk: bool,
}

/// Risk category for a score in `[0, 180]`.
///
/// Integer scores follow the inclusive ranges 0, 1-19, 20-39, 40-59, 60-79
/// and 80-180 (categories 6 down to 1). Fractional scores use the real
/// intervals `(0, 20)`, `[20, 40)`, ..., `[80, 180]`.
pub fn categorize(score: f64) -> Result<u8> {
    if !(0.0..=MAX_SCORE).contains(&score) {
        return Err(Error::OutOfRange(score));
    }
    Ok(match score {
        0.0 => 6,
        s if s < 20.0 => 5,
        s if s < 40.0 => 4,
        s if s < 60.0 => 3,
        s if s < 80.0 => 2,
        _ => 1,
    })
}

pub fn is_high_risk(category: u8) -> bool {
    category <= 2
}

/// `R1[education] * (R2[age, distance] + R3[age triple])`, clamped to 180.
pub fn risk_score(record: &StudentRecord, tables: &RiskTables) -> Result<RiskOutcome> {
    let r2 = tables.r2(record.age_current, record.distance)?;
    let r3 = tables.r3(record.age_current, record.age_registered, record.age_gba);
    let mut score = tables.r1(record.education) * (r2 + r3);
    if score > MAX_SCORE {
        log::warn!("risk score {score} above {MAX_SCORE} clamped for {record:?}");
        score = MAX_SCORE;
    }
    let category = categorize(score)?;
    Ok(RiskOutcome { score, category, high_risk: is_high_risk(category) })
}
