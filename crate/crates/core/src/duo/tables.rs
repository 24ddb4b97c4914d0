use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! labelled_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label $(, alias = $alias)*)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            pub fn index(self) -> usize {
                Self::ALL.iter().position(|&v| v == self).expect("variant listed in ALL")
            }
        }

        impl std::str::FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let s = s.trim();
                match s {
                    $($label $(| $alias)* => Ok($name::$variant),)+
                    other => Err(Error::Parse(format!(concat!("unknown ", stringify!($name), " {:?}"), other))),
                }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.label())
            }
        }
    };
}

labelled_enum!(
    /// Type of education.
    Education {
        Mbo12 => "MBO12" | "MBO 1-2",
        Mbo34 => "MBO34" | "MBO 3-4",
        Hbo => "HBO",
        Wo => "WO",
    }
);

labelled_enum!(
    AgeBand {
        A15To18 => "15-18",
        A19To20 => "19-20",
        A21To22 => "21-22",
        A23To24 => "23-24",
        A25To50 => "25-50",
    }
);

labelled_enum!(
    /// Distance between the student's address and the parents' address.
    DistanceBand {
        Zero => "0km",
        UpTo1km => "1m-1km",
        D1To2km => "1-2km",
        D2To5km => "2-5km",
        D5To10km => "5-10km",
        D10To20km => "10-20km",
        D20To50km => "20-50km",
        D50To500km => "50-500km",
        Unknown => "unknown",
    }
);

impl AgeBand {
    /// The band containing an age in years; ages above 50 fall in the top band.
    pub fn containing(age: u8) -> Option<AgeBand> {
        match age {
            15..=18 => Some(AgeBand::A15To18),
            19..=20 => Some(AgeBand::A19To20),
            21..=22 => Some(AgeBand::A21To22),
            23..=24 => Some(AgeBand::A23To24),
            25..=u8::MAX => Some(AgeBand::A25To50),
            _ => None,
        }
    }
}

impl DistanceBand {
    /// Bands usable as features; `Unknown` rows are excluded upstream.
    pub const KNOWN: &'static [DistanceBand] = &[
        DistanceBand::Zero,
        DistanceBand::UpTo1km,
        DistanceBand::D1To2km,
        DistanceBand::D2To5km,
        DistanceBand::D5To10km,
        DistanceBand::D10To20km,
        DistanceBand::D20To50km,
        DistanceBand::D50To500km,
    ];
}

/// R1 factors by education.
pub const R1: [(Education, f64); 4] =
    [(Education::Mbo12, 1.2), (Education::Mbo34, 1.1), (Education::Hbo, 1.0), (Education::Wo, 0.8)];

/// One tabulated R3 row with age ranges in years:
/// `(current, registered, gba registered)` and the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R3Row {
    pub current: (u8, u8),
    pub registered: (u8, u8),
    pub gba: (u8, u8),
    pub value: f64,
}

const fn r3(c: (u8, u8), r: (u8, u8), g: (u8, u8), value: f64) -> R3Row {
    R3Row { current: c, registered: r, gba: g, value }
}

/// The 18 tabulated R3 combinations. Triples not listed here score 0.
pub const R3_ROWS: [R3Row; 18] = [
    r3((21, 22), (17, 18), (17, 18), 5.0),
    r3((21, 22), (17, 18), (19, 20), 0.0),
    r3((21, 22), (19, 20), (19, 20), 0.0),
    r3((23, 24), (17, 18), (17, 18), 15.0),
    r3((23, 24), (17, 18), (19, 20), 10.0),
    r3((23, 24), (17, 18), (21, 22), 0.0),
    r3((25, 65), (17, 18), (17, 18), 30.0),
    r3((25, 65), (17, 18), (19, 20), 25.0),
    r3((25, 65), (17, 18), (21, 22), 15.0),
    r3((25, 65), (17, 18), (23, 24), 0.0),
    r3((25, 65), (17, 18), (25, 65), 0.0),
    r3((25, 65), (19, 20), (19, 20), 25.0),
    r3((25, 65), (19, 20), (21, 22), 0.0),
    r3((25, 65), (19, 20), (23, 24), 0.0),
    r3((25, 65), (19, 20), (25, 65), 0.0),
    r3((25, 65), (21, 22), (21, 22), 15.0),
    r3((25, 65), (21, 22), (23, 24), 0.0),
    r3((25, 65), (23, 24), (23, 24), 0.0),
];

pub type AgeTriple = (AgeBand, AgeBand, AgeBand);

impl R3Row {
    /// Bands of the row, keyed by the lower end of each age range.
    pub fn bands(&self) -> Result<AgeTriple> {
        let band = |r: (u8, u8)| AgeBand::containing(r.0).ok_or_else(|| Error::Parse(format!("age {} below 15", r.0)));
        Ok((band(self.current)?, band(self.registered)?, band(self.gba)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTables {
    pub r1: BTreeMap<Education, f64>,
    pub r2: BTreeMap<(AgeBand, DistanceBand), f64>,
    pub r3: BTreeMap<AgeTriple, f64>,
}

fn parse_number(cell: &str, what: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse(format!("{what}: {cell:?} is not a number")))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::Parse(format!("{what}: {v} must be a nonnegative number")));
    }
    Ok(v)
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader)
}

/// R2 table: a header of distance bands after a leading label column, then
/// one row per age band. Empty cells leave the pair uncovered.
pub fn read_r2<R: Read>(reader: R) -> Result<BTreeMap<(AgeBand, DistanceBand), f64>> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    let distances: Vec<DistanceBand> = header.iter().skip(1).map(str::parse).collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let age: AgeBand = record.get(0).unwrap_or_default().parse()?;
        for (cell, &distance) in record.iter().skip(1).zip(&distances) {
            if !cell.is_empty() {
                out.insert((age, distance), parse_number(cell, &format!("R2[{age}, {distance}]"))?);
            }
        }
    }
    Ok(out)
}

/// R1 override: a header, then rows of `education,factor`.
pub fn read_r1<R: Read>(reader: R) -> Result<BTreeMap<Education, f64>> {
    let mut out = BTreeMap::new();
    for record in csv_reader(reader).records() {
        let record = record?;
        let education: Education = record.get(0).unwrap_or_default().parse()?;
        out.insert(education, parse_number(record.get(1).unwrap_or_default(), &format!("R1[{education}]"))?);
    }
    if out.len() != Education::ALL.len() {
        return Err(Error::Parse(format!("R1 table needs all {} education types", Education::ALL.len())));
    }
    Ok(out)
}

/// R3 override: a header, then rows of `current,registered,gba,value`
/// with age bands.
pub fn read_r3<R: Read>(reader: R) -> Result<BTreeMap<AgeTriple, f64>> {
    let mut out = BTreeMap::new();
    for record in csv_reader(reader).records() {
        let record = record?;
        let band = |i: usize| -> Result<AgeBand> { record.get(i).unwrap_or_default().parse() };
        let key = (band(0)?, band(1)?, band(2)?);
        out.insert(key, parse_number(record.get(3).unwrap_or_default(), "R3 value")?);
    }
    Ok(out)
}

pub fn default_r1() -> BTreeMap<Education, f64> {
    R1.into_iter().collect()
}

pub fn default_r3() -> BTreeMap<AgeTriple, f64> {
    R3_ROWS.iter().map(|row| (row.bands().expect("tabulated ages are at least 15"), row.value)).collect()
}

impl RiskTables {
    /// Built-in R1 and R3 with the given R2.
    pub fn new(r2: BTreeMap<(AgeBand, DistanceBand), f64>) -> Self {
        Self { r1: default_r1(), r2, r3: default_r3() }
    }

    pub fn load_r2(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("R2 table {}: {e}", path.display()))))?;
        Ok(Self::new(read_r2(file)?))
    }

    pub fn r1(&self, education: Education) -> f64 {
        self.r1[&education]
    }

    /// 0 for triples without a tabulated value.
    pub fn r3(&self, current: AgeBand, registered: AgeBand, gba: AgeBand) -> f64 {
        self.r3.get(&(current, registered, gba)).copied().unwrap_or(0.0)
    }

    pub fn r2(&self, age: AgeBand, distance: DistanceBand) -> Result<f64> {
        if distance == DistanceBand::Unknown {
            return Err(Error::UnknownDistance);
        }
        self.r2
            .get(&(age, distance))
            .copied()
            .ok_or_else(|| Error::MissingR2Entry { age: age.to_string(), distance: distance.to_string() })
    }
}
