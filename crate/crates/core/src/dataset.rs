//! Data model: instances with a feature vector, a binary label and a binary
//! sensitive attribute, plus CSV ingestion and counterfactual pairing.
//!
//! Indices are 0-based inside the library. Anything rendered for people
//! (reports, error rows) is 1-based.

use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label, `-1` or `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn as_i8(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn negate(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }

    /// Parses `-1`, `1` or `+1`.
    pub fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "-1" => Some(Label::Negative),
            "1" | "+1" => Some(Label::Positive),
            _ => None,
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        l.as_i8()
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            -1 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(format!("label must be -1 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// Binary sensitive attribute value `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Sensitive {
    Zero,
    One,
}

impl Sensitive {
    pub const BOTH: [Sensitive; 2] = [Sensitive::Zero, Sensitive::One];

    pub fn as_u8(self) -> u8 {
        match self {
            Sensitive::Zero => 0,
            Sensitive::One => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_u8())
    }

    pub fn flip(self) -> Sensitive {
        match self {
            Sensitive::Zero => Sensitive::One,
            Sensitive::One => Sensitive::Zero,
        }
    }

    pub fn parse(s: &str) -> Option<Sensitive> {
        match s.trim() {
            "0" => Some(Sensitive::Zero),
            "1" => Some(Sensitive::One),
            _ => None,
        }
    }
}

impl From<Sensitive> for u8 {
    fn from(z: Sensitive) -> u8 {
        z.as_u8()
    }
}

impl TryFrom<u8> for Sensitive {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(Sensitive::Zero),
            1 => Ok(Sensitive::One),
            other => Err(format!("sensitive value must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Sensitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: Vec<f64>,
    pub label: Label,
    pub sensitive: Sensitive,
}

impl Instance {
    pub fn new(features: Vec<f64>, label: Label, sensitive: Sensitive) -> Self {
        Self {
            features,
            label,
            sensitive,
        }
    }

    /// Same user with the sensitive attribute flipped.
    pub fn with_flipped_sensitive(&self) -> Instance {
        Instance {
            features: self.features.clone(),
            label: self.label,
            sensitive: self.sensitive.flip(),
        }
    }
}

/// Two instances with bitwise-identical features and different `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CounterfactualPair {
    pub left: usize,
    pub right: usize,
}

/// Non-empty, immutable, ordered collection of instances sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Vec<Instance>,
    dimension: usize,
    fingerprint: u64,
}

impl Dataset {
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        let first = instances.first().ok_or(Error::EmptyDataset)?;
        let dimension = first.features.len();
        if let Some(bad) = instances.iter().find(|i| i.features.len() != dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: bad.features.len(),
            });
        }
        let fingerprint = fingerprint(&instances, dimension);
        Ok(Self {
            instances,
            dimension,
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn get(&self, index: usize) -> Result<&Instance> {
        self.instances.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.len(),
        })
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.instances.iter().map(|i| i.label)
    }

    /// Content hash used to bind prediction tables to this dataset.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Ascending indices of instances in group `z`.
    pub fn group_indices(&self, z: Sensitive) -> Vec<usize> {
        self.instances
            .iter()
            .enumerate()
            .filter(|(_, inst)| inst.sensitive == z)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn group_size(&self, z: Sensitive) -> usize {
        self.instances.iter().filter(|i| i.sensitive == z).count()
    }

    /// All `(i, k)` with `i < k`, identical feature bits and differing `z`,
    /// ordered by `(i, k)`.
    pub fn counterfactual_pairs(&self) -> Vec<CounterfactualPair> {
        let mut pairs = Vec::new();
        for (i, a) in self.instances.iter().enumerate() {
            for (k, b) in self.instances.iter().enumerate().skip(i + 1) {
                if a.sensitive != b.sensitive && same_bits(&a.features, &b.features) {
                    pairs.push(CounterfactualPair { left: i, right: k });
                }
            }
        }
        pairs
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    /// Parses the `f_1,...,f_d,y,z` format. Row numbers in errors count data
    /// rows from 1.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::Csv {
                row: 0,
                message: e.to_string(),
            })?
            .clone();
        let dimension = parse_header(&header)?;

        let mut instances = Vec::new();
        for (k, record) in rdr.records().enumerate() {
            let row = k + 1;
            let record = record.map_err(|e| Error::Csv {
                row,
                message: e.to_string(),
            })?;
            if record.len() != dimension + 2 {
                return Err(Error::Csv {
                    row,
                    message: format!(
                        "expected {} fields, found {}",
                        dimension + 2,
                        record.len()
                    ),
                });
            }
            let features = record
                .iter()
                .take(dimension)
                .map(|s| {
                    s.parse::<f64>().map_err(|_| Error::Csv {
                        row,
                        message: format!("invalid feature value {s:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let y = &record[dimension];
            let label = Label::parse(y).ok_or_else(|| Error::InvalidLabel {
                row,
                value: y.to_string(),
            })?;
            let z = &record[dimension + 1];
            let sensitive = Sensitive::parse(z).ok_or_else(|| Error::InvalidSensitive {
                row,
                value: z.to_string(),
            })?;
            instances.push(Instance::new(features, label, sensitive));
        }
        Dataset::new(instances)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(file).map_err(|e| Error::io(path, e))
    }

    /// Writes the same format `from_reader` accepts. Features use Rust's
    /// shortest round-trip float formatting, so a reload is bit-identical.
    pub fn to_writer<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dimension).map(|j| format!("f_{j}")).collect();
        header.push("y".into());
        header.push("z".into());
        wtr.write_record(&header)?;
        for inst in &self.instances {
            let mut row: Vec<String> = inst.features.iter().map(|v| v.to_string()).collect();
            row.push(inst.label.to_string());
            row.push(inst.sensitive.to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()
    }
}

fn parse_header(header: &csv::StringRecord) -> Result<usize> {
    let n = header.len();
    if n < 2 || &header[n - 2] != "y" || &header[n - 1] != "z" {
        return Err(Error::Header(
            "expected columns f_1,...,f_d,y,z".to_string(),
        ));
    }
    for (j, name) in header.iter().take(n - 2).enumerate() {
        if name != format!("f_{}", j + 1) {
            return Err(Error::Header(format!(
                "column {} should be f_{}, found {name:?}",
                j + 1,
                j + 1
            )));
        }
    }
    Ok(n - 2)
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn fingerprint(instances: &[Instance], dimension: usize) -> u64 {
    let mut h = DefaultHasher::new();
    dimension.hash(&mut h);
    instances.len().hash(&mut h);
    for inst in instances {
        for v in &inst.features {
            v.to_bits().hash(&mut h);
        }
        inst.label.hash(&mut h);
        inst.sensitive.hash(&mut h);
    }
    h.finish()
}
