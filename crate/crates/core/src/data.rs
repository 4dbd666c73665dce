//! Training data: schema, CSV loading, synthetic generators and fold splits.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Instance identifier; always an index into [`Dataset::instances`].
pub type InstanceId = u32;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv needs at least 2 columns, found {0}")]
    TooFewColumns(usize),
    #[error("empty data section")]
    EmptyData,
    #[error("row {row} has {found} fields, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("blank cell at row {row}, column '{column}' (missing values are not supported)")]
    BlankCell { row: usize, column: String },
    #[error("unknown class column '{0}'")]
    UnknownColumn(String),
    #[error("class column has {0} distinct value(s), need at least 2")]
    TooFewClasses(usize),
    #[error("column '{0}' is real-valued; only integer continuous attributes are supported")]
    RealValuedColumn(String),
    #[error("column '{column}' forced continuous but value '{value}' is not an integer")]
    NotInteger { column: String, value: String },
    #[error("{what} out of range: {value} (allowed {min}..={max})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },
    #[error("cannot split {n} instances into {k} folds")]
    TooManyFolds { k: usize, n: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeKind {
    Nominal { values: Vec<String> },
    Continuous { min: i64, max: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
}

impl AttributeSchema {
    pub fn nominal<S: Into<String>>(name: S, values: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Nominal {
                values: values.iter().map(|v| v.to_string()).collect(),
            },
        }
    }

    pub fn continuous<S: Into<String>>(name: S, min: i64, max: i64) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Continuous { min, max },
        }
    }

    fn check(&self) -> Result<(), String> {
        match &self.kind {
            AttributeKind::Nominal { values } => {
                if values.is_empty() {
                    return Err(format!("attribute '{}' has no values", self.name));
                }
                if has_duplicates(values) {
                    return Err(format!("attribute '{}' repeats a value", self.name));
                }
            }
            AttributeKind::Continuous { min, max } => {
                if min > max {
                    return Err(format!("attribute '{}' has min > max", self.name));
                }
            }
        }
        Ok(())
    }

    /// Whether `value` is admissible for this attribute.
    pub fn admits(&self, value: &Value) -> bool {
        match (&self.kind, value) {
            (AttributeKind::Nominal { values }, Value::Nominal(i)) => (*i as usize) < values.len(),
            (AttributeKind::Continuous { min, max }, Value::Integer(v)) => min <= v && v <= max,
            _ => false,
        }
    }

    pub fn format_value(&self, value: &Value) -> String {
        match (&self.kind, value) {
            (AttributeKind::Nominal { values }, Value::Nominal(i)) => values[*i as usize].clone(),
            (_, Value::Integer(v)) => v.to_string(),
            (_, Value::Nominal(i)) => format!("#{i}"),
        }
    }
}

/// One attribute value. Nominal values are stored as an index into the
/// attribute's value list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Value {
    Nominal(u32),
    Integer(i64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: InstanceId,
    pub values: Vec<Value>,
    /// Index into [`Dataset::class_values`].
    pub class: u32,
}

/// Immutable training data. Instance ids are exactly `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub attributes: Vec<AttributeSchema>,
    pub class_values: Vec<String>,
    pub instances: Vec<Instance>,
}

impl Dataset {
    /// Builds a dataset and checks every invariant (schema validity, ids,
    /// value conformance).
    pub fn new(
        attributes: Vec<AttributeSchema>,
        class_values: Vec<String>,
        instances: Vec<Instance>,
    ) -> Result<Self, DataError> {
        let ds = Self {
            attributes,
            class_values,
            instances,
        };
        ds.validate().map_err(DataError::Invalid)?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), String> {
        for a in &self.attributes {
            a.check()?;
        }
        if self.class_values.len() < 2 {
            return Err("fewer than 2 class values".into());
        }
        if has_duplicates(&self.class_values) {
            return Err("class values repeat".into());
        }
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.id as usize != i {
                return Err(format!("instance at position {i} has id {}", inst.id));
            }
            if inst.values.len() != self.attributes.len() {
                return Err(format!("instance {i} has {} values", inst.values.len()));
            }
            for (a, v) in self.attributes.iter().zip(&inst.values) {
                if !a.admits(v) {
                    return Err(format!("instance {i}: value {v:?} outside '{}'", a.name));
                }
            }
            if inst.class as usize >= self.class_values.len() {
                return Err(format!("instance {i}: class index {}", inst.class));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_values.len()
    }

    pub fn instance(&self, id: InstanceId) -> &Instance {
        &self.instances[id as usize]
    }

    /// New dataset holding the given instances, re-numbered `0..ids.len()`.
    /// The schema is kept as is so trees stay portable between folds.
    pub fn subset(&self, ids: &[InstanceId]) -> Dataset {
        let instances = ids
            .iter()
            .enumerate()
            .map(|(new_id, &old)| Instance {
                id: new_id as InstanceId,
                ..self.instances[old as usize].clone()
            })
            .collect();
        Dataset {
            attributes: self.attributes.clone(),
            class_values: self.class_values.clone(),
            instances,
        }
    }

    /// Writes the dataset as CSV (header, attributes then a `class` column).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.attributes.iter().map(|a| a.name.as_str()).collect();
        header.push("class");
        w.write_record(&header)?;
        for inst in &self.instances {
            let mut row: Vec<String> = self
                .attributes
                .iter()
                .zip(&inst.values)
                .map(|(a, v)| a.format_value(v))
                .collect();
            row.push(self.class_values[inst.class as usize].clone());
            w.write_record(&row)?;
        }
        w.flush().map_err(|source| DataError::Io {
            path: "<csv writer>".into(),
            source,
        })?;
        Ok(())
    }
}

fn has_duplicates(values: &[String]) -> bool {
    let mut seen = std::collections::HashSet::new();
    values.iter().any(|v| !seen.insert(v))
}

/// Which column holds the class label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum ClassColumn {
    #[default]
    Last,
    Name(String),
}

/// Per-column override of the inferred attribute kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindHint {
    Nominal,
    Continuous,
}

pub fn load_csv<P: AsRef<Path>>(
    path: P,
    class_column: &ClassColumn,
    overrides: &HashMap<String, KindHint>,
) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
    parse_csv(&text, class_column, overrides)
}

/// Parses CSV text. Schema inference: a column whose every cell parses as
/// an integer is continuous with observed `[min..max]`; other columns are
/// nominal with values in order of first appearance. Overrides win.
pub fn parse_csv(
    text: &str,
    class_column: &ClassColumn,
    overrides: &HashMap<String, KindHint>,
) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(DataError::TooFewColumns(header.len()));
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(DataError::RaggedRow {
                row: i + 1,
                expected: header.len(),
                found: rec.len(),
            });
        }
        let row: Vec<String> = rec.iter().map(str::to_string).collect();
        if let Some(c) = row.iter().position(|cell| cell.is_empty()) {
            return Err(DataError::BlankCell {
                row: i + 1,
                column: header[c].clone(),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::EmptyData);
    }

    let class_idx = match class_column {
        ClassColumn::Last => header.len() - 1,
        ClassColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::UnknownColumn(name.clone()))?,
    };

    let class_values = first_appearance(rows.iter().map(|r| r[class_idx].as_str()));
    if class_values.len() < 2 {
        return Err(DataError::TooFewClasses(class_values.len()));
    }

    let mut attributes = Vec::new();
    let mut columns = Vec::new();
    for (c, name) in header.iter().enumerate() {
        if c == class_idx {
            continue;
        }
        let cells = rows.iter().map(|r| r[c].as_str());
        attributes.push(infer_kind(name, cells, overrides.get(name).copied())?);
        columns.push(c);
    }

    let class_lookup = index_of(&class_values);
    let instances = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let values = attributes
                .iter()
                .zip(&columns)
                .map(|(attr, &c)| encode(attr, &row[c]))
                .collect();
            Instance {
                id: i as InstanceId,
                values,
                class: class_lookup[row[class_idx].as_str()],
            }
        })
        .collect();
    Dataset::new(attributes, class_values, instances)
}

fn first_appearance<'a, I: Iterator<Item = &'a str>>(cells: I) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in cells {
        if !out.iter().any(|v| v == c) {
            out.push(c.to_string());
        }
    }
    out
}

fn index_of(values: &[String]) -> HashMap<&str, u32> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i as u32))
        .collect()
}

fn infer_kind<'a, I>(name: &str, cells: I, hint: Option<KindHint>) -> Result<AttributeSchema, DataError>
where
    I: Iterator<Item = &'a str> + Clone,
{
    let ints: Option<Vec<i64>> = cells.clone().map(|c| c.parse::<i64>().ok()).collect();
    let nominal = || AttributeSchema {
        name: name.to_string(),
        kind: AttributeKind::Nominal {
            values: first_appearance(cells.clone()),
        },
    };
    match (hint, ints) {
        (Some(KindHint::Nominal), _) => Ok(nominal()),
        (_, Some(vals)) => {
            let min = *vals.iter().min().expect("non-empty column");
            let max = *vals.iter().max().expect("non-empty column");
            Ok(AttributeSchema::continuous(name, min, max))
        }
        (Some(KindHint::Continuous), None) => {
            let bad = cells.clone().find(|c| c.parse::<i64>().is_err()).unwrap_or_default();
            Err(DataError::NotInteger {
                column: name.to_string(),
                value: bad.to_string(),
            })
        }
        (None, None) => {
            if cells.clone().all(|c| c.parse::<f64>().is_ok()) {
                Err(DataError::RealValuedColumn(name.to_string()))
            } else {
                Ok(nominal())
            }
        }
    }
}

fn encode(attr: &AttributeSchema, cell: &str) -> Value {
    match &attr.kind {
        AttributeKind::Nominal { values } => {
            Value::Nominal(values.iter().position(|v| v == cell).expect("value collected during inference") as u32)
        }
        AttributeKind::Continuous { .. } => Value::Integer(cell.parse().expect("checked during inference")),
    }
}

fn binary_attributes(names: impl Iterator<Item = String>) -> Vec<AttributeSchema> {
    names
        .map(|n| AttributeSchema::nominal(n, &["0", "1"]))
        .collect()
}

/// Bits of `row` over `width` positions, most significant first.
fn bits_of(row: usize, width: usize) -> Vec<u32> {
    (0..width).map(|b| ((row >> (width - 1 - b)) & 1) as u32).collect()
}

/// Full truth table of the multiplexor with `address_bits` selector bits.
/// Attributes are `A0..` (A0 most significant) then `D0..`; the class is the
/// data bit the address selects.
pub fn generate_multiplexor(address_bits: usize) -> Result<Dataset, DataError> {
    if !(1..=4).contains(&address_bits) {
        return Err(DataError::OutOfRange {
            what: "address bits",
            value: address_bits,
            min: 1,
            max: 4,
        });
    }
    let data_bits = 1usize << address_bits;
    let width = address_bits + data_bits;
    let attributes = binary_attributes(
        (0..address_bits)
            .map(|i| format!("A{i}"))
            .chain((0..data_bits).map(|i| format!("D{i}"))),
    );
    let instances = (0..1usize << width)
        .map(|row| {
            let bits = bits_of(row, width);
            let address = bits[..address_bits]
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | b as usize);
            Instance {
                id: row as InstanceId,
                class: bits[address_bits + address],
                values: bits.into_iter().map(Value::Nominal).collect(),
            }
        })
        .collect();
    Dataset::new(attributes, vec!["0".into(), "1".into()], instances)
}

/// Full truth table of the `bits`-input parity (XOR) function, rows in
/// lexicographic order with `B0` most significant.
pub fn generate_parity(bits: usize) -> Result<Dataset, DataError> {
    if !(1..=16).contains(&bits) {
        return Err(DataError::OutOfRange {
            what: "parity bits",
            value: bits,
            min: 1,
            max: 16,
        });
    }
    let attributes = binary_attributes((0..bits).map(|i| format!("B{i}")));
    let instances = (0..1usize << bits)
        .map(|row| {
            let v = bits_of(row, bits);
            Instance {
                id: row as InstanceId,
                class: v.iter().sum::<u32>() % 2,
                values: v.into_iter().map(Value::Nominal).collect(),
            }
        })
        .collect();
    Dataset::new(attributes, vec!["0".into(), "1".into()], instances)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fold {
    pub train: Vec<InstanceId>,
    pub test: Vec<InstanceId>,
}

/// k-fold plan: ids shuffled with ChaCha8 seeded by `seed`, then dealt
/// round-robin into `k` test sets.
pub fn split_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>, DataError> {
    let n = dataset.len();
    if k < 2 || k > n {
        return Err(DataError::TooManyFolds { k, n });
    }
    let mut ids: Vec<InstanceId> = (0..n as InstanceId).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut tests = vec![Vec::new(); k];
    for (i, id) in ids.into_iter().enumerate() {
        tests[i % k].push(id);
    }
    Ok(tests
        .into_iter()
        .map(|test| {
            let mut in_test = vec![false; n];
            for &id in &test {
                in_test[id as usize] = true;
            }
            let train = (0..n as InstanceId).filter(|&id| !in_test[id as usize]).collect();
            Fold { train, test }
        })
        .collect())
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} instances, {} attributes, {} classes",
            self.len(),
            self.attributes.len(),
            self.num_classes()
        )
    }
}
