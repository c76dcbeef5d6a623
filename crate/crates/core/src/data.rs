//! Typed tabular datasets with declared column roles.
//!
//! Values are kept as read: numeric columns as reals, everything else as text
//! labels. Binary audit columns (sensitive, decision, outcome) carry the
//! modality that counts as "protected" or "positive" in their role, so the
//! orientation of every ratio computed downstream is explicit.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "lowercase")]
pub enum ColumnRole {
    Numeric,
    Categorical,
    Sensitive { protected: String },
    Decision { positive: String },
    Outcome { positive: String },
    Ignored,
}

impl ColumnRole {
    pub fn kind(&self) -> &'static str {
        match self {
            ColumnRole::Numeric => "numeric",
            ColumnRole::Categorical => "categorical",
            ColumnRole::Sensitive { .. } => "sensitive",
            ColumnRole::Decision { .. } => "decision",
            ColumnRole::Outcome { .. } => "outcome",
            ColumnRole::Ignored => "ignored",
        }
    }

    /// The declared protected/positive modality of a binary role.
    pub fn modality(&self) -> Option<&str> {
        match self {
            ColumnRole::Sensitive { protected } => Some(protected),
            ColumnRole::Decision { positive } | ColumnRole::Outcome { positive } => Some(positive),
            _ => None,
        }
    }

    fn is_binary(&self) -> bool {
        self.modality().is_some()
    }

    /// Model input columns: numeric and categorical features.
    pub fn is_feature(&self) -> bool {
        matches!(self, ColumnRole::Numeric | ColumnRole::Categorical)
    }
}

/// Role declaration keyed by column name. Columns absent from the schema are
/// loaded as [`ColumnRole::Ignored`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema(pub BTreeMap<String, ColumnRole>);

impl Schema {
    pub fn new() -> Self {
        Schema::default()
    }

    pub fn with(mut self, name: impl Into<String>, role: ColumnRole) -> Self {
        self.0.insert(name.into(), role);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn role(&self, name: &str) -> Option<&ColumnRole> {
        self.0.get(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Numeric(Vec<Option<f64>>),
    Text(Vec<Option<String>>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Numeric(v) => v.len(),
            Values::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn missing(&self) -> usize {
        match self {
            Values::Numeric(v) => v.iter().filter(|x| x.is_none()).count(),
            Values::Text(v) => v.iter().filter(|x| x.is_none()).count(),
        }
    }

    pub fn take(&self, rows: &[usize]) -> Values {
        match self {
            Values::Numeric(v) => Values::Numeric(rows.iter().map(|&i| v[i]).collect()),
            Values::Text(v) => Values::Text(rows.iter().map(|&i| v[i].clone()).collect()),
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Values::Numeric(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
            Values::Text(v) => v[row].clone().unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    role: ColumnRole,
    values: Values,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Column {
            name: name.into(),
            role: ColumnRole::Numeric,
            values: Values::Numeric(values),
        }
    }

    /// Convenience for complete numeric columns.
    pub fn reals(name: impl Into<String>, values: impl IntoIterator<Item = f64>) -> Self {
        Self::numeric(name, values.into_iter().map(Some).collect())
    }

    /// A text column with the given (non-numeric) role.
    pub fn text<S: Into<String>>(
        name: impl Into<String>,
        role: ColumnRole,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        Column {
            name: name.into(),
            role,
            values: Values::Text(values.into_iter().map(|s| Some(s.into())).collect()),
        }
    }

    pub fn text_with_missing(
        name: impl Into<String>,
        role: ColumnRole,
        values: Vec<Option<String>>,
    ) -> Self {
        Column {
            name: name.into(),
            role,
            values: Values::Text(values),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn role(&self) -> &ColumnRole {
        &self.role
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Distinct non-missing labels of a text column, sorted.
    pub fn modalities(&self) -> Vec<String> {
        match &self.values {
            Values::Text(v) => v
                .iter()
                .flatten()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
            Values::Numeric(_) => Vec::new(),
        }
    }

    pub fn as_numeric(&self) -> Option<&[Option<f64>]> {
        match &self.values {
            Values::Numeric(v) => Some(v),
            Values::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&[Option<String>]> {
        match &self.values {
            Values::Text(v) => Some(v),
            Values::Numeric(_) => None,
        }
    }

    /// Rows equal to the declared modality of a binary role.
    fn indicator(&self) -> Option<Vec<bool>> {
        let modality = self.role.modality()?;
        let v = self.as_text()?;
        Some(v.iter().map(|x| x.as_deref() == Some(modality)).collect())
    }

    fn check(&self) -> Result<()> {
        match (&self.role, &self.values) {
            (ColumnRole::Numeric, Values::Numeric(v)) => {
                if let Some(i) = v.iter().position(|x| matches!(x, Some(x) if !x.is_finite())) {
                    return Err(Error::UnparsableNumber {
                        row: i + 1,
                        column: self.name.clone(),
                        value: v[i].unwrap().to_string(),
                    });
                }
                Ok(())
            }
            (ColumnRole::Numeric, Values::Text(_)) => Err(Error::WrongRole {
                column: self.name.clone(),
                role: "text".into(),
                expected: "numeric values",
            }),
            (role, Values::Numeric(_)) => Err(Error::WrongRole {
                column: self.name.clone(),
                role: role.kind().into(),
                expected: "text values",
            }),
            (role, Values::Text(_)) if role.is_binary() => {
                let missing = self.values.missing();
                if missing > 0 {
                    return Err(Error::MissingAuditValues {
                        column: self.name.clone(),
                        count: missing,
                    });
                }
                let observed = self.modalities();
                if observed.len() > 2 {
                    return Err(Error::NotBinary {
                        column: self.name.clone(),
                        count: observed.len(),
                    });
                }
                let modality = role.modality().unwrap();
                // A single observed value is a degenerate but legal column
                // (e.g. every row protected); `validate` flags it.
                if observed.len() == 2 && !observed.iter().any(|m| m == modality) {
                    return Err(Error::UnknownModality {
                        column: self.name.clone(),
                        modality: modality.to_string(),
                        observed,
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Immutable column-major table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    n: usize,
    sensitive: usize,
    decision: Option<usize>,
    outcome: Option<usize>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n = columns.first().map(Column::len).unwrap_or(0);
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::Ragged(format!(
                "column '{}' has {} rows, expected {n}",
                c.name,
                c.len()
            )));
        }
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut names = BTreeSet::new();
        for c in &columns {
            if !names.insert(c.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate column '{}'", c.name)));
            }
            c.check()?;
        }
        let find = |kind: &'static str| -> Result<Option<usize>> {
            let idx: Vec<usize> = columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.role.kind() == kind)
                .map(|(i, _)| i)
                .collect();
            match idx.len() {
                0 => Ok(None),
                1 => Ok(Some(idx[0])),
                k => Err(Error::InvalidSchema(format!("{k} {kind} columns, at most one allowed"))),
            }
        };
        let sensitive = find("sensitive")?.ok_or_else(|| {
            Error::InvalidSchema("exactly one sensitive column is required".into())
        })?;
        let decision = find("decision")?;
        let outcome = find("outcome")?;
        Ok(Dataset {
            columns,
            n,
            sensitive,
            decision,
            outcome,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn schema(&self) -> Schema {
        Schema(
            self.columns
                .iter()
                .map(|c| (c.name.clone(), c.role.clone()))
                .collect(),
        )
    }

    pub fn sensitive(&self) -> &Column {
        &self.columns[self.sensitive]
    }

    pub fn decision(&self) -> Option<&Column> {
        self.decision.map(|i| &self.columns[i])
    }

    pub fn outcome(&self) -> Option<&Column> {
        self.outcome.map(|i| &self.columns[i])
    }

    pub fn protected_modality(&self) -> &str {
        self.sensitive().role.modality().unwrap()
    }

    /// The non-protected sensitive label, if it occurs in the data.
    pub fn non_protected_modality(&self) -> Option<String> {
        let protected = self.protected_modality();
        self.sensitive()
            .modalities()
            .into_iter()
            .find(|m| m != protected)
    }

    /// `true` for rows in the protected group.
    pub fn protected_mask(&self) -> Vec<bool> {
        self.sensitive().indicator().unwrap()
    }

    /// `true` for rows with a positive decision.
    pub fn decision_positive(&self) -> Result<Vec<bool>> {
        self.decision()
            .and_then(Column::indicator)
            .ok_or(Error::MissingRole("decision"))
    }

    /// `true` for rows with a positive outcome.
    pub fn outcome_positive(&self) -> Result<Vec<bool>> {
        self.outcome()
            .and_then(Column::indicator)
            .ok_or(Error::MissingRole("outcome"))
    }

    /// Values of a numeric-role column.
    pub fn numeric(&self, name: &str) -> Result<&[Option<f64>]> {
        let c = self.column(name)?;
        c.as_numeric().ok_or_else(|| Error::WrongRole {
            column: name.to_string(),
            role: c.role.kind().into(),
            expected: "numeric",
        })
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.role.is_feature())
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn numeric_feature_names(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.role == ColumnRole::Numeric)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Rows selected (and possibly repeated) by index.
    pub fn take(&self, rows: &[usize]) -> Dataset {
        assert!(!rows.is_empty(), "cannot take zero rows");
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    role: c.role.clone(),
                    values: c.values.take(rows),
                })
                .collect(),
            n: rows.len(),
            sensitive: self.sensitive,
            decision: self.decision,
            outcome: self.outcome,
        }
    }

    /// Copy with one column's values replaced; the role is kept.
    pub fn with_values(&self, name: &str, values: Values) -> Result<Dataset> {
        let mut columns = self.columns.clone();
        let col = columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        col.values = values;
        Dataset::new(columns)
    }

    /// Copy with the two sensitive modalities exchanged on every row.
    pub fn with_swapped_sensitive(&self) -> Result<Dataset> {
        let protected = self.protected_modality().to_string();
        let other = self.non_protected_modality().ok_or_else(|| {
            Error::InsufficientData("only one sensitive modality is present; nothing to swap".into())
        })?;
        let swapped = self
            .sensitive()
            .as_text()
            .unwrap()
            .iter()
            .map(|v| {
                let v = v.as_deref().unwrap();
                Some(if v == protected { other.clone() } else { protected.clone() })
            })
            .collect();
        self.with_values(&self.sensitive().name.clone(), Values::Text(swapped))
    }

    pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let missing: Vec<String> = schema
            .0
            .keys()
            .filter(|k| !header.contains(k))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::SchemaMismatch(missing));
        }
        let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); header.len()];
        for record in rdr.records() {
            let record = record?;
            for (j, col) in raw.iter_mut().enumerate() {
                let cell = record.get(j).unwrap_or("");
                col.push(if cell.is_empty() {
                    None
                } else {
                    Some(cell.to_string())
                });
            }
        }
        let mut columns = Vec::with_capacity(header.len());
        for (name, cells) in header.into_iter().zip(raw) {
            let role = schema.role(&name).cloned().unwrap_or(ColumnRole::Ignored);
            let values = if role == ColumnRole::Numeric {
                let mut parsed = Vec::with_capacity(cells.len());
                for (i, cell) in cells.into_iter().enumerate() {
                    parsed.push(match cell {
                        None => None,
                        Some(s) => match s.trim().parse::<f64>() {
                            Ok(x) if x.is_finite() => Some(x),
                            _ => {
                                return Err(Error::UnparsableNumber {
                                    row: i + 1,
                                    column: name,
                                    value: s,
                                })
                            }
                        },
                    });
                }
                Values::Numeric(parsed)
            } else {
                Values::Text(cells)
            };
            columns.push(Column { name, role, values });
        }
        Dataset::new(columns)
    }

    pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), schema)
    }

    /// Writes the table as CSV; reals use their shortest round-trip form and
    /// missing cells are left empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for i in 0..self.n {
            w.write_record(self.columns.iter().map(|c| c.values.cell(i)))?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Splits test sizes across strata so that each stratum keeps at least one
/// row on each side. `total` is the requested overall test size; it moves
/// only when that constraint cannot otherwise be met.
fn allocate(strata: &[usize], total: usize) -> Vec<usize> {
    let n: usize = strata.iter().sum();
    let cap: usize = strata.iter().map(|s| s - 1).sum();
    let total = total.clamp(strata.len(), cap);
    let quotas: Vec<f64> = strata
        .iter()
        .map(|&s| total as f64 * s as f64 / n as f64)
        .collect();
    let mut sizes: Vec<usize> = quotas
        .iter()
        .zip(strata)
        .map(|(q, &s)| (q.floor() as usize).clamp(1, s - 1))
        .collect();
    // Largest shortfall gets the next row; the first stratum wins ties.
    loop {
        let sum: usize = sizes.iter().sum();
        let deficit = |i: usize| quotas[i] - sizes[i] as f64;
        if sum < total {
            let i = (0..sizes.len())
                .filter(|&i| sizes[i] < strata[i] - 1)
                .max_by(|&i, &j| deficit(i).total_cmp(&deficit(j)).then(j.cmp(&i)))
                .unwrap();
            sizes[i] += 1;
        } else if sum > total {
            let i = (0..sizes.len())
                .filter(|&i| sizes[i] > 1)
                .min_by(|&i, &j| deficit(i).total_cmp(&deficit(j)).then(i.cmp(&j)))
                .unwrap();
            sizes[i] -= 1;
        } else {
            return sizes;
        }
    }
}

/// Stratified random train/test split on the sensitive attribute.
///
/// The test part holds `round(n * test_fraction)` rows (clamped to
/// `[1, n - 1]`), allocated to the sensitive groups proportionally. Each
/// group present in the input keeps at least one row in both parts, which
/// can move the test size by a row when the requested size is too small.
/// Row order within each part follows the input.
pub fn split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::InsufficientData(format!("cannot split {n} row(s)")));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::arg(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mask = d.protected_mask();
    let groups: Vec<Vec<usize>> = [true, false]
        .iter()
        .map(|&g| (0..n).filter(|&i| mask[i] == g).collect::<Vec<_>>())
        .filter(|rows| !rows.is_empty())
        .collect();
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(Error::InsufficientData(format!(
            "sensitive modality '{}' has {} row; stratification needs at least 2",
            d.sensitive().as_text().unwrap()[g[0]].as_deref().unwrap(),
            g.len()
        )));
    }
    let total = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let sizes = allocate(&groups.iter().map(Vec::len).collect::<Vec<_>>(), total);
    let mut is_test = vec![false; n];
    for (k, (rows, &size)) in groups.iter().zip(&sizes).enumerate() {
        let mut rows = rows.clone();
        CounterRng::derived(seed, k as u64).shuffle(&mut rows);
        for &i in &rows[..size] {
            is_test[i] = true;
        }
    }
    let train: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
    let test: Vec<usize> = (0..n).filter(|&i| is_test[i]).collect();
    Ok((d.take(&train), d.take(&test)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSummary {
    pub name: String,
    pub role: String,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n_rows: usize,
    pub columns: Vec<ColumnSummary>,
    pub sensitive: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<BTreeMap<String, usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<BTreeMap<String, usize>>,
    /// Protected group size.
    pub n1: usize,
    /// Non-protected group size.
    pub n2: usize,
    pub flags: Vec<String>,
}

fn modality_counts(c: &Column) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for v in c.as_text().into_iter().flatten().flatten() {
        *counts.entry(v.clone()).or_insert(0) += 1;
    }
    counts
}

pub fn validate(d: &Dataset) -> ValidationReport {
    let n1 = d.protected_mask().iter().filter(|&&p| p).count();
    let n2 = d.n_rows() - n1;
    let mut flags = Vec::new();
    if n1 == 0 {
        flags.push("empty protected group".to_string());
    }
    if n2 == 0 {
        flags.push("empty non-protected group".to_string());
    }
    for c in [d.decision(), d.outcome()].into_iter().flatten() {
        if c.modalities().len() < 2 {
            flags.push(format!("{} column '{}' is constant", c.role.kind(), c.name));
        }
    }
    ValidationReport {
        n_rows: d.n_rows(),
        columns: d
            .columns
            .iter()
            .map(|c| ColumnSummary {
                name: c.name.clone(),
                role: c.role.kind().to_string(),
                missing: c.values.missing(),
            })
            .collect(),
        sensitive: modality_counts(d.sensitive()),
        decision: d.decision().map(modality_counts),
        outcome: d.outcome().map(modality_counts),
        n1,
        n2,
        flags,
    }
}
