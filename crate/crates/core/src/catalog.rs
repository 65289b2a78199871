//! Attribute schemas, option catalogs and their file formats.
//!
//! Catalogs are loaded from JSON or a typed-header CSV, or generated at random
//! for simulation. Every catalog is validated on construction and immutable
//! afterwards.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as JsonValue};

use crate::error::{Error, Result};

/// Probability that a hidden preference exists on an attribute, when the
/// catalog does not say otherwise.
pub const DEFAULT_PRIOR_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum AttrKind {
    Qualitative { values: Vec<String> },
    Numeric { lo: f64, hi: f64, discrete: bool },
}

impl AttrKind {
    pub fn label(&self) -> &'static str {
        match self {
            AttrKind::Qualitative { .. } => "qualitative",
            AttrKind::Numeric { .. } => "numeric",
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, AttrKind::Numeric { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttrKind,
    pub prior_weight: f64,
    /// Distribution over qualitative values, aligned with `values`.
    pub value_prior: Option<Vec<f64>>,
}

impl AttributeSchema {
    pub fn numeric(name: impl Into<String>, lo: f64, hi: f64, discrete: bool) -> Self {
        Self {
            name: name.into(),
            kind: AttrKind::Numeric { lo, hi, discrete },
            prior_weight: DEFAULT_PRIOR_WEIGHT,
            value_prior: None,
        }
    }

    pub fn qualitative<S: Into<String>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: AttrKind::Qualitative {
                values: values.into_iter().map(Into::into).collect(),
            },
            prior_weight: DEFAULT_PRIOR_WEIGHT,
            value_prior: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Schema("attribute with empty name".into()));
        }
        if !(0.0..=1.0).contains(&self.prior_weight) {
            return Err(Error::Schema(format!(
                "`{}`: prior_weight {} outside [0,1]",
                self.name, self.prior_weight
            )));
        }
        match &self.kind {
            AttrKind::Qualitative { values } => {
                if values.is_empty() {
                    return Err(Error::Schema(format!("`{}`: empty value list", self.name)));
                }
                let mut seen = HashSet::new();
                for v in values {
                    if !seen.insert(v.as_str()) {
                        return Err(Error::Schema(format!(
                            "`{}`: duplicate value `{v}`",
                            self.name
                        )));
                    }
                }
                if let Some(prior) = &self.value_prior {
                    if prior.len() != values.len() {
                        return Err(Error::Schema(format!(
                            "`{}`: value_prior has {} entries for {} values",
                            self.name,
                            prior.len(),
                            values.len()
                        )));
                    }
                    if prior.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return Err(Error::Schema(format!(
                            "`{}`: value_prior entry outside [0,1]",
                            self.name
                        )));
                    }
                    let total: f64 = prior.iter().sum();
                    if (total - 1.0).abs() > 1e-9 {
                        return Err(Error::Schema(format!(
                            "`{}`: value_prior sums to {total}",
                            self.name
                        )));
                    }
                }
            }
            AttrKind::Numeric { lo, hi, .. } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::Schema(format!(
                        "`{}`: numeric domain [{lo}, {hi}] is empty or degenerate",
                        self.name
                    )));
                }
                if self.value_prior.is_some() {
                    return Err(Error::Schema(format!(
                        "`{}`: value_prior only applies to qualitative attributes",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Width of the declared numeric domain.
    pub fn range(&self) -> Option<f64> {
        match self.kind {
            AttrKind::Numeric { lo, hi, .. } => Some(hi - lo),
            AttrKind::Qualitative { .. } => None,
        }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self.kind {
            AttrKind::Numeric { lo, hi, .. } => Some((lo, hi)),
            AttrKind::Qualitative { .. } => None,
        }
    }

    /// Prior probability of a qualitative value being the preferred one.
    /// Uniform unless the schema pins an explicit distribution.
    pub fn value_probability(&self, label: &str) -> f64 {
        match &self.kind {
            AttrKind::Qualitative { values } => match values.iter().position(|v| v == label) {
                Some(pos) => match &self.value_prior {
                    Some(prior) => prior[pos],
                    None => 1.0 / values.len() as f64,
                },
                None => 0.0,
            },
            AttrKind::Numeric { .. } => 0.0,
        }
    }

    fn check_value(&self, option: &str, value: &Value) -> Result<()> {
        let fail = |message: String| Error::Validation {
            option: option.to_string(),
            attr: self.name.clone(),
            message,
        };
        match (&self.kind, value) {
            (AttrKind::Qualitative { values }, Value::Label(label)) => {
                if values.iter().any(|v| v == label) {
                    Ok(())
                } else {
                    Err(fail(format!("`{label}` is not one of {values:?}")))
                }
            }
            (AttrKind::Numeric { lo, hi, discrete }, Value::Num(x)) => {
                if !x.is_finite() || x < lo || x > hi {
                    Err(fail(format!("{x} outside [{lo}, {hi}]")))
                } else if *discrete && x.fract() != 0.0 {
                    Err(fail(format!("{x} is not an integer")))
                } else {
                    Ok(())
                }
            }
            (AttrKind::Qualitative { .. }, Value::Num(x)) => {
                Err(fail(format!("expected a label, got number {x}")))
            }
            (AttrKind::Numeric { .. }, Value::Label(l)) => {
                Err(fail(format!("expected a number, got label `{l}`")))
            }
        }
    }
}

/// A single attribute value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Label(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(l) => Some(l),
            Value::Num(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Label(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionRecord {
    pub id: String,
    /// One value per schema attribute, in schema order.
    pub values: Vec<Value>,
}

impl OptionRecord {
    pub fn new(id: impl Into<String>, values: Vec<Value>) -> Self {
        Self {
            id: id.into(),
            values,
        }
    }

    pub fn num(&self, attr: usize) -> f64 {
        self.values[attr].as_num().unwrap_or(f64::NAN)
    }

    pub fn label(&self, attr: usize) -> &str {
        self.values[attr].as_label().unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    schema: Vec<AttributeSchema>,
    options: Vec<OptionRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogFormat {
    Json,
    Csv,
}

impl FromStr for CatalogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(CatalogFormat::Json),
            "csv" => Ok(CatalogFormat::Csv),
            other => Err(Error::Config(format!("unknown catalog format `{other}`"))),
        }
    }
}

impl CatalogFormat {
    /// Guess the format from a file name; JSON unless it ends in `.csv`.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CatalogFormat::Csv,
            _ => CatalogFormat::Json,
        }
    }
}

impl Catalog {
    pub fn new(schema: Vec<AttributeSchema>, options: Vec<OptionRecord>) -> Result<Self> {
        if schema.is_empty() {
            return Err(Error::Schema("catalog needs at least one attribute".into()));
        }
        let mut names = HashSet::new();
        for attr in &schema {
            attr.validate()?;
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", attr.name)));
            }
        }
        let mut ids = HashSet::new();
        for option in &options {
            if !ids.insert(option.id.as_str()) {
                return Err(Error::DuplicateId(option.id.clone()));
            }
            if option.values.len() != schema.len() {
                return Err(Error::Validation {
                    option: option.id.clone(),
                    attr: String::new(),
                    message: format!(
                        "{} values for {} attributes",
                        option.values.len(),
                        schema.len()
                    ),
                });
            }
            for (attr, value) in schema.iter().zip(&option.values) {
                attr.check_value(&option.id, value)?;
            }
        }
        Ok(Self { schema, options })
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn options(&self) -> &[OptionRecord] {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }

    pub fn attr_index(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn attribute(&self, name: &str) -> Result<&AttributeSchema> {
        self.attr_index(name).map(|i| &self.schema[i])
    }

    pub fn option_index(&self, id: &str) -> Option<usize> {
        self.options.iter().position(|o| o.id == id)
    }

    /// Copy of this catalog with a replacement schema entry, revalidated.
    pub fn with_attribute(&self, attr: AttributeSchema) -> Result<Self> {
        let idx = self.attr_index(&attr.name)?;
        let mut schema = self.schema.clone();
        schema[idx] = attr;
        Catalog::new(schema, self.options.clone())
    }

    pub fn load(mut source: impl Read, format: CatalogFormat) -> Result<Self> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        match format {
            CatalogFormat::Json => Self::from_json_str(&text),
            CatalogFormat::Csv => Self::from_csv_str(&text),
        }
    }

    pub fn load_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::load(file, CatalogFormat::from_path(path))
    }

    pub fn save(&self, sink: impl Write, format: CatalogFormat) -> Result<()> {
        match format {
            CatalogFormat::Json => {
                serde_json::to_writer_pretty(sink, &self.to_json())?;
                Ok(())
            }
            CatalogFormat::Csv => self.write_csv(sink),
        }
    }

    /// Width of the declared domain of a numeric attribute.
    pub fn attribute_range(&self, attr: &str) -> Result<f64> {
        let schema = self.attribute(attr)?;
        schema.range().ok_or(Error::KindMismatch {
            attr: attr.to_string(),
            expected: "numeric",
            actual: "qualitative",
        })
    }

    // ---- JSON ----

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: CatalogDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
            position: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Self::from_doc(doc)
    }

    pub fn from_json_value(value: JsonValue) -> Result<Self> {
        let doc: CatalogDoc = serde_json::from_value(value).map_err(|e| Error::Parse {
            position: "document".into(),
            message: e.to_string(),
        })?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: CatalogDoc) -> Result<Self> {
        let schema = doc
            .schema
            .into_iter()
            .map(AttributeSchema::try_from)
            .collect::<Result<Vec<_>>>()?;
        let mut options = Vec::with_capacity(doc.options.len());
        for (pos, raw) in doc.options.into_iter().enumerate() {
            let mut values = Vec::with_capacity(schema.len());
            for attr in &schema {
                let v = raw.values.get(&attr.name).ok_or_else(|| Error::Validation {
                    option: raw.id.clone(),
                    attr: attr.name.clone(),
                    message: format!("missing value (record {})", pos + 1),
                })?;
                values.push(json_to_value(v).ok_or_else(|| Error::Validation {
                    option: raw.id.clone(),
                    attr: attr.name.clone(),
                    message: format!("unsupported value {v}"),
                })?);
            }
            if let Some(extra) = raw.values.keys().find(|k| !schema.iter().any(|a| &a.name == *k)) {
                return Err(Error::Validation {
                    option: raw.id.clone(),
                    attr: extra.clone(),
                    message: "attribute not in schema".into(),
                });
            }
            options.push(OptionRecord::new(raw.id, values));
        }
        Catalog::new(schema, options)
    }

    pub fn to_json(&self) -> JsonValue {
        let schema: Vec<AttributeDoc> = self.schema.iter().map(AttributeDoc::from).collect();
        let options: Vec<JsonValue> = self
            .options
            .iter()
            .map(|o| {
                let mut values = Map::new();
                for (attr, v) in self.schema.iter().zip(&o.values) {
                    values.insert(attr.name.clone(), value_to_json(v));
                }
                serde_json::json!({ "id": o.id, "values": values })
            })
            .collect();
        serde_json::json!({ "schema": schema, "options": options })
    }

    // ---- CSV ----

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = match records.next() {
            Some(h) => h.map_err(csv_parse_error)?,
            None => {
                return Err(Error::Parse {
                    position: "line 1".into(),
                    message: "missing schema header".into(),
                })
            }
        };
        if header.is_empty() {
            return Err(Error::Parse {
                position: "line 1".into(),
                message: "empty header".into(),
            });
        }
        let schema = header
            .iter()
            .skip(1)
            .map(parse_csv_column)
            .collect::<Result<Vec<_>>>()?;
        let mut options = Vec::new();
        for record in records {
            let record = record.map_err(csv_parse_error)?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != schema.len() + 1 {
                return Err(Error::Parse {
                    position: format!("line {line}"),
                    message: format!("expected {} fields, got {}", schema.len() + 1, record.len()),
                });
            }
            let id = record[0].to_string();
            let mut values = Vec::with_capacity(schema.len());
            for (attr, field) in schema.iter().zip(record.iter().skip(1)) {
                let value = match attr.kind {
                    AttrKind::Numeric { .. } => {
                        Value::Num(field.parse::<f64>().map_err(|_| Error::Parse {
                            position: format!("line {line}"),
                            message: format!("`{field}` is not a number (attribute `{}`)", attr.name),
                        })?)
                    }
                    AttrKind::Qualitative { .. } => Value::Label(field.to_string()),
                };
                values.push(value);
            }
            options.push(OptionRecord::new(id, values));
        }
        Catalog::new(schema, options)
    }

    fn write_csv(&self, sink: impl Write) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().from_writer(sink);
        let mut header = vec!["id".to_string()];
        header.extend(self.schema.iter().map(csv_column_header));
        writer.write_record(&header)?;
        for o in &self.options {
            let mut row = vec![o.id.clone()];
            row.extend(o.values.iter().map(|v| v.to_string()));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    // ---- generation ----

    /// Draw a catalog with independent uniform attribute values.
    pub fn generate(spec: &CatalogSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schema = spec.schema();
        let width = spec.n.to_string().len();
        let mut options = Vec::with_capacity(spec.n);
        for i in 0..spec.n {
            let values = spec
                .attributes
                .iter()
                .map(|a| a.sample(&mut rng))
                .collect();
            options.push(OptionRecord::new(format!("o{:0width$}", i + 1), values));
        }
        Catalog::new(schema, options)
    }
}

fn csv_parse_error(e: csv::Error) -> Error {
    let position = e
        .position()
        .map(|p| format!("line {}", p.line()))
        .unwrap_or_else(|| "unknown".into());
    Error::Parse {
        position,
        message: e.to_string(),
    }
}

fn parse_csv_column(column: &str) -> Result<AttributeSchema> {
    let bad = |message: String| Error::Parse {
        position: "line 1".into(),
        message,
    };
    let mut parts = column.splitn(3, ':');
    let name = parts.next().unwrap_or_default().trim();
    let kind = parts.next().map(str::trim);
    let rest = parts.next();
    match kind {
        Some("numeric") | Some("num") | Some("int") => {
            let rest = rest.ok_or_else(|| bad(format!("`{column}`: numeric column needs lo:hi")))?;
            let fields: Vec<&str> = rest.split(':').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(bad(format!("`{column}`: expected name:numeric:lo:hi[:discrete]")));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("`{column}`: `{s}` is not a number")))
            };
            let discrete = kind == Some("int")
                || matches!(fields.get(2).map(|s| s.trim()), Some("discrete") | Some("int"));
            let attr = AttributeSchema::numeric(name, parse(fields[0])?, parse(fields[1])?, discrete);
            Ok(attr)
        }
        Some("qualitative") | Some("qual") => {
            let rest =
                rest.ok_or_else(|| bad(format!("`{column}`: qualitative column needs values")))?;
            Ok(AttributeSchema::qualitative(
                name,
                rest.split('|').map(|s| s.trim().to_string()),
            ))
        }
        _ => Err(bad(format!(
            "`{column}`: expected name:numeric:lo:hi or name:qualitative:v1|v2|..."
        ))),
    }
}

fn csv_column_header(attr: &AttributeSchema) -> String {
    match &attr.kind {
        AttrKind::Numeric { lo, hi, discrete } => {
            if *discrete {
                format!("{}:numeric:{lo}:{hi}:discrete", attr.name)
            } else {
                format!("{}:numeric:{lo}:{hi}", attr.name)
            }
        }
        AttrKind::Qualitative { values } => {
            format!("{}:qualitative:{}", attr.name, values.join("|"))
        }
    }
}

fn json_to_value(v: &JsonValue) -> Option<Value> {
    match v {
        JsonValue::Number(n) => n.as_f64().map(Value::Num),
        JsonValue::String(s) => Some(Value::Label(s.clone())),
        _ => None,
    }
}

fn value_to_json(v: &Value) -> JsonValue {
    match v {
        Value::Num(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => JsonValue::from(*x as i64),
        Value::Num(x) => JsonValue::from(*x),
        Value::Label(l) => JsonValue::from(l.clone()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogDoc {
    schema: Vec<AttributeDoc>,
    #[serde(default)]
    options: Vec<OptionDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OptionDoc {
    id: String,
    values: BTreeMap<String, JsonValue>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeDoc {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    discrete: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value_prior: Option<BTreeMap<String, f64>>,
}

impl TryFrom<AttributeDoc> for AttributeSchema {
    type Error = Error;

    fn try_from(doc: AttributeDoc) -> Result<Self> {
        let kind = match doc.kind.as_str() {
            "numeric" => AttrKind::Numeric {
                lo: doc
                    .lo
                    .ok_or_else(|| Error::Schema(format!("`{}`: numeric needs lo", doc.name)))?,
                hi: doc
                    .hi
                    .ok_or_else(|| Error::Schema(format!("`{}`: numeric needs hi", doc.name)))?,
                discrete: doc.discrete.unwrap_or(false),
            },
            "qualitative" => AttrKind::Qualitative {
                values: doc.values.clone().ok_or_else(|| {
                    Error::Schema(format!("`{}`: qualitative needs values", doc.name))
                })?,
            },
            other => {
                return Err(Error::Schema(format!(
                    "`{}`: unknown kind `{other}`",
                    doc.name
                )))
            }
        };
        let value_prior = match (&kind, doc.value_prior) {
            (_, None) => None,
            (AttrKind::Qualitative { values }, Some(map)) => {
                if let Some(unknown) = map.keys().find(|k| !values.contains(k)) {
                    return Err(Error::Schema(format!(
                        "`{}`: value_prior names unknown value `{unknown}`",
                        doc.name
                    )));
                }
                Some(
                    values
                        .iter()
                        .map(|v| map.get(v).copied().unwrap_or(0.0))
                        .collect(),
                )
            }
            (AttrKind::Numeric { .. }, Some(_)) => {
                return Err(Error::Schema(format!(
                    "`{}`: value_prior only applies to qualitative attributes",
                    doc.name
                )))
            }
        };
        let attr = AttributeSchema {
            name: doc.name,
            kind,
            prior_weight: doc.prior_weight.unwrap_or(DEFAULT_PRIOR_WEIGHT),
            value_prior,
        };
        attr.validate()?;
        Ok(attr)
    }
}

impl From<&AttributeSchema> for AttributeDoc {
    fn from(attr: &AttributeSchema) -> Self {
        let mut doc = AttributeDoc {
            name: attr.name.clone(),
            kind: attr.kind.label().to_string(),
            lo: None,
            hi: None,
            discrete: None,
            values: None,
            prior_weight: Some(attr.prior_weight),
            value_prior: None,
        };
        match &attr.kind {
            AttrKind::Numeric { lo, hi, discrete } => {
                doc.lo = Some(*lo);
                doc.hi = Some(*hi);
                doc.discrete = Some(*discrete);
            }
            AttrKind::Qualitative { values } => {
                doc.values = Some(values.clone());
                doc.value_prior = attr.value_prior.as_ref().map(|p| {
                    values.iter().cloned().zip(p.iter().copied()).collect()
                });
            }
        }
        doc
    }
}

// ---- random catalog specs ----

/// Domain of one randomly generated attribute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttributeSpec {
    Integer { lo: i64, hi: i64 },
    Real { lo: f64, hi: f64 },
    /// Unordered labels `v1..vN`.
    Qualitative { levels: usize },
    /// Ordered levels `1..=N`, modelled as a discrete numeric attribute.
    Ordered { levels: usize },
}

impl AttributeSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            AttributeSpec::Integer { lo, hi } if lo >= hi => {
                Err(Error::Spec(format!("integer domain [{lo}, {hi}] is degenerate")))
            }
            AttributeSpec::Real { lo, hi } if !(lo < hi) => {
                Err(Error::Spec(format!("real domain [{lo}, {hi}] is degenerate")))
            }
            AttributeSpec::Qualitative { levels } | AttributeSpec::Ordered { levels }
                if levels < 2 =>
            {
                Err(Error::Spec(format!("{levels} level(s) is a degenerate domain")))
            }
            _ => Ok(()),
        }
    }

    fn schema(&self, name: String) -> AttributeSchema {
        match *self {
            AttributeSpec::Integer { lo, hi } => {
                AttributeSchema::numeric(name, lo as f64, hi as f64, true)
            }
            AttributeSpec::Real { lo, hi } => AttributeSchema::numeric(name, lo, hi, false),
            AttributeSpec::Qualitative { levels } => {
                AttributeSchema::qualitative(name, (1..=levels).map(|i| format!("v{i}")))
            }
            AttributeSpec::Ordered { levels } => {
                AttributeSchema::numeric(name, 1.0, levels as f64, true)
            }
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Value {
        match *self {
            AttributeSpec::Integer { lo, hi } => Value::Num(rng.gen_range(lo..=hi) as f64),
            AttributeSpec::Real { lo, hi } => Value::Num(rng.gen_range(lo..hi)),
            AttributeSpec::Qualitative { levels } => {
                Value::Label(format!("v{}", rng.gen_range(1..=levels)))
            }
            AttributeSpec::Ordered { levels } => Value::Num(rng.gen_range(1..=levels) as f64),
        }
    }
}

/// Recipe for [`Catalog::generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSpec {
    pub n: usize,
    pub attributes: Vec<AttributeSpec>,
}

pub const DEFAULT_INT_DOMAIN: (i64, i64) = (0, 100);
pub const DEFAULT_LEVELS: usize = 5;

impl CatalogSpec {
    pub fn integers(n: usize, k: usize) -> Self {
        let (lo, hi) = DEFAULT_INT_DOMAIN;
        Self {
            n,
            attributes: vec![AttributeSpec::Integer { lo, hi }; k],
        }
    }

    /// 5 integer, 2 unordered and 2 ordered attributes.
    pub fn mixed(n: usize) -> Self {
        let (lo, hi) = DEFAULT_INT_DOMAIN;
        let mut attributes = vec![AttributeSpec::Integer { lo, hi }; 5];
        attributes.extend([AttributeSpec::Qualitative { levels: DEFAULT_LEVELS }; 2]);
        attributes.extend([AttributeSpec::Ordered { levels: DEFAULT_LEVELS }; 2]);
        Self { n, attributes }
    }

    /// Parse an attribute list such as `9int`, `5int,2qual,2ord` or `mixed`.
    /// Qualitative and ordered kinds take an optional level count: `2qual3`.
    pub fn parse_attrs(n: usize, attrs: &str) -> Result<Self> {
        if attrs.trim() == "mixed" {
            return Ok(Self::mixed(n));
        }
        let (lo, hi) = DEFAULT_INT_DOMAIN;
        let mut attributes = Vec::new();
        for part in attrs.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let digits: String = part.chars().take_while(|c| c.is_ascii_digit()).collect();
            let count: usize = if digits.is_empty() {
                1
            } else {
                digits.parse().map_err(|_| Error::Spec(format!("bad count in `{part}`")))?
            };
            let rest = &part[digits.len()..];
            let kind_len = rest
                .find(|c: char| c.is_ascii_digit())
                .unwrap_or(rest.len());
            let (kind, level_text) = rest.split_at(kind_len);
            let levels = if level_text.is_empty() {
                DEFAULT_LEVELS
            } else {
                level_text
                    .parse()
                    .map_err(|_| Error::Spec(format!("bad level count in `{part}`")))?
            };
            let spec = match (kind, level_text.is_empty()) {
                ("int", true) => AttributeSpec::Integer { lo, hi },
                ("real", true) => AttributeSpec::Real {
                    lo: lo as f64,
                    hi: hi as f64,
                },
                ("qual", _) => AttributeSpec::Qualitative { levels },
                ("ord", _) => AttributeSpec::Ordered { levels },
                _ => return Err(Error::Spec(format!("unknown attribute kind `{rest}`"))),
            };
            attributes.extend(std::iter::repeat(spec).take(count));
        }
        let spec = Self { n, attributes };
        spec.validate()?;
        Ok(spec)
    }

    /// Parse the compact `rand-<n>x<attrs>` form, e.g. `rand-50x9int`.
    pub fn parse_compact(text: &str) -> Result<Self> {
        let body = text
            .strip_prefix("rand-")
            .ok_or_else(|| Error::Spec(format!("`{text}` does not start with `rand-`")))?;
        let (n, attrs) = body
            .split_once('x')
            .ok_or_else(|| Error::Spec(format!("`{text}`: expected rand-<n>x<attrs>")))?;
        let n = n
            .parse()
            .map_err(|_| Error::Spec(format!("`{text}`: bad option count")))?;
        Self::parse_attrs(n, attrs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Spec("n must be at least 1".into()));
        }
        if self.attributes.is_empty() {
            return Err(Error::Spec("at least one attribute is required".into()));
        }
        self.attributes.iter().try_for_each(AttributeSpec::validate)
    }

    pub fn schema(&self) -> Vec<AttributeSchema> {
        let width = self.attributes.len().to_string().len();
        self.attributes
            .iter()
            .enumerate()
            .map(|(i, a)| a.schema(format!("a{:0width$}", i + 1)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::fixtures::HOUSING_JSON;

    #[test]
    fn loads_housing_fixture() {
        let catalog = Catalog::from_json_str(HOUSING_JSON).unwrap();
        assert_eq!(catalog.len(), 7);
        assert_eq!(catalog.schema().len(), 4);
        assert_eq!(catalog.options()[3].id, "o4");
        assert_eq!(catalog.options()[3].label(1), "studio");
    }

    #[test]
    fn empty_options_section() {
        let text = r#"{"schema":[{"name":"x","kind":"numeric","lo":0,"hi":1}],"options":[]}"#;
        let catalog = Catalog::from_json_str(text).unwrap();
        assert!(catalog.is_empty());
    }

    #[test]
    fn rejects_out_of_domain_label() {
        let text = HOUSING_JSON.replacen("\"type\": \"apartment\"", "\"type\": \"castle\"", 1);
        match Catalog::from_json_str(&text) {
            Err(Error::Validation { option, attr, .. }) => {
                assert_eq!(option, "o3");
                assert_eq!(attr, "type");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
        let csv = "id,rent:numeric:400:800,type:qualitative:room|studio|apartment\n\
                   o1,400,room\no2,500,castle\n";
        match Catalog::from_csv_str(csv) {
            Err(Error::Validation { option, attr, .. }) => {
                assert_eq!(option, "o2");
                assert_eq!(attr, "type");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_ids() {
        let csv = "id,x:numeric:0:1\na,0.5\na,0.2\n";
        assert!(matches!(Catalog::from_csv_str(csv), Err(Error::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let csv = "id,x:numeric:0:1\na,0.5\nb,zero\n";
        match Catalog::from_csv_str(csv) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, "line 3"),
            other => panic!("expected parse error, got {other:?}"),
        }
        match Catalog::from_json_str("{\"schema\": [\n}") {
            Err(Error::Parse { position, .. }) => assert!(position.starts_with("line 2")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn attribute_range_uses_declared_domain() {
        let catalog = Catalog::from_json_str(HOUSING_JSON).unwrap();
        assert_eq!(catalog.attribute_range("distance").unwrap(), 30.0);
        assert!(matches!(
            catalog.attribute_range("type"),
            Err(Error::KindMismatch { .. })
        ));
        let unit = Catalog::new(vec![AttributeSchema::numeric("u", 0.0, 1.0, false)], vec![]).unwrap();
        assert_eq!(unit.attribute_range("u").unwrap(), 1.0);
    }

    #[test]
    fn generation_is_deterministic_and_in_range() {
        let spec = CatalogSpec::integers(50, 9);
        let a = Catalog::generate(&spec, 1).unwrap();
        let b = Catalog::generate(&spec, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert_eq!(a.schema().len(), 9);
        let c = Catalog::generate(&spec, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mixed_generation() {
        let spec = CatalogSpec::parse_attrs(200, "5int,2qual,2ord").unwrap();
        assert_eq!(spec, CatalogSpec::mixed(200));
        let catalog = Catalog::generate(&spec, 7).unwrap();
        assert_eq!(catalog.len(), 200);
        let kinds: Vec<_> = catalog.schema().iter().map(|a| a.kind.label()).collect();
        assert_eq!(kinds.iter().filter(|k| **k == "qualitative").count(), 2);
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        let spec = CatalogSpec {
            n: 5,
            attributes: vec![AttributeSpec::Integer { lo: 3, hi: 3 }],
        };
        assert!(matches!(Catalog::generate(&spec, 0), Err(Error::Spec(_))));
        let spec = CatalogSpec {
            n: 5,
            attributes: vec![AttributeSpec::Qualitative { levels: 1 }],
        };
        assert!(matches!(Catalog::generate(&spec, 0), Err(Error::Spec(_))));
        assert!(matches!(
            Catalog::generate(&CatalogSpec::integers(0, 3), 0),
            Err(Error::Spec(_))
        ));
    }

    #[test]
    fn compact_spec() {
        let spec = CatalogSpec::parse_compact("rand-50x9int").unwrap();
        assert_eq!(spec, CatalogSpec::integers(50, 9));
        assert!(CatalogSpec::parse_compact("50x9int").is_err());
    }

    #[test]
    fn value_prior_must_be_proper() {
        let mut attr = AttributeSchema::qualitative("t", ["a", "b"]);
        attr.value_prior = Some(vec![0.5, 0.6]);
        assert!(attr.validate().is_err());
        attr.value_prior = Some(vec![0.25, 0.75]);
        attr.validate().unwrap();
        assert_eq!(attr.value_probability("b"), 0.75);
    }
}
