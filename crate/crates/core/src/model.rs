//! Shared value and relational data model.
//!
//! Both interpreters work over the types in this module: the SQL side over
//! [`Database`] / [`Relation`], the Event-B side over [`MachineState`] /
//! [`EbValue`]. Everything here is an immutable value; "updates" return a
//! new value and leave the input untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

/// Attribute of a set-typed table.
pub const REFKEY: &str = "refkey";
/// Key attribute of a relation-typed table.
pub const ID: &str = "id";
/// Value attribute of a relation-typed table.
pub const VALUE: &str = "value";
/// Attribute name given to the single column of a `count` query result.
pub const COUNT: &str = "count";

/// Suffix marking the temporary table that holds a pre-state value for an
/// assignment target (`s'` is spelled `s__prime`).
pub const PRIME_SUFFIX: &str = "__prime";

/// Name of the primed temporary table for `name`.
pub fn primed(name: &str) -> String {
    format!("{name}{PRIME_SUFFIX}")
}

pub fn is_primed(name: &str) -> bool {
    name.ends_with(PRIME_SUFFIX)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("table `{0}` is not bound in the database")]
    UnboundTable(String),
    #[error("schema mismatch: expected {expected:?}, found {found:?}")]
    SchemaMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("duplicate attribute `{0}` in schema")]
    DuplicateAttribute(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScalarKind {
    Int,
    Bool,
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarKind::Int => f.write_str("int"),
            ScalarKind::Bool => f.write_str("bool"),
        }
    }
}

/// An atomic database / Event-B value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scalar {
    Int(BigInt),
    Bool(bool),
}

impl Scalar {
    pub fn int(v: i64) -> Self {
        Scalar::Int(BigInt::from(v))
    }

    pub fn kind(&self) -> ScalarKind {
        match self {
            Scalar::Int(_) => ScalarKind::Int,
            Scalar::Bool(_) => ScalarKind::Bool,
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::int(v)
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// A tuple with named attributes. Equality ignores attribute order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Row(BTreeMap<String, Scalar>);

impl Row {
    pub fn new() -> Self {
        Row(BTreeMap::new())
    }

    pub fn with(mut self, attr: impl Into<String>, value: Scalar) -> Self {
        self.0.insert(attr.into(), value);
        self
    }

    pub fn get(&self, attr: &str) -> Option<&Scalar> {
        self.0.get(attr)
    }

    pub fn attrs(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn matches(&self, schema: &[String]) -> bool {
        self.0.len() == schema.len() && schema.iter().all(|a| self.0.contains_key(a))
    }
}

impl FromIterator<(String, Scalar)> for Row {
    fn from_iter<I: IntoIterator<Item = (String, Scalar)>>(iter: I) -> Self {
        Row(iter.into_iter().collect())
    }
}

/// A duplicate-free table. The schema order is the column order used when
/// emitting or inserting positionally; row equality ignores it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    schema: Vec<String>,
    rows: BTreeSet<Row>,
}

impl Relation {
    pub fn new(schema: Vec<String>) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for a in &schema {
            if !seen.insert(a.as_str()) {
                return Err(ModelError::DuplicateAttribute(a.clone()));
            }
        }
        Ok(Relation {
            schema,
            rows: BTreeSet::new(),
        })
    }

    pub fn from_rows(
        schema: Vec<String>,
        rows: impl IntoIterator<Item = Row>,
    ) -> Result<Self, ModelError> {
        let mut rel = Relation::new(schema)?;
        for row in rows {
            rel.insert(row)?;
        }
        Ok(rel)
    }

    /// Empty `[refkey]` table.
    pub fn empty_set() -> Self {
        Relation {
            schema: vec![REFKEY.to_string()],
            rows: BTreeSet::new(),
        }
    }

    /// Empty `[id, value]` table.
    pub fn empty_pairs() -> Self {
        Relation {
            schema: vec![ID.to_string(), VALUE.to_string()],
            rows: BTreeSet::new(),
        }
    }

    /// `[refkey]` table holding `elems`.
    pub fn set_table(elems: impl IntoIterator<Item = Scalar>) -> Self {
        let mut rel = Relation::empty_set();
        rel.rows
            .extend(elems.into_iter().map(|e| Row::new().with(REFKEY, e)));
        rel
    }

    /// `[id, value]` table holding `pairs`.
    pub fn pair_table(pairs: impl IntoIterator<Item = (Scalar, Scalar)>) -> Self {
        let mut rel = Relation::empty_pairs();
        rel.rows.extend(
            pairs
                .into_iter()
                .map(|(k, v)| Row::new().with(ID, k).with(VALUE, v)),
        );
        rel
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, row: &Row) -> bool {
        self.rows.contains(row)
    }

    /// Inserts `row`; returns whether it was new.
    pub fn insert(&mut self, row: Row) -> Result<bool, ModelError> {
        if !row.matches(&self.schema) {
            return Err(ModelError::SchemaMismatch {
                expected: self.schema.clone(),
                found: row.attrs().map(str::to_string).collect(),
            });
        }
        Ok(self.rows.insert(row))
    }

    /// Same schema, no rows.
    pub fn cleared(&self) -> Self {
        Relation {
            schema: self.schema.clone(),
            rows: BTreeSet::new(),
        }
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Row) -> bool) {
        self.rows.retain(|r| keep(r));
    }

    pub fn is_set_table(&self) -> bool {
        self.schema.len() == 1 && self.schema[0] == REFKEY
    }

    pub fn is_pair_table(&self) -> bool {
        self.schema.len() == 2 && self.schema[0] == ID && self.schema[1] == VALUE
    }
}

/// Reads a `[refkey]` table as a set of scalars.
pub fn relation_as_set(rel: &Relation) -> Result<BTreeSet<Scalar>, ModelError> {
    if !rel.is_set_table() {
        return Err(ModelError::SchemaMismatch {
            expected: vec![REFKEY.to_string()],
            found: rel.schema.clone(),
        });
    }
    Ok(rel
        .rows
        .iter()
        .map(|r| r.get(REFKEY).expect("row matches schema").clone())
        .collect())
}

/// Reads an `[id, value]` table as a set of pairs.
pub fn relation_as_pairs(rel: &Relation) -> Result<BTreeSet<(Scalar, Scalar)>, ModelError> {
    if !rel.is_pair_table() {
        return Err(ModelError::SchemaMismatch {
            expected: vec![ID.to_string(), VALUE.to_string()],
            found: rel.schema.clone(),
        });
    }
    Ok(rel
        .rows
        .iter()
        .map(|r| {
            (
                r.get(ID).expect("row matches schema").clone(),
                r.get(VALUE).expect("row matches schema").clone(),
            )
        })
        .collect())
}

/// A map from table names to relations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Database {
    tables: BTreeMap<String, Relation>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Result<&Relation, ModelError> {
        self.tables
            .get(name)
            .ok_or_else(|| ModelError::UnboundTable(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tables.contains_key(name)
    }

    /// `[name -> rel]db`.
    pub fn update(&self, name: impl Into<String>, rel: Relation) -> Database {
        let mut tables = self.tables.clone();
        tables.insert(name.into(), rel);
        Database { tables }
    }

    /// `[name -> undef]db`; removing an absent name is a no-op.
    pub fn remove(&self, name: &str) -> Database {
        let mut tables = self.tables.clone();
        tables.remove(name);
        Database { tables }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.tables.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Total number of rows over all tables.
    pub fn total_rows(&self) -> usize {
        self.tables.values().map(Relation::len).sum()
    }
}

impl FromIterator<(String, Relation)> for Database {
    fn from_iter<I: IntoIterator<Item = (String, Relation)>>(iter: I) -> Self {
        Database {
            tables: iter.into_iter().collect(),
        }
    }
}

/// An Event-B value.
///
/// There is a single empty collection: `Set(∅)` and `Rel(∅)` compare equal,
/// and [`EbValue::from_pairs`] always builds the former.
#[derive(Debug, Clone)]
pub enum EbValue {
    Int(BigInt),
    Bool(bool),
    Set(BTreeSet<Scalar>),
    Rel(BTreeSet<(Scalar, Scalar)>),
}

impl EbValue {
    pub fn int(v: i64) -> Self {
        EbValue::Int(BigInt::from(v))
    }

    pub fn empty() -> Self {
        EbValue::Set(BTreeSet::new())
    }

    pub fn set_of(elems: impl IntoIterator<Item = Scalar>) -> Self {
        EbValue::Set(elems.into_iter().collect())
    }

    pub fn from_pairs(pairs: BTreeSet<(Scalar, Scalar)>) -> Self {
        if pairs.is_empty() {
            EbValue::empty()
        } else {
            EbValue::Rel(pairs)
        }
    }

    pub fn rel_of(pairs: impl IntoIterator<Item = (Scalar, Scalar)>) -> Self {
        EbValue::from_pairs(pairs.into_iter().collect())
    }

    pub fn is_empty_collection(&self) -> bool {
        match self {
            EbValue::Set(s) => s.is_empty(),
            EbValue::Rel(r) => r.is_empty(),
            _ => false,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            EbValue::Int(_) => "integer",
            EbValue::Bool(_) => "boolean",
            EbValue::Set(_) => "set",
            EbValue::Rel(_) => "relation",
        }
    }
}

impl PartialEq for EbValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (EbValue::Int(a), EbValue::Int(b)) => a == b,
            (EbValue::Bool(a), EbValue::Bool(b)) => a == b,
            (EbValue::Set(a), EbValue::Set(b)) => a == b,
            (EbValue::Rel(a), EbValue::Rel(b)) => a == b,
            (EbValue::Set(a), EbValue::Rel(b)) | (EbValue::Rel(b), EbValue::Set(a)) => {
                a.is_empty() && b.is_empty()
            }
            _ => false,
        }
    }
}

impl Eq for EbValue {}

impl fmt::Display for EbValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EbValue::Int(i) => write!(f, "{i}"),
            EbValue::Bool(b) => write!(f, "{b}"),
            EbValue::Set(s) => {
                f.write_str("{")?;
                for (i, x) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("}")
            }
            EbValue::Rel(r) => {
                f.write_str("{")?;
                for (i, (x, y)) in r.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x} |-> {y}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Event-B machine state: variable name to value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MachineState {
    bindings: BTreeMap<String, EbValue>,
}

impl MachineState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&EbValue> {
        self.bindings.get(name)
    }

    /// `[name -> value]m`.
    pub fn bind(&self, name: impl Into<String>, value: EbValue) -> MachineState {
        let mut bindings = self.bindings.clone();
        bindings.insert(name.into(), value);
        MachineState { bindings }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &EbValue)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

impl FromIterator<(String, EbValue)> for MachineState {
    fn from_iter<I: IntoIterator<Item = (String, EbValue)>>(iter: I) -> Self {
        MachineState {
            bindings: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for MachineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} = {v}")?;
        }
        f.write_str("}")
    }
}
