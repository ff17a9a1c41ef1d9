//! Reading database values and states as Event-B values and states.

use thiserror::Error;

use crate::model::{
    is_primed, relation_as_pairs, relation_as_set, Database, EbValue, MachineState, Relation,
    Scalar,
};
use crate::sql::SqlValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepError {
    #[error("cannot read a table with schema {0:?} as a set or relation")]
    SchemaMismatch(Vec<String>),
    #[error("temporary table `{0}` is still present")]
    PrimedNamePresent(String),
}

fn scalar_value(x: &Scalar) -> EbValue {
    match x {
        Scalar::Int(i) => EbValue::Int(i.clone()),
        Scalar::Bool(b) => EbValue::Bool(*b),
    }
}

/// `[refkey]` tables read as sets, `[id, value]` tables as relations, and
/// any other one-row, one-column table as its single value.
pub fn rep_relation(rel: &Relation) -> Result<EbValue, RepError> {
    if let Ok(set) = relation_as_set(rel) {
        return Ok(EbValue::Set(set));
    }
    if let Ok(pairs) = relation_as_pairs(rel) {
        return Ok(EbValue::from_pairs(pairs));
    }
    if rel.schema().len() == 1 && rel.len() == 1 {
        let attr = &rel.schema()[0];
        let row = rel.rows().next().expect("one row");
        return Ok(scalar_value(row.get(attr).expect("row matches schema")));
    }
    Err(RepError::SchemaMismatch(rel.schema().to_vec()))
}

pub fn rep_value(v: &SqlValue) -> Result<EbValue, RepError> {
    match v {
        SqlValue::Relation(rel) => rep_relation(rel),
        SqlValue::Scalar(x) => Ok(scalar_value(x)),
    }
}

/// Pointwise reading of every table. Temporary primed tables are refused.
pub fn rep_db(db: &Database) -> Result<MachineState, RepError> {
    db.iter()
        .map(|(name, rel)| {
            if is_primed(name) {
                return Err(RepError::PrimedNamePresent(name.to_string()));
            }
            Ok((name.to_string(), rep_relation(rel)?))
        })
        .collect()
}
