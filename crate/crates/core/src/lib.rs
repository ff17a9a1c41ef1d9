pub mod eb;
pub mod eb_eval;
pub mod harness;
pub mod model;
pub mod rep;
pub mod sql;
pub mod state;
pub mod translate;
