//! Guideline rules as machine-checkable IF/THEN statements, synthetic use
//! cases, a forward-chaining oracle, a chat protocol that loads the rules into
//! a language model and forces it to cite them, and scoring of its answers.
//!
//! Nothing here is a diagnostic instrument.

pub mod casegen;
pub mod evalkit;
pub mod llmlink;
pub mod oracle;
pub mod rules;
