//! Library surface of the CLI crate: the report schema and comparison
//! logic, shared between the binary and integration tests.

pub mod report;
