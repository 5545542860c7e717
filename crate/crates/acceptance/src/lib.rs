//! Acceptance gate for the simulator; the criteria live in `tests/acceptance.rs`.
//!
//! Kept as its own package so the gate runs after every other suite in a
//! workspace test run, and a red criterion does not hide their results.
