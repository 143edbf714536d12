//! Holds the acceptance run, `tests/acceptance.rs`. It is its own package so
//! that `cargo test --workspace` runs it after every other test.
