//! Acceptance checks live in `crates/core/tests/acceptance.rs`.
