//! Acceptance checks for the `varmdp` workspace live in `tests/acceptance.rs`.
//! They sit in their own package so that they run after every other test
//! target in the workspace.
