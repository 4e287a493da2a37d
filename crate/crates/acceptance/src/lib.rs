//! Holds the `acceptance` test target; see `tests/acceptance.rs`. It lives in its own
//! package so that `cargo test --workspace` runs it after every test of the library.
