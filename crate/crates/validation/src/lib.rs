//! Holds the `acceptance` test target, which checks the numbered acceptance
//! criteria of `dicke3-core` and prints one PASS/FAIL line for each.
//!
//! Run it alone with `cargo test -p dicke3-validation --test acceptance`.
