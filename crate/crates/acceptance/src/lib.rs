//! Holds the `acceptance` test target, which runs after the library's own
//! tests. Run it alone with `cargo test -p polyattn-acceptance`.
