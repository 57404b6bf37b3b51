//! Acceptance checks live in `tests/acceptance`; run them with
//! `cargo test -p goalcoach-acceptance --test acceptance`.
