//! Acceptance suite for the qsr workspace; see `tests/acceptance.rs`.
