//! The book's chapters, compiled so that every Rust listing runs under
//! `cargo test --doc`. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/critical.md")]
pub mod critical {}
#[doc = include_str!("../../../book/src/known-variance.md")]
pub mod known_variance {}
#[doc = include_str!("../../../book/src/tost.md")]
pub mod tost {}
#[doc = include_str!("../../../book/src/plugin.md")]
pub mod plugin {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
