//! Desk-scale analysis of topological graph algebras.
//!
//! The crate decides finiteness and AF-embeddability questions for the
//! C*-algebra of a finite metric graph model by combining three layers of
//! machinery:
//!
//! - weighted shifts on directed trees and their Fredholm data ([`shifts`]),
//! - orbit-tree representations of graph correspondences ([`orbit`],
//!   backed by the module arithmetic in [`correspondence`]),
//! - pseudoperiodicity of finite dynamical systems and their truncated
//!   inverse limits ([`dynamics`]), driving the verdicts in [`finiteness`].
//!
//! Graph models are finite: vertex sets carry an explicit metric and all
//! operations are deterministic in the input order.
//!
//! ```
//! use tgalg::{finiteness, graph};
//!
//! let g = graph::load_graph_str(r#"
//!     [[vertices]]
//!     id = "v"
//!     [[edges]]
//!     id = "e"
//!     src = "v"
//!     rng = "v"
//! "#)?;
//! let verdict = finiteness::decide(&g, &[0.1], true)?;
//! assert_eq!(verdict.verdict, finiteness::Verdict::ConsistentWithFinite);
//! # Ok::<(), tgalg::Error>(())
//! ```

pub mod cli;
pub mod correspondence;
pub mod dynamics;
pub mod error;
pub mod finiteness;
pub mod graph;
pub mod orbit;
pub mod shifts;

pub use error::{Error, Result};
