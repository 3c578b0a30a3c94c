//! Entity typing by joint entity/type embeddings.
//!
//! Entities live in a κ-dimensional space trained with TransE on the fact
//! triples. Types live in an ℓ-dimensional space; a learned ℓ×κ matrix projects
//! entities onto their types, and type-level triples (obtained by replacing both
//! entities of a fact with their types) are embedded with their own translation
//! vectors. A candidate type is scored by blending the projection distance with
//! the translation energies of the entity's typed neighborhood.
//!
//! ```no_run
//! use connecte::{config::TrainConfig, data::Dataset, eval, model::ScoreMode, train};
//!
//! let ds = Dataset::load("prepared".as_ref(), None)?;
//! let cfg = TrainConfig { kappa: 32, ell: 16, epochs: 100, ..TrainConfig::default() };
//! let out = train::train(&ds.kb, &cfg)?;
//! let r = eval::evaluate_typing(&out.params, &ds.kb, &ds.test, cfg.lambda, ScoreMode::Composite, true)?;
//! println!("MRR {:.3}", r.report.mrr);
//! # Ok::<(), connecte::Error>(())
//! ```

pub mod config;
pub mod data;
mod error;
pub mod eval;
pub mod manifest;
pub mod model;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
