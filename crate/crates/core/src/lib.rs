//! Exact computations of stable translation lengths: injective hulls of finite
//! metric spaces, word metrics, quasimorphisms, central extensions, quasilines
//! and small hierarchical structures on abelian and Heisenberg groups.

pub mod error;
pub mod expr;
pub mod rational;

pub mod metric;
pub mod tight_span;

pub mod group;
pub mod translation;

pub mod extension;
pub mod quasimorphism;

pub mod hhg;
pub mod quasiline;
pub mod registry;

pub use error::{Error, Result};
pub use rational::{Interval, Q};
