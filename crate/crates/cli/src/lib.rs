//! The `forge` command line and the review API it serves.

pub mod api;
pub mod checker;
pub mod cli;
pub mod commands;
pub mod error;
pub mod stats;
