//! Simulator for distributed DTX time-slot alignment between interfering
//! OFDMA base stations.
//!
//! The crate is organised along the simulation pipeline:
//!
//! - [`geometry`]: hexagonal layout and uniform mobile drops
//! - [`channel`]: pathloss, shadowing, fading and per-RB SINR
//! - [`strategies`]: sequential, random, p-persistent and memory slot priorities
//! - [`scheduler`]: sequential Shannon-rate RB allocation
//! - [`power`]: base-station power consumption of a frame
//! - [`engine`]: synchronous frame loop and Monte-Carlo aggregation
//! - [`config`] and [`output`]: configuration files and result tables

pub mod channel;
pub mod config;
pub mod engine;
pub mod geometry;
pub mod output;
pub mod power;
pub mod scheduler;
pub mod strategies;
