//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod ply;
pub mod quartic;
pub mod scenarios;
pub mod voxel;
