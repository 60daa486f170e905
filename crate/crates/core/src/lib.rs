//! LiDAR multi-object tracking.
//!
//! The pipeline runs per frame: [`preprocess`] thins the cloud and strips
//! ground and off-road points, [`clustering`] groups the rest with DBSCAN over a
//! [`spatial_index::KdTree`], [`detection`] fits axis-aligned boxes and rejects
//! non-vehicle shapes, and [`tracking`] follows the boxes in the city frame with
//! a Kalman filter and Hungarian association. [`evaluation`] scores the output
//! with CLEAR-MOT and [`synth`] generates scenes with exact ground truth.

pub mod clustering;
pub mod dataset_io;
pub mod detection;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod pipeline;
pub mod preprocess;
pub mod spatial_index;
pub mod synth;
pub mod tracking;

pub use error::{Error, Result};
pub use geometry::{CameraModel, Pixel, RigidTransform, Vec3};
