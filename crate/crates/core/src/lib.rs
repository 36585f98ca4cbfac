//! Simulator for collaborative intrusion detection with gradient-boosted
//! tree encoders.
//!
//! Clients train local GBDT encoders on masked, label-noised traffic data.
//! The server picks a budgeted, class-balanced set of clients and a small
//! covering set of encoders, collects Laplace-noised encodings and trains a
//! GBDT classifier on them. Deployment chains the encoders and the server
//! classifier.

pub mod federation;
pub mod gbdt;
pub mod metrics;
pub mod privacy;
pub mod seed;
pub mod selection;
pub mod synthetic;
pub mod tabular;
