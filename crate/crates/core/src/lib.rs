//! V2X messaging toolkit for the ETSI ITS message types CAM, DENM, SPATEM
//! and MAPEM.
//!
//! The crate is layered bottom-up:
//!
//! - [`bitcodec`]: unaligned PER bit primitives
//! - [`its_types`] and [`its_codec`]: the message model and its wire format
//! - [`gateway`]: UDP payloads in, decoded [`gateway::RxEvent`]s out
//! - [`recorder`]: the trigger-based collection state machine
//! - [`dataset_io`]: the JSON scenario format, trimming and joining
//! - [`analyzer`]: dataset statistics, DENM tables, dimension histograms, trajectories
//! - [`trafficgen`]: a deterministic ITS-station simulator with ground truth

pub mod analyzer;
pub mod bitcodec;
pub mod dataset_io;
pub mod gateway;
pub mod geo;
pub mod its_codec;
pub mod its_types;
pub mod recorder;
pub mod trafficgen;

pub use bitcodec::{BitBuffer, CodecError};
pub use its_codec::{decode_message, encode_message, peek_header};
pub use its_types::{Cam, Denm, ItsMessage, ItsPduHeader, Mapem, MessageType, Spatem};
