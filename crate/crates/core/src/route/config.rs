//! Serializable route description. Key names are the on-disk schema.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RouteConfig {
    #[serde(default)]
    pub stations: Vec<StationConfig>,
    #[serde(default)]
    pub blocks: Vec<BlockConfig>,
    #[serde(default)]
    pub junctions: Vec<JunctionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationConfig {
    pub id: String,
    pub name: String,
    pub platforms: Vec<PlatformConfig>,
    #[serde(default)]
    pub can_turn_back: bool,
    #[serde(default)]
    pub has_depot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformConfig {
    pub id: String,
    pub block: String,
    /// Waiting-area capacity in persons.
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub id: String,
    pub length_m: f64,
    pub vmax_mps: f64,
    /// The first listed successor is the through (straight) continuation.
    #[serde(default)]
    pub succ_up: Vec<String>,
    #[serde(default)]
    pub succ_down: Vec<String>,
    #[serde(default)]
    pub platform: bool,
    /// Stabling road: a train that comes to rest at its end leaves service.
    #[serde(default, skip_serializing_if = "is_false")]
    pub depot: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionConfig {
    pub id: String,
    pub routes: Vec<JunctionRouteConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionRouteConfig {
    pub id: String,
    pub blocks: Vec<String>,
    pub entry_signal: String,
    #[serde(default)]
    pub conflicts: Vec<String>,
}
