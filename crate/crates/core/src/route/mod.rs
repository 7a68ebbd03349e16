//! Static route description: parsing target, validation, geometry and the
//! canonical control-point list.

mod config;
mod model;
mod validate;

pub use config::{BlockConfig, JunctionConfig, JunctionRouteConfig, PlatformConfig, RouteConfig, StationConfig};
pub use model::{
    Block, ControlPoint, Junction, LineGeometry, Platform, PointKind, PointLocation, Route, RouteError, RouteKind,
    RouteModel, Station,
};
pub use validate::{validate_route, Violation};

use alloc::vec::Vec;

/// All departure and junction-route signals in canonical order: station
/// position along the line, then direction (up before down), then kind
/// (departure before junction), then id.
pub fn enumerate_control_points(model: &RouteModel) -> Vec<ControlPoint> {
    model.points.clone()
}

#[cfg(test)]
mod tests;
