//! Loaded route, timetable and OD inputs, the environment context built from
//! them, and input fingerprints.

use std::path::Path;
use std::sync::Arc;

use railsched_core::agents::Timetable;
use railsched_core::env::{EnvContext, EnvError};
use railsched_core::fixture::{self, placements_from_timetable};
use railsched_core::harness::Scenario;
use railsched_core::passenger::OdMatrix;
use railsched_core::route::RouteModel;
use railsched_core::sim::SimParams;
use sha2::{Digest, Sha256};

use crate::formats::{self, FormatError, RollingStock, RouteFile};

/// Hex SHA-256 over length-prefixed parts, so part boundaries matter.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct Inputs {
    pub route: RouteFile,
    pub model: Arc<RouteModel>,
    pub timetable: Timetable,
    pub od: OdMatrix,
    /// Digest of the canonical route, timetable and OD serializations.
    pub fingerprint: String,
}

impl Inputs {
    pub fn new(route: RouteFile, timetable: Timetable, od: OdMatrix) -> Result<Inputs, FormatError> {
        let model = Arc::new(route.model()?);
        timetable.validate(&model)?;
        if od.n_stations() != model.stations.len() {
            return Err(FormatError::Invalid(format!(
                "OD matrix covers {} stations, the route has {}",
                od.n_stations(),
                model.stations.len()
            )));
        }
        let fingerprint = digest(&[
            route.to_toml()?.as_bytes(),
            formats::timetable_to_csv(&timetable, &model)?.as_bytes(),
            formats::od_to_csv(&od, &model)?.as_bytes(),
        ]);
        Ok(Inputs { route, model, timetable, od, fingerprint })
    }

    pub fn load(route: &Path, timetable: &Path, od: &Path) -> Result<Inputs, FormatError> {
        let route = RouteFile::parse(&formats::read_text(route)?)?;
        let model = route.model()?;
        let tt = formats::parse_timetable(&formats::read_text(timetable)?, &model)?;
        let od = formats::parse_od(&formats::read_text(od)?, &model)?;
        Inputs::new(route, tt, od)
    }

    /// The built-in desk-scale line.
    pub fn desk() -> Inputs {
        let f = fixture::desk_fixture();
        let route = RouteFile {
            rolling_stock: RollingStock { length_m: fixture::TRAIN_LENGTH_M, capacity: fixture::TRAIN_CAPACITY },
            dynamics: SimParams::default(),
            line: f.model.to_config(),
        };
        Inputs::new(route, f.timetable, f.od).expect("the desk fixture is valid")
    }

    pub fn context(&self) -> Result<Arc<EnvContext>, EnvError> {
        let rs = self.route.rolling_stock;
        let placements = placements_from_timetable(&self.model, &self.timetable, rs.length_m, rs.capacity);
        Ok(Arc::new(EnvContext::new(
            Arc::clone(&self.model),
            self.timetable.clone(),
            self.od.clone(),
            placements,
            self.route.dynamics,
        )?))
    }

    /// Digest of these inputs plus a scenario.
    pub fn scenario_fingerprint(&self, scenario: &Scenario) -> String {
        let sc = serde_json::to_string(scenario).expect("scenarios serialize");
        digest(&[self.fingerprint.as_bytes(), sc.as_bytes()])
    }
}
