//! Built-in trace layouts and the ground-truth pipeline.

use crate::error::Result;
use crate::grid::{CurrentField, GridSpec, ScalarMap};
use crate::sim::{
    current_from_voltage, rasterize_geometry, solve_poisson, BoundarySpec, Edge, EdgeSegment,
    TraceGeometry, VoltageMap,
};

/// Copper conductivity in S/m.
pub const SIGMA_COPPER: f64 = 5.98e7;
/// Conductivity assigned outside traces.
pub const SIGMA_BACKGROUND: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub grid: GridSpec,
    pub geometry: TraceGeometry,
    pub boundary: BoundarySpec,
    /// Nominal trace width used by the spectral signal model.
    pub trace_width: f64,
    /// Nominal in-trace current density used by the spectral signal model.
    pub j0: f64,
}

#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub conductivity: ScalarMap,
    pub voltage: VoltageMap,
    pub current: CurrentField,
}

impl Scenario {
    pub fn simulate(&self) -> Result<GroundTruth> {
        let conductivity = rasterize_geometry(&self.geometry, &self.grid)?;
        let d = self.geometry.d;
        let voltage = solve_poisson(&conductivity, d, &self.boundary)?;
        let current = current_from_voltage(&voltage, &conductivity, d, &self.boundary)?;
        Ok(GroundTruth { conductivity, voltage, current })
    }
}

const UM: f64 = 1e-6;

fn edge(edge: Edge, from_um: f64, to_um: f64) -> EdgeSegment {
    EdgeSegment { edge, from: from_um * UM, to: to_um * UM }
}

fn scaled(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points.iter().map(|(x, y)| (x * UM, y * UM)).collect()
}

/// Two 10 µm copper traces 20 µm apart in a 256 µm square. The upper trace is
/// straight; the lower one dips around a rectangular detour. 160 µA flows
/// rightward in the upper trace and leftward in the lower one.
pub fn two_trace(n: usize) -> Result<Scenario> {
    let side = 256.0;
    let grid = GridSpec::new(n, side * UM / n as f64)?;
    let width = 10.0 * UM;
    let current = 160e-6;
    let mut geometry = TraceGeometry::new(SIGMA_COPPER, SIGMA_BACKGROUND, 1.0 * UM)?;
    geometry.add_polyline(&scaled(&[(0.0, 155.0), (side, 155.0)]), width)?;
    geometry.add_polyline(
        &scaled(&[
            (0.0, 125.0),
            (97.0, 125.0),
            (97.0, 65.0),
            (161.0, 65.0),
            (161.0, 125.0),
            (side, 125.0),
        ]),
        width,
    )?;
    let boundary = BoundarySpec {
        dirichlet: vec![(edge(Edge::Left, 0.0, side), 0.0)],
        neumann: vec![
            (edge(Edge::Right, 150.0, 160.0), -current),
            (edge(Edge::Right, 120.0, 130.0), current),
        ],
    };
    let d = geometry.d;
    Ok(Scenario {
        name: "two-trace".into(),
        grid,
        geometry,
        boundary,
        trace_width: width,
        j0: current / (width * d),
    })
}

/// Location of the inner corner of [`l_bend`] in meters.
pub const L_BEND_INNER_CORNER: (f64, f64) = (146.0 * UM, 146.0 * UM);

/// A single 20 µm trace entering at the left edge, turning through a right
/// angle and leaving through the bottom edge.
pub fn l_bend(n: usize) -> Result<Scenario> {
    let side = 256.0;
    let grid = GridSpec::new(n, side * UM / n as f64)?;
    let width = 20.0 * UM;
    let current = 320e-6;
    let mut geometry = TraceGeometry::new(SIGMA_COPPER, SIGMA_BACKGROUND, 1.0 * UM)?;
    geometry.add_polyline(&scaled(&[(0.0, 156.0), (156.0, 156.0), (156.0, 0.0)]), width)?;
    let boundary = BoundarySpec {
        dirichlet: vec![(edge(Edge::Left, 146.0, 166.0), 0.0)],
        neumann: vec![(edge(Edge::Bottom, 146.0, 166.0), -current)],
    };
    let d = geometry.d;
    Ok(Scenario {
        name: "l-bend".into(),
        grid,
        geometry,
        boundary,
        trace_width: width,
        j0: current / (width * d),
    })
}
