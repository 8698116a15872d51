//! Steady-state current flow in a thin conducting sheet.
//!
//! Cell-centered finite volumes on the grid: `-∇·(σ ∇V) = 0` with harmonic-mean
//! face conductances, Dirichlet potentials and prescribed currents on edge
//! segments, and zero flux elsewhere.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{CurrentField, GridSpec, ScalarMap};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]` in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceGeometry {
    pub segments: Vec<Rect>,
    pub sigma_trace: f64,
    pub sigma_background: f64,
    /// Sheet thickness in meters.
    pub d: f64,
}

impl TraceGeometry {
    pub fn new(sigma_trace: f64, sigma_background: f64, d: f64) -> Result<Self> {
        if !(sigma_background > 0.0 && sigma_trace > sigma_background && d > 0.0) {
            return Err(Error::Geometry(format!(
                "need sigma_trace > sigma_background > 0 and d > 0 (got {sigma_trace}, {sigma_background}, {d})"
            )));
        }
        Ok(TraceGeometry { segments: Vec::new(), sigma_trace, sigma_background, d })
    }

    /// Add a trace of `width` along an axis-aligned polyline. Segments are
    /// extended by half a width at interior vertices so bends are filled.
    pub fn add_polyline(&mut self, points: &[(f64, f64)], width: f64) -> Result<()> {
        if !(width > 0.0) {
            return Err(Error::Geometry(format!("trace width {width} must be positive")));
        }
        if points.len() < 2 {
            return Err(Error::Geometry("polyline needs at least two points".into()));
        }
        let h = 0.5 * width;
        let last = points.len() - 2;
        for (i, pair) in points.windows(2).enumerate() {
            let ((xa, ya), (xb, yb)) = (pair[0], pair[1]);
            let ext_a = if i > 0 { h } else { 0.0 };
            let ext_b = if i < last { h } else { 0.0 };
            let rect = if ya == yb {
                let (lo, hi, elo, ehi) =
                    if xa <= xb { (xa, xb, ext_a, ext_b) } else { (xb, xa, ext_b, ext_a) };
                Rect { x0: lo - elo, x1: hi + ehi, y0: ya - h, y1: ya + h }
            } else if xa == xb {
                let (lo, hi, elo, ehi) =
                    if ya <= yb { (ya, yb, ext_a, ext_b) } else { (yb, ya, ext_b, ext_a) };
                Rect { x0: xa - h, x1: xa + h, y0: lo - elo, y1: hi + ehi }
            } else {
                return Err(Error::Geometry("polyline segments must be axis-aligned".into()));
            };
            self.segments.push(rect);
        }
        Ok(())
    }
}

/// Cell-center conductivity map; a cell is conducting when its center lies
/// inside any segment.
pub fn rasterize_geometry(geo: &TraceGeometry, grid: &GridSpec) -> Result<ScalarMap> {
    let ext = grid.extent();
    let tol = 1e-9 * ext;
    for r in &geo.segments {
        if r.x0 < -tol || r.y0 < -tol || r.x1 > ext + tol || r.y1 > ext + tol {
            return Err(Error::Geometry(format!("segment {r:?} exceeds the {ext:e} m domain")));
        }
    }
    let dx = grid.dx();
    let n = grid.n();
    let values = Array2::from_shape_fn((n, n), |(row, col)| {
        let (x, y) = ((col as f64 + 0.5) * dx, (row as f64 + 0.5) * dx);
        if geo.segments.iter().any(|s| s.contains(x, y)) {
            geo.sigma_trace
        } else {
            geo.sigma_background
        }
    });
    Ok(ScalarMap { grid: *grid, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    /// `x = 0`
    Left,
    /// `x = extent`
    Right,
    /// `y = 0`
    Bottom,
    /// `y = extent`
    Top,
}

/// Part of a domain edge, given by the coordinate range along the edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeSegment {
    pub edge: Edge,
    pub from: f64,
    pub to: f64,
}

impl EdgeSegment {
    /// Grid cells adjacent to this segment, as `(row, col)`.
    fn cells(&self, grid: &GridSpec) -> Vec<(usize, usize)> {
        let n = grid.n();
        let dx = grid.dx();
        let (lo, hi) = (self.from.min(self.to), self.from.max(self.to));
        (0..n)
            .filter(|&i| {
                let c = (i as f64 + 0.5) * dx;
                c >= lo && c <= hi
            })
            .map(|i| match self.edge {
                Edge::Left => (i, 0),
                Edge::Right => (i, n - 1),
                Edge::Bottom => (0, i),
                Edge::Top => (n - 1, i),
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundarySpec {
    /// Fixed potentials in volts.
    pub dirichlet: Vec<(EdgeSegment, f64)>,
    /// Total current in amperes entering the domain through each segment.
    pub neumann: Vec<(EdgeSegment, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoltageMap {
    pub grid: GridSpec,
    pub v: Array2<f64>,
}

/// Boundary data resolved onto cells.
struct CellBoundary {
    /// Dirichlet cells with their edge and potential.
    dirichlet: Vec<((usize, usize), Edge, f64)>,
    /// Injected current per cell, with the edge it enters through.
    injected: Vec<((usize, usize), Edge, f64)>,
}

fn resolve(bc: &BoundarySpec, grid: &GridSpec) -> Result<CellBoundary> {
    let mut dirichlet = Vec::new();
    for (seg, v) in &bc.dirichlet {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("Dirichlet value {v} is not finite")));
        }
        dirichlet.extend(seg.cells(grid).into_iter().map(|c| (c, seg.edge, *v)));
    }
    if dirichlet.is_empty() {
        return Err(Error::LinearSystem("no Dirichlet cells: the system is singular".into()));
    }
    let mut injected = Vec::new();
    for (seg, i) in &bc.neumann {
        if !i.is_finite() {
            return Err(Error::InvalidParameter(format!("Neumann current {i} is not finite")));
        }
        let cells = seg.cells(grid);
        if cells.is_empty() {
            return Err(Error::Geometry(format!("Neumann segment {seg:?} covers no cells")));
        }
        let per = i / cells.len() as f64;
        injected.extend(cells.into_iter().map(|c| (c, seg.edge, per)));
    }
    Ok(CellBoundary { dirichlet, injected })
}

/// Face conductances: `east[r, c]` couples `(r, c)`-`(r, c+1)`, `north[r, c]`
/// couples `(r, c)`-`(r+1, c)`.
struct Conductances {
    east: Array2<f64>,
    north: Array2<f64>,
}

fn conductances(cond: &Array2<f64>, d: f64) -> Conductances {
    let n = cond.nrows();
    let hm = |a: f64, b: f64| 2.0 * a * b / (a + b) * d;
    let east = Array2::from_shape_fn((n, n), |(r, c)| {
        if c + 1 < n {
            hm(cond[(r, c)], cond[(r, c + 1)])
        } else {
            0.0
        }
    });
    let north = Array2::from_shape_fn((n, n), |(r, c)| {
        if r + 1 < n {
            hm(cond[(r, c)], cond[(r + 1, c)])
        } else {
            0.0
        }
    });
    Conductances { east, north }
}

fn apply(k: &Conductances, diag_extra: &Array2<f64>, v: &Array2<f64>, out: &mut Array2<f64>) {
    let n = v.nrows();
    for r in 0..n {
        for c in 0..n {
            let vi = v[(r, c)];
            let mut acc = diag_extra[(r, c)] * vi;
            if c + 1 < n {
                acc += k.east[(r, c)] * (vi - v[(r, c + 1)]);
            }
            if c > 0 {
                acc += k.east[(r, c - 1)] * (vi - v[(r, c - 1)]);
            }
            if r + 1 < n {
                acc += k.north[(r, c)] * (vi - v[(r + 1, c)]);
            }
            if r > 0 {
                acc += k.north[(r - 1, c)] * (vi - v[(r - 1, c)]);
            }
            out[(r, c)] = acc;
        }
    }
}

/// Target relative residual of the linear solve.
pub const POISSON_TOL: f64 = 1e-10;

/// Solve for the potential of a sheet of thickness `d`.
pub fn solve_poisson(cond: &ScalarMap, d: f64, bc: &BoundarySpec) -> Result<VoltageMap> {
    let grid = cond.grid;
    let n = grid.n();
    if cond.values.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidParameter("conductivity must be strictly positive".into()));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidParameter(format!("thickness {d} must be positive")));
    }
    let cb = resolve(bc, &grid)?;
    let k = conductances(&cond.values, d);
    let mut extra = Array2::<f64>::zeros((n, n));
    let mut rhs = Array2::<f64>::zeros((n, n));
    for &((r, c), _, v) in &cb.dirichlet {
        let g = 2.0 * cond.values[(r, c)] * d;
        extra[(r, c)] += g;
        rhs[(r, c)] += g * v;
    }
    for &((r, c), _, i) in &cb.injected {
        rhs[(r, c)] += i;
    }

    let mut diag = extra.clone();
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                diag[(r, c)] += k.east[(r, c)];
                diag[(r, c + 1)] += k.east[(r, c)];
            }
            if r + 1 < n {
                diag[(r, c)] += k.north[(r, c)];
                diag[(r + 1, c)] += k.north[(r, c)];
            }
        }
    }

    // Jacobi-preconditioned conjugate gradients.
    let b_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = Array2::<f64>::zeros((n, n));
    if b_norm == 0.0 {
        return Ok(VoltageMap { grid, v: x });
    }
    let mut r = rhs.clone();
    let mut z = &r / &diag;
    let mut p = z.clone();
    let mut ap = Array2::<f64>::zeros((n, n));
    let mut rz: f64 = r.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
    let max_iter = 200 * n;
    for it in 0..max_iter {
        apply(&k, &extra, &p, &mut ap);
        let pap: f64 = p.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &ap);
        // Recompute the true residual occasionally to avoid drift.
        if it % 500 == 499 {
            apply(&k, &extra, &x, &mut ap);
            r = &rhs - &ap;
        }
        let res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if res <= POISSON_TOL * b_norm {
            apply(&k, &extra, &x, &mut ap);
            let true_res = (&rhs - &ap).iter().map(|v| v * v).sum::<f64>().sqrt();
            if true_res <= POISSON_TOL * b_norm {
                log::debug!("poisson: converged in {} iterations", it + 1);
                return Ok(VoltageMap { grid, v: x });
            }
            r = &rhs - &ap;
        }
        z = &r / &diag;
        let rz_new: f64 = r.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + &(&p * beta);
    }
    Err(Error::LinearSystem(format!("PCG did not reach {POISSON_TOL:e} in {max_iter} iterations")))
}

/// Face currents in amperes: `fx[r, c]` crosses the left face of cell `(r, c)`
/// in the +x direction (`c = n` is the right edge), `fy` likewise in y.
pub struct FaceFluxes {
    pub fx: Array2<f64>,
    pub fy: Array2<f64>,
}

/// Face currents of a potential solution, including prescribed boundary fluxes.
pub fn face_fluxes(
    v: &VoltageMap,
    cond: &ScalarMap,
    d: f64,
    bc: &BoundarySpec,
) -> Result<FaceFluxes> {
    let grid = v.grid;
    if cond.grid != grid {
        return Err(Error::GridMismatch("voltage and conductivity grids differ".into()));
    }
    let n = grid.n();
    let cb = resolve(bc, &grid)?;
    let k = conductances(&cond.values, d);
    let mut fx = Array2::<f64>::zeros((n, n + 1));
    let mut fy = Array2::<f64>::zeros((n + 1, n));
    for r in 0..n {
        for c in 0..n - 1 {
            fx[(r, c + 1)] = k.east[(r, c)] * (v.v[(r, c)] - v.v[(r, c + 1)]);
        }
    }
    for r in 0..n - 1 {
        for c in 0..n {
            fy[(r + 1, c)] = k.north[(r, c)] * (v.v[(r, c)] - v.v[(r + 1, c)]);
        }
    }
    // Outward current through a boundary face, mapped onto the +x/+y convention.
    let mut put = |(r, c): (usize, usize), edge: Edge, outward: f64| match edge {
        Edge::Left => fx[(r, 0)] -= outward,
        Edge::Right => fx[(r, n)] += outward,
        Edge::Bottom => fy[(0, c)] -= outward,
        Edge::Top => fy[(n, c)] += outward,
    };
    for &(cell, edge, vd) in &cb.dirichlet {
        let g = 2.0 * cond.values[cell] * d;
        put(cell, edge, g * (v.v[cell] - vd));
    }
    for &(cell, edge, i) in &cb.injected {
        put(cell, edge, -i);
    }
    Ok(FaceFluxes { fx, fy })
}

/// `J = -σ ∇V` at cell centers, averaging the two face current densities per axis.
pub fn current_from_voltage(
    v: &VoltageMap,
    cond: &ScalarMap,
    d: f64,
    bc: &BoundarySpec,
) -> Result<CurrentField> {
    let f = face_fluxes(v, cond, d, bc)?;
    let grid = v.grid;
    let n = grid.n();
    let area = grid.dx() * d;
    let jx = Array2::from_shape_fn((n, n), |(r, c)| 0.5 * (f.fx[(r, c)] + f.fx[(r, c + 1)]) / area);
    let jy = Array2::from_shape_fn((n, n), |(r, c)| 0.5 * (f.fy[(r, c)] + f.fy[(r + 1, c)]) / area);
    Ok(CurrentField { grid, jx, jy })
}

/// Axis-aligned probe line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Section {
    /// Column of cells containing `x`, rows with centers in `[y0, y1]`; counts `+x` current.
    Vertical { x: f64, y0: f64, y1: f64 },
    /// Row of cells containing `y`, columns with centers in `[x0, x1]`; counts `+y` current.
    Horizontal { y: f64, x0: f64, x1: f64 },
}

/// `Δx · d · Σ` of the normal current density along the section.
pub fn cross_section_current(j: &CurrentField, line: &Section, d: f64) -> Result<f64> {
    let grid = j.grid;
    let n = grid.n();
    let dx = grid.dx();
    let index = |p: f64| -> Result<usize> {
        let i = (p / dx).floor();
        if i < 0.0 || i >= n as f64 {
            return Err(Error::Geometry(format!("section at {p:e} m is outside the grid")));
        }
        Ok(i as usize)
    };
    let in_range = |i: usize, lo: f64, hi: f64| {
        let c = (i as f64 + 0.5) * dx;
        c >= lo.min(hi) && c <= lo.max(hi)
    };
    let sum = match *line {
        Section::Vertical { x, y0, y1 } => {
            let col = index(x)?;
            (0..n).filter(|&r| in_range(r, y0, y1)).map(|r| j.jx[(r, col)]).sum::<f64>()
        }
        Section::Horizontal { y, x0, x1 } => {
            let row = index(y)?;
            (0..n).filter(|&c| in_range(c, x0, x1)).map(|c| j.jy[(row, c)]).sum::<f64>()
        }
    };
    Ok(sum * dx * d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_strip(n: usize) -> (GridSpec, ScalarMap, BoundarySpec, f64) {
        let g = GridSpec::new(n, 1e-6).unwrap();
        let sigma = 2.0;
        let cond = ScalarMap { grid: g, values: Array2::from_elem((n, n), sigma) };
        let h = g.extent();
        let bc = BoundarySpec {
            dirichlet: vec![(EdgeSegment { edge: Edge::Left, from: 0.0, to: h }, 0.0)],
            neumann: vec![(EdgeSegment { edge: Edge::Right, from: 0.0, to: h }, -1e-6)],
        };
        (g, cond, bc, sigma)
    }

    #[test]
    fn uniform_sheet_is_one_dimensional() {
        let (g, cond, bc, sigma) = uniform_strip(16);
        let d = 1e-6;
        let v = solve_poisson(&cond, d, &bc).unwrap();
        let h = g.extent();
        // Current leaves at the right edge, so it flows in +x and V falls.
        let slope = -1e-6 / (sigma * h * d);
        for r in 0..16 {
            for c in 0..16 {
                let x = (c as f64 + 0.5) * g.dx();
                assert!((v.v[(r, c)] - slope * x).abs() < 1e-8 * slope.abs() * h);
            }
        }
        let j = current_from_voltage(&v, &cond, d, &bc).unwrap();
        let j0 = 1e-6 / (h * d);
        assert!(j.jx.iter().all(|a| (a - j0).abs() < 1e-8 * j0));
        assert!(j.jy.iter().all(|a| a.abs() < 1e-8 * j0));
        let line = Section::Vertical { x: 7.5e-6, y0: 0.0, y1: h };
        assert!((cross_section_current(&j, &line, d).unwrap() - 1e-6).abs() < 1e-14);
    }

    #[test]
    fn no_current_no_potential() {
        let (_, cond, mut bc, _) = uniform_strip(8);
        bc.neumann.clear();
        let v = solve_poisson(&cond, 1e-6, &bc).unwrap();
        assert!(v.v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn boundary_errors() {
        let (_, cond, mut bc, _) = uniform_strip(8);
        bc.dirichlet.clear();
        assert!(matches!(solve_poisson(&cond, 1e-6, &bc), Err(Error::LinearSystem(_))));
        let (_, mut cond, bc, _) = uniform_strip(8);
        cond.values[(2, 2)] = 0.0;
        assert!(solve_poisson(&cond, 1e-6, &bc).is_err());
    }

    #[test]
    fn rasterize_simple_cases() {
        let g = GridSpec::new(8, 1.0).unwrap();
        let mut geo = TraceGeometry::new(10.0, 1.0, 1.0).unwrap();
        assert!(rasterize_geometry(&geo, &g).unwrap().values.iter().all(|s| *s == 1.0));
        geo.segments.push(Rect { x0: 0.0, x1: 8.0, y0: 0.0, y1: 8.0 });
        assert!(rasterize_geometry(&geo, &g).unwrap().values.iter().all(|s| *s == 10.0));
        geo.segments.push(Rect { x0: 0.0, x1: 9.0, y0: 0.0, y1: 1.0 });
        assert!(matches!(rasterize_geometry(&geo, &g), Err(Error::Geometry(_))));
    }

    #[test]
    fn polyline_fills_bends() {
        let mut geo = TraceGeometry::new(10.0, 1.0, 1.0).unwrap();
        geo.add_polyline(&[(0.0, 4.0), (4.0, 4.0), (4.0, 0.0)], 2.0).unwrap();
        assert_eq!(geo.segments[0], Rect { x0: 0.0, x1: 5.0, y0: 3.0, y1: 5.0 });
        assert_eq!(geo.segments[1], Rect { x0: 3.0, x1: 5.0, y0: 0.0, y1: 5.0 });
        assert!(geo.add_polyline(&[(0.0, 0.0), (1.0, 1.0)], 1.0).is_err());
    }
}
