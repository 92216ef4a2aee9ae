use std::collections::BTreeMap;

use super::ClimateError;
use crate::network::{NodeId, NodeRecord};

/// Row/column of a cell in a [`RegularGrid`]; row 0 is the southernmost
/// row, column 0 the westernmost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridCell {
    pub row: usize,
    pub col: usize,
}

/// Regular lat/lon grid described by its cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularGrid {
    pub lat0: f64,
    pub dlat: f64,
    pub rows: usize,
    pub lon0: f64,
    pub dlon: f64,
    pub cols: usize,
}

impl RegularGrid {
    pub fn new(lat0: f64, dlat: f64, rows: usize, lon0: f64, dlon: f64, cols: usize) -> Result<Self, ClimateError> {
        if rows == 0 || cols == 0 {
            return Err(ClimateError::InvalidGrid("grid needs at least one row and column".into()));
        }
        if !(dlat > 0.0 && dlon > 0.0 && lat0.is_finite() && lon0.is_finite()) {
            return Err(ClimateError::InvalidGrid("cell spacing must be positive and finite".into()));
        }
        Ok(RegularGrid { lat0, dlat, rows, lon0, dlon, cols })
    }

    /// Infers the grid from the distinct center coordinates present in a
    /// gridded file. Spacing must be uniform to within 1e-6 of a step.
    pub fn from_centers(lats: &[f64], lons: &[f64]) -> Result<Self, ClimateError> {
        let (lat0, dlat, rows) = axis(lats, "latitude")?;
        let (lon0, dlon, cols) = axis(lons, "longitude")?;
        RegularGrid::new(lat0, dlat, rows, lon0, dlon, cols)
    }

    pub fn center(&self, cell: GridCell) -> (f64, f64) {
        (self.lat0 + cell.row as f64 * self.dlat, self.lon0 + cell.col as f64 * self.dlon)
    }

    /// Cell whose center is exactly (to 1e-6 of a step) at `(lat, lon)`.
    pub fn cell_at(&self, lat: f64, lon: f64) -> Option<GridCell> {
        let r = (lat - self.lat0) / self.dlat;
        let c = (lon - self.lon0) / self.dlon;
        let (rr, cr) = (r.round(), c.round());
        let on_grid = (r - rr).abs() < 1e-6 && (c - cr).abs() < 1e-6;
        (on_grid && rr >= 0.0 && cr >= 0.0 && (rr as usize) < self.rows && (cr as usize) < self.cols)
            .then_some(GridCell { row: rr as usize, col: cr as usize })
    }

    /// Bounding box of all cells (centers extended by half a step).
    fn contains(&self, lat: f64, lon: f64) -> bool {
        let lat_lo = self.lat0 - self.dlat / 2.0;
        let lat_hi = self.lat0 + (self.rows as f64 - 0.5) * self.dlat;
        let lon_lo = self.lon0 - self.dlon / 2.0;
        let lon_hi = self.lon0 + (self.cols as f64 - 0.5) * self.dlon;
        (lat_lo..=lat_hi).contains(&lat) && (lon_lo..=lon_hi).contains(&lon)
    }

    /// Nearest cell center by great-circle distance; ties go to the lower
    /// row, then the lower column.
    pub fn nearest(&self, lat: f64, lon: f64) -> Option<GridCell> {
        if !self.contains(lat, lon) {
            return None;
        }
        // Along a row the distance grows with |Δlon|, so only the one or
        // two columns bracketing `lon` can be the row minimum.
        let c = ((lon - self.lon0) / self.dlon).clamp(0.0, (self.cols - 1) as f64);
        let candidates_col = [c.floor() as usize, c.ceil() as usize];
        let mut best: Option<(f64, GridCell)> = None;
        for row in 0..self.rows {
            for &col in &candidates_col {
                let cell = GridCell { row, col };
                let (clat, clon) = self.center(cell);
                let d = haversine_km(lat, lon, clat, clon);
                let better = match best {
                    None => true,
                    Some((bd, bc)) => d < bd || (d == bd && cell < bc),
                };
                if better {
                    best = Some((d, cell));
                }
            }
        }
        best.map(|(_, cell)| cell)
    }
}

fn axis(values: &[f64], what: &str) -> Result<(f64, f64, usize), ClimateError> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    match v.len() {
        0 => Err(ClimateError::InvalidGrid(format!("no {what} values"))),
        // A single row or column: any positive step describes it.
        1 => Ok((v[0], 1.0, 1)),
        len => {
            let step = (v[len - 1] - v[0]) / (len - 1) as f64;
            for (i, x) in v.iter().enumerate() {
                if ((x - v[0]) / step - i as f64).abs() > 1e-6 {
                    return Err(ClimateError::InvalidGrid(format!("irregular {what} spacing near {x}")));
                }
            }
            Ok((v[0], step, len))
        }
    }
}

const EARTH_RADIUS_KM: f64 = 6371.0088;

pub(crate) fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = (lat2 - lat1).to_radians();
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Assigns every node to its nearest grid cell.
pub fn map_nodes_to_grid(nodes: &[NodeRecord], grid: &RegularGrid) -> Result<BTreeMap<NodeId, GridCell>, ClimateError> {
    nodes
        .iter()
        .map(|n| {
            grid.nearest(n.lat, n.lon)
                .map(|cell| (n.id, cell))
                .ok_or(ClimateError::OutsideGrid { node: n.id, lat: n.lat, lon: n.lon })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Mode, Tonnage};

    fn at(id: u64, lat: f64, lon: f64) -> NodeRecord {
        NodeRecord { id: NodeId(id), name: String::new(), mode: Mode::Rail, lat, lon, tonnage: Tonnage::ZERO }
    }

    fn grid() -> RegularGrid {
        RegularGrid::new(30.0, 1.0, 4, -100.0, 1.0, 5).unwrap()
    }

    #[test]
    fn node_on_center() {
        let m = map_nodes_to_grid(&[at(1, 32.0, -97.0)], &grid()).unwrap();
        assert_eq!(m[&NodeId(1)], GridCell { row: 2, col: 3 });
    }

    #[test]
    fn equidistant_goes_low() {
        let g = grid();
        assert_eq!(g.nearest(31.0, -97.5), Some(GridCell { row: 1, col: 2 }));
        assert_eq!(g.nearest(31.5, -97.0), Some(GridCell { row: 1, col: 3 }));
    }

    #[test]
    fn outside_grid() {
        let e = map_nodes_to_grid(&[at(9, 50.0, -97.0)], &grid()).unwrap_err();
        assert!(matches!(e, ClimateError::OutsideGrid { node: NodeId(9), .. }));
        // Half a cell beyond the outermost center is still inside.
        assert!(grid().nearest(29.5, -100.5).is_some());
    }

    #[test]
    fn infer_from_centers() {
        let g = RegularGrid::from_centers(&[30.0, 30.5, 31.0, 30.5], &[-90.0, -89.75]).unwrap();
        assert_eq!((g.rows, g.cols), (3, 2));
        assert_eq!(g.cell_at(30.5, -89.75), Some(GridCell { row: 1, col: 1 }));
        assert!(RegularGrid::from_centers(&[30.0, 30.5, 31.7], &[0.0]).is_err());
    }
}
