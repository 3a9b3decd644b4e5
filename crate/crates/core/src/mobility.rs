//! Grid-planned city roads and client vehicle kinematics.
//!
//! Roads are the zero-width lines `x = k * block` and `y = k * block` inside
//! the `length x width` region. Clients drive at constant speed and pick a new
//! direction whenever they reach an intersection; service vehicles are parked.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to decide that a coordinate sits on a gridline.
const GRID_EPS_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
}

impl Heading {
    pub fn reverse(self) -> Heading {
        match self {
            Heading::PosX => Heading::NegX,
            Heading::NegX => Heading::PosX,
            Heading::PosY => Heading::NegY,
            Heading::NegY => Heading::PosY,
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Heading::PosX | Heading::NegX)
    }

    fn unit(self) -> (f64, f64) {
        match self {
            Heading::PosX => (1.0, 0.0),
            Heading::NegX => (-1.0, 0.0),
            Heading::PosY => (0.0, 1.0),
            Heading::NegY => (0.0, -1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridNetwork {
    pub length_m: f64,
    pub width_m: f64,
    pub block_m: f64,
    pub rsu_position: (f64, f64),
}

impl Default for GridNetwork {
    fn default() -> Self {
        GridNetwork {
            length_m: 1000.0,
            width_m: 1000.0,
            block_m: 200.0,
            rsu_position: (500.0, 500.0),
        }
    }
}

impl GridNetwork {
    pub fn new(length_m: f64, width_m: f64, block_m: f64, rsu_position: (f64, f64)) -> Result<Self> {
        let grid = GridNetwork {
            length_m,
            width_m,
            block_m,
            rsu_position,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.block_m > 0.0 && self.length_m > 0.0 && self.width_m > 0.0) {
            return Err(Error::Config("grid dimensions must be positive".into()));
        }
        for (name, side) in [("length", self.length_m), ("width", self.width_m)] {
            let blocks = side / self.block_m;
            if (blocks - blocks.round()).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "grid {name} {side} is not a multiple of block {}",
                    self.block_m
                )));
            }
        }
        let (rx, ry) = self.rsu_position;
        if !(0.0..=self.length_m).contains(&rx) || !(0.0..=self.width_m).contains(&ry) {
            return Err(Error::Config("RSU lies outside the region".into()));
        }
        Ok(())
    }

    fn columns(&self) -> usize {
        (self.length_m / self.block_m).round() as usize
    }

    fn rows(&self) -> usize {
        (self.width_m / self.block_m).round() as usize
    }

    /// Gridline index of `v`, if `v` lies on a gridline.
    fn line_index(&self, v: f64) -> Option<i64> {
        let k = (v / self.block_m).round();
        ((v - k * self.block_m).abs() <= GRID_EPS_M).then_some(k as i64)
    }

    pub fn is_on_road(&self, x: f64, y: f64) -> bool {
        let inside = (-GRID_EPS_M..=self.length_m + GRID_EPS_M).contains(&x)
            && (-GRID_EPS_M..=self.width_m + GRID_EPS_M).contains(&y);
        inside && (self.line_index(x).is_some() || self.line_index(y).is_some())
    }

    pub fn is_intersection(&self, x: f64, y: f64) -> bool {
        self.line_index(x).is_some() && self.line_index(y).is_some()
    }

    /// Headings that keep a vehicle at intersection `(x, y)` inside the region.
    pub fn legal_headings(&self, x: f64, y: f64) -> Vec<Heading> {
        let (Some(ix), Some(iy)) = (self.line_index(x), self.line_index(y)) else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(4);
        if ix < self.columns() as i64 {
            out.push(Heading::PosX);
        }
        if ix > 0 {
            out.push(Heading::NegX);
        }
        if iy < self.rows() as i64 {
            out.push(Heading::PosY);
        }
        if iy > 0 {
            out.push(Heading::NegY);
        }
        out
    }

    /// Distance along `heading` from `(x, y)` to the next intersection.
    fn gap_to_next(&self, x: f64, y: f64, heading: Heading) -> f64 {
        let b = self.block_m;
        let along = if heading.is_horizontal() { x } else { y };
        let target = match (self.line_index(along), heading) {
            (Some(k), Heading::PosX | Heading::PosY) => (k + 1) as f64 * b,
            (Some(k), Heading::NegX | Heading::NegY) => (k - 1) as f64 * b,
            (None, Heading::PosX | Heading::PosY) => ((along / b).floor() + 1.0) * b,
            (None, Heading::NegX | Heading::NegY) => (along / b).floor() * b,
        };
        (target - along).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientVehicleState {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub heading: Heading,
    /// Meters per second.
    pub velocity: f64,
    /// Mean task emission rate (tasks per second).
    pub rate: f64,
    /// Total path length driven so far.
    pub odometer_m: f64,
}

impl ClientVehicleState {
    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceVehicleState {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Processing speed in MIPS.
    pub cpu: f64,
}

impl ServiceVehicleState {
    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}

/// Samples a point uniformly over the total road length, with a heading
/// drawn uniformly from the directions legal at that point.
pub fn random_road_position<R: Rng + ?Sized>(rng: &mut R, grid: &GridNetwork) -> (f64, f64, Heading) {
    let vertical_lines = grid.columns() + 1;
    let horizontal_lines = grid.rows() + 1;
    let vertical_total = vertical_lines as f64 * grid.width_m;
    let total = vertical_total + horizontal_lines as f64 * grid.length_m;

    let u = rng.random::<f64>() * total;
    let (x, y) = if u < vertical_total {
        let line = ((u / grid.width_m) as usize).min(vertical_lines - 1);
        let offset = (u - line as f64 * grid.width_m).clamp(0.0, grid.width_m);
        (line as f64 * grid.block_m, offset)
    } else {
        let v = u - vertical_total;
        let line = ((v / grid.length_m) as usize).min(horizontal_lines - 1);
        let offset = (v - line as f64 * grid.length_m).clamp(0.0, grid.length_m);
        (offset, line as f64 * grid.block_m)
    };

    let choices: Vec<Heading> = if grid.is_intersection(x, y) {
        grid.legal_headings(x, y)
    } else if grid.line_index(x).is_some() {
        vec![Heading::PosY, Heading::NegY]
    } else {
        vec![Heading::PosX, Heading::NegX]
    };
    let heading = *choices.choose(rng).expect("every road point has a legal heading");
    (x, y, heading)
}

/// Picks the direction to leave an intersection, excluding a U-turn unless
/// it is the only way out.
fn choose_turn<R: Rng + ?Sized>(grid: &GridNetwork, x: f64, y: f64, incoming: Heading, rng: &mut R) -> Heading {
    let legal = grid.legal_headings(x, y);
    let onward: Vec<Heading> = legal.iter().copied().filter(|h| *h != incoming.reverse()).collect();
    let pool = if onward.is_empty() { &legal } else { &onward };
    *pool.choose(rng).expect("intersections always have an exit")
}

/// Moves a client vehicle forward by `dt` seconds.
///
/// Turns are drawn only when the vehicle stands on an intersection and still
/// has distance to cover, so splitting `dt` into pieces consumes the same
/// random draws as a single call.
pub fn advance_vehicle<R: Rng + ?Sized>(
    state: &ClientVehicleState,
    dt: f64,
    grid: &GridNetwork,
    rng: &mut R,
) -> ClientVehicleState {
    let mut next = state.clone();
    let mut remaining = state.velocity * dt.max(0.0);
    if remaining <= 0.0 {
        return next;
    }
    loop {
        if let (Some(ix), Some(iy)) = (grid.line_index(next.x), grid.line_index(next.y)) {
            next.x = ix as f64 * grid.block_m;
            next.y = iy as f64 * grid.block_m;
            next.heading = choose_turn(grid, next.x, next.y, next.heading, rng);
        }
        let gap = grid.gap_to_next(next.x, next.y, next.heading);
        let (ux, uy) = next.heading.unit();
        if remaining < gap {
            next.x += ux * remaining;
            next.y += uy * remaining;
            next.odometer_m += remaining;
            break;
        }
        // Land exactly on the intersection.
        if next.heading.is_horizontal() {
            next.x = ((next.x + ux * gap) / grid.block_m).round() * grid.block_m;
        } else {
            next.y = ((next.y + uy * gap) / grid.block_m).round() * grid.block_m;
        }
        next.odometer_m += gap;
        remaining -= gap;
        if remaining <= 0.0 {
            break;
        }
    }
    next
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::{stream, Stream};
    use proptest::prelude::*;

    fn client(x: f64, y: f64, heading: Heading, velocity: f64) -> ClientVehicleState {
        ClientVehicleState {
            id: 0,
            x,
            y,
            heading,
            velocity,
            rate: 3.0,
            odometer_m: 0.0,
        }
    }

    #[test]
    fn rejects_non_multiple_region() {
        assert!(GridNetwork::new(1000.0, 900.0, 200.0, (500.0, 500.0)).is_err());
        assert!(GridNetwork::new(1000.0, 1000.0, 200.0, (500.0, 500.0)).is_ok());
    }

    #[test]
    fn random_positions_lie_on_roads() {
        let grid = GridNetwork::default();
        let mut rng = stream(1, Stream::Fleet);
        for _ in 0..10_000 {
            let (x, y, h) = random_road_position(&mut rng, &grid);
            assert!(x % 200.0 == 0.0 || y % 200.0 == 0.0, "({x},{y})");
            if !grid.is_intersection(x, y) {
                // heading runs along the road the point sits on
                assert_eq!(h.is_horizontal(), y % 200.0 == 0.0);
            }
        }
    }

    #[test]
    fn random_position_is_deterministic() {
        let grid = GridNetwork::default();
        let a = random_road_position(&mut stream(9, Stream::Fleet), &grid);
        let b = random_road_position(&mut stream(9, Stream::Fleet), &grid);
        assert_eq!(a, b);
    }

    #[test]
    fn intersections_have_measure_zero_under_length_sampling() {
        let grid = GridNetwork::default();
        let mut rng = stream(2, Stream::Fleet);
        let hits = (0..10_000)
            .filter(|_| {
                let (x, y, _) = random_road_position(&mut rng, &grid);
                grid.is_intersection(x, y)
            })
            .count();
        assert_eq!(hits, 0);
    }

    #[test]
    fn straight_segment_without_intersection() {
        let grid = GridNetwork::default();
        let mut rng = stream(0, Stream::ClientMobility(0));
        let s = advance_vehicle(&client(250.0, 200.0, Heading::PosX, 10.0), 2.0, &grid, &mut rng);
        assert_eq!((s.x, s.y, s.heading), (270.0, 200.0, Heading::PosX));
        assert_eq!(s.odometer_m, 20.0);
    }

    #[test]
    fn zero_dt_is_identity() {
        let grid = GridNetwork::default();
        let mut rng = stream(0, Stream::ClientMobility(0));
        let start = client(250.0, 200.0, Heading::PosX, 10.0);
        assert_eq!(advance_vehicle(&start, 0.0, &grid, &mut rng), start);
    }

    #[test]
    fn turn_at_intersection_spends_residual_distance() {
        let grid = GridNetwork::default();
        let start = client(390.0, 200.0, Heading::PosX, 10.0);
        let allowed = [(410.0, 200.0), (400.0, 210.0), (400.0, 190.0)];
        let mut seen = std::collections::HashSet::new();
        for seed in 0..200 {
            let mut rng = stream(seed, Stream::ClientMobility(0));
            let s = advance_vehicle(&start, 2.0, &grid, &mut rng);
            let hit = allowed
                .iter()
                .position(|&(x, y)| (s.x - x).abs() < 1e-9 && (s.y - y).abs() < 1e-9)
                .unwrap_or_else(|| panic!("unexpected end point ({}, {})", s.x, s.y));
            seen.insert(hit);

            // fine time-step integrator over the same random stream
            let mut fine = start.clone();
            let mut fine_rng = stream(seed, Stream::ClientMobility(0));
            for _ in 0..20_000 {
                fine = advance_vehicle(&fine, 1e-4, &grid, &mut fine_rng);
            }
            assert!((fine.x - s.x).abs() < 1e-6 && (fine.y - s.y).abs() < 1e-6);
        }
        assert_eq!(seen.len(), 3, "all onward directions should occur");
    }

    #[test]
    fn corner_offers_only_inward_directions() {
        let grid = GridNetwork::default();
        let mut hs = grid.legal_headings(0.0, 0.0);
        hs.sort_by_key(|h| *h as u8);
        assert_eq!(hs, vec![Heading::PosX, Heading::PosY]);
        let mut rng = stream(3, Stream::ClientMobility(0));
        // arriving at the corner heading -x, the only non-reversing exit is +y
        let s = advance_vehicle(&client(5.0, 0.0, Heading::NegX, 10.0), 1.0, &grid, &mut rng);
        assert!((s.x - 0.0).abs() < 1e-12 && (s.y - 5.0).abs() < 1e-9);
        assert_eq!(s.heading, Heading::PosY);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance((0.0, 0.0), (0.0, 0.0)), 0.0);
        assert_eq!(distance((500.0, 500.0), (500.0, 200.0)), 300.0);
        assert_eq!(distance((1.0, 2.0), (4.0, 6.0)), distance((4.0, 6.0), (1.0, 2.0)));
    }

    proptest! {
        #[test]
        fn stays_on_road_and_conserves_path_length(
            seed in 0u64..10_000,
            steps in proptest::collection::vec(0.0f64..30.0, 1..40),
            vel_idx in 0usize..4,
        ) {
            let grid = GridNetwork::default();
            let mut rng = stream(seed, Stream::ClientMobility(0));
            let (x, y, heading) = random_road_position(&mut rng, &grid);
            let v = kmh_to_mps([10.0, 20.0, 25.0, 40.0][vel_idx]);
            let mut s = client(x, y, heading, v);
            let mut elapsed = 0.0;
            for dt in steps {
                s = advance_vehicle(&s, dt, &grid, &mut rng);
                elapsed += dt;
                prop_assert!(grid.is_on_road(s.x, s.y), "off road at ({}, {})", s.x, s.y);
                prop_assert!(s.x % 200.0 == 0.0 || s.y % 200.0 == 0.0);
            }
            prop_assert!((s.odometer_m - v * elapsed).abs() < 1e-9);
        }

        #[test]
        fn split_advances_match_single_advance(seed in 0u64..10_000, dt in 0.0f64..60.0, cut in 0.0f64..1.0) {
            let grid = GridNetwork::default();
            let mut rng = stream(seed, Stream::ClientMobility(0));
            let (x, y, heading) = random_road_position(&mut rng, &grid);
            let start = client(x, y, heading, kmh_to_mps(40.0));
            let mut r1 = rng.clone();
            let mut r2 = rng;
            let whole = advance_vehicle(&start, dt, &grid, &mut r1);
            let half = advance_vehicle(&start, dt * cut, &grid, &mut r2);
            let split = advance_vehicle(&half, dt * (1.0 - cut), &grid, &mut r2);
            prop_assert!((whole.x - split.x).abs() < 1e-6 && (whole.y - split.y).abs() < 1e-6);
        }
    }
}
