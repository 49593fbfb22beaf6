//! Hexagonal cell layout and uniform mobile drops.
//!
//! Cells are flat-topped hexagons with circumradius `isd / sqrt(3)`, so the
//! distance between neighbouring cell centres equals the intersite distance.
//! The layout has no wrap-around; cell 0 sits at the origin.

use rand::Rng;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone)]
pub struct NetworkLayout {
    pub cell_positions: Vec<Point>,
    pub intersite_distance: f64,
    pub center_cell_index: usize,
}

impl NetworkLayout {
    pub fn num_cells(&self) -> usize {
        self.cell_positions.len()
    }

    /// Circumradius of every cell hexagon.
    pub fn cell_radius(&self) -> f64 {
        self.intersite_distance / SQRT_3
    }

    pub fn contains(&self, cell: usize, p: &Point) -> bool {
        let c = self.cell_positions[cell];
        point_in_hexagon(&Point::new(p.x - c.x, p.y - c.y), self.cell_radius())
    }
}

/// Number of cells in a layout with `tiers` rings around the centre cell.
pub fn cell_count(tiers: usize) -> usize {
    1 + 3 * tiers * (tiers + 1)
}

/// Builds `1 + 3 t (t + 1)` cell centres on a hexagonal lattice with spacing `isd`.
///
/// Cells are ordered ring by ring, cell 0 being the origin.
pub fn build_hex_layout(tiers: usize, isd: f64) -> NetworkLayout {
    assert!(isd > 0.0, "intersite distance must be positive");
    let t = tiers as i64;
    let mut axial: Vec<(i64, i64)> = Vec::with_capacity(cell_count(tiers));
    for q in -t..=t {
        for r in -t..=t {
            if (q + r).abs() <= t {
                axial.push((q, r));
            }
        }
    }
    let ring = |&(q, r): &(i64, i64)| q.abs().max(r.abs()).max((q + r).abs());
    axial.sort_by_key(|a| (ring(a), a.0, a.1));

    // flat-topped axial coordinates with neighbour spacing `isd`
    let cell_positions = axial
        .iter()
        .map(|&(q, r)| {
            let (q, r) = (q as f64, r as f64);
            Point::new(isd * SQRT_3 / 2.0 * q, isd * (r + q / 2.0))
        })
        .collect();

    NetworkLayout {
        cell_positions,
        intersite_distance: isd,
        center_cell_index: 0,
    }
}

/// Point-in-hexagon test for a flat-topped hexagon centred on the origin.
pub fn point_in_hexagon(p: &Point, radius: f64) -> bool {
    let (x, y) = (p.x.abs(), p.y.abs());
    y <= SQRT_3 / 2.0 * radius && SQRT_3 * x + y <= SQRT_3 * radius
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobile {
    pub position: Point,
    pub serving_cell: usize,
}

/// Mobile positions for one Monte-Carlo drop.
///
/// Mobiles are stored cell-major: mobile `c * K + k` is the `k`-th mobile of
/// cell `c`.
#[derive(Debug, Clone)]
pub struct MobileDrop {
    pub mobiles: Vec<Mobile>,
    pub mobiles_per_cell: usize,
}

impl MobileDrop {
    pub fn num_mobiles(&self) -> usize {
        self.mobiles.len()
    }

    pub fn cell_mobiles(&self, cell: usize) -> &[Mobile] {
        let k = self.mobiles_per_cell;
        &self.mobiles[cell * k..(cell + 1) * k]
    }

    /// Global index of the `k`-th mobile of `cell`.
    pub fn mobile_index(&self, cell: usize, k: usize) -> usize {
        cell * self.mobiles_per_cell + k
    }
}

/// Drops `k_per_cell` mobiles uniformly inside every cell hexagon.
///
/// Each point is drawn by rejection sampling from the square `[-r, r]^2`
/// around the cell centre.
pub fn drop_mobiles<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    k_per_cell: usize,
    rng: &mut R,
) -> MobileDrop {
    assert!(k_per_cell >= 1, "at least one mobile per cell");
    let mut mobiles = Vec::with_capacity(layout.num_cells() * k_per_cell);
    for cell in 0..layout.num_cells() {
        for _ in 0..k_per_cell {
            mobiles.push(Mobile {
                position: sample_in_cell(layout, cell, rng),
                serving_cell: cell,
            });
        }
    }
    MobileDrop {
        mobiles,
        mobiles_per_cell: k_per_cell,
    }
}

/// One rejection-sampling attempt; `None` when the candidate falls outside.
pub fn try_sample_in_hexagon<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Option<Point> {
    let p = Point::new(
        rng.random_range(-radius..=radius),
        rng.random_range(-radius..=radius),
    );
    point_in_hexagon(&p, radius).then_some(p)
}

fn sample_in_hexagon<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point {
    loop {
        if let Some(p) = try_sample_in_hexagon(radius, rng) {
            return p;
        }
    }
}

/// A uniform point inside the hexagon of `cell`.
pub fn sample_in_cell<R: Rng + ?Sized>(layout: &NetworkLayout, cell: usize, rng: &mut R) -> Point {
    let center = layout.cell_positions[cell];
    let offset = sample_in_hexagon(layout.cell_radius(), rng);
    Point::new(center.x + offset.x, center.y + offset.y)
}
