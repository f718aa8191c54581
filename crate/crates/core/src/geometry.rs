//! Masked Cartesian grids over bounded star-shaped domains around the origin.
//!
//! Lattice nodes sit at half-integer multiples of the spacing, so the origin
//! is always the center of a plaquette and never a node. A node belongs to the
//! grid when it lies strictly inside the domain and outside the optional hole
//! `D(0, hole_radius)` (closed disc). Links between two masked-in nodes are
//! kept; links leaving the mask are dropped, which gives the natural (Neumann)
//! boundary condition for the assembled operators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of nodes per side accepted by [`build_grid`].
pub const MIN_NODES_PER_SIDE: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disc {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Star-shaped domain `{ r < R(θ) }` with `R` sampled at the uniform angles
    /// `2πk/K`; the boundary is the polygon through the sampled points.
    Star {
        radii: Vec<f64>,
    },
}

impl DomainSpec {
    pub fn disc(radius: f64) -> Self {
        DomainSpec::Disc { radius }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        DomainSpec::Ellipse { a, b }
    }

    /// Axis-aligned square of the given side centered at the origin, as a
    /// sampled star domain.
    pub fn square(side: f64, samples: usize) -> Self {
        let half = 0.5 * side;
        let radii = (0..samples)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / samples as f64;
                half / t.cos().abs().max(t.sin().abs())
            })
            .collect();
        DomainSpec::Star { radii }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match self {
            DomainSpec::Disc { radius } if ok(*radius) => Ok(()),
            DomainSpec::Disc { radius } => Err(Error::InvalidDomain(format!(
                "disc radius must be positive, got {radius}"
            ))),
            DomainSpec::Ellipse { a, b } if ok(*a) && ok(*b) => Ok(()),
            DomainSpec::Ellipse { a, b } => Err(Error::InvalidDomain(format!(
                "ellipse semiaxes must be positive, got ({a}, {b})"
            ))),
            DomainSpec::Star { radii } => {
                if radii.len() < 3 {
                    return Err(Error::InvalidDomain(
                        "star domain needs at least 3 radius samples".into(),
                    ));
                }
                if let Some(r) = radii.iter().find(|r| !ok(**r)) {
                    return Err(Error::InvalidDomain(format!(
                        "star boundary radius must be positive, got {r}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Boundary radius in direction `theta` (star form of the domain).
    pub fn boundary_radius(&self, theta: f64) -> f64 {
        match self {
            DomainSpec::Disc { radius } => *radius,
            DomainSpec::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                1.0 / ((c / a).powi(2) + (s / b).powi(2)).sqrt()
            }
            DomainSpec::Star { radii } => {
                let k = radii.len();
                let t = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * k as f64;
                let i0 = (t.floor() as usize) % k;
                let i1 = (i0 + 1) % k;
                let vertex = |i: usize| {
                    let a = 2.0 * PI * i as f64 / k as f64;
                    (radii[i] * a.cos(), radii[i] * a.sin())
                };
                let (p, q) = (vertex(i0), vertex(i1));
                let (s, c) = theta.sin_cos();
                // ray r(cos θ, sin θ) meets the chord p -> q
                (p.0 * q.1 - p.1 * q.0) / (c * (q.1 - p.1) - s * (q.0 - p.0))
            }
        }
    }

    /// Strict point-in-domain test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            DomainSpec::Disc { radius } => x * x + y * y < radius * radius,
            DomainSpec::Ellipse { a, b } => (x / a) * (x / a) + (y / b) * (y / b) < 1.0,
            DomainSpec::Star { .. } => {
                let r = x.hypot(y);
                r < self.boundary_radius(y.atan2(x))
            }
        }
    }

    /// Half side of the square bounding box centered at the origin.
    pub fn half_extent(&self) -> f64 {
        match self {
            DomainSpec::Disc { radius } => *radius,
            DomainSpec::Ellipse { a, b } => a.max(*b),
            DomainSpec::Star { radii } => radii.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Distance from the origin to the boundary.
    pub fn inradius(&self) -> f64 {
        match self {
            DomainSpec::Disc { radius } => *radius,
            DomainSpec::Ellipse { a, b } => a.min(*b),
            DomainSpec::Star { radii } => {
                let k = radii.len();
                let vertex = |i: usize| {
                    let a = 2.0 * PI * (i % k) as f64 / k as f64;
                    (radii[i % k] * a.cos(), radii[i % k] * a.sin())
                };
                (0..k)
                    .map(|i| {
                        let (p, q) = (vertex(i), vertex(i + 1));
                        let d = (q.0 - p.0, q.1 - p.1);
                        let t = (-(p.0 * d.0 + p.1 * d.1) / (d.0 * d.0 + d.1 * d.1)).clamp(0.0, 1.0);
                        (p.0 + t * d.0).hypot(p.1 + t * d.1)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Analytic area of the domain.
    pub fn area(&self) -> f64 {
        match self {
            DomainSpec::Disc { radius } => PI * radius * radius,
            DomainSpec::Ellipse { a, b } => PI * a * b,
            DomainSpec::Star { radii } => {
                let k = radii.len();
                let dt = 2.0 * PI / k as f64;
                (0..k)
                    .map(|i| 0.5 * radii[i] * radii[(i + 1) % k] * dt.sin())
                    .sum::<f64>()
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DomainSpec::Disc { radius } => format!("disc(radius={radius})"),
            DomainSpec::Ellipse { a, b } => format!("ellipse(a={a},b={b})"),
            DomainSpec::Star { radii } => format!("star(samples={})", radii.len()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    /// Lattice neighbors that are outside the domain.
    pub missing_outer: u8,
    /// Lattice neighbors that are inside the hole.
    pub missing_hole: u8,
}

impl Node {
    pub fn is_boundary(&self) -> bool {
        self.missing_outer + self.missing_hole > 0
    }
}

/// Directed link from `tail` to `head = tail + e_dir`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub tail: usize,
    pub head: usize,
    pub dir: Direction,
}

/// Unit cell with all four corners in the mask. `links` are
/// `[bottom, right, top, left]`; bottom and right are traversed forward and
/// top and left backward by the counter-clockwise boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plaquette {
    pub corner: usize,
    pub links: [usize; 4],
    pub center: (f64, f64),
}

impl Plaquette {
    /// Orientation of each entry of `links` along the counter-clockwise loop.
    pub const ORIENTATION: [f64; 4] = [1.0, 1.0, -1.0, -1.0];

    pub fn contains_origin(&self, spacing: f64) -> bool {
        let h = 0.5 * spacing;
        self.center.0.abs() < h && self.center.1.abs() < h
    }
}

const NO_NODE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct MaskedGrid {
    spec: DomainSpec,
    n: usize,
    spacing: f64,
    center_index: f64,
    hole_radius: f64,
    lattice: Vec<u32>,
    nodes: Vec<Node>,
    links: Vec<Link>,
    plaquettes: Vec<Plaquette>,
    /// Outgoing link in +x and +y per node.
    forward: Vec<[Option<usize>; 2]>,
}

/// Builds the masked grid with `n` lattice nodes per side of the bounding box.
pub fn build_grid(spec: &DomainSpec, n: usize) -> Result<MaskedGrid> {
    spec.validate()?;
    if n < MIN_NODES_PER_SIDE {
        return Err(Error::ResolutionInsufficient(format!(
            "need at least {MIN_NODES_PER_SIDE} nodes per side, got {n}"
        )));
    }
    let grid = MaskedGrid::assemble(spec.clone(), n, 0.0);
    if grid.origin_plaquette().is_none() {
        return Err(Error::ResolutionInsufficient(format!(
            "no interior plaquette around the origin at n = {n}"
        )));
    }
    Ok(grid)
}

/// Removes the closed disc `D(0, radius)` from the grid.
pub fn perforate(grid: &MaskedGrid, radius: f64) -> Result<MaskedGrid> {
    let min = 2.0 * grid.spacing;
    if !(radius >= min) {
        return Err(Error::HoleUnresolved { radius, min });
    }
    let limit = grid.spec.inradius();
    if radius >= limit {
        return Err(Error::HoleTooLarge { radius, limit });
    }
    let hole = radius.max(grid.hole_radius);
    Ok(MaskedGrid::assemble(grid.spec.clone(), grid.n, hole))
}

/// `spacing² × (interior nodes + ½ boundary nodes)`.
pub fn measured_area(grid: &MaskedGrid) -> f64 {
    grid.node_weights().iter().sum()
}

impl MaskedGrid {
    fn assemble(spec: DomainSpec, n: usize, hole_radius: f64) -> MaskedGrid {
        let spacing = 2.0 * spec.half_extent() / n as f64;
        let center_index = (n / 2) as f64 - 0.5;
        let coord = |i: usize| (i as f64 - center_index) * spacing;
        let inside = |i: isize, j: isize| -> Option<bool> {
            // Some(true) masked in, Some(false) in the hole, None outside Ω
            if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                return None;
            }
            let (x, y) = (coord(i as usize), coord(j as usize));
            if !spec.contains(x, y) {
                None
            } else {
                Some(x * x + y * y > hole_radius * hole_radius)
            }
        };

        let mut lattice = vec![NO_NODE; n * n];
        let mut nodes = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if inside(i as isize, j as isize) != Some(true) {
                    continue;
                }
                let (mut missing_outer, mut missing_hole) = (0u8, 0u8);
                for (di, dj) in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
                    match inside(i as isize + di, j as isize + dj) {
                        Some(true) => {}
                        Some(false) => missing_hole += 1,
                        None => missing_outer += 1,
                    }
                }
                lattice[j * n + i] = nodes.len() as u32;
                nodes.push(Node {
                    i,
                    j,
                    x: coord(i),
                    y: coord(j),
                    missing_outer,
                    missing_hole,
                });
            }
        }

        let at = |i: usize, j: usize| -> Option<usize> {
            if i >= n || j >= n {
                return None;
            }
            let k = lattice[j * n + i];
            (k != NO_NODE).then_some(k as usize)
        };

        let mut links = Vec::new();
        let mut forward = vec![[None, None]; nodes.len()];
        for (k, node) in nodes.iter().enumerate() {
            if let Some(head) = at(node.i + 1, node.j) {
                forward[k][0] = Some(links.len());
                links.push(Link {
                    tail: k,
                    head,
                    dir: Direction::X,
                });
            }
            if let Some(head) = at(node.i, node.j + 1) {
                forward[k][1] = Some(links.len());
                links.push(Link {
                    tail: k,
                    head,
                    dir: Direction::Y,
                });
            }
        }

        let mut plaquettes = Vec::new();
        for (k, node) in nodes.iter().enumerate() {
            let (Some(bottom), Some(left)) = (forward[k][0], forward[k][1]) else {
                continue;
            };
            let (Some(lr), Some(ul)) = (at(node.i + 1, node.j), at(node.i, node.j + 1)) else {
                continue;
            };
            let (Some(right), Some(top)) = (forward[lr][1], forward[ul][0]) else {
                continue;
            };
            plaquettes.push(Plaquette {
                corner: k,
                links: [bottom, right, top, left],
                center: (node.x + 0.5 * spacing, node.y + 0.5 * spacing),
            });
        }

        MaskedGrid {
            spec,
            n,
            spacing,
            center_index,
            hole_radius,
            lattice,
            nodes,
            links,
            plaquettes,
            forward,
        }
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn hole_radius(&self) -> f64 {
        self.hole_radius
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }

    /// Lattice coordinate of index `i` along either axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - self.center_index) * self.spacing
    }

    /// Compact node index at lattice position `(i, j)`, if masked in.
    pub fn node_at(&self, i: isize, j: isize) -> Option<usize> {
        if i < 0 || j < 0 || i >= self.n as isize || j >= self.n as isize {
            return None;
        }
        let k = self.lattice[j as usize * self.n + i as usize];
        (k != NO_NODE).then_some(k as usize)
    }

    /// Outgoing link from `node` in direction `dir`.
    pub fn forward_link(&self, node: usize, dir: Direction) -> Option<usize> {
        self.forward[node][match dir {
            Direction::X => 0,
            Direction::Y => 1,
        }]
    }

    /// Number of retained links incident to each node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for l in &self.links {
            deg[l.tail] += 1;
            deg[l.head] += 1;
        }
        deg
    }

    /// Quadrature weight per node: `spacing²`, halved on boundary nodes.
    pub fn node_weights(&self) -> Vec<f64> {
        let h2 = self.spacing * self.spacing;
        self.nodes
            .iter()
            .map(|n| if n.is_boundary() { 0.5 * h2 } else { h2 })
            .collect()
    }

    /// The plaquette whose center is the origin, when present.
    pub fn origin_plaquette(&self) -> Option<usize> {
        self.plaquettes
            .iter()
            .position(|p| p.contains_origin(self.spacing))
    }

    /// For each lattice neighbor of `node` that is not in the mask: whether
    /// it lies in the hole, and the fraction `δ ∈ (0, 1]` of the spacing at
    /// which the segment towards it leaves the masked region.
    pub fn wall_crossings(&self, node: usize) -> Vec<(bool, f64)> {
        let p = &self.nodes[node];
        let mut out = Vec::new();
        for (di, dj) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
            let (i, j) = (p.i as isize + di, p.j as isize + dj);
            if self.node_at(i, j).is_some() {
                continue;
            }
            let q = (p.x + di as f64 * self.spacing, p.y + dj as f64 * self.spacing);
            let hole = q.0 * q.0 + q.1 * q.1 <= self.hole_radius * self.hole_radius;
            let hole = hole && self.spec.contains(q.0, q.1);
            let inside = |t: f64| {
                let (x, y) = (p.x + t * (q.0 - p.x), p.y + t * (q.1 - p.y));
                if hole {
                    x * x + y * y > self.hole_radius * self.hole_radius
                } else {
                    self.spec.contains(x, y)
                }
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..52 {
                let mid = 0.5 * (lo + hi);
                if inside(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push((hole, hi));
        }
        out
    }

    /// Identity used to check that fields and states were built on this grid.
    pub fn fingerprint(&self) -> GridFingerprint {
        GridFingerprint {
            n: self.n,
            nodes: self.nodes.len(),
            links: self.links.len(),
            hole_bits: self.hole_radius.to_bits(),
            spacing_bits: self.spacing.to_bits(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridFingerprint {
    n: usize,
    nodes: usize,
    links: usize,
    hole_bits: u64,
    spacing_bits: u64,
}
