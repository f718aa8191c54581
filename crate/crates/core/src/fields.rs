//! Gauge link fields for the Aharonov-Bohm potential, its magnetic-step
//! regularization, and a lattice point flux.
//!
//! All circulations are closed-form: angle differences for the AB field and
//! the chord formula `½ (P × Q)` for the linear potential inside the step.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{GridFingerprint, MaskedGrid, Plaquette};

pub type Point = (f64, f64);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialKind {
    AharonovBohm,
    /// `F_AB` outside `D(0, epsilon)`, `A₀ / (π ε²)` inside.
    Step { epsilon: f64 },
    /// Whole flux on the plaquette at the origin, carried by a branch cut.
    PointFlux,
}

impl PotentialKind {
    pub fn label(&self) -> String {
        match self {
            PotentialKind::AharonovBohm => "aharonov-bohm".into(),
            PotentialKind::Step { epsilon } => format!("step({epsilon})"),
            PotentialKind::PointFlux => "point-flux".into(),
        }
    }
}

/// Per-link phases `h ∫_link F · dl`.
#[derive(Clone, Debug)]
pub struct GaugeLinkField {
    phases: Vec<f64>,
    flux: f64,
    kind: PotentialKind,
    grid: GridFingerprint,
}

impl GaugeLinkField {
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn flux(&self) -> f64 {
        self.flux
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn grid(&self) -> GridFingerprint {
        self.grid
    }

    /// Zero phases on every link of `grid`.
    pub fn zero(grid: &MaskedGrid) -> Self {
        GaugeLinkField {
            phases: vec![0.0; grid.links().len()],
            flux: 0.0,
            kind: PotentialKind::PointFlux,
            grid: grid.fingerprint(),
        }
    }

    /// Field with explicit phases, e.g. after a gauge transformation.
    pub fn from_phases(
        grid: &MaskedGrid,
        kind: PotentialKind,
        flux: f64,
        phases: Vec<f64>,
    ) -> Result<Self> {
        if phases.len() != grid.links().len() {
            return Err(Error::Mismatch(format!(
                "{} phases for {} links",
                phases.len(),
                grid.links().len()
            )));
        }
        Ok(GaugeLinkField {
            phases,
            flux,
            kind,
            grid: grid.fingerprint(),
        })
    }

    pub fn check_grid(&self, grid: &MaskedGrid) -> Result<()> {
        if self.grid != grid.fingerprint() {
            return Err(Error::Mismatch("gauge field was built on a different grid".into()));
        }
        Ok(())
    }
}

/// `∫_{P→Q} F_AB · dl = Δθ / 2π`, with `Δθ ∈ (−π, π]` the signed angle
/// subtended at the origin.
pub fn ab_segment_circulation(p: Point, q: Point) -> Result<f64> {
    let cross = p.0 * q.1 - p.1 * q.0;
    let dot = p.0 * q.0 + p.1 * q.1;
    if cross == 0.0 && dot <= 0.0 {
        return Err(Error::SingularSegment(p.0, p.1, q.0, q.1));
    }
    Ok(cross.atan2(dot) / (2.0 * PI))
}

/// Exact `∫_{P→Q} F_ε · dl`, splitting the segment on the circle `|x| = ε`.
pub fn step_segment_circulation(p: Point, q: Point, epsilon: f64) -> f64 {
    let d = (q.0 - p.0, q.1 - p.1);
    // |p + t d|² = ε²
    let a = d.0 * d.0 + d.1 * d.1;
    let b = 2.0 * (p.0 * d.0 + p.1 * d.1);
    let c = p.0 * p.0 + p.1 * p.1 - epsilon * epsilon;
    let mut cuts = vec![0.0, 1.0];
    let disc = b * b - 4.0 * a * c;
    if a > 0.0 && disc > 0.0 {
        let s = disc.sqrt();
        for t in [(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)] {
            if t > 0.0 && t < 1.0 {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let at = |t: f64| (p.0 + t * d.0, p.1 + t * d.1);
    let inner = 1.0 / (2.0 * PI * epsilon * epsilon);
    cuts.windows(2)
        .map(|w| {
            let (u, v) = (at(w[0]), at(w[1]));
            let mid = at(0.5 * (w[0] + w[1]));
            if mid.0 * mid.0 + mid.1 * mid.1 < epsilon * epsilon {
                inner * (u.0 * v.1 - u.1 * v.0)
            } else {
                // an outer piece never reaches the origin
                ab_segment_circulation(u, v).unwrap_or(0.0)
            }
        })
        .sum()
}

/// Phases `h × circulation` on every link of `grid`.
pub fn link_phases(grid: &MaskedGrid, kind: PotentialKind, h: f64) -> Result<GaugeLinkField> {
    let nodes = grid.nodes();
    let ends = |k: usize| {
        let l = grid.links()[k];
        ((nodes[l.tail].x, nodes[l.tail].y), (nodes[l.head].x, nodes[l.head].y))
    };
    let phases = match kind {
        PotentialKind::AharonovBohm => (0..grid.links().len())
            .map(|k| {
                let (p, q) = ends(k);
                ab_segment_circulation(p, q).map(|c| h * c)
            })
            .collect::<Result<Vec<_>>>()?,
        PotentialKind::Step { epsilon } => {
            if !(epsilon > 0.0) {
                return Err(Error::InvalidPotential(format!(
                    "step radius must be positive, got {epsilon}"
                )));
            }
            if epsilon >= grid.spec().inradius() {
                return Err(Error::InvalidPotential(format!(
                    "step disc of radius {epsilon} is not contained in the domain"
                )));
            }
            (0..grid.links().len())
                .map(|k| {
                    let (p, q) = ends(k);
                    h * step_segment_circulation(p, q, epsilon)
                })
                .collect()
        }
        PotentialKind::PointFlux => {
            if grid.origin_plaquette().is_none() {
                return Err(Error::InvalidPotential(
                    "point flux needs the plaquette at the origin".into(),
                ));
            }
            // branch cut along the positive x axis: upward links crossing y = 0
            // at x > 0 carry the whole flux
            grid.links()
                .iter()
                .map(|l| {
                    let (a, b) = (nodes[l.tail], nodes[l.head]);
                    let crosses = a.i == b.i && a.y < 0.0 && b.y > 0.0 && a.x > 0.0;
                    if crosses {
                        h
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };
    Ok(GaugeLinkField {
        phases,
        flux: h,
        kind,
        grid: grid.fingerprint(),
    })
}

/// Oriented sum of the four link phases of a plaquette, optionally reduced
/// to `(−π, π]`.
pub fn plaquette_flux(field: &GaugeLinkField, plaquette: &Plaquette, reduce: bool) -> f64 {
    let raw: f64 = plaquette
        .links
        .iter()
        .zip(Plaquette::ORIENTATION)
        .map(|(&l, s)| s * field.phases[l])
        .sum();
    if reduce {
        reduce_angle(raw)
    } else {
        raw
    }
}

/// Maps an angle to `(−π, π]`.
pub fn reduce_angle(t: f64) -> f64 {
    let r = t.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Distance from `h / 2π` to the nearest integer.
pub fn alpha(h: f64) -> f64 {
    let t = h / (2.0 * PI);
    (t - t.round()).abs()
}

/// Area of `[x0, x1] × [y0, y1] ∩ D(0, r)`.
pub fn rect_disc_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    // inclusion-exclusion on quadrant-anchored rectangles [0, X] × [0, Y]
    let corner = |x: f64, y: f64| x.signum() * y.signum() * quadrant_area(x.abs(), y.abs(), r);
    corner(x1, y1) - corner(x0, y1) - corner(x1, y0) + corner(x0, y0)
}

/// Area of `[0, X] × [0, Y] ∩ D(0, r)` for `X, Y ≥ 0`.
fn quadrant_area(x: f64, y: f64, r: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    if x * x + y * y <= r * r {
        return x * y;
    }
    let xm = x.min(r);
    let ym = y.min(r);
    // circle height equals ym at xs
    let xs = (r * r - ym * ym).max(0.0).sqrt().min(xm);
    let prim = |t: f64| 0.5 * (t * (r * r - t * t).max(0.0).sqrt() + r * r * (t / r).asin());
    xs * ym + prim(xm) - prim(xs)
}

/// Analytic `h ×` flux of `curl F` through a plaquette of `grid`.
pub fn expected_plaquette_flux(
    grid: &MaskedGrid,
    plaquette: &Plaquette,
    kind: PotentialKind,
    h: f64,
) -> f64 {
    let s = grid.spacing();
    let (cx, cy) = plaquette.center;
    match kind {
        PotentialKind::AharonovBohm | PotentialKind::PointFlux => {
            if plaquette.contains_origin(s) {
                h
            } else {
                0.0
            }
        }
        PotentialKind::Step { epsilon } => {
            let area = rect_disc_area(cx - 0.5 * s, cx + 0.5 * s, cy - 0.5 * s, cy + 0.5 * s, epsilon);
            h * area / (PI * epsilon * epsilon)
        }
    }
}
