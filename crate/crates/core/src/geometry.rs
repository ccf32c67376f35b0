//! Exact geometric descriptions of the mixed boundary-value problems: tagged
//! boundary curves, radial metric weights, and the domain builders for every
//! family the laboratory studies.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinate tolerance used for endpoint matching and on-curve tests.
pub const COORD_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Point::new(r * theta.cos(), r * theta.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Argument in `(-pi, pi]`.
    pub fn arg(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Reflection axis: the line through `origin` with direction angle `angle`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub origin: Point,
    pub angle: f64,
}

impl Axis {
    /// Axis through the coordinate origin at angle `angle`.
    pub fn through_origin(angle: f64) -> Self {
        Axis {
            origin: Point::ORIGIN,
            angle,
        }
    }

    pub fn direction(&self) -> Point {
        Point::new(self.angle.cos(), self.angle.sin())
    }

    pub fn reflect(&self, p: Point) -> Point {
        let d = self.direction();
        let q = p - self.origin;
        let t = q.dot(d);
        self.origin + d * (2.0 * t) - q
    }

    /// Signed distance of `p` from the axis (positive on the left of the direction).
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.direction().cross(p - self.origin)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

impl BoundaryTag {
    pub fn swapped(self) -> Self {
        match self {
            BoundaryTag::Dirichlet => BoundaryTag::Neumann,
            BoundaryTag::Neumann => BoundaryTag::Dirichlet,
        }
    }

    pub fn short(self) -> char {
        match self {
            BoundaryTag::Dirichlet => 'D',
            BoundaryTag::Neumann => 'N',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveKind {
    Segment {
        p0: Point,
        p1: Point,
    },
    /// Counterclockwise arc from `angle0` to `angle1` (radians, `angle0 < angle1`).
    Arc {
        center: Point,
        radius: f64,
        angle0: f64,
        angle1: f64,
    },
}

impl CurveKind {
    pub fn segment(p0: Point, p1: Point) -> Self {
        CurveKind::Segment { p0, p1 }
    }

    pub fn unit_arc(angle0: f64, angle1: f64) -> Self {
        CurveKind::Arc {
            center: Point::ORIGIN,
            radius: 1.0,
            angle0,
            angle1,
        }
    }

    pub fn start(&self) -> Point {
        self.point_at(0.0)
    }

    pub fn end(&self) -> Point {
        self.point_at(1.0)
    }

    /// Point at normalized parameter `s` in `[0, 1]`.
    pub fn point_at(&self, s: f64) -> Point {
        match *self {
            CurveKind::Segment { p0, p1 } => {
                if s == 0.0 {
                    p0
                } else if s == 1.0 {
                    p1
                } else {
                    p0 + (p1 - p0) * s
                }
            }
            CurveKind::Arc {
                center,
                radius,
                angle0,
                angle1,
            } => {
                let a = if s == 1.0 {
                    angle1
                } else {
                    angle0 + (angle1 - angle0) * s
                };
                center + Point::polar(radius, a)
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            CurveKind::Segment { p0, p1 } => p0.dist(p1),
            CurveKind::Arc {
                radius,
                angle0,
                angle1,
                ..
            } => radius * (angle1 - angle0),
        }
    }

    fn speed(&self) -> f64 {
        self.length()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CurveKind::Segment { p0, p1 } => {
                if !(p0.dist(p1) > COORD_TOL) {
                    return Err(Error::Geometry(format!(
                        "degenerate segment from ({}, {}) to ({}, {})",
                        p0.x, p0.y, p1.x, p1.y
                    )));
                }
            }
            CurveKind::Arc {
                radius,
                angle0,
                angle1,
                ..
            } => {
                if !(radius > 0.0) || !(angle0 < angle1) {
                    return Err(Error::Geometry(format!(
                        "arc needs positive radius and angle0 < angle1 (r={radius}, {angle0}..{angle1})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn reflect(&self, axis: &Axis) -> CurveKind {
        match *self {
            CurveKind::Segment { p0, p1 } => CurveKind::Segment {
                p0: axis.reflect(p0),
                p1: axis.reflect(p1),
            },
            CurveKind::Arc {
                center,
                radius,
                angle0,
                angle1,
            } => {
                let (a0, a1) = normalize_range(2.0 * axis.angle - angle1, 2.0 * axis.angle - angle0);
                CurveKind::Arc {
                    center: axis.reflect(center),
                    radius,
                    angle0: a0,
                    angle1: a1,
                }
            }
        }
    }

    /// Point reflection through `center`.
    pub fn point_reflect(&self, c: Point) -> CurveKind {
        let map = |p: Point| c * 2.0 - p;
        match *self {
            CurveKind::Segment { p0, p1 } => CurveKind::Segment {
                p0: map(p0),
                p1: map(p1),
            },
            CurveKind::Arc {
                center,
                radius,
                angle0,
                angle1,
            } => {
                let (a0, a1) = normalize_range(angle0 + PI, angle1 + PI);
                CurveKind::Arc {
                    center: map(center),
                    radius,
                    angle0: a0,
                    angle1: a1,
                }
            }
        }
    }

    /// Distance from `p` to the curve.
    pub fn distance(&self, p: Point) -> f64 {
        match *self {
            CurveKind::Segment { p0, p1 } => point_segment_distance(p, p0, p1),
            CurveKind::Arc {
                center,
                radius,
                angle0,
                angle1,
            } => {
                let q = p - center;
                if angle_in_range(q.arg(), angle0, angle1, 1e-12) {
                    (q.norm() - radius).abs()
                } else {
                    p.dist(self.start()).min(p.dist(self.end()))
                }
            }
        }
    }

    /// Orthogonal projection of `p` onto the curve's supporting line or circle.
    pub fn project(&self, p: Point) -> Point {
        match *self {
            CurveKind::Segment { p0, p1 } => {
                let d = p1 - p0;
                let t = ((p - p0).dot(d) / d.dot(d)).clamp(0.0, 1.0);
                p0 + d * t
            }
            CurveKind::Arc { center, radius, .. } => {
                let q = p - center;
                center + Point::polar(radius, q.arg())
            }
        }
    }

    /// Points along the curve, both endpoints included, with spacing at most `h`.
    /// Arc points are evaluated from the polar formula, so they lie on the circle.
    pub fn sample(&self, h: f64) -> Vec<Point> {
        let n = ((self.length() / h).ceil() as usize).max(1);
        (0..=n).map(|i| self.point_at(i as f64 / n as f64)).collect()
    }

    /// Arclength of the curve in the conformal metric `f(|z|) |dz|^2`.
    pub fn weighted_length(&self, weight: &MetricWeight) -> f64 {
        if weight.is_flat() {
            return self.length();
        }
        let speed = self.speed();
        let integrand = |s: f64| weight.density(self.point_at(s).norm()).sqrt() * speed;
        adaptive_simpson(&integrand, 0.0, 1.0, 1e-10)
    }

    pub fn reversed(&self) -> CurveKind {
        match *self {
            CurveKind::Segment { p0, p1 } => CurveKind::Segment { p0: p1, p1: p0 },
            ref arc => arc.clone(),
        }
    }
}

fn normalize_range(a0: f64, a1: f64) -> (f64, f64) {
    let shift = a0.rem_euclid(TAU) - a0;
    (a0 + shift, a1 + shift)
}

/// Whether angle `a` lies in `[a0, a1]` modulo `2 pi`.
pub fn angle_in_range(a: f64, a0: f64, a1: f64, tol: f64) -> bool {
    if a1 - a0 >= TAU - tol {
        return true;
    }
    let rel = (a - a0).rem_euclid(TAU);
    rel <= a1 - a0 + tol || rel >= TAU - tol
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    #[serde(flatten)]
    pub kind: CurveKind,
    pub tag: BoundaryTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Curve {
    pub fn new(kind: CurveKind, tag: BoundaryTag) -> Self {
        Curve {
            kind,
            tag,
            label: None,
        }
    }

    pub fn labeled(kind: CurveKind, tag: BoundaryTag, label: &str) -> Self {
        Curve {
            kind,
            tag,
            label: Some(label.to_string()),
        }
    }

    pub fn swapped(&self) -> Curve {
        Curve {
            tag: self.tag.swapped(),
            ..self.clone()
        }
    }
}

/// Conformal density `f(r)` of a radial metric `ds^2 = f(|z|) |dz|^2`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricWeight {
    #[default]
    Flat,
    /// Round sphere in stereographic coordinates, `f(r) = 4 / (1 + r^2)^2`.
    Spherical,
    /// `f(r) = sum_k coeffs[k] r^k`.
    Polynomial { coeffs: Vec<f64> },
}

impl MetricWeight {
    pub fn density(&self, r: f64) -> f64 {
        match self {
            MetricWeight::Flat => 1.0,
            MetricWeight::Spherical => {
                let s = 1.0 + r * r;
                4.0 / (s * s)
            }
            MetricWeight::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
            }
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, MetricWeight::Flat)
    }

    pub fn validate(&self) -> Result<()> {
        if let MetricWeight::Polynomial { coeffs } = self {
            if coeffs.is_empty() {
                return Err(Error::Geometry("polynomial weight needs coefficients".into()));
            }
            for i in 0..=1000 {
                let r = i as f64 / 1000.0;
                let f = self.density(r);
                if !(f > 0.0) || !f.is_finite() {
                    return Err(Error::Geometry(format!(
                        "weight must be positive on [0, 1]; f({r}) = {f}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub p0: Point,
    pub p1: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub curves: Vec<Curve>,
    #[serde(default)]
    pub weight: MetricWeight,
    #[serde(default = "one")]
    pub sheets: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slit: Option<Segment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symmetry_hints: Vec<Axis>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

fn one() -> u8 {
    1
}

impl DomainSpec {
    pub fn new(curves: Vec<Curve>, weight: MetricWeight) -> Result<Self> {
        let spec = DomainSpec {
            curves,
            weight,
            sheets: 1,
            slit: None,
            symmetry_hints: Vec::new(),
            metadata: BTreeMap::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.curves.is_empty() {
            return Err(Error::Geometry("domain has no boundary curves".into()));
        }
        if self.sheets != 1 && self.sheets != 2 {
            return Err(Error::Geometry(format!("unsupported sheet count {}", self.sheets)));
        }
        for c in &self.curves {
            c.kind.validate()?;
        }
        self.weight.validate()?;
        self.check_closed_loop()?;
        if self.sheets == 2 {
            let slit = self
                .slit
                .ok_or_else(|| Error::Geometry("two-sheeted domain needs a slit".into()))?;
            for p in [slit.p0, slit.p1] {
                let on_boundary = self.curves.iter().any(|c| c.kind.distance(p) <= 1e-12);
                if !(on_boundary || p.norm() <= COORD_TOL) {
                    return Err(Error::Geometry(
                        "slit endpoints must lie on the boundary or at the branch point".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn endpoint_key(&self, kind: &CurveKind, at_end: bool) -> (Point, u8) {
        let p = if at_end { kind.end() } else { kind.start() };
        let sheet = match (self.sheets, kind) {
            (2, CurveKind::Arc { angle0, angle1, .. }) => {
                let a = if at_end { *angle1 } else { *angle0 };
                let lifted = (a + 1e-9).rem_euclid(2.0 * TAU);
                (lifted / TAU).floor() as u8
            }
            _ => 0,
        };
        (p, sheet)
    }

    fn check_closed_loop(&self) -> Result<()> {
        let n = self.curves.len();
        let keys: Vec<[(Point, u8); 2]> = self
            .curves
            .iter()
            .map(|c| [self.endpoint_key(&c.kind, false), self.endpoint_key(&c.kind, true)])
            .collect();
        let same = |a: (Point, u8), b: (Point, u8)| a.1 == b.1 && a.0.dist(b.0) <= COORD_TOL;
        if n == 1 {
            if same(keys[0][0], keys[0][1]) {
                return Ok(());
            }
            return Err(Error::Geometry("single boundary curve is not closed".into()));
        }
        // every endpoint must be shared with exactly one other curve endpoint
        for (i, ki) in keys.iter().enumerate() {
            for (e, &k) in ki.iter().enumerate() {
                let mut count = 0;
                for (j, kj) in keys.iter().enumerate() {
                    for (f, &other) in kj.iter().enumerate() {
                        if (i, e) != (j, f) && same(k, other) {
                            count += 1;
                        }
                    }
                }
                if count != 1 {
                    return Err(Error::Geometry(format!(
                        "curve {i} endpoint ({:.6}, {:.6}) is shared by {count} other endpoints, expected 1",
                        k.0.x, k.0.y
                    )));
                }
            }
        }
        // walk the loop
        let mut visited = vec![false; n];
        let mut cur = 0usize;
        let mut exit = keys[0][1];
        visited[0] = true;
        for _ in 1..n {
            let next = (0..n).find_map(|j| {
                if visited[j] {
                    return None;
                }
                if same(keys[j][0], exit) {
                    Some((j, keys[j][1]))
                } else if same(keys[j][1], exit) {
                    Some((j, keys[j][0]))
                } else {
                    None
                }
            });
            match next {
                Some((j, e)) => {
                    visited[j] = true;
                    cur = j;
                    exit = e;
                }
                None => {
                    return Err(Error::Geometry(format!(
                        "boundary curves do not form a single loop (stuck after curve {cur})"
                    )))
                }
            }
        }
        if !same(exit, keys[0][0]) {
            return Err(Error::Geometry("boundary loop does not close".into()));
        }
        Ok(())
    }

    /// Same geometry with every tag exchanged.
    pub fn swapped(&self) -> DomainSpec {
        DomainSpec {
            curves: self.curves.iter().map(Curve::swapped).collect(),
            ..self.clone()
        }
    }

    /// Curves ordered along the boundary loop, each oriented head to tail.
    pub fn ordered_loop(&self) -> Vec<CurveKind> {
        let n = self.curves.len();
        let mut out = Vec::with_capacity(n);
        let mut used = vec![false; n];
        used[0] = true;
        out.push(self.curves[0].kind.clone());
        let mut tail = self.curves[0].kind.end();
        for _ in 1..n {
            let mut found = None;
            for (j, c) in self.curves.iter().enumerate() {
                if used[j] {
                    continue;
                }
                if c.kind.start().dist(tail) <= 1e-9 {
                    found = Some((j, false));
                    break;
                }
                if c.kind.end().dist(tail) <= 1e-9 {
                    found = Some((j, true));
                    break;
                }
            }
            let Some((j, rev)) = found else { break };
            used[j] = true;
            let k = &self.curves[j].kind;
            tail = if rev { k.start() } else { k.end() };
            out.push(if rev { reversed_kind(k) } else { k.clone() });
        }
        out
    }

    /// Tag of the boundary curve closest to `p`, if within `tol`.
    pub fn tag_at(&self, p: Point, tol: f64) -> Option<BoundaryTag> {
        self.nearest_curve(p)
            .filter(|&(_, d)| d <= tol)
            .map(|(i, _)| self.curves[i].tag)
    }

    pub fn nearest_curve(&self, p: Point) -> Option<(usize, f64)> {
        self.curves
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.kind.distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Multiset equality of tagged curves (up to curve orientation, 1e-9 on coordinates).
    pub fn same_tagged_curves(&self, other: &DomainSpec) -> bool {
        if self.curves.len() != other.curves.len() {
            return false;
        }
        let mut used = vec![false; other.curves.len()];
        'outer: for c in &self.curves {
            for (j, d) in other.curves.iter().enumerate() {
                if !used[j] && c.tag == d.tag && same_curve_geometry(&c.kind, &d.kind) {
                    used[j] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }

    pub fn perimeter(&self) -> f64 {
        self.curves.iter().map(|c| c.kind.weighted_length(&self.weight)).sum()
    }
}

fn reversed_kind(k: &CurveKind) -> CurveKind {
    match *k {
        CurveKind::Segment { p0, p1 } => CurveKind::Segment { p0: p1, p1: p0 },
        // arcs keep the CCW parameterization; callers that need direction use endpoints
        CurveKind::Arc { .. } => k.clone(),
    }
}

fn same_curve_geometry(a: &CurveKind, b: &CurveKind) -> bool {
    let tol = 1e-9;
    let ends_match = (a.start().dist(b.start()) < tol && a.end().dist(b.end()) < tol)
        || (a.start().dist(b.end()) < tol && a.end().dist(b.start()) < tol);
    ends_match && b.distance(a.point_at(0.5)) < tol
}

/// Total (weighted) boundary length per tag: `(L_D, L_N)`.
pub fn boundary_lengths(spec: &DomainSpec) -> (f64, f64) {
    let mut ld = 0.0;
    let mut ln = 0.0;
    for c in &spec.curves {
        let l = c.kind.weighted_length(&spec.weight);
        match c.tag {
            BoundaryTag::Dirichlet => ld += l,
            BoundaryTag::Neumann => ln += l,
        }
    }
    (ld, ln)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfDiskVariant {
    I,
    II,
}

/// Unit upper half-disk. Variant I puts Dirichlet on `[-1, 0]` and on the middle
/// arc `|arg z - pi/2| < pi/4`, Neumann elsewhere; variant II swaps every tag.
pub fn build_half_disk(variant: HalfDiskVariant, weight: MetricWeight) -> DomainSpec {
    use BoundaryTag::*;
    let curves = vec![
        Curve::labeled(
            CurveKind::segment(Point::new(-1.0, 0.0), Point::ORIGIN),
            Dirichlet,
            "left_radius",
        ),
        Curve::labeled(
            CurveKind::segment(Point::ORIGIN, Point::new(1.0, 0.0)),
            Neumann,
            "right_radius",
        ),
        Curve::labeled(CurveKind::unit_arc(0.0, FRAC_PI_4), Neumann, "right_arc"),
        Curve::labeled(
            CurveKind::unit_arc(FRAC_PI_4, 3.0 * FRAC_PI_4),
            Dirichlet,
            "middle_arc",
        ),
        Curve::labeled(CurveKind::unit_arc(3.0 * FRAC_PI_4, PI), Neumann, "left_arc"),
    ];
    let mut spec = DomainSpec {
        curves,
        weight,
        sheets: 1,
        slit: None,
        symmetry_hints: vec![Axis::through_origin(FRAC_PI_2)],
        metadata: BTreeMap::new(),
    };
    spec.metadata.insert("family".into(), "half_disk".into());
    spec.metadata
        .insert("variant".into(), format!("{variant:?}"));
    let spec = match variant {
        HalfDiskVariant::I => spec,
        HalfDiskVariant::II => spec.swapped(),
    };
    debug_assert!(spec.validate().is_ok());
    spec
}

/// The two swapped mixed problems on the unit disk whose boundary is split into
/// consecutive arcs of lengths `(alpha, beta, pi - alpha, pi - beta)` starting at
/// angle 0 and tagged `(D, N, D, N)`. The second spec has all tags exchanged.
pub fn build_disk_partition(alpha: f64, beta: f64) -> Result<(DomainSpec, DomainSpec)> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v <= PI) {
            return Err(Error::Geometry(format!("{name} = {v} outside (0, pi]")));
        }
    }
    use BoundaryTag::*;
    let cuts = [0.0, alpha, alpha + beta, PI + beta, TAU];
    let tags = [Dirichlet, Neumann, Dirichlet, Neumann];
    let curves: Vec<Curve> = (0..4)
        .filter(|&i| cuts[i + 1] - cuts[i] > 1e-14)
        .map(|i| Curve::new(CurveKind::unit_arc(cuts[i], cuts[i + 1]), tags[i]))
        .collect();
    let mut spec = DomainSpec {
        curves,
        weight: MetricWeight::Flat,
        sheets: 1,
        slit: None,
        symmetry_hints: Vec::new(),
        metadata: BTreeMap::new(),
    };
    spec.metadata.insert("family".into(), "disk_partition".into());
    spec.metadata.insert(
        "arrangement".into(),
        "D:[0,a] N:[a,a+b] D:[a+b,pi+b] N:[pi+b,2pi]".into(),
    );
    spec.metadata.insert("alpha".into(), format!("{alpha:.17e}"));
    spec.metadata.insert("beta".into(), format!("{beta:.17e}"));
    spec.validate()?;
    let swapped = spec.swapped();
    Ok((spec, swapped))
}

/// A planar isometry fixing the common circle center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Isometry {
    Rotation { center: Point, angle: f64 },
    Reflection(Axis),
}

impl Isometry {
    pub fn apply(&self, p: Point) -> Point {
        match *self {
            Isometry::Rotation { center, angle } => {
                let q = p - center;
                let (s, c) = angle.sin_cos();
                center + Point::new(c * q.x - s * q.y, s * q.x + c * q.y)
            }
            Isometry::Reflection(axis) => axis.reflect(p),
        }
    }
}

/// Search for an isometry of the circle carrying the tagged arcs of `a` onto the
/// tagged arcs of `b`. Both specs must consist of arcs of one common circle.
/// Candidates are the rotations and reflections mapping an arc endpoint of `a`
/// onto an arc endpoint of `b`; matching uses tolerance 1e-9.
pub fn find_circle_isometry(a: &DomainSpec, b: &DomainSpec) -> Result<Option<Isometry>> {
    let circle = |s: &DomainSpec| -> Result<(Point, f64)> {
        let mut common: Option<(Point, f64)> = None;
        for c in &s.curves {
            match c.kind {
                CurveKind::Arc { center, radius, .. } => match common {
                    None => common = Some((center, radius)),
                    Some((c0, r0)) => {
                        if c0.dist(center) > 1e-9 || (r0 - radius).abs() > 1e-9 {
                            return Err(Error::Geometry("arcs are not on a common circle".into()));
                        }
                    }
                },
                CurveKind::Segment { .. } => {
                    return Err(Error::Geometry("isometry search needs an all-arc boundary".into()))
                }
            }
        }
        common.ok_or_else(|| Error::Geometry("empty boundary".into()))
    };
    let (ca, ra) = circle(a)?;
    let (cb, rb) = circle(b)?;
    if ca.dist(cb) > 1e-9 || (ra - rb).abs() > 1e-9 {
        return Ok(None);
    }
    let ends = |s: &DomainSpec| -> Vec<f64> {
        s.curves
            .iter()
            .map(|c| match c.kind {
                CurveKind::Arc { angle0, .. } => angle0,
                _ => unreachable!(),
            })
            .collect()
    };
    let ea = ends(a);
    let eb = ends(b);
    let e0 = ea[0];
    let mut candidates = Vec::new();
    for &f in &eb {
        candidates.push(Isometry::Rotation {
            center: ca,
            angle: f - e0,
        });
        candidates.push(Isometry::Reflection(Axis {
            origin: ca,
            angle: 0.5 * (f + e0),
        }));
    }
    let on_b_endpoint = |p: Point| {
        b.curves
            .iter()
            .any(|c| c.kind.start().dist(p) < 1e-9 || c.kind.end().dist(p) < 1e-9)
    };
    for g in candidates {
        let ok = a.curves.iter().all(|c| {
            let mid = g.apply(c.kind.point_at(0.5));
            b.tag_at(mid, 1e-9) == Some(c.tag)
                && on_b_endpoint(g.apply(c.kind.start()))
                && on_b_endpoint(g.apply(c.kind.end()))
        });
        if ok {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

/// Which part of the block curve a piece belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaPart {
    /// Pieces of the first part; Dirichlet on the first copy.
    First,
    /// Pieces of the second part; Neumann on the first copy.
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPiece {
    #[serde(flatten)]
    pub kind: CurveKind,
    pub part: GammaPart,
}

/// Region bounded by the radii `[0, z1]`, `[0, z2]` of the sector `0 <= arg z <= alpha`
/// and a curve from `z1` to `z2` made of the listed pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorialBlock {
    pub alpha: f64,
    pub z1: Point,
    pub z2: Point,
    pub gamma1: Vec<BlockPiece>,
}

impl SectorialBlock {
    /// Quarter-arc block whose domain is the unit half-disk.
    pub fn half_disk() -> Self {
        SectorialBlock {
            alpha: FRAC_PI_4,
            z1: Point::new(1.0, 0.0),
            z2: Point::polar(1.0, FRAC_PI_4),
            gamma1: vec![BlockPiece {
                kind: CurveKind::unit_arc(0.0, FRAC_PI_4),
                part: GammaPart::Second,
            }],
        }
    }

    /// Straight block whose domain is the triangle with vertices `-1, 1, i`.
    pub fn triangle() -> Self {
        let z2 = Point::new(0.5, 0.5);
        SectorialBlock {
            alpha: FRAC_PI_4,
            z1: Point::new(1.0, 0.0),
            z2,
            gamma1: vec![BlockPiece {
                kind: CurveKind::segment(Point::new(1.0, 0.0), z2),
                part: GammaPart::Second,
            }],
        }
    }

    /// Straight block whose domain is the rectangle `[-1, 1] x [0, 1]`.
    pub fn rectangle() -> Self {
        let z2 = Point::new(1.0, 1.0);
        SectorialBlock {
            alpha: FRAC_PI_4,
            z1: Point::new(1.0, 0.0),
            z2,
            gamma1: vec![BlockPiece {
                kind: CurveKind::segment(Point::new(1.0, 0.0), z2),
                part: GammaPart::First,
            }],
        }
    }

    /// Block of a square of side `side` centered at the origin: the full square
    /// is the union of eight reflected copies.
    pub fn square_eighth(side: f64) -> Self {
        let a = 0.5 * side;
        let z2 = Point::new(a, a);
        SectorialBlock {
            alpha: FRAC_PI_4,
            z1: Point::new(a, 0.0),
            z2,
            gamma1: vec![BlockPiece {
                kind: CurveKind::segment(Point::new(a, 0.0), z2),
                part: GammaPart::First,
            }],
        }
    }

    /// Pieces oriented from `z1` to `z2`.
    fn oriented_pieces(&self) -> Result<Vec<(CurveKind, GammaPart, bool)>> {
        let mut out = Vec::new();
        let mut tail = self.z1;
        for (i, piece) in self.gamma1.iter().enumerate() {
            let (s, e) = (piece.kind.start(), piece.kind.end());
            if s.dist(tail) <= 1e-12 {
                tail = e;
                out.push((piece.kind.clone(), piece.part, false));
            } else if e.dist(tail) <= 1e-12 {
                tail = s;
                out.push((piece.kind.clone(), piece.part, true));
            } else {
                return Err(Error::Geometry(format!(
                    "block curve piece {i} does not continue the chain from z1"
                )));
            }
        }
        if tail.dist(self.z2) > 1e-12 {
            return Err(Error::Geometry("block curve does not end at z2".into()));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < FRAC_PI_2) {
            return Err(Error::Geometry(format!("alpha = {} outside (0, pi/2)", self.alpha)));
        }
        if self.z1.norm() <= COORD_TOL || self.z2.norm() <= COORD_TOL {
            return Err(Error::Geometry("z1 and z2 must be nonzero".into()));
        }
        if self.z1.y.abs() > COORD_TOL || self.z1.x <= 0.0 {
            return Err(Error::Geometry("z1 must have argument 0".into()));
        }
        if (self.z2.arg() - self.alpha).abs() > 1e-12 {
            return Err(Error::Geometry("z2 must have argument alpha".into()));
        }
        if self.gamma1.is_empty() {
            return Err(Error::Geometry("block curve is empty".into()));
        }
        for p in &self.gamma1 {
            p.kind.validate()?;
        }
        let pieces = self.oriented_pieces()?;
        // polyline samples of the block curve, strictly inside the sector apart from z1, z2
        let mut poly: Vec<Point> = vec![self.z1];
        for (kind, _, rev) in &pieces {
            let mut pts = kind.sample(kind.length() / 32.0);
            if *rev {
                pts.reverse();
            }
            poly.extend_from_slice(&pts[1..]);
        }
        for (i, v) in poly.iter().enumerate() {
            if v.norm() <= COORD_TOL {
                return Err(Error::Geometry("block curve passes through the origin".into()));
            }
            let a = v.arg();
            let interior = i != 0 && i != poly.len() - 1;
            let inside = if interior {
                a > 1e-12 && a < self.alpha - 1e-12
            } else {
                a >= -1e-12 && a <= self.alpha + 1e-12
            };
            if !inside {
                return Err(Error::Geometry(format!(
                    "block curve vertex ({:.6}, {:.6}) leaves the sector",
                    v.x, v.y
                )));
            }
        }
        let m = poly.len() - 1;
        for i in 0..m {
            for j in (i + 2)..m {
                if i == 0 && j == m - 1 && m > 2 && poly[0].dist(poly[m]) < 1e-12 {
                    continue;
                }
                if segments_intersect(poly[i], poly[i + 1], poly[j], poly[j + 1]) {
                    return Err(Error::Geometry(format!(
                        "block curve self-intersects (segments {i} and {j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o = |p: Point, q: Point, r: Point| (q - p).cross(r - p);
    let d1 = o(c, d, a);
    let d2 = o(c, d, b);
    let d3 = o(a, b, c);
    let d4 = o(a, b, d);
    if d1 == 0.0 && d2 == 0.0 {
        // collinear: overlap of the projections
        let dir = b - a;
        let (ta, tb) = (0.0, dir.dot(dir));
        let (tc, td) = ((c - a).dot(dir), (d - a).dot(dir));
        return tc.max(td) >= ta && tc.min(td) <= tb;
    }
    // touching counts: callers only compare non-adjacent segments
    (d1 * d2 <= 0.0) && (d3 * d4 <= 0.0)
}

/// Domain glued from four reflected copies of a sectorial block, with the
/// Dirichlet part `G11 + G22 + G32 + G41 + [0, S_{2a} z1]` and the Neumann part
/// its complement (`swapped` exchanges them). Copy `j` of piece part `m` is
/// labeled `gamma_j_m`.
pub fn build_sectorial_domain(block: &SectorialBlock, swapped: bool) -> Result<DomainSpec> {
    use BoundaryTag::*;
    block.validate()?;
    let a = block.alpha;
    let s_a = Axis::through_origin(a);
    let s_2a = Axis::through_origin(2.0 * a);
    // tag of part m on copy j, following the Dirichlet set G11, G22, G32, G41
    let tag_of = |copy: usize, part: GammaPart| -> BoundaryTag {
        match (copy, part) {
            (1, GammaPart::First) | (4, GammaPart::First) => Dirichlet,
            (2, GammaPart::Second) | (3, GammaPart::Second) => Dirichlet,
            _ => Neumann,
        }
    };
    let part_idx = |p: GammaPart| match p {
        GammaPart::First => 1,
        GammaPart::Second => 2,
    };
    let mut curves = vec![Curve::labeled(
        CurveKind::segment(Point::ORIGIN, block.z1),
        Neumann,
        "radius_start",
    )];
    for piece in &block.gamma1 {
        let copies = [
            piece.kind.clone(),
            piece.kind.reflect(&s_a),
            piece.kind.reflect(&s_a).reflect(&s_2a),
            piece.kind.reflect(&s_2a),
        ];
        for (j, kind) in copies.into_iter().enumerate() {
            let copy = j + 1;
            curves.push(Curve::labeled(
                kind,
                tag_of(copy, piece.part),
                &format!("gamma_{copy}_{}", part_idx(piece.part)),
            ));
        }
    }
    curves.push(Curve::labeled(
        CurveKind::segment(s_2a.reflect(block.z1), Point::ORIGIN),
        Dirichlet,
        "radius_end",
    ));
    let mut spec = DomainSpec {
        curves,
        weight: MetricWeight::Flat,
        sheets: 1,
        slit: None,
        symmetry_hints: vec![s_2a],
        metadata: BTreeMap::new(),
    };
    spec.metadata.insert("family".into(), "sectorial".into());
    spec.metadata.insert("alpha".into(), format!("{a:.17e}"));
    spec.validate()?;
    Ok(if swapped { spec.swapped() } else { spec })
}

/// The axisymmetric and centrally symmetric problems generated by a half domain
/// lying on one side of `axis`.
///
/// The curves of `half` lying on the axis form the interval `d`; their tags are
/// ignored. Flat halves are mirrored across the axis and point-reflected through
/// the midpoint of `d`. Spherical halves (axis through the origin) use the
/// rotation by `pi` of the sphere about the spherical midpoint of `d`.
pub fn build_symmetry_pair(half: &DomainSpec, axis: &Axis) -> Result<(DomainSpec, DomainSpec)> {
    half.validate()?;
    let on_axis = |k: &CurveKind| {
        matches!(k, CurveKind::Segment { p0, p1 }
            if axis.signed_distance(*p0).abs() <= 1e-12 && axis.signed_distance(*p1).abs() <= 1e-12)
    };
    let axis_curves: Vec<&Curve> = half.curves.iter().filter(|c| on_axis(&c.kind)).collect();
    if axis_curves.is_empty() {
        return Err(Error::Geometry("half domain does not meet the symmetry axis".into()));
    }
    // d must be a single interval: project endpoints onto the axis direction
    let dir = axis.direction();
    let mut ts: Vec<(f64, f64)> = axis_curves
        .iter()
        .map(|c| {
            let (s, e) = (c.kind.start(), c.kind.end());
            let (a, b) = ((s - axis.origin).dot(dir), (e - axis.origin).dot(dir));
            (a.min(b), a.max(b))
        })
        .collect();
    ts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in ts.windows(2) {
        if (w[1].0 - w[0].1).abs() > 1e-12 {
            return Err(Error::Geometry("half domain meets the axis in more than one interval".into()));
        }
    }
    let d0 = axis.origin + dir * ts[0].0;
    let d1 = axis.origin + dir * ts[ts.len() - 1].1;
    let rest: Vec<&Curve> = half.curves.iter().filter(|c| !on_axis(&c.kind)).collect();

    // the half must lie on one side of the axis
    let side = rest
        .iter()
        .flat_map(|c| c.kind.sample(c.kind.length() / 16.0))
        .map(|p| axis.signed_distance(p))
        .fold(0.0f64, |acc, s| if s.abs() > acc.abs() { s } else { acc });
    for c in &rest {
        for p in c.kind.sample(c.kind.length() / 16.0) {
            if axis.signed_distance(p) * side.signum() < -1e-12 {
                return Err(Error::Geometry(
                    "half domain crosses the axis; its reflected copy would overlap it".into(),
                ));
            }
        }
    }

    let mirrored: Vec<Curve> = rest
        .iter()
        .map(|c| Curve {
            kind: c.kind.reflect(axis),
            tag: c.tag,
            label: c.label.as_ref().map(|l| format!("{l}_mirror")),
        })
        .collect();

    let central: Vec<Curve> = match &half.weight {
        MetricWeight::Flat => {
            let o = d0.midpoint(d1);
            rest.iter()
                .map(|c| Curve {
                    kind: c.kind.point_reflect(o),
                    tag: c.tag,
                    label: c.label.as_ref().map(|l| format!("{l}_central")),
                })
                .collect()
        }
        MetricWeight::Spherical => {
            if axis.origin.norm() > 1e-12 && axis.signed_distance(Point::ORIGIN).abs() > 1e-12 {
                return Err(Error::Geometry(
                    "spherical symmetry pairs need an axis through the origin".into(),
                ));
            }
            let rot = SphereHalfTurn::about_midpoint(d0, d1);
            rest.iter()
                .map(|c| {
                    Ok(Curve {
                        kind: rot.map_curve(&c.kind)?,
                        tag: c.tag,
                        label: c.label.as_ref().map(|l| format!("{l}_central")),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        MetricWeight::Polynomial { .. } => {
            return Err(Error::Geometry(
                "central symmetry is only available for flat and spherical weights".into(),
            ))
        }
    };

    let build = |other: Vec<Curve>, kind: &str| -> Result<DomainSpec> {
        let mut curves: Vec<Curve> = rest.iter().map(|c| (*c).clone()).collect();
        curves.extend(other);
        let mut spec = DomainSpec {
            curves,
            weight: half.weight.clone(),
            sheets: 1,
            slit: None,
            symmetry_hints: if kind == "axisymmetric" { vec![*axis] } else { Vec::new() },
            metadata: half.metadata.clone(),
        };
        spec.metadata.insert("symmetry".into(), kind.into());
        spec.validate()?;
        Ok(spec)
    };
    Ok((build(mirrored, "axisymmetric")?, build(central, "central")?))
}

/// Rotation of the unit sphere by `pi` about a point, expressed in stereographic
/// coordinates.
#[derive(Clone, Copy, Debug)]
struct SphereHalfTurn {
    n: [f64; 3],
}

fn to_sphere(p: Point) -> [f64; 3] {
    let r2 = p.dot(p);
    let s = 1.0 + r2;
    [2.0 * p.x / s, 2.0 * p.y / s, (r2 - 1.0) / s]
}

fn from_sphere(v: [f64; 3]) -> Point {
    let s = 1.0 - v[2];
    Point::new(v[0] / s, v[1] / s)
}

impl SphereHalfTurn {
    fn about_midpoint(a: Point, b: Point) -> Self {
        let (va, vb) = (to_sphere(a), to_sphere(b));
        let m = [va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]];
        let len = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
        if len < 1e-12 {
            // antipodal ends: the diameter through the origin, bisected at the origin
            return SphereHalfTurn {
                n: to_sphere(a.midpoint(b)),
            };
        }
        SphereHalfTurn {
            n: [m[0] / len, m[1] / len, m[2] / len],
        }
    }

    fn map(&self, p: Point) -> Point {
        let v = to_sphere(p);
        let d = v[0] * self.n[0] + v[1] * self.n[1] + v[2] * self.n[2];
        let w = [
            2.0 * d * self.n[0] - v[0],
            2.0 * d * self.n[1] - v[1],
            2.0 * d * self.n[2] - v[2],
        ];
        let q = from_sphere(w);
        // clean rounding noise so images of exact points stay exact
        Point::new(snap_small(q.x), snap_small(q.y))
    }

    /// Image of a segment or arc; circles map to circles (or lines).
    fn map_curve(&self, k: &CurveKind) -> Result<CurveKind> {
        let a = self.map(k.start());
        let m = self.map(k.point_at(0.5));
        let b = self.map(k.end());
        curve_through(a, m, b)
    }
}

fn snap_small(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-13 {
        r
    } else {
        v
    }
}

/// Segment or arc through three points (start, interior, end).
pub fn curve_through(a: Point, m: Point, b: Point) -> Result<CurveKind> {
    let det = (m - a).cross(b - a);
    let scale = (m - a).norm() * (b - a).norm();
    if det.abs() <= 1e-12 * scale {
        return Ok(CurveKind::segment(a, b));
    }
    // circumcenter
    let d = 2.0 * (a.x * (m.y - b.y) + m.x * (b.y - a.y) + b.x * (a.y - m.y));
    let sa = a.dot(a);
    let sm = m.dot(m);
    let sb = b.dot(b);
    let c = Point::new(
        (sa * (m.y - b.y) + sm * (b.y - a.y) + sb * (a.y - m.y)) / d,
        (sa * (b.x - m.x) + sm * (a.x - b.x) + sb * (m.x - a.x)) / d,
    );
    let c = Point::new(snap_small(c.x), snap_small(c.y));
    let r = c.dist(a);
    let r = snap_small(r);
    let ta = (a - c).arg();
    let tb = (b - c).arg();
    let tm = (m - c).arg();
    // choose the CCW range from one endpoint to the other that contains m
    let ccw = |from: f64, to: f64| {
        let mut t = to;
        while t <= from {
            t += TAU;
        }
        t
    };
    let (a0, a1) = {
        let end = ccw(ta, tb);
        let mid = ccw(ta, tm);
        if mid < end {
            (ta, end)
        } else {
            (tb, ccw(tb, ta))
        }
    };
    let (a0, a1) = normalize_range(a0, a1);
    let arc = CurveKind::Arc {
        center: c,
        radius: r,
        angle0: snap_angle(a0),
        angle1: snap_angle(a1),
    };
    arc.validate()?;
    Ok(arc)
}

fn snap_angle(a: f64) -> f64 {
    let q = a / FRAC_PI_4;
    let r = q.round();
    if (q - r).abs() < 1e-12 {
        r * FRAC_PI_4
    } else {
        a
    }
}

/// Unit disk with four alternating quarter arcs; the first arc, centered on the
/// ray at angle `theta`, is Neumann.
pub fn build_quarter_arc_disk(theta: f64) -> DomainSpec {
    use BoundaryTag::*;
    let tags = [Neumann, Dirichlet, Neumann, Dirichlet];
    let curves = (0..4)
        .map(|k| {
            let a0 = theta - FRAC_PI_4 + k as f64 * FRAC_PI_2;
            let (a0, a1) = normalize_range(a0, a0 + FRAC_PI_2);
            Curve::new(CurveKind::unit_arc(a0, a1), tags[k])
        })
        .collect();
    let mut spec = DomainSpec {
        curves,
        weight: MetricWeight::Flat,
        sheets: 1,
        slit: None,
        symmetry_hints: vec![Axis::through_origin(theta)],
        metadata: BTreeMap::new(),
    };
    spec.metadata.insert("family".into(), "quarter_arc_disk".into());
    spec
}

/// Symmetries of the branched double cover, acting on the lifted angle `phi`
/// in `[0, 4 pi)` measured from the slit ray.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverSymmetry {
    /// `phi -> 4 pi - phi`
    U,
    /// `phi -> phi + 2 pi (mod 4 pi)`, the sheet swap
    T,
    /// `phi -> 2 pi - phi (mod 4 pi)`
    V,
}

impl CoverSymmetry {
    pub fn apply(self, phi: f64) -> f64 {
        let period = 2.0 * TAU;
        match self {
            CoverSymmetry::U => (period - phi).rem_euclid(period),
            CoverSymmetry::T => (phi + TAU).rem_euclid(period),
            CoverSymmetry::V => (TAU - phi).rem_euclid(period),
        }
    }
}

/// Two-sheeted branched cover of a quarter-arc disk. The sheets are glued
/// crosswise along the slit ray from the branch point through the middle of the
/// first (Neumann) arc; boundary tags alternate on quarter arcs over the full
/// lifted angle range `[0, 4 pi)`, which is measured from the slit ray.
pub fn build_double_cover(base: &DomainSpec) -> Result<DomainSpec> {
    base.validate()?;
    if base.curves.len() != 4 {
        return Err(Error::Geometry("double cover base needs exactly four arcs".into()));
    }
    let mut arcs = Vec::new();
    for c in &base.curves {
        match c.kind {
            CurveKind::Arc {
                center,
                radius,
                angle0,
                angle1,
            } if center.norm() <= 1e-12 && (radius - 1.0).abs() <= 1e-12 => {
                if ((angle1 - angle0) - FRAC_PI_2).abs() > 1e-9 {
                    return Err(Error::Geometry("double cover base arcs must be quarter arcs".into()));
                }
                arcs.push((angle0, c.tag));
            }
            _ => return Err(Error::Geometry("double cover base must be the unit disk".into())),
        }
    }
    arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in arcs.windows(2) {
        if w[0].1 == w[1].1 {
            return Err(Error::Geometry("double cover base tags must alternate".into()));
        }
    }
    // slit through the middle of the Neumann arc closest to angle 0
    let slit_angle = arcs
        .iter()
        .filter(|a| a.1 == BoundaryTag::Neumann)
        .map(|a| {
            let m = (a.0 + FRAC_PI_4).rem_euclid(TAU);
            if TAU - m < 1e-9 {
                0.0
            } else {
                m
            }
        })
        .fold(f64::INFINITY, f64::min);
    let mut curves = Vec::new();
    for k in 0..8 {
        let phi0 = -FRAC_PI_4 + k as f64 * FRAC_PI_2;
        let tag = if k % 2 == 0 {
            BoundaryTag::Neumann
        } else {
            BoundaryTag::Dirichlet
        };
        let (a0, a1) = if k == 0 {
            (2.0 * TAU + phi0, 2.0 * TAU + phi0 + FRAC_PI_2)
        } else {
            (phi0, phi0 + FRAC_PI_2)
        };
        curves.push(Curve::labeled(
            CurveKind::unit_arc(slit_angle + a0, slit_angle + a1),
            tag,
            &format!("cover_arc_{k}"),
        ));
    }
    let mut spec = DomainSpec {
        curves,
        weight: base.weight.clone(),
        sheets: 2,
        slit: Some(Segment {
            p0: Point::ORIGIN,
            p1: Point::polar(1.0, slit_angle),
        }),
        symmetry_hints: Vec::new(),
        metadata: BTreeMap::new(),
    };
    spec.metadata.insert("family".into(), "double_cover".into());
    spec.metadata
        .insert("slit_angle".into(), format!("{slit_angle:.17e}"));
    spec.validate()?;
    Ok(spec)
}

impl DomainSpec {
    /// Tag at lifted angle `phi` (measured from the slit ray) on the boundary of a
    /// two-sheeted unit-disk cover.
    pub fn cover_tag_at(&self, phi: f64) -> Option<BoundaryTag> {
        let slit_angle = self
            .slit
            .map(|s| (s.p1 - s.p0).arg())
            .unwrap_or(0.0);
        let period = 2.0 * TAU;
        self.curves.iter().find_map(|c| match c.kind {
            CurveKind::Arc { angle0, angle1, .. } => {
                let rel = (phi - (angle0 - slit_angle)).rem_euclid(period);
                (rel > 1e-12 && rel < angle1 - angle0 - 1e-12).then_some(c.tag)
            }
            _ => None,
        })
    }
}

/// Figure-12 style quarter-sphere problems: the half-disk with spherical weight.
#[derive(Clone, Debug)]
pub struct QuarterSphereTrio {
    /// Dirichlet on `[-1, 0]` and the arc from `i` to `-1`; symmetric about the
    /// great circle through `+-1` that bisects the lune.
    pub axisymmetric_1: DomainSpec,
    /// Dirichlet on the whole arc, Neumann on the diameter.
    pub axisymmetric_2: DomainSpec,
    /// Dirichlet on `[-1, 0]` and the arc from `1` to `i`.
    pub central: DomainSpec,
}

/// The right quarter of the spherical half-disk with Dirichlet on its outer arc.
pub fn quarter_sphere_half() -> DomainSpec {
    use BoundaryTag::*;
    let curves = vec![
        Curve::labeled(
            CurveKind::segment(Point::ORIGIN, Point::new(1.0, 0.0)),
            Neumann,
            "radius",
        ),
        Curve::labeled(CurveKind::unit_arc(0.0, FRAC_PI_2), Dirichlet, "arc"),
        Curve::labeled(
            CurveKind::segment(Point::new(0.0, 1.0), Point::ORIGIN),
            Neumann,
            "axis",
        ),
    ];
    let mut spec = DomainSpec {
        curves,
        weight: MetricWeight::Spherical,
        sheets: 1,
        slit: None,
        symmetry_hints: Vec::new(),
        metadata: BTreeMap::new(),
    };
    spec.metadata.insert("family".into(), "quarter_sphere".into());
    spec
}

pub fn build_quarter_sphere_trio() -> Result<QuarterSphereTrio> {
    use BoundaryTag::*;
    let (axisymmetric_2, central) =
        build_symmetry_pair(&quarter_sphere_half(), &Axis::through_origin(FRAC_PI_2))?;
    let curves = vec![
        Curve::labeled(
            CurveKind::segment(Point::new(-1.0, 0.0), Point::ORIGIN),
            Dirichlet,
            "left_radius",
        ),
        Curve::labeled(
            CurveKind::segment(Point::ORIGIN, Point::new(1.0, 0.0)),
            Neumann,
            "right_radius",
        ),
        Curve::labeled(CurveKind::unit_arc(0.0, FRAC_PI_2), Neumann, "right_arc"),
        Curve::labeled(CurveKind::unit_arc(FRAC_PI_2, PI), Dirichlet, "left_arc"),
    ];
    let mut axisymmetric_1 = DomainSpec {
        curves,
        weight: MetricWeight::Spherical,
        sheets: 1,
        slit: None,
        symmetry_hints: Vec::new(),
        metadata: BTreeMap::new(),
    };
    axisymmetric_1
        .metadata
        .insert("family".into(), "quarter_sphere".into());
    axisymmetric_1
        .metadata
        .insert("symmetry".into(), "axisymmetric".into());
    axisymmetric_1.validate()?;
    Ok(QuarterSphereTrio {
        axisymmetric_1,
        axisymmetric_2,
        central,
    })
}

/// Quarter disk `{|z| < 1, Im z > 0, Re z < 0}` with its four labeled pieces:
/// `d1` Dirichlet arc `(pi/2, 3pi/4)`, `d2` Neumann arc `(3pi/4, pi)`,
/// `d3` horizontal radius and `d4` vertical radius (tags on `d3`, `d4` are
/// placeholders; the trace operators impose their own conditions there).
pub fn build_quarter_disk() -> DomainSpec {
    use BoundaryTag::*;
    let curves = vec![
        Curve::labeled(CurveKind::unit_arc(FRAC_PI_2, 3.0 * FRAC_PI_4), Dirichlet, "d1"),
        Curve::labeled(CurveKind::unit_arc(3.0 * FRAC_PI_4, PI), Neumann, "d2"),
        Curve::labeled(
            CurveKind::segment(Point::new(-1.0, 0.0), Point::ORIGIN),
            Neumann,
            "d3",
        ),
        Curve::labeled(
            CurveKind::segment(Point::ORIGIN, Point::new(0.0, 1.0)),
            Neumann,
            "d4",
        ),
    ];
    let mut spec = DomainSpec {
        curves,
        weight: MetricWeight::Flat,
        sheets: 1,
        slit: None,
        symmetry_hints: vec![Axis::through_origin(3.0 * FRAC_PI_4)],
        metadata: BTreeMap::new(),
    };
    spec.metadata.insert("family".into(), "quarter_disk".into());
    spec
}

/// Unit disk with a single tag on the whole boundary.
pub fn build_uniform_disk(tag: BoundaryTag) -> DomainSpec {
    let curves = (0..4)
        .map(|k| {
            let a0 = k as f64 * FRAC_PI_2;
            Curve::new(CurveKind::unit_arc(a0, a0 + FRAC_PI_2), tag)
        })
        .collect();
    let mut spec = DomainSpec {
        curves,
        weight: MetricWeight::Flat,
        sheets: 1,
        slit: None,
        symmetry_hints: Vec::new(),
        metadata: BTreeMap::new(),
    };
    spec.metadata.insert("family".into(), "disk".into());
    spec
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` with per-side tags
/// (bottom, right, top, left).
pub fn build_rectangle(x0: f64, y0: f64, x1: f64, y1: f64, tags: [BoundaryTag; 4]) -> Result<DomainSpec> {
    let c = [
        Point::new(x0, y0),
        Point::new(x1, y0),
        Point::new(x1, y1),
        Point::new(x0, y1),
    ];
    let names = ["bottom", "right", "top", "left"];
    let curves = (0..4)
        .map(|i| Curve::labeled(CurveKind::segment(c[i], c[(i + 1) % 4]), tags[i], names[i]))
        .collect();
    let mut spec = DomainSpec {
        curves,
        weight: MetricWeight::Flat,
        sheets: 1,
        slit: None,
        symmetry_hints: Vec::new(),
        metadata: BTreeMap::new(),
    };
    spec.metadata.insert("family".into(), "rectangle".into());
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryTag::*;

    #[test]
    fn half_disk_flat_lengths() {
        let s = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let (ld, ln) = boundary_lengths(&s);
        assert!((ld - (1.0 + FRAC_PI_2)).abs() < 1e-14);
        assert!((ln - (1.0 + FRAC_PI_2)).abs() < 1e-14);
    }

    #[test]
    fn half_disk_variant_two_is_swap() {
        let a = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let b = build_half_disk(HalfDiskVariant::II, MetricWeight::Flat);
        assert!(a.swapped().same_tagged_curves(&b));
        assert!(!a.same_tagged_curves(&b));
    }

    #[test]
    fn spherical_half_disk_lengths_balance() {
        // oracle: direct quadrature of sqrt(f) = 2 / (1 + r^2) by composite Simpson
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            let n = 2000;
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(a + i as f64 * h);
            }
            s * h / 3.0
        };
        let radius = simpson(&|r| 2.0 / (1.0 + r * r), 0.0, 1.0);
        let arc_speed = 1.0; // sqrt(f(1)) = 1
        let d_oracle = radius + FRAC_PI_2 * arc_speed;
        let n_oracle = radius + FRAC_PI_2 * arc_speed;
        let s = build_half_disk(HalfDiskVariant::I, MetricWeight::Spherical);
        let (ld, ln) = boundary_lengths(&s);
        assert!((ld - d_oracle).abs() < 1e-9);
        assert!((ln - n_oracle).abs() < 1e-9);
        assert!((ld - ln).abs() < 1e-9);
        assert!((ld - PI).abs() < 1e-9);
    }

    #[test]
    fn disk_partition_rejects_bad_angles() {
        assert!(build_disk_partition(0.0, 1.0).is_err());
        assert!(build_disk_partition(1.0, 3.5).is_err());
        assert!(build_disk_partition(-1.0, 1.0).is_err());
    }

    #[test]
    fn disk_partition_lengths() {
        let (a, b) = build_disk_partition(PI / 3.0, PI / 2.0).unwrap();
        for s in [&a, &b] {
            let (ld, ln) = boundary_lengths(s);
            assert!((ld - PI).abs() < 1e-12);
            assert!((ln - PI).abs() < 1e-12);
        }
        let (a, _) = build_disk_partition(PI / 3.0, PI / 3.0).unwrap();
        assert!((boundary_lengths(&a).0 - PI).abs() < 1e-12);
    }

    #[test]
    fn disk_partition_triviality() {
        let (a, b) = build_disk_partition(FRAC_PI_2, FRAC_PI_2).unwrap();
        let iso = find_circle_isometry(&a, &b).unwrap();
        assert!(iso.is_some());
        let (a, b) = build_disk_partition(11.0 * PI / 24.0, FRAC_PI_2).unwrap();
        assert!(find_circle_isometry(&a, &b).unwrap().is_none());
        // every diagonal cell is trivial, every off-diagonal cell is not
        for k in 1..=12 {
            for n in k..=12 {
                let (a, b) =
                    build_disk_partition(k as f64 * PI / 24.0, n as f64 * PI / 24.0).unwrap();
                let trivial = find_circle_isometry(&a, &b).unwrap().is_some();
                assert_eq!(trivial, k == n, "cell ({k}, {n})");
            }
        }
    }

    #[test]
    fn full_dirichlet_disk_lengths() {
        let s = build_uniform_disk(Dirichlet);
        let (ld, ln) = boundary_lengths(&s);
        assert!((ld - TAU).abs() < 1e-14);
        assert_eq!(ln, 0.0);
    }

    /// Compare two specs by sampling boundary tags on a fine set of points.
    fn tags_agree(a: &DomainSpec, b: &DomainSpec) -> bool {
        a.curves.iter().all(|c| {
            (1..20).all(|i| {
                let p = c.kind.point_at(i as f64 / 20.0);
                b.tag_at(p, 1e-9) == Some(c.tag)
            })
        })
    }

    #[test]
    fn sectorial_half_disk_reproduces_problem_one() {
        let k = build_sectorial_domain(&SectorialBlock::half_disk(), false).unwrap();
        let h = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        assert!(tags_agree(&k, &h) && tags_agree(&h, &k));
        let (ld, ln) = boundary_lengths(&k);
        assert!((ld - ln).abs() < 1e-12);
    }

    #[test]
    fn sectorial_triangle_and_rectangle() {
        let t = build_sectorial_domain(&SectorialBlock::triangle(), false).unwrap();
        // triangle with vertices -1, 1, i: corners of the loop
        let corners: Vec<Point> = t.curves.iter().map(|c| c.kind.start()).collect();
        for p in &corners {
            assert!(
                [Point::new(-1.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(0.5, 0.5), Point::new(-0.5, 0.5), Point::ORIGIN]
                    .iter()
                    .any(|q| q.dist(*p) < 1e-12)
            );
        }
        let (ld, ln) = boundary_lengths(&t);
        assert!((ld - ln).abs() < 1e-12);
        let r = build_sectorial_domain(&SectorialBlock::rectangle(), false).unwrap();
        let xs: Vec<f64> = r.curves.iter().flat_map(|c| [c.kind.start().x, c.kind.end().x]).collect();
        let ys: Vec<f64> = r.curves.iter().flat_map(|c| [c.kind.start().y, c.kind.end().y]).collect();
        assert!((xs.iter().cloned().fold(f64::MIN, f64::max) - 1.0).abs() < 1e-12);
        assert!((xs.iter().cloned().fold(f64::MAX, f64::min) + 1.0).abs() < 1e-12);
        assert!((ys.iter().cloned().fold(f64::MIN, f64::max) - 1.0).abs() < 1e-12);
        // Dirichlet on both vertical sides and the left half of the bottom
        assert_eq!(r.tag_at(Point::new(1.0, 0.5), 1e-9), Some(Dirichlet));
        assert_eq!(r.tag_at(Point::new(-1.0, 0.5), 1e-9), Some(Dirichlet));
        assert_eq!(r.tag_at(Point::new(0.0, 1.0), 1e-9), Some(Neumann));
        assert_eq!(r.tag_at(Point::new(-0.5, 0.0), 1e-9), Some(Dirichlet));
        assert_eq!(r.tag_at(Point::new(0.5, 0.0), 1e-9), Some(Neumann));
    }

    #[test]
    fn sectorial_swap_is_tag_equivariant() {
        for block in [SectorialBlock::half_disk(), SectorialBlock::triangle(), SectorialBlock::rectangle()] {
            let a = build_sectorial_domain(&block, false).unwrap();
            let b = build_sectorial_domain(&block, true).unwrap();
            assert!(a.swapped().same_tagged_curves(&b));
        }
    }

    #[test]
    fn sectorial_block_rejects_bad_curves() {
        let mut b = SectorialBlock::triangle();
        b.alpha = 1.7;
        assert!(b.validate().is_err());
        // curve leaving the sector
        let z2 = Point::new(0.5, 0.5);
        let bad = SectorialBlock {
            alpha: FRAC_PI_4,
            z1: Point::new(1.0, 0.0),
            z2,
            gamma1: vec![
                BlockPiece { kind: CurveKind::segment(Point::new(1.0, 0.0), Point::new(1.0, -0.2)), part: GammaPart::First },
                BlockPiece { kind: CurveKind::segment(Point::new(1.0, -0.2), z2), part: GammaPart::First },
            ],
        };
        assert!(bad.validate().is_err());
        // self-intersecting zig-zag
        let zig = SectorialBlock {
            alpha: FRAC_PI_4,
            z1: Point::new(1.0, 0.0),
            z2,
            gamma1: vec![
                BlockPiece { kind: CurveKind::segment(Point::new(1.0, 0.0), Point::new(0.6, 0.3)), part: GammaPart::First },
                BlockPiece { kind: CurveKind::segment(Point::new(0.6, 0.3), Point::new(0.9, 0.3)), part: GammaPart::First },
                BlockPiece { kind: CurveKind::segment(Point::new(0.9, 0.3), Point::new(0.7, 0.05)), part: GammaPart::First },
                BlockPiece { kind: CurveKind::segment(Point::new(0.7, 0.05), z2), part: GammaPart::First },
            ],
        };
        assert!(zig.validate().is_err());
    }

    #[test]
    fn symmetry_pair_square() {
        let half = build_rectangle(0.0, 0.0, 1.0, 1.0, [Neumann, Neumann, Dirichlet, Neumann]).unwrap();
        let axis = Axis::through_origin(0.0);
        let (a, c) = build_symmetry_pair(&half, &axis).unwrap();
        // both are the 1 x 2 rectangle [0,1] x [-1,1] with Dirichlet top and bottom
        for s in [&a, &c] {
            assert_eq!(s.tag_at(Point::new(0.5, 1.0), 1e-12), Some(Dirichlet));
            assert_eq!(s.tag_at(Point::new(0.5, -1.0), 1e-12), Some(Dirichlet));
            assert_eq!(s.tag_at(Point::new(0.0, 0.5), 1e-12), Some(Neumann));
            assert_eq!(s.tag_at(Point::new(1.0, -0.5), 1e-12), Some(Neumann));
        }
        assert!(tags_agree(&a, &c));
    }

    #[test]
    fn symmetry_pair_without_second_axis_differs() {
        // Dirichlet on the right side only: the central image puts Dirichlet on the left
        let half = build_rectangle(0.0, 0.0, 1.0, 1.0, [Neumann, Dirichlet, Neumann, Neumann]).unwrap();
        let (a, c) = build_symmetry_pair(&half, &Axis::through_origin(0.0)).unwrap();
        assert_eq!(a.tag_at(Point::new(1.0, -0.5), 1e-12), Some(Dirichlet));
        assert_eq!(c.tag_at(Point::new(0.0, -0.5), 1e-12), Some(Dirichlet));
        assert!(!tags_agree(&a, &c));
    }

    #[test]
    fn spherical_pair_over_full_diameter() {
        // the ends of d are antipodal on the sphere; the half-turn is z -> -z
        let half = build_half_disk(HalfDiskVariant::I, MetricWeight::Spherical);
        let (_, c) = build_symmetry_pair(&half, &Axis::through_origin(0.0)).unwrap();
        for t in [0.3, 1.0, 2.0, 2.9] {
            assert_eq!(c.tag_at(Point::polar(1.0, t + PI), 1e-9), half.tag_at(Point::polar(1.0, t), 1e-9));
        }
    }

    #[test]
    fn symmetry_pair_rejects_crossing_half() {
        let half = build_rectangle(0.0, -0.5, 1.0, 1.0, [Neumann, Neumann, Dirichlet, Neumann]).unwrap();
        assert!(build_symmetry_pair(&half, &Axis::through_origin(0.0)).is_err());
    }

    #[test]
    fn quarter_sphere_trio_tags() {
        let trio = build_quarter_sphere_trio().unwrap();
        let at = |s: &DomainSpec, t: f64| s.tag_at(Point::polar(1.0, t), 1e-9);
        let on_axis = |s: &DomainSpec, x: f64| s.tag_at(Point::new(x, 0.0), 1e-9);
        // Q_a2: Dirichlet on the arc, Neumann on the diameter
        assert_eq!(at(&trio.axisymmetric_2, 0.3), Some(Dirichlet));
        assert_eq!(at(&trio.axisymmetric_2, 2.8), Some(Dirichlet));
        assert_eq!(on_axis(&trio.axisymmetric_2, 0.5), Some(Neumann));
        assert_eq!(on_axis(&trio.axisymmetric_2, -0.5), Some(Neumann));
        // Q_c: Dirichlet on the right arc and the left radius
        assert_eq!(at(&trio.central, 0.3), Some(Dirichlet));
        assert_eq!(at(&trio.central, 2.8), Some(Neumann));
        assert_eq!(on_axis(&trio.central, -0.5), Some(Dirichlet));
        assert_eq!(on_axis(&trio.central, 0.5), Some(Neumann));
        for s in [&trio.axisymmetric_1, &trio.axisymmetric_2, &trio.central] {
            let (ld, ln) = boundary_lengths(s);
            assert!((ld - PI).abs() < 1e-9 && (ln - PI).abs() < 1e-9);
        }
    }

    #[test]
    fn double_cover_structure() {
        let base = build_quarter_arc_disk(0.0);
        let cover = build_double_cover(&base).unwrap();
        let (ld, ln) = boundary_lengths(&cover);
        assert!((ld - TAU).abs() < 1e-12 && (ln - TAU).abs() < 1e-12);
        assert!((cover.perimeter() - 2.0 * TAU).abs() < 1e-12);
        for sym in [CoverSymmetry::T, CoverSymmetry::U, CoverSymmetry::V] {
            for i in 0..400 {
                let phi = (i as f64 + 0.37) * 2.0 * TAU / 400.0;
                let t0 = cover.cover_tag_at(phi);
                let t1 = cover.cover_tag_at(sym.apply(phi));
                if t0.is_some() && t1.is_some() {
                    assert_eq!(t0, t1, "{sym:?} at phi = {phi}");
                }
            }
        }
        // fixed points of U are phi = 0, 2 pi; of V are phi = pi, 3 pi
        for (sym, fixed) in [(CoverSymmetry::U, [0.0, TAU]), (CoverSymmetry::V, [PI, 3.0 * PI])] {
            for f in fixed {
                assert!((sym.apply(f) - f).abs() < 1e-12 || (sym.apply(f) - f).abs() > 2.0 * TAU - 1e-12);
            }
        }
        // the fixed rays project to the diameter through the slit
        let slit = cover.slit.unwrap();
        assert!((slit.p1 - slit.p0).arg().abs() < 1e-12);
        let mut bad = base.clone();
        bad.curves[1].tag = Neumann;
        assert!(build_double_cover(&bad).is_err());
    }

    #[test]
    fn curve_through_three_points() {
        let k = curve_through(Point::new(1.0, 0.0), Point::polar(1.0, 0.4), Point::new(0.0, 1.0)).unwrap();
        match k {
            CurveKind::Arc { center, radius, angle0, angle1 } => {
                assert!(center.norm() < 1e-12);
                assert!((radius - 1.0).abs() < 1e-12);
                assert!(angle0.abs() < 1e-12 && (angle1 - FRAC_PI_2).abs() < 1e-12);
            }
            _ => panic!("expected arc"),
        }
        let s = curve_through(Point::new(0.0, 0.0), Point::new(0.5, 0.5), Point::new(1.0, 1.0)).unwrap();
        assert!(matches!(s, CurveKind::Segment { .. }));
    }

    #[test]
    fn open_loop_rejected() {
        let curves = vec![
            Curve::new(CurveKind::segment(Point::new(0.0, 0.0), Point::new(1.0, 0.0)), Dirichlet),
            Curve::new(CurveKind::segment(Point::new(1.0, 0.0), Point::new(1.0, 1.0)), Neumann),
        ];
        assert!(DomainSpec::new(curves, MetricWeight::Flat).is_err());
    }

    #[test]
    fn polynomial_weight_must_be_positive() {
        let w = MetricWeight::Polynomial { coeffs: vec![1.0, -2.0] };
        assert!(w.validate().is_err());
        let w = MetricWeight::Polynomial { coeffs: vec![1.0, 0.5] };
        assert!(w.validate().is_ok());
        assert!((w.density(0.5) - 1.25).abs() < 1e-15);
    }
}
