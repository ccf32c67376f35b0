//! Boundary-trace operators on the quarter disk and the crossing scan for
//! `det(C_λ + I)`.
//!
//! Pieces: `d1` Dirichlet arc next to the vertical radius, `d2` Neumann arc
//! next to the horizontal radius, `d3` the horizontal radius and `d4` the
//! vertical one. Traces live on the open radii (corners excluded) ordered by
//! distance from the origin. Values are nodal; fluxes are the variational
//! residuals `((K - λM) w)_i`, i.e. the functionals `∫ ∂w/∂n φ_i`.
//!
//! Corner conventions follow the junction rule of the half-disk problems: the
//! origin and `i` are always constrained, `-1` is constrained exactly when the
//! condition on `d3` is Dirichlet.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble_full, FullMatrices};
use crate::error::{Error, Result};
use crate::geometry::{build_half_disk, build_quarter_disk, Axis, HalfDiskVariant, MetricWeight, Point};
use crate::mesh::{mesh_by_reflection, mesh_fundamental, Mesh, Wedge};
use crate::sparse::{dot, CsrMatrix, LdlFactor};

const TOL: f64 = 1e-12;
/// Relative radius around an auxiliary eigenvalue inside which samples are skipped.
pub const POLE_RADIUS: f64 = 1e-6;
/// Absolute bisection tolerance for crossings (scaled by `max(1, λ)`).
pub const CROSSING_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Piece {
    D3,
    D4,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceVector {
    pub piece: Piece,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct QuarterGeometry {
    pub mesh: Mesh,
    /// Open horizontal radius, by increasing distance from the origin.
    pub piece3: Vec<usize>,
    /// Open vertical radius, by increasing distance from the origin.
    pub piece4: Vec<usize>,
    /// Closed Dirichlet arc, including `i` and the arc junction.
    pub arc1: Vec<usize>,
    pub origin: usize,
    pub corner_minus_one: usize,
}

/// Quarter-disk mesh symmetric about the `3π/4` diagonal, so both radii carry
/// the same number of trace nodes.
pub fn build_quarter_geometry(h: f64) -> Result<QuarterGeometry> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("mesh size h = {h} must be positive")));
    }
    let spec = build_quarter_disk();
    let f = mesh_fundamental(&spec, &Wedge::new(FRAC_PI_2, 3.0 * FRAC_PI_4), h)?;
    let m = mesh_by_reflection(&f, &[Axis::through_origin(3.0 * FRAC_PI_4)])?.retag_from(&spec)?;
    QuarterGeometry::from_mesh(m)
}

impl QuarterGeometry {
    /// Classify the vertices of a quarter-disk mesh (for example a uniform
    /// refinement of [`build_quarter_geometry`]).
    pub fn from_mesh(mesh: Mesh) -> Result<Self> {
        let find = |p: Point| {
            mesh.vertices
                .iter()
                .position(|v| v.dist(p) < TOL)
                .ok_or_else(|| Error::Mesh(format!("quarter-disk mesh has no vertex at ({}, {})", p.x, p.y)))
        };
        let origin = find(Point::ORIGIN)?;
        let corner_minus_one = find(Point::new(-1.0, 0.0))?;
        find(Point::new(0.0, 1.0))?;
        let mut piece3: Vec<usize> = mesh
            .boundary_vertices()
            .into_iter()
            .filter(|&v| {
                let p = mesh.vertices[v];
                p.y.abs() < TOL && p.x < -TOL && p.x > -1.0 + TOL
            })
            .collect();
        let mut piece4: Vec<usize> = mesh
            .boundary_vertices()
            .into_iter()
            .filter(|&v| {
                let p = mesh.vertices[v];
                p.x.abs() < TOL && p.y > TOL && p.y < 1.0 - TOL
            })
            .collect();
        piece3.sort_by(|&a, &b| mesh.vertices[a].norm().total_cmp(&mesh.vertices[b].norm()));
        piece4.sort_by(|&a, &b| mesh.vertices[a].norm().total_cmp(&mesh.vertices[b].norm()));
        if piece3.len() != piece4.len() || piece3.is_empty() {
            return Err(Error::Mesh(format!(
                "radii carry {} and {} trace nodes; the trace operators need equal counts",
                piece3.len(),
                piece4.len()
            )));
        }
        let arc1 = mesh.vertices_with_label("d1");
        if arc1.is_empty() {
            return Err(Error::Mesh("quarter-disk mesh has no d1 arc".into()));
        }
        Ok(QuarterGeometry {
            mesh,
            piece3,
            piece4,
            arc1,
            origin,
            corner_minus_one,
        })
    }

    pub fn trace_dim(&self) -> usize {
        self.piece4.len()
    }

    /// Arclengths of the discretized pieces `d1..d4`.
    pub fn piece_lengths(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for e in &self.mesh.boundary_edges {
            let k = match self.mesh.curves[e.curve].label.as_deref() {
                Some("d1") => 0,
                Some("d2") => 1,
                Some("d3") => 2,
                Some("d4") => 3,
                _ => continue,
            };
            out[k] += self.mesh.vertices[e.a].dist(self.mesh.vertices[e.b]);
        }
        out
    }

    /// Half-disk mesh made of this quarter and its mirror image in the
    /// vertical axis, tagged for the given problem.
    pub fn half_disk_mesh(&self, variant: HalfDiskVariant) -> Result<Mesh> {
        let spec = build_half_disk(variant, MetricWeight::Flat);
        mesh_by_reflection(&self.mesh, &[Axis::through_origin(FRAC_PI_2)])?.retag_from(&spec)
    }

    pub fn coordinates(&self, piece: Piece) -> Vec<f64> {
        let nodes = match piece {
            Piece::D3 => &self.piece3,
            Piece::D4 => &self.piece4,
        };
        nodes.iter().map(|&v| self.mesh.vertices[v].norm()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TraceKind {
    DD,
    DN,
    ND,
    NN,
}

/// The homogeneous problems behind the trace operators: the condition on
/// `d4` then the condition on `d3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AuxProblem {
    DirichletDirichlet,
    DirichletNeumann,
    NeumannDirichlet,
    NeumannNeumann,
}

pub const AUX_PROBLEMS: [AuxProblem; 4] = [
    AuxProblem::DirichletNeumann,
    AuxProblem::DirichletDirichlet,
    AuxProblem::NeumannNeumann,
    AuxProblem::NeumannDirichlet,
];

impl TraceKind {
    pub const ALL: [TraceKind; 4] = [TraceKind::DD, TraceKind::DN, TraceKind::ND, TraceKind::NN];

    /// `DD: ξ ↦ p` with `q = 0` etc.: data type on `d4` and the condition
    /// imposed on `d3` is the opposite of the output.
    pub fn aux(self) -> AuxProblem {
        match self {
            TraceKind::DD => AuxProblem::DirichletNeumann,
            TraceKind::DN => AuxProblem::DirichletDirichlet,
            TraceKind::ND => AuxProblem::NeumannNeumann,
            TraceKind::NN => AuxProblem::NeumannDirichlet,
        }
    }
}

impl AuxProblem {
    pub fn dirichlet_on_d4(self) -> bool {
        matches!(self, AuxProblem::DirichletDirichlet | AuxProblem::DirichletNeumann)
    }

    pub fn dirichlet_on_d3(self) -> bool {
        matches!(self, AuxProblem::DirichletDirichlet | AuxProblem::NeumannDirichlet)
    }

    pub fn name(self) -> String {
        let c = |d: bool| if d { "Dirichlet" } else { "Neumann" };
        format!(
            "quarter-disk problem with {} on d4 and {} on d3",
            c(self.dirichlet_on_d4()),
            c(self.dirichlet_on_d3())
        )
    }
}

/// Factorization of one auxiliary problem at a fixed `λ`.
struct AuxSolve<'a> {
    a: &'a CsrMatrix,
    free: Vec<usize>,
    slot: Vec<Option<usize>>,
    factor: LdlFactor,
}

impl AuxSolve<'_> {
    fn count_below(&self) -> usize {
        self.factor.inertia().0
    }

    /// Solve with free-row load `rhs_free`, constrained values zero except
    /// `lift` (vertex, value). Returns the full field.
    fn solve(&self, rhs_free: &[f64], lift: Option<(usize, f64)>) -> Vec<f64> {
        let mut rhs = rhs_free.to_vec();
        if let Some((v, g)) = lift {
            for (j, val) in self.a.row(v) {
                if let Some(k) = self.slot[j] {
                    rhs[k] -= val * g;
                }
            }
        }
        let x = self.factor.solve(&rhs);
        let mut w = vec![0.0; self.slot.len()];
        for (k, &v) in self.free.iter().enumerate() {
            w[v] = x[k];
        }
        if let Some((v, g)) = lift {
            w[v] = g;
        }
        w
    }

    fn residual_at(&self, w: &[f64], v: usize) -> f64 {
        self.a.row(v).map(|(j, val)| val * w[j]).sum()
    }
}

/// The four operators at one `λ`, with the auxiliary eigenvalue counts.
#[derive(Clone, Debug)]
pub struct DtnSet {
    pub lambda: f64,
    pub dd: DMatrix<f64>,
    pub dn: DMatrix<f64>,
    pub nd: DMatrix<f64>,
    pub nn: DMatrix<f64>,
    /// Eigenvalues below `λ` of each auxiliary problem, in [`AUX_PROBLEMS`] order.
    pub aux_below: [usize; 4],
}

/// Sign and `ln|·|` of a determinant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SignedLogDet {
    pub sign: f64,
    pub log_abs: f64,
}

pub fn signed_log_det(m: DMatrix<f64>) -> SignedLogDet {
    let lu = m.lu();
    let mut sign: f64 = lu.p().determinant();
    let mut log_abs = 0.0;
    for &d in lu.u().diagonal().iter() {
        if d == 0.0 {
            return SignedLogDet {
                sign: 0.0,
                log_abs: f64::NEG_INFINITY,
            };
        }
        sign *= d.signum();
        log_abs += d.abs().ln();
    }
    SignedLogDet { sign, log_abs }
}

impl DtnSet {
    pub fn get(&self, kind: TraceKind) -> &DMatrix<f64> {
        match kind {
            TraceKind::DD => &self.dd,
            TraceKind::DN => &self.dn,
            TraceKind::ND => &self.nd,
            TraceKind::NN => &self.nn,
        }
    }

    /// `C = DD⁻¹ · ND · NN⁻¹ · DN`
    pub fn composite(&self) -> Result<DMatrix<f64>> {
        let singular = |what: &str| Error::SingularShift {
            problem: format!("trace operator {what}"),
            lambda: self.lambda,
            detail: "matrix is singular".into(),
        };
        let x = self.nn.clone().lu().solve(&self.dn).ok_or_else(|| singular("NN"))?;
        let y = &self.nd * x;
        self.dd.clone().lu().solve(&y).ok_or_else(|| singular("DD"))
    }

    pub fn det_c_plus_identity(&self) -> Result<SignedLogDet> {
        let c = self.composite()?;
        let n = c.nrows();
        Ok(signed_log_det(c + DMatrix::identity(n, n)))
    }
}

pub struct DtnOperators<'g> {
    pub geometry: &'g QuarterGeometry,
    full: FullMatrices,
}

impl<'g> DtnOperators<'g> {
    pub fn new(geometry: &'g QuarterGeometry, weight: &MetricWeight) -> Result<Self> {
        Ok(DtnOperators {
            geometry,
            full: assemble_full(&geometry.mesh, weight)?,
        })
    }

    fn constrained(&self, aux: AuxProblem) -> Vec<bool> {
        let g = self.geometry;
        let mut c = vec![false; g.mesh.num_vertices()];
        for &v in &g.arc1 {
            c[v] = true;
        }
        c[g.origin] = true;
        if aux.dirichlet_on_d4() {
            for &v in &g.piece4 {
                c[v] = true;
            }
        }
        if aux.dirichlet_on_d3() {
            for &v in &g.piece3 {
                c[v] = true;
            }
            c[g.corner_minus_one] = true;
        }
        c
    }

    fn free_set(&self, aux: AuxProblem) -> Vec<usize> {
        let c = self.constrained(aux);
        (0..c.len()).filter(|&v| !c[v]).collect()
    }

    fn factor<'a>(&self, a: &'a CsrMatrix, aux: AuxProblem, lambda: f64) -> Result<AuxSolve<'a>> {
        let free = self.free_set(aux);
        let mut slot = vec![None; a.n_rows];
        for (k, &v) in free.iter().enumerate() {
            slot[v] = Some(k);
        }
        let factor = LdlFactor::factor(&a.submatrix(&free, &free), false).map_err(|e| match e {
            Error::SingularShift { detail, .. } => Error::SingularShift {
                problem: aux.name(),
                lambda,
                detail,
            },
            other => other,
        })?;
        Ok(AuxSolve { a, free, slot, factor })
    }

    /// Number of eigenvalues of `aux` strictly below `lambda`.
    pub fn aux_count_below(&self, aux: AuxProblem, lambda: f64) -> Result<usize> {
        let free = self.free_set(aux);
        let k = self.full.stiffness.submatrix(&free, &free);
        let m = self.full.mass.submatrix(&free, &free);
        crate::sparse::count_below(&k, &m, lambda)
    }

    /// Eigenvalues of `aux` in `(lo, hi)`, each located by inertia bisection to
    /// relative `1e-10`.
    pub fn aux_eigenvalues(&self, aux: AuxProblem, lo: f64, hi: f64) -> Result<Vec<f64>> {
        let c_lo = self.aux_count_below(aux, lo)?;
        let c_hi = self.aux_count_below(aux, hi)?;
        let mut out = Vec::new();
        self.locate(aux, (lo, c_lo), (hi, c_hi), &mut out)?;
        Ok(out)
    }

    fn locate(&self, aux: AuxProblem, lo: (f64, usize), hi: (f64, usize), out: &mut Vec<f64>) -> Result<()> {
        if lo.1 == hi.1 {
            return Ok(());
        }
        if hi.0 - lo.0 <= 1e-10 * hi.0.abs().max(1.0) {
            for _ in lo.1..hi.1 {
                out.push(0.5 * (lo.0 + hi.0));
            }
            return Ok(());
        }
        let mid = 0.5 * (lo.0 + hi.0);
        let c = self.aux_count_below(aux, mid)?;
        self.locate(aux, lo, (mid, c), out)?;
        self.locate(aux, (mid, c), hi, out)
    }

    /// Error naming the auxiliary problem if one of its eigenvalues lies within
    /// relative [`POLE_RADIUS`] of `lambda`.
    pub fn check_admissible(&self, lambda: f64) -> Result<()> {
        let d = POLE_RADIUS * lambda.abs().max(1.0);
        for aux in AUX_PROBLEMS {
            let near = self.aux_eigenvalues(aux, lambda - d, lambda + d)?;
            if let Some(&mu) = near.first() {
                return Err(Error::SingularShift {
                    problem: aux.name(),
                    lambda,
                    detail: format!(
                        "eigenvalue {mu:.12} at relative distance {:.3e}",
                        (mu - lambda).abs() / lambda.abs().max(1.0)
                    ),
                });
            }
        }
        Ok(())
    }

    fn build(&self, a: &CsrMatrix, kind: TraceKind, lambda: f64) -> Result<(DMatrix<f64>, usize)> {
        let g = self.geometry;
        let s = self.factor(a, kind.aux(), lambda)?;
        let n = g.trace_dim();
        let mut out = DMatrix::zeros(n, n);
        let zero = vec![0.0; s.free.len()];
        for (j, &vj) in g.piece4.iter().enumerate() {
            let w = match kind {
                TraceKind::DD | TraceKind::DN => s.solve(&zero, Some((vj, 1.0))),
                TraceKind::ND | TraceKind::NN => {
                    let mut rhs = zero.clone();
                    rhs[s.slot[vj].expect("d4 nodes are free for Neumann data")] = 1.0;
                    s.solve(&rhs, None)
                }
            };
            for (i, &vi) in g.piece3.iter().enumerate() {
                out[(i, j)] = match kind {
                    TraceKind::DD | TraceKind::ND => w[vi],
                    TraceKind::DN | TraceKind::NN => s.residual_at(&w, vi),
                };
            }
        }
        Ok((out, s.count_below()))
    }

    /// One operator as a dense matrix (rows: `d3` nodes, columns: `d4` nodes).
    pub fn trace_operator(&self, kind: TraceKind, lambda: f64) -> Result<DMatrix<f64>> {
        self.check_admissible(lambda)?;
        let a = self.full.stiffness.lin_comb(1.0, &self.full.mass, -lambda);
        Ok(self.build(&a, kind, lambda)?.0)
    }

    /// All four operators at `lambda` (no admissibility pre-check beyond the
    /// factorizations themselves).
    pub fn at(&self, lambda: f64) -> Result<DtnSet> {
        let a = self.full.stiffness.lin_comb(1.0, &self.full.mass, -lambda);
        let mut mats: Vec<DMatrix<f64>> = Vec::with_capacity(4);
        let mut aux_below = [0usize; 4];
        for kind in TraceKind::ALL {
            let (m, c) = self.build(&a, kind, lambda)?;
            let k = AUX_PROBLEMS.iter().position(|&p| p == kind.aux()).expect("listed");
            aux_below[k] = c;
            mats.push(m);
        }
        let mut it = mats.into_iter();
        Ok(DtnSet {
            lambda,
            dd: it.next().expect("four"),
            dn: it.next().expect("four"),
            nd: it.next().expect("four"),
            nn: it.next().expect("four"),
            aux_below,
        })
    }

    /// Apply one operator to a trace on `d4`.
    pub fn apply(&self, kind: TraceKind, lambda: f64, data: &TraceVector) -> Result<TraceVector> {
        if data.piece != Piece::D4 || data.values.len() != self.geometry.trace_dim() {
            return Err(Error::InvalidArgument("trace data must live on the d4 nodes".into()));
        }
        let m = self.trace_operator(kind, lambda)?;
        let v = m * nalgebra::DVector::from_column_slice(&data.values);
        Ok(TraceVector {
            piece: Piece::D3,
            values: v.iter().copied().collect(),
        })
    }

    /// Pointwise normal derivative from flux functionals on `d3`, dividing by
    /// the lumped boundary mass of each node.
    pub fn flux_to_pointwise(&self, q: &[f64]) -> Vec<f64> {
        let g = self.geometry;
        let lumped: Vec<f64> = g
            .piece3
            .iter()
            .map(|&v| {
                g.mesh
                    .boundary_edges
                    .iter()
                    .filter(|e| e.a == v || e.b == v)
                    .map(|e| 0.5 * g.mesh.vertices[e.a].dist(g.mesh.vertices[e.b]))
                    .sum()
            })
            .collect();
        q.iter().zip(&lumped).map(|(a, b)| a / b).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSample {
    pub lambda: f64,
    pub sign: f64,
    pub log_abs_det: f64,
    /// `sign(det DD) * sign(det NN)`; `det(C + I)` times this sign is
    /// continuous away from auxiliary eigenvalues.
    pub operator_sign: f64,
    pub admissible: bool,
    pub aux_below: [usize; 4],
}

impl ScanSample {
    fn block_sign(&self) -> f64 {
        self.sign * self.operator_sign
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlaggedPoint {
    pub lambda: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub samples: Vec<ScanSample>,
    pub poles: Vec<f64>,
    pub crossings: Vec<f64>,
    pub flagged: Vec<FlaggedPoint>,
}

impl ScanResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,sign,log_abs_det,operator_sign,admissible,aux_dn,aux_dd,aux_nn,aux_nd\n");
        for p in &self.samples {
            s.push_str(&format!(
                "{:.16e},{},{:.16e},{},{},{},{},{},{}\n",
                p.lambda,
                p.sign,
                p.log_abs_det,
                p.operator_sign,
                p.admissible,
                p.aux_below[0],
                p.aux_below[1],
                p.aux_below[2],
                p.aux_below[3]
            ));
        }
        s
    }
}

impl DtnOperators<'_> {
    fn sample(&self, lambda: f64) -> ScanSample {
        let eval = |set: DtnSet| -> Result<(SignedLogDet, f64, [usize; 4])> {
            let op = signed_log_det(set.dd.clone()).sign * signed_log_det(set.nn.clone()).sign;
            Ok((set.det_c_plus_identity()?, op, set.aux_below))
        };
        match self.at(lambda).and_then(eval) {
            Ok((d, op, aux_below)) => ScanSample {
                lambda,
                sign: d.sign,
                log_abs_det: d.log_abs,
                operator_sign: op,
                admissible: d.sign != 0.0 && op != 0.0 && d.log_abs.is_finite(),
                aux_below,
            },
            Err(_) => ScanSample {
                lambda,
                sign: 0.0,
                log_abs_det: f64::NAN,
                operator_sign: 0.0,
                admissible: false,
                aux_below: [usize::MAX; 4],
            },
        }
    }

    /// Sign changes of `det(C_λ + I)` on `[lo, hi]`, refined by bisection.
    ///
    /// Eigenvalues of the auxiliary problems (poles of the operators) are
    /// located by inertia first; samples within [`POLE_RADIUS`] of them are
    /// replaced by samples just outside, and sign changes across a pole gap are
    /// not reported as crossings. Between poles the scan follows
    /// `det(C + I) * sign(det DD) * sign(det NN)`, which does not change sign
    /// where `DD` or `NN` alone becomes singular.
    pub fn scan_crossings(&self, lo: f64, hi: f64, grid: usize) -> Result<ScanResult> {
        if !(hi > lo) || grid < 2 {
            return Err(Error::InvalidArgument(format!(
                "scan needs lo < hi and at least two grid points (got [{lo}, {hi}], {grid})"
            )));
        }
        let mut poles: Vec<f64> = Vec::new();
        for aux in AUX_PROBLEMS {
            poles.extend(self.aux_eigenvalues(aux, lo, hi)?);
        }
        poles.sort_by(f64::total_cmp);
        let radius = |x: f64| POLE_RADIUS * x.abs().max(1.0);
        let near_pole = |x: f64| poles.iter().any(|&p| (p - x).abs() <= radius(p));
        let mut points: Vec<f64> = (0..grid)
            .map(|k| lo + (hi - lo) * k as f64 / (grid - 1) as f64)
            .filter(|&x| !near_pole(x))
            .collect();
        for &p in &poles {
            for x in [p - 2.0 * radius(p), p + 2.0 * radius(p)] {
                if x > lo && x < hi && !near_pole(x) {
                    points.push(x);
                }
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        let mut samples: Vec<ScanSample> = points.par_iter().map(|&x| self.sample(x)).collect();
        samples.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        if !samples.iter().any(|s| s.admissible) {
            return Err(Error::SingularShift {
                problem: "trace operator scan".into(),
                lambda: lo,
                detail: format!("no admissible sample in [{lo}, {hi}]"),
            });
        }

        let mut brackets = Vec::new();
        let mut flagged = Vec::new();
        let good: Vec<&ScanSample> = samples.iter().filter(|s| s.admissible).collect();
        for w in good.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.block_sign() == b.block_sign() {
                continue;
            }
            if let Some(&p) = poles.iter().find(|&&p| p > a.lambda && p < b.lambda) {
                if (b.lambda - a.lambda) > 5.0 * radius(p) {
                    // a zero may share the interval with the pole
                    flagged.push(FlaggedPoint {
                        lambda: p,
                        reason: "sign change in an interval that also holds an auxiliary eigenvalue".into(),
                    });
                }
                continue;
            }
            brackets.push((a.clone(), b.clone()));
        }

        let refined: Vec<std::result::Result<f64, FlaggedPoint>> = brackets
            .par_iter()
            .map(|(a, b)| self.bisect(a, b))
            .collect();
        let mut crossings = Vec::new();
        for r in refined {
            match r {
                Ok(x) => crossings.push(x),
                Err(f) => flagged.push(f),
            }
        }
        Ok(ScanResult {
            samples,
            poles,
            crossings,
            flagged,
        })
    }

    fn bisect(&self, a: &ScanSample, b: &ScanSample) -> std::result::Result<f64, FlaggedPoint> {
        let (mut lo, mut hi) = (a.clone(), b.clone());
        let edge_log = a.log_abs_det.min(b.log_abs_det);
        while hi.lambda - lo.lambda > CROSSING_TOL * hi.lambda.abs().max(1.0) {
            let mid = self.sample(0.5 * (lo.lambda + hi.lambda));
            if !mid.admissible {
                if mid.sign == 0.0 && mid.log_abs_det == f64::NEG_INFINITY {
                    return Ok(mid.lambda);
                }
                return Err(FlaggedPoint {
                    lambda: mid.lambda,
                    reason: "operators singular during bisection".into(),
                });
            }
            if mid.block_sign() == lo.block_sign() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo.lambda + hi.lambda);
        if lo.log_abs_det.min(hi.log_abs_det) >= edge_log {
            return Err(FlaggedPoint {
                lambda: x,
                reason: "determinant does not shrink toward the sign change".into(),
            });
        }
        if lo.sign == hi.sign {
            return Err(FlaggedPoint {
                lambda: x,
                reason: "DD or NN singular at the same point as the sign change".into(),
            });
        }
        Ok(x)
    }
}

/// `ln|det|` of `C + I` after permuting the trace nodes; used to check that the
/// determinant does not depend on node order.
pub fn permuted_det(set: &DtnSet, perm: &[usize]) -> Result<SignedLogDet> {
    let n = perm.len();
    let p = |m: &DMatrix<f64>| DMatrix::from_fn(n, n, |i, j| m[(perm[i], perm[j])]);
    let permuted = DtnSet {
        lambda: set.lambda,
        dd: p(&set.dd),
        dn: p(&set.dn),
        nd: p(&set.nd),
        nn: p(&set.nn),
        aux_below: set.aux_below,
    };
    permuted.det_c_plus_identity()
}

/// Inner product helper for trace data ordered like the piece nodes.
pub fn trace_dot(a: &TraceVector, b: &TraceVector) -> f64 {
    dot(&a.values, &b.values)
}

/// Crossings of the scan matched against directly computed eigenvalues of
/// the half-disk problem on the same mesh.
#[derive(Clone, Debug, Serialize)]
pub struct CrossingCheck {
    pub h: f64,
    /// Lowest eigenvalues of Problem I, then of Problem II.
    pub direct_i: Vec<f64>,
    pub direct_ii: Vec<f64>,
    pub window: (f64, f64),
    /// For each Problem I eigenvalue, the nearest crossing and its relative distance.
    pub matches: Vec<(f64, f64)>,
    /// Crossings that are nobody's nearest match.
    pub extra: Vec<f64>,
    pub max_relative_error: f64,
    pub scan: ScanResult,
}

impl CrossingCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.extra.is_empty() && self.max_relative_error <= tol && self.scan.crossings.len() == self.direct_i.len()
    }
}

/// Scan `det(C_λ + I)` over a window that covers the lowest `count`
/// eigenvalues of the half-disk problems on the reflected quarter-disk mesh and
/// match crossings to them.
pub fn check_crossings(h: f64, count: usize, grid: usize) -> Result<CrossingCheck> {
    if count == 0 {
        return Err(Error::InvalidArgument("crossing check needs at least one eigenvalue".into()));
    }
    let g = build_quarter_geometry(h)?;
    let ops = DtnOperators::new(&g, &MetricWeight::Flat)?;
    let mut direct = Vec::new();
    for variant in [HalfDiskVariant::I, HalfDiskVariant::II] {
        let pair = crate::assembly::assemble(&g.half_disk_mesh(variant)?, &MetricWeight::Flat)?;
        direct.push(crate::eigensolve::solve_lowest(&pair, count + 1, 1e-10)?.0.values);
    }
    let d = &direct[0];
    let lo = 0.5 * d[0];
    let hi = d[count - 1] + 0.5 * (d[count] - d[count - 1]);
    let scan = ops.scan_crossings(lo, hi, grid)?;
    let mut matches = Vec::with_capacity(count);
    let mut used = vec![false; scan.crossings.len()];
    for &l in &d[..count] {
        let Some((j, &c)) = scan
            .crossings
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - l).abs().total_cmp(&(b.1 - l).abs()))
        else {
            matches.push((f64::NAN, f64::INFINITY));
            continue;
        };
        used[j] = true;
        matches.push((c, (c - l).abs() / l));
    }
    let extra = scan
        .crossings
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(&c, _)| c)
        .collect();
    let max_relative_error = matches.iter().map(|m| m.1).fold(0.0, f64::max);
    direct[0].truncate(count);
    direct[1].truncate(count);
    let direct_ii = direct.pop().unwrap_or_default();
    let direct_i = direct.pop().unwrap_or_default();
    Ok(CrossingCheck {
        h,
        direct_i,
        direct_ii,
        window: (lo, hi),
        matches,
        extra,
        max_relative_error,
        scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::solve_with_boundary_data;
    use crate::geometry::{build_rectangle, BoundaryTag};
    use crate::mesh::{mesh_unstructured, refine_uniform};
    use std::f64::consts::PI;

    #[test]
    fn quarter_geometry_pieces() {
        let g = build_quarter_geometry(0.1).unwrap();
        let l = g.piece_lengths();
        assert!((l[2] - 1.0).abs() < 1e-12 && (l[3] - 1.0).abs() < 1e-12);
        for k in [0, 1] {
            assert!((l[k] - FRAC_PI_4).abs() < 2e-3, "{l:?}");
        }
        assert_eq!(g.piece3.len(), g.piece4.len());
        // boundary partition: d3, d4, arc1, the rest of d2, origin and -1
        let mut all: Vec<usize> = g.piece3.iter().chain(&g.piece4).chain(&g.arc1).copied().collect();
        all.push(g.origin);
        all.push(g.corner_minus_one);
        all.extend(g.mesh.vertices_with_label("d2"));
        all.sort_unstable();
        all.dedup();
        assert_eq!(all, g.mesh.boundary_vertices());
        let fine = QuarterGeometry::from_mesh(refine_uniform(&g.mesh)).unwrap();
        assert_eq!(fine.trace_dim(), 2 * g.trace_dim() + 1);
        assert!((g.trace_dim() as f64 - 1.0 / 0.1).abs() < 4.0);
    }

    #[test]
    fn zero_data_gives_zero_and_dimensions_match() {
        let g = build_quarter_geometry(0.15).unwrap();
        let ops = DtnOperators::new(&g, &MetricWeight::Flat).unwrap();
        let set = ops.at(0.5).unwrap();
        for k in TraceKind::ALL {
            assert_eq!(set.get(k).shape(), (g.trace_dim(), g.trace_dim()));
        }
        let zero = TraceVector {
            piece: Piece::D4,
            values: vec![0.0; g.trace_dim()],
        };
        let p = ops.apply(TraceKind::DD, 0.5, &zero).unwrap();
        assert!(p.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn crossings_match_direct_eigenvalues() {
        let c = check_crossings(0.1, 5, 160).unwrap();
        for (a, b) in c.direct_i.iter().zip(&c.direct_ii) {
            assert!((a - b).abs() <= 1e-8 * a);
        }
        assert!(c.passed(1e-6), "{:?} direct {:?} poles {:?} flagged {:?}", c.scan.crossings, c.direct_i, c.scan.poles, c.scan.flagged);
        let g = build_quarter_geometry(0.1).unwrap();
        let ops = DtnOperators::new(&g, &MetricWeight::Flat).unwrap();
        assert!(ops.scan_crossings(0.5, c.window.0, 8).unwrap().crossings.is_empty());
    }

    #[test]
    fn inadmissible_lambda_is_named() {
        let g = build_quarter_geometry(0.15).unwrap();
        let ops = DtnOperators::new(&g, &MetricWeight::Flat).unwrap();
        let mu = ops.aux_eigenvalues(AuxProblem::DirichletDirichlet, 0.1, 40.0).unwrap();
        assert!(!mu.is_empty());
        let err = ops.trace_operator(TraceKind::DN, mu[0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Dirichlet on d4 and Dirichlet on d3"), "{msg}");
    }

    #[test]
    fn determinant_ignores_node_order() {
        let g = build_quarter_geometry(0.15).unwrap();
        let ops = DtnOperators::new(&g, &MetricWeight::Flat).unwrap();
        let set = ops.at(3.0).unwrap();
        let base = set.det_c_plus_identity().unwrap();
        let n = g.trace_dim();
        let perm: Vec<usize> = (0..n).rev().collect();
        let p = permuted_det(&set, &perm).unwrap();
        assert_eq!(p.sign, base.sign);
        assert!((p.log_abs - base.log_abs).abs() < 1e-9 * base.log_abs.abs().max(1.0));
        // swapping two rows of C + I alone flips the sign
        let mut c = set.composite().unwrap() + DMatrix::identity(n, n);
        c.swap_rows(0, 1);
        assert_eq!(signed_log_det(c).sign, -base.sign);
    }

    #[test]
    fn dd_self_convergence_is_first_order() {
        // the Dirichlet/Neumann junction on the arc limits uniform refinement to O(h)
        let mut levels = vec![build_quarter_geometry(0.2).unwrap()];
        for _ in 0..3 {
            let m = refine_uniform(&levels.last().unwrap().mesh);
            levels.push(QuarterGeometry::from_mesh(m).unwrap());
        }
        let out: Vec<(Vec<f64>, Vec<f64>)> = levels
            .iter()
            .map(|g| {
                let ops = DtnOperators::new(g, &MetricWeight::Flat).unwrap();
                let xi = TraceVector {
                    piece: Piece::D4,
                    values: g.coordinates(Piece::D4).iter().map(|&y| (PI * y).sin()).collect(),
                };
                (g.coordinates(Piece::D3), ops.apply(TraceKind::DD, 1.0, &xi).unwrap().values)
            })
            .collect();
        // compare at the coarse nodes
        let at = |k: usize, r: f64| {
            let i = out[k].0.iter().position(|&x| (x - r).abs() < 1e-12).unwrap();
            out[k].1[i]
        };
        let diffs: Vec<f64> = (0..3)
            .map(|l| out[0].0.iter().map(|&r| (at(l, r) - at(l + 1, r)).abs()).fold(0.0, f64::max))
            .collect();
        for w in diffs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.8..3.0).contains(&ratio), "Cauchy ratios {diffs:?}");
        }
        assert!(diffs[2] < 5e-3, "{diffs:?}");
    }

    #[test]
    fn flux_recovery_on_linear_solution() {
        // w = x + 2y is harmonic; on the bottom side the outward derivative is -2
        let spec = build_rectangle(0.0, 0.0, 1.0, 1.0, [BoundaryTag::Dirichlet; 4]).unwrap();
        let m = mesh_unstructured(&spec, 0.1, 2).unwrap();
        let full = assemble_full(&m, &MetricWeight::Flat).unwrap();
        let data: Vec<(usize, f64)> = m
            .boundary_vertices()
            .into_iter()
            .map(|v| (v, m.vertices[v].x + 2.0 * m.vertices[v].y))
            .collect();
        let w = solve_with_boundary_data(&full, 0.0, &data, None, "square").unwrap();
        let r = full.stiffness.mul_vec(&w);
        for v in m.boundary_vertices() {
            let p = m.vertices[v];
            if p.y.abs() < 1e-12 && p.x > 1e-9 && p.x < 1.0 - 1e-9 {
                let len: f64 = m
                    .boundary_edges
                    .iter()
                    .filter(|e| e.a == v || e.b == v)
                    .map(|e| 0.5 * m.vertices[e.a].dist(m.vertices[e.b]))
                    .sum();
                assert!((r[v] / len + 2.0).abs() < 1e-9, "{}", r[v] / len);
            }
        }
    }
}
