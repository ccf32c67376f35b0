//! P1 stiffness and radially weighted mass matrices, Dirichlet elimination, and
//! inhomogeneous boundary-value solves for the shifted operator `K - λM`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{MetricWeight, Point};
use crate::mesh::Mesh;
use crate::sparse::{CsrMatrix, LdlFactor};

/// Stiffness and mass over every mesh vertex, before any constraint.
#[derive(Clone, Debug)]
pub struct FullMatrices {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
}

/// The generalized eigenproblem `K u = λ M u` on the free DOFs.
#[derive(Clone, Debug)]
pub struct MatrixPair {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// `dof_map[k]` is the vertex of free DOF `k`.
    pub dof_map: Vec<usize>,
    /// Constrained (Dirichlet) vertices, sorted.
    pub constrained: Vec<usize>,
    pub num_vertices: usize,
}

fn element(p: [Point; 3], weight: &MetricWeight) -> Result<([[f64; 3]; 3], [[f64; 3]; 3])> {
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    let area2 = e[0].cross(e[1]);
    if !(area2 > 0.0) {
        return Err(Error::Mesh(format!(
            "triangle at ({:.4}, {:.4}) is inverted or degenerate",
            p[0].x, p[0].y
        )));
    }
    let area = 0.5 * area2;
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = e[i].dot(e[j]) / (4.0 * area);
        }
    }
    // midpoint m_i sits on the edge opposite vertex i; phi_j(m_i) = 1/2 for j != i
    let f = [0, 1, 2].map(|i| weight.density(p[(i + 1) % 3].midpoint(p[(i + 2) % 3]).norm()));
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let s: f64 = if i == j {
                (0..3).filter(|&q| q != i).map(|q| f[q]).sum()
            } else {
                (0..3).filter(|&q| q != i && q != j).map(|q| f[q]).sum()
            };
            m[i][j] = area / 12.0 * s;
        }
    }
    Ok((k, m))
}

/// Assemble over all vertices. Entries `(i, j)` and `(j, i)` receive identical
/// summands in identical order, so both matrices are exactly symmetric.
pub fn assemble_full(mesh: &Mesh, weight: &MetricWeight) -> Result<FullMatrices> {
    weight.validate()?;
    let n = mesh.num_vertices();
    let mut kt = Vec::with_capacity(9 * mesh.num_triangles());
    let mut mt = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (ke, me) = element(mesh.triangle_points(t), weight)?;
        for a in 0..3 {
            for b in 0..3 {
                kt.push((tri[a], tri[b], ke[a][b]));
                mt.push((tri[a], tri[b], me[a][b]));
            }
        }
    }
    Ok(FullMatrices {
        stiffness: CsrMatrix::from_triplets(n, n, &kt),
        mass: CsrMatrix::from_triplets(n, n, &mt),
    })
}

/// Assemble and eliminate the mesh's Dirichlet vertices.
pub fn assemble(mesh: &Mesh, weight: &MetricWeight) -> Result<MatrixPair> {
    let full = assemble_full(mesh, weight)?;
    eliminate(&full, &mesh.dirichlet_vertices())
}

/// Restrict full matrices to the complement of `constrained`, then check that
/// the mass matrix factors as positive definite.
pub fn eliminate(full: &FullMatrices, constrained: &[usize]) -> Result<MatrixPair> {
    let n = full.stiffness.n_rows;
    let mut is_c = vec![false; n];
    for &v in constrained {
        if v >= n {
            return Err(Error::InvalidArgument(format!("constrained vertex {v} out of range")));
        }
        is_c[v] = true;
    }
    let dof_map: Vec<usize> = (0..n).filter(|&v| !is_c[v]).collect();
    let stiffness = full.stiffness.submatrix(&dof_map, &dof_map);
    let mass = full.mass.submatrix(&dof_map, &dof_map);
    if !dof_map.is_empty() {
        LdlFactor::factor(&mass, true).map_err(|e| match e {
            Error::SingularShift { detail, .. } => Error::NotPositiveDefinite(format!("mass matrix: {detail}")),
            Error::NotPositiveDefinite(d) => Error::NotPositiveDefinite(format!("mass matrix: {d}")),
            other => other,
        })?;
    }
    let mut constrained: Vec<usize> = (0..n).filter(|&v| is_c[v]).collect();
    constrained.dedup();
    Ok(MatrixPair {
        stiffness,
        mass,
        dof_map,
        constrained,
        num_vertices: n,
    })
}

impl MatrixPair {
    pub fn num_free(&self) -> usize {
        self.dof_map.len()
    }

    /// Free-DOF vector to a vertex field with zeros on constrained vertices.
    pub fn expand(&self, u: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_vertices];
        for (k, &v) in self.dof_map.iter().enumerate() {
            full[v] = u[k];
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.dof_map.iter().map(|&v| full[v]).collect()
    }

    /// Inverse of `dof_map`: vertex to free DOF.
    pub fn vertex_to_dof(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.num_vertices];
        for (k, &v) in self.dof_map.iter().enumerate() {
            out[v] = Some(k);
        }
        out
    }
}

/// Weak Neumann load `∫ g φ_i ds` over the boundary edges selected by
/// `use_edge`, by the trapezoidal rule on each edge.
pub fn neumann_load(mesh: &Mesh, use_edge: impl Fn(usize) -> bool, g: impl Fn(usize, Point) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_vertices()];
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        if !use_edge(k) {
            continue;
        }
        let (pa, pb) = (mesh.vertices[e.a], mesh.vertices[e.b]);
        let half = 0.5 * pa.dist(pb);
        b[e.a] += half * g(e.a, pa);
        b[e.b] += half * g(e.b, pb);
    }
    b
}

/// Solve `(K - λM) u = b` with `u` prescribed on `prescribed` vertices
/// (value pairs) and the weak load `b` elsewhere. `problem` names the
/// homogeneous problem whose spectrum must avoid `λ`; it is used in the error.
pub fn solve_with_boundary_data(
    full: &FullMatrices,
    lambda: f64,
    prescribed: &[(usize, f64)],
    neumann: Option<&[f64]>,
    problem: &str,
) -> Result<Vec<f64>> {
    let n = full.stiffness.n_rows;
    let mut value = vec![None; n];
    for &(v, g) in prescribed {
        value[v] = Some(g);
    }
    let free: Vec<usize> = (0..n).filter(|&v| value[v].is_none()).collect();
    let a = full.stiffness.lin_comb(1.0, &full.mass, -lambda);
    let g: Vec<f64> = value.iter().map(|v| v.unwrap_or(0.0)).collect();
    let ag = a.mul_vec(&g);
    let mut rhs: Vec<f64> = free.iter().map(|&v| -ag[v]).collect();
    if let Some(b) = neumann {
        for (k, &v) in free.iter().enumerate() {
            rhs[k] += b[v];
        }
    }
    let mut u = g;
    if free.is_empty() {
        return Ok(u);
    }
    let aff = a.submatrix(&free, &free);
    let f = LdlFactor::factor(&aff, false).map_err(|e| match e {
        Error::SingularShift { detail, .. } => Error::SingularShift {
            problem: problem.to_string(),
            lambda,
            detail,
        },
        other => other,
    })?;
    let x = f.solve(&rhs);
    for (k, &v) in free.iter().enumerate() {
        u[v] = x[k];
    }
    Ok(u)
}

/// Coordinate-format dump (`i j value` per line, 0-based) for external checks.
pub fn write_triplets(a: &CsrMatrix) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", a.n_rows, a.n_cols, a.nnz());
    for i in 0..a.n_rows {
        for (j, v) in a.row(i) {
            let _ = writeln!(s, "{i} {j} {v:.17e}");
        }
    }
    s
}
