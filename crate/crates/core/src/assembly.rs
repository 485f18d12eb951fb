//! P1 matrices of the pencil `K u = -λ B_δ u`.
//!
//! `K = S_A - k² M_n` discretizes `(A∇u, ∇v) - k²(n u, v)`, `B_δ` the boundary
//! form `<S_δ u, v>`, and `H = S_{A₀} + k² M_1` the inner product used for
//! normalization. Degrees of freedom put interior nodes first and boundary
//! nodes last in angular order, so `B_δ` is a dense trailing block.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::coefficients::{Mat2, MediumSpec};
use crate::dense::DenseMatrix;
use crate::mesh::{Mesh, Point, RegionTag};
use crate::smoothing::{BoundaryBasis, SmootherSpec};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::{c64, Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    node_to_dof: Vec<usize>,
    dof_to_node: Vec<usize>,
    interior: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut on_boundary = vec![false; mesh.node_count()];
        for &b in mesh.boundary_nodes() {
            on_boundary[b] = true;
        }
        let mut dof_to_node: Vec<usize> = (0..mesh.node_count()).filter(|&i| !on_boundary[i]).collect();
        let interior = dof_to_node.len();
        dof_to_node.extend_from_slice(mesh.boundary_nodes());
        let mut node_to_dof = vec![0; mesh.node_count()];
        for (d, &n) in dof_to_node.iter().enumerate() {
            node_to_dof[n] = d;
        }
        Self { node_to_dof, dof_to_node, interior }
    }

    pub fn len(&self) -> usize {
        self.dof_to_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof_to_node.is_empty()
    }

    pub fn interior_count(&self) -> usize {
        self.interior
    }

    pub fn boundary_count(&self) -> usize {
        self.len() - self.interior
    }

    pub fn dof(&self, node: usize) -> usize {
        self.node_to_dof[node]
    }

    pub fn node(&self, dof: usize) -> usize {
        self.dof_to_node[dof]
    }

    /// Reorders a dof vector into node order.
    pub fn to_nodal(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::zero(); x.len()];
        for (d, &v) in x.iter().enumerate() {
            out[self.dof_to_node[d]] = v;
        }
        out
    }

    /// Reorders a node vector into dof order.
    pub fn from_nodal(&self, x: &[C64]) -> Vec<C64> {
        self.dof_to_node.iter().map(|&n| x[n]).collect()
    }
}

/// Gradients of the three barycentric hats of a triangle.
pub fn hat_gradients(p: [Point; 3]) -> [[f64; 2]; 3] {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    core::array::from_fn(|i| {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        [(a[1] - b[1]) / area2, (b[0] - a[0]) / area2]
    })
}

/// `∫_T a ∇φ_j · ∇φ_i` for a constant matrix `a`.
pub fn local_stiffness(p: [Point; 3], a: &Mat2) -> [[C64; 3]; 3] {
    let g = hat_gradients(p);
    let area = crate::mesh::signed_area(p[0], p[1], p[2]);
    core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            let mut s = C64::zero();
            for r in 0..2 {
                for c in 0..2 {
                    s += a[r][c] * (g[i][r] * g[j][c]);
                }
            }
            s * area
        })
    })
}

/// Mid-edge rule for `∫_T w φ_j φ_i`, with `w[l]` the weight at the midpoint
/// of the edge opposite vertex `l`.
pub fn local_mass(p: [Point; 3], w: [C64; 3]) -> [[C64; 3]; 3] {
    let area = crate::mesh::signed_area(p[0], p[1], p[2]);
    core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            let mut s = C64::zero();
            for (l, wl) in w.iter().enumerate() {
                // φ_i(m_l) = 1/2 for l != i, 0 otherwise
                if l != i && l != j {
                    s += wl * 0.25;
                }
            }
            s * (area / 3.0)
        })
    })
}

fn midpoints(p: [Point; 3]) -> [Point; 3] {
    core::array::from_fn(|l| {
        let (a, b) = (p[(l + 1) % 3], p[(l + 2) % 3]);
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    })
}

/// Region-averaged coefficient matrix of triangle `t` (exact for linear `A`).
pub(crate) fn mean_a(mesh: &Mesh, t: usize, a: impl Fn(Point, RegionTag) -> Mat2) -> Mat2 {
    let tag = mesh.tags()[t];
    let mut m = [[C64::zero(); 2]; 2];
    for x in midpoints(mesh.triangle_points(t)) {
        let v = a(x, tag);
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] += v[r][c] / 3.0;
            }
        }
    }
    m
}

pub(crate) fn midpoint_weights(mesh: &Mesh, t: usize, w: impl Fn(Point, RegionTag) -> C64) -> [C64; 3] {
    let tag = mesh.tags()[t];
    midpoints(mesh.triangle_points(t)).map(|x| w(x, tag))
}

/// Assembles a matrix from per-triangle local matrices into dof numbering.
pub(crate) fn assemble(mesh: &Mesh, dofs: &DofMap, local: impl Fn(usize) -> [[C64; 3]; 3]) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(dofs.len(), 9 * mesh.triangle_count());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = local(t);
        let d = tri.map(|n| dofs.dof(n));
        for i in 0..3 {
            for j in 0..3 {
                b.push(d[i], d[j], k[i][j]);
            }
        }
    }
    b.build()
}

/// `(S_A)_{ij} = ∫ A ∇φ_j · ∇φ_i`.
pub fn assemble_stiffness(mesh: &Mesh, dofs: &DofMap, med: &MediumSpec) -> CsrMatrix {
    assemble(mesh, dofs, |t| {
        local_stiffness(mesh.triangle_points(t), &mean_a(mesh, t, |x, tag| med.eval_a(x, tag)))
    })
}

/// `(M_w)_{ij} = ∫ w φ_j φ_i` by the mid-edge rule.
pub fn assemble_mass(mesh: &Mesh, dofs: &DofMap, weight: impl Fn(Point, RegionTag) -> C64) -> CsrMatrix {
    assemble(mesh, dofs, |t| local_mass(mesh.triangle_points(t), midpoint_weights(mesh, t, &weight)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    /// `K = K^H`, giving a real spectrum.
    Hermitian,
    /// `K = K^T` with complex entries.
    ComplexSymmetric,
    General,
}

#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub k: CsrMatrix,
    /// `B_δ` embedded in global numbering.
    pub bdelta: CsrMatrix,
    /// `B_δ` restricted to the boundary dofs.
    pub bdelta_block: DenseMatrix,
    pub h: CsrMatrix,
    pub wave_number: f64,
    pub dofs: DofMap,
    pub basis: BoundaryBasis,
    pub structure: Structure,
    /// Node coordinates in dof order.
    pub coords: Vec<Point>,
}

impl AssembledSystem {
    pub fn dof_count(&self) -> usize {
        self.dofs.len()
    }

    /// `B_δ x` using the dense boundary block.
    pub fn apply_bdelta(&self, x: &[C64]) -> Vec<C64> {
        let off = self.dofs.interior_count();
        let mut y = vec![C64::zero(); x.len()];
        let yb = self.bdelta_block.mul_vec(&x[off..]);
        y[off..].copy_from_slice(&yb);
        y
    }

    /// `u^H B_δ u`.
    pub fn boundary_form(&self, u: &[C64]) -> C64 {
        let off = self.dofs.interior_count();
        self.bdelta_block.quad_form(&u[off..])
    }
}

/// Assembles `K` for `med`, `B_δ` for `smoother` and `H` from the reference
/// medium `h_medium`.
pub fn assemble_system(
    mesh: &Mesh,
    med: &MediumSpec,
    h_medium: &MediumSpec,
    smoother: &SmootherSpec,
    wave_number: f64,
) -> Result<AssembledSystem> {
    if !(wave_number > 0.0 && wave_number.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("wave number must be positive, got {wave_number}")));
    }
    med.validate_on(mesh)?;
    h_medium.validate_on(mesh)?;
    let dofs = DofMap::new(mesh);
    let k2 = wave_number * wave_number;
    let stiffness = assemble_stiffness(mesh, &dofs, med);
    let mass_n = assemble_mass(mesh, &dofs, |x, tag| med.eval_n(x, tag));
    let k = stiffness.add(c64(1.0, 0.0), &mass_n, c64(-k2, 0.0));
    let mass_1 = assemble_mass(mesh, &dofs, |_, _| c64(1.0, 0.0));
    let h = assemble_stiffness(mesh, &dofs, h_medium).add(c64(1.0, 0.0), &mass_1, c64(k2, 0.0));
    let basis = BoundaryBasis::new(mesh, smoother)?;
    let bdelta_block = basis.boundary_matrix();
    let bdelta = CsrMatrix::from_dense_block(dofs.len(), dofs.interior_count(), &bdelta_block);
    let scale = k.max_abs();
    let structure = if k.hermitian_defect() <= 1e-12 * scale {
        Structure::Hermitian
    } else if k.symmetric_defect() <= 1e-12 * scale {
        Structure::ComplexSymmetric
    } else {
        Structure::General
    };
    let coords = (0..dofs.len()).map(|d| mesh.nodes()[dofs.node(d)]).collect();
    Ok(AssembledSystem { k, bdelta, bdelta_block, h, wave_number, dofs, basis, structure, coords })
}
