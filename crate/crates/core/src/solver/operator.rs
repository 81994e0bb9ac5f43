use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::discretization::{Grid, GridSpinorField, NodeKind};
use crate::error::{Error, Result};
use crate::geometry::{FrameTag, MetricSpec};
use crate::spinor::{gamma, real_spinor, zero_spinor, AnalyticSpinorField, SpinConnection, SpinMatrix, Spinor};

/// How edge nodes enter a discrete solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    /// Both components prescribed on every edge node (radial rings and the outermost
    /// polar rows).
    #[default]
    Dirichlet,
    /// On the radial rings only the component in the `−1` eigenspace of `iγ(n)`,
    /// `n` the outward normal, is prescribed. Polar rows are left free.
    Chiral,
}

/// Per-node coefficient basis: `ξ = Σ_k c_k u_k`, each `c_k` fixed or free.
#[derive(Clone, Copy, Debug)]
struct NodeBasis {
    u: [Spinor; 2],
    fixed: [bool; 2],
}

impl NodeBasis {
    fn identity(fixed: bool) -> Self {
        NodeBasis {
            u: [real_spinor(1.0, 0.0), real_spinor(0.0, 1.0)],
            fixed: [fixed; 2],
        }
    }

    /// Prescribed component first.
    fn chiral(outward: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // iγ₁ = −σ₁; its −1 eigenvector is (1, 1)/√2, flipped for an inward-pointing e₁.
        let (fixed, free) = if outward > 0.0 {
            (real_spinor(s, s), real_spinor(s, -s))
        } else {
            (real_spinor(s, -s), real_spinor(s, s))
        };
        NodeBasis {
            u: [fixed, free],
            fixed: [true, false],
        }
    }

    fn coefficients(&self, xi: &Spinor) -> [Complex64; 2] {
        [self.u[0].dotc(xi), self.u[1].dotc(xi)]
    }
}

/// Discrete Dirac operator in a box scheme: one equation per grid cell, evaluated at the
/// cell centre from its four corner nodes, with exact geometry at the centre.
#[derive(Clone, Debug)]
pub struct Cell {
    pub corners: [usize; 4],
    /// First-order part of each corner's block.
    pub grad: [SpinMatrix; 4],
    /// `Σ_k γ_k A_k` at the centre; each corner carries a quarter.
    pub omega: SpinMatrix,
    pub r: f64,
    pub theta: f64,
}

/// Realified sparse operator with boundary data eliminated.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: CsMat<f64>,
    pub transpose: CsMat<f64>,
    pub grid: Grid,
    pub tag: FrameTag,
    pub boundary: BoundaryCondition,
    pub cells: Vec<Cell>,
    basis: Vec<NodeBasis>,
    /// Column index of each node coefficient's real part, if free.
    column_of: Vec<[Option<usize>; 2]>,
}

const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

pub fn assemble(spec: &MetricSpec, grid: &Grid, boundary: BoundaryCondition) -> Result<DiscreteOperator> {
    grid.check_metric(spec)?;
    let (nr, nt) = (grid.n_r, grid.n_theta);
    let (r, th) = (grid.r(), grid.theta());
    let g1 = gamma(0);
    let g2 = gamma(1);
    let cell_ids: Vec<(usize, usize)> = (0..nr - 1)
        .flat_map(|i| (0..nt - 1).map(move |j| (i, j)))
        .collect();
    let cells: Vec<Cell> = cell_ids
        .par_iter()
        .map(|&(i, j)| -> Result<Cell> {
            let rc = 0.5 * (r[i] + r[i + 1]);
            let tc = 0.5 * (th[j] + th[j + 1]);
            let sc = SpinConnection::at(spec, rc, tc)?;
            let dr = r[i + 1] - r[i];
            let dt = th[j + 1] - th[j];
            let wr = sc.inv_h(0) / (2.0 * dr);
            let wt = sc.inv_h(1) / (2.0 * dt);
            let mut grad = [SpinMatrix::zeros(); 4];
            let mut corners = [0; 4];
            for (c, &(a, b)) in CORNERS.iter().enumerate() {
                let sr = if a == 1 { wr } else { -wr };
                let st = if b == 1 { wt } else { -wt };
                grad[c] = g1 * Complex64::from(sr) + g2 * Complex64::from(st);
                corners[c] = grid.index(i + a, j + b);
            }
            Ok(Cell {
                corners,
                grad,
                omega: sc.dirac_zeroth_order(),
                r: rc,
                theta: tc,
            })
        })
        .collect::<Result<_>>()?;

    let basis: Vec<NodeBasis> = grid
        .nodes()
        .map(|(i, j, _, _)| {
            let radial_edge = i == 0 || i + 1 == nr;
            let polar_edge = j == 0 || j + 1 == nt;
            match boundary {
                BoundaryCondition::Dirichlet => NodeBasis::identity(radial_edge || polar_edge),
                BoundaryCondition::Chiral if radial_edge => {
                    NodeBasis::chiral(if i == 0 { -1.0 } else { 1.0 })
                }
                BoundaryCondition::Chiral => NodeBasis::identity(false),
            }
        })
        .collect();

    let mut column_of = vec![[None; 2]; grid.len()];
    let mut ncols = 0;
    for (node, b) in basis.iter().enumerate() {
        for k in 0..2 {
            if !b.fixed[k] {
                column_of[node][k] = Some(ncols);
                ncols += 2;
            }
        }
    }
    if ncols == 0 {
        return Err(Error::InvalidParameter("grid has no free unknowns".into()));
    }

    let nrows = 4 * cells.len();
    let mut tri = TriMat::new((nrows, ncols));
    let mut tri_t = TriMat::new((ncols, nrows));
    for (e, cell) in cells.iter().enumerate() {
        for c in 0..4 {
            let block = cell.grad[c] + cell.omega * Complex64::from(0.25);
            let node = cell.corners[c];
            for k in 0..2 {
                let Some(col) = column_of[node][k] else { continue };
                let v = block * basis[node].u[k];
                for comp in 0..2 {
                    let z = v[comp];
                    // c = x + iy: x contributes z, y contributes iz.
                    let entries = [
                        (4 * e + 2 * comp, col, z.re),
                        (4 * e + 2 * comp + 1, col, z.im),
                        (4 * e + 2 * comp, col + 1, -z.im),
                        (4 * e + 2 * comp + 1, col + 1, z.re),
                    ];
                    for (row, cc, val) in entries {
                        if val != 0.0 {
                            tri.add_triplet(row, cc, val);
                            tri_t.add_triplet(cc, row, val);
                        }
                    }
                }
            }
        }
    }

    Ok(DiscreteOperator {
        matrix: tri.to_csr(),
        transpose: tri_t.to_csr(),
        grid: grid.clone(),
        tag: spec.tag().clone(),
        boundary,
        cells,
        basis,
        column_of,
    })
}

impl DiscreteOperator {
    /// The same operator multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.matrix.scale(c);
        out.transpose.scale(c);
        for cell in &mut out.cells {
            cell.grad.iter_mut().for_each(|g| *g *= Complex64::from(c));
            cell.omega *= Complex64::from(c);
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    /// Largest number of stored entries in any row.
    pub fn max_row_nnz(&self) -> usize {
        let ip = self.matrix.indptr();
        let ip = ip.to_proper();
        ip.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    fn check_field(&self, field: &GridSpinorField) -> Result<()> {
        field.check_grid(&self.grid)?;
        if field.tag != self.tag {
            return Err(Error::FrameMismatch {
                field: field.tag.to_string(),
                metric: self.tag.to_string(),
            });
        }
        Ok(())
    }

    /// Discrete Dirac operator at every cell centre, using every node value.
    pub fn apply_field(&self, field: &GridSpinorField) -> Result<Vec<Spinor>> {
        self.check_field(field)?;
        Ok(self
            .cells
            .par_iter()
            .map(|cell| self.cell_action(cell, field, true, true))
            .collect())
    }

    /// Splits the discrete action into its derivative and connection parts.
    pub fn apply_parts(&self, field: &GridSpinorField) -> Result<(Vec<Spinor>, Vec<Spinor>)> {
        self.check_field(field)?;
        Ok(self
            .cells
            .par_iter()
            .map(|cell| {
                (
                    self.cell_action(cell, field, true, false),
                    self.cell_action(cell, field, false, true),
                )
            })
            .unzip())
    }

    fn cell_action(&self, cell: &Cell, field: &GridSpinorField, grad: bool, conn: bool) -> Spinor {
        let mut out = zero_spinor();
        let mut avg = zero_spinor();
        for c in 0..4 {
            let v = &field.values[cell.corners[c]];
            if grad {
                out += cell.grad[c] * v;
            }
            avg += v;
        }
        if conn {
            out += cell.omega * avg * Complex64::from(0.25);
        }
        out
    }

    /// Realified right-hand side `ρ − (fixed boundary contributions)`.
    pub fn rhs(&self, rho: &[Spinor], data: &GridSpinorField) -> Result<Vec<f64>> {
        self.check_field(data)?;
        if rho.len() != self.cells.len() {
            return Err(Error::InvalidParameter(format!(
                "{} right-hand-side cells for {} cells",
                rho.len(),
                self.cells.len()
            )));
        }
        // Only the fixed coefficients of the data survive.
        let fixed = self.fixed_part(data);
        let bc = self.apply_field(&fixed)?;
        let mut b = vec![0.0; self.rows()];
        for (e, (p, q)) in rho.iter().zip(&bc).enumerate() {
            let d = p - q;
            b[4 * e] = d[0].re;
            b[4 * e + 1] = d[0].im;
            b[4 * e + 2] = d[1].re;
            b[4 * e + 3] = d[1].im;
        }
        Ok(b)
    }

    fn fixed_part(&self, data: &GridSpinorField) -> GridSpinorField {
        let mut out = data.clone();
        for (node, v) in out.values.iter_mut().enumerate() {
            let b = &self.basis[node];
            let c = b.coefficients(v);
            let mut w = zero_spinor();
            for k in 0..2 {
                if b.fixed[k] {
                    w += b.u[k] * c[k];
                }
            }
            *v = w;
        }
        out
    }

    /// Rebuilds a node field from the unknown vector and the fixed coefficients of `data`.
    pub fn field_from(&self, x: &[f64], data: &GridSpinorField) -> Result<GridSpinorField> {
        self.check_field(data)?;
        let mut out = self.fixed_part(data);
        for (node, v) in out.values.iter_mut().enumerate() {
            for k in 0..2 {
                if let Some(col) = self.column_of[node][k] {
                    *v += self.basis[node].u[k] * Complex64::new(x[col], x[col + 1]);
                }
            }
            out.mask[node] = if self.basis[node].fixed.iter().any(|&f| f) {
                NodeKind::Dirichlet
            } else {
                NodeKind::Interior
            };
        }
        Ok(out)
    }

    /// Unknown vector holding the free coefficients of `field`.
    pub fn unknowns_of(&self, field: &GridSpinorField) -> Result<Vec<f64>> {
        self.check_field(field)?;
        let mut x = vec![0.0; self.cols()];
        for (node, v) in field.values.iter().enumerate() {
            let c = self.basis[node].coefficients(v);
            for k in 0..2 {
                if let Some(col) = self.column_of[node][k] {
                    x[col] = c[k].re;
                    x[col + 1] = c[k].im;
                }
            }
        }
        Ok(x)
    }

    /// Analytic `D ξ` at every cell centre.
    pub fn sample_rhs(&self, spec: &MetricSpec, field: &AnalyticSpinorField) -> Result<Vec<Spinor>> {
        if spec.tag() != &self.tag {
            return Err(Error::FrameMismatch {
                field: spec.tag().to_string(),
                metric: self.tag.to_string(),
            });
        }
        self.cells
            .par_iter()
            .map(|c| crate::spinor::dirac_apply(spec, field, c.r, c.theta))
            .collect()
    }
}

/// `y = A x`, row-parallel; each row is summed in a fixed order.
pub fn spmv(a: &CsMat<f64>, x: &[f64], y: &mut [f64]) {
    let ip = a.indptr();
    let ip = ip.to_proper();
    let (idx, val) = (a.indices(), a.data());
    y.par_iter_mut().enumerate().with_min_len(256).for_each(|(row, out)| {
        let mut s = 0.0;
        for k in ip[row]..ip[row + 1] {
            s += val[k] * x[idx[k]];
        }
        *out = s;
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, Spacing};
    use crate::jet::Jet;

    fn smooth(spec: &MetricSpec) -> AnalyticSpinorField {
        AnalyticSpinorField::new(spec, "smooth", |r, t| {
            [(-r).exp() * t.cos(), r.sin() * 0.3, t.sin() * r * 0.2, Jet::constant(0.1) + t]
        })
    }

    #[test]
    fn sparsity_bound() {
        let grid = build_grid(1.0, 4.0, 12, 10, Spacing::Uniform).unwrap();
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Chiral] {
            let op = assemble(&MetricSpec::melvin(2.0).unwrap(), &grid, bc).unwrap();
            assert!(op.max_row_nnz() <= 16);
            assert_eq!(op.rows(), 4 * 11 * 9);
        }
    }

    #[test]
    fn zero_field_has_zero_image() {
        let spec = MetricSpec::flat();
        let grid = build_grid(1.0, 4.0, 8, 8, Spacing::Uniform).unwrap();
        let op = assemble(&spec, &grid, BoundaryCondition::Dirichlet).unwrap();
        let z = GridSpinorField::zeros(&grid, spec.tag().clone());
        assert!(op.apply_field(&z).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn matrix_matches_cell_action_on_free_unknowns() {
        let spec = MetricSpec::melvin(2.0).unwrap();
        let grid = build_grid(1.0, 3.0, 7, 6, Spacing::Geometric).unwrap();
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Chiral] {
            let op = assemble(&spec, &grid, bc).unwrap();
            let s = GridSpinorField::sample(&grid, &smooth(&spec));
            let x = op.unknowns_of(&s).unwrap();
            let mut ax = vec![0.0; op.rows()];
            spmv(&op.matrix, &x, &mut ax);
            let zero_rho = vec![zero_spinor(); op.cells.len()];
            let b = op.rhs(&zero_rho, &s).unwrap();
            let full = op.apply_field(&s).unwrap();
            for (e, v) in full.iter().enumerate() {
                let got = [ax[4 * e] - b[4 * e], ax[4 * e + 1] - b[4 * e + 1], ax[4 * e + 2] - b[4 * e + 2], ax[4 * e + 3] - b[4 * e + 3]];
                let want = [v[0].re, v[0].im, v[1].re, v[1].im];
                for k in 0..4 {
                    assert!((got[k] - want[k]).abs() < 1e-12, "{got:?} vs {want:?}");
                }
            }
            let back = op.field_from(&x, &s).unwrap();
            assert!(back.sub(&s).max_norm() < 1e-14);
        }
    }

    #[test]
    fn consistency_is_second_order() {
        for spec in [MetricSpec::flat(), MetricSpec::melvin(2.0).unwrap()] {
            let f = smooth(&spec);
            let mut errs = Vec::new();
            for n in [16, 32, 64] {
                let grid = build_grid(1.0, 4.0, n + 1, n, Spacing::Uniform).unwrap();
                let op = assemble(&spec, &grid, BoundaryCondition::Dirichlet).unwrap();
                let d = op.apply_field(&GridSpinorField::sample(&grid, &f)).unwrap();
                let exact = op.sample_rhs(&spec, &f).unwrap();
                // cot θ in the connection turns the O(h²) corner average into O(h²/θ) on the
                // first cells off the axis, so the max is taken on a band.
                let band = |c: &Cell| (c.theta - std::f64::consts::FRAC_PI_2).abs() <= std::f64::consts::FRAC_PI_4 + 1e-9;
                let err = op
                    .cells
                    .iter()
                    .zip(d.iter().zip(&exact))
                    .filter(|(c, _)| band(c))
                    .map(|(_, (a, b))| (a - b).norm())
                    .fold(0.0, f64::max);
                errs.push(err);
            }
            for w in errs.windows(2) {
                assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
            }
        }
    }
}
