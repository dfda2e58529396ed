//! Potentials, finite-difference assembly of `H = -Δ + V` with Dirichlet
//! boundary conditions, and the dense symmetric eigendecomposition that
//! stands in for the spectral measure.
//!
//! Boundary nodes (those on `∂[-L, L]^n`) are eliminated: the matrix acts on
//! interior nodes only and every eigenvector is extended by zero to the
//! full grid. Stencils wider than three points reach past the boundary;
//! those ghost values are taken from the odd reflection about the boundary
//! node, which keeps the matrix exactly symmetric.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Hermite,
    PoschlTeller { nu: u32 },
    Tabulated { values: Vec<f64> },
}

impl PotentialSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::Zero => "zero",
            PotentialSpec::Hermite => "hermite",
            PotentialSpec::PoschlTeller { .. } => "poschl_teller",
            PotentialSpec::Tabulated { .. } => "tabulated",
        }
    }

    /// Closed-form value at `x` for the analytic kinds; `None` for tabulated
    /// data, which is only defined on nodes.
    pub fn evaluate(&self, dimension: usize, x: [f64; 2]) -> Option<f64> {
        match self {
            PotentialSpec::Zero => Some(0.0),
            PotentialSpec::Hermite => Some(x[..dimension].iter().map(|v| v * v).sum()),
            PotentialSpec::PoschlTeller { nu } => {
                let nu = f64::from(*nu);
                let sech = 1.0 / x[0].cosh();
                Some(-nu * (nu + 1.0) * sech * sech)
            }
            PotentialSpec::Tabulated { .. } => None,
        }
    }
}

/// A real potential sampled at every node of a grid.
#[derive(Debug, Clone)]
pub struct Potential {
    spec: PotentialSpec,
    values: Vec<f64>,
}

impl Potential {
    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}

pub fn make_potential(spec: PotentialSpec, grid: &Grid) -> Result<Potential> {
    let n = grid.dimension();
    let values = match &spec {
        PotentialSpec::PoschlTeller { nu } => {
            if *nu == 0 {
                return Err(invalid("poschl_teller needs nu >= 1"));
            }
            if n != 1 {
                return Err(Error::Unsupported(
                    "the Pöschl-Teller potential is one dimensional".into(),
                ));
            }
            grid.points().into_iter().map(|x| spec.evaluate(n, x).unwrap()).collect()
        }
        PotentialSpec::Tabulated { values } => {
            if values.len() != grid.len() {
                return Err(invalid(format!(
                    "tabulated potential has {} values for {} nodes",
                    values.len(),
                    grid.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("tabulated potential".into()));
            }
            values.clone()
        }
        _ => grid.points().into_iter().map(|x| spec.evaluate(n, x).unwrap()).collect(),
    };
    Ok(Potential { spec, values })
}

/// Reads `(index, value)` rows. A non-numeric first row is taken as a
/// header. Every node index must appear exactly once.
pub fn load_tabulated(path: &Path, node_count: usize) -> Result<PotentialSpec> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut values = vec![f64::NAN; node_count];
    let mut seen = vec![false; node_count];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(Error::Parse(format!(
                "{}: row {} has {} fields, expected 2",
                path.display(),
                line + 1,
                record.len()
            )));
        }
        let (Ok(idx), Ok(val)) = (record[0].parse::<usize>(), record[1].parse::<f64>()) else {
            if line == 0 {
                continue;
            }
            return Err(Error::Parse(format!("{}: row {} is not numeric", path.display(), line + 1)));
        };
        if idx >= node_count || seen[idx] {
            return Err(Error::Parse(format!(
                "{}: row {}: node index {idx} out of range or repeated",
                path.display(),
                line + 1
            )));
        }
        seen[idx] = true;
        values[idx] = val;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Parse(format!("{}: node {missing} has no value", path.display())));
    }
    Ok(PotentialSpec::Tabulated { values })
}

/// Accuracy order of the central-difference Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StencilOrder {
    Second,
    Fourth,
    Sixth,
    Eighth,
}

impl StencilOrder {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            6 => Ok(Self::Sixth),
            8 => Ok(Self::Eighth),
            _ => Err(invalid(format!("stencil order must be 2, 4, 6 or 8, got {order}"))),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
            Self::Sixth => 6,
            Self::Eighth => 8,
        }
    }

    /// Coefficients of `-d²/dx²` (times `h²`) at offsets `0, 1, 2, ...`.
    pub fn coefficients(self) -> &'static [f64] {
        match self {
            Self::Second => &[2.0, -1.0],
            Self::Fourth => &[5.0 / 2.0, -4.0 / 3.0, 1.0 / 12.0],
            Self::Sixth => &[49.0 / 18.0, -3.0 / 2.0, 3.0 / 20.0, -1.0 / 90.0],
            Self::Eighth => &[205.0 / 72.0, -8.0 / 5.0, 1.0 / 5.0, -8.0 / 315.0, 1.0 / 560.0],
        }
    }
}

/// `-d²/dx²` on the interior nodes of one axis.
fn laplacian_1d(points: usize, h: f64, stencil: StencilOrder) -> DMatrix<f64> {
    let m = points - 2;
    let coef = stencil.coefficients();
    let scale = 1.0 / (h * h);
    let last = (points - 1) as isize;
    let mut a = DMatrix::zeros(m, m);
    for row in 0..m {
        let i = row as isize + 1;
        a[(row, row)] += coef[0] * scale;
        for (off, &c) in coef.iter().enumerate().skip(1) {
            for k in [i - off as isize, i + off as isize] {
                // Odd reflection about the boundary node.
                let target = if k < 0 {
                    Some((-k, -1.0))
                } else if k > last {
                    Some((2 * last - k, -1.0))
                } else {
                    Some((k, 1.0))
                };
                if let Some((t, sign)) = target {
                    if t > 0 && t < last {
                        a[(row, (t - 1) as usize)] += sign * c * scale;
                    }
                }
            }
        }
    }
    a
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Arc<Grid>,
    potential: Potential,
    stencil: StencilOrder,
    interior: Vec<usize>,
    matrix: DMatrix<f64>,
}

/// Second-order assembly of `-Δ + V`.
pub fn assemble(grid: Arc<Grid>, potential: Potential) -> Result<DiscreteOperator> {
    assemble_with_stencil(grid, potential, StencilOrder::Second)
}

pub fn assemble_with_stencil(
    grid: Arc<Grid>,
    potential: Potential,
    stencil: StencilOrder,
) -> Result<DiscreteOperator> {
    if potential.values.len() != grid.len() {
        return Err(invalid("potential does not match the grid"));
    }
    let p = grid.points_per_axis();
    let lap = laplacian_1d(p, grid.spacing(), stencil);
    let interior = grid.interior();
    let m = interior.len();
    let mut matrix = match grid.dimension() {
        1 => lap,
        _ => {
            let side = p - 2;
            let mut a = DMatrix::zeros(m, m);
            for r in 0..side {
                for s in 0..side {
                    let v = lap[(r, s)];
                    if v == 0.0 {
                        continue;
                    }
                    for t in 0..side {
                        a[(r * side + t, s * side + t)] += v;
                        a[(t * side + r, t * side + s)] += v;
                    }
                }
            }
            a
        }
    };
    for (row, &node) in interior.iter().enumerate() {
        matrix[(row, row)] += potential.values[node];
    }
    Ok(DiscreteOperator { grid, potential, stencil, interior, matrix })
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn stencil(&self) -> StencilOrder {
        self.stencil
    }

    /// Grid indices of the unknowns, in matrix order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `A f` on the interior, zero on the boundary.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::GridMismatch);
        }
        let v = DVector::from_iterator(
            self.interior.len(),
            self.interior.iter().map(|&k| f.values()[k]),
        );
        let av = &self.matrix * v;
        let mut out = vec![0.0; self.grid.len()];
        for (row, &k) in self.interior.iter().enumerate() {
            out[k] = av[row];
        }
        Ok(GridFunction::from_parts_unchecked(self.grid.clone(), out))
    }
}

/// Eigenpairs of the discrete operator. Eigenvalues ascend; eigenvectors are
/// stored as full-grid columns, orthonormal for the quadrature inner
/// product `⟨u, v⟩ = Σ w u v`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    grid: Arc<Grid>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    potential_min: f64,
}

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 0;

pub fn eigendecompose(op: &DiscreteOperator) -> Result<EigenDecomposition> {
    let m = op.matrix.nrows();
    let eig = SymmetricEigen::try_new(op.matrix.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Eigensolver(format!("QR iteration did not converge for a {m}x{m} matrix")))?;
    if let Some(bad) = eig.eigenvalues.iter().position(|v| !v.is_finite()) {
        return Err(Error::Eigensolver(format!("eigenvalue {bad} is not finite")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let norm = 1.0 / op.grid.cell_volume().sqrt();
    let n = op.grid.len();
    let mut vectors = DMatrix::zeros(n, m);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        // Fix the sign so the largest-magnitude entry is positive.
        let pivot = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        let sign = if pivot < 0.0 { -norm } else { norm };
        for (row, &node) in op.interior.iter().enumerate() {
            vectors[(node, col)] = sign * v[row];
        }
    }
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    Ok(EigenDecomposition {
        grid: op.grid.clone(),
        eigenvalues,
        eigenvectors: vectors,
        potential_min: op.potential.min_value(),
    })
}

impl EigenDecomposition {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Smallest value of the potential the operator was assembled with.
    pub fn potential_min(&self) -> f64 {
        self.potential_min
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Full-grid eigenvector matrix, one column per eigenvalue.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenfunction(&self, k: usize) -> GridFunction {
        GridFunction::from_parts_unchecked(
            self.grid.clone(),
            self.eigenvectors.column(k).iter().copied().collect(),
        )
    }

    /// Expansion coefficients `⟨e_k, f⟩` for every k.
    pub fn coefficients(&self, f: &GridFunction) -> Result<Vec<f64>> {
        if f.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::GridMismatch);
        }
        let w = self.grid.cell_volume();
        let fv = DVector::from_column_slice(f.values());
        let c = self.eigenvectors.tr_mul(&fv);
        Ok(c.iter().map(|v| v * w).collect())
    }

    /// `Σ_k c_k e_k`.
    pub fn synthesize(&self, coefficients: &[f64]) -> GridFunction {
        assert_eq!(coefficients.len(), self.len());
        let mut out = vec![0.0; self.grid.len()];
        for (k, &c) in coefficients.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(self.eigenvectors.column(k).iter()) {
                *o += c * e;
            }
        }
        GridFunction::from_parts_unchecked(self.grid.clone(), out)
    }

    /// Index range of eigenvalues inside `[lo, hi]`.
    pub fn band(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.eigenvalues.partition_point(|&l| l < lo);
        let end = self.eigenvalues.partition_point(|&l| l <= hi);
        start..end.max(start)
    }

    /// Largest eigenvalue considered trustworthy: the one at index
    /// `⌊fraction · #eigenvalues⌋`.
    pub fn resolved_cutoff(&self, fraction: f64) -> f64 {
        let idx = ((fraction * self.len() as f64).floor() as usize).min(self.len() - 1);
        self.eigenvalues[idx]
    }

    /// Largest scaled residual `‖A e_k − λ_k e_k‖ / (1 + |λ_k|)` (Euclidean
    /// norm of interior values of the unit vectors).
    pub fn max_residual(&self, op: &DiscreteOperator) -> f64 {
        let w = self.grid.cell_volume().sqrt();
        let m = op.interior.len();
        let mut worst = 0.0f64;
        for k in 0..self.len() {
            let v = DVector::from_iterator(m, op.interior.iter().map(|&i| self.eigenvectors[(i, k)] * w));
            let r = &op.matrix * &v - &v * self.eigenvalues[k];
            worst = worst.max(r.norm() / (1.0 + self.eigenvalues[k].abs()));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;

    fn op1(l: f64, p: usize, spec: PotentialSpec, stencil: StencilOrder) -> DiscreteOperator {
        let g = make_grid(1, l, p).unwrap();
        let v = make_potential(spec, &g).unwrap();
        assemble_with_stencil(g, v, stencil).unwrap()
    }

    #[test]
    fn potential_values() {
        assert_eq!(PotentialSpec::Hermite.evaluate(1, [2.0, 0.0]), Some(4.0));
        assert_eq!(PotentialSpec::Hermite.evaluate(2, [2.0, 1.0]), Some(5.0));
        assert_eq!(PotentialSpec::PoschlTeller { nu: 1 }.evaluate(1, [0.0, 0.0]), Some(-2.0));
        let g = make_grid(1, 3.0, 31).unwrap();
        let z = make_potential(PotentialSpec::Zero, &g).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn potential_errors() {
        let g2 = make_grid(2, 3.0, 9).unwrap();
        assert!(matches!(
            make_potential(PotentialSpec::PoschlTeller { nu: 1 }, &g2),
            Err(Error::Unsupported(_))
        ));
        let g1 = make_grid(1, 3.0, 9).unwrap();
        assert!(make_potential(PotentialSpec::PoschlTeller { nu: 0 }, &g1).is_err());
        assert!(make_potential(PotentialSpec::Tabulated { values: vec![0.0; 8] }, &g1).is_err());
    }

    #[test]
    fn second_order_stencil_rows() {
        let op = op1(1.0, 11, PotentialSpec::Zero, StencilOrder::Second);
        let h2 = op.grid().spacing().powi(2);
        let a = op.matrix();
        for i in 0..a.nrows() {
            assert_relative_eq!(a[(i, i)], 2.0 / h2, max_relative = 1e-14);
            if i + 1 < a.nrows() {
                assert_eq!(a[(i, i + 1)], -1.0 / h2);
                assert_eq!(a[(i + 1, i)], -1.0 / h2);
            }
            for j in 0..a.nrows() {
                if i.abs_diff(j) > 1 {
                    assert_eq!(a[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn hermite_adds_x_squared_on_diagonal() {
        let zero = op1(4.0, 41, PotentialSpec::Zero, StencilOrder::Second);
        let herm = op1(4.0, 41, PotentialSpec::Hermite, StencilOrder::Second);
        for (row, &node) in herm.interior().iter().enumerate() {
            let x = herm.grid().axis()[node];
            assert_relative_eq!(herm.matrix()[(row, row)] - zero.matrix()[(row, row)], x * x, epsilon = 1e-9);
        }
    }

    #[test]
    fn matrices_are_exactly_symmetric() {
        for stencil in [StencilOrder::Second, StencilOrder::Fourth, StencilOrder::Sixth, StencilOrder::Eighth] {
            let op = op1(3.0, 40, PotentialSpec::Hermite, stencil);
            assert_eq!(op.matrix(), &op.matrix().transpose());
            let g = make_grid(2, 2.0, 12).unwrap();
            let v = make_potential(PotentialSpec::Hermite, &g).unwrap();
            let op = assemble_with_stencil(g, v, stencil).unwrap();
            assert_eq!(op.matrix(), &op.matrix().transpose());
        }
    }

    #[test]
    fn dirichlet_box_spectrum() {
        let l = 2.0;
        for (stencil, tol) in [(StencilOrder::Second, 2e-3), (StencilOrder::Eighth, 1e-9)] {
            let op = op1(l, 201, PotentialSpec::Zero, stencil);
            let ed = eigendecompose(&op).unwrap();
            for k in 1..=6 {
                let exact = (k as f64 * std::f64::consts::PI / (2.0 * l)).powi(2);
                let got = ed.eigenvalues()[k - 1];
                assert!(((got - exact) / exact).abs() < tol, "{stencil:?} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn poschl_teller_ground_state() {
        let op = op1(15.0, 601, PotentialSpec::PoschlTeller { nu: 1 }, StencilOrder::Eighth);
        let ed = eigendecompose(&op).unwrap();
        assert!((ed.eigenvalues()[0] + 1.0).abs() < 1e-6, "{}", ed.eigenvalues()[0]);
        // Residual of the analytic ground state sech(x) against the matrix.
        let g = op.grid().clone();
        let sech = GridFunction::from_fn(g.clone(), |x| 1.0 / x[0].cosh()).unwrap();
        let hs = op.apply(&sech).unwrap();
        for &k in op.interior().iter().filter(|&&k| g.axis()[k].abs() < 10.0) {
            assert!((hs.values()[k] + sech.values()[k]).abs() < 1e-6);
        }
        assert!(ed.eigenvalues()[1] > -1e-3);
    }

    #[test]
    fn eigenpairs_are_orthonormal_with_small_residual() {
        let op = op1(6.0, 120, PotentialSpec::Hermite, StencilOrder::Eighth);
        let ed = eigendecompose(&op).unwrap();
        assert!(ed.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        assert!(ed.max_residual(&op) < 1e-8);
        let g = ed.grid().clone();
        for k in (0..ed.len()).step_by(7) {
            for m in (0..ed.len()).step_by(5) {
                let d = ed.eigenfunction(k).dot(&ed.eigenfunction(m)).unwrap();
                let expect = if k == m { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-10, "{k} {m} {d}");
            }
        }
        let _ = g;
    }

    #[test]
    fn two_dimensional_hermite_low_spectrum() {
        let g = make_grid(2, 6.0, 40).unwrap();
        let v = make_potential(PotentialSpec::Hermite, &g).unwrap();
        let op = assemble_with_stencil(g, v, StencilOrder::Eighth).unwrap();
        let ed = eigendecompose(&op).unwrap();
        // 2, 4, 4, 6, 6, 6 for −Δ + |x|² on ℝ².
        let expect = [2.0, 4.0, 4.0, 6.0, 6.0, 6.0];
        for (got, want) in ed.eigenvalues().iter().zip(expect) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn loads_tabulated_csv() {
        let dir = std::env::temp_dir().join(format!("specband-tab-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("v.csv");
        std::fs::write(&path, "index,value\n2,0.5\n0,1.5\n1,-2\n").unwrap();
        let spec = load_tabulated(&path, 3).unwrap();
        assert_eq!(spec, PotentialSpec::Tabulated { values: vec![1.5, -2.0, 0.5] });
        std::fs::write(&path, "0,1\n0,2\n").unwrap();
        assert!(load_tabulated(&path, 2).is_err());
        std::fs::write(&path, "0,1\n").unwrap();
        assert!(load_tabulated(&path, 2).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
