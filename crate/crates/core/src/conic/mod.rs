//! Conic-program intermediate representation and solve contract.
//!
//! Programs in this family have one complex Hermitian PSD matrix variable
//! `W` (the beamforming covariance), a handful of named real scalars (the
//! epigraph/slack variables), a linear objective, and constraint blocks
//! drawn from three families: linear inequalities, second-order cones, and
//! PSD cones over affine Hermitian matrix expressions.
//!
//! `W` is parameterized by its `n²` real degrees of freedom (diagonal plus
//! real and imaginary parts of the upper triangle); every expression is an
//! affine function of those parameters and the scalars. Complex PSD blocks
//! are lowered through the standard real symmetric embedding
//! `[[Re H, −Im H], [Im H, Re H]]`, whose eigenvalues are those of `H` with
//! doubled multiplicity.

mod lower;

pub use lower::{dump_sparse_triplets, solve};

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::{CMatrix, CVector};

#[derive(Debug, Clone, PartialEq)]
pub enum ConicError {
    NotHermitian { asymmetry: f64 },
    ZeroBeamformer,
    Malformed(String),
}

impl std::fmt::Display for ConicError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConicError::NotHermitian { asymmetry } => {
                write!(f, "matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")
            }
            ConicError::ZeroBeamformer => write!(f, "covariance is numerically zero; no beamformer to extract"),
            ConicError::Malformed(m) => write!(f, "malformed program: {m}"),
        }
    }
}

impl std::error::Error for ConicError {}

/// Handle to a named scalar variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarId(pub(crate) usize);

/// Real affine expression over the program's variables, keyed by flat
/// variable index (W parameters first, then scalars).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub(crate) terms: BTreeMap<usize, f64>,
    pub(crate) constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr { terms: BTreeMap::new(), constant: c }
    }

    pub(crate) fn term(var: usize, coeff: f64) -> Self {
        let mut terms = BTreeMap::new();
        if coeff != 0.0 {
            terms.insert(var, coeff);
        }
        LinExpr { terms, constant: 0.0 }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_assign(other, 1.0);
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_assign(other, -1.0);
        out
    }

    pub fn scale(&self, c: f64) -> LinExpr {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out.constant *= c;
        out
    }

    pub fn plus_const(&self, c: f64) -> LinExpr {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    pub(crate) fn add_assign(&mut self, other: &LinExpr, scale: f64) {
        for (&v, &c) in &other.terms {
            *self.terms.entry(v).or_insert(0.0) += c * scale;
        }
        self.constant += other.constant * scale;
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.values().all(|&c| c == 0.0)
    }

    /// Evaluate at a flat assignment vector.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(&v, &c)| c * x[v]).sum::<f64>()
    }
}

/// Complex affine expression: a pair of real expressions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CLinExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CLinExpr {
    pub fn constant(c: Complex64) -> Self {
        CLinExpr { re: LinExpr::constant(c.re), im: LinExpr::constant(c.im) }
    }

    pub fn add(&self, other: &CLinExpr) -> CLinExpr {
        CLinExpr { re: self.re.add(&other.re), im: self.im.add(&other.im) }
    }

    pub fn scale(&self, c: Complex64) -> CLinExpr {
        CLinExpr {
            re: self.re.scale(c.re).sub(&self.im.scale(c.im)),
            im: self.re.scale(c.im).add(&self.im.scale(c.re)),
        }
    }

    pub fn conj(&self) -> CLinExpr {
        CLinExpr { re: self.re.clone(), im: self.im.scale(-1.0) }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}

/// Affine Hermitian matrix expression; the upper triangle is stored
/// column-major and diagonal entries must have a structurally zero
/// imaginary part.
#[derive(Debug, Clone)]
pub struct HermExpr {
    n: usize,
    upper: Vec<CLinExpr>,
}

impl HermExpr {
    pub fn from_fn(n: usize, mut entry: impl FnMut(usize, usize) -> CLinExpr) -> Self {
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in 0..=j {
                let e = entry(i, j);
                if i == j {
                    assert!(
                        e.im.is_zero(),
                        "diagonal entry ({i},{i}) of a Hermitian expression must have zero imaginary part"
                    );
                }
                upper.push(e);
            }
        }
        HermExpr { n, upper }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        j * (j + 1) / 2 + i
    }

    /// Entry (i, j) with Hermitian symmetry applied for i > j.
    pub fn entry(&self, i: usize, j: usize) -> CLinExpr {
        if i <= j {
            self.upper[self.idx(i, j)].clone()
        } else {
            self.upper[self.idx(j, i)].conj()
        }
    }

    /// Numeric value at a flat assignment.
    pub fn eval(&self, x: &[f64]) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j).eval(x))
    }
}

/// Optimization direction for the linear objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub(crate) enum Block {
    /// Each expression ≤ 0.
    LinearLe(Vec<LinExpr>),
    /// Each expression = 0.
    LinearEq(Vec<LinExpr>),
    /// ‖tail‖₂ ≤ head.
    Soc { head: LinExpr, tail: Vec<LinExpr> },
    /// Matrix expression ⪰ 0.
    Psd(HermExpr),
}

/// Conic program over one Hermitian matrix variable and named scalars.
///
/// The matrix variable's PSD constraint is implicit and always emitted; the
/// caller adds everything else.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    n: usize,
    scalar_names: Vec<String>,
    sense: Sense,
    objective: LinExpr,
    pub(crate) blocks: Vec<Block>,
}

impl ConicProgram {
    /// A program whose matrix variable is n×n. The objective defaults to
    /// the constant zero (pure feasibility).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "matrix variable must have positive size");
        ConicProgram {
            n,
            scalar_names: Vec::new(),
            sense: Sense::Maximize,
            objective: LinExpr::default(),
            blocks: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_scalars(&self) -> usize {
        self.scalar_names.len()
    }

    pub(crate) fn n_vars(&self) -> usize {
        self.n * self.n + self.scalar_names.len()
    }

    pub fn scalar_name(&self, id: ScalarId) -> &str {
        &self.scalar_names[id.0]
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> ScalarId {
        self.scalar_names.push(name.into());
        ScalarId(self.scalar_names.len() - 1)
    }

    pub fn set_objective(&mut self, sense: Sense, objective: LinExpr) {
        self.sense = sense;
        self.objective = objective;
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    // --- flat variable layout -------------------------------------------
    //
    // W parameters come first, column-major over the upper triangle: the
    // diagonal entry contributes one parameter, an off-diagonal entry (i<j)
    // contributes (Re, Im) in that order. Scalars follow.

    pub(crate) fn w_param_base(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        // Parameters consumed by columns 0..j: column c has c off-diagonal
        // entries (2 params each) and one diagonal param.
        let before: usize = (0..j).map(|c| 2 * c + 1).sum();
        before + 2 * i
    }

    pub(crate) fn scalar_index(&self, id: ScalarId) -> usize {
        self.n * self.n + id.0
    }

    /// Expression for a scalar variable.
    pub fn scalar(&self, id: ScalarId) -> LinExpr {
        LinExpr::term(self.scalar_index(id), 1.0)
    }

    /// Expression for the complex entry W[i,j].
    pub fn w_entry(&self, i: usize, j: usize) -> CLinExpr {
        if i == j {
            CLinExpr { re: LinExpr::term(self.w_param_base(i, i), 1.0), im: LinExpr::default() }
        } else if i < j {
            CLinExpr {
                re: LinExpr::term(self.w_param_base(i, j), 1.0),
                im: LinExpr::term(self.w_param_base(i, j) + 1, 1.0),
            }
        } else {
            self.w_entry(j, i).conj()
        }
    }

    /// Expression for the real diagonal entry W[n,n].
    pub fn w_diag(&self, i: usize) -> LinExpr {
        LinExpr::term(self.w_param_base(i, i), 1.0)
    }

    /// Tr(W).
    pub fn w_trace(&self) -> LinExpr {
        let mut e = LinExpr::default();
        for i in 0..self.n {
            e.add_assign(&self.w_diag(i), 1.0);
        }
        e
    }

    /// The real quadratic form hᴴWh as an affine expression in W:
    /// Σ_i |h_i|² W_ii + Σ_{i<j} 2·Re(conj(h_i)h_j · W_ij).
    pub fn quad_form(&self, h: &CVector) -> LinExpr {
        assert_eq!(h.len(), self.n, "quad_form vector length mismatch");
        let mut e = LinExpr::default();
        for i in 0..self.n {
            e.add_assign(&self.w_diag(i), h[i].norm_sqr());
        }
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let c = h[i].conj() * h[j];
                let base = self.w_param_base(i, j);
                e.add_assign(&LinExpr::term(base, 1.0), 2.0 * c.re);
                e.add_assign(&LinExpr::term(base + 1, 1.0), -2.0 * c.im);
            }
        }
        e
    }

    /// Tr(A W) for a constant Hermitian A — real-valued by symmetry.
    pub fn trace_product(&self, a: &CMatrix) -> LinExpr {
        assert_eq!(a.nrows(), self.n);
        assert_eq!(a.ncols(), self.n);
        // Tr(A W) = Σ_i A_ii W_ii + Σ_{i<j} 2 Re(A_ji W_ij).
        let mut e = LinExpr::default();
        for i in 0..self.n {
            e.add_assign(&self.w_diag(i), a[(i, i)].re);
        }
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let c = a[(j, i)];
                let base = self.w_param_base(i, j);
                e.add_assign(&LinExpr::term(base, 1.0), 2.0 * c.re);
                e.add_assign(&LinExpr::term(base + 1, 1.0), -2.0 * c.im);
            }
        }
        e
    }

    /// The Hermitian matrix expression S·W·S for constant Hermitian S.
    pub fn sandwich(&self, s: &CMatrix) -> HermExpr {
        assert_eq!(s.nrows(), self.n);
        assert_eq!(s.ncols(), self.n);
        // T = W·S first, then S·T.
        let n = self.n;
        let mut t = vec![vec![CLinExpr::default(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut e = CLinExpr::default();
                for k in 0..n {
                    e = e.add(&self.w_entry(i, k).scale(s[(k, j)]));
                }
                t[i][j] = e;
            }
        }
        HermExpr::from_fn(n, |i, j| {
            let mut e = CLinExpr::default();
            for k in 0..n {
                e = e.add(&t[k][j].scale(s[(i, k)]));
            }
            if i == j {
                // Hermitian by construction; drop the numerically-zero
                // imaginary expression on the diagonal.
                e.im = LinExpr::default();
            }
            e
        })
    }

    /// The complex vector expression S·W·h for constant S and h.
    pub fn matrix_vector(&self, s: &CMatrix, h: &CVector) -> Vec<CLinExpr> {
        assert_eq!(s.nrows(), self.n);
        assert_eq!(h.len(), self.n);
        let n = self.n;
        // u = W·h, then S·u.
        let mut u = vec![CLinExpr::default(); n];
        for i in 0..n {
            let mut e = CLinExpr::default();
            for k in 0..n {
                e = e.add(&self.w_entry(i, k).scale(h[k]));
            }
            u[i] = e;
        }
        (0..n)
            .map(|i| {
                let mut e = CLinExpr::default();
                for k in 0..n {
                    e = e.add(&u[k].scale(s[(i, k)]));
                }
                e
            })
            .collect()
    }

    /// The identity Hermitian expression for W itself (used for the
    /// implicit W ⪰ 0 block, and available for ξI − W style constraints).
    pub fn w_herm_expr(&self) -> HermExpr {
        HermExpr::from_fn(self.n, |i, j| self.w_entry(i, j))
    }

    // --- constraint blocks ----------------------------------------------

    /// expr ≤ 0.
    pub fn add_linear_le(&mut self, expr: LinExpr) {
        self.blocks.push(Block::LinearLe(vec![expr]));
    }

    /// expr = 0.
    pub fn add_linear_eq(&mut self, expr: LinExpr) {
        self.blocks.push(Block::LinearEq(vec![expr]));
    }

    /// ‖tail‖ ≤ head.
    pub fn add_soc(&mut self, head: LinExpr, tail: Vec<LinExpr>) {
        assert!(!tail.is_empty(), "SOC tail must be nonempty");
        self.blocks.push(Block::Soc { head, tail });
    }

    /// expr ⪰ 0 (complex Hermitian affine).
    pub fn add_psd(&mut self, expr: HermExpr) {
        self.blocks.push(Block::Psd(expr));
    }

    /// Pack a numeric (W, scalars) pair into a flat assignment, e.g. to
    /// evaluate expressions at a known point.
    pub fn pack(&self, w: &CMatrix, scalars: &[f64]) -> Result<Vec<f64>, ConicError> {
        if w.nrows() != self.n || w.ncols() != self.n {
            return Err(ConicError::Malformed(format!(
                "matrix is {}x{}, variable is {}x{}",
                w.nrows(),
                w.ncols(),
                self.n,
                self.n
            )));
        }
        if scalars.len() != self.scalar_names.len() {
            return Err(ConicError::Malformed(format!(
                "{} scalar values supplied, {} declared",
                scalars.len(),
                self.scalar_names.len()
            )));
        }
        let mut x = vec![0.0; self.n_vars()];
        for j in 0..self.n {
            for i in 0..=j {
                let base = self.w_param_base(i, j);
                if i == j {
                    x[base] = w[(i, i)].re;
                } else {
                    x[base] = w[(i, j)].re;
                    x[base + 1] = w[(i, j)].im;
                }
            }
        }
        x[self.n * self.n..].copy_from_slice(scalars);
        Ok(x)
    }

    /// Unpack the matrix variable from a flat assignment.
    pub(crate) fn unpack_w(&self, x: &[f64]) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| self.w_entry(i, j).eval(x))
    }
}

/// Terminal status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

/// Solver configuration; the defaults match the pipeline's accuracy targets.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol_feas: 1e-6, tol_gap: 1e-6, max_iter: 200 }
    }
}

/// Outcome of one conic solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Sense-corrected objective value (meaningful when status = Optimal).
    pub objective: f64,
    /// Value of the Hermitian matrix variable.
    pub w: CMatrix,
    /// Values of the named scalars, by declaration order.
    pub scalars: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: u32,
}

impl SolveReport {
    pub fn scalar(&self, id: ScalarId) -> f64 {
        self.scalars[id.0]
    }
}

/// Real symmetric embedding `[[Re H, −Im H], [Im H, Re H]]` of a complex
/// Hermitian matrix.
pub fn embed_hermitian(h: &CMatrix) -> Result<DMatrix<f64>, ConicError> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(ConicError::Malformed(format!("matrix is {}x{}, not square", n, h.ncols())));
    }
    let scale = h.norm().max(1.0);
    let asymmetry = (h - h.adjoint()).norm() / scale;
    if asymmetry > 1e-10 {
        return Err(ConicError::NotHermitian { asymmetry });
    }
    let mut s = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)];
            s[(i, j)] = v.re;
            s[(n + i, n + j)] = v.re;
            s[(i, n + j)] = -v.im;
            s[(n + i, j)] = v.im;
        }
    }
    Ok(s)
}

/// Principal-eigenpair beamformer extraction: `w = √λ_max · u_max`, plus the
/// rank-1 gap `Tr(W) − λ_max ≥ 0`.
pub fn extract_rank1(w_mat: &CMatrix) -> Result<(CVector, f64), ConicError> {
    let n = w_mat.nrows();
    if w_mat.ncols() != n {
        return Err(ConicError::Malformed(format!(
            "matrix is {}x{}, not square",
            n,
            w_mat.ncols()
        )));
    }
    let scale = w_mat.norm().max(1.0);
    let asymmetry = (w_mat - w_mat.adjoint()).norm() / scale;
    if asymmetry > 1e-8 {
        return Err(ConicError::NotHermitian { asymmetry });
    }
    let herm = (w_mat + w_mat.adjoint()).scale(0.5);
    let trace = herm.diagonal().iter().map(|c| c.re).sum::<f64>();
    if trace <= 1e-12 {
        return Err(ConicError::ZeroBeamformer);
    }
    let eig = herm.symmetric_eigen();
    let (max_idx, &lambda_max) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    let u = eig.eigenvectors.column(max_idx).into_owned();
    let w = u * Complex64::new(lambda_max.max(0.0).sqrt(), 0.0);
    Ok((w, (trace - lambda_max).max(0.0)))
}
