//! Thin wrapper over the interior-point QP solver used by the transcription.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

/// Sparse row `Σ coef · z[idx]`.
pub(crate) type SparseRow = Vec<(usize, f64)>;

/// `min ½ zᵀPz + qᵀz` s.t. equality rows `a z = b` and inequality rows `a z ≤ b`.
#[derive(Debug, Default, Clone)]
pub(crate) struct QpProblem {
    pub nvars: usize,
    /// Upper-triangular entries `(row, col, value)` of P (duplicates summed).
    pub p: Vec<(usize, usize, f64)>,
    pub q: Vec<f64>,
    pub eq: Vec<(SparseRow, f64)>,
    pub ineq: Vec<(SparseRow, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) enum QpOutcome {
    Solved(Vec<f64>),
    Infeasible,
    Failed(String),
}

impl QpProblem {
    pub fn new(nvars: usize) -> Self {
        Self { nvars, q: vec![0.0; nvars], ..Default::default() }
    }

    pub fn solve(&self, tol: f64) -> QpOutcome {
        let (pi, pj, pv) = self.p.iter().fold((vec![], vec![], vec![]), |mut acc, (i, j, v)| {
            let (r, c) = if i <= j { (*i, *j) } else { (*j, *i) };
            acc.0.push(r);
            acc.1.push(c);
            acc.2.push(*v);
            acc
        });
        let p = CscMatrix::new_from_triplets(self.nvars, self.nvars, pi, pj, pv);
        let rows = self.eq.len() + self.ineq.len();
        let (mut ai, mut aj, mut av) = (vec![], vec![], vec![]);
        let mut b = Vec::with_capacity(rows);
        for (r, (row, rhs)) in self.eq.iter().chain(self.ineq.iter()).enumerate() {
            for (j, v) in row {
                ai.push(r);
                aj.push(*j);
                av.push(*v);
            }
            b.push(*rhs);
        }
        let a = CscMatrix::new_from_triplets(rows, self.nvars, ai, aj, av);
        let mut cones = Vec::new();
        if !self.eq.is_empty() {
            cones.push(SupportedConeT::ZeroConeT(self.eq.len()));
        }
        if !self.ineq.is_empty() {
            cones.push(SupportedConeT::NonnegativeConeT(self.ineq.len()));
        }
        let settings = DefaultSettings {
            verbose: false,
            tol_gap_abs: tol,
            tol_gap_rel: tol,
            tol_feas: tol,
            max_iter: 200,
            ..DefaultSettings::default()
        };
        let mut solver = match DefaultSolver::new(&p, &self.q, &a, &b, &cones, settings) {
            Ok(s) => s,
            Err(e) => return QpOutcome::Failed(format!("{e:?}")),
        };
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => QpOutcome::Solved(solver.solution.x.clone()),
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => QpOutcome::Infeasible,
            other => QpOutcome::Failed(format!("{other:?}")),
        }
    }
}
