//! Source generators and the absorbing-chain toolkit.
//!
//! An absorbing CTMC is described by the triplet `(β, A, B)`: `A` holds the
//! rates among transient states, `B` the rates into absorbing states and `β`
//! the initial distribution over transient states. Everything downstream
//! (phase-type moments, absorption probabilities, visit counts) is a linear
//! solve against `A` or `I − D`, always through one LU factorization.

use crate::error::{Error, GeneratorViolation, Result};
use crate::linalg::{dot, Lu, Matrix};

/// Absolute tolerance for row sums, scaled by the row's magnitude.
pub const ROW_SUM_TOL: f64 = 1e-12;

fn row_tol(row: &[f64]) -> f64 {
    ROW_SUM_TOL * row.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

/// A validated CTMC generator with at least two states and no absorbing state.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    q: Matrix,
}

impl GeneratorMatrix {
    /// Validates a raw rate matrix, collecting every violated invariant.
    pub fn new<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut violations = Vec::new();
        if n < 2 {
            violations.push(GeneratorViolation::TooFewStates { n });
        }
        for (i, r) in rows.iter().enumerate() {
            let len = r.as_ref().len();
            if len != n {
                violations.push(GeneratorViolation::NonSquare {
                    row: i,
                    len,
                    expected: n,
                });
            }
        }
        if !violations.is_empty() {
            return Err(Error::InvalidGenerator(violations));
        }

        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            let mut finite = true;
            for (j, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    violations.push(GeneratorViolation::NonFinite { row: i, col: j });
                    finite = false;
                } else if i != j && v < 0.0 {
                    violations.push(GeneratorViolation::NegativeOffDiagonal {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            if !finite {
                continue;
            }
            let sum: f64 = r.iter().sum();
            if sum.abs() > row_tol(r) {
                violations.push(GeneratorViolation::RowSumNonZero { row: i, sum });
            }
            if -r[i] <= 0.0 {
                violations.push(GeneratorViolation::AbsorbingSourceState { state: i });
            }
        }
        if !violations.is_empty() {
            return Err(Error::InvalidGenerator(violations));
        }
        Ok(Self {
            q: Matrix::from_rows(rows).expect("square checked above"),
        })
    }

    pub fn from_matrix(q: &Matrix) -> Result<Self> {
        Self::new(&q.to_rows())
    }

    pub fn n(&self) -> usize {
        self.q.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.q
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    /// Holding rate `σ_i = −q_ii`.
    pub fn holding_rate(&self, i: usize) -> f64 {
        -self.q[(i, i)]
    }

    pub fn holding_rates(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.holding_rate(i)).collect()
    }

    /// Jump-chain probability `−q_ij / q_ii` (zero on the diagonal).
    pub fn jump_probability(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.q[(i, j)] / self.holding_rate(i)
        }
    }

    pub fn jump_row(&self, i: usize) -> Vec<f64> {
        (0..self.n()).map(|j| self.jump_probability(i, j)).collect()
    }

    /// Simultaneous relabeling: state `perm[s]` of the result is state `s` here.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let mut q = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                q[(perm[i], perm[j])] = self.q[(i, j)];
            }
        }
        Self { q }
    }
}

/// Absorbing CTMC `(β, A, B)` with state labels kept for traceability.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain {
    a: Matrix,
    b: Matrix,
    beta: Vec<f64>,
    transient_labels: Vec<String>,
    absorbing_labels: Vec<String>,
}

impl AbsorbingChain {
    pub fn new(a: Matrix, b: Matrix, beta: Vec<f64>) -> Result<Self> {
        let transient_labels = (0..a.rows()).map(|i| format!("t{}", i + 1)).collect();
        let absorbing_labels = (0..b.cols()).map(|i| format!("a{}", i + 1)).collect();
        Self::with_labels(a, b, beta, transient_labels, absorbing_labels)
    }

    pub fn with_labels(
        a: Matrix,
        b: Matrix,
        beta: Vec<f64>,
        transient_labels: Vec<String>,
        absorbing_labels: Vec<String>,
    ) -> Result<Self> {
        let k1 = a.rows();
        let bad = |m: String| Err(Error::InvalidChain(m));
        if k1 == 0 || !a.is_square() {
            return bad(format!(
                "A must be square and non-empty, got {}x{}",
                a.rows(),
                a.cols()
            ));
        }
        if b.rows() != k1 || b.cols() == 0 {
            return bad(format!(
                "B must be {k1}xK2 with K2 >= 1, got {}x{}",
                b.rows(),
                b.cols()
            ));
        }
        if beta.len() != k1 {
            return bad(format!("beta has length {}, expected {k1}", beta.len()));
        }
        if transient_labels.len() != k1 || absorbing_labels.len() != b.cols() {
            return bad("label counts do not match matrix dimensions".into());
        }
        for i in 0..k1 {
            let mut row = a.row(i).to_vec();
            row.extend_from_slice(b.row(i));
            if row.iter().any(|v| !v.is_finite()) {
                return bad(format!("row {i} has non-finite entries"));
            }
            if a[(i, i)] >= 0.0 {
                return bad(format!("A[{i},{i}] = {} is not negative", a[(i, i)]));
            }
            for (j, &v) in row.iter().enumerate() {
                if j != i && v < 0.0 {
                    return bad(format!("negative rate {v} at row {i}, column {j} of [A|B]"));
                }
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > row_tol(&row) {
                return bad(format!("row {i} of [A|B] sums to {sum}"));
            }
        }
        if beta.iter().any(|&p| p.is_nan() || p < 0.0) {
            return bad("beta has negative or NaN entries".into());
        }
        let total: f64 = beta.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOL {
            return bad(format!("beta sums to {total}"));
        }
        Ok(Self {
            a,
            b,
            beta,
            transient_labels,
            absorbing_labels,
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn transient_count(&self) -> usize {
        self.a.rows()
    }

    pub fn absorbing_count(&self) -> usize {
        self.b.cols()
    }

    pub fn transient_labels(&self) -> &[String] {
        &self.transient_labels
    }

    pub fn absorbing_labels(&self) -> &[String] {
        &self.absorbing_labels
    }

    /// Factors `A` once so several quantities can share the work.
    pub fn factor(&self) -> Result<FactoredChain<'_>> {
        let lu = Lu::new(&self.a).map_err(|s| Error::SingularTransientBlock { rcond: s.rcond })?;
        let beta_ainv = lu.solve_row(&self.beta);
        Ok(FactoredChain {
            chain: self,
            lu,
            beta_ainv,
        })
    }
}

/// An absorbing chain together with the LU factors of its transient block
/// and the cached row `β·A⁻¹`.
#[derive(Debug, Clone)]
pub struct FactoredChain<'a> {
    chain: &'a AbsorbingChain,
    lu: Lu,
    beta_ainv: Vec<f64>,
}

impl FactoredChain<'_> {
    /// `E[T] = −β·A⁻¹·1`.
    pub fn mean_time(&self) -> f64 {
        -self.beta_ainv.iter().sum::<f64>()
    }

    /// `E[T²]/2 = β·A⁻²·1`.
    pub fn half_second_moment(&self) -> f64 {
        let ones = vec![1.0; self.lu.dim()];
        let ainv_one = self.lu.solve(&ones);
        dot(&self.beta_ainv, &ainv_one)
    }

    /// `−β·A⁻¹·B`, one entry per absorbing state.
    pub fn absorption_probabilities(&self) -> Vec<f64> {
        self.chain
            .b
            .vec_mul(&self.beta_ainv)
            .into_iter()
            .map(|v| -v)
            .collect()
    }
}

/// Jump chain of an absorbing CTMC: `[D | E]` is row-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDtmc {
    pub d: Matrix,
    pub e: Matrix,
}

pub fn mean_absorption_time(chain: &AbsorbingChain) -> Result<f64> {
    Ok(chain.factor()?.mean_time())
}

pub fn half_second_moment_absorption_time(chain: &AbsorbingChain) -> Result<f64> {
    Ok(chain.factor()?.half_second_moment())
}

pub fn absorption_probabilities(chain: &AbsorbingChain) -> Result<Vec<f64>> {
    Ok(chain.factor()?.absorption_probabilities())
}

/// Normalizes each row by the departing state's total outflow `−a_ii`.
pub fn embed_dtmc(chain: &AbsorbingChain) -> EmbeddedDtmc {
    let k1 = chain.transient_count();
    let k2 = chain.absorbing_count();
    let mut d = Matrix::zeros(k1, k1);
    let mut e = Matrix::zeros(k1, k2);
    for i in 0..k1 {
        let out = -chain.a[(i, i)];
        for j in 0..k1 {
            if j != i {
                d[(i, j)] = chain.a[(i, j)] / out;
            }
        }
        for j in 0..k2 {
            e[(i, j)] = chain.b[(i, j)] / out;
        }
    }
    EmbeddedDtmc { d, e }
}

fn factor_i_minus_d(embedded: &EmbeddedDtmc) -> Result<Lu> {
    let n = embedded.d.rows();
    let m = Matrix::identity(n).sub(&embedded.d);
    Lu::new(&m).map_err(|s| Error::SingularTransientBlock { rcond: s.rcond })
}

/// `F = (I − D)⁻¹`; entry `(i, j)` is the expected number of visits to `j`
/// starting from `i`.
pub fn fundamental_matrix(embedded: &EmbeddedDtmc) -> Result<Matrix> {
    let lu = factor_i_minus_d(embedded)?;
    Ok(lu.solve_matrix(&Matrix::identity(embedded.d.rows())))
}

/// `β·(I − D)⁻¹·f`: expected number of visits to the transient states
/// flagged in `indicator` before absorption.
pub fn expected_visits(chain: &AbsorbingChain, indicator: &[bool]) -> Result<f64> {
    if indicator.len() != chain.transient_count() {
        return Err(Error::InvalidChain(format!(
            "indicator has length {}, expected {}",
            indicator.len(),
            chain.transient_count()
        )));
    }
    let lu = factor_i_minus_d(&embed_dtmc(chain))?;
    let f: Vec<f64> = indicator
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect();
    Ok(dot(chain.beta(), &lu.solve(&f)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn erlang2() -> AbsorbingChain {
        AbsorbingChain::new(
            m(&[&[-3.0, 3.0], &[0.0, -3.0]]),
            m(&[&[0.0], &[3.0]]),
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    fn pull_q3_cycle1() -> AbsorbingChain {
        AbsorbingChain::new(
            m(&[&[-1.75, 1.0], &[0.0, -1.75]]),
            m(&[&[0.75, 0.0], &[0.75, 1.0]]),
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn accepts_q3() {
        let q = GeneratorMatrix::new(&[[-0.5, 0.5], [0.75, -0.75]]).unwrap();
        assert_eq!(q.holding_rates(), vec![0.5, 0.75]);
        assert_eq!(q.jump_row(1), vec![1.0, 0.0]);
    }

    #[test]
    fn rejects_zero_generator() {
        let err = GeneratorMatrix::new(&[[0.0, 0.0], [0.0, 0.0]]).unwrap_err();
        let Error::InvalidGenerator(v) = err else {
            panic!()
        };
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|x| x.kind() == "AbsorbingSourceState"));
    }

    #[test]
    fn rejects_bad_row_sum_and_names_row() {
        let err = GeneratorMatrix::new(&[[-1.0, 2.0], [1.0, -1.0]]).unwrap_err();
        assert_eq!(err.kind(), "RowSumNonZero");
        let Error::InvalidGenerator(v) = err else {
            panic!()
        };
        assert_eq!(
            v,
            vec![GeneratorViolation::RowSumNonZero { row: 0, sum: 1.0 }]
        );
    }

    #[test]
    fn reports_every_violation() {
        let err = GeneratorMatrix::new(&[[-1.0, 1.0, 0.0], [-0.5, 0.0, 1.0], [0.0, 0.0, 0.0]])
            .unwrap_err();
        let Error::InvalidGenerator(v) = err else {
            panic!()
        };
        let kinds: Vec<_> = v.iter().map(|x| x.kind()).collect();
        assert!(kinds.contains(&"NegativeOffDiagonal"));
        assert!(kinds.contains(&"RowSumNonZero"));
        assert!(kinds.contains(&"AbsorbingSourceState"));
    }

    #[test]
    fn rejects_non_square_and_tiny() {
        let err = GeneratorMatrix::new(&[vec![-1.0, 1.0], vec![1.0]]).unwrap_err();
        assert_eq!(err.kind(), "NonSquare");
        let err = GeneratorMatrix::new(&[[0.0]]).unwrap_err();
        assert_eq!(err.kind(), "TooFewStates");
    }

    #[test]
    fn exponential_moments() {
        let c = AbsorbingChain::new(m(&[&[-2.0]]), m(&[&[2.0]]), vec![1.0]).unwrap();
        close(mean_absorption_time(&c).unwrap(), 0.5, 1e-15);
        close(half_second_moment_absorption_time(&c).unwrap(), 0.25, 1e-15);
        assert_eq!(absorption_probabilities(&c).unwrap(), vec![1.0]);
        close(expected_visits(&c, &[true]).unwrap(), 1.0, 1e-15);
        assert_eq!(expected_visits(&c, &[false]).unwrap(), 0.0);
    }

    #[test]
    fn competing_exits() {
        let c = AbsorbingChain::new(m(&[&[-2.0]]), m(&[&[1.0, 1.0]]), vec![1.0]).unwrap();
        assert_eq!(absorption_probabilities(&c).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn erlang2_moments_and_visits() {
        let c = erlang2();
        close(mean_absorption_time(&c).unwrap(), 2.0 / 3.0, 1e-15);
        close(
            half_second_moment_absorption_time(&c).unwrap(),
            1.0 / 3.0,
            1e-15,
        );
        let e = embed_dtmc(&c);
        assert_eq!(e.d, m(&[&[0.0, 1.0], &[0.0, 0.0]]));
        assert_eq!(e.e, m(&[&[0.0], &[1.0]]));
        close(expected_visits(&c, &[false, true]).unwrap(), 1.0, 1e-15);
        close(expected_visits(&c, &[true, true]).unwrap(), 2.0, 1e-15);
    }

    // Hand back-substitution on A = [[-1.75, 1], [0, -1.75]], β = [1, 0]:
    //   A⁻¹ = [[-1/1.75, -1/1.75²], [0, -1/1.75]]
    //   E[T]     = 1/1.75 + 1/1.75² = 0.897959...
    //   βA⁻¹     = [-1/1.75, -1/1.75²]
    //   A⁻¹1     = [-(1/1.75 + 1/1.75²), -1/1.75]
    //   E[T²]/2  = (1/1.75)(1/1.75 + 1/1.75²) + 1/1.75³ = 0.699708...
    //   p(S1)    = 0.75/1.75 + 0.75/1.75² = 0.673469..., p(S2) = 1/1.75² = 0.326531...
    #[test]
    fn pull_cycle_chain_of_q3() {
        let c = pull_q3_cycle1();
        let s = 1.0 / 1.75;
        close(mean_absorption_time(&c).unwrap(), s + s * s, 1e-15);
        close(mean_absorption_time(&c).unwrap(), 0.8980, 5e-5);
        let half = s * (s + s * s) + s * s * s;
        close(half_second_moment_absorption_time(&c).unwrap(), half, 1e-15);
        close(half, 0.6997, 5e-5);
        let p = absorption_probabilities(&c).unwrap();
        close(p[0], 0.75 * s + 0.75 * s * s, 1e-15);
        close(p[1], s * s, 1e-15);
        close(p[0], 0.6735, 5e-5);
        close(p[1], 0.3265, 5e-5);
        let e = embed_dtmc(&c);
        assert_eq!(e.d, m(&[&[0.0, s], &[0.0, 0.0]]));
    }

    #[test]
    fn embedding_normalizes_rows() {
        let c = AbsorbingChain::new(
            m(&[&[-2.0, 1.0], &[0.0, -3.0]]),
            m(&[&[1.0], &[3.0]]),
            vec![1.0, 0.0],
        )
        .unwrap();
        let e = embed_dtmc(&c);
        assert_eq!(e.d, m(&[&[0.0, 0.5], &[0.0, 0.0]]));
        assert_eq!(e.e, m(&[&[0.5], &[1.0]]));
        let f = fundamental_matrix(&e).unwrap();
        assert_eq!(f, m(&[&[1.0, 0.5], &[0.0, 1.0]]));
    }

    #[test]
    fn fundamental_matrix_cases() {
        let zero = EmbeddedDtmc {
            d: Matrix::zeros(3, 3),
            e: Matrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap(),
        };
        assert_eq!(fundamental_matrix(&zero).unwrap(), Matrix::identity(3));

        let (p, q) = (0.3, 0.6);
        let two_cycle = EmbeddedDtmc {
            d: m(&[&[0.0, p], &[q, 0.0]]),
            e: m(&[&[1.0 - p], &[1.0 - q]]),
        };
        let f = fundamental_matrix(&two_cycle).unwrap();
        let s = 1.0 / (1.0 - p * q);
        let expected = m(&[&[s, p * s], &[q * s, s]]);
        assert!(f.max_abs_diff(&expected) < 1e-15);
        // F = I + D·F
        let rhs = Matrix::identity(2).add(&two_cycle.d.matmul(&f));
        assert!(f.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn chain_validation() {
        let bad_sum = AbsorbingChain::new(m(&[&[-2.0]]), m(&[&[1.0]]), vec![1.0]);
        assert!(matches!(bad_sum, Err(Error::InvalidChain(_))));
        let bad_beta = AbsorbingChain::new(m(&[&[-2.0]]), m(&[&[2.0]]), vec![0.5]);
        assert!(matches!(bad_beta, Err(Error::InvalidChain(_))));
        let bad_diag = AbsorbingChain::new(m(&[&[0.0]]), m(&[&[0.0]]), vec![1.0]);
        assert!(matches!(bad_diag, Err(Error::InvalidChain(_))));
    }

    #[test]
    fn singular_transient_block_is_reported() {
        // two states that only feed each other: rows sum to zero, nothing leaks
        let c = AbsorbingChain::new(
            m(&[&[-1.0, 1.0], &[1.0, -1.0]]),
            m(&[&[0.0], &[0.0]]),
            vec![1.0, 0.0],
        )
        .unwrap();
        assert!(matches!(
            mean_absorption_time(&c),
            Err(Error::SingularTransientBlock { .. })
        ));
        assert!(matches!(
            expected_visits(&c, &[true, true]),
            Err(Error::SingularTransientBlock { .. })
        ));
    }

    #[test]
    fn permutation_relabels_states() {
        let q =
            GeneratorMatrix::new(&[[-1.0, 0.7, 0.3], [0.2, -0.6, 0.4], [0.1, 0.7, -0.8]]).unwrap();
        let p = q.permuted(&[2, 0, 1]);
        assert_eq!(p.rate(2, 0), 0.7);
        assert_eq!(p.holding_rate(1), 0.8);
    }
}
