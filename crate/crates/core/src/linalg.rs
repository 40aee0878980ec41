//! Thomas algorithm for tridiagonal systems.
//!
//! Every β-update of the solver reduces to a symmetric, diagonally dominant
//! tridiagonal system, so no pivoting is performed. A pivot whose magnitude
//! drops below [`PIVOT_FLOOR`] is reported as an error instead.

use crate::error::FlsaError;

/// Smallest pivot magnitude accepted during forward elimination.
pub const PIVOT_FLOOR: f64 = 1e-14;

/// A tridiagonal linear system `B x = rhs`.
///
/// Row `j` reads `sub[j-1] x[j-1] + main[j] x[j] + sup[j] x[j+1] = rhs[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub main: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<f64>, main: Vec<f64>, sup: Vec<f64>, rhs: Vec<f64>) -> Result<Self, FlsaError> {
        let system = Self { sub, main, sup, rhs };
        system.validate()?;
        Ok(system)
    }

    pub fn len(&self) -> usize {
        self.main.len()
    }

    pub fn is_empty(&self) -> bool {
        self.main.is_empty()
    }

    fn validate(&self) -> Result<(), FlsaError> {
        check_shape(&self.sub, &self.main, &self.sup, &self.rhs)
    }

    /// Computes `B x` for this system's matrix.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.main.len();
        (0..n)
            .map(|j| {
                let mut acc = self.main[j] * x[j];
                if j > 0 {
                    acc += self.sub[j - 1] * x[j - 1];
                }
                if j + 1 < n {
                    acc += self.sup[j] * x[j + 1];
                }
                acc
            })
            .collect()
    }

    pub fn solve(&self) -> Result<Vec<f64>, FlsaError> {
        solve_tridiagonal(self)
    }
}

fn check_shape(sub: &[f64], main: &[f64], sup: &[f64], rhs: &[f64]) -> Result<(), FlsaError> {
    let n = main.len();
    if n == 0 {
        return Err(FlsaError::InvalidInput("tridiagonal system must have n >= 1".into()));
    }
    if sub.len() != n - 1 || sup.len() != n - 1 || rhs.len() != n {
        return Err(FlsaError::InvalidInput(format!(
            "tridiagonal lengths inconsistent: sub={}, main={}, sup={}, rhs={}",
            sub.len(),
            n,
            sup.len(),
            rhs.len()
        )));
    }
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    if !(finite(sub) && finite(main) && finite(sup) && finite(rhs)) {
        return Err(FlsaError::InvalidInput("tridiagonal system contains non-finite entries".into()));
    }
    Ok(())
}

/// Solves `system` with one forward sweep and one back-substitution.
pub fn solve_tridiagonal(system: &TridiagonalSystem) -> Result<Vec<f64>, FlsaError> {
    let mut scratch = ThomasScratch::default();
    let mut out = vec![0.0; system.len()];
    scratch.solve_into(&system.sub, &system.main, &system.sup, &system.rhs, &mut out)?;
    Ok(out)
}

/// Reusable work buffers for repeated solves of the same size.
#[derive(Debug, Default, Clone)]
pub struct ThomasScratch {
    sup_prime: Vec<f64>,
}

impl ThomasScratch {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            sup_prime: Vec::with_capacity(n),
        }
    }

    /// Solves into `out`, which must have the length of `main`.
    pub fn solve_into(
        &mut self,
        sub: &[f64],
        main: &[f64],
        sup: &[f64],
        rhs: &[f64],
        out: &mut [f64],
    ) -> Result<(), FlsaError> {
        check_shape(sub, main, sup, rhs)?;
        let n = main.len();
        if out.len() != n {
            return Err(FlsaError::InvalidInput(format!(
                "output buffer has length {}, expected {n}",
                out.len()
            )));
        }
        self.sup_prime.clear();
        self.sup_prime.resize(n, 0.0);
        let cp = &mut self.sup_prime;

        // forward elimination; `out` holds the modified right-hand side
        let mut pivot = main[0];
        if pivot.abs() < PIVOT_FLOOR {
            return Err(FlsaError::SingularPivot { row: 0, pivot });
        }
        if n > 1 {
            cp[0] = sup[0] / pivot;
        }
        out[0] = rhs[0] / pivot;
        for j in 1..n {
            pivot = main[j] - sub[j - 1] * cp[j - 1];
            if pivot.abs() < PIVOT_FLOOR {
                return Err(FlsaError::SingularPivot { row: j, pivot });
            }
            if j + 1 < n {
                cp[j] = sup[j] / pivot;
            }
            out[j] = (rhs[j] - sub[j - 1] * out[j - 1]) / pivot;
        }

        for j in (0..n - 1).rev() {
            out[j] -= cp[j] * out[j + 1];
        }
        Ok(())
    }
}
