//! Formal implicit function theorem, solved degree by degree.

use thiserror::Error;

use crate::field::Field;
use crate::jet::{Jet, JetError};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IftError {
    #[error("expected {expected} equations, got {got}")]
    EquationCount { expected: usize, got: usize },
    #[error("equation {0} has a nonzero constant term")]
    ConstantTerm(usize),
    #[error("the Jacobian block with respect to the solved variables is singular")]
    SingularJacobian,
    #[error("equation precision {got} is below the requested {needed}")]
    PrecisionTooLow { needed: u32, got: u32 },
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// `F(x, y) = 0` with `nx` parameters followed by `ny` unknowns, one
/// equation per unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplicitSystem {
    nx: usize,
    ny: usize,
    equations: Vec<Jet>,
    jacobian_inverse: Matrix,
}

impl ImplicitSystem {
    /// Checks `F(0,0) = 0` and that `dF/dy(0)` is invertible.
    pub fn new(nx: usize, equations: Vec<Jet>) -> Result<Self, IftError> {
        let ny = equations.len();
        let Some(first) = equations.first() else {
            return Err(IftError::EquationCount { expected: 1, got: 0 });
        };
        let field = first.field();
        for (i, e) in equations.iter().enumerate() {
            if e.nvars() != nx + ny {
                return Err(JetError::DimensionMismatch(nx + ny, e.nvars()).into());
            }
            if e.field() != field {
                return Err(JetError::Field(crate::field::FieldError::Mismatch(field, e.field())).into());
            }
            if !e.constant_term().is_zero() {
                return Err(IftError::ConstantTerm(i));
            }
        }
        let mut j = Matrix::zeros(field, ny, ny);
        for (i, e) in equations.iter().enumerate() {
            for k in 0..ny {
                j.set(i, k, e.linear_coefficient(nx + k));
            }
        }
        let jacobian_inverse = j.inverse().ok_or(IftError::SingularJacobian)?;
        Ok(ImplicitSystem { nx, ny, equations, jacobian_inverse })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn field(&self) -> Field {
        self.equations[0].field()
    }

    pub fn equations(&self) -> &[Jet] {
        &self.equations
    }

    pub fn precision(&self) -> u32 {
        self.equations.iter().map(Jet::precision).min().unwrap()
    }

    /// `dF/dy(0)^{-1}`.
    pub fn jacobian_inverse(&self) -> &Matrix {
        &self.jacobian_inverse
    }

    /// `F(x, y(x))` for candidate solutions `y` in the `nx` parameters.
    pub fn substitute(&self, y: &[Jet], precision: u32) -> Result<Vec<Jet>, IftError> {
        let field = self.field();
        let mut images: Vec<Jet> = (0..self.nx).map(|i| Jet::variable(field, self.nx, i, precision)).collect();
        images.extend(y.iter().map(|c| c.with_precision(precision)));
        self.equations
            .iter()
            .map(|e| e.with_precision(precision).substitute(&images, self.nx).map_err(IftError::from))
            .collect()
    }

    /// Residual `F(x, y(x))`; zero for a solution.
    pub fn residual(&self, y: &[Jet]) -> Result<Vec<Jet>, IftError> {
        let prec = y.iter().map(Jet::precision).min().unwrap_or(0);
        self.substitute(y, prec)
    }
}

/// The unique `y(x)` with `y(0) = 0` and `F(x, y(x)) = 0` modulo
/// `m^{N+1}`. Degree `d` of `y` is `-J^{-1}` times degree `d` of
/// `F(x, y_{<d}(x))`.
pub fn ift_solve(sys: &ImplicitSystem, n_prec: u32) -> Result<Vec<Jet>, IftError> {
    if sys.precision() < n_prec {
        return Err(IftError::PrecisionTooLow { needed: n_prec, got: sys.precision() });
    }
    let field = sys.field();
    let nx = sys.nx;
    let mut y: Vec<Jet> = (0..sys.ny).map(|_| Jet::zero(field, nx, n_prec)).collect();
    for d in 1..=n_prec {
        let r = sys.substitute(&y, d)?;
        let parts: Vec<Jet> = r.iter().map(|e| e.homogeneous_part(d).with_precision(n_prec)).collect();
        for (i, yi) in y.iter_mut().enumerate() {
            let mut delta = Jet::zero(field, nx, n_prec);
            for (k, part) in parts.iter().enumerate() {
                let c = sys.jacobian_inverse.get(i, k);
                if !c.is_zero() {
                    delta = &delta + &part.scale(c);
                }
            }
            *yi = &*yi - &delta;
        }
    }
    Ok(y)
}
