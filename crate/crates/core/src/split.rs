//! The splitting lemma: `f ~ q(x_1..x_r) + g(x_{r+1}..x_n)` with an explicit
//! coordinate change, computed to a fixed jet precision.

use serde_json::{json, Value};
use thiserror::Error;

use crate::jet::{CoordinateChange, Jet, JetError};
use crate::quadform::{arf_normal_form, diagonalize_ne2, quad_extract, NormalKind, QuadError, QuadNormalForm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("precision must be at least 2, got {0}")]
    PrecisionTooLow(u32),
    #[error("requested precision {requested} exceeds the input precision {available}")]
    PrecisionExceeded { requested: u32, available: u32 },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    pub quad: QuadNormalForm,
    /// Number of head variables (`k`, or `2l` in characteristic 2).
    pub rank: usize,
    /// Residual in the tail variables `x_{rank+1}, ..., x_n`; in
    /// characteristic 2 it carries the diagonal square tail.
    pub residual: Jet,
    pub change: CoordinateChange,
    pub precision: u32,
    /// Number of elimination passes after the linear normalization.
    pub passes: usize,
}

impl SplitResult {
    /// Head quadratic part as a jet in all variables.
    pub fn head_jet(&self) -> Jet {
        self.quad.head_form().to_jet(self.precision)
    }

    /// The residual re-embedded into all `n` variables.
    pub fn residual_full(&self) -> Jet {
        let n = self.quad.nvars();
        let positions: Vec<usize> = (self.rank..n).collect();
        self.residual.embed(n, &positions)
    }

    /// `head + residual`, the split form.
    pub fn split_form(&self) -> Jet {
        &self.head_jet() + &self.residual_full()
    }

    pub fn to_json(&self, vars: &[String]) -> Value {
        let tail_names = &vars[self.rank..];
        json!({
            "rank": self.rank,
            "field": self.quad.field().to_string(),
            "precision": self.precision,
            "quad": self.quad.descriptor(),
            "residual": self.residual.to_text(tail_names),
            "change": self.change.components().iter().map(|c| c.to_text(vars)).collect::<Vec<_>>(),
            "passes": self.passes,
        })
    }
}

/// All terms of `g` that involve at least one of the first `h` variables,
/// minus the head quadratic part.
fn mixed_part(g: &Jet, head: &Jet, h: usize) -> Jet {
    let rest = g - head;
    let pure_tail = rest.eliminate(&(0..h).collect::<Vec<_>>());
    &rest - &pure_tail
}

/// Writes `mixed = sum_{i<h} x_i g_i`, sending each monomial to the `g_i`
/// of its smallest head variable.
fn decompose_mixed(mixed: &Jet, h: usize) -> Vec<Jet> {
    let n = mixed.nvars();
    let field = mixed.field();
    let prec = mixed.precision();
    let mut parts: Vec<Vec<(Vec<u32>, _)>> = vec![Vec::new(); h];
    for (m, c) in mixed.terms() {
        let i = m.first_var().expect("mixed monomials involve a head variable");
        debug_assert!(i < h);
        let mut e = m.exps().to_vec();
        e[i] -= 1;
        parts[i].push((e, c.clone()));
    }
    parts.into_iter().map(|t| Jet::from_terms(field, n, prec, t).unwrap()).collect()
}

/// One elimination step for the current shape; returns the substitution.
fn elimination_step(quad: &QuadNormalForm, g: &[Jet], n: usize, prec: u32) -> Result<CoordinateChange, SplitError> {
    let field = quad.field();
    let mut comps: Vec<Jet> = (0..n).map(|i| Jet::variable(field, n, i, prec)).collect();
    match quad.kind() {
        NormalKind::Diagonal { coeffs } => {
            // a (x - g/(2a))^2 = a x^2 - x g + g^2/(4a)
            let two = field.from_i64(2);
            for (i, a) in coeffs.iter().enumerate() {
                let s = (&two * a).inv().map_err(QuadError::from)?;
                comps[i] = &comps[i] - &g[i].scale(&s);
            }
        }
        NormalKind::UnitDiagonal { rank } => {
            let s = field.from_i64(2).inv().map_err(QuadError::from)?;
            for i in 0..*rank {
                comps[i] = &comps[i] - &g[i].scale(&s);
            }
        }
        NormalKind::Arf { pairs, .. } => {
            // (x + G)(y + H) + pair squares: H = g_x, G = g_y cancels x g_x + y g_y
            for p in 0..pairs.len() {
                let (i, j) = (2 * p, 2 * p + 1);
                comps[i] = &comps[i] + &g[j];
                comps[j] = &comps[j] + &g[i];
            }
        }
        NormalKind::Char2Solvable { half_rank, .. } => {
            for p in 0..*half_rank {
                let (i, j) = (2 * p, 2 * p + 1);
                comps[i] = &comps[i] + &g[j];
                comps[j] = &comps[j] + &g[i];
            }
        }
    }
    Ok(CoordinateChange::new(comps)?)
}

/// Iterates the elimination for a jet whose 2-jet is already `quad`'s
/// normal form. Returns the composed change, the final jet and the pass
/// count.
pub fn split_iterate(quad: &QuadNormalForm, f: &Jet) -> Result<(CoordinateChange, Jet, usize), SplitError> {
    let n = f.nvars();
    let prec = f.precision();
    let h = quad.rank();
    let head = quad.head_form().to_jet(prec);
    let mut total = CoordinateChange::identity(f.field(), n, prec);
    let mut g = f.clone();
    let mut last_order = 2;
    let mut passes = 0;
    loop {
        let mixed = mixed_part(&g, &head, h);
        let Some(order) = mixed.order() else { break };
        assert!(order > last_order, "mixed part order must increase ({last_order} -> {order})");
        assert!(passes <= prec as usize, "elimination exceeded {prec} passes");
        last_order = order;
        let parts = decompose_mixed(&mixed, h);
        let step = elimination_step(quad, &parts, n, prec)?;
        g = g.compose(&step)?;
        total = total.then(&step)?;
        passes += 1;
    }
    Ok((total, g, passes))
}

/// Splits `f` at precision `n_prec`.
pub fn split(f: &Jet, n_prec: u32) -> Result<SplitResult, SplitError> {
    if n_prec < 2 {
        return Err(SplitError::PrecisionTooLow(n_prec));
    }
    if n_prec > f.precision() {
        return Err(SplitError::PrecisionExceeded { requested: n_prec, available: f.precision() });
    }
    let f = f.with_precision(n_prec);
    let q = quad_extract(&f)?;
    let quad = if f.field().is_char2() { arf_normal_form(&q)? } else { diagonalize_ne2(&q)? };
    let linear = quad.transition_change(n_prec);
    let f_lin = f.compose(&linear)?;
    let (iter_change, g, passes) = split_iterate(&quad, &f_lin)?;
    let change = linear.then(&iter_change)?;
    let rank = quad.rank();
    let n = f.nvars();
    let rest = &g - &quad.head_form().to_jet(n_prec);
    let residual = rest.restrict(&(rank..n).collect::<Vec<_>>())?;
    Ok(SplitResult { quad, rank, residual, change, precision: n_prec, passes })
}

/// `f(change) - (head + residual)`; zero for a correct result.
pub fn verify_split(f: &Jet, r: &SplitResult) -> Result<Jet, SplitError> {
    let f = f.truncate(r.precision)?;
    Ok(&f.compose(&r.change)? - &r.split_form())
}

/// Variable names for a split's residual, given the input names.
pub fn residual_names(vars: &[String], rank: usize) -> Vec<String> {
    vars[rank..].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::text::parse_poly;

    fn names(s: &str) -> Vec<String> {
        s.split(',').map(str::to_string).collect()
    }

    fn p(field: Field, vars: &str, text: &str, prec: u32) -> Jet {
        parse_poly(text, &names(vars), field, prec).unwrap()
    }

    #[test]
    fn rational_worked_example() {
        let q = Field::Rational;
        let f = p(q, "x,y", "x^2 + x*y^2", 4);
        let r = split(&f, 4).unwrap();
        assert_eq!(r.rank, 1);
        assert_eq!(r.residual, p(q, "y", "-1/4*y^4", 4));
        assert_eq!(r.change.component(0), &p(q, "x,y", "x - 1/2*y^2", 4));
        assert_eq!(r.change.component(1), &p(q, "x,y", "y", 4));
        assert!(verify_split(&f, &r).unwrap().is_zero());
        assert_eq!(r.passes, 1);
    }

    #[test]
    fn char2_worked_example() {
        let f2 = Field::prime(2).unwrap();
        let f = p(f2, "x1,x2,x3", "x1*x2 + x1*x3^2", 4);
        let r = split(&f, 4).unwrap();
        assert_eq!(r.rank, 2);
        assert!(r.residual.is_zero());
        assert_eq!(r.change.component(1), &p(f2, "x1,x2,x3", "x2 + x3^2", 4));
        assert!(verify_split(&f, &r).unwrap().is_zero());
        assert_eq!(r.passes, 1);
    }

    #[test]
    fn already_split_inputs() {
        let q = Field::Rational;
        let f = p(q, "x,y", "x^2 + y^2", 3);
        let r = split(&f, 3).unwrap();
        assert!(r.residual.is_zero());
        assert!(r.change.is_linear());
        assert_eq!(r.passes, 0);

        let f2 = Field::prime(2).unwrap();
        let g = p(f2, "x1,x2,x3", "x1^2 + x1*x2 + x2^2 + x3^3", 3);
        let r = split(&g, 3).unwrap();
        assert_eq!(r.passes, 0);
        assert_eq!(r.residual, p(f2, "x3", "x3^3", 3));
    }

    #[test]
    fn multi_pass_examples() {
        let q = Field::Rational;
        let f = p(q, "x,y", "x^2 + x*y^2 + x*y^3", 6);
        let r = split(&f, 6).unwrap();
        assert!(r.passes <= 4);
        assert!(verify_split(&f, &r).unwrap().is_zero());
        assert!(r.residual.order().unwrap() >= 3);

        let f2 = Field::prime(2).unwrap();
        let g = p(f2, "x1,x2,x3", "x1*x2 + x3^4 + x2*x3^3", 6);
        let r = split(&g, 6).unwrap();
        assert!(verify_split(&g, &r).unwrap().is_zero());
        assert_eq!(r.residual.homogeneous_part(4), p(f2, "x3", "x3^4", 6));
    }

    #[test]
    fn degenerate_inputs() {
        let f2 = Field::prime(2).unwrap();
        let f = p(f2, "x,y", "x^2 + y^2 + x*y^2", 4);
        let r = split(&f, 4).unwrap();
        assert_eq!(r.rank, 0);
        assert_eq!(r.residual, f);
        assert!(r.change.is_identity());

        let q = Field::Rational;
        let g = p(q, "x,y", "x^3 + y^4", 4);
        let r = split(&g, 4).unwrap();
        assert_eq!(r.rank, 0);
        assert_eq!(r.residual, g);
    }

    #[test]
    fn errors_and_tampering() {
        let q = Field::Rational;
        let f = p(q, "x,y", "x + x^2", 4);
        assert!(matches!(split(&f, 4), Err(SplitError::Quad(QuadError::NotInMaximalIdealSquared))));
        let g = p(q, "x,y", "x^2 + x*y^2", 4);
        assert!(matches!(split(&g, 5), Err(SplitError::PrecisionExceeded { .. })));
        assert!(matches!(split(&g, 1), Err(SplitError::PrecisionTooLow(1))));

        let mut r = split(&g, 4).unwrap();
        r.residual = p(q, "y", "y^4", 4);
        assert!(!verify_split(&g, &r).unwrap().is_zero());
        let mut r = split(&g, 4).unwrap();
        r.change = CoordinateChange::identity(q, 2, 4);
        assert!(!verify_split(&g, &r).unwrap().is_zero());
    }

    #[test]
    fn idempotent_on_split_forms() {
        for (field, vars, text) in [
            (Field::Rational, "x,y,z", "3*x^2 - 5*y^2 + x*z^2 + y^3*z + z^3"),
            (Field::prime(2).unwrap(), "x1,x2,x3", "x1*x2 + x1^2 + x3^2 + x1*x3^2 + x2*x3^3"),
            (Field::binary(2).unwrap(), "x1,x2,x3,x4", "t*x1^2 + x1*x2 + x3^3 + x3*x4^2 + x2*x4^2"),
        ] {
            let f = p(field, vars, text, 6);
            let r = split(&f, 6).unwrap();
            let again = split(&r.split_form(), 6).unwrap();
            assert!(again.change.linear_part() == crate::linalg::Matrix::identity(field, f.nvars()));
            assert_eq!(again.residual, r.residual);
        }
    }
}
