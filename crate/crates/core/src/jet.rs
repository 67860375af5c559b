//! Truncated multivariate power series (jets modulo `m^{N+1}`) and
//! coordinate changes acting on them by substitution.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::field::{Field, FieldError, Scalar, Valuation};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("variable count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("component {0} of the substitution has a nonzero constant term")]
    ConstantTerm(usize),
    #[error("precision {got} is below the required {needed}")]
    PrecisionTooLow { needed: u32, got: u32 },
    #[error("variable index {index} out of range for {nvars} variables")]
    VariableOutOfRange { index: usize, nvars: usize },
    #[error("cannot truncate at degree {k} above precision {precision}")]
    TruncationAbovePrecision { k: u32, precision: u32 },
    #[error("expected {expected} substitution images, got {got}")]
    ImageCount { expected: usize, got: usize },
    #[error("jet involves variables outside the kept set")]
    ForeignVariable,
    #[error("epsilon vector must have {0} positive entries")]
    BadEpsilon(usize),
}

/// Exponent vector of a monomial.
///
/// Ordered graded-lexicographically: lower total degree first, then larger
/// exponents of earlier variables first (`x1^2 < x1*x2 < x2^2`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Box<[u32]>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial(exps.into_boxed_slice())
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars].into_boxed_slice())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial::new(e)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    /// Smallest variable index with a positive exponent.
    pub fn first_var(&self) -> Option<usize> {
        self.0.iter().position(|&e| e > 0)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    /// All monomials in `nvars` variables of total degree exactly `d`, in
    /// graded-lex order.
    pub fn all_of_degree(nvars: usize, d: u32) -> Vec<Monomial> {
        fn rec(nvars: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Monomial>) {
            if prefix.len() + 1 == nvars {
                prefix.push(left);
                out.push(Monomial::new(prefix.clone()));
                prefix.pop();
                return;
            }
            for e in (0..=left).rev() {
                prefix.push(e);
                rec(nvars, left - e, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if nvars == 0 {
            if d == 0 {
                out.push(Monomial::one(0));
            }
            return out;
        }
        rec(nvars, d, &mut Vec::with_capacity(nvars), &mut out);
        out
    }

    /// All monomials of total degree `<= d`, in graded-lex order.
    pub fn all_up_to_degree(nvars: usize, d: u32) -> Vec<Monomial> {
        (0..=d).flat_map(|k| Monomial::all_of_degree(nvars, k)).collect()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) type Terms = BTreeMap<Monomial, Scalar>;

fn add_term(terms: &mut Terms, m: Monomial, c: Scalar) {
    if c.is_zero() {
        return;
    }
    match terms.entry(m) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let s = o.get() + &c;
            if s.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

fn add_terms(acc: &mut Terms, other: &Terms) {
    for (m, c) in other {
        add_term(acc, m.clone(), c.clone());
    }
}

/// Truncated product: only pairs with total degree `<= prec` are formed.
fn mul_terms(a: &Terms, b: &Terms, prec: u32) -> Terms {
    let mut acc: HashMap<Monomial, Scalar> = HashMap::new();
    for (ma, ca) in a {
        let da = ma.degree();
        if da > prec {
            break;
        }
        for (mb, cb) in b {
            if da + mb.degree() > prec {
                break;
            }
            let c = ca * cb;
            let m = ma.mul(mb);
            match acc.entry(m) {
                std::collections::hash_map::Entry::Vacant(v) => {
                    v.insert(c);
                }
                std::collections::hash_map::Entry::Occupied(mut o) => {
                    let s = o.get() + &c;
                    *o.get_mut() = s;
                }
            }
        }
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

fn truncate_terms(t: &Terms, prec: u32) -> Terms {
    t.iter().take_while(|(m, _)| m.degree() <= prec).map(|(m, c)| (m.clone(), c.clone())).collect()
}

/// A power series in `nvars` variables known modulo `m^{precision+1}`.
///
/// No stored coefficient is zero and no stored monomial exceeds the
/// precision, so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Jet {
    field: Field,
    nvars: usize,
    precision: u32,
    terms: Terms,
}

impl Jet {
    pub fn zero(field: Field, nvars: usize, precision: u32) -> Jet {
        Jet { field, nvars, precision, terms: Terms::new() }
    }

    pub fn constant(c: Scalar, nvars: usize, precision: u32) -> Jet {
        let field = c.field();
        let mut terms = Terms::new();
        add_term(&mut terms, Monomial::one(nvars), c);
        Jet { field, nvars, precision, terms }
    }

    pub fn one(field: Field, nvars: usize, precision: u32) -> Jet {
        Jet::constant(field.one(), nvars, precision)
    }

    pub fn variable(field: Field, nvars: usize, i: usize, precision: u32) -> Jet {
        assert!(i < nvars, "variable index out of range");
        let mut terms = Terms::new();
        if precision >= 1 {
            terms.insert(Monomial::var(nvars, i), field.one());
        }
        Jet { field, nvars, precision, terms }
    }

    /// Builds a jet from `(exponents, coefficient)` pairs; like terms are
    /// summed, zero and above-precision terms dropped.
    pub fn from_terms<I>(field: Field, nvars: usize, precision: u32, terms: I) -> Result<Jet, JetError>
    where
        I: IntoIterator<Item = (Vec<u32>, Scalar)>,
    {
        let mut t = Terms::new();
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(JetError::DimensionMismatch(nvars, exps.len()));
            }
            if c.field() != field {
                return Err(FieldError::Mismatch(field, c.field()).into());
            }
            let m = Monomial::new(exps);
            if m.degree() <= precision {
                add_term(&mut t, m, c);
            }
        }
        Ok(Jet { field, nvars, precision, terms: t })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Scalar {
        self.terms.get(&Monomial::new(exps.to_vec())).cloned().unwrap_or_else(|| self.field.zero())
    }

    pub fn constant_term(&self) -> Scalar {
        self.coefficient(&vec![0; self.nvars])
    }

    /// Highest total degree among stored terms.
    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    /// The m-adic order: smallest total degree of a nonzero term, `None`
    /// when the jet vanishes at its precision.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().next().map(Monomial::degree)
    }

    pub fn with_precision(&self, precision: u32) -> Jet {
        Jet {
            field: self.field,
            nvars: self.nvars,
            precision,
            terms: truncate_terms(&self.terms, precision),
        }
    }

    /// The k-jet.
    pub fn truncate(&self, k: u32) -> Result<Jet, JetError> {
        if k > self.precision {
            return Err(JetError::TruncationAbovePrecision { k, precision: self.precision });
        }
        Ok(self.with_precision(k))
    }

    /// The homogeneous part of degree `d`, keeping the precision.
    pub fn homogeneous_part(&self, d: u32) -> Jet {
        let terms = self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (m.clone(), c.clone())).collect();
        Jet { terms, ..self.shell() }
    }

    /// Terms of degree `>= d`.
    pub fn part_from_degree(&self, d: u32) -> Jet {
        let terms = self.terms.iter().filter(|(m, _)| m.degree() >= d).map(|(m, c)| (m.clone(), c.clone())).collect();
        Jet { terms, ..self.shell() }
    }

    fn shell(&self) -> Jet {
        Jet { field: self.field, nvars: self.nvars, precision: self.precision, terms: Terms::new() }
    }

    fn check_compatible(&self, other: &Jet) -> Result<(), JetError> {
        if self.nvars != other.nvars {
            return Err(JetError::DimensionMismatch(self.nvars, other.nvars));
        }
        if self.field != other.field {
            return Err(FieldError::Mismatch(self.field, other.field).into());
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        let precision = self.precision.min(other.precision);
        let mut terms = truncate_terms(&self.terms, precision);
        add_terms(&mut terms, &truncate_terms(&other.terms, precision));
        Ok(Jet { field: self.field, nvars: self.nvars, precision, terms })
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_compatible(other)?;
        let precision = self.precision.min(other.precision);
        let terms = mul_terms(&self.terms, &other.terms, precision);
        Ok(Jet { field: self.field, nvars: self.nvars, precision, terms })
    }

    pub fn neg(&self) -> Jet {
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect();
        Jet { terms, ..self.shell() }
    }

    pub fn scale(&self, c: &Scalar) -> Jet {
        let mut terms = Terms::new();
        if !c.is_zero() {
            for (m, a) in &self.terms {
                terms.insert(m.clone(), a * c);
            }
        }
        Jet { terms, ..self.shell() }
    }

    pub fn pow(&self, e: u32) -> Jet {
        let mut r = Jet::one(self.field, self.nvars, self.precision);
        for _ in 0..e {
            r = &r * self;
        }
        r
    }

    /// Substitutes `images[i]` for the i-th variable. The images live in
    /// `target_nvars` variables, must have zero constant term and carry at
    /// least this jet's precision. The result keeps this jet's precision and
    /// is exact on every retained term.
    pub fn substitute(&self, images: &[Jet], target_nvars: usize) -> Result<Jet, JetError> {
        if images.len() != self.nvars {
            return Err(JetError::ImageCount { expected: self.nvars, got: images.len() });
        }
        for (i, g) in images.iter().enumerate() {
            if g.nvars != target_nvars {
                return Err(JetError::DimensionMismatch(target_nvars, g.nvars));
            }
            if g.field != self.field {
                return Err(FieldError::Mismatch(self.field, g.field).into());
            }
            if !g.constant_term().is_zero() {
                return Err(JetError::ConstantTerm(i));
            }
            if g.precision < self.precision {
                return Err(JetError::PrecisionTooLow { needed: self.precision, got: g.precision });
            }
        }
        let prec = self.precision;
        let mut powers = PowerCache { images, prec, cache: vec![Vec::new(); self.nvars], nvars: target_nvars };
        let entries: Vec<(&Monomial, &Scalar)> = self.terms.iter().collect();
        let terms = compose_rec(&entries, 0, prec, &mut powers);
        Ok(Jet { field: self.field, nvars: target_nvars, precision: prec, terms })
    }

    /// `f(phi_1, ..., phi_n)` truncated at the precision of `f`.
    pub fn compose(&self, phi: &CoordinateChange) -> Result<Jet, JetError> {
        if phi.nvars != self.nvars {
            return Err(JetError::DimensionMismatch(self.nvars, phi.nvars));
        }
        self.substitute(&phi.components, phi.nvars)
    }

    /// Formal partial derivative in variable `i` (0-based); precision drops
    /// by one.
    pub fn partial(&self, i: usize) -> Result<Jet, JetError> {
        if i >= self.nvars {
            return Err(JetError::VariableOutOfRange { index: i, nvars: self.nvars });
        }
        if self.precision == 0 {
            return Err(JetError::PrecisionTooLow { needed: 1, got: 0 });
        }
        let mut terms = Terms::new();
        for (m, c) in &self.terms {
            let e = m.exps()[i];
            if e == 0 {
                continue;
            }
            let mut exps = m.exps().to_vec();
            exps[i] -= 1;
            add_term(&mut terms, Monomial::new(exps), c * &self.field.from_i64(e as i64));
        }
        Ok(Jet { field: self.field, nvars: self.nvars, precision: self.precision - 1, terms })
    }

    /// Matrix of second partials at the origin; diagonal entries are
    /// `2 * a_ii`, which vanish in characteristic 2.
    pub fn hessian(&self) -> Result<Matrix, JetError> {
        if self.precision < 2 {
            return Err(JetError::PrecisionTooLow { needed: 2, got: self.precision });
        }
        let n = self.nvars;
        let mut h = Matrix::zeros(self.field, n, n);
        for (m, c) in self.terms.iter().filter(|(m, _)| m.degree() == 2) {
            let e = m.exps();
            match e.iter().position(|&x| x == 2) {
                Some(i) => h.set(i, i, c * &self.field.from_i64(2)),
                None => {
                    let mut idx = e.iter().enumerate().filter(|(_, &x)| x == 1).map(|(i, _)| i);
                    let (i, j) = (idx.next().unwrap(), idx.next().unwrap());
                    h.set(i, j, c.clone());
                    h.set(j, i, c.clone());
                }
            }
        }
        Ok(h)
    }

    pub fn hessian_rank(&self) -> Result<usize, JetError> {
        Ok(self.hessian()?.rank())
    }

    /// `sum |c_a| * eps^a` for the given valuation and radii.
    pub fn norm_eps(&self, query: &NormQuery) -> Result<BigRational, JetError> {
        if query.epsilon.len() != self.nvars {
            return Err(JetError::BadEpsilon(self.nvars));
        }
        let mut sum = BigRational::zero();
        for (m, c) in &self.terms {
            let mut term = query.valuation.eval(c)?;
            for (e, eps) in m.exps().iter().zip(&query.epsilon) {
                for _ in 0..*e {
                    term *= eps;
                }
            }
            sum += term;
        }
        Ok(sum)
    }

    /// Coefficient of the linear term `x_j`.
    pub fn linear_coefficient(&self, j: usize) -> Scalar {
        self.terms.get(&Monomial::var(self.nvars, j)).cloned().unwrap_or_else(|| self.field.zero())
    }

    /// Re-embeds into `target_nvars` variables, sending variable `i` to
    /// `positions[i]`.
    pub fn embed(&self, target_nvars: usize, positions: &[usize]) -> Jet {
        assert_eq!(positions.len(), self.nvars);
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut e = vec![0; target_nvars];
                for (i, &x) in m.exps().iter().enumerate() {
                    e[positions[i]] += x;
                }
                (Monomial::new(e), c.clone())
            })
            .collect();
        Jet { field: self.field, nvars: target_nvars, precision: self.precision, terms }
    }

    /// Keeps only the listed variables (in that order); fails if a term
    /// involves any other variable.
    pub fn restrict(&self, keep: &[usize]) -> Result<Jet, JetError> {
        let mut terms = Terms::new();
        for (m, c) in &self.terms {
            let e = m.exps();
            if e.iter().enumerate().any(|(i, &x)| x > 0 && !keep.contains(&i)) {
                return Err(JetError::ForeignVariable);
            }
            terms.insert(Monomial::new(keep.iter().map(|&i| e[i]).collect()), c.clone());
        }
        Ok(Jet { field: self.field, nvars: keep.len(), precision: self.precision, terms })
    }

    /// Sets the listed variables to zero.
    pub fn eliminate(&self, vars: &[usize]) -> Jet {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| vars.iter().all(|&v| m.exps()[v] == 0))
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Jet { terms, ..self.shell() }
    }

    pub fn involves_only(&self, vars: &[usize]) -> bool {
        self.terms.keys().all(|m| m.exps().iter().enumerate().all(|(i, &x)| x == 0 || vars.contains(&i)))
    }

    /// Canonical text with the given variable names, without the precision
    /// annotation.
    pub fn to_text(&self, vars: &[String]) -> String {
        assert_eq!(vars.len(), self.nvars, "variable name count");
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            let abs = if negative { -c } else { c.clone() };
            if k == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let mono = format_monomial(m, vars);
            let lit = if abs.is_compound_literal() { format!("({abs})") } else { abs.to_string() };
            match (mono.is_empty(), abs.is_one()) {
                (true, _) => out.push_str(&lit),
                (false, true) => out.push_str(&mono),
                (false, false) => {
                    out.push_str(&lit);
                    out.push('*');
                    out.push_str(&mono);
                }
            }
        }
        out
    }

    /// Canonical text including the `O(deg N+1)` precision annotation.
    pub fn to_annotated_text(&self, vars: &[String]) -> String {
        let body = self.to_text(vars);
        format!("{} + O(deg {})", body, self.precision + 1)
    }
}

fn format_monomial(m: &Monomial, vars: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.exps().iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(vars[i].clone()),
            _ => parts.push(format!("{}^{}", vars[i], e)),
        }
    }
    parts.join("*")
}

/// Default variable names `x1, ..., xn`.
pub fn default_var_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_annotated_text(&default_var_names(self.nvars)))
    }
}

struct PowerCache<'a> {
    images: &'a [Jet],
    prec: u32,
    nvars: usize,
    cache: Vec<Vec<Terms>>,
}

impl PowerCache<'_> {
    fn get(&mut self, var: usize, e: u32) -> &Terms {
        let e = e as usize;
        let row = &mut self.cache[var];
        if row.is_empty() {
            let mut one = Terms::new();
            one.insert(Monomial::one(self.nvars), self.images[var].field.one());
            row.push(one);
        }
        while row.len() <= e {
            let next = mul_terms(row.last().unwrap(), &self.images[var].terms, self.prec);
            row.push(next);
        }
        &row[e]
    }
}

/// Horner-style substitution over the variables in order: the terms are
/// grouped by the exponent of `var`, each group is composed recursively
/// with the precision reduced by that exponent, then multiplied by the
/// cached power of the image.
fn compose_rec(entries: &[(&Monomial, &Scalar)], var: usize, prec: u32, powers: &mut PowerCache) -> Terms {
    if var == powers.cache.len() {
        let mut t = Terms::new();
        for (_, c) in entries {
            add_term(&mut t, Monomial::one(powers.nvars), (*c).clone());
        }
        return t;
    }
    let mut groups: BTreeMap<u32, Vec<(&Monomial, &Scalar)>> = BTreeMap::new();
    for &(m, c) in entries {
        let e = m.exps()[var];
        // images have order >= 1, so x_var^e contributes only in degree >= e
        if e <= prec {
            groups.entry(e).or_default().push((m, c));
        }
    }
    let mut acc = Terms::new();
    for (e, group) in groups {
        let inner = compose_rec(&group, var + 1, prec - e, powers);
        if inner.is_empty() {
            continue;
        }
        if e == 0 {
            add_terms(&mut acc, &inner);
        } else {
            let p = powers.get(var, e);
            let prod = mul_terms(p, &inner, prec);
            add_terms(&mut acc, &prod);
        }
    }
    acc
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $try:ident) => {
        impl std::ops::$trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$try(rhs).expect("incompatible jets")
            }
        }
        impl std::ops::$trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$try(&rhs).expect("incompatible jets")
            }
        }
    };
}

jet_binop!(Add, add, try_add);
jet_binop!(Sub, sub, try_sub);
jet_binop!(Mul, mul, try_mul);

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::neg(self)
    }
}

/// The radii and valuation defining `||f||_eps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormQuery {
    pub valuation: Valuation,
    pub epsilon: Vec<BigRational>,
}

impl NormQuery {
    pub fn new(valuation: Valuation, epsilon: Vec<BigRational>) -> Result<Self, JetError> {
        if epsilon.iter().any(|e| !e.is_positive()) {
            return Err(JetError::BadEpsilon(epsilon.len()));
        }
        Ok(NormQuery { valuation, epsilon })
    }

    pub fn unit(valuation: Valuation, nvars: usize) -> Self {
        NormQuery { valuation, epsilon: vec![BigRational::one(); nvars] }
    }
}

/// A tuple of jets with zero constant term acting by `x_i -> phi_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateChange {
    field: Field,
    nvars: usize,
    precision: u32,
    components: Vec<Jet>,
}

impl CoordinateChange {
    pub fn new(components: Vec<Jet>) -> Result<Self, JetError> {
        let nvars = components.len();
        let Some(first) = components.first() else {
            return Err(JetError::ImageCount { expected: 1, got: 0 });
        };
        let field = first.field;
        let precision = components.iter().map(|c| c.precision).min().unwrap();
        for (i, c) in components.iter().enumerate() {
            if c.nvars != nvars {
                return Err(JetError::DimensionMismatch(nvars, c.nvars));
            }
            if c.field != field {
                return Err(FieldError::Mismatch(field, c.field).into());
            }
            if !c.constant_term().is_zero() {
                return Err(JetError::ConstantTerm(i));
            }
        }
        let components = components.into_iter().map(|c| c.with_precision(precision)).collect();
        Ok(CoordinateChange { field, nvars, precision, components })
    }

    pub fn identity(field: Field, nvars: usize, precision: u32) -> Self {
        let components = (0..nvars).map(|i| Jet::variable(field, nvars, i, precision)).collect();
        CoordinateChange { field, nvars, precision, components }
    }

    /// The linear change `x_i -> sum_j m[i][j] x_j`.
    pub fn from_matrix(m: &Matrix, precision: u32) -> Self {
        assert_eq!(m.rows(), m.cols());
        let n = m.rows();
        let field = m.field();
        let components = (0..n)
            .map(|i| {
                let terms = (0..n).map(|j| (Monomial::var(n, j).exps().to_vec(), m.get(i, j).clone()));
                Jet::from_terms(field, n, precision, terms).unwrap()
            })
            .collect();
        CoordinateChange { field, nvars: n, precision, components }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn components(&self) -> &[Jet] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Jet {
        &self.components[i]
    }

    /// Jacobian matrix at the origin: entry `(i, j)` is `d phi_i / d x_j (0)`.
    pub fn linear_part(&self) -> Matrix {
        let mut m = Matrix::zeros(self.field, self.nvars, self.nvars);
        for (i, c) in self.components.iter().enumerate() {
            for j in 0..self.nvars {
                m.set(i, j, c.linear_coefficient(j));
            }
        }
        m
    }

    pub fn is_automorphism(&self) -> bool {
        self.linear_part().is_invertible()
    }

    pub fn is_linear(&self) -> bool {
        self.components.iter().all(|c| c.terms().all(|(m, _)| m.degree() == 1))
    }

    pub fn is_identity(&self) -> bool {
        *self == CoordinateChange::identity(self.field, self.nvars, self.precision)
    }

    /// The change "first `self`, then `next`": its components are
    /// `phi_i(psi)`, so `f.compose(a.then(b)) == f.compose(a).compose(b)`.
    pub fn then(&self, next: &CoordinateChange) -> Result<CoordinateChange, JetError> {
        if next.nvars != self.nvars {
            return Err(JetError::DimensionMismatch(self.nvars, next.nvars));
        }
        let components = self.components.iter().map(|c| c.compose(next)).collect::<Result<Vec<_>, _>>()?;
        Ok(CoordinateChange { field: self.field, nvars: self.nvars, precision: self.precision, components })
    }

    pub fn apply(&self, f: &Jet) -> Result<Jet, JetError> {
        f.compose(self)
    }

    pub fn with_precision(&self, precision: u32) -> CoordinateChange {
        CoordinateChange {
            field: self.field,
            nvars: self.nvars,
            precision,
            components: self.components.iter().map(|c| c.with_precision(precision)).collect(),
        }
    }

    /// Inverse of a linear change.
    pub fn linear_inverse(&self) -> Option<CoordinateChange> {
        if !self.is_linear() {
            return None;
        }
        self.linear_part().inverse().map(|m| CoordinateChange::from_matrix(&m, self.precision))
    }
}
