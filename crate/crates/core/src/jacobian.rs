//! Milnor numbers and determinacy bounds of polynomials by linear algebra
//! on truncations of ideals.
//!
//! `m^s ⊂ I + m^{s+1}` is decided on the monomial basis of `K[x]/m^{s+1}`;
//! by Nakayama it gives `m^s ⊂ I` in the power-series ring, after which
//! `dim K[[x]]/I = dim K[x]/(I + m^s)`.

use std::collections::{BTreeMap, HashMap};

use serde_json::{json, Value};

use crate::field::{Field, Scalar};
use crate::jet::{Jet, Monomial};

pub const DEFAULT_MAX_DEGREE: u32 = 12;

type Poly = Vec<(Monomial, Scalar)>;

/// Row-echelon basis of a subspace of `K[x]/m^{k+1}`, keyed by pivot column.
struct Echelon {
    rows: BTreeMap<usize, BTreeMap<usize, Scalar>>,
}

impl Echelon {
    fn new() -> Self {
        Echelon { rows: BTreeMap::new() }
    }

    fn reduce(&self, mut v: BTreeMap<usize, Scalar>) -> BTreeMap<usize, Scalar> {
        loop {
            let Some((&col, c)) = v.iter().find(|(col, _)| self.rows.contains_key(col)) else {
                return v;
            };
            let c = c.clone();
            for (&k, a) in &self.rows[&col] {
                let next = v.get(&k).map(|b| b - &(a * &c)).unwrap_or_else(|| -&(a * &c));
                if next.is_zero() {
                    v.remove(&k);
                } else {
                    v.insert(k, next);
                }
            }
        }
    }

    /// Adds a vector; returns whether the dimension grew.
    fn insert(&mut self, v: BTreeMap<usize, Scalar>) -> bool {
        let v = self.reduce(v);
        let Some((&col, lead)) = v.iter().next() else {
            return false;
        };
        let inv = lead.inv().expect("nonzero pivot");
        let row: BTreeMap<usize, Scalar> = v.iter().map(|(&k, a)| (k, a * &inv)).collect();
        self.rows.insert(col, row);
        true
    }

    fn contains(&self, v: BTreeMap<usize, Scalar>) -> bool {
        self.reduce(v).is_empty()
    }

    fn dim(&self) -> usize {
        self.rows.len()
    }
}

/// An ideal of `K[x]` given by polynomial generators, queried modulo
/// powers of the maximal ideal up to degree `max_degree`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedIdeal {
    field: Field,
    nvars: usize,
    max_degree: u32,
    generators: Vec<Poly>,
}

impl TruncatedIdeal {
    /// Generators are read as polynomials; precision is ignored.
    pub fn new(field: Field, nvars: usize, generators: &[Jet], max_degree: u32) -> Self {
        let generators = generators
            .iter()
            .map(|g| {
                assert_eq!(g.nvars(), nvars);
                g.terms().map(|(m, c)| (m.clone(), c.clone())).collect()
            })
            .collect();
        TruncatedIdeal { field, nvars, max_degree, generators }
    }

    /// Jacobian ideal of the polynomial `f`.
    pub fn jacobian(f: &Jet, max_degree: u32) -> Self {
        let n = f.nvars();
        let generators = (0..n).map(|i| polynomial_partial(f, i)).collect();
        TruncatedIdeal { field: f.field(), nvars: n, max_degree, generators }
    }

    /// `m^k · I`.
    pub fn times_max_power(&self, k: u32) -> Self {
        let mut generators = Vec::new();
        for m in Monomial::all_of_degree(self.nvars, k) {
            for g in &self.generators {
                generators.push(g.iter().map(|(e, c)| (e.mul(&m), c.clone())).collect());
            }
        }
        TruncatedIdeal { generators, ..self.clone() }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn generators(&self) -> Vec<Jet> {
        let prec = self.generators.iter().flatten().map(|(m, _)| m.degree()).max().unwrap_or(0);
        self.generators
            .iter()
            .map(|g| {
                Jet::from_terms(self.field, self.nvars, prec, g.iter().map(|(m, c)| (m.exps().to_vec(), c.clone())))
                    .unwrap()
            })
            .collect()
    }

    /// `(I + m^{k+1}) / m^{k+1}` in echelon form, plus the column index.
    fn span_mod(&self, k: u32) -> (Echelon, HashMap<Monomial, usize>) {
        let basis = Monomial::all_up_to_degree(self.nvars, k);
        let index: HashMap<Monomial, usize> = basis.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut ech = Echelon::new();
        for g in &self.generators {
            let Some(low) = g.iter().map(|(m, _)| m.degree()).min() else { continue };
            if low > k {
                continue;
            }
            for shift in Monomial::all_up_to_degree(self.nvars, k - low) {
                let mut v = BTreeMap::new();
                for (m, c) in g {
                    let p = m.mul(&shift);
                    if p.degree() <= k {
                        v.insert(index[&p], c.clone());
                    }
                }
                ech.insert(v);
            }
        }
        (ech, index)
    }

    /// Whether `m^s ⊂ I + m^{s+1}`.
    pub fn contains_max_power(&self, s: u32) -> bool {
        let (ech, index) = self.span_mod(s);
        Monomial::all_of_degree(self.nvars, s)
            .into_iter()
            .all(|m| ech.contains(BTreeMap::from([(index[&m], self.field.one())])))
    }

    /// Whether the polynomial `p` lies in `I + m^{k+1}`.
    pub fn contains_mod(&self, p: &Jet, k: u32) -> bool {
        let (ech, index) = self.span_mod(k);
        let v = p.terms().filter(|(m, _)| m.degree() <= k).map(|(m, c)| (index[m], c.clone())).collect();
        ech.contains(v)
    }

    /// `dim K[x]/(I + m^s)`.
    pub fn colength(&self, s: u32) -> usize {
        if s == 0 {
            return 0;
        }
        let (ech, index) = self.span_mod(s - 1);
        index.len() - ech.dim()
    }

    /// Smallest `s ≤ max_degree` with `m^s ⊂ I + m^{s+1}`.
    pub fn stabilization_degree(&self) -> Option<u32> {
        (0..=self.max_degree).find(|&s| self.contains_max_power(s))
    }
}

fn polynomial_partial(f: &Jet, i: usize) -> Poly {
    let field = f.field();
    let mut out = Poly::new();
    for (m, c) in f.terms() {
        let e = m.exps()[i];
        if e == 0 {
            continue;
        }
        let c = c * &field.from_i64(e as i64);
        if c.is_zero() {
            continue;
        }
        let mut exps = m.exps().to_vec();
        exps[i] -= 1;
        out.push((Monomial::new(exps), c));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilnorReport {
    /// `None` when no stabilization was found up to `max_degree`.
    pub mu: Option<u64>,
    pub stabilization_degree: Option<u32>,
    /// `2 mu - ord + 2` when `mu` is known.
    pub determinacy_bound: Option<u64>,
    pub order: Option<u32>,
    pub max_degree: u32,
}

impl MilnorReport {
    pub fn to_json(&self) -> Value {
        json!({
            "mu": self.mu.map_or(json!("unknown"), |m| json!(m)),
            "stabilization_degree": self.stabilization_degree,
            "bound": self.determinacy_bound,
            "order": self.order,
            "max_degree_searched": self.max_degree,
        })
    }
}

fn bound(k: u64, order: Option<u32>) -> Option<u64> {
    let ord = order? as i64;
    u64::try_from(2 * k as i64 - ord + 2).ok()
}

/// Milnor number of the polynomial `f`, searching stabilization degrees up
/// to `max_degree`.
pub fn milnor_number(f: &Jet, max_degree: u32) -> MilnorReport {
    let j = TruncatedIdeal::jacobian(f, max_degree);
    let s = j.stabilization_degree();
    let mu = s.map(|s| j.colength(s) as u64);
    let order = f.order();
    MilnorReport {
        mu,
        stabilization_degree: s,
        determinacy_bound: mu.and_then(|m| bound(m, order)),
        order,
        max_degree,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterminacyReport {
    /// Smallest `k` with `m^{k+2} ⊂ m^2 J`.
    pub k: Option<u32>,
    /// `2k - ord + 2`.
    pub bound: Option<u64>,
    pub order: Option<u32>,
    pub max_degree: u32,
}

impl DeterminacyReport {
    pub fn to_json(&self) -> Value {
        json!({
            "k": self.k,
            "bound": self.bound,
            "order": self.order,
            "max_degree_searched": self.max_degree,
        })
    }
}

pub fn determinacy(f: &Jet, max_degree: u32) -> DeterminacyReport {
    let i = TruncatedIdeal::jacobian(f, max_degree).times_max_power(2);
    let k = (0..=max_degree.saturating_sub(2)).find(|&k| i.contains_max_power(k + 2));
    let order = f.order();
    DeterminacyReport { k, bound: k.and_then(|k| bound(k as u64, order)), order, max_degree }
}

pub fn determinacy_bound(f: &Jet, max_degree: u32) -> Option<u64> {
    determinacy(f, max_degree).bound
}

pub fn mu_determinacy_bound(f: &Jet, max_degree: u32) -> Option<u64> {
    milnor_number(f, max_degree).determinacy_bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_poly;

    fn poly(field: Field, vars: &str, text: &str) -> Jet {
        let v: Vec<String> = vars.split(',').map(str::to_string).collect();
        parse_poly(text, &v, field, 30).unwrap()
    }

    #[test]
    fn milnor_examples() {
        let q = Field::Rational;
        let r = milnor_number(&poly(q, "x,y", "x^2 + y^2"), DEFAULT_MAX_DEGREE);
        assert_eq!(r.mu, Some(1));
        assert_eq!(r.determinacy_bound, Some(2));
        for k in 1..=6 {
            let f = poly(q, "x", &format!("x^{}", k + 1));
            assert_eq!(milnor_number(&f, DEFAULT_MAX_DEGREE).mu, Some(k));
        }
        let r = milnor_number(&poly(q, "x,y", "x^3 + y^3"), DEFAULT_MAX_DEGREE);
        assert_eq!(r.mu, Some(4));
        assert_eq!(r.determinacy_bound, Some(7));
    }

    #[test]
    fn staircase_count() {
        let q = Field::Rational;
        for a in 2..=5u64 {
            for b in 2..=5u64 {
                let f = poly(q, "x,y", &format!("x^{a} + y^{b}"));
                assert_eq!(milnor_number(&f, DEFAULT_MAX_DEGREE).mu, Some((a - 1) * (b - 1)));
            }
        }
    }

    #[test]
    fn non_isolated_is_unknown() {
        let q = Field::Rational;
        let r = milnor_number(&poly(q, "x,y", "x^2"), 6);
        assert_eq!(r.mu, None);
        assert_eq!(r.determinacy_bound, None);
        assert_eq!(mu_determinacy_bound(&poly(q, "x,y", "x^2*y"), 6), None);
    }

    #[test]
    fn characteristic_matters() {
        // x^3 has zero derivative over GF(3)
        let f3 = Field::prime(3).unwrap();
        assert_eq!(milnor_number(&poly(f3, "x", "x^3"), 8).mu, None);
        let f2 = Field::prime(2).unwrap();
        assert_eq!(milnor_number(&poly(f2, "x,y", "x*y"), 8).mu, Some(1));
    }

    #[test]
    fn determinacy_examples() {
        let q = Field::Rational;
        assert_eq!(determinacy_bound(&poly(q, "x,y", "x^2 + y^2"), DEFAULT_MAX_DEGREE), Some(2));
        let d = determinacy(&poly(q, "x", "x^3"), DEFAULT_MAX_DEGREE);
        assert_eq!((d.k, d.bound), (Some(2), Some(3)));
        let f7 = Field::prime(7).unwrap();
        let d = determinacy(&poly(f7, "x,y", "x*y"), DEFAULT_MAX_DEGREE);
        assert_eq!((d.k, d.bound), (Some(1), Some(2)));
    }

    #[test]
    fn nakayama_certificate_rechecked() {
        let q = Field::Rational;
        let f = poly(q, "x,y", "x^3 + x*y^3");
        let j = TruncatedIdeal::jacobian(&f, DEFAULT_MAX_DEGREE);
        let s = j.stabilization_degree().unwrap();
        for m in Monomial::all_of_degree(2, s) {
            let p = Jet::from_terms(q, 2, s, [(m.exps().to_vec(), q.one())]).unwrap();
            assert!(j.contains_mod(&p, s));
        }
        assert!(s == 0 || !j.contains_max_power(s - 1));
        assert_eq!(milnor_number(&f, DEFAULT_MAX_DEGREE).mu, Some(7));
    }
}
