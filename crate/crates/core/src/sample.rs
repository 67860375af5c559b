//! Random scalars, jets and coordinate changes for testing.

use rand::Rng;

use crate::field::{Field, Scalar};
use crate::jet::{CoordinateChange, Jet, Monomial};
use crate::linalg::Matrix;
use crate::quadform::QuadraticForm;

/// Uniform over finite fields; small numerators and denominators over Q.
pub fn scalar<R: Rng + ?Sized>(field: Field, rng: &mut R) -> Scalar {
    match field {
        Field::Rational => {
            let num = field.from_i64(rng.gen_range(-5..=5));
            let den = field.from_i64(rng.gen_range(1..=4));
            &num * &den.inv().unwrap()
        }
        Field::Prime(p) => field.from_i64(rng.gen_range(0..p) as i64),
        Field::Binary(bf) => {
            let bits = rng.gen_range(0..bf.order());
            let t = field.generator().unwrap();
            (0..bf.degree())
                .filter(|i| bits >> i & 1 == 1)
                .fold(field.zero(), |acc, i| &acc + &t.pow(i as u64))
        }
    }
}

pub fn nonzero_scalar<R: Rng + ?Sized>(field: Field, rng: &mut R) -> Scalar {
    loop {
        let c = scalar(field, rng);
        if !c.is_zero() {
            return c;
        }
    }
}

/// Each monomial of degree in `min_degree..=precision` is present with
/// probability `density` and a nonzero random coefficient.
pub fn jet<R: Rng + ?Sized>(
    field: Field,
    nvars: usize,
    precision: u32,
    min_degree: u32,
    density: f64,
    rng: &mut R,
) -> Jet {
    let mut terms = Vec::new();
    for d in min_degree..=precision {
        for m in Monomial::all_of_degree(nvars, d) {
            if rng.gen_bool(density) {
                terms.push((m.exps().to_vec(), nonzero_scalar(field, rng)));
            }
        }
    }
    Jet::from_terms(field, nvars, precision, terms).unwrap()
}

pub fn invertible_matrix<R: Rng + ?Sized>(field: Field, n: usize, rng: &mut R) -> Matrix {
    loop {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, scalar(field, rng));
            }
        }
        if m.is_invertible() {
            return m;
        }
    }
}

/// `linear + h` with `h` a random jet in `m^2` per component.
pub fn change_with_linear<R: Rng + ?Sized>(linear: &Matrix, precision: u32, density: f64, rng: &mut R) -> CoordinateChange {
    let field = linear.field();
    let n = linear.rows();
    let base = CoordinateChange::from_matrix(linear, precision);
    let comps = base
        .components()
        .iter()
        .map(|c| c + &jet(field, n, precision, 2, density, rng))
        .collect();
    CoordinateChange::new(comps).unwrap()
}

/// Random automorphism with a random invertible linear part.
pub fn automorphism<R: Rng + ?Sized>(field: Field, n: usize, precision: u32, density: f64, rng: &mut R) -> CoordinateChange {
    let lin = invertible_matrix(field, n, rng);
    change_with_linear(&lin, precision, density, rng)
}

/// Random automorphism tangent to the identity.
pub fn unipotent_automorphism<R: Rng + ?Sized>(field: Field, n: usize, precision: u32, density: f64, rng: &mut R) -> CoordinateChange {
    change_with_linear(&Matrix::identity(field, n), precision, density, rng)
}

/// Product of `steps` random reflections `x -> x - b(x, v)/q(v) v`, each an
/// isometry of `q` (degenerate forms included).
pub fn isometry<R: Rng + ?Sized>(q: &QuadraticForm, steps: usize, rng: &mut R) -> Matrix {
    let field = q.field();
    let n = q.nvars();
    let b = q.bilinear_matrix();
    let mut m = Matrix::identity(field, n);
    for _ in 0..steps {
        let v: Vec<Scalar> = (0..n).map(|_| scalar(field, rng)).collect();
        let Ok(inv) = q.eval(&v).inv() else { continue };
        let bv = b.mul_vec(&v);
        let mut r = Matrix::identity(field, n);
        for i in 0..n {
            for j in 0..n {
                let entry = r.get(i, j) - &(&(&v[i] * &bv[j]) * &inv);
                r.set(i, j, entry);
            }
        }
        m = m.mul(&r);
    }
    m
}
