//! Independent oracles for the acceptance and property tests.
#![allow(dead_code)]

use splitjet::field::Field;
use splitjet::jet::Jet;
use splitjet::linalg::Matrix;
use splitjet::quadform::QuadraticForm;

/// Newton iteration with precision doubling for `F(x, y) = 0`, `x` the
/// first `nx` variables. The Jacobian is inverted over the jet ring by a
/// Neumann series around its constant part.
pub fn newton_ift(eqs: &[Jet], nx: usize, precision: u32) -> Vec<Jet> {
    let ny = eqs.len();
    let field = eqs[0].field();
    // dF/dy loses one degree; the lost top terms only meet F(y) in m^2
    let jac: Vec<Vec<Jet>> = eqs
        .iter()
        .map(|e| (0..ny).map(|k| e.partial(nx + k).unwrap().with_precision(precision)).collect())
        .collect();
    let mut j0 = Matrix::zeros(field, ny, ny);
    for i in 0..ny {
        for k in 0..ny {
            j0.set(i, k, jac[i][k].constant_term());
        }
    }
    let j0_inv = j0.inverse().expect("invertible Jacobian");
    let apply_inv = |v: &[Jet]| -> Vec<Jet> {
        (0..ny)
            .map(|i| (0..ny).fold(Jet::zero(field, nx, precision), |acc, k| &acc + &v[k].scale(j0_inv.get(i, k))))
            .collect()
    };

    let mut y: Vec<Jet> = (0..ny).map(|_| Jet::zero(field, nx, precision)).collect();
    let mut correct_to = 0;
    while correct_to < precision {
        let mut images: Vec<Jet> = (0..nx).map(|i| Jet::variable(field, nx, i, precision)).collect();
        images.extend(y.iter().cloned());
        let fy: Vec<Jet> = eqs.iter().map(|e| e.substitute(&images, nx).unwrap()).collect();
        let jy: Vec<Vec<Jet>> =
            jac.iter().map(|row| row.iter().map(|d| d.substitute(&images, nx).unwrap()).collect()).collect();
        // solve (J0 + Nm) delta = F(y) by delta = J0^{-1} (F(y) - Nm delta)
        let mut delta = apply_inv(&fy);
        for _ in 0..=precision {
            let rhs: Vec<Jet> = (0..ny)
                .map(|i| {
                    (0..ny).fold(fy[i].clone(), |acc, k| {
                        let nm = &jy[i][k] - &Jet::constant(j0.get(i, k).clone(), nx, precision);
                        &acc - &(&nm * &delta[k])
                    })
                })
                .collect();
            delta = apply_inv(&rhs);
        }
        y = y.iter().zip(&delta).map(|(a, d)| a - d).collect();
        correct_to = 2 * correct_to + 1;
    }
    y
}

pub fn gf2() -> Field {
    Field::prime(2).unwrap()
}

/// All invertible `n x n` matrices over GF(2).
pub fn gl_gf2(n: usize) -> Vec<Matrix> {
    let f = gf2();
    let mut out = Vec::new();
    for bits in 0u32..(1 << (n * n)) {
        let mut m = Matrix::zeros(f, n, n);
        for i in 0..n {
            for j in 0..n {
                if bits >> (i * n + j) & 1 == 1 {
                    m.set(i, j, f.one());
                }
            }
        }
        if m.is_invertible() {
            out.push(m);
        }
    }
    out
}

/// All quadratic forms in `n` variables over GF(2).
pub fn all_forms_gf2(n: usize) -> Vec<QuadraticForm> {
    let f = gf2();
    let keys: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    (0u32..(1 << keys.len()))
        .map(|bits| {
            QuadraticForm::from_coeffs(
                f,
                n,
                keys.iter().enumerate().filter(|(b, _)| bits >> b & 1 == 1).map(|(_, &k)| (k, f.one())),
            )
        })
        .collect()
}

/// Orbit labels under `q -> q(Cx)`, by exhaustive search.
pub fn orbit_labels(forms: &[QuadraticForm], group: &[Matrix]) -> Vec<usize> {
    let mut label = vec![usize::MAX; forms.len()];
    let mut next = 0;
    for i in 0..forms.len() {
        if label[i] != usize::MAX {
            continue;
        }
        for c in group {
            let image = forms[i].transform(c);
            let j = forms.iter().position(|q| *q == image).unwrap();
            label[j] = next;
        }
        next += 1;
    }
    label
}

/// Whether two labelings induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}
