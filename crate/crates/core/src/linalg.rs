//! Gaussian elimination with partial pivoting for the small fixed-size
//! systems used here (4×4 AoA system, 3×3 circle-fit normal equations).

/// Determinant via partial-pivot elimination.
pub fn determinant<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    let mut m = *a;
    let mut det = 1.0;
    for col in 0..N {
        let p = pivot_row(&m, col);
        if m[p][col] == 0.0 {
            return 0.0;
        }
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        det *= m[col][col];
        eliminate_below(&mut m, None, col);
    }
    det
}

/// Solves `a·x = b`. Returns `None` when a pivot is exactly zero or the
/// result is non-finite; callers screen conditioning with [`determinant`].
pub fn solve<const N: usize>(a: &[[f64; N]; N], b: &[f64; N]) -> Option<[f64; N]> {
    let mut m = *a;
    let mut rhs = *b;
    for col in 0..N {
        let p = pivot_row(&m, col);
        if m[p][col] == 0.0 {
            return None;
        }
        if p != col {
            m.swap(p, col);
            rhs.swap(p, col);
        }
        eliminate_below(&mut m, Some(&mut rhs), col);
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut acc = rhs[row];
        for k in row + 1..N {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn pivot_row<const N: usize>(m: &[[f64; N]; N], col: usize) -> usize {
    let mut best = col;
    for r in col + 1..N {
        if m[r][col].abs() > m[best][col].abs() {
            best = r;
        }
    }
    best
}

fn eliminate_below<const N: usize>(m: &mut [[f64; N]; N], mut rhs: Option<&mut [f64; N]>, col: usize) {
    let pivot = m[col][col];
    for r in col + 1..N {
        let f = m[r][col] / pivot;
        if f == 0.0 {
            continue;
        }
        for k in col..N {
            m[r][k] -= f * m[col][k];
        }
        if let Some(rhs) = rhs.as_deref_mut() {
            rhs[r] -= f * rhs[col];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_determinant() {
        let a = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        // det by cofactor expansion: 2(12-1) - 1(4-0) = 18
        assert!((determinant(&a) - 18.0).abs() < 1e-12);
        let x = solve(&a, &[3.0, 5.0, 5.0]).unwrap();
        for (xi, e) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - e).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let a = [[1.0, 2.0], [2.0, 4.0]];
        assert_eq!(determinant(&a), 0.0);
        assert!(solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn pivoting_sign() {
        let a = [[0.0, 1.0], [1.0, 0.0]];
        assert_eq!(determinant(&a), -1.0);
    }
}
