//! Dense Hermitian inertia by Bunch-Kaufman symmetric pivoting
//! (1x1 and 2x2 pivots). Used when no useful band structure exists.

use nalgebra::DMatrix;

use crate::scalar::Scalar;

const ALPHA: f64 = 0.640_388_203_202_208_4; // (1 + sqrt(17)) / 8

/// Inertia of a Hermitian matrix, `(negative, zero, positive)`, where "zero"
/// means an exactly vanishing pivot column.
pub fn inertia<S: Scalar + nalgebra::Scalar>(a: &DMatrix<S>) -> (usize, usize, usize) {
    let n = a.nrows();
    let mut m = a.clone();
    let (mut neg, mut zero, mut pos) = (0, 0, 0);
    let mut k = 0;
    while k < n {
        let akk = m[(k, k)].re().abs();
        let (imax, colmax) = (k + 1..n)
            .map(|i| (i, m[(i, k)].abs()))
            .fold((k, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if akk.max(colmax) == 0.0 {
            zero += 1;
            k += 1;
            continue;
        }
        let mut two_by_two = false;
        let mut kp = k;
        if akk < ALPHA * colmax {
            let rowmax = (k..n)
                .filter(|&j| j != imax)
                .map(|j| m[(imax, j)].abs())
                .fold(0.0, f64::max);
            if akk * rowmax >= ALPHA * colmax * colmax {
                kp = k;
            } else if m[(imax, imax)].re().abs() >= ALPHA * rowmax {
                kp = imax;
            } else {
                kp = imax;
                two_by_two = true;
            }
        }
        let target = if two_by_two { k + 1 } else { k };
        if kp != target {
            m.swap_rows(kp, target);
            m.swap_columns(kp, target);
        }
        if !two_by_two {
            let d = m[(k, k)].re();
            if d < 0.0 {
                neg += 1;
            } else {
                pos += 1;
            }
            for j in k + 1..n {
                let f = m[(j, k)].scale(1.0 / d);
                for i in k + 1..n {
                    let v = m[(i, k)] * f.conj();
                    m[(i, j)] -= v;
                }
            }
            k += 1;
        } else {
            let a11 = m[(k, k)].re();
            let a22 = m[(k + 1, k + 1)].re();
            let a21 = m[(k + 1, k)];
            let det = a11 * a22 - a21.abs_sq();
            let tr = a11 + a22;
            if det < 0.0 {
                neg += 1;
                pos += 1;
            } else if tr < 0.0 {
                neg += 2;
            } else {
                pos += 2;
            }
            // D^{-1} = [[a22, -conj(a21)], [-a21, a11]] / det
            for j in k + 2..n {
                let c1 = m[(j, k)];
                let c2 = m[(j, k + 1)];
                // w = D^{-1} [conj(c1); conj(c2)] as the row coefficients
                let w1 = (c1.conj().scale(a22) - a21.conj() * c2.conj()).scale(1.0 / det);
                let w2 = (c2.conj().scale(a11) - a21 * c1.conj()).scale(1.0 / det);
                for i in k + 2..n {
                    let v = m[(i, k)] * w1 + m[(i, k + 1)] * w2;
                    m[(i, j)] -= v;
                }
            }
            k += 2;
        }
    }
    (neg, zero, pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn needs_two_by_two() {
        // zero diagonal forces a 2x2 pivot
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(inertia(&a), (1, 0, 1));
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, 2.0, 0.0, 1.0, 0.0, 1.0, -3.0]);
        let ev = a.clone().symmetric_eigen().eigenvalues;
        let neg = ev.iter().filter(|v| **v < 0.0).count();
        assert_eq!(inertia(&a).0, neg);
    }

    #[test]
    fn complex_hermitian() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let a = DMatrix::from_row_slice(2, 2, &[one * 0.0, i, -i, one * 0.0]);
        assert_eq!(inertia(&a), (1, 0, 1));
    }
}
