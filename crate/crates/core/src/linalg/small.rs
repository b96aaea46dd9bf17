//! Dense helpers for `d × d` matrices with `d <= 3`, stored as `[[f64; 3]; 3]`
//! with unused rows and columns left at zero.

#[allow(unused_imports)]
use num_traits::Float;

pub type Mat3 = [[f64; 3]; 3];

pub fn det(a: &Mat3, d: usize) -> f64 {
    match d {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => panic!("dimension {d} unsupported"),
    }
}

/// Inverse via the adjugate. Caller guarantees `det != 0`.
pub fn inverse(a: &Mat3, d: usize) -> Mat3 {
    let det = det(a, d);
    let mut inv = [[0.0; 3]; 3];
    match d {
        1 => inv[0][0] = 1.0 / det,
        2 => {
            inv[0][0] = a[1][1] / det;
            inv[0][1] = -a[0][1] / det;
            inv[1][0] = -a[1][0] / det;
            inv[1][1] = a[0][0] / det;
        }
        3 => {
            for i in 0..3 {
                for j in 0..3 {
                    // cofactor of (j, i)
                    let r = [(j + 1) % 3, (j + 2) % 3];
                    let c = [(i + 1) % 3, (i + 2) % 3];
                    inv[i][j] = (a[r[0]][c[0]] * a[r[1]][c[1]] - a[r[0]][c[1]] * a[r[1]][c[0]]) / det;
                }
            }
        }
        _ => panic!("dimension {d} unsupported"),
    }
    inv
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(a: &Mat3, d: usize) -> [f64; 3] {
    let mut m = *a;
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += m[p][q] * m[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev = [0.0; 3];
    for i in 0..d {
        ev[i] = m[i][i];
    }
    ev[..d].sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Extremal singular values `(σ_min, σ_max)` of a `d × d` matrix.
pub fn singular_range(a: &Mat3, d: usize) -> (f64, f64) {
    let mut ata = [[0.0; 3]; 3];
    for i in 0..d {
        for j in 0..d {
            ata[i][j] = (0..d).map(|k| a[k][i] * a[k][j]).sum();
        }
    }
    let ev = sym_eigenvalues(&ata, d);
    (ev[0].max(0.0).sqrt(), ev[d - 1].max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_roundtrip_3d() {
        let a = [[2.0, 1.0, 0.5], [0.0, 3.0, 1.0], [1.0, 0.0, 4.0]];
        let inv = inverse(&a, 3);
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                assert_relative_eq!(v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn kuhn_path_matrix_singular_values() {
        // columns e1, e1+e2: singular values are the golden ratio and its inverse
        let a = [[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]];
        let (lo, hi) = singular_range(&a, 2);
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert_relative_eq!(hi, phi, epsilon = 1e-12);
        assert_relative_eq!(lo, 1.0 / phi, epsilon = 1e-12);
    }
}
