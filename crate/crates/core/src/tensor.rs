//! Small fixed-size tensors padded to three spatial slots.
//!
//! Two-dimensional data uses the leading slots; the unused slots stay zero.

use crate::scalar::Scalar;

pub const MAX_DIM: usize = 3;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];
/// `t[a][b][c]`, symmetric in `(b, c)` where used for second derivatives.
pub type Ten3<T> = [[[T; 3]; 3]; 3];
pub type Ten4<T> = [[[[T; 3]; 3]; 3]; 3];

pub fn zero_vec<T: Scalar>() -> Vec3<T> {
    [T::zero(); 3]
}

pub fn zero_mat<T: Scalar>() -> Mat3<T> {
    [[T::zero(); 3]; 3]
}

pub fn zero_ten3<T: Scalar>() -> Ten3<T> {
    [[[T::zero(); 3]; 3]; 3]
}

pub fn zero_ten4<T: Scalar>() -> Ten4<T> {
    [[[[T::zero(); 3]; 3]; 3]; 3]
}

/// Identity on the leading `dim` slots, zero elsewhere.
pub fn identity<T: Scalar>(dim: usize) -> Mat3<T> {
    let mut m = zero_mat();
    for (a, row) in m.iter_mut().enumerate().take(dim) {
        row[a] = T::one();
    }
    m
}

pub fn dot<T: Scalar>(dim: usize, a: &Vec3<T>, b: &Vec3<T>) -> T {
    let mut s = T::zero();
    for i in 0..dim {
        s += a[i] * b[i];
    }
    s
}

pub fn sub<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm_sq<T: Scalar>(dim: usize, a: &Vec3<T>) -> T {
    dot(dim, a, a)
}

pub fn mat_mul<T: Scalar>(dim: usize, a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = zero_mat();
    for i in 0..dim {
        for j in 0..dim {
            let mut s = T::zero();
            for k in 0..dim {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn det<T: Scalar>(dim: usize, m: &Mat3<T>) -> T {
    match dim {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

/// Inverse by adjugate; `None` when the determinant is exactly zero.
pub fn inverse<T: Scalar>(dim: usize, m: &Mat3<T>) -> Option<Mat3<T>> {
    let d = det(dim, m);
    if d == T::zero() {
        return None;
    }
    let mut inv = zero_mat();
    match dim {
        1 => inv[0][0] = T::one() / d,
        2 => {
            inv[0][0] = m[1][1] / d;
            inv[0][1] = -m[0][1] / d;
            inv[1][0] = -m[1][0] / d;
            inv[1][1] = m[0][0] / d;
        }
        _ => {
            for i in 0..3 {
                for j in 0..3 {
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / d;
                }
            }
        }
    }
    Some(inv)
}

/// Replace `t[a][b][c]` by the average over the last two slots.
pub fn symmetrize_last_two<T: Scalar>(dim: usize, t: &mut Ten3<T>) {
    let half = T::from_f64(0.5);
    for row in t.iter_mut().take(dim) {
        for b in 0..dim {
            for c in (b + 1)..dim {
                let s = (row[b][c] + row[c][b]) * half;
                row[b][c] = s;
                row[c][b] = s;
            }
        }
    }
}

/// Largest `|t[a][b][c] − t[a][c][b]|`.
pub fn asymmetry<T: Scalar>(dim: usize, t: &Ten3<T>) -> f64 {
    let mut worst = 0.0_f64;
    for row in t.iter().take(dim) {
        for b in 0..dim {
            for c in 0..dim {
                worst = worst.max((row[b][c] - row[c][b]).to_f64().abs());
            }
        }
    }
    worst
}

/// Dense LU solve with partial pivoting, `a` row-major `n × n`.
/// Returns `None` if a zero pivot is met.
pub fn lu_solve<T: Scalar>(n: usize, a: &[T], b: &[T]) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in (col + 1)..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == T::zero() {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let v = m[col * n + c];
                m[r * n + c] -= f * v;
            }
            let xv = x[col];
            x[r] -= f * xv;
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for c in (col + 1)..n {
            s -= m[col * n + c] * x[c];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}
