//! Small dense row-major matrices (side ≤ 4) used in per-node loops.

pub const MAXD: usize = 4;
pub type Mat = [f64; MAXD * MAXD];

pub fn identity(d: usize) -> Mat {
    let mut m = [0.0; MAXD * MAXD];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

pub fn mul(d: usize, a: &[f64], b: &[f64]) -> Mat {
    match d {
        2 => mul_n::<2>(a, b),
        4 => mul_n::<4>(a, b),
        _ => mul_n_dyn(d, a, b),
    }
}

// fixed sizes let the loops unroll without bounds checks
fn mul_n<const D: usize>(a: &[f64], b: &[f64]) -> Mat {
    let (a, b) = (&a[..D * D], &b[..D * D]);
    let mut c = [0.0; MAXD * MAXD];
    for i in 0..D {
        for j in 0..D {
            let mut s = 0.0;
            for k in 0..D {
                s += a[i * D + k] * b[k * D + j];
            }
            c[i * D + j] = s;
        }
    }
    c
}

fn mul_n_dyn(d: usize, a: &[f64], b: &[f64]) -> Mat {
    let mut c = [0.0; MAXD * MAXD];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                c[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    c
}

pub fn mul_vec(d: usize, a: &[f64], v: &[f64], out: &mut [f64]) {
    for i in 0..d {
        out[i] = (0..d).map(|k| a[i * d + k] * v[k]).sum();
    }
}

/// Jᵀ W J.
pub fn congruence(d: usize, j: &[f64], w: &[f64]) -> Mat {
    let wj = mul(d, w, j);
    let mut out = [0.0; MAXD * MAXD];
    for a in 0..d {
        for b in 0..d {
            out[a * d + b] = (0..d).map(|k| j[k * d + a] * wj[k * d + b]).sum();
        }
    }
    out
}

/// Two-form coefficients of Jᵀ W J for antisymmetric W, computing only the
/// upper triangle.
pub fn congruence_form(d: usize, j: &[f64], w: &[f64], out: &mut [f64]) {
    match d {
        2 => congruence_form_n::<2>(j, w, out),
        4 => congruence_form_n::<4>(j, w, out),
        _ => form_from_matrix(d, &congruence(d, j, w), out),
    }
}

fn congruence_form_n<const D: usize>(j: &[f64], w: &[f64], out: &mut [f64]) {
    let j = &j[..D * D];
    let wj = mul_n::<D>(w, j);
    let mut c = 0;
    for a in 0..D {
        for b in a + 1..D {
            let mut s = 0.0;
            for k in 0..D {
                s += j[k * D + a] * wj[k * D + b];
            }
            out[c] = s;
            c += 1;
        }
    }
}

/// Gauss–Jordan inverse with partial pivoting; `None` when singular.
pub fn inverse(d: usize, a: &[f64]) -> Option<Mat> {
    let mut m = [0.0; MAXD * MAXD];
    m[..d * d].copy_from_slice(&a[..d * d]);
    let mut inv = identity(d);
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| m[i * d + col].abs().total_cmp(&m[j * d + col].abs()))?;
        if m[piv * d + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..d {
                m.swap(piv * d + k, col * d + k);
                inv.swap(piv * d + k, col * d + k);
            }
        }
        let p = 1.0 / m[col * d + col];
        for k in 0..d {
            m[col * d + k] *= p;
            inv[col * d + k] *= p;
        }
        for r in 0..d {
            if r != col {
                let f = m[r * d + col];
                if f != 0.0 {
                    for k in 0..d {
                        m[r * d + k] -= f * m[col * d + k];
                        inv[r * d + k] -= f * inv[col * d + k];
                    }
                }
            }
        }
    }
    Some(inv)
}

pub fn det(d: usize, a: &[f64]) -> f64 {
    let mut m = [0.0; MAXD * MAXD];
    m[..d * d].copy_from_slice(&a[..d * d]);
    let mut det = 1.0;
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| m[i * d + col].abs().total_cmp(&m[j * d + col].abs())).unwrap();
        if m[piv * d + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for k in 0..d {
                m.swap(piv * d + k, col * d + k);
            }
            det = -det;
        }
        det *= m[col * d + col];
        for r in col + 1..d {
            let f = m[r * d + col] / m[col * d + col];
            for k in col..d {
                m[r * d + k] -= f * m[col * d + k];
            }
        }
    }
    det
}

/// Antisymmetric matrix → two-form coefficients in lexicographic pair order.
pub fn form_from_matrix(d: usize, w: &[f64], out: &mut [f64]) {
    let mut c = 0;
    for i in 0..d {
        for j in i + 1..d {
            out[c] = w[i * d + j];
            c += 1;
        }
    }
}

pub fn matrix_from_form(d: usize, f: &[f64]) -> Mat {
    let mut w = [0.0; MAXD * MAXD];
    let mut c = 0;
    for i in 0..d {
        for j in i + 1..d {
            w[i * d + j] = f[c];
            w[j * d + i] = -f[c];
            c += 1;
        }
    }
    w
}

/// Neumaier-compensated sum; keeps normalizing constants of constant
/// densities exact to a few ulps regardless of node count.
pub fn accurate_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}
