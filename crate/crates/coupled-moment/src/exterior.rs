//! Pointwise exterior algebra on ℝ^{2n}.
//!
//! Forms are stored densely over strictly increasing multi-indices, encoded as
//! bit masks. Coordinates are interleaved as (x₁, y₁, x₂, y₂, …), so the
//! standard symplectic form is Σ e^{2i}∧e^{2i+1} and the reference volume
//! e^0∧…∧e^{2n−1} equals ω₀ⁿ/n!.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::tol::EPS_VOL;

pub const MAX_DIM: usize = 12;

struct Basis {
    masks: Vec<Vec<u16>>,
    pos: Vec<u32>,
}

fn basis(dim: usize) -> &'static Basis {
    static CACHE: [OnceLock<Basis>; MAX_DIM / 2 + 1] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    CACHE[dim / 2].get_or_init(|| {
        let mut masks = vec![Vec::new(); dim + 1];
        let mut pos = vec![u32::MAX; 1 << dim];
        // Lexicographic order of increasing index tuples.
        for k in 0..=dim {
            let mut idx: Vec<usize> = (0..k).collect();
            loop {
                let m = idx.iter().fold(0u16, |acc, &i| acc | (1 << i));
                pos[m as usize] = masks[k].len() as u32;
                masks[k].push(m);
                let mut j = k;
                let mut advanced = false;
                while j > 0 {
                    j -= 1;
                    if idx[j] < dim - k + j {
                        idx[j] += 1;
                        for l in j + 1..k {
                            idx[l] = idx[l - 1] + 1;
                        }
                        advanced = true;
                        break;
                    }
                }
                if !advanced {
                    break;
                }
            }
        }
        Basis { masks, pos }
    })
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Sign of merging the increasing sequences `a` and `b` into increasing order.
fn shuffle_sign(a: u16, b: u16) -> f64 {
    let mut inversions = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Precomputed product structure for degree `ka` times degree `kb` in dimension `dim`.
pub struct WedgeTable {
    pub dim: usize,
    pub ka: usize,
    pub kb: usize,
    entries: Vec<(u32, u32, u32, f64)>,
}

impl WedgeTable {
    pub fn get(dim: usize, ka: usize, kb: usize) -> Arc<WedgeTable> {
        static TABLES: OnceLock<Mutex<HashMap<(usize, usize, usize), Arc<WedgeTable>>>> =
            OnceLock::new();
        let map = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = map.lock().expect("wedge table cache poisoned");
        guard
            .entry((dim, ka, kb))
            .or_insert_with(|| {
                let b = basis(dim);
                let mut entries = Vec::new();
                for (ia, &ma) in b.masks[ka].iter().enumerate() {
                    for (ib, &mb) in b.masks[kb].iter().enumerate() {
                        if ma & mb != 0 {
                            continue;
                        }
                        let out = b.pos[(ma | mb) as usize];
                        entries.push((ia as u32, ib as u32, out, shuffle_sign(ma, mb)));
                    }
                }
                Arc::new(WedgeTable { dim, ka, kb, entries })
            })
            .clone()
    }

    /// `out` must be zeroed by the caller or accumulates.
    #[inline]
    pub fn apply(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        for &(ia, ib, o, s) in &self.entries {
            out[o as usize] += s * a[ia as usize] * b[ib as usize];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    components: Vec<f64>,
}

impl TangentVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let d = components.len();
        if d == 0 || d % 2 != 0 || d > MAX_DIM {
            return Err(Error::Dimension(d, 2));
        }
        Ok(TangentVector { components })
    }

    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        let mut c = vec![0.0; dim];
        if i >= dim {
            return Err(Error::Dimension(i, dim));
        }
        c[i] = 1.0;
        TangentVector::new(c)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingForm {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim % 2 != 0 || dim > MAX_DIM {
        Err(Error::Dimension(dim, MAX_DIM))
    } else {
        Ok(())
    }
}

impl AlternatingForm {
    pub fn new(dim: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if degree > dim {
            return Err(Error::Degree(format!("degree {degree} exceeds dimension {dim}")));
        }
        let expected = binomial(dim, degree);
        if coeffs.len() != expected {
            return Err(Error::Dimension(coeffs.len(), expected));
        }
        Ok(AlternatingForm { dim, degree, coeffs })
    }

    pub fn zero(dim: usize, degree: usize) -> Result<Self> {
        check_dim(dim)?;
        if degree > dim {
            return Err(Error::Degree(format!("degree {degree} exceeds dimension {dim}")));
        }
        Ok(AlternatingForm { dim, degree, coeffs: vec![0.0; binomial(dim, degree)] })
    }

    /// The constant zero-form 1.
    pub fn one(dim: usize) -> Result<Self> {
        AlternatingForm::new(dim, 0, vec![1.0])
    }

    /// e^{i₁}∧…∧e^{i_k} for arbitrary distinct indices; the sign of the sorting
    /// permutation is absorbed into the coefficient.
    pub fn basis_element(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut f = AlternatingForm::zero(dim, indices.len())?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::Dimension(bad, dim));
        }
        let mut inversions = 0;
        for i in 0..indices.len() {
            for j in i + 1..indices.len() {
                if indices[i] == indices[j] {
                    return Ok(f);
                }
                if indices[i] > indices[j] {
                    inversions += 1;
                }
            }
        }
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        let m = indices.iter().fold(0u16, |acc, &i| acc | (1 << i));
        f.coeffs[basis(dim).pos[m as usize] as usize] = sign;
        Ok(f)
    }

    /// Two-form from an antisymmetric matrix in row-major order: coefficient of
    /// e^j∧e^k (j<k) is `m[j][k]`.
    pub fn from_matrix(dim: usize, m: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        if m.len() != dim * dim {
            return Err(Error::Dimension(m.len(), dim * dim));
        }
        let b = basis(dim);
        let coeffs = b.masks[2]
            .iter()
            .map(|&mask| {
                let j = mask.trailing_zeros() as usize;
                let k = 15 - mask.leading_zeros() as usize;
                0.5 * (m[j * dim + k] - m[k * dim + j])
            })
            .collect();
        AlternatingForm::new(dim, 2, coeffs)
    }

    /// Antisymmetric matrix of a two-form, row-major.
    pub fn to_matrix(&self) -> Result<Vec<f64>> {
        if self.degree != 2 {
            return Err(Error::Degree("to_matrix needs a two-form".into()));
        }
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for (c, &mask) in self.coeffs.iter().zip(&basis(d).masks[2]) {
            let j = mask.trailing_zeros() as usize;
            let k = 15 - mask.leading_zeros() as usize;
            m[j * d + k] = *c;
            m[k * d + j] = -*c;
        }
        Ok(m)
    }

    /// Σ_i e^{2i}∧e^{2i+1}.
    pub fn standard_symplectic(n: usize) -> Result<Self> {
        let dim = 2 * n;
        let mut m = vec![0.0; dim * dim];
        for i in 0..n {
            m[(2 * i) * dim + 2 * i + 1] = 1.0;
            m[(2 * i + 1) * dim + 2 * i] = -1.0;
        }
        AlternatingForm::from_matrix(dim, &m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient on an increasing multi-index.
    pub fn coeff(&self, indices: &[usize]) -> Result<f64> {
        if indices.len() != self.degree {
            return Err(Error::Degree(format!(
                "index length {} vs degree {}",
                indices.len(),
                self.degree
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) || indices.iter().any(|&i| i >= self.dim) {
            return Err(Error::InvalidInput("indices must be strictly increasing and in range".into()));
        }
        let m = indices.iter().fold(0u16, |acc, &i| acc | (1 << i));
        Ok(self.coeffs[basis(self.dim).pos[m as usize] as usize])
    }

    /// Density relative to e^0∧…∧e^{2n−1}.
    pub fn top(&self) -> Result<f64> {
        if self.degree != self.dim {
            return Err(Error::Degree(format!("degree {} is not top ({})", self.degree, self.dim)));
        }
        Ok(self.coeffs[0])
    }

    pub fn scale(&self, s: f64) -> Self {
        AlternatingForm { dim: self.dim, degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension(self.dim, other.dim));
        }
        if self.degree != other.degree {
            return Err(Error::Degree(format!("degrees {} and {} differ", self.degree, other.degree)));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(AlternatingForm { dim: self.dim, degree: self.degree, coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(-1.0))
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Dimension(self.dim, other.dim));
        }
        let k = self.degree + other.degree;
        if k > self.dim {
            return Err(Error::Degree(format!("degree {k} exceeds dimension {}", self.dim)));
        }
        let mut out = AlternatingForm::zero(self.dim, k)?;
        WedgeTable::get(self.dim, self.degree, other.degree).apply(&self.coeffs, &other.coeffs, &mut out.coeffs);
        Ok(out)
    }

    /// m-fold wedge of a two-form; m = 0 gives the constant 1.
    pub fn power(&self, m: usize) -> Result<Self> {
        if self.degree != 2 {
            return Err(Error::Degree("power needs a two-form".into()));
        }
        if 2 * m > self.dim {
            return Err(Error::Degree(format!("power {m} exceeds dimension {}", self.dim)));
        }
        let mut acc = AlternatingForm::one(self.dim)?;
        for _ in 0..m {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    pub fn interior(&self, u: &TangentVector) -> Result<Self> {
        if u.dim() != self.dim {
            return Err(Error::Dimension(u.dim(), self.dim));
        }
        if self.degree == 0 {
            return Err(Error::Degree("interior product of a zero-form".into()));
        }
        let b = basis(self.dim);
        let mut out = AlternatingForm::zero(self.dim, self.degree - 1)?;
        for (c, &mask) in self.coeffs.iter().zip(&b.masks[self.degree]) {
            if *c == 0.0 {
                continue;
            }
            let mut mm = mask;
            let mut position = 0;
            while mm != 0 {
                let i = mm.trailing_zeros() as usize;
                let sign = if position % 2 == 0 { 1.0 } else { -1.0 };
                let rest = mask & !(1 << i);
                out.coeffs[b.pos[rest as usize] as usize] += sign * u.components[i] * c;
                position += 1;
                mm &= mm - 1;
            }
        }
        Ok(out)
    }

    /// β(u, v) for a two-form β.
    pub fn eval2(&self, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        if self.degree != 2 {
            return Err(Error::Degree("eval2 needs a two-form".into()));
        }
        if u.dim() != self.dim || v.dim() != self.dim {
            return Err(Error::Dimension(u.dim(), self.dim));
        }
        let m = self.to_matrix()?;
        let d = self.dim;
        let mut s = 0.0;
        for j in 0..d {
            for k in 0..d {
                s += u.components[j] * m[j * d + k] * v.components[k];
            }
        }
        Ok(s)
    }
}

impl Add for &AlternatingForm {
    type Output = AlternatingForm;
    fn add(self, rhs: Self) -> AlternatingForm {
        self.try_add(rhs).expect("shape mismatch in form addition")
    }
}

impl Sub for &AlternatingForm {
    type Output = AlternatingForm;
    fn sub(self, rhs: Self) -> AlternatingForm {
        self.try_sub(rhs).expect("shape mismatch in form subtraction")
    }
}

impl Mul<f64> for &AlternatingForm {
    type Output = AlternatingForm;
    fn mul(self, s: f64) -> AlternatingForm {
        self.scale(s)
    }
}

impl Neg for &AlternatingForm {
    type Output = AlternatingForm;
    fn neg(self) -> AlternatingForm {
        self.scale(-1.0)
    }
}

/// n·(η∧γ) / (α∧γ) for two-forms η, α and γ of degree 2n−2.
///
/// When γ = α^{n−1} this is ½·tr(A⁻¹D) with A, D the antisymmetric
/// coefficient matrices of α and η.
pub fn top_ratio(eta: &AlternatingForm, alpha: &AlternatingForm, gamma: &AlternatingForm) -> Result<f64> {
    let dim = alpha.dim();
    if eta.dim() != dim || gamma.dim() != dim {
        return Err(Error::Dimension(eta.dim().max(gamma.dim()), dim));
    }
    if eta.degree() != 2 || alpha.degree() != 2 || gamma.degree() + 2 != dim {
        return Err(Error::Degree("top_ratio needs η, α of degree 2 and γ of degree 2n−2".into()));
    }
    let n = (dim / 2) as f64;
    let den = alpha.wedge(gamma)?.top()?;
    if den.abs() <= EPS_VOL {
        return Err(Error::DegenerateVolume { value: den, threshold: EPS_VOL, which: "α∧γ".into() });
    }
    Ok(n * eta.wedge(gamma)?.top()? / den)
}

/// Both sides of n ι_uα∧ι_vβ∧γ_p = −β(u,v) α∧γ_p with γ_p = α^{n−1−p}∧β^p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorIdentity {
    pub lhs: f64,
    pub rhs: f64,
    /// Top coefficient of α∧γ_p.
    pub alpha_gamma: f64,
    /// Top coefficient of α^{n−p}∧β^p.
    pub hypothesis: f64,
    /// β(u, v).
    pub beta_uv: f64,
}

impl InteriorIdentity {
    pub fn rel_error(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs()).max(f64::MIN_POSITIVE);
        (self.lhs - self.rhs).abs() / scale
    }
}

pub fn gamma_p(alpha: &AlternatingForm, beta: &AlternatingForm, p: usize) -> Result<AlternatingForm> {
    let n = alpha.dim() / 2;
    if p + 1 > n {
        return Err(Error::Degree(format!("p = {p} outside 0..{n}")));
    }
    alpha.power(n - 1 - p)?.wedge(&beta.power(p)?)
}

pub fn check_interior_identity(
    alpha: &AlternatingForm,
    beta: &AlternatingForm,
    u: &TangentVector,
    v: &TangentVector,
    p: usize,
) -> Result<InteriorIdentity> {
    let dim = alpha.dim();
    if beta.dim() != dim {
        return Err(Error::Dimension(beta.dim(), dim));
    }
    if alpha.degree() != 2 || beta.degree() != 2 {
        return Err(Error::Degree("α and β must be two-forms".into()));
    }
    let n = dim / 2;
    let gamma = gamma_p(alpha, beta, p)?;
    let alpha_gamma = alpha.wedge(&gamma)?.top()?;
    let hypothesis = alpha.power(n - p)?.wedge(&beta.power(p)?)?.top()?;
    if alpha_gamma <= EPS_VOL {
        return Err(Error::DegenerateVolume { value: alpha_gamma, threshold: EPS_VOL, which: "α∧γ_p".into() });
    }
    if hypothesis <= EPS_VOL {
        return Err(Error::DegenerateVolume { value: hypothesis, threshold: EPS_VOL, which: "α^{n−p}∧β^p".into() });
    }
    let lhs = n as f64 * alpha.interior(u)?.wedge(&beta.interior(v)?)?.wedge(&gamma)?.top()?;
    let beta_uv = beta.eval2(u, v)?;
    Ok(InteriorIdentity { lhs, rhs: -beta_uv * alpha_gamma, alpha_gamma, hypothesis, beta_uv })
}

/// Top coefficient of a wedge of two-forms given as coefficient slices; the
/// fast path used by grid loops.
pub fn mixed_top(dim: usize, forms: &[&[f64]]) -> f64 {
    debug_assert_eq!(forms.len() * 2, dim);
    match dim {
        2 => forms[0][0],
        4 => {
            let (a, b) = (forms[0], forms[1]);
            // basis order: 01 02 03 12 13 23
            a[0] * b[5] - a[1] * b[4] + a[2] * b[3] + a[3] * b[2] - a[4] * b[1] + a[5] * b[0]
        }
        _ => {
            let mut acc = vec![1.0];
            let mut deg = 0;
            for f in forms {
                let mut out = vec![0.0; binomial(dim, deg + 2)];
                WedgeTable::get(dim, deg, 2).apply(&acc, f, &mut out);
                acc = out;
                deg += 2;
            }
            acc[0]
        }
    }
}
