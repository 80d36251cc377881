//! Sparse exterior algebra over the rationals.
//!
//! Basis monomials `e_{i1} ∧ … ∧ e_{ik}` (with `i1 < … < ik`) are keyed by
//! the bitmask with bits `i1, …, ik` set. Indices are 0-based in the Rust
//! API and 1-based in JSON and in `Display` output.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, BitXor, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Hypothesis, Result};
use crate::linalg::Matrix;
use crate::rational::{self, zero_vector, Rational, Vector};

pub type Mask = u32;

/// Largest ambient dimension representable by [`Mask`].
pub const MAX_DIM: usize = 32;

fn bits(mask: Mask) -> impl Iterator<Item = usize> {
    (0..MAX_DIM).filter(move |&i| mask & (1 << i) != 0)
}

/// Sign of sorting the concatenation `a ++ b` into increasing order, or
/// `None` when the two index sets intersect.
fn merge_sign(a: Mask, b: Mask) -> Option<bool> {
    if a & b != 0 {
        return None;
    }
    let a = a as u64;
    let mut inversions = 0u32;
    for j in bits(b) {
        inversions += (a >> (j + 1)).count_ones();
    }
    Some(inversions % 2 == 1)
}

/// Monomials of a fixed grade in a fixed ambient dimension, in increasing
/// mask order, with a reverse index.
#[derive(Debug, Clone)]
pub struct GradedBasis {
    masks: Vec<Mask>,
    index: HashMap<Mask, usize>,
}

impl GradedBasis {
    pub fn new(dim: usize, grade: usize) -> Self {
        let mut masks = Vec::new();
        if grade <= dim {
            if grade == 0 {
                masks.push(0);
            } else {
                // Gosper's hack: next mask with the same popcount.
                let limit: u64 = 1 << dim;
                let mut m: u64 = (1 << grade) - 1;
                while m < limit {
                    masks.push(m as Mask);
                    let c = m & m.wrapping_neg();
                    let r = m + c;
                    m = (((r ^ m) >> 2) / c) | r;
                }
            }
        }
        let index = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        GradedBasis { masks, index }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[Mask] {
        &self.masks
    }

    pub fn position(&self, mask: Mask) -> Option<usize> {
        self.index.get(&mask).copied()
    }
}

/// Element of the exterior algebra `ΛQ^n`; grades may be mixed.
#[derive(Clone, PartialEq, Eq)]
pub struct Multivector {
    dim: usize,
    terms: BTreeMap<Mask, Rational>,
}

impl Multivector {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "ambient dimension {dim} exceeds {MAX_DIM}");
        Multivector { dim, terms: BTreeMap::new() }
    }

    pub fn scalar(dim: usize, q: Rational) -> Self {
        Multivector::monomial(dim, 0, q)
    }

    pub fn one(dim: usize) -> Self {
        Multivector::scalar(dim, Rational::one())
    }

    pub fn monomial(dim: usize, mask: Mask, q: Rational) -> Self {
        let mut m = Multivector::zero(dim);
        assert!(dim == MAX_DIM || mask >> dim == 0, "mask outside ambient dimension");
        m.add_term(mask, q);
        m
    }

    /// The basis vector `e_i` (0-based).
    pub fn basis_vector(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        Multivector::monomial(dim, 1 << i, Rational::one())
    }

    /// Monomial from a list of distinct 0-based indices, in the given order.
    pub fn from_indices(dim: usize, indices: &[usize]) -> Self {
        indices
            .iter()
            .fold(Multivector::one(dim), |acc, &i| &acc ^ &Multivector::basis_vector(dim, i))
    }

    /// Grade-1 element with the given coordinates.
    pub fn from_vector(v: &[Rational]) -> Self {
        let mut m = Multivector::zero(v.len());
        for (i, x) in v.iter().enumerate() {
            m.add_term(1 << i, x.clone());
        }
        m
    }

    /// Coordinates of the grade-1 part.
    pub fn to_vector(&self) -> Vector {
        let mut v = zero_vector(self.dim);
        for (&mask, q) in &self.terms {
            if mask.count_ones() == 1 {
                v[mask.trailing_zeros() as usize] = q.clone();
            }
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (Mask, &Rational)> {
        self.terms.iter().map(|(&m, q)| (m, q))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, mask: Mask) -> Rational {
        self.terms.get(&mask).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, mask: Mask, q: Rational) {
        if q.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mask) {
            Entry::Vacant(e) => {
                e.insert(q);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += q;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Grades that carry a nonzero term, ascending.
    pub fn grades(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.terms.keys().map(|m| m.count_ones() as usize).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    pub fn is_homogeneous(&self, grade: usize) -> bool {
        self.terms.keys().all(|m| m.count_ones() as usize == grade)
    }

    /// The grade-`k` homogeneous part.
    pub fn grade_project(&self, k: usize) -> Multivector {
        Multivector {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.count_ones() as usize == k)
                .map(|(&m, q)| (m, q.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, q: &Rational) -> Multivector {
        if q.is_zero() {
            return Multivector::zero(self.dim);
        }
        Multivector {
            dim: self.dim,
            terms: self.terms.iter().map(|(&m, c)| (m, c * q)).collect(),
        }
    }

    fn check_dim(&self, other: &Multivector) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    pub fn wedge(&self, other: &Multivector) -> Result<Multivector> {
        self.check_dim(other)?;
        let mut out = Multivector::zero(self.dim);
        for (&a, x) in &self.terms {
            for (&b, y) in &other.terms {
                if let Some(neg) = merge_sign(a, b) {
                    let c = x * y;
                    out.add_term(a | b, if neg { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// `k`-fold wedge power; `power(0)` is the scalar 1.
    pub fn power(&self, k: usize) -> Multivector {
        (0..k).fold(Multivector::one(self.dim), |acc, _| &acc ^ self)
    }

    /// Interior product with the basis vector `e_k` (0-based), acting on
    /// the dual basis: an antiderivation of degree −1.
    pub fn contract(&self, k: usize) -> Result<Multivector> {
        if k >= self.dim {
            return Err(Error::IndexOutOfRange { index: k + 1, dim: self.dim });
        }
        let bit: Mask = 1 << k;
        let below = bit - 1;
        let mut out = Multivector::zero(self.dim);
        for (&m, q) in &self.terms {
            if m & bit != 0 {
                let neg = (m & below).count_ones() % 2 == 1;
                out.add_term(m ^ bit, if neg { -q.clone() } else { q.clone() });
            }
        }
        Ok(out)
    }

    /// Interior product with an arbitrary vector `z`.
    pub fn contract_vector(&self, z: &[Rational]) -> Result<Multivector> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        let mut out = Multivector::zero(self.dim);
        for (k, c) in z.iter().enumerate() {
            if !c.is_zero() {
                out = &out + &self.contract(k)?.scale(c);
            }
        }
        Ok(out)
    }

    /// Image under the algebra map induced by `e_i ↦ images[i]`.
    pub fn pushforward(&self, target_dim: usize, images: &[Vector]) -> Result<Multivector> {
        if images.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: images.len() });
        }
        let gens: Vec<Multivector> = images
            .iter()
            .map(|v| {
                if v.len() != target_dim {
                    Err(Error::DimensionMismatch { expected: target_dim, got: v.len() })
                } else {
                    Ok(Multivector::from_vector(v))
                }
            })
            .collect::<Result<_>>()?;
        let mut out = Multivector::zero(target_dim);
        for (&m, q) in &self.terms {
            let mono = bits(m).fold(Multivector::one(target_dim), |acc, i| &acc ^ &gens[i]);
            out = &out + &mono.scale(q);
        }
        Ok(out)
    }

    /// Embeds into a larger ambient algebra, keeping indices.
    pub fn embed(&self, target_dim: usize) -> Multivector {
        assert!(target_dim >= self.dim);
        Multivector { dim: target_dim, terms: self.terms.clone() }
    }

    /// Coordinates of the grade part belonging to `basis`.
    pub fn graded_coords(&self, basis: &GradedBasis) -> Vector {
        let mut v = zero_vector(basis.len());
        for (&m, q) in &self.terms {
            if let Some(i) = basis.position(m) {
                v[i] = q.clone();
            }
        }
        v
    }

    pub fn from_graded_coords(dim: usize, basis: &GradedBasis, coords: &[Rational]) -> Multivector {
        let mut m = Multivector::zero(dim);
        for (&mask, q) in basis.masks().iter().zip(coords) {
            m.add_term(mask, q.clone());
        }
        m
    }
}

/// Matrix of a linear map `Λ^from → Λ^to` given by its action on monomials.
pub fn operator_matrix(
    dim: usize,
    from: usize,
    to: usize,
    f: impl Fn(&Multivector) -> Multivector,
) -> Matrix {
    let src = GradedBasis::new(dim, from);
    let dst = GradedBasis::new(dim, to);
    let mut m = Matrix::zeros(dst.len(), src.len());
    for (j, &mask) in src.masks().iter().enumerate() {
        let img = f(&Multivector::monomial(dim, mask, Rational::one()));
        for (mk, q) in img.terms() {
            let i = dst.position(mk).expect("operator output has the declared grade");
            m.set(i, j, q.clone());
        }
    }
    m
}

/// Matrix of right multiplication `ω ↦ ω ∧ a` from grade `from` to grade
/// `from + grade(a)`.
pub fn wedge_matrix(a: &Multivector, from: usize, a_grade: usize) -> Matrix {
    operator_matrix(a.dim(), from, from + a_grade, |x| x ^ a)
}

impl Add for &Multivector {
    type Output = Multivector;
    fn add(self, other: &Multivector) -> Multivector {
        assert_eq!(self.dim, other.dim, "ambient dimension mismatch");
        let mut out = self.clone();
        for (&m, q) in &other.terms {
            out.add_term(m, q.clone());
        }
        out
    }
}

impl Sub for &Multivector {
    type Output = Multivector;
    fn sub(self, other: &Multivector) -> Multivector {
        assert_eq!(self.dim, other.dim, "ambient dimension mismatch");
        let mut out = self.clone();
        for (&m, q) in &other.terms {
            out.add_term(m, -q.clone());
        }
        out
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(&-Rational::one())
    }
}

/// `a ^ b` is the wedge product; panics on an ambient dimension mismatch
/// (use [`Multivector::wedge`] for the fallible form).
impl BitXor for &Multivector {
    type Output = Multivector;
    fn bitxor(self, other: &Multivector) -> Multivector {
        self.wedge(other).expect("ambient dimension mismatch")
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (&m, q)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", rational::format(q))?;
            if m != 0 {
                let idx: Vec<String> = bits(m).map(|i| format!("e{}", i + 1)).collect();
                write!(f, "·{}", idx.join("∧"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multivector[{}]({})", self.dim, self)
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    indices: Vec<usize>,
    #[serde(with = "crate::rational::serde_rational")]
    coeff: Rational,
}

#[derive(Serialize, Deserialize)]
struct MultivectorJson {
    dim: usize,
    terms: Vec<TermJson>,
}

impl Serialize for Multivector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MultivectorJson {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(&m, q)| TermJson { indices: bits(m).map(|i| i + 1).collect(), coeff: q.clone() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Multivector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MultivectorJson::deserialize(d)?;
        if raw.dim > MAX_DIM {
            return Err(D::Error::custom(format!("dim {} exceeds {MAX_DIM}", raw.dim)));
        }
        let mut m = Multivector::zero(raw.dim);
        for t in raw.terms {
            if !t.indices.windows(2).all(|w| w[0] < w[1]) {
                return Err(D::Error::custom("indices must be strictly increasing"));
            }
            let mut mask: Mask = 0;
            for i in t.indices {
                if i == 0 || i > raw.dim {
                    return Err(D::Error::custom(format!("index {i} out of range 1..={}", raw.dim)));
                }
                mask |= 1 << (i - 1);
            }
            if m.terms.contains_key(&mask) {
                return Err(D::Error::custom("duplicate index tuple"));
            }
            m.add_term(mask, t.coeff);
        }
        Ok(m)
    }
}

/// A nilpotent linear map `θ` on `Q^n`, with `θ(e_j) = Σ_i M[i][j] e_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NilpotentOperator {
    matrix: Matrix,
    nilpotency_index: usize,
    columns: Vec<Vec<(usize, Rational)>>,
}

impl NilpotentOperator {
    /// Validates squareness and nilpotency.
    pub fn new(matrix: Matrix) -> Result<Self> {
        let n = matrix.rows();
        if matrix.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.cols() });
        }
        if n > MAX_DIM {
            return Err(Error::InvalidInput(format!("dimension {n} exceeds {MAX_DIM}")));
        }
        let mut power = Matrix::identity(n);
        let mut index = None;
        for k in 0..=n {
            if power.is_zero() {
                index = Some(k);
                break;
            }
            power = power.mul(&matrix)?;
        }
        let nilpotency_index = index.ok_or(Error::Hypothesis(Hypothesis::ThetaNotNilpotent))?;
        let columns = (0..n)
            .map(|j| {
                (0..n)
                    .filter(|&i| !matrix.get(i, j).is_zero())
                    .map(|i| (i, matrix.get(i, j).clone()))
                    .collect()
            })
            .collect();
        Ok(NilpotentOperator { matrix, nilpotency_index, columns })
    }

    pub fn zero(n: usize) -> Self {
        NilpotentOperator::new(Matrix::zeros(n, n)).expect("zero map is nilpotent")
    }

    /// Builds `θ` from the images of the basis vectors: `θ(e_j) = images[j]`.
    pub fn from_images(images: &[Vector]) -> Result<Self> {
        NilpotentOperator::new(Matrix::from_columns(images.len(), images)?)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn nilpotency_index(&self) -> usize {
        self.nilpotency_index
    }

    pub fn apply(&self, v: &[Rational]) -> Vector {
        self.matrix.mul_vec(v).expect("vector length matches operator")
    }

    /// `θ^k v`.
    pub fn apply_power(&self, v: &[Rational], k: usize) -> Vector {
        (0..k).fold(v.to_vec(), |acc, _| self.apply(&acc))
    }

    /// The unique derivation of `ΛQ^n` extending `θ`.
    pub fn apply_derivation(&self, w: &Multivector) -> Result<Multivector> {
        if w.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: w.dim() });
        }
        Ok(self.derive(w))
    }

    fn derive(&self, w: &Multivector) -> Multivector {
        let mut out = Multivector::zero(w.dim());
        for (mask, q) in w.terms() {
            for j in bits(mask) {
                let rest = mask ^ (1 << j);
                for (i, c) in &self.columns[j] {
                    let i = *i;
                    if i != j && rest & (1 << i) != 0 {
                        continue;
                    }
                    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                    let between = if hi > lo + 1 { rest & (((1u64 << hi) - (1u64 << (lo + 1))) as Mask) } else { 0 };
                    let val = c * q;
                    let val = if between.count_ones() % 2 == 1 { -val } else { val };
                    out.add_term(rest | (1 << i), val);
                }
            }
        }
        out
    }

    /// `θ^k` applied as a derivation.
    pub fn derivation_power(&self, w: &Multivector, k: usize) -> Multivector {
        (0..k).fold(w.clone(), |acc, _| self.derive(&acc))
    }

    /// Matrix of the derivation on grade `k`.
    pub fn derivation_matrix(&self, k: usize) -> Matrix {
        operator_matrix(self.dim(), k, k, |x| self.derive(x))
    }
}
