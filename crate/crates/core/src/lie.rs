//! Lie algebras by structure constants, their Chevalley–Eilenberg
//! complexes, and the central action on cohomology.
//!
//! Convention: for a 1-form `φ`, `dφ(x, y) = −φ([x, y])`, so
//! `d e_k* = −Σ_{i<j} c^k_{ij} e_i*∧e_j*`, extended to `ΛL*` as an
//! antiderivation of degree +1. Forms are [`Multivector`]s over the dual
//! basis; the interior product `i_z` is [`Multivector::contract_vector`].

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exterior::{GradedBasis, Mask, Multivector, NilpotentOperator};
use crate::linalg::{kernel, rref_in_place, solve, Matrix, Subspace};
use crate::rational::{is_zero_vector, unit_vector, zero_vector, Rational, Vector};

/// Indices (0-based) of the adjoined `u` and central `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distinguished {
    pub u: usize,
    pub z: usize,
}

/// `[e_i, e_j] = Σ_k c^k_{ij} e_k`, stored for `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LieAlgebra {
    dim: usize,
    brackets: BTreeMap<(usize, usize), Vector>,
    pub labels: Option<Vec<String>>,
    pub distinguished: Option<Distinguished>,
}

impl LieAlgebra {
    pub fn abelian(dim: usize) -> Self {
        LieAlgebra { dim, brackets: BTreeMap::new(), labels: None, distinguished: None }
    }

    /// Builds from `(i, j, [e_i, e_j])` with 0-based `i ≠ j`; a pair given
    /// twice (in either order) is an error.
    pub fn from_brackets(dim: usize, brackets: impl IntoIterator<Item = (usize, usize, Vector)>) -> Result<Self> {
        let mut l = LieAlgebra::abelian(dim);
        for (i, j, v) in brackets {
            if i >= dim || j >= dim {
                return Err(Error::IndexOutOfRange { index: i.max(j) + 1, dim });
            }
            if i == j {
                return Err(Error::InvalidInput(format!("bracket of e{} with itself", i + 1)));
            }
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            let (key, v) = if i < j { ((i, j), v) } else { ((j, i), v.iter().map(|q| -q).collect()) };
            if l.brackets.contains_key(&key) {
                return Err(Error::InvalidInput(format!("bracket [e{}, e{}] given twice", key.0 + 1, key.1 + 1)));
            }
            if !is_zero_vector(&v) {
                l.brackets.insert(key, v);
            }
        }
        Ok(l)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `[e_i, e_j]`.
    pub fn bracket(&self, i: usize, j: usize) -> Vector {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.brackets.get(&(i, j)).cloned().unwrap_or_else(|| zero_vector(self.dim)),
            std::cmp::Ordering::Greater => self
                .brackets
                .get(&(j, i))
                .map(|v| v.iter().map(|q| -q).collect())
                .unwrap_or_else(|| zero_vector(self.dim)),
            std::cmp::Ordering::Equal => zero_vector(self.dim),
        }
    }

    /// `[x, y]` for arbitrary vectors.
    pub fn bracket_vectors(&self, x: &[Rational], y: &[Rational]) -> Vector {
        let mut out = zero_vector(self.dim);
        for (&(i, j), c) in &self.brackets {
            let w = &x[i] * &y[j] - &x[j] * &y[i];
            if w.is_zero() {
                continue;
            }
            for (o, ck) in out.iter_mut().zip(c) {
                if !ck.is_zero() {
                    *o += &w * ck;
                }
            }
        }
        out
    }

    /// Basis triples `(i, j, k)`, `i < j < k`, 1-based, on which the
    /// Jacobiator is nonzero.
    pub fn check_jacobi(&self) -> Vec<(usize, usize, usize)> {
        let n = self.dim;
        let e = |i| unit_vector(n, i);
        let mut bad = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let a = self.bracket_vectors(&self.bracket(i, j), &e(k));
                    let b = self.bracket_vectors(&self.bracket(j, k), &e(i));
                    let c = self.bracket_vectors(&self.bracket(k, i), &e(j));
                    let s: Vector = a.iter().zip(&b).zip(&c).map(|((x, y), z)| x + y + z).collect();
                    if !is_zero_vector(&s) {
                        bad.push((i + 1, j + 1, k + 1));
                    }
                }
            }
        }
        bad
    }

    fn require_jacobi(&self) -> Result<()> {
        let bad = self.check_jacobi();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Jacobi(bad))
        }
    }

    /// `{x : [x, e_i] = 0 for all i}`.
    pub fn center(&self) -> Subspace {
        let n = self.dim;
        let mut rows = Vec::new();
        for i in 0..n {
            // column j of ad(e_i) restricted: x ↦ [x, e_i] = Σ_j x_j [e_j, e_i]
            let cols: Vec<Vector> = (0..n).map(|j| self.bracket(j, i)).collect();
            for k in 0..n {
                rows.push(cols.iter().map(|c| c[k].clone()).collect());
            }
        }
        kernel(&Matrix::from_rows(n, rows).expect("rows have length n"))
    }

    /// `L ⊇ [L, L] ⊇ [L, [L, L]] ⊇ …` until it stabilizes.
    pub fn lower_central_series(&self) -> Vec<Subspace> {
        let n = self.dim;
        let mut series = vec![Subspace::full(n)];
        loop {
            let last = series.last().expect("nonempty");
            let gens: Vec<Vector> = last
                .basis()
                .iter()
                .flat_map(|x| (0..n).map(move |i| (x, i)))
                .map(|(x, i)| self.bracket_vectors(&unit_vector(n, i), x))
                .collect();
            let next = Subspace::span(n, gens).expect("vectors have length n");
            if next.dim() == last.dim() {
                return series;
            }
            series.push(next);
        }
    }

    pub fn is_nilpotent(&self) -> bool {
        self.lower_central_series().last().is_some_and(|s| s.dim() == 0)
    }

    /// `d e_k*` for each `k`.
    pub fn differential_of_duals(&self) -> Vec<Multivector> {
        let n = self.dim;
        let mut de = vec![Multivector::zero(n); n];
        for (&(i, j), c) in &self.brackets {
            for (k, ck) in c.iter().enumerate() {
                if !ck.is_zero() {
                    de[k].add_term((1 << i) | (1 << j), -ck.clone());
                }
            }
        }
        de
    }

    /// The Chevalley–Eilenberg differential on `ΛL*`.
    pub fn ce_differential(&self) -> CeDifferential {
        CeDifferential { dim: self.dim, de: self.differential_of_duals() }
    }

    /// All `d_k` as matrices, with `d² = 0` checked on every monomial.
    pub fn ce_complex(&self) -> Result<CeComplex> {
        self.require_jacobi()?;
        let d = self.ce_differential();
        if !d.squares_to_zero() {
            return Err(Error::Internal("d^2 != 0 although Jacobi holds".into()));
        }
        let matrices = (0..=self.dim).map(|k| d.matrix(k)).collect();
        Ok(CeComplex { dim: self.dim, d: matrices })
    }

    /// Whether `D` (acting by columns) is a derivation.
    pub fn is_derivation(&self, d: &Matrix) -> bool {
        let n = self.dim;
        let apply = |x: &[Rational]| d.mul_vec(x).expect("square matrix of size n");
        (0..n).all(|i| {
            (i + 1..n).all(|j| {
                let (ei, ej) = (unit_vector(n, i), unit_vector(n, j));
                let lhs = apply(&self.bracket(i, j));
                let a = self.bracket_vectors(&apply(&ei), &ej);
                let b = self.bracket_vectors(&ei, &apply(&ej));
                lhs.iter().zip(a.iter().zip(&b)).all(|(l, (x, y))| *l == x + y)
            })
        })
    }

    /// `L ⊕ Qu` with `[u, x] = Dx`; `u` gets index `dim`.
    pub fn derivation_extension(&self, d: &Matrix) -> Result<LieAlgebra> {
        let n = self.dim;
        if d.rows() != n || d.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: d.rows() });
        }
        if !self.is_derivation(d) {
            return Err(Error::NotDerivation);
        }
        NilpotentOperator::new(d.clone()).map_err(|_| Error::NotNilpotent)?;
        let mut out = self.widened(n + 1);
        for i in 0..n {
            let mut v: Vector = d.column(i).iter().map(|q| -q).collect();
            v.push(Rational::zero());
            if !is_zero_vector(&v) {
                out.brackets.insert((i, n), v);
            }
        }
        out.require_jacobi().map_err(|e| Error::Internal(format!("derivation extension: {e}")))?;
        Ok(out)
    }

    /// `L ⊕ Qz` with `[x, y] = [x, y]_L + Ω₂(x, y) z`; `z` gets index `dim`.
    /// Under the sign convention above, `dz* = −Ω₂`.
    pub fn central_extension(&self, omega2: &Multivector) -> Result<LieAlgebra> {
        let n = self.dim;
        if omega2.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: omega2.dim() });
        }
        if !omega2.is_zero() && !omega2.is_homogeneous(2) {
            return Err(Error::InvalidInput("the 2-form must have grade 2".into()));
        }
        if !self.ce_differential().apply(omega2).is_zero() {
            return Err(Error::NotClosed);
        }
        let mut out = self.widened(n + 1);
        for (mask, c) in omega2.terms() {
            let i = mask.trailing_zeros() as usize;
            let j = (Mask::BITS - 1 - mask.leading_zeros()) as usize;
            let v = out.brackets.entry((i, j)).or_insert_with(|| zero_vector(n + 1));
            v[n] += c;
        }
        out.brackets.retain(|_, v| !is_zero_vector(v));
        out.require_jacobi().map_err(|e| Error::Internal(format!("central extension: {e}")))?;
        Ok(out)
    }

    fn widened(&self, dim: usize) -> LieAlgebra {
        let brackets = self
            .brackets
            .iter()
            .map(|(&k, v)| {
                let mut v = v.clone();
                v.resize(dim, Rational::zero());
                (k, v)
            })
            .collect();
        LieAlgebra { dim, brackets, labels: None, distinguished: None }
    }

    /// Betti numbers and deterministic representatives of every class.
    pub fn cohomology(&self) -> Result<Cohomology> {
        let c = self.ce_complex()?;
        let degrees = (0..=self.dim).map(|k| c.degree(k)).collect();
        Ok(Cohomology { degrees })
    }

    /// Searches for a central `z`, a degree `k` and a cocycle `a` with
    /// `i_z a` not exact; degree ascending, then centre basis, then class
    /// representatives.
    pub fn central_action(&self) -> Result<CentralAction> {
        self.require_jacobi()?;
        let n = self.dim;
        let nilpotent = self.is_nilpotent();
        let center = self.center();
        let d = self.ce_differential();
        let mut images: Vec<Option<Subspace>> = vec![None; n + 1];
        let image_of = |k: usize, images: &mut Vec<Option<Subspace>>| -> Subspace {
            images[k].get_or_insert_with(|| d.image_in(k)).clone()
        };
        for k in 1..=n {
            let reps = {
                let ker = kernel(&d.matrix(k));
                let im = image_of(k, &mut images);
                complement_representatives(&im, &ker)
            };
            if reps.is_empty() {
                continue;
            }
            let basis_k = GradedBasis::new(n, k);
            let basis_k1 = GradedBasis::new(n, k - 1);
            let im_lower = image_of(k - 1, &mut images);
            for z in center.basis() {
                for r in &reps {
                    let a = Multivector::from_graded_coords(n, &basis_k, r);
                    let iza = a.contract_vector(z)?;
                    if !im_lower.contains(&iza.graded_coords(&basis_k1))? {
                        return Ok(CentralAction {
                            nontrivial: true,
                            nilpotent,
                            witness: Some(CentralWitness { z: z.clone(), degree: k, cocycle: a, contraction: iza }),
                        });
                    }
                }
            }
        }
        Ok(CentralAction { nontrivial: false, nilpotent, witness: None })
    }

    /// Whether a closed form is exact.
    pub fn is_exact(&self, form: &Multivector) -> Result<bool> {
        if form.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: form.dim() });
        }
        let d = self.ce_differential();
        if !d.apply(form).is_zero() {
            return Err(Error::NotCocycle);
        }
        for k in form.grades() {
            if k == 0 {
                return Ok(false);
            }
            let part = form.grade_project(k);
            let coords = part.graded_coords(&GradedBasis::new(self.dim, k));
            if solve(&d.matrix(k - 1), &coords)?.is_none() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `d(x) = 0` for every `x` and `i_z d + d i_z = 0` on every monomial.
    pub fn cartan_holds(&self, z: &[Rational]) -> Result<bool> {
        let n = self.dim;
        let d = self.ce_differential();
        for k in 0..=n {
            for &m in GradedBasis::new(n, k).masks() {
                let x = Multivector::monomial(n, m, Rational::from_integer(1.into()));
                let lhs = &d.apply(&x.contract_vector(z)?) + &d.apply(&x).contract_vector(z)?;
                if !lhs.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Vectors of `ker` extending an echelon basis of `im` to one of `ker`,
/// taken from `ker`'s echelon basis in order.
fn complement_representatives(im: &Subspace, ker: &Subspace) -> Vec<Vector> {
    let ncols = ker.ambient_dim();
    let mut rows: Vec<Vector> = im.basis().to_vec();
    let mut rank = rows.len();
    let mut reps = Vec::new();
    for v in ker.basis() {
        let mut trial = rows.clone();
        trial.push(v.clone());
        rref_in_place(&mut trial, ncols);
        if trial.len() > rank {
            rank = trial.len();
            rows = trial;
            reps.push(v.clone());
        }
    }
    reps
}

/// The differential as an operator on forms.
#[derive(Debug, Clone)]
pub struct CeDifferential {
    dim: usize,
    de: Vec<Multivector>,
}

impl CeDifferential {
    pub fn apply(&self, w: &Multivector) -> Multivector {
        let mut out = Multivector::zero(self.dim);
        for (mask, q) in w.terms() {
            let mut pos = 0;
            for j in 0..self.dim {
                if mask & (1 << j) == 0 {
                    continue;
                }
                if !self.de[j].is_zero() {
                    let rest = Multivector::monomial(self.dim, mask ^ (1 << j), q.clone());
                    let t = &self.de[j] ^ &rest;
                    out = if pos % 2 == 0 { &out + &t } else { &out - &t };
                }
                pos += 1;
            }
        }
        out
    }

    /// Matrix of `d_k : Λ^k → Λ^{k+1}`.
    pub fn matrix(&self, k: usize) -> Matrix {
        crate::exterior::operator_matrix(self.dim, k, k + 1, |x| self.apply(x))
    }

    /// `im d_{k-1} ⊆ Λ^k` (zero for `k = 0`).
    pub fn image_in(&self, k: usize) -> Subspace {
        let len = GradedBasis::new(self.dim, k).len();
        if k == 0 {
            return Subspace::zero(len);
        }
        let m = self.matrix(k - 1);
        Subspace::span(len, m.transpose().to_rows()).expect("columns have the right length")
    }

    pub fn squares_to_zero(&self) -> bool {
        (0..=self.dim).all(|k| {
            GradedBasis::new(self.dim, k).masks().iter().all(|&m| {
                let x = Multivector::monomial(self.dim, m, Rational::from_integer(1.into()));
                self.apply(&self.apply(&x)).is_zero()
            })
        })
    }
}

/// `d_0, …, d_n` as matrices.
#[derive(Debug, Clone)]
pub struct CeComplex {
    pub dim: usize,
    pub d: Vec<Matrix>,
}

impl CeComplex {
    fn degree(&self, k: usize) -> CohomologyDegree {
        let n = self.dim;
        let len = GradedBasis::new(n, k).len();
        let ker = kernel(&self.d[k]);
        let im = if k == 0 {
            Subspace::zero(len)
        } else {
            Subspace::span(len, self.d[k - 1].transpose().to_rows()).expect("columns have the right length")
        };
        let basis = GradedBasis::new(n, k);
        let representatives = complement_representatives(&im, &ker)
            .iter()
            .map(|c| Multivector::from_graded_coords(n, &basis, c))
            .collect::<Vec<_>>();
        CohomologyDegree { degree: k, betti: ker.dim() - im.dim(), representatives }
    }

    /// `d_{k+1} ∘ d_k = 0` as matrices.
    pub fn squares_to_zero(&self) -> bool {
        self.d.windows(2).all(|w| w[1].mul(&w[0]).map(|m| m.is_zero()).unwrap_or(false))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CohomologyDegree {
    pub degree: usize,
    pub betti: usize,
    pub representatives: Vec<Multivector>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cohomology {
    pub degrees: Vec<CohomologyDegree>,
}

impl Cohomology {
    pub fn betti(&self) -> Vec<usize> {
        self.degrees.iter().map(|d| d.betti).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CentralWitness {
    #[serde(with = "crate::rational::serde_vector")]
    pub z: Vector,
    pub degree: usize,
    pub cocycle: Multivector,
    pub contraction: Multivector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CentralAction {
    pub nontrivial: bool,
    pub nilpotent: bool,
    pub witness: Option<CentralWitness>,
}

/// `I ⊕ Qu ⊕ Qz` with `dφ = u*∧θφ` on `I*` and `dz* = u*∧ε + Ω`.
///
/// `θ`, `ε`, `Ω` live on `V = I*` with the dual basis of `I` as coordinates;
/// `u` and `z` get indices `dim_I` and `dim_I + 1`.
pub fn build_instance_algebra(theta: &NilpotentOperator, eps: &[Rational], omega: &Multivector) -> Result<LieAlgebra> {
    let d = theta.dim();
    if eps.len() != d || omega.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: if eps.len() != d { eps.len() } else { omega.dim() } });
    }
    if !omega.is_zero() && !omega.is_homogeneous(2) {
        return Err(crate::error::Hypothesis::OmegaNotGradeTwo.into());
    }
    let t_omega = theta.apply_derivation(omega)?;
    if !t_omega.is_zero() {
        return Err(crate::error::Hypothesis::ThetaOmegaNonzero(t_omega).into());
    }
    let i = LieAlgebra::abelian(d);
    let dmat = Matrix::from_rows(d, (0..d).map(|r| (0..d).map(|c| -theta.matrix().get(c, r)).collect()).collect())?;
    let w = i.derivation_extension(&dmat)?;
    let u_star = Multivector::basis_vector(d + 1, d);
    let dz = &(&u_star ^ &Multivector::from_vector(eps).embed(d + 1)) + &omega.embed(d + 1);
    let mut l = w.central_extension(&-&dz)?;
    l.distinguished = Some(Distinguished { u: d, z: d + 1 });
    Ok(l)
}

/// `z*∧(u*∧α + β) + γ_L` on `L*` with `γ_L = −γ`, the candidate closed
/// form whose contraction with `z` is `u*∧α + β`. When that candidate is
/// not closed, a correction `u*∧δ' + γ'` is solved for.
pub fn assemble_cocycle(
    l: &LieAlgebra,
    beta: &Multivector,
    alpha: &Multivector,
    gamma: &Multivector,
) -> Result<(Multivector, bool)> {
    let dist = l.distinguished.ok_or_else(|| Error::InvalidInput("algebra has no distinguished u, z".into()))?;
    let n = l.dim();
    let u_star = Multivector::basis_vector(n, dist.u);
    let z_star = Multivector::basis_vector(n, dist.z);
    let head = &z_star ^ &(&(&u_star ^ &alpha.embed(n)) + &beta.embed(n));
    let omega = &head - &gamma.embed(n);
    let d = l.ce_differential();
    let r = d.apply(&omega);
    if r.is_zero() {
        return Ok((omega, false));
    }
    // Solve d(x) = −d(head) with x free of z*.
    let target = -&d.apply(&head);
    let mut x = Multivector::zero(n);
    for k in target.grades() {
        let rows = GradedBasis::new(n, k);
        let cols = GradedBasis::new(n, k - 1);
        let allowed: Vec<Mask> = cols.masks().iter().copied().filter(|m| m & (1 << dist.z) == 0).collect();
        let columns: Vec<Vector> = allowed
            .iter()
            .map(|&m| d.apply(&Multivector::monomial(n, m, Rational::from_integer(1.into()))).graded_coords(&rows))
            .collect();
        let m = Matrix::from_columns(rows.len(), &columns)?;
        let sol = solve(&m, &target.grade_project(k).graded_coords(&rows))?.ok_or(Error::NotClosed)?;
        for (&mask, q) in allowed.iter().zip(sol) {
            x.add_term(mask, q);
        }
    }
    Ok((&head + &x, true))
}

/// Whether `u*∧α + β = d(z*∧(u*∧φ + ψ) + ρ)` has a solution, written out on
/// `ΛV` as `Ωψ = β`, `θψ = 0`, `Ωφ + εψ + θρ = α`, grade by grade.
pub fn notd_solvable(
    theta: &NilpotentOperator,
    eps: &[Rational],
    omega: &Multivector,
    alpha: &Multivector,
    beta: &Multivector,
) -> Result<bool> {
    let n = theta.dim();
    let e = Multivector::from_vector(eps);
    let mut degrees: Vec<usize> = beta.grades();
    degrees.extend(alpha.grades().into_iter().map(|k| k + 1));
    degrees.sort_unstable();
    degrees.dedup();
    for j in degrees {
        // unknowns: ψ ∈ Λ^{j-2}, φ ∈ Λ^{j-3}, ρ ∈ Λ^{j-1}
        let grade = |k: isize| (k >= 0 && k as usize <= n).then(|| GradedBasis::new(n, k as usize));
        let j = j as isize;
        let (psi_b, phi_b, rho_b) = (grade(j - 2), grade(j - 3), grade(j - 1));
        let (rj, rj2, rj1) = (grade(j), grade(j - 2), grade(j - 1));
        let len = |b: &Option<GradedBasis>| b.as_ref().map_or(0, |b| b.len());
        let (np, nf, nr) = (len(&psi_b), len(&phi_b), len(&rho_b));
        let (m1, m2, m3) = (len(&rj), len(&rj2), len(&rj1));
        let mut a = Matrix::zeros(m1 + m2 + m3, np + nf + nr);
        let mut rhs = zero_vector(m1 + m2 + m3);
        let place = |a: &mut Matrix, row0: usize, rows: &Option<GradedBasis>, col: usize, img: &Multivector| {
            if let Some(rb) = rows {
                for (i, q) in img.graded_coords(rb).into_iter().enumerate() {
                    if !q.is_zero() {
                        a.set(row0 + i, col, q);
                    }
                }
            }
        };
        let one = Rational::from_integer(1.into());
        if let Some(pb) = &psi_b {
            for (c, &m) in pb.masks().iter().enumerate() {
                let x = Multivector::monomial(n, m, one.clone());
                place(&mut a, 0, &rj, c, &(omega ^ &x));
                place(&mut a, m1, &rj2, c, &theta.apply_derivation(&x)?);
                place(&mut a, m1 + m2, &rj1, c, &(&e ^ &x));
            }
        }
        if let Some(fb) = &phi_b {
            for (c, &m) in fb.masks().iter().enumerate() {
                let x = Multivector::monomial(n, m, one.clone());
                place(&mut a, m1 + m2, &rj1, np + c, &(omega ^ &x));
            }
        }
        if let Some(rb) = &rho_b {
            for (c, &m) in rb.masks().iter().enumerate() {
                let x = Multivector::monomial(n, m, one.clone());
                place(&mut a, m1 + m2, &rj1, np + nf + c, &theta.apply_derivation(&x)?);
            }
        }
        if let Some(b) = &rj {
            for (i, q) in beta.grade_project(j as usize).graded_coords(b).into_iter().enumerate() {
                rhs[i] = q;
            }
        } else if !beta.grade_project(j as usize).is_zero() {
            return Ok(false);
        }
        if let Some(b) = &rj1 {
            for (i, q) in alpha.grade_project(j as usize - 1).graded_coords(b).into_iter().enumerate() {
                rhs[m1 + m2 + i] = q;
            }
        }
        if solve(&a, &rhs)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The brute-force confirmation that a certificate's class is a nonzero
/// image of the central action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub jacobi: bool,
    pub nilpotent: bool,
    pub d_squared_zero: bool,
    pub cartan: bool,
    pub dz_matches: bool,
    pub cocycle_closed: bool,
    pub cocycle_corrected: bool,
    pub contraction_matches: bool,
    pub contraction_not_exact: bool,
    pub notd_unsolvable: bool,
    pub central_action_nontrivial: bool,
    pub witness_degree: Option<usize>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.jacobi
            && self.nilpotent
            && self.d_squared_zero
            && self.cartan
            && self.dz_matches
            && self.cocycle_closed
            && self.contraction_matches
            && self.contraction_not_exact
            && self.notd_unsolvable
            && self.central_action_nontrivial
    }
}

/// Builds `L` from `(θ, ε, Ω)` and checks, by brute force on its
/// Chevalley–Eilenberg complex, that `i_z ω = u*∧α + β` is not exact.
/// The full central-action search runs only when `search` is set.
pub fn oracle_check(
    theta: &NilpotentOperator,
    eps: &[Rational],
    omega: &Multivector,
    beta: &Multivector,
    alpha: &Multivector,
    gamma: &Multivector,
    search: bool,
) -> Result<OracleReport> {
    let l = build_instance_algebra(theta, eps, omega)?;
    let dist = l.distinguished.expect("set by the builder");
    let n = l.dim();
    let d = l.ce_differential();
    let z = unit_vector(n, dist.z);
    let u_star = Multivector::basis_vector(n, dist.u);
    let expected_dz = &(&u_star ^ &Multivector::from_vector(eps).embed(n)) + &omega.embed(n);
    let dz_matches = d.apply(&Multivector::basis_vector(n, dist.z)) == expected_dz;
    let (cocycle, corrected) = assemble_cocycle(&l, beta, alpha, gamma)?;
    let cocycle_closed = d.apply(&cocycle).is_zero();
    let contraction = cocycle.contract_vector(&z)?;
    let target = &(&u_star ^ &alpha.embed(n)) + &beta.embed(n);
    let contraction_not_exact = match l.is_exact(&target) {
        Ok(exact) => !exact,
        Err(Error::NotCocycle) => false,
        Err(e) => return Err(e),
    };
    let (central_action_nontrivial, witness_degree) = if search {
        let ca = l.central_action()?;
        (ca.nontrivial, ca.witness.map(|w| w.degree))
    } else {
        (contraction_not_exact, target.grades().first().copied())
    };
    Ok(OracleReport {
        jacobi: l.check_jacobi().is_empty(),
        nilpotent: l.is_nilpotent(),
        d_squared_zero: d.squares_to_zero(),
        cartan: l.cartan_holds(&z)?,
        dz_matches,
        cocycle_closed,
        cocycle_corrected: corrected,
        contraction_matches: contraction == target,
        contraction_not_exact,
        notd_unsolvable: !notd_solvable(theta, eps, omega, alpha, beta)?,
        central_action_nontrivial,
        witness_degree,
    })
}

#[derive(Serialize, Deserialize)]
struct BracketJson {
    i: usize,
    j: usize,
    coeffs: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct LieJson {
    dim: usize,
    brackets: Vec<BracketJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distinguished: Option<Distinguished>,
}

impl Serialize for LieAlgebra {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let brackets = self
            .brackets
            .iter()
            .map(|(&(i, j), v)| BracketJson {
                i: i + 1,
                j: j + 1,
                coeffs: v
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| !q.is_zero())
                    .map(|(k, q)| ((k + 1).to_string(), crate::rational::format(q)))
                    .collect(),
            })
            .collect();
        let dist = self.distinguished.map(|d| Distinguished { u: d.u + 1, z: d.z + 1 });
        LieJson { dim: self.dim, brackets, labels: self.labels.clone(), distinguished: dist }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LieAlgebra {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = LieJson::deserialize(d)?;
        let n = raw.dim;
        if n > crate::exterior::MAX_DIM {
            return Err(D::Error::custom(format!("dim {n} exceeds {}", crate::exterior::MAX_DIM)));
        }
        let one_based = |i: usize| {
            if i == 0 || i > n {
                Err(D::Error::custom(format!("index {i} out of range 1..={n}")))
            } else {
                Ok(i - 1)
            }
        };
        let mut entries = Vec::new();
        for b in raw.brackets {
            let mut v = zero_vector(n);
            for (k, q) in b.coeffs {
                let k: usize = k.parse().map_err(|_| D::Error::custom(format!("bad index {k:?}")))?;
                v[one_based(k)?] =
                    crate::rational::parse(&q).ok_or_else(|| D::Error::custom(format!("bad rational {q:?}")))?;
            }
            entries.push((one_based(b.i)?, one_based(b.j)?, v));
        }
        let mut l = LieAlgebra::from_brackets(n, entries).map_err(D::Error::custom)?;
        if let Some(labels) = &raw.labels {
            if labels.len() != n {
                return Err(D::Error::custom("labels must have one entry per basis vector"));
            }
        }
        l.labels = raw.labels;
        l.distinguished = match raw.distinguished {
            Some(dd) => Some(Distinguished { u: one_based(dd.u)?, z: one_based(dd.z)? }),
            None => None,
        };
        Ok(l)
    }
}
