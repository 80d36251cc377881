//! Analysis of a pair `(θ, Ω)` with `θΩ = 0`: the rank and support of `Ω`,
//! the symplectic Jordan normal form of `θ` on the support, the
//! decomposable forms `β_P` and their supports `S_P`, and the Lefschetz
//! maps `μ_Ω^k`.
//!
//! On the support `S` the 2-vector `Ω` is nondegenerate, so it determines a
//! symplectic form `ω` on `S` (the inverse of its coefficient matrix), and
//! `θΩ = 0` says exactly that `θ|_S` is skew for `ω`. The normal form is
//! found by peeling off, longest chains first, nondegenerate `θ`-invariant
//! subspaces spanned by one chain (even length) or a pair of chains (odd
//! length), normalizing the chain generators so that `ω` takes the
//! canonical anti-diagonal shape, and recursing on the `ω`-orthogonal
//! complement.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Hypothesis, Result};
use crate::exterior::{operator_matrix, Multivector, NilpotentOperator};
use crate::linalg::{kernel, solve, Matrix, Subspace};
use crate::rational::{self, is_zero_vector, unit_vector, zero_vector, Rational, Vector};

fn check_grade_two(omega: &Multivector) -> Result<()> {
    if omega.is_zero() {
        return Err(Hypothesis::OmegaZero.into());
    }
    if !omega.is_homogeneous(2) {
        return Err(Hypothesis::OmegaNotGradeTwo.into());
    }
    Ok(())
}

/// Largest `k` with `Ω^k ≠ 0`.
pub fn omega_rank(omega: &Multivector) -> Result<usize> {
    check_grade_two(omega)?;
    let mut k = 0;
    let mut power = Multivector::one(omega.dim());
    loop {
        let next = &power ^ omega;
        if next.is_zero() {
            return Ok(k);
        }
        power = next;
        k += 1;
    }
}

/// `S = {x : x ∧ Ω^r = 0}`.
pub fn support(omega: &Multivector) -> Result<Subspace> {
    let r = omega_rank(omega)?;
    let top = omega.power(r);
    let m = operator_matrix(omega.dim(), 1, 2 * r + 1, |x| x ^ &top);
    Ok(kernel(&m))
}

/// Matrix of `μ_Ω : Λ^k → Λ^{k+2}` on the monomial bases.
pub fn mu_matrix(omega: &Multivector, k: usize) -> Matrix {
    operator_matrix(omega.dim(), k, k + 2, |x| x ^ omega)
}

/// A pair of odd-length chains `u_1 ← … ← u_{2l+1}`, `v_1 ← … ← v_{2l+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UvBlock {
    pub l: usize,
    #[serde(with = "crate::rational::serde_matrix")]
    pub u: Vec<Vector>,
    #[serde(with = "crate::rational::serde_matrix")]
    pub v: Vec<Vector>,
}

/// A single even-length chain `z_1 ← … ← z_{2m}` with its sign constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZBlock {
    pub m: usize,
    #[serde(with = "crate::rational::serde_matrix")]
    pub z: Vec<Vector>,
    #[serde(with = "crate::rational::serde_rational")]
    pub sign: Rational,
}

/// Symplectic Jordan normal form of `(θ|_S, Ω)`.
///
/// Vectors are coordinate vectors in the ambient space; `u[i]` is the
/// chain vector at level `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalDecomposition {
    pub dim: usize,
    pub rank: usize,
    pub support: Subspace,
    pub uv_blocks: Vec<UvBlock>,
    pub z_blocks: Vec<ZBlock>,
}

/// Per-block coordinates of a vector of `S` in the canonical basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCoords {
    pub uv: Vec<(Vector, Vector)>,
    pub z: Vec<Vector>,
}

/// Outcome of checking every normal-form invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionCheck {
    pub nonempty: bool,
    pub basis_of_support: bool,
    pub support_dim_is_twice_rank: bool,
    pub support_theta_invariant: bool,
    pub chain_relations: bool,
    pub reconstructs_omega: bool,
    pub signs_normalized: bool,
    pub unit_signs: bool,
}

impl DecompositionCheck {
    /// All invariants that are attainable over the rationals.
    pub fn passed(&self) -> bool {
        self.nonempty
            && self.basis_of_support
            && self.support_dim_is_twice_rank
            && self.support_theta_invariant
            && self.chain_relations
            && self.reconstructs_omega
            && self.signs_normalized
    }
}

/// The selector `P`: one nonzero pair `(r_a, s_a)` per `U/V` block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PSelector(#[serde(with = "crate::rational::serde_pairs")] pub Vec<(Rational, Rational)>);

impl PSelector {
    /// `(1, 0)` for every block.
    pub fn standard(p: usize) -> Self {
        PSelector(vec![(Rational::one(), Rational::zero()); p])
    }
}

/// Canonical `Ω` of a given block shape, written in the coordinates
/// `u^1_1..u^1_{2l+1}, v^1_1.., …, z^1_1..z^1_{2m}, …`.
fn canonical_omega(dim: usize, pieces: &[(Vec<Vector>, Vec<Vector>)], zs: &[(Vec<Vector>, Rational)]) -> Multivector {
    let mut omega = Multivector::zero(dim);
    for (u, v) in pieces {
        let n = u.len();
        for i in 1..=n {
            let t = &Multivector::from_vector(&u[n - i]) ^ &Multivector::from_vector(&v[i - 1]);
            omega = if i % 2 == 1 { &omega + &t } else { &omega - &t };
        }
    }
    for (z, c) in zs {
        let n = z.len();
        let mut block = Multivector::zero(dim);
        for i in 1..=n / 2 {
            let t = &Multivector::from_vector(&z[n - i]) ^ &Multivector::from_vector(&z[i - 1]);
            block = if i % 2 == 1 { &block + &t } else { &block - &t };
        }
        omega = &omega + &block.scale(c);
    }
    omega
}

impl CanonicalDecomposition {
    pub fn p(&self) -> usize {
        self.uv_blocks.len()
    }

    pub fn q(&self) -> usize {
        self.z_blocks.len()
    }

    /// All canonical vectors: each `U/V` block as `u_1.., v_1..`, then each
    /// `Z` block as `z_1..`.
    pub fn basis_vectors(&self) -> Vec<Vector> {
        let mut out = Vec::new();
        for b in &self.uv_blocks {
            out.extend(b.u.iter().cloned());
            out.extend(b.v.iter().cloned());
        }
        for b in &self.z_blocks {
            out.extend(b.z.iter().cloned());
        }
        out
    }

    /// `Ω` rebuilt from the canonical bases.
    pub fn reconstruct_omega(&self) -> Multivector {
        let pieces: Vec<_> = self.uv_blocks.iter().map(|b| (b.u.clone(), b.v.clone())).collect();
        let zs: Vec<_> = self.z_blocks.iter().map(|b| (b.z.clone(), b.sign.clone())).collect();
        canonical_omega(self.dim, &pieces, &zs)
    }

    /// `Ω` in the abstract coordinates of [`Self::basis_vectors`].
    pub fn model_omega(&self) -> Multivector {
        let n = 2 * self.rank;
        let mut next = 0;
        let mut take = |len: usize| -> Vec<Vector> {
            let vs = (next..next + len).map(|i| unit_vector(n, i)).collect();
            next += len;
            vs
        };
        let mut pieces = Vec::new();
        for b in &self.uv_blocks {
            let u = take(2 * b.l + 1);
            let v = take(2 * b.l + 1);
            pieces.push((u, v));
        }
        let zs: Vec<_> = self.z_blocks.iter().map(|b| (take(2 * b.m), b.sign.clone())).collect();
        canonical_omega(n, &pieces, &zs)
    }

    /// Coordinates of `x ∈ S` block by block; `None` if `x ∉ S`.
    pub fn coordinates(&self, x: &[Rational]) -> Result<Option<BlockCoords>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let basis = self.basis_vectors();
        let m = Matrix::from_columns(self.dim, &basis)?;
        let Some(c) = solve(&m, x)? else {
            return Ok(None);
        };
        let mut it = c.into_iter();
        let mut take = |len: usize| -> Vector { it.by_ref().take(len).collect() };
        let uv = self
            .uv_blocks
            .iter()
            .map(|b| {
                let u = take(2 * b.l + 1);
                let v = take(2 * b.l + 1);
                (u, v)
            })
            .collect();
        let z = self.z_blocks.iter().map(|b| take(2 * b.m)).collect();
        Ok(Some(BlockCoords { uv, z }))
    }

    /// Checks every normal-form invariant against `(θ, Ω)`.
    pub fn check(&self, theta: &NilpotentOperator, omega: &Multivector) -> DecompositionCheck {
        let basis = self.basis_vectors();
        let spanned = Subspace::span(self.dim, basis.iter().cloned());
        let basis_of_support = spanned
            .map(|s| s.dim() == basis.len() && s == self.support)
            .unwrap_or(false);
        let support_theta_invariant = self
            .support
            .basis()
            .iter()
            .all(|b| self.support.contains(&theta.apply(b)).unwrap_or(false));
        let chain = |vs: &[Vector]| {
            !vs.is_empty()
                && is_zero_vector(&theta.apply(&vs[0]))
                && vs.windows(2).all(|w| theta.apply(&w[1]) == w[0])
        };
        let chain_relations = self.uv_blocks.iter().all(|b| {
            b.u.len() == 2 * b.l + 1 && b.v.len() == 2 * b.l + 1 && chain(&b.u) && chain(&b.v)
        }) && self.z_blocks.iter().all(|b| b.m >= 1 && b.z.len() == 2 * b.m && chain(&b.z));
        let signs_normalized = self.z_blocks.iter().all(|b| {
            !b.sign.is_zero() && b.sign.is_integer() && rational::square_class(&b.sign).0 == *b.sign.numer()
        });
        let unit_signs = self.z_blocks.iter().all(|b| b.sign == Rational::one() || b.sign == -Rational::one());
        DecompositionCheck {
            nonempty: self.p() + self.q() > 0,
            basis_of_support,
            support_dim_is_twice_rank: self.support.dim() == 2 * self.rank,
            support_theta_invariant,
            chain_relations,
            reconstructs_omega: self.reconstruct_omega() == *omega,
            signs_normalized,
            unit_signs,
        }
    }

    /// Factors of `β_P` in product order: for each `U/V` block
    /// `r u_{l+1} + s v_{l+1}, u_1..u_l, v_1..v_l`, then for each `Z` block
    /// `z_1..z_m`.
    pub fn beta_p_factors(&self, sel: &PSelector) -> Result<Vec<Vector>> {
        if sel.0.len() != self.p() {
            return Err(Error::SelectorSize { expected: self.p(), got: sel.0.len() });
        }
        let mut out = Vec::with_capacity(self.rank);
        for (b, (r, s)) in self.uv_blocks.iter().zip(&sel.0) {
            if r.is_zero() && s.is_zero() {
                return Err(Error::InvalidInput("selector pair (0, 0)".into()));
            }
            out.push(combine(r, &b.u[b.l], s, &b.v[b.l]));
            out.extend(b.u[..b.l].iter().cloned());
            out.extend(b.v[..b.l].iter().cloned());
        }
        for b in &self.z_blocks {
            out.extend(b.z[..b.m].iter().cloned());
        }
        Ok(out)
    }

    /// `S_P`: the span of the factors of `β_P`.
    pub fn sp_subspace(&self, sel: &PSelector) -> Result<Subspace> {
        Subspace::span(self.dim, self.beta_p_factors(sel)?)
    }
}

pub(crate) fn combine(r: &Rational, x: &[Rational], s: &Rational, y: &[Rational]) -> Vector {
    x.iter().zip(y).map(|(a, b)| r * a + s * b).collect()
}

fn add_scaled(x: &mut Vector, c: &Rational, y: &[Rational]) {
    if c.is_zero() {
        return;
    }
    for (a, b) in x.iter_mut().zip(y) {
        if !b.is_zero() {
            *a += c * b;
        }
    }
}

fn scaled(c: &Rational, x: &[Rational]) -> Vector {
    x.iter().map(|a| c * a).collect()
}

/// Wedge product of a list of vectors, in order.
pub fn wedge_all(dim: usize, factors: &[Vector]) -> Multivector {
    factors
        .iter()
        .fold(Multivector::one(dim), |acc, f| &acc ^ &Multivector::from_vector(f))
}

/// The symplectic form on `S` induced by `Ω`.
struct SupportForm<'a> {
    pivots: Vec<usize>,
    inverse: Matrix,
    theta: &'a NilpotentOperator,
}

impl<'a> SupportForm<'a> {
    fn new(omega: &Multivector, support: &Subspace, theta: &'a NilpotentOperator) -> Result<Self> {
        let pivots = support.pivots().to_vec();
        let n = pivots.len();
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let c = omega.coeff((1 << pivots[i]) | (1 << pivots[j]));
                if !c.is_zero() {
                    a.set(j, i, -c.clone());
                    a.set(i, j, c);
                }
            }
        }
        let inverse = a
            .inverse()
            .ok_or_else(|| Error::Internal("Omega is degenerate on its support".into()))?;
        Ok(SupportForm { pivots, inverse, theta })
    }

    fn pair(&self, x: &[Rational], y: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (i, &pi) in self.pivots.iter().enumerate() {
            if x[pi].is_zero() {
                continue;
            }
            for (j, &pj) in self.pivots.iter().enumerate() {
                let w = self.inverse.get(i, j);
                if !w.is_zero() && !y[pj].is_zero() {
                    acc += &x[pi] * w * &y[pj];
                }
            }
        }
        acc
    }

    /// `ω(θ^i x, y)`.
    fn moment(&self, x: &[Rational], y: &[Rational], i: usize) -> Rational {
        self.pair(&self.theta.apply_power(x, i), y)
    }
}

fn height(theta: &NilpotentOperator, x: &[Rational]) -> usize {
    let mut k = 0;
    let mut y = x.to_vec();
    while !is_zero_vector(&y) {
        y = theta.apply(&y);
        k += 1;
    }
    k
}

/// Symplectic Jordan normal form of `θ` on the support of `Ω`.
///
/// Preconditions: `Ω` nonzero of grade 2 and `θΩ = 0`. The result is
/// checked against every invariant before being returned.
pub fn canonical_decomposition(theta: &NilpotentOperator, omega: &Multivector) -> Result<CanonicalDecomposition> {
    if omega.dim() != theta.dim() {
        return Err(Error::DimensionMismatch { expected: theta.dim(), got: omega.dim() });
    }
    check_grade_two(omega)?;
    let t_omega = theta.apply_derivation(omega)?;
    if !t_omega.is_zero() {
        return Err(Hypothesis::ThetaOmegaNonzero(t_omega).into());
    }
    let dim = omega.dim();
    let rank = omega_rank(omega)?;
    let support = support(omega)?;
    let form = SupportForm::new(omega, &support, theta)?;

    let mut uv_blocks = Vec::new();
    let mut z_blocks = Vec::new();
    let mut rest: Vec<Vector> = support.basis().to_vec();
    while !rest.is_empty() {
        let k = rest.iter().map(|x| height(theta, x)).max().unwrap_or(0);
        let block: Vec<Vector> = if k % 2 == 0 {
            let zb = even_block(&form, &rest, k)?;
            let vs = zb.z.clone();
            z_blocks.push(zb);
            vs
        } else {
            let ub = odd_block(&form, &rest, k)?;
            let mut vs = ub.u.clone();
            vs.extend(ub.v.iter().cloned());
            uv_blocks.push(ub);
            vs
        };
        rest = orthogonal_complement(&form, &rest, &block)?;
    }

    let d = CanonicalDecomposition { dim, rank, support, uv_blocks, z_blocks };
    let check = d.check(theta, omega);
    if !check.passed() {
        return Err(Error::Internal(format!("normal form failed its invariants: {check:?}")));
    }
    Ok(d)
}

/// One even chain of length `k` inside `span(rest)`.
fn even_block(form: &SupportForm<'_>, rest: &[Vector], k: usize) -> Result<ZBlock> {
    let theta = form.theta;
    let top = |x: &[Rational]| form.moment(x, x, k - 1);
    let mut x = rest
        .iter()
        .find(|x| !top(x).is_zero())
        .cloned()
        .or_else(|| {
            (0..rest.len()).flat_map(|i| (i + 1..rest.len()).map(move |j| (i, j))).find_map(|(i, j)| {
                let s: Vector = rest[i].iter().zip(&rest[j]).map(|(a, b)| a + b).collect();
                (!top(&s).is_zero()).then_some(s)
            })
        })
        .ok_or_else(|| Error::Internal(format!("no generator for an even chain of length {k}")))?;
    let g_top = top(&x);
    // Kill ω(θ^i x, x) for odd i < k - 1, from the top down.
    let mut t = 1;
    while 2 * t < k {
        let i = k - 1 - 2 * t;
        let g = form.moment(&x, &x, i);
        if !g.is_zero() {
            let c = -g / (Rational::from_integer(2.into()) * &g_top);
            let shift = theta.apply_power(&x, 2 * t);
            add_scaled(&mut x, &c, &shift);
        }
        if !form.moment(&x, &x, i).is_zero() {
            return Err(Error::Internal("even chain normalization did not converge".into()));
        }
        t += 1;
    }
    let g_top = top(&x);
    // c = 1 / (λ² g); pick λ so that c is a square-class representative.
    let (f, lambda) = rational::square_class(&g_top.recip());
    let x = scaled(&lambda, &x);
    let z: Vec<Vector> = (1..=k).map(|j| theta.apply_power(&x, k - j)).collect();
    Ok(ZBlock { m: k / 2, z, sign: Rational::from_integer(f) })
}

/// A pair of odd chains of length `k` inside `span(rest)`.
fn odd_block(form: &SupportForm<'_>, rest: &[Vector], k: usize) -> Result<UvBlock> {
    let theta = form.theta;
    let (mut x, mut y) = rest
        .iter()
        .filter(|x| height(theta, x) == k)
        .find_map(|x| {
            let tx = theta.apply_power(x, k - 1);
            rest.iter().find(|y| !form.pair(&tx, y).is_zero()).map(|y| (x.clone(), y.clone()))
        })
        .ok_or_else(|| Error::Internal(format!("no generators for odd chains of length {k}")))?;
    let two = Rational::from_integer(2.into());
    let h_top = form.moment(&x, &y, k - 1);

    // x isotropic: ω(θ^i x, x) = 0 for odd i.
    for i in (1..k.saturating_sub(1)).rev().filter(|i| i % 2 == 1) {
        let g = form.moment(&x, &x, i);
        if !g.is_zero() {
            let j = k - 1 - i;
            let sign = if j % 2 == 0 { Rational::one() } else { -Rational::one() };
            let c = -g / (&two * sign * &h_top);
            let shift = theta.apply_power(&y, j);
            add_scaled(&mut x, &c, &shift);
        }
        if !form.moment(&x, &x, i).is_zero() {
            return Err(Error::Internal("odd chain normalization (x) did not converge".into()));
        }
    }
    // ω(θ^i x, y) = 0 for i < k - 1.
    for i in (0..k - 1).rev() {
        let h = form.moment(&x, &y, i);
        if !h.is_zero() {
            let j = k - 1 - i;
            let sign = if j % 2 == 0 { Rational::one() } else { -Rational::one() };
            let c = -h * sign / &h_top;
            let shift = theta.apply_power(&y, j);
            add_scaled(&mut y, &c, &shift);
        }
        if !form.moment(&x, &y, i).is_zero() {
            return Err(Error::Internal("odd chain normalization (pairing) did not converge".into()));
        }
    }
    // y isotropic, using x.
    for i in (1..k.saturating_sub(1)).rev().filter(|i| i % 2 == 1) {
        let g = form.moment(&y, &y, i);
        if !g.is_zero() {
            let j = k - 1 - i;
            let c = -g / (&two * &h_top);
            let shift = theta.apply_power(&x, j);
            add_scaled(&mut y, &c, &shift);
        }
        if !form.moment(&y, &y, i).is_zero() {
            return Err(Error::Internal("odd chain normalization (y) did not converge".into()));
        }
    }
    let h_top = form.moment(&x, &y, k - 1);
    let alpha = -h_top.recip();
    let x = scaled(&alpha, &x);
    let u = (1..=k).map(|j| theta.apply_power(&x, k - j)).collect();
    let v = (1..=k).map(|j| theta.apply_power(&y, k - j)).collect();
    Ok(UvBlock { l: (k - 1) / 2, u, v })
}

/// Vectors of `span(rest)` that are `ω`-orthogonal to `block`.
fn orthogonal_complement(form: &SupportForm<'_>, rest: &[Vector], block: &[Vector]) -> Result<Vec<Vector>> {
    let gram = Matrix::from_rows(
        rest.len(),
        block.iter().map(|e| rest.iter().map(|w| form.pair(e, w)).collect()).collect(),
    )?;
    let ker = kernel(&gram);
    let dim = rest[0].len();
    let out: Vec<Vector> = ker
        .basis()
        .iter()
        .map(|c| {
            let mut v = zero_vector(dim);
            for (ci, w) in c.iter().zip(rest) {
                add_scaled(&mut v, ci, w);
            }
            v
        })
        .collect();
    if out.len() + block.len() != rest.len() {
        return Err(Error::Internal("chain block is degenerate for the support form".into()));
    }
    Ok(out)
}

/// `β_P`: the decomposable grade-`r` form built from the normal form.
pub fn beta_p(d: &CanonicalDecomposition, sel: &PSelector) -> Result<Multivector> {
    Ok(wedge_all(d.dim, &d.beta_p_factors(sel)?))
}

/// A selector `P` with `ξ ∈ S_P`, or `None` when no selector works.
///
/// `ξ ∈ S_P` for some `P` exactly when `ξ` has no component above level
/// `l_a + 1` in any `U/V` block and none above level `m_b` in any `Z`
/// block; the pair at level `l_a + 1` then fixes `(r_a, s_a)`.
pub fn sp_member(d: &CanonicalDecomposition, xi: &[Rational]) -> Result<Option<PSelector>> {
    let coords = d.coordinates(xi)?.ok_or(Error::NotInSubspace("xi must lie in the support S"))?;
    let mut pairs = Vec::with_capacity(d.p());
    for (b, (cu, cv)) in d.uv_blocks.iter().zip(&coords.uv) {
        if cu[b.l + 1..].iter().chain(&cv[b.l + 1..]).any(|c| !c.is_zero()) {
            return Ok(None);
        }
        let (r, s) = (cu[b.l].clone(), cv[b.l].clone());
        pairs.push(if r.is_zero() && s.is_zero() { (Rational::one(), Rational::zero()) } else { (r, s) });
    }
    for (b, cz) in d.z_blocks.iter().zip(&coords.z) {
        if cz[b.m..].iter().any(|c| !c.is_zero()) {
            return Ok(None);
        }
    }
    Ok(Some(PSelector(pairs)))
}

/// Matrix of `μ_Ω^k : Λ^{r-k}S → Λ^{r+k}S` in the monomial basis of `ΛS`
/// built on the canonical basis.
pub fn lefschetz_map(d: &CanonicalDecomposition, k: usize) -> Result<Matrix> {
    if k > d.rank {
        return Err(Error::GradeOutOfRange { grade: k, dim: d.rank });
    }
    let model = d.model_omega();
    let pk = model.power(k);
    Ok(operator_matrix(2 * d.rank, d.rank - k, d.rank + k, |x| x ^ &pk))
}

/// A block shape for building normal-form models: `U/V` half-lengths `l_a`
/// and `Z` half-lengths `m_b` with signs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockShape {
    pub ls: Vec<usize>,
    pub zs: Vec<(usize, Rational)>,
}

impl BlockShape {
    pub fn support_dim(&self) -> usize {
        self.ls.iter().map(|l| 2 * (2 * l + 1)).sum::<usize>() + self.zs.iter().map(|(m, _)| 2 * m).sum::<usize>()
    }

    /// `(θ, Ω, D)` on `Q^{dim S}` with the canonical basis equal to the
    /// standard basis, ordered as in [`CanonicalDecomposition::basis_vectors`].
    pub fn model(&self) -> (NilpotentOperator, Multivector, CanonicalDecomposition) {
        let n = self.support_dim();
        let mut images = vec![zero_vector(n); n];
        let mut next = 0;
        let mut chain = |len: usize, images: &mut Vec<Vector>| -> Vec<Vector> {
            let vs: Vec<Vector> = (next..next + len).map(|i| unit_vector(n, i)).collect();
            for i in 1..len {
                images[next + i] = unit_vector(n, next + i - 1);
            }
            next += len;
            vs
        };
        let mut uv_blocks = Vec::new();
        for &l in &self.ls {
            let u = chain(2 * l + 1, &mut images);
            let v = chain(2 * l + 1, &mut images);
            uv_blocks.push(UvBlock { l, u, v });
        }
        let mut z_blocks = Vec::new();
        for (m, c) in &self.zs {
            let z = chain(2 * m, &mut images);
            z_blocks.push(ZBlock { m: *m, z, sign: c.clone() });
        }
        let theta = NilpotentOperator::from_images(&images).expect("chains are nilpotent");
        let mut d = CanonicalDecomposition { dim: n, rank: n / 2, support: Subspace::full(n), uv_blocks, z_blocks };
        let omega = d.reconstruct_omega();
        d.rank = omega_rank(&omega).expect("model Omega is nonzero");
        (theta, omega, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use num_traits::Signed;

    fn e(dim: usize, idx: &[usize]) -> Multivector {
        Multivector::from_indices(dim, idx)
    }

    fn v(xs: &[i64]) -> Vector {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(omega_rank(&e(2, &[0, 1])).unwrap(), 1);
        assert_eq!(omega_rank(&(&e(4, &[0, 1]) + &e(4, &[2, 3]))).unwrap(), 2);
        assert!(matches!(omega_rank(&Multivector::zero(3)), Err(Error::Hypothesis(Hypothesis::OmegaZero))));
        assert!(matches!(omega_rank(&e(3, &[0])), Err(Error::Hypothesis(Hypothesis::OmegaNotGradeTwo))));
    }

    #[test]
    fn support_examples() {
        assert_eq!(support(&e(3, &[0, 1])).unwrap(), Subspace::span(3, [v(&[1, 0, 0]), v(&[0, 1, 0])]).unwrap());
        let s = support(&(&e(5, &[0, 1]) + &e(5, &[2, 3]))).unwrap();
        assert_eq!(s, Subspace::span(5, (0..4).map(|i| unit_vector(5, i))).unwrap());
        let s = support(&(&e(3, &[0, 1]) + &e(3, &[0, 2]))).unwrap();
        assert_eq!(s, Subspace::span(3, [v(&[1, 0, 0]), v(&[0, 1, 1])]).unwrap());
    }

    #[test]
    fn decomposition_theta_zero_single_pair() {
        let theta = NilpotentOperator::zero(2);
        let omega = e(2, &[0, 1]);
        let d = canonical_decomposition(&theta, &omega).unwrap();
        assert_eq!((d.p(), d.q()), (1, 0));
        assert_eq!(d.uv_blocks[0].l, 0);
        assert_eq!(d.reconstruct_omega(), omega);
    }

    #[test]
    fn decomposition_single_z_block() {
        // θ(e2) = e1, Ω = e2∧e1
        let theta = NilpotentOperator::from_images(&[v(&[0, 0]), v(&[1, 0])]).unwrap();
        let omega = e(2, &[1, 0]);
        let d = canonical_decomposition(&theta, &omega).unwrap();
        assert_eq!((d.p(), d.q()), (0, 1));
        let z = &d.z_blocks[0];
        assert_eq!(z.m, 1);
        assert_eq!(z.sign, int(1));
        assert_eq!(z.z, vec![v(&[1, 0]), v(&[0, 1])]);
    }

    #[test]
    fn decomposition_theta_zero_two_pairs() {
        let theta = NilpotentOperator::zero(4);
        let omega = &e(4, &[0, 1]) + &e(4, &[2, 3]);
        let d = canonical_decomposition(&theta, &omega).unwrap();
        assert_eq!((d.p(), d.q()), (2, 0));
        assert!(d.uv_blocks.iter().all(|b| b.l == 0));
        assert!(d.check(&theta, &omega).passed());
    }

    #[test]
    fn non_square_sign_is_kept_in_its_square_class() {
        // Ω = 2 z2∧z1 has no rational chain basis with sign ±1: rescaling the
        // chain by λ multiplies the sign by λ², and 2 is not a square.
        let theta = NilpotentOperator::from_images(&[v(&[0, 0]), v(&[1, 0])]).unwrap();
        let omega = e(2, &[1, 0]).scale(&int(2));
        let d = canonical_decomposition(&theta, &omega).unwrap();
        let c = d.check(&theta, &omega);
        assert!(c.passed());
        assert!(!c.unit_signs);
        assert_eq!(d.z_blocks[0].sign.abs(), int(2));
        // Ω = (9/4) z2∧z1 normalizes to sign 1.
        let omega = e(2, &[1, 0]).scale(&frac(9, 4));
        let d = canonical_decomposition(&theta, &omega).unwrap();
        assert_eq!(d.z_blocks[0].sign, int(1));
    }

    #[test]
    fn theta_omega_nonzero_is_reported() {
        let theta = NilpotentOperator::from_images(&[v(&[0, 0, 0]), v(&[1, 0, 0]), v(&[0, 0, 0])]).unwrap();
        let omega = e(3, &[1, 2]);
        match canonical_decomposition(&theta, &omega) {
            Err(Error::Hypothesis(Hypothesis::ThetaOmegaNonzero(w))) => assert_eq!(w, e(3, &[0, 2])),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn beta_p_examples() {
        let shape = BlockShape { ls: vec![0], zs: vec![] };
        let (_, _, d) = shape.model();
        assert_eq!(beta_p(&d, &PSelector::standard(1)).unwrap(), e(2, &[0]));

        let shape = BlockShape { ls: vec![], zs: vec![(1, int(1))] };
        let (_, _, d) = shape.model();
        assert_eq!(beta_p(&d, &PSelector(vec![])).unwrap(), e(2, &[0]));

        // l = 1: coordinates u1 u2 u3 v1 v2 v3
        let shape = BlockShape { ls: vec![1], zs: vec![] };
        let (theta, omega, d) = shape.model();
        let (r, s) = (int(2), int(-3));
        let b = beta_p(&d, &PSelector(vec![(r.clone(), s.clone())])).unwrap();
        let expected = &(&(&e(6, &[1]).scale(&r) + &e(6, &[4]).scale(&s)) ^ &e(6, &[0])) ^ &e(6, &[3]);
        assert_eq!(b, expected);
        assert!((&omega ^ &b).is_zero());
        assert!(theta.apply_derivation(&b).unwrap().is_zero());
        assert!(beta_p(&d, &PSelector(vec![])).is_err());
    }

    #[test]
    fn sp_member_examples() {
        let shape = BlockShape { ls: vec![], zs: vec![(1, int(1))] };
        let (_, _, d) = shape.model();
        assert!(sp_member(&d, &v(&[1, 0])).unwrap().is_some());
        assert!(sp_member(&d, &v(&[0, 1])).unwrap().is_none());

        let shape = BlockShape { ls: vec![0], zs: vec![] };
        let (_, _, d) = shape.model();
        let p = sp_member(&d, &v(&[3, -5])).unwrap().unwrap();
        assert_eq!(p, PSelector(vec![(int(3), int(-5))]));

        let shape = BlockShape { ls: vec![0], zs: vec![] };
        let (_, _, mut d) = shape.model();
        d.support = Subspace::span(3, [v(&[1, 0, 0]), v(&[0, 1, 0])]).unwrap();
        d.dim = 3;
        for b in &mut d.uv_blocks {
            b.u[0].push(int(0));
            b.v[0].push(int(0));
        }
        assert!(matches!(sp_member(&d, &v(&[0, 0, 1])), Err(Error::NotInSubspace(_))));
    }

    #[test]
    fn lefschetz_examples() {
        let (_, _, d) = BlockShape { ls: vec![0], zs: vec![] }.model();
        let m = lefschetz_map(&d, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 1));
        assert_eq!(*m.get(0, 0), int(1));

        let (_, _, d) = BlockShape { ls: vec![0, 0], zs: vec![] }.model();
        let m = lefschetz_map(&d, 2).unwrap();
        assert_eq!(*m.get(0, 0), int(2));
        let m = lefschetz_map(&d, 1).unwrap();
        assert_eq!((m.rows(), m.rank()), (4, 4));
        assert!(lefschetz_map(&d, 3).is_err());
    }

    #[test]
    fn model_shapes_satisfy_invariants() {
        let shapes = [
            BlockShape { ls: vec![1], zs: vec![(2, int(-1))] },
            BlockShape { ls: vec![0, 2], zs: vec![(1, int(1))] },
            BlockShape { ls: vec![], zs: vec![(3, int(1)), (1, int(-1))] },
        ];
        for s in shapes {
            let (theta, omega, d) = s.model();
            assert!(theta.apply_derivation(&omega).unwrap().is_zero());
            assert!(d.check(&theta, &omega).passed());
            let d2 = canonical_decomposition(&theta, &omega).unwrap();
            assert!(d2.check(&theta, &omega).passed());
            assert_eq!(d2.p(), d.p());
            assert_eq!(d2.q(), d.q());
        }
    }
}
