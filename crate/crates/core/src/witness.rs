//! Witness construction: given `(θ, ε, Ω)` with `θΩ = 0` and `Ω ∉ im θ`,
//! produce `(β, α, γ)` with
//!
//! * (A) `Ω∧β = 0`,
//! * (B) `β ∉ im μ_Ω`,
//! * (C) `θβ = 0`,
//! * (D) `ε∧β + Ω∧α = θγ`.
//!
//! The branch taken follows the case analysis on how the orbit `θ^k ε`
//! enters the support `S` of `Ω` and the subspaces `S_P`. Every closed-form
//! `γ` is determined up to one overall scalar, which is fixed by exact
//! comparison with `ε∧β + Ω∧α`.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Hypothesis, Result};
use crate::exterior::{operator_matrix, GradedBasis, Multivector, NilpotentOperator};
use crate::linalg::{kernel, solve, Matrix};
use crate::rational::{is_zero_vector, zero_vector, Rational, Vector};
use crate::structure::{
    beta_p, canonical_decomposition, combine, mu_matrix, sp_member, wedge_all, CanonicalDecomposition, PSelector,
};

/// Which branch of the construction produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "trivial-eps-zero")]
    TrivialEpsZero,
    #[serde(rename = "eps-in-S")]
    EpsInS,
    #[serde(rename = "easy-N")]
    EasyN,
    #[serde(rename = "even-M")]
    EvenM,
    #[serde(rename = "odd-M-theta-w")]
    OddMThetaW,
    #[serde(rename = "odd-M-z-top")]
    OddMZTop,
    #[serde(rename = "terminal-2-3")]
    Terminal23,
}

impl CaseTag {
    pub const ALL: [CaseTag; 7] = [
        CaseTag::TrivialEpsZero,
        CaseTag::EpsInS,
        CaseTag::EasyN,
        CaseTag::EvenM,
        CaseTag::OddMThetaW,
        CaseTag::OddMZTop,
        CaseTag::Terminal23,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::TrivialEpsZero => "trivial-eps-zero",
            CaseTag::EpsInS => "eps-in-S",
            CaseTag::EasyN => "easy-N",
            CaseTag::EvenM => "even-M",
            CaseTag::OddMThetaW => "odd-M-theta-w",
            CaseTag::OddMZTop => "odd-M-z-top",
            CaseTag::Terminal23 => "terminal-2-3",
        }
    }

    pub fn parse(s: &str) -> Option<CaseTag> {
        CaseTag::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The orbit data driving the odd/even case split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepData {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "P")]
    pub selector: PSelector,
    #[serde(with = "crate::rational::serde_vector")]
    pub xi: Vector,
    #[serde(with = "crate::rational::serde_vector")]
    pub xi_top: Vector,
    #[serde(with = "crate::rational::serde_vector")]
    pub xi_bottom: Vector,
}

/// Result of [`find_steps`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Steps {
    /// `θ^N ε` already lies in `S_P` at its first entry into `S`.
    Easy { n: usize, selector: PSelector },
    General(StepData),
}

/// Checks the standing hypotheses on `(θ, ε, Ω)`, reporting each failure
/// distinctly.
pub fn check_hypotheses(theta: &NilpotentOperator, eps: &[Rational], omega: &Multivector) -> Result<()> {
    let n = theta.dim();
    if omega.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: omega.dim() });
    }
    if eps.len() != n {
        return Err(Hypothesis::EpsilonLength { expected: n, got: eps.len() }.into());
    }
    if omega.is_zero() {
        return Err(Hypothesis::OmegaZero.into());
    }
    if !omega.is_homogeneous(2) {
        return Err(Hypothesis::OmegaNotGradeTwo.into());
    }
    let t_omega = theta.apply_derivation(omega)?;
    if !t_omega.is_zero() {
        return Err(Hypothesis::ThetaOmegaNonzero(t_omega).into());
    }
    if in_image_of_theta(theta, omega)? {
        return Err(Hypothesis::OmegaInImageTheta.into());
    }
    Ok(())
}

/// Whether a homogeneous `w` of grade `k` is `θ` of something.
pub fn in_image_of_theta(theta: &NilpotentOperator, w: &Multivector) -> Result<bool> {
    for k in w.grades() {
        let part = w.grade_project(k);
        let basis = GradedBasis::new(w.dim(), k);
        if solve(&theta.derivation_matrix(k), &part.graded_coords(&basis))?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `β ∈ im μ_Ω`, grade by grade.
pub fn in_image_of_mu(omega: &Multivector, beta: &Multivector) -> Result<bool> {
    let dim = beta.dim();
    for k in beta.grades() {
        if k < 2 {
            return Ok(false);
        }
        let part = beta.grade_project(k);
        let coords = part.graded_coords(&GradedBasis::new(dim, k));
        if solve(&mu_matrix(omega, k - 2), &coords)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Locates `N` (first entry of the orbit into `S`) and, outside the easy
/// case, the minimal `M > N` with `θ^M ε ∈ S_P` for some `P`.
pub fn find_steps(eps: &[Rational], theta: &NilpotentOperator, d: &CanonicalDecomposition) -> Result<Steps> {
    if is_zero_vector(eps) {
        return Err(Error::InvalidInput("find_steps needs a nonzero epsilon".into()));
    }
    if d.support.contains(eps)? {
        return Err(Error::InvalidInput("find_steps needs epsilon outside the support".into()));
    }
    let mut x = eps.to_vec();
    let mut n = 0;
    while !d.support.contains(&x)? {
        x = theta.apply(&x);
        n += 1;
    }
    if let Some(selector) = sp_member(d, &x)? {
        return Ok(Steps::Easy { n, selector });
    }
    let mut m = n;
    let selector = loop {
        x = theta.apply(&x);
        m += 1;
        if let Some(sel) = sp_member(d, &x)? {
            break sel;
        }
    };
    if is_zero_vector(&x) {
        return Err(Error::Internal("xi = theta^M eps vanished".into()));
    }
    let (xi_top, xi_bottom) = split_top_bottom(d, &selector, &x)?;
    if is_zero_vector(&xi_top) {
        return Err(Error::Internal("top component of xi vanished".into()));
    }
    Ok(Steps::General(StepData { n, m, selector, xi: x, xi_top, xi_bottom }))
}

/// Splits `ξ ∈ S_P` into its component along the top vectors
/// `r_a u^a_{l_a+1} + s_a v^a_{l_a+1}`, `z^b_{m_b}` and the rest.
pub fn split_top_bottom(d: &CanonicalDecomposition, sel: &PSelector, xi: &[Rational]) -> Result<(Vector, Vector)> {
    if !d.sp_subspace(sel)?.contains(xi)? {
        return Err(Error::NotInSubspace("xi must lie in S_P"));
    }
    let coords = d.coordinates(xi)?.ok_or(Error::NotInSubspace("xi must lie in S_P"))?;
    let mut top = zero_vector(d.dim);
    for (b, (cu, cv)) in d.uv_blocks.iter().zip(&coords.uv) {
        let w = combine(&cu[b.l], &b.u[b.l], &cv[b.l], &b.v[b.l]);
        add_into(&mut top, &Rational::one(), &w);
    }
    for (b, cz) in d.z_blocks.iter().zip(&coords.z) {
        add_into(&mut top, &cz[b.m - 1], &b.z[b.m - 1]);
    }
    let bottom = xi.iter().zip(&top).map(|(a, b)| a - b).collect();
    Ok((top, bottom))
}

fn add_into(x: &mut Vector, c: &Rational, y: &[Rational]) {
    if c.is_zero() {
        return;
    }
    for (a, b) in x.iter_mut().zip(y) {
        *a += c * b;
    }
}

/// Per-condition results, with the offending values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checks {
    #[serde(rename = "A")]
    pub a: bool,
    #[serde(rename = "B")]
    pub b: bool,
    #[serde(rename = "C")]
    pub c: bool,
    #[serde(rename = "D")]
    pub d: bool,
}

impl Checks {
    pub fn all(&self) -> bool {
        self.a && self.b && self.c && self.d
    }
}

/// Outcome of [`verify_certificate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub checks: Checks,
    /// `Ω∧β`
    pub omega_beta: Multivector,
    /// `θβ`
    pub theta_beta: Multivector,
    /// `ε∧β + Ω∧α − θγ`
    pub residual_d: Multivector,
}

/// `(β, α, γ)` with its provenance and verification results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCertificate {
    pub case_tag: CaseTag,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[serde(rename = "P")]
    pub selector: Option<PSelector>,
    pub beta: Multivector,
    pub alpha: Multivector,
    pub gamma: Multivector,
    pub checks: Checks,
    /// False when the closed form failed and `γ` came from the generic solver.
    pub formula_verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_hash: Option<String>,
}

pub fn verify_certificate(
    cert: &WitnessCertificate,
    eps: &[Rational],
    omega: &Multivector,
    theta: &NilpotentOperator,
) -> Result<VerificationReport> {
    verify_triple(&cert.beta, &cert.alpha, &cert.gamma, eps, omega, theta)
}

fn verify_triple(
    beta: &Multivector,
    alpha: &Multivector,
    gamma: &Multivector,
    eps: &[Rational],
    omega: &Multivector,
    theta: &NilpotentOperator,
) -> Result<VerificationReport> {
    let e = Multivector::from_vector(eps);
    let omega_beta = omega.wedge(beta)?;
    let theta_beta = theta.apply_derivation(beta)?;
    let residual_d = &(&e.wedge(beta)? + &omega.wedge(alpha)?) - &theta.apply_derivation(gamma)?;
    let checks = Checks {
        a: omega_beta.is_zero(),
        b: !in_image_of_mu(omega, beta)?,
        c: theta_beta.is_zero(),
        d: residual_d.is_zero(),
    };
    Ok(VerificationReport { checks, omega_beta, theta_beta, residual_d })
}

/// Solves `ε∧β + Ω∧α = θγ` for `(α, γ)` grade by grade; free coordinates
/// are set to zero.
pub fn solve_condition_d(
    beta: &Multivector,
    eps: &[Rational],
    omega: &Multivector,
    theta: &NilpotentOperator,
) -> Result<Option<(Multivector, Multivector)>> {
    let dim = theta.dim();
    let eb = Multivector::from_vector(eps).wedge(beta)?;
    let mut alpha = Multivector::zero(dim);
    let mut gamma = Multivector::zero(dim);
    for k in eb.grades() {
        let rows = GradedBasis::new(dim, k);
        let target: Vector = eb.grade_project(k).graded_coords(&rows).iter().map(|q| -q).collect();
        let a_basis = (k >= 2).then(|| GradedBasis::new(dim, k - 2));
        let mut cols: Vec<Vector> = Vec::new();
        if a_basis.is_some() {
            cols.extend(mu_matrix(omega, k - 2).transpose().to_rows());
        }
        let na = cols.len();
        cols.extend(theta.derivation_matrix(k).transpose().to_rows().into_iter().map(|c| c.iter().map(|q| -q).collect()));
        let m = Matrix::from_columns(rows.len(), &cols)?;
        let Some(x) = solve(&m, &target)? else {
            return Ok(None);
        };
        if let Some(ab) = &a_basis {
            alpha = &alpha + &Multivector::from_graded_coords(dim, ab, &x[..na]);
        }
        gamma = &gamma + &Multivector::from_graded_coords(dim, &rows, &x[na..]);
    }
    Ok(Some((alpha, gamma)))
}

/// Finds `λ ∈ Λ^{p-1}S'`, `λ ≠ 0`, with `Σ²λ = 0` and `Σ∧φ∧λ = 0`, and
/// `ν = −2 φ∧λ`. `S' = Q^{2p}` and `Σ` must be nondegenerate of rank `p`.
pub fn find_lambda_nu(sigma: &Multivector, phi: &[Rational], p: usize) -> Result<(Multivector, Multivector)> {
    let n = 2 * p;
    if p == 0 || sigma.dim() != n || phi.len() != n {
        return Err(Error::InvalidInput(format!("find_lambda_nu needs p >= 1 and everything in dimension 2p = {n}")));
    }
    if !sigma.is_homogeneous(2) || sigma.power(p).is_zero() {
        return Err(Error::InvalidInput("Sigma must be a nondegenerate 2-vector".into()));
    }
    let phi_m = Multivector::from_vector(phi);
    let eta = if p == 1 {
        sigma.clone()
    } else if is_zero_vector(phi) {
        let basis = GradedBasis::new(n, p + 1);
        let ker = kernel(&operator_matrix(n, p + 1, p + 3, |x| x ^ sigma));
        let first = ker.basis().first().ok_or_else(|| Error::Internal("mu_Sigma has no kernel".into()))?;
        Multivector::from_graded_coords(n, &basis, first)
    } else {
        let basis = GradedBasis::new(n, p);
        let ps = &phi_m ^ sigma;
        let ker = kernel(&operator_matrix(n, p, p + 3, |x| &ps ^ x));
        ker.basis()
            .iter()
            .map(|c| &phi_m ^ &Multivector::from_graded_coords(n, &basis, c))
            .find(|eta| !eta.is_zero())
            .ok_or_else(|| Error::Internal("no zeta outside phi Λ^{p-1}".into()))?
    };
    let src = GradedBasis::new(n, p - 1);
    let dst = GradedBasis::new(n, p + 1);
    let lambda = solve(&operator_matrix(n, p - 1, p + 1, |x| x ^ sigma), &eta.graded_coords(&dst))?
        .ok_or_else(|| Error::Internal("eta is not Sigma times anything".into()))?;
    let lambda = Multivector::from_graded_coords(n, &src, &lambda);
    let nu = (&phi_m ^ &lambda).scale(&Rational::from_integer((-2).into()));
    Ok((lambda, nu))
}

/// `(dim {ζ ∈ Λ^p : Σζ ∈ φΛ^{p+1}}, dim φΛ^{p-1})`; the difference is the
/// number of independent choices available to [`find_lambda_nu`].
pub fn lambda_nu_dimensions(sigma: &Multivector, phi: &[Rational], p: usize) -> (usize, usize) {
    let n = 2 * p;
    let phi_m = Multivector::from_vector(phi);
    let ps = &phi_m ^ sigma;
    let solutions = kernel(&operator_matrix(n, p, p + 3, |x| &ps ^ x)).dim();
    let image = if p == 0 { 0 } else { operator_matrix(n, p - 1, p, |x| &phi_m ^ x).rank() };
    (solutions, image)
}

/// Everything the closed forms need.
#[derive(Debug, Clone)]
pub struct WitnessContext<'a> {
    pub eps: &'a [Rational],
    pub omega: &'a Multivector,
    pub theta: &'a NilpotentOperator,
    pub decomposition: &'a CanonicalDecomposition,
    pub steps: Option<&'a StepData>,
    pub easy_n: Option<usize>,
    pub selector: PSelector,
}

/// `(β, α, γ)` from a closed form, with the scalar on `γ` resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedForm {
    pub beta: Multivector,
    pub alpha: Multivector,
    pub gamma: Multivector,
    pub formula_verified: bool,
}

/// Positions of the `β_P` factors: for `U/V` block `a` the top factor sits
/// at `uv[a]`, `u_i` at `uv[a] + i`, `v_i` at `uv[a] + l_a + i`; `z^b_j` sits
/// at `z[b] + j - 1`.
struct Layout {
    uv: Vec<usize>,
    z: Vec<usize>,
}

fn layout(d: &CanonicalDecomposition) -> Layout {
    let mut next = 0;
    let uv = d
        .uv_blocks
        .iter()
        .map(|b| {
            let at = next;
            next += 2 * b.l + 1;
            at
        })
        .collect();
    let z = d
        .z_blocks
        .iter()
        .map(|b| {
            let at = next;
            next += b.m;
            at
        })
        .collect();
    Layout { uv, z }
}

fn orbit(theta: &NilpotentOperator, eps: &[Rational], k: usize) -> Multivector {
    Multivector::from_vector(&theta.apply_power(eps, k))
}

fn sign(i: usize) -> Rational {
    if i % 2 == 0 {
        Rational::one()
    } else {
        -Rational::one()
    }
}

/// A top vector with nonzero coefficient in `ξ_T`, as a factor position
/// together with the position of the factor `θw` replaces (if `θw ≠ 0`).
#[derive(Debug, Clone, Copy)]
struct Top {
    at: usize,
    below: Option<usize>,
}

fn top_vectors(d: &CanonicalDecomposition, sel: &PSelector, xi_top: &[Rational]) -> Result<Vec<Top>> {
    let lay = layout(d);
    let coords = d.coordinates(xi_top)?.ok_or(Error::NotInSubspace("xi_top must lie in S"))?;
    let mut out = Vec::new();
    for (a, (b, (cu, cv))) in d.uv_blocks.iter().zip(&coords.uv).enumerate() {
        if cu[b.l].is_zero() && cv[b.l].is_zero() {
            continue;
        }
        let below = (b.l > 0).then(|| {
            if !sel.0[a].0.is_zero() {
                lay.uv[a] + b.l
            } else {
                lay.uv[a] + 2 * b.l
            }
        });
        out.push(Top { at: lay.uv[a], below });
    }
    for (i, (b, cz)) in d.z_blocks.iter().zip(&coords.z).enumerate() {
        if cz[b.m - 1].is_zero() {
            continue;
        }
        let below = (b.m > 1).then(|| lay.z[i] + b.m - 2);
        out.push(Top { at: lay.z[i] + b.m - 1, below });
    }
    Ok(out)
}

fn product_without(dim: usize, factors: &[Vector], skip: &[usize]) -> Multivector {
    let kept: Vec<Vector> = factors
        .iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, f)| f.clone())
        .collect();
    wedge_all(dim, &kept)
}

/// The scalar `κ` with `κ·g = t`, if one exists.
fn proportion(t: &Multivector, g: &Multivector) -> Option<Rational> {
    let Some((mask, gc)) = g.terms().next() else {
        return t.is_zero().then(Rational::zero);
    };
    let k = t.coeff(mask) / gc;
    (g.scale(&k) == *t).then_some(k)
}

/// The explicit `(β, α, γ)` of the branch `tag`.
pub fn closed_form_solution(tag: CaseTag, ctx: &WitnessContext<'_>) -> Result<ClosedForm> {
    let d = ctx.decomposition;
    let dim = d.dim;
    let theta = ctx.theta;
    let eps = ctx.eps;
    let e = Multivector::from_vector(eps);
    let mismatch = |what: &str| Error::CaseMismatch(format!("{tag}: {what}"));
    let steps = || ctx.steps.ok_or_else(|| mismatch("step data missing"));

    let (beta, alpha, gamma0) = match tag {
        CaseTag::TrivialEpsZero => {
            if !is_zero_vector(eps) {
                return Err(mismatch("epsilon is nonzero"));
            }
            let z = Multivector::zero(dim);
            (beta_p(d, &ctx.selector)?, z.clone(), z)
        }
        CaseTag::EpsInS => {
            if is_zero_vector(eps) || !d.support.contains(eps)? {
                return Err(mismatch("epsilon is not a nonzero vector of S"));
            }
            let beta = beta_p(d, &ctx.selector)?;
            let eb = &e ^ &beta;
            let r = d.rank;
            let rows = GradedBasis::new(dim, r + 1);
            let target: Vector = eb.graded_coords(&rows).iter().map(|q| -q).collect();
            let alpha = solve(&mu_matrix(ctx.omega, r - 1), &target)?
                .ok_or_else(|| Error::Internal("eps beta_P is not in the image of mu_Omega".into()))?;
            let alpha = Multivector::from_graded_coords(dim, &GradedBasis::new(dim, r - 1), &alpha);
            (beta, alpha, Multivector::zero(dim))
        }
        CaseTag::EasyN => {
            let n = ctx.easy_n.ok_or_else(|| mismatch("N missing"))?;
            let mut beta = Multivector::one(dim);
            for k in 0..n {
                beta = &beta ^ &orbit(theta, eps, k);
            }
            let beta = &beta ^ &beta_p(d, &ctx.selector)?;
            let z = Multivector::zero(dim);
            (beta, z.clone(), z)
        }
        CaseTag::EvenM => {
            let s = steps()?;
            if s.m % 2 != 0 {
                return Err(mismatch("M is odd"));
            }
            let factors = d.beta_p_factors(&s.selector)?;
            let w = *top_vectors(d, &s.selector, &s.xi_top)?.first().ok_or_else(|| mismatch("no top vector"))?;
            let sigma = product_without(dim, &factors, &[w.at]);
            let mut t = Multivector::zero(dim);
            for i in 0..s.m / 2 {
                t = &t + &(&orbit(theta, eps, i) ^ &orbit(theta, eps, s.m - 1 - i)).scale(&sign(i));
            }
            (wedge_all(dim, &factors), Multivector::zero(dim), &t ^ &sigma)
        }
        CaseTag::OddMThetaW => {
            let s = steps()?;
            if s.m % 2 != 1 {
                return Err(mismatch("M is even"));
            }
            let factors = d.beta_p_factors(&s.selector)?;
            let w = top_vectors(d, &s.selector, &s.xi_top)?
                .into_iter()
                .find(|w| w.below.is_some())
                .ok_or_else(|| mismatch("no top vector w with theta w nonzero"))?;
            let sigma = product_without(dim, &factors, &[w.at, w.below.unwrap_or(w.at)]);
            let k = (s.m - 1) / 2;
            let rho = &orbit(theta, eps, s.m) ^ &orbit(theta, eps, k + 1);
            let mut delta = Multivector::zero(dim);
            for i in 0..=k {
                let term = &orbit(theta, eps, i) ^ &theta.derivation_power(&rho, k - i);
                delta = &delta + &term.scale(&sign(i));
            }
            (wedge_all(dim, &factors), Multivector::zero(dim), &delta ^ &sigma)
        }
        CaseTag::OddMZTop => {
            let s = steps()?;
            if s.m % 2 != 1 {
                return Err(mismatch("M is even"));
            }
            let tops = top_vectors(d, &s.selector, &s.xi_top)?;
            if tops.iter().any(|w| w.below.is_some()) {
                return Err(mismatch("a top vector w has theta w nonzero"));
            }
            let lay = layout(d);
            let coords = d.coordinates(&s.xi_top)?.ok_or(Error::NotInSubspace("xi_top must lie in S"))?;
            if coords.uv.iter().any(|(cu, cv)| !is_zero_vector(cu) || !is_zero_vector(cv)) {
                return Err(Error::Internal("xi_top has a U/V component".into()));
            }
            let star = (0..d.q())
                .find(|&b| d.z_blocks[b].m == 1 && !coords.z[b][0].is_zero())
                .ok_or_else(|| Error::Internal("xi_top has no z_1 component".into()))?;
            let mut factors = d.beta_p_factors(&s.selector)?;
            let sigma = product_without(dim, &factors, &[lay.z[star]]);
            if let Some(b) = (0..d.q()).find(|&b| b != star) {
                let zb = &d.z_blocks[b];
                factors[lay.z[b] + zb.m - 1] = zb.z[zb.m].clone();
            } else if let Some(a) = (0..d.p()).find(|&a| d.uv_blocks[a].l > 0) {
                let ub = &d.uv_blocks[a];
                let (r, sv) = &s.selector.0[a];
                factors[lay.uv[a]] = combine(r, &ub.u[ub.l + 1], sv, &ub.v[ub.l + 1]);
            } else {
                return Err(mismatch("q = 1 and every l_a = 0"));
            }
            let tau = product_without(dim, &factors, &[lay.z[star]]);
            let k = (s.m - 1) / 2;
            let mut delta = Multivector::zero(dim);
            for i in 0..k {
                let term = &orbit(theta, eps, i) ^ &orbit(theta, eps, s.m - 1 - i);
                delta = &delta + &term.scale(&(sign(i) * Rational::from_integer((k - i).into())));
            }
            let mut rho = Multivector::zero(dim);
            for i in 0..=k {
                rho = &rho + &(&orbit(theta, eps, i) ^ &orbit(theta, eps, s.m - i)).scale(&sign(i));
            }
            let gamma0 = &(&delta ^ &sigma) + &(&rho ^ &tau);
            (beta_p(d, &s.selector)?, Multivector::zero(dim), gamma0)
        }
        CaseTag::Terminal23 => {
            let s = steps()?;
            terminal_case(ctx, s)?
        }
    };

    let target = &(&e ^ &beta) + &ctx.omega.wedge(&alpha)?;
    let g = theta.apply_derivation(&gamma0)?;
    if let Some(k) = proportion(&target, &g) {
        return Ok(ClosedForm { beta, alpha, gamma: gamma0.scale(&k), formula_verified: true });
    }
    let (alpha, gamma) = solve_condition_d(&beta, eps, ctx.omega, theta)?
        .ok_or_else(|| Error::Internal(format!("{tag}: condition (D) has no solution for the chosen beta")))?;
    Ok(ClosedForm { beta, alpha, gamma, formula_verified: false })
}

fn terminal_case(ctx: &WitnessContext<'_>, s: &StepData) -> Result<(Multivector, Multivector, Multivector)> {
    let d = ctx.decomposition;
    let dim = d.dim;
    let theta = ctx.theta;
    let eps = ctx.eps;
    let mismatch = |what: &str| Error::CaseMismatch(format!("terminal-2-3: {what}"));
    if d.q() != 1 || d.z_blocks[0].m != 1 || d.uv_blocks.iter().any(|b| b.l != 0) {
        return Err(mismatch("needs q = 1, m_1 = 1 and every l_a = 0"));
    }
    let p = d.p();
    if p == 0 {
        return Err(Error::Internal("p = 0 would put Omega in the image of theta".into()));
    }
    if s.m % 2 != 1 {
        return Err(mismatch("M is even"));
    }
    let zb = &d.z_blocks[0];
    let c1 = zb.sign.clone();
    let (z1, z2) = (&zb.z[0], &zb.z[1]);
    let xi = d.coordinates(&s.xi)?.ok_or(Error::NotInSubspace("xi must lie in S"))?;
    let coef = xi.z[0][0].clone();
    if coef.is_zero() || xi.uv.iter().any(|(cu, cv)| !is_zero_vector(cu) || !is_zero_vector(cv)) || !xi.z[0][1].is_zero() {
        return Err(Error::Internal("theta^M eps is not a multiple of z_1".into()));
    }
    let prev: Vector = theta.apply_power(eps, s.m - 1).iter().map(|x| x / &coef).collect();
    let pc = d.coordinates(&prev)?.ok_or_else(|| Error::Internal("theta^(M-1) eps is not in S".into()))?;
    if !pc.z[0][1].is_one() {
        return Err(Error::Internal("theta^(M-1) eps has z_2 coefficient different from 1".into()));
    }
    // S' with basis û^a = u^a / c_1, v^a, so that Ω = c_1 (z_2 z_1 + Σ).
    let n = 2 * p;
    let mut phi = zero_vector(n);
    let mut images = Vec::with_capacity(n);
    let inv = c1.recip();
    for (a, (b, (cu, cv))) in d.uv_blocks.iter().zip(&pc.uv).enumerate() {
        phi[2 * a] = &cu[0] * &c1;
        phi[2 * a + 1] = cv[0].clone();
        images.push(b.u[0].iter().map(|x| x * &inv).collect::<Vector>());
        images.push(b.v[0].clone());
    }
    let mut sigma = Multivector::zero(n);
    for a in 0..p {
        sigma = &sigma + &Multivector::from_indices(n, &[2 * a, 2 * a + 1]);
    }
    let (lambda, nu) = find_lambda_nu(&sigma, &phi, p)?;
    let lambda = lambda.pushforward(dim, &images)?;
    let nu = nu.pushforward(dim, &images)?;
    let sigma = sigma.pushforward(dim, &images)?;
    let z1m = Multivector::from_vector(z1);
    let z21 = &Multivector::from_vector(z2) ^ &z1m;
    let beta = &(&(&z21 - &sigma) ^ &lambda) + &(&z1m ^ &nu);
    let alpha = (&Multivector::from_vector(eps) ^ &lambda).scale(&inv);
    let k = (s.m - 1) / 2;
    let rho = &orbit(theta, eps, s.m) ^ &orbit(theta, eps, k);
    let mut delta = Multivector::zero(dim);
    for i in 0..k {
        let term = &theta.derivation_power(&rho, k - 1 - i) ^ &orbit(theta, eps, i);
        delta = &delta + &term.scale(&sign(i + 1));
    }
    Ok((beta, alpha, &delta ^ &lambda))
}

/// Determines the branch for `(θ, ε, Ω)` given the normal form.
pub fn classify(
    eps: &[Rational],
    theta: &NilpotentOperator,
    d: &CanonicalDecomposition,
) -> Result<(CaseTag, Option<Steps>)> {
    if is_zero_vector(eps) {
        return Ok((CaseTag::TrivialEpsZero, None));
    }
    if d.support.contains(eps)? {
        return Ok((CaseTag::EpsInS, None));
    }
    let steps = find_steps(eps, theta, d)?;
    let tag = match &steps {
        Steps::Easy { .. } => CaseTag::EasyN,
        Steps::General(s) if s.m % 2 == 0 => CaseTag::EvenM,
        Steps::General(s) => {
            let tops = top_vectors(d, &s.selector, &s.xi_top)?;
            if tops.iter().any(|w| w.below.is_some()) {
                CaseTag::OddMThetaW
            } else if d.q() > 1 || d.uv_blocks.iter().any(|b| b.l > 0) {
                CaseTag::OddMZTop
            } else {
                CaseTag::Terminal23
            }
        }
    };
    Ok((tag, Some(steps)))
}

/// Builds and verifies a witness for `(θ, ε, Ω)`.
pub fn construct_witness(eps: &[Rational], omega: &Multivector, theta: &NilpotentOperator) -> Result<WitnessCertificate> {
    construct_witness_with(eps, omega, theta, None)
}

/// As [`construct_witness`], with the selector used in the branches where
/// any `P` works (`ε = 0`, `ε ∈ S`).
pub fn construct_witness_with(
    eps: &[Rational],
    omega: &Multivector,
    theta: &NilpotentOperator,
    selector: Option<PSelector>,
) -> Result<WitnessCertificate> {
    check_hypotheses(theta, eps, omega)?;
    let d = canonical_decomposition(theta, omega)?;
    let (tag, steps) = classify(eps, theta, &d)?;
    let (n, m, general, sel) = match &steps {
        None => (None, None, None, selector.unwrap_or_else(|| PSelector::standard(d.p()))),
        Some(Steps::Easy { n, selector }) => (Some(*n), None, None, selector.clone()),
        Some(Steps::General(s)) => (Some(s.n), Some(s.m), Some(s), s.selector.clone()),
    };
    let ctx = WitnessContext {
        eps,
        omega,
        theta,
        decomposition: &d,
        steps: general,
        easy_n: n,
        selector: sel.clone(),
    };
    let cf = closed_form_solution(tag, &ctx)?;
    let report = verify_triple(&cf.beta, &cf.alpha, &cf.gamma, eps, omega, theta)?;
    if !report.checks.all() {
        return Err(Error::Internal(format!("{tag}: certificate fails its checks: {:?}", report.checks)));
    }
    Ok(WitnessCertificate {
        case_tag: tag,
        n,
        m,
        selector: Some(sel),
        beta: cf.beta,
        alpha: cf.alpha,
        gamma: cf.gamma,
        checks: report.checks,
        formula_verified: cf.formula_verified,
        instance_hash: None,
    })
}

/// Whether the defining predicate of the certificate's branch holds for
/// the instance, rechecked from `N`, `M` and `P` directly.
pub fn dispatch_holds(cert: &WitnessCertificate, eps: &[Rational], theta: &NilpotentOperator, d: &CanonicalDecomposition) -> Result<bool> {
    let in_s = |x: &[Rational]| d.support.contains(x);
    let any_sp = |x: &[Rational]| -> Result<bool> { Ok(sp_member(d, x)?.is_some()) };
    let zero = is_zero_vector(eps);
    Ok(match cert.case_tag {
        CaseTag::TrivialEpsZero => zero,
        CaseTag::EpsInS => !zero && in_s(eps)?,
        CaseTag::EasyN => {
            let Some(n) = cert.n else { return Ok(false) };
            n >= 1
                && !in_s(&theta.apply_power(eps, n - 1))?
                && in_s(&theta.apply_power(eps, n))?
                && any_sp(&theta.apply_power(eps, n))?
        }
        tag => {
            let (Some(n), Some(m), Some(sel)) = (cert.n, cert.m, &cert.selector) else { return Ok(false) };
            if n < 1 || m <= n || in_s(&theta.apply_power(eps, n - 1))? || !in_s(&theta.apply_power(eps, n))? {
                return Ok(false);
            }
            for k in n..m {
                if any_sp(&theta.apply_power(eps, k))? {
                    return Ok(false);
                }
            }
            let xi = theta.apply_power(eps, m);
            if is_zero_vector(&xi) || !d.sp_subspace(sel)?.contains(&xi)? {
                return Ok(false);
            }
            let (top, _) = split_top_bottom(d, sel, &xi)?;
            let theta_w = top_vectors(d, sel, &top)?.iter().any(|w| w.below.is_some());
            let terminal_shape = d.q() == 1 && d.z_blocks[0].m == 1 && d.uv_blocks.iter().all(|b| b.l == 0);
            match tag {
                CaseTag::EvenM => m % 2 == 0,
                CaseTag::OddMThetaW => m % 2 == 1 && theta_w,
                CaseTag::OddMZTop => m % 2 == 1 && !theta_w && !terminal_shape,
                CaseTag::Terminal23 => m % 2 == 1 && !theta_w && terminal_shape && d.p() > 0,
                _ => unreachable!(),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, unit_vector};

    fn v(xs: &[i64]) -> Vector {
        xs.iter().map(|&x| int(x)).collect()
    }

    fn e(dim: usize, idx: &[usize]) -> Multivector {
        Multivector::from_indices(dim, idx)
    }

    /// E1: basis (z1, z2, u, v, a1); a1 ↦ z2 ↦ z1.
    fn e1() -> (NilpotentOperator, Multivector, Vector) {
        let mut im = vec![zero_vector(5); 5];
        im[1] = unit_vector(5, 0);
        im[4] = unit_vector(5, 1);
        let theta = NilpotentOperator::from_images(&im).unwrap();
        let omega = &e(5, &[1, 0]) + &e(5, &[2, 3]);
        (theta, omega, unit_vector(5, 4))
    }

    /// E2: basis (u, v, z1, z2, a1, a2); a2 ↦ a1 ↦ z2 + u, z2 ↦ z1.
    fn e2() -> (NilpotentOperator, Multivector, Vector) {
        let mut im = vec![zero_vector(6); 6];
        im[3] = unit_vector(6, 2);
        im[4] = v(&[1, 0, 0, 1, 0, 0]);
        im[5] = unit_vector(6, 4);
        let theta = NilpotentOperator::from_images(&im).unwrap();
        let omega = &e(6, &[3, 2]) + &e(6, &[0, 1]);
        (theta, omega, unit_vector(6, 5))
    }

    #[test]
    fn steps_easy_when_orbit_dies() {
        let theta = NilpotentOperator::zero(3);
        let omega = e(3, &[0, 1]);
        let d = canonical_decomposition(&theta, &omega).unwrap();
        match find_steps(&unit_vector(3, 2), &theta, &d).unwrap() {
            Steps::Easy { n, .. } => assert_eq!(n, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn steps_e1_e2() {
        let (theta, omega, eps) = e1();
        assert!(!in_image_of_theta(&theta, &omega).unwrap());
        let d = canonical_decomposition(&theta, &omega).unwrap();
        let Steps::General(s) = find_steps(&eps, &theta, &d).unwrap() else { panic!() };
        assert_eq!((s.n, s.m), (1, 2));
        assert_eq!(s.xi, unit_vector(5, 0));

        let (theta, omega, eps) = e2();
        let d = canonical_decomposition(&theta, &omega).unwrap();
        let Steps::General(s) = find_steps(&eps, &theta, &d).unwrap() else { panic!() };
        assert_eq!((s.n, s.m), (2, 3));
        assert_eq!(s.xi, unit_vector(6, 2));
        assert_eq!(s.xi_top, unit_vector(6, 2));
        assert!(is_zero_vector(&s.xi_bottom));
    }

    #[test]
    fn split_examples() {
        let (theta, omega, _) = e2();
        let d = canonical_decomposition(&theta, &omega).unwrap();
        let sel = PSelector::standard(d.p());
        let (t, b) = split_top_bottom(&d, &sel, &zero_vector(6)).unwrap();
        assert!(is_zero_vector(&t) && is_zero_vector(&b));
        assert!(split_top_bottom(&d, &sel, &unit_vector(6, 3)).is_err());
    }

    #[test]
    fn trivial_and_eps_in_s() {
        let theta = NilpotentOperator::zero(2);
        let omega = e(2, &[0, 1]);
        let c = construct_witness(&zero_vector(2), &omega, &theta).unwrap();
        assert_eq!(c.case_tag, CaseTag::TrivialEpsZero);
        assert!(c.alpha.is_zero() && c.gamma.is_zero());

        let sel = PSelector(vec![(int(0), int(1))]);
        let c = construct_witness_with(&v(&[1, 0]), &omega, &theta, Some(sel)).unwrap();
        assert_eq!(c.case_tag, CaseTag::EpsInS);
        assert_eq!(c.beta, e(2, &[1]));
        assert_eq!(c.alpha, Multivector::scalar(2, int(-1)));
        assert!(c.gamma.is_zero());
    }

    #[test]
    fn e1_is_even_case() {
        let (theta, omega, eps) = e1();
        let c = construct_witness(&eps, &omega, &theta).unwrap();
        assert_eq!(c.case_tag, CaseTag::EvenM);
        assert_eq!(c.m, Some(2));
        assert_eq!(c.beta, e(5, &[2, 0]));
        assert!(c.formula_verified && c.checks.all());

        let mut bad = c.clone();
        bad.gamma = Multivector::zero(5);
        let r = verify_certificate(&bad, &eps, &omega, &theta).unwrap();
        assert!(!r.checks.d);
        assert_eq!(r.residual_d, &Multivector::from_vector(&eps) ^ &c.beta);
    }

    #[test]
    fn e2_is_terminal_case() {
        let (theta, omega, eps) = e2();
        let c = construct_witness(&eps, &omega, &theta).unwrap();
        assert_eq!(c.case_tag, CaseTag::Terminal23);
        // λ = 1, φ = u, ν = −2u
        let expected = &(&e(6, &[3, 2]) - &e(6, &[0, 1])) + &(&e(6, &[2]) ^ &e(6, &[0]).scale(&int(-2)));
        assert_eq!(c.beta, expected);
        assert!(c.formula_verified && c.checks.all());
    }

    #[test]
    fn zero_beta_fails_b_only() {
        let (theta, omega, eps) = e1();
        let z = Multivector::zero(5);
        let r = verify_triple(&z, &z, &z, &eps, &omega, &theta).unwrap();
        assert!(r.checks.a && !r.checks.b && r.checks.c && r.checks.d);
    }

    #[test]
    fn condition_d_solver_examples() {
        let theta = NilpotentOperator::zero(2);
        let omega = e(2, &[0, 1]);
        let (a, g) = solve_condition_d(&e(2, &[0]), &v(&[1, 0]), &omega, &theta).unwrap().unwrap();
        assert!(a.is_zero() && g.is_zero());
        let (a, g) = solve_condition_d(&e(2, &[1]), &v(&[1, 0]), &omega, &theta).unwrap().unwrap();
        assert_eq!(a, Multivector::scalar(2, int(-1)));
        assert!(g.is_zero());
        let theta = NilpotentOperator::zero(3);
        let r = solve_condition_d(&Multivector::one(3), &v(&[0, 0, 1]), &e(3, &[0, 1]), &theta).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn lambda_nu_examples() {
        let sigma = e(2, &[0, 1]);
        let (l, nu) = find_lambda_nu(&sigma, &v(&[1, 0]), 1).unwrap();
        assert_eq!(l, Multivector::one(2));
        assert_eq!(nu, e(2, &[0]).scale(&int(-2)));

        let sigma = &e(4, &[0, 1]) + &e(4, &[2, 3]);
        let (l, _) = find_lambda_nu(&sigma, &zero_vector(4), 2).unwrap();
        assert!(!l.is_zero());
        assert!((&(&sigma ^ &sigma) ^ &l).is_zero());

        let phi = v(&[1, 0, 0, 0]);
        let (l, nu) = find_lambda_nu(&sigma, &phi, 2).unwrap();
        let pm = Multivector::from_vector(&phi);
        assert!(!l.is_zero());
        assert!((&(&sigma ^ &pm) ^ &l).is_zero());
        assert!((&sigma ^ &nu).is_zero());
        let (sol, img) = lambda_nu_dimensions(&sigma, &phi, 2);
        assert_eq!(sol - img, 3);
    }

    #[test]
    fn hypotheses_are_reported() {
        let mut im = vec![zero_vector(3); 3];
        im[2] = unit_vector(3, 1);
        let theta = NilpotentOperator::from_images(&im).unwrap();
        // θ(e1∧e3) = e1∧e2
        let omega = e(3, &[0, 1]);
        assert!(matches!(
            check_hypotheses(&theta, &zero_vector(3), &omega),
            Err(Error::Hypothesis(Hypothesis::OmegaInImageTheta))
        ));
        assert!(matches!(
            check_hypotheses(&theta, &zero_vector(2), &omega),
            Err(Error::Hypothesis(Hypothesis::EpsilonLength { .. }))
        ));
    }
}
