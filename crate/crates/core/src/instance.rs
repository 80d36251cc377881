//! Instances `(θ, ε, Ω)`: file format, validation, seeded random sampling
//! and case-targeted templates.
//!
//! Random generation uses `ChaCha8Rng::seed_from_u64(seed)` from
//! `rand_chacha`; the generator and the order of draws are part of the
//! format contract, so a seed reproduces the same instance byte for byte.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Hypothesis, Result};
use crate::exterior::{operator_matrix, GradedBasis, Multivector, NilpotentOperator};
use crate::linalg::{kernel, Matrix};
use crate::rational::{unit_vector, zero_vector, Rational, Vector};
use crate::witness::{check_hypotheses, construct_witness, CaseTag};

pub const SPEC_VERSION: &str = "1";

/// One term `c · e_i∧e_j` of `Ω` (1-based, `i < j`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaTerm {
    pub i: usize,
    pub j: usize,
    #[serde(with = "crate::rational::serde_rational")]
    pub c: Rational,
}

/// An instance as stored on disk. `theta[i][j]` is the `i`-th coordinate of
/// `θ(e_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub dim: usize,
    #[serde(with = "crate::rational::serde_matrix")]
    pub theta: Vec<Vector>,
    pub omega: Vec<OmegaTerm>,
    #[serde(with = "crate::rational::serde_vector")]
    pub epsilon: Vector,
    pub seed: Option<u64>,
    pub spec_version: String,
}

/// A validated instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub theta: NilpotentOperator,
    pub epsilon: Vector,
    pub omega: Multivector,
}

impl Instance {
    pub fn from_parts(theta: &Matrix, epsilon: Vector, omega: &Multivector, seed: Option<u64>) -> Instance {
        let terms = omega
            .terms()
            .map(|(mask, c)| {
                let i = mask.trailing_zeros() as usize;
                let j = (u32::BITS - 1 - mask.leading_zeros()) as usize;
                OmegaTerm { i: i + 1, j: j + 1, c: c.clone() }
            })
            .collect();
        Instance {
            dim: theta.rows(),
            theta: theta.to_rows(),
            omega: terms,
            epsilon,
            seed,
            spec_version: SPEC_VERSION.to_string(),
        }
    }

    pub fn from_triple(t: &Triple, seed: Option<u64>) -> Instance {
        Instance::from_parts(t.theta.matrix(), t.epsilon.clone(), &t.omega, seed)
    }

    /// Shape checks only; malformed data is a format error.
    pub fn parse_parts(&self) -> Result<(Matrix, Vector, Multivector)> {
        let n = self.dim;
        if n == 0 || n > crate::exterior::MAX_DIM {
            return Err(Error::InvalidInput(format!("dim must be in 1..={}", crate::exterior::MAX_DIM)));
        }
        if self.spec_version != SPEC_VERSION {
            return Err(Error::InvalidInput(format!("unsupported spec_version {:?}", self.spec_version)));
        }
        if self.theta.len() != n || self.theta.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("theta must be {n}x{n}")));
        }
        let theta = Matrix::from_rows(n, self.theta.clone())?;
        let mut omega = Multivector::zero(n);
        for t in &self.omega {
            if t.i == 0 || t.j == 0 || t.i > n || t.j > n {
                return Err(Error::IndexOutOfRange { index: t.i.max(t.j), dim: n });
            }
            if t.i >= t.j {
                return Err(Error::InvalidInput(format!("omega term ({}, {}) needs i < j", t.i, t.j)));
            }
            let mask = (1u32 << (t.i - 1)) | (1u32 << (t.j - 1));
            if !omega.coeff(mask).is_zero() {
                return Err(Error::InvalidInput(format!("omega term ({}, {}) given twice", t.i, t.j)));
            }
            omega.add_term(mask, t.c.clone());
        }
        Ok((theta, self.epsilon.clone(), omega))
    }

    /// Full validation: shape, then every hypothesis through
    /// [`check_hypotheses`].
    pub fn validate(&self) -> Result<Triple> {
        let (theta, epsilon, omega) = self.parse_parts()?;
        let theta = NilpotentOperator::new(theta)?;
        check_hypotheses(&theta, &epsilon, &omega)?;
        Ok(Triple { theta, epsilon, omega })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances serialize")
    }

    /// SHA-256 (hex) of the compact JSON form.
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(self).expect("instances serialize");
        hex::encode(Sha256::digest(s.as_bytes()))
    }
}

/// Parameters for [`random_instance`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub dim_i: usize,
    pub seed: u64,
    pub target_case: Option<CaseTag>,
    pub coefficient_bound: u32,
}

impl InstanceSpec {
    pub fn new(dim_i: usize, seed: u64) -> Self {
        InstanceSpec { dim_i, seed, target_case: None, coefficient_bound: 3 }
    }
}

const RESAMPLE_BUDGET: usize = 256;

fn small_rational(rng: &mut ChaCha8Rng, bound: u32) -> Rational {
    let b = bound as i64;
    let n = rng.gen_range(-b..=b);
    let d = rng.gen_range(1..=b);
    Rational::new(n.into(), d.into())
}

fn nonzero_rational(rng: &mut ChaCha8Rng, bound: u32) -> Rational {
    loop {
        let q = small_rational(rng, bound);
        if !q.is_zero() {
            return q;
        }
    }
}

/// Unit lower times unit upper triangular, integer entries in `[-2, 2]`.
fn random_unimodular(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut lo = Matrix::identity(n);
    let mut up = Matrix::identity(n);
    for i in 0..n {
        for j in 0..i {
            lo.set(i, j, Rational::from_integer(rng.gen_range(-2i64..=2).into()));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            up.set(i, j, Rational::from_integer(rng.gen_range(-2i64..=2).into()));
        }
    }
    lo.mul(&up).expect("square factors")
}

fn conjugate(p: &Matrix, m: &Matrix) -> Matrix {
    let inv = p.inverse().expect("unimodular matrices are invertible");
    p.mul(m).and_then(|pm| pm.mul(&inv)).expect("square factors")
}

/// Applies the change of basis `x ↦ Px` to a triple.
pub fn change_basis(t: &Triple, p: &Matrix) -> Result<Triple> {
    let n = t.theta.dim();
    let theta = NilpotentOperator::new(conjugate(p, t.theta.matrix()))?;
    let epsilon = p.mul_vec(&t.epsilon)?;
    let images: Vec<Vector> = (0..n).map(|j| p.column(j)).collect();
    let omega = t.omega.pushforward(n, &images)?;
    Ok(Triple { theta, epsilon, omega })
}

/// A random valid triple on `Q^{dim_I}`.
///
/// `θ = P N P^{-1}` with `N` strictly upper triangular (entries zero with
/// probability 1/2, for a spread of Jordan types) and `P` unimodular; `Ω`
/// is a random combination of a basis of `ker θ|Λ²`, resampled while zero
/// or in `im θ`; `ε` has entries zero with probability 1/3.
pub fn random_instance(spec: &InstanceSpec) -> Result<Instance> {
    if spec.dim_i < 2 {
        return Err(Error::InvalidInput("dim_I must be at least 2".into()));
    }
    if spec.coefficient_bound < 1 {
        return Err(Error::InvalidInput("coefficient bound must be at least 1".into()));
    }
    let n = spec.dim_i;
    let bound = spec.coefficient_bound;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let basis2 = GradedBasis::new(n, 2);
    let mut attempts = 0;
    while attempts < RESAMPLE_BUDGET {
        let mut nmat = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.5) {
                    nmat.set(i, j, nonzero_rational(&mut rng, bound));
                }
            }
        }
        let p = random_unimodular(&mut rng, n);
        let theta = NilpotentOperator::new(conjugate(&p, &nmat))?;
        let ker = kernel(&operator_matrix(n, 2, 2, |x| theta.apply_derivation(x).expect("same dimension")));
        for _ in 0..8 {
            attempts += 1;
            let mut coords = zero_vector(basis2.len());
            for b in ker.basis() {
                let c = Rational::from_integer(rng.gen_range(-(bound as i64)..=bound as i64).into());
                for (x, y) in coords.iter_mut().zip(b) {
                    *x += &c * y;
                }
            }
            let omega = Multivector::from_graded_coords(n, &basis2, &coords);
            let epsilon: Vector = (0..n)
                .map(|_| if rng.gen_bool(1.0 / 3.0) { Rational::zero() } else { small_rational(&mut rng, bound) })
                .collect();
            match check_hypotheses(&theta, &epsilon, &omega) {
                Ok(()) => return Ok(Instance::from_parts(theta.matrix(), epsilon, &omega, Some(spec.seed))),
                Err(Error::Hypothesis(Hypothesis::OmegaZero | Hypothesis::OmegaInImageTheta)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Err(Error::ResampleBudget(RESAMPLE_BUDGET))
}

fn chain_images(n: usize, edges: &[(usize, Vector)]) -> Vec<Vector> {
    let mut im = vec![zero_vector(n); n];
    for (from, to) in edges {
        im[*from] = to.clone();
    }
    im
}

fn wedge2(n: usize, i: usize, j: usize) -> Multivector {
    Multivector::from_indices(n, &[i, j])
}

/// Base templates, before padding. Coordinates are listed per case.
fn template(tag: CaseTag) -> Triple {
    let e = unit_vector;
    let (n, images, omega, eps) = match tag {
        // (u, v), θ = 0, Ω = u∧v, ε = 0
        CaseTag::TrivialEpsZero => (2, vec![zero_vector(2); 2], wedge2(2, 0, 1), zero_vector(2)),
        // (u, v), θ = 0, Ω = u∧v, ε = u
        CaseTag::EpsInS => (2, vec![zero_vector(2); 2], wedge2(2, 0, 1), e(2, 0)),
        // (u, v, w), θ = 0, Ω = u∧v, ε = w
        CaseTag::EasyN => (3, vec![zero_vector(3); 3], wedge2(3, 0, 1), e(3, 2)),
        // (z1, z2, u, v, a), a ↦ z2 ↦ z1, Ω = z2∧z1 + u∧v, ε = a
        CaseTag::EvenM => {
            let im = chain_images(5, &[(1, e(5, 0)), (4, e(5, 1))]);
            (5, im, &wedge2(5, 1, 0) + &wedge2(5, 2, 3), e(5, 4))
        }
        // (z1, z2, z3, z4, u, v, a), a ↦ z4 ↦ z3 ↦ z2 ↦ z1,
        // Ω = z4∧z1 − z3∧z2 + u∧v, ε = a
        CaseTag::OddMThetaW => {
            let im = chain_images(7, &[(1, e(7, 0)), (2, e(7, 1)), (3, e(7, 2)), (6, e(7, 3))]);
            let omega = &(&wedge2(7, 3, 0) - &wedge2(7, 2, 1)) + &wedge2(7, 4, 5);
            (7, im, omega, e(7, 6))
        }
        // (u, v, z1, z2, a1, a2, y1, y2), a2 ↦ a1 ↦ z2 + u, z2 ↦ z1, y2 ↦ y1,
        // Ω = z2∧z1 + u∧v + y2∧y1, ε = a2
        CaseTag::OddMZTop => {
            let mut zu = e(8, 3);
            zu[0] = Rational::one();
            let im = chain_images(8, &[(3, e(8, 2)), (4, zu), (5, e(8, 4)), (7, e(8, 6))]);
            let omega = &(&wedge2(8, 3, 2) + &wedge2(8, 0, 1)) + &wedge2(8, 7, 6);
            (8, im, omega, e(8, 5))
        }
        // (u, v, z1, z2, a1, a2), a2 ↦ a1 ↦ z2 + u, z2 ↦ z1,
        // Ω = z2∧z1 + u∧v, ε = a2
        CaseTag::Terminal23 => {
            let mut zu = e(6, 3);
            zu[0] = Rational::one();
            let im = chain_images(6, &[(3, e(6, 2)), (4, zu), (5, e(6, 4))]);
            (6, im, &wedge2(6, 3, 2) + &wedge2(6, 0, 1), e(6, 5))
        }
    };
    let theta = NilpotentOperator::from_images(&images).expect("templates are nilpotent");
    debug_assert_eq!(theta.dim(), n);
    Triple { theta, epsilon: eps, omega }
}

/// Smallest `dim_I` a template for `tag` needs.
pub fn template_dim(tag: CaseTag) -> usize {
    template(tag).theta.dim()
}

/// Appends `pairs` inert `U/V` pairs (`θ = 0`, `Ω += u'∧v'`) and `singles`
/// inert vectors outside the support.
pub fn pad(t: &Triple, pairs: usize, singles: usize) -> Triple {
    let n0 = t.theta.dim();
    let n = n0 + 2 * pairs + singles;
    let m = t.theta.matrix();
    let mut images = vec![zero_vector(n); n];
    for (j, img) in images.iter_mut().enumerate().take(n0) {
        for i in 0..n0 {
            img[i] = m.get(i, j).clone();
        }
    }
    let theta = NilpotentOperator::from_images(&images).expect("padding keeps nilpotency");
    let mut omega = t.omega.embed(n);
    for k in 0..pairs {
        omega = &omega + &wedge2(n, n0 + 2 * k, n0 + 2 * k + 1);
    }
    let mut epsilon = t.epsilon.clone();
    epsilon.resize(n, Rational::zero());
    Triple { theta, epsilon, omega }
}

/// An instance whose witness construction takes the branch `tag`, padded
/// with `extra_pairs` inert `U/V` pairs.
pub fn targeted_instance(tag: CaseTag, extra_pairs: usize) -> Result<Instance> {
    let t = pad(&template(tag), extra_pairs, 0);
    let inst = Instance::from_triple(&t, None);
    assert_dispatch(&inst, tag)?;
    Ok(inst)
}

/// A targeted instance of exactly `dim_I`, in a basis scrambled by `seed`.
pub fn targeted_instance_sized(tag: CaseTag, dim_i: usize, seed: u64) -> Result<Instance> {
    let base = template(tag);
    let n0 = base.theta.dim();
    if dim_i < n0 {
        return Err(Error::InvalidInput(format!("case {tag} needs dim_I >= {n0}")));
    }
    let extra = dim_i - n0;
    let t = pad(&base, extra / 2, extra % 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_unimodular(&mut rng, dim_i);
    let t = change_basis(&t, &p)?;
    let inst = Instance::from_triple(&t, Some(seed));
    assert_dispatch(&inst, tag)?;
    Ok(inst)
}

fn assert_dispatch(inst: &Instance, tag: CaseTag) -> Result<()> {
    let t = inst.validate()?;
    let cert = construct_witness(&t.epsilon, &t.omega, &t.theta)?;
    if cert.case_tag != tag {
        return Err(Error::CaseMismatch(format!("template for {tag} dispatched to {}", cert.case_tag)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_is_valid_and_deterministic() {
        let spec = InstanceSpec::new(2, 1);
        let a = random_instance(&spec).unwrap();
        a.validate().unwrap();
        assert_eq!(a, random_instance(&spec).unwrap());
        assert_eq!(a.to_json(), random_instance(&spec).unwrap().to_json());
        let b = random_instance(&InstanceSpec::new(6, 7)).unwrap();
        let t = b.validate().unwrap();
        construct_witness(&t.epsilon, &t.omega, &t.theta).unwrap();
        assert!(random_instance(&InstanceSpec::new(1, 1)).is_err());
    }

    #[test]
    fn templates_dispatch() {
        for tag in CaseTag::ALL {
            targeted_instance(tag, 0).unwrap();
            targeted_instance(tag, 1).unwrap();
        }
        assert_eq!(template_dim(CaseTag::EvenM), 5);
        assert_eq!(template_dim(CaseTag::Terminal23), 6);
    }

    #[test]
    fn sized_targets() {
        let a = targeted_instance_sized(CaseTag::Terminal23, 6, 42).unwrap();
        assert_eq!(a, targeted_instance_sized(CaseTag::Terminal23, 6, 42).unwrap());
        targeted_instance_sized(CaseTag::OddMThetaW, 8, 3).unwrap();
        targeted_instance_sized(CaseTag::EasyN, 4, 3).unwrap();
        assert!(targeted_instance_sized(CaseTag::Terminal23, 5, 1).is_err());
    }

    #[test]
    fn json_shape_and_hash() {
        let i = targeted_instance(CaseTag::EvenM, 0).unwrap();
        let s = serde_json::to_string(&i).unwrap();
        assert!(s.starts_with("{\"dim\":5,\"theta\":[["));
        assert!(s.contains("\"omega\":[{\"i\":1,\"j\":2,\"c\":\"-1\"}"));
        let back: Instance = serde_json::from_str(&s).unwrap();
        assert_eq!(back.hash(), i.hash());
        assert_eq!(i.hash().len(), 64);
    }

    #[test]
    fn validation_errors() {
        let mut i = targeted_instance(CaseTag::EvenM, 0).unwrap();
        i.epsilon.pop();
        assert!(matches!(i.validate(), Err(Error::Hypothesis(Hypothesis::EpsilonLength { .. }))));
        let mut i = targeted_instance(CaseTag::EvenM, 0).unwrap();
        i.theta[0][0] = Rational::one();
        assert!(matches!(i.validate(), Err(Error::Hypothesis(Hypothesis::ThetaNotNilpotent))));
    }
}
