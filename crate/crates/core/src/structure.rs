//! Detection and factorization of the two divergence-preserving map forms:
//! `Φ(X) = V (Tr_{H₂} X) V*` and `Φ(X) = (UXU* ⊗ η) ⊕ 0`.

use serde_json::{json, Value};

use crate::channels::{adjoint_multiplicative_domain, petz_recovery, Channel, MultiplicativeDomain};
use crate::error::{Error, Result};
use crate::linalg::{
    c, commutator, eigh, fro, identity, kron, matrix_unit, null_space, orthonormalize, partial_trace, trace,
    vectorize, ComplexMatrix, ComplexVector, Factor, PositiveOperator, C64,
};

pub const RESIDUAL_TOL: f64 = 1e-8;
pub const ISOMETRY_TOL: f64 = 1e-10;
pub const COMMUTANT_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    EmbedPartialTrace,
    TensorEmbed,
}

impl Form {
    pub fn name(&self) -> &'static str {
        match self {
            Form::EmbedPartialTrace => "embed-partial-trace",
            Form::TensorEmbed => "tensor-embed",
        }
    }
}

/// Recovered form of `Φ`, determined up to a unitary on the first factor.
///
/// For [`Form::EmbedPartialTrace`], `isometry_or_unitary` is `V: H₁ → K` and
/// `frame` is a unitary `T: H₁⊗H₂ → H` with `Φ(X) = V Tr₂(T*XT) V*`.
/// For [`Form::TensorEmbed`], `isometry_or_unitary` is `W: H⊗K₂ → K`, which
/// absorbs `U`, and `Φ(X) = W (X ⊗ η) W*`.
#[derive(Debug, Clone)]
pub struct FactorizationCertificate {
    pub form: Form,
    pub isometry_or_unitary: ComplexMatrix,
    pub frame: Option<ComplexMatrix>,
    pub split_dims: (usize, usize),
    pub eta: Option<PositiveOperator>,
    pub q: ComplexMatrix,
    pub q_rank: usize,
    pub residual: f64,
    pub isometry_residual: f64,
    pub md_dim: usize,
}

impl FactorizationCertificate {
    pub fn reconstruct(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let v = &self.isometry_or_unitary;
        match self.form {
            Form::EmbedPartialTrace => {
                let t = self.frame.as_ref().expect("embed certificate carries a frame");
                let reduced = partial_trace(&(t.adjoint() * x * t), Factor::Second, self.split_dims)?;
                Ok(v * reduced * v.adjoint())
            }
            Form::TensorEmbed => {
                let eta = self.eta.as_ref().expect("tensor certificate carries eta");
                Ok(v * kron(x, eta.matrix()) * v.adjoint())
            }
        }
    }

    /// Single isometry `H → K` when the second factor is trivial.
    pub fn effective_isometry(&self) -> Option<ComplexMatrix> {
        if self.split_dims.1 != 1 {
            return None;
        }
        match (&self.form, &self.frame) {
            (Form::EmbedPartialTrace, Some(t)) => Some(&self.isometry_or_unitary * t.adjoint()),
            _ => Some(self.isometry_or_unitary.clone()),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "form": self.form.name(),
            "dims": [self.split_dims.0, self.split_dims.1],
            "residual": self.residual,
            "isometry_residual": self.isometry_residual,
            "Q_rank": self.q_rank,
            "md_dim": self.md_dim,
        });
        if let Some(eta) = &self.eta {
            v["eta"] = json!(eta.eigenvalues());
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct FullDomainReport {
    pub full: bool,
    pub q: ComplexMatrix,
    pub q_rank: usize,
    pub domain: MultiplicativeDomain,
    /// `dim (M_{Φ*} ∩ B(QK))`.
    pub restricted_dim: usize,
    /// `M_{Φ*} = B(QK) ⊕ B(Q^⊥K)` by dimension count.
    pub block_form: bool,
}

fn check_tp(phi: &Channel) -> Result<()> {
    let r = phi.tp_residual();
    if r > 1e-8 {
        return Err(Error::HypothesisViolated(format!("channel is not trace preserving (residual {r:.3e})")));
    }
    Ok(())
}

fn output_support(phi: &Channel) -> Result<PositiveOperator> {
    PositiveOperator::from_computed(phi.apply(&identity(phi.dim_in())))
}

fn span_dim(mats: &[ComplexMatrix]) -> usize {
    let vecs: Vec<ComplexVector> = mats.iter().map(vectorize).collect();
    orthonormalize(&vecs, RANK_TOL).len()
}

fn compressed_units(w: &ComplexMatrix) -> Vec<Vec<ComplexMatrix>> {
    let r = w.ncols();
    (0..r).map(|i| (0..r).map(|j| w * matrix_unit(r, r, i, j) * w.adjoint()).collect()).collect()
}

fn unit_basis(d: usize) -> impl Iterator<Item = ComplexMatrix> {
    (0..d * d).map(move |k| matrix_unit(d, d, k / d, k % d))
}

pub fn detect_full_multiplicative_domain(phi: &Channel) -> Result<FullDomainReport> {
    check_tp(phi)?;
    let domain = adjoint_multiplicative_domain(phi)?;
    let support = output_support(phi)?;
    let q = support.support_projection();
    let w = support.support_isometry();
    let r = w.ncols();
    let n = phi.dim_out();
    let block: Vec<ComplexMatrix> = compressed_units(&w).into_iter().flatten().collect();
    let mut joint = domain.basis.clone();
    joint.extend(block.iter().cloned());
    let restricted_dim = domain.dim() + block.len() - span_dim(&joint);
    let full = restricted_dim == r * r;
    let block_form = full && domain.dim() == r * r + (n - r) * (n - r);
    Ok(FullDomainReport { full, q, q_rank: r, domain, restricted_dim, block_form })
}

/// Recovers `Φ(X) = V (Tr_{H₂} X) V*` from the matrix units
/// `F_ij = Φ*(W E_ij W*)` of the algebra `Φ*(B(QK))`.
pub fn factorize_embed_partial_trace(phi: &Channel) -> Result<FactorizationCertificate> {
    let report = detect_full_multiplicative_domain(phi)?;
    if !report.full {
        return Err(Error::NotFullMultiplicativeDomain);
    }
    let d = phi.dim_in();
    let support = output_support(phi)?;
    let w = support.support_isometry();
    let r = w.ncols();
    let f: Vec<Vec<ComplexMatrix>> =
        compressed_units(&w).iter().map(|row| row.iter().map(|e| phi.apply_adjoint(e)).collect()).collect();

    let mut unit_res = fro(&((0..r).fold(ComplexMatrix::zeros(d, d), |acc, i| acc + &f[i][i]) - identity(d)));
    for i in 0..r {
        for j in 0..r {
            unit_res = unit_res.max(fro(&(&f[i][j].adjoint() - &f[j][i])));
            for k in 0..r {
                for l in 0..r {
                    let want = if j == k { f[i][l].clone() } else { ComplexMatrix::zeros(d, d) };
                    unit_res = unit_res.max(fro(&(&f[i][j] * &f[k][l] - want)));
                }
            }
        }
    }
    if unit_res > RESIDUAL_TOL {
        return Err(Error::FactorizationFailed { residual: unit_res });
    }

    let gens: Vec<ComplexMatrix> = f.iter().flatten().cloned().collect();
    let comm = commutant(&gens, d);
    let mut joint = gens.clone();
    joint.extend(comm.iter().cloned());
    let center_dim = span_dim(&gens) + comm.len() - span_dim(&joint);
    if center_dim != 1 {
        return Err(Error::NotAFactor { center_dim });
    }
    if !d.is_multiple_of(r) {
        return Err(Error::FactorizationFailed { residual: f64::INFINITY });
    }
    let d2 = d / r;

    let p11 = eigh(&f[0][0]);
    let range = p11.select(|l| l > 0.5);
    if range.ncols() != d2 {
        return Err(Error::FactorizationFailed { residual: (range.ncols() as f64 - d2 as f64).abs() });
    }
    let mut frame = ComplexMatrix::zeros(d, d);
    for (i, row) in f.iter().enumerate() {
        let cols = &row[0] * &range;
        for k in 0..d2 {
            frame.set_column(i * d2 + k, &cols.column(k));
        }
    }
    let isometry_residual =
        fro(&(frame.adjoint() * &frame - identity(d))).max(fro(&(w.adjoint() * &w - identity(r))));
    if isometry_residual > ISOMETRY_TOL {
        return Err(Error::FactorizationFailed { residual: isometry_residual });
    }

    let mut cert = FactorizationCertificate {
        form: Form::EmbedPartialTrace,
        isometry_or_unitary: w,
        frame: Some(frame),
        split_dims: (r, d2),
        eta: None,
        q: report.q,
        q_rank: r,
        residual: 0.0,
        isometry_residual,
        md_dim: report.domain.dim(),
    };
    cert.residual = reconstruction_residual(phi, &cert)?;
    if cert.residual > RESIDUAL_TOL {
        return Err(Error::FactorizationFailed { residual: cert.residual });
    }
    Ok(cert)
}

/// Commutant of a family in `B(C^d)`: common kernel of `X ↦ [X, B_j]`.
pub fn commutant(gens: &[ComplexMatrix], d: usize) -> Vec<ComplexMatrix> {
    let dd = d * d;
    let mut stacked = ComplexMatrix::zeros(dd * gens.len().max(1), dd);
    for (g, b) in gens.iter().enumerate() {
        for (col, e) in unit_basis(d).enumerate() {
            let v = vectorize(&commutator(&e, b));
            for row in 0..dd {
                stacked[(g * dd + row, col)] = v[row];
            }
        }
    }
    let ns = null_space(&stacked, COMMUTANT_TOL);
    (0..ns.ncols()).map(|k| ComplexMatrix::from_column_slice(d, d, ns.column(k).as_slice())).collect()
}

fn reconstruction_residual(phi: &Channel, cert: &FactorizationCertificate) -> Result<f64> {
    let mut res: f64 = 0.0;
    for e in unit_basis(phi.dim_in()) {
        res = res.max(fro(&(phi.apply(&e) - cert.reconstruct(&e)?)));
    }
    Ok(res)
}

/// `max_X ‖Φ_σ*(Φ(X)) − X‖_F` over matrix units.
pub fn recovery_residual(phi: &Channel, sigma: &PositiveOperator) -> Result<f64> {
    let petz = petz_recovery(phi, sigma)?;
    let mut res: f64 = 0.0;
    for e in unit_basis(phi.dim_in()) {
        res = res.max(fro(&(petz.apply(&phi.apply(&e)) - &e)));
    }
    Ok(res)
}

/// Recovers `Φ(X) = W (X ⊗ η) W*` after checking `Φ_σ*∘Φ = id`.
///
/// `Φ(E₁₁) = W(E₁₁ ⊗ η)W*` yields `η` and the vectors `W(e₁ ⊗ f_k)`;
/// `Φ(E_i1)` transports them to `W(e_i ⊗ f_k)`.
pub fn detect_tensor_embed(phi: &Channel, sigma: &PositiveOperator) -> Result<FactorizationCertificate> {
    check_tp(phi)?;
    if !phi.is_cp() {
        return Err(Error::HypothesisViolated("tensor-embed detection needs a 2-positive channel".into()));
    }
    if !sigma.is_invertible() {
        return Err(Error::NotInvertible("sigma probe must be invertible".into()));
    }
    let d = phi.dim_in();
    let n = phi.dim_out();
    let rec = recovery_residual(phi, sigma)?;
    if rec > RESIDUAL_TOL {
        return Err(Error::NotRecoverable { residual: rec });
    }

    let g11 = PositiveOperator::from_computed(phi.apply(&matrix_unit(d, d, 0, 0)))?;
    let base = g11.support_isometry();
    let etas: Vec<f64> = g11.eigenvalues().iter().copied().filter(|&l| l > 0.0).collect();
    let d2 = etas.len();
    let support = output_support(phi)?;
    let r = support.support_rank();
    if r != d * d2 {
        return Err(Error::FactorizationFailed { residual: (r as f64 - (d * d2) as f64).abs() });
    }
    let mut w = ComplexMatrix::zeros(n, d * d2);
    for i in 0..d {
        let cols = phi.apply(&matrix_unit(d, d, i, 0)) * &base;
        for (k, &l) in etas.iter().enumerate() {
            w.set_column(i * d2 + k, &(cols.column(k) / c(l, 0.0)));
        }
    }
    let isometry_residual = fro(&(w.adjoint() * &w - identity(d * d2)));
    if isometry_residual > ISOMETRY_TOL {
        return Err(Error::FactorizationFailed { residual: isometry_residual });
    }
    let eta = PositiveOperator::new(crate::linalg::diag(&etas))?;
    let q = &w * w.adjoint();

    let domain = adjoint_multiplicative_domain(phi)?;
    let expected = d * d + (n - r) * (n - r);
    let md_gap = (0..d * d)
        .map(|k| {
            let y = &w * kron(&matrix_unit(d, d, k / d, k % d), &identity(d2)) * w.adjoint();
            domain.distance(&y)
        })
        .fold(0.0, f64::max);
    if domain.dim() != expected || md_gap > 1e-8 {
        return Err(Error::FactorizationFailed { residual: md_gap.max((domain.dim() as f64 - expected as f64).abs()) });
    }

    let mut cert = FactorizationCertificate {
        form: Form::TensorEmbed,
        isometry_or_unitary: w,
        frame: None,
        split_dims: (d, d2),
        eta: Some(eta),
        q,
        q_rank: r,
        residual: 0.0,
        isometry_residual,
        md_dim: domain.dim(),
    };
    cert.residual = reconstruction_residual(phi, &cert)?;
    if cert.residual > RESIDUAL_TOL {
        return Err(Error::FactorizationFailed { residual: cert.residual });
    }
    Ok(cert)
}

/// Upper bidiagonal matrix with diagonal `1, …, d` and ones above it; a
/// single generator of `B(C^d)` as a *-algebra.
pub fn single_generator(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, j| {
        if i == j {
            c((i + 1) as f64, 0.0)
        } else if j == i + 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Dimension of the span of all words in `K, K*` of length at most `2d²`
/// (the empty word included).
pub fn generated_algebra_dim(k: &ComplexMatrix) -> usize {
    let d = k.nrows();
    let letters = [k.clone(), k.adjoint()];
    let mut basis: Vec<ComplexVector> = Vec::new();
    let push = |m: &ComplexMatrix, basis: &mut Vec<ComplexVector>| -> bool {
        let v = vectorize(m);
        let mut cand = basis.clone();
        cand.push(v.clone());
        let before = basis.len();
        *basis = orthonormalize(&cand, RANK_TOL);
        basis.len() > before
    };
    let mut frontier = vec![identity(d)];
    push(&frontier[0], &mut basis);
    for _ in 0..2 * d * d {
        let mut next = Vec::new();
        for w in &frontier {
            for l in &letters {
                let m = w * l;
                if push(&m, &mut basis) {
                    next.push(m);
                }
            }
        }
        if next.is_empty() || basis.len() == d * d {
            break;
        }
        frontier = next;
    }
    basis.len()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortcutReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub holds: bool,
}

fn shortcut(lhs: C64, rhs: C64, tol: f64) -> ShortcutReport {
    let (l, r) = (lhs.re, rhs.re);
    let gap = (l - r).abs();
    ShortcutReport { lhs: l, rhs: r, gap, holds: gap <= tol * (1.0 + l.abs() + r.abs()) }
}

/// `Tr K*Φ(I)^{1/2}KΦ(I)^{1/2} = Tr Φ*(K)*Φ*(K)` for a single generator `K`
/// of `B(QK)`; equivalent to a full multiplicative domain on `B(QK)`.
pub fn embed_shortcut(phi: &Channel, tol: f64) -> Result<ShortcutReport> {
    let support = output_support(phi)?;
    let w = support.support_isometry();
    let k = &w * single_generator(w.ncols()) * w.adjoint();
    let s = support.sqrt();
    let kk = phi.apply_adjoint(&k);
    Ok(shortcut(trace(&(k.adjoint() * &s * &k * &s)), trace(&(kk.adjoint() * &kk)), tol))
}

/// `Tr Φ(K)*Φ(I)^{-1/2}Φ(K)Φ(I)^{-1/2} = Tr K*K` for a single generator `K`
/// of `B(H)`; equivalent to the tensor-embed form for 2-positive `Φ`.
pub fn tensor_shortcut(phi: &Channel, tol: f64) -> Result<ShortcutReport> {
    let support = output_support(phi)?;
    let k = single_generator(phi.dim_in());
    let s = support.power(-0.5);
    let pk = phi.apply(&k);
    Ok(shortcut(trace(&(pk.adjoint() * &s * &pk * &s)), trace(&(k.adjoint() * &k)), tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        diagonal_pinching, embed_partial_trace, leading_embedding, partial_trace_channel, random_tpcp, tensor_embed,
        unitary_channel,
    };
    use crate::equality::{run_battery, BatteryConfig};
    use crate::linalg::diag;
    use crate::random;

    fn phase_aligned(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
        // Same column up to a unimodular factor, column by column.
        (0..a.ncols()).all(|j| {
            let ip: C64 = a.column(j).dotc(&b.column(j));
            (ip.norm() - 1.0).abs() < 1e-9
        })
    }

    #[test]
    fn embed_round_trip_two_three() {
        let mut rng = random::rng(11);
        let v = random::isometry(&mut rng, 4, 2);
        let phi = embed_partial_trace(&v, (2, 3)).unwrap();
        let rep = detect_full_multiplicative_domain(&phi).unwrap();
        assert!(rep.full && rep.block_form);
        let cert = factorize_embed_partial_trace(&phi).unwrap();
        assert_eq!(cert.split_dims, (2, 3));
        assert!(cert.residual <= 1e-8);
        let vv = &cert.isometry_or_unitary;
        assert!(fro(&(vv.adjoint() * vv - identity(2))) <= 1e-10);
        assert!(fro(&(vv * vv.adjoint() - &cert.q)) <= 1e-10);
        assert!(fro(&(&cert.q - &v * v.adjoint())) <= 1e-9);
    }

    #[test]
    fn embed_round_trip_sweep() {
        for seed in 0..50u64 {
            let mut rng = random::rng(1000 + seed);
            let d1 = 1 + random::index(&mut rng, 3);
            let d2 = 1 + random::index(&mut rng, 3);
            let n = d1 + random::index(&mut rng, 2);
            let v = random::isometry(&mut rng, n, d1);
            let phi = embed_partial_trace(&v, (d1, d2)).unwrap();
            let cert = factorize_embed_partial_trace(&phi).unwrap();
            assert_eq!(cert.split_dims, (d1, d2), "seed {seed}");
            assert!(cert.residual <= 1e-8, "seed {seed}: {}", cert.residual);
        }
    }

    #[test]
    fn unitary_channel_factorizes_trivially() {
        let mut rng = random::rng(5);
        let u = random::unitary(&mut rng, 3);
        let phi = unitary_channel(&u).unwrap();
        let rep = detect_full_multiplicative_domain(&phi).unwrap();
        assert!(rep.full && rep.q_rank == 3);
        let cert = factorize_embed_partial_trace(&phi).unwrap();
        assert_eq!(cert.split_dims, (3, 1));
        let v = cert.effective_isometry().unwrap();
        let overlap = trace(&(u.adjoint() * v)).norm() / 3.0;
        assert!((overlap - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pinching_is_rejected() {
        for d in 2..=3 {
            let phi = diagonal_pinching(d);
            let rep = detect_full_multiplicative_domain(&phi).unwrap();
            assert!(!rep.full);
            assert_eq!(rep.domain.dim(), d);
            assert!(matches!(factorize_embed_partial_trace(&phi), Err(Error::NotFullMultiplicativeDomain)));
        }
    }

    #[test]
    fn commutant_of_tensor_factor() {
        let gens: Vec<ComplexMatrix> = (0..4).map(|k| kron(&matrix_unit(2, 2, k / 2, k % 2), &identity(3))).collect();
        let comm = commutant(&gens, 6);
        assert_eq!(comm.len(), 9);
    }

    #[test]
    fn tensor_round_trip_recovers_eta() {
        let mut rng = random::rng(21);
        let u = random::unitary(&mut rng, 2);
        let eta = diag(&[0.7, 0.3]);
        let phi = tensor_embed(&u, &eta, None).unwrap();
        let sigma = random::faithful(&mut rng, 2);
        let cert = detect_tensor_embed(&phi, &sigma).unwrap();
        assert_eq!(cert.split_dims, (2, 2));
        let got = cert.eta.as_ref().unwrap().eigenvalues().to_vec();
        assert!((got[0] - 0.3).abs() < 1e-9 && (got[1] - 0.7).abs() < 1e-9, "{got:?}");
        assert!(cert.residual <= 1e-8);
        assert_eq!(cert.md_dim, 4);
        // W equals U ⊗ I up to column phases, matched through the sorted η.
        let perm = ComplexMatrix::from_fn(4, 4, |i, j| {
            let (a, b) = (j / 2, 1 - j % 2);
            if i == a * 2 + b { c(1.0, 0.0) } else { c(0.0, 0.0) }
        });
        assert!(phase_aligned(&cert.isometry_or_unitary, &(kron(&u, &identity(2)) * perm)));
    }

    #[test]
    fn tensor_round_trip_sweep_with_embedding() {
        for seed in 0..50u64 {
            let mut rng = random::rng(2000 + seed);
            let d1 = 1 + random::index(&mut rng, 3);
            let d2 = 1 + random::index(&mut rng, 3);
            let extra = random::index(&mut rng, 2);
            let u = random::unitary(&mut rng, d1);
            let eta = random::faithful_density(&mut rng, d2);
            let w = random::isometry(&mut rng, d1 * d2 + extra, d1 * d2);
            let phi = tensor_embed(&u, &eta, Some(&w)).unwrap();
            let sigma = random::faithful(&mut rng, d1);
            let cert = detect_tensor_embed(&phi, &sigma).unwrap();
            assert_eq!(cert.split_dims, (d1, d2), "seed {seed}");
            assert!(cert.residual <= 1e-8, "seed {seed}: {}", cert.residual);
        }
    }

    #[test]
    fn unital_tensor_embed_is_unitary() {
        let mut rng = random::rng(8);
        let u = random::unitary(&mut rng, 3);
        let phi = unitary_channel(&u).unwrap();
        assert!(phi.is_unital());
        let cert = detect_tensor_embed(&phi, &random::faithful(&mut rng, 3)).unwrap();
        assert_eq!(cert.split_dims.1, 1);
        let v = cert.effective_isometry().unwrap();
        assert!(fro(&(v.adjoint() * &v - identity(3))) < 1e-10 && v.nrows() == 3);
    }

    #[test]
    fn random_channels_are_not_recoverable() {
        for seed in 0..10u64 {
            let phi = random_tpcp(2, 2, Some(2), seed).unwrap();
            let sigma = PositiveOperator::new(identity(2).scale(0.5)).unwrap();
            assert!(matches!(detect_tensor_embed(&phi, &sigma), Err(Error::NotRecoverable { .. })), "seed {seed}");
        }
    }

    #[test]
    fn single_generator_spans_full_algebra() {
        assert_eq!(single_generator(1), identity(1));
        let g2 = single_generator(2);
        assert_eq!(g2, ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]));
        assert_eq!(generated_algebra_dim(&g2), 4);
        assert_eq!(generated_algebra_dim(&single_generator(3)), 9);
        assert_eq!(generated_algebra_dim(&diag(&[1.0, 2.0, 3.0])), 3);
    }

    #[test]
    fn shortcut_matches_detection_on_zoo() {
        let mut rng = random::rng(31);
        let v = random::isometry(&mut rng, 3, 2);
        let zoo = [
            embed_partial_trace(&v, (2, 2)).unwrap(),
            partial_trace_channel(2, 3),
            unitary_channel(&random::unitary(&mut rng, 2)).unwrap(),
            embed_partial_trace(&leading_embedding(2, 1), (1, 3)).unwrap(),
            diagonal_pinching(2),
            diagonal_pinching(3),
            random_tpcp(2, 2, Some(2), 4).unwrap(),
            random_tpcp(3, 2, Some(3), 9).unwrap(),
        ];
        for (i, phi) in zoo.iter().enumerate() {
            let full = detect_full_multiplicative_domain(phi).unwrap().full;
            let sc = embed_shortcut(phi, 1e-8).unwrap();
            assert_eq!(sc.holds, full, "zoo[{i}]: {sc:?}");
        }
    }

    #[test]
    fn tensor_shortcut_matches_recoverability() {
        let mut rng = random::rng(41);
        let u = random::unitary(&mut rng, 2);
        let good = tensor_embed(&u, &diag(&[0.6, 0.4]), Some(&random::isometry(&mut rng, 5, 4))).unwrap();
        assert!(tensor_shortcut(&good, 1e-8).unwrap().holds);
        for phi in [diagonal_pinching(2), partial_trace_channel(2, 2), random_tpcp(2, 3, Some(2), 3).unwrap()] {
            assert!(!tensor_shortcut(&phi, 1e-8).unwrap().holds);
        }
    }

    #[test]
    fn detected_tensor_embed_satisfies_battery() {
        let mut rng = random::rng(51);
        let u = random::unitary(&mut rng, 2);
        let phi = tensor_embed(&u, &diag(&[0.7, 0.3]), Some(&random::isometry(&mut rng, 5, 4))).unwrap();
        let cert = detect_tensor_embed(&phi, &random::faithful(&mut rng, 2)).unwrap();
        let md = adjoint_multiplicative_domain(&phi).unwrap();
        assert_eq!(md.dim(), cert.md_dim);
        for _ in 0..3 {
            let r_rho = 1 + random::index(&mut rng, 2);
            let rho = random::positive(&mut rng, 2, r_rho);
            let r_sigma = 1 + random::index(&mut rng, 2);
            let sigma = random::positive(&mut rng, 2, r_sigma);
            let k = md.sample(&mut rng);
            let rep = run_battery(&phi, &rho, &sigma, &k, &BatteryConfig::default()).unwrap();
            for cond in &rep.conditions {
                assert!(!cond.failed(), "{} failed: gap {}", cond.tag, cond.gap);
            }
        }
    }
}
