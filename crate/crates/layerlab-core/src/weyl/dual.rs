//! Discrete dual norm and Weyl quotients.

use super::{SingularFamily, WeylError};
use crate::discretization::DiscreteForms;
use crate::parallel::dot;
use crate::spectral::solve_spd;

/// Dual norm `||v||_{-1} = sqrt(v^T (K + M)^{-1} v)` evaluated through
/// conjugate gradients on `K + M`.
pub struct DualNormSolver<'a> {
    forms: &'a DiscreteForms,
    pub cg_tol: f64,
}

impl<'a> DualNormSolver<'a> {
    pub fn new(forms: &'a DiscreteForms, cg_tol: f64) -> Self {
        Self { forms, cg_tol }
    }

    pub fn dual_norm(&self, v: &[f64]) -> Result<f64, WeylError> {
        let x = solve_spd(&self.forms.k, Some(&self.forms.m), v, self.cg_tol)?;
        Ok(dot(v, &x).max(0.0).sqrt())
    }
}

/// One-shot dual norm with the default CG tolerance.
pub fn dual_norm(forms: &DiscreteForms, v: &[f64]) -> Result<f64, WeylError> {
    DualNormSolver::new(forms, 1e-10).dual_norm(v)
}

#[derive(Debug, Clone)]
pub struct QuotientReport {
    /// `q_n = ||(K - lambda M) psi_n||_{-1} / ||psi_n||_M`.
    pub quotients: Vec<f64>,
    /// Weak-convergence surrogate `max_{m<n} |psi_n^T M psi_m|`; zero by
    /// disjoint supports.
    pub cross_gram_max: f64,
}

/// Evaluate the Weyl quotients of a family at `lambda`.
pub fn weyl_quotient(
    forms: &DiscreteForms,
    family: &SingularFamily,
    lambda: f64,
    cg_tol: f64,
) -> Result<QuotientReport, WeylError> {
    let solver = DualNormSolver::new(forms, cg_tol);
    let mut quotients = Vec::with_capacity(family.len());
    for psi in &family.members {
        if psi.len() != forms.n_unknowns() {
            return Err(WeylError::InvalidInput(
                "family member length does not match the form unknowns".into(),
            ));
        }
        let r = forms.apply_shifted(psi, lambda);
        let q = solver.dual_norm(&r)?;
        let norm = forms.m_norm(psi);
        quotients.push(q / norm);
    }
    let mut cross_gram_max = 0.0f64;
    for n in 0..family.len() {
        for m in 0..n {
            cross_gram_max =
                cross_gram_max.max(forms.m_inner(&family.members[n], &family.members[m]).abs());
        }
    }
    Ok(QuotientReport { quotients, cross_gram_max })
}
