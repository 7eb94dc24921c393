//! One quasi-static time step: Newton iteration with the primal-dual
//! active set folded into the same loop, and backtracking line search.
//!
//! The residual used here is `R = -grad E`. Convergence requires the
//! active set to repeat and the block-scaled inactive residual to fall
//! below the tolerance. Each block norm is divided by the larger of its
//! value at the start of the step and a load-based reference, so a step
//! that starts in equilibrium stays converged and the displacement and
//! phase-field blocks are compared on the same footing.

use crate::error::Result;
use crate::fem::{assemble, Coefficients, DofMap};
use crate::mesh::QuadMesh;
use crate::params::PrecondKind;
use crate::scalar::{norm2, Real};

use super::active_set::{update_active_set_above, ActiveSet};
use super::gmres::{gmres, GmresOptions};
use super::precond::BlockDiagonal;

#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Constant `c` of the active-set rule.
    pub c: T,
    pub max_halvings: usize,
    pub precond: PrecondKind,
    pub gmres: GmresOptions<T>,
}

/// Everything that stays fixed during one step.
pub struct StepProblem<'a, T> {
    pub mesh: &'a QuadMesh<T>,
    pub dofs: &'a DofMap<T>,
    pub coeffs: Coefficients<T>,
    /// Extrapolated nodal phase field for the displacement equations.
    pub phi_tilde: &'a [T],
    /// Previous-step phase field per phase unknown.
    pub phi_old: &'a [T],
    /// Lumped phase-field mass per phase unknown.
    pub lumped: &'a [T],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<T> {
    /// Scaled inactive-set residual at the start of the iteration.
    pub residual: T,
    pub active: usize,
    pub active_changed: bool,
    /// Accepted line-search step (zero when the iteration only tested
    /// convergence).
    pub omega: T,
    pub gmres_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport<T> {
    pub records: Vec<IterationRecord<T>>,
    pub converged: bool,
    pub failure: Option<String>,
    pub active_set: ActiveSet,
    /// Block scales `(s_u, s_phi)` the residual was divided by.
    pub scales: (T, T),
}

impl<T: Real> NewtonReport<T> {
    /// Newton updates performed.
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.omega > T::zero()).count()
    }

    pub fn gmres_total(&self) -> usize {
        self.records.iter().map(|r| r.gmres_iterations).sum()
    }

    pub fn gmres_average(&self) -> f64 {
        let n = self.iterations();
        if n == 0 {
            0.0
        } else {
            self.gmres_total() as f64 / n as f64
        }
    }

    pub fn final_residual(&self) -> T {
        self.records.last().map_or(T::zero(), |r| r.residual)
    }
}

fn scaled_norm<T: Real>(r: &[T], n_u: usize, active: &ActiveSet, scales: (T, T)) -> T {
    let ru = norm2(&r[..n_u]) / scales.0;
    let rp = r[n_u..]
        .iter()
        .enumerate()
        .map(|(i, &v)| if active.contains(i) { T::zero() } else { v * v })
        .sum::<T>()
        .sqrt()
        / scales.1;
    (ru * ru + rp * rp).sqrt()
}

/// Solve one step in place, starting from `x`. A non-converged report is
/// returned as `Ok`; only assembly errors are propagated.
pub fn solve_step<T: Real>(p: &StepProblem<'_, T>, x: &mut [T], s: &NewtonSettings<T>) -> Result<NewtonReport<T>> {
    let n_u = p.dofs.n_u();
    let n = p.dofs.n_dofs();
    let tiny = T::min_positive_value().sqrt();
    let floor = T::epsilon() * T::lit(1024.0) * p.coeffs.gc / p.coeffs.eps;
    // Nodes resting exactly on their old value in equilibrium have an
    // indicator made of round-off in both terms. Flips of such nodes do not
    // count as a change of the active set.
    let noise = T::epsilon() * T::lit(1024.0) * (p.coeffs.gc / p.coeffs.eps + s.c);
    let mut report = NewtonReport {
        records: Vec::new(),
        converged: false,
        failure: None,
        active_set: ActiveSet::empty(p.dofs.n_phi()),
        scales: (T::one(), T::one()),
    };
    let mut prev: Option<ActiveSet> = None;

    for k in 0..=s.max_iter {
        let sys = assemble(p.mesh, p.dofs, &p.coeffs, x, p.phi_tilde, true)?;
        let r: Vec<T> = sys.residual.iter().map(|&v| -v).collect();
        let delta: Vec<T> = x[n_u..].iter().zip(p.phi_old).map(|(&a, &b)| a - b).collect();
        let active = update_active_set_above(&r[n_u..], &delta, p.lumped, s.c, floor);
        if k == 0 {
            let ru0 = norm2(&r[..n_u]);
            let rp0 = r[n_u..]
                .iter()
                .enumerate()
                .filter(|(i, _)| !active.contains(*i))
                .map(|(_, &v)| v * v)
                .sum::<T>()
                .sqrt();
            let load = norm2(&sys.load_u);
            let mass = norm2(p.lumped) * p.coeffs.gc / p.coeffs.eps;
            report.scales = (ru0.max(load).max(tiny), rp0.max(mass).max(tiny));
        }
        let res = scaled_norm(&r, n_u, &active, report.scales);
        let changed = match &prev {
            None => true,
            Some(q) => (0..active.mask().len()).any(|i| {
                q.contains(i) != active.contains(i) && (r[n_u + i] / p.lumped[i] + s.c * delta[i]).abs() > noise
            }),
        };
        if !changed && res <= s.tol {
            report.records.push(IterationRecord {
                residual: res,
                active: active.len(),
                active_changed: false,
                omega: T::zero(),
                gmres_iterations: 0,
            });
            report.converged = true;
            report.active_set = active;
            return Ok(report);
        }
        if k == s.max_iter {
            report.records.push(IterationRecord { residual: res, active: active.len(), active_changed: changed, omega: T::zero(), gmres_iterations: 0 });
            report.failure = Some(format!("no convergence in {} Newton iterations (residual {:e})", s.max_iter, res.to_f64_lossy()));
            report.active_set = active;
            return Ok(report);
        }

        // Eliminate the active rows: their update is known, delta_phi = phi_old - phi.
        let mut jac = sys.matrix.expect("matrix requested");
        let mut fixed = vec![false; n];
        let mut known = vec![T::zero(); n];
        for i in active.indices() {
            fixed[n_u + i] = true;
            known[n_u + i] = -delta[i];
        }
        let mut rhs = r.clone();
        let removed = jac.eliminate_symmetric(&fixed);
        for j in 0..n {
            if fixed[j] {
                rhs[j] = jac.get(j, j) * known[j];
                for &(i, v) in &removed[j] {
                    rhs[i] -= v * known[j];
                }
            }
        }
        let precond = BlockDiagonal::new(&jac, &[0..n_u, n_u..n], s.precond);
        let weights: Vec<T> = (0..n).map(|i| if i < n_u { T::one() / report.scales.0 } else { T::one() / report.scales.1 }).collect();
        let mut du = vec![T::zero(); n];
        let lin = match gmres(&jac, &rhs, &mut du, &precond, Some(&weights), &s.gmres) {
            Ok(st) => st,
            Err(e) => {
                report.failure = Some(format!("linear solve failed: {e}"));
                report.active_set = active;
                return Ok(report);
            }
        };

        let mut omega = T::one();
        let mut accepted = false;
        let mut trial = x.to_vec();
        for _ in 0..=s.max_halvings {
            for i in 0..n {
                trial[i] = x[i] + omega * du[i];
            }
            let rt = assemble(p.mesh, p.dofs, &p.coeffs, &trial, p.phi_tilde, false)?;
            let rt: Vec<T> = rt.residual.iter().map(|&v| -v).collect();
            let res_t = scaled_norm(&rt, n_u, &active, report.scales);
            if res_t < res || res_t <= s.tol {
                accepted = true;
                break;
            }
            omega = omega * T::lit(0.5);
        }
        report.records.push(IterationRecord {
            residual: res,
            active: active.len(),
            active_changed: changed,
            omega: if accepted { omega } else { T::zero() },
            gmres_iterations: lin.iterations,
        });
        if !accepted {
            report.failure = Some(format!("line search stagnated at residual {:e}", res.to_f64_lossy()));
            report.active_set = active;
            return Ok(report);
        }
        x.copy_from_slice(&trial);
        prev = Some(active);
    }
    unreachable!("loop returns on its last iteration")
}
