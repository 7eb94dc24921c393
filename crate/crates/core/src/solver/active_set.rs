//! Active set of the irreversibility constraint `phi <= phi_old`.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActiveSet {
    mask: Vec<bool>,
    len: usize,
}

impl ActiveSet {
    pub fn empty(n: usize) -> Self {
        Self { mask: vec![false; n], len: 0 }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let len = mask.iter().filter(|&&m| m).count();
        Self { mask, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }
}

/// Phase-field unknowns with `R_i / B_ii + c * delta_i > 0`, where `R` is
/// the negative energy gradient and `delta = phi - phi_old`.
pub fn update_active_set<T: Real>(r_phi: &[T], delta: &[T], b_diag: &[T], c: T) -> ActiveSet {
    update_active_set_above(r_phi, delta, b_diag, c, T::zero())
}

/// Same rule with the comparison made against `floor` instead of zero.
/// Nodes sitting exactly on their old value have an indicator made of
/// cancellation noise; a floor a few hundred ulps above it keeps them from
/// flipping back and forth between Newton iterations.
pub fn update_active_set_above<T: Real>(r_phi: &[T], delta: &[T], b_diag: &[T], c: T, floor: T) -> ActiveSet {
    assert_eq!(r_phi.len(), delta.len());
    assert_eq!(r_phi.len(), b_diag.len());
    debug_assert!(b_diag.iter().all(|&b| b > T::zero()));
    ActiveSet::from_mask(
        r_phi
            .iter()
            .zip(delta)
            .zip(b_diag)
            .map(|((&r, &d), &b)| r / b + c * d > floor)
            .collect(),
    )
}
