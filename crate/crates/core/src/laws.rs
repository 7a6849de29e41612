//! Executable operad and monoid laws.
//!
//! Each check returns `Ok(true)` when the law holds on the given instances,
//! `Ok(false)` when it fails, and an error when the instances are ill-typed.
//! Equality is always decided on canonical bytes.

use crate::operad::{MonoidKind, NetOperation, OperadError};

fn same(a: &NetOperation, b: &NetOperation) -> bool {
    a.canonical_bytes() == b.canonical_bytes()
}

/// `compose(identity(g.output), [g]) == g`.
pub fn left_unit(g: &NetOperation) -> Result<bool, OperadError> {
    let id = NetOperation::identity(g.signature().clone(), g.output().clone());
    Ok(same(&id.compose(std::slice::from_ref(g))?, g))
}

/// `compose(f, [identity(x) for x in f.inputs]) == f`.
pub fn right_unit(f: &NetOperation) -> Result<bool, OperadError> {
    let ids: Vec<_> = f
        .inputs()
        .iter()
        .map(|t| NetOperation::identity(f.signature().clone(), t.clone()))
        .collect();
    Ok(same(&f.compose(&ids)?, f))
}

/// `compose(compose(f, gs), hs) == compose(f, [compose(g_i, hs_i)])` where `hs`
/// is the flat list of operations plugged into the inputs of all the `gs`.
pub fn associativity(
    f: &NetOperation,
    gs: &[NetOperation],
    hs: &[NetOperation],
) -> Result<bool, OperadError> {
    let left = f.compose(gs)?.compose(hs)?;
    let mut rest = hs;
    let mut inner = Vec::with_capacity(gs.len());
    for g in gs {
        if rest.len() < g.arity() {
            return Err(OperadError::SlotCountMismatch {
                expected: gs.iter().map(NetOperation::arity).sum(),
                found: hs.len(),
            });
        }
        let (mine, tail) = rest.split_at(g.arity());
        inner.push(g.compose(mine)?);
        rest = tail;
    }
    let right = f.compose(&inner)?;
    Ok(same(&left, &right))
}

/// Relabeling output nodes commutes with substitution:
/// `permute(compose(f, gs), sigma) == compose(permute(f, sigma), gs)`.
pub fn node_equivariance(
    f: &NetOperation,
    gs: &[NetOperation],
    sigma: &[usize],
) -> Result<bool, OperadError> {
    let left = f.compose(gs)?.permute(sigma)?;
    let right = f.permute(sigma)?.compose(gs)?;
    Ok(same(&left, &right))
}

/// Reordering input slots commutes with substitution up to the induced block
/// permutation of the inner operations' slots:
/// `compose(permute_slots(f, pi), gs permuted by pi) == permute_slots(compose(f, gs), block(pi))`.
pub fn slot_equivariance(
    f: &NetOperation,
    gs: &[NetOperation],
    pi: &[usize],
) -> Result<bool, OperadError> {
    if gs.len() != pi.len() {
        return Err(OperadError::SlotCountMismatch {
            expected: pi.len(),
            found: gs.len(),
        });
    }
    let mut moved: Vec<Option<NetOperation>> = vec![None; gs.len()];
    for (old, &new) in pi.iter().enumerate() {
        if new >= gs.len() || moved[new].is_some() {
            return Err(OperadError::InvalidPermutation(format!("{pi:?}")));
        }
        moved[new] = Some(gs[old].clone());
    }
    let moved: Vec<NetOperation> = moved.into_iter().map(|g| g.expect("filled")).collect();
    let left = f.permute_slots(pi)?.compose(&moved)?;
    let right = f.compose(gs)?.permute_slots(&block_permutation(gs, pi))?;
    Ok(same(&left, &right))
}

/// The permutation of the flattened inner slots induced by permuting the blocks.
pub fn block_permutation(gs: &[NetOperation], pi: &[usize]) -> Vec<usize> {
    let sizes: Vec<usize> = gs.iter().map(NetOperation::arity).collect();
    let mut new_sizes = vec![0; gs.len()];
    for (old, &new) in pi.iter().enumerate() {
        new_sizes[new] = sizes[old];
    }
    let mut new_offsets = vec![0; gs.len()];
    for i in 1..gs.len() {
        new_offsets[i] = new_offsets[i - 1] + new_sizes[i - 1];
    }
    let mut out = Vec::with_capacity(sizes.iter().sum());
    for (old, &size) in sizes.iter().enumerate() {
        for j in 0..size {
            out.push(new_offsets[pi[old]] + j);
        }
    }
    out
}

/// Outcome of checking the monoid axioms for one kind over a sample of carrier values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonoidLawReport {
    pub kind: MonoidKind,
    pub associative: bool,
    pub commutative: bool,
    pub unital: bool,
    pub idempotent: bool,
    pub self_inverse: bool,
}

impl MonoidLawReport {
    /// The axioms plus the kind-specific properties: idempotence exactly for
    /// boolean-or and max, self-inverse exactly for mod-2.
    pub fn holds(&self) -> bool {
        self.associative
            && self.commutative
            && self.unital
            && self.idempotent == matches!(self.kind, MonoidKind::BooleanOr | MonoidKind::NatMax)
            && self.self_inverse == (self.kind == MonoidKind::Mod2)
    }
}

/// Checks the laws over all triples drawn from the admissible part of `samples`.
pub fn monoid_laws(kind: MonoidKind, samples: &[u64]) -> MonoidLawReport {
    let xs: Vec<u64> = samples.iter().copied().filter(|&v| kind.admits(v)).collect();
    let op = |a, b| kind.combine(a, b);
    let e = kind.unit();
    let mut r = MonoidLawReport {
        kind,
        associative: true,
        commutative: true,
        unital: true,
        idempotent: true,
        self_inverse: true,
    };
    for &a in &xs {
        r.unital &= op(a, e) == a && op(e, a) == a;
        r.idempotent &= op(a, a) == a;
        r.self_inverse &= op(a, a) == e;
        for &b in &xs {
            r.commutative &= op(a, b) == op(b, a);
            for &c in &xs {
                r.associative &= op(op(a, b), c) == op(a, op(b, c));
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_monoid_kind_obeys_its_laws() {
        let samples = [0, 1, 2, 3, 7, 100];
        for kind in MonoidKind::ALL {
            let r = monoid_laws(kind, &samples);
            assert!(r.holds(), "{r:?}");
        }
    }

    #[test]
    fn nat_sum_is_not_idempotent_but_boolean_or_is() {
        assert!(!monoid_laws(MonoidKind::NatSum, &[0, 1, 2]).idempotent);
        assert!(monoid_laws(MonoidKind::BooleanOr, &[0, 1]).idempotent);
        assert!(!monoid_laws(MonoidKind::NatMax, &[0, 1]).self_inverse);
    }
}
