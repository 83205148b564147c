use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

/// Identity token of a space. Subsets remember the space they were cut from
/// so operations can refuse to mix points of different spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpaceId(usize);

impl SpaceId {
    pub(crate) fn fresh() -> Self {
        static NEXT: AtomicUsize = AtomicUsize::new(1);
        SpaceId(NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

/// A finite subset of a space's points, stored as a membership vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    parent: SpaceId,
    members: Vec<bool>,
}

impl SubsetMask {
    pub(crate) fn new_empty(parent: SpaceId, len: usize) -> Self {
        SubsetMask { parent, members: alloc::vec![false; len] }
    }

    pub(crate) fn new_full(parent: SpaceId, len: usize) -> Self {
        SubsetMask { parent, members: alloc::vec![true; len] }
    }

    pub(crate) fn from_members(parent: SpaceId, members: Vec<bool>) -> Self {
        SubsetMask { parent, members }
    }

    pub(crate) fn with_indices(parent: SpaceId, len: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = Self::new_empty(parent, len);
        for &i in indices {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, len });
            }
            mask.members[i] = true;
        }
        Ok(mask)
    }

    pub fn parent(&self) -> SpaceId {
        self.parent
    }

    /// Number of points in the parent space.
    pub fn universe_len(&self) -> usize {
        self.members.len()
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn is_full(&self) -> bool {
        self.members.iter().all(|&m| m)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.get(i).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, i: usize) -> Result<()> {
        let len = self.members.len();
        let slot = self.members.get_mut(i).ok_or(Error::IndexOutOfRange { index: i, len })?;
        *slot = true;
        Ok(())
    }

    pub fn remove(&mut self, i: usize) -> Result<()> {
        let len = self.members.len();
        let slot = self.members.get_mut(i).ok_or(Error::IndexOutOfRange { index: i, len })?;
        *slot = false;
        Ok(())
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    /// Member indices in increasing order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.indices().collect()
    }

    pub fn same_parent(&self, other: &SubsetMask) -> Result<()> {
        if self.parent == other.parent && self.members.len() == other.members.len() {
            Ok(())
        } else {
            Err(Error::ParentMismatch)
        }
    }

    pub fn union(&self, other: &SubsetMask) -> Result<SubsetMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &SubsetMask) -> Result<SubsetMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &SubsetMask) -> Result<SubsetMask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> SubsetMask {
        SubsetMask { parent: self.parent, members: self.members.iter().map(|&m| !m).collect() }
    }

    /// `false` when the subsets live in different spaces.
    pub fn is_subset_of(&self, other: &SubsetMask) -> bool {
        self.same_parent(other).is_ok() && self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    fn zip_with(&self, other: &SubsetMask, f: impl Fn(bool, bool) -> bool) -> Result<SubsetMask> {
        self.same_parent(other)?;
        Ok(SubsetMask {
            parent: self.parent,
            members: self.members.iter().zip(&other.members).map(|(&a, &b)| f(a, b)).collect(),
        })
    }
}
