use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::MAX_SITES;

/// Finite set of chain sites, stored as a bit mask (site 0 = bit 0).
///
/// Regions carry the lattice size so that complements are well defined.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    lattice_size: usize,
    mask: u32,
}

impl Region {
    pub fn new(sites: &[usize], lattice_size: usize) -> Result<Self> {
        check_lattice(lattice_size)?;
        let mut mask = 0u32;
        for &s in sites {
            if s >= lattice_size {
                return Err(Error::SiteOutOfBounds { site: s, lattice_size });
            }
            mask |= 1 << s;
        }
        Ok(Self { lattice_size, mask })
    }

    pub fn empty(lattice_size: usize) -> Self {
        Self { lattice_size, mask: 0 }
    }

    pub fn full(lattice_size: usize) -> Self {
        Self { lattice_size, mask: full_mask(lattice_size) }
    }

    pub fn singleton(site: usize, lattice_size: usize) -> Result<Self> {
        Self::new(&[site], lattice_size)
    }

    /// Contiguous block `start..end`.
    pub fn interval(start: usize, end: usize, lattice_size: usize) -> Result<Self> {
        let sites: Vec<usize> = (start..end).collect();
        Self::new(&sites, lattice_size)
    }

    pub(crate) fn from_mask(mask: u32, lattice_size: usize) -> Self {
        debug_assert_eq!(mask & !full_mask(lattice_size), 0);
        Self { lattice_size, mask }
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn lattice_size(&self) -> usize {
        self.lattice_size
    }

    /// Sites in ascending order.
    pub fn sites(&self) -> Vec<usize> {
        (0..self.lattice_size).filter(|&s| self.contains(s)).collect()
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn is_full(&self) -> bool {
        self.mask == full_mask(self.lattice_size)
    }

    pub fn contains(&self, site: usize) -> bool {
        site < self.lattice_size && self.mask & (1 << site) != 0
    }

    /// Least upper bound `α ∨ β`.
    pub fn union(&self, other: &Region) -> Region {
        debug_assert_eq!(self.lattice_size, other.lattice_size);
        Region::from_mask(self.mask | other.mask, self.lattice_size)
    }

    pub fn intersection(&self, other: &Region) -> Region {
        debug_assert_eq!(self.lattice_size, other.lattice_size);
        Region::from_mask(self.mask & other.mask, self.lattice_size)
    }

    pub fn complement(&self) -> Region {
        Region::from_mask(!self.mask & full_mask(self.lattice_size), self.lattice_size)
    }

    pub fn is_orthogonal(&self, other: &Region) -> bool {
        self.mask & other.mask == 0
    }

    pub fn intersects(&self, other: &Region) -> bool {
        !self.is_orthogonal(other)
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.mask & !other.mask == 0
    }

    /// All subregions, including the empty region and `self`.
    pub fn subregions(&self) -> impl Iterator<Item = Region> + '_ {
        // Standard submask enumeration, in increasing mask order.
        let full = self.mask;
        let l = self.lattice_size;
        let mut sub: Option<u32> = Some(0);
        std::iter::from_fn(move || {
            let current = sub?;
            sub = if current == full { None } else { Some(((current | !full).wrapping_add(1)) & full) };
            Some(Region::from_mask(current, l))
        })
    }

    pub fn proper_subregions(&self) -> impl Iterator<Item = Region> + '_ {
        let me = *self;
        self.subregions().filter(move |r| *r != me)
    }
}

fn full_mask(lattice_size: usize) -> u32 {
    if lattice_size >= 32 {
        u32::MAX
    } else {
        (1u32 << lattice_size) - 1
    }
}

pub(crate) fn check_lattice(lattice_size: usize) -> Result<()> {
    if lattice_size == 0 || lattice_size > MAX_SITES {
        Err(Error::LatticeSize(lattice_size))
    } else {
        Ok(())
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sites: Vec<String> = self.sites().iter().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", sites.join(","))
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Region{}/L={}", self, self.lattice_size)
    }
}

#[derive(Serialize, Deserialize)]
struct RegionRepr {
    sites: Vec<usize>,
    lattice_size: usize,
}

impl Serialize for Region {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RegionRepr { sites: self.sites(), lattice_size: self.lattice_size }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RegionRepr::deserialize(d)?;
        Region::new(&repr.sites, repr.lattice_size).map_err(serde::de::Error::custom)
    }
}
