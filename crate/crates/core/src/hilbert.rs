//! Index arithmetic for multipartite Hilbert spaces.
//!
//! Sites are numbered `0..N` and composed big-endian: site 0 is the most
//! significant factor of a flat index, so `|a_0 a_1 ... a_{N-1}>` sits at
//! `((a_0 * d_1 + a_1) * d_2 + ...)`. This matches left-to-right Kronecker
//! composition and is used everywhere in the crate.
//!
//! The doubled (two-copy) space is laid out copy-major: factors are ordered
//! `(copy 1: sites 0..N, copy 2: sites 0..N)`, so that `rho (x) rho` is a
//! literal Kronecker product.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap on the doubled-space dimension `D^2`.
pub const DEFAULT_DOUBLED_DIM_CAP: u128 = 1 << 32;

/// Local dimensions of an N-partite system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertStructure {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl HilbertStructure {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_DOUBLED_DIM_CAP)
    }

    /// Builds a structure, rejecting it when the doubled dimension `D^2`
    /// exceeds `doubled_cap`.
    pub fn with_cap(dims: Vec<usize>, doubled_cap: u128) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Domain("a system needs at least one site".into()));
        }
        if dims.len() > 63 {
            return Err(Error::Capacity(format!(
                "{} sites exceed the 63-site mask width",
                dims.len()
            )));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::Domain(format!("local dimension {d} is below 2")));
        }
        let mut total: u128 = 1;
        for &d in &dims {
            total = total.saturating_mul(d as u128);
            if total.saturating_mul(total) > doubled_cap {
                return Err(Error::Capacity(format!(
                    "doubled dimension of {dims:?} exceeds the cap {doubled_cap}"
                )));
            }
        }
        let total = total as usize;
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len() - 1).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Ok(Self {
            dims,
            strides,
            total,
        })
    }

    /// `n` sites of dimension `d`.
    pub fn uniform(n: usize, d: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::uniform(n, 2)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn sites(&self) -> usize {
        self.dims.len()
    }

    /// Total dimension `D`.
    pub fn dim(&self) -> usize {
        self.total
    }

    /// Dimension of the subsystem selected by `mask`.
    pub fn dim_of(&self, mask: SubsystemMask) -> usize {
        mask.sites_iter().map(|i| self.dims[i]).product()
    }

    /// Structure of the kept sites, in their original order. `None` for the
    /// empty mask.
    pub fn restrict(&self, mask: SubsystemMask) -> Option<HilbertStructure> {
        let dims: Vec<usize> = mask.sites_iter().map(|i| self.dims[i]).collect();
        if dims.is_empty() {
            None
        } else {
            // A restriction never grows the dimension, so the cap cannot trip.
            Some(Self::with_cap(dims, u128::MAX).expect("restriction of a valid structure"))
        }
    }

    /// Structure of the doubled space in copy-major order.
    pub fn doubled(&self) -> Result<HilbertStructure> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&self.dims);
        Self::with_cap(dims, u128::MAX)
    }

    pub fn flat_index(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.sites() {
            return Err(Error::Index(format!(
                "multi-index has {} components, expected {}",
                multi.len(),
                self.sites()
            )));
        }
        let mut flat = 0;
        for (site, (&m, &d)) in multi.iter().zip(&self.dims).enumerate() {
            if m >= d {
                return Err(Error::Index(format!(
                    "component {m} at site {site} is out of range for dimension {d}"
                )));
            }
            flat = flat * d + m;
        }
        Ok(flat)
    }

    pub fn unflatten(&self, flat: usize) -> Result<Vec<usize>> {
        if flat >= self.total {
            return Err(Error::Index(format!(
                "flat index {flat} out of range for dimension {}",
                self.total
            )));
        }
        Ok((0..self.sites()).map(|i| self.digit(flat, i)).collect())
    }

    /// Local index of `site` inside a flat index.
    #[inline]
    pub fn digit(&self, flat: usize, site: usize) -> usize {
        (flat / self.strides[site]) % self.dims[site]
    }

    #[inline]
    pub fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    /// For every flat index, its flat index within the kept subsystem and
    /// within the complement (both big-endian in the original site order).
    pub fn split_indices(&self, keep: SubsystemMask) -> (Vec<usize>, Vec<usize>) {
        let mut kept = vec![0usize; self.total];
        let mut rest = vec![0usize; self.total];
        for x in 0..self.total {
            let (mut k, mut r) = (0usize, 0usize);
            for site in 0..self.sites() {
                let digit = self.digit(x, site);
                if keep.contains(site) {
                    k = k * self.dims[site] + digit;
                } else {
                    r = r * self.dims[site] + digit;
                }
            }
            kept[x] = k;
            rest[x] = r;
        }
        (kept, rest)
    }

    /// All `2^N` subsystem masks, from the empty set to the full set.
    pub fn subsets(&self) -> impl Iterator<Item = SubsystemMask> + '_ {
        let n = self.sites();
        (0..1u64 << n).map(move |bits| SubsystemMask { bits, sites: n })
    }

    /// The `2^(N-1) - 1` nontrivial unordered bipartitions, each represented
    /// by the side that contains site 0.
    pub fn bipartitions(&self) -> Result<impl Iterator<Item = SubsystemMask> + '_> {
        let n = self.sites();
        if n < 2 {
            return Err(Error::Domain(
                "a single-site system has no bipartitions".into(),
            ));
        }
        let full = (1u64 << n) - 1;
        Ok((0..1u64 << (n - 1))
            .map(move |rest| SubsystemMask {
                bits: 1 | (rest << 1),
                sites: n,
            })
            .filter(move |m| m.bits != full))
    }
}

impl fmt::Display for HilbertStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.dims)
    }
}

/// A subset of the sites of an N-partite system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsystemMask {
    bits: u64,
    sites: usize,
}

impl SubsystemMask {
    pub fn new(bits: u64, sites: usize) -> Result<Self> {
        if sites > 63 {
            return Err(Error::Capacity(format!("{sites} sites exceed mask width")));
        }
        if bits >> sites != 0 {
            return Err(Error::Index(format!(
                "mask {bits:#b} has members outside {sites} sites"
            )));
        }
        Ok(Self { bits, sites })
    }

    pub fn from_sites(members: &[usize], sites: usize) -> Result<Self> {
        let mut bits = 0u64;
        for &m in members {
            if m >= sites {
                return Err(Error::Index(format!("site {m} out of range for {sites} sites")));
            }
            bits |= 1 << m;
        }
        Self::new(bits, sites)
    }

    pub fn empty(sites: usize) -> Self {
        Self { bits: 0, sites }
    }

    pub fn full(sites: usize) -> Self {
        Self {
            bits: (1u64 << sites) - 1,
            sites,
        }
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    /// Number of sites of the underlying system.
    pub fn sites(self) -> usize {
        self.sites
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn is_full(self) -> bool {
        self == Self::full(self.sites)
    }

    /// Empty and full masks are the trivial cuts.
    pub fn is_trivial(self) -> bool {
        self.is_empty() || self.is_full()
    }

    #[inline]
    pub fn contains(self, site: usize) -> bool {
        site < self.sites && self.bits & (1 << site) != 0
    }

    pub fn complement(self) -> Self {
        Self {
            bits: !self.bits & Self::full(self.sites).bits,
            sites: self.sites,
        }
    }

    pub fn symmetric_difference(self, other: Self) -> Self {
        Self {
            bits: self.bits ^ other.bits,
            sites: self.sites,
        }
    }

    /// The side of the bipartition `{self, complement}` containing site 0.
    pub fn canonical(self) -> Self {
        if self.contains(0) {
            self
        } else {
            self.complement()
        }
    }

    pub fn sites_iter(self) -> impl Iterator<Item = usize> {
        (0..self.sites).filter(move |&i| self.contains(i))
    }
}

impl fmt::Display for SubsystemMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let members: Vec<String> = self.sites_iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", members.join(","))
    }
}

fn check_permutation(factor_dims: &[usize], perm: &[usize]) -> Result<()> {
    if perm.len() != factor_dims.len() {
        return Err(Error::Shape(format!(
            "permutation of length {} for {} factors",
            perm.len(),
            factor_dims.len()
        )));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Shape(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

/// For each input flat index, the output flat index after reordering the
/// factors so that output factor `k` is input factor `perm[k]`.
fn permutation_index_map(factor_dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let total: usize = factor_dims.iter().product();
    let mut in_strides = vec![1usize; factor_dims.len()];
    for i in (0..factor_dims.len().saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * factor_dims[i + 1];
    }
    let out_dims: Vec<usize> = perm.iter().map(|&p| factor_dims[p]).collect();
    (0..total)
        .map(|x| {
            perm.iter().zip(&out_dims).fold(0, |acc, (&p, &d)| {
                acc * d + (x / in_strides[p]) % factor_dims[p]
            })
        })
        .collect()
}

/// Reorders the tensor factors of a vector; output factor `k` is input
/// factor `perm[k]`.
pub fn permute_vector(
    v: &DVector<Complex64>,
    factor_dims: &[usize],
    perm: &[usize],
) -> Result<DVector<Complex64>> {
    check_permutation(factor_dims, perm)?;
    let total: usize = factor_dims.iter().product();
    if v.len() != total {
        return Err(Error::Shape(format!(
            "vector of length {} for factors {factor_dims:?}",
            v.len()
        )));
    }
    let map = permutation_index_map(factor_dims, perm);
    let mut out = DVector::zeros(total);
    for (x, &y) in map.iter().enumerate() {
        out[y] = v[x];
    }
    Ok(out)
}

/// Reorders the tensor factors of an operator (rows and columns alike).
pub fn permute_operator(
    m: &DMatrix<Complex64>,
    factor_dims: &[usize],
    perm: &[usize],
) -> Result<DMatrix<Complex64>> {
    check_permutation(factor_dims, perm)?;
    let total: usize = factor_dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::Shape(format!(
            "{}x{} operator for factors {factor_dims:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    let map = permutation_index_map(factor_dims, perm);
    let mut out = DMatrix::zeros(total, total);
    for (c, &oc) in map.iter().enumerate() {
        for (r, &or) in map.iter().enumerate() {
            out[(or, oc)] = m[(r, c)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_examples() {
        let s = HilbertStructure::new(vec![2, 2]).unwrap();
        assert_eq!(s.flat_index(&[0, 0]).unwrap(), 0);
        let s = HilbertStructure::new(vec![2, 3]).unwrap();
        assert_eq!(s.flat_index(&[1, 2]).unwrap(), 5);
        assert!(matches!(s.flat_index(&[2, 0]), Err(Error::Index(_))));
        assert!(matches!(s.flat_index(&[0]), Err(Error::Index(_))));
        assert!(matches!(s.unflatten(6), Err(Error::Index(_))));
    }

    #[test]
    fn roundtrip_small_structures() {
        for n in 1..=6 {
            for pattern in 0..1u32 << n {
                let dims: Vec<usize> = (0..n).map(|i| 2 + ((pattern >> i) & 1) as usize).collect();
                let s = HilbertStructure::new(dims).unwrap();
                for x in 0..s.dim() {
                    let m = s.unflatten(x).unwrap();
                    assert_eq!(s.flat_index(&m).unwrap(), x);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_structures() {
        assert!(matches!(HilbertStructure::new(vec![]), Err(Error::Domain(_))));
        assert!(matches!(HilbertStructure::new(vec![2, 1]), Err(Error::Domain(_))));
        assert!(matches!(
            HilbertStructure::with_cap(vec![4, 4, 4], 1 << 10),
            Err(Error::Capacity(_))
        ));
        assert!(HilbertStructure::with_cap(vec![4, 4], 1 << 10).is_ok());
        assert!(matches!(HilbertStructure::qubits(40), Err(Error::Capacity(_))));
    }

    #[test]
    fn bipartition_counts() {
        assert!(matches!(
            HilbertStructure::qubits(1).unwrap().bipartitions().err(),
            Some(Error::Domain(_))
        ));
        let s = HilbertStructure::qubits(2).unwrap();
        let cuts: Vec<_> = s.bipartitions().unwrap().collect();
        assert_eq!(cuts, vec![SubsystemMask::from_sites(&[0], 2).unwrap()]);
        assert_eq!(HilbertStructure::qubits(3).unwrap().bipartitions().unwrap().count(), 3);
        let s = HilbertStructure::qubits(5).unwrap();
        assert_eq!(s.bipartitions().unwrap().count(), 15);
        assert_eq!(s.subsets().count(), 32);
        for n in 2..=7 {
            let s = HilbertStructure::qubits(n).unwrap();
            let cuts: Vec<_> = s.bipartitions().unwrap().collect();
            assert_eq!(cuts.len(), (1 << (n - 1)) - 1);
            for c in &cuts {
                assert!(!c.is_trivial());
                assert!(!cuts.contains(&c.complement()));
            }
        }
    }

    #[test]
    fn canonical_is_complement_invariant() {
        for m in HilbertStructure::qubits(4).unwrap().subsets() {
            assert_eq!(m.canonical(), m.complement().canonical());
            assert_eq!(m.complement().len(), 4 - m.len());
            assert!(m.canonical().contains(0));
        }
        assert!(SubsystemMask::new(0b100, 2).is_err());
    }

    #[test]
    fn split_indices_big_endian() {
        let s = HilbertStructure::new(vec![2, 3, 2]).unwrap();
        let keep = SubsystemMask::from_sites(&[1], 3).unwrap();
        let (k, r) = s.split_indices(keep);
        let x = s.flat_index(&[1, 2, 0]).unwrap();
        assert_eq!(k[x], 2);
        assert_eq!(r[x], 2);
    }

    fn random_matrix(d: usize, seed: u64) -> DMatrix<Complex64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn permute_kron_swap() {
        let x = random_matrix(2, 1);
        let y = random_matrix(2, 2);
        let xy = x.kronecker(&y);
        let yx = y.kronecker(&x);
        let swapped = permute_operator(&xy, &[2, 2], &[1, 0]).unwrap();
        assert!((swapped - &yx).norm() < 1e-14);
        let twice = permute_operator(&permute_operator(&xy, &[2, 2], &[1, 0]).unwrap(), &[2, 2], &[1, 0]).unwrap();
        assert_eq!(twice, xy);
        assert_eq!(permute_operator(&xy, &[2, 2], &[0, 1]).unwrap(), xy);
    }

    #[test]
    fn permute_unequal_factors() {
        let x = random_matrix(2, 3);
        let y = random_matrix(3, 4);
        let swapped = permute_operator(&x.kronecker(&y), &[2, 3], &[1, 0]).unwrap();
        assert!((swapped - y.kronecker(&x)).norm() < 1e-14);
        assert!(matches!(
            permute_operator(&x.kronecker(&y), &[2, 2], &[1, 0]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            permute_operator(&x.kronecker(&y), &[2, 3], &[0, 0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn permute_vector_inverse() {
        let dims = [2, 3, 2];
        let v = DVector::from_fn(12, |i, _| Complex64::new(i as f64, -(i as f64) / 3.0));
        let perm = [2, 0, 1];
        let out = permute_vector(&v, &dims, &perm).unwrap();
        let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        let back = permute_vector(&out, &out_dims, &invert_permutation(&perm)).unwrap();
        assert_eq!(back, v);
    }
}
