//! Lattice evaluation of the two-copy bound and pure-state concurrence.
//!
//! # Why the purity lattice suffices
//!
//! Write the doubled basis as `|a, b>` with `a`, `b` multi-indices of copy 1
//! and copy 2. The partial swap `S_A` exchanges the A-digits of `a` and `b`,
//! so
//!
//! ```text
//! Tr[(rho (x) rho) S_A] = sum_{a,b} rho[a, a'] rho[b, b']
//! ```
//!
//! where `a'` takes its A-digits from `b` and `b'` takes its A-digits from
//! `a`. Summing the complement digits first produces the reduced matrices,
//! leaving `sum rho_A[x, y] rho_A[y, x] = Tr[rho_A^2]`. Expanding the
//! projectors of `V` into swaps gives
//!
//! ```text
//! V = (4 - 2^(3-N)) S_full - 2^(2-N) sum_{A nontrivial} S_A
//! ```
//!
//! and therefore
//!
//! ```text
//! Tr[(rho (x) rho) V] = (4 - 2^(3-N)) Tr[rho^2] - 2^(2-N) sum_{A nontrivial} Tr[rho_A^2].
//! ```
//!
//! [`PurityTable`] holds `Tr[rho_A^2]` for every mask `A`, which is all the
//! evaluation needs; no `D^2`-dimensional object is ever formed.
//!
//! For pure states the same sum regroups over unordered cuts as
//! `2^(2-N) sum_cuts 2 (1 - Tr[rho_A^2]) = 2^(2-N) sum_cuts c_i^2 = C^2`,
//! so the bound is saturated.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertStructure, SubsystemMask};
use crate::states::{DensityMatrix, Ensemble, PureState, STATE_TOLERANCE};

/// Largest number of sites for which a purity lattice is tabulated.
pub const DEFAULT_LATTICE_CAP: usize = 14;

/// `Tr[rho_A^2]` for all `2^N` masks, indexed by mask bits.
#[derive(Debug, Clone, PartialEq)]
pub struct PurityTable {
    structure: HilbertStructure,
    values: Vec<f64>,
}

impl PurityTable {
    /// Wraps externally obtained values (e.g. reconstructed from parity
    /// data). Only completeness and finiteness are enforced; use
    /// [`PurityTable::physicality_violations`] to check the rest.
    pub fn from_values(structure: HilbertStructure, values: Vec<f64>) -> Result<Self> {
        let expected = 1usize << structure.sites();
        if values.len() != expected {
            return Err(Error::Integrity(format!(
                "purity table has {} entries, expected {expected}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Integrity(format!("purity table entry {i} is not finite")));
        }
        Ok(Self { structure, values })
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn value(&self, mask: SubsystemMask) -> f64 {
        self.values[mask.bits() as usize]
    }

    /// Raw table indexed by mask bits.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        *self.values.last().expect("nonempty table")
    }

    /// Masks whose value violates `0 < value <= 1 + tol` or whose empty-set
    /// entry is not 1.
    pub fn physicality_violations(&self) -> Vec<SubsystemMask> {
        self.structure
            .subsets()
            .filter(|&m| {
                let v = self.values[m.bits() as usize];
                if m.is_empty() {
                    (v - 1.0).abs() > STATE_TOLERANCE
                } else {
                    !(v > 0.0 && v <= 1.0 + STATE_TOLERANCE)
                }
            })
            .collect()
    }
}

fn check_lattice_cap(structure: &HilbertStructure, cap: usize) -> Result<()> {
    if structure.sites() > cap {
        return Err(Error::Capacity(format!(
            "{} sites exceed the purity-lattice cap of {cap}",
            structure.sites()
        )));
    }
    Ok(())
}

pub fn purity_table(rho: &DensityMatrix) -> Result<PurityTable> {
    purity_table_with_cap(rho, DEFAULT_LATTICE_CAP)
}

pub fn purity_table_with_cap(rho: &DensityMatrix, cap: usize) -> Result<PurityTable> {
    let s = rho.structure();
    check_lattice_cap(s, cap)?;
    let values: Vec<f64> = (0..1u64 << s.sites())
        .into_par_iter()
        .map(|bits| {
            if bits == 0 {
                1.0
            } else {
                rho.reduced_purity(SubsystemMask::new(bits, s.sites()).expect("in range"))
            }
        })
        .collect();
    PurityTable::from_values(s.clone(), values)
}

/// Purity lattice of `|psi><psi|`, straight from the amplitudes.
pub fn purity_table_pure(psi: &PureState) -> Result<PurityTable> {
    let s = psi.structure();
    check_lattice_cap(s, DEFAULT_LATTICE_CAP)?;
    let n = s.sites();
    let full = (1u64 << n) - 1;
    // Schmidt symmetry: evaluate each cut once and mirror it
    let half: Vec<(u64, f64)> = (0..1u64 << n)
        .into_par_iter()
        .filter(|&bits| bits & 1 == 1 && bits != full)
        .map(|bits| {
            let mask = SubsystemMask::new(bits, n).expect("in range");
            (bits, psi.reduced_purity(mask))
        })
        .collect();
    let mut values = vec![0.0; 1 << n];
    values[0] = 1.0;
    values[full as usize] = 1.0;
    for (bits, v) in half {
        values[bits as usize] = v;
        values[(full ^ bits) as usize] = v;
    }
    PurityTable::from_values(s.clone(), values)
}

/// `(4 - 2^(3-N)) t(full) - 2^(2-N) sum_{A nontrivial} t(A)`.
fn lattice_v(sites: usize, values: &[f64]) -> f64 {
    let n = sites as i32;
    let full = values.len() - 1;
    let nontrivial: f64 = values[1..full].iter().sum();
    (4.0 - 2f64.powi(3 - n)) * values[full] - 2f64.powi(2 - n) * nontrivial
}

/// `Tr[(rho (x) rho) V]`, possibly negative.
pub fn v_expectation(table: &PurityTable) -> f64 {
    lattice_v(table.structure.sites(), &table.values)
}

pub fn v_expectation_density(rho: &DensityMatrix) -> Result<f64> {
    Ok(v_expectation(&purity_table(rho)?))
}

/// `<psi (x) phi| V |psi (x) phi>`, from the reduced overlaps
/// `Tr[rho^psi_A rho^phi_A]`.
pub fn v_expectation_pair(psi: &PureState, phi: &PureState) -> Result<f64> {
    let s = psi.structure();
    check_lattice_cap(s, DEFAULT_LATTICE_CAP)?;
    let values = s
        .subsets()
        .map(|m| psi.reduced_overlap(phi, m))
        .collect::<Result<Vec<f64>>>()?;
    Ok(lattice_v(s.sites(), &values))
}

/// The bound clamped at zero.
pub fn clamped_bound(v: f64) -> f64 {
    v.max(0.0)
}

/// Concurrence-scale estimate `sqrt(max(v, 0))`.
pub fn sqrt_clamped_bound(v: f64) -> f64 {
    clamped_bound(v).sqrt()
}

/// Expectation data for one cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutTerm {
    /// Canonical side (contains site 0).
    pub mask: SubsystemMask,
    pub purity_side: f64,
    pub purity_complement: f64,
    /// `<v_i> = 2 Tr[rho^2] - Tr[rho_A^2] - Tr[rho_Abar^2]`.
    pub v_cut: f64,
}

/// Per-cut terms; `v_expectation = 2^(2-N) sum v_cut`.
pub fn cut_terms(table: &PurityTable) -> Result<Vec<CutTerm>> {
    let purity = table.purity();
    Ok(table
        .structure
        .bipartitions()?
        .map(|mask| {
            let a = table.value(mask);
            let b = table.value(mask.complement());
            CutTerm {
                mask,
                purity_side: a,
                purity_complement: b,
                v_cut: 2.0 * purity - a - b,
            }
        })
        .collect())
}

fn check_cut(structure: &HilbertStructure, mask: SubsystemMask) -> Result<()> {
    if mask.sites() != structure.sites() {
        return Err(Error::Shape(format!(
            "mask over {} sites for a {}-site system",
            mask.sites(),
            structure.sites()
        )));
    }
    if mask.is_trivial() {
        return Err(Error::Domain(format!("{mask} is a trivial cut")));
    }
    Ok(())
}

/// `c = sqrt(2 (1 - Tr[rho_A^2]))` for the cut `(A | complement)`.
pub fn bipartite_concurrence_pure(psi: &PureState, mask: SubsystemMask) -> Result<f64> {
    check_cut(psi.structure(), mask)?;
    Ok((2.0 * (1.0 - psi.reduced_purity(mask))).max(0.0).sqrt())
}

/// Multipartite concurrence of a pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrenceValue {
    value: f64,
    system: HilbertStructure,
}

impl ConcurrenceValue {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn system(&self) -> &HilbertStructure {
        &self.system
    }

    /// Largest attainable value: every cut at its maximal
    /// `c_i^2 = 2 (1 - 1/min(d_A, d_Abar))`.
    pub fn upper_limit(system: &HilbertStructure) -> Result<f64> {
        let n = system.sites() as i32;
        let total = system.dim();
        let sum: f64 = system
            .bipartitions()?
            .map(|m| {
                let d = system.dim_of(m).min(total / system.dim_of(m));
                2.0 * (1.0 - 1.0 / d as f64)
            })
            .sum();
        Ok(2f64.powf(1.0 - n as f64 / 2.0) * sum.sqrt())
    }
}

/// `C = 2^(1 - N/2) sqrt(sum_cuts c_i^2)` over the `2^(N-1) - 1` cuts.
pub fn concurrence_pure(psi: &PureState) -> Result<ConcurrenceValue> {
    concurrence_from_table(&purity_table_pure(psi)?)
}

/// Pure-state concurrence from a pure state's purity lattice.
pub fn concurrence_from_table(table: &PurityTable) -> Result<ConcurrenceValue> {
    let s = table.structure();
    let n = s.sites() as f64;
    let sum_sq: f64 = s
        .bipartitions()?
        .map(|m| (2.0 * (1.0 - table.value(m))).max(0.0))
        .sum();
    Ok(ConcurrenceValue {
        value: 2f64.powf(1.0 - n / 2.0) * sum_sq.sqrt(),
        system: s.clone(),
    })
}

/// `sum_j p_j C(psi_j)` for one given decomposition; an upper reference for
/// the convex roof `C(rho)`.
pub fn ensemble_average_concurrence(ensemble: &Ensemble) -> Result<f64> {
    ensemble
        .members()
        .iter()
        .map(|(p, psi)| Ok(p * concurrence_pure(psi)?.value()))
        .sum()
}
