//! Explicit two-copy operators on `H (x) H`.
//!
//! Everything here materializes `D^2 x D^2` matrices and is meant as the
//! brute-force reference for the lattice evaluation in [`crate::bound`].
//! The building block is the partial swap `S_A`, which exchanges the
//! A-sites of copy 1 with those of copy 2. With `P^i_(+/-) = (1 +/- S_i)/2`
//! and `P_(+/-) = (1 +/- S_full)/2`, the product of local symmetric
//! projectors expands as `2^-N sum_A S_A`, and the observable
//!
//! ```text
//! V = 4 (P_+ - P^1_+ ... P^N_+ - (1 - 2^(1-N)) P_-)
//! ```
//!
//! collapses to the swap sum
//!
//! ```text
//! V = (4 - 2^(3-N)) S_full - 2^(2-N) sum_{A nontrivial} S_A,
//! ```
//!
//! which is how [`build_v`] assembles it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{permute_operator, HilbertStructure, SubsystemMask};
use crate::states::{trace_of_product, DensityMatrix, PureState, IMAGINARY_RESIDUE_LIMIT};

/// Largest number of entries of an explicit two-copy operator.
pub const MAX_TWO_COPY_ENTRIES: usize = 1 << 20;

/// Outcome of a parity measurement on one particle-copy pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairParity {
    /// Symmetric subspace, `P_+`.
    Plus,
    /// Antisymmetric subspace, `P_-`.
    Minus,
}

impl PairParity {
    pub fn sign(self) -> f64 {
        match self {
            PairParity::Plus => 1.0,
            PairParity::Minus => -1.0,
        }
    }
}

/// Dense operator on the copy-major doubled space.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoCopyOperator {
    structure: HilbertStructure,
    matrix: DMatrix<Complex64>,
}

impl TwoCopyOperator {
    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// `|P^2 - P|_F`.
    pub fn idempotency_defect(&self) -> f64 {
        (&self.matrix * &self.matrix - &self.matrix).norm()
    }

    pub fn frobenius_distance(&self, other: &TwoCopyOperator) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    /// Spectral radius of the Hermitian part.
    pub fn max_abs_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()).scale(0.5);
        h.symmetric_eigenvalues().iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }

    fn scaled_sum(&self, a: f64, other: &TwoCopyOperator, b: f64) -> TwoCopyOperator {
        TwoCopyOperator {
            structure: self.structure.clone(),
            matrix: self.matrix.scale(a) + other.matrix.scale(b),
        }
    }

    fn product(&self, other: &TwoCopyOperator) -> TwoCopyOperator {
        TwoCopyOperator {
            structure: self.structure.clone(),
            matrix: &self.matrix * &other.matrix,
        }
    }
}

/// Fails with a capacity error when an explicit two-copy operator for
/// `structure` would exceed [`MAX_TWO_COPY_ENTRIES`].
pub fn check_two_copy_capacity(structure: &HilbertStructure) -> Result<()> {
    let doubled = structure.dim() as u128 * structure.dim() as u128;
    if doubled * doubled > MAX_TWO_COPY_ENTRIES as u128 {
        return Err(Error::Capacity(format!(
            "explicit two-copy operators for {structure} need {doubled}x{doubled} entries \
             (cap {MAX_TWO_COPY_ENTRIES}); evaluate through the purity lattice instead"
        )));
    }
    Ok(())
}

fn identity(structure: &HilbertStructure) -> TwoCopyOperator {
    let dd = structure.dim() * structure.dim();
    TwoCopyOperator {
        structure: structure.clone(),
        matrix: DMatrix::identity(dd, dd),
    }
}

/// Image of the doubled basis index `(a, b)` under `S_A`.
#[inline]
fn swapped_index(structure: &HilbertStructure, mask: SubsystemMask, a: usize, b: usize) -> (usize, usize) {
    let (mut a2, mut b2) = (a, b);
    for site in mask.sites_iter() {
        let stride = structure.stride(site);
        let da = structure.digit(a, site);
        let db = structure.digit(b, site);
        a2 = a2 + db * stride - da * stride;
        b2 = b2 + da * stride - db * stride;
    }
    (a2, b2)
}

/// Adds `coeff * S_A` into `out`.
fn accumulate_swap(structure: &HilbertStructure, mask: SubsystemMask, coeff: f64, out: &mut DMatrix<Complex64>) {
    let d = structure.dim();
    for a in 0..d {
        for b in 0..d {
            let (a2, b2) = swapped_index(structure, mask, a, b);
            out[(a2 * d + b2, a * d + b)] += Complex64::new(coeff, 0.0);
        }
    }
}

/// Partial swap `S_A` between the two copies.
pub fn swap_subset(structure: &HilbertStructure, mask: SubsystemMask) -> Result<TwoCopyOperator> {
    check_two_copy_capacity(structure)?;
    check_mask(structure, mask)?;
    let dd = structure.dim() * structure.dim();
    let mut matrix = DMatrix::zeros(dd, dd);
    accumulate_swap(structure, mask, 1.0, &mut matrix);
    Ok(TwoCopyOperator {
        structure: structure.clone(),
        matrix,
    })
}

fn check_mask(structure: &HilbertStructure, mask: SubsystemMask) -> Result<()> {
    if mask.sites() != structure.sites() {
        return Err(Error::Shape(format!(
            "mask over {} sites for a {}-site system",
            mask.sites(),
            structure.sites()
        )));
    }
    Ok(())
}

/// `(1 +/- SWAP) / 2` on `C^d (x) C^d`.
fn local_pair_projector(d: usize, parity: PairParity) -> DMatrix<Complex64> {
    let mut m = DMatrix::identity(d * d, d * d).scale(0.5);
    let half = Complex64::new(0.5 * parity.sign(), 0.0);
    for a in 0..d {
        for b in 0..d {
            m[(b * d + a, a * d + b)] += half;
        }
    }
    m
}

/// `P^1_(s_1) (x) ... (x) P^N_(s_N)`, each factor acting on the pair
/// (copy-1 site i, copy-2 site i), embedded in the copy-major layout.
pub fn pair_parity_projectors(structure: &HilbertStructure, signs: &[PairParity]) -> Result<TwoCopyOperator> {
    let n = structure.sites();
    if signs.len() != n {
        return Err(Error::Shape(format!("{} signs for {n} sites", signs.len())));
    }
    check_two_copy_capacity(structure)?;
    // pair-major factors: (c1 s0, c2 s0, c1 s1, c2 s1, ...)
    let mut pair_major = DMatrix::identity(1, 1);
    let mut factor_dims = Vec::with_capacity(2 * n);
    for (&d, &s) in structure.dims().iter().zip(signs) {
        pair_major = pair_major.kronecker(&local_pair_projector(d, s));
        factor_dims.extend([d, d]);
    }
    let perm: Vec<usize> = (0..n).map(|i| 2 * i).chain((0..n).map(|i| 2 * i + 1)).collect();
    let matrix = permute_operator(&pair_major, &factor_dims, &perm)?;
    Ok(TwoCopyOperator {
        structure: structure.clone(),
        matrix,
    })
}

/// Block-parity projector `(1 +/- S_A) / 2`.
fn block_projector(structure: &HilbertStructure, mask: SubsystemMask, parity: PairParity) -> Result<TwoCopyOperator> {
    let swap = swap_subset(structure, mask)?;
    Ok(identity(structure).scaled_sum(0.5, &swap, 0.5 * parity.sign()))
}

/// Global projectors `(P_+, P_-)` onto the copy-exchange symmetric and
/// antisymmetric subspaces.
pub fn global_projectors(structure: &HilbertStructure) -> Result<(TwoCopyOperator, TwoCopyOperator)> {
    let full = SubsystemMask::full(structure.sites());
    Ok((
        block_projector(structure, full, PairParity::Plus)?,
        block_projector(structure, full, PairParity::Minus)?,
    ))
}

/// The observable `V`, assembled from its swap-sum form.
pub fn build_v(structure: &HilbertStructure) -> Result<TwoCopyOperator> {
    check_two_copy_capacity(structure)?;
    let n = structure.sites() as i32;
    let dd = structure.dim() * structure.dim();
    let mut matrix = DMatrix::zeros(dd, dd);
    let full = SubsystemMask::full(structure.sites());
    accumulate_swap(structure, full, 4.0 - 2f64.powi(3 - n), &mut matrix);
    let weight = -(2f64.powi(2 - n));
    for mask in structure.subsets().filter(|m| !m.is_trivial()) {
        accumulate_swap(structure, mask, weight, &mut matrix);
    }
    Ok(TwoCopyOperator {
        structure: structure.clone(),
        matrix,
    })
}

/// `A = 4 (P_+ - P^1_+ ... P^N_+)`, whose two-copy expectation on a pure
/// state is its squared concurrence.
pub fn build_a(structure: &HilbertStructure) -> Result<TwoCopyOperator> {
    let (plus, _) = global_projectors(structure)?;
    let local = pair_parity_projectors(structure, &vec![PairParity::Plus; structure.sites()])?;
    Ok(plus.scaled_sum(4.0, &local, -4.0))
}

/// Bipartite observable for the cut `(A | complement)`:
/// `v = 4 (P_+ - P^A_+ P^Abar_+ - (P^A_- P^Abar_+ + P^A_+ P^Abar_-) / 2)`,
/// built from block-parity projectors. Equals `2 S_full - S_A - S_Abar`.
pub fn build_v_bipartite(structure: &HilbertStructure, mask: SubsystemMask) -> Result<TwoCopyOperator> {
    check_mask(structure, mask)?;
    if mask.is_trivial() {
        return Err(Error::Domain(format!("{mask} is a trivial cut")));
    }
    let a = mask.canonical();
    let b = a.complement();
    let (plus, _) = global_projectors(structure)?;
    let a_plus = block_projector(structure, a, PairParity::Plus)?;
    let a_minus = block_projector(structure, a, PairParity::Minus)?;
    let b_plus = block_projector(structure, b, PairParity::Plus)?;
    let b_minus = block_projector(structure, b, PairParity::Minus)?;
    let both_plus = a_plus.product(&b_plus);
    let one_minus = a_minus.product(&b_plus).scaled_sum(1.0, &a_plus.product(&b_minus), 1.0);
    let inner = plus.scaled_sum(1.0, &both_plus, -1.0).scaled_sum(1.0, &one_minus, -0.5);
    Ok(TwoCopyOperator {
        structure: structure.clone(),
        matrix: inner.matrix.scale(4.0),
    })
}

fn real_part_checked(value: Complex64) -> Result<f64> {
    if value.im.abs() > IMAGINARY_RESIDUE_LIMIT {
        return Err(Error::Numerical(format!(
            "two-copy expectation has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// `Tr[(rho (x) rho) O]`.
pub fn expectation_two_copy(rho: &DensityMatrix, op: &TwoCopyOperator) -> Result<f64> {
    if rho.structure() != op.structure() {
        return Err(Error::Shape(format!(
            "state on {} but operator on {}",
            rho.structure(),
            op.structure()
        )));
    }
    check_two_copy_capacity(rho.structure())?;
    let doubled = rho.matrix().kronecker(rho.matrix());
    real_part_checked(trace_of_product(&doubled, op.matrix()))
}

/// `<psi (x) phi| O |psi (x) phi>`.
pub fn expectation_product(psi: &PureState, phi: &PureState, op: &TwoCopyOperator) -> Result<f64> {
    if psi.structure() != op.structure() || phi.structure() != op.structure() {
        return Err(Error::Shape("states and operator live on different spaces".into()));
    }
    let joint: DVector<Complex64> = psi.amplitudes().kronecker(phi.amplitudes());
    real_part_checked(joint.dotc(&(op.matrix() * &joint)))
}
