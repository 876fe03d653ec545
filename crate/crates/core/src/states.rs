//! Pure and mixed states, partial traces, purities and state generators.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::hilbert::{HilbertStructure, SubsystemMask};

/// Tolerance for hermiticity, trace and normalization defects and for the
/// smallest admissible eigenvalue (`-STATE_TOLERANCE`).
pub const STATE_TOLERANCE: f64 = 1e-10;

/// Imaginary residue of a should-be-real trace above which we fail loudly.
pub const IMAGINARY_RESIDUE_LIMIT: f64 = 1e-8;

/// Derives the seed of the `index`-th member of a batch from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = index.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    master ^ (z ^ (z >> 31))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    structure: HilbertStructure,
    amplitudes: DVector<Complex64>,
}

impl PureState {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(structure: HilbertStructure, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != structure.dim() {
            return Err(Error::Shape(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                structure.dim()
            )));
        }
        let norm_sq = amplitudes.norm_squared();
        if !norm_sq.is_finite() || (norm_sq.sqrt() - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(ValidationReport {
                hermiticity_defect: 0.0,
                trace_defect: (norm_sq - 1.0).abs(),
                min_eigenvalue: 0.0,
            }));
        }
        Ok(Self {
            structure,
            amplitudes,
        })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(structure: HilbertStructure, amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("cannot normalize a zero vector".into()));
        }
        Self::new(structure, amplitudes.unscale(norm))
    }

    /// Computational basis state `|digits>`.
    pub fn basis(structure: HilbertStructure, digits: &[usize]) -> Result<Self> {
        let x = structure.flat_index(digits)?;
        let mut amplitudes = DVector::zeros(structure.dim());
        amplitudes[x] = Complex64::new(1.0, 0.0);
        Self::new(structure, amplitudes)
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn to_density(&self) -> DensityMatrix {
        density_from_pure(self)
    }

    /// Amplitudes reshaped to a `d_A x d_Abar` matrix for the cut `keep`.
    fn reshape(&self, keep: SubsystemMask) -> DMatrix<Complex64> {
        let d_keep = self.structure.dim_of(keep);
        let d_rest = self.structure.dim() / d_keep;
        let (kept, rest) = self.structure.split_indices(keep);
        let mut m = DMatrix::zeros(d_keep, d_rest);
        for (x, amp) in self.amplitudes.iter().enumerate() {
            m[(kept[x], rest[x])] = *amp;
        }
        m
    }

    /// Reduced density matrix on `keep`, computed from the amplitudes.
    pub fn reduced(&self, keep: SubsystemMask) -> DMatrix<Complex64> {
        let m = self.reshape(keep);
        &m * m.adjoint()
    }

    /// `Tr[rho_A sigma_A]` for `rho = |self><self|`, `sigma = |other><other|`.
    ///
    /// With `M`, `N` the reshaped amplitudes this is `Tr[M M^+ N N^+]`,
    /// evaluated on whichever side of the cut is smaller. With
    /// `other == self` it is the reduced purity.
    pub fn reduced_overlap(&self, other: &PureState, keep: SubsystemMask) -> Result<f64> {
        if self.structure != other.structure {
            return Err(Error::Shape(format!(
                "structures {} and {} differ",
                self.structure, other.structure
            )));
        }
        if keep.is_empty() {
            return Ok(self.inner(self).re * other.inner(other).re);
        }
        let m = self.reshape(keep);
        let n = other.reshape(keep);
        let value = if m.nrows() <= m.ncols() {
            // Tr[(M M^+)(N N^+)] over the kept side
            let rho = &m * m.adjoint();
            let sigma = &n * n.adjoint();
            trace_of_product(&rho, &sigma)
        } else {
            // Tr[(M^+ N)(N^+ M)] = |M^+ N|_F^2 over the complement
            Complex64::new((m.adjoint() * &n).norm_squared(), 0.0)
        };
        Ok(value.re)
    }

    pub fn reduced_purity(&self, keep: SubsystemMask) -> f64 {
        self.reduced_overlap(self, keep)
            .expect("a state shares its own structure")
    }
}

/// `Tr[a b]` without forming the product.
pub(crate) fn trace_of_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Defects measured against the physicality conditions of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub hermiticity_defect: f64,
    /// `|Tr rho - 1|`.
    pub trace_defect: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
}

impl ValidationReport {
    pub fn is_physical(&self) -> bool {
        self.hermiticity_defect <= STATE_TOLERANCE
            && self.trace_defect <= STATE_TOLERANCE
            && self.min_eigenvalue >= -STATE_TOLERANCE
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hermiticity defect {:e}, trace defect {:e}, min eigenvalue {:e}",
            self.hermiticity_defect, self.trace_defect, self.min_eigenvalue
        )
    }
}

pub fn validate(structure: &HilbertStructure, matrix: &DMatrix<Complex64>) -> Result<ValidationReport> {
    let d = structure.dim();
    if matrix.nrows() != d || matrix.ncols() != d {
        return Err(Error::Shape(format!(
            "{}x{} matrix for dimension {d}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let mut hermiticity_defect = 0.0f64;
    for i in 0..d {
        for j in i..d {
            hermiticity_defect = hermiticity_defect.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
        }
    }
    let trace_defect = (matrix.trace() - Complex64::new(1.0, 0.0)).norm();
    let hermitian_part = (matrix + matrix.adjoint()).scale(0.5);
    let min_eigenvalue = hermitian_part
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let report = ValidationReport {
        hermiticity_defect,
        trace_defect,
        min_eigenvalue: if min_eigenvalue.is_finite() { min_eigenvalue } else { f64::NAN },
    };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    structure: HilbertStructure,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates `matrix` and wraps it.
    pub fn new(structure: HilbertStructure, matrix: DMatrix<Complex64>) -> Result<Self> {
        let report = validate(&structure, &matrix)?;
        if !report.is_physical() {
            return Err(Error::InvalidState(report));
        }
        Ok(Self { structure, matrix })
    }

    /// For matrices that are physical by construction.
    pub(crate) fn from_trusted(structure: HilbertStructure, matrix: DMatrix<Complex64>) -> Self {
        Self { structure, matrix }
    }

    pub fn maximally_mixed(structure: HilbertStructure) -> Self {
        let d = structure.dim();
        let matrix = DMatrix::identity(d, d).unscale(d as f64);
        Self { structure, matrix }
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.structure, &self.matrix).expect("dimension fixed at construction")
    }

    /// `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        trace_of_product(&self.matrix, &self.matrix).re
    }

    /// Reduced matrix on `keep` (sites in original order). The empty mask
    /// yields the 1x1 matrix `[Tr rho]`.
    pub fn reduce(&self, keep: SubsystemMask) -> DMatrix<Complex64> {
        let d_keep = self.structure.dim_of(keep);
        let d_rest = self.structure.dim() / d_keep;
        let (kept, rest) = self.structure.split_indices(keep);
        // members[r] lists (flat index, kept index) for complement index r
        let mut members: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(d_keep); d_rest];
        for x in 0..self.structure.dim() {
            members[rest[x]].push((x, kept[x]));
        }
        let mut out = DMatrix::zeros(d_keep, d_keep);
        for group in &members {
            for &(x, a) in group {
                for &(y, b) in group {
                    out[(a, b)] += self.matrix[(x, y)];
                }
            }
        }
        out
    }

    /// Partial trace over the complement of a nonempty `keep`.
    pub fn partial_trace(&self, keep: SubsystemMask) -> Result<DensityMatrix> {
        let structure = self
            .structure
            .restrict(keep)
            .ok_or_else(|| Error::Domain("tracing out every site leaves no system; use reduce".into()))?;
        Ok(DensityMatrix::from_trusted(structure, self.reduce(keep)))
    }

    /// `Tr[rho_A^2]`; 1 for the empty mask.
    pub fn reduced_purity(&self, keep: SubsystemMask) -> f64 {
        let r = self.reduce(keep);
        trace_of_product(&r, &r).re
    }

    /// `(1 - lambda) rho + lambda I / D`.
    pub fn depolarize(&self, lambda: f64) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!("mixing parameter {lambda} outside [0, 1]")));
        }
        let d = self.structure.dim();
        let mut matrix = self.matrix.scale(1.0 - lambda);
        let shift = Complex64::new(lambda / d as f64, 0.0);
        for i in 0..d {
            matrix[(i, i)] += shift;
        }
        Ok(DensityMatrix::from_trusted(self.structure.clone(), matrix))
    }
}

pub fn density_from_pure(psi: &PureState) -> DensityMatrix {
    let a = psi.amplitudes();
    DensityMatrix::from_trusted(psi.structure().clone(), a * a.adjoint())
}

/// Free-function form of [`DensityMatrix::purity`].
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Haar-random pure state: i.i.d. standard complex Gaussian amplitudes,
/// normalized. Deterministic in `seed`.
pub fn haar_random_pure(structure: &HilbertStructure, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_random_pure_with(structure, &mut rng)
}

pub fn haar_random_pure_with<R: Rng + ?Sized>(structure: &HilbertStructure, rng: &mut R) -> PureState {
    loop {
        let amplitudes = DVector::from_fn(structure.dim(), |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        if let Ok(psi) = PureState::normalized(structure.clone(), amplitudes) {
            return psi;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedState {
    /// `sum_k |k...k> / sqrt(d)`; needs equal local dimensions.
    Ghz,
    /// Equal superposition of single excitations; qubits only.
    W,
    /// `(|00> + |11>) / sqrt(2)`; two qubits only.
    Bell,
    /// `|0...0>`.
    ProductBasis,
}

pub fn named_state(kind: NamedState, structure: &HilbertStructure) -> Result<PureState> {
    let d = structure.dim();
    let dims = structure.dims();
    let n = structure.sites();
    let mut amplitudes = DVector::<Complex64>::zeros(d);
    match kind {
        NamedState::Ghz => {
            let local = dims[0];
            if dims.iter().any(|&x| x != local) {
                return Err(Error::Domain(format!("GHZ needs equal local dimensions, got {structure}")));
            }
            for k in 0..local {
                let x = structure.flat_index(&vec![k; n])?;
                amplitudes[x] = Complex64::new(1.0, 0.0);
            }
        }
        NamedState::W => {
            if dims.iter().any(|&x| x != 2) || n < 2 {
                return Err(Error::Domain(format!("W state needs two or more qubits, got {structure}")));
            }
            for site in 0..n {
                amplitudes[structure.stride(site)] = Complex64::new(1.0, 0.0);
            }
        }
        NamedState::Bell => {
            if dims != [2, 2] {
                return Err(Error::Domain(format!("Bell state needs two qubits, got {structure}")));
            }
            amplitudes[0] = Complex64::new(1.0, 0.0);
            amplitudes[3] = Complex64::new(1.0, 0.0);
        }
        NamedState::ProductBasis => {
            amplitudes[0] = Complex64::new(1.0, 0.0);
        }
    }
    PureState::normalized(structure.clone(), amplitudes)
}

/// A weighted pure-state decomposition `rho = sum_j p_j |psi_j><psi_j|`.
#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<(f64, PureState)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, PureState)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(Error::Domain("an ensemble needs at least one member".into()));
        };
        let structure = first.structure().clone();
        if members.iter().any(|(_, psi)| psi.structure() != &structure) {
            return Err(Error::Shape("ensemble members live on different spaces".into()));
        }
        if members.iter().any(|(p, _)| !(*p >= 0.0)) {
            return Err(Error::Domain("ensemble weights must be nonnegative".into()));
        }
        let total: f64 = members.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::Domain(format!("ensemble weights sum to {total}")));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(f64, PureState)] {
        &self.members
    }

    pub fn structure(&self) -> &HilbertStructure {
        self.members[0].1.structure()
    }

    pub fn mixture(&self) -> DensityMatrix {
        let d = self.structure().dim();
        let mut matrix = DMatrix::zeros(d, d);
        for (p, psi) in &self.members {
            let a = psi.amplitudes();
            matrix += (a * a.adjoint()).scale(*p);
        }
        DensityMatrix::from_trusted(self.structure().clone(), matrix)
    }
}

/// `k` Haar-random members with flat-Dirichlet weights, and their mixture.
pub fn random_mixed_ensemble(
    structure: &HilbertStructure,
    k: usize,
    seed: u64,
) -> Result<(Ensemble, DensityMatrix)> {
    if k == 0 {
        return Err(Error::Domain("an ensemble needs at least one member".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let members = raw
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let psi = haar_random_pure(structure, derive_seed(seed, j as u64));
            (w / total, psi)
        })
        .collect();
    let ensemble = Ensemble::new(members)?;
    let rho = ensemble.mixture();
    Ok((ensemble, rho))
}
