//! Simulated two-copy parity measurements.
//!
//! Measuring every particle-copy pair in the symmetric/antisymmetric basis
//! yields a parity string `s`. Its probability is
//! `p(s) = Tr[(rho (x) rho) (x)_i P^i_(s_i)]`, and since
//! `(x)_i (1 + sigma_i S_i)/2 = 2^-N sum_A (prod_{i in A} sigma_i) S_A`,
//!
//! ```text
//! p(s) = 2^-N sum_A (-1)^|A & s| Tr[rho_A^2],
//! ```
//!
//! a Walsh-Hadamard transform of the purity lattice. The transform is its own
//! inverse up to `2^N`, so `Tr[rho_A^2] = sum_s (-1)^|A & s| p(s)`.
//!
//! The bound needs only three aggregates: even number of antisymmetric pairs
//! (globally symmetric), odd number (globally antisymmetric) and no
//! antisymmetric pair at all, the last being a sub-event of the first.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::bound::PurityTable;
use crate::error::{Error, Result};
use crate::hilbert::HilbertStructure;
use crate::observable::PairParity;

/// Probabilities above `-NEGATIVE_PROBABILITY_LIMIT` are transform noise and
/// get clamped to zero; anything lower signals an unphysical input.
pub const NEGATIVE_PROBABILITY_LIMIT: f64 = 1e-8;

const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// In-place unnormalized Walsh-Hadamard transform over the subset lattice:
/// `out[s] = sum_A (-1)^popcount(A & s) in[A]`.
pub fn walsh_hadamard(values: &mut [f64]) {
    let len = values.len();
    assert!(len.is_power_of_two(), "transform length must be a power of two");
    let mut half = 1;
    while half < len {
        for block in values.chunks_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        half *= 2;
    }
}

/// One measurement event; bit `i` set means pair `i` was antisymmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParityString {
    bits: u64,
    sites: usize,
}

impl ParityString {
    pub fn new(bits: u64, sites: usize) -> Result<Self> {
        if sites == 0 || sites > 63 || bits >> sites != 0 {
            return Err(Error::Index(format!("parity bits {bits:#b} do not fit {sites} sites")));
        }
        Ok(Self { bits, sites })
    }

    pub fn from_signs(signs: &[PairParity]) -> Result<Self> {
        let bits = signs
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == PairParity::Minus)
            .fold(0u64, |acc, (i, _)| acc | 1 << i);
        Self::new(bits, signs.len())
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn signs(self) -> Vec<PairParity> {
        (0..self.sites)
            .map(|i| if self.bits >> i & 1 == 1 { PairParity::Minus } else { PairParity::Plus })
            .collect()
    }

    pub fn minus_count(self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_even(self) -> bool {
        self.minus_count().is_multiple_of(2)
    }

    pub fn is_all_plus(self) -> bool {
        self.bits == 0
    }
}

impl fmt::Display for ParityString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.signs() {
            f.write_str(if s == PairParity::Plus { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Joint distribution of the `N` pair parities.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityDistribution {
    structure: HilbertStructure,
    probabilities: Vec<f64>,
}

impl ParityDistribution {
    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn probability(&self, s: ParityString) -> f64 {
        self.probabilities[s.bits as usize]
    }

    /// Probabilities indexed by parity bits.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

pub fn parity_distribution(table: &PurityTable) -> Result<ParityDistribution> {
    let n = table.structure().sites();
    let mut probabilities = table.values().to_vec();
    walsh_hadamard(&mut probabilities);
    let scale = 0.5f64.powi(n as i32);
    for (bits, p) in probabilities.iter_mut().enumerate() {
        *p *= scale;
        if *p < -NEGATIVE_PROBABILITY_LIMIT {
            return Err(Error::Integrity(format!(
                "parity string {} has probability {:e}; the input is not a physical state",
                ParityString { bits: bits as u64, sites: n },
                *p
            )));
        }
        *p = p.max(0.0);
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Integrity(format!("parity probabilities sum to {total}")));
    }
    Ok(ParityDistribution {
        structure: table.structure().clone(),
        probabilities,
    })
}

/// Inverse transform back to the purity lattice.
pub fn purities_from_distribution(dist: &ParityDistribution) -> Result<PurityTable> {
    let mut values = dist.probabilities.clone();
    walsh_hadamard(&mut values);
    PurityTable::from_values(dist.structure.clone(), values)
}

/// Finite-shot record of parity strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotRecord {
    structure: HilbertStructure,
    counts: Vec<u64>,
    shots: u64,
}

impl ShotRecord {
    /// Counts indexed by parity bits.
    pub fn from_counts(structure: HilbertStructure, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != 1 << structure.sites() {
            return Err(Error::Shape(format!(
                "{} counts for {} parity strings",
                counts.len(),
                1u64 << structure.sites()
            )));
        }
        let shots = counts.iter().sum();
        if shots == 0 {
            return Err(Error::Domain("a shot record needs at least one shot".into()));
        }
        Ok(Self {
            structure,
            counts,
            shots,
        })
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn count(&self, s: ParityString) -> u64 {
        self.counts[s.bits as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }
}

/// Multinomial draw of `shots` events, by sequential conditional binomials.
pub fn sample_parities(dist: &ParityDistribution, shots: u64, seed: u64) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(Error::Domain("at least one shot is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; dist.probabilities.len()];
    let mut remaining_shots = shots;
    let mut remaining_mass = 1.0f64;
    let last = dist.probabilities.len() - 1;
    for (i, &p) in dist.probabilities.iter().enumerate() {
        if remaining_shots == 0 {
            break;
        }
        if i == last {
            counts[i] = remaining_shots;
            break;
        }
        let q = if remaining_mass > 0.0 { (p / remaining_mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(remaining_shots, q)
            .map_err(|e| Error::Numerical(format!("binomial parameters: {e}")))?
            .sample(&mut rng);
        counts[i] = k;
        remaining_shots -= k;
        remaining_mass -= p;
    }
    ShotRecord::from_counts(dist.structure.clone(), counts)
}

/// Frequencies of the three event classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventFrequencies {
    /// Even number of antisymmetric pairs.
    pub p_even: f64,
    /// Odd number of antisymmetric pairs.
    pub p_odd: f64,
    /// No antisymmetric pair; included in `p_even`.
    pub p_all_plus: f64,
}

impl EventFrequencies {
    pub fn from_distribution(dist: &ParityDistribution) -> Self {
        let (mut even, mut odd) = (0.0, 0.0);
        for (bits, &p) in dist.probabilities.iter().enumerate() {
            if (bits as u64).count_ones().is_multiple_of(2) {
                even += p;
            } else {
                odd += p;
            }
        }
        Self {
            p_even: even,
            p_odd: odd,
            p_all_plus: dist.probabilities[0],
        }
    }
}

pub fn aggregate_events(record: &ShotRecord) -> EventFrequencies {
    let (mut even, mut odd) = (0u64, 0u64);
    for (bits, &c) in record.counts.iter().enumerate() {
        if (bits as u64).count_ones().is_multiple_of(2) {
            even += c;
        } else {
            odd += c;
        }
    }
    let total = record.shots as f64;
    EventFrequencies {
        p_even: even as f64 / total,
        p_odd: odd as f64 / total,
        p_all_plus: record.counts[0] as f64 / total,
    }
}

/// Bound estimate from event frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    /// `None` for the exact (infinite-shot) plug-in.
    pub shots: Option<u64>,
    pub events: EventFrequencies,
    pub se_even: f64,
    pub se_odd: f64,
    pub se_all_plus: f64,
}

/// `4 (p_even - p_all_plus - (1 - 2^(1-N)) p_odd)`.
pub fn bound_from_events(events: &EventFrequencies, sites: usize) -> f64 {
    let c = 1.0 - 2f64.powi(1 - sites as i32);
    4.0 * (events.p_even - events.p_all_plus - c * events.p_odd)
}

impl BoundEstimate {
    /// Plug-in with exact probabilities; reproduces the lattice value.
    pub fn exact(dist: &ParityDistribution) -> Self {
        let events = EventFrequencies::from_distribution(dist);
        Self {
            estimate: bound_from_events(&events, dist.structure.sites()),
            standard_error: 0.0,
            shots: None,
            events,
            se_even: 0.0,
            se_odd: 0.0,
            se_all_plus: 0.0,
        }
    }
}

/// Estimator with its delta-method standard error.
///
/// Per shot the three indicators (even, all-plus, odd) have the multinomial
/// covariance `Cov(E, A) = p_A (1 - p_E)` (all-plus implies even),
/// `Cov(E, O) = -p_E p_O`, `Cov(A, O) = -p_A p_O`; the estimator's gradient is
/// `4 (1, -1, -(1 - 2^(1-N)))`.
pub fn estimate_bound(record: &ShotRecord) -> Result<BoundEstimate> {
    if record.shots == 0 {
        return Err(Error::Domain("no shots recorded".into()));
    }
    let n = record.structure.sites();
    let ev = aggregate_events(record);
    let shots = record.shots as f64;
    let c = 1.0 - 2f64.powi(1 - n as i32);
    let (pe, pa, po) = (ev.p_even, ev.p_all_plus, ev.p_odd);
    let cov = [
        [pe * (1.0 - pe), pa * (1.0 - pe), -pe * po],
        [pa * (1.0 - pe), pa * (1.0 - pa), -pa * po],
        [-pe * po, -pa * po, po * (1.0 - po)],
    ];
    let grad = [4.0, -4.0, -4.0 * c];
    let mut variance = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            variance += grad[i] * cov[i][j] * grad[j];
        }
    }
    let se = |p: f64| (p * (1.0 - p) / shots).max(0.0).sqrt();
    Ok(BoundEstimate {
        estimate: bound_from_events(&ev, n),
        standard_error: (variance.max(0.0) / shots).sqrt(),
        shots: Some(record.shots),
        events: ev,
        se_even: se(pe),
        se_odd: se(po),
        se_all_plus: se(pa),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::{purity_table, purity_table_pure, v_expectation};
    use crate::hilbert::SubsystemMask;
    use crate::observable::{expectation_two_copy, pair_parity_projectors};
    use crate::states::{haar_random_pure, named_state, random_mixed_ensemble, NamedState};
    use approx::assert_abs_diff_eq;

    fn qubits(n: usize) -> HilbertStructure {
        HilbertStructure::qubits(n).unwrap()
    }

    fn bell_distribution() -> ParityDistribution {
        let bell = named_state(NamedState::Bell, &qubits(2)).unwrap();
        parity_distribution(&purity_table_pure(&bell).unwrap()).unwrap()
    }

    #[test]
    fn transform_is_involution_up_to_scale() {
        let mut v: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        let orig = v.clone();
        walsh_hadamard(&mut v);
        walsh_hadamard(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert_abs_diff_eq!(a / 16.0, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn transform_matches_definition() {
        let x: Vec<f64> = (0..8).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let mut fast = x.clone();
        walsh_hadamard(&mut fast);
        for s in 0..8u32 {
            let direct: f64 = (0..8u32)
                .map(|a| if (a & s).count_ones() % 2 == 0 { x[a as usize] } else { -x[a as usize] })
                .sum();
            assert_abs_diff_eq!(fast[s as usize], direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn bell_distribution_values() {
        let d = bell_distribution();
        assert_abs_diff_eq!(d.probabilities()[0b00], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(d.probabilities()[0b01], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.probabilities()[0b10], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.probabilities()[0b11], 0.25, epsilon = 1e-15);
        let ev = EventFrequencies::from_distribution(&d);
        assert_abs_diff_eq!(ev.p_even, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.p_odd, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.p_all_plus, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(BoundEstimate::exact(&d).estimate, 1.0, epsilon = 1e-14);
        let back = purities_from_distribution(&d).unwrap();
        assert_abs_diff_eq!(back.purity(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn distribution_matches_explicit_projectors() {
        let s = HilbertStructure::new(vec![2, 3]).unwrap();
        let (_, rho) = random_mixed_ensemble(&s, 3, 4).unwrap();
        let d = parity_distribution(&purity_table(&rho).unwrap()).unwrap();
        for bits in 0..4 {
            let p = ParityString::new(bits, 2).unwrap();
            let op = pair_parity_projectors(&s, &p.signs()).unwrap();
            assert_abs_diff_eq!(d.probability(p), expectation_two_copy(&rho, &op).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn pure_single_site_and_products() {
        let psi = haar_random_pure(&HilbertStructure::new(vec![3]).unwrap(), 1);
        let d = parity_distribution(&purity_table_pure(&psi).unwrap()).unwrap();
        assert_abs_diff_eq!(d.probabilities()[1], 0.0, epsilon = 1e-14);
        for n in 1..=4 {
            let prod = named_state(NamedState::ProductBasis, &qubits(n)).unwrap();
            let d = parity_distribution(&purity_table_pure(&prod).unwrap()).unwrap();
            assert_abs_diff_eq!(d.probabilities()[0], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn even_aggregate_tracks_purity() {
        let s = qubits(3);
        let (_, rho) = random_mixed_ensemble(&s, 5, 13).unwrap();
        let t = purity_table(&rho).unwrap();
        let ev = EventFrequencies::from_distribution(&parity_distribution(&t).unwrap());
        assert_abs_diff_eq!(ev.p_even, (1.0 + t.purity()) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev.p_even + ev.p_odd, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unphysical_table_is_rejected() {
        let s = qubits(2);
        // pure marginals with a mixed whole: p(--) = (1 - 1 - 1 + 0.2) / 4
        let t = PurityTable::from_values(s, vec![1.0, 1.0, 1.0, 0.2]).unwrap();
        assert!(matches!(parity_distribution(&t), Err(Error::Integrity(_))));
    }

    #[test]
    fn uniform_distribution_inverts_to_zero() {
        let s = qubits(3);
        let d = ParityDistribution {
            structure: s.clone(),
            probabilities: vec![0.125; 8],
        };
        let t = purities_from_distribution(&d).unwrap();
        assert_abs_diff_eq!(t.value(SubsystemMask::empty(3)), 1.0, epsilon = 1e-15);
        for m in s.subsets().skip(1) {
            assert_abs_diff_eq!(t.value(m), 0.0, epsilon = 1e-15);
        }
        assert_eq!(t.physicality_violations().len(), 7);
    }

    #[test]
    fn sampling_edges() {
        let s = qubits(3);
        let prod = named_state(NamedState::ProductBasis, &s).unwrap();
        let d = parity_distribution(&purity_table_pure(&prod).unwrap()).unwrap();
        let rec = sample_parities(&d, 1000, 3).unwrap();
        assert_eq!(rec.counts()[0], 1000);
        let est = estimate_bound(&rec).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert_eq!(est.standard_error, 0.0);

        let d = bell_distribution();
        assert_eq!(sample_parities(&d, 500, 9).unwrap(), sample_parities(&d, 500, 9).unwrap());
        assert!(matches!(sample_parities(&d, 0, 9), Err(Error::Domain(_))));
        let rec = sample_parities(&d, 1_000_000, 17).unwrap();
        assert_eq!(rec.shots(), 1_000_000);
        let p = rec.counts()[0b11] as f64 / 1e6;
        assert!((p - 0.25).abs() <= 0.0013, "p(--) = {p}");
    }

    #[test]
    fn aggregation_examples() {
        let s = qubits(3);
        let mut counts = vec![0u64; 8];
        counts[0] = 10;
        let rec = ShotRecord::from_counts(s.clone(), counts).unwrap();
        let ev = aggregate_events(&rec);
        assert_eq!((ev.p_even, ev.p_odd, ev.p_all_plus), (1.0, 0.0, 1.0));

        let mut counts = vec![0u64; 8];
        counts[0b010] = 1;
        let rec = ShotRecord::from_counts(s.clone(), counts).unwrap();
        let ev = aggregate_events(&rec);
        assert_eq!((ev.p_even, ev.p_odd, ev.p_all_plus), (0.0, 1.0, 0.0));

        assert!(matches!(ShotRecord::from_counts(s.clone(), vec![0; 8]), Err(Error::Domain(_))));
        assert!(matches!(ShotRecord::from_counts(s, vec![1; 4]), Err(Error::Shape(_))));
    }

    #[test]
    fn exact_plug_in_matches_lattice() {
        let s = qubits(3);
        let ghz = named_state(NamedState::Ghz, &s).unwrap();
        let d = parity_distribution(&purity_table_pure(&ghz).unwrap()).unwrap();
        assert_abs_diff_eq!(BoundEstimate::exact(&d).estimate, 1.5, epsilon = 1e-14);
        for seed in 0..10 {
            let (_, rho) = random_mixed_ensemble(&HilbertStructure::new(vec![2, 3, 2]).unwrap(), 3, seed).unwrap();
            let t = purity_table(&rho).unwrap();
            let d = parity_distribution(&t).unwrap();
            assert_abs_diff_eq!(BoundEstimate::exact(&d).estimate, v_expectation(&t), epsilon = 1e-12);
        }
    }

    #[test]
    fn estimate_identity_holds() {
        let s = qubits(3);
        let (_, rho) = random_mixed_ensemble(&s, 4, 5).unwrap();
        let d = parity_distribution(&purity_table(&rho).unwrap()).unwrap();
        let est = estimate_bound(&sample_parities(&d, 5000, 1).unwrap()).unwrap();
        let ev = est.events;
        assert_abs_diff_eq!(ev.p_even + ev.p_odd, 1.0, epsilon = 1e-12);
        assert!(ev.p_all_plus <= ev.p_even);
        assert_eq!(est.estimate, 4.0 * (ev.p_even - ev.p_all_plus - 0.75 * ev.p_odd));
    }

    #[test]
    fn parity_string_display() {
        let p = ParityString::from_signs(&[PairParity::Plus, PairParity::Minus, PairParity::Minus]).unwrap();
        assert_eq!(p.to_string(), "+--");
        assert_eq!(p.bits(), 0b110);
        assert!(p.is_even());
        assert!(ParityString::new(0b100, 2).is_err());
    }
}
