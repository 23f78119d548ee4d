//! Unperturbed spectra and sparse perturbations for the four model
//! families: a three-level LMG model, the single-mode Dicke model, and
//! the defect XXZ and defect Ising spin chains.
//!
//! Every builder returns the basis catalog in canonical order (ascending
//! lexicographic order of the label tuple) together with the diagonal
//! `H₀` energies and the strictly off-diagonal perturbation `V`.

use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SymmetricSparse;

/// Largest spin chain accepted by the builders (2^24 basis states).
pub const MAX_SITES: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    Lmg(LmgParams),
    Dicke(DickeParams),
    DefectXxz(DefectXxzParams),
    DefectIsing(DefectIsingParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmgParams {
    /// Particle number Ω.
    pub omega: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
}

impl Default for LmgParams {
    fn default() -> Self {
        Self {
            omega: 40,
            eps1: 1.10,
            eps2: 1.61,
            mu1: 0.031,
            mu2: 0.035,
            mu3: 0.038,
            mu4: 0.033,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DickeParams {
    pub n_atoms: usize,
    pub omega0: f64,
    pub omega: f64,
    pub lambda: f64,
    /// Hard boson cutoff; photon numbers run over `0..=n_max`.
    pub n_max: usize,
}

impl Default for DickeParams {
    fn default() -> Self {
        Self {
            n_atoms: 40,
            omega0: 1.0,
            omega: 1.0,
            lambda: 1.0,
            n_max: 40,
        }
    }
}

/// How the `sz_sector` value of the XXZ chain is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SzConvention {
    /// `S_z = ½ Σ σ_z`
    #[default]
    HalfSum,
    /// `S_z = Σ σ_z`
    PauliSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectXxzParams {
    pub n_sites: usize,
    pub j_flip: f64,
    pub mu_zz: f64,
    pub mu1: f64,
    pub mu4: f64,
    pub sz_sector: f64,
    pub sz_convention: SzConvention,
}

impl Default for DefectXxzParams {
    fn default() -> Self {
        Self {
            n_sites: 12,
            j_flip: 1.4,
            mu_zz: 0.5,
            mu1: 1.11,
            mu4: 1.11,
            sz_sector: -2.0,
            sz_convention: SzConvention::HalfSum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    #[default]
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectIsingParams {
    pub n_sites: usize,
    pub jz: f64,
    pub lambda_x: f64,
    pub mu1: f64,
    pub mu4: f64,
    /// Boundary of the σzσz sum. The transverse field always acts on
    /// sites `1..N-1`.
    pub boundary: Boundary,
}

impl Default for DefectIsingParams {
    fn default() -> Self {
        Self {
            n_sites: 10,
            jz: 1.0,
            lambda_x: 0.45,
            mu1: 1.11,
            mu4: 1.11,
            boundary: Boundary::Periodic,
        }
    }
}

/// Label of one unperturbed basis state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    /// Level occupations `(n₀, n₁, n₂)`.
    Lmg([u32; 3]),
    /// Photon number and twice the collective `J_z` eigenvalue.
    Dicke { n: u32, two_m: i32 },
    /// σ_z per site, site 1 first.
    Spins(Vec<i8>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisCatalog {
    pub labels: Vec<BasisLabel>,
}

impl BasisCatalog {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

/// `H = diag(e0) + v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianPair {
    pub e0: Vec<f64>,
    pub v: SymmetricSparse,
}

impl HamiltonianPair {
    pub fn new(e0: Vec<f64>, v: SymmetricSparse) -> Result<Self> {
        if e0.len() != v.dim() {
            return Err(Error::InvalidSparse(format!(
                "perturbation dimension {} does not match {} unperturbed energies",
                v.dim(),
                e0.len()
            )));
        }
        Ok(Self { e0, v })
    }

    pub fn dim(&self) -> usize {
        self.e0.len()
    }

    /// Row-major dense `H`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut h = self.v.to_dense();
        for (i, e) in self.e0.iter().enumerate() {
            h[i * n + i] = *e;
        }
        h
    }
}

pub fn build(spec: &ModelSpec) -> Result<(BasisCatalog, HamiltonianPair)> {
    match spec {
        ModelSpec::Lmg(p) => build_lmg(p),
        ModelSpec::Dicke(p) => build_dicke(p),
        ModelSpec::DefectXxz(p) => build_defect_xxz(p),
        ModelSpec::DefectIsing(p) => build_defect_ising(p),
    }
}

fn check_finite(field: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel {
            field,
            reason: format!("must be finite, got {x}"),
        })
    }
}

/// Applies `a_r† a_s` to an occupation triple.
fn ladder(state: [u32; 3], r: usize, s: usize) -> Option<([u32; 3], f64)> {
    if state[s] == 0 {
        return None;
    }
    let amp = (f64::from(state[s]) * f64::from(state[r] + 1)).sqrt();
    let mut out = state;
    out[s] -= 1;
    out[r] += 1;
    Some((out, amp))
}

pub fn build_lmg(p: &LmgParams) -> Result<(BasisCatalog, HamiltonianPair)> {
    if p.omega < 1 {
        return Err(Error::InvalidModel {
            field: "omega",
            reason: "particle number must be at least 1".into(),
        });
    }
    for (name, x) in [
        ("eps1", p.eps1),
        ("eps2", p.eps2),
        ("mu1", p.mu1),
        ("mu2", p.mu2),
        ("mu3", p.mu3),
        ("mu4", p.mu4),
    ] {
        check_finite(name, x)?;
    }
    let total = p.omega as u32;
    let mut labels = Vec::new();
    for n0 in 0..=total {
        for n1 in 0..=total - n0 {
            labels.push([n0, n1, total - n0 - n1]);
        }
    }
    let index: HashMap<[u32; 3], usize> = labels.iter().enumerate().map(|(k, s)| (*s, k)).collect();
    let e0 = labels
        .iter()
        .map(|s| p.eps1 * f64::from(s[1]) + p.eps2 * f64::from(s[2]))
        .collect();

    // (strength, [(outer, inner)]) with K_rs = (r, s); products act inner first.
    let terms: [(f64, [((usize, usize), (usize, usize)); 2]); 4] = [
        (p.mu1, [((1, 0), (1, 0)), ((0, 1), (0, 1))]),
        (p.mu2, [((2, 0), (2, 0)), ((0, 2), (0, 2))]),
        (p.mu3, [((2, 1), (2, 0)), ((0, 2), (1, 2))]),
        (p.mu4, [((1, 2), (1, 0)), ((0, 1), (2, 1))]),
    ];

    let mut acc = BTreeMap::new();
    for (i, &state) in labels.iter().enumerate() {
        for (strength, products) in &terms {
            if *strength == 0.0 {
                continue;
            }
            for &((r2, s2), (r1, s1)) in products {
                let Some((mid, a1)) = ladder(state, r1, s1) else {
                    continue;
                };
                let Some((out, a2)) = ladder(mid, r2, s2) else {
                    continue;
                };
                let j = index[&out];
                if j > i {
                    *acc.entry((i, j)).or_insert(0.0) += strength * a1 * a2;
                }
            }
        }
    }
    let v = SymmetricSparse::from_accumulated(labels.len(), acc)?;
    let catalog = BasisCatalog {
        labels: labels.into_iter().map(BasisLabel::Lmg).collect(),
    };
    Ok((catalog, HamiltonianPair::new(e0, v)?))
}

pub fn build_dicke(p: &DickeParams) -> Result<(BasisCatalog, HamiltonianPair)> {
    if p.n_atoms < 1 {
        return Err(Error::InvalidModel {
            field: "n_atoms",
            reason: "must be at least 1".into(),
        });
    }
    if p.n_max < 1 {
        return Err(Error::InvalidModel {
            field: "n_max",
            reason: "boson cutoff must be at least 1".into(),
        });
    }
    for (name, x) in [("omega0", p.omega0), ("omega", p.omega), ("lambda", p.lambda)] {
        check_finite(name, x)?;
    }
    let n_atoms = p.n_atoms as i64;
    let spin_states = p.n_atoms + 1;
    let dim = (p.n_max + 1) * spin_states;
    // k = m + j runs over 0..=N
    let idx = |n: usize, k: usize| n * spin_states + k;

    let mut labels = Vec::with_capacity(dim);
    let mut e0 = Vec::with_capacity(dim);
    for n in 0..=p.n_max {
        for k in 0..=p.n_atoms {
            let two_m = 2 * k as i64 - n_atoms;
            labels.push(BasisLabel::Dicke {
                n: n as u32,
                two_m: two_m as i32,
            });
            e0.push(p.omega0 * two_m as f64 / 2.0 + p.omega * n as f64);
        }
    }

    let g = p.lambda / (p.n_atoms as f64).sqrt();
    let mut acc = BTreeMap::new();
    if g != 0.0 {
        for n in 0..=p.n_max {
            for k in 0..=p.n_atoms {
                let i = idx(n, k);
                let kk = k as i64;
                // J+ and J- matrix elements in the k = j + m labeling
                let spin_moves = [
                    (kk + 1, ((n_atoms - kk) * (kk + 1)) as f64),
                    (kk - 1, (kk * (n_atoms - kk + 1)) as f64),
                ];
                let boson_moves = [(n + 1, (n + 1) as f64), (n.wrapping_sub(1), n as f64)];
                for &(n2, bf) in &boson_moves {
                    if n2 > p.n_max || bf == 0.0 {
                        continue;
                    }
                    for &(k2, sf) in &spin_moves {
                        if k2 < 0 || k2 > n_atoms || sf == 0.0 {
                            continue;
                        }
                        let j = idx(n2, k2 as usize);
                        if j > i {
                            *acc.entry((i, j)).or_insert(0.0) += g * bf.sqrt() * sf.sqrt();
                        }
                    }
                }
            }
        }
    }
    let v = SymmetricSparse::from_accumulated(dim, acc)?;
    Ok((BasisCatalog { labels }, HamiltonianPair::new(e0, v)?))
}

/// σ_z of `site` (1-based) in a bit mask whose most significant of `n` bits is site 1.
fn sigma_z(mask: u32, site: usize, n: usize) -> f64 {
    if mask >> (n - site) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

fn spin_label(mask: u32, n: usize) -> BasisLabel {
    BasisLabel::Spins(
        (1..=n)
            .map(|s| if mask >> (n - s) & 1 == 1 { 1 } else { -1 })
            .collect(),
    )
}

fn check_sites(n: usize, mu4: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidModel {
            field: "n_sites",
            reason: "need at least 2 sites".into(),
        });
    }
    if n > MAX_SITES {
        return Err(Error::InvalidModel {
            field: "n_sites",
            reason: format!("at most {MAX_SITES} sites supported"),
        });
    }
    if n < 4 && mu4 != 0.0 {
        return Err(Error::InvalidModel {
            field: "mu4",
            reason: format!("defect field on site 4 requires at least 4 sites, got {n}"),
        });
    }
    Ok(())
}

fn defect_fields(mask: u32, n: usize, mu1: f64, mu4: f64) -> f64 {
    let mut e = mu1 * sigma_z(mask, 1, n);
    if n >= 4 {
        e += mu4 * sigma_z(mask, 4, n);
    }
    e
}

/// Number of up spins selected by an `S_z` sector value.
pub fn sector_up_count(n_sites: usize, sz: f64, convention: SzConvention) -> Result<usize> {
    let n = n_sites as f64;
    let up = match convention {
        SzConvention::HalfSum => sz + n / 2.0,
        SzConvention::PauliSum => (sz + n) / 2.0,
    };
    if !up.is_finite() || up.fract() != 0.0 || up < 0.0 || up > n {
        return Err(Error::EmptySector(format!(
            "S_z = {sz} has no states on {n_sites} sites ({convention:?})"
        )));
    }
    Ok(up as usize)
}

pub fn build_defect_xxz(p: &DefectXxzParams) -> Result<(BasisCatalog, HamiltonianPair)> {
    check_sites(p.n_sites, p.mu4)?;
    for (name, x) in [
        ("j_flip", p.j_flip),
        ("mu_zz", p.mu_zz),
        ("mu1", p.mu1),
        ("mu4", p.mu4),
    ] {
        check_finite(name, x)?;
    }
    let n = p.n_sites;
    let n_up = sector_up_count(n, p.sz_sector, p.sz_convention)?;
    let masks: Vec<u32> = (0..1u32 << n)
        .filter(|m| m.count_ones() as usize == n_up)
        .collect();
    let index: HashMap<u32, usize> = masks.iter().enumerate().map(|(k, m)| (*m, k)).collect();

    let e0 = masks
        .iter()
        .map(|&m| {
            let bonds: f64 = (1..n)
                .map(|s| sigma_z(m, s, n) * sigma_z(m, s + 1, n))
                .sum();
            defect_fields(m, n, p.mu1, p.mu4) + p.mu_zz * bonds
        })
        .collect();

    // J(σxσx + σyσy) = 2J(σ+σ- + σ-σ+)
    let mut acc = BTreeMap::new();
    if p.j_flip != 0.0 {
        for (i, &m) in masks.iter().enumerate() {
            for s in 1..n {
                let pair = (1u32 << (n - s)) | (1u32 << (n - s - 1));
                let bits = m & pair;
                if bits != 0 && bits != pair {
                    let j = index[&(m ^ pair)];
                    if j > i {
                        acc.insert((i, j), 2.0 * p.j_flip);
                    }
                }
            }
        }
    }
    let v = SymmetricSparse::from_accumulated(masks.len(), acc)?;
    let catalog = BasisCatalog {
        labels: masks.iter().map(|&m| spin_label(m, n)).collect(),
    };
    Ok((catalog, HamiltonianPair::new(e0, v)?))
}

pub fn build_defect_ising(p: &DefectIsingParams) -> Result<(BasisCatalog, HamiltonianPair)> {
    check_sites(p.n_sites, p.mu4)?;
    for (name, x) in [
        ("jz", p.jz),
        ("lambda_x", p.lambda_x),
        ("mu1", p.mu1),
        ("mu4", p.mu4),
    ] {
        check_finite(name, x)?;
    }
    let n = p.n_sites;
    let dim = 1usize << n;
    let bonds_end = match p.boundary {
        Boundary::Open => n - 1,
        Boundary::Periodic => n,
    };
    let e0 = (0..dim as u32)
        .map(|m| {
            let bonds: f64 = (1..=bonds_end)
                .map(|s| sigma_z(m, s, n) * sigma_z(m, s % n + 1, n))
                .sum();
            defect_fields(m, n, p.mu1, p.mu4) + p.jz * bonds
        })
        .collect();

    let mut acc = BTreeMap::new();
    if p.lambda_x != 0.0 {
        for i in 0..dim {
            for s in 1..n {
                let j = i ^ (1usize << (n - s));
                if j > i {
                    acc.insert((i, j), p.lambda_x);
                }
            }
        }
    }
    let v = SymmetricSparse::from_accumulated(dim, acc)?;
    let catalog = BasisCatalog {
        labels: (0..dim as u32).map(|m| spin_label(m, n)).collect(),
    };
    Ok((catalog, HamiltonianPair::new(e0, v)?))
}

/// Flips the sign of exactly `round(fraction · nnz_upper)` stored entries,
/// chosen by a seeded permutation. Magnitudes and symmetry are unchanged.
pub fn randomize_signs(v: &SymmetricSparse, fraction: f64, seed: u64) -> Result<SymmetricSparse> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidModel {
            field: "fraction",
            reason: format!("must lie in [0, 1], got {fraction}"),
        });
    }
    let nnz = v.nnz_upper();
    let count = (fraction * nnz as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flip = vec![false; nnz];
    for k in rand::seq::index::sample(&mut rng, nnz, count) {
        flip[k] = true;
    }
    Ok(v.map_values(|k, x| if flip[k] { -x } else { x }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lmg_dimension_and_ground_level() {
        for omega in [1usize, 2, 5, 40] {
            let (cat, h) = build_lmg(&LmgParams {
                omega,
                ..Default::default()
            })
            .unwrap();
            assert_eq!(cat.dim(), (omega + 1) * (omega + 2) / 2);
            assert_eq!(h.dim(), cat.dim());
        }
        let (cat, h) = build_lmg(&LmgParams::default()).unwrap();
        assert_eq!(cat.dim(), 861);
        let top = cat
            .labels
            .iter()
            .position(|l| *l == BasisLabel::Lmg([40, 0, 0]))
            .unwrap();
        assert_eq!(h.e0[top], 0.0);
    }

    #[test]
    fn lmg_selection_rules() {
        let (cat, h) = build_lmg(&LmgParams {
            omega: 6,
            ..Default::default()
        })
        .unwrap();
        let allowed: [[i64; 3]; 4] = [[-2, 2, 0], [-2, 0, 2], [-1, -1, 2], [-1, 2, -1]];
        for e in h.v.entries() {
            let (BasisLabel::Lmg(a), BasisLabel::Lmg(b)) = (&cat.labels[e.row], &cat.labels[e.col])
            else {
                panic!("wrong label kind")
            };
            let d: [i64; 3] = std::array::from_fn(|r| i64::from(b[r]) - i64::from(a[r]));
            let neg = d.map(|x| -x);
            assert!(
                allowed.contains(&d) || allowed.contains(&neg),
                "unexpected transition {d:?}"
            );
            assert!(e.value > 0.0);
        }
    }

    #[test]
    fn dicke_dimension_and_zero_coupling() {
        let (cat, h) = build_dicke(&DickeParams::default()).unwrap();
        assert_eq!(cat.dim(), 1681);
        assert_eq!(h.dim(), 1681);
        let (_, h0) = build_dicke(&DickeParams {
            lambda: 0.0,
            n_atoms: 4,
            n_max: 3,
            ..Default::default()
        })
        .unwrap();
        assert!(h0.v.is_empty());
    }

    #[test]
    fn dicke_raising_element() {
        let p = DickeParams {
            n_atoms: 4,
            n_max: 3,
            lambda: 0.7,
            ..Default::default()
        };
        let (cat, h) = build_dicke(&p).unwrap();
        let find = |n: u32, two_m: i32| {
            cat.labels
                .iter()
                .position(|l| *l == BasisLabel::Dicke { n, two_m })
                .unwrap()
        };
        // <n+1, m-1|V|n, m> = (λ/√N) √(n+1) √(j(j+1) - m(m-1)), n = 1, m = 1, j = 2
        let expected = 0.7 / 2.0 * 2f64.sqrt() * (6.0f64 - 0.0).sqrt();
        let got = h.v.get(find(1, 2), find(2, 0));
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn xxz_sector_dimension_and_elements() {
        let (cat, h) = build_defect_xxz(&DefectXxzParams::default()).unwrap();
        assert_eq!(cat.dim(), 495);
        assert!(h.v.entries().iter().all(|e| e.value == 2.8));
        let (_, h0) = build_defect_xxz(&DefectXxzParams {
            j_flip: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert!(h0.v.is_empty());
    }

    #[test]
    fn xxz_sector_conventions() {
        assert_eq!(sector_up_count(12, -2.0, SzConvention::HalfSum).unwrap(), 4);
        assert_eq!(sector_up_count(12, -4.0, SzConvention::PauliSum).unwrap(), 4);
        assert_eq!(sector_up_count(12, -2.0, SzConvention::PauliSum).unwrap(), 5);
        assert!(matches!(
            sector_up_count(12, -2.5, SzConvention::HalfSum),
            Err(Error::EmptySector(_))
        ));
        assert!(matches!(
            sector_up_count(4, -3.0, SzConvention::HalfSum),
            Err(Error::EmptySector(_))
        ));
        let err = build_defect_xxz(&DefectXxzParams {
            n_sites: 4,
            sz_sector: 7.0,
            ..Default::default()
        })
        .unwrap_err();
        assert!(err.to_string().contains("empty symmetry sector"));
    }

    #[test]
    fn ising_partners() {
        let (cat, h) = build_defect_ising(&DefectIsingParams::default()).unwrap();
        assert_eq!(cat.dim(), 1024);
        let mut partners = vec![0usize; cat.dim()];
        for e in h.v.entries() {
            assert_eq!(e.value, 0.45);
            partners[e.row] += 1;
            partners[e.col] += 1;
        }
        assert!(partners.iter().all(|&c| c == 9));
        let (_, h0) = build_defect_ising(&DefectIsingParams {
            lambda_x: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert!(h0.v.is_empty());
    }

    #[test]
    fn canonical_order_is_lexicographic() {
        let specs = [
            ModelSpec::Lmg(LmgParams {
                omega: 4,
                ..Default::default()
            }),
            ModelSpec::Dicke(DickeParams {
                n_atoms: 3,
                n_max: 2,
                ..Default::default()
            }),
            ModelSpec::DefectXxz(DefectXxzParams {
                n_sites: 6,
                sz_sector: 0.0,
                ..Default::default()
            }),
            ModelSpec::DefectIsing(DefectIsingParams {
                n_sites: 5,
                ..Default::default()
            }),
        ];
        for spec in &specs {
            let (cat, _) = build(spec).unwrap();
            assert!(cat.labels.windows(2).all(|w| w[0] < w[1]), "{spec:?}");
        }
    }

    #[test]
    fn small_chains_reject_missing_defect_site() {
        assert!(build_defect_ising(&DefectIsingParams {
            n_sites: 3,
            ..Default::default()
        })
        .is_err());
        assert!(build_defect_ising(&DefectIsingParams {
            n_sites: 3,
            mu4: 0.0,
            ..Default::default()
        })
        .is_ok());
    }

    #[test]
    fn sign_flip_counts() {
        let entries = (0..100)
            .map(|k| crate::sparse::Entry {
                row: k,
                col: k + 1,
                value: 0.45,
            })
            .collect();
        let v = SymmetricSparse::new(101, entries).unwrap();
        assert_eq!(randomize_signs(&v, 0.0, 7).unwrap(), v);
        let flipped = randomize_signs(&v, 0.3, 7).unwrap();
        let negatives = flipped.entries().iter().filter(|e| e.value < 0.0).count();
        assert_eq!(negatives, 30);
        assert_eq!(flipped, randomize_signs(&v, 0.3, 7).unwrap());
        assert!(randomize_signs(&v, 1.5, 7).is_err());
    }
}
