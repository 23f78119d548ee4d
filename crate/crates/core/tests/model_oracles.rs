//! Builders checked against dense matrices assembled directly from operator
//! definitions (tensor products of single-mode and single-spin matrices).

use eigencorr::model::{
    build_defect_ising, build_defect_xxz, build_dicke, build_lmg, randomize_signs, Boundary,
    DefectIsingParams, DefectXxzParams, DickeParams, HamiltonianPair, LmgParams, SzConvention,
};
use eigencorr::sparse::{Entry, SymmetricSparse};
use proptest::prelude::*;

type Dense = Vec<Vec<f64>>;

fn zeros(n: usize) -> Dense {
    vec![vec![0.0; n]; n]
}

fn identity(n: usize) -> Dense {
    let mut m = zeros(n);
    (0..n).for_each(|i| m[i][i] = 1.0);
    m
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = zeros(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != 0.0 {
                for j in 0..n {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

fn add(a: &Dense, b: &Dense, scale: f64) -> Dense {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + scale * y).collect())
        .collect()
}

fn scale(a: &Dense, s: f64) -> Dense {
    a.iter().map(|r| r.iter().map(|x| s * x).collect()).collect()
}

fn transpose(a: &Dense) -> Dense {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i]).collect()).collect()
}

fn kron(a: &Dense, b: &Dense) -> Dense {
    let (n, m) = (a.len(), b.len());
    let mut c = zeros(n * m);
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    c[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    c
}

fn kron_all(ops: &[Dense]) -> Dense {
    ops.iter().skip(1).fold(ops[0].clone(), |acc, op| kron(&acc, op))
}

/// Restriction of `a` to the listed basis indices, in that order.
fn project(a: &Dense, keep: &[usize]) -> Dense {
    keep.iter()
        .map(|&i| keep.iter().map(|&j| a[i][j]).collect())
        .collect()
}

fn assert_matches(h: &HamiltonianPair, expected: &Dense) {
    let n = h.dim();
    assert_eq!(n, expected.len());
    let dense = h.to_dense();
    for i in 0..n {
        for j in 0..n {
            let got = dense[i * n + j];
            assert!(
                (got - expected[i][j]).abs() <= 1e-12,
                "element ({i},{j}): builder {got} vs oracle {}",
                expected[i][j]
            );
        }
    }
    assert!(h.v.entries().iter().all(|e| e.row < e.col), "diagonal or lower entry stored");
}

/// Truncated annihilation operator on `0..=cutoff` quanta.
fn annihilation(cutoff: usize) -> Dense {
    let mut a = zeros(cutoff + 1);
    for n in 1..=cutoff {
        a[n - 1][n] = (n as f64).sqrt();
    }
    a
}

#[test]
fn lmg_matches_three_mode_boson_construction() {
    for omega in 1..=3usize {
        let p = LmgParams {
            omega,
            ..Default::default()
        };
        // each mode holds up to omega quanta; mode 0 is the leftmost factor
        let a = annihilation(omega);
        let ad = transpose(&a);
        let id = identity(omega + 1);
        let mode = |r: usize, op: &Dense| {
            let mut ops = vec![id.clone(), id.clone(), id.clone()];
            ops[r] = op.clone();
            kron_all(&ops)
        };
        let k = |r: usize, s: usize| matmul(&mode(r, &ad), &mode(s, &a));
        let h0 = add(&scale(&k(1, 1), p.eps1), &k(2, 2), p.eps2);
        let v1 = add(&matmul(&k(1, 0), &k(1, 0)), &matmul(&k(0, 1), &k(0, 1)), 1.0);
        let v2 = add(&matmul(&k(2, 0), &k(2, 0)), &matmul(&k(0, 2), &k(0, 2)), 1.0);
        let v3 = add(&matmul(&k(2, 1), &k(2, 0)), &matmul(&k(0, 2), &k(1, 2)), 1.0);
        let v4 = add(&matmul(&k(1, 2), &k(1, 0)), &matmul(&k(0, 1), &k(2, 1)), 1.0);
        let mut full = h0;
        for (mu, v) in [(p.mu1, v1), (p.mu2, v2), (p.mu3, v3), (p.mu4, v4)] {
            full = add(&full, &v, mu);
        }
        // fixed total particle number, lexicographic in (n0, n1, n2)
        let side = omega + 1;
        let mut keep = Vec::new();
        for n0 in 0..=omega {
            for n1 in 0..=omega - n0 {
                let n2 = omega - n0 - n1;
                keep.push((n0 * side + n1) * side + n2);
            }
        }
        let (cat, h) = build_lmg(&p).unwrap();
        assert_eq!(cat.dim(), keep.len());
        assert_matches(&h, &project(&full, &keep));
    }
}

/// Collective spin operators of `n` spin-½ atoms restricted to the
/// symmetric (maximal-j) subspace, basis ordered by number of up spins.
fn collective_spin(n: usize) -> (Dense, Dense) {
    let sp: Dense = vec![vec![0.0, 1.0], vec![0.0, 0.0]];
    let sz: Dense = vec![vec![0.5, 0.0], vec![0.0, -0.5]];
    let id = identity(2);
    let site = |k: usize, op: &Dense| {
        let ops: Vec<Dense> = (0..n).map(|s| if s == k { op.clone() } else { id.clone() }).collect();
        kron_all(&ops)
    };
    let dim = 1 << n;
    let mut jz = zeros(dim);
    let mut jp = zeros(dim);
    for k in 0..n {
        jz = add(&jz, &site(k, &sz), 1.0);
        jp = add(&jp, &site(k, &sp), 1.0);
    }
    // symmetric states |k ups⟩ as normalized sums over bit patterns; bit 0 of
    // each factor is "up" (the first row of σ)
    let ups = |x: usize| (0..n).filter(|b| x >> b & 1 == 0).count();
    let dicke: Vec<Vec<f64>> = (0..=n)
        .map(|k| {
            let members: Vec<usize> = (0..dim).filter(|&x| ups(x) == k).collect();
            let norm = (members.len() as f64).sqrt();
            let mut v = vec![0.0; dim];
            members.iter().for_each(|&x| v[x] = 1.0 / norm);
            v
        })
        .collect();
    let restrict = |op: &Dense| -> Dense {
        (0..=n)
            .map(|r| {
                (0..=n)
                    .map(|c| {
                        let mut s = 0.0;
                        for x in 0..dim {
                            for y in 0..dim {
                                s += dicke[r][x] * op[x][y] * dicke[c][y];
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect()
    };
    (restrict(&jz), restrict(&jp))
}

#[test]
fn dicke_matches_atom_by_atom_construction() {
    for n_atoms in 1..=4usize {
        for n_max in 1..=3usize {
            let p = DickeParams {
                n_atoms,
                n_max,
                omega0: 0.9,
                omega: 1.3,
                lambda: 0.7,
            };
            let (jz, jp) = collective_spin(n_atoms);
            let jx2 = add(&jp, &transpose(&jp), 1.0);
            let a = annihilation(n_max);
            let ad = transpose(&a);
            let ids = identity(n_atoms + 1);
            let idb = identity(n_max + 1);
            // boson is the outer (slow) index
            let h0 = add(
                &scale(&kron(&idb, &jz), p.omega0),
                &kron(&matmul(&ad, &a), &ids),
                p.omega,
            );
            let v = kron(&add(&a, &ad, 1.0), &jx2);
            let full = add(&h0, &v, p.lambda / (n_atoms as f64).sqrt());
            let (cat, h) = build_dicke(&p).unwrap();
            assert_eq!(cat.dim(), (n_max + 1) * (n_atoms + 1));
            assert_matches(&h, &full);
        }
    }
}

#[test]
fn dicke_raising_element_at_defaults() {
    let p = DickeParams::default();
    let (_, h) = build_dicke(&p).unwrap();
    let j = p.n_atoms as f64 / 2.0;
    let spin_states = p.n_atoms + 1;
    for (n, k) in [(0usize, 20usize), (7, 33), (39, 1)] {
        let m = k as f64 - j;
        let from = n * spin_states + k;
        let to = (n + 1) * spin_states + (k - 1);
        let expected = p.lambda / (p.n_atoms as f64).sqrt()
            * ((n + 1) as f64).sqrt()
            * (j * (j + 1.0) - m * (m - 1.0)).sqrt();
        let got = h.v.get(from, to);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }
}

/// σx, σz and σ+; σyσy is real and is built from σ± instead of complex entries.
fn pauli() -> (Dense, Dense, Dense) {
    let x = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    let z = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
    let plus = vec![vec![0.0, 1.0], vec![0.0, 0.0]];
    (x, z, plus)
}

fn on_site(n: usize, ops: &[(usize, &Dense)]) -> Dense {
    let id = identity(2);
    let factors: Vec<Dense> = (1..=n)
        .map(|s| {
            ops.iter()
                .find(|(site, _)| *site == s)
                .map_or(id.clone(), |(_, op)| (*op).clone())
        })
        .collect();
    kron_all(&factors)
}

#[test]
fn defect_xxz_matches_pauli_construction() {
    let (x, z, plus) = pauli();
    let minus = transpose(&plus);
    for n in 2..=4usize {
        let mu4 = if n >= 4 { 0.8 } else { 0.0 };
        let p = DefectXxzParams {
            n_sites: n,
            j_flip: 1.4,
            mu_zz: 0.5,
            mu1: 1.11,
            mu4,
            sz_sector: 0.0,
            sz_convention: SzConvention::HalfSum,
        };
        let dim = 1 << n;
        let mut full = scale(&on_site(n, &[(1, &z)]), p.mu1);
        if n >= 4 {
            full = add(&full, &on_site(n, &[(4, &z)]), mu4);
        }
        for s in 1..n {
            let xx = on_site(n, &[(s, &x), (s + 1, &x)]);
            // σyσy = −(σ+ − σ−)(σ+ − σ−) per site pair
            let d = add(&plus, &minus, -1.0);
            let yy = scale(&on_site(n, &[(s, &d), (s + 1, &d)]), -1.0);
            full = add(&full, &add(&xx, &yy, 1.0), p.j_flip);
            full = add(&full, &on_site(n, &[(s, &z), (s + 1, &z)]), p.mu_zz);
        }
        // first kron factor is site 1; its first basis vector is spin up
        let up_count = |idx: usize| (0..n).filter(|b| idx >> b & 1 == 0).count();
        let for_sector = |sz: f64| {
            let want = (sz + n as f64 / 2.0) as usize;
            // basis labels sorted lexicographically with down < up
            let mut keep: Vec<usize> = (0..dim).filter(|&i| up_count(i) == want).collect();
            keep.sort_by_key(|&i| std::cmp::Reverse(i));
            keep
        };
        for two_sz in (-(n as i64)..=n as i64).step_by(2) {
            let sz = two_sz as f64 / 2.0;
            let (cat, h) = build_defect_xxz(&DefectXxzParams { sz_sector: sz, ..p.clone() }).unwrap();
            let keep = for_sector(sz);
            assert_eq!(cat.dim(), keep.len());
            assert_matches(&h, &project(&full, &keep));
            assert!(h.v.entries().iter().all(|e| (e.value - 2.8).abs() < 1e-12));
        }
    }
}

#[test]
fn defect_ising_matches_pauli_construction() {
    let (x, z, _) = pauli();
    for n in 2..=4usize {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let mu4 = if n >= 4 { 1.11 } else { 0.0 };
            let p = DefectIsingParams {
                n_sites: n,
                jz: 1.0,
                lambda_x: 0.45,
                mu1: 1.11,
                mu4,
                boundary,
            };
            let mut full = scale(&on_site(n, &[(1, &z)]), p.mu1);
            if n >= 4 {
                full = add(&full, &on_site(n, &[(4, &z)]), mu4);
            }
            let last_bond = match boundary {
                Boundary::Open => n - 1,
                Boundary::Periodic => n,
            };
            for s in 1..=last_bond {
                // periodic N = 2 visits the same pair twice, as the sum is written
                let zz = on_site(n, &[(s, &z), (s % n + 1, &z)]);
                full = add(&full, &zz, p.jz);
            }
            for s in 1..n {
                full = add(&full, &on_site(n, &[(s, &x)]), p.lambda_x);
            }
            // reverse order turns "up first" factors into down < up labels
            let keep: Vec<usize> = (0..1usize << n).rev().collect();
            let (_, h) = build_defect_ising(&p).unwrap();
            assert_matches(&h, &project(&full, &keep));
        }
    }
}

fn random_sparse(dim: usize, raw: &[(usize, usize, f64)]) -> SymmetricSparse {
    let mut seen = std::collections::BTreeMap::new();
    for &(a, b, v) in raw {
        let (i, j) = (a % dim, b % dim);
        if i != j && v != 0.0 {
            seen.insert((i.min(j), i.max(j)), v);
        }
    }
    SymmetricSparse::new(
        dim,
        seen.into_iter()
            .map(|((row, col), value)| Entry { row, col, value })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn sign_flips_change_signs_only(
        raw in prop::collection::vec((0usize..40, 0usize..40, 0.1f64..3.0), 1..120),
        fraction in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let v = random_sparse(40, &raw);
        let flipped = randomize_signs(&v, fraction, seed).unwrap();
        prop_assert_eq!(flipped.nnz_upper(), v.nnz_upper());
        let mut changed = 0;
        for (a, b) in v.entries().iter().zip(flipped.entries()) {
            prop_assert_eq!((a.row, a.col), (b.row, b.col));
            prop_assert_eq!(a.value.abs(), b.value.abs());
            prop_assert_eq!(flipped.get(b.col, b.row), b.value);
            if a.value != b.value {
                changed += 1;
            }
        }
        prop_assert_eq!(changed, (fraction * v.nnz_upper() as f64).round() as usize);
        prop_assert_eq!(randomize_signs(&v, fraction, seed).unwrap(), flipped);
    }
}

#[test]
fn sign_flip_edge_cases() {
    let (_, h) = build_defect_ising(&DefectIsingParams::default()).unwrap();
    assert_eq!(randomize_signs(&h.v, 0.0, 3).unwrap(), h.v);
    let all = randomize_signs(&h.v, 1.0, 3).unwrap();
    assert!(all.entries().iter().all(|e| e.value == -0.45));
    assert!(randomize_signs(&h.v, 1.5, 3).is_err());
}
