use corank::model::{GftModel, ModelConfig, Replacement};
use corank::theory::{
    corank_distribution, expected_num_deps, expected_num_deps_gft, gaussian_binomial, phi, phi_t, pi_k,
    sigma_kappa, GftParams, TheoryTable,
};
use corank::Error;
use proptest::prelude::*;

/// Whether the functional digraph of `map` is weakly connected.
fn connected(map: &[usize]) -> bool {
    let s = map.len();
    let mut label: Vec<usize> = (0..s).collect();
    // s is tiny, so repeated relaxation is fine
    loop {
        let mut changed = false;
        for v in 0..s {
            let (a, b) = (label[v], label[map[v]]);
            let m = a.min(b);
            if label[v] != m || label[map[v]] != m {
                label[v] = m;
                label[map[v]] = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    label.iter().all(|&l| l == 0)
}

fn count_maps(s: usize, fixed_points: bool) -> (u128, u128) {
    let mut map = vec![0usize; s];
    let (mut conn, mut total) = (0u128, 0u128);
    loop {
        if fixed_points || map.iter().enumerate().all(|(i, &v)| i != v) {
            total += 1;
            conn += u128::from(connected(&map));
        }
        let mut i = 0;
        while i < s {
            map[i] += 1;
            if map[i] < s {
                break;
            }
            map[i] = 0;
            i += 1;
        }
        if i == s {
            return (conn, total);
        }
    }
}

#[test]
fn kappa_matches_mapping_enumeration() {
    for s in 1..=7u32 {
        let (c, t) = count_maps(s as usize, true);
        let sk = sigma_kappa(s, Replacement::With).unwrap();
        assert_eq!((sk.connected, sk.total), (Some(c), Some(t)), "with, s={s}");
        assert!((sk.kappa - c as f64 / t as f64).abs() < 1e-12);
    }
    for s in 2..=7u32 {
        let (c, t) = count_maps(s as usize, false);
        let sk = sigma_kappa(s, Replacement::Without).unwrap();
        assert_eq!((sk.connected, sk.total), (Some(c), Some(t)), "without, s={s}");
        assert!((sk.kappa - c as f64 / t as f64).abs() < 1e-12);
    }
}

/// Exact E X_ℓ by summing over every matrix: `draws(i)` lists the equally
/// likely random row tuples of column i.
fn exhaustive_expectation(n: usize, draws: impl Fn(usize) -> Vec<Vec<usize>>) -> Vec<f64> {
    let options: Vec<Vec<Vec<usize>>> = (0..n).map(&draws).collect();
    let mut idx = vec![0usize; n];
    let mut hits = vec![0u64; n + 1];
    let mut matrices = 0u64;
    loop {
        matrices += 1;
        let cols: Vec<u32> = (0..n)
            .map(|i| {
                options[i][idx[i]]
                    .iter()
                    .fold(1u32 << i, |acc, &r| acc ^ (1 << r))
            })
            .collect();
        for set in 1u32..(1 << n) {
            if cols.iter().all(|c| (c & set).count_ones() % 2 == 0) {
                hits[set.count_ones() as usize] += 1;
            }
        }
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    hits.iter().map(|&h| h as f64 / matrices as f64).collect()
}

#[test]
fn expected_dependencies_match_exhaustive_enumeration() {
    let n = 4;
    let with = exhaustive_expectation(n, |_| {
        (0..n).flat_map(|a| (0..n).map(move |b| vec![a, b])).collect()
    });
    for l in 1..=n {
        let got = expected_num_deps(n as u64, l as u64, Replacement::With).unwrap();
        assert!((got - with[l]).abs() <= 1e-10 * with[l].max(1e-300), "with l={l}: {got} vs {}", with[l]);
    }
    let n = 5;
    let without = exhaustive_expectation(n, |i| {
        (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| a != i && b != i && a != b)
            .map(|(a, b)| vec![a, b])
            .collect()
    });
    for l in 1..=n {
        let got = expected_num_deps(n as u64, l as u64, Replacement::Without).unwrap();
        assert!((got - without[l]).abs() <= 1e-10 * without[l].max(1e-300), "without l={l}");
    }
}

fn binom(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn expected_dependencies_match_exact_integer_counts() {
    // numerator and denominator of the column probabilities are integers, so
    // E X_ℓ is an exact rational for small n
    for n in 3u128..=14 {
        for l in 1..=n {
            let (in_w, out_w, den_w) = (2 * l * (n - l), l * l + (n - l) * (n - l), n * n);
            let exact_w = binom(n, l) as f64
                * (in_w.pow(l as u32) * out_w.pow((n - l) as u32)) as f64
                / (den_w.pow(n as u32)) as f64;
            let got = expected_num_deps(n as u64, l as u64, Replacement::With).unwrap();
            assert!((got - exact_w).abs() <= 1e-10 * exact_w.max(1e-300), "with n={n} l={l}");

            let (ni, li) = (n as i128, l as i128);
            let den = (n - 1) * (n - 2);
            let inside = (2 * (li - 1) * (ni - li)) as u128;
            let outside = (li * (li - 1) + (ni - 1 - li) * (ni - 2 - li)) as u128;
            let exact = binom(n, l) as f64
                * (inside.pow(l as u32) * outside.pow((n - l) as u32)) as f64
                / den.pow(n as u32) as f64;
            let got = expected_num_deps(n as u64, l as u64, Replacement::Without).unwrap();
            assert!((got - exact).abs() <= 1e-10 * exact.max(1e-300), "without n={n} l={l}");
        }
    }
}

#[test]
fn expected_dependencies_match_direct_products_up_to_fifty() {
    for n in 15u64..=50 {
        for l in 1..=n {
            let (nf, lf) = (n as f64, l as f64);
            let x = lf / nf;
            let direct = binom(n as u128, l as u128) as f64
                * (2.0 * x * (1.0 - x)).powi(l as i32)
                * (x * x + (1.0 - x) * (1.0 - x)).powi((n - l) as i32);
            let got = expected_num_deps(n, l, Replacement::With).unwrap();
            assert!((got - direct).abs() <= 1e-10 * direct.max(1e-300), "n={n} l={l}");
        }
    }
}

#[test]
fn gft_expectation_reduces_to_gf2_with() {
    for n in [10u64, 40, 200] {
        for l in [1, n / 3, n / 2, n] {
            let a = expected_num_deps_gft(n, l, &GftParams::GF2_WITH).unwrap();
            let b = expected_num_deps(n, l, Replacement::With).unwrap();
            assert_eq!(a, b);
        }
    }
    assert!(expected_num_deps(2, 1, Replacement::Without).is_err());
    assert!(expected_num_deps(10, 0, Replacement::With).is_err());
    assert!(expected_num_deps(10, 11, Replacement::With).is_err());
}

#[test]
fn phi_t_increases_with_gamma() {
    let mut prev = 0.0;
    for i in 1..=50 {
        let g = i as f64 / 50.0;
        let v = phi_t(g, 1e-12).unwrap().value;
        assert!(v > prev, "not increasing at γ={g}");
        prev = v;
    }
    assert_eq!(prev, phi(Replacement::Without, 1e-12).unwrap().value);
}

#[test]
fn limiting_laws_are_distributions() {
    let total: f64 = (0..60).map(pi_k).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for rep in [Replacement::With, Replacement::Without] {
        let d = corank_distribution(25, rep, 1e-12).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(d.iter().all(|&p| p >= 0.0));
        let t = TheoryTable::gf2(rep, 12, 1e-12).unwrap();
        let joint: f64 = t.joint.iter().flatten().sum();
        assert!((joint - 1.0).abs() < 1e-6);
        for (dd, &p) in t.corank.iter().enumerate() {
            let diag: f64 = (0..=dd).map(|s| t.joint[s][dd - s]).sum();
            assert!((diag - p).abs() < 1e-14);
        }
    }
}

#[test]
fn gft_tables_refuse_outside_hypothesis() {
    // γ = f(2) = 1 puts 2γ above 1
    let cfg = ModelConfig::gft(100, 3, GftModel::Two, Some(vec![0.0, 0.0, 1.0]), 0);
    assert!(matches!(TheoryTable::gft(&cfg, 5, 1e-10), Err(Error::OutsideHypothesis(_))));
    let ok = ModelConfig::gft(100, 5, GftModel::Two, Some(vec![0.0, 0.25, 0.25, 0.25, 0.25]), 0);
    let t = TheoryTable::gft(&ok, 5, 1e-10).unwrap();
    let params = GftParams::from_config(&ok).unwrap();
    assert!((params.gamma - 0.25).abs() < 1e-15);
    assert!((t.phi - phi_t(0.25, 1e-10).unwrap().value).abs() < 1e-15);
    let poisson0 = (-t.phi).exp();
    assert!((t.corank[0] - poisson0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn gaussian_binomial_is_symmetric(m in 0u32..14, r in 0u32..14, q in 2u64..6) {
        prop_assume!(r <= m);
        prop_assert_eq!(gaussian_binomial(m, r, q).unwrap(), gaussian_binomial(m, m - r, q).unwrap());
    }

    #[test]
    fn gaussian_binomial_satisfies_pascal(m in 1u32..14, r in 1u32..14, q in 2u64..6) {
        prop_assume!(r <= m);
        let lhs = gaussian_binomial(m, r, q).unwrap();
        let upper = if r < m { gaussian_binomial(m - 1, r, q).unwrap() } else { 0 };
        let rhs = gaussian_binomial(m - 1, r - 1, q).unwrap() + (q as u128).pow(r) * upper;
        prop_assert_eq!(lhs, rhs);
    }
}
