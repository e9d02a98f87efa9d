use corank::model::{derive_seed, sample, sample_gf2, sample_gft, Field, GftModel, ModelConfig, Replacement};
use corank::{gf2_rank, BitMatrix};

/// Weight-1 column count for `r = 1, s = 3` with replacement, by enumerating
/// every (a, b) pair for every diagonal position.
fn weight_one_pairs(n: usize) -> usize {
    let mut hits = 0;
    for a in 0..n {
        for b in 0..n {
            // column 0 without loss of generality
            let mut col = vec![0u8; n];
            for r in [0, a, b] {
                col[r] ^= 1;
            }
            hits += usize::from(col.iter().map(|&x| x as usize).sum::<usize>() == 1);
        }
    }
    hits
}

#[test]
fn weight_one_column_fraction_with_replacement() {
    for n in [3usize, 7, 20, 100] {
        assert_eq!(weight_one_pairs(n), 3 * n - 2, "n={n}");
    }
    let n = 20;
    let p = (3 * n - 2) as f64 / (n * n) as f64;
    let cfg = ModelConfig::gf2(n, 1, 3, Replacement::With, 31);
    let trials = 2000;
    let mut ones = 0usize;
    for t in 0..trials {
        let s = sample_gf2(&cfg, t).unwrap();
        ones += s
            .matrix
            .as_gf2()
            .unwrap()
            .column_weights()
            .iter()
            .filter(|&&w| w == 1)
            .count();
    }
    let cols = (trials as usize * n) as f64;
    let se = (p * (1.0 - p) / cols).sqrt();
    let got = ones as f64 / cols;
    assert!((got - p).abs() < 4.0 * se, "weight-1 fraction {got} vs {p} (se {se})");
}

#[test]
fn without_replacement_columns_have_s_distinct_rows() {
    for (r, s) in [(1, 2), (1, 3), (2, 3), (3, 4)] {
        let cfg = ModelConfig::gf2(50, r, s, Replacement::Without, 8);
        for t in 0..20 {
            let m = sample_gf2(&cfg, t).unwrap();
            let m = m.matrix.as_gf2().unwrap();
            assert_eq!(m.n_cols(), r * 50);
            for c in 0..m.n_cols() {
                let col = m.column(c);
                assert_eq!(col.weight(), s);
                assert!(col.get(c % 50), "diagonal missing in column {c}");
            }
        }
    }
}

#[test]
fn n_two_with_replacement_is_exhaustively_uniform() {
    // column i is e_i + e_a with a uniform in {0, 1}: a = i cancels to zero,
    // otherwise both rows are set. Four equally likely matrices.
    let cfg = ModelConfig::gf2(2, 1, 2, Replacement::With, 77);
    let trials = 8000u64;
    let mut counts = [0u64; 4];
    let mut rank_counts = [0u64; 3];
    for t in 0..trials {
        let s = sample_gf2(&cfg, t).unwrap();
        let m = s.matrix.as_gf2().unwrap();
        let code = usize::from(m.column(0).weight() == 2) | (usize::from(m.column(1).weight() == 2) << 1);
        for c in 0..2 {
            assert!(matches!(m.column(c).weight(), 0 | 2));
        }
        counts[code] += 1;
        rank_counts[gf2_rank(m)] += 1;
    }
    let se = (0.25 * 0.75 / trials as f64).sqrt();
    for (i, &c) in counts.iter().enumerate() {
        let f = c as f64 / trials as f64;
        assert!((f - 0.25).abs() < 4.0 * se, "outcome {i}: {f}");
    }
    assert_eq!(rank_counts[2], 0);
    assert_eq!(rank_counts[0], counts[0]);
}

#[test]
fn n_two_without_replacement_is_forced() {
    let cfg = ModelConfig::gf2(2, 1, 2, Replacement::Without, 1);
    let all_ones = BitMatrix::from_dense(&[vec![1, 1], vec![1, 1]]).unwrap();
    for t in 0..50 {
        let s = sample_gf2(&cfg, t).unwrap();
        assert_eq!(s.matrix.as_gf2().unwrap(), &all_ones);
    }
}

#[test]
fn model_two_off_diagonal_values_follow_f() {
    let f = vec![0.0, 0.1, 0.2, 0.3, 0.4];
    let n = 1000;
    let cfg = ModelConfig::gft(n, 5, GftModel::Two, Some(f.clone()), 2024);
    let mut counts = [0u64; 5];
    for t in 0..50 {
        let s = sample_gft(&cfg, t).unwrap();
        let m = s.matrix.as_gfp().unwrap();
        for r in 0..n {
            for (c, &v) in m.row(r).iter().enumerate() {
                if c == r {
                    assert_eq!(v, 1, "model 2 diagonal must be 1");
                } else if v != 0 {
                    counts[v as usize] += 1;
                }
            }
        }
    }
    let total: u64 = counts.iter().sum();
    assert_eq!(total, 50 * 2 * n as u64);
    for v in 1..5 {
        let p = f[v];
        let se = (p * (1.0 - p) / total as f64).sqrt();
        let got = counts[v] as f64 / total as f64;
        assert!((got - p).abs() < 3.0 * se, "value {v}: {got} vs {p}");
    }
}

#[test]
fn model_one_is_all_ones() {
    let cfg = ModelConfig::gft(40, 3, GftModel::One, None, 3);
    let s = sample(&cfg, 0).unwrap();
    let m = s.matrix.as_gfp().unwrap();
    for c in 0..40 {
        let col: Vec<u32> = (0..40).map(|r| m.get(r, c)).filter(|&v| v != 0).collect();
        assert_eq!(col, vec![1, 1, 1]);
    }
}

#[test]
fn model_three_over_two_matches_gf2_sampler() {
    let gf2 = ModelConfig::gf2(300, 1, 3, Replacement::Without, 55);
    let gft = ModelConfig::gft(300, 2, GftModel::Three, Some(vec![0.0, 1.0]), 55);
    assert_eq!(gft.field, Field::Gf2);
    for t in 0..5 {
        let a = sample_gf2(&gf2, t).unwrap();
        let a = a.matrix.as_gf2().unwrap();
        let b = sample_gft(&gft, t).unwrap();
        let b = b.matrix.as_gfp().unwrap();
        for r in 0..300 {
            for c in 0..300 {
                assert_eq!(u32::from(a.get(r, c)), b.get(r, c));
            }
        }
    }
}

#[test]
fn samples_are_reproducible_from_seed_and_trial() {
    let cfg = ModelConfig::gf2(100, 2, 3, Replacement::With, 9);
    let a = sample(&cfg, 4).unwrap();
    let b = sample(&cfg, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.provenance.derived_seed, derive_seed(9, 4));
    assert_ne!(sample(&cfg, 5).unwrap().matrix, a.matrix);
    assert_ne!(derive_seed(9, 4), derive_seed(10, 4));
}

#[test]
fn invalid_configurations_are_refused() {
    assert!(sample(&ModelConfig::gf2(1, 1, 3, Replacement::Without, 0), 0).is_err());
    assert!(sample(&ModelConfig::gf2(10, 0, 3, Replacement::With, 0), 0).is_err());
    let bad_f = ModelConfig::gft(10, 5, GftModel::Two, Some(vec![0.5, 0.5, 0.0, 0.0, 0.0]), 0);
    assert!(sample(&bad_f, 0).is_err());
    let short_f = ModelConfig::gft(10, 5, GftModel::Two, Some(vec![0.0, 1.0]), 0);
    assert!(sample(&short_f, 0).is_err());
}
