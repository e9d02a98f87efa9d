use corank::fixture::{parse_fixture, sample_to_fixture, write_fixture};
use corank::model::{sample, GftModel, ModelConfig, Replacement};
use corank::{BitMatrix, Error, PrimeFieldMatrix};
use corank::model::MatrixData;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampled_matrices_round_trip(n in 3usize..60, r in 1usize..3, s in 2usize..4, with in any::<bool>(), seed in any::<u64>(), trial in 0u64..1000) {
        let rep = if with { Replacement::With } else { Replacement::Without };
        let cfg = ModelConfig::gf2(n, r, s, rep, seed);
        let smp = sample(&cfg, trial).unwrap();
        let text = sample_to_fixture(&smp);
        let back = parse_fixture(&text).unwrap();
        prop_assert_eq!(&back.matrix, &smp.matrix);
        prop_assert_eq!(back.provenance.as_ref(), Some(&smp.provenance));
    }

    #[test]
    fn prime_field_matrices_round_trip(rows in 1usize..20, cols in 1usize..20, p_idx in 0usize..4, entries in proptest::collection::vec(any::<u32>(), 400)) {
        let p = [3u64, 5, 7, 65521][p_idx];
        let mut m = PrimeFieldMatrix::zeros(p, rows, cols).unwrap();
        for r in 0..rows {
            for c in 0..cols {
                let v = entries[r * 20 + c];
                // about half the entries zero
                m.set(r, c, if v % 2 == 0 { 0 } else { v % p as u32 }).unwrap();
            }
        }
        let data = MatrixData::Gfp(m);
        let text = write_fixture(&data, None);
        let back = parse_fixture(&text).unwrap();
        prop_assert_eq!(back.matrix, data);
        prop_assert!(back.provenance.is_none());
    }
}

#[test]
fn gft_provenance_survives() {
    let cfg = ModelConfig::gft(30, 7, GftModel::Two, Some(vec![0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5]), 12);
    let smp = sample(&cfg, 9).unwrap();
    let back = parse_fixture(&sample_to_fixture(&smp)).unwrap();
    assert_eq!(back.provenance.unwrap().config, cfg);
}

#[test]
fn comments_and_blank_lines_are_skipped() {
    let text = "# made by hand\ncorank-matrix v1\n\nrows 2 cols 1 field gf2\n# column 0\n0: 0:1 1:1\n";
    let f = parse_fixture(text).unwrap();
    assert_eq!(f.matrix, MatrixData::Gf2(BitMatrix::from_dense(&[vec![1], vec![1]]).unwrap()));
}

#[test]
fn malformed_inputs_report_line_and_column() {
    let cases = [
        ("corank-matrix v1\nrows 2 cols 2 field gf2\n0: 0:1\n0: 1:1\n", 4, 1),
        ("corank-matrix v1\nrows 2 cols 2 field gf2\n0: 0:1 0:1\n", 3, 8),
        ("corank-matrix v1\nrows 2 cols 2 field gf2\n7: 0:1\n", 3, 1),
        ("corank-matrix v1\nrows 2 cols 2 field gf3\n0: 0:3\n", 3, 6),
        ("corank-matrix v1\nrows 2 cols 2 field gf3\n0 0:1\n", 3, 1),
        ("corank-matrix v1\nrows x cols 2 field gf2\n", 2, 6),
        ("corank-matrix v1\nrows 5 cols 5 field gf2\nprovenance model=gf2/r1/s3/without seed=1 trial=0\n", 3, 1),
        // s = 3 without replacement needs n >= 3; the tag is blamed
        ("corank-matrix v1\nrows 2 cols 2 field gf2\nprovenance model=gf2/r1/s3/without seed=1 trial=0 derived=5\n", 3, 18),
    ];
    for (text, line, column) in cases {
        match parse_fixture(text) {
            Err(Error::Parse { line: l, column: c, .. }) => {
                assert_eq!((l, c), (line, column), "input {text:?}")
            }
            other => panic!("expected a parse error for {text:?}, got {other:?}"),
        }
    }
}
