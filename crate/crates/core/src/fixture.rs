//! Plain-text matrix fixtures.
//!
//! ```text
//! corank-matrix v1
//! rows 3 cols 3 field gf2
//! provenance model=gf2/r1/s3/without seed=7 trial=0 derived=123
//! 0: 0:1 1:1 2:1
//! 1: 0:1 1:1 2:1
//! 2: 0:1 1:1 2:1
//! ```
//!
//! One line per column, `col: row:value ...`, values nonzero and reduced.
//! The provenance line is optional. Blank lines and `#` comments are skipped.

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::gfp::PrimeFieldMatrix;
use crate::model::{MatrixData, ModelConfig, Provenance, SampledMatrix};

pub const HEADER: &str = "corank-matrix v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub matrix: MatrixData,
    pub provenance: Option<Provenance>,
}

pub fn write_fixture(matrix: &MatrixData, provenance: Option<&Provenance>) -> String {
    let (rows, cols) = (matrix.n_rows(), matrix.n_cols());
    let field = match matrix {
        MatrixData::Gf2(_) => "gf2".to_string(),
        MatrixData::Gfp(m) => format!("gf{}", m.modulus()),
    };
    let mut out = format!("{HEADER}\nrows {rows} cols {cols} field {field}\n");
    if let Some(p) = provenance {
        out.push_str(&format!(
            "provenance model={} seed={} trial={} derived={}\n",
            p.config.tag(),
            p.config.master_seed,
            p.trial,
            p.derived_seed
        ));
    }
    let mut entries: Vec<Vec<(usize, u32)>> = vec![Vec::new(); cols];
    match matrix {
        MatrixData::Gf2(m) => {
            for r in 0..rows {
                for c in m.row_ones(r) {
                    entries[c].push((r, 1));
                }
            }
        }
        MatrixData::Gfp(m) => {
            for r in 0..rows {
                for (c, &v) in m.row(r).iter().enumerate() {
                    if v != 0 {
                        entries[c].push((r, v));
                    }
                }
            }
        }
    }
    for (c, col) in entries.iter().enumerate() {
        out.push_str(&format!("{c}:"));
        for (r, v) in col {
            out.push_str(&format!(" {r}:{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn sample_to_fixture(sample: &SampledMatrix) -> String {
    write_fixture(&sample.matrix, Some(&sample.provenance))
}

/// A whitespace-separated token with its 1-based column.
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    out
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn number<T: std::str::FromStr>(tok: &Token<'_>, text: &str, offset: usize, line: usize, what: &str) -> Result<T> {
    text.parse()
        .map_err(|_| perr(line, tok.column + offset, format!("expected {what}, found `{text}`")))
}

pub fn parse_fixture(input: &str) -> Result<Fixture> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    let (ln, header) = lines.next().ok_or_else(|| perr(1, 1, "empty input"))?;
    if header.trim() != HEADER {
        return Err(perr(ln, 1, format!("expected header `{HEADER}`")));
    }

    let (ln, dims) = lines
        .next()
        .ok_or_else(|| perr(ln + 1, 1, "missing `rows R cols C field F` line"))?;
    let toks = tokens(dims);
    let keys = ["rows", "cols", "field"];
    if toks.len() != 6 {
        let col = toks.get(6).map_or(dims.len() + 1, |t| t.column);
        return Err(perr(ln, col, "expected `rows R cols C field F`"));
    }
    for (i, key) in keys.iter().enumerate() {
        if toks[2 * i].text != *key {
            return Err(perr(ln, toks[2 * i].column, format!("expected `{key}`")));
        }
    }
    let rows: usize = number(&toks[1], toks[1].text, 0, ln, "a row count")?;
    let cols: usize = number(&toks[3], toks[3].text, 0, ln, "a column count")?;
    let field_tok = &toks[5];
    let p: u64 = field_tok
        .text
        .strip_prefix("gf")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(ln, field_tok.column, format!("bad field `{}`", field_tok.text)))?;
    let mut matrix = if p == 2 {
        MatrixData::Gf2(BitMatrix::zeros(rows, cols).map_err(|e| perr(ln, 1, e.to_string()))?)
    } else {
        MatrixData::Gfp(
            PrimeFieldMatrix::zeros(p, rows, cols)
                .map_err(|e| perr(ln, field_tok.column, e.to_string()))?,
        )
    };

    let mut provenance = None;
    let mut seen = vec![false; cols];
    let mut next = lines.next();
    if let Some((pl, text)) = next {
        if text.trim_start().starts_with("provenance") {
            provenance = Some(parse_provenance(pl, text, rows)?);
            next = lines.next();
        }
    }

    while let Some((ln, text)) = next {
        let toks = tokens(text);
        let head = &toks[0];
        let col_text = head
            .text
            .strip_suffix(':')
            .ok_or_else(|| perr(ln, head.column, "expected `<column>:`"))?;
        let col: usize = number(head, col_text, 0, ln, "a column index")?;
        if col >= cols {
            return Err(perr(ln, head.column, format!("column {col} out of range 0..{cols}")));
        }
        if std::mem::replace(&mut seen[col], true) {
            return Err(perr(ln, head.column, format!("column {col} listed twice")));
        }
        let mut rows_here = Vec::new();
        for tok in &toks[1..] {
            let (r, v) = tok
                .text
                .split_once(':')
                .ok_or_else(|| perr(ln, tok.column, "expected `row:value`"))?;
            let row: usize = number(tok, r, 0, ln, "a row index")?;
            let value: u32 = number(tok, v, r.len() + 1, ln, "a value")?;
            if row >= rows {
                return Err(perr(ln, tok.column, format!("row {row} out of range 0..{rows}")));
            }
            if rows_here.contains(&row) {
                return Err(perr(ln, tok.column, format!("row {row} repeated in column {col}")));
            }
            rows_here.push(row);
            if value == 0 || value as u64 >= p {
                return Err(perr(
                    ln,
                    tok.column + r.len() + 1,
                    format!("value {value} is not a nonzero residue mod {p}"),
                ));
            }
            match &mut matrix {
                MatrixData::Gf2(m) => m.set(row, col, true),
                MatrixData::Gfp(m) => m.set(row, col, value)?,
            }
        }
        next = lines.next();
    }
    Ok(Fixture { matrix, provenance })
}

fn parse_provenance(ln: usize, text: &str, n: usize) -> Result<Provenance> {
    let mut tag = None;
    let mut seed = None;
    let mut trial = None;
    let mut derived = None;
    for tok in tokens(text).iter().skip(1) {
        let (k, v) = tok
            .text
            .split_once('=')
            .ok_or_else(|| perr(ln, tok.column, "expected `key=value`"))?;
        let off = k.len() + 1;
        match k {
            "model" => tag = Some((v.to_string(), tok.column + off)),
            "seed" => seed = Some(number(tok, v, off, ln, "a seed")?),
            "trial" => trial = Some(number(tok, v, off, ln, "a trial index")?),
            "derived" => derived = Some(number(tok, v, off, ln, "a derived seed")?),
            _ => return Err(perr(ln, tok.column, format!("unknown provenance key `{k}`"))),
        }
    }
    let missing = |what: &str| perr(ln, 1, format!("provenance is missing `{what}`"));
    let (tag, tag_col) = tag.ok_or_else(|| missing("model"))?;
    let seed = seed.ok_or_else(|| missing("seed"))?;
    let config =
        ModelConfig::from_tag(&tag, n, seed).map_err(|e| perr(ln, tag_col, e.to_string()))?;
    Ok(Provenance {
        config,
        trial: trial.ok_or_else(|| missing("trial"))?,
        derived_seed: derived.ok_or_else(|| missing("derived"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample, GftModel, Replacement};

    #[test]
    fn round_trips_samples() {
        let cfgs = [
            ModelConfig::gf2(20, 2, 3, Replacement::With, 4),
            ModelConfig::gft(20, 5, GftModel::Three, Some(vec![0.0, 0.1, 0.2, 0.3, 0.4]), 4),
        ];
        for cfg in cfgs {
            let s = sample(&cfg, 3).unwrap();
            let text = sample_to_fixture(&s);
            let back = parse_fixture(&text).unwrap();
            assert_eq!(back.matrix, s.matrix);
            assert_eq!(back.provenance.as_ref(), Some(&s.provenance));
            assert_eq!(write_fixture(&back.matrix, back.provenance.as_ref()), text);
        }
    }

    #[test]
    fn provenance_is_optional() {
        let text = "corank-matrix v1\nrows 2 cols 2 field gf2\n0: 0:1\n1: 1:1\n";
        let f = parse_fixture(text).unwrap();
        assert!(f.provenance.is_none());
        assert_eq!(f.matrix, MatrixData::Gf2(BitMatrix::identity(2).unwrap()));
    }

    #[test]
    fn errors_carry_positions() {
        let bad = "corank-matrix v1\nrows 2 cols 2 field gf2\n0: 0:1\n1: 5:1\n";
        assert_eq!(
            parse_fixture(bad),
            Err(Error::Parse {
                line: 4,
                column: 4,
                message: "row 5 out of range 0..2".into()
            })
        );
        let bad_value = "corank-matrix v1\nrows 2 cols 2 field gf3\n0: 1:x\n";
        assert!(matches!(
            parse_fixture(bad_value),
            Err(Error::Parse { line: 3, column: 6, .. })
        ));
        assert!(matches!(
            parse_fixture("nope\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_fixture("corank-matrix v1\nrows 2 cols 2 field gf4\n"),
            Err(Error::Parse { line: 2, column: 21, .. })
        ));
    }
}
