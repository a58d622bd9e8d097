//! Matrix Market coordinate files and 0-indexed TSV triples.
//!
//! Values are written with 17 significant digits, enough for an exact
//! round trip of every `f64`.

use std::io::{BufRead, Write};

use super::SparseMatrix;
use crate::{Error, Result};

const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn write_matrix_market<W: Write>(mut w: W, m: &SparseMatrix) -> Result<()> {
    writeln!(w, "{MM_HEADER}")?;
    writeln!(w, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
    for (r, c, v) in m.entries() {
        writeln!(w, "{} {} {:.16e}", r + 1, c + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a coordinate Matrix Market file. `real`, `integer` and `pattern`
/// fields are accepted, with `general` or `symmetric` symmetry.
pub fn read_matrix_market<R: BufRead>(r: R) -> Result<SparseMatrix> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
    let header = header?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
    {
        return Err(parse_err(
            1,
            format!("unsupported Matrix Market header `{header}`"),
        ));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(parse_err(1, format!("unsupported field type `{other}`"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match dims {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "expected `rows cols nnz`".into()));
                }
                let d: Vec<usize> = fields
                    .iter()
                    .map(|f| {
                        f.parse()
                            .map_err(|_| parse_err(lineno, format!("bad count `{f}`")))
                    })
                    .collect::<Result<_>>()?;
                dims = Some((d[0], d[1], d[2]));
                triplets.reserve(d[2]);
            }
            Some((n_rows, n_cols, _)) => {
                let want = if pattern { 2 } else { 3 };
                if fields.len() < want {
                    return Err(parse_err(lineno, format!("expected {want} fields")));
                }
                let r = parse_index(fields[0], n_rows, lineno)?;
                let c = parse_index(fields[1], n_cols, lineno)?;
                let v = if pattern {
                    1.0
                } else {
                    fields[2]
                        .parse::<f64>()
                        .map_err(|_| parse_err(lineno, format!("bad value `{}`", fields[2])))?
                };
                triplets.push((r, c, v));
                if symmetric && r != c {
                    triplets.push((c, r, v));
                }
            }
        }
    }
    let (n_rows, n_cols, nnz) = dims.ok_or(Error::EmptyInput)?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(parse_err(
            0,
            format!("header announces {nnz} entries, found {stored}"),
        ));
    }
    SparseMatrix::from_triplets(n_rows, n_cols, triplets)
}

/// Writes `row<TAB>col<TAB>value` lines, 0-indexed, in canonical order.
pub fn write_tsv<W: Write>(mut w: W, m: &SparseMatrix) -> Result<()> {
    for (r, c, v) in m.entries() {
        writeln!(w, "{r}\t{c}\t{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads TSV triples. Without explicit `shape`, the dimensions are the
/// largest indices seen plus one.
pub fn read_tsv<R: BufRead>(r: R, shape: Option<(usize, usize)>) -> Result<SparseMatrix> {
    let mut triplets = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(i + 1, "expected `row\\tcol\\tvalue`".into()));
        }
        let idx = |f: &str| {
            f.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(i + 1, format!("bad index `{f}`")))
        };
        let v = fields[2]
            .trim()
            .parse::<f64>()
            .map_err(|_| parse_err(i + 1, format!("bad value `{}`", fields[2])))?;
        triplets.push((idx(fields[0])?, idx(fields[1])?, v));
    }
    let (n_rows, n_cols) = shape.unwrap_or_else(|| {
        triplets.iter().fold((0, 0), |(mr, mc), &(r, c, _)| {
            (mr.max(r + 1), mc.max(c + 1))
        })
    });
    SparseMatrix::from_triplets(n_rows, n_cols, triplets)
}

fn parse_index(field: &str, bound: usize, line: usize) -> Result<usize> {
    let i: usize = field
        .parse()
        .map_err(|_| parse_err(line, format!("bad index `{field}`")))?;
    if i == 0 || i > bound {
        return Err(parse_err(line, format!("index {i} outside 1..={bound}")));
    }
    Ok(i - 1)
}

fn parse_err(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matrix_market_layout() {
        let m = SparseMatrix::from_triplets(2, 3, vec![(1, 2, 0.5), (0, 0, 1.0)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "%%MatrixMarket matrix coordinate real general\n2 3 2\n1 1 1.0000000000000000e0\n2 3 5.0000000000000000e-1\n"
        );
    }

    #[test]
    fn reads_symmetric_pattern() {
        let text =
            "%%MatrixMarket matrix coordinate pattern symmetric\n% comment\n3 3 2\n2 1\n3 3\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(
            m.entries().collect::<Vec<_>>(),
            vec![(1, 0, 1.0), (0, 1, 1.0), (2, 2, 1.0)]
        );
    }

    #[test]
    fn rejects_bad_entries() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(
            read_matrix_market(text.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix_market(short.as_bytes()).is_err());
        assert!(read_tsv("0\t1\n".as_bytes(), None).is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = SparseMatrix> {
        (1usize..12, 1usize..12).prop_flat_map(|(r, c)| {
            prop::collection::vec(
                (0..r, 0..c, prop_oneof![-1e6f64..1e6, -1e-300f64..1e-300]),
                0..40,
            )
            .prop_map(move |t| SparseMatrix::from_triplets(r, c, t).unwrap())
        })
    }

    proptest! {
        #[test]
        fn both_formats_round_trip_exactly(m in arb_matrix()) {
            let mut mtx = Vec::new();
            write_matrix_market(&mut mtx, &m).unwrap();
            prop_assert_eq!(read_matrix_market(mtx.as_slice()).unwrap(), m.clone());

            let mut tsv = Vec::new();
            write_tsv(&mut tsv, &m).unwrap();
            prop_assert_eq!(read_tsv(tsv.as_slice(), Some(m.shape())).unwrap(), m);
        }
    }
}
