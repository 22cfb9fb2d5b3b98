//! Plain-text file formats.
//!
//! Designs (`QSD1`):
//!
//! ```text
//! QSD1 q=2 n=7
//! B 1 0000100 0000010 0000001
//! B 3 -
//! ```
//!
//! Each block line gives a multiplicity and the canonical basis rows; `-` is
//! the zero subspace. Parallelisms (`QSP1`) group block lines under `S <i>`
//! headers, one per spread. `#` starts a comment, blank lines are ignored.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use crate::design::DesignMultiset;
use crate::error::{Error, Result};
use crate::gf::Field;
use crate::subspace::{format_vector, parse_vector, Subspace};

fn content(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn parse_header(line: usize, text: &str, magic: &str) -> Result<(u8, usize)> {
    let mut parts = text.split_whitespace();
    if parts.next() != Some(magic) {
        return Err(Error::parse(line, format!("expected {magic} header")));
    }
    let (mut q, mut n) = (None, None);
    for p in parts {
        let (key, value) = p
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("malformed header field {p:?}")))?;
        let value: usize = value
            .parse()
            .map_err(|_| Error::parse(line, format!("malformed number in {p:?}")))?;
        match key {
            "q" => q = Some(value),
            "n" => n = Some(value),
            _ => return Err(Error::parse(line, format!("unknown header field {key:?}"))),
        }
    }
    let q = q.ok_or_else(|| Error::parse(line, "header lacks q"))?;
    let n = n.ok_or_else(|| Error::parse(line, "header lacks n"))?;
    let q = u8::try_from(q).map_err(|_| Error::parse(line, format!("unsupported field order {q}")))?;
    Field::shared(q as u32).map_err(|e| Error::parse(line, e.to_string()))?;
    if n == 0 || n > crate::subspace::MAX_AMBIENT {
        return Err(Error::parse(line, format!("ambient dimension {n} out of range")));
    }
    Ok((q, n))
}

fn parse_block(line: usize, text: &str, field: &Field, n: usize) -> Result<(Subspace, u64)> {
    let mut parts = text.split_whitespace();
    parts.next();
    let mult: u64 = parts
        .next()
        .and_then(|m| m.parse().ok())
        .filter(|&m| m > 0)
        .ok_or_else(|| Error::parse(line, "block multiplicity must be a positive integer"))?;
    let rest: Vec<&str> = parts.collect();
    if rest == ["-"] {
        return Ok((Subspace::zero(field.order(), n), mult));
    }
    if rest.is_empty() {
        return Err(Error::parse(line, "block has no rows (use - for the zero subspace)"));
    }
    let rows = rest
        .iter()
        .map(|r| {
            let v = parse_vector(r, field.order()).map_err(|e| Error::parse(line, e.to_string()))?;
            if v.len() != n {
                return Err(Error::parse(line, format!("row {r:?} has length {} not {n}", v.len())));
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let s = Subspace::from_canonical(field, n, rows)
        .map_err(|_| Error::parse(line, "rows are not the canonical reduced row echelon basis"))?;
    Ok((s, mult))
}

fn block_line(b: &Subspace, mult: u64) -> String {
    if b.dim() == 0 {
        format!("B {mult} -")
    } else {
        let rows: Vec<String> = b.rows().map(format_vector).collect();
        format!("B {mult} {}", rows.join(" "))
    }
}

pub fn write_design<W: Write>(d: &DesignMultiset, mut w: W) -> io::Result<()> {
    writeln!(w, "QSD1 q={} n={}", d.q(), d.ambient_dim())?;
    for (b, m) in d.blocks() {
        writeln!(w, "{}", block_line(b, m))?;
    }
    Ok(())
}

pub fn design_to_string(d: &DesignMultiset) -> String {
    let mut out = Vec::new();
    write_design(d, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("ascii output")
}

pub fn read_design<R: BufRead>(r: R) -> Result<DesignMultiset> {
    let mut design: Option<DesignMultiset> = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let text = content(&line);
        if text.is_empty() {
            continue;
        }
        match &mut design {
            None => {
                let (q, n) = parse_header(lineno, text, "QSD1")?;
                design = Some(DesignMultiset::new(q, n)?);
            }
            Some(d) => {
                if !text.starts_with("B ") {
                    return Err(Error::parse(lineno, "expected a block line"));
                }
                let (b, m) = parse_block(lineno, text, d.field(), d.ambient_dim())?;
                d.insert(b, m)?;
            }
        }
    }
    design.ok_or_else(|| Error::parse(1, "missing QSD1 header"))
}

pub fn parse_design(text: &str) -> Result<DesignMultiset> {
    read_design(text.as_bytes())
}

pub fn load_design(path: impl AsRef<Path>) -> Result<DesignMultiset> {
    read_design(io::BufReader::new(fs::File::open(path)?))
}

pub fn save_design(path: impl AsRef<Path>, d: &DesignMultiset) -> Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    write_design(d, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_parallelism<W: Write>(spreads: &[DesignMultiset], mut w: W) -> io::Result<()> {
    let (q, n) = spreads.first().map_or((2, 4), |s| (s.q(), s.ambient_dim()));
    writeln!(w, "QSP1 q={q} n={n}")?;
    for (i, s) in spreads.iter().enumerate() {
        writeln!(w, "S {i}")?;
        for (b, m) in s.blocks() {
            writeln!(w, "{}", block_line(b, m))?;
        }
    }
    Ok(())
}

pub fn parallelism_to_string(spreads: &[DesignMultiset]) -> String {
    let mut out = Vec::new();
    write_parallelism(spreads, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("ascii output")
}

/// Reads a `QSP1` file; spreads are returned in file order.
pub fn read_parallelism<R: BufRead>(r: R) -> Result<Vec<DesignMultiset>> {
    let mut header: Option<(u8, usize)> = None;
    let mut spreads: Vec<DesignMultiset> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let text = content(&line);
        if text.is_empty() {
            continue;
        }
        let Some((q, n)) = header else {
            header = Some(parse_header(lineno, text, "QSP1")?);
            continue;
        };
        if let Some(idx) = text.strip_prefix("S ") {
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, "spread index must be an integer"))?;
            if idx != spreads.len() {
                return Err(Error::parse(
                    lineno,
                    format!("expected spread {} but found {idx}", spreads.len()),
                ));
            }
            spreads.push(DesignMultiset::new(q, n)?);
        } else if text.starts_with("B ") {
            let current = spreads
                .last_mut()
                .ok_or_else(|| Error::parse(lineno, "block before the first spread header"))?;
            let (b, m) = parse_block(lineno, text, current.field(), n)?;
            current.insert(b, m)?;
        } else {
            return Err(Error::parse(lineno, "expected a spread header or block line"));
        }
    }
    if header.is_none() {
        return Err(Error::parse(1, "missing QSP1 header"));
    }
    Ok(spreads)
}

pub fn parse_parallelism(text: &str) -> Result<Vec<DesignMultiset>> {
    read_parallelism(text.as_bytes())
}

pub fn load_parallelism(path: impl AsRef<Path>) -> Result<Vec<DesignMultiset>> {
    read_parallelism(io::BufReader::new(fs::File::open(path)?))
}

pub fn save_parallelism(path: impl AsRef<Path>, spreads: &[DesignMultiset]) -> Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    write_parallelism(spreads, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{parallelism_pg3, spread_field_reduction};

    #[test]
    fn design_round_trip() {
        let mut d = spread_field_reduction(3, 2, 4).unwrap();
        d.insert(Subspace::zero(3, 4), 2).unwrap();
        d.insert(Subspace::full(3, 4), 5).unwrap();
        let text = design_to_string(&d);
        assert!(text.starts_with("QSD1 q=3 n=4\n"));
        assert!(text.contains("B 2 -\n"));
        assert_eq!(parse_design(&text).unwrap(), d);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header follows\nQSD1 q=2 n=7\n\nB 1 1000000 0100000 0010000 # Z2\nB 2 0000100 0000010 0000001\n";
        let d = parse_design(text).unwrap();
        assert_eq!(d.total_size(), 3);
        assert_eq!(d.distinct_count(), 2);
    }

    #[test]
    fn duplicate_lines_merge() {
        let d = parse_design("QSD1 q=2 n=3\nB 1 100\nB 2 100\n").unwrap();
        assert_eq!(d.total_size(), 3);
        assert_eq!(d.distinct_count(), 1);
    }

    #[test]
    fn rejects_non_canonical_rows_with_line_number() {
        let err = parse_design("QSD1 q=2 n=7\nB 1 0000110 0000011\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_design("QSD1 q=2 n=4\n\nB 1 1000\nB 1 0100 0100\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "",
            "QSD2 q=2 n=4\n",
            "QSD1 q=6 n=4\n",
            "QSD1 q=2\n",
            "QSD1 q=2 n=4\nB 0 1000\n",
            "QSD1 q=2 n=4\nB 1 100\n",
            "QSD1 q=2 n=4\nB 1 1020\n",
            "QSD1 q=2 n=4\nB 1\n",
            "QSD1 q=2 n=4\nX 1 1000\n",
        ] {
            assert!(matches!(parse_design(bad), Err(Error::Parse { .. })), "{bad:?}");
        }
    }

    #[test]
    fn parallelism_round_trip() {
        let p = parallelism_pg3(2).unwrap();
        let text = parallelism_to_string(&p);
        assert!(text.starts_with("QSP1 q=2 n=4\nS 0\n"));
        assert_eq!(parse_parallelism(&text).unwrap(), p);
        assert!(parse_parallelism("QSP1 q=2 n=4\nS 1\n").is_err());
        assert!(parse_parallelism("QSP1 q=2 n=4\nB 1 1000 0100\n").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("qsd-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("d.qsd");
        let d = spread_field_reduction(2, 2, 6).unwrap();
        save_design(&path, &d).unwrap();
        assert_eq!(load_design(&path).unwrap(), d);
        fs::remove_dir_all(&dir).unwrap();
    }
}
