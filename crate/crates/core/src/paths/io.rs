//! Text interchange for paths and partitions.
//!
//! Path CSV: header `t,x1,...,xd` plus `pre_x1,...,pre_xd` when the path has
//! jumps; the `pre_` columns are filled only on jump rows. Solutions use `y`
//! in place of `x`. Partition files hold
//! one time per line. Floats use the shortest round-trip representation.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::paths::cadlag::CadlagPath;
use crate::paths::partition::Partition;

pub fn write_path_csv<W: Write>(path: &CadlagPath, out: W) -> Result<()> {
    write_columns(path, "x", out)
}

/// A scheme or reference solution: the path layout with `y` columns.
pub fn write_solution_csv<W: Write>(path: &CadlagPath, out: W) -> Result<()> {
    write_columns(path, "y", out)
}

fn write_columns<W: Write>(path: &CadlagPath, name: &str, out: W) -> Result<()> {
    let d = path.dim();
    let jumps = path.has_jumps();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|c| format!("{name}{c}")));
    if jumps {
        header.extend((1..=d).map(|c| format!("pre_{name}{c}")));
    }
    w.write_record(&header)?;
    for (i, t) in path.grid().times().iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(path.value(i).iter().map(f64::to_string));
        if jumps {
            if path.is_jump(i) {
                row.extend(path.left(i).iter().map(f64::to_string));
            } else {
                row.extend(std::iter::repeat_n(String::new(), d));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_csv<R: Read>(input: R) -> Result<CadlagPath> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols = header.len();
    let value_cols = header
        .iter()
        .skip(1)
        .filter(|h| h.starts_with('x') || h.starts_with('y'))
        .count();
    let pre_cols = header.iter().filter(|h| h.starts_with("pre_")).count();
    if header.get(0) != Some("t") || value_cols == 0 || (pre_cols != 0 && pre_cols != value_cols) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {:?}", header),
        });
    }
    if cols != 1 + value_cols + pre_cols {
        return Err(Error::Parse {
            line: 1,
            message: "unknown columns in header".into(),
        });
    }
    let d = value_cols;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut left = BTreeMap::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{s:?}: {e}"),
            })
        };
        times.push(parse(&rec[0])?);
        for c in 0..d {
            values.push(parse(&rec[1 + c])?);
        }
        if pre_cols > 0 {
            let pre: Vec<&str> = (0..d).map(|c| rec[1 + d + c].trim()).collect();
            if pre.iter().all(|s| !s.is_empty()) {
                left.insert(
                    row,
                    pre.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?,
                );
            } else if pre.iter().any(|s| !s.is_empty()) {
                return Err(Error::Parse {
                    line,
                    message: "partially filled pre columns".into(),
                });
            }
        }
    }
    let grid = Partition::new(times)?;
    CadlagPath::with_left_limits(grid, d, values, left)
}

pub fn write_partition<W: Write>(p: &Partition, mut out: W) -> Result<()> {
    for t in p.times() {
        writeln!(out, "{t}")?;
    }
    Ok(())
}

pub fn read_partition<R: BufRead>(input: R) -> Result<Partition> {
    let mut times = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        let t = s.parse::<f64>().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("{s:?}: {e}"),
        })?;
        times.push(t);
    }
    Partition::new(times)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jumpy() -> CadlagPath {
        let grid = Partition::new(vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        let left = BTreeMap::from([(2, vec![0.5, -1.0])]);
        CadlagPath::with_left_limits(
            grid,
            2,
            vec![0.0, 0.0, 0.1, 0.2, 0.7, -0.5, 1.0 / 3.0, 2.0],
            left,
        )
        .unwrap()
    }

    #[test]
    fn jump_rows_carry_pre_columns() {
        let mut buf = Vec::new();
        write_path_csv(&jumpy(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,x1,x2,pre_x1,pre_x2\n0,0,0,,\n0.25,0.1,0.2,,\n0.5,0.7,-0.5,0.5,-1\n1,0.3333333333333333,2,,\n"
        );
    }

    #[test]
    fn paths_and_solutions_round_trip_bitwise() {
        let x = jumpy();
        let mut buf = Vec::new();
        write_path_csv(&x, &mut buf).unwrap();
        assert_eq!(read_path_csv(&buf[..]).unwrap(), x);
        buf.clear();
        write_solution_csv(&x, &mut buf).unwrap();
        assert_eq!(read_path_csv(&buf[..]).unwrap(), x);
        assert!(buf.starts_with(b"t,y1,y2,pre_y1,pre_y2\n"));
    }

    #[test]
    fn malformed_input_names_the_line() {
        let err = read_path_csv("t,x1\n0,0\n1,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(matches!(
            read_path_csv("s,x1\n0,0\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let partial = "t,x1,x2,pre_x1,pre_x2\n0,0,0,,\n1,1,1,0.5,\n";
        assert!(matches!(
            read_path_csv(partial.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn partitions_round_trip() {
        let p = Partition::dyadic(1.0, 3).unwrap();
        let mut buf = Vec::new();
        write_partition(&p, &mut buf).unwrap();
        assert_eq!(read_partition(&buf[..]).unwrap(), p);
        assert!(matches!(
            read_partition("0\n\nx\n".as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
