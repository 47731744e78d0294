//! Point-cloud CSV and edge-list readers and writers.

use std::io::{BufRead, Read, Write};

use crate::complex::{Graph, PointCloud};
use crate::error::{Error, Result};

/// One point per row, decimal fields, no header.
pub fn read_point_cloud<R: Read>(reader: R) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let point = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("not a number: {f:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        points.push(point);
    }
    PointCloud::new(points)
}

pub fn write_point_cloud<W: Write>(cloud: &PointCloud, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for p in cloud.points() {
        wr.write_record(p.iter().map(|x| format!("{x:?}")))?;
    }
    wr.flush()?;
    Ok(())
}

/// Header `n <count>`, then one `u v` pair per line, 0-indexed. Blank lines
/// are ignored; repeated edges and self-loops are errors.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|s| (i + 1, s)))
        .filter(|l| l.as_ref().map_or(true, |(_, s)| !s.trim().is_empty()));
    let (line, header) = lines.next().ok_or(Error::EmptyInput)??;
    let n = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["n", count] => count.parse::<usize>().map_err(|_| Error::Parse {
            line,
            msg: format!("bad vertex count {count:?}"),
        })?,
        _ => {
            return Err(Error::Parse {
                line,
                msg: "expected header \"n <count>\"".into(),
            })
        }
    };
    let mut g = Graph::empty(n)?;
    for item in lines {
        let (line, text) = item?;
        let parse = |f: &str| {
            f.parse::<usize>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad vertex {f:?}"),
            })
        };
        let (u, v) = match text.split_whitespace().collect::<Vec<_>>()[..] {
            [u, v] => (parse(u)?, parse(v)?),
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: "expected \"u v\"".into(),
                })
            }
        };
        if u < n && v < n && g.has_edge(u, v) {
            return Err(Error::Parse {
                line,
                msg: format!("repeated edge {u} {v}"),
            });
        }
        g.add_edge(u, v).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
    }
    Ok(g)
}

pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    writeln!(w, "n {}", g.n())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}
