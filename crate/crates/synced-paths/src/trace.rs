//! Column-major simulation traces and their CSV form.
//!
//! Values are printed with the shortest representation that parses back to
//! the same bits, so a written trace is a faithful record and two identical
//! runs produce identical files. The reader is as strict as the scenario
//! parser and never panics on arbitrary input.

use std::path::Path;

use crate::error::{Error, Result};

/// Hard cap on columns accepted when reading a CSV, bounding memory.
pub const MAX_COLUMNS: usize = 256;

/// Recorded closed-loop signals on a uniform time grid.
///
/// `x_c` and `e` hold one column per control path (resolved output and gated
/// sync error), `y` one column per plant stage. The `w` and `u` columns
/// record the gate values each row was computed under.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    pub y_c: Vec<f64>,
    pub x_c: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub e: Vec<Vec<f64>>,
}

impl Trace {
    /// An empty trace with the given column counts and row capacity.
    pub fn with_capacity(n_paths: usize, n_stages: usize, rows: usize) -> Trace {
        Trace {
            times: Vec::with_capacity(rows),
            y_c: Vec::with_capacity(rows),
            x_c: vec![Vec::with_capacity(rows); n_paths],
            y: vec![Vec::with_capacity(rows); n_stages],
            w: Vec::with_capacity(rows),
            u: Vec::with_capacity(rows),
            e: vec![Vec::with_capacity(rows); n_paths],
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The CSV header line for this trace's shape.
    pub fn header(&self) -> String {
        let mut cols = vec!["t".to_string(), "y_c".to_string()];
        for i in 0..self.x_c.len() {
            cols.push(format!("x_c{}", i + 1));
        }
        for j in 0..self.y.len() {
            cols.push(format!("y{}", j + 1));
        }
        cols.push("w".into());
        cols.push("u".into());
        for i in 0..self.e.len() {
            cols.push(format!("e{}", i + 1));
        }
        cols.join(",")
    }

    /// Renders the full CSV, header plus one line per sample.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::with_capacity(32 * self.len() * (4 + self.x_c.len() * 2 + self.y.len()));
        out.push_str(&self.header());
        out.push('\n');
        let mut fields: Vec<f64> = Vec::new();
        for row in 0..self.len() {
            fields.clear();
            fields.push(self.times[row]);
            fields.push(self.y_c[row]);
            fields.extend(self.x_c.iter().map(|col| col[row]));
            fields.extend(self.y.iter().map(|col| col[row]));
            fields.push(self.w[row]);
            fields.push(self.u[row]);
            fields.extend(self.e.iter().map(|col| col[row]));
            for (k, v) in fields.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Writes the CSV atomically: the file appears complete or not at all.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io_err = |source: std::io::Error| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = std::path::PathBuf::from(tmp);
        std::fs::write(&tmp, self.to_csv()).map_err(io_err)?;
        std::fs::rename(&tmp, path).map_err(io_err)
    }

    /// Parses a CSV produced by [`to_csv`], enforcing the same shape rules.
    ///
    /// [`to_csv`]: Trace::to_csv
    pub fn parse_csv(text: &str) -> Result<Trace> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty file".into(),
        })?;
        let columns: Vec<&str> = header.split(',').collect();
        if columns.len() > MAX_COLUMNS {
            return Err(Error::Parse {
                line: 1,
                message: format!("more than {MAX_COLUMNS} columns"),
            });
        }
        let shape = HeaderShape::from_columns(&columns)?;
        let mut trace = Trace::with_capacity(shape.n_paths, shape.n_stages, 0);
        let mut rows = 0usize;
        for (i, raw) in lines {
            let line = i + 1;
            if raw.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "blank line inside data".into(),
                });
            }
            let mut fields = raw.split(',');
            let mut next = |name: &str| -> Result<f64> {
                let field = fields.next().ok_or_else(|| Error::Parse {
                    line,
                    message: format!("missing column {name}"),
                })?;
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("column {name}: expected a number, got '{field}'"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: format!("column {name}: non-finite value '{field}'"),
                    });
                }
                Ok(v)
            };
            let t = next("t")?;
            if let Some(&prev) = trace.times.last() {
                if t <= prev {
                    return Err(Error::Parse {
                        line,
                        message: format!("time must be strictly increasing, got {t} after {prev}"),
                    });
                }
            }
            trace.times.push(t);
            trace.y_c.push(next("y_c")?);
            for p in 0..shape.n_paths {
                let v = next(&format!("x_c{}", p + 1))?;
                trace.x_c[p].push(v);
            }
            for s in 0..shape.n_stages {
                let v = next(&format!("y{}", s + 1))?;
                trace.y[s].push(v);
            }
            trace.w.push(next("w")?);
            trace.u.push(next("u")?);
            for p in 0..shape.n_paths {
                let v = next(&format!("e{}", p + 1))?;
                trace.e[p].push(v);
            }
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line,
                    message: format!("more fields than the {}-column header", columns.len()),
                });
            }
            rows += 1;
        }
        if rows == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "no data rows".into(),
            });
        }
        Ok(trace)
    }

    /// Reads and parses a CSV trace file.
    pub fn from_file(path: &Path) -> Result<Trace> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Trace::parse_csv(&text)
    }
}

struct HeaderShape {
    n_paths: usize,
    n_stages: usize,
}

impl HeaderShape {
    fn from_columns(columns: &[&str]) -> Result<HeaderShape> {
        let bad = |message: String| Error::Parse { line: 1, message };
        let get = |i: usize| -> &str { columns.get(i).copied().unwrap_or("") };
        if get(0) != "t" {
            return Err(bad("first column must be 't'".into()));
        }
        if get(1) != "y_c" {
            return Err(bad("second column must be 'y_c'".into()));
        }
        let mut i = 2;
        let mut n_paths = 0;
        while get(i) == format!("x_c{}", n_paths + 1) {
            i += 1;
            n_paths += 1;
        }
        if n_paths == 0 {
            return Err(bad("expected at least one x_c column".into()));
        }
        let mut n_stages = 0;
        while get(i) == format!("y{}", n_stages + 1) {
            i += 1;
            n_stages += 1;
        }
        if n_stages == 0 {
            return Err(bad("expected at least one y column".into()));
        }
        if get(i) != "w" {
            return Err(bad("expected column 'w' after the stage outputs".into()));
        }
        if get(i + 1) != "u" {
            return Err(bad("expected column 'u' after 'w'".into()));
        }
        i += 2;
        for p in 0..n_paths {
            let want = format!("e{}", p + 1);
            if get(i) != want {
                return Err(bad(format!("expected column '{want}' (one e per path)")));
            }
            i += 1;
        }
        if i != columns.len() {
            return Err(bad(format!("unexpected trailing column '{}'", get(i))));
        }
        Ok(HeaderShape { n_paths, n_stages })
    }
}
