//! Text `polymesh 1` format.
//!
//! ```text
//! polymesh 1
//! vertices N
//! x y z                      (N lines)
//! faces M
//! n v1 ... vn [tag]          (M lines)
//! cells K
//! m f1 ... fm                (K lines, `-fi` = face used reversed)
//! ```
//!
//! All indices are 0-based. Blank lines and lines starting with `#` are
//! ignored.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{validate_mesh, CellFace, Mesh, Point3, RawFace};
use crate::error::{Result, VemError};

struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Self {
            path: path.to_path_buf(),
            inner: it.peekable(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> VemError {
        VemError::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some(x) => Ok(x),
            None => Err(self.err(0, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let (ln, line) = self.next(keyword)?;
        let mut it = line.split_whitespace();
        if it.next() != Some(keyword) {
            return Err(self.err(ln, format!("expected `{keyword} <count>`")));
        }
        let count = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(ln, format!("missing or invalid {keyword} count")))?;
        if it.next().is_some() {
            return Err(self.err(ln, "trailing tokens after count"));
        }
        Ok(count)
    }
}

/// Parses and validates a mesh from text; `path` is only used in error messages.
pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let mesh = parse_mesh_unchecked(text, path)?;
    let report = validate_mesh(&mesh);
    match report.first_failure() {
        None => Ok(mesh),
        Some(msg) => Err(VemError::Validation(msg)),
    }
}

/// Parses a mesh without running [`validate_mesh`].
pub fn parse_mesh_unchecked(text: &str, path: &Path) -> Result<Mesh> {
    let mut lines = Lines::new(path, text);
    let (ln, first) = lines.next("header")?;
    if first.split_whitespace().collect::<Vec<_>>() != ["polymesh", "1"] {
        return Err(lines.err(ln, "expected header `polymesh 1`"));
    }

    let nv = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = lines.next("vertex")?;
        let xs: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| lines.err(ln, format!("bad coordinate: {e}")))?;
        if xs.len() != 3 {
            return Err(lines.err(ln, format!("expected 3 coordinates, found {}", xs.len())));
        }
        if !xs.iter().all(|x| x.is_finite()) {
            return Err(lines.err(ln, "non-finite coordinate"));
        }
        vertices.push(Point3::new(xs[0], xs[1], xs[2]));
    }

    let nf = lines.header("faces")?;
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, line) = lines.next("face")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let n: usize = toks
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| lines.err(ln, "missing face vertex count"))?;
        if n < 3 {
            return Err(lines.err(ln, "a face needs at least 3 vertices"));
        }
        if toks.len() < n + 1 || toks.len() > n + 2 {
            return Err(lines.err(ln, format!("expected {n} vertex ids and an optional tag")));
        }
        let mut vs = Vec::with_capacity(n);
        for t in &toks[1..=n] {
            let v: usize = t
                .parse()
                .map_err(|_| lines.err(ln, format!("bad vertex id `{t}`")))?;
            if v >= nv {
                return Err(lines.err(ln, format!("vertex id {v} out of range")));
            }
            vs.push(v);
        }
        faces.push(RawFace {
            vertices: vs,
            tag: toks.get(n + 1).map(|s| s.to_string()),
        });
    }

    let nc = lines.header("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, line) = lines.next("cell")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let m: usize = toks
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| lines.err(ln, "missing cell face count"))?;
        if toks.len() != m + 1 {
            return Err(lines.err(ln, format!("expected {m} face ids")));
        }
        let mut cf = Vec::with_capacity(m);
        for t in &toks[1..] {
            let (outward, digits) = match t.strip_prefix('-') {
                Some(rest) => (false, rest),
                None => (true, *t),
            };
            let face: usize = digits
                .parse()
                .map_err(|_| lines.err(ln, format!("bad face id `{t}`")))?;
            if face >= nf {
                return Err(lines.err(ln, format!("face id {face} out of range")));
            }
            cf.push(CellFace { face, outward });
        }
        cells.push(cf);
    }
    if let Some((ln, _)) = lines.inner.next() {
        return Err(lines.err(ln, "unexpected content after cells"));
    }

    Mesh::from_raw(vertices, faces, cells)
}

/// Reads and validates a mesh file.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

/// Serialises `mesh` with 17 significant digits per coordinate.
pub fn write_mesh_to(mesh: &Mesh, out: &mut impl Write) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "polymesh 1").unwrap();
    writeln!(s, "vertices {}", mesh.vertices.len()).unwrap();
    for p in &mesh.vertices {
        writeln!(s, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z).unwrap();
    }
    writeln!(s, "faces {}", mesh.faces.len()).unwrap();
    for f in &mesh.faces {
        write!(s, "{}", f.vertices.len()).unwrap();
        for v in &f.vertices {
            write!(s, " {v}").unwrap();
        }
        if let Some(t) = &f.tag {
            write!(s, " {t}").unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "cells {}", mesh.cells.len()).unwrap();
    for c in &mesh.cells {
        write!(s, "{}", c.faces.len()).unwrap();
        for cf in &c.faces {
            if cf.outward {
                write!(s, " {}", cf.face).unwrap();
            } else {
                write!(s, " -{}", cf.face).unwrap();
            }
        }
        s.push('\n');
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_mesh_to(mesh, &mut f)?;
    f.flush()?;
    Ok(())
}
