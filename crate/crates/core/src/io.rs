//! Text formats for chains and dislocation systems, grid-field export and
//! atomic file writes.
//!
//! Chain dump: a header `DIM K EPS COUNT [T]` followed by one record per
//! simplex, `k ε m x0 y0 z0 [t0] x1 …`. Floats are written in Rust's
//! shortest round-trip form, so dumps re-parse bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::SimplicialCurrent;
use crate::dislocation::{BurgersSystem, DislocationSystem};
use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, Point};
use crate::grid::{CellField, Grid, NodeField};

pub fn write_chain(c: &SimplicialCurrent, time: Option<f64>) -> String {
    let eps = c.quantum().unwrap_or(0.0);
    let mut s = format!("{} {} {} {}", c.dim(), c.grade(), eps, c.len());
    if let Some(t) = time {
        let _ = write!(s, " {t}");
    }
    s.push('\n');
    for term in c.terms() {
        let _ = write!(s, "{} {} {}", c.grade(), eps, term.mult);
        for v in &term.simplex.vertices {
            if c.dim() == 4 {
                let _ = write!(s, " {} {} {} {}", v[1], v[2], v[3], v[0]);
            } else {
                let _ = write!(s, " {} {} {}", v[0], v[1], v[2]);
            }
        }
        s.push('\n');
    }
    s
}

fn parse_f64(tok: Option<&str>, line: usize, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?;
    tok.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("bad {what} '{tok}'") })
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?;
    tok.parse::<usize>().map_err(|_| Error::Parse { line, msg: format!("bad {what} '{tok}'") })
}

/// Parse one chain block starting at `lines[*pos]`; advances `pos`.
fn read_chain_block(
    lines: &[(usize, &str)],
    pos: &mut usize,
    domain: BoxDomain,
) -> Result<(SimplicialCurrent, Option<f64>)> {
    let &(ln, header) = lines.get(*pos).ok_or(Error::Parse { line: 0, msg: "missing chain header".into() })?;
    *pos += 1;
    let mut it = header.split_whitespace();
    let dim = parse_usize(it.next(), ln, "DIM")?;
    let k = parse_usize(it.next(), ln, "K")?;
    let eps = parse_f64(it.next(), ln, "EPS")?;
    let count = parse_usize(it.next(), ln, "COUNT")?;
    let time = match it.next() {
        Some(t) => Some(parse_f64(Some(t), ln, "T")?),
        None => None,
    };
    if it.next().is_some() {
        return Err(Error::Parse { line: ln, msg: "trailing tokens in header".into() });
    }
    if dim != domain.dim {
        return Err(Error::Parse { line: ln, msg: format!("DIM {dim} does not match the domain dimension {}", domain.dim) });
    }
    let mut c = SimplicialCurrent::new(domain, k).map_err(|e| Error::Parse { line: ln, msg: e.to_string() })?;
    for _ in 0..count {
        let &(ln, rec) = lines.get(*pos).ok_or(Error::Parse { line: ln, msg: "fewer records than COUNT".into() })?;
        *pos += 1;
        let mut it = rec.split_whitespace();
        let rk = parse_usize(it.next(), ln, "k")?;
        let re = parse_f64(it.next(), ln, "ε")?;
        if rk != k || re.to_bits() != eps.to_bits() {
            return Err(Error::Parse { line: ln, msg: "record grade or quantum differs from header".into() });
        }
        let m = parse_f64(it.next(), ln, "multiplicity")?;
        let mut verts = Vec::with_capacity(k + 1);
        for _ in 0..=k {
            let mut p: Point = [0.0; 4];
            if dim == 4 {
                p[1] = parse_f64(it.next(), ln, "x")?;
                p[2] = parse_f64(it.next(), ln, "y")?;
                p[3] = parse_f64(it.next(), ln, "z")?;
                p[0] = parse_f64(it.next(), ln, "t")?;
            } else {
                for c in p.iter_mut().take(3) {
                    *c = parse_f64(it.next(), ln, "coordinate")?;
                }
            }
            verts.push(p);
        }
        if it.next().is_some() {
            return Err(Error::Parse { line: ln, msg: "trailing tokens in record".into() });
        }
        c.push(verts, m).map_err(|e| Error::Parse { line: ln, msg: e.to_string() })?;
    }
    if eps > 0.0 {
        c = c.with_quantum(eps).map_err(|e| Error::Parse { line: ln, msg: e.to_string() })?;
    }
    Ok((c, time))
}

fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

pub fn read_chain(text: &str, domain: BoxDomain) -> Result<(SimplicialCurrent, Option<f64>)> {
    let lines = content_lines(text);
    let mut pos = 0;
    let out = read_chain_block(&lines, &mut pos, domain)?;
    if let Some(&(ln, _)) = lines.get(pos) {
        return Err(Error::Parse { line: ln, msg: "unexpected content after chain".into() });
    }
    Ok(out)
}

pub fn write_dislocations(t: &DislocationSystem) -> String {
    let b = t.burgers();
    let mut s = format!("BURGERS {}\n", b.len());
    for v in b.vectors() {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    for l in t.lines() {
        s.push_str(&write_chain(l, None));
    }
    s
}

pub fn read_dislocations(text: &str, domain: BoxDomain) -> Result<DislocationSystem> {
    let lines = content_lines(text);
    let &(ln, header) = lines.first().ok_or(Error::Parse { line: 0, msg: "empty dislocation file".into() })?;
    let mut it = header.split_whitespace();
    if it.next() != Some("BURGERS") {
        return Err(Error::Parse { line: ln, msg: "expected 'BURGERS m'".into() });
    }
    let m = parse_usize(it.next(), ln, "m")?;
    let mut vectors = Vec::with_capacity(m);
    for i in 0..m {
        let &(ln, l) = lines.get(1 + i).ok_or(Error::Parse { line: ln, msg: "missing Burgers vector".into() })?;
        let mut it = l.split_whitespace();
        vectors.push([parse_f64(it.next(), ln, "b")?, parse_f64(it.next(), ln, "b")?, parse_f64(it.next(), ln, "b")?]);
    }
    let burgers = BurgersSystem::new(vectors)?;
    let mut pos = 1 + m;
    let mut chains = Vec::with_capacity(m);
    for _ in 0..m {
        chains.push(read_chain_block(&lines, &mut pos, domain)?.0);
    }
    if let Some(&(ln, _)) = lines.get(pos) {
        return Err(Error::Parse { line: ln, msg: "unexpected content after the last chain block".into() });
    }
    DislocationSystem::new(burgers, chains)
}

/// Write via a temporary sibling and rename, so readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Invalid(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes)?;
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    Displacement,
    Beta,
    PlasticDelta,
    Free,
}

/// JSON sidecar of a binary grid field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub role: FieldRole,
    /// `"node"` or `"cell"`.
    pub location: String,
    pub shape: [usize; 3],
    pub components: usize,
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub resolution: [usize; 3],
}

/// Grid field as flat little-endian `f64` values plus its header.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub header: FieldHeader,
    pub values: Vec<f64>,
}

impl GridField {
    fn header(grid: &Grid, role: FieldRole, node: bool, components: usize) -> FieldHeader {
        FieldHeader {
            role,
            location: if node { "node" } else { "cell" }.into(),
            shape: if node { grid.node_dims() } else { grid.n },
            components,
            origin: [grid.domain.lo[0], grid.domain.lo[1], grid.domain.lo[2]],
            spacing: grid.h,
            resolution: grid.n,
        }
    }

    pub fn from_nodes(f: &NodeField, role: FieldRole) -> Self {
        Self { header: Self::header(&f.grid, role, true, 3), values: f.as_flat().to_vec() }
    }

    pub fn from_cells(f: &CellField, role: FieldRole) -> Self {
        Self { header: Self::header(&f.grid, role, false, 9), values: f.values.as_flattened().to_vec() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    /// Write `<stem>.bin` and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        write_atomic(&stem.with_extension("bin"), &self.to_bytes())?;
        let json = serde_json::to_string_pretty(&self.header).map_err(|e| Error::Invalid(e.to_string()))?;
        write_atomic(&stem.with_extension("json"), json.as_bytes())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(stem.with_extension("json"))?;
        let header: FieldHeader = serde_json::from_str(&json).map_err(|e| Error::Invalid(e.to_string()))?;
        let bytes = std::fs::read(stem.with_extension("bin"))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Invalid("binary field length is not a multiple of 8".into()));
        }
        let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let expected = header.shape.iter().product::<usize>() * header.components;
        if values.len() != expected {
            return Err(Error::DimensionMismatch(values.len(), expected));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("grid field contains non-finite values".into()));
        }
        Ok(Self { header, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::p3;

    #[test]
    fn chain_round_trip_is_bit_exact() {
        let d = BoxDomain::cube3(0.0, 1.0);
        let mut c = SimplicialCurrent::new(d, 1).unwrap();
        c.push(vec![p3(0.1, 1.0 / 3.0, 0.2), p3(0.7, 0.5, 1e-17)], 0.1 + 0.2).unwrap();
        let text = write_chain(&c, Some(0.25));
        let (back, t) = read_chain(&text, d).unwrap();
        assert_eq!(t, Some(0.25));
        assert_eq!(write_chain(&back, Some(0.25)), text);
        assert_eq!(back.terms()[0].mult.to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn dislocation_file_round_trip() {
        let d = BoxDomain::cube3(0.0, 1.0);
        let sq = [p3(0.2, 0.2, 0.5), p3(0.8, 0.2, 0.5), p3(0.8, 0.8, 0.5), p3(0.2, 0.8, 0.5)];
        let l = SimplicialCurrent::polyline(d, &sq, 1.0, true).unwrap();
        let b = BurgersSystem::new(vec![[1.0, 0.0, 0.0], [0.0, 0.5, 0.5]]).unwrap();
        let t = DislocationSystem::new(b, vec![l, SimplicialCurrent::new(d, 1).unwrap()]).unwrap();
        let text = write_dislocations(&t);
        let back = read_dislocations(&text, d).unwrap();
        assert!(back.equals(&t, 0.0));
        assert_eq!(write_dislocations(&back), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let d = BoxDomain::cube3(0.0, 1.0);
        match read_chain("3 1 0 1\n1 0 1 0 0 0 1 1 x\n", d) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
