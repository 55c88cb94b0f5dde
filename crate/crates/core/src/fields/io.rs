//! Text field files.
//!
//! ```text
//! majorant-field 1
//! dim 2
//! nodes 5 5
//! extents 1 1
//! origin 0 0
//! levels 3
//! times 0 0.5 1
//! jumps 0 1 0
//! L 0 <node values...>
//! L- 1 <node values...>
//! L+ 1 <node values...>
//! L 2 <node values...>
//! ```
//!
//! Nodes are numbered x-fastest. Values use the shortest representation
//! that reads back to the same `f64`. Blank lines and lines starting with
//! `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::closed_form::ScalarFunction;
use crate::error::{Error, Result};
use crate::fields::{Level, SpaceTimeField};
use crate::mesh::{SpaceMesh, TimePartition};
use crate::problem::Domain;

const MAGIC: &str = "majorant-field";
const VERSION: u32 = 1;

/// A field together with the mesh it lives on.
#[derive(Debug, Clone)]
pub struct FieldFile {
    pub mesh: SpaceMesh,
    pub field: SpaceTimeField,
}

fn join(vals: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in vals.into_iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v}").expect("string write");
    }
    s
}

pub fn format_field(mesh: &SpaceMesh, field: &SpaceTimeField) -> Result<String> {
    field.check_mesh(mesh)?;
    let dom = mesh.domain();
    let p = field.partition();
    let mut out = String::new();
    let nodes: Vec<String> = mesh.nodes_per_axis().iter().map(|n| n.to_string()).collect();
    let jumps: Vec<&str> = field.levels().iter().map(|l| if l.is_jump() { "1" } else { "0" }).collect();
    writeln!(out, "{MAGIC} {VERSION}").ok();
    writeln!(out, "dim {}", mesh.dim()).ok();
    writeln!(out, "nodes {}", nodes.join(" ")).ok();
    writeln!(out, "extents {}", join(dom.extents().iter().copied())).ok();
    writeln!(out, "origin {}", join(dom.origin().iter().copied())).ok();
    writeln!(out, "levels {}", p.level_count()).ok();
    writeln!(out, "times {}", join(p.times().iter().copied())).ok();
    writeln!(out, "jumps {}", jumps.join(" ")).ok();
    for (k, lvl) in field.levels().iter().enumerate() {
        match lvl {
            Level::Single(v) => writeln!(out, "L {k} {}", join(v.iter().copied())).ok(),
            Level::Jump { left, right } => {
                writeln!(out, "L- {k} {}", join(left.iter().copied())).ok();
                writeln!(out, "L+ {k} {}", join(right.iter().copied())).ok()
            }
        };
    }
    Ok(out)
}

pub fn parse_field(text: &str) -> Result<FieldFile> {
    let bad = |msg: String| Error::FieldFormat(msg);
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut header = |key: &str| -> Result<Vec<String>> {
        let (no, line) = lines.next().ok_or_else(|| bad(format!("missing `{key}` line")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(bad(format!("line {}: expected `{key}`", no + 1)));
        }
        Ok(parts.map(String::from).collect())
    };
    let nums = |v: Vec<String>, what: &str| -> Result<Vec<f64>> {
        v.iter()
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}` in {what}"))))
            .collect()
    };
    let ints = |v: Vec<String>, what: &str| -> Result<Vec<usize>> {
        v.iter()
            .map(|s| s.parse::<usize>().map_err(|_| bad(format!("bad integer `{s}` in {what}"))))
            .collect()
    };

    let version = header(MAGIC)?;
    if version != [VERSION.to_string()] {
        return Err(bad(format!("unsupported version {version:?}")));
    }
    let dim = ints(header("dim")?, "dim")?;
    let nodes = ints(header("nodes")?, "nodes")?;
    let extents = nums(header("extents")?, "extents")?;
    let origin = nums(header("origin")?, "origin")?;
    let levels = ints(header("levels")?, "levels")?;
    let times = nums(header("times")?, "times")?;
    let jumps = ints(header("jumps")?, "jumps")?;
    if dim.len() != 1 || levels.len() != 1 {
        return Err(bad("`dim` and `levels` take one value".into()));
    }
    if nodes.len() != dim[0] {
        return Err(bad(format!("`nodes` needs {} values", dim[0])));
    }
    if times.len() != levels[0] || jumps.len() != levels[0] {
        return Err(bad("`times` and `jumps` need one entry per level".into()));
    }
    let domain = Domain::new(extents, origin)?;
    let mesh = SpaceMesh::new(domain, &nodes)?;
    let partition = TimePartition::new(times)?;
    let count = mesh.node_count();

    let mut row = |tag: &str, k: usize| -> Result<Vec<f64>> {
        let (no, line) = lines.next().ok_or_else(|| bad(format!("missing row {tag} {k}")))?;
        let mut parts = line.split_whitespace();
        let (t, idx) = (parts.next(), parts.next());
        if t != Some(tag) || idx != Some(k.to_string().as_str()) {
            return Err(bad(format!("line {}: expected `{tag} {k}`", no + 1)));
        }
        let vals = parts
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("line {}: bad number `{s}`", no + 1))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != count {
            return Err(bad(format!("line {}: {} values, expected {count}", no + 1, vals.len())));
        }
        Ok(vals)
    };
    let mut lvls = Vec::with_capacity(levels[0]);
    for (k, &j) in jumps.iter().enumerate() {
        lvls.push(match j {
            0 => Level::Single(row("L", k)?),
            1 => Level::Jump {
                left: row("L-", k)?,
                right: row("L+", k)?,
            },
            _ => return Err(bad(format!("jump flag must be 0 or 1, got {j}"))),
        });
    }
    if let Some((no, _)) = lines.next() {
        return Err(bad(format!("line {}: trailing content", no + 1)));
    }
    let field = SpaceTimeField::new(partition, count, lvls)?;
    Ok(FieldFile { mesh, field })
}

pub fn write_field(path: &Path, mesh: &SpaceMesh, field: &SpaceTimeField) -> Result<()> {
    std::fs::write(path, format_field(mesh, field)?)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    parse_field(&std::fs::read_to_string(path)?)
}

/// Nodal data usable as a source or initial datum: P1 in space, linear
/// between levels in time. At a jump level the right limit is used.
#[derive(Debug, Clone)]
pub struct TabulatedField {
    mesh: SpaceMesh,
    field: SpaceTimeField,
}

impl TabulatedField {
    pub fn new(mesh: SpaceMesh, field: SpaceTimeField) -> Result<Self> {
        field.check_mesh(&mesh)?;
        Ok(Self { mesh, field })
    }

    pub fn from_file(file: FieldFile) -> Result<Self> {
        Self::new(file.mesh, file.field)
    }
}

impl ScalarFunction for TabulatedField {
    fn value(&self, x: &[f64], t: f64) -> f64 {
        let p = self.field.partition();
        let t = t.clamp(0.0, p.horizon());
        let k = p.slab_of(t);
        let s = (t - p.time(k)) / p.slab_len(k);
        let a = self.mesh.evaluate(self.field.slab_start(k), x);
        let b = self.mesh.evaluate(self.field.slab_end(k), x);
        (1.0 - s) * a + s * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (SpaceMesh, SpaceTimeField) {
        let m = SpaceMesh::new(Domain::new(vec![2.0], vec![-1.0]).unwrap(), &[4]).unwrap();
        let p = TimePartition::new(vec![0.0, 0.3, 1.0]).unwrap();
        let levels = vec![
            Level::Single(vec![0.0, 0.1, 1.0 / 3.0, 0.0]),
            Level::Jump {
                left: vec![0.0, -2.5e-300, 7.0, 0.0],
                right: vec![0.0, 1.0, 2.0, 0.0],
            },
            Level::Single(vec![0.0, 0.5, 0.25, 0.0]),
        ];
        let f = SpaceTimeField::new(p, 4, levels).unwrap();
        (m, f)
    }

    #[test]
    fn round_trip_is_exact() {
        let (m, f) = sample();
        let text = format_field(&m, &f).unwrap();
        let back = parse_field(&text).unwrap();
        assert_eq!(back.field, f);
        assert_eq!(back.mesh.nodes_per_axis(), vec![4]);
        assert_eq!(back.mesh.domain(), m.domain());
    }

    #[test]
    fn malformed_files_are_rejected() {
        let (m, f) = sample();
        let text = format_field(&m, &f).unwrap();
        assert!(parse_field(&text.replace("majorant-field 1", "majorant-field 9")).is_err());
        assert!(parse_field(&text.replace("L+ 1", "L 1")).is_err());
        assert!(parse_field(&format!("{text}L 3 0 0 0 0\n")).is_err());
        let short: String = text.lines().take(9).map(|l| format!("{l}\n")).collect();
        assert!(parse_field(&short).is_err());
    }

    #[test]
    fn tabulated_field_interpolates() {
        let (m, f) = sample();
        let tab = TabulatedField::new(m, f).unwrap();
        // node 1 sits at x = -1/3; right limit of the jump is used at t = 0.3
        assert!((tab.value(&[-1.0 / 3.0], 0.3) - 1.0).abs() < 1e-12);
        assert!((tab.value(&[-1.0 / 3.0], 0.15) - 0.05).abs() < 1e-12);
        assert!((tab.value(&[-2.0 / 3.0], 1.0) - 0.25).abs() < 1e-12);
    }
}
