//! File formats: network JSON, density CSV and eigenvalue lists.
//!
//! Network files look like
//!
//! ```json
//! {"n": 4, "motifs": [
//!   {"kind":"edge","nodes":[0,1]},
//!   {"kind":"general","nodes":[1,2,3],"edges":[[1,2],[2,3]]}
//! ]}
//! ```
//!
//! `edges` lists node-id pairs and is required for `general` motifs and
//! rejected for the other kinds. Writers emit one motif per line in canonical
//! member order, so equal networks serialize to identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FactorGraph, Motif, MotifKind};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid network JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("motifs[{index}]: {reason}")]
    Motif { index: usize, reason: String },
    #[error("malformed CSV at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    n: usize,
    motifs: Vec<MotifRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotifRecord {
    kind: String,
    nodes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<[usize; 2]>>,
}

pub fn parse_network(text: &str) -> Result<FactorGraph, IoError> {
    let file: NetworkFile = serde_json::from_str(text)?;
    let mut motifs = Vec::with_capacity(file.motifs.len());
    for (index, rec) in file.motifs.into_iter().enumerate() {
        let bad = |reason: String| IoError::Motif { index, reason };
        if let Some(&node) = rec.nodes.iter().find(|&&v| v >= file.n) {
            return Err(bad(format!("node {node} is out of range for n = {}", file.n)));
        }
        let motif = match rec.kind.as_str() {
            "edge" | "triangle" | "cycle" => {
                if rec.edges.is_some() {
                    return Err(bad(format!("\"edges\" is not allowed for kind \"{}\"", rec.kind)));
                }
                match rec.kind.as_str() {
                    "edge" => Motif::new(MotifKind::Edge, rec.nodes, None),
                    "triangle" => Motif::new(MotifKind::Triangle, rec.nodes, None),
                    _ => Motif::cycle(&rec.nodes),
                }
            }
            "general" => {
                let edges = rec.edges.ok_or_else(|| bad("\"edges\" is required for kind \"general\"".into()))?;
                let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
                Motif::general(&rec.nodes, &pairs)
            }
            other => return Err(bad(format!("unknown motif kind \"{other}\""))),
        }
        .map_err(|e| bad(e.to_string()))?;
        motifs.push(motif);
    }
    Ok(FactorGraph::new(file.n, motifs)?)
}

pub fn write_network(fg: &FactorGraph) -> String {
    let mut out = String::new();
    let _ = write!(out, "{{\"n\": {}, \"motifs\": [", fg.n());
    for (i, m) in fg.motifs().iter().enumerate() {
        let nodes: Vec<usize> = m.members().iter().map(|v| v.index()).collect();
        let edges = (m.kind() == MotifKind::General)
            .then(|| m.internal_edges().iter().map(|&(a, b)| [nodes[a], nodes[b]]).collect());
        let rec = MotifRecord { kind: m.kind().name().to_string(), nodes, edges };
        out.push_str(if i == 0 { "\n  " } else { ",\n  " });
        out.push_str(&serde_json::to_string(&rec).expect("motif record serializes"));
    }
    out.push_str(if fg.motifs().is_empty() { "]}\n" } else { "\n]}\n" });
    out
}

/// Formats like C's `%.12g`.
pub fn fmt_g12(v: f64) -> String {
    const SIG: i32 = 12;
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIG).contains(&exp) {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRow {
    pub x: f64,
    pub rho: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// A density curve as stored in `x,rho,converged,iterations` CSV files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensityTable {
    pub rows: Vec<DensityRow>,
}

pub const DENSITY_HEADER: &str = "x,rho,converged,iterations";

impl DensityTable {
    /// Rows for a curve with no iteration metadata.
    pub fn from_curve(xs: impl IntoIterator<Item = f64>, rho: impl IntoIterator<Item = f64>) -> DensityTable {
        let rows =
            xs.into_iter().zip(rho).map(|(x, rho)| DensityRow { x, rho, converged: true, iterations: 0 }).collect();
        DensityTable { rows }
    }

    pub fn xs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.x).collect()
    }

    pub fn rhos(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rho).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(DENSITY_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", fmt_g12(r.x), fmt_g12(r.rho), u8::from(r.converged), r.iterations);
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<DensityTable, IoError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == DENSITY_HEADER => {}
            Some((_, h)) => {
                return Err(IoError::MalformedCsv {
                    line: 1,
                    reason: format!("expected header `{DENSITY_HEADER}`, got `{h}`"),
                })
            }
            None => return Err(IoError::MalformedCsv { line: 1, reason: "empty file".into() }),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| IoError::MalformedCsv { line: line_no, reason };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
            let x = num(fields[0])?;
            let rho = num(fields[1])?;
            let converged = match fields[2] {
                "1" | "true" => true,
                "0" | "false" => false,
                s => return Err(bad(format!("`{s}` is not a convergence flag"))),
            };
            let iterations = fields[3].parse::<usize>().map_err(|e| bad(format!("`{}`: {e}", fields[3])))?;
            if let Some(prev) = rows.last().map(|r: &DensityRow| r.x) {
                if !(x > prev) {
                    return Err(bad("x values must be strictly ascending".into()));
                }
            }
            rows.push(DensityRow { x, rho, converged, iterations });
        }
        Ok(DensityTable { rows })
    }
}

/// One value per line, `%.12g`.
pub fn write_values(values: &[f64]) -> String {
    let mut out = String::with_capacity(20 * values.len());
    for v in values {
        out.push_str(&fmt_g12(*v));
        out.push('\n');
    }
    out
}

/// Whitespace- or comma-separated non-negative integers.
pub fn parse_degrees(text: &str) -> Result<Vec<usize>, IoError> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| {
            t.parse::<usize>().map_err(|e| IoError::MalformedCsv { line: i + 1, reason: format!("degree `{t}`: {e}") })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;

    #[test]
    fn g12_formatting() {
        assert_eq!(fmt_g12(0.0), "0");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(-4.0), "-4");
        assert_eq!(fmt_g12(0.01), "0.01");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(2.0 / 3.0 * 1e-7), "6.66666666667e-08");
        assert_eq!(fmt_g12(31.830988618379067), "31.8309886184");
        assert_eq!(fmt_g12(1.5e15), "1.5e+15");
        assert_eq!(fmt_g12(-3.9999999999999), "-4");
        assert_eq!(fmt_g12(123456789012.4), "123456789012");
    }

    #[test]
    fn network_round_trip() {
        let text = r#"{"n": 6, "motifs": [
            {"kind": "edge", "nodes": [1, 0]},
            {"kind": "triangle", "nodes": [3, 2, 1]},
            {"kind": "cycle", "nodes": [5, 4, 3, 2]},
            {"kind": "general", "nodes": [0, 4, 5], "edges": [[0, 5], [5, 4]]}
        ]}"#;
        let fg = parse_network(text).unwrap();
        assert_eq!(fg.motif(0).members(), &[NodeId(0), NodeId(1)]);
        let out = write_network(&fg);
        assert_eq!(
            out,
            "{\"n\": 6, \"motifs\": [\n  {\"kind\":\"edge\",\"nodes\":[0,1]},\n  {\"kind\":\"triangle\",\"nodes\":[1,2,3]},\n  {\"kind\":\"cycle\",\"nodes\":[2,3,4,5]},\n  {\"kind\":\"general\",\"nodes\":[0,4,5],\"edges\":[[0,5],[4,5]]}\n]}\n"
        );
        let again = parse_network(&out).unwrap();
        assert_eq!(again, fg);
        assert_eq!(write_network(&again), out);
    }

    #[test]
    fn empty_network() {
        let fg = parse_network(r#"{"n": 3, "motifs": []}"#).unwrap();
        assert_eq!(write_network(&fg), "{\"n\": 3, \"motifs\": []}\n");
    }

    #[test]
    fn network_diagnostics() {
        let err = |t: &str| parse_network(t).unwrap_err().to_string();
        assert!(err(r#"{"n": 3, "motifs": [{"kind": "edge", "nodes": [0, 1]}, {"kind": "square", "nodes": [0, 1]}]}"#)
            .contains("motifs[1]: unknown motif kind \"square\""));
        assert!(err(r#"{"n": 3, "motifs": [{"kind": "triangle", "nodes": [0, 1]}]}"#).starts_with("motifs[0]:"));
        assert!(err(r#"{"n": 3, "motifs": [{"kind": "edge", "nodes": [0, 1], "edges": [[0, 1]]}]}"#)
            .contains("not allowed"));
        assert!(err(r#"{"n": 3, "motifs": [{"kind": "general", "nodes": [0, 1]}]}"#).contains("required"));
        assert!(err(r#"{"n": 2, "motifs": [{"kind": "edge", "nodes": [0, 2]}]}"#).contains("out of range"));
        // syntax errors carry serde's line/column
        assert!(err("{\"n\": 2,\n \"motifs\": [,]}").contains("line 2"));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let table = DensityTable {
            rows: vec![
                DensityRow { x: -0.5, rho: 0.25, converged: true, iterations: 12 },
                DensityRow { x: 0.0, rho: 1.0 / 3.0, converged: false, iterations: 100000 },
            ],
        };
        let csv = table.to_csv();
        assert_eq!(csv, "x,rho,converged,iterations\n-0.5,0.25,1,12\n0,0.333333333333,0,100000\n");
        let back = DensityTable::parse_csv(&csv).unwrap();
        assert_eq!(back.rows[0], table.rows[0]);
        assert!(matches!(DensityTable::parse_csv("x,y\n"), Err(IoError::MalformedCsv { line: 1, .. })));
        assert!(matches!(
            DensityTable::parse_csv("x,rho,converged,iterations\n0,1,1,0\n0.1,abc,1,0\n"),
            Err(IoError::MalformedCsv { line: 3, .. })
        ));
        assert!(matches!(
            DensityTable::parse_csv("x,rho,converged,iterations\n0,1,1,0\n0,1,1,0\n"),
            Err(IoError::MalformedCsv { line: 3, .. })
        ));
    }

    #[test]
    fn degree_lists() {
        assert_eq!(parse_degrees("3 1\n2,0\n").unwrap(), vec![3, 1, 2, 0]);
        assert!(parse_degrees("3 x").is_err());
    }
}
