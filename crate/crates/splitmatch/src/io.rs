//! Text formats: the graph file and the result document.
//!
//! Graph file (line oriented):
//! ```text
//! # comments anywhere
//! p bmatch <n> <m>
//! b <v> <cap>        # missing vertices default to capacity 1
//! e <u> <v>
//! ```
//! Serialization is canonical: header, then `b` lines for non-unit
//! capacities in vertex order, then `e` lines in edge-id order with
//! u < v. parse(serialize(g, b)) reproduces (g, b) exactly, and
//! serialize(parse(text)) == text for canonical text.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BMatching, CapacityMap, Graph};
use crate::solver::SolveStats;

pub fn parse_graph(text: &str) -> Result<(Graph, CapacityMap)> {
    let mut header: Option<(usize, usize)> = None;
    let mut caps: Vec<i64> = Vec::new();
    let mut cap_seen: Vec<bool> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut it = l.split_whitespace();
        let tag = it.next().unwrap();
        let mut next_num = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("missing {what}"),
                })?
                .parse::<usize>()
                .map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad {what}"),
                })
        };
        match tag {
            "p" => {
                if header.is_some() {
                    return Err(Error::Parse {
                        line,
                        msg: "duplicate header".into(),
                    });
                }
                let kind = it.next().ok_or(Error::Parse {
                    line,
                    msg: "missing problem kind".into(),
                })?;
                if kind != "bmatch" {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown problem kind '{kind}'"),
                    });
                }
                let n = it
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or(Error::Parse {
                        line,
                        msg: "bad vertex count".into(),
                    })?;
                let m = it
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or(Error::Parse {
                        line,
                        msg: "bad edge count".into(),
                    })?;
                header = Some((n, m));
                caps = vec![1; n];
                cap_seen = vec![false; n];
            }
            "b" => {
                let (n, _) = header.ok_or(Error::Parse {
                    line,
                    msg: "capacity line before header".into(),
                })?;
                let v = next_num("vertex")?;
                let c = next_num("capacity")?;
                if v >= n {
                    return Err(Error::Parse {
                        line,
                        msg: format!("vertex {v} out of range"),
                    });
                }
                if cap_seen[v] {
                    return Err(Error::Parse {
                        line,
                        msg: format!("duplicate capacity for vertex {v}"),
                    });
                }
                cap_seen[v] = true;
                caps[v] = c as i64;
            }
            "e" => {
                let (n, _) = header.ok_or(Error::Parse {
                    line,
                    msg: "edge line before header".into(),
                })?;
                let u = next_num("endpoint")?;
                let v = next_num("endpoint")?;
                if u >= n || v >= n {
                    return Err(Error::Parse {
                        line,
                        msg: format!("edge ({u}, {v}) out of range"),
                    });
                }
                if u == v {
                    return Err(Error::Parse {
                        line,
                        msg: format!("loop at vertex {u}"),
                    });
                }
                edges.push((u, v));
            }
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown line tag '{other}'"),
                })
            }
        }
    }
    let (n, m) = header.ok_or(Error::Parse {
        line: 0,
        msg: "missing 'p bmatch' header".into(),
    })?;
    if edges.len() != m {
        return Err(Error::Parse {
            line: 0,
            msg: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    let g = Graph::build(n, &edges).map_err(|e| Error::Parse {
        line: 0,
        msg: e.to_string(),
    })?;
    let b = CapacityMap::new(caps).map_err(|e| Error::Parse {
        line: 0,
        msg: e.to_string(),
    })?;
    Ok((g, b))
}

pub fn serialize_graph(g: &Graph, b: &CapacityMap) -> String {
    let mut out = String::new();
    out.push_str(&format!("p bmatch {} {}\n", g.n(), g.m()));
    for v in 0..g.n() {
        if b.get(v) != 1 {
            out.push_str(&format!("b {} {}\n", v, b.get(v)));
        }
    }
    for eid in 0..g.m() {
        let (u, v) = g.endpoints(eid);
        out.push_str(&format!("e {u} {v}\n"));
    }
    out
}

/// Machine-readable solver output. `edges` lists [u, v, weight] for
/// every positive weight, in edge-id order.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResultDoc {
    pub cardinality: i64,
    pub edges: Vec<[i64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<SolveStats>,
}

pub fn result_doc(g: &Graph, x: &BMatching, stats: Option<SolveStats>) -> ResultDoc {
    let mut edges = Vec::new();
    for eid in 0..g.m() {
        let w = x.get(eid);
        if w > 0 {
            let (u, v) = g.endpoints(eid);
            edges.push([u as i64, v as i64, w]);
        }
    }
    ResultDoc {
        cardinality: x.norm1(),
        edges,
        stats,
    }
}

pub fn parse_result(text: &str) -> Result<ResultDoc> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("result document: {e}"),
    })
}

pub fn serialize_result(doc: &ResultDoc) -> String {
    serde_json::to_string_pretty(doc).expect("result doc serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const P4: &str = "p bmatch 4 3\ne 0 1\ne 1 2\ne 2 3\n";

    #[test]
    fn parse_canonical_round_trip() {
        let (g, b) = parse_graph(P4).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.m(), 3);
        assert_eq!(b.values(), &[1, 1, 1, 1]);
        assert_eq!(serialize_graph(&g, &b), P4);
    }

    #[test]
    fn parse_caps_and_comments() {
        let text = "# capacities\np bmatch 3 2\nb 1 5\nb 2 0\ne 0 1\ne 1 2\n";
        let (g, b) = parse_graph(text).unwrap();
        assert_eq!(b.values(), &[1, 5, 0]);
        let canon = serialize_graph(&g, &b);
        let (g2, b2) = parse_graph(&canon).unwrap();
        assert_eq!(g2.edges(), g.edges());
        assert_eq!(b2, b);
    }

    #[test]
    fn parse_error_carries_line() {
        let text = "p bmatch 3 1\ne 0 9\n";
        match parse_graph(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_graph("e 0 1\n").is_err());
        assert!(parse_graph("p bmatch 2 2\ne 0 1\n").is_err());
    }

    #[test]
    fn result_doc_round_trip() {
        let (g, _) = parse_graph(P4).unwrap();
        let mut x = BMatching::zero(3);
        x.set(0, 1);
        x.set(2, 1);
        let doc = result_doc(&g, &x, None);
        assert_eq!(doc.cardinality, 2);
        assert_eq!(doc.edges, vec![[0, 1, 1], [2, 3, 1]]);
        let back = parse_result(&serialize_result(&doc)).unwrap();
        assert_eq!(back.cardinality, 2);
        assert_eq!(back.edges, doc.edges);
    }
}
