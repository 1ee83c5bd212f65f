use super::Graph;
use crate::error::{Error, Result};

/// How node indices in an edge list are numbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexBase {
    #[default]
    Zero,
    One,
    /// One-based unless some line mentions node 0.
    Auto,
}

/// Parses `i j [w]` lines. Blank lines and lines starting with `#` or `%`
/// are skipped, except for a `# nodes N` header which fixes the node count
/// (otherwise it is one past the largest index).
pub fn parse_edge_list(text: &str, base: IndexBase) -> Result<Graph> {
    let mut raw = Vec::new();
    let mut declared_n = None;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            if parts.next() == Some("nodes") {
                let n = parts
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| parse_err(lineno, "malformed `# nodes` header"))?;
                declared_n = Some(n);
            }
            continue;
        }
        if line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_err(lineno, "expected `i j [w]`"));
        }
        let i = parse_index(fields[0], lineno)?;
        let j = parse_index(fields[1], lineno)?;
        let w = match fields.get(2) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("bad weight `{s}`")))?,
            None => 1.0,
        };
        if i == j {
            return Err(parse_err(lineno, format!("self-loop on node {i}")));
        }
        // zero weights are accepted here and dropped by `Graph::from_edges`
        if !w.is_finite() || w < 0.0 {
            return Err(parse_err(lineno, format!("weight {w} must be positive")));
        }
        raw.push((lineno, i, j, w));
    }

    let one_based = match base {
        IndexBase::Zero => false,
        IndexBase::One => true,
        IndexBase::Auto => !raw.iter().any(|e| e.1 == 0 || e.2 == 0),
    };
    let mut edges = Vec::with_capacity(raw.len());
    for &(lineno, i, j, w) in &raw {
        if one_based && (i == 0 || j == 0) {
            return Err(parse_err(lineno, "index 0 in a one-based edge list"));
        }
        let shift = usize::from(one_based);
        edges.push((i - shift, j - shift, w));
    }
    let max_index = edges.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0);
    let n = match declared_n {
        Some(n) if n < max_index => {
            return Err(parse_err(0, format!("header declares {n} nodes but index {} appears", max_index - 1)))
        }
        Some(n) => n,
        None => max_index,
    };
    Graph::from_edges(n, &edges)
}

/// Parses the DIMACS clique format: `c` comments, one `p edge n m` header
/// and 1-based `e i j` lines.
pub fn parse_dimacs(text: &str) -> Result<Graph> {
    let mut n = None;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first().copied() {
            None | Some("c") => {}
            Some("p") => {
                if fields.len() != 4 || (fields[1] != "edge" && fields[1] != "col") {
                    return Err(parse_err(lineno, "expected `p edge n m`"));
                }
                n = Some(parse_index(fields[2], lineno)?);
            }
            Some("e") => {
                let n = n.ok_or_else(|| parse_err(lineno, "edge before `p` header"))?;
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "expected `e i j`"));
                }
                let i = parse_index(fields[1], lineno)?;
                let j = parse_index(fields[2], lineno)?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(lineno, format!("edge ({i}, {j}) outside 1..={n}")));
                }
                if i == j {
                    return Err(parse_err(lineno, format!("self-loop on node {i}")));
                }
                edges.push((i - 1, j - 1, 1.0));
            }
            Some(other) => return Err(parse_err(lineno, format!("unknown line type `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(0, "missing `p edge n m` header"))?;
    Graph::from_edges(n, &edges)
}

fn parse_index(s: &str, line: usize) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| parse_err(line, format!("bad node index `{s}`")))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_from_text() {
        let g = parse_edge_list("0 1\n1 2\n0 2", IndexBase::Zero).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.degrees(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn single_weighted_edge() {
        let g = parse_edge_list("0 1 0.5", IndexBase::Zero).unwrap();
        assert_eq!(g.degrees(), &[0.5, 0.5]);
    }

    #[test]
    fn self_loop_reports_line() {
        match parse_edge_list("0 1\n0 0", IndexBase::Zero) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("self-loop"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_lines_report_line_numbers() {
        assert!(matches!(
            parse_edge_list("0 1\nx 2", IndexBase::Zero),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1 -2", IndexBase::Zero),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1\n1 0", IndexBase::Zero),
            Err(Error::DuplicateEdge(0, 1))
        ));
    }

    #[test]
    fn one_based_and_auto() {
        let g = parse_edge_list("1 2\n2 3", IndexBase::One).unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(g.has_edge(0, 1));
        let g = parse_edge_list("1 2\n2 3", IndexBase::Auto).unwrap();
        assert_eq!(g.node_count(), 3);
        let g = parse_edge_list("0 2", IndexBase::Auto).unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(parse_edge_list("0 1", IndexBase::One).is_err());
    }

    #[test]
    fn header_keeps_isolated_nodes() {
        let g = parse_edge_list("# nodes 5\n0 1\n", IndexBase::Zero).unwrap();
        assert_eq!(g.node_count(), 5);
        assert!(parse_edge_list("# nodes 1\n0 1\n", IndexBase::Zero).is_err());
    }

    #[test]
    fn canonical_roundtrip_golden() {
        let g = parse_edge_list("2 1 0.5\n# comment\n0 2\n", IndexBase::Zero).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "# nodes 3\n0 2\n1 2 0.5\n");
        assert_eq!(parse_edge_list(&text, IndexBase::Zero).unwrap(), g);
    }

    #[test]
    fn dimacs_reader() {
        let text = "c tiny\np edge 4 3\ne 1 2\ne 2 3\ne 3 4\n";
        let g = parse_dimacs(text).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 3);
        assert!(g.has_edge(2, 3));
        assert!(parse_dimacs("e 1 2\n").is_err());
        assert!(parse_dimacs("p edge 2 1\ne 1 3\n").is_err());
    }
}
