//! A small reader for the subset of GML used by network datasets.
//!
//! Only `graph [ node [ id value ] edge [ source target ] ]` is interpreted;
//! every other key (labels, layout, `directed`, creator lines) is parsed for
//! well-formedness and ignored.

use std::collections::BTreeMap;

use super::{BuildReport, Graph, GraphError};

#[derive(Debug, Clone)]
pub struct GmlGraph {
    pub graph: Graph,
    /// Integer `value` of each node, when present.
    pub labels: Vec<Option<i64>>,
    /// `id_map[new_id]` is the GML `id` of node `new_id`.
    pub id_map: Vec<i64>,
    /// Edge records that were not self-loops, before merging duplicates and
    /// reversed arcs.
    pub arc_count: usize,
    pub report: BuildReport,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(i64),
    Real(f64),
    Str(String),
    List(Vec<(String, Value, Position)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Position {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Key(String),
    Int(i64),
    Real(f64),
    Str(String),
    Open,
    Close,
}

fn gml_error(pos: Position, message: impl Into<String>) -> GraphError {
    GraphError::Gml {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, Position)>, GraphError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Position { line: 1, column: 1 };
    let advance = |c: char, pos: &mut Position| {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        if c.is_whitespace() {
            chars.next();
            advance(c, &mut pos);
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                advance(c, &mut pos);
            }
        } else if c == '[' || c == ']' {
            chars.next();
            advance(c, &mut pos);
            tokens.push((if c == '[' { Token::Open } else { Token::Close }, start));
        } else if c == '"' {
            chars.next();
            advance(c, &mut pos);
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => {
                        advance('"', &mut pos);
                        break;
                    }
                    Some(c) => {
                        advance(c, &mut pos);
                        s.push(c);
                    }
                    None => return Err(gml_error(start, "unterminated string")),
                }
            }
            tokens.push((Token::Str(s), start));
        } else {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '[' || c == ']' || c == '"' {
                    break;
                }
                chars.next();
                advance(c, &mut pos);
                word.push(c);
            }
            let token = if word.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
                Token::Key(word)
            } else if let Ok(v) = word.parse::<i64>() {
                Token::Int(v)
            } else if let Ok(v) = word.parse::<f64>() {
                Token::Real(v)
            } else {
                return Err(gml_error(start, format!("unrecognized token {word:?}")));
            };
            tokens.push((token, start));
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, Position)>,
    cursor: usize,
    end: Position,
}

impl Parser {
    /// Parses `key value` pairs until a closing bracket (when `nested`) or
    /// end of input.
    fn list(&mut self, nested: Option<Position>) -> Result<Vec<(String, Value, Position)>, GraphError> {
        let mut items = Vec::new();
        loop {
            let Some((token, pos)) = self.tokens.get(self.cursor).cloned() else {
                return match nested {
                    Some(open) => Err(gml_error(open, "unbalanced '[': missing closing ']'")),
                    None => Ok(items),
                };
            };
            self.cursor += 1;
            let key = match token {
                Token::Close if nested.is_some() => return Ok(items),
                Token::Close => return Err(gml_error(pos, "unbalanced ']'")),
                Token::Key(key) => key,
                other => return Err(gml_error(pos, format!("expected a key, found {other:?}"))),
            };
            let Some((token, value_pos)) = self.tokens.get(self.cursor).cloned() else {
                return Err(gml_error(self.end, format!("key {key:?} has no value")));
            };
            self.cursor += 1;
            let value = match token {
                Token::Int(v) => Value::Int(v),
                Token::Real(v) => Value::Real(v),
                Token::Str(s) => Value::Str(s),
                Token::Open => Value::List(self.list(Some(value_pos))?),
                other => {
                    return Err(gml_error(
                        value_pos,
                        format!("expected a value for {key:?}, found {other:?}"),
                    ))
                }
            };
            items.push((key, value, pos));
        }
    }
}

fn int_field(items: &[(String, Value, Position)], key: &str) -> Option<Result<i64, Position>> {
    items
        .iter()
        .find(|(k, _, _)| k == key)
        .map(|(_, value, pos)| match value {
            Value::Int(v) => Ok(*v),
            Value::Real(v) if v.fract() == 0.0 => Ok(*v as i64),
            _ => Err(*pos),
        })
}

/// Parses a GML document into an undirected graph plus per-node `value`
/// labels. Directed arcs in both directions collapse to one edge.
pub fn load_gml_subset(text: &str) -> Result<GmlGraph, GraphError> {
    let tokens = tokenize(text)?;
    let end = tokens
        .last()
        .map(|(_, p)| *p)
        .unwrap_or(Position { line: 1, column: 1 });
    let mut parser = Parser { tokens, cursor: 0, end };
    let top = parser.list(None)?;
    let (graph_items, graph_pos) = top
        .into_iter()
        .find_map(|(key, value, pos)| match (key.as_str(), value) {
            ("graph", Value::List(items)) => Some((items, pos)),
            _ => None,
        })
        .ok_or_else(|| gml_error(end, "no `graph [ ... ]` block"))?;

    let mut nodes: BTreeMap<i64, Option<i64>> = BTreeMap::new();
    let mut raw_edges = Vec::new();
    for (key, value, pos) in &graph_items {
        let Value::List(items) = value else { continue };
        match key.as_str() {
            "node" => {
                let id = int_field(items, "id")
                    .ok_or_else(|| gml_error(*pos, "node without integer id"))?
                    .map_err(|p| gml_error(p, "node id is not an integer"))?;
                let label = int_field(items, "value").and_then(Result::ok);
                if nodes.insert(id, label).is_some() {
                    return Err(gml_error(*pos, format!("duplicate node id {id}")));
                }
            }
            "edge" => {
                let endpoint = |name: &str| {
                    int_field(items, name)
                        .ok_or_else(|| gml_error(*pos, format!("edge without integer {name}")))?
                        .map_err(|p| gml_error(p, format!("edge {name} is not an integer")))
                };
                raw_edges.push((endpoint("source")?, endpoint("target")?));
            }
            _ => {}
        }
    }
    if nodes.is_empty() {
        return Err(gml_error(graph_pos, "graph has no nodes"));
    }

    let index: BTreeMap<i64, usize> = nodes.keys().enumerate().map(|(t, &id)| (id, t)).collect();
    let mut pairs = Vec::with_capacity(raw_edges.len());
    for (source, target) in raw_edges {
        let lookup = |id: i64| index.get(&id).copied().ok_or(GraphError::UnknownNode { id });
        pairs.push((lookup(source)?, lookup(target)?));
    }
    let arc_count = pairs.iter().filter(|(a, b)| a != b).count();
    let (graph, report) = Graph::from_pairs(nodes.len(), pairs)?;
    Ok(GmlGraph {
        graph,
        labels: nodes.values().copied().collect(),
        id_map: nodes.keys().copied().collect(),
        arc_count,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let doc = "graph [ node [ id 0 ] node [ id 1 ] edge [ source 0 target 1 ] ]";
        let parsed = load_gml_subset(doc).unwrap();
        assert_eq!(parsed.graph.n_nodes(), 2);
        assert_eq!(parsed.graph.edges(), &[(0, 1)]);
        assert_eq!(parsed.labels, vec![None, None]);
    }

    #[test]
    fn reversed_arcs_merge_and_extra_keys_are_skipped() {
        let doc = r#"Creator "test"
graph [
  directed 1
  node [ id 5 label "a.com" value 1 source "Blogarama" ]
  node [ id 9 label "b.com" value 0 graphics [ x 1.5 y -2.0 ] ]
  edge [ source 5 target 9 ]
  edge [ source 9 target 5 weight 2.5 ]
]"#;
        let parsed = load_gml_subset(doc).unwrap();
        assert_eq!(parsed.graph.edges(), &[(0, 1)]);
        assert_eq!(parsed.labels, vec![Some(1), Some(0)]);
        assert_eq!(parsed.id_map, vec![5, 9]);
        assert_eq!(parsed.arc_count, 2);
        assert_eq!(parsed.report.duplicates_collapsed, 1);
    }

    #[test]
    fn unknown_node_in_edge() {
        let doc = "graph [ node [ id 0 ] edge [ source 0 target 3 ] ]";
        assert_eq!(load_gml_subset(doc).unwrap_err(), GraphError::UnknownNode { id: 3 });
    }

    #[test]
    fn unbalanced_brackets_report_position() {
        let doc = "graph [\n  node [ id 0 ]\n";
        match load_gml_subset(doc).unwrap_err() {
            GraphError::Gml { line, column, .. } => assert_eq!((line, column), (1, 7)),
            other => panic!("unexpected {other:?}"),
        }
        let doc = "graph [ node [ id 0 ] ] ]";
        match load_gml_subset(doc).unwrap_err() {
            GraphError::Gml { line, column, .. } => assert_eq!((line, column), (1, 25)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unterminated_string() {
        let doc = "graph [ node [ id 0 label \"oops ] ]";
        assert!(matches!(
            load_gml_subset(doc),
            Err(GraphError::Gml {
                line: 1,
                column: 27,
                ..
            })
        ));
    }
}
