//! File formats for trees.
//!
//! JSON schema: `{n, root, vertices: [{id, status, parent, edge_time}]}`
//! where `status` is `"active"` or `{"frozen": t}`. Keys are emitted sorted
//! for byte-stable diffs. The edge-list TSV is `child<TAB>parent<TAB>edge_time`
//! per non-root vertex, and the DOT export styles frozen vertices in blue and
//! active ones in red.

use serde_json::{json, Value};

use crate::bijection::{BinaryLabel, BinaryNode, IncreasingBinaryTree};
use crate::tree::{FreezeTree, VertexId, VertexStatus};
use crate::{Error, Result};

pub fn tree_to_json(t: &FreezeTree) -> Value {
    let vertices: Vec<Value> = (0..t.num_vertices() as VertexId)
        .map(|v| {
            let status = match t.status(v) {
                VertexStatus::Active => json!("active"),
                VertexStatus::Frozen { time } => json!({ "frozen": time }),
            };
            json!({
                "id": v,
                "status": status,
                "parent": t.parent(v),
                "edge_time": t.edge_time(v),
            })
        })
        .collect();
    json!({
        "n": t.steps(),
        "root": t.root(),
        "vertices": vertices,
    })
}

pub fn tree_to_json_string(t: &FreezeTree) -> String {
    // serde_json maps are BTree-backed, so keys come out sorted.
    serde_json::to_string_pretty(&tree_to_json(t)).expect("tree serializes")
}

pub fn tree_from_json(value: &Value) -> Result<FreezeTree> {
    let obj = value
        .as_object()
        .ok_or_else(|| bad("top level must be an object"))?;
    let steps = obj
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| bad("missing n"))? as usize;
    let root = obj
        .get("root")
        .and_then(Value::as_u64)
        .ok_or_else(|| bad("missing root"))? as VertexId;
    let vertices = obj
        .get("vertices")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing vertices array"))?;
    let n = vertices.len();
    let mut parent = vec![0 as VertexId; n];
    let mut status = vec![VertexStatus::Active; n];
    let mut edge_time = vec![0u32; n];
    for entry in vertices {
        let v = entry
            .get("id")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("vertex missing id"))? as usize;
        if v >= n {
            return Err(bad("vertex id out of range"));
        }
        parent[v] = match entry.get("parent") {
            Some(Value::Null) | None => v as VertexId,
            Some(p) => p.as_u64().ok_or_else(|| bad("bad parent"))? as VertexId,
        };
        edge_time[v] = match entry.get("edge_time") {
            Some(Value::Null) | None => 0,
            Some(e) => e.as_u64().ok_or_else(|| bad("bad edge_time"))? as u32,
        };
        status[v] = match entry.get("status") {
            Some(Value::String(s)) if s == "active" => VertexStatus::Active,
            Some(Value::Object(m)) => {
                let time = m
                    .get("frozen")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| bad("bad status"))?;
                VertexStatus::Frozen { time: time as u32 }
            }
            _ => return Err(bad("bad status")),
        };
    }
    FreezeTree::from_parts(steps, root, parent, status, edge_time)
}

fn bad(msg: &str) -> Error {
    Error::OutOfRange(format!("tree json: {msg}"))
}

/// Binary-tree JSON mirrors the tree schema with `left`/`right` fields:
/// `{root, vertices: [{id, label, left, right}]}` where `label` is `"a"` or
/// `{"time": t}` and leaves carry `null` children.
pub fn binary_tree_to_json(b: &IncreasingBinaryTree) -> Value {
    let vertices: Vec<Value> = (0..b.num_vertices())
        .map(|idx| {
            let node = b.node(idx);
            let label = match node.label {
                BinaryLabel::Active => json!("a"),
                BinaryLabel::Time(t) => json!({ "time": t }),
            };
            json!({
                "id": idx,
                "label": label,
                "left": node.children.map(|(l, _)| l),
                "right": node.children.map(|(_, r)| r),
            })
        })
        .collect();
    json!({ "root": b.root(), "vertices": vertices })
}

pub fn binary_tree_from_json(value: &Value) -> Result<IncreasingBinaryTree> {
    let obj = value
        .as_object()
        .ok_or_else(|| bad("top level must be an object"))?;
    let root = obj
        .get("root")
        .and_then(Value::as_u64)
        .ok_or_else(|| bad("missing root"))? as usize;
    let vertices = obj
        .get("vertices")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing vertices array"))?;
    let mut nodes = vec![
        BinaryNode {
            label: BinaryLabel::Active,
            children: None
        };
        vertices.len()
    ];
    for entry in vertices {
        let id = entry
            .get("id")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("vertex missing id"))? as usize;
        if id >= nodes.len() {
            return Err(bad("vertex id out of range"));
        }
        let label = match entry.get("label") {
            Some(Value::String(s)) if s == "a" => BinaryLabel::Active,
            Some(Value::Object(m)) => {
                let t = m
                    .get("time")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| bad("bad label"))?;
                BinaryLabel::Time(t as u32)
            }
            _ => return Err(bad("bad label")),
        };
        let children = match (entry.get("left"), entry.get("right")) {
            (Some(Value::Null), Some(Value::Null)) | (None, None) => None,
            (Some(l), Some(r)) => Some((
                l.as_u64().ok_or_else(|| bad("bad left child"))? as usize,
                r.as_u64().ok_or_else(|| bad("bad right child"))? as usize,
            )),
            _ => return Err(bad("children must come in pairs")),
        };
        nodes[id] = BinaryNode { label, children };
    }
    let tree = IncreasingBinaryTree::new(nodes, root);
    tree.validate()?;
    Ok(tree)
}

pub fn tree_to_tsv(t: &FreezeTree) -> String {
    let mut out = String::new();
    for v in 0..t.num_vertices() as VertexId {
        if let (Some(p), Some(e)) = (t.parent(v), t.edge_time(v)) {
            out.push_str(&format!("{v}\t{p}\t{e}\n"));
        }
    }
    out
}

pub fn tree_to_dot(t: &FreezeTree) -> String {
    let mut out = String::from("graph freeze_tree {\n  node [shape=circle];\n");
    for v in 0..t.num_vertices() as VertexId {
        match t.status(v) {
            VertexStatus::Active => out.push_str(&format!(
                "  v{v} [label=\"a\", style=filled, fillcolor=red];\n"
            )),
            VertexStatus::Frozen { time } => out.push_str(&format!(
                "  v{v} [label=\"{time}\", style=filled, fillcolor=lightblue];\n"
            )),
        }
    }
    for v in 0..t.num_vertices() as VertexId {
        if let (Some(p), Some(e)) = (t.parent(v), t.edge_time(v)) {
            out.push_str(&format!("  v{p} -- v{v} [label=\"{e}\"];\n"));
        }
    }
    out.push_str("}\n");
    out
}
