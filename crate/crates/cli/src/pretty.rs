//! Plain-text rendering of JSON reports for `--pretty`.

use serde_json::Value;

pub fn render(v: &Value) -> String {
    let mut out = String::new();
    walk(v, 0, &mut out);
    out
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            format!("[{}]", a.iter().map(scalar).collect::<Vec<_>>().join(", "))
        }
        other => other.to_string(),
    }
}

fn is_leaf(v: &Value) -> bool {
    match v {
        Value::Object(_) => false,
        Value::Array(a) => a.iter().all(|x| !x.is_object() && !x.is_array()),
        _ => true,
    }
}

fn walk(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
            for (k, x) in map {
                if is_leaf(x) {
                    out.push_str(&format!("{pad}{k:<width$}  {}\n", scalar(x)));
                } else {
                    out.push_str(&format!("{pad}{k}\n"));
                    walk(x, depth + 1, out);
                }
            }
        }
        Value::Array(items) if items.iter().all(Value::is_object) && !items.is_empty() => {
            table(items, depth, out)
        }
        Value::Array(items) => {
            for x in items {
                if is_leaf(x) {
                    out.push_str(&format!("{pad}{}\n", scalar(x)));
                } else {
                    walk(x, depth + 1, out);
                }
            }
        }
        leaf => out.push_str(&format!("{pad}{}\n", scalar(leaf))),
    }
}

/// Rows of flat objects become an aligned table.
fn table(items: &[Value], depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let mut cols: Vec<&String> = Vec::new();
    for x in items {
        for k in x.as_object().expect("checked").keys() {
            if !cols.contains(&k) {
                cols.push(k);
            }
        }
    }
    let cells: Vec<Vec<String>> = items
        .iter()
        .map(|x| {
            cols.iter()
                .map(|c| x.get(c.as_str()).map_or_else(String::new, scalar))
                .collect()
        })
        .collect();
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| {
            cells
                .iter()
                .map(|r| r[i].len())
                .max()
                .unwrap_or(0)
                .max(c.len())
        })
        .collect();
    let line = |row: Vec<String>| {
        let body: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect();
        format!("{pad}{}\n", body.join("  ").trim_end())
    };
    out.push_str(&line(cols.iter().map(|c| c.to_string()).collect()));
    for row in cells {
        out.push_str(&line(row));
    }
}
