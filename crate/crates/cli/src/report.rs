//! Reports: a command echo, the run settings and a JSON result.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Vec<String>,
    pub tol: f64,
    pub seed: u64,
    pub budget: usize,
    pub result: Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite JSON")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("command: {}\n", self.command.join(" "));
        out += &format!("tol: {:e}  seed: {}  budget: {}\n", self.tol, self.seed, self.budget);
        render(&self.result, 0, &mut out);
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("none".into()),
        Value::Bool(b) => Some(if *b { "yes" } else { "no" }.into()),
        Value::Number(n) => Some(match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => i.to_string(),
            (_, Some(u), _) => u.to_string(),
            (_, _, Some(f)) if f != 0.0 && f.abs() < 1e-4 => format!("{f:.3e}"),
            (_, _, Some(f)) => format!("{f:.6}"),
            _ => n.to_string(),
        }),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn inline_array(v: &[Value]) -> Option<String> {
    let parts: Option<Vec<String>> = v.iter().map(|x| match x {
        Value::Array(inner) => inline_array(inner),
        other => scalar(other),
    }).collect();
    let s = format!("[{}]", parts?.join(", "));
    (s.len() <= 100).then_some(s)
}

fn render(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match x {
                    Value::Object(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(x, depth + 1, out);
                    }
                    Value::Array(a) => match inline_array(a) {
                        Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                        None => {
                            out.push_str(&format!("{pad}{k}:\n"));
                            for (i, item) in a.iter().enumerate() {
                                out.push_str(&format!("{pad}  - [{i}]\n"));
                                render(item, depth + 2, out);
                            }
                        }
                    },
                    other => out.push_str(&format!("{pad}{k}: {}\n", scalar(other).unwrap_or_default())),
                }
            }
        }
        Value::Array(a) => {
            for item in a {
                render(item, depth, out);
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}
