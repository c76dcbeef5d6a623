//! Audit report: JSON document plus a Markdown rendering of the same values.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub parameters: Value,
}

/// Top-level report. Absent sections are omitted from the JSON.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub meta: Meta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fliptest: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repair: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explain: Option<Value>,
}

/// Report sections in document order.
pub const SECTIONS: [&str; 9] = [
    "meta", "dataset", "metrics", "intervals", "verdict", "confusion", "fliptest", "repair", "explain",
];

impl Report {
    pub fn new(meta: Meta) -> Self {
        Report {
            meta,
            dataset: None,
            metrics: None,
            intervals: None,
            verdict: None,
            confusion: None,
            fliptest: None,
            repair: None,
            explain: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values serialize");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let value = serde_json::to_value(self).expect("report values serialize");
        let mut out = format!("# fairaudit {} report\n\n", self.meta.command);
        if let Some(note) = value.pointer("/dataset/orientation").and_then(Value::as_str) {
            out.push_str(&format!("{note}\n\n"));
        }
        for key in SECTIONS {
            if let Some(v) = value.get(key) {
                out.push_str(&format!("## {key}\n\n"));
                render(v, 3, &mut out);
            }
        }
        out
    }
}

/// A real with 6 significant digits, in the style of C's `%g`.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("n/a".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.to_string(),
            (_, Some(i)) => i.to_string(),
            _ => fmt6(n.as_f64().unwrap()),
        }),
        Value::String(s) => Some(s.replace('|', "\\|")),
        _ => None,
    }
}

const MAX_INLINE: usize = 20;

fn inline_list(items: &[Value]) -> Option<String> {
    let cells: Option<Vec<String>> = items.iter().take(MAX_INLINE).map(scalar).collect();
    let mut s = cells?.join(", ");
    if items.len() > MAX_INLINE {
        s.push_str(", ... (truncated)");
    }
    if items.is_empty() {
        s.push_str("(none)");
    }
    Some(s)
}

fn heading(depth: usize, title: &str, out: &mut String) {
    out.push_str(&format!("{} {title}\n\n", "#".repeat(depth.min(6))));
}

fn render(v: &Value, depth: usize, out: &mut String) {
    match v {
        Value::Object(map) => render_object(map, depth, out),
        Value::Array(items) => render_array(items, depth, out),
        other => out.push_str(&format!("{}\n\n", scalar(other).unwrap())),
    }
}

fn render_object(map: &Map<String, Value>, depth: usize, out: &mut String) {
    let mut rows = Vec::new();
    let mut nested = Vec::new();
    for (k, v) in map {
        match v {
            Value::Array(items) if items.iter().all(|x| scalar(x).is_some()) => {
                rows.push((k, inline_list(items).unwrap()))
            }
            Value::Object(_) | Value::Array(_) => nested.push((k, v)),
            _ => rows.push((k, scalar(v).unwrap())),
        }
    }
    if !rows.is_empty() {
        out.push_str("| field | value |\n|---|---|\n");
        for (k, v) in rows {
            out.push_str(&format!("| {k} | {v} |\n"));
        }
        out.push('\n');
    }
    for (k, v) in nested {
        heading(depth, k, out);
        render(v, depth + 1, out);
    }
}

fn render_array(items: &[Value], depth: usize, out: &mut String) {
    if let Some(s) = inline_list(items) {
        out.push_str(&format!("{s}\n\n"));
        return;
    }
    let flat_object = |x: &Value| {
        x.as_object()
            .is_some_and(|m| m.values().all(|v| scalar(v).is_some()))
    };
    let tuple = |x: &Value| {
        x.as_array()
            .is_some_and(|a| a.iter().all(|v| scalar(v).is_some()))
    };
    if items.iter().all(flat_object) {
        let mut cols: Vec<&String> = Vec::new();
        for m in items.iter().filter_map(Value::as_object) {
            for k in m.keys() {
                if !cols.contains(&k) {
                    cols.push(k);
                }
            }
        }
        out.push_str(&format!("| {} |\n", cols.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(" | ")));
        out.push_str(&format!("|{}\n", "---|".repeat(cols.len())));
        for m in items.iter().filter_map(Value::as_object) {
            let cells: Vec<String> = cols
                .iter()
                .map(|c| m.get(*c).and_then(scalar).unwrap_or_default())
                .collect();
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        out.push('\n');
    } else if items.iter().all(tuple) {
        for (i, a) in items.iter().filter_map(Value::as_array).enumerate() {
            let cells: Vec<String> = a.iter().filter_map(scalar).collect();
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
            if i == 0 {
                out.push_str(&format!("|{}\n", "---|".repeat(a.len())));
            }
        }
        out.push('\n');
    } else {
        for x in items {
            heading(depth, "entry", out);
            render(x, depth + 1, out);
        }
    }
}
