//! Canonical schema envelopes and the static HTML export.
//!
//! Envelope bytes are canonical JSON: object keys sorted, no insignificant
//! whitespace, integers as-is and the only floating-point field
//! (`intensity`) printed with four decimals.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controller::{
    Channel, Mark, MarkAnchor, MarkPayload, ProcessSchema, SchemaViolation, Variant,
};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaIoError {
    #[error("malformed envelope: {0}")]
    Malformed(String),
    #[error("unknown format version {0:?}")]
    UnknownFormatVersion(String),
    #[error("checksum mismatch")]
    BadChecksum,
    #[error("invalid schema: {0}")]
    Invalid(#[from] SchemaViolation),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEnvelope {
    pub format_version: String,
    /// Hex SHA-256 of the canonical bytes of `schema`.
    pub checksum: String,
    pub schema: ProcessSchema,
}

pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format!("{:.4}", n.as_f64().unwrap_or(0.0)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(v, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
    }
}

fn schema_bytes(schema: &ProcessSchema) -> String {
    let value = serde_json::to_value(schema).expect("schema serializes");
    canonical_json(&value)
}

pub fn checksum(schema: &ProcessSchema) -> String {
    hex::encode(Sha256::digest(schema_bytes(schema).as_bytes()))
}

pub fn envelope(schema: &ProcessSchema) -> SchemaEnvelope {
    SchemaEnvelope {
        format_version: FORMAT_VERSION.to_string(),
        checksum: checksum(schema),
        schema: schema.clone(),
    }
}

/// Canonical envelope bytes for a schema. Marks are put in canonical order
/// first, so construction order does not leak into the output.
pub fn serialize_schema(schema: &ProcessSchema) -> Vec<u8> {
    let mut schema = schema.clone();
    crate::controller::sort_marks(&mut schema.marks);
    let value = serde_json::to_value(envelope(&schema)).expect("envelope serializes");
    canonical_json(&value).into_bytes()
}

/// Parse and fully validate envelope bytes.
pub fn parse_schema(bytes: &[u8]) -> Result<ProcessSchema, SchemaIoError> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| SchemaIoError::Malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| SchemaIoError::Malformed("envelope is not an object".into()))?;
    let version = obj
        .get("format_version")
        .and_then(Value::as_str)
        .ok_or_else(|| SchemaIoError::Malformed("missing format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(SchemaIoError::UnknownFormatVersion(version.to_string()));
    }
    let sum = obj
        .get("checksum")
        .and_then(Value::as_str)
        .ok_or_else(|| SchemaIoError::Malformed("missing checksum".into()))?;
    let schema_value = obj
        .get("schema")
        .ok_or_else(|| SchemaIoError::Malformed("missing schema".into()))?;
    let actual = hex::encode(Sha256::digest(canonical_json(schema_value).as_bytes()));
    if actual != sum {
        return Err(SchemaIoError::BadChecksum);
    }
    let schema: ProcessSchema = serde_json::from_value(schema_value.clone())
        .map_err(|e| SchemaIoError::Malformed(e.to_string()))?;
    schema.validate()?;
    Ok(schema)
}

// -------------------------------------------------------------------------
// Static export
// -------------------------------------------------------------------------

const STYLESHEET: &str = "\
article.document{white-space:pre-wrap;max-width:42em;margin:2em auto;line-height:1.7}\
.font.script{font-family:'Segoe Script','Bradley Hand',cursive}\
.font.sans{font-family:'Helvetica Neue',Arial,sans-serif}\
.masking-tape{background:rgba(235,214,160,.55)}\
.masking-tape.stacked{box-shadow:0 2px 0 rgba(200,170,110,.8),0 4px 0 rgba(200,170,110,.5)}\
.masking-tape.scrunched{background:repeating-linear-gradient(100deg,rgba(235,214,160,.7) 0 6px,rgba(215,190,130,.7) 6px 9px)}\
.masking-tape.torn{border-right:2px dashed rgba(190,160,100,.9)}\
.masking-tape.segmented{background:rgba(235,214,160,.35)}\
.smudge{text-shadow:0 0 3px rgba(90,90,90,.6)}\
.eraser-crumb::before{content:'\\2022';color:rgba(60,60,60,var(--intensity,.6))}\
.residual-glue,.stencil.single,.stencil.layered{display:inline-block;width:0;overflow:visible}\
.residual-glue summary::before{content:'\\25CC'}\
.stencil summary::before{content:'\\270E'}\
.stencil.dotted{text-decoration:underline dotted}\
.stencil.lined{text-decoration:underline solid}\
.ghost-text{opacity:1}\
details.payload{display:inline}\
details.payload summary{display:inline;cursor:pointer}\
details.payload summary::before{content:attr(data-label)}\
[data-text]::after{content:attr(data-text);display:block;color:rgba(80,80,80,.55)}";

/// HTML-escape text and attribute values.
pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Drop every tag and decode the entities [`escape_html`] produces.
pub fn strip_tags(html: &str) -> String {
    let mut text = String::with_capacity(html.len());
    let mut in_tag = false;
    for c in html.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            c if !in_tag => text.push(c),
            _ => {}
        }
    }
    text.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&")
}

fn attr(name: &str, value: &str) -> String {
    format!(" {name}=\"{}\"", escape_html(value))
}

fn payload_attrs(m: &Mark) -> String {
    let mut a = String::new();
    if let Some(i) = m.intensity {
        a.push_str(&attr("data-intensity", &format!("{:.4}", i.value())));
        a.push_str(&attr("style", &format!("--intensity:{:.4}", i.value())));
    }
    match &m.payload {
        MarkPayload::None => {}
        MarkPayload::Generation {
            layers,
            stack,
            original,
            segments,
        } => {
            a.push_str(&attr("data-layers", &layers.to_string()));
            if !stack.is_empty() {
                a.push_str(&attr("data-stack", &serde_json::to_string(stack).unwrap_or_default()));
            }
            if let Some(o) = original {
                a.push_str(&attr("data-original", o));
            }
            if !segments.is_empty() {
                a.push_str(&attr("data-segments", &serde_json::to_string(segments).unwrap_or_default()));
            }
        }
        MarkPayload::Prompt {
            instruction,
            context,
        } => {
            a.push_str(&attr("data-instruction", instruction));
            if let Some(c) = context {
                a.push_str(&attr("data-context", c));
            }
        }
        MarkPayload::Discards { texts } => {
            a.push_str(&attr("data-count", &texts.len().to_string()));
        }
        MarkPayload::Feedback { entries } => {
            a.push_str(&attr("data-rounds", &entries.len().to_string()));
            if entries.iter().any(|e| e.integrated) {
                a.push_str(&attr("data-integrated", "true"));
            }
        }
    }
    a
}

/// Collapsed block with payload text held in attributes, so it adds no
/// characters to the document text.
fn details(label: &str, texts: &[String]) -> String {
    let mut s = format!("<details class=\"payload\"><summary{}></summary>", attr("data-label", label));
    for t in texts {
        s.push_str(&format!("<span{}></span>", attr("data-text", t)));
    }
    s.push_str("</details>");
    s
}

fn payload_details(m: &Mark) -> String {
    match (&m.payload, m.channel) {
        (MarkPayload::Prompt { instruction, context }, Channel::GhostText) => {
            let mut texts = vec![instruction.clone()];
            texts.extend(context.clone());
            details("prompt", &texts)
        }
        (MarkPayload::Discards { texts }, _) => details("discarded", texts),
        (MarkPayload::Feedback { entries }, _) => {
            details("feedback", &entries.iter().map(|e| e.text.clone()).collect::<Vec<_>>())
        }
        _ => String::new(),
    }
}

struct Flat<'a> {
    mark: &'a Mark,
    depth: usize,
    order: usize,
}

fn flatten<'a>(marks: &'a [Mark], depth: usize, out: &mut Vec<Flat<'a>>) {
    for m in marks {
        let order = out.len();
        out.push(Flat { mark: m, depth, order });
        flatten(&m.children, depth + 1, out);
    }
}

fn open_tag(m: &Mark) -> String {
    match m.anchor {
        MarkAnchor::Span { node, .. } => format!(
            "<span{}{}{}>{}",
            attr("class", &m.class_name()),
            attr("data-node", &node.to_string()),
            payload_attrs(m),
            payload_details(m)
        ),
        MarkAnchor::Margin { .. } => format!(
            "<span{}{}>{}</span>",
            attr("class", &m.class_name()),
            payload_attrs(m),
            payload_details(m)
        ),
    }
}

/// Self-contained HTML page: no scripts, styles inlined as a data URL,
/// payloads in attributes and collapsed details blocks. Stripping the tags
/// yields exactly the document text.
pub fn export_static_document(schema: &ProcessSchema) -> String {
    let chars: Vec<char> = schema.document.text.chars().collect();
    let mut flat = Vec::new();
    flatten(&schema.marks, 0, &mut flat);

    let mut spans: Vec<(usize, usize, &Flat)> = Vec::new();
    let mut margins: Vec<(usize, &Flat)> = Vec::new();
    for f in &flat {
        match f.mark.anchor {
            MarkAnchor::Span { start, end, .. } => spans.push((start, end, f)),
            MarkAnchor::Margin { offset } => margins.push((offset, f)),
        }
    }
    // Outer marks first: wider ranges, then shallower nesting.
    spans.sort_by_key(|(s, e, f)| (*s, std::cmp::Reverse(*e), f.depth, f.order));
    margins.sort_by_key(|(o, f)| (*o, f.order));

    let mut body = String::new();
    let mut open: Vec<(usize, usize, &Flat)> = Vec::new();
    let (mut si, mut mi) = (0, 0);
    for pos in 0..=chars.len() {
        // Close everything ending here; reopen marks cut short by an
        // overlap.
        let mut reopen = Vec::new();
        while let Some(idx) = open.iter().position(|&(_, e, _)| e <= pos) {
            while open.len() > idx {
                let top = open.pop().expect("nonempty");
                body.push_str("</span>");
                if top.1 > pos {
                    reopen.push(top);
                }
            }
        }
        for top in reopen.into_iter().rev() {
            body.push_str(&open_tag(top.2.mark));
            open.push(top);
        }
        while mi < margins.len() && margins[mi].0 == pos {
            body.push_str(&open_tag(margins[mi].1.mark));
            mi += 1;
        }
        while si < spans.len() && spans[si].0 == pos {
            let s = spans[si];
            body.push_str(&open_tag(s.2.mark));
            if s.1 == pos {
                body.push_str("</span>");
            } else {
                open.push(s);
            }
            si += 1;
        }
        if pos < chars.len() {
            let mut buf = [0u8; 4];
            body.push_str(&escape_html(chars[pos].encode_utf8(&mut buf)));
        }
    }
    for _ in open.drain(..) {
        body.push_str("</span>");
    }
    // Marks past the end of the text (invalid schemas only).
    for (_, f) in &margins[mi..] {
        body.push_str(&open_tag(f.mark));
    }

    format!(
        "<!DOCTYPE html><html lang=\"en\"><head><meta charset=\"utf-8\">\
         <meta name=\"generator\" content=\"draftmarks\">{}{}{}</head>\
         <body{}><article class=\"document\">{}</article></body></html>",
        attr_meta("session", &schema.session),
        attr_meta("role", schema.role.as_str()),
        format_args!(
            "<link rel=\"stylesheet\" href=\"data:text/css;base64,{}\">",
            BASE64.encode(STYLESHEET)
        ),
        attr("class", &format!("role-{}", schema.role.as_str())),
        body
    )
}

fn attr_meta(name: &str, content: &str) -> String {
    format!("<meta{}{}>", attr("name", name), attr("content", content))
}

/// Every class attribute value in an export, in order of appearance.
pub fn export_classes(html: &str) -> Vec<String> {
    html.split("class=\"")
        .skip(1)
        .filter_map(|rest| rest.split('"').next())
        .map(str::to_string)
        .collect()
}

/// CSS class naming a (channel, variant) pair.
pub fn class_name(channel: Channel, variant: Variant) -> String {
    format!("{} {}", channel.as_str(), variant.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_sorts_keys_and_fixes_floats() {
        let v = json!({"b": 1, "a": {"z": 0.5, "y": [true, null, "x\"y"]}});
        assert_eq!(
            canonical_json(&v),
            r#"{"a":{"y":[true,null,"x\"y"],"z":0.5000},"b":1}"#
        );
    }

    #[test]
    fn escaping_round_trips_through_strip() {
        let s = "a < b && \"c\" > 'd'";
        assert_eq!(strip_tags(&format!("<p title=\"{}\">{}</p>", escape_html(s), escape_html(s))), s);
    }

    #[test]
    fn class_names_are_kebab_case() {
        assert_eq!(class_name(Channel::EraserCrumb, Variant::DensityVaried), "eraser-crumb density-varied");
        assert_eq!(class_name(Channel::GhostText, Variant::InstructionOnly), "ghost-text instruction-only");
    }
}
