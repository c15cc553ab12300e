//! Single-line JSON records on standard error.

use serde_json::{json, Value};

pub fn emit(level: &str, event: &str, fields: Value) {
    let mut record = json!({ "level": level, "event": event });
    if let (Some(r), Value::Object(extra)) = (record.as_object_mut(), fields) {
        r.extend(extra);
    }
    eprintln!("{record}");
}
