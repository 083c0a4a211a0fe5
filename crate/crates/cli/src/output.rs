//! Tabular output: RFC-style CSV (header row, `.` decimal) or a flat JSON
//! object mirroring the columns.

use std::path::PathBuf;

use teleportsim_core::Error;

pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Flat object: column name -> array of values (numbers where they parse).
    pub fn to_json(&self) -> String {
        let mut obj = serde_json::Map::new();
        for (c, name) in self.columns.iter().enumerate() {
            let vals: Vec<serde_json::Value> = self
                .rows
                .iter()
                .map(|row| {
                    let cell = &row[c];
                    match cell.parse::<f64>() {
                        Ok(v) if v.is_finite() => serde_json::json!(v),
                        _ => serde_json::Value::String(cell.clone()),
                    }
                })
                .collect();
            obj.insert(name.clone(), serde_json::Value::Array(vals));
        }
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(obj))
            .expect("json encoding");
        s.push('\n');
        s
    }

    pub fn emit_opt(&self, out: &Option<PathBuf>, json: bool) -> Result<(), Error> {
        let body = if json { self.to_json() } else { self.to_csv() };
        write_text(out, &body)
    }
}

pub fn write_text(out: &Option<PathBuf>, body: &str) -> Result<(), Error> {
    match out {
        Some(path) if path.as_os_str() != "-" => {
            std::fs::write(path, body)?;
            Ok(())
        }
        _ => {
            print!("{body}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_share_payload() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1.5".into(), "x".into()]);
        t.push(vec!["2.5".into(), "y".into()]);
        let csv = t.to_csv();
        assert_eq!(csv, "a,b\n1.5,x\n2.5,y\n");
        let json: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(json["a"][1], serde_json::json!(2.5));
        assert_eq!(json["b"][0], "x");
    }
}
