use serde_json::{json, Map, Value};

/// One `experiment,param,observable,value` row.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub param: String,
    pub observable: String,
    pub value: f64,
}

/// Machine-readable outcome of one experiment: CSV rows plus verdicts and
/// worst margins for the JSON summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub rows: Vec<Row>,
    pub verdicts: Vec<(String, String)>,
    pub margins: Vec<(String, f64)>,
    pub passed: bool,
}

/// JSON has no non-finite numbers; those are written as their Display text.
pub fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(v.to_string())
    }
}

impl Report {
    pub fn new(experiment: &str) -> Self {
        Report {
            experiment: experiment.to_string(),
            rows: Vec::new(),
            verdicts: Vec::new(),
            margins: Vec::new(),
            passed: true,
        }
    }

    pub fn row(&mut self, param: impl ToString, observable: &str, value: f64) -> &mut Self {
        self.rows.push(Row {
            param: param.to_string(),
            observable: observable.to_string(),
            value,
        });
        self
    }

    pub fn verdict(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.verdicts.push((name.to_string(), value.to_string()));
        self
    }

    pub fn margin(&mut self, name: &str, value: f64) -> &mut Self {
        self.margins.push((name.to_string(), value));
        self
    }

    /// Marks the report failed when `ok` is false; never resets a failure.
    pub fn require(&mut self, ok: bool) -> &mut Self {
        self.passed &= ok;
        self
    }

    /// Appends another report's rows, verdicts and margins under a prefix.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for r in other.rows {
            self.rows.push(Row {
                param: format!("{prefix}/{}", r.param),
                ..r
            });
        }
        for (k, v) in other.verdicts {
            self.verdicts.push((format!("{prefix}/{k}"), v));
        }
        for (k, v) in other.margins {
            self.margins.push((format!("{prefix}/{k}"), v));
        }
        self.passed &= other.passed;
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("experiment,param,observable,value\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", self.experiment, r.param, r.observable, r.value));
        }
        out
    }

    pub fn summary(&self) -> Value {
        let verdicts: Map<String, Value> = self
            .verdicts
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let margins: Map<String, Value> = self.margins.iter().map(|(k, v)| (k.clone(), number(*v))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| json!({"param": r.param, "observable": r.observable, "value": number(r.value)}))
            .collect();
        json!({
            "experiment": self.experiment,
            "passed": self.passed,
            "verdicts": verdicts,
            "worst_margins": margins,
            "rows": rows,
        })
    }

    pub fn summary_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary()).expect("summary serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_values_round_trip_through_the_summary() {
        let mut r = Report::new("demo");
        r.row("a", "x", 0.1 + 0.2).row("b", "y", f64::INFINITY).row("c", "z", -1e-300);
        let csv = r.csv();
        let summary: Value = serde_json::from_str(&r.summary_text()).unwrap();
        for (line, row) in csv.lines().skip(1).zip(summary["rows"].as_array().unwrap()) {
            let text = line.rsplit(',').next().unwrap();
            let parsed: f64 = text.parse().unwrap();
            match &row["value"] {
                Value::Number(n) => assert_eq!(n.as_f64().unwrap().to_bits(), parsed.to_bits()),
                Value::String(s) => assert_eq!(s, text),
                _ => panic!(),
            }
        }
    }

    #[test]
    fn require_is_sticky() {
        let mut r = Report::new("x");
        r.require(false).require(true);
        assert!(!r.passed);
    }
}
