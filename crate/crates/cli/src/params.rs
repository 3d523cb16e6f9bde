use std::collections::BTreeMap;

use serde_json::Value;

use crate::Failure;

/// Experiment parameters. Every lookup records the value actually used, so
/// the recorded table reproduces the run without relying on defaults.
#[derive(Debug, Default)]
pub struct Params {
    given: BTreeMap<String, Value>,
    used: BTreeMap<String, Value>,
}

fn usage(key: &str, want: &str, v: &Value) -> Failure {
    Failure::Usage(format!("parameter `{key}` must be {want}, got {v}"))
}

/// A flag value: TOML literal when it parses as one, bare string otherwise.
pub fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => serde_json::to_value(t.remove("v").unwrap()).unwrap_or(Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

impl Params {
    pub fn new(given: BTreeMap<String, Value>) -> Self {
        Params { given, used: BTreeMap::new() }
    }

    fn take(&mut self, key: &str, default: Value) -> Value {
        let v = self.given.get(key).cloned().unwrap_or(default);
        self.used.insert(key.to_string(), v.clone());
        v
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64, Failure> {
        let v = self.take(key, Value::from(default));
        v.as_f64().ok_or_else(|| usage(key, "a number", &v))
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize, Failure> {
        let v = self.take(key, Value::from(default));
        match v.as_u64() {
            Some(x) => Ok(x as usize),
            None => match v.as_f64() {
                Some(x) if x >= 0.0 && x.fract() == 0.0 && x < 9.0e15 => Ok(x as usize),
                _ => Err(usage(key, "a non-negative integer", &v)),
            },
        }
    }

    pub fn u32(&mut self, key: &str, default: u32) -> Result<u32, Failure> {
        let x = self.usize(key, default as usize)?;
        u32::try_from(x).map_err(|_| Failure::Usage(format!("parameter `{key}` is too large")))
    }

    pub fn string(&mut self, key: &str, default: &str) -> Result<String, Failure> {
        let v = self.take(key, Value::from(default));
        v.as_str().map(str::to_string).ok_or_else(|| usage(key, "a string", &v))
    }

    pub fn f64s(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, Failure> {
        let v = self.take(key, Value::from(default.to_vec()));
        v.as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
            .ok_or_else(|| usage(key, "an array of numbers", &v))
    }

    pub fn u32s(&mut self, key: &str, default: &[u32]) -> Result<Vec<u32>, Failure> {
        let v = self.take(key, Value::from(default.to_vec()));
        v.as_array()
            .and_then(|a| a.iter().map(|x| x.as_u64().and_then(|x| u32::try_from(x).ok())).collect::<Option<Vec<_>>>())
            .ok_or_else(|| usage(key, "an array of positive integers", &v))
    }

    /// The recorded table; unknown keys are a usage error.
    pub fn finish(self) -> Result<BTreeMap<String, Value>, Failure> {
        let unknown: Vec<&String> = self.given.keys().filter(|k| !self.used.contains_key(*k)).collect();
        if !unknown.is_empty() {
            return Err(Failure::Usage(format!(
                "unknown parameter(s) {unknown:?}; this experiment reads {:?}",
                self.used.keys().collect::<Vec<_>>()
            )));
        }
        Ok(self.used)
    }
}
