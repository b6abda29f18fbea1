use cartan_forge::Error;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::time::Instant;

pub const SCHEMA: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: String, message: String },
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Serialize)]
pub struct Envelope {
    pub schema: u32,
    pub tool_version: &'static str,
    pub spec_name: String,
    pub command: &'static str,
    pub parameters: Value,
    pub results: Value,
    pub residuals: BTreeMap<String, f64>,
    pub wall_time: f64,
}

impl Envelope {
    pub fn new(command: &'static str, spec_name: &str, parameters: Value) -> Self {
        Self {
            schema: SCHEMA,
            tool_version: env!("CARGO_PKG_VERSION"),
            spec_name: spec_name.to_string(),
            command,
            parameters,
            results: Value::Null,
            residuals: BTreeMap::new(),
            wall_time: 0.0,
        }
    }

    pub fn render(mut self, started: Instant) -> String {
        self.wall_time = started.elapsed().as_secs_f64();
        serde_json::to_string_pretty(&self).expect("report serializes")
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("value serializes")
}

fn error_value(err: &CliError) -> Value {
    let mut body = Map::new();
    match err {
        CliError::Core(e) => {
            body.insert("kind".into(), json!(e.kind()));
            body.insert("message".into(), json!(e.to_string()));
            match e {
                Error::Syntax { line, column, .. } | Error::UnknownIdentifier { line, column, .. } => {
                    body.insert("line".into(), json!(line));
                    body.insert("column".into(), json!(column));
                }
                Error::DomainExit { tau, last, reason } => {
                    body.insert("tau".into(), json!(tau));
                    body.insert("last_state".into(), to_value(last));
                    body.insert("reason".into(), json!(reason));
                }
                Error::OutOfDomain { point, coordinate } => {
                    body.insert("point".into(), json!(point));
                    body.insert("coordinate".into(), json!(coordinate));
                }
                Error::SingularMetric { point } | Error::SingularFrame { point } => {
                    body.insert("point".into(), json!(point));
                }
                _ => {}
            }
        }
        CliError::Io { path, message } => {
            body.insert("kind".into(), json!("io"));
            body.insert("message".into(), json!(format!("{path}: {message}")));
            body.insert("path".into(), json!(path));
        }
        CliError::Usage(message) => {
            body.insert("kind".into(), json!("usage"));
            body.insert("message".into(), json!(message.trim_end()));
        }
    }
    json!({ "schema": SCHEMA, "error": Value::Object(body) })
}

pub fn emit_error(err: &CliError) {
    eprintln!("{}", serde_json::to_string(&error_value(err)).expect("error serializes"));
}
