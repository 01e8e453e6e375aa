//! JSON navigation with pointer-tracked errors.

use crate::error::CliError;
use serde_json::Value;

pub struct Ctx<'a> {
    pub value: &'a Value,
    pub pointer: String,
}

impl<'a> Ctx<'a> {
    pub fn root(value: &'a Value) -> Self {
        Self { value, pointer: String::new() }
    }

    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::Schema {
            pointer: if self.pointer.is_empty() { "/".into() } else { self.pointer.clone() },
            message: message.into(),
        }
    }

    pub fn get(&self, key: &str) -> Result<Ctx<'a>, CliError> {
        self.opt(key).ok_or_else(|| CliError::Schema {
            pointer: format!("{}/{key}", self.pointer),
            message: format!("missing required key `{key}`"),
        })
    }

    pub fn opt(&self, key: &str) -> Option<Ctx<'a>> {
        self.value.get(key).map(|v| Ctx {
            value: v,
            pointer: format!("{}/{key}", self.pointer),
        })
    }

    pub fn f64(&self) -> Result<f64, CliError> {
        self.value
            .as_f64()
            .ok_or_else(|| self.err("expected a number"))
    }

    pub fn positive_f64(&self) -> Result<f64, CliError> {
        let v = self.f64()?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(format!("expected a positive finite number, got {v}")))
        }
    }

    pub fn usize(&self) -> Result<usize, CliError> {
        self.value
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| self.err("expected a non-negative integer"))
    }

    pub fn str(&self) -> Result<&'a str, CliError> {
        self.value
            .as_str()
            .ok_or_else(|| self.err("expected a string"))
    }

    pub fn bool(&self) -> Result<bool, CliError> {
        self.value
            .as_bool()
            .ok_or_else(|| self.err("expected a boolean"))
    }

    pub fn array(&self) -> Result<Vec<Ctx<'a>>, CliError> {
        match self.value.as_array() {
            Some(items) => Ok(items
                .iter()
                .enumerate()
                .map(|(i, v)| Ctx { value: v, pointer: format!("{}/{i}", self.pointer) })
                .collect()),
            None => Err(self.err("expected an array")),
        }
    }

    pub fn bad(&self, message: impl Into<String>) -> CliError {
        self.err(message)
    }
}

pub fn parse_json(text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Schema {
        pointer: "/".into(),
        message: format!("invalid JSON: {e}"),
    })
}
