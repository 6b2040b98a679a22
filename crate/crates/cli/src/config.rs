//! Flat `key = value` run descriptions. Command-line flags override file values.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qscene::QsError;

/// Every key a config file may set, with its documented default.
pub const KEYS: &[(&str, &str)] = &[
    ("scheme", "pae"),
    ("qubits", "10"),
    ("image", "aae: 2^(qubits/2) square, bae: 16x16, pae: 8x8"),
    ("grid", "2x2"),
    ("layers", "3"),
    ("connectivity", "line"),
    ("entangler", "cx"),
    ("brickwork", "false"),
    ("measured", "scheme default"),
    ("loader_layers", "8"),
    ("loader_stages", "auto"),
    ("loader_steps", "500"),
    ("loader_lr", "0.05"),
    ("epochs", "30"),
    ("batch_size", "16"),
    ("lr", "0.01"),
    ("val_fraction", "0.2"),
    ("train_data", "data/train.qtns"),
    ("test_data", "data/test.qtns"),
    ("loaders", "none"),
    ("model", "out/model.qmod"),
    ("kind", "bright_vs_dark"),
    ("n", "command specific"),
    ("n_test", "n / 2"),
    ("noise", "0.1"),
    ("png", "false"),
    ("p", "0.5"),
    ("q", "0.99"),
    ("trials", "100000"),
    ("shots", "1000"),
    ("seeds", "1"),
    ("index", "0"),
    ("input", "none"),
    ("dir", "out"),
    ("seed", "0"),
    ("threads", "all cores"),
    ("out", "command specific"),
];

#[derive(Debug)]
pub enum CliError {
    Config { field: String, message: String },
    Core(QsError),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config { field: field.to_string(), message: message.into() }
    }

    /// One machine-parseable line.
    pub fn line(&self) -> String {
        let quote = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n");
        match self {
            CliError::Config { field, message } => format!("error: kind=config field={field} message=\"{}\"", quote(message)),
            CliError::Core(e) => format!("error: kind={} message=\"{}\"", e.kind(), quote(&e.to_string())),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl From<QsError> for CliError {
    fn from(e: QsError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(QsError::Io(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// `HxW` pair, used for image shapes and block grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims(pub usize, pub usize);

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (h, w) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected HxW, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("expected HxW, got `{s}`"));
        Ok(Dims(parse(h)?, parse(w)?))
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `#` starts a comment; blank lines are skipped; unknown keys are rejected.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::config("config", format!("line {}: expected `key = value`", i + 1)));
            };
            let key = k.trim();
            if !KEYS.iter().any(|(name, _)| *name == key) {
                return Err(CliError::config(key, format!("line {}: unknown key", i + 1)));
            }
            values.insert(key.to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn set<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::config(key, format!("invalid value `{v}`: {e}"))))
            .transpose()
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    /// Like [`Settings::get`], and records the value used so the resolved run
    /// can be written back out.
    pub fn resolve<T: FromStr + ToString>(&mut self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.get(key, default)?;
        self.values.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn path(&self, key: &str, default: &str) -> PathBuf {
        PathBuf::from(self.raw(key).unwrap_or(default))
    }

    /// Path that must already exist.
    pub fn existing(&self, key: &str, default: &str) -> CliResult<PathBuf> {
        let p = self.path(key, default);
        if !p.exists() {
            return Err(CliError::config(key, format!("{} does not exist", p.display())));
        }
        Ok(p)
    }

    /// Resolved settings in config-file syntax.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let mut s = Settings::parse("# run\nscheme = bae  # blocks\n\ngrid=2x3\n").unwrap();
        assert_eq!(s.raw("scheme"), Some("bae"));
        assert_eq!(s.get::<Dims>("grid", Dims(1, 1)).unwrap(), Dims(2, 3));
        s.set("scheme", Some("pae"));
        s.set::<&str>("grid", None);
        assert_eq!(s.raw("scheme"), Some("pae"));
        assert_eq!(s.get::<usize>("layers", 3).unwrap(), 3);
        assert_eq!(Settings::parse(&s.to_text()).unwrap().to_text(), s.to_text());
    }

    #[test]
    fn errors_name_the_field() {
        let e = Settings::parse("qbits = 3").unwrap_err();
        assert!(e.line().starts_with("error: kind=config field=qbits "));
        let s = Settings::parse("layers = three").unwrap();
        let e = s.get::<usize>("layers", 1).unwrap_err();
        assert!(e.line().contains("field=layers"));
        assert!(Settings::parse("no equals sign").is_err());
    }

    #[test]
    fn error_line_is_single_line() {
        let e = CliError::config("x", "a \"quoted\"\nvalue");
        assert_eq!(e.line(), "error: kind=config field=x message=\"a \\\"quoted\\\"\\nvalue\"");
    }

    #[test]
    fn dims_parse() {
        assert_eq!("16x8".parse::<Dims>().unwrap(), Dims(16, 8));
        assert!("16".parse::<Dims>().is_err());
        assert_eq!(Dims(4, 2).to_string(), "4x2");
    }
}
