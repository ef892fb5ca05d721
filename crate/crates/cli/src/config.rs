//! Layered run configuration: built-in defaults, then the `--config` file,
//! then command-line flags. Every resolved value is recorded so the run can
//! be replayed from the snapshot alone.

use std::collections::BTreeMap;
use std::fmt::{self, Display};
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use imgts::evalkit::PerturbationSpec;
use imgts::realts::NoiseLevel;
use imgts::se_theory::Scaling;

/// Comma-separated list value, e.g. `96,192,336`. An empty string is an
/// empty list.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(List(Vec::new()));
        }
        s.split(',')
            .map(|p| p.trim().parse::<T>().map_err(|e| format!("'{}': {e}", p.trim())))
            .collect::<std::result::Result<Vec<T>, String>>()
            .map(List)
    }
}

impl<T: Display> Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Flag,
    Auto,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Default => "default",
            Source::File => "file",
            Source::Flag => "flag",
            Source::Auto => "auto",
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    section: String,
    key: String,
    value: String,
    source: Source,
}

/// Parsed settings file: `[section]` headers and `key = value` lines.
/// Blank lines and lines starting with `;` or `#` are ignored; keys before
/// the first header belong to section `run`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SettingsFile {
    values: BTreeMap<(String, String), String>,
}

impl SettingsFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut section = "run".to_string();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with(';') || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| anyhow!("{origin}:{}: unterminated section header", n + 1))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}:{}: expected `key = value`", n + 1))?;
            values.insert((section.clone(), k.trim().replace('-', "_")), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(String::as_str)
    }
}

pub struct Resolver {
    file: Option<SettingsFile>,
    entries: Vec<Entry>,
}

impl Resolver {
    pub fn new(config: Option<&Path>) -> Result<Self> {
        let file = match config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config file {}", p.display()))?;
                Some(SettingsFile::parse(&text, &p.display().to_string())?)
            }
            None => None,
        };
        Ok(Self {
            file,
            entries: Vec::new(),
        })
    }

    fn file_value(&self, section: &str, key: &str) -> Option<String> {
        self.file.as_ref()?.get(section, key).map(str::to_string)
    }

    fn record(&mut self, section: &str, key: &str, value: String, source: Source) {
        self.entries.retain(|e| !(e.section == section && e.key == key));
        self.entries.push(Entry {
            section: section.to_string(),
            key: key.to_string(),
            value,
            source,
        });
    }

    fn lookup<T>(&self, section: &str, key: &str, flag: Option<T>) -> Result<Option<(T, Source)>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(Some((v, Source::Flag)));
        }
        match self.file_value(section, key) {
            Some(raw) => raw
                .parse::<T>()
                .map(|v| Some((v, Source::File)))
                .map_err(|e| anyhow!("config [{section}] {key} = '{raw}': {e}")),
            None => Ok(None),
        }
    }

    /// Resolves one value: flag, then file, then `default`.
    pub fn get<T>(&mut self, section: &str, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let (value, source) = self.lookup(section, key, flag)?.unwrap_or((default, Source::Default));
        self.record(section, key, value.to_string(), source);
        Ok(value)
    }

    /// Like [`Resolver::get`], but when neither flag nor file sets the value
    /// it is produced by `auto` and recorded as auto-chosen.
    pub fn get_or_auto<T>(&mut self, section: &str, key: &str, flag: Option<T>, auto: impl FnOnce() -> T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let (value, source) = self.lookup(section, key, flag)?.unwrap_or_else(|| (auto(), Source::Auto));
        self.record(section, key, value.to_string(), source);
        Ok(value)
    }

    /// Value that must come from a flag or the file.
    pub fn require<T>(&mut self, section: &str, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let (value, source) = self.lookup(section, key, flag)?.ok_or_else(|| {
            anyhow!(
                "missing required setting --{} (or `{key}` under [{section}] in the config file)",
                key.replace('_', "-")
            )
        })?;
        self.record(section, key, value.to_string(), source);
        Ok(value)
    }

    /// INI text of every resolved value, grouped by section in resolution
    /// order. A comment line before each value names where it came from.
    pub fn snapshot(&self) -> String {
        let mut sections: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !sections.contains(&e.section.as_str()) {
                sections.push(&e.section);
            }
        }
        let mut out = String::new();
        for (i, s) in sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!("[{s}]\n"));
            for e in self.entries.iter().filter(|e| e.section == *s) {
                out.push_str(&format!("; {}\n{} = {}\n", e.source.name(), e.key, e.value));
            }
        }
        out
    }
}

/// Observation noise setting: `rel:<factor>` or `abs:<sigma>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise(pub NoiseLevel);

impl FromStr for Noise {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, v) = s.split_once(':').ok_or_else(|| format!("expected rel:<x> or abs:<x>, got '{s}'"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("bad noise level '{v}'"))?;
        match kind.trim() {
            "rel" => Ok(Noise(NoiseLevel::RelativeToSignal(v))),
            "abs" => Ok(Noise(NoiseLevel::Absolute(v))),
            other => Err(format!("unknown noise kind '{other}' (rel or abs)")),
        }
    }
}

impl Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            NoiseLevel::RelativeToSignal(v) => write!(f, "rel:{v}"),
            NoiseLevel::Absolute(v) => write!(f, "abs:{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingArg(pub Scaling);

impl FromStr for ScalingArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scaling::parse(s).map(ScalingArg).map_err(|e| e.to_string())
    }
}

impl Display for ScalingArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spec(pub PerturbationSpec);

impl FromStr for Spec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        PerturbationSpec::parse(s).map(Spec).map_err(|e| e.to_string())
    }
}

impl Display for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
