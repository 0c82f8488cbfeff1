//! Output directory, run manifest and structured errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use homecare_alp::instance::ProblemInstance;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// What produced a directory of artifacts.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub instance: String,
    pub instance_sha256: String,
    pub seed: u64,
    pub jobs: usize,
    /// Every option of the command, defaults included.
    pub config: serde_json::Value,
    pub outputs: Vec<Artifact>,
    pub tool_version: String,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

/// Collects artifacts for one command and writes the manifest last.
pub struct Run {
    dir: PathBuf,
    manifest: RunManifest,
    clock: Instant,
}

impl Run {
    pub fn new(command: &str, instance: &Path, instance_text: &str, seed: u64, config: serde_json::Value, dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                instance: instance.display().to_string(),
                instance_sha256: sha256(instance_text.as_bytes()),
                seed,
                jobs: rayon::current_num_threads(),
                config,
                outputs: Vec::new(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                timings: BTreeMap::new(),
            },
            clock: Instant::now(),
        })
    }

    /// Records the time since the previous lap under `phase`.
    pub fn lap(&mut self, phase: &str) {
        let s = self.clock.elapsed().as_secs_f64();
        self.manifest.timings.insert(phase.to_string(), s);
        self.clock = Instant::now();
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(Artifact { path: name.to_string(), sha256: sha256(contents.as_bytes()) });
        Ok(())
    }

    /// Markdown artifacts name their manifest in a footer.
    pub fn write_markdown(&mut self, name: &str, body: &str) -> Result<()> {
        self.write(name, &format!("{body}\n_Run manifest: {MANIFEST}_\n"))
    }

    pub fn finish(self) -> Result<()> {
        let path = self.dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
        Ok(())
    }
}

/// An error reported as JSON on stderr.
#[derive(Debug, Serialize)]
pub struct Failure {
    #[serde(skip)]
    pub code: u8,
    pub kind: String,
    pub message: String,
    pub errors: Vec<String>,
}

impl Failure {
    pub fn document(message: impl Into<String>, errors: Vec<String>) -> Self {
        Self { code: 2, kind: "document".into(), message: message.into(), errors }
    }

    pub fn from_anyhow(e: &anyhow::Error) -> Self {
        if let Some(f) = e.downcast_ref::<Failure>() {
            return Self { code: f.code, kind: f.kind.clone(), message: f.message.clone(), errors: f.errors.clone() };
        }
        let kind = match e.downcast_ref::<homecare_alp::Error>() {
            Some(homecare_alp::Error::Document(_) | homecare_alp::Error::InvalidInstance(_) | homecare_alp::Error::Unreachable { .. }) => {
                return Self::document(e.to_string(), vec![e.to_string()]);
            }
            Some(homecare_alp::Error::Precondition(_)) => "precondition",
            Some(homecare_alp::Error::StateLayerCap { .. }) => "state-layer-cap",
            Some(homecare_alp::Error::AlpUnbounded(_)) => "alp-unbounded",
            Some(homecare_alp::Error::PolicyFailure { .. }) => "policy-failure",
            Some(_) => "model",
            None if e.downcast_ref::<std::io::Error>().is_some() => "io",
            None => "error",
        };
        let errors = e.chain().map(ToString::to_string).collect();
        Self { code: 1, kind: kind.into(), message: e.to_string(), errors }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for Failure {}

const REQUIRED: [&str; 4] = ["geometry", "services", "arrivals", "shift"];
const KNOWN: [&str; 7] = ["geometry", "services", "arrivals", "shift", "weights", "gamma", "caps"];

/// Parses an instance document, listing every top-level problem found
/// before the typed parse.
pub fn load_instance(path: &Path) -> Result<(ProblemInstance, String)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::document("instance is not valid JSON", vec![e.to_string()]))?;
    let Some(obj) = value.as_object() else {
        return Err(Failure::document("instance must be a JSON object", vec!["top level is not an object".into()]).into());
    };
    let mut errors: Vec<String> = REQUIRED.iter().filter(|k| !obj.contains_key(**k)).map(|k| format!("missing field `{k}`")).collect();
    errors.extend(obj.keys().filter(|k| !KNOWN.contains(&k.as_str())).map(|k| format!("unknown field `{k}`")));
    if !errors.is_empty() {
        return Err(Failure::document("instance document does not match the schema", errors).into());
    }
    let inst = homecare_alp::instance::load_instance(&text)
        .map_err(|e| Failure::document("instance document is invalid", vec![e.to_string()]))?;
    Ok((inst, text))
}
