//! Run manifests: enough to re-run a command and check its outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, without `--manifest`.
    pub args: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub seeds: Vec<u64>,
    pub outputs: Vec<FileDigest>,
    pub stdout_sha256: String,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Default location next to the first output file.
    pub fn default_path(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }
}

/// Drops `--manifest <path>` and `--manifest=<path>` from an argument list.
pub fn strip_manifest_flag(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--manifest" {
            skip = true;
            continue;
        }
        if a.starts_with("--manifest=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_flag_forms() {
        let args: Vec<String> = ["build", "--manifest", "m.json", "--data", "d.csv", "--manifest=x"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(strip_manifest_flag(&args), vec!["build", "--data", "d.csv"]);
    }

    #[test]
    fn json_round_trip() {
        let m = RunManifest {
            tool: "heursched".into(),
            version: "0.1.0".into(),
            command: "build".into(),
            args: vec!["build".into()],
            inputs: vec![FileDigest {
                path: "d.csv".into(),
                sha256: sha256_hex(b"x"),
            }],
            seeds: vec![1, 2],
            outputs: vec![],
            stdout_sha256: sha256_hex(b""),
        };
        assert_eq!(RunManifest::from_json(&m.to_json()).unwrap(), m);
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(RunManifest::default_path(Path::new("out/g.csv")), PathBuf::from("out/g.csv.manifest.json"));
    }
}
