use std::io::{BufRead, BufReader, Cursor};
use std::path::PathBuf;

use serde::Serialize;

use super::config::Registry;
use super::seeds::sha256_hex;
use crate::error::{Error, Result};
use crate::graph::{load_attributes, load_edge_list, load_labels, EdgeListOptions, Graph};

/// A dataset read from disk together with its content hash.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    /// SHA-256 over the bytes of every file plus the directedness flag.
    pub hash: String,
    pub files: Vec<FileCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileCheck {
    pub path: PathBuf,
    pub sha256: String,
    /// `None` when the registry lists no expected digest.
    pub verified: Option<bool>,
}

fn read_file(dataset: &str, path: &PathBuf) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingDataset {
            dataset: dataset.to_string(),
            path: path.clone(),
        },
        _ => Error::Io(e),
    })
}

/// Hashes every file of `name` and compares against the registry digests.
/// Missing files and mismatches are errors.
pub fn verify_dataset(registry: &Registry, name: &str) -> Result<Vec<FileCheck>> {
    let entry = registry.entry(name)?;
    let mut out = Vec::new();
    for rel in entry.files() {
        let path = registry.resolve(rel);
        let digest = sha256_hex(&read_file(name, &path)?);
        let expected = entry.sha256.get(&rel.to_string_lossy().into_owned());
        if let Some(exp) = expected {
            if !exp.eq_ignore_ascii_case(&digest) {
                return Err(Error::Checksum {
                    path,
                    expected: exp.clone(),
                    found: digest,
                });
            }
        }
        out.push(FileCheck {
            path,
            sha256: digest,
            verified: expected.map(|_| true),
        });
    }
    Ok(out)
}

fn first_tokens(bytes: &[u8]) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for line in Cursor::new(bytes).lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(tok) = t.split(|c: char| c.is_whitespace() || c == ',').find(|s| !s.is_empty()) {
            ids.push(tok.to_string());
        }
    }
    Ok(ids)
}

/// Loads `name` from the registry, verifying checksums where listed.
///
/// With an attribute file the node set is the attribute file's id column:
/// isolated nodes are kept and edges to unknown ids are dropped.
pub fn load_dataset(registry: &Registry, name: &str) -> Result<Dataset> {
    let entry = registry.entry(name)?;
    let files = verify_dataset(registry, name)?;
    let mut hash_input = Vec::new();
    for f in &files {
        hash_input.extend_from_slice(f.sha256.as_bytes());
    }
    hash_input.push(entry.directed as u8);

    let edges = read_file(name, &registry.resolve(&entry.edges))?;
    let attributes = entry
        .attributes
        .as_ref()
        .map(|p| read_file(name, &registry.resolve(p)))
        .transpose()?;
    let options = EdgeListOptions {
        directed: entry.directed,
        restrict_to: attributes.as_deref().map(first_tokens).transpose()?,
    };
    let context = |file: &PathBuf| {
        let file = registry.resolve(file);
        move |e: Error| Error::Config(format!("{}: {e}", file.display()))
    };
    let mut graph = load_edge_list(BufReader::new(edges.as_slice()), &options).map_err(context(&entry.edges))?;
    if let (Some(bytes), Some(path)) = (&attributes, &entry.attributes) {
        graph = load_attributes(BufReader::new(bytes.as_slice()), graph).map_err(context(path))?;
    }
    if let Some(path) = &entry.labels {
        let bytes = read_file(name, &registry.resolve(path))?;
        graph = load_labels(BufReader::new(bytes.as_slice()), graph).map_err(context(path))?;
    }
    Ok(Dataset {
        name: name.to_string(),
        graph,
        hash: sha256_hex(&hash_input),
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn registry(dir: &Path, body: &str) -> Registry {
        let path = dir.join("registry.toml");
        std::fs::write(&path, body).unwrap();
        Registry::load(&path).unwrap()
    }

    #[test]
    fn attributes_fix_node_set() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("g.cites"), "a b\nb c\nc zz\n").unwrap();
        std::fs::write(dir.path().join("g.content"), "a 1 0 x\nb 0 1 y\nc 1 1 x\nd 0 0 y\n").unwrap();
        let reg = registry(
            dir.path(),
            "[datasets.g]\nedges = \"g.cites\"\nattributes = \"g.content\"\n",
        );
        let ds = load_dataset(&reg, "g").unwrap();
        assert_eq!(ds.graph.n_nodes(), 4);
        assert_eq!(ds.graph.degree(3), 0);
        assert_eq!(ds.graph.labels().unwrap(), &[0, 1, 0, 1]);
        assert_eq!(ds.hash.len(), 64);
    }

    #[test]
    fn missing_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let reg = registry(dir.path(), "[datasets.cora]\nedges = \"cora/cora.cites\"\n");
        let err = load_dataset(&reg, "cora").unwrap_err();
        match err {
            Error::MissingDataset { dataset, path } => {
                assert_eq!(dataset, "cora");
                assert!(path.ends_with("cora/cora.cites"));
            }
            other => panic!("{other}"),
        }
        assert!(matches!(load_dataset(&reg, "pubmed"), Err(Error::Config(_))));
    }

    #[test]
    fn checksums() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("e.txt"), "abc").unwrap();
        let good = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";
        let reg = registry(dir.path(), &format!("[datasets.g]\nedges = \"e.txt\"\n[datasets.g.sha256]\n\"e.txt\" = \"{good}\"\n"));
        assert_eq!(verify_dataset(&reg, "g").unwrap()[0].verified, Some(true));
        let reg = registry(dir.path(), "[datasets.g]\nedges = \"e.txt\"\n[datasets.g.sha256]\n\"e.txt\" = \"00\"\n");
        assert!(matches!(verify_dataset(&reg, "g"), Err(Error::Checksum { .. })));
        let reg = registry(dir.path(), "[datasets.g]\nedges = \"e.txt\"\n");
        assert_eq!(verify_dataset(&reg, "g").unwrap()[0].verified, None);
    }

    #[test]
    fn hash_tracks_content() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("e.txt"), "0 1\n1 2\n").unwrap();
        let reg = registry(dir.path(), "[datasets.g]\nedges = \"e.txt\"\n");
        let h1 = load_dataset(&reg, "g").unwrap().hash;
        std::fs::write(dir.path().join("e.txt"), "0 1\n1 2\n2 0\n").unwrap();
        assert_ne!(h1, load_dataset(&reg, "g").unwrap().hash);
        let reg = registry(dir.path(), "[datasets.g]\nedges = \"e.txt\"\ndirected = true\n");
        let h3 = load_dataset(&reg, "g").unwrap().hash;
        let reg = registry(dir.path(), "[datasets.g]\nedges = \"e.txt\"\n");
        assert_ne!(h3, load_dataset(&reg, "g").unwrap().hash);
    }
}
