#![allow(dead_code)]

use std::path::PathBuf;

pub struct CorpusItem {
    pub name: String,
    pub source: String,
    pub expected: String,
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every `.mc` file of the corpus with its expected output, sorted by name.
pub fn corpus() -> Vec<CorpusItem> {
    let dir = corpus_dir();
    let mut items: Vec<CorpusItem> = std::fs::read_dir(&dir)
        .expect("corpus directory")
        .filter_map(|e| {
            let path = e.ok()?.path();
            if path.extension()? != "mc" {
                return None;
            }
            let name = path.file_stem()?.to_str()?.to_string();
            let expected = std::fs::read_to_string(dir.join(format!("{name}.expected"))).ok()?;
            Some(CorpusItem { source: std::fs::read_to_string(&path).ok()?, name, expected })
        })
        .collect();
    items.sort_by(|a, b| a.name.cmp(&b.name));
    assert!(items.len() >= 11, "corpus looks incomplete");
    items
}

pub fn item(name: &str) -> CorpusItem {
    corpus().into_iter().find(|i| i.name == name).unwrap_or_else(|| panic!("no corpus item {name}"))
}
