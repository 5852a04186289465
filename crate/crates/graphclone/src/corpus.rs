//! Directory ingestion into function-level samples and the JSONL manifest.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::SystemTime;

use graphclone_core::split::{first_method_name, line_range, split_methods};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    /// Each file holds exactly one function.
    OnePerFile,
    /// Methods are cut out of each file by the brace heuristic.
    #[default]
    Split,
}

impl SplitMode {
    pub fn name(self) -> &'static str {
        match self {
            SplitMode::OnePerFile => "one-per-file",
            SplitMode::Split => "split",
        }
    }
}

impl FromStr for SplitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one-per-file" => Ok(SplitMode::OnePerFile),
            "split" | "split-methods" => Ok(SplitMode::Split),
            _ => Err(format!(
                "unknown mode `{s}`, expected one-per-file or split"
            )),
        }
    }
}

/// Manifest record: a sample without its text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub id: String,
    pub source_path: String,
    pub function_name: String,
    pub start_line: usize,
    pub end_line: usize,
    pub loc: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSample {
    pub meta: SampleMeta,
    pub text: String,
}

/// A file that contributed no samples, and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub path: String,
    pub reason: String,
}

#[derive(Debug)]
pub enum CorpusError {
    RootMissing(PathBuf),
    NoSamples {
        root: PathBuf,
        skipped: Vec<Skipped>,
    },
    DuplicateId(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    BadManifest {
        line: usize,
        reason: String,
    },
    SpanMismatch {
        id: String,
    },
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::RootMissing(p) => write!(f, "corpus root {} does not exist", p.display()),
            CorpusError::NoSamples { root, skipped } => {
                write!(f, "no samples found under {}", root.display())?;
                for s in skipped {
                    write!(f, "\n  skipped {}: {}", s.path, s.reason)?;
                }
                Ok(())
            }
            CorpusError::DuplicateId(id) => write!(f, "duplicate sample id {id}"),
            CorpusError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CorpusError::BadManifest { line, reason } => {
                write!(f, "manifest line {line}: {reason}")
            }
            CorpusError::SpanMismatch { id } => {
                write!(
                    f,
                    "sample {id}: line span no longer matches its source file"
                )
            }
        }
    }
}

impl std::error::Error for CorpusError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CorpusError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The sample registry: samples sorted by id, with their texts.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub samples: Vec<CodeSample>,
    pub corpus_root: PathBuf,
    pub created_at: SystemTime,
    pub skipped: Vec<Skipped>,
}

impl Corpus {
    /// Builds a registry, rejecting duplicate ids.
    pub fn from_samples(
        root: impl Into<PathBuf>,
        samples: Vec<CodeSample>,
    ) -> Result<Self, CorpusError> {
        let mut by_id = BTreeMap::new();
        for s in samples {
            let id = s.meta.id.clone();
            if by_id.insert(id.clone(), s).is_some() {
                return Err(CorpusError::DuplicateId(id));
            }
        }
        Ok(Corpus {
            samples: by_id.into_values().collect(),
            corpus_root: root.into(),
            created_at: SystemTime::now(),
            skipped: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_loc(&self) -> usize {
        self.samples.iter().map(|s| s.meta.loc).sum()
    }

    pub fn metas(&self) -> impl Iterator<Item = &SampleMeta> {
        self.samples.iter().map(|s| &s.meta)
    }

    /// JSON Lines manifest, one sample per line, sorted by id.
    pub fn manifest_jsonl(&self) -> String {
        manifest_jsonl(self.metas())
    }

    pub fn write_manifest(&self, path: &Path) -> Result<(), CorpusError> {
        fs::write(path, self.manifest_jsonl()).map_err(io_err(path))
    }
}

pub fn manifest_jsonl<'a>(metas: impl IntoIterator<Item = &'a SampleMeta>) -> String {
    let mut out = String::new();
    for m in metas {
        out.push_str(&serde_json::to_string(m).expect("plain struct serializes"));
        out.push('\n');
    }
    out
}

/// Number of lines with non-whitespace content.
pub fn count_loc(text: &str) -> usize {
    text.lines().filter(|l| !l.trim().is_empty()).count()
}

fn matches_ext(path: &Path, ext: &str) -> bool {
    let want = ext.trim_start_matches('.');
    path.extension().and_then(|e| e.to_str()) == Some(want)
}

/// `root`-relative path with `/` separators.
fn relative_id(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

enum FileOutcome {
    Samples(Vec<CodeSample>),
    Skip(Skipped),
}

fn ingest_file(root: &Path, path: &Path, mode: SplitMode) -> FileOutcome {
    let rel = relative_id(root, path);
    let skip = |reason: String| {
        FileOutcome::Skip(Skipped {
            path: rel.clone(),
            reason,
        })
    };
    let text = match fs::read(path) {
        Ok(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
        Err(e) => return skip(format!("unreadable: {e}")),
    };
    let spans = match split_methods(&text) {
        Ok(spans) => spans,
        Err(e) => return skip(e.to_string()),
    };
    let source_path = path.to_string_lossy().into_owned();
    let mut samples = Vec::new();
    match mode {
        SplitMode::OnePerFile => {
            let end = text.lines().count();
            let body = line_range(&text, 1, end);
            let loc = count_loc(body);
            if loc == 0 {
                return skip("empty file".into());
            }
            samples.push(CodeSample {
                meta: SampleMeta {
                    id: format!("{rel}#0"),
                    source_path,
                    function_name: first_method_name(body),
                    start_line: 1,
                    end_line: end,
                    loc,
                },
                text: body.to_string(),
            });
        }
        SplitMode::Split => {
            for (ordinal, span) in spans.into_iter().enumerate() {
                samples.push(CodeSample {
                    meta: SampleMeta {
                        id: format!("{rel}#{ordinal}"),
                        source_path: source_path.clone(),
                        function_name: span.name,
                        start_line: span.start_line,
                        end_line: span.end_line,
                        loc: count_loc(&span.text),
                    },
                    text: span.text,
                });
            }
            if samples.is_empty() {
                return skip("no method found".into());
            }
        }
    }
    FileOutcome::Samples(samples)
}

/// Walks `root` for files ending in `ext` and cuts them into samples.
///
/// Files that cannot be read or whose braces do not balance are skipped and
/// logged; finding no sample at all is an error that lists every skip.
pub fn ingest_directory(root: &Path, mode: SplitMode, ext: &str) -> Result<Corpus, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::RootMissing(root.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: e
                .path()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| root.to_path_buf()),
            source: e.into(),
        })?;
        if entry.file_type().is_file() && matches_ext(entry.path(), ext) {
            files.push(entry.into_path());
        }
    }

    let outcomes: Vec<FileOutcome> = files
        .par_iter()
        .map(|p| ingest_file(root, p, mode))
        .collect();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome {
            FileOutcome::Samples(s) => samples.extend(s),
            FileOutcome::Skip(s) => {
                log::warn!("skipping {}: {}", s.path, s.reason);
                skipped.push(s);
            }
        }
    }
    if samples.is_empty() {
        return Err(CorpusError::NoSamples {
            root: root.to_path_buf(),
            skipped,
        });
    }
    let mut corpus = Corpus::from_samples(root, samples)?;
    corpus.skipped = skipped;
    Ok(corpus)
}

pub fn read_manifest(path: &Path) -> Result<Vec<SampleMeta>, CorpusError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let meta: SampleMeta =
            serde_json::from_str(&line).map_err(|e| CorpusError::BadManifest {
                line: i + 1,
                reason: e.to_string(),
            })?;
        out.push(meta);
    }
    Ok(out)
}

/// Re-reads sample texts from their source files using the line spans.
pub fn load_samples(
    metas: Vec<SampleMeta>,
    root: impl Into<PathBuf>,
) -> Result<Corpus, CorpusError> {
    let mut files: HashMap<String, String> = HashMap::new();
    let mut samples = Vec::with_capacity(metas.len());
    for meta in metas {
        if !files.contains_key(&meta.source_path) {
            let p = PathBuf::from(&meta.source_path);
            let bytes = fs::read(&p).map_err(io_err(&p))?;
            files.insert(
                meta.source_path.clone(),
                String::from_utf8_lossy(&bytes).into_owned(),
            );
        }
        let text =
            line_range(&files[&meta.source_path], meta.start_line, meta.end_line).to_string();
        if count_loc(&text) != meta.loc {
            return Err(CorpusError::SpanMismatch { id: meta.id });
        }
        samples.push(CodeSample { meta, text });
    }
    Corpus::from_samples(root, samples)
}

pub fn load_corpus(manifest: &Path) -> Result<Corpus, CorpusError> {
    let root = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    load_samples(read_manifest(manifest)?, root)
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_file(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_round_trip() {
        for m in [SplitMode::OnePerFile, SplitMode::Split] {
            assert_eq!(m.name().parse::<SplitMode>().unwrap(), m);
        }
        assert!("whole".parse::<SplitMode>().is_err());
    }

    #[test]
    fn loc_ignores_blank_lines() {
        assert_eq!(count_loc("a\n\n  \n b\n"), 2);
        assert_eq!(count_loc(""), 0);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let s = CodeSample {
            meta: SampleMeta {
                id: "x#0".into(),
                source_path: "x".into(),
                function_name: String::new(),
                start_line: 1,
                end_line: 1,
                loc: 1,
            },
            text: "f(){}".into(),
        };
        let err = Corpus::from_samples(".", vec![s.clone(), s]).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(id) if id == "x#0"));
    }

    #[test]
    fn manifest_line_shape() {
        let m = SampleMeta {
            id: "src/Fib.java#0".into(),
            source_path: "/c/src/Fib.java".into(),
            function_name: "fib".into(),
            start_line: 2,
            end_line: 9,
            loc: 8,
        };
        assert_eq!(
            manifest_jsonl([&m]),
            "{\"id\":\"src/Fib.java#0\",\"source_path\":\"/c/src/Fib.java\",\"function_name\":\"fib\",\"start_line\":2,\"end_line\":9,\"loc\":8}\n"
        );
    }
}
