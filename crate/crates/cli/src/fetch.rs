//! Download and unpack the MNIST and review corpora into the cache layout.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use selfreg::data::{text, Record};
use selfreg::rng::{stream_rng, streams};

use crate::error::{CliError, CliResult};

pub struct Archive {
    pub file_name: &'static str,
    pub url: &'static str,
    pub sha256: &'static str,
}

pub const MNIST_ARCHIVE: Archive = Archive {
    file_name: "mnist-data-1.2.6.tgz",
    url: "https://registry.npmjs.org/mnist-data/-/mnist-data-1.2.6.tgz",
    sha256: "8f87f2d0d9133e6c9f7012d6d26bb05409e7e870a1de21d1a600b8d400cc07ed",
};

pub const REVIEWS_ARCHIVE: Archive = Archive {
    file_name: "imdb-data-1.0.0.tgz",
    url: "https://registry.npmjs.org/imdb-data/-/imdb-data-1.0.0.tgz",
    sha256: "165c6c90367afed6047af02b6777b2d95bd0201e030f68bf468b7a382d69f105",
};

/// (archive member, cache name, sha256 of the uncompressed IDX file)
pub const MNIST_FILES: [(&str, &str, &str); 4] = [
    (
        "package/data/train-images-idx3-ubyte",
        "train-images",
        "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db",
    ),
    (
        "package/data/train-labels-idx1-ubyte",
        "train-labels",
        "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5",
    ),
    (
        "package/data/t10k-images-idx3-ubyte",
        "test-images",
        "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7",
    ),
    (
        "package/data/t10k-labels-idx1-ubyte",
        "test-labels",
        "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2",
    ),
];

const REVIEWS_MEMBER: &str = "package/reviews.json";
/// The corpus ships unsplit; this many shuffled reviews form the test split.
pub const REVIEWS_TEST_SIZE: usize = 25_000;
const REVIEWS_SHUFFLE_SEED: u64 = 20_110_619;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn check_digest(what: &str, bytes: &[u8], expected: &str) -> CliResult<()> {
    let actual = sha256_hex(bytes);
    if actual != expected {
        return Err(CliError::Digest { what: what.to_string(), expected: expected.to_string(), actual });
    }
    Ok(())
}

/// Archive bytes from `archive_dir` when present there, else from the
/// registry; the digest is checked either way.
fn obtain(archive: &Archive, archive_dir: Option<&Path>) -> CliResult<Vec<u8>> {
    let bytes = match archive_dir.map(|d| d.join(archive.file_name)).filter(|p| p.exists()) {
        Some(path) => fs::read(&path).map_err(CliError::file(path))?,
        None => download(archive.url)?,
    };
    check_digest(archive.file_name, &bytes, archive.sha256)?;
    Ok(bytes)
}

fn download(url: &str) -> CliResult<Vec<u8>> {
    let fail = |message: String| CliError::Download { url: url.to_string(), message };
    let mut response = ureq::get(url).call().map_err(|e| fail(e.to_string()))?;
    response.body_mut().with_config().limit(256 << 20).read_to_vec().map_err(|e| fail(e.to_string()))
}

/// Contents of the named members of a gzipped tarball.
fn unpack(bytes: &[u8], members: &[&str]) -> CliResult<Vec<Vec<u8>>> {
    let mut found: Vec<Option<Vec<u8>>> = vec![None; members.len()];
    let mut archive = tar::Archive::new(flate2::read::GzDecoder::new(bytes));
    let bad = |e: std::io::Error| CliError::Runtime(format!("corrupt archive: {e}"));
    for entry in archive.entries().map_err(bad)? {
        let mut entry = entry.map_err(bad)?;
        let path = entry.path().map_err(bad)?.to_string_lossy().into_owned();
        if let Some(i) = members.iter().position(|m| *m == path) {
            let mut buf = Vec::new();
            entry.read_to_end(&mut buf).map_err(bad)?;
            found[i] = Some(buf);
        }
    }
    found
        .into_iter()
        .zip(members)
        .map(|(f, m)| f.ok_or_else(|| CliError::Runtime(format!("archive has no member {m}"))))
        .collect()
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(CliError::file(parent))?;
    }
    fs::write(path, bytes).map_err(CliError::file(path))
}

fn mnist_present(dir: &Path) -> bool {
    MNIST_FILES.iter().all(|(_, name, digest)| {
        fs::read(dir.join(name)).map(|b| sha256_hex(&b) == *digest).unwrap_or(false)
    })
}

pub fn fetch_mnist(data_dir: &Path, archive_dir: Option<&Path>, force: bool) -> CliResult<bool> {
    let dir = data_dir.join("mnist");
    if !force && mnist_present(&dir) {
        return Ok(false);
    }
    let bytes = obtain(&MNIST_ARCHIVE, archive_dir)?;
    let members: Vec<&str> = MNIST_FILES.iter().map(|f| f.0).collect();
    for ((_, name, digest), contents) in MNIST_FILES.iter().zip(unpack(&bytes, &members)?) {
        check_digest(name, &contents, digest)?;
        selfreg::data::parse_idx(&contents)?;
        write(&dir.join(name), &contents)?;
    }
    Ok(true)
}

#[derive(Deserialize)]
struct RawReview {
    #[serde(rename = "t")]
    text: String,
    #[serde(rename = "s")]
    sentiment: u8,
}

/// Strip the HTML line breaks the corpus keeps inside reviews.
pub fn clean_review(text: &str) -> String {
    text.replace("<br />", " ").replace("<br/>", " ")
}

/// Deterministic train/test split of the flat review list.
pub fn split_reviews(mut records: Vec<Record>) -> (Vec<Record>, Vec<Record>) {
    let mut rng = stream_rng(REVIEWS_SHUFFLE_SEED, streams::SUBSET, 1);
    records.shuffle(&mut rng);
    let test = records.split_off(records.len().saturating_sub(REVIEWS_TEST_SIZE));
    (records, test)
}

pub fn reviews_dir(data_dir: &Path) -> PathBuf {
    data_dir.join("imdb")
}

pub fn fetch_reviews(data_dir: &Path, archive_dir: Option<&Path>, force: bool) -> CliResult<bool> {
    let dir = reviews_dir(data_dir);
    if !force && dir.join("train.tsv").exists() && dir.join("test.tsv").exists() {
        return Ok(false);
    }
    let bytes = obtain(&REVIEWS_ARCHIVE, archive_dir)?;
    let json = unpack(&bytes, &[REVIEWS_MEMBER])?.remove(0);
    let raw: Vec<RawReview> =
        serde_json::from_slice(&json).map_err(|e| CliError::Runtime(format!("{REVIEWS_MEMBER}: {e}")))?;
    let records = raw
        .into_iter()
        .map(|r| match r.sentiment {
            0 | 1 => Ok(Record { label: r.sentiment, text: clean_review(&r.text) }),
            s => Err(CliError::Runtime(format!("review label {s} is not 0 or 1"))),
        })
        .collect::<CliResult<Vec<_>>>()?;
    let (train, test) = split_reviews(records);
    write(&dir.join("train.tsv"), text::format_tsv(&train).as_bytes())?;
    write(&dir.join("test.tsv"), text::format_tsv(&test).as_bytes())?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn break_tags_become_spaces() {
        assert_eq!(clean_review("good.<br /><br />bad"), "good.  bad");
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let recs: Vec<Record> =
            (0..30_000).map(|i| Record { label: (i % 2) as u8, text: format!("doc {i}") }).collect();
        let (a, b) = split_reviews(recs.clone());
        let (c, d) = split_reviews(recs);
        assert_eq!((a.len(), b.len()), (5_000, 25_000));
        assert_eq!((&a, &b), (&c, &d));
        let mut all: Vec<&str> = a.iter().chain(&b).map(|r| r.text.as_str()).collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 30_000);
    }

    #[test]
    fn unpack_reads_named_members() {
        let mut builder = tar::Builder::new(flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::fast()));
        let mut header = tar::Header::new_gnu();
        header.set_size(3);
        header.set_mode(0o644);
        header.set_cksum();
        builder.append_data(&mut header, "package/x.bin", &b"abc"[..]).unwrap();
        let bytes = builder.into_inner().unwrap().finish().unwrap();
        assert_eq!(unpack(&bytes, &["package/x.bin"]).unwrap(), vec![b"abc".to_vec()]);
        assert!(unpack(&bytes, &["package/y.bin"]).is_err());
    }

    #[test]
    fn wrong_digest_is_reported() {
        let err = check_digest("f", b"abc", "00").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("ba7816bf"));
    }
}
