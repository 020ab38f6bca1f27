//! Versioned text format for trained networks.
//!
//! ```text
//! simest-model 1
//! seed <u64>
//! input_cols <usize>
//! output_dim <usize>
//! trained_sample_range <min> <max> | none
//! hyperparams <json>
//! metadata <json>
//! layers <count>
//! layer <name> <len>
//! <len values, space separated, 17 significant digits>
//! ...
//! sha256 <hex digest of every preceding byte>
//! ```
//!
//! Weight blocks follow the canonical parameter order of the network.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::{build_network, HyperParams, NetworkModel};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "simest-model";

fn blocks(model: &NetworkModel) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    for (b, br) in model.branches().iter().enumerate() {
        for (i, l) in br.coordinate_layers().iter().enumerate() {
            let mut v = Vec::new();
            l.push_params(&mut v);
            out.push((format!("branch{b}.pre{i}"), v));
        }
        for (i, c) in br.collapses().iter().enumerate() {
            let mut v = Vec::new();
            c.push_params(&mut v);
            out.push((format!("branch{b}.collapse{i}.{}", c.kind().name()), v));
        }
        for (i, l) in br.post_layers().iter().enumerate() {
            let mut v = Vec::new();
            l.push_params(&mut v);
            out.push((format!("branch{b}.post{i}"), v));
        }
    }
    for (i, l) in model.head().iter().enumerate() {
        let mut v = Vec::new();
        l.push_params(&mut v);
        out.push((format!("head{i}"), v));
    }
    out
}

/// Serialise `model` to the text format.
pub fn model_to_string(model: &NetworkModel) -> String {
    let mut s = String::new();
    let hp = serde_json::to_string(model.hyperparams()).expect("hyperparams serialise");
    let meta = serde_json::to_string(model.metadata()).expect("metadata serialise");
    let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(s, "seed {}", model.seed());
    let _ = writeln!(s, "input_cols {}", model.input_cols());
    let _ = writeln!(s, "output_dim {}", model.output_dim());
    match model.trained_sample_range() {
        Some((lo, hi)) => {
            let _ = writeln!(s, "trained_sample_range {lo} {hi}");
        }
        None => s.push_str("trained_sample_range none\n"),
    }
    let _ = writeln!(s, "hyperparams {hp}");
    let _ = writeln!(s, "metadata {meta}");
    let blocks = blocks(model);
    let _ = writeln!(s, "layers {}", blocks.len());
    for (name, values) in &blocks {
        let _ = writeln!(s, "layer {name} {}", values.len());
        let line: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    let digest = hex::encode(Sha256::digest(s.as_bytes()));
    let _ = writeln!(s, "sha256 {digest}");
    s
}

pub fn save_model(model: &NetworkModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NetworkModel> {
    let text = std::fs::read_to_string(path)?;
    model_from_str(&text)
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

struct Lines<'a> {
    inner: std::str::Lines<'a>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.line += 1;
        self.inner
            .next()
            .ok_or_else(|| fmt_err(format!("unexpected end of file at line {}", self.line)))
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        l.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| fmt_err(format!("line {}: expected `{key}`", self.line)))
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.line + 1;
        self.field(key)?
            .parse()
            .map_err(|_| fmt_err(format!("line {line}: bad value for `{key}`")))
    }
}

pub fn model_from_str(text: &str) -> Result<NetworkModel> {
    // checksum covers everything before the final line
    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|i| i + 1)
        .ok_or_else(|| fmt_err("file too short"))?;
    let (body, tail) = text.split_at(body_end);
    let stated = tail
        .trim_end()
        .strip_prefix("sha256 ")
        .ok_or_else(|| fmt_err("missing sha256 trailer"))?;

    let mut lines = Lines { inner: body.lines(), line: 0 };
    let head = lines.next()?;
    let version = head
        .strip_prefix(MAGIC)
        .and_then(|r| r.trim().parse::<u32>().ok())
        .ok_or_else(|| fmt_err("not a model file"))?;
    if version != FORMAT_VERSION {
        return Err(fmt_err(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let actual = hex::encode(Sha256::digest(body.as_bytes()));
    if actual != stated {
        return Err(fmt_err("checksum mismatch"));
    }

    let seed: u64 = lines.parsed("seed")?;
    let input_cols: usize = lines.parsed("input_cols")?;
    let output_dim: usize = lines.parsed("output_dim")?;
    let range = match lines.field("trained_sample_range")? {
        "none" => None,
        r => {
            let parts: Vec<usize> = r
                .split(' ')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| fmt_err("bad trained_sample_range"))?;
            match parts[..] {
                [lo, hi] => Some((lo, hi)),
                _ => return Err(fmt_err("bad trained_sample_range")),
            }
        }
    };
    let hp: HyperParams = serde_json::from_str(lines.field("hyperparams")?)
        .map_err(|e| fmt_err(format!("hyperparams: {e}")))?;
    let metadata: BTreeMap<String, String> = serde_json::from_str(lines.field("metadata")?)
        .map_err(|e| fmt_err(format!("metadata: {e}")))?;

    let mut model = build_network(&hp, input_cols, output_dim, seed)?;
    let expected = blocks(&model);
    let n_blocks: usize = lines.parsed("layers")?;
    if n_blocks != expected.len() {
        return Err(fmt_err(format!(
            "file lists {n_blocks} layers, hyperparameters imply {}",
            expected.len()
        )));
    }
    let mut params = Vec::with_capacity(model.param_count());
    for (name, values) in &expected {
        let header = lines.field("layer")?;
        let want = format!("{name} {}", values.len());
        if header != want {
            return Err(fmt_err(format!("layer header `{header}`, expected `{want}`")));
        }
        let row = lines.next()?;
        let start = params.len();
        for tok in row.split(' ').filter(|t| !t.is_empty()) {
            params.push(
                tok.parse::<f64>()
                    .map_err(|_| fmt_err(format!("layer {name}: bad number `{tok}`")))?,
            );
        }
        let got = params.len() - start;
        if got != values.len() {
            return Err(fmt_err(format!(
                "layer {name}: {got} values, expected {}",
                values.len()
            )));
        }
    }
    if lines.inner.next().is_some() {
        return Err(fmt_err("trailing content after last layer"));
    }
    model.set_params(&params)?;
    model.set_trained_sample_range(range);
    *model.metadata_mut() = metadata;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tensor::Tensor3;
    use rand::Rng;

    fn sample_model() -> NetworkModel {
        let mut m = build_network(&HyperParams::regression(), 6, 4, 17).unwrap();
        m.set_trained_sample_range(Some((30, 200)));
        m.metadata_mut().insert("note".into(), "a b\tc \"q\"".into());
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample_model();
        let text = model_to_string(&m);
        let back = model_from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(model_to_string(&back), text);

        let mut r = rng::stream(1, 0);
        let batch = Tensor3::new(3, 11, 6, (0..3 * 11 * 6).map(|_| r.random_range(-3.0..3.0)).collect()).unwrap();
        let a = m.estimate(&batch).unwrap();
        let b = back.estimate(&batch).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        let m = sample_model();
        save_model(&m, &p).unwrap();
        let first = std::fs::read(&p).unwrap();
        let back = load_model(&p).unwrap();
        save_model(&back, &p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), first);
        assert!(load_model(dir.path().join("missing")).is_err());
    }

    fn resign(body: &str) -> String {
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        format!("{body}sha256 {digest}\n")
    }

    fn body_of(text: &str) -> &str {
        let end = text.trim_end_matches('\n').rfind('\n').unwrap() + 1;
        &text[..end]
    }

    #[test]
    fn truncated_weights_are_rejected() {
        let text = model_to_string(&sample_model());
        let body = body_of(&text);
        // drop the last value of the final weight row
        let trimmed = body.trim_end_matches('\n');
        let cut = trimmed.rfind(' ').unwrap();
        let bad = resign(&format!("{}\n", &trimmed[..cut]));
        let err = model_from_str(&bad).unwrap_err();
        assert!(matches!(err, Error::Format(ref m) if m.contains("values")), "{err}");
    }

    #[test]
    fn version_and_checksum_errors() {
        let text = model_to_string(&sample_model());
        let bumped = resign(&body_of(&text).replacen("simest-model 1", "simest-model 2", 1));
        let err = model_from_str(&bumped).unwrap_err();
        assert!(matches!(err, Error::Format(ref m) if m.contains("version")), "{err}");

        let tampered = text.replacen("seed 17", "seed 18", 1);
        let err = model_from_str(&tampered).unwrap_err();
        assert!(matches!(err, Error::Format(ref m) if m.contains("checksum")), "{err}");

        assert!(model_from_str("").is_err());
        assert!(model_from_str("garbage\nsha256 00\n").is_err());
    }

    #[test]
    fn untrained_range_round_trips() {
        let m = build_network(&HyperParams::minimal(), 1, 1, 3).unwrap();
        let back = model_from_str(&model_to_string(&m)).unwrap();
        assert_eq!(back.trained_sample_range(), None);
        assert_eq!(back, m);
    }
}
