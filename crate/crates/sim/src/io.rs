//! Stack files and dataset manifests.
//!
//! A stack is two files: a TOML header (`<name>.toml`) and a raw payload
//! (`<name>.raw`) of unsigned 16-bit little-endian codes, x fastest, then y,
//! then slice. A dataset directory holds `manifest.toml` plus one header and
//! payload per stack under `stacks/`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stcsf_core::fft::Dims3;
use stcsf_core::stacks::{ImageStack, Label, StackGeometry};

use crate::config::GeneratorSection;
use crate::error::{Result, SimError};

pub const STACK_FORMAT: &str = "stcsf-stack-1";
pub const DATASET_FORMAT: &str = "stcsf-dataset-1";
pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelName {
    Healthy,
    Lesion,
}

impl From<Label> for LabelName {
    fn from(l: Label) -> Self {
        match l {
            Label::Healthy => LabelName::Healthy,
            Label::Lesion => LabelName::Lesion,
        }
    }
}

impl From<LabelName> for Label {
    fn from(l: LabelName) -> Self {
        match l {
            LabelName::Healthy => Label::Healthy,
            LabelName::Lesion => Label::Lesion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StackHeader {
    format: String,
    stack_id: u64,
    label: LabelName,
    width: usize,
    height: usize,
    n_slices: usize,
    bit_depth: u32,
    slice_sep_mm: f64,
    lesion_slices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    payload: String,
}

/// Payload path belonging to a header path.
pub fn payload_path(header: &Path) -> PathBuf {
    header.with_extension("raw")
}

/// Writes `<path>` (header) and its `.raw` payload.
pub fn write_stack(stack: &ImageStack, path: &Path) -> Result<()> {
    stack.validate()?;
    let payload = payload_path(path);
    let payload_name = payload
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| SimError::Input(format!("{}: not a file path", path.display())))?
        .to_owned();
    let dims = stack.dims();
    let header = StackHeader {
        format: STACK_FORMAT.to_owned(),
        stack_id: stack.stack_id,
        label: stack.label.into(),
        width: dims.width,
        height: dims.height,
        n_slices: dims.depth,
        bit_depth: stack.geometry.bit_depth,
        slice_sep_mm: stack.geometry.slice_sep_mm,
        lesion_slices: stack.lesion_slices.clone(),
        source_id: stack.source_id,
        seed: stack.seed,
        payload: payload_name,
    };
    let text = toml::to_string(&header).map_err(|e| SimError::Input(format!("{}: {e}", path.display())))?;
    let bytes: Vec<u8> = stack.data.iter().flat_map(|c| c.to_le_bytes()).collect();
    fs::write(path, text).map_err(|e| SimError::io(path, e))?;
    fs::write(&payload, bytes).map_err(|e| SimError::io(&payload, e))?;
    Ok(())
}

pub fn read_stack(path: &Path) -> Result<ImageStack> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let header: StackHeader = toml::from_str(&text).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start) as u64;
        SimError::format(path, offset, e.message().trim().to_owned())
    })?;
    if header.format != STACK_FORMAT {
        let offset = text.find(&header.format).unwrap_or(0) as u64;
        return Err(SimError::format(path, offset, format!("unsupported format `{}`", header.format)));
    }
    let geometry = StackGeometry {
        dims: Dims3::new(header.width, header.height, header.n_slices),
        bit_depth: header.bit_depth,
        slice_sep_mm: header.slice_sep_mm,
    };
    geometry.validate().map_err(|e| SimError::format(path, 0, e.to_string()))?;

    let payload = path.parent().unwrap_or(Path::new("")).join(&header.payload);
    let bytes = fs::read(&payload).map_err(|e| SimError::io(&payload, e))?;
    let expected = geometry.dims.len() * 2;
    if bytes.len() != expected {
        return Err(SimError::format(
            &payload,
            bytes.len().min(expected) as u64,
            format!("payload is {} bytes, expected {expected} for {:?}", bytes.len(), geometry.dims),
        ));
    }
    let max = geometry.max_code();
    let mut data = Vec::with_capacity(geometry.dims.len());
    for (i, pair) in bytes.chunks_exact(2).enumerate() {
        let code = u16::from_le_bytes([pair[0], pair[1]]);
        if code > max {
            return Err(SimError::format(
                &payload,
                2 * i as u64,
                format!("code {code} exceeds the {}-bit range", geometry.bit_depth),
            ));
        }
        data.push(code);
    }
    let stack = ImageStack {
        stack_id: header.stack_id,
        label: header.label.into(),
        geometry,
        data,
        lesion_slices: header.lesion_slices,
        source_id: header.source_id,
        seed: header.seed,
    };
    stack.validate().map_err(|e| SimError::format(path, 0, e.to_string()))?;
    Ok(stack)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: u64,
    pub label: LabelName,
    /// Header path relative to the manifest.
    pub header: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    /// `[healthy_id, lesion_id]`.
    pub pairs: Vec<[u64; 2]>,
    pub generator: GeneratorSection,
    pub stacks: Vec<ManifestEntry>,
}

/// Writes every stack and the manifest into `dir`.
pub fn write_dataset(dir: &Path, stacks: &[ImageStack], generator: &GeneratorSection) -> Result<Manifest> {
    let stack_dir = dir.join("stacks");
    fs::create_dir_all(&stack_dir).map_err(|e| SimError::io(&stack_dir, e))?;
    let mut entries = Vec::with_capacity(stacks.len());
    for s in stacks {
        let name = format!("stacks/stack_{:06}.toml", s.stack_id);
        write_stack(s, &dir.join(&name))?;
        entries.push(ManifestEntry { id: s.stack_id, label: s.label.into(), header: name });
    }
    let pairs = stcsf_core::trial::pairs_from_stacks(stacks)?.into_iter().map(|(h, l)| [h, l]).collect();
    let manifest = Manifest { format: DATASET_FORMAT.to_owned(), pairs, generator: generator.clone(), stacks: entries };
    let path = dir.join(MANIFEST_NAME);
    let text = toml::to_string(&manifest).map_err(|e| SimError::Input(format!("{}: {e}", path.display())))?;
    fs::write(&path, text).map_err(|e| SimError::io(&path, e))?;
    Ok(manifest)
}

/// Reads a dataset from its directory (or its manifest path) and checks
/// that the manifest agrees with the stack headers.
pub fn read_dataset(path: &Path) -> Result<(Manifest, Vec<ImageStack>)> {
    let manifest_path = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
    let dir = manifest_path.parent().unwrap_or(Path::new("")).to_path_buf();
    let text = fs::read_to_string(&manifest_path).map_err(|e| SimError::io(&manifest_path, e))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start) as u64;
        SimError::format(&manifest_path, offset, e.message().trim().to_owned())
    })?;
    if manifest.format != DATASET_FORMAT {
        return Err(SimError::format(&manifest_path, 0, format!("unsupported format `{}`", manifest.format)));
    }
    let mut stacks = Vec::with_capacity(manifest.stacks.len());
    for entry in &manifest.stacks {
        let s = read_stack(&dir.join(&entry.header))?;
        if s.stack_id != entry.id || LabelName::from(s.label) != entry.label {
            return Err(SimError::Input(format!(
                "{}: header of {} disagrees with the manifest entry",
                manifest_path.display(),
                entry.header
            )));
        }
        stacks.push(s);
    }
    let derived: Vec<[u64; 2]> =
        stcsf_core::trial::pairs_from_stacks(&stacks)?.into_iter().map(|(h, l)| [h, l]).collect();
    let mut listed = manifest.pairs.clone();
    listed.sort_unstable();
    if derived != listed {
        return Err(SimError::Input(format!(
            "{}: pair list does not match the stacks' healthy sources",
            manifest_path.display()
        )));
    }
    Ok((manifest, stacks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ImageStack {
        let geometry = StackGeometry { dims: Dims3::new(5, 4, 3), bit_depth: 10, slice_sep_mm: 0.2 };
        ImageStack {
            stack_id: 7,
            label: Label::Lesion,
            geometry,
            data: (0..60u16).map(|i| i * 17).collect(),
            lesion_slices: vec![1],
            source_id: Some(6),
            seed: Some(u64::MAX - 3),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        let s = sample();
        write_stack(&s, &path).unwrap();
        assert_eq!(read_stack(&path).unwrap(), s);
        assert_eq!(fs::read(payload_path(&path)).unwrap().len(), 120);
    }

    #[test]
    fn truncated_payload_names_both_lengths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        write_stack(&sample(), &path).unwrap();
        let raw = payload_path(&path);
        let mut bytes = fs::read(&raw).unwrap();
        bytes.pop();
        fs::write(&raw, bytes).unwrap();
        match read_stack(&path).unwrap_err() {
            SimError::Format { offset, message, .. } => {
                assert_eq!(offset, 119);
                assert!(message.contains("119") && message.contains("120"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn out_of_range_code_is_located() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        write_stack(&sample(), &path).unwrap();
        let raw = payload_path(&path);
        let mut bytes = fs::read(&raw).unwrap();
        bytes[10..12].copy_from_slice(&1024u16.to_le_bytes());
        fs::write(&raw, bytes).unwrap();
        match read_stack(&path).unwrap_err() {
            SimError::Format { offset, .. } => assert_eq!(offset, 10),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_header_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        write_stack(&sample(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace("width = 5", "width = \"five\"");
        fs::write(&path, &text).unwrap();
        match read_stack(&path).unwrap_err() {
            SimError::Format { offset, .. } => assert_eq!(offset as usize, text.find("\"five\"").unwrap()),
            e => panic!("unexpected {e}"),
        }
    }
}
