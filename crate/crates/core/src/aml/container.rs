//! MTP container handling: an MTP ships either as a raw AutomationML file
//! or as a zip archive with the .aml somewhere inside.

use std::io::{Cursor, Read};

use super::{AmlDocument, AmlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContainerKind {
    /// Detect zip archives by their magic number.
    #[default]
    Auto,
    Aml,
    Zip,
}

/// A parsed document plus how it was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenedMtp {
    pub document: AmlDocument,
    /// Archive entry the document came from, `None` for raw files.
    pub source_entry: Option<String>,
    pub warnings: Vec<String>,
}

pub fn open_mtp(bytes: &[u8], kind: ContainerKind) -> Result<OpenedMtp, AmlError> {
    let treat_as_zip = match kind {
        ContainerKind::Zip => true,
        ContainerKind::Aml => false,
        ContainerKind::Auto => bytes.starts_with(b"PK\x03\x04") || bytes.starts_with(b"PK\x05\x06"),
    };
    if !treat_as_zip {
        return Ok(OpenedMtp {
            document: AmlDocument::parse(bytes)?,
            source_entry: None,
            warnings: Vec::new(),
        });
    }

    let mut archive = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| AmlError::MalformedXml(format!("not a readable zip archive: {e}")))?;
    let mut candidates: Vec<String> = archive
        .file_names()
        .filter(|name| name.to_ascii_lowercase().ends_with(".aml"))
        .map(str::to_string)
        .collect();
    candidates.sort();
    let Some(chosen) = candidates.first().cloned() else {
        return Err(AmlError::NoAmlEntry);
    };
    let mut warnings = Vec::new();
    if candidates.len() > 1 {
        warnings.push(format!(
            "archive contains {} .aml entries, using {:?} (first in lexicographic order)",
            candidates.len(),
            chosen
        ));
    }
    let mut entry = archive
        .by_name(&chosen)
        .map_err(|e| AmlError::MalformedXml(format!("cannot open zip entry {chosen:?}: {e}")))?;
    let mut content = Vec::new();
    entry
        .read_to_end(&mut content)
        .map_err(|e| AmlError::MalformedXml(format!("cannot read zip entry {chosen:?}: {e}")))?;
    Ok(OpenedMtp {
        document: AmlDocument::parse(&content)?,
        source_entry: Some(chosen),
        warnings,
    })
}
