use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PNG: {0}")]
    Png(String),
    #[error("unsupported PNG bit depth {0} (only 8-bit images are supported)")]
    UnsupportedBitDepth(u8),
    #[error("image has {0} channels; PNG output needs 1 or 3")]
    UnsupportedChannels(usize),
    #[error("weight file does not start with the TBW1 magic")]
    BadMagic,
    #[error("unsupported weight file version {0}")]
    UnsupportedVersion(u32),
    #[error("weight file is truncated")]
    Truncated,
    #[error("weight file shape table is inconsistent with its payload: {0}")]
    ShapePayloadMismatch(String),
    #[error("weight file checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] tinybeauty_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}
