use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("cell ({row}, {col}) outside raster extent {n_rows}x{n_cols}")]
    CellOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("negative value {value} at position {index}")]
    NegativeValue { index: usize, value: i64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("node has no children")]
    UniformNode,

    #[error("window does not intersect the raster extent")]
    EmptyWindow,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid value range [{lo}, {hi}]")]
    InvalidRange { lo: i64, hi: i64 },

    #[error("invalid rectangle: {0}")]
    InvalidRect(String),

    #[error("duplicate object id {id} (line {line})")]
    DuplicateId { id: u64, line: usize },

    #[error("parse error at line {line}{}: {msg}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: usize,
        column: Option<usize>,
        msg: String,
    },

    #[error("malformed index file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            msg: msg.into(),
        }
    }
}
