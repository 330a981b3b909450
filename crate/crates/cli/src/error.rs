use fullpack::KernelId;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("bad config: {0}")]
    Config(String),

    #[error("verification failed for {kernel} at {rows}x{cols}")]
    Verification { kernel: KernelId, rows: usize, cols: usize },

    #[error(transparent)]
    Kernel(#[from] fullpack::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit status: 2 for a kernel that disagrees with its reference,
    /// 3 for unusable configuration, 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Verification { .. } => 2,
            HarnessError::Config(_) => 3,
            HarnessError::Kernel(_) | HarnessError::Io(_) => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
