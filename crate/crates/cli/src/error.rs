use std::fmt;

/// A failure reported as one machine-parsable line: `error[CODE]: message`.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    /// Bad input: configuration, arguments or missing files. Exit status 2.
    pub fn input(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), exit_code: 2 }
    }

    /// Failure while running a valid request. Exit status 1.
    pub fn runtime(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), exit_code: 1 }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::runtime("E_IO", format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.replace(['\n', '\r'], " ");
        write!(f, "error[{}]: {}", self.code, one_line.trim())
    }
}

impl From<acaslab::Error> for CliError {
    fn from(e: acaslab::Error) -> Self {
        use acaslab::Error as E;
        let code = match &e {
            E::Contract(_) => "E_CONTRACT",
            E::StepOutOfRange { .. } => "E_STEP_RANGE",
            E::InvalidBelief(_) => "E_BELIEF",
            E::InvalidNetwork(_) => "E_NETWORK",
            E::DataMismatch(_) => "E_DATA_MISMATCH",
            E::Unfitted(_) => "E_UNFITTED",
            E::PlacementFailed(_) => "E_PLACEMENT",
            E::TerminalState => "E_TERMINAL_STATE",
            E::OffGrid { .. } => "E_OFF_GRID",
            E::InvalidGrid(_) => "E_GRID",
            E::AxisMismatch => "E_AXIS_MISMATCH",
            E::Empty(_) => "E_EMPTY",
            E::NumericOverflow { .. } => "E_NUMERIC",
            E::InsufficientUnequippedNmacs => "E_NO_UNEQUIPPED_NMACS",
            E::DtMismatch { .. } => "E_DT_MISMATCH",
            E::NotLeader { .. } => "E_NOT_LEADER",
            E::EmptyElite { .. } => "E_EMPTY_ELITE",
            E::TableFormat(_) => "E_TABLE_FORMAT",
            E::TraceFormat { .. } => "E_TRACE_FORMAT",
            E::Io(_) => "E_IO",
            E::Json(_) => "E_JSON",
        };
        let input = matches!(
            e,
            E::InvalidNetwork(_)
                | E::DataMismatch(_)
                | E::InvalidGrid(_)
                | E::OffGrid { .. }
                | E::TableFormat(_)
                | E::Json(_)
        );
        let exit_code = if input { 2 } else { 1 };
        Self { code, message: e.to_string(), exit_code }
    }
}
