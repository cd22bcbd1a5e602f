use super::{ForwardSde, GeneratorSpec, TerminalSpec};
use crate::error::{Error, Result};

/// Generator, terminal condition and (optionally) a Markovian forward state.
/// Without a forward SDE the state is the Brownian motion itself.
#[derive(Debug, Clone)]
pub struct BsdeProblem {
    pub label: String,
    pub generator: GeneratorSpec,
    pub terminal: TerminalSpec,
    pub dim: usize,
    pub forward: Option<ForwardSde>,
    /// Free-form metadata (e.g. continuity-modulus notes that have no
    /// executable check).
    pub notes: Vec<String>,
}

impl BsdeProblem {
    pub fn new(generator: GeneratorSpec, terminal: TerminalSpec, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension d must be >= 1"));
        }
        if terminal.component() >= dim {
            return Err(Error::invalid(format!(
                "terminal reads component {} but d = {dim}",
                terminal.component()
            )));
        }
        Ok(Self {
            label: format!("{} | {}", generator.label(), terminal.label()),
            generator,
            terminal,
            dim,
            forward: None,
            notes: Vec::new(),
        })
    }

    pub fn with_forward(mut self, forward: ForwardSde) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::invalid("forward SDEs are scalar; the problem must have d = 1"));
        }
        self.forward = Some(forward);
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Width of the state vector handed to generator and terminal.
    pub fn state_dim(&self) -> usize {
        if self.forward.is_some() {
            1
        } else {
            self.dim
        }
    }
}
