use std::fmt;

/// A non-fatal finding about the corpus, reported on stderr.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub code: &'static str,
    pub text: String,
}

impl Diagnostic {
    pub fn new(code: &'static str, text: impl Into<String>) -> Self {
        Diagnostic { code, text: text.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}
