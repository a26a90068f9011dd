//! Guard conditions and the API → condition protection map.

mod condition;
mod extract;
mod guard;
mod map;

pub use condition::{app_assumptions, valid_permission_name, CheckAtom, Condition, ConditionParseError};
pub use extract::{checked_paths, extract_mappings, CheckedPath, ExtractOptions, PathEnumeration};
pub use guard::{recognize_check, Formula, Guard, GuardOutcome};
pub use map::{MapError, Origin, ProtectionEntry, ProtectionMap};
