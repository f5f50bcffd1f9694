//! Activity labels and the per-session label registry.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Dense class index used by every learner. Assigned in order of first sight.
pub type ClassId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActivityLabel {
    pub id: ClassId,
    pub name: String,
}

/// Maps label names to dense ids. Ids are never reused or reordered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRegistry {
    names: Vec<String>,
}

impl LabelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `name`, registering it on first sight.
    ///
    /// Empty names are not labels; callers treat them as "unlabeled".
    pub fn intern(&mut self, name: &str) -> Option<ClassId> {
        if name.is_empty() {
            return None;
        }
        if let Some(id) = self.id_of(name) {
            return Some(id);
        }
        self.names.push(String::from(name));
        Some(self.names.len() - 1)
    }

    pub fn id_of(&self, name: &str) -> Option<ClassId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn label(&self, id: ClassId) -> Option<ActivityLabel> {
        self.name(id).map(|n| ActivityLabel {
            id,
            name: String::from(n),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_follow_first_sight() {
        let mut reg = LabelRegistry::new();
        assert_eq!(reg.intern("Walking"), Some(0));
        assert_eq!(reg.intern("Running"), Some(1));
        assert_eq!(reg.intern("Walking"), Some(0));
        assert_eq!(reg.intern(""), None);
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.name(1), Some("Running"));
    }
}
