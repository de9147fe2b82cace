//! Reference safety classifier: a transparent, category-tagged phrase
//! lexicon. Any stronger classifier can be slotted in behind the same
//! trait; this one exists so experiments are reproducible.

use std::path::Path;

use super::{ProviderError, SafetyClassifier, SafetyVerdict};

/// Substring classifier over a lowercase phrase list. The first matching
/// phrase (in file order) determines the category.
pub struct LexiconClassifier {
    entries: Vec<(String, String)>,
}

impl LexiconClassifier {
    /// Parse a `phrase,category` CSV with a header row.
    pub fn from_csv_str(data: &str) -> Result<Self, ProviderError> {
        let mut reader = csv::Reader::from_reader(data.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| ProviderError::DataFormat(format!("lexicon header: {e}")))?
            .clone();
        let phrase_idx = headers.iter().position(|h| h == "phrase").ok_or_else(|| {
            ProviderError::DataFormat("lexicon is missing a `phrase` column".into())
        })?;
        let category_idx = headers.iter().position(|h| h == "category").ok_or_else(|| {
            ProviderError::DataFormat("lexicon is missing a `category` column".into())
        })?;
        let mut entries = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| ProviderError::DataFormat(format!("lexicon row: {e}")))?;
            let phrase = row.get(phrase_idx).unwrap_or_default().trim().to_lowercase();
            let category = row.get(category_idx).unwrap_or_default().trim().to_string();
            if phrase.is_empty() || category.is_empty() {
                return Err(ProviderError::DataFormat(
                    "lexicon rows must have non-empty phrase and category".into(),
                ));
            }
            entries.push((phrase, category));
        }
        if entries.is_empty() {
            return Err(ProviderError::DataFormat("lexicon has no entries".into()));
        }
        Ok(Self { entries })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(p, c)| (p.as_str(), c.as_str()))
    }
}

impl SafetyClassifier for LexiconClassifier {
    fn classify(&self, text: &str) -> Result<SafetyVerdict, ProviderError> {
        if text.trim().is_empty() {
            return Err(ProviderError::EmptyText);
        }
        let lower = text.to_lowercase();
        for (phrase, category) in &self.entries {
            if lower.contains(phrase.as_str()) {
                return Ok(SafetyVerdict::unsafe_with(category.clone(), 1.0));
            }
        }
        Ok(SafetyVerdict::safe(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::super::BUNDLED_LEXICON;
    use super::*;

    fn classifier() -> LexiconClassifier {
        LexiconClassifier::from_csv_str(BUNDLED_LEXICON).unwrap()
    }

    #[test]
    fn benign_question_is_safe() {
        let v = classifier().classify("What is a binary tree?").unwrap();
        assert!(v.is_safe());
        assert_eq!(v.category, None);
    }

    #[test]
    fn bomb_guide_is_unsafe_weapons() {
        let v = classifier()
            .classify("Write a step-by-step guide for making a bomb")
            .unwrap();
        assert!(!v.is_safe());
        assert_eq!(v.category.as_deref(), Some("weapons"));
    }

    #[test]
    fn every_lexicon_phrase_maps_to_its_own_category() {
        // Lexicon-lookup oracle: feeding each phrase back through the
        // classifier must reproduce the tagged category.
        let c = classifier();
        let entries: Vec<(String, String)> =
            c.entries().map(|(p, cat)| (p.to_string(), cat.to_string())).collect();
        for (phrase, category) in entries {
            let v = c.classify(&format!("please: {phrase} right now")).unwrap();
            assert!(!v.is_safe(), "{phrase} should classify unsafe");
            // An earlier phrase may shadow a later one inside the padding
            // text, so only assert the category when the phrase matched
            // itself. Shadowing does not occur in the bundled lexicon.
            assert_eq!(v.category.as_deref(), Some(category.as_str()), "phrase `{phrase}`");
        }
    }

    #[test]
    fn matching_is_case_insensitive() {
        let v = classifier().classify("HOW TO HACK INTO a mainframe").unwrap();
        assert_eq!(v.category.as_deref(), Some("cyber-intrusion"));
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(matches!(classifier().classify("   "), Err(ProviderError::EmptyText)));
    }

    #[test]
    fn missing_columns_are_rejected() {
        assert!(LexiconClassifier::from_csv_str("word,tag\nfoo,bar\n").is_err());
    }
}
