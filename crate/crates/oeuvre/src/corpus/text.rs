//! Text normalization shared by ingestion and the similarity primitives.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::CorpusError;

/// Lowercases and strips diacritics (NFD decomposition, then removal of
/// combining marks). `"MÜLLER"` becomes `"muller"`.
pub fn normalize(text: &str) -> String {
    text.trim()
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .collect()
}

/// First alphanumeric character of the normalized string, if any. This is
/// what `"Robert"`, `"R."` and `"R"` all reduce to.
pub fn first_initial(name: &str) -> Option<char> {
    normalize(name).chars().find(|c| c.is_alphanumeric())
}

/// Canonical name key: normalized surname, comma, first initial of the
/// first name. All mentions sharing a key form one name block.
pub fn canonicalize(surname: &str, first_name: &str) -> Result<String, CorpusError> {
    let surname_norm = normalize(surname);
    if surname_norm.is_empty() {
        return Err(CorpusError::EmptySurname {
            input: surname.to_string(),
        });
    }
    let initial = first_initial(first_name).map(String::from).unwrap_or_default();
    Ok(format!("{surname_norm}, {initial}"))
}

/// Lowercase, split on any non-alphanumeric character, drop tokens shorter
/// than two characters. No stop-word list; IDF weighting downweights common
/// words downstream.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(String::from)
        .collect()
}
